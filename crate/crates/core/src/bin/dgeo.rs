use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dgeo::backend::{backend_by_name, ParallelBackend, SerialBackend};
use dgeo::bench::{
    compare_backends, load_report, save_report, scan_batch_sizes, BatchScanReport, SpeedupReport, Workload,
    DEFAULT_COARSE_SIZES, DEFAULT_FINE_WINDOW,
};
use dgeo::geodesy::GridBounds;
use dgeo::geoloc::{geolocate_with, CorrelationGrid};
use dgeo::io::grid_file::write_detections;
use dgeo::io::heatmap::{psd_image, spectrogram_image};
use dgeo::io::{parse_scenario, read_capture_dir, read_iq, render_heatmap, write_capture_dir, write_grid, GridFormat, ScenarioConfig};
use dgeo::scene::{simulate_scenario, simulate_snapshot, Scenario};
use dgeo::waveform::spectral::{compute_spectrogram, estimate_psd};
use dgeo::{Error, Result};

#[derive(Parser)]
#[command(name = "dgeo", version, about = "Direct geolocation of GNSS interference from paired receiver captures")]
struct Cli {
    /// Detection threshold in standard deviations above the grid mean.
    #[arg(long, global = true)]
    k_sigma: Option<f64>,
    /// Overrides the noise seed (simulate) or candidate seed (bench).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel backend; 0 uses every core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every snapshot of a scenario into a capture directory.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Correlate a capture directory over the scenario grid and detect emitters.
    Geolocate(GeolocateArgs),
    /// Timing studies of the correlation backends.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Render spectra of a DGIQ capture as 16-bit graymaps.
    Plot {
        #[command(subcommand)]
        command: PlotCommand,
    },
}

#[derive(Args)]
struct GeolocateArgs {
    config: PathBuf,
    capture_dir: PathBuf,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
    /// Grid file formats to write.
    #[arg(long, value_enum, default_value_t = GridOutput::Both)]
    grid_format: GridOutput,
    /// Skip per-snapshot grid files and heatmaps.
    #[arg(long)]
    accumulated_only: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GridOutput {
    Csv,
    Binary,
    Both,
}

impl GridOutput {
    fn formats(self) -> &'static [GridFormat] {
        match self {
            GridOutput::Csv => &[GridFormat::Csv],
            GridOutput::Binary => &[GridFormat::Binary],
            GridOutput::Both => &[GridFormat::Csv, GridFormat::Binary],
        }
    }
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Coarse then fine batch-size scan on one backend.
    Scan {
        config: PathBuf,
        #[arg(long)]
        backend: Option<String>,
        /// JSON report path; a text rendering is written next to it.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serial versus parallel timing with an output equivalence check.
    Compare {
        config: PathBuf,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-render a saved report without rerunning it.
    Show { report: PathBuf },
}

#[derive(Subcommand)]
enum PlotCommand {
    /// Welch PSD drawn as a filled curve; a CSV of the estimate is written too.
    Psd {
        iq: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1024)]
        segment_len: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
    },
    /// Spectrogram in dB, time left to right.
    Spectrogram {
        iq: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 256)]
        window_len: usize,
        #[arg(long, default_value_t = 128)]
        hop: usize,
    },
}

struct Overrides {
    k_sigma: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
}

fn load(config: &Path, ov: &Overrides) -> Result<(ScenarioConfig, Scenario)> {
    let (mut cfg, sc) = parse_scenario(config)?;
    if ov.k_sigma.is_none() && ov.seed.is_none() && ov.workers.is_none() {
        return Ok((cfg, sc));
    }
    if let Some(k) = ov.k_sigma {
        cfg.detection.k_sigma = k;
    }
    if let Some(s) = ov.seed {
        cfg.noise.seed = s;
        cfg.bench.seed = s;
    }
    if let Some(w) = ov.workers {
        cfg.compute.workers = w;
    }
    let sc = cfg.to_scenario()?;
    Ok((cfg, sc))
}

fn simulate(config: &Path, out: &Path, ov: &Overrides) -> Result<()> {
    let (_, sc) = load(config, ov)?;
    let snapshots = simulate_scenario(&sc)?;
    let manifest = write_capture_dir(out, &snapshots)?;
    println!(
        "wrote {} snapshots x {} receivers ({} samples each) to {}",
        manifest.snapshots.len(),
        sc.receivers.len(),
        sc.samples_per_capture(),
        out.display()
    );
    Ok(())
}

fn write_grid_set(grid: &CorrelationGrid, dir: &Path, stem: &str, formats: &[GridFormat]) -> Result<()> {
    for f in formats {
        write_grid(grid, dir.join(format!("{stem}.{}", f.extension())), *f)?;
    }
    render_heatmap(grid, dir.join(format!("{stem}.pgm")))
}

fn geolocate(a: &GeolocateArgs, ov: &Overrides) -> Result<()> {
    let (cfg, sc) = load(&a.config, ov)?;
    let mut opts = cfg.geolocation_options();
    if let Some(b) = a.batch_size {
        opts.batch_size = b;
    }
    let name = a.backend.clone().unwrap_or_else(|| cfg.compute.backend.clone());
    let backend = backend_by_name(&name, cfg.compute.workers)?;
    let snapshots = read_capture_dir(&a.capture_dir)?;
    let grid = Arc::new(sc.grid.build()?);
    std::fs::create_dir_all(&a.output)?;
    let formats = a.grid_format.formats();
    eprintln!(
        "correlating {} snapshots over {} candidates on {}",
        snapshots.len(),
        grid.len(),
        backend.descriptor()
    );
    let result = geolocate_with(&grid, &snapshots, backend.as_ref(), &opts, |snap, g| {
        if a.accumulated_only {
            return Ok(());
        }
        write_grid_set(g, &a.output, &format!("snap{:04}", snap.index), formats)
    })?;
    write_grid_set(&result.accumulated, &a.output, "accumulated", formats)?;
    write_detections(&result.detections, a.output.join("detections.csv"))?;
    println!("{} detections (k_sigma {})", result.detections.len(), opts.detection.k_sigma);
    for (i, d) in result.detections.iter().enumerate() {
        println!(
            "  {}: lat {:.5} lon {:.5} score {:.6e} ({:.2} sigma)",
            i + 1,
            d.location.lat_deg,
            d.location.lon_deg,
            d.score,
            d.score_zsigma
        );
    }
    Ok(())
}

fn bench_workload(cfg: &ScenarioConfig, sc: &Scenario, candidates: usize) -> Result<Workload> {
    let snapshot = simulate_snapshot(sc, 0)?;
    let len = (cfg.bench.capture_samples > 0).then_some(cfg.bench.capture_samples);
    let b: &GridBounds = &sc.grid.bounds;
    Workload::from_snapshot(&snapshot, len, b, sc.grid.altitude_m, candidates, cfg.bench.seed)
}

fn emit_report<T: serde::Serialize>(report: &T, text: &str, output: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = output {
        save_report(report, path)?;
        std::fs::write(path.with_extension("txt"), text)?;
    }
    Ok(())
}

fn bench(cmd: &BenchCommand, ov: &Overrides) -> Result<()> {
    match cmd {
        BenchCommand::Scan {
            config,
            backend,
            output,
        } => {
            let (cfg, sc) = load(config, ov)?;
            let name = backend.clone().unwrap_or_else(|| cfg.compute.backend.clone());
            let backend = backend_by_name(&name, cfg.compute.workers)?;
            let w = bench_workload(&cfg, &sc, cfg.bench.scan_candidates)?;
            let report = scan_batch_sizes(
                backend.as_ref(),
                &w,
                &DEFAULT_COARSE_SIZES,
                DEFAULT_FINE_WINDOW,
                cfg.bench.repetitions,
                cfg.compute.memory_budget_bytes,
            )?;
            emit_report(&report, &report.render(), output.as_deref())
        }
        BenchCommand::Compare {
            config,
            batch_size,
            output,
        } => {
            let (cfg, sc) = load(config, ov)?;
            let max = cfg.bench.compare_candidates.iter().copied().max().unwrap_or(0);
            let w = bench_workload(&cfg, &sc, max)?;
            let parallel = ParallelBackend::new(cfg.compute.workers)?;
            let report = compare_backends(
                &SerialBackend,
                &parallel,
                &w,
                &cfg.bench.compare_candidates,
                batch_size.unwrap_or(cfg.compute.batch_size),
                cfg.bench.repetitions,
            )?;
            emit_report(&report, &report.render(), output.as_deref())?;
            if !report.valid {
                return Err(Error::Backend {
                    backend: report.parallel_backend.name,
                    message: "output differs from the serial reference beyond 1e-4".into(),
                });
            }
            Ok(())
        }
        BenchCommand::Show { report } => {
            let text = if let Ok(r) = load_report::<SpeedupReport>(report) {
                r.render()
            } else {
                load_report::<BatchScanReport>(report)?.render()
            };
            print!("{text}");
            Ok(())
        }
    }
}

fn plot(cmd: &PlotCommand) -> Result<()> {
    match cmd {
        PlotCommand::Psd {
            iq,
            output,
            segment_len,
            height,
        } => {
            let cap = read_iq(iq)?;
            let psd = estimate_psd(&cap, (*segment_len).min(cap.len()))?;
            psd_image(&psd, *height)?.write(output)?;
            let mut csv = String::from("freq_hz,density_per_hz\n");
            for (f, d) in psd.freqs_hz.iter().zip(&psd.density) {
                csv.push_str(&format!("{f:.16e},{d:.16e}\n"));
            }
            std::fs::write(output.with_extension("csv"), csv)?;
            println!("peak at {:.1} Hz; wrote {}", psd.peak_frequency_hz(), output.display());
            Ok(())
        }
        PlotCommand::Spectrogram {
            iq,
            output,
            window_len,
            hop,
        } => {
            let cap = read_iq(iq)?;
            let s = compute_spectrogram(&cap, (*window_len).min(cap.len()), *hop)?;
            spectrogram_image(&s)?.write(output)?;
            println!(
                "{} frames x {} bins; wrote {}",
                s.columns.len(),
                s.freqs_hz.len(),
                output.display()
            );
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        // keeps the simulator's rayon pool in line with --workers
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let ov = Overrides {
        k_sigma: cli.k_sigma,
        seed: cli.seed,
        workers: cli.workers,
    };
    match &cli.command {
        Command::Simulate { config, output } => simulate(config, output, &ov),
        Command::Geolocate(a) => geolocate(a, &ov),
        Command::Bench { command } => bench(command, &ov),
        Command::Plot { command } => plot(command),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgeo: error: {e}");
            ExitCode::FAILURE
        }
    }
}
