use std::sync::Arc;

use dgeo::backend::SerialBackend;
use dgeo::geodesy::{Axis, CandidateGrid, GeodeticCoord, GridBounds};
use dgeo::geoloc::geometry::predict_pair_offsets;
use dgeo::geoloc::{correlate_all_pairs, correlate_point, correlate_snapshot, geolocate, DetectionParams, GeolocationOptions};
use dgeo::scene::{
    simulate_snapshot, CaptureTiming, CircularOrbit, EmitterDef, GridSpec, NoiseModel, ReceiverDef, Scenario, Trajectory,
};
use dgeo::waveform::{ChirpSpec, SawtoothSpec, SpooferSpec, ToneSpec, WaveformSpec};

const CLAT: f64 = 32.0;
const CLON: f64 = 44.0;
const SPACING: f64 = 0.02;

fn receivers() -> Vec<ReceiverDef> {
    let a = CircularOrbit::passing_over(CLAT - 8.91, CLON - 0.64, 550e3, 46.99, 0.0, true).unwrap();
    let b = CircularOrbit::passing_over(CLAT + 3.58, CLON - 0.12, 550e3, 131.34, 75.71, false).unwrap();
    vec![
        ReceiverDef { name: "a".into(), trajectory: Trajectory::Circular(a) },
        ReceiverDef { name: "b".into(), trajectory: Trajectory::Circular(b) },
    ]
}

fn node(r: i64, c: i64) -> GeodeticCoord {
    GeodeticCoord::new(CLAT + r as f64 * SPACING, CLON + c as f64 * SPACING, 0.0).unwrap()
}

fn scenario(waveform: WaveformSpec, at: GeodeticCoord, snapshots: usize, noise: bool, half_cells: usize) -> Scenario {
    Scenario {
        receivers: receivers(),
        emitters: vec![EmitterDef {
            name: "e".into(),
            location: at,
            waveform,
            ref_snr_db: 0.0,
            ref_range_m: 6e5,
        }],
        timing: CaptureTiming {
            sample_rate_hz: 2.048e6,
            duration_s: 2e-3,
            center_freq_hz: 1575.42e6,
            snapshot_count: snapshots,
            snapshot_spacing_s: 1.0,
            first_epoch_s: 110.11,
        },
        noise: NoiseModel { seed: 11, power: 1.0, enabled: noise },
        grid: GridSpec::new(GridBounds::centered(CLAT, CLON, half_cells, SPACING), SPACING),
        detection: DetectionParams::default(),
    }
}

fn spoofer() -> WaveformSpec {
    WaveformSpec::Spoofer(SpooferSpec { prn: 7, data_seed: 2, extra_prns: vec![] })
}

#[test]
fn one_point_grid_equals_correlate_point() {
    let at = node(2, -3);
    let sc = scenario(spoofer(), at, 1, true, 5);
    let snap = simulate_snapshot(&sc, 0).unwrap();
    let p = node(1, -2);
    let grid = Arc::new(
        CandidateGrid::from_axes(
            Axis { start: p.lat_deg, step: SPACING, count: 1 },
            Axis { start: p.lon_deg, step: SPACING, count: 1 },
            0.0,
        )
        .unwrap(),
    );
    let g = correlate_snapshot(&grid, &snap, (0, 1), &SerialBackend, &GeolocationOptions::default()).unwrap();
    let (a, b) = (&snap.receivers[0], &snap.receivers[1]);
    let off = predict_pair_offsets(
        &grid.points()[0],
        &a.state,
        &b.state,
        sc.timing.sample_rate_hz,
        sc.constants().wavelength_m(),
    )
    .unwrap();
    let direct = correlate_point(&a.capture, &b.capture, &off).unwrap();
    assert!(direct > 0.0);
    assert!((g.values[0] - direct).abs() <= 1e-12 * direct);
}

#[test]
fn noise_free_spoofer_peaks_at_true_cell() {
    let truth = (7i64, -4i64);
    let sc = scenario(spoofer(), node(truth.0, truth.1), 3, false, 12);
    let grid = Arc::new(sc.grid.build().unwrap());
    let snaps: Vec<_> = (0..3).map(|i| simulate_snapshot(&sc, i).unwrap()).collect();
    let r = geolocate(&grid, &snaps, &SerialBackend, &GeolocationOptions::default()).unwrap();
    let (pr, pc) = grid.cell(r.accumulated.argmax());
    assert_eq!((pr as i64 - 12, pc as i64 - 12), truth);
    assert!(!r.detections.is_empty());
    assert_eq!((r.detections[0].lat_idx, r.detections[0].lon_idx), (pr, pc));
}

/// Noise-free, the score at the emitter reaches the Cauchy-Schwarz bound
/// taken over the samples the predicted TDOA leaves overlapping. Waveforms
/// with delay structure also put the grid maximum there; a tone does not,
/// since cells with a shorter TDOA simply overlap more samples.
#[test]
fn true_location_attains_likelihood_bound_for_every_waveform() {
    let waveforms = [
        spoofer(),
        WaveformSpec::Tone(ToneSpec { offset_hz: 1500.0 }),
        WaveformSpec::Chirp(ChirpSpec { bandwidth_hz: 2e6, period_s: 20e-6 }),
        WaveformSpec::Sawtooth(SawtoothSpec { bandwidth_hz: 200e3, chirp_period_s: 0.3e-3 }),
    ];
    for w in waveforms {
        let at = node(-3, 5);
        let sc = scenario(w.clone(), at, 1, false, 8);
        let grid = Arc::new(sc.grid.build().unwrap());
        let snap = simulate_snapshot(&sc, 0).unwrap();
        let g = correlate_all_pairs(&grid, &snap, &SerialBackend, &GeolocationOptions::default()).unwrap();
        let (y1, y2) = (&snap.receivers[0].capture.samples, &snap.receivers[1].capture.samples);
        let cell = grid.index(grid.nearest_cell(&at).0, grid.nearest_cell(&at).1);
        let off = predict_pair_offsets(
            &grid.points()[cell],
            &snap.receivers[0].state,
            &snap.receivers[1].state,
            sc.timing.sample_rate_hz,
            sc.constants().wavelength_m(),
        )
        .unwrap();
        let n = y1.len() as i64;
        let ks = (-off.tdoa_samples).max(0)..(n - off.tdoa_samples).min(n);
        let e1: f64 = ks.clone().map(|k| y1[k as usize].norm_sqr()).sum();
        let e2: f64 = ks.map(|k| y2[(k + off.tdoa_samples) as usize].norm_sqr()).sum();
        let bound = (e1 * e2).sqrt();
        let at_truth = g.values[cell];
        assert!(at_truth <= bound * (1.0 + 1e-9), "{}: exceeds the bound", w.name());
        assert!(at_truth >= 0.98 * bound, "{}: truth reaches {:.4} of the bound", w.name(), at_truth / bound);
        if !matches!(w, WaveformSpec::Tone(_)) {
            assert!(at_truth >= 0.999 * g.max(), "{}: truth {:.4} of grid max", w.name(), at_truth / g.max());
        }
    }
}

/// A tone has no delay structure, so under truncated correlation its score
/// along the iso-FDOA ridge grows with the overlap length. When the emitter
/// node is also the ridge's shortest-TDOA cell the argmax lands on it.
#[test]
fn tone_argmax_is_the_node_when_it_minimises_tdoa() {
    let probe = scenario(WaveformSpec::Tone(ToneSpec { offset_hz: 0.0 }), node(0, 0), 1, false, 8);
    let grid = Arc::new(probe.grid.build().unwrap());
    let states = probe.receiver_states(probe.snapshot_epoch(0)).unwrap();
    let lambda = probe.constants().wavelength_m();
    let tdoa = |i: usize| {
        predict_pair_offsets(&grid.points()[i], &states[0], &states[1], probe.timing.sample_rate_hz, lambda)
            .unwrap()
            .tdoa_samples
    };
    // node with the shortest |TDOA|, usually on the grid edge
    let best = grid.cell((0..grid.len()).min_by_key(|&i| tdoa(i).abs()).unwrap());
    let at = grid.geodetic(grid.index(best.0, best.1));
    let sc = scenario(WaveformSpec::Tone(ToneSpec { offset_hz: 0.0 }), at, 1, false, 8);
    let snap = simulate_snapshot(&sc, 0).unwrap();
    let g = correlate_all_pairs(&grid, &snap, &SerialBackend, &GeolocationOptions::default()).unwrap();
    assert_eq!(grid.cell(g.argmax()), best);
}
