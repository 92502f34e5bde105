//! File formats and configuration.

pub mod capture_dir;
pub mod config;
pub mod grid_file;
pub mod heatmap;
pub mod iq;

pub use capture_dir::{read_capture_dir, write_capture_dir};
pub use config::{parse_scenario, parse_scenario_str, ScenarioConfig};
pub use grid_file::{read_grid, write_detections, write_grid, GridFormat};
pub use heatmap::{render_heatmap, Graymap};
pub use iq::{read_iq, write_iq};
