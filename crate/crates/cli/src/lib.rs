//! Command-line front end: marker screening, power grids, simulation and
//! timing runs on top of `maxcon-core`.

pub mod app;
pub mod contrasts;
pub mod input;
pub mod manifest;
pub mod screen;
pub mod tables;

pub use app::{main_with_args, Cli, EXIT_BUDGET, EXIT_INPUT, EXIT_OK};
