//! Experiment driver: duplicate-pair training, beta sweeps, loss-landscape
//! sampling, the ensemble baseline and result emission.

pub mod config;
pub mod emit;
pub mod ensemble;
pub mod landscape;
pub mod stats;
pub mod sweep;
pub mod train;

pub use config::{
    ExperimentConfig, LandscapeConfig, LandscapeLoss, LandscapeRegime, NondetConfig, OutputFormat,
    PdMode, SeedPolicy,
};
pub use ensemble::{ensemble_baseline, EnsembleReport};
pub use landscape::{count_strict_minima, landscape, LandscapeSample};
pub use sweep::{beta_sweep, SweepReport, SweepRow};
pub use train::{train_pair, PairResult, RunSeeds};
