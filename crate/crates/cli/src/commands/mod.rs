pub mod answer;
pub mod dataset;
pub mod eval;
pub mod icl;
pub mod report;
pub mod summarize;
pub mod window;

use crate::config::FileConfig;

/// Shared state threaded into every subcommand.
pub struct Context {
    pub file_config: FileConfig,
    pub global_seed: Option<u64>,
}
