//! Declarative experiments: load a config, build the instance, run every
//! sweep point, and write `result.json`, `table.csv`, and `plot.svg`.
//!
//! | kind | input | powers | swept |
//! |---|---|---|---|
//! | `E1_exact` | eigenvector | exact | `t`, `n`, `eps` |
//! | `E2_residual` | perturbed eigenvector | exact | also `residual` |
//! | `E3_trotter` | eigenvector | Trotter product | also `steps` |
//! | `E4_qdrift` | eigenvector | QDRIFT prefixes | also `steps` |

pub mod config;
pub mod instance;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{load_config, load_config_file, ExperimentConfig, ExperimentKind};
pub use instance::{build_instance, perturb_to_residual, random_instance, Instance, Perturbed};
pub use output::{result_json, table_csv, write_outputs, OutputFiles};
pub use run::{run_experiment, ExperimentResult, ResultRow};
