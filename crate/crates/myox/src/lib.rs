//! IO, file formats, dataset generation and orchestration around the
//! `myox-core` algorithms: CSV manifests and feature tables, PNG ROI
//! loading, the binary model store, the synthetic phantom generator, the
//! cross-validation pipeline, and report rendering. The `myox` binary
//! exposes all of it as subcommands.

pub mod cli;
pub mod feature_table;
pub mod manifest;
pub mod model_store;
pub mod phantom;
pub mod pipeline;
pub mod pngio;
pub mod report;
