//! Behavior-tree generation, validation, execution and benchmarking.

pub mod bench;
pub mod bt;
pub mod dataset;
pub mod envsim;
pub mod executor;
pub mod generator;
pub mod manifest;
pub mod recovery;
pub mod textmetrics;
pub mod validator;
pub mod yaml;
