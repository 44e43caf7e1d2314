//! Surrogate-model validation of machine learning pipelines.

pub mod bench;
pub mod bundled;
pub mod characteristic;
pub mod clock;
pub mod dataset;
pub mod knowledge;
pub mod limits;
pub mod optimizer;
pub mod pipeline;
pub mod pool;
mod serde_duration;
pub mod surrogate;
pub mod synthetic;
pub mod tmethod;
