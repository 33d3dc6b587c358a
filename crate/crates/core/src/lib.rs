pub mod data;
pub mod error;
pub mod eval;
pub mod grad;
pub mod length;
pub mod model;
pub mod rng;
pub mod search;
pub mod tensor;
pub mod train;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use model::{ModelConfig, SegmentalModel, Segmentation};
pub use tensor::{ParamId, ParamStore, Parameter, Tensor};
