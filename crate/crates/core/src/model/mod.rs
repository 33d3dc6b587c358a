//! Encoder and attention label model, global or segmental.

mod checkpoint;
mod config;
mod decoder;
mod encoder;
mod net;
mod segmentation;


pub use config::{ModelConfig, SilenceVariant, WindowMode};
pub use decoder::{DecoderState, Query, SeqScore, Step};
pub use encoder::EncoderOutput;
pub use net::{EncoderLayerIds, LengthIds, LstmIds, ParamIds, SegmentalModel};
pub use segmentation::Segmentation;
