//! Segment length models: none, static (per-label Laplace-shaped table) and
//! neural (framewise end-of-segment predictor over the blank alignment).

mod neural;
mod omega;
mod static_model;

pub use neural::{neural_segment_log_prob, LengthInputs, LengthState};
pub use omega::BlankAlignment;
pub use static_model::StaticLengthTable;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthModelKind {
    None,
    Static,
    Neural,
}

impl std::fmt::Display for LengthModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LengthModelKind::None => "none",
            LengthModelKind::Static => "static",
            LengthModelKind::Neural => "neural",
        })
    }
}
