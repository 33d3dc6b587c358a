//! Decision rule and decoders: segmental search, simple search, exhaustive
//! oracle, and label-synchronous search for global attention models.

mod config;
mod errors;
mod expand;
mod global;
mod history;
mod oracle;
mod score;
mod segmental;
mod simple;

#[cfg(test)]
mod tests;

pub use config::{SearchConfig, SearchMode};
pub use errors::{is_search_error, SearchErrorReport};
pub use global::global_search;
pub use oracle::{check_oracle_size, enumerate_alignments, oracle_search, MAX_DELTA, MAX_FRAMES, MAX_VOCAB};
pub use score::{normalize, segment_term, Hypothesis, SearchContext};
pub use segmental::segmental_search;
pub use simple::simple_search;

use crate::error::Result;
use crate::model::{EncoderOutput, SegmentalModel, Segmentation, WindowMode};

/// Decodes one sequence with the decoder selected by `cfg.mode` (global
/// attention models always use label-synchronous search).
pub fn decode(model: &SegmentalModel, enc: &EncoderOutput, cfg: SearchConfig) -> Result<Hypothesis> {
    let cx = SearchContext::new(model, enc, cfg)?;
    match (model.config.window_mode, cfg.mode) {
        (WindowMode::Global, _) => global_search(&cx),
        (WindowMode::Segmental, SearchMode::Segmental) => segmental_search(&cx),
        (WindowMode::Segmental, SearchMode::Simple) => simple_search(&cx),
        (WindowMode::Segmental, SearchMode::Oracle) => oracle_search(&cx),
    }
}

/// Decision score of a given alignment.
pub fn score_sequence(
    model: &SegmentalModel,
    enc: &EncoderOutput,
    labels: &[usize],
    seg: &Segmentation,
    cfg: SearchConfig,
) -> Result<Hypothesis> {
    SearchContext::new(model, enc, cfg)?.score_sequence(labels, seg)
}
