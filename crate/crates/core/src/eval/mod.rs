//! Scoring: edit distance with S/D/I breakdown, corpus decoding, score
//! comparison dumps, and length model scale sweeps.

mod decode;
mod edit;
mod report;
mod scores;
mod sweep;

#[cfg(test)]
mod tests;

pub use decode::{decode_corpus, decode_utterance, hypotheses_table, wer_row, DecodeSummary, Decoded, WER_COLUMNS};
pub use edit::{align, counts_of, edit_distance, word_errors, AlignOp, ErrorCounts};
pub use report::{cell, Table};
pub use scores::{score_table, ScoreRow, ScoreTable};
pub use sweep::{sweep, SweepReport};
