//! Synthetic corpus with ground-truth alignments, silence variants,
//! concatenation for long-sequence tests, and the on-disk format.

mod concat;
mod corpus;
mod features;
mod generate;
pub mod io;
mod silence;


pub use concat::concat_sequences;
pub use corpus::{Corpus, Split, Utterance};
pub use features::FeatureSequence;
pub use generate::{generate, CorpusSpec, Generator};
pub use silence::apply_silence_variant;
