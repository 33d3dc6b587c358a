use crate::error::{Error, Result};
use crate::model::{Segmentation, SilenceVariant};

use super::corpus::Utterance;

/// Rewrites a base-form utterance (silence spans labelled `silence`) for a silence variant.
pub fn apply_silence_variant(
    utt: &Utterance,
    variant: SilenceVariant,
    delta_max: usize,
    silence: usize,
) -> Result<Utterance> {
    let spans: Vec<(usize, usize)> = utt.labels.iter().copied().zip(utt.segmentation.lengths()).collect();
    let out: Vec<(usize, usize)> = match variant {
        SilenceVariant::NoSplit => return Ok(utt.clone()),
        SilenceVariant::Split => {
            if delta_max == 0 {
                return Err(Error::Config("delta_max must be at least 1".into()));
            }
            let mut out = Vec::new();
            for (a, len) in spans {
                if a == silence {
                    let mut rest = len;
                    while rest > 0 {
                        let piece = rest.min(delta_max);
                        out.push((a, piece));
                        rest -= piece;
                    }
                } else {
                    out.push((a, len));
                }
            }
            out
        }
        SilenceVariant::None => {
            if spans.iter().all(|&(a, _)| a == silence) {
                return Err(Error::AllSilence(utt.id().to_string()));
            }
            // Silence goes into the following label's segment; trailing silence into the last one.
            let mut out: Vec<(usize, usize)> = Vec::new();
            let mut pending = 0;
            for (a, len) in spans {
                if a == silence {
                    pending += len;
                } else {
                    out.push((a, len + pending));
                    pending = 0;
                }
            }
            out.last_mut().expect("at least one label").1 += pending;
            out
        }
    };
    let lengths: Vec<usize> = out.iter().map(|x| x.1).collect();
    Utterance::new(utt.features.clone(), out.iter().map(|x| x.0).collect(), Segmentation::from_lengths(&lengths)?)
}
