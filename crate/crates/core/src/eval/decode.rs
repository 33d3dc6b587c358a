use crate::data::Utterance;
use crate::error::Result;
use crate::model::SegmentalModel;
use crate::search::{self, is_search_error, Hypothesis, SearchConfig, SearchErrorReport};

use super::edit::{word_errors, ErrorCounts};
use super::report::{cell, Table};

/// Decoding result for one utterance, with the ground truth scored under the
/// same decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub id: String,
    pub recognized: Hypothesis,
    pub truth: Hypothesis,
    /// Silence-stripped errors against the reference labels.
    pub errors: ErrorCounts,
}

impl Decoded {
    pub fn search_error(&self) -> bool {
        is_search_error(&self.truth, &self.recognized)
    }
}

pub fn decode_utterance(
    model: &SegmentalModel,
    utt: &Utterance,
    cfg: SearchConfig,
    silence: Option<usize>,
) -> Result<Decoded> {
    let enc = model.encode(&utt.features)?;
    let recognized = search::decode(model, &enc, cfg)?;
    let truth = search::score_sequence(model, &enc, &utt.labels, &utt.segmentation, cfg)?;
    let errors = word_errors(&utt.labels, &recognized.labels, silence);
    Ok(Decoded { id: utt.id().to_string(), recognized, truth, errors })
}

/// Decodes every utterance, `jobs` at a time. Results are in input order and
/// independent of `jobs`.
pub fn decode_corpus(
    model: &SegmentalModel,
    utts: &[Utterance],
    cfg: SearchConfig,
    silence: Option<usize>,
    jobs: usize,
) -> Result<Vec<Decoded>> {
    let jobs = jobs.clamp(1, utts.len().max(1));
    if jobs == 1 {
        return utts.iter().map(|u| decode_utterance(model, u, cfg, silence)).collect();
    }
    let mut slots: Vec<Option<Result<Decoded>>> = (0..utts.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                s.spawn(move || {
                    (w..utts.len())
                        .step_by(jobs)
                        .map(|i| (i, decode_utterance(model, &utts[i], cfg, silence)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("decode worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every index decoded")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeSummary {
    pub errors: ErrorCounts,
    pub search: SearchErrorReport,
}

impl DecodeSummary {
    pub fn of(decoded: &[Decoded]) -> Self {
        DecodeSummary {
            errors: decoded.iter().map(|d| d.errors).sum(),
            search: SearchErrorReport::from_pairs(decoded.iter().map(|d| (&d.truth, &d.recognized))),
        }
    }
}

fn join(xs: &[usize]) -> String {
    if xs.is_empty() {
        "-".into()
    } else {
        xs.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    }
}

/// One row per utterance: recognized labels and boundaries, scores, errors.
pub fn hypotheses_table(decoded: &[Decoded]) -> Table {
    let mut t = Table::new(
        "hypotheses",
        &["id", "labels", "boundaries", "score", "truth_score", "search_error", "sub", "del", "ins", "ref_len"],
    );
    for d in decoded {
        t.push(vec![
            d.id.clone(),
            join(&d.recognized.labels),
            join(&d.recognized.boundaries),
            format!("{}", d.recognized.decision),
            format!("{}", d.truth.decision),
            u8::from(d.search_error()).to_string(),
            d.errors.substitutions.to_string(),
            d.errors.deletions.to_string(),
            d.errors.insertions.to_string(),
            d.errors.ref_len.to_string(),
        ]);
    }
    t
}

/// Header of every WER table: one row per condition.
pub const WER_COLUMNS: [&str; 7] = ["condition", "sub", "del", "ins", "wer", "search_errors", "sequences"];

pub fn wer_row(condition: &str, s: &DecodeSummary) -> Vec<String> {
    let pct = |x: f64| cell(100.0 * x, 2);
    vec![
        condition.to_string(),
        pct(s.errors.sub_rate()),
        pct(s.errors.del_rate()),
        pct(s.errors.ins_rate()),
        pct(s.errors.wer()),
        pct(s.search.fraction()),
        s.search.sequences.to_string(),
    ]
}
