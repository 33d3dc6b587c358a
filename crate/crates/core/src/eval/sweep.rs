use crate::data::Utterance;
use crate::error::{Error, Result};
use crate::length::LengthModelKind;
use crate::model::SegmentalModel;
use crate::search::SearchConfig;

use super::decode::{decode_corpus, wer_row, DecodeSummary, WER_COLUMNS};
use super::report::Table;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<(f64, DecodeSummary)>,
    /// Index of the lowest WER; the first one on ties.
    pub best: usize,
}

impl SweepReport {
    pub fn best_alpha(&self) -> f64 {
        self.rows[self.best].0
    }

    pub fn wers(&self) -> Vec<f64> {
        self.rows.iter().map(|(_, s)| s.errors.wer()).collect()
    }

    pub fn to_table(&self, name: &str) -> Table {
        let mut t = Table::new(name, &WER_COLUMNS);
        for (a, s) in &self.rows {
            t.push(wer_row(&format!("alpha={a}"), s));
        }
        t
    }
}

/// One decode pass over `utts` per length model scale.
pub fn sweep(
    model: &SegmentalModel,
    utts: &[Utterance],
    base: SearchConfig,
    alphas: &[f64],
    silence: Option<usize>,
    jobs: usize,
) -> Result<SweepReport> {
    if base.length_model == LengthModelKind::None {
        return Err(Error::Config("a length model scale sweep needs a length model".into()));
    }
    if alphas.is_empty() {
        return Err(Error::Config("empty alpha list".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let cfg = SearchConfig { alpha, ..base };
        let decoded = decode_corpus(model, utts, cfg, silence, jobs)?;
        rows.push((alpha, DecodeSummary::of(&decoded)));
    }
    let best = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.errors.wer().total_cmp(&b.1 .1.errors.wer()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("non-empty");
    Ok(SweepReport { rows, best })
}
