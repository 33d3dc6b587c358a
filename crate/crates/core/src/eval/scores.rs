use crate::search::Hypothesis;

use super::edit::{align, AlignOp};
use super::report::{cell, Table};

/// One aligned row of a score comparison. A side is `None` where the
/// alignment deletes (recognized) or inserts (truth) a label.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub op: AlignOp,
    pub truth: Option<(usize, f64, f64)>,
    pub recognized: Option<(usize, f64, f64)>,
}

/// Per-label model scores of the ground truth next to the recognized
/// sequence, aligned by the edit-distance backtrace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
    pub truth_labels: usize,
    pub recognized_labels: usize,
    pub truth_label_sum: f64,
    pub recognized_label_sum: f64,
    pub truth_length_sum: f64,
    pub recognized_length_sum: f64,
}

fn per_label(h: &Hypothesis, i: usize) -> (usize, f64, f64) {
    (h.labels[i], h.label_scores[i], h.length_scores[i])
}

pub fn score_table(truth: &Hypothesis, recognized: &Hypothesis) -> ScoreTable {
    let rows = align(&truth.labels, &recognized.labels)
        .into_iter()
        .map(|op| {
            let (t, r) = match op {
                AlignOp::Match(i, j) | AlignOp::Substitution(i, j) => (Some(i), Some(j)),
                AlignOp::Deletion(i) => (Some(i), None),
                AlignOp::Insertion(j) => (None, Some(j)),
            };
            ScoreRow { op, truth: t.map(|i| per_label(truth, i)), recognized: r.map(|j| per_label(recognized, j)) }
        })
        .collect();
    ScoreTable {
        rows,
        truth_labels: truth.labels.len(),
        recognized_labels: recognized.labels.len(),
        truth_label_sum: truth.label_scores.iter().sum(),
        recognized_label_sum: recognized.label_scores.iter().sum(),
        truth_length_sum: truth.length_scores.iter().sum(),
        recognized_length_sum: recognized.length_scores.iter().sum(),
    }
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl ScoreTable {
    /// `Σ / S` of the truth label scores.
    pub fn truth_label_mean(&self) -> f64 {
        mean(self.truth_label_sum, self.truth_labels)
    }

    pub fn recognized_label_mean(&self) -> f64 {
        mean(self.recognized_label_sum, self.recognized_labels)
    }

    /// Renders the rows followed by `sum` and `sum/S` rows. Length columns
    /// are included when `with_length` is set.
    pub fn to_table(&self, name: &str, with_length: bool) -> Table {
        let mut cols = vec!["op", "truth", "recognized", "truth_label", "recog_label"];
        if with_length {
            cols.extend(["truth_length", "recog_length"]);
        }
        let mut t = Table::new(name, &cols);
        let label = |x: Option<(usize, f64, f64)>| x.map_or("-".to_string(), |(a, _, _)| a.to_string());
        let score = |x: Option<(usize, f64, f64)>, pick: fn(&(usize, f64, f64)) -> f64| {
            x.as_ref().map_or("(deleted)".to_string(), |v| cell(pick(v), 2))
        };
        for r in &self.rows {
            let op = match r.op {
                AlignOp::Match(..) => "ok",
                AlignOp::Substitution(..) => "sub",
                AlignOp::Deletion(_) => "del",
                AlignOp::Insertion(_) => "ins",
            };
            let mut row = vec![
                op.to_string(),
                label(r.truth),
                label(r.recognized),
                score(r.truth, |v| v.1),
                score(r.recognized, |v| v.1),
            ];
            if with_length {
                row.extend([score(r.truth, |v| v.2), score(r.recognized, |v| v.2)]);
            }
            t.push(row);
        }
        let dash = || "-".to_string();
        let mut sum =
            vec!["sum".into(), dash(), dash(), cell(self.truth_label_sum, 2), cell(self.recognized_label_sum, 2)];
        let mut avg = vec![
            "sum/S".into(),
            dash(),
            dash(),
            cell(self.truth_label_mean(), 2),
            cell(self.recognized_label_mean(), 2),
        ];
        if with_length {
            sum.extend([cell(self.truth_length_sum, 2), cell(self.recognized_length_sum, 2)]);
            avg.extend([
                cell(mean(self.truth_length_sum, self.truth_labels), 2),
                cell(mean(self.recognized_length_sum, self.recognized_labels), 2),
            ]);
        }
        t.push(sum);
        t.push(avg);
        t
    }
}
