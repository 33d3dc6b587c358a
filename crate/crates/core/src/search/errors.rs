use serde::{Deserialize, Serialize};

use super::score::Hypothesis;

/// Slack for comparing scores that were summed in different orders.
const TOLERANCE: f64 = 1e-9;

/// The ground truth scores strictly better than what the decoder returned.
pub fn is_search_error(truth: &Hypothesis, recognized: &Hypothesis) -> bool {
    truth.decision > recognized.decision + TOLERANCE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchErrorReport {
    pub sequences: usize,
    pub errors: usize,
}

impl SearchErrorReport {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a Hypothesis, &'a Hypothesis)>) -> Self {
        let mut r = SearchErrorReport { sequences: 0, errors: 0 };
        for (truth, rec) in pairs {
            r.sequences += 1;
            r.errors += usize::from(is_search_error(truth, rec));
        }
        r
    }

    pub fn fraction(&self) -> f64 {
        if self.sequences == 0 {
            0.0
        } else {
            self.errors as f64 / self.sequences as f64
        }
    }
}
