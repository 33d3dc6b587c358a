use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::LengthModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Simple,
    Segmental,
    Oracle,
}

impl std::fmt::Display for SearchMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SearchMode::Simple => "simple",
            SearchMode::Segmental => "segmental",
            SearchMode::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub mode: SearchMode,
    pub beam_size: usize,
    /// Scale of every length-model term.
    pub alpha: f64,
    /// 1 divides the log score by the label count, 0 leaves it alone.
    pub gamma: u8,
    pub delta_max: usize,
    pub length_model: LengthModelKind,
    /// Merge segment-ended hypotheses with equal label history (segmental search only).
    pub recombination: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::Segmental,
            beam_size: 8,
            alpha: 1.0,
            gamma: 0,
            delta_max: 20,
            length_model: LengthModelKind::Neural,
            recombination: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        if self.delta_max == 0 {
            return Err(Error::Config("delta_max must be at least 1".into()));
        }
        if self.gamma > 1 {
            return Err(Error::Config(format!("gamma must be 0 or 1, got {}", self.gamma)));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::Config(format!("alpha must be finite and non-negative, got {}", self.alpha)));
        }
        if self.mode == SearchMode::Simple && self.length_model != LengthModelKind::Neural {
            return Err(Error::Config(format!(
                "simple search needs framewise scores from the neural length model, not '{}'",
                self.length_model
            )));
        }
        Ok(())
    }

    /// A beam wide enough to never prune.
    pub fn saturating(mut self) -> Self {
        self.beam_size = usize::MAX;
        self
    }
}
