use crate::error::{Error, Result};
use crate::model::Segmentation;

/// Framewise alignment: the segment label at each boundary frame, blank elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlankAlignment {
    symbols: Vec<Option<usize>>,
}

impl BlankAlignment {
    pub fn encode(labels: &[usize], seg: &Segmentation) -> Result<Self> {
        if labels.len() != seg.len() {
            return Err(Error::InvalidSegmentation(format!("{} labels for {} segments", labels.len(), seg.len())));
        }
        let mut symbols = vec![None; seg.frames()];
        for (&a, &t) in labels.iter().zip(seg.bounds()) {
            symbols[t - 1] = Some(a);
        }
        Ok(BlankAlignment { symbols })
    }

    pub fn decode(&self) -> Result<(Vec<usize>, Segmentation)> {
        let (bounds, labels): (Vec<usize>, Vec<usize>) =
            self.symbols.iter().enumerate().filter_map(|(i, s)| s.map(|a| (i + 1, a))).unzip();
        let seg = Segmentation::new(bounds, self.symbols.len())?;
        Ok((labels, seg))
    }

    /// `ω_t` for `t = 1..=T`.
    pub fn symbols(&self) -> &[Option<usize>] {
        &self.symbols
    }

    pub fn frames(&self) -> usize {
        self.symbols.len()
    }

    /// Input ids `ω_0 .. ω_{T-1}` for the length LSTM, with `ω_0` = `bos`.
    pub fn input_ids(&self, blank: usize, bos: usize) -> Vec<usize> {
        std::iter::once(bos).chain(self.symbols[..self.symbols.len() - 1].iter().map(|s| s.unwrap_or(blank))).collect()
    }

    /// Binary end-of-segment targets per frame.
    pub fn end_targets(&self) -> Vec<f64> {
        self.symbols.iter().map(|s| if s.is_some() { 1.0 } else { 0.0 }).collect()
    }
}
