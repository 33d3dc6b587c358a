use crate::error::{Error, Result};

/// Segment end frames `t_1 < t_2 < ... < t_S = T` (1-based, `t_0 = 0` implicit).
/// Segment `s` covers frames `[t_{s-1} + 1, t_s]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segmentation {
    bounds: Vec<usize>,
}

impl Segmentation {
    pub fn new(bounds: Vec<usize>, frames: usize) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidSegmentation("no segments".into()));
        }
        let mut prev = 0;
        for &t in &bounds {
            if t <= prev {
                return Err(Error::InvalidSegmentation(format!(
                    "boundaries {bounds:?} are not strictly increasing from 0"
                )));
            }
            prev = t;
        }
        if prev != frames {
            return Err(Error::InvalidSegmentation(format!(
                "last boundary {prev} does not equal the sequence length {frames}"
            )));
        }
        Ok(Segmentation { bounds })
    }

    /// One segment covering everything.
    pub fn trivial(frames: usize) -> Result<Self> {
        Self::new(vec![frames], frames)
    }

    pub fn from_lengths(lengths: &[usize]) -> Result<Self> {
        let mut bounds = Vec::with_capacity(lengths.len());
        let mut t = 0;
        for &l in lengths {
            t += l;
            bounds.push(t);
        }
        Self::new(bounds, t)
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn frames(&self) -> usize {
        *self.bounds.last().expect("segmentation is non-empty")
    }

    /// `(lo, hi)` 1-based inclusive windows.
    pub fn windows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let starts = std::iter::once(0).chain(self.bounds.iter().copied());
        starts.zip(self.bounds.iter().copied()).map(|(prev, t)| (prev + 1, t))
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.windows().map(|(lo, hi)| hi + 1 - lo)
    }

    pub fn max_len(&self) -> usize {
        self.lengths().max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_monotone_and_short_tilings() {
        assert!(Segmentation::new(vec![2, 2, 4], 4).is_err());
        assert!(Segmentation::new(vec![0, 4], 4).is_err());
        assert!(Segmentation::new(vec![1, 3], 4).is_err());
        assert!(Segmentation::new(vec![], 0).is_err());
    }

    #[test]
    fn windows_tile_the_sequence() {
        let s = Segmentation::new(vec![2, 3, 7], 7).unwrap();
        assert_eq!(s.windows().collect::<Vec<_>>(), vec![(1, 2), (3, 3), (4, 7)]);
        assert_eq!(s.lengths().collect::<Vec<_>>(), vec![2, 1, 4]);
    }

    proptest! {
        #[test]
        fn every_frame_in_exactly_one_segment(lengths in prop::collection::vec(1usize..6, 1..10)) {
            let s = Segmentation::from_lengths(&lengths).unwrap();
            let mut owner = vec![0usize; s.frames() + 1];
            for (lo, hi) in s.windows() {
                owner[lo..=hi].iter_mut().for_each(|c| *c += 1);
            }
            prop_assert!(owner[1..].iter().all(|&c| c == 1));
        }
    }
}
