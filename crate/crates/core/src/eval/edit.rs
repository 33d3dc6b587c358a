use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

/// Substitution, deletion and insertion counts against a reference.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl ErrorCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `(S + D + I) / N`; 0 for an empty reference without errors.
    pub fn wer(&self) -> f64 {
        match (self.ref_len, self.errors()) {
            (0, 0) => 0.0,
            (0, _) => f64::INFINITY,
            (n, e) => e as f64 / n as f64,
        }
    }

    fn rate(&self, x: usize) -> f64 {
        if self.ref_len == 0 {
            0.0
        } else {
            x as f64 / self.ref_len as f64
        }
    }

    pub fn sub_rate(&self) -> f64 {
        self.rate(self.substitutions)
    }

    pub fn del_rate(&self) -> f64 {
        self.rate(self.deletions)
    }

    pub fn ins_rate(&self) -> f64 {
        self.rate(self.insertions)
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: Self) {
        self.substitutions += o.substitutions;
        self.deletions += o.deletions;
        self.insertions += o.insertions;
        self.ref_len += o.ref_len;
    }
}

impl std::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ErrorCounts::default(), |mut a, b| {
            a += b;
            a
        })
    }
}

/// One step of an alignment, with 0-based positions into reference and hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match(usize, usize),
    Substitution(usize, usize),
    Deletion(usize),
    Insertion(usize),
}

/// Minimal unit-cost alignment. Among minimal alignments the one with the
/// fewest deletions + insertions (most substitutions) is chosen; remaining
/// ties are broken by backtracing diagonal, then up (deletion), then left.
pub fn align<T: PartialEq>(reference: &[T], hyp: &[T]) -> Vec<AlignOp> {
    let (n, m) = (reference.len(), hyp.len());
    // (cost, deletions + insertions), compared lexicographically.
    let mut d = vec![vec![(0usize, 0usize); m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = (i, i);
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = (j, j);
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1] == hyp[j - 1];
            let (c, g) = d[i - 1][j - 1];
            let diag = (c + usize::from(!same), g);
            let (c, g) = d[i - 1][j];
            let up = (c + 1, g + 1);
            let (c, g) = d[i][j - 1];
            let left = (c + 1, g + 1);
            d[i][j] = diag.min(up).min(left);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i][j];
        if i > 0 && j > 0 {
            let same = reference[i - 1] == hyp[j - 1];
            let (c, g) = d[i - 1][j - 1];
            if (c + usize::from(!same), g) == here {
                i -= 1;
                j -= 1;
                ops.push(if same { AlignOp::Match(i, j) } else { AlignOp::Substitution(i, j) });
                continue;
            }
        }
        if i > 0 {
            let (c, g) = d[i - 1][j];
            if (c + 1, g + 1) == here {
                i -= 1;
                ops.push(AlignOp::Deletion(i));
                continue;
            }
        }
        j -= 1;
        ops.push(AlignOp::Insertion(j));
    }
    ops.reverse();
    ops
}

pub fn counts_of(ops: &[AlignOp], ref_len: usize) -> ErrorCounts {
    let mut c = ErrorCounts { ref_len, ..ErrorCounts::default() };
    for op in ops {
        match op {
            AlignOp::Match(..) => {}
            AlignOp::Substitution(..) => c.substitutions += 1,
            AlignOp::Deletion(_) => c.deletions += 1,
            AlignOp::Insertion(_) => c.insertions += 1,
        }
    }
    c
}

pub fn edit_distance<T: PartialEq>(reference: &[T], hyp: &[T]) -> ErrorCounts {
    counts_of(&align(reference, hyp), reference.len())
}

/// Error counts with `silence` removed from both sides first.
pub fn word_errors(reference: &[usize], hyp: &[usize], silence: Option<usize>) -> ErrorCounts {
    let keep = |xs: &[usize]| -> Vec<usize> { xs.iter().copied().filter(|&x| Some(x) != silence).collect() };
    edit_distance(&keep(reference), &keep(hyp))
}
