use std::cmp::Ordering;
use std::collections::HashMap;

/// Shared storage for hypothesis histories. Every emitted segment is a node
/// pointing at its predecessor; label sequences are interned in a trie so that
/// equal label histories have equal keys.
#[derive(Debug, Default)]
pub(crate) struct History {
    nodes: Vec<Node>,
    trie: HashMap<(usize, usize), usize>,
    trie_len: usize,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    parent: usize,
    label: usize,
    boundary: usize,
    label_score: f64,
    length_score: f64,
}

/// Handle of the empty history.
pub(crate) const ROOT: usize = usize::MAX;
pub(crate) const ROOT_KEY: usize = 0;

pub(crate) struct Materialized {
    pub labels: Vec<usize>,
    pub boundaries: Vec<usize>,
    pub label_scores: Vec<f64>,
    pub length_scores: Vec<f64>,
}

impl History {
    pub fn new() -> Self {
        History { nodes: Vec::new(), trie: HashMap::new(), trie_len: 1 }
    }

    pub fn push(&mut self, parent: usize, label: usize, boundary: usize, label_score: f64, length_score: f64) -> usize {
        self.nodes.push(Node { parent, label, boundary, label_score, length_score });
        self.nodes.len() - 1
    }

    /// Interned key of `parent_key` extended by `label`.
    pub fn key(&mut self, parent_key: usize, label: usize) -> usize {
        let next = self.trie_len;
        let k = *self.trie.entry((parent_key, label)).or_insert(next);
        if k == next {
            self.trie_len += 1;
        }
        k
    }

    fn walk(&self, mut id: usize) -> impl Iterator<Item = &Node> {
        std::iter::from_fn(move || {
            if id == ROOT {
                return None;
            }
            let n = &self.nodes[id];
            id = n.parent;
            Some(n)
        })
    }

    pub fn labels(&self, id: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.walk(id).map(|n| n.label).collect();
        v.reverse();
        v
    }

    pub fn boundaries(&self, id: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.walk(id).map(|n| n.boundary).collect();
        v.reverse();
        v
    }

    pub fn materialize(&self, id: usize) -> Materialized {
        let mut nodes: Vec<&Node> = self.walk(id).collect();
        nodes.reverse();
        Materialized {
            labels: nodes.iter().map(|n| n.label).collect(),
            boundaries: nodes.iter().map(|n| n.boundary).collect(),
            label_scores: nodes.iter().map(|n| n.label_score).collect(),
            length_scores: nodes.iter().map(|n| n.length_score).collect(),
        }
    }

    /// Lexicographic order of (labels, boundaries) of two histories, each
    /// optionally extended by one more `(label, boundary)`.
    pub fn cmp_extended(&self, a: (usize, Option<(usize, usize)>), b: (usize, Option<(usize, usize)>)) -> Ordering {
        let seq = |(id, ext): (usize, Option<(usize, usize)>)| {
            let m = self.materialize_ids(id);
            let (mut l, mut t) = m;
            if let Some((la, ta)) = ext {
                l.push(la);
                t.push(ta);
            }
            (l, t)
        };
        seq(a).cmp(&seq(b))
    }

    fn materialize_ids(&self, id: usize) -> (Vec<usize>, Vec<usize>) {
        (self.labels(id), self.boundaries(id))
    }
}
