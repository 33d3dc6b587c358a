use crate::error::{Error, Result};
use crate::model::Segmentation;

use super::corpus::Utterance;

/// Joins consecutive groups of `c` utterances (the last group may be shorter).
pub fn concat_sequences(utts: &[Utterance], c: usize) -> Result<Vec<Utterance>> {
    if c == 0 {
        return Err(Error::Config("concatenation factor must be at least 1".into()));
    }
    if c == 1 {
        return Ok(utts.to_vec());
    }
    utts.chunks(c)
        .map(|group| {
            let id = group.iter().map(|u| u.id()).collect::<Vec<_>>().join("+");
            let mut features = group[0].features.clone();
            let mut labels = group[0].labels.clone();
            let mut bounds = group[0].segmentation.bounds().to_vec();
            for u in &group[1..] {
                features = features.concat(&u.features, "")?;
                let offset = *bounds.last().expect("non-empty segmentation");
                labels.extend_from_slice(&u.labels);
                bounds.extend(u.segmentation.bounds().iter().map(|t| t + offset));
            }
            features.id = id;
            let total = *bounds.last().expect("non-empty segmentation");
            Utterance::new(features, labels, Segmentation::new(bounds, total)?)
        })
        .collect()
}
