//! On-disk corpus: one directory per split with `features.bin` (little-endian
//! `f64`), `index.json` (id, input frames, offset in values) and `labels.txt`
//! (`id<TAB>labels<TAB>boundaries`, space-separated). `corpus.json` at the top
//! records the vocabulary and frame rate.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Segmentation;

use super::corpus::{Corpus, Split, Utterance};
use super::features::FeatureSequence;

#[derive(Debug, Serialize, Deserialize)]
struct CorpusMeta {
    vocab_size: usize,
    frames_per_step: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexEntry {
    id: String,
    frames: usize,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Index {
    input_dim: usize,
    entries: Vec<IndexEntry>,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_split(dir: &Path, utts: &[Utterance]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let input_dim = utts.first().map_or(0, |u| u.features.dim());
    let mut bin = Vec::new();
    let mut labels = String::new();
    let mut entries = Vec::with_capacity(utts.len());
    let mut offset = 0;
    for u in utts {
        entries.push(IndexEntry { id: u.id().to_string(), frames: u.features.frames(), offset });
        offset += u.features.values().len();
        for v in u.features.values() {
            bin.extend_from_slice(&v.to_le_bytes());
        }
        labels.push_str(&format!("{}\t{}\t{}\n", u.id(), join(&u.labels), join(u.segmentation.bounds())));
    }
    fs::write(dir.join("features.bin"), bin)?;
    fs::write(dir.join("labels.txt"), labels)?;
    let mut f = fs::File::create(dir.join("index.json"))?;
    serde_json::to_writer_pretty(&mut f, &Index { input_dim, entries })?;
    f.write_all(b"\n")?;
    Ok(())
}

fn parse_list(path: &Path, line: usize, field: &str) -> Result<Vec<usize>> {
    field
        .split_whitespace()
        .map(|x| x.parse().map_err(|_| Error::format(path, format!("line {line}: bad integer '{x}'"))))
        .collect()
}

pub fn read_split(dir: &Path) -> Result<Vec<Utterance>> {
    let index_path = dir.join("index.json");
    let index: Index = serde_json::from_slice(&fs::read(&index_path)?)?;
    let bin_path = dir.join("features.bin");
    let bin = fs::read(&bin_path)?;
    if bin.len() % 8 != 0 {
        return Err(Error::format(&bin_path, "length is not a multiple of 8"));
    }
    let values: Vec<f64> = bin.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let labels_path = dir.join("labels.txt");
    let text = fs::read_to_string(&labels_path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
    if lines.len() != index.entries.len() {
        return Err(Error::format(
            &labels_path,
            format!("{} lines for {} index entries", lines.len(), index.entries.len()),
        ));
    }
    let mut out = Vec::with_capacity(lines.len());
    for (n, (line, entry)) in lines.iter().zip(&index.entries).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields[0] != entry.id {
            return Err(Error::format(&labels_path, format!("line {}: expected id {}", n + 1, entry.id)));
        }
        let labels = parse_list(&labels_path, n + 1, fields[1])?;
        let bounds = parse_list(&labels_path, n + 1, fields[2])?;
        let len = entry.frames * index.input_dim;
        let slice = values
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| Error::format(&bin_path, format!("entry {} out of range", entry.id)))?;
        let total = *bounds.last().unwrap_or(&0);
        let features = FeatureSequence::new(entry.id.clone(), index.input_dim, slice.to_vec())?;
        out.push(Utterance::new(features, labels, Segmentation::new(bounds, total)?)?);
    }
    Ok(out)
}

pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = CorpusMeta { vocab_size: corpus.vocab_size, frames_per_step: corpus.frames_per_step };
    fs::write(dir.join("corpus.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    for s in Split::ALL {
        write_split(&dir.join(s.name()), corpus.split(s))?;
    }
    Ok(())
}

pub fn read_corpus(dir: &Path) -> Result<Corpus> {
    let meta: CorpusMeta = serde_json::from_slice(&fs::read(dir.join("corpus.json"))?)?;
    Ok(Corpus {
        vocab_size: meta.vocab_size,
        frames_per_step: meta.frames_per_step,
        train: read_split(&dir.join("train"))?,
        dev: read_split(&dir.join("dev"))?,
        eval: read_split(&dir.join("eval"))?,
    })
}
