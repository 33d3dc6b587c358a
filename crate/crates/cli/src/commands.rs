//! The pipeline behind each subcommand. Every command writes its outputs and a
//! manifest below `output_dir`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use segattn::data::{concat_sequences, generate, io, Corpus, Split, Utterance};
use segattn::eval::{
    decode_corpus, hypotheses_table, score_table, sweep as run_sweep, wer_row, DecodeSummary, Decoded, SweepReport,
    Table, WER_COLUMNS,
};
use segattn::length::LengthModelKind;
use segattn::train::{import_global, EpochRecord, Trainer};
use segattn::SegmentalModel;

use crate::config::ExperimentConfig;
use crate::manifest::{file_hash, read_manifest, write_manifest};

const SPEC_HASH: &str = "spec_hash";

/// Generates the corpus into `<output_dir>/data`.
pub fn gen_data(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.data_dir();
    let corpus = generate(&cfg.corpus, cfg.seed)?;
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    io::write_corpus(&dir, &corpus)?;
    write_manifest(&dir, "gen-data", cfg, BTreeMap::from([(SPEC_HASH.to_string(), cfg.corpus_hash())]))?;
    Ok(dir)
}

/// The corpus with the silence variant applied. Reads `<output_dir>/data` when
/// present (its spec must match) and generates in memory otherwise.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    let dir = cfg.data_dir();
    let raw = if dir.join(crate::manifest::MANIFEST).is_file() {
        let stored = read_manifest(&dir)?.details.get(SPEC_HASH).cloned().unwrap_or_default();
        if stored != cfg.corpus_hash() {
            bail!(
                "{} was generated from a different corpus spec or seed; rerun gen-data or choose another output_dir",
                dir.display()
            );
        }
        io::read_corpus(&dir)?
    } else {
        generate(&cfg.corpus, cfg.seed)?
    };
    cfg.prepare(raw)
}

#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub import_global: Option<PathBuf>,
}

const RUN_FILE: &str = "run.json";

/// Trains into `<output_dir>/train`, resuming an interrupted run of the same
/// config. Returns the directory.
pub fn train(cfg: &ExperimentConfig, opts: &TrainOptions, mut on_record: impl FnMut(&EpochRecord)) -> Result<PathBuf> {
    let dir = cfg.train_dir();
    let corpus = load_corpus(cfg)?;
    let mut details = BTreeMap::new();
    let run_id = serde_json::to_string(&(cfg.hash(), opts.import_global.as_ref().map(|p| file_hash(p)).transpose()?))?;
    let mut trainer = if Trainer::can_resume(&dir) {
        let previous = fs::read_to_string(dir.join(RUN_FILE)).unwrap_or_default();
        if previous != run_id {
            bail!("{} holds a run with a different config or import; choose another output_dir", dir.display());
        }
        Trainer::resume(&dir, cfg.train_config())?
    } else {
        let model_config = cfg.model_config()?;
        let model = match &opts.import_global {
            Some(path) => {
                let global = SegmentalModel::load(path).with_context(|| format!("loading {}", path.display()))?;
                import_global(&global, &model_config, cfg.seed)?
            }
            None => SegmentalModel::new(model_config, cfg.seed)?,
        };
        fs::create_dir_all(&dir)?;
        fs::write(dir.join(RUN_FILE), &run_id)?;
        Trainer::new(model, cfg.train_config(), Some(&dir))?
    };
    if let Some(p) = &opts.import_global {
        details.insert("import_global".into(), file_hash(p)?);
    }
    trainer.fit(&corpus, &mut on_record)?;
    details.insert("best_epoch".into(), trainer.state.best_epoch.to_string());
    write_manifest(&dir, "train", cfg, details)?;
    Ok(dir)
}

#[derive(Debug, Clone)]
pub struct DecodeOptions {
    /// Defaults to `<output_dir>/train/best.ckpt`.
    pub checkpoint: Option<PathBuf>,
    pub split: Split,
    /// Concatenate this many consecutive utterances into one sequence.
    pub concat: usize,
    pub jobs: usize,
    pub dump_scores: bool,
    /// Subdirectory of `<output_dir>/decode`; derived from the settings when absent.
    pub name: Option<String>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions { checkpoint: None, split: Split::Dev, concat: 1, jobs: 1, dump_scores: false, name: None }
    }
}

pub struct DecodeOutcome {
    pub dir: PathBuf,
    pub decoded: Vec<Decoded>,
    pub summary: DecodeSummary,
}

fn checkpoint_path(cfg: &ExperimentConfig, opts: &DecodeOptions) -> PathBuf {
    opts.checkpoint.clone().unwrap_or_else(|| cfg.train_dir().join("best.ckpt"))
}

fn load_model(path: &Path) -> Result<SegmentalModel> {
    SegmentalModel::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn decode_inputs(cfg: &ExperimentConfig, opts: &DecodeOptions) -> Result<Vec<Utterance>> {
    let corpus = load_corpus(cfg)?;
    let utts = corpus.split(opts.split);
    if opts.concat > 1 {
        Ok(concat_sequences(utts, opts.concat)?)
    } else {
        Ok(utts.to_vec())
    }
}

fn write_table(dir: &Path, stem: &str, t: &Table) -> Result<()> {
    fs::write(dir.join(format!("{stem}.txt")), t.to_text())?;
    fs::write(dir.join(format!("{stem}.rec")), t.to_records())?;
    Ok(())
}

fn condition(cfg: &ExperimentConfig, opts: &DecodeOptions) -> String {
    let s = &cfg.search;
    format!("{}-{}-{}-a{}-g{}-b{}-c{}", opts.split, s.mode, s.length_model, s.alpha, s.gamma, s.beam_size, opts.concat)
}

/// Decodes a split and writes hypotheses, the WER summary and optionally
/// per-label score dumps to `<output_dir>/decode/<name>`.
pub fn decode(cfg: &ExperimentConfig, opts: &DecodeOptions) -> Result<DecodeOutcome> {
    let ckpt = checkpoint_path(cfg, opts);
    let model = load_model(&ckpt)?;
    let utts = decode_inputs(cfg, opts)?;
    let name = opts.name.clone().unwrap_or_else(|| condition(cfg, opts));
    let decoded = decode_corpus(&model, &utts, cfg.search, cfg.model_silence(), opts.jobs)?;
    let summary = DecodeSummary::of(&decoded);

    let dir = cfg.output_dir.join("decode").join(&name);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    write_table(&dir, "hypotheses", &hypotheses_table(&decoded))?;
    let mut wer = Table::new("wer", &WER_COLUMNS);
    wer.push(wer_row(&name, &summary));
    write_table(&dir, "summary", &wer)?;
    if opts.dump_scores {
        let with_length = cfg.search.length_model != LengthModelKind::None;
        let (mut text, mut rec) = (String::new(), String::new());
        for d in &decoded {
            let t = score_table(&d.truth, &d.recognized).to_table(&format!("scores/{}", d.id), with_length);
            text += &t.to_text();
            text.push('\n');
            rec += &t.to_records();
        }
        fs::write(dir.join("scores.txt"), text)?;
        fs::write(dir.join("scores.rec"), rec)?;
    }
    let details = BTreeMap::from([
        ("checkpoint".to_string(), file_hash(&ckpt)?),
        ("split".to_string(), opts.split.to_string()),
        ("concat".to_string(), opts.concat.to_string()),
    ]);
    write_manifest(&dir, "decode", cfg, details)?;
    Ok(DecodeOutcome { dir, decoded, summary })
}

pub struct SweepOutcome {
    pub dir: PathBuf,
    pub report: SweepReport,
}

/// Length model scale sweep; writes `<output_dir>/sweep/<name>/sweep.{txt,rec}`.
pub fn sweep(cfg: &ExperimentConfig, opts: &DecodeOptions, alphas: &[f64]) -> Result<SweepOutcome> {
    let ckpt = checkpoint_path(cfg, opts);
    let model = load_model(&ckpt)?;
    let utts = decode_inputs(cfg, opts)?;
    let report = run_sweep(&model, &utts, cfg.search, alphas, cfg.model_silence(), opts.jobs)?;
    let name =
        opts.name.clone().unwrap_or_else(|| condition(cfg, opts).replacen(&format!("-a{}", cfg.search.alpha), "", 1));
    let dir = cfg.output_dir.join("sweep").join(&name);
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    write_table(&dir, "sweep", &report.to_table("alpha_sweep"))?;
    let details = BTreeMap::from([
        ("checkpoint".to_string(), file_hash(&ckpt)?),
        ("best_alpha".to_string(), report.best_alpha().to_string()),
        ("split".to_string(), opts.split.to_string()),
    ]);
    write_manifest(&dir, "sweep", cfg, details)?;
    Ok(SweepOutcome { dir, report })
}
