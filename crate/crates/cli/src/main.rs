use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use segattn::data::Split;
use segattn::length::LengthModelKind;
use segattn::model::SilenceVariant;
use segattn::search::SearchMode;
use segattn_cli::commands::{self, DecodeOptions, TrainOptions};
use segattn_cli::{verify, ExperimentConfig};

/// Segmental attention experiments on a synthetic corpus.
///
/// Every command reads an experiment config (`--config`); flags given on the
/// command line override the corresponding config keys.
#[derive(Parser)]
#[command(name = "segattn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus into `<output_dir>/data`.
    GenData(Common),
    /// Train with framewise cross-entropy; resumes an interrupted run.
    Train {
        #[command(flatten)]
        common: Common,
        /// Start from the shared parameters of a trained global-attention model.
        #[arg(long)]
        import_global: Option<PathBuf>,
    },
    /// Decode a split and report WER and search errors.
    Decode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        decode: DecodeArgs,
    },
    /// Decode once per length model scale and report WER against alpha.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        decode: DecodeArgs,
        /// Comma-separated length model scales.
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.1,0.3,1")]
        alphas: Vec<f64>,
    },
    /// Run the invariant suite; exit code 0 iff every property holds.
    Verify {
        /// Also check that this checkpoint loads and its checksum matches.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simple,
    Segmental,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum LengthArg {
    None,
    Static,
    Neural,
}

#[derive(Clone, Copy, ValueEnum)]
enum SilenceArg {
    None,
    NoSplit,
    Split,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<u8>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    delta_max: Option<usize>,
    #[arg(long, value_enum)]
    silence: Option<SilenceArg>,
    /// Length model used in search.
    #[arg(long, value_enum)]
    length: Option<LengthArg>,
    /// Disable Viterbi recombination in segmental search.
    #[arg(long)]
    no_recombination: bool,
    /// Override `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Defaults to `<output_dir>/train/best.ckpt`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "dev")]
    split: Split,
    /// Concatenate C consecutive utterances before decoding.
    #[arg(long, default_value_t = 1)]
    concat: usize,
    /// Decode this many sequences in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write per-label truth/recognized score tables.
    #[arg(long)]
    dump_scores: bool,
    /// Output subdirectory name.
    #[arg(long)]
    name: Option<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.mode {
            cfg.search.mode = match m {
                ModeArg::Simple => SearchMode::Simple,
                ModeArg::Segmental => SearchMode::Segmental,
                ModeArg::Oracle => SearchMode::Oracle,
            };
        }
        if let Some(a) = self.alpha {
            cfg.search.alpha = a;
        }
        if let Some(g) = self.gamma {
            cfg.search.gamma = g;
        }
        if let Some(b) = self.beam {
            cfg.search.beam_size = b;
        }
        if let Some(d) = self.delta_max {
            cfg.search.delta_max = d;
        }
        if let Some(s) = self.silence {
            cfg.silence = match s {
                SilenceArg::None => SilenceVariant::None,
                SilenceArg::NoSplit => SilenceVariant::NoSplit,
                SilenceArg::Split => SilenceVariant::Split,
            };
        }
        if let Some(l) = self.length {
            cfg.search.length_model = match l {
                LengthArg::None => LengthModelKind::None,
                LengthArg::Static => LengthModelKind::Static,
                LengthArg::Neural => LengthModelKind::Neural,
            };
        }
        if self.no_recombination {
            cfg.search.recombination = false;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl DecodeArgs {
    fn options(&self) -> Result<DecodeOptions> {
        if self.concat == 0 || self.jobs == 0 {
            bail!("--concat and --jobs must be at least 1");
        }
        Ok(DecodeOptions {
            checkpoint: self.checkpoint.clone(),
            split: self.split,
            concat: self.concat,
            jobs: self.jobs,
            dump_scores: self.dump_scores,
            name: self.name.clone(),
        })
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenData(common) => {
            let cfg = common.load()?;
            let dir = commands::gen_data(&cfg)?;
            println!("corpus written to {}", dir.display());
        }
        Command::Train { common, import_global } => {
            let cfg = common.load()?;
            let dir = commands::train(&cfg, &TrainOptions { import_global }, |r| println!("{r}"))?;
            println!("checkpoints in {}", dir.display());
        }
        Command::Decode { common, decode } => {
            let cfg = common.load()?;
            let out = commands::decode(&cfg, &decode.options()?)?;
            let e = out.summary.errors;
            println!(
                "WER {:.2}% (sub {:.2}%, del {:.2}%, ins {:.2}%), search errors {}/{}; written to {}",
                100.0 * e.wer(),
                100.0 * e.sub_rate(),
                100.0 * e.del_rate(),
                100.0 * e.ins_rate(),
                out.summary.search.errors,
                out.summary.search.sequences,
                out.dir.display()
            );
        }
        Command::Sweep { common, decode, alphas } => {
            let cfg = common.load()?;
            let out = commands::sweep(&cfg, &decode.options()?, &alphas)?;
            print!("{}", out.report.to_table("alpha_sweep").to_text());
            println!("best alpha {}; written to {}", out.report.best_alpha(), out.dir.display());
        }
        Command::Verify { checkpoint } => {
            let props = verify::run_all(checkpoint.as_deref());
            for p in &props {
                println!("{p}");
            }
            return Ok(props.iter().all(|p| p.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
