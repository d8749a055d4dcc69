use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use auxlearn::{Result, Split};
use auxlearn_cli::commands::{self, CurateArgs, EvaluateArgs};
use auxlearn_cli::config::parse_ratio;
use auxlearn_cli::{exit_code, DataSource, ExperimentConfig, ExperimentKind, LossKind, Overrides};
use clap::{Args, Parser, Subcommand};

/// Auxiliary-class learning experiments.
///
/// Log verbosity is read from AUXLEARN_LOG (error, warn, info, debug,
/// trace); the default is info. Logs go to stderr.
#[derive(Parser)]
#[command(name = "auxlearn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exclude cat and dog breed synsets and optionally build a split manifest.
    Curate(CurateFlags),
    /// Write a synthetic dataset and manifest.
    SynthData(SynthFlags),
    /// Train one experiment.
    Train(ExperimentFlags),
    /// Evaluate a checkpoint on one split of a dataset.
    Evaluate(EvaluateFlags),
    /// Train and evaluate binary, aux_cce and aux_wcce and write the comparison report.
    Reproduce(ExperimentFlags),
}

/// A `--ratio` value; a newtype so clap treats it as one argument.
#[derive(Clone, Debug)]
struct Ratio(Vec<f64>);

fn ratio_arg(s: &str) -> std::result::Result<Ratio, String> {
    parse_ratio(s).map(Ratio).map_err(|e| e.to_string())
}

#[derive(Args)]
struct ExperimentFlags {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// binary, aux_cce or aux_wcce.
    #[arg(long)]
    kind: Option<ExperimentKind>,
    /// cce or wcce; switches an auxiliary kind's loss.
    #[arg(long)]
    loss: Option<LossKind>,
    /// Class ratio such as 1,1,8.75, enforced within each split.
    #[arg(long, value_parser = ratio_arg)]
    ratio: Option<Ratio>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Dataset file; needs --manifest. A synthetic corpus is used otherwise.
    #[arg(long, requires = "manifest")]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "dataset")]
    manifest: Option<PathBuf>,
}

impl ExperimentFlags {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            kind: self.kind,
            loss: self.loss,
            ratio: self.ratio.clone().map(|r| r.0),
            epochs: self.epochs,
            learning_rate: self.lr,
            dataset: self.dataset.clone(),
            manifest: self.manifest.clone(),
        };
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Args)]
struct CurateFlags {
    /// Synset mapping file (`<id> <desc>, <desc>, ...`).
    #[arg(long)]
    mapping: PathBuf,
    /// Dog breeds to exclude, one dash separated name per line.
    #[arg(long)]
    dogs: Option<PathBuf>,
    /// Cat breeds to exclude; defaults to the five ILSVRC cat classes.
    #[arg(long)]
    cats: Option<PathBuf>,
    /// `example_id,source` listing to turn into a manifest.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, value_parser = ratio_arg)]
    ratio: Option<Ratio>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SynthFlags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Examples per known class; the auxiliary class gets 8.75 times as many.
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Args)]
struct EvaluateFlags {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Row label in the report; defaults to the checkpoint file name.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Curate(f) => {
            let args = CurateArgs {
                mapping: f.mapping,
                dogs: f.dogs,
                cats: f.cats,
                images: f.images,
                train_fraction: f.train_fraction,
                ratio: f.ratio.map(|r| r.0),
                seed: f.seed,
                out_dir: f.out_dir,
            };
            commands::curate(&args, out).map(drop)
        }
        Command::SynthData(f) => {
            let overrides = Overrides {
                seed: f.seed,
                out_dir: f.out_dir,
                ..Overrides::default()
            };
            let cfg = ExperimentConfig::load(f.config.as_deref(), &overrides)?;
            let DataSource::Synthetic(mut params) = cfg.data else {
                return Err(auxlearn::Error::Domain(
                    "synth-data needs a synthetic configuration, not a dataset".into(),
                ));
            };
            if let Some(n) = f.per_class {
                params.per_known_class = n;
            }
            commands::synth_data(&params, cfg.seed, &cfg.out_dir, out).map(drop)
        }
        Command::Train(f) => commands::train_command(&f.resolve()?, out).map(drop),
        Command::Evaluate(f) => {
            let args = EvaluateArgs {
                checkpoint: f.checkpoint,
                dataset: f.dataset,
                manifest: f.manifest,
                split: f.split,
                label: f.label,
                out_dir: f.out_dir,
            };
            commands::evaluate_command(&args, out).map(drop)
        }
        Command::Reproduce(f) => commands::reproduce(&f.resolve()?, out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("AUXLEARN_LOG", "info")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
