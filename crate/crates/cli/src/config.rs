//! Experiment configuration: a TOML key-value file plus command-line
//! overrides. Flags win over the file, the file wins over the defaults.
//!
//! ```toml
//! seed = 42
//! out_dir = "out"
//! kind = "aux_wcce"          # binary | aux_cce | aux_wcce
//! hidden = [16, 16]
//! activation = "tanh"        # tanh | relu
//! learning_rate = 0.05
//! epochs = 200
//! batch_size = 64
//! ratio = [1.0, 1.0, 8.75]   # optional, auxiliary kinds only
//!
//! # Either a dataset/manifest pair ...
//! dataset = "data/dataset.csv"
//! manifest = "data/manifest.csv"
//!
//! # ... or a synthetic corpus (used when no dataset is given).
//! [synthetic]
//! per_known_class = 1000
//! dim = 2
//! sigma = 0.1
//! separation = 4.0
//! train_fraction = 0.8
//! ```
//!
//! Relative paths are taken relative to the working directory.
//!
//! # Seeds
//!
//! Every random stage draws from `derive_seed(seed, stage)` with these stage
//! names, so each stage can be rerun on its own:
//!
//! | stage              | used for                                  |
//! |--------------------|-------------------------------------------|
//! | `data/synthetic`   | synthetic features and their split        |
//! | `data/ratio`       | subsampling in `--ratio` enforcement      |
//! | `model/init`       | initial weights                           |
//! | `train/shuffle`    | minibatch order                           |
//! | `curation/split`   | train/test assignment in `curate`         |
//! | `curation/ratio`   | subsampling in `curate --ratio`           |

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use auxlearn::curation::SyntheticSpec;
use auxlearn::seed::derive_seed;
use auxlearn::{Activation, Error, Result};
use serde::Deserialize;

pub const AUXILIARY_CLASS: &str = "others";

pub const STAGE_SYNTHETIC: &str = "data/synthetic";
pub const STAGE_RATIO: &str = "data/ratio";
pub const STAGE_INIT: &str = "model/init";
pub const STAGE_SHUFFLE: &str = "train/shuffle";
pub const STAGE_CURATION_SPLIT: &str = "curation/split";
pub const STAGE_CURATION_RATIO: &str = "curation/ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Known classes only, categorical cross-entropy.
    Binary,
    /// Known classes plus the auxiliary class, categorical cross-entropy.
    AuxCce,
    /// Known classes plus the auxiliary class, weighted cross-entropy.
    AuxWcce,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 3] = [
        ExperimentKind::Binary,
        ExperimentKind::AuxCce,
        ExperimentKind::AuxWcce,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Binary => "binary",
            ExperimentKind::AuxCce => "aux_cce",
            ExperimentKind::AuxWcce => "aux_wcce",
        }
    }

    /// Row label in the result tables.
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Binary => "Binary Classifier",
            ExperimentKind::AuxCce => "Auxiliary Learning",
            ExperimentKind::AuxWcce => "AL with weighted loss",
        }
    }

    pub fn is_auxiliary(self) -> bool {
        self != ExperimentKind::Binary
    }

    pub fn loss(self) -> LossKind {
        match self {
            ExperimentKind::AuxWcce => LossKind::Wcce,
            _ => LossKind::Cce,
        }
    }

    /// The same kind trained with `loss`; binary runs only support cce.
    pub fn with_loss(self, loss: LossKind) -> Result<Self> {
        match (self, loss) {
            (ExperimentKind::Binary, LossKind::Cce) => Ok(ExperimentKind::Binary),
            (ExperimentKind::Binary, LossKind::Wcce) => Err(Error::Domain(
                "the binary experiment is trained with cce only".into(),
            )),
            (_, LossKind::Cce) => Ok(ExperimentKind::AuxCce),
            (_, LossKind::Wcce) => Ok(ExperimentKind::AuxWcce),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown experiment kind '{s}' (expected binary, aux_cce or aux_wcce)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Cce,
    Wcce,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cce" => Ok(LossKind::Cce),
            "wcce" => Ok(LossKind::Wcce),
            _ => Err(Error::Domain(format!(
                "unknown loss '{s}' (expected cce or wcce)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub per_known_class: usize,
    pub dim: usize,
    pub sigma: f64,
    pub separation: f64,
    pub train_fraction: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        let spec = SyntheticSpec::cat_dog_others(1000, 0);
        SyntheticParams {
            per_known_class: 1000,
            dim: spec.dim,
            sigma: spec.sigma,
            separation: spec.separation,
            train_fraction: spec.train_fraction,
        }
    }
}

impl SyntheticParams {
    /// Cat, dog and others at `1 : 1 : 8.75`.
    pub fn spec(&self, root_seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            dim: self.dim,
            sigma: self.sigma,
            separation: self.separation,
            train_fraction: self.train_fraction,
            ..SyntheticSpec::cat_dog_others(
                self.per_known_class,
                derive_seed(root_seed, STAGE_SYNTHETIC),
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticParams),
    Files { dataset: PathBuf, manifest: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub data: DataSource,
    /// Hidden layer widths; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub ratio: Option<Vec<f64>>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::AuxWcce,
            data: DataSource::Synthetic(SyntheticParams::default()),
            hidden: vec![16, 16],
            activation: Activation::Tanh,
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 64,
            ratio: None,
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub kind: Option<ExperimentKind>,
    pub loss: Option<LossKind>,
    pub ratio: Option<Vec<f64>>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub dataset: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    kind: Option<ExperimentKind>,
    hidden: Option<Vec<usize>>,
    activation: Option<String>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    ratio: Option<Vec<f64>>,
    dataset: Option<PathBuf>,
    manifest: Option<PathBuf>,
    synthetic: Option<SyntheticFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticFile {
    per_known_class: Option<usize>,
    dim: Option<usize>,
    sigma: Option<f64>,
    separation: Option<f64>,
    train_fraction: Option<f64>,
}

impl ExperimentConfig {
    /// Defaults, then `config_text`, then `overrides`.
    pub fn resolve(config_text: Option<&str>, overrides: &Overrides) -> Result<Self> {
        let file: ConfigFile = match config_text {
            Some(text) => toml::from_str(text).map_err(|e| {
                let line = e
                    .span()
                    .map_or(0, |s| text[..s.start].matches('\n').count() + 1);
                Error::Parse {
                    line,
                    message: e.message().to_string(),
                }
            })?,
            None => ConfigFile::default(),
        };

        let mut cfg = ExperimentConfig::default();
        let synthetic = file.synthetic.unwrap_or_default();
        let mut params = SyntheticParams::default();
        set(&mut params.per_known_class, synthetic.per_known_class);
        set(&mut params.dim, synthetic.dim);
        set(&mut params.sigma, synthetic.sigma);
        set(&mut params.separation, synthetic.separation);
        set(&mut params.train_fraction, synthetic.train_fraction);

        set(&mut cfg.seed, file.seed);
        set(&mut cfg.out_dir, file.out_dir);
        set(&mut cfg.kind, file.kind);
        set(&mut cfg.hidden, file.hidden);
        if let Some(a) = file.activation {
            cfg.activation = a.parse()?;
        }
        set(&mut cfg.learning_rate, file.learning_rate);
        set(&mut cfg.epochs, file.epochs);
        set(&mut cfg.batch_size, file.batch_size);
        cfg.ratio = file.ratio;

        set(&mut cfg.seed, overrides.seed);
        set(&mut cfg.out_dir, overrides.out_dir.clone());
        set(&mut cfg.kind, overrides.kind);
        if let Some(loss) = overrides.loss {
            cfg.kind = cfg.kind.with_loss(loss)?;
        }
        if overrides.ratio.is_some() {
            cfg.ratio = overrides.ratio.clone();
        }
        set(&mut cfg.epochs, overrides.epochs);
        set(&mut cfg.learning_rate, overrides.learning_rate);

        let dataset = overrides.dataset.clone().or(file.dataset);
        let manifest = overrides.manifest.clone().or(file.manifest);
        cfg.data = match (dataset, manifest) {
            (Some(dataset), Some(manifest)) => DataSource::Files { dataset, manifest },
            (None, None) => DataSource::Synthetic(params),
            _ => {
                return Err(Error::Domain(
                    "dataset and manifest must be given together".into(),
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the config file at `path` (if any) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::File {
                path: p.to_path_buf(),
                source: Box::new(e.into()),
            })?),
            None => None,
        };
        ExperimentConfig::resolve(text.as_deref(), overrides).map_err(|e| match path {
            Some(p) => Error::File {
                path: p.to_path_buf(),
                source: Box::new(e),
            },
            None => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be at least 1".into());
        }
        if let Some(ratio) = &self.ratio {
            if !self.kind.is_auxiliary() {
                return bad("the binary experiment does not take a class ratio".into());
            }
            if ratio.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                return bad(format!("class ratios must be positive, got {ratio:?}"));
            }
        }
        Ok(())
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        derive_seed(self.seed, stage)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses `1,1,8.75` or `1:1:8.75`.
pub fn parse_ratio(s: &str) -> Result<Vec<f64>> {
    s.split([',', ':'])
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("invalid ratio component '{v}' in '{s}'")))
        })
        .collect()
}
