//! The subcommands. Each one writes its human-readable summary to `out` and
//! its files under the output directory, and returns what it computed.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use auxlearn::curation::{
    assign_split, build_exclusion_set, enforce_ratio, generate_synthetic_dataset, parse_name_list,
    parse_synset_mapping, ExclusionList, ManifestRecord, SynsetEntry,
};
use auxlearn::metrics::{
    format_fixed, format_percent, render_report, ExperimentResult, RenderedReport,
};
use auxlearn::{
    class_report, compute_class_weights, confusion_matrix, majority_baseline, train, Checkpoint,
    ClassWeights, DatasetManifest, Error, LabeledDataset, LabeledExample, Loss, LossConfig,
    MlpModel, Result, Split, TrainConfig, TrainReport,
};
use serde::Deserialize;

use crate::config::{
    DataSource, ExperimentConfig, ExperimentKind, SyntheticParams, AUXILIARY_CLASS,
    STAGE_CURATION_RATIO, STAGE_CURATION_SPLIT, STAGE_INIT, STAGE_RATIO, STAGE_SHUFFLE,
};

pub const RETAINED_SYNSETS_FILE: &str = "retained_synsets.txt";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const DATASET_FILE: &str = "dataset.csv";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_CSV_FILE: &str = "report.csv";
pub const EVALUATION_TEXT_FILE: &str = "evaluation.txt";
pub const EVALUATION_CSV_FILE: &str = "evaluation.csv";

pub fn checkpoint_file(kind: ExperimentKind) -> String {
    format!("{kind}.ckpt")
}

pub fn train_log_file(kind: ExperimentKind) -> String {
    format!("{kind}_train_log.csv")
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| in_file(path, e.into()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| in_file(path, e.into()))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| in_file(path, e.into()))
}

fn in_file(path: &Path, source: Error) -> Error {
    Error::File {
        path: path.to_path_buf(),
        source: Box::new(source),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurateArgs {
    pub mapping: PathBuf,
    /// Dog breeds, one dash separated name per line.
    pub dogs: Option<PathBuf>,
    /// Cat breeds; the built-in list when absent.
    pub cats: Option<PathBuf>,
    /// Optional `example_id,source` listing, where `source` is `cat`, `dog`
    /// or a synset id. Turned into a split manifest when given.
    pub images: Option<PathBuf>,
    pub train_fraction: f64,
    pub ratio: Option<Vec<f64>>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurateSummary {
    pub total: usize,
    pub excluded: usize,
    pub retained: usize,
    pub unmatched: Vec<String>,
    pub manifest: Option<DatasetManifest>,
}

#[derive(Debug, Deserialize)]
struct ImageRow {
    example_id: String,
    source: String,
}

pub fn curate(args: &CurateArgs, out: &mut dyn Write) -> Result<CurateSummary> {
    let entries =
        parse_synset_mapping(&read_text(&args.mapping)?).map_err(|e| in_file(&args.mapping, e))?;
    let dogs = match &args.dogs {
        Some(p) => parse_name_list(&read_text(p)?),
        None => Vec::new(),
    };
    let exclusions = match &args.cats {
        Some(p) => ExclusionList::new(dogs, parse_name_list(&read_text(p)?)),
        None => ExclusionList::with_default_cats(dogs),
    };
    let outcome = build_exclusion_set(&entries, &exclusions)?;
    let retained = outcome.retained(&entries);

    create_dir(&args.out_dir)?;
    let listing: String = retained
        .iter()
        .map(|e| format!("{} {}\n", e.synset_id, e.names.join(", ")))
        .collect();
    write_file(&args.out_dir.join(RETAINED_SYNSETS_FILE), &listing)?;

    writeln!(out, "synsets: {}", entries.len())?;
    writeln!(out, "classes excluded: {}", outcome.excluded.len())?;
    writeln!(out, "classes retained: {}", retained.len())?;
    for name in &outcome.unmatched {
        writeln!(out, "warning: no synset matches '{name}'")?;
    }

    let manifest = match &args.images {
        Some(path) => {
            let m = label_images(path, &retained, &outcome.excluded, args)?;
            m.save(args.out_dir.join(MANIFEST_FILE))?;
            for split in Split::ALL {
                let counts = m.class_counts(split);
                let parts: Vec<String> = m
                    .class_names()
                    .iter()
                    .zip(&counts)
                    .map(|(n, c)| format!("{n} {c}"))
                    .collect();
                writeln!(out, "{split}: {}", parts.join(", "))?;
            }
            Some(m)
        }
        None => None,
    };

    Ok(CurateSummary {
        total: entries.len(),
        excluded: outcome.excluded.len(),
        retained: retained.len(),
        unmatched: outcome.unmatched,
        manifest,
    })
}

fn label_images(
    path: &Path,
    retained: &[&SynsetEntry],
    excluded: &BTreeSet<String>,
    args: &CurateArgs,
) -> Result<DatasetManifest> {
    let class_names: Vec<String> = ["cat", "dog", AUXILIARY_CLASS].map(String::from).into();
    let retained: BTreeSet<&str> = retained.iter().map(|e| e.synset_id.as_str()).collect();
    let text = read_text(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut records = Vec::new();
    let mut dropped = 0usize;
    for (i, row) in reader.deserialize::<ImageRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| {
            in_file(
                path,
                Error::Parse {
                    line,
                    message: e.to_string(),
                },
            )
        })?;
        let record = match row.source.as_str() {
            "cat" => ManifestRecord::unsplit(row.example_id, 0),
            "dog" => ManifestRecord::unsplit(row.example_id, 1),
            synset if retained.contains(synset) => {
                ManifestRecord::unsplit(row.example_id, 2).with_synset(synset)
            }
            synset if excluded.contains(synset) => {
                dropped += 1;
                continue;
            }
            other => {
                return Err(in_file(
                    path,
                    Error::Parse {
                        line,
                        message: format!("unknown source '{other}'"),
                    },
                ))
            }
        };
        records.push(record);
    }
    if dropped > 0 {
        log::info!("dropped {dropped} images from excluded synsets");
    }
    let manifest = assign_split(
        class_names,
        records,
        args.train_fraction,
        auxlearn::seed::derive_seed(args.seed, STAGE_CURATION_SPLIT),
    )?;
    match &args.ratio {
        Some(r) => enforce_ratio(
            &manifest,
            r,
            auxlearn::seed::derive_seed(args.seed, STAGE_CURATION_RATIO),
        ),
        None => Ok(manifest),
    }
}

/// Writes a synthetic dataset and its manifest to `out_dir`.
pub fn synth_data(
    params: &SyntheticParams,
    seed: u64,
    out_dir: &Path,
    out: &mut dyn Write,
) -> Result<(LabeledDataset, DatasetManifest)> {
    let corpus = generate_synthetic_dataset(&params.spec(seed))?;
    create_dir(out_dir)?;
    corpus.dataset.save(out_dir.join(DATASET_FILE))?;
    corpus.manifest.save(out_dir.join(MANIFEST_FILE))?;
    for split in Split::ALL {
        writeln!(out, "{split}: {:?}", corpus.manifest.class_counts(split))?;
    }
    Ok((corpus.dataset, corpus.manifest))
}

/// The dataset and manifest an experiment reads.
pub fn load_corpus(cfg: &ExperimentConfig) -> Result<(LabeledDataset, DatasetManifest)> {
    match &cfg.data {
        DataSource::Synthetic(params) => {
            let corpus = generate_synthetic_dataset(&params.spec(cfg.seed))?;
            Ok((corpus.dataset, corpus.manifest))
        }
        DataSource::Files { dataset, manifest } => Ok((
            LabeledDataset::load(dataset)?,
            DatasetManifest::load(manifest)?,
        )),
    }
}

/// Train and test examples for one experiment kind.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub class_names: Vec<String>,
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

/// Binary runs keep the two known classes; auxiliary runs keep every class,
/// subsampled to `cfg.ratio` when one is set.
pub fn experiment_data(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    dataset: &LabeledDataset,
    manifest: &DatasetManifest,
) -> Result<ExperimentData> {
    let aux = manifest.class_index(AUXILIARY_CLASS);
    if kind.is_auxiliary() {
        if aux.is_none() {
            return Err(Error::Domain(format!(
                "{kind} needs a class named '{AUXILIARY_CLASS}'"
            )));
        }
        let balanced;
        let manifest = match &cfg.ratio {
            Some(r) => {
                balanced = enforce_ratio(manifest, r, cfg.stage_seed(STAGE_RATIO))?;
                &balanced
            }
            None => manifest,
        };
        return Ok(ExperimentData {
            class_names: manifest.class_names().to_vec(),
            train: dataset.select(manifest, Split::Train)?,
            test: dataset.select(manifest, Split::Test)?,
        });
    }

    let known: Vec<usize> = (0..manifest.num_classes())
        .filter(|&c| Some(c) != aux)
        .collect();
    if known.len() != 2 {
        return Err(Error::Domain(format!(
            "the binary experiment needs exactly 2 known classes, found {}",
            known.len()
        )));
    }
    let keep = |examples: Vec<LabeledExample>| -> Vec<LabeledExample> {
        examples
            .into_iter()
            .filter_map(|ex| {
                let label = known.iter().position(|&c| c == ex.label)?;
                Some(LabeledExample { label, ..ex })
            })
            .collect()
    };
    Ok(ExperimentData {
        class_names: known
            .iter()
            .map(|&c| manifest.class_names()[c].clone())
            .collect(),
        train: keep(dataset.select(manifest, Split::Train)?),
        test: keep(dataset.select(manifest, Split::Test)?),
    })
}

pub fn class_counts(examples: &[LabeledExample], k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for ex in examples {
        counts[ex.label] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub report: TrainReport,
    /// Weights derived from the training counts, for weighted runs.
    pub weights: Option<ClassWeights>,
}

pub fn train_experiment(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    data: &ExperimentData,
) -> Result<TrainOutcome> {
    let first = data
        .train
        .first()
        .ok_or_else(|| Error::Domain("the training split is empty".into()))?;
    let k = data.class_names.len();
    let weights = match kind.loss() {
        crate::config::LossKind::Wcce => {
            let counts: Vec<f64> = class_counts(&data.train, k)
                .iter()
                .map(|&c| c as f64)
                .collect();
            Some(compute_class_weights(&counts)?)
        }
        crate::config::LossKind::Cce => None,
    };
    let loss = match &weights {
        Some(w) => Loss::Weighted(w.clone()),
        None => Loss::Categorical,
    };

    let mut dims = vec![first.features.len()];
    dims.extend(&cfg.hidden);
    dims.push(k);
    let mut model = MlpModel::init(&dims, cfg.activation, cfg.stage_seed(STAGE_INIT))?;
    let train_cfg = TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        seed: cfg.stage_seed(STAGE_SHUFFLE),
        loss: loss.clone(),
        loss_config: LossConfig::default(),
    };
    log::info!(
        "training {kind} on {} examples, layers {dims:?}",
        data.train.len()
    );
    let report = train(&mut model, &data.train, &train_cfg)?;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model,
            class_names: data.class_names.clone(),
            loss: Some(loss),
        },
        report,
        weights,
    })
}

fn write_train_outputs(out_dir: &Path, kind: ExperimentKind, outcome: &TrainOutcome) -> Result<()> {
    create_dir(out_dir)?;
    outcome
        .checkpoint
        .save(out_dir.join(checkpoint_file(kind)))?;
    let mut log = String::from("epoch,loss\n");
    for (i, loss) in outcome.report.loss_history.iter().enumerate() {
        log.push_str(&format!("{},{loss}\n", i + 1));
    }
    write_file(&out_dir.join(train_log_file(kind)), &log)
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// `train` subcommand: fits one experiment and writes its checkpoint and
/// per-epoch loss log.
pub fn train_command(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<TrainOutcome> {
    let (dataset, manifest) = load_corpus(cfg)?;
    let data = experiment_data(cfg, cfg.kind, &dataset, &manifest)?;
    writeln!(out, "experiment: {}", cfg.kind)?;
    writeln!(
        out,
        "training counts: {:?}",
        class_counts(&data.train, data.class_names.len())
    )?;
    let outcome = train_experiment(cfg, cfg.kind, &data)?;
    if let Some(w) = &outcome.weights {
        writeln!(out, "class weights (positive): {}", join(w.positive()))?;
        writeln!(out, "class weights (negative): {}", join(w.negative()))?;
        log::info!("class weights {:?}", w.positive());
    }
    if let Some(last) = outcome.report.loss_history.last() {
        writeln!(out, "final training loss: {}", format_fixed(*last, 5))?;
    }
    write_train_outputs(&cfg.out_dir, cfg.kind, &outcome)?;
    writeln!(
        out,
        "checkpoint: {}",
        cfg.out_dir.join(checkpoint_file(cfg.kind)).display()
    )?;
    Ok(outcome)
}

/// Accuracy, loss and per-class scores of `checkpoint` on `test`.
pub fn evaluate_model(
    label: &str,
    checkpoint: &Checkpoint,
    test: &[LabeledExample],
) -> Result<ExperimentResult> {
    if test.is_empty() {
        return Err(Error::Domain("the test set is empty".into()));
    }
    let model = &checkpoint.model;
    let k = model.num_classes();
    let loss = checkpoint.loss.clone().unwrap_or(Loss::Categorical);
    let truth: Vec<usize> = test.iter().map(|e| e.label).collect();
    let predicted = test
        .iter()
        .map(|e| model.predict(&e.features))
        .collect::<Result<Vec<_>>>()?;
    let names = if checkpoint.class_names.is_empty() {
        (0..k).map(|c| format!("class{c}")).collect()
    } else {
        checkpoint.class_names.clone()
    };
    let confusion = confusion_matrix(&truth, &predicted, k)?.with_class_names(names)?;
    Ok(ExperimentResult {
        label: label.to_string(),
        report: class_report(&confusion)?,
        confusion,
        loss: model.mean_loss(test, &loss, &LossConfig::default())?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateArgs {
    pub checkpoint: PathBuf,
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub split: Split,
    pub label: Option<String>,
    pub out_dir: PathBuf,
}

/// `evaluate` subcommand. Manifest classes are matched to the checkpoint's
/// classes by name; examples of classes the model does not know are skipped.
pub fn evaluate_command(args: &EvaluateArgs, out: &mut dyn Write) -> Result<ExperimentResult> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let dataset = LabeledDataset::load(&args.dataset)?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let k = checkpoint.model.num_classes();
    let class_of: Vec<Option<usize>> = if checkpoint.class_names.is_empty() {
        if manifest.num_classes() != k {
            return Err(Error::DimensionMismatch {
                context: "manifest classes vs checkpoint outputs",
                expected: k,
                actual: manifest.num_classes(),
            });
        }
        (0..k).map(Some).collect()
    } else {
        manifest
            .class_names()
            .iter()
            .map(|n| checkpoint.class_names.iter().position(|c| c == n))
            .collect()
    };
    let test: Vec<LabeledExample> = dataset
        .select(&manifest, args.split)?
        .into_iter()
        .filter_map(|ex| {
            let label = class_of[ex.label]?;
            Some(LabeledExample { label, ..ex })
        })
        .collect();
    if let Some(ex) = test.first() {
        if ex.features.len() != checkpoint.model.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "dataset features vs checkpoint inputs",
                expected: checkpoint.model.input_dim(),
                actual: ex.features.len(),
            });
        }
    }
    let label = args.label.clone().unwrap_or_else(|| {
        args.checkpoint
            .file_stem()
            .map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
    });
    let result = evaluate_model(&label, &checkpoint, &test)?;
    let baseline = majority_baseline(&class_counts(&test, k))?;

    writeln!(out, "examples: {}", test.len())?;
    writeln!(out, "accuracy: {}", format_fixed(result.report.accuracy, 5))?;
    writeln!(out, "loss: {}", format_fixed(result.loss, 5))?;
    writeln!(
        out,
        "majority baseline: {} ({})",
        format_fixed(baseline, 5),
        format_percent(baseline, 2)
    )?;
    let rendered = render_report(std::slice::from_ref(&result))?;
    create_dir(&args.out_dir)?;
    write_file(&args.out_dir.join(EVALUATION_TEXT_FILE), &rendered.text)?;
    write_file(&args.out_dir.join(EVALUATION_CSV_FILE), &rendered.csv)?;
    Ok(result)
}

/// Trains and evaluates one kind, writing its checkpoint and log.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    dataset: &LabeledDataset,
    manifest: &DatasetManifest,
) -> Result<(TrainOutcome, ExperimentResult)> {
    let data = experiment_data(cfg, kind, dataset, manifest)?;
    let outcome = train_experiment(cfg, kind, &data)?;
    write_train_outputs(&cfg.out_dir, kind, &outcome)?;
    let result = evaluate_model(kind.label(), &outcome.checkpoint, &data.test)?;
    Ok((outcome, result))
}

/// `reproduce` subcommand: the three experiments on one corpus, run on
/// separate threads and reported in a fixed order. When a run fails the
/// others still write their outputs and the report covers them.
pub fn reproduce(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<RenderedReport> {
    let (dataset, manifest) = load_corpus(cfg)?;
    create_dir(&cfg.out_dir)?;
    let runs: Vec<Result<(TrainOutcome, ExperimentResult)>> = std::thread::scope(|s| {
        let handles: Vec<_> = ExperimentKind::ALL
            .iter()
            .map(|&kind| {
                let (dataset, manifest) = (&dataset, &manifest);
                s.spawn(move || run_experiment(cfg, kind, dataset, manifest))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Domain("experiment thread panicked".into())))
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut first_error = None;
    for (kind, run) in ExperimentKind::ALL.iter().zip(runs) {
        match run {
            Ok((_, result)) => results.push(result),
            Err(e) => {
                log::error!("{kind} failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    if !results.is_empty() {
        let rendered = render_report(&results)?;
        write_file(&cfg.out_dir.join(REPORT_TEXT_FILE), &rendered.text)?;
        write_file(&cfg.out_dir.join(REPORT_CSV_FILE), &rendered.csv)?;
        out.write_all(rendered.text.as_bytes())?;
        if first_error.is_none() {
            return Ok(rendered);
        }
    }
    Err(first_error.expect("no results means at least one failure"))
}
