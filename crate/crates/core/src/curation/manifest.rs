//! Dataset manifests and the split/ratio operations over them.
//!
//! File format (UTF-8, comma separated):
//!
//! ```text
//! # classes: cat,dog,others
//! example_id,class_name,source_synset,split
//! img-0001,cat,,train
//! n01440764_18,others,n01440764,test
//! ```
//!
//! The first line fixes the class index order. An empty `source_synset`
//! means none.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};

use super::validate_class_names;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

const CLASSES_PREFIX: &str = "# classes: ";
const HEADER: [&str; 4] = ["example_id", "class_name", "source_synset", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub const ALL: [Split; 2] = [Split::Train, Split::Test];
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::domain(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub example_id: String,
    pub class_label: usize,
    pub source_synset: Option<String>,
    pub split: Split,
}

impl ManifestRecord {
    /// A record not yet assigned to a split (it defaults to train).
    pub fn unsplit(example_id: impl Into<String>, class_label: usize) -> Self {
        ManifestRecord {
            example_id: example_id.into(),
            class_label,
            source_synset: None,
            split: Split::Train,
        }
    }

    pub fn with_synset(mut self, synset: impl Into<String>) -> Self {
        self.source_synset = Some(synset.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    class_names: Vec<String>,
    records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn new(class_names: Vec<String>, records: Vec<ManifestRecord>) -> Result<Self> {
        validate_class_names(&class_names)?;
        for r in &records {
            if r.class_label >= class_names.len() {
                return Err(Error::domain(format!(
                    "record '{}' has class index {} but only {} classes exist",
                    r.example_id,
                    r.class_label,
                    class_names.len()
                )));
            }
            if r.example_id.is_empty() {
                return Err(Error::domain("record with an empty example id"));
            }
        }
        Ok(DatasetManifest {
            class_names,
            records,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn records(&self) -> &[ManifestRecord] {
        &self.records
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|n| n == name)
    }

    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Per-class record counts within `split`.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for r in self.split_records(split) {
            counts[r.class_label] += 1;
        }
        counts
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CLASSES_PREFIX}{}", self.class_names.join(","))?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.records {
            w.write_record([
                r.example_id.as_str(),
                self.class_names[r.class_label].as_str(),
                r.source_synset.as_deref().unwrap_or(""),
                &r.split.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        input.read_line(&mut first)?;
        let class_names: Vec<String> = first
            .trim_end_matches(['\n', '\r'])
            .strip_prefix(CLASSES_PREFIX)
            .ok_or_else(|| Error::parse(1, format!("expected '{CLASSES_PREFIX}...'")))?
            .split(',')
            .map(str::to_string)
            .collect();
        validate_class_names(&class_names).map_err(|e| Error::parse(1, e.to_string()))?;

        let mut rdr = csv::ReaderBuilder::new().from_reader(input);
        if rdr.headers()?.iter().ne(HEADER) {
            return Err(Error::parse(
                2,
                format!("expected header '{}'", HEADER.join(",")),
            ));
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            // Data rows start on file line 3.
            let line = row.position().map_or(0, |p| p.line() as usize + 1);
            let bad = |msg: String| Error::parse(line, msg);
            let class_name = &row[1];
            let class_label = class_names
                .iter()
                .position(|n| n == class_name)
                .ok_or_else(|| bad(format!("unknown class '{class_name}'")))?;
            records.push(ManifestRecord {
                example_id: row[0].to_string(),
                class_label,
                source_synset: (!row[2].is_empty()).then(|| row[2].to_string()),
                split: row[3].parse().map_err(|e: Error| bad(e.to_string()))?,
            });
        }
        DatasetManifest::new(class_names, records)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
        self.write(std::io::BufWriter::new(file))
            .map_err(|e| e.in_file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        DatasetManifest::read(file).map_err(|e| e.in_file(path))
    }
}

/// Assigns each class's records to train/test: `round(n_c · train_fraction)`
/// records (half away from zero) of every class go to train, chosen by a
/// seeded shuffle. Record order is preserved.
pub fn assign_split(
    class_names: Vec<String>,
    records: Vec<ManifestRecord>,
    train_fraction: f64,
    seed: u64,
) -> Result<DatasetManifest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if records.is_empty() {
        return Err(Error::domain("cannot split an empty record list"));
    }
    let mut manifest = DatasetManifest::new(class_names, records)?;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); manifest.num_classes()];
    for (i, r) in manifest.records.iter().enumerate() {
        by_class[r.class_label].push(i);
    }
    let mut rng = rng_from_seed(seed);
    for mut members in by_class {
        let n_train = (members.len() as f64 * train_fraction).round() as usize;
        members.shuffle(&mut rng);
        for (rank, i) in members.into_iter().enumerate() {
            manifest.records[i].split = if rank < n_train {
                Split::Train
            } else {
                Split::Test
            };
        }
    }
    Ok(manifest)
}

/// Subsamples over-represented classes so that, within each split, class
/// counts follow `ratios`.
///
/// The anchor is the class with the smallest `count / ratio`; every other
/// class keeps `round(anchor_count · ratio_c / ratio_anchor)` records,
/// drawn without replacement. Classes are never grown, and empty splits are
/// left alone.
pub fn enforce_ratio(
    manifest: &DatasetManifest,
    ratios: &[f64],
    seed: u64,
) -> Result<DatasetManifest> {
    let k = manifest.num_classes();
    if ratios.len() != k {
        return Err(Error::DimensionMismatch {
            context: "class ratios",
            expected: k,
            actual: ratios.len(),
        });
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::domain(format!("class ratio {r} is not positive")));
    }

    let mut keep = vec![true; manifest.records.len()];
    let mut rng = rng_from_seed(seed);
    for split in Split::ALL {
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, r) in manifest.records.iter().enumerate() {
            if r.split == split {
                members[r.class_label].push(i);
            }
        }
        if members.iter().all(Vec::is_empty) {
            continue;
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::domain(format!(
                "class '{}' has no {split} records",
                manifest.class_names[c]
            )));
        }
        let anchor = (0..k)
            .min_by(|&a, &b| {
                let qa = members[a].len() as f64 / ratios[a];
                let qb = members[b].len() as f64 / ratios[b];
                qa.total_cmp(&qb)
            })
            .unwrap();
        let anchor_count = members[anchor].len() as f64;
        for (c, idx) in members.iter().enumerate() {
            let target =
                ((anchor_count * ratios[c] / ratios[anchor]).round() as usize).min(idx.len());
            if target == idx.len() {
                continue;
            }
            let mut chosen = vec![false; idx.len()];
            for j in index::sample(&mut rng, idx.len(), target) {
                chosen[j] = true;
            }
            for (&i, kept) in idx.iter().zip(chosen) {
                keep[i] = kept;
            }
        }
    }

    let records = manifest
        .records
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(DatasetManifest {
        class_names: manifest.class_names.clone(),
        records,
    })
}
