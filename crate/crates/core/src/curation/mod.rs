//! Building the auxiliary-class dataset: synset parsing and breed exclusion,
//! per-class train/test splitting, ratio enforcement, preprocessing and a
//! synthetic stand-in corpus.

mod dataset;
mod manifest;
mod preprocess;
mod synset;
mod synthetic;

pub use dataset::LabeledDataset;
pub use manifest::{assign_split, enforce_ratio, DatasetManifest, ManifestRecord, Split};
pub use preprocess::{
    one_hot, resize_image, scale_pixels, unscale_pixels, Image, DEFAULT_IMAGE_SIZE,
};
pub use synset::{
    build_exclusion_set, match_key, normalize_breed_name, parse_name_list, parse_synset_mapping,
    ExclusionList, ExclusionOutcome, SynsetEntry, DEFAULT_CAT_BREEDS,
};
pub use synthetic::{generate_synthetic_dataset, SyntheticCorpus, SyntheticSpec};

use crate::error::{Error, Result};

/// A feature vector in `[-1, 1]` with its class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: usize) -> Result<Self> {
        if let Some(v) = features.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("feature {v} outside [-1, 1]")));
        }
        Ok(LabeledExample { features, label })
    }
}

pub(crate) fn validate_class_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::domain("at least one class name is required"));
    }
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() || name.contains([',', '\n', '\r', '"']) || name.starts_with('#') {
            return Err(Error::domain(format!("invalid class name '{name}'")));
        }
        if names[..i].contains(name) {
            return Err(Error::domain(format!("duplicate class name '{name}'")));
        }
    }
    Ok(())
}
