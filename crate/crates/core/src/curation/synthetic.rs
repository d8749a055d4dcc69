//! Synthetic stand-in corpus: Gaussian blobs for the known classes and a
//! dispersed auxiliary class around them.
//!
//! Known class `c` of `m` sits on a circle in the first two feature
//! dimensions, with adjacent centers `separation · sigma` apart. The
//! auxiliary (last) class mixes two populations: uniform background over
//! `[-1, 1]^dim` and a noisy ring enclosing all blobs. Auxiliary samples that
//! fall within the guard radius `sigma · (sqrt(dim) + 2.5)` of a known center
//! are redrawn, which keeps the known classes separable from the background.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{assign_split, validate_class_names, DatasetManifest, LabeledDataset};
use super::{LabeledExample, ManifestRecord};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, StageRng};

const GUARD_SIGMAS: f64 = 2.5;
const MAX_REDRAWS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Known classes first; the last class is the auxiliary one.
    pub class_names: Vec<String>,
    pub counts: Vec<usize>,
    pub dim: usize,
    pub sigma: f64,
    /// Distance between adjacent known-class centers, in units of `sigma`.
    pub separation: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Two known classes and an auxiliary class at `1 : 1 : 8.75`.
    pub fn cat_dog_others(per_known_class: usize, seed: u64) -> Self {
        SyntheticSpec {
            class_names: vec!["cat".into(), "dog".into(), "others".into()],
            counts: vec![
                per_known_class,
                per_known_class,
                (per_known_class as f64 * 8.75).round() as usize,
            ],
            dim: 2,
            sigma: 0.1,
            separation: 4.0,
            train_fraction: 0.8,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_class_names(&self.class_names)?;
        if self.class_names.len() < 2 {
            return Err(Error::domain(
                "need at least one known class and the auxiliary class",
            ));
        }
        if self.counts.len() != self.class_names.len() {
            return Err(Error::DimensionMismatch {
                context: "synthetic class counts",
                expected: self.class_names.len(),
                actual: self.counts.len(),
            });
        }
        if self.counts.contains(&0) {
            return Err(Error::domain("every class needs at least one example"));
        }
        if self.dim == 0 {
            return Err(Error::domain("feature dimension must be positive"));
        }
        if self.class_names.len() > 3 && self.dim < 2 {
            return Err(Error::domain(
                "more than two known classes need at least 2 dimensions",
            ));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain("sigma must be positive"));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::domain("separation must be positive"));
        }
        Ok(())
    }

    fn known_classes(&self) -> usize {
        self.class_names.len() - 1
    }

    fn centers(&self) -> Vec<Vec<f64>> {
        let m = self.known_classes();
        let radius = if m == 1 {
            0.0
        } else {
            self.separation * self.sigma / (2.0 * (std::f64::consts::PI / m as f64).sin())
        };
        (0..m)
            .map(|c| {
                let angle = 2.0 * std::f64::consts::PI * c as f64 / m as f64;
                let mut center = vec![0.0; self.dim];
                center[0] = radius * angle.cos();
                if self.dim > 1 {
                    center[1] = radius * angle.sin();
                }
                center
            })
            .collect()
    }

    fn guard_radius(&self) -> f64 {
        self.sigma * ((self.dim as f64).sqrt() + GUARD_SIGMAS)
    }
}

/// Output of [`generate_synthetic_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub dataset: LabeledDataset,
    pub manifest: DatasetManifest,
}

pub fn generate_synthetic_dataset(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = rng_from_seed(derive_seed(spec.seed, "synthetic/features"));
    let centers = spec.centers();
    let guard = spec.guard_radius();
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| Error::domain(e.to_string()))?;
    let aux = spec.known_classes();

    let mut ids = Vec::new();
    let mut examples = Vec::new();
    let mut records = Vec::new();
    for (label, &count) in spec.counts.iter().enumerate() {
        for i in 0..count {
            let features = if label < aux {
                centers[label]
                    .iter()
                    .map(|c| (c + noise.sample(&mut rng)).clamp(-1.0, 1.0))
                    .collect()
            } else if i < count - count / 2 {
                redraw(&centers, guard, || background(&mut rng, spec.dim))?
            } else {
                let ring_radius =
                    centers.first().map_or(0.0, |c| norm(c)) + guard + 2.0 * spec.sigma;
                redraw(&centers, guard, || {
                    ring(&mut rng, spec, ring_radius, &noise)
                })?
            };
            let id = format!("syn-{}-{i:06}", spec.class_names[label]);
            ids.push(id.clone());
            examples.push(LabeledExample::new(features, label)?);
            records.push(ManifestRecord::unsplit(id, label));
        }
    }

    let dataset = LabeledDataset::new(spec.class_names.len(), spec.dim, ids, examples)?;
    let manifest = assign_split(
        spec.class_names.clone(),
        records,
        spec.train_fraction,
        derive_seed(spec.seed, "synthetic/split"),
    )?;
    Ok(SyntheticCorpus { dataset, manifest })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn redraw(
    centers: &[Vec<f64>],
    guard: f64,
    mut draw: impl FnMut() -> Vec<f64>,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REDRAWS {
        let x = draw();
        if centers.iter().all(|c| distance(c, &x) >= guard) {
            return Ok(x);
        }
    }
    Err(Error::domain(
        "guard regions cover the feature cube; reduce sigma or separation",
    ))
}

fn background(rng: &mut StageRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn ring(rng: &mut StageRng, spec: &SyntheticSpec, radius: f64, noise: &Normal<f64>) -> Vec<f64> {
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let r = radius + 0.5 * noise.sample(rng);
    let mut x: Vec<f64> = (0..spec.dim).map(|_| noise.sample(rng)).collect();
    x[0] = r * angle.cos();
    if spec.dim > 1 {
        x[1] = r * angle.sin();
    }
    x.iter().map(|v| v.clamp(-1.0, 1.0)).collect()
}
