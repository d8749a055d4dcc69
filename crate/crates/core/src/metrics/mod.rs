//! Confusion matrices and the per-class scores derived from them.

mod render;

pub use render::{format_fixed, format_percent, render_report, ExperimentResult, RenderedReport};

use crate::error::{Error, Result};

/// Counts of (true class, predicted class) pairs; rows are true classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
    class_names: Vec<String>,
}

impl ConfusionMatrix {
    /// Builds a matrix from explicit row-major counts.
    pub fn from_counts(counts: Vec<Vec<u64>>, class_names: Vec<String>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::domain("confusion matrix needs at least one class"));
        }
        if counts.iter().any(|row| row.len() != k) {
            return Err(Error::domain("confusion matrix must be square"));
        }
        if class_names.len() != k {
            return Err(Error::DimensionMismatch {
                context: "confusion matrix class names",
                expected: k,
                actual: class_names.len(),
            });
        }
        Ok(ConfusionMatrix {
            k,
            counts: counts.into_iter().flatten().collect(),
            class_names,
        })
    }

    pub fn with_class_names(mut self, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() != self.k {
            return Err(Error::DimensionMismatch {
                context: "confusion matrix class names",
                expected: self.k,
                actual: class_names.len(),
            });
        }
        self.class_names = class_names;
        Ok(self)
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.k..(truth + 1) * self.k]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.row(truth).iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.k).map(|t| self.get(t, predicted)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }
}

/// Tallies `truth[i]`/`predicted[i]` pairs. Classes get default names
/// `class0`, `class1`, ...
pub fn confusion_matrix(truth: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "true vs predicted labels",
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if k == 0 {
        return Err(Error::domain("confusion matrix needs at least one class"));
    }
    let mut counts = vec![0u64; k * k];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= k || p >= k {
            return Err(Error::domain(format!(
                "label pair ({t}, {p}) out of range for {k} classes"
            )));
        }
        counts[t * k + p] += 1;
    }
    Ok(ConfusionMatrix {
        k,
        counts,
        class_names: (0..k).map(|c| format!("class{c}")).collect(),
    })
}

/// Per-class precision, recall and F1 plus overall accuracy.
///
/// A score whose denominator is zero is `None` (rendered as `NA`).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub class_names: Vec<String>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub f1: Vec<Option<f64>>,
    pub support: Vec<u64>,
    pub accuracy: f64,
}

pub fn class_report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::domain("cannot score an empty confusion matrix"));
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let k = cm.num_classes();
    let precision: Vec<_> = (0..k).map(|c| ratio(cm.get(c, c), cm.col_sum(c))).collect();
    let recall: Vec<_> = (0..k).map(|c| ratio(cm.get(c, c), cm.row_sum(c))).collect();
    let f1 = precision
        .iter()
        .zip(&recall)
        .map(|(p, r)| match (p, r) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        })
        .collect();
    Ok(ClassReport {
        class_names: cm.class_names().to_vec(),
        precision,
        recall,
        f1,
        support: (0..k).map(|c| cm.row_sum(c)).collect(),
        accuracy: cm.trace() as f64 / total as f64,
    })
}

/// Accuracy of always predicting the largest class.
pub fn majority_baseline(class_counts: &[u64]) -> Result<f64> {
    let total: u64 = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::domain(
            "majority baseline needs at least one example",
        ));
    }
    let max = *class_counts.iter().max().unwrap();
    Ok(max as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_and_off_diagonal() {
        let cm = confusion_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(cm.get(t, p), u64::from(t == p));
            }
        }
        let cm = confusion_matrix(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!(cm.row(0), &[0, 2]);
        assert_eq!(cm.row(1), &[0, 0]);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(confusion_matrix(&[0, 1], &[0], 2).is_err());
        assert!(confusion_matrix(&[0, 2], &[0, 1], 2).is_err());
        assert!(confusion_matrix(&[0], &[0], 0).is_err());
    }

    #[test]
    fn report_perfect() {
        let cm = ConfusionMatrix::from_counts(
            vec![vec![5, 0, 0], vec![0, 5, 0], vec![0, 0, 5]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let r = class_report(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for c in 0..3 {
            assert_eq!(r.precision[c], Some(1.0));
            assert_eq!(r.recall[c], Some(1.0));
            assert_eq!(r.f1[c], Some(1.0));
        }
    }

    #[test]
    fn report_two_by_two() {
        let cm = ConfusionMatrix::from_counts(
            vec![vec![8, 2], vec![3, 7]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let r = class_report(&cm).unwrap();
        assert!((r.precision[0].unwrap() - 8.0 / 11.0).abs() < 1e-15);
        assert!((r.precision[0].unwrap() - 0.727273).abs() < 1e-6);
        assert_eq!(r.recall[0], Some(0.8));
        assert_eq!(r.accuracy, 0.75);
        let (p, rc) = (r.precision[1].unwrap(), r.recall[1].unwrap());
        assert!((r.f1[1].unwrap() - 2.0 * p * rc / (p + rc)).abs() < 1e-12);
    }

    #[test]
    fn empty_column_gives_undefined_precision() {
        let cm = ConfusionMatrix::from_counts(
            vec![vec![3, 0], vec![4, 0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let r = class_report(&cm).unwrap();
        assert_eq!(r.precision[1], None);
        assert_eq!(r.recall[1], Some(0.0));
        assert_eq!(r.f1[1], None);
        let empty = ConfusionMatrix::from_counts(
            vec![vec![0, 0], vec![0, 0]],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(class_report(&empty).is_err());
    }

    #[test]
    fn baseline_examples() {
        let b = majority_baseline(&[2501, 2499, 21875]).unwrap();
        assert_eq!(b, 21875.0 / 26875.0);
        assert!((b - 0.8139).abs() < 1e-4);
        assert_eq!(majority_baseline(&[1, 1]).unwrap(), 0.5);
        assert_eq!(majority_baseline(&[10, 0, 0]).unwrap(), 1.0);
        assert!(majority_baseline(&[0, 0]).is_err());
        assert!(majority_baseline(&[]).is_err());
    }

    fn labels(k: usize, n: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (
            proptest::collection::vec(0..k, n),
            proptest::collection::vec(0..k, n),
        )
    }

    proptest! {
        #[test]
        fn accuracy_equals_weighted_recall((t, p) in labels(4, 200)) {
            let cm = confusion_matrix(&t, &p, 4).unwrap();
            let r = class_report(&cm).unwrap();
            let total = cm.total() as f64;
            let weighted: f64 = (0..4)
                .filter_map(|c| r.recall[c].map(|rc| rc * cm.row_sum(c) as f64 / total))
                .sum();
            prop_assert!((r.accuracy - weighted).abs() < 1e-12);
            prop_assert_eq!(cm.total(), 200);
        }

        #[test]
        fn order_invariant((t, p) in labels(3, 60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut pairs: Vec<_> = t.iter().copied().zip(p.iter().copied()).collect();
            pairs.shuffle(&mut crate::seed::rng_from_seed(seed));
            let (t2, p2): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            prop_assert_eq!(confusion_matrix(&t, &p, 3).unwrap(), confusion_matrix(&t2, &p2, 3).unwrap());
        }

        #[test]
        fn report_is_equivariant_under_relabeling((t, p) in labels(4, 80), perm in Just([2usize, 0, 3, 1])) {
            let base = class_report(&confusion_matrix(&t, &p, 4).unwrap()).unwrap();
            let t2: Vec<_> = t.iter().map(|&c| perm[c]).collect();
            let p2: Vec<_> = p.iter().map(|&c| perm[c]).collect();
            let moved = class_report(&confusion_matrix(&t2, &p2, 4).unwrap()).unwrap();
            prop_assert_eq!(base.accuracy, moved.accuracy);
            for (c, &q) in perm.iter().enumerate() {
                prop_assert_eq!(base.precision[c], moved.precision[q]);
                prop_assert_eq!(base.recall[c], moved.recall[q]);
                prop_assert_eq!(base.f1[c], moved.f1[q]);
            }
        }
    }
}
