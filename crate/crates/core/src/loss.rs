//! Categorical cross-entropy and its class-weighted variant.
//!
//! The weighted loss treats every class as an independent positive/negative
//! decision. For one example with one-hot target `y` and probabilities `p`:
//!
//! ```text
//! L = -Σ_c ( w_p[c]·y[c]·ln(p[c] + ε) + w_n[c]·(1 - y[c])·ln(1 - p[c] + ε) )
//! ```
//!
//! Per-example losses are summed over classes and averaged over a batch.

use crate::error::{check_len, Error, Result};

/// Stabilizer added inside every logarithm.
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// Per-class positive and negative weights for the weighted loss.
///
/// Always satisfies `negative[c] == 1 - positive[c]` and `0 < positive[c] < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    positive: Vec<f64>,
    negative: Vec<f64>,
}

impl ClassWeights {
    /// Builds weights from explicit positive weights; negatives are `1 - w_p`.
    pub fn from_positive(positive: Vec<f64>) -> Result<Self> {
        if positive.len() < 2 {
            return Err(Error::domain(format!(
                "class weights need at least 2 classes, got {}",
                positive.len()
            )));
        }
        if let Some(w) = positive.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
            return Err(Error::domain(format!(
                "positive weight {w} is outside (0, 1)"
            )));
        }
        let negative = positive.iter().map(|w| 1.0 - w).collect();
        Ok(ClassWeights { positive, negative })
    }

    /// Builds a weight pair without the `(0, 1)` and complement checks.
    ///
    /// Only useful for probing the loss algebra (e.g. uniformly scaled
    /// weights); never produced by [`compute_class_weights`].
    pub fn from_raw(positive: Vec<f64>, negative: Vec<f64>) -> Result<Self> {
        check_len("class weights", positive.len(), negative.len())?;
        if positive.len() < 2 {
            return Err(Error::domain("class weights need at least 2 classes"));
        }
        if positive.iter().chain(&negative).any(|w| !w.is_finite()) {
            return Err(Error::domain("class weights must be finite"));
        }
        Ok(ClassWeights { positive, negative })
    }

    pub fn positive(&self) -> &[f64] {
        &self.positive
    }

    pub fn negative(&self) -> &[f64] {
        &self.negative
    }

    pub fn num_classes(&self) -> usize {
        self.positive.len()
    }
}

/// Derives weights from per-class size ratios: `w_p[c] = (T - r[c]) / T`
/// with `T = Σ r`, so larger classes receive smaller positive weights.
///
/// The result depends only on the proportions of `ratios`.
pub fn compute_class_weights(ratios: &[f64]) -> Result<ClassWeights> {
    if ratios.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 class ratios, got {}",
            ratios.len()
        )));
    }
    if let Some(r) = ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::domain(format!("class ratio {r} is not positive")));
    }
    let total: f64 = ratios.iter().sum();
    let positive = ratios.iter().map(|r| (total - r) / total).collect();
    ClassWeights::from_positive(positive)
}

/// A one-hot target vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OneHotLabel {
    label: usize,
    num_classes: usize,
}

impl OneHotLabel {
    pub fn new(label: usize, num_classes: usize) -> Result<Self> {
        if label >= num_classes {
            return Err(Error::domain(format!(
                "label {label} out of range for {num_classes} classes"
            )));
        }
        Ok(OneHotLabel { label, num_classes })
    }

    /// Accepts a dense vector with exactly one `1.0` and zeros elsewhere.
    pub fn from_dense(y: &[f64]) -> Result<Self> {
        let mut hot = None;
        for (i, &v) in y.iter().enumerate() {
            if v == 1.0 {
                if hot.replace(i).is_some() {
                    return Err(Error::domain("one-hot vector has several ones"));
                }
            } else if v != 0.0 {
                return Err(Error::domain(format!("one-hot entry {v} is not 0 or 1")));
            }
        }
        let label = hot.ok_or_else(|| Error::domain("one-hot vector has no one"))?;
        OneHotLabel::new(label, y.len())
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.num_classes];
        y[self.label] = 1.0;
        y
    }

    fn is_hot(&self, c: usize) -> bool {
        c == self.label
    }
}

/// Class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction(Vec<f64>);

impl Prediction {
    /// Wraps raw probabilities; every entry must lie in `[0, 1]`.
    ///
    /// The entries are not required to sum to one so that each coordinate can
    /// be perturbed independently when checking gradients.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(v) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::domain(format!("probability {v} outside [0, 1]")));
        }
        Ok(Prediction(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest probability; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    epsilon: f64,
}

impl LossConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(LossConfig { epsilon })
    }

    /// A config with no stabilizer. Only meaningful for strictly interior
    /// probabilities; used to compare against closed-form values.
    pub fn unstabilized() -> Self {
        LossConfig { epsilon: 0.0 }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

fn check_dims(p: &Prediction, y: &OneHotLabel) -> Result<()> {
    check_len("prediction vs label", y.num_classes(), p.len())
}

fn check_weights(p: &Prediction, w: &ClassWeights) -> Result<()> {
    check_len("prediction vs class weights", w.num_classes(), p.len())
}

/// Weighted categorical cross-entropy for a single example.
pub fn wcce_loss(
    p: &Prediction,
    y: &OneHotLabel,
    w: &ClassWeights,
    cfg: &LossConfig,
) -> Result<f64> {
    check_dims(p, y)?;
    check_weights(p, w)?;
    let eps = cfg.epsilon;
    let loss =
        p.0.iter()
            .enumerate()
            .map(|(c, &pc)| {
                // Only one branch has a nonzero coefficient, which keeps
                // ln(0) out of the sum when eps is 0 and pc is at an endpoint.
                if y.is_hot(c) {
                    -w.positive[c] * (pc + eps).ln()
                } else {
                    -w.negative[c] * (1.0 - pc + eps).ln()
                }
            })
            .sum();
    Ok(loss)
}

/// Derivative of [`wcce_loss`] with respect to each probability.
pub fn wcce_grad(
    p: &Prediction,
    y: &OneHotLabel,
    w: &ClassWeights,
    cfg: &LossConfig,
) -> Result<Vec<f64>> {
    check_dims(p, y)?;
    check_weights(p, w)?;
    let eps = cfg.epsilon;
    Ok(p.0
        .iter()
        .enumerate()
        .map(|(c, &pc)| {
            if y.is_hot(c) {
                -w.positive[c] / (pc + eps)
            } else {
                w.negative[c] / (1.0 - pc + eps)
            }
        })
        .collect())
}

/// Plain categorical cross-entropy for a single example.
pub fn cce_loss(p: &Prediction, y: &OneHotLabel, cfg: &LossConfig) -> Result<f64> {
    check_dims(p, y)?;
    Ok(-(p.0[y.label] + cfg.epsilon).ln())
}

pub fn cce_grad(p: &Prediction, y: &OneHotLabel, cfg: &LossConfig) -> Result<Vec<f64>> {
    check_dims(p, y)?;
    let mut g = vec![0.0; p.len()];
    g[y.label] = -1.0 / (p.0[y.label] + cfg.epsilon);
    Ok(g)
}

/// Numerically stable softmax (the maximum logit is subtracted first).
pub fn softmax(logits: &[f64]) -> Result<Prediction> {
    if logits.len() < 2 {
        return Err(Error::domain(format!(
            "softmax needs at least 2 logits, got {}",
            logits.len()
        )));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::domain("softmax input contains a non-finite logit"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(Prediction(out))
}

/// The training objective: plain or class-weighted cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub enum Loss {
    Categorical,
    Weighted(ClassWeights),
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Categorical => "cce",
            Loss::Weighted(_) => "wcce",
        }
    }

    pub fn value(&self, p: &Prediction, y: &OneHotLabel, cfg: &LossConfig) -> Result<f64> {
        match self {
            Loss::Categorical => cce_loss(p, y, cfg),
            Loss::Weighted(w) => wcce_loss(p, y, w, cfg),
        }
    }

    pub fn grad(&self, p: &Prediction, y: &OneHotLabel, cfg: &LossConfig) -> Result<Vec<f64>> {
        match self {
            Loss::Categorical => cce_grad(p, y, cfg),
            Loss::Weighted(w) => wcce_grad(p, y, w, cfg),
        }
    }

    /// Mean over the batch of per-example losses.
    pub fn batch_mean<'a, I>(&self, pairs: I, cfg: &LossConfig) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a Prediction, &'a OneHotLabel)>,
    {
        let mut total = 0.0;
        let mut n = 0usize;
        for (p, y) in pairs {
            total += self.value(p, y, cfg)?;
            n += 1;
        }
        if n == 0 {
            return Err(Error::domain("cannot average the loss of an empty batch"));
        }
        Ok(total / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pred(p: &[f64]) -> Prediction {
        Prediction::new(p.to_vec()).unwrap()
    }

    fn hot(label: usize, k: usize) -> OneHotLabel {
        OneHotLabel::new(label, k).unwrap()
    }

    #[test]
    fn weights_from_auxiliary_ratio() {
        let w = compute_class_weights(&[1.0, 1.0, 8.75]).unwrap();
        let expected = [0.906976744, 0.906976744, 0.186046511];
        for (got, want) in w.positive().iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        for (p, n) in w.positive().iter().zip(w.negative()) {
            assert_eq!(*n, 1.0 - p);
        }
    }

    #[test]
    fn weights_small_cases() {
        assert_eq!(
            compute_class_weights(&[1.0, 1.0]).unwrap().positive(),
            &[0.5, 0.5]
        );
        assert_eq!(
            compute_class_weights(&[1.0, 3.0]).unwrap().positive(),
            &[0.75, 0.25]
        );
    }

    #[test]
    fn weights_reject_bad_ratios() {
        assert!(compute_class_weights(&[1.0]).is_err());
        assert!(compute_class_weights(&[]).is_err());
        assert!(compute_class_weights(&[1.0, 0.0]).is_err());
        assert!(compute_class_weights(&[1.0, -2.0]).is_err());
        assert!(compute_class_weights(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn wcce_perfect_prediction_is_near_zero() {
        let w = compute_class_weights(&[1.0, 1.0, 8.75]).unwrap();
        let cfg = LossConfig::default();
        for label in 0..3 {
            let y = hot(label, 3);
            let p = pred(&y.to_dense());
            let l = wcce_loss(&p, &y, &w, &cfg).unwrap();
            assert!(l.abs() < 1e-6, "{l}");
        }
    }

    #[test]
    fn wcce_hand_values() {
        let w = ClassWeights::from_positive(vec![0.9, 0.2]).unwrap();
        let l = wcce_loss(
            &pred(&[0.7, 0.3]),
            &hot(0, 2),
            &w,
            &LossConfig::unstabilized(),
        )
        .unwrap();
        // mpmath at 30 digits: 0.606347404695845044...
        assert!((l - 0.606_347_404_695_845).abs() < 1e-12, "{l}");
        assert!((l - (-1.7 * 0.7f64.ln())).abs() < 1e-12);

        let w = ClassWeights::from_positive(vec![0.5, 0.5]).unwrap();
        let l = wcce_loss(
            &pred(&[0.5, 0.5]),
            &hot(0, 2),
            &w,
            &LossConfig::unstabilized(),
        )
        .unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn cce_hand_values() {
        let cfg = LossConfig::default();
        let y = hot(1, 3);
        assert!(cce_loss(&pred(&y.to_dense()), &y, &cfg).unwrap().abs() < 1e-6);
        let third = 1.0 / 3.0;
        let l = cce_loss(&pred(&[third; 3]), &hot(2, 3), &cfg).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-6);
        let l = cce_loss(&pred(&[0.2, 0.8]), &hot(1, 2), &LossConfig::unstabilized()).unwrap();
        assert!((l - 0.223_143_551).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let w = compute_class_weights(&[1.0, 1.0, 1.0]).unwrap();
        let cfg = LossConfig::default();
        let p = pred(&[0.5, 0.5]);
        assert!(wcce_loss(&p, &hot(0, 3), &w, &cfg).is_err());
        assert!(wcce_loss(&p, &hot(0, 2), &w, &cfg).is_err());
        assert!(wcce_grad(&p, &hot(0, 2), &w, &cfg).is_err());
        assert!(cce_loss(&p, &hot(0, 3), &cfg).is_err());
    }

    #[test]
    fn wcce_grad_closed_form() {
        let w = ClassWeights::from_positive(vec![0.5, 0.5]).unwrap();
        let g = wcce_grad(
            &pred(&[0.5, 0.5]),
            &hot(0, 2),
            &w,
            &LossConfig::unstabilized(),
        )
        .unwrap();
        assert_eq!(g, vec![-1.0, 1.0]);
    }

    #[test]
    fn wcce_grad_finite_at_endpoints() {
        let w = compute_class_weights(&[1.0, 1.0, 8.75]).unwrap();
        let g = wcce_grad(
            &pred(&[1.0, 0.0, 0.0]),
            &hot(0, 3),
            &w,
            &LossConfig::default(),
        )
        .unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for v in p.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let a = 0.37;
        let p = softmax(&[a, a + 3f64.ln()]).unwrap();
        assert!((p.as_slice()[0] - 0.25).abs() < 1e-12);
        assert!((p.as_slice()[1] - 0.75).abs() < 1e-12);
        let p = softmax(&[1000.0, 0.0]).unwrap();
        assert!((p.as_slice()[0] - 1.0).abs() < 1e-12);
        assert!(p.as_slice()[1] < 1e-300);
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(softmax(&[1.0]).is_err());
        assert!(softmax(&[1.0, f64::INFINITY]).is_err());
        assert!(softmax(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn one_hot_parsing() {
        assert_eq!(
            OneHotLabel::from_dense(&[0.0, 1.0, 0.0]).unwrap().label(),
            1
        );
        assert!(OneHotLabel::from_dense(&[1.0, 1.0]).is_err());
        assert!(OneHotLabel::from_dense(&[0.0, 0.0]).is_err());
        assert!(OneHotLabel::from_dense(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn argmax_ties_pick_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0, 1.0, 1.0]), 0);
    }

    // Independent oracle: per-class binary cross-entropy, written out by hand.
    fn bce_sum(p: &[f64], y: &[f64]) -> f64 {
        p.iter()
            .zip(y)
            .map(|(&p, &y)| -(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
            .sum()
    }

    fn interior_probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.02f64..0.98, k)
    }

    proptest! {
        #[test]
        fn weights_are_scale_invariant(
            ratios in proptest::collection::vec(0.01f64..100.0, 2..8),
            k in 1e-3f64..1e3,
        ) {
            let a = compute_class_weights(&ratios).unwrap();
            let scaled: Vec<f64> = ratios.iter().map(|r| r * k).collect();
            let b = compute_class_weights(&scaled).unwrap();
            for (x, y) in a.positive().iter().zip(b.positive()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            for (p, n) in b.positive().iter().zip(b.negative()) {
                prop_assert_eq!(*n, 1.0 - p);
                prop_assert!(*p > 0.0 && *p < 1.0);
            }
        }

        #[test]
        fn half_weights_equal_half_bce(p in interior_probs(4), label in 0usize..4) {
            let y = hot(label, 4);
            let w = ClassWeights::from_positive(vec![0.5; 4]).unwrap();
            let l = wcce_loss(&pred(&p), &y, &w, &LossConfig::unstabilized()).unwrap();
            prop_assert!((l - 0.5 * bce_sum(&p, &y.to_dense())).abs() < 1e-12);
        }

        #[test]
        fn wcce_decreases_in_true_class_probability(
            p in interior_probs(3),
            bump in 0.001f64..0.5,
            ratios in proptest::collection::vec(0.1f64..10.0, 3),
        ) {
            let w = compute_class_weights(&ratios).unwrap();
            let y = hot(0, 3);
            let cfg = LossConfig::default();
            let mut q = p.clone();
            q[0] = (p[0] + bump).min(1.0);
            let lp = wcce_loss(&pred(&p), &y, &w, &cfg).unwrap();
            let lq = wcce_loss(&pred(&q), &y, &w, &cfg).unwrap();
            prop_assert!(lq <= lp);
        }

        #[test]
        fn cce_nonnegative_and_zero_only_at_certainty(p in interior_probs(3), label in 0usize..3) {
            let y = hot(label, 3);
            let cfg = LossConfig::unstabilized();
            let l = cce_loss(&pred(&p), &y, &cfg).unwrap();
            prop_assert!(l > 0.0);
            let exact = pred(&y.to_dense());
            prop_assert_eq!(cce_loss(&exact, &y, &cfg).unwrap(), 0.0);
        }

        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            z in proptest::collection::vec(-50f64..50.0, 2..10),
            shift in -100f64..100.0,
        ) {
            let p = softmax(&z).unwrap();
            prop_assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
