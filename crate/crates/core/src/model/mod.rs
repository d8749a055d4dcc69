//! A small fully connected classifier with a softmax head, trained by
//! minibatch SGD with hand-derived backpropagation.

mod checkpoint;
mod matrix;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use matrix::Matrix;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::curation::LabeledExample;
use crate::error::{check_len, Error, Result};
use crate::loss::{softmax, Loss, LossConfig, OneHotLabel, Prediction};
use crate::seed::rng_from_seed;

/// Hidden-layer nonlinearity. The output layer is always softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::domain(format!("unknown activation '{other}'"))),
        }
    }
}

/// One affine layer. `weights` is `fan_in × fan_out`, so the layer computes
/// `z[j] = Σ_i x[i]·weights[i][j] + bias[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.as_slice().iter().chain(&self.bias)
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.as_mut_slice().iter_mut().chain(&mut self.bias)
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.weights.shape() == other.weights.shape() && self.bias.len() == other.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    activation: Activation,
}

/// Intermediate values from [`MlpModel::forward`], consumed by
/// [`MlpModel::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the feature vector.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pre_activations: Vec<Vec<f64>>,
    prediction: Prediction,
}

impl ForwardCache {
    pub fn prediction(&self) -> &Prediction {
        &self.prediction
    }
}

/// Parameter gradients, laid out exactly like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.rows(), l.weights.cols()))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// All entries in canonical parameter order (see [`MlpModel::parameters`]).
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        self.check_shape(&other.layers)?;
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.values_mut().for_each(|g| *g *= factor);
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|g| g * g).sum::<f64>().sqrt()
    }

    fn check_shape(&self, layers: &[Layer]) -> Result<()> {
        check_len("gradient layer count", layers.len(), self.layers.len())?;
        if self.layers.iter().zip(layers).all(|(a, b)| a.same_shape(b)) {
            Ok(())
        } else {
            Err(Error::domain("gradient shapes do not match the model"))
        }
    }
}

impl MlpModel {
    /// Creates a model with zero biases and weights drawn from
    /// `U(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`, using `seed`.
    pub fn init(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = rng_from_seed(seed);
        let layers = layer_dims
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Layer::zeros(fan_in, fan_out);
                for w in layer.weights.as_mut_slice() {
                    *w = rng.random_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(MlpModel {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation,
        })
    }

    /// Assembles a model from explicit layers, checking that shapes chain.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::domain("a model needs at least one layer"));
        }
        let mut dims = vec![layers[0].weights.rows()];
        for layer in &layers {
            check_len(
                "layer input width",
                *dims.last().unwrap(),
                layer.weights.rows(),
            )?;
            check_len("layer bias length", layer.weights.cols(), layer.bias.len())?;
            dims.push(layer.weights.cols());
        }
        validate_dims(&dims)?;
        if layers
            .iter()
            .flat_map(Layer::values)
            .any(|v| !v.is_finite())
        {
            return Err(Error::domain("model parameters must be finite"));
        }
        Ok(MlpModel {
            layer_dims: dims,
            layers,
            activation,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Bias of the output layer; logits shift with it.
    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        &mut self.layers.last_mut().unwrap().bias
    }

    /// Every parameter in canonical order: layer by layer, weights row-major
    /// followed by the bias.
    pub fn parameters(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(Layer::values)
    }

    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(Layer::values_mut)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, features: &[f64]) -> Result<ForwardCache> {
        check_len("model input", self.input_dim(), features.len())?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = features.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.weights.vec_mul(&current, &layer.bias);
            let next = if i == last {
                Vec::new()
            } else {
                z.iter().map(|v| self.activation.apply(*v)).collect()
            };
            inputs.push(std::mem::replace(&mut current, next));
            pre_activations.push(z);
        }
        let prediction = softmax(pre_activations.last().unwrap())?;
        Ok(ForwardCache {
            inputs,
            pre_activations,
            prediction,
        })
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Prediction> {
        Ok(self.forward(features)?.prediction)
    }

    /// Index of the most probable class; ties go to the lowest index.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(features)?.argmax())
    }

    /// Gradient of the single-example loss with respect to every parameter.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        target: &OneHotLabel,
        loss: &Loss,
        cfg: &LossConfig,
    ) -> Result<Gradients> {
        check_len("forward cache depth", self.layers.len(), cache.inputs.len())?;
        for (layer, (input, z)) in self
            .layers
            .iter()
            .zip(cache.inputs.iter().zip(&cache.pre_activations))
        {
            check_len("forward cache input", layer.weights.rows(), input.len())?;
            check_len("forward cache output", layer.weights.cols(), z.len())?;
        }
        check_len("target classes", self.num_classes(), target.num_classes())?;

        let p = cache.prediction.as_slice();
        let dl_dp = loss.grad(&cache.prediction, target, cfg)?;
        // Softmax Jacobian-vector product: dz_k = p_k (g_k - Σ_j g_j p_j).
        let dot: f64 = dl_dp.iter().zip(p).map(|(g, p)| g * p).sum();
        let mut delta: Vec<f64> = dl_dp.iter().zip(p).map(|(g, p)| p * (g - dot)).collect();

        let mut grads = Gradients::zeros_like(self);
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &cache.inputs[l];
            let out = &mut grads.layers[l];
            out.weights.add_outer(input, &delta);
            out.bias.copy_from_slice(&delta);
            if l > 0 {
                let upstream = layer.weights.mul_vec(&delta);
                delta = upstream
                    .iter()
                    .zip(&cache.pre_activations[l - 1])
                    .map(|(g, z)| g * self.activation.derivative(*z))
                    .collect();
            }
        }
        Ok(grads)
    }

    /// `param -= learning_rate * grad` for every parameter.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<()> {
        grads.check_shape(&self.layers)?;
        for (p, g) in self.parameters_mut().zip(grads.values()) {
            *p -= learning_rate * g;
        }
        Ok(())
    }

    /// Mean loss of the model over `examples`.
    pub fn mean_loss(
        &self,
        examples: &[LabeledExample],
        loss: &Loss,
        cfg: &LossConfig,
    ) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::domain("cannot compute the loss of an empty dataset"));
        }
        let k = self.num_classes();
        let mut total = 0.0;
        for ex in examples {
            let p = self.predict_proba(&ex.features)?;
            total += loss.value(&p, &OneHotLabel::new(ex.label, k)?, cfg)?;
        }
        Ok(total / examples.len() as f64)
    }
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::domain(format!(
            "need at least 2 layer dims, got {}",
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::domain("layer dims must all be at least 1"));
    }
    if *dims.last().unwrap() < 2 {
        return Err(Error::domain("the output layer needs at least 2 classes"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub loss: Loss,
    pub loss_config: LossConfig,
}

impl TrainConfig {
    fn validate(&self, num_classes: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch size must be at least 1"));
        }
        if let Loss::Weighted(w) = &self.loss {
            check_len(
                "class weights vs model outputs",
                num_classes,
                w.num_classes(),
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch, accumulated over its minibatches.
    pub loss_history: Vec<f64>,
    pub epochs_run: usize,
}

/// Minibatch SGD. Examples are reshuffled every epoch from a generator
/// seeded with `cfg.seed`; the result is bitwise reproducible.
pub fn train(
    model: &mut MlpModel,
    dataset: &[LabeledExample],
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if dataset.is_empty() {
        return Err(Error::domain("training dataset is empty"));
    }
    let k = model.num_classes();
    cfg.validate(k)?;
    let targets = dataset
        .iter()
        .map(|ex| OneHotLabel::new(ex.label, k))
        .collect::<Result<Vec<_>>>()?;
    for ex in dataset {
        check_len("example features", model.input_dim(), ex.features.len())?;
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut acc = Gradients::zeros_like(model);
            for &i in batch {
                let cache = model.forward(&dataset[i].features)?;
                epoch_loss += cfg
                    .loss
                    .value(cache.prediction(), &targets[i], &cfg.loss_config)?;
                let g = model.backward(&cache, &targets[i], &cfg.loss, &cfg.loss_config)?;
                acc.add_assign(&g)?;
            }
            acc.scale(1.0 / batch.len() as f64);
            model.sgd_step(&acc, cfg.learning_rate)?;
        }
        let mean = epoch_loss / dataset.len() as f64;
        log::debug!("epoch {} loss {mean:.6}", epoch + 1);
        if !mean.is_finite() {
            return Err(Error::domain(format!(
                "training diverged at epoch {}",
                epoch + 1
            )));
        }
        loss_history.push(mean);
    }
    Ok(TrainReport {
        epochs_run: loss_history.len(),
        loss_history,
    })
}
