//! Plain-text model checkpoints.
//!
//! ```text
//! auxlearn-checkpoint v1
//! activation relu
//! layer_dims 2 16 3
//! classes 3
//! cat
//! dog
//! others
//! loss wcce 0.9069767441860466 0.9069767441860466 0.18604651162790697
//! layer 0
//! w <fan_out values>        (one line per input unit, row-major)
//! b <fan_out values>
//! layer 1
//! ...
//! end
//! ```
//!
//! Values are written in Rust's shortest round-trip decimal form, so a
//! save/load cycle reproduces every parameter bit for bit. `classes 0` and
//! `loss none` mark absent metadata. The `loss` line stores positive
//! weights only; negatives are always their complement.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, Layer, Matrix, MlpModel};
use crate::error::{Error, Result};
use crate::loss::{ClassWeights, Loss};

pub const CHECKPOINT_HEADER: &str = "auxlearn-checkpoint v1";

/// A model plus the metadata needed to evaluate it later.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: MlpModel,
    /// Output class names in index order; empty when unknown.
    pub class_names: Vec<String>,
    /// Loss the model was trained with, if recorded.
    pub loss: Option<Loss>,
}

impl Checkpoint {
    pub fn new(model: MlpModel) -> Self {
        Checkpoint {
            model,
            class_names: Vec::new(),
            loss: None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.model;
        writeln!(out, "{CHECKPOINT_HEADER}").unwrap();
        writeln!(out, "activation {}", m.activation()).unwrap();
        writeln!(out, "layer_dims {}", join(m.layer_dims())).unwrap();
        writeln!(out, "classes {}", self.class_names.len()).unwrap();
        for name in &self.class_names {
            writeln!(out, "{name}").unwrap();
        }
        match &self.loss {
            None => writeln!(out, "loss none").unwrap(),
            Some(Loss::Categorical) => writeln!(out, "loss cce").unwrap(),
            Some(Loss::Weighted(w)) => writeln!(out, "loss wcce {}", join(w.positive())).unwrap(),
        }
        for (i, layer) in m.layers().iter().enumerate() {
            writeln!(out, "layer {i}").unwrap();
            for r in 0..layer.weights.rows() {
                writeln!(out, "w {}", join(layer.weights.row(r))).unwrap();
            }
            writeln!(out, "b {}", join(&layer.bias)).unwrap();
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let header = lines.next_line()?;
        if header != CHECKPOINT_HEADER {
            return Err(lines.error(format!("expected header '{CHECKPOINT_HEADER}'")));
        }
        let activation: Activation = lines
            .keyed("activation")?
            .parse()
            .map_err(|e: Error| lines.error(e.to_string()))?;
        let dims: Vec<usize> = lines.keyed_list("layer_dims")?;
        if dims.len() < 2 {
            return Err(lines.error("layer_dims needs at least 2 entries"));
        }

        let n_classes: usize = lines.keyed_one("classes")?;
        let mut class_names = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let name = lines.next_line()?;
            if name.is_empty() {
                return Err(lines.error("empty class name"));
            }
            class_names.push(name.to_string());
        }

        let loss_spec = lines.keyed("loss")?;
        let loss = match loss_spec.split_once(' ').unwrap_or((loss_spec, "")) {
            ("none", "") => None,
            ("cce", "") => Some(Loss::Categorical),
            ("wcce", weights) => {
                let positive = lines.parse_list(weights)?;
                Some(Loss::Weighted(
                    ClassWeights::from_positive(positive)
                        .map_err(|e| lines.error(e.to_string()))?,
                ))
            }
            _ => return Err(lines.error(format!("unrecognized loss '{loss_spec}'"))),
        };

        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let index: usize = lines.keyed_one("layer")?;
            if index != i {
                return Err(lines.error(format!("expected layer {i}, found layer {index}")));
            }
            let mut data = Vec::with_capacity(fan_in * fan_out);
            for _ in 0..fan_in {
                let row: Vec<f64> = lines.keyed_list("w")?;
                if row.len() != fan_out {
                    return Err(lines.error(format!(
                        "weight row has {} values, expected {fan_out}",
                        row.len()
                    )));
                }
                data.extend(row);
            }
            let bias: Vec<f64> = lines.keyed_list("b")?;
            if bias.len() != fan_out {
                return Err(lines.error(format!(
                    "bias has {} values, expected {fan_out}",
                    bias.len()
                )));
            }
            layers.push(Layer {
                weights: Matrix::from_vec(fan_in, fan_out, data)?,
                bias,
            });
        }
        if lines.next_line()? != "end" {
            return Err(lines.error("expected 'end'"));
        }
        let model = MlpModel::from_layers(layers, activation)?;
        if !class_names.is_empty() && class_names.len() != model.num_classes() {
            return Err(Error::domain(format!(
                "checkpoint lists {} class names for {} outputs",
                class_names.len(),
                model.num_classes()
            )));
        }
        if let Some(Loss::Weighted(w)) = &loss {
            if w.num_classes() != model.num_classes() {
                return Err(Error::domain(
                    "checkpoint class weights do not match outputs",
                ));
            }
        }
        Ok(Checkpoint {
            model,
            class_names,
            loss,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Checkpoint::from_text(&text).map_err(|e| e.in_file(path))
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines(),
            line_no: 0,
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line_no, msg)
    }

    fn next_line(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.inner
            .next()
            .ok_or_else(|| self.error("unexpected end of checkpoint"))
    }

    /// Reads a `<key> <rest>` line and returns `rest`.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ => Err(self.error(format!("expected '{key} ...'"))),
        }
    }

    fn keyed_one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let rest = self.keyed(key)?;
        self.parse_one(rest)
    }

    fn keyed_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let rest = self.keyed(key)?;
        self.parse_list(rest)
    }

    fn parse_one<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| self.error(format!("invalid value '{s}'")))
    }

    fn parse_list<T: std::str::FromStr>(&self, s: &str) -> Result<Vec<T>> {
        s.split_ascii_whitespace()
            .map(|v| self.parse_one(v))
            .collect()
    }
}
