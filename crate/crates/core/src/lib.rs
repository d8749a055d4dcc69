//! Classification with an auxiliary "others" class.
//!
//! The crate covers the whole pipeline: curating an auxiliary-class dataset
//! ([`curation`]), training a small softmax classifier with plain or
//! class-weighted cross-entropy ([`loss`], [`model`]), scoring it
//! ([`metrics`]), and chaining several classifiers through their auxiliary
//! classes ([`composition`]).

pub mod composition;
pub mod curation;
mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod seed;

pub use error::{Error, Result};

pub use composition::{route_chain, route_hierarchy, ClassifierNode, FusionChain, RoutingTrace};
pub use curation::{DatasetManifest, LabeledDataset, LabeledExample, Split};
pub use loss::{
    compute_class_weights, softmax, ClassWeights, Loss, LossConfig, OneHotLabel, Prediction,
};
pub use metrics::{
    class_report, confusion_matrix, majority_baseline, ClassReport, ConfusionMatrix,
};
pub use model::{train, Activation, Checkpoint, MlpModel, TrainConfig, TrainReport};
