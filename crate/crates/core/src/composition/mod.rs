//! Composing classifiers.
//!
//! A [`ClassifierNode`] may hand an input on to a specialist when it predicts
//! a class that has a successor (hierarchical routing). A [`FusionChain`]
//! links independent hierarchies through their auxiliary classes: when a
//! root predicts its auxiliary class, the input moves to the next root.
//! Every node sees the same raw feature vector.

mod description;

pub use description::{load_chain, parse_chain, ChainDescription, NodeDescription};

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::MlpModel;

pub const DEFAULT_FALLBACK_LABEL: &str = "Others";

/// A frozen classifier together with its routing edges.
///
/// Successor edges form a tree owned by the node, so routing always
/// terminates. The auxiliary class never has a successor.
#[derive(Debug, Clone)]
pub struct ClassifierNode {
    name: String,
    model: Arc<MlpModel>,
    class_names: Vec<String>,
    auxiliary_class: Option<usize>,
    successors: BTreeMap<usize, ClassifierNode>,
}

impl ClassifierNode {
    pub fn new(
        name: impl Into<String>,
        model: Arc<MlpModel>,
        class_names: Vec<String>,
        auxiliary_class: Option<usize>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |message: String| Error::Routing {
            node: name.clone(),
            message,
        };
        if class_names.len() != model.num_classes() {
            return Err(invalid(format!(
                "{} class names for a model with {} outputs",
                class_names.len(),
                model.num_classes()
            )));
        }
        if let Some(aux) = auxiliary_class {
            if aux >= class_names.len() {
                return Err(invalid(format!("auxiliary class {aux} out of range")));
            }
        }
        Ok(ClassifierNode {
            name,
            model,
            class_names,
            auxiliary_class,
            successors: BTreeMap::new(),
        })
    }

    /// Makes `successor` the specialist for inputs predicted as `class`.
    pub fn with_successor(mut self, class: usize, successor: ClassifierNode) -> Result<Self> {
        let invalid = |message: String| Error::Routing {
            node: self.name.clone(),
            message,
        };
        if class >= self.class_names.len() {
            return Err(invalid(format!("successor class {class} out of range")));
        }
        if Some(class) == self.auxiliary_class {
            return Err(invalid(format!(
                "auxiliary class '{}' cannot have a successor",
                self.class_names[class]
            )));
        }
        if self.successors.contains_key(&class) {
            return Err(invalid(format!(
                "class '{}' already has a successor",
                self.class_names[class]
            )));
        }
        self.successors.insert(class, successor);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn auxiliary_class(&self) -> Option<usize> {
        self.auxiliary_class
    }

    pub fn successors(&self) -> &BTreeMap<usize, ClassifierNode> {
        &self.successors
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    fn classify(&self, features: &[f64]) -> Result<usize> {
        self.model.predict(features).map_err(|e| Error::Routing {
            node: self.name.clone(),
            message: e.to_string(),
        })
    }

    fn route_into(&self, features: &[f64], depth: usize, steps: &mut Vec<RouteStep>) -> Result<()> {
        let class = self.classify(features)?;
        steps.push(RouteStep {
            node: self.name.clone(),
            class_index: class,
            class_name: self.class_names[class].clone(),
            depth,
        });
        match self.successors.get(&class) {
            Some(next) => next.route_into(features, depth + 1, steps),
            None => Ok(()),
        }
    }

    /// Labels this hierarchy can finish on. The root's auxiliary class is
    /// left out when `include_root_auxiliary` is false.
    fn terminal_labels(&self, include_root_auxiliary: bool, out: &mut Vec<String>) {
        for (c, name) in self.class_names.iter().enumerate() {
            if let Some(next) = self.successors.get(&c) {
                next.terminal_labels(true, out);
            } else if (include_root_auxiliary || Some(c) != self.auxiliary_class)
                && !out.contains(name)
            {
                out.push(name.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteStep {
    pub node: String,
    pub class_index: usize,
    pub class_name: String,
    /// 0 for a chain root, incremented at every succession hop.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTrace {
    pub steps: Vec<RouteStep>,
    pub final_label: String,
}

impl RoutingTrace {
    /// Names of the root nodes visited, in order.
    pub fn roots(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter(|s| s.depth == 0)
            .map(|s| s.node.as_str())
            .collect()
    }
}

/// Predicts at `node` and follows successor edges until a class without a
/// successor is reached.
pub fn route_hierarchy(node: &ClassifierNode, features: &[f64]) -> Result<RoutingTrace> {
    let mut steps = Vec::new();
    node.route_into(features, 0, &mut steps)?;
    let final_label = steps.last().unwrap().class_name.clone();
    Ok(RoutingTrace { steps, final_label })
}

/// Hierarchies joined at their auxiliary classes.
#[derive(Debug, Clone)]
pub struct FusionChain {
    nodes: Vec<ClassifierNode>,
    fallback_label: String,
}

impl FusionChain {
    /// Every node except the last must have an auxiliary class, since that
    /// is the only way for an input to reach the next node.
    pub fn new(nodes: Vec<ClassifierNode>, fallback_label: impl Into<String>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::domain("a fusion chain needs at least one node"));
        }
        if let Some(n) = nodes[..nodes.len() - 1]
            .iter()
            .find(|n| n.auxiliary_class.is_none())
        {
            return Err(Error::Routing {
                node: n.name.clone(),
                message: "a chain node without an auxiliary class must be last".into(),
            });
        }
        Ok(FusionChain {
            nodes,
            fallback_label: fallback_label.into(),
        })
    }

    pub fn with_default_fallback(nodes: Vec<ClassifierNode>) -> Result<Self> {
        FusionChain::new(nodes, DEFAULT_FALLBACK_LABEL)
    }

    pub fn nodes(&self) -> &[ClassifierNode] {
        &self.nodes
    }

    pub fn fallback_label(&self) -> &str {
        &self.fallback_label
    }

    /// Every label [`route_chain`] can return, in discovery order.
    pub fn reachable_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for node in &self.nodes {
            node.terminal_labels(false, &mut out);
        }
        let all_auxiliary = self.nodes.iter().all(|n| n.auxiliary_class.is_some());
        if all_auxiliary && !out.contains(&self.fallback_label) {
            out.push(self.fallback_label.clone());
        }
        out
    }
}

/// Runs each hierarchy in order. An input resolved to a root's auxiliary
/// class moves on to the next root; any other resolution ends the chain.
/// If every root resolves to its auxiliary class the result is the
/// chain's fallback label.
pub fn route_chain(chain: &FusionChain, features: &[f64]) -> Result<RoutingTrace> {
    let mut steps = Vec::new();
    for node in &chain.nodes {
        let start = steps.len();
        node.route_into(features, 0, &mut steps)?;
        let handed_off =
            steps.len() == start + 1 && Some(steps[start].class_index) == node.auxiliary_class;
        if !handed_off {
            let final_label = steps.last().unwrap().class_name.clone();
            return Ok(RoutingTrace { steps, final_label });
        }
    }
    Ok(RoutingTrace {
        steps,
        final_label: chain.fallback_label.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activation, Layer, Matrix};

    /// A one-layer model over one input that always predicts `class`.
    fn forced(class: usize, k: usize) -> Arc<MlpModel> {
        let mut bias = vec![0.0; k];
        bias[class] = 10.0;
        Arc::new(
            MlpModel::from_layers(
                vec![Layer {
                    weights: Matrix::zeros(1, k),
                    bias,
                }],
                Activation::Relu,
            )
            .unwrap(),
        )
    }

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn pets(predict: usize) -> ClassifierNode {
        ClassifierNode::new(
            "pets",
            forced(predict, 3),
            names(&["cat", "dog", "others"]),
            Some(2),
        )
        .unwrap()
    }

    #[test]
    fn leaf_prediction() {
        let t = route_hierarchy(&pets(1), &[0.0]).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.final_label, "dog");
    }

    #[test]
    fn succession_to_breed_classifier() {
        let breeds = ClassifierNode::new(
            "cat-breeds",
            forced(1, 3),
            names(&["persian", "siamese", "tabby"]),
            None,
        )
        .unwrap();
        let root = pets(0).with_successor(0, breeds).unwrap();
        let t = route_hierarchy(&root, &[0.3]).unwrap();
        assert_eq!(t.steps.len(), 2);
        assert_eq!(t.steps[0].class_name, "cat");
        assert_eq!(t.steps[1].node, "cat-breeds");
        assert_eq!(t.final_label, "siamese");
    }

    #[test]
    fn auxiliary_prediction_stops_at_root() {
        let t = route_hierarchy(&pets(2), &[0.0]).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.final_label, "others");
    }

    #[test]
    fn auxiliary_class_cannot_have_successor() {
        let other = pets(0);
        assert!(pets(0).with_successor(2, other.clone()).is_err());
        assert!(pets(0).with_successor(7, other).is_err());
    }

    #[test]
    fn node_validation() {
        assert!(ClassifierNode::new("x", forced(0, 3), names(&["a", "b"]), None).is_err());
        assert!(ClassifierNode::new("x", forced(0, 2), names(&["a", "b"]), Some(2)).is_err());
    }

    #[test]
    fn chain_examples() {
        let birds = |c| {
            ClassifierNode::new(
                "birds",
                forced(c, 3),
                names(&["parrot", "owl", "others"]),
                Some(2),
            )
            .unwrap()
        };
        let single = FusionChain::with_default_fallback(vec![pets(0)]).unwrap();
        assert_eq!(route_chain(&single, &[0.0]).unwrap().final_label, "cat");

        let chain = FusionChain::with_default_fallback(vec![pets(2), birds(0)]).unwrap();
        let t = route_chain(&chain, &[0.0]).unwrap();
        assert_eq!(t.final_label, "parrot");
        assert_eq!(t.roots(), vec!["pets", "birds"]);

        let chain = FusionChain::with_default_fallback(vec![pets(2), birds(2)]).unwrap();
        assert_eq!(route_chain(&chain, &[0.0]).unwrap().final_label, "Others");
    }

    #[test]
    fn chain_requires_auxiliary_before_last() {
        let plain = ClassifierNode::new("plain", forced(0, 2), names(&["a", "b"]), None).unwrap();
        assert!(FusionChain::with_default_fallback(vec![plain.clone(), pets(0)]).is_err());
        assert!(FusionChain::with_default_fallback(vec![pets(0), plain]).is_ok());
        assert!(FusionChain::with_default_fallback(vec![]).is_err());
    }

    #[test]
    fn dimension_mismatch_names_the_node() {
        let chain = FusionChain::with_default_fallback(vec![pets(2)]).unwrap();
        match route_chain(&chain, &[0.0, 1.0]) {
            Err(Error::Routing { node, .. }) => assert_eq!(node, "pets"),
            other => panic!("{other:?}"),
        }
    }
}
