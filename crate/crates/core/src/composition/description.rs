//! TOML description of a fusion chain.
//!
//! ```toml
//! fallback_label = "Others"          # optional
//! chain = ["pets", "birds"]          # root node ids, in routing order
//!
//! [[node]]
//! id = "pets"
//! checkpoint = "pets.ckpt"           # relative to the description file
//! class_names = ["cat", "dog", "others"]   # optional, else from checkpoint
//! auxiliary = 2                      # optional auxiliary class index
//! successors = { cat = "cat-breeds" }      # class name -> node id
//!
//! [[node]]
//! id = "cat-breeds"
//! checkpoint = "cat_breeds.ckpt"
//! ```
//!
//! Loading checks that ids are unique, that every referenced id exists, that
//! successor edges are acyclic and that all nodes share one input width.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::{ClassifierNode, FusionChain, DEFAULT_FALLBACK_LABEL};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, MlpModel};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDescription {
    #[serde(default)]
    pub fallback_label: Option<String>,
    pub chain: Vec<String>,
    #[serde(rename = "node", default)]
    pub nodes: Vec<NodeDescription>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDescription {
    pub id: String,
    pub checkpoint: PathBuf,
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
    #[serde(default)]
    pub auxiliary: Option<usize>,
    #[serde(default)]
    pub successors: BTreeMap<String, String>,
}

impl ChainDescription {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(line, e.message().to_string())
        })
    }

    /// Checks the id graph: unique ids, known references, no cycles.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(Error::domain(format!("duplicate node id '{}'", n.id)));
            }
        }
        if self.chain.is_empty() {
            return Err(Error::domain("chain lists no nodes"));
        }
        for id in &self.chain {
            if !ids.contains(id.as_str()) {
                return Err(Error::domain(format!(
                    "chain refers to unknown node '{id}'"
                )));
            }
        }
        for n in &self.nodes {
            for target in n.successors.values() {
                if !ids.contains(target.as_str()) {
                    return Err(Error::Routing {
                        node: n.id.clone(),
                        message: format!("successor '{target}' is not defined"),
                    });
                }
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<()> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            id: &'a str,
            edges: &HashMap<&'a str, Vec<&'a str>>,
            marks: &mut HashMap<&'a str, Mark>,
        ) -> Result<()> {
            match marks.get(id) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Active) => {
                    return Err(Error::Routing {
                        node: id.to_string(),
                        message: "successor edges form a cycle".into(),
                    })
                }
                None => {}
            }
            marks.insert(id, Mark::Active);
            for next in &edges[id] {
                visit(next, edges, marks)?;
            }
            marks.insert(id, Mark::Done);
            Ok(())
        }

        let edges: HashMap<&str, Vec<&str>> = self
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id.as_str(),
                    n.successors.values().map(String::as_str).collect(),
                )
            })
            .collect();
        let mut marks = HashMap::new();
        for n in &self.nodes {
            visit(&n.id, &edges, &mut marks)?;
        }
        Ok(())
    }

    /// Builds the chain, loading checkpoints relative to `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<FusionChain> {
        let mut cache: HashMap<PathBuf, Arc<Checkpoint>> = HashMap::new();
        self.build_with(|path| {
            let full = base_dir.join(path);
            if let Some(c) = cache.get(&full) {
                return Ok(c.clone());
            }
            let ckpt = Arc::new(Checkpoint::load(&full)?);
            cache.insert(full, ckpt.clone());
            Ok(ckpt)
        })
    }

    /// Builds the chain with a caller-supplied checkpoint loader.
    pub fn build_with<F>(&self, mut load: F) -> Result<FusionChain>
    where
        F: FnMut(&Path) -> Result<Arc<Checkpoint>>,
    {
        self.validate()?;
        let by_id: HashMap<&str, &NodeDescription> =
            self.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
        let mut models: HashMap<&str, (Arc<MlpModel>, Vec<String>)> = HashMap::new();
        for n in &self.nodes {
            let ckpt = load(&n.checkpoint)?;
            let names = match (&n.class_names, ckpt.class_names.is_empty()) {
                (Some(names), _) => names.clone(),
                (None, false) => ckpt.class_names.clone(),
                (None, true) => {
                    return Err(Error::Routing {
                        node: n.id.clone(),
                        message: "no class names in description or checkpoint".into(),
                    })
                }
            };
            models.insert(&n.id, (Arc::new(ckpt.model.clone()), names));
        }
        let width = models[self.chain[0].as_str()].0.input_dim();
        for n in &self.nodes {
            let dim = models[n.id.as_str()].0.input_dim();
            if dim != width {
                return Err(Error::Routing {
                    node: n.id.clone(),
                    message: format!("input width {dim} differs from chain width {width}"),
                });
            }
        }

        fn assemble(
            id: &str,
            by_id: &HashMap<&str, &NodeDescription>,
            models: &HashMap<&str, (Arc<MlpModel>, Vec<String>)>,
        ) -> Result<ClassifierNode> {
            let desc = by_id[id];
            let (model, names) = &models[id];
            let mut node = ClassifierNode::new(id, model.clone(), names.clone(), desc.auxiliary)?;
            for (class, target) in &desc.successors {
                let idx = names
                    .iter()
                    .position(|n| n == class)
                    .ok_or_else(|| Error::Routing {
                        node: id.to_string(),
                        message: format!("successor edge from unknown class '{class}'"),
                    })?;
                node = node.with_successor(idx, assemble(target, by_id, models)?)?;
            }
            Ok(node)
        }

        let roots = self
            .chain
            .iter()
            .map(|id| assemble(id, &by_id, &models))
            .collect::<Result<Vec<_>>>()?;
        FusionChain::new(
            roots,
            self.fallback_label
                .clone()
                .unwrap_or_else(|| DEFAULT_FALLBACK_LABEL.to_string()),
        )
    }
}

pub fn parse_chain(text: &str, base_dir: &Path) -> Result<FusionChain> {
    ChainDescription::from_toml(text)?.build(base_dir)
}

/// Reads a description file; checkpoint paths resolve against its directory.
pub fn load_chain(path: impl AsRef<Path>) -> Result<FusionChain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_chain(&text, base).map_err(|e| e.in_file(path))
}
