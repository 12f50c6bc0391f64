//! Sound-class hierarchy: loading, ancestor queries, label smearing, and
//! collapse of a configurable subtree (by default the music subtree) into its
//! root label.
//!
//! The hierarchy is a DAG, not a tree: a small number of classes have more
//! than one parent, and every query here traverses all of them.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::Mid;

/// One class in the hierarchy.
#[derive(Debug, Clone)]
pub struct ClassNode {
    pub id: Mid,
    pub name: String,
    pub child_ids: Vec<Mid>,
}

/// Immutable class hierarchy with a derived parent index.
#[derive(Debug, Clone)]
pub struct Ontology {
    nodes: BTreeMap<Mid, ClassNode>,
    parent_index: HashMap<Mid, Vec<Mid>>,
}

#[derive(Deserialize)]
struct RawNode {
    id: String,
    name: String,
    #[serde(default)]
    child_ids: Vec<String>,
}

/// Load the hierarchy from its published JSON form: an array of objects with
/// at least `id`, `name`, and `child_ids` keys. Extra keys are ignored.
///
/// Rejects duplicate ids, child references to missing nodes, and cycles.
pub fn load_ontology(document: &str) -> Result<Ontology> {
    let raw: Vec<RawNode> = serde_json::from_str(document).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("column {}: {}", e.column(), e),
    })?;

    let mut nodes = BTreeMap::new();
    for node in raw {
        let id = Mid::new(node.id);
        if id.as_str().is_empty() {
            return Err(Error::validation("ontology node with empty id"));
        }
        let entry = ClassNode {
            id: id.clone(),
            name: node.name,
            child_ids: node.child_ids.into_iter().map(Mid::new).collect(),
        };
        if nodes.insert(id.clone(), entry).is_some() {
            return Err(Error::validation(format!("duplicate ontology id {id}")));
        }
    }

    let mut parent_index: HashMap<Mid, Vec<Mid>> =
        nodes.keys().map(|id| (id.clone(), Vec::new())).collect();
    for node in nodes.values() {
        for child in &node.child_ids {
            match parent_index.get_mut(child) {
                Some(parents) => parents.push(node.id.clone()),
                None => {
                    return Err(Error::validation(format!(
                        "node {} references missing child {child}",
                        node.id
                    )))
                }
            }
        }
    }
    for parents in parent_index.values_mut() {
        parents.sort();
        parents.dedup();
    }

    let ontology = Ontology {
        nodes,
        parent_index,
    };
    ontology.check_acyclic()?;
    Ok(ontology)
}

impl Ontology {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &Mid) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn node(&self, id: &Mid) -> Option<&ClassNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ClassNode> {
        self.nodes.values()
    }

    /// Direct parents of `id`, sorted.
    pub fn parents(&self, id: &Mid) -> Result<&[Mid]> {
        self.parent_index
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::not_found("class", id.as_str()))
    }

    /// Transitive closure of parents, excluding `class_id` itself.
    pub fn ancestors(&self, class_id: &Mid) -> Result<BTreeSet<Mid>> {
        if !self.contains(class_id) {
            return Err(Error::not_found("class", class_id.as_str()));
        }
        let mut out = BTreeSet::new();
        let mut stack: Vec<&Mid> = vec![class_id];
        while let Some(id) = stack.pop() {
            for parent in &self.parent_index[id] {
                if out.insert(parent.clone()) {
                    stack.push(parent);
                }
            }
        }
        Ok(out)
    }

    /// Augment a label set with all ancestors of each label.
    ///
    /// Monotone (`labels ⊆ smear(labels)`) and idempotent.
    pub fn smear_labels(&self, labels: &BTreeSet<Mid>) -> Result<BTreeSet<Mid>> {
        let mut out = labels.clone();
        for label in labels {
            out.extend(self.ancestors(label)?);
        }
        Ok(out)
    }

    /// Replace every label at or below `subtree_root` with `subtree_root`
    /// itself. Never increases cardinality; idempotent.
    pub fn collapse_subtree(
        &self,
        labels: &BTreeSet<Mid>,
        subtree_root: &Mid,
    ) -> Result<BTreeSet<Mid>> {
        if !self.contains(subtree_root) {
            return Err(Error::not_found("class", subtree_root.as_str()));
        }
        let mut out = BTreeSet::new();
        for label in labels {
            if label == subtree_root || self.ancestors(label)?.contains(subtree_root) {
                out.insert(subtree_root.clone());
            } else {
                out.insert(label.clone());
            }
        }
        Ok(out)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm over child edges; leftovers mean a cycle.
        let mut indegree: BTreeMap<&Mid, usize> = self
            .nodes
            .keys()
            .map(|id| (id, self.parent_index[id].len()))
            .collect();
        let mut queue: Vec<&Mid> = indegree
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut visited = 0usize;
        while let Some(id) = queue.pop() {
            visited += 1;
            for child in &self.nodes[id].child_ids {
                let n = indegree.get_mut(child).expect("child resolved at load");
                *n -= 1;
                if *n == 0 {
                    queue.push(child);
                }
            }
        }
        if visited != self.nodes.len() {
            let stuck: Vec<&str> = indegree
                .iter()
                .filter(|(_, n)| **n > 0)
                .map(|(id, _)| id.as_str())
                .collect();
            return Err(Error::validation(format!(
                "ontology contains a cycle through: {}",
                stuck.join(", ")
            )));
        }
        Ok(())
    }
}
