//! Multidimensional interpretation of a data tree: facts, dimension
//! hierarchies, measures, and the strict/covering classification of each
//! hierarchy.
//!
//! In the supported encoding a fact is an element (e.g. `book`) whose
//! children include measure leaves (e.g. `price`) and dimension containers
//! (e.g. `categories`). Inside a container, nested level elements form
//! hierarchy chains; the direct child of the container is the most detailed
//! level, and nesting descends toward more general levels. A level element's
//! value is its text content or, failing that, its `name` attribute.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde_json::Value;
use thiserror::Error;

use crate::xmltree::{DataTree, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("schema JSON is malformed: {0}")]
    Json(String),
    #[error("schema violation in field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("binding error at {path}: {message}")]
    Binding { path: String, message: String },
    #[error("unknown dimension root `{0}`")]
    UnknownDimension(String),
}

/// Names the fact elements, dimension containers, measures, and (optionally)
/// the per-dimension level labels, most detailed first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaConfig {
    pub fact_label: String,
    pub dimension_roots: Vec<String>,
    pub measure_labels: Vec<String>,
    /// Declared level labels per dimension root, most detailed first.
    /// A dimension without an entry infers levels from nesting depth.
    pub levels: BTreeMap<String, Vec<String>>,
}

impl SchemaConfig {
    pub fn new(
        fact_label: impl Into<String>,
        dimension_roots: Vec<String>,
        measure_labels: Vec<String>,
    ) -> Self {
        SchemaConfig {
            fact_label: fact_label.into(),
            dimension_roots,
            measure_labels,
            levels: BTreeMap::new(),
        }
    }

    pub fn with_levels(mut self, dimension: impl Into<String>, levels: Vec<String>) -> Self {
        self.levels.insert(dimension.into(), levels);
        self
    }

    fn check(&self) -> Result<(), SchemaError> {
        if self.fact_label.is_empty() {
            return Err(SchemaError::Schema { field: "fact".into(), message: "must be non-empty".into() });
        }
        if self.measure_labels.is_empty() {
            return Err(SchemaError::Schema {
                field: "measures".into(),
                message: "at least one measure is required".into(),
            });
        }
        let mut seen = BTreeSet::new();
        for label in std::iter::once(&self.fact_label)
            .chain(&self.dimension_roots)
            .chain(&self.measure_labels)
        {
            if label.is_empty() {
                return Err(SchemaError::Schema {
                    field: "labels".into(),
                    message: "labels must be non-empty".into(),
                });
            }
            if !seen.insert(label.clone()) {
                return Err(SchemaError::Schema {
                    field: "labels".into(),
                    message: format!("label `{label}` declared twice"),
                });
            }
        }
        Ok(())
    }

    /// Parses the schema config JSON, e.g.
    /// `{"fact":"book","dimensions":["categories"],"measures":["price"],
    ///   "levels":{"categories":["C3","C2","C1"]}}`.
    pub fn from_json(input: &str) -> Result<Self, SchemaError> {
        let value: Value = serde_json::from_str(input).map_err(|e| SchemaError::Json(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::Schema { field: "".into(), message: "expected an object".into() })?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "fact" | "dimensions" | "measures" | "levels") {
                return Err(SchemaError::Schema { field: key.clone(), message: "unknown field".into() });
            }
        }
        let fact_label = obj
            .get("fact")
            .and_then(Value::as_str)
            .ok_or_else(|| SchemaError::Schema { field: "fact".into(), message: "expected a string".into() })?
            .to_string();
        let string_list = |key: &str| -> Result<Vec<String>, SchemaError> {
            match obj.get(key) {
                None => Ok(Vec::new()),
                Some(v) => v
                    .as_array()
                    .and_then(|a| a.iter().map(|s| s.as_str().map(str::to_string)).collect())
                    .ok_or_else(|| SchemaError::Schema {
                        field: key.into(),
                        message: "expected an array of strings".into(),
                    }),
            }
        };
        let dimension_roots = string_list("dimensions")?;
        let measure_labels = string_list("measures")?;
        let mut levels = BTreeMap::new();
        if let Some(lv) = obj.get("levels") {
            let lobj = lv.as_object().ok_or_else(|| SchemaError::Schema {
                field: "levels".into(),
                message: "expected an object keyed by dimension".into(),
            })?;
            for (dim, arr) in lobj {
                let list: Option<Vec<String>> = arr
                    .as_array()
                    .and_then(|a| a.iter().map(|s| s.as_str().map(str::to_string)).collect());
                let list = list.ok_or_else(|| SchemaError::Schema {
                    field: format!("levels.{dim}"),
                    message: "expected an array of strings".into(),
                })?;
                levels.insert(dim.clone(), list);
            }
        }
        let cfg = SchemaConfig { fact_label, dimension_roots, measure_labels, levels };
        cfg.check()?;
        Ok(cfg)
    }
}

/// One hierarchy-level instance: its identifying value, its level label, and
/// the values of the next more-general level elements encountered below it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelInstance {
    pub id: String,
    pub level_label: String,
    pub parent_refs: BTreeSet<String>,
}

/// One step of a hierarchy chain: the level element's label and value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChainStep {
    pub label: String,
    pub value: String,
}

pub type Chain = Vec<ChainStep>;

/// One fact: its node, parsed measures, and per-dimension hierarchy chains
/// (each chain runs from the most detailed level toward the most general).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactInstance {
    pub node: NodeId,
    pub measures: BTreeMap<String, Decimal>,
    pub dimension_paths: BTreeMap<String, Vec<Chain>>,
}

/// Strictness/coverage classification of one dimension hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierarchyClass {
    pub strict: bool,
    pub covering: bool,
    pub complex: bool,
}

impl HierarchyClass {
    pub fn to_json(self) -> Value {
        serde_json::json!({"strict": self.strict, "covering": self.covering, "complex": self.complex})
    }
}

impl fmt::Display for HierarchyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// The multidimensional reading of one document under one schema config.
#[derive(Debug, Clone)]
pub struct WarehouseView {
    config: SchemaConfig,
    facts: Vec<FactInstance>,
    /// level label -> instance id -> instance, merged across the document.
    levels: BTreeMap<String, BTreeMap<String, LevelInstance>>,
    warnings: Vec<String>,
}

impl WarehouseView {
    pub fn config(&self) -> &SchemaConfig {
        &self.config
    }

    pub fn facts(&self) -> &[FactInstance] {
        &self.facts
    }

    pub fn level_instances(&self, level_label: &str) -> impl Iterator<Item = &LevelInstance> {
        self.levels.get(level_label).into_iter().flat_map(|m| m.values())
    }

    pub fn level_labels(&self) -> impl Iterator<Item = &str> {
        self.levels.keys().map(String::as_str)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Value of a level element: its own text value, or the value of its `name`
/// attribute when the text is absent (the fixture encoding keeps level
/// values in `@name`).
pub fn level_value(t: &DataTree, n: NodeId) -> Option<&str> {
    t.value(n).or_else(|| t.attribute(n, "name"))
}

fn element_children(t: &DataTree, n: NodeId) -> Vec<NodeId> {
    t.children(n).iter().copied().filter(|c| !t.label(*c).starts_with('@')).collect()
}

/// Interprets `t` as a warehouse: every `fact_label` element becomes a
/// [`FactInstance`] with parsed measures and hierarchy chains, and level
/// instances are merged document-wide per (level label, value).
pub fn bind_schema(t: &DataTree, cfg: &SchemaConfig) -> Result<WarehouseView, SchemaError> {
    cfg.check()?;
    let mut facts = Vec::new();
    let mut levels: BTreeMap<String, BTreeMap<String, LevelInstance>> = BTreeMap::new();
    let mut warnings = Vec::new();

    let mut fact_nodes: Vec<NodeId> = Vec::new();
    for n in t.preorder() {
        if t.label(n) == cfg.fact_label {
            fact_nodes.push(n);
        }
    }
    if fact_nodes.is_empty() {
        warnings.push(format!("no `{}` element found in the document", cfg.fact_label));
    }

    for fact_node in fact_nodes {
        let mut measures = BTreeMap::new();
        for m in &cfg.measure_labels {
            let child = element_children(t, fact_node).into_iter().find(|c| t.label(*c) == *m);
            let Some(child) = child else {
                return Err(SchemaError::Binding {
                    path: t.path_of(fact_node),
                    message: format!("measure `{m}` is missing"),
                });
            };
            let raw = level_value(t, child).unwrap_or("");
            let parsed = Decimal::from_str(raw).map_err(|_| SchemaError::Binding {
                path: t.path_of(child),
                message: format!("measure `{m}` value `{raw}` is not a decimal number"),
            })?;
            measures.insert(m.clone(), parsed);
        }

        let mut dimension_paths = BTreeMap::new();
        for dim in &cfg.dimension_roots {
            let mut chains = Vec::new();
            for container in element_children(t, fact_node).into_iter().filter(|c| t.label(*c) == *dim) {
                collect_chains(t, container, cfg.levels.get(dim), &mut Vec::new(), &mut chains)?;
            }
            for chain in &chains {
                for pair in chain.windows(2) {
                    levels
                        .entry(pair[0].label.clone())
                        .or_default()
                        .entry(pair[0].value.clone())
                        .or_insert_with(|| LevelInstance {
                            id: pair[0].value.clone(),
                            level_label: pair[0].label.clone(),
                            parent_refs: BTreeSet::new(),
                        })
                        .parent_refs
                        .insert(pair[1].value.clone());
                }
                if let Some(last) = chain.last() {
                    levels
                        .entry(last.label.clone())
                        .or_default()
                        .entry(last.value.clone())
                        .or_insert_with(|| LevelInstance {
                            id: last.value.clone(),
                            level_label: last.label.clone(),
                            parent_refs: BTreeSet::new(),
                        });
                }
            }
            dimension_paths.insert(dim.clone(), chains);
        }
        facts.push(FactInstance { node: fact_node, measures, dimension_paths });
    }

    Ok(WarehouseView { config: cfg.clone(), facts, levels, warnings })
}

/// Walks level elements below `n`, extending `prefix` and emitting one chain
/// per root-to-leaf path. With declared levels, children with undeclared
/// labels are member-attribute payload and are not descended into.
fn collect_chains(
    t: &DataTree,
    n: NodeId,
    declared: Option<&Vec<String>>,
    prefix: &mut Chain,
    out: &mut Vec<Chain>,
) -> Result<(), SchemaError> {
    let level_children: Vec<NodeId> = element_children(t, n)
        .into_iter()
        .filter(|c| match declared {
            Some(labels) => labels.iter().any(|l| l == t.label(*c)),
            None => true,
        })
        .collect();
    if level_children.is_empty() {
        if !prefix.is_empty() {
            out.push(prefix.clone());
        }
        return Ok(());
    }
    for c in level_children {
        let value = level_value(t, c).ok_or_else(|| SchemaError::Binding {
            path: t.path_of(c),
            message: "level element has no value (text or @name)".into(),
        })?;
        prefix.push(ChainStep { label: t.label(c).to_string(), value: value.to_string() });
        collect_chains(t, c, declared, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}

/// Classifies one dimension hierarchy.
///
/// Non-strict when some level instance rolls up to more than one parent, or
/// some fact reaches the same level label through more than one chain.
/// Non-covering when a chain's adjacent pair skips a declared intermediate
/// level, or (without declared levels) chains of unequal depth reach the
/// same terminal label.
pub fn classify_hierarchy(view: &WarehouseView, dimension_root: &str) -> Result<HierarchyClass, SchemaError> {
    if !view.config.dimension_roots.iter().any(|d| d == dimension_root) {
        return Err(SchemaError::UnknownDimension(dimension_root.to_string()));
    }

    let declared = view.config.levels.get(dimension_root);
    let chains_per_fact: Vec<&Vec<Chain>> = view
        .facts
        .iter()
        .filter_map(|f| f.dimension_paths.get(dimension_root))
        .collect();

    let mut strict = true;
    // Level instances with several rollup parents.
    let dimension_labels: BTreeSet<&str> = chains_per_fact
        .iter()
        .flat_map(|chains| chains.iter().flatten().map(|s| s.label.as_str()))
        .collect();
    for label in &dimension_labels {
        for inst in view.level_instances(label) {
            if inst.parent_refs.len() > 1 {
                strict = false;
            }
        }
    }
    // Facts related to several chains through the same level label.
    for chains in &chains_per_fact {
        for label in &dimension_labels {
            let through = chains.iter().filter(|c| c.iter().any(|s| s.label == *label)).count();
            if through > 1 {
                strict = false;
            }
        }
    }

    let mut covering = true;
    match declared {
        Some(order) => {
            let position = |label: &str| order.iter().position(|l| l == label);
            for chains in &chains_per_fact {
                for chain in *chains {
                    for pair in chain.windows(2) {
                        if let (Some(a), Some(b)) = (position(&pair[0].label), position(&pair[1].label)) {
                            if b > a + 1 {
                                covering = false;
                            }
                        }
                    }
                }
            }
        }
        None => {
            // depth per terminal label, across the whole dimension
            let mut depths: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
            for chains in &chains_per_fact {
                for chain in *chains {
                    if let Some(last) = chain.last() {
                        depths.entry(last.label.as_str()).or_default().insert(chain.len());
                    }
                }
            }
            if depths.values().any(|set| set.len() > 1) {
                covering = false;
            }
        }
    }

    Ok(HierarchyClass { strict, covering, complex: !strict && !covering })
}
