//! Rollup: aggregate fact measures up to a hierarchy value, correctly on
//! non-strict and non-covering hierarchies.
//!
//! For each fact, the engine scans the most detailed level elements of the
//! fact's hierarchy container and then their descendants in preorder; on the
//! first element whose value equals the target, the fact's measure is
//! aggregated and the scan stops for that fact, so a fact reaching the
//! target through several chains contributes exactly once. Facts described
//! by chains that skip intermediate levels are still found by the descendant
//! scan.

use std::str::FromStr;

use rust_decimal::Decimal;
use thiserror::Error;

use crate::matcher::WitnessTree;
use crate::mdmodel::level_value;
use crate::pattern::{
    Accessor, Cardinality, Comparator, Edge, Formula, PatternNode, PatternTree, PatternVar,
    Predicate,
};
use crate::xmltree::{DataTree, NodeId, TreeBuilder};

/// Default node-count limit of [`rollup_oracle`].
pub const ORACLE_NODE_LIMIT: usize = 500;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RollupError {
    #[error("invalid rollup query: {0}")]
    InvalidQuery(String),
    #[error("data error at {path}: {message}")]
    Data { path: String, message: String },
    #[error("empty aggregate: {agg} of zero matched facts is undefined")]
    EmptyAggregate { agg: AggKind },
    #[error("numeric overflow while aggregating")]
    NumericOverflow,
    #[error("oracle refused: tree has {actual} nodes, limit is {limit}")]
    OracleLimit { actual: usize, limit: usize },
}

/// Aggregate function applied to the matched measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggKind {
    Sum,
    Count,
    Avg,
    Min,
    Max,
}

impl AggKind {
    pub const ALL: [AggKind; 5] = [AggKind::Sum, AggKind::Count, AggKind::Avg, AggKind::Min, AggKind::Max];

    pub fn name(self) -> &'static str {
        match self {
            AggKind::Sum => "sum",
            AggKind::Count => "count",
            AggKind::Avg => "avg",
            AggKind::Min => "min",
            AggKind::Max => "max",
        }
    }
}

impl std::fmt::Display for AggKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(AggKind::Sum),
            "count" => Ok(AggKind::Count),
            "avg" => Ok(AggKind::Avg),
            "min" => Ok(AggKind::Min),
            "max" => Ok(AggKind::Max),
            other => Err(format!("unknown aggregate `{other}` (expected sum, count, avg, min or max)")),
        }
    }
}

/// A rollup request: which elements are facts, where their hierarchy lives,
/// which measure to aggregate, up to which hierarchy value, and how.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RollupQuery {
    pub fact_label: String,
    pub hierarchy_root_label: String,
    pub measure_label: String,
    pub target_value: String,
    pub agg: AggKind,
}

impl RollupQuery {
    pub fn new(
        fact_label: impl Into<String>,
        hierarchy_root_label: impl Into<String>,
        measure_label: impl Into<String>,
        target_value: impl Into<String>,
        agg: AggKind,
    ) -> Self {
        RollupQuery {
            fact_label: fact_label.into(),
            hierarchy_root_label: hierarchy_root_label.into(),
            measure_label: measure_label.into(),
            target_value: target_value.into(),
            agg,
        }
    }

    fn check(&self) -> Result<(), RollupError> {
        for (name, v) in [
            ("fact", &self.fact_label),
            ("hierarchy", &self.hierarchy_root_label),
            ("measure", &self.measure_label),
            ("value", &self.target_value),
        ] {
            if v.is_empty() {
                return Err(RollupError::InvalidQuery(format!("{name} must be non-empty")));
            }
        }
        Ok(())
    }
}

/// The running accumulator pair: the aggregate value and the matched-fact count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AggregateState {
    pub acc: Decimal,
    pub count: u64,
}

impl AggregateState {
    pub fn new() -> Self {
        AggregateState::default()
    }
}

/// Folds one matched measure into the state.
pub fn aggregate_step(
    state: AggregateState,
    measure: Decimal,
    agg: AggKind,
) -> Result<AggregateState, RollupError> {
    let count = state.count + 1;
    let acc = match agg {
        AggKind::Sum | AggKind::Avg => {
            state.acc.checked_add(measure).ok_or(RollupError::NumericOverflow)?
        }
        AggKind::Count => state.acc,
        AggKind::Min => {
            if state.count == 0 {
                measure
            } else {
                state.acc.min(measure)
            }
        }
        AggKind::Max => {
            if state.count == 0 {
                measure
            } else {
                state.acc.max(measure)
            }
        }
    };
    Ok(AggregateState { acc, count })
}

/// Final aggregate value. Sum and count of zero facts are 0; avg, min and
/// max of zero facts are an empty-aggregate error.
pub fn finalize(state: AggregateState, agg: AggKind) -> Result<Decimal, RollupError> {
    let value = match agg {
        AggKind::Sum => state.acc,
        AggKind::Count => Decimal::from(state.count),
        AggKind::Avg | AggKind::Min | AggKind::Max => {
            if state.count == 0 {
                return Err(RollupError::EmptyAggregate { agg });
            } else if agg == AggKind::Avg {
                state
                    .acc
                    .checked_div(Decimal::from(state.count))
                    .ok_or(RollupError::NumericOverflow)?
            } else {
                state.acc
            }
        }
    };
    // Canonical scale, so equal aggregates render identically.
    Ok(value.normalize())
}

/// The rollup answer: the witness tree, the aggregate value, and how many
/// facts were aggregated.
#[derive(Debug, Clone)]
pub struct RollupResult {
    pub witness: WitnessTree,
    pub value: Decimal,
    pub matched_facts: u64,
}

/// Builds the 8-node rollup pattern for a query: the fact-document root $0
/// over fact $1 (with measure $7 and hierarchy root $2), the most detailed
/// level $5 under $2 with optional descendant $6, and the computed
/// aggregate/count pair $3/$4; the formula requires $5 or $6 to carry the
/// target value.
pub fn make_rollup_pattern(q: &RollupQuery) -> PatternTree {
    let v = PatternVar;
    let node = |var: u32,
                label: Option<&str>,
                output: bool,
                computed: bool,
                parent: Option<u32>,
                edge: Option<Edge>| PatternNode {
        var: v(var),
        label_test: label.map(str::to_string),
        output,
        computed,
        parent: parent.map(v),
        edge,
    };
    let nodes = vec![
        node(0, None, true, false, None, None),
        node(1, Some(&q.fact_label), false, false, Some(0), Some(Edge::pc())),
        node(2, Some(&q.hierarchy_root_label), true, false, Some(1), Some(Edge::pc())),
        node(3, None, true, true, Some(1), Some(Edge::pc())),
        node(4, None, false, true, Some(1), Some(Edge::pc())),
        node(5, None, true, false, Some(2), Some(Edge::pc())),
        node(6, None, false, false, Some(5), Some(Edge::ad().with_cardinality(Cardinality::ZeroOrOne))),
        node(7, Some(&q.measure_label), false, false, Some(1), Some(Edge::pc())),
    ];
    let target_eq = |var: u32| {
        Formula::Pred(Predicate {
            subject: v(var),
            accessor: Accessor::Value,
            comparator: Comparator::Eq,
            constant: q.target_value.clone(),
        })
    };
    let formula = Formula::Or(vec![target_eq(5), target_eq(6)]);
    PatternTree::new(nodes, formula).expect("rollup pattern is structurally sound")
}

fn measure_of(t: &DataTree, fact: NodeId, measure_label: &str) -> Result<Decimal, RollupError> {
    let child = t
        .children(fact)
        .iter()
        .copied()
        .find(|c| t.label(*c) == measure_label)
        .ok_or_else(|| RollupError::Data {
            path: t.path_of(fact),
            message: format!("measure `{measure_label}` is missing"),
        })?;
    let raw = level_value(t, child).unwrap_or("");
    Decimal::from_str(raw).map_err(|_| RollupError::Data {
        path: t.path_of(child),
        message: format!("measure `{measure_label}` value `{raw}` is not a decimal number"),
    })
}

fn facts_in_document_order(t: &DataTree, fact_label: &str) -> Vec<NodeId> {
    t.preorder().into_iter().filter(|n| t.label(*n) == fact_label).collect()
}

fn non_attribute_children(t: &DataTree, n: NodeId) -> Vec<NodeId> {
    t.children(n).iter().copied().filter(|c| !t.label(*c).starts_with('@')).collect()
}

fn non_attribute_descendants(t: &DataTree, n: NodeId) -> Vec<NodeId> {
    t.descendants(n)
        .expect("node exists")
        .into_iter()
        .filter(|d| !t.label(*d).starts_with('@'))
        .collect()
}

/// Executes a rollup over a document.
///
/// Facts are visited in document order. Within a fact, the most detailed
/// level elements (children of the hierarchy container) are checked first;
/// each is then scanned in preorder for a descendant carrying the target
/// value. The first hit aggregates the fact's measure and stops the scan for
/// that fact.
pub fn rollup(t: &DataTree, q: &RollupQuery) -> Result<RollupResult, RollupError> {
    q.check()?;
    let mut state = AggregateState::new();
    // Level label at the first match, reported in the witness.
    let mut matched_level_label: Option<String> = None;

    for fact in facts_in_document_order(t, &q.fact_label) {
        let mut stop = false;
        for container in non_attribute_children(t, fact)
            .into_iter()
            .filter(|c| t.label(*c) == q.hierarchy_root_label)
        {
            if stop {
                break;
            }
            for detailed in non_attribute_children(t, container) {
                if stop {
                    break;
                }
                if level_value(t, detailed) == Some(q.target_value.as_str()) {
                    state = aggregate_step(state, measure_of(t, fact, &q.measure_label)?, q.agg)?;
                    matched_level_label.get_or_insert_with(|| t.label(detailed).to_string());
                    stop = true;
                    break;
                }
                for descendant in non_attribute_descendants(t, detailed) {
                    if level_value(t, descendant) == Some(q.target_value.as_str()) {
                        state = aggregate_step(state, measure_of(t, fact, &q.measure_label)?, q.agg)?;
                        matched_level_label.get_or_insert_with(|| t.label(descendant).to_string());
                        stop = true;
                        break;
                    }
                }
            }
        }
    }

    let value = finalize(state, q.agg)?;
    let witness = rollup_witness(t, q, value, state.count, matched_level_label.as_deref());
    Ok(RollupResult { witness, value, matched_facts: state.count })
}

/// Witness shape: the fact document's root label over (a) the hierarchy root
/// containing one level node valued with the target, when anything matched,
/// and (b) an `Aggregate` node carrying the finalized value with the matched
/// fact count as a `Count` attribute.
fn rollup_witness(
    t: &DataTree,
    q: &RollupQuery,
    value: Decimal,
    count: u64,
    matched_level_label: Option<&str>,
) -> WitnessTree {
    let mut builder = TreeBuilder::new(t.label(t.root()), None);
    if let Some(level_label) = matched_level_label {
        let container = builder.add_child(builder.root(), q.hierarchy_root_label.clone(), None);
        builder.add_child(container, level_label, Some(q.target_value.clone()));
    }
    let aggregate = builder.add_child(builder.root(), "Aggregate", Some(value.normalize().to_string()));
    builder.add_child(aggregate, "@Count", Some(count.to_string()));
    WitnessTree::from_tree(builder.build())
}

/// Independent rollup oracle: per fact, collect the set of every level value
/// reachable inside its hierarchy containers, aggregate the fact's measure
/// iff the target value is in the set (each fact at most once), and finalize.
pub fn rollup_oracle(t: &DataTree, q: &RollupQuery) -> Result<Decimal, RollupError> {
    rollup_oracle_with_limit(t, q, ORACLE_NODE_LIMIT)
}

pub fn rollup_oracle_with_limit(
    t: &DataTree,
    q: &RollupQuery,
    limit: usize,
) -> Result<Decimal, RollupError> {
    q.check()?;
    if t.len() > limit {
        return Err(RollupError::OracleLimit { actual: t.len(), limit });
    }
    let mut state = AggregateState::new();
    for fact in facts_in_document_order(t, &q.fact_label) {
        let mut reachable: Vec<&str> = Vec::new();
        for container in non_attribute_children(t, fact)
            .into_iter()
            .filter(|c| t.label(*c) == q.hierarchy_root_label)
        {
            for d in non_attribute_descendants(t, container) {
                if let Some(v) = level_value(t, d) {
                    reachable.push(v);
                }
            }
        }
        if reachable.contains(&q.target_value.as_str()) {
            state = aggregate_step(state, measure_of(t, fact, &q.measure_label)?, q.agg)?;
        }
    }
    finalize(state, q.agg)
}
