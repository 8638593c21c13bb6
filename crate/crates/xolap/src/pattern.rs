//! Tree pattern queries: pattern trees with pc/ad edges, edge annotations,
//! output and computed flags, and a boolean formula over node values.
//!
//! An edge carries two annotation vocabularies that must agree: a cardinality
//! (`-` exactly one, `+` one grouped to many, `*` zero or grouped many, `?`
//! zero or one) and a mandatory/optional flag. The default annotation
//! (`-`, mandatory, unordered) reproduces the basic pattern tree; grouping
//! and optional edges opt in per edge.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;
use serde_json::{json, Value};
use thiserror::Error;

use crate::matcher::{Binding, VarBinding};
use crate::xmltree::DataTree;

/// A pattern variable, rendered `$0`, `$1`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternVar(pub u32);

impl fmt::Display for PatternVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${}", self.0)
    }
}

/// Edge relationship: parent-child (`/`) or ancestor-descendant (`//`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Pc,
    Ad,
}

/// Match cardinality of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cardinality {
    /// `-`: exactly one match per binding (classic tuple semantics).
    ExactlyOne,
    /// `+`: one or more sibling matches grouped into one binding.
    OneToMany,
    /// `*`: zero matches (unbound) or grouped many.
    ZeroToMany,
    /// `?`: zero (unbound) or one match.
    ZeroOrOne,
}

impl Cardinality {
    pub fn symbol(self) -> &'static str {
        match self {
            Cardinality::ExactlyOne => "-",
            Cardinality::OneToMany => "+",
            Cardinality::ZeroToMany => "*",
            Cardinality::ZeroOrOne => "?",
        }
    }

    /// The mandatory/optional reading implied by this cardinality.
    pub fn implies_mandatory(self) -> bool {
        matches!(self, Cardinality::ExactlyOne | Cardinality::OneToMany)
    }

    /// True for the cardinalities that collapse sibling matches into one binding.
    pub fn grouped(self) -> bool {
        matches!(self, Cardinality::OneToMany | Cardinality::ZeroToMany)
    }

    fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "-" => Some(Cardinality::ExactlyOne),
            "+" => Some(Cardinality::OneToMany),
            "*" => Some(Cardinality::ZeroToMany),
            "?" => Some(Cardinality::ZeroOrOne),
            _ => None,
        }
    }
}

/// Cardinality, mandatory flag and order flag of one edge. The cardinality
/// and the mandatory flag must agree ([`EdgeAnnotation::agrees`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeAnnotation {
    pub cardinality: Cardinality,
    pub mandatory: bool,
    pub ordered: bool,
}

impl Default for EdgeAnnotation {
    fn default() -> Self {
        EdgeAnnotation { cardinality: Cardinality::ExactlyOne, mandatory: true, ordered: false }
    }
}

impl EdgeAnnotation {
    pub fn agrees(&self) -> bool {
        self.mandatory == self.cardinality.implies_mandatory()
    }
}

/// Edge from a pattern node to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub kind: EdgeKind,
    pub annotation: EdgeAnnotation,
}

impl Edge {
    pub fn pc() -> Self {
        Edge { kind: EdgeKind::Pc, annotation: EdgeAnnotation::default() }
    }

    pub fn ad() -> Self {
        Edge { kind: EdgeKind::Ad, annotation: EdgeAnnotation::default() }
    }

    pub fn with_cardinality(mut self, c: Cardinality) -> Self {
        self.annotation.cardinality = c;
        self.annotation.mandatory = c.implies_mandatory();
        self
    }
}

/// One node of a pattern tree.
///
/// `output` marks nodes that appear in the witness tree; `computed` marks
/// nodes excluded from matching because they have no data-tree counterpart
/// (they carry derived results such as aggregates).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternNode {
    pub var: PatternVar,
    /// Required element label; `None` is a wildcard.
    pub label_test: Option<String>,
    pub output: bool,
    pub computed: bool,
    pub parent: Option<PatternVar>,
    pub edge: Option<Edge>,
}

/// Value accessor of a predicate subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accessor {
    Value,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl Comparator {
    fn code(self) -> &'static str {
        match self {
            Comparator::Eq => "eq",
            Comparator::Ne => "ne",
            Comparator::Lt => "lt",
            Comparator::Le => "le",
            Comparator::Gt => "gt",
            Comparator::Ge => "ge",
            Comparator::Contains => "contains",
        }
    }

    fn from_code(s: &str) -> Option<Self> {
        match s {
            "eq" => Some(Comparator::Eq),
            "ne" => Some(Comparator::Ne),
            "lt" => Some(Comparator::Lt),
            "le" => Some(Comparator::Le),
            "gt" => Some(Comparator::Gt),
            "ge" => Some(Comparator::Ge),
            "contains" => Some(Comparator::Contains),
            _ => None,
        }
    }
}

/// A predicate leaf: `subject.accessor <comparator> constant`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub subject: PatternVar,
    pub accessor: Accessor,
    pub comparator: Comparator,
    pub constant: String,
}

/// Boolean combination of predicates on node values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    Pred(Predicate),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    /// Variables referenced anywhere in the formula.
    pub fn referenced_vars(&self) -> BTreeSet<PatternVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<PatternVar>) {
        match self {
            Formula::True => {}
            Formula::Pred(p) => {
                out.insert(p.subject);
            }
            Formula::And(args) | Formula::Or(args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            Formula::Not(inner) => inner.collect_vars(out),
        }
    }
}

/// A validated-or-not pattern tree; run [`validate_pattern`] to get the
/// invariant report. Matching assumes an empty report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternTree {
    nodes: BTreeMap<PatternVar, PatternNode>,
    root: PatternVar,
    formula: Formula,
    children: BTreeMap<PatternVar, Vec<PatternVar>>,
}

impl PatternTree {
    /// Assembles a pattern tree from its nodes. Fails only when the node set
    /// is structurally unusable (duplicate variables, or no root candidate);
    /// all other invariant violations are left to [`validate_pattern`].
    pub fn new(nodes: Vec<PatternNode>, formula: Formula) -> Result<Self, PatternError> {
        let mut map = BTreeMap::new();
        for n in nodes {
            let var = n.var;
            if map.insert(var, n).is_some() {
                return Err(PatternError::Schema {
                    field: "nodes".into(),
                    message: format!("duplicate variable {var}"),
                });
            }
        }
        let root = map
            .values()
            .find(|n| n.parent.is_none())
            .map(|n| n.var)
            .ok_or_else(|| PatternError::Schema {
                field: "nodes".into(),
                message: "no root node (every node has a parent)".into(),
            })?;
        let mut children: BTreeMap<PatternVar, Vec<PatternVar>> = BTreeMap::new();
        for node in map.values() {
            if let Some(p) = node.parent {
                children.entry(p).or_default().push(node.var);
            }
        }
        Ok(PatternTree { nodes: map, root, formula, children })
    }

    pub fn root(&self) -> PatternVar {
        self.root
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn node(&self, v: PatternVar) -> &PatternNode {
        &self.nodes[&v]
    }

    pub fn contains(&self, v: PatternVar) -> bool {
        self.nodes.contains_key(&v)
    }

    /// All nodes in variable order.
    pub fn vars(&self) -> impl Iterator<Item = PatternVar> + '_ {
        self.nodes.keys().copied()
    }

    /// Children of a node, in sibling (variable) order.
    pub fn children(&self, v: PatternVar) -> &[PatternVar] {
        self.children.get(&v).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Variables that take part in matching, i.e. all non-computed ones.
    pub fn matched_vars(&self) -> Vec<PatternVar> {
        self.nodes.values().filter(|n| !n.computed).map(|n| n.var).collect()
    }

    /// Descendant variables of `v`, excluding `v` itself.
    pub fn descendant_vars(&self, v: PatternVar) -> Vec<PatternVar> {
        let mut out = Vec::new();
        let mut stack: Vec<PatternVar> = self.children(v).to_vec();
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.children(c));
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("pattern JSON is malformed: {0}")]
    Json(String),
    #[error("pattern schema violation in field `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("pattern is invalid: {0}")]
    Invalid(ValidationReport),
}

/// One invariant violation found by [`validate_pattern`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub var: Option<PatternVar>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.var {
            Some(v) => write!(f, "{v}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let all: Vec<String> = self.violations.iter().map(Violation::to_string).collect();
        write!(f, "{}", all.join("; "))
    }
}

/// Checks every pattern-tree invariant and returns one entry per violation.
pub fn validate_pattern(pt: &PatternTree) -> ValidationReport {
    let mut violations = Vec::new();
    let mut report = |var: Option<PatternVar>, message: String| {
        violations.push(Violation { var, message });
    };

    for node in pt.nodes.values() {
        let v = node.var;
        if v == pt.root() {
            if node.parent.is_some() || node.edge.is_some() {
                report(Some(v), "pattern root must not have a parent edge".into());
            }
        } else {
            match node.parent {
                None => report(Some(v), "only the pattern root may lack a parent".into()),
                Some(p) if !pt.contains(p) => {
                    report(Some(v), format!("parent {p} is not declared"));
                }
                Some(_) => {}
            }
            match node.edge {
                None => report(Some(v), "non-root node must carry an edge to its parent".into()),
                Some(edge) => {
                    if !edge.annotation.agrees() {
                        report(
                            Some(v),
                            format!(
                                "edge annotation disagreement: cardinality '{}' with mandatory={}",
                                edge.annotation.cardinality.symbol(),
                                edge.annotation.mandatory
                            ),
                        );
                    }
                    if edge.annotation.cardinality.grouped() && !pt.children(v).is_empty() {
                        report(
                            Some(v),
                            format!(
                                "grouped cardinality '{}' is only supported on leaf nodes",
                                edge.annotation.cardinality.symbol()
                            ),
                        );
                    }
                }
            }
        }
        if node.computed && !pt.children(v).is_empty() {
            report(Some(v), "computed node must be a leaf".into());
        }
        if let Some(label) = &node.label_test {
            if label.is_empty() {
                report(Some(v), "label test must be non-empty (omit it for a wildcard)".into());
            }
        }
    }

    // Reachability from the root.
    let mut reachable: BTreeSet<PatternVar> = BTreeSet::new();
    let mut stack = vec![pt.root()];
    while let Some(v) = stack.pop() {
        if reachable.insert(v) {
            stack.extend(pt.children(v));
        }
    }
    for v in pt.vars() {
        if !reachable.contains(&v) {
            report(Some(v), "node is not reachable from the pattern root".into());
        }
    }

    if !pt.nodes.values().any(|n| n.output) {
        report(None, "pattern must have at least one output node".into());
    }

    for v in pt.formula().referenced_vars() {
        if !pt.contains(v) {
            report(Some(v), "formula references an undeclared variable".into());
            continue;
        }
        let node = pt.node(v);
        if node.computed {
            report(Some(v), "formula must not reference a computed node".into());
        }
        if let Some(edge) = node.edge {
            if edge.annotation.cardinality.grouped() {
                report(Some(v), "formula must not reference a grouped (+/*) node".into());
            }
        }
    }

    ValidationReport { violations }
}

/// Compares two scalar texts: `<, <=, >, >=` first attempt numeric
/// comparison (both sides parse as decimal numbers) and otherwise fall back
/// to lexicographic order; equality is plain text equality.
pub fn compare_scalars(lhs: &str, comparator: Comparator, rhs: &str) -> bool {
    match comparator {
        Comparator::Eq => lhs == rhs,
        Comparator::Ne => lhs != rhs,
        Comparator::Contains => lhs.contains(rhs),
        Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge => {
            let ord = match (Decimal::from_str(lhs), Decimal::from_str(rhs)) {
                (Ok(a), Ok(b)) => a.cmp(&b),
                _ => lhs.cmp(rhs),
            };
            match comparator {
                Comparator::Lt => ord == Ordering::Less,
                Comparator::Le => ord != Ordering::Greater,
                Comparator::Gt => ord == Ordering::Greater,
                Comparator::Ge => ord != Ordering::Less,
                _ => unreachable!(),
            }
        }
    }
}

/// Evaluates a formula against one binding. A predicate over an unbound
/// variable (or a node without a value, under the `value` accessor)
/// evaluates to false.
pub fn eval_formula(f: &Formula, b: &Binding, t: &DataTree) -> bool {
    match f {
        Formula::True => true,
        Formula::And(args) => args.iter().all(|a| eval_formula(a, b, t)),
        Formula::Or(args) => args.iter().any(|a| eval_formula(a, b, t)),
        Formula::Not(inner) => !eval_formula(inner, b, t),
        Formula::Pred(p) => eval_predicate(p, b, t),
    }
}

fn eval_predicate(p: &Predicate, b: &Binding, t: &DataTree) -> bool {
    let Some(binding) = b.get(p.subject) else {
        return false;
    };
    let nodes: &[crate::xmltree::NodeId] = match binding {
        VarBinding::One(n) => std::slice::from_ref(n),
        VarBinding::Many(ns) => ns.as_slice(),
    };
    nodes.iter().any(|n| {
        let subject = match p.accessor {
            Accessor::Value => t.value(*n),
            Accessor::Label => Some(t.label(*n)),
        };
        subject.is_some_and(|lhs| compare_scalars(lhs, p.comparator, &p.constant))
    })
}

// ---------------------------------------------------------------------------
// External pattern format (JSON).

/// Parses the pattern JSON format, forwarding invariant violations as errors.
pub fn parse_pattern(input: &str) -> Result<PatternTree, PatternError> {
    let (pt, report) = parse_pattern_lenient(input)?;
    if !report.is_empty() {
        return Err(PatternError::Invalid(report));
    }
    Ok(pt)
}

/// Parses the pattern JSON format but returns invariant violations as a
/// report instead of failing, for `validate`-style front ends. Structural
/// schema violations still fail.
pub fn parse_pattern_lenient(input: &str) -> Result<(PatternTree, ValidationReport), PatternError> {
    let value: Value = serde_json::from_str(input).map_err(|e| PatternError::Json(e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| schema_err("", "expected a JSON object"))?;
    for key in obj.keys() {
        if key != "nodes" && key != "formula" {
            return Err(schema_err(key, "unknown field"));
        }
    }
    let nodes_value = obj.get("nodes").ok_or_else(|| schema_err("nodes", "missing field"))?;
    let node_values = nodes_value.as_array().ok_or_else(|| schema_err("nodes", "expected an array"))?;
    let mut nodes = Vec::with_capacity(node_values.len());
    for (i, nv) in node_values.iter().enumerate() {
        nodes.push(parse_node(nv, &format!("nodes[{i}]"))?);
    }
    let formula = match obj.get("formula") {
        None => Formula::True,
        Some(fv) => parse_formula(fv, "formula")?,
    };
    let pt = PatternTree::new(nodes, formula)?;
    let report = validate_pattern(&pt);
    Ok((pt, report))
}

fn schema_err(field: &str, message: &str) -> PatternError {
    PatternError::Schema { field: field.to_string(), message: message.to_string() }
}

fn get_u32(obj: &serde_json::Map<String, Value>, key: &str, field: &str) -> Result<u32, PatternError> {
    obj.get(key)
        .and_then(Value::as_u64)
        .and_then(|v| u32::try_from(v).ok())
        .ok_or_else(|| schema_err(&format!("{field}.{key}"), "expected a non-negative integer"))
}

fn get_bool_or(obj: &serde_json::Map<String, Value>, key: &str, field: &str, default: bool) -> Result<bool, PatternError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_bool().ok_or_else(|| schema_err(&format!("{field}.{key}"), "expected a boolean")),
    }
}

fn parse_node(value: &Value, field: &str) -> Result<PatternNode, PatternError> {
    let obj = value.as_object().ok_or_else(|| schema_err(field, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "var" | "label" | "output" | "computed" | "parent" | "edge") {
            return Err(schema_err(&format!("{field}.{key}"), "unknown field"));
        }
    }
    let var = PatternVar(get_u32(obj, "var", field)?);
    let label_test = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(schema_err(&format!("{field}.label"), "expected a string or null")),
    };
    let output = get_bool_or(obj, "output", field, false)?;
    let computed = get_bool_or(obj, "computed", field, false)?;
    let parent = match obj.get("parent") {
        None | Some(Value::Null) => None,
        Some(v) => Some(PatternVar(
            v.as_u64()
                .and_then(|p| u32::try_from(p).ok())
                .ok_or_else(|| schema_err(&format!("{field}.parent"), "expected a non-negative integer or null"))?,
        )),
    };
    let edge = match obj.get("edge") {
        None | Some(Value::Null) => None,
        Some(v) => Some(parse_edge(v, &format!("{field}.edge"))?),
    };
    Ok(PatternNode { var, label_test, output, computed, parent, edge })
}

fn parse_edge(value: &Value, field: &str) -> Result<Edge, PatternError> {
    let obj = value.as_object().ok_or_else(|| schema_err(field, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "kind" | "card" | "ordered" | "mandatory") {
            return Err(schema_err(&format!("{field}.{key}"), "unknown field"));
        }
    }
    let kind = match obj.get("kind").and_then(Value::as_str) {
        Some("pc") => EdgeKind::Pc,
        Some("ad") => EdgeKind::Ad,
        _ => return Err(schema_err(&format!("{field}.kind"), "expected \"pc\" or \"ad\"")),
    };
    let cardinality = match obj.get("card") {
        None | Some(Value::Null) => Cardinality::ExactlyOne,
        Some(v) => v
            .as_str()
            .and_then(Cardinality::from_symbol)
            .ok_or_else(|| schema_err(&format!("{field}.card"), "expected one of \"-\", \"+\", \"*\", \"?\""))?,
    };
    let ordered = get_bool_or(obj, "ordered", field, false)?;
    // `mandatory` defaults to the value implied by the cardinality; an
    // explicit contradictory value is kept so validation can report it.
    let mandatory = get_bool_or(obj, "mandatory", field, cardinality.implies_mandatory())?;
    Ok(Edge { kind, annotation: EdgeAnnotation { cardinality, mandatory, ordered } })
}

fn parse_formula(value: &Value, field: &str) -> Result<Formula, PatternError> {
    match value {
        Value::Bool(true) => Ok(Formula::True),
        Value::Bool(false) => Err(schema_err(field, "literal false is not a formula; negate a predicate instead")),
        Value::Object(obj) => {
            let op = obj
                .get("op")
                .and_then(Value::as_str)
                .ok_or_else(|| schema_err(&format!("{field}.op"), "missing comparator or connective"))?;
            match op {
                "and" | "or" | "not" => {
                    for key in obj.keys() {
                        if key != "op" && key != "args" {
                            return Err(schema_err(&format!("{field}.{key}"), "unknown field"));
                        }
                    }
                    let args = obj
                        .get("args")
                        .and_then(Value::as_array)
                        .ok_or_else(|| schema_err(&format!("{field}.args"), "expected an array"))?;
                    let mut parsed = Vec::with_capacity(args.len());
                    for (i, a) in args.iter().enumerate() {
                        parsed.push(parse_formula(a, &format!("{field}.args[{i}]"))?);
                    }
                    match op {
                        "and" => Ok(Formula::And(parsed)),
                        "or" => Ok(Formula::Or(parsed)),
                        _ => {
                            if parsed.len() != 1 {
                                return Err(schema_err(
                                    &format!("{field}.args"),
                                    "\"not\" takes exactly one argument",
                                ));
                            }
                            Ok(Formula::Not(Box::new(parsed.into_iter().next().unwrap())))
                        }
                    }
                }
                code => {
                    let comparator = Comparator::from_code(code).ok_or_else(|| {
                        schema_err(&format!("{field}.op"), "unknown comparator or connective")
                    })?;
                    for key in obj.keys() {
                        if !matches!(key.as_str(), "op" | "var" | "accessor" | "const") {
                            return Err(schema_err(&format!("{field}.{key}"), "unknown field"));
                        }
                    }
                    let subject = PatternVar(get_u32(obj, "var", field)?);
                    let accessor = match obj.get("accessor") {
                        None | Some(Value::Null) => Accessor::Value,
                        Some(v) => match v.as_str() {
                            Some("value") => Accessor::Value,
                            Some("label") => Accessor::Label,
                            _ => {
                                return Err(schema_err(
                                    &format!("{field}.accessor"),
                                    "expected \"value\" or \"label\"",
                                ))
                            }
                        },
                    };
                    let constant = obj
                        .get("const")
                        .and_then(Value::as_str)
                        .ok_or_else(|| schema_err(&format!("{field}.const"), "expected a string"))?
                        .to_string();
                    Ok(Formula::Pred(Predicate { subject, accessor, comparator, constant }))
                }
            }
        }
        _ => Err(schema_err(field, "expected true or an object")),
    }
}

/// Renders a pattern to its canonical JSON form: nodes sorted by variable,
/// fixed key order, the trivial formula rendered as `true`.
/// `parse_pattern(render_pattern(pt))` reproduces `pt` up to formula
/// normalization, and rendering is a fixed point on canonical inputs.
pub fn render_pattern(pt: &PatternTree) -> String {
    let nodes: Vec<Value> = pt
        .vars()
        .map(|v| {
            let n = pt.node(v);
            json!({
                "var": n.var.0,
                "label": n.label_test,
                "output": n.output,
                "computed": n.computed,
                "parent": n.parent.map(|p| p.0),
                "edge": n.edge.map(|e| {
                    json!({
                        "kind": match e.kind { EdgeKind::Pc => "pc", EdgeKind::Ad => "ad" },
                        "card": e.annotation.cardinality.symbol(),
                        "ordered": e.annotation.ordered,
                    })
                }),
            })
        })
        .collect();
    let doc = json!({ "nodes": nodes, "formula": render_formula(pt.formula()) });
    serde_json::to_string(&doc).expect("pattern JSON is serializable")
}

fn render_formula(f: &Formula) -> Value {
    match f {
        Formula::True => Value::Bool(true),
        Formula::And(args) if args.is_empty() => Value::Bool(true),
        Formula::And(args) => json!({"op": "and", "args": args.iter().map(render_formula).collect::<Vec<_>>()}),
        Formula::Or(args) => json!({"op": "or", "args": args.iter().map(render_formula).collect::<Vec<_>>()}),
        Formula::Not(inner) => json!({"op": "not", "args": [render_formula(inner)]}),
        Formula::Pred(p) => json!({
            "op": p.comparator.code(),
            "var": p.subject.0,
            "accessor": match p.accessor { Accessor::Value => "value", Accessor::Label => "label" },
            "const": p.constant,
        }),
    }
}
