//! Pattern-tree matching: embeddings (structure only), matchings (structure
//! plus formula), witness-tree construction, and an independent brute-force
//! oracle for cross-checking the engine.
//!
//! The engine is a top-down backtracking search over label-filtered candidate
//! lists, with ancestor tests answered by preorder/postorder numbering. The
//! oracle enumerates variable-to-node tuples over the whole node set and
//! filters them by the pairwise edge, label and cardinality constraints, so
//! the two take different routes to the same answer.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::pattern::{eval_formula, Cardinality, EdgeKind, PatternNode, PatternTree, PatternVar};
use crate::xmltree::{DataTree, NodeId, TreeBuilder};

/// Default size limits of [`match_oracle`].
pub const ORACLE_PATTERN_LIMIT: usize = 8;
pub const ORACLE_TREE_LIMIT: usize = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("oracle refused: {what} has size {actual}, limit is {limit}")]
    OracleLimit { what: &'static str, actual: usize, limit: usize },
    #[error("binding does not originate from this pattern and tree: {0}")]
    ForeignBinding(String),
}

/// What one pattern variable is bound to: a single node, or the ordered set
/// of sibling matches collapsed under a grouped (`+`/`*`) edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarBinding {
    One(NodeId),
    Many(Vec<NodeId>),
}

impl VarBinding {
    pub fn nodes(&self) -> &[NodeId] {
        match self {
            VarBinding::One(n) => std::slice::from_ref(n),
            VarBinding::Many(ns) => ns.as_slice(),
        }
    }
}

/// A map from pattern variables to data-tree nodes; variables under optional
/// edges (and computed variables) may be absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Binding {
    assignments: BTreeMap<PatternVar, VarBinding>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn get(&self, v: PatternVar) -> Option<&VarBinding> {
        self.assignments.get(&v)
    }

    /// The bound node of a non-grouped variable.
    pub fn single(&self, v: PatternVar) -> Option<NodeId> {
        match self.assignments.get(&v) {
            Some(VarBinding::One(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn bind_one(&mut self, v: PatternVar, n: NodeId) {
        self.assignments.insert(v, VarBinding::One(n));
    }

    pub fn bind_many(&mut self, v: PatternVar, ns: Vec<NodeId>) {
        self.assignments.insert(v, VarBinding::Many(ns));
    }

    pub fn iter(&self) -> impl Iterator<Item = (PatternVar, &VarBinding)> {
        self.assignments.iter().map(|(v, b)| (*v, b))
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    fn merged(&self, other: &Binding) -> Binding {
        let mut out = self.clone();
        for (v, b) in &other.assignments {
            out.assignments.insert(*v, b.clone());
        }
        out
    }

    /// Renders the binding as a JSON object mapping `$n` to absolute
    /// child-index paths; grouped variables map to arrays of paths.
    pub fn to_json(&self, t: &DataTree) -> Value {
        let mut obj = serde_json::Map::new();
        for (v, b) in &self.assignments {
            let entry = match b {
                VarBinding::One(n) => Value::String(t.path_of(*n)),
                VarBinding::Many(ns) => {
                    Value::Array(ns.iter().map(|n| Value::String(t.path_of(*n))).collect())
                }
            };
            obj.insert(v.to_string(), entry);
        }
        Value::Object(obj)
    }
}

fn label_ok(node: &PatternNode, t: &DataTree, d: NodeId) -> bool {
    node.label_test.as_deref().is_none_or(|l| t.label(d) == l)
}

fn structural_candidates(pt: &PatternTree, t: &DataTree, child: PatternVar, under: NodeId) -> Vec<NodeId> {
    let node = pt.node(child);
    let edge = node.edge.expect("non-root pattern node carries an edge");
    let pool: Vec<NodeId> = match edge.kind {
        EdgeKind::Pc => t.children(under).to_vec(),
        EdgeKind::Ad => t.descendants(under).expect("bound node exists"),
    };
    pool.into_iter().filter(|d| label_ok(node, t, *d)).collect()
}

/// Bindings of the matched subtree rooted at `v`, given `v` is bound to `d`.
/// The caller has already checked `d` against `v`'s label test.
fn solve(pt: &PatternTree, t: &DataTree, v: PatternVar, d: NodeId) -> Vec<Binding> {
    let mut acc = {
        let mut b = Binding::new();
        b.bind_one(v, d);
        vec![b]
    };
    for &c in pt.children(v) {
        if pt.node(c).computed {
            continue;
        }
        let card = pt.node(c).edge.expect("non-root").annotation.cardinality;
        let candidates = structural_candidates(pt, t, c, d);
        let branches: Vec<Binding> = match card {
            Cardinality::ExactlyOne | Cardinality::ZeroOrOne => {
                let mut subs = Vec::new();
                for e in candidates {
                    subs.extend(solve(pt, t, c, e));
                }
                if subs.is_empty() {
                    if card == Cardinality::ZeroOrOne {
                        // No viable match: the node and its subtree stay unbound.
                        vec![Binding::new()]
                    } else {
                        return Vec::new();
                    }
                } else {
                    subs
                }
            }
            Cardinality::OneToMany | Cardinality::ZeroToMany => {
                // Grouped edges are restricted to leaf pattern nodes, so a
                // candidate is viable iff it passes the structural filter.
                if candidates.is_empty() {
                    if card == Cardinality::ZeroToMany {
                        vec![Binding::new()]
                    } else {
                        return Vec::new();
                    }
                } else {
                    let mut b = Binding::new();
                    b.bind_many(c, candidates);
                    vec![b]
                }
            }
        };
        let mut next = Vec::with_capacity(acc.len() * branches.len());
        for a in &acc {
            for b in &branches {
                next.push(a.merged(b));
            }
        }
        acc = next;
    }
    acc
}

fn enumerate(pt: &PatternTree, t: &DataTree, apply_formula: bool) -> Vec<Binding> {
    let root_node = pt.node(pt.root());
    let mut out = Vec::new();
    for d in t.preorder() {
        if !label_ok(root_node, t, d) {
            continue;
        }
        for b in solve(pt, t, pt.root(), d) {
            if !apply_formula || eval_formula(pt.formula(), &b, t) {
                out.push(b);
            }
        }
    }
    sort_bindings(pt, t, &mut out);
    out.dedup();
    out
}

/// All structural embeddings of `pt` into `t`, ignoring the formula.
pub fn embed(pt: &PatternTree, t: &DataTree) -> Vec<Binding> {
    enumerate(pt, t, false)
}

/// All matchings: the embeddings whose binding satisfies the formula.
pub fn match_pattern(pt: &PatternTree, t: &DataTree) -> Vec<Binding> {
    enumerate(pt, t, true)
}

fn slot_cmp(t: &DataTree, a: Option<&VarBinding>, b: Option<&VarBinding>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => {
            let xs = x.nodes().iter().map(|n| t.doc_order(*n));
            let ys = y.nodes().iter().map(|n| t.doc_order(*n));
            xs.cmp(ys)
        }
    }
}

/// Orders bindings by document order of the pattern-root binding, then by
/// each variable in ascending index.
pub fn sort_bindings(pt: &PatternTree, t: &DataTree, bindings: &mut [Binding]) {
    let root = pt.root();
    let vars: Vec<PatternVar> = pt.vars().collect();
    bindings.sort_by(|a, b| {
        slot_cmp(t, a.get(root), b.get(root)).then_with(|| {
            for &v in &vars {
                let ord = slot_cmp(t, a.get(v), b.get(v));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            Ordering::Equal
        })
    });
}

// ---------------------------------------------------------------------------
// Brute-force oracle.

/// Brute-force reference matcher: enumerates variable-to-node tuples over the
/// entire node set (with an unbound slot for optional variables), filters by
/// the pairwise structural constraints, resolves grouped variables directly,
/// keeps optional variables unbound only where no bound alternative exists,
/// and finally applies the formula.
///
/// Refuses inputs above [`ORACLE_PATTERN_LIMIT`] / [`ORACLE_TREE_LIMIT`]; the
/// tree limit can be raised explicitly via [`match_oracle_with_limit`].
pub fn match_oracle(pt: &PatternTree, t: &DataTree) -> Result<Vec<Binding>, MatchError> {
    match_oracle_with_limit(pt, t, ORACLE_TREE_LIMIT)
}

pub fn match_oracle_with_limit(
    pt: &PatternTree,
    t: &DataTree,
    tree_limit: usize,
) -> Result<Vec<Binding>, MatchError> {
    let matched = pt.matched_vars();
    if matched.len() > ORACLE_PATTERN_LIMIT {
        return Err(MatchError::OracleLimit {
            what: "pattern (non-computed nodes)",
            actual: matched.len(),
            limit: ORACLE_PATTERN_LIMIT,
        });
    }
    if t.len() > tree_limit {
        return Err(MatchError::OracleLimit { what: "tree", actual: t.len(), limit: tree_limit });
    }

    // Pattern preorder so that a parent is always assigned before its children.
    let mut enum_vars = Vec::new();
    let mut grouped_vars = Vec::new();
    let mut stack = vec![pt.root()];
    while let Some(v) = stack.pop() {
        let node = pt.node(v);
        if !node.computed {
            let grouped = node
                .edge
                .map(|e| e.annotation.cardinality.grouped())
                .unwrap_or(false);
            if grouped {
                grouped_vars.push(v);
            } else {
                enum_vars.push(v);
            }
        }
        for &c in pt.children(v).iter().rev() {
            stack.push(c);
        }
    }

    let nodes = t.preorder();
    let mut tuples: Vec<BTreeMap<PatternVar, Option<NodeId>>> = Vec::new();
    let mut current: BTreeMap<PatternVar, Option<NodeId>> = BTreeMap::new();
    enumerate_tuples(pt, t, &nodes, &enum_vars, 0, &mut current, &mut tuples);

    // Resolve grouped leaf variables per tuple.
    let mut structural: Vec<Binding> = Vec::new();
    'tuple: for tuple in tuples {
        let mut b = Binding::new();
        for (v, slot) in &tuple {
            if let Some(n) = slot {
                b.bind_one(*v, *n);
            }
        }
        for &g in &grouped_vars {
            let parent = pt.node(g).parent.expect("grouped node is not the root");
            match tuple.get(&parent).copied().flatten() {
                None => {} // unbound parent subtree: g stays unbound
                Some(dp) => {
                    let candidates = structural_candidates(pt, t, g, dp);
                    let card = pt.node(g).edge.expect("non-root").annotation.cardinality;
                    if candidates.is_empty() {
                        if card == Cardinality::OneToMany {
                            continue 'tuple;
                        }
                    } else {
                        b.bind_many(g, candidates);
                    }
                }
            }
        }
        structural.push(b);
    }

    // An optional variable may stay unbound only when no binding exists that
    // agrees everywhere outside its subtree and binds it.
    for v in pt.vars() {
        let node = pt.node(v);
        if node.computed {
            continue;
        }
        let optional = node
            .edge
            .map(|e| e.annotation.cardinality == Cardinality::ZeroOrOne)
            .unwrap_or(false);
        if !optional {
            continue;
        }
        let mut subtree: Vec<PatternVar> = pt.descendant_vars(v);
        subtree.push(v);
        let outside_key = |b: &Binding| -> Vec<(PatternVar, Option<VarBinding>)> {
            pt.vars()
                .filter(|u| !subtree.contains(u))
                .map(|u| (u, b.get(u).cloned()))
                .collect()
        };
        let bound_keys: Vec<_> = structural
            .iter()
            .filter(|b| b.get(v).is_some())
            .map(&outside_key)
            .collect();
        structural.retain(|b| b.get(v).is_some() || !bound_keys.contains(&outside_key(b)));
    }

    let mut out: Vec<Binding> = structural
        .into_iter()
        .filter(|b| eval_formula(pt.formula(), b, t))
        .collect();
    sort_bindings(pt, t, &mut out);
    out.dedup();
    Ok(out)
}

fn enumerate_tuples(
    pt: &PatternTree,
    t: &DataTree,
    nodes: &[NodeId],
    vars: &[PatternVar],
    i: usize,
    current: &mut BTreeMap<PatternVar, Option<NodeId>>,
    out: &mut Vec<BTreeMap<PatternVar, Option<NodeId>>>,
) {
    if i == vars.len() {
        out.push(current.clone());
        return;
    }
    let v = vars[i];
    let node = pt.node(v);
    let parent_slot = node.parent.map(|p| current.get(&p).copied().flatten());
    let optional = node
        .edge
        .map(|e| e.annotation.cardinality == Cardinality::ZeroOrOne)
        .unwrap_or(false);
    let parent_unbound = matches!(parent_slot, Some(None));

    // Unbound slot: allowed for optional variables, and forced wherever the
    // parent itself is unbound.
    if optional || parent_unbound {
        current.insert(v, None);
        enumerate_tuples(pt, t, nodes, vars, i + 1, current, out);
    }
    if !parent_unbound {
        for &d in nodes {
            if !label_ok(node, t, d) {
                continue;
            }
            let edge_ok = match node.parent {
                None => true,
                Some(_) => {
                    let dp = parent_slot.flatten().expect("parent assigned before child");
                    match node.edge.expect("non-root").kind {
                        EdgeKind::Pc => t.parent_of(d) == Some(dp),
                        EdgeKind::Ad => t.is_ancestor(dp, d),
                    }
                }
            };
            if !edge_ok {
                continue;
            }
            current.insert(v, Some(d));
            enumerate_tuples(pt, t, nodes, vars, i + 1, current, out);
        }
    }
    current.remove(&v);
}

// ---------------------------------------------------------------------------
// Witness trees.

/// The result tree built from the output nodes of a pattern's matchings.
#[derive(Debug, Clone)]
pub struct WitnessTree {
    tree: DataTree,
}

impl WitnessTree {
    pub fn from_tree(tree: DataTree) -> Self {
        WitnessTree { tree }
    }

    pub fn tree(&self) -> &DataTree {
        &self.tree
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.tree.serialize()
    }
}

/// Intermediate witness node, reordered before emission.
struct WNode {
    label: String,
    value: Option<String>,
    children: Vec<WChild>,
    /// Output copies get their children reordered; verbatim data-subtree
    /// copies keep data order.
    reorder: bool,
}

struct WChild {
    idx: usize,
    doc_order: u32,
    var_rank: u32,
    ordered_edge: bool,
}

/// Builds one witness tree from matchings of `pt` over `t`.
///
/// The root is a synthetic node labeled with the pattern root's label. Per
/// binding, every output (non-computed) node is copied under the copy of its
/// nearest output ancestor; copies of the same (variable, data node) pair
/// under the same parent merge, so a book bound by several matchings appears
/// once with all its matched children. Output leaves (no output descendants
/// in the pattern) are copied together with their full data subtree. Sibling
/// copies follow document order, or pattern-sibling order where an ordered
/// edge is involved.
pub fn build_witness(
    pt: &PatternTree,
    bindings: &[Binding],
    t: &DataTree,
) -> Result<WitnessTree, MatchError> {
    for b in bindings {
        for (v, vb) in b.iter() {
            if !pt.contains(v) {
                return Err(MatchError::ForeignBinding(format!("unknown variable {v}")));
            }
            for n in vb.nodes() {
                if !t.contains(*n) {
                    return Err(MatchError::ForeignBinding(format!("unknown node {n}")));
                }
            }
        }
    }

    // For every attachment point, the output variables directly below it
    // (skipping over non-output pattern nodes).
    let mut output_children: BTreeMap<PatternVar, Vec<PatternVar>> = BTreeMap::new();
    for v in pt.vars() {
        let mut found = Vec::new();
        let mut stack: Vec<PatternVar> = pt.children(v).iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            let node = pt.node(c);
            if node.computed {
                continue;
            }
            if node.output {
                found.push(c);
            } else {
                for &gc in pt.children(c).iter().rev() {
                    stack.push(gc);
                }
            }
        }
        output_children.insert(v, found);
    }

    let root_label =
        pt.node(pt.root()).label_test.clone().unwrap_or_else(|| "result".to_string());
    let mut arena: Vec<WNode> =
        vec![WNode { label: root_label, value: None, children: Vec::new(), reorder: true }];
    let mut merged: BTreeMap<(usize, PatternVar, VarBinding), Vec<usize>> = BTreeMap::new();

    for b in bindings {
        attach(pt, t, b, pt.root(), 0, &output_children, &mut arena, &mut merged);
    }

    // Emit, reordering output copies.
    let mut builder = TreeBuilder::new(arena[0].label.clone(), arena[0].value.clone());
    let ordered_root = order_children(&arena, 0);
    let mut stack: Vec<(usize, NodeId)> = ordered_root
        .into_iter()
        .rev()
        .map(|i| (i, builder.root()))
        .collect();
    while let Some((idx, parent)) = stack.pop() {
        let wnode = &arena[idx];
        let id = builder.add_child(parent, wnode.label.clone(), wnode.value.clone());
        for child_idx in order_children(&arena, idx).into_iter().rev() {
            stack.push((child_idx, id));
        }
    }
    Ok(WitnessTree { tree: builder.build() })
}

fn order_children(arena: &[WNode], idx: usize) -> Vec<usize> {
    let wnode = &arena[idx];
    let mut order: Vec<&WChild> = wnode.children.iter().collect();
    if wnode.reorder {
        if order.iter().any(|c| c.ordered_edge) {
            order.sort_by_key(|c| (c.var_rank, c.doc_order));
        } else {
            order.sort_by_key(|c| (c.doc_order, c.var_rank));
        }
    }
    order.into_iter().map(|c| c.idx).collect()
}

#[allow(clippy::too_many_arguments)]
fn attach(
    pt: &PatternTree,
    t: &DataTree,
    b: &Binding,
    at_var: PatternVar,
    at_idx: usize,
    output_children: &BTreeMap<PatternVar, Vec<PatternVar>>,
    arena: &mut Vec<WNode>,
    merged: &mut BTreeMap<(usize, PatternVar, VarBinding), Vec<usize>>,
) {
    for &c in &output_children[&at_var] {
        let Some(vb) = b.get(c) else {
            continue; // optional subtree left unbound by this binding
        };
        let key = (at_idx, c, vb.clone());
        let copies: Vec<usize> = match merged.get(&key) {
            Some(existing) => existing.clone(),
            None => {
                let node = pt.node(c);
                let ordered_edge = node.edge.map(|e| e.annotation.ordered).unwrap_or(false);
                let has_output_descendants = !output_children[&c].is_empty();
                let mut created = Vec::new();
                for &d in vb.nodes() {
                    let idx = if has_output_descendants {
                        let idx = arena.len();
                        arena.push(WNode {
                            label: t.label(d).to_string(),
                            value: t.value(d).map(str::to_string),
                            children: Vec::new(),
                            reorder: true,
                        });
                        idx
                    } else {
                        copy_data_subtree(t, d, arena)
                    };
                    arena[at_idx].children.push(WChild {
                        idx,
                        doc_order: t.doc_order(d),
                        var_rank: c.0,
                        ordered_edge,
                    });
                    created.push(idx);
                }
                merged.insert(key, created.clone());
                created
            }
        };
        if !output_children[&c].is_empty() {
            for (copy_idx, d) in copies.iter().zip(vb.nodes()) {
                debug_assert_eq!(arena[*copy_idx].label, t.label(*d));
                attach(pt, t, b, c, *copy_idx, output_children, arena, merged);
            }
        }
    }
}

/// Copies the full data subtree rooted at `d` into the arena verbatim.
fn copy_data_subtree(t: &DataTree, d: NodeId, arena: &mut Vec<WNode>) -> usize {
    let idx = arena.len();
    arena.push(WNode {
        label: t.label(d).to_string(),
        value: t.value(d).map(str::to_string),
        children: Vec::new(),
        reorder: false,
    });
    for &c in t.children(d) {
        let child_idx = copy_data_subtree(t, c, arena);
        let child = WChild { idx: child_idx, doc_order: t.doc_order(c), var_rank: 0, ordered_edge: false };
        arena[idx].children.push(child);
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{parse_pattern, Edge, Formula, PatternNode};
    use crate::xmltree::parse_document;

    const BOOKS: &[u8] = b"<doc>\
        <book><title>Computing systems</title><author>John</author><author>Mike</author>\
        <editor>Piter F.</editor><year>2002</year></book>\
        <book><title>A dummy for a computer</title><author>Jill</author><editor>W. Ley</editor>\
        <year>2004</year><summary>Computers for beginners</summary></book></doc>";

    fn fig1b() -> PatternTree {
        parse_pattern(
            r#"{
              "nodes": [
                {"var":0,"label":"doc","output":true,"computed":false,"parent":null,"edge":null},
                {"var":1,"label":"book","output":true,"computed":false,"parent":0,"edge":{"kind":"pc","card":"-","ordered":false}},
                {"var":2,"label":"title","output":true,"computed":false,"parent":1,"edge":{"kind":"pc","card":"-","ordered":false}},
                {"var":3,"label":"author","output":true,"computed":false,"parent":1,"edge":{"kind":"ad","card":"-","ordered":false}},
                {"var":4,"label":"editor","output":true,"computed":false,"parent":1,"edge":{"kind":"pc","card":"-","ordered":false}}
              ],
              "formula": {"op":"ne","var":3,"accessor":"value","const":"Jill"}
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn embedding_ignores_the_formula() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let embeddings = embed(&pt, &t);
        // Three authors across both books, one embedding each.
        assert_eq!(embeddings.len(), 3);
        let books: std::collections::BTreeSet<NodeId> =
            embeddings.iter().map(|b| b.single(PatternVar(1)).unwrap()).collect();
        assert_eq!(books.len(), 2, "both books are structurally eligible");
    }

    #[test]
    fn matching_applies_the_formula() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let matchings = match_pattern(&pt, &t);
        assert_eq!(matchings.len(), 2, "one binding per non-Jill author");
        let books: std::collections::BTreeSet<NodeId> =
            matchings.iter().map(|b| b.single(PatternVar(1)).unwrap()).collect();
        assert_eq!(books.len(), 1, "only one book is selected");
    }

    #[test]
    fn gill_book_matches_through_the_other_author() {
        let books = String::from_utf8_lossy(BOOKS).replace("<author>Jill</author>", "<author>Jill</author><author>Gill</author>");
        let t = parse_document(books.as_bytes()).unwrap();
        let matchings = match_pattern(&fig1b(), &t);
        let books: std::collections::BTreeSet<NodeId> =
            matchings.iter().map(|b| b.single(PatternVar(1)).unwrap()).collect();
        assert_eq!(books.len(), 2, "the second book appears via Gill");
    }

    #[test]
    fn true_formula_means_match_equals_embed() {
        let t = parse_document(BOOKS).unwrap();
        let mut pt = fig1b();
        pt = PatternTree::new(
            pt.vars().map(|v| pt.node(v).clone()).collect(),
            Formula::True,
        )
        .unwrap();
        assert_eq!(match_pattern(&pt, &t), embed(&pt, &t));
    }

    #[test]
    fn single_wildcard_node_binds_every_node() {
        let t = parse_document(b"<a><b/><c><d/></c></a>").unwrap();
        let pt = PatternTree::new(
            vec![PatternNode {
                var: PatternVar(0),
                label_test: None,
                output: true,
                computed: false,
                parent: None,
                edge: None,
            }],
            Formula::True,
        )
        .unwrap();
        assert_eq!(embed(&pt, &t).len(), t.len());
    }

    #[test]
    fn witness_reproduces_fig1c() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let matchings = match_pattern(&pt, &t);
        let witness = build_witness(&pt, &matchings, &t).unwrap();
        let xml = String::from_utf8(witness.serialize()).unwrap();
        assert_eq!(
            xml,
            "<doc><book><title>Computing systems</title><author>John</author>\
             <author>Mike</author><editor>Piter F.</editor></book></doc>"
                .replace("             ", "")
        );
    }

    #[test]
    fn grouped_author_edge_collapses_into_one_binding() {
        let t = parse_document(BOOKS).unwrap();
        let mut nodes: Vec<PatternNode> = fig1b().vars().map(|v| fig1b().node(v).clone()).collect();
        nodes[3].edge = Some(Edge::ad().with_cardinality(Cardinality::OneToMany));
        let pt = PatternTree::new(nodes, Formula::True).unwrap();
        assert!(crate::pattern::validate_pattern(&pt).is_empty());
        let matchings = match_pattern(&pt, &t);
        assert_eq!(matchings.len(), 2, "one grouped binding per book");
        let first = &matchings[0];
        assert_eq!(first.get(PatternVar(3)).unwrap().nodes().len(), 2);
        let witness = build_witness(&pt, &matchings[..1], &t).unwrap();
        let xml = String::from_utf8(witness.serialize()).unwrap();
        assert!(xml.contains("<author>John</author><author>Mike</author>"));
    }

    #[test]
    fn empty_bindings_yield_the_lone_synthetic_root() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let witness = build_witness(&pt, &[], &t).unwrap();
        assert_eq!(witness.serialize(), b"<doc/>");
    }

    #[test]
    fn witness_rejects_foreign_bindings() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let mut b = Binding::new();
        b.bind_one(PatternVar(9), t.root());
        assert!(matches!(
            build_witness(&pt, &[b], &t),
            Err(MatchError::ForeignBinding(_))
        ));
        let mut b2 = Binding::new();
        b2.bind_one(PatternVar(0), NodeId(999));
        assert!(matches!(
            build_witness(&pt, &[b2], &t),
            Err(MatchError::ForeignBinding(_))
        ));
    }

    #[test]
    fn oracle_agrees_on_the_books_fixture() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        assert_eq!(match_pattern(&pt, &t), match_oracle(&pt, &t).unwrap());
    }

    #[test]
    fn oracle_refuses_oversized_trees() {
        let mut xml = String::from("<r>");
        for _ in 0..50 {
            xml.push_str("<x/>");
        }
        xml.push_str("</r>");
        let t = parse_document(xml.as_bytes()).unwrap();
        let pt = fig1b();
        assert!(matches!(match_oracle(&pt, &t), Err(MatchError::OracleLimit { .. })));
    }

    #[test]
    fn unknown_label_matches_nothing() {
        let t = parse_document(BOOKS).unwrap();
        let pt = parse_pattern(r#"{"nodes":[{"var":0,"label":"zzz","output":true}]}"#).unwrap();
        assert!(match_pattern(&pt, &t).is_empty());
        assert!(match_oracle(&pt, &t).unwrap().is_empty());
    }

    #[test]
    fn match_is_a_subset_of_embed() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let embeddings = embed(&pt, &t);
        for m in match_pattern(&pt, &t) {
            assert!(embeddings.contains(&m));
        }
    }

    #[test]
    fn optional_edge_binds_when_possible() {
        // summary is optional: present on the second book only.
        let t = parse_document(BOOKS).unwrap();
        let pt = parse_pattern(
            r#"{
              "nodes": [
                {"var":0,"label":"doc","output":true,"computed":false,"parent":null,"edge":null},
                {"var":1,"label":"book","output":true,"computed":false,"parent":0,"edge":{"kind":"pc","card":"-","ordered":false}},
                {"var":2,"label":"summary","output":true,"computed":false,"parent":1,"edge":{"kind":"pc","card":"?","ordered":false}}
              ],
              "formula": true
            }"#,
        )
        .unwrap();
        let matchings = match_pattern(&pt, &t);
        assert_eq!(matchings.len(), 2);
        assert!(matchings[0].get(PatternVar(2)).is_none(), "first book has no summary");
        assert!(matchings[1].get(PatternVar(2)).is_some());
        assert_eq!(match_oracle(&pt, &t).unwrap(), matchings);
    }

    #[test]
    fn ordered_edges_follow_pattern_sibling_order() {
        // Pattern asks for editor before title; document order is reversed.
        let t = parse_document(BOOKS).unwrap();
        let make = |ordered: bool| {
            let mut edge = Edge::pc();
            edge.annotation.ordered = ordered;
            let pt = PatternTree::new(
                vec![
                    PatternNode { var: PatternVar(0), label_test: Some("doc".into()), output: true, computed: false, parent: None, edge: None },
                    PatternNode { var: PatternVar(1), label_test: Some("book".into()), output: true, computed: false, parent: Some(PatternVar(0)), edge: Some(Edge::pc()) },
                    PatternNode { var: PatternVar(2), label_test: Some("editor".into()), output: true, computed: false, parent: Some(PatternVar(1)), edge: Some(edge) },
                    PatternNode { var: PatternVar(3), label_test: Some("title".into()), output: true, computed: false, parent: Some(PatternVar(1)), edge: Some(edge) },
                ],
                Formula::True,
            )
            .unwrap();
            let matchings = match_pattern(&pt, &t);
            String::from_utf8(build_witness(&pt, &matchings, &t).unwrap().serialize()).unwrap()
        };
        let unordered = make(false);
        assert!(unordered.find("<title>").unwrap() < unordered.find("<editor>").unwrap());
        let ordered = make(true);
        assert!(ordered.find("<editor>").unwrap() < ordered.find("<title>").unwrap());
    }

    #[test]
    fn binding_json_uses_child_index_paths() {
        let t = parse_document(BOOKS).unwrap();
        let pt = fig1b();
        let matchings = match_pattern(&pt, &t);
        let json = matchings[0].to_json(&t);
        assert_eq!(json["$1"], "/doc/book[1]");
        assert_eq!(json["$2"], "/doc/book[1]/title[1]");
    }
}
