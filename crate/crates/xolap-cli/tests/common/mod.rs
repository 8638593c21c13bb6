//! Deterministic random generators for the acceptance campaigns: small
//! trees and patterns for engine-vs-oracle matching runs, and warehouse
//! documents with complex, strict-covering, or non-strict hierarchies for
//! rollup runs. Seeded ChaCha keeps failures reproducible.

use rand::Rng;
use rust_decimal::Decimal;

use xolap::pattern::{
    Accessor, Cardinality, Comparator, Edge, Formula, PatternNode, PatternTree, PatternVar,
    Predicate,
};
use xolap::xmltree::{DataTree, NodeId, TreeBuilder};

pub const TREE_LABELS: [&str; 4] = ["a", "b", "c", "d"];
pub const TREE_VALUES: [&str; 6] = ["1", "2", "10", "x", "y", "Jill"];

/// Random bushy tree of at most `max_nodes` nodes.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> DataTree {
    let n = rng.gen_range(2..=max_nodes.max(2));
    let label = |rng: &mut R| TREE_LABELS[rng.gen_range(0..TREE_LABELS.len())].to_string();
    let value = |rng: &mut R| {
        rng.gen_bool(0.7).then(|| TREE_VALUES[rng.gen_range(0..TREE_VALUES.len())].to_string())
    };
    let (root_label, root_value) = (label(rng), value(rng));
    let mut builder = TreeBuilder::new(root_label, root_value);
    let mut ids = vec![builder.root()];
    for _ in 1..n {
        let parent = ids[rng.gen_range(0..ids.len())];
        let (l, v) = (label(rng), value(rng));
        ids.push(builder.add_child(parent, l, v));
    }
    builder.build()
}

/// Random valid pattern of at most `max_nodes` nodes: sibling fanout capped
/// at two, grouped cardinalities only on leaves, formula over eligible
/// variables only.
pub fn random_pattern<R: Rng>(rng: &mut R, max_nodes: usize) -> PatternTree {
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut parent_of: Vec<Option<usize>> = vec![None];
    let mut fanout = vec![0usize; n];
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|p| fanout[*p] < 2).collect();
        let p = candidates[rng.gen_range(0..candidates.len())];
        fanout[p] += 1;
        parent_of.push(Some(p));
    }
    let has_children: Vec<bool> = (0..n).map(|i| fanout[i] > 0).collect();

    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let computed = parent_of[i].is_some() && !has_children[i] && rng.gen_bool(0.08);
        let cardinality = if computed || has_children[i] {
            if rng.gen_bool(0.15) {
                Cardinality::ZeroOrOne
            } else {
                Cardinality::ExactlyOne
            }
        } else {
            match rng.gen_range(0..100) {
                0..=69 => Cardinality::ExactlyOne,
                70..=84 => Cardinality::ZeroOrOne,
                85..=92 => Cardinality::OneToMany,
                _ => Cardinality::ZeroToMany,
            }
        };
        let edge = parent_of[i].map(|_| {
            let base = if rng.gen_bool(0.3) { Edge::ad() } else { Edge::pc() };
            base.with_cardinality(cardinality)
        });
        let label_test = (!rng.gen_bool(0.15))
            .then(|| TREE_LABELS[rng.gen_range(0..TREE_LABELS.len())].to_string());
        nodes.push(PatternNode {
            var: PatternVar(i as u32),
            label_test,
            output: rng.gen_bool(0.6),
            computed,
            parent: parent_of[i].map(|p| PatternVar(p as u32)),
            edge,
        });
    }
    if !nodes.iter().any(|pn| pn.output) {
        nodes[0].output = true;
    }

    let eligible: Vec<PatternVar> = nodes
        .iter()
        .filter(|pn| {
            !pn.computed
                && pn.edge.map(|e| !e.annotation.cardinality.grouped()).unwrap_or(true)
        })
        .map(|pn| pn.var)
        .collect();
    let formula = random_formula(rng, &eligible, 2);
    PatternTree::new(nodes, formula).expect("generated pattern is structurally sound")
}

fn random_formula<R: Rng>(rng: &mut R, eligible: &[PatternVar], depth: usize) -> Formula {
    if eligible.is_empty() || rng.gen_bool(0.2) {
        return Formula::True;
    }
    if depth == 0 || rng.gen_bool(0.6) {
        let comparators = [
            Comparator::Eq,
            Comparator::Ne,
            Comparator::Lt,
            Comparator::Le,
            Comparator::Gt,
            Comparator::Ge,
            Comparator::Contains,
        ];
        let pool: Vec<&str> = TREE_VALUES.iter().chain(TREE_LABELS.iter()).copied().collect();
        return Formula::Pred(Predicate {
            subject: eligible[rng.gen_range(0..eligible.len())],
            accessor: if rng.gen_bool(0.8) { Accessor::Value } else { Accessor::Label },
            comparator: comparators[rng.gen_range(0..comparators.len())],
            constant: pool[rng.gen_range(0..pool.len())].to_string(),
        });
    }
    match rng.gen_range(0..3) {
        0 => Formula::And(vec![
            random_formula(rng, eligible, depth - 1),
            random_formula(rng, eligible, depth - 1),
        ]),
        1 => Formula::Or(vec![
            random_formula(rng, eligible, depth - 1),
            random_formula(rng, eligible, depth - 1),
        ]),
        _ => Formula::Not(Box::new(random_formula(rng, eligible, depth - 1))),
    }
}

/// Upper bound on the binding count: the product of per-variable candidate
/// counts. Campaigns skip pathological pairs above a budget.
pub fn binding_bound(pt: &PatternTree, t: &DataTree) -> f64 {
    let mut bound = 1f64;
    for v in pt.vars() {
        let node = pt.node(v);
        if node.computed {
            continue;
        }
        let candidates = match &node.label_test {
            None => t.len(),
            Some(l) => t.preorder().into_iter().filter(|n| t.label(*n) == l).count(),
        };
        bound *= candidates.max(1) as f64;
    }
    bound
}

// ---------------------------------------------------------------------------
// Warehouse document generators.

pub struct WarehouseDoc {
    pub tree: DataTree,
    /// Values of the most general level, for summarizability checks.
    pub top_values: Vec<String>,
    /// Grand total of all fact measures.
    pub total: Decimal,
    /// Every level value present, for target picking.
    pub values_present: Vec<String>,
}

fn price<R: Rng>(rng: &mut R) -> Decimal {
    Decimal::new(rng.gen_range(1..=10_000), 2)
}

/// Adds one level element, holding its value either in a `name` attribute or
/// as text, matching both supported encodings.
fn add_level(
    b: &mut TreeBuilder,
    parent: NodeId,
    label: &str,
    value: &str,
    attr_encoding: bool,
) -> NodeId {
    if attr_encoding {
        let level = b.add_child(parent, label, None);
        b.add_child(level, "@name", Some(value.to_string()));
        level
    } else {
        b.add_child(parent, label, Some(value.to_string()))
    }
}

/// Unconstrained complex-hierarchy document: ragged chain shapes, shared
/// values across levels, occasional payload elements, sometimes a fact with
/// no hierarchy at all.
pub fn random_complex_doc<R: Rng>(rng: &mut R, max_facts: usize) -> WarehouseDoc {
    let value_pool: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
    let levels = ["C3", "C2", "C1"];
    let fact_count = rng.gen_range(1..=max_facts);
    let attr_encoding = rng.gen_bool(0.5);

    let mut b = TreeBuilder::new("sales", None);
    let mut total = Decimal::ZERO;
    let mut values_present = Vec::new();
    for i in 0..fact_count {
        let book = b.add_child(b.root(), "book", None);
        b.add_child(book, "title", Some(format!("t{i}")));
        if rng.gen_bool(0.9) {
            let cats = b.add_child(book, "categories", None);
            for _ in 0..rng.gen_range(0..=3) {
                // A chain may start below the most detailed level and may
                // skip any intermediate level.
                let start = rng.gen_range(0..levels.len());
                let mut parent = cats;
                for (j, label) in levels.iter().enumerate().skip(start) {
                    if j > start && !rng.gen_bool(0.8) {
                        continue;
                    }
                    let value = &value_pool[rng.gen_range(0..value_pool.len())];
                    parent = add_level(&mut b, parent, label, value, attr_encoding);
                    values_present.push(value.clone());
                    if rng.gen_bool(0.1) {
                        let noise = &value_pool[rng.gen_range(0..value_pool.len())];
                        b.add_child(parent, "note", Some(noise.clone()));
                        values_present.push(noise.clone());
                    }
                }
            }
        }
        let p = price(rng);
        total += p;
        b.add_child(book, "price", Some(p.normalize().to_string()));
    }
    WarehouseDoc {
        tree: b.build(),
        top_values: Vec::new(),
        total,
        values_present,
    }
}

/// Strict, covering document: a global single-parent hierarchy, one full
/// chain per fact, disjoint value pools per level.
pub fn random_strict_covering_doc<R: Rng>(rng: &mut R, max_facts: usize) -> WarehouseDoc {
    let detail: Vec<String> = (0..rng.gen_range(2..=5)).map(|i| format!("d{i}")).collect();
    let middle: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("m{i}")).collect();
    let top: Vec<String> = (0..rng.gen_range(2..=3)).map(|i| format!("g{i}")).collect();
    let middle_of: Vec<usize> = (0..detail.len()).map(|_| rng.gen_range(0..middle.len())).collect();
    let top_of: Vec<usize> = (0..middle.len()).map(|_| rng.gen_range(0..top.len())).collect();
    let attr_encoding = rng.gen_bool(0.5);

    let fact_count = rng.gen_range(1..=max_facts);
    let mut b = TreeBuilder::new("sales", None);
    let mut total = Decimal::ZERO;
    let mut values_present = Vec::new();
    for i in 0..fact_count {
        let book = b.add_child(b.root(), "book", None);
        b.add_child(book, "title", Some(format!("t{i}")));
        let cats = b.add_child(book, "categories", None);
        let d = rng.gen_range(0..detail.len());
        let m = middle_of[d];
        let g = top_of[m];
        let c3 = add_level(&mut b, cats, "C3", &detail[d], attr_encoding);
        let c2 = add_level(&mut b, c3, "C2", &middle[m], attr_encoding);
        add_level(&mut b, c2, "C1", &top[g], attr_encoding);
        values_present.extend([detail[d].clone(), middle[m].clone(), top[g].clone()]);
        let p = price(rng);
        total += p;
        b.add_child(book, "price", Some(p.normalize().to_string()));
    }
    WarehouseDoc { tree: b.build(), top_values: top, total, values_present }
}

/// Non-strict document: level instances may roll up to several parents and a
/// fact may carry several chains, but every chain still reaches the top
/// level (so per-top rollups cover every fact at least once).
pub fn random_non_strict_doc<R: Rng>(rng: &mut R, max_facts: usize) -> WarehouseDoc {
    let detail: Vec<String> = (0..rng.gen_range(2..=5)).map(|i| format!("d{i}")).collect();
    let middle: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("m{i}")).collect();
    let top: Vec<String> = (0..rng.gen_range(2..=3)).map(|i| format!("g{i}")).collect();
    // One or two middle parents per detail value; one top parent per middle.
    let middles_of: Vec<Vec<usize>> = (0..detail.len())
        .map(|_| {
            let mut picks = vec![rng.gen_range(0..middle.len())];
            if rng.gen_bool(0.5) {
                let extra = rng.gen_range(0..middle.len());
                if !picks.contains(&extra) {
                    picks.push(extra);
                }
            }
            picks
        })
        .collect();
    let top_of: Vec<usize> = (0..middle.len()).map(|_| rng.gen_range(0..top.len())).collect();
    let attr_encoding = rng.gen_bool(0.5);

    let fact_count = rng.gen_range(1..=max_facts);
    let mut b = TreeBuilder::new("sales", None);
    let mut total = Decimal::ZERO;
    let mut values_present = Vec::new();
    for i in 0..fact_count {
        let book = b.add_child(b.root(), "book", None);
        b.add_child(book, "title", Some(format!("t{i}")));
        let cats = b.add_child(book, "categories", None);
        let mut details: Vec<usize> = vec![rng.gen_range(0..detail.len())];
        if rng.gen_bool(0.4) {
            details.push(rng.gen_range(0..detail.len()));
        }
        details.dedup();
        for d in details {
            let c3 = add_level(&mut b, cats, "C3", &detail[d], attr_encoding);
            values_present.push(detail[d].clone());
            for &m in &middles_of[d] {
                // Occasionally skip the middle level; the chain still ends
                // at the top value the middle would have reached.
                let g = top_of[m];
                if rng.gen_bool(0.25) {
                    add_level(&mut b, c3, "C1", &top[g], attr_encoding);
                    values_present.push(top[g].clone());
                } else {
                    let c2 = add_level(&mut b, c3, "C2", &middle[m], attr_encoding);
                    add_level(&mut b, c2, "C1", &top[g], attr_encoding);
                    values_present.extend([middle[m].clone(), top[g].clone()]);
                }
            }
        }
        let p = price(rng);
        total += p;
        b.add_child(book, "price", Some(p.normalize().to_string()));
    }
    WarehouseDoc { tree: b.build(), top_values: top, total, values_present }
}

/// Picks a rollup target: usually a value present in the document, sometimes
/// a missing one.
pub fn random_target<R: Rng>(rng: &mut R, doc: &WarehouseDoc) -> String {
    if doc.values_present.is_empty() || rng.gen_bool(0.15) {
        "absent".to_string()
    } else {
        doc.values_present[rng.gen_range(0..doc.values_present.len())].clone()
    }
}
