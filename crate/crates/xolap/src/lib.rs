//! Native XML analytical query engine.
//!
//! The crate models XML documents as ordered labeled data trees, matches
//! tree pattern queries (TPQs) against them, interprets documents as
//! multidimensional warehouses whose dimension hierarchies may be non-strict
//! and non-covering (ragged), and aggregates fact measures with a
//! pattern-tree-based rollup operator that stays correct on such complex
//! hierarchies.
//!
//! Every query path is paired with an independent brute-force oracle
//! ([`matcher::match_oracle`], [`rollup::rollup_oracle`]) so matching and
//! aggregation results can be cross-checked.

pub mod matcher;
pub mod mdmodel;
pub mod pattern;
pub mod rollup;
pub mod xmltree;

pub use matcher::{build_witness, embed, match_oracle, match_pattern, Binding, WitnessTree};
pub use mdmodel::{bind_schema, classify_hierarchy, HierarchyClass, SchemaConfig, WarehouseView};
pub use pattern::{parse_pattern, render_pattern, validate_pattern, Formula, PatternTree, PatternVar};
pub use rollup::{make_rollup_pattern, rollup, rollup_oracle, AggKind, RollupQuery, RollupResult};
pub use xmltree::{parse_document, DataTree, NodeId};
