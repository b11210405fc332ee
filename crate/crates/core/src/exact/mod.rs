//! Exhaustive enumeration over bond configurations of small domains, and the
//! linear-relation solver used beyond the enumeration cap.

mod config;
mod enumerate;
mod golden;
mod solve;
mod trace;

pub use config::{
    connection_prob, rc_weight, wired_connection_probs, wired_connection_probs_multi, BondConfig, UnionFind,
    DEFAULT_CAP, MAX_BONDS,
};
pub use enumerate::{bulk_root, observable_bulk_exact, observable_exact, Observable, PathHistogram};
pub use golden::{read_golden, write_golden, GoldenRow};
pub use solve::{solve_bulk, solve_dobrushin, SolveReport};
pub use trace::{loop_decompose, loop_weight, LoopDecomposition, Tracer};
