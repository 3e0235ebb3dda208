//! Exact-rational solvers for ordered clustering objectives.
//!
//! The library covers four problems over finite metrics: robust ordered
//! k-median (serve m of the clients), ordered matroid median, ordered
//! knapsack median, and fault-tolerant ordered k-median (each client needs
//! r_j distinct facilities). All of them minimize a non-increasing weight
//! vector dotted with the descending-sorted service costs.
//!
//! Every pipeline runs on exact rationals end to end: an exact two-phase
//! simplex produces vertex solutions, constraint families too large to write
//! down are generated lazily, and the fault-tolerant rounding samples from
//! an exact convex decomposition over an integral polytope. Brute-force
//! oracles provide ground-truth optima at desk scale so the approximation
//! pipelines can be measured against them.

pub mod costs;
pub mod fault;
pub mod gen;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod params;
pub mod rat;
pub mod robust;
pub mod trace;

pub use model::{Instance, ModelError, Solution, Variant, WeightVector};
pub use rat::Rat;
