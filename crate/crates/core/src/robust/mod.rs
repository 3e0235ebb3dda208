//! Iterative-rounding pipelines for the robust, matroid and knapsack
//! variants: surrogate cost functions, sparse-instance preprocessing,
//! per-client radius caps, the strengthened LP, facility duplication with
//! star balancing, metric-discretized iterative rounding, the final
//! fractional fix, and greedy completion.

pub mod costfn;

pub use costfn::{CostFnError, CostFunction};
