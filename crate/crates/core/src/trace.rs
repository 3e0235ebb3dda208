//! Machine-readable run reports consumed by the benchmark harness and the
//! acceptance suite.

use serde::Serialize;

use crate::rat::Rat;

/// Trace of one iterative-rounding run.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RoundingTrace {
    pub mode: String,
    pub o1: Option<Rat>,
    pub slopes: Vec<Rat>,
    pub upper_bound_guess: Option<Rat>,
    pub preselected: Vec<usize>,
    pub kept_clients: usize,
    pub kept_coverage: usize,
    pub strengthened_lp_objective: Option<Rat>,
    /// objective of the auxiliary LP after every solve, in order
    pub aux_objectives: Vec<Rat>,
    pub fractional_count: usize,
    pub final_cost: Option<Rat>,
    pub candidates_tried: usize,
    pub candidates_failed: usize,
    pub enumeration_truncated: bool,
}

/// Statistics of one fault-tolerant run.
#[derive(Debug, Clone, Serialize, Default)]
pub struct FtStats {
    pub mode: String,
    pub lp_objective: Option<Rat>,
    /// per anchor rank: (rank, threshold, lp bound value)
    pub anchors: Vec<(usize, Rat, Rat)>,
    pub samples: usize,
    pub mean_cost: Option<Rat>,
    pub min_cost: Option<Rat>,
    pub max_cost: Option<Rat>,
    /// per-client distance-bound flags (reported, never fatal): clients
    /// whose mean sampled service cost exceeded the charged bound
    pub distance_bound_flags: Vec<usize>,
    pub candidates_tried: usize,
    pub candidates_failed: usize,
    pub enumeration_truncated: bool,
}
