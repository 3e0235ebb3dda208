//! Brute-force ground truth at desk scale.
//!
//! Exact optima for all four variants by exhaustive enumeration of feasible
//! facility sets, plus the quantities the approximation pipelines consume in
//! oracle-assisted mode: the bucketed average weights rounded onto the
//! geometric slope grid, and the sorted individual-connection thresholds for
//! the fault-tolerant pipeline. A work budget guards against accidental
//! blowups; these are test fixtures, not solvers.
//!
//! Serving the `m` cheapest clients is optimal here because swapping any
//! served client for a cheaper unserved one dominates the sorted cost vector
//! entrywise, and non-increasing non-negative weights are monotone under
//! that domination.

use crate::costs::{nearest_facilities, ordered_cost, pad_weights, pos_ranks};
use crate::model::{Instance, Variant};
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("work budget exceeded ({0} elementary evaluations)")]
    BudgetExceeded(u64),
    #[error("no feasible facility set")]
    NoFeasibleSet,
    #[error("instance rejected: {0}")]
    BadInstance(String),
}

pub type OracleResult<T> = Result<T, OracleError>;

pub const DEFAULT_WORK_BUDGET: u64 = 20_000_000;

#[derive(Debug)]
pub struct WorkBudget {
    limit: u64,
    used: u64,
}

impl WorkBudget {
    pub fn new(limit: u64) -> Self {
        WorkBudget { limit, used: 0 }
    }

    pub fn charge(&mut self, amount: u64) -> OracleResult<()> {
        self.used = self.used.saturating_add(amount);
        if self.used > self.limit {
            Err(OracleError::BudgetExceeded(self.limit))
        } else {
            Ok(())
        }
    }
}

impl Default for WorkBudget {
    fn default() -> Self {
        WorkBudget::new(DEFAULT_WORK_BUDGET)
    }
}

/// An exactly optimal solution together with the per-client data the
/// pipelines consume.
#[derive(Debug, Clone)]
pub struct ExactOptimum {
    pub open: Vec<usize>,
    /// served clients, ascending
    pub served: Vec<usize>,
    /// per served client (parallel to `served`)
    pub costs: Vec<Rat>,
    pub assignments: Vec<Vec<usize>>,
    pub value: Rat,
    /// every individual connection distance of the optimum, sorted
    /// non-increasingly (fault-tolerant; single distances otherwise)
    pub xi_desc: Vec<Rat>,
}

impl ExactOptimum {
    pub fn cost_of(&self, client: usize) -> Option<&Rat> {
        self.served
            .iter()
            .position(|&j| j == client)
            .map(|idx| &self.costs[idx])
    }

    pub fn nearest_open(&self, client: usize) -> Option<usize> {
        self.served
            .iter()
            .position(|&j| j == client)
            .map(|idx| self.assignments[idx][0])
    }

    /// sorted descending service costs
    pub fn costs_desc(&self) -> Vec<Rat> {
        let mut v = self.costs.clone();
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Feasible open sets for the variant: subsets of size 1..=k (robust),
/// nonempty independent sets (matroid), nonempty sets within budget
/// (knapsack), size exactly k (fault-tolerant; opening more never hurts).
fn feasible_open_sets(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<Vec<Vec<usize>>> {
    let nf = inst.n_facilities();
    let sets: Vec<Vec<usize>> = match &inst.variant {
        Variant::Robust { k, .. } => {
            let mut all = Vec::new();
            for size in 1..=*k {
                all.extend(subsets_of_size(nf, size));
            }
            all
        }
        Variant::Matroid { spec } => {
            budget.charge(1 << nf)?;
            spec.independent_sets(nf)
                .into_iter()
                .filter(|s| !s.is_empty())
                .map(|s| s.into_iter().collect())
                .collect()
        }
        Variant::Knapsack { weights, budget: cap } => {
            budget.charge(1 << nf)?;
            let mut all = Vec::new();
            for mask in 1u64..(1 << nf) {
                let set: Vec<usize> = (0..nf).filter(|i| mask >> i & 1 == 1).collect();
                let total: Rat = set.iter().map(|&i| &weights[i]).sum();
                if &total <= cap {
                    all.push(set);
                }
            }
            all
        }
        Variant::FaultTolerant { k, .. } => subsets_of_size(nf, *k),
    };
    if sets.is_empty() {
        return Err(OracleError::NoFeasibleSet);
    }
    budget.charge((sets.len() * inst.n_clients()) as u64)?;
    Ok(sets)
}

/// Serves the `m` clients with the smallest cost (ties by client index) and
/// returns (served ascending, their costs, the full per-client cost list).
fn serve_cheapest(costs_per_client: &[Rat], m: usize) -> (Vec<usize>, Vec<Rat>) {
    let mut order: Vec<usize> = (0..costs_per_client.len()).collect();
    order.sort_by(|&a, &b| costs_per_client[a].cmp(&costs_per_client[b]).then(a.cmp(&b)));
    let mut served: Vec<usize> = order.into_iter().take(m).collect();
    served.sort_unstable();
    let costs = served.iter().map(|&j| costs_per_client[j].clone()).collect();
    (served, costs)
}

/// Exact optimum of any variant by exhaustive enumeration.
pub fn solve_exact(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<ExactOptimum> {
    match &inst.variant {
        Variant::FaultTolerant { .. } => solve_ft_exact(inst, budget),
        _ => solve_single_assignment_exact(inst, budget),
    }
}

fn solve_single_assignment_exact(
    inst: &Instance,
    budget: &mut WorkBudget,
) -> OracleResult<ExactOptimum> {
    let nc = inst.n_clients();
    let m = inst.served_count();
    let mut best: Option<ExactOptimum> = None;
    for open in feasible_open_sets(inst, budget)? {
        let per_client: Vec<Rat> = (0..nc)
            .map(|j| {
                open.iter()
                    .map(|&i| inst.metric.d_fc(i, j).clone())
                    .min()
                    .expect("nonempty open set")
            })
            .collect();
        let (served, costs) = serve_cheapest(&per_client, m);
        let value = ordered_cost(&inst.weights, &costs).expect("length checked");
        if best.as_ref().is_none_or(|b| value < b.value) {
            let assignments: Vec<Vec<usize>> = served
                .iter()
                .map(|&j| nearest_facilities(inst, &open, j, 1))
                .collect();
            let mut xi_desc = costs.clone();
            xi_desc.sort_by(|a, b| b.cmp(a));
            best = Some(ExactOptimum {
                open,
                served,
                costs,
                assignments,
                value,
                xi_desc,
            });
        }
    }
    best.ok_or(OracleError::NoFeasibleSet)
}

pub fn solve_robust_exact(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<ExactOptimum> {
    debug_assert!(matches!(inst.variant, Variant::Robust { .. }));
    solve_single_assignment_exact(inst, budget)
}

pub fn solve_matroid_exact(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<ExactOptimum> {
    debug_assert!(matches!(inst.variant, Variant::Matroid { .. }));
    solve_single_assignment_exact(inst, budget)
}

pub fn solve_knapsack_exact(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<ExactOptimum> {
    debug_assert!(matches!(inst.variant, Variant::Knapsack { .. }));
    solve_single_assignment_exact(inst, budget)
}

pub fn solve_ft_exact(inst: &Instance, budget: &mut WorkBudget) -> OracleResult<ExactOptimum> {
    let Variant::FaultTolerant { k, requirements } = &inst.variant else {
        return Err(OracleError::BadInstance("not a fault-tolerant instance".into()));
    };
    if requirements.iter().any(|r| r > k) {
        return Err(OracleError::BadInstance("some requirement exceeds k".into()));
    }
    let nc = inst.n_clients();
    let mut best: Option<ExactOptimum> = None;
    for open in feasible_open_sets(inst, budget)? {
        let assignments: Vec<Vec<usize>> = (0..nc)
            .map(|j| nearest_facilities(inst, &open, j, requirements[j]))
            .collect();
        let costs: Vec<Rat> = assignments
            .iter()
            .enumerate()
            .map(|(j, a)| a.iter().map(|&i| inst.metric.d_fc(i, j)).sum())
            .collect();
        let value = ordered_cost(&inst.weights, &costs).expect("length checked");
        if best.as_ref().is_none_or(|b| value < b.value) {
            let mut xi_desc: Vec<Rat> = assignments
                .iter()
                .enumerate()
                .flat_map(|(j, a)| a.iter().map(move |&i| inst.metric.d_fc(i, j).clone()))
                .collect();
            xi_desc.sort_by(|a, b| b.cmp(a));
            best = Some(ExactOptimum {
                open,
                served: (0..nc).collect(),
                costs,
                assignments,
                value,
                xi_desc,
            });
        }
    }
    best.ok_or(OracleError::NoFeasibleSet)
}

/// Exact minimum of the surrogate objective `sum_j f(scale * d(j, F))` over
/// feasible open sets; for the robust variant the `m` cheapest clients are
/// served. Also returns the argmin with per-client nearest assignments.
pub fn reduced_instance_opt(
    inst: &Instance,
    f: &CostFunction,
    scale: &Rat,
    budget: &mut WorkBudget,
) -> OracleResult<ExactOptimum> {
    let nc = inst.n_clients();
    let m = inst.served_count();
    let mut best: Option<ExactOptimum> = None;
    for open in feasible_open_sets(inst, budget)? {
        let per_client_dist: Vec<Rat> = (0..nc)
            .map(|j| {
                open.iter()
                    .map(|&i| inst.metric.d_fc(i, j).clone())
                    .min()
                    .expect("nonempty open set")
            })
            .collect();
        // f is non-decreasing, so cheapest distances are cheapest surrogates
        let (served, dists) = serve_cheapest(&per_client_dist, m);
        let value: Rat = dists.iter().map(|d| f.eval_scaled(scale, d)).sum();
        if best.as_ref().is_none_or(|b| value < b.value) {
            let assignments: Vec<Vec<usize>> = served
                .iter()
                .map(|&j| nearest_facilities(inst, &open, j, 1))
                .collect();
            best = Some(ExactOptimum {
                open,
                served,
                costs: dists,
                assignments,
                value,
                xi_desc: Vec::new(),
            });
        }
    }
    best.ok_or(OracleError::NoFeasibleSet)
}

// ---------------------------------------------------------------------------
// Guesses
// ---------------------------------------------------------------------------

/// Slope guess for the piecewise-linear surrogate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostGuess {
    pub o1: Rat,
    /// slope per bucket, outermost first; a single slope when `o1 = 0`
    pub slopes: Vec<Rat>,
}

/// Threshold guess for the fault-tolerant relaxation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtThresholdGuess {
    pub xi1: Rat,
    /// per anchor rank (parallel to the anchor list), before the additive
    /// shift
    pub t_prime: Vec<Rat>,
}

/// Everything a pipeline needs from the guessing stage.
#[derive(Debug, Clone, Default)]
pub struct GuessBundle {
    pub cost: Option<CostGuess>,
    pub ft: Option<FtThresholdGuess>,
}

/// Least integer power of `base` that is >= `x` (x > 0, base > 1).
pub fn least_power_at_least(base: &Rat, x: &Rat) -> Rat {
    assert!(x.is_positive() && base > &Rat::one());
    let mut p = Rat::one();
    if p >= *x {
        loop {
            let down = &p / base;
            if down < *x {
                return p;
            }
            p = down;
        }
    }
    while p < *x {
        p = &p * base;
    }
    p
}

/// Bucketed average weights for a sorted-descending optimal cost vector:
/// index 0 inherits the top padded weight, empty buckets inherit their outer
/// neighbor.
pub fn average_bucket_weights(
    f_shape: &CostFunction,
    costs_desc: &[Rat],
    padded: &[Rat],
) -> Vec<Rat> {
    let t_levels = f_shape.t_levels;
    let mut sums = vec![Rat::zero(); t_levels + 2];
    let mut counts = vec![0usize; t_levels + 2];
    for (i, c) in costs_desc.iter().enumerate() {
        let b = f_shape.bucket(c);
        assert!(b >= 1, "largest optimal cost escaped the bucket grid");
        sums[b] += &padded[i];
        counts[b] += 1;
    }
    let mut avg = vec![Rat::zero(); t_levels + 2];
    avg[0] = padded[0].clone();
    for t in 1..=t_levels + 1 {
        avg[t] = if counts[t] > 0 {
            &sums[t] / &Rat::from_int(counts[t] as i64)
        } else {
            avg[t - 1].clone()
        };
    }
    avg
}

/// Computes the correct guesses from an exact optimum: grid-rounded bucket
/// weights for the surrogate, and for fault-tolerant instances the
/// per-anchor thresholds read off the sorted connection distances.
pub fn correct_guesses(
    inst: &Instance,
    opt: &ExactOptimum,
    eps: &Rat,
    delta: &Rat,
) -> GuessBundle {
    match &inst.variant {
        Variant::FaultTolerant { .. } => GuessBundle {
            cost: None,
            ft: Some(correct_ft_guess(inst, opt, eps, delta)),
        },
        _ => GuessBundle {
            cost: Some(correct_cost_guess(inst, opt, eps)),
            ft: None,
        },
    }
}

fn correct_cost_guess(inst: &Instance, opt: &ExactOptimum, eps: &Rat) -> CostGuess {
    let m = inst.served_count();
    let padded = pad_weights(&inst.weights, eps);
    let costs_desc = opt.costs_desc();
    let o1 = costs_desc.first().cloned().unwrap_or_else(Rat::zero);
    if o1.is_zero() {
        return CostGuess {
            o1,
            slopes: vec![padded.0[0].clone()],
        };
    }
    // shape-only function to locate buckets; slopes are what we compute
    let t_levels = crate::robust::costfn::level_count(eps, m);
    let shape = CostFunction::build(
        o1.clone(),
        vec![Rat::one(); t_levels + 2],
        eps,
        m,
    )
    .expect("uniform slopes are valid");
    let avg = average_bucket_weights(&shape, &costs_desc, &padded.0);
    let base = &Rat::one() + eps;
    let slopes: Vec<Rat> = avg
        .iter()
        .map(|w| {
            let rounded = least_power_at_least(&base, w);
            assert!(
                &rounded >= w && rounded < (&base * w),
                "grid rounding escaped its half-open window"
            );
            rounded
        })
        .collect();
    for pair in slopes.windows(2) {
        assert!(pair[0] >= pair[1], "rounded slopes must stay non-increasing");
    }
    CostGuess { o1, slopes }
}

fn correct_ft_guess(inst: &Instance, opt: &ExactOptimum, eps: &Rat, delta: &Rat) -> FtThresholdGuess {
    let n = inst.n_clients();
    let pos = pos_ranks(n, delta);
    let xi = &opt.xi_desc;
    let xi1 = xi.first().cloned().unwrap_or_else(Rat::zero);
    if xi1.is_zero() {
        return FtThresholdGuess {
            xi1,
            t_prime: vec![Rat::zero(); pos.len()],
        };
    }
    let floor = &(eps * &xi1) / &Rat::from_int(n as i64);
    let base = &Rat::one() + eps;
    let t_prime: Vec<Rat> = pos
        .iter()
        .map(|&rank| {
            let target = &xi[rank - 1];
            if target < &floor {
                return Rat::zero();
            }
            // unique grid point xi1*(1+eps)^(-s) inside [target, (1+eps)*target)
            let mut g = xi1.clone();
            while &(&g / &base) >= target {
                g = &g / &base;
            }
            assert!(&g >= target && g < (&base * target));
            g
        })
        .collect();
    for pair in t_prime.windows(2) {
        assert!(pair[0] >= pair[1], "thresholds must stay non-increasing");
    }
    FtThresholdGuess { xi1, t_prime }
}

// ---------------------------------------------------------------------------
// Enumeration of guesses
// ---------------------------------------------------------------------------

/// All distinct facility-to-client distances, ascending.
pub fn distance_set(inst: &Instance) -> Vec<Rat> {
    let mut ds: Vec<Rat> = Vec::new();
    for i in 0..inst.n_facilities() {
        for j in 0..inst.n_clients() {
            let d = inst.metric.d_fc(i, j).clone();
            if !ds.contains(&d) {
                ds.push(d);
            }
        }
    }
    ds.sort();
    ds
}

/// non-increasing sequences of the given length over `values` (which must be
/// sorted descending); stops once `cap` sequences were produced
fn non_increasing_sequences(values: &[Rat], len: usize, cap: usize) -> (Vec<Vec<Rat>>, bool) {
    let mut out = Vec::new();
    let mut truncated = false;
    fn rec(
        values: &[Rat],
        start: usize,
        len: usize,
        cur: &mut Vec<Rat>,
        out: &mut Vec<Vec<Rat>>,
        cap: usize,
        truncated: &mut bool,
    ) {
        if *truncated {
            return;
        }
        if cur.len() == len {
            if out.len() >= cap {
                *truncated = true;
            } else {
                out.push(cur.clone());
            }
            return;
        }
        for v in start..values.len() {
            cur.push(values[v].clone());
            rec(values, v, len, cur, out, cap, truncated);
            cur.pop();
            if *truncated {
                return;
            }
        }
    }
    rec(values, 0, len, &mut Vec::new(), &mut out, cap, &mut truncated);
    (out, truncated)
}

/// Streams candidate guess bundles for the instance's variant, up to `cap`;
/// the flag reports truncation. The correct guess always appears when the
/// cap is not hit.
pub fn enumerate_guesses(
    inst: &Instance,
    eps: &Rat,
    delta: &Rat,
    cap: usize,
) -> (Vec<GuessBundle>, bool) {
    match &inst.variant {
        Variant::FaultTolerant { .. } => enumerate_ft_guesses(inst, eps, delta, cap),
        _ => enumerate_cost_guesses(inst, eps, cap),
    }
}

fn enumerate_cost_guesses(inst: &Instance, eps: &Rat, cap: usize) -> (Vec<GuessBundle>, bool) {
    let m = inst.served_count();
    let w1 = inst.weights.0[0].clone();
    let mut out = Vec::new();
    if w1.is_zero() {
        // all-zero weights: any solution costs zero, one degenerate guess
        return (
            vec![GuessBundle {
                cost: Some(CostGuess {
                    o1: Rat::zero(),
                    slopes: vec![Rat::one()],
                }),
                ft: None,
            }],
            false,
        );
    }
    let padded_floor = &(eps * &w1) / &Rat::from_int(m as i64);
    let base = &Rat::one() + eps;
    // slope grid: powers of (1+eps) from the padded floor's round-up to the
    // top weight's round-up
    let mut grid_desc = Vec::new();
    let lo = least_power_at_least(&base, &padded_floor);
    let hi = least_power_at_least(&base, &w1);
    let mut p = hi.clone();
    while p >= lo {
        grid_desc.push(p.clone());
        p = &p / &base;
    }
    let t_levels = crate::robust::costfn::level_count(eps, m);

    let mut out_truncated = false;
    // zero guess first: covered by the pipelines' co-location search
    out.push(GuessBundle {
        cost: Some(CostGuess {
            o1: Rat::zero(),
            slopes: vec![w1.clone()],
        }),
        ft: None,
    });
    'outer: for o1 in distance_set(inst) {
        if o1.is_zero() {
            continue;
        }
        let budget = cap.saturating_sub(out.len());
        let (seqs, trunc) = non_increasing_sequences(&grid_desc, t_levels + 2, budget);
        for slopes in seqs {
            out.push(GuessBundle {
                cost: Some(CostGuess {
                    o1: o1.clone(),
                    slopes,
                }),
                ft: None,
            });
        }
        if trunc || out.len() >= cap {
            out_truncated = true;
            break 'outer;
        }
    }
    (out, out_truncated)
}

fn enumerate_ft_guesses(
    inst: &Instance,
    eps: &Rat,
    delta: &Rat,
    cap: usize,
) -> (Vec<GuessBundle>, bool) {
    let n = inst.n_clients();
    let pos_len = pos_ranks(n, delta).len();
    let mut out = Vec::new();
    let mut out_truncated = false;
    out.push(GuessBundle {
        cost: None,
        ft: Some(FtThresholdGuess {
            xi1: Rat::zero(),
            t_prime: vec![Rat::zero(); pos_len],
        }),
    });
    let base = &Rat::one() + eps;
    'outer: for xi1 in distance_set(inst) {
        if xi1.is_zero() {
            continue;
        }
        let floor = &(eps * &xi1) / &Rat::from_int(n as i64);
        let mut grid_desc = vec![xi1.clone()];
        let mut g = xi1.clone();
        loop {
            g = &g / &base;
            if g < floor {
                break;
            }
            grid_desc.push(g.clone());
        }
        grid_desc.push(Rat::zero());
        let budget = cap.saturating_sub(out.len());
        let (seqs, trunc) = non_increasing_sequences(&grid_desc, pos_len, budget);
        for t_prime in seqs {
            out.push(GuessBundle {
                cost: None,
                ft: Some(FtThresholdGuess {
                    xi1: xi1.clone(),
                    t_prime,
                }),
            });
        }
        if trunc || out.len() >= cap {
            out_truncated = true;
            break 'outer;
        }
    }
    (out, out_truncated)
}
