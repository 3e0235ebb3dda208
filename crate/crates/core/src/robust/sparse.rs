//! Sparse-instance preprocessing.
//!
//! Two removal loops against a reference optimum: facilities whose star of
//! surrogate cost reaches `rho*U` become must-open, and ball centers whose
//! nearby optimal clients jointly reach `rho*U` get their whole ball of
//! clients removed (with the center's optimal facility forced open). What
//! survives is sparse enough for the per-client radius caps, and the removed
//! clients stay affordable through the forced-open set.

use std::collections::BTreeSet;

use crate::model::{Instance, Variant};
use crate::oracle::ExactOptimum;
use crate::params::ReductionParams;
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;
use crate::robust::PipelineError;

#[derive(Debug, Clone)]
pub struct SparseInstance {
    /// surviving clients, ascending
    pub kept: Vec<usize>,
    /// coverage target for the LP (robust: surviving optimal clients)
    pub m_prime: usize,
    /// must-open facilities
    pub preselected: Vec<usize>,
    /// guessed upper bound on the surrogate optimum
    pub u: Rat,
    /// surrogate cost of the surviving optimal clients (oracle-assisted)
    pub u_prime: Option<Rat>,
}

impl SparseInstance {
    /// trivial preprocessing: keep everything, preselect nothing
    pub fn trivial(inst: &Instance, u: Rat) -> Self {
        SparseInstance {
            kept: (0..inst.n_clients()).collect(),
            m_prime: inst.served_count(),
            preselected: Vec::new(),
            u,
            u_prime: None,
        }
    }
}

/// `ceil(2/rho)`, the removal allowance.
pub fn removal_allowance(rho: &Rat) -> usize {
    let two_over = &Rat::from_int(2) / rho;
    let ceil = -(-two_over).floor_int();
    usize::try_from(ceil).unwrap_or(usize::MAX)
}

/// distance from point `p` (metric index) to the nearest member of `open`
fn dist_to_set(inst: &Instance, p: usize, open: &[usize]) -> (Rat, usize) {
    open.iter()
        .map(|&i| (inst.metric.d(p, i).clone(), i))
        .min()
        .expect("nonempty facility set")
}

/// Builds the sparse instance from a reference optimum of the surrogate
/// objective. `reduced` must be optimal for `sum f(d(j, F))` (scale 1).
pub fn build_sparse_instance(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    reduced: &ExactOptimum,
    u: Rat,
) -> Result<SparseInstance, PipelineError> {
    let nc = inst.n_clients();
    let nf = inst.n_facilities();
    let rho_u = &params.rho * &u;
    let one = Rat::one();
    let shrink = &(&one - &params.delta) / &(&one + &params.delta);

    // optimal service data for every metric point
    let opt_open = &reduced.open;
    let nearest: Vec<(Rat, usize)> = (0..nf + nc)
        .map(|p| dist_to_set(inst, p, opt_open))
        .collect();
    let opt_clients: BTreeSet<usize> = reduced.served.iter().copied().collect();

    let mut kept: BTreeSet<usize> = (0..nc).collect();
    let mut preselected: BTreeSet<usize> = BTreeSet::new();
    let allowance = removal_allowance(&params.rho) + 2;

    // forced-open loop: stars of optimal surrogate cost reaching rho*U
    loop {
        let mut grew = false;
        for &i in opt_open {
            if preselected.contains(&i) {
                continue;
            }
            let star: Rat = opt_clients
                .iter()
                .filter(|&&j| nearest[inst.metric.client_point(j)].1 == i)
                .map(|&j| f.eval(&nearest[inst.metric.client_point(j)].0))
                .sum();
            if star >= rho_u {
                preselected.insert(i);
                grew = true;
                if preselected.len() > allowance {
                    return Err(PipelineError::PreprocessingOverflow);
                }
            }
        }
        if !grew {
            break;
        }
    }

    // ball-removal loop: dense neighborhoods of surviving optimal clients
    loop {
        let mut fired = false;
        'scan: for p in 0..nf + nc {
            let in_play = p < nf || kept.contains(&(p - nf));
            if !in_play {
                continue;
            }
            let (c_p, kappa_p) = &nearest[p];
            if c_p.is_zero() {
                continue;
            }
            let radius = &params.delta * c_p;
            let ball_opt = kept
                .iter()
                .filter(|&&j| opt_clients.contains(&j) && inst.metric.d(p, inst.metric.client_point(j)) <= &radius)
                .count();
            let threshold = &Rat::from_int(ball_opt as i64) * &f.eval(&(&(&one - &params.delta) * c_p));
            if threshold >= rho_u {
                kept.retain(|&j| inst.metric.d(p, inst.metric.client_point(j)) > &radius);
                preselected.insert(*kappa_p);
                if preselected.len() > allowance {
                    return Err(PipelineError::PreprocessingOverflow);
                }
                fired = true;
                break 'scan;
            }
        }
        if !fired {
            break;
        }
    }

    let surviving_opt: Vec<usize> = kept
        .iter()
        .copied()
        .filter(|j| opt_clients.contains(j))
        .collect();
    let m_prime = match inst.variant {
        Variant::Robust { .. } => surviving_opt.len(),
        _ => kept.len(),
    };
    let u_prime: Rat = surviving_opt
        .iter()
        .map(|&j| f.eval(&nearest[inst.metric.client_point(j)].0))
        .sum();

    let sparse = SparseInstance {
        kept: kept.iter().copied().collect(),
        m_prime,
        preselected: preselected.iter().copied().collect(),
        u,
        u_prime: Some(u_prime.clone()),
    };

    // replay the three postconditions exactly
    for &i in opt_open {
        if preselected.contains(&i) {
            continue;
        }
        let star: Rat = surviving_opt
            .iter()
            .filter(|&&j| nearest[inst.metric.client_point(j)].1 == i)
            .map(|&j| f.eval(&nearest[inst.metric.client_point(j)].0))
            .sum();
        assert!(star <= rho_u, "surviving star exceeds its budget");
    }
    for p in 0..nf + nc {
        if p >= nf && !kept.contains(&(p - nf)) {
            continue;
        }
        let (c_p, _) = &nearest[p];
        if c_p.is_zero() {
            continue;
        }
        let radius = &params.delta * c_p;
        let count = surviving_opt
            .iter()
            .filter(|&&j| inst.metric.d(p, inst.metric.client_point(j)) <= &radius)
            .count();
        assert!(
            &Rat::from_int(count as i64) * &f.eval(&(&(&one - &params.delta) * c_p)) <= rho_u,
            "surviving ball exceeds its budget"
        );
    }
    if !preselected.is_empty() || kept.len() == nc {
        let presel: Vec<usize> = preselected.iter().copied().collect();
        let removed_cost: Rat = opt_clients
            .iter()
            .filter(|j| !kept.contains(j))
            .map(|&j| {
                let (d, _) = dist_to_set(inst, inst.metric.client_point(j), &presel);
                f.eval(&(&shrink * &d))
            })
            .sum();
        assert!(
            &removed_cost + &u_prime <= u,
            "removed clients not affordable through the preselected set"
        );
    }

    Ok(sparse)
}

/// Every set a removal ball can take: clients within distance `r` of some
/// center, over all centers and all meaningful radii.
fn ball_options(inst: &Instance) -> Vec<BTreeSet<usize>> {
    let nf = inst.n_facilities();
    let nc = inst.n_clients();
    let mut out: Vec<BTreeSet<usize>> = Vec::new();
    for p in 0..nf + nc {
        let mut radii: Vec<Rat> = (0..nc)
            .map(|j| inst.metric.d(p, inst.metric.client_point(j)).clone())
            .collect();
        radii.sort();
        radii.dedup();
        for r in radii {
            let ball: BTreeSet<usize> = (0..nc)
                .filter(|&j| inst.metric.d(p, inst.metric.client_point(j)) <= &r)
                .collect();
            if !ball.is_empty() && !out.contains(&ball) {
                out.push(ball);
            }
        }
    }
    out
}

/// Enumerates candidate (kept, m', preselected) triples: up to
/// `ceil(2/rho)` removal balls and preselected sets of the same size bound,
/// with coverage targets compatible with greedy completion.
pub fn enumerate_sparse_instances(
    inst: &Instance,
    rho: &Rat,
    cap: usize,
) -> (Vec<SparseInstance>, bool) {
    let nc = inst.n_clients();
    let nf = inst.n_facilities();
    let m = inst.served_count();
    let allowance = removal_allowance(rho);
    let balls = ball_options(inst);

    // unions of up to `allowance` balls, deduplicated by removed set
    let mut removed_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    let mut frontier: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    for _ in 0..allowance {
        let mut next = Vec::new();
        for base in &frontier {
            for ball in &balls {
                let u: BTreeSet<usize> = base.union(ball).copied().collect();
                if !removed_sets.contains(&u) {
                    removed_sets.push(u.clone());
                    next.push(u);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }

    let mut presel_sets: Vec<Vec<usize>> = Vec::new();
    for mask in 0u64..(1 << nf) {
        let set: Vec<usize> = (0..nf).filter(|i| mask >> i & 1 == 1).collect();
        if set.len() <= allowance {
            presel_sets.push(set);
        }
    }

    let mut out = Vec::new();
    let mut truncated = false;
    'outer: for removed in &removed_sets {
        let kept: Vec<usize> = (0..nc).filter(|j| !removed.contains(j)).collect();
        let m_prime_range: Vec<usize> = match inst.variant {
            Variant::Robust { .. } => {
                let lo = m.saturating_sub(removed.len());
                (lo..=m.min(kept.len())).collect()
            }
            // every kept client is served; removed ones connect greedily
            Variant::Knapsack { .. } => vec![kept.len()],
            // no preprocessing for matroids
            _ => {
                if !removed.is_empty() {
                    continue;
                }
                vec![nc]
            }
        };
        for presel in &presel_sets {
            for &m_prime in &m_prime_range {
                if out.len() >= cap {
                    truncated = true;
                    break 'outer;
                }
                out.push(SparseInstance {
                    kept: kept.clone(),
                    m_prime,
                    preselected: presel.clone(),
                    u: Rat::zero(), // filled by the caller per upper-bound guess
                    u_prime: None,
                });
            }
        }
    }
    (out, truncated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricSpace, WeightVector};
    use crate::oracle::{reduced_instance_opt, WorkBudget};
    use crate::params::PipelineKind;
    use crate::rat;

    fn line_instance(facilities: &[i64], clients: &[i64], k: usize, m: usize, w: &[Rat]) -> Instance {
        let points: Vec<(Rat, Rat)> = facilities
            .iter()
            .chain(clients)
            .map(|&x| (Rat::from_int(x), Rat::zero()))
            .collect();
        let inst = Instance {
            metric: MetricSpace::from_l1_points(
                (0..facilities.len()).map(|i| format!("f{i}")).collect(),
                (0..clients.len()).map(|j| format!("c{j}")).collect(),
                &points,
            ),
            weights: WeightVector::new(w.to_vec()).unwrap(),
            variant: Variant::Robust { k, m },
        };
        inst.validate().unwrap();
        inst
    }

    #[test]
    fn huge_rho_keeps_everything() {
        let inst = line_instance(&[0, 10], &[1, 4, 9], 1, 3, &[rat!(1), rat!(1), rat!(1)]);
        let mut params = ReductionParams::preset(PipelineKind::Robust);
        params.rho = rat!(1);
        let t = crate::robust::costfn::level_count(&params.eps, 3);
        let f = CostFunction::build(rat!(9), vec![rat!(1); t + 2], &params.eps, 3).unwrap();
        let reduced = reduced_instance_opt(&inst, &f, &Rat::one(), &mut WorkBudget::default()).unwrap();
        let u = &reduced.value + &Rat::one();
        let sparse = build_sparse_instance(&inst, &f, &params, &reduced, u).unwrap();
        assert_eq!(sparse.kept.len(), 3);
        assert!(sparse.preselected.is_empty());
        assert_eq!(sparse.m_prime, 3);
    }

    #[test]
    fn heavy_star_forces_preselection() {
        // one facility carries the whole optimum; rho = 1/2 and U = V* makes
        // its star reach rho*U immediately
        let inst = line_instance(&[0], &[5, 6], 1, 2, &[rat!(1), rat!(1)]);
        let mut params = ReductionParams::preset(PipelineKind::Robust);
        params.rho = rat!(1, 2);
        let t = crate::robust::costfn::level_count(&params.eps, 2);
        let f = CostFunction::build(rat!(6), vec![rat!(1); t + 2], &params.eps, 2).unwrap();
        let reduced = reduced_instance_opt(&inst, &f, &Rat::one(), &mut WorkBudget::default()).unwrap();
        assert_eq!(reduced.value, rat!(11));
        let sparse =
            build_sparse_instance(&inst, &f, &params, &reduced, reduced.value.clone()).unwrap();
        assert_eq!(sparse.preselected, vec![0]);
    }

    #[test]
    fn enumeration_contains_trivial_and_flags_caps() {
        let inst = line_instance(&[0, 10], &[1, 9], 1, 2, &[rat!(1), rat!(1)]);
        let (cands, truncated) = enumerate_sparse_instances(&inst, &rat!(2), 100_000);
        assert!(!truncated);
        assert!(cands
            .iter()
            .any(|s| s.kept.len() == 2 && s.preselected.is_empty() && s.m_prime == 2));
        let (_, truncated) = enumerate_sparse_instances(&inst, &rat!(2), 1);
        assert!(truncated);
    }

    #[test]
    fn allowance_examples() {
        assert_eq!(removal_allowance(&rat!(1)), 2);
        assert_eq!(removal_allowance(&rat!(2)), 1);
        assert_eq!(removal_allowance(&rat!(1, 4)), 8);
    }
}
