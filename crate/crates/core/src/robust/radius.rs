//! Per-client connection-distance caps.
//!
//! The robust variant assigns caps greedily: walking all facility-client
//! distances from largest to smallest, a client receives the current
//! distance as its cap unless that would crowd some point's neighborhood —
//! no ball of radius `delta*t/4` may hold more than `rho*U /
//! f((1-delta)(1-delta/4)t)` clients capped at `t` or above. The knapsack
//! variant instead takes, per client, the largest distance whose own
//! neighborhood stays within budget.

use crate::model::Instance;
use crate::params::ReductionParams;
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;
use crate::robust::sparse::SparseInstance;

/// Caps parallel to `sparse.kept`; the final cap is `(1+3*delta/4)` times
/// the assigned value.
pub fn compute_radius_bounds_robust(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
) -> Vec<Rat> {
    let kept = &sparse.kept;
    let rho_u = &params.rho * &sparse.u;
    let one = Rat::one();
    let quarter_delta = &params.delta / &Rat::from_int(4);
    let shrink = &(&one - &params.delta) * &(&one - &quarter_delta);

    let mut distances: Vec<Rat> = Vec::new();
    for i in 0..inst.n_facilities() {
        for &j in kept {
            let d = inst.metric.d_fc(i, j);
            if !d.is_zero() && !distances.contains(d) {
                distances.push(d.clone());
            }
        }
    }
    distances.sort_by(|a, b| b.cmp(a));

    let mut caps = vec![Rat::zero(); kept.len()];
    let centers: Vec<usize> = (0..inst.n_facilities())
        .chain(kept.iter().map(|&j| inst.metric.client_point(j)))
        .collect();

    for t in &distances {
        let ball_radius = &quarter_delta * t;
        let crowd_budget = f.eval(&(&shrink * t));
        for idx in 0..kept.len() {
            if !caps[idx].is_zero() {
                continue;
            }
            caps[idx] = t.clone();
            // the new cap may only crowd neighborhoods at threshold t itself
            let ok = centers.iter().all(|&p| {
                let count = kept
                    .iter()
                    .enumerate()
                    .filter(|(idx2, &j2)| {
                        &caps[*idx2] >= t
                            && inst.metric.d(p, inst.metric.client_point(j2)) <= &ball_radius
                    })
                    .count();
                &Rat::from_int(count as i64) * &crowd_budget <= rho_u
            });
            if !ok {
                caps[idx] = Rat::zero();
            }
        }
    }
    caps
}

/// Exhaustive check of the crowding property over the whole distance set;
/// used by the invariant sweep.
pub fn radius_property_holds(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
    caps: &[Rat],
) -> bool {
    let kept = &sparse.kept;
    let rho_u = &params.rho * &sparse.u;
    let one = Rat::one();
    let quarter_delta = &params.delta / &Rat::from_int(4);
    let shrink = &(&one - &params.delta) * &(&one - &quarter_delta);
    let centers: Vec<usize> = (0..inst.n_facilities())
        .chain(kept.iter().map(|&j| inst.metric.client_point(j)))
        .collect();
    let mut distances: Vec<Rat> = Vec::new();
    for i in 0..inst.n_facilities() {
        for &j in kept {
            let d = inst.metric.d_fc(i, j);
            if !d.is_zero() && !distances.contains(d) {
                distances.push(d.clone());
            }
        }
    }
    for t in &distances {
        let ball_radius = &quarter_delta * t;
        let crowd_budget = f.eval(&(&shrink * t));
        for &p in &centers {
            let count = kept
                .iter()
                .enumerate()
                .filter(|(idx, &j)| {
                    &caps[*idx] >= t && inst.metric.d(p, inst.metric.client_point(j)) <= &ball_radius
                })
                .count();
            if &Rat::from_int(count as i64) * &crowd_budget > rho_u {
                return false;
            }
        }
    }
    true
}

/// Knapsack caps: per client the largest facility distance `d` with
/// `|clients within delta*d| * f((1-delta)*d) <= rho*U` (the caps are only
/// ever compared against facility distances, so the distance set suffices).
pub fn compute_radius_bounds_knapsack(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
) -> Vec<Rat> {
    let kept = &sparse.kept;
    let rho_u = &params.rho * &sparse.u;
    let one_minus = &Rat::one() - &params.delta;
    kept.iter()
        .map(|&j| {
            let jp = inst.metric.client_point(j);
            let mut best = Rat::zero();
            for i in 0..inst.n_facilities() {
                let d = inst.metric.d_fc(i, j);
                if d <= &best {
                    continue;
                }
                let radius = &params.delta * d;
                let count = kept
                    .iter()
                    .filter(|&&j2| inst.metric.d(jp, inst.metric.client_point(j2)) <= &radius)
                    .count();
                if &Rat::from_int(count as i64) * &f.eval(&(&one_minus * d)) <= rho_u {
                    best = d.clone();
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricSpace, Variant, WeightVector};
    use crate::params::PipelineKind;
    use crate::rat;
    use crate::robust::costfn::level_count;

    fn tiny(facilities: &[i64], clients: &[i64], m: usize) -> Instance {
        let points: Vec<(Rat, Rat)> = facilities
            .iter()
            .chain(clients)
            .map(|&x| (Rat::from_int(x), Rat::zero()))
            .collect();
        Instance {
            metric: MetricSpace::from_l1_points(
                (0..facilities.len()).map(|i| format!("f{i}")).collect(),
                (0..clients.len()).map(|j| format!("c{j}")).collect(),
                &points,
            ),
            weights: WeightVector::new(vec![rat!(1); m]).unwrap(),
            variant: Variant::Robust { k: 1, m },
        }
    }

    fn flat_f(o1: i64, eps: &Rat, m: usize) -> CostFunction {
        CostFunction::build(
            Rat::from_int(o1),
            vec![rat!(1); level_count(eps, m) + 2],
            eps,
            m,
        )
        .unwrap()
    }

    #[test]
    fn generous_budget_gives_everyone_the_top_distance() {
        let inst = tiny(&[0, 10], &[2, 7], 2);
        let params = ReductionParams::preset(PipelineKind::Robust);
        let f = flat_f(10, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(1_000_000));
        let caps = compute_radius_bounds_robust(&inst, &f, &params, &sparse);
        let dmax = rat!(8);
        assert_eq!(caps, vec![dmax.clone(), dmax]);
        assert!(radius_property_holds(&inst, &f, &params, &sparse, &caps));
    }

    #[test]
    fn tiny_budget_gives_zero_caps() {
        let inst = tiny(&[0, 10], &[2, 7], 2);
        let params = ReductionParams::preset(PipelineKind::Robust);
        let f = flat_f(10, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(1, 1_000_000));
        let caps = compute_radius_bounds_robust(&inst, &f, &params, &sparse);
        assert!(caps.iter().all(Rat::is_zero));
    }

    #[test]
    fn assignment_walks_distances_downward() {
        // two co-located clients, budget lets exactly one carry each level:
        // the lower-indexed client gets the larger cap
        let inst = tiny(&[0, 6], &[3, 3], 2);
        let mut params = ReductionParams::preset(PipelineKind::Robust);
        params.delta = rat!(1, 2);
        let f = flat_f(6, &params.eps, 2);
        // budget rho*U just below 2*f(shrink*3): f is linear slope 1 here
        // shrink = (1/2)(7/8) = 7/16, f(shrink*3) = 21/16, pick rho*U = 2
        params.rho = Rat::one();
        let sparse = SparseInstance::trivial(&inst, rat!(2));
        let caps = compute_radius_bounds_robust(&inst, &f, &params, &sparse);
        assert!(radius_property_holds(&inst, &f, &params, &sparse, &caps));
        // both clients co-located: at t=3 the ball holds both, 2*f(21/16)
        // = 42/16 > 2, so only one client may be capped at 3
        assert_eq!(caps[0], rat!(3));
        assert!(caps[1] < rat!(3));
    }

    #[test]
    fn knapsack_caps_pick_largest_affordable_distance() {
        let inst = tiny(&[0, 10], &[2, 7], 2);
        let mut params = ReductionParams::preset(PipelineKind::Knapsack);
        params.rho = Rat::one();
        let f = flat_f(10, &params.eps, 2);
        let generous = SparseInstance::trivial(&inst, rat!(1_000));
        let caps = compute_radius_bounds_knapsack(&inst, &f, &params, &generous);
        assert_eq!(caps, vec![rat!(8), rat!(7)]);
        let stingy = SparseInstance::trivial(&inst, rat!(1, 1_000));
        let caps = compute_radius_bounds_knapsack(&inst, &f, &params, &stingy);
        assert!(caps.iter().all(Rat::is_zero));
    }
}
