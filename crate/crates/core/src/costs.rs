//! Ordered objectives: sorted weighted costs, top-`l` norms, the telescoping
//! decomposition into top-`l` terms, weight padding/sparsification and exact
//! solution evaluation for all four problem variants.

use std::collections::BTreeSet;

use crate::model::{
    Instance, ModelError, ModelResult, ServiceCostVector, Solution, Variant, WeightVector,
};
use crate::rat::Rat;

/// `w . sort_desc(c)` — the ordered objective.
pub fn ordered_cost(w: &WeightVector, costs: &[Rat]) -> ModelResult<Rat> {
    if w.len() != costs.len() {
        return Err(ModelError::LengthMismatch(w.len(), costs.len()));
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    Ok(w.0.iter().zip(&sorted).map(|(wi, ci)| wi * ci).sum())
}

/// Sum of the `ell` largest entries, `1 <= ell <= |c|`.
pub fn top_ell(costs: &[Rat], ell: usize) -> ModelResult<Rat> {
    if ell == 0 || ell > costs.len() {
        return Err(ModelError::RankOutOfRange(ell, costs.len()));
    }
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    Ok(sorted[..ell].iter().sum())
}

/// Telescoped form `sum_l (w_l - w_{l+1}) Top_l(c)` with `w_{n+1} = 0`.
/// Agrees exactly with [`ordered_cost`]; kept as an independent route for
/// cross-checking.
pub fn conic_cost(w: &WeightVector, costs: &[Rat]) -> ModelResult<Rat> {
    if w.len() != costs.len() {
        return Err(ModelError::LengthMismatch(w.len(), costs.len()));
    }
    let n = w.len();
    let mut total = Rat::zero();
    for ell in 1..=n {
        let next = if ell < n { w.0[ell].clone() } else { Rat::zero() };
        let gap = &w.0[ell - 1] - &next;
        if !gap.is_zero() {
            total += gap * top_ell(costs, ell)?;
        }
    }
    Ok(total)
}

/// Raises every weight to at least `eps * w_1 / m`, keeping the vector
/// non-increasing. The padded cost stays within a `(1+eps)` factor of the
/// original for every cost vector.
pub fn pad_weights(w: &WeightVector, eps: &Rat) -> WeightVector {
    assert!(eps.is_positive(), "eps must be positive");
    if w.is_empty() || w.0[0].is_zero() {
        return w.clone();
    }
    let floor = &(eps * &w.0[0]) / &Rat::from_int(w.len() as i64);
    WeightVector(
        w.0.iter()
            .map(|wi| if wi < &floor { floor.clone() } else { wi.clone() })
            .collect(),
    )
}

/// Anchor ranks and the flattened weights they induce.
#[derive(Debug, Clone)]
pub struct SparsifiedWeights {
    /// anchor ranks, 1-based, strictly increasing, last entry is `n`
    pub pos: Vec<usize>,
    pub weights: WeightVector,
}

impl SparsifiedWeights {
    /// smallest anchor larger than `ell`; `n+1` past the last anchor
    pub fn next_pos(&self, ell: usize) -> usize {
        let n = self.weights.len();
        self.pos
            .iter()
            .copied()
            .find(|&p| p > ell)
            .unwrap_or(n + 1)
    }

    /// weight at 1-based rank, with rank `n+1` reading as zero
    pub fn weight_at(&self, rank: usize) -> Rat {
        if rank > self.weights.len() {
            Rat::zero()
        } else {
            self.weights.0[rank - 1].clone()
        }
    }
}

/// Geometric anchor ranks `min(ceil((1+delta)^s), n)` for `s >= 0`.
pub fn pos_ranks(n: usize, delta: &Rat) -> Vec<usize> {
    assert!(delta.is_positive(), "delta must be positive");
    assert!(n >= 1);
    let mut pos = Vec::new();
    let base = &Rat::one() + delta;
    let mut power = Rat::one();
    loop {
        let ceil = -(-power.clone()).floor_int();
        let rank: usize = ceil.try_into().unwrap_or(usize::MAX);
        let rank = rank.min(n);
        if pos.last() != Some(&rank) {
            pos.push(rank);
        }
        if rank == n {
            break;
        }
        power = &power * &base;
    }
    pos
}

/// Flattens the weights between anchor ranks: anchors keep their weight,
/// positions strictly between anchors inherit the weight of the next anchor
/// (zero past rank `n`).
pub fn sparsify_weights(w: &WeightVector, delta: &Rat) -> SparsifiedWeights {
    let n = w.len();
    let pos = pos_ranks(n, delta);
    let mut weights = w.0.clone();
    for (a, rank) in pos.iter().enumerate() {
        let next = pos.get(a + 1).copied().unwrap_or(n + 1);
        let fill = if next > n {
            Rat::zero()
        } else {
            w.0[next - 1].clone()
        };
        for r in rank + 1..next {
            weights[r - 1] = fill.clone();
        }
    }
    SparsifiedWeights {
        pos,
        weights: WeightVector(weights),
    }
}

/// `d` when `d >= threshold`, else 0.
pub fn truncated_distance(d: &Rat, threshold: &Rat) -> Rat {
    debug_assert!(!d.is_negative() && !threshold.is_negative());
    if d >= threshold {
        d.clone()
    } else {
        Rat::zero()
    }
}

/// Checks feasibility of `sol` for `inst` and evaluates its ordered cost,
/// recomputing each client's optimal assignment from the open set rather
/// than trusting the stored assignments.
pub fn evaluate_solution(inst: &Instance, sol: &Solution) -> ModelResult<(ServiceCostVector, Rat)> {
    let nf = inst.n_facilities();
    let nc = inst.n_clients();
    let open_set: BTreeSet<usize> = sol.open.iter().copied().collect();
    if open_set.len() != sol.open.len() {
        return Err(ModelError::InfeasibleSolution("duplicate open facility".into()));
    }
    if sol.open.iter().any(|&i| i >= nf) || sol.served.iter().any(|&j| j >= nc) {
        return Err(ModelError::InfeasibleSolution("index out of range".into()));
    }
    if sol.open.is_empty() {
        return Err(ModelError::InfeasibleSolution("no open facilities".into()));
    }
    if sol.served.len() != sol.assignments.len() {
        return Err(ModelError::InfeasibleSolution(
            "assignments not parallel to served clients".into(),
        ));
    }
    let served_set: BTreeSet<usize> = sol.served.iter().copied().collect();
    if served_set.len() != sol.served.len() {
        return Err(ModelError::InfeasibleSolution("duplicate served client".into()));
    }

    match &inst.variant {
        Variant::Robust { k, m } => {
            if sol.open.len() > *k {
                return Err(ModelError::InfeasibleSolution(format!(
                    "opened {} > k={k}",
                    sol.open.len()
                )));
            }
            if sol.served.len() != *m {
                return Err(ModelError::InfeasibleSolution(format!(
                    "served {} clients, expected m={m}",
                    sol.served.len()
                )));
            }
        }
        Variant::Matroid { spec } => {
            if !spec.is_independent(&open_set) {
                return Err(ModelError::InfeasibleSolution(
                    "open set not independent in the matroid".into(),
                ));
            }
            if sol.served.len() != nc {
                return Err(ModelError::InfeasibleSolution("all clients must be served".into()));
            }
        }
        Variant::Knapsack { weights, budget } => {
            let total: Rat = sol.open.iter().map(|&i| &weights[i]).sum();
            if &total > budget {
                return Err(ModelError::InfeasibleSolution(format!(
                    "knapsack weight {total} exceeds budget {budget}"
                )));
            }
            if sol.served.len() != nc {
                return Err(ModelError::InfeasibleSolution("all clients must be served".into()));
            }
        }
        Variant::FaultTolerant { k, requirements } => {
            if sol.open.len() > *k {
                return Err(ModelError::InfeasibleSolution(format!(
                    "opened {} > k={k}",
                    sol.open.len()
                )));
            }
            if sol.served.len() != nc {
                return Err(ModelError::InfeasibleSolution("all clients must be served".into()));
            }
            for (idx, &j) in sol.served.iter().enumerate() {
                let a = &sol.assignments[idx];
                let distinct: BTreeSet<usize> = a.iter().copied().collect();
                if a.len() != requirements[j] || distinct.len() != a.len() {
                    return Err(ModelError::InfeasibleSolution(format!(
                        "client {j} needs {} distinct facilities",
                        requirements[j]
                    )));
                }
                if !a.iter().all(|i| open_set.contains(i)) {
                    return Err(ModelError::InfeasibleSolution(
                        "assignment references a closed facility".into(),
                    ));
                }
                if sol.open.len() < requirements[j] {
                    return Err(ModelError::InfeasibleSolution(format!(
                        "client {j} requires {} facilities but only {} open",
                        requirements[j],
                        sol.open.len()
                    )));
                }
            }
        }
    }
    for (idx, a) in sol.assignments.iter().enumerate() {
        if !matches!(inst.variant, Variant::FaultTolerant { .. }) && a.len() != 1 {
            return Err(ModelError::InfeasibleSolution(format!(
                "client {} must have exactly one assigned facility",
                sol.served[idx]
            )));
        }
        if !a.iter().all(|i| open_set.contains(i)) {
            return Err(ModelError::InfeasibleSolution(
                "assignment references a closed facility".into(),
            ));
        }
    }

    let costs: ServiceCostVector = sol
        .served
        .iter()
        .map(|&j| client_cost(inst, &sol.open, j))
        .collect();
    let total = ordered_cost(&inst.weights, &costs)?;
    Ok((costs, total))
}

/// Optimal service cost of client `j` against an open set: nearest facility,
/// or the sum over the `r_j` nearest for the fault-tolerant variant.
pub fn client_cost(inst: &Instance, open: &[usize], j: usize) -> Rat {
    match &inst.variant {
        Variant::FaultTolerant { requirements, .. } => {
            nearest_distances(inst, open, j, requirements[j]).into_iter().sum()
        }
        _ => nearest_distances(inst, open, j, 1).into_iter().sum(),
    }
}

/// The `count` smallest facility distances from client `j` within `open`,
/// ties broken by facility index.
pub fn nearest_distances(inst: &Instance, open: &[usize], j: usize, count: usize) -> Vec<Rat> {
    let mut ds: Vec<(Rat, usize)> = open
        .iter()
        .map(|&i| (inst.metric.d_fc(i, j).clone(), i))
        .collect();
    ds.sort();
    ds.truncate(count);
    ds.into_iter().map(|(d, _)| d).collect()
}

/// The `count` nearest open facilities themselves (for assignments).
pub fn nearest_facilities(inst: &Instance, open: &[usize], j: usize, count: usize) -> Vec<usize> {
    let mut ds: Vec<(Rat, usize)> = open
        .iter()
        .map(|&i| (inst.metric.d_fc(i, j).clone(), i))
        .collect();
    ds.sort();
    ds.truncate(count);
    ds.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricSpace, Variant};
    use crate::rat;

    fn wv(entries: &[Rat]) -> WeightVector {
        WeightVector::new(entries.to_vec()).unwrap()
    }

    #[test]
    fn ordered_cost_examples() {
        let c = vec![rat!(1), rat!(5), rat!(2)];
        assert_eq!(ordered_cost(&wv(&[rat!(3), rat!(2), rat!(1)]), &c).unwrap(), rat!(20));
        assert_eq!(ordered_cost(&WeightVector::ones(3), &[rat!(4), rat!(7), rat!(2)]).unwrap(), rat!(13));
        assert_eq!(
            ordered_cost(&wv(&[rat!(1), rat!(0), rat!(0)]), &[rat!(4), rat!(7), rat!(2)]).unwrap(),
            rat!(7)
        );
        assert!(ordered_cost(&WeightVector::ones(2), &c).is_err());
    }

    #[test]
    fn top_ell_examples() {
        let c = vec![rat!(1), rat!(5), rat!(2)];
        assert_eq!(top_ell(&c, 2).unwrap(), rat!(7));
        assert_eq!(top_ell(&c, 3).unwrap(), rat!(8));
        assert_eq!(top_ell(&[rat!(0), rat!(0)], 1).unwrap(), rat!(0));
        assert!(top_ell(&c, 0).is_err());
        assert!(top_ell(&c, 4).is_err());
    }

    #[test]
    fn conic_cost_examples() {
        let c = vec![rat!(1), rat!(5), rat!(2)];
        assert_eq!(conic_cost(&wv(&[rat!(3), rat!(2), rat!(1)]), &c).unwrap(), rat!(20));
        assert_eq!(
            conic_cost(&wv(&[rat!(1), rat!(1)]), &[rat!(7), rat!(4)]).unwrap(),
            rat!(11)
        );
        assert_eq!(conic_cost(&wv(&[rat!(2), rat!(0), rat!(0)]), &c).unwrap(), rat!(10));
    }

    #[test]
    fn pad_weights_examples() {
        let w = wv(&[rat!(1), rat!(1, 5), rat!(0)]);
        let padded = pad_weights(&w, &rat!(3, 10));
        assert_eq!(padded.0, vec![rat!(1), rat!(1, 5), rat!(1, 10)]);

        let w2 = wv(&[rat!(1), rat!(1), rat!(1)]);
        assert_eq!(pad_weights(&w2, &rat!(2)).0, w2.0);

        let w3 = wv(&[rat!(1), rat!(0), rat!(0), rat!(0)]);
        assert_eq!(
            pad_weights(&w3, &rat!(2, 5)).0,
            vec![rat!(1), rat!(1, 10), rat!(1, 10), rat!(1, 10)]
        );
    }

    #[test]
    fn pos_ranks_examples() {
        assert_eq!(pos_ranks(8, &rat!(1)), vec![1, 2, 4, 8]);
        assert_eq!(pos_ranks(4, &rat!(10)), vec![1, 4]);
        assert_eq!(pos_ranks(1, &rat!(1)), vec![1]);
    }

    #[test]
    fn sparsify_examples() {
        let w = wv(&[rat!(8), rat!(4), rat!(2), rat!(1)]);
        let s = sparsify_weights(&w, &rat!(1));
        assert_eq!(s.pos, vec![1, 2, 4]);
        assert_eq!(s.weights.0, vec![rat!(8), rat!(4), rat!(1), rat!(1)]);
        assert_eq!(s.next_pos(2), 4);
        assert_eq!(s.next_pos(4), 5);
        assert_eq!(s.weight_at(5), rat!(0));

        let s2 = sparsify_weights(&w, &rat!(10));
        assert_eq!(s2.pos, vec![1, 4]);
        assert_eq!(s2.weights.0, vec![rat!(8), rat!(1), rat!(1), rat!(1)]);
    }

    #[test]
    fn truncation_boundary_inclusive() {
        assert_eq!(truncated_distance(&rat!(4), &rat!(4)), rat!(4));
        assert_eq!(truncated_distance(&rat!(39, 10), &rat!(4)), rat!(0));
        assert_eq!(truncated_distance(&rat!(7, 3), &rat!(0)), rat!(7, 3));
    }

    fn line_instance(facilities: &[i64], clients: &[i64], variant: Variant, w: &[Rat]) -> Instance {
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
            weights: WeightVector::new(w.to_vec()).unwrap(),
            variant,
        }
    }

    #[test]
    fn evaluate_clients_on_facilities() {
        let inst = line_instance(
            &[0, 10],
            &[0, 10],
            Variant::FaultTolerant { k: 2, requirements: vec![1, 1] },
            &[rat!(1), rat!(1)],
        );
        let sol = Solution {
            open: vec![0, 1],
            served: vec![0, 1],
            assignments: vec![vec![0], vec![1]],
        };
        let (costs, total) = evaluate_solution(&inst, &sol).unwrap();
        assert_eq!(costs, vec![rat!(0), rat!(0)]);
        assert_eq!(total, rat!(0));
    }

    #[test]
    fn evaluate_robust_best_single_client() {
        let inst = line_instance(&[0], &[0, 9], Variant::Robust { k: 1, m: 1 }, &[rat!(1)]);
        let sol = Solution {
            open: vec![0],
            served: vec![0],
            assignments: vec![vec![0]],
        };
        let (_, total) = evaluate_solution(&inst, &sol).unwrap();
        assert_eq!(total, rat!(0));
    }

    #[test]
    fn evaluate_fault_tolerant_sums_two_nearest() {
        let inst = line_instance(
            &[0, 3],
            &[0],
            Variant::FaultTolerant { k: 2, requirements: vec![2] },
            &[rat!(1)],
        );
        let sol = Solution {
            open: vec![0, 1],
            served: vec![0],
            assignments: vec![vec![0, 1]],
        };
        let (costs, total) = evaluate_solution(&inst, &sol).unwrap();
        assert_eq!(costs, vec![rat!(3)]);
        assert_eq!(total, rat!(3));
    }

    #[test]
    fn evaluate_rejects_infeasible() {
        let inst = line_instance(&[0, 10], &[0, 10], Variant::Robust { k: 1, m: 2 }, &[rat!(1), rat!(1)]);
        let sol = Solution {
            open: vec![0, 1],
            served: vec![0, 1],
            assignments: vec![vec![0], vec![1]],
        };
        assert!(evaluate_solution(&inst, &sol).is_err());
    }
}
