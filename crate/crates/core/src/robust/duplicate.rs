//! Facility duplication with star balancing.
//!
//! The fractional assignment `x` is rewritten onto co-located facility
//! copies so that every client either fully uses a copy or not at all. Each
//! client takes the copies of its facility with the currently smallest star
//! costs, splitting one copy at the boundary when the amounts do not line
//! up; that choice keeps every copy's star cost within twice the fractional
//! star budget.

use std::collections::BTreeSet;

use crate::lp::BasicSolution;
use crate::model::Instance;
use crate::params::ReductionParams;
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;
use crate::robust::extlp::ExtLpLayout;
use crate::robust::sparse::SparseInstance;

#[derive(Debug, Clone)]
pub struct FacilityCopy {
    /// original facility
    pub orig: usize,
    pub y: Rat,
}

#[derive(Debug, Clone)]
pub struct DuplicatedSolution {
    pub copies: Vec<FacilityCopy>,
    /// per kept client: the copies it fully uses, each copy at most once
    pub outer: Vec<BTreeSet<usize>>,
}

impl DuplicatedSolution {
    pub fn volume(&self, set: &BTreeSet<usize>) -> Rat {
        set.iter().map(|&c| &self.copies[c].y).sum()
    }
}

pub fn duplicate_and_balance(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
    layout: &ExtLpLayout,
    sol: &BasicSolution,
) -> DuplicatedSolution {
    let nf = inst.n_facilities();
    let star_scale = params.star_scale();

    // one copy per facility with positive opening; zero-opening facilities
    // can never serve anyone
    let mut copies: Vec<FacilityCopy> = Vec::new();
    let mut first_copy: Vec<Option<usize>> = vec![None; nf];
    for i in 0..nf {
        let y = sol.values[layout.y_vars[i]].clone();
        if y.is_positive() {
            first_copy[i] = Some(copies.len());
            copies.push(FacilityCopy { orig: i, y });
        }
    }
    let mut outer: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); sparse.kept.len()];
    for ((i, kept_idx), v) in &layout.x_vars {
        if sol.values[*v].is_positive() {
            outer[*kept_idx].insert(first_copy[*i].expect("x <= y forces y > 0"));
        }
    }

    // star cost of a copy under the current memberships
    let star_cost = |copies_len: usize, outer: &[BTreeSet<usize>], c: usize, orig: usize| -> Rat {
        let _ = copies_len;
        outer
            .iter()
            .enumerate()
            .filter(|(_, set)| set.contains(&c))
            .map(|(kept_idx, _)| {
                let d = inst.metric.d_fc(orig, sparse.kept[kept_idx]);
                f.eval(&(&star_scale * d))
            })
            .sum()
    };

    for i in 0..nf {
        for kept_idx in 0..sparse.kept.len() {
            let x = layout
                .x_vars
                .iter()
                .find(|((fi, kj), _)| *fi == i && *kj == kept_idx)
                .map(|(_, v)| sol.values[*v].clone())
                .unwrap_or_else(Rat::zero);
            if !x.is_positive() {
                continue;
            }
            // copies of i ordered by (star cost, id)
            let mut ids: Vec<usize> = (0..copies.len()).filter(|&c| copies[c].orig == i).collect();
            ids.sort_by(|&a, &b| {
                star_cost(copies.len(), &outer, a, i)
                    .cmp(&star_cost(copies.len(), &outer, b, i))
                    .then(a.cmp(&b))
            });
            let mut selected: Vec<usize> = Vec::new();
            let mut acc = Rat::zero();
            for &c in &ids {
                if acc == x {
                    break;
                }
                let cy = copies[c].y.clone();
                if &acc + &cy <= x {
                    selected.push(c);
                    acc += &cy;
                } else {
                    // split c at the exact boundary
                    let need = &x - &acc;
                    let rest = &cy - &need;
                    copies[c].y = need;
                    let sibling = copies.len();
                    copies.push(FacilityCopy {
                        orig: i,
                        y: rest,
                    });
                    for set in outer.iter_mut() {
                        if set.contains(&c) {
                            set.insert(sibling);
                        }
                    }
                    selected.push(c);
                    acc = x.clone();
                }
            }
            assert_eq!(acc, x, "copy volumes failed to reach the assignment");
            let keep: BTreeSet<usize> = selected.into_iter().collect();
            outer[kept_idx].retain(|c| copies[*c].orig != i);
            outer[kept_idx].extend(keep);
        }
    }

    let dup = DuplicatedSolution { copies, outer };

    // per-client volume equals the fractional assignment
    for (kept_idx, _) in sparse.kept.iter().enumerate() {
        let want: Rat = layout
            .x_vars
            .iter()
            .filter(|((_, kj), _)| *kj == kept_idx)
            .map(|(_, v)| sol.values[*v].clone())
            .sum();
        assert_eq!(dup.volume(&dup.outer[kept_idx]), want);
    }
    // per-facility volume preserved
    for i in 0..nf {
        let total: Rat = dup
            .copies
            .iter()
            .filter(|c| c.orig == i)
            .map(|c| c.y.clone())
            .sum();
        assert_eq!(total, sol.values[layout.y_vars[i]]);
    }
    // objective preserved exactly
    let lambda1 = params.lambda1();
    let dup_obj: Rat = dup
        .outer
        .iter()
        .enumerate()
        .flat_map(|(kept_idx, set)| {
            set.iter().map(move |&c| (kept_idx, c))
        })
        .map(|(kept_idx, c)| {
            let d = inst.metric.d_fc(dup.copies[c].orig, sparse.kept[kept_idx]);
            &dup.copies[c].y * &f.eval(&(&lambda1 * d))
        })
        .sum();
    assert_eq!(dup_obj, sol.objective_value, "duplication changed the objective");

    dup
}

/// Star bound on every copy away from the preselected set: at most twice
/// the fractional budget.
pub fn assert_star_bounds(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
    dup: &DuplicatedSolution,
) {
    let star_scale = params.star_scale();
    let bound = &(&Rat::from_int(2) * &params.rho) * &sparse.u;
    for (c, copy) in dup.copies.iter().enumerate() {
        let colocated = sparse
            .preselected
            .iter()
            .any(|&s| inst.metric.d(copy.orig, s).is_zero());
        if colocated {
            continue;
        }
        let star: Rat = dup
            .outer
            .iter()
            .enumerate()
            .filter(|(_, set)| set.contains(&c))
            .map(|(kept_idx, _)| {
                let d = inst.metric.d_fc(copy.orig, sparse.kept[kept_idx]);
                f.eval(&(&star_scale * d))
            })
            .sum();
        assert!(star <= bound, "copy {c} carries star cost {star} > {bound}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_basic;
    use crate::model::{MetricSpace, Variant, WeightVector};
    use crate::params::PipelineKind;
    use crate::rat;
    use crate::robust::costfn::level_count;
    use crate::robust::extlp::build_ext_lp;

    fn robust_inst(facilities: &[i64], clients: &[i64], k: usize, m: usize) -> Instance {
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
            variant: Variant::Robust { k, m },
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
    fn integral_solution_needs_no_splits() {
        let inst = robust_inst(&[0, 9], &[0, 9], 2, 2);
        let params = ReductionParams::preset(PipelineKind::Robust);
        let f = flat_f(9, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(100));
        let caps = vec![rat!(100), rat!(100)];
        let layout = build_ext_lp(&inst, &f, &params, &sparse, Some(&caps));
        let sol = solve_basic(&layout.lp).unwrap();
        let dup = duplicate_and_balance(&inst, &f, &params, &sparse, &layout, &sol);
        assert_eq!(dup.copies.len(), 2);
        assert_star_bounds(&inst, &f, &params, &sparse, &dup);
    }

    #[test]
    fn fractional_share_splits_at_the_boundary() {
        // one facility at y=1 shared by two clients at x=1/2 each: the walk
        // splits the copy into two halves and both postconditions replay
        let inst = robust_inst(&[0], &[0, 0], 1, 1);
        let mut params = ReductionParams::preset(PipelineKind::Robust);
        params.rho = rat!(1);
        let f = flat_f(1, &params.eps, 1);
        let mut sparse = SparseInstance::trivial(&inst, rat!(100));
        sparse.m_prime = 1;
        let caps = vec![rat!(100), rat!(100)];
        let layout = build_ext_lp(&inst, &f, &params, &sparse, Some(&caps));
        let values = vec![rat!(1), rat!(1, 2), rat!(1, 2)];
        assert!(layout.lp.is_feasible(&values));
        let sol = crate::lp::BasicSolution {
            objective_value: layout.lp.objective_value(&values),
            values,
            basic_vars: vec![],
        };
        let dup = duplicate_and_balance(&inst, &f, &params, &sparse, &layout, &sol);
        assert_eq!(dup.copies.len(), 2);
        assert_eq!(dup.copies[0].y, rat!(1, 2));
        assert_eq!(dup.copies[1].y, rat!(1, 2));
        for set in &dup.outer {
            assert_eq!(dup.volume(set), rat!(1, 2));
        }
        assert_star_bounds(&inst, &f, &params, &sparse, &dup);
    }
}
