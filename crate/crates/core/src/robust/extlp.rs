//! The strengthened relaxation solved before iterative rounding.
//!
//! On top of the natural assignment LP it pins the preselected facilities
//! open, forbids connections beyond the per-client caps, forbids single
//! connections too expensive for the star budget, and bounds every
//! non-preselected facility's fractional star cost by `rho*U*y_i`. The
//! cardinality row depends on the variant: a plain count, a knapsack budget,
//! or matroid rank rows (partition ranks explicitly, arbitrary matroids
//! lazily through a violated-subset oracle).

use std::collections::BTreeSet;

use crate::lp::{
    default_max_rounds, solve_basic, solve_with_generation, BasicSolution, Constraint,
    LinearProgram, LpResult, Relation,
};
use crate::model::{Instance, MatroidSpec, Variant};
use crate::params::ReductionParams;
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;
use crate::robust::sparse::SparseInstance;

pub struct ExtLpLayout {
    pub lp: LinearProgram,
    /// (facility, index into sparse.kept) -> variable; absent pairs are
    /// fixed to zero by the cap and star rules
    pub x_vars: Vec<((usize, usize), usize)>,
    /// per facility
    pub y_vars: Vec<usize>,
}

impl ExtLpLayout {
    pub fn x_value<'a>(&self, sol: &'a BasicSolution, fac: usize, kept_idx: usize) -> Rat {
        self.x_vars
            .iter()
            .find(|((i, j), _)| *i == fac && *j == kept_idx)
            .map(|(_, v)| sol.values[*v].clone())
            .unwrap_or_else(Rat::zero)
    }
}

/// `caps` parallel to `sparse.kept` (`None` skips the cap and star groups —
/// the matroid route).
pub fn build_ext_lp(
    inst: &Instance,
    f: &CostFunction,
    params: &ReductionParams,
    sparse: &SparseInstance,
    caps: Option<&[Rat]>,
) -> ExtLpLayout {
    let lambda1 = params.lambda1();
    let star_scale = params.star_scale();
    let rho_u = &params.rho * &sparse.u;
    let preselected: BTreeSet<usize> = sparse.preselected.iter().copied().collect();
    let nf = inst.n_facilities();

    let mut lp = LinearProgram::minimize();
    let y_vars: Vec<usize> = (0..nf)
        .map(|i| {
            let lo = if preselected.contains(&i) {
                Rat::one()
            } else {
                Rat::zero()
            };
            lp.add_var(format!("y{i}"), Some(lo), Some(Rat::one()))
        })
        .collect();

    let mut x_vars = Vec::new();
    let mut objective = Vec::new();
    for (kept_idx, &j) in sparse.kept.iter().enumerate() {
        for i in 0..nf {
            let d = inst.metric.d_fc(i, j);
            if let Some(caps) = caps {
                if d > &caps[kept_idx] {
                    continue;
                }
                if !preselected.contains(&i) && f.eval(&(&star_scale * d)) > rho_u {
                    continue;
                }
            }
            let v = lp.add_var(format!("x{i}_{j}"), Some(Rat::zero()), Some(Rat::one()));
            lp.add_constraint(
                vec![(v, Rat::one()), (y_vars[i], -Rat::one())],
                Relation::Le,
                Rat::zero(),
            );
            objective.push((v, f.eval(&(&lambda1 * d))));
            x_vars.push(((i, kept_idx), v));
        }
    }
    lp.set_objective(objective);

    // per-client assignment at most one; global coverage at least m'
    for (kept_idx, _) in sparse.kept.iter().enumerate() {
        let coeffs: Vec<(usize, Rat)> = x_vars
            .iter()
            .filter(|((_, kj), _)| *kj == kept_idx)
            .map(|(_, v)| (*v, Rat::one()))
            .collect();
        if !coeffs.is_empty() {
            lp.add_constraint(coeffs, Relation::Le, Rat::one());
        }
    }
    lp.add_constraint(
        x_vars.iter().map(|(_, v)| (*v, Rat::one())).collect(),
        Relation::Ge,
        Rat::from_int(sparse.m_prime as i64),
    );

    match &inst.variant {
        Variant::Robust { k, .. } => {
            lp.add_constraint(
                y_vars.iter().map(|&v| (v, Rat::one())).collect(),
                Relation::Eq,
                Rat::from_int(*k as i64),
            );
        }
        Variant::Knapsack { weights, budget } => {
            lp.add_constraint(
                y_vars
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, weights[i].clone()))
                    .collect(),
                Relation::Le,
                budget.clone(),
            );
        }
        Variant::Matroid { spec } => match spec {
            MatroidSpec::Partition { parts, capacities } => {
                for (part, &cap) in parts.iter().zip(capacities) {
                    lp.add_constraint(
                        part.iter().map(|&i| (y_vars[i], Rat::one())).collect(),
                        Relation::Le,
                        Rat::from_int(cap as i64),
                    );
                }
            }
            MatroidSpec::Explicit { .. } => { /* generated lazily */ }
        },
        Variant::FaultTolerant { .. } => unreachable!("fault-tolerant uses its own relaxation"),
    }

    // fractional star budget per non-preselected facility
    if caps.is_some() {
        for i in 0..nf {
            if preselected.contains(&i) {
                continue;
            }
            let mut coeffs: Vec<(usize, Rat)> = x_vars
                .iter()
                .filter(|((fi, _), _)| *fi == i)
                .map(|((_, kj), v)| {
                    let d = inst.metric.d_fc(i, sparse.kept[*kj]);
                    (*v, f.eval(&(&star_scale * d)))
                })
                .filter(|(_, c)| !c.is_zero())
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            coeffs.push((y_vars[i], -rho_u.clone()));
            lp.add_constraint(coeffs, Relation::Le, Rat::zero());
        }
    }

    ExtLpLayout { lp, x_vars, y_vars }
}

/// Violated-rank oracle over aggregated facility openings; used for both
/// the strengthened LP (identity aggregation) and the rounding LP (copies
/// aggregated to their location).
pub fn matroid_separation(
    spec: &MatroidSpec,
    nf: usize,
    groups: &[Vec<usize>],
    values: &[Rat],
) -> Option<Constraint> {
    for mask in 1u64..(1 << nf) {
        let subset: BTreeSet<usize> = (0..nf).filter(|i| mask >> i & 1 == 1).collect();
        let rank = Rat::from_int(spec.rank(&subset) as i64);
        let total: Rat = subset
            .iter()
            .flat_map(|&i| groups[i].iter())
            .map(|&v| &values[v])
            .sum();
        if total > rank {
            return Some(Constraint::new(
                subset
                    .iter()
                    .flat_map(|&i| groups[i].iter().map(|&v| (v, Rat::one())))
                    .collect(),
                Relation::Le,
                rank,
            ));
        }
    }
    None
}

/// Solves the strengthened LP, lazily generating rank constraints for
/// explicit matroids.
pub fn solve_ext_lp(inst: &Instance, layout: &mut ExtLpLayout) -> LpResult<BasicSolution> {
    if let Variant::Matroid {
        spec: spec @ MatroidSpec::Explicit { .. },
    } = &inst.variant
    {
        let nf = inst.n_facilities();
        let groups: Vec<Vec<usize>> = layout.y_vars.iter().map(|&v| vec![v]).collect();
        let max_rounds = default_max_rounds(&layout.lp) + (1 << nf);
        let mut oracle = |_lp: &LinearProgram, sol: &BasicSolution| {
            matroid_separation(spec, nf, &groups, &sol.values)
        };
        solve_with_generation(&mut layout.lp, &mut oracle, max_rounds)
    } else {
        solve_basic(&layout.lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MetricSpace, WeightVector};
    use crate::params::PipelineKind;
    use crate::rat;
    use crate::robust::costfn::level_count;

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
    fn zero_cap_forbids_all_but_colocated() {
        let inst = robust_inst(&[0, 5], &[0, 5], 1, 2);
        let params = ReductionParams::preset(PipelineKind::Robust);
        let f = flat_f(5, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(100));
        // cap 0 for client 0, generous for client 1
        let caps = vec![rat!(0), rat!(100)];
        let layout = build_ext_lp(&inst, &f, &params, &sparse, Some(&caps));
        // client 0 may only connect to the co-located facility 0
        let client0_pairs: Vec<usize> = layout
            .x_vars
            .iter()
            .filter(|((_, kj), _)| *kj == 0)
            .map(|((i, _), _)| *i)
            .collect();
        assert_eq!(client0_pairs, vec![0]);
    }

    #[test]
    fn preselected_facility_forced_open() {
        let inst = robust_inst(&[0, 5], &[0, 5], 2, 2);
        let params = ReductionParams::preset(PipelineKind::Robust);
        let f = flat_f(5, &params.eps, 2);
        let mut sparse = SparseInstance::trivial(&inst, rat!(100));
        sparse.preselected = vec![1];
        let caps = vec![rat!(100), rat!(100)];
        let mut layout = build_ext_lp(&inst, &f, &params, &sparse, Some(&caps));
        let sol = solve_ext_lp(&inst, &mut layout).unwrap();
        assert_eq!(sol.values[layout.y_vars[1]], rat!(1));
    }

    #[test]
    fn partition_rank_rows_bind() {
        let inst = Instance {
            variant: Variant::Matroid {
                spec: MatroidSpec::Partition {
                    parts: vec![vec![0, 1]],
                    capacities: vec![1],
                },
            },
            ..robust_inst(&[0, 10], &[0, 10], 1, 2)
        };
        let params = ReductionParams::preset(PipelineKind::Matroid);
        let f = flat_f(10, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(1));
        let mut layout = build_ext_lp(&inst, &f, &params, &sparse, None);
        let sol = solve_ext_lp(&inst, &mut layout).unwrap();
        let total_open: Rat = layout.y_vars.iter().map(|&v| sol.values[v].clone()).sum();
        assert!(total_open <= rat!(1));
    }

    #[test]
    fn explicit_matroid_generates_violated_rank_rows() {
        // rank-1 matroid on two facilities; without the lazy rows the LP
        // would open both
        let inst = Instance {
            variant: Variant::Matroid {
                spec: MatroidSpec::Explicit {
                    sets: vec![BTreeSet::new(), BTreeSet::from([0]), BTreeSet::from([1])],
                },
            },
            ..robust_inst(&[0, 10], &[0, 10], 1, 2)
        };
        let params = ReductionParams::preset(PipelineKind::Matroid);
        let f = flat_f(10, &params.eps, 2);
        let sparse = SparseInstance::trivial(&inst, rat!(1));
        let mut layout = build_ext_lp(&inst, &f, &params, &sparse, None);
        let sol = solve_ext_lp(&inst, &mut layout).unwrap();
        let total_open: Rat = layout.y_vars.iter().map(|&v| sol.values[v].clone()).sum();
        assert_eq!(total_open, rat!(1));
    }
}
