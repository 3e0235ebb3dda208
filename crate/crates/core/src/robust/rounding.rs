//! Metric-discretized iterative rounding.
//!
//! Distances are rounded up onto the grid -1, 0, tau^0, tau^1, ... and each
//! client carries an outer ball (its usable copies), an inner ball (those at
//! least one grid level closer) and a radius level. The loop alternately
//! solves the relaxation over the current balls, promotes clients whose
//! outer ball reaches a full unit of opening, and shrinks promoted clients
//! whose inner ball reaches a full unit. A disjoint core of clients pins
//! where whole units must open. Upon exit the vertex solution carries at
//! most two fractional openings, which a variant-specific swap resolves.

use std::collections::BTreeSet;

use crate::lp::{
    default_max_rounds, solve_basic, solve_with_generation, LinearProgram, Relation,
};
use crate::model::{Instance, MatroidSpec, Variant};
use crate::params::{PipelineKind, ReductionParams};
use crate::rat::Rat;
use crate::robust::costfn::CostFunction;
use crate::robust::duplicate::{DuplicatedSolution, FacilityCopy};
use crate::robust::extlp::matroid_separation;
use crate::robust::sparse::SparseInstance;
use crate::robust::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreId {
    Real(usize),
    Virt(usize),
}

pub struct RoundingState<'a> {
    pub inst: &'a Instance,
    pub f: &'a CostFunction,
    pub params: &'a ReductionParams,
    pub sparse: &'a SparseInstance,
    /// final connection caps parallel to `sparse.kept` (`None` for matroids)
    pub caps: Option<Vec<Rat>>,
    pub copies: Vec<FacilityCopy>,
    /// outer ball per kept client
    pub outer: Vec<BTreeSet<usize>>,
    /// inner ball per kept client (meaningful once promoted)
    pub inner: Vec<BTreeSet<usize>>,
    /// radius level per kept client, >= -1
    pub level: Vec<i64>,
    pub full: Vec<bool>,
    /// per preselected facility: its copies, pinned at level -1
    pub virt: Vec<(usize, BTreeSet<usize>)>,
    pub core: Vec<CoreId>,
}

impl<'a> RoundingState<'a> {
    pub fn new(
        inst: &'a Instance,
        f: &'a CostFunction,
        params: &'a ReductionParams,
        sparse: &'a SparseInstance,
        caps: Option<Vec<Rat>>,
        dup: &DuplicatedSolution,
    ) -> Self {
        let copies = dup.copies.clone();
        let outer = dup.outer.clone();
        let level: Vec<i64> = outer
            .iter()
            .enumerate()
            .map(|(kept_idx, set)| {
                set.iter()
                    .map(|&c| disc_level(params, inst.metric.d_fc(copies[c].orig, sparse.kept[kept_idx])))
                    .max()
                    .unwrap_or(-1)
            })
            .collect();
        let virt: Vec<(usize, BTreeSet<usize>)> = sparse
            .preselected
            .iter()
            .map(|&s| {
                let set: BTreeSet<usize> = copies
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.orig == s)
                    .map(|(idx, _)| idx)
                    .collect();
                (s, set)
            })
            .collect();
        let core = (0..virt.len()).map(CoreId::Virt).collect();
        let inner = vec![BTreeSet::new(); outer.len()];
        let state = RoundingState {
            inst,
            f,
            params,
            sparse,
            caps,
            copies,
            outer,
            inner,
            level,
            full: vec![false; sparse.kept.len()],
            virt,
            core,
        };
        state.assert_invariants();
        state
    }

    fn grid_value(&self, level: i64) -> Rat {
        grid_value(&self.params.tau, level)
    }

    fn disc_value(&self, copy: usize, kept_idx: usize) -> Rat {
        let d = self
            .inst
            .metric
            .d_fc(self.copies[copy].orig, self.sparse.kept[kept_idx]);
        self.grid_value(disc_level(self.params, d))
    }

    fn core_set(&self, id: CoreId) -> &BTreeSet<usize> {
        match id {
            CoreId::Real(j) => &self.outer[j],
            CoreId::Virt(v) => &self.virt[v].1,
        }
    }

    fn core_level(&self, id: CoreId) -> i64 {
        match id {
            CoreId::Real(j) => self.level[j],
            CoreId::Virt(_) => -1,
        }
    }

    fn shrink_inner(&self, kept_idx: usize) -> BTreeSet<usize> {
        let bound_level = self.level[kept_idx] - 1;
        if bound_level < -1 {
            return BTreeSet::new();
        }
        let bound = self.grid_value(bound_level);
        self.outer[kept_idx]
            .iter()
            .copied()
            .filter(|&c| self.disc_value(c, kept_idx) <= bound)
            .collect()
    }

    fn update_core(&mut self, kept_idx: usize) {
        let lj = self.level[kept_idx];
        let blocked = self.core.iter().any(|&id| {
            self.core_level(id) <= lj
                && !self.core_set(id).is_disjoint(&self.outer[kept_idx])
        });
        if !blocked {
            // everything intersecting here is a promoted client at a
            // strictly higher level; the preselected pins would have blocked
            let keep: Vec<CoreId> = self
                .core
                .iter()
                .copied()
                .filter(|&id| self.core_set(id).is_disjoint(&self.outer[kept_idx]))
                .collect();
            self.core = keep;
            self.core.push(CoreId::Real(kept_idx));
        }
    }

    /// The running structural invariants: the promoted/pending split covers
    /// all kept clients, the preselected pins stay in the core, core balls
    /// are mutually disjoint, levels respect the caps and never drop below
    /// -1, and star costs stay within twice the budget.
    pub fn assert_invariants(&self) {
        for v in 0..self.virt.len() {
            assert!(
                self.core.contains(&CoreId::Virt(v)),
                "a preselected facility left the core"
            );
        }
        for &id in &self.core {
            if let CoreId::Real(j) = id {
                assert!(self.full[j], "a pending client entered the core");
            }
        }
        for (a_idx, &a) in self.core.iter().enumerate() {
            for &b in self.core.iter().skip(a_idx + 1) {
                assert!(
                    self.core_set(a).is_disjoint(self.core_set(b)),
                    "core balls intersect"
                );
            }
        }
        for (kept_idx, &l) in self.level.iter().enumerate() {
            assert!(l >= -1, "radius level fell below -1");
            if let Some(caps) = &self.caps {
                assert!(
                    self.grid_value(l) <= &self.params.tau * &caps[kept_idx],
                    "radius level escaped the connection cap"
                );
            }
        }
        if self.params.kind != PipelineKind::Matroid {
            let bound = &(&Rat::from_int(2) * &self.params.rho) * &self.sparse.u;
            let star_scale = self.params.star_scale();
            for (c, copy) in self.copies.iter().enumerate() {
                let colocated = self
                    .sparse
                    .preselected
                    .iter()
                    .any(|&s| self.inst.metric.d(copy.orig, s).is_zero());
                if colocated {
                    continue;
                }
                let star: Rat = self
                    .outer
                    .iter()
                    .enumerate()
                    .filter(|(_, set)| set.contains(&c))
                    .map(|(kept_idx, _)| {
                        let d = self
                            .inst
                            .metric
                            .d_fc(copy.orig, self.sparse.kept[kept_idx]);
                        self.f.eval(&(&star_scale * d))
                    })
                    .sum();
                assert!(star <= bound, "outer-ball star cost escaped its budget");
            }
        }
    }

    fn volume(&self, set: &BTreeSet<usize>, y: &[Rat]) -> Rat {
        set.iter().map(|&c| &y[c]).sum()
    }

    /// The relaxation over the current balls plus its objective constant.
    pub fn build_aux_lp(&self) -> (LinearProgram, Rat) {
        let lambda2 = self.params.lambda2();
        let mut lp = LinearProgram::minimize();
        let n = self.copies.len();
        for c in 0..n {
            lp.add_var(format!("y{c}"), Some(Rat::zero()), Some(Rat::one()));
        }
        let mut obj = vec![Rat::zero(); n];
        let mut constant = Rat::zero();
        for (kept_idx, set) in self.outer.iter().enumerate() {
            if !self.full[kept_idx] {
                for &c in set {
                    obj[c] += &self.f.eval(&(&lambda2 * &self.disc_value(c, kept_idx)));
                }
            } else {
                let top = self
                    .f
                    .eval(&(&lambda2 * &self.grid_value(self.level[kept_idx])));
                for &c in &self.inner[kept_idx] {
                    obj[c] += &self.f.eval(&(&lambda2 * &self.disc_value(c, kept_idx)));
                    obj[c] -= &top;
                }
                constant += &top;
            }
        }
        lp.set_objective(
            obj.into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        );

        for &id in &self.core {
            lp.add_constraint(
                self.core_set(id).iter().map(|&c| (c, Rat::one())).collect(),
                Relation::Eq,
                Rat::one(),
            );
        }
        for (kept_idx, set) in self.outer.iter().enumerate() {
            if self.full[kept_idx] {
                if !self.inner[kept_idx].is_empty() {
                    lp.add_constraint(
                        self.inner[kept_idx].iter().map(|&c| (c, Rat::one())).collect(),
                        Relation::Le,
                        Rat::one(),
                    );
                }
            } else if !set.is_empty() {
                lp.add_constraint(
                    set.iter().map(|&c| (c, Rat::one())).collect(),
                    Relation::Le,
                    Rat::one(),
                );
            }
        }
        match &self.inst.variant {
            Variant::Robust { k, .. } => {
                lp.add_constraint(
                    (0..n).map(|c| (c, Rat::one())).collect(),
                    Relation::Le,
                    Rat::from_int(*k as i64),
                );
            }
            Variant::Knapsack { weights, budget } => {
                lp.add_constraint(
                    (0..n).map(|c| (c, weights[self.copies[c].orig].clone())).collect(),
                    Relation::Le,
                    budget.clone(),
                );
            }
            Variant::Matroid { spec } => {
                if let MatroidSpec::Partition { parts, capacities } = spec {
                    for (part, &cap) in parts.iter().zip(capacities) {
                        let coeffs: Vec<(usize, Rat)> = (0..n)
                            .filter(|&c| part.contains(&self.copies[c].orig))
                            .map(|c| (c, Rat::one()))
                            .collect();
                        if !coeffs.is_empty() {
                            lp.add_constraint(coeffs, Relation::Le, Rat::from_int(cap as i64));
                        }
                    }
                }
                // explicit matroids go through lazy generation
            }
            Variant::FaultTolerant { .. } => unreachable!(),
        }
        // coverage: promoted clients count for one, pending ones for their
        // outer volume
        let full_count = self.full.iter().filter(|&&b| b).count() as i64;
        let mut cover = vec![Rat::zero(); n];
        for (kept_idx, set) in self.outer.iter().enumerate() {
            if !self.full[kept_idx] {
                for &c in set {
                    cover[c] += &Rat::one();
                }
            }
        }
        lp.add_constraint(
            cover
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            Relation::Ge,
            &Rat::from_int(self.sparse.m_prime as i64) - &Rat::from_int(full_count),
        );
        (lp, constant)
    }

    fn solve_aux(&self) -> Result<(crate::lp::BasicSolution, Rat), PipelineError> {
        let (mut lp, constant) = self.build_aux_lp();
        let sol = if let Variant::Matroid {
            spec: spec @ MatroidSpec::Explicit { .. },
        } = &self.inst.variant
        {
            let nf = self.inst.n_facilities();
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); nf];
            for (c, copy) in self.copies.iter().enumerate() {
                groups[copy.orig].push(c);
            }
            let max_rounds = default_max_rounds(&lp) + (1 << nf);
            let mut oracle = |_lp: &LinearProgram, sol: &crate::lp::BasicSolution| {
                matroid_separation(spec, nf, &groups, &sol.values)
            };
            solve_with_generation(&mut lp, &mut oracle, max_rounds)?
        } else {
            solve_basic(&lp)?
        };
        Ok((sol, constant))
    }
}

pub fn disc_level(params: &ReductionParams, d: &Rat) -> i64 {
    if d.is_zero() {
        return -1;
    }
    assert!(
        d >= &Rat::one(),
        "discretization needs unit separation: distance {d} in (0,1)"
    );
    let mut level = 0i64;
    let mut value = Rat::one();
    while &value < d {
        value = &value * &params.tau;
        level += 1;
    }
    level
}

pub fn grid_value(tau: &Rat, level: i64) -> Rat {
    if level < 0 {
        Rat::zero()
    } else {
        tau.pow(level)
    }
}

pub struct RoundingOutcome {
    /// final almost-integral opening per copy
    pub y: Vec<Rat>,
    /// relaxation objective after each solve (with constants)
    pub objectives: Vec<Rat>,
    pub fractional: Vec<usize>,
}

/// Runs the loop to its almost-integral end. `embed_bound`, when given, is
/// an upper bound the first solve must respect (the strengthened LP's
/// objective re-priced onto the grid).
pub fn iterative_round(
    state: &mut RoundingState,
    embed_bound: Option<&Rat>,
) -> Result<RoundingOutcome, PipelineError> {
    let mut objectives: Vec<Rat> = Vec::new();
    let max_iters =
        2 * state.sparse.kept.len() + state.level.iter().map(|&l| (l + 2) as usize).sum::<usize>() + 4;
    for _ in 0..=max_iters {
        let sol = state.solve_aux()?;
        let (_, constant) = state.build_aux_lp();
        let objective = &sol.objective_value + &constant;
        if let Some(prev) = objectives.last() {
            assert!(
                &objective <= prev,
                "relaxation objective increased across iterations"
            );
        } else if let Some(bound) = embed_bound {
            assert!(
                &objective <= bound,
                "first relaxation objective exceeds the re-priced strengthened LP"
            );
        }
        objectives.push(objective);
        let y = &sol.values;

        let promote = (0..state.sparse.kept.len())
            .find(|&j| !state.full[j] && state.volume(&state.outer[j], y) == Rat::one());
        if let Some(j) = promote {
            state.full[j] = true;
            state.inner[j] = state.shrink_inner(j);
            state.update_core(j);
            state.assert_invariants();
            continue;
        }
        let shrink = (0..state.sparse.kept.len())
            .find(|&j| state.full[j] && state.volume(&state.inner[j], y) == Rat::one());
        if let Some(j) = shrink {
            state.level[j] -= 1;
            assert!(state.level[j] >= -1, "radius level fell below -1");
            state.outer[j] = state.inner[j].clone();
            state.inner[j] = state.shrink_inner(j);
            state.update_core(j);
            state.assert_invariants();
            continue;
        }
        let fractional = sol.fractional_vars();
        assert!(
            fractional.len() <= 2,
            "vertex solution carries {} fractional openings",
            fractional.len()
        );
        return Ok(RoundingOutcome {
            y: sol.values,
            objectives,
            fractional,
        });
    }
    unreachable!("iterative rounding failed to terminate");
}

/// Resolves the last one or two fractional openings.
pub fn fix_fractional(
    state: &RoundingState,
    outcome: &RoundingOutcome,
) -> Result<Vec<Rat>, PipelineError> {
    let mut y = outcome.y.clone();
    let frac = &outcome.fractional;
    match state.params.kind {
        PipelineKind::Matroid => {
            if !frac.is_empty() {
                return Err(PipelineError::NonIntegralMatroidExit);
            }
            Ok(y)
        }
        PipelineKind::Robust => match frac.len() {
            0 => Ok(y),
            1 => {
                // a lone fraction pairs with a phantom closed copy: open it
                y[frac[0]] = Rat::one();
                Ok(y)
            }
            _ => {
                let (i1, i2) = (frac[0], frac[1]);
                if &y[i1] + &y[i2] != Rat::one() {
                    return Err(PipelineError::FractionalPairMismatch);
                }
                let exclusive = |a: usize, b: usize| {
                    (0..state.sparse.kept.len())
                        .filter(|&j| {
                            !state.full[j]
                                && state.outer[j].contains(&a)
                                && !state.outer[j].contains(&b)
                        })
                        .count()
                };
                let (open, close) = if exclusive(i1, i2) >= exclusive(i2, i1) {
                    (i1, i2)
                } else {
                    (i2, i1)
                };
                y[open] = Rat::one();
                y[close] = Rat::zero();
                Ok(y)
            }
        },
        PipelineKind::Knapsack => match frac.len() {
            0 => Ok(y),
            1 => {
                y[frac[0]] = Rat::zero();
                Ok(y)
            }
            _ => {
                let Variant::Knapsack { weights, .. } = &state.inst.variant else {
                    unreachable!()
                };
                let (a, b) = (frac[0], frac[1]);
                let wa = &weights[state.copies[a].orig];
                let wb = &weights[state.copies[b].orig];
                let (open, close) = if wa <= wb { (a, b) } else { (b, a) };
                y[open] = Rat::one();
                y[close] = Rat::zero();
                Ok(y)
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn discretization_grid() {
        let params = ReductionParams::preset(PipelineKind::Robust); // tau = 46/25
        assert_eq!(disc_level(&params, &rat!(0)), -1);
        assert_eq!(disc_level(&params, &rat!(1)), 0);
        assert_eq!(disc_level(&params, &rat!(2)), 2); // 46/25 < 2 <= (46/25)^2
        assert_eq!(grid_value(&params.tau, -1), rat!(0));
        assert_eq!(grid_value(&params.tau, 2), rat!(2116, 625));
    }

    #[test]
    #[should_panic(expected = "unit separation")]
    fn sub_unit_distances_rejected() {
        let params = ReductionParams::preset(PipelineKind::Robust);
        disc_level(&params, &rat!(1, 2));
    }
}
