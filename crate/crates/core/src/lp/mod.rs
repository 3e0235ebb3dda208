//! Exact-rational linear programming: a two-phase primal simplex with
//! Bland's rule, cutting-plane style lazy constraint generation, and
//! Caratheodory decomposition of points in integral polytopes.

mod decompose;
mod simplex;

pub mod brute;

pub use decompose::{decompose_to_vertices, sample_vertex, VertexDecomposition};
pub use simplex::solve_basic;

use std::fmt;

use crate::rat::Rat;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("constraint generation exceeded {0} rounds")]
    RoundLimit(usize),
    #[error("point is not feasible for the polytope")]
    PointInfeasible,
    #[error("decomposition produced a non-integral vertex (polytope is not integral)")]
    NonIntegralVertex,
}

pub type LpResult<T> = Result<T, LpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rat)>,
    pub rel: Relation,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, Rat)>, rel: Relation, rhs: Rat) -> Self {
        Constraint { coeffs, rel, rhs }
    }

    pub fn eval(&self, values: &[Rat]) -> Rat {
        self.coeffs.iter().map(|(v, c)| c * &values[*v]).sum()
    }

    pub fn satisfied_by(&self, values: &[Rat]) -> bool {
        let lhs = self.eval(values);
        match self.rel {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub vars: Vec<VarDef>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rat)>,
    pub sense: Sense,
}

impl LinearProgram {
    pub fn minimize() -> Self {
        LinearProgram {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Min,
        }
    }

    pub fn maximize() -> Self {
        LinearProgram {
            sense: Sense::Max,
            ..Self::minimize()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: Option<Rat>, hi: Option<Rat>) -> usize {
        self.vars.push(VarDef {
            name: name.into(),
            lo,
            hi,
        });
        self.vars.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rat)>, rel: Relation, rhs: Rat) {
        self.constraints.push(Constraint::new(coeffs, rel, rhs));
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rat)>) {
        self.objective = coeffs;
    }

    pub fn validate(&self) -> LpResult<()> {
        let n = self.vars.len();
        for (idx, c) in self.constraints.iter().enumerate() {
            if c.coeffs.iter().any(|(v, _)| *v >= n) {
                return Err(LpError::Malformed(format!(
                    "constraint {idx} references an undeclared variable"
                )));
            }
        }
        if self.objective.iter().any(|(v, _)| *v >= n) {
            return Err(LpError::Malformed("objective references an undeclared variable".into()));
        }
        for (idx, v) in self.vars.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (&v.lo, &v.hi) {
                if lo > hi {
                    return Err(LpError::Malformed(format!(
                        "variable {idx} has lo > hi"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[Rat]) -> Rat {
        self.objective.iter().map(|(v, c)| c * &values[*v]).sum()
    }

    /// Exact feasibility check of an assignment against every constraint and
    /// variable bound.
    pub fn is_feasible(&self, values: &[Rat]) -> bool {
        if values.len() != self.vars.len() {
            return false;
        }
        for (v, def) in self.vars.iter().enumerate() {
            if let Some(lo) = &def.lo {
                if &values[v] < lo {
                    return false;
                }
            }
            if let Some(hi) = &def.hi {
                if &values[v] > hi {
                    return false;
                }
            }
        }
        self.constraints.iter().all(|c| c.satisfied_by(values))
    }

    /// Indices of constraints tight at `values` (equalities always count).
    pub fn tight_constraints(&self, values: &[Rat]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.eval(values) == c.rhs)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Plain-text dump, one line per constraint.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |v: &usize, c: &Rat| format!("{} {}", c, self.vars[*v].name);
        write!(f, "{} ", if self.sense == Sense::Min { "min" } else { "max" })?;
        writeln!(
            f,
            "{}",
            self.objective
                .iter()
                .map(|(v, c)| term(v, c))
                .collect::<Vec<_>>()
                .join(" + ")
        )?;
        for c in &self.constraints {
            writeln!(
                f,
                "  {} {} {}",
                c.coeffs
                    .iter()
                    .map(|(v, cf)| term(v, cf))
                    .collect::<Vec<_>>()
                    .join(" + "),
                c.rel,
                c.rhs
            )?;
        }
        for v in &self.vars {
            let lo = v.lo.as_ref().map_or("-inf".into(), |r| r.to_string());
            let hi = v.hi.as_ref().map_or("+inf".into(), |r| r.to_string());
            writeln!(f, "  {} in [{lo}, {hi}]", v.name)?;
        }
        Ok(())
    }
}

/// A vertex solution: exact values, objective, and the structural variables
/// that ended up basic.
#[derive(Debug, Clone)]
pub struct BasicSolution {
    pub values: Vec<Rat>,
    pub objective_value: Rat,
    pub basic_vars: Vec<usize>,
}

impl BasicSolution {
    pub fn fractional_vars(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_integer())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Yields a violated, valid constraint for the current candidate point, or
/// `None` when the implicit family is satisfied.
pub trait SeparationOracle {
    fn separate(&mut self, lp: &LinearProgram, candidate: &BasicSolution) -> Option<Constraint>;
}

impl<F> SeparationOracle for F
where
    F: FnMut(&LinearProgram, &BasicSolution) -> Option<Constraint>,
{
    fn separate(&mut self, lp: &LinearProgram, candidate: &BasicSolution) -> Option<Constraint> {
        self(lp, candidate)
    }
}

/// Default generation round limit.
pub fn default_max_rounds(lp: &LinearProgram) -> usize {
    10 * (lp.vars.len() + lp.constraints.len())
}

/// Cutting-plane loop: solve, ask the oracle for a violated constraint, add
/// it, repeat. The returned solution is basic for the accumulated explicit
/// system and violates no constraint the oracle can produce.
pub fn solve_with_generation(
    lp: &mut LinearProgram,
    oracle: &mut dyn SeparationOracle,
    max_rounds: usize,
) -> LpResult<BasicSolution> {
    for _ in 0..max_rounds {
        let sol = solve_basic(lp)?;
        match oracle.separate(lp, &sol) {
            None => return Ok(sol),
            Some(cut) => {
                debug_assert!(
                    !cut.satisfied_by(&sol.values),
                    "oracle returned a non-violated constraint"
                );
                lp.constraints.push(cut);
            }
        }
    }
    Err(LpError::RoundLimit(max_rounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn box_maximum() {
        let mut lp = LinearProgram::maximize();
        let x1 = lp.add_var("x1", Some(Rat::zero()), None);
        let x2 = lp.add_var("x2", Some(Rat::zero()), None);
        lp.add_constraint(vec![(x1, rat!(1))], Relation::Le, rat!(1));
        lp.add_constraint(vec![(x2, rat!(1))], Relation::Le, rat!(1));
        lp.set_objective(vec![(x1, rat!(1)), (x2, rat!(1))]);
        let sol = solve_basic(&lp).unwrap();
        assert_eq!(sol.values, vec![rat!(1), rat!(1)]);
        assert_eq!(sol.objective_value, rat!(2));
    }

    #[test]
    fn bound_tight_minimum() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", None, None);
        lp.add_constraint(vec![(x, rat!(1))], Relation::Ge, rat!(2, 3));
        lp.set_objective(vec![(x, rat!(1))]);
        let sol = solve_basic(&lp).unwrap();
        assert_eq!(sol.values, vec![rat!(2, 3)]);
        assert_eq!(sol.objective_value, rat!(2, 3));
    }

    #[test]
    fn zero_objective_returns_a_vertex_of_the_segment() {
        let mut lp = LinearProgram::minimize();
        let x1 = lp.add_var("x1", Some(Rat::zero()), Some(Rat::one()));
        let x2 = lp.add_var("x2", Some(Rat::zero()), Some(Rat::one()));
        lp.add_constraint(vec![(x1, rat!(1)), (x2, rat!(1))], Relation::Eq, rat!(1));
        let sol = solve_basic(&lp).unwrap();
        let v = (sol.values[0].clone(), sol.values[1].clone());
        assert!(v == (rat!(1), rat!(0)) || v == (rat!(0), rat!(1)), "got {v:?}");
    }

    #[test]
    fn infeasible_and_unbounded_are_distinct() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", Some(Rat::zero()), None);
        lp.add_constraint(vec![(x, rat!(1))], Relation::Le, rat!(-1));
        assert_eq!(solve_basic(&lp).unwrap_err(), LpError::Infeasible);

        let mut lp2 = LinearProgram::minimize();
        let y = lp2.add_var("y", None, Some(rat!(5)));
        lp2.set_objective(vec![(y, rat!(1))]);
        assert_eq!(solve_basic(&lp2).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn generation_vacuous_when_satisfied() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", Some(Rat::zero()), Some(rat!(2)));
        lp.set_objective(vec![(x, rat!(1))]);
        let mut calls = 0usize;
        let mut oracle = |_lp: &LinearProgram, _sol: &BasicSolution| {
            calls += 1;
            None
        };
        let sol = solve_with_generation(&mut lp, &mut oracle, 10).unwrap();
        assert_eq!(sol.values[0], rat!(0));
        assert_eq!(calls, 1);
    }

    #[test]
    fn generation_adds_violated_cut() {
        // min x subject to a lazily generated x >= 3/2
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", Some(Rat::zero()), Some(rat!(10)));
        lp.set_objective(vec![(x, rat!(1))]);
        let mut oracle = |_lp: &LinearProgram, sol: &BasicSolution| {
            if sol.values[0] < rat!(3, 2) {
                Some(Constraint::new(vec![(0, rat!(1))], Relation::Ge, rat!(3, 2)))
            } else {
                None
            }
        };
        let sol = solve_with_generation(&mut lp, &mut oracle, 10).unwrap();
        assert_eq!(sol.values[0], rat!(3, 2));
    }

    #[test]
    fn round_limit_reported() {
        let mut lp = LinearProgram::minimize();
        let x = lp.add_var("x", Some(Rat::zero()), Some(rat!(10)));
        lp.set_objective(vec![(x, rat!(1))]);
        let mut level = Rat::zero();
        let mut oracle = move |_lp: &LinearProgram, _sol: &BasicSolution| {
            level = &level + &rat!(1, 100);
            Some(Constraint::new(vec![(0, rat!(1))], Relation::Ge, level.clone()))
        };
        assert_eq!(
            solve_with_generation(&mut lp, &mut oracle, 3).unwrap_err(),
            LpError::RoundLimit(3)
        );
    }
}
