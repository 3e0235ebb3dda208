//! Exact convex decomposition of a feasible point into vertices of an
//! integral polytope, and marginal-preserving sampling from the result.
//!
//! The decomposition walks the face structure: take the minimal face
//! containing the current point, move to one of its vertices, then push the
//!残 remainder as far as the polytope allows. Each step tightens at least one
//! new constraint, so the face dimension strictly decreases and the loop
//! terminates with exact arithmetic.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use super::{solve_basic, LinearProgram, LpError, LpResult, Relation};
use crate::rat::Rat;

/// Convex combination of integral vertices: weights sum to exactly one and
/// the weighted vertex sum reproduces the decomposed point exactly.
#[derive(Debug, Clone)]
pub struct VertexDecomposition {
    pub terms: Vec<(Rat, Vec<Rat>)>,
}

impl VertexDecomposition {
    pub fn expectation(&self) -> Vec<Rat> {
        let n = self.terms[0].1.len();
        let mut acc = vec![Rat::zero(); n];
        for (w, v) in &self.terms {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += &(w * x);
            }
        }
        acc
    }
}

/// Decomposes `point` over the feasibility system of `polytope` (its
/// objective is ignored). Errors if the point is infeasible or if any
/// produced vertex is non-integral, which signals a non-integral polytope.
pub fn decompose_to_vertices(
    polytope: &LinearProgram,
    point: &[Rat],
) -> LpResult<VertexDecomposition> {
    polytope.validate()?;
    if !polytope.is_feasible(point) {
        return Err(LpError::PointInfeasible);
    }

    let n = polytope.vars.len();
    let mut terms: Vec<(Rat, Vec<Rat>)> = Vec::new();
    let mut remaining = Rat::one();
    let mut y = point.to_vec();
    let max_steps = polytope.constraints.len() + 2 * n + 2;

    for _ in 0..=max_steps {
        let z = face_vertex(polytope, &y)?;
        if z == y {
            check_integral(&z)?;
            terms.push((remaining, z));
            let dec = VertexDecomposition { terms };
            debug_assert_eq!(dec.expectation(), point.to_vec());
            debug_assert_eq!(
                dec.terms.iter().map(|(w, _)| w.clone()).sum::<Rat>(),
                Rat::one()
            );
            return Ok(dec);
        }
        let dir: Vec<Rat> = y.iter().zip(&z).map(|(a, b)| a - b).collect();
        let t = max_step(polytope, &y, &dir)?;
        assert!(t.is_positive(), "degenerate decomposition step");
        // y = mu * z + (1 - mu) * y2  with  y2 = y + t * dir
        let mu = &t / &(&Rat::one() + &t);
        check_integral(&z)?;
        terms.push((&remaining * &mu, z));
        remaining = &remaining * &(&Rat::one() - &mu);
        for (yi, di) in y.iter_mut().zip(&dir) {
            *yi += &(&t * di);
        }
        debug_assert!(polytope.is_feasible(&y));
    }
    unreachable!("decomposition failed to terminate");
}

fn check_integral(v: &[Rat]) -> LpResult<()> {
    if v.iter().all(Rat::is_integer) {
        Ok(())
    } else {
        Err(LpError::NonIntegralVertex)
    }
}

/// A vertex of the minimal face of the polytope containing `y`: constraints
/// and bounds tight at `y` become equalities, then any basic optimum of a
/// fixed deterministic objective is such a vertex.
fn face_vertex(polytope: &LinearProgram, y: &[Rat]) -> LpResult<Vec<Rat>> {
    let mut face = polytope.clone();
    face.sense = super::Sense::Min;
    face.objective = (0..face.vars.len())
        .map(|v| (v, Rat::from_int(v as i64 + 1)))
        .collect();
    for c in face.constraints.iter_mut() {
        if c.eval(y) == c.rhs {
            c.rel = Relation::Eq;
        }
    }
    for (v, def) in face.vars.iter_mut().enumerate() {
        if def.lo.as_ref() == Some(&y[v]) || def.hi.as_ref() == Some(&y[v]) {
            def.lo = Some(y[v].clone());
            def.hi = Some(y[v].clone());
        }
    }
    Ok(solve_basic(&face)?.values)
}

/// Largest `t >= 0` with `y + t*dir` feasible.
fn max_step(polytope: &LinearProgram, y: &[Rat], dir: &[Rat]) -> LpResult<Rat> {
    let mut best: Option<Rat> = None;
    let mut consider = |bound: Rat| {
        if best.as_ref().is_none_or(|b| &bound < b) {
            best = Some(bound);
        }
    };
    for c in &polytope.constraints {
        let slope: Rat = c.coeffs.iter().map(|(v, a)| a * &dir[*v]).sum();
        match c.rel {
            Relation::Le if slope.is_positive() => {
                consider(&(&c.rhs - &c.eval(y)) / &slope);
            }
            Relation::Ge if slope.is_negative() => {
                consider(&(&c.rhs - &c.eval(y)) / &slope);
            }
            Relation::Eq => {
                debug_assert!(slope.is_zero(), "direction leaves an equality");
            }
            _ => {}
        }
    }
    for (v, def) in polytope.vars.iter().enumerate() {
        if dir[v].is_positive() {
            if let Some(hi) = &def.hi {
                consider(&(hi - &y[v]) / &dir[v]);
            }
        } else if dir[v].is_negative() {
            if let Some(lo) = &def.lo {
                consider(&(lo - &y[v]) / &dir[v]);
            }
        }
    }
    best.ok_or_else(|| LpError::Malformed("polytope unbounded along decomposition ray".into()))
}

/// Draws one vertex with probability exactly equal to its weight: an
/// unbiased uniform integer below the weights' common denominator selects
/// the cumulative bucket.
pub fn sample_vertex(dec: &VertexDecomposition, rng: &mut dyn RngCore) -> Vec<Rat> {
    if dec.terms.len() == 1 {
        return dec.terms[0].1.clone();
    }
    let denom = dec
        .terms
        .iter()
        .fold(BigUint::one(), |acc, (w, _)| {
            acc.lcm(&w.denom_big().to_biguint().expect("positive denominator"))
        });
    let draw = uniform_below(&denom, rng);
    let mut cumulative = BigUint::zero();
    for (w, v) in &dec.terms {
        // w * denom is integral by construction
        let num = w.numer_big().to_biguint().expect("nonnegative weight");
        let scaled = num * (&denom / w.denom_big().to_biguint().unwrap());
        cumulative += scaled;
        if draw < cumulative {
            return v.clone();
        }
    }
    dec.terms.last().expect("nonempty decomposition").1.clone()
}

fn uniform_below(bound: &BigUint, rng: &mut dyn RngCore) -> BigUint {
    debug_assert!(!bound.is_zero());
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let top_mask: u8 = if bits % 8 == 0 { 0xff } else { (1u8 << (bits % 8)) - 1 };
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        if let Some(last) = buf.last_mut() {
            *last &= top_mask;
        }
        let candidate = BigUint::from_bytes_le(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}
