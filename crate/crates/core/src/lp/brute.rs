//! Brute-force LP reference: enumerates every vertex of a small bounded
//! polytope by solving all n-subsets of tight hyperplanes. This path is an
//! independent test oracle for the simplex and is never used by the solver
//! pipelines.

use super::{LinearProgram, Sense};
use crate::rat::Rat;

/// Gaussian elimination; `None` when the system is singular.
pub fn solve_square_system(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c2 in 0..n {
                    let delta = &f * &a[col][c2];
                    a[r][c2] = &a[r][c2] - &delta;
                }
                b[r] = &b[r] - &(&f * &b[col]);
            }
        }
    }
    Some(b)
}

/// Rank of a rational matrix.
pub fn rank(mut rows: Vec<Vec<Rat>>) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut rank = 0usize;
    for col in 0..cols {
        if let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) {
            rows.swap(rank, pivot);
            let inv = rows[rank][col].recip();
            for x in rows[rank].iter_mut() {
                *x = &*x * &inv;
            }
            for r in 0..rows.len() {
                if r != rank && !rows[r][col].is_zero() {
                    let f = rows[r][col].clone();
                    for c2 in 0..cols {
                        let delta = &f * &rows[rank][c2];
                        rows[r][c2] = &rows[r][c2] - &delta;
                    }
                }
            }
            rank += 1;
            if rank == rows.len() {
                break;
            }
        }
    }
    rank
}

/// All candidate hyperplanes of the polytope: constraints read as equalities
/// plus both bounds of every variable.
fn hyperplanes(lp: &LinearProgram) -> Vec<(Vec<Rat>, Rat)> {
    let n = lp.vars.len();
    let mut out = Vec::new();
    for c in &lp.constraints {
        let mut row = vec![Rat::zero(); n];
        for (v, a) in &c.coeffs {
            row[*v] += a;
        }
        out.push((row, c.rhs.clone()));
    }
    for (v, def) in lp.vars.iter().enumerate() {
        for bound in [&def.lo, &def.hi].into_iter().flatten() {
            let mut row = vec![Rat::zero(); n];
            row[v] = Rat::one();
            out.push((row, bound.clone()));
        }
    }
    out
}

/// Every vertex of the feasible region, found by exhausting n-subsets of
/// hyperplanes. Intended for tiny instances only.
pub fn enumerate_vertices(lp: &LinearProgram) -> Vec<Vec<Rat>> {
    let n = lp.vars.len();
    let planes = hyperplanes(lp);
    let mut vertices: Vec<Vec<Rat>> = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    if planes.len() < n {
        return vertices;
    }
    loop {
        let a: Vec<Vec<Rat>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<Rat> = subset.iter().map(|&i| planes[i].1.clone()).collect();
        if let Some(x) = solve_square_system(a, b) {
            if lp.is_feasible(&x) && !vertices.contains(&x) {
                vertices.push(x);
            }
        }
        // next n-combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return vertices;
            }
            i -= 1;
            if subset[i] != i + planes.len() - n {
                break;
            }
        }
        if subset[i] == i + planes.len() - n {
            return vertices;
        }
        subset[i] += 1;
        for j in i + 1..n {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Optimum by vertex enumeration; `None` when no vertex is feasible
/// (infeasible, for bounded polytopes).
pub fn brute_optimum(lp: &LinearProgram) -> Option<(Rat, Vec<Rat>)> {
    let vertices = enumerate_vertices(lp);
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    for v in vertices {
        let val = lp.objective_value(&v);
        let better = match (&best, lp.sense) {
            (None, _) => true,
            (Some((b, _)), Sense::Min) => val < *b,
            (Some((b, _)), Sense::Max) => val > *b,
        };
        if better {
            best = Some((val, v));
        }
    }
    best
}

/// Full-rank check of the constraints and bounds tight at `values`: holds
/// exactly when the point is a vertex of the feasible region.
pub fn is_vertex(lp: &LinearProgram, values: &[Rat]) -> bool {
    let n = lp.vars.len();
    let mut tight_rows: Vec<Vec<Rat>> = Vec::new();
    for c in &lp.constraints {
        if c.eval(values) == c.rhs {
            let mut row = vec![Rat::zero(); n];
            for (v, a) in &c.coeffs {
                row[*v] += a;
            }
            tight_rows.push(row);
        }
    }
    for (v, def) in lp.vars.iter().enumerate() {
        let at_bound = def.lo.as_ref() == Some(&values[v]) || def.hi.as_ref() == Some(&values[v]);
        if at_bound {
            let mut row = vec![Rat::zero(); n];
            row[v] = Rat::one();
            tight_rows.push(row);
        }
    }
    rank(tight_rows) == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_basic, Relation};
    use crate::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_system_inverse() {
        let a = vec![vec![rat!(2), rat!(1)], vec![rat!(1), rat!(3)]];
        let b = vec![rat!(5), rat!(10)];
        let x = solve_square_system(a, b).unwrap();
        assert_eq!(x, vec![rat!(1), rat!(3)]);
        assert!(solve_square_system(
            vec![vec![rat!(1), rat!(2)], vec![rat!(2), rat!(4)]],
            vec![rat!(1), rat!(2)]
        )
        .is_none());
    }

    #[test]
    fn unit_square_has_four_vertices() {
        let mut lp = LinearProgram::minimize();
        lp.add_var("x", Some(Rat::zero()), Some(Rat::one()));
        lp.add_var("y", Some(Rat::zero()), Some(Rat::one()));
        let vs = enumerate_vertices(&lp);
        assert_eq!(vs.len(), 4);
    }

    fn random_bounded_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(0..=6);
        let mut lp = if rng.gen_bool(0.5) {
            LinearProgram::minimize()
        } else {
            LinearProgram::maximize()
        };
        for v in 0..n {
            let lo = rng.gen_range(-3i64..=0);
            let hi = rng.gen_range(0i64..=3);
            lp.add_var(format!("x{v}"), Some(rat!(lo)), Some(rat!(hi)));
        }
        for _ in 0..m {
            let coeffs: Vec<(usize, Rat)> = (0..n)
                .filter_map(|v| {
                    let c = rng.gen_range(-3i64..=3);
                    (c != 0).then(|| (v, rat!(c)))
                })
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            let rel = match rng.gen_range(0..3) {
                0 => Relation::Le,
                1 => Relation::Ge,
                _ => Relation::Eq,
            };
            lp.add_constraint(coeffs, rel, rat!(rng.gen_range(-4i64..=4)));
        }
        lp.set_objective(
            (0..n)
                .map(|v| (v, rat!(rng.gen_range(-5i64..=5))))
                .collect(),
        );
        lp
    }

    #[test]
    fn simplex_matches_vertex_enumeration_on_random_lps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut solved = 0;
        for _ in 0..200 {
            let lp = random_bounded_lp(&mut rng);
            let brute = brute_optimum(&lp);
            match solve_basic(&lp) {
                Ok(sol) => {
                    let (bval, _) = brute.expect("simplex found a solution but brute force none");
                    assert_eq!(sol.objective_value, bval, "objective mismatch\n{lp}");
                    assert!(is_vertex(&lp, &sol.values), "not a vertex\n{lp}");
                    solved += 1;
                }
                Err(super::super::LpError::Infeasible) => {
                    assert!(brute.is_none(), "brute force found a vertex\n{lp}");
                }
                Err(e) => panic!("unexpected error {e:?}\n{lp}"),
            }
        }
        assert!(solved > 50, "too few feasible random LPs: {solved}");
    }
}
