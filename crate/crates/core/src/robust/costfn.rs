//! The piecewise-linear cost surrogate.
//!
//! Distances are bucketed into geometric intervals anchored at the largest
//! optimal service cost `o1`: with `a = eps*o1/m` and `T` minimal such that
//! `eps*(1+eps)^T > m`, the buckets are `[0, a]`, then `(a*(1+eps)^(T-t),
//! a*(1+eps)^(T-t+1)]` for `t = T..1`, and `(a*(1+eps)^T, inf)`. Each bucket
//! `t` carries a slope `w_t` (non-increasing in `t`), and `f(x) = w_t * x`
//! on bucket `t`. Minimality of `T` keeps `o1` out of the top bucket.
//!
//! A zero `o1` collapses the construction; the degenerate form is a single
//! ray `(0, inf)` with the largest padded weight as slope.

use crate::rat::Rat;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CostFnError {
    #[error("slope sequence must be non-increasing")]
    IncreasingSlopes,
    #[error("expected {expected} slopes, got {got}")]
    WrongSlopeCount { expected: usize, got: usize },
    #[error("slopes must be positive")]
    NonPositiveSlope,
}

#[derive(Debug, Clone)]
pub struct CostFunction {
    /// largest guessed service cost; zero marks the degenerate form
    pub o1: Rat,
    /// interval count parameter; buckets are indexed 0..=t_levels+1
    pub t_levels: usize,
    /// `eps*o1/m`, the upper edge of the innermost bucket
    pub base: Rat,
    pub one_plus_eps: Rat,
    /// slope per bucket, index 0 = outermost ray
    pub slopes: Vec<Rat>,
}

/// Smallest integer `t >= 0` with `eps*(1+eps)^t > m`.
pub fn level_count(eps: &Rat, m: usize) -> usize {
    let m = Rat::from_int(m as i64);
    let mut t = 0usize;
    let mut value = eps.clone();
    let base = &Rat::one() + eps;
    while value <= m {
        value = &value * &base;
        t += 1;
    }
    t
}

impl CostFunction {
    pub fn build(o1: Rat, slopes: Vec<Rat>, eps: &Rat, m: usize) -> Result<Self, CostFnError> {
        assert!(eps.is_positive() && m >= 1);
        if o1.is_zero() {
            if slopes.len() != 1 {
                return Err(CostFnError::WrongSlopeCount {
                    expected: 1,
                    got: slopes.len(),
                });
            }
            if !slopes[0].is_positive() {
                return Err(CostFnError::NonPositiveSlope);
            }
            return Ok(CostFunction {
                o1,
                t_levels: 0,
                base: Rat::zero(),
                one_plus_eps: &Rat::one() + eps,
                slopes,
            });
        }
        let t_levels = level_count(eps, m);
        if slopes.len() != t_levels + 2 {
            return Err(CostFnError::WrongSlopeCount {
                expected: t_levels + 2,
                got: slopes.len(),
            });
        }
        for pair in slopes.windows(2) {
            if pair[0] < pair[1] {
                return Err(CostFnError::IncreasingSlopes);
            }
        }
        if slopes.iter().any(|s| !s.is_positive()) {
            return Err(CostFnError::NonPositiveSlope);
        }
        let base = &(eps * &o1) / &Rat::from_int(m as i64);
        Ok(CostFunction {
            o1,
            t_levels,
            base,
            one_plus_eps: &Rat::one() + eps,
            slopes,
        })
    }

    pub fn degenerate(top_weight: Rat) -> Self {
        CostFunction {
            o1: Rat::zero(),
            t_levels: 0,
            base: Rat::zero(),
            one_plus_eps: Rat::from_int(2),
            slopes: vec![top_weight],
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.o1.is_zero()
    }

    /// Bucket index of `x`: `t_levels+1` innermost, `0` outermost.
    pub fn bucket(&self, x: &Rat) -> usize {
        debug_assert!(!x.is_negative());
        if self.is_degenerate() {
            return 0;
        }
        if x <= &self.base {
            return self.t_levels + 1;
        }
        // upper edge of bucket t is base*(1+eps)^(T-t+1)
        let mut upper = self.base.clone();
        for t in (1..=self.t_levels).rev() {
            upper = &upper * &self.one_plus_eps;
            if x <= &upper {
                return t;
            }
        }
        0
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        debug_assert!(!x.is_negative());
        if x.is_zero() {
            return Rat::zero();
        }
        &self.slopes[self.bucket(x)] * x
    }

    /// `f(scale * x)`
    pub fn eval_scaled(&self, scale: &Rat, x: &Rat) -> Rat {
        self.eval(&(scale * x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn level_count_examples() {
        // eps=1: 1*2^t > m
        assert_eq!(level_count(&rat!(1), 2), 2);
        assert_eq!(level_count(&rat!(1), 4), 3);
        assert_eq!(level_count(&rat!(3), 4), 1);
        assert_eq!(level_count(&rat!(1, 4), 8), 16);
    }

    #[test]
    fn bucket_edges_match_the_geometric_grid() {
        // o1=100, m=2, eps=1: base=50, buckets [0,50], (50,100], (100,200], (200,inf)
        let f = CostFunction::build(
            rat!(100),
            vec![rat!(4), rat!(2), rat!(1), rat!(1)],
            &rat!(1),
            2,
        )
        .unwrap();
        assert_eq!(f.t_levels, 2);
        assert_eq!(f.base, rat!(50));
        assert_eq!(f.bucket(&rat!(50)), 3);
        assert_eq!(f.bucket(&rat!(51)), 2);
        assert_eq!(f.bucket(&rat!(100)), 2);
        assert_eq!(f.bucket(&rat!(101)), 1);
        assert_eq!(f.bucket(&rat!(200)), 1);
        assert_eq!(f.bucket(&rat!(201)), 0);
        // the anchor never lands in the outermost ray
        assert!(f.bucket(&f.o1.clone()) >= 1);
    }

    #[test]
    fn constant_slopes_collapse_to_linear() {
        let f = CostFunction::build(
            rat!(100),
            vec![rat!(3), rat!(3), rat!(3), rat!(3)],
            &rat!(1),
            2,
        )
        .unwrap();
        for x in [rat!(0), rat!(10), rat!(50), rat!(150), rat!(999)] {
            assert_eq!(f.eval(&x), &rat!(3) * &x);
        }
    }

    #[test]
    fn eval_uses_the_buckets_slope() {
        let f = CostFunction::build(
            rat!(100),
            vec![rat!(2), rat!(1), rat!(1, 2), rat!(1, 4)],
            &rat!(1),
            2,
        )
        .unwrap();
        // 75 lies in bucket 2 (50,100], slope 1/2
        assert_eq!(f.eval(&rat!(75)), rat!(75, 2));
        assert_eq!(f.eval(&rat!(0)), rat!(0));
        // 150 in bucket 1, slope 1
        assert_eq!(f.eval(&rat!(150)), rat!(150));
        assert_eq!(f.eval_scaled(&rat!(1, 2), &rat!(150)), rat!(75, 2));
    }

    #[test]
    fn rejects_increasing_or_missized_slopes() {
        assert_eq!(
            CostFunction::build(rat!(10), vec![rat!(1), rat!(2), rat!(2), rat!(2)], &rat!(1), 2)
                .unwrap_err(),
            CostFnError::IncreasingSlopes
        );
        assert!(matches!(
            CostFunction::build(rat!(10), vec![rat!(1)], &rat!(1), 2).unwrap_err(),
            CostFnError::WrongSlopeCount { .. }
        ));
    }

    #[test]
    fn scaling_down_never_costs_more_proportionally() {
        // f(a*z) <= a*f(z) for a in (0,1]: slopes only shrink inward
        let f = CostFunction::build(
            rat!(100),
            vec![rat!(2), rat!(1), rat!(1, 2), rat!(1, 4)],
            &rat!(1),
            2,
        )
        .unwrap();
        let alphas = [rat!(1, 3), rat!(1, 2), rat!(3, 4), rat!(1)];
        let zs = [rat!(30), rat!(75), rat!(120), rat!(333), rat!(49)];
        for a in &alphas {
            for z in &zs {
                assert!(f.eval(&(a * z)) <= &a.clone() * &f.eval(z), "a={a} z={z}");
            }
        }
    }
}
