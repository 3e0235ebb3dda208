//! Pipeline parameters and their preset values.
//!
//! The iterative-rounding pipelines are driven by five rationals: the
//! guessing resolution `eps`, the ball/star parameter `delta`, the sparsity
//! budget `rho`, the metric discretization base `tau` and the objective
//! pre-scale `lambda`. `lambda` must stay below two closed-form expressions
//! in `delta` and `tau` for the final facility swap to stay affordable; the
//! presets pin exact rationals that satisfy them.

use crate::rat::Rat;
use crate::{rat, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineKind {
    Robust,
    Matroid,
    Knapsack,
}

impl PipelineKind {
    pub fn for_variant(variant: &Variant) -> Option<PipelineKind> {
        match variant {
            Variant::Robust { .. } => Some(PipelineKind::Robust),
            Variant::Matroid { .. } => Some(PipelineKind::Matroid),
            Variant::Knapsack { .. } => Some(PipelineKind::Knapsack),
            Variant::FaultTolerant { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReductionParams {
    pub kind: PipelineKind,
    pub eps: Rat,
    pub delta: Rat,
    pub rho: Rat,
    pub tau: Rat,
    pub lambda: Rat,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid parameters: {0}")]
pub struct ParamError(pub String);

impl ReductionParams {
    pub fn preset(kind: PipelineKind) -> Self {
        let (delta, tau) = match kind {
            // tau is a rational stand-in near the optimizer of
            // (tau-1)/(tau(3tau-1)); exactness beats squeezing the constant
            PipelineKind::Robust => (rat!(81765, 100000), rat!(184, 100)),
            PipelineKind::Matroid => (rat!(2, 3), rat!(9, 5)),
            PipelineKind::Knapsack => (rat!(2, 3), rat!(9, 5)),
        };
        let mut p = ReductionParams {
            kind,
            eps: rat!(1, 4),
            delta,
            rho: rat!(1, 4),
            tau,
            lambda: Rat::zero(),
        };
        p.lambda = p.lambda_cap();
        p.validate().expect("preset parameters must validate");
        p
    }

    pub fn sigma(&self) -> Rat {
        let three_tau = &rat!(3) * &self.tau;
        &(&self.tau - &Rat::one()) / &(&self.tau * &(&three_tau - &Rat::one()))
    }

    pub fn gamma(&self) -> Rat {
        let ds = &self.delta * &self.sigma();
        match self.kind {
            PipelineKind::Robust => {
                let denom = &(&rat!(4) + &(&rat!(3) * &self.delta)) + &ds;
                &ds / &denom
            }
            PipelineKind::Knapsack | PipelineKind::Matroid => &ds / &(&rat!(2) + &ds),
        }
    }

    /// Largest admissible `lambda` for the swap argument: the smaller of the
    /// near-cluster and far-cluster requirements.
    pub fn lambda_cap(&self) -> Rat {
        let gamma = self.gamma();
        let sigma = self.sigma();
        let ratio = &(&Rat::one() - &gamma) / &(&Rat::one() + &gamma);
        match self.kind {
            PipelineKind::Robust => {
                let a = &(&rat!(2) / &(&rat!(2) + &self.delta))
                    * &(&gamma / &(&Rat::one() + &gamma));
                let scale = &(&(&Rat::one() - &self.delta)
                    * &(&Rat::one() - &(&self.delta / &rat!(4))))
                    / &(&Rat::one() + &(&rat!(3) * &(&self.delta / &rat!(4))));
                let b = &(&scale * &sigma) * &ratio;
                a.min(b)
            }
            PipelineKind::Knapsack => {
                let a = &gamma / &(&Rat::one() + &gamma);
                let b = &(&(&Rat::one() - &self.delta) * &sigma) * &ratio;
                a.min(b)
            }
            // no fractional swap happens for matroids; only lambda1 <= 1 binds
            PipelineKind::Matroid => sigma,
        }
    }

    pub fn lambda1(&self) -> Rat {
        &self.lambda / &self.sigma()
    }

    pub fn lambda2(&self) -> Rat {
        &self.lambda1() / &self.tau
    }

    /// Star costs are measured through `f(star_scale * d)`; the robust
    /// pipeline shrinks them to absorb the radius slack, the other two do
    /// not.
    pub fn star_scale(&self) -> Rat {
        match self.kind {
            PipelineKind::Robust => &rat!(2) / &(&rat!(2) + &self.delta),
            PipelineKind::Matroid | PipelineKind::Knapsack => Rat::one(),
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |m: &str| Err(ParamError(m.into()));
        if !self.eps.is_positive() {
            return err("eps must be positive");
        }
        if !self.rho.is_positive() {
            return err("rho must be positive");
        }
        if !(self.delta.is_positive() && self.delta < Rat::one()) {
            return err("delta must lie in (0,1)");
        }
        if self.tau <= Rat::one() {
            return err("tau must exceed 1");
        }
        if !self.lambda.is_positive() || self.lambda > self.lambda_cap() {
            return Err(ParamError(format!(
                "lambda {} outside (0, {}]",
                self.lambda,
                self.lambda_cap()
            )));
        }
        let lambda1 = self.lambda1();
        if lambda1 > self.star_scale() {
            return Err(ParamError(format!(
                "lambda1 {} exceeds the star scale {}",
                lambda1,
                self.star_scale()
            )));
        }
        debug_assert!(self.lambda <= self.lambda2() && self.lambda2() <= lambda1);
        Ok(())
    }
}

/// Guessing grid resolutions for the fault-tolerant pipeline.
#[derive(Debug, Clone)]
pub struct FtParams {
    pub eps: Rat,
    pub delta: Rat,
}

impl Default for FtParams {
    fn default() -> Self {
        FtParams {
            eps: rat!(1, 4),
            delta: rat!(1, 4),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robust_preset_matches_hand_computed_constants() {
        let p = ReductionParams::preset(PipelineKind::Robust);
        // sigma close to 0.101, lambda close to 0.008856
        let sigma = p.sigma().to_f64();
        assert!((sigma - 0.101).abs() < 1e-3, "{sigma}");
        let lambda = p.lambda.to_f64();
        assert!((lambda - 0.008856).abs() < 2e-5, "{lambda}");
        assert!(p.lambda1() <= p.star_scale());
    }

    #[test]
    fn knapsack_preset_balances_both_caps() {
        let p = ReductionParams::preset(PipelineKind::Knapsack);
        assert_eq!(p.sigma(), rat!(10, 99));
        // delta = 2/3 makes both expressions equal sigma/(3+2*sigma)
        let expect = &p.sigma() / &(&rat!(3) + &(&rat!(2) * &p.sigma()));
        assert_eq!(p.lambda, expect);
        assert_eq!(p.lambda, rat!(10, 317));
        assert!(p.lambda1() <= Rat::one());
    }

    #[test]
    fn matroid_preset_saturates_lambda1() {
        let p = ReductionParams::preset(PipelineKind::Matroid);
        assert_eq!(p.lambda1(), Rat::one());
        assert_eq!(p.lambda2(), rat!(5, 9));
    }

    #[test]
    fn override_validation_rejects_bad_lambda() {
        let mut p = ReductionParams::preset(PipelineKind::Robust);
        p.lambda = rat!(1, 2);
        assert!(p.validate().is_err());
    }
}
