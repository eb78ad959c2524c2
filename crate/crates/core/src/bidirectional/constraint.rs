use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::linalg::{add_outer, quad_form, CMatrix, CVector};

/// Largest per-step gain applied by the constraint.
pub const DEFAULT_MAX_SCALE: f64 = 10.0;

/// Scales `w` by `1/√p`, capped at `max_scale`. A non-positive `p` takes
/// the cap.
pub fn enforce_power_constraint(w: &CVector, running_power: f64, max_scale: f64) -> Result<CVector> {
    if running_power.is_nan() {
        return Err(Error::Degenerate("output power estimate is NaN".into()));
    }
    Ok(w * Complex64::new(constraint_scale(running_power, max_scale), 0.0))
}

fn constraint_scale(p: f64, max_scale: f64) -> f64 {
    if p > 0.0 {
        (1.0 / p.sqrt()).min(max_scale)
    } else {
        max_scale
    }
}

/// Stochastic unit-output-power constraint.
///
/// The smoothed output power `Σ λ^{i−l}(1−λ)|wᴴr[l]|²` is evaluated for the
/// filter as it stands after adaptation, which is `wᴴR̂w` with
/// `R̂ ← λR̂ + (1−λ)r rᴴ`. Dividing by its square root leaves `wᴴR̂w = 1`
/// exactly. A scalar estimate carried across rescalings either rings (left
/// stale) or lets the filter drift toward zero (rescaled with the filter).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerConstraint {
    /// `wᴴR̂w` before the latest rescaling.
    pub estimate: Option<f64>,
    pub covariance: Option<CMatrix>,
    pub lambda: f64,
    pub max_scale: f64,
}

impl PowerConstraint {
    pub fn new(lambda: f64, max_scale: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::invalid("constraint smoothing must lie in [0, 1)"));
        }
        if !(max_scale >= 1.0) {
            return Err(Error::invalid("maximum constraint scale must be at least 1"));
        }
        Ok(Self {
            estimate: None,
            covariance: None,
            lambda,
            max_scale,
        })
    }

    /// Folds `r` into `R̂`, rescales `w` in place and returns the factor.
    pub fn apply(&mut self, w: &mut CVector, r: &CVector) -> Result<f64> {
        check_len(w.len(), r.len())?;
        let cov = match self.covariance.take() {
            None => r * r.adjoint(),
            Some(mut c) => {
                c *= Complex64::new(self.lambda, 0.0);
                add_outer(&mut c, Complex64::new(1.0 - self.lambda, 0.0), r, r);
                c
            }
        };
        let est = quad_form(&cov, w);
        self.covariance = Some(cov);
        if !est.is_finite() {
            return Err(Error::Degenerate(format!("output power estimate {est}")));
        }
        self.estimate = Some(est);
        let scale = constraint_scale(est, self.max_scale);
        *w *= Complex64::new(scale, 0.0);
        Ok(scale)
    }
}
