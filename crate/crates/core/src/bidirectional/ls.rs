use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::linalg::{add_outer, CMatrix, CVector};
use crate::signal::ReceivedWindow;

/// Exponentially weighted autocorrelation matrices and cross-correlation
/// vectors for the three instant pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub r: [CMatrix; 3],
    pub t: [CVector; 3],
    pub lambda: f64,
}

impl CorrelationState {
    /// `R_n = δ·I`, `t_n = 0`.
    pub fn new(m: usize, lambda: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid("forgetting factor must lie in [0, 1]"));
        }
        let r0 = CMatrix::identity(m, m) * Complex64::new(delta, 0.0);
        Ok(Self {
            r: [r0.clone(), r0.clone(), r0],
            t: [CVector::zeros(m), CVector::zeros(m), CVector::zeros(m)],
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.t[0].len()
    }

    /// ```text
    /// R1 = λR1 + b[i−1]b*[i−1]·r[i]rᴴ[i]
    /// R2 = λR2 + b[i−2]b*[i−2]·r[i]rᴴ[i]
    /// R3 = λR3 + b[i−2]b*[i−2]·r[i−1]rᴴ[i−1]
    /// t1 = λt1 + b[i−1]b*[i]  ·r[i]  ·(rᴴ[i−1]w)
    /// t2 = λt2 + b[i−2]b*[i]  ·r[i]  ·(rᴴ[i−2]w)
    /// t3 = λt3 + b[i−2]b*[i−1]·r[i−1]·(rᴴ[i−2]w)
    /// ```
    pub fn update(&mut self, window: &ReceivedWindow, w_prev: &CVector) -> Result<()> {
        window.check()?;
        check_len(self.dim(), window.dim())?;
        check_len(self.dim(), w_prev.len())?;
        let (b0, b1, b2) = (
            window.b_now.value(),
            window.b_prev1.value(),
            window.b_prev2.value(),
        );
        let lam = Complex64::new(self.lambda, 0.0);

        for r in self.r.iter_mut() {
            *r *= lam;
        }
        add_outer(&mut self.r[0], Complex64::new(b1 * b1, 0.0), &window.r_now, &window.r_now);
        add_outer(&mut self.r[1], Complex64::new(b2 * b2, 0.0), &window.r_now, &window.r_now);
        add_outer(&mut self.r[2], Complex64::new(b2 * b2, 0.0), &window.r_prev1, &window.r_prev1);

        let p1 = window.r_prev1.dotc(w_prev);
        let p2 = window.r_prev2.dotc(w_prev);
        self.t[0] = &self.t[0] * lam + &window.r_now * (p1 * (b1 * b0));
        self.t[1] = &self.t[1] * lam + &window.r_now * (p2 * (b2 * b0));
        self.t[2] = &self.t[2] * lam + &window.r_prev1 * (p2 * (b2 * b1));
        Ok(())
    }

    /// `(Σρ_n R_n, Σρ_n t_n)`.
    pub fn combine(&self, rho: [f64; 3]) -> Result<(CMatrix, CVector)> {
        if rho.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::invalid("weights must be non-negative"));
        }
        if rho.iter().all(|&x| x == 0.0) {
            return Err(Error::invalid("at least one weight must be non-zero"));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let r = &self.r[0] * c(rho[0]) + &self.r[1] * c(rho[1]) + &self.r[2] * c(rho[2]);
        let t = &self.t[0] * c(rho[0]) + &self.t[1] * c(rho[1]) + &self.t[2] * c(rho[2]);
        Ok((r, t))
    }
}

pub fn ls_correlation_update(
    state: &mut CorrelationState,
    window: &ReceivedWindow,
    w_prev: &CVector,
) -> Result<()> {
    state.update(window, w_prev)
}

pub fn combine_correlations(state: &CorrelationState, rho: [f64; 3]) -> Result<(CMatrix, CVector)> {
    state.combine(rho)
}
