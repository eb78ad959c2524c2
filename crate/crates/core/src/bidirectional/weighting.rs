use std::collections::VecDeque;

use super::errors::ErrorTriple;
use crate::error::{check_len, Error, Result};
use crate::linalg::CVector;
use crate::signal::ReceivedWindow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightingMode {
    /// `ρ = (1, 1, 1)`.
    Off,
    /// Constant weights, e.g. `(1, 0, 0)` for the two-instant scheme.
    Fixed([f64; 3]),
    /// Binary gating on large power differentials.
    Switching,
    /// Convex weights driven by the relative error magnitudes.
    Mixing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightingParams {
    pub nu: f64,
    pub lambda_p: f64,
    pub window_m: usize,
    pub lambda_e: f64,
}

impl Default for WeightingParams {
    fn default() -> Self {
        Self {
            nu: 2.0,
            lambda_p: 0.9,
            window_m: 32,
            lambda_e: 0.95,
        }
    }
}

impl WeightingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 1.0) {
            return Err(Error::invalid("threshold factor nu must exceed 1"));
        }
        if !(0.0..1.0).contains(&self.lambda_p) {
            return Err(Error::invalid("lambda_p must lie in [0, 1)"));
        }
        if self.window_m < 2 {
            return Err(Error::invalid("RMS window must hold at least 2 samples"));
        }
        if !(0.0..=1.0).contains(&self.lambda_e) {
            return Err(Error::invalid("lambda_e must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightingState {
    pub mode: WeightingMode,
    pub rho: [f64; 3],
    pub params: WeightingParams,
    pub power_history: VecDeque<[f64; 3]>,
    /// Smoothed windowed RMS `S_n`; `None` until two samples exist.
    pub smoothed_rms: Option<[f64; 3]>,
}

impl WeightingState {
    pub fn new(mode: WeightingMode, params: WeightingParams) -> Result<Self> {
        params.validate()?;
        let rho = match mode {
            WeightingMode::Off | WeightingMode::Switching => [1.0; 3],
            WeightingMode::Fixed(rho) => {
                if rho.iter().any(|&x| !(x >= 0.0)) || rho.iter().all(|&x| x == 0.0) {
                    return Err(Error::invalid("fixed weights must be non-negative and not all zero"));
                }
                rho
            }
            WeightingMode::Mixing => [1.0 / 3.0; 3],
        };
        Ok(Self {
            mode,
            rho,
            params,
            power_history: VecDeque::with_capacity(params.window_m),
            smoothed_rms: None,
        })
    }

    pub fn needs_power_differentials(&self) -> bool {
        self.mode == WeightingMode::Switching
    }

    /// Advances the weights by one symbol. `powers` is only read in
    /// switching mode, `errors` only in mixing mode.
    pub fn step(&mut self, powers: Option<[f64; 3]>, errors: &ErrorTriple) -> Result<()> {
        match self.mode {
            WeightingMode::Off | WeightingMode::Fixed(_) => Ok(()),
            WeightingMode::Switching => {
                let p = powers.ok_or_else(|| Error::invalid("switching needs power differentials"))?;
                switching_update(self, p);
                Ok(())
            }
            WeightingMode::Mixing => {
                mixing_update(self, errors);
                Ok(())
            }
        }
    }
}

/// Signed post-filter power differences across the window:
///
/// ```text
/// P1 = |wᴴr[i]|²   − |wᴴr[i−1]|²
/// P2 = |wᴴr[i]|²   − |wᴴr[i−2]|²
/// P3 = |wᴴr[i−1]|² − |wᴴr[i−2]|²
/// ```
pub fn power_differentials(w: &CVector, window: &ReceivedWindow) -> Result<[f64; 3]> {
    window.check()?;
    check_len(w.len(), window.dim())?;
    let p0 = w.dotc(&window.r_now).norm_sqr();
    let p1 = w.dotc(&window.r_prev1).norm_sqr();
    let p2 = w.dotc(&window.r_prev2).norm_sqr();
    Ok([p0 - p1, p0 - p2, p1 - p2])
}

/// Pushes `p` into the window, refreshes the smoothed RMS and gates each
/// branch: `ρ_n = 0` when `|P_n| > ν·S_n`, otherwise `1`.
pub fn switching_update(state: &mut WeightingState, p: [f64; 3]) {
    let params = state.params;
    if state.power_history.len() == params.window_m {
        state.power_history.pop_front();
    }
    state.power_history.push_back(p);
    let count = state.power_history.len();
    if count < 2 {
        state.rho = [1.0; 3];
        return;
    }
    let mut rms = [0.0; 3];
    for (n, v) in rms.iter_mut().enumerate() {
        let sum_sq: f64 = state.power_history.iter().map(|h| h[n] * h[n]).sum();
        *v = (sum_sq / (count - 1) as f64).sqrt();
    }
    let smoothed = match state.smoothed_rms {
        None => rms,
        Some(prev) => {
            let mut s = [0.0; 3];
            for n in 0..3 {
                s[n] = params.lambda_p * prev[n] + (1.0 - params.lambda_p) * rms[n];
            }
            s
        }
    };
    state.smoothed_rms = Some(smoothed);
    for n in 0..3 {
        let threshold = params.nu * smoothed[n];
        state.rho[n] = if p[n].abs() > threshold { 0.0 } else { 1.0 };
    }
}

/// ```text
/// ρ_n ← λ_e·ρ_n + (1−λ_e)·(e_T − |e_n|)/(2·e_T),   e_T = Σ|e_n|
/// ```
/// followed by renormalisation to `Σρ_n = 1`. The innovation terms sum to
/// one, so the result stays convex. No-op when `e_T = 0`.
pub fn mixing_update(state: &mut WeightingState, errors: &ErrorTriple) {
    let mags = errors.magnitudes();
    let total: f64 = mags.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return;
    }
    let lambda_e = state.params.lambda_e;
    let mut rho = [0.0; 3];
    for n in 0..3 {
        let innovation = (total - mags[n]) / (2.0 * total);
        rho[n] = (lambda_e * state.rho[n] + (1.0 - lambda_e) * innovation).max(0.0);
    }
    let sum: f64 = rho.iter().sum();
    for r in rho.iter_mut() {
        *r /= sum;
    }
    state.rho = rho;
}
