//! Three-instant ("bidirectional") adaptation.
//!
//! The cost combines the pairwise errors between the current symbol and the
//! two before it:
//!
//! ```text
//! J = ρ1·E|e1|² + ρ2·E|e2|² + ρ3·E|e3|²
//! ```
//!
//! Each error compares two received samples after undoing their DBPSK
//! symbols, so the unknown fading gain cancels as long as the channel is
//! correlated across the three instants. A unit output power constraint
//! rules out the trivial all-zero filter.
//!
//! Two adaptive solvers are provided: a normalised stochastic gradient
//! ([`BidirectionalNlms`]) and a conjugate-gradient solve of the
//! exponentially weighted least-squares normal equations
//! ([`BidirectionalCg`]). Both accept the weighting strategies in
//! [`weighting`].

pub mod cg;
pub mod constraint;
pub mod errors;
pub mod ls;
pub mod nlms;
pub mod weighting;

pub use cg::{cg_solve, CgOutcome};
pub use constraint::{enforce_power_constraint, PowerConstraint, DEFAULT_MAX_SCALE};
pub use errors::{error_terms, ErrorTriple};
pub use ls::{combine_correlations, ls_correlation_update, CorrelationState};
pub use nlms::{nlms_update, nlms_update_with, norm_update, NlmsState, NlmsStep, EPS_DEN};
pub use weighting::{
    mixing_update, power_differentials, switching_update, WeightingMode, WeightingParams,
    WeightingState,
};

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::receivers::Receiver;
use crate::signal::ReceivedWindow;

/// Tuning shared by every adaptive receiver in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveParams {
    /// NLMS step size.
    pub mu: f64,
    /// LS / RLS forgetting factor.
    pub lambda: f64,
    /// Forgetting factor of the NLMS normalisation and the power constraint.
    pub lambda_m: f64,
    pub j_max: usize,
    pub cg_tol: f64,
    /// Start each per-symbol CG solve of the differential and three-instant
    /// receivers from `w[i−1]` instead of zero. Off by default: the unit
    /// power rescaling after every solve re-amplifies whatever the few CG
    /// sweeps leave unresolved, and the carried-over error accumulates.
    pub warm_start: bool,
    /// Initial diagonal loading of the correlation matrices.
    pub delta: f64,
    pub max_scale: f64,
    /// Include the constraint's Lagrange term in the NLMS updates.
    pub lagrange: bool,
    /// Lower bound on `|wᴴ[i−1]r[i−1]|` in the NLMS step, in units of the
    /// unit-power output.
    pub den_floor: f64,
    pub weighting: WeightingParams,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        Self {
            mu: 0.1,
            lambda: 0.99,
            lambda_m: 0.99,
            j_max: 5,
            cg_tol: 1e-12,
            warm_start: false,
            delta: 0.01,
            max_scale: DEFAULT_MAX_SCALE,
            lagrange: true,
            den_floor: 0.5,
            weighting: WeightingParams::default(),
        }
    }
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid("mu must be finite and non-negative"));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("lambda must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.lambda_m) {
            return Err(Error::invalid("lambda_m must lie in [0, 1)"));
        }
        if self.j_max == 0 {
            return Err(Error::invalid("j_max must be positive"));
        }
        if !(self.den_floor >= 0.0) || !self.den_floor.is_finite() {
            return Err(Error::invalid("den_floor must be finite and non-negative"));
        }
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta must be positive"));
        }
        self.weighting.validate()
    }
}

/// Stochastic-gradient three-instant receiver.
#[derive(Debug, Clone)]
pub struct BidirectionalNlms {
    pub nlms: NlmsState,
    pub weighting: WeightingState,
    pub constraint: PowerConstraint,
}

impl BidirectionalNlms {
    pub fn new(w0: CVector, params: &AdaptiveParams, mode: WeightingMode) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            nlms: NlmsState::from_params(w0, params)?,
            weighting: WeightingState::new(mode, params.weighting)?,
            constraint: PowerConstraint::new(params.lambda_m, params.max_scale)?,
        })
    }

    pub fn step(&mut self, window: &ReceivedWindow) -> Result<()> {
        let w_prev = self.nlms.w.clone();
        let errors = error_terms(&w_prev, window)?;
        let powers = if self.weighting.needs_power_differentials() {
            Some(power_differentials(&w_prev, window)?)
        } else {
            None
        };
        self.weighting.step(powers, &errors)?;
        let mut w = self.nlms.step(window, &errors, self.weighting.rho)?;
        self.constraint.apply(&mut w, &window.r_now)?;
        self.nlms.w = w;
        Ok(())
    }
}

impl Receiver for BidirectionalNlms {
    fn weights(&self) -> &CVector {
        &self.nlms.w
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        self.step(window)
    }

    fn rho(&self) -> Option<[f64; 3]> {
        Some(self.weighting.rho)
    }
}

/// Conjugate-gradient three-instant receiver over the LS correlations.
#[derive(Debug, Clone)]
pub struct BidirectionalCg {
    pub w: CVector,
    pub correlations: CorrelationState,
    pub weighting: WeightingState,
    pub constraint: PowerConstraint,
    pub j_max: usize,
    pub tol: f64,
    pub warm_start: bool,
    /// Solves that stopped on a non-positive curvature.
    pub degenerate_solves: u64,
}

impl BidirectionalCg {
    pub fn new(w0: CVector, params: &AdaptiveParams, mode: WeightingMode) -> Result<Self> {
        params.validate()?;
        let m = w0.len();
        Ok(Self {
            w: w0,
            correlations: CorrelationState::new(m, params.lambda, params.delta)?,
            weighting: WeightingState::new(mode, params.weighting)?,
            constraint: PowerConstraint::new(params.lambda_m, params.max_scale)?,
            j_max: params.j_max,
            tol: params.cg_tol,
            warm_start: params.warm_start,
            degenerate_solves: 0,
        })
    }

    pub fn step(&mut self, window: &ReceivedWindow) -> Result<()> {
        self.correlations.update(window, &self.w)?;
        let errors = error_terms(&self.w, window)?;
        let powers = if self.weighting.needs_power_differentials() {
            Some(power_differentials(&self.w, window)?)
        } else {
            None
        };
        self.weighting.step(powers, &errors)?;
        // every branch gated off: hold the filter for this symbol
        let mut w = if self.weighting.rho.iter().all(|&x| x == 0.0) {
            self.w.clone()
        } else {
            let (r, t) = self.correlations.combine(self.weighting.rho)?;
            let start = if self.warm_start { self.w.clone() } else { CVector::zeros(self.w.len()) };
            let out = cg_solve(&r, &t, &start, self.j_max, self.tol)?;
            self.degenerate_solves += out.degenerate as u64;
            out.w
        };
        self.constraint.apply(&mut w, &window.r_now)?;
        self.w = w;
        Ok(())
    }
}

impl Receiver for BidirectionalCg {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        self.step(window)
    }

    fn rho(&self) -> Option<[f64; 3]> {
        Some(self.weighting.rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate_packet;
    use crate::oracle::direct_solve;
    use crate::signal::SystemConfig;

    fn window(p: &crate::harness::Packet, i: usize) -> ReceivedWindow {
        ReceivedWindow {
            r_now: p.received[i].clone(),
            r_prev1: p.received[i - 1].clone(),
            r_prev2: p.received[i - 2].clone(),
            b_now: p.symbols[i],
            b_prev1: p.symbols[i - 1],
            b_prev2: p.symbols[i - 2],
        }
    }

    fn direction_gap(a: &CVector, b: &CVector) -> f64 {
        // distance after removing the complex scale
        let c = b.dotc(a) / b.norm_squared();
        (a - b * c).norm() / a.norm()
    }

    #[test]
    fn static_cg_reaches_the_batch_solution() {
        let mut sys = SystemConfig::new(1, 8, 1, 20.0);
        sys.n_symbols = 300;
        let p = generate_packet(&sys, None, 1e-7, 3, 0).unwrap();
        for warm_start in [false, true] {
            let params = AdaptiveParams {
                lambda: 1.0,
                warm_start,
                ..AdaptiveParams::default()
            };
            let mut rx = BidirectionalCg::new(p.code.clone(), &params, WeightingMode::Off).unwrap();
            for i in 2..300 {
                rx.step(&window(&p, i)).unwrap();
            }
            let (r, t) = rx.correlations.combine([1.0; 3]).unwrap();
            let exact = direct_solve(&r, &t).unwrap();
            assert!(direction_gap(&rx.w, &exact) < 1e-3, "warm_start = {warm_start}");
        }
    }

    #[test]
    fn output_power_is_held_near_one() {
        let mut sys = SystemConfig::new(4, 16, 1, 15.0);
        sys.n_symbols = 400;
        let p = generate_packet(&sys, None, 0.005, 8, 0).unwrap();
        let params = AdaptiveParams::default();
        let mut cg = BidirectionalCg::new(p.code.clone(), &params, WeightingMode::Mixing).unwrap();
        let mut nlms = BidirectionalNlms::new(p.code.clone(), &params, WeightingMode::Mixing).unwrap();
        let (mut pc, mut pn) = (0.0, 0.0);
        for i in 2..400 {
            if i >= 50 {
                pc += cg.w.dotc(&p.received[i]).norm_sqr();
                pn += nlms.nlms.w.dotc(&p.received[i]).norm_sqr();
            }
            cg.step(&window(&p, i)).unwrap();
            nlms.step(&window(&p, i)).unwrap();
        }
        for avg in [pc / 350.0, pn / 350.0] {
            assert!((0.5..=2.0).contains(&avg), "{avg}");
        }
        assert_eq!(cg.degenerate_solves, 0);
    }
}
