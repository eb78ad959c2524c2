//! Receive filters, DBPSK detection, the known-channel MMSE bound and the
//! baseline adaptive receivers.
//!
//! Every receiver exposes its current filter through [`Receiver`]. The
//! simulation loop evaluates outputs and metrics with `w[i−1]`, then hands the
//! receiver a [`ReceivedWindow`] carrying either training symbols or its own
//! decisions.

use num_complex::Complex64;

use crate::bidirectional::{
    cg_solve, error_terms, nlms::EPS_DEN, AdaptiveParams, NlmsState, PowerConstraint,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{add_outer, CMatrix, CVector};
use crate::signal::{ReceivedWindow, Scene, SpreadingCode, Symbol};

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiveFilter {
    pub w: CVector,
}

impl ReceiveFilter {
    pub fn new(w: CVector) -> Self {
        Self { w }
    }

    /// Matched filter to `code`, zero-padded to length `m`.
    pub fn matched(code: &SpreadingCode, m: usize) -> Self {
        Self { w: code.padded(m) }
    }

    pub fn output(&self, r: &CVector) -> Result<Complex64> {
        filter_output(self, r)
    }
}

/// `x = wᴴr`.
pub fn filter_output(filter: &ReceiveFilter, r: &CVector) -> Result<Complex64> {
    check_len(filter.w.len(), r.len())?;
    Ok(filter.w.dotc(r))
}

/// `sign Re(x_now · x_prev*)`; an exact zero decides `+1`.
pub fn detect_dbpsk(x_now: Complex64, x_prev: Complex64) -> Symbol {
    Symbol::from_sign((x_now * x_prev.conj()).re)
}

/// Instantaneous MMSE problem `R w = p` for user 1 with full channel
/// knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseOracle {
    pub covariance: CMatrix,
    pub steering: CVector,
}

impl MmseOracle {
    pub fn from_scene(scene: &Scene) -> Self {
        let mut covariance = scene.interference_covariance();
        let s = scene.desired();
        add_outer(&mut covariance, Complex64::new(1.0, 0.0), s, s);
        Self {
            covariance,
            steering: s.clone(),
        }
    }

    pub fn solve(&self) -> Result<ReceiveFilter> {
        let chol = self.covariance.clone().cholesky().ok_or(Error::Singular)?;
        Ok(ReceiveFilter::new(chol.solve(&self.steering)))
    }
}

/// `w_o = R⁻¹ s₁` for the scene's instantaneous channel.
pub fn mmse_oracle_filter(scene: &Scene) -> Result<ReceiveFilter> {
    MmseOracle::from_scene(scene).solve()
}

/// How symbol decisions are formed from the filter output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    /// Differential: `â[i]` from consecutive outputs.
    Differential,
    /// Coherent: `b̂[i] = sign Re x[i]`.
    Coherent,
}

pub trait Receiver: Send {
    fn weights(&self) -> &CVector;

    fn detection(&self) -> Detection {
        Detection::Differential
    }

    /// Past received vectors needed before the first [`Receiver::adapt`].
    fn history(&self) -> usize {
        2
    }

    /// Genie hook called before the outputs of symbol `i` are formed.
    fn prepare(&mut self, _scene: &Scene) -> Result<()> {
        Ok(())
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()>;

    /// Current branch weights for three-instant receivers.
    fn rho(&self) -> Option<[f64; 3]> {
        None
    }
}

/// Known-channel MMSE bound, recomputed every symbol.
#[derive(Debug, Clone)]
pub struct MmseReceiver {
    pub w: CVector,
}

impl MmseReceiver {
    pub fn new(m: usize) -> Self {
        Self { w: CVector::zeros(m) }
    }
}

impl Receiver for MmseReceiver {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn detection(&self) -> Detection {
        Detection::Coherent
    }

    fn history(&self) -> usize {
        0
    }

    fn prepare(&mut self, scene: &Scene) -> Result<()> {
        self.w = mmse_oracle_filter(scene)?.w;
        Ok(())
    }

    fn adapt(&mut self, _window: &ReceivedWindow) -> Result<()> {
        Ok(())
    }
}

/// Normalised LMS against the desired symbol `d = b[i]`.
#[derive(Debug, Clone)]
pub struct ConventionalNlms {
    pub w: CVector,
    pub mu: f64,
}

impl ConventionalNlms {
    pub fn new(w0: CVector, mu: f64) -> Self {
        Self { w: w0, mu }
    }
}

/// `w ← w + μ/(ε + ‖r‖²)·r·(d − wᴴr)*`.
pub fn conventional_nlms_step(w: &CVector, r: &CVector, desired: Symbol, mu: f64) -> Result<CVector> {
    check_len(w.len(), r.len())?;
    let e = Complex64::new(desired.value(), 0.0) - w.dotc(r);
    let coef = mu / (EPS_DEN + r.norm_squared());
    Ok(w + r * (e.conj() * coef))
}

impl Receiver for ConventionalNlms {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn detection(&self) -> Detection {
        Detection::Coherent
    }

    fn history(&self) -> usize {
        0
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        self.w = conventional_nlms_step(&self.w, &window.r_now, window.b_now, self.mu)?;
        Ok(())
    }
}

/// Exponentially weighted RLS with `P[0] = δ⁻¹I`.
#[derive(Debug, Clone)]
pub struct ConventionalRls {
    pub w: CVector,
    pub p: CMatrix,
    pub lambda: f64,
}

impl ConventionalRls {
    pub fn new(w0: CVector, lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) || !(delta > 0.0) {
            return Err(Error::invalid("RLS needs lambda in (0, 1] and delta > 0"));
        }
        let m = w0.len();
        Ok(Self {
            w: w0,
            p: CMatrix::identity(m, m) * Complex64::new(1.0 / delta, 0.0),
            lambda,
        })
    }
}

pub fn conventional_rls_step(state: &mut ConventionalRls, r: &CVector, desired: Symbol) -> Result<()> {
    check_len(state.w.len(), r.len())?;
    let pr = &state.p * r;
    let denom = state.lambda + r.dotc(&pr).re;
    let k = &pr / Complex64::new(denom, 0.0);
    let e = Complex64::new(desired.value(), 0.0) - state.w.dotc(r);
    state.w += &k * e.conj();
    // P ← (P − k rᴴP)/λ, with P Hermitian so rᴴP = (Pr)ᴴ
    add_outer(&mut state.p, Complex64::new(-1.0, 0.0), &k, &pr);
    state.p /= Complex64::new(state.lambda, 0.0);
    let sym = (&state.p + state.p.adjoint()) * Complex64::new(0.5, 0.0);
    state.p = sym;
    Ok(())
}

impl Receiver for ConventionalRls {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn detection(&self) -> Detection {
        Detection::Coherent
    }

    fn history(&self) -> usize {
        0
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        conventional_rls_step(self, &window.r_now, window.b_now)
    }
}

/// CG solve of the exponentially weighted normal equations
/// `(λR + rrᴴ) w = λp + r·d*`, warm-started from the previous filter.
#[derive(Debug, Clone)]
pub struct ConventionalCg {
    pub w: CVector,
    pub r: CMatrix,
    pub p: CVector,
    pub lambda: f64,
    pub j_max: usize,
    pub tol: f64,
}

impl ConventionalCg {
    pub fn new(w0: CVector, params: &AdaptiveParams) -> Self {
        let m = w0.len();
        Self {
            w: w0,
            r: CMatrix::identity(m, m) * Complex64::new(params.delta, 0.0),
            p: CVector::zeros(m),
            lambda: params.lambda,
            j_max: params.j_max,
            tol: params.cg_tol,
        }
    }
}

pub fn conventional_cg_step(state: &mut ConventionalCg, r: &CVector, desired: Symbol) -> Result<()> {
    check_len(state.w.len(), r.len())?;
    let lam = Complex64::new(state.lambda, 0.0);
    state.r *= lam;
    add_outer(&mut state.r, Complex64::new(1.0, 0.0), r, r);
    state.p = &state.p * lam + r * Complex64::new(desired.value(), 0.0);
    state.w = cg_solve(&state.r, &state.p, &state.w, state.j_max, state.tol)?.w;
    Ok(())
}

impl Receiver for ConventionalCg {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn detection(&self) -> Detection {
        Detection::Coherent
    }

    fn history(&self) -> usize {
        0
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        conventional_cg_step(self, &window.r_now, window.b_now)
    }
}

/// Two-instant differential MMSE with a stochastic-gradient update on
/// `e1 = b[i]·wᴴr[i−1] − b[i−1]·wᴴr[i]` alone.
#[derive(Debug, Clone)]
pub struct DifferentialNlms {
    pub nlms: NlmsState,
    pub constraint: PowerConstraint,
}

impl DifferentialNlms {
    pub fn new(w0: CVector, params: &AdaptiveParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            nlms: NlmsState::from_params(w0, params)?,
            constraint: PowerConstraint::new(params.lambda_m, params.max_scale)?,
        })
    }
}

pub fn differential_mmse_step(state: &mut DifferentialNlms, window: &ReceivedWindow) -> Result<()> {
    let errors = error_terms(&state.nlms.w, window)?;
    let mut w = state.nlms.step(window, &errors, [1.0, 0.0, 0.0])?;
    state.constraint.apply(&mut w, &window.r_now)?;
    state.nlms.w = w;
    Ok(())
}

impl Receiver for DifferentialNlms {
    fn weights(&self) -> &CVector {
        &self.nlms.w
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        differential_mmse_step(self, window)
    }
}

/// Two-instant differential scheme solved by CG over
/// `R = Σλ^{i−l} r[l]rᴴ[l]`, `t = Σλ^{i−l} b[l−1]b[l]·r[l]·(rᴴ[l−1]w)`.
#[derive(Debug, Clone)]
pub struct DifferentialCg {
    pub w: CVector,
    pub r: CMatrix,
    pub t: CVector,
    pub lambda: f64,
    pub j_max: usize,
    pub tol: f64,
    pub warm_start: bool,
    pub constraint: PowerConstraint,
}

impl DifferentialCg {
    pub fn new(w0: CVector, params: &AdaptiveParams) -> Result<Self> {
        params.validate()?;
        let m = w0.len();
        Ok(Self {
            w: w0,
            r: CMatrix::identity(m, m) * Complex64::new(params.delta, 0.0),
            t: CVector::zeros(m),
            lambda: params.lambda,
            j_max: params.j_max,
            tol: params.cg_tol,
            warm_start: params.warm_start,
            constraint: PowerConstraint::new(params.lambda_m, params.max_scale)?,
        })
    }

    pub fn step(&mut self, window: &ReceivedWindow) -> Result<()> {
        window.check()?;
        check_len(self.w.len(), window.dim())?;
        let (b0, b1) = (window.b_now.value(), window.b_prev1.value());
        let lam = Complex64::new(self.lambda, 0.0);
        self.r *= lam;
        add_outer(&mut self.r, Complex64::new(b1 * b1, 0.0), &window.r_now, &window.r_now);
        let p1 = window.r_prev1.dotc(&self.w);
        self.t = &self.t * lam + &window.r_now * (p1 * (b1 * b0));
        let start = if self.warm_start { self.w.clone() } else { CVector::zeros(self.w.len()) };
        let mut w = cg_solve(&self.r, &self.t, &start, self.j_max, self.tol)?.w;
        self.constraint.apply(&mut w, &window.r_now)?;
        self.w = w;
        Ok(())
    }
}

impl Receiver for DifferentialCg {
    fn weights(&self) -> &CVector {
        &self.w
    }

    fn adapt(&mut self, window: &ReceivedWindow) -> Result<()> {
        self.step(window)
    }
}
