use num_complex::Complex64;

use super::errors::ErrorTriple;
use super::AdaptiveParams;
use crate::error::{check_len, Error, Result};
use crate::linalg::CVector;
use crate::signal::ReceivedWindow;

/// Floor on `|wᴴ[i−1]r[i−1]|` in the update denominator.
/// Floor on `|wᴴ[i−1]r[i−1]|` in the update denominator.
pub const EPS_DEN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NlmsState {
    pub w: CVector,
    pub mu: f64,
    /// Running input power `M[i]`; `None` until the first observation.
    pub m_norm: Option<f64>,
    pub lambda_m: f64,
    /// Add the constraint's Lagrange term to the update (see [`NlmsStep`]).
    pub lagrange: bool,
    /// Lower bound on the denominator `|wᴴ[i−1]r[i−1]|`.
    pub den_floor: f64,
    /// Smoothed `|e_n|²`, one per branch.
    pub error_power: Option<[f64; 3]>,
    /// Smoothed `|wᴴr[i]|²`.
    pub output_power: Option<f64>,
    /// Number of updates where the denominator hit the floor.
    pub clamped: u64,
}

impl NlmsState {
    /// The bare recursion: no Lagrange term, denominator floor [`EPS_DEN`].
    pub fn new(w: CVector, mu: f64, lambda_m: f64) -> Result<Self> {
        Self::with_options(w, mu, lambda_m, false, EPS_DEN)
    }

    pub fn from_params(w: CVector, params: &AdaptiveParams) -> Result<Self> {
        Self::with_options(w, params.mu, params.lambda_m, params.lagrange, params.den_floor)
    }

    pub fn with_options(w: CVector, mu: f64, lambda_m: f64, lagrange: bool, den_floor: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::invalid("step size must be non-negative"));
        }
        if !(0.0..=1.0).contains(&lambda_m) {
            return Err(Error::invalid("lambda_m must lie in [0, 1]"));
        }
        if !(den_floor >= 0.0) || !den_floor.is_finite() {
            return Err(Error::invalid("denominator floor must be finite and non-negative"));
        }
        Ok(Self {
            w,
            mu,
            m_norm: None,
            lambda_m,
            lagrange,
            den_floor: den_floor.max(EPS_DEN),
            error_power: None,
            output_power: None,
            clamped: 0,
        })
    }

    /// Folds `‖r‖²` into `M[i]`; the first call primes it directly.
    pub fn norm_update(&mut self, r: &CVector) {
        self.m_norm = Some(match self.m_norm {
            None => r.norm_squared(),
            Some(prev) => norm_update(prev, r, self.lambda_m),
        });
    }

    /// Current multipliers `γ_n = Ē|e_n|² / (2·Ē|wᴴr|²)`; zero when the
    /// Lagrange term is off or nothing has been observed.
    pub fn multipliers(&self) -> [f64; 3] {
        match (self.lagrange, self.error_power, self.output_power) {
            (true, Some(e), Some(p)) if p > 0.0 => e.map(|x| x / (2.0 * p)),
            _ => [0.0; 3],
        }
    }

    fn track_errors(&mut self, errors: &ErrorTriple, x_now: Complex64) {
        let l = self.lambda_m;
        let mags = errors.magnitudes().map(|m| m * m);
        let out = x_now.norm_sqr();
        self.error_power = Some(match self.error_power {
            None => mags,
            Some(prev) => [0, 1, 2].map(|n| l * prev[n] + (1.0 - l) * mags[n]),
        });
        self.output_power = Some(match self.output_power {
            None => out,
            Some(prev) => l * prev + (1.0 - l) * out,
        });
    }

    /// One update from `w`; returns the new filter before any constraint.
    pub fn step(&mut self, window: &ReceivedWindow, errors: &ErrorTriple, rho: [f64; 3]) -> Result<CVector> {
        check_len(self.w.len(), window.dim())?;
        self.norm_update(&window.r_now);
        if self.lagrange {
            self.track_errors(errors, self.w.dotc(&window.r_now));
        }
        let step = NlmsStep {
            mu: self.mu,
            m_norm: self.m_norm.unwrap_or(1.0),
            den_floor: self.den_floor,
            gamma: self.multipliers(),
        };
        let (w, clamped) = nlms_update_with(&self.w, window, errors, rho, &step)?;
        self.clamped += clamped as u64;
        Ok(w)
    }
}

/// `λ_M·M + (1−λ_M)·rᴴr`.
pub fn norm_update(m_norm: f64, r: &CVector, lambda_m: f64) -> f64 {
    lambda_m * m_norm + (1.0 - lambda_m) * r.norm_squared()
}

/// Scalars of one update.
///
/// With `wᴴRw = 1` imposed, the constrained minimum of branch `n` satisfies
/// `(R_n − F_n)w = γ_n R_n w`. The plain gradient only carries `(F_n − R_n)w`
/// and rescaling cannot supply the `γ_n R_n w` part, so without it nothing
/// pulls the filter out of directions where the two instants agree equally
/// badly and it random-walks into the noise subspace. `γ_n` is estimated
/// as the smoothed error power over twice the smoothed output power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmsStep {
    pub mu: f64,
    pub m_norm: f64,
    pub den_floor: f64,
    pub gamma: [f64; 3],
}

/// ```text
/// w[i] = w[i−1] + μ/(M[i]·|wᴴ[i−1]r[i−1]|) ·
///        (ρ1·b[i−1]r[i]e1* + ρ2·b[i−2]r[i]e2* + ρ3·b[i−2]r[i−1]e3*)
/// ```
///
/// Returns the new filter and whether the denominator was clamped.
pub fn nlms_update(
    w_prev: &CVector,
    window: &ReceivedWindow,
    errors: &ErrorTriple,
    rho: [f64; 3],
    mu: f64,
    m_norm: f64,
) -> Result<(CVector, bool)> {
    let step = NlmsStep {
        mu,
        m_norm,
        den_floor: EPS_DEN,
        gamma: [0.0; 3],
    };
    nlms_update_with(w_prev, window, errors, rho, &step)
}

/// [`nlms_update`] plus `γ1,γ2` times `r[i]·(wᴴr[i])*` and `γ3` times
/// `r[i−1]·(wᴴr[i−1])*`, with the denominator floored at `den_floor`.
pub fn nlms_update_with(
    w_prev: &CVector,
    window: &ReceivedWindow,
    errors: &ErrorTriple,
    rho: [f64; 3],
    step: &NlmsStep,
) -> Result<(CVector, bool)> {
    window.check()?;
    check_len(w_prev.len(), window.dim())?;
    if !(step.m_norm > 0.0) {
        return Err(Error::Degenerate(format!("normalisation M[i] = {}", step.m_norm)));
    }
    let x_prev = w_prev.dotc(&window.r_prev1);
    let den = x_prev.norm();
    let clamped = den < step.den_floor;
    let coef = step.mu / (step.m_norm * den.max(step.den_floor));

    let g1 = rho[0] * window.b_prev1.value() * errors.e1.conj();
    let g2 = rho[1] * window.b_prev2.value() * errors.e2.conj();
    let g3 = rho[2] * window.b_prev2.value() * errors.e3.conj();
    let mut direction = &window.r_now * g1 + &window.r_now * g2 + &window.r_prev1 * g3;
    let gamma = step.gamma;
    if gamma.iter().any(|&g| g != 0.0) {
        let x_now = w_prev.dotc(&window.r_now);
        direction += &window.r_now * (x_now.conj() * (rho[0] * gamma[0] + rho[1] * gamma[1]));
        direction += &window.r_prev1 * (x_prev.conj() * (rho[2] * gamma[2]));
    }
    Ok((w_prev + direction * Complex64::new(coef, 0.0), clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bidirectional::errors::error_terms;
    use crate::linalg::{complex_gaussian, relative_distance};
    use crate::signal::Symbol;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: f64) -> CVector {
        CVector::from_element(1, Complex64::new(x, 0.0))
    }

    fn random_window(rng: &mut ChaCha8Rng, m: usize, b: [Symbol; 3]) -> ReceivedWindow {
        ReceivedWindow {
            r_now: complex_gaussian(rng, m, 1.0),
            r_prev1: complex_gaussian(rng, m, 1.0),
            r_prev2: complex_gaussian(rng, m, 1.0),
            b_now: b[0],
            b_prev1: b[1],
            b_prev2: b[2],
        }
    }

    #[test]
    fn scalar_hand_instance() {
        let w = scalar(1.0);
        let win = ReceivedWindow {
            r_now: scalar(1.0),
            r_prev1: scalar(1.0),
            r_prev2: scalar(1.0),
            b_now: Symbol::PLUS,
            b_prev1: Symbol::PLUS,
            b_prev2: Symbol::MINUS,
        };
        let e = error_terms(&w, &win).unwrap();
        // by hand: e1 = 1 − 1, e2 = 1 − (−1), e3 = 1 − (−1)
        assert_eq!(e.e1, Complex64::new(0.0, 0.0));
        assert_eq!(e.e2, Complex64::new(2.0, 0.0));
        assert_eq!(e.e3, Complex64::new(2.0, 0.0));
        let (w_new, _) = nlms_update(&w, &win, &e, [1.0; 3], 0.1, 1.0).unwrap();
        // 1 + 0.1·(0 + (−1)(2) + (−1)(2))
        assert!((w_new[0] - Complex64::new(0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_step_or_zero_error_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = complex_gaussian(&mut rng, 6, 1.0);
        let win = random_window(&mut rng, 6, [Symbol::PLUS, Symbol::MINUS, Symbol::MINUS]);
        let e = error_terms(&w, &win).unwrap();
        assert_eq!(nlms_update(&w, &win, &e, [1.0; 3], 0.0, 2.0).unwrap().0, w);
        let zero = ErrorTriple {
            e1: Complex64::new(0.0, 0.0),
            e2: Complex64::new(0.0, 0.0),
            e3: Complex64::new(0.0, 0.0),
        };
        assert_eq!(nlms_update(&w, &win, &zero, [1.0; 3], 0.1, 2.0).unwrap().0, w);
    }

    #[test]
    fn denominator_is_clamped() {
        let w = scalar(0.0);
        let win = ReceivedWindow {
            r_now: scalar(1.0),
            r_prev1: scalar(1.0),
            r_prev2: scalar(1.0),
            b_now: Symbol::PLUS,
            b_prev1: Symbol::PLUS,
            b_prev2: Symbol::PLUS,
        };
        let e = error_terms(&w, &win).unwrap();
        let (w_new, clamped) = nlms_update(&w, &win, &e, [1.0; 3], 0.1, 1.0).unwrap();
        assert!(clamped);
        assert!(w_new.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn norm_recursion() {
        let r = CVector::from_element(4, Complex64::new(0.5, 0.5));
        assert_eq!(norm_update(3.0, &r, 1.0), 3.0);
        assert_eq!(norm_update(3.0, &r, 0.0), r.norm_squared());
        let mut m = 0.0;
        for _ in 0..5000 {
            m = norm_update(m, &r, 0.99);
        }
        // geometric series: c·(1 − λ^n)
        let expect = r.norm_squared() * (1.0 - 0.99f64.powi(5000));
        assert!((m - expect).abs() < 1e-12);
        assert!((m - r.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn state_primes_on_first_observation() {
        let mut s = NlmsState::new(scalar(1.0), 0.1, 0.99).unwrap();
        s.norm_update(&scalar(3.0));
        assert_eq!(s.m_norm, Some(9.0));
        s.norm_update(&scalar(1.0));
        assert!((s.m_norm.unwrap() - (0.99 * 9.0 + 0.01)).abs() < 1e-15);
        assert!(NlmsState::new(scalar(1.0), -0.1, 0.99).is_err());
        assert!(NlmsState::with_options(scalar(1.0), 0.1, 0.99, true, -1.0).is_err());
    }

    #[test]
    fn lagrange_term_by_hand() {
        let w = scalar(1.0);
        let win = ReceivedWindow {
            r_now: scalar(2.0),
            r_prev1: scalar(1.0),
            r_prev2: scalar(1.0),
            b_now: Symbol::PLUS,
            b_prev1: Symbol::PLUS,
            b_prev2: Symbol::PLUS,
        };
        let e = error_terms(&w, &win).unwrap();
        // e1 = 1 − 2 = −1, e2 = −1, e3 = 0
        let step = NlmsStep {
            mu: 0.1,
            m_norm: 1.0,
            den_floor: EPS_DEN,
            gamma: [0.5, 0.25, 2.0],
        };
        let (w_new, _) = nlms_update_with(&w, &win, &e, [1.0; 3], &step).unwrap();
        // 1 + 0.1·(2·(−1) + 2·(−1) + 0 + 2·2·(0.5 + 0.25) + 1·1·2)
        assert!((w_new[0] - Complex64::new(1.1, 0.0)).norm() < 1e-15);
        let floored = NlmsStep { den_floor: 2.0, ..step };
        let (half, clamped) = nlms_update_with(&w, &win, &e, [1.0; 3], &floored).unwrap();
        assert!(clamped);
        assert!((half[0] - Complex64::new(1.05, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn multipliers_track_the_error_to_output_ratio() {
        let mut s = NlmsState::with_options(scalar(1.0), 0.0, 0.5, true, 0.0).unwrap();
        assert_eq!(s.multipliers(), [0.0; 3]);
        let win = ReceivedWindow {
            r_now: scalar(2.0),
            r_prev1: scalar(1.0),
            r_prev2: scalar(1.0),
            b_now: Symbol::PLUS,
            b_prev1: Symbol::PLUS,
            b_prev2: Symbol::PLUS,
        };
        let e = error_terms(&s.w, &win).unwrap();
        s.step(&win, &e, [1.0; 3]).unwrap();
        // |e|² = (1, 1, 0), |x|² = 4
        assert_eq!(s.multipliers(), [0.125, 0.125, 0.0]);
        s.lagrange = false;
        assert_eq!(s.multipliers(), [0.0; 3]);
    }

    proptest! {
        #[test]
        fn update_is_linear_in_rho(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = complex_gaussian(&mut rng, 5, 1.0);
            let win = random_window(&mut rng, 5, [Symbol::MINUS, Symbol::PLUS, Symbol::MINUS]);
            let e = error_terms(&w, &win).unwrap();
            let full = nlms_update(&w, &win, &e, [1.0; 3], 0.1, 1.7).unwrap().0;
            let mut summed = w.clone();
            for n in 0..3 {
                let mut rho = [0.0; 3];
                rho[n] = 1.0;
                summed += nlms_update(&w, &win, &e, rho, 0.1, 1.7).unwrap().0 - &w;
            }
            prop_assert!(relative_distance(&full, &summed) < 1e-12);
        }
    }
}
