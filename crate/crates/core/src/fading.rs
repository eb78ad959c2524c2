//! Time-correlated Rayleigh fading via Clarke's isotropic-scattering model.
//!
//! Each process is a sum of `n_scatterers` unit-amplitude complex sinusoids
//! with uniformly drawn angles of arrival `α` and phases `φ`:
//!
//! ```text
//! h[i] = 1/√S · Σ_s exp(j(2π·fd_ts·cos(α_s)·i + φ_s))
//! ```
//!
//! Averaged over realisations the lag-ℓ autocorrelation is `J₀(2π·fd_ts·ℓ)`
//! and the average power is one. The channel is constant over a symbol, so one
//! gain is produced per symbol index.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SCATTERERS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FadingProcess {
    pub normalized_fading_rate: f64,
    pub n_scatterers: usize,
    pub gains: Vec<Complex64>,
    pub seed: u64,
}

impl FadingProcess {
    /// A process whose gain never changes. `fd_ts` is recorded as zero.
    pub fn constant(length: usize, value: Complex64) -> Self {
        Self {
            normalized_fading_rate: 0.0,
            n_scatterers: 0,
            gains: vec![value; length],
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.gains.is_empty() {
            return 0.0;
        }
        self.gains.iter().map(|h| h.norm_sqr()).sum::<f64>() / self.gains.len() as f64
    }

    /// Empirical lag-`lag` autocorrelation normalised by the mean power.
    pub fn autocorrelation(&self, lag: usize) -> Complex64 {
        let n = self.gains.len();
        if lag >= n {
            return Complex64::new(0.0, 0.0);
        }
        let acc: Complex64 = (lag..n).map(|i| self.gains[i] * self.gains[i - lag].conj()).sum();
        acc / (n - lag) as f64 / self.mean_power()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationFactors {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f3: Complex64,
}

/// Draws `length` fading gains from Clarke's model.
pub fn clarke_generate(
    fd_ts: f64,
    length: usize,
    n_scatterers: usize,
    seed: u64,
) -> Result<FadingProcess> {
    if !(fd_ts > 0.0) || !fd_ts.is_finite() {
        return Err(Error::invalid(format!("fading rate must be positive, got {fd_ts}")));
    }
    if length == 0 {
        return Err(Error::invalid("fading length must be at least 1"));
    }
    if n_scatterers == 0 {
        return Err(Error::invalid("at least one scatterer is required"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rays: Vec<(f64, f64)> = (0..n_scatterers)
        .map(|_| {
            let aoa = rng.random::<f64>() * 2.0 * PI - PI;
            let phase = rng.random::<f64>() * 2.0 * PI;
            (2.0 * PI * fd_ts * aoa.cos(), phase)
        })
        .collect();

    let scale = 1.0 / (n_scatterers as f64).sqrt();
    let gains = (0..length)
        .map(|i| {
            let t = i as f64;
            let sum: Complex64 = rays
                .iter()
                .map(|&(omega, phase)| Complex64::from_polar(1.0, omega * t + phase))
                .sum();
            sum * scale
        })
        .collect();

    Ok(FadingProcess {
        normalized_fading_rate: fd_ts,
        n_scatterers,
        gains,
        seed,
    })
}

/// Time-averaged lag correlations over the causal three-instant window
/// `(i, i−1, i−2)`: `f1 ~ h[i]h*[i−1]`, `f2 ~ h[i]h*[i−2]`, `f3 ~ h[i−1]h*[i−2]`.
pub fn estimate_correlation_factors(process: &FadingProcess) -> Result<CorrelationFactors> {
    let h = &process.gains;
    if h.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 fading samples, got {}",
            h.len()
        )));
    }
    let count = (h.len() - 2) as f64;
    let zero = Complex64::new(0.0, 0.0);
    let (mut f1, mut f2, mut f3) = (zero, zero, zero);
    for i in 2..h.len() {
        f1 += h[i] * h[i - 1].conj();
        f2 += h[i] * h[i - 2].conj();
        f3 += h[i - 1] * h[i - 2].conj();
    }
    Ok(CorrelationFactors {
        f1: f1 / count,
        f2: f2 / count,
        f3: f3 / count,
    })
}
