//! Analytical SINR of the three-instant NLMS receiver.
//!
//! With `ε[i] = w[i] − w_o` and direct averaging, the weight error obeys
//!
//! ```text
//! K[i] = A·K[i−1]·Aᴴ + μ²(R1·J1 + R2·J2 + R3·J3)
//! G[i] = G[i−1]·μ(F1 − R1 + F2 − R2 + F3 − R3)
//! A    = I + μ(F1 − R1 + F2 − R2 + F3 − R3)
//! ```
//!
//! where `R_n` are the autocorrelations at the lagging instant of each pair,
//! `F_n` the cross-instant correlations, and `J_n = E|e_{o,n}|²` the errors of
//! the optimum filter. The SINR follows from traces against the signal and
//! interference-plus-noise covariances.
//!
//! The ensemble matrices are averaged over channel draws; symbol and noise
//! expectations are taken in closed form (BPSK symbols of different users and
//! instants are independent and zero-mean).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fading::{clarke_generate, DEFAULT_SCATTERERS};
use crate::linalg::{db, identity, is_hermitian, quad_form, trace, CMatrix, CVector};
use crate::signal::{make_spreading_codes, single_hop_scene, ChannelMatrix, SystemConfig};

/// Ensemble correlation structure for one system and fading rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMatrices {
    /// `F1 ~ s[i]s[i−1]ᴴ`, `F2 ~ s[i]s[i−2]ᴴ`, `F3 ~ s[i−1]s[i−2]ᴴ` for user 1.
    pub f: [CMatrix; 3],
    /// `R1 = R2 = E r[i]rᴴ[i]`, `R3 = E r[i−1]rᴴ[i−1]`.
    pub r: [CMatrix; 3],
    /// `E r[i−2]rᴴ[i−2]`, needed for `J2` and `J3`.
    pub r_lag2: CMatrix,
    pub decomposition: SinrDecomposition,
    /// Optimum filter, scaled to unit output power `w_oᴴR1w_o = 1`.
    pub w_o: CVector,
    pub j_min: [f64; 3],
    /// `E‖r‖² = tr R1`.
    pub input_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrDecomposition {
    pub r_s: CMatrix,
    pub r_i: CMatrix,
    pub p_s_opt: f64,
    pub p_i_opt: f64,
}

/// Builds the ensemble matrices from `n_ensemble` independent channel draws.
/// `fd_ts = 0` selects a static unit channel for every user.
pub fn build_ensemble_matrices(
    config: &SystemConfig,
    fd_ts: f64,
    n_ensemble: usize,
    seed: u64,
) -> Result<EnsembleMatrices> {
    config.validate()?;
    if n_ensemble == 0 {
        return Err(Error::invalid("ensemble size must be positive"));
    }
    if !(fd_ts >= 0.0) {
        return Err(Error::invalid("fading rate must be non-negative"));
    }
    let m = config.m();
    let codes = make_spreading_codes(config.users, config.chips, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a11a);

    let zero = || CMatrix::zeros(m, m);
    let mut f = [zero(), zero(), zero()];
    let mut cov = [zero(), zero(), zero()]; // instants i, i−1, i−2
    let mut r_s = zero();
    let mut r_i = zero();

    let n_links = config.users * config.paths;
    for _ in 0..n_ensemble {
        // four instants: i−3 feeds the ISI of i−2
        let gains: Vec<Vec<Complex64>> = (0..n_links)
            .map(|_| {
                if fd_ts == 0.0 {
                    Ok(vec![Complex64::new(1.0, 0.0); 4])
                } else {
                    clarke_generate(fd_ts, 4, DEFAULT_SCATTERERS, rng.random()).map(|p| p.gains)
                }
            })
            .collect::<Result<_>>()?;
        let channels = |t: usize| -> Result<Vec<ChannelMatrix>> {
            (0..config.users)
                .map(|k| {
                    let paths: Vec<Complex64> =
                        (0..config.paths).map(|l| gains[k * config.paths + l][t]).collect();
                    ChannelMatrix::from_fading(config.chips, &paths)
                })
                .collect()
        };
        let mut scenes = Vec::with_capacity(3);
        for t in 1..4 {
            let prev = channels(t - 1)?;
            scenes.push(single_hop_scene(config, &channels(t)?, Some(&prev), &codes)?);
        }
        // scenes[2] is instant i, scenes[1] is i−1, scenes[0] is i−2
        let s = |t: usize| scenes[t].desired();
        f[0] += s(2) * s(1).adjoint();
        f[1] += s(2) * s(0).adjoint();
        f[2] += s(1) * s(0).adjoint();
        for (slot, t) in [(0, 2), (1, 1), (2, 0)] {
            let signal = scenes[t].signal_covariance();
            let interference = scenes[t].interference_covariance();
            if slot == 0 {
                r_s += &signal;
                r_i += &interference;
            }
            cov[slot] += signal + interference;
        }
    }
    let inv = Complex64::new(1.0 / n_ensemble as f64, 0.0);
    for x in f.iter_mut().chain(cov.iter_mut()) {
        *x *= inv;
    }
    r_s *= inv;
    r_i *= inv;

    let [c0, c1, c2] = cov;
    let r1 = c0;
    let r = [r1.clone(), r1.clone(), c1];

    let w_o = optimum_filter(&r1, &r_s)?;
    let j_min = optimum_errors(&w_o, &r, &c2, &f);
    let decomposition = SinrDecomposition {
        p_s_opt: quad_form(&r_s, &w_o),
        p_i_opt: quad_form(&r_i, &w_o),
        r_s,
        r_i,
    };
    Ok(EnsembleMatrices {
        input_power: trace(&r1).re,
        f,
        r,
        r_lag2: c2,
        decomposition,
        w_o,
        j_min,
    })
}

/// `R⁻¹v` along the dominant signal direction `v`, scaled so `w_oᴴRw_o = 1`.
fn optimum_filter(r: &CMatrix, r_s: &CMatrix) -> Result<CVector> {
    let eig = r_s.clone().symmetric_eigen();
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let v = eig.eigenvectors.column(imax).into_owned();
    // near noise-free ensembles leave R numerically rank deficient; a tiny
    // diagonal load keeps the solve defined without moving well-posed cases
    let chol = match r.clone().cholesky() {
        Some(c) => c,
        None => {
            let m = r.nrows();
            let load = 1e-10 * crate::linalg::trace(r).re.max(f64::MIN_POSITIVE) / m as f64;
            (r + CMatrix::identity(m, m) * Complex64::new(load, 0.0))
                .cholesky()
                .ok_or(Error::Singular)?
        }
    };
    let w = chol.solve(&v);
    let power = quad_form(r, &w);
    if !(power > 0.0) {
        return Err(Error::Degenerate("optimum filter has no output power".into()));
    }
    Ok(w / Complex64::new(power.sqrt(), 0.0))
}

/// `J_n = E|e_{o,n}|²` in closed form, e.g.
/// `J1 = w_oᴴ(R[i] + R[i−1])w_o − 2·Re(w_oᴴF1w_o)`.
fn optimum_errors(w: &CVector, r: &[CMatrix; 3], r_lag2: &CMatrix, f: &[CMatrix; 3]) -> [f64; 3] {
    let p0 = quad_form(&r[0], w);
    let p1 = quad_form(&r[2], w);
    let p2 = quad_form(r_lag2, w);
    let x = |m: &CMatrix| w.dotc(&(m * w)).re;
    [
        (p0 + p1 - 2.0 * x(&f[0])).max(0.0),
        (p0 + p2 - 2.0 * x(&f[1])).max(0.0),
        (p1 + p2 - 2.0 * x(&f[2])).max(0.0),
    ]
}

/// Weight-error second moments and the fixed operators driving them.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisState {
    pub k_mat: CMatrix,
    pub g_mat: CMatrix,
    pub mu: f64,
    /// `μ·Σ(F_n − R_n)`.
    pub b_mat: CMatrix,
    /// `I + B`.
    pub a_mat: CMatrix,
    /// `μ²·Σ R_n J_n`.
    pub drive: CMatrix,
    pub iteration: usize,
}

impl AnalysisState {
    /// `K[0] = G[0] = I`.
    pub fn new(ens: &EnsembleMatrices, mu: f64) -> Result<Self> {
        Self::from_parts(&ens.f, &ens.r, ens.j_min, mu)
    }

    pub fn from_parts(f: &[CMatrix; 3], r: &[CMatrix; 3], j_min: [f64; 3], mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::invalid("step size must be non-negative"));
        }
        if j_min.iter().any(|&j| !(j >= 0.0)) {
            return Err(Error::invalid("J_min terms must be non-negative"));
        }
        let m = r[0].nrows();
        let muc = Complex64::new(mu, 0.0);
        let mut b_mat = CMatrix::zeros(m, m);
        let mut drive = CMatrix::zeros(m, m);
        for n in 0..3 {
            b_mat += (&f[n] - &r[n]) * muc;
            drive += &r[n] * Complex64::new(mu * mu * j_min[n], 0.0);
        }
        Ok(Self {
            k_mat: identity(m),
            g_mat: identity(m),
            mu,
            a_mat: identity(m) + &b_mat,
            b_mat,
            drive,
            iteration: 0,
        })
    }

    pub fn step(&mut self) {
        k_recursion_step(self);
        g_recursion_step(self);
        self.iteration += 1;
    }
}

/// `K ← A·K·Aᴴ + μ²ΣR_nJ_n`.
pub fn k_recursion_step(state: &mut AnalysisState) {
    let next = &state.a_mat * &state.k_mat * state.a_mat.adjoint() + &state.drive;
    // remove rounding asymmetry so K stays exactly Hermitian
    state.k_mat = (&next + next.adjoint()) * Complex64::new(0.5, 0.0);
}

/// `G ← G·μΣ(F_n − R_n)`.
pub fn g_recursion_step(state: &mut AnalysisState) {
    state.g_mat = &state.g_mat * &state.b_mat;
}

/// `tr(KR_S + GR_S + GᴴR_S) + P_S,opt` over the same with `R_I`, in dB.
pub fn analytical_sinr(state: &AnalysisState, decomp: &SinrDecomposition) -> Result<f64> {
    let part = |r: &CMatrix, p: f64| {
        trace(&(&state.k_mat * r)).re + 2.0 * trace(&(&state.g_mat * r)).re + p
    };
    let num = part(&decomp.r_s, decomp.p_s_opt);
    let den = part(&decomp.r_i, decomp.p_i_opt);
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!("interference trace {den}")));
    }
    Ok(db(num / den))
}

/// Relative Frobenius distance between `3(I + μ(F1 − R1))` and
/// `I + μΣ(F_n − R_n)`.
pub fn differential_equivalence_gap(f: &[CMatrix; 3], r: &[CMatrix; 3], mu: f64) -> f64 {
    let m = r[0].nrows();
    let muc = Complex64::new(mu, 0.0);
    let single = (identity(m) + (&f[0] - &r[0]) * muc) * Complex64::new(3.0, 0.0);
    let mut full = identity(m);
    for n in 0..3 {
        full += (&f[n] - &r[n]) * muc;
    }
    (&single - &full).norm() / single.norm()
}

/// Runs the recursion for `steps` iterations and returns the SINR after each.
pub fn analytical_curve(ens: &EnsembleMatrices, mu: f64, steps: usize) -> Result<Vec<f64>> {
    let mut state = AnalysisState::new(ens, mu)?;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        state.step();
        debug_assert!(is_hermitian(&state.k_mat, 1e-9));
        out.push(analytical_sinr(&state, &ens.decomposition)?);
    }
    Ok(out)
}

/// Iterates until successive SINR values differ by less than `tol` dB, or
/// `max_steps`. Returns the final SINR and the step count, or an error when
/// the recursion does not settle.
pub fn steady_state_sinr(ens: &EnsembleMatrices, mu: f64, tol: f64, max_steps: usize) -> Result<(f64, usize)> {
    let mut state = AnalysisState::new(ens, mu)?;
    let mut last = analytical_sinr(&state, &ens.decomposition)?;
    for step in 1..=max_steps {
        state.step();
        let now = analytical_sinr(&state, &ens.decomposition)?;
        if !now.is_finite() {
            return Err(Error::Degenerate("analytical SINR diverged".into()));
        }
        if (now - last).abs() < tol && step > 10 {
            return Ok((now, step));
        }
        last = now;
    }
    Err(Error::Degenerate(format!(
        "analytical recursion did not settle within {max_steps} steps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::estimate_correlation_factors;
    use crate::linalg::{complex_gaussian, outer};
    use crate::metrics::sinr_inst;
    use proptest::prelude::*;

    fn cfg(users: usize, snr_db: f64) -> SystemConfig {
        SystemConfig::new(users, 8, 1, snr_db)
    }

    fn scalar(x: f64) -> CMatrix {
        CMatrix::from_element(1, 1, Complex64::new(x, 0.0))
    }

    #[test]
    fn static_single_user_matrices() {
        let c = cfg(1, 300.0);
        let ens = build_ensemble_matrices(&c, 0.0, 3, 1).unwrap();
        let code = make_spreading_codes(1, 8, 1).unwrap()[0].padded(8);
        let cc = outer(&code, &code);
        for n in 0..3 {
            assert!((&ens.f[n] - &cc).norm() < 1e-12);
            assert!((&ens.r[n] - &cc).norm() < 1e-12);
        }
    }

    #[test]
    fn cross_instant_matrix_is_scaled_signature() {
        let c = cfg(1, 10.0);
        let ens = build_ensemble_matrices(&c, 0.01, 10_000, 2).unwrap();
        let long = clarke_generate(0.01, 100_000, 20, 3).unwrap();
        let f1 = estimate_correlation_factors(&long).unwrap().f1 / long.mean_power();
        let code = make_spreading_codes(1, 8, 2).unwrap()[0].padded(8);
        let expect = outer(&code, &code) * f1;
        let rel = (&ens.f[0] - &expect).norm() / ens.f[0].norm();
        assert!(rel < 0.05, "relative error {rel}");
    }

    #[test]
    fn covariance_matches_sample_covariance() {
        // K = 1, static, noise-free: the received covariance is c·cᴴ
        let c = cfg(1, 300.0);
        let ens = build_ensemble_matrices(&c, 0.0, 1, 4).unwrap();
        let codes = make_spreading_codes(1, 8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sample = CMatrix::zeros(8, 8);
        for _ in 0..50 {
            let b = crate::signal::Symbol::random(&mut rng);
            let r = codes[0].padded(8) * Complex64::new(b.value(), 0.0);
            sample += outer(&r, &r);
        }
        sample /= Complex64::new(50.0, 0.0);
        assert!((&ens.r[0] - &sample).norm() < 1e-9);
    }

    #[test]
    fn zero_step_freezes_k_and_annihilates_g() {
        let ens = build_ensemble_matrices(&cfg(3, 10.0), 0.01, 50, 5).unwrap();
        let mut s = AnalysisState::new(&ens, 0.0).unwrap();
        let k0 = s.k_mat.clone();
        s.step();
        assert_eq!(s.k_mat, k0);
        assert_eq!(s.g_mat, CMatrix::zeros(8, 8));
    }

    #[test]
    fn matched_correlations_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = complex_gaussian(&mut rng, 4, 1.0);
        let r = outer(&v, &v) + identity(4);
        let mats = [r.clone(), r.clone(), r.clone()];
        let mut s = AnalysisState::from_parts(&mats, &mats, [0.0; 3], 0.1).unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(4);
        let x = complex_gaussian(&mut rng2, 4, 1.0);
        s.k_mat = outer(&x, &x) + identity(4);
        let k0 = s.k_mat.clone();
        s.step();
        assert!((&s.k_mat - &k0).norm() < 1e-14);
        assert_eq!(s.g_mat, CMatrix::zeros(4, 4));
    }

    #[test]
    fn scalar_recursions_match_closed_form() {
        // a = 1 + μ·Σ(f − r), b = μ²·Σ r·J
        let (mu, f, r, j) = (0.05, [0.9, 0.8, 0.85], [1.0, 1.0, 1.1], [0.2, 0.3, 0.25]);
        let fm = [scalar(f[0]), scalar(f[1]), scalar(f[2])];
        let rm = [scalar(r[0]), scalar(r[1]), scalar(r[2])];
        let mut s = AnalysisState::from_parts(&fm, &rm, j, mu).unwrap();
        let a: f64 = 1.0 + mu * (0..3).map(|n| f[n] - r[n]).sum::<f64>();
        let b: f64 = mu * mu * (0..3).map(|n| r[n] * j[n]).sum::<f64>();
        let g_factor = a - 1.0;
        for i in 1..=50 {
            s.step();
            let a2 = a * a;
            let k = a2.powi(i) + b * (1.0 - a2.powi(i)) / (1.0 - a2);
            assert!((s.k_mat[(0, 0)].re - k).abs() < 1e-12);
            assert!((s.g_mat[(0, 0)].re - g_factor.powi(i)).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn k_stays_hermitian_psd(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mk = |rng: &mut ChaCha8Rng| {
                let g = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(rng, 1, 1.0)[0]);
                &g * g.adjoint() + identity(4) * Complex64::new(0.1, 0.0)
            };
            let r = [mk(&mut rng), mk(&mut rng), mk(&mut rng)];
            let f = [
                CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng, 1, 0.3)[0]),
                CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng, 1, 0.3)[0]),
                CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng, 1, 0.3)[0]),
            ];
            let mut s = AnalysisState::from_parts(&f, &r, [0.1, 0.2, 0.3], 0.02).unwrap();
            for _ in 0..20 {
                s.step();
                prop_assert!(is_hermitian(&s.k_mat, 1e-12));
                let eig = s.k_mat.clone().symmetric_eigenvalues();
                prop_assert!(eig.iter().all(|&e| e >= -1e-9 * s.k_mat.norm()));
            }
        }

        #[test]
        fn larger_error_floor_gives_larger_trace(j in 0.0f64..1.0, dj in 0.01f64..1.0) {
            let fm = [scalar(0.9), scalar(0.9), scalar(0.9)];
            let rm = [scalar(1.0), scalar(1.0), scalar(1.0)];
            let run = |jj: f64| {
                let mut s = AnalysisState::from_parts(&fm, &rm, [jj; 3], 0.1).unwrap();
                for _ in 0..500 { s.step(); }
                s.k_mat[(0, 0)].re
            };
            prop_assert!(run(j + dj) > run(j));
        }
    }

    #[test]
    fn sinr_of_zero_error_is_optimum() {
        let ens = build_ensemble_matrices(&cfg(2, 10.0), 0.0, 1, 6).unwrap();
        let mut s = AnalysisState::new(&ens, 0.1).unwrap();
        s.k_mat = CMatrix::zeros(8, 8);
        s.g_mat = CMatrix::zeros(8, 8);
        let d = &ens.decomposition;
        let got = analytical_sinr(&s, d).unwrap();
        assert!((got - db(d.p_s_opt / d.p_i_opt)).abs() < 1e-12);
        let direct = sinr_inst(&ens.w_o, &d.r_s, &d.r_i).unwrap();
        assert!((got - direct).abs() < 1e-10);

        let scaled = SinrDecomposition {
            r_s: &d.r_s * Complex64::new(7.0, 0.0),
            r_i: &d.r_i * Complex64::new(7.0, 0.0),
            p_s_opt: 7.0 * d.p_s_opt,
            p_i_opt: 7.0 * d.p_i_opt,
        };
        let mut s2 = AnalysisState::new(&ens, 0.1).unwrap();
        s2.step();
        let a = analytical_sinr(&s2, d).unwrap();
        let b = analytical_sinr(&s2, &scaled).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn equivalence_gap_limits() {
        let ens = build_ensemble_matrices(&cfg(2, 10.0), 0.001, 200, 7).unwrap();
        let gap0 = differential_equivalence_gap(&ens.f, &ens.r, 0.0);
        assert!((gap0 - 2.0 / 3.0).abs() < 1e-12);

        // identical branches and a dominant step: the gap is ‖2I‖ / ‖3(I + μD)‖
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = complex_gaussian(&mut rng, 4, 1.0);
        let r1 = outer(&v, &v) + identity(4);
        let f1 = outer(&v, &v) * Complex64::new(0.5, 0.0);
        let f = [f1.clone(), f1.clone(), f1];
        let r = [r1.clone(), r1.clone(), r1];
        let mu = 1e4;
        let gap = differential_equivalence_gap(&f, &r, mu);
        let single = (identity(4) + (&f[0] - &r[0]) * Complex64::new(mu, 0.0)) * Complex64::new(3.0, 0.0);
        let expect = (identity(4) * Complex64::new(2.0, 0.0)).norm() / single.norm();
        assert!((gap - expect).abs() < 1e-12);
        assert!(gap < 1e-3);
    }

    #[test]
    fn optimum_errors_match_sampling() {
        // Monte-Carlo |e_o1|² against the closed form
        let c = cfg(2, 10.0);
        let ens = build_ensemble_matrices(&c, 0.0, 1, 8).unwrap();
        let codes = make_spreading_codes(2, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch: Vec<_> = (0..2).map(|_| ChannelMatrix::flat(8, Complex64::new(1.0, 0.0))).collect();
        let z = CVector::zeros(8);
        let mut acc = 0.0;
        let n = 40_000;
        for _ in 0..n {
            let b0: Vec<_> = (0..2).map(|_| crate::signal::Symbol::random(&mut rng)).collect();
            let b1: Vec<_> = (0..2).map(|_| crate::signal::Symbol::random(&mut rng)).collect();
            let r0 = crate::signal::received_vector(&c, &ch, &codes, &b0, &z, c.noise_variance(), &mut rng).unwrap();
            let r1 = crate::signal::received_vector(&c, &ch, &codes, &b1, &z, c.noise_variance(), &mut rng).unwrap();
            let e = ens.w_o.dotc(&r1) * b0[0].value() - ens.w_o.dotc(&r0) * b1[0].value();
            acc += e.norm_sqr();
        }
        let sampled = acc / n as f64;
        assert!((sampled - ens.j_min[0]).abs() < 0.03 * ens.j_min[0].max(0.05), "{sampled} vs {}", ens.j_min[0]);
    }
}
