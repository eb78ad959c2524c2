//! Transmit-side signal models: DBPSK symbol streams, random spreading codes,
//! banded multipath channel matrices and the single-hop / amplify-and-forward
//! received vectors.
//!
//! Dimensions follow `M = N + L_p − 1`: a length-`N` code convolved with
//! `L_p` chip-spaced path gains.

use std::collections::HashSet;
use std::ops::Mul;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linalg::{complex_gaussian, from_db, CMatrix, CVector, ZERO};

/// Antipodal symbol, `+1` or `−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(i8);

impl Symbol {
    pub const PLUS: Symbol = Symbol(1);
    pub const MINUS: Symbol = Symbol(-1);

    /// Sign decision; zero maps to `+1`.
    pub fn from_sign(x: f64) -> Self {
        if x < 0.0 {
            Symbol::MINUS
        } else {
            Symbol::PLUS
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Symbol::PLUS
        } else {
            Symbol::MINUS
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0 as f64
    }
}

impl Mul for Symbol {
    type Output = Symbol;
    fn mul(self, rhs: Symbol) -> Symbol {
        Symbol(self.0 * rhs.0)
    }
}

impl Default for Symbol {
    fn default() -> Self {
        Symbol::PLUS
    }
}

/// Differential encoding `b[i] = a[i]·b[i−1]` with `b[−1] = reference`.
pub fn dbpsk_encode(data: &[Symbol], reference: Symbol) -> Vec<Symbol> {
    let mut prev = reference;
    data.iter()
        .map(|&a| {
            prev = a * prev;
            prev
        })
        .collect()
}

/// Inverse of [`dbpsk_encode`]: `a[i] = b[i]·b[i−1]`.
pub fn dbpsk_decode(symbols: &[Symbol], reference: Symbol) -> Vec<Symbol> {
    let mut prev = reference;
    symbols
        .iter()
        .map(|&b| {
            let a = b * prev;
            prev = b;
            a
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub users: usize,
    pub chips: usize,
    pub paths: usize,
    pub amplitudes: Vec<f64>,
    pub snr_db: f64,
    pub n_symbols: usize,
    pub training_len: usize,
    pub seed: u64,
}

impl SystemConfig {
    /// Equal unit amplitudes for every user.
    pub fn new(users: usize, chips: usize, paths: usize, snr_db: f64) -> Self {
        Self {
            users,
            chips,
            paths,
            amplitudes: vec![1.0; users],
            snr_db,
            n_symbols: 500,
            training_len: 150,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::invalid("at least one user is required"));
        }
        if self.chips < 2 {
            return Err(Error::invalid("spreading factor must be at least 2"));
        }
        if self.paths == 0 || self.paths >= self.chips {
            return Err(Error::invalid(format!(
                "path count must satisfy 1 <= L_p < N, got L_p={} N={}",
                self.paths, self.chips
            )));
        }
        if self.amplitudes.len() != self.users {
            return Err(Error::invalid(format!(
                "{} amplitudes for {} users",
                self.amplitudes.len(),
                self.users
            )));
        }
        if self.amplitudes.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::invalid("amplitudes must be positive"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::invalid("snr_db must be finite"));
        }
        Ok(())
    }

    /// Received vector length `N + L_p − 1`.
    pub fn m(&self) -> usize {
        self.chips + self.paths - 1
    }

    /// Complex noise variance per chip. The SNR is referenced to user 1's
    /// average received symbol energy `A₁²·E‖H₁c₁‖² = A₁²`.
    pub fn noise_variance(&self) -> f64 {
        self.amplitudes[0].powi(2) / from_db(self.snr_db)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CooperativeConfig {
    pub n_relays: usize,
    pub source_gains: Vec<f64>,
    pub relay_gains: Vec<f64>,
}

impl CooperativeConfig {
    pub fn new(n_relays: usize, users: usize) -> Self {
        Self {
            n_relays,
            source_gains: vec![1.0; users],
            relay_gains: vec![1.0; n_relays],
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if self.n_relays == 0 {
            return Err(Error::invalid("at least one relay is required"));
        }
        check_len(users, self.source_gains.len())?;
        check_len(self.n_relays, self.relay_gains.len())?;
        if self
            .source_gains
            .iter()
            .chain(&self.relay_gains)
            .any(|&g| !(g > 0.0))
        {
            return Err(Error::invalid("relay and source gains must be positive"));
        }
        Ok(())
    }
}

/// Real `±1/√N` spreading sequence, reused for every symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingCode {
    pub chips: Vec<f64>,
}

impl SpreadingCode {
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// The code as a complex vector zero-padded to `m` entries.
    pub fn padded(&self, m: usize) -> CVector {
        CVector::from_fn(m, |i, _| {
            Complex64::new(self.chips.get(i).copied().unwrap_or(0.0), 0.0)
        })
    }
}

/// `K` distinct random binary codes. Codes that coincide up to sign are
/// redrawn, so at most `2^(N−1)` codes exist for a given `N`.
pub fn make_spreading_codes(users: usize, chips: usize, seed: u64) -> Result<Vec<SpreadingCode>> {
    if users == 0 {
        return Err(Error::invalid("at least one code is required"));
    }
    if chips < 2 {
        return Err(Error::invalid("spreading factor must be at least 2"));
    }
    let capacity = if chips > usize::BITS as usize {
        usize::MAX
    } else {
        1usize << (chips - 1)
    };
    if users > capacity {
        return Err(Error::invalid(format!(
            "cannot draw {users} distinct codes of length {chips}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = 1.0 / (chips as f64).sqrt();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut codes = Vec::with_capacity(users);
    while codes.len() < users {
        let bits: Vec<bool> = (0..chips).map(|_| rng.random()).collect();
        // canonical sign: first chip positive
        let canon: Vec<bool> = if bits[0] {
            bits.clone()
        } else {
            bits.iter().map(|b| !b).collect()
        };
        if seen.insert(canon) {
            codes.push(SpreadingCode {
                chips: bits.iter().map(|&b| if b { amp } else { -amp }).collect(),
            });
        }
    }
    Ok(codes)
}

/// Banded `M × N` convolution operator for one user's chip-spaced paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    chips: usize,
    path_gains: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn new(chips: usize, path_gains: Vec<Complex64>) -> Result<Self> {
        if path_gains.is_empty() || path_gains.len() >= chips {
            return Err(Error::invalid(format!(
                "need 1 <= paths < chips, got {} paths for {chips} chips",
                path_gains.len()
            )));
        }
        Ok(Self { chips, path_gains })
    }

    /// Independently faded paths sharing unit total power: each gain is
    /// scaled by `1/√L_p`.
    pub fn from_fading(chips: usize, path_gains: &[Complex64]) -> Result<Self> {
        let scale = 1.0 / (path_gains.len().max(1) as f64).sqrt();
        Self::new(chips, path_gains.iter().map(|g| g * scale).collect())
    }

    /// Single-path channel with gain `h`.
    pub fn flat(chips: usize, h: Complex64) -> Self {
        Self {
            chips,
            path_gains: vec![h],
        }
    }

    pub fn path_gains(&self) -> &[Complex64] {
        &self.path_gains
    }

    pub fn rows(&self) -> usize {
        self.chips + self.path_gains.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.chips
    }

    /// Dense form: column `j` holds the path gains shifted down by `j`.
    pub fn to_matrix(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.rows(), self.chips);
        for j in 0..self.chips {
            for (l, &g) in self.path_gains.iter().enumerate() {
                h[(j + l, j)] = g;
            }
        }
        h
    }

    /// `H c` evaluated as a convolution.
    pub fn apply(&self, code: &SpreadingCode) -> CVector {
        let mut y = CVector::zeros(self.rows());
        for (j, &c) in code.chips.iter().enumerate() {
            for (l, &g) in self.path_gains.iter().enumerate() {
                y[j + l] += g * c;
            }
        }
        y
    }
}

/// The three most recent received vectors and the symbols attached to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedWindow {
    pub r_now: CVector,
    pub r_prev1: CVector,
    pub r_prev2: CVector,
    pub b_now: Symbol,
    pub b_prev1: Symbol,
    pub b_prev2: Symbol,
}

impl ReceivedWindow {
    pub fn dim(&self) -> usize {
        self.r_now.len()
    }

    pub fn check(&self) -> Result<()> {
        let m = self.r_now.len();
        check_len(m, self.r_prev1.len())?;
        check_len(m, self.r_prev2.len())
    }
}

/// Intersymbol interference in window `i`: the `(L_p − 1)`-chip tail of every
/// user's previous-symbol convolution, folded onto the head of the window.
pub fn isi_vector(
    config: &SystemConfig,
    prev_channels: &[ChannelMatrix],
    codes: &[SpreadingCode],
    prev_symbols: &[Symbol],
) -> Result<CVector> {
    let m = config.m();
    let mut eta = CVector::zeros(m);
    for sig in isi_signatures(config, prev_channels, codes)? {
        let (k, s) = sig;
        eta += s * Complex64::new(prev_symbols[k].value(), 0.0);
    }
    Ok(eta)
}

/// Per-user ISI signature vectors (without the symbol); empty for `L_p = 1`.
pub(crate) fn isi_signatures(
    config: &SystemConfig,
    prev_channels: &[ChannelMatrix],
    codes: &[SpreadingCode],
) -> Result<Vec<(usize, CVector)>> {
    check_len(config.users, prev_channels.len())?;
    check_len(config.users, codes.len())?;
    let (m, n) = (config.m(), config.chips);
    if config.paths == 1 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(config.users);
    for k in 0..config.users {
        let full = prev_channels[k].apply(&codes[k]) * Complex64::new(config.amplitudes[k], 0.0);
        let mut tail = CVector::zeros(m);
        for (dst, src) in (n..m).enumerate() {
            tail[dst] = full[src];
        }
        out.push((k, tail));
    }
    Ok(out)
}

/// `Σ_k A_k b_k H_k c_k + η + n` for one symbol interval.
pub fn received_vector<R: Rng + ?Sized>(
    config: &SystemConfig,
    channels: &[ChannelMatrix],
    codes: &[SpreadingCode],
    symbols: &[Symbol],
    isi: &CVector,
    noise_power: f64,
    rng: &mut R,
) -> Result<CVector> {
    let m = config.m();
    check_len(config.users, channels.len())?;
    check_len(config.users, codes.len())?;
    check_len(config.users, symbols.len())?;
    check_len(m, isi.len())?;
    let mut r = isi.clone();
    for k in 0..config.users {
        check_len(m, channels[k].rows())?;
        check_len(config.chips, codes[k].len())?;
        let gain = Complex64::new(config.amplitudes[k] * symbols[k].value(), 0.0);
        r += channels[k].apply(&codes[k]) * gain;
    }
    if noise_power > 0.0 {
        r += complex_gaussian(rng, m, noise_power);
    }
    Ok(r)
}

/// Two-hop amplify-and-forward received vector at the destination:
///
/// ```text
/// Σ_n Σ_k a_s,k a_r,n h_sr[n][k] h_rd[n] c_k b_k + Σ_n a_r,n h_rd[n] n_r,n + n_d
/// ```
///
/// `hop1[n][k]` is the user-`k` → relay-`n` gain, `hop2[n]` the relay-`n` →
/// destination gain. `noise_powers` is `(relay, destination)` per-chip variance.
#[allow(clippy::too_many_arguments)]
pub fn cooperative_received_vector<R: Rng + ?Sized>(
    coop: &CooperativeConfig,
    config: &SystemConfig,
    hop1: &[Vec<Complex64>],
    hop2: &[Complex64],
    codes: &[SpreadingCode],
    symbols: &[Symbol],
    noise_powers: (f64, f64),
    rng: &mut R,
) -> Result<CVector> {
    coop.validate(config.users)?;
    check_len(coop.n_relays, hop1.len())?;
    check_len(coop.n_relays, hop2.len())?;
    check_len(config.users, codes.len())?;
    check_len(config.users, symbols.len())?;
    let m = config.m();
    let (relay_noise, dest_noise) = noise_powers;
    let mut r = CVector::zeros(m);
    for n in 0..coop.n_relays {
        check_len(config.users, hop1[n].len())?;
        let forward = hop2[n] * coop.relay_gains[n];
        let mut at_relay = CVector::zeros(m);
        for k in 0..config.users {
            let g = hop1[n][k] * coop.source_gains[k] * symbols[k].value();
            at_relay += codes[k].padded(m) * g;
        }
        if relay_noise > 0.0 {
            at_relay += complex_gaussian(rng, m, relay_noise);
        }
        r += at_relay * forward;
    }
    if dest_noise > 0.0 {
        r += complex_gaussian(rng, m, dest_noise);
    }
    Ok(r)
}

/// Genie-side description of one received vector: every user's effective
/// signature, the ISI signatures and the white-noise level. Drives the
/// known-channel MMSE bound and the instantaneous SINR metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// `A_k H_k[i] c_k` (or the composite relay gain times `c_k`).
    pub signatures: Vec<CVector>,
    /// Previous-symbol tails, treated as interference.
    pub isi: Vec<CVector>,
    /// Per-chip complex noise variance (relay noise folded in for AF).
    pub noise_variance: f64,
}

impl Scene {
    pub fn dim(&self) -> usize {
        self.signatures[0].len()
    }

    pub fn desired(&self) -> &CVector {
        &self.signatures[0]
    }

    /// Instantaneous input SNR of user 1: `‖s₁‖² / σ²`.
    pub fn snr_inst(&self) -> f64 {
        self.signatures[0].norm_squared() / self.noise_variance
    }

    /// Signal covariance `s₁s₁ᴴ`.
    pub fn signal_covariance(&self) -> CMatrix {
        let s = &self.signatures[0];
        s * s.adjoint()
    }

    /// Interference-plus-noise covariance.
    pub fn interference_covariance(&self) -> CMatrix {
        let m = self.dim();
        let mut r = CMatrix::identity(m, m) * Complex64::new(self.noise_variance, 0.0);
        for s in self.signatures.iter().skip(1).chain(&self.isi) {
            r += s * s.adjoint();
        }
        r
    }

    /// `(wᴴR_S w, wᴴR_I w)` evaluated through the signatures.
    pub fn powers(&self, w: &CVector) -> (f64, f64) {
        let signal = w.dotc(&self.signatures[0]).norm_sqr();
        let mut interference = self.noise_variance * w.norm_squared();
        for s in self.signatures.iter().skip(1).chain(&self.isi) {
            interference += w.dotc(s).norm_sqr();
        }
        (signal, interference)
    }
}

/// Builds the single-hop scene for symbol `i`.
pub fn single_hop_scene(
    config: &SystemConfig,
    channels: &[ChannelMatrix],
    prev_channels: Option<&[ChannelMatrix]>,
    codes: &[SpreadingCode],
) -> Result<Scene> {
    check_len(config.users, channels.len())?;
    let signatures = (0..config.users)
        .map(|k| channels[k].apply(&codes[k]) * Complex64::new(config.amplitudes[k], 0.0))
        .collect();
    let isi = match prev_channels {
        Some(prev) => isi_signatures(config, prev, codes)?
            .into_iter()
            .map(|(_, s)| s)
            .collect(),
        None => Vec::new(),
    };
    Ok(Scene {
        signatures,
        isi,
        noise_variance: config.noise_variance(),
    })
}

/// Builds the AF scene: composite per-user gains and the relay noise
/// amplified by the second hop.
pub fn cooperative_scene(
    coop: &CooperativeConfig,
    config: &SystemConfig,
    hop1: &[Vec<Complex64>],
    hop2: &[Complex64],
    codes: &[SpreadingCode],
    noise_powers: (f64, f64),
) -> Result<Scene> {
    check_len(coop.n_relays, hop1.len())?;
    check_len(coop.n_relays, hop2.len())?;
    let m = config.m();
    let signatures = (0..config.users)
        .map(|k| {
            let g: Complex64 = (0..coop.n_relays)
                .map(|n| hop1[n][k] * hop2[n] * coop.source_gains[k] * coop.relay_gains[n])
                .fold(ZERO, |a, b| a + b);
            codes[k].padded(m) * g
        })
        .collect();
    let amplified: f64 = (0..coop.n_relays)
        .map(|n| (hop2[n] * coop.relay_gains[n]).norm_sqr())
        .sum();
    Ok(Scene {
        signatures,
        isi: Vec::new(),
        noise_variance: noise_powers.0 * amplified + noise_powers.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::relative_distance;
    use proptest::prelude::*;
    use rand::Rng;

    fn sym(v: &[i8]) -> Vec<Symbol> {
        v.iter().map(|&x| if x > 0 { Symbol::PLUS } else { Symbol::MINUS }).collect()
    }

    #[test]
    fn dbpsk_hand_cases() {
        assert_eq!(dbpsk_encode(&sym(&[1, 1, 1]), Symbol::PLUS), sym(&[1, 1, 1]));
        assert_eq!(dbpsk_encode(&sym(&[-1, 1, -1]), Symbol::PLUS), sym(&[-1, -1, 1]));
    }

    proptest! {
        #[test]
        fn dbpsk_round_trip(bits in proptest::collection::vec(any::<bool>(), 100), r in any::<bool>()) {
            let a: Vec<Symbol> = bits.iter().map(|&b| if b { Symbol::PLUS } else { Symbol::MINUS }).collect();
            let reference = if r { Symbol::PLUS } else { Symbol::MINUS };
            let b = dbpsk_encode(&a, reference);
            // oracle: a[i] = b[i]·b[i−1]
            for i in 1..b.len() {
                prop_assert_eq!(a[i], b[i] * b[i - 1]);
            }
            prop_assert_eq!(dbpsk_decode(&b, reference), a);
        }
    }

    #[test]
    fn codes_are_unit_norm_and_distinct() {
        let one = make_spreading_codes(1, 4, 0).unwrap();
        let norm: f64 = one[0].chips.iter().map(|c| c * c).sum();
        assert!((norm - 1.0).abs() < 1e-12);

        let two = make_spreading_codes(2, 8, 11).unwrap();
        assert!(two[0].chips.iter().zip(&two[1].chips).any(|(a, b)| a != b));

        let eight = make_spreading_codes(8, 16, 3).unwrap();
        for j in 0..8 {
            for k in 0..8 {
                if j != k {
                    let ip: f64 = eight[j].chips.iter().zip(&eight[k].chips).map(|(a, b)| a * b).sum();
                    assert!(ip.abs() < 1.0 - 1e-12);
                }
            }
        }
        assert!(make_spreading_codes(3, 2, 0).is_err());
        assert!(make_spreading_codes(2, 2, 0).is_ok());
    }

    #[test]
    fn channel_matrix_is_banded() {
        let g = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.2)];
        let h = ChannelMatrix::new(4, g.clone()).unwrap().to_matrix();
        assert_eq!(h.shape(), (5, 4));
        for j in 0..4 {
            for i in 0..5 {
                let expect = if i >= j && i - j < 2 { g[i - j] } else { ZERO };
                assert_eq!(h[(i, j)], expect);
            }
        }
        assert!(ChannelMatrix::new(4, vec![ZERO; 4]).is_err());
    }

    #[test]
    fn single_user_clean_channel_is_padded_code() {
        let cfg = SystemConfig::new(1, 4, 1, 10.0);
        let codes = make_spreading_codes(1, 4, 1).unwrap();
        let ch = vec![ChannelMatrix::flat(4, Complex64::new(1.0, 0.0))];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS], &CVector::zeros(4), 0.0, &mut rng)
            .unwrap();
        assert_eq!(r, codes[0].padded(4));
    }

    #[test]
    fn two_user_superposition() {
        let mut cfg = SystemConfig::new(2, 8, 1, 10.0);
        cfg.amplitudes = vec![1.0, 0.7];
        let codes = make_spreading_codes(2, 8, 2).unwrap();
        let h = [Complex64::new(0.3, -0.4), Complex64::new(-1.1, 0.2)];
        let ch: Vec<_> = h.iter().map(|&g| ChannelMatrix::flat(8, g)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS; 2], &CVector::zeros(8), 0.0, &mut rng)
            .unwrap();
        let hm0 = ch[0].to_matrix();
        let hm1 = ch[1].to_matrix();
        let c0 = CVector::from_iterator(8, codes[0].chips.iter().map(|&c| Complex64::new(c, 0.0)));
        let c1 = CVector::from_iterator(8, codes[1].chips.iter().map(|&c| Complex64::new(c, 0.0)));
        let expect = hm0 * c0 + hm1 * c1 * Complex64::new(0.7, 0.0);
        assert!(relative_distance(&r, &expect) < 1e-14);
    }

    #[test]
    fn two_path_matches_explicit_convolution() {
        let cfg = SystemConfig::new(1, 8, 2, 10.0);
        let codes = make_spreading_codes(1, 8, 5).unwrap();
        let g = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let ch = vec![ChannelMatrix::new(8, g.to_vec()).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = received_vector(&cfg, &ch, &codes, &[Symbol::MINUS], &CVector::zeros(9), 0.0, &mut rng)
            .unwrap();
        // oracle: O(N·L_p) loop
        let mut conv = [0.0f64; 9];
        for n in 0..8 {
            for l in 0..2 {
                conv[n + l] += codes[0].chips[n] * g[l].re;
            }
        }
        for i in 0..9 {
            assert!((r[i] - Complex64::new(-conv[i], 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cfg = SystemConfig::new(2, 8, 1, 10.0);
        let codes = make_spreading_codes(2, 8, 2).unwrap();
        let ch = vec![ChannelMatrix::flat(8, Complex64::new(1.0, 0.0))];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS; 2], &CVector::zeros(8), 0.0, &mut rng);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn isi_is_previous_tail() {
        let cfg = SystemConfig::new(1, 4, 2, 10.0);
        let codes = make_spreading_codes(1, 4, 7).unwrap();
        let g = vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let ch = vec![ChannelMatrix::new(4, g).unwrap()];
        let eta = isi_vector(&cfg, &ch, &codes, &[Symbol::MINUS]).unwrap();
        let full = ch[0].apply(&codes[0]);
        assert_eq!(eta[0], -full[4]);
        for i in 1..5 {
            assert_eq!(eta[i], ZERO);
        }
        let flat_cfg = SystemConfig::new(1, 4, 1, 10.0);
        let flat = vec![ChannelMatrix::flat(4, Complex64::new(1.0, 0.0))];
        assert_eq!(isi_vector(&flat_cfg, &flat, &codes, &[Symbol::PLUS]).unwrap(), CVector::zeros(4));
    }

    #[test]
    fn linear_in_symbols_and_quadratic_in_amplitude() {
        let mut cfg = SystemConfig::new(2, 8, 1, 10.0);
        let codes = make_spreading_codes(2, 8, 9).unwrap();
        let ch: Vec<_> = [Complex64::new(0.2, 0.9), Complex64::new(-0.4, 0.1)]
            .iter()
            .map(|&g| ChannelMatrix::flat(8, g))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = CVector::zeros(8);
        let pp = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS, Symbol::PLUS], &z, 0.0, &mut rng).unwrap();
        let mp = received_vector(&cfg, &ch, &codes, &[Symbol::MINUS, Symbol::PLUS], &z, 0.0, &mut rng).unwrap();
        let user1 = (&pp - &mp) * Complex64::new(0.5, 0.0);
        cfg.amplitudes[0] = 2.0;
        let pp2 = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS, Symbol::PLUS], &z, 0.0, &mut rng).unwrap();
        let mp2 = received_vector(&cfg, &ch, &codes, &[Symbol::MINUS, Symbol::PLUS], &z, 0.0, &mut rng).unwrap();
        let user1_doubled = (&pp2 - &mp2) * Complex64::new(0.5, 0.0);
        let ratio = user1_doubled.norm_squared() / user1.norm_squared();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn snr_calibration() {
        let cfg = SystemConfig::new(1, 16, 1, 12.0);
        let codes = make_spreading_codes(1, 16, 1).unwrap();
        let fading = crate::fading::clarke_generate(0.01, 10_000, 20, 77).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut es, mut noise) = (0.0, 0.0);
        let z = CVector::zeros(16);
        for &h in &fading.gains {
            let ch = [ChannelMatrix::flat(16, h)];
            let clean = received_vector(&cfg, &ch, &codes, &[Symbol::PLUS], &z, 0.0, &mut rng).unwrap();
            let noisy = clean.clone() + complex_gaussian(&mut rng, 16, cfg.noise_variance());
            es += clean.norm_squared();
            noise += (noisy - clean).norm_squared() / 16.0;
        }
        let snr = crate::linalg::db(es / noise);
        assert!((snr - 12.0).abs() < 0.3, "empirical SNR {snr}");
    }

    #[test]
    fn transparent_relay_matches_single_hop() {
        let cfg = SystemConfig::new(1, 8, 1, 10.0);
        let coop = CooperativeConfig::new(1, 1);
        let codes = make_spreading_codes(1, 8, 4).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = cooperative_received_vector(&coop, &cfg, &[vec![one]], &[one], &codes, &[Symbol::MINUS], (0.0, 0.0), &mut rng)
            .unwrap();
        let direct = received_vector(&cfg, &[ChannelMatrix::flat(8, one)], &codes, &[Symbol::MINUS], &CVector::zeros(8), 0.0, &mut rng)
            .unwrap();
        assert_eq!(r, direct);
    }

    #[test]
    fn severed_second_hop_leaves_destination_noise() {
        let cfg = SystemConfig::new(2, 8, 1, 10.0);
        let coop = CooperativeConfig::new(2, 2);
        let codes = make_spreading_codes(2, 8, 4).unwrap();
        let hop1 = vec![vec![Complex64::new(0.8, 0.1); 2]; 2];
        let hop2 = vec![ZERO; 2];
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let r = cooperative_received_vector(&coop, &cfg, &hop1, &hop2, &codes, &[Symbol::PLUS; 2], (0.5, 0.2), &mut a)
            .unwrap();
        // replay the same draws: relay noise per relay, then destination noise
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let _ = complex_gaussian(&mut b, 8, 0.5);
        let _ = complex_gaussian(&mut b, 8, 0.5);
        let dest = complex_gaussian(&mut b, 8, 0.2);
        assert!(relative_distance(&r, &dest) < 1e-15);
    }

    #[test]
    fn af_matches_nested_loop_oracle() {
        let cfg = SystemConfig::new(2, 8, 1, 10.0);
        let mut coop = CooperativeConfig::new(2, 2);
        coop.source_gains = vec![0.9, 1.3];
        coop.relay_gains = vec![1.1, 0.6];
        let codes = make_spreading_codes(2, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut cg = || Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let hop1 = vec![vec![cg(), cg()], vec![cg(), cg()]];
        let hop2 = vec![cg(), cg()];
        let symbols = [Symbol::MINUS, Symbol::PLUS];
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let r = cooperative_received_vector(&coop, &cfg, &hop1, &hop2, &codes, &symbols, (0.0, 0.0), &mut rng2)
            .unwrap();
        for chip in 0..8 {
            let mut acc = ZERO;
            for n in 0..2 {
                for k in 0..2 {
                    acc += hop1[n][k] * hop2[n] * coop.source_gains[k] * coop.relay_gains[n]
                        * codes[k].chips[chip]
                        * symbols[k].value();
                }
            }
            assert!((r[chip] - acc).norm() < 1e-14);
        }
        let scene = cooperative_scene(&coop, &cfg, &hop1, &hop2, &codes, (0.0, 0.0)).unwrap();
        let rebuilt = &scene.signatures[0] * Complex64::new(-1.0, 0.0) + &scene.signatures[1];
        assert!(relative_distance(&r, &rebuilt) < 1e-13);
    }

    #[test]
    fn scene_powers_match_covariances() {
        let cfg = SystemConfig::new(3, 8, 2, 10.0);
        let codes = make_spreading_codes(3, 8, 4).unwrap();
        let ch: Vec<_> = (0..3)
            .map(|k| ChannelMatrix::new(8, vec![Complex64::new(0.3 * k as f64 + 0.2, 0.1), Complex64::new(0.1, -0.4)]).unwrap())
            .collect();
        let scene = single_hop_scene(&cfg, &ch, Some(&ch), &codes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = complex_gaussian(&mut rng, 9, 1.0);
        let (s, i) = scene.powers(&w);
        let rs = crate::linalg::quad_form(&scene.signal_covariance(), &w);
        let ri = crate::linalg::quad_form(&scene.interference_covariance(), &w);
        assert!((s - rs).abs() < 1e-12 * rs.max(1.0));
        assert!((i - ri).abs() < 1e-12 * ri.max(1.0));
    }
}
