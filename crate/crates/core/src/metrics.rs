//! Output SINR, SINR normalised by the instantaneous input SNR, and bit-error
//! accounting.

use crate::error::{Error, Result};
use crate::linalg::{db, quad_form, CMatrix, CVector};
use crate::signal::{Scene, Symbol};

/// `wᴴR_S w / wᴴR_I w` in dB.
pub fn sinr_inst(w: &CVector, r_s: &CMatrix, r_i: &CMatrix) -> Result<f64> {
    let num = quad_form(r_s, w);
    let den = quad_form(r_i, w);
    sinr_db(num, den)
}

/// Same ratio evaluated through the scene's signatures.
pub fn sinr_inst_scene(w: &CVector, scene: &Scene) -> Result<f64> {
    let (num, den) = scene.powers(w);
    sinr_db(num, den)
}

fn sinr_db(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!("interference power {den}")));
    }
    Ok(db(num / den))
}

/// `SINR − SNR_i`, both in dB.
pub fn sinr_over_snr(sinr_db: f64, snr_inst_db: f64) -> f64 {
    sinr_db - snr_inst_db
}

/// Per-symbol curves of one stream, or the packet average of many.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    /// Sum over packets of SINR/SNR_i in dB, per symbol.
    pub sinr_over_snr_sum: Vec<f64>,
    /// Sum over packets of `wᴴR_S w` and `wᴴR_I w`, per symbol.
    pub signal_power_sum: Vec<f64>,
    pub interference_power_sum: Vec<f64>,
    /// Sum over packets of `|wᴴr|²`, per symbol.
    pub output_power_sum: Vec<f64>,
    /// Bit errors and bits counted up to and including each symbol.
    pub cumulative_errors: Vec<u64>,
    pub cumulative_bits: Vec<u64>,
    /// Number of packets folded in.
    pub packets: usize,
    running_errors: u64,
    running_bits: u64,
}

impl MetricSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            sinr_over_snr_sum: Vec::with_capacity(n),
            signal_power_sum: Vec::with_capacity(n),
            interference_power_sum: Vec::with_capacity(n),
            output_power_sum: Vec::with_capacity(n),
            cumulative_errors: Vec::with_capacity(n),
            cumulative_bits: Vec::with_capacity(n),
            packets: 1,
            running_errors: 0,
            running_bits: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.sinr_over_snr_sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sinr_over_snr_sum.is_empty()
    }

    /// Appends one symbol's measurements.
    pub fn push(&mut self, sinr_over_snr_db: f64, powers: (f64, f64), output_power: f64, bit: Option<(Symbol, Symbol)>) {
        self.sinr_over_snr_sum.push(sinr_over_snr_db);
        self.signal_power_sum.push(powers.0);
        self.interference_power_sum.push(powers.1);
        self.output_power_sum.push(output_power);
        if let Some((detected, truth)) = bit {
            self.ber_update(detected, truth);
        }
        self.cumulative_errors.push(self.running_errors);
        self.cumulative_bits.push(self.running_bits);
    }

    pub fn ber_update(&mut self, detected: Symbol, truth: Symbol) {
        self.running_bits += 1;
        if detected != truth {
            self.running_errors += 1;
        }
    }

    pub fn errors(&self) -> u64 {
        self.running_errors
    }

    pub fn bits(&self) -> u64 {
        self.running_bits
    }

    /// Overall BER, `None` when no bits were counted.
    pub fn ber(&self) -> Option<f64> {
        (self.running_bits > 0).then(|| self.running_errors as f64 / self.running_bits as f64)
    }

    /// Cumulative BER at symbol `i`.
    pub fn ber_at(&self, i: usize) -> Option<f64> {
        let bits = self.cumulative_bits[i];
        (bits > 0).then(|| self.cumulative_errors[i] as f64 / bits as f64)
    }

    /// BER over the symbols in `range`, pooled across packets.
    pub fn ber_between(&self, range: std::ops::Range<usize>) -> Option<f64> {
        let before = |v: &Vec<u64>| if range.start == 0 { 0 } else { v[range.start - 1] };
        let last = range.end - 1;
        let bits = self.cumulative_bits[last] - before(&self.cumulative_bits);
        let errors = self.cumulative_errors[last] - before(&self.cumulative_errors);
        (bits > 0).then(|| errors as f64 / bits as f64)
    }

    /// Packet-averaged SINR/SNR_i at symbol `i`, dB.
    pub fn mean_sinr_over_snr(&self, i: usize) -> f64 {
        self.sinr_over_snr_sum[i] / self.packets as f64
    }

    pub fn mean_output_power(&self, i: usize) -> f64 {
        self.output_power_sum[i] / self.packets as f64
    }

    /// Average of the packet-averaged SINR/SNR_i curve over `range`.
    pub fn window_mean(&self, range: std::ops::Range<usize>) -> f64 {
        let n = range.len() as f64;
        range.map(|i| self.mean_sinr_over_snr(i)).sum::<f64>() / n
    }

    /// `Σ signal / Σ interference` over `range` and packets, dB.
    pub fn pooled_sinr_db(&self, range: std::ops::Range<usize>) -> f64 {
        let s: f64 = self.signal_power_sum[range.clone()].iter().sum();
        let i: f64 = self.interference_power_sum[range].iter().sum();
        db(s / i)
    }

    /// Folds another series of equal length in. Associative, so packets can
    /// be merged in any grouping as long as the order is fixed.
    pub fn merge(&mut self, other: &MetricSeries) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let add = |a: &mut Vec<f64>, b: &Vec<f64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.sinr_over_snr_sum, &other.sinr_over_snr_sum);
        add(&mut self.signal_power_sum, &other.signal_power_sum);
        add(&mut self.interference_power_sum, &other.interference_power_sum);
        add(&mut self.output_power_sum, &other.output_power_sum);
        let addu = |a: &mut Vec<u64>, b: &Vec<u64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        addu(&mut self.cumulative_errors, &other.cumulative_errors);
        addu(&mut self.cumulative_bits, &other.cumulative_bits);
        self.packets += other.packets;
        self.running_errors += other.running_errors;
        self.running_bits += other.running_bits;
        Ok(())
    }
}
