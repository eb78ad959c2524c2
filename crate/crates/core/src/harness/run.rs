use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;
use std::time::Duration;
#[cfg(not(target_arch = "wasm32"))]
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Sweep};
use crate::harness::packet::{generate_packet, run_receiver, PacketTrace};
use crate::harness::registry::AlgorithmId;
use crate::metrics::MetricSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmResult {
    pub id: AlgorithmId,
    /// Packet-aggregated curves.
    pub series: MetricSeries,
    /// Packet-summed branch weights per symbol.
    pub rho_sum: Option<Vec<[f64; 3]>>,
    /// Per-packet mean SINR/SNR_i over the steady-state window, dB.
    pub packet_steady: Vec<f64>,
    /// Order-dependent combination of the per-packet input digests. Equal
    /// values across algorithms certify that they consumed identical data.
    pub audit: u64,
}

impl AlgorithmResult {
    /// Packet-averaged branch weights at symbol `i`.
    pub fn mean_rho(&self, i: usize) -> Option<[f64; 3]> {
        let p = self.series.packets as f64;
        self.rho_sum.as_ref().map(|r| r[i].map(|x| x / p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_hash: u64,
    pub packets: usize,
    pub fading_rate: f64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithms: Vec<AlgorithmResult>,
    pub metadata: RunMetadata,
}

impl RunResult {
    pub fn get(&self, id: AlgorithmId) -> Option<&AlgorithmResult> {
        self.algorithms.iter().find(|a| a.id == id)
    }

    /// All algorithms consumed the same received vectors.
    pub fn paired(&self) -> bool {
        self.algorithms.windows(2).all(|w| w[0].audit == w[1].audit)
    }
}

/// Hash of everything that shapes the numbers; the output path is left out.
fn config_hash(config: &ExperimentConfig) -> u64 {
    let mut c = config.clone();
    c.output = None;
    let mut h = DefaultHasher::new();
    h.write(format!("{c:?}").as_bytes());
    h.finish()
}

// `Instant` panics on bare wasm, where runs report zero wall time.
#[cfg(not(target_arch = "wasm32"))]
fn stopwatch() -> impl Fn() -> Duration {
    let start = Instant::now();
    move || start.elapsed()
}

#[cfg(target_arch = "wasm32")]
fn stopwatch() -> impl Fn() -> Duration {
    || Duration::ZERO
}

/// One packet through every configured algorithm.
pub fn run_packet(config: &ExperimentConfig, fd_ts: f64, index: usize) -> Result<Vec<PacketTrace>> {
    let sys = &config.system;
    let packet = generate_packet(sys, config.cooperative.as_ref(), fd_ts, sys.seed, index)?;
    config
        .algorithms
        .iter()
        .map(|spec| {
            let mut rx = spec.id.build(packet.code.clone(), &spec.params)?;
            run_receiver(rx.as_mut(), &packet, sys.training_len)
        })
        .collect()
}

/// Runs every packet at fading rate `fd_ts` and merges the results in packet
/// order, so the aggregate is identical however the packets were scheduled.
pub fn run_condition(config: &ExperimentConfig, fd_ts: f64) -> Result<RunResult> {
    config.validate()?;
    let elapsed = stopwatch();
    #[cfg(feature = "parallel")]
    let traces: Vec<Result<Vec<PacketTrace>>> =
        (0..config.n_packets).into_par_iter().map(|p| run_packet(config, fd_ts, p)).collect();
    #[cfg(not(feature = "parallel"))]
    let traces: Vec<Result<Vec<PacketTrace>>> =
        (0..config.n_packets).map(|p| run_packet(config, fd_ts, p)).collect();

    let steady = config.steady_start..config.system.n_symbols;
    let mut merged: Vec<AlgorithmResult> = Vec::with_capacity(config.algorithms.len());
    for (p, packet) in traces.into_iter().enumerate() {
        let packet = packet?;
        for (a, trace) in packet.into_iter().enumerate() {
            let own = trace.series.window_mean(steady.clone());
            if p == 0 {
                merged.push(AlgorithmResult {
                    id: config.algorithms[a].id,
                    series: trace.series,
                    rho_sum: trace.rho,
                    packet_steady: vec![own],
                    audit: trace.digest,
                });
                continue;
            }
            let slot = &mut merged[a];
            slot.packet_steady.push(own);
            slot.series.merge(&trace.series)?;
            if let (Some(sum), Some(rho)) = (slot.rho_sum.as_mut(), trace.rho) {
                for (s, r) in sum.iter_mut().zip(rho) {
                    for n in 0..3 {
                        s[n] += r[n];
                    }
                }
            }
            slot.audit = slot.audit.rotate_left(5) ^ trace.digest;
        }
    }
    Ok(RunResult {
        algorithms: merged,
        metadata: RunMetadata {
            seed: config.system.seed,
            config_hash: config_hash(config),
            packets: config.n_packets,
            fading_rate: fd_ts,
            wall_time: elapsed(),
        },
    })
}

/// Single condition at the first configured fading rate.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    run_condition(config, config.fading_rates[0])
}

/// One result per sweep point, tagged with the swept value.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<(f64, RunResult)>> {
    config.validate()?;
    match &config.sweep {
        Sweep::VsSymbol => Err(Error::Config("per-symbol runs are not a sweep".into())),
        Sweep::VsFadingRate => config
            .fading_rates
            .iter()
            .map(|&f| Ok((f, run_condition(config, f)?)))
            .collect(),
        Sweep::VsUsers(users) => users
            .iter()
            .map(|&k| {
                let mut c = config.clone();
                c.system.users = k;
                c.system.amplitudes = vec![1.0; k];
                if let Some(coop) = c.cooperative.as_mut() {
                    coop.source_gains = vec![1.0; k];
                }
                Ok((k as f64, run_experiment(&c)?))
            })
            .collect(),
        Sweep::VsSnr(snrs) => snrs
            .iter()
            .map(|&s| {
                let mut c = config.clone();
                c.system.snr_db = s;
                Ok((s, run_experiment(&c)?))
            })
            .collect(),
    }
}
