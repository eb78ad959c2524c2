//! Browser front end: fading statistics, per-symbol SINR curves and the
//! mixing weights, computed in wasm and drawn by `www/index.html`.

use bimmse::fading::{clarke_generate, DEFAULT_SCATTERERS};
use bimmse::harness::{parse_algorithm_list, run_experiment, AlgorithmId, ExperimentConfig};
use bimmse::oracle::bessel_j0;
use wasm_bindgen::prelude::*;

const FADING_SAMPLES: usize = 20_000;

fn experiment(algorithms: &str, users: usize, snr_db: f64, fd_ts: f64, packets: usize, seed: u32) -> bimmse::Result<ExperimentConfig> {
    let ids = parse_algorithm_list(algorithms)?;
    let mut c = ExperimentConfig::new(&ids);
    c.system.users = users;
    c.system.amplitudes = vec![1.0; users];
    c.system.snr_db = snr_db;
    c.system.seed = seed.into();
    c.fading_rates = vec![fd_ts];
    c.n_packets = packets;
    c.validate()?;
    Ok(c)
}

/// Estimated lag autocorrelation of one fading track, followed by `J0(2π fd l)`.
pub fn autocorrelation(fd_ts: f64, lags: usize, seed: u32) -> bimmse::Result<Vec<f64>> {
    let track = clarke_generate(fd_ts, FADING_SAMPLES, DEFAULT_SCATTERERS, seed.into())?;
    let mut out: Vec<f64> = (0..=lags).map(|l| track.autocorrelation(l).re).collect();
    out.extend((0..=lags).map(|l| bessel_j0(2.0 * std::f64::consts::PI * fd_ts * l as f64)));
    Ok(out)
}

/// Packet-averaged SINR/SNR_i curves, one block of `n_symbols` per algorithm.
pub fn curves(algorithms: &str, users: usize, snr_db: f64, fd_ts: f64, packets: usize, seed: u32) -> bimmse::Result<Vec<f64>> {
    let c = experiment(algorithms, users, snr_db, fd_ts, packets, seed)?;
    let run = run_experiment(&c)?;
    Ok(run
        .algorithms
        .iter()
        .flat_map(|a| (0..a.series.len()).map(|i| a.series.mean_sinr_over_snr(i)).collect::<Vec<_>>())
        .collect())
}

/// Packet-averaged mixing weights of bi-cg-mix, as `ρ1, ρ2, ρ3` per symbol.
pub fn mixing(fd_ts: f64, users: usize, packets: usize, seed: u32) -> bimmse::Result<Vec<f64>> {
    let c = experiment(AlgorithmId::BiCgMixing.name(), users, 15.0, fd_ts, packets, seed)?;
    let run = run_experiment(&c)?;
    let a = &run.algorithms[0];
    Ok((0..a.series.len()).flat_map(|i| a.mean_rho(i).unwrap_or([f64::NAN; 3])).collect())
}

fn js(e: bimmse::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn algorithm_ids() -> String {
    AlgorithmId::ALL.map(AlgorithmId::name).join(",")
}

#[wasm_bindgen]
pub fn fading_autocorrelation(fd_ts: f64, lags: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    autocorrelation(fd_ts, lags, seed).map_err(js)
}

#[wasm_bindgen]
pub fn sinr_curves(algorithms: &str, users: usize, snr_db: f64, fd_ts: f64, packets: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    curves(algorithms, users, snr_db, fd_ts, packets, seed).map_err(js)
}

#[wasm_bindgen]
pub fn mixing_weights(fd_ts: f64, users: usize, packets: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    mixing(fd_ts, users, packets, seed).map_err(js)
}
