use std::path::PathBuf;

use crate::bidirectional::{AdaptiveParams, WeightingMode};
use crate::error::{Error, Result};
use crate::harness::registry::AlgorithmId;
use crate::signal::{CooperativeConfig, SystemConfig};

/// One algorithm in a run, with its parameters after overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSpec {
    pub id: AlgorithmId,
    pub params: AdaptiveParams,
}

impl AlgorithmSpec {
    pub fn new(id: AlgorithmId, params: AdaptiveParams) -> Self {
        Self { id, params }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Per-symbol curves at the first fading rate.
    VsSymbol,
    /// Steady-state value at every entry of `fading_rates`.
    VsFadingRate,
    VsUsers(Vec<usize>),
    VsSnr(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub cooperative: Option<CooperativeConfig>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub fading_rates: Vec<f64>,
    pub n_packets: usize,
    pub sweep: Sweep,
    /// Symbols `[steady_start, n_symbols)` form the steady-state window.
    pub steady_start: usize,
    /// Count bit errors from the first symbol instead of from the end of
    /// training.
    pub count_training_bits: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults used throughout: 500-symbol packets, 150 training symbols,
    /// `N = 16`, `K = 8`, single path, 15 dB, `fd_ts = 0.01`, 100 packets.
    pub fn new(algorithms: &[AlgorithmId]) -> Self {
        let params = AdaptiveParams::default();
        let mut system = SystemConfig::new(8, 16, 1, 15.0);
        system.seed = 1;
        Self {
            system,
            cooperative: None,
            algorithms: algorithms.iter().map(|&id| AlgorithmSpec::new(id, params)).collect(),
            fading_rates: vec![0.01],
            n_packets: 100,
            sweep: Sweep::VsSymbol,
            steady_start: 300,
            count_training_bits: false,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm is required".into()));
        }
        if self.fading_rates.is_empty() || self.fading_rates.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(Error::Config("fading rates must be positive".into()));
        }
        if self.n_packets == 0 {
            return Err(Error::Config("packet count must be positive".into()));
        }
        if self.system.n_symbols < 3 {
            return Err(Error::Config("packets need at least 3 symbols".into()));
        }
        if self.system.training_len > self.system.n_symbols {
            return Err(Error::Config("training longer than the packet".into()));
        }
        if self.steady_start >= self.system.n_symbols {
            return Err(Error::Config("steady-state window is empty".into()));
        }
        if let Some(coop) = &self.cooperative {
            coop.validate(self.system.users)?;
            if self.system.paths != 1 {
                return Err(Error::Config("the relay model is single path".into()));
            }
        }
        match &self.sweep {
            Sweep::VsUsers(k) if k.is_empty() || k.contains(&0) => {
                return Err(Error::Config("user sweep needs positive counts".into()))
            }
            Sweep::VsSnr(s) if s.is_empty() || s.iter().any(|x| !x.is_finite()) => {
                return Err(Error::Config("SNR sweep needs finite values".into()))
            }
            _ => {}
        }
        for spec in &self.algorithms {
            spec.params.validate()?;
        }
        Ok(())
    }

    pub fn with_algorithms(mut self, ids: &[AlgorithmId]) -> Self {
        let base = AdaptiveParams::default();
        self.algorithms = ids.iter().map(|&id| AlgorithmSpec::new(id, base)).collect();
        self
    }

    /// First symbol whose bit counts towards the reported BER.
    pub fn ber_start(&self) -> usize {
        if self.count_training_bits {
            0
        } else {
            self.system.training_len
        }
    }
}

/// Weighting mode implied by an id, used by the registry.
pub(crate) fn mode_for(id: AlgorithmId) -> WeightingMode {
    use AlgorithmId::*;
    match id {
        BiNlmsSwitching | BiCgSwitching => WeightingMode::Switching,
        BiNlmsMixing | BiCgMixing => WeightingMode::Mixing,
        _ => WeightingMode::Off,
    }
}

#[cfg(feature = "cli")]
pub use file::{load_config, parse_config};

#[cfg(feature = "cli")]
mod file {
    use std::collections::BTreeMap;
    use std::path::Path;

    use serde::Deserialize;

    use super::*;

    /// On-disk layout: flat `key = value` lines. Per-algorithm overrides use
    /// dotted keys such as `params.bi-nlms.mu = 0.05`.
    #[derive(Debug, Deserialize, Default)]
    #[serde(deny_unknown_fields)]
    struct FileConfig {
        users: Option<usize>,
        chips: Option<usize>,
        paths: Option<usize>,
        snr_db: Option<f64>,
        amplitudes: Option<Vec<f64>>,
        symbols: Option<usize>,
        training: Option<usize>,
        seed: Option<u64>,
        packets: Option<usize>,
        fading_rates: Option<Vec<f64>>,
        algorithms: Option<Vec<String>>,
        sweep: Option<String>,
        sweep_values: Option<Vec<f64>>,
        steady_start: Option<usize>,
        count_training_bits: Option<bool>,
        relays: Option<usize>,
        relay_gains: Option<Vec<f64>>,
        out: Option<String>,
        mu: Option<f64>,
        lambda: Option<f64>,
        lambda_m: Option<f64>,
        lambda_e: Option<f64>,
        lambda_p: Option<f64>,
        nu: Option<f64>,
        window_m: Option<usize>,
        j_max: Option<usize>,
        delta: Option<f64>,
        max_scale: Option<f64>,
        warm_start: Option<bool>,
        lagrange: Option<bool>,
        den_floor: Option<f64>,
        #[serde(default)]
        params: BTreeMap<String, BTreeMap<String, f64>>,
    }

    fn apply_param(p: &mut AdaptiveParams, key: &str, v: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{key} must be a positive integer")))
            }
        };
        match key {
            "mu" => p.mu = v,
            "lambda" => p.lambda = v,
            "lambda_m" => p.lambda_m = v,
            "lambda_e" => p.weighting.lambda_e = v,
            "lambda_p" => p.weighting.lambda_p = v,
            "nu" => p.weighting.nu = v,
            "window_m" => p.weighting.window_m = as_count(v)?,
            "j_max" => p.j_max = as_count(v)?,
            "delta" => p.delta = v,
            "max_scale" => p.max_scale = v,
            "den_floor" => p.den_floor = v,
            _ => return Err(Error::Config(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }

    pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

        let ids = match &file.algorithms {
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<Vec<AlgorithmId>>>()?,
            None => AlgorithmId::ALL.to_vec(),
        };
        let mut cfg = ExperimentConfig::new(&ids);
        let sys = &mut cfg.system;
        if let Some(v) = file.users {
            sys.users = v;
            sys.amplitudes = vec![1.0; v];
        }
        if let Some(v) = file.chips {
            sys.chips = v;
        }
        if let Some(v) = file.paths {
            sys.paths = v;
        }
        if let Some(v) = file.snr_db {
            sys.snr_db = v;
        }
        if let Some(v) = file.amplitudes {
            sys.amplitudes = v;
        }
        if let Some(v) = file.symbols {
            sys.n_symbols = v;
        }
        if let Some(v) = file.training {
            sys.training_len = v;
        }
        if let Some(v) = file.seed {
            sys.seed = v;
        }
        if let Some(v) = file.packets {
            cfg.n_packets = v;
        }
        if let Some(v) = file.fading_rates {
            cfg.fading_rates = v;
        }
        if let Some(v) = file.steady_start {
            cfg.steady_start = v;
        }
        if let Some(v) = file.count_training_bits {
            cfg.count_training_bits = v;
        }
        if let Some(n) = file.relays {
            let mut coop = CooperativeConfig::new(n, cfg.system.users);
            if let Some(g) = file.relay_gains {
                coop.relay_gains = g;
            }
            cfg.cooperative = Some(coop);
        }
        cfg.output = file.out.map(Into::into);
        cfg.sweep = match file.sweep.as_deref() {
            None | Some("vs-symbol") => Sweep::VsSymbol,
            Some("vs-fading-rate") => Sweep::VsFadingRate,
            Some("vs-users") => Sweep::VsUsers(match &file.sweep_values {
                Some(v) => v.iter().map(|&x| x as usize).collect(),
                None => vec![2, 4, 6, 8],
            }),
            Some("vs-snr") => Sweep::VsSnr(file.sweep_values.clone().unwrap_or_else(|| vec![5.0, 10.0, 15.0, 20.0])),
            Some(other) => return Err(Error::Config(format!("unknown sweep `{other}`"))),
        };

        let globals = [
            ("mu", file.mu),
            ("lambda", file.lambda),
            ("lambda_m", file.lambda_m),
            ("lambda_e", file.lambda_e),
            ("lambda_p", file.lambda_p),
            ("nu", file.nu),
            ("window_m", file.window_m.map(|v| v as f64)),
            ("j_max", file.j_max.map(|v| v as f64)),
            ("delta", file.delta),
            ("max_scale", file.max_scale),
            ("den_floor", file.den_floor),
        ];
        for spec in cfg.algorithms.iter_mut() {
            if let Some(w) = file.warm_start {
                spec.params.warm_start = w;
            }
            if let Some(l) = file.lagrange {
                spec.params.lagrange = l;
            }
            for (key, v) in globals {
                if let Some(v) = v {
                    apply_param(&mut spec.params, key, v)?;
                }
            }
        }
        for (name, overrides) in &file.params {
            let id: AlgorithmId = name.parse()?;
            let spec = cfg
                .algorithms
                .iter_mut()
                .find(|s| s.id == id)
                .ok_or_else(|| Error::Config(format!("overrides for `{name}`, which is not selected")))?;
            for (key, &v) in overrides {
                apply_param(&mut spec.params, key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
        parse_config(&std::fs::read_to_string(path)?)
    }

}
