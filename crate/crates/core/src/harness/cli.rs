//! The `bimmse` command line. Exit status is 0 on success, 1 when an
//! acceptance criterion fails and 2 for usage or configuration errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{analytical_sinr, build_ensemble_matrices, AnalysisState};
use crate::bidirectional::AdaptiveParams;
use crate::error::{Error, Result};
use crate::harness::config::{load_config, AlgorithmSpec, ExperimentConfig, Sweep};
use crate::harness::output::{curve_points, write_curves, write_per_symbol, write_sweep, CurvePoint};
use crate::harness::registry::{parse_algorithm_list, AlgorithmId};
use crate::harness::run::{run_experiment, run_sweep, RunMetadata};
use crate::harness::validate::{run_criterion, Tier, CRITERIA, QUICK_CRITERIA};
use crate::signal::CooperativeConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Draws the ensemble matrices for `analytical`.
const ANALYTIC_ENSEMBLE: usize = 4000;

#[derive(Debug, Parser)]
#[command(name = "bimmse", version, about = "Bidirectional MMSE receivers for fast-fading DS-CDMA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// Flat `key = value` experiment file; replaces the subcommand's preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    packets: Option<usize>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated algorithm ids, e.g. `mmse,diff-cg,bi-cg`.
    #[arg(long)]
    algorithms: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// SINR/SNR_i against symbol index.
    SinrVsSymbol(RunArgs),
    /// Steady-state SINR/SNR_i against the normalised fading rate.
    SinrVsFading(RunArgs),
    /// BER against the number of users.
    BerVsUsers(RunArgs),
    /// Cumulative BER against symbol index while training.
    BerVsSymbol(RunArgs),
    /// Two-hop amplify-and-forward relay system.
    Cooperative(RunArgs),
    /// Analytical SINR recursion next to the simulated bidirectional NLMS.
    Analytical(RunArgs),
    /// Runs the acceptance criteria.
    Validate {
        /// Only the fast deterministic checks.
        #[arg(long)]
        quick: bool,
        /// Run just these criteria (repeatable).
        #[arg(long = "criterion", value_parser = clap::value_parser!(u8).range(1..=11))]
        criteria: Vec<u8>,
    },
}

fn preset(command: &Command) -> ExperimentConfig {
    use AlgorithmId::*;
    match command {
        Command::SinrVsSymbol(_) => ExperimentConfig::new(&[Mmse, ConvRls, DiffCg, BiCg, BiCgMixing]),
        Command::SinrVsFading(_) => {
            let mut c = ExperimentConfig::new(&[ConvRls, ConvCg, DiffCg, BiCg, BiCgMixing]);
            c.fading_rates = vec![0.001, 0.005, 0.01, 0.02];
            c.system.training_len = 200;
            c.sweep = Sweep::VsFadingRate;
            c
        }
        Command::BerVsUsers(_) => {
            let mut c = ExperimentConfig::new(&[ConvRls, DiffCg, BiCg, BiCgMixing]);
            c.sweep = Sweep::VsUsers(vec![2, 4, 6, 8]);
            c.count_training_bits = true;
            c
        }
        Command::BerVsSymbol(_) => {
            let mut c = ExperimentConfig::new(&[ConvRls, DiffNlms, DiffCg, BiNlms, BiCg]);
            c.system.training_len = c.system.n_symbols;
            c.count_training_bits = true;
            c
        }
        Command::Cooperative(_) => {
            let mut c = ExperimentConfig::new(&[ConvRls, DiffCg, BiCg, BiCgMixing]);
            c.cooperative = Some(CooperativeConfig::new(2, c.system.users));
            c
        }
        Command::Analytical(_) => {
            let mut c = ExperimentConfig::new(&[BiNlms]);
            c.system.users = 4;
            c.system.amplitudes = vec![1.0; 4];
            c.system.training_len = c.system.n_symbols;
            c.fading_rates = vec![0.001];
            c
        }
        Command::Validate { .. } => ExperimentConfig::new(&[Mmse]),
    }
}

/// Preset or file, then the flag overrides.
fn resolve(command: &Command, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut c = match &args.config {
        Some(path) => load_config(path)?,
        None => preset(command),
    };
    // the subcommand fixes the shape of the output
    match command {
        Command::SinrVsFading(_) => c.sweep = Sweep::VsFadingRate,
        Command::BerVsUsers(_) if !matches!(c.sweep, Sweep::VsUsers(_)) => c.sweep = Sweep::VsUsers(vec![2, 4, 6, 8]),
        Command::Cooperative(_) if c.cooperative.is_none() => {
            c.cooperative = Some(CooperativeConfig::new(2, c.system.users));
        }
        _ => {}
    }
    if !matches!(command, Command::SinrVsFading(_) | Command::BerVsUsers(_)) {
        c.sweep = Sweep::VsSymbol;
    }
    if let Some(s) = args.seed {
        c.system.seed = s;
    }
    if let Some(p) = args.packets {
        c.n_packets = p;
    }
    if let Some(list) = &args.algorithms {
        // keep any per-algorithm parameters the file gave
        let ids = parse_algorithm_list(list)?;
        let old = std::mem::take(&mut c.algorithms);
        c.algorithms = ids
            .into_iter()
            .map(|id| {
                old.iter()
                    .find(|s| s.id == id)
                    .cloned()
                    .unwrap_or_else(|| AlgorithmSpec::new(id, AdaptiveParams::default()))
            })
            .collect();
    }
    if let Some(out) = &args.out {
        c.output = Some(out.clone());
    }
    c.validate()?;
    Ok(c)
}

fn open_output(config: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &config.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn log_run(meta: &RunMetadata) {
    eprintln!(
        "seed {} config {:016x} packets {} fd_ts {} in {:.1} s",
        meta.seed,
        meta.config_hash,
        meta.packets,
        meta.fading_rate,
        meta.wall_time.as_secs_f64()
    );
}

fn analytical(config: &ExperimentConfig) -> Result<Vec<CurvePoint>> {
    if !config.algorithms.iter().any(|s| s.id == AlgorithmId::BiNlms) {
        return Err(Error::Config("the analytical curve belongs to bi-nlms, which is not selected".into()));
    }
    let fd = config.fading_rates[0];
    let run = run_experiment(config)?;
    log_run(&run.metadata);
    let mut rows = curve_points(config, &run);

    let ens = build_ensemble_matrices(&config.system, fd, ANALYTIC_ENSEMBLE, config.system.seed)?;
    let n = config.system.n_symbols;
    for spec in config.algorithms.iter().filter(|s| s.id == AlgorithmId::BiNlms) {
        let mut state = AnalysisState::new(&ens, spec.params.mu / ens.input_power)?;
        for i in 0..n {
            rows.push(CurvePoint {
                symbol_index: i,
                algorithm_id: "analytic-bi-nlms".into(),
                sinr_over_snr_db: analytical_sinr(&state, &ens.decomposition)? - config.system.snr_db,
                cumulative_ber: None,
            });
            state.step();
        }
    }
    Ok(rows)
}

fn run_command(command: &Command, args: &RunArgs) -> Result<()> {
    let config = resolve(command, args)?;
    match command {
        Command::SinrVsFading(_) | Command::BerVsUsers(_) => {
            let points = run_sweep(&config)?;
            for (_, run) in &points {
                log_run(&run.metadata);
            }
            write_sweep(open_output(&config)?, &config, &points)
        }
        Command::Analytical(_) => write_curves(open_output(&config)?, &analytical(&config)?),
        _ => {
            let run = run_experiment(&config)?;
            log_run(&run.metadata);
            write_per_symbol(open_output(&config)?, &config, &run)
        }
    }
}

fn validate(quick: bool, only: &[u8]) -> i32 {
    let numbers: Vec<u8> = if !only.is_empty() {
        only.to_vec()
    } else if quick {
        QUICK_CRITERIA.to_vec()
    } else {
        CRITERIA.iter().map(|c| c.0).collect()
    };
    let mut failed = 0;
    for n in &numbers {
        let outcome = run_criterion(*n, Tier::Full);
        println!("{outcome}");
        failed += usize::from(!outcome.passed);
    }
    println!("{} of {} criteria passed", numbers.len() - failed, numbers.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Validate { quick, criteria } => return validate(*quick, criteria),
        Command::SinrVsSymbol(a)
        | Command::SinrVsFading(a)
        | Command::BerVsUsers(a)
        | Command::BerVsSymbol(a)
        | Command::Cooperative(a)
        | Command::Analytical(a) => run_command(&cli.command, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("bimmse").chain(args.iter().copied())).unwrap()
    }

    fn args_of(cli: &Cli) -> &RunArgs {
        match &cli.command {
            Command::SinrVsSymbol(a) | Command::SinrVsFading(a) | Command::BerVsUsers(a) => a,
            Command::BerVsSymbol(a) | Command::Cooperative(a) | Command::Analytical(a) => a,
            Command::Validate { .. } => panic!("no run args"),
        }
    }

    #[test]
    fn flags_override_the_preset() {
        let cli = parse(&["sinr-vs-symbol", "--seed", "7", "--packets", "3", "--algorithms", "bi-cg,mmse"]);
        let c = resolve(&cli.command, args_of(&cli)).unwrap();
        assert_eq!(c.system.seed, 7);
        assert_eq!(c.n_packets, 3);
        assert_eq!(c.algorithms.iter().map(|s| s.id).collect::<Vec<_>>(), vec![AlgorithmId::BiCg, AlgorithmId::Mmse]);
    }

    #[test]
    fn presets_follow_the_figures() {
        let cli = parse(&["sinr-vs-fading"]);
        let c = resolve(&cli.command, args_of(&cli)).unwrap();
        assert_eq!(c.fading_rates, vec![0.001, 0.005, 0.01, 0.02]);
        assert_eq!(c.sweep, Sweep::VsFadingRate);
        let cli = parse(&["ber-vs-users"]);
        let c = resolve(&cli.command, args_of(&cli)).unwrap();
        assert_eq!(c.sweep, Sweep::VsUsers(vec![2, 4, 6, 8]));
        assert!(c.count_training_bits);
        let cli = parse(&["cooperative"]);
        assert!(resolve(&cli.command, args_of(&cli)).unwrap().cooperative.is_some());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(cli_main(["bimmse", "sinr-vs-symbol", "--packets", "many"]), EXIT_USAGE);
        assert_eq!(cli_main(["bimmse", "frobnicate"]), EXIT_USAGE);
        assert_eq!(cli_main(["bimmse", "sinr-vs-symbol", "--algorithms", "bi-xyz"]), EXIT_USAGE);
        assert_eq!(cli_main(["bimmse", "validate", "--criterion", "12"]), EXIT_USAGE);
        assert_eq!(cli_main(["bimmse", "sinr-vs-symbol", "--packets", "0"]), EXIT_USAGE);
    }

    #[test]
    fn analytical_needs_bi_nlms() {
        let cli = parse(&["analytical", "--algorithms", "bi-cg", "--packets", "1"]);
        let c = resolve(&cli.command, args_of(&cli)).unwrap();
        assert!(analytical(&c).is_err());
    }
}
