//! Command-line driver. Machine-readable results (JSON, CSV) go to
//! standard output; timings and warnings go to standard error. Exit codes:
//! 0 success, 1 sweep finished with failed trials, 2 usage or validation
//! errors, 3 data or dimension mismatches.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use hcs_core::bench::{apply_noise, derive_seed, emit_csv, run_experiment, ExperimentSpec};
use hcs_core::bounds::{
    measurements_for_coordinate, measurements_for_embedding, measurements_for_signal,
    noisy_angular_error_bound, sign_consistency_bound, sign_consistency_bound_loose,
    sign_consistency_tail, wrong_interval_tail_bound, BoundReport, Interpretation,
};
use hcs_core::dequantizer::{
    angular_error, biht, box_from_recovery, hamming_distance, midpoint_dequantize,
    DequantizerConfig,
};
use hcs_core::measurement::{generate_ensemble, measure, Signal};
use hcs_core::quantizer::{HcsQuantizer, QuantizedSignal, QuantizerConfig};
use hcs_core::recovery::{quantized_error, recover};
use hcs_core::HcsError;

#[derive(Parser)]
#[command(name = "hcs", version, about = "Hamming compressed sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a quantizer's boundary tables as CSV
    Quantizer(QuantizerArgs),
    /// Measure a signal, recover its intervals, optionally dequantize
    Recover(RecoverArgs),
    /// Evaluate a closed-form bound and print a JSON report
    #[command(subcommand)]
    Bounds(BoundCommand),
    /// Run an experiment sweep from a JSON config and write CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct QuantizerArgs {
    /// Number of quantization intervals
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_inf: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x_sup: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DequantizeMode {
    Midpoint,
    Biht,
    BihtBox,
}

impl DequantizeMode {
    fn as_str(self) -> &'static str {
        match self {
            DequantizeMode::Midpoint => "midpoint",
            DequantizeMode::Biht => "biht",
            DequantizeMode::BihtBox => "biht-box",
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    /// Signal JSON file: {"values": [...], "sparsity_hint": optional}
    #[arg(long)]
    signal: PathBuf,
    /// Expected dimension; a mismatch with the file is an error
    #[arg(long)]
    n: Option<usize>,
    /// Number of sign measurements
    #[arg(long)]
    m: usize,
    /// Number of quantization intervals
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_inf: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x_sup: f64,
    /// Perturb the signal at this SNR (dB) before measuring; the error is
    /// still reported against the supplied signal's quantization
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// Also reconstruct a real vector from the recovered intervals
    #[arg(long, value_enum)]
    dequantize: Option<DequantizeMode>,
    #[arg(long, default_value_t = 100)]
    max_iterations: usize,
    #[arg(long)]
    step_size: Option<f64>,
    /// Support size for the iterative dequantizers; defaults to the
    /// signal file's sparsity hint
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Expected sign flip rate under additive noise
    SignConsistency {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        x_norm: f64,
        /// Use the looser norm-only form
        #[arg(long)]
        loose: bool,
    },
    /// Concentration tail of the empirical flip rate
    SignConsistencyTail {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        m: usize,
    },
    /// Probability of recovering a specific wrong interval
    WrongIntervalTail {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        x_inf: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x_sup: f64,
        #[arg(long)]
        candidate: usize,
        #[arg(long)]
        m: usize,
    },
    /// Measurements for one coordinate to recover its interval
    MeasurementsForCoordinate {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        x_inf: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x_sup: f64,
        #[arg(long)]
        eta: f64,
    },
    /// Measurements for a whole signal file to recover every interval
    MeasurementsForSignal {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        x_inf: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        x_sup: f64,
        #[arg(long)]
        eta: f64,
    },
    /// Measurements for a uniform angular embedding of sparse signals
    MeasurementsForEmbedding {
        #[arg(long)]
        sparsity: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        mu: f64,
    },
    /// Angular error guarantee under measurement noise
    NoisyAngularError {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 1.0)]
        x_norm: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment spec JSON file
    #[arg(long)]
    config: PathBuf,
    /// CSV destination
    #[arg(long)]
    out: PathBuf,
}

// ---- failure plumbing

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<HcsError> for Failure {
    fn from(e: HcsError) -> Self {
        let code = match e {
            HcsError::DimensionMismatch { .. }
            | HcsError::IndexOutOfRange { .. }
            | HcsError::MismatchedQuantizer => 3,
            _ => 2,
        };
        fail(code, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {}", e.message);
        return ExitCode::from(e.code);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Caps the worker pool when HCS_THREADS is set.
fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("HCS_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .ok_or_else(|| fail(2, format!("HCS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| fail(2, format!("thread pool setup failed: {e}")))
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Quantizer(args) => cmd_quantizer(args),
        Command::Recover(args) => cmd_recover(args),
        Command::Bounds(bound) => cmd_bounds(bound),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn read_signal(path: &Path) -> CliResult<Signal> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(2, format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| fail(2, format!("parsing {}: {e}", path.display())))
}

// ---- quantizer

fn cmd_quantizer(args: QuantizerArgs) -> CliResult<()> {
    let quantizer = HcsQuantizer::new(QuantizerConfig {
        k: args.k,
        x_inf: args.x_inf,
        x_sup: args.x_sup,
    })?;
    println!("kind,index,value");
    for (j, s) in quantizer.s_boundaries().iter().enumerate() {
        println!("S,{j},{s:.16e}");
    }
    for (j, p) in quantizer.p_boundaries().iter().enumerate() {
        println!("P,{j},{p:.16e}");
    }
    Ok(())
}

// ---- recover

#[derive(Serialize)]
struct DequantizedOutput {
    method: &'static str,
    iterations_used: usize,
    final_hamming_error: f64,
    angular_error: f64,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct RecoverOutput<'a> {
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr: Option<f64>,
    q_star: &'a QuantizedSignal,
    kl_evaluations: usize,
    quantized_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dequantized: Option<DequantizedOutput>,
}

fn cmd_recover(args: RecoverArgs) -> CliResult<()> {
    let signal = read_signal(&args.signal)?;
    if let Some(n) = args.n {
        if n != signal.len() {
            return Err(fail(
                3,
                format!("signal has {} coordinates but --n says {n}", signal.len()),
            ));
        }
    }
    let quantizer = HcsQuantizer::new(QuantizerConfig {
        k: args.k,
        x_inf: args.x_inf,
        x_sup: args.x_sup,
    })?;

    // The supplied signal stays the ground truth; noise only corrupts what
    // the measurement chain sees.
    let measured = match args.snr {
        Some(snr) => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, 1, 0));
            apply_noise(&signal, snr, &mut rng)?
        }
        None => signal.clone(),
    };
    let ensemble = generate_ensemble(signal.len(), args.m, args.seed)?;
    let y = measure(&ensemble, &measured)?;
    let truth = quantizer.quantize(signal.values())?;

    let recovery = recover(&y, &ensemble, &quantizer)?;
    eprintln!(
        "recovery: {:.3} ms ({} divergence evaluations)",
        recovery.elapsed.as_secs_f64() * 1e3,
        recovery.kl_evaluations
    );
    let err = quantized_error(&truth, &recovery.q_star)?;

    let dequantized = match args.dequantize {
        None => None,
        Some(mode) => {
            let config = DequantizerConfig {
                max_iterations: args.max_iterations,
                step_size: args.step_size,
                sparsity: args.sparsity.or(signal.sparsity_hint()),
                tolerance: args.tolerance,
            };
            let start = std::time::Instant::now();
            let (values, iterations_used, final_hamming) = match mode {
                DequantizeMode::Midpoint => {
                    let values = midpoint_dequantize(&recovery.q_star, &quantizer)?;
                    let projected = ensemble.sign_project(&values)?;
                    let hamming = hamming_distance(y.bits(), &projected)?;
                    (values, 0, hamming)
                }
                DequantizeMode::Biht | DequantizeMode::BihtBox => {
                    let bounds = if mode == DequantizeMode::BihtBox {
                        Some(box_from_recovery(&recovery.q_star, &quantizer)?)
                    } else {
                        None
                    };
                    let out = biht(&y, &ensemble, &config, bounds.as_ref())?;
                    let hamming = *out
                        .hamming_error_trace
                        .last()
                        .expect("trace always has the initial entry");
                    (out.values, out.iterations_used, hamming)
                }
            };
            eprintln!(
                "dequantize ({}): {:.3} ms",
                mode.as_str(),
                start.elapsed().as_secs_f64() * 1e3
            );
            Some(DequantizedOutput {
                method: mode.as_str(),
                iterations_used,
                final_hamming_error: final_hamming,
                angular_error: angular_error(signal.values(), &values)?,
                values,
            })
        }
    };

    let output = RecoverOutput {
        n: signal.len(),
        m: args.m,
        k: args.k,
        seed: args.seed,
        snr: args.snr,
        q_star: &recovery.q_star,
        kl_evaluations: recovery.kl_evaluations,
        quantized_error: err,
        dequantized,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&output).expect("output serializes")
    );
    Ok(())
}

// ---- bounds

fn cmd_bounds(bound: BoundCommand) -> CliResult<()> {
    let report = match bound {
        BoundCommand::SignConsistency {
            sigma,
            x_norm,
            loose,
        } => {
            let (name, value) = if loose {
                (
                    "sign_consistency_bound_loose",
                    sign_consistency_bound_loose(sigma, x_norm)?,
                )
            } else {
                ("sign_consistency_bound", sign_consistency_bound(sigma, x_norm)?)
            };
            BoundReport::new(
                name,
                &[("sigma", sigma), ("x_norm", x_norm)],
                value,
                Interpretation::Probability,
            )
        }
        BoundCommand::SignConsistencyTail { gamma, m } => BoundReport::new(
            "sign_consistency_tail",
            &[("gamma", gamma), ("m", m as f64)],
            sign_consistency_tail(gamma, m)?,
            Interpretation::Probability,
        ),
        BoundCommand::WrongIntervalTail {
            x,
            k,
            x_inf,
            x_sup,
            candidate,
            m,
        } => {
            let quantizer = HcsQuantizer::new(QuantizerConfig { k, x_inf, x_sup })?;
            BoundReport::new(
                "wrong_interval_tail_bound",
                &[
                    ("x", x),
                    ("k", k as f64),
                    ("x_inf", x_inf),
                    ("x_sup", x_sup),
                    ("candidate", candidate as f64),
                    ("m", m as f64),
                ],
                wrong_interval_tail_bound(x, &quantizer, candidate, m)?,
                Interpretation::Probability,
            )
        }
        BoundCommand::MeasurementsForCoordinate {
            x,
            k,
            x_inf,
            x_sup,
            eta,
        } => {
            let quantizer = HcsQuantizer::new(QuantizerConfig { k, x_inf, x_sup })?;
            BoundReport::new(
                "measurements_for_coordinate",
                &[("x", x), ("k", k as f64), ("x_inf", x_inf), ("x_sup", x_sup), ("eta", eta)],
                measurements_for_coordinate(x, &quantizer, eta)? as f64,
                Interpretation::Count,
            )
        }
        BoundCommand::MeasurementsForSignal {
            signal,
            k,
            x_inf,
            x_sup,
            eta,
        } => {
            let signal = read_signal(&signal)?;
            let quantizer = HcsQuantizer::new(QuantizerConfig { k, x_inf, x_sup })?;
            BoundReport::new(
                "measurements_for_signal",
                &[
                    ("n", signal.len() as f64),
                    ("k", k as f64),
                    ("x_inf", x_inf),
                    ("x_sup", x_sup),
                    ("eta", eta),
                ],
                measurements_for_signal(&signal, &quantizer, eta)? as f64,
                Interpretation::Count,
            )
        }
        BoundCommand::MeasurementsForEmbedding { sparsity, n, eps, mu } => BoundReport::new(
            "measurements_for_embedding",
            &[
                ("sparsity", sparsity as f64),
                ("n", n as f64),
                ("eps", eps),
                ("mu", mu),
            ],
            measurements_for_embedding(sparsity, n, eps, mu)? as f64,
            Interpretation::Count,
        ),
        BoundCommand::NoisyAngularError {
            sigma,
            x_norm,
            gamma,
            eps,
        } => BoundReport::new(
            "noisy_angular_error_bound",
            &[
                ("sigma", sigma),
                ("x_norm", x_norm),
                ("gamma", gamma),
                ("eps", eps),
            ],
            noisy_angular_error_bound(sigma, x_norm, gamma, eps)?,
            Interpretation::Distance,
        ),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(())
}

// ---- bench

#[derive(Serialize)]
struct BenchSummary {
    rows: usize,
    checksum: String,
    failed_trials: usize,
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| fail(2, format!("reading {}: {e}", args.config.display())))?;
    let spec: ExperimentSpec = serde_json::from_str(&text)
        .map_err(|e| fail(2, format!("parsing {}: {e}", args.config.display())))?;
    let output = run_experiment(&spec)?;
    for failure in &output.failures {
        eprintln!(
            "trial failed: cell {:?}, trial {}, seed {}: {}",
            failure.cell, failure.trial_index, failure.seed, failure.message
        );
    }
    let summary = emit_csv(spec.family, &output.records, &args.out)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&BenchSummary {
            rows: summary.rows,
            checksum: summary.checksum,
            failed_trials: output.failures.len(),
        })
        .expect("summary serializes")
    );
    if !output.failures.is_empty() {
        return Err(fail(
            1,
            format!("{} trials failed; see stderr above", output.failures.len()),
        ));
    }
    Ok(())
}
