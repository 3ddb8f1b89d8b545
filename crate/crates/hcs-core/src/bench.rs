//! Experiment harness: phase-transition grids, error-vs-measurement
//! sweeps, and consistency scatter data, with seeded determinism and CSV
//! output.
//!
//! Every trial's randomness is derived from `(master_seed, cell index,
//! trial index)` through a SplitMix64-style mixer, so runs are
//! reproducible record for record no matter how the work is scheduled.
//! Wall-clock timings ride along in the records but are excluded from the
//! CSV checksum, which covers only the deterministic payload.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dequantizer::{
    biht, box_from_recovery, midpoint_dequantize, DequantizerConfig,
};
use crate::error::{HcsError, Result};
use crate::measurement::{generate_ensemble, l2_norm, measure, Signal};
use crate::quantizer::{HcsQuantizer, QuantizerConfig};
use crate::recovery::{quantized_error, recover};

// ---- experiment configuration

/// The three experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PhaseGrid,
    ErrorVsM,
    Consistency,
}

/// Grid axis: sparsity/measurement ratio pairs for phase grids, plain
/// measurement counts for the other families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Cells(Vec<(f64, f64)>),
    MValues(Vec<usize>),
}

fn default_x_inf() -> f64 {
    -1.0
}

fn default_x_sup() -> f64 {
    1.0
}

/// A declarative sweep description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: Family,
    pub n: usize,
    pub k: usize,
    /// Phase grids list `(K/n, m/n)` pairs; the other families list `m`
    /// values directly.
    pub grid: GridSpec,
    pub trials_per_cell: usize,
    /// Noise level in decibels; omitted means noiseless.
    #[serde(default)]
    pub snr: Option<f64>,
    /// Support size for the non-phase families; omitted draws dense
    /// signals.
    #[serde(default)]
    pub sparsity: Option<usize>,
    pub master_seed: u64,
    /// Baseline/scatter iteration controls; required by the consistency
    /// family, optional elsewhere (no baseline when absent).
    #[serde(default)]
    pub dequantizer: Option<DequantizerConfig>,
    #[serde(default = "default_x_inf")]
    pub x_inf: f64,
    #[serde(default = "default_x_sup")]
    pub x_sup: f64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(HcsError::InvalidConfig("n must be positive".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(HcsError::InvalidConfig(
                "trials_per_cell must be at least 1".into(),
            ));
        }
        // Quantizer-side constraints (k, range ordering) check here so a
        // bad config fails before any work is scheduled.
        HcsQuantizer::new(QuantizerConfig {
            k: self.k,
            x_inf: self.x_inf,
            x_sup: self.x_sup,
        })?;
        match (&self.family, &self.grid) {
            (Family::PhaseGrid, GridSpec::Cells(cells)) => {
                if cells.is_empty() {
                    return Err(HcsError::InvalidConfig("empty grid".into()));
                }
                for &(k_over_n, m_over_n) in cells {
                    if !(k_over_n > 0.0 && k_over_n <= 1.0 && k_over_n.is_finite()) {
                        return Err(HcsError::InvalidConfig(format!(
                            "K/n ratio {k_over_n} outside (0, 1]"
                        )));
                    }
                    if !(m_over_n > 0.0 && m_over_n.is_finite()) {
                        return Err(HcsError::InvalidConfig(format!(
                            "m/n ratio {m_over_n} must be positive"
                        )));
                    }
                }
            }
            (Family::PhaseGrid, GridSpec::MValues(_)) => {
                return Err(HcsError::InvalidConfig(
                    "phase-grid wants (K/n, m/n) cells, got m values".into(),
                ));
            }
            (_, GridSpec::MValues(ms)) => {
                if ms.is_empty() {
                    return Err(HcsError::InvalidConfig("empty grid".into()));
                }
                if ms.contains(&0) {
                    return Err(HcsError::InvalidConfig(
                        "measurement counts must be positive".into(),
                    ));
                }
            }
            (_, GridSpec::Cells(_)) => {
                return Err(HcsError::InvalidConfig(
                    "this family wants m values, got (K/n, m/n) cells".into(),
                ));
            }
        }
        if let Some(snr) = self.snr {
            if !snr.is_finite() {
                return Err(HcsError::InvalidConfig(format!("snr = {snr}")));
            }
        }
        if let Some(k_sparse) = self.sparsity {
            if k_sparse == 0 || k_sparse > self.n {
                return Err(HcsError::InvalidConfig(format!(
                    "sparsity {k_sparse} out of 1..={}",
                    self.n
                )));
            }
        }
        if self.family == Family::Consistency && self.dequantizer.is_none() {
            return Err(HcsError::InvalidConfig(
                "consistency family needs a dequantizer config".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        match &self.grid {
            GridSpec::Cells(cells) => cells
                .iter()
                .map(|&(k_over_n, m_over_n)| Cell::Phase { k_over_n, m_over_n })
                .collect(),
            GridSpec::MValues(ms) => ms
                .iter()
                .map(|&m| Cell::MeasurementCount { m })
                .collect(),
        }
    }
}

// ---- trial records

/// Grid coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Phase { k_over_n: f64, m_over_n: f64 },
    MeasurementCount { m: usize },
}

/// Reconstruction route used for a consistency-scatter record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DequantizeMethod {
    Midpoint,
    BihtBox,
}

impl DequantizeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DequantizeMethod::Midpoint => "midpoint",
            DequantizeMethod::BihtBox => "biht-box",
        }
    }
}

/// One completed trial. Timing fields are wall-clock seconds of the
/// recovery calls only (ensemble generation excluded) and are the only
/// nondeterministic content.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub cell: Cell,
    pub trial_index: usize,
    pub quantized_error: f64,
    pub elapsed_recovery: f64,
    pub elapsed_baseline: Option<f64>,
    pub hamming_error: Option<f64>,
    pub angular_error: Option<f64>,
    pub method: Option<DequantizeMethod>,
    pub seed: u64,
}

/// A trial that errored; the sweep continues past it.
#[derive(Debug, Clone, Serialize)]
pub struct TrialFailure {
    pub cell: Cell,
    pub trial_index: usize,
    pub seed: u64,
    pub message: String,
}

/// Everything a sweep produced, records in deterministic (cell, trial)
/// order.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

// ---- seed derivation

fn splitmix(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Per-trial seed, a pure function of the sweep coordinates. Indices are
/// offset by one so that cell 0 / trial 0 does not collapse onto the bare
/// master seed.
pub fn derive_seed(master_seed: u64, cell_index: usize, trial_index: usize) -> u64 {
    let mut s = splitmix(master_seed);
    s = splitmix(s ^ splitmix(cell_index as u64 + 1));
    s = splitmix(s ^ splitmix(trial_index as u64 + 1));
    s
}

/// Independent stream per purpose within a trial (signal draw, ensemble,
/// noise).
fn lane_seed(trial_seed: u64, lane: u64) -> u64 {
    splitmix(trial_seed ^ splitmix(lane + 1))
}

const LANE_SIGNAL: u64 = 0;
const LANE_ENSEMBLE: u64 = 1;
const LANE_NOISE: u64 = 2;

// ---- signal synthesis

/// Unit-norm signal with `sparsity` nonzeros on a uniform support and
/// Gaussian values (uniform on the support's sphere after scaling); dense
/// Gaussian direction when `sparsity` is `None`.
fn random_signal(n: usize, sparsity: Option<usize>, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let mut values = vec![0.0; n];
    match sparsity {
        Some(k_sparse) => {
            let support = rand::seq::index::sample(rng, n, k_sparse);
            for i in support {
                values[i] = StandardNormal.sample(rng);
            }
            Signal::from_unnormalized(values, Some(k_sparse))
        }
        None => {
            for v in values.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            Signal::from_unnormalized(values, None)
        }
    }
}

/// Additive Gaussian perturbation scaled so the realized signal-to-noise
/// ratio is exactly `snr_db`, then renormalized to the unit sphere. The
/// noisy vector becomes the input signal: measurements and the reference
/// quantization both use it.
pub fn apply_noise(signal: &Signal, snr_db: f64, rng: &mut ChaCha8Rng) -> Result<Signal> {
    let n = signal.len();
    let mut noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let norm = l2_norm(&noise);
    if norm == 0.0 {
        return Err(HcsError::NumericFailure("zero noise draw".into()));
    }
    // ||x|| = 1, so ||e|| = 10^(-snr/20) hits the target ratio exactly.
    let scale = 10f64.powf(-snr_db / 20.0) / norm;
    for (e, &x) in noise.iter_mut().zip(signal.values()) {
        *e = x + *e * scale;
    }
    Signal::from_unnormalized(noise, None)
}

// ---- the sweep

fn round_count(value: f64) -> usize {
    let rounded = value.round();
    if rounded < 1.0 {
        1
    } else {
        rounded as usize
    }
}

struct TrialPlan {
    cell: Cell,
    cell_index: usize,
    trial_index: usize,
    sparsity: Option<usize>,
    m: usize,
}

fn run_trial(
    spec: &ExperimentSpec,
    quantizer: &HcsQuantizer,
    plan: &TrialPlan,
) -> Result<Vec<TrialRecord>> {
    let seed = derive_seed(spec.master_seed, plan.cell_index, plan.trial_index);
    let mut signal_rng = ChaCha8Rng::seed_from_u64(lane_seed(seed, LANE_SIGNAL));
    let mut signal = random_signal(spec.n, plan.sparsity, &mut signal_rng)?;
    if let Some(snr_db) = spec.snr {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(lane_seed(seed, LANE_NOISE));
        signal = apply_noise(&signal, snr_db, &mut noise_rng)?;
    }
    let ensemble = generate_ensemble(spec.n, plan.m, lane_seed(seed, LANE_ENSEMBLE))?;
    let y = measure(&ensemble, &signal)?;
    let truth = quantizer.quantize(signal.values())?;

    let recovery = recover(&y, &ensemble, quantizer)?;
    let err = quantized_error(&truth, &recovery.q_star)?;
    let elapsed_recovery = recovery.elapsed.as_secs_f64();

    let base_record = TrialRecord {
        cell: plan.cell,
        trial_index: plan.trial_index,
        quantized_error: err,
        elapsed_recovery,
        elapsed_baseline: None,
        hamming_error: None,
        angular_error: None,
        method: None,
        seed,
    };

    match spec.family {
        Family::PhaseGrid | Family::ErrorVsM => {
            let mut record = base_record;
            if let Some(dequantizer) = &spec.dequantizer {
                // Baseline: recover a real vector by iterative hard
                // thresholding, then label it with the identical
                // quantizer. Only its wall time is recorded.
                let config = DequantizerConfig {
                    sparsity: plan.sparsity.or(dequantizer.sparsity),
                    ..dequantizer.clone()
                };
                let start = Instant::now();
                let estimate = biht(&y, &ensemble, &config, None)?;
                quantizer.quantize(&estimate.values)?;
                record.elapsed_baseline = Some(start.elapsed().as_secs_f64());
            }
            Ok(vec![record])
        }
        Family::Consistency => {
            let dequantizer = spec
                .dequantizer
                .as_ref()
                .expect("validated: consistency family has a dequantizer");
            let config = DequantizerConfig {
                sparsity: plan.sparsity.or(dequantizer.sparsity),
                ..dequantizer.clone()
            };
            let bounds = box_from_recovery(&recovery.q_star, quantizer)?;
            let mut records = Vec::with_capacity(2);
            for method in [DequantizeMethod::Midpoint, DequantizeMethod::BihtBox] {
                let estimate = match method {
                    DequantizeMethod::Midpoint => {
                        midpoint_dequantize(&recovery.q_star, quantizer)?
                    }
                    DequantizeMethod::BihtBox => {
                        biht(&y, &ensemble, &config, Some(&bounds))?.values
                    }
                };
                let projected = ensemble.sign_project(&estimate)?;
                let hamming = crate::dequantizer::hamming_distance(y.bits(), &projected)?;
                let angular = crate::dequantizer::angular_error(signal.values(), &estimate)?;
                records.push(TrialRecord {
                    hamming_error: Some(hamming),
                    angular_error: Some(angular),
                    method: Some(method),
                    ..base_record.clone()
                });
            }
            Ok(records)
        }
    }
}

/// Runs the full sweep. Cells and trials execute in parallel on the
/// global thread pool; output order is the deterministic (cell, trial)
/// order regardless of scheduling. Individual trial failures are
/// collected, not fatal.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let quantizer = HcsQuantizer::new(QuantizerConfig {
        k: spec.k,
        x_inf: spec.x_inf,
        x_sup: spec.x_sup,
    })?;

    let mut plans = Vec::new();
    for (cell_index, cell) in spec.cells().into_iter().enumerate() {
        let (sparsity, m) = match cell {
            Cell::Phase { k_over_n, m_over_n } => (
                Some(round_count(k_over_n * spec.n as f64)),
                round_count(m_over_n * spec.n as f64),
            ),
            Cell::MeasurementCount { m } => (spec.sparsity, m),
        };
        for trial_index in 0..spec.trials_per_cell {
            plans.push(TrialPlan {
                cell,
                cell_index,
                trial_index,
                sparsity,
                m,
            });
        }
    }

    let outcomes: Vec<std::result::Result<Vec<TrialRecord>, TrialFailure>> = plans
        .par_iter()
        .map(|plan| {
            run_trial(spec, &quantizer, plan).map_err(|e| TrialFailure {
                cell: plan.cell,
                trial_index: plan.trial_index,
                seed: derive_seed(spec.master_seed, plan.cell_index, plan.trial_index),
                message: e.to_string(),
            })
        })
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(batch) => records.extend(batch),
            Err(failure) => failures.push(failure),
        }
    }
    Ok(ExperimentOutput { records, failures })
}

/// Consistency-family convenience view: the pooled (Hamming, angular)
/// error pairs.
pub fn consistency_scatter(spec: &ExperimentSpec) -> Result<Vec<(f64, f64)>> {
    if spec.family != Family::Consistency {
        return Err(HcsError::InvalidConfig(
            "consistency_scatter wants a consistency-family spec".into(),
        ));
    }
    let output = run_experiment(spec)?;
    Ok(output
        .records
        .iter()
        .map(|r| {
            (
                r.hamming_error.expect("consistency records carry hamming"),
                r.angular_error.expect("consistency records carry angular"),
            )
        })
        .collect())
}

// ---- CSV emission

/// Row count and payload checksum of an emitted CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvSummary {
    pub rows: usize,
    /// SHA-256 hex over the header and every non-timing field; wall-clock
    /// columns are blanked before hashing so reruns of the same spec
    /// produce the same checksum.
    pub checksum: String,
}

fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn fmt_opt_float(value: Option<f64>) -> String {
    value.map(fmt_float).unwrap_or_default()
}

/// Writes one CSV row per record and returns the summary. The header and
/// column order are fixed per family; floats print at 17 significant
/// digits. Timing columns land in the file but not in the checksum.
pub fn emit_csv(family: Family, records: &[TrialRecord], path: &Path) -> Result<CsvSummary> {
    let header = match family {
        Family::PhaseGrid => "K_over_n,m_over_n,trial,err,time_hcs,time_baseline",
        Family::ErrorVsM => "m,trial,err,time_hcs,time_baseline",
        Family::Consistency => "trial,m,hamming,angular,method",
    };
    let mut file_text = String::new();
    let mut hashed_text = String::new();
    file_text.push_str(header);
    file_text.push('\n');
    hashed_text.push_str(header);
    hashed_text.push('\n');

    for record in records {
        let (row, hashed_row) = match (family, record.cell) {
            (Family::PhaseGrid, Cell::Phase { k_over_n, m_over_n }) => {
                let fixed = format!(
                    "{},{},{},{}",
                    fmt_float(k_over_n),
                    fmt_float(m_over_n),
                    record.trial_index,
                    fmt_float(record.quantized_error),
                );
                (
                    format!(
                        "{fixed},{},{}",
                        fmt_float(record.elapsed_recovery),
                        fmt_opt_float(record.elapsed_baseline),
                    ),
                    format!("{fixed},,"),
                )
            }
            (Family::ErrorVsM, Cell::MeasurementCount { m }) => {
                let fixed = format!(
                    "{m},{},{}",
                    record.trial_index,
                    fmt_float(record.quantized_error),
                );
                (
                    format!(
                        "{fixed},{},{}",
                        fmt_float(record.elapsed_recovery),
                        fmt_opt_float(record.elapsed_baseline),
                    ),
                    format!("{fixed},,"),
                )
            }
            (Family::Consistency, Cell::MeasurementCount { m }) => {
                let method = record.method.ok_or_else(|| {
                    HcsError::InvalidConfig(
                        "consistency record without a method".into(),
                    )
                })?;
                let hamming = record.hamming_error.ok_or_else(|| {
                    HcsError::InvalidConfig(
                        "consistency record without a hamming error".into(),
                    )
                })?;
                let angular = record.angular_error.ok_or_else(|| {
                    HcsError::InvalidConfig(
                        "consistency record without an angular error".into(),
                    )
                })?;
                let row = format!(
                    "{},{m},{},{},{}",
                    record.trial_index,
                    fmt_float(hamming),
                    fmt_float(angular),
                    method.as_str(),
                );
                (row.clone(), row)
            }
            (_, cell) => {
                return Err(HcsError::InvalidConfig(format!(
                    "record cell {cell:?} does not fit the {family:?} schema"
                )));
            }
        };
        writeln!(file_text, "{row}").expect("string write");
        writeln!(hashed_text, "{hashed_row}").expect("string write");
    }

    std::fs::write(path, &file_text).map_err(|e| {
        HcsError::Io(std::io::Error::new(
            e.kind(),
            format!("writing {}: {e}", path.display()),
        ))
    })?;

    let mut hasher = Sha256::new();
    hasher.update(hashed_text.as_bytes());
    Ok(CsvSummary {
        rows: records.len(),
        checksum: format!("{:x}", hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn error_spec() -> ExperimentSpec {
        ExperimentSpec {
            family: Family::ErrorVsM,
            n: 16,
            k: 4,
            grid: GridSpec::MValues(vec![16, 256]),
            trials_per_cell: 5,
            snr: None,
            sparsity: Some(2),
            master_seed: 31,
            dequantizer: None,
            x_inf: -1.0,
            x_sup: 1.0,
        }
    }

    #[test]
    fn spec_parses_with_defaults_and_rejects_unknown_fields() {
        let json = r#"{
            "family": "error-vs-m",
            "n": 32,
            "k": 8,
            "grid": [64, 128],
            "trials_per_cell": 3,
            "master_seed": 7
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.x_inf, -1.0);
        assert_eq!(spec.x_sup, 1.0);
        assert_eq!(spec.grid, GridSpec::MValues(vec![64, 128]));
        assert!(spec.snr.is_none());
        assert!(spec.validate().is_ok());

        let phase = r#"{
            "family": "phase-grid",
            "n": 128,
            "k": 8,
            "grid": [[0.1, 2.0], [0.2, 4.0]],
            "trials_per_cell": 1,
            "master_seed": 7
        }"#;
        let spec: ExperimentSpec = serde_json::from_str(phase).unwrap();
        assert_eq!(
            spec.grid,
            GridSpec::Cells(vec![(0.1, 2.0), (0.2, 4.0)])
        );
        assert!(spec.validate().is_ok());

        assert!(serde_json::from_str::<ExperimentSpec>(
            r#"{"family": "error-vs-m", "n": 4, "k": 2, "grid": [8],
                "trials_per_cell": 1, "master_seed": 1, "bogus": true}"#
        )
        .is_err());
    }

    #[test]
    fn validation_rejects_inconsistent_specs() {
        let mut spec = error_spec();
        spec.grid = GridSpec::MValues(vec![]);
        assert!(spec.validate().is_err(), "empty grid");

        let mut spec = error_spec();
        spec.trials_per_cell = 0;
        assert!(spec.validate().is_err(), "zero trials");

        let mut spec = error_spec();
        spec.grid = GridSpec::Cells(vec![(0.1, 2.0)]);
        assert!(spec.validate().is_err(), "family/grid mismatch");

        let mut spec = error_spec();
        spec.family = Family::PhaseGrid;
        assert!(spec.validate().is_err(), "phase grid wants cells");

        let mut spec = error_spec();
        spec.sparsity = Some(17);
        assert!(spec.validate().is_err(), "sparsity above n");

        let mut spec = error_spec();
        spec.family = Family::Consistency;
        assert!(spec.validate().is_err(), "consistency needs dequantizer");

        let mut spec = error_spec();
        spec.grid = GridSpec::MValues(vec![0]);
        assert!(spec.validate().is_err(), "zero m");

        let mut spec = error_spec();
        spec.x_inf = 0.5;
        spec.x_sup = -0.5;
        assert!(spec.validate().is_err(), "inverted range");
    }

    #[test]
    fn seed_derivation_is_stable_and_collision_free_locally() {
        // Frozen values guard the derivation scheme; changing it would
        // silently re-randomize every published sweep.
        assert_eq!(derive_seed(42, 0, 0), 16545225481941358422);
        assert_eq!(derive_seed(42, 0, 1), 9508864575043013605);
        assert_eq!(derive_seed(42, 1, 0), 13823848550377964843);
        let mut seen = std::collections::HashSet::new();
        for cell in 0..50 {
            for trial in 0..50 {
                assert!(seen.insert(derive_seed(9, cell, trial)));
            }
        }
    }

    #[test]
    fn identical_specs_give_identical_payloads() {
        let spec = error_spec();
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert!(a.failures.is_empty());
        assert_eq!(a.records.len(), b.records.len());
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.cell, rb.cell);
            assert_eq!(ra.trial_index, rb.trial_index);
            assert_eq!(ra.seed, rb.seed);
            assert_eq!(ra.quantized_error, rb.quantized_error);
        }
    }

    #[test]
    fn single_thread_pool_matches_default_schedule() {
        let spec = error_spec();
        let parallel = run_experiment(&spec).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| run_experiment(&spec)).unwrap();
        let errs = |out: &ExperimentOutput| -> Vec<f64> {
            out.records.iter().map(|r| r.quantized_error).collect()
        };
        assert_eq!(errs(&parallel), errs(&serial));
    }

    #[test]
    fn more_measurements_shrink_the_error() {
        let output = run_experiment(&error_spec()).unwrap();
        let median = |m: usize| -> f64 {
            let mut errs: Vec<f64> = output
                .records
                .iter()
                .filter(|r| r.cell == Cell::MeasurementCount { m })
                .map(|r| r.quantized_error)
                .collect();
            errs.sort_by(f64::total_cmp);
            errs[errs.len() / 2]
        };
        assert!(
            median(256) < median(16),
            "m=256 median {} vs m=16 median {}",
            median(256),
            median(16)
        );
    }

    #[test]
    fn baseline_rides_along_only_when_configured() {
        let mut spec = error_spec();
        spec.grid = GridSpec::MValues(vec![32]);
        spec.trials_per_cell = 1;
        let bare = run_experiment(&spec).unwrap();
        assert!(bare.records[0].elapsed_baseline.is_none());
        spec.dequantizer = Some(DequantizerConfig {
            max_iterations: 5,
            ..DequantizerConfig::default()
        });
        let with_baseline = run_experiment(&spec).unwrap();
        assert!(with_baseline.records[0].elapsed_baseline.is_some());
        // The baseline never touches the reported error.
        assert_eq!(
            bare.records[0].quantized_error,
            with_baseline.records[0].quantized_error
        );
    }

    #[test]
    fn noise_scaling_hits_the_target_ratio_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clean = random_signal(64, Some(8), &mut rng).unwrap();
        for &snr_db in &[-3.0, 0.0, 10.0] {
            let mut noise_rng = ChaCha8Rng::seed_from_u64(99);
            let noisy = apply_noise(&clean, snr_db, &mut noise_rng).unwrap();
            assert!((l2_norm(noisy.values()) - 1.0).abs() < 1e-12);
            // Reconstruct the perturbation before renormalization by
            // replaying the draw.
            let mut replay_rng = ChaCha8Rng::seed_from_u64(99);
            let mut e: Vec<f64> = (0..64)
                .map(|_| StandardNormal.sample(&mut replay_rng))
                .collect();
            let norm = l2_norm(&e);
            let scale = 10f64.powf(-snr_db / 20.0) / norm;
            for v in e.iter_mut() {
                *v *= scale;
            }
            let realized = 20.0 * (1.0 / l2_norm(&e)).log10();
            assert!(
                (realized - snr_db).abs() < 1e-9,
                "snr {snr_db} realized {realized}"
            );
        }
    }

    #[test]
    fn phase_cells_round_counts_up_to_at_least_one() {
        let spec = ExperimentSpec {
            family: Family::PhaseGrid,
            n: 16,
            k: 2,
            grid: GridSpec::Cells(vec![(0.001, 0.01)]),
            trials_per_cell: 1,
            snr: None,
            sparsity: None,
            master_seed: 3,
            dequantizer: None,
            x_inf: -1.0,
            x_sup: 1.0,
        };
        let output = run_experiment(&spec).unwrap();
        assert_eq!(output.records.len(), 1, "tiny ratios still run one trial");
        assert!(output.failures.is_empty());
    }

    #[test]
    fn consistency_family_emits_both_methods() {
        let spec = ExperimentSpec {
            family: Family::Consistency,
            n: 16,
            k: 8,
            grid: GridSpec::MValues(vec![128]),
            trials_per_cell: 3,
            snr: None,
            sparsity: Some(3),
            master_seed: 11,
            dequantizer: Some(DequantizerConfig {
                max_iterations: 30,
                ..DequantizerConfig::default()
            }),
            x_inf: -1.0,
            x_sup: 1.0,
        };
        let output = run_experiment(&spec).unwrap();
        assert!(output.failures.is_empty());
        assert_eq!(output.records.len(), 6, "two methods per trial");
        for pair in output.records.chunks(2) {
            assert_eq!(pair[0].method, Some(DequantizeMethod::Midpoint));
            assert_eq!(pair[1].method, Some(DequantizeMethod::BihtBox));
            assert_eq!(pair[0].trial_index, pair[1].trial_index);
            for r in pair {
                let h = r.hamming_error.unwrap();
                let a = r.angular_error.unwrap();
                assert!((0.0..=1.0).contains(&h));
                assert!((0.0..=1.0).contains(&a));
            }
        }
        let scatter = consistency_scatter(&spec).unwrap();
        assert_eq!(scatter.len(), 6);
    }

    #[test]
    fn single_coordinate_trial_is_exactly_consistent() {
        // n = 1: the lone coordinate recovers its interval exactly (its
        // disagreement estimate is 0), both dequantizers return the unit
        // vector, and both errors vanish.
        let spec = ExperimentSpec {
            family: Family::Consistency,
            n: 1,
            k: 8,
            grid: GridSpec::MValues(vec![8]),
            trials_per_cell: 1,
            snr: None,
            sparsity: Some(1),
            master_seed: 2,
            dequantizer: Some(DequantizerConfig::default()),
            x_inf: -1.0,
            x_sup: 1.0,
        };
        let scatter = consistency_scatter(&spec).unwrap();
        assert_eq!(scatter.len(), 2);
        for (hamming, angular) in scatter {
            assert_eq!(hamming, 0.0);
            assert!(angular < 1e-12, "angular {angular}");
        }
    }

    #[test]
    fn csv_layout_is_frozen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let record = TrialRecord {
            cell: Cell::MeasurementCount { m: 64 },
            trial_index: 2,
            quantized_error: 0.125,
            elapsed_recovery: 0.5,
            elapsed_baseline: None,
            hamming_error: None,
            angular_error: None,
            method: None,
            seed: 9,
        };
        let summary = emit_csv(Family::ErrorVsM, &[record], &path).unwrap();
        assert_eq!(summary.rows, 1);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "m,trial,err,time_hcs,time_baseline\n64,2,1.2500000000000000e-1,5.0000000000000000e-1,\n"
        );
    }

    #[test]
    fn empty_record_stream_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let summary = emit_csv(Family::PhaseGrid, &[], &path).unwrap();
        assert_eq!(summary.rows, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "K_over_n,m_over_n,trial,err,time_hcs,time_baseline\n");
    }

    #[test]
    fn checksum_ignores_wall_clock_columns() {
        let dir = tempfile::tempdir().unwrap();
        let make = |elapsed: f64| TrialRecord {
            cell: Cell::MeasurementCount { m: 32 },
            trial_index: 0,
            quantized_error: 0.25,
            elapsed_recovery: elapsed,
            elapsed_baseline: Some(elapsed * 2.0),
            hamming_error: None,
            angular_error: None,
            method: None,
            seed: 1,
        };
        let fast = dir.path().join("fast.csv");
        let slow = dir.path().join("slow.csv");
        let a = emit_csv(Family::ErrorVsM, &[make(0.001)], &fast).unwrap();
        let b = emit_csv(Family::ErrorVsM, &[make(7.5)], &slow).unwrap();
        assert_eq!(a.checksum, b.checksum);
        assert_ne!(
            std::fs::read_to_string(&fast).unwrap(),
            std::fs::read_to_string(&slow).unwrap(),
            "files themselves differ in the timing columns"
        );
        // A payload change must move the checksum.
        let mut changed = make(0.001);
        changed.quantized_error = 0.5;
        let c = emit_csv(Family::ErrorVsM, &[changed], &fast).unwrap();
        assert_ne!(a.checksum, c.checksum);
    }

    #[test]
    fn csv_rejects_records_from_another_family() {
        let dir = tempfile::tempdir().unwrap();
        let record = TrialRecord {
            cell: Cell::Phase {
                k_over_n: 0.1,
                m_over_n: 2.0,
            },
            trial_index: 0,
            quantized_error: 0.1,
            elapsed_recovery: 0.1,
            elapsed_baseline: None,
            hamming_error: None,
            angular_error: None,
            method: None,
            seed: 4,
        };
        assert!(emit_csv(Family::ErrorVsM, &[record], &dir.path().join("x.csv")).is_err());
    }
}
