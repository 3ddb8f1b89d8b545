//! One-bit measurement model: Gaussian ensembles, sign measurements, and
//! per-coordinate Bernoulli estimation.
//!
//! An ensemble is an m x n matrix with i.i.d. standard normal entries,
//! generated row-major from a ChaCha8 stream so a `(n, m, seed)` triple
//! reproduces it exactly on any platform. Measuring a unit signal x keeps
//! only the signs `y_j = sign(<row_j, x>)`. For a coordinate i, the
//! fraction of rows where `y_j` disagrees with `sign(row_j[i])` estimates
//! the Bernoulli rate `arccos(x_i)/pi`; recovery inverts that map.
//!
//! Sign convention everywhere: `sign(t) = +1` iff `t >= 0`, so a row that
//! measures exactly zero yields +1.

use ndarray::{Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{HcsError, Result};

/// Tolerance on the unit-norm check for signals.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Sign with ties sent to +1.
#[inline]
pub fn sign_pm(t: f64) -> i8 {
    if t >= 0.0 {
        1
    } else {
        -1
    }
}

// ---------------------------------------------------------------- signals

/// A unit-norm real signal, optionally tagged with a sparsity hint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalData")]
pub struct Signal {
    values: Vec<f64>,
    sparsity_hint: Option<usize>,
}

#[derive(Deserialize)]
struct SignalData {
    values: Vec<f64>,
    #[serde(default)]
    sparsity_hint: Option<usize>,
}

impl TryFrom<SignalData> for Signal {
    type Error = HcsError;

    fn try_from(data: SignalData) -> Result<Self> {
        Signal::new(data.values, data.sparsity_hint)
    }
}

impl Signal {
    /// Wraps a vector that is already unit norm (within [`UNIT_NORM_TOL`]).
    ///
    /// A sparsity hint, when present, must be in `[1, n]` and at least the
    /// number of nonzero entries.
    pub fn new(values: Vec<f64>, sparsity_hint: Option<usize>) -> Result<Self> {
        if values.is_empty() {
            return Err(HcsError::InvalidDimension("signal length must be >= 1".into()));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(HcsError::NumericFailure(format!(
                "signal entry {bad} is not finite"
            )));
        }
        let norm = l2_norm(&values);
        if (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(HcsError::NotUnitNorm { norm });
        }
        if let Some(k) = sparsity_hint {
            let support = values.iter().filter(|v| **v != 0.0).count();
            if k == 0 || k > values.len() || support > k {
                return Err(HcsError::InvalidConfig(format!(
                    "sparsity hint {k} invalid for length {} with {support} nonzeros",
                    values.len()
                )));
            }
        }
        Ok(Self {
            values,
            sparsity_hint,
        })
    }

    /// Normalizes an arbitrary vector to unit norm, then wraps it.
    pub fn from_unnormalized(mut values: Vec<f64>, sparsity_hint: Option<usize>) -> Result<Self> {
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(HcsError::NumericFailure(format!(
                "signal entry {bad} is not finite"
            )));
        }
        let norm = l2_norm(&values);
        if norm == 0.0 {
            return Err(HcsError::ZeroVector);
        }
        for v in &mut values {
            *v /= norm;
        }
        Self::new(values, sparsity_hint)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sparsity_hint(&self) -> Option<usize> {
        self.sparsity_hint
    }
}

pub fn l2_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

// --------------------------------------------------------------- ensembles

/// An m x n Gaussian measurement ensemble plus a cached sign table.
///
/// Serializes as `(n, m, seed)` only; the matrix is regenerated on load.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    n: usize,
    m: usize,
    seed: u64,
    matrix: Array2<f64>,
    sign_cache: Vec<i8>,
}

#[derive(Deserialize)]
struct EnsembleParams {
    n: usize,
    m: usize,
    seed: u64,
}

impl Serialize for MeasurementEnsemble {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MeasurementEnsemble", 3)?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("m", &self.m)?;
        s.serialize_field("seed", &self.seed)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for MeasurementEnsemble {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let params = EnsembleParams::deserialize(deserializer)?;
        generate_ensemble(params.n, params.m, params.seed).map_err(serde::de::Error::custom)
    }
}

impl MeasurementEnsemble {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Cached `sign(row_j[i])` table, row-major, values +1 / -1.
    pub fn sign_cache(&self) -> &[i8] {
        &self.sign_cache
    }

    /// Signs of the projections of an arbitrary (not necessarily unit)
    /// vector onto the ensemble rows.
    pub fn sign_project(&self, values: &[f64]) -> Result<Vec<i8>> {
        if values.len() != self.n {
            return Err(HcsError::DimensionMismatch {
                context: "sign_project",
                expected: self.n,
                got: values.len(),
            });
        }
        let x = ArrayView1::from(values);
        Ok(self.matrix.dot(&x).iter().map(|&t| sign_pm(t)).collect())
    }

    #[cfg(test)]
    pub(crate) fn from_matrix_for_tests(matrix: Array2<f64>) -> Self {
        let (m, n) = matrix.dim();
        let sign_cache = matrix.iter().map(|&t| sign_pm(t)).collect();
        Self {
            n,
            m,
            seed: 0,
            matrix,
            sign_cache,
        }
    }
}

/// Draws an m x n ensemble with i.i.d. standard normal entries.
///
/// Entries come out of `ChaCha8Rng::seed_from_u64(seed)` in row-major
/// order, which pins the matrix bit-for-bit for a given `(n, m, seed)`.
pub fn generate_ensemble(n: usize, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    if n == 0 || m == 0 {
        return Err(HcsError::InvalidDimension(format!(
            "ensemble dimensions must be >= 1 (n = {n}, m = {m})"
        )));
    }
    let len = m
        .checked_mul(n)
        .ok_or_else(|| HcsError::InvalidDimension(format!("m * n overflows ({m} * {n})")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(StandardNormal.sample(&mut rng));
    }
    let sign_cache = data.iter().map(|&t| sign_pm(t)).collect();
    let matrix = Array2::from_shape_vec((m, n), data)
        .map_err(|e| HcsError::NumericFailure(format!("matrix shape: {e}")))?;
    Ok(MeasurementEnsemble {
        n,
        m,
        seed,
        matrix,
        sign_cache,
    })
}

// ------------------------------------------------------------ measurements

/// One-bit measurements: the signs of the ensemble projections of a signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementData")]
pub struct OneBitMeasurements {
    bits: Vec<i8>,
}

#[derive(Deserialize)]
struct MeasurementData {
    bits: Vec<i8>,
}

impl TryFrom<MeasurementData> for OneBitMeasurements {
    type Error = HcsError;

    fn try_from(data: MeasurementData) -> Result<Self> {
        if let Some(bad) = data.bits.iter().position(|b| *b != 1 && *b != -1) {
            return Err(HcsError::NumericFailure(format!(
                "measurement bit {bad} is not +1/-1"
            )));
        }
        Ok(Self { bits: data.bits })
    }
}

impl OneBitMeasurements {
    pub fn bits(&self) -> &[i8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Measures a unit signal: `y_j = sign(<row_j, x>)`, ties to +1.
pub fn measure(ensemble: &MeasurementEnsemble, signal: &Signal) -> Result<OneBitMeasurements> {
    if signal.len() != ensemble.n() {
        return Err(HcsError::DimensionMismatch {
            context: "measure",
            expected: ensemble.n(),
            got: signal.len(),
        });
    }
    Ok(OneBitMeasurements {
        bits: ensemble.sign_project(signal.values())?,
    })
}

// -------------------------------------------------------------- estimation

/// Empirical estimate of the disagreement rate for one coordinate.
///
/// `p_minus` is exactly `minus_count / sample_count`, the fraction of rows
/// where `y_j * sign(row_j[i]) = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernoulliEstimate {
    pub p_minus: f64,
    pub minus_count: usize,
    pub sample_count: usize,
}

impl BernoulliEstimate {
    pub fn p_plus(&self) -> f64 {
        1.0 - self.p_minus
    }
}

/// Estimates the disagreement rate of coordinate `i` (0-based).
pub fn estimate_bernoulli(
    y: &OneBitMeasurements,
    ensemble: &MeasurementEnsemble,
    i: usize,
) -> Result<BernoulliEstimate> {
    if i >= ensemble.n() {
        return Err(HcsError::IndexOutOfRange {
            index: i,
            len: ensemble.n(),
        });
    }
    check_measurement_len(y, ensemble)?;
    let n = ensemble.n();
    let m = ensemble.m();
    let cache = ensemble.sign_cache();
    let mut minus = 0usize;
    for (j, &yj) in y.bits().iter().enumerate() {
        if yj != cache[j * n + i] {
            minus += 1;
        }
    }
    Ok(BernoulliEstimate {
        p_minus: minus as f64 / m as f64,
        minus_count: minus,
        sample_count: m,
    })
}

/// Estimates all n coordinates in one pass over the sign cache.
pub fn estimate_all(
    y: &OneBitMeasurements,
    ensemble: &MeasurementEnsemble,
) -> Result<Vec<BernoulliEstimate>> {
    check_measurement_len(y, ensemble)?;
    let n = ensemble.n();
    let m = ensemble.m();
    let cache = ensemble.sign_cache();
    let mut minus = vec![0usize; n];
    for (j, &yj) in y.bits().iter().enumerate() {
        let row = &cache[j * n..(j + 1) * n];
        for (cnt, &s) in minus.iter_mut().zip(row) {
            if s != yj {
                *cnt += 1;
            }
        }
    }
    Ok(minus
        .into_iter()
        .map(|c| BernoulliEstimate {
            p_minus: c as f64 / m as f64,
            minus_count: c,
            sample_count: m,
        })
        .collect())
}

fn check_measurement_len(y: &OneBitMeasurements, ensemble: &MeasurementEnsemble) -> Result<()> {
    if y.len() != ensemble.m() {
        return Err(HcsError::DimensionMismatch {
            context: "measurement count",
            expected: ensemble.m(),
            got: y.len(),
        });
    }
    Ok(())
}
