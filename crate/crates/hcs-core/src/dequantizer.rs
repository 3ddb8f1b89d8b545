//! Value reconstruction on top of recovered intervals.
//!
//! Two routes back from interval labels to real vectors: interval
//! midpoints (closed form, no measurements touched again), and binary
//! iterative hard thresholding driven by the sign measurements, optionally
//! clamped into the per-coordinate interval box that recovery produced.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{HcsError, Result};
use crate::measurement::{l2_norm, sign_pm, MeasurementEnsemble, OneBitMeasurements};
use crate::quantizer::{HcsQuantizer, QuantizedSignal};

/// Per-coordinate closed interval constraints, usually the recovered
/// quantizer intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SignalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(HcsError::DimensionMismatch {
                context: "SignalBox::new",
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(HcsError::InvalidDimension("empty box".into()));
        }
        for (i, (&a, &b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(HcsError::InvalidConfig(format!(
                    "box coordinate {i} has invalid bounds [{a}, {b}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }
}

/// The box spanned by each coordinate's recovered interval.
pub fn box_from_recovery(
    q_star: &QuantizedSignal,
    quantizer: &HcsQuantizer,
) -> Result<SignalBox> {
    if q_star.config() != quantizer.config() {
        return Err(HcsError::MismatchedQuantizer);
    }
    let mut lo = Vec::with_capacity(q_star.len());
    let mut hi = Vec::with_capacity(q_star.len());
    for &q in q_star.indices() {
        let (a, b) = quantizer.interval_bounds(q)?;
        lo.push(a);
        hi.push(b);
    }
    SignalBox::new(lo, hi)
}

/// Clamps each coordinate into its box interval.
pub fn project_box(values: &[f64], bounds: &SignalBox) -> Result<Vec<f64>> {
    if values.len() != bounds.len() {
        return Err(HcsError::DimensionMismatch {
            context: "project_box",
            expected: bounds.len(),
            got: values.len(),
        });
    }
    Ok(values
        .iter()
        .zip(bounds.lo().iter().zip(bounds.hi()))
        .map(|(&v, (&a, &b))| v.clamp(a, b))
        .collect())
}

/// Norm floor below which a midpoint vector counts as zero. Genuine
/// midpoints sit at least half an interval width from zero; only the
/// central interval of an odd-count quantizer collapses to (numerical)
/// zero, and rounding leaves it within a few ulps rather than exact.
const MIDPOINT_NORM_FLOOR: f64 = 1e-12;

/// Midpoints of the recovered intervals, rescaled to the unit sphere.
///
/// Fails with [`HcsError::ZeroVector`] when every midpoint is zero, which
/// happens for odd interval counts when all coordinates land in the
/// central interval.
pub fn midpoint_dequantize(
    q_star: &QuantizedSignal,
    quantizer: &HcsQuantizer,
) -> Result<Vec<f64>> {
    if q_star.config() != quantizer.config() {
        return Err(HcsError::MismatchedQuantizer);
    }
    let mut values = Vec::with_capacity(q_star.len());
    for &q in q_star.indices() {
        let (a, b) = quantizer.interval_bounds(q)?;
        values.push((a + b) / 2.0);
    }
    let norm = l2_norm(&values);
    if norm <= MIDPOINT_NORM_FLOOR {
        return Err(HcsError::ZeroVector);
    }
    for v in &mut values {
        *v /= norm;
    }
    Ok(values)
}

/// Keeps the `keep` largest-magnitude entries and zeroes the rest. Equal
/// magnitudes favor the smaller index.
pub fn hard_threshold(values: &[f64], keep: usize) -> Vec<f64> {
    if keep >= values.len() {
        return values.to_vec();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort on descending magnitude keeps index order among ties.
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    let mut out = vec![0.0; values.len()];
    for &i in order.iter().take(keep) {
        out[i] = values[i];
    }
    out
}

/// Iteration controls for [`biht`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DequantizerConfig {
    /// Update cap; the initial point counts as iteration zero.
    pub max_iterations: usize,
    /// Gradient step; `None` selects `1 / m`.
    pub step_size: Option<f64>,
    /// Support size for hard thresholding; `None` runs dense.
    pub sparsity: Option<usize>,
    /// Stop once the sign disagreement fraction drops this low.
    pub tolerance: f64,
}

impl Default for DequantizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_size: None,
            sparsity: None,
            tolerance: 0.0,
        }
    }
}

/// A reconstructed unit vector with its iteration audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct DequantizedSignal {
    pub values: Vec<f64>,
    pub iterations_used: usize,
    /// Sign disagreement fraction per iterate, starting with the initial
    /// point; one entry per update follows.
    pub hamming_error_trace: Vec<f64>,
}

/// Binary iterative hard thresholding.
///
/// Starts from the normalized back projection of the measurements, steps
/// along `(tau / 2) * transpose(phi) * (y - sign(phi x))`, thresholds to
/// the configured support size, clamps into `bounds` when given, and
/// stops once the disagreement fraction reaches the tolerance or the
/// iteration cap. Only the returned vector is normalized; intermediate
/// iterates are not, which leaves their measurement signs unchanged.
pub fn biht(
    y: &OneBitMeasurements,
    ensemble: &MeasurementEnsemble,
    config: &DequantizerConfig,
    bounds: Option<&SignalBox>,
) -> Result<DequantizedSignal> {
    let m = ensemble.m();
    let n = ensemble.n();
    if y.len() != m {
        return Err(HcsError::DimensionMismatch {
            context: "biht measurements",
            expected: m,
            got: y.len(),
        });
    }
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(HcsError::DimensionMismatch {
                context: "biht box",
                expected: n,
                got: b.len(),
            });
        }
    }
    if let Some(tau) = config.step_size {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(HcsError::InvalidConfig(format!("step size {tau}")));
        }
    }
    if let Some(keep) = config.sparsity {
        if keep == 0 || keep > n {
            return Err(HcsError::InvalidConfig(format!(
                "sparsity {keep} out of 1..={n}"
            )));
        }
    }
    if !(0.0..=1.0).contains(&config.tolerance) {
        return Err(HcsError::InvalidConfig(format!(
            "tolerance {} outside [0, 1]",
            config.tolerance
        )));
    }

    let tau = config.step_size.unwrap_or(1.0 / m as f64);
    let phi = ensemble.matrix();
    let y_f = Array1::from_iter(y.bits().iter().map(|&b| f64::from(b)));

    let mut x = phi.t().dot(&y_f);
    let norm = l2_norm(x.as_slice().expect("contiguous"));
    if norm == 0.0 {
        return Err(HcsError::ZeroVector);
    }
    x.mapv_inplace(|v| v / norm);

    let disagreement = |v: &Array1<f64>| -> f64 {
        let projected = phi.dot(v);
        let wrong = projected
            .iter()
            .zip(y.bits())
            .filter(|(&p, &b)| sign_pm(p) != b)
            .count();
        wrong as f64 / m as f64
    };

    let mut trace = vec![disagreement(&x)];
    let mut iterations = 0;
    while iterations < config.max_iterations {
        if trace[trace.len() - 1] <= config.tolerance {
            break;
        }
        let current_signs = phi.dot(&x).mapv(|v| f64::from(sign_pm(v)));
        let residual = &y_f - &current_signs;
        let mut g = &x + &(phi.t().dot(&residual) * (tau / 2.0));
        if let Some(keep) = config.sparsity {
            g = Array1::from_vec(hard_threshold(g.as_slice().expect("contiguous"), keep));
        }
        if let Some(b) = bounds {
            g = Array1::from_vec(project_box(g.as_slice().expect("contiguous"), b)?);
        }
        x = g;
        iterations += 1;
        trace.push(disagreement(&x));
    }

    let norm = l2_norm(x.as_slice().expect("contiguous"));
    if norm == 0.0 {
        return Err(HcsError::ZeroVector);
    }
    x.mapv_inplace(|v| v / norm);
    Ok(DequantizedSignal {
        values: x.to_vec(),
        iterations_used: iterations,
        hamming_error_trace: trace,
    })
}

/// Normalized angular distance in [0, 1]: `arccos` of the cosine
/// similarity divided by pi.
pub fn angular_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(HcsError::DimensionMismatch {
            context: "angular_error",
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return Err(HcsError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
}

/// Fraction of disagreeing sign bits.
pub fn hamming_distance(a: &[i8], b: &[i8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(HcsError::DimensionMismatch {
            context: "hamming_distance",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.is_empty() {
        return Err(HcsError::InvalidDimension("empty sign vectors".into()));
    }
    let wrong = a.iter().zip(b).filter(|(&x, &y)| x != y).count();
    Ok(wrong as f64 / a.len() as f64)
}
