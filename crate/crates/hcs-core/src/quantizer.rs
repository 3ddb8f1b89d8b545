//! The HCS quantizer: k signal intervals whose images are uniformly spaced
//! in the Bernoulli domain.
//!
//! `arccos(x)/pi` maps a signal value in [-1, 1] to the probability that a
//! random Gaussian projection disagrees in sign with its coordinate axis.
//! The construction lays k probability boundaries `P_j` uniformly (spacing
//! `delta`) between the images of `x_inf` and `x_sup`, then pulls them back
//! to signal boundaries `S_j` through a likelihood-ratio spacing function
//! `f`, chosen so that the KL nearest-neighbor regions of the `P_j` tile
//! `[x_inf, x_sup]`: an estimated rate lands in the region of `P_j` exactly
//! when the signal value lies in `[S_j, S_{j+1}]`.
//!
//! Interval labels are 1-based (`q` in `1..=k`); boundary arrays are
//! 0-based (`P_0..P_{k-1}`, `S_0..S_k`).

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{HcsError, Result};
use crate::measurement::Signal;

/// Tolerance for probability-boundary range checks and table validation.
const BOUNDARY_TOL: f64 = 1e-12;

/// Slack allowed on quantizer range checks; matches the unit-norm
/// tolerance so a valid signal never fails the range test spuriously.
const RANGE_TOL: f64 = 1e-9;

/// The disagreement rate of a signal value: `arccos(x)/pi`, with x clamped
/// to [-1, 1] to absorb norm-tolerance slack.
pub fn bernoulli_rate(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

/// `t*ln(t) + (1-t)*ln(1-t)` with the `0*ln(0) = 0` convention.
fn neg_entropy(t: f64) -> f64 {
    let mut acc = 0.0;
    if t > 0.0 {
        acc += t * t.ln();
    }
    if t < 1.0 {
        acc += (1.0 - t) * (1.0 - t).ln();
    }
    acc
}

/// Log of the spacing function `f(p; delta)`, evaluated in log space so
/// extreme spacings neither overflow nor lose the `0*ln(0)` edge cases.
///
/// `f(p; delta) = [ p^p (1-p)^(1-p) / ((p+d)^(p+d) (1-p-d)^(1-p-d)) ]^(1/d)`
pub fn log_f_ratio(p_minus: f64, delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(HcsError::DomainError(format!(
            "spacing delta must be positive and finite, got {delta}"
        )));
    }
    if !p_minus.is_finite() || p_minus < -BOUNDARY_TOL || p_minus + delta > 1.0 + BOUNDARY_TOL {
        return Err(HcsError::DomainError(format!(
            "spacing function needs 0 <= p and p + delta <= 1, got p = {p_minus}, delta = {delta}"
        )));
    }
    let lo = p_minus.clamp(0.0, 1.0);
    let hi = (p_minus + delta).min(1.0);
    Ok((neg_entropy(lo) - neg_entropy(hi)) / delta)
}

/// The spacing function itself. Strictly decreasing in `p_minus`.
pub fn f_ratio(p_minus: f64, delta: f64) -> Result<f64> {
    Ok(log_f_ratio(p_minus, delta)?.exp())
}

/// `1 / (1 + exp(log_f))`, evaluated stably on both tails.
fn threshold_from_log_f(log_f: f64) -> f64 {
    if log_f >= 0.0 {
        let e = (-log_f).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + log_f.exp())
    }
}

// ------------------------------------------------------------ construction

/// Parameters of a quantizer: level count and signal range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub k: usize,
    pub x_inf: f64,
    pub x_sup: f64,
}

impl QuantizerConfig {
    /// k levels over the full range [-1, 1].
    pub fn symmetric(k: usize) -> Self {
        Self {
            k,
            x_inf: -1.0,
            x_sup: 1.0,
        }
    }
}

/// A built quantizer: probability boundaries `P_0 > ... > P_{k-1}` and
/// signal boundaries `S_0 < ... < S_k`, both cached at construction.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "QuantizerData")]
pub struct HcsQuantizer {
    config: QuantizerConfig,
    delta: f64,
    p_boundaries: Vec<f64>,
    s_boundaries: Vec<f64>,
}

#[derive(Deserialize)]
struct QuantizerData {
    k: usize,
    x_inf: f64,
    x_sup: f64,
    delta: f64,
    p_boundaries: Vec<f64>,
    s_boundaries: Vec<f64>,
}

impl Serialize for HcsQuantizer {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("HcsQuantizer", 6)?;
        s.serialize_field("k", &self.config.k)?;
        s.serialize_field("x_inf", &self.config.x_inf)?;
        s.serialize_field("x_sup", &self.config.x_sup)?;
        s.serialize_field("delta", &self.delta)?;
        s.serialize_field("p_boundaries", &self.p_boundaries)?;
        s.serialize_field("s_boundaries", &self.s_boundaries)?;
        s.end()
    }
}

impl TryFrom<QuantizerData> for HcsQuantizer {
    type Error = HcsError;

    fn try_from(data: QuantizerData) -> Result<Self> {
        let rebuilt = HcsQuantizer::new(QuantizerConfig {
            k: data.k,
            x_inf: data.x_inf,
            x_sup: data.x_sup,
        })?;
        let tables_match = (rebuilt.delta - data.delta).abs() <= BOUNDARY_TOL
            && rebuilt.p_boundaries.len() == data.p_boundaries.len()
            && rebuilt.s_boundaries.len() == data.s_boundaries.len()
            && rebuilt
                .p_boundaries
                .iter()
                .zip(&data.p_boundaries)
                .all(|(a, b)| (a - b).abs() <= BOUNDARY_TOL)
            && rebuilt
                .s_boundaries
                .iter()
                .zip(&data.s_boundaries)
                .all(|(a, b)| (a - b).abs() <= BOUNDARY_TOL);
        if !tables_match {
            return Err(HcsError::NumericFailure(
                "stored quantizer tables do not match their parameters".into(),
            ));
        }
        Ok(rebuilt)
    }
}

impl HcsQuantizer {
    /// Builds the boundary tables for a config.
    ///
    /// `S_0 = x_inf`, `S_k = x_sup`, and interior `S_j = cos(pi * t_j)`
    /// with `t_j = 1 / (1 + f(P_j; delta))`.
    pub fn new(config: QuantizerConfig) -> Result<Self> {
        let QuantizerConfig { k, x_inf, x_sup } = config;
        if k < 2 {
            return Err(HcsError::InvalidConfig(format!(
                "quantizer needs k >= 2 levels, got {k}"
            )));
        }
        if !x_inf.is_finite() || !x_sup.is_finite() {
            return Err(HcsError::InvalidConfig("quantizer range must be finite".into()));
        }
        if !(-1.0..=1.0).contains(&x_inf) || !(-1.0..=1.0).contains(&x_sup) || x_inf >= x_sup {
            return Err(HcsError::InvalidConfig(format!(
                "quantizer range must satisfy -1 <= x_inf < x_sup <= 1, got [{x_inf}, {x_sup}]"
            )));
        }

        let p_hi = bernoulli_rate(x_inf);
        let p_lo = bernoulli_rate(x_sup);
        let delta = (p_hi - p_lo) / (k as f64 - 1.0);
        if !delta.is_finite() || delta <= 0.0 {
            return Err(HcsError::NumericFailure(format!(
                "probability spacing collapsed (delta = {delta})"
            )));
        }

        let mut p_boundaries = Vec::with_capacity(k);
        for j in 0..k {
            let p = p_hi - j as f64 * delta;
            if !(-BOUNDARY_TOL..=1.0 + BOUNDARY_TOL).contains(&p) {
                return Err(HcsError::NumericFailure(format!(
                    "probability boundary P_{j} = {p} outside [0, 1]"
                )));
            }
            p_boundaries.push(p.clamp(0.0, 1.0));
        }

        let mut s_boundaries = Vec::with_capacity(k + 1);
        s_boundaries.push(x_inf);
        for &p in p_boundaries.iter().skip(1) {
            let t = threshold_from_log_f(log_f_ratio(p, delta)?);
            s_boundaries.push((std::f64::consts::PI * t).cos());
        }
        s_boundaries.push(x_sup);

        for j in 0..k {
            // partial_cmp so a NaN boundary fails the check too.
            if s_boundaries[j].partial_cmp(&s_boundaries[j + 1]) != Some(std::cmp::Ordering::Less)
            {
                return Err(HcsError::NumericFailure(format!(
                    "signal boundaries not strictly increasing at S_{j}"
                )));
            }
        }

        Ok(Self {
            config,
            delta,
            p_boundaries,
            s_boundaries,
        })
    }

    pub fn config(&self) -> QuantizerConfig {
        self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `P_0 > P_1 > ... > P_{k-1}`, the Bernoulli-domain boundary rates.
    pub fn p_boundaries(&self) -> &[f64] {
        &self.p_boundaries
    }

    /// `S_0 < S_1 < ... < S_k`, the signal-domain boundaries.
    pub fn s_boundaries(&self) -> &[f64] {
        &self.s_boundaries
    }

    /// The Bernoulli-domain nearest-neighbor threshold between `P_{j-1}`
    /// and `P_j`: estimates above it are closer (in KL) to `P_{j-1}`,
    /// estimates below it closer to `P_j`. Valid for `j` in `1..=k-1`.
    pub fn nn_threshold(&self, j: usize) -> Result<f64> {
        if j == 0 || j >= self.config.k {
            return Err(HcsError::IndexOutOfRange {
                index: j,
                len: self.config.k,
            });
        }
        Ok(threshold_from_log_f(log_f_ratio(
            self.p_boundaries[j],
            self.delta,
        )?))
    }

    /// Short stable identifier of the generating parameters.
    pub fn id(&self) -> String {
        quantizer_id(&self.config)
    }

    /// Maps each signal value to its 1-based interval: the unique `q` with
    /// `S_{q-1} <= x < S_q`, except `x = x_sup` maps to `k`.
    ///
    /// Values may exceed the range by at most the unit-norm tolerance
    /// (they are clamped); anything further out is an error naming the
    /// offending index.
    pub fn quantize(&self, values: &[f64]) -> Result<QuantizedSignal> {
        if values.is_empty() {
            return Err(HcsError::InvalidDimension("cannot quantize an empty vector".into()));
        }
        let QuantizerConfig { k, x_inf, x_sup } = self.config;
        let interior = &self.s_boundaries[1..k];
        let mut indices = Vec::with_capacity(values.len());
        for (index, &x) in values.iter().enumerate() {
            if !x.is_finite() || x < x_inf - RANGE_TOL || x > x_sup + RANGE_TOL {
                return Err(HcsError::OutOfRange {
                    index,
                    value: x,
                    lo: x_inf,
                    hi: x_sup,
                });
            }
            let xc = x.clamp(x_inf, x_sup);
            let q = 1 + interior.partition_point(|&b| b <= xc);
            indices.push(q);
        }
        Ok(QuantizedSignal {
            indices,
            config: self.config,
        })
    }

    /// Convenience wrapper for unit signals.
    pub fn quantize_signal(&self, signal: &Signal) -> Result<QuantizedSignal> {
        self.quantize(signal.values())
    }

    /// `(S_{q-1}, S_q)` for a 1-based interval label.
    pub fn interval_bounds(&self, q: usize) -> Result<(f64, f64)> {
        if q == 0 || q > self.config.k {
            return Err(HcsError::IndexOutOfRange {
                index: q,
                len: self.config.k,
            });
        }
        Ok((self.s_boundaries[q - 1], self.s_boundaries[q]))
    }

    /// The widest interval, `max_q (S_q - S_{q-1})`.
    pub fn max_interval_width(&self) -> f64 {
        self.s_boundaries
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn quantizer_id(config: &QuantizerConfig) -> String {
    let canonical = format!(
        "hcs-quantizer/v1:k={};x_inf={:.16e};x_sup={:.16e}",
        config.k, config.x_inf, config.x_sup
    );
    let digest = Sha256::digest(canonical.as_bytes());
    let mut id = String::with_capacity(16);
    for byte in &digest[..8] {
        id.push_str(&format!("{byte:02x}"));
    }
    id
}

// ------------------------------------------------------- quantized signals

/// Interval labels for every coordinate, plus the generating parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "QuantizedData")]
pub struct QuantizedSignal {
    indices: Vec<usize>,
    config: QuantizerConfig,
}

#[derive(Deserialize)]
struct QuantizedData {
    indices: Vec<usize>,
    k: usize,
    x_inf: f64,
    x_sup: f64,
    quantizer_id: String,
}

impl Serialize for QuantizedSignal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("QuantizedSignal", 5)?;
        s.serialize_field("indices", &self.indices)?;
        s.serialize_field("k", &self.config.k)?;
        s.serialize_field("x_inf", &self.config.x_inf)?;
        s.serialize_field("x_sup", &self.config.x_sup)?;
        s.serialize_field("quantizer_id", &quantizer_id(&self.config))?;
        s.end()
    }
}

impl TryFrom<QuantizedData> for QuantizedSignal {
    type Error = HcsError;

    fn try_from(data: QuantizedData) -> Result<Self> {
        let config = QuantizerConfig {
            k: data.k,
            x_inf: data.x_inf,
            x_sup: data.x_sup,
        };
        if quantizer_id(&config) != data.quantizer_id {
            return Err(HcsError::MismatchedQuantizer);
        }
        QuantizedSignal::new(data.indices, config)
    }
}

impl QuantizedSignal {
    pub fn new(indices: Vec<usize>, config: QuantizerConfig) -> Result<Self> {
        if indices.is_empty() {
            return Err(HcsError::InvalidDimension("empty quantized signal".into()));
        }
        if let Some(bad) = indices.iter().position(|&q| q == 0 || q > config.k) {
            return Err(HcsError::InvalidCandidate {
                candidate: indices[bad],
                reason: "interval label outside 1..=k",
            });
        }
        Ok(Self { indices, config })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn config(&self) -> QuantizerConfig {
        self.config
    }

    pub fn k(&self) -> usize {
        self.config.k
    }
}

#[cfg(test)]
// Frozen reference constants are written out at full precision.
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values: tools/oracle.py (mpmath, 50 digits).

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spacing_function_matches_reference_values() {
        assert!(close(f_ratio(0.4, 0.1).unwrap(), 1.2230590464, 1e-10));
        assert!(close(
            log_f_ratio(0.4, 0.1).unwrap(),
            0.20135513550688873,
            1e-12
        ));
        assert!(close(f_ratio(0.0, 0.5).unwrap(), 4.0, 1e-12));
        assert!(close(f_ratio(0.5, 0.5).unwrap(), 0.25, 1e-12));
        assert!(close(f_ratio(0.0, 1.0).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn spacing_function_is_strictly_decreasing() {
        let delta = 0.2;
        let mut prev = f_ratio(0.0, delta).unwrap();
        for step in 1..=40 {
            let p = step as f64 * 0.02;
            let cur = f_ratio(p, delta).unwrap();
            assert!(cur < prev, "f not decreasing at p = {p}");
            prev = cur;
        }
    }

    #[test]
    fn spacing_function_mirror_identity() {
        // f(p; d) * f(1-p-d; d) = 1, from the symmetry of t*ln(t)+(1-t)*ln(1-t).
        for &(p, d) in &[(0.1, 0.3), (0.25, 0.25), (0.0, 0.7), (0.4, 0.11)] {
            let prod = f_ratio(p, d).unwrap() * f_ratio(1.0 - p - d, d).unwrap();
            assert!(close(prod, 1.0, 1e-12), "p = {p}, d = {d}: {prod}");
        }
    }

    #[test]
    fn spacing_function_rejects_out_of_domain_inputs() {
        assert!(f_ratio(0.8, 0.3).is_err());
        assert!(f_ratio(-0.1, 0.2).is_err());
        assert!(f_ratio(0.2, 0.0).is_err());
        assert!(f_ratio(0.2, -0.5).is_err());
    }

    #[test]
    fn two_level_quantizer_is_sign_quantization() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(2)).unwrap();
        assert_eq!(q.s_boundaries().len(), 3);
        assert_eq!(q.s_boundaries()[0], -1.0);
        assert!(q.s_boundaries()[1].abs() <= 1e-12);
        assert_eq!(q.s_boundaries()[2], 1.0);
        assert!(close(q.p_boundaries()[0], 1.0, 1e-15));
        assert!(close(q.p_boundaries()[1], 0.0, 1e-15));
    }

    #[test]
    fn three_level_quantizer_is_symmetric() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(3)).unwrap();
        let s = q.s_boundaries();
        assert!(close(s[1], -0.80901699437494742, 1e-12));
        assert!(close(s[2], 0.80901699437494742, 1e-12));
        assert!(close(s[1] + s[2], 0.0, 1e-15));
    }

    #[test]
    fn eight_level_tables_match_reference() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(8)).unwrap();
        assert!(close(q.delta(), 0.14285714285714286, 1e-15));
        let p_ref = [
            1.0,
            0.85714285714285714,
            0.71428571428571429,
            0.57142857142857143,
            0.42857142857142857,
            0.28571428571428571,
            0.14285714285714286,
            0.0,
        ];
        for (j, &p) in p_ref.iter().enumerate() {
            assert!(close(q.p_boundaries()[j], p, 1e-12), "P_{j}");
        }
        let s_ref = [
            -1.0,
            -0.98584791058004066,
            -0.78763424046056403,
            -0.43692245600955121,
            0.0,
            0.43692245600955121,
            0.78763424046056403,
            0.98584791058004066,
            1.0,
        ];
        for (j, &s) in s_ref.iter().enumerate() {
            assert!(close(q.s_boundaries()[j], s, 1e-12), "S_{j}");
        }
        let t_ref = [
            0.94638467752778387,
            0.78869429981743188,
            0.64393158870801566,
            0.50000000000000000,
            0.35606841129198434,
            0.21130570018256812,
            0.053615322472216125,
        ];
        for (j, &t) in t_ref.iter().enumerate() {
            assert!(close(q.nn_threshold(j + 1).unwrap(), t, 1e-12), "t_{}", j + 1);
        }
    }

    #[test]
    fn asymmetric_range_tables_match_reference() {
        let q = HcsQuantizer::new(QuantizerConfig {
            k: 4,
            x_inf: -0.9,
            x_sup: 0.8,
        })
        .unwrap();
        assert!(close(q.delta(), 0.21720031405738676, 1e-12));
        let p_ref = [
            0.85643370687129373,
            0.63923339281390697,
            0.42203307875652021,
            0.20483276469913345,
        ];
        let s_ref = [
            -0.9,
            -0.71442658454056979,
            -0.097645309376340476,
            0.56240078974654397,
            0.8,
        ];
        for (j, &p) in p_ref.iter().enumerate() {
            assert!(close(q.p_boundaries()[j], p, 1e-12), "P_{j}");
        }
        for (j, &s) in s_ref.iter().enumerate() {
            assert!(close(q.s_boundaries()[j], s, 1e-12), "S_{j}");
        }
    }

    #[test]
    fn probability_boundaries_telescope_exactly() {
        for trial in 0..50u64 {
            let k = 2 + (trial as usize * 7) % 30;
            let x_inf = -1.0 + 0.015 * trial as f64;
            let x_sup = 1.0 - 0.007 * trial as f64;
            let q = HcsQuantizer::new(QuantizerConfig { k, x_inf, x_sup }).unwrap();
            for j in 0..k - 1 {
                let gap = q.p_boundaries()[j] - q.p_boundaries()[j + 1];
                assert!(
                    close(gap, q.delta(), 1e-12),
                    "config {trial}: gap {gap} vs delta {}",
                    q.delta()
                );
            }
        }
    }

    #[test]
    fn interior_widths_for_fifty_levels_match_pinned_spread() {
        // Regression pin from tools/oracle.py: interior widths (excluding
        // the two extreme intervals) spread by a factor of ~15.356.
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(50)).unwrap();
        let widths: Vec<f64> = q.s_boundaries().windows(2).map(|w| w[1] - w[0]).collect();
        let interior = &widths[1..49];
        let max = interior.iter().cloned().fold(f64::MIN, f64::max);
        let min = interior.iter().cloned().fold(f64::MAX, f64::min);
        assert!(close(max, 0.064079119778673005, 1e-12));
        assert!(close(min, 0.0041728688988893001, 1e-12));
        assert!(close(max / min, 15.356130597759507, 1e-9));
    }

    #[test]
    fn boundary_images_sit_between_their_probability_neighbors() {
        // Applying the rate map to an interior S_j lands strictly between
        // P_j and P_{j-1}.
        for k in [2usize, 3, 5, 8, 17] {
            let q = HcsQuantizer::new(QuantizerConfig::symmetric(k)).unwrap();
            for j in 1..k {
                let rate = bernoulli_rate(q.s_boundaries()[j]);
                assert!(
                    q.p_boundaries()[j] < rate && rate < q.p_boundaries()[j - 1],
                    "k = {k}, j = {j}"
                );
            }
        }
    }

    #[test]
    fn quantize_respects_half_open_intervals() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(8)).unwrap();
        let s = q.s_boundaries().to_vec();
        // Exact boundaries belong to the interval on their right, except
        // x_sup which closes the last interval.
        let labels = q
            .quantize(&[s[0], s[1], s[4], s[7], s[8]])
            .unwrap()
            .indices()
            .to_vec();
        assert_eq!(labels, vec![1, 2, 5, 8, 8]);
        // Strictly interior points.
        let mid = (s[2] + s[3]) / 2.0;
        assert_eq!(q.quantize(&[mid]).unwrap().indices(), &[3]);
    }

    #[test]
    fn quantize_round_trip_residency() {
        let q = HcsQuantizer::new(QuantizerConfig {
            k: 6,
            x_inf: -0.95,
            x_sup: 0.9,
        })
        .unwrap();
        let mut x = -0.95;
        while x <= 0.9 {
            let label = q.quantize(&[x]).unwrap().indices()[0];
            let (lo, hi) = q.interval_bounds(label).unwrap();
            assert!(lo <= x && (x < hi || (label == 6 && x <= hi)), "x = {x}");
            x += 0.01737;
        }
    }

    #[test]
    fn quantize_rejects_out_of_range_entries() {
        let q = HcsQuantizer::new(QuantizerConfig {
            k: 4,
            x_inf: -0.5,
            x_sup: 0.5,
        })
        .unwrap();
        match q.quantize(&[0.1, 0.7, 0.0]) {
            Err(HcsError::OutOfRange { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }

    #[test]
    fn quantize_tolerates_unit_norm_slack() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(4)).unwrap();
        let labels = q.quantize(&[1.0 + 5e-10, -1.0 - 5e-10]).unwrap();
        assert_eq!(labels.indices(), &[4, 1]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(HcsQuantizer::new(QuantizerConfig::symmetric(1)).is_err());
        assert!(HcsQuantizer::new(QuantizerConfig {
            k: 4,
            x_inf: 0.5,
            x_sup: 0.5
        })
        .is_err());
        assert!(HcsQuantizer::new(QuantizerConfig {
            k: 4,
            x_inf: -1.5,
            x_sup: 0.5
        })
        .is_err());
    }

    #[test]
    fn interval_bounds_cover_the_range_without_gaps() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(5)).unwrap();
        let mut right = -1.0;
        for label in 1..=5 {
            let (lo, hi) = q.interval_bounds(label).unwrap();
            assert_eq!(lo, right);
            assert!(hi > lo);
            right = hi;
        }
        assert_eq!(right, 1.0);
        assert!(q.interval_bounds(0).is_err());
        assert!(q.interval_bounds(6).is_err());
    }

    #[test]
    fn max_interval_width_is_the_maximum() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(8)).unwrap();
        let expect = q
            .s_boundaries()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::MIN, f64::max);
        assert_eq!(q.max_interval_width(), expect);
    }

    #[test]
    fn quantizer_json_round_trip_and_integrity() {
        let q = HcsQuantizer::new(QuantizerConfig {
            k: 7,
            x_inf: -0.8,
            x_sup: 0.95,
        })
        .unwrap();
        let text = serde_json::to_string(&q).unwrap();
        let back: HcsQuantizer = serde_json::from_str(&text).unwrap();
        assert_eq!(q, back);

        // A corrupted boundary table must be refused.
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["s_boundaries"][1] = serde_json::json!(0.123);
        let corrupted = serde_json::to_string(&value).unwrap();
        assert!(serde_json::from_str::<HcsQuantizer>(&corrupted).is_err());
    }

    #[test]
    fn quantized_signal_serialization_carries_id() {
        let q = HcsQuantizer::new(QuantizerConfig::symmetric(3)).unwrap();
        let labels = q.quantize(&[-0.9, 0.0, 0.9]).unwrap();
        let text = serde_json::to_string(&labels).unwrap();
        assert!(text.contains("quantizer_id"));
        let back: QuantizedSignal = serde_json::from_str(&text).unwrap();
        assert_eq!(labels, back);
    }

    #[test]
    fn quantizer_ids_separate_configs() {
        let a = HcsQuantizer::new(QuantizerConfig::symmetric(8)).unwrap();
        let b = HcsQuantizer::new(QuantizerConfig::symmetric(9)).unwrap();
        let c = HcsQuantizer::new(QuantizerConfig::symmetric(8)).unwrap();
        assert_ne!(a.id(), b.id());
        assert_eq!(a.id(), c.id());
    }
}
