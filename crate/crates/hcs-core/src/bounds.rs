//! Closed-form guarantees: failure probabilities for interval recovery,
//! sign flip rates under additive noise, and measurement-count formulas
//! that invert those tails.
//!
//! Positions are scored in the Bernoulli rate domain. A coordinate sitting
//! strictly inside its interval keeps a positive margin to the
//! nearest-neighbor thresholds on either side; the margin feeds Hoeffding
//! tails of the form `exp(-2 m margin^2)` and, inverted, the measurement
//! counts. A coordinate on a boundary has no margin and no finite count,
//! which surfaces as [`HcsError::DegeneratePosition`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{HcsError, Result};
use crate::measurement::Signal;
use crate::quantizer::{bernoulli_rate, HcsQuantizer};

/// Rate-domain margin at or below this counts as sitting on a boundary.
const DEGENERATE_MARGIN: f64 = 1e-12;

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(HcsError::InvalidConfig(format!("{name} = {value}")))
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    check_finite(name, value)?;
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(HcsError::InvalidConfig(format!(
            "{name} = {value} outside (0, 1)"
        )))
    }
}

fn check_positive_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(HcsError::InvalidConfig(
            "measurement count m must be positive".into(),
        ));
    }
    Ok(())
}

/// Expected sign disagreement rate under additive Gaussian noise of
/// deviation `sigma` on a signal of Euclidean length `x_norm`:
/// `sigma / (2 sqrt(x_norm^2 + sigma^2))`.
pub fn sign_consistency_bound(sigma: f64, x_norm: f64) -> Result<f64> {
    check_finite("sigma", sigma)?;
    check_finite("x_norm", x_norm)?;
    if sigma < 0.0 {
        return Err(HcsError::InvalidConfig(format!("sigma = {sigma} < 0")));
    }
    if x_norm <= 0.0 {
        return Err(HcsError::InvalidConfig(format!("x_norm = {x_norm} <= 0")));
    }
    Ok(sigma / (2.0 * (x_norm * x_norm + sigma * sigma).sqrt()))
}

/// Looser form `sigma / (2 x_norm)`, convenient when only the signal
/// length is known. Always at least [`sign_consistency_bound`].
pub fn sign_consistency_bound_loose(sigma: f64, x_norm: f64) -> Result<f64> {
    check_finite("sigma", sigma)?;
    check_finite("x_norm", x_norm)?;
    if sigma < 0.0 {
        return Err(HcsError::InvalidConfig(format!("sigma = {sigma} < 0")));
    }
    if x_norm <= 0.0 {
        return Err(HcsError::InvalidConfig(format!("x_norm = {x_norm} <= 0")));
    }
    Ok(sigma / (2.0 * x_norm))
}

/// Probability that the empirical sign disagreement exceeds its mean by
/// more than `gamma` over `m` measurements: `exp(-2 m gamma^2)`.
pub fn sign_consistency_tail(gamma: f64, m: usize) -> Result<f64> {
    check_finite("gamma", gamma)?;
    if gamma < 0.0 {
        return Err(HcsError::InvalidConfig(format!("gamma = {gamma} < 0")));
    }
    check_positive_m(m)?;
    Ok((-2.0 * m as f64 * gamma * gamma).exp())
}

/// True interval label of `x_i` plus its rate margins to the neighboring
/// thresholds. `up` is toward smaller intervals (larger rates), `down`
/// toward larger intervals; extreme intervals lack one side.
fn interval_margins(
    x_i: f64,
    quantizer: &HcsQuantizer,
) -> Result<(usize, Option<f64>, Option<f64>)> {
    let q = quantizer.quantize(&[x_i])?.indices()[0];
    let p = bernoulli_rate(x_i);
    let k = quantizer.k();
    let up = if q >= 2 {
        Some(quantizer.nn_threshold(q - 1)? - p)
    } else {
        None
    };
    let down = if q < k {
        Some(p - quantizer.nn_threshold(q)?)
    } else {
        None
    };
    Ok((q, up, down))
}

/// Probability that recovery of a coordinate at `x_i` returns the wrong
/// interval `q_star` from `m` measurements: `0.5 exp(-2 m margin^2)`,
/// where the margin is the rate distance from `x_i` to the threshold
/// separating its true interval from the candidate.
pub fn wrong_interval_tail_bound(
    x_i: f64,
    quantizer: &HcsQuantizer,
    q_star: usize,
    m: usize,
) -> Result<f64> {
    check_positive_m(m)?;
    let q = quantizer.quantize(&[x_i])?.indices()[0];
    let k = quantizer.k();
    if q_star < 1 || q_star > k {
        return Err(HcsError::InvalidCandidate {
            candidate: q_star,
            reason: "outside the interval range",
        });
    }
    if q_star == q {
        return Err(HcsError::InvalidCandidate {
            candidate: q_star,
            reason: "matches the true interval",
        });
    }
    let p = bernoulli_rate(x_i);
    // A candidate below the true interval is reached only when the
    // estimate climbs past the threshold bounding it from below, and
    // symmetrically above; the nearest such threshold gives the margin.
    let margin = if q_star < q {
        quantizer.nn_threshold(q_star)? - p
    } else {
        p - quantizer.nn_threshold(q_star - 1)?
    };
    let margin = margin.max(0.0);
    Ok(0.5 * (-2.0 * m as f64 * margin * margin).exp())
}

/// Measurements needed so that a coordinate at `x_i` recovers its interval
/// except with probability `eta`: `ceil(ln(1 / (2 eta)) / (2 delta))` with
/// `delta` the squared rate margin to the nearest threshold.
pub fn measurements_for_coordinate(
    x_i: f64,
    quantizer: &HcsQuantizer,
    eta: f64,
) -> Result<usize> {
    check_probability("eta", eta)?;
    let gap = smallest_margin(x_i, quantizer, 0)?;
    Ok(count_from_gap(gap, (1.0 / (2.0 * eta)).ln()))
}

/// Measurements needed so that every coordinate of `signal` recovers its
/// interval simultaneously except with probability `eta`; the union over
/// `n` coordinates inflates the log term to `ln(n / (2 eta))`.
pub fn measurements_for_signal(
    signal: &Signal,
    quantizer: &HcsQuantizer,
    eta: f64,
) -> Result<usize> {
    check_probability("eta", eta)?;
    let mut worst = f64::INFINITY;
    for (i, &x_i) in signal.values().iter().enumerate() {
        let gap = smallest_margin(x_i, quantizer, i)?;
        worst = worst.min(gap);
    }
    let n = signal.len() as f64;
    Ok(count_from_gap(worst, (n / (2.0 * eta)).ln()))
}

fn smallest_margin(x_i: f64, quantizer: &HcsQuantizer, index: usize) -> Result<f64> {
    let (_, up, down) = interval_margins(x_i, quantizer)?;
    let gap = match (up, down) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        // Unreachable: k >= 2 leaves at least one threshold next to any
        // interval.
        (None, None) => return Err(HcsError::DegeneratePosition { index }),
    };
    if gap <= DEGENERATE_MARGIN {
        return Err(HcsError::DegeneratePosition { index });
    }
    Ok(gap)
}

fn count_from_gap(gap: f64, log_term: f64) -> usize {
    let raw = (log_term / (2.0 * gap * gap)).ceil();
    if raw < 1.0 {
        1
    } else {
        raw as usize
    }
}

/// Measurements for a uniform angular-distance embedding of all unit
/// `sparsity`-sparse signals in dimension `n`: distortion at most `eps`
/// except with probability `mu`.
pub fn measurements_for_embedding(
    sparsity: usize,
    n: usize,
    eps: f64,
    mu: f64,
) -> Result<usize> {
    if sparsity == 0 || sparsity > n {
        return Err(HcsError::InvalidConfig(format!(
            "sparsity {sparsity} out of 1..={n}"
        )));
    }
    check_finite("eps", eps)?;
    if eps <= 0.0 || eps > 1.0 {
        return Err(HcsError::InvalidConfig(format!(
            "eps = {eps} outside (0, 1]"
        )));
    }
    check_probability("mu", mu)?;
    let k = sparsity as f64;
    let raw = (4.0 / (eps * eps))
        * (k * (n as f64).ln() + 2.0 * k * (50.0 / eps).ln() + (2.0 / mu).ln());
    Ok(raw.ceil().max(1.0) as usize)
}

/// Angular error guarantee for recovery from noisy signs: the expected
/// flip rate (loose form), the concentration slack `gamma`, and the
/// noiseless embedding distortion `eps` add up.
pub fn noisy_angular_error_bound(
    sigma: f64,
    x_norm: f64,
    gamma: f64,
    eps: f64,
) -> Result<f64> {
    let flip = sign_consistency_bound_loose(sigma, x_norm)?;
    check_finite("gamma", gamma)?;
    check_finite("eps", eps)?;
    if gamma < 0.0 || eps < 0.0 {
        return Err(HcsError::InvalidConfig(format!(
            "gamma = {gamma}, eps = {eps}: slack terms must be nonnegative"
        )));
    }
    Ok(flip + gamma + eps)
}

/// How to read a bound's numeric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpretation {
    Probability,
    Count,
    Distance,
}

/// A named bound evaluation with the inputs that produced it; the map is
/// ordered so serialized reports are byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub interpretation: Interpretation,
}

impl BoundReport {
    pub fn new(
        name: &str,
        inputs: &[(&str, f64)],
        value: f64,
        interpretation: Interpretation,
    ) -> Self {
        Self {
            name: name.to_string(),
            inputs: inputs
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            value,
            interpretation,
        }
    }
}
