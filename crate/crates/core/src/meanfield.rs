//! Mean-field consistency equations and the closed forms built on them.
//!
//! The spontaneous magnetization `m⁺(β, h)` is the largest root of
//! `z = tanh(β(z + h))` on `[0, 1)`. From it follow the CLT variance
//! `σ²(β, h) = (1 - m²) / (1 - β(1 - m²))`, the binary rate function `I`,
//! the typical window around `Nm` and Stirling-type binomial weights.

use serde::{Deserialize, Serialize};

use crate::numeric::LogFactorials;
use crate::{Error, Result};

/// Step of the downward scan that brackets the largest root.
const SCAN_STEP: f64 = 1e-3;
/// Bracket width at which bisection stops.
const BISECTION_WIDTH: f64 = 1e-15;
const NEWTON_STEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `h = 0`, `β < 1`: `m = 0`, `σ² = 1/(1 - β)`.
    HighTemperature,
    /// `h = 0`, `β = 1`: the variance degenerates.
    Critical,
    /// `h = 0`, `β > 1`: two symmetric wells at `±m⁺(β)`.
    LowTemperature,
    /// `h > 0`: a single well at `m⁺(β, h)`.
    ExternalField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub beta: f64,
    pub h: f64,
    pub m: f64,
    /// `None` when `1 - β(1 - m²) ≤ 0`.
    pub sigma2: Option<f64>,
    pub residual: f64,
    pub regime: Regime,
}

impl MeanFieldSolution {
    /// The CLT variance, or [`Error::DegenerateVariance`] at the critical point.
    pub fn variance(&self) -> Result<f64> {
        self.sigma2.ok_or(Error::DegenerateVariance {
            denominator: variance_denominator(self.beta, self.m),
        })
    }
}

fn variance_denominator(beta: f64, m: f64) -> f64 {
    1.0 - beta * (1.0 - m * m)
}

fn fixed_point_gap(beta: f64, h: f64, z: f64) -> f64 {
    z - (beta * (z + h)).tanh()
}

/// Largest root of `z = tanh(β(z + h))` in `[0, 1)`.
///
/// Scans down from `z = 1` for the first sign change, bisects the bracket and
/// polishes with a few Newton steps. A plain fixed-point iteration can settle
/// on a smaller metastable root; the scan cannot.
pub fn solve_magnetization(beta: f64, h: f64) -> Result<MeanFieldSolution> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            beta,
            "must be finite and nonnegative",
        ));
    }
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::invalid("h", h, "must be finite and nonnegative"));
    }

    let m = if h == 0.0 && beta <= 1.0 {
        0.0
    } else {
        largest_root(beta, h)
    };
    let residual = fixed_point_gap(beta, h, m).abs();
    let denominator = variance_denominator(beta, m);
    let sigma2 = (denominator > 0.0).then(|| (1.0 - m * m) / denominator);
    let regime = if h > 0.0 {
        Regime::ExternalField
    } else if beta < 1.0 {
        Regime::HighTemperature
    } else if beta == 1.0 {
        Regime::Critical
    } else {
        Regime::LowTemperature
    };
    Ok(MeanFieldSolution {
        beta,
        h,
        m,
        sigma2,
        residual,
        regime,
    })
}

fn largest_root(beta: f64, h: f64) -> f64 {
    let g = |z: f64| fixed_point_gap(beta, h, z);
    if g(1.0) <= 0.0 {
        // tanh(β(1 + h)) rounds to 1.
        return 1.0;
    }

    // g(1) > 0; find the first z below 1 with g(z) <= 0.
    let mut hi = 1.0;
    let mut lo = None;
    let steps = (1.0 / SCAN_STEP).round() as usize;
    for s in 1..steps {
        let z = 1.0 - s as f64 * SCAN_STEP;
        if g(z) <= 0.0 {
            lo = Some(z);
            break;
        }
        hi = z;
    }
    let mut lo = match lo {
        Some(z) => z,
        None => {
            // Root below the scan resolution (β just above 1 with h = 0, or a
            // tiny field): halve towards zero.
            let mut z = hi;
            loop {
                let next = z * 0.5;
                if next == 0.0 || g(next) <= 0.0 {
                    break next;
                }
                hi = next;
                z = next;
            }
        }
    };
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut z = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let t = (beta * (z + h)).tanh();
        let derivative = 1.0 - beta * (1.0 - t * t);
        if derivative == 0.0 {
            break;
        }
        let next = z - (z - t) / derivative;
        // Newton must stay inside the bracket.
        if !(next >= lo - BISECTION_WIDTH && next <= hi + BISECTION_WIDTH) {
            break;
        }
        if g(next).abs() > g(z).abs() {
            break;
        }
        z = next;
    }
    z
}

/// `σ²(β, h) = (1 - m²) / (1 - β(1 - m²))`.
///
/// `h` enters only through `m`; it is part of the signature so callers pass the
/// full state point.
pub fn clt_variance(beta: f64, _h: f64, m: f64) -> Result<f64> {
    let denominator = variance_denominator(beta, m);
    if !(denominator > 0.0) {
        return Err(Error::DegenerateVariance { denominator });
    }
    Ok((1.0 - m * m) / denominator)
}

/// Which derivative of the rate function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateOrder {
    Value,
    First,
    Second,
}

/// Binary rate function `I(x) = ((1-x)/2) log(1-x) + ((1+x)/2) log(1+x)` and
/// its derivatives `I' = artanh` and `I'' = 1/(1 - x²)`.
pub fn rate_function(x: f64, order: RateOrder) -> Result<f64> {
    if !(x.abs() <= 1.0) {
        return Err(Error::invalid(
            "x",
            x,
            "rate function is defined on [-1, 1]",
        ));
    }
    match order {
        RateOrder::Value => Ok(xlogx_half(1.0 - x) + xlogx_half(1.0 + x)),
        _ if x.abs() == 1.0 => Err(Error::invalid(
            "x",
            x,
            "derivatives of the rate function diverge at |x| = 1",
        )),
        RateOrder::First => Ok(x.atanh()),
        RateOrder::Second => Ok(1.0 / (1.0 - x * x)),
    }
}

/// `(u/2) log u` with `0 log 0 = 0`.
fn xlogx_half(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        0.5 * u * u.ln()
    }
}

/// The typical window `W_{N,m}` of total-spin values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalWindow {
    /// `κ_N = p√N / (p³N)^{2/5}`.
    pub kappa_n: f64,
    /// `⌈Nm - √N κ_N⌉`.
    pub low_k: i64,
    /// `⌊Nm + √N κ_N⌋`.
    pub high_k: i64,
}

impl TypicalWindow {
    pub fn contains(&self, k: i64) -> bool {
        (self.low_k..=self.high_k).contains(&k)
    }
}

pub fn typical_window(n: usize, p: f64, m: f64) -> Result<TypicalWindow> {
    if n == 0 {
        return Err(Error::invalid("n", n, "must be positive"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid("p", p, "must lie in (0, 1]"));
    }
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let kappa_n = p * sqrt_n / (p * p * p * nf).powf(0.4);
    let half_width = sqrt_n * kappa_n;
    let centre = nf * m;
    Ok(TypicalWindow {
        kappa_n,
        low_k: (centre - half_width).ceil() as i64,
        high_k: (centre + half_width).floor() as i64,
    })
}

/// `log C(N, (N+k)/2)` next to its rate-function bound and Stirling correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialLogWeight {
    /// `log C(N, (N+k)/2)` from log-factorials.
    pub exact_log: f64,
    /// `N log 2 - N I(k/N)`; always `>= exact_log`.
    pub rate_part: f64,
    /// `λ_N(k) = ½ log(((N+1)² - k²)/N²)`.
    pub lambda_part: f64,
}

impl BinomialLogWeight {
    /// Stirling approximation `rate_part - ½ log N + ½ log(2/π) - λ_N(k)` of
    /// `exact_log`.
    pub fn stirling_estimate(&self, n: usize) -> f64 {
        self.rate_part - 0.5 * (n as f64).ln() + 0.5 * (2.0 / std::f64::consts::PI).ln()
            - self.lambda_part
    }
}

/// Index `(N + k)/2` of the up-spin count, validating parity and range.
pub fn up_count(n: usize, k: i64) -> Result<usize> {
    let sum = n as i64 + k;
    if k.abs() > n as i64 || sum % 2 != 0 {
        return Err(Error::Parity { n, k });
    }
    Ok((sum / 2) as usize)
}

pub fn binomial_log_weight(n: usize, k: i64) -> Result<BinomialLogWeight> {
    binomial_log_weight_with(&LogFactorials::new(n), n, k)
}

/// As [`binomial_log_weight`] with a caller-owned log-factorial table.
pub fn binomial_log_weight_with(
    table: &LogFactorials,
    n: usize,
    k: i64,
) -> Result<BinomialLogWeight> {
    if n == 0 {
        return Err(Error::invalid("n", n, "must be positive"));
    }
    let up = up_count(n, k)?;
    let nf = n as f64;
    let kf = k as f64;
    let exact_log = table.ln_binomial(n, up);
    let rate_part = nf * std::f64::consts::LN_2 - nf * rate_function(kf / nf, RateOrder::Value)?;
    let lambda_part = 0.5 * (((nf + 1.0).powi(2) - kf * kf) / (nf * nf)).ln();
    Ok(BinomialLogWeight {
        exact_log,
        rate_part,
        lambda_part,
    })
}
