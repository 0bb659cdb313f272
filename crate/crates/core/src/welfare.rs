//! Hölder-mean welfare metrics.
//!
//! `w_q(B) = ((1/n) Σ (Bⁱ)^q)^{1/q}` over the fair range `q ∈ [−∞, 1]`, with
//! the limiting cases `min` (q = −∞) and the geometric mean (q = 0). For
//! `q < 0` the metric is 0 as soon as any agent has zero utility.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude a finite exponent is treated as the geometric mean.
pub const NASH_EPS: f64 = 1e-9;

/// Exponent of a Hölder mean, restricted to `q ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WelfareParam {
    /// q = −∞: the minimum utility.
    Egalitarian,
    /// q = 0: the geometric mean (Nash social welfare).
    Nash,
    /// q = 1: the arithmetic mean.
    Utilitarian,
    /// Any other finite q in (−∞, 1).
    Power(f64),
}

impl WelfareParam {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_nan() {
            return Err(Error::InvalidWelfareParam("q is NaN".into()));
        }
        if q == f64::NEG_INFINITY {
            Ok(Self::Egalitarian)
        } else if q > 1.0 {
            Err(Error::InvalidWelfareParam(format!(
                "q = {q} lies in the unfair regime q > 1"
            )))
        } else if q == 1.0 {
            Ok(Self::Utilitarian)
        } else if q.abs() < NASH_EPS {
            Ok(Self::Nash)
        } else {
            Ok(Self::Power(q))
        }
    }

    pub fn q(&self) -> f64 {
        match *self {
            Self::Egalitarian => f64::NEG_INFINITY,
            Self::Nash => 0.0,
            Self::Utilitarian => 1.0,
            Self::Power(q) => q,
        }
    }

    pub fn is_egalitarian(&self) -> bool {
        matches!(self, Self::Egalitarian)
    }

    /// Welfare of a raw utility slice. Components must be nonnegative.
    pub fn value(&self, b: &[f64]) -> f64 {
        debug_assert!(!b.is_empty());
        debug_assert!(b.iter().all(|&x| x >= 0.0), "negative utility in {b:?}");
        let n = b.len() as f64;
        match *self {
            Self::Egalitarian => b.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Utilitarian => b.iter().sum::<f64>() / n,
            Self::Nash => {
                if b.iter().any(|&x| x == 0.0) {
                    return 0.0;
                }
                (b.iter().map(|x| x.ln()).sum::<f64>() / n).exp()
            }
            Self::Power(q) if q < 0.0 => {
                let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
                if lo == 0.0 {
                    return 0.0;
                }
                // every ratio is ≥ 1 so (·)^q ≤ 1 never overflows
                let mean = b.iter().map(|&x| (x / lo).powf(q)).sum::<f64>() / n;
                lo * mean.powf(1.0 / q)
            }
            Self::Power(q) => {
                let hi = b.iter().copied().fold(0.0, f64::max);
                if hi == 0.0 {
                    return 0.0;
                }
                let mean = b.iter().map(|&x| (x / hi).powf(q)).sum::<f64>() / n;
                hi * mean.powf(1.0 / q)
            }
        }
    }

    /// Gradient of the welfare at a raw utility slice.
    pub fn gradient_of(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len() as f64;
        match *self {
            Self::Egalitarian => Err(Error::NonSmooth(
                "the egalitarian metric is not differentiable; use the LP path".into(),
            )),
            Self::Utilitarian => Ok(vec![1.0 / n; b.len()]),
            Self::Nash | Self::Power(_) => {
                if let Some(i) = b.iter().position(|&x| x <= 0.0) {
                    return Err(Error::NonSmooth(format!(
                        "component {i} is zero; gradient of w_{} is unbounded there",
                        self
                    )));
                }
                let w = self.value(b);
                let q = self.q();
                // ∂w/∂Bⁱ = (1/n)(Bⁱ/w)^{q−1}; at q = 0 this reads (w/n)/Bⁱ
                Ok(b.iter().map(|&x| (x / w).powf(q - 1.0) / n).collect())
            }
        }
    }
}

impl fmt::Display for WelfareParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Egalitarian => f.write_str("-inf"),
            other => write!(f, "{}", other.q()),
        }
    }
}

impl FromStr for WelfareParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("-inf") {
            return Ok(Self::Egalitarian);
        }
        let q: f64 = s
            .parse()
            .map_err(|_| Error::InvalidWelfareParam(format!("cannot parse {s:?} as q")))?;
        if !q.is_finite() {
            return Err(Error::InvalidWelfareParam(format!(
                "{s:?}: only finite decimals or the token -inf are accepted"
            )));
        }
        Self::new(q)
    }
}

impl Serialize for WelfareParam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WelfareParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// Cumulative utilities of the n agents.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityVector(Vec<f64>);

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidUtilities("need at least one agent".into()));
        }
        if let Some(i) = values.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidUtilities(format!(
                "component {i} = {} is not a finite nonnegative number",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0);
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Adds `amount · b` componentwise; utilities never decrease.
    pub(crate) fn accrue(&mut self, b: &[f64], x: &[f64]) {
        for ((acc, &bi), &xi) in self.0.iter_mut().zip(b).zip(x) {
            *acc += bi * xi;
        }
    }
}

pub fn eval(param: WelfareParam, b: &UtilityVector) -> f64 {
    param.value(b.as_slice())
}

pub fn gradient(param: WelfareParam, b: &UtilityVector) -> Result<Vec<f64>> {
    param.gradient_of(b.as_slice())
}
