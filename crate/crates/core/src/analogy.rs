//! Graded analogical proportions `a : b :: c : d`.
//!
//! Every measure maps four values in `[0, 1]` to a degree in `[0, 1]` saying
//! how well "a relates to b as c relates to d". Feature vectors are compared
//! coordinate-wise and the per-feature degrees are averaged.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Threshold used by the approximate-equality measures when none is given.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// The six supported proportion measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProportionMeasure {
    /// Arithmetic proportion (`A`).
    Arithmetic,
    /// Arithmetic proportion that is zero whenever the two differences point
    /// in different directions (`A-strict`).
    ArithmeticStrict,
    /// Geometric proportion (`G`).
    Geometric,
    /// Min-max proportion (`MM`).
    MinMax,
    /// Approximate equality with a crisp `|x - y| <= epsilon` test (`AE`).
    ApproxEquality { epsilon: f64 },
    /// Approximate equality with the graded test
    /// `max(1 - |x - y| / epsilon, 0)` (`AE-graded`).
    ApproxEqualityGraded { epsilon: f64 },
}

impl ProportionMeasure {
    /// All six measures in their canonical order, AE variants using `epsilon`.
    pub fn all(epsilon: f64) -> Result<Vec<Self>> {
        Ok(vec![
            Self::Arithmetic,
            Self::ArithmeticStrict,
            Self::Geometric,
            Self::MinMax,
            Self::approx_equality(epsilon)?,
            Self::approx_equality_graded(epsilon)?,
        ])
    }

    pub fn approx_equality(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::ApproxEquality { epsilon })
    }

    pub fn approx_equality_graded(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::ApproxEqualityGraded { epsilon })
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Self::Arithmetic => "A",
            Self::ArithmeticStrict => "A-strict",
            Self::Geometric => "G",
            Self::MinMax => "MM",
            Self::ApproxEquality { .. } => "AE",
            Self::ApproxEqualityGraded { .. } => "AE-graded",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            Self::ApproxEquality { epsilon } | Self::ApproxEqualityGraded { epsilon } => {
                Some(epsilon)
            }
            _ => None,
        }
    }

    /// Parse a measure name, using `default_epsilon` for AE variants that do
    /// not carry an explicit `:eps=` suffix.
    pub fn parse_with_epsilon(s: &str, default_epsilon: f64) -> Result<Self> {
        let invalid = || Error::InvalidMeasure(s.to_string());
        let (name, epsilon) = match s.split_once(':') {
            Some((name, suffix)) => {
                let value = suffix.trim().strip_prefix("eps=").ok_or_else(invalid)?;
                let eps: f64 = value.trim().parse().map_err(|_| invalid())?;
                (name.trim(), Some(eps))
            }
            None => (s.trim(), None),
        };
        let eps = epsilon.unwrap_or(default_epsilon);
        let measure = match name {
            "A" => Self::Arithmetic,
            "A-strict" => Self::ArithmeticStrict,
            "G" => Self::Geometric,
            "MM" => Self::MinMax,
            "AE" => Self::approx_equality(eps).map_err(|_| invalid())?,
            "AE-graded" => Self::approx_equality_graded(eps).map_err(|_| invalid())?,
            _ => return Err(invalid()),
        };
        if epsilon.is_some() && measure.epsilon().is_none() {
            return Err(invalid());
        }
        Ok(measure)
    }

    /// Degree for scalars already known to lie in `[0, 1]`.
    #[inline]
    pub fn degree(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        match *self {
            Self::Arithmetic => {
                let (left, right) = (a - b, c - d);
                if sign(left) == sign(right) {
                    1.0 - (left - right).abs()
                } else {
                    1.0 - left.abs().max(right.abs())
                }
            }
            Self::ArithmeticStrict => {
                let (left, right) = (a - b, c - d);
                if sign(left) == sign(right) {
                    1.0 - (left - right).abs()
                } else {
                    0.0
                }
            }
            Self::Geometric => {
                let (ad, bc) = (a * d, b * c);
                let hi = ad.max(bc);
                if sign(a - b) == sign(c - d) && hi > 0.0 {
                    ad.min(bc) / hi
                } else {
                    0.0
                }
            }
            Self::MinMax => {
                let low = (a.min(d) - b.min(c)).abs();
                let high = (a.max(d) - b.max(c)).abs();
                1.0 - low.max(high)
            }
            Self::ApproxEquality { epsilon } => {
                let eq = |x: f64, y: f64| -> f64 { if (x - y).abs() <= epsilon { 1.0 } else { 0.0 } };
                (eq(a, b) * eq(c, d)).max(eq(a, c) * eq(b, d))
            }
            Self::ApproxEqualityGraded { epsilon } => {
                let eq = |x: f64, y: f64| (1.0 - (x - y).abs() / epsilon).max(0.0);
                (eq(a, b) * eq(c, d)).max(eq(a, c) * eq(b, d))
            }
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1], got {epsilon}"
        )))
    }
}

/// Three-valued sign, `sign(0) = 0`.
#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

impl fmt::Display for ProportionMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.epsilon() {
            Some(eps) if eps != DEFAULT_EPSILON => write!(f, "{}:eps={eps}", self.short_name()),
            _ => f.write_str(self.short_name()),
        }
    }
}

impl FromStr for ProportionMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_epsilon(s, DEFAULT_EPSILON)
    }
}

/// A degree of analogical proportion in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProportionDegree(f64);

impl ProportionDegree {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<ProportionDegree> for f64 {
    fn from(d: ProportionDegree) -> f64 {
        d.0
    }
}

/// The six Boolean quadruples that are in analogical proportion.
const BOOLEAN_PROPORTIONS: [[bool; 4]; 6] = [
    [false, false, false, false],
    [false, false, true, true],
    [false, true, false, true],
    [true, false, true, false],
    [true, true, false, false],
    [true, true, true, true],
];

pub fn boolean_proportion(a: bool, b: bool, c: bool, d: bool) -> bool {
    BOOLEAN_PROPORTIONS.contains(&[a, b, c, d])
}

fn check_unit(values: &[f64], offset: usize) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                value: v,
                position: offset + i,
            });
        }
    }
    Ok(())
}

pub fn scalar_proportion(m: &ProportionMeasure, a: f64, b: f64, c: f64, d: f64) -> Result<ProportionDegree> {
    check_unit(&[a, b, c, d], 0)?;
    Ok(ProportionDegree(m.degree(a, b, c, d)))
}

/// How per-feature degrees are combined into one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    /// Conjunctive combination; far stricter than the mean and not used by
    /// the ranking pipeline.
    Min,
}

/// Mean of the per-feature degrees.
pub fn vector_proportion(
    m: &ProportionMeasure,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<ProportionDegree> {
    vector_proportion_with(m, Aggregation::Mean, a, b, c, d)
}

pub fn vector_proportion_with(
    m: &ProportionMeasure,
    aggregation: Aggregation,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<ProportionDegree> {
    let dim = a.len();
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        });
    }
    for v in [b, c, d] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    for (i, v) in [a, b, c, d].into_iter().enumerate() {
        check_unit(v, i * dim)?;
    }
    let degrees = (0..dim).map(|k| m.degree(a[k], b[k], c[k], d[k]));
    let value = match aggregation {
        Aggregation::Mean => degrees.sum::<f64>() / dim as f64,
        Aggregation::Min => degrees.fold(1.0, f64::min),
    };
    Ok(ProportionDegree(value))
}

/// Mean degrees of `z : z' :: x : y` and `z : z' :: y : x` in one pass.
///
/// Inputs must already be validated (equal non-zero length, entries in
/// `[0, 1]`). Summation order matches [`vector_proportion`], so both results
/// are bitwise identical to two separate calls.
#[inline]
pub(crate) fn oriented_degrees(
    m: &ProportionMeasure,
    z: &[f64],
    z_prime: &[f64],
    x: &[f64],
    y: &[f64],
) -> (f64, f64) {
    let mut forward = 0.0;
    let mut backward = 0.0;
    for k in 0..z.len() {
        forward += m.degree(z[k], z_prime[k], x[k], y[k]);
        backward += m.degree(z[k], z_prime[k], y[k], x[k]);
    }
    let dim = z.len() as f64;
    (forward / dim, backward / dim)
}
