//! Scalar abstraction shared by the measure, kernel-analysis and oracle code.
//!
//! Floating-point scalars compare with a [`Tolerance`]; the exact rational
//! scalar ignores the tolerance and compares for equality, which is what makes
//! rational-mode verdicts certificates rather than estimates.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive};
use serde_json::Value;

/// Relative/absolute comparison tolerance for floating-point scalars.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    /// Threshold used when deciding whether two normalized rows are the same
    /// row: total variation at most `1e-9`.
    pub const fn row_grouping() -> Self {
        Self {
            rel: 0.0,
            abs: 1e-9,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

/// Numeric type a model can be expressed in.
pub trait Scalar:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + Send + Sync + 'static
{
    /// `true` when arithmetic is exact and tolerances are ignored.
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    /// `a ≈ b` under `tol` (exact equality for exact scalars).
    fn within(&self, other: &Self, tol: &Tolerance) -> bool;

    /// Encoding used in JSON reports.
    fn to_json(&self) -> Value;

    fn from_ratio(num: i64, den: i64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        Some(Self::from_i64(num)? / Self::from_i64(den)?)
    }

    fn is_negligible(&self, tol: &Tolerance) -> bool {
        self.within(&Self::zero(), tol)
    }

    /// Strictly positive beyond the tolerance.
    fn is_significant(&self, tol: &Tolerance) -> bool {
        *self > Self::zero() && !self.is_negligible(tol)
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn within(&self, other: &Self, tol: &Tolerance) -> bool {
                // never ask for more than a few ulps of the type
                let floor = 4.0 * <$t>::EPSILON as f64;
                let (a, b) = (*self as f64, *other as f64);
                if a == b {
                    return true;
                }
                let diff = (a - b).abs();
                let scale = a.abs().max(b.abs());
                diff <= tol.abs.max(floor) || diff <= tol.rel.max(floor) * scale
            }

            fn to_json(&self) -> Value {
                serde_json::Number::from_f64(*self as f64)
                    .map(Value::Number)
                    .unwrap_or(Value::Null)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // out of f64 range: fall back on the ratio of the parts
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }

    fn within(&self, other: &Self, _tol: &Tolerance) -> bool {
        self == other
    }

    fn to_json(&self) -> Value {
        if self.denom() == &BigInt::from(1) {
            if let Some(n) = self.numer().to_i64() {
                return Value::from(n);
            }
        }
        match (self.numer().to_i64(), self.denom().to_i64()) {
            (Some(num), Some(den)) => serde_json::json!({ "num": num, "den": den }),
            _ => serde_json::json!({
                "num": self.numer().to_string(),
                "den": self.denom().to_string(),
            }),
        }
    }
}

/// Sum of a slice of scalars.
pub fn sum<S: Scalar>(values: &[S]) -> S {
    values.iter().fold(S::zero(), |acc, v| acc + v.clone())
}

/// Neumaier-compensated sum of `f64` values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut total = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = total + v;
        if total.abs() >= v.abs() {
            carry += (total - t) + v;
        } else {
            carry += (v - t) + total;
        }
        total = t;
    }
    total + carry
}

/// Absolute difference, usable for any signed scalar.
pub(crate) fn abs_diff<S: Scalar>(a: &S, b: &S) -> S {
    (a.clone() - b.clone()).abs()
}
