//! Numeric abstraction shared by every mechanism.
//!
//! Mechanisms are written once against [`Scalar`] and instantiated with
//! `f64`/`f32` for ordinary runs or with an exact rational type when the
//! result must match integer arithmetic bit for bit.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real-like number usable for valuations, taxes and welfare sums.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// True when the value should be treated as zero after cancellation.
    fn is_negligible(&self) -> bool;

    /// Equality used when comparing derived sums (welfare, path costs).
    fn approx_eq(&self, other: &Self) -> bool;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-12
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let scale = 1.0_f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= 1e-9 * scale
    }
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() < 1e-6
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let scale = 1.0_f32.max(self.abs()).max(other.abs());
        (self - other).abs() <= 1e-5 * scale
    }
}

impl Scalar for Ratio<i64> {
    fn is_negligible(&self) -> bool {
        *self == Ratio::from_integer(0)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
}

/// Sum of an iterator of scalars (empty sum is zero).
pub fn sum<S: Scalar, I: IntoIterator<Item = S>>(items: I) -> S {
    items.into_iter().fold(S::zero(), |acc, x| acc + x)
}

/// `k`-th largest element (1-based) of `values`, or zero if there are fewer
/// than `k` elements.
pub fn kth_largest<S: Scalar>(values: &[S], k: usize) -> S {
    if k == 0 || values.len() < k {
        return S::zero();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("scalar values are ordered"));
    sorted[k - 1].clone()
}
