//! Floating point abstraction shared by the numeric modules.
//!
//! Everything that does arithmetic on embeddings (affinities, layouts,
//! neighbor search, PCA, metrics) is written against [`Scalar`] so the same
//! code runs in `f32` for memory-bound workloads and `f64` where the
//! calibration tolerances need the headroom.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts a literal. Infallible for every implementor.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    fn from_f32_bits(x: f32) -> Self;

    fn to_f32_lossy(self) -> f32;

    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Total order with NaN sorted last, for deterministic sorting.
    fn total_order(&self, other: &Self) -> std::cmp::Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

macro_rules! impl_scalar {
    ($($ty:ty),*) => {
        $(
            impl Scalar for $ty {
                #[inline]
                fn lit(x: f64) -> Self {
                    x as $ty
                }

                #[inline]
                fn as_f64(self) -> f64 {
                    self as f64
                }

                #[inline]
                fn from_f32_bits(x: f32) -> Self {
                    x as $ty
                }

                #[inline]
                fn to_f32_lossy(self) -> f32 {
                    self as f32
                }
            }
        )*
    };
}

impl_scalar!(f32, f64);
