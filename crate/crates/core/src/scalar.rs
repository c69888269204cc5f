use std::fmt::{Debug, Display};
use std::ops::Neg;

use nalgebra::RealField;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
{
    /// Lossy conversion from an `f64` constant.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Scalar field used by the exact constructions (rationals, reals).
pub trait Field: nalgebra::Scalar + Num + Neg<Output = Self> + PartialOrd + Clone + Debug {}

impl<T> Field for T where T: nalgebra::Scalar + Num + Neg<Output = T> + PartialOrd + Clone + Debug {}
