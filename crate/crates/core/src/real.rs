use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type used by the analytic formulas, the channel model and the
/// simulation engine. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for constants and random draws.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Real")
    }

    /// Conversion from a count.
    fn of_count(value: u64) -> Self {
        Self::from_u64(value).expect("counts are representable in every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A convergence tolerance no tighter than what the type can resolve.
    fn tolerance(requested: f64) -> Self {
        Self::of(requested).max(Self::epsilon() * Self::of(16.0))
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// Probability validity check shared by the policies and the formulas.
pub(crate) fn is_probability<R: Real>(value: R) -> bool {
    value >= R::zero() && value <= R::one()
}
