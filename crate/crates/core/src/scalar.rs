//! Scalar abstraction for the closed-form parts of the model.
//!
//! Derived lifetimes, protocol fidelities and the two optimizers only need
//! ordinary floating point arithmetic, so they are written against [`Real`]
//! and work for both `f32` and `f64`. The master-equation engine is `f64`
//! only: its trace and positivity tolerances sit below `f32` resolution.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating point scalar usable by the generic algebra in this crate.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn clamp_unit<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}
