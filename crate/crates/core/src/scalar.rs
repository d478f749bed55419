//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar the simulator is generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self;

    /// Widens to `f64` for reporting and statistics.
    fn as_f64(self) -> f64;
}

impl<T> Real for T
where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static,
{
    #[inline(always)]
    fn lit(x: f64) -> Self {
        T::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_pi<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut y = x - two_pi * (x / two_pi).round();
    if y <= -T::PI() {
        y += two_pi;
    } else if y > T::PI() {
        y -= two_pi;
    }
    y
}

/// Wraps an angle into [-pi/2, pi/2], treating directions that differ by pi
/// as the same quadrature.
pub fn wrap_half_pi<T: Real>(x: T) -> T {
    let pi = T::PI();
    let mut y = x - pi * (x / pi).round();
    if y < -T::FRAC_PI_2() {
        y += pi;
    } else if y > T::FRAC_PI_2() {
        y -= pi;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_examples() {
        assert!((wrap_pi(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_pi(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!(wrap_half_pi(std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_half_pi(0.75 * std::f64::consts::PI) + 0.25 * std::f64::consts::PI).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wrap_stays_in_range(x in -100.0f64..100.0) {
            let w = wrap_pi(x);
            prop_assert!(w > -std::f64::consts::PI - 1e-12 && w <= std::f64::consts::PI + 1e-12);
            prop_assert!(((x - w) / std::f64::consts::TAU - ((x - w) / std::f64::consts::TAU).round()).abs() < 1e-9);
            let h = wrap_half_pi(x);
            prop_assert!(h.abs() <= std::f64::consts::FRAC_PI_2 + 1e-12);
        }
    }
}
