//! Closed-form limits for tracking a drifting Rabi frequency.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Returns `(1/(2π√N·T), 1/(8T))` in Hz: the frequency uncertainty after
/// `n` calibration shots of duration `t_rabi`, and the largest drift that
/// keeps the accumulated phase error below `π/4`.
pub fn rabi_tracking_limits(n: u64, t_rabi: f64) -> Result<(f64, f64)> {
    if n == 0 || !(t_rabi > 0.0) || !t_rabi.is_finite() {
        return Err(Error::InvalidParameter(format!("need n >= 1 and T > 0, got n={n}, T={t_rabi}")));
    }
    Ok((1.0 / (2.0 * PI * (n as f64).sqrt() * t_rabi), 1.0 / (8.0 * t_rabi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_case() {
        let (f, d) = rabi_tracking_limits(1, 1.0).unwrap();
        assert!((f - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(d, 0.125);
    }

    #[test]
    fn hundred_shots_of_four_microseconds() {
        let (f, d) = rabi_tracking_limits(100, 4e-6).unwrap();
        assert!((f - 3978.873_577_297_384).abs() < 1e-6, "{f}");
        assert!((d - 31_250.0).abs() < 1e-9);
    }

    #[test]
    fn many_shots() {
        let (f, d) = rabi_tracking_limits(u64::MAX, 4e-6).unwrap();
        assert!(f < 1e-3);
        assert!((d - 31_250.0).abs() < 1e-9);
        assert!(rabi_tracking_limits(0, 1.0).is_err());
        assert!(rabi_tracking_limits(1, 0.0).is_err());
    }
}
