//! Qubit states in the dressed basis `(|-⟩, |+⟩)`.
//!
//! The emitter decays from `|+⟩` to `|-⟩` through the lowering operator
//! `σ = |-⟩⟨+|`, and `σ_z = |+⟩⟨+| - |-⟩⟨-|`, so decay drives `z → -1`.
//!
//! Bloch convention: `x + i·y = 2·ρ₊₋ = 2·conj(ρ₋₊)`. Equivalently
//! `x = 2 Re ρ₋₊` and `y = -2 Im ρ₋₊`. With this choice the dipole phase
//! `arg(x + i·y)` of `(|-⟩ + e^{iΘ}|+⟩)/√2` is `Θ`, the homodyne signal at
//! pump phase `φ` is proportional to `x cos φ + y sin φ`, and the phase
//! estimate `arg R` of the record integral lands on the dipole phase.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// 2×2 Hermitian density matrix; only the upper coherence `ρ₋₊` is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix<T> {
    pub rho_mm: T,
    pub rho_pp: T,
    pub rho_mp: Complex<T>,
}

/// Unnormalized pure-state amplitudes `c₋|-⟩ + c₊|+⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureAmplitudes<T> {
    pub c_minus: Complex<T>,
    pub c_plus: Complex<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> DensityMatrix<T> {
    pub fn ground() -> Self {
        Self { rho_mm: T::one(), rho_pp: T::zero(), rho_mp: Complex::new(T::zero(), T::zero()) }
    }

    pub fn excited() -> Self {
        Self { rho_mm: T::zero(), rho_pp: T::one(), rho_mp: Complex::new(T::zero(), T::zero()) }
    }

    pub fn maximally_mixed() -> Self {
        let h = T::lit(0.5);
        Self { rho_mm: h, rho_pp: h, rho_mp: Complex::new(T::zero(), T::zero()) }
    }

    /// Equatorial state `(|-⟩ + e^{iΘ}|+⟩)/√2` carrying dipole phase `Θ`.
    pub fn equatorial(theta: T) -> Self {
        Self::from_pure(&PureAmplitudes::equatorial(theta))
    }

    pub fn from_pure(psi: &PureAmplitudes<T>) -> Self {
        let n = psi.norm_sqr();
        let rho_mm = psi.c_minus.norm_sqr() / n;
        let rho_pp = psi.c_plus.norm_sqr() / n;
        let rho_mp = psi.c_minus * psi.c_plus.conj() / n;
        Self { rho_mm, rho_pp, rho_mp }
    }

    #[inline]
    pub fn trace(&self) -> T {
        self.rho_mm + self.rho_pp
    }

    /// Divides by the trace.
    #[inline]
    pub fn normalized(&self) -> Self {
        let inv = T::one() / self.trace();
        Self { rho_mm: self.rho_mm * inv, rho_pp: self.rho_pp * inv, rho_mp: self.rho_mp * inv }
    }

    /// `ρ₋₋ ρ₊₊ - |ρ₋₊|²`; non-negative for a positive semidefinite matrix.
    #[inline]
    pub fn determinant(&self) -> T {
        self.rho_mm * self.rho_pp - self.rho_mp.norm_sqr()
    }

    pub fn min_eigenvalue(&self) -> T {
        let half_tr = T::lit(0.5) * self.trace();
        let half_diff = T::lit(0.5) * (self.rho_pp - self.rho_mm);
        half_tr - (half_diff * half_diff + self.rho_mp.norm_sqr()).sqrt()
    }

    /// `⟨σ⟩ = tr(σρ) = ρ₊₋`.
    #[inline]
    pub fn expect_lowering(&self) -> Complex<T> {
        self.rho_mp.conj()
    }

    pub fn is_finite(&self) -> bool {
        self.rho_mm.is_finite()
            && self.rho_pp.is_finite()
            && self.rho_mp.re.is_finite()
            && self.rho_mp.im.is_finite()
    }

    /// Trace distance `½‖ρ - σ‖₁` between two normalized states.
    pub fn trace_distance(&self, other: &Self) -> T {
        let dz = T::lit(0.5) * ((self.rho_pp - self.rho_mm) - (other.rho_pp - other.rho_mm));
        let dc = self.rho_mp - other.rho_mp;
        (dz * dz + dc.norm_sqr()).sqrt()
    }

    pub fn bloch(&self) -> BlochVector<T> {
        bloch_from_rho(self)
    }
}

impl<T: Real> PureAmplitudes<T> {
    pub fn new(c_minus: Complex<T>, c_plus: Complex<T>) -> Self {
        Self { c_minus, c_plus }
    }

    pub fn excited() -> Self {
        Self::new(Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    pub fn equatorial(theta: T) -> Self {
        let a = T::FRAC_1_SQRT_2();
        Self::new(Complex::new(a, T::zero()), Complex::from_polar(a, theta))
    }

    #[inline]
    pub fn norm_sqr(&self) -> T {
        self.c_minus.norm_sqr() + self.c_plus.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.c_minus.re.is_finite()
            && self.c_minus.im.is_finite()
            && self.c_plus.re.is_finite()
            && self.c_plus.im.is_finite()
    }
}

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Magnitude of the equatorial (dipole) component.
    pub fn transverse(&self) -> T {
        self.x.hypot(self.y)
    }

    /// Dipole phase `arg(x + i·y)`.
    pub fn dipole_phase(&self) -> T {
        self.y.atan2(self.x)
    }
}

pub fn bloch_from_rho<T: Real>(rho: &DensityMatrix<T>) -> BlochVector<T> {
    let two = T::lit(2.0);
    BlochVector {
        x: two * rho.rho_mp.re,
        y: -two * rho.rho_mp.im,
        z: rho.rho_pp - rho.rho_mm,
    }
}

/// Inverse of [`bloch_from_rho`].
pub fn rho_from_bloch<T: Real>(b: &BlochVector<T>) -> DensityMatrix<T> {
    let h = T::lit(0.5);
    DensityMatrix {
        rho_mm: h * (T::one() - b.z),
        rho_pp: h * (T::one() + b.z),
        rho_mp: Complex::new(h * b.x, -h * b.y),
    }
}

/// `tr(ρ²)`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.rho_mm * rho.rho_mm + rho.rho_pp * rho.rho_pp + T::lit(2.0) * rho.rho_mp.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bloch_examples() {
        let b = bloch_from_rho(&DensityMatrix::<f64>::excited());
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 1.0));
        let b = bloch_from_rho(&DensityMatrix::<f64>::maximally_mixed());
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 0.0));
        let plus = PureAmplitudes::new(Complex::new(1.0, 0.0), Complex::new(1.0, 0.0));
        let b = bloch_from_rho(&DensityMatrix::<f64>::from_pure(&plus));
        assert!(close(b.x, 1.0, 1e-15) && close(b.y, 0.0, 1e-15) && close(b.z, 0.0, 1e-15));
    }

    #[test]
    fn equatorial_state_has_dipole_phase_theta() {
        for k in 0..8 {
            let theta = -3.0 + 0.7 * k as f64;
            let b = DensityMatrix::<f64>::equatorial(theta).bloch();
            assert!(close(crate::scalar::wrap_pi(b.dipole_phase() - theta), 0.0, 1e-12));
            assert!(close(b.transverse(), 1.0, 1e-12));
        }
    }

    #[test]
    fn purity_examples() {
        assert!(close(purity(&DensityMatrix::<f64>::maximally_mixed()), 0.5, 1e-15));
        assert!(close(purity(&DensityMatrix::<f64>::equatorial(0.3)), 1.0, 1e-15));
        let rho = DensityMatrix { rho_mm: 0.25, rho_pp: 0.75, rho_mp: Complex::new(0.0, 0.0) };
        assert!(close(purity(&rho), 0.625, 1e-15));
    }

    #[test]
    fn min_eigenvalue_of_projector_is_zero() {
        let rho = DensityMatrix::<f64>::equatorial(1.1);
        assert!(rho.min_eigenvalue().abs() < 1e-15);
        assert!((DensityMatrix::<f64>::maximally_mixed().min_eigenvalue() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let b = DensityMatrix::<f32>::equatorial(0.5).bloch();
        assert!((b.dipole_phase() - 0.5).abs() < 1e-6);
    }

    fn ball() -> impl Strategy<Value = BlochVector<f64>> {
        (0.0f64..=1.0, -1.0f64..=1.0, 0.0..std::f64::consts::TAU).prop_map(|(r, cz, az)| {
            let s = (1.0 - cz * cz).sqrt();
            BlochVector::new(r * s * az.cos(), r * s * az.sin(), r * cz)
        })
    }

    proptest! {
        #[test]
        fn bloch_round_trip(b in ball()) {
            let rho = rho_from_bloch(&b);
            let back = bloch_from_rho(&rho);
            prop_assert!(close(b.x, back.x, 1e-12) && close(b.y, back.y, 1e-12) && close(b.z, back.z, 1e-12));
            prop_assert!(close(rho.trace(), 1.0, 1e-12));
            prop_assert!(rho.determinant() >= -1e-12);
        }

        #[test]
        fn purity_matches_bloch_length(b in ball()) {
            let rho = rho_from_bloch(&b);
            let n = b.norm();
            prop_assert!(close(purity(&rho), 0.5 * (1.0 + n * n), 1e-12));
        }
    }
}
