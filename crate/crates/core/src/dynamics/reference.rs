//! Exact free-particle Gaussian of the linear Schrödinger equation, used as the
//! oracle for runs with the coupling switched off.

use std::ops::Range;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::fieldlab::{Jet, WaveField};
use crate::model::Variant;
use crate::scalar::{lit, Real};

/// `ψ(x, 0) = N exp(−α₀x² + ikx)` with complex `α₀ = 1/s² − ia`, so that
/// `R = N exp(−x²/s²)` and `S = ax² + kx`. The phase is `Im log ψ`, which
/// needs no unwrapping.
///
/// The exact evolution is
/// `ψ = N D^{−1/2} exp((−α₀x² + ikx − iħk²t/2m) / D)` with `D = 1 + 2iħα₀t/m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearGaussian<T> {
    pub hbar: T,
    pub m: T,
    /// Amplitude half-width at `t = 0`.
    pub s: T,
    /// Phase curvature at `t = 0`: `S = a x² + kx`.
    pub a: T,
    /// Wave number, `k = mv/ħ`.
    pub k: T,
}

impl<T: Real> LinearGaussian<T> {
    pub fn new(hbar: T, m: T, s: T, a: T, k: T) -> Self {
        Self { hbar, m, s, a, k }
    }

    fn alpha0(&self) -> Complex<T> {
        Complex::new(T::one() / (self.s * self.s), -self.a)
    }

    fn normalization(&self) -> T {
        let two = lit::<T>(2.0);
        (two / (T::PI() * self.s * self.s)).powf(lit(0.25))
    }

    /// Coefficients of `log ψ = c₀ + c₁x + c₂x²` and their time derivatives.
    fn coefficients(&self, t: T) -> ([Complex<T>; 3], [Complex<T>; 3]) {
        let i = Complex::new(T::zero(), T::one());
        let two = lit::<T>(2.0);
        let a0 = self.alpha0();
        let beta = i * a0 * (two * self.hbar / self.m);
        let d = Complex::new(T::one(), T::zero()) + beta * t;
        let d2 = d * d;
        let omega = self.hbar * self.k * self.k / (two * self.m);
        let c2 = -a0 / d;
        let c1 = i * self.k / d;
        let c0 =
            Complex::new(self.normalization().ln(), T::zero()) - d.ln() / two - i * (omega * t) / d;
        let dc2 = a0 * beta / d2;
        let dc1 = -i * self.k * beta / d2;
        let dc0 = -beta / (d * two) - i * omega / d2;
        ([c0, c1, c2], [dc0, dc1, dc2])
    }

    /// Exact density width parameter `w(t)` in `R² ∝ exp(−2(x − vt)²/w²)`.
    pub fn width(&self, t: T) -> T {
        let ([_, _, c2], _) = self.coefficients(t);
        (-T::one() / c2.re).sqrt()
    }

    pub fn velocity(&self) -> T {
        self.hbar * self.k / self.m
    }
}

impl<T: Real> WaveField<T> for LinearGaussian<T> {
    fn dims(&self) -> usize {
        1
    }

    fn hbar(&self) -> T {
        self.hbar
    }

    fn masses(&self) -> Vec<T> {
        vec![self.m]
    }

    fn variant(&self) -> Variant {
        Variant::CrossCoupled
    }

    fn particle_groups(&self) -> Vec<Range<usize>> {
        vec![0..1]
    }

    fn group_couplings(&self) -> Vec<T> {
        vec![T::zero()]
    }

    fn c_abs(&self) -> T {
        T::zero()
    }

    fn centers(&self, t: T) -> Vec<T> {
        vec![self.velocity() * t]
    }

    fn widths(&self) -> Vec<T> {
        vec![self.s]
    }

    fn peak_density(&self, t: T) -> T {
        let x = self.velocity() * t;
        let ([c0, c1, c2], _) = self.coefficients(t);
        let two = lit::<T>(2.0);
        (two * (c0 + c1 * x + c2 * x * x).re).exp()
    }

    fn jet_into(&self, x: &[T], t: T, _groups: &[Range<usize>], jet: &mut Jet<T>) {
        let two = lit::<T>(2.0);
        let x = x[0];
        let ([c0, c1, c2], [dc0, dc1, dc2]) = self.coefficients(t);
        let log_psi = c0 + c1 * x + c2 * x * x;
        let grad = c1 + c2 * (x * two);
        let curv = c2 * two;
        let dt = dc0 + dc1 * x + dc2 * x * x;
        let r = log_psi.re.exp();
        jet.r = r;
        jet.s = log_psi.im;
        jet.dr[0] = r * grad.re;
        jet.d2r[0] = r * (grad.re * grad.re + curv.re);
        jet.ds[0] = grad.im;
        jet.d2s[0] = curv.im;
        jet.lap.iter_mut().for_each(|l| *l = curv.im);
        jet.dlap.iter_mut().for_each(|l| *l = T::zero());
        jet.d2lap.iter_mut().for_each(|l| *l = T::zero());
        jet.dt_r2 = two * r * r * dt.re;
        jet.dt_s = dt.im;
        jet.v = T::zero();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldlab::{pde_residuals, Grid};

    #[test]
    fn initial_data_matches_parameters() {
        let g = LinearGaussian::new(1.0, 1.0, 1.0, 0.7, 0.5);
        let mut jet = Jet::new(1, 1);
        g.jet_into(&[0.3], 0.0, &[0..1], &mut jet);
        let n = (2.0 / std::f64::consts::PI).powf(0.25);
        assert!((jet.r - n * (-0.09f64).exp()).abs() < 1e-14);
        assert!((jet.s - (0.7 * 0.09 + 0.5 * 0.3)).abs() < 1e-14);
    }

    #[test]
    fn solves_linear_equations() {
        let g = LinearGaussian::new(1.0, 1.0, 1.0, -0.4, 0.8);
        let grid = Grid::cube(1, 8.0, 801, &[0.0, 0.3, 1.0]).unwrap();
        let r = pde_residuals(&g, &grid, Variant::CrossCoupled, false).unwrap();
        assert!(r.linf() < 1e-10, "{:?} {:?}", r.continuity, r.energy);
    }

    #[test]
    fn width_follows_spreading_law() {
        // Real α₀: w(t)² = s²(1 + (2ħt/ms²)²).
        let g = LinearGaussian::new(1.0, 2.0, 1.5, 0.0, 0.0);
        let t: f64 = 0.8;
        let expect = 1.5 * (1.0 + (2.0 * t / (2.0 * 1.5 * 1.5)).powi(2)).sqrt();
        assert!((g.width(t) - expect).abs() < 1e-13);
    }
}
