//! Pointwise energy density, variational derivatives and residuals.
//!
//! With `Lg` the phase Laplacian of group `g` and `|C_g|` its coupling,
//!
//! ```text
//! H     = Σᵢ ħ²/2mᵢ [(∂ᵢR)² + R²(∂ᵢS)²] − Σ_g |C_g| R² Lg² + V R²
//! δH/δR = −Σᵢ ħ²/mᵢ ∂ᵢ²R + Σᵢ ħ²/mᵢ R(∂ᵢS)² − 2 Σ_g |C_g| R Lg² + 2RV
//! δH/δS = −Σᵢ ħ²/mᵢ ∂ᵢ(R²∂ᵢS) − 2 Σᵢ |C_g(i)| ∂ᵢ²(R² Lg(i))
//! ```
//!
//! The cross-coupled equations use one group spanning every axis; the weakly
//! separable ones use one group per particle. The residuals are
//! `ħ∂ₜR² − δH/δS` (continuity) and `−2ħR∂ₜS − δH/δR` (energy).

use std::ops::Range;

use super::fields::{owning_group, Jet};
use crate::scalar::{lit, Real};

/// Energy density split by term.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyDensity<T> {
    pub gradient: T,
    pub phase: T,
    pub nonlinear: T,
    pub potential: T,
}

impl<T: Real> EnergyDensity<T> {
    pub fn total(&self) -> T {
        self.gradient + self.phase + self.nonlinear + self.potential
    }
}

pub fn energy_density<T: Real>(
    jet: &Jet<T>,
    masses: &[T],
    hbar: T,
    couplings: &[T],
) -> EnergyDensity<T> {
    let two = lit::<T>(2.0);
    let r2 = jet.r * jet.r;
    let mut gradient = T::zero();
    let mut phase = T::zero();
    for (i, &m) in masses.iter().enumerate() {
        let k = hbar * hbar / (two * m);
        gradient += k * jet.dr[i] * jet.dr[i];
        phase += k * r2 * jet.ds[i] * jet.ds[i];
    }
    let nonlinear = -couplings
        .iter()
        .zip(&jet.lap)
        .map(|(&c, &l)| c * r2 * l * l)
        .sum::<T>();
    EnergyDensity {
        gradient,
        phase,
        nonlinear,
        potential: jet.v * r2,
    }
}

/// `(δH/δR, δH/δS)` at one point.
pub fn euler_lagrange<T: Real>(
    jet: &Jet<T>,
    masses: &[T],
    hbar: T,
    groups: &[Range<usize>],
    couplings: &[T],
) -> (T, T) {
    let two = lit::<T>(2.0);
    let r = jet.r;
    let r2 = r * r;
    let mut d_r = two * r * jet.v;
    let mut d_s = T::zero();
    for (i, &m) in masses.iter().enumerate() {
        let k = hbar * hbar / m;
        d_r += k * (r * jet.ds[i] * jet.ds[i] - jet.d2r[i]);
        d_s -= k * (two * r * jet.dr[i] * jet.ds[i] + r2 * jet.d2s[i]);
        let g = owning_group(groups, i);
        let l = jet.lap[g];
        // ∂ᵢ²(R² L) with ∂ᵢR² = 2R∂ᵢR and ∂ᵢ²R² = 2(∂ᵢR)² + 2R∂ᵢ²R
        let d2_r2l = (two * jet.dr[i] * jet.dr[i] + two * r * jet.d2r[i]) * l
            + two * (two * r * jet.dr[i]) * jet.dlap[i]
            + r2 * jet.d2lap[i];
        d_s -= two * couplings[g] * d2_r2l;
    }
    for (&c, &l) in couplings.iter().zip(&jet.lap) {
        d_r -= two * c * r * l * l;
    }
    (d_r, d_s)
}

/// `(continuity, energy)` residuals at one point.
pub fn pointwise_residuals<T: Real>(
    jet: &Jet<T>,
    masses: &[T],
    hbar: T,
    groups: &[Range<usize>],
    couplings: &[T],
) -> (T, T) {
    let (d_r, d_s) = euler_lagrange(jet, masses, hbar, groups, couplings);
    let continuity = hbar * jet.dt_r2 - d_s;
    let energy = -lit::<T>(2.0) * hbar * jet.r * jet.dt_s - d_r;
    (continuity, energy)
}
