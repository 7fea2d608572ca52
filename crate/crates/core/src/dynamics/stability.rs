//! Linearized response of the coupled system to short-wavelength
//! disturbances.
//!
//! Freezing a uniform background density `ρ₀` and phase Laplacian `L₀`, a
//! mode `exp(ikx)` of `(δR², δS)` evolves with the matrix
//!
//! ```text
//! ⎡  α                       ρ₀(ħk²/m − 2|C|k⁴/ħ) ⎤
//! ⎣ −ħk²/(4mρ₀)             −α                    ⎦ ,   α = 2|C|L₀k²/ħ
//! ```
//!
//! whose eigenvalues satisfy `λ² = α² − ħ²k⁴/4m² + |C|k⁶/2m`. The `k⁶` term
//! makes `λ` real and unbounded in `k` for any `|C| > 0`, so the rate on a
//! grid is set by its shortest resolved wavelength.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

/// Real growth rate `max(Re λ, 0)` for squared wavenumber `k2`.
pub fn linearized_growth_rate<T: Real>(hbar: T, m: T, c_abs: T, l0: T, k2: T) -> T {
    let two = lit::<T>(2.0);
    let alpha = two * c_abs * l0 * k2 / hbar;
    let lambda_sq = alpha * alpha - hbar * hbar * k2 * k2 / (lit::<T>(4.0) * m * m)
        + c_abs * k2 * k2 * k2 / (two * m);
    lambda_sq.max(T::zero()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGrowth<T> {
    /// Largest growth rate among resolvable modes.
    pub rate: T,
    /// Effective squared wavenumber `(4/h²)sin²(kh/2)` where it occurs.
    pub k2: T,
    /// Same rate in the continuum at `k = π/h`.
    pub continuum_rate: T,
}

/// Growth rate seen by the second-difference operator on spacing `h`.
pub fn grid_growth_rate<T: Real>(hbar: T, m: T, c_abs: T, l0: T, h: T) -> GridGrowth<T> {
    let samples = 512;
    let mut best = (T::zero(), T::zero());
    for j in 1..=samples {
        let theta = T::FRAC_PI_2() * lit::<T>(j as f64 / samples as f64);
        let k2 = lit::<T>(4.0) / (h * h) * theta.sin().powi(2);
        let rate = linearized_growth_rate(hbar, m, c_abs, l0, k2);
        if rate > best.0 {
            best = (rate, k2);
        }
    }
    let kmax = T::PI() / h;
    GridGrowth {
        rate: best.0,
        k2: best.1,
        continuum_rate: linearized_growth_rate(hbar, m, c_abs, l0, kmax * kmax),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_limit_is_neutral() {
        for k2 in [0.1, 1.0, 100.0, 1e4] {
            assert_eq!(linearized_growth_rate(1.0, 1.0, 0.0, 2.0, k2), 0.0);
        }
    }

    #[test]
    fn long_waves_are_stable_without_background_curvature() {
        // λ² = k⁴(|C|k²/2m − ħ²/4m²) < 0 for k² < ħ²/(2m|C|).
        assert_eq!(linearized_growth_rate(1.0, 1.0, 0.125, 0.0, 3.9), 0.0);
        assert!(linearized_growth_rate(1.0, 1.0, 0.125, 0.0, 4.1) > 0.0);
    }

    #[test]
    fn grid_rate_grows_with_resolution() {
        let coarse = grid_growth_rate(1.0, 1.0, 0.125, 2.0, 0.1);
        let fine = grid_growth_rate(1.0, 1.0, 0.125, 2.0, 0.05);
        assert!(fine.rate > 7.0 * coarse.rate);
        assert!(coarse.rate <= coarse.continuum_rate);
    }
}
