use serde::{Deserialize, Serialize};

use super::equations::energy_density;
use super::fields::{Jet, WaveField};
use super::grid::Grid;
use super::{FieldError, COVERAGE_WIDTHS, MAX_TENSOR_DIMS};
use crate::model::EnergyBreakdown;
use crate::parallel::chunked_reduce;
use crate::scalar::{lit, Real};

/// Trapezoid integrals of the energy functional and the norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEnergy<T> {
    pub norm: T,
    /// `Σ ħ²/2m ∫(∂R)²`
    pub gradient: T,
    /// `Σ ħ²/2m ∫R²(∂S)²`
    pub phase: T,
    /// `C ∫R²L²` (negative)
    pub nonlinear: T,
    /// `∫VR²`
    pub potential: T,
    /// `⟨∂ᵢS⟩` per axis.
    pub mean_phase_gradient: Vec<T>,
    pub breakdown: EnergyBreakdown<T>,
}

/// Trapezoid quadrature of the energy functional over a tensor grid of at
/// most three dimensions, using the Laplacian grouping of the field's own
/// variant.
///
/// The translational part is `Σ (ħ⟨∂ᵢS⟩)²/2mᵢ`, the oscillator part is
/// `∫VR²`, and the internal part is the remainder.
pub fn energy_quadrature<T: Real, F: WaveField<T> + ?Sized>(
    field: &F,
    grid: &Grid<T>,
    t: T,
) -> Result<QuadratureEnergy<T>, FieldError> {
    let dims = field.dims();
    if dims > MAX_TENSOR_DIMS {
        return Err(FieldError::TooManyDimensions {
            dims,
            max: MAX_TENSOR_DIMS,
        });
    }
    grid.check_coverage(field, lit(COVERAGE_WIDTHS), &[t])?;
    let variant = field.variant();
    let groups = field.groups_for(variant);
    let couplings = field.couplings_for(variant);
    let masses = field.masses();
    let hbar = field.hbar();

    // [norm, gradient, phase, nonlinear, potential, ∫R²∂ᵢS ...]
    let width = 5 + dims;
    let sums = chunked_reduce(
        grid.len(),
        vec![T::zero(); width],
        |range| {
            let mut acc = vec![T::zero(); width];
            let mut idx = vec![0; dims];
            let mut x = vec![T::zero(); dims];
            let mut jet = Jet::new(dims, groups.len());
            for k in range {
                grid.point(k, &mut idx, &mut x);
                let w = grid.cell_weight(&idx);
                field.jet_into(&x, t, &groups, &mut jet);
                let d = energy_density(&jet, &masses, hbar, &couplings);
                let r2 = jet.density();
                acc[0] += w * r2;
                acc[1] += w * d.gradient;
                acc[2] += w * d.phase;
                acc[3] += w * d.nonlinear;
                acc[4] += w * d.potential;
                for i in 0..dims {
                    acc[5 + i] += w * r2 * jet.ds[i];
                }
            }
            acc
        },
        |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        },
    );
    let norm = sums[0];
    let mean_phase_gradient: Vec<T> = sums[5..].iter().map(|&s| s / norm).collect();
    let kinetic: T = mean_phase_gradient
        .iter()
        .zip(&masses)
        .map(|(&g, &m)| hbar * hbar * g * g / (lit::<T>(2.0) * m))
        .sum();
    let total = sums[1] + sums[2] + sums[3] + sums[4];
    Ok(QuadratureEnergy {
        norm,
        gradient: sums[1],
        phase: sums[2],
        nonlinear: sums[3],
        potential: sums[4],
        mean_phase_gradient,
        breakdown: EnergyBreakdown {
            kinetic,
            internal: total - kinetic - sums[4],
            oscillator: sums[4],
            total,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_free_soliton;
    use crate::model::{validate, ParticleSpec, UniverseConfig};

    #[test]
    fn free_soliton_energy() {
        let u = validate(UniverseConfig::<f64>::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.0)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.0, &u).unwrap();
        let grid = Grid::cube(1, 8.0, 1024, &[]).unwrap();
        let q = energy_quadrature(&s, &grid, 0.0).unwrap();
        assert!((q.norm - 1.0).abs() < 1e-12);
        assert!((q.breakdown.total - 0.5).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 1.0)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 1.0, &u).unwrap();
        let grid = Grid::cube(1, 8.0, 64, &[]).unwrap();
        assert!(matches!(
            energy_quadrature(&s, &grid, 6.0),
            Err(FieldError::GridTooSmall { .. })
        ));
    }
}
