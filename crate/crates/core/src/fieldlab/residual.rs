use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::equations::pointwise_residuals;
use super::fields::{Jet, WaveField};
use super::grid::Grid;
use super::{FieldError, MAX_TENSOR_DIMS};
use crate::model::Variant;
use crate::parallel::chunked_reduce;
use crate::scalar::{count, lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormPair<T> {
    /// Root mean square over unmasked points.
    pub l2: T,
    pub linf: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeResidual<T> {
    pub t: T,
    pub continuity: NormPair<T>,
    pub energy: NormPair<T>,
    pub evaluated: usize,
    pub masked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    TensorGrid { points: usize },
    PointCloud { points: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    pub variant: Variant,
    pub continuity: NormPair<T>,
    pub energy: NormPair<T>,
    pub times: Vec<T>,
    pub per_time: Vec<TimeResidual<T>>,
    /// Fraction of evaluated points excluded by the density mask.
    pub masked_fraction: T,
    pub sampling: Sampling,
}

impl<T: Real> ResidualReport<T> {
    pub fn continuity_linf(&self) -> T {
        self.continuity.linf
    }

    pub fn energy_linf(&self) -> T {
        self.energy.linf
    }

    pub fn linf(&self) -> T {
        self.continuity.linf.max(self.energy.linf)
    }
}

#[derive(Clone)]
struct Acc<T> {
    sq_c: T,
    sq_e: T,
    max_c: T,
    max_e: T,
    kept: usize,
    masked: usize,
}

impl<T: Real> Acc<T> {
    fn zero() -> Self {
        Self {
            sq_c: T::zero(),
            sq_e: T::zero(),
            max_c: T::zero(),
            max_e: T::zero(),
            kept: 0,
            masked: 0,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            sq_c: self.sq_c + o.sq_c,
            sq_e: self.sq_e + o.sq_e,
            max_c: self.max_c.max(o.max_c),
            max_e: self.max_e.max(o.max_e),
            kept: self.kept + o.kept,
            masked: self.masked + o.masked,
        }
    }

    fn norms(&self) -> (NormPair<T>, NormPair<T>) {
        let n = count::<T>(self.kept.max(1));
        (
            NormPair {
                l2: (self.sq_c / n).sqrt(),
                linf: self.max_c,
            },
            NormPair {
                l2: (self.sq_e / n).sqrt(),
                linf: self.max_e,
            },
        )
    }
}

/// Masked residual norms of both equations of motion at every grid time.
///
/// Up to three dimensions the full tensor grid is used; beyond that a seeded
/// Gaussian point cloud of `grid.cloud_points` points around the packet.
/// Asking for a variant other than the one the field was built for is an
/// error unless `allow_variant_override` is set.
pub fn pde_residuals<T: Real, F: WaveField<T> + ?Sized>(
    field: &F,
    grid: &Grid<T>,
    variant: Variant,
    allow_variant_override: bool,
) -> Result<ResidualReport<T>, FieldError> {
    if variant != field.variant() && !allow_variant_override {
        return Err(FieldError::VariantMismatch {
            built: field.variant().to_string(),
            requested: variant.to_string(),
        });
    }
    if grid.dims() != field.dims() {
        return Err(FieldError::DimensionMismatch {
            grid: grid.dims(),
            field: field.dims(),
        });
    }
    let dims = field.dims();
    let groups = field.groups_for(variant);
    let couplings = field.couplings_for(variant);
    let masses = field.masses();
    let hbar = field.hbar();
    let tensor = dims <= MAX_TENSOR_DIMS;
    let times = if grid.times.is_empty() {
        vec![T::zero()]
    } else {
        grid.times.clone()
    };

    let mut per_time = Vec::with_capacity(times.len());
    let mut total = Acc::zero();
    for &t in &times {
        let floor = grid.mask_rel * field.peak_density(t);
        let eval = |x: &[T], jet: &mut Jet<T>, acc: &mut Acc<T>| {
            field.jet_into(x, t, &groups, jet);
            if jet.density() <= floor {
                acc.masked += 1;
                return;
            }
            let (c, e) = pointwise_residuals(jet, &masses, hbar, &groups, &couplings);
            acc.sq_c += c * c;
            acc.sq_e += e * e;
            acc.max_c = acc.max_c.max(c.abs());
            acc.max_e = acc.max_e.max(e.abs());
            acc.kept += 1;
        };
        let acc = if tensor {
            chunked_reduce(
                grid.len(),
                Acc::zero(),
                |range| {
                    let mut acc = Acc::zero();
                    let mut idx = vec![0; dims];
                    let mut x = vec![T::zero(); dims];
                    let mut jet = Jet::new(dims, groups.len());
                    for k in range {
                        grid.point(k, &mut idx, &mut x);
                        eval(&x, &mut jet, &mut acc);
                    }
                    acc
                },
                Acc::merge,
            )
        } else {
            let cloud = point_cloud(field, t, grid.cloud_points, grid.seed);
            chunked_reduce(
                grid.cloud_points,
                Acc::zero(),
                |range| {
                    let mut acc = Acc::zero();
                    let mut jet = Jet::new(dims, groups.len());
                    for k in range {
                        eval(&cloud[k * dims..(k + 1) * dims], &mut jet, &mut acc);
                    }
                    acc
                },
                Acc::merge,
            )
        };
        let (c, e) = acc.norms();
        per_time.push(TimeResidual {
            t,
            continuity: c,
            energy: e,
            evaluated: acc.kept,
            masked: acc.masked,
        });
        total = total.merge(acc);
    }
    let (continuity, energy) = total.norms();
    let all = total.kept + total.masked;
    Ok(ResidualReport {
        variant,
        continuity,
        energy,
        times,
        per_time,
        masked_fraction: count::<T>(total.masked) / count::<T>(all.max(1)),
        sampling: if tensor {
            Sampling::TensorGrid { points: grid.len() }
        } else {
            Sampling::PointCloud {
                points: grid.cloud_points,
                seed: grid.seed,
            }
        },
    })
}

/// Points drawn around the packet center with twice the density's standard
/// deviation per axis, so the tails are sampled as well as the core.
fn point_cloud<T: Real, F: WaveField<T> + ?Sized>(field: &F, t: T, n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = field.centers(t);
    let widths = field.widths();
    let mut out = Vec::with_capacity(n * centers.len());
    for _ in 0..n {
        for (c, w) in centers.iter().zip(&widths) {
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(*c + *w * lit::<T>(z));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_free_soliton;
    use crate::model::{validate, ParticleSpec, UniverseConfig};

    #[test]
    fn exact_soliton_has_tiny_residual() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.5)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.5, &u).unwrap();
        let grid = Grid::cube(1, 8.0, 512, &[0.0, 1.0]).unwrap();
        let r = pde_residuals(&s, &grid, Variant::CrossCoupled, false).unwrap();
        assert!(r.linf() < 1e-12, "{:?}", r.continuity);
        assert_eq!(r.per_time.len(), 2);
    }

    #[test]
    fn variant_mismatch_needs_override() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.0)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.0, &u).unwrap();
        let grid = Grid::cube(1, 8.0, 64, &[0.0]).unwrap();
        assert!(matches!(
            pde_residuals(&s, &grid, Variant::WeaklySeparable, false),
            Err(FieldError::VariantMismatch { .. })
        ));
        assert!(pde_residuals(&s, &grid, Variant::WeaklySeparable, true).is_ok());
    }

    #[test]
    fn cloud_is_seeded() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.0)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.0, &u).unwrap();
        assert_eq!(point_cloud(&s, 0.0, 10, 3), point_cloud(&s, 0.0, 10, 3));
        assert_ne!(point_cloud(&s, 0.0, 10, 3), point_cloud(&s, 0.0, 10, 4));
    }
}
