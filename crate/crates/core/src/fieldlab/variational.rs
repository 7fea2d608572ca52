//! Numerical check that the implemented variational derivatives belong to
//! the energy functional.
//!
//! For smooth, rapidly decaying `R`, `S` and perturbations `δR`, `δS` on a
//! plane, the central difference
//!
//! ```text
//! D(ε) = (H[R + εδR, S + εδS] − H[R − εδR, S − εδS]) / 2ε
//! ```
//!
//! of the discretized functional must approach `∫(δH/δR·δR + δH/δS·δS)` with
//! error `O(ε²)`. A wrong variational derivative leaves an `O(1)` gap.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::equations::{energy_density, euler_lagrange};
use super::fields::{Jet, WaveField};
use super::grid::Grid;
use crate::model::Variant;
use crate::parallel::chunked_reduce;
use crate::scalar::{lit, Real};

/// `P(z) exp(−α z²)` with `z = x − center`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussPoly<T> {
    pub center: T,
    pub alpha: T,
    /// Polynomial coefficients in ascending powers of `z`.
    pub coeffs: Vec<T>,
}

impl<T: Real> GaussPoly<T> {
    pub fn new(center: T, alpha: T, coeffs: Vec<T>) -> Self {
        Self {
            center,
            alpha,
            coeffs,
        }
    }

    /// `d/dx`: polynomial `P′ − 2αzP`.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut c = vec![T::zero(); n + 1];
        for (k, &ck) in self.coeffs.iter().enumerate() {
            if k > 0 {
                c[k - 1] += lit::<T>(k as f64) * ck;
            }
            c[k + 1] -= lit::<T>(2.0) * self.alpha * ck;
        }
        Self::new(self.center, self.alpha, c)
    }

    pub fn eval(&self, x: T) -> T {
        let z = x - self.center;
        let p = self
            .coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * z + c);
        p * (-self.alpha * z * z).exp()
    }
}

/// `amp · f(x) g(y)` with derivatives up to fourth order cached.
#[derive(Clone, Debug)]
pub struct Term2<T> {
    amp: T,
    fx: Vec<GaussPoly<T>>,
    fy: Vec<GaussPoly<T>>,
}

impl<T: Real> Term2<T> {
    pub fn new(amp: T, fx: GaussPoly<T>, fy: GaussPoly<T>) -> Self {
        let chain = |f: GaussPoly<T>| {
            let mut v = vec![f];
            for _ in 0..4 {
                let d = v.last().unwrap().derivative();
                v.push(d);
            }
            v
        };
        Self {
            amp,
            fx: chain(fx),
            fy: chain(fy),
        }
    }

    fn scaled(&self, k: T) -> Self {
        Self {
            amp: self.amp * k,
            fx: self.fx.clone(),
            fy: self.fy.clone(),
        }
    }

    fn eval(&self, x: T, y: T, p: usize, q: usize) -> T {
        self.amp * self.fx[p].eval(x) * self.fy[q].eval(y)
    }
}

fn sum_eval<T: Real>(terms: &[Term2<T>], x: T, y: T, p: usize, q: usize) -> T {
    terms.iter().map(|t| t.eval(x, y, p, q)).sum()
}

/// Two one-dimensional particles with a general, non-product `R` and `S`
/// built from [`Term2`] sums, in the trap `V = Σ ½mᵢωᵢ²xᵢ²`.
#[derive(Clone, Debug)]
pub struct SmoothField2<T> {
    pub r_terms: Vec<Term2<T>>,
    pub s_terms: Vec<Term2<T>>,
    pub masses: [T; 2],
    pub omegas: [T; 2],
    pub hbar: T,
    pub c_abs: T,
    pub couplings: [T; 2],
    pub variant: Variant,
}

impl<T: Real> SmoothField2<T> {
    /// `R + εδR`, `S + εδS`.
    pub fn perturbed(&self, dr: &[Term2<T>], ds: &[Term2<T>], eps: T) -> Self {
        let mut out = self.clone();
        out.r_terms.extend(dr.iter().map(|t| t.scaled(eps)));
        out.s_terms.extend(ds.iter().map(|t| t.scaled(eps)));
        out
    }
}

impl<T: Real> WaveField<T> for SmoothField2<T> {
    fn dims(&self) -> usize {
        2
    }

    fn hbar(&self) -> T {
        self.hbar
    }

    fn masses(&self) -> Vec<T> {
        self.masses.to_vec()
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn particle_groups(&self) -> Vec<Range<usize>> {
        vec![0..1, 1..2]
    }

    fn group_couplings(&self) -> Vec<T> {
        self.couplings.to_vec()
    }

    fn c_abs(&self) -> T {
        self.c_abs
    }

    fn centers(&self, _t: T) -> Vec<T> {
        vec![T::zero(), T::zero()]
    }

    fn widths(&self) -> Vec<T> {
        vec![T::one(), T::one()]
    }

    fn peak_density(&self, _t: T) -> T {
        let r = sum_eval(&self.r_terms, T::zero(), T::zero(), 0, 0);
        r * r
    }

    fn jet_into(&self, x: &[T], _t: T, groups: &[Range<usize>], jet: &mut Jet<T>) {
        let (px, py) = (x[0], x[1]);
        let r = |p, q| sum_eval(&self.r_terms, px, py, p, q);
        let s = |p, q| sum_eval(&self.s_terms, px, py, p, q);
        jet.r = r(0, 0);
        jet.s = s(0, 0);
        jet.dr = vec![r(1, 0), r(0, 1)];
        jet.d2r = vec![r(2, 0), r(0, 2)];
        jet.ds = vec![s(1, 0), s(0, 1)];
        jet.d2s = vec![s(2, 0), s(0, 2)];
        if groups.len() == 1 {
            jet.lap = vec![s(2, 0) + s(0, 2)];
            jet.dlap = vec![s(3, 0) + s(1, 2), s(2, 1) + s(0, 3)];
            jet.d2lap = vec![s(4, 0) + s(2, 2), s(2, 2) + s(0, 4)];
        } else {
            jet.lap = vec![s(2, 0), s(0, 2)];
            jet.dlap = vec![s(3, 0), s(0, 3)];
            jet.d2lap = vec![s(4, 0), s(0, 4)];
        }
        jet.dt_r2 = T::zero();
        jet.dt_s = T::zero();
        let half = lit::<T>(0.5);
        jet.v = half * self.masses[0] * self.omegas[0] * self.omegas[0] * px * px
            + half * self.masses[1] * self.omegas[1] * self.omegas[1] * py * py;
    }
}

/// Trapezoid value of the energy functional under `variant`'s grouping.
pub fn hamiltonian<T: Real, F: WaveField<T> + ?Sized>(
    field: &F,
    grid: &Grid<T>,
    variant: Variant,
) -> T {
    let dims = field.dims();
    let groups = field.groups_for(variant);
    let couplings = field.couplings_for(variant);
    let masses = field.masses();
    let hbar = field.hbar();
    chunked_reduce(
        grid.len(),
        T::zero(),
        |range| {
            let mut idx = vec![0; dims];
            let mut x = vec![T::zero(); dims];
            let mut jet = Jet::new(dims, groups.len());
            let mut acc = T::zero();
            for k in range {
                grid.point(k, &mut idx, &mut x);
                field.jet_into(&x, T::zero(), &groups, &mut jet);
                acc += grid.cell_weight(&idx)
                    * energy_density(&jet, &masses, hbar, &couplings).total();
            }
            acc
        },
        |a, b| a + b,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalReport<T> {
    pub action_variant: Variant,
    pub derivative_variant: Variant,
    /// `∫(δH/δR·δR + δH/δS·δS)`.
    pub inner_product: T,
    pub eps: Vec<T>,
    pub errors: Vec<T>,
    /// Observed convergence exponents between consecutive `ε`.
    pub orders: Vec<T>,
    pub passes: bool,
}

/// Test problem: distinct masses, couplings and trap frequencies, with mixed
/// `x·y` structure in both fields and both perturbations.
pub fn test_problem<T: Real>(variant: Variant) -> (SmoothField2<T>, Vec<Term2<T>>, Vec<Term2<T>>) {
    let l = |x: f64| lit::<T>(x);
    let gp =
        |c: f64, a: f64, p: &[f64]| GaussPoly::new(l(c), l(a), p.iter().map(|&x| l(x)).collect());
    let base = SmoothField2 {
        r_terms: vec![
            Term2::new(
                l(0.6),
                gp(0.0, 0.5, &[1.0, 0.3]),
                gp(0.0, 0.6, &[1.0, 0.0, 0.1]),
            ),
            Term2::new(
                l(0.2),
                gp(0.3, 0.7, &[0.0, 1.0]),
                gp(-0.2, 0.8, &[0.0, 1.0]),
            ),
        ],
        s_terms: vec![
            Term2::new(
                l(0.4),
                gp(0.0, 0.3, &[0.5, 0.0, 1.0]),
                gp(0.1, 0.35, &[1.0, -0.5]),
            ),
            Term2::new(
                l(0.7),
                gp(-0.4, 0.5, &[0.0, 1.0]),
                gp(0.2, 0.45, &[0.2, 1.0, 0.3]),
            ),
        ],
        masses: [l(1.0), l(1.7)],
        omegas: [l(0.5), l(0.2)],
        hbar: l(1.0),
        c_abs: l(0.125),
        couplings: [l(0.125), l(0.3)],
        variant,
    };
    let dr = vec![Term2::new(
        l(0.3),
        gp(0.5, 0.9, &[0.5, -1.0]),
        gp(-0.3, 1.1, &[1.0, 0.0, 0.4]),
    )];
    let ds = vec![
        Term2::new(
            l(0.5),
            gp(-0.2, 0.8, &[1.0, 0.7]),
            gp(0.4, 0.9, &[0.0, 1.0]),
        ),
        Term2::new(
            l(0.25),
            gp(0.1, 1.0, &[0.3, 0.0, 1.0]),
            gp(0.0, 0.7, &[1.0]),
        ),
    ];
    (base, dr, ds)
}

/// Runs the directional-derivative test with the functional evaluated under
/// `action_variant` and the variational derivatives under
/// `derivative_variant`.
pub fn variational_check_mixed<T: Real>(
    action_variant: Variant,
    derivative_variant: Variant,
    eps: &[T],
) -> VariationalReport<T> {
    let (base, dr, ds) = test_problem::<T>(action_variant);
    let grid = Grid::cube(2, lit(8.0), 321, &[]).expect("static grid is valid");
    let groups = base.groups_for(derivative_variant);
    let couplings = base.couplings_for(derivative_variant);
    let masses = base.masses.to_vec();
    let dims = 2;
    let inner = chunked_reduce(
        grid.len(),
        T::zero(),
        |range| {
            let mut idx = vec![0; dims];
            let mut x = vec![T::zero(); dims];
            let mut jet = Jet::new(dims, groups.len());
            let mut acc = T::zero();
            for k in range {
                grid.point(k, &mut idx, &mut x);
                base.jet_into(&x, T::zero(), &groups, &mut jet);
                let (er, es) = euler_lagrange(&jet, &masses, base.hbar, &groups, &couplings);
                let d_r = sum_eval(&dr, x[0], x[1], 0, 0);
                let d_s = sum_eval(&ds, x[0], x[1], 0, 0);
                acc += grid.cell_weight(&idx) * (er * d_r + es * d_s);
            }
            acc
        },
        |a, b| a + b,
    );
    let errors: Vec<T> = eps
        .iter()
        .map(|&e| {
            let plus = hamiltonian(&base.perturbed(&dr, &ds, e), &grid, action_variant);
            let minus = hamiltonian(&base.perturbed(&dr, &ds, -e), &grid, action_variant);
            ((plus - minus) / (lit::<T>(2.0) * e) - inner).abs()
        })
        .collect();
    let orders: Vec<T> = errors
        .windows(2)
        .zip(eps.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect();
    let lo = lit::<T>(1.8);
    let hi = lit::<T>(2.2);
    let passes = !orders.is_empty()
        && orders.iter().all(|&p| p >= lo && p <= hi)
        && errors
            .last()
            .is_some_and(|&e| e <= lit::<T>(1e-4) * inner.abs());
    VariationalReport {
        action_variant,
        derivative_variant,
        inner_product: inner,
        eps: eps.to_vec(),
        errors,
        orders,
        passes,
    }
}

/// Directional-derivative test of one variant's equations.
pub fn variational_check<T: Real>(variant: Variant, eps: &[T]) -> VariationalReport<T> {
    variational_check_mixed(variant, variant, eps)
}

/// Step sizes used by default: `0.04, 0.02, 0.01, 0.005`.
pub fn default_steps<T: Real>() -> Vec<T> {
    [0.04, 0.02, 0.01, 0.005].iter().map(|&x| lit(x)).collect()
}
