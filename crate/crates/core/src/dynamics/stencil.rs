//! Second-order finite-difference right-hand side of the Madelung system on a
//! one- or two-dimensional tensor grid.
//!
//! The convective terms are in flux form, `∂ᵢ(R²∂ᵢS)` with face-averaged
//! densities and `(∂ᵢS)²` as the mean of the two squared face gradients, so
//! the discrete continuity equation conserves `Σ R²` exactly.

use std::ops::Range;

use rayon::prelude::*;

use crate::scalar::{lit, Real};

/// Geometry and coefficients shared by every stage of a run.
#[derive(Clone, Debug)]
pub(crate) struct Stencil<T> {
    pub shape: Vec<usize>,
    pub strides: Vec<usize>,
    pub spacing: Vec<T>,
    pub masses: Vec<T>,
    pub hbar: T,
    pub groups: Vec<Range<usize>>,
    pub couplings: Vec<T>,
    /// `V(x)` at every grid point.
    pub potential: Vec<T>,
}

const PAR_MIN: usize = 8192;

impl<T: Real> Stencil<T> {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn index(&self, k: usize, axis: usize) -> usize {
        (k / self.strides[axis]) % self.shape[axis]
    }

    /// Whether `k` lies at least `depth` points inside every edge.
    pub fn inside(&self, k: usize, depth: usize) -> bool {
        (0..self.shape.len()).all(|d| {
            let i = self.index(k, d);
            i >= depth && i + depth < self.shape[d]
        })
    }

    fn second(&self, f: &[T], k: usize, d: usize) -> T {
        let s = self.strides[d];
        let h = self.spacing[d];
        (f[k + s] - lit::<T>(2.0) * f[k] + f[k - s]) / (h * h)
    }

    /// Grouped phase Laplacians, zero on the outermost layer.
    fn laplacians(&self, phase: &[T]) -> Vec<Vec<T>> {
        self.groups
            .iter()
            .map(|g| {
                map_points(self.len(), |k| {
                    if !self.inside(k, 1) {
                        return T::zero();
                    }
                    g.clone().map(|d| self.second(phase, k, d)).sum()
                })
            })
            .collect()
    }

    /// `(∂ₜR², ∂ₜS)` at every point not in `fixed`; fixed points get zero.
    pub fn rhs(&self, rho: &[T], phase: &[T], fixed: &[bool]) -> (Vec<T>, Vec<T>) {
        let n = self.len();
        let two = lit::<T>(2.0);
        let half = lit::<T>(0.5);
        let amp: Vec<T> = map_points(n, |k| rho[k].max(T::zero()).sqrt());
        let laps = self.laplacians(phase);
        let rho_lap: Vec<Vec<T>> = laps
            .iter()
            .map(|l| map_points(n, |k| rho[k] * l[k]))
            .collect();
        let h = self.hbar;
        let pairs: Vec<(T, T)> = map_points(n, |k| {
            if fixed[k] {
                return (T::zero(), T::zero());
            }
            let mut d_rho = T::zero();
            let mut d_s = -self.potential[k] / h;
            for d in 0..self.shape.len() {
                let s = self.strides[d];
                let hd = self.spacing[d];
                let m = self.masses[d];
                let up = phase[k + s] - phase[k];
                let down = phase[k] - phase[k - s];
                let flux_up = half * (rho[k] + rho[k + s]) * up;
                let flux_down = half * (rho[k] + rho[k - s]) * down;
                d_rho -= h / m * (flux_up - flux_down) / (hd * hd);
                d_s += h / (two * m) * self.second(&amp, k, d) / amp[k];
                d_s -= h / (two * m) * half * (up * up + down * down) / (hd * hd);
            }
            for (g, range) in self.groups.iter().enumerate() {
                let c = self.couplings[g];
                if c == T::zero() {
                    continue;
                }
                let lap: T = range.clone().map(|d| self.second(&rho_lap[g], k, d)).sum();
                d_rho -= two * c / h * lap;
                d_s += c / h * laps[g][k] * laps[g][k];
            }
            (d_rho, d_s)
        });
        pairs.into_iter().unzip()
    }

    /// Discrete energy whose variational derivatives are exactly [`Self::rhs`]:
    /// face differences for the gradient terms with face-averaged density,
    /// point values for the coupling and potential terms. `weights` are the
    /// trapezoid cell weights; a face carries the mean of its two cells.
    pub fn energy(&self, rho: &[T], phase: &[T], weights: &[T]) -> T {
        let n = self.len();
        let two = lit::<T>(2.0);
        let half = lit::<T>(0.5);
        let amp: Vec<T> = map_points(n, |k| rho[k].max(T::zero()).sqrt());
        let laps = self.laplacians(phase);
        let h = self.hbar;
        let dens: Vec<T> = map_points(n, |k| {
            let mut e = self.potential[k] * rho[k] * weights[k];
            for d in 0..self.shape.len() {
                if self.index(k, d) + 1 >= self.shape[d] {
                    continue;
                }
                let s = self.strides[d];
                let hd = self.spacing[d];
                let w = half * (weights[k] + weights[k + s]);
                let dr = (amp[k + s] - amp[k]) / hd;
                let ds = (phase[k + s] - phase[k]) / hd;
                let rho_face = half * (rho[k] + rho[k + s]);
                e += w * h * h / (two * self.masses[d]) * (dr * dr + rho_face * ds * ds);
            }
            for (g, &c) in self.couplings.iter().enumerate() {
                e -= weights[k] * c * rho[k] * laps[g][k] * laps[g][k];
            }
            e
        });
        dens.iter().fold(T::zero(), |acc, &e| acc + e)
    }
}

/// Ordered per-point map, parallel once the grid is large enough to pay for
/// it.
pub(crate) fn map_points<A: Send, F: Fn(usize) -> A + Sync + Send>(n: usize, f: F) -> Vec<A> {
    if n >= PAR_MIN {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize, h: f64) -> Stencil<f64> {
        Stencil {
            shape: vec![n],
            strides: vec![1],
            spacing: vec![h],
            masses: vec![1.0],
            hbar: 1.0,
            groups: vec![0..1],
            couplings: vec![0.0],
            potential: vec![0.0; n],
        }
    }

    #[test]
    fn continuity_conserves_sum() {
        let n = 64;
        let st = line(n, 0.1);
        let rho: Vec<f64> = (0..n)
            .map(|i| (-((i as f64 - 32.0) * 0.3).powi(2)).exp())
            .collect();
        let phase: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut fixed = vec![false; n];
        for k in [0, 1, 2, n - 3, n - 2, n - 1] {
            fixed[k] = true;
        }
        let st2 = Stencil {
            couplings: vec![0.3],
            ..st
        };
        let (d_rho, _) = st2.rhs(&rho, &phase, &fixed);
        let total: f64 = d_rho.iter().sum();
        let scale: f64 = d_rho.iter().map(|x| x.abs()).sum();
        assert!(total.abs() < 1e-12 * scale, "{total} vs {scale}");
    }

    #[test]
    fn quadratic_phase_second_difference_is_exact() {
        let st = line(16, 0.25);
        let phase: Vec<f64> = (0..16).map(|i| 3.0 * (i as f64 * 0.25).powi(2)).collect();
        let laps = st.laplacians(&phase);
        assert!((laps[0][5] - 6.0).abs() < 1e-12);
        assert_eq!(laps[0][0], 0.0);
    }
}
