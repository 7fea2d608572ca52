use serde::{Deserialize, Serialize};

use super::fields::WaveField;
use super::FieldError;
use crate::scalar::{count, lit, Real};

/// Uniform samples `min, min + h, …, max` with `h = (max − min)/(points − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub min: T,
    pub max: T,
    pub points: usize,
}

impl<T: Real> Axis<T> {
    pub fn new(min: T, max: T, points: usize) -> Result<Self, FieldError> {
        if points < 8 {
            return Err(FieldError::InvalidGrid(format!(
                "{points} points per axis, need >= 8"
            )));
        }
        if min >= max || !min.is_finite() || !max.is_finite() {
            return Err(FieldError::InvalidGrid(format!(
                "axis bounds [{min}, {max}]"
            )));
        }
        Ok(Self { min, max, points })
    }

    pub fn symmetric(span: T, points: usize) -> Result<Self, FieldError> {
        Self::new(-span, span, points)
    }

    pub fn spacing(&self) -> T {
        (self.max - self.min) / count::<T>(self.points - 1)
    }

    pub fn coord(&self, i: usize) -> T {
        if i + 1 == self.points {
            self.max
        } else {
            self.min + count::<T>(i) * self.spacing()
        }
    }

    pub fn coords(&self) -> Vec<T> {
        (0..self.points).map(|i| self.coord(i)).collect()
    }

    /// Trapezoid weight of sample `i`.
    pub fn weight(&self, i: usize) -> T {
        let h = self.spacing();
        if i == 0 || i + 1 == self.points {
            h / lit(2.0)
        } else {
            h
        }
    }
}

/// Sampling domain plus evaluation times and masking rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub axes: Vec<Axis<T>>,
    pub times: Vec<T>,
    /// Residuals are evaluated only where `R² > mask_rel · max R²`.
    pub mask_rel: T,
    /// Declared bound on the norm lost to domain truncation.
    pub truncation_tol: T,
    /// Points used when the dimension is too high for a tensor grid.
    pub cloud_points: usize,
    pub seed: u64,
}

impl<T: Real> Grid<T> {
    pub fn new(axes: Vec<Axis<T>>, times: Vec<T>) -> Self {
        Self {
            axes,
            times,
            mask_rel: lit(1e-12),
            truncation_tol: lit(1e-9),
            cloud_points: 100_000,
            seed: 0,
        }
    }

    /// `[−span, span]^dims` with `points` samples per axis.
    pub fn cube(dims: usize, span: T, points: usize, times: &[T]) -> Result<Self, FieldError> {
        let axis = Axis::symmetric(span, points)?;
        Ok(Self::new(vec![axis; dims], times.to_vec()))
    }

    /// Box covering `sigmas` widths around the packet center on every axis
    /// at every requested time.
    pub fn covering<F: WaveField<T> + ?Sized>(
        field: &F,
        sigmas: T,
        points: usize,
        times: &[T],
    ) -> Result<Self, FieldError> {
        let widths = field.widths();
        let mut lo = vec![T::infinity(); field.dims()];
        let mut hi = vec![T::neg_infinity(); field.dims()];
        let ts: Vec<T> = if times.is_empty() {
            vec![T::zero()]
        } else {
            times.to_vec()
        };
        for &t in &ts {
            for (i, c) in field.centers(t).into_iter().enumerate() {
                lo[i] = lo[i].min(c - sigmas * widths[i]);
                hi[i] = hi[i].max(c + sigmas * widths[i]);
            }
        }
        let axes = lo
            .into_iter()
            .zip(hi)
            .map(|(a, b)| Axis::new(a, b, points))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(axes, times.to_vec()))
    }

    pub fn with_mask(mut self, mask_rel: T) -> Self {
        self.mask_rel = mask_rel;
        self
    }

    pub fn with_cloud(mut self, points: usize, seed: u64) -> Self {
        self.cloud_points = points;
        self.seed = seed;
        self
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of flat index `k`, last axis fastest.
    pub fn unflatten(&self, mut k: usize, idx: &mut [usize]) {
        for (d, ax) in self.axes.iter().enumerate().rev() {
            idx[d] = k % ax.points;
            k /= ax.points;
        }
    }

    pub fn point(&self, k: usize, idx: &mut [usize], x: &mut [T]) {
        self.unflatten(k, idx);
        for (d, ax) in self.axes.iter().enumerate() {
            x[d] = ax.coord(idx[d]);
        }
    }

    pub fn cell_weight(&self, idx: &[usize]) -> T {
        self.axes
            .iter()
            .zip(idx)
            .map(|(a, &i)| a.weight(i))
            .fold(T::one(), |acc, w| acc * w)
    }

    /// Fails unless the grid covers `sigmas` widths around every center at
    /// every time in `times`.
    pub fn check_coverage<F: WaveField<T> + ?Sized>(
        &self,
        field: &F,
        sigmas: T,
        times: &[T],
    ) -> Result<(), FieldError> {
        if self.dims() != field.dims() {
            return Err(FieldError::DimensionMismatch {
                grid: self.dims(),
                field: field.dims(),
            });
        }
        let widths = field.widths();
        for &t in times {
            for (i, c) in field.centers(t).into_iter().enumerate() {
                let need_min = c - sigmas * widths[i];
                let need_max = c + sigmas * widths[i];
                let ax = &self.axes[i];
                // allow one ulp-scale slack for grids built by `covering`
                let slack = lit::<T>(1e-12) * (ax.max - ax.min);
                if need_min < ax.min - slack || need_max > ax.max + slack {
                    let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
                    return Err(FieldError::GridTooSmall {
                        axis: i,
                        t: f(t),
                        sigmas: f(sigmas),
                        need_min: f(need_min),
                        need_max: f(need_max),
                        min: f(ax.min),
                        max: f(ax.max),
                    });
                }
            }
        }
        Ok(())
    }
}
