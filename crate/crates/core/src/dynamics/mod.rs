//! Method-of-lines time evolution of the equations of motion in `(R², S)`:
//!
//! ```text
//! ∂ₜR² = −Σ ħ/mᵢ ∇ᵢ·(R²∇ᵢS) + 2C/ħ Σ Δᵢ(R² ΣΔⱼS)
//! ∂ₜS  =  Σ ħ/2mᵢ ΔᵢR/R − V/ħ − Σ ħ/2mᵢ (∇ᵢS)² − C/ħ (ΣΔᵢS)²
//! ```
//!
//! Classical fourth-order Runge–Kutta in time, second-order central
//! differences in space, one or two dimensions.
//!
//! Dirichlet values are imposed on a three-point margin and, when an analytic
//! boundary is supplied, wherever the reference density is below the floor
//! `ρ_min`. Without the second set the `ΔR/R` term is evaluated on floor
//! values in the tails, which is unstable.
//!
//! For `|C| > 0` the continuum problem amplifies short waves at a rate that
//! grows like `k³` (see [`stability`]), so on fine grids the run is expected
//! to end in [`DynamicsError::BlowupDetected`].

mod perturb;
mod reference;
pub mod stability;
mod stencil;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::SolitonSolution;
use crate::fieldlab::{FieldError, Grid, Jet, WaveField};
use crate::model::Variant;
use crate::scalar::{lit, Real};

pub use perturb::{gaussian_density_distance, perturb_and_track, PerturbTrack, PerturbedParameter};
pub use reference::LinearGaussian;
pub use stability::{grid_growth_rate, linearized_growth_rate, GridGrowth};
use stencil::{map_points, Stencil};

/// Density floor `ρ_min`.
pub const DENSITY_FLOOR: f64 = 1e-12;
/// Width of the Dirichlet margin, in points.
pub const MARGIN: usize = 3;
/// Fraction of free interior points at the floor that triggers a warning.
pub const FLOOR_SATURATION: f64 = 0.2;
/// Safety factor in `dt ≤ factor · h² min(m)/ħ`.
pub const DT_FACTOR: f64 = 0.1;
/// Largest two-dimensional grid accepted.
pub const MAX_2D_POINTS: usize = 256 * 256;

#[derive(Debug, Error)]
pub enum DynamicsError<T: Real> {
    #[error("non-finite field value at step {step} (t = {t})")]
    BlowupDetected {
        step: usize,
        t: T,
        last_valid: Box<EvolutionState<T>>,
        trajectory: Box<Trajectory<T>>,
    },
    #[error("unsupported setup: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// External potential `V = Σ ½mᵢωᵢ²xᵢ²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential<T> {
    /// Angular frequency per axis.
    pub omega: Vec<T>,
}

impl<T: Real> Potential<T> {
    pub fn none(dims: usize) -> Self {
        Self {
            omega: vec![T::zero(); dims],
        }
    }

    pub fn harmonic(omega: Vec<T>) -> Self {
        Self { omega }
    }

    /// The trap a product solution was built in.
    pub fn of_solution(sol: &SolitonSolution<T>) -> Self {
        Self::harmonic(sol.axes.iter().map(|ax| ax.omega).collect())
    }

    pub fn eval(&self, x: &[T], masses: &[T]) -> T {
        let half = lit::<T>(0.5);
        x.iter()
            .zip(masses)
            .zip(&self.omega)
            .map(|((&x, &m), &w)| half * m * w * w * x * x)
            .sum()
    }
}

/// Density and phase on a tensor grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState<T> {
    pub rho: Vec<T>,
    pub phase: Vec<T>,
    pub t: T,
    pub grid: Grid<T>,
    pub variant: Variant,
    pub rho_min: T,
}

impl<T: Real> EvolutionState<T> {
    /// Samples `field` at time `t`, with the density floored at `ρ_min`.
    pub fn from_field<F: WaveField<T> + ?Sized>(
        field: &F,
        grid: &Grid<T>,
        t: T,
        variant: Variant,
    ) -> Result<Self, DynamicsError<T>> {
        check_grid(grid, field.dims())?;
        let rho_min = lit::<T>(DENSITY_FLOOR);
        let (rho, phase) = sample_fields(field, grid, t);
        Ok(Self {
            rho: rho.into_iter().map(|r| r.max(rho_min)).collect(),
            phase,
            t,
            grid: grid.clone(),
            variant,
            rho_min,
        })
    }

    /// Trapezoid integral of `R²`.
    pub fn norm(&self) -> T {
        weights(&self.grid)
            .iter()
            .zip(&self.rho)
            .fold(T::zero(), |acc, (&w, &r)| acc + w * r)
    }
}

/// Physical constants and stepping controls of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams<T> {
    pub hbar: T,
    /// Mass per axis.
    pub masses: Vec<T>,
    /// Axes sharing one phase Laplacian.
    pub groups: Vec<std::ops::Range<usize>>,
    /// Coupling magnitude per group.
    pub couplings: Vec<T>,
    pub potential: Potential<T>,
    /// Time step; `None` uses the stability bound.
    pub dt: Option<T>,
    /// Record norm, energy and deviation every this many steps.
    pub record_every: usize,
    /// Keep a full state copy every this many steps.
    pub snapshot_every: Option<usize>,
}

impl<T: Real> EvolutionParams<T> {
    /// Constants of `field` with the Laplacian grouping of `variant`.
    pub fn for_field<F: WaveField<T> + ?Sized>(
        field: &F,
        variant: Variant,
        potential: Potential<T>,
    ) -> Self {
        Self {
            hbar: field.hbar(),
            masses: field.masses(),
            groups: field.groups_for(variant),
            couplings: field.couplings_for(variant),
            potential,
            dt: None,
            record_every: 1,
            snapshot_every: None,
        }
    }

    /// Switches the phase coupling off.
    pub fn linear(mut self) -> Self {
        self.couplings.iter_mut().for_each(|c| *c = T::zero());
        self
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = Some(dt);
        self
    }

    /// `dt ≤ 0.1 h² min(m)/ħ` over the smallest grid spacing.
    pub fn stability_bound(&self, grid: &Grid<T>) -> T {
        let h = grid
            .axes
            .iter()
            .map(|a| a.spacing())
            .fold(T::infinity(), T::min);
        let m = self.masses.iter().copied().fold(T::infinity(), T::min);
        lit::<T>(DT_FACTOR) * h * h * m / self.hbar
    }
}

/// Reference used on the Dirichlet set.
#[derive(Clone, Copy)]
pub enum Boundary<'a, T> {
    /// Impose the values of an exact solution and measure the deviation from it.
    Analytic(&'a dyn WaveField<T>),
    /// Hold the margin, and every point whose initial density is at the
    /// floor, at their initial values.
    Frozen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint<T> {
    pub step: usize,
    pub t: T,
    pub norm: T,
    pub energy: T,
    /// Largest `|R² − R²_ref|` inside the margin.
    pub deviation_linf: Option<T>,
    /// `(∫(R² − R²_ref)²)^{1/2}` over the grid.
    pub deviation_l2: Option<T>,
    /// Share of free interior points sitting at `ρ_min`.
    pub floor_fraction: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub dt: T,
    pub dt_bound: T,
    pub steps: usize,
    pub points: Vec<TrajectoryPoint<T>>,
    pub snapshots: Vec<EvolutionState<T>>,
    /// Recorded points at which the floor saturation threshold was exceeded.
    pub floor_saturated: usize,
}

impl<T: Real> Trajectory<T> {
    /// Largest `|N(t) − N(0)|`.
    pub fn norm_drift(&self) -> T {
        self.drift(|p| p.norm)
    }

    /// Largest `|E(t) − E(0)|`.
    pub fn energy_drift(&self) -> T {
        self.drift(|p| p.energy)
    }

    pub fn max_deviation(&self) -> Option<T> {
        self.points
            .iter()
            .map(|p| p.deviation_linf)
            .try_fold(T::zero(), |acc, d| d.map(|d| acc.max(d)))
    }

    fn drift(&self, f: impl Fn(&TrajectoryPoint<T>) -> T) -> T {
        let Some(first) = self.points.first() else {
            return T::zero();
        };
        let x0 = f(first);
        self.points
            .iter()
            .map(|p| (f(p) - x0).abs())
            .fold(T::zero(), T::max)
    }
}

fn check_grid<T: Real>(grid: &Grid<T>, dims: usize) -> Result<(), DynamicsError<T>> {
    if grid.dims() != dims {
        return Err(FieldError::DimensionMismatch {
            grid: grid.dims(),
            field: dims,
        }
        .into());
    }
    match dims {
        1 => Ok(()),
        2 if grid.len() <= MAX_2D_POINTS => Ok(()),
        2 => Err(DynamicsError::Unsupported(format!(
            "two-dimensional grid of {} points exceeds {MAX_2D_POINTS}",
            grid.len()
        ))),
        d => Err(DynamicsError::Unsupported(format!(
            "{d} dimensions; at most 2 are evolved"
        ))),
    }
}

fn weights<T: Real>(grid: &Grid<T>) -> Vec<T> {
    let dims = grid.dims();
    map_points(grid.len(), |k| {
        let mut idx = vec![0; dims];
        grid.unflatten(k, &mut idx);
        grid.cell_weight(&idx)
    })
}

fn sample_fields<T: Real, F: WaveField<T> + ?Sized>(
    field: &F,
    grid: &Grid<T>,
    t: T,
) -> (Vec<T>, Vec<T>) {
    let dims = grid.dims();
    let groups = field.particle_groups();
    map_points(grid.len(), |k| {
        let mut idx = vec![0; dims];
        let mut x = vec![T::zero(); dims];
        let mut jet = Jet::new(dims, groups.len());
        grid.point(k, &mut idx, &mut x);
        field.jet_into(&x, t, &groups, &mut jet);
        (jet.r * jet.r, jet.s)
    })
    .into_iter()
    .unzip()
}

struct Run<'a, T: Real> {
    stencil: Stencil<T>,
    weights: Vec<T>,
    margin: Vec<bool>,
    frozen: Vec<bool>,
    interior: Vec<bool>,
    boundary: Boundary<'a, T>,
    grid: &'a Grid<T>,
    rho_min: T,
}

impl<T: Real> Run<'_, T> {
    fn reference(&self, t: T) -> Option<(Vec<T>, Vec<T>)> {
        match self.boundary {
            Boundary::Analytic(f) => Some(sample_fields(f, self.grid, t)),
            Boundary::Frozen => None,
        }
    }

    fn fixed_set(&self, reference: Option<&(Vec<T>, Vec<T>)>) -> Vec<bool> {
        match reference {
            Some((rho, _)) => self
                .margin
                .iter()
                .zip(rho)
                .map(|(&m, &r)| m || r < self.rho_min)
                .collect(),
            None => self.frozen.clone(),
        }
    }

    /// Imposes reference values on `fixed` and applies the floor.
    fn constrain(
        &self,
        rho: &mut [T],
        phase: &mut [T],
        fixed: &[bool],
        reference: Option<&(Vec<T>, Vec<T>)>,
    ) {
        if let Some((r, s)) = reference {
            for k in 0..rho.len() {
                if fixed[k] {
                    rho[k] = r[k];
                    phase[k] = s[k];
                }
            }
        }
        rho.iter_mut().for_each(|r| *r = r.max(self.rho_min));
    }

    fn record(
        &self,
        step: usize,
        state: &EvolutionState<T>,
        fixed: &[bool],
        reference: Option<&(Vec<T>, Vec<T>)>,
    ) -> TrajectoryPoint<T> {
        let norm = self
            .weights
            .iter()
            .zip(&state.rho)
            .fold(T::zero(), |acc, (&w, &r)| acc + w * r);
        let energy = self.stencil.energy(&state.rho, &state.phase, &self.weights);
        let (deviation_linf, deviation_l2) = match reference {
            Some((r, _)) => {
                let mut linf = T::zero();
                let mut sq = T::zero();
                for k in 0..r.len() {
                    let d = state.rho[k] - r[k];
                    if self.interior[k] {
                        linf = linf.max(d.abs());
                    }
                    sq += self.weights[k] * d * d;
                }
                (Some(linf), Some(sq.sqrt()))
            }
            None => (None, None),
        };
        let mut free = 0usize;
        let mut floored = 0usize;
        for k in 0..state.rho.len() {
            if self.interior[k] && !fixed[k] {
                free += 1;
                if state.rho[k] <= self.rho_min {
                    floored += 1;
                }
            }
        }
        TrajectoryPoint {
            step,
            t: state.t,
            norm,
            energy,
            deviation_linf,
            deviation_l2,
            floor_fraction: lit::<T>(floored as f64) / lit::<T>(free.max(1) as f64),
        }
    }
}

/// Advances `initial` to `initial.t + horizon` with RK4.
///
/// A `dt` above the stability bound is honoured with a warning. The step is
/// shrunk so that a whole number of steps reaches the horizon exactly.
pub fn evolve<T: Real>(
    initial: EvolutionState<T>,
    params: &EvolutionParams<T>,
    boundary: Boundary<'_, T>,
    horizon: T,
) -> Result<(EvolutionState<T>, Trajectory<T>), DynamicsError<T>> {
    let grid = initial.grid.clone();
    let dims = grid.dims();
    check_grid(&grid, dims)?;
    if params.masses.len() != dims || params.potential.omega.len() != dims {
        return Err(FieldError::DimensionMismatch {
            grid: dims,
            field: params.masses.len(),
        }
        .into());
    }
    if let Boundary::Analytic(f) = boundary {
        if f.dims() != dims {
            return Err(FieldError::DimensionMismatch {
                grid: dims,
                field: f.dims(),
            }
            .into());
        }
    }
    let shape: Vec<usize> = grid.axes.iter().map(|a| a.points).collect();
    let mut strides = vec![1; dims];
    for d in (0..dims.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    let potential = map_points(grid.len(), |k| {
        let mut idx = vec![0; dims];
        let mut x = vec![T::zero(); dims];
        grid.point(k, &mut idx, &mut x);
        params.potential.eval(&x, &params.masses)
    });
    let stencil = Stencil {
        shape,
        strides,
        spacing: grid.axes.iter().map(|a| a.spacing()).collect(),
        masses: params.masses.clone(),
        hbar: params.hbar,
        groups: params.groups.clone(),
        couplings: params.couplings.clone(),
        potential,
    };
    let n = grid.len();
    let margin: Vec<bool> = (0..n).map(|k| !stencil.inside(k, MARGIN)).collect();
    let run = Run {
        interior: margin.iter().map(|m| !m).collect(),
        frozen: margin
            .iter()
            .zip(&initial.rho)
            .map(|(&m, &r)| m || r <= initial.rho_min)
            .collect(),
        margin,
        weights: weights(&grid),
        stencil,
        boundary,
        grid: &grid,
        rho_min: initial.rho_min,
    };

    let bound = params.stability_bound(&grid);
    let target = params.dt.unwrap_or(bound);
    if target > bound {
        warn!("dt = {target} exceeds the stability bound {bound}");
    }
    let steps = if horizon > T::zero() {
        (horizon / target).ceil().to_usize().unwrap_or(0).max(1)
    } else {
        0
    };
    let dt = if steps > 0 {
        horizon / lit::<T>(steps as f64)
    } else {
        target
    };
    let half = lit::<T>(0.5);
    let sixth = T::one() / lit::<T>(6.0);
    let two = lit::<T>(2.0);
    let t0 = initial.t;

    let mut state = initial;
    let mut reference = run.reference(t0);
    let mut fixed = run.fixed_set(reference.as_ref());
    let mut trajectory = Trajectory {
        dt,
        dt_bound: bound,
        steps,
        points: vec![run.record(0, &state, &fixed, reference.as_ref())],
        snapshots: Vec::new(),
        floor_saturated: 0,
    };
    if params.snapshot_every.is_some() {
        trajectory.snapshots.push(state.clone());
    }
    let threshold = lit::<T>(FLOOR_SATURATION);
    let every = params.record_every.max(1);

    for step in 1..=steps {
        let t = t0 + dt * lit::<T>((step - 1) as f64);
        let t_half = t + half * dt;
        let t_next = t0 + dt * lit::<T>(step as f64);
        let ref_half = run.reference(t_half);
        let ref_next = run.reference(t_next);

        let stage =
            |base: &EvolutionState<T>, k: &(Vec<T>, Vec<T>), h: T, r: Option<&(Vec<T>, Vec<T>)>| {
                let mut rho: Vec<T> = base
                    .rho
                    .iter()
                    .zip(&k.0)
                    .map(|(&y, &d)| y + h * d)
                    .collect();
                let mut phase: Vec<T> = base
                    .phase
                    .iter()
                    .zip(&k.1)
                    .map(|(&y, &d)| y + h * d)
                    .collect();
                run.constrain(&mut rho, &mut phase, &fixed, r);
                (rho, phase)
            };
        let k1 = run.stencil.rhs(&state.rho, &state.phase, &fixed);
        let y2 = stage(&state, &k1, half * dt, ref_half.as_ref());
        let k2 = run.stencil.rhs(&y2.0, &y2.1, &fixed);
        let y3 = stage(&state, &k2, half * dt, ref_half.as_ref());
        let k3 = run.stencil.rhs(&y3.0, &y3.1, &fixed);
        let y4 = stage(&state, &k3, dt, ref_next.as_ref());
        let k4 = run.stencil.rhs(&y4.0, &y4.1, &fixed);
        let combine = |y: &[T], a: &[T], b: &[T], c: &[T], d: &[T]| -> Vec<T> {
            (0..y.len())
                .map(|i| y[i] + dt * sixth * (a[i] + two * (b[i] + c[i]) + d[i]))
                .collect()
        };
        let mut rho = combine(&state.rho, &k1.0, &k2.0, &k3.0, &k4.0);
        let mut phase = combine(&state.phase, &k1.1, &k2.1, &k3.1, &k4.1);
        run.constrain(&mut rho, &mut phase, &fixed, ref_next.as_ref());

        if rho.iter().chain(&phase).any(|x| !x.is_finite()) {
            return Err(DynamicsError::BlowupDetected {
                step,
                t: t_next,
                last_valid: Box::new(state),
                trajectory: Box::new(trajectory),
            });
        }
        state = EvolutionState {
            rho,
            phase,
            t: t_next,
            grid: state.grid,
            variant: state.variant,
            rho_min: state.rho_min,
        };
        reference = ref_next;
        fixed = run.fixed_set(reference.as_ref());
        if step % every == 0 || step == steps {
            let point = run.record(step, &state, &fixed, reference.as_ref());
            if point.floor_fraction > threshold {
                if trajectory.floor_saturated == 0 {
                    warn!(
                        "floor saturation at t = {}: {} of free interior points at the density floor",
                        point.t, point.floor_fraction
                    );
                }
                trajectory.floor_saturated += 1;
            }
            trajectory.points.push(point);
        }
        if let Some(s) = params.snapshot_every {
            if step % s.max(1) == 0 || step == steps {
                trajectory.snapshots.push(state.clone());
            }
        }
    }
    Ok((state, trajectory))
}
