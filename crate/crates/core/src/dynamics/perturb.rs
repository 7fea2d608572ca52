use serde::{Deserialize, Serialize};

use super::{
    evolve, Boundary, DynamicsError, EvolutionParams, EvolutionState, Potential, Trajectory,
};
use crate::ansatz::SolitonSolution;
use crate::fieldlab::Grid;
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbedParameter {
    /// Half-width `s`; the density is renormalized.
    Width,
    /// Phase curvature `a`.
    Curvature,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbTrack<T> {
    pub parameter: PerturbedParameter,
    pub relative: T,
    pub times: Vec<T>,
    /// `‖R² − R²_ref‖₂` against the unperturbed solution.
    pub deviation: Vec<T>,
    /// Closed-form initial distance for a width change.
    pub initial_mismatch: Option<T>,
    pub trajectory: Trajectory<T>,
}

/// L² distance between the normalized densities `√(2/π)/sᵢ exp(−2x²/sᵢ²)`.
pub fn gaussian_density_distance<T: Real>(s1: T, s2: T) -> T {
    let sqrt_pi = T::PI().sqrt();
    let two = lit::<T>(2.0);
    let sq = T::one() / (sqrt_pi * s1) + T::one() / (sqrt_pi * s2)
        - two * two.sqrt() / (sqrt_pi * (s1 * s1 + s2 * s2).sqrt());
    sq.max(T::zero()).sqrt()
}

/// Evolves a one-dimensional free soliton with `s` or `a` scaled by
/// `1 + relative` and records its density distance from the unperturbed
/// solution. A blowup is returned as an error carrying the series so far.
pub fn perturb_and_track<T: Real>(
    sol: &SolitonSolution<T>,
    parameter: PerturbedParameter,
    relative: T,
    horizon: T,
    grid: &Grid<T>,
    params: &EvolutionParams<T>,
) -> Result<PerturbTrack<T>, DynamicsError<T>> {
    if sol.axes.len() != 1 || sol.axes[0].omega != T::zero() {
        return Err(DynamicsError::Unsupported(
            "perturbation tracking needs a one-dimensional free soliton".into(),
        ));
    }
    if relative.abs() > lit(0.1) {
        return Err(DynamicsError::Unsupported(format!(
            "relative perturbation {relative} exceeds 10%"
        )));
    }
    let mut perturbed = sol.clone();
    let scale = T::one() + relative;
    match parameter {
        PerturbedParameter::Width => perturbed.axes[0].s = sol.axes[0].s * scale,
        PerturbedParameter::Curvature => perturbed.axes[0].a = sol.axes[0].a * scale,
    }
    let initial = EvolutionState::from_field(&perturbed, grid, T::zero(), sol.variant)?;
    let mut params = params.clone();
    params.potential = Potential::none(1);
    let initial_mismatch = match parameter {
        PerturbedParameter::Width => Some(gaussian_density_distance(
            sol.axes[0].s,
            perturbed.axes[0].s,
        )),
        PerturbedParameter::Curvature => None,
    };
    let finish = |trajectory: Trajectory<T>| PerturbTrack {
        parameter,
        relative,
        times: trajectory.points.iter().map(|p| p.t).collect(),
        deviation: trajectory
            .points
            .iter()
            .map(|p| p.deviation_l2.unwrap_or(T::nan()))
            .collect(),
        initial_mismatch,
        trajectory,
    };
    evolve(initial, &params, Boundary::Analytic(sol), horizon)
        .map(|(_, trajectory)| finish(trajectory))
}
