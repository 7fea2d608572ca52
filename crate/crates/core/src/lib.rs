//! Analytic Gaussian solitons of the phase-nonlinear Schrödinger equation
//!
//! ```text
//! ħ ∂ₜR² + Σ ħ²/mᵢ ∇ᵢ·(R²∇ᵢS) − 2C Σ Δᵢ(R² Σ ΔⱼS) = 0
//! Σ ħ²/mᵢ ΔᵢR − 2ħR ∂ₜS − 2RV − Σ ħ²/mᵢ R(∇ᵢS)² − 2CR(Σ ΔᵢS)² = 0
//! ```
//!
//! written in Madelung variables `Ψ = R exp(iS)` with `C = −|C| < 0`.
//!
//! * [`model`]: configuration types and validation.
//! * [`ansatz`]: closed-form solution constructors and their energies.
//! * [`feasibility`]: the `k`-reduction of the consistency conditions and the
//!   roster exclusion rules.
//! * [`fieldlab`]: field sampling, pointwise PDE residuals and energy
//!   quadrature.
//! * [`dynamics`]: method-of-lines time evolution in `(R², S)`.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! the scalar for the common case.

#![allow(clippy::single_range_in_vec_init, clippy::needless_range_loop)]

pub mod ansatz;
pub mod dynamics;
pub mod feasibility;
pub mod fieldlab;
pub mod model;
pub mod parallel;
pub mod scalar;

pub use ansatz::{
    build_d_dim_soliton, build_entangled_pair, build_free_n_soliton, build_free_soliton,
    build_oscillator_solution, build_product_soliton, build_solution, build_uniform_oscillators,
    closed_form_energy, machian_scaling, AnsatzError, AxisParams, EntangledPairSolution, Layout,
    MachianPoint, SignBranch, SolitonSolution, Solution,
};
pub use dynamics::{
    evolve, perturb_and_track, Boundary, DynamicsError, EvolutionParams, EvolutionState,
    LinearGaussian, PerturbTrack, PerturbedParameter, Potential, Trajectory,
};
pub use feasibility::{
    adjudicate_mixing, check_mass_rule, check_sign_consistency, frequency_bound, solve_k,
    Certificate, Condition, FeasibilityError, FeasibilityResult, MixingVerdict, Status, Verdict,
};
pub use fieldlab::{
    energy_quadrature, pde_residuals, sample, FieldError, FieldSnapshot, Grid, QuadratureEnergy,
    ResidualReport, WaveField,
};
pub use model::{
    validate, Branch, EnergyBreakdown, ParticleSpec, UniverseConfig, ValidatedUniverse,
    ValidationError, Variant, Violation,
};
pub use scalar::Real;

pub type UniverseConfigF64 = UniverseConfig<f64>;
pub type UniverseConfigF32 = UniverseConfig<f32>;
pub type UniverseF64 = ValidatedUniverse<f64>;
pub type UniverseF32 = ValidatedUniverse<f32>;
pub type SolitonF64 = SolitonSolution<f64>;
pub type SolitonF32 = SolitonSolution<f32>;
pub type EntangledPairF64 = EntangledPairSolution<f64>;
pub type EntangledPairF32 = EntangledPairSolution<f32>;
pub type FeasibilityF64 = FeasibilityResult<f64>;
pub type GridF64 = Grid<f64>;
pub type GridF32 = Grid<f32>;
pub type ResidualReportF64 = ResidualReport<f64>;
pub type EnergyF64 = EnergyBreakdown<f64>;
pub type EvolutionStateF64 = EvolutionState<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
