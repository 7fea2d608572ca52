//! Closed-form Gaussian solutions and their energies.
//!
//! A product soliton has, per axis `i` with `ξᵢ = xᵢ − vᵢt`,
//!
//! ```text
//! R = N Π exp(−ξᵢ²/sᵢ²),      N = Π (2/(π sᵢ²))^{1/4}
//! S = Σ (aᵢ ξᵢ² + bᵢ vᵢ xᵢ) + c₀ + ċ t
//! ```
//!
//! and the non-factorizable pair uses the rotated coordinates `x − y` and
//! `x + y`. The phase rate `ċ` comes from the energy equation at the packet
//! center:
//!
//! ```text
//! ħċ = −Σ ħ²/(mᵢsᵢ²) − ½ Σ mᵢvᵢ² + 4|C| (Σ aᵢ)²
//! ```
//!
//! with the last term replaced by `4 Σₚ |Cₚ| (Σ_{i∈p} aᵢ)²` for the weakly
//! separable variant.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feasibility::{
    solve_k_with, Certificate, Condition, FeasibilityError, FeasibilityResult,
};
use crate::model::{Branch, EnergyBreakdown, ParticleSpec, ValidatedUniverse, Variant};
use crate::scalar::{count, lit, rel_diff, Real};

#[derive(Debug, Error)]
pub enum AnsatzError {
    #[error("free particles {first} and {second} have different masses")]
    MassRuleViolation { first: usize, second: usize },
    #[error("weight {index} is inadmissible: {detail}")]
    WeightInadmissible { index: usize, detail: String },
    #[error("frequency bound violated: {detail}")]
    FrequencyBoundViolation { detail: String },
    #[error("sum of inverse squared widths is {sum}, must equal {expected}")]
    ShapeConstraintViolation { sum: f64, expected: f64 },
    #[error("roster infeasible ({}): {}", .0.condition, .0.detail)]
    Infeasible(Certificate),
    #[error("{0}")]
    Precondition(String),
    #[error("constructed solution violates {condition} by {residual:e}")]
    VerificationFailed {
        condition: &'static str,
        residual: f64,
    },
    #[error(transparent)]
    Feasibility(#[from] FeasibilityError),
}

/// Overall sign of the phase curvatures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignBranch {
    #[default]
    Positive,
    Negative,
}

/// Whether the axes are `n` one-dimensional particles or the dimensions of
/// one particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Particles,
    Dimensions,
}

/// Parameters of one Gaussian factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisParams<T> {
    /// Owning particle; axes of one particle share an index.
    pub particle: usize,
    pub s: T,
    pub a: T,
    pub b: T,
    pub v: T,
    pub m: T,
    pub omega: T,
    /// Coupling magnitude acting on this particle.
    pub c_abs: T,
}

impl<T: Real> AxisParams<T> {
    pub fn s_sq(&self) -> T {
        self.s * self.s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonSolution<T> {
    pub hbar: T,
    pub c_abs: T,
    pub variant: Variant,
    pub layout: Layout,
    pub axes: Vec<AxisParams<T>>,
    pub cdot: T,
    pub c0: T,
}

impl<T: Real> SolitonSolution<T> {
    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn normalization(&self) -> T {
        let two_over_pi = lit::<T>(2.0) / T::PI();
        self.axes
            .iter()
            .map(|ax| (two_over_pi / ax.s_sq()).sqrt().sqrt())
            .fold(T::one(), |acc, x| acc * x)
    }

    /// Axis ranges of each particle.
    pub fn particle_groups(&self) -> Vec<Range<usize>> {
        let mut out: Vec<Range<usize>> = Vec::new();
        for (i, ax) in self.axes.iter().enumerate() {
            match out.last_mut() {
                Some(r) if self.axes[r.start].particle == ax.particle => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
        out
    }

    pub fn a_sum(&self) -> T {
        self.axes.iter().map(|ax| ax.a).sum()
    }

    /// Same solution with every curvature carrying the given sign.
    pub fn with_branch(mut self, branch: SignBranch) -> Self {
        for ax in &mut self.axes {
            ax.a = match branch {
                SignBranch::Positive => ax.a.abs(),
                SignBranch::Negative => -ax.a.abs(),
            };
        }
        self
    }

    pub fn branch(&self) -> SignBranch {
        if self.axes.iter().all(|ax| ax.a >= T::zero()) {
            SignBranch::Positive
        } else {
            SignBranch::Negative
        }
    }

    /// Recomputes the phase rate from the current parameters.
    pub fn refresh_phase_rate(mut self) -> Self {
        self.cdot = phase_rate(&self.axes, self.hbar, self.c_abs, self.variant);
        self
    }
}

/// `ħċ / ħ` for a product of Gaussian factors.
fn phase_rate<T: Real>(axes: &[AxisParams<T>], hbar: T, c_abs: T, variant: Variant) -> T {
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let mut hc = T::zero();
    for ax in axes {
        hc -= hbar * hbar / (ax.m * ax.s_sq()) + ax.m * ax.v * ax.v / two;
    }
    match variant {
        Variant::CrossCoupled => {
            let a: T = axes.iter().map(|ax| ax.a).sum();
            hc += four * c_abs * a * a;
        }
        Variant::WeaklySeparable => {
            let mut start = 0;
            while start < axes.len() {
                let p = axes[start].particle;
                let end = start
                    + axes[start..]
                        .iter()
                        .take_while(|ax| ax.particle == p)
                        .count();
                let a: T = axes[start..end].iter().map(|ax| ax.a).sum();
                hc += four * axes[start].c_abs * a * a;
                start = end;
            }
        }
    }
    hc / hbar
}

/// Non-factorizable two-particle solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntangledPairSolution<T> {
    pub hbar: T,
    pub c_abs: T,
    pub s: T,
    pub a: T,
    pub b_minus: T,
    pub b_plus: T,
    pub v: T,
    pub m: T,
    pub branch: Branch,
    pub cdot: T,
    pub c0: T,
}

impl<T: Real> EntangledPairSolution<T> {
    pub fn normalization(&self) -> T {
        lit::<T>(2.0) / (T::PI().sqrt() * self.s)
    }

    /// `+1` for the upper branch (`x + y − vt`), `−1` for the lower.
    pub fn branch_sign(&self) -> T {
        match self.branch {
            Branch::Upper => T::one(),
            Branch::Lower => -T::one(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Solution<T> {
    Product(SolitonSolution<T>),
    Entangled(EntangledPairSolution<T>),
}

impl<T: Real> From<SolitonSolution<T>> for Solution<T> {
    fn from(s: SolitonSolution<T>) -> Self {
        Solution::Product(s)
    }
}

impl<T: Real> From<EntangledPairSolution<T>> for Solution<T> {
    fn from(s: EntangledPairSolution<T>) -> Self {
        Solution::Entangled(s)
    }
}

/// `ħ² / (8 m |C|)`: total curvature of a free group.
fn total_curvature<T: Real>(m: T, c_abs: T, hbar: T) -> T {
    hbar * hbar / (lit::<T>(8.0) * m * c_abs)
}

/// Free Gaussian group sharing one sum rule: `aᵢ = (wᵢ/W)·A` and
/// `sᵢ² = 8 (W/wᵢ) m |C| / ħ²`.
fn free_group<T: Real>(
    particle_of_axis: &dyn Fn(usize) -> usize,
    m: T,
    velocities: &[T],
    weights: &[T],
    hbar: T,
    c_abs: T,
) -> Vec<AxisParams<T>> {
    let total_w: T = weights.iter().copied().sum();
    let big_a = total_curvature(m, c_abs, hbar);
    velocities
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(i, (&v, &w))| {
            let ratio = total_w / w;
            let s_sq = lit::<T>(8.0) * ratio * m * c_abs / (hbar * hbar);
            AxisParams {
                particle: particle_of_axis(i),
                s: s_sq.sqrt(),
                a: (w / total_w) * big_a,
                b: m / hbar,
                v,
                m,
                omega: T::zero(),
                c_abs,
            }
        })
        .collect()
}

fn check_free_consistency<T: Real>(
    axes: &[AxisParams<T>],
    hbar: T,
    c_abs: T,
) -> Result<(), AnsatzError> {
    let tol = T::consistency_tol();
    for ax in axes {
        let r = (ax.s_sq() * ax.s_sq() * ax.a * ax.a - T::one()).abs();
        if r > tol {
            return Err(AnsatzError::VerificationFailed {
                condition: "s^4 a^2 = 1",
                residual: r.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let m = axes[0].m;
    let inv: T = axes.iter().map(|ax| T::one() / ax.s_sq()).sum();
    let r = rel_diff(inv, total_curvature(m, c_abs, hbar));
    if r > tol {
        return Err(AnsatzError::VerificationFailed {
            condition: "sum of 1/s^2",
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn assemble<T: Real>(
    universe: &ValidatedUniverse<T>,
    layout: Layout,
    axes: Vec<AxisParams<T>>,
) -> SolitonSolution<T> {
    SolitonSolution {
        hbar: universe.hbar(),
        c_abs: universe.c_abs(),
        variant: universe.variant(),
        layout,
        axes,
        cdot: T::zero(),
        c0: T::zero(),
    }
    .refresh_phase_rate()
}

fn require(cond: bool, msg: &str) -> Result<(), AnsatzError> {
    if cond {
        Ok(())
    } else {
        Err(AnsatzError::Precondition(msg.into()))
    }
}

/// One free particle in one dimension: `s² = 8m|C|/ħ²`, `a = 1/s²`,
/// `b = m/ħ`. Only `ħ`, `|C|` and the variant are taken from the universe.
pub fn build_free_soliton<T: Real>(
    m: T,
    v: T,
    universe: &ValidatedUniverse<T>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    require(m > T::zero() && m.is_finite(), "mass must be > 0")?;
    let axes = free_group(
        &|_| 0,
        m,
        &[v],
        &[T::one()],
        universe.hbar(),
        universe.c_abs(),
    );
    check_free_consistency(&axes, universe.hbar(), universe.c_abs())?;
    Ok(assemble(universe, Layout::Particles, axes))
}

/// `n` uncorrelated free one-dimensional particles of one mass. Curvatures
/// are split in proportion to `weights` (uniform by default).
pub fn build_free_n_soliton<T: Real>(
    universe: &ValidatedUniverse<T>,
    weights: Option<&[T]>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    let ps = universe.particles();
    require(ps.iter().all(|p| p.is_free()), "all particles must be free")?;
    require(
        ps.iter().all(|p| p.dimensions() == 1),
        "particles must be one-dimensional",
    )?;
    if universe.variant() == Variant::WeaklySeparable && ps.len() > 1 {
        return build_weak_product(universe);
    }
    let masses: Vec<T> = ps.iter().map(|p| p.mass).collect();
    if let Some(j) = masses.iter().position(|&m| m != masses[0]) {
        return Err(AnsatzError::MassRuleViolation {
            first: 0,
            second: j,
        });
    }
    let uniform = vec![T::one(); ps.len()];
    let weights = weights.unwrap_or(&uniform);
    require(
        weights.len() == ps.len(),
        "one weight per particle is required",
    )?;
    for (i, &w) in weights.iter().enumerate() {
        if !(w.is_finite() && w > T::zero()) {
            return Err(AnsatzError::WeightInadmissible {
                index: i,
                detail: format!("weight {w} must be finite and > 0"),
            });
        }
    }
    let velocities: Vec<T> = ps.iter().map(|p| p.velocity[0]).collect();
    let axes = free_group(
        &|i| i,
        masses[0],
        &velocities,
        weights,
        universe.hbar(),
        universe.c_abs(),
    );
    check_free_consistency(&axes, universe.hbar(), universe.c_abs()).map_err(|e| match e {
        AnsatzError::VerificationFailed {
            condition,
            residual,
        } => AnsatzError::WeightInadmissible {
            index: 0,
            detail: format!("{condition} violated by {residual:e}"),
        },
        other => other,
    })?;
    Ok(assemble(universe, Layout::Particles, axes))
}

/// Non-factorizable pair of equal-mass free particles.
///
/// In `u = x − y`, `w = x + y` the amplitude is a product of Gaussians of
/// width `s` with `s² = 32 m|C|/ħ²` and `|a| = 1/s²`. The linear phase
/// coefficients that solve the equations are `b₋ = m/(2ħ)` and
/// `b₊ = ±m/(2ħ)` for the upper (`w − vt`) and lower (`w + vt`) branch.
pub fn build_entangled_pair<T: Real>(
    m: T,
    v: T,
    branch: Branch,
    universe: &ValidatedUniverse<T>,
) -> Result<EntangledPairSolution<T>, AnsatzError> {
    require(m > T::zero() && m.is_finite(), "mass must be > 0")?;
    require(
        universe.variant() == Variant::CrossCoupled,
        "the entangled pair solves the cross-coupled equations only",
    )?;
    let hbar = universe.hbar();
    let c_abs = universe.c_abs();
    let s_sq = lit::<T>(32.0) * m * c_abs / (hbar * hbar);
    let a = T::one() / s_sq;
    let half = m / (lit::<T>(2.0) * hbar);
    let b_plus = match branch {
        Branch::Upper => half,
        Branch::Lower => -half,
    };
    let hc = -lit::<T>(4.0) * hbar * hbar / (m * s_sq) - m * v * v / lit(2.0)
        + lit::<T>(64.0) * c_abs * a * a;
    Ok(EntangledPairSolution {
        hbar,
        c_abs,
        s: s_sq.sqrt(),
        a,
        b_minus: half,
        b_plus,
        v,
        m,
        branch,
        cdot: hc / hbar,
        c0: T::zero(),
    })
}

fn axes_from_reduction<T: Real>(
    roster: &[ParticleSpec<T>],
    result: &FeasibilityResult<T>,
    c_abs: impl Fn(usize) -> T,
    particle_offset: usize,
) -> Vec<AxisParams<T>> {
    roster
        .iter()
        .zip(&result.params)
        .enumerate()
        .map(|(i, (p, q))| AxisParams {
            particle: particle_offset + i,
            s: q.s_sq.sqrt(),
            a: q.a,
            b: q.b,
            v: p.velocity[0],
            m: p.mass,
            omega: p.omega,
            c_abs: c_abs(i),
        })
        .collect()
}

fn infeasible_to_error<T: Real>(r: FeasibilityResult<T>) -> AnsatzError {
    let cert = r
        .certificate
        .expect("infeasible result carries a certificate");
    match cert.condition {
        Condition::FrequencyBound => AnsatzError::FrequencyBoundViolation {
            detail: cert.detail,
        },
        Condition::MassRule => {
            let (first, second) = cert.pair.unwrap_or((0, 0));
            AnsatzError::MassRuleViolation { first, second }
        }
        _ => AnsatzError::Infeasible(cert),
    }
}

/// One-dimensional particles bound to oscillators `V = Σ ½mᵢωᵢ²(xᵢ − vᵢt)²`,
/// built through the `k`-reduction. For equal masses the result is checked
/// against the closed forms `aⱼ/aᵢ = ωⱼ/ωᵢ`, `sᵢ² = 8m|C|Σω/(ħ²ωᵢ)` and
/// `a₁² = ω₁²[ħ⁴/(64C²m²(Σω)²) − m²/(4ħ²)]`.
pub fn build_oscillator_solution<T: Real>(
    universe: &ValidatedUniverse<T>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    let ps = universe.particles();
    require(
        ps.iter().all(|p| p.omega > T::zero()),
        "all particles must have omega > 0",
    )?;
    require(
        ps.iter().all(|p| p.dimensions() == 1),
        "particles must be one-dimensional",
    )?;
    if universe.variant() == Variant::WeaklySeparable && ps.len() > 1 {
        return build_weak_product(universe);
    }
    let hbar = universe.hbar();
    let c_abs = universe.c_abs();
    let r = solve_k_with(ps, hbar, c_abs)?;
    if !r.is_feasible() {
        return Err(infeasible_to_error(r));
    }
    let axes = axes_from_reduction(ps, &r, |_| c_abs, 0);
    if ps.iter().all(|p| p.mass == ps[0].mass) {
        check_equal_mass_closed_forms(&axes, hbar, c_abs)?;
    }
    Ok(assemble(universe, Layout::Particles, axes))
}

fn check_equal_mass_closed_forms<T: Real>(
    axes: &[AxisParams<T>],
    hbar: T,
    c_abs: T,
) -> Result<(), AnsatzError> {
    let tol = T::back_substitution_tol();
    let m = axes[0].m;
    let sum_w: T = axes.iter().map(|ax| ax.omega).sum();
    let fail = |condition, r: T| AnsatzError::VerificationFailed {
        condition,
        residual: r.to_f64().unwrap_or(f64::NAN),
    };
    let a0 = axes[0].a;
    let w0 = axes[0].omega;
    for ax in axes {
        let r = rel_diff(ax.a / a0, ax.omega / w0);
        if r > tol {
            return Err(fail("a_j/a_i = omega_j/omega_i", r));
        }
        let s_sq = lit::<T>(8.0) * m * c_abs * sum_w / (hbar * hbar * ax.omega);
        let r = rel_diff(ax.s_sq(), s_sq);
        if r > tol {
            return Err(fail("s_i^2 = 8m|C| sum(omega)/(hbar^2 omega_i)", r));
        }
    }
    let h2 = hbar * hbar;
    let lead = w0 * w0 * h2 * h2 / (lit::<T>(64.0) * c_abs * c_abs * m * m * sum_w * sum_w);
    let a1_sq = lead - w0 * w0 * m * m / (lit::<T>(4.0) * h2);
    // Measured against the leading term: near the frequency bound the
    // bracket cancels and a₁² itself carries few significant digits.
    let r = (a0 * a0 - a1_sq).abs() / lead;
    if r > tol {
        return Err(fail("closed-form a_1^2", r));
    }
    Ok(())
}

/// `n` identical oscillators of frequency `ω` at rest, all with the same
/// curvature `a² = ħ⁴/(64m²C²n²) − m²ω²/(4ħ²)` and `s² = 8nm|C|/ħ²`.
pub fn build_uniform_oscillators<T: Real>(
    n: usize,
    m: T,
    omega: T,
    universe: &ValidatedUniverse<T>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    require(n >= 1, "n must be >= 1")?;
    require(m > T::zero() && m.is_finite(), "mass must be > 0")?;
    require(
        omega >= T::zero() && omega.is_finite(),
        "omega must be >= 0",
    )?;
    let hbar = universe.hbar();
    let c_abs = universe.c_abs();
    let bound = crate::feasibility::frequency_bound(n, m, universe);
    if omega >= bound {
        return Err(AnsatzError::FrequencyBoundViolation {
            detail: format!("omega = {omega} >= hbar^3/(4|C|n m^2) = {bound}"),
        });
    }
    let h2 = hbar * hbar;
    let nn = count::<T>(n);
    let a_sq = h2 * h2 / (lit::<T>(64.0) * m * m * c_abs * c_abs * nn * nn)
        - m * m * omega * omega / (lit::<T>(4.0) * h2);
    let a = a_sq.sqrt();
    let s_sq = lit::<T>(8.0) * nn * m * c_abs / h2;
    let axes: Vec<AxisParams<T>> = (0..n)
        .map(|i| AxisParams {
            particle: i,
            s: s_sq.sqrt(),
            a,
            b: m / hbar,
            v: T::zero(),
            m,
            omega,
            c_abs,
        })
        .collect();
    let two = lit::<T>(2.0);
    let widths = s_sq * s_sq * (two * a_sq * h2 + m * m * omega * omega / two) / (two * h2);
    let r = (widths - T::one()).abs();
    if r > T::back_substitution_tol() {
        return Err(AnsatzError::VerificationFailed {
            condition: "width condition",
            residual: r.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut sol = SolitonSolution {
        hbar,
        c_abs,
        variant: Variant::CrossCoupled,
        layout: Layout::Particles,
        axes,
        cdot: T::zero(),
        c0: T::zero(),
    };
    sol = sol.refresh_phase_rate();
    Ok(sol)
}

/// One free particle in `d = v.len()` dimensions. Without `inv_width_sq`
/// the packet is spherical with `s² = 8d|C|m/ħ²`; otherwise the given
/// `1/sᵢ²` must sum to `ħ²/(8m|C|)`.
pub fn build_d_dim_soliton<T: Real>(
    m: T,
    v: &[T],
    universe: &ValidatedUniverse<T>,
    inv_width_sq: Option<&[T]>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    require(!v.is_empty(), "dimension must be >= 1")?;
    require(m > T::zero() && m.is_finite(), "mass must be > 0")?;
    let hbar = universe.hbar();
    let c_abs = universe.particle_coupling(0);
    let uniform = vec![T::one(); v.len()];
    let weights = match inv_width_sq {
        None => uniform,
        Some(w) => {
            require(
                w.len() == v.len(),
                "one inverse width per dimension is required",
            )?;
            let sum: T = w.iter().copied().sum();
            let expected = total_curvature(m, c_abs, hbar);
            if w.iter().any(|x| !(x.is_finite() && *x > T::zero()))
                || rel_diff(sum, expected) > T::consistency_tol()
            {
                return Err(AnsatzError::ShapeConstraintViolation {
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                    expected: expected.to_f64().unwrap_or(f64::NAN),
                });
            }
            w.to_vec()
        }
    };
    let axes = free_group(&|_| 0, m, v, &weights, hbar, c_abs);
    check_free_consistency(&axes, hbar, c_abs)?;
    let layout = if v.len() == 1 {
        Layout::Particles
    } else {
        Layout::Dimensions
    };
    Ok(assemble(universe, layout, axes))
}

/// Weakly separable product: every particle is solved on its own with its
/// own coupling.
fn build_weak_product<T: Real>(
    universe: &ValidatedUniverse<T>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    let hbar = universe.hbar();
    let mut axes = Vec::new();
    for (i, p) in universe.particles().iter().enumerate() {
        let c = universe.particle_coupling(i);
        if p.is_free() {
            axes.extend(free_group(
                &|_| i,
                p.mass,
                &p.velocity,
                &vec![T::one(); p.dimensions()],
                hbar,
                c,
            ));
        } else {
            let one = std::slice::from_ref(p);
            let r = solve_k_with(one, hbar, c)?;
            if !r.is_feasible() {
                let mut e = infeasible_to_error(r);
                if let AnsatzError::FrequencyBoundViolation { detail } = &mut e {
                    *detail = format!("particle {i}: {detail}");
                }
                return Err(e);
            }
            axes.extend(axes_from_reduction(one, &r, |_| c, i));
        }
    }
    Ok(assemble(universe, Layout::Particles, axes))
}

/// Builds whatever product soliton the roster describes: free `n`-solitons,
/// oscillators, mixed rosters through the `k`-reduction, a `d`-dimensional
/// particle, or per-particle solutions for the weak variant.
pub fn build_product_soliton<T: Real>(
    universe: &ValidatedUniverse<T>,
) -> Result<SolitonSolution<T>, AnsatzError> {
    let ps = universe.particles();
    let cfg = universe.config();
    if ps.len() == 1 && (ps[0].dimensions() > 1 || cfg.inv_width_sq.is_some()) {
        require(ps[0].is_free(), "multi-dimensional particles must be free")?;
        return build_d_dim_soliton(
            ps[0].mass,
            &ps[0].velocity,
            universe,
            cfg.inv_width_sq.as_deref(),
        );
    }
    if universe.variant() == Variant::WeaklySeparable {
        return build_weak_product(universe);
    }
    if ps.iter().all(|p| p.is_free()) {
        return build_free_n_soliton(universe, None);
    }
    if ps.iter().all(|p| !p.is_free()) {
        return build_oscillator_solution(universe);
    }
    let r = solve_k_with(ps, universe.hbar(), universe.c_abs())?;
    if !r.is_feasible() {
        return Err(infeasible_to_error(r));
    }
    let c = universe.c_abs();
    Ok(assemble(
        universe,
        Layout::Particles,
        axes_from_reduction(ps, &r, |_| c, 0),
    ))
}

/// Builds the solution a configuration asks for, including the entangled
/// pair when `entangled` is set.
pub fn build_solution<T: Real>(
    universe: &ValidatedUniverse<T>,
) -> Result<Solution<T>, AnsatzError> {
    match universe.config().entangled {
        Some(branch) => {
            let p = &universe.particles()[0];
            build_entangled_pair(p.mass, p.velocity[0], branch, universe).map(Solution::Entangled)
        }
        None => build_product_soliton(universe).map(Solution::Product),
    }
}

/// Width, phase length and internal energy of one of `n` identical free
/// particles: `s² = 8nm|C|/ħ²`, `L = √2·s`, `E_int = ħ⁴/(16m²|C|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachianPoint<T> {
    pub n: usize,
    pub s_sq: T,
    pub phase_length: T,
    pub internal_energy: T,
}

pub fn machian_scaling<T: Real>(n: usize, m: T, hbar: T, c_abs: T) -> MachianPoint<T> {
    let s_sq = lit::<T>(8.0) * count::<T>(n) * m * c_abs / (hbar * hbar);
    MachianPoint {
        n,
        s_sq,
        phase_length: lit::<T>(2.0).sqrt() * s_sq.sqrt(),
        internal_energy: hbar.powi(4) / (lit::<T>(16.0) * m * m * c_abs),
    }
}

/// Closed-form energy `E = −ħ⟨∂S/∂t⟩ = −ħċ`, split into the translational
/// kinetic part `Σ mv²/2`, the mean trap energy `Σ mω²s²/8`, and the
/// remaining internal part.
pub fn closed_form_energy<T: Real>(sol: &Solution<T>) -> EnergyBreakdown<T> {
    let two = lit::<T>(2.0);
    match sol {
        Solution::Product(s) => {
            let kinetic: T = s.axes.iter().map(|ax| ax.m * ax.v * ax.v / two).sum();
            let oscillator: T = s
                .axes
                .iter()
                .map(|ax| ax.m * ax.omega * ax.omega * ax.s_sq() / lit(8.0))
                .sum();
            let total = -s.hbar * s.cdot;
            EnergyBreakdown {
                kinetic,
                internal: total - kinetic - oscillator,
                oscillator,
                total,
            }
        }
        Solution::Entangled(p) => {
            let kinetic = p.m * p.v * p.v / two;
            let total = -p.hbar * p.cdot;
            EnergyBreakdown {
                kinetic,
                internal: total - kinetic,
                oscillator: T::zero(),
                total,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, UniverseConfig};
    use approx::assert_relative_eq;

    fn universe(c_abs: f64, particles: Vec<ParticleSpec<f64>>) -> ValidatedUniverse<f64> {
        validate(UniverseConfig::new(1.0, c_abs, particles)).unwrap()
    }

    fn single() -> ValidatedUniverse<f64> {
        universe(0.125, vec![ParticleSpec::free(1.0, 0.0)])
    }

    #[test]
    fn free_soliton_parameters() {
        let s = build_free_soliton(1.0, 0.0, &single()).unwrap();
        let ax = s.axes[0];
        assert_eq!((ax.s, ax.a, ax.b), (1.0, 1.0, 1.0));
        assert_eq!(s.cdot, -0.5);
        let e = closed_form_energy(&s.into());
        assert_eq!(e.total, 0.5);
        assert_eq!(e.internal, 0.5);
    }

    #[test]
    fn moving_free_soliton_energy() {
        let s = build_free_soliton(1.0, 2.0, &single()).unwrap();
        let e = closed_form_energy(&s.into());
        assert_eq!(e.kinetic, 2.0);
        assert_eq!(e.total, 2.5);
    }

    #[test]
    fn four_soliton_uniform() {
        let u = universe(0.125, vec![ParticleSpec::free(1.0, 0.0); 4]);
        let s = build_free_n_soliton(&u, None).unwrap();
        for ax in &s.axes {
            assert_eq!(ax.s_sq(), 4.0);
            assert_eq!(ax.a, 0.25);
        }
        let inv: f64 = s.axes.iter().map(|ax| 1.0 / ax.s_sq()).sum();
        assert_eq!(inv, 1.0);
        assert_eq!(closed_form_energy(&s.into()).total, 0.5);
    }

    #[test]
    fn unequal_masses_violate_mass_rule() {
        let u = universe(
            0.125,
            vec![ParticleSpec::free(1.0, 0.0), ParticleSpec::free(2.0, 0.0)],
        );
        assert!(matches!(
            build_free_n_soliton(&u, None),
            Err(AnsatzError::MassRuleViolation {
                first: 0,
                second: 1
            })
        ));
    }

    #[test]
    fn n_soliton_of_one_equals_free_soliton() {
        let u = universe(0.3, vec![ParticleSpec::free(1.7, 0.4)]);
        let a = build_free_n_soliton(&u, None).unwrap();
        let b = build_free_soliton(1.7, 0.4, &u).unwrap();
        let c = build_d_dim_soliton(1.7, &[0.4], &u, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn nonuniform_weights_are_admissible() {
        let u = universe(0.125, vec![ParticleSpec::free(1.0, 0.0); 3]);
        let s = build_free_n_soliton(&u, Some(&[1.0, 2.0, 5.0])).unwrap();
        assert_relative_eq!(s.a_sum(), 1.0, max_relative = 1e-15);
        for ax in &s.axes {
            assert_relative_eq!(ax.s_sq() * ax.a, 1.0, max_relative = 1e-14);
        }
        assert_relative_eq!(
            closed_form_energy(&s.into()).internal,
            0.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn nonpositive_weight_rejected() {
        let u = universe(0.125, vec![ParticleSpec::free(1.0, 0.0); 2]);
        assert!(matches!(
            build_free_n_soliton(&u, Some(&[1.0, 0.0])),
            Err(AnsatzError::WeightInadmissible { index: 1, .. })
        ));
    }

    #[test]
    fn entangled_pair_parameters() {
        let u = universe(0.125, vec![ParticleSpec::free(1.0, 0.0); 2]);
        let p = build_entangled_pair(1.0, 1.0, Branch::Upper, &u).unwrap();
        assert_eq!(p.s * p.s, 4.0);
        assert_eq!(p.a, 0.25);
        assert_eq!(p.b_minus, 0.5);
        assert_eq!(p.b_plus, 0.5);
        let e = closed_form_energy(&p.into());
        assert_relative_eq!(e.total, 1.0, max_relative = 1e-15);
        let lower = build_entangled_pair(1.0, 0.0, Branch::Lower, &u).unwrap();
        assert_eq!(lower.b_plus, -0.5);
    }

    #[test]
    fn oscillator_single() {
        let u = universe(0.125, vec![ParticleSpec::oscillator(1.0, 0.0, 0.5)]);
        let s = build_oscillator_solution(&u).unwrap();
        assert_relative_eq!(s.axes[0].s_sq(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.axes[0].a.powi(2), 0.9375, max_relative = 1e-12);
    }

    #[test]
    fn oscillator_pair() {
        let u = universe(0.125, vec![ParticleSpec::oscillator(1.0, 0.0, 0.5); 2]);
        let s = build_oscillator_solution(&u).unwrap();
        for ax in &s.axes {
            assert_relative_eq!(ax.s_sq(), 2.0, max_relative = 1e-12);
            assert_relative_eq!(ax.a.powi(2), 3.0 / 16.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn oscillator_frequency_bound() {
        let u = universe(0.25, vec![ParticleSpec::oscillator(1.0, 0.0, 0.6); 2]);
        assert!(matches!(
            build_oscillator_solution(&u),
            Err(AnsatzError::FrequencyBoundViolation { .. })
        ));
    }

    #[test]
    fn uniform_oscillators_match_reduction() {
        let u = universe(0.125, vec![ParticleSpec::oscillator(1.0, 0.0, 0.5); 2]);
        let a = build_uniform_oscillators(2, 1.0, 0.5, &u).unwrap();
        let b = build_oscillator_solution(&u).unwrap();
        assert_relative_eq!(a.axes[0].a.powi(2), 3.0 / 16.0, max_relative = 1e-14);
        for (x, y) in a.axes.iter().zip(&b.axes) {
            assert_relative_eq!(x.a, y.a, max_relative = 1e-12);
            assert_relative_eq!(x.s, y.s, max_relative = 1e-12);
        }
        assert_relative_eq!(a.cdot, b.cdot, max_relative = 1e-12);
    }

    #[test]
    fn uniform_oscillators_true_energy() {
        // mean trap energy is m ω² s² / 8 per particle
        let u = single();
        let e = closed_form_energy(&build_uniform_oscillators(2, 1.0, 0.5, &u).unwrap().into());
        assert_relative_eq!(e.oscillator, 0.125, max_relative = 1e-14);
        assert_relative_eq!(e.internal, 0.5, max_relative = 1e-14);
        assert_relative_eq!(e.total, 0.625, max_relative = 1e-14);
    }

    #[test]
    fn uniform_oscillators_zero_frequency_limit() {
        let s = build_uniform_oscillators(1, 1.0, 0.0, &single()).unwrap();
        assert_eq!(s.axes[0].a, 1.0);
    }

    #[test]
    fn uniform_oscillators_bound() {
        assert!(build_uniform_oscillators(2, 1.0, 1.0, &single()).is_err());
        assert!(build_uniform_oscillators(2, 1.0, 0.999, &single()).is_ok());
    }

    #[test]
    fn three_dimensional_soliton() {
        let s = build_d_dim_soliton(1.0, &[0.0, 0.0, 0.0], &single(), None).unwrap();
        for ax in &s.axes {
            assert_relative_eq!(ax.s_sq(), 3.0, max_relative = 1e-15);
        }
        assert_eq!(s.layout, Layout::Dimensions);
        assert_relative_eq!(
            closed_form_energy(&s.into()).total,
            0.5,
            max_relative = 1e-14
        );
        let sheet =
            build_d_dim_soliton(1.0, &[0.0; 3], &single(), Some(&[0.45, 0.45, 0.1])).unwrap();
        assert_relative_eq!(
            closed_form_energy(&sheet.into()).total,
            0.5,
            max_relative = 1e-14
        );
        assert!(matches!(
            build_d_dim_soliton(1.0, &[0.0; 3], &single(), Some(&[0.5, 0.5, 0.5])),
            Err(AnsatzError::ShapeConstraintViolation { .. })
        ));
    }

    #[test]
    fn negative_branch_keeps_phase_rate() {
        let u = universe(0.125, vec![ParticleSpec::free(1.0, 0.3); 3]);
        let s = build_free_n_soliton(&u, None).unwrap();
        let neg = s
            .clone()
            .with_branch(SignBranch::Negative)
            .refresh_phase_rate();
        assert_eq!(neg.branch(), SignBranch::Negative);
        assert_relative_eq!(neg.cdot, s.cdot, max_relative = 1e-15);
    }

    #[test]
    fn weak_variant_uses_particle_couplings() {
        let cfg = UniverseConfig::new(
            1.0,
            0.125,
            vec![
                ParticleSpec::free(1.0, 0.0).with_coupling(0.125),
                ParticleSpec::free(2.0, 0.0).with_coupling(0.5),
            ],
        )
        .with_variant(Variant::WeaklySeparable);
        let s = build_product_soliton(&validate(cfg).unwrap()).unwrap();
        assert_relative_eq!(s.axes[0].s_sq(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(s.axes[1].s_sq(), 8.0, max_relative = 1e-14);
        let e = closed_form_energy(&s.into());
        assert_relative_eq!(e.internal, 0.5 + 1.0 / 32.0, max_relative = 1e-14);
    }

    #[test]
    fn mixed_roster_builds_candidate() {
        let u = universe(
            0.125,
            vec![
                ParticleSpec::free(2.0, 0.0),
                ParticleSpec::oscillator(1.0, 0.0, 0.5),
            ],
        );
        let s = build_product_soliton(&u).unwrap();
        assert_relative_eq!(s.axes[1].a, 0.144_337_567_297_406_4, max_relative = 1e-12);
        assert_relative_eq!(
            s.axes[0].a,
            0.5 - 0.144_337_567_297_406_4,
            max_relative = 1e-12
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn free_sum_rules_hold(
                n in 1usize..33,
                m in 0.1f64..10.0,
                c in 0.01f64..2.0,
                hbar in 0.5f64..2.0,
            ) {
                let cfg = UniverseConfig::new(hbar, c, vec![ParticleSpec::free(m, 0.0); n]);
                let u = validate(cfg).unwrap();
                let s = build_free_n_soliton(&u, None).unwrap();
                let expected = hbar * hbar / (8.0 * m * c);
                prop_assert!(rel_diff(s.a_sum(), expected) <= 1e-12);
                let inv: f64 = s.axes.iter().map(|ax| 1.0 / ax.s_sq()).sum();
                prop_assert!(rel_diff(inv, expected) <= 1e-12);
                let e = closed_form_energy(&s.into());
                prop_assert!(rel_diff(e.internal, hbar.powi(4) / (16.0 * m * m * c)) <= 1e-12);
            }

            #[test]
            fn oscillator_energy_below_bound(
                n in 1usize..6,
                frac in 0.01f64..0.99,
                c in 0.05f64..1.0,
            ) {
                let omega = frac / (4.0 * c * n as f64);
                let u = validate(UniverseConfig::new(1.0, c, vec![ParticleSpec::oscillator(1.0, 0.0, omega); n])).unwrap();
                let s = build_oscillator_solution(&u).unwrap();
                prop_assert!(s.axes.iter().all(|ax| ax.a > 0.0));
                let e = closed_form_energy(&s.into());
                prop_assert!(e.total - e.kinetic < 5.0 / (16.0 * c));
            }

            #[test]
            fn anisotropic_shapes_share_energy(
                w1 in 0.05f64..0.9,
                split in 0.05f64..0.95,
                v in prop::collection::vec(-2.0f64..2.0, 3),
            ) {
                let u = validate(UniverseConfig::new(1.0, 0.125, vec![ParticleSpec::free(1.0, 0.0)])).unwrap();
                let rest = 1.0 - w1;
                let w = [w1, rest * split, rest * (1.0 - split)];
                let a = build_d_dim_soliton(1.0, &v, &u, Some(&w)).unwrap();
                let b = build_d_dim_soliton(1.0, &v, &u, None).unwrap();
                let ea = closed_form_energy(&a.into()).total;
                let eb = closed_form_energy(&b.into()).total;
                prop_assert!(rel_diff(ea, eb) <= 1e-12);
            }
        }
    }
}
