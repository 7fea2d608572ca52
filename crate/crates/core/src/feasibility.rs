//! Feasibility of uncorrelated product solitons for a particle roster.
//!
//! Every product solution shares one constant `k = sᵢ²aᵢ/mᵢ`. Substituting
//! the per-particle width condition
//!
//! ```text
//! sᵢ⁴ (2aᵢ²ħ² + ½mᵢ²ωᵢ²) = 2ħ²
//! ```
//!
//! gives `aᵢ = k mᵢ² ωᵢ / (2ħ √(1 − k²mᵢ²))`, and the continuity sum rule
//! `sᵢ² aᵢ ħ² = 8 mᵢ |C| Σaⱼ` collapses to one scalar equation
//!
//! ```text
//! g(k) = (4|C|/ħ³) Σ mⱼ² ωⱼ / √(1 − k²mⱼ²) − 1 = 0,   0 < k < 1/max mⱼ.
//! ```
//!
//! Free particles (`ω = 0`) instead pin `k m = 1`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{build_product_soliton, AnsatzError};
use crate::fieldlab::{pde_residuals, FieldError, Grid};
use crate::model::{ParticleSpec, ValidatedUniverse, Variant};
use crate::scalar::{count, lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Feasible,
    Infeasible,
}

/// Consistency condition named by an infeasibility certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// Free particles of different masses.
    MassRule,
    /// A free particle pins `k = 1/m_free`, which leaves an oscillator with
    /// `k m ≥ 1`.
    MixingRule,
    /// The oscillator frequencies are too large for any root of `g`.
    FrequencyBound,
    /// The phase curvatures would need mixed signs or a mix of zero and
    /// non-zero values.
    SignConsistency,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub condition: Condition,
    /// The two roster indices involved, when the condition is pairwise.
    pub pair: Option<(usize, usize)>,
    pub detail: String,
}

/// Solved parameters of one particle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams<T> {
    pub s_sq: T,
    pub a: T,
    pub b: T,
}

/// Largest normalized violation of each consistency condition after
/// substituting the solver output back in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackSubstitution<T> {
    /// `sᵢ⁴ (2aᵢ²ħ² + ½mᵢ²ωᵢ²) / 2ħ² − 1`
    pub widths: T,
    /// `sᵢ² aᵢ ħ² / (8 mᵢ |C| Σaⱼ) − 1`
    pub sum_rule: T,
    /// `sᵢ² aᵢ mⱼ / (sⱼ² aⱼ mᵢ) − 1`
    pub common_ratio: T,
}

impl<T: Real> BackSubstitution<T> {
    pub fn max(&self) -> T {
        self.widths.max(self.sum_rule).max(self.common_ratio)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityResult<T> {
    pub status: Status,
    pub k: Option<T>,
    pub certificate: Option<Certificate>,
    /// Search interval for `k`.
    pub bracket: Option<(T, T)>,
    pub iterations: usize,
    /// `k`-brackets visited by the bisection, in order.
    pub trace: Vec<(T, T)>,
    pub params: Vec<ParticleParams<T>>,
    pub residuals: Option<BackSubstitution<T>>,
}

impl<T: Real> FeasibilityResult<T> {
    fn infeasible(condition: Condition, pair: Option<(usize, usize)>, detail: String) -> Self {
        Self {
            status: Status::Infeasible,
            k: None,
            certificate: Some(Certificate {
                condition,
                pair,
                detail,
            }),
            bracket: None,
            iterations: 0,
            trace: Vec::new(),
            params: Vec::new(),
            residuals: None,
        }
    }

    fn feasible(k: Option<T>) -> Self {
        Self {
            status: Status::Feasible,
            k,
            certificate: None,
            bracket: None,
            iterations: 0,
            trace: Vec::new(),
            params: Vec::new(),
            residuals: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }

    pub fn condition(&self) -> Option<Condition> {
        self.certificate.as_ref().map(|c| c.condition)
    }
}

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("back-substitution left the {condition} condition violated by {residual:e}")]
    VerificationFailed {
        condition: &'static str,
        residual: f64,
    },
    #[error("roster is not mixed: need at least one free particle and one oscillator")]
    NotMixedRoster,
    #[error("roster particles must be one-dimensional")]
    NotOneDimensional,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Ansatz(#[from] Box<AnsatzError>),
}

/// `ħ³ / (4|C| n m²)`: strict upper bound on a common oscillator frequency.
pub fn frequency_bound<T: Real>(n: usize, m: T, universe: &ValidatedUniverse<T>) -> T {
    let h = universe.hbar();
    h * h * h / (lit::<T>(4.0) * universe.c_abs() * count::<T>(n) * m * m)
}

/// Free particles must share one mass exactly. Masses are compared bitwise.
pub fn check_mass_rule<T: Real>(masses: &[T]) -> FeasibilityResult<T> {
    let Some(&m0) = masses.first() else {
        return FeasibilityResult::infeasible(Condition::MassRule, None, "empty roster".into());
    };
    match masses.iter().position(|&m| m != m0) {
        Some(j) => FeasibilityResult::infeasible(
            Condition::MassRule,
            Some((0, j)),
            format!("free masses differ: m[0] = {m0}, m[{j}] = {}", masses[j]),
        ),
        None => FeasibilityResult::feasible(Some(T::one() / m0)),
    }
}

/// Phase curvatures must be all zero or all non-zero with one sign.
pub fn check_sign_consistency<T: Real>(a: &[T]) -> FeasibilityResult<T> {
    let zero = a.iter().position(|x| *x == T::zero());
    let nonzero = a.iter().position(|x| *x != T::zero());
    if let (Some(i), Some(j)) = (zero, nonzero) {
        return FeasibilityResult::infeasible(
            Condition::SignConsistency,
            Some((i.min(j), i.max(j))),
            format!("a[{i}] = 0 while a[{j}] = {}", a[j]),
        );
    }
    let pos = a.iter().position(|x| *x > T::zero());
    let neg = a.iter().position(|x| *x < T::zero());
    if let (Some(i), Some(j)) = (pos, neg) {
        return FeasibilityResult::infeasible(
            Condition::SignConsistency,
            Some((i.min(j), i.max(j))),
            format!("a[{i}] and a[{j}] have opposite signs"),
        );
    }
    FeasibilityResult::feasible(None)
}

fn require_one_dimensional<T: Real>(roster: &[ParticleSpec<T>]) -> Result<(), FeasibilityError> {
    if roster.iter().any(|p| p.dimensions() != 1) {
        return Err(FeasibilityError::NotOneDimensional);
    }
    Ok(())
}

/// Solves the `k`-reduction for a roster under the universe's `ħ` and `|C|`.
pub fn solve_k<T: Real>(
    roster: &[ParticleSpec<T>],
    universe: &ValidatedUniverse<T>,
) -> Result<FeasibilityResult<T>, FeasibilityError> {
    solve_k_with(roster, universe.hbar(), universe.c_abs())
}

pub(crate) fn solve_k_with<T: Real>(
    roster: &[ParticleSpec<T>],
    hbar: T,
    c_abs: T,
) -> Result<FeasibilityResult<T>, FeasibilityError> {
    require_one_dimensional(roster)?;
    let free: Vec<usize> = (0..roster.len()).filter(|&i| roster[i].is_free()).collect();
    let osc: Vec<usize> = (0..roster.len())
        .filter(|&i| !roster[i].is_free())
        .collect();
    let big_a_of = |k: T| k * hbar * hbar / (lit::<T>(8.0) * c_abs);

    let mut result = if osc.is_empty() {
        let masses: Vec<T> = roster.iter().map(|p| p.mass).collect();
        let mut r = check_mass_rule(&masses);
        if !r.is_feasible() {
            return Ok(r);
        }
        let k = T::one() / masses[0];
        let share = big_a_of(k) / count::<T>(roster.len());
        r.params = roster
            .iter()
            .map(|p| ParticleParams {
                s_sq: k * p.mass / share,
                a: share,
                b: p.mass / hbar,
            })
            .collect();
        r.bracket = Some((k, k));
        r
    } else if !free.is_empty() {
        let free_masses: Vec<T> = free.iter().map(|&i| roster[i].mass).collect();
        let mass_check = check_mass_rule(&free_masses);
        if let Some(cert) = mass_check.certificate {
            let (i, j) = cert.pair.unwrap_or((0, 0));
            return Ok(FeasibilityResult::infeasible(
                Condition::MassRule,
                Some((free[i], free[j])),
                cert.detail,
            ));
        }
        let k = T::one() / free_masses[0];
        let mut a = vec![T::zero(); roster.len()];
        let mut a_osc = T::zero();
        for &j in &osc {
            let p = &roster[j];
            let km = k * p.mass;
            if km >= T::one() {
                return Ok(FeasibilityResult::infeasible(
                    Condition::MixingRule,
                    Some((free[0], j)),
                    format!(
                        "k = 1/m_free = {k} gives k*m = {km} >= 1 for oscillator {j}; \
                         its curvature is not real"
                    ),
                ));
            }
            let c = ((T::one() - km) * (T::one() + km)).sqrt();
            a[j] = k * p.mass * p.mass * p.omega / (lit::<T>(2.0) * hbar * c);
            a_osc += a[j];
        }
        let a_free = (big_a_of(k) - a_osc) / count::<T>(free.len());
        for &i in &free {
            a[i] = a_free.max(T::zero());
        }
        if a_free <= T::zero() {
            let mut r = check_sign_consistency(&a);
            if let Some(c) = r.certificate.as_mut() {
                c.detail = format!(
                    "oscillator curvatures sum to {a_osc}, exceeding the total {}; \
                     free particles would need a <= 0 ({})",
                    big_a_of(k),
                    c.detail
                );
            }
            return Ok(r);
        }
        let mut r = FeasibilityResult::feasible(Some(k));
        r.bracket = Some((k, k));
        r.params = roster
            .iter()
            .zip(&a)
            .map(|(p, &ai)| ParticleParams {
                s_sq: k * p.mass / ai,
                a: ai,
                b: p.mass / hbar,
            })
            .collect();
        r
    } else {
        solve_oscillators(roster, hbar, c_abs)
    };

    if result.is_feasible() {
        let res = back_substitute(roster, &result.params, hbar, c_abs);
        let tol = T::back_substitution_tol();
        for (name, r) in [
            ("width", res.widths),
            ("sum-rule", res.sum_rule),
            ("common-ratio", res.common_ratio),
        ] {
            if r.is_nan() || r > tol {
                return Err(FeasibilityError::VerificationFailed {
                    condition: name,
                    residual: r.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        result.residuals = Some(res);
    }
    Ok(result)
}

/// `g` as a function of the angle `θ` with `k = sin θ / m_max`. The
/// cosines are evaluated without forming `1 − k²m²` directly, which keeps
/// full precision near the singular end of the bracket.
struct Reduced<T> {
    m_max: T,
    scale: T,
    terms: Vec<(T, T)>,
}

impl<T: Real> Reduced<T> {
    fn new(roster: &[ParticleSpec<T>], hbar: T, c_abs: T) -> Self {
        let m_max = roster.iter().map(|p| p.mass).fold(T::zero(), T::max);
        Self {
            m_max,
            scale: lit::<T>(4.0) * c_abs / (hbar * hbar * hbar),
            terms: roster.iter().map(|p| (p.mass, p.omega)).collect(),
        }
    }

    fn cosine(&self, m: T, theta: T) -> T {
        let r = m / self.m_max;
        let (s, c) = theta.sin_cos();
        (c * c + (T::one() - r) * (T::one() + r) * s * s).sqrt()
    }

    fn g(&self, theta: T) -> T {
        self.scale
            * self
                .terms
                .iter()
                .map(|&(m, w)| m * m * w / self.cosine(m, theta))
                .sum::<T>()
            - T::one()
    }

    fn k(&self, theta: T) -> T {
        theta.sin() / self.m_max
    }
}

/// `g` evaluated at `k` for a roster of oscillators. Exposed for
/// diagnostics and monotonicity checks.
pub fn reduced_equation<T: Real>(roster: &[ParticleSpec<T>], hbar: T, c_abs: T, k: T) -> T {
    let red = Reduced::new(roster, hbar, c_abs);
    let x = (k * red.m_max).min(T::one());
    red.g(x.asin())
}

fn solve_oscillators<T: Real>(
    roster: &[ParticleSpec<T>],
    hbar: T,
    c_abs: T,
) -> FeasibilityResult<T> {
    let red = Reduced::new(roster, hbar, c_abs);
    let g0 = red.g(T::zero());
    if g0 >= T::zero() {
        let lhs = red.scale * roster.iter().map(|p| p.mass * p.mass * p.omega).sum::<T>();
        let mut r = FeasibilityResult::infeasible(
            Condition::FrequencyBound,
            None,
            format!("(4|C|/hbar^3) * sum(m^2 omega) = {lhs} >= 1; g has no root"),
        );
        r.bracket = Some((T::zero(), T::one() / red.m_max));
        return r;
    }
    let mut lo = T::zero();
    let mut hi = T::FRAC_PI_2();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let rel = lit::<T>(1e-14).max(T::epsilon());
    while iterations < 200 {
        trace.push((red.k(lo), red.k(hi)));
        let mid = (lo + hi) / lit::<T>(2.0);
        if mid <= lo || mid >= hi || hi - lo <= rel * hi {
            break;
        }
        iterations += 1;
        if red.g(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller |g|
    let theta = if red.g(lo).abs() <= red.g(hi).abs() {
        lo
    } else {
        hi
    };
    let k = red.k(theta);
    let params = roster
        .iter()
        .map(|p| {
            let c = red.cosine(p.mass, theta);
            let a = k * p.mass * p.mass * p.omega / (lit::<T>(2.0) * hbar * c);
            ParticleParams {
                s_sq: lit::<T>(2.0) * hbar * c / (p.mass * p.omega),
                a,
                b: p.mass / hbar,
            }
        })
        .collect();
    FeasibilityResult {
        status: Status::Feasible,
        k: Some(k),
        certificate: None,
        bracket: Some((T::zero(), T::one() / red.m_max)),
        iterations,
        trace,
        params,
        residuals: None,
    }
}

fn back_substitute<T: Real>(
    roster: &[ParticleSpec<T>],
    params: &[ParticleParams<T>],
    hbar: T,
    c_abs: T,
) -> BackSubstitution<T> {
    let two = lit::<T>(2.0);
    let h2 = hbar * hbar;
    let sum_a: T = params.iter().map(|p| p.a).sum();
    let mut out = BackSubstitution {
        widths: T::zero(),
        sum_rule: T::zero(),
        common_ratio: T::zero(),
    };
    let ratio0 = params[0].s_sq * params[0].a / roster[0].mass;
    for (p, q) in roster.iter().zip(params) {
        let s4 = q.s_sq * q.s_sq;
        let widths =
            s4 * (two * q.a * q.a * h2 + p.mass * p.mass * p.omega * p.omega / two) / (two * h2);
        let sum_rule = q.s_sq * q.a * h2 / (lit::<T>(8.0) * p.mass * c_abs * sum_a);
        let ratio = q.s_sq * q.a / p.mass / ratio0;
        out.widths = out.widths.max((widths - T::one()).abs());
        out.sum_rule = out.sum_rule.max((sum_rule - T::one()).abs());
        out.common_ratio = out.common_ratio.max((ratio - T::one()).abs());
    }
    out
}

/// Outcome of the free/oscillator mixing question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// No uncorrelated product solution exists for the roster.
    ExclusionConfirmed,
    /// A product solution exists and solves the field equations.
    ExclusionContradicted,
    /// A candidate exists but its residuals did not settle the question.
    Inconclusive,
}

/// One oscillator as seen by the published exclusion argument, which takes
/// `a = mω / (2ħ√(1 − η²))` with `η = m_free/m < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedStep<T> {
    pub particle: usize,
    pub eta: T,
    /// `None` when `η ≥ 1` makes the square root imaginary.
    pub a: Option<T>,
    /// `s⁴` from the width condition with this `a`.
    pub s4_from_widths: Option<T>,
    /// `s⁴` from the free particle's sum rule with this `a`.
    pub s4_from_sum_rule: Option<T>,
    /// Whether the two widths disagree.
    pub conflict: bool,
    /// `(2ħ²a²(η² − 1) − ½m²ω²) / ½m²ω²`, the pairwise ratio condition with
    /// this `a`. Zero for a consistent curvature.
    pub ratio_residual: Option<T>,
}

/// The same step redone from the pairwise ratio condition:
/// `a = mω / (2ħ√(η² − 1))`, requiring `η > 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectedStep<T> {
    pub particle: usize,
    pub eta: T,
    pub a: Option<T>,
    pub s4_from_widths: Option<T>,
    pub s4_from_sum_rule: Option<T>,
    pub agree: bool,
    pub ratio_residual: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResiduals<T> {
    pub continuity_linf: T,
    pub energy_linf: T,
    pub threshold: T,
    pub masked_fraction: T,
    pub passes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingVerdict<T> {
    pub published: Vec<PublishedStep<T>>,
    pub corrected: Vec<CorrectedStep<T>>,
    /// Set when the published curvature violates the pairwise ratio condition,
    /// or is imaginary where the corrected one is real, while the corrected
    /// curvature satisfies it.
    pub sign_discrepancy: bool,
    pub reduction: FeasibilityResult<T>,
    pub candidate: Option<CandidateResiduals<T>>,
    pub verdict: Verdict,
    pub findings: Vec<String>,
}

/// Residual threshold a mixed candidate must meet to count as a solution.
pub const MIXING_RESIDUAL_THRESHOLD: f64 = 1e-10;

/// Settles whether a roster of free and oscillator particles admits a
/// product soliton, running the published argument and the `k`-reduction
/// side by side and residual-testing any candidate.
pub fn adjudicate_mixing<T: Real>(
    universe: &ValidatedUniverse<T>,
) -> Result<MixingVerdict<T>, FeasibilityError> {
    let roster = universe.particles();
    require_one_dimensional(roster)?;
    let free: Vec<usize> = (0..roster.len()).filter(|&i| roster[i].is_free()).collect();
    let osc: Vec<usize> = (0..roster.len())
        .filter(|&i| !roster[i].is_free())
        .collect();
    if free.is_empty() || osc.is_empty() {
        return Err(FeasibilityError::NotMixedRoster);
    }
    let hbar = universe.hbar();
    let c_abs = universe.c_abs();
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    let tol = lit::<T>(1e-9);
    let m_f = roster[free[0]].mass;

    let ratio_residual = |a: T, eta: T, m: T, w: T| {
        let target = m * m * w * w / two;
        (two * hbar * hbar * a * a * (eta * eta - T::one()) - target) / target
    };
    let s4_widths =
        |a: T, m: T, w: T| two * hbar * hbar / (two * a * a * hbar * hbar + m * m * w * w / two);

    let mut published = Vec::new();
    let mut corrected = Vec::new();
    for &j in &osc {
        let p = &roster[j];
        let (m, w) = (p.mass, p.omega);
        let eta = m_f / m;
        let one_minus = (T::one() - eta) * (T::one() + eta);
        let a_pub = (one_minus > T::zero()).then(|| m * w / (two * hbar * one_minus.sqrt()));
        let s45 = (one_minus > T::zero())
            .then(|| four * hbar * hbar * one_minus / (m * m * w * w * (two - eta * eta)));
        let s47 =
            (one_minus > T::zero()).then(|| four * hbar * hbar * one_minus / (m_f * m_f * w * w));
        let conflict = match (s45, s47) {
            (Some(x), Some(y)) => crate::scalar::rel_diff(x, y) > tol,
            _ => true,
        };
        published.push(PublishedStep {
            particle: j,
            eta,
            a: a_pub,
            s4_from_widths: s45,
            s4_from_sum_rule: s47,
            conflict,
            ratio_residual: a_pub.map(|a| ratio_residual(a, eta, m, w)),
        });

        let minus_one = (eta - T::one()) * (eta + T::one());
        let a_cor = (minus_one > T::zero()).then(|| m * w / (two * hbar * minus_one.sqrt()));
        let w_cor = a_cor.map(|a| s4_widths(a, m, w));
        let r_cor = a_cor.map(|a| m * m / (m_f * m_f * a * a));
        let agree =
            matches!((w_cor, r_cor), (Some(x), Some(y)) if crate::scalar::rel_diff(x, y) <= tol);
        corrected.push(CorrectedStep {
            particle: j,
            eta,
            a: a_cor,
            s4_from_widths: w_cor,
            s4_from_sum_rule: r_cor,
            agree,
            ratio_residual: a_cor.map(|a| ratio_residual(a, eta, m, w)),
        });
    }

    let published_breaks = published.iter().zip(&corrected).any(|(p, c)| {
        p.ratio_residual.is_some_and(|r| r.abs() > tol) || (p.a.is_none() && c.a.is_some())
    });
    let corrected_holds = corrected
        .iter()
        .all(|s| s.ratio_residual.is_none_or(|r| r.abs() <= tol));
    let sign_discrepancy = published_breaks && corrected_holds;

    let mut findings = Vec::new();
    if sign_discrepancy {
        findings.push(
            "published curvature a = m*omega/(2*hbar*sqrt(1 - eta^2)) violates the pairwise \
             width-ratio condition or is imaginary; solving that condition gives sqrt(eta^2 - 1), so eta > 1 is \
             required, and the two width expressions then coincide"
                .to_string(),
        );
    }
    if published.iter().any(|s| s.a.is_none()) {
        findings.push("published chain undefined for eta >= 1 (imaginary square root)".into());
    }
    if corrected.iter().any(|s| s.a.is_none()) {
        findings.push("corrected chain has no real curvature for eta <= 1".into());
    }

    let reduction = solve_k_with(roster, hbar, c_abs)?;
    let mut candidate = None;
    let verdict = if !reduction.is_feasible() {
        findings.push(format!(
            "k-reduction infeasible: {}",
            reduction
                .certificate
                .as_ref()
                .map(|c| c.detail.as_str())
                .unwrap_or("")
        ));
        Verdict::ExclusionConfirmed
    } else {
        let u = universe.with_particles(roster.to_vec()).map_err(|e| {
            FeasibilityError::Ansatz(Box::new(AnsatzError::Precondition(e.to_string())))
        })?;
        let sol = build_product_soliton(&u).map_err(|e| FeasibilityError::Ansatz(Box::new(e)))?;
        let points = match roster.len() {
            1 => 2048,
            2 => 256,
            _ => 48,
        };
        let grid = Grid::covering(&sol, lit(6.0), points, &[T::zero(), T::one()])?;
        let report = pde_residuals(&sol, &grid, Variant::CrossCoupled, false)?;
        let threshold = lit::<T>(MIXING_RESIDUAL_THRESHOLD);
        let c = report.continuity_linf();
        let e = report.energy_linf();
        let passes = c <= threshold && e <= threshold;
        candidate = Some(CandidateResiduals {
            continuity_linf: c,
            energy_linf: e,
            threshold,
            masked_fraction: report.masked_fraction,
            passes,
        });
        findings.push(format!(
            "k-reduction candidate k = {} residuals: continuity {:e}, energy {:e}",
            reduction.k.unwrap_or(T::zero()),
            c.to_f64().unwrap_or(f64::NAN),
            e.to_f64().unwrap_or(f64::NAN)
        ));
        if passes {
            Verdict::ExclusionContradicted
        } else {
            Verdict::Inconclusive
        }
    };

    Ok(MixingVerdict {
        published,
        corrected,
        sign_discrepancy,
        reduction,
        candidate,
        verdict,
        findings,
    })
}
