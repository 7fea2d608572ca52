//! Domain types shared by every module: the universe configuration, its
//! validation, and the energy breakdown.
//!
//! Units are natural by default (`hbar = 1`). The nonlinear coupling is stored
//! as the magnitude `c_abs`; the signed coupling entering the equations of
//! motion is always `-c_abs`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Real;

/// Which multi-particle Lagrangian the equations of motion come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// One nonlinear term on the square of the summed phase Laplacians.
    #[default]
    #[serde(rename = "cross", alias = "cross-coupled")]
    CrossCoupled,
    /// One nonlinear term per particle, each with its own coupling.
    #[serde(rename = "weak", alias = "weakly-separable")]
    WeaklySeparable,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::CrossCoupled => f.write_str("cross"),
            Variant::WeaklySeparable => f.write_str("weak"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cross" | "cross-coupled" => Ok(Variant::CrossCoupled),
            "weak" | "weakly-separable" => Ok(Variant::WeaklySeparable),
            other => Err(format!("unknown variant '{other}' (expected cross|weak)")),
        }
    }
}

/// Sign choice of the non-factorizable two-particle solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Second packet coordinate `x + y - vt`.
    #[default]
    Upper,
    /// Second packet coordinate `x + y + vt`.
    Lower,
}

/// One entry of the particle roster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleSpec<T> {
    pub mass: T,
    /// Velocity per spatial dimension. A bare number in the config file means
    /// a one-dimensional particle.
    #[serde(
        serialize_with = "serialize_velocity",
        deserialize_with = "deserialize_velocity"
    )]
    pub velocity: Vec<T>,
    /// Oscillator angular frequency; zero for a free particle.
    #[serde(default)]
    pub omega: T,
    /// Per-particle coupling magnitude, only meaningful for the weakly
    /// separable variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_abs: Option<T>,
}

impl<T: Real> ParticleSpec<T> {
    pub fn free(mass: T, velocity: T) -> Self {
        Self {
            mass,
            velocity: vec![velocity],
            omega: T::zero(),
            c_abs: None,
        }
    }

    pub fn oscillator(mass: T, velocity: T, omega: T) -> Self {
        Self {
            mass,
            velocity: vec![velocity],
            omega,
            c_abs: None,
        }
    }

    pub fn with_coupling(mut self, c_abs: T) -> Self {
        self.c_abs = Some(c_abs);
        self
    }

    pub fn is_free(&self) -> bool {
        self.omega == T::zero()
    }

    pub fn dimensions(&self) -> usize {
        self.velocity.len()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VelocityRepr<T> {
    Scalar(T),
    Vector(Vec<T>),
}

fn serialize_velocity<T: Serialize, S: Serializer>(
    v: &[T],
    serializer: S,
) -> Result<S::Ok, S::Error> {
    if v.len() == 1 {
        v[0].serialize(serializer)
    } else {
        v.serialize(serializer)
    }
}

fn deserialize_velocity<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
    deserializer: D,
) -> Result<Vec<T>, D::Error> {
    Ok(match VelocityRepr::<T>::deserialize(deserializer)? {
        VelocityRepr::Scalar(x) => vec![x],
        VelocityRepr::Vector(v) => v,
    })
}

fn default_hbar<T: Real>() -> T {
    T::one()
}

/// Global constants plus the particle roster, as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct UniverseConfig<T> {
    #[serde(default = "default_hbar")]
    pub hbar: T,
    pub c_abs: T,
    pub particles: Vec<ParticleSpec<T>>,
    #[serde(default)]
    pub variant: Variant,
    /// Inverse squared half-widths per axis for an anisotropic single particle
    /// in several dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inv_width_sq: Option<Vec<T>>,
    /// Request the non-factorizable two-particle configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entangled: Option<Branch>,
}

impl<T: Real> UniverseConfig<T> {
    pub fn new(hbar: T, c_abs: T, particles: Vec<ParticleSpec<T>>) -> Self {
        Self {
            hbar,
            c_abs,
            particles,
            variant: Variant::CrossCoupled,
            inv_width_sq: None,
            entangled: None,
        }
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A single failed validation rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("invalid universe configuration: {}", join_violations(.0))]
pub struct ValidationError(pub Vec<Violation>);

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A configuration that passed [`validate`]. Constructors only accept this.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent, bound(serialize = "T: Real"))]
pub struct ValidatedUniverse<T> {
    config: UniverseConfig<T>,
}

impl<T: Real> ValidatedUniverse<T> {
    pub fn config(&self) -> &UniverseConfig<T> {
        &self.config
    }

    pub fn hbar(&self) -> T {
        self.config.hbar
    }

    pub fn c_abs(&self) -> T {
        self.config.c_abs
    }

    /// The signed coupling constant `C = -|C|`.
    pub fn coupling(&self) -> T {
        -self.config.c_abs
    }

    pub fn particles(&self) -> &[ParticleSpec<T>] {
        &self.config.particles
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    /// Coupling magnitude seen by particle `i` under this universe's variant.
    pub fn particle_coupling(&self, i: usize) -> T {
        match self.config.variant {
            Variant::CrossCoupled => self.config.c_abs,
            Variant::WeaklySeparable => self.config.particles[i].c_abs.unwrap_or(self.config.c_abs),
        }
    }

    pub fn into_config(self) -> UniverseConfig<T> {
        self.config
    }

    /// Same constants and variant with a different roster.
    pub fn with_particles(&self, particles: Vec<ParticleSpec<T>>) -> Result<Self, ValidationError> {
        let mut cfg = self.config.clone();
        cfg.particles = particles;
        cfg.inv_width_sq = None;
        cfg.entangled = None;
        validate(cfg)
    }
}

fn positive_finite<T: Real>(x: T) -> bool {
    x.is_finite() && x > T::zero()
}

/// Checks every invariant of a configuration and either accepts it whole or
/// returns every violation found.
pub fn validate<T: Real>(
    config: UniverseConfig<T>,
) -> Result<ValidatedUniverse<T>, ValidationError> {
    let mut v = Vec::new();
    let mut push = |field: String, message: String| v.push(Violation { field, message });

    if !positive_finite(config.hbar) {
        push("hbar".into(), "hbar must be > 0".into());
    }
    if !positive_finite(config.c_abs) {
        push("c_abs".into(), "c_abs must be > 0".into());
    }
    if config.particles.is_empty() {
        push(
            "particles".into(),
            "particle roster must not be empty".into(),
        );
    }
    for (i, p) in config.particles.iter().enumerate() {
        if !positive_finite(p.mass) {
            push(
                format!("particles[{i}].mass"),
                format!("particles[{i}]: mass must be > 0"),
            );
        }
        if !(p.omega.is_finite() && p.omega >= T::zero()) {
            push(
                format!("particles[{i}].omega"),
                format!("particles[{i}]: omega must be >= 0"),
            );
        }
        if p.velocity.is_empty() {
            push(
                format!("particles[{i}].velocity"),
                format!("particles[{i}]: velocity needs at least one component"),
            );
        }
        if p.velocity.iter().any(|x| !x.is_finite()) {
            push(
                format!("particles[{i}].velocity"),
                format!("particles[{i}]: velocity must be finite"),
            );
        }
        if config.particles.len() > 1 && p.velocity.len() > 1 {
            push(
                format!("particles[{i}].velocity"),
                format!("particles[{i}]: multi-particle rosters are one-dimensional per particle"),
            );
        }
        if p.velocity.len() > 1 && p.omega != T::zero() {
            push(
                format!("particles[{i}].omega"),
                format!("particles[{i}]: multi-dimensional particles must be free"),
            );
        }
        if let Some(c) = p.c_abs {
            if !positive_finite(c) {
                push(
                    format!("particles[{i}].c_abs"),
                    format!("particles[{i}]: c_abs must be > 0"),
                );
            } else if config.variant == Variant::CrossCoupled && c != config.c_abs {
                push(
                    format!("particles[{i}].c_abs"),
                    format!("particles[{i}]: per-particle coupling requires the weak variant"),
                );
            }
        }
    }
    if let Some(w) = &config.inv_width_sq {
        let dims = config.particles.first().map_or(0, |p| p.velocity.len());
        if config.particles.len() != 1 {
            push(
                "inv_width_sq".into(),
                "inv_width_sq requires a single particle".into(),
            );
        } else if w.len() != dims {
            push(
                "inv_width_sq".into(),
                format!(
                    "inv_width_sq has {} entries, particle has {dims} dimensions",
                    w.len()
                ),
            );
        }
        if w.iter().any(|x| !positive_finite(*x)) {
            push(
                "inv_width_sq".into(),
                "inv_width_sq entries must be > 0".into(),
            );
        }
    }
    if config.entangled.is_some() {
        let ps = &config.particles;
        if ps.len() != 2 {
            push(
                "entangled".into(),
                "entangled pair requires exactly two particles".into(),
            );
        } else {
            if ps[0].mass != ps[1].mass {
                push(
                    "entangled".into(),
                    "entangled pair requires equal masses".into(),
                );
            }
            if !ps[0].is_free() || !ps[1].is_free() {
                push(
                    "entangled".into(),
                    "entangled pair requires free particles".into(),
                );
            }
        }
        if config.variant != Variant::CrossCoupled {
            push(
                "entangled".into(),
                "entangled pair exists only for the cross variant".into(),
            );
        }
    }

    if v.is_empty() {
        Ok(ValidatedUniverse { config })
    } else {
        Err(ValidationError(v))
    }
}

/// Kinetic, internal (stationary) and oscillator contributions to the energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub internal: T,
    pub oscillator: T,
    pub total: T,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn new(kinetic: T, internal: T, oscillator: T) -> Self {
        Self {
            kinetic,
            internal,
            oscillator,
            total: kinetic + internal + oscillator,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> UniverseConfig<f64> {
        UniverseConfig::new(1.0, 0.125, vec![ParticleSpec::free(1.0, 0.0)])
    }

    #[test]
    fn accepts_minimal_config() {
        let v = validate(base()).unwrap();
        assert_eq!(v.coupling(), -0.125);
        assert_eq!(v.particles().len(), 1);
    }

    #[test]
    fn rejects_zero_coupling() {
        let mut c = base();
        c.c_abs = 0.0;
        let err = validate(c).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].message, "c_abs must be > 0");
        assert_eq!(err.0[0].field, "c_abs");
    }

    #[test]
    fn rejects_negative_mass() {
        let mut c = base();
        c.particles[0].mass = -1.0;
        let err = validate(c).unwrap_err();
        assert!(err.0[0].message.contains("mass must be > 0"));
    }

    #[test]
    fn reports_every_violation() {
        let c = UniverseConfig::<f64>::new(0.0, -1.0, vec![]);
        let err = validate(c).unwrap_err();
        let fields: Vec<_> = err.0.iter().map(|v| v.field.as_str()).collect();
        assert_eq!(fields, ["hbar", "c_abs", "particles"]);
    }

    #[test]
    fn validation_is_idempotent() {
        let once = validate(base()).unwrap();
        let twice = validate(once.clone().into_config()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn per_particle_coupling_needs_weak_variant() {
        let mut c = base();
        c.particles[0].c_abs = Some(0.5);
        assert!(validate(c.clone()).is_err());
        c.variant = Variant::WeaklySeparable;
        let v = validate(c).unwrap();
        assert_eq!(v.particle_coupling(0), 0.5);
    }

    #[test]
    fn parses_config_file_format() {
        let text = r#"{
            "hbar": 1, "c_abs": 0.125, "variant": "weak",
            "particles": [{"mass": 1, "velocity": 0.5, "omega": 0},
                          {"mass": 2, "velocity": [0.0], "omega": 0.25}]
        }"#;
        let c = UniverseConfig::<f64>::from_json(text).unwrap();
        assert_eq!(c.variant, Variant::WeaklySeparable);
        assert_eq!(c.particles[0].velocity, vec![0.5]);
        assert_eq!(c.particles[1].omega, 0.25);
        let back = UniverseConfig::<f64>::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn hbar_defaults_to_one() {
        let c = UniverseConfig::<f64>::from_json(
            r#"{"c_abs": 0.125, "particles": [{"mass": 1, "velocity": 0}]}"#,
        )
        .unwrap();
        assert_eq!(c.hbar, 1.0);
        assert_eq!(c.variant, Variant::CrossCoupled);
    }

    #[test]
    fn energy_total_is_sum() {
        let e = EnergyBreakdown::new(1.5, 0.5, 0.25);
        assert_eq!(e.total, 2.25);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn rational() -> impl Strategy<Value = f64> {
            (1i32..1000, 1i32..64).prop_map(|(p, q)| p as f64 / q as f64)
        }

        proptest! {
            #[test]
            fn config_round_trip_is_exact(
                hbar in rational(), c in rational(),
                roster in prop::collection::vec((rational(), -8i32..8, 0i32..16), 1..6),
            ) {
                let particles = roster
                    .into_iter()
                    .map(|(m, v, w)| ParticleSpec::oscillator(m, v as f64 / 4.0, w as f64 / 8.0))
                    .collect();
                let cfg = UniverseConfig::new(hbar, c, particles);
                let back = UniverseConfig::<f64>::from_json(&cfg.to_json()).unwrap();
                prop_assert_eq!(&back, &cfg);
                let v1 = validate(cfg.clone()).unwrap();
                let v2 = validate(back).unwrap();
                prop_assert_eq!(v1, v2);
            }
        }
    }
}
