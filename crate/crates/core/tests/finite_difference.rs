//! Residuals of closed-form solutions recomputed from sampled `R` and `S`
//! with central differences, independently of the analytic jets.

#![allow(clippy::single_range_in_vec_init)]

use soliton_core::dynamics::{
    evolve, Boundary, EvolutionParams, EvolutionState, LinearGaussian, Potential,
};
use soliton_core::fieldlab::Jet;
use soliton_core::*;

struct Sampler<'a> {
    field: &'a SolitonF64,
}

impl Sampler<'_> {
    fn rs(&self, x: f64, t: f64) -> (f64, f64) {
        let mut jet = Jet::new(1, 1);
        self.field.jet_into(&[x], t, &[0..1], &mut jet);
        (jet.r, jet.s)
    }

    fn r(&self, x: f64, t: f64) -> f64 {
        self.rs(x, t).0
    }

    fn s(&self, x: f64, t: f64) -> f64 {
        self.rs(x, t).1
    }
}

fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
}

/// Both residuals, transcribed directly:
/// `ħ∂ₜR² + ħ²/m ∂(R²∂S) + 2|C|∂²(R²∂²S)` and
/// `−2ħR∂ₜS + ħ²/m ∂²R − ħ²/m R(∂S)² + 2|C|R(∂²S)²`.
fn fd_residuals(p: &Sampler, hbar: f64, m: f64, c: f64, x: f64, t: f64, h: f64) -> (f64, f64) {
    let rho = |y: f64| p.r(y, t).powi(2);
    let s = |y: f64| p.s(y, t);
    let lap = |y: f64| d2(&s, y, h);
    let flux = |y: f64| rho(y) * d1(&s, y, h);
    let rho_lap = |y: f64| rho(y) * lap(y);
    let dt_rho = d1(&|tt| p.r(x, tt).powi(2), t, h);
    let dt_s = d1(&|tt| p.s(x, tt), t, h);
    let r = p.r(x, t);
    let continuity =
        hbar * dt_rho + hbar * hbar / m * d1(&flux, x, h) + 2.0 * c * d2(&rho_lap, x, h);
    let energy = -2.0 * hbar * r * dt_s + hbar * hbar / m * d2(&|y| p.r(y, t), x, h)
        - hbar * hbar / m * r * d1(&s, x, h).powi(2)
        + 2.0 * c * r * lap(x).powi(2);
    (continuity, energy)
}

#[test]
fn free_soliton_residual_converges_at_second_order() {
    let u = validate(UniverseConfig::new(
        1.0,
        0.125,
        vec![ParticleSpec::free(1.0, 0.5)],
    ))
    .unwrap();
    let sol = build_free_soliton(1.0, 0.5, &u).unwrap();
    let p = Sampler { field: &sol };
    let hs = [0.04, 0.02, 0.01];
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| {
            [-1.1, -0.4, 0.3, 0.9, 1.6]
                .iter()
                .map(|&x| {
                    let (c, e) = fd_residuals(&p, 1.0, 1.0, 0.125, x, 0.7, h);
                    c.abs().max(e.abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "order {order} from {errs:?}");
    }
}

#[test]
fn analytic_jet_matches_finite_differences() {
    let u = validate(UniverseConfig::new(
        1.0,
        0.125,
        vec![ParticleSpec::free(1.0, 0.5)],
    ))
    .unwrap();
    let sol = build_free_soliton(1.0, 0.5, &u).unwrap();
    let p = Sampler { field: &sol };
    let (x, t) = (0.37, 0.4);
    let mut jet = Jet::new(1, 1);
    sol.jet_into(&[x], t, &[0..1], &mut jet);
    let err = |h: f64| {
        let dr = d1(&|y| p.r(y, t), x, h) - jet.dr[0];
        let d2r = d2(&|y| p.r(y, t), x, h) - jet.d2r[0];
        let dts = d1(&|tt| p.s(x, tt), t, h) - jet.dt_s;
        dr.abs().max(d2r.abs()).max(dts.abs())
    };
    let order = (err(0.02) / err(0.01)).log2();
    assert!((1.8..=2.2).contains(&order), "order {order}");
}

/// Halving `dt` on a fixed grid, measured against a run with a much smaller
/// step so that the spatial error cancels.
#[test]
fn time_stepping_error_falls_at_fourth_order() {
    let g = LinearGaussian::new(1.0, 1.0, 1.0, 0.3, 0.5);
    let grid = Grid::cube(1, 8.0, 128, &[]).unwrap();
    let params = EvolutionParams::for_field(&g, Variant::CrossCoupled, Potential::none(1));
    let bound = params.stability_bound(&grid);
    let run = |dt: f64| {
        let init = EvolutionState::from_field(&g, &grid, 0.0, Variant::CrossCoupled).unwrap();
        evolve(
            init,
            &params.clone().with_dt(dt),
            Boundary::Analytic(&g),
            0.1,
        )
        .unwrap()
        .0
    };
    let reference = run(bound / 4.0);
    let errs: Vec<f64> = [4.0, 2.0, 1.0]
        .iter()
        .map(|&f| {
            let s = run(f * bound);
            s.rho
                .iter()
                .zip(&reference.rho)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let slope = (errs[0] / errs[2]).log2() / 2.0;
    assert!(slope >= 3.0, "slope {slope} from {errs:?}");
}
