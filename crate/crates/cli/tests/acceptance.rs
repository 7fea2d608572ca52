//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! measured values and wall time; the process exits non-zero if any fails.
//!
//! Run with `cargo test -p soliton-cli --test acceptance`.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use soliton_cli::{execute, Outcome};
use soliton_core::fieldlab::variational::{default_steps, variational_check};
use soliton_core::*;

type Criterion = (&'static str, Duration, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn universe(hbar: f64, c_abs: f64, particles: Vec<ParticleSpec<f64>>) -> UniverseF64 {
    validate(UniverseConfig::new(hbar, c_abs, particles)).expect("valid universe")
}

fn quadrature_total<F: WaveField<f64>>(field: &F, points: usize) -> f64 {
    let grid = Grid::covering(field, 7.0, points, &[0.0]).expect("grid");
    energy_quadrature(field, &grid, 0.0)
        .expect("quadrature")
        .breakdown
        .total
}

fn one_particle_round_trip() -> Verdict {
    let u = universe(1.0, 0.125, vec![ParticleSpec::free(1.0, 0.0)]);
    let sol = build_free_soliton(1.0, 0.0, &u).expect("free soliton");
    let ax = sol.axes[0];
    let params_ok = rel(ax.s, 1.0) <= 1e-15 && rel(ax.a, 1.0) <= 1e-15 && rel(ax.b, 1.0) <= 1e-15;
    let grid = Grid::cube(1, 8.0, 2048, &[0.0, 1.0, 2.0]).expect("grid");
    let r = pde_residuals(&sol, &grid, Variant::CrossCoupled, false).expect("residuals");
    Verdict {
        pass: params_ok && r.linf() <= 1e-10,
        detail: format!(
            "s={} a={} b={} residual_linf={:.3e} (<= 1e-10)",
            ax.s,
            ax.a,
            ax.b,
            r.linf()
        ),
    }
}

fn energy_agreement() -> Verdict {
    let u = universe(1.0, 0.125, vec![ParticleSpec::free(1.0, 0.0)]);
    let free = build_free_soliton(1.0, 0.0, &u).expect("free soliton");
    let e_free = rel(quadrature_total(&free, 2048), 0.5);

    // Stated closed form: E_kin + ħ⁴/(16m²|C|) + 4|C|m²(Σω)²/ħ².
    let (m, omega, c, n) = (1.0, 0.5, 0.125, 2.0);
    let stated = 1.0 / (16.0 * m * m * c) + 4.0 * c * m * m * (n * omega) * (n * omega);
    let u = universe(1.0, c, vec![ParticleSpec::oscillator(m, 0.0, omega); 2]);
    let osc = build_uniform_oscillators(2, m, omega, &u).expect("oscillators");
    let q_osc = quadrature_total(&osc, 400);
    let e_osc = rel(q_osc, stated);

    let v = 0.8;
    let u = universe(1.0, 0.125, vec![ParticleSpec::free(1.0, v); 2]);
    let pair = build_entangled_pair(1.0, v, Branch::Upper, &u).expect("pair");
    let e_pair = rel(quadrature_total(&pair, 400), 0.5 * v * v + 0.5);

    Verdict {
        pass: e_free <= 1e-6 && e_osc <= 1e-6 && e_pair <= 1e-6,
        detail: format!(
            "free rel={e_free:.2e}, oscillators quadrature={q_osc:.12} vs stated {stated} rel={e_osc:.2e}, \
             pair rel={e_pair:.2e} (each <= 1e-6)"
        ),
    }
}

fn machian_scaling_check() -> Verdict {
    let (hbar, m, c) = (1.0f64, 1.0, 0.125);
    let mut width_exact = true;
    let mut worst_energy = 0.0f64;
    for n in [1usize, 2, 4, 8, 16, 32, 64] {
        let u = universe(hbar, c, vec![ParticleSpec::free(m, 0.0); n]);
        let sol = build_free_n_soliton(&u, None).expect("n-soliton");
        let s_sq = 8.0 * n as f64 * m * c / (hbar * hbar);
        width_exact &= sol.axes.iter().all(|ax| ax.s == s_sq.sqrt());
        let internal = closed_form_energy(&Solution::Product(sol)).internal;
        worst_energy = worst_energy.max(rel(internal, hbar.powi(4) / (16.0 * m * m * c)));
    }
    Verdict {
        pass: width_exact && worst_energy <= 1e-12,
        detail: format!(
            "s = sqrt(8nm|C|/hbar^2) bitwise: {width_exact}, internal energy rel={worst_energy:.2e} (<= 1e-12)"
        ),
    }
}

fn mass_rule() -> Verdict {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut wrong = 0;
    for i in 0..100 {
        let n = rng.random_range(2..=6);
        let m0 = rng.random_range(0.2..5.0);
        let mut masses = vec![m0; n];
        let unequal = i % 2 == 1;
        if unequal {
            let j = rng.random_range(1..n);
            masses[j] = m0 * rng.random_range(1.01..3.0);
        }
        let roster: Vec<_> = masses.iter().map(|&m| ParticleSpec::free(m, 0.0)).collect();
        let u = universe(1.0, 0.125, roster.clone());
        let by_rule = check_mass_rule(&masses);
        let by_reduction = solve_k(&roster, &u).expect("solve_k");
        let ok = if unequal {
            by_rule.condition() == Some(Condition::MassRule)
                && by_reduction.condition() == Some(Condition::MassRule)
        } else {
            by_rule.is_feasible() && by_reduction.is_feasible()
        };
        if !ok {
            wrong += 1;
        }
    }
    Verdict {
        pass: wrong == 0,
        detail: format!("{wrong} of 100 randomized rosters misclassified"),
    }
}

fn k_solver_fidelity() -> Verdict {
    let (hbar, m) = (1.0f64, 1.0);
    let ratios = [1.0, 1.7];
    let mut worst_a = 0.0f64;
    let mut worst_back = 0.0f64;
    for i in 0..20 {
        let c = 0.05 + 0.45 * i as f64 / 19.0;
        let bound = hbar.powi(3) / (4.0 * c * m * m);
        for j in 0..20 {
            let sum_omega = bound * (0.02 + 0.96 * j as f64 / 19.0);
            let w1 = sum_omega / ratios.iter().sum::<f64>();
            let roster: Vec<_> = ratios
                .iter()
                .map(|r| ParticleSpec::oscillator(m, 0.0, w1 * r))
                .collect();
            let u = universe(hbar, c, roster.clone());
            let res = solve_k(&roster, &u).expect("solve_k");
            let a1_sq = w1
                * w1
                * (hbar.powi(4) / (64.0 * c * c * m * m * sum_omega * sum_omega)
                    - (m / (2.0 * hbar)).powi(2));
            let a = res.params[0].a;
            worst_a = worst_a.max(rel(a * a, a1_sq));
            worst_back = worst_back.max(res.residuals.map_or(f64::INFINITY, |r| r.max()));
        }
    }
    Verdict {
        pass: worst_a <= 1e-10 && worst_back <= 1e-10,
        detail: format!(
            "a1^2 rel={worst_a:.2e}, back-substitution={worst_back:.2e} (each <= 1e-10)"
        ),
    }
}

fn frequency_bound_check() -> Verdict {
    let (hbar, m, c) = (1.0f64, 1.0, 0.125);
    let mut ok = true;
    let is_bound_err = |e: &AnsatzError| {
        matches!(e, AnsatzError::FrequencyBoundViolation { .. })
            || matches!(e, AnsatzError::Infeasible(cert) if cert.condition == Condition::FrequencyBound)
    };
    // Σω against ħ³/(4|C|m²) for distinct frequencies.
    let ratios = [1.0, 2.5];
    let bound = hbar.powi(3) / (4.0 * c * m * m);
    for side in [-1.0, 1.0] {
        let sum_omega = bound * (1.0 + side * 1e-6);
        let w1 = sum_omega / ratios.iter().sum::<f64>();
        let u = universe(
            hbar,
            c,
            ratios
                .iter()
                .map(|r| ParticleSpec::oscillator(m, 0.0, w1 * r))
                .collect(),
        );
        let r = build_oscillator_solution(&u);
        ok &= if side < 0.0 {
            r.is_ok()
        } else {
            r.as_ref().err().is_some_and(is_bound_err)
        };
    }
    // ω against ħ³/(4|C|nm²) for identical oscillators.
    for n in [1usize, 3] {
        let bound = hbar.powi(3) / (4.0 * c * n as f64 * m * m);
        for side in [-1.0, 1.0] {
            let omega = bound * (1.0 + side * 1e-6);
            let u = universe(hbar, c, vec![ParticleSpec::oscillator(m, 0.0, omega); n]);
            let r = build_uniform_oscillators(n, m, omega, &u);
            ok &= if side < 0.0 {
                r.is_ok()
            } else {
                r.as_ref().err().is_some_and(is_bound_err)
            };
        }
    }
    Verdict {
        pass: ok,
        detail: format!(
            "both sides of both bounds at relative distance 1e-6 classified correctly: {ok}"
        ),
    }
}

fn mixing_adjudication() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("mixed.json");
    std::fs::write(
        &path,
        r#"{"c_abs": 0.125, "particles": [
            {"mass": 2.0, "velocity": 0.0},
            {"mass": 1.0, "velocity": 0.0, "omega": 0.5}]}"#,
    )
    .expect("write config");
    let report = execute(["soliton-lab", "mixing", "--config", path.to_str().unwrap()]);
    let mix = &report.results["mixing"];
    let chain = mix["published"].as_array().is_some_and(|a| !a.is_empty());
    let reduction = mix["reduction"]["status"].is_string();
    let residuals = mix["candidate"]["continuity_linf"].is_number();
    let flagged = mix["sign_discrepancy"].as_bool() == Some(true);
    Verdict {
        pass: report.outcome == Outcome::Passed && chain && reduction && residuals && flagged,
        detail: format!(
            "verdict={} published chain={chain} reduction={reduction} candidate residuals={residuals} \
             sign discrepancy flagged={flagged}",
            mix["verdict"]
        ),
    }
}

fn weak_separability() -> Verdict {
    let cfg = UniverseConfig::new(
        1.0,
        0.125,
        vec![
            ParticleSpec::free(1.0, 0.0).with_coupling(0.125),
            ParticleSpec::free(1.0, 0.3).with_coupling(0.2),
        ],
    )
    .with_variant(Variant::WeaklySeparable);
    let u = validate(cfg).expect("valid");
    let sol = build_product_soliton(&u).expect("product");
    let grid = Grid::covering(&sol, 6.0, 256, &[0.0, 1.0]).expect("grid");
    let r = pde_residuals(&sol, &grid, Variant::WeaklySeparable, false).expect("residuals");
    let var = variational_check::<f64>(Variant::WeaklySeparable, &default_steps());
    Verdict {
        pass: r.linf() <= 1e-10 && var.passes,
        detail: format!(
            "residual_linf={:.2e} (<= 1e-10), variational orders={:?} (second order)",
            r.linf(),
            var.orders
        ),
    }
}

fn run_dynamics(linear: bool) -> (bool, String) {
    let u = universe(1.0, 0.125, vec![ParticleSpec::free(1.0, 0.0)]);
    let sol = build_free_soliton(1.0, 0.0, &u).expect("free soliton");
    let grid = Grid::cube(1, 8.0, 1024, &[]).expect("grid");
    let mut params = EvolutionParams::for_field(&sol, Variant::CrossCoupled, Potential::none(1));
    params.record_every = 50;
    let ax = sol.axes[0];
    let reference = LinearGaussian::new(sol.hbar, ax.m, ax.s, ax.a, ax.b * ax.v);
    let (initial, boundary) = if linear {
        params = params.linear();
        (
            EvolutionState::from_field(&reference, &grid, 0.0, Variant::CrossCoupled),
            Boundary::Analytic(&reference as &dyn WaveField<f64>),
        )
    } else {
        (
            EvolutionState::from_field(&sol, &grid, 0.0, Variant::CrossCoupled),
            Boundary::Analytic(&sol as &dyn WaveField<f64>),
        )
    };
    let label = if linear { "|C|=0" } else { "|C|=1/8" };
    match evolve(initial.expect("state"), &params, boundary, 0.5) {
        Ok((_, tr)) => {
            let dev = tr.max_deviation().unwrap_or(f64::INFINITY);
            let pass = dev <= 1e-3 && tr.norm_drift() <= 1e-8 && tr.energy_drift() <= 1e-6;
            (
                pass,
                format!(
                    "{label}: deviation={dev:.2e} norm drift={:.2e} energy drift={:.2e}",
                    tr.norm_drift(),
                    tr.energy_drift()
                ),
            )
        }
        Err(DynamicsError::BlowupDetected { step, t, .. }) => (
            false,
            format!("{label}: non-finite state at step {step}, t={t:.3e}"),
        ),
        Err(e) => (false, format!("{label}: {e}")),
    }
}

fn dynamics_fidelity() -> Verdict {
    let (nl_pass, nl) = run_dynamics(false);
    let (lin_pass, lin) = run_dynamics(true);
    Verdict {
        pass: nl_pass && lin_pass,
        detail: format!("{nl}; {lin} (deviation <= 1e-3, norm <= 1e-8, energy <= 1e-6)"),
    }
}

fn d_dim_consistency() -> Verdict {
    let u = universe(
        1.0,
        0.125,
        vec![ParticleSpec {
            mass: 1.0,
            velocity: vec![0.0; 3],
            omega: 0.0,
            c_abs: None,
        }],
    );
    let spherical = build_d_dim_soliton(1.0, &[0.0; 3], &u, None).expect("spherical");
    let s_sq = spherical.axes[0].s_sq();
    // Σ 1/sᵢ² = ħ²/(8m|C|) = 1.
    let shapes: [[f64; 3]; 3] = [[1.0 / 3.0; 3], [0.45, 0.45, 0.1], [0.9, 0.05, 0.05]];
    let energies: Vec<f64> = shapes
        .iter()
        .map(|inv| {
            let sol = build_d_dim_soliton(1.0, &[0.0; 3], &u, Some(inv)).expect("shape");
            quadrature_total(&sol, 96)
        })
        .collect();
    let spread = energies
        .iter()
        .map(|e| rel(*e, energies[0]))
        .fold(0.0, f64::max);
    Verdict {
        pass: rel(s_sq, 3.0) <= 1e-14 && spread <= 1e-6,
        detail: format!(
            "s^2={s_sq}, energies spherical/sheet/string={energies:?} spread={spread:.2e} (<= 1e-6)"
        ),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "1 one-particle round trip",
            Duration::from_secs(1),
            one_particle_round_trip,
        ),
        (
            "2 energy agreement",
            Duration::from_secs(5),
            energy_agreement,
        ),
        (
            "3 machian scaling",
            Duration::from_secs(1),
            machian_scaling_check,
        ),
        ("4 mass rule", Duration::from_secs(1), mass_rule),
        (
            "5 k-solver fidelity",
            Duration::from_secs(5),
            k_solver_fidelity,
        ),
        (
            "6 frequency bound",
            Duration::from_secs(1),
            frequency_bound_check,
        ),
        (
            "7 mixing adjudication",
            Duration::from_secs(10),
            mixing_adjudication,
        ),
        (
            "8 weak-variant separability",
            Duration::from_secs(10),
            weak_separability,
        ),
        (
            "9 dynamics fidelity",
            Duration::from_secs(60),
            dynamics_fidelity,
        ),
        (
            "10 d-dimensional consistency",
            Duration::from_secs(30),
            d_dim_consistency,
        ),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
