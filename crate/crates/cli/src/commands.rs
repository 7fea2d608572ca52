use std::fs;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use soliton_core::dynamics::grid_growth_rate;
use soliton_core::fieldlab::variational::{default_steps, variational_check};
use soliton_core::scalar::rel_diff;
use soliton_core::{
    adjudicate_mixing, build_free_n_soliton, build_solution, check_mass_rule, closed_form_energy,
    energy_quadrature, evolve, machian_scaling, pde_residuals, perturb_and_track, sample, solve_k,
    Boundary, DynamicsError, EvolutionParams, EvolutionState, FeasibilityError, Grid,
    LinearGaussian, ParticleSpec, PerturbedParameter, Potential, SolitonSolution, Solution,
    Trajectory, UniverseConfig, UniverseF64, Variant, WaveField,
};

use crate::output::{sha256_hex, OutputSink};
use crate::{Check, CliError, Command, CommandOutput, Common, CountRange};

/// Packet widths each side of the center when `--grid-span` is absent.
const DEFAULT_SIGMAS: f64 = 6.0;

pub(crate) fn dispatch(
    common: &Common,
    command: &Command,
    sink: &mut OutputSink,
) -> Result<CommandOutput, CliError> {
    match command {
        Command::Construct => construct(common, sink),
        Command::Verify { tol } => verify(common, *tol, sink),
        Command::Energy { tol, t } => energy(common, *tol, *t, sink),
        Command::Feasibility => feasibility(common, sink),
        Command::Mixing => mixing(common, sink),
        Command::MachianSweep { n, m } => machian_sweep(common, n, *m, sink),
        Command::Evolve {
            horizon,
            dt,
            linear,
            record_every,
            snapshot_every,
            tol_deviation,
            tol_norm,
            tol_energy,
        } => {
            let opts = EvolveOptions {
                horizon: *horizon,
                dt: *dt,
                linear: *linear,
                record_every: *record_every,
                snapshot_every: *snapshot_every,
                tol_deviation: *tol_deviation,
                tol_norm: *tol_norm,
                tol_energy: *tol_energy,
            };
            evolve_cmd(common, &opts, sink)
        }
        Command::Perturb {
            perturb_s,
            perturb_a,
            horizon,
            dt,
        } => {
            let (parameter, relative) = match (perturb_s, perturb_a) {
                (Some(r), None) => (PerturbedParameter::Width, *r),
                (None, Some(r)) => (PerturbedParameter::Curvature, *r),
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --perturb-s or --perturb-a".into(),
                    ))
                }
            };
            perturb(common, parameter, relative, *horizon, *dt, sink)
        }
    }
}

fn to_value<S: Serialize>(v: &S) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(CliError::Serialize)
}

/// Reads the config file and applies flag overrides.
fn effective_config(common: &Common) -> Result<UniverseConfig<f64>, CliError> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config is required for this command".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut config = UniverseConfig::<f64>::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(h) = common.hbar {
        config.hbar = h;
    }
    if let Some(c) = common.cabs {
        config.c_abs = c;
    }
    if let Some(v) = common.variant {
        config.variant = v;
    }
    Ok(config)
}

fn load_universe(common: &Common) -> Result<(UniverseF64, String), CliError> {
    let config = effective_config(common)?;
    let hash = sha256_hex(config.to_json().as_bytes());
    Ok((soliton_core::validate(config)?, hash))
}

fn times(common: &Common) -> Vec<f64> {
    common.times.clone().unwrap_or_else(|| vec![0.0])
}

fn default_points(dims: usize) -> usize {
    match dims {
        1 => 2048,
        2 => 256,
        _ => 64,
    }
}

/// `[−span, span]^d` from `--grid-span`, otherwise a box covering the packet
/// at every requested time.
fn grid_for<F: WaveField<f64> + ?Sized>(
    common: &Common,
    field: &F,
    times: &[f64],
    default_pts: usize,
) -> Result<Grid<f64>, CliError> {
    let points = common.grid_points.unwrap_or(default_pts);
    let mut grid = match common.grid_span {
        Some(span) => Grid::cube(field.dims(), span, points, times)?,
        None => Grid::covering(field, DEFAULT_SIGMAS, points, times)?,
    };
    grid.seed = common.seed;
    Ok(grid)
}

fn write_field_csv<F: WaveField<f64> + ?Sized>(
    sink: &mut OutputSink,
    name: &str,
    field: &F,
    grid: &Grid<f64>,
    t: f64,
) -> Result<(), CliError> {
    if !sink.enabled() {
        return Ok(());
    }
    let snap = sample(field, grid, t)?;
    let mut bytes = Vec::new();
    snap.write_csv(grid, &mut bytes)
        .map_err(|e| CliError::Csv(e.to_string()))?;
    sink.write_bytes(name, &bytes)
}

fn construct(common: &Common, sink: &mut OutputSink) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let sol = build_solution(&universe)?;
    let energy = closed_form_energy(&sol);
    let results = json!({
        "universe": to_value(&universe)?,
        "solution": to_value(&sol)?,
        "energy": to_value(&energy)?,
    });
    sink.write_json("solution.json", &results)?;
    if sol.dims() <= soliton_core::fieldlab::MAX_TENSOR_DIMS {
        let ts = times(common);
        let grid = grid_for(common, &sol, &ts, default_points(sol.dims()))?;
        for (i, &t) in ts.iter().enumerate() {
            write_field_csv(sink, &format!("field_t{i}.csv"), &sol, &grid, t)?;
        }
    }
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks: Vec::new(),
        results,
    })
}

fn verify(common: &Common, tol: f64, sink: &mut OutputSink) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let sol = build_solution(&universe)?;
    let ts = times(common);
    let grid = grid_for(common, &sol, &ts, default_points(sol.dims()))?;
    let report = pde_residuals(&sol, &grid, universe.variant(), false)?;
    let mut checks = vec![
        Check::at_most("continuity_linf", report.continuity_linf(), tol),
        Check::at_most("energy_linf", report.energy_linf(), tol),
    ];
    let mut results = json!({ "residuals": to_value(&report)? });
    if universe.variant() == Variant::WeaklySeparable {
        let var = variational_check::<f64>(Variant::WeaklySeparable, &default_steps());
        let lo = var.orders.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = var.orders.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_least("variational_order_min", lo, 1.8));
        checks.push(Check::at_most("variational_order_max", hi, 2.2));
        results["variational"] = to_value(&var)?;
    }
    let rows = report.per_time.iter().map(|r| {
        vec![
            r.t.to_string(),
            r.continuity.linf.to_string(),
            r.continuity.l2.to_string(),
            r.energy.linf.to_string(),
            r.energy.l2.to_string(),
            r.evaluated.to_string(),
            r.masked.to_string(),
        ]
    });
    sink.write_csv(
        "residuals.csv",
        &[
            "t",
            "continuity_linf",
            "continuity_l2",
            "energy_linf",
            "energy_l2",
            "evaluated",
            "masked",
        ],
        rows,
    )?;
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks,
        results,
    })
}

fn energy(
    common: &Common,
    tol: f64,
    t: f64,
    sink: &mut OutputSink,
) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let sol = build_solution(&universe)?;
    let grid = grid_for(common, &sol, &[t], default_points(sol.dims()))?;
    let quad = energy_quadrature(&sol, &grid, t)?;
    let closed = closed_form_energy(&sol);
    let checks = vec![
        Check::at_most(
            "total_relative_error",
            rel_diff(quad.breakdown.total, closed.total),
            tol,
        ),
        Check::at_most("norm_relative_error", rel_diff(quad.norm, 1.0), tol),
    ];
    let results = json!({
        "t": t,
        "quadrature": to_value(&quad)?,
        "closed_form": to_value(&closed)?,
    });
    sink.write_json("energy.json", &results)?;
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks,
        results,
    })
}

fn is_mixed(universe: &UniverseF64) -> bool {
    let ps = universe.particles();
    ps.iter().any(ParticleSpec::is_free) && ps.iter().any(|p| !p.is_free())
}

fn mixing_output(universe: &UniverseF64, hash: String) -> Result<CommandOutput, CliError> {
    let verdict = adjudicate_mixing(universe)?;
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks: Vec::new(),
        results: json!({ "mixing": to_value(&verdict)? }),
    })
}

fn feasibility(common: &Common, sink: &mut OutputSink) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let out = if is_mixed(&universe) {
        mixing_output(&universe, hash)?
    } else {
        let roster = universe.particles();
        let free: Vec<f64> = roster
            .iter()
            .filter(|p| p.is_free())
            .map(|p| p.mass)
            .collect();
        let mut results = json!({});
        if !free.is_empty() {
            results["mass_rule"] = to_value(&check_mass_rule(&free))?;
        }
        let mut checks = Vec::new();
        if roster.iter().all(|p| p.dimensions() == 1) {
            let reduction = solve_k(roster, &universe)?;
            if let Some(r) = &reduction.residuals {
                checks.push(Check::at_most("back_substitution", r.max(), 1e-10));
            }
            results["reduction"] = to_value(&reduction)?;
        }
        CommandOutput {
            config_hash: Some(hash),
            checks,
            results,
        }
    };
    sink.write_json("feasibility.json", &out.results)?;
    Ok(out)
}

fn mixing(common: &Common, sink: &mut OutputSink) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let out = mixing_output(&universe, hash).map_err(|e| match e {
        CliError::Feasibility(FeasibilityError::NotMixedRoster) => {
            CliError::Config("mixing needs at least one free particle and one oscillator".into())
        }
        e => e,
    })?;
    sink.write_json("mixing.json", &out.results)?;
    Ok(out)
}

#[derive(Serialize)]
struct MachianRow {
    n: usize,
    s_sq: f64,
    phase_length: f64,
    internal_energy: f64,
    constructed_s: f64,
    constructed_internal_energy: f64,
}

fn machian_sweep(
    common: &Common,
    range: &CountRange,
    m: f64,
    sink: &mut OutputSink,
) -> Result<CommandOutput, CliError> {
    let (hbar, c_abs, variant) = match &common.config {
        Some(_) => {
            let c = effective_config(common)?;
            (c.hbar, c.c_abs, c.variant)
        }
        None => (
            common.hbar.unwrap_or(1.0),
            common
                .cabs
                .ok_or_else(|| CliError::Usage("--cabs or --config is required".into()))?,
            common.variant.unwrap_or_default(),
        ),
    };
    let base = soliton_core::validate(
        UniverseConfig::new(hbar, c_abs, vec![ParticleSpec::free(m, 0.0)]).with_variant(variant),
    )?;
    let effective = json!({
        "hbar": hbar, "c_abs": c_abs, "m": m, "variant": variant, "n": range,
    });
    let hash = sha256_hex(effective.to_string().as_bytes());

    let ns: Vec<usize> = range.iter().collect();
    let rows = ns
        .par_iter()
        .map(|&n| {
            let point = machian_scaling(n, m, hbar, c_abs);
            let universe = base.with_particles(vec![ParticleSpec::free(m, 0.0); n])?;
            let sol = build_free_n_soliton(&universe, None)?;
            let energy = closed_form_energy(&Solution::Product(sol.clone()));
            Ok(MachianRow {
                n,
                s_sq: point.s_sq,
                phase_length: point.phase_length,
                internal_energy: point.internal_energy,
                constructed_s: sol.axes[0].s,
                constructed_internal_energy: energy.internal,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let width_gap = rows
        .iter()
        .map(|r| (r.constructed_s - r.s_sq.sqrt()).abs())
        .fold(0.0, f64::max);
    let energy_gap = rows
        .iter()
        .map(|r| rel_diff(r.constructed_internal_energy, r.internal_energy))
        .fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("width_abs_error", width_gap, 0.0),
        Check::at_most("internal_energy_relative_error", energy_gap, 1e-12),
    ];
    sink.write_csv(
        "machian.csv",
        &["n", "s2", "l_ph", "internal_energy"],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.s_sq.to_string(),
                r.phase_length.to_string(),
                r.internal_energy.to_string(),
            ]
        }),
    )?;
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks,
        results: json!({ "rows": to_value(&rows)? }),
    })
}

struct EvolveOptions {
    horizon: f64,
    dt: Option<f64>,
    linear: bool,
    record_every: usize,
    snapshot_every: Option<usize>,
    tol_deviation: f64,
    tol_norm: f64,
    tol_energy: f64,
}

fn product(universe: &UniverseF64) -> Result<SolitonSolution<f64>, CliError> {
    match build_solution(universe)? {
        Solution::Product(s) => Ok(s),
        Solution::Entangled(_) => Err(CliError::Usage(
            "time evolution supports product solutions only".into(),
        )),
    }
}

fn evolve_points(dims: usize) -> usize {
    if dims == 1 {
        1024
    } else {
        128
    }
}

fn trajectory_rows(tr: &Trajectory<f64>) -> impl Iterator<Item = Vec<String>> + '_ {
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    tr.points.iter().map(move |p| {
        vec![
            p.step.to_string(),
            p.t.to_string(),
            p.norm.to_string(),
            p.energy.to_string(),
            opt(p.deviation_linf),
            opt(p.deviation_l2),
            p.floor_fraction.to_string(),
        ]
    })
}

const TRAJECTORY_HEADER: [&str; 7] = [
    "step",
    "t",
    "norm",
    "energy",
    "deviation_linf",
    "deviation_l2",
    "floor_fraction",
];

fn state_rows(state: &EvolutionState<f64>) -> Vec<Vec<String>> {
    let grid = &state.grid;
    let dims = grid.dims();
    let mut idx = vec![0; dims];
    let mut x = vec![0.0; dims];
    (0..grid.len())
        .map(|k| {
            grid.point(k, &mut idx, &mut x);
            let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
            row.push(state.rho[k].to_string());
            row.push(state.phase[k].to_string());
            row
        })
        .collect()
}

fn write_state(
    sink: &mut OutputSink,
    name: &str,
    state: &EvolutionState<f64>,
) -> Result<(), CliError> {
    if !sink.enabled() {
        return Ok(());
    }
    let mut header: Vec<String> = (0..state.grid.dims()).map(|d| format!("x{d}")).collect();
    header.push("density".into());
    header.push("phase".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    sink.write_csv(name, &header, state_rows(state))
}

fn summary(tr: &Trajectory<f64>) -> Value {
    json!({
        "dt": tr.dt,
        "dt_bound": tr.dt_bound,
        "steps": tr.steps,
        "recorded": tr.points.len(),
        "norm_drift": tr.norm_drift(),
        "energy_drift": tr.energy_drift(),
        "max_deviation": tr.max_deviation(),
        "floor_saturated": tr.floor_saturated,
    })
}

/// Failed `reached_horizon` check plus the growth rate of the shortest grid
/// mode, for a run that produced non-finite values.
fn blowup_output(
    sol: &SolitonSolution<f64>,
    grid: &Grid<f64>,
    horizon: f64,
    err: DynamicsError<f64>,
    sink: &mut OutputSink,
) -> Result<(Vec<Check>, Value), CliError> {
    let DynamicsError::BlowupDetected {
        step,
        t,
        last_valid,
        trajectory,
    } = err
    else {
        return Err(err.into());
    };
    let h = grid
        .axes
        .iter()
        .map(|a| a.spacing())
        .fold(f64::INFINITY, f64::min);
    let ax = &sol.axes[0];
    let growth = grid_growth_rate(sol.hbar, ax.m, ax.c_abs, 2.0 * sol.a_sum(), h);
    sink.write_csv(
        "trajectory.csv",
        &TRAJECTORY_HEADER,
        trajectory_rows(&trajectory),
    )?;
    write_state(sink, "last_valid.csv", &last_valid)?;
    let checks = vec![Check::at_least("reached_horizon", t, horizon)];
    let results = json!({
        "blowup": { "step": step, "t": t, "grid_growth": to_value(&growth)? },
        "trajectory": summary(&trajectory),
    });
    Ok((checks, results))
}

fn evolve_cmd(
    common: &Common,
    opts: &EvolveOptions,
    sink: &mut OutputSink,
) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let sol = product(&universe)?;
    let variant = universe.variant();
    let grid = match common.grid_span {
        Some(span) => Grid::cube(
            sol.dims(),
            span,
            common.grid_points.unwrap_or(evolve_points(sol.dims())),
            &[],
        )?,
        None => grid_for(common, &sol, &[0.0], evolve_points(sol.dims()))?,
    };
    let mut params = EvolutionParams::for_field(&sol, variant, Potential::of_solution(&sol));
    params.dt = opts.dt;
    params.record_every = opts.record_every.max(1);
    params.snapshot_every = opts.snapshot_every;

    let single_free = sol.dims() == 1 && sol.axes[0].omega == 0.0;
    let linear_ref = (opts.linear && single_free).then(|| {
        let ax = &sol.axes[0];
        LinearGaussian::new(sol.hbar, ax.m, ax.s, ax.a, ax.b * ax.v)
    });
    if opts.linear {
        params = params.linear();
    }
    let (initial, boundary) = match (&linear_ref, opts.linear) {
        (Some(r), _) => (
            EvolutionState::from_field(r, &grid, 0.0, variant)?,
            Boundary::Analytic(r as &dyn WaveField<f64>),
        ),
        (None, true) => (
            EvolutionState::from_field(&sol, &grid, 0.0, variant)?,
            Boundary::Frozen,
        ),
        (None, false) => (
            EvolutionState::from_field(&sol, &grid, 0.0, variant)?,
            Boundary::Analytic(&sol as &dyn WaveField<f64>),
        ),
    };

    let (checks, results) = match evolve(initial, &params, boundary, opts.horizon) {
        Ok((last, tr)) => {
            let mut checks = vec![
                Check::at_most("norm_drift", tr.norm_drift(), opts.tol_norm),
                Check::at_most("energy_drift", tr.energy_drift(), opts.tol_energy),
            ];
            if let Some(d) = tr.max_deviation() {
                checks.insert(0, Check::at_most("deviation_linf", d, opts.tol_deviation));
            }
            sink.write_csv("trajectory.csv", &TRAJECTORY_HEADER, trajectory_rows(&tr))?;
            for s in &tr.snapshots {
                let step = (s.t / tr.dt).round() as usize;
                write_state(sink, &format!("snapshot_{step:07}.csv"), s)?;
            }
            write_state(sink, "final.csv", &last)?;
            (checks, json!({ "trajectory": summary(&tr) }))
        }
        Err(e) => blowup_output(&sol, &grid, opts.horizon, e, sink)?,
    };
    let mut results = results;
    results["linear"] = json!(opts.linear);
    results["reference"] = json!(if linear_ref.is_some() {
        "linear_gaussian"
    } else if opts.linear {
        "frozen"
    } else {
        "analytic"
    });
    Ok(CommandOutput {
        config_hash: Some(hash),
        checks,
        results,
    })
}

fn perturb(
    common: &Common,
    parameter: PerturbedParameter,
    relative: f64,
    horizon: f64,
    dt: Option<f64>,
    sink: &mut OutputSink,
) -> Result<CommandOutput, CliError> {
    let (universe, hash) = load_universe(common)?;
    let sol = product(&universe)?;
    let grid = match common.grid_span {
        Some(span) => Grid::cube(
            sol.dims(),
            span,
            common.grid_points.unwrap_or(evolve_points(sol.dims())),
            &[],
        )?,
        None => grid_for(common, &sol, &[0.0], evolve_points(sol.dims()))?,
    };
    let mut params = EvolutionParams::for_field(&sol, universe.variant(), Potential::none(1));
    params.dt = dt;
    match perturb_and_track(&sol, parameter, relative, horizon, &grid, &params) {
        Ok(track) => {
            let mut checks = Vec::new();
            if let (Some(expect), Some(&d0)) = (track.initial_mismatch, track.deviation.first()) {
                checks.push(Check::at_most(
                    "initial_mismatch_relative_error",
                    rel_diff(d0, expect),
                    1e-6,
                ));
            }
            sink.write_csv(
                "deviation.csv",
                &["t", "deviation_l2"],
                track
                    .times
                    .iter()
                    .zip(&track.deviation)
                    .map(|(t, d)| vec![t.to_string(), d.to_string()]),
            )?;
            let results = json!({
                "parameter": parameter,
                "relative": relative,
                "initial_mismatch": track.initial_mismatch,
                "final_deviation": track.deviation.last(),
                "trajectory": summary(&track.trajectory),
            });
            Ok(CommandOutput {
                config_hash: Some(hash),
                checks,
                results,
            })
        }
        Err(DynamicsError::Unsupported(msg)) => Err(CliError::Usage(msg)),
        Err(e) => {
            let (checks, mut results) = blowup_output(&sol, &grid, horizon, e, sink)?;
            results["parameter"] = json!(parameter);
            results["relative"] = json!(relative);
            Ok(CommandOutput {
                config_hash: Some(hash),
                checks,
                results,
            })
        }
    }
}
