//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Reference values marked "oracle" were computed independently with an
//! adaptive scipy integrator (event location on V, durations found by Brent's
//! method) and are frozen here.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use epiopt::control::PiecewiseControl;
use epiopt::dynamics::{phi_inv, simulate_phase, ModelParams, PhaseState, DEFAULT_DT};
use epiopt::flow::propagate;
use epiopt::functionals::{
    activity_total, activity_via_v, boundary_triple_of, feasibility_check, log_prevalence_range,
    BoundaryTriple, Walls,
};
use epiopt::multipop::{
    activity_multi, boundary_constant, coordinated_bounds, formation_spacing, objective_split,
    scenario_coordinated, scenario_v_formation, simulate_multi, CouplingMatrix, MultiPolicy,
    MultiState,
};
use epiopt::oracle::{oracle_candidates, oracle_extremes, OracleConfig, Structure};
use epiopt::synth::{
    constant_policy, gap_for_period, single_switch_policy, wall_cycle_policy, Direction, WallStart,
};
use epiopt::utility::{
    el_speed_profile, el_trajectory, fourier_worst_check, max_crossings_per_excursion,
    objective_decomposed, rise_time, tune_ab, useful_total, velocity_grid, Utility, UtilityVariant,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// Fixed points.
const FIXED_POINT_TOL: f64 = 1e-12;

// Reference cycle, period 12 (oracle).
const CYCLE_GAP: f64 = 2.60653712;
const CYCLE_MAX_TIME: f64 = 5.71278303;
const CYCLE_ACTIVITY: f64 = 14.42556605;
const CYCLE_ORACLE_TOL: f64 = 1e-5;
const CYCLE_GAP_RANGE: (f64, f64) = (2.5, 2.7);
const CYCLE_MAX_TIME_TARGET: (f64, f64) = (5.712, 0.02);
const CYCLE_MIN_TIME_TARGET: (f64, f64) = (6.288, 0.02);
const CYCLE_ACTIVITY_TARGET: (f64, f64) = (14.424, 0.05);
const CYCLE_RATIO_TARGET: (f64, f64) = (1.20, 0.01);
const CYCLE_EXP_GAP_RANGE: (f64, f64) = (12.0, 15.0);
const CYCLE_BUDGET_S: f64 = 5.0;

// Oracle suites.
const ACTIVITY_TOL: f64 = 1e-3;
const SUITE_BUDGET_S: f64 = 60.0;
/// Targets closer than this to v_min or v_max are ill-conditioned for shooting.
const RAIL_GAP: f64 = 1e-9;

// Coupled populations.
const MULTI_IDENTITY_TOL: f64 = 1e-4;
const COSH_TOL: f64 = 1e-8;
const CHAIN_RATIO_ORACLE: f64 = 2.016633;
const CHAIN_COORDINATED_ORACLE: f64 = 326.694488;
const CHAIN_ORACLE_TOL: f64 = 1e-4;
const FORMATION_DRIFT_TOL: f64 = 1e-6;

// Utility.
const SHARE_TOL: f64 = 0.01;
const DECOMPOSITION_TOL: f64 = 1e-4;
const LINEAR_TOL: f64 = 1e-12;
const RISE_BAND: (f64, f64) = (0.5, 4.0);
const FOURIER_TOL: f64 = 1e-9;
const FOURIER_ORACLE_TOL: f64 = 1e-8;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(x: f64, (target, tol): (f64, f64)) -> bool {
    (x - target).abs() <= tol
}

fn c1_fixed_points() -> Outcome {
    let lo = phi_inv(0.25, 1.0).unwrap();
    let hi = phi_inv(2.25, 1.0).unwrap();
    let pass = (lo - 0.5).abs() <= FIXED_POINT_TOL && (hi - 1.5).abs() <= FIXED_POINT_TOL;
    outcome(pass, format!("phi_inv(0.25) = {lo}, phi_inv(2.25) = {hi}"))
}

fn c2_reference_cycle() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::reference(12.0);
    let gap = gap_for_period(&p, 12.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let cycle = wall_cycle_policy(&p, &walls, WallStart::Upper).unwrap();
    let traj = simulate_phase(&p, &cycle.control, cycle.init, DEFAULT_DT).unwrap();
    let feasible = feasibility_check(&traj, &p, Some(&walls), 1e-3).passed();
    let activity = activity_total(&cycle.control);
    let t_max = cycle.control.time_at(p.beta_max);
    let t_min = cycle.control.time_at(p.beta_min);
    let ratio = activity / activity_total(&constant_policy(1.0, &p).unwrap());
    let closes =
        (traj.last().velocity - 1.0).abs() < 1e-6 && traj.last().log_prevalence(1.0).abs() < 1e-6;
    let elapsed = start.elapsed().as_secs_f64();
    let oracle = (gap - CYCLE_GAP).abs() < CYCLE_ORACLE_TOL
        && (t_max - CYCLE_MAX_TIME).abs() < CYCLE_ORACLE_TOL
        && (activity - CYCLE_ACTIVITY).abs() < CYCLE_ORACLE_TOL;
    let pass = (CYCLE_GAP_RANGE.0..=CYCLE_GAP_RANGE.1).contains(&gap)
        && within(t_max, CYCLE_MAX_TIME_TARGET)
        && within(t_min, CYCLE_MIN_TIME_TARGET)
        && within(activity, CYCLE_ACTIVITY_TARGET)
        && within(ratio, CYCLE_RATIO_TARGET)
        && (CYCLE_EXP_GAP_RANGE.0..=CYCLE_EXP_GAP_RANGE.1).contains(&gap.exp())
        && feasible
        && closes
        && oracle
        && elapsed < CYCLE_BUDGET_S;
    outcome(
        pass,
        format!(
            "D = {gap:.5}, e^D = {:.2}, beta_max time {t_max:.4}, beta_min time {t_min:.4}, A = {activity:.4}, \
             ratio {ratio:.4}, walls respected {feasible}, closes {closes}, oracle match {oracle}, {elapsed:.2} s",
            gap.exp()
        ),
    )
}

fn switch_control(p: &ModelParams, n: usize, switches: &[usize], first: f64) -> PiecewiseControl {
    let mut bp = vec![0.0];
    bp.extend(switches.iter().map(|&i| p.horizon * i as f64 / n as f64));
    bp.push(p.horizon);
    let other = if first == p.beta_min {
        p.beta_max
    } else {
        p.beta_min
    };
    let values = (0..bp.len() - 1)
        .map(|i| if i % 2 == 0 { first } else { other })
        .collect();
    PiecewiseControl::new(bp, values).unwrap()
}

fn c3_single_switch_suite() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::reference(12.0);
    let config = OracleConfig {
        grid_n: 12,
        max_switches: 3,
        ..OracleConfig::default()
    };
    let run_from = |c: &PiecewiseControl| {
        let tr = simulate_phase(
            &p,
            c,
            PhaseState {
                velocity: 1.0,
                position: 0.0,
            },
            DEFAULT_DT,
        )
        .unwrap();
        boundary_triple_of(&tr)
    };
    let up = switch_control(&p, 12, &[3, 9], p.beta_min);
    let down = switch_control(&p, 12, &[4, 8], p.beta_max);
    let targets = [
        BoundaryTriple::new(1.0, 1.0, 12.0).unwrap(),
        BoundaryTriple::new(0.75, 0.75, 9.0).unwrap(),
        BoundaryTriple::new(1.25, 1.25, 15.0).unwrap(),
        run_from(&up),
        run_from(&down),
    ];
    // the derived targets must agree with the closed-form flow
    let mut ok = [&up, &down].iter().zip(&targets[3..]).all(|(c, t)| {
        let (v, s) = propagate(c, 1.0, 1.0);
        (v - t.v_end).abs() < 1e-6 && (s - t.v_integral).abs() < 1e-6
    });
    let mut lines = Vec::new();
    for t in &targets {
        let run = match oracle_extremes(&p, t, &config, None) {
            Ok(r) => r,
            Err(e) => {
                ok = false;
                lines.push(format!(
                    "({:.3},{:.3},{:.3}): {e}",
                    t.v_start, t.v_end, t.v_integral
                ));
                continue;
            }
        };
        let synth = activity_total(&single_switch_policy(&p, t, DEFAULT_DT).unwrap());
        let synth_ok = run
            .survivors
            .iter()
            .all(|s| synth >= s.activity - ACTIVITY_TOL);
        let constant_form =
            t.v_start == t.v_end && (t.v_integral - t.v_start * p.horizon).abs() < 1e-12;
        let constant_ok = !constant_form || {
            let c = activity_total(&constant_policy(t.v_start, &p).unwrap());
            run.survivors.iter().all(|s| c <= s.activity + ACTIVITY_TOL)
        };
        let structure = run.max.structure();
        let class_ok = matches!(
            structure,
            Structure::Constant | Structure::SingleSwitchUp | Structure::SingleSwitchDown
        );
        ok &= synth_ok && constant_ok && class_ok;
        lines.push(format!(
            "({:.3},{:.3},{:.3}): {} survivors, max {:.3} {structure}, single-switch {synth:.3}",
            t.v_start,
            t.v_end,
            t.v_integral,
            run.survivors.len(),
            run.max.activity
        ));
    }

    // every enumerated candidate, from three starting velocities, against the
    // single-switch policy synthesized for its own boundary data
    let candidates = oracle_candidates(&p, &config).unwrap();
    let (mut checked, mut skipped, mut worst) = (0usize, 0usize, f64::NEG_INFINITY);
    for v0 in [1.0, 0.6, 1.4] {
        for c in &candidates {
            let (v_end, integral) = propagate(&c.control, 1.0, v0);
            if (v_end - p.v_max()).abs() < RAIL_GAP || (v_end - p.v_min()).abs() < RAIL_GAP {
                skipped += 1;
                continue;
            }
            let t = BoundaryTriple::new(v0, v_end, integral).unwrap();
            match single_switch_policy(&p, &t, DEFAULT_DT) {
                Ok(s) => {
                    checked += 1;
                    worst = worst.max(activity_total(&c.control) - activity_total(&s));
                }
                Err(_) => ok = false,
            }
        }
    }
    ok &= worst <= ACTIVITY_TOL;
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < SUITE_BUDGET_S;
    outcome(
        ok,
        format!(
            "{}; sweep: {checked} candidate triples, worst excess over single-switch {worst:.2e} \
             ({skipped} pinned to a rest velocity skipped); {elapsed:.1} s",
            lines.join("; ")
        ),
    )
}

fn c4_wall_suite() -> Outcome {
    let start = Instant::now();
    let p = ModelParams::reference(24.0);
    let config = OracleConfig {
        grid_n: 24,
        max_switches: 5,
        ..OracleConfig::default()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for switches in [[6, 11, 17, 23], [6, 12, 18, 23], [7, 10, 15, 23]] {
        let c = switch_control(&p, 24, &switches, p.beta_min);
        let tr = simulate_phase(
            &p,
            &c,
            PhaseState {
                velocity: 1.0,
                position: 0.0,
            },
            DEFAULT_DT,
        )
        .unwrap();
        let (lo, hi) = log_prevalence_range(&tr, 1.0);
        let walls = Walls::new(lo, hi).unwrap();
        let target = boundary_triple_of(&tr);
        let run = oracle_extremes(&p, &target, &config, Some(&walls)).unwrap();
        let ties: Vec<_> = run
            .survivors
            .iter()
            .filter(|s| s.activity >= run.max.activity - 1e-9)
            .collect();
        let all_alternating = ties.iter().all(|s| s.structure() == Structure::Alternating);
        let touching = ties
            .iter()
            .filter(|s| s.touches_both(&walls, config.wall_tol))
            .count();
        let max_touches = run.max.touches_both(&walls, config.wall_tol);
        let cycle = wall_cycle_policy(&p, &walls, WallStart::Upper).unwrap();
        let cycle_traj = simulate_phase(&p, &cycle.control, cycle.init, DEFAULT_DT).unwrap();
        let cycle_feasible = feasibility_check(&cycle_traj, &p, Some(&walls), 1e-3).passed();
        let synth = activity_total(&cycle.control);
        let beats = synth >= run.max.activity - ACTIVITY_TOL;
        ok &= all_alternating && max_touches && cycle_feasible && beats;
        lines.push(format!(
            "walls [{lo:.3}, {hi:.3}]: {} survivors, max {:.3} {} {:?} touches both {max_touches} \
             ({touching}/{} tied maxima touch), wall cycle {synth:.4} feasible {cycle_feasible}",
            run.survivors.len(),
            run.max.activity,
            run.max.structure(),
            run.max.candidate.switches,
            ties.len()
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < SUITE_BUDGET_S;
    outcome(ok, format!("{}; {elapsed:.1} s", lines.join("; ")))
}

fn random_control(rng: &mut StdRng, p: &ModelParams) -> PiecewiseControl {
    let pieces = rng.gen_range(1..=4);
    let mut cuts: Vec<f64> = (1..pieces)
        .map(|_| rng.gen_range(0.05..0.95) * p.horizon)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut bp = vec![0.0];
    bp.extend(cuts);
    bp.push(p.horizon);
    bp.dedup();
    let values = (0..bp.len() - 1)
        .map(|_| rng.gen_range(p.beta_min..=p.beta_max))
        .collect();
    PiecewiseControl::new(bp, values).unwrap()
}

fn c5_multi_identities() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let p = ModelParams::reference(6.0);
    let (mut worst_eq7, mut worst_cosh, mut worst_split) = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    for run in 0..20 {
        let n = rng.gen_range(2..=5);
        let symmetric = run % 2 == 0;
        let mut rows = vec![vec![0.0; n]; n];
        for j in 0..n {
            for k in 0..n {
                if j != k && (k > j || !symmetric) {
                    rows[j][k] = rng.gen_range(0.0..1.0);
                }
            }
        }
        if symmetric {
            for j in 0..n {
                for k in 0..j {
                    rows[j][k] = rows[k][j];
                }
            }
        }
        let coupling = CouplingMatrix::new(rows).unwrap();
        let policy = MultiPolicy {
            controls: (0..n).map(|_| random_control(&mut rng, &p)).collect(),
        };
        let init = MultiState {
            velocity: (0..n).map(|_| rng.gen_range(0.6..1.4)).collect(),
            position: (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        };
        let params = vec![p; n];
        let traj = match simulate_multi(&coupling, &params, &policy, &init, DEFAULT_DT) {
            Ok(t) => t,
            Err(_) => {
                ok = false;
                continue;
            }
        };
        let eq7 = activity_multi(&traj, &coupling, &params);
        worst_eq7 = worst_eq7.max((eq7 - policy.activity()).abs());
        let split = objective_split(&traj, &coupling);
        if symmetric {
            let cosh = split.coordination_cosh.expect("symmetric coupling");
            worst_cosh = worst_cosh.max((cosh - split.coordination).abs());
            let rebuilt = boundary_constant(&traj, &params) + split.oscillation - cosh;
            worst_split = worst_split.max((rebuilt - eq7).abs());
        } else {
            ok &= split.coordination_cosh.is_none();
        }
    }

    // one population, bit for bit
    let single = random_control(&mut rng, &p);
    let init = PhaseState {
        velocity: 0.8,
        position: 0.1,
    };
    let phase = simulate_phase(&p, &single, init, DEFAULT_DT).unwrap();
    let multi = simulate_multi(
        &CouplingMatrix::zeros(1),
        &[p],
        &MultiPolicy {
            controls: vec![single.clone()],
        },
        &MultiState {
            velocity: vec![0.8],
            position: vec![0.1],
        },
        DEFAULT_DT,
    )
    .unwrap();
    let reduces = multi.population(0) == phase
        && activity_multi(&multi, &CouplingMatrix::zeros(1), &[p]) == activity_via_v(&phase, 1.0);

    ok &= worst_eq7 <= MULTI_IDENTITY_TOL
        && worst_cosh <= COSH_TOL
        && worst_split <= MULTI_IDENTITY_TOL
        && reduces;
    outcome(
        ok,
        format!(
            "20 runs: max |A_coupled - sum int beta| = {worst_eq7:.2e}, max |cosh - exp form| = {worst_cosh:.2e}, \
             max |constant + oscillation - coordination - A| = {worst_split:.2e}, n = 1 bitwise {reduces}"
        ),
    )
}

fn c6_formation_vs_coordinated() -> Outcome {
    let p = ModelParams::new(3.0, 0.25, 2.25, 36.0).unwrap();
    let chain = CouplingMatrix::chain(7, 1.0);
    let spacing = formation_spacing(7, &p, &chain, 10.0).unwrap();
    let formation = scenario_v_formation(7, spacing, &p, &chain).unwrap();
    let ftraj = formation.simulate(DEFAULT_DT).unwrap();
    let drift = ftraj
        .points()
        .iter()
        .flat_map(|s| (1..7).map(move |k| (s.position[k] - s.position[k - 1]).abs()))
        .map(|gap| (gap - spacing).abs())
        .fold(0.0, f64::max);
    let a_form = formation.policy.activity();

    let effective = coordinated_bounds(&p, &chain).unwrap();
    let gap = gap_for_period(&effective.with_horizon(12.0), 12.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let co = scenario_coordinated(7, &p, &chain, &walls).unwrap();
    let ctraj = co.scenario.simulate(DEFAULT_DT).unwrap();
    let spread = ctraj
        .points()
        .iter()
        .map(|s| {
            let lo = s.position.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = s.position.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max);
    let a_coord = co.scenario.policy.activity();
    let ratio = a_coord / a_form;
    let oracle = (ratio - CHAIN_RATIO_ORACLE).abs() < CHAIN_ORACLE_TOL
        && (a_coord - CHAIN_COORDINATED_ORACLE).abs() < 1e-3;
    let pass = ratio > 2.0 && drift < FORMATION_DRIFT_TOL && spread < 1e-8 && oracle;
    outcome(
        pass,
        format!(
            "spacing {spacing:.6}, A(formation) = {a_form:.4}, A(coordinated) = {a_coord:.4}, ratio {ratio:.5}, \
             formation drift {drift:.1e}, coordinated spread {spread:.1e}, oracle match {oracle}"
        ),
    )
}

fn c7_shares() -> Outcome {
    let u = Utility::new(
        UtilityVariant::QuadraticInverse { a1: 0.75, a2: 0.25 },
        &ModelParams::reference(12.0),
    )
    .unwrap();
    let s1 = u.quadratic_share(1.0).unwrap();
    let s_hi = u.quadratic_share(2.25).unwrap();
    let s_lo = u.quadratic_share(0.25).unwrap();
    let pass = (s1 - 0.25).abs() < 1e-12
        && within(s_hi, (0.38, SHARE_TOL))
        && within(s_lo, (0.09, SHARE_TOL));
    outcome(
        pass,
        format!(
            "share at 1: {:.2}%, at 2.25: {:.2}%, at 0.25: {:.2}%",
            100.0 * s1,
            100.0 * s_hi,
            100.0 * s_lo
        ),
    )
}

fn c8_decomposition() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    let p = ModelParams::reference(12.0);
    let specs = [
        UtilityVariant::Linear,
        UtilityVariant::QuadraticInverse { a1: 0.75, a2: 0.25 },
        UtilityVariant::ConcaveQuadratic { c: 0.1 },
    ];
    let utilities: Vec<Utility> = specs
        .iter()
        .map(|v| Utility::new(*v, &p).unwrap())
        .collect();
    let mut worst = [0.0f64; 3];
    let (mut linear_a, mut linear_v) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let c = random_control(&mut rng, &p);
        let v0 = rng.gen_range(0.6..1.4);
        let tr = simulate_phase(
            &p,
            &c,
            PhaseState {
                velocity: v0,
                position: 0.0,
            },
            DEFAULT_DT,
        )
        .unwrap();
        for (w, u) in worst.iter_mut().zip(&utilities) {
            let d = objective_decomposed(&tr, u);
            *w = w.max((d.total() - useful_total(&c, u)).abs());
        }
        let lin = &utilities[0];
        linear_a = linear_a.max((useful_total(&c, lin) - activity_total(&c)).abs());
        linear_v =
            linear_v.max((objective_decomposed(&tr, lin).total() - activity_via_v(&tr, 1.0)).abs());
    }
    let pass =
        worst.iter().all(|&w| w <= DECOMPOSITION_TOL) && linear_a == 0.0 && linear_v <= LINEAR_TOL;
    outcome(
        pass,
        format!(
            "max |U - parts|: linear {:.2e}, quadratic-inverse {:.2e}, concave-quadratic {:.2e}; \
             linear U vs A {linear_a:.1e}, linear parts vs velocity form {linear_v:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn c9_smooth_turnarounds() -> Outcome {
    let base = ModelParams::reference(36.0);
    let gap = gap_for_period(&base.with_horizon(12.0), 12.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let u = Utility::new(UtilityVariant::ConcaveQuadratic { c: 0.1 }, &base).unwrap();
    let weights = tune_ab(&u, &base).unwrap();
    let grid = velocity_grid(&base, 401);
    let up = el_speed_profile(&u, &weights, &base, Direction::Up, &grid).unwrap();
    let down = el_speed_profile(&u, &weights, &base, Direction::Down, &grid).unwrap();
    let first = el_trajectory(&up, &down, &base, &walls, DEFAULT_DT).unwrap();
    // three whole cycles, so the boundary data match the steady path
    let p = base.with_horizon(3.0 * first.period);
    let run = el_trajectory(&up, &down, &p, &walls, DEFAULT_DT).unwrap();
    let rise = rise_time(&run.control, &p);
    let values = run.control.values();
    let b_lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let b_hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let in_bounds = b_lo >= p.beta_min - 1e-12 && b_hi <= p.beta_max + 1e-12;
    let crossings = (1..200)
        .map(|i| p.v_min() + (p.v_max() - p.v_min()) * i as f64 / 200.0)
        .map(|level| max_crossings_per_excursion(&run.trajectory, p.gamma, level))
        .max()
        .unwrap_or(0);
    let (lo, hi) = log_prevalence_range(&run.trajectory, p.gamma);
    let walls_ok = lo >= walls.lower - 1e-3 && hi <= walls.upper + 1e-3;
    let triple = boundary_triple_of(&run.trajectory);
    let matched = (triple.v_end - 1.0).abs() < 1e-3 && (triple.v_integral - p.horizon).abs() < 1e-3;
    let useful = useful_total(&run.control, &u);
    let steady = useful_total(&PiecewiseControl::constant(1.0, p.horizon).unwrap(), &u);
    let pass = rise.is_some_and(|r| (RISE_BAND.0..=RISE_BAND.1).contains(&r))
        && in_bounds
        && crossings <= 2
        && walls_ok
        && matched
        && useful > steady;
    outcome(
        pass,
        format!(
            "rise time {:.3}, beta in [{b_lo:.4}, {b_hi:.4}], max crossings per excursion {crossings}, \
             log I in [{lo:.4}, {hi:.4}], period {:.4}, U = {useful:.4} vs steady {steady:.4} over {:.3}",
            rise.unwrap_or(f64::NAN),
            first.period,
            p.horizon
        ),
    )
}

/// ΔU for u(x) = x − c·x², γ = 1, V = 1 + a·sin(ωt) over whole modes.
fn fourier_closed_form(horizon: f64, c: f64, amplitude: f64, wavelength: f64) -> f64 {
    let a2 = amplitude * amplitude;
    let w = 2.0 * PI / wavelength;
    horizon * (a2 / 2.0 - c * (3.0 * a2 + 3.0 * a2 * a2 / 8.0) - c * a2 * w * w / 2.0)
}

fn c10_fourier() -> Outcome {
    let (horizon, c, v) = (36.0, 0.1, 1.0);
    let p = ModelParams::reference(horizon);
    let u = Utility::new(UtilityVariant::ConcaveQuadratic { c }, &p).unwrap();
    let amplitudes: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
    let threshold =
        epiopt::utility::wavelength_threshold(&u, &p, v, &amplitudes, horizon, 60, FOURIER_TOL)
            .unwrap();
    let m_max = (horizon / threshold).round() as usize;

    let mut rng = StdRng::seed_from_u64(0x5eed_0010);
    let (mut feasible, mut attempts) = (0usize, 0usize);
    let (mut worst, mut oracle_gap) = (f64::INFINITY, 0.0f64);
    while feasible < 50 && attempts < 1000 {
        attempts += 1;
        let m = rng.gen_range(1..=m_max);
        let wavelength = horizon / m as f64;
        let amplitude = rng.gen_range(0.0..0.2) + 1e-3;
        if let Ok(d) = fourier_worst_check(&u, &p, v, wavelength, amplitude, horizon) {
            feasible += 1;
            worst = worst.min(d);
            oracle_gap =
                oracle_gap.max((d - fourier_closed_form(horizon, c, amplitude, wavelength)).abs());
        }
    }
    let short = (m_max + 1..=60).find_map(|m| {
        let wavelength = horizon / m as f64;
        fourier_worst_check(&u, &p, v, wavelength, 0.2, horizon)
            .ok()
            .filter(|&d| d < 0.0)
            .map(|d| (wavelength, d))
    });
    // analytic crossover at the largest amplitude: ω² = 4 − 0.75·a²
    let crossover = 2.0 * PI / (4.0 - 0.75 * 0.04f64).sqrt();
    let consistent = threshold >= crossover && horizon / ((m_max + 1) as f64) < crossover;
    let pass = feasible == 50
        && worst >= -FOURIER_TOL
        && short.is_some()
        && oracle_gap < FOURIER_ORACLE_TOL
        && consistent;
    let (sw, sd) = short.unwrap_or((f64::NAN, f64::NAN));
    outcome(
        pass,
        format!(
            "W* = {threshold:.4} (analytic crossover {crossover:.4}), {feasible} feasible draws, min dU = {worst:.3e}, \
             closed-form gap {oracle_gap:.1e}; wavelength {sw:.4} gives dU = {sd:.4e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("fixed points", c1_fixed_points),
        ("reference wall cycle", c2_reference_cycle),
        ("single-switch oracle suite", c3_single_switch_suite),
        ("wall oracle suite", c4_wall_suite),
        ("coupled-population identities", c5_multi_identities),
        ("formation vs coordinated", c6_formation_vs_coordinated),
        ("quadratic transmission shares", c7_shares),
        ("useful-activity decomposition", c8_decomposition),
        ("smooth turnarounds", c9_smooth_turnarounds),
        ("slow-mode perturbations", c10_fourier),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        if !result.pass {
            failed += 1;
        }
        println!("{tag} [{:>2}] {name}: {}", i + 1, result.detail);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
