use epiopt::dynamics::{simulate_phase, ModelParams, DEFAULT_DT};
use epiopt::functionals::{activity_total, feasibility_check, log_prevalence_range, Walls};
use epiopt::multipop::{
    coordinated_bounds, formation_spacing, scenario_coordinated, scenario_v_formation,
    CouplingMatrix,
};
use epiopt::synth::{gap_for_period, steady_activity, wall_cycle_policy, Direction, WallStart};
use epiopt::utility::{
    el_speed_profile, el_trajectory, tune_ab, velocity_grid, Utility, UtilityVariant,
};

#[test]
fn wall_cycles_beat_steady_for_every_period() {
    for period in [3.0, 6.0, 12.0, 24.0] {
        let p = ModelParams::reference(period);
        let gap = gap_for_period(&p, period).unwrap();
        let walls = Walls::new(-gap, 0.0).unwrap();
        for start in [WallStart::Upper, WallStart::Lower] {
            let cycle = wall_cycle_policy(&p, &walls, start).unwrap();
            assert!((cycle.period() - period).abs() < 1e-8, "period {period}");
            let traj = simulate_phase(&p, &cycle.control, cycle.init, DEFAULT_DT).unwrap();
            assert!(feasibility_check(&traj, &p, Some(&walls), 1e-3).passed());
            let (lo, hi) = log_prevalence_range(&traj, 1.0);
            assert!((lo + gap).abs() < 1e-4 && hi.abs() < 1e-4, "{lo} {hi}");
            assert!(activity_total(&cycle.control) > steady_activity(&p));
        }
    }
}

#[test]
fn gap_grows_with_period() {
    let p = ModelParams::reference(1.0);
    let gaps: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&t| gap_for_period(&p, t).unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn partial_cycles_fill_the_horizon() {
    let p = ModelParams::reference(20.0);
    let gap = gap_for_period(&p.with_horizon(12.0), 12.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let cycle = wall_cycle_policy(&p, &walls, WallStart::Upper).unwrap();
    assert!((cycle.control.horizon() - 20.0).abs() < 1e-12);
    let traj = simulate_phase(&p, &cycle.control, cycle.init, DEFAULT_DT).unwrap();
    assert!(feasibility_check(&traj, &p, Some(&walls), 1e-3).passed());
}

#[test]
fn smooth_turnarounds_approach_bang_bang_as_curvature_vanishes() {
    let p = ModelParams::reference(36.0);
    let gap = gap_for_period(&p.with_horizon(12.0), 12.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let grid = velocity_grid(&p, 401);
    let mut last_fraction = 0.0;
    let mut last_period = f64::INFINITY;
    for c in [0.1, 0.01, 0.001] {
        let u = Utility::new(UtilityVariant::ConcaveQuadratic { c }, &p).unwrap();
        let w = tune_ab(&u, &p).unwrap();
        let up = el_speed_profile(&u, &w, &p, Direction::Up, &grid).unwrap();
        let down = el_speed_profile(&u, &w, &p, Direction::Down, &grid).unwrap();
        let fraction = 0.5 * (up.clamped_fraction() + down.clamped_fraction());
        let run = el_trajectory(&up, &down, &p, &walls, DEFAULT_DT).unwrap();
        assert!(fraction > last_fraction, "c = {c}");
        assert!(
            run.period < last_period && run.period > 12.0 - 1e-6,
            "c = {c}: {}",
            run.period
        );
        last_fraction = fraction;
        last_period = run.period;
    }
    assert!(last_fraction > 0.95);
}

#[test]
fn formation_spacing_is_the_widest_feasible() {
    let p = ModelParams::new(3.0, 0.25, 2.25, 12.0).unwrap();
    let chain = CouplingMatrix::chain(7, 1.0);
    let d = formation_spacing(7, &p, &chain, 10.0).unwrap();
    assert!((d - 1.375f64.acosh()).abs() < 1e-8);
    assert!(scenario_v_formation(7, d, &p, &chain).is_ok());
    assert!(scenario_v_formation(7, d + 1e-3, &p, &chain).is_err());
}

#[test]
fn formation_holds_its_shape() {
    let p = ModelParams::new(3.0, 0.25, 2.25, 24.0).unwrap();
    let chain = CouplingMatrix::chain(5, 1.0);
    let d = formation_spacing(5, &p, &chain, 10.0).unwrap();
    let s = scenario_v_formation(5, 0.5 * d, &p, &chain).unwrap();
    let traj = s.simulate(DEFAULT_DT).unwrap();
    let first = traj.first();
    let last = traj.last();
    for k in 0..5 {
        assert!((last.velocity[k] - 3.0).abs() < 1e-9);
        let shift = last.position[k] - first.position[k] - 3.0 * 24.0;
        assert!(shift.abs() < 1e-6, "population {k}: {shift}");
    }
}

#[test]
fn coordinated_populations_move_together() {
    let p = ModelParams::new(3.0, 0.25, 2.25, 24.0).unwrap();
    let chain = CouplingMatrix::chain(4, 1.0);
    let eff = coordinated_bounds(&p, &chain).unwrap();
    assert!((eff.beta_min - 2.25).abs() < 1e-12 && (eff.beta_max - 3.25).abs() < 1e-12);
    let gap = gap_for_period(&eff.with_horizon(8.0), 8.0).unwrap();
    let walls = Walls::new(-gap, 0.0).unwrap();
    let co = scenario_coordinated(4, &p, &chain, &walls).unwrap();
    let traj = co.scenario.simulate(DEFAULT_DT).unwrap();
    for s in traj.points() {
        let spread = s.position.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - s.position.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(spread < 1e-9);
        for (k, &b) in s.beta.iter().enumerate() {
            assert!(
                (p.beta_min - 1e-12..=p.beta_max + 1e-12).contains(&b),
                "population {k}: {b}"
            );
        }
    }
}
