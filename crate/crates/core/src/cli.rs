//! Config-driven experiments behind the `epiopt` binary.
//!
//! A config is a JSON object with an `experiment` field naming one of
//! `simulate`, `synthesize`, `oracle`, `multipop`, `utility` or `compare`,
//! an optional `model` block and an optional `dt`. Each run writes
//! `timeseries.csv` and `summary.json`; the summary echoes the resolved config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::control::PiecewiseControl;
use crate::dynamics::{
    simulate_ei, simulate_phase, EIState, ModelParams, PhaseState, Trajectory, DEFAULT_DT,
};
use crate::error::Error;
use crate::functionals::{
    activity_total, activity_via_v, boundary_triple_of, feasibility_check, log_prevalence_range,
    BoundaryTriple, Walls, DEFAULT_WALL_TOL,
};
use crate::multipop::{
    activity_multi, coordinated_bounds, formation_spacing, objective_split, scenario_coordinated,
    scenario_v_formation, simulate_multi, CouplingMatrix, MultiPolicy, MultiState, MultiTrajectory,
    Scenario,
};
use crate::oracle::{oracle_extremes, OracleConfig};
use crate::synth::{
    constant_policy, gap_for_period, single_switch_policy, steady_activity, wall_cycle_policy,
    Direction, WallStart,
};
use crate::utility::{
    el_speed_profile, el_trajectory, fourier_worst_check, rise_time, tune_ab, useful_total,
    velocity_grid, Utility, UtilityVariant,
};

/// Largest spacing searched when a formation spacing is not given.
const MAX_FORMATION_SPACING: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] Error),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for config and validation errors, 3 for numeric failures, 4 for
    /// infeasible targets, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Model(e) => match e {
                Error::InvalidParameter { .. }
                | Error::InvalidControl(_)
                | Error::DimensionMismatch { .. } => 2,
                Error::Numeric(_) | Error::Degenerate(_) | Error::SpacingDivergence { .. } => 3,
                Error::Infeasible { .. } | Error::NoMatchedCandidates => 4,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    Simulate {
        control: ControlSpec,
        #[serde(default)]
        init: InitSpec,
        #[serde(default)]
        walls: Option<Walls>,
    },
    Synthesize {
        policy: PolicySpec,
    },
    Oracle {
        target: BoundaryTriple,
        #[serde(default)]
        walls: Option<Walls>,
        #[serde(default)]
        oracle: OracleConfig,
    },
    Multipop {
        scenario: MultiSpec,
    },
    Utility {
        utility: UtilityVariant,
        #[serde(default)]
        walls: Option<Walls>,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        #[serde(default)]
        fourier: Option<FourierSpec>,
    },
    Compare {
        scenarios: Vec<NamedConfig>,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::Synthesize { .. } => "synthesize",
            Experiment::Oracle { .. } => "oracle",
            Experiment::Multipop { .. } => "multipop",
            Experiment::Utility { .. } => "utility",
            Experiment::Compare { .. } => "compare",
        }
    }
}

fn default_grid_points() -> usize {
    401
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSpec {
    Constant {
        value: f64,
    },
    /// `(duration, value)` pairs covering the horizon.
    Segments {
        segments: Vec<(f64, f64)>,
    },
    Schedule {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ControlSpec {
    fn build(&self, horizon: f64, field: &str) -> crate::Result<PiecewiseControl> {
        let control = match self {
            ControlSpec::Constant { value } => PiecewiseControl::constant(*value, horizon)?,
            ControlSpec::Segments { segments } => {
                PiecewiseControl::from_segments(segments.iter().copied())?
            }
            ControlSpec::Schedule {
                breakpoints,
                values,
            } => PiecewiseControl::new(breakpoints.clone(), values.clone())?,
        };
        if (control.horizon() - horizon).abs() > 1e-9 * horizon.max(1.0) {
            return Err(Error::param(
                field,
                format!(
                    "schedule ends at {} but the horizon is {horizon}",
                    control.horizon()
                ),
            ));
        }
        Ok(control)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InitSpec {
    /// Defaults to γ.
    pub velocity: Option<f64>,
    pub log_prevalence: f64,
    /// When given, the (E, I) system is integrated instead.
    pub ei: Option<EIState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    Constant {
        #[serde(default)]
        v: Option<f64>,
    },
    SingleSwitch {
        target: BoundaryTriple,
    },
    WallCycle {
        #[serde(default)]
        walls: Option<Walls>,
        #[serde(default)]
        period: Option<f64>,
        #[serde(default = "upper")]
        start: WallStart,
    },
}

fn upper() -> WallStart {
    WallStart::Upper
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MultiSpec {
    VFormation {
        n: usize,
        #[serde(default = "one")]
        rate: f64,
        #[serde(default)]
        spacing: Option<f64>,
    },
    Coordinated {
        n: usize,
        #[serde(default = "one")]
        rate: f64,
        #[serde(default)]
        walls: Option<Walls>,
        #[serde(default)]
        period: Option<f64>,
    },
    Custom {
        coupling: Vec<Vec<f64>>,
        controls: Vec<ControlSpec>,
        velocity: Vec<f64>,
        position: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierSpec {
    #[serde(default)]
    pub v: Option<f64>,
    pub wavelength: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub config: Config,
}

/// What a single scenario produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// ∫β dt (summed over populations).
    pub activity: f64,
    /// ∫u(β) dt when a utility is involved.
    pub useful: Option<f64>,
    pub results: Value,
    pub csv: String,
}

pub fn load_config(path: &Path) -> CliResult<Config> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<Config> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn prefix_field(e: Error, prefix: &str) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::InvalidParameter {
            field: format!("{prefix}{field}"),
            reason,
        },
        other => other,
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

fn single_csv(traj: &Trajectory) -> String {
    let with_ei = traj.samples.iter().all(|s| s.ei.is_some());
    let mut out = String::from(if with_ei {
        "t,V,X,beta,E,I\n"
    } else {
        "t,V,X,beta\n"
    });
    for s in &traj.samples {
        let _ = write!(
            out,
            "{},{},{},{}",
            fmt(s.t),
            fmt(s.velocity),
            fmt(s.position),
            fmt(s.beta)
        );
        if let (true, Some(ei)) = (with_ei, s.ei) {
            let _ = write!(out, ",{},{}", fmt(ei.exposed), fmt(ei.infectious));
        }
        out.push('\n');
    }
    out
}

fn multi_csv(traj: &MultiTrajectory) -> String {
    let n = traj.populations();
    let mut header = vec!["t".to_string()];
    for name in ["V", "X", "beta"] {
        header.extend((1..=n).map(|k| format!("{name}{k}")));
    }
    let mut out = header.join(",");
    out.push('\n');
    for s in &traj.samples {
        let mut row = vec![fmt(s.t)];
        for col in [&s.velocity, &s.position, &s.beta] {
            row.extend(col.iter().map(|&x| fmt(x)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn validate_walls(walls: &Walls, field: &str) -> crate::Result<Walls> {
    Walls::new(walls.lower, walls.upper).map_err(|e| prefix_field(e, &format!("{field}.")))
}

fn validate_triple(t: &BoundaryTriple, field: &str) -> crate::Result<BoundaryTriple> {
    BoundaryTriple::new(t.v_start, t.v_end, t.v_integral).map_err(|e| match e {
        Error::InvalidParameter { reason, .. } => Error::param(field, reason),
        other => other,
    })
}

/// Walls given directly, or `[-gap, 0]` with the gap that makes a wall cycle
/// of `params` last `period`.
fn walls_or_period(
    params: &ModelParams,
    walls: Option<Walls>,
    period: Option<f64>,
    field: &str,
) -> crate::Result<Walls> {
    match (walls, period) {
        (Some(w), None) => validate_walls(&w, &format!("{field}.walls")),
        (None, Some(p)) => {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::param(
                    format!("{field}.period"),
                    format!("must be > 0, got {p}"),
                ));
            }
            let gap = gap_for_period(params, p)?;
            Walls::new(-gap, 0.0)
        }
        _ => Err(Error::param(field, "give exactly one of walls or period")),
    }
}

fn trajectory_summary(
    traj: &Trajectory,
    params: &ModelParams,
    control: &PiecewiseControl,
    walls: Option<&Walls>,
) -> Value {
    let (lo, hi) = log_prevalence_range(traj, params.gamma);
    let report = feasibility_check(traj, params, walls, DEFAULT_WALL_TOL);
    json!({
        "activity": activity_total(control),
        "activity_via_v": activity_via_v(traj, params.gamma),
        "boundary_triple": boundary_triple_of(traj),
        "log_prevalence_range": [lo, hi],
        "switches": control.merged().switch_count(),
        "feasible": report.passed(),
        "first_violation": report.first_violation,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

/// Runs one non-compare scenario.
pub fn execute(config: &Config) -> CliResult<Outcome> {
    let params = config.model;
    params.validate()?;
    let dt = config.dt;
    if !(dt > 0.0) || !dt.is_finite() || dt > params.horizon {
        return Err(Error::param("dt", format!("must lie in (0, horizon], got {dt}")).into());
    }
    match &config.experiment {
        Experiment::Simulate {
            control,
            init,
            walls,
        } => {
            let control = control.build(params.horizon, "control")?;
            control.check_bounds(&params)?;
            let walls = walls
                .as_ref()
                .map(|w| validate_walls(w, "walls"))
                .transpose()?;
            let traj = match init.ei {
                Some(ei) => simulate_ei(&params, &control, ei, dt)?,
                None => simulate_phase(
                    &params,
                    &control,
                    PhaseState {
                        velocity: init.velocity.unwrap_or(params.gamma),
                        position: init.log_prevalence,
                    },
                    dt,
                )?,
            };
            Ok(Outcome {
                activity: activity_total(&control),
                useful: None,
                results: trajectory_summary(&traj, &params, &control, walls.as_ref()),
                csv: single_csv(&traj),
            })
        }
        Experiment::Synthesize { policy } => synthesize(&params, policy, dt),
        Experiment::Oracle {
            target,
            walls,
            oracle,
        } => {
            let target = validate_triple(target, "target")?;
            let walls = walls
                .as_ref()
                .map(|w| validate_walls(w, "walls"))
                .transpose()?;
            let oracle = OracleConfig { dt, ..*oracle };
            let run = oracle_extremes(&params, &target, &oracle, walls.as_ref())?;
            let describe = |e: &crate::oracle::Evaluated| {
                json!({
                    "activity": e.activity,
                    "structure": e.structure().to_string(),
                    "switches": e.candidate.switches,
                    "values": e.control().values(),
                    "boundary_triple": e.triple,
                    "log_prevalence_range": [e.log_prevalence_range.0, e.log_prevalence_range.1],
                    "touches_both_walls": walls.map(|w| e.touches_both(&w, oracle.wall_tol)),
                })
            };
            let synthesized = match walls {
                None => single_switch_policy(&params, &target, dt)
                    .ok()
                    .map(|c| activity_total(&c)),
                Some(w) => wall_cycle_policy(&params, &w, WallStart::Upper)
                    .ok()
                    .map(|c| activity_total(&c.control)),
            };
            let traj = simulate_phase(
                &params,
                run.max.control(),
                PhaseState {
                    velocity: target.v_start,
                    position: oracle.initial_log_prevalence,
                },
                dt,
            )?;
            Ok(Outcome {
                activity: run.max.activity,
                useful: None,
                results: json!({
                    "candidates": run.candidates,
                    "survivors": run.survivors.len(),
                    "min": describe(&run.min),
                    "max": describe(&run.max),
                    "synthesized_activity": synthesized,
                }),
                csv: single_csv(&traj),
            })
        }
        Experiment::Multipop { scenario } => multipop(&params, scenario, dt),
        Experiment::Utility {
            utility,
            walls,
            period,
            grid_points,
            fourier,
        } => utility_run(
            &params,
            utility,
            *walls,
            *period,
            *grid_points,
            fourier.as_ref(),
            dt,
        ),
        Experiment::Compare { .. } => Err(CliError::Config(
            "compare scenarios cannot be nested".into(),
        )),
    }
}

fn synthesize(params: &ModelParams, policy: &PolicySpec, dt: f64) -> CliResult<Outcome> {
    let (control, init, walls, extra) = match policy {
        PolicySpec::Constant { v } => {
            let v = v.unwrap_or(params.gamma);
            let control = constant_policy(v, params).map_err(|e| prefix_field(e, "policy."))?;
            let init = PhaseState {
                velocity: v,
                position: 0.0,
            };
            (control, init, None, json!({}))
        }
        PolicySpec::SingleSwitch { target } => {
            let target = validate_triple(target, "policy.target")?;
            let control = single_switch_policy(params, &target, dt)?;
            let init = PhaseState {
                velocity: target.v_start,
                position: 0.0,
            };
            (control, init, None, json!({}))
        }
        PolicySpec::WallCycle {
            walls,
            period,
            start,
        } => {
            let walls = walls_or_period(params, *walls, *period, "policy")?;
            let cycle = wall_cycle_policy(params, &walls, *start)?;
            let cycle_period = cycle.period();
            let scale = cycle_period / params.horizon;
            let activity = activity_total(&cycle.control);
            let extra = json!({
                "walls": walls,
                "gap": cycle.gap,
                "exp_gap": cycle.gap.exp(),
                "period": cycle_period,
                "full_excursions": cycle.excursions.len(),
                "has_remainder": cycle.remainder.is_some(),
                "activity_per_period": activity * scale,
                "beta_max_time_per_period": cycle.control.time_at(params.beta_max) * scale,
                "beta_min_time_per_period": cycle.control.time_at(params.beta_min) * scale,
                "ratio_vs_steady": activity / steady_activity(params),
            });
            (cycle.control, cycle.init, Some(walls), extra)
        }
    };
    let traj = simulate_phase(params, &control, init, dt)?;
    Ok(Outcome {
        activity: activity_total(&control),
        useful: None,
        results: merge(
            trajectory_summary(&traj, params, &control, walls.as_ref()),
            extra,
        ),
        csv: single_csv(&traj),
    })
}

fn multipop(params: &ModelParams, spec: &MultiSpec, dt: f64) -> CliResult<Outcome> {
    let (scenario, extra): (Scenario, Value) = match spec {
        MultiSpec::VFormation { n, rate, spacing } => {
            let chain = CouplingMatrix::chain(*n, *rate);
            let d = match spacing {
                Some(d) => *d,
                None => formation_spacing(*n, params, &chain, MAX_FORMATION_SPACING)?,
            };
            (
                scenario_v_formation(*n, d, params, &chain)?,
                json!({ "spacing": d }),
            )
        }
        MultiSpec::Coordinated {
            n,
            rate,
            walls,
            period,
        } => {
            let chain = CouplingMatrix::chain(*n, *rate);
            let effective = coordinated_bounds(params, &chain)?;
            let walls = walls_or_period(&effective, *walls, *period, "scenario")?;
            let co = scenario_coordinated(*n, params, &chain, &walls)?;
            let extra = json!({
                "walls": walls,
                "effective_beta_min": co.effective.beta_min,
                "effective_beta_max": co.effective.beta_max,
                "cycle_period": co.cycle.period(),
            });
            (co.scenario, extra)
        }
        MultiSpec::Custom {
            coupling,
            controls,
            velocity,
            position,
        } => {
            let coupling =
                CouplingMatrix::new(coupling.clone()).map_err(|e| prefix_field(e, "scenario."))?;
            let controls = controls
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let built = c.build(params.horizon, &format!("scenario.controls[{k}]"))?;
                    built.check_bounds(params)?;
                    Ok(built)
                })
                .collect::<crate::Result<Vec<_>>>()?;
            let n = coupling.len();
            let scenario = Scenario {
                coupling,
                params: vec![*params; n],
                policy: MultiPolicy { controls },
                init: MultiState {
                    velocity: velocity.clone(),
                    position: position.clone(),
                },
            };
            (scenario, json!({}))
        }
    };
    let traj = simulate_multi(
        &scenario.coupling,
        &scenario.params,
        &scenario.policy,
        &scenario.init,
        dt,
    )?;
    let activity = scenario.policy.activity();
    let split = objective_split(&traj, &scenario.coupling);
    let betas: Vec<Vec<f64>> = scenario
        .policy
        .controls
        .iter()
        .map(|c| c.merged().values().to_vec())
        .collect();
    let results = merge(
        json!({
            "populations": scenario.coupling.len(),
            "activity": activity,
            "activity_multi": activity_multi(&traj, &scenario.coupling, &scenario.params),
            "objective_split": split,
            "beta_levels": betas,
        }),
        extra,
    );
    Ok(Outcome {
        activity,
        useful: None,
        results,
        csv: multi_csv(&traj),
    })
}

fn utility_run(
    params: &ModelParams,
    variant: &UtilityVariant,
    walls: Option<Walls>,
    period: Option<f64>,
    grid_points: usize,
    fourier: Option<&FourierSpec>,
    dt: f64,
) -> CliResult<Outcome> {
    let utility = Utility::new(*variant, params)?;
    if grid_points < 3 {
        return Err(
            Error::param("grid_points", format!("need at least 3, got {grid_points}")).into(),
        );
    }
    let walls = walls_or_period(params, walls, period, "utility")?;
    let weights = tune_ab(&utility, params)?;
    let grid = velocity_grid(params, grid_points);
    let up = el_speed_profile(&utility, &weights, params, Direction::Up, &grid)?;
    let down = el_speed_profile(&utility, &weights, params, Direction::Down, &grid)?;
    let run = el_trajectory(&up, &down, params, &walls, dt)?;
    let useful = useful_total(&run.control, &utility);
    let steady = utility.u(params.phi(params.gamma)) * params.horizon;
    let delta = fourier
        .map(|f| {
            fourier_worst_check(
                &utility,
                params,
                f.v.unwrap_or(params.gamma),
                f.wavelength,
                f.amplitude,
                params.horizon,
            )
        })
        .transpose()?;
    let (lo, hi) = log_prevalence_range(&run.trajectory, params.gamma);
    let results = json!({
        "activity": activity_total(&run.control),
        "useful": useful,
        "useful_steady": steady,
        "useful_ratio_vs_steady": useful / steady,
        "weights": weights,
        "clamped_fraction_up": up.clamped_fraction(),
        "clamped_fraction_down": down.clamped_fraction(),
        "turning_velocities": [run.turning.0, run.turning.1],
        "period": run.period,
        "rise_time": rise_time(&run.control, params),
        "walls": walls,
        "log_prevalence_range": [lo, hi],
        "boundary_triple": boundary_triple_of(&run.trajectory),
        "fourier_delta": delta,
    });
    Ok(Outcome {
        activity: activity_total(&run.control),
        useful: Some(useful),
        results,
        csv: single_csv(&run.trajectory),
    })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_outcome(dir: &Path, config: &Config, outcome: &Outcome) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let summary = json!({
        "experiment": config.experiment.name(),
        "config": config,
        "results": outcome.results,
    });
    write_file(&dir.join("timeseries.csv"), &outcome.csv)?;
    write_file(&dir.join("summary.json"), &(pretty(&summary) + "\n"))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

/// `epiopt run`: executes the config (a compare config is delegated to
/// [`compare`]) and writes its outputs into `out`.
pub fn run(config_path: &Path, out: &Path, dt: Option<f64>) -> CliResult<()> {
    let mut config = load_config(config_path)?;
    if let Some(dt) = dt {
        config.dt = dt;
    }
    if matches!(config.experiment, Experiment::Compare { .. }) {
        return compare_config(&config, out);
    }
    let outcome = execute(&config)?;
    write_outcome(out, &config, &outcome)
}

/// `epiopt compare`: runs every sub-scenario and reports activities and
/// pairwise ratios.
pub fn compare(config_path: &Path, out: &Path) -> CliResult<()> {
    let config = load_config(config_path)?;
    compare_config(&config, out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub name: String,
    pub activity: f64,
    pub useful: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub numerator: String,
    pub denominator: String,
    pub activity_ratio: f64,
    pub useful_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub scenarios: Vec<ScenarioRow>,
    pub ratios: Vec<RatioRow>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Runs the sub-scenarios of a compare config; outcomes are in config order.
pub fn compare_outcomes(config: &Config) -> CliResult<(Comparison, Vec<Outcome>)> {
    let Experiment::Compare { scenarios } = &config.experiment else {
        return Err(CliError::Config(format!(
            "compare needs experiment \"compare\", got \"{}\"",
            config.experiment.name()
        )));
    };
    if scenarios.len() < 2 {
        return Err(Error::param(
            "scenarios",
            format!("need at least 2, got {}", scenarios.len()),
        )
        .into());
    }
    let horizon = scenarios[0].config.model.horizon;
    for (i, s) in scenarios.iter().enumerate() {
        if !valid_name(&s.name) {
            return Err(Error::param(
                format!("scenarios[{i}].name"),
                "use letters, digits, '-' or '_'",
            )
            .into());
        }
        if scenarios[..i].iter().any(|o| o.name == s.name) {
            return Err(Error::param(
                format!("scenarios[{i}].name"),
                format!("duplicate name {}", s.name),
            )
            .into());
        }
        if matches!(s.config.experiment, Experiment::Compare { .. }) {
            return Err(Error::param(
                format!("scenarios[{i}].experiment"),
                "compare cannot be nested",
            )
            .into());
        }
        if s.config.model.horizon != horizon {
            return Err(Error::param(
                format!("scenarios[{i}].model.horizon"),
                format!("all scenarios must share horizon {horizon}"),
            )
            .into());
        }
    }
    let outcomes: Vec<CliResult<Outcome>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            execute(&s.config).map_err(|e| match e {
                CliError::Model(m) => CliError::Model(prefix_field(m, &format!("scenarios[{i}]."))),
                other => other,
            })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<CliResult<Vec<_>>>()?;
    let rows: Vec<ScenarioRow> = scenarios
        .iter()
        .zip(&outcomes)
        .map(|(s, o)| ScenarioRow {
            name: s.name.clone(),
            activity: o.activity,
            useful: o.useful,
        })
        .collect();
    let mut ratios = Vec::new();
    for a in &rows {
        for b in &rows {
            if a.name == b.name {
                continue;
            }
            ratios.push(RatioRow {
                numerator: a.name.clone(),
                denominator: b.name.clone(),
                activity_ratio: a.activity / b.activity,
                useful_ratio: a.useful.zip(b.useful).map(|(x, y)| x / y),
            });
        }
    }
    Ok((
        Comparison {
            scenarios: rows,
            ratios,
        },
        outcomes,
    ))
}

fn compare_config(config: &Config, out: &Path) -> CliResult<()> {
    let (comparison, outcomes) = compare_outcomes(config)?;
    let Experiment::Compare { scenarios } = &config.experiment else {
        unreachable!("checked by compare_outcomes")
    };
    for (s, o) in scenarios.iter().zip(&outcomes) {
        write_outcome(&out.join(&s.name), &s.config, o)?;
    }
    let summary = json!({
        "experiment": "compare",
        "config": config,
        "results": comparison,
    });
    write_file(&out.join("summary.json"), &(pretty(&summary) + "\n"))
}
