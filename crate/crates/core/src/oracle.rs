//! Brute-force verification by enumerating coarse bang-bang schedules.
//!
//! Candidates switch between β_min and β_max on a uniform grid of switch
//! times. Each one is screened with the closed-form flow and the near matches
//! are re-simulated with RK4; only the simulated triple decides survival.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::PiecewiseControl;
use crate::dynamics::{simulate_phase, ModelParams, PhaseState, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::flow::propagate;
use crate::functionals::{
    activity_total, boundary_triple_of, feasibility_check, log_prevalence_range, BoundaryTriple,
    Walls, DEFAULT_WALL_TOL,
};

pub const MAX_GRID: usize = 24;
pub const MAX_SWITCHES: usize = 5;
/// Number of steady velocity levels added to switch-free enumerations.
pub const STEADY_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub control: PiecewiseControl,
    /// Grid indices `i` of the switch times `T·i/n`.
    pub switches: Vec<usize>,
}

impl Candidate {
    fn first_value(&self) -> f64 {
        self.control.values()[0]
    }

    /// Total order used to break activity ties reproducibly: fewer switches
    /// first, then the starting value, then the switch vector.
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.switches
            .len()
            .cmp(&other.switches.len())
            .then_with(|| self.first_value().total_cmp(&other.first_value()))
            .then_with(|| self.switches.cmp(&other.switches))
    }
}

fn check_guards(grid_n: usize, max_switches: usize) -> Result<()> {
    if grid_n == 0 || grid_n > MAX_GRID {
        return Err(Error::param(
            "oracle.grid_n",
            format!("must be in 1..={MAX_GRID}, got {grid_n}"),
        ));
    }
    if max_switches > MAX_SWITCHES {
        return Err(Error::param(
            "oracle.max_switches",
            format!("must be at most {MAX_SWITCHES}, got {max_switches}"),
        ));
    }
    Ok(())
}

fn combinations(pool: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(start: usize, pool: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=pool {
            cur.push(i);
            rec(i + 1, pool, k, cur, out);
            cur.pop();
        }
    }
    rec(1, pool, k, &mut Vec::with_capacity(k), out);
}

/// Every bang-bang schedule with at most `max_switches` switches at interior
/// points of the `grid_n`-interval grid, both starting values.
///
/// With `max_switches == 0` the steady levels φ(v) for `STEADY_LEVELS` evenly
/// spaced v in `[v_min, v_max]` are included as well. Equal bounds collapse
/// everything to a single constant schedule.
pub fn enumerate_switch_policies(
    params: &ModelParams,
    grid_n: usize,
    max_switches: usize,
) -> Result<Vec<Candidate>> {
    params.validate()?;
    check_guards(grid_n, max_switches)?;
    let horizon = params.horizon;
    let (lo, hi) = (params.beta_min, params.beta_max);
    if lo == hi {
        return Ok(vec![Candidate {
            control: PiecewiseControl::constant(lo, horizon)?,
            switches: Vec::new(),
        }]);
    }

    let mut subsets = Vec::new();
    for k in 0..=max_switches.min(grid_n - 1) {
        combinations(grid_n - 1, k, &mut subsets);
    }
    let mut out = Vec::with_capacity(2 * subsets.len() + STEADY_LEVELS);
    for first in [lo, hi] {
        for sw in &subsets {
            let mut breakpoints = Vec::with_capacity(sw.len() + 2);
            breakpoints.push(0.0);
            breakpoints.extend(sw.iter().map(|&i| horizon * i as f64 / grid_n as f64));
            breakpoints.push(horizon);
            let values = (0..=sw.len())
                .map(|j| {
                    if j % 2 == 0 {
                        first
                    } else if first == lo {
                        hi
                    } else {
                        lo
                    }
                })
                .collect();
            out.push(Candidate {
                control: PiecewiseControl::new(breakpoints, values)?,
                switches: sw.clone(),
            });
        }
    }
    if max_switches == 0 {
        let (v_lo, v_hi) = (params.v_min(), params.v_max());
        for j in 1..STEADY_LEVELS - 1 {
            let v = v_lo + (v_hi - v_lo) * j as f64 / (STEADY_LEVELS - 1) as f64;
            out.push(Candidate {
                control: PiecewiseControl::constant(params.phi(v), horizon)?,
                switches: Vec::new(),
            });
        }
    }
    Ok(out)
}

/// Matching tolerances on the boundary triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripleTol {
    pub velocity: f64,
    pub integral: f64,
}

impl Default for TripleTol {
    fn default() -> Self {
        Self {
            velocity: 0.05,
            integral: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub grid_n: usize,
    pub max_switches: usize,
    pub tol: TripleTol,
    /// Also offer the steady levels as candidates.
    pub include_steady: bool,
    pub dt: f64,
    /// log I(0), only relevant with walls.
    pub initial_log_prevalence: f64,
    pub wall_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_n: 12,
            max_switches: 3,
            tol: TripleTol::default(),
            include_steady: true,
            dt: DEFAULT_DT,
            initial_log_prevalence: 0.0,
            wall_tol: DEFAULT_WALL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub candidate: Candidate,
    pub triple: BoundaryTriple,
    pub activity: f64,
    /// Smallest and largest log I along the simulated path.
    pub log_prevalence_range: (f64, f64),
}

impl Evaluated {
    pub fn control(&self) -> &PiecewiseControl {
        &self.candidate.control
    }

    pub fn structure(&self) -> Structure {
        structure_classifier(&self.candidate.control)
    }

    /// Whether log I comes within `tol` of both walls.
    pub fn touches_both(&self, walls: &Walls, tol: f64) -> bool {
        let (lo, hi) = self.log_prevalence_range;
        (lo - walls.lower).abs() <= tol && (hi - walls.upper).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub candidates: usize,
    pub survivors: Vec<Evaluated>,
    pub min: Evaluated,
    pub max: Evaluated,
}

/// All candidates of `config`: the bang-bang enumeration plus, when asked,
/// the steady levels.
pub fn oracle_candidates(params: &ModelParams, config: &OracleConfig) -> Result<Vec<Candidate>> {
    let mut all = enumerate_switch_policies(params, config.grid_n, config.max_switches)?;
    if config.include_steady && config.max_switches > 0 && params.beta_min < params.beta_max {
        let steady = enumerate_switch_policies(params, config.grid_n, 0)?;
        all.extend(steady.into_iter().filter(|c| {
            let b = c.first_value();
            b != params.beta_min && b != params.beta_max
        }));
    }
    Ok(all)
}

fn pick(a: Evaluated, b: Evaluated, want_max: bool) -> Evaluated {
    let by_activity = a.activity.total_cmp(&b.activity);
    let ord = if want_max {
        by_activity
    } else {
        by_activity.reverse()
    };
    match ord.then_with(|| b.candidate.key_cmp(&a.candidate)) {
        Ordering::Less => b,
        _ => a,
    }
}

/// Simulates every candidate from `target.v_start`, keeps those whose triple
/// matches `target` (and that respect `walls`), and returns the survivors with
/// the least and most active ones.
pub fn oracle_extremes(
    params: &ModelParams,
    target: &BoundaryTriple,
    config: &OracleConfig,
    walls: Option<&Walls>,
) -> Result<OracleRun> {
    let candidates = oracle_candidates(params, config)?;
    let init = PhaseState {
        velocity: target.v_start,
        position: config.initial_log_prevalence,
    };
    // closed-form screen with a wide margin; the RK4 run below decides
    let screen = |c: &Candidate| {
        let (v_end, integral) = propagate(&c.control, params.gamma, target.v_start);
        (v_end - target.v_end).abs() <= 2.0 * config.tol.velocity + 1e-6
            && (integral - target.v_integral).abs() <= 2.0 * config.tol.integral + 1e-6
    };
    let evaluated: Vec<Result<Option<Evaluated>>> = candidates
        .par_iter()
        .filter(|c| screen(c))
        .map(|c| {
            let traj = simulate_phase(params, &c.control, init, config.dt)?;
            let triple = boundary_triple_of(&traj);
            let matched = (triple.v_end - target.v_end).abs() <= config.tol.velocity
                && (triple.v_integral - target.v_integral).abs() <= config.tol.integral;
            if !matched {
                return Ok(None);
            }
            if let Some(w) = walls {
                if !feasibility_check(&traj, params, Some(w), config.wall_tol).passed() {
                    return Ok(None);
                }
            }
            Ok(Some(Evaluated {
                candidate: c.clone(),
                triple,
                activity: activity_total(&c.control),
                log_prevalence_range: log_prevalence_range(&traj, params.gamma),
            }))
        })
        .collect();
    let mut survivors = Vec::new();
    for e in evaluated {
        if let Some(s) = e? {
            survivors.push(s);
        }
    }
    let min = survivors
        .par_iter()
        .cloned()
        .reduce_with(|a, b| pick(a, b, false))
        .ok_or(Error::NoMatchedCandidates)?;
    let max = survivors
        .par_iter()
        .cloned()
        .reduce_with(|a, b| pick(a, b, true))
        .ok_or(Error::NoMatchedCandidates)?;
    Ok(OracleRun {
        candidates: candidates.len(),
        survivors,
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Structure {
    Constant,
    /// min/MAX/min, including the truncated min/MAX.
    SingleSwitchUp,
    /// MAX/min/MAX, including the truncated MAX/min.
    SingleSwitchDown,
    /// Four or more pieces alternating between two levels.
    Alternating,
    Other,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Structure::Constant => "constant",
            Structure::SingleSwitchUp => "single-switch-up",
            Structure::SingleSwitchDown => "single-switch-down",
            Structure::Alternating => "alternating",
            Structure::Other => "other",
        };
        f.write_str(s)
    }
}

pub fn structure_classifier(control: &PiecewiseControl) -> Structure {
    let merged = control.merged();
    let values = merged.values();
    if values.len() == 1 {
        return Structure::Constant;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.iter().any(|&v| v != lo && v != hi) {
        return Structure::Other;
    }
    // two levels and no equal neighbours after merging: the pattern alternates
    match values.len() {
        2 | 3 if values[0] == lo => Structure::SingleSwitchUp,
        2 | 3 => Structure::SingleSwitchDown,
        _ => Structure::Alternating,
    }
}
