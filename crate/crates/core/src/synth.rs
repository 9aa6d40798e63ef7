//! Constructive extremal policies: the constant (worst) policy, the
//! single-switch bang-bang policy for free boundary data, and wall-to-wall
//! alternating cycles when prevalence is confined between two walls.
//!
//! All shooting is done on the closed-form flows of [`crate::flow`]; the RK4
//! integrator is only used to verify the result.

use serde::{Deserialize, Serialize};

use crate::control::PiecewiseControl;
use crate::dynamics::{phi, simulate_phase, ModelParams, PhaseState};
use crate::error::{Error, Result};
use crate::flow::ConstantFlow;
use crate::functionals::{boundary_triple_of, BoundaryTriple, Walls};
use crate::roots::{bisect_increasing, expand_upper};

/// Slack when checking velocities against `[v_min, v_max]`.
const RANGE_SLACK: f64 = 1e-12;
/// Pieces shorter than this are dropped from synthesized schedules.
const MIN_PIECE: f64 = 1e-12;
const ENDPOINT_TOL: f64 = 1e-6;
const INTEGRAL_TOL: f64 = 1e-5;

pub fn constant_policy(v: f64, params: &ModelParams) -> Result<PiecewiseControl> {
    params.validate()?;
    let (lo, hi) = (params.v_min(), params.v_max());
    if !(v >= lo - RANGE_SLACK && v <= hi + RANGE_SLACK) {
        return Err(Error::param("v", format!("{v} outside [{lo}, {hi}]")));
    }
    let beta = params.phi(v).clamp(params.beta_min, params.beta_max);
    PiecewiseControl::constant(beta, params.horizon)
}

/// Order of the three bang-bang pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchShape {
    /// β_min, β_max, β_min: a single raised interval.
    MinMaxMin,
    /// β_max, β_min, β_max: a single lowered interval.
    MaxMinMax,
}

impl SwitchShape {
    /// The shape used for `target`; equal endpoints take the down-first variant.
    pub fn for_target(target: &BoundaryTriple) -> Self {
        if target.v_end >= target.v_start {
            SwitchShape::MinMaxMin
        } else {
            SwitchShape::MaxMinMax
        }
    }
}

/// Shoots the three piece lengths `(s1, L, τ)` with `s1 + L + τ = T`.
struct Shooter {
    v0: f64,
    v1: f64,
    horizon: f64,
    outer: ConstantFlow,
    middle: ConstantFlow,
}

impl Shooter {
    fn closing_time(&self, vp: f64) -> Option<f64> {
        if (vp - self.v1).abs() <= 1e-13 * self.v1.max(1.0) {
            return Some(0.0);
        }
        self.outer.time_to(vp, self.v1)
    }

    /// Given the first piece, the middle and closing lengths that use up the
    /// rest of the horizon, with the velocity after the first piece.
    fn fill(&self, s1: f64) -> Option<(f64, f64, f64)> {
        let va = self.outer.velocity_after(self.v0, s1);
        let rest = self.horizon - s1;
        let floor = if self.closing_time(va).is_some() {
            0.0
        } else {
            self.middle.time_to(va, self.v1)?
        };
        let span = |l: f64| {
            let vp = self.middle.velocity_after(va, l);
            l + self.closing_time(vp).unwrap_or(f64::INFINITY)
        };
        if span(floor) > rest + 1e-12 {
            return None;
        }
        let l = bisect_increasing(|l| span(l) - rest, floor, floor + rest.max(0.0), 1e-15, 0.0);
        Some((va, l, (rest - l).max(0.0)))
    }

    fn integral(&self, s1: f64) -> Option<f64> {
        let (va, l, tau) = self.fill(s1)?;
        let vp = self.middle.velocity_after(va, l);
        Some(
            self.outer.integral(self.v0, s1)
                + self.middle.integral(va, l)
                + self.outer.integral(vp, tau),
        )
    }

    /// Largest first-piece length that still reaches `v1` by the horizon.
    fn s1_max(&self) -> f64 {
        if self.fill(self.horizon).is_some() {
            return self.horizon;
        }
        let (mut lo, mut hi) = (0.0, self.horizon);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.fill(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// The single-switch policy of the given shape for `target`.
pub fn single_switch_with_shape(
    params: &ModelParams,
    target: &BoundaryTriple,
    shape: SwitchShape,
    dt: f64,
) -> Result<PiecewiseControl> {
    params.validate()?;
    let (lo, hi) = (params.v_min(), params.v_max());
    for (name, v) in [("v_start", target.v_start), ("v_end", target.v_end)] {
        if v < lo - RANGE_SLACK || v > hi + RANGE_SLACK {
            return Err(Error::infeasible(format!(
                "{name} = {v} outside [{lo}, {hi}]"
            )));
        }
    }
    let (outer, middle) = match shape {
        SwitchShape::MinMaxMin => (params.beta_min, params.beta_max),
        SwitchShape::MaxMinMax => (params.beta_max, params.beta_min),
    };
    let shooter = Shooter {
        v0: target.v_start,
        v1: target.v_end,
        horizon: params.horizon,
        outer: ConstantFlow::new(outer, params.gamma),
        middle: ConstantFlow::new(middle, params.gamma),
    };
    let Some(at_zero) = shooter.integral(0.0) else {
        return Err(Error::infeasible(format!(
            "v_end = {} cannot be reached from v_start = {} within T = {}",
            target.v_end, target.v_start, params.horizon
        )));
    };
    let s1_max = shooter.s1_max();
    let at_max = shooter.integral(s1_max).unwrap_or(at_zero);
    let (i_min, i_max) = (at_zero.min(at_max), at_zero.max(at_max));
    // targets just outside the computed range (endpoints pinned against v_min
    // or v_max are ill-conditioned) are clamped; verification has the last word
    let slack = 0.5 * INTEGRAL_TOL;
    if target.v_integral < i_min - slack || target.v_integral > i_max + slack {
        return Err(Error::Infeasible {
            reason: format!(
                "integral {} outside the attainable range for this shape",
                target.v_integral
            ),
            bracket: Some((i_min, i_max)),
        });
    }
    // the integral is monotone in s1: decreasing for min/MAX/min, increasing otherwise
    let sign = if at_max < at_zero { -1.0 } else { 1.0 };
    let wanted = target.v_integral.clamp(i_min, i_max);
    let s1 = bisect_increasing(
        |s| sign * (shooter.integral(s).unwrap_or(at_max) - wanted),
        0.0,
        s1_max,
        1e-15,
        1e-14,
    );
    let (_, l, tau) = shooter
        .fill(s1)
        .ok_or_else(|| Error::Numeric(format!("shooting lost feasibility at s1 = {s1}")))?;
    let control = PiecewiseControl::from_segments_with_horizon(
        [(s1, outer), (l, middle), (tau, outer)],
        params.horizon,
        MIN_PIECE,
    )?;
    verify_triple(params, &control, target, dt)?;
    Ok(control)
}

/// The optimal schedule for free boundary data: at most two switches,
/// min/MAX/min when V rises (or returns to its start) and MAX/min/MAX when it
/// falls.
pub fn single_switch_policy(
    params: &ModelParams,
    target: &BoundaryTriple,
    dt: f64,
) -> Result<PiecewiseControl> {
    single_switch_with_shape(params, target, SwitchShape::for_target(target), dt)
}

fn verify_triple(
    params: &ModelParams,
    control: &PiecewiseControl,
    target: &BoundaryTriple,
    dt: f64,
) -> Result<()> {
    let init = PhaseState {
        velocity: target.v_start,
        position: 0.0,
    };
    let traj = simulate_phase(params, control, init, dt)?;
    let got = boundary_triple_of(&traj);
    let dv = (got.v_end - target.v_end).abs();
    let di = (got.v_integral - target.v_integral).abs();
    if dv >= ENDPOINT_TOL || di >= INTEGRAL_TOL {
        return Err(Error::Numeric(format!(
            "synthesized schedule misses target: |dV(T)| = {dv:.3e}, |d∫V| = {di:.3e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

/// V leaves γ along one bound, turns at `v_turn` and returns along the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Excursion {
    pub direction: Direction,
    /// |∫(V − γ) dt|, the change in log-prevalence.
    pub area: f64,
    pub v_turn: f64,
    pub t_out: f64,
    pub t_back: f64,
    pub beta_out: f64,
    pub beta_back: f64,
}

impl Excursion {
    pub fn duration(&self) -> f64 {
        self.t_out + self.t_back
    }

    /// Time spent at `beta`.
    pub fn time_at(&self, beta: f64) -> f64 {
        let mut t = 0.0;
        if self.beta_out == beta {
            t += self.t_out;
        }
        if self.beta_back == beta {
            t += self.t_back;
        }
        t
    }

    pub fn pieces(&self) -> [(f64, f64); 2] {
        [(self.t_out, self.beta_out), (self.t_back, self.beta_back)]
    }
}

fn check_interior_gamma(params: &ModelParams) -> Result<()> {
    params.validate()?;
    let g = params.gamma;
    if !(params.v_min() < g && g < params.v_max()) {
        return Err(Error::param(
            "model.gamma",
            format!("excursions need v_min < gamma < v_max, got gamma = {g}"),
        ));
    }
    Ok(())
}

/// Signed-area excursion from V = γ back to γ with |∫(V − γ)dt| = `area`.
///
/// Shoots on the outgoing duration: the turnaround velocity saturates against
/// v_max or v_min long before the area does, so it is a poor unknown.
pub fn excursion_solver(
    params: &ModelParams,
    area: f64,
    direction: Direction,
) -> Result<Excursion> {
    check_interior_gamma(params)?;
    if !(area >= 0.0) || !area.is_finite() {
        return Err(Error::param(
            "area",
            format!("must be finite and >= 0, got {area}"),
        ));
    }
    let g = params.gamma;
    let (beta_out, beta_back) = match direction {
        Direction::Up => (params.beta_max, params.beta_min),
        Direction::Down => (params.beta_min, params.beta_max),
    };
    if area == 0.0 {
        return Ok(Excursion {
            direction,
            area,
            v_turn: g,
            t_out: 0.0,
            t_back: 0.0,
            beta_out,
            beta_back,
        });
    }
    let out = ConstantFlow::new(beta_out, g);
    let back = ConstantFlow::new(beta_back, g);
    let shape = |tau: f64| -> (f64, f64, f64) {
        let v_turn = out.velocity_after(g, tau);
        let t_back = back.time_to(v_turn, g).unwrap_or(0.0);
        let signed = out.integral(g, tau) + back.integral(v_turn, t_back) - g * (tau + t_back);
        (v_turn, t_back, signed.abs())
    };
    let hi = expand_upper(|tau| shape(tau).2 - area, 1.0, 64)
        .ok_or_else(|| Error::infeasible(format!("excursion area {area} not reachable")))?;
    let tau = bisect_increasing(
        |tau| shape(tau).2 - area,
        0.0,
        hi,
        1e-15 * hi,
        1e-13 * area.max(1.0),
    );
    let (v_turn, t_back, got) = shape(tau);
    if (got - area).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "excursion area {got} missed target {area}"
        )));
    }
    Ok(Excursion {
        direction,
        area,
        v_turn,
        t_out: tau,
        t_back,
        beta_out,
        beta_back,
    })
}

/// Duration of an up excursion plus a down excursion, each of `area`.
pub fn pair_duration(params: &ModelParams, area: f64) -> Result<f64> {
    let up = excursion_solver(params, area, Direction::Up)?;
    let down = excursion_solver(params, area, Direction::Down)?;
    Ok(up.duration() + down.duration())
}

/// The wall gap whose full up/down pair lasts exactly `period`.
pub fn gap_for_period(params: &ModelParams, period: f64) -> Result<f64> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::param(
            "period",
            format!("must be positive, got {period}"),
        ));
    }
    check_interior_gamma(params)?;
    let f = |d: f64| pair_duration(params, d).map_or(f64::INFINITY, |p| p - period);
    let hi =
        expand_upper(f, 1.0, 64).ok_or_else(|| Error::infeasible("no gap gives this period"))?;
    Ok(bisect_increasing(f, 0.0, hi, 1e-14, 1e-13))
}

/// Which wall log I starts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallStart {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallCycle {
    pub control: PiecewiseControl,
    /// Initial state: V = γ on the starting wall.
    pub init: PhaseState,
    pub gap: f64,
    /// Full-area excursions in order.
    pub excursions: Vec<Excursion>,
    /// The equal smaller-area pair closing the horizon, if any.
    pub remainder: Option<[Excursion; 2]>,
}

impl WallCycle {
    pub fn period(&self) -> f64 {
        self.excursions
            .iter()
            .take(2)
            .map(Excursion::duration)
            .sum()
    }
}

/// Alternating wall-to-wall excursions over `params.horizon` with V(0) = V(T) = γ.
///
/// Full pairs come first; leftover time is spent on one up/down pair of equal
/// smaller area placed at the end, so log I returns to the starting wall.
pub fn wall_cycle_policy(
    params: &ModelParams,
    walls: &Walls,
    start: WallStart,
) -> Result<WallCycle> {
    check_interior_gamma(params)?;
    let horizon = params.horizon;
    let gap = walls.gap();
    let first = match start {
        WallStart::Upper => Direction::Down,
        WallStart::Lower => Direction::Up,
    };
    let a = excursion_solver(params, gap, first)?;
    let b = excursion_solver(params, gap, first.flipped())?;
    let period = a.duration() + b.duration();
    let full = ((horizon / period) * (1.0 + 1e-12)).floor() as usize;
    let leftover = horizon - full as f64 * period;

    let mut excursions = Vec::with_capacity(2 * full);
    for _ in 0..full {
        excursions.push(a);
        excursions.push(b);
    }
    let remainder = if leftover > 1e-9 * horizon.max(1.0) {
        let f = |d: f64| pair_duration(params, d).map_or(f64::INFINITY, |p| p - leftover);
        let area = bisect_increasing(f, 0.0, gap, 1e-15, 1e-13);
        Some([
            excursion_solver(params, area, first)?,
            excursion_solver(params, area, first.flipped())?,
        ])
    } else {
        None
    };

    let pieces = excursions
        .iter()
        .chain(remainder.iter().flatten())
        .flat_map(Excursion::pieces);
    let control = PiecewiseControl::from_segments_with_horizon(pieces, horizon, MIN_PIECE)
        .map_err(|e| match e {
            Error::InvalidControl(msg) => {
                Error::infeasible(format!("horizon {horizon} too short for a cycle: {msg}"))
            }
            other => other,
        })?;
    let position = match start {
        WallStart::Upper => walls.upper,
        WallStart::Lower => walls.lower,
    };
    Ok(WallCycle {
        control,
        init: PhaseState {
            velocity: params.gamma,
            position,
        },
        gap,
        excursions,
        remainder,
    })
}

/// Activity of the steady policy over the same horizon, T·φ(γ) = γT.
pub fn steady_activity(params: &ModelParams) -> f64 {
    phi(params.gamma, params.gamma) * params.horizon
}
