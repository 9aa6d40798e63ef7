//! The linearized SEIR model in (E, I) and in velocity coordinates (V, X).
//!
//! With V = E/I and X = log I + γt the model becomes a one-dimensional
//! "car" driven by the control: V̇ = β − φ(V), Ẋ = V, where
//! φ(v) = v² + (1 − γ)v. Time is measured in mean incubation periods.

use serde::{Deserialize, Serialize};

use crate::control::PiecewiseControl;
use crate::error::{Error, Result};
use crate::integrate::{sample_times, BreakpointStepper};

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// φ(v) = v² + (1 − γ)v: the drag felt at velocity `v`.
pub fn phi(v: f64, gamma: f64) -> f64 {
    v * v + (1.0 - gamma) * v
}

/// The positive root of φ(x) = b.
pub fn phi_inv(b: f64, gamma: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::param(
            "beta",
            format!("phi_inv needs b > 0, got {b}"),
        ));
    }
    let s = gamma - 1.0;
    let disc = (s * s + 4.0 * b).sqrt();
    // avoid cancellation when s < 0
    Ok(if s >= 0.0 {
        0.5 * (s + disc)
    } else {
        2.0 * b / (disc - s)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub gamma: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub horizon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference(12.0)
    }
}

impl ModelParams {
    pub fn new(gamma: f64, beta_min: f64, beta_max: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            gamma,
            beta_min,
            beta_max,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    /// γ = 1 with β ∈ [1/4, 9/4], so v_min = 1/2 and v_max = 3/2.
    pub fn reference(horizon: f64) -> Self {
        Self {
            gamma: 1.0,
            beta_min: 0.25,
            beta_max: 2.25,
            horizon,
        }
    }

    pub fn with_horizon(self, horizon: f64) -> Self {
        Self { horizon, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::param("model.gamma", "must be positive and finite"));
        }
        if !(self.beta_min > 0.0) || !self.beta_min.is_finite() {
            return Err(Error::param(
                "model.beta_min",
                "must be positive and finite",
            ));
        }
        if !self.beta_max.is_finite() {
            return Err(Error::param("model.beta_max", "must be finite"));
        }
        if self.beta_min > self.beta_max {
            return Err(Error::param(
                "model.beta_min",
                format!(
                    "beta_min {} exceeds beta_max {}",
                    self.beta_min, self.beta_max
                ),
            ));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::param("model.horizon", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn phi(&self, v: f64) -> f64 {
        phi(v, self.gamma)
    }

    pub fn v_min(&self) -> f64 {
        phi_inv(self.beta_min, self.gamma).expect("validated beta_min > 0")
    }

    pub fn v_max(&self) -> f64 {
        phi_inv(self.beta_max, self.gamma).expect("validated beta_max > 0")
    }

    /// Slope bounds on V̇ at velocity `v`.
    pub fn slope_bounds(&self, v: f64) -> (f64, f64) {
        let drag = self.phi(v);
        (self.beta_min - drag, self.beta_max - drag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EIState {
    pub exposed: f64,
    pub infectious: f64,
}

impl EIState {
    pub fn velocity(&self) -> f64 {
        self.exposed / self.infectious
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub velocity: f64,
    /// X = log I + γt.
    pub position: f64,
}

/// One point of a trajectory.
///
/// `beta` is the control value in force from `t` onwards and `beta_left` the
/// value in force just before `t`; they differ only at control breakpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub velocity: f64,
    pub position: f64,
    pub beta: f64,
    pub beta_left: f64,
    pub ei: Option<EIState>,
}

impl Sample {
    pub fn log_prevalence(&self, gamma: f64) -> f64 {
        self.position - gamma * self.t
    }
}

/// A path sampled on the uniform grid `0, dt, ..., T`, plus the states at any
/// control breakpoints falling between grid points (`knots`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub knots: Vec<Sample>,
}

impl Trajectory {
    /// A trajectory without breakpoint knots, e.g. built from a smooth V(t).
    pub fn from_samples(dt: f64, samples: Vec<Sample>) -> Self {
        Self {
            dt,
            samples,
            knots: Vec::new(),
        }
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Grid samples and knots merged in time order.
    pub fn points(&self) -> Vec<&Sample> {
        if self.knots.is_empty() {
            return self.samples.iter().collect();
        }
        let mut out = Vec::with_capacity(self.samples.len() + self.knots.len());
        let mut k = 0;
        for s in &self.samples {
            while k < self.knots.len() && self.knots[k].t < s.t {
                out.push(&self.knots[k]);
                k += 1;
            }
            out.push(s);
        }
        out.extend(self.knots[k..].iter());
        out
    }

    /// Trapezoidal integral of `f(sample, beta)` over the merged points, where
    /// each interval uses the control value in force on it.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&Sample, f64) -> f64,
    {
        let pts = self.points();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let h = q.t - p.t;
            if h <= 0.0 {
                continue;
            }
            total += 0.5 * h * (f(p, p.beta) + f(q, q.beta_left));
        }
        total
    }
}

fn check_init_common(params: &ModelParams, control: &PiecewiseControl) -> Result<()> {
    params.validate()?;
    if (control.horizon() - params.horizon).abs() > 1e-9 * params.horizon.max(1.0) {
        return Err(Error::InvalidControl(format!(
            "schedule horizon {} does not match model horizon {}",
            control.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

/// Integrates Ė = −E + βI, İ = E − γI with fixed-step RK4.
///
/// Fails if I leaves (0, ∞) numerically, which signals a step too coarse for
/// the control.
pub fn simulate_ei(
    params: &ModelParams,
    control: &PiecewiseControl,
    init: EIState,
    dt: f64,
) -> Result<Trajectory> {
    check_init_common(params, control)?;
    if !(init.infectious > 0.0) || !(init.exposed >= 0.0) {
        return Err(Error::param("init", "need E >= 0 and I > 0"));
    }
    let times = sample_times(params.horizon, dt)?;
    let gamma = params.gamma;
    let make = |t: f64, y: &[f64]| -> Result<Sample> {
        let (e, i) = (y[0], y[1]);
        if !(i > 0.0) || !e.is_finite() || !i.is_finite() {
            return Err(Error::Numeric(format!(
                "prevalence left (0, inf) at t = {t} (E = {e}, I = {i}); reduce dt"
            )));
        }
        Ok(Sample {
            t,
            velocity: e / i,
            position: i.ln() + gamma * t,
            beta: control.value_at(t),
            beta_left: control.value_left(t),
            ei: Some(EIState {
                exposed: e,
                infectious: i,
            }),
        })
    };

    let mut y = [init.exposed, init.infectious];
    let mut samples = Vec::with_capacity(times.len());
    let mut knots = Vec::new();
    samples.push(make(0.0, &y)?);
    let mut stepper = BreakpointStepper::new(2, control.interior_breakpoints());
    let mut deriv = |tc: f64, s: &[f64], d: &mut [f64]| {
        let beta = control.value_at(tc);
        d[0] = -s[0] + beta * s[1];
        d[1] = s[0] - gamma * s[1];
    };
    let mut knot_err = None;
    for w in times.windows(2) {
        stepper.advance(
            w[0],
            w[1],
            &mut y,
            &mut deriv,
            &mut |t, s| match make(t, s) {
                Ok(k) => knots.push(k),
                Err(e) => knot_err = Some(e),
            },
        );
        if let Some(e) = knot_err.take() {
            return Err(e);
        }
        samples.push(make(w[1], &y)?);
    }
    Ok(Trajectory { dt, samples, knots })
}

/// Integrates V̇ = β − φ(V), Ẋ = V with fixed-step RK4.
pub fn simulate_phase(
    params: &ModelParams,
    control: &PiecewiseControl,
    init: PhaseState,
    dt: f64,
) -> Result<Trajectory> {
    check_init_common(params, control)?;
    if !(init.velocity > 0.0) || !init.position.is_finite() {
        return Err(Error::param(
            "init.velocity",
            "need V(0) > 0 and finite X(0)",
        ));
    }
    let times = sample_times(params.horizon, dt)?;
    let gamma = params.gamma;
    let make = |t: f64, y: &[f64]| -> Result<Sample> {
        if !(y[0] > 0.0) || !y[0].is_finite() || !y[1].is_finite() {
            return Err(Error::Numeric(format!(
                "velocity left (0, inf) at t = {t} (V = {}); reduce dt",
                y[0]
            )));
        }
        Ok(Sample {
            t,
            velocity: y[0],
            position: y[1],
            beta: control.value_at(t),
            beta_left: control.value_left(t),
            ei: None,
        })
    };

    let mut y = [init.velocity, init.position];
    let mut samples = Vec::with_capacity(times.len());
    let mut knots = Vec::new();
    samples.push(make(0.0, &y)?);
    let mut stepper = BreakpointStepper::new(2, control.interior_breakpoints());
    let mut deriv = |tc: f64, s: &[f64], d: &mut [f64]| {
        let beta = control.value_at(tc);
        d[0] = beta - phi(s[0], gamma);
        d[1] = s[0];
    };
    let mut knot_err = None;
    for w in times.windows(2) {
        stepper.advance(
            w[0],
            w[1],
            &mut y,
            &mut deriv,
            &mut |t, s| match make(t, s) {
                Ok(k) => knots.push(k),
                Err(e) => knot_err = Some(e),
            },
        );
        if let Some(e) = knot_err.take() {
            return Err(e);
        }
        samples.push(make(w[1], &y)?);
    }
    Ok(Trajectory { dt, samples, knots })
}
