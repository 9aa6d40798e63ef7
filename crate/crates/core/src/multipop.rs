//! Coupled subpopulations.
//!
//! Population k is infected by its own members and, at rate α_{j,k}, by
//! members of population j. In velocity coordinates this adds a drafting force
//! to each velocity equation:
//!
//! V̇_k = β_k − φ(V_k) + Σ_j α_{j,k} e^{X_j − X_k},  Ẋ_k = V_k.

use serde::Serialize;

use crate::control::PiecewiseControl;
use crate::dynamics::{phi, ModelParams, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::Walls;
use crate::integrate::{merge_breaks, sample_times, BreakpointStepper};
use crate::synth::{wall_cycle_policy, WallCycle, WallStart};

/// Largest tolerated |X_j − X_k| before a run is aborted.
pub const MAX_SPREAD: f64 = 50.0;
const BOUND_SLACK: f64 = 1e-9;

/// Cross-infection rates; `rate(j, k)` is α_{j,k}, the pull of j on k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrix {
    n: usize,
    alpha: Vec<f64>,
}

impl CouplingMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::param("coupling", "need at least one population"));
        }
        let mut alpha = Vec::with_capacity(n * n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (k, &a) in row.iter().enumerate() {
                if !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::param(
                        format!("coupling[{j}][{k}]"),
                        format!("must be >= 0, got {a}"),
                    ));
                }
                if j == k && a != 0.0 {
                    return Err(Error::param(
                        format!("coupling[{j}][{j}]"),
                        "diagonal must be zero",
                    ));
                }
                alpha.push(a);
            }
        }
        Ok(Self { n, alpha })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            alpha: vec![0.0; n * n],
        }
    }

    /// Nearest-neighbour chain: α_{j,k} = `rate` when |j − k| = 1.
    pub fn chain(n: usize, rate: f64) -> Self {
        let mut m = Self::zeros(n);
        for k in 1..n {
            m.alpha[(k - 1) * n + k] = rate;
            m.alpha[k * n + k - 1] = rate;
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rate(&self, j: usize, k: usize) -> f64 {
        self.alpha[j * self.n + k]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|j| (0..j).all(|k| self.rate(j, k) == self.rate(k, j)))
    }

    /// Σ_j α_{j,k}: the total pull on k when all positions are equal.
    pub fn in_degree(&self, k: usize) -> f64 {
        (0..self.n).map(|j| self.rate(j, k)).sum()
    }

    /// Σ_{j≠k} α_{j,k}.
    pub fn total(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Σ_j α_{j,k} e^{X_j − X_k}.
    pub fn force_on(&self, k: usize, positions: &[f64]) -> f64 {
        let mut f = 0.0;
        for (j, &xj) in positions.iter().enumerate() {
            let a = self.rate(j, k);
            if a != 0.0 {
                f += a * (xj - positions[k]).exp();
            }
        }
        f
    }

    /// Σ_{j≠k} α_{j,k} e^{X_j − X_k} over all ordered pairs.
    pub fn pair_sum(&self, positions: &[f64]) -> f64 {
        (0..self.n).map(|k| self.force_on(k, positions)).sum()
    }

    /// Σ_{j≠k} α_{j,k} cosh(X_j − X_k); equals [`pair_sum`](Self::pair_sum)
    /// when α is symmetric.
    pub fn cosh_sum(&self, positions: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.n {
            for k in 0..self.n {
                let a = self.rate(j, k);
                if a != 0.0 {
                    s += a * (positions[j] - positions[k]).cosh();
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiState {
    pub velocity: Vec<f64>,
    pub position: Vec<f64>,
}

impl MultiState {
    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiPolicy {
    pub controls: Vec<PiecewiseControl>,
}

impl MultiPolicy {
    pub fn horizon(&self) -> f64 {
        self.controls.first().map_or(0.0, PiecewiseControl::horizon)
    }

    /// Σ_k ∫β_k dt.
    pub fn activity(&self) -> f64 {
        self.controls
            .iter()
            .map(crate::functionals::activity_total)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSample {
    pub t: f64,
    pub velocity: Vec<f64>,
    pub position: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_left: Vec<f64>,
}

/// Grid samples plus the states at control breakpoints between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTrajectory {
    pub dt: f64,
    pub samples: Vec<MultiSample>,
    pub knots: Vec<MultiSample>,
}

impl MultiTrajectory {
    pub fn populations(&self) -> usize {
        self.samples[0].velocity.len()
    }

    pub fn first(&self) -> &MultiSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &MultiSample {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn points(&self) -> Vec<&MultiSample> {
        let mut out = Vec::with_capacity(self.samples.len() + self.knots.len());
        let mut i = 0;
        for s in &self.samples {
            while i < self.knots.len() && self.knots[i].t < s.t {
                out.push(&self.knots[i]);
                i += 1;
            }
            out.push(s);
        }
        out.extend(self.knots[i..].iter());
        out
    }

    /// Trapezoid of `f(sample, beta)` with the β in force on each interval.
    pub fn integrate<F>(&self, mut f: F) -> f64
    where
        F: FnMut(&MultiSample, &[f64]) -> f64,
    {
        let pts = self.points();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let h = w[1].t - w[0].t;
            if h > 0.0 {
                total += 0.5 * h * (f(w[0], &w[0].beta) + f(w[1], &w[1].beta_left));
            }
        }
        total
    }

    /// The path of population `k` as a single-population trajectory.
    pub fn population(&self, k: usize) -> Trajectory {
        let cut = |s: &MultiSample| Sample {
            t: s.t,
            velocity: s.velocity[k],
            position: s.position[k],
            beta: s.beta[k],
            beta_left: s.beta_left[k],
            ei: None,
        };
        Trajectory {
            dt: self.dt,
            samples: self.samples.iter().map(cut).collect(),
            knots: self.knots.iter().map(cut).collect(),
        }
    }
}

fn check_dims(
    coupling: &CouplingMatrix,
    params: &[ModelParams],
    policy: &MultiPolicy,
    init: &MultiState,
) -> Result<()> {
    let n = coupling.len();
    for got in [
        params.len(),
        policy.controls.len(),
        init.velocity.len(),
        init.position.len(),
    ] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let horizon = policy.horizon();
    for (k, (p, c)) in params.iter().zip(&policy.controls).enumerate() {
        p.validate()?;
        if (c.horizon() - horizon).abs() > 1e-9 * horizon.max(1.0)
            || (p.horizon - horizon).abs() > 1e-9 * horizon.max(1.0)
        {
            return Err(Error::InvalidControl(format!(
                "population {k}: horizons differ ({} vs {horizon})",
                c.horizon()
            )));
        }
        if !(init.velocity[k] > 0.0) || !init.position[k].is_finite() {
            return Err(Error::param(
                format!("init[{k}]"),
                "need V > 0 and finite X",
            ));
        }
    }
    Ok(())
}

fn spread(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Integrates the coupled system with the same RK4 scheme as
/// [`crate::dynamics::simulate_phase`]; the state is laid out `[V, X]` per
/// population so that one population reproduces it exactly.
pub fn simulate_multi(
    coupling: &CouplingMatrix,
    params: &[ModelParams],
    policy: &MultiPolicy,
    init: &MultiState,
    dt: f64,
) -> Result<MultiTrajectory> {
    check_dims(coupling, params, policy, init)?;
    let n = coupling.len();
    let times = sample_times(policy.horizon(), dt)?;
    let breaks = merge_breaks(
        policy
            .controls
            .iter()
            .map(PiecewiseControl::interior_breakpoints),
    );

    let make = |t: f64, y: &[f64]| -> Result<MultiSample> {
        let velocity: Vec<f64> = (0..n).map(|k| y[2 * k]).collect();
        let position: Vec<f64> = (0..n).map(|k| y[2 * k + 1]).collect();
        if y.iter().any(|v| !v.is_finite()) || velocity.iter().any(|&v| v <= 0.0) {
            return Err(Error::Numeric(format!(
                "state left the admissible region at t = {t}"
            )));
        }
        let s = spread(&position);
        if s > MAX_SPREAD {
            return Err(Error::SpacingDivergence { t, spread: s });
        }
        Ok(MultiSample {
            t,
            velocity,
            position,
            beta: policy.controls.iter().map(|c| c.value_at(t)).collect(),
            beta_left: policy.controls.iter().map(|c| c.value_left(t)).collect(),
        })
    };

    let mut y: Vec<f64> = (0..n)
        .flat_map(|k| [init.velocity[k], init.position[k]])
        .collect();
    let mut samples = Vec::with_capacity(times.len());
    let mut knots = Vec::new();
    samples.push(make(0.0, &y)?);
    let mut stepper = BreakpointStepper::new(2 * n, &breaks);
    let mut positions = vec![0.0; n];
    let mut deriv = |tc: f64, s: &[f64], d: &mut [f64]| {
        for k in 0..n {
            positions[k] = s[2 * k + 1];
        }
        for k in 0..n {
            let beta = policy.controls[k].value_at(tc);
            let drag = phi(s[2 * k], params[k].gamma);
            d[2 * k] = beta - drag + coupling.force_on(k, &positions);
            d[2 * k + 1] = s[2 * k];
        }
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
    Ok(MultiTrajectory { dt, samples, knots })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequiredBeta {
    pub beta: Vec<f64>,
    /// Populations whose β falls outside their bounds.
    pub out_of_bounds: Vec<usize>,
}

impl RequiredBeta {
    pub fn in_bounds(&self) -> bool {
        self.out_of_bounds.is_empty()
    }
}

/// β_k = V̇_k + φ(V_k) − Σ_j α_{j,k} e^{X_j − X_k}, flagging values outside
/// each population's bounds.
pub fn beta_required(
    state: &MultiState,
    velocity_rate: &[f64],
    coupling: &CouplingMatrix,
    params: &[ModelParams],
) -> Result<RequiredBeta> {
    let n = coupling.len();
    for got in [
        state.len(),
        state.position.len(),
        velocity_rate.len(),
        params.len(),
    ] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let beta: Vec<f64> = (0..n)
        .map(|k| {
            velocity_rate[k] + phi(state.velocity[k], params[k].gamma)
                - coupling.force_on(k, &state.position)
        })
        .collect();
    let out_of_bounds = beta
        .iter()
        .zip(params)
        .enumerate()
        .filter(|(_, (b, p))| **b < p.beta_min - BOUND_SLACK || **b > p.beta_max + BOUND_SLACK)
        .map(|(k, _)| k)
        .collect();
    Ok(RequiredBeta {
        beta,
        out_of_bounds,
    })
}

/// Σ_k [∫(φ(V_k) − Σ_j α_{j,k} e^{X_j − X_k}) dt + V_k(T) − V_k(0)].
pub fn activity_multi(
    traj: &MultiTrajectory,
    coupling: &CouplingMatrix,
    params: &[ModelParams],
) -> f64 {
    let n = traj.populations();
    let mut total = 0.0;
    for k in 0..n {
        let gamma = params[k].gamma;
        let bulk =
            traj.integrate(|s, _| phi(s.velocity[k], gamma) - coupling.force_on(k, &s.position));
        total += bulk + traj.last().velocity[k] - traj.first().velocity[k];
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveSplit {
    /// Σ_k ∫V_k² dt.
    pub oscillation: f64,
    /// Σ_{j≠k} ∫α_{j,k} e^{X_j − X_k} dt.
    pub coordination: f64,
    /// Σ_{j≠k} ∫α_{j,k} cosh(X_j − X_k) dt, present when α is symmetric.
    pub coordination_cosh: Option<f64>,
}

pub fn objective_split(traj: &MultiTrajectory, coupling: &CouplingMatrix) -> ObjectiveSplit {
    let oscillation = traj.integrate(|s, _| s.velocity.iter().map(|v| v * v).sum());
    let coordination = traj.integrate(|s, _| coupling.pair_sum(&s.position));
    let coordination_cosh = coupling
        .is_symmetric()
        .then(|| traj.integrate(|s, _| coupling.cosh_sum(&s.position)));
    ObjectiveSplit {
        oscillation,
        coordination,
        coordination_cosh,
    }
}

/// The cosh form of the coordination penalty; only defined for symmetric α.
pub fn coordination_cosh(traj: &MultiTrajectory, coupling: &CouplingMatrix) -> Result<f64> {
    objective_split(traj, coupling)
        .coordination_cosh
        .ok_or_else(|| Error::param("coupling", "cosh form needs a symmetric coupling matrix"))
}

/// The part of the activity fixed by the boundary data:
/// Σ_k [(1 − γ_k)∫V_k dt + V_k(T) − V_k(0)].
pub fn boundary_constant(traj: &MultiTrajectory, params: &[ModelParams]) -> f64 {
    (0..traj.populations())
        .map(|k| {
            let first = traj.first();
            let last = traj.last();
            let integral = traj.integrate(|s, _| s.velocity[k]);
            (1.0 - params[k].gamma) * integral + last.velocity[k] - first.velocity[k]
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub coupling: CouplingMatrix,
    pub params: Vec<ModelParams>,
    pub policy: MultiPolicy,
    pub init: MultiState,
}

impl Scenario {
    pub fn simulate(&self, dt: f64) -> Result<MultiTrajectory> {
        simulate_multi(&self.coupling, &self.params, &self.policy, &self.init, dt)
    }
}

fn formation_positions(n: usize, spacing: f64) -> Vec<f64> {
    let lead = (n - 1) as f64 / 2.0;
    (0..n)
        .map(|k| -spacing * (k as f64 - lead).abs().ceil())
        .collect()
}

fn formation_betas(
    coupling: &CouplingMatrix,
    params: &ModelParams,
    spacing: f64,
) -> Result<RequiredBeta> {
    let n = coupling.len();
    let state = MultiState {
        velocity: vec![params.gamma; n],
        position: formation_positions(n, spacing),
    };
    beta_required(&state, &vec![0.0; n], coupling, &vec![*params; n])
}

/// Steady V-formation: every V_k = γ, the middle population leads and the
/// others trail it by `spacing` per step along the chain.
pub fn scenario_v_formation(
    n: usize,
    spacing: f64,
    params: &ModelParams,
    coupling: &CouplingMatrix,
) -> Result<Scenario> {
    params.validate()?;
    if coupling.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coupling.len(),
        });
    }
    if !(spacing >= 0.0) || !spacing.is_finite() {
        return Err(Error::param(
            "spacing",
            format!("must be >= 0, got {spacing}"),
        ));
    }
    let req = formation_betas(coupling, params, spacing)?;
    if !req.in_bounds() {
        return Err(Error::Infeasible {
            reason: format!(
                "spacing {spacing} needs out-of-bounds transmission in populations {:?}: {:?}",
                req.out_of_bounds, req.beta
            ),
            bracket: None,
        });
    }
    let controls = req
        .beta
        .iter()
        .map(|&b| {
            PiecewiseControl::constant(b.clamp(params.beta_min, params.beta_max), params.horizon)
        })
        .collect::<Result<_>>()?;
    Ok(Scenario {
        coupling: coupling.clone(),
        params: vec![*params; n],
        policy: MultiPolicy { controls },
        init: MultiState {
            velocity: vec![params.gamma; n],
            position: formation_positions(n, spacing),
        },
    })
}

/// The formation spacing that maximizes the leader's β while every β_k stays
/// within bounds: the upper edge of the feasible spacings, found by a scan
/// over `[0, max_spacing]` and refined by bisection.
pub fn formation_spacing(
    n: usize,
    params: &ModelParams,
    coupling: &CouplingMatrix,
    max_spacing: f64,
) -> Result<f64> {
    let feasible = |d: f64| formation_betas(coupling, params, d).map(|r| r.in_bounds());
    const STEPS: usize = 2000;
    let mut last = None;
    for i in 0..=STEPS {
        let d = max_spacing * i as f64 / STEPS as f64;
        if feasible(d)? {
            last = Some(i);
        }
    }
    let Some(i) = last else {
        return Err(Error::infeasible(format!(
            "no spacing in [0, {max_spacing}] keeps all {n} populations within bounds"
        )));
    };
    if i == STEPS {
        return Ok(max_spacing);
    }
    let (mut lo, mut hi) = (
        max_spacing * i as f64 / STEPS as f64,
        max_spacing * (i + 1) as f64 / STEPS as f64,
    );
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coordinated {
    pub scenario: Scenario,
    /// The wall cycle of the shared velocity path.
    pub cycle: WallCycle,
    /// Bounds of the shared effective transmission b(t) = β_k(t) + Σ_j α_{j,k}.
    pub effective: ModelParams,
}

/// Bounds on the shared transmission b(t) = β_k(t) + Σ_j α_{j,k} when all
/// positions are equal: every population must be able to follow b.
pub fn coordinated_bounds(params: &ModelParams, coupling: &CouplingMatrix) -> Result<ModelParams> {
    let degrees: Vec<f64> = (0..coupling.len()).map(|k| coupling.in_degree(k)).collect();
    let d_min = degrees.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = degrees.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let effective = ModelParams {
        beta_min: params.beta_min + d_max,
        beta_max: params.beta_max + d_min,
        ..*params
    };
    if effective.beta_min > effective.beta_max {
        return Err(Error::infeasible(format!(
            "coupling degrees spread {} exceeds the transmission range",
            d_max - d_min
        )));
    }
    Ok(effective)
}

/// All populations follow one wall-to-wall velocity path with equal positions.
///
/// With X_j = X_k every population feels the constant pull of its in-degree,
/// so population k runs β_k(t) = b(t) − Σ_j α_{j,k} where b is a wall cycle
/// for the effective bounds shared by all populations. Populations with equal
/// in-degree share the same schedule.
pub fn scenario_coordinated(
    n: usize,
    params: &ModelParams,
    coupling: &CouplingMatrix,
    walls: &Walls,
) -> Result<Coordinated> {
    params.validate()?;
    if coupling.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coupling.len(),
        });
    }
    let effective = coordinated_bounds(params, coupling)?;
    let degrees: Vec<f64> = (0..n).map(|k| coupling.in_degree(k)).collect();
    let cycle = wall_cycle_policy(&effective, walls, WallStart::Upper)?;
    let controls = degrees
        .iter()
        .map(|&d| cycle.control.shifted(-d))
        .collect::<Result<Vec<_>>>()?;
    for c in &controls {
        c.check_bounds(params)?;
    }
    Ok(Coordinated {
        scenario: Scenario {
            coupling: coupling.clone(),
            params: vec![*params; n],
            policy: MultiPolicy { controls },
            init: MultiState {
                velocity: vec![params.gamma; n],
                position: vec![cycle.init.position; n],
            },
        },
        cycle,
        effective,
    })
}
