//! Concave utility of transmission.
//!
//! Useful activity is U = ∫u(β) dt for an increasing concave `u`. Along a
//! velocity path, with G_y(x) = u(x + φ(y)) − u(φ(y)) − u′(φ(y))·x,
//!
//! U = ∫u(φ(V)) dt + ∫G_V(V̇) dt + r(V(T)) − r(V(0)),  r(a) = ∫₀ᵃ u′(φ(x)) dx.
//!
//! The first piece rewards oscillation when u∘φ is convex, the second
//! penalizes fast changes in V, and the last depends only on the endpoints.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::PiecewiseControl;
use crate::dynamics::{phi, ModelParams, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::Walls;
use crate::integrate::sample_times;
use crate::roots::bisect_increasing;
use crate::synth::Direction;

/// Subintervals per smooth piece in the quadrature for r.
const R_PANELS: usize = 64;
/// Points per monotone leg when tabulating time against velocity.
const LEG_POINTS: usize = 4000;
const ROOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityVariant {
    Linear,
    /// Positive inverse of x = a₁u + a₂u².
    QuadraticInverse {
        a1: f64,
        a2: f64,
    },
    /// u(x) = x − c·x².
    ConcaveQuadratic {
        c: f64,
    },
}

/// A utility with affine continuation outside `[beta_min, beta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Utility {
    pub variant: UtilityVariant,
    pub beta_min: f64,
    pub beta_max: f64,
    pub gamma: f64,
}

impl Utility {
    pub fn new(variant: UtilityVariant, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        match variant {
            UtilityVariant::Linear => {}
            UtilityVariant::QuadraticInverse { a1, a2 } => {
                if !(a1 > 0.0) || !a1.is_finite() {
                    return Err(Error::param("utility.a1", format!("must be > 0, got {a1}")));
                }
                if !(a2 > 0.0) || !a2.is_finite() {
                    return Err(Error::param("utility.a2", format!("must be > 0, got {a2}")));
                }
            }
            UtilityVariant::ConcaveQuadratic { c } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(Error::param("utility.c", format!("must be > 0, got {c}")));
                }
                if 1.0 - 2.0 * c * params.beta_max <= 0.0 {
                    return Err(Error::param(
                        "utility.c",
                        format!(
                            "u must increase up to beta_max; need c < {}",
                            0.5 / params.beta_max
                        ),
                    ));
                }
            }
        }
        Ok(Self {
            variant,
            beta_min: params.beta_min,
            beta_max: params.beta_max,
            gamma: params.gamma,
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.variant, UtilityVariant::Linear)
    }

    fn core(&self, x: f64) -> f64 {
        match self.variant {
            UtilityVariant::Linear => x,
            UtilityVariant::QuadraticInverse { a1, a2 } => {
                (-a1 + (a1 * a1 + 4.0 * a2 * x).sqrt()) / (2.0 * a2)
            }
            UtilityVariant::ConcaveQuadratic { c } => x - c * x * x,
        }
    }

    fn core_prime(&self, x: f64) -> f64 {
        match self.variant {
            UtilityVariant::Linear => 1.0,
            UtilityVariant::QuadraticInverse { a1, a2 } => 1.0 / (a1 * a1 + 4.0 * a2 * x).sqrt(),
            UtilityVariant::ConcaveQuadratic { c } => 1.0 - 2.0 * c * x,
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        if x < self.beta_min {
            self.core(self.beta_min) + self.core_prime(self.beta_min) * (x - self.beta_min)
        } else if x > self.beta_max {
            self.core(self.beta_max) + self.core_prime(self.beta_max) * (x - self.beta_max)
        } else {
            self.core(x)
        }
    }

    pub fn u_prime(&self, x: f64) -> f64 {
        self.core_prime(x.clamp(self.beta_min, self.beta_max))
    }

    /// G_y(x) = u(x + φ(y)) − u(φ(y)) − u′(φ(y))·x.
    pub fn g(&self, y: f64, x: f64) -> f64 {
        let b = phi(y, self.gamma);
        self.u(x + b) - self.u(b) - self.u_prime(b) * x
    }

    /// ∂G_y/∂x = u′(x + φ(y)) − u′(φ(y)).
    pub fn g_prime(&self, y: f64, x: f64) -> f64 {
        let b = phi(y, self.gamma);
        self.u_prime(x + b) - self.u_prime(b)
    }

    /// Share a₂u²/x of transmission carried by the quadratic term; only
    /// defined for the quadratic-inverse variant.
    pub fn quadratic_share(&self, x: f64) -> Option<f64> {
        match self.variant {
            UtilityVariant::QuadraticInverse { a2, .. } => {
                let u = self.core(x);
                Some(a2 * u * u / x)
            }
            _ => None,
        }
    }

    /// r(b) − r(a) with r(a) = ∫₀ᵃ u′(φ(x)) dx.
    pub fn r_between(&self, a: f64, b: f64) -> f64 {
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut cuts = vec![lo];
        for beta in [self.beta_min, self.beta_max] {
            // velocity where φ crosses a junction of the affine extension
            if let Ok(v) = crate::dynamics::phi_inv(beta, self.gamma) {
                if v > lo && v < hi {
                    cuts.push(v);
                }
            }
        }
        cuts.push(hi);
        let f = |x: f64| self.u_prime(phi(x, self.gamma));
        sign * cuts
            .windows(2)
            .map(|w| simpson(&f, w[0], w[1], R_PANELS))
            .sum::<f64>()
    }

    pub fn r(&self, a: f64) -> f64 {
        self.r_between(0.0, a)
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// U = Σ u(β_i)·(t_{i+1} − t_i).
pub fn useful_total(control: &PiecewiseControl, utility: &Utility) -> f64 {
    control
        .segments()
        .map(|s| utility.u(s.value) * s.duration())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    /// ∫u(φ(V)) dt.
    pub bulk: f64,
    /// ∫G_V(V̇) dt.
    pub correction: f64,
    /// r(V(T)) − r(V(0)).
    pub boundary: f64,
}

impl Decomposition {
    pub fn total(&self) -> f64 {
        self.bulk + self.correction + self.boundary
    }
}

/// Splits useful activity along `traj` into its three parts. V̇ is taken from
/// the ODE, β − φ(V), with the β in force on each side of every interval.
pub fn objective_decomposed(traj: &Trajectory, utility: &Utility) -> Decomposition {
    let gamma = utility.gamma;
    let bulk = traj.integrate(|s, _| utility.u(phi(s.velocity, gamma)));
    let correction = traj.integrate(|s, beta| utility.g(s.velocity, beta - phi(s.velocity, gamma)));
    let boundary = utility.r_between(traj.first().velocity, traj.last().velocity);
    Decomposition {
        bulk,
        correction,
        boundary,
    }
}

/// Weights with w(v) = u(φ(v)) + a·v + b vanishing at both rest velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunedWeights {
    pub a: f64,
    pub b: f64,
}

impl TunedWeights {
    pub fn w(&self, utility: &Utility, v: f64) -> f64 {
        utility.u(phi(v, utility.gamma)) + self.a * v + self.b
    }
}

pub fn tune_ab(utility: &Utility, params: &ModelParams) -> Result<TunedWeights> {
    let (v0, v1) = (params.v_min(), params.v_max());
    if !(v1 - v0 > 0.0) {
        return Err(Error::Degenerate(format!("v_min = v_max = {v0}")));
    }
    let (u0, u1) = (utility.u(params.beta_min), utility.u(params.beta_max));
    let a = -(u1 - u0) / (v1 - v0);
    Ok(TunedWeights { a, b: -u0 - a * v0 })
}

/// Speed h(x) at which a velocity path passes x on its way up or down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedProfile {
    pub direction: Direction,
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    /// Grid points where no interior root existed and h sits on a slope bound.
    pub clamped: Vec<bool>,
}

impl SpeedProfile {
    /// Linear interpolation of h, zero outside the grid.
    pub fn speed_at(&self, v: f64) -> f64 {
        let n = self.x.len();
        if n == 0 || v < self.x[0] || v > self.x[n - 1] {
            return 0.0;
        }
        let i = self.x.partition_point(|&x| x <= v).clamp(1, n - 1);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let s = if x1 > x0 { (v - x0) / (x1 - x0) } else { 0.0 };
        self.h[i - 1] + s * (self.h[i] - self.h[i - 1])
    }

    pub fn clamped_fraction(&self) -> f64 {
        if self.clamped.is_empty() {
            return 0.0;
        }
        self.clamped.iter().filter(|&&c| c).count() as f64 / self.clamped.len() as f64
    }
}

/// `n` evenly spaced velocities from v_min to v_max inclusive.
pub fn velocity_grid(params: &ModelParams, n: usize) -> Vec<f64> {
    let (a, b) = (params.v_min(), params.v_max());
    let n = n.max(2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Solves G_x′(h)·h − G_x(h) = w(x) at each grid point, clamping to the slope
/// bounds when the root lies beyond them.
pub fn el_speed_profile(
    utility: &Utility,
    weights: &TunedWeights,
    params: &ModelParams,
    direction: Direction,
    grid: &[f64],
) -> Result<SpeedProfile> {
    if utility.is_linear() {
        return Err(Error::Degenerate(
            "linear utility has G = 0; use the bang-bang synthesis instead".into(),
        ));
    }
    let mut h = Vec::with_capacity(grid.len());
    let mut clamped = Vec::with_capacity(grid.len());
    for &x in grid {
        let w = weights.w(utility, x);
        let (lo, hi) = params.slope_bounds(x);
        let bound = match direction {
            Direction::Up => hi.max(0.0),
            Direction::Down => lo.min(0.0),
        };
        // F(h) = G′h − G is 0 at h = 0 and decreases in |h| for concave u
        let f = |s: f64| utility.g_prime(x, s) * s - utility.g(x, s);
        if w >= 0.0 || bound == 0.0 {
            h.push(0.0);
            clamped.push(false);
        } else if f(bound) > w {
            h.push(bound);
            clamped.push(true);
        } else {
            // g(t) = w − F(t·bound) increases from w < 0 at t = 0
            let root = bisect_increasing(|t| w - f(t * bound), 0.0, 1.0, ROOT_TOL, 0.0);
            h.push(root * bound);
            clamped.push(false);
        }
    }
    Ok(SpeedProfile {
        direction,
        x: grid.to_vec(),
        h,
        clamped,
    })
}

/// One monotone leg of the path: velocity against elapsed time.
///
/// The mesh is graded toward the turning point, where the speed can vanish
/// linearly and 1/h has a logarithmic singularity.
#[derive(Debug, Clone)]
struct Leg {
    v: Vec<f64>,
    t: Vec<f64>,
    /// ∫(V − γ) dt over the leg.
    area: f64,
    up: bool,
}

impl Leg {
    /// From `gamma` to `turn` (`outward`) or back.
    fn build(profile: &SpeedProfile, gamma: f64, turn: f64, outward: bool) -> Result<Self> {
        let (from, to) = if outward {
            (gamma, turn)
        } else {
            (turn, gamma)
        };
        let mut v = Vec::with_capacity(LEG_POINTS + 1);
        let mut t = Vec::with_capacity(LEG_POINTS + 1);
        let (mut elapsed, mut area) = (0.0, 0.0);
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=LEG_POINTS {
            let s = i as f64 / LEG_POINTS as f64;
            let frac = if outward {
                1.0 - (1.0 - s).powi(4)
            } else {
                s.powi(4)
            };
            let x = if outward {
                gamma + (turn - gamma) * frac
            } else {
                turn + (gamma - turn) * frac
            };
            let inv = 1.0 / profile.speed_at(x);
            if !inv.is_finite() || inv * (to - from) < 0.0 {
                return Err(Error::Degenerate(format!(
                    "speed profile stalls at V = {x}"
                )));
            }
            if let Some((px, pinv)) = prev {
                elapsed += 0.5 * (x - px) * (inv + pinv);
                area += 0.5 * (x - px) * ((x - gamma) * inv + (px - gamma) * pinv);
            }
            prev = Some((x, inv));
            v.push(x);
            t.push(elapsed);
        }
        Ok(Self {
            v,
            t,
            area,
            up: to > from,
        })
    }

    fn duration(&self) -> f64 {
        *self.t.last().expect("leg has points")
    }

    fn velocity_at(&self, s: f64) -> f64 {
        let n = self.t.len();
        let i = self.t.partition_point(|&x| x <= s).clamp(1, n - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let f = if t1 > t0 {
            ((s - t0) / (t1 - t0)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        self.v[i - 1] + f * (self.v[i] - self.v[i - 1])
    }
}

/// The two legs γ → turn → γ.
fn half_cycle(down: &SpeedProfile, up: &SpeedProfile, gamma: f64, turn: f64) -> Result<[Leg; 2]> {
    if turn < gamma {
        Ok([
            Leg::build(down, gamma, turn, true)?,
            Leg::build(up, gamma, turn, false)?,
        ])
    } else {
        Ok([
            Leg::build(up, gamma, turn, true)?,
            Leg::build(down, gamma, turn, false)?,
        ])
    }
}

fn half_area(down: &SpeedProfile, up: &SpeedProfile, gamma: f64, turn: f64) -> Result<f64> {
    let [a, b] = half_cycle(down, up, gamma, turn)?;
    Ok((a.area + b.area).abs())
}

fn solve_turn(
    down: &SpeedProfile,
    up: &SpeedProfile,
    params: &ModelParams,
    area: f64,
    below: bool,
) -> Result<[Leg; 2]> {
    let gamma = params.gamma;
    let edge = if below {
        params.v_min()
    } else {
        params.v_max()
    };
    // stay off the rest velocity where both speeds vanish
    let reach = |s: f64| gamma + s * (edge - gamma);
    let s_max = 1.0 - 1e-12;
    let most = half_area(down, up, gamma, reach(s_max))?;
    if !(most >= area) {
        return Err(Error::Infeasible {
            reason: format!(
                "speed profiles reach at most area {most} but the walls are {area} apart"
            ),
            bracket: Some((0.0, most)),
        });
    }
    let mut failure = None;
    let s = bisect_increasing(
        |s| match half_area(down, up, gamma, reach(s)) {
            Ok(a) => a - area,
            Err(e) => {
                failure = Some(e);
                0.0
            }
        },
        0.0,
        s_max,
        1e-15,
        0.0,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    half_cycle(down, up, gamma, reach(s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElRun {
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub control: PiecewiseControl,
    /// Lowest and highest velocity of the cycle.
    pub turning: (f64, f64),
    pub period: f64,
}

/// Follows the speed profiles wall to wall: down from V = γ at the upper wall
/// to the lower turning point, up through γ at the lower wall to the upper
/// turning point, and back, repeated and cut at the horizon. β is recovered
/// as V̇ + φ(V) at interval midpoints.
pub fn el_trajectory(
    up: &SpeedProfile,
    down: &SpeedProfile,
    params: &ModelParams,
    walls: &Walls,
    dt: f64,
) -> Result<ElRun> {
    params.validate()?;
    if up.direction != Direction::Up || down.direction != Direction::Down {
        return Err(Error::param("profiles", "need one up and one down profile"));
    }
    let gamma = params.gamma;
    if !(params.v_min() < gamma && gamma < params.v_max()) {
        return Err(Error::infeasible(format!(
            "gamma = {gamma} is not a rest velocity strictly inside [{}, {}]",
            params.v_min(),
            params.v_max()
        )));
    }
    let [l0, l1] = solve_turn(down, up, params, walls.gap(), true)?;
    let [l2, l3] = solve_turn(down, up, params, walls.gap(), false)?;
    let turning = (l0.v[LEG_POINTS], l2.v[LEG_POINTS]);
    let legs = [l0, l1, l2, l3];
    let period: f64 = legs.iter().map(Leg::duration).sum();
    let profile_for = |leg: &Leg| if leg.up { up } else { down };

    let locate = |t: f64| -> (f64, f64) {
        let mut s = t % period;
        for leg in &legs {
            if s <= leg.duration() {
                let v = leg.velocity_at(s);
                return (v, profile_for(leg).speed_at(v));
            }
            s -= leg.duration();
        }
        (gamma, 0.0)
    };

    let times = sample_times(params.horizon, dt)?;
    let mut values = Vec::with_capacity(times.len() - 1);
    for w in times.windows(2) {
        let (v, h) = locate(0.5 * (w[0] + w[1]));
        values.push((phi(v, gamma) + h).clamp(params.beta_min, params.beta_max));
    }
    let control = PiecewiseControl::new(times.clone(), values)?;

    let mut samples = Vec::with_capacity(times.len());
    let mut position = walls.upper;
    let mut prev: Option<(f64, f64)> = None;
    for (i, &t) in times.iter().enumerate() {
        let (v, _) = locate(t);
        if let Some((pt, pv)) = prev {
            position += 0.5 * (t - pt) * (v + pv);
        }
        prev = Some((t, v));
        let beta = control.values()[i.min(times.len() - 2)];
        let beta_left = control.values()[i.saturating_sub(1)];
        samples.push(Sample {
            t,
            velocity: v,
            position,
            beta,
            beta_left,
            ei: None,
        });
    }
    Ok(ElRun {
        trajectory: Trajectory::from_samples(dt, samples),
        control: control.merged(),
        turning,
        period,
    })
}

/// Longest 10–90% rise of β between the bounds, measured from the last time β
/// sat below the 10% level to the first time after it reaches 90%.
pub fn rise_time(control: &PiecewiseControl, params: &ModelParams) -> Option<f64> {
    let span = params.beta_max - params.beta_min;
    let low = params.beta_min + 0.1 * span;
    let high = params.beta_min + 0.9 * span;
    let mut last_low: Option<f64> = None;
    let mut best: Option<f64> = None;
    for seg in control.segments() {
        if seg.value <= low {
            last_low = Some(seg.end);
        } else if seg.value >= high {
            if let Some(t0) = last_low.take() {
                let r = seg.start - t0;
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
        }
    }
    best
}

/// Largest number of times V crosses `level` within one excursion, where
/// excursions are the stretches between successive crossings of γ.
pub fn max_crossings_per_excursion(traj: &Trajectory, gamma: f64, level: f64) -> usize {
    let pts = traj.points();
    let mut best = 0;
    let mut count = 0;
    for w in pts.windows(2) {
        let (a, b) = (w[0].velocity, w[1].velocity);
        if (a - gamma) * (b - gamma) < 0.0 || (b == gamma && a != gamma) {
            best = best.max(count);
            count = 0;
        }
        if (a - level) * (b - level) < 0.0 || (b == level && a != level) {
            count += 1;
        }
    }
    best.max(count)
}

/// ΔU of V(t) = v + Σ aᵢ·sin(2πt/λᵢ) against V ≡ v over `[0, horizon]`.
///
/// Every wavelength must fit a whole number of times into the horizon so the
/// endpoints and ∫V match the constant path; the boundary term then cancels.
pub fn fourier_delta(
    utility: &Utility,
    params: &ModelParams,
    v: f64,
    modes: &[(f64, f64)],
    horizon: f64,
) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::param(
            "horizon",
            format!("must be > 0, got {horizon}"),
        ));
    }
    for &(wavelength, _) in modes {
        let m = horizon / wavelength;
        if !(wavelength > 0.0) || (m - m.round()).abs() > 1e-9 * m.max(1.0) || m.round() < 1.0 {
            return Err(Error::param(
                "wavelength",
                format!("{wavelength} must divide the horizon {horizon} a whole number of times"),
            ));
        }
    }
    let gamma = params.gamma;
    let shortest = modes.iter().map(|m| m.0).fold(horizon, f64::min);
    let panels = ((horizon / shortest) as usize * 256).max(2048);
    let path = |t: f64| -> (f64, f64) {
        modes.iter().fold((v, 0.0), |(x, dx), &(l, a)| {
            let w = 2.0 * PI / l;
            (x + a * (w * t).sin(), dx + a * w * (w * t).cos())
        })
    };
    let h = horizon / panels as f64;
    for i in 0..=panels {
        let t = h * i as f64;
        let (x, dx) = path(t);
        let beta = dx + phi(x, gamma);
        if !(x > 0.0) || beta < params.beta_min - 1e-12 || beta > params.beta_max + 1e-12 {
            return Err(Error::infeasible(format!(
                "perturbation needs beta = {beta} at t = {t}, outside [{}, {}]",
                params.beta_min, params.beta_max
            )));
        }
    }
    let base = utility.u(phi(v, gamma));
    let f = |t: f64| {
        let (x, dx) = path(t);
        utility.u(phi(x, gamma)) + utility.g(x, dx) - base
    };
    Ok(simpson(&f, 0.0, horizon, panels))
}

/// Single-mode [`fourier_delta`].
pub fn fourier_worst_check(
    utility: &Utility,
    params: &ModelParams,
    v: f64,
    wavelength: f64,
    amplitude: f64,
    horizon: f64,
) -> Result<f64> {
    fourier_delta(utility, params, v, &[(wavelength, amplitude)], horizon)
}

/// Smallest whole-mode wavelength `horizon / m` such that every feasible
/// single-mode perturbation with a listed amplitude and a wavelength at least
/// as long has ΔU ≥ −`tol`. Scans m = 1, 2, … up to `max_modes`.
pub fn wavelength_threshold(
    utility: &Utility,
    params: &ModelParams,
    v: f64,
    amplitudes: &[f64],
    horizon: f64,
    max_modes: usize,
    tol: f64,
) -> Result<f64> {
    let mut threshold = None;
    for m in 1..=max_modes {
        let wavelength = horizon / m as f64;
        let mut ok = true;
        for &a in amplitudes {
            match fourier_worst_check(utility, params, v, wavelength, a, horizon) {
                Ok(d) if d < -tol => ok = false,
                Ok(_) | Err(Error::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        if !ok {
            break;
        }
        threshold = Some(wavelength);
    }
    threshold.ok_or_else(|| Error::infeasible("even the longest wavelength lowers U"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_phase, PhaseState, DEFAULT_DT};
    use crate::functionals::{activity_total, activity_via_v};

    fn reference() -> ModelParams {
        ModelParams::reference(12.0)
    }

    fn qi() -> Utility {
        Utility::new(
            UtilityVariant::QuadraticInverse { a1: 0.75, a2: 0.25 },
            &reference(),
        )
        .unwrap()
    }

    fn cq(c: f64) -> Utility {
        Utility::new(UtilityVariant::ConcaveQuadratic { c }, &reference()).unwrap()
    }

    #[test]
    fn quadratic_inverse_values() {
        let u = qi();
        assert!((u.u(1.0) - 1.0).abs() < 1e-15);
        assert!((u.quadratic_share(1.0).unwrap() - 0.25).abs() < 1e-15);
        let s_hi = u.quadratic_share(2.25).unwrap();
        let s_lo = u.quadratic_share(0.25).unwrap();
        assert!((s_hi - 0.38).abs() < 0.01, "{s_hi}");
        assert!((s_lo - 0.09).abs() < 0.01, "{s_lo}");
        let h = 1e-6;
        assert!((u.u_prime(1.3) - (u.u(1.3 + h) - u.u(1.3 - h)) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn validation() {
        let p = reference();
        assert!(Utility::new(UtilityVariant::ConcaveQuadratic { c: 0.25 }, &p).is_err());
        assert!(Utility::new(UtilityVariant::QuadraticInverse { a1: 0.0, a2: 1.0 }, &p).is_err());
        let err = Utility::new(UtilityVariant::ConcaveQuadratic { c: -1.0 }, &p).unwrap_err();
        assert!(err.to_string().contains("utility.c"));
    }

    #[test]
    fn extension_is_c1() {
        let u = qi();
        for b in [0.25, 2.25] {
            let e = 1e-9;
            assert!((u.u(b - e) - u.u(b + e)).abs() < 1e-8);
            assert!((u.u_prime(b - e) - u.u_prime(b + e)).abs() < 1e-8);
        }
        assert!(u.u(0.0).is_finite() && u.u(10.0).is_finite());
    }

    #[test]
    fn g_properties() {
        let lin = Utility::new(UtilityVariant::Linear, &reference()).unwrap();
        let c = cq(0.1);
        for &y in &[0.6, 1.0, 1.4] {
            assert_eq!(qi().g(y, 0.0), 0.0);
            assert!(lin.g(y, 0.7).abs() < 1e-15);
            for &x in &[-0.3, 0.2, 0.5] {
                let bx = x + phi(y, 1.0);
                if (0.25..=2.25).contains(&bx) {
                    assert!((c.g(y, x) + 0.1 * x * x).abs() < 1e-12);
                }
                assert!(qi().g(y, x) <= 0.0);
            }
        }
    }

    #[test]
    fn r_is_identity_for_linear() {
        let lin = Utility::new(UtilityVariant::Linear, &reference()).unwrap();
        assert!((lin.r(1.7) - 1.7).abs() < 1e-12);
        assert!((lin.r_between(1.2, 0.4) + 0.8).abs() < 1e-12);
    }

    #[test]
    fn useful_total_values() {
        let c = PiecewiseControl::constant(1.0, 12.0).unwrap();
        assert!((useful_total(&c, &cq(0.1)) - 10.8).abs() < 1e-12);
        let lin = Utility::new(UtilityVariant::Linear, &reference()).unwrap();
        let d = PiecewiseControl::new(vec![0.0, 3.3, 12.0], vec![2.25, 0.25]).unwrap();
        assert_eq!(useful_total(&d, &lin), activity_total(&d));
    }

    #[test]
    fn decomposition_matches_total() {
        let p = reference();
        let c = PiecewiseControl::new(vec![0.0, 1.7, 4.25, 8.0, 12.0], vec![0.25, 2.25, 1.1, 0.6])
            .unwrap();
        let tr = simulate_phase(
            &p,
            &c,
            PhaseState {
                velocity: 0.9,
                position: 0.0,
            },
            DEFAULT_DT,
        )
        .unwrap();
        for u in [
            qi(),
            cq(0.1),
            Utility::new(UtilityVariant::Linear, &p).unwrap(),
        ] {
            let d = objective_decomposed(&tr, &u);
            assert!(
                (d.total() - useful_total(&c, &u)).abs() < 1e-4,
                "{:?}",
                u.variant
            );
        }
        let lin = Utility::new(UtilityVariant::Linear, &p).unwrap();
        let d = objective_decomposed(&tr, &lin);
        assert_eq!(d.correction, 0.0);
        assert!((d.total() - activity_via_v(&tr, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tuned_weights_linear() {
        let p = reference();
        let lin = Utility::new(UtilityVariant::Linear, &p).unwrap();
        let w = tune_ab(&lin, &p).unwrap();
        assert!((w.a + 2.0).abs() < 1e-12 && (w.b - 0.75).abs() < 1e-12);
        let q = cq(0.1);
        let w = tune_ab(&q, &p).unwrap();
        assert!(w.w(&q, 0.5).abs() < 1e-10 && w.w(&q, 1.5).abs() < 1e-10);
        assert!(w.w(&q, 1.0) < 0.0);
    }

    #[test]
    fn profile_matches_closed_form() {
        let p = reference();
        let u = cq(0.1);
        let w = tune_ab(&u, &p).unwrap();
        let grid = velocity_grid(&p, 101);
        let prof = el_speed_profile(&u, &w, &p, Direction::Up, &grid).unwrap();
        for ((&x, &h), &cl) in prof.x.iter().zip(&prof.h).zip(&prof.clamped) {
            let exact = (-w.w(&u, x) / 0.1).max(0.0).sqrt();
            let (_, hi) = p.slope_bounds(x);
            assert!((h - exact.min(hi)).abs() < 1e-8, "x={x}");
            if (exact - hi).abs() > 1e-6 {
                assert_eq!(cl, exact > hi, "x={x}");
            }
        }
        assert_eq!(prof.h[0], 0.0);
        assert!(prof.h[100].abs() < 1e-6);
        let lin = Utility::new(UtilityVariant::Linear, &p).unwrap();
        assert!(matches!(
            el_speed_profile(&lin, &w, &p, Direction::Up, &grid),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fourier_zero_amplitude() {
        let p = ModelParams::reference(36.0);
        assert_eq!(
            fourier_worst_check(&cq(0.1), &p, 1.0, 6.0, 0.0, 36.0).unwrap(),
            0.0
        );
        assert!(fourier_worst_check(&cq(0.1), &p, 1.0, 5.0, 0.1, 36.0).is_err());
    }

    #[test]
    fn fourier_matches_closed_form() {
        // u(φ(V)) = V² − cV⁴ and G = −cV̇² for γ = 1
        let p = ModelParams::reference(36.0);
        let (a, l, c): (f64, f64, f64) = (0.2, 6.0, 0.1);
        let w = 2.0 * PI / l;
        let expected = 36.0
            * (a * a / 2.0 - c * (3.0 * a * a + 3.0 * a.powi(4) / 8.0) - c * a * a * w * w / 2.0);
        let got = fourier_worst_check(&cq(c), &p, 1.0, l, a, 36.0).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }
}
