//! Activity functionals, boundary data and constraint checks.

use serde::{Deserialize, Serialize};

use crate::control::PiecewiseControl;
use crate::dynamics::{phi, ModelParams, Sample, Trajectory};
use crate::error::{Error, Result};

/// Default wall tolerance in log-prevalence.
pub const DEFAULT_WALL_TOL: f64 = 1e-3;

/// Intervals shorter than this are skipped by the finite-difference slope check.
const MIN_SLOPE_INTERVAL: f64 = 1e-9;

/// `(V(0), V(T), ∫V dt)`: fixes the SEIR endpoints up to a common scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTriple {
    pub v_start: f64,
    pub v_end: f64,
    pub v_integral: f64,
}

impl BoundaryTriple {
    pub fn new(v_start: f64, v_end: f64, v_integral: f64) -> Result<Self> {
        if !(v_start > 0.0) || !(v_end > 0.0) || !(v_integral > 0.0) {
            return Err(Error::param(
                "target",
                format!("boundary triple must be positive, got ({v_start}, {v_end}, {v_integral})"),
            ));
        }
        Ok(Self {
            v_start,
            v_end,
            v_integral,
        })
    }
}

/// Log-prevalence walls `lower <= log I <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Walls {
    pub lower: f64,
    pub upper: f64,
}

impl Walls {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::param(
                "walls",
                format!("need lower < upper, got [{lower}, {upper}]"),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A = ∫β dt, summed exactly over the schedule's intervals.
pub fn activity_total(control: &PiecewiseControl) -> f64 {
    control.segments().map(|s| s.value * s.duration()).sum()
}

/// A recomputed from the velocity path: ∫φ(V) dt + V(T) − V(0).
pub fn activity_via_v(traj: &Trajectory, gamma: f64) -> f64 {
    if traj.samples.len() < 2 {
        return 0.0;
    }
    traj.integrate(|s, _| phi(s.velocity, gamma)) + (traj.last().velocity - traj.first().velocity)
}

pub fn boundary_triple_of(traj: &Trajectory) -> BoundaryTriple {
    BoundaryTriple {
        v_start: traj.first().velocity,
        v_end: traj.last().velocity,
        v_integral: traj.integrate(|s, _| s.velocity),
    }
}

/// Smallest and largest log I along the path (grid samples and knots).
pub fn log_prevalence_range(traj: &Trajectory, gamma: f64) -> (f64, f64) {
    traj.points()
        .iter()
        .map(|s| s.log_prevalence(gamma))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(x), hi.max(x))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    SlopeBelow,
    SlopeAbove,
    WallBelow,
    WallAbove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub t: f64,
    pub kind: ViolationKind,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub first_violation: Option<Violation>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks β_min − φ(V) ≤ V̇ ≤ β_max − φ(V) by forward differences between
/// consecutive points, and the walls when given.
///
/// Knots split grid steps at control breakpoints, so no difference straddles a
/// jump in β. The drag is evaluated at the interval midpoint. Violations are
/// reported in time order; the first one wins.
pub fn feasibility_check(
    traj: &Trajectory,
    params: &ModelParams,
    walls: Option<&Walls>,
    tol: f64,
) -> FeasibilityReport {
    let pts = traj.points();
    let wall_violation = |s: &Sample| -> Option<Violation> {
        let walls = walls?;
        let log_i = s.log_prevalence(params.gamma);
        if log_i < walls.lower - tol {
            Some(Violation {
                t: s.t,
                kind: ViolationKind::WallBelow,
                value: log_i,
                bound: walls.lower,
            })
        } else if log_i > walls.upper + tol {
            Some(Violation {
                t: s.t,
                kind: ViolationKind::WallAbove,
                value: log_i,
                bound: walls.upper,
            })
        } else {
            None
        }
    };

    for (i, p) in pts.iter().enumerate() {
        if let Some(v) = wall_violation(p) {
            return FeasibilityReport {
                first_violation: Some(v),
            };
        }
        let Some(q) = pts.get(i + 1) else { break };
        let h = q.t - p.t;
        if h < MIN_SLOPE_INTERVAL {
            continue;
        }
        let slope = (q.velocity - p.velocity) / h;
        let (lo, hi) = params.slope_bounds(0.5 * (p.velocity + q.velocity));
        let violation = if slope < lo - tol {
            Some((ViolationKind::SlopeBelow, lo))
        } else if slope > hi + tol {
            Some((ViolationKind::SlopeAbove, hi))
        } else {
            None
        };
        if let Some((kind, bound)) = violation {
            return FeasibilityReport {
                first_violation: Some(Violation {
                    t: p.t,
                    kind,
                    value: slope,
                    bound,
                }),
            };
        }
    }
    FeasibilityReport {
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate_ei, simulate_phase, EIState, PhaseState, DEFAULT_DT};

    fn reference_run(control: &PiecewiseControl, v0: f64) -> Trajectory {
        let p = ModelParams::reference(control.horizon());
        simulate_phase(
            &p,
            control,
            PhaseState {
                velocity: v0,
                position: 0.0,
            },
            DEFAULT_DT,
        )
        .unwrap()
    }

    #[test]
    fn activity_total_values() {
        let c = PiecewiseControl::constant(1.0, 12.0).unwrap();
        assert_eq!(activity_total(&c), 12.0);
        let cycle = PiecewiseControl::from_segments([(5.712, 2.25), (6.288, 0.25)]).unwrap();
        assert!((activity_total(&cycle) - 14.424).abs() < 1e-12);
        let tiny = PiecewiseControl::constant(2.0, 1e-300).unwrap();
        assert!(activity_total(&tiny) < 1e-299);
    }

    #[test]
    fn activity_via_v_constant() {
        let c = PiecewiseControl::constant(1.0, 12.0).unwrap();
        let tr = reference_run(&c, 1.0);
        assert!((activity_via_v(&tr, 1.0) - 12.0).abs() < 1e-12);
        let t = boundary_triple_of(&tr);
        assert_eq!((t.v_start, t.v_end), (1.0, 1.0));
        assert!((t.v_integral - 12.0).abs() < 1e-12);
    }

    #[test]
    fn activity_identity_with_off_grid_switches() {
        let c = PiecewiseControl::new(
            vec![0.0, 0.7, 3.2, 5.5, 9.87654, 12.0],
            vec![0.25, 2.25, 0.9, 0.25, 2.25],
        )
        .unwrap();
        let tr = reference_run(&c, 0.8);
        let lhs = activity_total(&c);
        let rhs = activity_via_v(&tr, 1.0);
        assert!((lhs - rhs).abs() < 1e-5, "{lhs} vs {rhs}");
    }

    #[test]
    fn log_growth_identity_against_ei() {
        let p = ModelParams::reference(12.0);
        let c = PiecewiseControl::new(vec![0.0, 2.5, 7.25, 12.0], vec![2.25, 0.25, 1.3]).unwrap();
        let init = EIState {
            exposed: 2e-4,
            infectious: 1e-4,
        };
        let tr = simulate_ei(&p, &c, init, DEFAULT_DT).unwrap();
        let triple = boundary_triple_of(&tr);
        let i0 = tr.first().ei.unwrap().infectious;
        let i1 = tr.last().ei.unwrap().infectious;
        let lhs = triple.v_integral - p.gamma * p.horizon;
        assert!((lhs - (i1 / i0).ln()).abs() < 1e-6);
    }

    #[test]
    fn admissible_run_passes_feasibility() {
        let p = ModelParams::reference(12.0);
        let c =
            PiecewiseControl::new(vec![0.0, 1.2345, 6.0, 12.0], vec![0.25, 2.25, 0.25]).unwrap();
        let tr = reference_run(&c, 1.0);
        assert!(feasibility_check(&tr, &p, None, 1e-6).passed());
    }

    #[test]
    fn injected_slope_is_caught() {
        let p = ModelParams::reference(2.0);
        let c = PiecewiseControl::constant(1.0, 2.0).unwrap();
        let mut tr = reference_run(&c, 1.0);
        let k = 700;
        let s = tr.samples[k];
        let h = tr.samples[k + 1].t - s.t;
        tr.samples[k + 1].velocity = s.velocity + h * (p.beta_max - p.phi(s.velocity) + 1.0);
        let report = feasibility_check(&tr, &p, None, 1e-3);
        let v = report.first_violation.unwrap();
        assert_eq!(v.kind, ViolationKind::SlopeAbove);
        assert_eq!(v.t, s.t);
    }

    #[test]
    fn walls_are_enforced() {
        let p = ModelParams::reference(4.0);
        let c = PiecewiseControl::constant(2.25, 4.0).unwrap();
        let tr = reference_run(&c, 1.0);
        let walls = Walls::new(-1.0, 0.5).unwrap();
        let v = feasibility_check(&tr, &p, Some(&walls), 1e-3)
            .first_violation
            .unwrap();
        assert_eq!(v.kind, ViolationKind::WallAbove);
        assert!(Walls::new(0.0, 0.0).is_err());
    }
}
