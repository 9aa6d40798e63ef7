//! Piecewise-constant transmission schedules β(t).

use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};

/// Slack allowed when comparing schedule values against the β bounds.
const BOUND_SLACK: f64 = 1e-12;

/// A schedule that holds `values[i]` on `[breakpoints[i], breakpoints[i + 1])`.
///
/// Breakpoints start at 0 and increase strictly; the last one is the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseControl {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

impl PiecewiseControl {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidControl("schedule has no intervals".into()));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidControl(format!(
                "{} breakpoints for {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControl("first breakpoint must be 0".into()));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidControl("non-finite breakpoint".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidControl(format!(
                "breakpoints not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidControl(format!("bad transmission value {v}")));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    /// Builds a schedule from consecutive `(duration, value)` pieces. Pieces of
    /// zero duration are dropped; negative durations are rejected.
    pub fn from_segments<I>(pieces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut breakpoints = vec![0.0];
        let mut values = Vec::new();
        let mut t = 0.0;
        for (duration, value) in pieces {
            if duration < 0.0 || !duration.is_finite() {
                return Err(Error::InvalidControl(format!(
                    "bad segment duration {duration}"
                )));
            }
            if duration == 0.0 {
                continue;
            }
            t += duration;
            breakpoints.push(t);
            values.push(value);
        }
        Self::new(breakpoints, values)
    }

    /// Like [`from_segments`](Self::from_segments) but pins the final breakpoint
    /// to `horizon`, absorbing accumulated rounding. Pieces shorter than `min_len`
    /// are dropped.
    pub fn from_segments_with_horizon<I>(pieces: I, horizon: f64, min_len: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let kept: Vec<(f64, f64)> = pieces.into_iter().filter(|(d, _)| *d > min_len).collect();
        let mut control = Self::from_segments(kept)?;
        let last = control.breakpoints.len() - 1;
        if (control.breakpoints[last] - horizon).abs() > 1e-6 * horizon.max(1.0) {
            return Err(Error::InvalidControl(format!(
                "segments span {} but horizon is {horizon}",
                control.breakpoints[last]
            )));
        }
        control.breakpoints[last] = horizon;
        if last >= 1 && control.breakpoints[last] <= control.breakpoints[last - 1] {
            return Err(Error::InvalidControl("final segment collapsed".into()));
        }
        Ok(control.merged())
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Breakpoints strictly inside `(0, horizon)`.
    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints[1..self.breakpoints.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &value)| Segment {
                start: w[0],
                end: w[1],
                value,
            })
    }

    fn index_right(&self, t: f64) -> usize {
        // last i with breakpoints[i] <= t
        let i = self.breakpoints.partition_point(|&b| b <= t);
        i.saturating_sub(1).min(self.values.len() - 1)
    }

    /// Right-continuous value at `t`; clamps outside `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> f64 {
        self.values[self.index_right(t)]
    }

    /// Left limit at `t` (the value in force just before `t`). Equals
    /// [`value_at`](Self::value_at) except at interior breakpoints.
    pub fn value_left(&self, t: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < t);
        self.values[i.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// Merges adjacent intervals that carry the same value.
    pub fn merged(&self) -> Self {
        let mut breakpoints = vec![0.0];
        let mut values: Vec<f64> = Vec::new();
        for seg in self.segments() {
            if values.last() == Some(&seg.value) {
                *breakpoints.last_mut().unwrap() = seg.end;
            } else {
                values.push(seg.value);
                breakpoints.push(seg.end);
            }
        }
        Self {
            breakpoints,
            values,
        }
    }

    /// Number of value changes after merging equal neighbours.
    pub fn switch_count(&self) -> usize {
        self.merged().values.len() - 1
    }

    /// Time spent at exactly `value`.
    pub fn time_at(&self, value: f64) -> f64 {
        self.segments()
            .filter(|s| s.value == value)
            .map(|s| s.duration())
            .sum()
    }

    /// Appends `other`, shifted to start at this schedule's horizon.
    pub fn concat(&self, other: &PiecewiseControl) -> Self {
        let offset = self.horizon();
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend(other.breakpoints[1..].iter().map(|b| b + offset));
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self {
            breakpoints,
            values,
        }
        .merged()
    }

    /// Returns a copy with every value shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v + delta).collect(),
        )
    }

    pub fn check_bounds(&self, params: &ModelParams) -> Result<()> {
        if (self.horizon() - params.horizon).abs() > 1e-9 * params.horizon.max(1.0) {
            return Err(Error::InvalidControl(format!(
                "schedule horizon {} does not match model horizon {}",
                self.horizon(),
                params.horizon
            )));
        }
        for seg in self.segments() {
            if seg.value < params.beta_min - BOUND_SLACK
                || seg.value > params.beta_max + BOUND_SLACK
            {
                return Err(Error::InvalidControl(format!(
                    "value {} on [{}, {}) outside [{}, {}]",
                    seg.value, seg.start, seg.end, params.beta_min, params.beta_max
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_schedules() {
        assert!(PiecewiseControl::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(PiecewiseControl::new(vec![0.0, 1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseControl::new(vec![0.5, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseControl::new(vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(PiecewiseControl::from_segments([(1.0, 1.0), (-0.5, 1.0)]).is_err());
    }

    #[test]
    fn lookups_are_right_continuous() {
        let c = PiecewiseControl::new(vec![0.0, 1.0, 3.0], vec![0.25, 2.25]).unwrap();
        assert_eq!(c.value_at(0.0), 0.25);
        assert_eq!(c.value_at(1.0), 2.25);
        assert_eq!(c.value_left(1.0), 0.25);
        assert_eq!(c.value_left(0.0), 0.25);
        assert_eq!(c.value_at(5.0), 2.25);
        assert_eq!(c.interior_breakpoints(), &[1.0]);
    }

    #[test]
    fn merge_and_switch_count() {
        let c = PiecewiseControl::from_segments([
            (1.0, 0.25),
            (1.0, 0.25),
            (2.0, 2.25),
            (0.0, 1.0),
            (1.0, 0.25),
        ])
        .unwrap();
        assert_eq!(c.values().len(), 4);
        assert_eq!(c.switch_count(), 2);
        assert_eq!(c.merged().breakpoints(), &[0.0, 2.0, 4.0, 5.0]);
        assert_eq!(c.time_at(0.25), 3.0);
    }

    #[test]
    fn concat_shifts_breakpoints() {
        let a = PiecewiseControl::constant(1.0, 2.0).unwrap();
        let b = PiecewiseControl::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0]).unwrap();
        let c = a.concat(&b);
        assert_eq!(c.breakpoints(), &[0.0, 3.0, 5.0]);
        assert_eq!(c.values(), &[1.0, 2.0]);
    }
}
