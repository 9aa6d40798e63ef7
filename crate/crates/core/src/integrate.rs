//! Classical fixed-step RK4 with exact splitting at control breakpoints.

use crate::error::{Error, Result};

/// Sample times `0, dt, 2dt, ..., T`. When `T` is not a multiple of `dt` the
/// last step is shortened so the final sample lands exactly on `T`.
pub fn sample_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::param(
            "horizon",
            format!("must be positive, got {horizon}"),
        ));
    }
    let ratio = horizon / dt;
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    } as usize;
    let steps = steps.max(1);
    let mut times: Vec<f64> = (0..steps).map(|k| k as f64 * dt).collect();
    times.push(horizon);
    Ok(times)
}

pub(crate) struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            stage: vec![0.0; dim],
        }
    }

    /// One in-place step of length `h`. `deriv(y, dy)` must be autonomous over the
    /// step; time dependence enters only through the caller's control lookup.
    pub fn step<F>(&mut self, h: f64, y: &mut [f64], deriv: &mut F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let dim = y.len();
        deriv(y, &mut self.k1);

        for i in 0..dim {
            self.stage[i] = y[i] + 0.5 * h * self.k1[i];
        }
        deriv(&self.stage, &mut self.k2);

        for i in 0..dim {
            self.stage[i] = y[i] + 0.5 * h * self.k2[i];
        }
        deriv(&self.stage, &mut self.k3);

        for i in 0..dim {
            self.stage[i] = y[i] + h * self.k3[i];
        }
        deriv(&self.stage, &mut self.k4);

        for i in 0..dim {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Steps a state across the sample grid, cutting every step at the control
/// breakpoints that fall strictly inside it so each RK4 sub-step sees a
/// constant control.
pub(crate) struct BreakpointStepper<'a> {
    rk: Rk4,
    breaks: &'a [f64],
    cursor: usize,
}

impl<'a> BreakpointStepper<'a> {
    pub fn new(dim: usize, breaks: &'a [f64]) -> Self {
        Self {
            rk: Rk4::new(dim),
            breaks,
            cursor: 0,
        }
    }

    /// Advances `y` from `t0` to `t1`. `deriv(tc, y, dy)` receives the midpoint
    /// of the current sub-step as the control lookup time. `on_knot(t, y)` fires
    /// at each interior breakpoint with the state there.
    pub fn advance<F, K>(&mut self, t0: f64, t1: f64, y: &mut [f64], deriv: &mut F, on_knot: &mut K)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        K: FnMut(f64, &[f64]),
    {
        while self.cursor < self.breaks.len() && self.breaks[self.cursor] <= t0 {
            self.cursor += 1;
        }
        let mut t = t0;
        while self.cursor < self.breaks.len() && self.breaks[self.cursor] < t1 {
            let b = self.breaks[self.cursor];
            let tc = 0.5 * (t + b);
            self.rk.step(b - t, y, &mut |s, d| deriv(tc, s, d));
            on_knot(b, y);
            t = b;
            self.cursor += 1;
        }
        let tc = 0.5 * (t + t1);
        self.rk.step(t1 - t, y, &mut |s, d| deriv(tc, s, d));
    }
}

/// Merges several sorted breakpoint lists into one sorted, deduplicated list.
pub(crate) fn merge_breaks<'a, I>(lists: I) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut all: Vec<f64> = lists.into_iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}
