//! Closed-form solutions of V̇ = β − φ(V) for constant β.
//!
//! Shifting W = V + c with c = (1 − γ)/2 gives the Riccati equation
//! Ẇ = k² − W², k² = β + c², whose solutions are k·tanh (below the fixed
//! point) and k·coth (above it). These are the red/blue curves that bang-bang
//! policies follow.

use std::f64::consts::LN_2;

/// ln cosh(x) without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// ln sinh(x) for x > 0 without overflow.
fn ln_sinh(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - LN_2
    }
}

/// atanh(z) for z ∈ (−1, 1), given 1 − z separately to keep precision near 1.
fn atanh_with_gap(z: f64, one_minus_z: f64) -> f64 {
    0.5 * (z.ln_1p() - one_minus_z.ln())
}

#[derive(Debug, Clone, Copy)]
pub struct ConstantFlow {
    pub beta: f64,
    shift: f64,
    k: f64,
}

impl ConstantFlow {
    pub fn new(beta: f64, gamma: f64) -> Self {
        let shift = 0.5 * (1.0 - gamma);
        Self {
            beta,
            shift,
            k: (beta + shift * shift).sqrt(),
        }
    }

    /// The attracting velocity φ⁻¹(β).
    pub fn fixed_point(&self) -> f64 {
        self.k - self.shift
    }

    /// Phase offset `a` with W(t) = k·tanh(kt + a) or k·coth(kt + a).
    fn phase(&self, v0: f64) -> Phase {
        let w0 = v0 + self.shift;
        let gap = self.fixed_point() - v0; // k − W0
        if gap == 0.0 {
            Phase::Fixed
        } else if gap > 0.0 {
            let z = w0 / self.k;
            Phase::Below(atanh_with_gap(z, gap / self.k))
        } else {
            // coth side: a = atanh(k / W0)
            let z = self.k / w0;
            Phase::Above(atanh_with_gap(z, -gap / w0))
        }
    }

    pub fn velocity_after(&self, v0: f64, t: f64) -> f64 {
        let k = self.k;
        match self.phase(v0) {
            Phase::Fixed => v0,
            Phase::Below(a) => k * (k * t + a).tanh() - self.shift,
            Phase::Above(a) => k / (k * t + a).tanh() - self.shift,
        }
    }

    /// ∫₀ᵗ V ds starting from `v0`.
    pub fn integral(&self, v0: f64, t: f64) -> f64 {
        let k = self.k;
        let w_integral = match self.phase(v0) {
            Phase::Fixed => (v0 + self.shift) * t,
            Phase::Below(a) => ln_cosh(k * t + a) - ln_cosh(a),
            Phase::Above(a) => ln_sinh(k * t + a) - ln_sinh(a),
        };
        w_integral - self.shift * t
    }

    /// Time for the flow to carry `v0` to `v1`, or `None` if `v1` is not on the
    /// forward orbit of `v0`.
    pub fn time_to(&self, v0: f64, v1: f64) -> Option<f64> {
        if v0 == v1 {
            return Some(0.0);
        }
        let k = self.k;
        match (self.phase(v0), self.phase(v1)) {
            (Phase::Below(a0), Phase::Below(a1)) if v1 > v0 => Some((a1 - a0) / k),
            (Phase::Above(a0), Phase::Above(a1)) if v1 < v0 => Some((a1 - a0) / k),
            _ => None,
        }
    }
}

/// Runs `v0` through every interval of `control` in closed form and returns
/// `(V(T), ∫V dt)`.
pub fn propagate(control: &crate::control::PiecewiseControl, gamma: f64, v0: f64) -> (f64, f64) {
    let mut v = v0;
    let mut integral = 0.0;
    for seg in control.segments() {
        let flow = ConstantFlow::new(seg.value, gamma);
        integral += flow.integral(v, seg.duration());
        v = flow.velocity_after(v, seg.duration());
    }
    (v, integral)
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Fixed,
    Below(f64),
    Above(f64),
}
