//! Line search for step lengths satisfying the strong Wolfe conditions.
//!
//! Bracketing phase followed by a zoom phase, as in Nocedal & Wright
//! (Algorithms 3.5 and 3.6). Trial steps inside a bracket come from the cubic
//! interpolating both endpoint values and slopes, falling back to a quadratic
//! and then to bisection when the interpolant lands too close to an endpoint.

use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Trial steps allowed in each of the bracketing and zoom phases.
    pub max_bracket_steps: usize,
    pub initial_step: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            c2: 0.4,
            max_bracket_steps: 20,
            initial_step: 1.0,
        }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "line search needs 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_bracket_steps == 0 {
            return Err(Error::InvalidConfig("max_bracket_steps must be >= 1".into()));
        }
        if !(self.initial_step.is_finite() && self.initial_step > 0.0) {
            return Err(Error::InvalidConfig("initial_step must be > 0".into()));
        }
        Ok(())
    }
}

/// Accepted step and the function data at it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub value: f64,
    /// Directional derivative at the accepted step.
    pub slope: f64,
    /// Function-and-gradient evaluations spent by the search.
    pub evaluations: usize,
}

/// Both strong Wolfe inequalities for step `alpha`.
pub fn check_strong_wolfe(
    phi0: f64,
    dphi0: f64,
    alpha: f64,
    phi: f64,
    dphi: f64,
    c1: f64,
    c2: f64,
) -> bool {
    phi <= phi0 + c1 * alpha * dphi0 && dphi.abs() <= c2 * dphi0.abs()
}

#[derive(Clone, Copy)]
struct Sample {
    alpha: f64,
    phi: f64,
    dphi: f64,
}

impl Sample {
    fn finite(&self) -> bool {
        self.phi.is_finite() && self.dphi.is_finite()
    }
}

/// Strong Wolfe search on the scalar function `phi(alpha) -> (value, slope)`.
///
/// `phi0` and `dphi0` describe `alpha = 0`; `dphi0` must be negative.
pub fn scalar_wolfe_search<F>(
    mut phi: F,
    phi0: f64,
    dphi0: f64,
    alpha_init: f64,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(dphi0 < 0.0) {
        return Err(Error::NotDescentDirection { slope: dphi0 });
    }
    let LineSearchParams { c1, c2, .. } = *params;
    let max_steps = params.max_bracket_steps;
    let mut evaluations = 0;
    let mut eval = |alpha: f64| {
        evaluations += 1;
        let (phi, dphi) = phi(alpha);
        Sample { alpha, phi, dphi }
    };
    let armijo = |s: &Sample| s.phi <= phi0 + c1 * s.alpha * dphi0;
    let curvature = |s: &Sample| s.dphi.abs() <= -c2 * dphi0;

    let origin = Sample {
        alpha: 0.0,
        phi: phi0,
        dphi: dphi0,
    };
    let mut prev = origin;
    let mut alpha = alpha_init;
    let mut bracket = None;

    for i in 0..max_steps {
        let cur = eval(alpha);
        if !cur.finite() || !armijo(&cur) || (i > 0 && cur.phi >= prev.phi) {
            bracket = Some((prev, cur));
            break;
        }
        if curvature(&cur) {
            return Ok(LineSearchOutcome {
                alpha: cur.alpha,
                value: cur.phi,
                slope: cur.dphi,
                evaluations,
            });
        }
        if cur.dphi >= 0.0 {
            bracket = Some((cur, prev));
            break;
        }
        prev = cur;
        alpha *= 2.0;
    }

    let Some((mut lo, mut hi)) = bracket else {
        return Err(Error::LineSearchFailed { steps: evaluations });
    };

    for _ in 0..max_steps {
        let width = (hi.alpha - lo.alpha).abs();
        if width <= f64::EPSILON * lo.alpha.abs().max(hi.alpha.abs()) {
            break;
        }
        let trial = eval(next_trial(&lo, &hi));
        if !trial.finite() || !armijo(&trial) || trial.phi >= lo.phi {
            hi = trial;
        } else {
            if curvature(&trial) {
                return Ok(LineSearchOutcome {
                    alpha: trial.alpha,
                    value: trial.phi,
                    slope: trial.dphi,
                    evaluations,
                });
            }
            if trial.dphi * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = trial;
        }
    }
    Err(Error::LineSearchFailed { steps: evaluations })
}

/// Interpolated trial step strictly inside the bracket `[lo, hi]`.
fn next_trial(lo: &Sample, hi: &Sample) -> f64 {
    let (a, b) = if lo.alpha < hi.alpha {
        (lo.alpha, hi.alpha)
    } else {
        (hi.alpha, lo.alpha)
    };
    let width = b - a;
    let inside = |t: f64, margin: f64| t.is_finite() && t > a + margin * width && t < b - margin * width;

    if hi.finite() {
        if let Some(t) = cubic_minimizer(lo, hi) {
            if inside(t, 0.01) {
                return t;
            }
        }
        if let Some(t) = quadratic_minimizer(lo, hi) {
            if inside(t, 0.1) {
                return t;
            }
        }
    }
    0.5 * (a + b)
}

/// Minimizer of the cubic matching values and slopes at both points.
fn cubic_minimizer(p: &Sample, q: &Sample) -> Option<f64> {
    let d1 = p.dphi + q.dphi - 3.0 * (p.phi - q.phi) / (p.alpha - q.alpha);
    let disc = d1 * d1 - p.dphi * q.dphi;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (q.alpha - p.alpha).signum() * disc.sqrt();
    let denom = q.dphi - p.dphi + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    Some(q.alpha - (q.alpha - p.alpha) * (q.dphi + d2 - d1) / denom)
}

/// Minimizer of the quadratic matching value and slope at `p` and the value at `q`.
fn quadratic_minimizer(p: &Sample, q: &Sample) -> Option<f64> {
    let h = q.alpha - p.alpha;
    let curv = q.phi - p.phi - p.dphi * h;
    if !(curv > 0.0) {
        return None;
    }
    Some(p.alpha - p.dphi * h * h / (2.0 * curv))
}

/// Strong Wolfe search from `x` along `direction` on a vector objective.
///
/// Returns the outcome together with the gradient at the accepted point. The
/// evaluation at `x` itself is included in `evaluations`.
pub fn wolfe_line_search<O: Objective + ?Sized>(
    obj: &mut O,
    x: &[f64],
    direction: &[f64],
    params: &LineSearchParams,
) -> Result<(LineSearchOutcome, Vec<f64>)> {
    params.validate()?;
    let n = x.len();
    let mut g = vec![0.0; n];
    let phi0 = obj.value_and_gradient(x, &mut g);
    let dphi0 = dot(&g, direction);
    let mut trial = vec![0.0; n];
    let mut outcome = scalar_wolfe_search(
        |alpha| {
            for ((t, xi), di) in trial.iter_mut().zip(x).zip(direction) {
                *t = xi + alpha * di;
            }
            let v = obj.value_and_gradient(&trial, &mut g);
            (v, dot(&g, direction))
        },
        phi0,
        dphi0,
        params.initial_step,
        params,
    )?;
    outcome.evaluations += 1;
    Ok((outcome, g))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
