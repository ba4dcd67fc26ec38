//! Minimum L1-norm drift estimation.
//!
//! The criterion is `S1(θ) = ∫_0^T |X_t − x0 e^{θt}| dt` evaluated by the
//! trapezoid rule on the observation grid. It is not convex in `θ`, so the
//! minimizer is located by a coarse scan over the search interval followed by
//! golden-section refinement inside the best scan bracket.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::ou_model::ModelParams;

/// Default number of coarse scan points.
pub const DEFAULT_SCAN_POINTS: usize = 200;

/// Refinement tolerance relative to the width of the search interval.
pub const RELATIVE_TOLERANCE: f64 = 1e-7;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub objective: f64,
    pub n_evals: usize,
    pub bracket: [f64; 2],
}

/// Trapezoid approximation of `∫_0^T |X_t − x0 e^{θ t}| dt`.
pub fn l1_objective(x: &SamplePath, theta: f64, x0: f64) -> f64 {
    let grid = x.grid();
    let n = grid.steps();
    let dt = grid.dt();
    let mut acc = 0.0;
    for (i, (t, v)) in grid.times().zip(x.values()).enumerate() {
        let w = if i == 0 || i == n { 0.5 * dt } else { dt };
        acc += w * (v - x0 * (theta * t).exp()).abs();
    }
    acc
}

/// Coarse scan + golden-section minimizer of [`l1_objective`] over
/// `[theta_lo, theta_hi]`, using [`DEFAULT_SCAN_POINTS`] scan points.
pub fn minimize_l1(x: &SamplePath, p: &ModelParams) -> Result<EstimateResult> {
    minimize_l1_with(x, p, DEFAULT_SCAN_POINTS)
}

pub fn minimize_l1_with(x: &SamplePath, p: &ModelParams, scan_points: usize) -> Result<EstimateResult> {
    let (lo, hi) = (p.theta_lo, p.theta_hi);
    if !(lo <= hi) {
        return Err(Error::EmptyInterval { lo, hi });
    }
    if scan_points < 3 {
        return Err(Error::InvalidArgument(format!(
            "at least 3 scan points are needed, got {scan_points}"
        )));
    }
    let objective = |theta: f64| l1_objective(x, theta, p.x0);
    if lo == hi {
        return Ok(EstimateResult {
            theta_hat: lo,
            objective: objective(lo),
            n_evals: 1,
            bracket: [lo, hi],
        });
    }

    let last = scan_points - 1;
    let node = |k: usize| {
        if k == last {
            hi
        } else {
            lo + (hi - lo) * k as f64 / last as f64
        }
    };
    let scan: Vec<f64> = (0..scan_points).map(|k| objective(node(k))).collect();
    let mut best = 0;
    for (k, &v) in scan.iter().enumerate() {
        if v < scan[best] {
            best = k;
        }
    }
    let a = node(best.saturating_sub(1));
    let b = node((best + 1).min(last));

    let tol = RELATIVE_TOLERANCE * (hi - lo);
    let refined = golden_section(&objective, a, b, tol);

    let (mut theta_hat, mut value) = (node(best), scan[best]);
    if refined.value < value || (refined.value == value && refined.argmin < theta_hat) {
        theta_hat = refined.argmin;
        value = refined.value;
    }
    Ok(EstimateResult {
        theta_hat,
        objective: value,
        n_evals: scan_points + refined.evals,
        bracket: [refined.lo, refined.hi],
    })
}

struct GoldenOutcome {
    argmin: f64,
    value: f64,
    evals: usize,
    lo: f64,
    hi: f64,
}

/// Golden-section search on `[a, b]` until the bracket is narrower than `tol`.
/// Returns the best point it evaluated.
fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> GoldenOutcome {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut evals = 2;
    while b - a > tol {
        // `<=` keeps the left sub-bracket on ties.
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        evals += 1;
    }
    let (argmin, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    GoldenOutcome {
        argmin,
        value,
        evals,
        lo: a,
        hi: b,
    }
}

/// `∫_0^T e^{θ t} dt`, continuous through `θ = 0`.
fn flow_integral(theta: f64, horizon: f64) -> f64 {
    if theta == 0.0 {
        horizon
    } else {
        (theta * horizon).exp_m1() / theta
    }
}

/// Separation of the noise-free flows,
/// `g(δ) = inf_{|θ−θ0|>δ} ∫_0^T |x_t(θ) − x_t(θ0)| dt`.
///
/// For a fixed sign of `θ − θ0` the integrand keeps its sign and the
/// integral grows with `|θ − θ0|`, so the infimum sits on `|θ − θ0| = δ`.
pub fn g_delta(theta0: f64, x0: f64, delta: f64, horizon: f64) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let f0 = flow_integral(theta0, horizon);
    let up = flow_integral(theta0 + delta, horizon) - f0;
    let down = f0 - flow_integral(theta0 - delta, horizon);
    Ok(x0.abs() * up.min(down))
}
