//! The small-noise limit: the Gaussian process
//! `Y_t = e^{θ0 t} ∫_0^t e^{−θ0 s} dG_s` and the limit variable
//! `ζ = argmin_u ∫_0^T |Y_t − u h(t)| dt` with `h(t) = x0 t e^{θ0 t}`.
//!
//! On the grid the criterion is `Σ w_i |h_i| |r_i − u|` with trapezoid
//! weights `w_i` and ratios `r_i = Y_i / h_i`, so `ζ` is a weighted median
//! and is computed exactly.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};
use crate::kernels::Kernel;
use crate::sampler::{cumulative_stieltjes, CholeskySampler, PathSampler, SeedSpec};

/// A realization of `Y` together with the direction `h` on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitInstance {
    pub y: SamplePath,
    pub h: SamplePath,
}

impl LimitInstance {
    pub fn new(y: SamplePath, theta0: f64, x0: f64) -> Self {
        let h = direction(theta0, x0, y.grid());
        Self { y, h }
    }
}

/// `h(t) = x0 t e^{θ0 t}`, the derivative of the flow in `θ` at `θ0`.
pub fn direction(theta0: f64, x0: f64, grid: &TimeGrid) -> SamplePath {
    SamplePath::from_fn(*grid, |t| x0 * t * (theta0 * t).exp())
}

/// `Y` built from a given driver path.
pub fn y_from_driver(theta0: f64, driver: &SamplePath) -> Result<SamplePath> {
    let grid = *driver.grid();
    let integrand = SamplePath::from_fn(grid, |t| (-theta0 * t).exp());
    let integral = cumulative_stieltjes(&integrand, driver)?;
    let values = grid
        .times()
        .zip(integral.values())
        .map(|(t, i)| (theta0 * t).exp() * i)
        .collect();
    SamplePath::new(grid, values)
}

/// One draw of `Y` from a fresh driver path.
pub fn sample_y(kernel: &Kernel, theta0: f64, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    let sampler = CholeskySampler::new(kernel, grid)?;
    y_from_driver(theta0, &sampler.sample(&mut seed.rng()))
}

/// Smallest minimizer of `u ↦ Σ w_i |v_i − u|` over entries with `w_i > 0`.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v, w))
        .collect();
    if pairs.is_empty() {
        return Err(Error::Unidentifiable);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    // The right derivative at u = v_k is 2·(weight at or below v_k) − total;
    // the first v_k where it turns nonnegative is the smallest minimizer.
    let mut below = 0.0;
    let mut k = 0;
    while k < pairs.len() {
        let v = pairs[k].0;
        while k < pairs.len() && pairs[k].0 == v {
            below += pairs[k].1;
            k += 1;
        }
        if 2.0 * below >= total {
            return Ok(v);
        }
    }
    Ok(pairs[pairs.len() - 1].0)
}

/// Exact minimizer of the trapezoid criterion `Σ w_i |Y_i − u h_i|`.
pub fn zeta_from_instance(inst: &LimitInstance) -> Result<f64> {
    inst.y.ensure_same_grid(&inst.h)?;
    let trap = inst.y.grid().trapezoid_weights();
    let mut ratios = Vec::with_capacity(trap.len());
    let mut weights = Vec::with_capacity(trap.len());
    for ((&y, &h), &w) in inst.y.values().iter().zip(inst.h.values()).zip(&trap) {
        if h != 0.0 {
            ratios.push(y / h);
            weights.push(w * h.abs());
        }
    }
    weighted_median(&ratios, &weights)
}

/// Covariance as written in closed form,
/// `(e^{θ0 t} − 1)(e^{θ0 s} − 1) / θ0²`, with limit `t s` at `θ0 = 0`.
pub fn limit_cov_closed_form(theta0: f64, s: f64, t: f64) -> f64 {
    if theta0 == 0.0 {
        return s * t;
    }
    (theta0 * t).exp_m1() * (theta0 * s).exp_m1() / (theta0 * theta0)
}

/// Sample covariance of `draws` independent realizations of `Y`; draw `k`
/// uses stream `k` under `root_seed`.
pub fn limit_cov_mc(
    kernel: &Kernel,
    theta0: f64,
    grid: &TimeGrid,
    draws: usize,
    root_seed: u64,
) -> Result<DMatrix<f64>> {
    if draws < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 draws, got {draws}")));
    }
    let sampler = CholeskySampler::new(kernel, grid)?;
    let n = grid.len();
    let mut sum = vec![0.0; n];
    let mut cross = DMatrix::<f64>::zeros(n, n);
    for k in 0..draws {
        let mut rng = SeedSpec::new(root_seed, k as u64).rng();
        let y = y_from_driver(theta0, &sampler.sample(&mut rng))?;
        let v = y.values();
        for i in 0..n {
            sum[i] += v[i];
            for j in 0..=i {
                cross[(i, j)] += v[i] * v[j];
            }
        }
    }
    let nf = draws as f64;
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = (cross[(i, j)] - sum[i] * sum[j] / nf) / (nf - 1.0);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
        cov[(i, i)] = cov[(i, i)].max(0.0);
    }
    Ok(cov)
}

/// Largest entrywise gap between the Monte Carlo covariance and
/// [`limit_cov_closed_form`] on the same grid.
pub fn closed_form_covariance_discrepancy(mc: &DMatrix<f64>, theta0: f64, grid: &TimeGrid) -> f64 {
    let times: Vec<f64> = grid.times().collect();
    let mut worst: f64 = 0.0;
    for i in 0..times.len() {
        for j in 0..times.len() {
            worst = worst.max((mc[(i, j)] - limit_cov_closed_form(theta0, times[i], times[j])).abs());
        }
    }
    worst
}
