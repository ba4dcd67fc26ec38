//! Computable forms of the maximal inequalities for Gaussian processes:
//! the canonical metric `d_G`, its modulus `ρ`, Berman's `Q` function,
//! covering numbers and the entropy integral, the Hölder-type sandwich for
//! `E[sup G]`, the Borell-TIS-type tail, and the resulting bound on the
//! estimator's exceedance probability.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::kernels::Kernel;
use crate::l1_estimator::g_delta;
use crate::ou_model::ModelParams;
use crate::sampler::{PathSampler, SeedSpec};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// The canonical metric of a kernel on a grid.
#[derive(Debug, Clone)]
pub struct MetricProfile {
    kernel: Kernel,
    grid: TimeGrid,
    dist: DMatrix<f64>,
    diameter: f64,
    sigma2: f64,
    /// `lag_rho[k]`: largest distance between points at most `k` steps apart.
    lag_rho: Vec<f64>,
}

impl MetricProfile {
    pub fn new(kernel: &Kernel, grid: &TimeGrid) -> Result<Self> {
        let cov = kernel.covariance_matrix(grid)?;
        let n = grid.len();
        let dist = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                (cov[(i, i)] + cov[(j, j)] - 2.0 * cov[(i, j)]).max(0.0).sqrt()
            }
        });
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        let sigma2 = (0..n).map(|i| cov[(i, i)]).fold(0.0, f64::max);
        let mut lag_rho = vec![0.0; n];
        for lag in 1..n {
            let here = (0..n - lag).map(|i| dist[(i, i + lag)]).fold(0.0, f64::max);
            lag_rho[lag] = here.max(lag_rho[lag - 1]);
        }
        Ok(Self {
            kernel: kernel.clone(),
            grid: *grid,
            dist,
            diameter,
            sigma2,
            lag_rho,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn distances(&self) -> &DMatrix<f64> {
        &self.dist
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    /// `D = sup d_G`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// `sup_t E[G_t²]`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `ρ(ε) = sup_{|s−t| ≤ ε} d_G(s, t)` over grid pairs.
    pub fn rho(&self, eps: f64) -> f64 {
        if !(eps > 0.0) {
            return 0.0;
        }
        let lag = ((eps / self.grid.dt()) * (1.0 + 1e-12)).floor();
        let lag = if lag >= self.grid.steps() as f64 {
            self.grid.steps()
        } else {
            lag as usize
        };
        self.lag_rho[lag]
    }

    pub fn rho_strictly_increasing(&self) -> bool {
        self.lag_rho.windows(2).all(|w| w[1] > w[0])
    }

    /// `Q(δ) = ∫_0^∞ ρ(δ e^{−y²}) dy`.
    ///
    /// Between grid lags `ρ` is interpolated as a power law through the two
    /// neighbouring values and extrapolated below the first lag with the
    /// first segment's exponent; each piece then integrates in closed form
    /// through `erfc`. Beyond the horizon `ρ` is the diameter.
    pub fn q_function(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!("Q needs δ > 0, got {delta}")));
        }
        let dt = self.grid.dt();
        let steps = self.grid.steps();
        let y_at = |x: f64| (delta / x).ln().max(0.0).sqrt();
        let mut total = 0.0;

        let horizon = self.grid.horizon();
        if delta > horizon {
            total += self.diameter * y_at(horizon);
        }
        // Segments [k dt, (k+1) dt] for k ≥ 1, clipped to (0, δ].
        for k in 1..steps {
            let x_lo = k as f64 * dt;
            if x_lo >= delta {
                break;
            }
            let x_hi = ((k + 1) as f64 * dt).min(delta);
            let (r0, r1) = (self.lag_rho[k], self.lag_rho[k + 1]);
            if r0 <= 0.0 {
                continue;
            }
            let alpha = (r1 / r0).ln() / ((k + 1) as f64 / k as f64).ln();
            total += power_piece(r0, x_lo, alpha, delta, y_at(x_hi), y_at(x_lo));
        }
        // Below the first lag: ρ(x) = ρ(dt) (x/dt)^α with the first exponent.
        let r1 = self.lag_rho[1];
        if r1 > 0.0 {
            let alpha = if steps >= 2 && self.lag_rho[2] > 0.0 {
                (self.lag_rho[2] / r1).ln() / 2f64.ln()
            } else {
                1.0
            };
            let x_hi = dt.min(delta);
            total += power_piece(r1, dt, alpha, delta, y_at(x_hi), f64::INFINITY);
        }
        Ok(total)
    }

    /// Inverse of [`Self::q_function`] by bisection in `log δ`.
    pub fn q_inverse(&self, x: f64) -> Result<f64> {
        if !self.rho_strictly_increasing() {
            return Err(Error::NotApplicable("ρ is not strictly increasing on the grid".into()));
        }
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Range { what: "Q", value: x });
        }
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        while self.q_function(lo)? >= x {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Range { what: "Q", value: x });
            }
        }
        while self.q_function(hi)? < x {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(Error::Range { what: "Q", value: x });
            }
        }
        while hi / lo - 1.0 > 1e-13 {
            let mid = (lo * hi).sqrt();
            if self.q_function(mid)? < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }

    /// Berman's tail bound `C (Q^{−1}(1/ε))^{−1} exp(−ε²/2σ²)`.
    pub fn berman_tail(&self, eps: f64, constant: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("ε must be positive, got {eps}")));
        }
        let qi = self.q_inverse(1.0 / eps)?;
        Ok(constant / qi * (-eps * eps / (2.0 * self.sigma2)).exp())
    }

    /// Greedy count of `d_G`-balls of radius `eps` covering the grid: each
    /// ball is centred as far right as possible while still reaching back to
    /// the first uncovered point, then extended as far as the centre reaches.
    pub fn covering_number(&self, eps: f64) -> usize {
        let n = self.grid.len();
        let within = |i: usize, j: usize| self.dist[(i, j)] <= eps * (1.0 + 1e-12) + 1e-15;
        let mut count = 0;
        let mut start = 0;
        while start < n {
            let mut centre = start;
            while centre + 1 < n && (start..=centre + 1).all(|j| within(j, centre + 1)) {
                centre += 1;
            }
            let mut end = centre;
            while end + 1 < n && within(centre, end + 1) {
                end += 1;
            }
            count += 1;
            start = end + 1;
        }
        count
    }

    /// Smallest distance between distinct grid points.
    pub fn resolution_floor(&self) -> Result<f64> {
        let n = self.grid.len();
        let mut floor = f64::INFINITY;
        for i in 0..n {
            for j in 0..i {
                let d = self.dist[(i, j)];
                if d <= 0.0 {
                    return Err(Error::Degenerate(self.grid.time(j), self.grid.time(i)));
                }
                floor = floor.min(d);
            }
        }
        Ok(floor)
    }

    /// `∫_0^{D/2} sqrt(log N(ε)) dε`.
    ///
    /// Above the resolution floor `N` is the greedy grid count, integrated by
    /// the midpoint rule on `nodes` cells. Below the floor the grid cannot
    /// resolve balls, so `N` is extended as `N(floor) (floor/ε)^{1/α}` with
    /// `α` the small-lag exponent of `ρ`, and that tail is integrated exactly.
    pub fn entropy_integral_with(&self, nodes: usize) -> Result<EntropyIntegral> {
        let floor = self.resolution_floor()?;
        let upper = 0.5 * self.diameter;
        let mut resolved = 0.0;
        if upper > floor {
            let h = (upper - floor) / nodes as f64;
            for k in 0..nodes {
                let eps = floor + (k as f64 + 0.5) * h;
                resolved += (self.covering_number(eps) as f64).ln().sqrt() * h;
            }
        }
        let alpha = self.small_lag_exponent();
        let a = floor.min(upper);
        let l = (self.covering_number(a) as f64).ln();
        // ∫_0^a sqrt(L + ln(a/ε)/α) dε = a (√L + ½ sqrt(π/α) e^{αL} erfc(√(αL))).
        let tail = a * (l.sqrt() + 0.5 * (SQRT_PI / alpha.sqrt()) * (alpha * l).exp() * erfc((alpha * l).sqrt()));
        Ok(EntropyIntegral {
            value: resolved + tail,
            resolved,
            tail,
            floor,
            tail_exponent: alpha,
        })
    }

    pub fn entropy_integral(&self) -> Result<EntropyIntegral> {
        self.entropy_integral_with(DEFAULT_ENTROPY_NODES)
    }

    fn small_lag_exponent(&self) -> f64 {
        if self.lag_rho.len() > 2 && self.lag_rho[1] > 0.0 && self.lag_rho[2] > self.lag_rho[1] {
            (self.lag_rho[2] / self.lag_rho[1]).ln() / 2f64.ln()
        } else {
            1.0
        }
    }
}

pub const DEFAULT_ENTROPY_NODES: usize = 512;

/// `∫_{y_a}^{y_b} r0 (δ e^{−y²} / x0)^α dy` for `y_a ≤ y_b` (possibly ∞).
fn power_piece(r0: f64, x0: f64, alpha: f64, delta: f64, y_a: f64, y_b: f64) -> f64 {
    if y_b <= y_a {
        return 0.0;
    }
    if alpha.abs() < 1e-12 {
        return r0 * (y_b - y_a);
    }
    let s = alpha.sqrt();
    let tail_b = if y_b.is_infinite() { 0.0 } else { erfc(s * y_b) };
    r0 * (delta / x0).powf(alpha) * 0.5 * SQRT_PI / s * (erfc(s * y_a) - tail_b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyIntegral {
    /// Resolved part plus extrapolated tail.
    pub value: f64,
    /// Integral from the resolution floor to `D/2`.
    pub resolved: f64,
    /// Extrapolated contribution below the floor.
    pub tail: f64,
    pub floor: f64,
    pub tail_exponent: f64,
}

/// Lower and upper bounds `C1/(5√H)` and `16.3 C2/√H` on `E[sup G]` for
/// processes with `C1|t−s|^H ≤ d_G(s,t) ≤ C2|t−s|^H`.
pub fn borovkov_sandwich(hurst: f64, c1: f64, c2: f64) -> Result<[f64; 2]> {
    if !(hurst > 0.0 && hurst <= 1.0) {
        return Err(Error::InvalidArgument(format!("H must lie in (0,1], got {hurst}")));
    }
    if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < C1 ≤ C2, got C1={c1}, C2={c2}"
        )));
    }
    let root = hurst.sqrt();
    Ok([c1 / (5.0 * root), 16.3 * c2 / root])
}

/// One-sided tail `P(sup G ≥ x) ≤ exp(−(x−m)²/2σ²)` for `x > m`.
pub fn nourdin_tail(sigma2: f64, m: f64, x: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument(format!("σ² must be positive, got {sigma2}")));
    }
    if !(x > m) {
        return Err(Error::InvalidArgument(format!(
            "tail bound needs x > m, got x={x}, m={m}"
        )));
    }
    Ok((-(x - m).powi(2) / (2.0 * sigma2)).exp())
}

/// Two-sided version for `sup |G|`.
pub fn nourdin_abs_tail(sigma2: f64, m: f64, x: f64) -> Result<f64> {
    Ok(2.0 * nourdin_tail(sigma2, m, x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupMean {
    pub mean: f64,
    pub se: f64,
    pub draws: usize,
}

/// Per-path discrete `sup G` and `sup |G|` for streams `0..draws`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupSample {
    pub sup: Vec<f64>,
    pub sup_abs: Vec<f64>,
}

impl SupSample {
    pub fn draw(sampler: &dyn PathSampler, draws: usize, root_seed: u64) -> Self {
        let pairs: Vec<(f64, f64)> = (0..draws)
            .into_par_iter()
            .map(|k| {
                let path = sampler.sample(&mut SeedSpec::new(root_seed, k as u64).rng());
                (path.sup(), path.sup_abs())
            })
            .collect();
        let (sup, sup_abs) = pairs.into_iter().unzip();
        Self { sup, sup_abs }
    }

    pub fn sup_mean(&self) -> SupMean {
        let (mean, se) = mean_and_se(&self.sup);
        SupMean {
            mean,
            se,
            draws: self.sup.len(),
        }
    }

    /// Fraction of paths with `sup |G| ≥ x`.
    pub fn abs_exceedance(&self, x: f64) -> f64 {
        let hits = self.sup_abs.iter().filter(|&&s| s >= x).count();
        hits as f64 / self.sup_abs.len() as f64
    }
}

/// Monte Carlo `E[sup_t G_t]` with its standard error.
pub fn estimate_sup_mean(sampler: &dyn PathSampler, draws: usize, root_seed: u64) -> Result<SupMean> {
    if draws < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 draws, got {draws}")));
    }
    Ok(SupSample::draw(sampler, draws, root_seed).sup_mean())
}

pub(crate) fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyBound {
    pub value: f64,
    /// True when `e^{−|θ0|T} g(δ) / (2εT) ≤ m`, where the tail bound does
    /// not apply and the value is 1.
    pub vacuous: bool,
    pub threshold: f64,
}

/// Bound on `P(|θ̂ − θ0| > δ)` from the Gronwall estimate and the Gaussian
/// tail: `2 exp(−(a − m)²/2σ²)` with `a = e^{−|θ0|T} g(δ) / (2εT)`, valid
/// once `a > m`.
pub fn consistency_bound(p: &ModelParams, delta: f64, eps: f64, m: f64, sigma2: f64) -> Result<ConsistencyBound> {
    let g = g_delta(p.theta0, p.x0, delta, p.horizon)?;
    let scale = (-p.theta0.abs() * p.horizon).exp() * g / (2.0 * p.horizon);
    let threshold = if eps == 0.0 { f64::INFINITY } else { scale / eps };
    if !(threshold > m) {
        return Ok(ConsistencyBound {
            value: 1.0,
            vacuous: true,
            threshold,
        });
    }
    let value = if threshold.is_infinite() || sigma2 == 0.0 {
        0.0
    } else {
        (2.0 * (-(threshold - m).powi(2) / (2.0 * sigma2)).exp()).min(1.0)
    };
    Ok(ConsistencyBound {
        value,
        vacuous: false,
        threshold,
    })
}
