//! The observed process `dX = θ X dt + ε dG`, `X_0 = x0`, its noise-free
//! flow `x_t(θ) = x0 e^{θt}`, and the pathwise Gronwall bound.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};
use crate::sampler::cumulative_stieltjes;

/// True drift, initial value, noise level, search interval and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub theta0: f64,
    pub x0: f64,
    pub eps: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn new(theta0: f64, x0: f64, eps: f64, theta_lo: f64, theta_hi: f64, horizon: f64) -> Result<Self> {
        let p = Self {
            theta0,
            x0,
            eps,
            theta_lo,
            theta_hi,
            horizon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.theta0,
            self.x0,
            self.eps,
            self.theta_lo,
            self.theta_hi,
            self.horizon,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.theta_lo > self.theta_hi {
            return Err(Error::EmptyInterval {
                lo: self.theta_lo,
                hi: self.theta_hi,
            });
        }
        if !(self.theta_lo..=self.theta_hi).contains(&self.theta0) {
            return Err(Error::InvalidParams(format!(
                "theta0 = {} lies outside [{}, {}]",
                self.theta0, self.theta_lo, self.theta_hi
            )));
        }
        if self.x0 == 0.0 {
            return Err(Error::InvalidParams(
                "x0 = 0 makes every drift produce the same flow".into(),
            ));
        }
        if self.eps < 0.0 {
            return Err(Error::InvalidParams(format!(
                "eps must be nonnegative, got {}",
                self.eps
            )));
        }
        if self.horizon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let p = Self { eps, ..*self };
        p.validate()?;
        Ok(p)
    }

    fn check_grid(&self, g: &TimeGrid) -> Result<()> {
        if (g.horizon() - self.horizon).abs() > 1e-12 * self.horizon {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// `x0 e^{θ t_i}` on every grid point.
pub fn deterministic_solution(theta: f64, x0: f64, grid: &TimeGrid) -> SamplePath {
    SamplePath::from_fn(*grid, |t| x0 * (theta * t).exp())
}

/// Integrating-factor form `X_t = e^{θ0 t}(x0 + ε ∫_0^t e^{−θ0 s} dG_s)`,
/// with the integral taken as cumulative left-point sums.
pub fn simulate_exact(p: &ModelParams, driver: &SamplePath) -> Result<SamplePath> {
    p.check_grid(driver.grid())?;
    let grid = *driver.grid();
    let integrand = SamplePath::from_fn(grid, |t| (-p.theta0 * t).exp());
    let integral = cumulative_stieltjes(&integrand, driver)?;
    let values = grid
        .times()
        .zip(integral.values())
        .map(|(t, i)| (p.theta0 * t).exp() * (p.x0 + p.eps * i))
        .collect();
    SamplePath::new(grid, values)
}

/// Forward Euler `X_{i+1} = X_i + θ0 X_i Δ + ε (G_{i+1} − G_i)`.
pub fn simulate_euler(p: &ModelParams, driver: &SamplePath) -> Result<SamplePath> {
    p.check_grid(driver.grid())?;
    let grid = *driver.grid();
    let dt = grid.dt();
    let g = driver.values();
    let mut values = Vec::with_capacity(g.len());
    let mut x = p.x0;
    values.push(x);
    for w in g.windows(2) {
        x += p.theta0 * x * dt + p.eps * (w[1] - w[0]);
        values.push(x);
    }
    SamplePath::new(grid, values)
}

/// A discretization of the observed process.
pub trait SimulationScheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn simulate(&self, p: &ModelParams, driver: &SamplePath) -> Result<SamplePath>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegratingFactor;

impl SimulationScheme for IntegratingFactor {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn simulate(&self, p: &ModelParams, driver: &SamplePath) -> Result<SamplePath> {
        simulate_exact(p, driver)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ForwardEuler;

impl SimulationScheme for ForwardEuler {
    fn name(&self) -> &'static str {
        "euler"
    }

    fn simulate(&self, p: &ModelParams, driver: &SamplePath) -> Result<SamplePath> {
        simulate_euler(p, driver)
    }
}

/// Maps scheme names to implementations.
#[derive(Clone)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn SimulationScheme>>,
}

impl SchemeRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self {
            schemes: BTreeMap::new(),
        };
        reg.register(Arc::new(IntegratingFactor));
        reg.register(Arc::new(ForwardEuler));
        reg
    }

    pub fn register(&mut self, scheme: Arc<dyn SimulationScheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SimulationScheme>> {
        self.schemes.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "scheme",
            name: name.to_string(),
            available: self.schemes.keys().copied().collect::<Vec<_>>().join(", "),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `sup_t |X_t − x_t(θ0)|` with `ε e^{|θ0| T} sup_t |G_t|`.
pub fn gronwall_check(p: &ModelParams, x: &SamplePath, driver: &SamplePath) -> Result<GronwallReport> {
    x.ensure_same_grid(driver)?;
    p.check_grid(x.grid())?;
    let flow = deterministic_solution(p.theta0, p.x0, x.grid());
    let lhs = x
        .values()
        .iter()
        .zip(flow.values())
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    let rhs = p.eps * (p.theta0.abs() * p.horizon).exp() * driver.sup_abs();
    Ok(GronwallReport {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-9),
    })
}
