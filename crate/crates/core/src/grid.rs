//! Uniform time grids on `[0, T]` and process values sampled on them.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform discretization `t_i = i T / n`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("number of steps must be positive".into()));
        }
        Ok(Self { horizon, steps })
    }

    /// Unit-horizon grid with `steps` steps.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(1.0, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points, `n + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        // Pin the last point so that t_n == T exactly.
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn times(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Composite trapezoid weights: `dt/2` at both ends, `dt` inside.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.len()];
        w[0] = 0.5 * dt;
        w[self.steps] = 0.5 * dt;
        w
    }

    /// Index of `t` if it is a grid point (up to roundoff).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let i = x.round();
        if i < 0.0 || i > self.steps as f64 {
            return None;
        }
        let i = i as usize;
        let tol = 1e-9 * self.dt();
        ((self.time(i) - t).abs() <= tol).then_some(i)
    }

    /// Grid whose points are every `factor`-th point of this one.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::InvalidGrid(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }
}

/// Values of a process at the points of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "path has {} values but the grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Evaluates `f` at every grid point.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.times().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.grid.steps()]
    }

    /// Discrete `sup_t |value|`.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete `sup_t value`.
    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn ensure_same_grid(&self, other: &SamplePath) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Restriction to a coarser grid that divides this one.
    pub fn subsample(&self, factor: usize) -> Result<SamplePath> {
        let grid = self.grid.coarsen(factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        SamplePath::new(grid, values)
    }

    /// `a * self + b * other`, pointwise.
    pub fn combine(&self, a: f64, other: &SamplePath, b: f64) -> Result<SamplePath> {
        self.ensure_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(SamplePath {
            grid: self.grid,
            values,
        })
    }

    /// CSV with a `t,<column>` header, one row per grid point.
    pub fn to_csv(&self, column: &str) -> String {
        let mut out = format!("t,{column}\n");
        for (t, v) in self.grid.times().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt_full(t), fmt_full(*v));
        }
        out
    }
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Human-readable rendering with `digits` significant digits.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Take the exponent after rounding so 0.99999999 renders as 1.000000.
    let sci = format!("{:.*e}", digits.saturating_sub(1), x);
    let magnitude: i64 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}
