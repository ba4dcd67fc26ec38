//! Gaussian sample paths on a grid and pathwise Stieltjes sums against them.
//!
//! Samplers are strategies behind [`PathSampler`]; [`SamplerRegistry`] builds
//! them by name for a given kernel and grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{SamplePath, TimeGrid};
use crate::kernels::Kernel;

/// Identifies one independent random stream of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedSpec {
    pub root_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(root_seed: u64, stream_index: u64) -> Self {
        Self {
            root_seed,
            stream_index,
        }
    }

    /// ChaCha8 keyed by the root seed, on the stream numbered `stream_index`.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Draws zero-mean Gaussian paths with a fixed covariance on a fixed grid.
pub trait PathSampler: Send + Sync {
    fn name(&self) -> &'static str;

    fn grid(&self) -> &TimeGrid;

    fn sample(&self, rng: &mut dyn RngCore) -> SamplePath;
}

/// Exact sampler from a dense lower-triangular factor of the covariance
/// matrix restricted to grid points with positive variance.
pub struct CholeskySampler {
    grid: TimeGrid,
    active: Vec<usize>,
    lower: DMatrix<f64>,
    jitter: f64,
}

/// Smallest and largest relative jitter tried before giving up.
const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-6;

impl CholeskySampler {
    pub fn new(kernel: &Kernel, grid: &TimeGrid) -> Result<Self> {
        let cov = kernel.covariance_matrix(grid)?;
        Self::from_covariance(*grid, &cov)
    }

    pub fn from_covariance(grid: TimeGrid, cov: &DMatrix<f64>) -> Result<Self> {
        let active: Vec<usize> = (0..grid.len()).filter(|&i| cov[(i, i)] > 0.0).collect();
        let k = active.len();
        if k == 0 {
            return Ok(Self {
                grid,
                active,
                lower: DMatrix::zeros(0, 0),
                jitter: 0.0,
            });
        }
        let sub = DMatrix::from_fn(k, k, |i, j| cov[(active[i], active[j])]);
        let max_diag = (0..k).map(|i| sub[(i, i)]).fold(0.0, f64::max);

        if let Some(ch) = Cholesky::new(sub.clone()) {
            return Ok(Self {
                grid,
                active,
                lower: ch.unpack(),
                jitter: 0.0,
            });
        }
        let mut rel = JITTER_START;
        while rel <= JITTER_MAX * (1.0 + 1e-9) {
            let lambda = rel * max_diag;
            let mut m = sub.clone();
            for i in 0..k {
                m[(i, i)] += lambda;
            }
            if let Some(ch) = Cholesky::new(m) {
                return Ok(Self {
                    grid,
                    active,
                    lower: ch.unpack(),
                    jitter: lambda,
                });
            }
            rel *= 10.0;
        }
        Err(Error::KernelDegenerate {
            jitter: JITTER_MAX * max_diag,
        })
    }

    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

impl PathSampler for CholeskySampler {
    fn name(&self) -> &'static str {
        "cholesky"
    }

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn sample(&self, rng: &mut dyn RngCore) -> SamplePath {
        let mut values = vec![0.0; self.grid.len()];
        if !self.active.is_empty() {
            let z = DVector::from_fn(self.active.len(), |_, _| StandardNormal.sample(rng));
            let x = &self.lower * z;
            for (slot, v) in self.active.iter().zip(x.iter()) {
                values[*slot] = *v;
            }
        }
        SamplePath::new(self.grid, values).expect("sampler output matches its grid")
    }
}

/// Circulant-embedding (Davies-Harte) sampler for fBm: draws stationary
/// increments in `O(n log n)` and accumulates them from `G_0 = 0`.
pub struct CirculantSampler {
    grid: TimeGrid,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl CirculantSampler {
    pub fn new(kernel: &Kernel, grid: &TimeGrid) -> Result<Self> {
        let unsupported = |reason: &str| Error::SamplerUnsupported {
            sampler: "circulant".into(),
            kernel: kernel.spec(),
            reason: reason.into(),
        };
        if !matches!(kernel.name(), "fbm" | "bm") {
            return Err(unsupported("needs stationary increments (fbm or bm)"));
        }
        let h = kernel.hurst().ok_or_else(|| unsupported("missing Hurst index"))?;
        let n = grid.steps();
        let m = 2 * n;
        let step_var = grid.dt().powf(2.0 * h);
        let gamma = |k: usize| {
            let k = k as f64;
            let a = 2.0 * h;
            0.5 * step_var * ((k + 1.0).powf(a) - 2.0 * k.powf(a) + (k - 1.0).abs().powf(a))
        };
        // First row of the circulant: γ(0..=n), then γ(n-1..1) mirrored.
        let mut row: Vec<Complex<f64>> = (0..=n)
            .chain((1..n).rev())
            .map(|k| Complex::new(gamma(k), 0.0))
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);

        let tol = 1e-10 * row[0].re.abs().max(step_var);
        let mut scale = Vec::with_capacity(m);
        for ev in &row {
            let lam = ev.re;
            if lam < -tol {
                return Err(unsupported("circulant embedding is not nonnegative definite"));
            }
            scale.push((lam.max(0.0) / m as f64).sqrt());
        }
        Ok(Self {
            grid: *grid,
            scale,
            fft,
        })
    }
}

impl PathSampler for CirculantSampler {
    fn name(&self) -> &'static str {
        "circulant"
    }

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn sample(&self, rng: &mut dyn RngCore) -> SamplePath {
        let n = self.grid.steps();
        // Re(FFT(sqrt(λ/m) (Z1 + i Z2))) has exactly the circulant covariance.
        let mut w: Vec<Complex<f64>> = self
            .scale
            .iter()
            .map(|&s| {
                let re: f64 = StandardNormal.sample(&mut *rng);
                let im: f64 = StandardNormal.sample(&mut *rng);
                Complex::new(s * re, s * im)
            })
            .collect();
        self.fft.process(&mut w);
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for c in w.iter().take(n) {
            acc += c.re;
            values.push(acc);
        }
        SamplePath::new(self.grid, values).expect("sampler output matches its grid")
    }
}

pub type SamplerFactory = fn(&Kernel, &TimeGrid) -> Result<Arc<dyn PathSampler>>;

/// Maps sampler names to constructors.
#[derive(Clone)]
pub struct SamplerRegistry {
    factories: BTreeMap<&'static str, SamplerFactory>,
}

impl SamplerRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self {
            factories: BTreeMap::new(),
        };
        reg.register("cholesky", |k, g| Ok(Arc::new(CholeskySampler::new(k, g)?)));
        reg.register("circulant", |k, g| Ok(Arc::new(CirculantSampler::new(k, g)?)));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: SamplerFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn build(&self, name: &str, kernel: &Kernel, grid: &TimeGrid) -> Result<Arc<dyn PathSampler>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "sampler",
            name: name.to_string(),
            available: self.names().collect::<Vec<_>>().join(", "),
        })?;
        factory(kernel, grid)
    }
}

/// One draw with the dense sampler. Factorizes on every call; build a
/// [`CholeskySampler`] once when drawing repeatedly.
pub fn sample_path(kernel: &Kernel, grid: &TimeGrid, seed: SeedSpec) -> Result<SamplePath> {
    let sampler = CholeskySampler::new(kernel, grid)?;
    Ok(sampler.sample(&mut seed.rng()))
}

/// Left-point sum `Σ_{i<n} f(t_i)(G_{t_{i+1}} − G_{t_i})`.
pub fn stieltjes_integral(f: &SamplePath, g: &SamplePath) -> Result<f64> {
    Ok(cumulative_stieltjes(f, g)?.last())
}

/// Running left-point sums `I_i = Σ_{j<i} f_j (G_{j+1} − G_j)`, `I_0 = 0`.
///
/// Evaluated in summation-by-parts form
/// `I_i = f_{i−1} G_i − f_0 G_0 − Σ_{j=1}^{i−1} G_j (f_j − f_{j−1})`,
/// which is the same sum but makes constant integrands telescope exactly.
pub fn cumulative_stieltjes(f: &SamplePath, g: &SamplePath) -> Result<SamplePath> {
    f.ensure_same_grid(g)?;
    let (fv, gv) = (f.values(), g.values());
    let mut out = Vec::with_capacity(fv.len());
    out.push(0.0);
    let base = fv[0] * gv[0];
    let mut inner = 0.0;
    for i in 1..fv.len() {
        if i >= 2 {
            inner += gv[i - 1] * (fv[i - 1] - fv[i - 2]);
        }
        out.push(fv[i - 1] * gv[i] - base - inner);
    }
    SamplePath::new(*f.grid(), out)
}
