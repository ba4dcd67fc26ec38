//! Covariance kernels for the driving Gaussian process and a by-name
//! registry that turns specification strings such as `fbm:H=0.7` into
//! kernels.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// A covariance function `R(s, t)` of a centered Gaussian process.
///
/// Implementations receive nonnegative finite times; the horizon check is
/// done by [`Kernel`].
pub trait CovarianceKernel: Send + Sync + fmt::Debug {
    /// Registry name, e.g. `fbm`.
    fn name(&self) -> &'static str;

    /// Canonical specification string accepted by [`KernelRegistry::parse`].
    fn spec(&self) -> String;

    fn covariance(&self, s: f64, t: f64) -> Result<f64>;

    /// Self-similarity index `H` such that `d_G(s,t) = |t-s|^H` exactly, if
    /// the kernel has one.
    fn hurst(&self) -> Option<f64> {
        None
    }

    /// Whether `R(0, 0) = 0` holds by construction.
    fn vanishes_at_origin(&self) -> bool {
        true
    }
}

/// Shared handle to a covariance kernel.
#[derive(Clone)]
pub struct Kernel(Arc<dyn CovarianceKernel>);

impl Kernel {
    pub fn new(inner: impl CovarianceKernel + 'static) -> Self {
        Kernel(Arc::new(inner))
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        Ok(Self::new(FractionalBrownian::new(hurst)?))
    }

    pub fn subfbm(hurst: f64) -> Result<Self> {
        Ok(Self::new(SubFractional::new(hurst)?))
    }

    pub fn bifbm(hurst: f64, k: f64) -> Result<Self> {
        Ok(Self::new(Bifractional::new(hurst, k)?))
    }

    pub fn bm() -> Self {
        Self::new(Brownian)
    }

    pub fn tabulated(times: Vec<f64>, matrix: DMatrix<f64>) -> Result<Self> {
        Ok(Self::new(Tabulated::new(times, matrix)?))
    }

    pub fn name(&self) -> &'static str {
        self.0.name()
    }

    pub fn spec(&self) -> String {
        self.0.spec()
    }

    pub fn hurst(&self) -> Option<f64> {
        self.0.hurst()
    }

    pub fn vanishes_at_origin(&self) -> bool {
        self.0.vanishes_at_origin()
    }

    pub fn inner(&self) -> &dyn CovarianceKernel {
        &*self.0
    }

    /// `R(s, t)` for `s, t` in `[0, horizon]`.
    pub fn eval(&self, s: f64, t: f64, horizon: f64) -> Result<f64> {
        let inside = |x: f64| x.is_finite() && (0.0..=horizon).contains(&x);
        if !inside(s) || !inside(t) {
            return Err(Error::Domain { s, t, horizon });
        }
        self.0.covariance(s, t)
    }

    /// Dense `(n+1) x (n+1)` matrix `R(t_i, t_j)`, exactly symmetric.
    pub fn covariance_matrix(&self, grid: &TimeGrid) -> Result<DMatrix<f64>> {
        let n = grid.len();
        let times: Vec<f64> = grid.times().collect();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(times[i], times[j], grid.horizon())?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({})", self.spec())
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelRegistry::builtin().parse(s)
    }
}

impl serde::Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.spec())
    }
}

fn check_hurst(h: f64) -> Result<f64> {
    if h.is_finite() && h > 0.0 && h < 1.0 {
        Ok(h)
    } else {
        Err(Error::InvalidArgument(format!(
            "Hurst index must lie in (0,1), got {h}"
        )))
    }
}

/// Fractional Brownian motion, `½(s^{2H} + t^{2H} − |t−s|^{2H})`.
#[derive(Debug, Clone, Copy)]
pub struct FractionalBrownian {
    hurst: f64,
}

impl FractionalBrownian {
    pub fn new(hurst: f64) -> Result<Self> {
        Ok(Self {
            hurst: check_hurst(hurst)?,
        })
    }
}

impl CovarianceKernel for FractionalBrownian {
    fn name(&self) -> &'static str {
        "fbm"
    }

    fn spec(&self) -> String {
        format!("fbm:H={}", self.hurst)
    }

    fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        // The H = 1/2 branch keeps fBm(1/2) entrywise identical to min(s, t).
        if self.hurst == 0.5 {
            return Ok(s.min(t));
        }
        let a = 2.0 * self.hurst;
        Ok(0.5 * (s.powf(a) + t.powf(a) - (t - s).abs().powf(a)))
    }

    fn hurst(&self) -> Option<f64> {
        Some(self.hurst)
    }
}

/// Sub-fractional Brownian motion,
/// `s^{2H} + t^{2H} − ½((s+t)^{2H} + |t−s|^{2H})`.
#[derive(Debug, Clone, Copy)]
pub struct SubFractional {
    hurst: f64,
}

impl SubFractional {
    pub fn new(hurst: f64) -> Result<Self> {
        Ok(Self {
            hurst: check_hurst(hurst)?,
        })
    }
}

impl CovarianceKernel for SubFractional {
    fn name(&self) -> &'static str {
        "subfbm"
    }

    fn spec(&self) -> String {
        format!("subfbm:H={}", self.hurst)
    }

    fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        let a = 2.0 * self.hurst;
        Ok(s.powf(a) + t.powf(a) - 0.5 * ((s + t).powf(a) + (t - s).abs().powf(a)))
    }
}

/// Bifractional Brownian motion,
/// `2^{−K}((t^{2H} + s^{2H})^K − |t−s|^{2HK})`.
#[derive(Debug, Clone, Copy)]
pub struct Bifractional {
    hurst: f64,
    k: f64,
}

impl Bifractional {
    pub fn new(hurst: f64, k: f64) -> Result<Self> {
        let hurst = check_hurst(hurst)?;
        if !(k.is_finite() && k > 0.0 && k <= 1.0) {
            return Err(Error::InvalidArgument(format!("K must lie in (0,1], got {k}")));
        }
        Ok(Self { hurst, k })
    }
}

impl CovarianceKernel for Bifractional {
    fn name(&self) -> &'static str {
        "bifbm"
    }

    fn spec(&self) -> String {
        format!("bifbm:H={},K={}", self.hurst, self.k)
    }

    fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        let a = 2.0 * self.hurst;
        let base = (t.powf(a) + s.powf(a)).powf(self.k) - (t - s).abs().powf(a * self.k);
        Ok(base * 2f64.powf(-self.k))
    }
}

/// Standard Brownian motion, `min(s, t)`.
#[derive(Debug, Clone, Copy)]
pub struct Brownian;

impl CovarianceKernel for Brownian {
    fn name(&self) -> &'static str {
        "bm"
    }

    fn spec(&self) -> String {
        "bm".into()
    }

    fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        Ok(s.min(t))
    }

    fn hurst(&self) -> Option<f64> {
        Some(0.5)
    }
}

/// An arbitrary covariance matrix declared on a set of times.
#[derive(Debug, Clone)]
pub struct Tabulated {
    times: Vec<f64>,
    matrix: DMatrix<f64>,
    source: Option<String>,
}

impl Tabulated {
    pub fn new(times: Vec<f64>, matrix: DMatrix<f64>) -> Result<Self> {
        let n = times.len();
        if n == 0 || matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "tabulated matrix must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(
                "tabulated times must be finite and strictly increasing".into(),
            ));
        }
        for i in 0..n {
            if !(matrix[(i, i)] >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "tabulated diagonal entry {i} is negative"
                )));
            }
            for j in 0..i {
                if matrix[(i, j)] != matrix[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "tabulated matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            times,
            matrix,
            source: None,
        })
    }

    /// Reads the CSV layout: first row the grid times, then the matrix rows.
    pub fn from_csv_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut tab = Self::from_csv_str(&text)?;
        tab.source = Some(path.display().to_string());
        Ok(tab)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidArgument(format!("unparsable number `{}`", x.trim())))
                    })
                    .collect::<Result<Vec<f64>>>()
            });
        let times = rows
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty tabulated kernel file".into()))??;
        let n = times.len();
        let mut data = Vec::with_capacity(n * n);
        let mut count = 0;
        for row in rows {
            let row = row?;
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "matrix row {count} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
            count += 1;
        }
        if count != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} matrix rows, found {count}"
            )));
        }
        Self::new(times, DMatrix::from_row_slice(n, n, &data))
    }

    fn lookup(&self, t: f64) -> Result<usize> {
        let scale = self.times.last().copied().unwrap_or(1.0).abs().max(1.0);
        let pos = self.times.partition_point(|&x| x < t);
        [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&i| i < self.times.len())
            .find(|&i| (self.times[i] - t).abs() <= 1e-9 * scale)
            .ok_or(Error::OffGrid(t))
    }
}

impl CovarianceKernel for Tabulated {
    fn name(&self) -> &'static str {
        "tabulated"
    }

    fn spec(&self) -> String {
        match &self.source {
            Some(path) => format!("tabulated:{path}"),
            None => format!("tabulated:<{} points>", self.times.len()),
        }
    }

    fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.matrix[(self.lookup(s)?, self.lookup(t)?)])
    }

    fn vanishes_at_origin(&self) -> bool {
        false
    }
}

/// The text after `name:` in a kernel specification string.
#[derive(Debug, Clone, Copy)]
pub struct KernelArgs<'a> {
    spec: &'a str,
    raw: &'a str,
}

impl<'a> KernelArgs<'a> {
    pub fn raw(&self) -> &'a str {
        self.raw
    }

    fn error(&self, reason: impl Into<String>) -> Error {
        Error::KernelSpec {
            spec: self.spec.to_string(),
            reason: reason.into(),
        }
    }

    /// Looks up `key` in a `K=v,K2=v2` list.
    pub fn param(&self, key: &str) -> Result<f64> {
        for item in self.raw.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| self.error(format!("expected key=value, got `{item}`")))?;
            if k.trim() == key {
                return v
                    .trim()
                    .parse()
                    .map_err(|_| self.error(format!("`{}` is not a number", v.trim())));
            }
        }
        Err(self.error(format!("missing parameter {key}")))
    }
}

pub type KernelFactory = fn(&KernelArgs<'_>) -> Result<Kernel>;

/// Maps kernel names to constructors.
#[derive(Clone)]
pub struct KernelRegistry {
    factories: BTreeMap<&'static str, KernelFactory>,
}

impl KernelRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("fbm", |a| Kernel::fbm(a.param("H")?));
        reg.register("subfbm", |a| Kernel::subfbm(a.param("H")?));
        reg.register("bifbm", |a| Kernel::bifbm(a.param("H")?, a.param("K")?));
        reg.register("bm", |_| Ok(Kernel::bm()));
        reg.register("tabulated", |a| {
            Ok(Kernel::new(Tabulated::from_csv_file(Path::new(a.raw()))?))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: KernelFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }

    pub fn parse(&self, spec: &str) -> Result<Kernel> {
        let spec = spec.trim();
        let (name, raw) = spec.split_once(':').unwrap_or((spec, ""));
        let factory = self.factories.get(name.trim()).ok_or_else(|| Error::KernelSpec {
            spec: spec.to_string(),
            reason: format!(
                "unknown kernel `{name}` (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ),
        })?;
        let args = KernelArgs { spec, raw };
        factory(&args).map_err(|e| match e {
            Error::InvalidArgument(reason) => Error::KernelSpec {
                spec: spec.to_string(),
                reason,
            },
            other => other,
        })
    }
}
