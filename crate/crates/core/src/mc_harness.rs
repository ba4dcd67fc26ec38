//! Monte Carlo experiments: the consistency rate, the limit law and the
//! maximal-inequality sweep.
//!
//! Replicate `k` always draws from stream `k` of the root seed, and every
//! parallel map collects in replicate order, so reports do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::config::ConfigMap;
use crate::error::{Error, Result};
use crate::gp_bounds::{borovkov_sandwich, consistency_bound, mean_and_se, nourdin_abs_tail, MetricProfile, SupSample};
use crate::grid::TimeGrid;
use crate::kernels::{Kernel, KernelRegistry};
use crate::l1_estimator::minimize_l1_with;
use crate::limit_law::{y_from_driver, zeta_from_instance, LimitInstance};
use crate::ou_model::{gronwall_check, ModelParams, SchemeRegistry};
use crate::sampler::{PathSampler, SamplerRegistry, SeedSpec};

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    #[serde(rename = "consistency")]
    Consistency,
    #[serde(rename = "limit-dist")]
    LimitDist,
    #[serde(rename = "bounds")]
    Bounds,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::LimitDist => "limit-dist",
            ExperimentKind::Bounds => "bounds",
        }
    }
}

/// Everything that determines an experiment's output.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub kernel: Kernel,
    /// Model parameters; `params.eps` is the first entry of `eps_list`.
    pub params: ModelParams,
    pub grid: TimeGrid,
    pub eps_list: Vec<f64>,
    pub delta: f64,
    pub replicates: usize,
    pub root_seed: u64,
    pub sampler: String,
    pub scheme: String,
    pub scan_points: usize,
}

impl ExperimentConfig {
    /// Builds a config from resolved key/value pairs. Keys without a
    /// default must be present.
    pub fn from_map(kind: ExperimentKind, map: &ConfigMap) -> Result<Self> {
        let mut m = map.clone();
        for (k, v) in [
            ("T", "1"),
            ("n", "256"),
            ("seed", "0"),
            ("sampler", "cholesky"),
            ("scheme", "exact"),
            ("scan-points", "200"),
        ] {
            m.set_default(k, v);
        }
        match kind {
            ExperimentKind::Consistency => {}
            ExperimentKind::LimitDist => {
                m.set_default("eps", "0.01");
                m.set_default("replicates", "1000");
                m.set_default("delta", "0.1");
            }
            ExperimentKind::Bounds => {
                for (k, v) in [
                    ("theta0", "1"),
                    ("x0", "1"),
                    ("theta-lo", "0"),
                    ("theta-hi", "2"),
                    ("eps", "0.1"),
                    ("delta", "0.1"),
                    ("replicates", "20000"),
                ] {
                    m.set_default(k, v);
                }
            }
        }
        let kernel = KernelRegistry::builtin().parse(m.require_str("kernel")?)?;
        let eps_list = if m.contains("eps-list") {
            m.require_list("eps-list")?
        } else {
            vec![m.require::<f64>("eps")?]
        };
        let first_eps = *eps_list
            .first()
            .ok_or_else(|| Error::Config("`eps-list` is empty".into()))?;
        let horizon: f64 = m.require("T")?;
        let params = ModelParams::new(
            m.require("theta0")?,
            m.require("x0")?,
            first_eps,
            m.require("theta-lo")?,
            m.require("theta-hi")?,
            horizon,
        )?;
        let cfg = Self {
            kind,
            kernel,
            params,
            grid: TimeGrid::new(horizon, m.require("n")?)?,
            eps_list,
            delta: m.require("delta")?,
            replicates: m.require("replicates")?,
            root_seed: m.require("seed")?,
            sampler: m.require_str("sampler")?.to_string(),
            scheme: m.require_str("scheme")?.to_string(),
            scan_points: m.require("scan-points")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("`replicates` must be at least 1".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("`delta` must be positive, got {}", self.delta)));
        }
        if self.eps_list.is_empty() {
            return Err(Error::Config("`eps-list` is empty".into()));
        }
        for (i, e) in self.eps_list.iter().enumerate() {
            if !(*e >= 0.0) || !e.is_finite() {
                return Err(Error::Config(format!("noise levels must be nonnegative, got {e}")));
            }
            if self.eps_list[..i].contains(e) {
                return Err(Error::Config(format!("noise level {e} is listed twice")));
            }
        }
        if self.kind == ExperimentKind::LimitDist && self.eps_list.contains(&0.0) {
            return Err(Error::Config("the limit experiment needs eps > 0".into()));
        }
        if self.scan_points < 3 {
            return Err(Error::Config("`scan-points` must be at least 3".into()));
        }
        Ok(())
    }

    /// Canonical key/value echo of the resolved configuration.
    pub fn to_map(&self) -> ConfigMap {
        let mut m = ConfigMap::new();
        m.set("experiment", self.kind.name());
        m.set("kernel", self.kernel.spec());
        m.set("theta0", self.params.theta0.to_string());
        m.set("x0", self.params.x0.to_string());
        m.set("theta-lo", self.params.theta_lo.to_string());
        m.set("theta-hi", self.params.theta_hi.to_string());
        m.set("T", self.grid.horizon().to_string());
        m.set("n", self.grid.steps().to_string());
        let eps: Vec<String> = self.eps_list.iter().map(f64::to_string).collect();
        m.set("eps-list", eps.join(","));
        m.set("delta", self.delta.to_string());
        m.set("replicates", self.replicates.to_string());
        m.set("seed", self.root_seed.to_string());
        m.set("sampler", self.sampler.clone());
        m.set("scheme", self.scheme.clone());
        m.set("scan-points", self.scan_points.to_string());
        m
    }

    fn build_sampler(&self) -> Result<Arc<dyn PathSampler>> {
        SamplerRegistry::builtin().build(&self.sampler, &self.kernel, &self.grid)
    }

    fn sigma2(&self) -> Result<f64> {
        let h = self.grid.horizon();
        self.grid
            .times()
            .map(|t| self.kernel.eval(t, t, h))
            .try_fold(0.0, |m: f64, v| Ok(m.max(v?)))
    }
}

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the
/// empirical CDFs, evaluated at every sample point.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS statistic needs two nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic 5% critical value `1.358 sqrt((n+m)/(nm))`.
pub fn ks_critical_5pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.358 * ((n + m) / (n * m)).sqrt()
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub eps: f64,
    pub theta_hat: f64,
    pub exceeded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub eps: f64,
    pub exceedances: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub se: f64,
    pub bound: f64,
    pub bound_vacuous: bool,
    pub bound_threshold: f64,
    /// `frequency ≤ bound + 3 se`, or the bound is vacuous.
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub config: ConfigMap,
    pub sigma2: f64,
    pub m_hat: f64,
    pub m_hat_se: f64,
    pub rows: Vec<ConsistencyRow>,
    /// Frequencies do not increase as ε decreases, up to `2 sqrt(se_a² + se_b²)`
    /// per adjacent pair.
    pub trend_ok: bool,
    /// Least-squares slope of `ln frequency` against `ε^{−2}` over rows with
    /// nonzero counts.
    pub log_frequency_slope: Option<f64>,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDistReport {
    pub config: ConfigMap,
    pub eps: f64,
    pub n_u: usize,
    pub n_zeta: usize,
    pub ks: f64,
    pub ks_critical_5pct: f64,
    pub coupled_median_gap: f64,
    pub coupled_max_gap: f64,
    pub u_mean: f64,
    pub u_sd: f64,
    pub zeta_mean: f64,
    pub zeta_sd: f64,
    pub boundary_fraction: f64,
    /// More than 1% of estimates sit on an end of the search interval.
    pub boundary_warning: bool,
    #[serde(skip)]
    pub u_eps: Vec<f64>,
    #[serde(skip)]
    pub zeta: Vec<f64>,
    #[serde(skip)]
    pub zeta_coupled: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailCheck {
    pub x: f64,
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BermanCheck {
    pub x: f64,
    pub empirical: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyCheck {
    pub value: f64,
    pub resolved: f64,
    pub coarse_value: Option<f64>,
    pub relative_change: Option<f64>,
    /// Monte Carlo `E[sup |G|]` divided by the entropy integral.
    pub sup_abs_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallSummary {
    pub eps: f64,
    pub paths: usize,
    pub holds: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionCheck {
    pub expected: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub config: ConfigMap,
    pub kernel: String,
    #[serde(rename = "H")]
    pub hurst: Option<f64>,
    pub m_hat: f64,
    pub se: f64,
    pub sup_abs_mean: f64,
    pub sigma2: f64,
    pub sandwich_lo: Option<f64>,
    pub sandwich_hi: Option<f64>,
    /// `m_hat` within 4 standard errors of `[sandwich_lo, sandwich_hi]`.
    pub sandwich_pass: Option<bool>,
    pub tail_checks: Vec<TailCheck>,
    pub berman: Option<Vec<BermanCheck>>,
    pub entropy: Option<EntropyCheck>,
    pub gronwall: GronwallSummary,
    pub bm_reflection: Option<ReflectionCheck>,
    #[serde(skip)]
    pub sup: Vec<f64>,
    #[serde(skip)]
    pub sup_abs: Vec<f64>,
}

impl BoundsReport {
    pub fn all_pass(&self) -> bool {
        self.sandwich_pass.unwrap_or(true)
            && self.tail_checks.iter().all(|c| c.pass)
            && self.gronwall.holds == self.gronwall.paths
            && self.bm_reflection.is_none_or(|r| r.pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExperimentReport {
    Consistency(ConsistencyReport),
    LimitDist(LimitDistReport),
    Bounds(BoundsReport),
}

impl ExperimentReport {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            ExperimentReport::Consistency(_) => ExperimentKind::Consistency,
            ExperimentReport::LimitDist(_) => ExperimentKind::LimitDist,
            ExperimentReport::Bounds(_) => ExperimentKind::Bounds,
        }
    }
}

pub fn run_consistency(cfg: &ExperimentConfig) -> Result<ConsistencyReport> {
    let sampler = cfg.build_sampler()?;
    let scheme = SchemeRegistry::builtin().get(&cfg.scheme)?;
    let per_eps: Vec<ModelParams> = cfg
        .eps_list
        .iter()
        .map(|&e| cfg.params.with_eps(e))
        .collect::<Result<_>>()?;

    // Each replicate draws one driver path and reuses it for every ε.
    let outcomes: Vec<(f64, Vec<f64>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| -> Result<(f64, Vec<f64>)> {
            let driver = sampler.sample(&mut SeedSpec::new(cfg.root_seed, k as u64).rng());
            let mut estimates = Vec::with_capacity(per_eps.len());
            for p in &per_eps {
                let x = scheme.simulate(p, &driver)?;
                estimates.push(minimize_l1_with(&x, p, cfg.scan_points)?.theta_hat);
            }
            Ok((driver.sup(), estimates))
        })
        .collect::<Result<_>>()?;

    let sups: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (m_hat, m_hat_se) = mean_and_se(&sups);
    let sigma2 = cfg.sigma2()?;

    let mut records = Vec::with_capacity(cfg.replicates * cfg.eps_list.len());
    let mut rows = Vec::with_capacity(cfg.eps_list.len());
    for (j, p) in per_eps.iter().enumerate() {
        let mut hits = 0;
        for (k, (_, est)) in outcomes.iter().enumerate() {
            let exceeded = (est[j] - p.theta0).abs() > cfg.delta;
            hits += exceeded as usize;
            records.push(ReplicateRecord {
                replicate: k,
                eps: p.eps,
                theta_hat: est[j],
                exceeded,
            });
        }
        let frequency = hits as f64 / cfg.replicates as f64;
        let se = binomial_se(frequency, cfg.replicates);
        let bound = consistency_bound(p, cfg.delta, p.eps, m_hat, sigma2)?;
        rows.push(ConsistencyRow {
            eps: p.eps,
            exceedances: hits,
            replicates: cfg.replicates,
            frequency,
            se,
            bound: bound.value,
            bound_vacuous: bound.vacuous,
            bound_threshold: bound.threshold,
            bound_ok: bound.vacuous || frequency <= bound.value + 3.0 * se,
        });
    }

    let mut by_eps: Vec<&ConsistencyRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let trend_ok = by_eps.windows(2).all(|w| {
        let slack = 2.0 * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt();
        w[1].frequency <= w[0].frequency + slack
    });

    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.exceedances > 0 && r.eps > 0.0)
        .map(|r| (r.eps.powi(-2), r.frequency.ln()))
        .collect();
    let log_frequency_slope = least_squares_slope(&points);

    Ok(ConsistencyReport {
        config: cfg.to_map(),
        sigma2,
        m_hat,
        m_hat_se,
        rows,
        trend_ok,
        log_frequency_slope,
        records,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn run_limit_dist(cfg: &ExperimentConfig) -> Result<LimitDistReport> {
    let sampler = cfg.build_sampler()?;
    let scheme = SchemeRegistry::builtin().get(&cfg.scheme)?;
    let p = cfg.params.with_eps(cfg.eps_list[0])?;
    let width = p.theta_hi - p.theta_lo;
    let pin_tol = 1e-6 * width.max(f64::MIN_POSITIVE);

    struct Draw {
        u: f64,
        zeta: f64,
        zeta_coupled: f64,
        pinned: bool,
    }
    let draws: Vec<Draw> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| -> Result<Draw> {
            let mut rng = SeedSpec::new(cfg.root_seed, k as u64).rng();
            let driver = sampler.sample(&mut rng);
            let x = scheme.simulate(&p, &driver)?;
            let est = minimize_l1_with(&x, &p, cfg.scan_points)?;
            let pinned = (est.theta_hat - p.theta_lo).abs() <= pin_tol || (p.theta_hi - est.theta_hat).abs() <= pin_tol;
            let coupled = LimitInstance::new(y_from_driver(p.theta0, &driver)?, p.theta0, p.x0);
            let fresh = sampler.sample(&mut rng);
            let independent = LimitInstance::new(y_from_driver(p.theta0, &fresh)?, p.theta0, p.x0);
            Ok(Draw {
                u: (est.theta_hat - p.theta0) / p.eps,
                zeta: zeta_from_instance(&independent)?,
                zeta_coupled: zeta_from_instance(&coupled)?,
                pinned,
            })
        })
        .collect::<Result<_>>()?;

    let u_eps: Vec<f64> = draws.iter().map(|d| d.u).collect();
    let zeta: Vec<f64> = draws.iter().map(|d| d.zeta).collect();
    let zeta_coupled: Vec<f64> = draws.iter().map(|d| d.zeta_coupled).collect();
    let gaps: Vec<f64> = draws.iter().map(|d| (d.u - d.zeta_coupled).abs()).collect();
    let pinned = draws.iter().filter(|d| d.pinned).count();
    let boundary_fraction = pinned as f64 / cfg.replicates as f64;
    let sd = |xs: &[f64]| {
        let (m, se) = mean_and_se(xs);
        (m, se * (xs.len() as f64).sqrt())
    };
    let (u_mean, u_sd) = sd(&u_eps);
    let (zeta_mean, zeta_sd) = sd(&zeta);

    Ok(LimitDistReport {
        config: cfg.to_map(),
        eps: p.eps,
        n_u: u_eps.len(),
        n_zeta: zeta.len(),
        ks: ks_two_sample(&u_eps, &zeta)?,
        ks_critical_5pct: ks_critical_5pct(u_eps.len(), zeta.len()),
        coupled_median_gap: median(&gaps),
        coupled_max_gap: gaps.iter().copied().fold(0.0, f64::max),
        u_mean,
        u_sd,
        zeta_mean,
        zeta_sd,
        boundary_fraction,
        boundary_warning: boundary_fraction > 0.01,
        u_eps,
        zeta,
        zeta_coupled,
    })
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<BoundsReport> {
    let sampler = cfg.build_sampler()?;
    let scheme = SchemeRegistry::builtin().get(&cfg.scheme)?;
    let p = cfg.params.with_eps(cfg.eps_list[0])?;
    let profile = MetricProfile::new(&cfg.kernel, &cfg.grid)?;
    let n = cfg.replicates;

    let per_path: Vec<(f64, f64, bool, f64)> = (0..n)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64, bool, f64)> {
            let driver = sampler.sample(&mut SeedSpec::new(cfg.root_seed, k as u64).rng());
            let x = scheme.simulate(&p, &driver)?;
            let g = gronwall_check(&p, &x, &driver)?;
            let ratio = if g.rhs > 0.0 { g.lhs / g.rhs } else { 0.0 };
            Ok((driver.sup(), driver.sup_abs(), g.holds, ratio))
        })
        .collect::<Result<_>>()?;
    let sample = SupSample {
        sup: per_path.iter().map(|r| r.0).collect(),
        sup_abs: per_path.iter().map(|r| r.1).collect(),
    };
    let gronwall = GronwallSummary {
        eps: p.eps,
        paths: n,
        holds: per_path.iter().filter(|r| r.2).count(),
        max_ratio: per_path.iter().map(|r| r.3).fold(0.0, f64::max),
    };

    let sup_mean = sample.sup_mean();
    let (sup_abs_mean, _) = mean_and_se(&sample.sup_abs);
    let sigma2 = profile.sigma2();
    let sigma = sigma2.sqrt();

    let (sandwich_lo, sandwich_hi, sandwich_pass) = match cfg.kernel.hurst() {
        Some(h) => {
            let [lo, hi] = borovkov_sandwich(h, 1.0, 1.0)?;
            let margin = 4.0 * sup_mean.se;
            let pass = sup_mean.mean + margin >= lo && sup_mean.mean - margin <= hi;
            (Some(lo), Some(hi), Some(pass))
        }
        None => (None, None, None),
    };

    let offsets = [0.5, 1.0, 1.5];
    let tail_checks = offsets
        .iter()
        .map(|&c| {
            // A degenerate process has no scale; fall back to unit offsets.
            let (x, bound) = if sigma2 > 0.0 {
                let x = sup_mean.mean + c * sigma;
                (x, nourdin_abs_tail(sigma2, sup_mean.mean, x)?)
            } else {
                (sup_mean.mean + c, 0.0)
            };
            let empirical = sample.abs_exceedance(x);
            let se = binomial_se(empirical, n);
            Ok(TailCheck {
                x,
                empirical,
                bound,
                se,
                pass: empirical <= bound + 3.0 * se,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let berman = if profile.rho_strictly_increasing() && sigma2 > 0.0 {
        let checks = tail_checks
            .iter()
            .filter(|c| c.x > 0.0)
            .map(|c| {
                let empirical = sample.sup_abs.iter().filter(|&&s| s > c.x).count() as f64 / n as f64;
                Ok(BermanCheck {
                    x: c.x,
                    empirical,
                    bound: profile.berman_tail(c.x, 1.0)?,
                })
            })
            .collect::<Result<Vec<_>>>();
        match checks {
            Ok(c) => Some(c),
            Err(Error::NotApplicable(_)) | Err(Error::Range { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let entropy = match profile.entropy_integral() {
        Ok(e) => {
            let coarse_value = if cfg.grid.steps().is_multiple_of(2) && cfg.grid.steps() >= 8 {
                let coarse = MetricProfile::new(&cfg.kernel, &cfg.grid.coarsen(2)?)?;
                coarse.entropy_integral().ok().map(|c| c.value)
            } else {
                None
            };
            Some(EntropyCheck {
                value: e.value,
                resolved: e.resolved,
                coarse_value,
                relative_change: coarse_value.map(|c| (e.value - c).abs() / e.value),
                sup_abs_ratio: sup_abs_mean / e.value,
            })
        }
        Err(Error::Degenerate(..)) => None,
        Err(e) => return Err(e),
    };

    let bm_reflection = (cfg.kernel.name() == "bm").then(|| {
        let expected = (2.0 * cfg.grid.horizon() / std::f64::consts::PI).sqrt();
        let z = if sup_mean.se > 0.0 {
            (sup_mean.mean - expected) / sup_mean.se
        } else {
            f64::INFINITY
        };
        ReflectionCheck {
            expected,
            z,
            pass: z.abs() <= 4.0,
        }
    });

    Ok(BoundsReport {
        config: cfg.to_map(),
        kernel: cfg.kernel.spec(),
        hurst: cfg.kernel.hurst(),
        m_hat: sup_mean.mean,
        se: sup_mean.se,
        sup_abs_mean,
        sigma2,
        sandwich_lo,
        sandwich_hi,
        sandwich_pass,
        tail_checks,
        berman,
        entropy,
        gronwall,
        bm_reflection,
        sup: sample.sup,
        sup_abs: sample.sup_abs,
    })
}

/// A runnable experiment, selected by name.
pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;

    fn kind(&self) -> ExperimentKind;

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport>;
}

pub struct ConsistencyExperiment;
pub struct LimitDistExperiment;
pub struct BoundsExperiment;

impl Experiment for ConsistencyExperiment {
    fn name(&self) -> &'static str {
        "consistency"
    }

    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Consistency
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        run_consistency(cfg).map(ExperimentReport::Consistency)
    }
}

impl Experiment for LimitDistExperiment {
    fn name(&self) -> &'static str {
        "limit-dist"
    }

    fn kind(&self) -> ExperimentKind {
        ExperimentKind::LimitDist
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        run_limit_dist(cfg).map(ExperimentReport::LimitDist)
    }
}

impl Experiment for BoundsExperiment {
    fn name(&self) -> &'static str {
        "bounds"
    }

    fn kind(&self) -> ExperimentKind {
        ExperimentKind::Bounds
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        run_bounds(cfg).map(ExperimentReport::Bounds)
    }
}

#[derive(Clone)]
pub struct ExperimentRegistry {
    experiments: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl ExperimentRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self {
            experiments: BTreeMap::new(),
        };
        reg.register(Arc::new(ConsistencyExperiment));
        reg.register(Arc::new(LimitDistExperiment));
        reg.register(Arc::new(BoundsExperiment));
        reg
    }

    pub fn register(&mut self, exp: Arc<dyn Experiment>) {
        self.experiments.insert(exp.name(), exp);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Experiment>> {
        self.experiments
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "experiment",
                name: name.to_string(),
                available: self.experiments.keys().copied().collect::<Vec<_>>().join(", "),
            })
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores if `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
