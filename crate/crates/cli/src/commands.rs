use std::path::{Path, PathBuf};

use l1drift::grid::fmt_sig;
use l1drift::mc_harness::with_threads;
use l1drift::report::{write_estimate_json, write_path_csv};
use l1drift::{
    g_delta, ConfigMap, Error, ExperimentConfig, ExperimentRegistry, KernelRegistry, ModelParams, Result,
    SamplerRegistry, SchemeRegistry, SeedSpec, TimeGrid,
};

use crate::Flags;

const KNOWN_KEYS: &[&str] = &[
    "config",
    "out",
    "threads",
    "experiment",
    "kernel",
    "theta0",
    "x0",
    "eps",
    "eps-list",
    "n",
    "T",
    "theta-lo",
    "theta-hi",
    "delta",
    "replicates",
    "seed",
    "sampler",
    "scheme",
    "scan-points",
];

const DEFAULT_OUT: &str = "l1drift-out";

/// Config file values overridden by explicit flags.
fn resolve(flags: &Flags) -> Result<ConfigMap> {
    let mut map = match &flags.config {
        Some(path) => {
            ConfigMap::from_file(path).map_err(|e| Error::Config(format!("cannot load {}: {e}", path.display())))?
        }
        None => ConfigMap::new(),
    };
    if let Some((key, _)) = map.iter().find(|(k, _)| !KNOWN_KEYS.contains(k)) {
        return Err(Error::Config(format!("unknown config key `{key}`")));
    }
    let mut over = ConfigMap::new();
    let mut put = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            over.set(key, v);
        }
    };
    put("kernel", flags.kernel.clone());
    put("theta0", flags.theta0.map(|v| v.to_string()));
    put("x0", flags.x0.map(|v| v.to_string()));
    put("eps", flags.eps.map(|v| v.to_string()));
    put("eps-list", flags.eps_list.clone());
    put("n", flags.n.map(|v| v.to_string()));
    put("T", flags.horizon.map(|v| v.to_string()));
    put("theta-lo", flags.theta_lo.map(|v| v.to_string()));
    put("theta-hi", flags.theta_hi.map(|v| v.to_string()));
    put("delta", flags.delta.map(|v| v.to_string()));
    put("replicates", flags.replicates.map(|v| v.to_string()));
    put("seed", flags.seed.map(|v| v.to_string()));
    put("sampler", flags.sampler.clone());
    put("scheme", flags.scheme.clone());
    put("scan-points", flags.scan_points.map(|v| v.to_string()));
    put("out", flags.out.as_ref().map(|p| p.display().to_string()));
    put("threads", flags.threads.map(|v| v.to_string()));
    // An explicit --eps replaces a list from the file and vice versa.
    if over.contains("eps") || over.contains("eps-list") {
        let mut kept = ConfigMap::new();
        for (k, v) in map.iter().filter(|(k, _)| *k != "eps" && *k != "eps-list") {
            kept.set(k, v);
        }
        map = kept;
    }
    map.merge(&over);
    Ok(map)
}

fn out_dir(map: &ConfigMap) -> Option<PathBuf> {
    map.get_str("out").map(PathBuf::from)
}

fn print_config(map: &ConfigMap) {
    print!("{}", map.comment_header());
}

/// Parameters shared by `simulate` and `estimate`.
struct SingleRun {
    params: ModelParams,
    echo: ConfigMap,
    path: l1drift::SamplePath,
    driver: l1drift::SamplePath,
}

fn single_run(map: &mut ConfigMap, needs_interval: bool) -> Result<SingleRun> {
    for (k, v) in [
        ("T", "1"),
        ("n", "256"),
        ("seed", "0"),
        ("sampler", "cholesky"),
        ("scheme", "exact"),
    ] {
        map.set_default(k, v);
    }
    if map.contains("eps-list") {
        return Err(Error::Config("a single run takes `eps`, not `eps-list`".into()));
    }
    let kernel = KernelRegistry::builtin().parse(map.require_str("kernel")?)?;
    let theta0: f64 = map.require("theta0")?;
    let (lo, hi) = if needs_interval {
        (map.require("theta-lo")?, map.require("theta-hi")?)
    } else {
        (
            map.get("theta-lo")?.unwrap_or(theta0),
            map.get("theta-hi")?.unwrap_or(theta0),
        )
    };
    let horizon: f64 = map.require("T")?;
    let params = ModelParams::new(theta0, map.require("x0")?, map.require("eps")?, lo, hi, horizon)?;
    let grid = TimeGrid::new(horizon, map.require("n")?)?;
    let seed: u64 = map.require("seed")?;
    let sampler_name = map.require_str("sampler")?.to_string();
    let scheme_name = map.require_str("scheme")?.to_string();

    let mut echo = ConfigMap::new();
    echo.set("kernel", kernel.spec());
    echo.set("theta0", params.theta0.to_string());
    echo.set("x0", params.x0.to_string());
    echo.set("eps", params.eps.to_string());
    if needs_interval {
        echo.set("theta-lo", lo.to_string());
        echo.set("theta-hi", hi.to_string());
    }
    echo.set("T", horizon.to_string());
    echo.set("n", grid.steps().to_string());
    echo.set("seed", seed.to_string());
    echo.set("sampler", sampler_name.clone());
    echo.set("scheme", scheme_name.clone());

    let sampler = SamplerRegistry::builtin().build(&sampler_name, &kernel, &grid)?;
    let scheme = SchemeRegistry::builtin().get(&scheme_name)?;
    let driver = sampler.sample(&mut SeedSpec::new(seed, 0).rng());
    let path = scheme.simulate(&params, &driver)?;
    Ok(SingleRun {
        params,
        echo,
        path,
        driver,
    })
}

fn write_paths(dir: &Path, run: &SingleRun) -> Result<()> {
    write_path_csv(&dir.join("driver.csv"), &run.echo, &run.driver, "value")?;
    write_path_csv(&dir.join("path.csv"), &run.echo, &run.path, "X")
}

pub fn simulate(flags: &Flags) -> Result<()> {
    let mut map = resolve(flags)?;
    let run = single_run(&mut map, false)?;
    print_config(&run.echo);
    match out_dir(&map) {
        Some(dir) => {
            write_paths(&dir, &run)?;
            println!(
                "wrote {} and {}",
                dir.join("driver.csv").display(),
                dir.join("path.csv").display()
            );
        }
        None => print!("{}", run.path.to_csv("X")),
    }
    Ok(())
}

pub fn estimate(flags: &Flags) -> Result<()> {
    let mut map = resolve(flags)?;
    map.set_default("scan-points", "200");
    let run = single_run(&mut map, true)?;
    let scan_points: usize = map.require("scan-points")?;
    let mut echo = run.echo.clone();
    echo.set("scan-points", scan_points.to_string());
    print_config(&echo);
    let est = l1drift::l1_estimator::minimize_l1_with(&run.path, &run.params, scan_points)?;
    println!("theta_hat = {}", fmt_sig(est.theta_hat, 7));
    println!("objective = {}", fmt_sig(est.objective, 7));
    if let Some(dir) = out_dir(&map) {
        let run = SingleRun { echo, ..run };
        write_paths(&dir, &run)?;
        write_estimate_json(&dir.join("estimate.json"), &run.echo, &est)?;
    }
    Ok(())
}

pub fn gdelta(flags: &Flags) -> Result<()> {
    let mut map = resolve(flags)?;
    map.set_default("T", "1");
    let theta0: f64 = map.require("theta0")?;
    let x0: f64 = map.require("x0")?;
    let delta: f64 = map.require("delta")?;
    let horizon: f64 = map.require("T")?;
    let mut echo = ConfigMap::new();
    echo.set("theta0", theta0.to_string());
    echo.set("x0", x0.to_string());
    echo.set("delta", delta.to_string());
    echo.set("T", horizon.to_string());
    print_config(&echo);
    println!("{}", fmt_sig(g_delta(theta0, x0, delta, horizon)?, 7));
    Ok(())
}

pub fn experiment(name: &str, flags: &Flags) -> Result<()> {
    let map = resolve(flags)?;
    let exp = ExperimentRegistry::builtin().get(name)?;
    let cfg = ExperimentConfig::from_map(exp.kind(), &map)?;
    print_config(&cfg.to_map());
    let threads: Option<usize> = map.get("threads")?;
    let report = with_threads(threads, || exp.run(&cfg))??;
    let dir = out_dir(&map).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let files = report.write_to(&dir)?;
    print!("{}", report.summary());
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
