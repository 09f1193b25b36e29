//! Resolves each subcommand's configuration and writes its outputs.

use std::path::{Path, PathBuf};

use sdr_core::bench::{
    gamma_sweep, render_table, run_benchmark, BenchConfig, BenchMethod, BenchSetting, MethodSettings, SweepConfig,
};
use sdr_core::intrinsic::Gamma;
use sdr_core::realdata::{run_real_data, RealDataProtocol};
use sdr_core::synthetic::{AlignmentCase, SpectrumKind};
use sdr_core::{Dataset, SdrError};

use crate::cli::{parse_value, FileConfig, OracleArgs, RealDataArgs, Resolver, SimulateArgs};
use crate::oracles::{run_oracles, Fault, OracleOptions};
use crate::Failure;

const DEFAULT_OUT: &str = "sdr-out";

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, Failure> {
    match path {
        Some(p) => FileConfig::load(p),
        None => Ok(FileConfig::default()),
    }
}

/// Flag, config, then `SDR_SEED`, then 0.
fn resolve_seed(r: &Resolver, flag: &Option<String>) -> Result<u64, Failure> {
    if let Some(s) = r.parsed::<u64>("seed", flag)? {
        return Ok(s);
    }
    match std::env::var("SDR_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|e| Failure::usage(format!("invalid SDR_SEED `{s}`: {e}"))),
        Err(_) => Ok(0),
    }
}

fn resolve_methods(r: &Resolver, flag: &Option<Vec<String>>, default: &[BenchMethod]) -> Result<Vec<BenchMethod>, Failure> {
    let Some(names) = r.list("methods", flag) else {
        return Ok(default.to_vec());
    };
    let mut out = Vec::new();
    for n in names {
        let add: Vec<BenchMethod> = if n.eq_ignore_ascii_case("all") {
            default.to_vec()
        } else {
            vec![parse_value("methods", &n)?]
        };
        for m in add {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::usage("method list is empty; pass --methods with at least one method"));
    }
    Ok(out)
}

fn parse_gamma(s: &str) -> Result<Vec<Gamma>, Failure> {
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(Failure::usage(format!("--gamma-grid: `{s}` is not log:LO:HI:N")));
        };
        let (lo, hi): (f64, f64) = (parse_value("gamma_grid", lo)?, parse_value("gamma_grid", hi)?);
        let n: usize = parse_value("gamma_grid", n)?;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Failure::usage(format!("--gamma-grid: `{s}` needs 0 < LO ≤ HI < ∞")));
        }
        return Ok(Gamma::log_grid(lo, hi, n));
    }
    let v: f64 = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        other => parse_value("gamma_grid", other)?,
    };
    Gamma::new(v).map(|g| vec![g]).map_err(|e| Failure::usage(format!("--gamma-grid: {e}")))
}

fn resolve_grid(r: &Resolver, flag: &Option<Vec<String>>, default: Vec<Gamma>) -> Result<Vec<Gamma>, Failure> {
    let Some(items) = r.list("gamma_grid", flag) else {
        return Ok(default);
    };
    let mut grid = Vec::new();
    for s in items {
        grid.extend(parse_gamma(&s)?);
    }
    if grid.is_empty() {
        return Err(Failure::usage("--gamma-grid is empty"));
    }
    Ok(grid)
}

fn resolve_many<T>(
    r: &Resolver,
    key: &str,
    flag: &Option<Vec<String>>,
    all: &[T],
) -> Result<Vec<T>, Failure>
where
    T: std::str::FromStr + Copy + PartialEq,
    T::Err: std::fmt::Display,
{
    let Some(items) = r.list(key, flag) else {
        return Ok(all.to_vec());
    };
    let mut out = Vec::new();
    for s in items {
        let add = if s.eq_ignore_ascii_case("all") {
            all.to_vec()
        } else {
            vec![parse_value::<T>(key, &s)?]
        };
        for v in add {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::usage(format!("{} is empty", crate::cli::flag_name(key))));
    }
    Ok(out)
}

fn out_dir(r: &Resolver, flag: &Option<String>) -> Result<PathBuf, Failure> {
    let dir = PathBuf::from(r.one("out", flag)?.unwrap_or_else(|| DEFAULT_OUT.into()));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::usage(format!("output directory {} is not writable: {e}", dir.display())))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn positive(key: &str, v: usize) -> Result<usize, Failure> {
    if v == 0 {
        Err(Failure::usage(format!("{} must be at least 1", crate::cli::flag_name(key))))
    } else {
        Ok(v)
    }
}

/// Shared knobs of `simulate` and `sweep-gamma`.
struct SyntheticRun {
    seed: u64,
    trials: usize,
    spectra: Vec<SpectrumKind>,
    alignments: Vec<AlignmentCase>,
    ntrain: Vec<usize>,
    k: usize,
    n_test: usize,
    out: PathBuf,
}

fn resolve_synthetic(
    r: &Resolver,
    a: &SimulateArgs,
    default_trials: usize,
    default_spectra: &[SpectrumKind],
    default_ntrain: &[usize],
) -> Result<SyntheticRun, Failure> {
    let ntrain: Vec<usize> = match r.list("ntrain", &a.ntrain) {
        Some(v) => v.iter().map(|s| parse_value("ntrain", s)).collect::<Result<_, _>>()?,
        None => default_ntrain.to_vec(),
    };
    if ntrain.is_empty() {
        return Err(Failure::usage("--ntrain is empty"));
    }
    Ok(SyntheticRun {
        seed: resolve_seed(r, &a.common.seed)?,
        trials: positive("trials", r.parsed("trials", &a.trials)?.unwrap_or(default_trials))?,
        spectra: resolve_many(r, "spectrum", &a.spectrum, default_spectra)?,
        alignments: resolve_many(r, "alignment", &a.alignment, &AlignmentCase::ALL)?,
        ntrain,
        k: positive("k", r.parsed("k", &a.k)?.unwrap_or(15))?,
        n_test: r.parsed("n_test", &a.n_test)?.unwrap_or(10_000),
        out: out_dir(r, &a.common.out)?,
    })
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let file = load_config(&a.common.config)?;
    let r = Resolver::new(&file);
    let methods = resolve_methods(&r, &a.common.methods, &BenchMethod::ALL)?;
    let grid = resolve_grid(&r, &a.common.gamma_grid, Gamma::tuning_grid())?;
    let run = resolve_synthetic(
        &r,
        a,
        100,
        &[SpectrumKind::FastDecay, SpectrumKind::SlowDecay],
        &[150, 1500],
    )?;
    let mut settings = Vec::new();
    for &spectrum in &run.spectra {
        for &n_train in &run.ntrain {
            for &alignment in &run.alignments {
                settings.push(BenchSetting {
                    spectrum,
                    alignment,
                    n_train,
                });
            }
        }
    }
    let mut cfg = BenchConfig::new(settings, methods, run.trials, run.seed);
    cfg.n_test = run.n_test;
    cfg.method = MethodSettings::new(run.k);
    cfg.method.gamma_grid = grid;
    let report = run_benchmark(&cfg)?;
    let table = report.to_table();
    write(&run.out, "report.csv", &report.to_csv()?)?;
    write(&run.out, "report.json", &report.to_json()?)?;
    write(&run.out, "table.txt", &table)?;
    print!("{table}");
    println!("wrote report.csv, report.json, table.txt to {}", run.out.display());
    Ok(())
}

pub fn sweep_gamma(a: &SimulateArgs) -> Result<(), Failure> {
    let file = load_config(&a.common.config)?;
    let r = Resolver::new(&file);
    let methods = resolve_methods(&r, &a.common.methods, &BenchMethod::GAMMA_METHODS)?;
    if let Some(m) = methods.iter().find(|m| !m.uses_gamma()) {
        return Err(Failure::usage(format!(
            "{m} has no γ; sweep-gamma accepts LSPCA, BARSHAN, PLS"
        )));
    }
    let grid = resolve_grid(&r, &a.common.gamma_grid, Gamma::log_grid(1e-4, 1e4, 15))?;
    let run = resolve_synthetic(&r, a, 20, &[SpectrumKind::SlowDecay], &[150])?;
    let [spectrum] = run.spectra[..] else {
        return Err(Failure::usage("sweep-gamma takes a single --spectrum"));
    };
    let [n_train] = run.ntrain[..] else {
        return Err(Failure::usage("sweep-gamma takes a single --ntrain"));
    };
    let mut cfg = SweepConfig::new(run.trials, run.seed);
    cfg.spectrum = spectrum;
    cfg.n_train = n_train;
    cfg.alignments = run.alignments;
    cfg.methods = methods;
    cfg.n_test = run.n_test;
    cfg.grid = grid;
    cfg.method = MethodSettings::new(run.k);
    let report = gamma_sweep(&cfg)?;
    write(&run.out, "gamma_curves.csv", &report.curves_csv()?)?;
    write(&run.out, "gamma_references.csv", &report.references_csv()?)?;
    write(&run.out, "gamma_sweep.json", &report.to_json()?)?;

    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "failed".into());
    let mut rows = vec![vec![
        "alignment".to_string(),
        "method".into(),
        "smallest γ".into(),
        "largest γ".into(),
        "PCA".into(),
        "OLS".into(),
    ]];
    for c in &report.curves {
        rows.push(vec![
            c.alignment.label().to_string(),
            c.method.to_string(),
            fmt(c.points.first().and_then(|p| p.mean_test_mse)),
            fmt(c.points.last().and_then(|p| p.mean_test_mse)),
            fmt(report.reference(c.alignment, BenchMethod::Pca)),
            fmt(report.reference(c.alignment, BenchMethod::Ols)),
        ]);
    }
    print!(
        "{}",
        render_table(&rows, &format!("mean test MSE at the γ grid ends over {} trials", report.trials))
    );
    println!(
        "wrote gamma_curves.csv, gamma_references.csv, gamma_sweep.json to {}",
        run.out.display()
    );
    Ok(())
}

fn parse_delimiter(s: &str) -> Result<u8, Failure> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(Failure::usage(format!("--delimiter must be one ASCII character or `tab`, got `{s}`"))),
    }
}

pub fn real_data(a: &RealDataArgs) -> Result<(), Failure> {
    let file = load_config(&a.common.config)?;
    let r = Resolver::new(&file);
    let methods = resolve_methods(&r, &a.common.methods, &BenchMethod::ALL)?;
    let grid = resolve_grid(&r, &a.common.gamma_grid, Gamma::tuning_grid())?;
    let seed = resolve_seed(&r, &a.common.seed)?;
    let path = r
        .one("data", &a.data)?
        .ok_or_else(|| Failure::usage("real-data needs --data <path>"))?;
    let response = r
        .one("response", &a.response)?
        .ok_or_else(|| Failure::usage("real-data needs --response <column>"))?;
    let delimiter = match r.one("delimiter", &a.delimiter)? {
        Some(s) => parse_delimiter(&s)?,
        None => b',',
    };
    let exclude = r.list("exclude", &a.exclude).unwrap_or_default();
    let k_values: Option<Vec<usize>> = r
        .list("k", &a.k)
        .map(|v| v.iter().map(|s| parse_value("k", s)).collect::<Result<_, _>>())
        .transpose()?;
    let k_max: Option<usize> = r.parsed("k_max", &a.k_max)?;
    let out = out_dir(&r, &a.common.out)?;

    let d = Dataset::from_csv_path(&path, &response, delimiter, &exclude).map_err(|e| match e {
        SdrError::Io(io) => Failure::usage(format!("cannot read {path}: {io}")),
        other => Failure::usage(other.to_string()),
    })?;
    let mut protocol = RealDataProtocol::default_for(d.n(), d.p(), seed);
    if let Some(k) = k_values {
        protocol.k_values = k;
    } else if let Some(m) = k_max {
        protocol.k_values = (1..=m).collect();
    }
    protocol
        .validate(d.n(), d.p())
        .map_err(|e| Failure::usage(format!("{e} (dataset has P = {})", d.p())))?;
    let mut settings = MethodSettings::new(1);
    settings.gamma_grid = grid;
    let report = run_real_data(&d, &protocol, &methods, &settings)?;
    write(&out, "curves.csv", &report.curves_csv()?)?;
    write(&out, "spectrum.csv", &report.spectrum_csv()?)?;
    write(&out, "real_data.json", &report.to_json()?)?;

    let mut rows = vec![std::iter::once("method".to_string())
        .chain(protocol.k_values.iter().map(|k| format!("K={k}")))
        .collect::<Vec<_>>()];
    for &m in &methods {
        rows.push(
            std::iter::once(m.to_string())
                .chain(protocol.k_values.iter().map(|&k| {
                    report
                        .point(m, k)
                        .map(|o| format!("{:.4}", o.test_mse))
                        .unwrap_or_else(|| "failed".into())
                }))
                .collect(),
        );
    }
    let title = format!(
        "test MSE, {} training / {} test rows, P = {}",
        protocol.train_size,
        protocol.test_size,
        d.p()
    );
    print!("{}", render_table(&rows, &title));
    println!("wrote curves.csv, spectrum.csv, real_data.json to {}", out.display());
    Ok(())
}

pub fn oracle_check(a: &OracleArgs) -> Result<(), Failure> {
    let file = load_config(&a.config)?;
    let r = Resolver::new(&file);
    let seed = resolve_seed(&r, &a.seed)?;
    let results = run_oracles(OracleOptions {
        seed,
        fault: Fault(a.inject_fault),
    });
    for res in &results {
        println!(
            "{} {}: {}",
            if res.passed { "PASS" } else { "FAIL" },
            res.name,
            res.detail
        );
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.to_string())
        .collect();
    println!("{}/{} oracles passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Oracle(failed))
    }
}
