//! Command-line flags and the flat JSON config file. Every value is kept as
//! text until resolution so that flags and config entries share one parser;
//! flags win over the config file, which wins over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "sdr-bench", version, about = "Benchmarks for linear supervised dimension reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo benchmark over spectrum × alignment × N settings.
    Simulate(SimulateArgs),
    /// Test MSE of the γ-balanced methods across a γ grid.
    SweepGamma(SimulateArgs),
    /// Test MSE versus subspace dimension on a CSV dataset.
    RealData(RealDataArgs),
    /// Runs the small-scale oracles and reports pass/fail.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Comma-separated methods (ols, pca, bair, pv, pcps, barshan, pls,
    /// lspca, sppca) or `all`.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Master seed; falls back to SDR_SEED, then 0.
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Flat JSON file of flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// γ values (numbers, `inf`, or `log:LO:HI:N`), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Monte Carlo trials per setting.
    #[arg(long)]
    pub trials: Option<String>,
    /// fast, slow (comma-separated for several).
    #[arg(long, value_delimiter = ',')]
    pub spectrum: Option<Vec<String>>,
    /// well, mis, partial, or all.
    #[arg(long, value_delimiter = ',')]
    pub alignment: Option<Vec<String>>,
    /// Training sizes.
    #[arg(long, value_delimiter = ',')]
    pub ntrain: Option<Vec<String>>,
    /// Subspace dimension.
    #[arg(long)]
    pub k: Option<String>,
    /// Test rows per trial.
    #[arg(long)]
    pub n_test: Option<String>,
}

#[derive(Debug, Args)]
pub struct RealDataArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Path to the CSV file.
    #[arg(long)]
    pub data: Option<String>,
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
    /// Field delimiter: one character, or `tab`.
    #[arg(long)]
    pub delimiter: Option<String>,
    /// Columns to drop before fitting.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    /// Explicit subspace dimensions; overrides --k-max.
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<String>>,
    /// Sweep K = 1..=k-max (default P).
    #[arg(long)]
    pub k_max: Option<String>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Seed for the oracle data; falls back to SDR_SEED, then 0.
    #[arg(long)]
    pub seed: Option<String>,
    /// Flat JSON file of flag values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corrupts library outputs so that every oracle fails.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

pub const CONFIG_KEYS: [&str; 15] = [
    "methods",
    "trials",
    "seed",
    "spectrum",
    "alignment",
    "ntrain",
    "k",
    "k_max",
    "gamma_grid",
    "data",
    "response",
    "delimiter",
    "exclude",
    "out",
    "n_test",
];

/// Config values as text lists, keyed by normalized name.
#[derive(Debug, Default)]
pub struct FileConfig(BTreeMap<String, Vec<String>>);

fn scalar_text(key: &str, v: &Value) -> Result<String, Failure> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Failure::usage(format!("config key `{key}`: expected a string or number"))),
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Failure::usage(format!("config is not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(Failure::usage("config must be a JSON object"));
        };
        let mut out = BTreeMap::new();
        for (k, v) in map {
            let key = k.replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(Failure::usage(format!("unknown config key `{k}`")));
            }
            let vals = match &v {
                Value::Array(items) => items.iter().map(|i| scalar_text(&k, i)).collect::<Result<_, _>>()?,
                Value::String(s) => s.split(',').map(str::to_string).collect(),
                other => vec![scalar_text(&k, other)?],
            };
            out.insert(key, vals);
        }
        Ok(FileConfig(out))
    }

    pub fn get(&self, key: &str) -> Option<Vec<String>> {
        self.0.get(key).cloned()
    }
}

/// Flag values first, then the config file.
pub struct Resolver<'a> {
    file: &'a FileConfig,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a FileConfig) -> Self {
        Resolver { file }
    }

    pub fn list(&self, key: &str, flag: &Option<Vec<String>>) -> Option<Vec<String>> {
        flag.clone().or_else(|| self.file.get(key)).map(|v| {
            v.into_iter()
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    pub fn one(&self, key: &str, flag: &Option<String>) -> Result<Option<String>, Failure> {
        match self.list(key, &flag.clone().map(|f| vec![f])) {
            None => Ok(None),
            Some(v) if v.len() == 1 => Ok(v.into_iter().next()),
            Some(v) if v.is_empty() => Err(Failure::usage(format!("`{}` is empty", flag_name(key)))),
            Some(_) => Err(Failure::usage(format!("`{}` takes a single value", flag_name(key)))),
        }
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str, flag: &Option<String>) -> Result<Option<T>, Failure>
    where
        T::Err: std::fmt::Display,
    {
        self.one(key, flag)?.map(|s| parse_value(key, &s)).transpose()
    }
}

pub fn flag_name(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

pub fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>()
        .map_err(|e| Failure::usage(format!("invalid value `{s}` for {}: {e}", flag_name(key))))
}
