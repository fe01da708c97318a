use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use cyclotower_core::correlation::{recurrence_deviation, CylinderFunction, Method};
use cyclotower_core::kappa::{estimate_kappa, fit_construction};
use cyclotower_core::montecarlo::{
    montecarlo_moments_multi, norm_growth, random_ensemble, with_threads, GrowthReport,
    MomentConfig, MomentReport, DEFAULT_TRIALS,
};
use cyclotower_core::params::{build_word, random_params, ConstructionParams};
use cyclotower_core::{cyclic_correlation, full_correlation, lift};

use crate::construction::{ConstructionArgs, Preset};
use crate::Usage;

/// Recurrence checks run on every level up to this height.
const RECURRENCE_MAX_HEIGHT: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fft,
    Naive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fft => Method::Fft,
            MethodArg::Naive => Method::Naive,
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn read_function(path: Option<&Path>, params: &ConstructionParams) -> Result<CylinderFunction> {
    match path {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(CylinderFunction::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        None => Ok(CylinderFunction::balanced(1, params.height(1)? as usize)?),
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    construction: ConstructionArgs,

    #[arg(long, value_enum, default_value = "text")]
    format: Format,

    /// Output prefix; writes PREFIX.{txt,csv,json} and PREFIX.params.json.
    #[arg(long, value_name = "PREFIX")]
    out: Option<PathBuf>,
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let params = args.construction.resolve(Preset::Morse)?;
    let word = build_word(&params, params.top_level())?;
    let rendered = params.alphabet().render(&word);
    let (body, ext) = match args.format {
        Format::Text => (format!("{rendered}\n"), "txt"),
        Format::Csv => (word.to_csv(), "csv"),
        Format::Json => {
            let value = serde_json::json!({ "params": &params, "word": rendered });
            (format!("{}\n", serde_json::to_string_pretty(&value)?), "json")
        }
    };
    match &args.out {
        Some(prefix) => {
            let word_path = prefix.with_extension(ext);
            emit(Some(&word_path), &body)?;
            let params_path = prefix.with_extension("params.json");
            emit(Some(&params_path), &format!("{}\n", params.to_json()))?;
            log::info!("wrote {} and {}", word_path.display(), params_path.display());
            Ok(())
        }
        None => emit(None, &body),
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    construction: ConstructionArgs,

    /// Cylinder function JSON; defaults to the balanced +-1 function on level 1.
    #[arg(long, value_name = "FILE")]
    function: Option<PathBuf>,

    /// Level n of RC_n; defaults to the top level.
    #[arg(long)]
    level: Option<usize>,

    #[arg(long, value_enum, default_value = "fft")]
    method: MethodArg,

    /// Largest lag written out.
    #[arg(long, value_name = "K")]
    lags: Option<usize>,

    /// Estimate R_f(k), |k| <= K, from orbit averages over the first L letters.
    #[arg(long, value_name = "L")]
    prefix: Option<usize>,

    /// Report the largest deviation of the level recurrence on levels with h <= 2^14.
    #[arg(long)]
    check_recurrence: bool,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct CorrelationJson<'a> {
    level: usize,
    values: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_lag: Option<&'a usize>,
}

pub fn correlate(args: CorrelateArgs) -> Result<()> {
    let params = args.construction.resolve(Preset::Morse)?;
    let f = read_function(args.function.as_deref(), &params)?;
    let method = Method::from(args.method);

    if args.check_recurrence {
        let deviation = recurrence_deviation(&f, &params, RECURRENCE_MAX_HEIGHT, method)?;
        eprintln!("recurrence max deviation: {deviation:e}");
    }

    let body = if let Some(prefix_len) = args.prefix {
        let max_lag = args
            .lags
            .ok_or_else(|| Usage("--prefix needs --lags".into()))?;
        let full = full_correlation(&f, &params, max_lag, prefix_len)?;
        match args.format {
            Format::Json => serde_json::to_string_pretty(&serde_json::json!({
                "max_lag": max_lag,
                "prefix_len": prefix_len,
                "values": full.values.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            }))? + "\n",
            _ => full.to_csv(),
        }
    } else {
        let level = args.level.unwrap_or(params.top_level());
        let values = lift(&f, level, &params)?;
        let rc = cyclic_correlation(&values, method, level);
        match args.format {
            Format::Json => {
                let end = args.lags.map_or(rc.len(), |k| (k + 1).min(rc.len()));
                let json = CorrelationJson {
                    level,
                    values: rc.values[..end].iter().map(|z| [z.re, z.im]).collect(),
                    max_lag: args.lags.as_ref(),
                };
                serde_json::to_string_pretty(&json)? + "\n"
            }
            _ => rc.to_csv(args.lags),
        }
    };
    emit(args.out.as_deref(), &body)
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// Experiment manifest JSON: {"f": ..., "h1": 3, "q": [...], "trials": N, "lags": [...], "seed": ...}.
    #[arg(long, value_name = "FILE")]
    manifest: Option<PathBuf>,

    /// Seed word length (default 3).
    #[arg(long)]
    h1: Option<u64>,

    /// Comma-separated q_1, q_2, ... (default 3,5).
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<u64>>,

    /// Cylinder function JSON; defaults to the balanced +-1 function on level 1.
    #[arg(long, value_name = "FILE")]
    function: Option<PathBuf>,

    /// Level n + 1 whose correlations are sampled; defaults to the top.
    #[arg(long)]
    target_level: Option<usize>,

    /// Lags t = s h_n, comma separated; defaults to h_n.
    #[arg(long, value_delimiter = ',')]
    lags: Option<Vec<u64>>,

    /// Number of independent towers (default 400).
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; trial i uses a seed derived from it.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,

    /// Also report level-to-level growth of E ||RC_n||^2.
    #[arg(long)]
    growth: bool,

    /// Refuse towers with an even height.
    #[arg(long)]
    strict: bool,

    /// Report JSON destination; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    f: Option<CylinderFunction>,
    h1: Option<u64>,
    q: Option<Vec<u64>>,
    trials: Option<usize>,
    lags: Option<Vec<u64>>,
    seed: Option<u64>,
    target_level: Option<usize>,
    #[serde(default)]
    growth: bool,
    #[serde(default)]
    strict: bool,
}

#[derive(Serialize)]
struct MonteCarloOutput {
    config: MomentConfig,
    moments: Vec<MomentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    growth: Option<GrowthReport>,
}

pub fn montecarlo(args: MonteCarloArgs) -> Result<()> {
    let manifest: Manifest = match &args.manifest {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Manifest::default(),
    };
    let h1 = args.h1.or(manifest.h1).unwrap_or(3);
    let q = args.q.or(manifest.q).unwrap_or_else(|| vec![3, 5]);
    let trials = args.trials.or(manifest.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(manifest.seed).unwrap_or(0);
    let target_level = args.target_level.or(manifest.target_level).unwrap_or(q.len() + 1);
    if trials == 0 {
        bail!(Usage("trials must be positive".into()));
    }

    // validates the tower shape before any sampling
    let shape = random_params(h1, &q, 0)?;
    let f = match (&args.function, manifest.f) {
        (Some(path), _) => read_function(Some(path), &shape)?,
        (None, Some(f)) => f,
        (None, None) => CylinderFunction::balanced(1, h1 as usize)?,
    };
    let n = target_level
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Usage(format!("target level {target_level} must be at least 2")))?;
    let lags = match args.lags.or(manifest.lags) {
        Some(lags) => lags,
        None => vec![shape.height(n)?],
    };
    let config = MomentConfig {
        h1,
        q: q.clone(),
        target_level,
        trials,
        seed,
        strict: args.strict || manifest.strict,
    };
    let growth = args.growth || manifest.growth;

    let output = with_threads(args.threads, || -> Result<MonteCarloOutput> {
        let moments = montecarlo_moments_multi(&f, &config, &lags)?;
        let growth = if growth {
            Some(norm_growth(&f, &random_ensemble(h1, &q, trials, seed)?)?)
        } else {
            None
        };
        Ok(MonteCarloOutput {
            config: config.clone(),
            moments,
            growth,
        })
    })??;
    for m in &output.moments {
        if !m.passed() {
            log::warn!("moment check outside {}-sigma band at lag {}", cyclotower_core::montecarlo::SIGMAS, m.lag);
        }
    }
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&output)? + "\n"))
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    #[command(flatten)]
    construction: ConstructionArgs,

    /// CSV with a `t` column and an `abs` column (e.g. output of `correlate`).
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Cylinder function JSON for construction fits.
    #[arg(long, value_name = "FILE")]
    function: Option<PathBuf>,

    /// Left end of the fit range; at least h_1 for constructions.
    #[arg(long, default_value_t = 16)]
    t_min: u64,

    /// Defaults to h_N / 4 for constructions, the largest lag for input files.
    #[arg(long)]
    t_max: Option<u64>,

    /// Fit JSON destination.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Plot-ready CSV (t, log t, log |R|, block max).
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

fn read_magnitudes(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Usage(format!("{} has no `{name}` column", path.display())))
    };
    let (t_col, abs_col) = (column("t")?, column("abs")?);
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let t: i64 = record[t_col].trim().parse().with_context(|| format!("bad lag {:?}", &record[t_col]))?;
        let r: f64 = record[abs_col].trim().parse().with_context(|| format!("bad value {:?}", &record[abs_col]))?;
        if t >= 0 {
            pairs.push((t as usize, r));
        }
    }
    let len = pairs.iter().map(|&(t, _)| t + 1).max().unwrap_or(0);
    let mut magnitudes = vec![0.0; len];
    for (t, r) in pairs {
        magnitudes[t] = r.abs();
    }
    Ok(magnitudes)
}

pub fn kappa(args: KappaArgs) -> Result<()> {
    let (fit, magnitudes) = match &args.input {
        Some(path) => {
            if !args.construction.is_empty() {
                bail!(Usage("--input excludes construction options".into()));
            }
            let magnitudes = read_magnitudes(path)?;
            let t_max = args.t_max.unwrap_or((magnitudes.len() as u64).saturating_sub(1));
            (estimate_kappa(&magnitudes, args.t_min, t_max)?, magnitudes)
        }
        None => {
            let params = args.construction.resolve(Preset::OddRandom)?;
            let f = read_function(args.function.as_deref(), &params)?;
            let top = *params.heights().last().expect("at least one level");
            fit_construction(&f, &params, args.t_min, args.t_max.unwrap_or(top / 4))?
        }
    };
    if let Some(plot) = &args.plot {
        emit(Some(plot), &fit.plot_csv(&magnitudes))?;
    }
    emit(args.out.as_deref(), &(fit.to_json() + "\n"))
}
