//! Monte Carlo checks of the first and second moments of random cyclic
//! correlations, taken over i.i.d. uniform shift parameters.
//!
//! Trial `i` draws its parameters from [`trial_seed`]`(seed, i)`, results are
//! collected in trial order and reduced sequentially, so reports are
//! bit-identical regardless of thread count.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{correlation_at, cyclic_correlation, lift, CylinderFunction, Method};
use crate::error::{Error, Result};
use crate::params::{random_params, ConstructionParams};
use crate::word::rotate_concat;

pub const DEFAULT_TRIALS: usize = 400;
/// Acceptance band, in standard errors.
pub const SIGMAS: f64 = 4.0;
/// Upper bound on the level-to-level growth of `E ||RC_n||^2`.
pub const GROWTH_BOUND: f64 = 2.0;

/// SplitMix64 finalizer over `(seed, index)`.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `op` on a pool capped at `threads`, or the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(op()),
        Some(0) => Err(Error::Invalid("thread count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(e.to_string()))?;
            Ok(pool.install(op))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub h1: u64,
    pub q: Vec<u64>,
    /// Level `n + 1` whose correlations are sampled.
    pub target_level: usize,
    pub trials: usize,
    pub seed: u64,
    /// Refuse even towers instead of reporting their discrepancy.
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub level: usize,
    pub lag: u64,
    pub trials: usize,
    /// Sample mean of `RC_{n+1}(t)`.
    pub mean_rc: Complex64,
    /// Standard error of `mean_rc`.
    pub stderr: f64,
    /// Sample mean of `|RC_{n+1}(t)|^2`.
    pub mean_sq: f64,
    /// `h_{n+1}^{-1}` times the sample mean of `||RC_n||^2`.
    pub predicted_sq: f64,
    /// Standard error of the paired difference `|RC_{n+1}(t)|^2 - ||RC_n||^2 / h_{n+1}`.
    pub stderr_sq: f64,
    pub mean_norm_sq_prev: f64,
    pub odd_tower: bool,
    /// `mean_sq - predicted_sq`.
    pub discrepancy: f64,
    pub mean_ok: bool,
    pub sq_ok: bool,
}

impl MomentReport {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.sq_ok
    }
}

struct TrialSample {
    values: Vec<Complex64>,
    norm_prev: f64,
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Samples `RC_{n+1}(t)` at every requested lag over shared parameter draws.
pub fn montecarlo_moments_multi(
    f: &CylinderFunction,
    config: &MomentConfig,
    lags: &[u64],
) -> Result<Vec<MomentReport>> {
    if config.trials < 2 {
        return Err(Error::Invalid(format!(
            "at least 2 trials are needed, got {}",
            config.trials
        )));
    }
    let target = config.target_level;
    let base = f.base_level();
    if target <= base || target > config.q.len() + 1 {
        return Err(Error::InvalidLag(format!(
            "target level {target} must lie in [{}, {}]",
            base + 1,
            config.q.len() + 1
        )));
    }
    let q_used = &config.q[..target - 1];
    // validates h1 and q once, and fixes the heights shared by all trials
    let probe = random_params(config.h1, q_used, 0)?;
    let heights = probe.heights();
    if heights[base - 1] != f.values().len() as u64 {
        return Err(Error::LengthMismatch {
            left: f.values().len(),
            right: heights[base - 1] as usize,
        });
    }
    let n = target - 1;
    let (h_n, h_next, q_n) = (heights[n - 1], heights[n], q_used[n - 1]);
    for &t in lags {
        if t == 0 || t % h_n != 0 || t / h_n >= q_n {
            return Err(Error::InvalidLag(format!(
                "lag {t} is not s * h_{n} = s * {h_n} with 1 <= s < {q_n}"
            )));
        }
    }
    let odd_tower = heights.iter().all(|h| h % 2 == 1);
    if config.strict && !odd_tower {
        return Err(Error::InvalidParams(
            "strict moment identities need every h_m odd".into(),
        ));
    }

    let samples: Vec<TrialSample> = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| -> Result<TrialSample> {
            let params = random_params(config.h1, q_used, trial_seed(config.seed, i))?;
            let f_n = lift(f, n, &params)?;
            let norm_prev = cyclic_correlation(&f_n, Method::Fft, n).norm_sq();
            let f_next = rotate_concat(&f_n, &params.level(n)?.alphas)?;
            let values = lags
                .iter()
                .map(|&t| correlation_at(&f_next, t as usize))
                .collect();
            Ok(TrialSample { values, norm_prev })
        })
        .collect::<Result<_>>()?;

    let trials = samples.len() as f64;
    let mean_norm_prev = samples.iter().map(|s| s.norm_prev).sum::<f64>() / trials;
    let reports = lags
        .iter()
        .enumerate()
        .map(|(li, &lag)| {
            let mean_rc = samples.iter().map(|s| s.values[li]).sum::<Complex64>() / trials;
            let var = samples
                .iter()
                .map(|s| (s.values[li] - mean_rc).norm_sqr())
                .sum::<f64>()
                / (trials - 1.0);
            let stderr = (var / trials).sqrt();
            let mean_sq = samples.iter().map(|s| s.values[li].norm_sqr()).sum::<f64>() / trials;
            let predicted_sq = mean_norm_prev / h_next as f64;
            let (_, stderr_sq) = mean_and_stderr(
                samples
                    .iter()
                    .map(|s| s.values[li].norm_sqr() - s.norm_prev / h_next as f64),
            );
            let discrepancy = mean_sq - predicted_sq;
            MomentReport {
                level: target,
                lag,
                trials: config.trials,
                mean_rc,
                stderr,
                mean_sq,
                predicted_sq,
                stderr_sq,
                mean_norm_sq_prev: mean_norm_prev,
                odd_tower,
                discrepancy,
                mean_ok: mean_rc.norm() <= SIGMAS * stderr,
                sq_ok: discrepancy.abs() <= SIGMAS * stderr_sq,
            }
        })
        .collect();
    Ok(reports)
}

/// Moments of `RC_{n+1}(t)` at a single lag `t = s h_n`.
pub fn montecarlo_moments(f: &CylinderFunction, config: &MomentConfig, lag: u64) -> Result<MomentReport> {
    Ok(montecarlo_moments_multi(f, config, &[lag])?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelNorm {
    pub level: usize,
    pub height: u64,
    pub mean_norm_sq: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRatio {
    pub from_level: usize,
    /// `mean ||RC_{n+1}||^2 / mean ||RC_n||^2`.
    pub ratio: f64,
    /// Delta-method standard error of the ratio of paired means.
    pub stderr: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub trials: usize,
    pub levels: Vec<LevelNorm>,
    pub ratios: Vec<GrowthRatio>,
}

impl GrowthReport {
    pub fn passed(&self) -> bool {
        self.ratios.iter().all(|r| r.within_bound)
    }
}

/// `||RC_n||^2` from the base level of `f` to the top of every ensemble member.
pub fn norm_growth(f: &CylinderFunction, ensemble: &[ConstructionParams]) -> Result<GrowthReport> {
    if ensemble.len() < 2 {
        return Err(Error::Invalid(format!(
            "ensemble needs at least 2 members, got {}",
            ensemble.len()
        )));
    }
    let heights = ensemble[0].heights();
    if ensemble.iter().any(|p| p.heights() != heights) {
        return Err(Error::InvalidParams("ensemble members have different towers".into()));
    }
    let base = f.base_level();
    let top = ensemble[0].top_level();

    let norms: Vec<Vec<f64>> = ensemble
        .par_iter()
        .map(|params| -> Result<Vec<f64>> {
            let mut values = lift(f, base, params)?;
            let mut out = Vec::with_capacity(top - base + 1);
            for n in base..=top {
                if n > base {
                    values = rotate_concat(&values, &params.level(n - 1)?.alphas)?;
                }
                out.push(cyclic_correlation(&values, Method::Fft, n).norm_sq());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let trials = norms.len() as f64;
    let levels: Vec<LevelNorm> = (base..=top)
        .map(|n| {
            let i = n - base;
            let (mean, stderr) = mean_and_stderr(norms.iter().map(|v| v[i]));
            LevelNorm {
                level: n,
                height: heights[n - 1],
                mean_norm_sq: mean,
                stderr: if stderr.is_nan() { 0.0 } else { stderr },
            }
        })
        .collect();
    let ratios = levels
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let (a, b) = (pair[0].mean_norm_sq, pair[1].mean_norm_sq);
            let ratio = b / a;
            let resid_var = norms
                .iter()
                .map(|v| (v[i + 1] - ratio * v[i]).powi(2))
                .sum::<f64>()
                / (trials - 1.0);
            let stderr = (resid_var / trials).sqrt() / a;
            GrowthRatio {
                from_level: pair[0].level,
                ratio,
                stderr,
                within_bound: ratio <= GROWTH_BOUND + SIGMAS * stderr,
            }
        })
        .collect();
    Ok(GrowthReport {
        trials: ensemble.len(),
        levels,
        ratios,
    })
}

/// `trials` independent uniform parameter draws for one tower shape.
pub fn random_ensemble(h1: u64, q: &[u64], trials: usize, seed: u64) -> Result<Vec<ConstructionParams>> {
    (0..trials as u64)
        .map(|i| random_params(h1, q, trial_seed(seed, i)))
        .collect()
}
