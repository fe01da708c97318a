//! Envelope decay exponent of a correlation sequence.
//!
//! The exponent is a liminf over `O(.)` bounds and has no finite
//! certificate. The estimator here takes the maximum of `|R(t)|` over dyadic
//! blocks `[t_min 2^i, t_min 2^{i+1})` and regresses the log of the block
//! maxima on the log of the geometric block centers.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::correlation::{cyclic_correlation, lift, CylinderFunction, Method};
use crate::error::{Error, Result};
use crate::params::ConstructionParams;

/// Minimum number of dyadic blocks in a fit; equivalently `t_max / t_min >= 2^8`.
pub const MIN_BLOCKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub t_lo: u64,
    /// Exclusive.
    pub t_hi: u64,
    pub argmax: u64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Lag attaining each block maximum.
    pub lags: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub fit_range: [u64; 2],
    pub blocks: Vec<Block>,
}

impl DecayFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }

    /// Plot data for every lag covered by a block: `t, log_t, log_abs, block_max`.
    pub fn plot_csv(&self, magnitudes: &[f64]) -> String {
        let mut out = String::from("t,log_t,log_abs,block_max\n");
        for b in &self.blocks {
            for t in b.t_lo..b.t_hi {
                let r = magnitudes[t as usize];
                writeln!(
                    out,
                    "{t},{:.9},{:.9},{:e}",
                    (t as f64).ln(),
                    r.ln(),
                    b.max
                )
                .unwrap();
            }
        }
        out
    }
}

/// Dyadic blocks anchored at `t_min` that fit entirely inside `[t_min, t_max]`.
fn dyadic_blocks(t_min: u64, t_max: u64) -> Vec<(u64, u64)> {
    let mut blocks = Vec::new();
    let mut lo = t_min;
    while let Some(hi) = lo.checked_mul(2) {
        if hi - 1 > t_max {
            break;
        }
        blocks.push((lo, hi));
        lo = hi;
    }
    blocks
}

/// Fits the envelope exponent of `magnitudes[t] = |R(t)|` over `[t_min, t_max]`.
pub fn estimate_kappa(magnitudes: &[f64], t_min: u64, t_max: u64) -> Result<DecayFit> {
    if t_min == 0 {
        return Err(Error::InsufficientRange("t_min must be positive".into()));
    }
    if t_max >= magnitudes.len() as u64 {
        return Err(Error::InsufficientRange(format!(
            "t_max = {t_max} but data only covers t < {}",
            magnitudes.len()
        )));
    }
    let blocks = dyadic_blocks(t_min, t_max);
    if blocks.len() < MIN_BLOCKS {
        return Err(Error::InsufficientRange(format!(
            "[{t_min}, {t_max}] holds {} dyadic blocks, need {MIN_BLOCKS} (t_max / t_min >= 256)",
            blocks.len()
        )));
    }

    let mut fitted = Vec::with_capacity(blocks.len());
    for (lo, hi) in blocks {
        let (argmax, max) = (lo..hi)
            .map(|t| (t, magnitudes[t as usize]))
            .fold((lo, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::InsufficientRange(format!(
                "block [{lo}, {hi}) has no positive finite value"
            )));
        }
        fitted.push(Block { t_lo: lo, t_hi: hi, argmax, max });
    }

    let xs: Vec<f64> = fitted
        .iter()
        .map(|b| (b.t_lo as f64).ln() + 0.5 * std::f64::consts::LN_2)
        .collect();
    let ys: Vec<f64> = fitted.iter().map(|b| b.max.ln()).collect();
    let (slope, intercept, stderr_slope) = least_squares(&xs, &ys);

    Ok(DecayFit {
        lags: fitted.iter().map(|b| b.argmax).collect(),
        slope,
        intercept,
        stderr_slope,
        fit_range: [t_min, t_max],
        blocks: fitted,
    })
}

/// Ordinary least squares `y = slope x + intercept`, with the slope's standard error.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// `|RC_N(t)|` at the top level of the tower for a cylinder function.
pub fn correlation_magnitudes(f: &CylinderFunction, params: &ConstructionParams) -> Result<Vec<f64>> {
    let top = params.top_level();
    let lifted = lift(f, top, params)?;
    Ok(cyclic_correlation(&lifted, Method::Fft, top)
        .values
        .iter()
        .map(|z| z.norm())
        .collect())
}

/// Decay fit of `|RC_N|` over `[t_min, t_max]`; `t_min` must be at least `h_{n0}`.
pub fn fit_construction(
    f: &CylinderFunction,
    params: &ConstructionParams,
    t_min: u64,
    t_max: u64,
) -> Result<(DecayFit, Vec<f64>)> {
    let h0 = params.height(f.base_level())?;
    if t_min < h0 {
        return Err(Error::InsufficientRange(format!(
            "t_min = {t_min} is below the base height {h0}"
        )));
    }
    let magnitudes = correlation_magnitudes(f, params)?;
    let fit = estimate_kappa(&magnitudes, t_min, t_max)?;
    Ok((fit, magnitudes))
}
