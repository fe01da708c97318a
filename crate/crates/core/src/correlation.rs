//! Cylinder functions on the tower and their cyclic correlations.
//!
//! A function on `M_{n0}` lifts to every higher level by composing with the
//! projections; `RC_n(t) = (1/h_n) sum_j f_n(j + t) conj(f_n(j))` with the
//! index taken mod `h_n`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ConstructionParams, LevelParams};
use crate::word::{rotate_concat, MAX_WORD_LEN};

/// Absolute tolerance on `|sum f|` relative to `max(1, sum |f|)`.
pub const ZERO_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionFile", into = "FunctionFile")]
pub struct CylinderFunction {
    base_level: usize,
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct FunctionFile {
    base_level: usize,
    values: Vec<[f64; 2]>,
}

impl TryFrom<FunctionFile> for CylinderFunction {
    type Error = Error;

    fn try_from(file: FunctionFile) -> Result<Self> {
        let values = file
            .values
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        CylinderFunction::new(file.base_level, values)
    }
}

impl From<CylinderFunction> for FunctionFile {
    fn from(f: CylinderFunction) -> Self {
        FunctionFile {
            base_level: f.base_level,
            values: f.values.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl CylinderFunction {
    pub fn new(base_level: usize, values: Vec<Complex64>) -> Result<Self> {
        if base_level == 0 {
            return Err(Error::Invalid("base level is 1-based".into()));
        }
        if values.is_empty() {
            return Err(Error::Invalid("cylinder function has no values".into()));
        }
        let sum: Complex64 = values.iter().sum();
        let scale: f64 = values.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
        if sum.norm() > ZERO_MEAN_TOL * scale {
            return Err(Error::NotZeroMean(sum.norm()));
        }
        Ok(Self { base_level, values })
    }

    pub fn from_real(base_level: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            base_level,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Alternating `+1, -1, ...` on `Z / h`, minus its mean. Exactly `+-1` when `h` is even.
    pub fn balanced(base_level: usize, h: usize) -> Result<Self> {
        let raw: Vec<f64> = (0..h).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let mean = raw.iter().sum::<f64>() / h.max(1) as f64;
        let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
        Self::from_real(base_level, &centered)
    }

    /// The zero function.
    pub fn zero(base_level: usize, h: usize) -> Result<Self> {
        Self::new(base_level, vec![Complex64::new(0.0, 0.0); h])
    }

    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `||f||^2` under the normalized counting measure.
    pub fn norm_sq(&self) -> f64 {
        mean_norm_sq(&self.values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("function serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))
    }
}

pub fn mean_norm_sq(values: &[Complex64]) -> f64 {
    values.iter().map(Complex64::norm_sqr).sum::<f64>() / values.len() as f64
}

/// `f_n = f_{n0} o phi_{n0} o ... o phi_{n-1}` as a table on `M_n`.
pub fn lift(f: &CylinderFunction, to_level: usize, params: &ConstructionParams) -> Result<Vec<Complex64>> {
    let base = f.base_level();
    params.check_level(base)?;
    params.check_level(to_level)?;
    if to_level < base {
        return Err(Error::Invalid(format!(
            "cannot lift from level {base} down to level {to_level}"
        )));
    }
    let heights = params.heights();
    if heights[base - 1] != f.values().len() as u64 {
        return Err(Error::LengthMismatch {
            left: f.values().len(),
            right: heights[base - 1] as usize,
        });
    }
    if heights[to_level - 1] > MAX_WORD_LEN {
        return Err(Error::MemoryBudget {
            len: heights[to_level - 1],
            budget: MAX_WORD_LEN,
        });
    }
    params.levels()[base - 1..to_level - 1]
        .iter()
        .try_fold(f.values().to_vec(), |values, level| rotate_concat(&values, &level.alphas))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Fft,
    Naive,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft" => Ok(Method::Fft),
            "naive" => Ok(Method::Naive),
            other => Err(Error::Invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// `RC_n(t)` for `t in [0, h_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSequence {
    pub level: usize,
    pub values: Vec<Complex64>,
}

impl CorrelationSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `RC(t mod h)` for any integer `t`.
    pub fn at(&self, t: i64) -> Complex64 {
        self.values[t.rem_euclid(self.values.len() as i64) as usize]
    }

    /// `||RC||^2 = sum_t |RC(t)|^2` over one period.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(Complex64::norm_sqr).sum()
    }

    /// Largest `|RC(h - t) - conj RC(t)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let h = self.values.len();
        (1..h)
            .map(|t| (self.values[h - t] - self.values[t].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Discrete Fourier transform of the sequence; real and non-negative up
    /// to rounding, since it equals `|F(k)|^2 / h`.
    pub fn power_spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    /// CSV with columns `t, re, im, abs` for `t <= max_lag`.
    pub fn to_csv(&self, max_lag: Option<usize>) -> String {
        let end = max_lag.map_or(self.values.len(), |k| (k + 1).min(self.values.len()));
        let mut out = String::from("t,re,im,abs\n");
        for (t, z) in self.values[..end].iter().enumerate() {
            writeln!(out, "{t},{:e},{:e},{:e}", z.re, z.im, z.norm()).unwrap();
        }
        out
    }
}

/// Cyclic autocorrelation of a table on `Z / h`.
pub fn cyclic_correlation(values: &[Complex64], method: Method, level: usize) -> CorrelationSequence {
    let values = match method {
        Method::Fft => cyclic_correlation_fft(values),
        Method::Naive => cyclic_correlation_naive(values),
    };
    CorrelationSequence { level, values }
}

fn cyclic_correlation_naive(values: &[Complex64]) -> Vec<Complex64> {
    (0..values.len()).map(|t| correlation_at(values, t)).collect()
}

fn cyclic_correlation_fft(values: &[Complex64]) -> Vec<Complex64> {
    let h = values.len();
    if h == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(h).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(h).process(&mut buf);
    let scale = 1.0 / (h as f64 * h as f64);
    buf.iter().map(|z| z * scale).collect()
}

/// `RC(t)` at a single lag by direct summation.
pub fn correlation_at(values: &[Complex64], t: usize) -> Complex64 {
    let h = values.len();
    let t = t % h;
    let (head, tail) = values.split_at(t);
    // f(j + t) for j = 0..h is tail ++ head
    let sum: Complex64 = tail
        .iter()
        .chain(head)
        .zip(values)
        .map(|(a, b)| a * b.conj())
        .sum();
    sum / h as f64
}

/// Right-hand side of the recurrence at `t = s h_n`:
/// `(1/q) sum_k RC_n(alpha_{(k+s) mod q} - alpha_k)`.
pub fn recurrence_rhs(rc: &CorrelationSequence, level: &LevelParams, s: u64) -> Result<Complex64> {
    let q = level.alphas.len() as u64;
    if s == 0 || s >= q {
        return Err(Error::InvalidLag(format!("s = {s} not in [1, {q})")));
    }
    let h = rc.len() as i64;
    let sum: Complex64 = (0..q)
        .map(|k| {
            let a_next = level.alphas[((k + s) % q) as usize] as i64;
            let a = level.alphas[k as usize] as i64;
            rc.values[(a_next - a).rem_euclid(h) as usize]
        })
        .sum();
    Ok(sum / q as f64)
}

/// Largest `|recurrence_rhs - RC_{n+1}(s h_n)| / RC_n(0)` over every level
/// `n` with `h_{n+1} <= max_height` and every `s in [1, q_n)`.
pub fn recurrence_deviation(
    f: &CylinderFunction,
    params: &ConstructionParams,
    max_height: u64,
    method: Method,
) -> Result<f64> {
    let heights = params.heights();
    let mut worst = 0.0f64;
    let mut current = f.values().to_vec();
    let mut rc = cyclic_correlation(&current, method, f.base_level());
    for n in f.base_level()..params.top_level() {
        if heights[n] > max_height {
            break;
        }
        let level = params.level(n)?;
        let next = rotate_concat(&current, &level.alphas)?;
        let rc_next = cyclic_correlation(&next, method, n + 1);
        let scale = rc.values[0].re.max(f64::MIN_POSITIVE);
        let h = heights[n - 1];
        for s in 1..level.q {
            let rhs = recurrence_rhs(&rc, level, s)?;
            let direct = rc_next.values[(s * h) as usize];
            worst = worst.max((rhs - direct).norm() / scale);
        }
        current = next;
        rc = rc_next;
    }
    Ok(worst)
}

/// Autocorrelation along the coded orbit, with the cyclic surrogate used for it.
#[derive(Debug, Clone)]
pub struct FullCorrelation {
    /// `R_f(k)` for `k = -K..=K`; entry `K + k` holds lag `k`.
    pub values: Vec<Complex64>,
    pub max_lag: usize,
    pub prefix_len: usize,
    /// `RC_n` at the first level with `h_n >= prefix_len`.
    pub cyclic: CorrelationSequence,
}

impl FullCorrelation {
    pub fn at(&self, k: i64) -> Complex64 {
        self.values[(self.max_lag as i64 + k) as usize]
    }

    /// CSV with columns `t, re, im, abs` for `t = -K..=K`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im,abs\n");
        for (i, z) in self.values.iter().enumerate() {
            let t = i as i64 - self.max_lag as i64;
            writeln!(out, "{t},{:e},{:e},{:e}", z.re, z.im, z.norm()).unwrap();
        }
        out
    }
}

/// Birkhoff averages `(1/(L-k)) sum_{i < L-k} f(i+k) conj f(i)` along the
/// first `L` letters of the infinite coded orbit.
pub fn full_correlation(
    f: &CylinderFunction,
    params: &ConstructionParams,
    max_lag: usize,
    prefix_len: usize,
) -> Result<FullCorrelation> {
    if max_lag >= prefix_len {
        return Err(Error::InvalidLag(format!(
            "max lag {max_lag} must be smaller than prefix length {prefix_len}"
        )));
    }
    let heights = params.heights();
    let level = heights
        .iter()
        .position(|&h| h >= prefix_len as u64)
        .map(|i| i + 1)
        .filter(|&n| n >= f.base_level())
        .ok_or_else(|| {
            Error::InvalidLag(format!(
                "prefix length {prefix_len} exceeds the longest word ({})",
                heights.last().copied().unwrap_or(0)
            ))
        })?;
    let lifted = lift(f, level, params)?;
    let prefix = &lifted[..prefix_len];
    let linear = linear_autocorrelation(prefix);
    let mut values = Vec::with_capacity(2 * max_lag + 1);
    let averaged: Vec<Complex64> = (0..=max_lag)
        .map(|k| linear[k] / (prefix_len - k) as f64)
        .collect();
    values.extend(averaged[1..].iter().rev().map(|v| v.conj()));
    values.extend_from_slice(&averaged);
    Ok(FullCorrelation {
        values,
        max_lag,
        prefix_len,
        cyclic: cyclic_correlation(&lifted, Method::Fft, level),
    })
}

/// `sum_{i < L-k} x(i+k) conj x(i)` for `k in [0, L)`, via zero padding.
fn linear_autocorrelation(x: &[Complex64]) -> Vec<Complex64> {
    let len = x.len();
    let padded = 2 * len;
    let mut buf: Vec<Complex64> = x.to_vec();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(padded).process(&mut buf);
    buf.truncate(len);
    let scale = 1.0 / padded as f64;
    buf.iter().map(|z| z * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{presets, random_params, zero_params};
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_zero_mean(values: Vec<(f64, f64)>) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = values.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let mean = v.iter().sum::<Complex64>() / v.len() as f64;
        v.iter_mut().for_each(|z| *z -= mean);
        v
    }

    #[test]
    fn two_point_correlation() {
        let rc = cyclic_correlation(&[c(1.0), c(-1.0)], Method::Naive, 1);
        assert_eq!(rc.values, vec![c(1.0), c(-1.0)]);
        let rc = cyclic_correlation(&[c(1.0), c(-1.0)], Method::Fft, 1);
        assert!((rc.values[0] - 1.0).norm() < 1e-15 && (rc.values[1] + 1.0).norm() < 1e-15);
        let zero = cyclic_correlation(&[c(0.0); 5], Method::Fft, 1);
        assert!(zero.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn zero_mean_is_enforced() {
        assert!(matches!(
            CylinderFunction::from_real(1, &[1.0, 1.0]),
            Err(Error::NotZeroMean(_))
        ));
        let f = CylinderFunction::balanced(1, 3).unwrap();
        let expected = [2.0 / 3.0, -4.0 / 3.0, 2.0 / 3.0];
        for (z, e) in f.values().iter().zip(expected) {
            assert!((z.re - e).abs() < 1e-15);
        }
        assert_eq!(
            CylinderFunction::balanced(1, 2).unwrap().values(),
            &[c(1.0), c(-1.0)]
        );
    }

    #[test]
    fn function_json_format() {
        let f = CylinderFunction::new(1, vec![Complex64::new(1.0, 0.5), Complex64::new(-1.0, -0.5)]).unwrap();
        assert_eq!(f.to_json(), r#"{"base_level":1,"values":[[1.0,0.5],[-1.0,-0.5]]}"#);
        assert_eq!(CylinderFunction::from_json(&f.to_json()).unwrap(), f);
        assert!(CylinderFunction::from_json(r#"{"base_level":1,"values":[[1,0],[1,0]]}"#).is_err());
    }

    #[test]
    fn lift_identity_norm_and_mean() {
        let p = random_params(3, &[5, 3, 7], 4).unwrap();
        let f = CylinderFunction::balanced(1, 3).unwrap();
        assert_eq!(lift(&f, 1, &p).unwrap(), f.values());
        for n in 1..=p.top_level() {
            let lifted = lift(&f, n, &p).unwrap();
            assert_eq!(lifted.len() as u64, p.height(n).unwrap());
            assert!((mean_norm_sq(&lifted) - f.norm_sq()).abs() < 1e-12);
            assert!(lifted.iter().sum::<Complex64>().norm() < 1e-10);
        }
        let g = CylinderFunction::balanced(2, 15).unwrap();
        assert!(lift(&g, 1, &p).is_err());
    }

    #[test]
    fn lift_matches_composed_projections() {
        let p = random_params(3, &[5, 3], 8).unwrap();
        let tower = crate::tower::Tower::new(p.clone());
        let f = CylinderFunction::from_real(1, &[1.0, 2.0, -3.0]).unwrap();
        let lifted = lift(&f, 3, &p).unwrap();
        for (x, z) in lifted.iter().enumerate() {
            let y = tower.project_down(3, 1, x as u64).unwrap();
            assert_eq!(*z, f.values()[y as usize]);
        }
    }

    #[test]
    fn recurrence_examples() {
        // Morse level 1: f = (1, -1), alphas (0, 1)
        let morse = presets::morse(2).unwrap();
        let rc = cyclic_correlation(&[c(1.0), c(-1.0)], Method::Naive, 1);
        let rhs = recurrence_rhs(&rc, morse.level(1).unwrap(), 1).unwrap();
        assert_eq!(rhs, c(-1.0));
        assert!(recurrence_rhs(&rc, morse.level(1).unwrap(), 2).is_err());
        assert!(recurrence_rhs(&rc, morse.level(1).unwrap(), 0).is_err());

        // equal shifts collapse every term to RC_n(0)
        let level = LevelParams::new(vec![0, 0, 0, 0]);
        let f = CylinderFunction::from_real(1, &[1.0, 2.0, -3.0]).unwrap();
        let rc = cyclic_correlation(f.values(), Method::Fft, 1);
        for s in 1..4 {
            let rhs = recurrence_rhs(&rc, &level, s).unwrap();
            assert!((rhs - f.norm_sq()).norm() < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_direct_correlation() {
        for seed in 0..10 {
            let p = random_params(5, &[4, 7, 3, 5], seed).unwrap();
            let f = CylinderFunction::balanced(1, 5).unwrap();
            let dev = recurrence_deviation(&f, &p, 1 << 14, Method::Fft).unwrap();
            assert!(dev <= 1e-10, "seed {seed}: {dev}");
        }
    }

    #[test]
    fn all_zero_shifts_replicate_correlations() {
        let p = zero_params(5, &[3, 4]).unwrap();
        let f = CylinderFunction::from_real(1, &[1.0, -2.0, 0.5, 0.25, 0.25]).unwrap();
        let rc1 = cyclic_correlation(f.values(), Method::Fft, 1);
        let rc3 = cyclic_correlation(&lift(&f, 3, &p).unwrap(), Method::Fft, 3);
        for t in 0..60 {
            assert!((rc3.values[t] - rc1.values[t % 5]).norm() < 1e-12);
        }
        assert!((rc3.norm_sq() - 12.0 * rc1.norm_sq()).abs() < 1e-10);
    }

    #[test]
    fn birkhoff_average_versus_cyclic_surrogate() {
        let params = presets::morse(12).unwrap();
        let f = CylinderFunction::balanced(1, 2).unwrap();
        let h = params.height(12).unwrap() as usize;
        let full = full_correlation(&f, &params, 64, h).unwrap();
        assert_eq!(full.cyclic.level, 12);
        assert!((full.at(0) - f.norm_sq()).norm() < 1e-12);
        for k in 1..=64i64 {
            assert!((full.at(-k) - full.at(k).conj()).norm() < 1e-12);
            let bound = 2.0 * f.norm_sq() * (k as f64 + 2.0) / h as f64;
            let diff = (full.at(k) - full.cyclic.at(k)).norm();
            assert!(diff <= bound, "lag {k}: {diff} > {bound}");
        }
        assert!(full_correlation(&f, &params, 10, 10).is_err());
        assert!(full_correlation(&f, &params, 10, h + 1).is_err());
    }

    #[test]
    fn birkhoff_average_matches_direct_sum() {
        let params = random_params(3, &[5, 3], 2).unwrap();
        let f = CylinderFunction::balanced(1, 3).unwrap();
        let full = full_correlation(&f, &params, 10, 40).unwrap();
        let lifted = lift(&f, 3, &params).unwrap();
        for k in 0..=10usize {
            let direct: Complex64 = (0..40 - k).map(|i| lifted[i + k] * lifted[i].conj()).sum::<Complex64>()
                / (40 - k) as f64;
            assert!((full.at(k as i64) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_columns() {
        let rc = cyclic_correlation(&[c(1.0), c(-1.0)], Method::Naive, 1);
        let csv = rc.to_csv(None);
        assert!(csv.starts_with("t,re,im,abs\n0,1e0,0e0,1e0\n1,-1e0,0e0,1e0"));
        assert_eq!(rc.to_csv(Some(0)).lines().count(), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn correlation_invariants(raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..200)) {
            let values = random_zero_mean(raw);
            let rc = cyclic_correlation(&values, Method::Fft, 1);
            let naive = cyclic_correlation(&values, Method::Naive, 1);
            let scale = rc.values[0].re.max(1e-300);
            let norm = mean_norm_sq(&values);

            prop_assert!((rc.values[0].re - norm).abs() <= 1e-10 * norm.max(1e-300) + 1e-15);
            prop_assert!(rc.values[0].im.abs() <= 1e-12 * scale + 1e-15);
            prop_assert!(rc.hermitian_defect() <= 1e-10 * scale + 1e-15);
            for z in &rc.values {
                prop_assert!(z.norm() <= rc.values[0].re + 1e-10 * scale + 1e-15);
            }
            // zero-sum: sum_t RC(t) = h |mean|^2 = 0
            let total: Complex64 = rc.values.iter().sum();
            prop_assert!(total.norm() <= 1e-10 * scale * values.len() as f64 + 1e-14);
            for z in rc.power_spectrum() {
                prop_assert!(z.re >= -1e-10 * scale);
                prop_assert!(z.im.abs() <= 1e-10 * scale * values.len() as f64 + 1e-14);
            }
            for (a, b) in rc.values.iter().zip(&naive.values) {
                prop_assert!((a - b).norm() <= 1e-10 * scale + 1e-15);
            }
        }

        #[test]
        fn lifted_norm_is_preserved(
            h1 in 2u64..6,
            qs in prop::collection::vec(2u64..5, 1..4),
            seed in any::<u64>(),
            raw in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let p = random_params(h1, &qs, seed).unwrap();
            let mut vals: Vec<f64> = raw[..h1 as usize].to_vec();
            let mean = vals.iter().sum::<f64>() / h1 as f64;
            vals.iter_mut().for_each(|v| *v -= mean);
            let f = CylinderFunction::from_real(1, &vals).unwrap();
            let top = lift(&f, p.top_level(), &p).unwrap();
            let rc = cyclic_correlation(&top, Method::Fft, p.top_level());
            prop_assert!((mean_norm_sq(&top) - f.norm_sq()).abs() <= 1e-12);
            prop_assert!((rc.values[0].re - f.norm_sq()).abs() <= 1e-10 * f.norm_sq().max(1e-300) + 1e-15);
        }
    }
}
