//! Measure-preserving transformations built from random cyclic shifts.
//!
//! The same parameters `(h_1, q_n, alpha_{n,j})` drive two constructions:
//!
//! - [`word`] / [`params`]: words `w_{n+1}` made of `q_n` rotated copies of `w_n`;
//! - [`tower`]: the inverse limit of `Z / h_n` under the projections
//!   `j h_n + k -> k + alpha_{n,j}`, with the transformation adding one at the top.
//!
//! [`correlation`] computes cyclic correlations of lifted cylinder functions
//! and the exact recurrence relating consecutive levels, [`montecarlo`] checks
//! their moments over random parameters, and [`kappa`] estimates the envelope
//! decay exponent.

pub mod correlation;
pub mod error;
pub mod kappa;
pub mod montecarlo;
pub mod params;
pub mod tower;
pub mod word;

pub use correlation::{
    cyclic_correlation, full_correlation, lift, recurrence_rhs, CorrelationSequence,
    CylinderFunction, FullCorrelation, Method,
};
pub use error::{Error, Result};
pub use kappa::{estimate_kappa, DecayFit};
pub use montecarlo::{
    montecarlo_moments, montecarlo_moments_multi, norm_growth, GrowthReport, MomentConfig,
    MomentReport,
};
pub use num_complex::Complex64;
pub use params::{build_word, presets, random_params, ConstructionParams, LevelParams};
pub use tower::{Labeling, Tower, TowerPoint};
pub use word::{build_level, cyclic_shift, dbar_distance, subword_frequency, Alphabet, Word};
