use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use cyclotower_core::params::{presets, random_params, ConstructionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// h1 = 2, q = 2, shifts (0, h_n / 2)
    Morse,
    /// h1 = 3, odd q, uniform random shifts
    OddRandom,
}

/// Where the construction parameters come from.
#[derive(Debug, Clone, Args)]
pub struct ConstructionArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// Length of the seed word.
    #[arg(long)]
    pub h1: Option<u64>,

    /// Comma-separated q_1, q_2, ...
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<u64>>,

    /// Fully resolved parameters (JSON) including the shifts.
    #[arg(long, value_name = "FILE")]
    pub alphas_file: Option<PathBuf>,

    /// Seed for randomly drawn shifts.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Index of the deepest word w_N.
    #[arg(long)]
    pub levels: Option<usize>,
}

impl ConstructionArgs {
    pub fn is_empty(&self) -> bool {
        self.preset.is_none() && self.h1.is_none() && self.q.is_none() && self.alphas_file.is_none()
    }

    /// Resolves to concrete parameters, falling back to `default` when nothing is given.
    pub fn resolve(&self, default: Preset) -> Result<ConstructionParams> {
        let seed = self.seed.unwrap_or(0);
        let params = if let Some(path) = &self.alphas_file {
            if self.preset.is_some() || self.h1.is_some() || self.q.is_some() {
                bail!(crate::Usage("--alphas-file excludes --preset, --h1 and --q".into()));
            }
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ConstructionParams::from_json(&text)?
        } else {
            match (self.preset, &self.q) {
                (Some(Preset::Morse), Some(_)) => {
                    bail!(crate::Usage("the morse preset fixes q = 2".into()))
                }
                (Some(Preset::Morse), None) => presets::morse(self.levels.unwrap_or(10))?,
                (Some(Preset::OddRandom), Some(q)) => {
                    random_params(self.h1.unwrap_or(presets::ODD_RANDOM_H1), q, seed)?
                }
                (Some(Preset::OddRandom), None) => {
                    let levels = self.levels.unwrap_or(presets::ODD_RANDOM_Q.len() + 1);
                    random_params(
                        self.h1.unwrap_or(presets::ODD_RANDOM_H1),
                        &presets::odd_random_q(levels)?,
                        seed,
                    )?
                }
                (None, Some(q)) => {
                    let h1 = self
                        .h1
                        .ok_or_else(|| crate::Usage("--q needs --h1 or --preset".into()))?;
                    random_params(h1, q, seed)?
                }
                (None, None) if self.h1.is_some() => {
                    bail!(crate::Usage("--h1 needs --q".into()))
                }
                (None, None) => {
                    return ConstructionArgs {
                        preset: Some(default),
                        ..self.clone()
                    }
                    .resolve(default)
                }
            }
        };
        for w in params.warnings() {
            log::warn!("{w}");
        }
        match self.levels {
            Some(n) => Ok(params.truncated(n)?),
            None => Ok(params),
        }
    }
}
