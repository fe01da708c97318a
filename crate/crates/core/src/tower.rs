//! Inverse limit of cyclic groups `M_n = Z / h_n Z`, truncated at a finite depth.
//!
//! Points are compatible coordinate vectors `(x_1, ..., x_N)` with
//! `project(n, x_{n+1}) = x_n`. The transformation adds one to the top
//! coordinate and re-projects everything below it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ConstructionParams;
use crate::word::Word;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TowerPoint {
    coords: Vec<u64>,
}

impl TowerPoint {
    pub fn new(coords: Vec<u64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn depth(&self) -> usize {
        self.coords.len()
    }

    /// Coordinate `x_n`, 1-based.
    pub fn coord(&self, n: usize) -> Option<u64> {
        n.checked_sub(1).and_then(|i| self.coords.get(i)).copied()
    }
}

/// Result of one application of the truncated transformation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub point: TowerPoint,
    /// Highest level below the top where `(Tx)_n != x_n + 1`, if any. The
    /// truncated map agrees with plain rotation on every level above it.
    pub failed_below: Option<usize>,
}

/// Coding of level-`n0` coordinates by letters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    letters: Vec<u8>,
}

impl Labeling {
    pub fn new(letters: Vec<u8>) -> Self {
        Self { letters }
    }

    /// `y -> y mod alphabet_len`, which is the identity when `h <= alphabet_len`.
    pub fn modular(h: u64, alphabet_len: usize) -> Self {
        Self {
            letters: (0..h).map(|y| (y % alphabet_len as u64) as u8).collect(),
        }
    }

    /// Labels `M_1` by the seed word itself.
    pub fn from_word(word: &Word) -> Self {
        Self {
            letters: word.letters().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn label(&self, y: u64) -> u8 {
        self.letters[y as usize]
    }
}

#[derive(Debug, Clone)]
pub struct Tower {
    params: ConstructionParams,
    heights: Vec<u64>,
}

impl Tower {
    pub fn new(params: ConstructionParams) -> Self {
        let heights = params.heights();
        Self { params, heights }
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    /// Number of coordinates `N`.
    pub fn depth(&self) -> usize {
        self.heights.len()
    }

    pub fn height(&self, n: usize) -> Result<u64> {
        self.params.height(n)
    }

    /// `phi_n : M_{n+1} -> M_n`, `j h_n + k -> k + alpha_{n,j} (mod h_n)`.
    pub fn project(&self, n: usize, x: u64) -> Result<u64> {
        let level = self.params.level(n)?;
        let h = self.heights[n - 1];
        let upper = self.heights[n];
        if x >= upper {
            return Err(Error::CoordinateOutOfRange {
                value: x,
                bound: upper,
            });
        }
        Ok(self.project_unchecked(h, &level.alphas, x))
    }

    #[inline]
    fn project_unchecked(&self, h: u64, alphas: &[u64], x: u64) -> u64 {
        let (j, k) = (x / h, x % h);
        (k + alphas[j as usize]) % h
    }

    /// Composite projection `M_from -> M_to` for `to <= from`.
    pub fn project_down(&self, from: usize, to: usize, x: u64) -> Result<u64> {
        self.params.check_level(from)?;
        self.params.check_level(to)?;
        if to > from {
            return Err(Error::Invalid(format!(
                "cannot project from level {from} up to level {to}"
            )));
        }
        let bound = self.heights[from - 1];
        if x >= bound {
            return Err(Error::CoordinateOutOfRange { value: x, bound });
        }
        let mut y = x;
        for n in (to..from).rev() {
            y = self.project_unchecked(self.heights[n - 1], &self.params.levels()[n - 1].alphas, y);
        }
        Ok(y)
    }

    /// Every preimage of `y` under `phi_n`, one per block `j`.
    pub fn fiber(&self, n: usize, y: u64) -> Result<Vec<u64>> {
        let level = self.params.level(n)?;
        let h = self.heights[n - 1];
        if y >= h {
            return Err(Error::CoordinateOutOfRange { value: y, bound: h });
        }
        Ok(level
            .alphas
            .iter()
            .enumerate()
            .map(|(j, &a)| j as u64 * h + (y + h - a) % h)
            .collect())
    }

    /// A uniform random preimage of `y` under `phi_n`.
    pub fn lift_uniform<R: Rng + ?Sized>(&self, n: usize, y: u64, rng: &mut R) -> Result<u64> {
        let level = self.params.level(n)?;
        let h = self.heights[n - 1];
        if y >= h {
            return Err(Error::CoordinateOutOfRange { value: y, bound: h });
        }
        let j = rng.gen_range(0..level.q);
        Ok(j * h + (y + h - level.alphas[j as usize]) % h)
    }

    /// Samples a depth-`N` point distributed as the inverse-limit measure.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TowerPoint {
        let mut coords = Vec::with_capacity(self.depth());
        let mut y = rng.gen_range(0..self.heights[0]);
        coords.push(y);
        for n in 1..self.depth() {
            y = self.lift_uniform(n, y, rng).expect("in range by construction");
            coords.push(y);
        }
        TowerPoint { coords }
    }

    /// The compatible point whose top coordinate is `x_top`.
    pub fn point_from_top(&self, x_top: u64) -> Result<TowerPoint> {
        let n_top = self.depth();
        let bound = self.heights[n_top - 1];
        if x_top >= bound {
            return Err(Error::CoordinateOutOfRange { value: x_top, bound });
        }
        let mut coords = vec![0; n_top];
        coords[n_top - 1] = x_top;
        for n in (1..n_top).rev() {
            coords[n - 1] = self.project_unchecked(
                self.heights[n - 1],
                &self.params.levels()[n - 1].alphas,
                coords[n],
            );
        }
        Ok(TowerPoint { coords })
    }

    pub fn zero_point(&self) -> TowerPoint {
        TowerPoint {
            coords: vec![0; self.depth()],
        }
    }

    pub fn validate_point(&self, p: &TowerPoint) -> Result<()> {
        if p.depth() != self.depth() {
            return Err(Error::LengthMismatch {
                left: p.depth(),
                right: self.depth(),
            });
        }
        for (i, (&x, &h)) in p.coords.iter().zip(&self.heights).enumerate() {
            if x >= h {
                return Err(Error::CoordinateOutOfRange { value: x, bound: h });
            }
            if i > 0 && self.project(i, x)? != p.coords[i - 1] {
                return Err(Error::IncompatiblePoint { level: i });
            }
        }
        Ok(())
    }

    /// Finite-depth transformation: rotate the top coordinate, re-project down.
    pub fn apply_t(&self, p: &TowerPoint) -> Result<Step> {
        self.validate_point(p)?;
        let n_top = self.depth();
        let top = (p.coords[n_top - 1] + 1) % self.heights[n_top - 1];
        let point = self.point_from_top(top)?;
        let failed_below = (1..n_top)
            .rev()
            .find(|&n| point.coords[n - 1] != (p.coords[n - 1] + 1) % self.heights[n - 1]);
        Ok(Step { point, failed_below })
    }

    /// Number of `x in M_{n+1}` with `phi_n(x + 1) != phi_n(x) + 1`.
    pub fn commute_failures(&self, n: usize) -> Result<u64> {
        self.params.level(n)?;
        let h = self.heights[n - 1];
        let upper = self.heights[n];
        let mut failures = 0;
        for x in 0..upper {
            let lhs = self.project(n, (x + 1) % upper)?;
            let rhs = (self.project(n, x)? + 1) % h;
            failures += u64::from(lhs != rhs);
        }
        Ok(failures)
    }

    /// Letters `label((T^i x)_{n0})` for `i = 0..steps`.
    pub fn orbit_code(
        &self,
        x: &TowerPoint,
        coding_level: usize,
        steps: usize,
        labeling: &Labeling,
    ) -> Result<Word> {
        self.validate_point(x)?;
        if coding_level == 0 || coding_level > x.depth() {
            return Err(Error::LevelOutOfRange {
                requested: coding_level,
                available: x.depth(),
            });
        }
        let h0 = self.heights[coding_level - 1];
        if labeling.len() as u64 != h0 {
            return Err(Error::LengthMismatch {
                left: labeling.len(),
                right: h0 as usize,
            });
        }
        let mut letters = Vec::with_capacity(steps);
        let mut current = x.clone();
        for i in 0..steps {
            letters.push(labeling.label(current.coords[coding_level - 1]));
            if i + 1 < steps {
                current = self.apply_t(&current)?.point;
            }
        }
        Ok(Word::from_indices(letters))
    }

    /// Orbit code with the default labeling of level `n0`.
    pub fn default_labeling(&self, coding_level: usize) -> Result<Labeling> {
        Ok(Labeling::modular(
            self.height(coding_level)?,
            self.params.alphabet().len(),
        ))
    }
}
