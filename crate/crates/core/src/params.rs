//! Construction parameters shared by the symbolic and algebraic towers.
//!
//! Level `n` (1-based) carries `q_n` shifts `alpha_{n,0..q_n}` that glue
//! `q_n` rotated copies of `w_n` into `w_{n+1}`; `h_{n+1} = q_n h_n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{build_level, Alphabet, Word, MAX_WORD_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelParams {
    pub q: u64,
    pub alphas: Vec<u64>,
}

impl LevelParams {
    pub fn new(alphas: Vec<u64>) -> Self {
        Self {
            q: alphas.len() as u64,
            alphas,
        }
    }

    fn validate(&self, n: usize, h: u64) -> Result<()> {
        if self.q < 2 {
            return Err(Error::InvalidParams(format!(
                "level {n}: q must be at least 2, got {}",
                self.q
            )));
        }
        if self.alphas.len() as u64 != self.q {
            return Err(Error::InvalidParams(format!(
                "level {n}: expected {} shifts, got {}",
                self.q,
                self.alphas.len()
            )));
        }
        if self.alphas[0] != 0 {
            return Err(Error::InvalidParams(format!(
                "level {n}: first shift must be 0, got {}",
                self.alphas[0]
            )));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| a >= h) {
            return Err(Error::InvalidParams(format!(
                "level {n}: shift {a} out of range [0, {h})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsFile", into = "ParamsFile")]
pub struct ConstructionParams {
    alphabet: Alphabet,
    seed_word: Word,
    levels: Vec<LevelParams>,
    rng_seed: u64,
}

/// On-disk JSON layout.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    alphabet: Vec<String>,
    seed_word: String,
    levels: Vec<LevelParams>,
    #[serde(default)]
    rng_seed: u64,
}

impl TryFrom<ParamsFile> for ConstructionParams {
    type Error = Error;

    fn try_from(file: ParamsFile) -> Result<Self> {
        let alphabet = Alphabet::new(file.alphabet)?;
        let seed_word = alphabet.parse(&file.seed_word)?;
        ConstructionParams::new(alphabet, seed_word, file.levels, file.rng_seed)
    }
}

impl From<ConstructionParams> for ParamsFile {
    fn from(p: ConstructionParams) -> Self {
        ParamsFile {
            seed_word: p.alphabet.render(&p.seed_word),
            alphabet: p.alphabet.symbols().to_vec(),
            levels: p.levels,
            rng_seed: p.rng_seed,
        }
    }
}

impl ConstructionParams {
    pub fn new(
        alphabet: Alphabet,
        seed_word: Word,
        levels: Vec<LevelParams>,
        rng_seed: u64,
    ) -> Result<Self> {
        let params = Self {
            alphabet,
            seed_word,
            levels,
            rng_seed,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        self.alphabet.check(&self.seed_word)?;
        let distinct = self
            .seed_word
            .letter_counts(self.alphabet.len())
            .iter()
            .filter(|&&c| c > 0)
            .count();
        if distinct < 2 {
            return Err(Error::InvalidParams(
                "seed word must contain at least two different letters".into(),
            ));
        }
        let mut h = self.seed_word.len() as u64;
        for (i, level) in self.levels.iter().enumerate() {
            level.validate(i + 1, h)?;
            h = h
                .checked_mul(level.q)
                .ok_or_else(|| Error::InvalidParams("tower height overflows u64".into()))?;
        }
        Ok(())
    }

    /// Human-readable warnings that do not invalidate the parameters.
    pub fn warnings(&self) -> Vec<String> {
        let even: Vec<String> = self
            .heights()
            .iter()
            .enumerate()
            .filter(|(_, &h)| h % 2 == 0)
            .map(|(i, h)| format!("h_{} = {h}", i + 1))
            .collect();
        if even.is_empty() {
            return Vec::new();
        }
        vec![format!(
            "even heights ({}); second-moment identities can pick up cross terms",
            even.join(", ")
        )]
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn seed_word(&self) -> &Word {
        &self.seed_word
    }

    pub fn levels(&self) -> &[LevelParams] {
        &self.levels
    }

    /// Shift parameters of level `n` (1-based), i.e. those producing `w_{n+1}`.
    pub fn level(&self, n: usize) -> Result<&LevelParams> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::LevelOutOfRange {
                requested: n,
                available: self.levels.len(),
            });
        }
        Ok(&self.levels[n - 1])
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Index of the deepest word `w_N` that can be built.
    pub fn top_level(&self) -> usize {
        self.levels.len() + 1
    }

    /// `h_1, ..., h_N`.
    pub fn heights(&self) -> Vec<u64> {
        let mut hs = Vec::with_capacity(self.top_level());
        let mut h = self.seed_word.len() as u64;
        hs.push(h);
        for level in &self.levels {
            h *= level.q;
            hs.push(h);
        }
        hs
    }

    /// `h_n` for `1 <= n <= top_level()`.
    pub fn height(&self, n: usize) -> Result<u64> {
        self.check_level(n)?;
        Ok(self.heights()[n - 1])
    }

    pub(crate) fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.top_level() {
            return Err(Error::LevelOutOfRange {
                requested: n,
                available: self.top_level(),
            });
        }
        Ok(())
    }

    /// Keeps only the first `levels` words (`w_1..w_levels`).
    pub fn truncated(&self, levels: usize) -> Result<Self> {
        self.check_level(levels)?;
        let mut p = self.clone();
        p.levels.truncate(levels - 1);
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))
    }
}

/// Builds `w_n` by iterating the concatenation rule from the seed word.
pub fn build_word(params: &ConstructionParams, n: usize) -> Result<Word> {
    params.check_level(n)?;
    let h = params.heights()[n - 1];
    if h > MAX_WORD_LEN {
        return Err(Error::MemoryBudget {
            len: h,
            budget: MAX_WORD_LEN,
        });
    }
    params.levels()[..n - 1]
        .iter()
        .try_fold(params.seed_word().clone(), |w, level| build_level(&w, level))
}

/// Draws `alpha_{n,j}` i.i.d. uniform on `[0, h_n)` for `j >= 1`, with
/// `alpha_{n,0} = 0`. The seed word over `{a, b}` alternates `abab...`.
pub fn random_params(h1: u64, q_sequence: &[u64], rng_seed: u64) -> Result<ConstructionParams> {
    if h1 < 2 {
        return Err(Error::InvalidParams(format!("h1 must be at least 2, got {h1}")));
    }
    if let Some(q) = q_sequence.iter().find(|&&q| q < 2) {
        return Err(Error::InvalidParams(format!("q must be at least 2, got {q}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut h = h1;
    let mut levels = Vec::with_capacity(q_sequence.len());
    for &q in q_sequence {
        let mut alphas = Vec::with_capacity(q as usize);
        alphas.push(0);
        alphas.extend((1..q).map(|_| rng.gen_range(0..h)));
        levels.push(LevelParams { q, alphas });
        h = h
            .checked_mul(q)
            .ok_or_else(|| Error::InvalidParams("tower height overflows u64".into()))?;
    }
    let seed_word = Word::from_indices((0..h1).map(|i| (i % 2) as u8).collect());
    ConstructionParams::new(Alphabet::binary(), seed_word, levels, rng_seed)
}

/// Parameters with every shift zero: `w_{n+1}` is `q_n` plain copies of `w_n`.
pub fn zero_params(h1: u64, q_sequence: &[u64]) -> Result<ConstructionParams> {
    if h1 < 2 {
        return Err(Error::InvalidParams(format!("h1 must be at least 2, got {h1}")));
    }
    let levels = q_sequence
        .iter()
        .map(|&q| LevelParams::new(vec![0; q as usize]))
        .collect();
    let seed_word = Word::from_indices((0..h1).map(|i| (i % 2) as u8).collect());
    ConstructionParams::new(Alphabet::binary(), seed_word, levels, 0)
}

/// Named parameter families.
pub mod presets {
    use super::*;

    /// Tower of the odd-random preset: `h = 3, 45, 675, 492075`.
    ///
    /// A lag `t` in `(h_n, h_{n+1})` can align two blocks of level `n + 1`
    /// exactly, giving `|RC(t)| ~ 1 / q_n`; this only stays under `t^{-1/2}`
    /// when `q_n` grows comparably to `h_n`, so the last step is large.
    pub const ODD_RANDOM_H1: u64 = 3;
    pub const ODD_RANDOM_Q: [u64; 3] = [15, 15, 729];

    /// `h_1 = 2`, `q_n = 2`, shifts `(0, h_n / 2)`: the Thue-Morse tower.
    /// `levels` is the index of the deepest word, so `w_levels` has `2^levels` letters.
    pub fn morse(levels: usize) -> Result<ConstructionParams> {
        if levels == 0 {
            return Err(Error::InvalidParams("levels must be at least 1".into()));
        }
        let mut h = 2u64;
        let mut out = Vec::with_capacity(levels - 1);
        for _ in 1..levels {
            out.push(LevelParams::new(vec![0, h / 2]));
            h *= 2;
        }
        ConstructionParams::new(Alphabet::binary(), Word::from_ascii("ab"), out, 0)
    }

    /// Uniform random shifts on an all-odd tower. `levels` is the index of the
    /// deepest word; shorter requests truncate [`ODD_RANDOM_Q`], longer ones
    /// continue it with `q = 3`.
    pub fn odd_random(levels: usize, seed: u64) -> Result<ConstructionParams> {
        random_params(ODD_RANDOM_H1, &odd_random_q(levels)?, seed)
    }

    pub fn odd_random_q(levels: usize) -> Result<Vec<u64>> {
        if levels == 0 {
            return Err(Error::InvalidParams("levels must be at least 1".into()));
        }
        Ok((0..levels - 1)
            .map(|i| ODD_RANDOM_Q.get(i).copied().unwrap_or(3))
            .collect())
    }

    pub fn odd_random_default(seed: u64) -> Result<ConstructionParams> {
        odd_random(ODD_RANDOM_Q.len() + 1, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn thue_morse(len: usize) -> Word {
        Word::from_indices((0..len).map(|i| (i.count_ones() % 2) as u8).collect())
    }

    #[test]
    fn morse_prefixes_are_thue_morse() {
        let p = presets::morse(4).unwrap();
        assert_eq!(build_word(&p, 4).unwrap(), thue_morse(16));
        assert_eq!(build_word(&p, 1).unwrap(), Word::from_ascii("ab"));
    }

    #[test]
    fn three_rotations_of_ab() {
        // shift 2 on a 2-letter word is out of range; its reduction mod h_1 is 0
        let rotations = |alphas: Vec<u64>| {
            ConstructionParams::new(
                Alphabet::binary(),
                Word::from_ascii("ab"),
                vec![LevelParams::new(alphas)],
                0,
            )
        };
        assert!(matches!(rotations(vec![0, 1, 2]), Err(Error::InvalidParams(_))));
        let p = rotations(vec![0, 1, 0]).unwrap();
        assert_eq!(build_word(&p, 2).unwrap(), Word::from_ascii("abbaab"));
    }

    #[test]
    fn rotations_of_aab() {
        // "ab" only has shifts 0 and 1; use a 3-letter seed to exercise q = 3.
        let p = ConstructionParams::new(
            Alphabet::binary(),
            Word::from_ascii("aab"),
            vec![LevelParams::new(vec![0, 1, 2])],
            0,
        )
        .unwrap();
        let direct: Vec<u8> = ["aab", "aba", "baa"]
            .iter()
            .flat_map(|s| Word::from_ascii(s).into_letters())
            .collect();
        assert_eq!(build_word(&p, 2).unwrap(), Word::from_indices(direct));
    }

    #[test]
    fn level_beyond_configuration_is_an_error() {
        let p = presets::morse(3).unwrap();
        assert!(matches!(build_word(&p, 4), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(build_word(&p, 0), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn validation_rules() {
        let ab = Word::from_ascii("ab");
        let bin = Alphabet::binary;
        assert!(ConstructionParams::new(bin(), ab.clone(), vec![LevelParams::new(vec![0])], 0).is_err());
        assert!(ConstructionParams::new(bin(), ab.clone(), vec![LevelParams::new(vec![1, 0])], 0).is_err());
        assert!(ConstructionParams::new(
            bin(),
            ab.clone(),
            vec![LevelParams { q: 3, alphas: vec![0, 1] }],
            0
        )
        .is_err());
        assert!(ConstructionParams::new(bin(), Word::from_ascii("aa"), vec![], 0).is_err());
        assert!(random_params(3, &[1, 3], 1).is_err());
    }

    #[test]
    fn memory_budget_is_enforced() {
        let p = random_params(2, &[1 << 14, 1 << 14], 0).unwrap();
        assert!(matches!(build_word(&p, 3), Err(Error::MemoryBudget { .. })));
    }

    #[test]
    fn random_params_contract() {
        let a = random_params(3, &[5, 3], 42).unwrap();
        let b = random_params(3, &[5, 3], 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.level(1).unwrap().alphas[0], 0);
        assert_eq!(a.heights(), vec![3, 15, 45]);
        assert!(a.warnings().is_empty());
        let warnings = presets::morse(3).unwrap().warnings();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("(h_1 = 2, h_2 = 4, h_3 = 8)"));
    }

    #[test]
    fn random_shifts_are_uniform() {
        // chi-square over 10^4 seeds, one shift per seed, 7 cells.
        let h = 7u64;
        let trials = 10_000;
        let mut counts = [0u64; 7];
        for seed in 0..trials {
            let p = random_params(h, &[2], seed).unwrap();
            counts[p.level(1).unwrap().alphas[1] as usize] += 1;
        }
        let expected = trials as f64 / h as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square(6) upper 1e-3 quantile
        assert!(chi2 < 22.458, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn json_roundtrip_and_schema() {
        let p = random_params(3, &[3, 5], 12345).unwrap();
        let json = p.to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["alphabet"], serde_json::json!(["a", "b"]));
        assert_eq!(value["seed_word"], "aba");
        assert_eq!(value["levels"][0]["q"], 3);
        assert_eq!(value["rng_seed"], 12345);
        assert_eq!(ConstructionParams::from_json(&json).unwrap(), p);

        let bad = r#"{"alphabet":["a","b"],"seed_word":"ab","levels":[{"q":1,"alphas":[0]}],"rng_seed":0}"#;
        assert!(ConstructionParams::from_json(bad).is_err());
    }

    #[test]
    fn odd_random_preset_is_odd() {
        let p = presets::odd_random_default(1).unwrap();
        assert!(p.heights().iter().all(|h| h % 2 == 1));
        let top = *p.heights().last().unwrap();
        assert!((1 << 18..=1 << 20).contains(&top));
        assert_eq!(presets::odd_random(2, 1).unwrap().heights(), vec![3, 45]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn words_are_prefix_consistent(
            h1 in 2u64..6,
            qs in prop::collection::vec(2u64..5, 1..4),
            seed in any::<u64>(),
        ) {
            let p = random_params(h1, &qs, seed).unwrap();
            let hs = p.heights();
            let mut prev = build_word(&p, 1).unwrap();
            for n in 2..=p.top_level() {
                let next = build_word(&p, n).unwrap();
                prop_assert_eq!(next.len() as u64, hs[n - 1]);
                prop_assert!(prev.is_prefix_of(&next));
                prev = next;
            }
        }
    }
}
