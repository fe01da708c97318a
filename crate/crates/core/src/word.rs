//! Finite words over a finite alphabet and the cyclic-shift concatenation rule.
//!
//! Letters are stored as dense `u8` indices into an [`Alphabet`]; the symbols
//! themselves only matter at the serialization boundary.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest word length the builders will materialize.
pub const MAX_WORD_LEN: u64 = 1 << 28;

/// Ordered set of distinct symbols, indexable `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > usize::from(u8::MAX) + 1 {
            return Err(Error::InvalidAlphabet(format!(
                "at most 256 symbols supported, got {}",
                symbols.len()
            )));
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if s.is_empty() {
                return Err(Error::InvalidAlphabet("empty symbol".into()));
            }
            if !seen.insert(s.as_str()) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// The two-letter alphabet `{a, b}`.
    pub fn binary() -> Self {
        Self {
            symbols: vec!["a".into(), "b".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: u8) -> Option<&str> {
        self.symbols.get(usize::from(index)).map(String::as_str)
    }

    pub fn index_of(&self, symbol: &str) -> Option<u8> {
        self.symbols.iter().position(|s| s == symbol).map(|i| i as u8)
    }

    fn single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Parses text into a word. Single-character alphabets read one letter per
    /// character; otherwise letters are whitespace separated.
    pub fn parse(&self, text: &str) -> Result<Word> {
        let letters = if self.single_char() {
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| {
                    let mut buf = [0u8; 4];
                    self.index_of(c.encode_utf8(&mut buf))
                        .ok_or_else(|| Error::Invalid(format!("unknown letter {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            text.split_whitespace()
                .map(|s| {
                    self.index_of(s)
                        .ok_or_else(|| Error::Invalid(format!("unknown letter {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Word::from_indices(letters))
    }

    /// Renders a word with this alphabet's symbols.
    pub fn render(&self, word: &Word) -> String {
        let sep = if self.single_char() { "" } else { " " };
        word.letters()
            .iter()
            .map(|&l| self.symbols[usize::from(l)].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    pub fn check(&self, word: &Word) -> Result<()> {
        match word.letters().iter().find(|&&l| usize::from(l) >= self.len()) {
            Some(l) => Err(Error::Invalid(format!(
                "letter index {l} outside alphabet of size {}",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

/// Finite sequence of alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<u8>,
}

impl Word {
    pub fn from_indices(letters: Vec<u8>) -> Self {
        Self { letters }
    }

    /// Convenience for tests and presets: maps `'a' -> 0`, `'b' -> 1`, ...
    pub fn from_ascii(text: &str) -> Self {
        Self {
            letters: text.bytes().map(|b| b - b'a').collect(),
        }
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<u8> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.letters.starts_with(&self.letters)
    }

    /// Letter counts indexed by letter.
    pub fn letter_counts(&self, alphabet_len: usize) -> Vec<u64> {
        let mut counts = vec![0u64; alphabet_len];
        for &l in &self.letters {
            counts[usize::from(l)] += 1;
        }
        counts
    }

    /// One index per line, with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 4 + 16);
        out.push_str("position,letter\n");
        for (i, l) in self.letters.iter().enumerate() {
            out.push_str(&format!("{i},{l}\n"));
        }
        out
    }
}

impl fmt::Display for Word {
    /// Letters `0, 1, ...` print as `a, b, ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            let c = if l < 26 { char::from(b'a' + l) } else { '?' };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Exact ratio of two counts.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        u128::from(self.num) * u128::from(other.den) == u128::from(other.num) * u128::from(self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Left cyclic shift: position `i` of the result holds `w[(i + alpha) mod |w|]`.
pub fn cyclic_shift(w: &Word, alpha: i64) -> Result<Word> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    let n = w.len();
    let a = alpha.rem_euclid(n as i64) as usize;
    let mut letters = Vec::with_capacity(n);
    letters.extend_from_slice(&w.letters[a..]);
    letters.extend_from_slice(&w.letters[..a]);
    Ok(Word { letters })
}

/// Concatenates the left rotations of `base` by each shift in `alphas`.
///
/// This is the one routine shared by word building and function lifting:
/// entry `j * len + k` of the output is `base[(k + alphas[j]) mod len]`.
pub fn rotate_concat<T: Copy>(base: &[T], alphas: &[u64]) -> Result<Vec<T>> {
    let n = base.len();
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let mut out = Vec::with_capacity(n * alphas.len());
    for &alpha in alphas {
        if alpha >= n as u64 {
            return Err(Error::ShiftOutOfRange { alpha, len: n });
        }
        let a = alpha as usize;
        out.extend_from_slice(&base[a..]);
        out.extend_from_slice(&base[..a]);
    }
    Ok(out)
}

/// One step of the construction: `rho_{a_0}(w) rho_{a_1}(w) ... rho_{a_{q-1}}(w)`.
pub fn build_level(w: &Word, level: &crate::params::LevelParams) -> Result<Word> {
    let total = (w.len() as u64).saturating_mul(level.alphas.len() as u64);
    if total > MAX_WORD_LEN {
        return Err(Error::MemoryBudget {
            len: total,
            budget: MAX_WORD_LEN,
        });
    }
    Ok(Word {
        letters: rotate_concat(&w.letters, &level.alphas)?,
    })
}

/// Overlapping occurrences of `u` in `w` divided by the number of windows.
pub fn subword_frequency(w: &Word, u: &Word) -> Result<Ratio> {
    if u.len() > w.len() {
        return Err(Error::SubwordTooLong {
            sub: u.len(),
            word: w.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::EmptyWord);
    }
    let windows = w.len() - u.len() + 1;
    let count = w
        .letters
        .windows(u.len())
        .filter(|win| *win == u.letters.as_slice())
        .count();
    Ok(Ratio::new(count as u64, windows as u64))
}

/// Normalized Hamming distance between equal-length words.
pub fn dbar_distance(u: &Word, v: &Word) -> Result<Ratio> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    if u.is_empty() {
        return Err(Error::EmptyWord);
    }
    let diff = u
        .letters
        .iter()
        .zip(&v.letters)
        .filter(|(a, b)| a != b)
        .count();
    Ok(Ratio::new(diff as u64, u.len() as u64))
}

/// Smallest d-bar distance from `block` to any cyclic shift of `pattern`,
/// with the minimizing shift.
pub fn min_dbar_to_shifts(block: &Word, pattern: &Word) -> Result<(usize, Ratio)> {
    if block.len() != pattern.len() {
        return Err(Error::LengthMismatch {
            left: block.len(),
            right: pattern.len(),
        });
    }
    let mut best: Option<(usize, Ratio)> = None;
    for a in 0..pattern.len() {
        let d = dbar_distance(block, &cyclic_shift(pattern, a as i64)?)?;
        if best.is_none_or(|(_, b)| d.to_f64() < b.to_f64()) {
            best = Some((a, d));
        }
    }
    best.ok_or(Error::EmptyWord)
}
