//! Binary linear codes with exhaustive bounded-distance decoding.

mod sketch;

pub use sketch::{make_sketch, recover_codeword, Sketch};

use std::path::Path;

use rand::Rng;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Largest dimension we are willing to enumerate.
pub const MAX_DIMENSION: usize = 20;
/// Codewords are packed into a `u128`.
pub const MAX_LENGTH: usize = 128;

const CODE_16_8: &str = include_str!("../../fixtures/code16_8.txt");
const CODE_7_3: &str = include_str!("../../fixtures/code7_3.txt");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    n: usize,
    k: usize,
    t_c: usize,
    rows: Vec<u128>,
    codewords: Vec<u128>,
}

fn pack(bits: &BitString) -> u128 {
    bits.iter().enumerate().fold(0u128, |acc, (i, b)| acc | ((b as u128) << i))
}

fn unpack(word: u128, n: usize) -> BitString {
    (0..n).map(|i| (word >> i) & 1 == 1).collect()
}

impl LinearCode {
    /// Builds a code from generator rows and checks independence and the decoding radius.
    pub fn new(generator: Vec<BitString>, t_c: usize) -> Result<Self> {
        let k = generator.len();
        if k == 0 || k > MAX_DIMENSION {
            return Err(Error::InvalidCode(format!("dimension {k} outside 1..={MAX_DIMENSION}")));
        }
        let n = generator[0].len();
        if n == 0 || n > MAX_LENGTH {
            return Err(Error::InvalidCode(format!("length {n} outside 1..={MAX_LENGTH}")));
        }
        if let Some(bad) = generator.iter().find(|r| r.len() != n) {
            return Err(Error::LengthMismatch { expected: n, actual: bad.len() });
        }
        let rows: Vec<u128> = generator.iter().map(pack).collect();
        let mut codewords = vec![0u128; 1 << k];
        for m in 1usize..(1 << k) {
            let low = m.trailing_zeros() as usize;
            codewords[m] = codewords[m & (m - 1)] ^ rows[low];
        }
        // linear code: minimum distance equals minimum nonzero weight
        let min_weight = codewords[1..].iter().map(|c| c.count_ones() as usize).min().unwrap_or(0);
        if min_weight == 0 {
            return Err(Error::InvalidCode("generator rows are linearly dependent".into()));
        }
        if min_weight < 2 * t_c + 1 {
            return Err(Error::InvalidCode(format!(
                "minimum distance {min_weight} cannot correct {t_c} errors"
            )));
        }
        Ok(LinearCode { n, k, t_c, rows, codewords })
    }

    /// Parses one generator row per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, t_c: usize) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<BitString>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, t_c)
    }

    pub fn load(path: impl AsRef<Path>, t_c: usize) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, t_c)
    }

    pub fn repetition(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidCode("empty repetition code".into()));
        }
        Self::new(vec![BitString::ones(r)], (r - 1) / 2)
    }

    /// The bundled [16,8,5] code, radius 2.
    pub fn standard_16_8() -> Self {
        Self::parse(CODE_16_8, 2).expect("bundled code is valid")
    }

    /// The bundled [7,3,4] code, radius 1.
    pub fn simplex_7_3() -> Self {
        Self::parse(CODE_7_3, 1).expect("bundled code is valid")
    }

    pub fn length(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> usize {
        self.t_c
    }

    pub fn generator(&self) -> Vec<BitString> {
        self.rows.iter().map(|&r| unpack(r, self.n)).collect()
    }

    pub fn min_distance(&self) -> usize {
        self.codewords[1..].iter().map(|c| c.count_ones() as usize).min().unwrap_or(0)
    }

    pub fn encode(&self, msg: &BitString) -> Result<BitString> {
        if msg.len() != self.k {
            return Err(Error::LengthMismatch { expected: self.k, actual: msg.len() });
        }
        let index = msg.iter().enumerate().fold(0usize, |acc, (i, b)| acc | ((b as usize) << i));
        Ok(unpack(self.codewords[index], self.n))
    }

    pub fn contains(&self, word: &BitString) -> bool {
        word.len() == self.n && self.codewords.contains(&pack(word))
    }

    /// Nearest codeword if it lies within the decoding radius, otherwise `None`.
    pub fn decode_bounded(&self, word: &BitString) -> Result<Option<BitString>> {
        if word.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: word.len() });
        }
        let w = pack(word);
        let best = self
            .codewords
            .iter()
            .map(|&c| ((c ^ w).count_ones() as usize, c))
            .min_by_key(|&(d, _)| d)
            .expect("code is nonempty");
        Ok((best.0 <= self.t_c).then(|| unpack(best.1, self.n)))
    }

    pub fn random_codeword<R: Rng + ?Sized>(&self, rng: &mut R) -> BitString {
        let i = rng.gen_range(0..self.codewords.len());
        unpack(self.codewords[i], self.n)
    }

    pub fn codewords(&self) -> impl Iterator<Item = BitString> + '_ {
        self.codewords.iter().map(|&c| unpack(c, self.n))
    }
}
