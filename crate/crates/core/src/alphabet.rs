//! Symbol alphabets and integer word codes.
//!
//! Words over an alphabet of size A are packed into `u64` codes with the
//! first symbol most significant (code = Σ sᵢ·A^(ℓ−1−i)), so numeric order
//! on codes is lexicographic order on words and sliding a window one step
//! is `code*A + s mod A^ℓ`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("alphabet must contain at least one symbol")]
    Empty,
    #[error("alphabet contains duplicate symbol {0:?}")]
    Duplicate(char),
    #[error("words of length {len} over {size} symbols exceed the 64-bit code space")]
    WordTooLong { len: usize, size: usize },
}

/// An ordered set of distinct symbol characters.
///
/// Symbol order is significant: it fixes integer encodings, CSV row order,
/// and the cumulative-probability order used when sampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: Vec<char>) -> Result<Self, AlphabetError> {
        if symbols.is_empty() {
            return Err(AlphabetError::Empty);
        }
        for (i, &c) in symbols.iter().enumerate() {
            if symbols[..i].contains(&c) {
                return Err(AlphabetError::Duplicate(c));
            }
        }
        Ok(Self { symbols })
    }

    /// Binary `0`/`1` alphabet.
    pub fn binary() -> Self {
        Self {
            symbols: vec!['0', '1'],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: u8) -> char {
        self.symbols[index as usize]
    }

    pub fn index_of(&self, c: char) -> Result<u8, AlphabetError> {
        self.symbols
            .iter()
            .position(|&s| s == c)
            .map(|i| i as u8)
            .ok_or(AlphabetError::UnknownSymbol(c))
    }

    /// Number of distinct words of length `len`, or an error if the code
    /// space overflows u64.
    pub fn word_space(&self, len: usize) -> Result<u64, AlphabetError> {
        let a = self.len() as u64;
        let mut space: u64 = 1;
        for _ in 0..len {
            space = space.checked_mul(a).filter(|&s| s <= 1 << 62).ok_or(
                AlphabetError::WordTooLong {
                    len,
                    size: self.len(),
                },
            )?;
        }
        Ok(space)
    }

    /// Packs symbol indices into a word code (first symbol most significant).
    pub fn encode(&self, indices: &[u8]) -> Result<u64, AlphabetError> {
        self.word_space(indices.len())?;
        let a = self.len() as u64;
        Ok(indices.iter().fold(0u64, |code, &s| code * a + s as u64))
    }

    /// Unpacks a word code of known length back into symbol indices.
    pub fn decode(&self, code: u64, len: usize) -> Vec<u8> {
        let a = self.len() as u64;
        let mut out = vec![0u8; len];
        let mut c = code;
        for slot in out.iter_mut().rev() {
            *slot = (c % a) as u8;
            c /= a;
        }
        out
    }

    /// Renders a word code as its symbol characters.
    pub fn word_string(&self, code: u64, len: usize) -> String {
        self.decode(code, len)
            .iter()
            .map(|&s| self.symbol(s))
            .collect()
    }

    /// Parses a string of symbol characters into indices.
    pub fn parse(&self, text: &str) -> Result<Vec<u8>, AlphabetError> {
        text.chars().map(|c| self.index_of(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_duplicates() {
        assert_eq!(Alphabet::new(vec![]), Err(AlphabetError::Empty));
        assert_eq!(
            Alphabet::new(vec!['a', 'a']),
            Err(AlphabetError::Duplicate('a'))
        );
    }

    #[test]
    fn encode_decode_roundtrip() {
        let a = Alphabet::new(vec!['a', 'b', 'c']).unwrap();
        let idx = a.parse("cabba").unwrap();
        let code = a.encode(&idx).unwrap();
        assert_eq!(a.decode(code, 5), idx);
        assert_eq!(a.word_string(code, 5), "cabba");
    }

    #[test]
    fn codes_are_lexicographic() {
        let a = Alphabet::binary();
        let w = |s: &str| a.encode(&a.parse(s).unwrap()).unwrap();
        assert!(w("001") < w("010"));
        assert!(w("011") < w("100"));
        assert_eq!(w("101"), 5);
    }

    #[test]
    fn word_space_overflow_is_reported() {
        let a = Alphabet::binary();
        assert_eq!(a.word_space(10), Ok(1024));
        assert!(matches!(
            a.word_space(64),
            Err(AlphabetError::WordTooLong { .. })
        ));
    }

    #[test]
    fn unknown_symbol() {
        let a = Alphabet::binary();
        assert_eq!(a.parse("012"), Err(AlphabetError::UnknownSymbol('2')));
    }
}
