use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// The ten oral French vowels, in the canonical classification order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vowel {
    I,
    E,
    OpenE,
    A,
    Y,
    Oslash,
    Oe,
    U,
    O,
    OpenO,
}

impl Vowel {
    pub const ALL: [Vowel; 10] = [
        Vowel::I,
        Vowel::E,
        Vowel::OpenE,
        Vowel::A,
        Vowel::Y,
        Vowel::Oslash,
        Vowel::Oe,
        Vowel::U,
        Vowel::O,
        Vowel::OpenO,
    ];

    /// X-SAMPA symbol, used in all text formats.
    pub fn sampa(self) -> &'static str {
        match self {
            Vowel::I => "i",
            Vowel::E => "e",
            Vowel::OpenE => "E",
            Vowel::A => "a",
            Vowel::Y => "y",
            Vowel::Oslash => "2",
            Vowel::Oe => "9",
            Vowel::U => "u",
            Vowel::O => "o",
            Vowel::OpenO => "O",
        }
    }

    pub fn ipa(self) -> &'static str {
        match self {
            Vowel::I => "i",
            Vowel::E => "e",
            Vowel::OpenE => "ɛ",
            Vowel::A => "a",
            Vowel::Y => "y",
            Vowel::Oslash => "ø",
            Vowel::Oe => "œ",
            Vowel::U => "u",
            Vowel::O => "o",
            Vowel::OpenO => "ɔ",
        }
    }

    /// Position in [`Vowel::ALL`]; also the tie-break rank.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Vowel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.sampa())
    }
}

/// Accepts X-SAMPA or IPA symbols.
impl FromStr for Vowel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        Vowel::ALL
            .into_iter()
            .find(|v| v.sampa() == s || v.ipa() == s)
            .ok_or_else(|| Error::UnknownVowel(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_both_alphabets() {
        for v in Vowel::ALL {
            assert_eq!(v.sampa().parse::<Vowel>().unwrap(), v);
            assert_eq!(v.ipa().parse::<Vowel>().unwrap(), v);
        }
        assert!("x".parse::<Vowel>().is_err());
    }
}
