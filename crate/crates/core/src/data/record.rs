use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Normalized chromosome name: autosomes 1..=22, X, Y and MT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Chromosome {
    Autosome(u8),
    X,
    Y,
    Mt,
}

impl Chromosome {
    /// Accepts e.g. `7`, `chr7`, `CHRX`, `chrM`, `MT`. Case-insensitive.
    pub fn parse(token: &str) -> Option<Self> {
        let t = token.trim();
        let t = match t.get(..3) {
            Some(p) if p.eq_ignore_ascii_case("chr") => &t[3..],
            _ => t,
        };
        if t.eq_ignore_ascii_case("x") {
            return Some(Chromosome::X);
        }
        if t.eq_ignore_ascii_case("y") {
            return Some(Chromosome::Y);
        }
        if t.eq_ignore_ascii_case("mt") || t.eq_ignore_ascii_case("m") {
            return Some(Chromosome::Mt);
        }
        if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) || t.starts_with('0') {
            return None;
        }
        match t.parse::<u8>() {
            Ok(n @ 1..=22) => Some(Chromosome::Autosome(n)),
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = Chromosome> {
        (1..=22)
            .map(Chromosome::Autosome)
            .chain([Chromosome::X, Chromosome::Y, Chromosome::Mt])
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Chromosome::Autosome(n) => write!(f, "{n}"),
            Chromosome::X => f.write_str("X"),
            Chromosome::Y => f.write_str("Y"),
            Chromosome::Mt => f.write_str("MT"),
        }
    }
}

/// One line of a mutation file.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationRecord {
    pub sample_id: String,
    pub chromosome: Chromosome,
    pub position: u64,
    /// Parsed and validated, never used downstream.
    pub vaf: Option<f64>,
}

/// Positional mutation key, canonical form `CHROM:POS`.
///
/// Ordering is plain lexicographic order of the canonical string, which is
/// the column order of every occurrence matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MutationKey(String);

impl MutationKey {
    pub fn new(chromosome: Chromosome, position: u64) -> Self {
        MutationKey(format!("{chromosome}:{position}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Splits the key back into its positional parts.
    pub fn parts(&self) -> (Chromosome, u64) {
        // Construction guarantees the canonical form.
        let (c, p) = self.0.split_once(':').expect("canonical key");
        (
            Chromosome::parse(c).expect("canonical chromosome"),
            p.parse().expect("canonical position"),
        )
    }
}

impl FromStr for MutationKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("malformed mutation key {s:?}"));
        let (c, p) = s.split_once(':').ok_or_else(bad)?;
        let chromosome = Chromosome::parse(c).ok_or_else(bad)?;
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let position = p.parse::<u64>().map_err(|_| bad())?;
        let key = MutationKey::new(chromosome, position);
        if key.0 != s {
            // Non-canonical spelling such as "chr7:0100".
            return Err(bad());
        }
        Ok(key)
    }
}

impl fmt::Display for MutationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The positional surjection: everything except chromosome and position is
/// discarded.
pub fn make_key(record: &MutationRecord) -> MutationKey {
    MutationKey::new(record.chromosome, record.position)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(chrom: &str, pos: u64, vaf: Option<f64>) -> MutationRecord {
        MutationRecord {
            sample_id: "S1".into(),
            chromosome: Chromosome::parse(chrom).unwrap(),
            position: pos,
            vaf,
        }
    }

    #[test]
    fn key_is_concatenation() {
        assert_eq!(make_key(&record("7", 140453136, None)).as_str(), "7:140453136");
        assert_eq!(make_key(&record("X", 0, None)).as_str(), "X:0");
    }

    #[test]
    fn key_ignores_vaf() {
        let a = make_key(&record("7", 100, Some(0.1)));
        let b = make_key(&record("7", 100, Some(0.9)));
        assert_eq!(a, b);
        assert_eq!(a.as_str(), "7:100");
    }

    #[test]
    fn chromosome_normalization() {
        assert_eq!(Chromosome::parse("chr7"), Some(Chromosome::Autosome(7)));
        assert_eq!(Chromosome::parse("CHR22"), Some(Chromosome::Autosome(22)));
        assert_eq!(Chromosome::parse("x"), Some(Chromosome::X));
        assert_eq!(Chromosome::parse("chrM"), Some(Chromosome::Mt));
        assert_eq!(Chromosome::parse("MT").unwrap().to_string(), "MT");
        for bad in ["chrQ", "23", "0", "07", "", "chr", "1a"] {
            assert_eq!(Chromosome::parse(bad), None, "{bad}");
        }
    }

    #[test]
    fn key_round_trip() {
        for c in Chromosome::all() {
            for pos in [0u64, 1, 140453136, u64::MAX] {
                let key = MutationKey::new(c, pos);
                assert_eq!(key.parts(), (c, pos));
                assert_eq!(key.as_str().parse::<MutationKey>().unwrap(), key);
            }
        }
        assert!("chr7:100".parse::<MutationKey>().is_err());
        assert!("7:".parse::<MutationKey>().is_err());
        assert!("7-100".parse::<MutationKey>().is_err());
    }
}
