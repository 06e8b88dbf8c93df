//! Test cases and where they came from.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symcore::{Outcome, PathConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Provenance {
    SeedUser,
    SeedLlmInitial,
    SeedLlmFresh,
    SeedRandom,
    SolvedBaseline,
    SolvedLlm,
    SolvedRefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown provenance {0:?}")]
pub struct UnknownProvenance(pub String);

impl Provenance {
    pub const ALL: [Provenance; 7] = [
        Provenance::SeedUser,
        Provenance::SeedLlmInitial,
        Provenance::SeedLlmFresh,
        Provenance::SeedRandom,
        Provenance::SolvedBaseline,
        Provenance::SolvedLlm,
        Provenance::SolvedRefined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::SeedUser => "seed:user",
            Provenance::SeedLlmInitial => "seed:llm:initial",
            Provenance::SeedLlmFresh => "seed:llm:fresh",
            Provenance::SeedRandom => "seed:random",
            Provenance::SolvedBaseline => "solved:baseline",
            Provenance::SolvedLlm => "solved:llm",
            Provenance::SolvedRefined => "solved:refined",
        }
    }

    pub fn is_solved(self) -> bool {
        matches!(
            self,
            Provenance::SolvedBaseline | Provenance::SolvedLlm | Provenance::SolvedRefined
        )
    }

    /// Form used in corpus file names, with `:` replaced by `-`.
    pub fn file_tag(self) -> String {
        self.as_str().replace(':', "-")
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = UnknownProvenance;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Provenance::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| UnknownProvenance(s.to_string()))
    }
}

impl From<Provenance> for String {
    fn from(p: Provenance) -> String {
        p.as_str().to_string()
    }
}

impl TryFrom<String> for Provenance {
    type Error = UnknownProvenance;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: u64,
    pub bytes: Vec<u8>,
    pub provenance: Provenance,
    pub parent: Option<u64>,
    pub iteration: u64,
    /// For solved cases, the constraint the bytes were generated to satisfy.
    pub target: Option<PathConstraint>,
    pub outcome: Option<Outcome>,
}

impl TestCase {
    pub fn seed(id: u64, bytes: Vec<u8>, provenance: Provenance, iteration: u64) -> Self {
        TestCase {
            id,
            bytes,
            provenance,
            parent: None,
            iteration,
            target: None,
            outcome: None,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{:06}_{}.bin", self.id, self.provenance.file_tag())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_strings_round_trip() {
        for p in Provenance::ALL {
            assert_eq!(p.as_str().parse::<Provenance>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.as_str()));
            assert_eq!(serde_json::from_str::<Provenance>(&json).unwrap(), p);
        }
        assert!("solved".parse::<Provenance>().is_err());
        assert!(Provenance::SolvedRefined.is_solved());
        assert!(!Provenance::SeedRandom.is_solved());
    }

    #[test]
    fn file_names() {
        let t = TestCase::seed(7, b"{}".to_vec(), Provenance::SeedLlmInitial, 0);
        assert_eq!(t.file_name(), "000007_seed-llm-initial.bin");
    }
}
