use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Start year of a decade (1850 for 1850-1859).
pub type Decade = i32;

/// Decade start year containing `year`.
pub fn bucket_by_decade(year: i32) -> Decade {
    year.div_euclid(10) * 10
}

/// Inclusive range of decade start years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecadeRange {
    pub first: Decade,
    pub last: Decade,
}

impl DecadeRange {
    pub fn new(first: Decade, last: Decade) -> Option<Self> {
        if first % 10 != 0 || last % 10 != 0 || first > last {
            return None;
        }
        Some(DecadeRange { first, last })
    }

    pub fn contains(&self, decade: Decade) -> bool {
        decade >= self.first && decade <= self.last
    }

    pub fn iter(&self) -> impl Iterator<Item = Decade> {
        (self.first..=self.last).step_by(10)
    }

    pub fn len(&self) -> usize {
        ((self.last - self.first) / 10 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for DecadeRange {
    fn default() -> Self {
        DecadeRange {
            first: 1850,
            last: 1990,
        }
    }
}

/// Group label such as `GRP_A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Group(pub String);

impl Group {
    pub const OTHER: &'static str = "OTHER";

    pub fn new(label: impl Into<String>) -> Self {
        Group(label.into())
    }

    pub fn other() -> Self {
        Group(Self::OTHER.to_string())
    }

    pub fn is_other(&self) -> bool {
        self.0 == Self::OTHER
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Group {
    fn from(s: &str) -> Self {
        Group(s.to_string())
    }
}

/// Stable person identifier: hash of (full name, birth year).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersonId(pub u64);

impl PersonId {
    pub fn from_name_and_birth(full_name: &str, birth_year: Option<i32>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(full_name.as_bytes());
        hasher.update([0u8]);
        match birth_year {
            Some(y) => hasher.update(y.to_string().as_bytes()),
            None => hasher.update(b"?"),
        }
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        PersonId(u64::from_be_bytes(bytes))
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for PersonId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(PersonId)
    }
}
