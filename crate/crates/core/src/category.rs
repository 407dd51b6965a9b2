//! The eight categorical emotion labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const NUM_CATEGORIES: usize = 8;

/// Emotion category. Declaration order is the canonical column order
/// `[A, C, D, F, H, N, S, U]` used by every matrix and file in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Angry,
    Contempt,
    Disgust,
    Fear,
    Happy,
    Neutral,
    Sad,
    Surprise,
}

impl Category {
    pub const ALL: [Category; NUM_CATEGORIES] = [
        Category::Angry,
        Category::Contempt,
        Category::Disgust,
        Category::Fear,
        Category::Happy,
        Category::Neutral,
        Category::Sad,
        Category::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Category> {
        Self::ALL.get(index).copied()
    }

    pub fn code(self) -> char {
        match self {
            Category::Angry => 'A',
            Category::Contempt => 'C',
            Category::Disgust => 'D',
            Category::Fear => 'F',
            Category::Happy => 'H',
            Category::Neutral => 'N',
            Category::Sad => 'S',
            Category::Surprise => 'U',
        }
    }

    pub fn from_code(code: &str) -> Option<Category> {
        match code {
            "A" => Some(Category::Angry),
            "C" => Some(Category::Contempt),
            "D" => Some(Category::Disgust),
            "F" => Some(Category::Fear),
            "H" => Some(Category::Happy),
            "N" => Some(Category::Neutral),
            "S" => Some(Category::Sad),
            "U" => Some(Category::Surprise),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion category {0:?} (expected one of A, C, D, F, H, N, S, U)")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::from_code(s.trim()).ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code().to_string())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_codes() {
        let codes: String = Category::ALL.iter().map(|c| c.code()).collect();
        assert_eq!(codes, "ACDFHNSU");
        for (i, c) in Category::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(Category::from_index(i), Some(*c));
            assert_eq!(c.code().to_string().parse::<Category>().unwrap(), *c);
        }
        assert!("O".parse::<Category>().is_err());
        assert!(Category::from_index(8).is_none());
    }
}
