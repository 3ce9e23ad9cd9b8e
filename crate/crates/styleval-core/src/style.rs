//! Style tasks and transfer directions.
//!
//! Two tasks are supported: formality transfer and sentiment transfer. Each
//! task has exactly two directions, and a direction never appears under the
//! other task. Directions double as classifier labels and as the style word
//! spliced into generation prompts.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A style-transfer task, which is also the label space of its classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleCategory {
    Formality,
    Sentiment,
}

impl StyleCategory {
    pub const ALL: [StyleCategory; 2] = [StyleCategory::Formality, StyleCategory::Sentiment];

    /// The two directions belonging to this task, in canonical order.
    pub fn directions(self) -> [StyleDirection; 2] {
        match self {
            StyleCategory::Formality => [StyleDirection::Formal, StyleDirection::Informal],
            StyleCategory::Sentiment => [StyleDirection::Positive, StyleDirection::Negative],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StyleCategory::Formality => "formality",
            StyleCategory::Sentiment => "sentiment",
        }
    }
}

impl fmt::Display for StyleCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A target style within one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleDirection {
    Formal,
    Informal,
    Positive,
    Negative,
}

impl StyleDirection {
    pub const ALL: [StyleDirection; 4] = [
        StyleDirection::Formal,
        StyleDirection::Informal,
        StyleDirection::Positive,
        StyleDirection::Negative,
    ];

    pub fn category(self) -> StyleCategory {
        match self {
            StyleDirection::Formal | StyleDirection::Informal => StyleCategory::Formality,
            StyleDirection::Positive | StyleDirection::Negative => StyleCategory::Sentiment,
        }
    }

    /// The capitalized style word substituted into generation prompts.
    pub fn style_word(self) -> &'static str {
        match self {
            StyleDirection::Formal => "Formal",
            StyleDirection::Informal => "Informal",
            StyleDirection::Positive => "Positive",
            StyleDirection::Negative => "Negative",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StyleDirection::Formal => "formal",
            StyleDirection::Informal => "informal",
            StyleDirection::Positive => "positive",
            StyleDirection::Negative => "negative",
        }
    }
}

impl fmt::Display for StyleDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StyleError {
    #[error("unknown style direction `{0}`")]
    UnknownDirection(alloc::string::String),
    #[error("direction `{direction}` does not belong to task `{category}`")]
    DirectionOutsideTask {
        category: StyleCategory,
        direction: StyleDirection,
    },
}

impl FromStr for StyleDirection {
    type Err = StyleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "formal" => Ok(StyleDirection::Formal),
            "informal" => Ok(StyleDirection::Informal),
            "positive" => Ok(StyleDirection::Positive),
            "negative" => Ok(StyleDirection::Negative),
            other => Err(StyleError::UnknownDirection(alloc::string::ToString::to_string(other))),
        }
    }
}

/// A validated (task, direction) pair. Construction is the only place the
/// pairing can go wrong, so everything downstream can trust it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "StyleTaskRepr", into = "StyleTaskRepr")]
pub struct StyleTask {
    category: StyleCategory,
    direction: StyleDirection,
}

impl StyleTask {
    pub fn new(category: StyleCategory, direction: StyleDirection) -> Result<Self, StyleError> {
        if direction.category() != category {
            return Err(StyleError::DirectionOutsideTask {
                category,
                direction,
            });
        }
        Ok(StyleTask {
            category,
            direction,
        })
    }

    pub fn from_direction(direction: StyleDirection) -> Self {
        StyleTask {
            category: direction.category(),
            direction,
        }
    }

    pub fn category(self) -> StyleCategory {
        self.category
    }

    pub fn direction(self) -> StyleDirection {
        self.direction
    }
}

impl fmt::Display for StyleTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category, self.direction)
    }
}

#[derive(Serialize, Deserialize)]
struct StyleTaskRepr {
    task: StyleCategory,
    direction: StyleDirection,
}

impl TryFrom<StyleTaskRepr> for StyleTask {
    type Error = StyleError;

    fn try_from(repr: StyleTaskRepr) -> Result<Self, Self::Error> {
        StyleTask::new(repr.task, repr.direction)
    }
}

impl From<StyleTask> for StyleTaskRepr {
    fn from(task: StyleTask) -> Self {
        StyleTaskRepr {
            task: task.category,
            direction: task.direction,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn every_direction_belongs_to_exactly_one_category() {
        for direction in StyleDirection::ALL {
            let owners: usize = StyleCategory::ALL
                .iter()
                .filter(|c| c.directions().contains(&direction))
                .count();
            assert_eq!(owners, 1, "{direction} should have one owning task");
        }
    }

    #[test]
    fn category_directions_round_trip() {
        for category in StyleCategory::ALL {
            for direction in category.directions() {
                assert_eq!(direction.category(), category);
            }
        }
    }

    #[test]
    fn style_words_match_directions() {
        assert_eq!(StyleDirection::Formal.style_word(), "Formal");
        assert_eq!(StyleDirection::Informal.style_word(), "Informal");
        assert_eq!(StyleDirection::Positive.style_word(), "Positive");
        assert_eq!(StyleDirection::Negative.style_word(), "Negative");
    }

    #[test]
    fn mismatched_pair_is_rejected() {
        let err = StyleTask::new(StyleCategory::Formality, StyleDirection::Positive).unwrap_err();
        assert!(matches!(err, StyleError::DirectionOutsideTask { .. }));
        assert!(StyleTask::new(StyleCategory::Sentiment, StyleDirection::Negative).is_ok());
    }

    #[test]
    fn serde_rejects_mismatched_pair() {
        let ok: StyleTask =
            serde_json::from_str(r#"{"task":"formality","direction":"informal"}"#).unwrap();
        assert_eq!(ok.direction(), StyleDirection::Informal);
        let bad = serde_json::from_str::<StyleTask>(r#"{"task":"sentiment","direction":"formal"}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn direction_parses_from_str() {
        for direction in StyleDirection::ALL {
            assert_eq!(direction.as_str().parse::<StyleDirection>().unwrap(), direction);
        }
        assert!("shouty".parse::<StyleDirection>().is_err());
    }

    #[test]
    fn display_is_lowercase() {
        assert_eq!(StyleTask::from_direction(StyleDirection::Positive).to_string(), "sentiment/positive");
    }
}
