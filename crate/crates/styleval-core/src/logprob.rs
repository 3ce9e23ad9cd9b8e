//! Token-level log-probability data as returned by scoring backends.
//!
//! A scoring call returns one [`TokenScore`] per token of the submitted text.
//! Offsets are character positions (not bytes), tokens must tile the text
//! with no gaps or overlaps, and log probabilities are natural-log and
//! non-positive. Some backends cannot condition the first token on anything,
//! so index 0 may carry a sentinel (`logprob: None`); sentinels never
//! contribute to any sum.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One scored token. `start..end` are char offsets into the scored text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub text: String,
    /// Natural-log probability; `None` marks the unconditioned sentinel that
    /// only ever appears at index 0.
    pub logprob: Option<f64>,
    pub start: usize,
    pub end: usize,
}

impl TokenScore {
    pub fn is_sentinel(&self) -> bool {
        self.logprob.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TokenContractError {
    #[error("no tokens returned for non-empty text")]
    NoTokens,
    #[error("token {index} has an empty or inverted span")]
    BadSpan { index: usize },
    #[error("token 0 starts at {start}, expected 0")]
    StartNotZero { start: usize },
    #[error("token {index} starts at {found}, expected {expected} (gap or overlap)")]
    Discontinuity {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("tokens cover {covered} chars but the text has {text_chars}")]
    IncompleteCover { covered: usize, text_chars: usize },
    #[error("token {index} text does not match its span in the scored text")]
    TextMismatch { index: usize },
    #[error("token {index} has a positive log probability")]
    PositiveLogprob { index: usize },
    #[error("token {index} carries a sentinel, only index 0 may")]
    SentinelNotFirst { index: usize },
}

/// Checks every contract a scoring response must satisfy against the text it
/// was produced for. Errors name the first offending token index.
pub fn validate_partition(text: &str, tokens: &[TokenScore]) -> Result<(), TokenContractError> {
    let chars: Vec<char> = text.chars().collect();
    if tokens.is_empty() {
        if chars.is_empty() {
            return Ok(());
        }
        return Err(TokenContractError::NoTokens);
    }
    if tokens[0].start != 0 {
        return Err(TokenContractError::StartNotZero {
            start: tokens[0].start,
        });
    }
    let mut cursor = 0usize;
    for (index, token) in tokens.iter().enumerate() {
        if token.start >= token.end {
            return Err(TokenContractError::BadSpan { index });
        }
        if token.start != cursor {
            return Err(TokenContractError::Discontinuity {
                index,
                expected: cursor,
                found: token.start,
            });
        }
        if token.end > chars.len() {
            return Err(TokenContractError::IncompleteCover {
                covered: token.end,
                text_chars: chars.len(),
            });
        }
        let span_matches = token.text.chars().count() == token.end - token.start
            && token
                .text
                .chars()
                .zip(&chars[token.start..token.end])
                .all(|(a, &b)| a == b);
        if !span_matches {
            return Err(TokenContractError::TextMismatch { index });
        }
        match token.logprob {
            Some(lp) if lp > 0.0 => {
                return Err(TokenContractError::PositiveLogprob { index });
            }
            None if index != 0 => {
                return Err(TokenContractError::SentinelNotFirst { index });
            }
            _ => {}
        }
        cursor = token.end;
    }
    if cursor != chars.len() {
        return Err(TokenContractError::IncompleteCover {
            covered: cursor,
            text_chars: chars.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("token length must be at least 1")]
    ZeroTokenLen,
    #[error("per-token negative log likelihood must be positive, got {0}")]
    NonPositiveNll(f64),
    #[error("token length {token_len} exceeds the text length {text_chars}")]
    TokenLenExceedsText { token_len: usize, text_chars: usize },
    #[error("marker not found in text")]
    MarkerNotFound,
}

/// Builds a synthetic scoring response with a uniform per-token negative log
/// likelihood. The text is chunked into fixed-width character tokens, and
/// chunking restarts at the end of the first `marker` occurrence so that a
/// span beginning there is tiled by whole tokens. With `sentinel_first` the
/// first token carries no log probability, mimicking backends that cannot
/// score an unconditioned token.
pub fn synth_token_scores(
    text: &str,
    marker: &str,
    per_token_nll: f64,
    token_len: usize,
    sentinel_first: bool,
) -> Result<Vec<TokenScore>, SynthError> {
    if token_len == 0 {
        return Err(SynthError::ZeroTokenLen);
    }
    if !(per_token_nll > 0.0) {
        return Err(SynthError::NonPositiveNll(per_token_nll));
    }
    let chars: Vec<char> = text.chars().collect();
    if token_len > chars.len() {
        return Err(SynthError::TokenLenExceedsText {
            token_len,
            text_chars: chars.len(),
        });
    }
    if marker.is_empty() {
        return Err(SynthError::MarkerNotFound);
    }
    let marker_byte = text.find(marker).ok_or(SynthError::MarkerNotFound)?;
    let boundary = text[..marker_byte].chars().count() + marker.chars().count();

    let mut tokens = Vec::new();
    let push_range = |tokens: &mut Vec<TokenScore>, from: usize, to: usize| {
        let mut start = from;
        while start < to {
            let end = core::cmp::min(start + token_len, to);
            tokens.push(TokenScore {
                text: chars[start..end].iter().collect(),
                logprob: Some(-per_token_nll),
                start,
                end,
            });
            start = end;
        }
    };
    push_range(&mut tokens, 0, boundary);
    push_range(&mut tokens, boundary, chars.len());
    if sentinel_first {
        if let Some(first) = tokens.first_mut() {
            first.logprob = None;
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::borrow::ToOwned;
    use alloc::vec;

    fn token(text: &str, logprob: Option<f64>, start: usize, end: usize) -> TokenScore {
        TokenScore {
            text: text.to_owned(),
            logprob,
            start,
            end,
        }
    }

    #[test]
    fn valid_partition_passes() {
        let tokens = vec![
            token("he", Some(-0.5), 0, 2),
            token("ll", Some(-1.0), 2, 4),
            token("o", Some(-2.0), 4, 5),
        ];
        validate_partition("hello", &tokens).unwrap();
    }

    #[test]
    fn sentinel_allowed_only_at_index_zero() {
        let ok = vec![token("he", None, 0, 2), token("llo", Some(-1.0), 2, 5)];
        validate_partition("hello", &ok).unwrap();
        let bad = vec![token("he", Some(-1.0), 0, 2), token("llo", None, 2, 5)];
        assert_eq!(
            validate_partition("hello", &bad).unwrap_err(),
            TokenContractError::SentinelNotFirst { index: 1 }
        );
    }

    #[test]
    fn gaps_and_overlaps_name_the_first_bad_index() {
        let gap = vec![token("he", Some(-1.0), 0, 2), token("o", Some(-1.0), 4, 5)];
        assert_eq!(
            validate_partition("hello", &gap).unwrap_err(),
            TokenContractError::Discontinuity {
                index: 1,
                expected: 2,
                found: 4
            }
        );
        let overlap = vec![
            token("hel", Some(-1.0), 0, 3),
            token("llo", Some(-1.0), 2, 5),
        ];
        assert_eq!(
            validate_partition("hello", &overlap).unwrap_err(),
            TokenContractError::Discontinuity {
                index: 1,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn short_cover_is_rejected() {
        let tokens = vec![token("hel", Some(-1.0), 0, 3)];
        assert_eq!(
            validate_partition("hello", &tokens).unwrap_err(),
            TokenContractError::IncompleteCover {
                covered: 3,
                text_chars: 5
            }
        );
    }

    #[test]
    fn positive_logprob_is_rejected() {
        let tokens = vec![token("hello", Some(0.25), 0, 5)];
        assert_eq!(
            validate_partition("hello", &tokens).unwrap_err(),
            TokenContractError::PositiveLogprob { index: 0 }
        );
    }

    #[test]
    fn mismatched_token_text_is_rejected() {
        let tokens = vec![token("heLLo", Some(-1.0), 0, 5)];
        assert_eq!(
            validate_partition("hello", &tokens).unwrap_err(),
            TokenContractError::TextMismatch { index: 0 }
        );
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        let text = "héllo";
        let tokens = vec![token("hé", Some(-1.0), 0, 2), token("llo", Some(-1.0), 2, 5)];
        validate_partition(text, &tokens).unwrap();
    }

    #[test]
    fn empty_token_list_for_nonempty_text_is_rejected() {
        assert_eq!(
            validate_partition("hello", &[]).unwrap_err(),
            TokenContractError::NoTokens
        );
        validate_partition("", &[]).unwrap();
    }

    #[test]
    fn synth_restarts_chunking_at_marker_end() {
        let text = "abcdMARKxyz";
        let tokens = synth_token_scores(text, "MARK", 1.5, 3, false).unwrap();
        validate_partition(text, &tokens).unwrap();
        let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["abc", "dMA", "RK", "xyz"]);
    }

    #[test]
    fn synth_token_boundary_lands_on_marker_end() {
        let text = "abcdMARKxyzw";
        let tokens = synth_token_scores(text, "MARK", 1.5, 3, false).unwrap();
        validate_partition(text, &tokens).unwrap();
        // the char right after MARK (index 8) must start a fresh token
        assert!(tokens.iter().any(|t| t.start == 8));
        // everything from the boundary on is uniform full-width except a
        // possible ragged final token
        let after: Vec<&TokenScore> = tokens.iter().filter(|t| t.start >= 8).collect();
        assert_eq!(after[0].text, "xyz");
        assert_eq!(after[1].text, "w");
        for t in &tokens {
            assert!(t.logprob == Some(-1.5));
        }
    }

    #[test]
    fn synth_sentinel_marks_first_token_only() {
        let tokens = synth_token_scores("aaMARKbbbb", "MARK", 2.0, 2, true).unwrap();
        assert!(tokens[0].is_sentinel());
        assert!(tokens[1..].iter().all(|t| !t.is_sentinel()));
        validate_partition("aaMARKbbbb", &tokens).unwrap();
    }

    #[test]
    fn synth_rejects_bad_parameters() {
        assert_eq!(
            synth_token_scores("abc", "b", 1.0, 0, false).unwrap_err(),
            SynthError::ZeroTokenLen
        );
        assert_eq!(
            synth_token_scores("abc", "b", 0.0, 1, false).unwrap_err(),
            SynthError::NonPositiveNll(0.0)
        );
        assert_eq!(
            synth_token_scores("abc", "b", 1.0, 9, false).unwrap_err(),
            SynthError::TokenLenExceedsText {
                token_len: 9,
                text_chars: 3
            }
        );
        assert_eq!(
            synth_token_scores("abc", "zz", 1.0, 1, false).unwrap_err(),
            SynthError::MarkerNotFound
        );
    }
}
