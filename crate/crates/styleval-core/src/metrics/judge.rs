//! Integer score extraction from free-form judge replies.
//!
//! Judges are asked to end with `Score: <integer>`, but replies drift, so
//! extraction runs through three patterns, taking the last match of the
//! first pattern that matches anywhere:
//!
//! 1. Score line: `score` (ASCII case-insensitive, not preceded by an
//!    alphanumeric character), optional spaces or tabs, `:`, optional
//!    whitespace, then a digit run. A fractional tail after the run is
//!    truncated. Values above 100 clamp to 100 and set the clamp flag.
//! 2. Ratio: a digit run, optional whitespace, `/` or `out of` (ASCII
//!    case-insensitive), optional whitespace, then the literal `100` with no
//!    digit following. The numerator must not sit inside a word or be the
//!    fractional part of a decimal. Numerators above 100 clamp as above.
//! 3. Standalone integer: the last maximal digit run with no alphanumeric
//!    neighbor, no leading minus sign, not part of a decimal number, whose
//!    value is at most 100. No clamping here; larger numbers are simply not
//!    candidates.
//!
//! If no pattern matches, extraction fails and the caller decides whether to
//! retry or record the response as unscored.

use alloc::vec::Vec;

use thiserror::Error;

/// An extracted judge grade in 0 to 100.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JudgeScore {
    pub score: u8,
    /// True when the raw number exceeded 100 and was clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgeParseError {
    #[error("no score found in judge reply")]
    NoScore,
}

/// Parses a digit run starting at `i`. Values saturate at 1000, enough to
/// tell "needs clamping" from anything in range.
fn digit_run(chars: &[char], i: usize) -> Option<(u32, usize)> {
    if i >= chars.len() || !chars[i].is_ascii_digit() {
        return None;
    }
    let mut value: u32 = 0;
    let mut end = i;
    while end < chars.len() && chars[end].is_ascii_digit() {
        value = (value * 10 + chars[end].to_digit(10).unwrap()).min(1000);
        end += 1;
    }
    Some((value, end))
}

fn is_run_start(chars: &[char], i: usize) -> bool {
    chars[i].is_ascii_digit() && (i == 0 || !chars[i - 1].is_ascii_digit())
}

fn skip_whitespace(chars: &[char], mut i: usize) -> usize {
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    i
}

fn matches_ci(chars: &[char], i: usize, word: &str) -> bool {
    let word: Vec<char> = word.chars().collect();
    chars.len() - i >= word.len()
        && word
            .iter()
            .zip(&chars[i..])
            .all(|(w, c)| w.eq_ignore_ascii_case(c))
}

/// The fractional part of a decimal, like the `5` in `3.5`.
fn is_decimal_tail(chars: &[char], run_start: usize) -> bool {
    run_start >= 2 && chars[run_start - 1] == '.' && chars[run_start - 2].is_ascii_digit()
}

/// The integer part of a decimal, like the `3` in `3.5`.
fn is_decimal_head(chars: &[char], run_end: usize) -> bool {
    run_end + 1 < chars.len() && chars[run_end] == '.' && chars[run_end + 1].is_ascii_digit()
}

fn last_score_line(chars: &[char]) -> Option<u32> {
    let mut found = None;
    for i in 0..chars.len() {
        if !matches_ci(chars, i, "score") {
            continue;
        }
        if i > 0 && chars[i - 1].is_ascii_alphanumeric() {
            continue;
        }
        let mut j = i + 5;
        while j < chars.len() && matches!(chars[j], ' ' | '\t') {
            j += 1;
        }
        if j >= chars.len() || chars[j] != ':' {
            continue;
        }
        j = skip_whitespace(chars, j + 1);
        if let Some((value, _)) = digit_run(chars, j) {
            found = Some(value);
        }
    }
    found
}

fn last_ratio_of_100(chars: &[char]) -> Option<u32> {
    let mut found = None;
    for i in 0..chars.len() {
        if !is_run_start(chars, i) {
            continue;
        }
        if i > 0 && chars[i - 1].is_ascii_alphanumeric() {
            continue;
        }
        if is_decimal_tail(chars, i) {
            continue;
        }
        let (value, run_end) = digit_run(chars, i).expect("run start has digits");
        let mut j = skip_whitespace(chars, run_end);
        if j < chars.len() && chars[j] == '/' {
            j = skip_whitespace(chars, j + 1);
        } else if matches_ci(chars, j, "out") {
            j = skip_whitespace(chars, j + 3);
            if !matches_ci(chars, j, "of") {
                continue;
            }
            j = skip_whitespace(chars, j + 2);
        } else {
            continue;
        }
        let denominator_ok = matches_ci(chars, j, "100")
            && (j + 3 >= chars.len() || !chars[j + 3].is_ascii_digit());
        if denominator_ok {
            found = Some(value);
        }
    }
    found
}

fn last_standalone_int(chars: &[char]) -> Option<u32> {
    let mut found = None;
    for i in 0..chars.len() {
        if !is_run_start(chars, i) {
            continue;
        }
        if i > 0 {
            let prev = chars[i - 1];
            if prev.is_ascii_alphanumeric() || prev == '-' {
                continue;
            }
        }
        if is_decimal_tail(chars, i) {
            continue;
        }
        let (value, run_end) = digit_run(chars, i).expect("run start has digits");
        if run_end < chars.len() && chars[run_end].is_ascii_alphanumeric() {
            continue;
        }
        if is_decimal_head(chars, run_end) {
            continue;
        }
        if value <= 100 {
            found = Some(value);
        }
    }
    found
}

/// Extracts the grade from a raw judge reply per the module rules.
pub fn extract_judge_score(raw: &str) -> Result<JudgeScore, JudgeParseError> {
    let chars: Vec<char> = raw.chars().collect();
    let clampable = last_score_line(&chars).or_else(|| last_ratio_of_100(&chars));
    if let Some(value) = clampable {
        return Ok(JudgeScore {
            score: value.min(100) as u8,
            clamped: value > 100,
        });
    }
    if let Some(value) = last_standalone_int(&chars) {
        return Ok(JudgeScore {
            score: value as u8,
            clamped: false,
        });
    }
    Err(JudgeParseError::NoScore)
}
