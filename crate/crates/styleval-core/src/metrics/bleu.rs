//! Sentence-level n-gram overlap scoring.
//!
//! The pipeline is the classic mteval one: the 13a tokenizer (punctuation
//! splitting with number-aware dot/comma and hyphen rules), clipped n-gram
//! precisions up to order 4, an effective order of `min(4, hyp_len)` for
//! short hypotheses, exponential smoothing for zero-match orders (the
//! smoothing denominator doubles each time an order comes up empty), and the
//! usual brevity penalty. Scores are 0 to 100 and case-sensitive.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::MetricsError;
use crate::fmath;

pub const MAX_ORDER: usize = 4;

/// Settings signature echoed into report metadata so scores stay comparable.
pub const BLEU_SIGNATURE: &str = "bleu|order:4|case:sensitive|tok:13a|smooth:exp";

/// A sentence score. `degenerate` marks the empty-hypothesis case, which is
/// defined as 0 but worth distinguishing from an earned zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuScore {
    pub score: f64,
    pub degenerate: bool,
}

fn is_splittable_punct(c: char) -> bool {
    // ASCII punctuation except dot, comma, hyphen, and apostrophe; those
    // four get the number-aware treatment in the later passes or none at all.
    matches!(c,
        '\u{20}'..='\u{26}'
        | '\u{28}'..='\u{2b}'
        | '/'
        | '\u{3a}'..='\u{40}'
        | '\u{5b}'..='\u{60}'
        | '\u{7b}'..='\u{7e}')
}

fn pad_punct(input: &[char], out: &mut Vec<char>) {
    for &c in input {
        if is_splittable_punct(c) {
            out.push(' ');
            out.push(c);
            out.push(' ');
        } else {
            out.push(c);
        }
    }
}

/// Dot or comma after a non-digit gets both characters padded. The scan
/// consumes two characters per match, mirroring non-overlapping regex
/// substitution, so `..a` becomes `. . a` and not `.  . a`.
fn pad_dot_after_nondigit(input: &[char], out: &mut Vec<char>) {
    let mut i = 0;
    while i < input.len() {
        if i + 1 < input.len()
            && !input[i].is_ascii_digit()
            && matches!(input[i + 1], '.' | ',')
        {
            out.push(input[i]);
            out.push(' ');
            out.push(input[i + 1]);
            out.push(' ');
            i += 2;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
}

fn pad_dot_before_nondigit(input: &[char], out: &mut Vec<char>) {
    let mut i = 0;
    while i < input.len() {
        if i + 1 < input.len()
            && matches!(input[i], '.' | ',')
            && !input[i + 1].is_ascii_digit()
        {
            out.push(' ');
            out.push(input[i]);
            out.push(' ');
            out.push(input[i + 1]);
            i += 2;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
}

fn pad_dash_after_digit(input: &[char], out: &mut Vec<char>) {
    let mut i = 0;
    while i < input.len() {
        if i + 1 < input.len() && input[i].is_ascii_digit() && input[i + 1] == '-' {
            out.push(input[i]);
            out.push(' ');
            out.push('-');
            out.push(' ');
            i += 2;
        } else {
            out.push(input[i]);
            i += 1;
        }
    }
}

/// The 13a tokenizer. Case is preserved; non-ASCII text passes through
/// untouched apart from whitespace splitting.
pub fn tokenize_13a(line: &str) -> Vec<String> {
    let line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ")
        .replace("&quot;", "\"")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">");
    let padded: Vec<char> = core::iter::once(' ')
        .chain(line.chars())
        .chain(core::iter::once(' '))
        .collect();

    let mut a = Vec::with_capacity(padded.len() * 2);
    pad_punct(&padded, &mut a);
    let mut b = Vec::with_capacity(a.len());
    pad_dot_after_nondigit(&a, &mut b);
    let mut c = Vec::with_capacity(b.len());
    pad_dot_before_nondigit(&b, &mut c);
    let mut d = Vec::with_capacity(c.len());
    pad_dash_after_digit(&c, &mut d);

    let joined: String = d.into_iter().collect();
    joined.split_whitespace().map(String::from).collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], usize> {
    let mut counts: BTreeMap<&[String], usize> = BTreeMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_matches(hyp: &[String], reference: &[String], n: usize) -> usize {
    let ref_counts = ngram_counts(reference, n);
    ngram_counts(hyp, n)
        .into_iter()
        .map(|(gram, count)| count.min(ref_counts.get(gram).copied().unwrap_or(0)))
        .sum()
}

/// Scores one hypothesis against one reference. An empty reference (after
/// tokenization) is a data error; an empty hypothesis scores a degenerate 0.
pub fn sentence_bleu(hypothesis: &str, reference: &str) -> Result<BleuScore, MetricsError> {
    let ref_tokens = tokenize_13a(reference);
    if ref_tokens.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let hyp_tokens = tokenize_13a(hypothesis);
    if hyp_tokens.is_empty() {
        return Ok(BleuScore {
            score: 0.0,
            degenerate: true,
        });
    }

    let effective_order = MAX_ORDER.min(hyp_tokens.len());
    let mut smooth = 1.0f64;
    let mut log_precision_sum = 0.0f64;
    for n in 1..=effective_order {
        let total = hyp_tokens.len() - n + 1;
        let matched = clipped_matches(&hyp_tokens, &ref_tokens, n);
        let precision = if matched == 0 {
            smooth *= 2.0;
            1.0 / (smooth * total as f64)
        } else {
            matched as f64 / total as f64
        };
        log_precision_sum += fmath::ln(precision);
    }

    let brevity_penalty = if hyp_tokens.len() < ref_tokens.len() {
        fmath::exp(1.0 - ref_tokens.len() as f64 / hyp_tokens.len() as f64)
    } else {
        1.0
    };
    Ok(BleuScore {
        score: 100.0 * brevity_penalty * fmath::exp(log_precision_sum / effective_order as f64),
        degenerate: false,
    })
}
