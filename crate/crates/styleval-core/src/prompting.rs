//! Prompt templates for response generation and judge grading.
//!
//! Templates are plain text with literal slot markers: `{style}`, `{query}`,
//! and optionally `{exemplars}` for generation; `{query}` and `{response}`
//! for judging. Slot counts are validated when a template is parsed, so a
//! malformed template fails before any request is built. Substitution is a
//! single left-to-right pass and substituted values are never rescanned,
//! which keeps brace characters in queries or responses inert.

use alloc::string::String;

use thiserror::Error;

use crate::corpus::FewShotExemplar;
use crate::style::StyleDirection;

/// Default prompt for style-conditioned generation. The `{exemplars}` block
/// expands to zero or more query/response pairs in corpus order.
pub const DEFAULT_GENERATION_TEMPLATE: &str = "You are replying in a conversation. Continue the exchange with a single {style} response to the last message.

{exemplars}Speaker: {query}
Response:";

/// Default prompt for appropriateness grading. The final-line format demand
/// is what the score extractor keys on first.
pub const DEFAULT_JUDGE_TEMPLATE: &str = "You are grading one reply from a conversation.

Speaker: {query}
Reply: {response}

Grade how appropriate the reply is as a response to the speaker's message, taking coherence, fluency, and fit to the context into account. Answer with a single integer from 0 to 100 on the final line, in exactly this form:
Score: <integer>";

const STYLE_SLOT: &str = "{style}";
const QUERY_SLOT: &str = "{query}";
const EXEMPLARS_SLOT: &str = "{exemplars}";
const RESPONSE_SLOT: &str = "{response}";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template must contain `{slot}` exactly once, found {found}")]
    SlotCount { slot: &'static str, found: usize },
    #[error("template may contain `{slot}` at most once, found {found}")]
    RepeatedSlot { slot: &'static str, found: usize },
    #[error("template contains `{slot}`, which this template kind never fills")]
    ForeignSlot { slot: &'static str },
    #[error("response is empty, nothing to grade")]
    EmptyResponse,
}

fn count_occurrences(text: &str, pattern: &str) -> usize {
    let mut count = 0;
    let mut rest = text;
    while let Some(pos) = rest.find(pattern) {
        count += 1;
        rest = &rest[pos + pattern.len()..];
    }
    count
}

fn require_once(text: &str, slot: &'static str) -> Result<(), TemplateError> {
    match count_occurrences(text, slot) {
        1 => Ok(()),
        found => Err(TemplateError::SlotCount { slot, found }),
    }
}

/// Replaces every literal slot occurrence in one pass. Substituted values are
/// copied verbatim and never rescanned for further slots.
fn substitute(text: &str, replacements: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    'outer: while !rest.is_empty() {
        for (pattern, value) in replacements {
            if let Some(stripped) = rest.strip_prefix(pattern) {
                out.push_str(value);
                rest = stripped;
                continue 'outer;
            }
        }
        let mut chars = rest.chars();
        out.push(chars.next().expect("rest is non-empty"));
        rest = chars.as_str();
    }
    out
}

/// Renders exemplars as the block substituted for `{exemplars}`. Each pair
/// mirrors the speaker/response framing of the query section and the block
/// ends with a blank separator line, so it can sit directly above the query.
pub fn render_exemplar_block(exemplars: &[FewShotExemplar]) -> String {
    let mut out = String::new();
    for exemplar in exemplars {
        out.push_str("Speaker: ");
        out.push_str(&exemplar.query);
        out.push_str("\nResponse: ");
        out.push_str(&exemplar.response);
        out.push_str("\n\n");
    }
    out
}

/// A validated generation template: exactly one `{style}`, exactly one
/// `{query}`, at most one `{exemplars}`, and no judge-only slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationTemplate {
    text: String,
}

impl GenerationTemplate {
    pub fn parse(text: impl Into<String>) -> Result<Self, TemplateError> {
        let text = text.into();
        require_once(&text, STYLE_SLOT)?;
        require_once(&text, QUERY_SLOT)?;
        let exemplar_slots = count_occurrences(&text, EXEMPLARS_SLOT);
        if exemplar_slots > 1 {
            return Err(TemplateError::RepeatedSlot {
                slot: EXEMPLARS_SLOT,
                found: exemplar_slots,
            });
        }
        if count_occurrences(&text, RESPONSE_SLOT) > 0 {
            return Err(TemplateError::ForeignSlot {
                slot: RESPONSE_SLOT,
            });
        }
        Ok(GenerationTemplate { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Renders the prompt for one (direction, query) pair. Exemplars are
    /// expanded in their stored order; if the template has no `{exemplars}`
    /// slot they are omitted.
    pub fn render(
        &self,
        direction: StyleDirection,
        exemplars: &[FewShotExemplar],
        query: &str,
    ) -> String {
        let block = render_exemplar_block(exemplars);
        substitute(
            &self.text,
            &[
                (STYLE_SLOT, direction.style_word()),
                (QUERY_SLOT, query),
                (EXEMPLARS_SLOT, block.as_str()),
            ],
        )
    }
}

impl Default for GenerationTemplate {
    fn default() -> Self {
        GenerationTemplate::parse(DEFAULT_GENERATION_TEMPLATE)
            .expect("default generation template is valid")
    }
}

/// A validated judge template: exactly one `{query}` and one `{response}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JudgeTemplate {
    text: String,
}

impl JudgeTemplate {
    pub fn parse(text: impl Into<String>) -> Result<Self, TemplateError> {
        let text = text.into();
        require_once(&text, QUERY_SLOT)?;
        require_once(&text, RESPONSE_SLOT)?;
        if count_occurrences(&text, STYLE_SLOT) > 0 {
            return Err(TemplateError::ForeignSlot { slot: STYLE_SLOT });
        }
        Ok(JudgeTemplate { text })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Renders the grading prompt with both the original query and the
    /// response under evaluation embedded verbatim.
    pub fn render(&self, query: &str, response: &str) -> Result<String, TemplateError> {
        if response.trim().is_empty() {
            return Err(TemplateError::EmptyResponse);
        }
        Ok(substitute(
            &self.text,
            &[(QUERY_SLOT, query), (RESPONSE_SLOT, response)],
        ))
    }
}

impl Default for JudgeTemplate {
    fn default() -> Self {
        JudgeTemplate::parse(DEFAULT_JUDGE_TEMPLATE).expect("default judge template is valid")
    }
}
