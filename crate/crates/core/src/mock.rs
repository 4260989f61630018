//! Deterministic stand-in for an LLM endpoint.
//!
//! `knowledge_override` simulates a model that prefers what it was trained on:
//! when the question names a term it "knows", it answers from its knowledge
//! base even though the prompt's context says otherwise, unless it honours an
//! appended instruction.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::prompt::Prompt;
use crate::text::{find_phrases, is_word_char, MatchOptions};

/// Reply used when nothing in the context matches and no sentinel is known.
pub const NO_ANSWER: &str = "I don't know.";

const STOPWORDS: &[&str] = &[
    "a", "about", "an", "and", "are", "as", "at", "be", "by", "did", "do", "does", "for",
    "from", "give", "how", "in", "is", "it", "its", "me", "of", "on", "or", "please", "tell",
    "that", "the", "this", "to", "was", "were", "what", "when", "where", "which", "who",
    "whom", "why", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockMode {
    Echo,
    Extractive,
    KnowledgeOverride,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBehavior")]
pub struct MockBehavior {
    mode: MockMode,
    knowledge_base: BTreeMap<String, String>,
    honor_instruction: bool,
}

#[derive(Deserialize)]
struct RawBehavior {
    mode: MockMode,
    #[serde(default)]
    knowledge_base: BTreeMap<String, String>,
    #[serde(default = "yes")]
    honor_instruction: bool,
}

fn yes() -> bool {
    true
}

impl TryFrom<RawBehavior> for MockBehavior {
    type Error = ConfigError;

    fn try_from(raw: RawBehavior) -> Result<Self, Self::Error> {
        MockBehavior::new(raw.mode, raw.knowledge_base, raw.honor_instruction)
    }
}

impl MockBehavior {
    /// The knowledge base must be non-empty exactly when the mode is
    /// `KnowledgeOverride`.
    pub fn new(
        mode: MockMode,
        knowledge_base: BTreeMap<String, String>,
        honor_instruction: bool,
    ) -> Result<Self, ConfigError> {
        match (mode, knowledge_base.is_empty()) {
            (MockMode::KnowledgeOverride, true) => {
                return Err(ConfigError::Mock("knowledge_override needs a knowledge base"))
            }
            (MockMode::Echo | MockMode::Extractive, false) => {
                return Err(ConfigError::Mock("knowledge base given for a mode that ignores it"))
            }
            _ => {}
        }
        if knowledge_base.keys().any(|k| k.trim().is_empty()) {
            return Err(ConfigError::Mock("empty knowledge base term"));
        }
        Ok(Self {
            mode,
            knowledge_base,
            honor_instruction,
        })
    }

    pub fn echo() -> Self {
        Self {
            mode: MockMode::Echo,
            knowledge_base: BTreeMap::new(),
            honor_instruction: true,
        }
    }

    pub fn extractive() -> Self {
        Self {
            mode: MockMode::Extractive,
            knowledge_base: BTreeMap::new(),
            honor_instruction: true,
        }
    }

    pub fn mode(&self) -> MockMode {
        self.mode
    }

    pub fn knowledge_base(&self) -> &BTreeMap<String, String> {
        &self.knowledge_base
    }

    pub fn honor_instruction(&self) -> bool {
        self.honor_instruction
    }
}

/// Where a mock reply came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplySource {
    Echo,
    Context,
    KnowledgeBase,
    Sentinel,
    NoAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockReply {
    pub text: String,
    pub source: ReplySource,
}

impl MockReply {
    /// The reply ignored the supplied context in favour of stored knowledge.
    pub fn is_sensitive(&self) -> bool {
        self.source == ReplySource::KnowledgeBase
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockLlm {
    behavior: MockBehavior,
}

impl MockLlm {
    pub fn new(behavior: MockBehavior) -> Self {
        Self { behavior }
    }

    pub fn behavior(&self) -> &MockBehavior {
        &self.behavior
    }

    pub fn respond(&self, prompt: &Prompt) -> MockReply {
        let instructed = prompt.instruction.is_some() && self.behavior.honor_instruction;
        match self.behavior.mode {
            MockMode::Echo => MockReply {
                text: prompt.context.clone(),
                source: ReplySource::Echo,
            },
            MockMode::Extractive => self.extract(prompt, instructed),
            MockMode::KnowledgeOverride => {
                if !instructed {
                    if let Some(answer) = self.recall(&prompt.question) {
                        return MockReply {
                            text: answer.to_string(),
                            source: ReplySource::KnowledgeBase,
                        };
                    }
                }
                self.extract(prompt, instructed)
            }
        }
    }

    fn recall(&self, question: &str) -> Option<&str> {
        let terms: Vec<&String> = self.behavior.knowledge_base.keys().collect();
        find_phrases(question, &terms, MatchOptions::EXACT)
            .first()
            .map(|m| self.behavior.knowledge_base[terms[m.phrase]].as_str())
    }

    fn extract(&self, prompt: &Prompt, instructed: bool) -> MockReply {
        if let Some(sentence) = best_sentence(&prompt.context, &prompt.question) {
            return MockReply {
                text: sentence.to_string(),
                source: ReplySource::Context,
            };
        }
        match (&prompt.sentinel, instructed) {
            (Some(sentinel), true) => MockReply {
                text: sentinel.clone(),
                source: ReplySource::Sentinel,
            },
            _ => MockReply {
                text: NO_ANSWER.to_string(),
                source: ReplySource::NoAnswer,
            },
        }
    }
}

fn content_terms(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Splits after `.`, `!` or `?` followed by whitespace, and at line breaks.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let next_is_space = iter.peek().is_none_or(|&(_, n)| n.is_whitespace());
        let end = match c {
            '.' | '!' | '?' if next_is_space => Some(i + c.len_utf8()),
            '\n' => Some(i),
            _ => None,
        };
        if let Some(end) = end {
            let s = text[start..end].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// The earliest context sentence sharing the most content terms with the
/// question, if any shares at least one.
pub fn best_sentence<'a>(context: &'a str, question: &str) -> Option<&'a str> {
    let wanted = content_terms(question);
    let mut best: Option<(usize, &str)> = None;
    for sentence in sentences(context) {
        let score = content_terms(sentence).intersection(&wanted).count();
        if score > 0 && best.is_none_or(|(s, _)| score > s) {
            best = Some((score, sentence));
        }
    }
    best.map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::{build_prompt, PromptTemplate};
    use alloc::vec;

    const CONTEXT: &str = "Mango is a flowering plant that is widely recognized for its beauty, fragrance, and symbolic significance. It belongs to the family Rosaceae and is native to Asia but is now cultivated in many parts of the world. Mango comes in a variety of colors, such as red, pink, yellow, and white, and is commonly used in gardens, bouquets, and various decorative arrangements.";

    fn kb() -> MockBehavior {
        let mut kb = BTreeMap::new();
        kb.insert("Mango".to_string(), "Mango is a fruit.".to_string());
        MockBehavior::new(MockMode::KnowledgeOverride, kb, true).unwrap()
    }

    #[test]
    fn echo_returns_context() {
        let p = build_prompt(CONTEXT, "What is Mango?", None).unwrap();
        let reply = MockLlm::new(MockBehavior::echo()).respond(&p);
        assert_eq!(reply.text, CONTEXT);
    }

    #[test]
    fn knowledge_overrides_context_without_instruction() {
        let p = build_prompt(CONTEXT, "What is Mango?", None).unwrap();
        let reply = MockLlm::new(kb()).respond(&p);
        assert_eq!(reply.text, "Mango is a fruit.");
        assert!(reply.is_sensitive());
    }

    #[test]
    fn instruction_grounds_the_answer() {
        let t = PromptTemplate::default();
        let p = build_prompt(CONTEXT, "What is Mango?", Some(&t)).unwrap();
        let reply = MockLlm::new(kb()).respond(&p);
        assert_eq!(reply.source, ReplySource::Context);
        assert!(reply.text.starts_with("Mango is a flowering plant"));
    }

    #[test]
    fn ignored_instruction_still_overrides() {
        let mut base = BTreeMap::new();
        base.insert("Mango".to_string(), "Mango is a fruit.".to_string());
        let stubborn = MockBehavior::new(MockMode::KnowledgeOverride, base, false).unwrap();
        let p = build_prompt(CONTEXT, "What is Mango?", Some(&PromptTemplate::default())).unwrap();
        assert!(MockLlm::new(stubborn).respond(&p).is_sensitive());
    }

    #[test]
    fn sentinel_when_context_lacks_answer() {
        let t = PromptTemplate::default();
        let p = build_prompt(CONTEXT, "Who owns Facebook?", Some(&t)).unwrap();
        let reply = MockLlm::new(kb()).respond(&p);
        assert_eq!(reply.text, "NOT_IN_CONTEXT");
        assert_eq!(reply.source, ReplySource::Sentinel);
        let p = build_prompt(CONTEXT, "Who owns Facebook?", None).unwrap();
        assert_eq!(MockLlm::new(MockBehavior::extractive()).respond(&p).text, NO_ANSWER);
    }

    #[test]
    fn extractive_ties_pick_earliest() {
        let ctx = "Alpha grew. Beta grew. Alpha shrank.";
        assert_eq!(best_sentence(ctx, "What about Alpha?"), Some("Alpha grew."));
        assert_eq!(best_sentence(ctx, "Did Alpha shrink or shrank?"), Some("Alpha shrank."));
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(
            sentences("Revenue rose 1.5% in Q1. Costs fell!\nDone"),
            vec!["Revenue rose 1.5% in Q1.", "Costs fell!", "Done"]
        );
    }

    #[test]
    fn knowledge_base_required_iff_override() {
        assert!(MockBehavior::new(MockMode::KnowledgeOverride, BTreeMap::new(), true).is_err());
        let mut kb = BTreeMap::new();
        kb.insert("x".to_string(), "y".to_string());
        assert!(MockBehavior::new(MockMode::Echo, kb, true).is_err());
    }
}
