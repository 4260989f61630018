//! Deterministic entity and noun-phrase taggers.
//!
//! Both taggers work on a word segmentation where a word is a maximal run of
//! alphanumeric characters. Two words are *adjacent* when only spaces or tabs
//! separate them; punctuation and line breaks always end a run.
//!
//! Entity tagging unions gazetteer hits with runs of two or more capitalized
//! words. Noun tagging collects proper-noun runs and, when enabled, common
//! nouns from a word list or suffix rules. Overlapping candidates are merged
//! into their union, so a nested candidate is absorbed by the longest one and
//! a sensitive phrase is never left half visible.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::text::{find_in_chars, is_word_char, MatchOptions, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TagKind {
    Entity,
    NounPhrase,
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TagKind::Entity => "ENTITY",
            TagKind::NounPhrase => "NOUN_PHRASE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSpan {
    pub span: Span,
    pub surface: String,
    pub kind: TagKind,
}

/// Anything that can propose spans for a tagging stage.
///
/// Implementations must return non-overlapping spans sorted by start whose
/// `surface` equals the addressed substring. An external tagger service can
/// sit behind this trait.
pub trait SpanTagger {
    fn kind(&self) -> TagKind;
    fn tag(&self, text: &str) -> Vec<TaggedSpan>;
}

/// Capitalized words that never start or extend an entity or proper-noun run.
const FUNCTION_WORDS: &[&str] = &[
    "A", "According", "After", "Also", "Although", "An", "And", "Answer", "Are", "As", "At",
    "Be", "Because", "Before", "But", "By", "Did", "Do", "Does", "During", "For", "From", "He",
    "Her", "Here", "His", "How", "However", "I", "If", "In", "Is", "It", "Its", "My", "No",
    "Not", "Of", "On", "Or", "Our", "Overall", "Please", "She", "Since", "So", "Summarize",
    "That", "The", "Their", "Then", "There", "These", "They", "This", "Those", "Thus", "To",
    "Was", "We", "Were", "What", "When", "Where", "Which", "While", "Who", "Whom", "Why",
    "With", "Yes", "You", "Your",
];

/// Determiners absorbed into a following entity run when sentence-initial.
const LEADING_DETERMINERS: &[&str] = &["The"];

fn is_function_word(w: &str) -> bool {
    FUNCTION_WORDS.binary_search(&w).is_ok()
}

#[derive(Debug, Clone)]
struct Word {
    span: Span,
    text: String,
    capitalized: bool,
    sentence_initial: bool,
    /// Joined to the previous word by horizontal whitespace only.
    adjacent_to_prev: bool,
}

fn segment(chars: &[char]) -> Vec<Word> {
    let mut words: Vec<Word> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_word_char(chars[i]) {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && is_word_char(chars[i]) {
            i += 1;
        }
        let gap_start = words.last().map_or(0, |w| w.span.end);
        let gap = &chars[gap_start..start];
        let adjacent_to_prev =
            !words.is_empty() && gap.iter().all(|&c| c == ' ' || c == '\t');
        words.push(Word {
            span: Span::new(start, i),
            text: chars[start..i].iter().collect(),
            capitalized: chars[start].is_uppercase(),
            sentence_initial: is_sentence_initial(chars, start),
            adjacent_to_prev,
        });
    }
    words
}

fn is_sentence_initial(chars: &[char], start: usize) -> bool {
    for &c in chars[..start].iter().rev() {
        match c {
            '\n' | '\r' => return true,
            c if c.is_whitespace() => continue,
            '"' | '\'' | '(' | '[' | '{' | '\u{201c}' | '\u{2018}' => continue,
            '.' | '!' | '?' => return true,
            _ => return false,
        }
    }
    true
}

/// Merges overlapping spans into their union; output is sorted and disjoint.
/// Touching spans (`a.end == b.start`) stay separate.
pub fn merge_overlapping(mut spans: Vec<Span>) -> Vec<Span> {
    spans.sort();
    let mut out: Vec<Span> = Vec::with_capacity(spans.len());
    for span in spans {
        match out.last_mut() {
            Some(last) if last.overlaps(&span) => *last = last.union(&span),
            _ => out.push(span),
        }
    }
    out
}

pub(crate) fn to_tagged(chars: &[char], spans: Vec<Span>, kind: TagKind) -> Vec<TaggedSpan> {
    spans
        .into_iter()
        .map(|span| TaggedSpan {
            span,
            surface: chars[span.start..span.end].iter().collect(),
            kind,
        })
        .collect()
}

/// Parses a phrase list: one phrase per line, blank lines and lines starting
/// with `#` ignored, surrounding whitespace trimmed.
pub fn parse_phrase_list(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(ToString::to_string)
        .collect()
}

/// Curated phrase list for entity detection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    entries: BTreeSet<String>,
    case_insensitive: bool,
}

impl Gazetteer {
    pub fn new<I, S>(entries: I, case_insensitive: bool) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for e in entries {
            let e: String = e.into();
            let e = e.trim();
            if e.is_empty() {
                return Err(ConfigError::EmptyEntry);
            }
            set.insert(e.to_string());
        }
        Ok(Self {
            entries: set,
            case_insensitive,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_list(content: &str, case_insensitive: bool) -> Result<Self, ConfigError> {
        Self::new(parse_phrase_list(content), case_insensitive)
    }

    pub fn entries(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    pub fn is_case_insensitive(&self) -> bool {
        self.case_insensitive
    }

    pub fn insert(&mut self, phrase: impl Into<String>) -> Result<(), ConfigError> {
        let phrase: String = phrase.into();
        if phrase.trim().is_empty() {
            return Err(ConfigError::EmptyEntry);
        }
        self.entries.insert(phrase.trim().to_string());
        Ok(())
    }
}

/// Entities in `text`: gazetteer hits plus capitalized runs, merged.
pub fn tag_entities(text: &str, gaz: &Gazetteer) -> Vec<TaggedSpan> {
    let chars: Vec<char> = text.chars().collect();
    let words = segment(&chars);
    let mut candidates = capitalized_runs(&words);

    let opts = MatchOptions {
        case_sensitive: !gaz.case_insensitive,
        whole_word: true,
    };
    for entry in &gaz.entries {
        let needle: Vec<char> = entry.chars().collect();
        candidates.extend(find_in_chars(&chars, &needle, opts));
    }
    to_tagged(&chars, merge_overlapping(candidates), TagKind::Entity)
}

fn capitalized_runs(words: &[Word]) -> Vec<Span> {
    let eligible = |w: &Word| w.capitalized && !is_function_word(&w.text);
    let mut spans = Vec::new();
    let mut i = 0;
    while i < words.len() {
        if !eligible(&words[i]) {
            i += 1;
            continue;
        }
        let first = i;
        i += 1;
        while i < words.len() && words[i].adjacent_to_prev && eligible(&words[i]) {
            i += 1;
        }
        if i - first < 2 {
            continue;
        }
        let mut start = words[first].span.start;
        if first > 0 {
            let prev = &words[first - 1];
            if words[first].adjacent_to_prev
                && prev.sentence_initial
                && LEADING_DETERMINERS.contains(&prev.text.as_str())
            {
                start = prev.span.start;
            }
        }
        spans.push(Span::new(start, words[i - 1].span.end));
    }
    spans
}

impl SpanTagger for Gazetteer {
    fn kind(&self) -> TagKind {
        TagKind::Entity
    }

    fn tag(&self, text: &str) -> Vec<TaggedSpan> {
        tag_entities(text, self)
    }
}

/// Word lists and switches driving noun-phrase detection.
///
/// `exclusions` holds capitalized words that are never treated as proper
/// nouns; the default list keeps generic document heads such as "Report"
/// outside noun runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NounLexicon {
    pub proper_nouns: bool,
    pub common_nouns_enabled: bool,
    pub common_nouns: BTreeSet<String>,
    pub suffix_rules: Vec<String>,
    pub exclusions: BTreeSet<String>,
}

pub const DEFAULT_NOUN_SUFFIXES: &[&str] = &["tion", "sion", "ment", "ness", "ity", "ship", "ance", "ence"];
pub const DEFAULT_EXCLUSIONS: &[&str] = &["Document", "Memo", "Report", "Summary"];

impl Default for NounLexicon {
    fn default() -> Self {
        Self {
            proper_nouns: true,
            common_nouns_enabled: false,
            common_nouns: BTreeSet::new(),
            suffix_rules: DEFAULT_NOUN_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            exclusions: DEFAULT_EXCLUSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl NounLexicon {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.suffix_rules.iter().any(|s| s.is_empty())
            || self.common_nouns.iter().any(|s| s.is_empty())
        {
            return Err(ConfigError::EmptyEntry);
        }
        Ok(())
    }

    fn is_common_noun(&self, word: &str) -> bool {
        if !self.common_nouns_enabled {
            return false;
        }
        let lower = word.to_lowercase();
        if self.common_nouns.contains(&lower) {
            return true;
        }
        let n = lower.chars().count();
        self.suffix_rules
            .iter()
            .any(|s| lower.ends_with(s.as_str()) && n > s.chars().count() + 2)
    }

    fn is_proper_candidate(&self, w: &Word) -> bool {
        self.proper_nouns
            && w.capitalized
            && !is_function_word(&w.text)
            && !self.exclusions.contains(&w.text)
    }
}

/// Noun phrases in `text`: merged runs of adjacent noun words.
///
/// A capitalized word counts as a proper noun unless it is a function word, an
/// exclusion, or sentence-initial without a capitalized successor.
pub fn tag_nouns(text: &str, lex: &NounLexicon) -> Vec<TaggedSpan> {
    let chars: Vec<char> = text.chars().collect();
    let words = segment(&chars);

    let proper: Vec<bool> = words.iter().map(|w| lex.is_proper_candidate(w)).collect();
    let is_noun: Vec<bool> = words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            if proper[i] {
                let followed = i + 1 < words.len() && words[i + 1].adjacent_to_prev && proper[i + 1];
                !w.sentence_initial || followed
            } else {
                !w.capitalized && lex.is_common_noun(&w.text)
            }
        })
        .collect();

    let mut spans = Vec::new();
    let mut i = 0;
    while i < words.len() {
        if !is_noun[i] {
            i += 1;
            continue;
        }
        let first = i;
        i += 1;
        while i < words.len() && words[i].adjacent_to_prev && is_noun[i] {
            i += 1;
        }
        spans.push(Span::new(words[first].span.start, words[i - 1].span.end));
    }
    to_tagged(&chars, spans, TagKind::NounPhrase)
}

impl SpanTagger for NounLexicon {
    fn kind(&self) -> TagKind {
        TagKind::NounPhrase
    }

    fn tag(&self, text: &str) -> Vec<TaggedSpan> {
        tag_nouns(text, self)
    }
}
