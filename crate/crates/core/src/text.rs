//! Source text, character spans and literal phrase replacement.
//!
//! Every offset in this crate is a Unicode scalar-value index into the
//! addressed string, never a byte offset. The helpers here translate between
//! the two internally.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TextError;

/// A document handed to the pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceText {
    pub id: String,
    pub content: String,
}

impl SourceText {
    pub fn new(id: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            content: content.into(),
        }
    }

    /// Length in characters.
    pub fn len(&self) -> usize {
        char_len(&self.content)
    }

    pub fn is_empty(&self) -> bool {
        self.content.is_empty()
    }

    pub fn find(&self, phrase: &str, opts: MatchOptions) -> Vec<Span> {
        find_occurrences(&self.content, phrase, opts)
    }

    /// Substring addressed by `span`, or `None` when the span is out of bounds.
    pub fn slice(&self, span: Span) -> Option<&str> {
        slice_chars(&self.content, span)
    }
}

/// Half-open character interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub const fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub const fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub const fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// `other` lies within `self` (equal spans contain each other).
    pub const fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn union(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// One substitution of `original` (found at `span`) by `token`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub span: Span,
    pub original: String,
    pub token: String,
}

impl Replacement {
    pub fn new(span: Span, original: impl Into<String>, token: impl Into<String>) -> Self {
        Self {
            span,
            original: original.into(),
            token: token.into(),
        }
    }
}

/// Literal phrase matching options. Both flags default to `true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchOptions {
    pub case_sensitive: bool,
    pub whole_word: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            case_sensitive: true,
            whole_word: true,
        }
    }
}

impl MatchOptions {
    pub const EXACT: MatchOptions = MatchOptions {
        case_sensitive: true,
        whole_word: true,
    };
}

/// A match produced by [`find_phrases`]; `phrase` indexes the input slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch {
    pub span: Span,
    pub phrase: usize,
}

#[inline]
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Byte offset of every character plus a trailing entry for `s.len()`.
pub(crate) fn byte_offsets(s: &str) -> Vec<usize> {
    let mut offsets: Vec<usize> = s.char_indices().map(|(b, _)| b).collect();
    offsets.push(s.len());
    offsets
}

pub fn slice_chars(s: &str, span: Span) -> Option<&str> {
    if span.start > span.end {
        return None;
    }
    let mut start_byte = None;
    let mut end_byte = None;
    for (idx, (b, _)) in s.char_indices().enumerate() {
        if idx == span.start {
            start_byte = Some(b);
        }
        if idx == span.end {
            end_byte = Some(b);
            break;
        }
    }
    let n = char_len(s);
    if span.start == n {
        start_byte = Some(s.len());
    }
    if span.end == n {
        end_byte = Some(s.len());
    }
    Some(&s[start_byte?..end_byte?])
}

fn chars_eq(a: char, b: char, case_sensitive: bool) -> bool {
    a == b || (!case_sensitive && a.to_lowercase().eq(b.to_lowercase()))
}

fn matches_at(hay: &[char], at: usize, needle: &[char], opts: MatchOptions) -> bool {
    let end = at + needle.len();
    if end > hay.len() {
        return false;
    }
    if !hay[at..end]
        .iter()
        .zip(needle)
        .all(|(&h, &n)| chars_eq(h, n, opts.case_sensitive))
    {
        return false;
    }
    if opts.whole_word {
        if at > 0 && is_word_char(hay[at - 1]) {
            return false;
        }
        if end < hay.len() && is_word_char(hay[end]) {
            return false;
        }
    }
    true
}

/// All non-overlapping occurrences of `phrase`, scanned left to right.
///
/// An empty phrase matches nothing.
pub fn find_occurrences(text: &str, phrase: &str, opts: MatchOptions) -> Vec<Span> {
    let hay: Vec<char> = text.chars().collect();
    let needle: Vec<char> = phrase.chars().collect();
    find_in_chars(&hay, &needle, opts)
}

pub(crate) fn find_in_chars(hay: &[char], needle: &[char], opts: MatchOptions) -> Vec<Span> {
    let mut out = Vec::new();
    if needle.is_empty() {
        return out;
    }
    let mut i = 0;
    while i + needle.len() <= hay.len() {
        if matches_at(hay, i, needle, opts) {
            out.push(Span::new(i, i + needle.len()));
            i += needle.len();
        } else {
            i += 1;
        }
    }
    out
}

/// Matches several phrases at once. Overlapping candidates are resolved
/// longest first, then leftmost, then by phrase order. The result is sorted by
/// start and never overlaps.
pub fn find_phrases<S: AsRef<str>>(text: &str, phrases: &[S], opts: MatchOptions) -> Vec<PhraseMatch> {
    let hay: Vec<char> = text.chars().collect();
    let mut candidates = Vec::new();
    for (idx, phrase) in phrases.iter().enumerate() {
        let needle: Vec<char> = phrase.as_ref().chars().collect();
        if needle.is_empty() {
            continue;
        }
        for at in 0..hay.len() {
            if matches_at(&hay, at, &needle, opts) {
                candidates.push(PhraseMatch {
                    span: Span::new(at, at + needle.len()),
                    phrase: idx,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.span
            .len()
            .cmp(&a.span.len())
            .then(a.span.start.cmp(&b.span.start))
            .then(a.phrase.cmp(&b.phrase))
    });
    let mut accepted: Vec<PhraseMatch> = Vec::new();
    for cand in candidates {
        if accepted.iter().all(|m| !m.span.overlaps(&cand.span)) {
            accepted.push(cand);
        }
    }
    accepted.sort_by_key(|m| m.span.start);
    accepted
}

fn check_token(token: &str) -> Result<(), TextError> {
    if token.is_empty() || token.contains(['\n', '\r']) {
        return Err(TextError::InvalidToken(token.into()));
    }
    Ok(())
}

/// Substitutes every replacement's span by its token.
///
/// Spans address the original `text`; replacements are applied right to left
/// so earlier offsets stay valid. The returned list echoes the input.
pub fn apply_replacements(
    text: &str,
    reps: &[Replacement],
) -> Result<(String, Vec<Replacement>), TextError> {
    let offsets = byte_offsets(text);
    let n_chars = offsets.len() - 1;

    for rep in reps {
        if rep.span.is_empty() || rep.span.end > n_chars {
            return Err(TextError::SpanOutOfBounds {
                span: rep.span,
                len: n_chars,
            });
        }
        let found = &text[offsets[rep.span.start]..offsets[rep.span.end]];
        if found != rep.original {
            return Err(TextError::OriginalMismatch {
                span: rep.span,
                expected: rep.original.clone(),
                found: found.into(),
            });
        }
        check_token(&rep.token)?;
    }

    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by_key(|&i| reps[i].span);
    for pair in order.windows(2) {
        let (a, b) = (reps[pair[0]].span, reps[pair[1]].span);
        if a.overlaps(&b) {
            return Err(TextError::OverlappingSpans(a, b));
        }
    }

    let mut out = String::from(text);
    for &i in order.iter().rev() {
        let rep = &reps[i];
        out.replace_range(offsets[rep.span.start]..offsets[rep.span.end], &rep.token);
    }
    Ok((out, reps.to_vec()))
}

/// Unchecked splice: `edits` must be disjoint, in bounds and sorted by start.
pub(crate) fn splice(text: &str, edits: &[(Span, &str)]) -> String {
    let offsets = byte_offsets(text);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for (span, with) in edits {
        out.push_str(&text[offsets[cursor]..offsets[span.start]]);
        out.push_str(with);
        cursor = span.end;
    }
    out.push_str(&text[offsets[cursor]..]);
    out
}

/// Maps a character offset of the input of [`apply_replacements`] to the
/// corresponding offset in its output. `pos` must not fall strictly inside a
/// replaced span.
pub fn shift_offset(pos: usize, reps: &[Replacement]) -> Option<usize> {
    let mut shifted = pos as isize;
    for rep in reps {
        if rep.span.start < pos && pos < rep.span.end {
            return None;
        }
        if rep.span.end <= pos {
            shifted += char_len(&rep.token) as isize - rep.span.len() as isize;
        }
    }
    usize::try_from(shifted).ok()
}
