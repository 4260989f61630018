//! Obfuscation stages, synonym canonicalization, pipeline composition and
//! the inverse re-transformation.
//!
//! A pipeline runs canonicalization once and then its stages in order, each
//! stage consuming the previous stage's output. Tokens issued by an earlier
//! stage are protected: a later stage may wrap a token inside a larger
//! replaced phrase but never splits one. Re-transformation inverts the stages
//! in reverse order, so wrapped tokens resurface before their own stage is
//! inverted.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, MappingError, TransformError};
use crate::mapping::{MappingEntry, MappingTable};
use crate::tagger::{merge_overlapping, Gazetteer, NounLexicon, SpanTagger, TagKind};
use crate::text::{
    apply_replacements, find_occurrences, find_phrases, is_word_char, shift_offset, splice,
    MatchOptions, Replacement, Span,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StageKind {
    #[serde(rename = "UPT")]
    Upt,
    #[serde(rename = "NER")]
    Ner,
    #[serde(rename = "POS")]
    Pos,
}

impl StageKind {
    pub const ALL: [StageKind; 3] = [StageKind::Upt, StageKind::Ner, StageKind::Pos];

    /// Prefix of generated tokens; UPT tokens come from the user.
    pub fn token_prefix(self) -> Option<&'static str> {
        match self {
            StageKind::Upt => None,
            StageKind::Ner => Some("N"),
            StageKind::Pos => Some("P"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StageKind::Upt => "UPT",
            StageKind::Ner => "NER",
            StageKind::Pos => "PoS",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StageKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upt" => Ok(StageKind::Upt),
            "ner" => Ok(StageKind::Ner),
            "pos" => Ok(StageKind::Pos),
            other => Err(ConfigError::UnknownStage(other.to_string())),
        }
    }
}

impl From<TagKind> for StageKind {
    fn from(kind: TagKind) -> Self {
        match kind {
            TagKind::Entity => StageKind::Ner,
            TagKind::NounPhrase => StageKind::Pos,
        }
    }
}

#[derive(Deserialize)]
struct RawSpec {
    stages: Vec<StageKind>,
    #[serde(default)]
    prompt_engineering: bool,
}

/// Ordered, duplicate-free list of one to three stages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct PipelineSpec {
    stages: Vec<StageKind>,
    prompt_engineering: bool,
}

impl TryFrom<RawSpec> for PipelineSpec {
    type Error = ConfigError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        PipelineSpec::new(raw.stages, raw.prompt_engineering)
    }
}

impl PipelineSpec {
    pub fn new(stages: Vec<StageKind>, prompt_engineering: bool) -> Result<Self, ConfigError> {
        if stages.is_empty() || stages.len() > 3 {
            return Err(ConfigError::StageCount(stages.len()));
        }
        let mut seen = BTreeSet::new();
        for &s in &stages {
            if !seen.insert(s) {
                return Err(ConfigError::RepeatedStage(s));
            }
        }
        Ok(Self {
            stages,
            prompt_engineering,
        })
    }

    /// Parses labels such as `UPT+NER`, `upt,pos` or `NER + PoS`.
    pub fn parse(label: &str) -> Result<Self, ConfigError> {
        let stages = label
            .split(['+', ','])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(StageKind::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(stages, false)
    }

    /// The seven technique combinations of the reference experiment, in
    /// report order.
    pub fn default_techniques() -> Vec<PipelineSpec> {
        use StageKind::*;
        [
            &[Upt][..],
            &[Ner],
            &[Pos],
            &[Upt, Ner],
            &[Upt, Pos],
            &[Ner, Pos],
            &[Upt, Ner, Pos],
        ]
        .iter()
        .map(|s| PipelineSpec {
            stages: s.to_vec(),
            prompt_engineering: false,
        })
        .collect()
    }

    pub fn stages(&self) -> &[StageKind] {
        &self.stages
    }

    pub fn prompt_engineering(&self) -> bool {
        self.prompt_engineering
    }

    pub fn with_prompt_engineering(mut self, on: bool) -> Self {
        self.prompt_engineering = on;
        self
    }

    pub fn stage_index(&self, kind: StageKind) -> Option<usize> {
        self.stages.iter().position(|&s| s == kind)
    }

    /// `UPT+NER+PoS` style label.
    pub fn label(&self) -> String {
        let parts: Vec<&str> = self.stages.iter().map(|s| s.label()).collect();
        parts.join("+")
    }
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// User-provided phrase -> token pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UptConfig {
    pairs: Vec<(String, String)>,
    #[serde(default)]
    match_options: MatchOptions,
}

impl UptConfig {
    pub fn new<I, P, T>(pairs: I, match_options: MatchOptions) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<String>,
        T: Into<String>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(p, t)| (p.into(), t.into()))
            .collect();
        let mut phrases = BTreeSet::new();
        let mut tokens = BTreeSet::new();
        for (phrase, token) in &pairs {
            if phrase.is_empty() || token.is_empty() || token.contains(['\n', '\r']) {
                return Err(ConfigError::EmptyEntry);
            }
            if !phrases.insert(phrase.as_str()) {
                return Err(ConfigError::DuplicatePhrase(phrase.clone()));
            }
            if !tokens.insert(token.as_str()) {
                return Err(ConfigError::DuplicateToken(token.clone()));
            }
        }
        let reveal = MatchOptions {
            case_sensitive: match_options.case_sensitive,
            whole_word: true,
        };
        for (_, token) in &pairs {
            for (phrase, _) in &pairs {
                if !find_occurrences(token, phrase, reveal).is_empty() {
                    return Err(ConfigError::TokenRevealsPhrase {
                        token: token.clone(),
                        phrase: phrase.clone(),
                    });
                }
            }
        }
        Ok(Self {
            pairs,
            match_options,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn match_options(&self) -> MatchOptions {
        self.match_options
    }
}

/// Variant phrase -> canonical phrase.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SynonymDictionary {
    groups: BTreeMap<String, String>,
}

impl SynonymDictionary {
    pub fn new<I, V, C>(groups: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (V, C)>,
        V: Into<String>,
        C: Into<String>,
    {
        let groups: BTreeMap<String, String> = groups
            .into_iter()
            .map(|(v, c)| (v.into(), c.into()))
            .collect();
        for (variant, canonical) in &groups {
            if variant.is_empty() || canonical.is_empty() || canonical.contains(['\n', '\r']) {
                return Err(ConfigError::EmptyEntry);
            }
            if groups.contains_key(canonical) {
                return Err(ConfigError::SynonymChain(canonical.clone()));
            }
        }
        Ok(Self { groups })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn groups(&self) -> &BTreeMap<String, String> {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

/// Rewrites every variant to its canonical phrase, longest variant first.
///
/// The returned replacements are an audit trail only; canonicalization is
/// never inverted.
pub fn canonicalize(text: &str, dict: &SynonymDictionary) -> (String, Vec<Replacement>) {
    if dict.is_empty() {
        return (text.to_string(), Vec::new());
    }
    let variants: Vec<&String> = dict.groups.keys().collect();
    let reps: Vec<Replacement> = find_phrases(text, &variants, MatchOptions::EXACT)
        .into_iter()
        .map(|m| {
            let variant = variants[m.phrase];
            Replacement::new(m.span, variant.as_str(), dict.groups[variant].as_str())
        })
        .collect();
    let (out, reps) = apply_replacements(text, &reps)
        .expect("variant matches are disjoint and canonical phrases are valid tokens");
    (out, reps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutput {
    pub stage: StageKind,
    pub replacements: Vec<Replacement>,
    pub text_after: String,
}

fn stage_index_of(table: &MappingTable, kind: StageKind) -> Result<usize, TransformError> {
    table.spec().stage_index(kind).ok_or(TransformError::Mapping(
        MappingError::StageMismatch {
            stage_index: table.spec().stages().len(),
            kind,
        },
    ))
}

/// Replaces every configured phrase by its token.
pub fn apply_upt(
    text: &str,
    cfg: &UptConfig,
    table: &mut MappingTable,
) -> Result<StageOutput, TransformError> {
    let stage_index = stage_index_of(table, StageKind::Upt)?;
    for (_, token) in &cfg.pairs {
        if !find_occurrences(text, token, MatchOptions::EXACT).is_empty() {
            return Err(TransformError::TokenCollision {
                stage: StageKind::Upt,
                token: token.clone(),
            });
        }
    }

    let phrases: Vec<&str> = cfg.pairs.iter().map(|(p, _)| p.as_str()).collect();
    let matches = find_phrases(text, &phrases, cfg.match_options);
    let chars: Vec<char> = text.chars().collect();

    let mut reps = Vec::with_capacity(matches.len());
    let mut entries: Vec<MappingEntry> = Vec::new();
    for m in &matches {
        let (phrase, token) = &cfg.pairs[m.phrase];
        let found: String = chars[m.span.start..m.span.end].iter().collect();
        reps.push(Replacement::new(m.span, found, token.as_str()));
        if !entries.iter().any(|e| e.token == *token) {
            entries.push(MappingEntry::new(
                stage_index,
                StageKind::Upt,
                phrase.as_str(),
                token.as_str(),
                m.span.start,
            ));
        }
    }

    let (text_after, reps) = apply_replacements(text, &reps)?;
    if cfg.match_options == MatchOptions::EXACT && invert_with(&text_after, &entries).0 != text {
        return Err(TransformError::NotInvertible(StageKind::Upt));
    }
    for e in entries {
        table.record(e)?;
    }
    Ok(StageOutput {
        stage: StageKind::Upt,
        replacements: reps,
        text_after,
    })
}

pub fn apply_ner(
    text: &str,
    gaz: &Gazetteer,
    table: &mut MappingTable,
) -> Result<StageOutput, TransformError> {
    apply_tagger(text, gaz, table)
}

pub fn apply_pos(
    text: &str,
    lex: &NounLexicon,
    table: &mut MappingTable,
) -> Result<StageOutput, TransformError> {
    apply_tagger(text, lex, table)
}

/// Runs a tagging stage: every distinct tagged surface becomes
/// `<prefix><i>`, numbered from 0 in first-occurrence order.
///
/// Tagged spans inside an earlier stage's token are dropped, spans cutting
/// through one are widened to cover it, and every other whole-word occurrence
/// of a tagged surface is replaced as well.
pub fn apply_tagger(
    text: &str,
    tagger: &dyn SpanTagger,
    table: &mut MappingTable,
) -> Result<StageOutput, TransformError> {
    let kind = StageKind::from(tagger.kind());
    let prefix = kind.token_prefix().unwrap_or("T");
    let stage_index = stage_index_of(table, kind)?;
    let chars: Vec<char> = text.chars().collect();

    let earlier: Vec<&str> = table.tokens().collect();
    let protected: Vec<Span> = find_phrases(text, &earlier, MatchOptions::EXACT)
        .into_iter()
        .map(|m| m.span)
        .collect();

    let mut spans: Vec<Span> = Vec::new();
    for tagged in tagger.tag(text) {
        if let Some(span) = shield(tagged.span, &protected) {
            spans.push(span);
        }
    }
    let mut spans = merge_overlapping(spans);

    // propagate each surface to its untagged occurrences
    let mut surfaces: Vec<String> = Vec::new();
    for s in &spans {
        let surface: String = chars[s.start..s.end].iter().collect();
        if !surfaces.contains(&surface) {
            surfaces.push(surface);
        }
    }
    for surface in &surfaces {
        for occ in find_occurrences(text, surface, MatchOptions::EXACT) {
            let clear = spans.iter().all(|s| !s.overlaps(&occ))
                && protected.iter().all(|p| !p.overlaps(&occ));
            if clear {
                spans.push(occ);
            }
        }
    }
    spans.sort();

    let mut tokens: BTreeMap<String, String> = BTreeMap::new();
    let mut entries: Vec<MappingEntry> = Vec::new();
    let mut reps = Vec::with_capacity(spans.len());
    for span in spans {
        let surface: String = chars[span.start..span.end].iter().collect();
        let token = match tokens.get(&surface) {
            Some(t) => t.clone(),
            None => {
                let token = format!("{prefix}{}", tokens.len());
                if table.lookup_original(&token).is_some()
                    || !find_occurrences(text, &token, MatchOptions::EXACT).is_empty()
                {
                    return Err(TransformError::TokenCollision { stage: kind, token });
                }
                entries.push(MappingEntry::new(
                    stage_index,
                    kind,
                    surface.as_str(),
                    token.as_str(),
                    span.start,
                ));
                tokens.insert(surface.clone(), token.clone());
                token
            }
        };
        reps.push(Replacement::new(span, surface, token));
    }

    let (text_after, reps) = apply_replacements(text, &reps)?;
    if invert_with(&text_after, &entries).0 != text {
        return Err(TransformError::NotInvertible(kind));
    }
    for e in entries {
        table.record(e)?;
    }
    Ok(StageOutput {
        stage: kind,
        replacements: reps,
        text_after,
    })
}

/// Drops `span` if it lies inside a protected token, widens it over any
/// token it only partially covers.
fn shield(mut span: Span, protected: &[Span]) -> Option<Span> {
    loop {
        if protected.iter().any(|p| p.contains(&span)) {
            return None;
        }
        let widened = protected
            .iter()
            .filter(|p| p.overlaps(&span) && !span.contains(p))
            .fold(span, |acc, p| acc.union(p));
        if widened == span {
            return Some(span);
        }
        span = widened;
    }
}

/// Everything produced by [`Obfuscator::transform`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transformed {
    pub canonical: String,
    pub canonical_replacements: Vec<Replacement>,
    pub stages: Vec<StageOutput>,
    pub obfuscated: String,
}

impl Transformed {
    /// Maps a character offset in the source text to the obfuscated text.
    /// `None` when the offset falls inside a replaced phrase.
    pub fn map_offset(&self, pos: usize) -> Option<usize> {
        let mut pos = shift_offset(pos, &self.canonical_replacements)?;
        for stage in &self.stages {
            pos = shift_offset(pos, &stage.replacements)?;
        }
        Some(pos)
    }
}

/// Stage configuration bundle that drives a full transform.
pub struct Obfuscator {
    synonyms: SynonymDictionary,
    upt: UptConfig,
    entity_tagger: Box<dyn SpanTagger + Send + Sync>,
    noun_tagger: Box<dyn SpanTagger + Send + Sync>,
}

impl fmt::Debug for Obfuscator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Obfuscator")
            .field("synonyms", &self.synonyms)
            .field("upt", &self.upt)
            .finish_non_exhaustive()
    }
}

impl Default for Obfuscator {
    fn default() -> Self {
        Self::new(
            SynonymDictionary::empty(),
            UptConfig::empty(),
            Gazetteer::empty(),
            NounLexicon::default(),
        )
    }
}

impl Obfuscator {
    pub fn new(
        synonyms: SynonymDictionary,
        upt: UptConfig,
        gazetteer: Gazetteer,
        lexicon: NounLexicon,
    ) -> Self {
        Self {
            synonyms,
            upt,
            entity_tagger: Box::new(gazetteer),
            noun_tagger: Box::new(lexicon),
        }
    }

    /// Swaps in another tagger for the NER or PoS stage, chosen by the
    /// tagger's kind.
    pub fn with_tagger(mut self, tagger: Box<dyn SpanTagger + Send + Sync>) -> Self {
        match tagger.kind() {
            TagKind::Entity => self.entity_tagger = tagger,
            TagKind::NounPhrase => self.noun_tagger = tagger,
        }
        self
    }

    pub fn with_upt(mut self, upt: UptConfig) -> Self {
        self.upt = upt;
        self
    }

    pub fn synonyms(&self) -> &SynonymDictionary {
        &self.synonyms
    }

    pub fn upt(&self) -> &UptConfig {
        &self.upt
    }

    /// Canonicalizes `text`, then applies the table's stages in order,
    /// recording every mapping in `table`.
    pub fn transform(&self, text: &str, table: &mut MappingTable) -> Result<Transformed, TransformError> {
        if !table.is_empty() {
            return Err(TransformError::SessionNotEmpty);
        }
        let (canonical, canonical_replacements) = canonicalize(text, &self.synonyms);
        let stages_spec: Vec<StageKind> = table.spec().stages().to_vec();
        let mut current = canonical.clone();
        let mut stages = Vec::with_capacity(stages_spec.len());
        for kind in stages_spec {
            let out = match kind {
                StageKind::Upt => apply_upt(&current, &self.upt, table)?,
                StageKind::Ner => apply_tagger(&current, self.entity_tagger.as_ref(), table)?,
                StageKind::Pos => apply_tagger(&current, self.noun_tagger.as_ref(), table)?,
            };
            current = out.text_after.clone();
            stages.push(out);
        }
        Ok(Transformed {
            canonical,
            canonical_replacements,
            stages,
            obfuscated: current,
        })
    }
}

/// Something re-transformation could not restore.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Residual {
    /// The token never appeared when its stage was inverted.
    Missing { token: String },
    /// The token appeared altered (recased, suffixed) and was left as is.
    Mutated { token: String, fragment: String },
}

impl Residual {
    pub fn token(&self) -> &str {
        match self {
            Residual::Missing { token } | Residual::Mutated { token, .. } => token,
        }
    }
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Residual::Missing { token } => write!(f, "missing {token}"),
            Residual::Mutated { token, fragment } => write!(f, "mutated {token}: {fragment}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Retransformed {
    pub clarified: String,
    pub residuals: Vec<Residual>,
}

/// Restores the originals of every stage, last stage first.
pub fn retransform(response: &str, table: &MappingTable) -> Retransformed {
    let mut text = response.to_string();
    let mut residuals = Vec::new();
    for stage_index in (0..table.spec().stages().len()).rev() {
        let (next, mut res) = invert_stage(&text, table, stage_index);
        text = next;
        residuals.append(&mut res);
    }
    Retransformed {
        clarified: text,
        residuals,
    }
}

/// Inverts a single stage: each exact whole-word token occurrence is
/// replaced by its original.
pub fn invert_stage(text: &str, table: &MappingTable, stage_index: usize) -> (String, Vec<Residual>) {
    let entries: Vec<MappingEntry> = table.stage_entries(stage_index).cloned().collect();
    invert_with(text, &entries)
}

fn invert_with(text: &str, entries: &[MappingEntry]) -> (String, Vec<Residual>) {
    let tokens: Vec<&str> = entries.iter().map(|e| e.token.as_str()).collect();
    let matches = find_phrases(text, &tokens, MatchOptions::EXACT);
    let edits: Vec<(Span, &str)> = matches
        .iter()
        .map(|m| (m.span, entries[m.phrase].original.as_str()))
        .collect();

    let chars: Vec<char> = text.chars().collect();
    let loose = MatchOptions {
        case_sensitive: false,
        whole_word: false,
    };
    let mut residuals = BTreeSet::new();
    for (idx, token) in tokens.iter().enumerate() {
        if !matches.iter().any(|m| m.phrase == idx) {
            residuals.insert(Residual::Missing {
                token: token.to_string(),
            });
        }
        for occ in find_occurrences(text, token, loose) {
            let at_word_start = occ.start == 0 || !is_word_char(chars[occ.start - 1]);
            let exact = matches.iter().any(|m| m.span == occ);
            if at_word_start && !exact {
                let mut end = occ.end;
                while end < chars.len() && is_word_char(chars[end]) {
                    end += 1;
                }
                residuals.insert(Residual::Mutated {
                    token: token.to_string(),
                    fragment: chars[occ.start..end].iter().collect(),
                });
            }
        }
    }
    (splice(text, &edits), residuals.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const REPORT: &str = "The Eastern Richard Company Monthly Status Report states that it is performing good, but Project Krypton has a red status.";

    fn upt_cfg() -> UptConfig {
        UptConfig::new(
            [("Krypton", "D202"), ("Eastern Richard", "Meridian")],
            MatchOptions::default(),
        )
        .unwrap()
    }

    fn table(stages: &[StageKind]) -> MappingTable {
        MappingTable::new("t", 0, PipelineSpec::new(stages.to_vec(), false).unwrap())
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(PipelineSpec::new(vec![], false), Err(ConfigError::StageCount(0))));
        assert!(matches!(
            PipelineSpec::new(vec![StageKind::Ner, StageKind::Ner], false),
            Err(ConfigError::RepeatedStage(StageKind::Ner))
        ));
        let spec = PipelineSpec::parse("upt + NER,PoS").unwrap();
        assert_eq!(spec.label(), "UPT+NER+PoS");
        assert!(PipelineSpec::parse("UPT+XYZ").is_err());
        let labels: Vec<String> = PipelineSpec::default_techniques().iter().map(|s| s.label()).collect();
        assert_eq!(
            labels,
            vec!["UPT", "NER", "PoS", "UPT+NER", "UPT+PoS", "NER+PoS", "UPT+NER+PoS"]
        );
    }

    #[test]
    fn upt_config_validation() {
        assert!(matches!(
            UptConfig::new([("a", "x"), ("a", "y")], MatchOptions::default()),
            Err(ConfigError::DuplicatePhrase(_))
        ));
        assert!(matches!(
            UptConfig::new([("a", "x"), ("b", "x")], MatchOptions::default()),
            Err(ConfigError::DuplicateToken(_))
        ));
        assert!(matches!(
            UptConfig::new([("Rose", "Mango"), ("Mango", "Kiwi")], MatchOptions::default()),
            Err(ConfigError::TokenRevealsPhrase { .. })
        ));
        assert!(matches!(
            UptConfig::new([("Rose", "Rose Co")], MatchOptions::default()),
            Err(ConfigError::TokenRevealsPhrase { .. })
        ));
    }

    #[test]
    fn synonym_chains_rejected() {
        assert!(matches!(
            SynonymDictionary::new([("firm", "company"), ("company", "business")]),
            Err(ConfigError::SynonymChain(_))
        ));
    }

    #[test]
    fn canonicalize_rewrites_variants() {
        let dict = SynonymDictionary::new([("firm", "company")]).unwrap();
        let (out, reps) = canonicalize("the firm said the company grew", &dict);
        assert_eq!(out, "the company said the company grew");
        assert_eq!(reps.len(), 1);
        let (same, reps) = canonicalize("the firm", &SynonymDictionary::empty());
        assert_eq!(same, "the firm");
        assert!(reps.is_empty());
    }

    #[test]
    fn canonicalize_prefers_longest_variant() {
        // brute force: "Big Apple" -> "New York City" and "Apple" -> "Apple Inc"
        // applied in either order give different text; longest first is fixed
        let dict =
            SynonymDictionary::new([("Big Apple", "New York City"), ("Apple", "Apple Inc")]).unwrap();
        let (out, _) = canonicalize("the Big Apple and Apple", &dict);
        assert_eq!(out, "the New York City and Apple Inc");
    }

    #[test]
    fn upt_stage_on_report() {
        let mut t = table(&[StageKind::Upt]);
        let out = apply_upt(REPORT, &upt_cfg(), &mut t).unwrap();
        assert_eq!(
            out.text_after,
            "The Meridian Company Monthly Status Report states that it is performing good, but Project D202 has a red status."
        );
        assert_eq!(t.len(), 2);
        assert_eq!(t.entries()[0].original, "Eastern Richard");
        assert_eq!(t.entries()[1].original, "Krypton");
    }

    #[test]
    fn upt_without_matches_is_identity() {
        let mut t = table(&[StageKind::Upt]);
        let out = apply_upt("nothing to hide here", &upt_cfg(), &mut t).unwrap();
        assert_eq!(out.text_after, "nothing to hide here");
        assert!(t.is_empty());
    }

    #[test]
    fn upt_token_collision() {
        let mut t = table(&[StageKind::Upt]);
        let err = apply_upt("Krypton replaced D202 last year", &upt_cfg(), &mut t).unwrap_err();
        assert_eq!(
            err,
            TransformError::TokenCollision {
                stage: StageKind::Upt,
                token: "D202".into()
            }
        );
    }

    #[test]
    fn ner_stage_on_report() {
        let mut t = table(&[StageKind::Ner]);
        let out = apply_ner(REPORT, &Gazetteer::empty(), &mut t).unwrap();
        assert_eq!(out.text_after, "N0 states that it is performing good, but N1 has a red status.");
        assert_eq!(t.lookup_token(0, "Project Krypton").unwrap().token, "N1");
    }

    #[test]
    fn repeated_entity_reuses_token() {
        let text = "Project Krypton slipped. Then Project Krypton recovered, and Project Krypton shipped.";
        let mut t = table(&[StageKind::Ner]);
        let out = apply_ner(text, &Gazetteer::empty(), &mut t).unwrap();
        assert_eq!(out.text_after, "N0 slipped. Then N0 recovered, and N0 shipped.");
        assert_eq!(t.len(), 1);
        assert_eq!(out.replacements.len(), 3);
    }

    #[test]
    fn pos_stage_on_report() {
        let mut t = table(&[StageKind::Pos]);
        let out = apply_pos(REPORT, &NounLexicon::default(), &mut t).unwrap();
        assert_eq!(
            out.text_after,
            "The P0 Report states that it is performing good, but P1 has a red status."
        );
    }

    #[test]
    fn pos_numbering_follows_text_order() {
        let mut t = table(&[StageKind::Pos]);
        let out = apply_pos("We met Zed Corp before Acme Labs.", &NounLexicon::default(), &mut t).unwrap();
        assert_eq!(out.text_after, "We met P0 before P1.");
        assert_eq!(t.lookup_original("P0").unwrap().original, "Zed Corp");
        assert_eq!(t.lookup_original("P1").unwrap().original, "Acme Labs");
    }

    #[test]
    fn generated_token_collision() {
        let mut t = table(&[StageKind::Ner]);
        let err = apply_ner("Ask N0 about Project Krypton.", &Gazetteer::empty(), &mut t).unwrap_err();
        assert!(matches!(err, TransformError::TokenCollision { .. }));
    }

    #[test]
    fn later_stage_wraps_but_never_splits_tokens() {
        let cfg = UptConfig::new([("Eastern Richard", "blue harbor")], MatchOptions::default()).unwrap();
        let gaz = Gazetteer::new(["harbor Company"], false).unwrap();
        let ob = Obfuscator::default().with_upt(cfg).with_tagger(Box::new(gaz));
        let mut t = table(&[StageKind::Upt, StageKind::Ner]);
        let out = ob.transform("we met at Eastern Richard Company today", &mut t).unwrap();
        // the gazetteer hit cuts through the UPT token and is widened over it
        assert_eq!(out.stages[0].text_after, "we met at blue harbor Company today");
        assert_eq!(out.obfuscated, "we met at N0 today");
        assert_eq!(t.lookup_original("N0").unwrap().original, "blue harbor Company");
        assert_eq!(retransform(&out.obfuscated, &t).clarified, "we met at Eastern Richard Company today");
    }

    #[test]
    fn token_exactly_tagged_is_left_alone() {
        let cfg = UptConfig::new([("Eastern Richard", "Blue Harbor")], MatchOptions::default()).unwrap();
        let ob = Obfuscator::default().with_upt(cfg);
        let mut t = table(&[StageKind::Upt, StageKind::Ner]);
        let out = ob.transform("we sold Eastern Richard, then left", &mut t).unwrap();
        assert_eq!(out.obfuscated, "we sold Blue Harbor, then left");
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn upt_then_ner_never_sees_upt_phrases() {
        let ob = Obfuscator::default().with_upt(upt_cfg());
        let mut t = table(&[StageKind::Upt, StageKind::Ner]);
        let out = ob.transform(REPORT, &mut t).unwrap();
        assert_eq!(out.obfuscated, "N0 states that it is performing good, but N1 has a red status.");
        let ner: Vec<&MappingEntry> = t.stage_entries(1).collect();
        assert!(ner.iter().all(|e| !e.original.contains("Eastern Richard")));
        assert_eq!(ner[0].original, "The Meridian Company Monthly Status Report");
        assert_eq!(ner[1].original, "Project D202");
    }

    #[test]
    fn reverse_order_restores_nested_tokens() {
        let ob = Obfuscator::default().with_upt(upt_cfg());
        let mut t = table(&[StageKind::Upt, StageKind::Ner]);
        ob.transform(REPORT, &mut t).unwrap();
        let response = "N1 is late.";
        assert_eq!(retransform(response, &t).clarified, "Project Krypton is late.");

        // forward order leaves the UPT token dangling
        let (after_upt, _) = invert_stage(response, &t, 0);
        let (forward, _) = invert_stage(&after_upt, &t, 1);
        assert_eq!(forward, "Project D202 is late.");
    }

    #[test]
    fn token_free_response_lists_every_token() {
        let ob = Obfuscator::default().with_upt(upt_cfg());
        let mut t = table(&[StageKind::Upt]);
        ob.transform(REPORT, &mut t).unwrap();
        let back = retransform("nothing relevant", &t);
        assert_eq!(back.clarified, "nothing relevant");
        let missing: Vec<&str> = back.residuals.iter().map(Residual::token).collect();
        assert_eq!(missing, vec!["D202", "Meridian"]);
    }

    #[test]
    fn mutated_tokens_reported_not_repaired() {
        let mut t = table(&[StageKind::Ner]);
        apply_ner(REPORT, &Gazetteer::empty(), &mut t).unwrap();
        let back = retransform("The N0s mention N1 and n1.", &t);
        assert_eq!(
            back.clarified,
            "The N0s mention Project Krypton and n1."
        );
        assert!(back.residuals.contains(&Residual::Mutated {
            token: "N0".into(),
            fragment: "N0s".into()
        }));
        assert!(back.residuals.contains(&Residual::Mutated {
            token: "N1".into(),
            fragment: "n1".into()
        }));
        assert!(back.residuals.contains(&Residual::Missing { token: "N0".into() }));
    }

    #[test]
    fn session_must_be_fresh() {
        let ob = Obfuscator::default().with_upt(upt_cfg());
        let mut t = table(&[StageKind::Upt]);
        ob.transform(REPORT, &mut t).unwrap();
        assert_eq!(ob.transform(REPORT, &mut t), Err(TransformError::SessionNotEmpty));
    }

    #[test]
    fn offsets_map_through_all_stages() {
        let dict = SynonymDictionary::new([("firm", "company")]).unwrap();
        let ob = Obfuscator::new(dict, upt_cfg(), Gazetteer::empty(), NounLexicon::default());
        let mut t = table(&[StageKind::Upt, StageKind::Ner]);
        let text = "The firm runs Project Krypton.\n\nWhat is Krypton?";
        let out = ob.transform(text, &mut t).unwrap();
        let boundary = text.find("\n\n").unwrap();
        let mapped = out.map_offset(boundary).unwrap();
        let chars: Vec<char> = out.obfuscated.chars().collect();
        assert_eq!(chars[mapped], '\n');
        assert_eq!(out.obfuscated, "The company runs N0.\n\nWhat is D202?");
    }
}
