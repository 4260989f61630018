//! One obfuscate, query, clarify round.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CycleError, TransformError};
use crate::mapping::MappingTable;
use crate::prompt::{build_prompt, Prompt, PromptTemplate};
use crate::text::{find_phrases, slice_chars, MatchOptions, Span};
use crate::transform::{retransform, Obfuscator, Residual, Transformed};

/// Joins context and question into one document so both share a session.
pub const SEGMENT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedCycle {
    pub transformed: Transformed,
    pub context: String,
    pub question: String,
    pub prompt: Prompt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleResult {
    pub session_id: String,
    pub obfuscated_prompt: String,
    pub raw_response: String,
    pub clarified_response: String,
    pub residual_tokens: Vec<Residual>,
    pub stt_flag: Option<bool>,
}

/// Originals from `table` that still occur verbatim in `text`.
pub fn privacy_violations(text: &str, table: &MappingTable) -> Vec<String> {
    let originals: Vec<&str> = table.originals().collect();
    let mut found: Vec<String> = find_phrases(text, &originals, MatchOptions::EXACT)
        .into_iter()
        .map(|m| originals[m.phrase].to_string())
        .collect();
    found.sort();
    found.dedup();
    found
}

/// Obfuscates context and question together, then builds the prompt.
/// Fails rather than emit a prompt that still contains a mapped original.
pub fn prepare_cycle(
    obfuscator: &Obfuscator,
    context: &str,
    question: &str,
    table: &mut MappingTable,
    template: Option<&PromptTemplate>,
) -> Result<PreparedCycle, CycleError> {
    if context.trim().is_empty() || question.trim().is_empty() {
        return Err(CycleError::EmptyInput);
    }
    let mut document = String::with_capacity(context.len() + question.len() + 2);
    document.push_str(context);
    document.push_str(SEGMENT_SEPARATOR);
    document.push_str(question);
    let transformed = obfuscator.transform(&document, table)?;

    let split = context.chars().count();
    let sep = SEGMENT_SEPARATOR.chars().count();
    let (start, end) = match (transformed.map_offset(split), transformed.map_offset(split + sep)) {
        (Some(a), Some(b)) if b >= a => (a, b),
        _ => return Err(TransformError::SegmentBoundary.into()),
    };
    let out = &transformed.obfuscated;
    let total = out.chars().count();
    if slice_chars(out, Span::new(start, end)) != Some(SEGMENT_SEPARATOR) {
        return Err(TransformError::SegmentBoundary.into());
    }
    let obf_context = slice_chars(out, Span::new(0, start)).unwrap_or_default().to_string();
    let obf_question = slice_chars(out, Span::new(end, total)).unwrap_or_default().to_string();

    let prompt = build_prompt(&obf_context, &obf_question, template)?;
    let mut leaked = privacy_violations(&obf_context, table);
    leaked.extend(privacy_violations(&obf_question, table));
    leaked.sort();
    leaked.dedup();
    if !leaked.is_empty() {
        return Err(CycleError::PrivacyViolation(leaked));
    }
    Ok(PreparedCycle {
        transformed,
        context: obf_context,
        question: obf_question,
        prompt,
    })
}

/// Clarifies an endpoint's reply against the session table.
pub fn finish_cycle(
    prepared: &PreparedCycle,
    raw_response: &str,
    table: &MappingTable,
    stt_flag: Option<bool>,
) -> CycleResult {
    let back = retransform(raw_response, table);
    CycleResult {
        session_id: table.session_id().to_string(),
        obfuscated_prompt: prepared.prompt.text().to_string(),
        raw_response: raw_response.to_string(),
        clarified_response: back.clarified,
        residual_tokens: back.residuals,
        stt_flag,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{MockBehavior, MockLlm, MockMode};
    use crate::tagger::{Gazetteer, NounLexicon};
    use crate::transform::{PipelineSpec, SynonymDictionary, UptConfig};
    use alloc::collections::BTreeMap;
    use alloc::vec;

    const ROSE: &str = "Rose is a flowering plant that is widely recognized for its beauty, fragrance, and symbolic significance.";

    fn upt_obfuscator() -> Obfuscator {
        let upt = UptConfig::new([("Rose", "Mango")], MatchOptions::default()).unwrap();
        Obfuscator::new(
            SynonymDictionary::empty(),
            upt,
            Gazetteer::empty(),
            NounLexicon::default(),
        )
    }

    fn table(label: &str) -> MappingTable {
        MappingTable::new("s1", 0, PipelineSpec::parse(label).unwrap())
    }

    #[test]
    fn context_and_question_share_tokens() {
        let mut t = table("UPT");
        let p = prepare_cycle(&upt_obfuscator(), ROSE, "What is Rose?", &mut t, None).unwrap();
        assert_eq!(p.question, "What is Mango?");
        assert!(p.context.starts_with("Mango is a flowering plant"));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn knowledge_override_is_clarified() {
        let mut t = table("UPT");
        let obf = upt_obfuscator();
        let prepared = prepare_cycle(&obf, ROSE, "What is Rose?", &mut t, None).unwrap();
        let mut kb = BTreeMap::new();
        kb.insert("Mango".to_string(), "Mango is a fruit.".to_string());
        let llm = MockLlm::new(MockBehavior::new(MockMode::KnowledgeOverride, kb, true).unwrap());
        let reply = llm.respond(&prepared.prompt);
        let result = finish_cycle(&prepared, &reply.text, &t, Some(reply.is_sensitive()));
        assert_eq!(result.clarified_response, "Rose is a fruit.");
        assert_eq!(result.stt_flag, Some(true));
        assert!(result.residual_tokens.is_empty());
    }

    #[test]
    fn entity_spanning_the_join_is_kept_apart() {
        let mut t = table("NER");
        let p = prepare_cycle(
            &Obfuscator::default(),
            "Revenue at Acme Labs",
            "Acme Labs grew?",
            &mut t,
            None,
        )
        .unwrap();
        assert_eq!(p.context, "Revenue at N0");
        assert_eq!(p.question, "N0 grew?");
    }

    #[test]
    fn leak_detection() {
        let mut t = table("UPT");
        let _ = prepare_cycle(&upt_obfuscator(), ROSE, "Why?", &mut t, None).unwrap();
        assert_eq!(privacy_violations("a Rose here", &t), vec!["Rose".to_string()]);
        assert!(privacy_violations("Roses", &t).is_empty());
    }

    #[test]
    fn empty_input_rejected() {
        let mut t = table("UPT");
        let err = prepare_cycle(&upt_obfuscator(), " ", "q", &mut t, None).unwrap_err();
        assert_eq!(err, CycleError::EmptyInput);
    }
}
