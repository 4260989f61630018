//! Prompt assembly.

use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, CycleError};

/// Placeholder in an instruction template that is replaced by the sentinel.
pub const SENTINEL_PLACEHOLDER: &str = "{sentinel}";

pub const DEFAULT_INSTRUCTION: &str = "Answer using only the information in the context above. If the answer is not present, reply exactly: {sentinel}.";
pub const DEFAULT_SENTINEL: &str = "NOT_IN_CONTEXT";

/// Separates the question from the context in a rendered prompt.
pub const QUESTION_SEPARATOR: &str = " ";
/// Separates the instruction from the question in a rendered prompt.
pub const INSTRUCTION_SEPARATOR: &str = "\n\n";

/// Instruction appended after every context/question pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate")]
pub struct PromptTemplate {
    instruction: String,
    out_of_context_sentinel: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    #[serde(default = "default_instruction")]
    instruction: String,
    #[serde(default = "default_sentinel", alias = "sentinel")]
    out_of_context_sentinel: String,
}

fn default_instruction() -> String {
    DEFAULT_INSTRUCTION.into()
}

fn default_sentinel() -> String {
    DEFAULT_SENTINEL.into()
}

impl TryFrom<RawTemplate> for PromptTemplate {
    type Error = ConfigError;

    fn try_from(raw: RawTemplate) -> Result<Self, Self::Error> {
        PromptTemplate::new(raw.instruction, raw.out_of_context_sentinel)
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            instruction: DEFAULT_INSTRUCTION.into(),
            out_of_context_sentinel: DEFAULT_SENTINEL.into(),
        }
    }
}

impl PromptTemplate {
    /// `instruction` may contain [`SENTINEL_PLACEHOLDER`]; the sentinel itself
    /// must be non-empty and must not already appear in the template.
    pub fn new(instruction: impl Into<String>, sentinel: impl Into<String>) -> Result<Self, ConfigError> {
        let instruction = instruction.into();
        let sentinel = sentinel.into();
        if instruction.trim().is_empty() {
            return Err(ConfigError::Template("instruction is empty"));
        }
        if sentinel.trim().is_empty() {
            return Err(ConfigError::Template("sentinel is empty"));
        }
        if instruction.contains(sentinel.as_str()) {
            return Err(ConfigError::Template("sentinel occurs in the instruction template"));
        }
        Ok(Self {
            instruction,
            out_of_context_sentinel: sentinel,
        })
    }

    pub fn sentinel(&self) -> &str {
        &self.out_of_context_sentinel
    }

    pub fn instruction_template(&self) -> &str {
        &self.instruction
    }

    /// Instruction with the sentinel filled in.
    pub fn render(&self) -> String {
        self.instruction
            .replace(SENTINEL_PLACEHOLDER, &self.out_of_context_sentinel)
    }
}

/// A rendered prompt together with the parts it was built from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub context: String,
    pub question: String,
    pub instruction: Option<String>,
    pub sentinel: Option<String>,
    text: String,
}

impl Prompt {
    /// The exact string sent to an endpoint.
    pub fn text(&self) -> &str {
        &self.text
    }
}

/// `context + " " + question`, followed by a blank line and the rendered
/// instruction when a template is given.
pub fn build_prompt(
    context: &str,
    question: &str,
    template: Option<&PromptTemplate>,
) -> Result<Prompt, CycleError> {
    if context.trim().is_empty() || question.trim().is_empty() {
        return Err(CycleError::EmptyInput);
    }
    let mut text = String::with_capacity(context.len() + question.len() + 128);
    text.push_str(context);
    text.push_str(QUESTION_SEPARATOR);
    text.push_str(question);
    let instruction = template.map(PromptTemplate::render);
    if let Some(instr) = &instruction {
        text.push_str(INSTRUCTION_SEPARATOR);
        text.push_str(instr);
    }
    Ok(Prompt {
        context: context.to_string(),
        question: question.to_string(),
        instruction,
        sentinel: template.map(|t| t.sentinel().to_string()),
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_without_template_has_no_suffix() {
        let p = build_prompt("Mango is a flowering plant.", "What is Mango?", None).unwrap();
        assert_eq!(p.text(), "Mango is a flowering plant. What is Mango?");
        assert!(p.instruction.is_none());
    }

    #[test]
    fn prompt_ends_with_instruction() {
        let t = PromptTemplate::default();
        let p = build_prompt("ctx.", "q?", Some(&t)).unwrap();
        assert!(p.text().ends_with(&t.render()));
        assert_eq!(
            t.render(),
            "Answer using only the information in the context above. If the answer is not present, reply exactly: NOT_IN_CONTEXT."
        );
    }

    #[test]
    fn template_invariants() {
        assert!(PromptTemplate::new("say X when lost", "X").is_err());
        assert!(PromptTemplate::new("reply {sentinel}", "").is_err());
        assert!(PromptTemplate::new("reply {sentinel}", "NONE").is_ok());
    }

    #[test]
    fn empty_parts_rejected() {
        assert_eq!(build_prompt("", "q", None), Err(CycleError::EmptyInput));
        assert_eq!(build_prompt("c", "  ", None), Err(CycleError::EmptyInput));
    }
}
