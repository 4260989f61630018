//! Main configuration file (TOML).
//!
//! ```toml
//! [upt]
//! case_sensitive = true
//! whole_word = true
//! pairs = [{ phrase = "Krypton", token = "D202" }]
//!
//! [synonyms]
//! file = "synonyms.toml"            # optional; a table of variant = canonical
//! entries = { "Acme Laboratories" = "Acme Labs" }
//!
//! [ner]
//! gazetteer = "gazetteer.txt"       # one phrase per line, `#` comments
//! case_insensitive = false
//!
//! [pos]
//! common_nouns_enabled = false
//! common_noun_list = "nouns.txt"    # optional
//! exclusions = ["Report"]
//!
//! [embedder]
//! dimension = 1024
//!
//! [prompt]
//! instruction = "… {sentinel} …"
//! sentinel = "NOT_IN_CONTEXT"
//!
//! [endpoint]
//! kind = "mock"                     # or "http"
//! mode = "knowledge_override"
//! honor_instruction = true
//! knowledge_base = { Mango = "Mango is a fruit." }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use veil_core::metrics::DEFAULT_DIMENSION;
use veil_core::tagger::parse_phrase_list;
use veil_core::{
    ConfigError, Gazetteer, MatchOptions, MockBehavior, NounLexicon, Obfuscator, PromptTemplate,
    SynonymDictionary, UptConfig,
};

use crate::error::{Error, Result};
use crate::http::HttpConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub upt: UptSection,
    #[serde(default)]
    pub synonyms: SynonymSection,
    #[serde(default)]
    pub ner: NerSection,
    #[serde(default)]
    pub pos: PosSection,
    #[serde(default)]
    pub embedder: EmbedderSection,
    pub prompt: Option<PromptTemplate>,
    #[serde(default)]
    pub endpoint: EndpointConfig,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UptPair {
    pub phrase: String,
    pub token: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UptSection {
    pub case_sensitive: bool,
    pub whole_word: bool,
    pub pairs: Vec<UptPair>,
}

impl Default for UptSection {
    fn default() -> Self {
        Self {
            case_sensitive: true,
            whole_word: true,
            pairs: Vec::new(),
        }
    }
}

impl UptSection {
    pub fn options(&self) -> MatchOptions {
        MatchOptions {
            case_sensitive: self.case_sensitive,
            whole_word: self.whole_word,
        }
    }

    pub fn build(&self, pairs: &[UptPair]) -> Result<UptConfig, ConfigError> {
        UptConfig::new(
            pairs.iter().map(|p| (p.phrase.clone(), p.token.clone())),
            self.options(),
        )
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynonymSection {
    pub file: Option<PathBuf>,
    pub entries: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NerSection {
    pub gazetteer: Option<PathBuf>,
    pub entries: Vec<String>,
    pub case_insensitive: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct PosSection {
    pub common_noun_list: Option<PathBuf>,
    #[serde(flatten)]
    pub lexicon: NounLexicon,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderSection {
    pub dimension: usize,
}

impl Default for EmbedderSection {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointConfig {
    Mock(MockBehavior),
    Http(HttpConfig),
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig::Mock(MockBehavior::echo())
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::BadFile { path: p, reason } if p.as_os_str().is_empty() => Error::bad_file(path, reason),
            other => other,
        })
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: Config = toml::from_str(text).map_err(|e| Error::bad_file("", e.message()))?;
        config.base_dir = base_dir.to_path_buf();
        if config.embedder.dimension == 0 {
            return Err(Error::bad_file("", "embedder dimension must be positive"));
        }
        config.pos.lexicon.validate()?;
        Ok(config)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn read(&self, p: &Path) -> Result<String> {
        let path = self.resolve(p);
        fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    }

    pub fn upt(&self) -> Result<UptConfig> {
        Ok(self.upt.build(&self.upt.pairs)?)
    }

    pub fn synonyms(&self) -> Result<SynonymDictionary> {
        let mut groups = BTreeMap::new();
        if let Some(file) = &self.synonyms.file {
            let text = self.read(file)?;
            let table: BTreeMap<String, String> =
                toml::from_str(&text).map_err(|e| Error::bad_file(self.resolve(file), e.message()))?;
            groups.extend(table);
        }
        groups.extend(self.synonyms.entries.clone());
        Ok(SynonymDictionary::new(groups)?)
    }

    pub fn gazetteer(&self) -> Result<Gazetteer> {
        let mut entries = self.ner.entries.clone();
        if let Some(file) = &self.ner.gazetteer {
            entries.extend(parse_phrase_list(&self.read(file)?));
        }
        Ok(Gazetteer::new(entries, self.ner.case_insensitive)?)
    }

    pub fn lexicon(&self) -> Result<NounLexicon> {
        let mut lexicon = self.pos.lexicon.clone();
        if let Some(file) = &self.pos.common_noun_list {
            lexicon.common_nouns.extend(parse_phrase_list(&self.read(file)?));
        }
        lexicon.validate()?;
        Ok(lexicon)
    }

    /// Obfuscator with the configured UPT pairs.
    pub fn obfuscator(&self) -> Result<Obfuscator> {
        self.obfuscator_with(self.upt()?)
    }

    /// Obfuscator with other UPT pairs (per-question overrides).
    pub fn obfuscator_with(&self, upt: UptConfig) -> Result<Obfuscator> {
        Ok(Obfuscator::new(self.synonyms()?, upt, self.gazetteer()?, self.lexicon()?))
    }

    /// The configured instruction template, or the default one.
    pub fn template(&self) -> PromptTemplate {
        self.prompt.clone().unwrap_or_default()
    }
}
