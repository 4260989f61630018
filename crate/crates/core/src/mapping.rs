//! The per-session original <-> token table that makes re-transformation
//! possible.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MappingError;
use crate::transform::{PipelineSpec, StageKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub stage_index: usize,
    pub stage_kind: StageKind,
    pub original: String,
    pub token: String,
    /// Character offset of the first replaced occurrence in the stage input.
    pub first_offset: usize,
}

impl MappingEntry {
    pub fn new(
        stage_index: usize,
        stage_kind: StageKind,
        original: impl Into<String>,
        token: impl Into<String>,
        first_offset: usize,
    ) -> Self {
        Self {
            stage_index,
            stage_kind,
            original: original.into(),
            token: token.into(),
            first_offset,
        }
    }

    fn sort_key(&self) -> (usize, usize) {
        (self.stage_index, self.first_offset)
    }
}

/// Mappings of one session, ordered by `(stage_index, first_offset)`.
///
/// Tokens are unique across every stage; originals are unique within a stage.
/// [`MappingTable::record`] enforces both. Tables assembled with
/// [`MappingTable::from_raw_parts`] are not checked; run
/// [`MappingTable::verify_bijective`] on them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingTable {
    session_id: String,
    /// Seconds since the Unix epoch.
    created_at: u64,
    spec: PipelineSpec,
    entries: Vec<MappingEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateToken {
        token: String,
        first: usize,
        second: usize,
    },
    DuplicateOriginal {
        stage_index: usize,
        original: String,
        first: usize,
        second: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateToken { token, first, second } => {
                write!(f, "token {token:?} shared by entries {first} and {second}")
            }
            Violation::DuplicateOriginal {
                stage_index,
                original,
                first,
                second,
            } => write!(
                f,
                "original {original:?} mapped twice at stage {stage_index} (entries {first} and {second})"
            ),
        }
    }
}

impl MappingTable {
    pub fn new(session_id: impl Into<String>, created_at: u64, spec: PipelineSpec) -> Self {
        Self {
            session_id: session_id.into(),
            created_at,
            spec,
            entries: Vec::new(),
        }
    }

    pub fn from_raw_parts(
        session_id: impl Into<String>,
        created_at: u64,
        spec: PipelineSpec,
        entries: Vec<MappingEntry>,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            created_at,
            spec,
            entries,
        }
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn created_at(&self) -> u64 {
        self.created_at
    }

    pub fn spec(&self) -> &PipelineSpec {
        &self.spec
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn stage_entries(&self, stage_index: usize) -> impl Iterator<Item = &MappingEntry> {
        self.entries.iter().filter(move |e| e.stage_index == stage_index)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.token.as_str())
    }

    pub fn originals(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.original.as_str())
    }

    /// Adds `entry`, keeping `(stage_index, first_offset)` order. Entries
    /// recorded in that order are simply appended.
    pub fn record(&mut self, entry: MappingEntry) -> Result<(), MappingError> {
        if entry.original.is_empty() || entry.token.is_empty() {
            return Err(MappingError::InvalidEntry("original and token must be non-empty"));
        }
        if entry.original == entry.token {
            return Err(MappingError::InvalidEntry("original equals token"));
        }
        if self.spec.stages().get(entry.stage_index) != Some(&entry.stage_kind) {
            return Err(MappingError::StageMismatch {
                stage_index: entry.stage_index,
                kind: entry.stage_kind,
            });
        }
        if self.lookup_original(&entry.token).is_some() {
            return Err(MappingError::DuplicateToken(entry.token));
        }
        if self.lookup_token(entry.stage_index, &entry.original).is_some() {
            return Err(MappingError::DuplicateOriginal {
                stage_index: entry.stage_index,
                original: entry.original,
            });
        }
        let at = self
            .entries
            .partition_point(|e| e.sort_key() <= entry.sort_key());
        self.entries.insert(at, entry);
        Ok(())
    }

    pub fn lookup_original(&self, token: &str) -> Option<&MappingEntry> {
        self.entries.iter().find(|e| e.token == token)
    }

    pub fn lookup_token(&self, stage_index: usize, original: &str) -> Option<&MappingEntry> {
        self.entries
            .iter()
            .find(|e| e.stage_index == stage_index && e.original == original)
    }

    /// Every pair of entries sharing a token, or sharing an original within a
    /// stage. Empty iff the table is bijective.
    pub fn verify_bijective(&self) -> Vec<Violation> {
        let mut by_token: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        let mut by_original: BTreeMap<(usize, &str), Vec<usize>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            by_token.entry(&e.token).or_default().push(i);
            by_original
                .entry((e.stage_index, &e.original))
                .or_default()
                .push(i);
        }

        let mut out = Vec::new();
        for (token, idx) in by_token {
            for (a, &first) in idx.iter().enumerate() {
                for &second in &idx[a + 1..] {
                    out.push(Violation::DuplicateToken {
                        token: token.into(),
                        first,
                        second,
                    });
                }
            }
        }
        for ((stage_index, original), idx) in by_original {
            for (a, &first) in idx.iter().enumerate() {
                for &second in &idx[a + 1..] {
                    out.push(Violation::DuplicateOriginal {
                        stage_index,
                        original: original.into(),
                        first,
                        second,
                    });
                }
            }
        }
        out.sort();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn spec(stages: &[StageKind]) -> PipelineSpec {
        PipelineSpec::new(stages.to_vec(), false).unwrap()
    }

    #[test]
    fn record_and_lookup_both_directions() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Upt]));
        table
            .record(MappingEntry::new(0, StageKind::Upt, "Krypton", "D202", 97))
            .unwrap();
        assert_eq!(table.lookup_original("D202").unwrap().original, "Krypton");
        assert_eq!(table.lookup_token(0, "Krypton").unwrap().token, "D202");
        assert!(table.lookup_original("unknown").is_none());
    }

    #[test]
    fn duplicate_token_rejected() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Upt, StageKind::Ner]));
        table
            .record(MappingEntry::new(0, StageKind::Upt, "Krypton", "D202", 0))
            .unwrap();
        let err = table
            .record(MappingEntry::new(1, StageKind::Ner, "Project Krypton", "D202", 0))
            .unwrap_err();
        assert_eq!(err, MappingError::DuplicateToken("D202".into()));
    }

    #[test]
    fn duplicate_original_only_within_stage() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Ner, StageKind::Pos]));
        table
            .record(MappingEntry::new(0, StageKind::Ner, "Project Krypton", "N0", 0))
            .unwrap();
        assert!(matches!(
            table.record(MappingEntry::new(0, StageKind::Ner, "Project Krypton", "N1", 5)),
            Err(MappingError::DuplicateOriginal { .. })
        ));
        table
            .record(MappingEntry::new(1, StageKind::Pos, "Project Krypton", "P0", 0))
            .unwrap();
    }

    #[test]
    fn entries_ordered_by_stage_then_offset() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Upt, StageKind::Ner]));
        table
            .record(MappingEntry::new(1, StageKind::Ner, "Project D202", "N0", 40))
            .unwrap();
        table
            .record(MappingEntry::new(0, StageKind::Upt, "Krypton", "D202", 97))
            .unwrap();
        table
            .record(MappingEntry::new(0, StageKind::Upt, "Eastern Richard", "Meridian", 4))
            .unwrap();
        let tokens: Vec<&str> = table.tokens().collect();
        assert_eq!(tokens, vec!["Meridian", "D202", "N0"]);
    }

    #[test]
    fn stage_kind_must_match_spec() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Upt]));
        assert!(matches!(
            table.record(MappingEntry::new(0, StageKind::Ner, "X Y", "N0", 0)),
            Err(MappingError::StageMismatch { .. })
        ));
        assert!(matches!(
            table.record(MappingEntry::new(3, StageKind::Upt, "X", "Y", 0)),
            Err(MappingError::StageMismatch { .. })
        ));
        assert!(matches!(
            table.record(MappingEntry::new(0, StageKind::Upt, "X", "X", 0)),
            Err(MappingError::InvalidEntry(_))
        ));
    }

    #[test]
    fn healthy_table_has_no_violations() {
        let mut table = MappingTable::new("s1", 0, spec(&[StageKind::Upt]));
        table
            .record(MappingEntry::new(0, StageKind::Upt, "Krypton", "D202", 0))
            .unwrap();
        assert!(table.verify_bijective().is_empty());
    }

    #[test]
    fn hand_built_duplicate_token_is_one_violation() {
        let table = MappingTable::from_raw_parts(
            "s1",
            0,
            spec(&[StageKind::Upt]),
            vec![
                MappingEntry::new(0, StageKind::Upt, "Krypton", "D202", 0),
                MappingEntry::new(0, StageKind::Upt, "Argon", "D202", 9),
            ],
        );
        assert_eq!(
            table.verify_bijective(),
            vec![Violation::DuplicateToken {
                token: "D202".into(),
                first: 0,
                second: 1
            }]
        );
    }
}
