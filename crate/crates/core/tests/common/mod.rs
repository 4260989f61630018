#![allow(dead_code)]

use proptest::prelude::*;

pub const WORDS: &[&str] = &[
    "The", "the", "Acme", "Labs", "Eastern", "Richard", "Company", "Monthly", "Status", "Report",
    "Project", "Krypton", "New", "York", "Köln", "report", "is", "growing", "and", "of", "we",
    "met", "at", "station", "happiness", "revenue", "Zed", "Corp", "Rose", "plant", "in", "it",
    "D202", "a", "red", "Mango",
];

pub const PUNCT: &[&str] = &[",", ".", "!", "?", "\n", ":", "(", ")"];

/// Word/punctuation soup resembling short business prose.
pub fn document() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            4 => prop::sample::select(WORDS).prop_map(|w| format!(" {w}")),
            1 => prop::sample::select(PUNCT).prop_map(str::to_string),
        ],
        1..40,
    )
    .prop_map(|parts| parts.concat().trim_start().to_string())
}

/// Distinct phrases of one or two vocabulary words.
pub fn phrases(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::btree_set(
        prop_oneof![
            prop::sample::select(WORDS).prop_map(str::to_string),
            (prop::sample::select(WORDS), prop::sample::select(WORDS))
                .prop_map(|(a, b)| format!("{a} {b}")),
        ],
        0..max,
    )
    .prop_map(|s| s.into_iter().collect())
}
