use proptest::prelude::*;
use veil_core::mapping::{MappingEntry, MappingTable, Violation};
use veil_core::transform::{PipelineSpec, StageKind};

fn spec() -> PipelineSpec {
    PipelineSpec::new(vec![StageKind::Upt, StageKind::Ner, StageKind::Pos], false).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<MappingEntry>> {
    let kinds = [StageKind::Upt, StageKind::Ner, StageKind::Pos];
    prop::collection::vec((0usize..3, "[ab]{1,2}", "[xyé]{1,2}", 0usize..50), 0..12).prop_map(move |raw| {
        raw.into_iter()
            .map(|(stage, original, token, offset)| MappingEntry::new(stage, kinds[stage], original, token, offset))
            .collect()
    })
}

fn brute_force(entries: &[MappingEntry]) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let (a, b) = (&entries[i], &entries[j]);
            if a.token == b.token {
                out.push(Violation::DuplicateToken { token: a.token.clone(), first: i, second: j });
            }
            if a.stage_index == b.stage_index && a.original == b.original {
                out.push(Violation::DuplicateOriginal {
                    stage_index: a.stage_index,
                    original: a.original.clone(),
                    first: i,
                    second: j,
                });
            }
        }
    }
    out.sort();
    out
}

proptest! {
    #[test]
    fn bijectivity_check_matches_pairwise_oracle(entries in entries()) {
        let table = MappingTable::from_raw_parts("s", 1, spec(), entries.clone());
        prop_assert_eq!(table.verify_bijective(), brute_force(&entries));
    }

    #[test]
    fn recorded_tables_are_bijective(entries in entries()) {
        let mut table = MappingTable::new("s", 1, spec());
        for e in entries {
            let _ = table.record(e);
        }
        prop_assert!(table.verify_bijective().is_empty());
        for e in table.entries() {
            let found = table.lookup_token(e.stage_index, &e.original).unwrap();
            prop_assert_eq!(&table.lookup_original(&found.token).unwrap().original, &e.original);
        }
        let keys: Vec<_> = table.entries().iter().map(|e| (e.stage_index, e.first_offset)).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    }
}
