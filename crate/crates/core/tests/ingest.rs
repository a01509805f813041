use std::collections::BTreeSet;

use flatsomatic::data::synth::{synth_generate, SynthParams};
use flatsomatic::data::{
    build_matrix, build_vocabulary, parse_mutation_file, read_matrix, write_matrix, write_mutation_file,
    MutationKey, SomaticProfileSet,
};
use flatsomatic::Error;
use proptest::prelude::*;

const FIXTURE: &str = "\
sample_id\tchromosome\tposition\tvaf
S1\tchr7\t140453136\t0.32
S1\t12\t25398284\t0.4
S2\t7\t140453136\t0.1
S2\tchr7\t140453136\t0.9
S3\tchrX\t100\tNA
S3\t7\t140453136\t.
";

fn key(s: &str) -> MutationKey {
    s.parse().unwrap()
}

#[test]
fn fixture_builds_the_shared_key_only() {
    let (profiles, stats) = parse_mutation_file(FIXTURE.as_bytes()).unwrap();
    assert_eq!(stats.records, 6);
    assert_eq!(stats.duplicates, 1);
    assert_eq!(profiles.len(), 3);
    let vocab = build_vocabulary(&profiles, 2).unwrap();
    assert_eq!(vocab.keys, vec![key("7:140453136")]);
    assert_eq!(vocab.doc_freq, vec![3]);
    assert_eq!(vocab.removed, 2);
    let m = build_matrix(&profiles, &vocab.keys).unwrap();
    assert_eq!((m.n_samples(), m.n_features(), m.nnz()), (3, 1, 3));
}

#[test]
fn bad_chromosome_names_line_and_token() {
    let text = "sample_id\tchromosome\tposition\nS1\tchrQ\t100\n";
    let err = parse_mutation_file(text.as_bytes()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{msg}");
    assert!(msg.contains("chrQ"), "{msg}");
}

#[test]
fn empty_vocabulary_error_message() {
    let text = "sample_id\tchromosome\tposition\nS1\t1\t5\nS2\t1\t6\n";
    let (profiles, _) = parse_mutation_file(text.as_bytes()).unwrap();
    let err = build_vocabulary(&profiles, 3).unwrap_err();
    assert!(err.to_string().contains("vocabulary empty after filtering"));
}

#[test]
fn synthetic_in_signature_occupancy() {
    let params = SynthParams::default();
    let data = synth_generate(&params).unwrap();
    let mut total = 0.0;
    for (profile, &c) in data.profiles.samples().iter().zip(&data.clusters) {
        let sig: BTreeSet<MutationKey> = params.signature(c).map(flatsomatic::data::synth::feature_key).collect();
        let hits = profile.keys.intersection(&sig).count();
        total += hits as f64 / params.signature_size as f64;
    }
    let mean = total / params.n_samples as f64;
    assert!((mean - 0.3).abs() < 0.02, "occupancy {mean}");
}

fn profile_set() -> impl Strategy<Value = SomaticProfileSet> {
    // Up to 12 samples over a 30-position universe on chromosomes 1, 2 and X.
    prop::collection::vec(prop::collection::btree_set((0usize..3, 0u64..10), 0..8), 1..12).prop_map(|rows| {
        let mut set = SomaticProfileSet::new();
        for (i, keys) in rows.into_iter().enumerate() {
            let id = format!("S{i}");
            set.add_sample(&id);
            for (c, p) in keys {
                let chrom = ["1", "2", "X"][c];
                set.insert(&id, key(&format!("{chrom}:{p}")));
            }
        }
        set
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_is_monotone(set in profile_set(), a in 1usize..4, extra in 0usize..4) {
        let b = a + extra;
        let va = build_vocabulary(&set, a);
        let vb = build_vocabulary(&set, b);
        if let Ok(vb) = vb {
            let va: BTreeSet<_> = va.unwrap().keys.into_iter().collect();
            prop_assert!(vb.keys.iter().all(|k| va.contains(k)));
        }
    }

    #[test]
    fn column_counts_match_document_frequency(set in profile_set(), min_freq in 1usize..3) {
        if let Ok(vocab) = build_vocabulary(&set, min_freq) {
            let m = build_matrix(&set, &vocab.keys).unwrap();
            prop_assert_eq!(m.column_counts(), vocab.doc_freq.clone());
            for (i, profile) in set.samples().iter().enumerate() {
                for (j, k) in vocab.keys.iter().enumerate() {
                    prop_assert_eq!(m.get(i, j), profile.keys.contains(k));
                }
            }
        }
    }

    #[test]
    fn mutation_file_round_trip(set in profile_set()) {
        let mut buf = Vec::new();
        write_mutation_file(&set, &mut buf).unwrap();
        let (back, _) = parse_mutation_file(&buf[..]).unwrap();
        // Samples without keys have no lines, so only non-empty ones return.
        let expect: Vec<_> = set.samples().iter().filter(|p| !p.keys.is_empty()).cloned().collect();
        prop_assert_eq!(back.samples(), &expect[..]);
    }

    #[test]
    fn matrix_file_round_trip(set in profile_set()) {
        if let Ok(vocab) = build_vocabulary(&set, 1) {
            let m = build_matrix(&set, &vocab.keys).unwrap();
            let mut buf = Vec::new();
            write_matrix(&m, &mut buf).unwrap();
            prop_assert_eq!(read_matrix(&buf[..]).unwrap(), m);
        }
    }

    #[test]
    fn surjection_never_grows(positions in prop::collection::vec((0usize..2, 0u64..6), 1..30)) {
        let mut text = String::from("sample_id\tchromosome\tposition\n");
        for (c, p) in &positions {
            text.push_str(&format!("S1\t{}\t{p}\n", ["chr1", "1"][*c]));
        }
        let (set, stats) = parse_mutation_file(text.as_bytes()).unwrap();
        let distinct: BTreeSet<u64> = positions.iter().map(|(_, p)| *p).collect();
        prop_assert_eq!(set.samples()[0].keys.len(), distinct.len());
        prop_assert_eq!(stats.records, positions.len());
        prop_assert!(distinct.len() <= positions.len());
    }
}
