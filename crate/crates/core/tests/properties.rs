//! Cross-module invariants checked over generated Java and arbitrary text.

use std::collections::BTreeSet;

use mpcs_core::api::{detect_api, ApiCatalog};
use mpcs_core::ast::parse_method;
use mpcs_core::corpus::{
    build_perspective_dataset, AugmentOptions, Corpus, CorpusEntry, Perspective,
};
use mpcs_core::metrics::evaluate;
use mpcs_core::permute::{apply_swap, swap_candidates};
use mpcs_core::rename::{apply_rename, rename_variables, RenameOrder};
use mpcs_core::rng::hash64;
use mpcs_core::subtoken::subtokens;
use mpcs_core::synth::random_method;
use mpcs_core::token::{render, tokenize};

const SEED: u64 = 20_240_817;

#[test]
fn lexing_generated_methods_is_lossless() {
    for i in 0..400 {
        let src = random_method(SEED, i);
        let tokens = tokenize(&src).expect("generated code lexes");
        assert_eq!(render(&tokens), src, "snippet {i} did not round-trip");
        // Spans tile the input exactly.
        let mut pos = 0;
        for t in &tokens {
            assert_eq!(t.span.start, pos, "gap before token in snippet {i}");
            pos = t.span.end;
        }
        assert_eq!(pos, src.len());
    }
}

#[test]
fn renaming_inverts_to_the_original_bytes() {
    for i in 0..400 {
        let src = random_method(SEED + 1, i);
        let ast = parse_method(&src).expect("generated code parses");
        let renamed = rename_variables(&ast, RenameOrder::Lexicographic).expect("rename");
        if renamed.map.is_identity() {
            continue;
        }
        assert_ne!(renamed.ast.source, src);
        let back = apply_rename(&renamed.ast, &renamed.map.inverted()).expect("invert");
        assert_eq!(back.ast.source, src, "snippet {i} did not invert byte-exactly");
    }
}

#[test]
fn renaming_is_idempotent() {
    for i in 0..200 {
        let src = random_method(SEED + 2, i);
        let ast = parse_method(&src).unwrap();
        let once = rename_variables(&ast, RenameOrder::Lexicographic).unwrap();
        let twice = rename_variables(&once.ast, RenameOrder::Lexicographic).unwrap();
        assert!(
            twice.map.is_identity(),
            "snippet {i}: renaming its own output changed it again"
        );
    }
}

#[test]
fn statement_swaps_preserve_structure_and_reverse() {
    let mut seen_swaps = 0usize;
    for i in 0..300 {
        let src = random_method(SEED + 3, i);
        let ast = parse_method(&src).unwrap();
        for cand in swap_candidates(&ast, true) {
            seen_swaps += 1;
            let swapped = apply_swap(&src, cand.first, cand.second);
            assert_ne!(swapped, src);
            let reparsed = parse_method(&swapped)
                .unwrap_or_else(|e| panic!("snippet {i} swap broke parsing: {e:?}\n{swapped}"));
            assert_eq!(
                reparsed.all_statements().len(),
                ast.all_statements().len(),
                "snippet {i} lost statements"
            );
            assert_eq!(
                reparsed.bindings.len(),
                ast.bindings.len(),
                "snippet {i} lost bindings"
            );
            // Swapping the same pair in the result restores the original.
            let back_cand = swap_candidates(&reparsed, true)
                .into_iter()
                .find(|c| c.block == cand.block && c.index == cand.index)
                .expect("mirror swap exists");
            let back = apply_swap(&swapped, back_cand.first, back_cand.second);
            assert_eq!(back, src, "snippet {i} swap was not an involution");
        }
    }
    assert!(seen_swaps > 100, "generator produced too few swaps: {seen_swaps}");
}

fn generated_corpus(seed: u64, n: usize) -> Corpus {
    let entries = (0..n)
        .map(|i| {
            let code = random_method(seed, i as u64);
            let name_line = code.lines().next().unwrap_or("").to_string();
            CorpusEntry {
                id: format!("gen{i:03}"),
                query: format!("snippet {i} doing {}", &name_line[..name_line.len().min(30)]),
                code,
            }
        })
        .collect();
    Corpus::from_entries(entries).unwrap()
}

#[test]
fn perspective_datasets_are_balanced_and_deterministic() {
    let corpus = generated_corpus(SEED + 4, 40);
    for perspective in Perspective::ALL {
        let opts = AugmentOptions::default();
        let (a, stats) = build_perspective_dataset(&corpus, perspective, 5, &opts).unwrap();
        let (b, _) = build_perspective_dataset(&corpus, perspective, 5, &opts).unwrap();
        assert_eq!(a, b, "{perspective:?} dataset not reproducible");
        let pos = a.examples.iter().filter(|e| e.label == 1).count();
        assert_eq!(pos * 2, a.examples.len(), "{perspective:?} dataset unbalanced");
        assert_eq!(
            a.examples.len(),
            (stats.originals + stats.variants) * 2,
            "{perspective:?} dataset size mismatch"
        );
        for ex in &a.examples {
            assert!(
                corpus.entries().iter().any(|e| e.id == ex.origin_id),
                "origin id {} not from the corpus",
                ex.origin_id
            );
        }
    }
}

#[test]
fn ranking_a_generated_corpus_stays_in_bounds() {
    let corpus = generated_corpus(SEED + 5, 30);
    // Deterministic pseudo-random scorer: hash of the pair.
    let scorer = |q: &str, c: &str| {
        let mut bytes = Vec::with_capacity(q.len() + c.len() + 1);
        bytes.extend_from_slice(q.as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(c.as_bytes());
        (hash64(&bytes) % 1000) as f64 / 1000.0
    };
    let report = evaluate(&scorer, &corpus, 9, &[1, 5, 10], 77).unwrap();
    assert_eq!(report.query_count, 30);
    assert!(report.mrr > 0.0 && report.mrr <= 1.0);
    for r in &report.results {
        assert!(r.frank >= 1 && r.frank <= 10);
        assert_eq!(r.ranked_ids.len(), 10);
    }
    assert_eq!(report.success_rate[&10], 1.0);
    assert!(report.success_rate[&1] <= report.success_rate[&5]);
}

#[test]
fn api_witnesses_appear_verbatim_in_the_source() {
    let catalog = ApiCatalog::default_jvm();
    let mut matched = 0usize;
    for i in 0..300 {
        let src = random_method(SEED + 6, i);
        let ast = parse_method(&src).unwrap();
        let detection = detect_api(&ast, &catalog);
        if detection.matched() {
            matched += 1;
        }
        for witness in &detection.witnesses {
            let probe = witness.strip_prefix("new ").unwrap_or(witness);
            assert!(
                src.contains(probe),
                "witness '{witness}' not found in snippet {i}:\n{src}"
            );
        }
    }
    assert!(matched > 50, "api detection too rare on generated code: {matched}");
}

#[test]
fn subtokens_preserve_alphanumeric_content() {
    let samples = [
        "readFileLines",
        "parseHTTPResponse2",
        "a_bC$d9x",
        "Hello, World! 42",
        "__strip__me__",
        "MixedUTF8Case",
    ];
    for s in samples {
        let joined: String = subtokens(s).concat();
        let expected: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(|c| c.to_lowercase())
            .collect();
        assert_eq!(joined, expected, "content changed for {s:?}");
    }
}

#[test]
fn distinct_snippets_rarely_collide_for_the_generator() {
    let mut seen = BTreeSet::new();
    for i in 0..500 {
        seen.insert(random_method(SEED + 7, i));
    }
    assert!(seen.len() >= 495, "generator collapsed to {} distinct texts", seen.len());
}

mod arbitrary_text {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        /// The lexer either rejects text or reproduces it byte-exactly.
        #[test]
        fn lexing_never_drops_bytes(s in "\\PC*") {
            if let Ok(tokens) = tokenize(&s) {
                prop_assert_eq!(render(&tokens), s);
            }
        }

        /// Subtokenization keeps exactly the alphanumeric characters.
        #[test]
        fn subtokens_keep_alphanumerics(s in "[a-zA-Z0-9_$ .,()-]{0,60}") {
            let joined: String = subtokens(&s).concat();
            let expected: String = s
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(|c| c.to_lowercase())
                .collect();
            prop_assert_eq!(joined, expected);
        }

        /// Source with balanced quotes and comments round-trips even when
        /// it is not valid Java.
        #[test]
        fn lexing_code_like_text(s in "(int|String|for|if|x|y|[0-9]+|\\+|=|;|\\{|\\}|\\(|\\)| |\n|\"w\"|//c\n|/\\*c\\*/){0,40}") {
            let tokens = tokenize(&s).expect("quote-balanced text lexes");
            prop_assert_eq!(render(&tokens), s);
        }
    }
}
