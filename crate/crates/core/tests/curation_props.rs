//! Property tests for the curation operators and pipeline: mapper
//! idempotence over arbitrary and TeX-shaped inputs, banded versus
//! brute-force near-duplicate detection, and scheduler-independence of
//! the pipeline itself.

use proptest::prelude::*;
use smelt::curation::mappers;
use smelt::curation::simhash::{simhash_dedup, simhash_fingerprint};
use smelt::curation::{
    default_code_specs, default_text_specs, run_mapper, run_pipeline, DocKind, Document,
};

type NamedMapper = (&'static str, fn(&str) -> String);

/// Every text-rewriting operator; running one twice must equal running it
/// once, otherwise a re-curated corpus would keep drifting.
fn all_mappers() -> Vec<NamedMapper> {
    vec![
        ("chinese_convert", mappers::chinese_convert),
        ("clean_copyright", mappers::clean_copyright),
        ("clean_email", mappers::clean_email),
        ("clean_html", mappers::clean_html),
        ("clean_ip", mappers::clean_ip),
        ("clean_links", mappers::clean_links),
        ("expand_macro", mappers::expand_macro),
        ("fix_unicode", mappers::fix_unicode),
        ("punctuation_normalization", mappers::punctuation_normalization),
        ("remove_repeat_sentences", mappers::remove_repeat_sentences),
        ("remove_specific_chars", |t| {
            mappers::remove_specific_chars(t, mappers::DEFAULT_SPECIFIC_CHARS)
        }),
        ("whitespace_normalization", mappers::whitespace_normalization),
    ]
}

/// TeX-shaped text: definitions (including cyclic and malformed ones),
/// invocations with and without arguments, stray braces, escapes, and
/// plain words — far denser in tricky structure than random strings.
fn tex_text() -> impl Strategy<Value = String> {
    let name = prop::sample::select(vec!["aa", "bb", "cc", "dd"]);
    let word = prop::sample::select(vec![
        "alpha", "beta", "gamma", "x1", "\\aa", "\\bb", "\\cc", "#1", "#2", "\\\\", "{", "}",
        "\\newcommand", "\\stray",
    ]);
    let body = prop::collection::vec(word.clone(), 0..4).prop_map(|w| w.join(" "));
    let piece = prop_oneof![
        (name.clone(), body.clone(), 0usize..3).prop_map(|(n, b, args)| {
            if args == 0 {
                format!("\\newcommand{{\\{n}}}{{{b}}}")
            } else {
                format!("\\newcommand{{\\{n}}}[{args}]{{{b}}}")
            }
        }),
        (name.clone(), body).prop_map(|(n, b)| format!("\\def\\{n}{{{b}}}")),
        (name, prop::collection::vec(word.clone(), 0..3)).prop_map(|(n, args)| {
            let mut s = format!("\\{n}");
            for a in args {
                s.push('{');
                s.push_str(a);
                s.push('}');
            }
            s
        }),
        word.prop_map(str::to_string),
    ];
    prop::collection::vec(piece, 0..12).prop_map(|v| v.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn every_mapper_is_idempotent_on_arbitrary_text(input in any::<String>()) {
        for (nm, f) in all_mappers() {
            let once = f(&input);
            let twice = f(&once);
            prop_assert_eq!(&once, &twice, "{} changed its own output", nm);
        }
    }

    #[test]
    fn macro_expansion_is_idempotent_on_tex_shaped_text(input in tex_text()) {
        let once = mappers::expand_macro(&input);
        let twice = mappers::expand_macro(&once);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn pipeline_results_do_not_depend_on_worker_count(
        texts in prop::collection::vec(any::<String>(), 1..16),
        code in any::<bool>(),
    ) {
        let kind = if code { DocKind::Code } else { DocKind::Text };
        let docs: Vec<Document> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i:02}"), t.clone(), kind))
            .collect();
        let specs = if code { default_code_specs() } else { default_text_specs() };
        let (kept_serial, report_serial) = run_pipeline(docs.clone(), &specs, 1).unwrap();
        let (kept_parallel, report_parallel) = run_pipeline(docs.clone(), &specs, 8).unwrap();
        prop_assert_eq!(&kept_serial, &kept_parallel);
        prop_assert_eq!(&report_serial, &report_parallel);

        // Conservation: every input document is either kept or accounted
        // for by exactly one drop record.
        prop_assert!(report_serial.conserves_documents());
        prop_assert_eq!(report_serial.input, docs.len());
        prop_assert_eq!(report_serial.output, kept_serial.len());

        // Filters never rewrite: a surviving text equals the mapper
        // prefix of the chain applied to the original, nothing more.
        for kept in &kept_serial {
            let original = docs.iter().find(|d| d.id == kept.id).unwrap();
            let mut mapped = original.clone();
            for spec in specs.iter().filter(|s| s.name.ends_with("_mapper")) {
                mapped = run_mapper(&mapped, spec).unwrap();
            }
            prop_assert_eq!(&mapped.text, &kept.text);
        }
    }
}

// ---------------------------------------------------------------- dedup

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

fn brute_force_roots(fingerprints: &[u64], hamming_max: u32) -> Vec<usize> {
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    let mut parent: Vec<usize> = (0..fingerprints.len()).collect();
    for i in 0..fingerprints.len() {
        for j in i + 1..fingerprints.len() {
            if (fingerprints[i] ^ fingerprints[j]).count_ones() <= hamming_max {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                let (lo, hi) = (a.min(b), a.max(b));
                parent[hi] = lo;
            }
        }
    }
    (0..fingerprints.len())
        .map(|i| find(&mut parent, i))
        .collect()
}

#[test]
fn banded_dedup_equals_brute_force_over_a_thousand_documents() {
    const WORDS: [&str; 16] = [
        "lathe", "gauge", "spindle", "belt", "oil", "ledger", "window", "stove", "chisel",
        "crate", "hinge", "bolt", "fixture", "motor", "pulley", "shaft",
    ];
    let mut rng = SplitMix(0x5eed_0001);
    let pick = |rng: &mut SplitMix| WORDS[(rng.next() % 16) as usize];

    // 250 base documents, each with an exact copy, a one-word variant,
    // and a three-word variant: plenty of true near-duplicates plus
    // borderline pairs on both sides of the distance threshold.
    let mut texts: Vec<String> = Vec::with_capacity(1000);
    for _ in 0..250 {
        let base: Vec<&str> = (0..30).map(|_| pick(&mut rng)).collect();
        texts.push(base.join(" "));
        texts.push(base.join(" "));
        let mut one = base.clone();
        one[(rng.next() % 30) as usize] = pick(&mut rng);
        texts.push(one.join(" "));
        let mut three = base;
        for _ in 0..3 {
            three[(rng.next() % 30) as usize] = pick(&mut rng);
        }
        texts.push(three.join(" "));
    }
    assert_eq!(texts.len(), 1000);

    let fingerprints: Vec<u64> = texts
        .iter()
        .map(|t| simhash_fingerprint(t, 6, true))
        .collect();
    let banded = simhash_dedup(&fingerprints, 4, 6);
    let brute = brute_force_roots(&fingerprints, 4);
    assert_eq!(banded, brute);

    // Sanity on the corpus itself: the exact copies must collapse, so the
    // comparison above is not vacuous.
    let merged = banded
        .iter()
        .enumerate()
        .filter(|(i, &r)| r != *i)
        .count();
    assert!(merged >= 250, "expected at least the exact copies to merge, got {merged}");
}
