//! Property checks over generated inputs: parsing, purity judgment,
//! detection determinism, agreement statistics, selection, and metric
//! aggregation all hold their contracts on inputs nobody hand-picked.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use proptest::prelude::*;

use joulint_core::corpus::{
    check_equivalence, cohen_kappa, select_top_by_energy, CodePair, TestCase,
};
use joulint_core::detect::{detect_all, RuleConfig};
use joulint_core::profile::{
    compute_metrics, Divergence, MeasurementConfig, PairMeasurement, PairMetrics, RunSample,
};
use joulint_core::runner::ScriptedRunner;
use joulint_core::source::parse;
use joulint_core::Taxonomy;

fn names() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "total", "xs", "n", "v"]).prop_map(str::to_string)
}

/// Expressions built only from literals, names, arithmetic, and calls to
/// allowlisted builtins — everything the purity judgment should accept.
fn pure_exprs() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![(0u32..100).prop_map(|n| n.to_string()), names()];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b}")),
            inner.clone().prop_map(|a| format!("len({a})")),
            inner.prop_map(|a| format!("({a})")),
        ]
    })
}

fn simple_stmts() -> impl Strategy<Value = String> {
    prop_oneof![
        (names(), pure_exprs()).prop_map(|(n, e)| format!("{n} = {e}")),
        (names(), pure_exprs()).prop_map(|(n, e)| format!("{n} += {e}")),
        pure_exprs().prop_map(|e| format!("print({e})")),
        names().prop_map(|n| format!("import {n}")),
    ]
}

fn bodies() -> impl Strategy<Value = String> {
    prop::collection::vec(simple_stmts(), 1..3).prop_map(|lines| {
        lines
            .iter()
            .map(|s| format!("    {s}"))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

fn block_stmts() -> impl Strategy<Value = String> {
    prop_oneof![
        (names(), names(), bodies())
            .prop_map(|(var, iter, body)| format!("for {var} in {iter}:\n{body}")),
        (pure_exprs(), bodies()).prop_map(|(cond, body)| format!("if {cond} > 0:\n{body}")),
    ]
}

fn programs() -> impl Strategy<Value = String> {
    prop::collection::vec(prop_oneof![3 => simple_stmts(), 1 => block_stmts()], 1..6)
        .prop_map(|stmts| stmts.join("\n") + "\n")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parsing_is_deterministic(src in programs()) {
        let first = parse(&src).unwrap();
        let second = parse(&src).unwrap();
        prop_assert_eq!(format!("{first:?}"), format!("{second:?}"));
    }

    #[test]
    fn spans_slice_back_to_their_nodes(src in programs()) {
        let model = parse(&src).unwrap();
        let mut failure = None;
        model.root.walk(&mut |node| {
            if node.span.start_line != 0 && node.span.slice(&src) != node.text {
                failure.get_or_insert_with(|| (node.kind, node.text.clone()));
            }
        });
        prop_assert!(failure.is_none(), "span mismatch at {failure:?} in {src:?}");
    }

    #[test]
    fn detection_reports_identical_bytes(src in programs()) {
        let taxonomy = Taxonomy::canonical();
        let config = RuleConfig::default();
        let model = parse(&src).unwrap();
        let first = detect_all(Path::new("gen.py"), &model, &taxonomy, &config).unwrap();
        let again = parse(&src).unwrap();
        let second = detect_all(Path::new("gen.py"), &again, &taxonomy, &config).unwrap();
        prop_assert_eq!(
            serde_json::to_vec(&first).unwrap(),
            serde_json::to_vec(&second).unwrap()
        );
    }

    #[test]
    fn allowlisted_expressions_are_pure(expr in pure_exprs()) {
        let src = format!("q = {expr}\n");
        let model = parse(&src).unwrap();
        let config = RuleConfig::default();
        let allow: BTreeSet<String> = config.pure_builtins_allowlist.iter().cloned().collect();
        let assignment = &model.root.children[0];
        let value = assignment.children.last().unwrap();
        prop_assert!(model.is_pure_expression(value, &allow));
    }

    #[test]
    fn one_unknown_call_poisons_purity(expr in pure_exprs(), tail in pure_exprs()) {
        let config = RuleConfig::default();
        let allow: BTreeSet<String> = config.pure_builtins_allowlist.iter().cloned().collect();
        for wrapped in [
            format!("q = mystery({expr})\n"),
            format!("q = {expr} + mystery({tail})\n"),
        ] {
            let model = parse(&wrapped).unwrap();
            let assignment = &model.root.children[0];
            let value = assignment.children.last().unwrap();
            prop_assert!(
                !model.is_pure_expression(value, &allow),
                "unknown call judged pure in {wrapped:?}"
            );
        }
    }
}

proptest! {
    #[test]
    fn kappa_is_symmetric(
        (a, b) in (1usize..50).prop_flat_map(|len| {
            let labels = prop::sample::select(vec!["x", "y", "z"]);
            (
                prop::collection::vec(labels.clone(), len),
                prop::collection::vec(labels, len),
            )
        })
    ) {
        let forward = cohen_kappa(&a, &b).unwrap();
        let backward = cohen_kappa(&b, &a).unwrap();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn selection_ignores_corpus_order(
        (diffs, perm, k) in prop::collection::vec(-5i8..=5, 1..40).prop_flat_map(|diffs| {
            let n = diffs.len();
            (
                Just(diffs),
                Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
                1..=n,
            )
        })
    ) {
        let pairs: Vec<CodePair> = diffs
            .iter()
            .enumerate()
            .map(|(i, d)| measured(&format!("p{i:02}"), *d as f64))
            .collect();
        let permuted: Vec<CodePair> = perm.iter().map(|&i| pairs[i].clone()).collect();
        let from_original = select_top_by_energy(&pairs, k).unwrap();
        let from_permuted = select_top_by_energy(&permuted, k).unwrap();
        prop_assert_eq!(from_original, from_permuted);
    }

    #[test]
    fn metrics_ignore_iteration_order(
        (v0, v0_perm, v1, v1_perm) in (1usize..7, 1usize..7).prop_flat_map(|(n0, n1)| {
            let sample = (1.0f64..1000.0, 0.01f64..10.0);
            (
                prop::collection::vec(sample.clone(), n0),
                Just((0..n0).collect::<Vec<usize>>()).prop_shuffle(),
                prop::collection::vec(sample, n1),
                Just((0..n1).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
    ) {
        let build = |data: &[(f64, f64)]| -> Vec<RunSample> {
            data.iter()
                .map(|&(e, t)| RunSample {
                    energy_j: e,
                    wall_time_s: t,
                    max_rss_kib: 4096,
                    exit_ok: true,
                })
                .collect()
        };
        let ordered = PairMeasurement {
            pair_id: "prop".to_string(),
            v0_samples: build(&v0),
            v1_samples: build(&v1),
            config: MeasurementConfig::default(),
        };
        let shuffled_v0: Vec<(f64, f64)> = v0_perm.iter().map(|&i| v0[i]).collect();
        let shuffled_v1: Vec<(f64, f64)> = v1_perm.iter().map(|&i| v1[i]).collect();
        let shuffled = PairMeasurement {
            pair_id: "prop".to_string(),
            v0_samples: build(&shuffled_v0),
            v1_samples: build(&shuffled_v1),
            config: MeasurementConfig::default(),
        };
        prop_assert_eq!(
            compute_metrics(&ordered).unwrap(),
            compute_metrics(&shuffled).unwrap()
        );
    }

    #[test]
    fn equivalence_verdict_ignores_case_order(
        cases in prop::collection::vec(("[a-z0-9]{0,8}", any::<bool>()), 1..6)
    ) {
        let runner = ScriptedRunner::echoing();
        let timeout = Duration::from_secs(1);
        let expect_equivalent = cases.iter().all(|(_, matches)| *matches);

        let as_cases = |ordered: &[(String, bool)]| -> Vec<TestCase> {
            ordered
                .iter()
                .map(|(input, matches)| TestCase {
                    input: input.clone(),
                    expected_output: if *matches {
                        input.clone()
                    } else {
                        format!("{input}#")
                    },
                })
                .collect()
        };
        let mut pair = measured("equiv", 0.0);
        pair.test_cases = as_cases(&cases);
        let forward = check_equivalence(&pair, &runner, timeout).unwrap();
        prop_assert_eq!(forward, expect_equivalent);

        let mut reversed_cases = cases.clone();
        reversed_cases.reverse();
        pair.test_cases = as_cases(&reversed_cases);
        let backward = check_equivalence(&pair, &runner, timeout).unwrap();
        prop_assert_eq!(forward, backward);
    }
}

fn measured(id: &str, energy_diff: f64) -> CodePair {
    CodePair {
        pair_id: id.to_string(),
        problem_text: "p".to_string(),
        src_v0: "print(1)\n".to_string(),
        src_v1: "print(1)\n".to_string(),
        test_cases: vec![TestCase {
            input: String::new(),
            expected_output: String::new(),
        }],
        measured: Some(PairMetrics {
            e_v0: energy_diff.abs() + 1.0,
            e_v1: 1.0,
            t_v0: 1.0,
            t_v1: 1.0,
            m_v0: 1.0,
            m_v1: 1.0,
            energy_diff,
            energy_ratio: energy_diff.abs() + 1.0,
            time_ratio: 1.0,
            p_v0: energy_diff.abs() + 1.0,
            p_v1: 1.0,
            divergence: Divergence::BothImprove,
        }),
        labels: None,
    }
}

#[test]
fn catalog_round_trips_through_json() {
    let taxonomy = Taxonomy::canonical();
    let encoded = taxonomy.to_json();
    let reloaded = Taxonomy::from_json(&encoded).unwrap();
    assert_eq!(reloaded.to_json(), encoded);
}

#[test]
fn every_category_carries_a_positive_weight() {
    let taxonomy = Taxonomy::canonical();
    for category in &taxonomy.categories {
        let weight = taxonomy.severity_weight(&category.id).unwrap();
        assert!(weight > 0.0, "{} has weight {weight}", category.id);
    }
}
