//! End-to-end acceptance checks: each test exercises one external promise of
//! the toolchain, from catalog integrity through CLI exit codes, and prints a
//! PASS line when the promise holds. No real energy counters, interpreters
//! other than python3, or network endpoints are involved; measurement and
//! reasoning both run against scripted doubles.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use joulint_core::corpus::{
    agreement_report, cohen_kappa, select_top_by_energy, CodePair, LabelSet, TestCase,
};
use joulint_core::detect::{Confidence, Finding, ScanReport};
use joulint_core::profile::{
    compute_metrics, measure_pair, Divergence, MeasurementConfig, MockMeter, PairMeasurement,
    PairMetrics, RunSample,
};
use joulint_core::report::rank_by_impact;
use joulint_core::runner::{ok_outcome, ScriptedRunner};
use joulint_core::source::Span;
use joulint_core::triage::{
    triage_batch, triage_pair, BackendError, Completion, CompletionParams, ReasoningBackend,
    ReplayBackend, TraceStore, TriageTrace,
};
use joulint_core::Taxonomy;

#[path = "../../core/tests/support/diff.rs"]
mod diff;

fn pair(id: &str, problem: &str, v0: &str, v1: &str) -> CodePair {
    CodePair {
        pair_id: id.to_string(),
        problem_text: problem.to_string(),
        src_v0: v0.to_string(),
        src_v1: v1.to_string(),
        test_cases: vec![TestCase {
            input: String::new(),
            expected_output: String::new(),
        }],
        measured: None,
        labels: None,
    }
}

fn metrics(e_v0: f64, e_v1: f64, t_v0: f64, t_v1: f64) -> PairMetrics {
    PairMetrics {
        e_v0,
        e_v1,
        t_v0,
        t_v1,
        m_v0: 48200.0,
        m_v1: 9100.0,
        energy_diff: e_v0 - e_v1,
        energy_ratio: e_v0 / e_v1,
        time_ratio: t_v0 / t_v1,
        p_v0: e_v0 / t_v0,
        p_v1: e_v1 / t_v1,
        divergence: Divergence::BothImprove,
    }
}

fn unused_import_pair() -> CodePair {
    pair(
        "pair-4327",
        "Compute the arithmetic mean of a stream of sensor readings.",
        "import numpy as np\n\ndef mean(xs):\n    total = 0.0\n    for x in xs:\n        total = total + x\n    return total / len(xs)\n",
        "def mean(xs):\n    total = 0.0\n    for x in xs:\n        total = total + x\n    return total / len(xs)\n",
    )
}

fn sieve_pair() -> CodePair {
    pair(
        "pair-sieve",
        "List every prime below a limit.",
        "def primes(n):\n    found = []\n    for k in range(2, n):\n        ok = True\n        for p in found:\n            if k % p == 0:\n                ok = False\n        if ok:\n            found.append(k)\n    return found\n",
        "def primes(n):\n    flags = [True] * n\n    for k in range(2, n):\n        if flags[k]:\n            for m in range(k * k, n, k):\n                flags[m] = False\n    return [k for k in range(2, n) if flags[k]]\n",
    )
}

/// The catalog loads complete, its shape matches the published table, and
/// any structural tampering is rejected at load time.
#[test]
fn catalog_is_complete_and_tamper_proof() {
    let started = Instant::now();
    let taxonomy = Taxonomy::canonical();
    assert_eq!(taxonomy.categories.len(), 12);
    assert_eq!(taxonomy.root_causes.len(), 65);
    let expected_counts = [8usize, 3, 7, 8, 4, 7, 5, 4, 4, 6, 5, 4];
    for (index, expected) in expected_counts.iter().enumerate() {
        let id = format!("C{}", index + 1);
        assert_eq!(
            taxonomy.causes_of(&id).len(),
            *expected,
            "category {id} has the wrong number of root causes"
        );
    }

    let pristine: serde_json::Value = serde_json::from_str(&taxonomy.to_json()).unwrap();

    let mut dropped_cause = pristine.clone();
    let causes = dropped_cause["root_causes"].as_array_mut().unwrap();
    causes.pop();
    assert!(Taxonomy::from_json(&dropped_cause.to_string()).is_err());

    let mut dropped_category = pristine.clone();
    dropped_category["categories"].as_array_mut().unwrap().pop();
    assert!(Taxonomy::from_json(&dropped_category.to_string()).is_err());

    let mut crossed = pristine.clone();
    crossed["root_causes"][0]["id"] = serde_json::json!("C2.S99");
    assert!(Taxonomy::from_json(&crossed.to_string()).is_err());

    let mut duplicated = pristine.clone();
    let first_id = duplicated["root_causes"][0]["id"].clone();
    duplicated["root_causes"][1]["id"] = first_id;
    assert!(Taxonomy::from_json(&duplicated.to_string()).is_err());

    assert!(
        started.elapsed().as_secs_f64() < 1.0,
        "catalog load and tamper checks took {:?}",
        started.elapsed()
    );
    println!("PASS catalog: 12 categories, 65 root causes, tampering rejected");
}

/// Per-category severity weights carry the fleet's median savings, and file
/// ranking weights findings by those savings rather than by count.
#[test]
fn severity_ordering_matches_fleet_savings() {
    let taxonomy = Taxonomy::canonical();
    assert_eq!(taxonomy.severity_weight("C5").unwrap(), 3989.0);
    assert_eq!(taxonomy.severity_weight("C6").unwrap(), 3670.0);
    assert_eq!(taxonomy.severity_weight("C7").unwrap(), 1119.0);
    assert_eq!(taxonomy.severity_weight("C4").unwrap(), 307.0);

    let finding = |rule: &str, severity: f64, line: u32| Finding {
        root_cause_id: rule.to_string(),
        span: Span::new(line, 1, line, 2),
        message: format!("{rule} example"),
        refactor_hint: String::new(),
        severity,
        confidence: Confidence::Certain,
    };
    let lookup = finding("C5.S1", taxonomy.severity_weight("C5").unwrap(), 1);
    let single = ScanReport::from_findings(PathBuf::from("lookup.py"), vec![lookup]);
    let many: Vec<Finding> = (1..=10)
        .map(|line| finding("C4.S2", taxonomy.severity_weight("C4").unwrap(), line))
        .collect();
    let repeated = ScanReport::from_findings(PathBuf::from("branches.py"), many);

    let ranked = rank_by_impact(&[repeated, single]);
    assert_eq!(ranked[0].file, PathBuf::from("lookup.py"));
    assert_eq!(ranked[0].findings, 1);
    assert_eq!(ranked[1].findings, 10);
    assert!(ranked[0].total_severity > ranked[1].total_severity);
    println!("PASS ranking: one C5 finding outranks ten C4 findings (3989 > 3070)");
}

/// The two worked walkthroughs hold up end to end: the scanner labels their
/// shapes, and a scripted reasoning replay reproduces the published label
/// sets through all three triage steps.
#[test]
fn walkthrough_pairs_reproduce_their_labels() {
    let root = diff::fixture_root();
    let unused = diff::scan_file(&root.join("c1s1").join("smelly.py"));
    let expected: BTreeSet<String> = ["C1.S1".to_string()].into();
    assert_eq!(unused.labels, expected);

    let sieve = diff::scan_file(&root.join("c3s7").join("smelly.py"));
    assert!(sieve.labels.contains("C3.S7"));

    let taxonomy = Taxonomy::canonical();
    let backend = ReplayBackend::keyed([
        (
            vec!["Median measurements", "arithmetic mean"],
            "===ROOT CAUSES===\n\
             - a heavyweight module is loaded at startup and never used by any line of the program\n\
             ===END==="
                .to_string(),
        ),
        (
            vec!["catalog of inefficiency categories", "heavyweight module"],
            "===CATEGORIES===\nC1\n===END===".to_string(),
        ),
        (
            vec!["Decision rule:", "arithmetic mean"],
            "===LABELS===\nC1.S1\n===END===".to_string(),
        ),
        (
            vec!["Median measurements", "prime below"],
            "===ROOT CAUSES===\n\
             - every candidate is tested against the whole list of primes found so far\n\
             ===END==="
                .to_string(),
        ),
        (
            vec!["catalog of inefficiency categories", "whole list of primes"],
            "===CATEGORIES===\nC3\nC7\n===END===".to_string(),
        ),
        (
            vec!["Decision rule:", "prime below"],
            "===LABELS===\nC3.S7\nC7.S1\n===END===".to_string(),
        ),
    ]);

    let trace = triage_pair(
        &unused_import_pair(),
        &metrics(4358.9, 322.9, 3.0, 1.0),
        &taxonomy,
        &backend,
    )
    .unwrap();
    let labels: Vec<&String> = trace.step3_labels.root_cause_ids.iter().collect();
    assert_eq!(labels, vec!["C1.S1"]);

    let trace = triage_pair(
        &sieve_pair(),
        &metrics(2100.0, 240.0, 4.1, 0.7),
        &taxonomy,
        &backend,
    )
    .unwrap();
    let labels: Vec<&String> = trace.step3_labels.root_cause_ids.iter().collect();
    assert_eq!(labels, vec!["C3.S7", "C7.S1"]);
    println!("PASS walkthroughs: scan and triage reproduce {{C1.S1}} and {{C3.S7, C7.S1}}");
}

/// Every detection rule has a fixture pair where the smelly variant earns
/// exactly the expected labels, the refactored variant earns none, both
/// produce identical output, and the refactoring does not slow the program.
#[test]
fn every_rule_survives_its_differential_fixtures() {
    let started = Instant::now();
    for (rule, dir, expected) in diff::RULE_FIXTURES {
        let outcome = diff::differential(rule, dir);
        assert_eq!(outcome.rule, rule);
        let want: BTreeSet<String> = expected.iter().map(|s| s.to_string()).collect();
        assert_eq!(outcome.smelly_labels, want, "{rule} smelly labels");
        assert!(
            outcome.refactored_labels.is_empty(),
            "{rule} refactored variant should be clean, got {:?}",
            outcome.refactored_labels
        );
        assert!(outcome.outputs_match, "{rule} variants disagree on output");
        assert!(
            outcome.refactored_median <= outcome.smelly_median,
            "{rule} refactored variant is slower: {:.0} ms vs {:.0} ms",
            outcome.refactored_median * 1000.0,
            outcome.smelly_median * 1000.0
        );
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "differential fixtures took {elapsed:?}"
    );
    println!(
        "PASS rules: 12 differential fixture pairs faithful in {:.1} s",
        elapsed.as_secs_f64()
    );
}

/// The measurement protocol brackets every run in its own meter session:
/// warm-up plus three iterations over two variants is eight sessions, the
/// warm-ups are discarded, power times time reproduces energy, and the
/// unused-import walkthrough's savings come out at 4036 J and 13.5x.
#[test]
fn scripted_meter_follows_the_measurement_protocol() {
    let mut meter = MockMeter::with_readings(vec![
        1000.0, 4358.9, 4358.9, 4358.9, 900.0, 322.9, 322.9, 322.9,
    ]);
    let runs: Vec<_> = (0..8)
        .map(|i| {
            let wall = if i < 4 { 60.0 } else { 4.5 };
            Ok(ok_outcome("42\n", wall))
        })
        .collect();
    let runner = ScriptedRunner::sequence(runs);
    let config = MeasurementConfig {
        warmup_runs: 1,
        measured_iterations: 3,
        test_case_sample: 1,
        rng_seed: 0,
        timeout_secs: 10.0,
    };
    let measured = measure_pair(&unused_import_pair(), &config, &mut meter, &runner).unwrap();

    assert_eq!(meter.sessions_completed(), 8);
    let timeline = meter.timeline();
    for window in timeline.windows(2) {
        assert!(window[0].1 > window[0].0, "session ended before it began");
        assert!(
            window[1].0 >= window[0].1,
            "meter sessions overlap: {:?}",
            timeline
        );
    }
    assert_eq!(measured.v0_samples.len(), 3);
    assert_eq!(measured.v1_samples.len(), 3);

    let m = compute_metrics(&measured).unwrap();
    assert!((m.p_v0 * m.t_v0 - m.e_v0).abs() <= 0.01 * m.e_v0);
    assert!((m.p_v1 * m.t_v1 - m.e_v1).abs() <= 0.01 * m.e_v1);
    assert!(
        (m.energy_diff - 4036.0).abs() < 0.5,
        "energy saving {} J",
        m.energy_diff
    );
    assert!(
        (m.energy_ratio - 13.5).abs() < 0.05,
        "energy ratio {}",
        m.energy_ratio
    );
    println!("PASS protocol: 8 sessions, 6 samples, P*T=E, saving 4036 J at 13.5x");
}

/// All five time/energy divergence classes are reachable, including the
/// vectorized shape that finishes sooner yet burns half again more energy
/// because power jumps from 78 W to 135 W.
#[test]
fn all_five_divergence_classes_classify() {
    let sample = |e: f64, t: f64| RunSample {
        energy_j: e,
        wall_time_s: t,
        max_rss_kib: 2048,
        exit_ok: true,
    };
    let measurement = |id: &str, v0: [(f64, f64); 3], v1: [(f64, f64); 3]| PairMeasurement {
        pair_id: id.to_string(),
        v0_samples: v0.iter().map(|&(e, t)| sample(e, t)).collect(),
        v1_samples: v1.iter().map(|&(e, t)| sample(e, t)).collect(),
        config: MeasurementConfig::default(),
    };

    let both = measurement(
        "both-improve",
        [(100.0, 2.0), (101.0, 2.1), (99.0, 1.9)],
        [(40.0, 1.0), (41.0, 1.1), (39.0, 0.9)],
    );
    assert_eq!(
        compute_metrics(&both).unwrap().divergence,
        Divergence::BothImprove
    );

    let slower_but_cheaper = measurement(
        "slower-cheaper",
        [(100.0, 1.0), (100.0, 1.0), (100.0, 1.0)],
        [(60.0, 1.5), (60.0, 1.5), (60.0, 1.5)],
    );
    assert_eq!(
        compute_metrics(&slower_but_cheaper).unwrap().divergence,
        Divergence::TimeUpEnergyDown
    );

    let vectorized = measurement(
        "vectorized",
        [(156.0, 2.0), (156.0, 2.0), (156.0, 2.0)],
        [(243.0, 1.8), (243.0, 1.8), (243.0, 1.8)],
    );
    let m = compute_metrics(&vectorized).unwrap();
    assert_eq!(m.divergence, Divergence::EnergyUpTimeDown);
    assert_eq!(m.p_v0, 78.0);
    assert_eq!(m.p_v1, 135.0);
    assert!(m.t_v1 < m.t_v0, "the vectorized variant should be faster");
    assert!(
        m.e_v1 >= 1.5 * m.e_v0,
        "energy should worsen by at least half, got {} vs {}",
        m.e_v1,
        m.e_v0
    );

    let regression = measurement(
        "regression",
        [(100.0, 1.0), (100.0, 1.0), (100.0, 1.0)],
        [(150.0, 1.5), (150.0, 1.5), (150.0, 1.5)],
    );
    assert_eq!(
        compute_metrics(&regression).unwrap().divergence,
        Divergence::BothWorsen
    );

    let wash = measurement(
        "wash",
        [(100.0, 1.0), (100.0, 1.0), (100.0, 1.0)],
        [(100.5, 1.002), (100.5, 1.002), (100.5, 1.002)],
    );
    assert_eq!(
        compute_metrics(&wash).unwrap().divergence,
        Divergence::Neutral
    );
    println!("PASS divergence: all five classes, 78 W -> 135 W shape worsens energy 56%");
}

/// Agreement statistics hit their arithmetic anchors: perfect agreement is
/// exactly 1.0, the hand-checked 2x2 table lands on 0.4, and 94 exact set
/// matches out of 100 score 0.94.
#[test]
fn agreement_statistics_hit_their_anchors() {
    let labels = vec!["yes", "no", "yes", "yes", "no"];
    assert_eq!(cohen_kappa(&labels, &labels).unwrap(), 1.0);

    // 20 yes/yes, 5 yes/no, 10 no/yes, 15 no/no: observed agreement 0.7
    // against 0.5 expected by chance.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, count) in [
        ("yes", "yes", 20),
        ("yes", "no", 5),
        ("no", "yes", 10),
        ("no", "no", 15),
    ] {
        for _ in 0..count {
            a.push(x);
            b.push(y);
        }
    }
    let kappa = cohen_kappa(&a, &b).unwrap();
    assert!((kappa - 0.4).abs() < 1e-9, "hand-checked kappa came out {kappa}");

    let gold: Vec<LabelSet> = (0..100)
        .map(|i| LabelSet::new([format!("C{}.S1", i % 12 + 1)]))
        .collect();
    let predicted: Vec<LabelSet> = (0..100)
        .map(|i| {
            if i < 94 {
                gold[i].clone()
            } else {
                LabelSet::new(["C1.S2"])
            }
        })
        .collect();
    let report = agreement_report(&gold, &predicted).unwrap();
    assert_eq!(report.samples, 100);
    assert_eq!(report.exact_matches, 94);
    assert_eq!(report.accuracy, 0.94);
    println!("PASS agreement: kappa 1.0 and 0.4 on anchors, accuracy 0.94 on 94/100");
}

/// Picking the top pairs by energy saving gives the same answer no matter
/// how the corpus is ordered, with ties broken stably by pair id.
#[test]
fn top_k_selection_is_order_blind_and_tie_stable() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut pairs: Vec<CodePair> = (0..1000)
        .map(|i| {
            let mut p = pair(&format!("pair-{i:04}"), "p", "v0", "v1");
            let magnitude = ((i % 250) as f64) * 2.0;
            let diff = if i % 2 == 0 { magnitude } else { -magnitude };
            p.measured = Some(metrics(diff.abs() + 1.0, 1.0, 2.0, 1.0));
            p.measured.as_mut().unwrap().energy_diff = diff;
            p
        })
        .collect();

    let baseline = select_top_by_energy(&pairs, 25).unwrap();
    let baseline_ids: Vec<&String> = baseline.iter().map(|p| &p.pair_id).collect();
    for seed in 0..10u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        pairs.shuffle(&mut rng);
        let picked = select_top_by_energy(&pairs, 25).unwrap();
        let picked_ids: Vec<&String> = picked.iter().map(|p| &p.pair_id).collect();
        assert_eq!(picked_ids, baseline_ids, "selection changed under shuffle {seed}");
    }
    println!("PASS selection: top-25 of 1000 identical across 10 shuffles, ties stable");
}

/// A reasoning backend double that scripts replies while recording every
/// prompt it was shown, so tests can inspect exactly what the model sees.
struct Recording {
    inner: ReplayBackend,
    prompts: Mutex<Vec<String>>,
}

impl ReasoningBackend for Recording {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn complete(
        &self,
        prompt: &str,
        params: &CompletionParams,
    ) -> Result<Completion, BackendError> {
        self.prompts.lock().unwrap().push(prompt.to_string());
        self.inner.complete(prompt, params)
    }
}

/// The first triage step sees no catalog vocabulary, every trace's labels
/// stay inside the categories chosen in step two, and a pair triaged alone
/// produces byte-for-byte the trace it produces inside a batch.
#[test]
fn triage_never_primes_and_keeps_hierarchy() {
    let taxonomy = Taxonomy::canonical();

    let problems = [
        ("pair-batch-a", "The alpha report sums a column of numbers."),
        ("pair-batch-b", "The beta filter keeps values in a whitelist."),
        ("pair-batch-c", "The gamma export writes one large text blob."),
    ];
    let sources = [
        ("import json\nprint(sum([1, 2, 3]))\n", "print(sum([1, 2, 3]))\n"),
        ("print(2 in [1, 2, 3])\n", "print(2 in {1, 2, 3})\n"),
        ("s = ''\nfor i in range(3):\n    s += str(i)\nprint(s)\n", "print(''.join(str(i) for i in range(3)))\n"),
    ];
    let replies = [
        (
            "alpha",
            "- the alpha build loads a helper module it never touches",
            "===CATEGORIES===\nC1\n===END===",
            "===LABELS===\nC1.S1\n===END===",
        ),
        (
            "beta",
            "- the beta pass rescans a plain list for every membership probe",
            "===CATEGORIES===\nC5\n===END===",
            "===LABELS===\nC5.S1\n===END===",
        ),
        (
            "gamma",
            "- the gamma stage glues report fragments together one piece at a time",
            "===CATEGORIES===\nC10\n===END===",
            "===LABELS===\nC10.S4\n===END===",
        ),
    ];

    let mut rules: Vec<(Vec<String>, String)> = Vec::new();
    for (marker, statement, cats, labels) in replies {
        rules.push((
            vec!["Median measurements".to_string(), marker.to_string()],
            format!("===ROOT CAUSES===\n{statement}\n===END==="),
        ));
        rules.push((
            vec![
                "catalog of inefficiency categories".to_string(),
                statement.trim_start_matches("- ").to_string(),
            ],
            cats.to_string(),
        ));
        rules.push((
            vec!["Decision rule:".to_string(), marker.to_string()],
            labels.to_string(),
        ));
    }
    let backend = Recording {
        inner: ReplayBackend::keyed(rules),
        prompts: Mutex::new(Vec::new()),
    };

    let items: Vec<(CodePair, PairMetrics)> = problems
        .iter()
        .zip(sources.iter())
        .enumerate()
        .map(|(i, ((id, problem), (v0, v1)))| {
            (
                pair(id, problem, v0, v1),
                metrics(900.0 + i as f64, 90.0, 3.0, 1.0),
            )
        })
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let store = TraceStore::open(dir.path().join("traces.jsonl"));
    let summary = triage_batch(&items, &taxonomy, &backend, &store, 2).unwrap();
    assert_eq!(summary.traced, 3);
    assert!(summary.failures.is_empty());

    // Step-1 prompts must carry zero catalog vocabulary: no category or
    // root-cause id, no category or root-cause name.
    let prompts = backend.prompts.lock().unwrap();
    let step1: Vec<&String> = prompts
        .iter()
        .filter(|p| p.contains("Median measurements"))
        .collect();
    assert_eq!(step1.len(), 3);
    for prompt in &step1 {
        let lower = prompt.to_lowercase();
        for category in &taxonomy.categories {
            assert!(
                !prompt.contains(&category.id),
                "step-1 prompt leaks id {}",
                category.id
            );
            assert!(
                !lower.contains(&category.name.to_lowercase()),
                "step-1 prompt leaks category name {}",
                category.name
            );
        }
        for cause in &taxonomy.root_causes {
            assert!(
                !prompt.contains(&cause.id),
                "step-1 prompt leaks id {}",
                cause.id
            );
            assert!(
                !lower.contains(&cause.name.to_lowercase()),
                "step-1 prompt leaks root-cause name {}",
                cause.name
            );
        }
    }
    drop(prompts);

    // Every trace's labels stay inside the categories picked in step two.
    let batch_traces = store.traces().unwrap();
    assert_eq!(batch_traces.len(), 3);
    for trace in &batch_traces {
        for label in &trace.step3_labels.root_cause_ids {
            let parent = Taxonomy::parent_category(label).unwrap();
            assert!(
                trace.step2_categories.iter().any(|c| c == parent),
                "trace {} label {} escapes its step-2 categories",
                trace.pair_id,
                label
            );
        }
    }

    // A pair triaged on its own yields exactly the trace the batch wrote.
    let by_id: BTreeMap<&String, &TriageTrace> =
        batch_traces.iter().map(|t| (&t.pair_id, t)).collect();
    for (pair, metrics) in &items {
        let solo = triage_pair(pair, metrics, &taxonomy, &backend).unwrap();
        let from_batch = by_id[&pair.pair_id];
        assert_eq!(
            serde_json::to_string(&solo).unwrap(),
            serde_json::to_string(from_batch).unwrap(),
            "batch and solo traces differ for {}",
            pair.pair_id
        );
    }
    println!("PASS triage: prompts unprimed, hierarchy consistent, batch = solo");
}

/// The scan subcommand is deterministic over a fixture tree and speaks
/// through its exit code: findings give 1, a clean tree gives 0, and an
/// unreadable path gives 2.
#[test]
fn scan_cli_is_deterministic_and_signals_by_exit_code() {
    let fixtures = diff::fixture_root();
    let dir = tempfile::tempdir().unwrap();
    let smelly_dir = dir.path().join("smelly");
    let clean_dir = dir.path().join("clean");
    std::fs::create_dir_all(&smelly_dir).unwrap();
    std::fs::create_dir_all(&clean_dir).unwrap();

    let mut copied = 0usize;
    for (_, fixture, _) in diff::RULE_FIXTURES {
        std::fs::copy(
            fixtures.join(fixture).join("smelly.py"),
            smelly_dir.join(format!("{fixture}.py")),
        )
        .unwrap();
        copied += 1;
        if copied <= 8 {
            std::fs::copy(
                fixtures.join(fixture).join("refactored.py"),
                clean_dir.join(format!("{fixture}.py")),
            )
            .unwrap();
        }
    }
    let tree_size = walk_count(dir.path());
    assert_eq!(tree_size, 20, "fixture tree should hold 20 files");

    let binary = env!("CARGO_BIN_EXE_joulint");
    let out_a = dir.path().join("report-a.json");
    let out_b = dir.path().join("report-b.json");
    for out in [&out_a, &out_b] {
        let status = Command::new(binary)
            .arg("scan")
            .arg(dir.path())
            .args(["--format", "json", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(1), "a tree with findings should exit 1");
    }
    let report_a = std::fs::read(&out_a).unwrap();
    let report_b = std::fs::read(&out_b).unwrap();
    assert_eq!(report_a, report_b, "identical scans produced different reports");
    assert!(!report_a.is_empty());

    let clean = Command::new(binary)
        .arg("scan")
        .arg(&clean_dir)
        .args(["--format", "json"])
        .output()
        .unwrap();
    assert_eq!(clean.status.code(), Some(0), "a clean tree should exit 0");

    let missing = Command::new(binary)
        .arg("scan")
        .arg(dir.path().join("no-such-dir"))
        .output()
        .unwrap();
    assert_eq!(
        missing.status.code(),
        Some(2),
        "an unreadable path should exit 2, stderr: {}",
        String::from_utf8_lossy(&missing.stderr)
    );
    println!("PASS cli: identical reports across runs, exit codes 1/0/2 as contracted");
}

fn walk_count(root: &std::path::Path) -> usize {
    let mut count = 0;
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "py") {
                count += 1;
            }
        }
    }
    count
}
