use std::collections::BTreeSet;
use std::path::Path;

use super::*;
use crate::source::parse;

fn model(src: &str) -> SourceModel {
    parse(src).expect("fixture parses")
}

fn scan(src: &str) -> ScanReport {
    detect_all(
        Path::new("scan.py"),
        &model(src),
        &Taxonomy::canonical(),
        &RuleConfig::default(),
    )
    .expect("scan succeeds")
}

fn labels(src: &str) -> BTreeSet<String> {
    scan(src).labels
}

fn findings(rule: &str, src: &str) -> Vec<Finding> {
    detect_rule(rule, &model(src)).expect("rule runs")
}

// C1.S1

#[test]
fn unused_import_is_flagged() {
    let src = "import numpy as np\n\ndef f(xs):\n    return sum(xs)\n\nprint(f([1, 2]))\n";
    let hits = findings("C1.S1", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("np"));
    assert_eq!(hits[0].span.start_line, 1);
}

#[test]
fn code_after_return_is_flagged() {
    let src = "def f(x):\n    return x\n    x += 1\n";
    let hits = findings("C1.S1", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 3);
    assert!(hits[0].message.contains("unreachable"));
}

#[test]
fn assigned_but_never_read_local_is_flagged() {
    let src = "def f(xs):\n    t = sum(xs)\n    return len(xs)\n";
    let hits = findings("C1.S1", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("`t`"));
}

#[test]
fn used_import_and_read_local_are_clean() {
    let src = "import math\n\ndef f(xs):\n    t = sum(xs)\n    return t * math.pi\n";
    assert!(findings("C1.S1", src).is_empty());
}

#[test]
fn underscore_locals_are_exempt() {
    let src = "def f(pairs):\n    _unused = pairs.pop()\n    return pairs\n";
    assert!(findings("C1.S1", src).is_empty());
}

#[test]
fn local_read_by_nested_function_is_clean() {
    let src = "def outer(x):\n    base = x * 2\n    def inner(y):\n        return base + y\n    return inner\n";
    assert!(findings("C1.S1", src).is_empty());
}

// C1.S2

#[test]
fn self_assignment_is_flagged() {
    let src = "x = 1\nx = x\nprint(x)\n";
    let hits = findings("C1.S2", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 2);
}

#[test]
fn overwrite_before_read_is_flagged() {
    let src = "y = expensive()\ny = cheap()\nprint(y)\n";
    let hits = findings("C1.S2", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 1);
    assert!(hits[0].message.contains("line 2"));
}

#[test]
fn read_between_writes_is_clean() {
    let src = "y = first()\nprint(y)\ny = second()\nprint(y)\n";
    assert!(findings("C1.S2", src).is_empty());
}

#[test]
fn augmented_update_is_not_redundant() {
    let src = "y = 1\ny += 2\nprint(y)\n";
    assert!(findings("C1.S2", src).is_empty());
}

// C1.S4

#[test]
fn duplicate_expression_is_flagged() {
    let src = "lo = min(data) + max(data) * 2\nhi = min(data) + max(data) * 2\nprint(lo, hi)\n";
    let hits = findings("C1.S4", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 2);
    assert!(hits[0].message.contains("line 1"));
}

#[test]
fn named_subexpression_is_clean() {
    let src = "common = min(data) + max(data) * 2\nlo = common\nhi = common\nprint(lo, hi)\n";
    assert!(findings("C1.S4", src).is_empty());
}

#[test]
fn mutation_between_occurrences_is_clean() {
    let src = "lo = min(data) + max(data) * 2\ndata.append(5)\nhi = min(data) + max(data) * 2\nprint(lo, hi)\n";
    assert!(findings("C1.S4", src).is_empty());
}

#[test]
fn duplicates_in_sibling_branches_are_separate() {
    let src = "if flag:\n    a = len(xs) + len(ys)\nelse:\n    b = len(xs) + len(ys)\nprint(flag)\n";
    assert!(findings("C1.S4", src).is_empty());
}

// C3.S2

#[test]
fn invariant_recomputed_in_loop_is_flagged() {
    let src = "def spread(readings, xs):\n    out = []\n    for x in xs:\n        span = max(readings) - min(readings)\n        out.append(x * span)\n    return out\n";
    let hits = findings("C3.S2", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 4);
    assert!(hits[0].message.contains("max(readings) - min(readings)"));
}

#[test]
fn invariant_in_comprehension_is_flagged() {
    let src = "scaled = [x * (hi - lo) for x in xs]\nprint(scaled)\n";
    let hits = findings("C3.S2", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("hi - lo"));
}

#[test]
fn hoisted_invariant_is_clean() {
    let src = "def spread(readings, xs):\n    span = max(readings) - min(readings)\n    out = []\n    for x in xs:\n        out.append(x * span)\n    return out\n";
    assert!(findings("C3.S2", src).is_empty());
}

#[test]
fn expression_over_the_loop_variable_is_clean() {
    let src = "for x in xs:\n    print(x * x + 1)\n";
    assert!(findings("C3.S2", src).is_empty());
}

// C3.S5

#[test]
fn flag_search_without_break_is_flagged() {
    let src = "found = False\nfor x in xs:\n    if x == target:\n        found = True\nprint(found)\n";
    let hits = findings("C3.S5", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 4);
}

#[test]
fn search_with_break_is_clean() {
    let src = "found = False\nfor x in xs:\n    if x == target:\n        found = True\n        break\nprint(found)\n";
    assert!(findings("C3.S5", src).is_empty());
}

#[test]
fn branch_with_else_is_clean() {
    let src = "for x in xs:\n    if x == target:\n        state = True\n    else:\n        state = False\nprint(state)\n";
    assert!(findings("C3.S5", src).is_empty());
}

// C3.S7

#[test]
fn removing_from_iterated_list_is_flagged() {
    let src = "for x in items:\n    if x < 0:\n        items.remove(x)\nprint(items)\n";
    let hits = findings("C3.S7", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("items"));
}

#[test]
fn front_pop_in_while_is_flagged() {
    let src = "while queue:\n    item = queue.pop(0)\n    handle(item)\n";
    let hits = findings("C3.S7", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("queue"));
}

#[test]
fn end_pop_is_clean() {
    let src = "while stack:\n    item = stack.pop()\n    handle(item)\n";
    assert!(findings("C3.S7", src).is_empty());
}

#[test]
fn rebuilding_the_list_is_clean() {
    let src = "items = [x for x in items if x >= 0]\nprint(items)\n";
    assert!(findings("C3.S7", src).is_empty());
}

// C4.S2

#[test]
fn constant_condition_is_flagged() {
    let src = "if 3 in (9, 8, 7, 3):\n    print('hit')\n";
    let hits = findings("C4.S2", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("3 in (9, 8, 7, 3)"));
}

#[test]
fn constant_false_while_is_flagged() {
    let src = "while 0:\n    print('never')\n";
    assert_eq!(findings("C4.S2", src).len(), 1);
}

#[test]
fn variable_condition_is_clean() {
    let src = "if x > 2:\n    print(x)\n";
    assert!(findings("C4.S2", src).is_empty());
}

#[test]
fn deliberate_infinite_loop_is_exempt() {
    let src = "while True:\n    step()\n    break\n";
    assert!(findings("C4.S2", src).is_empty());
}

// C5.S1

#[test]
fn list_membership_in_loop_is_flagged() {
    let src = "allowed = [normalize(w) for w in words]\nhits = 0\nfor q in queries:\n    if q in allowed:\n        hits += 1\nprint(hits)\n";
    let hits = findings("C5.S1", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].confidence, Confidence::Likely);
    assert!(hits[0].message.contains("allowed"));
}

#[test]
fn set_membership_is_clean() {
    let src = "allowed = {normalize(w) for w in words}\nhits = 0\nfor q in queries:\n    if q in allowed:\n        hits += 1\nprint(hits)\n";
    assert!(findings("C5.S1", src).is_empty());
}

#[test]
fn indexed_list_keeps_its_order_guarantee() {
    let src = "ranked = [score(w) for w in words]\nfor q in queries:\n    if q in ranked:\n        print(ranked[0])\n";
    assert!(findings("C5.S1", src).is_empty());
}

#[test]
fn membership_outside_any_loop_is_clean() {
    let src = "allowed = [1, 2, 3]\nif x in allowed:\n    print(x)\n";
    assert!(findings("C5.S1", src).is_empty());
}

// C6.S3

#[test]
fn materialized_argument_is_flagged() {
    let src = "total = sum([x * x for x in data])\nprint(total)\n";
    let hits = findings("C6.S3", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].span.start_line, 1);
}

#[test]
fn generator_argument_is_clean() {
    let src = "total = sum(x * x for x in data)\nprint(total)\n";
    assert!(findings("C6.S3", src).is_empty());
}

#[test]
fn single_pass_list_is_flagged() {
    let src = "rows = [line + '!' for line in lines]\nfor row in rows:\n    print(row)\n";
    let hits = findings("C6.S3", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("rows"));
}

#[test]
fn list_iterated_twice_is_clean() {
    let src = "rows = [line + '!' for line in lines]\nfor row in rows:\n    print(row)\nprint(len(rows))\n";
    assert!(findings("C6.S3", src).is_empty());
}

// C6.S7

#[test]
fn mutable_default_is_flagged() {
    let src = "def log_event(event, log=[]):\n    log.append(event)\n    return log\n";
    let hits = findings("C6.S7", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("log"));
}

#[test]
fn none_default_is_clean() {
    let src = "def log_event(event, log=None):\n    if log is None:\n        log = []\n    log.append(event)\n    return log\n";
    assert!(findings("C6.S7", src).is_empty());
}

#[test]
fn scalar_default_is_clean() {
    let src = "def scale(x, factor=2):\n    return x * factor\n";
    assert!(findings("C6.S7", src).is_empty());
}

// C10.S1

#[test]
fn manual_sum_is_flagged() {
    let src = "total = 0\nfor v in values:\n    total += v\nprint(total)\n";
    let hits = findings("C10.S1", src);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].confidence, Confidence::Likely);
    assert!(hits[0].message.contains("summing"));
}

#[test]
fn manual_count_is_flagged() {
    let src = "n = 0\nfor w in words:\n    n += 1\nprint(n)\n";
    let hits = findings("C10.S1", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("length"));
}

#[test]
fn manual_minimum_is_flagged() {
    let src = "best = data[0]\nfor v in data:\n    if v < best:\n        best = v\nprint(best)\n";
    let hits = findings("C10.S1", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("minimum"));
}

#[test]
fn conditional_accumulation_is_clean() {
    let src = "total = 0\nfor v in values:\n    if v > 0:\n        total += v\nprint(total)\n";
    assert!(findings("C10.S1", src).is_empty());
}

#[test]
fn builtin_reduction_is_clean() {
    let src = "total = sum(values)\nprint(total)\n";
    assert!(findings("C10.S1", src).is_empty());
}

#[test]
fn string_accumulator_is_not_a_sum() {
    let src = "out = ''\nfor p in parts:\n    out += p\nprint(out)\n";
    assert!(findings("C10.S1", src).is_empty());
}

// C10.S4

#[test]
fn string_concat_in_loop_is_flagged() {
    let src = "out = ''\nfor p in parts:\n    out += p\nprint(out)\n";
    let hits = findings("C10.S4", src);
    assert_eq!(hits.len(), 1);
    assert!(hits[0].message.contains("out"));
}

#[test]
fn explicit_concat_form_is_flagged() {
    let src = "def render(parts):\n    s = ''\n    for p in parts:\n        s = s + p\n    return s\n";
    assert_eq!(findings("C10.S4", src).len(), 1);
}

#[test]
fn numeric_accumulator_is_not_string_concat() {
    let src = "total = 0\nfor v in values:\n    total += v\nprint(total)\n";
    assert!(findings("C10.S4", src).is_empty());
}

#[test]
fn collecting_parts_and_joining_is_clean() {
    let src = "chunks = []\nfor p in parts:\n    chunks.append(p)\nprint(''.join(chunks))\n";
    assert!(findings("C10.S4", src).is_empty());
}

// engine behaviour

#[test]
fn empty_module_yields_empty_report() {
    let report = scan("");
    assert!(report.findings.is_empty());
    assert!(report.labels.is_empty());
    assert!(report.stats.is_empty());
}

#[test]
fn discarded_expensive_result_gets_one_label() {
    let src = "import hashlib\n\ndef checksum(n):\n    total = 0\n    for i in range(n):\n        total = (total * 31 + i) % 9973\n    return total\n\ndef main():\n    unused = checksum(2000000)\n    print(checksum(1000))\n\nmain()\n";
    let report = scan(src);
    let expect: BTreeSet<String> = ["C1.S1".to_string()].into();
    assert_eq!(report.labels, expect);
    assert_eq!(report.findings.len(), 2);
}

#[test]
fn concat_with_invariant_index_gets_both_labels() {
    let src = "def tail_join(items, sep):\n    out = ''\n    for it in items:\n        out += it + sep[len(sep) - 1]\n    return out\n";
    let report = scan(src);
    let expect: BTreeSet<String> = ["C3.S2".to_string(), "C10.S4".to_string()].into();
    assert_eq!(report.labels, expect);
    assert_eq!(report.stats.get("C3"), Some(&1));
    assert_eq!(report.stats.get("C10"), Some(&1));
}

#[test]
fn reports_serialize_identically_across_runs() {
    let src = "allowed = [1, 2, 3]\nout = ''\nfor q in items:\n    if q in allowed:\n        out += 'x'\nif 2 in (1, 2):\n    print(out)\n";
    let a = serde_json::to_vec(&scan(src)).unwrap();
    let b = serde_json::to_vec(&scan(src)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rules_run_independently() {
    let src = "def tail_join(items, sep):\n    out = ''\n    for it in items:\n        out += it + sep[len(sep) - 1]\n    return out\n";
    let full = scan(src);
    for id in full.labels.iter() {
        let solo = detect_all(
            Path::new("scan.py"),
            &model(src),
            &Taxonomy::canonical(),
            &RuleConfig {
                enabled: vec![id.clone()],
                ..RuleConfig::default()
            },
        )
        .unwrap();
        let from_full: Vec<&Finding> = full
            .findings
            .iter()
            .filter(|f| &f.root_cause_id == id)
            .collect();
        assert_eq!(solo.findings.iter().collect::<Vec<_>>(), from_full);
    }
}

#[test]
fn findings_are_ordered_by_severity_then_position() {
    let src = "allowed = [1, 2, 3]\nout = ''\nfor q in items:\n    if q in allowed:\n        out += 'x'\nif 2 in (1, 2):\n    print(out)\n";
    let report = scan(src);
    let order: Vec<&str> = report
        .findings
        .iter()
        .map(|f| f.root_cause_id.as_str())
        .collect();
    assert_eq!(order, ["C5.S1", "C10.S4", "C4.S2"]);
    for pair in report.findings.windows(2) {
        assert!(
            pair[0].severity > pair[1].severity
                || (pair[0].severity == pair[1].severity && pair[0].span <= pair[1].span)
        );
    }
}

#[test]
fn unknown_rule_is_rejected() {
    let m = model("x = 1\n");
    assert_eq!(
        detect_rule("C13.S1", &m),
        Err(DetectError::UnknownRule("C13.S1".into()))
    );
    assert_eq!(
        detect_rule("C1.S99", &m),
        Err(DetectError::UnknownRule("C1.S99".into()))
    );
}

#[test]
fn catalogued_but_dynamic_rule_is_rejected_distinctly() {
    let m = model("x = 1\n");
    let err = detect_rule("C2.S1", &m).unwrap_err();
    assert_eq!(err, DetectError::UnsupportedRule("C2.S1".into()));
    assert_ne!(err, DetectError::UnknownRule("C2.S1".into()));

    let config = RuleConfig {
        enabled: vec!["C2.S1".into()],
        ..RuleConfig::default()
    };
    let from_all = detect_all(Path::new("x.py"), &m, &Taxonomy::canonical(), &config);
    assert_eq!(from_all, Err(DetectError::UnsupportedRule("C2.S1".into())));
}

#[test]
fn catalog_marks_exactly_the_implemented_rules() {
    let taxonomy = Taxonomy::canonical();
    let marked: BTreeSet<&str> = taxonomy
        .root_causes
        .iter()
        .filter(|rc| rc.statically_detectable)
        .map(|rc| rc.id.as_str())
        .collect();
    let implemented: BTreeSet<&str> = IMPLEMENTED_RULES.into();
    assert_eq!(marked, implemented);
}

#[test]
fn min_confidence_drops_likely_findings() {
    let src = "allowed = [1, 2, 3]\nout = ''\nfor q in items:\n    if q in allowed:\n        out += 'x'\nprint(out)\n";
    let strict = detect_all(
        Path::new("scan.py"),
        &model(src),
        &Taxonomy::canonical(),
        &RuleConfig {
            min_confidence: Confidence::Certain,
            ..RuleConfig::default()
        },
    )
    .unwrap();
    assert!(!strict.labels.contains("C5.S1"));
    assert!(strict.labels.contains("C10.S4"));
}

#[test]
fn config_defaults_fill_missing_fields() {
    let config: RuleConfig = serde_json::from_str("{}").unwrap();
    assert_eq!(config.enabled.len(), IMPLEMENTED_RULES.len());
    assert_eq!(config.min_confidence, Confidence::Likely);
    let partial: RuleConfig =
        serde_json::from_str(r#"{"min_confidence": "certain"}"#).unwrap();
    assert_eq!(partial.min_confidence, Confidence::Certain);
    assert_eq!(partial.enabled.len(), IMPLEMENTED_RULES.len());
}

#[test]
fn severity_comes_from_the_category() {
    let src = "allowed = [1, 2]\nfor q in items:\n    if q in allowed:\n        print(q)\n";
    let hits = findings("C5.S1", src);
    let taxonomy = Taxonomy::canonical();
    assert_eq!(hits[0].severity, taxonomy.severity_weight("C5").unwrap());
    assert!(!hits[0].refactor_hint.is_empty());
}
