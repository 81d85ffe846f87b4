use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use joulint_core::corpus::{
    agreement_report, check_equivalence, cohen_kappa, load_corpus, save_corpus,
    select_top_by_energy, LabelSet, LoadedCorpus,
};
use joulint_core::detect::{detect_all, RuleConfig};
use joulint_core::profile::{
    compute_metrics, fleet_stats, measure_pair, EnergyMeter, FileMeter, MeasurementConfig,
    SystemMeter,
};
use joulint_core::report::{
    build_report, co_occurrence, emit, filter_by_threshold, Report, ReportFormat,
};
use joulint_core::runner::ProcessRunner;
use joulint_core::source::parse;
use joulint_core::triage::{
    triage_batch, HttpBackend, TraceStore, TriageTrace, BACKEND_KEY_VAR, BACKEND_MODEL_VAR,
    BACKEND_URL_VAR,
};
use joulint_core::Taxonomy;

#[derive(Parser)]
#[command(name = "joulint", version)]
#[command(about = "Energy-smell analysis for Python programs and program pairs")]
struct Cli {
    /// Config file; `./joulint.toml` is picked up automatically when present
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Show the smell catalog, or validate an external one
    Taxonomy {
        /// Output format: text or json
        #[arg(long)]
        format: Option<String>,
        /// Validate this catalog document instead of printing the built-in one
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Statically scan Python sources for energy smells
    Scan {
        /// Files or directories to scan
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Comma-separated root-cause ids to run (default: every implemented rule)
        #[arg(long)]
        rules: Option<String>,
        /// Drop findings below this confidence: likely or certain
        #[arg(long)]
        min_confidence: Option<String>,
        /// Drop findings whose estimated impact is below this many joules
        #[arg(long)]
        threshold_joules: Option<f64>,
        /// Output format: text, json, or sarif
        #[arg(long)]
        format: Option<String>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that both versions of each pair produce identical output
    Equiv {
        /// Corpus of program pairs, one JSON record per line
        #[arg(long)]
        corpus: PathBuf,
        /// Check only this pair id
        #[arg(long)]
        pair: Option<String>,
        /// Per-run timeout in seconds
        #[arg(long, default_value_t = 10.0)]
        timeout: f64,
        /// Interpreter used to run the cases
        #[arg(long, default_value = "python3")]
        interpreter: String,
    },
    /// Measure energy, wall time, and peak memory for every pair
    Profile {
        /// Corpus of program pairs, one JSON record per line
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the corpus with measurements attached
        #[arg(long)]
        out: PathBuf,
        /// Seed for test-case sampling
        #[arg(long)]
        seed: Option<u64>,
        /// Measured iterations per version
        #[arg(long)]
        iterations: Option<usize>,
        /// Discarded warmup runs per version
        #[arg(long)]
        warmups: Option<usize>,
        /// How many test cases each run feeds through
        #[arg(long)]
        sample_cases: Option<usize>,
        /// Per-run timeout in seconds
        #[arg(long)]
        timeout: Option<f64>,
        /// Cumulative joule-counter file; repeat for multiple sockets.
        /// Defaults to the host's RAPL package counters.
        #[arg(long)]
        meter_file: Vec<PathBuf>,
        /// Command whose output carries a cumulative energy counter
        #[arg(long)]
        meter_cmd: Option<String>,
        /// Regex with one capture group that extracts the counter
        #[arg(long, default_value = r"([0-9]+(?:\.[0-9]+)?)")]
        meter_pattern: String,
        /// Joules per counter unit (RAPL microjoules: 1e-6)
        #[arg(long, default_value_t = 1e-6)]
        meter_scale: f64,
        /// Interpreter used to run the cases
        #[arg(long, default_value = "python3")]
        interpreter: String,
    },
    /// Pick the pairs with the largest measured energy savings
    Select {
        /// Corpus with measurements attached
        #[arg(long)]
        corpus: PathBuf,
        /// How many pairs to keep
        #[arg(short = 'k', long, default_value_t = 10)]
        top: usize,
        /// Write the selected pairs here instead of listing them
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label measured pairs with root causes via the reasoning backend
    Triage {
        /// Corpus with measurements attached
        #[arg(long)]
        corpus: PathBuf,
        /// Trace store; pairs already present are skipped on rerun
        #[arg(long)]
        out: PathBuf,
        /// Chat-completions endpoint (overrides the environment)
        #[arg(long)]
        backend_url: Option<String>,
        /// Model name sent to the endpoint (overrides the environment)
        #[arg(long)]
        model: Option<String>,
        /// Pairs triaged concurrently
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Agreement between two labelings of the same pairs
    Kappa {
        /// Reference labels: a corpus or a trace file
        #[arg(long)]
        gold: PathBuf,
        /// Labels to evaluate: a corpus or a trace file
        #[arg(long)]
        pred: PathBuf,
    },
    /// Label co-occurrence and per-file impact ranking
    Report {
        /// Label sets to correlate: a corpus or a trace file
        #[arg(long)]
        labels: Option<PathBuf>,
        /// A scan report saved with --format json, to rank by impact
        #[arg(long)]
        scan: Option<PathBuf>,
        /// Output format: text, json, or sarif
        #[arg(long)]
        format: Option<String>,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    scan: ScanSection,
    profile: ProfileSection,
    triage: TriageSection,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScanSection {
    rules: Option<Vec<String>>,
    min_confidence: Option<String>,
    threshold_joules: Option<f64>,
    format: Option<String>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProfileSection {
    seed: Option<u64>,
    iterations: Option<usize>,
    warmups: Option<usize>,
    sample_cases: Option<usize>,
    timeout_secs: Option<f64>,
}

#[derive(Debug, Default, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TriageSection {
    backend_url: Option<String>,
    model: Option<String>,
    parallelism: Option<usize>,
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Commands::Taxonomy { format, check } => cmd_taxonomy(format, check),
        Commands::Scan {
            paths,
            rules,
            min_confidence,
            threshold_joules,
            format,
            out,
        } => cmd_scan(
            paths,
            rules,
            min_confidence,
            threshold_joules,
            format,
            out,
            &config.scan,
        ),
        Commands::Equiv {
            corpus,
            pair,
            timeout,
            interpreter,
        } => cmd_equiv(corpus, pair, timeout, interpreter),
        Commands::Profile {
            corpus,
            out,
            seed,
            iterations,
            warmups,
            sample_cases,
            timeout,
            meter_file,
            meter_cmd,
            meter_pattern,
            meter_scale,
            interpreter,
        } => cmd_profile(
            ProfileArgs {
                corpus,
                out,
                seed,
                iterations,
                warmups,
                sample_cases,
                timeout,
                meter_file,
                meter_cmd,
                meter_pattern,
                meter_scale,
                interpreter,
            },
            &config.profile,
        ),
        Commands::Select { corpus, top, out } => cmd_select(corpus, top, out),
        Commands::Triage {
            corpus,
            out,
            backend_url,
            model,
            parallelism,
        } => cmd_triage(corpus, out, backend_url, model, parallelism, &config.triage),
        Commands::Kappa { gold, pred } => cmd_kappa(gold, pred),
        Commands::Report {
            labels,
            scan,
            format,
            out,
        } => cmd_report(labels, scan, format, out, &config.scan),
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    let text = match path {
        Some(p) => {
            fs::read_to_string(p).with_context(|| format!("read config {}", p.display()))?
        }
        None => match fs::read_to_string("joulint.toml") {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(FileConfig::default())
            }
            Err(e) => return Err(e).context("read joulint.toml"),
        },
    };
    toml::from_str(&text).context("parse config")
}

fn cmd_taxonomy(format: Option<String>, check: Option<PathBuf>) -> Result<i32> {
    if let Some(path) = check {
        let text =
            fs::read_to_string(&path).with_context(|| format!("read {}", path.display()))?;
        return match Taxonomy::from_json(&text) {
            Ok(t) => {
                println!(
                    "{}: ok ({} categories, {} root causes)",
                    path.display(),
                    t.categories.len(),
                    t.root_causes.len()
                );
                Ok(0)
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                Ok(2)
            }
        };
    }

    let taxonomy = Taxonomy::canonical();
    match format.as_deref().unwrap_or("text") {
        "json" => println!("{}", taxonomy.to_json()),
        "text" => {
            for category in &taxonomy.categories {
                let weight = taxonomy.severity_weight(&category.id)?;
                println!(
                    "{:<6}  {}  ({} root causes, weight {:.0} J)",
                    category.id,
                    category.name,
                    taxonomy.causes_of(&category.id).len(),
                    weight
                );
            }
            println!(
                "{} categories, {} root causes",
                taxonomy.categories.len(),
                taxonomy.root_causes.len()
            );
        }
        other => bail!("unknown format `{other}`; expected text or json"),
    }
    Ok(0)
}

fn cmd_scan(
    paths: Vec<PathBuf>,
    rules: Option<String>,
    min_confidence: Option<String>,
    threshold_joules: Option<f64>,
    format: Option<String>,
    out: Option<PathBuf>,
    section: &ScanSection,
) -> Result<i32> {
    let files = collect_python_files(&paths)?;
    if files.is_empty() {
        bail!("no .py files under the given paths");
    }

    let taxonomy = Taxonomy::canonical();
    let mut rule_config = RuleConfig::default();
    let rule_list = rules.or_else(|| section.rules.as_ref().map(|v| v.join(",")));
    if let Some(list) = rule_list {
        rule_config.enabled = list
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if rule_config.enabled.is_empty() {
            bail!("--rules named no rules");
        }
    }
    if let Some(level) = min_confidence.or_else(|| section.min_confidence.clone()) {
        rule_config.min_confidence = level.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    }

    let reports = files
        .par_iter()
        .map(|file| {
            let source = fs::read_to_string(file)
                .with_context(|| format!("read {}", file.display()))?;
            let model =
                parse(&source).map_err(|e| anyhow::anyhow!("parse {}: {e}", file.display()))?;
            detect_all(file, &model, &taxonomy, &rule_config)
                .map_err(|e| anyhow::anyhow!("scan {}: {e}", file.display()))
        })
        .collect::<Result<Vec<_>>>()?;

    let threshold = threshold_joules.or(section.threshold_joules).unwrap_or(0.0);
    let reports = filter_by_threshold(reports, threshold);
    let findings: usize = reports.iter().map(|r| r.findings.len()).sum();

    let format: ReportFormat = format
        .or_else(|| section.format.clone())
        .as_deref()
        .unwrap_or("text")
        .parse()?;
    let report = build_report(reports, None);
    let document = emit(&report, format, &taxonomy)?;
    write_output(out.as_deref(), &document)?;
    Ok(if findings > 0 { 1 } else { 0 })
}

fn cmd_equiv(
    corpus_path: PathBuf,
    pair_filter: Option<String>,
    timeout: f64,
    interpreter: String,
) -> Result<i32> {
    let loaded = load_corpus(&corpus_path)?;
    warn_skipped(&loaded, &corpus_path);
    let runner = ProcessRunner { interpreter };
    let timeout = Duration::from_secs_f64(timeout);

    let mut checked = 0usize;
    let mut divergent = 0usize;
    for pair in &loaded.pairs {
        if let Some(only) = &pair_filter {
            if &pair.pair_id != only {
                continue;
            }
        }
        let same = check_equivalence(pair, &runner, timeout)
            .with_context(|| format!("pair {}", pair.pair_id))?;
        checked += 1;
        if same {
            println!("{}: equivalent", pair.pair_id);
        } else {
            println!("{}: output differs", pair.pair_id);
            divergent += 1;
        }
    }
    if checked == 0 {
        bail!("no pairs matched");
    }
    Ok(if divergent > 0 { 1 } else { 0 })
}

struct ProfileArgs {
    corpus: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    iterations: Option<usize>,
    warmups: Option<usize>,
    sample_cases: Option<usize>,
    timeout: Option<f64>,
    meter_file: Vec<PathBuf>,
    meter_cmd: Option<String>,
    meter_pattern: String,
    meter_scale: f64,
    interpreter: String,
}

fn cmd_profile(args: ProfileArgs, section: &ProfileSection) -> Result<i32> {
    let loaded = load_corpus(&args.corpus)?;
    warn_skipped(&loaded, &args.corpus);
    if loaded.pairs.is_empty() {
        bail!("corpus has no usable pairs");
    }

    let mut config = MeasurementConfig::default();
    if let Some(v) = args.seed.or(section.seed) {
        config.rng_seed = v;
    }
    if let Some(v) = args.iterations.or(section.iterations) {
        config.measured_iterations = v;
    }
    if let Some(v) = args.warmups.or(section.warmups) {
        config.warmup_runs = v;
    }
    if let Some(v) = args.sample_cases.or(section.sample_cases) {
        config.test_case_sample = v;
    }
    if let Some(v) = args.timeout.or(section.timeout_secs) {
        config.timeout_secs = v;
    }

    let mut meter = build_meter(
        args.meter_file,
        args.meter_cmd,
        &args.meter_pattern,
        args.meter_scale,
    )?;
    let runner = ProcessRunner {
        interpreter: args.interpreter,
    };

    let mut pairs = loaded.pairs;
    for pair in &mut pairs {
        let measurement = measure_pair(pair, &config, meter.as_mut(), &runner)
            .with_context(|| format!("measure pair {}", pair.pair_id))?;
        let metrics = compute_metrics(&measurement)
            .with_context(|| format!("metrics for pair {}", pair.pair_id))?;
        println!(
            "{}: v0 {:.1} J / {:.3} s, v1 {:.1} J / {:.3} s, saved {:.1} J ({})",
            pair.pair_id,
            metrics.e_v0,
            metrics.t_v0,
            metrics.e_v1,
            metrics.t_v1,
            metrics.energy_diff,
            metrics.divergence.as_str()
        );
        pair.measured = Some(metrics);
    }

    let all_metrics: Vec<_> = pairs.iter().filter_map(|p| p.measured.clone()).collect();
    let stats = fleet_stats(&all_metrics)?;
    println!(
        "fleet: {} pair(s), mean saving {:.0} J, median {:.0} J, power {:.1}-{:.1} W",
        stats.pairs,
        stats.energy_diff.mean,
        stats.energy_diff.median,
        stats.power_v0_min,
        stats.power_v0_max
    );

    save_corpus(&args.out, &pairs)?;
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_select(corpus_path: PathBuf, top: usize, out: Option<PathBuf>) -> Result<i32> {
    let loaded = load_corpus(&corpus_path)?;
    warn_skipped(&loaded, &corpus_path);
    let selected = select_top_by_energy(&loaded.pairs, top)?;
    match out {
        Some(path) => {
            save_corpus(&path, &selected)?;
            println!("wrote {} pair(s) to {}", selected.len(), path.display());
        }
        None => {
            for pair in &selected {
                let diff = pair
                    .measured
                    .as_ref()
                    .map(|m| m.energy_diff)
                    .unwrap_or(0.0);
                println!("{}  {:.1} J", pair.pair_id, diff);
            }
        }
    }
    Ok(0)
}

fn cmd_triage(
    corpus_path: PathBuf,
    out: PathBuf,
    backend_url: Option<String>,
    model: Option<String>,
    parallelism: Option<usize>,
    section: &TriageSection,
) -> Result<i32> {
    let loaded = load_corpus(&corpus_path)?;
    warn_skipped(&loaded, &corpus_path);
    let mut items = Vec::new();
    for pair in loaded.pairs {
        match pair.measured.clone() {
            Some(metrics) => items.push((pair, metrics)),
            None => bail!(
                "pair {} has no measurements; run `joulint profile` first",
                pair.pair_id
            ),
        }
    }
    if items.is_empty() {
        bail!("corpus has no usable pairs");
    }

    let url = backend_url.or_else(|| section.backend_url.clone());
    let model = model.or_else(|| section.model.clone());
    // The API key is read only from the environment so it never lands in
    // shell history or process listings.
    let backend = match (url, model) {
        (Some(url), Some(model)) => {
            HttpBackend::new(url, model, std::env::var(BACKEND_KEY_VAR).ok())?
        }
        (None, None) => HttpBackend::from_env().with_context(|| {
            format!(
                "backend not configured; set {BACKEND_URL_VAR} and {BACKEND_MODEL_VAR}, \
                 or pass --backend-url and --model"
            )
        })?,
        _ => bail!("--backend-url and --model go together"),
    };

    let taxonomy = Taxonomy::canonical();
    let store = TraceStore::open(&out);
    let parallelism = parallelism.or(section.parallelism).unwrap_or(1);
    let summary = triage_batch(&items, &taxonomy, &backend, &store, parallelism)?;
    println!(
        "traced {} pair(s), skipped {} already in {}",
        summary.traced,
        summary.skipped,
        out.display()
    );
    for failure in &summary.failures {
        eprintln!("{failure}");
    }
    Ok(if summary.failures.is_empty() { 0 } else { 1 })
}

fn cmd_kappa(gold_path: PathBuf, pred_path: PathBuf) -> Result<i32> {
    let gold = load_labelsets(&gold_path)?;
    let pred: BTreeMap<String, LabelSet> = load_labelsets(&pred_path)?.into_iter().collect();

    let mut gold_sets = Vec::new();
    let mut pred_sets = Vec::new();
    for (id, labels) in gold {
        if let Some(other) = pred.get(&id) {
            gold_sets.push(labels);
            pred_sets.push(other.clone());
        }
    }
    if gold_sets.is_empty() {
        bail!(
            "no shared pair ids between {} and {}",
            gold_path.display(),
            pred_path.display()
        );
    }

    let gold_ids: Vec<_> = gold_sets.iter().map(|l| l.root_cause_ids.clone()).collect();
    let pred_ids: Vec<_> = pred_sets.iter().map(|l| l.root_cause_ids.clone()).collect();
    let kappa = cohen_kappa(&gold_ids, &pred_ids)?;
    let agreement = agreement_report(&gold_sets, &pred_sets)?;

    println!("{} shared pair(s)", agreement.samples);
    println!("exact-match accuracy: {:.4}", agreement.accuracy);
    println!("cohen kappa: {:.4}", kappa);
    println!("per-cause agreement:");
    for (cause, counts) in &agreement.per_cause {
        println!(
            "  {cause}  precision {:.2}  recall {:.2}  ({} matched, {} spurious, {} missed)",
            counts.precision(),
            counts.recall(),
            counts.matched,
            counts.spurious,
            counts.missed
        );
    }
    Ok(0)
}

fn cmd_report(
    labels: Option<PathBuf>,
    scan: Option<PathBuf>,
    format: Option<String>,
    out: Option<PathBuf>,
    section: &ScanSection,
) -> Result<i32> {
    if labels.is_none() && scan.is_none() {
        bail!("pass --labels and/or --scan");
    }
    let taxonomy = Taxonomy::canonical();

    let co = match &labels {
        Some(path) => {
            let sets: Vec<LabelSet> = load_labelsets(path)?
                .into_iter()
                .map(|(_, labels)| labels)
                .collect();
            if sets.is_empty() {
                bail!("{} holds no label sets", path.display());
            }
            Some(co_occurrence(&sets, &taxonomy)?)
        }
        None => None,
    };

    let scan_reports = match &scan {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
            let report: Report = serde_json::from_str(&text)
                .with_context(|| format!("parse scan report {}", path.display()))?;
            report.reports
        }
        None => Vec::new(),
    };

    let findings: usize = scan_reports.iter().map(|r| r.findings.len()).sum();
    let report = build_report(scan_reports, co);
    let format: ReportFormat = format
        .or_else(|| section.format.clone())
        .as_deref()
        .unwrap_or("text")
        .parse()?;
    let document = emit(&report, format, &taxonomy)?;
    write_output(out.as_deref(), &document)?;
    Ok(if findings > 0 { 1 } else { 0 })
}

/// Reads per-pair label sets from either corpus records (`labels`) or
/// triage traces (`step3_labels`), telling them apart per line.
fn load_labelsets(path: &Path) -> Result<Vec<(String, LabelSet)>> {
    let text = fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: not a JSON record", path.display(), idx + 1))?;
        if value.get("step3_labels").is_some() {
            let trace: TriageTrace = serde_json::from_value(value)
                .with_context(|| format!("{}:{}: bad trace record", path.display(), idx + 1))?;
            out.push((trace.pair_id, trace.step3_labels));
        } else {
            let pair: joulint_core::corpus::CodePair = serde_json::from_value(value)
                .with_context(|| format!("{}:{}: bad pair record", path.display(), idx + 1))?;
            if let Some(labels) = pair.labels {
                out.push((pair.pair_id, labels));
            }
        }
    }
    Ok(out)
}

fn collect_python_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_file() {
            files.push(path.clone());
        } else if path.is_dir() {
            for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
                let entry = entry.with_context(|| format!("walk {}", path.display()))?;
                if entry.file_type().is_file()
                    && entry.path().extension().is_some_and(|e| e == "py")
                {
                    files.push(entry.into_path());
                }
            }
        } else {
            bail!("{} does not exist", path.display());
        }
    }
    files.sort();
    files.dedup();
    Ok(files)
}

fn build_meter(
    files: Vec<PathBuf>,
    cmd: Option<String>,
    pattern: &str,
    scale: f64,
) -> Result<Box<dyn EnergyMeter>> {
    if let Some(cmd) = cmd {
        let mut parts = cmd.split_whitespace().map(str::to_string);
        let program = parts.next().context("empty meter command")?;
        let meter = SystemMeter::new(program, parts.collect(), pattern, scale)?;
        return Ok(Box::new(meter));
    }
    let files = if files.is_empty() {
        rapl_package_counters()?
    } else {
        files
    };
    Ok(Box::new(FileMeter::new(files, scale)))
}

/// Top-level RAPL package domains only; their subdomains (core, uncore,
/// dram) are included in the package total and would double-count.
fn rapl_package_counters() -> Result<Vec<PathBuf>> {
    let mut counters = Vec::new();
    if let Ok(entries) = fs::read_dir("/sys/class/powercap") {
        for entry in entries.flatten() {
            let name = entry.file_name();
            let name = name.to_string_lossy();
            let Some(domain) = name.strip_prefix("intel-rapl:") else {
                continue;
            };
            if domain.contains(':') {
                continue;
            }
            let counter = entry.path().join("energy_uj");
            if counter.exists() {
                counters.push(counter);
            }
        }
    }
    counters.sort();
    if counters.is_empty() {
        bail!("no energy counters found; pass --meter-file or --meter-cmd");
    }
    Ok(counters)
}

fn warn_skipped(loaded: &LoadedCorpus, path: &Path) {
    for (line, reason) in &loaded.skipped {
        eprintln!("{}:{line}: skipped record ({reason})", path.display());
    }
}

fn write_output(out: Option<&Path>, document: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, document).with_context(|| format!("write {}", path.display()))
        }
        None => {
            print!("{document}");
            Ok(())
        }
    }
}
