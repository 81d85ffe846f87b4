//! Energy profiling of program pairs.
//!
//! A measured run executes one variant over the sampled test cases inside a
//! single meter session, so the recorded joules cover exactly that work. The
//! protocol is a warm-up run (discarded) followed by the measured iterations,
//! applied to each variant in turn, with a process-wide lock so two measured
//! sessions can never overlap — system-wide counters see everything on the
//! host, including a second concurrent measurement.
//!
//! Ratios are oriented v0/v1 with v0 the inefficient variant, so an
//! improvement yields values above 1.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::corpus::CodePair;
use crate::runner::CaseRunner;

mod meter;

pub use meter::{EnergyMeter, FileMeter, MeterError, MockMeter, SessionToken, SystemMeter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeasurementConfig {
    pub warmup_runs: usize,
    pub measured_iterations: usize,
    /// How many of the pair's test cases each run executes, sampled without
    /// replacement; fewer are used when the pair has fewer.
    pub test_case_sample: usize,
    pub rng_seed: u64,
    pub timeout_secs: f64,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            warmup_runs: 1,
            measured_iterations: 3,
            test_case_sample: 50,
            rng_seed: 0,
            timeout_secs: 10.0,
        }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.measured_iterations < 1 {
            return Err(MeasureError::Config(
                "measured_iterations must be at least 1".to_string(),
            ));
        }
        if self.test_case_sample < 1 {
            return Err(MeasureError::Config(
                "test_case_sample must be at least 1".to_string(),
            ));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(MeasureError::Config("timeout must be positive".to_string()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// One measured iteration of one variant: joules over the whole case batch,
/// summed wall time, and the peak resident set across cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSample {
    pub energy_j: f64,
    pub wall_time_s: f64,
    pub max_rss_kib: u64,
    pub exit_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeasurement {
    pub pair_id: String,
    pub v0_samples: Vec<RunSample>,
    pub v1_samples: Vec<RunSample>,
    pub config: MeasurementConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MeasureError {
    #[error("measurement config: {0}")]
    Config(String),
    #[error("meter: {0}")]
    Meter(#[from] MeterError),
    #[error("{variant} iteration {iteration}: {detail}")]
    Run {
        variant: String,
        iteration: usize,
        detail: String,
    },
    #[error("metrics: {0}")]
    Metrics(String),
}

static MEASUREMENT_LOCK: Mutex<()> = Mutex::new(());

/// Run the full measurement protocol for one pair. Both variants execute the
/// same seeded test-case selection; any failed run aborts the measurement
/// with nothing recorded.
pub fn measure_pair(
    pair: &CodePair,
    config: &MeasurementConfig,
    meter: &mut dyn EnergyMeter,
    runner: &dyn CaseRunner,
) -> Result<PairMeasurement, MeasureError> {
    config.validate()?;
    if pair.test_cases.is_empty() {
        return Err(MeasureError::Config(format!(
            "pair `{}` has no test cases",
            pair.pair_id
        )));
    }
    let _exclusive = MEASUREMENT_LOCK.lock().unwrap_or_else(|e| e.into_inner());

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let amount = config.test_case_sample.min(pair.test_cases.len());
    let mut selected =
        rand::seq::index::sample(&mut rng, pair.test_cases.len(), amount).into_vec();
    selected.sort_unstable();

    let timeout = config.timeout();
    let total_runs = config.warmup_runs + config.measured_iterations;
    let mut all_samples: [Vec<RunSample>; 2] = [Vec::new(), Vec::new()];
    for (slot, (variant, src)) in [("v0", &pair.src_v0), ("v1", &pair.src_v1)]
        .into_iter()
        .enumerate()
    {
        for run_idx in 0..total_runs {
            let token = meter.begin_session()?;
            let mut wall_time_s = 0.0;
            let mut max_rss_kib = 0;
            for &case_idx in &selected {
                let case = &pair.test_cases[case_idx];
                let failure = match runner.run(src, &case.input, timeout) {
                    Err(e) => Some(e.to_string()),
                    Ok(outcome) if outcome.timed_out => Some("run timed out".to_string()),
                    Ok(outcome) if !outcome.exit_ok => Some("nonzero exit".to_string()),
                    Ok(outcome) => {
                        wall_time_s += outcome.wall_time;
                        max_rss_kib = max_rss_kib.max(outcome.max_rss_kib);
                        None
                    }
                };
                if let Some(detail) = failure {
                    let _ = meter.end_session(token);
                    return Err(MeasureError::Run {
                        variant: variant.to_string(),
                        iteration: run_idx,
                        detail,
                    });
                }
            }
            let energy_j = meter.end_session(token)?;
            if run_idx >= config.warmup_runs {
                all_samples[slot].push(RunSample {
                    energy_j,
                    wall_time_s,
                    max_rss_kib,
                    exit_ok: true,
                });
            }
        }
    }
    let [v0_samples, v1_samples] = all_samples;
    Ok(PairMeasurement {
        pair_id: pair.pair_id.clone(),
        v0_samples,
        v1_samples,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    BothImprove,
    TimeUpEnergyDown,
    EnergyUpTimeDown,
    BothWorsen,
    Neutral,
}

impl Divergence {
    pub fn as_str(self) -> &'static str {
        match self {
            Divergence::BothImprove => "both_improve",
            Divergence::TimeUpEnergyDown => "time_up_energy_down",
            Divergence::EnergyUpTimeDown => "energy_up_time_down",
            Divergence::BothWorsen => "both_worsen",
            Divergence::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub e_v0: f64,
    pub e_v1: f64,
    pub t_v0: f64,
    pub t_v1: f64,
    pub m_v0: f64,
    pub m_v1: f64,
    pub energy_diff: f64,
    pub energy_ratio: f64,
    pub time_ratio: f64,
    pub p_v0: f64,
    pub p_v1: f64,
    pub divergence: Divergence,
}

/// Below this relative delta on both axes, a pair counts as neutral.
pub const DEFAULT_NEUTRAL_THRESHOLD: f64 = 0.01;

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn ratio(v0: f64, v1: f64, what: &str) -> Result<f64, MeasureError> {
    if v1 > 0.0 {
        Ok(v0 / v1)
    } else if v0 == v1 {
        Ok(1.0)
    } else {
        Err(MeasureError::Metrics(format!(
            "cannot form {what} ratio against zero"
        )))
    }
}

pub fn compute_metrics(m: &PairMeasurement) -> Result<PairMetrics, MeasureError> {
    compute_metrics_with_threshold(m, DEFAULT_NEUTRAL_THRESHOLD)
}

pub fn compute_metrics_with_threshold(
    m: &PairMeasurement,
    neutral_threshold: f64,
) -> Result<PairMetrics, MeasureError> {
    for (variant, samples) in [("v0", &m.v0_samples), ("v1", &m.v1_samples)] {
        if samples.is_empty() {
            return Err(MeasureError::Metrics(format!("{variant} has no samples")));
        }
        if let Some(idx) = samples.iter().position(|s| !s.exit_ok) {
            return Err(MeasureError::Metrics(format!(
                "{variant} sample {idx} failed; metrics need complete data"
            )));
        }
    }
    let agg = |samples: &[RunSample], f: fn(&RunSample) -> f64| -> f64 {
        median(&mut samples.iter().map(f).collect())
    };
    let e_v0 = agg(&m.v0_samples, |s| s.energy_j);
    let e_v1 = agg(&m.v1_samples, |s| s.energy_j);
    let t_v0 = agg(&m.v0_samples, |s| s.wall_time_s);
    let t_v1 = agg(&m.v1_samples, |s| s.wall_time_s);
    let m_v0 = agg(&m.v0_samples, |s| s.max_rss_kib as f64);
    let m_v1 = agg(&m.v1_samples, |s| s.max_rss_kib as f64);
    if t_v0 <= 0.0 || t_v1 <= 0.0 {
        return Err(MeasureError::Metrics(
            "nonpositive wall time; power is undefined".to_string(),
        ));
    }
    let energy_ratio = ratio(e_v0, e_v1, "energy")?;
    let time_ratio = ratio(t_v0, t_v1, "time")?;
    let divergence = if (energy_ratio - 1.0).abs() < neutral_threshold
        && (time_ratio - 1.0).abs() < neutral_threshold
    {
        Divergence::Neutral
    } else if e_v0 < e_v1 && t_v0 > t_v1 {
        Divergence::EnergyUpTimeDown
    } else if e_v0 > e_v1 && t_v0 < t_v1 {
        Divergence::TimeUpEnergyDown
    } else if e_v0 >= e_v1 && t_v0 >= t_v1 {
        Divergence::BothImprove
    } else {
        Divergence::BothWorsen
    };
    Ok(PairMetrics {
        e_v0,
        e_v1,
        t_v0,
        t_v1,
        m_v0,
        m_v1,
        energy_diff: e_v0 - e_v1,
        energy_ratio,
        time_ratio,
        p_v0: e_v0 / t_v0,
        p_v1: e_v1 / t_v1,
        divergence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: f64,
}

fn summarize(values: &[f64]) -> DistributionSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let skewness = if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 };
    DistributionSummary {
        mean,
        median: median(&mut values.to_vec()),
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        skewness,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub pairs: usize,
    pub energy_diff: DistributionSummary,
    pub power_v0_min: f64,
    pub power_v0_max: f64,
    /// Coefficient of variation of v0 power draw.
    pub power_v0_cv: f64,
    /// Fraction of pairs whose energy ratio exceeds their time ratio.
    pub energy_ratio_exceeds_time_ratio: f64,
    pub divergence_counts: BTreeMap<String, usize>,
}

pub fn fleet_stats(metrics: &[PairMetrics]) -> Result<FleetStats, MeasureError> {
    if metrics.is_empty() {
        return Err(MeasureError::Metrics(
            "no measured pairs to summarize".to_string(),
        ));
    }
    let diffs: Vec<f64> = metrics.iter().map(|m| m.energy_diff).collect();
    let powers: Vec<f64> = metrics.iter().map(|m| m.p_v0).collect();
    let n = powers.len() as f64;
    let p_mean = powers.iter().sum::<f64>() / n;
    let p_std = (powers.iter().map(|p| (p - p_mean).powi(2)).sum::<f64>() / n).sqrt();
    let exceeding = metrics
        .iter()
        .filter(|m| m.energy_ratio > m.time_ratio)
        .count();
    let mut divergence_counts = BTreeMap::new();
    for m in metrics {
        *divergence_counts
            .entry(m.divergence.as_str().to_string())
            .or_insert(0) += 1;
    }
    Ok(FleetStats {
        pairs: metrics.len(),
        energy_diff: summarize(&diffs),
        power_v0_min: powers.iter().cloned().fold(f64::INFINITY, f64::min),
        power_v0_max: powers.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        power_v0_cv: if p_mean != 0.0 { p_std / p_mean } else { 0.0 },
        energy_ratio_exceeds_time_ratio: exceeding as f64 / n,
        divergence_counts,
    })
}
