//! Monte Carlo experiments that check the limit behaviour of exchangeable urn
//! sequences against closed-form targets.
//!
//! Every stochastic statistic passes when it lies within [`SE_BAND`] estimated
//! standard errors of its target. Replication `r` of an experiment with seed
//! `s` always uses `RngStream::new(s, r)`, so reports are reproducible and
//! independent of how replications are scheduled across threads.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::kernel::{block_measure, classify, Partition, Verdict, VerdictKind};
use crate::measure::{tv_distance, FiniteMeasure, UrnModel};
use crate::sampler::{hybrid_example_path, sample_counts, stick_breaking, RngStream, UrnState};
use crate::scalar::compensated_sum;

/// Width of the acceptance band, in standard errors.
pub const SE_BAND: f64 = 4.0;
/// Floor for tolerances so that deterministic statistics survive rounding.
pub const ROUNDING_FLOOR: f64 = 1e-12;
/// Stream offset separating stick-breaking draws from path replications.
const STICK_STREAM_OFFSET: u64 = 1 << 32;

/// One statistic with its target and acceptance band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatRecord {
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub pass: bool,
}

impl StatRecord {
    /// Passes iff `|observed - target| <= tolerance`.
    pub fn bound(name: impl Into<String>, observed: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            target,
            tolerance,
            std_error: None,
            pass: (observed - target).abs() <= tolerance,
        }
    }

    /// Passes iff the statistic is within `SE_BAND` standard errors.
    pub fn band(name: impl Into<String>, observed: f64, target: f64, std_error: f64) -> Self {
        let mut rec = Self::bound(
            name,
            observed,
            target,
            (SE_BAND * std_error).max(ROUNDING_FLOOR),
        );
        rec.std_error = Some(std_error);
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub statistics: Vec<StatRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub runtime_ms: f64,
}

impl ExperimentReport {
    fn new(name: &str, seed: u64) -> Self {
        Self {
            name: name.to_owned(),
            seed,
            parameters: BTreeMap::new(),
            statistics: Vec::new(),
            notes: Vec::new(),
            runtime_ms: 0.0,
        }
    }

    fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_owned(), value.into());
    }

    fn push(&mut self, record: StatRecord) {
        self.statistics.push(record);
    }

    pub fn passed(&self) -> bool {
        self.statistics.iter().all(|s| s.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &StatRecord> {
        self.statistics.iter().filter(|s| !s.pass)
    }

    pub fn statistic(&self, name: &str) -> Option<&StatRecord> {
        self.statistics.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["pass"] = json!(self.passed());
        v
    }

    /// Same statistics and parameters; runtime is ignored.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.name == other.name
            && self.seed == other.seed
            && self.parameters == other.parameters
            && self.statistics == other.statistics
    }
}

pub const CSV_HEADER: &str = "report,statistic,observed,target,tolerance,std_error,pass";

/// Writes one CSV row per statistic of every report, preceded by a header.
pub fn write_csv<W: Write>(reports: &[ExperimentReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for report in reports {
        for s in &report.statistics {
            let se = s.std_error.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                report.name, s.name, s.observed, s.target, s.tolerance, se, s.pass
            )?;
        }
    }
    Ok(())
}

/// Sample moments with standard errors for the mean and the variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub var: f64,
    pub se_mean: f64,
    /// Delta-method standard error of the sample variance, `√((m₄ - m₂²)/n)`.
    pub se_var: f64,
}

impl Moments {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 2, "need at least two samples");
        let nf = n as f64;
        let mean = compensated_sum(samples.iter().copied()) / nf;
        let m2 = compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / nf;
        let m4 = compensated_sum(samples.iter().map(|x| (x - mean).powi(4))) / nf;
        let var = m2 * nf / (nf - 1.0);
        Self {
            n,
            mean,
            var,
            se_mean: (var / nf).sqrt(),
            se_var: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockTarget {
    pub mean: f64,
    pub var: f64,
}

/// Mean and variance of each block mass under `Dir(c·ν(D₁), c·ν(D₂), …)` with
/// `c = θ/m`: `ν(D)` and `ν(D)(1-ν(D))/(c+1)`.
pub fn dirichlet_block_targets(
    theta_over_m: f64,
    nu: &FiniteMeasure<f64>,
    partition: &Partition,
) -> Vec<BlockTarget> {
    block_measure(nu, partition)
        .into_iter()
        .map(|p| BlockTarget {
            mean: p,
            var: p * (1.0 - p) / (theta_over_m + 1.0),
        })
        .collect()
}

struct Exchangeable {
    verdict: Verdict<f64>,
    model: UrnModel<f64>,
    partition: Partition,
    theta_over_m: f64,
}

fn exchangeable(model: &UrnModel<f64>) -> Result<Exchangeable> {
    let verdict = classify(model)?;
    let (Some(partition), Some(normalized)) =
        (verdict.partition.clone(), verdict.normalized.clone())
    else {
        return Err(Error::MissingPartition);
    };
    Ok(Exchangeable {
        theta_over_m: *normalized.theta(),
        model: normalized,
        partition,
        verdict,
    })
}

fn block_frequencies(counts: &[usize], partition: &Partition, length: usize) -> Vec<f64> {
    partition
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&c| counts[c]).sum::<usize>() as f64 / length as f64)
        .collect()
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

fn check_sizes(runs: usize, length: usize) -> Result<()> {
    if runs < 2 {
        return Err(Error::InvalidParameter("need at least two runs".into()));
    }
    if length == 0 {
        return Err(Error::ZeroLength);
    }
    Ok(())
}

/// Long-run block frequencies against their Dirichlet moments.
///
/// For i.i.d. models each color frequency is compared instead, with the
/// binomial variance `ν(1-ν)/length`.
pub fn limit_frequency_experiment(
    model: &UrnModel<f64>,
    runs: usize,
    length: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_sizes(runs, length)?;
    let ex = exchangeable(model)?;
    let mut report = ExperimentReport::new("limit_frequency", seed);
    report.param("runs", runs);
    report.param("length", length);
    report.param("kind", ex.verdict.kind.as_str());
    report.param("theta_over_m", ex.theta_over_m);

    let counts: Vec<Vec<usize>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| sample_counts(&ex.model, length, &mut RngStream::new(seed, r)))
        .collect::<Result<_>>()?;

    if ex.verdict.kind == VerdictKind::Iid {
        let singletons = Partition::singletons(ex.model.k());
        let freqs: Vec<Vec<f64>> = counts
            .iter()
            .map(|c| block_frequencies(c, &singletons, length))
            .collect();
        for (i, &p) in ex.model.nu().weights().iter().enumerate() {
            let m = Moments::of(&column(&freqs, i));
            report.push(StatRecord::band(
                format!("color{i}_mean"),
                m.mean,
                p,
                m.se_mean,
            ));
            report.push(StatRecord::band(
                format!("color{i}_var"),
                m.var,
                p * (1.0 - p) / length as f64,
                m.se_var,
            ));
        }
    } else {
        report.param("partition", json!(ex.partition.blocks()));
        let targets = dirichlet_block_targets(ex.theta_over_m, ex.model.nu(), &ex.partition);
        let freqs: Vec<Vec<f64>> = counts
            .iter()
            .map(|c| block_frequencies(c, &ex.partition, length))
            .collect();
        for (b, t) in targets.iter().enumerate() {
            let m = Moments::of(&column(&freqs, b));
            report.push(StatRecord::band(
                format!("block{b}_mean"),
                m.mean,
                t.mean,
                m.se_mean,
            ));
            report.push(StatRecord::band(
                format!("block{b}_var"),
                m.var,
                t.var,
                m.se_var,
            ));
        }
        report.notes.push(format!(
            "targets are limit moments; at length {length} the block-frequency variance exceeds them by the factor 1 + (θ/m)/length"
        ));
    }
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Thresholds for [`tv_convergence_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvConfig {
    pub length: usize,
    /// Steps (numbers of observations) at which the predictive is compared.
    pub checkpoints: Vec<usize>,
    /// Every checkpoint at or after this step must be within `settle_threshold`.
    pub settle_step: usize,
    pub settle_threshold: f64,
    /// Bound for the last checkpoint.
    pub final_threshold: f64,
}

impl TvConfig {
    /// Checkpoints every `length/20` steps, settling at half the length, with
    /// thresholds 0.02 and 0.01.
    pub fn new(length: usize) -> Self {
        let stride = (length / 20).max(1);
        let mut checkpoints: Vec<usize> = (1..=20)
            .map(|i| i * stride)
            .filter(|&t| t <= length)
            .collect();
        if checkpoints.last() != Some(&length) {
            checkpoints.push(length);
        }
        Self {
            length,
            checkpoints,
            settle_step: length / 2,
            settle_threshold: 0.02,
            final_threshold: 0.01,
        }
    }
}

/// Follows one path and measures the total variation distance between the
/// predictive at each checkpoint and the path's plug-in limit
/// `Σ_k freq_k(length) ν(·|D_k)`.
pub fn tv_convergence_experiment(
    model: &UrnModel<f64>,
    config: &TvConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if config.length == 0 {
        return Err(Error::ZeroLength);
    }
    if let Some(&bad) = config
        .checkpoints
        .iter()
        .find(|&&t| t == 0 || t > config.length)
    {
        return Err(Error::InvalidParameter(format!(
            "checkpoint {bad} outside 1..={}",
            config.length
        )));
    }
    let ex = exchangeable(model)?;
    let k = ex.model.k();
    let mut report = ExperimentReport::new("tv_convergence", seed);
    report.param("length", config.length);
    report.param("checkpoints", json!(config.checkpoints));
    report.param("settle_step", config.settle_step);
    report.param("kind", ex.verdict.kind.as_str());
    report.param("partition", json!(ex.partition.blocks()));

    let mut rng = RngStream::new(seed, 0);
    let mut state = UrnState::new(&ex.model);
    let mut counts = vec![0usize; k];
    let mut snapshots: Vec<(usize, Vec<f64>)> = Vec::with_capacity(config.checkpoints.len());
    let mut next = config.checkpoints.iter().peekable();
    for t in 1..=config.length {
        counts[state.step(&mut rng)] += 1;
        while next.peek() == Some(&&t) {
            snapshots.push((t, state.predictive()));
            next.next();
        }
    }

    let nu = ex.model.nu();
    let final_blocks = block_frequencies(&counts, &ex.partition, config.length);
    let mut limit = vec![0.0; k];
    for (block, &weight) in ex.partition.blocks().iter().zip(&final_blocks) {
        let conditional = nu.conditional_on(block)?;
        for (l, c) in limit.iter_mut().zip(conditional) {
            *l += weight * c;
        }
    }

    let mut trace = Vec::with_capacity(snapshots.len());
    let mut identity_residual = 0.0_f64;
    for (t, predictive) in &snapshots {
        let tv = tv_distance(predictive, &limit)?;
        let predictive_blocks: Vec<f64> = ex
            .partition
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&c| predictive[c]).sum())
            .collect();
        let tv_blocks = tv_distance(&predictive_blocks, &final_blocks)?;
        identity_residual = identity_residual.max((tv - tv_blocks).abs());
        trace.push(json!({ "step": t, "tv": tv }));

        if *t >= config.settle_step {
            let threshold = if Some(*t) == config.checkpoints.last().copied() {
                config.final_threshold
            } else {
                config.settle_threshold
            };
            report.push(StatRecord::bound(format!("tv@{t}"), tv, 0.0, threshold));
        }
    }
    report.param("trace", Value::Array(trace));
    // for block kernels the predictive lies in the span of the block conditionals
    report.push(StatRecord::bound(
        "block_projection_identity",
        identity_residual,
        0.0,
        ROUNDING_FLOOR,
    ));
    if ex.verdict.kind == VerdictKind::Iid {
        let max_tv = snapshots
            .iter()
            .map(|(_, p)| tv_distance(p, nu.weights()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        report.push(StatRecord::bound("iid_max_tv", max_tv, 0.0, ROUNDING_FLOOR));
    }
    report.notes.push(format!(
        "thresholds {} after step {} and {} at the last checkpoint are engineering defaults, not rates",
        config.settle_threshold, config.settle_step, config.final_threshold
    ));
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Compares block-mass moments of stick-breaking draws with those of long-run
/// path frequencies, and each route with the Dirichlet targets.
pub fn stickbreaking_vs_frequency_test(
    model: &UrnModel<f64>,
    draws: usize,
    runs: usize,
    length: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    check_sizes(runs, length)?;
    if draws < 2 {
        return Err(Error::InvalidParameter("need at least two draws".into()));
    }
    let ex = exchangeable(model)?;
    let mut report = ExperimentReport::new("stickbreaking_vs_frequency", seed);
    report.param("draws", draws);
    report.param("runs", runs);
    report.param("length", length);
    report.param("theta_over_m", ex.theta_over_m);
    report.param("eps", crate::sampler::DEFAULT_EPS);
    report.param("partition", json!(ex.partition.blocks()));

    let stick_masses: Vec<Vec<f64>> = (0..draws as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(seed, STICK_STREAM_OFFSET + j);
            stick_breaking(
                ex.theta_over_m,
                &ex.model,
                crate::sampler::DEFAULT_EPS,
                &mut rng,
            )
            .map(|d| d.block_masses(&ex.partition))
        })
        .collect::<Result<_>>()?;
    let path_masses: Vec<Vec<f64>> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            sample_counts(&ex.model, length, &mut RngStream::new(seed, r))
                .map(|c| block_frequencies(&c, &ex.partition, length))
        })
        .collect::<Result<_>>()?;

    let targets = dirichlet_block_targets(ex.theta_over_m, ex.model.nu(), &ex.partition);
    for (b, t) in targets.iter().enumerate() {
        let sb = Moments::of(&column(&stick_masses, b));
        let fq = Moments::of(&column(&path_masses, b));
        report.push(StatRecord::band(
            format!("block{b}_stick_mean"),
            sb.mean,
            t.mean,
            sb.se_mean,
        ));
        report.push(StatRecord::band(
            format!("block{b}_stick_var"),
            sb.var,
            t.var,
            sb.se_var,
        ));
        report.push(StatRecord::band(
            format!("block{b}_freq_mean"),
            fq.mean,
            t.mean,
            fq.se_mean,
        ));
        report.push(StatRecord::band(
            format!("block{b}_freq_var"),
            fq.var,
            t.var,
            fq.se_var,
        ));
        report.push(StatRecord::band(
            format!("block{b}_mean_gap"),
            sb.mean - fq.mean,
            0.0,
            sb.se_mean.hypot(fq.se_mean),
        ));
        report.push(StatRecord::band(
            format!("block{b}_var_gap"),
            sb.var - fq.var,
            0.0,
            sb.se_var.hypot(fq.se_var),
        ));
    }
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Structure of the hybrid `[0, 1]` example: ties only inside `[0, s)`, and
/// the mass of `[0, s)` distributed as `Beta(θs, θ(1-s))`.
pub fn singular_structure_experiment(
    theta: f64,
    s: f64,
    length: usize,
    runs: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidS(s));
    }
    check_sizes(runs, length)?;
    let mut report = ExperimentReport::new("singular_structure", seed);
    report.param("theta", theta);
    report.param("s", s);
    report.param("length", length);
    report.param("runs", runs);

    struct RunSummary {
        fraction: f64,
        repeated_outside: usize,
        complement_repeats: usize,
        repeated_inside: usize,
    }

    let summaries: Vec<RunSummary> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let path = hybrid_example_path(theta, s, length, &mut RngStream::new(seed, r))?;
            // repeated values, by bit pattern
            let mut bits: Vec<u64> = path.values.iter().map(|v| v.to_bits()).collect();
            bits.sort_unstable();
            let mut repeated_outside = 0;
            let mut repeated_inside = 0;
            for group in bits.chunk_by(|a, b| a == b).filter(|g| g.len() > 1) {
                if f64::from_bits(group[0]) < s {
                    repeated_inside += 1;
                } else {
                    repeated_outside += 1;
                }
            }
            let mut seen = std::collections::HashSet::new();
            let complement_repeats = path
                .values
                .iter()
                .filter(|&&v| v >= s)
                .filter(|v| !seen.insert(v.to_bits()))
                .count();
            Ok(RunSummary {
                fraction: path.fraction_in_s(),
                repeated_outside,
                complement_repeats,
                repeated_inside,
            })
        })
        .collect::<Result<_>>()?;

    let outside: usize = summaries.iter().map(|r| r.repeated_outside).sum();
    let complement: usize = summaries.iter().map(|r| r.complement_repeats).sum();
    let inside: usize = summaries.iter().map(|r| r.repeated_inside).sum();
    report.param("repeated_values_inside_s", inside);
    report.push(StatRecord::bound(
        "repeated_values_outside_s",
        outside as f64,
        0.0,
        0.0,
    ));
    report.push(StatRecord::bound(
        "complement_repeat_draws",
        complement as f64,
        0.0,
        0.0,
    ));

    let fractions: Vec<f64> = summaries.iter().map(|r| r.fraction).collect();
    let m = Moments::of(&fractions);
    report.push(StatRecord::band("fraction_in_s_mean", m.mean, s, m.se_mean));
    report.push(StatRecord::band(
        "fraction_in_s_var",
        m.var,
        s * (1.0 - s) / (theta + 1.0),
        m.se_var,
    ));
    report.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Sizes for [`verify_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SuiteSize {
    pub runs: usize,
    pub length: usize,
    pub draws: usize,
    pub tv_length: usize,
}

impl SuiteSize {
    pub const QUICK: Self = Self {
        runs: 1_000,
        length: 1_000,
        draws: 1_000,
        tv_length: 10_000,
    };
    pub const FULL: Self = Self {
        runs: 10_000,
        length: 2_000,
        draws: 10_000,
        tv_length: 10_000,
    };
}

/// Runs every experiment that applies to `model`. A non-exchangeable model
/// yields a single failing `classification` report.
pub fn verify_suite(
    model: &UrnModel<f64>,
    size: SuiteSize,
    seed: u64,
) -> Result<Vec<ExperimentReport>> {
    let verdict = classify(model)?;
    if !verdict.is_exchangeable() {
        let mut report = ExperimentReport::new("classification", seed);
        report.param("verdict", verdict.to_json());
        report.push(StatRecord::bound("exchangeable", 0.0, 1.0, 0.0));
        return Ok(vec![report]);
    }
    Ok(vec![
        limit_frequency_experiment(model, size.runs, size.length, seed)?,
        tv_convergence_experiment(model, &TvConfig::new(size.tv_length), seed)?,
        stickbreaking_vs_frequency_test(model, size.draws, size.runs, size.length, seed)?,
    ])
}
