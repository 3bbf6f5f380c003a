//! Batch experiment runners over the generator, statistic, and selectors.
//!
//! Four experiment families share one shape: a grid of cells, a number of
//! replications per cell, and a base seed. Every replication derives its
//! own seed from the base seed and its grid coordinates, so replications
//! can run in parallel and any one of them can be replayed alone.
//! Aggregation is a sequential reduce over replication order, which makes
//! every emitted table a pure function of the experiment description.
//!
//! * [`run_stat_behavior`]: distribution (mean, sd) of the fit statistic at
//!   fixed candidate orders;
//! * [`run_discrimination`]: rate of correct accept/reject decisions for a
//!   true order against its underfitted neighbours;
//! * [`run_accuracy_sweep`]: fraction of replications where each selector
//!   recovers the true order, both selectors on identical networks;
//! * [`run_threshold_sensitivity`]: selector accuracy as a function of the
//!   tuning parameter, all grid points sharing one set of cached
//!   statistics per network.
//!
//! Wall-clock time is kept on the in-memory records for profiling but is
//! never serialized, so persisted outputs are bit-identical across reruns.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gof::NetworkStatistics;
use crate::model::{generate, GeneratorConfig};
use crate::rng::derive_seed;
use crate::selection::{
    ratio_scan_estimate, threshold_scan_estimate, CandidatePair, SelectionConfig, TauRule,
    ThresholdRule,
};

/// Selector identifiers used in result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    ThresholdScan,
    RatioScan,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ThresholdScan => "threshold-scan",
            Algorithm::RatioScan => "ratio-scan",
        }
    }
}

/// Fraction of chosen pairs equal to the truth.
pub fn accuracy(chosen: &[CandidatePair], truth: CandidatePair) -> Result<f64> {
    if chosen.is_empty() {
        return Err(Error::DegenerateInput("accuracy of an empty cell".into()));
    }
    let hits = chosen.iter().filter(|&&c| c == truth).count();
    Ok(hits as f64 / chosen.len() as f64)
}

/// Mean and sample standard deviation (n-1 denominator; sd 0 below two
/// values). Summation follows slice order, so equal inputs give bitwise
/// equal outputs.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn network_seed(base: u64, coords: &[u64]) -> u64 {
    derive_seed(base, "net", coords)
}

fn check_positive(value: usize, what: &str) -> Result<()> {
    if value == 0 {
        return Err(Error::Config(format!("{what} must be at least 1")));
    }
    Ok(())
}

fn check_nonempty<T>(grid: &[T], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{what} must not be empty")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Statistic behavior
// ---------------------------------------------------------------------------

/// Distribution of the fit statistic at fixed candidate orders: one planted
/// structure, a grid of network sizes, a fixed candidate list.
#[derive(Debug, Clone, PartialEq)]
pub struct StatBehaviorSpec {
    pub n_grid: Vec<usize>,
    pub num_layers: usize,
    pub true_order: CandidatePair,
    pub rho: f64,
    pub candidates: Vec<CandidatePair>,
    pub replications: usize,
    pub base_seed: u64,
}

impl StatBehaviorSpec {
    /// CI-sized default: the planted (3,5) setting at the two smallest
    /// sizes, with the true, singly underfitted, and doubly underfitted
    /// candidates.
    pub fn desk_scale(base_seed: u64) -> Self {
        Self {
            n_grid: vec![200, 400],
            num_layers: 20,
            true_order: (3, 5),
            rho: 0.2,
            candidates: vec![(3, 5), (2, 5), (3, 4), (2, 4)],
            replications: 50,
            base_seed,
        }
    }

    /// The published protocol: sizes up to 1000, 200 replications.
    pub fn full_scale(base_seed: u64) -> Self {
        Self {
            n_grid: vec![200, 400, 600, 800, 1000],
            replications: 200,
            ..Self::desk_scale(base_seed)
        }
    }

    fn validate(&self) -> Result<()> {
        check_nonempty(&self.n_grid, "n grid")?;
        check_nonempty(&self.candidates, "candidate list")?;
        check_positive(self.replications, "replications")
    }
}

/// One replication: every requested candidate statistic on one network.
#[derive(Debug, Clone)]
pub struct StatBehaviorRecord {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// `(candidate, statistic)` in spec candidate order.
    pub statistics: Vec<(CandidatePair, f64)>,
    /// Profiling only; never serialized.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatBehaviorRow {
    pub n: usize,
    pub candidate: CandidatePair,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone)]
pub struct StatBehaviorOutcome {
    pub rows: Vec<StatBehaviorRow>,
    pub records: Vec<StatBehaviorRecord>,
}

pub fn run_stat_behavior(spec: &StatBehaviorSpec) -> Result<StatBehaviorOutcome> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.n_grid.len() * spec.replications);
    for &n in &spec.n_grid {
        let cell: Vec<StatBehaviorRecord> = (0..spec.replications)
            .into_par_iter()
            .map(|rep| {
                let start = Instant::now();
                let seed = network_seed(
                    spec.base_seed,
                    &[n as u64, spec.num_layers as u64, spec.rho.to_bits(), rep as u64],
                );
                let planted = generate(&GeneratorConfig {
                    n,
                    num_layers: spec.num_layers,
                    k_s: spec.true_order.0,
                    k_r: spec.true_order.1,
                    rho: spec.rho,
                    seed,
                })?;
                let mut eval = NetworkStatistics::new(&planted.network, seed);
                let mut statistics = Vec::with_capacity(spec.candidates.len());
                for &(k_s0, k_r0) in &spec.candidates {
                    statistics.push(((k_s0, k_r0), eval.statistic(k_s0, k_r0)?.t_hat));
                }
                Ok(StatBehaviorRecord {
                    n,
                    replication: rep,
                    seed,
                    statistics,
                    wall_time: start.elapsed(),
                })
            })
            .collect::<Result<_>>()?;
        records.extend(cell);
    }
    let rows = stat_behavior_rows(&records);
    Ok(StatBehaviorOutcome { rows, records })
}

/// Aggregates records into the summary table; kept separate so persisted
/// records can be re-aggregated and checked against the emitted rows.
pub fn stat_behavior_rows(records: &[StatBehaviorRecord]) -> Vec<StatBehaviorRow> {
    let mut keys: Vec<(usize, CandidatePair)> = Vec::new();
    for r in records {
        for &(c, _) in &r.statistics {
            if !keys.contains(&(r.n, c)) {
                keys.push((r.n, c));
            }
        }
    }
    keys.iter()
        .map(|&(n, candidate)| {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n)
                .flat_map(|r| r.statistics.iter())
                .filter(|(c, _)| *c == candidate)
                .map(|&(_, t)| t)
                .collect();
            let (mean, sd) = mean_sd(&values);
            StatBehaviorRow { n, candidate, mean, sd }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Discrimination
// ---------------------------------------------------------------------------

/// Hypothesis scenarios tested for each true order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Candidate equals the true order; correct decision is acceptance.
    Null,
    /// One fewer sender community; correct decision is rejection.
    SenderUnderfit,
    /// One fewer receiver community; correct decision is rejection.
    ReceiverUnderfit,
    /// One fewer on both sides; correct decision is rejection.
    BothUnderfit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::SenderUnderfit => "sender-underfit",
            Scenario::ReceiverUnderfit => "receiver-underfit",
            Scenario::BothUnderfit => "both-underfit",
        }
    }
}

/// The scenarios applicable to a true order. Variants that would need a
/// zero community count are absent (e.g. no sender underfit of `(1, k)`).
pub fn discrimination_candidates(true_order: CandidatePair) -> Vec<(Scenario, CandidatePair)> {
    let (k_s, k_r) = true_order;
    let mut out = vec![(Scenario::Null, true_order)];
    if k_s > 1 {
        out.push((Scenario::SenderUnderfit, (k_s - 1, k_r)));
    }
    if k_r > 1 {
        out.push((Scenario::ReceiverUnderfit, (k_s, k_r - 1)));
    }
    if k_s > 1 && k_r > 1 {
        out.push((Scenario::BothUnderfit, (k_s - 1, k_r - 1)));
    }
    out
}

/// Accept/reject correctness of the statistic across true orders.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationSpec {
    pub true_orders: Vec<CandidatePair>,
    pub n_grid: Vec<usize>,
    pub num_layers: usize,
    pub rho: f64,
    pub threshold: ThresholdRule,
    pub replications: usize,
    pub base_seed: u64,
}

impl DiscriminationSpec {
    /// CI-sized default: one asymmetric structure at the published size.
    pub fn desk_scale(base_seed: u64) -> Self {
        Self {
            true_orders: vec![(3, 4)],
            n_grid: vec![800],
            num_layers: 15,
            rho: 0.2,
            threshold: ThresholdRule::ExponentOfN(0.2),
            replications: 50,
            base_seed,
        }
    }

    /// The published protocol: eight asymmetric structures, 200 reps.
    pub fn full_scale(base_seed: u64) -> Self {
        Self {
            true_orders: vec![
                (2, 3),
                (2, 4),
                (3, 2),
                (3, 4),
                (3, 5),
                (4, 3),
                (4, 5),
                (5, 4),
            ],
            replications: 200,
            ..Self::desk_scale(base_seed)
        }
    }

    fn validate(&self) -> Result<()> {
        check_nonempty(&self.true_orders, "true order list")?;
        check_nonempty(&self.n_grid, "n grid")?;
        check_positive(self.replications, "replications")
    }
}

#[derive(Debug, Clone)]
pub struct DiscriminationRecord {
    pub true_order: CandidatePair,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// Acceptance threshold in force for this replication's decisions.
    pub t_n: f64,
    /// `(scenario, candidate, statistic)` per applicable scenario.
    pub statistics: Vec<(Scenario, CandidatePair, f64)>,
    /// Profiling only; never serialized.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationRow {
    pub true_order: CandidatePair,
    pub n: usize,
    pub scenario: Scenario,
    pub candidate: CandidatePair,
    /// Fraction of replications decided correctly: acceptance under
    /// [`Scenario::Null`], rejection otherwise.
    pub correct_rate: f64,
    /// Binomial standard error `sqrt(p (1-p) / reps)`.
    pub standard_error: f64,
}

#[derive(Debug, Clone)]
pub struct DiscriminationOutcome {
    pub rows: Vec<DiscriminationRow>,
    pub records: Vec<DiscriminationRecord>,
}

pub fn run_discrimination(spec: &DiscriminationSpec) -> Result<DiscriminationOutcome> {
    spec.validate()?;
    let mut records = Vec::new();
    for &true_order in &spec.true_orders {
        for &n in &spec.n_grid {
            let t_n = SelectionConfig {
                t_rule: spec.threshold,
                ..SelectionConfig::default()
            }
            .resolve(n)?
            .t_n;
            let scenarios = discrimination_candidates(true_order);
            let cell: Vec<DiscriminationRecord> = (0..spec.replications)
                .into_par_iter()
                .map(|rep| {
                    let start = Instant::now();
                    let seed = network_seed(
                        spec.base_seed,
                        &[
                            true_order.0 as u64,
                            true_order.1 as u64,
                            n as u64,
                            spec.num_layers as u64,
                            spec.rho.to_bits(),
                            rep as u64,
                        ],
                    );
                    let planted = generate(&GeneratorConfig {
                        n,
                        num_layers: spec.num_layers,
                        k_s: true_order.0,
                        k_r: true_order.1,
                        rho: spec.rho,
                        seed,
                    })?;
                    let mut eval = NetworkStatistics::new(&planted.network, seed);
                    let mut statistics = Vec::with_capacity(scenarios.len());
                    for &(scenario, pair) in &scenarios {
                        statistics.push((scenario, pair, eval.statistic(pair.0, pair.1)?.t_hat));
                    }
                    Ok(DiscriminationRecord {
                        true_order,
                        n,
                        replication: rep,
                        seed,
                        t_n,
                        statistics,
                        wall_time: start.elapsed(),
                    })
                })
                .collect::<Result<_>>()?;
            records.extend(cell);
        }
    }
    let rows = discrimination_rows(&records);
    Ok(DiscriminationOutcome { rows, records })
}

/// Re-aggregates records into decision-correctness rows.
pub fn discrimination_rows(records: &[DiscriminationRecord]) -> Vec<DiscriminationRow> {
    let mut keys: Vec<(CandidatePair, usize, Scenario, CandidatePair)> = Vec::new();
    for r in records {
        for &(scenario, candidate, _) in &r.statistics {
            let key = (r.true_order, r.n, scenario, candidate);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys.iter()
        .map(|&(true_order, n, scenario, candidate)| {
            let mut total = 0usize;
            let mut correct = 0usize;
            for r in records.iter().filter(|r| r.true_order == true_order && r.n == n) {
                for &(s, c, t_hat) in &r.statistics {
                    if s == scenario && c == candidate {
                        total += 1;
                        let ok = match scenario {
                            Scenario::Null => t_hat < r.t_n,
                            _ => t_hat >= r.t_n,
                        };
                        if ok {
                            correct += 1;
                        }
                    }
                }
            }
            let p = correct as f64 / total as f64;
            DiscriminationRow {
                true_order,
                n,
                scenario,
                candidate,
                correct_rate: p,
                standard_error: (p * (1.0 - p) / total as f64).sqrt(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Accuracy sweep
// ---------------------------------------------------------------------------

/// Exact-recovery rate of both selectors over structures, sizes, and
/// densities. Both selectors run on the same networks and share cached
/// statistics, so their comparison is paired.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracySweepSpec {
    pub structures: Vec<CandidatePair>,
    pub n_grid: Vec<usize>,
    pub rho_grid: Vec<f64>,
    pub num_layers: usize,
    pub selection: SelectionConfig,
    pub replications: usize,
    pub base_seed: u64,
}

impl AccuracySweepSpec {
    /// CI-sized default: an easy and a hard structure on a small grid.
    pub fn desk_scale(base_seed: u64) -> Self {
        Self {
            structures: vec![(2, 3), (3, 5)],
            n_grid: vec![200, 400],
            rho_grid: vec![0.1, 0.2],
            num_layers: 15,
            selection: SelectionConfig::default(),
            replications: 50,
            base_seed,
        }
    }

    /// The published protocol: nine structures, five sizes, five densities.
    pub fn full_scale(base_seed: u64) -> Self {
        Self {
            structures: vec![
                (1, 1),
                (1, 3),
                (2, 2),
                (2, 3),
                (2, 4),
                (3, 4),
                (3, 5),
                (4, 4),
                (4, 5),
            ],
            n_grid: vec![200, 400, 600, 800, 1000],
            rho_grid: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            replications: 200,
            ..Self::desk_scale(base_seed)
        }
    }

    fn validate(&self) -> Result<()> {
        check_nonempty(&self.structures, "structure list")?;
        check_nonempty(&self.n_grid, "n grid")?;
        check_nonempty(&self.rho_grid, "rho grid")?;
        check_positive(self.replications, "replications")
    }
}

#[derive(Debug, Clone)]
pub struct AccuracyRecord {
    pub structure: CandidatePair,
    pub n: usize,
    pub rho: f64,
    pub replication: usize,
    pub seed: u64,
    /// Every candidate the shared evaluator scored, ascending.
    pub statistics: Vec<(CandidatePair, f64)>,
    pub threshold_choice: CandidatePair,
    pub ratio_choice: CandidatePair,
    /// Profiling only; never serialized.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub structure: CandidatePair,
    pub n: usize,
    pub rho: f64,
    pub algorithm: Algorithm,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct AccuracySweepOutcome {
    pub rows: Vec<AccuracyRow>,
    pub records: Vec<AccuracyRecord>,
}

pub fn run_accuracy_sweep(spec: &AccuracySweepSpec) -> Result<AccuracySweepOutcome> {
    spec.validate()?;
    let mut records = Vec::new();
    for &structure in &spec.structures {
        for &n in &spec.n_grid {
            for &rho in &spec.rho_grid {
                let cell: Vec<AccuracyRecord> = (0..spec.replications)
                    .into_par_iter()
                    .map(|rep| {
                        let start = Instant::now();
                        let seed = network_seed(
                            spec.base_seed,
                            &[
                                structure.0 as u64,
                                structure.1 as u64,
                                n as u64,
                                spec.num_layers as u64,
                                rho.to_bits(),
                                rep as u64,
                            ],
                        );
                        let planted = generate(&GeneratorConfig {
                            n,
                            num_layers: spec.num_layers,
                            k_s: structure.0,
                            k_r: structure.1,
                            rho,
                            seed,
                        })?;
                        let mut eval = NetworkStatistics::new(&planted.network, seed);
                        let threshold_choice =
                            threshold_scan_estimate(&mut eval, n, &spec.selection)?.chosen;
                        let ratio_choice =
                            ratio_scan_estimate(&mut eval, n, &spec.selection)?.chosen;
                        Ok(AccuracyRecord {
                            structure,
                            n,
                            rho,
                            replication: rep,
                            seed,
                            statistics: eval.evaluated_statistics(),
                            threshold_choice,
                            ratio_choice,
                            wall_time: start.elapsed(),
                        })
                    })
                    .collect::<Result<_>>()?;
                records.extend(cell);
            }
        }
    }
    let rows = accuracy_rows(&records)?;
    Ok(AccuracySweepOutcome { rows, records })
}

/// Re-aggregates records into per-cell, per-algorithm accuracies.
pub fn accuracy_rows(records: &[AccuracyRecord]) -> Result<Vec<AccuracyRow>> {
    let mut keys: Vec<(CandidatePair, usize, f64)> = Vec::new();
    for r in records {
        let key = (r.structure, r.n, r.rho);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows = Vec::with_capacity(keys.len() * 2);
    for &(structure, n, rho) in &keys {
        let cell: Vec<&AccuracyRecord> = records
            .iter()
            .filter(|r| r.structure == structure && r.n == n && r.rho == rho)
            .collect();
        let threshold: Vec<CandidatePair> = cell.iter().map(|r| r.threshold_choice).collect();
        let ratio: Vec<CandidatePair> = cell.iter().map(|r| r.ratio_choice).collect();
        rows.push(AccuracyRow {
            structure,
            n,
            rho,
            algorithm: Algorithm::ThresholdScan,
            accuracy: accuracy(&threshold, structure)?,
        });
        rows.push(AccuracyRow {
            structure,
            n,
            rho,
            algorithm: Algorithm::RatioScan,
            accuracy: accuracy(&ratio, structure)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Threshold sensitivity
// ---------------------------------------------------------------------------

/// Which tuning knob a sensitivity grid point varies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdFamily {
    /// Threshold scan with `t_n = n^(-parameter)`.
    DecayExponent,
    /// Ratio scan with fixed `tau_n = parameter`.
    ConstantTau,
    /// Ratio scan with `tau_n = parameter * ln n`.
    LogScaleTau,
}

impl ThresholdFamily {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdFamily::DecayExponent => "decay-exponent",
            ThresholdFamily::ConstantTau => "constant-tau",
            ThresholdFamily::LogScaleTau => "log-scale-tau",
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            ThresholdFamily::DecayExponent => Algorithm::ThresholdScan,
            _ => Algorithm::RatioScan,
        }
    }
}

/// Selector accuracy as a function of its tuning parameter, at one fixed
/// planted setting. All grid points of a replication share one cached
/// evaluator, so adding points is nearly free.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySpec {
    pub n: usize,
    pub num_layers: usize,
    pub true_order: CandidatePair,
    pub rho: f64,
    pub exponent_grid: Vec<f64>,
    pub tau_const_grid: Vec<f64>,
    pub tau_scale_grid: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
}

impl SensitivitySpec {
    /// CI-sized default: the points the acceptance gates care about.
    pub fn desk_scale(base_seed: u64) -> Self {
        Self {
            n: 800,
            num_layers: 15,
            true_order: (3, 5),
            rho: 0.2,
            exponent_grid: vec![0.1, 0.2, 0.5],
            tau_const_grid: vec![2.0, 8.0],
            tau_scale_grid: vec![4.0],
            replications: 25,
            base_seed,
        }
    }

    /// The published protocol: ten points per family, 200 replications.
    pub fn full_scale(base_seed: u64) -> Self {
        Self {
            exponent_grid: (1..=10).map(|i| i as f64 / 10.0).collect(),
            tau_const_grid: (1..=10).map(|i| (2 * i) as f64).collect(),
            tau_scale_grid: (1..=10).map(|i| i as f64 / 2.0).collect(),
            replications: 200,
            ..Self::desk_scale(base_seed)
        }
    }

    fn points(&self) -> Vec<SensitivityPoint> {
        let mut points = Vec::new();
        for &e in &self.exponent_grid {
            points.push(SensitivityPoint { family: ThresholdFamily::DecayExponent, parameter: e });
        }
        for &t in &self.tau_const_grid {
            points.push(SensitivityPoint { family: ThresholdFamily::ConstantTau, parameter: t });
        }
        for &a in &self.tau_scale_grid {
            points.push(SensitivityPoint { family: ThresholdFamily::LogScaleTau, parameter: a });
        }
        points
    }

    fn validate(&self) -> Result<()> {
        if self.exponent_grid.is_empty()
            && self.tau_const_grid.is_empty()
            && self.tau_scale_grid.is_empty()
        {
            return Err(Error::Config("sensitivity spec has no grid points".into()));
        }
        check_positive(self.replications, "replications")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    pub family: ThresholdFamily,
    pub parameter: f64,
}

#[derive(Debug, Clone)]
pub struct SensitivityRecord {
    pub replication: usize,
    pub seed: u64,
    /// Every candidate the shared evaluator scored, ascending.
    pub statistics: Vec<(CandidatePair, f64)>,
    /// Chosen pair per grid point, in spec order (exponents, constant
    /// taus, then scales).
    pub choices: Vec<(SensitivityPoint, CandidatePair)>,
    /// Profiling only; never serialized.
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub family: ThresholdFamily,
    pub parameter: f64,
    pub algorithm: Algorithm,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub rows: Vec<SensitivityRow>,
    pub records: Vec<SensitivityRecord>,
}

pub fn run_threshold_sensitivity(spec: &SensitivitySpec) -> Result<SensitivityOutcome> {
    spec.validate()?;
    let points = spec.points();
    let records: Vec<SensitivityRecord> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| {
            let start = Instant::now();
            let seed = network_seed(
                spec.base_seed,
                &[
                    spec.true_order.0 as u64,
                    spec.true_order.1 as u64,
                    spec.n as u64,
                    spec.num_layers as u64,
                    spec.rho.to_bits(),
                    rep as u64,
                ],
            );
            let planted = generate(&GeneratorConfig {
                n: spec.n,
                num_layers: spec.num_layers,
                k_s: spec.true_order.0,
                k_r: spec.true_order.1,
                rho: spec.rho,
                seed,
            })?;
            let mut eval = NetworkStatistics::new(&planted.network, seed);
            let mut choices = Vec::with_capacity(points.len());
            for &point in &points {
                let config = match point.family {
                    ThresholdFamily::DecayExponent => SelectionConfig {
                        t_rule: ThresholdRule::ExponentOfN(point.parameter),
                        ..SelectionConfig::default()
                    },
                    ThresholdFamily::ConstantTau => SelectionConfig {
                        tau_rule: TauRule::Fixed(point.parameter),
                        ..SelectionConfig::default()
                    },
                    ThresholdFamily::LogScaleTau => SelectionConfig {
                        tau_rule: TauRule::ScaledLogN(point.parameter),
                        ..SelectionConfig::default()
                    },
                };
                let trace = match point.family.algorithm() {
                    Algorithm::ThresholdScan => threshold_scan_estimate(&mut eval, spec.n, &config)?,
                    Algorithm::RatioScan => ratio_scan_estimate(&mut eval, spec.n, &config)?,
                };
                choices.push((point, trace.chosen));
            }
            Ok(SensitivityRecord {
                replication: rep,
                seed,
                statistics: eval.evaluated_statistics(),
                choices,
                wall_time: start.elapsed(),
            })
        })
        .collect::<Result<_>>()?;
    let rows = sensitivity_rows(spec.true_order, &records)?;
    Ok(SensitivityOutcome { rows, records })
}

/// Re-aggregates records into per-point accuracies.
pub fn sensitivity_rows(
    truth: CandidatePair,
    records: &[SensitivityRecord],
) -> Result<Vec<SensitivityRow>> {
    let mut keys: Vec<SensitivityPoint> = Vec::new();
    for r in records {
        for &(point, _) in &r.choices {
            if !keys.contains(&point) {
                keys.push(point);
            }
        }
    }
    keys.iter()
        .map(|&point| {
            let chosen: Vec<CandidatePair> = records
                .iter()
                .flat_map(|r| r.choices.iter())
                .filter(|(p, _)| *p == point)
                .map(|&(_, c)| c)
                .collect();
            Ok(SensitivityRow {
                family: point.family,
                parameter: point.parameter,
                algorithm: point.family.algorithm(),
                accuracy: accuracy(&chosen, truth)?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Umbrella spec
// ---------------------------------------------------------------------------

/// A tagged experiment spec, the unit the config file and CLI deal in.
#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentSpec {
    StatBehavior(StatBehaviorSpec),
    Discrimination(DiscriminationSpec),
    AccuracySweep(AccuracySweepSpec),
    ThresholdSensitivity(SensitivitySpec),
}

/// Results of one experiment run, ready for serialization.
#[derive(Debug, Clone)]
pub enum ExperimentOutcome {
    StatBehavior(StatBehaviorOutcome),
    Discrimination(DiscriminationOutcome),
    AccuracySweep(AccuracySweepOutcome),
    ThresholdSensitivity(SensitivityOutcome),
}

impl ExperimentSpec {
    pub const KINDS: [&'static str; 4] = [
        "stat-behavior",
        "discrimination",
        "accuracy-sweep",
        "threshold-sensitivity",
    ];

    /// CI-sized spec for a kind name (see [`Self::KINDS`]).
    pub fn desk_scale(kind: &str, base_seed: u64) -> Result<Self> {
        match kind {
            "stat-behavior" => Ok(Self::StatBehavior(StatBehaviorSpec::desk_scale(base_seed))),
            "discrimination" => {
                Ok(Self::Discrimination(DiscriminationSpec::desk_scale(base_seed)))
            }
            "accuracy-sweep" => Ok(Self::AccuracySweep(AccuracySweepSpec::desk_scale(base_seed))),
            "threshold-sensitivity" => {
                Ok(Self::ThresholdSensitivity(SensitivitySpec::desk_scale(base_seed)))
            }
            other => Err(Error::Config(format!(
                "unknown experiment kind '{other}' (expected one of {})",
                Self::KINDS.join(", ")
            ))),
        }
    }

    /// Published-protocol spec for a kind name.
    pub fn full_scale(kind: &str, base_seed: u64) -> Result<Self> {
        match Self::desk_scale(kind, base_seed)? {
            Self::StatBehavior(_) => Ok(Self::StatBehavior(StatBehaviorSpec::full_scale(base_seed))),
            Self::Discrimination(_) => {
                Ok(Self::Discrimination(DiscriminationSpec::full_scale(base_seed)))
            }
            Self::AccuracySweep(_) => {
                Ok(Self::AccuracySweep(AccuracySweepSpec::full_scale(base_seed)))
            }
            Self::ThresholdSensitivity(_) => {
                Ok(Self::ThresholdSensitivity(SensitivitySpec::full_scale(base_seed)))
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::StatBehavior(_) => "stat-behavior",
            Self::Discrimination(_) => "discrimination",
            Self::AccuracySweep(_) => "accuracy-sweep",
            Self::ThresholdSensitivity(_) => "threshold-sensitivity",
        }
    }

    /// Number of replications this experiment will run per cell.
    pub fn replications(&self) -> usize {
        match self {
            Self::StatBehavior(s) => s.replications,
            Self::Discrimination(s) => s.replications,
            Self::AccuracySweep(s) => s.replications,
            Self::ThresholdSensitivity(s) => s.replications,
        }
    }

    pub fn set_replications(&mut self, replications: usize) {
        match self {
            Self::StatBehavior(s) => s.replications = replications,
            Self::Discrimination(s) => s.replications = replications,
            Self::AccuracySweep(s) => s.replications = replications,
            Self::ThresholdSensitivity(s) => s.replications = replications,
        }
    }

    pub fn set_base_seed(&mut self, base_seed: u64) {
        match self {
            Self::StatBehavior(s) => s.base_seed = base_seed,
            Self::Discrimination(s) => s.base_seed = base_seed,
            Self::AccuracySweep(s) => s.base_seed = base_seed,
            Self::ThresholdSensitivity(s) => s.base_seed = base_seed,
        }
    }
}

/// Runs any experiment spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    match spec {
        ExperimentSpec::StatBehavior(s) => Ok(ExperimentOutcome::StatBehavior(run_stat_behavior(s)?)),
        ExperimentSpec::Discrimination(s) => {
            Ok(ExperimentOutcome::Discrimination(run_discrimination(s)?))
        }
        ExperimentSpec::AccuracySweep(s) => {
            Ok(ExperimentOutcome::AccuracySweep(run_accuracy_sweep(s)?))
        }
        ExperimentSpec::ThresholdSensitivity(s) => {
            Ok(ExperimentOutcome::ThresholdSensitivity(run_threshold_sensitivity(s)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts_exact_matches() {
        assert_eq!(accuracy(&[(2, 3), (2, 3)], (2, 3)).unwrap(), 1.0);
        assert_eq!(accuracy(&[(1, 1), (2, 2)], (3, 3)).unwrap(), 0.0);
        let c = [(2, 3), (2, 3), (2, 3), (1, 3)];
        assert_eq!(accuracy(&c, (2, 3)).unwrap(), 0.75);
        assert!(accuracy(&[], (1, 1)).is_err());
    }

    #[test]
    fn mean_sd_hand_case() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // Sample variance of 1..4 is 5/3.
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let (m1, s1) = mean_sd(&[7.0]);
        assert_eq!((m1, s1), (7.0, 0.0));
    }

    #[test]
    fn discrimination_candidates_skip_degenerate_sides() {
        assert_eq!(
            discrimination_candidates((3, 4)),
            vec![
                (Scenario::Null, (3, 4)),
                (Scenario::SenderUnderfit, (2, 4)),
                (Scenario::ReceiverUnderfit, (3, 3)),
                (Scenario::BothUnderfit, (2, 3)),
            ]
        );
        assert_eq!(
            discrimination_candidates((1, 2)),
            vec![(Scenario::Null, (1, 2)), (Scenario::ReceiverUnderfit, (1, 1))]
        );
        assert_eq!(discrimination_candidates((1, 1)), vec![(Scenario::Null, (1, 1))]);
    }

    fn tiny_stat_spec(seed: u64) -> StatBehaviorSpec {
        StatBehaviorSpec {
            n_grid: vec![60],
            num_layers: 4,
            true_order: (2, 2),
            rho: 0.5,
            candidates: vec![(2, 2), (1, 2)],
            replications: 3,
            base_seed: seed,
        }
    }

    #[test]
    fn stat_behavior_is_deterministic_and_reaggregates() {
        let spec = tiny_stat_spec(11);
        let a = run_stat_behavior(&spec).unwrap();
        let b = run_stat_behavior(&spec).unwrap();
        assert_eq!(a.rows, b.rows);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.statistics, rb.statistics);
            assert_eq!(ra.seed, rb.seed);
        }
        // Rows must be a pure function of the records.
        assert_eq!(stat_behavior_rows(&a.records), a.rows);
        assert_eq!(a.rows.len(), 2);
        // Well-fitted candidate scores below the underfitted one.
        assert!(a.rows[0].mean < a.rows[1].mean);
    }

    #[test]
    fn different_base_seeds_give_different_draws() {
        let a = run_stat_behavior(&tiny_stat_spec(11)).unwrap();
        let b = run_stat_behavior(&tiny_stat_spec(12)).unwrap();
        assert_ne!(a.records[0].statistics, b.records[0].statistics);
    }

    #[test]
    fn discrimination_runs_and_reaggregates() {
        let spec = DiscriminationSpec {
            true_orders: vec![(2, 2)],
            n_grid: vec![80],
            num_layers: 4,
            rho: 0.5,
            threshold: ThresholdRule::ExponentOfN(0.2),
            replications: 3,
            base_seed: 5,
        };
        let out = run_discrimination(&spec).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.records.len(), 3);
        assert_eq!(discrimination_rows(&out.records), out.rows);
        for row in &out.rows {
            assert!((0.0..=1.0).contains(&row.correct_rate));
        }
    }

    #[test]
    fn accuracy_sweep_pairs_selectors_on_shared_networks() {
        let spec = AccuracySweepSpec {
            structures: vec![(2, 2)],
            n_grid: vec![80],
            rho_grid: vec![0.5],
            num_layers: 4,
            selection: SelectionConfig::default(),
            replications: 3,
            base_seed: 9,
        };
        let out = run_accuracy_sweep(&spec).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.records.len(), 3);
        assert_eq!(accuracy_rows(&out.records).unwrap(), out.rows);
        let rerun = run_accuracy_sweep(&spec).unwrap();
        assert_eq!(out.rows, rerun.rows);
    }

    #[test]
    fn sensitivity_shares_statistics_across_grid_points() {
        let spec = SensitivitySpec {
            n: 80,
            num_layers: 4,
            true_order: (2, 2),
            rho: 0.5,
            exponent_grid: vec![0.2, 0.4],
            tau_const_grid: vec![8.0],
            tau_scale_grid: vec![4.0],
            replications: 2,
            base_seed: 21,
        };
        let out = run_threshold_sensitivity(&spec).unwrap();
        assert_eq!(out.rows.len(), 4);
        for record in &out.records {
            assert_eq!(record.choices.len(), 4);
        }
        assert_eq!(sensitivity_rows((2, 2), &out.records).unwrap(), out.rows);
    }

    #[test]
    fn umbrella_spec_round_trips_kind_names() {
        for kind in ExperimentSpec::KINDS {
            let spec = ExperimentSpec::desk_scale(kind, 1).unwrap();
            assert_eq!(spec.kind(), kind);
            let full = ExperimentSpec::full_scale(kind, 1).unwrap();
            assert_eq!(full.kind(), kind);
            assert!(full.replications() >= spec.replications());
        }
        assert!(ExperimentSpec::desk_scale("nope", 1).is_err());
    }
}
