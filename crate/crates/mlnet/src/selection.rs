//! Selection of the community order `(k_s, k_r)` by scanning candidates in
//! increasing complexity.
//!
//! Candidates are all pairs in `{1..k_cand}^2`, ordered by the sum
//! `k_s + k_r` and then by `k_s` (so `(1,1), (1,2), (2,1), (1,3), (2,2),
//! (3,1), ...`). Two stopping rules share that scan:
//!
//! * threshold scan: stop at the first candidate whose statistic falls
//!   below `t_n` (default `n^(-1/5)`);
//! * ratio scan: stop where consecutive statistics drop sharply, i.e. the
//!   first `m >= 2` with `|t(m-1) / t(m)| > tau_n` (default `8 ln n`),
//!   with an early exit at `(1,1)` when its statistic is already below
//!   `t_n`.
//!
//! Both return the last candidate when no rule fires. Statistics are pulled
//! lazily through [`StatisticSource`], so a run never evaluates candidates
//! past its stopping index, and a caching source lets several rules share
//! one set of evaluations.

use crate::error::{Error, Result};
use crate::gof::NetworkStatistics;

/// Candidate community order: `(k_s, k_r)`, both at least 1.
pub type CandidatePair = (usize, usize);

/// All pairs in `{1..k_cand}^2` ordered by ascending sum, then ascending
/// `k_s`. The position of a pair in this sequence is its 1-based index `m`.
pub fn candidate_sequence(k_cand: usize) -> Vec<CandidatePair> {
    let mut seq = Vec::with_capacity(k_cand * k_cand);
    for sum in 2..=(2 * k_cand) {
        let lo = 1.max(sum as i64 - k_cand as i64) as usize;
        let hi = k_cand.min(sum - 1);
        for k_s in lo..=hi {
            seq.push((k_s, sum - k_s));
        }
    }
    seq
}

/// 1-based index of `pair` in [`candidate_sequence`]`(k_cand)`, computed in
/// closed form.
pub fn index_of_pair(pair: CandidatePair, k_cand: usize) -> Result<usize> {
    let (k_s, k_r) = pair;
    if k_s == 0 || k_r == 0 || k_s > k_cand || k_r > k_cand {
        return Err(Error::DegenerateInput(format!(
            "pair ({k_s}, {k_r}) outside candidate grid {{1..{k_cand}}}^2"
        )));
    }
    let sum = k_s + k_r;
    let mut before = 0usize;
    for s in 2..sum {
        let lo = 1.max(s as i64 - k_cand as i64) as usize;
        let hi = k_cand.min(s - 1);
        before += hi - lo + 1;
    }
    let lo = 1.max(sum as i64 - k_cand as i64) as usize;
    Ok(before + (k_s - lo) + 1)
}

/// Ratios `r_m = |t(m-1) / t(m)|` for `m = 2..=M`. A zero denominator maps
/// to `+inf`, which compares greater than every finite threshold.
pub fn ratio_sequence(t_hats: &[f64]) -> Vec<f64> {
    t_hats
        .windows(2)
        .map(|w| statistic_ratio(w[0], w[1]))
        .collect()
}

fn statistic_ratio(prev: f64, cur: f64) -> f64 {
    if cur == 0.0 {
        f64::INFINITY
    } else {
        (prev / cur).abs()
    }
}

/// Acceptance threshold `t_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// `t_n = n^(-exponent)`.
    ExponentOfN(f64),
    Fixed(f64),
}

/// Ratio threshold `tau_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// `tau_n = scale * ln n`.
    ScaledLogN(f64),
    Fixed(f64),
}

/// Tuning knobs for both selectors; `None` for `k_cand` means the default
/// `floor(sqrt(n / ln n))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub t_rule: ThresholdRule,
    pub tau_rule: TauRule,
    pub k_cand: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            t_rule: ThresholdRule::ExponentOfN(0.2),
            tau_rule: TauRule::ScaledLogN(8.0),
            k_cand: None,
        }
    }
}

/// Thresholds and grid size actually used for a given `n`; recorded on
/// every trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedThresholds {
    pub t_n: f64,
    pub tau_n: f64,
    pub k_cand: usize,
}

impl SelectionConfig {
    pub fn resolve(&self, n: usize) -> Result<ResolvedThresholds> {
        if n < 2 {
            return Err(Error::DegenerateInput(format!("selection needs n >= 2, got {n}")));
        }
        let t_n = match self.t_rule {
            ThresholdRule::ExponentOfN(e) => (n as f64).powf(-e),
            ThresholdRule::Fixed(v) => v,
        };
        let tau_n = match self.tau_rule {
            TauRule::ScaledLogN(a) => a * (n as f64).ln(),
            TauRule::Fixed(v) => v,
        };
        let k_cand = match self.k_cand {
            Some(k) if k >= 1 => k,
            Some(_) => return Err(Error::DegenerateInput("k_cand must be >= 1".into())),
            None => ((n as f64) / (n as f64).ln()).sqrt().floor().max(1.0) as usize,
        };
        if !t_n.is_finite() || !tau_n.is_finite() {
            return Err(Error::DegenerateInput("thresholds must be finite".into()));
        }
        Ok(ResolvedThresholds { t_n, tau_n, k_cand })
    }
}

/// Lazy supplier of candidate statistics. The production implementation is
/// the caching [`NetworkStatistics`] evaluator; tests inject fixed
/// sequences.
pub trait StatisticSource {
    fn statistic(&mut self, pair: CandidatePair) -> Result<f64>;
}

impl StatisticSource for NetworkStatistics<'_> {
    fn statistic(&mut self, pair: CandidatePair) -> Result<f64> {
        Ok(NetworkStatistics::statistic(self, pair.0, pair.1)?.t_hat)
    }
}

/// A source backed by a pre-computed statistic sequence in candidate order.
pub struct SequenceSource {
    values: Vec<f64>,
    k_cand: usize,
    pub evaluations: usize,
}

impl SequenceSource {
    pub fn new(values: Vec<f64>, k_cand: usize) -> Self {
        Self { values, k_cand, evaluations: 0 }
    }
}

impl StatisticSource for SequenceSource {
    fn statistic(&mut self, pair: CandidatePair) -> Result<f64> {
        self.evaluations += 1;
        let m = index_of_pair(pair, self.k_cand)?;
        self.values
            .get(m - 1)
            .copied()
            .ok_or_else(|| Error::DegenerateInput(format!("no statistic for index {m}")))
    }
}

/// Why a scan ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The statistic fell below `t_n`.
    ThresholdCrossed,
    /// The ratio of consecutive statistics exceeded `tau_n`.
    RatioPeak,
    /// No rule fired; the last candidate was returned.
    Exhausted,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::ThresholdCrossed => "threshold-crossed",
            StopReason::RatioPeak => "ratio-peak",
            StopReason::Exhausted => "exhausted",
        }
    }
}

/// One evaluated candidate in a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    /// 1-based position in the candidate sequence.
    pub m: usize,
    pub pair: CandidatePair,
    pub t_hat: f64,
    /// `|t(m-1)/t(m)|`; only ratio scans record it, and never at `m = 1`.
    pub ratio: Option<f64>,
    /// True exactly on the entry where the scan stopped.
    pub stopped: bool,
}

/// Complete record of one selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionTrace {
    pub entries: Vec<TraceEntry>,
    pub chosen: CandidatePair,
    /// 1-based index of the chosen candidate.
    pub chosen_index: usize,
    pub stop_reason: StopReason,
    pub thresholds: ResolvedThresholds,
}

/// Threshold scan: the first candidate (in sequence order) whose statistic
/// falls below `t_n`, else the last candidate.
pub fn threshold_scan_estimate(
    source: &mut dyn StatisticSource,
    n: usize,
    config: &SelectionConfig,
) -> Result<SelectionTrace> {
    let thresholds = config.resolve(n)?;
    let seq = candidate_sequence(thresholds.k_cand);
    let mut entries = Vec::new();
    for (ix, &pair) in seq.iter().enumerate() {
        let m = ix + 1;
        let t_hat = source.statistic(pair)?;
        let stopped = t_hat < thresholds.t_n;
        entries.push(TraceEntry { m, pair, t_hat, ratio: None, stopped });
        if stopped {
            return Ok(SelectionTrace {
                entries,
                chosen: pair,
                chosen_index: m,
                stop_reason: StopReason::ThresholdCrossed,
                thresholds,
            });
        }
    }
    finish_exhausted(entries, &seq, thresholds)
}

/// Ratio scan: early exit at `(1,1)` if its statistic is below `t_n`;
/// otherwise the first `m >= 2` whose ratio `|t(m-1)/t(m)|` exceeds
/// `tau_n`, else the last candidate.
pub fn ratio_scan_estimate(
    source: &mut dyn StatisticSource,
    n: usize,
    config: &SelectionConfig,
) -> Result<SelectionTrace> {
    let thresholds = config.resolve(n)?;
    let seq = candidate_sequence(thresholds.k_cand);
    let mut entries = Vec::new();

    let first = source.statistic(seq[0])?;
    if first < thresholds.t_n {
        entries.push(TraceEntry { m: 1, pair: seq[0], t_hat: first, ratio: None, stopped: true });
        return Ok(SelectionTrace {
            entries,
            chosen: seq[0],
            chosen_index: 1,
            stop_reason: StopReason::ThresholdCrossed,
            thresholds,
        });
    }
    entries.push(TraceEntry { m: 1, pair: seq[0], t_hat: first, ratio: None, stopped: false });

    let mut prev = first;
    for (ix, &pair) in seq.iter().enumerate().skip(1) {
        let m = ix + 1;
        let t_hat = source.statistic(pair)?;
        let ratio = statistic_ratio(prev, t_hat);
        let stopped = ratio > thresholds.tau_n;
        entries.push(TraceEntry { m, pair, t_hat, ratio: Some(ratio), stopped });
        if stopped {
            return Ok(SelectionTrace {
                entries,
                chosen: pair,
                chosen_index: m,
                stop_reason: StopReason::RatioPeak,
                thresholds,
            });
        }
        prev = t_hat;
    }
    finish_exhausted(entries, &seq, thresholds)
}

fn finish_exhausted(
    mut entries: Vec<TraceEntry>,
    seq: &[CandidatePair],
    thresholds: ResolvedThresholds,
) -> Result<SelectionTrace> {
    let last = entries
        .last_mut()
        .ok_or_else(|| Error::DegenerateInput("empty candidate sequence".into()))?;
    debug_assert_eq!(last.m, seq.len());
    last.stopped = true;
    let chosen = last.pair;
    let chosen_index = last.m;
    Ok(SelectionTrace {
        entries,
        chosen,
        chosen_index,
        stop_reason: StopReason::Exhausted,
        thresholds,
    })
}
