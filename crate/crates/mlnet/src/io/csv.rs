//! CSV emission with bit-stable formatting.
//!
//! Every float is written with 17 significant digits in scientific
//! notation, which round-trips `f64` exactly, so a rerun with the same seed
//! produces byte-identical files and golden-file comparison is meaningful.
//! Fields never contain commas or quotes; lines end in LF.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{
    AccuracySweepOutcome, DiscriminationOutcome, ExperimentOutcome, SensitivityOutcome,
    StatBehaviorOutcome,
};
use crate::selection::{SelectionTrace, TraceEntry};

/// Bit-stable float formatting: 17 significant digits, `inf`, `-inf`, and
/// `NaN` spelled so `str::parse::<f64>` reads them back.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a CSV written by this module back into header and string cells.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "empty CSV".into(),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

pub const TRACE_HEADER: [&str; 6] = ["m", "k_s", "k_r", "t_hat", "ratio", "stopped"];

/// One row per evaluated candidate; `ratio` is empty where no ratio exists
/// (the first candidate, and every row of a threshold scan).
pub fn write_trace_csv(trace: &SelectionTrace, path: &Path) -> Result<()> {
    let rows: Vec<Vec<String>> = trace
        .entries
        .iter()
        .map(|e| {
            vec![
                e.m.to_string(),
                e.pair.0.to_string(),
                e.pair.1.to_string(),
                format_f64(e.t_hat),
                e.ratio.map(format_f64).unwrap_or_default(),
                e.stopped.to_string(),
            ]
        })
        .collect();
    write_rows(path, &TRACE_HEADER, &rows)
}

/// Parses a file written by [`write_trace_csv`] back into entries.
pub fn parse_trace_csv(path: &Path) -> Result<Vec<TraceEntry>> {
    let (header, rows) = read_csv(path)?;
    if header != TRACE_HEADER {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: format!("unexpected trace header {header:?}"),
        });
    }
    let cell_err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    rows.iter()
        .enumerate()
        .map(|(ix, row)| {
            let line = ix + 2;
            if row.len() != TRACE_HEADER.len() {
                return Err(cell_err(line, format!("expected 6 fields, got {}", row.len())));
            }
            Ok(TraceEntry {
                m: row[0].parse().map_err(|_| cell_err(line, "bad m".into()))?,
                pair: (
                    row[1].parse().map_err(|_| cell_err(line, "bad k_s".into()))?,
                    row[2].parse().map_err(|_| cell_err(line, "bad k_r".into()))?,
                ),
                t_hat: row[3].parse().map_err(|_| cell_err(line, "bad t_hat".into()))?,
                ratio: if row[4].is_empty() {
                    None
                } else {
                    Some(row[4].parse().map_err(|_| cell_err(line, "bad ratio".into()))?)
                },
                stopped: row[5].parse().map_err(|_| cell_err(line, "bad stopped".into()))?,
            })
        })
        .collect()
}

/// Writes the tables of one experiment run into `dir` and returns the paths
/// (summary first). File names are prefixed with the experiment kind.
pub fn write_experiment_csvs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    match outcome {
        ExperimentOutcome::StatBehavior(o) => write_stat_behavior(o, dir),
        ExperimentOutcome::Discrimination(o) => write_discrimination(o, dir),
        ExperimentOutcome::AccuracySweep(o) => write_accuracy(o, dir),
        ExperimentOutcome::ThresholdSensitivity(o) => write_sensitivity(o, dir),
    }
}

fn write_stat_behavior(o: &StatBehaviorOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = dir.join("stat-behavior-summary.csv");
    write_rows(
        &summary,
        &["n", "k_s", "k_r", "mean", "sd"],
        &o.rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.candidate.0.to_string(),
                    r.candidate.1.to_string(),
                    format_f64(r.mean),
                    format_f64(r.sd),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let records = dir.join("stat-behavior-records.csv");
    let mut rows = Vec::new();
    for rec in &o.records {
        for &((k_s, k_r), t_hat) in &rec.statistics {
            rows.push(vec![
                rec.n.to_string(),
                rec.replication.to_string(),
                rec.seed.to_string(),
                k_s.to_string(),
                k_r.to_string(),
                format_f64(t_hat),
            ]);
        }
    }
    write_rows(&records, &["n", "replication", "seed", "k_s", "k_r", "t_hat"], &rows)?;
    Ok(vec![summary, records])
}

fn write_discrimination(o: &DiscriminationOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = dir.join("discrimination-summary.csv");
    write_rows(
        &summary,
        &["true_ks", "true_kr", "n", "scenario", "k_s", "k_r", "correct_rate", "standard_error"],
        &o.rows
            .iter()
            .map(|r| {
                vec![
                    r.true_order.0.to_string(),
                    r.true_order.1.to_string(),
                    r.n.to_string(),
                    r.scenario.name().to_string(),
                    r.candidate.0.to_string(),
                    r.candidate.1.to_string(),
                    format_f64(r.correct_rate),
                    format_f64(r.standard_error),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let records = dir.join("discrimination-records.csv");
    let mut rows = Vec::new();
    for rec in &o.records {
        for &(scenario, (k_s, k_r), t_hat) in &rec.statistics {
            rows.push(vec![
                rec.true_order.0.to_string(),
                rec.true_order.1.to_string(),
                rec.n.to_string(),
                rec.replication.to_string(),
                rec.seed.to_string(),
                format_f64(rec.t_n),
                scenario.name().to_string(),
                k_s.to_string(),
                k_r.to_string(),
                format_f64(t_hat),
            ]);
        }
    }
    write_rows(
        &records,
        &[
            "true_ks",
            "true_kr",
            "n",
            "replication",
            "seed",
            "t_n",
            "scenario",
            "k_s",
            "k_r",
            "t_hat",
        ],
        &rows,
    )?;
    Ok(vec![summary, records])
}

fn write_accuracy(o: &AccuracySweepOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = dir.join("accuracy-sweep-summary.csv");
    write_rows(
        &summary,
        &["true_ks", "true_kr", "n", "rho", "algorithm", "accuracy"],
        &o.rows
            .iter()
            .map(|r| {
                vec![
                    r.structure.0.to_string(),
                    r.structure.1.to_string(),
                    r.n.to_string(),
                    format_f64(r.rho),
                    r.algorithm.name().to_string(),
                    format_f64(r.accuracy),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let choices = dir.join("accuracy-sweep-choices.csv");
    let mut choice_rows = Vec::new();
    let mut stat_rows = Vec::new();
    for rec in &o.records {
        let coords = [
            rec.structure.0.to_string(),
            rec.structure.1.to_string(),
            rec.n.to_string(),
            format_f64(rec.rho),
            rec.replication.to_string(),
            rec.seed.to_string(),
        ];
        for (alg, chosen) in [
            ("threshold-scan", rec.threshold_choice),
            ("ratio-scan", rec.ratio_choice),
        ] {
            let mut row = coords.to_vec();
            row.extend([alg.to_string(), chosen.0.to_string(), chosen.1.to_string()]);
            choice_rows.push(row);
        }
        for &((k_s, k_r), t_hat) in &rec.statistics {
            let mut row = coords.to_vec();
            row.extend([k_s.to_string(), k_r.to_string(), format_f64(t_hat)]);
            stat_rows.push(row);
        }
    }
    write_rows(
        &choices,
        &[
            "true_ks",
            "true_kr",
            "n",
            "rho",
            "replication",
            "seed",
            "algorithm",
            "chosen_ks",
            "chosen_kr",
        ],
        &choice_rows,
    )?;
    let statistics = dir.join("accuracy-sweep-statistics.csv");
    write_rows(
        &statistics,
        &["true_ks", "true_kr", "n", "rho", "replication", "seed", "k_s", "k_r", "t_hat"],
        &stat_rows,
    )?;
    Ok(vec![summary, choices, statistics])
}

fn write_sensitivity(o: &SensitivityOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = dir.join("threshold-sensitivity-summary.csv");
    write_rows(
        &summary,
        &["family", "parameter", "algorithm", "accuracy"],
        &o.rows
            .iter()
            .map(|r| {
                vec![
                    r.family.name().to_string(),
                    format_f64(r.parameter),
                    r.algorithm.name().to_string(),
                    format_f64(r.accuracy),
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let choices = dir.join("threshold-sensitivity-choices.csv");
    let mut choice_rows = Vec::new();
    let mut stat_rows = Vec::new();
    for rec in &o.records {
        for &(point, chosen) in &rec.choices {
            choice_rows.push(vec![
                rec.replication.to_string(),
                rec.seed.to_string(),
                point.family.name().to_string(),
                format_f64(point.parameter),
                chosen.0.to_string(),
                chosen.1.to_string(),
            ]);
        }
        for &((k_s, k_r), t_hat) in &rec.statistics {
            stat_rows.push(vec![
                rec.replication.to_string(),
                rec.seed.to_string(),
                k_s.to_string(),
                k_r.to_string(),
                format_f64(t_hat),
            ]);
        }
    }
    write_rows(
        &choices,
        &["replication", "seed", "family", "parameter", "chosen_ks", "chosen_kr"],
        &choice_rows,
    )?;
    let statistics = dir.join("threshold-sensitivity-statistics.csv");
    write_rows(
        &statistics,
        &["replication", "seed", "k_s", "k_r", "t_hat"],
        &stat_rows,
    )?;
    Ok(vec![summary, choices, statistics])
}
