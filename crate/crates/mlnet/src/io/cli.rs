//! Command-line entry points.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad data or configuration,
//! 3 numerical failure. Results go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::gof::NetworkStatistics;
use crate::harness::run_experiment;
use crate::io::config::{self, ConfigMap};
use crate::io::csv::{format_f64, write_experiment_csvs, write_trace_csv};
use crate::io::edgelist::{load_multiplex_edgelist, write_edge_list, LoadedNetwork};
use crate::model;
use crate::selection::{
    ratio_scan_estimate, threshold_scan_estimate, SelectionConfig, TauRule, ThresholdRule,
};

#[derive(Parser)]
#[command(
    name = "mlnet",
    version,
    about = "Community-count selection for directed multi-layer networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic multi-layer network and write it as an edge list.
    Simulate {
        /// Config file with gen.* keys (gen.n, gen.layers, gen.ks, gen.kr,
        /// gen.rho, optional gen.seed).
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output edge-list path.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Overrides gen.seed and the MLNET_SEED variable.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Estimate the community counts of a network with both scan rules.
    Estimate {
        /// Edge-list file (lines "layer src dst [weight]").
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Keep only edges whose weight is at least this value.
        #[arg(long, default_value_t = 0.0)]
        min_weight: f64,
        /// Candidate grid bound; defaults to floor(sqrt(n / ln n)).
        #[arg(long)]
        k_cand: Option<usize>,
        /// Acceptance threshold exponent: t_n = n^(-EXP).
        #[arg(long, value_name = "EXP", conflicts_with = "t_const")]
        t_exponent: Option<f64>,
        /// Fixed acceptance threshold.
        #[arg(long, value_name = "T")]
        t_const: Option<f64>,
        /// Ratio threshold scale: tau_n = SCALE * ln n.
        #[arg(long, value_name = "SCALE", conflicts_with = "tau_const")]
        tau_scale: Option<f64>,
        /// Fixed ratio threshold.
        #[arg(long, value_name = "TAU")]
        tau_const: Option<f64>,
        /// Base seed for embedding clustering (default: MLNET_SEED or 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Write <PREFIX>-threshold-trace.csv and <PREFIX>-ratio-trace.csv.
        #[arg(long, value_name = "PREFIX")]
        out: Option<String>,
    },
    /// Evaluate the goodness-of-fit statistic at one candidate pair.
    Stat {
        /// Edge-list file (lines "layer src dst [weight]").
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Sender community count.
        #[arg(long)]
        ks: usize,
        /// Receiver community count.
        #[arg(long)]
        kr: usize,
        /// Keep only edges whose weight is at least this value.
        #[arg(long, default_value_t = 0.0)]
        min_weight: f64,
        /// Base seed for embedding clustering (default: MLNET_SEED or 0).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a simulation experiment and write its CSV tables.
    Experiment {
        /// Config file; exp.kind selects the experiment, other exp.* keys
        /// override the preset grids.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Output directory for the CSV tables.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Overrides the preset and exp.reps replication count.
        #[arg(long)]
        reps: Option<usize>,
        /// Overrides exp.seed and the MLNET_SEED variable.
        #[arg(long)]
        seed: Option<u64>,
        /// Use the full preset grids instead of the reduced desk-scale ones.
        #[arg(long)]
        full_scale: bool,
    },
}

/// Seed precedence: explicit flag, then the environment value, then 0.
fn resolve_seed(flag: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        None => Ok(0),
        Some(v) => v.trim().parse().map_err(|_| {
            Error::Config(format!("MLNET_SEED must be an unsigned integer, got '{v}'"))
        }),
    }
}

fn seed_from_env(flag: Option<u64>) -> Result<u64> {
    let env = std::env::var_os("MLNET_SEED");
    let env_str = match &env {
        None => None,
        Some(os) => Some(
            os.to_str()
                .ok_or_else(|| Error::Config("MLNET_SEED is not valid UTF-8".into()))?,
        ),
    };
    resolve_seed(flag, env_str)
}

fn report_load(loaded: &LoadedNetwork) {
    if loaded.below_threshold > 0 {
        eprintln!("note: filtered {} edge(s) below the weight threshold", loaded.below_threshold);
    }
    if loaded.dropped_self_loops > 0 {
        eprintln!("note: dropped {} self-loop(s)", loaded.dropped_self_loops);
    }
    if loaded.collapsed_duplicates > 0 {
        eprintln!("note: collapsed {} duplicate edge(s)", loaded.collapsed_duplicates);
    }
}

fn scan_config(
    k_cand: Option<usize>,
    t_exponent: Option<f64>,
    t_const: Option<f64>,
    tau_scale: Option<f64>,
    tau_const: Option<f64>,
) -> SelectionConfig {
    let default = SelectionConfig::default();
    SelectionConfig {
        t_rule: match (t_exponent, t_const) {
            (Some(e), _) => ThresholdRule::ExponentOfN(e),
            (_, Some(t)) => ThresholdRule::Fixed(t),
            _ => default.t_rule,
        },
        tau_rule: match (tau_scale, tau_const) {
            (Some(a), _) => TauRule::ScaledLogN(a),
            (_, Some(t)) => TauRule::Fixed(t),
            _ => default.tau_rule,
        },
        k_cand,
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate { config, out: out_path, seed } => {
            let mut map = ConfigMap::parse_file(&config)?;
            let default_seed = seed_from_env(None)?;
            let mut gen_cfg = config::generator_config(&mut map, default_seed)?;
            if let Some(s) = seed {
                gen_cfg.seed = s;
            }
            map.finish()?;
            let drawn = model::generate(&gen_cfg)?;
            write_edge_list(&drawn.network, &out_path)?;
            writeln!(out, "{}", out_path.display())?;
            Ok(())
        }
        Command::Estimate {
            input,
            min_weight,
            k_cand,
            t_exponent,
            t_const,
            tau_scale,
            tau_const,
            seed,
            out: prefix,
        } => {
            let loaded = load_multiplex_edgelist(&input, min_weight)?;
            report_load(&loaded);
            let config = scan_config(k_cand, t_exponent, t_const, tau_scale, tau_const);
            let n = loaded.network.n();
            let seed = seed_from_env(seed)?;
            let mut stats = NetworkStatistics::new(&loaded.network, seed);
            let threshold = threshold_scan_estimate(&mut stats, n, &config)?;
            let ratio = ratio_scan_estimate(&mut stats, n, &config)?;
            for (name, trace) in [("threshold-scan", &threshold), ("ratio-scan", &ratio)] {
                writeln!(
                    out,
                    "{name} {} {} {}",
                    trace.chosen.0,
                    trace.chosen.1,
                    trace.stop_reason.name()
                )?;
            }
            if let Some(prefix) = prefix {
                write_trace_csv(&threshold, &PathBuf::from(format!("{prefix}-threshold-trace.csv")))?;
                write_trace_csv(&ratio, &PathBuf::from(format!("{prefix}-ratio-trace.csv")))?;
            }
            Ok(())
        }
        Command::Stat { input, ks, kr, min_weight, seed } => {
            let loaded = load_multiplex_edgelist(&input, min_weight)?;
            report_load(&loaded);
            let seed = seed_from_env(seed)?;
            let mut stats = NetworkStatistics::new(&loaded.network, seed);
            let stat = stats.statistic(ks, kr)?;
            writeln!(out, "{}", format_f64(stat.t_hat))?;
            Ok(())
        }
        Command::Experiment { config, out: dir, reps, seed, full_scale } => {
            let mut map = ConfigMap::parse_file(&config)?;
            let default_seed = seed_from_env(None)?;
            let mut spec = config::experiment_spec(&mut map, default_seed, full_scale)?;
            map.finish()?;
            if let Some(s) = seed {
                spec.set_base_seed(s);
            }
            if let Some(r) = reps {
                spec.set_replications(r);
            }
            let outcome = run_experiment(&spec)?;
            let paths = write_experiment_csvs(&outcome, &dir)?;
            for p in paths {
                writeln!(out, "{}", p.display())?;
            }
            Ok(())
        }
    }
}

/// Parses `args` and runs the selected command, writing results to `out`.
/// Returns the process exit code.
pub fn run_with_output<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here with a zero exit code.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with_output`] wired to stdout; the binary calls this.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = std::io::stdout().lock();
    run_with_output(args, &mut stdout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::csv::parse_trace_csv;
    use std::fs;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run_with_output(args.iter().copied(), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn seed_resolution_prefers_flag_then_env() {
        assert_eq!(resolve_seed(Some(7), Some("9")).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some("9")).unwrap(), 9);
        assert_eq!(resolve_seed(None, Some(" 9 ")).unwrap(), 9);
        assert_eq!(resolve_seed(None, None).unwrap(), 0);
        assert!(resolve_seed(None, Some("fast")).is_err());
    }

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        let (code, _) = run_capture(&["mlnet", "--definitely-not-a-flag"]);
        assert_eq!(code, 1);
        let (code, _) = run_capture(&["mlnet", "estimate"]);
        assert_eq!(code, 1, "missing required --in");
        let (code, _) = run_capture(&["mlnet", "--help"]);
        assert_eq!(code, 0);
    }

    #[test]
    fn missing_input_file_exits_two() {
        let (code, _) = run_capture(&["mlnet", "estimate", "--in", "/nonexistent/net.txt"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn conflicting_threshold_flags_exit_one() {
        let (code, _) = run_capture(&[
            "mlnet",
            "estimate",
            "--in",
            "x.txt",
            "--t-exponent",
            "0.2",
            "--t-const",
            "0.1",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn simulate_estimate_stat_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("gen.cfg");
        fs::write(&cfg, "gen.n = 60\ngen.layers = 6\ngen.ks = 2\ngen.kr = 2\ngen.rho = 0.9\ngen.seed = 11\n")
            .unwrap();
        let edges = dir.path().join("net.edges");

        let (code, out) = run_capture(&[
            "mlnet",
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            edges.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{out}");
        assert_eq!(out.trim(), edges.to_str().unwrap());

        let prefix = dir.path().join("scan").to_str().unwrap().to_string();
        let (code, out) = run_capture(&[
            "mlnet",
            "estimate",
            "--in",
            edges.to_str().unwrap(),
            "--k-cand",
            "3",
            "--seed",
            "5",
            "--out",
            &prefix,
        ]);
        assert_eq!(code, 0, "{out}");
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("threshold-scan "), "{out}");
        assert!(lines[1].starts_with("ratio-scan "), "{out}");
        for line in &lines {
            let fields: Vec<&str> = line.split(' ').collect();
            assert_eq!(fields.len(), 4);
            fields[1].parse::<usize>().unwrap();
            fields[2].parse::<usize>().unwrap();
            assert!(["threshold-crossed", "ratio-peak", "exhausted"].contains(&fields[3]));
        }
        let threshold_trace =
            parse_trace_csv(&PathBuf::from(format!("{prefix}-threshold-trace.csv"))).unwrap();
        let ratio_trace =
            parse_trace_csv(&PathBuf::from(format!("{prefix}-ratio-trace.csv"))).unwrap();
        assert!(!threshold_trace.is_empty());
        assert!(!ratio_trace.is_empty());
        // A strong planted (2, 2) structure should be recovered.
        assert!(lines[0].starts_with("threshold-scan 2 2"), "{out}");

        let (code, out) = run_capture(&[
            "mlnet",
            "stat",
            "--in",
            edges.to_str().unwrap(),
            "--ks",
            "2",
            "--kr",
            "2",
            "--seed",
            "5",
        ]);
        assert_eq!(code, 0, "{out}");
        let t: f64 = out.trim().parse().unwrap();
        assert!(t.is_finite() && t >= -2.0, "{t}");
    }

    #[test]
    fn experiment_subcommand_writes_deterministic_tables() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.cfg");
        fs::write(
            &cfg,
            "exp.kind = stat-behavior\nexp.n_grid = 60\nexp.layers = 4\nexp.true = 2x2\n\
             exp.rho = 0.9\nexp.candidates = 2x2,1x2\nexp.reps = 2\nexp.seed = 3\n",
        )
        .unwrap();
        let mut outputs = Vec::new();
        for sub in ["a", "b"] {
            let out_dir = dir.path().join(sub);
            let (code, out) = run_capture(&[
                "mlnet",
                "experiment",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{out}");
            let paths: Vec<&str> = out.lines().collect();
            assert_eq!(paths.len(), 2);
            let bytes: Vec<Vec<u8>> =
                paths.iter().map(|p| fs::read(p).unwrap()).collect();
            outputs.push(bytes);
        }
        assert_eq!(outputs[0], outputs[1], "rerun with the same seed must be byte-identical");
        let summary = fs::read_to_string(dir.path().join("a/stat-behavior-summary.csv")).unwrap();
        assert!(summary.starts_with("n,k_s,k_r,mean,sd\n"), "{summary}");
        assert_eq!(summary.lines().count(), 3, "{summary}");
    }

    #[test]
    fn experiment_kind_must_be_known() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.cfg");
        fs::write(&cfg, "exp.kind = frobnicate\n").unwrap();
        let (code, _) = run_capture(&[
            "mlnet",
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
    }
}
