//! snowlab: experiment runner for snowflake embeddings and metric
//! invariants. Each verb is an experiment strategy looked up by name in the
//! registry; `run --config` selects one purely at runtime.

mod experiments;
mod params;
mod report;
mod sweep;

use clap::{Args, Parser, Subcommand};
use experiments::Registry;
use params::Params;
use report::{CliError, ExperimentConfig, Report};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "snowlab",
    version,
    about = "Snowflake-embedding constructions and metric invariants at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Experiment config JSON; entries in the file override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random choice the experiment makes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero the wall-time field so reports are byte-identical across runs.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the scalar frame bounds of the tent-function embedding on
    /// seeded random pairs.
    SnowflakeVerify {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long = "min-gap")]
        min_gap: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        pairs: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify the coordinate-wise sequence embedding bounds on seeded
    /// random sparse pairs.
    EmbedSeqVerify {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long = "min-gap")]
        min_gap: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        pairs: Option<u64>,
        #[arg(long)]
        support: Option<u64>,
        #[arg(long)]
        span: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the oscillatory kernel identity and the step-function isometry.
    MnCheck {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        pairs: Option<u64>,
        #[arg(long)]
        cells: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Exhaustive roundness scan of a distance matrix.
    Roundness {
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        pcap: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        grid: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Enflo-type scan over cube dimensions with an examination budget.
    Enflo {
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long)]
        nmax: Option<u64>,
        #[arg(long)]
        pcap: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        grid: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify the per-witness critical-exponent scaling law under
    /// snowflaking.
    ScalingCheck {
        #[arg(long)]
        matrix: Option<String>,
        /// Snowflake exponents, e.g. 0.5,0.25
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        pcap: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        grid: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify the exactness of the sign-indicator embedding on seeded
    /// random step functions.
    IndicatorCheck {
        #[arg(long)]
        pairs: Option<u64>,
        #[arg(long)]
        cells: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sharp two-sided Lipschitz constants of a point map.
    Distortion {
        #[arg(long)]
        matrix: Option<String>,
        /// Optional explicit target matrix file.
        #[arg(long)]
        target: Option<String>,
        /// Snowflake the source by this exponent to form the target.
        #[arg(long)]
        s: Option<String>,
        /// Comma-separated image indices; identity when omitted.
        #[arg(long)]
        map: Option<String>,
        /// Optional moduli thresholds, e.g. 0.5,1,2
        #[arg(long)]
        thresholds: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run an experiment described entirely by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        deterministic: bool,
    },
    /// Run one experiment per axis value and stream a CSV table.
    Sweep {
        /// Experiment verb to sweep.
        #[arg(long)]
        verb: String,
        /// Parameter name to vary.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values.
        #[arg(long)]
        values: String,
        /// Fixed parameters as key=value, repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    init_thread_pool();
    // Usage errors are input errors (exit 1); exit 2 is reserved for "an
    // inequality the tool checks was violated".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = dispatch(cli.cmd);
    std::process::exit(code);
}

/// SNOWLAB_THREADS caps internal parallelism; unset means rayon's default.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("SNOWLAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn dispatch(cmd: Cmd) -> i32 {
    match build_config(cmd) {
        Ok(Invocation::Experiment {
            config,
            deterministic,
        }) => match execute(&config, deterministic) {
            Ok(violation) => {
                if violation {
                    2
                } else {
                    0
                }
            }
            Err(e) => {
                eprintln!("{}", e.to_json());
                1
            }
        },
        Ok(Invocation::Sweep {
            verb,
            axis,
            values,
            base,
            seed,
            out,
        }) => {
            let registry = Registry::builtin();
            match sweep::run_sweep(&registry, &verb, &axis, &values, base, seed) {
                Ok(result) => {
                    let written = match out {
                        Some(path) => std::fs::write(path, &result.csv).map_err(CliError::from),
                        None => {
                            print!("{}", result.csv);
                            Ok(())
                        }
                    };
                    match written {
                        Ok(()) => {
                            if result.violation {
                                2
                            } else {
                                0
                            }
                        }
                        Err(e) => {
                            eprintln!("{}", e.to_json());
                            1
                        }
                    }
                }
                Err(e) => {
                    eprintln!("{}", e.to_json());
                    1
                }
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

enum Invocation {
    Experiment {
        config: ExperimentConfig,
        deterministic: bool,
    },
    Sweep {
        verb: String,
        axis: String,
        values: Vec<String>,
        base: BTreeMap<String, Value>,
        seed: u64,
        out: Option<PathBuf>,
    },
}

fn execute(config: &ExperimentConfig, deterministic: bool) -> Result<bool, CliError> {
    let registry = Registry::builtin();
    let exp = registry.get(&config.verb)?;
    let started = Instant::now();
    let outcome = exp.run(&Params::new(config.params.clone()), config.seed)?;
    let wall_time_ms = if deterministic {
        0
    } else {
        started.elapsed().as_millis() as u64
    };
    let report = Report {
        config_echo: config.clone(),
        results: outcome.results,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &config.out_path {
        Some(path) => std::fs::write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(outcome.violation)
}

/// Assemble the experiment config from flags, then let a --config file
/// override whatever it specifies.
fn finish(
    verb: &str,
    flags: BTreeMap<String, Value>,
    common: CommonArgs,
) -> Result<Invocation, CliError> {
    let mut config = ExperimentConfig {
        verb: verb.to_string(),
        params: flags,
        seed: common.seed,
        out_path: common.out.map(|p| p.display().to_string()),
    };
    if let Some(path) = common.config {
        let text = std::fs::read_to_string(&path)?;
        let file: ExperimentConfig = serde_json::from_str(&text)?;
        if file.verb != config.verb {
            return Err(CliError::invalid_params(format!(
                "config file is for verb {:?}, invoked as {:?}",
                file.verb, config.verb
            )));
        }
        for (k, v) in file.params {
            config.params.insert(k, v);
        }
        config.seed = file.seed;
        if file.out_path.is_some() {
            config.out_path = file.out_path;
        }
    }
    Ok(Invocation::Experiment {
        config,
        deterministic: common.deterministic,
    })
}

fn insert_opt<T: Into<Value>>(map: &mut BTreeMap<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v.into());
    }
}

fn build_config(cmd: Cmd) -> Result<Invocation, CliError> {
    match cmd {
        Cmd::SnowflakeVerify {
            p,
            q,
            radius,
            min_gap,
            eps,
            pairs,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "p", p);
            insert_opt(&mut m, "q", q);
            insert_opt(&mut m, "radius", radius);
            insert_opt(&mut m, "min_gap", min_gap);
            insert_opt(&mut m, "eps", eps);
            insert_opt(&mut m, "pairs", pairs);
            finish("snowflake-verify", m, common)
        }
        Cmd::EmbedSeqVerify {
            p,
            q,
            radius,
            min_gap,
            eps,
            pairs,
            support,
            span,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "p", p);
            insert_opt(&mut m, "q", q);
            insert_opt(&mut m, "radius", radius);
            insert_opt(&mut m, "min_gap", min_gap);
            insert_opt(&mut m, "eps", eps);
            insert_opt(&mut m, "pairs", pairs);
            insert_opt(&mut m, "support", support);
            insert_opt(&mut m, "span", span);
            finish("embed-seq-verify", m, common)
        }
        Cmd::MnCheck {
            p,
            q,
            tol,
            pairs,
            cells,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "p", p);
            insert_opt(&mut m, "q", q);
            insert_opt(&mut m, "tol", tol);
            insert_opt(&mut m, "pairs", pairs);
            insert_opt(&mut m, "cells", cells);
            finish("mn-check", m, common)
        }
        Cmd::Roundness {
            matrix,
            pcap,
            tol,
            grid,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "matrix", matrix);
            insert_opt(&mut m, "pcap", pcap);
            insert_opt(&mut m, "tol", tol);
            insert_opt(&mut m, "grid", grid);
            finish("roundness", m, common)
        }
        Cmd::Enflo {
            matrix,
            nmax,
            pcap,
            tol,
            grid,
            budget,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "matrix", matrix);
            insert_opt(&mut m, "nmax", nmax);
            insert_opt(&mut m, "pcap", pcap);
            insert_opt(&mut m, "tol", tol);
            insert_opt(&mut m, "grid", grid);
            insert_opt(&mut m, "budget", budget);
            finish("enflo", m, common)
        }
        Cmd::ScalingCheck {
            matrix,
            s,
            pcap,
            tol,
            grid,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "matrix", matrix);
            insert_opt(&mut m, "s", s);
            insert_opt(&mut m, "pcap", pcap);
            insert_opt(&mut m, "tol", tol);
            insert_opt(&mut m, "grid", grid);
            finish("scaling-check", m, common)
        }
        Cmd::IndicatorCheck {
            pairs,
            cells,
            tol,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "pairs", pairs);
            insert_opt(&mut m, "cells", cells);
            insert_opt(&mut m, "tol", tol);
            finish("indicator-check", m, common)
        }
        Cmd::Distortion {
            matrix,
            target,
            s,
            map,
            thresholds,
            common,
        } => {
            let mut m = BTreeMap::new();
            insert_opt(&mut m, "matrix", matrix);
            insert_opt(&mut m, "target", target);
            insert_opt(&mut m, "s", s);
            insert_opt(&mut m, "map", map);
            insert_opt(&mut m, "thresholds", thresholds);
            finish("distortion", m, common)
        }
        Cmd::Run {
            config,
            out,
            deterministic,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let mut file: ExperimentConfig = serde_json::from_str(&text)?;
            if let Some(out) = out {
                file.out_path = Some(out.display().to_string());
            }
            Ok(Invocation::Experiment {
                config: file,
                deterministic,
            })
        }
        Cmd::Sweep {
            verb,
            axis,
            values,
            set,
            seed,
            out,
        } => {
            let mut base = BTreeMap::new();
            for kv in set {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    CliError::invalid_params(format!("--set expects key=value, got {kv:?}"))
                })?;
                base.insert(k.trim().to_string(), sweep::parse_value(v));
            }
            let values = values
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            Ok(Invocation::Sweep {
                verb,
                axis,
                values,
                base,
                seed,
                out,
            })
        }
    }
}
