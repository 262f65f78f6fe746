use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dcfsim::config::{ScenarioConfig, SweepParam, SweepSpec, SweepValue, PRESETS};
use dcfsim::scenario::{generate_random_scenario, Simulation};
use dcfsim::sweep::{run_sweep, single_row, write_csv};
use dcfsim::trace::{check_invariants, write_trace};
use dcfsim::{Error, Result};

/// 802.11 DCF discrete-event simulator.
#[derive(Parser)]
#[command(name = "dcfsim", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and print per-flow results as CSV.
    Run {
        /// Config file, or the name of a built-in preset.
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Write the event trace here and check it against the MAC invariants.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Output CSV path (default: stdout).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write one CSV row per point.
    Sweep {
        config: String,
        /// Parameter to vary (distance, fading, eifs, seed, rts_threshold);
        /// overrides the config's [sweep] section.
        #[arg(long)]
        param: Option<SweepParam>,
        /// Comma-separated values for --param.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate a random static scenario.
    Gen {
        #[arg(long, default_value_t = 10)]
        nodes: usize,
        /// Area as WIDTHxHEIGHT in meters.
        #[arg(long, default_value = "500x500", value_parser = parse_area)]
        area: (f64, f64),
        #[arg(long, default_value_t = 4)]
        flows: usize,
        /// Must be non-zero.
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a config and print it with every default filled in.
    Validate { config: String },
    /// Print a built-in config (or list them when no name is given).
    Preset { name: Option<String> },
}

fn parse_area(s: &str) -> std::result::Result<(f64, f64), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok((p(w)?, p(h)?))
}

fn load(spec: &str) -> Result<ScenarioConfig> {
    let path = Path::new(spec);
    if path.exists() {
        ScenarioConfig::from_file(path)
    } else if PRESETS.iter().any(|(n, _)| *n == spec) {
        ScenarioConfig::preset(spec)
    } else {
        Err(Error::Config(format!("no such config file or preset: {spec}")))
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn overrides(cfg: &mut ScenarioConfig, seed: Option<u64>, duration: Option<f64>) -> Result<()> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(d) = duration {
        cfg.duration = d;
    }
    cfg.validate()
}

fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Run {
            config,
            seed,
            duration,
            trace,
            out,
        } => {
            let mut cfg = load(&config)?;
            overrides(&mut cfg, seed, duration)?;
            cfg.trace = trace.is_some();
            let result = Simulation::run_config(&cfg)?;
            if let Some(p) = &trace {
                write_trace(BufWriter::new(File::create(p)?), &result.trace)?;
                let violations = check_invariants(&result.trace, &cfg.mac_params());
                for v in &violations {
                    eprintln!("invariant violated: {v}");
                }
                if let Some(v) = violations.first() {
                    return Err(Error::Fault(format!("{} trace violation(s), first: {v}", violations.len())));
                }
            }
            for v in result.metrics.conservation_violations() {
                eprintln!("warning: {v}");
            }
            let n = cfg.flows.len();
            write_csv(output(&out)?, n, &[single_row(&cfg, result.metrics)])
        }
        Cmd::Sweep {
            config,
            param,
            values,
            replications,
            seed,
            duration,
            out,
        } => {
            let mut cfg = load(&config)?;
            overrides(&mut cfg, seed, duration)?;
            let mut spec = match (param, cfg.sweep.clone()) {
                (Some(p), _) => SweepSpec {
                    param: p,
                    values: values.iter().map(|v| SweepValue::parse_token(v)).collect(),
                    replications: 1,
                },
                (None, Some(s)) => s,
                (None, None) => return Err(Error::Config("no [sweep] section and no --param given".into())),
            };
            if param.is_none() && !values.is_empty() {
                spec.values = values.iter().map(|v| SweepValue::parse_token(v)).collect();
            }
            if let Some(r) = replications {
                spec.replications = r;
            }
            let rows = run_sweep(&cfg, &spec)?;
            write_csv(output(&out)?, cfg.flows.len(), &rows)
        }
        Cmd::Gen {
            nodes,
            area,
            flows,
            seed,
            out,
        } => {
            let cfg = generate_random_scenario(nodes, area, flows, seed)?;
            output(&out)?.write_all(cfg.emit().as_bytes())?;
            Ok(())
        }
        Cmd::Validate { config } => {
            let cfg = load(&config)?;
            print!("{}", cfg.emit());
            Ok(())
        }
        Cmd::Preset { name: None } => {
            for (n, _) in PRESETS {
                println!("{n}");
            }
            Ok(())
        }
        Cmd::Preset { name: Some(n) } => {
            let text = PRESETS
                .iter()
                .find(|(p, _)| *p == n)
                .map(|(_, t)| *t)
                .ok_or_else(|| Error::Config(format!("unknown preset '{n}'")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dcfsim: {e}");
            ExitCode::from(if e.is_fault() { 2 } else { 1 })
        }
    }
}
