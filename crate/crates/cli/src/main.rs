//! Experiment runner: single runs, sweeps, the decoding cross-check and
//! chart rendering.

mod output;
mod plot;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bsnc::{run, sweep, ExperimentSpec, NetworkConfig, Protocol, RunLedger};
use clap::{Args, Parser, Subcommand};

use output::Row;

#[derive(Parser)]
#[command(name = "bsnc", version, about = "Multi-hop network coding simulator")]
struct Cli {
    /// Output directory [default: the experiment file's `output_dir`, then `out`].
    #[arg(long, global = true, env = "BSNC_OUT_DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its metrics row(s).
    Run(RunArgs),
    /// Run the whole sweep of an experiment file, then draw the charts.
    Sweep(RunArgs),
    /// Compare fast decoding against field elimination on random chains.
    Verify(VerifyArgs),
    /// Draw the charts from an existing metrics CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file (flat key/value TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one protocol.
    #[arg(long)]
    protocol: Option<Protocol>,
    /// Horizon in slots.
    #[arg(long)]
    slots: Option<u64>,
    /// Carry real coefficients and cross-check decoding.
    #[arg(long)]
    verify: bool,
    /// Write per-slot traces.
    #[arg(long)]
    traces: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Chain length including source and destination.
    #[arg(long, default_value_t = 3)]
    nodes: usize,
    #[arg(long, default_value_t = 500)]
    slots: u64,
    /// Random chains; each runs every coded protocol.
    #[arg(long, default_value_t = 8)]
    instances: u64,
    /// Seed for drawing the chains.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    protocol: Option<Protocol>,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSV [default: <out>/metrics.csv].
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>, spec: Option<&ExperimentSpec>) -> Result<PathBuf> {
    let dir = flag
        .or_else(|| spec.and_then(|s| s.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn load_spec(path: Option<&Path>) -> Result<Option<ExperimentSpec>> {
    path.map(|p| {
        ExperimentSpec::from_path(p).with_context(|| format!("bad experiment file {}", p.display()))
    })
    .transpose()
}

/// Apply the command-line overrides to the base network.
fn base_network(spec: Option<&ExperimentSpec>, args: &RunArgs) -> Result<NetworkConfig> {
    let mut cfg = spec.map_or_else(|| NetworkConfig::six_node(0.4), |s| s.network.clone());
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(slots) = args.slots {
        cfg.horizon = slots;
        cfg.delivery_window = cfg.delivery_window.min((slots / 5).max(1));
    }
    if let Err(errs) = cfg.validate() {
        let msgs: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        bail!("invalid network: {}", msgs.join("; "));
    }
    Ok(cfg)
}

fn protocol_list(spec: Option<&ExperimentSpec>, args: &RunArgs) -> Result<Vec<Protocol>> {
    let ps = match (args.protocol, spec) {
        (Some(p), _) => vec![p],
        (None, Some(s)) => s.protocols.clone(),
        (None, None) => Protocol::ALL.to_vec(),
    };
    if ps.is_empty() {
        bail!("protocol list is empty");
    }
    Ok(ps)
}

fn emit(
    dir: &Path,
    name: &str,
    param: &str,
    hops: usize,
    runs: &[(Option<f64>, RunLedger)],
    traces: bool,
) -> Result<PathBuf> {
    let rows: Vec<Row> = runs.iter().map(|(v, l)| Row::from_ledger(l, *v)).collect();
    let path = dir.join(name);
    output::write_csv(&path, param, hops, &rows)?;
    if traces {
        for (v, l) in runs {
            output::write_trace(dir, l, *v)?;
        }
    }
    Ok(path)
}

fn cmd_run(out: Option<PathBuf>, args: RunArgs) -> Result<()> {
    let spec = load_spec(args.spec.as_deref())?;
    let cfg = base_network(spec.as_ref(), &args)?;
    let dir = out_dir(out, spec.as_ref())?;
    let traces = args.traces || spec.as_ref().is_some_and(|s| s.emit_traces);
    let verify = args.verify || spec.as_ref().is_some_and(|s| s.verification_mode);
    let mut runs = Vec::new();
    for p in protocol_list(spec.as_ref(), &args)? {
        let ledger = if verify {
            bsnc::engine::run_verified(&cfg, p)?
        } else {
            run(&cfg, p)?
        };
        runs.push((None, ledger));
    }
    let path = emit(&dir, "run.csv", "none", cfg.hops(), &runs, traces)?;
    println!("{cfg}");
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_sweep(out: Option<PathBuf>, args: RunArgs) -> Result<()> {
    let spec = load_spec(args.spec.as_deref())?.context("sweep needs --spec")?;
    let base = base_network(Some(&spec), &args)?;
    let dir = out_dir(out, Some(&spec))?;
    let protocols = protocol_list(Some(&spec), &args)?;
    let verify = args.verify || spec.verification_mode;
    let traces = args.traces || spec.emit_traces;
    let (param, runs) = match &spec.sweep_parameter {
        Some(param) => {
            let res = sweep(
                &base,
                param,
                &spec.sweep_values,
                &protocols,
                spec.seeds,
                verify,
            )?;
            (
                param.clone(),
                res.into_iter()
                    .map(|r| (Some(r.value), r.ledger))
                    .collect::<Vec<_>>(),
            )
        }
        None => {
            let mut runs = Vec::new();
            for &p in &protocols {
                for k in 0..spec.seeds {
                    let mut cfg = base.clone();
                    cfg.seed = base.seed.wrapping_add(k);
                    let l = if verify {
                        bsnc::engine::run_verified(&cfg, p)?
                    } else {
                        run(&cfg, p)?
                    };
                    runs.push((None, l));
                }
            }
            ("none".to_string(), runs)
        }
    };
    let path = emit(&dir, "metrics.csv", &param, base.hops(), &runs, traces)?;
    println!("{} runs, wrote {}", runs.len(), path.display());
    drop(runs);
    for p in plot::plot(&output::read_csv(&path)?, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_verify(out: Option<PathBuf>, args: VerifyArgs) -> Result<bool> {
    if args.nodes < 2 {
        bail!("--nodes must be at least 2");
    }
    let dir = out_dir(out, None)?;
    let protocols = match args.protocol {
        Some(p) if !p.is_coded() => bail!("{p} carries no coefficients to verify"),
        Some(p) => vec![p],
        None => Protocol::ALL.into_iter().filter(|p| p.is_coded()).collect(),
    };
    let opts = verify::Options {
        nodes: args.nodes,
        slots: args.slots,
        instances: args.instances,
        seed: args.seed,
        protocols,
    };
    let path = dir.join("verify.csv");
    let s = verify::run(&opts, &path)?;
    println!(
        "{} runs: {} of {} decode opportunities disagree (rate {:.2e}, agreement {:.6})",
        s.runs,
        s.disagreements,
        s.opportunities,
        s.rate(),
        1.0 - s.rate()
    );
    println!(
        "{} disagreement episodes, {} without a preceding rank event; {} payload mismatches",
        s.episodes, s.unattributed, s.payload_mismatches
    );
    println!("wrote {}", path.display());
    Ok(s.passed())
}

fn cmd_plot(out: Option<PathBuf>, args: PlotArgs) -> Result<()> {
    let dir = out_dir(out, None)?;
    let csv = args.csv.unwrap_or_else(|| dir.join("metrics.csv"));
    for p in plot::plot(&output::read_csv(&csv)?, &dir)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(cli.out, a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(cli.out, a).map(|_| true),
        Command::Verify(a) => cmd_verify(cli.out, a),
        Command::Plot(a) => cmd_plot(cli.out, a).map(|_| true),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: verification criteria not met");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
