use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kahler::RadialPotential;
use kahler_cli::config::{ExperimentConfig, ExperimentKind, ToleranceProfile};
use kahler_cli::error::{CliError, Result};
use kahler_cli::run_experiment;

#[derive(Parser)]
#[command(name = "kahler", version, about = "Partition functions, Bergman expansions and energy functionals on CP^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gram determinants and Bergman densities over a k window
    Bergman(Common),
    /// Partition-function sweep and expansion fit
    Partition(Common),
    /// S_j functionals by every route (the k flags select j)
    Functionals(Common),
    /// Holomorphic invariants of the rotation field (the k flags select j)
    Futaki(Common),
    /// T-iteration towards balanced metrics
    Balanced(Common),
    /// Fit a (k, value[, known]) CSV to the expansion in powers of k
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Run the verification suite
    Verify(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory of the run
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    k_stride: Option<usize>,
    /// Complex dimension of CP^n
    #[arg(long)]
    n: Option<usize>,
    /// JSON file with one potential or an array of potentials
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long, value_enum)]
    tol_profile: Option<ToleranceProfile>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
}

fn build(kind: ExperimentKind, c: &Common, samples: Option<PathBuf>) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut inputs = vec![];
    let mut cfg = match &c.config {
        Some(p) => {
            inputs.push(p.clone());
            let cfg: ExperimentConfig = read_json(p)?;
            if cfg.kind != kind {
                return Err(CliError::Config(vec![format!(
                    "kind: config says {}, command is {}",
                    cfg.kind.name(),
                    kind.name()
                )]));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(n) = c.n {
        cfg.n = n;
    }
    if let Some(p) = &c.potential {
        inputs.push(p.clone());
        let v: serde_json::Value = read_json(p)?;
        let parse = |v: serde_json::Value| -> Result<Vec<RadialPotential>> {
            let fail = |e: serde_json::Error| CliError::Config(vec![format!("potential: {e}")]);
            if v.is_array() {
                serde_json::from_value(v).map_err(fail)
            } else {
                Ok(vec![serde_json::from_value(v).map_err(fail)?])
            }
        };
        cfg.potentials = parse(v)?;
        if c.n.is_none() {
            if let Some(first) = cfg.potentials.first() {
                cfg.n = first.n;
            }
        }
    }
    cfg.out = c.out.clone().or(cfg.out);
    cfg.k_min = c.k_min.or(cfg.k_min);
    cfg.k_max = c.k_max.or(cfg.k_max);
    cfg.k_stride = c.k_stride.or(cfg.k_stride);
    if let Some(t) = c.tol_profile {
        cfg.tolerance_profile = t;
    }
    if let Some(s) = samples {
        cfg.samples = Some(s);
    }
    if let Some(s) = &cfg.samples {
        inputs.push(s.clone());
    }
    Ok((cfg, inputs))
}

fn run(cli: Cli) -> Result<()> {
    let (kind, common, samples) = match cli.command {
        Command::Bergman(c) => (ExperimentKind::Bergman, c, None),
        Command::Partition(c) => (ExperimentKind::Partition, c, None),
        Command::Functionals(c) => (ExperimentKind::Functionals, c, None),
        Command::Futaki(c) => (ExperimentKind::Futaki, c, None),
        Command::Balanced(c) => (ExperimentKind::Balanced, c, None),
        Command::Fit { common, samples } => (ExperimentKind::Fit, common, samples),
        Command::Verify(c) => (ExperimentKind::Verify, c, None),
    };
    let (cfg, inputs) = build(kind, &common, samples)?;
    let result = run_experiment(&cfg, &inputs);
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(kind.name()));
    if kind == ExperimentKind::Verify {
        if let Ok(bytes) = std::fs::read(out.join("report.json")) {
            if let Ok(report) = serde_json::from_slice::<serde_json::Value>(&bytes) {
                print_report(&report);
            }
        }
    }
    let manifest = result?;
    println!("{}: {} file(s) in {}", kind.name(), manifest.files.len(), out.display());
    Ok(())
}

fn print_report(report: &serde_json::Value) {
    let Some(criteria) = report["criteria"].as_array() else { return };
    for c in criteria {
        let status = c["status"].as_str().unwrap_or("fail");
        let word = if status == "pass" { "PASS" } else { "FAIL" };
        let note = if status == "known" { " (known deviation)" } else { "" };
        println!("criterion {:>2}: {word}{note}", c["criterion"]);
        for k in c["checks"].as_array().into_iter().flatten() {
            println!(
                "    {:<24} {:>12} {} {}",
                k["name"].as_str().unwrap_or(""),
                k["measured"].as_f64().map(|v| format!("{v:.3e}")).unwrap_or_else(|| "nan".into()),
                k["bound"].as_str().unwrap_or(""),
                k["status"].as_str().unwrap_or("")
            );
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
