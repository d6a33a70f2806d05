//! `meshtube` command line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meshtube::certify::{certify_all, Certificate, CertificateBundle, INFORMATIONAL};
use meshtube::config::{load_config, load_gains, GainSource, RunConfig};
use meshtube::control::GainSet;
use meshtube::output::{emit_outputs, write_json};
use meshtube::sim::{compare_models, run_scenario};
use meshtube::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CERTIFICATE: u8 = 2;
const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "meshtube", version, about = "Tube-based voltage control for AC microgrids")]
struct Cli {
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `sim.out_dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Disturbance seed, overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Simulate even if certification fails.
    #[arg(long, global = true)]
    allow_uncertified: bool,
    /// Gain set written by `design`; replaces the gains section of the config.
    #[arg(long, global = true)]
    gains: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design gains and check the design conditions.
    Design,
    /// Certify a gain set against the configured network and references.
    Certify {
        /// Print the certificate bundle as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Run the closed loop and write trajectory, report and plot data.
    Simulate {
        /// Also run the full line model and write `comparison.json`.
        #[arg(long)]
        compare: bool,
    },
    /// Compare the reduced model against the full line model.
    Compare,
}

enum Failure {
    Usage(String),
    Certificate(String),
    Divergence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence { .. } => Failure::Divergence(e.to_string()),
            Error::Config(_) | Error::Io { .. } | Error::Json(_) | Error::TimeGrid(_) => Failure::Usage(e.to_string()),
            Error::SelfLoop { .. } | Error::NodeOutOfRange { .. } | Error::NonInductiveLine { .. } => {
                Failure::Usage(e.to_string())
            }
            Error::Dimension { .. } | Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Certificate(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Certificate(msg)) => {
            eprintln!("certification failed: {msg}");
            ExitCode::from(EXIT_CERTIFICATE)
        }
        Err(Failure::Divergence(msg)) => {
            eprintln!("divergence: {msg}");
            ExitCode::from(EXIT_DIVERGENCE)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let mut cfg = load_config(path)?;
    apply_overrides(cli, &mut cfg)?;
    match &cli.command {
        Command::Design => design(&cfg),
        Command::Certify { json } => certify(&cfg, *json),
        Command::Simulate { compare } => simulate(&cfg, *compare || cfg.compare),
        Command::Compare => compare(&cfg),
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) -> Outcome {
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.disturbance.seed = seed;
    }
    if let Some(dt) = cli.dt {
        cfg.sim.dt = dt;
    }
    if let Some(t) = cli.t_end {
        cfg.sim.t_end = t;
    }
    if cli.allow_uncertified {
        cfg.allow_uncertified = true;
    }
    if let Some(g) = &cli.gains {
        let gains = load_gains(g)?;
        gains.validate(cfg.network.n())?;
        cfg.gains = GainSource::Explicit(gains);
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Outcome {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))
}

fn print_table(certs: &[Certificate]) {
    println!("{:<36} {:<6} {:>14}  witness", "certificate", "status", "margin");
    fn walk(c: &Certificate, depth: usize) {
        let name = format!("{}{}", "  ".repeat(depth), c.name);
        let status = match (c.pass, depth == 0 && INFORMATIONAL.contains(&c.name.as_str())) {
            (_, true) => "info",
            (true, false) => "pass",
            (false, false) => "FAIL",
        };
        let witness = c
            .witness
            .as_ref()
            .map(|w| {
                let mut parts: Vec<String> = Vec::new();
                if let Some(node) = w.node {
                    parts.push(format!("node {}", node + 1));
                }
                parts.extend(w.values.iter().map(|(k, v)| format!("{k}={v:.4e}")));
                if let Some(note) = &w.note {
                    parts.push(note.clone());
                }
                parts.join(", ")
            })
            .unwrap_or_default();
        println!("{name:<36} {status:<6} {:>14.6e}  {witness}", c.margin);
        for s in &c.sub {
            walk(s, depth + 1);
        }
    }
    for c in certs {
        walk(c, 0);
    }
}

fn first_failure(certs: &[Certificate]) -> String {
    certs
        .iter()
        .filter(|c| !c.pass && !INFORMATIONAL.contains(&c.name.as_str()))
        .map(|c| format!("{} (margin {:e})", c.name, c.margin))
        .collect::<Vec<_>>()
        .join(", ")
}

fn design(cfg: &RunConfig) -> Outcome {
    let GainSource::Auto(_) = &cfg.gains else {
        return Err(Failure::Usage("design needs `gains.auto` in the configuration".into()));
    };
    let (gains, outcome) = cfg.resolve_gains()?;
    let outcome = outcome.expect("auto mode yields a design outcome");
    create_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("design.json"), &outcome)?;
    print_table(&outcome.certificates);
    for (i, (e, n)) in outcome.error_gain.iter().zip(&outcome.nominal).enumerate() {
        println!(
            "node {}: K = {:.4} (beta max {:.4} at z_d = {:.3}), K_d = {:.4}, M = {:.4}",
            i + 1,
            e.k,
            e.beta_max,
            e.z_at_max,
            n.k_d,
            n.m
        );
    }
    match gains {
        Some(g) => {
            write_json(&cfg.out_dir.join("gains.json"), &g)?;
            println!("wrote {}", cfg.out_dir.join("gains.json").display());
            Ok(())
        }
        None => Err(Failure::Certificate(format!(
            "design infeasible: {}",
            first_failure(&outcome.certificates)
        ))),
    }
}

fn gains_for(cfg: &RunConfig) -> Result<GainSet, Failure> {
    match cfg.resolve_gains()? {
        (Some(g), _) => Ok(g),
        (None, Some(outcome)) => Err(Failure::Certificate(format!(
            "design infeasible: {}",
            first_failure(&outcome.certificates)
        ))),
        (None, None) => unreachable!("explicit gains are always present"),
    }
}

fn run_certification(cfg: &RunConfig, gains: &GainSet) -> Result<CertificateBundle, Failure> {
    Ok(certify_all(&cfg.network, gains, &cfg.schedule, &cfg.certify)?)
}

fn certify(cfg: &RunConfig, json: bool) -> Outcome {
    let gains = gains_for(cfg)?;
    let bundle = run_certification(cfg, &gains)?;
    create_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("certificates.json"), &bundle)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&bundle).map_err(Error::from)?);
    } else {
        print_table(&bundle.certificates);
    }
    if bundle.pass {
        Ok(())
    } else {
        Err(Failure::Certificate(first_failure(&bundle.certificates)))
    }
}

fn simulate(cfg: &RunConfig, with_compare: bool) -> Outcome {
    let gains = gains_for(cfg)?;
    create_dir(&cfg.out_dir)?;
    let bundle = run_certification(cfg, &gains)?;
    write_json(&cfg.out_dir.join("certificates.json"), &bundle)?;
    if !bundle.pass {
        if cfg.allow_uncertified {
            eprintln!("warning: simulating uncertified gains: {}", first_failure(&bundle.certificates));
        } else {
            return Err(Failure::Certificate(format!(
                "{} (use --allow-uncertified to simulate anyway)",
                first_failure(&bundle.certificates)
            )));
        }
    }
    let scenario = cfg.scenario(gains);
    let (traj, report) = match run_scenario(&scenario) {
        Ok(r) => r,
        Err(e @ Error::Divergence { .. }) => {
            if let Error::Divergence { t, last_state } = &e {
                let dump = serde_json::json!({ "t": t, "last_state": last_state });
                write_json(&cfg.out_dir.join("divergence.json"), &dump)?;
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let files = emit_outputs(&traj, &report, &scenario.net.model, &cfg.out_dir)?;
    println!(
        "{} steps, {} constraint violations, {} safe-set exits, min barrier {:.6}",
        report.steps,
        report.constraint_violations.count,
        report.safe_set_exits,
        report.min_barrier.iter().copied().fold(f64::INFINITY, f64::min)
    );
    if with_compare {
        let cmp = compare_models(&scenario)?;
        write_json(&cfg.out_dir.join("comparison.json"), &cmp)?;
    }
    println!("wrote {} files to {}", files.len(), cfg.out_dir.display());
    if report.constraint_violations.count > 0 || report.safe_set_exits > 0 {
        return Err(Failure::Certificate("trajectory left the safe set".into()));
    }
    Ok(())
}

fn compare(cfg: &RunConfig) -> Outcome {
    let gains = gains_for(cfg)?;
    let cmp = compare_models(&cfg.scenario(gains))?;
    create_dir(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("comparison.json"), &cmp)?;
    for (i, (s, t)) in cmp
        .steady_state_discrepancy
        .iter()
        .zip(&cmp.transient_max_discrepancy)
        .enumerate()
    {
        println!("node {}: final |v_full - v_reduced| = {s:.4e} V, max {t:.4e} V", i + 1);
    }
    println!(
        "line current gap (exact vs Laplacian) {:.4e} A, line drift {:.4e} A",
        cmp.laplacian_current_gap, cmp.line_state_drift
    );
    Ok(())
}
