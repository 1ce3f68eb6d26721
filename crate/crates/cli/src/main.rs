use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use gauge_ehrenfest::qm::SplitOrder;
use gauge_ehrenfest_cli::{
    catalog_report, dirac_csv, dirac_force, dirac_packet, emit_report, qm_report, run, schrodinger, write_atomic,
    CliError, DiracForceConfig, DiracPacketConfig, Format, GroupChoice, Mode, RunConfig, SchrodingerConfig,
};

#[derive(Parser)]
#[command(name = "gev", version, about = "Check gauge-theory identities and Ehrenfest relations")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify catalog claims symbolically and/or numerically.
    Verify(VerifyArgs),
    /// Run a wave-packet experiment.
    #[command(subcommand)]
    Qm(QmCommand),
    /// Print the claim catalog as JSON.
    ListClaims,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated claim ids (default: all).
    #[arg(value_delimiter = ',')]
    claims: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "both")]
    group: GroupChoice,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "GEV_SEED", default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Count conditional claims as passing.
    #[arg(long)]
    allow_conditional: bool,
    /// Record wall time per claim.
    #[arg(long)]
    timings: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Subcommand)]
enum QmCommand {
    /// Split-step Schrodinger evolution of a Gaussian packet.
    Schrodinger(SchrodingerArgs),
    /// Plane-wave quadrature of a free Dirac packet.
    DiracPacket(DiracPacketArgs),
    /// Dirac packet in a scalar potential.
    DiracForce(DiracForceArgs),
}

#[derive(Args)]
struct SchrodingerArgs {
    /// free, harmonic:OMEGA, quartic:LAMBDA or gaussian-well:V0,SIGMA
    #[arg(long, default_value = "harmonic:1.0")]
    potential: String,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, default_value_t = 40.0)]
    domain: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 6283)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    p0: f64,
    #[arg(long)]
    sigma: Option<f64>,
    /// kdk or dkd
    #[arg(long, default_value = "kdk", value_parser = parse_split)]
    split: SplitOrder,
    /// Skip the half-step rerun.
    #[arg(long)]
    no_convergence: bool,
    /// Write t,x,p,force,norm,r_x,r_p here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct DiracPacketArgs {
    #[arg(long, default_value_t = 801)]
    nodes: usize,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    p0: f64,
    #[arg(long, default_value_t = 0.3)]
    width: f64,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    py: f64,
    #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
    pz: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Four comma-separated weights of the basis spinors.
    #[arg(long, value_delimiter = ',', default_value = "1,0,0,0", allow_hyphen_values = true)]
    weights: Vec<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct DiracForceArgs {
    /// zero, linear:KAPPA or gaussian:PHI0,SIGMA
    #[arg(long, default_value = "linear:0.1")]
    potential: String,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long, default_value_t = 40.0)]
    domain: f64,
    #[arg(long, default_value_t = 2.5e-4)]
    dt: f64,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    charge: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    p0: f64,
    #[arg(long, default_value_t = 1.5)]
    sigma: f64,
    #[arg(long)]
    no_convergence: bool,
    /// Write t,x,p,alpha_x,force,norm here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

fn parse_split(s: &str) -> Result<SplitOrder, String> {
    SplitOrder::parse(s).ok_or_else(|| format!("unknown split order `{s}` (use kdk or dkd)"))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gev: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Command::ListClaims => {
            println!("{}", serde_json::to_string_pretty(&catalog_report()).expect("catalog serializes"));
            Ok(0)
        }
        Command::Verify(a) => {
            let cfg = RunConfig {
                claims: a.claims,
                mode: a.mode,
                group: a.group,
                trials: a.trials,
                seed: a.seed,
                tol: a.tol,
                format: a.out.format,
                output: a.out.output,
                allow_conditional: a.allow_conditional,
                timings: a.timings,
            };
            let (report, status) = run(&cfg)?;
            emit_report(&report, cfg.format, cfg.output.as_deref())?;
            Ok(status as u8)
        }
        Command::Qm(QmCommand::Schrodinger(a)) => {
            let cfg = SchrodingerConfig {
                potential: a.potential,
                grid: a.grid,
                domain: a.domain,
                dt: a.dt,
                steps: a.steps,
                mass: a.mass,
                x0: a.x0,
                p0: a.p0,
                sigma: a.sigma,
                split: a.split,
                convergence: !a.no_convergence,
            };
            let (entry, traj, res) = schrodinger(&cfg)?;
            if let Some(path) = &a.csv {
                let mut buf = Vec::new();
                gauge_ehrenfest::qm::write_trajectory_csv(&mut buf, &traj, &res).expect("in-memory write");
                write_atomic(path, &String::from_utf8(buf).expect("csv is utf-8"))?;
            }
            emit_report(&qm_report(entry, json!(cfg)), a.out.format, a.out.output.as_deref())?;
            Ok(0)
        }
        Command::Qm(QmCommand::DiracPacket(a)) => {
            let weights: [f64; 4] = a
                .weights
                .try_into()
                .map_err(|_| CliError::Config("--weights takes exactly four values".into()))?;
            let cfg = DiracPacketConfig {
                nodes: a.nodes,
                p0: a.p0,
                width: a.width,
                py: a.py,
                pz: a.pz,
                mass: a.mass,
                weights,
            };
            let entry = dirac_packet(&cfg)?;
            emit_report(&qm_report(entry, json!(cfg)), a.out.format, a.out.output.as_deref())?;
            Ok(0)
        }
        Command::Qm(QmCommand::DiracForce(a)) => {
            let cfg = DiracForceConfig {
                potential: a.potential,
                grid: a.grid,
                domain: a.domain,
                dt: a.dt,
                steps: a.steps,
                mass: a.mass,
                charge: a.charge,
                x0: a.x0,
                p0: a.p0,
                sigma: a.sigma,
                convergence: !a.no_convergence,
            };
            let (entry, traj) = dirac_force(&cfg)?;
            if let Some(path) = &a.csv {
                write_atomic(path, &dirac_csv(&traj))?;
            }
            emit_report(&qm_report(entry, json!(cfg)), a.out.format, a.out.output.as_deref())?;
            Ok(0)
        }
    }
}
