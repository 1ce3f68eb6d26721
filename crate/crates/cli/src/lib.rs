//! Claim selection, experiment orchestration and report emission for `gev`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use gauge_ehrenfest::jet::{GroupName, JetError};
use gauge_ehrenfest::qm::{self, QmError};
use gauge_ehrenfest::suite::{self, ClaimStatus, SuiteError, VerificationResult};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Suite(#[from] SuiteError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error("cannot write `{0}`: {1}")]
    Io(PathBuf, std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Symbolic,
    Numeric,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GroupChoice {
    Su2,
    Su3,
    Both,
}

impl GroupChoice {
    pub fn groups(self) -> Vec<GroupName> {
        match self {
            GroupChoice::Su2 => vec![GroupName::Su2],
            GroupChoice::Su3 => vec![GroupName::Su3],
            GroupChoice::Both => vec![GroupName::Su2, GroupName::Su3],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

/// Settings of a `verify` run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    /// Claim ids; empty means the whole catalog.
    pub claims: Vec<String>,
    pub mode: Mode,
    pub group: GroupChoice,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub format: Format,
    /// Not serialized, so that the report does not depend on where it is written.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub allow_conditional: bool,
    /// Record wall time per claim (makes reports non-reproducible).
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            claims: Vec::new(),
            mode: Mode::Both,
            group: GroupChoice::Both,
            trials: 100,
            seed: 42,
            tol: 1e-10,
            format: Format::Text,
            output: None,
            allow_conditional: false,
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Config("tol must be positive".into()));
        }
        for id in &self.claims {
            if !suite::CLAIM_IDS.contains(&id.as_str()) {
                return Err(SuiteError::UnknownClaim(id.clone()).into());
            }
        }
        Ok(())
    }

    fn selected(&self) -> Vec<&'static str> {
        suite::CLAIM_IDS
            .into_iter()
            .filter(|id| self.claims.is_empty() || self.claims.iter().any(|c| c == id))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QmEntry {
    pub experiment: String,
    pub params: Value,
    pub max_residuals: Value,
    pub convergence_ratios: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub version: u32,
    pub config: Value,
    pub claims: Vec<VerificationResult>,
    pub qm: Vec<QmEntry>,
}

fn run_one(id: &str, cfg: &RunConfig) -> Result<VerificationResult, CliError> {
    let start = Instant::now();
    let mut r = suite::verify_claim(id)?;
    if cfg.mode != Mode::Symbolic {
        if cfg.mode == Mode::Numeric {
            // The symbolic derivation only supplies the targets here.
            r.status = if r.status == ClaimStatus::Conditional {
                ClaimStatus::Conditional
            } else {
                ClaimStatus::Verified
            };
        }
        let groups: Vec<_> = cfg.group.groups().into_iter().map(GroupName::data).collect();
        suite::cross_check(&mut r, &groups, cfg.trials, cfg.seed, cfg.tol)?;
    }
    if cfg.timings {
        r.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(r)
}

/// Exit status as a pure function of the statuses and the conditional flag.
pub fn exit_status(results: &[VerificationResult], allow_conditional: bool) -> i32 {
    let ok = results.iter().all(|r| match r.status {
        ClaimStatus::Verified => true,
        ClaimStatus::Conditional => allow_conditional,
        ClaimStatus::Failed => false,
    });
    if ok {
        0
    } else {
        1
    }
}

/// Verify the selected claims concurrently; results come back in catalog order.
pub fn run(cfg: &RunConfig) -> Result<(Report, i32), CliError> {
    cfg.validate()?;
    let ids = cfg.selected();
    let claims: Vec<VerificationResult> = ids.par_iter().map(|id| run_one(id, cfg)).collect::<Result<_, _>>()?;
    let status = exit_status(&claims, cfg.allow_conditional);
    let report = Report {
        version: REPORT_VERSION,
        config: serde_json::to_value(cfg).expect("config serializes"),
        claims,
        qm: Vec::new(),
    };
    Ok((report, status))
}

fn fmt_num(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    if !report.claims.is_empty() {
        writeln!(s, "{:<6} {:<30} {:<12} {:<19} numeric", "claim", "anchor", "status", "certificate").unwrap();
        for r in &report.claims {
            let status = serde_json::to_value(r.status).unwrap();
            let kind = serde_json::to_value(r.certificate.kind).unwrap();
            let numeric: Vec<String> = r
                .numeric
                .iter()
                .map(|n| format!("{} {}", n.group, fmt_num(n.max_residual)))
                .collect();
            writeln!(
                s,
                "{:<6} {:<30} {:<12} {:<19} {}",
                r.id,
                r.anchor,
                status.as_str().unwrap_or_default(),
                kind.as_str().unwrap_or_default(),
                numeric.join(", ")
            )
            .unwrap();
            for a in &r.assumptions {
                writeln!(s, "       assumes: {a}").unwrap();
            }
        }
    }
    for q in &report.qm {
        writeln!(s, "{}", q.experiment).unwrap();
        for (label, v) in [("residuals", &q.max_residuals), ("ratios", &q.convergence_ratios)] {
            if let Value::Object(m) = v {
                for (k, x) in m {
                    let shown = x.as_f64().map(fmt_num).unwrap_or_else(|| x.to_string());
                    writeln!(s, "  {label:<10} {k:<28} {shown}").unwrap();
                }
            }
        }
    }
    s
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => render_text(report),
    }
}

/// Write `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(path.to_path_buf(), e);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Render and write the report, or print it when no path is given.
pub fn emit_report(report: &Report, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let text = render(report, format);
    match path {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn catalog_report() -> Value {
    json!({ "version": REPORT_VERSION, "claims": suite::list_claims() })
}

/// Parameters of the Schrodinger experiment.
#[derive(Clone, Debug, Serialize)]
pub struct SchrodingerConfig {
    pub potential: String,
    pub grid: usize,
    pub domain: f64,
    pub dt: f64,
    pub steps: usize,
    pub mass: f64,
    pub x0: f64,
    pub p0: f64,
    /// Packet spread; `None` picks the oscillator ground-state width for
    /// harmonic potentials and 1 otherwise.
    pub sigma: Option<f64>,
    pub split: qm::SplitOrder,
    pub convergence: bool,
}

impl Default for SchrodingerConfig {
    fn default() -> Self {
        SchrodingerConfig {
            potential: "harmonic:1.0".into(),
            grid: 1024,
            domain: 40.0,
            dt: 1e-3,
            steps: 6283,
            mass: 1.0,
            x0: 1.0,
            p0: 0.0,
            sigma: None,
            split: qm::SplitOrder::default(),
            convergence: true,
        }
    }
}

pub fn schrodinger(cfg: &SchrodingerConfig) -> Result<(QmEntry, qm::Trajectory, qm::Residuals), CliError> {
    let v = qm::PotentialSpec::parse(&cfg.potential)?;
    let grid = qm::Grid::new(cfg.grid, cfg.domain)?;
    let sigma = match (cfg.sigma, v) {
        (Some(s), _) => s,
        (None, qm::PotentialSpec::Harmonic { omega }) => (0.5 / (cfg.mass * omega)).sqrt(),
        (None, _) => 1.0,
    };
    let psi = qm::GridWaveFunction::gaussian(grid, cfg.mass, cfg.x0, cfg.p0, sigma);
    let (traj, res, rep) = qm::schrodinger_experiment(&psi, &v, cfg.dt, cfg.steps, cfg.split, cfg.convergence)?;
    let entry = QmEntry {
        experiment: "schrodinger".into(),
        params: json!({ "config": cfg, "sigma": sigma, "hbar": 1.0 }),
        max_residuals: json!({ "r_x": rep.max_r_x, "r_p": rep.max_r_p, "norm_drift": rep.max_norm_drift }),
        convergence_ratios: json!({ "r_x": rep.ratio_r_x, "r_p": rep.ratio_r_p }),
    };
    Ok((entry, traj, res))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracPacketConfig {
    pub nodes: usize,
    pub p0: f64,
    pub width: f64,
    pub py: f64,
    pub pz: f64,
    pub mass: f64,
    /// Relative weights of `A_1 .. A_4`.
    pub weights: [f64; 4],
}

impl Default for DiracPacketConfig {
    fn default() -> Self {
        DiracPacketConfig {
            nodes: 801,
            p0: 0.5,
            width: 0.3,
            py: 0.3,
            pz: -0.2,
            mass: 1.0,
            weights: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

pub fn dirac_packet(cfg: &DiracPacketConfig) -> Result<QmEntry, CliError> {
    if cfg.nodes < 2 || !(cfg.mass > 0.0) || !(cfg.width > 0.0) {
        return Err(CliError::Config("dirac-packet needs nodes >= 2, mass > 0 and width > 0".into()));
    }
    let w = cfg.weights.map(|x| qm::Complex64::new(x, 0.0));
    let amps = qm::MomentumAmplitudes::gaussian(cfg.nodes, cfg.p0, cfg.width, cfg.py, cfg.pz, cfg.mass, w);
    let r = qm::dirac_wavepacket_check(&amps);
    Ok(QmEntry {
        experiment: "dirac-packet".into(),
        params: json!({ "config": cfg, "hbar": 1.0, "c": 1.0 }),
        max_residuals: json!({
            "normalization": r.max_normalization_error,
            "norm_quadrature": (r.positive.norm_spinor - r.positive.norm_closed).abs(),
            "alpha_quadrature": (r.positive.alpha_spinor - r.positive.alpha_closed).abs(),
            "alpha_cross_terms": r.positive.alpha_cross.abs(),
            "negative_norm_quadrature": (r.negative.norm_spinor - r.negative.norm_closed).abs(),
            "negative_alpha_quadrature": (r.negative.alpha_spinor - r.negative.alpha_closed).abs(),
            "velocity_vs_momentum": (r.velocity / r.momentum_over_mass - 1.0).abs(),
        }),
        convergence_ratios: json!({}),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracForceConfig {
    pub potential: String,
    pub grid: usize,
    pub domain: f64,
    pub dt: f64,
    pub steps: usize,
    pub mass: f64,
    pub charge: f64,
    pub x0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub convergence: bool,
}

impl Default for DiracForceConfig {
    fn default() -> Self {
        DiracForceConfig {
            potential: "linear:0.1".into(),
            grid: 1024,
            domain: 40.0,
            dt: 2.5e-4,
            steps: 400,
            mass: 1.0,
            charge: 1.0,
            x0: 0.0,
            p0: 0.5,
            sigma: 1.5,
            convergence: true,
        }
    }
}

pub fn dirac_force(cfg: &DiracForceConfig) -> Result<(QmEntry, qm::DiracTrajectory), CliError> {
    let phi = qm::ScalarPotential::parse(&cfg.potential)?;
    let grid = qm::Grid::new(cfg.grid, cfg.domain)?;
    let st = qm::DiracGridState::gaussian(grid, cfg.mass, cfg.charge, phi, cfg.x0, cfg.p0, cfg.sigma);
    let (traj, r) = qm::dirac_force_check(&st, cfg.dt, cfg.steps, cfg.convergence)?;
    let entry = QmEntry {
        experiment: "dirac-force".into(),
        params: json!({ "config": cfg, "hbar": 1.0, "c": 1.0 }),
        max_residuals: json!({
            "force": r.max_force_residual,
            "velocity": r.max_velocity_residual,
            "norm_drift": r.max_norm_drift,
        }),
        convergence_ratios: json!({ "force": r.ratio_force_residual }),
    };
    Ok((entry, traj))
}

/// CSV with columns `t,x,p,alpha_x,force,norm`.
pub fn dirac_csv(t: &qm::DiracTrajectory) -> String {
    let mut s = String::from("t,x,p,alpha_x,force,norm\n");
    for k in 0..t.t.len() {
        writeln!(s, "{:e},{:e},{:e},{:e},{:e},{:e}", t.t[k], t.x[k], t.p[k], t.alpha_x[k], t.force[k], t.norm[k]).unwrap();
    }
    s
}

pub fn qm_report(entry: QmEntry, config: Value) -> Report {
    Report {
        version: REPORT_VERSION,
        config,
        claims: Vec::new(),
        qm: vec![entry],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_status_follows_statuses() {
        let mut r = suite::verify_claim("AB1").unwrap();
        assert_eq!(exit_status(std::slice::from_ref(&r), false), 0);
        r.status = ClaimStatus::Conditional;
        assert_eq!(exit_status(std::slice::from_ref(&r), false), 1);
        assert_eq!(exit_status(std::slice::from_ref(&r), true), 0);
        r.status = ClaimStatus::Failed;
        assert_eq!(exit_status(&[r], true), 1);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.tol = 0.0;
        assert!(c.validate().is_err());
        c = RunConfig { claims: vec!["NA16".into()], ..RunConfig::default() };
        assert!(c.validate().is_err());
    }
}
