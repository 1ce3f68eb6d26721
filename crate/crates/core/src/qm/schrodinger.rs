use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::QmError;

/// Real potential with analytic derivative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Free,
    /// `m w^2 x^2 / 2`.
    Harmonic { omega: f64 },
    /// `lambda x^4`.
    Quartic { lambda: f64 },
    /// `-v0 exp(-x^2 / (2 sigma^2))`.
    GaussianWell { v0: f64, sigma: f64 },
}

impl PotentialSpec {
    /// `free`, `harmonic:W`, `quartic:L` or `gaussian-well:V0,SIGMA`.
    pub fn parse(s: &str) -> Result<PotentialSpec, QmError> {
        let bad = || QmError::Potential(s.to_string());
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        match (kind, nums.as_slice()) {
            ("free", []) => Ok(PotentialSpec::Free),
            ("harmonic", [w]) => Ok(PotentialSpec::Harmonic { omega: *w }),
            ("quartic", [l]) => Ok(PotentialSpec::Quartic { lambda: *l }),
            ("gaussian-well", [v, s]) if *s > 0.0 => Ok(PotentialSpec::GaussianWell { v0: *v, sigma: *s }),
            _ => Err(bad()),
        }
    }

    pub fn value(&self, x: f64, mass: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
            PotentialSpec::Quartic { lambda } => lambda * x.powi(4),
            PotentialSpec::GaussianWell { v0, sigma } => -v0 * (-x * x / (2.0 * sigma * sigma)).exp(),
        }
    }

    pub fn derivative(&self, x: f64, mass: f64) -> f64 {
        match *self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega } => mass * omega * omega * x,
            PotentialSpec::Quartic { lambda } => 4.0 * lambda * x.powi(3),
            PotentialSpec::GaussianWell { v0, sigma } => {
                v0 * x / (sigma * sigma) * (-x * x / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// Uniform periodic grid on `[-L/2, L/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub n: usize,
    pub length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Grid, QmError> {
        if n < 8 || !n.is_power_of_two() || length <= 0.0 {
            return Err(QmError::Grid(n, length));
        }
        Ok(Grid { n, length })
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn k(&self, j: usize) -> f64 {
        let m = if j < self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
        2.0 * PI * m / self.length
    }
}

#[derive(Clone, Debug)]
pub struct GridWaveFunction {
    pub grid: Grid,
    pub mass: f64,
    pub psi: Vec<Complex64>,
}

impl GridWaveFunction {
    /// Normalized Gaussian packet centred at `x0` with mean momentum `p0`
    /// and position spread `sigma`.
    pub fn gaussian(grid: Grid, mass: f64, x0: f64, p0: f64, sigma: f64) -> GridWaveFunction {
        let psi = (0..grid.n)
            .map(|j| {
                let x = grid.x(j);
                let a = -(x - x0).powi(2) / (4.0 * sigma * sigma);
                Complex64::from_polar(a.exp(), p0 * x)
            })
            .collect();
        let mut w = GridWaveFunction { grid, mass, psi };
        w.normalize();
        w
    }

    /// Harmonic-oscillator ground state displaced to `x0`.
    pub fn coherent(grid: Grid, mass: f64, omega: f64, x0: f64) -> GridWaveFunction {
        GridWaveFunction::gaussian(grid, mass, x0, 0.0, (0.5 / (mass * omega)).sqrt())
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let s = self.norm().sqrt();
        for z in &mut self.psi {
            *z /= s;
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitOrder {
    /// Half drift, full kick, half drift.
    DriftKickDrift,
    /// Half kick, full drift, half kick.
    #[default]
    KickDriftKick,
}

impl SplitOrder {
    pub fn parse(s: &str) -> Option<SplitOrder> {
        match s {
            "dkd" | "drift-kick-drift" => Some(SplitOrder::DriftKickDrift),
            "kdk" | "kick-drift-kick" => Some(SplitOrder::KickDriftKick),
            _ => None,
        }
    }
}

/// Expectation values after every step, including the initial state.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// `<-V'(x)>`.
    pub force: Vec<f64>,
    pub norm: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

pub(super) struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    pub(super) fn new(n: usize) -> Spectral {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Spectral {
            fwd,
            inv,
            scratch: vec![Complex64::default(); len],
        }
    }

    fn forward(&mut self, v: &mut [Complex64]) {
        self.fwd.process_with_scratch(v, &mut self.scratch);
    }

    /// Inverse transform, including the `1/n` factor.
    fn inverse(&mut self, v: &mut [Complex64]) {
        self.inv.process_with_scratch(v, &mut self.scratch);
        let s = 1.0 / v.len() as f64;
        for z in v {
            *z *= s;
        }
    }
}

/// `<p>` of a grid function by spectral differentiation.
pub fn spectral_momentum(grid: &Grid, psi: &[Complex64]) -> f64 {
    momentum_with(&mut Spectral::new(grid.n), grid, psi)
}

pub(super) fn momentum_with(sp: &mut Spectral, grid: &Grid, psi: &[Complex64]) -> f64 {
    let mut phi = psi.to_vec();
    sp.forward(&mut phi);
    momentum_from_spectrum(grid, &phi)
}

fn momentum_from_spectrum(grid: &Grid, phi: &[Complex64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, z) in phi.iter().enumerate() {
        num += grid.k(j) * z.norm_sqr();
        den += z.norm_sqr();
    }
    num / den
}

/// Strang-split spectral evolution of `i dpsi/dt = -psi''/(2m) + V psi`.
pub fn evolve_schrodinger(
    psi0: &GridWaveFunction,
    v: &PotentialSpec,
    dt: f64,
    steps: usize,
    order: SplitOrder,
) -> Result<Trajectory, QmError> {
    let grid = psi0.grid;
    let m = psi0.mass;
    let n0 = psi0.norm();
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(QmError::NotNormalized(n0));
    }
    let dx = grid.dx();
    let xs: Vec<f64> = (0..grid.n).map(|j| grid.x(j)).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| v.value(x, m)).collect();
    let dvs: Vec<f64> = xs.iter().map(|&x| v.derivative(x, m)).collect();
    let (kick, drift_half) = {
        let kick: Vec<Complex64> = vs.iter().map(|&u| Complex64::from_polar(1.0, -u * dt)).collect();
        let kick_half: Vec<Complex64> = vs.iter().map(|&u| Complex64::from_polar(1.0, -u * dt / 2.0)).collect();
        let drift = |tau: f64| -> Vec<Complex64> {
            (0..grid.n)
                .map(|j| Complex64::from_polar(1.0, -grid.k(j).powi(2) / (2.0 * m) * tau))
                .collect()
        };
        match order {
            SplitOrder::DriftKickDrift => ((kick, None), drift(dt / 2.0)),
            SplitOrder::KickDriftKick => ((kick_half, Some(drift(dt))), Vec::new()),
        }
    };
    let mut sp = Spectral::new(grid.n);
    let mut psi = psi0.psi.clone();
    let mut phi = psi.clone();
    sp.forward(&mut phi);
    let mut traj = Trajectory {
        dt,
        ..Default::default()
    };
    let record = |step: usize, psi: &[Complex64], phi: &[Complex64], traj: &mut Trajectory| -> Result<(), QmError> {
        let mut norm = 0.0;
        let mut x = 0.0;
        let mut f = 0.0;
        for j in 0..grid.n {
            let r = psi[j].norm_sqr() * dx;
            norm += r;
            x += xs[j] * r;
            f -= dvs[j] * r;
        }
        let p = momentum_from_spectrum(&grid, phi);
        if !(norm.is_finite() && x.is_finite() && p.is_finite()) {
            return Err(QmError::Diverged(step));
        }
        traj.t.push(step as f64 * dt);
        traj.x.push(x / norm);
        traj.p.push(p);
        traj.force.push(f / norm);
        traj.norm.push(norm);
        Ok(())
    };
    record(0, &psi, &phi, &mut traj)?;
    let mul = |v: &mut [Complex64], w: &[Complex64]| v.iter_mut().zip(w).for_each(|(a, b)| *a *= b);
    for step in 1..=steps {
        match &kick {
            (k, None) => {
                // phi holds the transform of psi.
                mul(&mut phi, &drift_half);
                sp.inverse(&mut phi);
                psi.copy_from_slice(&phi);
                mul(&mut psi, k);
                phi.copy_from_slice(&psi);
                sp.forward(&mut phi);
                mul(&mut phi, &drift_half);
                psi.copy_from_slice(&phi);
                sp.inverse(&mut psi);
            }
            (kh, Some(d)) => {
                mul(&mut psi, kh);
                phi.copy_from_slice(&psi);
                sp.forward(&mut phi);
                mul(&mut phi, d);
                sp.inverse(&mut phi);
                psi.copy_from_slice(&phi);
                mul(&mut psi, kh);
                phi.copy_from_slice(&psi);
                sp.forward(&mut phi);
            }
        }
        record(step, &psi, &phi, &mut traj)?;
    }
    Ok(traj)
}

/// Centred-difference Ehrenfest residuals at the interior samples.
#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    #[serde(skip)]
    pub r_x: Vec<f64>,
    #[serde(skip)]
    pub r_p: Vec<f64>,
    pub max_r_x: f64,
    pub max_r_p: f64,
}

/// `r_x = d<x>/dt - <p>/m`, `r_p = d<p>/dt - <-V'>`; entry `k` belongs to sample `k + 1`.
pub fn ehrenfest_residuals(traj: &Trajectory, mass: f64) -> Result<Residuals, QmError> {
    let n = traj.len();
    if n < 5 {
        return Err(QmError::TooShort(n));
    }
    let h = 2.0 * traj.dt;
    let r_x: Vec<f64> = (1..n - 1).map(|k| (traj.x[k + 1] - traj.x[k - 1]) / h - traj.p[k] / mass).collect();
    let r_p: Vec<f64> = (1..n - 1).map(|k| (traj.p[k + 1] - traj.p[k - 1]) / h - traj.force[k]).collect();
    let max = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    Ok(Residuals {
        max_r_x: max(&r_x),
        max_r_p: max(&r_p),
        r_x,
        r_p,
    })
}

/// CSV with columns `t,x,p,force,norm,r_x,r_p`; residual cells are empty at the endpoints.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory, res: &Residuals) -> std::io::Result<()> {
    writeln!(w, "t,x,p,force,norm,r_x,r_p")?;
    let n = traj.len();
    for k in 0..n {
        let (rx, rp) = if k > 0 && k + 1 < n {
            (format!("{:e}", res.r_x[k - 1]), format!("{:e}", res.r_p[k - 1]))
        } else {
            (String::new(), String::new())
        };
        writeln!(
            w,
            "{:e},{:e},{:e},{:e},{:e},{rx},{rp}",
            traj.t[k], traj.x[k], traj.p[k], traj.force[k], traj.norm[k]
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SchrodingerReport {
    pub grid: Grid,
    pub mass: f64,
    pub potential: PotentialSpec,
    pub dt: f64,
    pub steps: usize,
    pub split: SplitOrder,
    pub max_r_x: f64,
    pub max_r_p: f64,
    pub max_norm_drift: f64,
    /// Residual ratio between a run at `dt` and one at `dt/2` over the same span.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_r_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_r_p: Option<f64>,
}

/// Run once at `dt` and, when `convergence` is set, again at `dt/2`.
pub fn schrodinger_experiment(
    psi0: &GridWaveFunction,
    v: &PotentialSpec,
    dt: f64,
    steps: usize,
    order: SplitOrder,
    convergence: bool,
) -> Result<(Trajectory, Residuals, SchrodingerReport), QmError> {
    let traj = evolve_schrodinger(psi0, v, dt, steps, order)?;
    let res = ehrenfest_residuals(&traj, psi0.mass)?;
    let drift = traj.norm.iter().fold(0.0f64, |a, n| a.max((n - 1.0).abs()));
    let mut report = SchrodingerReport {
        grid: psi0.grid,
        mass: psi0.mass,
        potential: *v,
        dt,
        steps,
        split: order,
        max_r_x: res.max_r_x,
        max_r_p: res.max_r_p,
        max_norm_drift: drift,
        ratio_r_x: None,
        ratio_r_p: None,
    };
    if convergence {
        let fine = evolve_schrodinger(psi0, v, dt / 2.0, steps * 2, order)?;
        let fr = ehrenfest_residuals(&fine, psi0.mass)?;
        report.ratio_r_x = Some(res.max_r_x / fr.max_r_x);
        report.ratio_r_p = Some(res.max_r_p / fr.max_r_p);
    }
    Ok((traj, res, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potentials_parse() {
        assert_eq!(PotentialSpec::parse("harmonic:1.5").unwrap(), PotentialSpec::Harmonic { omega: 1.5 });
        assert_eq!(
            PotentialSpec::parse("gaussian-well:2,0.5").unwrap(),
            PotentialSpec::GaussianWell { v0: 2.0, sigma: 0.5 }
        );
        assert!(PotentialSpec::parse("harmonic").is_err());
        assert!(PotentialSpec::parse("cubic:1").is_err());
        let v = PotentialSpec::GaussianWell { v0: 1.3, sigma: 0.7 };
        let h = 1e-6;
        let fd = (v.value(0.4 + h, 1.0) - v.value(0.4 - h, 1.0)) / (2.0 * h);
        assert!((fd - v.derivative(0.4, 1.0)).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Grid::new(1000, 40.0).is_err());
        let g = Grid::new(64, 20.0).unwrap();
        let mut w = GridWaveFunction::gaussian(g, 1.0, 0.0, 0.0, 1.0);
        w.psi[0] += Complex64::new(1.0, 0.0);
        assert!(matches!(
            evolve_schrodinger(&w, &PotentialSpec::Free, 1e-3, 3, SplitOrder::default()),
            Err(QmError::NotNormalized(_))
        ));
        let w = GridWaveFunction::gaussian(g, 1.0, 0.0, 0.0, 1.0);
        let t = evolve_schrodinger(&w, &PotentialSpec::Free, 1e-3, 2, SplitOrder::default()).unwrap();
        assert!(matches!(ehrenfest_residuals(&t, 1.0), Err(QmError::TooShort(3))));
    }

    #[test]
    fn free_packet() {
        let g = Grid::new(512, 40.0).unwrap();
        let w = GridWaveFunction::gaussian(g, 1.0, -3.0, 1.0, 1.0);
        let t = evolve_schrodinger(&w, &PotentialSpec::Free, 1e-3, 400, SplitOrder::default()).unwrap();
        assert_eq!(t.len(), 401);
        let r = ehrenfest_residuals(&t, 1.0).unwrap();
        assert!(r.max_r_x < 1e-8, "{}", r.max_r_x);
        assert!(r.max_r_p < 1e-12, "{}", r.max_r_p);
        assert!(t.p.iter().all(|p| (p - t.p[0]).abs() < 1e-12));
    }

    #[test]
    fn quartic_unitarity() {
        let g = Grid::new(256, 20.0).unwrap();
        let w = GridWaveFunction::gaussian(g, 1.0, 1.0, 0.0, 0.7);
        let t = evolve_schrodinger(&w, &PotentialSpec::Quartic { lambda: 0.1 }, 1e-3, 10_000, SplitOrder::default()).unwrap();
        let drift = t.norm.iter().fold(0.0f64, |a, n| a.max((n - 1.0).abs()));
        assert!(drift < 1e-10, "{drift}");
    }

    #[test]
    fn csv_layout() {
        let g = Grid::new(64, 20.0).unwrap();
        let w = GridWaveFunction::coherent(g, 1.0, 1.0, 1.0);
        let t = evolve_schrodinger(&w, &PotentialSpec::Harmonic { omega: 1.0 }, 1e-2, 6, SplitOrder::default()).unwrap();
        let r = ehrenfest_residuals(&t, 1.0).unwrap();
        let mut out = Vec::new();
        write_trajectory_csv(&mut out, &t, &r).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "t,x,p,force,norm,r_x,r_p");
        assert!(lines[1].ends_with(",,"));
        assert!(!lines[2].ends_with(','));
    }
}
