use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use super::schrodinger::{momentum_with, Grid, Spectral};
use super::QmError;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Dirac-representation `alpha_x`, `alpha_y`, `alpha_z` and `beta`.
pub fn dirac_matrices() -> ([Matrix4<C>; 3], Matrix4<C>) {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let sigma = [[[z, o], [o, z]], [[z, -i], [i, z]], [[o, z], [z, -o]]];
    let alpha = sigma.map(|s| {
        let mut m = Matrix4::zeros();
        for r in 0..2 {
            for k in 0..2 {
                m[(r, k + 2)] = s[r][k];
                m[(r + 2, k)] = s[r][k];
            }
        }
        m
    });
    let beta = Matrix4::from_diagonal(&Vector4::new(o, o, -o, -o));
    (alpha, beta)
}

/// Plane-wave spinor `i` (1..=4) at momentum `p`, with `E = +sqrt(p^2 + m^2)`.
/// Spinors 1, 2 carry `exp(-ipx)`, spinors 3, 4 carry `exp(+ipx)`.
pub fn spinor(i: usize, p: [f64; 3], m: f64) -> Vector4<C> {
    let e = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + m * m).sqrt();
    let n = ((e + m) / (2.0 * m)).sqrt();
    let k = e + m;
    let pz = c(p[2] / k, 0.0);
    let pp = c(p[0] / k, p[1] / k);
    let pm = c(p[0] / k, -p[1] / k);
    let o = c(1.0, 0.0);
    let z = c(0.0, 0.0);
    let v = match i {
        1 => Vector4::new(o, z, pz, pp),
        2 => Vector4::new(z, o, pm, -pz),
        3 => Vector4::new(pz, pp, o, z),
        4 => Vector4::new(pm, -pz, z, o),
        _ => panic!("spinor index {i} out of range"),
    };
    v * c(n, 0.0)
}

/// Amplitudes `A_i(p)` on a uniform `p_x` grid at fixed `p_y`, `p_z`.
#[derive(Clone, Debug)]
pub struct MomentumAmplitudes {
    pub px: Vec<f64>,
    pub py: f64,
    pub pz: f64,
    pub mass: f64,
    /// `A_1 .. A_4` per node.
    pub a: Vec<[C; 4]>,
}

impl MomentumAmplitudes {
    /// Gaussian profiles `exp(-(px - p0)^2 / (4 s^2))` scaled per spinor by
    /// `weights`, on `n` nodes spanning `p0 +- 10 s`.
    pub fn gaussian(n: usize, p0: f64, s: f64, py: f64, pz: f64, mass: f64, weights: [C; 4]) -> MomentumAmplitudes {
        let lo = p0 - 10.0 * s;
        let h = 20.0 * s / (n - 1) as f64;
        let px: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
        let a = px
            .iter()
            .map(|&p| {
                let g = (-(p - p0).powi(2) / (4.0 * s * s)).exp();
                weights.map(|w| w * g)
            })
            .collect();
        MomentumAmplitudes { px, py, pz, mass, a }
    }

    fn weight(&self) -> f64 {
        if self.px.len() > 1 {
            self.px[1] - self.px[0]
        } else {
            1.0
        }
    }

    fn energy(&self, k: usize) -> f64 {
        (self.px[k].powi(2) + self.py.powi(2) + self.pz.powi(2) + self.mass.powi(2)).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PacketSums {
    /// `sum_ij int A_i* A_j u_i^dag u_j`.
    pub norm_spinor: f64,
    /// `int (E/m)(|A_i|^2 + |A_j|^2)`.
    pub norm_closed: f64,
    /// `sum_ij int A_i* A_j u_i^dag alpha_x u_j`.
    pub alpha_spinor: f64,
    /// `int (p_x/m)(|A_i|^2 + |A_j|^2)`.
    pub alpha_closed: f64,
    /// Off-diagonal (`i != j`) part of `alpha_spinor`.
    pub alpha_cross: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracPacketReport {
    pub nodes: usize,
    pub mass: f64,
    pub py: f64,
    pub pz: f64,
    /// Largest nodewise `|u_i^dag u_j - (E/m) delta_ij|` over all four spinors,
    /// mixed-energy pairs compared at equal physical momentum.
    pub max_normalization_error: f64,
    pub positive: PacketSums,
    pub negative: PacketSums,
    /// `<alpha_x> / <1>` for the positive-energy packet.
    pub velocity: f64,
    /// `<p_x>/m` with density `(E/m)(|A_1|^2 + |A_2|^2)`.
    pub momentum_over_mass: f64,
}

fn sums(amps: &MomentumAmplitudes, pair: [usize; 2], alpha_x: &Matrix4<C>) -> PacketSums {
    let w = amps.weight();
    let m = amps.mass;
    let mut s = PacketSums {
        norm_spinor: 0.0,
        norm_closed: 0.0,
        alpha_spinor: 0.0,
        alpha_closed: 0.0,
        alpha_cross: 0.0,
    };
    for (k, a) in amps.a.iter().enumerate() {
        let p = [amps.px[k], amps.py, amps.pz];
        let e = amps.energy(k);
        let u = pair.map(|i| spinor(i, p, m));
        let amp = pair.map(|i| a[i - 1]);
        let dens: f64 = amp.iter().map(|z| z.norm_sqr()).sum();
        s.norm_closed += w * e / m * dens;
        s.alpha_closed += w * p[0] / m * dens;
        for i in 0..2 {
            for j in 0..2 {
                let ai = amp[i].conj() * amp[j];
                let n = (u[i].adjoint() * u[j])[(0, 0)];
                let al = (u[i].adjoint() * alpha_x * u[j])[(0, 0)];
                s.norm_spinor += w * (ai * n).re;
                s.alpha_spinor += w * (ai * al).re;
                if i != j {
                    s.alpha_cross += w * (ai * al).re;
                }
            }
        }
    }
    s
}

/// Check the spinor normalization nodewise and compare the norm and
/// `alpha_x` quadratures of a packet against their closed forms.
pub fn dirac_wavepacket_check(amps: &MomentumAmplitudes) -> DiracPacketReport {
    let (alpha, _) = dirac_matrices();
    let m = amps.mass;
    let mut worst: f64 = 0.0;
    for k in 0..amps.px.len() {
        let p = [amps.px[k], amps.py, amps.pz];
        let e = amps.energy(k);
        let u: Vec<Vector4<C>> = (1..=4).map(|i| spinor(i, p, m)).collect();
        // exp(+ipx) spinors at label -p share the physical momentum of the
        // exp(-ipx) spinors at p.
        let v: Vec<Vector4<C>> = (3..=4).map(|i| spinor(i, p.map(|x| -x), m)).collect();
        for i in 0..4 {
            for j in 0..4 {
                let (l, r) = match (i < 2, j < 2) {
                    (true, false) => (&u[i], &v[j - 2]),
                    (false, true) => (&v[i - 2], &u[j]),
                    _ => (&u[i], &u[j]),
                };
                let g = (l.adjoint() * r)[(0, 0)];
                let want = if i == j { e / m } else { 0.0 };
                worst = worst.max((g - c(want, 0.0)).norm());
            }
        }
    }
    let positive = sums(amps, [1, 2], &alpha[0]);
    let negative = sums(amps, [3, 4], &alpha[0]);
    let w = amps.weight();
    let (mut pm, mut norm) = (0.0, 0.0);
    for (k, a) in amps.a.iter().enumerate() {
        let rho = amps.energy(k) / m * (a[0].norm_sqr() + a[1].norm_sqr()) * w;
        pm += amps.px[k] * rho;
        norm += rho;
    }
    DiracPacketReport {
        nodes: amps.px.len(),
        mass: m,
        py: amps.py,
        pz: amps.pz,
        max_normalization_error: worst,
        velocity: positive.alpha_spinor / positive.norm_spinor,
        momentum_over_mass: pm / norm / m,
        positive,
        negative,
    }
}

/// Scalar potential of the force-law experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalarPotential {
    Zero,
    /// `kappa x`.
    Linear { kappa: f64 },
    /// `phi0 exp(-x^2 / (2 sigma^2))`.
    Gaussian { phi0: f64, sigma: f64 },
}

impl ScalarPotential {
    pub fn parse(s: &str) -> Result<ScalarPotential, QmError> {
        let bad = || QmError::Potential(s.to_string());
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?
        };
        match (kind, nums.as_slice()) {
            ("zero", []) => Ok(ScalarPotential::Zero),
            ("linear", [k]) => Ok(ScalarPotential::Linear { kappa: *k }),
            ("gaussian", [p, s]) if *s > 0.0 => Ok(ScalarPotential::Gaussian { phi0: *p, sigma: *s }),
            _ => Err(bad()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            ScalarPotential::Zero => 0.0,
            ScalarPotential::Linear { kappa } => kappa * x,
            ScalarPotential::Gaussian { phi0, sigma } => phi0 * (-x * x / (2.0 * sigma * sigma)).exp(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            ScalarPotential::Zero => 0.0,
            ScalarPotential::Linear { kappa } => kappa,
            ScalarPotential::Gaussian { phi0, sigma } => -phi0 * x / (sigma * sigma) * (-x * x / (2.0 * sigma * sigma)).exp(),
        }
    }
}

/// Four-component wave function on a 1D grid, evolved under
/// `H = alpha_x p + beta m - e phi(x)`.
#[derive(Clone, Debug)]
pub struct DiracGridState {
    pub grid: Grid,
    pub mass: f64,
    pub charge: f64,
    pub phi: ScalarPotential,
    pub psi: Vec<Vector4<C>>,
}

impl DiracGridState {
    /// Positive-energy, spin-up Gaussian packet: the `u^(1)` spinor at `p0`
    /// times a Gaussian envelope of spread `sigma` centred at `x0`.
    pub fn gaussian(grid: Grid, mass: f64, charge: f64, phi: ScalarPotential, x0: f64, p0: f64, sigma: f64) -> Self {
        let u = spinor(1, [p0, 0.0, 0.0], mass);
        let psi = (0..grid.n)
            .map(|j| {
                let x = grid.x(j);
                let env = Complex64::from_polar((-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp(), p0 * x);
                u * env
            })
            .collect();
        let mut s = DiracGridState {
            grid,
            mass,
            charge,
            phi,
            psi,
        };
        let n = s.norm().sqrt();
        for v in &mut s.psi {
            *v /= c(n, 0.0);
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|v| v.norm_squared()).sum::<f64>() * self.grid.dx()
    }
}

/// Solve a block tridiagonal system `lower_j x_{j-1} + diag_j x_j + upper_j x_{j+1} = rhs_j`
/// with constant off-diagonal blocks.
fn block_thomas(
    diag: &[Matrix4<C>],
    lower: &Matrix4<C>,
    upper: &Matrix4<C>,
    rhs: &[Vector4<C>],
) -> Result<Vec<Vector4<C>>, QmError> {
    let n = diag.len();
    let mut cp: Vec<Matrix4<C>> = Vec::with_capacity(n);
    let mut dp: Vec<Vector4<C>> = Vec::with_capacity(n);
    for j in 0..n {
        let (m, r) = if j == 0 {
            (diag[0], rhs[0])
        } else {
            (diag[j] - lower * cp[j - 1], rhs[j] - lower * dp[j - 1])
        };
        let inv = m.try_inverse().ok_or(QmError::Singular(j))?;
        cp.push(inv * upper);
        dp.push(inv * r);
    }
    let mut x = dp;
    for j in (0..n - 1).rev() {
        let next = x[j + 1];
        x[j] -= cp[j] * next;
    }
    Ok(x)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct DiracTrajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub alpha_x: Vec<f64>,
    /// `<-d(-e phi)/dx>`.
    pub force: Vec<f64>,
    pub norm: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracForceReport {
    pub grid: Grid,
    pub mass: f64,
    pub charge: f64,
    pub potential: ScalarPotential,
    pub dt: f64,
    pub steps: usize,
    /// `max |d<p>/dt - <-d(-e phi)/dx>|`.
    pub max_force_residual: f64,
    /// `max |d<x>/dt - <alpha_x>|`.
    pub max_velocity_residual: f64,
    pub max_norm_drift: f64,
    pub p_initial: f64,
    pub p_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_force_residual: Option<f64>,
}

/// Crank-Nicolson evolution with central differences for `p` and Dirichlet
/// walls. `<p>` is measured spectrally.
pub fn evolve_dirac(state: &DiracGridState, dt: f64, steps: usize) -> Result<DiracTrajectory, QmError> {
    let grid = state.grid;
    let dx = grid.dx();
    let (alpha, beta) = dirac_matrices();
    let ax = alpha[0];
    let xs: Vec<f64> = (0..grid.n).map(|j| grid.x(j)).collect();
    let tau = c(0.0, dt / 2.0);
    // H psi_j = -i ax (psi_{j+1} - psi_{j-1}) / (2 dx) + (beta m - e phi_j) psi_j
    let h_up = ax * c(0.0, -1.0 / (2.0 * dx));
    let h_lo = -h_up;
    let h_diag: Vec<Matrix4<C>> = xs
        .iter()
        .map(|&x| beta * c(state.mass, 0.0) - Matrix4::identity() * c(state.charge * state.phi.value(x), 0.0))
        .collect();
    let one = Matrix4::<C>::identity();
    let lhs_diag: Vec<Matrix4<C>> = h_diag.iter().map(|h| one + h * tau).collect();
    let lhs_up = h_up * tau;
    let lhs_lo = h_lo * tau;
    let force_density: Vec<f64> = xs.iter().map(|&x| state.charge * state.phi.derivative(x)).collect();

    let mut psi = state.psi.clone();
    let mut traj = DiracTrajectory {
        dt,
        ..Default::default()
    };
    let mut sp = Spectral::new(grid.n);
    let mut record = |step: usize, psi: &[Vector4<C>], traj: &mut DiracTrajectory| -> Result<(), QmError> {
        let mut norm = 0.0;
        let mut x = 0.0;
        let mut f = 0.0;
        let mut a = 0.0;
        for j in 0..grid.n {
            let r = psi[j].norm_squared() * dx;
            norm += r;
            x += xs[j] * r;
            f += force_density[j] * r;
            a += (psi[j].adjoint() * ax * psi[j])[(0, 0)].re * dx;
        }
        let mut p = 0.0;
        let mut comp = vec![C::default(); grid.n];
        for s in 0..4 {
            for j in 0..grid.n {
                comp[j] = psi[j][s];
            }
            let w: f64 = comp.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
            if w > 0.0 {
                p += momentum_with(&mut sp, &grid, &comp) * w;
            }
        }
        if !(norm.is_finite() && x.is_finite() && p.is_finite()) {
            return Err(QmError::Diverged(step));
        }
        traj.t.push(step as f64 * dt);
        traj.x.push(x / norm);
        traj.p.push(p / norm);
        traj.alpha_x.push(a / norm);
        traj.force.push(f / norm);
        traj.norm.push(norm);
        Ok(())
    };
    record(0, &psi, &mut traj)?;
    let n = grid.n;
    for step in 1..=steps {
        let rhs: Vec<Vector4<C>> = (0..n)
            .map(|j| {
                let mut h = h_diag[j] * psi[j];
                if j + 1 < n {
                    h += h_up * psi[j + 1];
                }
                if j > 0 {
                    h += h_lo * psi[j - 1];
                }
                psi[j] - h * tau
            })
            .collect();
        psi = block_thomas(&lhs_diag, &lhs_lo, &lhs_up, &rhs)?;
        record(step, &psi, &mut traj)?;
    }
    Ok(traj)
}

fn force_residual(traj: &DiracTrajectory) -> Result<(f64, f64), QmError> {
    let n = traj.t.len();
    if n < 5 {
        return Err(QmError::TooShort(n));
    }
    let h = 2.0 * traj.dt;
    let mut rf: f64 = 0.0;
    let mut rv: f64 = 0.0;
    for k in 1..n - 1 {
        rf = rf.max(((traj.p[k + 1] - traj.p[k - 1]) / h - traj.force[k]).abs());
        rv = rv.max(((traj.x[k + 1] - traj.x[k - 1]) / h - traj.alpha_x[k]).abs());
    }
    Ok((rf, rv))
}

/// Evolve and compare `d<p>/dt` with `<-d(-e phi)/dx>`; with `convergence`,
/// also rerun at `dt/2` and report the residual ratio.
pub fn dirac_force_check(
    state: &DiracGridState,
    dt: f64,
    steps: usize,
    convergence: bool,
) -> Result<(DiracTrajectory, DiracForceReport), QmError> {
    let traj = evolve_dirac(state, dt, steps)?;
    let (rf, rv) = force_residual(&traj)?;
    let n0 = traj.norm[0];
    let drift = traj.norm.iter().fold(0.0f64, |a, n| a.max((n - n0).abs()));
    let ratio = if convergence {
        let fine = evolve_dirac(state, dt / 2.0, steps * 2)?;
        Some(rf / force_residual(&fine)?.0)
    } else {
        None
    };
    let report = DiracForceReport {
        grid: state.grid,
        mass: state.mass,
        charge: state.charge,
        potential: state.phi,
        dt,
        steps,
        max_force_residual: rf,
        max_velocity_residual: rv,
        max_norm_drift: drift,
        p_initial: traj.p[0],
        p_final: *traj.p.last().expect("nonempty"),
        ratio_force_residual: ratio,
    };
    Ok((traj, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> C {
        c(1.0, 0.0)
    }

    #[test]
    fn matrices_anticommute() {
        let (alpha, beta) = dirac_matrices();
        let id = Matrix4::<C>::identity();
        for a in &alpha {
            assert_eq!(a * a, id);
            assert_eq!(a * beta + beta * a, Matrix4::zeros());
        }
        assert_eq!(alpha[0] * alpha[1] + alpha[1] * alpha[0], Matrix4::zeros());
    }

    #[test]
    fn single_spinor_packet() {
        let z = c(0.0, 0.0);
        let a = MomentumAmplitudes::gaussian(401, 0.5, 0.3, 0.3, -0.2, 1.0, [one(), z, z, z]);
        let r = dirac_wavepacket_check(&a);
        assert!(r.max_normalization_error < 1e-13);
        assert!((r.positive.alpha_spinor - r.positive.alpha_closed).abs() < 1e-12);
        assert!((r.positive.norm_spinor - r.positive.norm_closed).abs() < 1e-12);
    }

    #[test]
    fn cross_terms_vanish() {
        let a = MomentumAmplitudes::gaussian(401, -0.4, 0.5, 0.7, 0.1, 2.0, [one(), one(), c(0.5, 0.5), c(0.0, -1.0)]);
        let r = dirac_wavepacket_check(&a);
        assert!(r.positive.alpha_cross.abs() < 1e-12);
        assert!(r.negative.alpha_cross.abs() < 1e-12);
        assert!((r.negative.norm_spinor - r.negative.norm_closed).abs() < 1e-12);
    }

    #[test]
    fn non_relativistic_limit() {
        let z = c(0.0, 0.0);
        let a = MomentumAmplitudes::gaussian(801, 2.0, 0.5, 0.0, 0.0, 100.0, [one(), z, z, z]);
        let r = dirac_wavepacket_check(&a);
        assert!((r.velocity / r.momentum_over_mass - 1.0).abs() < 0.01);
    }

    #[test]
    fn block_solver() {
        let (alpha, beta) = dirac_matrices();
        let n = 6;
        let diag: Vec<Matrix4<C>> = (0..n).map(|k| beta * c(2.0 + k as f64, 0.5) + Matrix4::identity() * c(5.0, 0.0)).collect();
        let lo = alpha[0] * c(0.3, 0.1);
        let up = alpha[2] * c(-0.2, 0.4);
        let x: Vec<Vector4<C>> = (0..n).map(|k| Vector4::new(one(), c(k as f64, 1.0), c(0.0, -1.0), c(2.0, 0.0))).collect();
        let rhs: Vec<Vector4<C>> = (0..n)
            .map(|j| {
                let mut r = diag[j] * x[j];
                if j > 0 {
                    r += lo * x[j - 1];
                }
                if j + 1 < n {
                    r += up * x[j + 1];
                }
                r
            })
            .collect();
        let got = block_thomas(&diag, &lo, &up, &rhs).unwrap();
        for (a, b) in got.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn free_dirac_momentum_is_constant() {
        let g = Grid::new(256, 30.0).unwrap();
        let s = DiracGridState::gaussian(g, 1.0, 1.0, ScalarPotential::Zero, 0.0, 0.5, 1.5);
        let (t, r) = dirac_force_check(&s, 1e-2, 50, false).unwrap();
        assert!(t.p.iter().all(|p| (p - t.p[0]).abs() < 1e-10));
        assert!(r.max_norm_drift < 1e-8);
        assert!(ScalarPotential::parse("gaussian:1,2").is_ok());
        assert!(ScalarPotential::parse("linear").is_err());
    }
}
