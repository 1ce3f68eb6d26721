//! Ehrenfest relations for wave packets: split-step Schrodinger evolution,
//! Dirac plane-wave packet quadratures and the Dirac force law.

mod dirac;
mod schrodinger;

use thiserror::Error;

pub use num_complex::Complex64;

pub use dirac::{
    dirac_force_check, dirac_matrices, dirac_wavepacket_check, evolve_dirac, spinor, DiracForceReport,
    DiracGridState, DiracPacketReport, DiracTrajectory, MomentumAmplitudes, PacketSums, ScalarPotential,
};
pub use schrodinger::{
    ehrenfest_residuals, evolve_schrodinger, schrodinger_experiment, spectral_momentum, write_trajectory_csv, Grid,
    GridWaveFunction, PotentialSpec, Residuals, SchrodingerReport, SplitOrder, Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmError {
    #[error("grid needs a power-of-two size >= 8 and positive length (got {0}, {1})")]
    Grid(usize, f64),
    #[error("initial state has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error("evolution produced a non-finite value at step {0}")]
    Diverged(usize),
    #[error("trajectory has {0} samples, need at least 5")]
    TooShort(usize),
    #[error("cannot parse potential `{0}`")]
    Potential(String),
    #[error("singular block at row {0}")]
    Singular(usize),
}
