//! Numeric evaluation at random points of jet space, where every field
//! component and each of its partial derivatives is an independent
//! coordinate. Ghost coordinates are Grassmann generators.

mod eval;
mod grassmann;
mod group;
mod point;
mod random;

use thiserror::Error;

pub use eval::{assignments, evaluate, evaluate_at, numeric_identity_check, Assignment, ResidualReport};
pub use grassmann::{sort_generators, DegreeOverflow, GrassmannValue, DEFAULT_DEGREE_CAP};
pub use group::{GroupData, GroupName};
pub use random::random_expression_source;
pub use point::{multi_index_id, sample_jet_point, sample_with, trial_seed, FieldJet, JetPoint, MAX_ORDER};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JetError {
    #[error("jet coordinate of derivative order {0} requested (maximum 3)")]
    OrderTooHigh(usize),
    #[error("no jet coordinates for field `{0}`")]
    UnknownField(String),
    #[error("component {0} out of range")]
    ComponentRange(u8),
    #[error("free index `{0}` has no assigned component")]
    Unassigned(String),
    #[error("monomial has {0} odd factors, past the Grassmann degree cap")]
    Degree(usize),
    #[error("constraint `{0}` is not linear in its solved coordinate")]
    NotLinear(String),
    #[error("point sampled for dimension {0}, group has dimension {1}")]
    GroupMismatch(usize, usize),
}
