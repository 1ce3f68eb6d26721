pub mod expr;
pub mod canon;
pub mod variational;
pub mod suite;
pub mod jet;
pub mod qm;
