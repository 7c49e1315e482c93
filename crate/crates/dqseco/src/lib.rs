//! Dual-quaternion powered-descent guidance by sequential conic optimization
//! with a factorization-free first-order solver.

pub mod audit;
pub mod dynamics;
pub mod pipg;
pub mod precondition;
pub mod quat;
pub mod seco;
pub mod subproblem;
pub mod config;
pub mod verify;
