//! Horosphere geometry in the model Hadamard spaces `Eⁿ` and `Hⁿ`.
//!
//! The crate builds Busemann functions and their horospheres, the unit-Jacobian
//! map `F` obtained by reparametrizing the normal flow of a horosphere
//! foliation, the difference and sum flows of a pair of Busemann functions,
//! and the intersection loci of two horospheres with their weighted volume
//! integrals. Every identity is checked numerically against closed-form model
//! values by the suites in [`suites`].

pub mod busemann;
pub mod config;
pub mod error;
pub mod locus;
pub mod manifold;
pub mod numerics;
pub mod report;
pub mod suites;
pub mod transport;

pub use busemann::{beta, estimate_h, mean_curvature_h, BusemannField, HessianOperator, TraceSource};
pub use error::{Error, Result};
pub use locus::{IntersectionLocus, PairConfig};
pub use manifold::{Ideal, Isometry, ModelKind, ModelSpace, Point, TangentVec};
pub use report::{CheckReport, Status};
pub use transport::{AlphaMap, FlowKind, MapF, NormalFlow, PairFlow};
