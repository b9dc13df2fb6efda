//! Periodic solutions of the discrete nonlinear Schrödinger equation
//!
//! ```text
//! i beta (phi(t+1,k) - phi(t-1,k)) + gamma |phi|^2 phi
//!     + epsilon (phi(t,k+1) - 2 phi(t,k) + phi(t,k-1)) = g(t, phi(t,k))
//! ```
//!
//! on a `(T,K)`-periodic lattice, written as `L phi = F(phi) + G(phi)`.

pub mod certificate;
pub mod cli;
pub mod degree;
pub mod lattice;
pub mod operator;
pub mod potentials;
pub mod solver;

pub use certificate::{BoundaryEvidence, CertificateError, ExistenceCertificate, Rigor};
pub use degree::{DegreeError, DegreeReport, DegreeTarget};
pub use lattice::{LatticeError, LatticeField, LatticeParams};
pub use operator::{OperatorError, ShiftedOperator};
pub use potentials::{Potential, PotentialError};
pub use solver::{PipelineConfig, SolveReport, SolveStatus, SolverError, SolverOptions};
