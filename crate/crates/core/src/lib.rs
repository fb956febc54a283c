//! Multi-reference RPA and SOSEX correlation energies on top of a
//! CASCI zeroth order.
//!
//! The pipeline runs integrals → partition → active-space exact
//! diagonalization → excitation manifold → ring resummation, with three
//! mutually cross-validating energy routes: the plasmon sum over the
//! symplectic eigenvalue problem, imaginary-frequency quadrature of the
//! resummed log-determinant, and the ring-CCD amplitude trace. An
//! independent textbook single-reference implementation serves as an
//! oracle in the closed-shell limit, and a dense Fock-space engine
//! cross-checks the manifold on small systems.
//!
//! Everything numerical is generic over the [`scalar::Scalar`] type;
//! `f64` aliases for the main entry points live at the crate root.

pub mod casci;
pub mod fixtures;
pub mod fock_space;
pub mod integrals;
pub mod linalg;
pub mod manifold;
pub mod partition;
pub mod pipeline;
pub mod quadrature;
pub mod reference_sr;
pub mod rpa;
pub mod scalar;
pub mod sosex;
pub mod spin;

pub use integrals::{IntegralSet, OrbitalSpaces};
pub use manifold::ExcitationManifold;
pub use partition::DyallPartition;
pub use pipeline::{run_single_point, PipelineSettings, SinglePoint};
pub use scalar::Scalar;
pub use spin::{Spin, SpinOrbital};

/// Integral store over `f64`, the default working precision.
pub type IntegralSet64 = integrals::IntegralSet<f64>;
/// Dyall-type partition over `f64`.
pub type DyallPartition64 = partition::DyallPartition<f64>;
/// Excitation manifold over `f64`.
pub type ExcitationManifold64 = manifold::ExcitationManifold<f64>;
/// Single-geometry result over `f64`.
pub type SinglePoint64 = pipeline::SinglePoint<f64>;
