//! Atom-counting tomography of one- and two-mode bosonic states.
//!
//! Two reconstruction schemes are provided:
//!
//! * [`spin_tomo`]: two condensates with a fixed total atom number, mixed on
//!   a beam splitter with variable angle and phase. The joint state is a
//!   spin `j = N/2` and is recovered from the rotated number-difference
//!   statistics by an exact quadrature over the rotation group.
//! * [`dn_tomo`]: one condensate mixed with a coherent reference of fixed
//!   amplitude while the relative phase is scanned. Fourier components of
//!   the count statistics are inverted order by order with pseudo-inverses of
//!   real design matrices, optionally including detector inefficiency.
//!
//! [`forward`] simulates both measurements (exact or with finite
//! statistics), [`states`] builds the test states and [`quasiprob`] renders
//! Q and Wigner functions for comparison. Everything numerical is generic
//! over [`Real`]; the `*64` aliases below fix the scalar to `f64`.

pub mod dn_tomo;
pub mod error;
pub mod forward;
pub mod io;
pub mod quasiprob;
pub mod scalar;
pub mod specfun;
pub mod spin_tomo;
pub mod states;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use error::{Result, TomoError};
pub use scalar::Real;
pub use specfun::HalfInt;

pub type DensityMatrix64 = states::DensityMatrix<f64>;
pub type FockVector64 = states::FockVector<f64>;
pub type SpinVector64 = states::SpinVector<f64>;
pub type SpinMarginalSet64 = forward::SpinMarginalSet<f64>;
pub type PhaseScanSet64 = forward::PhaseScanSet<f64>;
pub type QuadratureGrid64 = spin_tomo::QuadratureGrid<f64>;
pub type DesignMatrixFamily64 = dn_tomo::DesignMatrixFamily<f64>;
pub type QuasiprobGrid64 = quasiprob::QuasiprobGrid<f64>;
pub type WignerDMatrix64 = specfun::WignerDMatrix<f64>;

pub type DensityMatrix32 = states::DensityMatrix<f32>;
