//! Numerical toolkit for the Cahn-Hilliard-Gurtin phase-separation system.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`grid`]: cell-centered finite volumes on rectangles with exact
//!   summation-by-parts gradient/divergence pairs,
//! * [`coefficients`]: constitutive data `(β, a, c, b)`, the ellipticity
//!   margin validators and the ball-extension operators,
//! * [`potential`]: polynomial potentials and growth certificates,
//! * [`symbol`]: scans of the Fourier-Laplace symbol of the linear problem,
//! * [`solver`]: the stabilized linearly-implicit time stepper with its
//!   mass/energy/stationarity ledgers,
//! * [`linalg`]: the small dense and sparse kernels used by the above.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coefficients;
pub mod grid;
pub mod linalg;
pub mod potential;
pub mod solver;
pub mod symbol;

pub use coefficients::{CoefficientSet, ScalarCoeff, VectorCoeff};
pub use grid::{BcKind, BoundaryFace, CellField, FaceField, GridSpec, Side};
pub use potential::Potential;
pub use solver::{DiagnosticsRecord, SolverState, SourceData};

/// A point (or vector) in the plane. One-dimensional grids use the first
/// component only.
pub type Point = [f64; 2];
