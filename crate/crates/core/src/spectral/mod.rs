//! Per-angular-mode radial operators, their eigenpairs, and modal solutions.

pub mod operator;
pub mod solution;
pub mod tridiag;

pub use operator::{InverseSquare, ModalOperator, ModalSpectrum};
pub use solution::{ModalSolution, Projection, SpectralBasis};
pub use tridiag::SymTridiagonal;
