//! Numerical laboratory for positive-homogeneous (semi-elliptic) operators:
//! heat kernels by Fourier inversion, Legendre-Fenchel transforms, lattice
//! convolution powers with local limit theorems, and Levi's parametrix method.

pub mod anisotropy;
pub mod cases;
pub mod error;
pub mod heatkernel;
pub mod lattice;
pub mod legendre;
pub mod levi;
pub mod numeric;
pub mod shell;
pub mod symbol;

pub use error::{Error, Result};
