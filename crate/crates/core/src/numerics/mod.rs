//! Numerical building blocks: quadrature, special functions, FFT-based
//! Gaussian synthesis and small dense linear algebra.

pub mod circulant;
pub mod quad;
pub mod special;
