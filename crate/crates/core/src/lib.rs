//! Dyadic harmonic analysis on the Walsh group: Walsh-Paley and Walsh-Kaczmarz
//! systems, Dirichlet kernels, fast spectral transforms, strong summability
//! means, best dyadic approximation and a divergence construction.

pub mod acceptance;
pub mod approx;
pub mod counterexample;
pub mod dyadic;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod phi;
pub mod random;
pub mod reference;
pub mod spectral;
pub mod strong;
pub mod transform;
pub mod walsh;

pub use dyadic::{BitPoint, GridFunction1D, GridFunction2D};
pub use error::{Error, Result};
pub use walsh::WalshSystem;
