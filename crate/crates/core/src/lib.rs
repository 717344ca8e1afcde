//! Large solutions of the Finsler p-Laplacian `div(H^{p-1}(∇u)∇H(∇u)) = f(u)`.

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod nonlinearity;
pub mod norms;
pub mod ode1d;
pub mod pde;
pub mod quad;
pub mod radial;

pub use error::{Error, Result};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
