//! Length orthospectra of strictly convex bodies on the flat torus `R^d / 2πZ^d`.
//!
//! The crate is organised bottom-up:
//!
//! * [`convex`]: support functions, inverse Gauss map, Steiner data.
//! * [`spherequad`]: product quadrature on spheres, Bessel functions,
//!   oscillatory integrals and stationary phase.
//! * [`spectrum`]: enumeration of orthogeodesics and counting functions.
//! * [`zetafns`]: Epstein zeta functions, Poincaré series, singular models,
//!   Guinand–Meyer pairings.
//! * [`dynamics`]: correlations, anisotropic norms, equidistribution.

pub mod convex;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod poly;
pub mod special;
pub mod spectrum;
pub mod spherequad;
pub mod zetafns;

pub use convex::{Direction, SteinerData, SupportBody};
pub use dynamics::{AnisoParams, TorusObservable};
pub use error::{Error, Result};
pub use poly::SpherePoly;
pub use spectrum::{LengthSpectrum, Orientation, Orthogeodesic, TwistForm};
pub use zetafns::{ResidueEstimate, SingularityFit, ZetaModel};
pub use spherequad::{OscResult, SphericalGrid};

pub use num_complex::Complex64;

/// Crate version, echoed into every CLI output bundle.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
