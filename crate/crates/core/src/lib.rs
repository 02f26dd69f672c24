//! Matings of quadratic polynomials by iterated pullback of a Medusa.
//!
//! A Medusa is the unit circle with one leg per point of each critical orbit:
//! legs inside the circle for the first polynomial's external angle, outside
//! for the second's. Each iteration reads off a normalised rational map
//! `R(z) = (a z² + 1 − a) / (b z² + 1 − b)` from where the Medusa currently
//! puts the first points of both orbits, then pulls the Medusa back through
//! it. For mateable post-critically finite pairs the maps converge to the
//! mating.
//!
//! ```
//! use medusa_core::{run_mating, MatingConfig, Status};
//!
//! let r = run_mating("1/3".parse().unwrap(), "0/1".parse().unwrap(), &MatingConfig::default());
//! assert_eq!(r.status, Status::Converged);
//! let golden = (1.0 + 5f64.sqrt()) / 2.0;
//! assert!((r.best().unwrap().a.re - golden).abs() < 1e-6);
//! ```

pub mod angles;
pub mod geometry;
pub mod medusa;
pub mod par;
pub mod real;
pub mod render;
pub mod sweep;
pub mod trace;

pub use angles::{check_mateable, Mateability, RationalAngle};
pub use geometry::SpherePoint;
pub use medusa::{run_mating, MapParams, MatingConfig, MatingResult, Precision, Status};
pub use par::Execution;
pub use render::{Bounds, Image, Pixel, View};
pub use trace::Trace;
