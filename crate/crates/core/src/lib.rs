//! Computational engine for convex projective structures built by gluing and
//! bulging hyperbolic blocks: projective tubes and their classification,
//! bulged holonomies, developed tilings of convex domains, local-to-global
//! convexity certification, and the boundary strata of the resulting domains
//! (fans, telescopes, blowup walls).

pub mod arith;
pub mod blocks;
pub mod body;
pub mod builders;
pub mod cells;
pub mod eigen;
pub mod error;
pub mod gluekit;
pub mod lp;
pub mod metric;
pub mod ray;
pub mod sample;
pub mod scene;
pub mod support;
pub mod svg;
pub mod tubes;

pub use body::ConvexBody;
pub use error::{Error, Result};
pub use ray::{Chart, ProjMap, Ray, Segment, DEFAULT_TOL};
