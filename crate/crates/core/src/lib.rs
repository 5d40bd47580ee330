//! Polygonal Andreev billiards.
//!
//! Billiard dynamics in simple polygons where a designated set of vertical
//! sides retro-reflects the ball and flips a ±1 parity, together with the
//! tools used to check the dynamical properties of such tables: collision
//! map Jacobians, invariant measure, flow volume sign, closed flows on
//! rational tables, and orbit behaviour near notch and T-fractal
//! perturbations.
//!
//! Coordinates can be `f64` or exact rationals ([`scalar::Rational`]); the
//! engine code is generic over [`scalar::Scalar`].

pub mod andreev;
pub mod billiard;
pub mod fractal;
pub mod geometry;
pub mod par;
pub mod sampling;
pub mod scalar;
pub mod verify;

pub use andreev::{AndreevOrbit, AndreevPhasePoint, AndreevTable, Sheet, TwoCopyPoint};
pub use billiard::{
    CollisionEvent, Orbit, Parity, Periodicity, PhasePoint, ReflectionKind, SingularityKind, SingularityReport,
    Termination,
};
pub use geometry::{Angle, ExactTable, Point, Polygon, PolygonTable, Side, Vec2};
pub use par::Exec;
pub use scalar::{Rational, Scalar};
