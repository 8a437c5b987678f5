//! Elliptic divisibility sequences over the rationals, descent along an
//! explicit 3-isogeny, and construction of complementary recursive prime
//! sets, with machine-checkable certificates for every claim.
//!
//! The library is organised around one running configuration: a short
//! Weierstrass curve `E: y^2 = x^3 + a6` with a non-torsion rational point
//! `Q`, an auxiliary curve `E': y^2 = x^3 + a` and a degree-3 map
//! `sigma: E' -> E` carrying a rational point `Q'` to `±Q`. From `(E, Q)` we
//! generate the divisibility sequence `B = (B_n)` of denominators of `nQ`,
//! from `(E', Q')` the companion sequence `b = (b_n)`, and from the real
//! embedding of `E` the index sets that drive the prime-set construction.

pub mod analytic;
pub mod certificate;
pub mod config;
pub mod curve;
pub mod eds;
pub mod error;
pub mod factor;
pub mod isogeny;
pub mod rational;
pub mod real;
pub mod report;
pub mod sets;

pub use config::RunConfig;
pub use curve::{CurveSpec, ModPoint, RatPoint};
pub use eds::{EdsSequence, EdsTerm, PrimitiveClass};
pub use error::Error;
pub use factor::{factor, is_prime, perfect_prime_power, Budget, FactorReport, FactorStatus};
pub use isogeny::DescentPair;
pub use sets::{MembershipVerdict, SetFamily, SetMode, Verdict};

/// Schema tag stamped into every JSON artifact so that regression fixtures
/// outlive refactors.
pub const SPEC_VERSION: &str = "1";
