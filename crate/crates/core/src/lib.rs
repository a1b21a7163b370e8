//! Exact machinery for Bedford–McMullen carpets, digit-restricted product
//! sets and the rotation-coded skew products built on top of them.
//!
//! The crate is `no_std` and only needs `alloc`. Everything geometric is
//! carried as exact rationals; transcendental quantities (logarithms,
//! irrational powers) are carried symbolically together with certified
//! rational enclosures that can be tightened on demand.
//!
//! Module map:
//!
//! * [`numeric`]: rationals, certified enclosures, prime factorisations and
//!   symbolic log-ratio expressions.
//! * [`symbolic`]: symbol sequences, cylinders and the coded product space.
//! * [`rotation`]: the rotation by `log m2 / log m1`, its coding and the
//!   adaptive partitions derived from it.
//! * [`carpets`]: carpets, closed-form dimensions, bound calculators and
//!   finite-depth miniset covers.
//! * [`slicer`]: exact line/cell counting, intersection and inclusion tests.
//! * [`dynamics`]: skew products, magnification and the CP-chain builder.
//! * [`measures`]: seeded sampling, histograms and entropy estimators.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod carpets;
pub mod dynamics;
pub mod error;
pub mod measures;
pub mod numeric;
pub mod rotation;
pub mod slicer;
pub mod symbolic;

pub use error::{CoreError, Result};
pub use numeric::{DimExpr, Interval, LogExpr, Q};
