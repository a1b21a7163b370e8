//! Exact and certified numerics shared by every other module.

mod interval;
mod logexpr;
mod primes;
mod rational;

pub use interval::{exp_enclosure, ln_enclosure, ln_rational_enclosure, pow_rational_enclosure, Interval};
pub use logexpr::{DimExpr, LogExpr};
pub use primes::{factorize, multiplicative_relation, perfect_power_root};
pub use rational::{
    ceil_q, floor_q, frac_q, parse_rational, pow_u, q, qi, to_f64, u128_of, Q,
};
