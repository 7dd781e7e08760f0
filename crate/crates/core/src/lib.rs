//! Unit-root subcrystals of F-isocrystals over `k((T))` computed with exact
//! truncated p-adic Laurent series, together with the ramification data they
//! determine.

pub mod error;
pub mod frob_solve;
pub mod isocrystal;
pub mod literal;
pub mod monodromy;
pub mod ramification;
pub mod series;
pub mod sweep;

pub use error::{Error, Result};
pub use num::rational::BigRational;
pub use series::{CoeffElem, Ctx, PrimeContext, Series};
