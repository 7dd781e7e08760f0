//! Exact arithmetic in truncated p-adic Laurent series.

mod coeff;
pub(crate) mod context;
mod decay;
mod laurent;
mod minimal;

pub use coeff::CoeffElem;
pub use context::{Ctx, PrimeContext};
pub use decay::{decay_classify, Classification, DecayClass, DecayProfile, PartialVal};
pub use laurent::Series;
pub use minimal::{circ_split, is_circ, twist_defect, twist_to_minimal};
