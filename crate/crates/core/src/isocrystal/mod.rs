//! Frobenius matrices of F-isocrystals in congruence form.

mod matrix;
mod newton;
mod reduce;
mod unit_root;

pub use matrix::{IsocrystalMatrix, SeriesMatrix};
pub use newton::NewtonData;
pub use reduce::{
    check_condition, conjugate_elementary, matrix_log_bound, ElementaryStep, ElementaryTransform, Predicate,
    PredicateStatus, RankOneForm, RankOneParams,
};
pub use unit_root::UnitRootSolution;
