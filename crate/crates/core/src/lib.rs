//! Certified attractors, addresses and projections of φ-contractive iterated
//! function systems on R^d.
//!
//! Every computed set comes with a radius bounding its Hausdorff distance to
//! the true set, derived from tail sums of a comparison function φ. Systems
//! are declared parent-child (`pc`) or orbital; results whose radius is not a
//! proof carry `certified: false` and flags saying why.

// `!(a < b)` is used on purpose: it is also true for NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod address;
pub mod attractor;
pub mod checks;
pub mod comparison;
pub mod config;
pub mod error;
pub mod expr;
mod kdtree;
pub mod metric_sets;
pub mod num;
pub mod shift_space;
pub mod system;

pub use address::AddressResult;
pub use attractor::{AttractorApprox, IterateOptions};
pub use checks::ConditionReport;
pub use comparison::{ClassFlags, ComparisonFn, PhiKind, TailCertificate};
pub use config::SystemConfig;
pub use error::{IfsError, Result};
pub use metric_sets::{CertifiedSet, Point, PointSet};
pub use shift_space::{FiniteWord, InfiniteWordSpec, TotalWord};
pub use system::{IndexFamily, IteratedSystem, MapSpec, Mode, WorkingBox};
