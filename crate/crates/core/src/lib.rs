// Index loops mirror the tensor notation; negated comparisons keep NaN residuals failing.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod exec;
pub mod hypersurface;
pub mod pipeline;
pub mod pseudolinalg;
pub mod rotational;
pub mod scalarjet;
pub mod warped;

pub use exec::Exec;
