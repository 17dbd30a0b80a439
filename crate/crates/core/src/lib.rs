// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mismatch;
pub mod modes;
pub mod numerics;
pub mod opo;
pub mod pdc;
pub mod scenarios;

pub use error::{Error, Result};
