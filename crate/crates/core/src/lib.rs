// `!(x > 0.0)` comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod collision;
pub mod gate;
pub mod hologram;
pub mod imaging;
pub mod loading;
pub mod quadrature;
pub mod units;
