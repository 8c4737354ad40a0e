// `!(x > 0.0)` is how the validators reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod caching;
pub mod energy;
pub mod experiment;
pub mod metrics;
pub mod routing;
pub mod sim;
pub mod topology;
pub mod weather;
pub mod workload;
