//! Benchmark inputs shared by the criterion targets.

pub use langreth::tables::{CHAIN, CONVOLUTION, DOUBLE_TRIANGLE, PRODUCT, TRIANGLE, VERTEX};
