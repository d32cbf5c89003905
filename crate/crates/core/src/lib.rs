pub mod error;
pub mod linalg;
pub mod model;
pub mod spline;
pub mod wavelet;
pub mod estimation;
pub mod diagnostics;
pub mod harness;
