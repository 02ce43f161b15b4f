pub mod error;
pub mod gradient;
pub mod instances;
pub mod kernels;
pub mod kpca;
pub mod krr;
pub mod linalg;
pub mod lp;
pub mod nn;
pub mod oracles;
pub mod precision;
pub mod svm;
pub mod verdict;

pub use error::{Error, Result};
pub use precision::{Interval, PrecisionPolicy};
pub use verdict::{Answer, Reduction, ReductionVerdict};
