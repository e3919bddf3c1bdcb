//! Multiple hypothesis testing with uncorrelated test martingales.
//!
//! The crate merges test-martingale values with mixtures of normalized
//! elementary symmetric polynomials, computes discovery diagonals,
//! subdiagonals and discovery matrices, extracts confidence regions for the
//! number of justified discoveries, and runs seeded Gaussian simulations.
//!
//! ```
//! use evalanche::{discovery, LogValue, MergeSpec, RankedValues};
//!
//! let values: Vec<LogValue> = [8.0, 4.0, 1.0]
//!     .iter()
//!     .map(|&x| LogValue::from_linear(x).unwrap())
//!     .collect();
//! let ranked = RankedValues::from_values(&values);
//! let d = discovery::diagonal_row(&ranked, 2, &MergeSpec::mean()).unwrap();
//! assert!((d.to_linear() - 2.5).abs() < 1e-12);
//! ```

pub mod cli;
pub mod discovery;
pub mod error;
pub mod io;
pub mod logvalue;
pub mod martingales;
pub mod merge;
pub mod oracle;
pub mod simulate;

pub use discovery::{ConfidenceRegion, DiscoveryMatrix};
pub use error::{Error, Result};
pub use logvalue::LogValue;
pub use martingales::{MartingaleTable, RankedValues};
pub use merge::{MergeSpec, MultiaffinePoly};
pub use simulate::{ExperimentConfig, RunResult};
