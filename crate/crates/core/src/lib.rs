//! Clustering of uncertain intelligence reports and template-based force
//! aggregation.
//!
//! The library groups conflicting evidence into clusters with a Potts spin
//! mean field annealer, extracts a high-credibility core from each cluster,
//! matches each core against a catalog of force templates, penalizes
//! non-core reports that the chosen template cannot absorb, and reclusters
//! under those penalties before aggregating each cluster into a hypothesized
//! force element.
//!
//! The seven-step pipeline lives in [`harness::run_pipeline`]; the individual
//! stages are usable on their own:
//!
//! - [`evidence`]: reports, pairwise conflict interactions, the energy function
//! - [`annealer`]: the mean field annealing solver (standard clustering)
//! - [`specification`]: credibility and core/non-core extraction
//! - [`templates`]: support functions, template fit, basic beliefs
//! - [`refine`]: template-coupled reclustering with move-to-core promotion
//! - [`aggregate`]: final template ranking and force element emission
//! - [`harness`]: file formats, scenario generation, oracles, evaluation

pub mod aggregate;
pub mod annealer;
pub mod error;
pub mod evidence;
pub mod harness;
pub mod rational;
pub mod refine;
pub mod specification;
pub mod templates;

pub use error::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
