//! Noisy target localization by binary search over grids whose two
//! candidate halves overlap by a tunable fraction `alpha`.
//!
//! - [`geometry`]: grids, overlapping splits, mirror partners.
//! - [`signal`]: path-loss measurements and Gaussian likelihoods.
//! - [`search`]: the search loop and its Monte Carlo success rate.
//! - [`analysis`]: step and end-to-end error probabilities, tree depth.
//! - [`placement`]: heuristic and evolutionary sensor placement.
//!
//! ```
//! use overlap_search::{GridRegion, PropagationModel, SearchConfig, SensorPolicy, Searcher};
//!
//! let model = PropagationModel::new(20.0, 1.0, 10.0, 0.5f64.sqrt())?;
//! let space = GridRegion::line(128, 500.0)?;
//! let config = SearchConfig::new(0.1, 5, SensorPolicy::fixed_fraction(0.25));
//! let estimate = Searcher::new(space, model, config)?.success_rate(2_000, 7)?;
//! assert!(estimate.rate > 0.7);
//! # Ok::<(), overlap_search::Error>(())
//! ```

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod placement;
pub mod quadrature;
pub mod rng;
pub mod search;
pub mod signal;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{
    retained_count, split, GridAxis, GridRegion, Membership, Partition, Point, Side,
};
pub use quadrature::QuadratureSpec;
pub use search::{run_search, success_rate, SearchConfig, Searcher, SensorPolicy};
pub use signal::{MeasurementVector, PropagationModel, Scale, SensorSet};
pub use stats::BinomialEstimate;
