//! Scaling-law analysis of networks against random-graph null models.
//!
//! The crate covers the whole path from a raw edge list to fitted scaling
//! laws:
//!
//! * [`graph`]: parse edge lists and simplify them to [`SimpleGraph`]s.
//! * [`measures`]: mean degree, mean geodesic distance, global clustering
//!   and degree assortativity, computed exactly.
//! * [`geodesic`]: a two-list batch sampling estimator of the mean geodesic
//!   distance for graphs where all-pairs search is too slow.
//! * [`nullmodel`]: G(n,m), G(n,p), configuration-model double-edge swaps,
//!   Chung–Lu, and microcanonical and maximum-entropy degree-corrected
//!   block models.
//! * [`sbm`]: block-model inference by description-length minimization.
//! * [`fit`]: power-law and logarithmic OLS fits with bootstrap errors, and
//!   null-model expectations for each network.
//! * [`pipeline`]: manifest-driven corpus runs, plot data and corpus fetching.
//!
//! ```
//! use netscale::graph::SimpleGraph;
//! use netscale::measures::{global_clustering, mean_geodesic_exact};
//!
//! let triangle = SimpleGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)]);
//! assert_eq!(global_clustering(&triangle), Some(1.0));
//! assert_eq!(mean_geodesic_exact(&triangle), Some(1.0));
//! ```

pub mod error;
pub mod fit;
pub mod geodesic;
pub mod graph;
pub mod measures;
pub mod nullmodel;
pub mod pipeline;
pub mod sbm;
pub mod seed;

pub use error::{Error, Result};
pub use graph::SimpleGraph;
pub use measures::MeasureRecord;
pub use nullmodel::NullModel;
