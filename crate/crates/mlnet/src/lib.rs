//! Co-clustering and goodness-of-fit order selection for multi-layer
//! directed networks.
//!
//! The pipeline, bottom to top:
//!
//! * [`model`]: binary multi-layer networks with separate sender and
//!   receiver community structure, plus a planted-model sampler;
//! * [`spectral`]: debiased sum-of-Gram spectral co-clustering (eigen
//!   decomposition of the pooled Gram matrices, then k-means on both
//!   sides);
//! * [`gof`]: block probability estimates, standardized residual matrix,
//!   and the spectral-norm test statistic, with a per-network caching
//!   evaluator;
//! * [`selection`]: threshold and ratio scans over a candidate grid that
//!   pick the community order;
//! * [`harness`]: batch experiment runners (statistic behavior, order
//!   discrimination, selection accuracy, tuning sensitivity);
//! * [`io`]: edge-list and config parsing, CSV output, and the `mlnet`
//!   command-line interface.

pub mod error;
pub mod gof;
pub mod harness;
pub mod io;
pub mod model;
pub mod rng;
pub mod selection;
pub mod spectral;

pub use error::{Error, Result};
pub use gof::{GofStatistic, NetworkStatistics};
pub use model::{CommunityLabels, GeneratorConfig, MultiLayerNetwork};
pub use selection::{
    ratio_scan_estimate, threshold_scan_estimate, SelectionConfig, SelectionTrace,
};
pub use spectral::{debiased_gram_cocluster, CoClusterResult};
