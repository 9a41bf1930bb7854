//! Affinity-matrix computation as one abstraction: build pairwise
//! affinities, normalise them, propagate over one or many hops, aggregate.
//!
//! The same pipeline yields graph-based feature ranking (path sums over a
//! feature graph, eigenvector centrality, PageRank) and the attention family
//! (scaled dot-product and multi-head attention, non-local blocks, graph
//! attention layers), plus sigmoid feature gates for hard selection.
//!
//! ```
//! use affinity_core::{affinity, normalize, propagate, selection, FeatureDataset, Matrix};
//!
//! let data = Matrix::from_rows(&[
//!     [1.0, 1.0, 2.0],
//!     [2.0, 3.0, 2.0],
//!     [3.0, 2.0, 2.0],
//!     [4.0, 4.0, 2.0],
//! ])?;
//! let ds = FeatureDataset::unnamed(data)?;
//! let a = affinity::build_corr_affinity(&ds, 0.5)?;
//! let scaling = normalize::choose_alpha(&a, 0.5)?;
//! let paths = propagate::power_series_closed_form(&a, &scaling)?;
//! let ranking = selection::rank(&propagate::inffs_scores(&paths), None)?;
//! assert_eq!(ranking.order[0], 2);
//! # Ok::<(), affinity_core::Error>(())
//! ```
//!
//! The `parallel` feature (default) spreads matrix products, per-head work
//! and verification instances over rayon. Results are identical with or
//! without it.

pub mod affinity;
pub mod attention;
pub mod error;
pub mod matrix;
pub mod normalize;
pub mod par;
pub mod propagate;
pub mod rng;
pub mod selection;
pub mod verify;

pub use affinity::{AffinityMatrix, FeatureDataset};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use normalize::{AlphaScaling, NeighborhoodMask};
pub use propagate::{CentralityVector, PathSum};
pub use selection::{GateVector, RankingResult};
