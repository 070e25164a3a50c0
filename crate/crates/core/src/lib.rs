//! Simulation and exact verification for random friend trees and related
//! recursive tree models (uniform recursive trees, preferential attachment,
//! k-step walks and p-redirection).
//!
//! ```
//! use rft_core::{grow, ModelSpec, RngStream, Schedule, StatsConfig};
//!
//! let mut rng = RngStream::new(42, 0);
//! let g = grow(
//!     &ModelSpec::friend(),
//!     10_000,
//!     &mut rng,
//!     &Schedule::default(),
//!     &StatsConfig::census_only(),
//!     &mut [],
//! )?;
//! assert_eq!(g.tree.n(), 10_000);
//! assert_eq!(g.snapshots.last().unwrap().n, 10_000);
//! # Ok::<(), rft_core::Error>(())
//! ```

pub mod coupling;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod invariants;
pub mod models;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod tree;

pub use coupling::CoupledPair;
pub use error::{Error, Result};
pub use experiment::{ExperimentPlan, ExperimentResult};
pub use invariants::{check_all, Check, InvariantReport};
pub use models::{grow, grow_tree, Growth, ModelSpec, Observer};
pub use rng::RngStream;
pub use schedule::Schedule;
pub use stats::{StatSnapshot, StatsConfig};
pub use tree::{GrowthTree, Vertex};
