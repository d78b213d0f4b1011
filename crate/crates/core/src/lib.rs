//! Random entanglement percolation on lattices with random edge
//! singlet-conversion probabilities (SCPs).
//!
//! The crate is organised around five pieces:
//!
//! * [`scp`]: edge-SCP distributions on `[0, 1]` and the order statistics
//!   that govern classical and q-swap percolation (`μ`, `σ`, `Δ`, `E[min]`).
//! * [`pdl`]: polarization-dependent loss models, the PDL → SCP map and a
//!   Jones-matrix concatenation sampler.
//! * [`lattice`]: square, triangular and honeycomb lattices plus q-swap
//!   rewiring with the min-rule.
//! * [`percolation`]: Monte Carlo spanning probabilities and thresholds on a
//!   union-find core.
//! * [`rng`], [`quadrature`], [`stats`]: supporting numerics.

pub mod error;
pub mod lattice;
pub mod pdl;
pub mod percolation;
pub mod quadrature;
pub mod rng;
pub mod scp;
pub mod stats;
pub mod union_find;

pub use error::{Error, Result};
pub use lattice::{BoundaryMode, Lattice, LatticeKind, LatticeSpec, QSwapPlan, SwapTransform};
pub use pdl::{JonesMatrix, PdlModel, PdlSpec};
pub use percolation::{Disorder, Mode, PercolationEstimate, PostSwapMean, ScpFamily, ScpSource};
pub use rng::RandomStream;
pub use scp::{DistributionStats, ScpDistribution, ScpSpec};
pub use union_find::UnionFind;
