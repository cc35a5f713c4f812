//! Stationary linear transport in the unit slab, solved the way the theory
//! is stated: integral equations along characteristic lines, summed by
//! source iteration with a certified geometric contraction, split into a
//! closed-form ballistic part that carries every boundary-data jump along
//! its forward characteristic and a scattered part that stays continuous.
//!
//! Modules:
//! - [`geometry`]: slab phase space, exit times, backtracing.
//! - [`quadrature`]: Gauss-Legendre panels, angular grids, adaptive Simpson.
//! - [`medium`]: coefficient triple, standing-assumption validation, optical
//!   depth.
//! - [`boundary`]: boundary-data profiles, discontinuity seeds, regularity
//!   classification.
//! - [`solver`]: the integral operators, the certified Neumann sum, and the
//!   hemisphere/boundary-plane collision kernels.
//! - [`analysis`]: residual checks, jump transport measurement, the focused
//!   counterexample diagnostics, and a backward Monte Carlo oracle.
//! - [`config`]: TOML run configuration.
//! - [`output`]: deterministic CSV artifact writers.

pub mod analysis;
pub mod boundary;
pub mod config;
pub mod geometry;
pub mod medium;
pub mod output;
pub mod quadrature;
pub mod solver;

pub use boundary::{BoundaryData, BoundaryProfile, DiscSeed, DiscontinuityRay, RegularityClass};
pub use geometry::{Direction, Face, PhasePoint, Position, SlabDomain};
pub use medium::{Medium, PhaseFunction, ScalarField, ValidationReport};
pub use quadrature::QuadratureSpec;
pub use solver::{neumann_solve, CollocationGrid, SolutionField, SolveOptions};

/// Configure the global worker pool; zero keeps the default. Calling this
/// more than once is a no-op.
pub fn set_thread_count(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}
