//! Julia sets and dimension estimates for finitely generated rational semigroups.
//!
//! A finite set of rational maps `f_1, …, f_m` (each of degree ≥ 1) on the
//! Riemann sphere generates a semigroup under composition. This crate computes:
//!
//! * backward-iteration approximations of the semigroup Julia set
//!   ([`julia::julia_cloud`]),
//! * the pressure function `t ↦ P(t)` of the associated skew product weighted
//!   by `−t·log‖f′‖` (spherical derivative), and its unique zero — the Bowen
//!   dimension estimate ([`thermo::bowen_dimension`]),
//! * critical exponents of Poincaré series ([`poincare::critical_exponent`]),
//! * atomic approximations of conformal measures together with Ahlfors-type
//!   regularity, overlap, and box-counting audits ([`measure`]),
//! * validity checkers for the expanding/hyperbolic hypotheses behind those
//!   estimates, including an open-set-condition tester ([`checks`]).
//!
//! All randomized routines take explicit seeds and produce identical output
//! regardless of thread count; parallelism (the default `parallel` feature)
//! only changes wall-clock time.
//!
//! Conventions used throughout:
//!
//! * The metric is the chordal metric `d(z,w) = 2|z−w|/√((1+|z|²)(1+|w|²))`,
//!   with `d(z,∞) = 2/√(1+|z|²)`; the sphere has diameter 2.
//! * `‖f′(z)‖` denotes the derivative norm with respect to the spherical
//!   metric: `|f′(z)|·(1+|z|²)/(1+|f(z)|²)` in the finite chart, extended to
//!   `∞` by conjugating with `z ↦ 1/z`.
//! * Words are stored in application order: a preimage-tree node with word
//!   `u = (u_1, …, u_n)` and point `y` satisfies `f_{u_n}∘⋯∘f_{u_1}(y) = x`.
//!   Symbols are 0-based indices into the generator list.

pub mod checks;
pub mod config;
pub mod julia;
pub mod measure;
pub mod numerics;
pub mod poincare;
pub mod poly;
pub mod semigroup;
pub mod sphere;
pub mod thermo;

pub(crate) mod exec;
pub(crate) mod spatial;

pub use semigroup::GeneratorSystem;
pub use sphere::{chordal_distance, RationalMap, SpherePoint};

use thiserror::Error;

/// Default preimage-tree depth for dimension estimates.
pub const DEFAULT_DEPTH: usize = 10;
/// Default number of discarded leading steps in random backward walks.
pub const DEFAULT_BURN_IN: usize = 50;
/// Default chordal clearance required between Julia and postcritical clouds.
pub const DEFAULT_HYPERBOLICITY_MARGIN: f64 = 1e-2;

/// Crate-wide numeric tolerances. The defaults are used by every entry point
/// unless a caller overrides them on the [`GeneratorSystem`].
#[derive(Clone, Copy, Debug)]
pub struct NumericTolerances {
    /// Moduli above this are collapsed to the point at infinity.
    pub overflow: f64,
    /// Relative residual below which numerator/denominator share a root
    /// (construction is rejected as not in lowest terms).
    pub gcd_tol: f64,
    /// Simultaneous-iteration step size at which root refinement stops.
    pub root_step: f64,
    /// Iteration cap for the simultaneous root refinement.
    pub max_root_iter: usize,
    /// Relative backward-error ceiling for accepting refined roots.
    pub root_residual: f64,
    /// Relative magnitude below which a leading coefficient is treated as a
    /// degree drop (one more preimage at ∞).
    pub degree_drop: f64,
    /// Chordal radius within which solver roots are merged into one root with
    /// multiplicity.
    pub root_cluster: f64,
    /// Largest polynomial degree allowed when composing maps symbolically.
    pub compose_degree_cap: usize,
    /// Hard ceiling on preimage-tree nodes per level (memory guard).
    pub max_tree_nodes: usize,
}

impl Default for NumericTolerances {
    fn default() -> Self {
        Self {
            overflow: 1e150,
            gcd_tol: 1e-10,
            root_step: 1e-12,
            max_root_iter: 200,
            root_residual: 1e-9,
            degree_drop: 1e-14,
            root_cluster: 1e-7,
            compose_degree_cap: 64,
            max_tree_nodes: 20_000_000,
        }
    }
}

/// Errors produced by the numeric core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational map: {0}")]
    InvalidMap(String),
    #[error("degenerate system: {0}")]
    DegenerateSystem(String),
    #[error("root refinement failed for degree-{degree} polynomial (relative residual {residual:.3e})")]
    RootSolveFailed { degree: usize, residual: f64 },
    #[error("no generator has a repelling fixed point; supply an explicit base point")]
    NoRepellingFixedPoint,
    #[error("pressure does not change sign on [0, {t_hi}]: P({t_hi}) = {pressure:.6e}")]
    BracketFailure { t_hi: f64, pressure: f64 },
    #[error("backward orbit hit a critical point (derivative norm vanished)")]
    CriticalOrbit,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
