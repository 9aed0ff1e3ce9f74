//! Snowflaked-metric embedding constructions and metric invariants.
//!
//! The crate has three layers:
//!
//! * ambient geometry — [`metric`] for finite distance matrices with
//!   snowflake transforms and distortion/moduli measurement, [`lp`] for
//!   discretized sequence and function spaces with their p-power and norm
//!   metrics and the sign-indicator embedding into L2;
//! * explicit embeddings — [`assouad`] for the dyadic tent-function family
//!   with certified truncation windows and closed-form frame constants,
//!   [`mn`] for the oscillatory-kernel isometric embedding and its
//!   normalizing constant;
//! * invariants — [`invariants`] for Enflo-type and roundness defects,
//!   per-witness critical exponents, snowflake scaling laws, and the
//!   Lipschitz transfer check.
//!
//! Randomized workloads draw from the counter-based [`rng`] so results are
//! reproducible for a given seed regardless of thread count. [`gen`] builds
//! seeded test fixtures (metric spaces, ultrametric hierarchies, step
//! functions).

pub mod assouad;
pub mod extreal;
pub mod gen;
pub mod invariants;
pub mod lp;
pub mod metric;
pub mod mn;
pub mod rng;

pub(crate) mod quad;

pub use extreal::ExtReal;
