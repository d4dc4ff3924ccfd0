//! Verification tooling for learning over entropy-limited discrete distributions.
//!
//! The crate is organized around exact finite-alphabet computation (no density
//! estimation, no approximation unless an operation is explicitly Monte Carlo):
//!
//! - [`dist`] — probability mass functions, joint distributions over binary
//!   labels, seeded sampling, empirical estimates. All information quantities
//!   are in bits (log base 2), with `0 * log 0 = 0`.
//! - [`constructions`] — distribution families used by the experiments:
//!   heavy-tailed entropy-limited distributions (one head symbol plus a flat
//!   tail of `M` rare symbols), random entropy-capped pmfs, and factorized
//!   Bernoulli products.
//! - [`hypotheses`] — binary hypotheses in rule form, exact risks, the
//!   high-probability-set projection and its covering bookkeeping.
//! - [`learners`] — memorizing learners and dataset-derived encoders.
//! - [`bounds`] — closed-form tail and sample-complexity calculators, carried
//!   in the log2 domain where linear arithmetic overflows.
//! - [`ib`] — information-bottleneck objective and solvers (self-consistent
//!   fixed point, exhaustive deterministic search, greedy agglomeration).
//! - [`harness`] — seeded experiment drivers with CSV/SVG emission.
//!
//! Every randomized routine is deterministic given its seed: draws come from a
//! counter-based generator where draw `i` is a pure function of `(seed, i)`.

pub mod bounds;
pub mod constructions;
pub mod dist;
pub mod error;
pub mod harness;
pub mod hypotheses;
pub mod ib;
pub mod learners;
pub mod log2;
pub mod rng;

pub use error::{Error, Result};
