//! Ternary (and general k-ary) coalescent processes with exact laws.
//!
//! A k-ary coalescent merges k particles of masses `r_1, ..., r_k` into one
//! particle of mass `r_1 + ... + r_k` at rate `r_1 + ... + r_k + k/(k-2)`.
//! For k = 3 this is the ternary kernel `r + s + t + 3`. Starting from an
//! odd number of unit masses, the jump chain of this process admits three
//! provably equivalent constructions, all implemented here:
//!
//! * direct continuous-time simulation ([`ctmc`]),
//! * ladder epochs of a conditioned lattice walk ([`walk`]),
//! * component sizes of random labeled binary forests ([`forest`]).
//!
//! Reversing the jump chain in time yields a fragmentation chain whose
//! dislocation law is known in closed form; [`exact`] evaluates that law and
//! every other closed-form quantity (transition rates, hypoexponential
//! particle counts, marginals, forest counts) in exact rational arithmetic.
//! [`oracle`] provides independent brute-force enumerations used to validate
//! the closed forms, and [`stats`] contains the statistical harness for the
//! desk-scale convergence experiments toward the standard additive
//! coalescent.

pub mod ctmc;
pub mod error;
pub mod exact;
pub mod forest;
pub mod numeric;
pub mod oracle;
pub mod partition;
pub mod rng;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use partition::{MassPartition, RescaledPartition};
