//! Exact intersection theory on the moduli spaces of stable curves.
//!
//! The crate works with the tautological ring of the Deligne-Mumford spaces
//! in the basis of decorated boundary strata: a generator is a stable graph
//! together with kappa and psi decorations on its vertices and half-edges,
//! and a class is a rational linear combination of such generators.  All
//! arithmetic is exact (arbitrary-precision rationals), all canonical forms
//! are deterministic, and every operation that can blow up combinatorially
//! takes an explicit size budget.
//!
//! Modules:
//! - [`graph`]: stable graphs, validation, canonical forms, automorphism
//!   counts, enumeration, contraction, and graph morphisms.
//! - [`stratum`]: decorated strata and tautological classes.
//! - [`correlator`]: psi intersection numbers via the KdV recursion, plus
//!   mixed kappa-psi vertex integrals.
//! - [`calculus`]: products, integration, forgetful and gluing maps.
//! - [`gorenstein`]: generator bases, pairing matrices, exact ranks, Betti
//!   oracles, and the Gorenstein status tables.
//! - [`gcover`]: admissible double covers, generic structures on them, and
//!   the pullback of Hurwitz loci to moduli of curves.

#![forbid(unsafe_code)]

pub mod calculus;
pub mod correlator;
pub mod gcover;
pub mod gorenstein;
pub mod graph;
mod par;
pub mod rational;
pub mod stratum;

pub use graph::{enumerate_stable_graphs, GraphMorphism, StableGraph, Violation};
pub use rational::Q;
pub use stratum::{make_stratum, DecoratedStratum, Decoration, TautClass};

/// Errors for the whole crate.  The CLI maps these onto exit codes: invalid
/// input is 1, a blown budget is 2, an internal invariant violation is 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(#[from] Violation),
    #[error("ambient mismatch: expected genus {expected_g} with {expected_n} markings, got ({got_g},{got_n})")]
    AmbientMismatch {
        expected_g: u32,
        expected_n: u32,
        got_g: u32,
        got_n: u32,
    },
    #[error("moduli space ({g},{n}) is unstable")]
    Unstable { g: u32, n: u32 },
    #[error("decoration of degree {degree} exceeds dimension {dim} at vertex {vertex}")]
    DecorationTooDeep {
        vertex: usize,
        degree: u32,
        dim: u32,
    },
    #[error("degree mismatch: total degree {got} but the space has dimension {expected}")]
    DegreeMismatch { got: u32, expected: u32 },
    #[error("budget exceeded while {context}: limit {limit}")]
    BudgetExceeded { context: String, limit: u64 },
    #[error("invalid monodromy data: {0}")]
    InvalidMonodromy(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}
