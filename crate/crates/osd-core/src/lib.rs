//! Unification modulo one-sided distributivity: `X × (Y + Z) = X×Y + X×Z`.
//!
//! The crate provides four deciders over standard-form equation systems:
//! the classic splitting-rule baseline, a typed single-homomorphism decider
//! with binary path lengths, the general decider over an SLP-labeled
//! dependency graph, and an asymmetric variant where right sides must stay
//! irreducible. It also holds the generators, parsers and reporting used
//! by the `osd` command-line tool and the test suites.

pub mod asym;
pub mod compressed;
pub mod generate;
pub mod graph;
pub mod hom;
pub mod oracle;
pub mod parser;
pub mod report;
pub mod slp;
pub mod subst;
pub mod system;
pub mod ta;
pub mod term;
pub mod vars;

pub use slp::{SlpId, SlpStore};
pub use subst::{Binding, Substitution, DEFAULT_CAP};
pub use system::{Equation, Rhs, StandardSystem};
pub use term::{e_equal, is_normal, normalize, Op, Term};
pub use vars::{VarId, VarTable};

/// Why a system was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailReason {
    /// Occurs-check style cycle in the dependency graph.
    DependencyCycle,
    /// Cycle in the (sum) propagation graph: a finite unifier cannot exist.
    PropagationCycle,
}

impl std::fmt::Display for FailReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailReason::DependencyCycle => write!(f, "dependency-cycle"),
            FailReason::PropagationCycle => write!(f, "propagation-cycle"),
        }
    }
}
