//! Incremental, concurrent construction of MALL proof nets.
//!
//! The library covers the full pipeline from formulas to running
//! constructions:
//!
//! - [`formulas`]: MALL formula trees over polarized atoms, the ASCII
//!   grammar, monopole/bipole classification.
//! - [`bipolarizer`]: naming schemes, the layered clause translation,
//!   universal programs and derived inference schemes.
//! - [`sequent`]: bipolar focussing sequent proofs and their checking.
//! - [`proofnet`]: bipolar focussing proof structures — places, links,
//!   hyperlinks, jump edges — with structural validation, slices, and the
//!   singularity-free-loop correctness criterion.
//! - [`analysis`]: maximal switchings, the domination order on negative
//!   links, and isolation regions.
//! - [`engine`]: trigger matching, transactional expansion under
//!   dominator-derived locks, (de-)sequentialization, and a deterministic
//!   concurrency simulator.
//! - [`cli`]: the `mallnet` command-line front end.

pub mod analysis;
pub mod bipolarizer;
pub mod cli;
pub mod engine;
pub mod formulas;
pub mod proofnet;
pub mod sequent;

pub use bipolarizer::{inference_schemes, make_scheme, nu, nu_down, nu_up, universal_program};
pub use bipolarizer::{Bipole, InferenceScheme, NamingScheme, Program};
pub use formulas::{parse_formula, Atom, Formula, Multiset, Polarity};
pub use proofnet::{is_proof_net, validate_bps, ProofStructure, Slice, Trip};
pub use sequent::{apply_scheme, check_proof, ProofTree, RuleRef, Sequent};
