//! Evidence pattern reasoning over set-, permutation- and graph-valued focal
//! elements.
//!
//! The crate is layered bottom-up:
//!
//! - [`evidence`]: sample spaces, mass assignments, Dempster and disjunctive
//!   combination, the pignistic transform and multiset addition.
//! - [`rps`]: permutation events and the right-intersection fusion rule.
//! - [`rgs`]: graph events, their set/permutation embeddings and the graph
//!   surgery used by velocity ranking.
//! - [`pattern`]: pluggable pattern operators, two-source and sequential
//!   fusion, decision operators and BPA strategies.
//! - [`registry`]: name-keyed lookup of operators and decision methods.
//! - [`airsim`]: seeded aircraft trajectory and sensor simulation.
//! - [`decision`]: mean-velocity and conflict-resolution ranking decisions.
//! - [`harness`]: corpus runs, cross-tabulation, reports and case traces.

pub mod airsim;
pub mod decision;
pub mod evidence;
pub mod harness;
pub mod pattern;
pub mod registry;
pub mod rgs;
pub mod rps;

pub use evidence::{
    combine_many, dcr_combine, dempster_combine, multiset_plus, pignistic, Event, EvidenceError,
    Label, MassAssignment, Multiset, SampleSpace, SetEvent, MASS_TOLERANCE,
};
pub use pattern::{decide, fuse_sequence, fuse_two, PatternOperator};
pub use rgs::GraphEvent;
pub use rps::PermEvent;
