//! Multi-policy access-control triage for Android-style system snapshots.
//!
//! Given one declarative snapshot of a device's access-control state, the
//! crate computes the integrity violations adversaries are authorized to
//! create and the attack operations they can actually launch — file
//! modification, file squatting, link traversal, luring traversal — under
//! permission expansion and the Scoped Storage defense, then aggregates the
//! results into triage reports and what-if analyses.
//!
//! The policy models (Type Enforcement, MLS categories, POSIX DAC, Scoped
//! Storage) compose restrictively, so each lives behind the common
//! [`authz::PolicyModel`] trait and decisions intersect; [`oracle`] carries a
//! deliberately independent reference implementation of the whole pipeline
//! for equivalence testing.

pub mod analysis;
pub mod authz;
pub mod engine;
pub mod expansion;
pub mod labeling;
pub mod oracle;
pub mod report;
pub mod snapshot;
pub mod synthgen;
