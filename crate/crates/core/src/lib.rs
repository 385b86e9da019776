//! Simulation and exact-computation toolkit for the parking process on
//! random recursive trees.
//!
//! Cars arrive i.i.d. on the vertices of a growing random recursive tree,
//! drive towards the root along the oriented edges, and park at the first
//! empty vertex (exiting at the root otherwise). The crate provides:
//!
//! - [`tree`]: random recursive trees via uniform attachment, canonical
//!   ball encodings, text import/export.
//! - [`yule`]: the continuous-time binary branching construction, its
//!   conversion to recursive trees, and size-law sampling.
//! - [`local_limit`]: the one-ended local limit tree with its infinite
//!   ancestor spine, truncated at a finite spine depth.
//! - [`car_laws`]: bounded car-arrival distributions — the binary family
//!   and general families with prescribed small-density asymptotics.
//! - [`parking`]: batch and sequential parking, incremental maintenance
//!   under tree growth, cluster extraction, and flux-onset times.
//! - [`exact`]: plane-tree and fully-parked-tree enumeration, exact
//!   expected flux at small sizes, and analytic occupancy bounds.
//! - [`harness`]: seeded, reproducible Monte Carlo experiment drivers
//!   with CSV/JSON output.

pub mod car_laws;
pub mod error;
pub mod exact;
pub mod harness;
pub mod local_limit;
pub mod parking;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod yule;

pub use error::{Error, Result};
