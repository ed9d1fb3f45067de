//! Explanation-driven feature construction.
//!
//! A prediction model is explained instance by instance, attributes that
//! repeatedly carry the bulk of an explanation together are mined as
//! candidate interaction groups, and new features are enumerated only
//! inside those groups. Candidates are scored with an MDL criterion and the
//! survivors are appended to the dataset.
//!
//! The modules follow the flow of a run:
//! [`data`] → [`model`] → [`explain`] → [`groups`] → [`construct`] (with
//! [`rules`]) → [`mdl`] → [`pipeline`]. [`synth`] provides the seeded
//! benchmark generators.

pub mod construct;
pub mod data;
pub mod error;
pub mod explain;
pub mod groups;
pub mod mdl;
pub mod model;
pub mod pipeline;
pub mod rules;
pub mod synth;
mod util;

pub use error::{Error, ErrorCategory, Result};
