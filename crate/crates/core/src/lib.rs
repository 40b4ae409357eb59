//! Ontology-guided explanations for black-box text classifiers.

mod error;

pub mod anchors;
pub mod blackbox;
pub mod composer;
pub mod corpus;
pub mod eval;
pub mod ontology;
pub mod pipeline;
pub mod surrogate;
pub mod synth;
pub mod textproc;
pub mod triplex;
pub mod tuples;

pub use error::{Error, Result};
