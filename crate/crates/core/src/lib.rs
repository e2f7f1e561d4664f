//! Causal-graph bias audits for diagnostic test accuracy (DTA) designs.
//!
//! A study design is a role-labeled DAG over binary variables: the target
//! condition, reference and index tests, covariates and selection
//! (verification) indicators. This crate
//!
//! * parses and queries such graphs ([`graph`]): ancestry, path enumeration,
//!   d-separation, backdoor paths and minimal adjustment sets;
//! * detects the five canonical DTA bias structures ([`bias`]);
//! * turns a graph into an exact binary Bayes net with seeded sampling
//!   ([`prob`]);
//! * computes true, naive, stratified and corrected accuracy
//!   ([`estimate`]), including verification-bias reweighting, known-reference
//!   inversion and a latent class EM fit;
//! * packages five built-in study designs and runs end-to-end audits
//!   ([`scenario`], [`report`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `dtadag` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bias;
pub mod estimate;
pub mod graph;
pub mod prob;
pub mod report;
pub mod rng;
pub mod scenario;

pub use bias::{detect_biases, validate_roles, AnalysisSpec, BiasFinding, BiasKind};
pub use graph::{Dag, GraphError, Node, NodeRole, Path};
pub use prob::{BayesNet, Cpt, Dataset, JointTable};
