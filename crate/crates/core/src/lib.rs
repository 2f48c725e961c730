//! Information-gap analysis of sequential narratives.
//!
//! The pipeline segments a novel into overlapping sentence windows, embeds
//! and clusters the windows into topics, links topics that follow each other
//! in the text into a cumulative topic network (one snapshot per chapter),
//! and measures the network's shape with Vietoris-Rips persistent homology
//! on graph geodesics. The resulting per-chapter features are related to
//! reader curiosity ratings with penalized-spline additive models.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corpus;
pub mod diagdist;
pub mod embed;
pub mod error;
pub mod gam;
pub mod homology;
pub mod network;
pub mod pipeline;
pub mod stats;
pub mod synthetic;
pub mod topics;

pub use error::{Error, Result};
