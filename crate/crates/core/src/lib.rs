//! Bucket increasing trees: growth processes, exact weighted enumeration,
//! distributions of bucket sizes, descendants and degrees, urn models, and
//! the bijections to increasing diamonds and clustered increasing trees.

pub mod bijections;
pub mod codec;
pub mod dist_desc;
pub mod dist_k;
pub mod enumerate;
pub mod error;
pub mod family;
pub mod grow;
pub mod pmf;
#[cfg(test)]
mod proptests;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod tree;
pub mod urns;
pub mod verify;

pub use error::{Error, Result};
pub use family::{FamilyKind, FamilySpec};
pub use pmf::{ExactPmf, FloatPmf, Pmf};
pub use rng::RngStream;
pub use tree::{BucketNode, BucketTree, BundledBucketTree, NodeCensus};
