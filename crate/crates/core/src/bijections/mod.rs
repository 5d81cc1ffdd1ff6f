//! Clustering of ordinary increasing trees and the correspondence between
//! increasing diamonds and bucket trees with `b = 2`.

pub mod cluster;
pub mod diamond;

pub use cluster::{cluster, cluster_bundled, debucket, uncluster_bundled, weight_preserving_phi, BundleVariant};
pub use diamond::{
    bucket_to_diamond, bucket_to_incdec, diamond_to_bucket, diamond_to_incdec, incdec_to_bucket, incdec_to_diamond,
    IncDecNode, IncreasingDiamond,
};
