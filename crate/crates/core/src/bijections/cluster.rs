//! Clustering ordinary increasing trees into bucket trees.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::enumerate::enumerate_trees;
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::scalar::{binom_int, Q};
use crate::tree::{BucketNode, BucketTree, BundledBucketTree, BundledNode, Label};

/// Child lists of an ordinary increasing tree, indexed by label.
struct Plain {
    children: Vec<Vec<Label>>,
}

impl Plain {
    fn new(tree: &BucketTree) -> Result<Self> {
        if tree.capacity_bound() != 1 {
            return Err(Error::InvalidParameter(format!(
                "clustering expects an ordinary increasing tree (b=1), got b={}",
                tree.capacity_bound()
            )));
        }
        let mut children = vec![Vec::new(); tree.size() + 1];
        for (_, node) in tree.nodes() {
            children[node.min_label() as usize] = node.children().iter().map(|c| c.min_label()).collect();
        }
        Ok(Self { children })
    }

    fn kids(&self, v: Label) -> &[Label] {
        &self.children[v as usize]
    }

    /// The `b` smallest labels of the subtree of `v`, ascending. They form a
    /// connected set containing `v` since parents carry smaller labels.
    fn smallest(&self, v: Label, b: usize) -> Vec<Label> {
        let mut heap = BinaryHeap::from([Reverse(v)]);
        let mut merged = Vec::with_capacity(b);
        while merged.len() < b {
            let Some(Reverse(x)) = heap.pop() else { break };
            merged.push(x);
            heap.extend(self.kids(x).iter().map(|&c| Reverse(c)));
        }
        merged
    }

    fn cluster(&self, v: Label, b: usize) -> BucketNode {
        let merged = self.smallest(v, b);
        let children = merged
            .iter()
            .flat_map(|&m| self.kids(m).iter().copied())
            .filter(|c| !merged.contains(c))
            .map(|c| self.cluster(c, b))
            .collect();
        BucketNode::new(merged, children)
    }
}

/// Clusters an ordinary increasing tree (`b = 1`) into a bucket tree with
/// capacity bound `b`: the `s = min(b, subtree size)` smallest labels of the
/// subtree of each minimal unprocessed node form a bucket, and edges leaving
/// them are redirected to the bucket. Children of a bucket are ordered by
/// the rank of their former parent within the bucket, then by their former
/// position.
pub fn cluster(tree: &BucketTree, b: u32) -> Result<BucketTree> {
    if b == 0 {
        return Err(Error::InvalidParameter("capacity bound must be positive".into()));
    }
    let plain = Plain::new(tree)?;
    BucketTree::new(b, plain.cluster(1, b as usize))
}

/// Replaces every bucket by the increasing chain of its labels, with the
/// bucket's children hanging from the last chain node. Clustering the result
/// recovers the input.
pub fn debucket(tree: &BucketTree) -> BucketTree {
    fn chain(node: &BucketNode) -> BucketNode {
        let children: Vec<BucketNode> = node.children().iter().map(|c| chain(c)).collect();
        let mut labels = node.labels().iter().rev();
        let last = *labels.next().expect("nonempty bucket");
        labels.fold(BucketNode::new(vec![last], children), |below, &l| BucketNode::new(vec![l], vec![below]))
    }
    BucketTree::unvalidated(1, chain(tree.root()))
}

/// Bookkeeping used when redirecting edges into a two-label bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleVariant {
    /// Plane-oriented recursive trees to three-bundled trees: children of
    /// the smaller label left of the larger label, children of the larger
    /// label, children of the smaller label right of the larger label.
    ThreeBundlePort,
    /// Recursive trees to two-bundled trees: children of the smaller label,
    /// children of the larger label.
    TwoBundleRecursive,
}

impl BundleVariant {
    pub fn bundles(self) -> usize {
        match self {
            Self::ThreeBundlePort => 3,
            Self::TwoBundleRecursive => 2,
        }
    }
}

/// Clusters with `b = 2`, recording which former parent each redirected edge
/// came from.
pub fn cluster_bundled(tree: &BucketTree, variant: BundleVariant) -> Result<BundledBucketTree> {
    fn go(plain: &Plain, v: Label, variant: BundleVariant) -> BundledNode {
        let kids = plain.kids(v);
        let Some(pos) = kids.iter().enumerate().min_by_key(|(_, &c)| c).map(|(i, _)| i) else {
            return BundledNode::new(vec![v], vec![Vec::new(); variant.bundles()]);
        };
        let big = kids[pos];
        let sub = |labels: &[Label]| labels.iter().map(|&c| go(plain, c, variant)).collect::<Vec<_>>();
        let bundles = match variant {
            BundleVariant::ThreeBundlePort => vec![sub(&kids[..pos]), sub(plain.kids(big)), sub(&kids[pos + 1..])],
            BundleVariant::TwoBundleRecursive => {
                let small: Vec<Label> = kids.iter().copied().filter(|&c| c != big).collect();
                vec![sub(&small), sub(plain.kids(big))]
            }
        };
        BundledNode::new(vec![v, big], bundles)
    }
    let plain = Plain::new(tree)?;
    BundledBucketTree::new(2, variant.bundles(), go(&plain, 1, variant))
}

/// Inverse of [`cluster_bundled`]. For the recursive variant the result is in
/// canonical order.
pub fn uncluster_bundled(tree: &BundledBucketTree, variant: BundleVariant) -> Result<BucketTree> {
    fn go(node: &BundledNode, variant: BundleVariant) -> Result<BucketNode> {
        let sub = |i: usize| node.bundle(i).iter().map(|c| go(c, variant)).collect::<Result<Vec<_>>>();
        match *node.labels() {
            [v] => {
                if !node.children().is_empty() {
                    return Err(Error::Bundle(format!("single-label bucket {{{v}}} has children")));
                }
                Ok(BucketNode::leaf(vec![v]))
            }
            [small, big] => {
                let big_node = BucketNode::new(vec![big], sub(1)?);
                let children = match variant {
                    BundleVariant::ThreeBundlePort => {
                        let mut c = sub(0)?;
                        c.push(big_node);
                        c.extend(sub(2)?);
                        c
                    }
                    BundleVariant::TwoBundleRecursive => {
                        let mut c = sub(0)?;
                        c.push(big_node);
                        c.sort_by_key(|n| n.min_label());
                        c
                    }
                };
                Ok(BucketNode::new(vec![small], children))
            }
            _ => Err(Error::Bundle(format!("bucket with {} labels in a b=2 tree", node.labels().len()))),
        }
    }
    if tree.capacity_bound() != 2 || tree.bundles_per_node() != variant.bundles() {
        return Err(Error::Bundle(format!(
            "expected b=2 with {} bundles, got b={} with {}",
            variant.bundles(),
            tree.capacity_bound(),
            tree.bundles_per_node()
        )));
    }
    BucketTree::new(1, go(tree.root(), variant)?)
}

/// `phi_k` of the weight-preserving bucket family with capacity `b`, by
/// summing over all ordinary trees `T` of size `b` and all ways to hang `k`
/// extra nodes from them:
/// `sum_T w(T) sum_{j_1+...+j_b=k} prod_m phi_{d_m+j_m}/phi_{d_m} C(d_m+j_m, j_m)`.
pub fn weight_preserving_phi(b1_spec: &FamilySpec, b: u32, k: usize) -> Result<Q> {
    b1_spec.validate()?;
    if b1_spec.b != 1 || !b1_spec.is_named() {
        return Err(Error::InvalidParameter("expected a named family with b=1".into()));
    }
    if b == 0 {
        return Err(Error::InvalidParameter("capacity bound must be positive".into()));
    }
    let weights = b1_spec.weights()?;
    let set = enumerate_trees(b1_spec, b as usize)?;
    let mut total = Q::from_integer(0.into());
    for (tree, w) in &set.trees {
        if w == &Q::from_integer(0.into()) {
            continue;
        }
        let degrees: Vec<usize> = tree.nodes().iter().map(|(_, node)| node.out_degree()).collect();
        // factors[m][j] = phi_{d+j}/phi_d C(d+j, j)
        let factors: Vec<Vec<Q>> = degrees
            .iter()
            .map(|&d| {
                (0..=k)
                    .map(|j| weights.phi(d + j) / weights.phi(d) * binom_int((d + j) as i64, j as u32))
                    .collect()
            })
            .collect();
        // Convolution over the nodes of the per-node series.
        let mut series = vec![Q::from_integer(1.into())];
        for f in &factors {
            let mut next = vec![Q::from_integer(0.into()); k + 1];
            for (a, x) in series.iter().enumerate() {
                for (j, y) in f.iter().enumerate().take(k + 1 - a) {
                    next[a + j] += x * y;
                }
            }
            series = next;
        }
        total += w * &series[k];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::codec::decode;
    use crate::enumerate::{enumerate_canonical, enumerate_trees};
    use crate::scalar::int;

    fn spec(s: &str) -> FamilySpec {
        s.parse().unwrap()
    }

    fn plain(text: &str) -> BucketTree {
        decode(text, 1).unwrap()
    }

    #[test]
    fn cluster_examples() {
        assert_eq!(cluster(&plain("{1}({2}({3}))"), 2).unwrap().to_string(), "{1,2}({3})");
        assert_eq!(cluster(&plain("{1}({2},{3})"), 2).unwrap().to_string(), "{1,2}({3})");
        assert_eq!(cluster(&plain("{1}({3},{2}({4}))"), 3).unwrap().to_string(), "{1,2,3}({4})");
        let t = plain("{1}({2}({5},{4}),{3}({6}))");
        assert_eq!(cluster(&t, 2).unwrap().to_string(), "{1,2}({3,6},{5},{4})");
        assert_eq!(cluster(&t, 6).unwrap().to_string(), "{1,2,3,4,5,6}");
        assert!(cluster(&decode("{1,2}", 2).unwrap(), 2).is_err());
    }

    #[test]
    fn small_trees_collapse() {
        for n in 1..=4 {
            for (t, _) in enumerate_trees(&spec("port:b=1,alpha=1"), n).unwrap().trees {
                let c = cluster(&t, 4).unwrap();
                assert_eq!(c.root().capacity(), n);
                assert!(c.root().children().is_empty());
            }
        }
    }

    #[test]
    fn surjectivity_witness() {
        for s in ["recursive:b=2", "port:b=3,alpha=1"] {
            let f = spec(s);
            for n in 1..=7 {
                for (t, _) in enumerate_trees(&f, n).unwrap().trees {
                    let chain = debucket(&t);
                    assert!(chain.is_valid());
                    assert_eq!(cluster(&chain, f.b).unwrap(), t, "{s}: {t}");
                }
            }
        }
    }

    /// Summing preimage weights reproduces the bucket family's weights.
    #[test]
    fn clustering_preserves_weight() {
        for (b1, bb) in [("port:b=1,alpha=1", "port:b=2,alpha=1"), ("port:b=1,alpha=2", "port:b=3,alpha=2")] {
            let (f1, fb) = (spec(b1), spec(bb));
            for n in 1..=6 {
                let mut sums: BTreeMap<String, Q> = BTreeMap::new();
                for (t, w) in enumerate_trees(&f1, n).unwrap().trees {
                    *sums.entry(cluster(&t, fb.b).unwrap().to_string()).or_insert_with(|| int(0)) += w;
                }
                let target = enumerate_trees(&fb, n).unwrap();
                assert_eq!(sums.len(), target.len(), "{bb} n={n}");
                for (t, w) in &target.trees {
                    assert_eq!(&sums[&t.to_string()], w, "{bb} {t}");
                }
            }
        }
        let (f1, fb) = (spec("recursive:b=1"), spec("recursive:b=2"));
        for n in 1..=7 {
            let mut sums: BTreeMap<String, Q> = BTreeMap::new();
            for (t, w) in enumerate_canonical(&f1, n).unwrap().trees {
                let c = cluster(&t, 2).unwrap().canonicalize().unwrap();
                *sums.entry(c.to_string()).or_insert_with(|| int(0)) += w;
            }
            for (t, w) in &enumerate_canonical(&fb, n).unwrap().trees {
                assert_eq!(&sums[&t.to_string()], w, "n={n} {t}");
            }
        }
    }

    #[test]
    fn bundled_examples() {
        let port = cluster_bundled(&plain("{1}({2}({3}))"), BundleVariant::ThreeBundlePort).unwrap();
        assert_eq!(port.to_string(), "{1,2}(|{3}|)");
        let rec = cluster_bundled(&plain("{1}({2},{3})"), BundleVariant::TwoBundleRecursive).unwrap();
        assert_eq!(rec.to_string(), "{1,2}({3}|)");
        let bad = BundledBucketTree::new(2, 3, BundledNode::new(vec![1, 2], vec![vec![], vec![], vec![]])).unwrap();
        assert!(uncluster_bundled(&bad, BundleVariant::TwoBundleRecursive).is_err());
    }

    #[test]
    fn bundled_round_trips() {
        for (s, variant) in
            [("port:b=1,alpha=1", BundleVariant::ThreeBundlePort), ("recursive:b=1", BundleVariant::TwoBundleRecursive)]
        {
            let f = spec(s);
            for n in 1..=6 {
                let trees = match variant {
                    BundleVariant::ThreeBundlePort => enumerate_trees(&f, n).unwrap().trees,
                    BundleVariant::TwoBundleRecursive => enumerate_canonical(&f, n).unwrap().trees,
                };
                let mut images = BTreeSet::new();
                for (t, _) in &trees {
                    let c = cluster_bundled(t, variant).unwrap();
                    assert_eq!(&uncluster_bundled(&c, variant).unwrap(), t);
                    images.insert(c.to_string());
                }
                assert_eq!(images.len(), trees.len(), "{s} n={n}");
            }
        }
    }

    #[test]
    fn phi_by_double_sum() {
        assert_eq!(weight_preserving_phi(&spec("recursive:b=1"), 2, 0).unwrap(), int(1));
        assert_eq!(weight_preserving_phi(&spec("recursive:b=1"), 2, 1).unwrap(), int(2));
        assert_eq!(weight_preserving_phi(&spec("port:b=1,alpha=1"), 2, 1).unwrap(), int(3));
        for s in ["recursive:b=1", "port:b=1,alpha=1", "port:b=1,alpha=3/2", "ary:b=1,d=2", "ary:b=1,d=3"] {
            let f = spec(s);
            for b in 2..=3 {
                let target = f.with_b(b).weights().unwrap();
                for k in 0..=6 {
                    assert_eq!(weight_preserving_phi(&f, b, k).unwrap(), target.phi(k), "{s} b={b} k={k}");
                }
            }
        }
        assert!(weight_preserving_phi(&spec("recursive:b=2"), 2, 1).is_err());
    }
}
