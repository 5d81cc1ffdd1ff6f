//! Bucket trees: rooted ordered trees whose nodes are buckets holding between
//! one and `b` labels. Internal buckets must be saturated and labels increase
//! along every root path.
//!
//! Trees are immutable. Operations that change a tree return a new one which
//! shares every untouched subtree with its source.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Label = u32;

/// Child indices leading from the root to a node.
pub type NodePath = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BucketNode {
    labels: Vec<Label>,
    children: Vec<Arc<BucketNode>>,
}

impl BucketNode {
    pub fn new(labels: Vec<Label>, children: Vec<BucketNode>) -> Self {
        Self { labels, children: children.into_iter().map(Arc::new).collect() }
    }

    pub fn leaf(labels: Vec<Label>) -> Self {
        Self { labels, children: Vec::new() }
    }

    pub(crate) fn from_shared(labels: Vec<Label>, children: Vec<Arc<BucketNode>>) -> Self {
        Self { labels, children }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn children(&self) -> &[Arc<BucketNode>] {
        &self.children
    }

    /// Current load `c(v)`.
    pub fn capacity(&self) -> usize {
        self.labels.len()
    }

    pub fn out_degree(&self) -> usize {
        self.children.len()
    }

    pub fn min_label(&self) -> Label {
        self.labels.iter().copied().min().unwrap_or(0)
    }

    pub fn max_label(&self) -> Label {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn subtree_size(&self) -> usize {
        self.labels.len() + self.children.iter().map(|c| c.subtree_size()).sum::<usize>()
    }

    pub fn subtree_labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<Label>) {
        out.extend_from_slice(&self.labels);
        for c in &self.children {
            c.collect_labels(out);
        }
    }

    /// Number of buckets in this subtree.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Applies `f` to every label, keeping the shape.
    pub fn map_labels(&self, f: &impl Fn(Label) -> Label) -> BucketNode {
        BucketNode {
            labels: self.labels.iter().map(|&l| f(l)).collect(),
            children: self.children.iter().map(|c| Arc::new(c.map_labels(f))).collect(),
        }
    }

    fn canonical(&self) -> BucketNode {
        let mut children: Vec<BucketNode> = self.children.iter().map(|c| c.canonical()).collect();
        children.sort_by_key(|c| c.min_label());
        BucketNode::new(self.labels.clone(), children)
    }

    fn is_canonical(&self) -> bool {
        self.children.windows(2).all(|w| w[0].min_label() < w[1].min_label())
            && self.children.iter().all(|c| c.is_canonical())
    }

    /// Restriction to labels `< bound`; `None` when nothing survives.
    fn restrict_below(&self, bound: Label) -> Option<BucketNode> {
        let labels: Vec<Label> = self.labels.iter().copied().filter(|&l| l < bound).collect();
        if labels.is_empty() {
            return None;
        }
        let children = self
            .children
            .iter()
            .filter_map(|c| c.restrict_below(bound))
            .collect();
        Some(BucketNode::new(labels, children))
    }
}

/// A bucket increasing tree with maximal bucket size `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BucketTree {
    capacity_bound: u32,
    root: Arc<BucketNode>,
    size: usize,
}

impl BucketTree {
    /// Builds a tree and validates it.
    pub fn new(capacity_bound: u32, root: BucketNode) -> Result<Self> {
        let tree = Self::unvalidated(capacity_bound, root);
        let violations = tree.validate();
        if violations.is_empty() {
            Ok(tree)
        } else {
            Err(Error::InvalidTree(violations))
        }
    }

    /// Builds a tree without checking any invariant. Use [`BucketTree::validate`]
    /// to inspect the result.
    pub fn unvalidated(capacity_bound: u32, root: BucketNode) -> Self {
        let size = root.subtree_size();
        Self { capacity_bound, root: Arc::new(root), size }
    }

    pub(crate) fn from_shared(capacity_bound: u32, root: Arc<BucketNode>) -> Self {
        let size = root.subtree_size();
        Self { capacity_bound, root, size }
    }

    /// The one-bucket tree `{1}`.
    pub fn singleton(capacity_bound: u32) -> Self {
        Self::unvalidated(capacity_bound, BucketNode::leaf(vec![1]))
    }

    pub fn capacity_bound(&self) -> u32 {
        self.capacity_bound
    }

    pub fn root(&self) -> &BucketNode {
        &self.root
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&BucketNode> {
        let mut node: &BucketNode = &self.root;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    /// Every node with its path, in preorder.
    pub fn nodes(&self) -> Vec<(NodePath, &BucketNode)> {
        let mut out = Vec::new();
        let mut stack: Vec<(NodePath, &BucketNode)> = vec![(Vec::new(), &self.root)];
        while let Some((path, node)) = stack.pop() {
            for (i, c) in node.children.iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, c));
            }
            out.push((path, node));
        }
        out
    }

    /// Path of the bucket that holds `label`.
    pub fn bucket_of(&self, label: Label) -> Option<NodePath> {
        fn find(node: &BucketNode, label: Label, path: &mut NodePath) -> bool {
            if node.labels.contains(&label) {
                return true;
            }
            for (i, c) in node.children.iter().enumerate() {
                path.push(i);
                if find(c, label, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut path = Vec::new();
        find(&self.root, label, &mut path).then_some(path)
    }

    pub fn is_saturated(&self, node: &BucketNode) -> bool {
        node.capacity() == self.capacity_bound as usize
    }

    /// Checks every structural invariant and reports each violation.
    pub fn validate(&self) -> Vec<Violation> {
        let b = self.capacity_bound as usize;
        let mut out = Vec::new();
        if b == 0 {
            out.push(Violation { path: Vec::new(), rule: ViolationRule::ZeroCapacityBound });
            return out;
        }
        for (path, node) in self.nodes() {
            let c = node.capacity();
            if c == 0 {
                out.push(Violation { path: path.clone(), rule: ViolationRule::EmptyBucket });
                continue;
            }
            if c > b {
                out.push(Violation { path: path.clone(), rule: ViolationRule::OverCapacity { load: c, bound: b } });
            }
            if node.labels.windows(2).any(|w| w[0] >= w[1]) {
                out.push(Violation { path: path.clone(), rule: ViolationRule::LabelsNotIncreasing });
            }
            if !node.children.is_empty() && c != b {
                out.push(Violation { path: path.clone(), rule: ViolationRule::InternalUnsaturated });
            }
            let max = node.max_label();
            for (i, child) in node.children.iter().enumerate() {
                if !child.labels.is_empty() && child.min_label() <= max {
                    let mut p = path.clone();
                    p.push(i);
                    out.push(Violation { path: p, rule: ViolationRule::ChildNotGreater });
                }
            }
        }
        let mut labels = self.root.subtree_labels();
        labels.sort_unstable();
        let expected: Vec<Label> = (1..=labels.len() as Label).collect();
        if labels != expected {
            out.push(Violation { path: Vec::new(), rule: ViolationRule::LabelSetMismatch });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidTree(v))
        }
    }

    /// Canonical ordered representative: children of every node sorted by
    /// their smallest label.
    pub fn canonicalize(&self) -> Result<BucketTree> {
        self.ensure_valid()?;
        Ok(Self::unvalidated(self.capacity_bound, self.root.canonical()))
    }

    pub fn is_canonical(&self) -> bool {
        self.root.is_canonical()
    }

    pub fn census(&self) -> Result<NodeCensus> {
        self.ensure_valid()?;
        let b = self.capacity_bound as usize;
        let mut census = NodeCensus::default();
        for (_, node) in self.nodes() {
            if node.capacity() < b {
                *census.unsaturated.entry(node.capacity()).or_default() += 1;
            } else {
                *census.saturated_by_degree.entry(node.out_degree()).or_default() += 1;
            }
        }
        Ok(census)
    }

    /// Returns the tree after `label` is attracted by the node at `path`: an
    /// unsaturated node absorbs it, a saturated node receives a new rightmost
    /// child bucket. Untouched subtrees are shared with `self`.
    pub fn attach(&self, path: &[usize], label: Label) -> Option<BucketTree> {
        fn rebuild(node: &Arc<BucketNode>, path: &[usize], label: Label, b: usize) -> Option<Arc<BucketNode>> {
            match path.split_first() {
                None => {
                    let mut labels = node.labels.clone();
                    let mut children = node.children.clone();
                    if labels.len() < b {
                        labels.push(label);
                    } else {
                        children.push(Arc::new(BucketNode::leaf(vec![label])));
                    }
                    Some(Arc::new(BucketNode { labels, children }))
                }
                Some((&i, rest)) => {
                    let child = node.children.get(i)?;
                    let new_child = rebuild(child, rest, label, b)?;
                    let mut children = node.children.clone();
                    children[i] = new_child;
                    Some(Arc::new(BucketNode { labels: node.labels.clone(), children }))
                }
            }
        }
        let root = rebuild(&self.root, path, label, self.capacity_bound as usize)?;
        Some(Self { capacity_bound: self.capacity_bound, root, size: self.size + 1 })
    }

    /// The tree restricted to labels `< bound`.
    pub fn restrict_below(&self, bound: Label) -> Option<BucketTree> {
        self.root
            .restrict_below(bound)
            .map(|root| Self::unvalidated(self.capacity_bound, root))
    }

    /// Relabels with `f`, keeping the shape and the capacity bound.
    pub fn map_labels(&self, f: impl Fn(Label) -> Label) -> BucketTree {
        Self::unvalidated(self.capacity_bound, self.root.map_labels(&f))
    }

    pub fn root_arc(&self) -> &Arc<BucketNode> {
        &self.root
    }
}

impl fmt::Display for BucketTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::codec::encode(self))
    }
}

/// Counts of unsaturated buckets by load (`m_k`) and of saturated buckets by
/// out-degree (`n_k`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeCensus {
    pub unsaturated: BTreeMap<usize, usize>,
    pub saturated_by_degree: BTreeMap<usize, usize>,
}

impl NodeCensus {
    /// `sum k m_k + b sum n_k`
    pub fn label_count(&self, b: u32) -> usize {
        self.unsaturated.iter().map(|(k, m)| k * m).sum::<usize>()
            + b as usize * self.saturated_by_degree.values().sum::<usize>()
    }

    /// `sum m_k - sum (k-1) n_k`, which is one for every tree.
    pub fn node_edge_balance(&self) -> i64 {
        self.unsaturated.values().map(|&m| m as i64).sum::<i64>()
            - self
                .saturated_by_degree
                .iter()
                .map(|(&k, &n)| (k as i64 - 1) * n as i64)
                .sum::<i64>()
    }

    pub fn identities_hold(&self, n: usize, b: u32) -> bool {
        self.label_count(b) == n && self.node_edge_balance() == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: NodePath,
    pub rule: ViolationRule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationRule {
    ZeroCapacityBound,
    EmptyBucket,
    OverCapacity { load: usize, bound: usize },
    LabelsNotIncreasing,
    InternalUnsaturated,
    ChildNotGreater,
    LabelSetMismatch,
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ZeroCapacityBound => f.write_str("capacity bound must be at least 1"),
            Self::EmptyBucket => f.write_str("empty bucket"),
            Self::OverCapacity { load, bound } => write!(f, "bucket holds {load} labels, bound is {bound}"),
            Self::LabelsNotIncreasing => f.write_str("bucket labels not strictly increasing"),
            Self::InternalUnsaturated => f.write_str("internal node unsaturated"),
            Self::ChildNotGreater => f.write_str("child bucket not larger than its parent"),
            Self::LabelSetMismatch => f.write_str("label set is not {1..n}"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {:?}: {}", self.path, self.rule)
    }
}

/// A bucket tree whose children sequences are cut into a fixed number of
/// ordered bundles. Bundle boundaries are stored as the sizes of consecutive
/// runs of the children sequence; empty bundles are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BundledNode {
    labels: Vec<Label>,
    children: Vec<BundledNode>,
    bundle_sizes: Vec<usize>,
}

impl BundledNode {
    pub fn new(labels: Vec<Label>, bundles: Vec<Vec<BundledNode>>) -> Self {
        let bundle_sizes = bundles.iter().map(Vec::len).collect();
        let children = bundles.into_iter().flatten().collect();
        Self { labels, children, bundle_sizes }
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn children(&self) -> &[BundledNode] {
        &self.children
    }

    pub fn bundle_sizes(&self) -> &[usize] {
        &self.bundle_sizes
    }

    pub fn bundle(&self, index: usize) -> &[BundledNode] {
        let start: usize = self.bundle_sizes[..index].iter().sum();
        &self.children[start..start + self.bundle_sizes[index]]
    }

    pub fn bundle_count(&self) -> usize {
        self.bundle_sizes.len()
    }

    fn uniform_bundles(&self, d: usize) -> bool {
        self.bundle_sizes.len() == d
            && self.bundle_sizes.iter().sum::<usize>() == self.children.len()
            && self.children.iter().all(|c| c.uniform_bundles(d))
    }

    fn to_plain(&self) -> BucketNode {
        BucketNode::new(self.labels.clone(), self.children.iter().map(|c| c.to_plain()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BundledBucketTree {
    capacity_bound: u32,
    bundles_per_node: usize,
    root: BundledNode,
}

impl BundledBucketTree {
    pub fn new(capacity_bound: u32, bundles_per_node: usize, root: BundledNode) -> Result<Self> {
        if !root.uniform_bundles(bundles_per_node) {
            return Err(Error::Bundle(format!("every node must carry exactly {bundles_per_node} bundles")));
        }
        let tree = Self { capacity_bound, bundles_per_node, root };
        tree.flatten()?;
        Ok(tree)
    }

    pub fn root(&self) -> &BundledNode {
        &self.root
    }

    pub fn bundles_per_node(&self) -> usize {
        self.bundles_per_node
    }

    pub fn capacity_bound(&self) -> u32 {
        self.capacity_bound
    }

    /// Concatenates bundles into the ordinary ordered tree.
    pub fn flatten(&self) -> Result<BucketTree> {
        BucketTree::new(self.capacity_bound, self.root.to_plain())
    }
}

impl fmt::Display for BundledBucketTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_node(node: &BundledNode, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let labels: Vec<String> = node.labels.iter().map(|l| l.to_string()).collect();
            write!(f, "{{{}}}", labels.join(","))?;
            if node.children.is_empty() {
                return Ok(());
            }
            f.write_str("(")?;
            for i in 0..node.bundle_count() {
                if i > 0 {
                    f.write_str("|")?;
                }
                for (k, c) in node.bundle(i).iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    write_node(c, f)?;
                }
            }
            f.write_str(")")
        }
        write_node(&self.root, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(b: u32, text: &str) -> BucketTree {
        crate::codec::decode(text, b).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(BucketTree::singleton(2).is_valid());
        let bad = BucketTree::unvalidated(2, BucketNode::new(vec![1], vec![BucketNode::leaf(vec![2])]));
        let v = bad.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, ViolationRule::InternalUnsaturated);
        assert_eq!(v[0].to_string(), "node []: internal node unsaturated");
        assert!(t(2, "{1,2}({3},{4})").is_valid());
    }

    #[test]
    fn validate_reports_paths() {
        let bad = BucketTree::unvalidated(
            2,
            BucketNode::new(vec![1, 3], vec![BucketNode::leaf(vec![2]), BucketNode::leaf(vec![5, 4, 6])]),
        );
        let rules: Vec<_> = bad.validate().into_iter().map(|v| (v.path, v.rule)).collect();
        assert!(rules.contains(&(vec![0], ViolationRule::ChildNotGreater)));
        assert!(rules.contains(&(vec![1], ViolationRule::OverCapacity { load: 3, bound: 2 })));
        assert!(rules.contains(&(vec![1], ViolationRule::LabelsNotIncreasing)));
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(t(2, "{1,2}({4},{3})").canonicalize().unwrap(), t(2, "{1,2}({3},{4})"));
        let c = t(2, "{1,2}({3},{4})");
        assert_eq!(c.canonicalize().unwrap(), c);
        let deep = t(2, "{1,2}({5,6},{3,4}({7}))").canonicalize().unwrap();
        assert_eq!(deep.to_string(), "{1,2}({3,4}({7}),{5,6})");
    }

    #[test]
    fn census_examples() {
        let c = t(2, "{1,2}({3},{4})").census().unwrap();
        assert_eq!(c.unsaturated, BTreeMap::from([(1, 2)]));
        assert_eq!(c.saturated_by_degree, BTreeMap::from([(2, 1)]));
        assert!(c.identities_hold(4, 2));

        let c = BucketTree::singleton(2).census().unwrap();
        assert_eq!(c.unsaturated, BTreeMap::from([(1, 1)]));
        assert!(c.saturated_by_degree.is_empty());

        let c = t(2, "{1,2}({3,4})").census().unwrap();
        assert!(c.unsaturated.is_empty());
        assert_eq!(c.saturated_by_degree, BTreeMap::from([(0, 1), (1, 1)]));
        assert!(c.identities_hold(4, 2));
    }

    #[test]
    fn attach_shares_untouched_subtrees() {
        let base = t(2, "{1,2}({3,4},{5})");
        let grown = base.attach(&[1], 6).unwrap();
        assert_eq!(grown.to_string(), "{1,2}({3,4},{5,6})");
        assert!(Arc::ptr_eq(&base.root().children()[0], &grown.root().children()[0]));
        let grown = grown.attach(&[0], 7).unwrap();
        assert_eq!(grown.to_string(), "{1,2}({3,4}({7}),{5,6})");
        assert!(grown.is_valid());
    }

    #[test]
    fn restriction() {
        let tree = t(2, "{1,2}({3,4}({7}),{5,6})");
        assert_eq!(tree.restrict_below(6).unwrap().to_string(), "{1,2}({3,4},{5})");
        assert_eq!(tree.restrict_below(2).unwrap().to_string(), "{1}");
        assert!(tree.restrict_below(1).is_none());
    }

    #[test]
    fn bundled_flatten() {
        let node = BundledNode::new(
            vec![1, 2],
            vec![vec![], vec![BundledNode::new(vec![3], vec![vec![], vec![], vec![]])], vec![]],
        );
        let tree = BundledBucketTree::new(2, 3, node).unwrap();
        assert_eq!(tree.flatten().unwrap().to_string(), "{1,2}({3})");
        assert_eq!(tree.to_string(), "{1,2}(|{3}|)");
        assert_eq!(tree.root().bundle(1).len(), 1);

        let ragged = BundledNode::new(vec![1, 2], vec![vec![BundledNode::new(vec![3], vec![])], vec![]]);
        assert!(BundledBucketTree::new(2, 2, ragged).is_err());
    }
}
