//! Exhaustive enumeration of weighted bucket increasing trees, exact tree
//! probabilities under the combinatorial and growth measures, and exact
//! statistic PMFs by brute force.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::family::{FamilySpec, Weights};
use crate::pmf::ExactPmf;
use crate::scalar::{factorial, int, Q};
use crate::tree::{BucketNode, BucketTree, Label};

pub const DEFAULT_BOUND: usize = 10;

/// Trees of one size with their weights.
///
/// For ordered enumerations every ordered tree appears once with `w(T)`. For
/// canonical enumerations every unordered tree appears once through its
/// canonical representative, weighted by `w(T) * prod_v deg(v)!`, the
/// total weight of its ordered representatives.
#[derive(Clone, Debug)]
pub struct WeightedTreeSet {
    pub n: usize,
    pub canonical: bool,
    pub trees: Vec<(BucketTree, Q)>,
}

impl WeightedTreeSet {
    pub fn total_weight(&self) -> Q {
        self.trees.iter().fold(Q::zero(), |acc, (_, w)| acc + w)
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

struct Enumerator {
    b: usize,
    canonical: bool,
    phi: Vec<Q>,
    psi: Vec<Q>,
    max_degree: usize,
    memo: Vec<Vec<(Arc<BucketNode>, Q)>>,
}

impl Enumerator {
    fn new(spec: &FamilySpec, weights: &Weights, n: usize, canonical: bool) -> Self {
        let b = spec.b as usize;
        let phi: Vec<Q> = (0..=n).map(|k| weights.phi(k)).collect();
        let max_degree = phi.iter().rposition(|p| !p.is_zero()).unwrap_or(0);
        Self { b, canonical, phi, psi: weights.psi.clone(), max_degree, memo: vec![Vec::new()] }
    }

    fn fill(&mut self, n: usize) {
        while self.memo.len() <= n {
            let s = self.memo.len();
            let trees = self.trees_of_size(s);
            self.memo.push(trees);
        }
    }

    fn trees_of_size(&self, s: usize) -> Vec<(Arc<BucketNode>, Q)> {
        let b = self.b;
        if s < b {
            let w = self.psi[s - 1].clone();
            if w.is_zero() {
                return Vec::new();
            }
            return vec![(Arc::new(BucketNode::leaf((1..=s as Label).collect())), w)];
        }
        let root: Vec<Label> = (1..=b as Label).collect();
        let rest: Vec<Label> = (b as Label + 1..=s as Label).collect();
        let mut out = Vec::new();
        let full = if rest.is_empty() { 0u64 } else { (1u64 << rest.len()) - 1 };
        let mut children = Vec::new();
        self.dfs(&root, &rest, full, &mut children, Q::one(), &mut out);
        out
    }

    fn dfs(
        &self,
        root: &[Label],
        rest: &[Label],
        remaining: u64,
        children: &mut Vec<Arc<BucketNode>>,
        weight: Q,
        out: &mut Vec<(Arc<BucketNode>, Q)>,
    ) {
        if remaining == 0 {
            let r = children.len();
            let mut w = weight * &self.phi[r];
            if w.is_zero() {
                return;
            }
            if self.canonical {
                w *= factorial(r as u64);
            }
            out.push((Arc::new(BucketNode::from_shared(root.to_vec(), children.clone())), w));
            return;
        }
        if children.len() >= self.max_degree {
            return;
        }
        let lowest = remaining & remaining.wrapping_neg();
        // Iterate over nonempty submasks of `remaining`.
        let mut sub = remaining;
        while sub != 0 {
            if !self.canonical || sub & lowest != 0 {
                let block: Vec<Label> =
                    (0..rest.len()).filter(|i| sub >> i & 1 == 1).map(|i| rest[i]).collect();
                for (shape, w) in &self.memo[block.len()] {
                    children.push(Arc::new(shape.map_labels(&|l| block[l as usize - 1])));
                    self.dfs(root, rest, remaining & !sub, children, weight.clone() * w, out);
                    children.pop();
                }
            }
            sub = (sub - 1) & remaining;
        }
    }
}

fn check_bound(n: usize, bound: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > bound {
        return Err(Error::EnumerationBound { n, bound });
    }
    Ok(())
}

fn enumerate(spec: &FamilySpec, n: usize, bound: usize, canonical: bool) -> Result<WeightedTreeSet> {
    check_bound(n, bound)?;
    let weights = spec.weights()?;
    let mut e = Enumerator::new(spec, &weights, n, canonical);
    e.fill(n);
    let trees = e.memo[n]
        .iter()
        .map(|(node, w)| (BucketTree::from_shared(spec.b, node.clone()), w.clone()))
        .collect();
    Ok(WeightedTreeSet { n, canonical, trees })
}

/// Every ordered tree of size `n` with nonzero weight.
pub fn enumerate_trees(spec: &FamilySpec, n: usize) -> Result<WeightedTreeSet> {
    enumerate(spec, n, DEFAULT_BOUND, false)
}

pub fn enumerate_trees_bounded(spec: &FamilySpec, n: usize, bound: usize) -> Result<WeightedTreeSet> {
    enumerate(spec, n, bound, false)
}

/// Every unordered tree of size `n`, as canonical representatives.
pub fn enumerate_canonical(spec: &FamilySpec, n: usize) -> Result<WeightedTreeSet> {
    enumerate(spec, n, DEFAULT_BOUND, true)
}

pub fn enumerate_canonical_bounded(spec: &FamilySpec, n: usize, bound: usize) -> Result<WeightedTreeSet> {
    enumerate(spec, n, bound, true)
}

/// `T_n`: closed form for the named families, enumerated otherwise.
pub fn total_weight(spec: &FamilySpec, n: usize) -> Result<Q> {
    if spec.is_named() {
        spec.total_weight_closed(n)
    } else {
        Ok(enumerate_canonical(spec, n)?.total_weight())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// `w(T)/T_n` on ordered trees.
    OrderedModel,
    /// `w(T) prod_v deg(v)! / T_n` on canonical representatives.
    UnorderedModel,
    /// Product of the growth-rule attraction probabilities that build the tree.
    UnorderedGrowth,
}

pub fn exact_probability(spec: &FamilySpec, tree: &BucketTree, measure: Measure) -> Result<Q> {
    let violations = tree.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidTree(violations));
    }
    if measure != Measure::OrderedModel && !tree.is_canonical() {
        return Err(Error::NotCanonical);
    }
    match measure {
        Measure::OrderedModel => Ok(spec.tree_weight(tree)? / total_weight(spec, tree.size())?),
        Measure::UnorderedModel => {
            let multiplicity = tree
                .nodes()
                .iter()
                .fold(Q::one(), |acc, (_, node)| acc * factorial(node.out_degree() as u64));
            Ok(spec.tree_weight(tree)? * multiplicity / total_weight(spec, tree.size())?)
        }
        Measure::UnorderedGrowth => growth_probability(spec, tree),
    }
}

/// Flat view of a tree: per bucket its labels, parent and children.
struct Flat {
    labels: Vec<Vec<Label>>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    bucket_of: Vec<usize>,
}

impl Flat {
    fn new(tree: &BucketTree) -> Self {
        let mut flat = Flat {
            labels: Vec::new(),
            parent: Vec::new(),
            children: Vec::new(),
            bucket_of: vec![0; tree.size() + 1],
        };
        let mut stack: Vec<(&BucketNode, Option<usize>)> = vec![(tree.root(), None)];
        while let Some((node, parent)) = stack.pop() {
            let id = flat.labels.len();
            flat.labels.push(node.labels().to_vec());
            flat.parent.push(parent);
            flat.children.push(Vec::new());
            if let Some(p) = parent {
                flat.children[p].push(id);
            }
            for &l in node.labels() {
                flat.bucket_of[l as usize] = id;
            }
            for c in node.children().iter().rev() {
                stack.push((c, Some(id)));
            }
        }
        flat
    }

    fn load_before(&self, v: usize, j: Label) -> usize {
        self.labels[v].iter().filter(|&&l| l < j).count()
    }

    fn degree_before(&self, v: usize, j: Label) -> usize {
        self.children[v].iter().filter(|&&c| self.labels[c][0] < j).count()
    }
}

fn growth_probability(spec: &FamilySpec, tree: &BucketTree) -> Result<Q> {
    let flat = Flat::new(tree);
    let mut p = Q::one();
    for j in 2..=tree.size() as Label {
        let v = flat.bucket_of[j as usize];
        let attr = if flat.labels[v][0] == j { flat.parent[v].expect("non-root bucket") } else { v };
        let w = spec.attraction_weight(flat.load_before(attr, j), flat.degree_before(attr, j))?;
        let denom = if spec.is_named() {
            let (c1, c2) = spec.c1_c2()?;
            c1 * int(j as i64 - 1) + c2
        } else {
            let mut sum = Q::zero();
            for u in 0..flat.labels.len() {
                let load = flat.load_before(u, j);
                if load > 0 {
                    sum += spec.attraction_weight(load, flat.degree_before(u, j))?;
                }
            }
            sum
        };
        p *= w / denom;
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    /// Rank of label n within its bucket.
    K,
    /// Labels `>= j` in the subtree rooted at the bucket holding `j`.
    Y(usize),
    /// Out-degree of the bucket holding `j`.
    X(usize),
    /// Number of buckets holding exactly `k` labels.
    N(usize),
    /// Size at which the bucket holding `j` became saturated, or `n`.
    Tau(usize),
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown statistic `{text}`"));
        if text == "K" {
            return Ok(Self::K);
        }
        let (name, arg) = text.split_once(':').ok_or_else(bad)?;
        let arg: usize = arg.parse().map_err(|_| bad())?;
        match name {
            "Y" => Ok(Self::Y(arg)),
            "X" => Ok(Self::X(arg)),
            "N" => Ok(Self::N(arg)),
            "tau" => Ok(Self::Tau(arg)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::K => f.write_str("K"),
            Self::Y(j) => write!(f, "Y:{j}"),
            Self::X(j) => write!(f, "X:{j}"),
            Self::N(k) => write!(f, "N:{k}"),
            Self::Tau(j) => write!(f, "tau:{j}"),
        }
    }
}

/// Value of a statistic on a static tree.
pub fn statistic_value(tree: &BucketTree, statistic: Statistic) -> i64 {
    let n = tree.size();
    let b = tree.capacity_bound() as usize;
    let bucket = |label: usize| tree.node_at(&tree.bucket_of(label as Label).expect("label present")).expect("path");
    match statistic {
        Statistic::K => {
            let node = bucket(n);
            node.labels().iter().position(|&l| l == n as Label).expect("label present") as i64 + 1
        }
        Statistic::Y(j) => bucket(j).subtree_labels().into_iter().filter(|&l| l >= j as Label).count() as i64,
        Statistic::X(j) => bucket(j).out_degree() as i64,
        Statistic::N(k) => tree.nodes().iter().filter(|(_, node)| node.capacity() == k).count() as i64,
        Statistic::Tau(j) => {
            let node = bucket(j);
            if node.capacity() == b {
                node.max_label() as i64
            } else {
                n as i64
            }
        }
    }
}

fn check_statistic(spec: &FamilySpec, n: usize, statistic: Statistic) -> Result<()> {
    match statistic {
        Statistic::K => Ok(()),
        Statistic::Y(j) | Statistic::X(j) | Statistic::Tau(j) if (1..=n).contains(&j) => Ok(()),
        Statistic::N(k) if (1..=spec.b as usize).contains(&k) => Ok(()),
        _ => Err(Error::InvalidParameter(format!("statistic {statistic} out of range for n={n}, b={}", spec.b))),
    }
}

/// Exact PMF of a statistic under the unordered-model measure.
pub fn exact_statistic_pmf(spec: &FamilySpec, n: usize, statistic: Statistic) -> Result<ExactPmf> {
    let set = enumerate_canonical(spec, n)?;
    statistic_pmf_from(&set, spec, statistic)
}

/// Same as [`exact_statistic_pmf`], reusing an existing canonical enumeration.
pub fn statistic_pmf_from(set: &WeightedTreeSet, spec: &FamilySpec, statistic: Statistic) -> Result<ExactPmf> {
    if !set.canonical {
        return Err(Error::NotCanonical);
    }
    check_statistic(spec, set.n, statistic)?;
    let total = set.total_weight();
    Ok(ExactPmf::from_pairs(
        set.trees.iter().map(|(t, w)| (statistic_value(t, statistic), w / &total)),
    ))
}

/// `E[N_{n,k}]` for `k = 1..b`.
pub fn expected_node_counts(spec: &FamilySpec, n: usize) -> Result<BTreeMap<usize, Q>> {
    let set = enumerate_canonical(spec, n)?;
    (1..=spec.b as usize)
        .map(|k| Ok((k, statistic_pmf_from(&set, spec, Statistic::N(k))?.mean())))
        .collect()
}
