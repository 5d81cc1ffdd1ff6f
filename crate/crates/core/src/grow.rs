//! Growth processes. Each step a node attracts the next label with
//! probability proportional to its family weight; an unsaturated winner
//! absorbs the label, a saturated one gets a new rightmost child bucket.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::rng::RngStream;
use crate::scalar::{common_denominator, int, Q};
use crate::tree::{BucketNode, BucketTree, NodePath};

/// Attraction probability of every node, in preorder.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractionTable {
    pub entries: Vec<(NodePath, Q)>,
}

impl AttractionTable {
    pub fn total(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |acc, (_, p)| acc + p)
    }

    pub fn probability(&self, path: &[usize]) -> Option<&Q> {
        self.entries.iter().find(|(p, _)| p == path).map(|(_, q)| q)
    }
}

/// Normaliser of the growth rule at size `n`: the closed form `c1 n + c2` for
/// the named families, the plain weight sum otherwise.
fn normaliser(spec: &FamilySpec, n: usize, weight_sum: &Q) -> Result<Q> {
    if spec.is_named() {
        let (c1, c2) = spec.c1_c2()?;
        Ok(c1 * int(n as i64) + c2)
    } else {
        Ok(weight_sum.clone())
    }
}

pub fn attraction_probs(spec: &FamilySpec, tree: &BucketTree) -> Result<AttractionTable> {
    let violations = tree.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidTree(violations));
    }
    let mut weights = Vec::new();
    for (path, node) in tree.nodes() {
        let w = spec.attraction_weight(node.capacity(), node.out_degree())?;
        if w.is_negative() {
            return Err(Error::NegativeAttraction(format!("node {path:?} has weight {w}")));
        }
        weights.push((path, w));
    }
    let sum = weights.iter().fold(Q::zero(), |acc, (_, w)| acc + w);
    let denom = normaliser(spec, tree.size(), &sum)?;
    if denom.is_zero() {
        return Err(Error::NegativeAttraction("all attraction weights are zero".into()));
    }
    Ok(AttractionTable { entries: weights.into_iter().map(|(p, w)| (p, w / &denom)).collect() })
}

/// Growth weights scaled to integers: `a_c c + a_deg deg + a_0`.
#[derive(Clone, Copy, Debug)]
struct IntRule {
    ac: i64,
    ad: i64,
    a0: i64,
}

impl IntRule {
    fn new(spec: &FamilySpec) -> Result<Self> {
        let (ac, ad, a0) = spec.attraction_coefficients()?;
        let scale = Q::from_integer(common_denominator([&ac, &ad, &a0]));
        let to_i64 = |q: Q| -> Result<i64> {
            (q * &scale)
                .to_integer()
                .to_i64()
                .ok_or_else(|| Error::InvalidParameter("growth weights too large".into()))
        };
        Ok(Self { ac: to_i64(ac)?, ad: to_i64(ad)?, a0: to_i64(a0)? })
    }

    fn weight(&self, load: u32, deg: usize) -> i64 {
        self.ac * load as i64 + self.ad * deg as i64 + self.a0
    }
}

/// Fenwick tree over nonnegative integer weights.
#[derive(Clone, Debug, Default)]
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn push(&mut self, value: i64) {
        let i = self.tree.len() + 1;
        let low = i & i.wrapping_neg();
        let mut v = value;
        let mut k = 1;
        while k < low {
            v += self.tree[i - k - 1];
            k <<= 1;
        }
        self.tree.push(v);
    }

    fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose prefix sum exceeds `target`.
    fn find(&self, mut target: i64) -> usize {
        let mut pos = 0;
        let mut step = self.tree.len().next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.tree.len() && self.tree[next - 1] <= target {
                pos = next;
                target -= self.tree[next - 1];
            }
            step >>= 1;
        }
        pos
    }
}

#[derive(Clone, Debug)]
struct EngineNode {
    labels: Vec<u32>,
    parent: Option<u32>,
    children: Vec<u32>,
}

/// What happened to a freshly inserted label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Insertion {
    pub label: u32,
    pub node: u32,
    /// Load of the receiving bucket right after insertion.
    pub load: u32,
    pub new_bucket: bool,
}

/// Mutable arena used by the samplers. Each step costs one uniform integer
/// draw and `O(log n)` bookkeeping.
#[derive(Clone, Debug)]
pub struct GrowthEngine {
    b: u32,
    rule: IntRule,
    nodes: Vec<EngineNode>,
    weights: Fenwick,
    node_weight: Vec<i64>,
    total: i64,
    label_node: Vec<u32>,
}

impl GrowthEngine {
    /// Starts from the single bucket `{1}`. For linear families the growth
    /// weights are checked up to size `horizon`.
    pub fn new(spec: &FamilySpec, horizon: usize) -> Result<Self> {
        spec.validate()?;
        spec.check_growth_weights(horizon.max(1))?;
        let mut engine = Self {
            b: spec.b,
            rule: IntRule::new(spec)?,
            nodes: Vec::with_capacity(horizon),
            weights: Fenwick::default(),
            node_weight: Vec::with_capacity(horizon),
            total: 0,
            label_node: vec![u32::MAX],
        };
        engine.new_node(1, None);
        Ok(engine)
    }

    fn new_node(&mut self, label: u32, parent: Option<u32>) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(EngineNode { labels: vec![label], parent, children: Vec::new() });
        let w = self.rule.weight(1, 0);
        self.weights.push(w);
        self.node_weight.push(w);
        self.total += w;
        self.label_node.push(id);
        id
    }

    fn reweigh(&mut self, node: u32) {
        let n = &self.nodes[node as usize];
        let w = self.rule.weight(n.labels.len() as u32, n.children.len());
        let delta = w - self.node_weight[node as usize];
        self.node_weight[node as usize] = w;
        self.weights.add(node as usize, delta);
        self.total += delta;
    }

    pub fn size(&self) -> usize {
        self.label_node.len() - 1
    }

    pub fn node_of_label(&self, label: u32) -> u32 {
        self.label_node[label as usize]
    }

    pub fn load(&self, node: u32) -> u32 {
        self.nodes[node as usize].labels.len() as u32
    }

    pub fn out_degree(&self, node: u32) -> usize {
        self.nodes[node as usize].children.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn parent(&self, node: u32) -> Option<u32> {
        self.nodes[node as usize].parent
    }

    /// Labels `>= from` in the subtree of `node`.
    pub fn subtree_labels_from(&self, node: u32, from: u32) -> usize {
        let mut stack = vec![node];
        let mut count = 0;
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v as usize];
            count += n.labels.iter().filter(|&&l| l >= from).count();
            stack.extend_from_slice(&n.children);
        }
        count
    }

    /// Attaches label `size + 1` to a node drawn from the growth rule.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<Insertion> {
        if self.total <= 0 {
            return Err(Error::NegativeAttraction("all attraction weights are zero".into()));
        }
        let target = rng.random_range(0..self.total);
        let winner = self.weights.find(target) as u32;
        Ok(self.insert_at(winner))
    }

    fn insert_at(&mut self, winner: u32) -> Insertion {
        let label = self.label_node.len() as u32;
        let w = winner as usize;
        if self.nodes[w].labels.len() < self.b as usize {
            self.nodes[w].labels.push(label);
            self.label_node.push(winner);
            self.reweigh(winner);
            Insertion { label, node: winner, load: self.nodes[w].labels.len() as u32, new_bucket: false }
        } else {
            let child = self.new_node(label, Some(winner));
            self.nodes[w].children.push(child);
            self.reweigh(winner);
            Insertion { label, node: child, load: 1, new_bucket: true }
        }
    }

    /// Grows until the tree has `n` labels.
    pub fn grow_to(&mut self, n: usize, rng: &mut RngStream) -> Result<()> {
        while self.size() < n {
            self.step(rng)?;
        }
        Ok(())
    }

    /// `sum_v weight(v)` equals the normaliser of the growth rule, using
    /// exact integer arithmetic on the scaled weights.
    pub fn weights_sum_to_normaliser(&self, spec: &FamilySpec) -> Result<bool> {
        let direct: i64 = self
            .nodes
            .iter()
            .map(|n| self.rule.weight(n.labels.len() as u32, n.children.len()))
            .sum();
        if !spec.is_named() {
            return Ok(direct == self.total);
        }
        let (c1, c2) = spec.c1_c2()?;
        let (ac, ad, a0) = spec.attraction_coefficients()?;
        let scale = Q::from_integer(common_denominator([&ac, &ad, &a0]));
        let expected = (c1 * int(self.size() as i64) + c2) * scale;
        Ok(expected == Q::from_integer(BigInt::from(direct)))
    }

    /// Immutable snapshot with children in insertion order.
    pub fn to_tree(&self) -> BucketTree {
        let mut built: Vec<Option<Arc<BucketNode>>> = vec![None; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let n = &self.nodes[i];
            let children = n
                .children
                .iter()
                .map(|&c| built[c as usize].take().expect("children are built before parents"))
                .collect();
            built[i] = Some(Arc::new(BucketNode::from_shared(n.labels.clone(), children)));
        }
        BucketTree::from_shared(self.b, built[0].take().expect("root"))
    }
}

pub fn sample_tree(spec: &FamilySpec, n: usize, rng: &mut RngStream) -> Result<BucketTree> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mut engine = GrowthEngine::new(spec, n)?;
    engine.grow_to(n, rng)?;
    Ok(engine.to_tree())
}

/// `count` independent trees; replicate `i` uses `rng.split(i)`.
pub fn sample_trees(spec: &FamilySpec, n: usize, count: usize, rng: &RngStream) -> Result<Vec<BucketTree>> {
    (0..count)
        .into_par_iter()
        .map(|i| sample_tree(spec, n, &mut rng.split(i as u64)))
        .collect()
}
