//! Increasing diamonds and bucket trees with `b = 2`.
//!
//! A diamond is written `(v)` for an inner node and `<s,l>(F1,...,Fr)` for a
//! smallest node `s`, a largest node `l` and the sub-diamonds between them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{int, Q};
use crate::tree::{BucketNode, BucketTree, Label};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum IncreasingDiamond {
    Inner(Label),
    Composite { small: Label, large: Label, parts: Vec<IncreasingDiamond> },
}

impl IncreasingDiamond {
    pub fn size(&self) -> usize {
        match self {
            Self::Inner(_) => 1,
            Self::Composite { parts, .. } => 2 + parts.iter().map(Self::size).sum::<usize>(),
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out
    }

    fn collect(&self, out: &mut Vec<Label>) {
        match self {
            Self::Inner(v) => out.push(*v),
            Self::Composite { small, large, parts } => {
                out.push(*small);
                out.push(*large);
                parts.iter().for_each(|p| p.collect(out));
            }
        }
    }

    pub fn inner_count(&self) -> usize {
        match self {
            Self::Inner(_) => 1,
            Self::Composite { parts, .. } => parts.iter().map(Self::inner_count).sum(),
        }
    }

    /// Product of `phi_r` over composite nodes with `r` parts.
    pub fn weight(&self, phi: &impl Fn(usize) -> Q) -> Q {
        match self {
            Self::Inner(_) => int(1),
            Self::Composite { parts, .. } => parts.iter().fold(phi(parts.len()), |acc, p| acc * p.weight(phi)),
        }
    }

    /// Checks `small < labels of parts < large` everywhere and that the labels
    /// are exactly `1..=n`.
    pub fn validate(&self) -> Result<()> {
        fn check(d: &IncreasingDiamond) -> Result<(Label, Label)> {
            match d {
                IncreasingDiamond::Inner(v) => Ok((*v, *v)),
                IncreasingDiamond::Composite { small, large, parts } => {
                    if small >= large {
                        return Err(Error::Diamond(format!("<{small},{large}>: smallest not below largest")));
                    }
                    for p in parts {
                        let (lo, hi) = check(p)?;
                        if lo <= *small || hi >= *large {
                            return Err(Error::Diamond(format!("<{small},{large}>: part {p} leaves the range")));
                        }
                    }
                    Ok((*small, *large))
                }
            }
        }
        check(self)?;
        let labels = self.labels();
        if labels.iter().enumerate().any(|(i, &l)| l as usize != i + 1) {
            return Err(Error::Diamond(format!("labels are not 1..={}", labels.len())));
        }
        Ok(())
    }
}

impl fmt::Display for IncreasingDiamond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Inner(v) => write!(f, "({v})"),
            Self::Composite { small, large, parts } => {
                write!(f, "<{small},{large}>(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl FromStr for IncreasingDiamond {
    type Err = Error;

    /// Parses the text form and validates the result.
    fn from_str(text: &str) -> Result<Self> {
        let mut p = Parser { bytes: text.as_bytes(), pos: 0 };
        let d = p.diamond()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("trailing input"));
        }
        d.validate()?;
        Ok(d)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { position: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn label(&mut self) -> Result<Label> {
        self.skip_ws();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        match text.parse::<Label>() {
            Ok(0) => {
                self.pos = start;
                Err(self.error("labels start at 1"))
            }
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                Err(self.error("expected a label"))
            }
        }
    }

    fn diamond(&mut self) -> Result<IncreasingDiamond> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.label()?;
                self.expect(b')')?;
                Ok(IncreasingDiamond::Inner(v))
            }
            Some(b'<') => {
                self.pos += 1;
                let small = self.label()?;
                self.expect(b',')?;
                let large = self.label()?;
                self.expect(b'>')?;
                self.expect(b'(')?;
                let mut parts = Vec::new();
                if self.peek() != Some(b')') {
                    loop {
                        parts.push(self.diamond()?);
                        if self.peek() == Some(b',') {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(b')')?;
                Ok(IncreasingDiamond::Composite { small, large, parts })
            }
            _ => Err(self.error("expected `(` or `<`")),
        }
    }
}

/// A bucket holding the smallest label of its subtree and, unless it is a
/// single-node leaf, the largest one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IncDecNode {
    pub first: Label,
    pub second: Option<Label>,
    pub children: Vec<IncDecNode>,
}

impl IncDecNode {
    pub fn size(&self) -> usize {
        1 + usize::from(self.second.is_some()) + self.children.iter().map(Self::size).sum::<usize>()
    }

    fn relabel(&mut self, f: &impl Fn(Label) -> Label) {
        self.first = f(self.first);
        self.second = self.second.map(f);
        self.children.iter_mut().for_each(|c| c.relabel(f));
    }

    fn collect(&self, out: &mut Vec<Label>) {
        out.push(self.first);
        out.extend(self.second);
        self.children.iter().for_each(|c| c.collect(out));
    }

    fn sorted_labels(&self) -> Vec<Label> {
        let mut out = Vec::with_capacity(self.size());
        self.collect(&mut out);
        out.sort_unstable();
        out
    }

    /// Checks the increasing (first labels) and decreasing (second labels)
    /// conditions.
    pub fn validate(&self) -> Result<()> {
        let labels = self.sorted_labels();
        match self.second {
            None if !self.children.is_empty() => {
                Err(Error::Diamond(format!("bucket ({}|) has children", self.first)))
            }
            Some(s) if labels.first() != Some(&self.first) || labels.last() != Some(&s) => {
                Err(Error::Diamond(format!("bucket ({}|{s}) does not hold its subtree's extremes", self.first)))
            }
            _ => self.children.iter().try_for_each(Self::validate),
        }
    }
}

impl fmt::Display for IncDecNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.second {
            Some(s) => write!(f, "({}|{s})", self.first)?,
            None => write!(f, "({}|)", self.first)?,
        }
        if !self.children.is_empty() {
            f.write_str("[")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

pub fn diamond_to_incdec(diamond: &IncreasingDiamond) -> IncDecNode {
    match diamond {
        IncreasingDiamond::Inner(v) => IncDecNode { first: *v, second: None, children: Vec::new() },
        IncreasingDiamond::Composite { small, large, parts } => IncDecNode {
            first: *small,
            second: Some(*large),
            children: parts.iter().map(diamond_to_incdec).collect(),
        },
    }
}

pub fn incdec_to_diamond(node: &IncDecNode) -> IncreasingDiamond {
    match node.second {
        None => IncreasingDiamond::Inner(node.first),
        Some(large) => IncreasingDiamond::Composite {
            small: node.first,
            large,
            parts: node.children.iter().map(incdec_to_diamond).collect(),
        },
    }
}

/// Relabels by `(l_1)(l_2 l_3 ... l_n)` on the sorted labels (or its inverse).
fn cycle(node: &mut IncDecNode, inverse: bool) {
    let sorted = node.sorted_labels();
    let n = sorted.len();
    if n <= 2 {
        return;
    }
    let rank = |l: Label| sorted.binary_search(&l).expect("label of this subtree");
    let f = |l: Label| {
        let r = rank(l);
        let image = match (r, inverse) {
            (0, _) => 0,
            (r, false) if r == n - 1 => 1,
            (r, false) => r + 1,
            (1, true) => n - 1,
            (r, true) => r - 1,
        };
        sorted[image]
    };
    node.relabel(&f);
}

/// Cycles the labels of the whole subtree, keeps the root bucket, and
/// recurses into the subtrees.
pub fn incdec_to_bucket(node: &IncDecNode) -> Result<BucketTree> {
    node.validate()?;
    fn go(mut node: IncDecNode) -> BucketNode {
        cycle(&mut node, false);
        let mut labels = vec![node.first];
        labels.extend(node.second);
        labels.sort_unstable();
        BucketNode::new(labels, node.children.into_iter().map(go).collect())
    }
    BucketTree::new(2, go(node.clone()))
}

/// Inverse of [`incdec_to_bucket`]: subtrees are inverted first, then the
/// cycle is undone on the whole subtree.
pub fn bucket_to_incdec(tree: &BucketTree) -> Result<IncDecNode> {
    if tree.capacity_bound() != 2 || !tree.is_valid() {
        return Err(Error::Diamond("expected a valid bucket tree with b=2".into()));
    }
    fn go(node: &BucketNode) -> IncDecNode {
        let children = node.children().iter().map(|c| go(c)).collect();
        let mut out = IncDecNode { first: node.labels()[0], second: node.labels().get(1).copied(), children };
        cycle(&mut out, true);
        out
    }
    Ok(go(tree.root()))
}

pub fn diamond_to_bucket(diamond: &IncreasingDiamond) -> Result<BucketTree> {
    diamond.validate()?;
    incdec_to_bucket(&diamond_to_incdec(diamond))
}

pub fn bucket_to_diamond(tree: &BucketTree) -> Result<IncreasingDiamond> {
    Ok(incdec_to_diamond(&bucket_to_incdec(tree)?))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::codec::decode;
    use crate::enumerate::enumerate_trees;
    use crate::family::FamilySpec;
    use crate::scalar::binom_int;

    fn diamond(s: &str) -> IncreasingDiamond {
        s.parse().unwrap()
    }

    /// Ordered trees with phi(t) = 1/(1-t)^3 and psi_1 = 1.
    fn three_bundled() -> FamilySpec {
        let phi: Vec<String> = (0..10).map(|k| binom_int(k + 2, 2).to_string()).collect();
        format!("custom:b=2,phi={},psi=1", phi.join(";")).parse().unwrap()
    }

    #[test]
    fn text_round_trip() {
        for s in ["(1)", "<1,2>()", "<1,3>((2))", "<1,9>((2),<3,5>((4)),<6,8>((7)))"] {
            assert_eq!(diamond(s).to_string(), s);
        }
        assert!("<1,3>((3))".parse::<IncreasingDiamond>().is_err());
        assert!("<1,3>((2)".parse::<IncreasingDiamond>().is_err());
        assert!("<2,3>((1))".parse::<IncreasingDiamond>().is_err());
        assert!("(2)".parse::<IncreasingDiamond>().is_err());
    }

    #[test]
    fn examples() {
        let single = diamond_to_incdec(&diamond("(1)"));
        assert_eq!(single, IncDecNode { first: 1, second: None, children: vec![] });
        assert_eq!(diamond_to_bucket(&diamond("(1)")).unwrap().to_string(), "{1}");
        let d = diamond("<1,3>((2))");
        assert_eq!(diamond_to_incdec(&d).to_string(), "(1|3)[(2|)]");
        assert_eq!(diamond_to_bucket(&d).unwrap().to_string(), "{1,2}({3})");
        let big = diamond("<1,9>((2),<3,5>((4)),<6,8>((7)))");
        let t = diamond_to_bucket(&big).unwrap();
        assert_eq!(t.size(), 9);
        assert_eq!(t.root().out_degree(), 3);
        assert_eq!(bucket_to_diamond(&t).unwrap(), big);
    }

    #[test]
    fn exhaustive_round_trips() {
        let f = three_bundled();
        let phi = |k: usize| binom_int(k as i64 + 2, 2);
        let mut double_factorial = int(1);
        for n in 1..=7 {
            if n >= 3 {
                double_factorial *= int(2 * n as i64 - 3);
            }
            let set = enumerate_trees(&f, n).unwrap();
            let mut seen = BTreeSet::new();
            let mut total = int(0);
            for (t, w) in &set.trees {
                let d = bucket_to_diamond(t).unwrap();
                d.validate().unwrap();
                assert_eq!(d.size(), n);
                assert_eq!(&diamond_to_bucket(&d).unwrap(), t);
                assert_eq!(&d.weight(&phi), w);
                let census = t.census().unwrap();
                assert_eq!(d.inner_count(), census.unsaturated.get(&1).copied().unwrap_or(0));
                total += d.weight(&phi);
                assert!(seen.insert(d.to_string()));
            }
            assert_eq!(total, double_factorial, "n={n}");
        }
    }

    #[test]
    fn shape_is_preserved() {
        fn profile(d: &IncreasingDiamond, out: &mut Vec<usize>) {
            if let IncreasingDiamond::Composite { parts, .. } = d {
                out.push(parts.len());
                parts.iter().for_each(|p| profile(p, out));
            } else {
                out.push(0);
            }
        }
        fn degrees(node: &BucketNode, out: &mut Vec<usize>) {
            out.push(node.out_degree());
            node.children().iter().for_each(|c| degrees(c, out));
        }
        let t = decode("{1,2}({3,5}({6},{8,9}),{4},{7,10}({11}))", 2).unwrap();
        let d = bucket_to_diamond(&t).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        profile(&d, &mut a);
        degrees(t.root(), &mut b);
        assert_eq!(a, b);
        assert_eq!(d.labels(), (1..=11).collect::<Vec<_>>());
    }
}
