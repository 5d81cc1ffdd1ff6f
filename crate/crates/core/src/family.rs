//! Tree families: weight sequences, the unified parameter kappa, growth-rule
//! coefficients and closed-form total weights.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{binom, factorial, fmt_rational, int, parse_rational, Q};
use crate::tree::BucketTree;

/// Weight sequence given as a function of its index.
pub type WeightFn = Arc<dyn Fn(usize) -> Q + Send + Sync>;

#[derive(Clone)]
pub enum FamilyKind {
    Recursive,
    Ary { d: u32 },
    Port { alpha: Q },
    /// Growth-only family with node weight `alpha (c-1) + beta deg + m`.
    Linear { alpha: Q, beta: Q, m: Q },
    /// Explicit weights; `phi` beyond the listed prefix is zero.
    Custom { phi: Vec<Q>, psi: Vec<Q> },
}

impl fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Recursive => f.write_str("Recursive"),
            Self::Ary { d } => write!(f, "Ary {{ d: {d} }}"),
            Self::Port { alpha } => write!(f, "Port {{ alpha: {alpha} }}"),
            Self::Linear { alpha, beta, m } => write!(f, "Linear {{ alpha: {alpha}, beta: {beta}, m: {m} }}"),
            Self::Custom { phi, psi } => write!(f, "Custom {{ phi: {phi:?}, psi: {psi:?} }}"),
        }
    }
}

impl PartialEq for FamilyKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Recursive, Self::Recursive) => true,
            (Self::Ary { d: a }, Self::Ary { d: b }) => a == b,
            (Self::Port { alpha: a }, Self::Port { alpha: b }) => a == b,
            (Self::Linear { alpha: a1, beta: b1, m: m1 }, Self::Linear { alpha: a2, beta: b2, m: m2 }) => {
                a1 == a2 && b1 == b2 && m1 == m2
            }
            (Self::Custom { phi: p1, psi: s1 }, Self::Custom { phi: p2, psi: s2 }) => p1 == p2 && s1 == s2,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub b: u32,
}

/// Degree weights `phi_k` and bucket weights `psi_1..psi_{b-1}`.
#[derive(Clone)]
pub struct Weights {
    phi: WeightFn,
    pub psi: Vec<Q>,
}

impl Weights {
    pub fn phi(&self, k: usize) -> Q {
        (self.phi)(k)
    }

    /// `psi_k` for `1 <= k < b`.
    pub fn psi(&self, k: usize) -> Q {
        self.psi[k - 1].clone()
    }
}

impl FamilySpec {
    pub fn recursive(b: u32) -> Self {
        Self { kind: FamilyKind::Recursive, b }
    }

    pub fn ary(b: u32, d: u32) -> Self {
        Self { kind: FamilyKind::Ary { d }, b }
    }

    pub fn port(b: u32, alpha: Q) -> Self {
        Self { kind: FamilyKind::Port { alpha }, b }
    }

    pub fn linear(b: u32, alpha: Q, beta: Q, m: Q) -> Self {
        Self { kind: FamilyKind::Linear { alpha, beta, m }, b }
    }

    pub fn custom(b: u32, phi: Vec<Q>, psi: Vec<Q>) -> Self {
        Self { kind: FamilyKind::Custom { phi, psi }, b }
    }

    /// Checks the parameter ranges.
    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::InvalidParameter("b must be at least 1".into()));
        }
        match &self.kind {
            FamilyKind::Ary { d } if *d < 2 => Err(Error::InvalidParameter("d must be at least 2".into())),
            FamilyKind::Port { alpha } if !alpha.is_positive() => {
                Err(Error::InvalidParameter("alpha must be positive".into()))
            }
            FamilyKind::Custom { phi, psi } => {
                if phi.first().is_none_or(|p| !p.is_positive()) {
                    return Err(Error::InvalidParameter("phi_0 must be positive".into()));
                }
                if psi.len() + 1 != self.b as usize {
                    return Err(Error::InvalidParameter(format!("custom family needs {} psi values", self.b - 1)));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_named(&self) -> bool {
        matches!(self.kind, FamilyKind::Recursive | FamilyKind::Ary { .. } | FamilyKind::Port { .. })
    }

    fn named_only(&self, what: &str) -> Result<()> {
        if self.is_named() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{what} is defined only for the recursive, ary and PORT families")))
        }
    }

    /// The same family with capacity bound `b`.
    pub fn with_b(&self, b: u32) -> Self {
        Self { kind: self.kind.clone(), b }
    }

    /// `kappa`: 0, `1/(d-1)` or `-1/(alpha+1)`.
    pub fn kappa(&self) -> Result<Q> {
        let (c1, c2) = self.c1_c2()?;
        Ok(c2 / c1)
    }

    /// Integer-friendly constants with `c2/c1 = kappa`: the total growth
    /// weight of a size-n tree is `c1 n + c2`.
    pub fn c1_c2(&self) -> Result<(Q, Q)> {
        match &self.kind {
            FamilyKind::Recursive => Ok((Q::one(), Q::zero())),
            FamilyKind::Ary { d } => Ok((int(*d as i64 - 1), Q::one())),
            FamilyKind::Port { alpha } => Ok((alpha + Q::one(), -Q::one())),
            _ => Err(Error::Unsupported("kappa is defined only for the recursive, ary and PORT families".into())),
        }
    }

    /// Node growth weight `a_c c + a_deg deg + a_0` as `(a_c, a_deg, a_0)`.
    pub fn attraction_coefficients(&self) -> Result<(Q, Q, Q)> {
        match &self.kind {
            FamilyKind::Recursive => Ok((Q::one(), Q::zero(), Q::zero())),
            FamilyKind::Ary { d } => Ok((int(*d as i64 - 1), -Q::one(), Q::one())),
            FamilyKind::Port { alpha } => Ok((alpha + Q::one(), Q::one(), -Q::one())),
            FamilyKind::Linear { alpha, beta, m } => Ok((alpha.clone(), beta.clone(), m - alpha)),
            FamilyKind::Custom { .. } => {
                Err(Error::Unsupported("custom weight families have no growth rule".into()))
            }
        }
    }

    /// Unnormalised growth weight of a node with load `c` and out-degree `deg`.
    pub fn attraction_weight(&self, c: usize, deg: usize) -> Result<Q> {
        let (ac, ad, a0) = self.attraction_coefficients()?;
        Ok(ac * int(c as i64) + ad * int(deg as i64) + a0)
    }

    /// Checks that every node weight reachable up to size `n` is
    /// nonnegative. Only linear families can fail.
    pub fn check_growth_weights(&self, n: usize) -> Result<()> {
        if !matches!(self.kind, FamilyKind::Linear { .. }) {
            return Ok(());
        }
        let b = self.b as usize;
        let max_deg = n.saturating_sub(b);
        let mut states: Vec<(usize, usize)> = (1..b).map(|c| (c, 0)).collect();
        states.push((b, 0));
        states.push((b, max_deg));
        for (c, deg) in states {
            if self.attraction_weight(c, deg)?.is_negative() {
                return Err(Error::NegativeAttraction(format!(
                    "node with load {c} and out-degree {deg} has weight {}",
                    self.attraction_weight(c, deg)?
                )));
            }
        }
        Ok(())
    }

    /// `T_n` for the b=1 counterpart, which the named families also use as
    /// their own total weight: `prod_{i=1}^{n-1} (c1 i + c2)`.
    pub fn total_weight_closed(&self, n: usize) -> Result<Q> {
        self.named_only("a closed-form total weight")?;
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let (c1, c2) = self.c1_c2()?;
        Ok((1..n).fold(Q::one(), |acc, i| acc * (&c1 * int(i as i64) + &c2)))
    }

    pub fn weights(&self) -> Result<Weights> {
        self.validate()?;
        let b = self.b as usize;
        if let FamilyKind::Custom { phi, psi } = &self.kind {
            let phi = phi.clone();
            return Ok(Weights {
                phi: Arc::new(move |k| phi.get(k).cloned().unwrap_or_else(Q::zero)),
                psi: psi.clone(),
            });
        }
        if matches!(self.kind, FamilyKind::Linear { .. }) {
            return Err(Error::Unsupported("linear families have no combinatorial weights".into()));
        }
        let psi = (1..b).map(|k| self.total_weight_closed(k)).collect::<Result<Vec<_>>>()?;
        let t_b = self.total_weight_closed(b)?;
        let phi: WeightFn = match &self.kind {
            FamilyKind::Recursive => {
                let bq = int(b as i64);
                Arc::new(move |k| &t_b * num_traits::pow(bq.clone(), k) / factorial(k as u64))
            }
            FamilyKind::Ary { d } => {
                let top = int((b * (*d as usize - 1) + 1) as i64);
                Arc::new(move |k| &t_b * binom(&top, k as u32))
            }
            FamilyKind::Port { alpha } => {
                let base = (alpha + Q::one()) * int(b as i64) - int(2);
                Arc::new(move |k| &t_b * binom(&(&base + int(k as i64)), k as u32))
            }
            _ => unreachable!(),
        };
        Ok(Weights { phi, psi })
    }

    /// `w(T)`: product of `phi_deg` over saturated and `psi_c` over
    /// unsaturated nodes.
    pub fn tree_weight(&self, tree: &BucketTree) -> Result<Q> {
        self.tree_weight_with(&self.weights()?, tree)
    }

    pub fn tree_weight_with(&self, weights: &Weights, tree: &BucketTree) -> Result<Q> {
        if tree.capacity_bound() != self.b {
            return Err(Error::InvalidParameter(format!(
                "tree has capacity bound {}, family has {}",
                tree.capacity_bound(),
                self.b
            )));
        }
        let violations = tree.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidTree(violations));
        }
        let b = self.b as usize;
        Ok(tree.nodes().into_iter().fold(Q::one(), |acc, (_, node)| {
            if node.capacity() == b {
                acc * weights.phi(node.out_degree())
            } else {
                acc * weights.psi(node.capacity())
            }
        }))
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[Q]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(";");
        match &self.kind {
            FamilyKind::Recursive => write!(f, "recursive:b={}", self.b),
            FamilyKind::Ary { d } => write!(f, "ary:b={},d={d}", self.b),
            FamilyKind::Port { alpha } => write!(f, "port:b={},alpha={}", self.b, fmt_rational(alpha)),
            FamilyKind::Linear { alpha, beta, m } => write!(
                f,
                "linear:b={},alpha={},beta={},m={}",
                self.b,
                fmt_rational(alpha),
                fmt_rational(beta),
                fmt_rational(m)
            ),
            FamilyKind::Custom { phi, psi } => {
                write!(f, "custom:b={},phi={}", self.b, list(phi))?;
                if !psi.is_empty() {
                    write!(f, ",psi={}", list(psi))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    /// Parses `recursive:b=2`, `ary:b=2,d=3`, `port:b=3,alpha=1/2`,
    /// `linear:b=2,alpha=1,beta=0,m=1` or `custom:b=2,phi=1;2;1,psi=1`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter(format!("family `{text}`: {msg}"));
        let (kind, params) = text.split_once(':').unwrap_or((text, ""));
        let mut b = None;
        let mut d = None;
        let mut alpha = None;
        let mut beta = None;
        let mut m = None;
        let mut phi = None;
        let mut psi = None;
        for part in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
            let rational = || parse_rational(value).ok_or_else(|| bad(format!("`{value}` is not a rational")));
            let list = || -> Result<Vec<Q>> {
                value
                    .split(';')
                    .map(|v| parse_rational(v).ok_or_else(|| bad(format!("`{v}` is not a rational"))))
                    .collect()
            };
            match key.trim() {
                "b" => b = Some(value.parse::<u32>().map_err(|_| bad(format!("b=`{value}`")))?),
                "d" => d = Some(value.parse::<u32>().map_err(|_| bad(format!("d=`{value}`")))?),
                "alpha" => alpha = Some(rational()?),
                "beta" => beta = Some(rational()?),
                "m" => m = Some(rational()?),
                "phi" => phi = Some(list()?),
                "psi" => psi = Some(list()?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        let b = b.unwrap_or(1);
        let spec = match kind.trim() {
            "recursive" => Self::recursive(b),
            "ary" => Self::ary(b, d.ok_or_else(|| bad("missing d".into()))?),
            "port" => Self::port(b, alpha.ok_or_else(|| bad("missing alpha".into()))?),
            "linear" => Self::linear(
                b,
                alpha.ok_or_else(|| bad("missing alpha".into()))?,
                beta.ok_or_else(|| bad("missing beta".into()))?,
                m.ok_or_else(|| bad("missing m".into()))?,
            ),
            "custom" => Self::custom(b, phi.ok_or_else(|| bad("missing phi".into()))?, psi.unwrap_or_default()),
            other => return Err(bad(format!("unknown family kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode;
    use crate::scalar::frac;

    fn spec(s: &str) -> FamilySpec {
        s.parse().unwrap()
    }

    #[test]
    fn weight_sequences() {
        let w = spec("recursive:b=2").weights().unwrap();
        assert_eq!((0..3).map(|k| w.phi(k)).collect::<Vec<_>>(), vec![int(1), int(2), int(2)]);
        assert_eq!(w.psi(1), int(1));

        let w = spec("ary:b=1,d=2").weights().unwrap();
        assert_eq!((0..4).map(|k| w.phi(k)).collect::<Vec<_>>(), vec![int(1), int(2), int(1), int(0)]);

        let w = spec("port:b=2,alpha=1").weights().unwrap();
        assert_eq!((0..4).map(|k| w.phi(k)).collect::<Vec<_>>(), vec![int(1), int(3), int(6), int(10)]);
        assert_eq!(w.psi(1), int(1));

        let w = spec("recursive:b=3").weights().unwrap();
        assert_eq!(w.phi(0), int(2));
        assert_eq!(w.phi(2), int(9));
        assert_eq!(w.psi, vec![int(1), int(1)]);
    }

    #[test]
    fn boundary_identities() {
        for s in ["recursive:b=3", "ary:b=3,d=3", "port:b=3,alpha=2", "port:b=2,alpha=1/2"] {
            let f = spec(s);
            let w = f.weights().unwrap();
            assert_eq!(w.phi(0), f.with_b(1).total_weight_closed(f.b as usize).unwrap());
            for k in 1..f.b as usize {
                assert_eq!(w.psi(k), f.with_b(1).total_weight_closed(k).unwrap());
            }
        }
    }

    #[test]
    fn tree_weights() {
        let f = spec("recursive:b=2");
        assert_eq!(f.tree_weight(&decode("{1,2}({3,4})", 2).unwrap()).unwrap(), int(2));
        assert_eq!(f.tree_weight(&decode("{1,2}({3},{4})", 2).unwrap()).unwrap(), int(2));
        let f = spec("recursive:b=3");
        assert_eq!(f.tree_weight(&decode("{1,2}", 3).unwrap()).unwrap(), f.weights().unwrap().psi(2));
        assert!(f.tree_weight(&decode("{1,2}", 2).unwrap()).is_err());
    }

    #[test]
    fn totals() {
        assert_eq!(spec("recursive:b=2").total_weight_closed(4).unwrap(), int(6));
        assert_eq!(spec("ary:b=2,d=2").total_weight_closed(3).unwrap(), int(6));
        assert_eq!(spec("port:b=2,alpha=1").total_weight_closed(4).unwrap(), int(15));
        assert!(spec("linear:b=2,alpha=1,beta=1,m=1").total_weight_closed(3).is_err());
    }

    #[test]
    fn kappa_table() {
        assert_eq!(spec("recursive:b=4").kappa().unwrap(), int(0));
        assert_eq!(spec("ary:b=2,d=3").kappa().unwrap(), frac(1, 2));
        assert_eq!(spec("port:b=2,alpha=1").kappa().unwrap(), frac(-1, 2));
        assert_eq!(spec("port:b=2,alpha=2/3").kappa().unwrap(), frac(-3, 5));
    }

    #[test]
    fn parse_and_display() {
        for s in [
            "recursive:b=2",
            "ary:b=2,d=3",
            "port:b=3,alpha=1",
            "port:b=2,alpha=1/2",
            "linear:b=2,alpha=1,beta=-1/2,m=3",
            "custom:b=2,phi=1;2;1,psi=1",
        ] {
            assert_eq!(spec(s).to_string(), s);
        }
        assert!("ary:b=2,d=1".parse::<FamilySpec>().is_err());
        assert!("port:b=2,alpha=0".parse::<FamilySpec>().is_err());
        assert!("tree:b=2".parse::<FamilySpec>().is_err());
        assert!("recursive:b=0".parse::<FamilySpec>().is_err());
    }

    #[test]
    fn linear_precondition() {
        assert!(spec("linear:b=2,alpha=1,beta=1,m=1").check_growth_weights(50).is_ok());
        assert!(matches!(
            spec("linear:b=2,alpha=1,beta=-1,m=1").check_growth_weights(50),
            Err(Error::NegativeAttraction(_))
        ));
        assert!(spec("linear:b=2,alpha=1,beta=0,m=0").weights().is_err());
    }
}
