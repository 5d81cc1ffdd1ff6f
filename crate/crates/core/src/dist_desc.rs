//! Descendants `Y_{n,j}`, saturation time `tau_{n,j}` and out-degree
//! `X_{n,j}` of the bucket holding label `j`.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma_lr;

use crate::dist_k::pmf_k_exact;
use crate::error::{Error, Result};
use crate::family::{FamilyKind, FamilySpec};
use crate::grow::GrowthEngine;
use crate::pmf::{ExactPmf, FloatPmf, Pmf};
use crate::rng::RngStream;
use crate::scalar::{binom_int, int, rising, to_f64, Scalar, Q};

fn require_named(spec: &FamilySpec) -> Result<(Q, Q)> {
    spec.validate()?;
    if !spec.is_named() {
        return Err(Error::Unsupported("descendant laws are available for the recursive, ary and PORT families".into()));
    }
    spec.c1_c2()
}

fn check_range(n: usize, j: usize) -> Result<()> {
    if j == 0 || n < j {
        return Err(Error::InvalidParameter(format!("need 1 <= j <= n, got j={j}, n={n}")));
    }
    Ok(())
}

/// Law of `Y_{i,l,j}` for `i = j, j+1, ...`, advanced one insertion at a time:
///
/// `P{Y_{i+1}=m} = (c1(m+l-2)+c2)/(c1 i+c2) P{Y_i=m-1}
///   + c1(i+1-m-l)/(c1 i+c2) P{Y_i=m}`.
///
/// With a cap, only the masses at `1..=cap` are tracked; they are exact since
/// the recurrence never moves mass downwards.
#[derive(Clone, Debug)]
pub struct DescendantDP<T> {
    c1: T,
    c2: T,
    ell: usize,
    i: usize,
    cap: Option<usize>,
    /// `row[m-1] = P{Y_i = m}`.
    row: Vec<T>,
}

impl<T: Scalar> DescendantDP<T> {
    pub fn new(spec: &FamilySpec, ell: usize, j: usize) -> Result<Self> {
        let (c1, c2) = require_named(spec)?;
        let b = spec.b as usize;
        if j <= b {
            return Err(Error::InvalidParameter(format!("j={j} <= b={b}: Y_{{n,j}} = n+1-j is deterministic")));
        }
        if ell == 0 || ell > b {
            return Err(Error::InvalidParameter(format!("initial bucket size {ell} outside 1..={b}")));
        }
        Ok(Self { c1: T::from_q(&c1), c2: T::from_q(&c2), ell, i: j, cap: None, row: vec![T::one()] })
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap.max(1));
        self
    }

    /// Current tree size.
    pub fn size(&self) -> usize {
        self.i
    }

    pub fn mass(&self, m: usize) -> T {
        if m == 0 {
            return T::zero();
        }
        self.row.get(m - 1).cloned().unwrap_or_else(T::zero)
    }

    /// `P{Y_i <= m}` (only meaningful up to the cap).
    pub fn cumulative(&self, m: usize) -> T {
        self.row.iter().take(m).fold(T::zero(), |acc, x| acc + x.clone())
    }

    /// The probability that label `i+1` descends from `j` given `Y_i = y`.
    pub fn attach_probability(&self, y: usize) -> T {
        self.weight(y + self.ell - 1) / self.weight(self.i)
    }

    fn weight(&self, load: usize) -> T {
        self.c1.clone() * T::from_i64(load as i64) + self.c2.clone()
    }

    pub fn step(&mut self) {
        let total = self.weight(self.i);
        let len = match self.cap {
            Some(cap) => (self.row.len() + 1).min(cap),
            None => self.row.len() + 1,
        };
        let mut next = Vec::with_capacity(len);
        for m in 1..=len {
            let stay = if m <= self.row.len() {
                let out = T::from_i64((self.i + 1 - m - self.ell) as i64) * self.c1.clone();
                self.row[m - 1].clone() * out
            } else {
                T::zero()
            };
            let up = if m >= 2 { self.row[m - 2].clone() * self.weight(m + self.ell - 2) } else { T::zero() };
            next.push((stay + up) / total.clone());
        }
        self.row = next;
        self.i += 1;
    }

    pub fn advance_to(&mut self, n: usize) {
        while self.i < n {
            self.step();
        }
    }

    pub fn pmf(&self) -> Pmf<T> {
        Pmf::from_pairs(self.row.iter().enumerate().map(|(k, p)| (k as i64 + 1, p.clone())))
    }
}

/// Law of `Y_{n,j}` given `K_j = l`, for `j > b`.
pub fn pmf_y_conditional<T: Scalar>(spec: &FamilySpec, n: usize, ell: usize, j: usize) -> Result<Pmf<T>> {
    check_range(n, j)?;
    let mut dp = DescendantDP::new(spec, ell, j)?;
    dp.advance_to(n);
    Ok(dp.pmf())
}

/// Exact law of `K_j` as mixing weights.
fn k_weights<T: Scalar>(spec: &FamilySpec, j: usize) -> Result<Vec<(usize, T)>> {
    Ok(pmf_k_exact(spec, j)?.iter().map(|(l, p)| (l as usize, T::from_q(p))).collect())
}

/// Law of `Y_{n,j}`: deterministic `n+1-j` for `j <= b`, otherwise the
/// conditional law mixed over the initial bucket size `K_j`.
pub fn pmf_y<T: Scalar>(spec: &FamilySpec, n: usize, j: usize) -> Result<Pmf<T>> {
    require_named(spec)?;
    check_range(n, j)?;
    if j <= spec.b as usize {
        return Ok(Pmf::point((n + 1 - j) as i64));
    }
    let parts = k_weights::<T>(spec, j)?
        .into_iter()
        .map(|(l, w)| Ok((w, pmf_y_conditional::<T>(spec, n, l, j)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Pmf::mixture(parts.iter().map(|(w, p)| (w.clone(), p))))
}

/// `P{label m joins the bucket of j | that bucket holds b-1 labels}`.
pub fn saturation_probability<T: Scalar>(spec: &FamilySpec, m: usize) -> Result<T> {
    let (c1, c2) = require_named(spec)?;
    let w = |k: usize| T::from_q(&(&c1 * int(k as i64) + &c2));
    Ok(w(spec.b as usize - 1) / w(m - 1))
}

/// Law of the saturation time `tau_{n,j}`: the label that filled the bucket
/// of `j`, or `n` if that bucket is still unsaturated at size `n`.
pub fn pmf_tau<T: Scalar>(spec: &FamilySpec, n: usize, j: usize) -> Result<Pmf<T>> {
    require_named(spec)?;
    check_range(n, j)?;
    let b = spec.b as usize;
    if j <= b {
        return Ok(Pmf::point(b.min(n) as i64));
    }
    let mut pmf = Pmf::empty();
    for (ell, weight) in k_weights::<T>(spec, j)? {
        if ell == b {
            pmf.add(j as i64, weight);
            continue;
        }
        if n == j {
            pmf.add(j as i64, weight);
            continue;
        }
        let gap = b - ell;
        let mut dp = DescendantDP::<T>::new(spec, ell, j)?.with_cap(gap + 1);
        for m in j + 1..=n {
            // dp holds Y_{m-1}.
            let fill = dp.mass(gap) * saturation_probability::<T>(spec, m)?;
            if m < n {
                pmf.add(m as i64, weight.clone() * fill);
            } else {
                dp.step();
                let open = dp.cumulative(gap);
                pmf.add(n as i64, weight.clone() * (open + fill));
            }
            if m < n {
                dp.step();
            }
        }
    }
    Ok(pmf)
}

/// Law of the out-degree `X_{n,j}` for bucket recursive trees and PORTs.
///
/// After saturation at time `tau`, label `s` attaches to the bucket with
/// probability `(c1 b + c2 + s_deg x)/(c1(s-1)+c2)` given out-degree `x`,
/// where `s_deg` is 0 for recursive trees and 1 for PORTs. For recursive
/// trees this is a sum of independent `Be(b/(s-1))`; for PORTs it is the
/// number of white draws of the triangular urn started at
/// `(b(alpha+1)-1, (alpha+1)(tau-b))`.
pub fn pmf_x<T: Scalar>(spec: &FamilySpec, n: usize, j: usize) -> Result<Pmf<T>> {
    let (c1, c2) = require_named(spec)?;
    check_range(n, j)?;
    if matches!(spec.kind, FamilyKind::Ary { .. }) {
        return Err(Error::Unsupported("the out-degree law of (b,d)-ary trees is not provided".into()));
    }
    let tau = pmf_tau::<T>(spec, n, j)?;
    if let Some(t) = tau.support().last() {
        if t as usize > n {
            return Err(Error::InvalidParameter(format!("saturation time {t} exceeds n={n}")));
        }
    }
    let (_, deg_coeff, _) = spec.attraction_coefficients()?;
    let b = spec.b as usize;
    let base = T::from_q(&(&c1 * int(b as i64) + &c2));
    let deg = T::from_q(&deg_coeff);
    let start = tau.support().next().unwrap_or(n as i64) as usize;
    // f[x] = P{saturated by the current size and X = x}.
    let mut f: Vec<T> = Vec::new();
    for s in start..=n {
        if s > start {
            let total = T::from_q(&(&c1 * int(s as i64 - 1) + &c2));
            let mut next = vec![T::zero(); f.len() + 1];
            for (x, mass) in f.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                let p = (base.clone() + deg.clone() * T::from_i64(x as i64)) / total.clone();
                next[x + 1] = next[x + 1].clone() + mass.clone() * p.clone();
                next[x] = next[x].clone() + mass.clone() * (T::one() - p);
            }
            while next.last().is_some_and(|m| m.is_zero()) {
                next.pop();
            }
            f = next;
        }
        let saturating = tau.mass(s as i64);
        if !saturating.is_zero() {
            if f.is_empty() {
                f.push(T::zero());
            }
            f[0] = f[0].clone() + saturating;
        }
    }
    Ok(Pmf::from_pairs(f.into_iter().enumerate().map(|(x, p)| (x as i64, p))))
}

/// Balanced triangular urn with replacement rows `(1, alpha; 0, 1+alpha)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularUrnState {
    pub white: Q,
    pub black: Q,
    pub alpha: Q,
    pub steps: usize,
    pub white_draws: usize,
}

impl TriangularUrnState {
    pub fn new(white: Q, black: Q, alpha: Q) -> Result<Self> {
        if white <= int(0) || black < int(0) || alpha < int(0) {
            return Err(Error::Urn("triangular urn needs white > 0, black >= 0, alpha >= 0".into()));
        }
        Ok(Self { white, black, alpha, steps: 0, white_draws: 0 })
    }

    /// The urn describing the out-degree of a PORT bucket saturated at time
    /// `tau`.
    pub fn for_port(b: u32, alpha: &Q, tau: usize) -> Result<Self> {
        let a1 = alpha + int(1);
        Self::new(&a1 * int(b as i64) - int(1), &a1 * int(tau as i64 - b as i64), alpha.clone())
    }

    pub fn total(&self) -> Q {
        &self.white + &self.black
    }

    pub fn white_probability(&self) -> Q {
        &self.white / self.total()
    }

    pub fn draw(&mut self, rng: &mut RngStream) -> bool {
        let white = rng.random::<f64>() < to_f64(&self.white_probability());
        self.apply(white);
        white
    }

    fn apply(&mut self, white: bool) {
        if white {
            self.white += int(1);
            self.black += &self.alpha;
            self.white_draws += 1;
        } else {
            self.black += &self.alpha + int(1);
        }
        self.steps += 1;
    }

    /// Exact law of the number of white draws in the next `steps` draws.
    pub fn white_draw_pmf(&self, steps: usize) -> ExactPmf {
        let mut row = vec![int(1)];
        let a1 = &self.alpha + int(1);
        for s in 0..steps {
            let total = self.total() + &a1 * int(s as i64);
            let mut next = vec![int(0); row.len() + 1];
            for (x, p) in row.iter().enumerate() {
                let w = (&self.white + int(x as i64)) / &total;
                next[x + 1] += p * &w;
                next[x] += p * (int(1) - w);
            }
            row = next;
        }
        ExactPmf::from_pairs(row.into_iter().enumerate().map(|(x, p)| (x as i64, p)))
    }
}

/// Exact beta-binomial law: `C(N,k) (a)^{(k)} (b)^{(N-k)} / (a+b)^{(N)}`.
pub fn beta_binomial_pmf(trials: usize, a: &Q, b: &Q) -> ExactPmf {
    let den = rising(&(a + b), trials as u32);
    ExactPmf::from_pairs((0..=trials).map(|k| {
        let num = binom_int(trials as i64, k as u32) * rising(a, k as u32) * rising(b, (trials - k) as u32);
        (k as i64, num / &den)
    }))
}

/// Parameters of `Y_{n,l,j} - 1 ~ BetaBinomial(n-j, l+kappa, j-l)`.
pub fn beta_binomial_parameters(spec: &FamilySpec, n: usize, ell: usize, j: usize) -> Result<(usize, Q, Q)> {
    require_named(spec)?;
    check_range(n, j)?;
    if ell == 0 || ell >= j {
        return Err(Error::InvalidParameter(format!("need 1 <= l < j, got l={ell}, j={j}")));
    }
    Ok((n - j, int(ell as i64) + spec.kappa()?, int((j - ell) as i64)))
}

/// `K_j`, sampled by growing a tree to size `j`.
pub fn sample_k(spec: &FamilySpec, j: usize, rng: &mut RngStream) -> Result<usize> {
    let mut engine = GrowthEngine::new(spec, j)?;
    engine.grow_to(j, rng)?;
    Ok(engine.load(engine.node_of_label(j as u32)) as usize)
}

/// `Y_{n,l,j}` by running the descendant indicators insertion by insertion.
pub fn sample_y_chain(spec: &FamilySpec, n: usize, ell: usize, j: usize, rng: &mut RngStream) -> Result<usize> {
    let (c1, c2) = require_named(spec)?;
    check_range(n, j)?;
    let (c1, c2) = (to_f64(&c1), to_f64(&c2));
    let mut y = 1usize;
    for i in j..n {
        let p = (c1 * (ell + y - 1) as f64 + c2) / (c1 * i as f64 + c2);
        if rng.random::<f64>() < p {
            y += 1;
        }
    }
    Ok(y)
}

/// `Y_{n,l,j}` through its beta-binomial representation.
pub fn sample_y_beta_binomial(spec: &FamilySpec, n: usize, ell: usize, j: usize, rng: &mut RngStream) -> Result<usize> {
    let (trials, a, b) = beta_binomial_parameters(spec, n, ell, j)?;
    if trials == 0 {
        return Ok(1);
    }
    let p = Beta::new(to_f64(&a), to_f64(&b))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(rng);
    let k = Binomial::new(trials as u64, p).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng);
    Ok(k as usize + 1)
}

/// Limit regimes for `Y_{n,j}` as `n -> infinity`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `j` fixed: `Y/n -> Beta(K_j+kappa, j-K_j)`.
    FixedJ(usize),
    /// `j -> infinity`, `j = o(n)`: `jY/n -> Gamma(K+kappa, 1)`.
    SmallJ,
    /// `j ~ rho n`: `Y-1 -> NegBin(K+kappa, rho)`.
    Central(f64),
    /// `n-j = o(n)`: `Y -> 1`.
    LargeJ,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LimitComponent {
    Beta { a: f64, b: f64 },
    Gamma { shape: f64 },
    /// `P{k} = C(k+r-1, k) (1-rho)^k rho^r` on `k = 0, 1, ...`.
    NegBin { r: f64, rho: f64 },
    Point(f64),
}

impl LimitComponent {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            Self::Gamma { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, x)
                }
            }
            Self::NegBin { r, rho } => {
                if x < 0.0 {
                    0.0
                } else {
                    beta_reg(r, x.floor() + 1.0, rho)
                }
            }
            Self::Point(at) => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A finite mixture of limit laws, used as a CDF for goodness-of-fit.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitReference {
    pub region: Region,
    pub components: Vec<(f64, LimitComponent)>,
}

impl LimitReference {
    pub fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|(w, c)| w * c.cdf(x)).sum()
    }

    pub fn is_discrete(&self) -> bool {
        self.components.iter().all(|(_, c)| matches!(c, LimitComponent::NegBin { .. } | LimitComponent::Point(_)))
    }
}

/// Limit law of `Y_{n,j}` in the given region, mixed over `k_mix` (the law of
/// `K_j` for fixed `j`, of the limit `K` otherwise).
pub fn limit_reference(spec: &FamilySpec, region: Region, k_mix: &FloatPmf) -> Result<LimitReference> {
    require_named(spec)?;
    let kappa = to_f64(&spec.kappa()?);
    let component = |ell: i64| -> Result<LimitComponent> {
        let r = ell as f64 + kappa;
        Ok(match region {
            Region::FixedJ(j) => {
                if ell as usize >= j {
                    LimitComponent::Point(1.0)
                } else {
                    LimitComponent::Beta { a: r, b: (j as i64 - ell) as f64 }
                }
            }
            Region::SmallJ => LimitComponent::Gamma { shape: r },
            Region::Central(rho) => {
                if !(rho > 0.0 && rho < 1.0) {
                    return Err(Error::InvalidParameter(format!("rho={rho} outside (0, 1)")));
                }
                LimitComponent::NegBin { r, rho }
            }
            Region::LargeJ => LimitComponent::Point(1.0),
        })
    };
    if region == Region::LargeJ {
        return Ok(LimitReference { region, components: vec![(1.0, LimitComponent::Point(1.0))] });
    }
    if let Region::FixedJ(j) = region {
        if j == 0 {
            return Err(Error::InvalidParameter("j must be positive".into()));
        }
    }
    if k_mix.iter().any(|(l, _)| l < 1 || l > spec.b as i64) || !k_mix.is_probability() {
        return Err(Error::InvalidParameter("mixing law must be a probability vector on 1..=b".into()));
    }
    let components = k_mix.iter().map(|(l, &w)| Ok((w, component(l)?))).collect::<Result<Vec<_>>>()?;
    Ok(LimitReference { region, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist_k::limit_k;
    use crate::enumerate::{enumerate_canonical, statistic_pmf_from, Statistic};
    use crate::scalar::frac;

    fn spec(s: &str) -> FamilySpec {
        s.parse().unwrap()
    }

    #[test]
    fn conditional_examples() {
        let f = spec("recursive:b=2");
        assert_eq!(pmf_y_conditional::<Q>(&f, 3, 1, 3).unwrap(), ExactPmf::point(1));
        let p = pmf_y_conditional::<Q>(&f, 4, 1, 3).unwrap();
        assert_eq!(p, ExactPmf::from_pairs([(1, frac(2, 3)), (2, frac(1, 3))]));
        assert!(pmf_y_conditional::<Q>(&f, 4, 1, 2).is_err());
        assert!(pmf_y_conditional::<Q>(&f, 4, 3, 3).is_err());
        for s in ["recursive:b=3", "ary:b=2,d=3", "port:b=3,alpha=1/2"] {
            let f = spec(s);
            for ell in 1..=f.b as usize {
                let mut dp = DescendantDP::<Q>::new(&f, ell, f.b as usize + 2).unwrap();
                for _ in 0..5 {
                    dp.step();
                    assert!(dp.pmf().is_probability(), "{s} l={ell}");
                }
            }
        }
    }

    #[test]
    fn conditional_is_beta_binomial() {
        for s in ["recursive:b=2", "ary:b=3,d=2", "port:b=2,alpha=1", "port:b=3,alpha=3/2"] {
            let f = spec(s);
            let j = f.b as usize + 2;
            for ell in 1..=f.b as usize {
                for n in j..j + 7 {
                    let dp = pmf_y_conditional::<Q>(&f, n, ell, j).unwrap();
                    let (t, a, b) = beta_binomial_parameters(&f, n, ell, j).unwrap();
                    assert_eq!(dp, beta_binomial_pmf(t, &a, &b).shift(1), "{s} n={n} l={ell}");
                }
            }
        }
    }

    #[test]
    fn capped_rows_agree() {
        let f = spec("port:b=4,alpha=2");
        let mut full = DescendantDP::<Q>::new(&f, 2, 6).unwrap();
        let mut capped = DescendantDP::<Q>::new(&f, 2, 6).unwrap().with_cap(3);
        for _ in 0..8 {
            full.step();
            capped.step();
            for m in 1..=3 {
                assert_eq!(full.mass(m), capped.mass(m));
            }
        }
    }

    #[test]
    fn unconditional_examples() {
        let f = spec("recursive:b=2");
        assert_eq!(pmf_y::<Q>(&f, 9, 1).unwrap(), ExactPmf::point(9));
        assert_eq!(pmf_y::<Q>(&f, 4, 3).unwrap().mass(2), frac(1, 3));
    }

    #[test]
    fn tau_examples() {
        let f = spec("recursive:b=2");
        for j in 1..=2 {
            assert_eq!(pmf_tau::<Q>(&f, 6, j).unwrap(), ExactPmf::point(2));
        }
        for n in 5..9 {
            let p = pmf_tau::<Q>(&f, n, 3).unwrap();
            assert_eq!(p.mass(4), frac(1, 3));
            assert!(p.is_probability());
        }
        assert_eq!(pmf_tau::<Q>(&f, 3, 3).unwrap(), ExactPmf::point(3));
    }

    #[test]
    fn x_small_cases() {
        let f = spec("recursive:b=1");
        let p = pmf_x::<Q>(&f, 3, 1).unwrap();
        assert_eq!(p, ExactPmf::from_pairs([(1, frac(1, 2)), (2, frac(1, 2))]));
        assert!(pmf_x::<Q>(&spec("ary:b=2,d=2"), 5, 1).is_err());
        assert_eq!(pmf_x::<Q>(&spec("port:b=3,alpha=1"), 2, 1).unwrap(), ExactPmf::point(0));
    }

    #[test]
    fn recursive_degree_mean() {
        // b = 1: E X_{n,1} = sum_{s=2}^{n} 1/(s-1) = H_{n-1}.
        let f = spec("recursive:b=1");
        for n in 2..12 {
            let h: Q = (1..n).map(|k| frac(1, k as i64)).sum();
            assert_eq!(pmf_x::<Q>(&f, n, 1).unwrap().mean(), h);
        }
    }

    #[test]
    fn port_degree_matches_triangular_urn() {
        let f = spec("port:b=2,alpha=1/2");
        let alpha = frac(1, 2);
        for (n, j) in [(8, 1), (8, 3), (9, 5)] {
            let tau = pmf_tau::<Q>(&f, n, j).unwrap();
            let mut mixed = ExactPmf::empty();
            for (t, w) in tau.iter() {
                let urn = TriangularUrnState::for_port(2, &alpha, t as usize).unwrap();
                mixed = ExactPmf::mixture([(int(1), &mixed), (w.clone(), &urn.white_draw_pmf(n - t as usize))]);
            }
            assert_eq!(pmf_x::<Q>(&f, n, j).unwrap(), mixed, "n={n} j={j}");
        }
    }

    #[test]
    fn all_laws_match_enumeration() {
        for s in ["recursive:b=2", "port:b=2,alpha=1", "ary:b=2,d=2", "recursive:b=3", "port:b=3,alpha=1/2"] {
            let f = spec(s);
            for n in 1..=6 {
                let set = enumerate_canonical(&f, n).unwrap();
                for j in 1..=n {
                    let oracle = |st| statistic_pmf_from(&set, &f, st).unwrap();
                    assert_eq!(pmf_y::<Q>(&f, n, j).unwrap(), oracle(Statistic::Y(j)), "{s} Y n={n} j={j}");
                    assert_eq!(pmf_tau::<Q>(&f, n, j).unwrap(), oracle(Statistic::Tau(j)), "{s} tau n={n} j={j}");
                    if !matches!(f.kind, FamilyKind::Ary { .. }) {
                        assert_eq!(pmf_x::<Q>(&f, n, j).unwrap(), oracle(Statistic::X(j)), "{s} X n={n} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn float_path_agrees() {
        let f = spec("port:b=3,alpha=2");
        let exact = pmf_x::<Q>(&f, 30, 5).unwrap();
        assert!(pmf_x::<f64>(&f, 30, 5).unwrap().max_abs_diff(&exact) < 1e-12);
        let exact = pmf_y::<Q>(&f, 30, 5).unwrap();
        assert!(pmf_y::<f64>(&f, 30, 5).unwrap().max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn limit_descriptors() {
        let f = spec("recursive:b=2");
        let mix = FloatPmf::from_pairs([(1, 0.25), (2, 0.75)]);
        let lim = limit_reference(&f, Region::FixedJ(5), &mix).unwrap();
        assert_eq!(lim.components[0].1, LimitComponent::Beta { a: 1.0, b: 4.0 });
        // Beta(1, 4) and Beta(2, 3) at 1/2.
        let expect = 0.25 * (1.0 - 0.5f64.powi(4)) + 0.75 * 0.6875;
        assert!((lim.cdf(0.5) - expect).abs() < 1e-12);
        assert_eq!(limit_reference(&f, Region::LargeJ, &mix).unwrap().cdf(1.0), 1.0);
        let b1 = spec("port:b=1,alpha=1");
        let nb = limit_reference(&b1, Region::Central(0.3), &FloatPmf::point(1)).unwrap();
        assert_eq!(nb.components, vec![(1.0, LimitComponent::NegBin { r: 0.5, rho: 0.3 })]);
        assert!((nb.cdf(0.0) - 0.3f64.sqrt()).abs() < 1e-12);
        assert!(limit_reference(&f, Region::Central(1.5), &mix).is_err());
        let g = limit_reference(&f, Region::SmallJ, &limit_k(&f).unwrap().to_float()).unwrap();
        assert!((g.cdf(1.0) - (2.0 / 3.0 * (1.0 - (-1.0f64).exp()) + 1.0 / 3.0 * (1.0 - 2.0 * (-1.0f64).exp()))).abs() < 1e-12);
    }

    #[test]
    fn samplers_agree_in_mean() {
        let f = spec("port:b=2,alpha=1");
        let rng = RngStream::new(7);
        let (n, ell, j) = (60, 1, 5);
        let reps = 20_000;
        let exact = to_f64(&pmf_y_conditional::<Q>(&f, n, ell, j).unwrap().mean());
        let chain: f64 =
            (0..reps).map(|i| sample_y_chain(&f, n, ell, j, &mut rng.split(i)).unwrap() as f64).sum::<f64>() / reps as f64;
        let bb: f64 = (0..reps)
            .map(|i| sample_y_beta_binomial(&f, n, ell, j, &mut rng.split(reps + i)).unwrap() as f64)
            .sum::<f64>()
            / reps as f64;
        let sd = pmf_y_conditional::<f64>(&f, n, ell, j)
            .unwrap()
            .iter()
            .map(|(v, p)| p * (v as f64 - exact).powi(2))
            .sum::<f64>()
            .sqrt();
        let se = sd / (reps as f64).sqrt();
        assert!((chain - exact).abs() < 4.0 * se);
        assert!((bb - exact).abs() < 4.0 * se);
        let k = sample_k(&f, 1, &mut rng.split(0)).unwrap();
        assert_eq!(k, 1);
    }
}
