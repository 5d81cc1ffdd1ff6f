//! Finite probability mass functions over the integers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::scalar::{fmt_rational, Scalar, Q};

/// Slack allowed on individual floating masses.
pub const MASS_SLACK: f64 = 1e-12;
/// Allowed deviation of a floating PMF total from one.
pub const TOTAL_TOLERANCE: f64 = 1e-9;

/// A finite PMF. `T` is [`Q`] for exact PMFs and `f64` otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf<T> {
    masses: BTreeMap<i64, T>,
}

pub type ExactPmf = Pmf<Q>;
pub type FloatPmf = Pmf<f64>;

impl<T: Scalar> Default for Pmf<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Scalar> Pmf<T> {
    pub fn empty() -> Self {
        Self { masses: BTreeMap::new() }
    }

    pub fn point(value: i64) -> Self {
        let mut pmf = Self::empty();
        pmf.add(value, T::one());
        pmf
    }

    /// Builds a PMF from `(value, mass)` pairs; repeated values accumulate and
    /// zero masses are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, T)>) -> Self {
        let mut pmf = Self::empty();
        for (v, m) in pairs {
            pmf.add(v, m);
        }
        pmf
    }

    pub fn add(&mut self, value: i64, mass: T) {
        if mass.is_zero() {
            return;
        }
        let slot = self.masses.entry(value).or_insert_with(T::zero);
        *slot = slot.clone() + mass;
        if slot.is_zero() {
            self.masses.remove(&value);
        }
    }

    pub fn mass(&self, value: i64) -> T {
        self.masses.get(&value).cloned().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.masses.values().fold(T::zero(), |acc, m| acc + m.clone())
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.masses.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> + '_ {
        self.masses.iter().map(|(v, m)| (*v, m))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn mean(&self) -> T {
        self.masses
            .iter()
            .fold(T::zero(), |acc, (v, m)| acc + T::from_i64(*v) * m.clone())
    }

    /// Mixture `sum_i w_i * pmf_i`.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (T, &'a Pmf<T>)>) -> Self {
        let mut out = Self::empty();
        for (w, pmf) in parts {
            for (v, m) in pmf.iter() {
                out.add(v, w.clone() * m.clone());
            }
        }
        out
    }

    /// Distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = Self::empty();
        for (a, ma) in self.iter() {
            for (b, mb) in other.iter() {
                out.add(a + b, ma.clone() * mb.clone());
            }
        }
        out
    }

    pub fn shift(&self, by: i64) -> Self {
        Self::from_pairs(self.iter().map(|(v, m)| (v + by, m.clone())))
    }

    pub fn to_float(&self) -> FloatPmf {
        Pmf::from_pairs(self.iter().map(|(v, m)| (v, m.as_f64())))
    }

    /// Largest absolute mass difference over the union of supports.
    pub fn max_abs_diff<U: Scalar>(&self, other: &Pmf<U>) -> f64 {
        let keys: std::collections::BTreeSet<i64> = self.support().chain(other.support()).collect();
        keys.into_iter()
            .map(|k| (self.mass(k).as_f64() - other.mass(k).as_f64()).abs())
            .fold(0.0, f64::max)
    }
}

impl FloatPmf {
    /// Checks the floating invariants: masses above `-MASS_SLACK`, total
    /// within `TOTAL_TOLERANCE` of one.
    pub fn is_probability(&self) -> bool {
        self.masses.values().all(|m| *m >= -MASS_SLACK)
            && (self.total() - 1.0).abs() <= TOTAL_TOLERANCE
    }
}

impl ExactPmf {
    pub fn is_probability(&self) -> bool {
        use num_traits::{One, Signed};
        self.masses.values().all(|m| !m.is_negative()) && self.total().is_one()
    }
}

/// One CSV/document row.
#[derive(Clone, Debug, Serialize)]
pub struct PmfRow {
    pub value: i64,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

impl ExactPmf {
    pub fn rows(&self) -> Vec<PmfRow> {
        self.iter()
            .map(|(v, m)| PmfRow { value: v, probability: m.as_f64(), exact: Some(fmt_rational(m)) })
            .collect()
    }
}

impl FloatPmf {
    pub fn rows(&self) -> Vec<PmfRow> {
        self.iter().map(|(v, m)| PmfRow { value: v, probability: *m, exact: None }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    #[test]
    fn bernoulli_convolution() {
        let a = ExactPmf::from_pairs([(0, frac(1, 2)), (1, frac(1, 2))]);
        let b = ExactPmf::from_pairs([(0, frac(2, 3)), (1, frac(1, 3))]);
        let c = a.convolve(&b);
        assert_eq!(c.mass(0), frac(1, 3));
        assert_eq!(c.mass(1), frac(1, 2));
        assert_eq!(c.mass(2), frac(1, 6));
        assert!(c.is_probability());
    }

    #[test]
    fn zero_masses_vanish() {
        let mut p = FloatPmf::point(3);
        p.add(3, -1.0);
        assert!(p.is_empty());
    }
}
