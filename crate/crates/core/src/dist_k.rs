//! The initial bucket size `K_n`: the load of the bucket receiving label `n`
//! right after the insertion.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::pmf::{ExactPmf, FloatPmf, Pmf};
use crate::scalar::{binom, binom_int, harmonic_shift, int, to_f64, Scalar, Q};
use crate::spectral::{gbinom, harmonic_diff, indicial_roots};
use crate::urns::build_urn;

/// Largest imaginary part tolerated in a closed-form mass before it is
/// discarded.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

fn require_named(spec: &FamilySpec) -> Result<()> {
    spec.validate()?;
    if spec.is_named() {
        Ok(())
    } else {
        Err(Error::Unsupported("bucket-size laws are available for the recursive, ary and PORT families".into()))
    }
}

/// `P{K_n = m}` from the closed formula over the indicial roots:
///
/// `sum_i R_i(n) C(l_i+b-1, b-m) C(m-1+kappa, m-1)
///   / (C(b, m-1) (b-m+1) C(b+kappa, b) (H_{l_i+b-1} - H_{l_i-1}))`
///
/// with `R_i(n) = C(l_i+n-2, n-1) / C(n-1+kappa, n-1)` accumulated factor by
/// factor.
pub fn pmf_k(spec: &FamilySpec, n: usize) -> Result<FloatPmf> {
    require_named(spec)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let b = spec.b;
    if n <= b as usize {
        return Ok(FloatPmf::point(n as i64));
    }
    let kappa = spec.kappa()?;
    let k = to_f64(&kappa);
    let roots = indicial_roots(b, &kappa)?;
    let ratios: Vec<Complex64> = roots
        .roots
        .iter()
        .map(|&l| (1..n).fold(Complex64::one(), |acc, j| acc * (l - 1.0 + j as f64) / (k + j as f64)))
        .collect();
    let harmonics: Vec<Complex64> =
        roots.roots.iter().map(|&l| harmonic_diff(l, b)).collect::<Result<_>>()?;
    let rhs = to_f64(&binom(&(int(b as i64) + &kappa), b));
    let mut pmf = FloatPmf::empty();
    for m in 1..=b {
        let fixed = to_f64(&binom(&(int(m as i64 - 1) + &kappa), m - 1))
            / (to_f64(&binom_int(b as i64, m - 1)) * (b - m + 1) as f64 * rhs);
        let mass: Complex64 = roots
            .roots
            .iter()
            .zip(&ratios)
            .zip(&harmonics)
            .map(|((&l, r), h)| r * gbinom(l, b as i64 - 1, b - m) / h)
            .sum::<Complex64>()
            * fixed;
        if mass.im.abs() > IMAGINARY_TOLERANCE {
            return Err(Error::ImaginaryResidue { m: m as i64, residue: mass.im.abs() });
        }
        pmf.add(m as i64, mass.re);
    }
    Ok(pmf)
}

/// Exact `P{K_n = m}` from the expected urn composition: the label `n`
/// lands in a bucket of load `m-1 >= 1` with probability
/// `E Q_{n-1,m-1} / total`, and opens a new bucket with probability
/// `E Q_{n-1,b} / total`.
pub fn pmf_k_exact(spec: &FamilySpec, n: usize) -> Result<ExactPmf> {
    Ok(pmf_k_exact_table(spec, n)?.pop().expect("nonempty"))
}

/// Exact PMFs of `K_1, ..., K_n`.
pub fn pmf_k_exact_table(spec: &FamilySpec, n: usize) -> Result<Vec<ExactPmf>> {
    require_named(spec)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let b = spec.b as usize;
    if b == 1 {
        return Ok(vec![ExactPmf::point(1); n]);
    }
    let urn = build_urn(spec)?;
    let means = urn.exact_means(n.saturating_sub(2));
    let mut out = vec![ExactPmf::point(1)];
    for size in 2..=n {
        // Composition of a tree of size `size - 1`.
        let q = &means[size - 2];
        let total: Q = q.iter().fold(Q::zero(), |acc, x| acc + x);
        let mut pmf = ExactPmf::empty();
        pmf.add(1, &q[b - 1] / &total);
        for m in 2..=b {
            pmf.add(m as i64, &q[m - 2] / &total);
        }
        out.push(pmf);
    }
    Ok(out)
}

/// Limit law of `K_n`:
/// `C(b+kappa, b-m) C(m-1+kappa, m-1)
///   / (C(b, m-1) (b-m+1) C(b+kappa, b) (H_{b+kappa} - H_kappa))`.
pub fn limit_k(spec: &FamilySpec) -> Result<ExactPmf> {
    require_named(spec)?;
    let b = spec.b;
    let kappa = spec.kappa()?;
    let top = int(b as i64) + &kappa;
    let denom_common = binom(&top, b) * harmonic_shift(&kappa, b);
    Ok(ExactPmf::from_pairs((1..=b).map(|m| {
        let num = binom(&top, b - m) * binom(&(int(m as i64 - 1) + &kappa), m - 1);
        let den = binom_int(b as i64, m - 1) * int((b - m + 1) as i64) * &denom_common;
        (m as i64, num / den)
    })))
}

/// `P{K_{n+1} = m}` from the expected node counts `E N_{n,k}`, `k = 1..b`.
///
/// For `m >= 2` the label joins a load-`(m-1)` bucket; for `m = 1` it
/// attaches to a saturated bucket whose weight depends on its out-degree,
/// which is accounted for by the edge identity `sum deg = sum_k N_k - 1`.
pub fn node_type_relation<T: Scalar>(
    spec: &FamilySpec,
    n: usize,
    expected_counts: &BTreeMap<usize, T>,
) -> Result<Pmf<T>> {
    require_named(spec)?;
    let b = spec.b as usize;
    if expected_counts.keys().any(|&k| k == 0 || k > b) || expected_counts.len() != b {
        return Err(Error::InvalidParameter(format!("expected counts must cover exactly 1..={b}")));
    }
    let (c1, c2) = spec.c1_c2()?;
    let (_, deg_coeff, _) = spec.attraction_coefficients()?;
    let weight = |load: usize| T::from_q(&(&c1 * int(load as i64) + &c2));
    let total = weight(n);
    let mut pmf = Pmf::empty();
    for m in 2..=b {
        pmf.add(m as i64, expected_counts[&(m - 1)].clone() * weight(m - 1) / total.clone());
    }
    let nodes = expected_counts.values().fold(T::zero(), |acc, x| acc + x.clone());
    let saturated = expected_counts[&b].clone() * weight(b) + T::from_q(&deg_coeff) * (nodes - T::one());
    pmf.add(1, saturated / total);
    Ok(pmf)
}
