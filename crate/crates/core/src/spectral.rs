//! Roots of the unified indicial equation
//! `lambda (lambda+1) ... (lambda+b-1) = (b+kappa) (b+kappa-1) ... (kappa+1)`
//! and the complex helpers used by the bucket-size PMF.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{falling, int, to_f64, Q};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
pub const SEPARATION_TOLERANCE: f64 = 1e-8;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct IndicialRoots {
    pub b: u32,
    pub kappa: Q,
    /// Sorted by descending real part, ties by descending imaginary part.
    pub roots: Vec<Complex64>,
    /// `|C(lambda+b-1, b) - C(b+kappa, b)|` per root: the indicial polynomial
    /// divided by `b!`, evaluated in product form.
    pub residuals: Vec<f64>,
}

impl IndicialRoots {
    pub fn dominant(&self) -> Complex64 {
        self.roots[0]
    }

    /// `Re lambda_2`, or `None` when `b = 1`.
    pub fn second_real(&self) -> Option<f64> {
        self.roots.get(1).map(|r| r.re)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Unsigned Stirling numbers of the first kind `[b, k]` for `k = 0..=b`:
/// the coefficients of the rising factorial `lambda^(b)`.
pub fn stirling_first_unsigned(b: u32) -> Vec<Q> {
    let mut c = vec![Q::one()];
    for i in 0..b {
        // Multiply by (lambda + i).
        let mut next = vec![Q::zero(); c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] += ck * int(i as i64);
        }
        c = next;
    }
    c
}

/// Monic coefficients (constant term first) of
/// `lambda^(b) - (b+kappa)_(b)`.
pub fn indicial_polynomial(b: u32, kappa: &Q) -> Vec<Q> {
    let mut c = stirling_first_unsigned(b);
    c[0] -= falling(&(int(b as i64) + kappa), b);
    c
}

/// `C(b+kappa, b) = prod_{k=0}^{b-1} (kappa+1+k)/(k+1)`.
fn rhs_binomial(b: u32, kappa: f64) -> f64 {
    (0..b).map(|k| (kappa + 1.0 + k as f64) / (k as f64 + 1.0)).product()
}

/// `C(lambda+b-1, b)` as a product.
fn lhs_binomial(lambda: Complex64, b: u32) -> Complex64 {
    (0..b).fold(Complex64::one(), |acc, k| acc * (lambda + k as f64) / (k as f64 + 1.0))
}

fn residual(lambda: Complex64, b: u32, rhs: f64) -> f64 {
    (lhs_binomial(lambda, b) - rhs).norm()
}

/// `p'/p` for `p(lambda) = C(lambda+b-1, b) - rhs`.
fn log_derivative(lambda: Complex64, b: u32, rhs: f64) -> Complex64 {
    let lhs = lhs_binomial(lambda, b);
    let h = harmonic_diff_unchecked(lambda, b);
    lhs * h / (lhs - rhs)
}

fn harmonic_diff_unchecked(lambda: Complex64, b: u32) -> Complex64 {
    (0..b).map(|k| (lambda + k as f64).inv()).sum()
}

/// `H_{lambda+b-1} - H_{lambda-1} = sum_{k=0}^{b-1} 1/(lambda+k)`.
pub fn harmonic_diff(lambda: Complex64, b: u32) -> Result<Complex64> {
    if (0..b).any(|k| (lambda + k as f64).norm() == 0.0) {
        return Err(Error::Spectral(format!("harmonic difference has a pole at lambda = {lambda}")));
    }
    Ok(harmonic_diff_unchecked(lambda, b))
}

pub fn harmonic_diff_exact(lambda: &Q, b: u32) -> Result<Q> {
    (0..b).try_fold(Q::zero(), |acc, k| {
        let t = lambda + int(k as i64);
        if t.is_zero() {
            Err(Error::Spectral(format!("harmonic difference has a pole at lambda = {lambda}")))
        } else {
            Ok(acc + t.recip())
        }
    })
}

/// `C(lambda+offset, m) = prod_{k=1}^{m} (lambda+offset-m+k)/k`.
pub fn gbinom(lambda: Complex64, offset: i64, m: u32) -> Complex64 {
    let top = lambda + offset as f64;
    (1..=m).fold(Complex64::one(), |acc, k| acc * (top - m as f64 + k as f64) / k as f64)
}

pub fn gbinom_exact(lambda: &Q, offset: i64, m: u32) -> Q {
    crate::scalar::binom(&(lambda + int(offset)), m)
}

/// Aberth iteration on the deflated polynomial `p(lambda)/(lambda-lambda_1)`,
/// with `p'/p` evaluated in product form.
fn aberth(b: u32, kappa: f64, lambda1: Complex64) -> Vec<Complex64> {
    let deg = b as usize - 1;
    if deg == 0 {
        return Vec::new();
    }
    let rhs = rhs_binomial(b, kappa);
    let centre = -(b as f64 - 1.0) / 2.0;
    let radius = (b as f64 + 1.0) / 2.0;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * (i as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::new(centre, 0.0) + Complex64::from_polar(radius, theta)
        })
        .collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let ld = log_derivative(z[i], b, rhs) - (z[i] - lambda1).inv();
            let newton = ld.inv();
            let repulsion: Complex64 =
                (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = newton / (Complex64::one() - newton * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            } else {
                // Landed on a pole or a coincident iterate: nudge away.
                z[i] += Complex64::new(1e-3, 1e-3);
                moved = 1.0;
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn polish(mut z: Complex64, b: u32, rhs: f64) -> Complex64 {
    for _ in 0..50 {
        let step = log_derivative(z, b, rhs).inv();
        if !step.is_finite() {
            break;
        }
        let next = z - step;
        if residual(next, b, rhs) >= residual(z, b, rhs) {
            break;
        }
        z = next;
    }
    z
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, c| {
        if (a.re - c.re).abs() > TIE_TOLERANCE {
            c.re.total_cmp(&a.re)
        } else {
            c.im.total_cmp(&a.im)
        }
    });
}

fn solve(b: u32, kappa: &Q) -> Result<IndicialRoots> {
    if b == 0 {
        return Err(Error::InvalidParameter("b must be at least 1".into()));
    }
    if *kappa <= -Q::one() {
        return Err(Error::InvalidParameter("kappa must exceed -1".into()));
    }
    let k = to_f64(kappa);
    let rhs = rhs_binomial(b, k);
    let lambda1 = Complex64::new(1.0 + k, 0.0);
    let mut roots = vec![lambda1];
    roots.extend(aberth(b, k, lambda1).into_iter().map(|z| {
        let z = polish(z, b, rhs);
        // Real roots come out with round-off imaginary parts.
        if z.im.abs() < 1e-13 * (1.0 + z.re.abs()) { Complex64::new(z.re, 0.0) } else { z }
    }));
    sort_roots(&mut roots);
    let residuals: Vec<f64> = roots.iter().map(|&z| residual(z, b, rhs)).collect();
    let result = IndicialRoots { b, kappa: kappa.clone(), roots, residuals };
    check(&result)?;
    Ok(result)
}

fn check(r: &IndicialRoots) -> Result<()> {
    let worst = r.max_residual();
    if worst.is_nan() || worst > RESIDUAL_TOLERANCE {
        return Err(Error::Spectral(format!("residual {worst:e} above {RESIDUAL_TOLERANCE:e} for b={}", r.b)));
    }
    for (i, a) in r.roots.iter().enumerate() {
        for c in &r.roots[i + 1..] {
            if (a - c).norm() <= SEPARATION_TOLERANCE {
                return Err(Error::Spectral(format!("roots {a} and {c} are not separated (b={})", r.b)));
            }
        }
        for k in 0..r.b {
            if (a + k as f64).norm() <= SEPARATION_TOLERANCE {
                return Err(Error::Spectral(format!("root {a} sits on the pole -{k}")));
            }
        }
    }
    let lambda1 = 1.0 + to_f64(&r.kappa);
    if (r.roots[0].re - lambda1).abs() > 1e-12 || r.roots[0].im != 0.0 {
        return Err(Error::Spectral(format!("dominant root {} differs from 1+kappa", r.roots[0])));
    }
    if let Some(second) = r.second_real() {
        if second >= r.roots[0].re {
            return Err(Error::Spectral(format!("no dominance gap: Re lambda_2 = {second}")));
        }
    }
    Ok(())
}

type Cache = Mutex<HashMap<(u32, Q), Arc<IndicialRoots>>>;

/// Solves the indicial equation; results are cached per `(b, kappa)`.
pub fn indicial_roots(b: u32, kappa: &Q) -> Result<Arc<IndicialRoots>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("cache lock").get(&(b, kappa.clone())) {
        return Ok(hit.clone());
    }
    let roots = Arc::new(solve(b, kappa)?);
    cache.lock().expect("cache lock").insert((b, kappa.clone()), roots.clone());
    Ok(roots)
}

/// `|sum_i lambda_i + c_{b-1}|` where `c_{b-1}` is the subleading monic
/// coefficient of the indicial polynomial.
pub fn root_sum_defect(roots: &IndicialRoots) -> f64 {
    let coeffs = indicial_polynomial(roots.b, &roots.kappa);
    let sub = to_f64(&coeffs[roots.b as usize - 1]);
    (roots.roots.iter().sum::<Complex64>() + sub).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a - Complex64::new(re, im)).norm() < 1e-12
    }

    #[test]
    fn small_cases() {
        let r = indicial_roots(1, &int(0)).unwrap();
        assert_eq!(r.roots.len(), 1);
        assert!(close(r.roots[0], 1.0, 0.0));

        let r = indicial_roots(2, &int(0)).unwrap();
        assert!(close(r.roots[0], 1.0, 0.0) && close(r.roots[1], -2.0, 0.0));

        let r = indicial_roots(2, &frac(-1, 2)).unwrap();
        assert!(close(r.roots[0], 0.5, 0.0) && close(r.roots[1], -1.5, 0.0));
    }

    #[test]
    fn stirling_rows() {
        let row: Vec<Q> = stirling_first_unsigned(4);
        assert_eq!(row, vec![int(0), int(6), int(11), int(6), int(1)]);
        assert_eq!(indicial_polynomial(2, &int(0)), vec![int(-2), int(1), int(1)]);
    }

    #[test]
    fn helpers() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert!(close(harmonic_diff(c(1.0), 2).unwrap(), 1.5, 0.0));
        assert!(close(harmonic_diff(c(-2.0), 2).unwrap(), -1.5, 0.0));
        assert!(close(harmonic_diff(c(0.5), 2).unwrap(), 8.0 / 3.0, 0.0));
        assert!(harmonic_diff(c(-1.0), 3).is_err());
        assert_eq!(harmonic_diff_exact(&frac(1, 2), 2).unwrap(), frac(8, 3));

        assert!(close(gbinom(c(1.0), 3, 4), 1.0, 0.0));
        assert!(close(gbinom(c(-2.0), 2, 3), 0.0, 0.0));
        assert!(close(gbinom(c(0.5), 0, 2), -0.125, 0.0));
        assert_eq!(gbinom_exact(&frac(1, 2), 0, 2), frac(-1, 8));
    }

    #[test]
    fn families_up_to_thirty() {
        for kappa in [int(0), int(1), frac(1, 2), frac(-1, 2), frac(-1, 3), frac(-3, 5)] {
            for b in 1..=30 {
                let r = indicial_roots(b, &kappa).unwrap();
                assert_eq!(r.roots.len(), b as usize);
                assert!(r.max_residual() <= RESIDUAL_TOLERANCE, "b={b} kappa={kappa}");
                assert!(root_sum_defect(&r) <= 1e-10, "b={b}: {}", root_sum_defect(&r));
            }
        }
    }

    #[test]
    fn phase_change_for_recursive_trees() {
        for b in 2..=26 {
            assert!(indicial_roots(b, &int(0)).unwrap().second_real().unwrap() < 0.5, "b={b}");
        }
        assert!(indicial_roots(27, &int(0)).unwrap().second_real().unwrap() > 0.5);
    }

    #[test]
    fn conjugate_pairs_ordered() {
        let r = indicial_roots(5, &int(0)).unwrap();
        for w in r.roots.windows(2) {
            if (w[0].re - w[1].re).abs() < 1e-9 {
                assert!(w[0].im > w[1].im);
            }
        }
    }
}
