//! Generalised Polya urns tracking node types, their characteristic
//! polynomials and the link between urn eigenvalues and indicial roots.
//!
//! A ball of type `m < b` stands for one unit of attraction weight of a node
//! holding `m` labels; type `b` collects the saturated nodes.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::family::{FamilyKind, FamilySpec};
use crate::rng::RngStream;
use crate::scalar::{common_denominator, int, to_f64, Q};
use crate::spectral::indicial_roots;

#[derive(Clone, Debug)]
pub struct UrnModel {
    pub family: FamilySpec,
    /// Row `m` is added when a ball of type `m` is drawn.
    pub replacement: Vec<Vec<Q>>,
    pub initial: Vec<Q>,
    /// Per-type divisors as printed with the urn models: the attraction
    /// weight of a node of that type with no children.
    pub divisors: Vec<Q>,
    pub balance: Q,
}

pub fn build_urn(spec: &FamilySpec) -> Result<UrnModel> {
    spec.validate()?;
    let b = spec.b as usize;
    if b < 2 {
        return Err(Error::Unsupported("urn models need b >= 2".into()));
    }
    // Growth weight of an unsaturated node of load m is c1 m + c2.
    let (c1, c2) = spec.c1_c2()?;
    let divisor = |m: usize| &c1 * int(m as i64) + &c2;
    let mut replacement = vec![vec![Q::zero(); b]; b];
    for m in 1..b {
        replacement[m - 1][m - 1] = -divisor(m);
        replacement[m - 1][m] = divisor(m + 1);
    }
    // A saturated node spawns a load-1 child and its own weight changes by
    // the degree coefficient of the growth rule.
    let (_, deg_coeff, _) = spec.attraction_coefficients()?;
    replacement[b - 1][0] = divisor(1);
    replacement[b - 1][b - 1] += deg_coeff;
    let mut initial = vec![Q::zero(); b];
    initial[0] = divisor(1);
    Ok(UrnModel {
        family: spec.clone(),
        replacement,
        initial,
        divisors: (1..=b).map(divisor).collect(),
        balance: c1,
    })
}

impl UrnModel {
    pub fn types(&self) -> usize {
        self.replacement.len()
    }

    /// Node counts from a composition. Unsaturated types divide by their
    /// divisor. Saturated nodes carry a degree-dependent weight, so their count
    /// uses the edge identity: the total out-degree equals the number of nodes minus one.
    pub fn node_estimates(&self, composition: &[Q]) -> Vec<Q> {
        let b = self.types();
        let mut n: Vec<Q> = (0..b - 1).map(|m| &composition[m] / &self.divisors[m]).collect();
        let unsat: Q = n.iter().fold(Q::zero(), |acc, x| acc + x);
        let (_, deg_coeff, _) = self.family.attraction_coefficients().expect("named family");
        // Q_b = N_b * divisor_b + deg_coeff * (N_b + unsat - 1)
        let nb = (&composition[b - 1] - &deg_coeff * (unsat - Q::one())) / (&self.divisors[b - 1] + deg_coeff);
        n.push(nb);
        n
    }

    /// `Q_m / divisor_m` for every type, as printed with the urn models.
    pub fn naive_estimates(&self, composition: &[Q]) -> Vec<Q> {
        composition.iter().zip(&self.divisors).map(|(q, d)| q / d).collect()
    }

    /// Integer scaling of every ball mass.
    fn scale(&self) -> Q {
        let all = self.replacement.iter().flatten().chain(&self.initial);
        Q::from_integer(common_denominator(all))
    }

    fn scaled(&self) -> (i64, Vec<Vec<i64>>, Vec<i64>) {
        let s = self.scale();
        let conv = |q: &Q| (q * &s).to_integer().to_i64().expect("ball counts fit in i64");
        (
            s.to_integer().to_i64().expect("scale fits in i64"),
            self.replacement.iter().map(|row| row.iter().map(conv).collect()).collect(),
            self.initial.iter().map(conv).collect(),
        )
    }

    /// `E[Q_n]` for `n = 0..=steps`: the expectation evolves as
    /// `E Q_{n+1} = E Q_n (I + M / total_n)` because the urn is balanced.
    pub fn exact_means(&self, steps: usize) -> Vec<Vec<Q>> {
        let b = self.types();
        let mut out = vec![self.initial.clone()];
        for _ in 0..steps {
            let cur = out.last().expect("nonempty");
            let total: Q = cur.iter().fold(Q::zero(), |acc, x| acc + x);
            let mut next = cur.clone();
            for (m, row) in self.replacement.iter().enumerate() {
                let p = &cur[m] / &total;
                if p.is_zero() {
                    continue;
                }
                for k in 0..b {
                    next[k] += &p * &row[k];
                }
            }
            out.push(next);
        }
        out
    }
}

/// Compositions after `0..=steps` draws, stored as integer ball counts; the
/// ball mass of a count is `count / scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UrnTrajectory {
    pub scale: i64,
    pub counts: Vec<Vec<i64>>,
}

impl UrnTrajectory {
    pub fn composition(&self, step: usize) -> Vec<Q> {
        self.counts[step].iter().map(|&c| Q::new(c.into(), self.scale.into())).collect()
    }

    pub fn steps(&self) -> usize {
        self.counts.len() - 1
    }
}

/// Integer urn state for fast replicates.
pub struct UrnRunner {
    scale: i64,
    rows: Vec<Vec<i64>>,
    state: Vec<i64>,
    total: i64,
}

impl UrnRunner {
    pub fn new(urn: &UrnModel) -> Self {
        let (scale, rows, state) = urn.scaled();
        let total = state.iter().sum();
        Self { scale, rows, state, total }
    }

    pub fn state(&self) -> &[i64] {
        &self.state
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// One draw; returns the drawn type.
    pub fn draw(&mut self, rng: &mut RngStream) -> Result<usize> {
        let mut target = rng.random_range(0..self.total);
        let mut drawn = self.state.len() - 1;
        for (m, &c) in self.state.iter().enumerate() {
            if target < c {
                drawn = m;
                break;
            }
            target -= c;
        }
        for (s, d) in self.state.iter_mut().zip(&self.rows[drawn]) {
            *s += d;
            if *s < 0 {
                return Err(Error::Urn(format!("negative ball count after drawing type {}", drawn + 1)));
            }
        }
        self.total += self.rows[drawn].iter().sum::<i64>();
        Ok(drawn)
    }

    pub fn composition(&self) -> Vec<Q> {
        self.state.iter().map(|&c| Q::new(c.into(), self.scale.into())).collect()
    }

    /// Node counts from the current composition, in floating point.
    pub fn node_estimates_f64(&self, urn: &UrnModel) -> Vec<f64> {
        urn.node_estimates(&self.composition()).iter().map(to_f64).collect()
    }
}

pub fn simulate_urn(urn: &UrnModel, steps: usize, rng: &mut RngStream) -> Result<UrnTrajectory> {
    let mut runner = UrnRunner::new(urn);
    let mut counts = vec![runner.state.clone()];
    for _ in 0..steps {
        runner.draw(rng)?;
        counts.push(runner.state.clone());
    }
    Ok(UrnTrajectory { scale: runner.scale, counts })
}

/// Polynomial with rational coefficients, constant term first.
pub type Poly = Vec<Q>;

fn poly_mul_linear(p: &Poly, root_shift: &Q) -> Poly {
    // p(x) * (x + root_shift)
    let mut out = vec![Q::zero(); p.len() + 1];
    for (k, c) in p.iter().enumerate() {
        out[k + 1] += c;
        out[k] += c * root_shift;
    }
    out
}

fn trim(mut p: Poly) -> Poly {
    while p.len() > 1 && p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

/// `det(M - lambda I)` by the Faddeev-LeVerrier recursion, exact.
pub fn characteristic_polynomial(m: &[Vec<Q>]) -> Poly {
    let n = m.len();
    // c_n = 1; M_k = M M_{k-1} + c_{n-k+1} I; c_{n-k} = -tr(M M_k)/k.
    let mut coeffs = vec![Q::zero(); n + 1];
    coeffs[n] = Q::one();
    let mut mk = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        let mut prod = vec![vec![Q::zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = Q::zero();
                for l in 0..n {
                    if !m[i][l].is_zero() && !mk[l][j].is_zero() {
                        s += &m[i][l] * &mk[l][j];
                    }
                }
                prod[i][j] = s;
            }
        }
        for (i, row) in prod.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = prod;
        let mut trace = Q::zero();
        for i in 0..n {
            for l in 0..n {
                if !m[i][l].is_zero() && !mk[l][i].is_zero() {
                    trace += &m[i][l] * &mk[l][i];
                }
            }
        }
        coeffs[n - k] = -trace / int(k as i64);
    }
    // coeffs describe det(lambda I - M); flip to det(M - lambda I).
    if n % 2 == 1 {
        coeffs.iter_mut().for_each(|c| *c = -c.clone());
    }
    trim(coeffs)
}

/// The printed closed form of `det(M - lambda I)`, expanded.
pub fn closed_form_characteristic(spec: &FamilySpec) -> Result<Poly> {
    let b = spec.b as usize;
    let (c1, _) = spec.c1_c2()?;
    // prod_k (lambda + shift + k c1) - prod_k (start + k c1)
    let (shift, start) = match &spec.kind {
        FamilyKind::Recursive => (Q::zero(), Q::one()),
        FamilyKind::Port { alpha } => (-Q::one(), alpha.clone()),
        FamilyKind::Ary { d } => (Q::one(), int(*d as i64)),
        _ => return Err(Error::Unsupported("urns exist only for the named families".into())),
    };
    let mut p: Poly = vec![Q::one()];
    let mut constant = Q::one();
    for k in 0..b {
        let kc = &c1 * int(k as i64);
        p = poly_mul_linear(&p, &(&shift + &kc));
        constant *= &start + &kc;
    }
    p[0] -= constant;
    if b % 2 == 1 {
        p.iter_mut().for_each(|c| *c = -c.clone());
    }
    Ok(trim(p))
}

/// Affine map from indicial roots to urn eigenvalues.
pub fn urn_eigen_from_indicial(spec: &FamilySpec, lambda: Complex64) -> Result<Complex64> {
    Ok(match &spec.kind {
        FamilyKind::Recursive => lambda,
        FamilyKind::Port { alpha } => lambda * (to_f64(alpha) + 1.0) + 1.0,
        FamilyKind::Ary { d } => lambda * (*d as f64 - 1.0) - 1.0,
        _ => return Err(Error::Unsupported("urns exist only for the named families".into())),
    })
}

/// Relative backward error of `lambda` as an eigenvalue of `m`:
/// `sigma_min(M - lambda I) / ||M - lambda I||_2`.
pub fn eigen_backward_error(m: &[Vec<Q>], lambda: Complex64) -> f64 {
    let n = m.len();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(to_f64(&m[i][j]), 0.0);
        if i == j { v - lambda } else { v }
    });
    let sv = shifted.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

#[derive(Clone, Debug)]
pub struct UrnSpectrum {
    pub characteristic: Poly,
    pub closed_form_matches: bool,
    pub eigenvalues: Vec<Complex64>,
    pub backward_errors: Vec<f64>,
    /// `Re lambda_2 / lambda_1`; above one half the node-type fluctuations
    /// are no longer normal.
    pub phase_indicator: f64,
}

impl UrnSpectrum {
    pub fn normal_regime(&self) -> bool {
        self.phase_indicator < 0.5
    }
}

pub fn urn_spectrum(urn: &UrnModel) -> Result<UrnSpectrum> {
    let spec = &urn.family;
    let characteristic = characteristic_polynomial(&urn.replacement);
    let closed = closed_form_characteristic(spec)?;
    let closed_form_matches = characteristic == closed;
    let roots = indicial_roots(spec.b, &spec.kappa()?)?;
    let eigenvalues: Vec<Complex64> =
        roots.roots.iter().map(|&l| urn_eigen_from_indicial(spec, l)).collect::<Result<_>>()?;
    let backward_errors = eigenvalues.iter().map(|&l| eigen_backward_error(&urn.replacement, l)).collect();
    let lambda1 = eigenvalues[0].re;
    let phase_indicator = eigenvalues.get(1).map_or(f64::NEG_INFINITY, |l| l.re / lambda1);
    if (lambda1 - to_f64(&urn.balance)).abs() > 1e-12 {
        return Err(Error::Urn(format!("dominant eigenvalue {lambda1} differs from the balance {}", urn.balance)));
    }
    Ok(UrnSpectrum { characteristic, closed_form_matches, eigenvalues, backward_errors, phase_indicator })
}

/// Checks that each row of the replacement matrix adds `balance` balls.
pub fn is_balanced(urn: &UrnModel) -> bool {
    urn.replacement.iter().all(|row| row.iter().fold(Q::zero(), |a, x| a + x) == urn.balance)
        && urn.initial.iter().all(|x| !x.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::frac;

    fn spec(s: &str) -> FamilySpec {
        s.parse().unwrap()
    }

    fn q(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn printed_matrices() {
        let u = build_urn(&spec("recursive:b=2")).unwrap();
        assert_eq!(u.replacement, vec![q(&[-1, 2]), q(&[1, 0])]);
        assert_eq!(u.divisors, q(&[1, 2]));
        assert_eq!(u.initial, q(&[1, 0]));

        let u = build_urn(&spec("port:b=2,alpha=1")).unwrap();
        assert_eq!(u.replacement, vec![q(&[-1, 3]), q(&[1, 1])]);
        assert_eq!(u.balance, int(2));

        let u = build_urn(&spec("ary:b=2,d=2")).unwrap();
        assert_eq!(u.replacement, vec![q(&[-2, 3]), q(&[2, -1])]);
        assert_eq!(u.balance, int(1));

        let u = build_urn(&spec("port:b=3,alpha=2")).unwrap();
        assert_eq!(u.replacement, vec![q(&[-2, 5, 0]), q(&[0, -5, 8]), q(&[2, 0, 1])]);
        let u = build_urn(&spec("ary:b=3,d=3")).unwrap();
        assert_eq!(u.replacement, vec![q(&[-3, 5, 0]), q(&[0, -5, 7]), q(&[3, 0, -1])]);
        assert_eq!(u.divisors, q(&[3, 5, 7]));

        assert!(build_urn(&spec("recursive:b=1")).is_err());
        for s in ["recursive:b=4", "port:b=3,alpha=1/2", "ary:b=4,d=3"] {
            assert!(is_balanced(&build_urn(&spec(s)).unwrap()));
        }
    }

    #[test]
    fn forced_first_steps() {
        let u = build_urn(&spec("recursive:b=2")).unwrap();
        let t = simulate_urn(&u, 2, &mut RngStream::new(1)).unwrap();
        assert_eq!(t.counts, vec![vec![1, 0], vec![0, 2], vec![1, 2]]);
        assert_eq!(u.node_estimates(&t.composition(2)), q(&[1, 1]));
    }

    #[test]
    fn saturated_counts_use_the_edge_identity() {
        // port b=2, alpha=1 at size 3 is {1,2}({3}): Q = (1, 4).
        let u = build_urn(&spec("port:b=2,alpha=1")).unwrap();
        assert_eq!(u.node_estimates(&q(&[1, 4])), q(&[1, 1]));
        assert_eq!(u.naive_estimates(&q(&[1, 4])), vec![int(1), frac(4, 3)]);
        // ary b=2, d=2 at size 3: Q = (2, 2).
        let u = build_urn(&spec("ary:b=2,d=2")).unwrap();
        assert_eq!(u.node_estimates(&q(&[2, 2])), q(&[1, 1]));
    }

    #[test]
    fn totals_grow_by_the_balance() {
        let mut rng = RngStream::new(4);
        for s in ["recursive:b=3", "port:b=3,alpha=1/2", "ary:b=3,d=2"] {
            let u = build_urn(&spec(s)).unwrap();
            let t = simulate_urn(&u, 200, &mut rng).unwrap();
            let start: i64 = t.counts[0].iter().sum();
            let balance = (&u.balance * int(t.scale)).to_integer().to_i64().unwrap();
            for (i, c) in t.counts.iter().enumerate() {
                assert_eq!(c.iter().sum::<i64>(), start + i as i64 * balance);
            }
        }
    }

    #[test]
    fn characteristic_polynomials() {
        let u = build_urn(&spec("recursive:b=2")).unwrap();
        assert_eq!(characteristic_polynomial(&u.replacement), q(&[-2, 1, 1]));
        for s in ["recursive:b=5", "port:b=4,alpha=2", "port:b=3,alpha=1/3", "ary:b=5,d=3"] {
            let u = build_urn(&spec(s)).unwrap();
            assert_eq!(characteristic_polynomial(&u.replacement), closed_form_characteristic(&u.family).unwrap());
        }
    }

    #[test]
    fn spectra() {
        let s = urn_spectrum(&build_urn(&spec("recursive:b=2")).unwrap()).unwrap();
        assert!((s.eigenvalues[0] - 1.0).norm() < 1e-12 && (s.eigenvalues[1] + 2.0).norm() < 1e-12);
        let s = urn_spectrum(&build_urn(&spec("port:b=2,alpha=1")).unwrap()).unwrap();
        // 1 + 2 * {1/2, -3/2}; the matrix ((-1,3),(1,1)) has characteristic polynomial x^2 - 4.
        assert!((s.eigenvalues[0] - 2.0).norm() < 1e-12 && (s.eigenvalues[1] + 2.0).norm() < 1e-12);
        assert!(s.closed_form_matches);
        let m = build_urn(&spec("recursive:b=6")).unwrap();
        let sp = urn_spectrum(&m).unwrap();
        assert!(sp.backward_errors.iter().all(|&e| e < 1e-12));
        // A point off the spectrum is rejected.
        assert!(eigen_backward_error(&m.replacement, sp.eigenvalues[1] + 0.1) > 1e-4);
    }

    #[test]
    fn exact_mean_recursion() {
        let u = build_urn(&spec("recursive:b=2")).unwrap();
        let means = u.exact_means(3);
        assert_eq!(means[2], q(&[1, 2]));
        // Size 4: {1,2}({3,4}) w.p. 1/3 gives Q=(0,4); {1,2}({3},{4}) gives (2,2).
        assert_eq!(means[3], vec![frac(4, 3), frac(8, 3)]);
    }
}
