//! Cross-module verification suite: each criterion compares an
//! implementation against an independent oracle (enumeration, exact
//! recursions, or seeded Monte Carlo) and reports pass/fail with timings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bijections::{
    bucket_to_diamond, cluster_bundled, diamond_to_bucket, uncluster_bundled, weight_preserving_phi, BundleVariant,
};
use crate::dist_desc::{limit_reference, pmf_tau, pmf_x, pmf_y, sample_k, sample_y_beta_binomial, sample_y_chain, Region};
use crate::dist_k::{limit_k, pmf_k, pmf_k_exact};
use crate::enumerate::{
    enumerate_canonical, enumerate_trees, exact_probability, expected_node_counts, statistic_pmf_from, Measure,
    Statistic,
};
use crate::error::{Error, Result};
use crate::family::FamilySpec;
use crate::grow::{attraction_probs, GrowthEngine};
use crate::rng::RngStream;
use crate::scalar::{binom_int, factorial, frac, int, to_f64, Q};
use crate::spectral::{indicial_roots, RESIDUAL_TOLERANCE};
use crate::stats::{counts, gof_chi_square, gof_ks, mean_and_se, SIGNIFICANCE};
use crate::urns::{
    build_urn, characteristic_polynomial, closed_form_characteristic, eigen_backward_error, urn_eigen_from_indicial,
    urn_spectrum, UrnModel, UrnRunner,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Reduced bounds (`n <= 6`, small samples); criteria 1-6.
    Quick,
    /// All criteria at their stated bounds.
    Full,
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "quick" => Ok(Self::Quick),
            "full" => Ok(Self::Full),
            _ => Err(Error::InvalidParameter(format!("unknown level `{text}` (quick|full)"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Quick => "quick",
            Self::Full => "full",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub details: Vec<String>,
    pub elapsed_secs: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} ({}): {} in {:.1}s",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_secs
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub const CRITERIA: [(u8, &str); 8] = [
    (1, "total weights"),
    (2, "growth and model measures agree"),
    (3, "initial bucket size"),
    (4, "indicial roots"),
    (5, "bijections"),
    (6, "urn models"),
    (7, "descendants and degrees"),
    (8, "growth-rule conservation"),
];

/// Collects named checks; a criterion passes iff every check passes.
#[derive(Default)]
struct Checks {
    details: Vec<String>,
    failures: usize,
}

impl Checks {
    fn check(&mut self, ok: bool, message: impl Into<String>) {
        let message = message.into();
        if ok {
            self.details.push(format!("ok: {message}"));
        } else {
            self.failures += 1;
            self.details.push(format!("FAILED: {message}"));
        }
    }

    fn error(&mut self, context: &str, err: Error) {
        self.check(false, format!("{context}: {err}"));
    }

    fn run(&mut self, context: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.error(context, e);
        }
    }
}

fn spec(text: &str) -> FamilySpec {
    text.parse().expect("built-in family")
}

/// Recursive `b in {1,2,3}`, ary `b in {1,2}, d in {2,3}`, PORT
/// `b in {1,2}, alpha in {1,2}`.
pub fn family_grid() -> Vec<FamilySpec> {
    let mut out: Vec<FamilySpec> = (1..=3).map(FamilySpec::recursive).collect();
    for b in 1..=2 {
        for d in 2..=3 {
            out.push(FamilySpec::ary(b, d));
        }
    }
    for b in 1..=2 {
        for a in 1..=2 {
            out.push(FamilySpec::port(b, int(a)));
        }
    }
    out
}

/// `(2n-3)!!`, with the empty product for `n <= 1`.
fn double_factorial_odd(n: usize) -> Q {
    (1..n).fold(int(1), |acc, k| acc * int(2 * k as i64 - 1))
}

fn criterion_1(level: Level, c: &mut Checks) {
    let n_max = if level == Level::Full { 8 } else { 6 };
    for f in family_grid() {
        c.run(&f.to_string(), |c| {
            let mut bad = Vec::new();
            for n in 1..=n_max {
                let closed = f.total_weight_closed(n)?;
                let ordered = enumerate_trees(&f, n)?.total_weight();
                let canonical = enumerate_canonical(&f, n)?.total_weight();
                if ordered != closed || canonical != closed {
                    bad.push(format!("n={n}: enumerated {ordered} / {canonical}, closed {closed}"));
                }
            }
            c.check(bad.is_empty(), format!("{f}: enumeration = closed form for n <= {n_max} {}", bad.join("; ")));
            Ok(())
        });
    }
    c.run("spot values", |c| {
        let rec = FamilySpec::recursive(1);
        let port = FamilySpec::port(1, int(1));
        let ok = (1..=n_max).all(|n| {
            rec.total_weight_closed(n).ok() == Some(factorial(n as u64 - 1))
                && port.total_weight_closed(n).ok() == Some(double_factorial_odd(n))
        });
        c.check(ok, "T_n = (n-1)! for recursive trees, (2n-3)!! for plane-oriented trees");
        Ok(())
    });
}

fn criterion_2(_level: Level, c: &mut Checks) {
    for f in family_grid() {
        c.run(&f.to_string(), |c| {
            let mut trees = 0;
            let mut bad = 0;
            for n in 1..=6 {
                for (t, _) in enumerate_canonical(&f, n)?.trees {
                    trees += 1;
                    let growth = exact_probability(&f, &t, Measure::UnorderedGrowth)?;
                    let model = exact_probability(&f, &t, Measure::UnorderedModel)?;
                    if growth != model {
                        bad += 1;
                    }
                }
            }
            c.check(bad == 0, format!("{f}: {trees} canonical trees, {bad} mismatches"));
            Ok(())
        });
    }
}

fn criterion_3(level: Level, rng: &RngStream, c: &mut Checks) {
    let (n_max, samples) = if level == Level::Full { (8, 1_000_000) } else { (6, 20_000) };
    let named = ["recursive:b=2", "recursive:b=3", "ary:b=2,d=2", "ary:b=2,d=3", "port:b=2,alpha=1", "port:b=3,alpha=2"];
    for s in named {
        let f = spec(s);
        c.run(s, |c| {
            let mut worst: f64 = 0.0;
            for n in 1..=n_max {
                let oracle = statistic_pmf_from(&enumerate_canonical(&f, n)?, &f, Statistic::K)?;
                worst = worst.max(pmf_k(&f, n)?.max_abs_diff(&oracle));
            }
            c.check(worst <= 1e-10, format!("{s}: closed form vs enumeration, max error {worst:.2e} (n <= {n_max})"));
            Ok(())
        });
    }
    for (i, s) in ["recursive:b=2", "port:b=3,alpha=1"].into_iter().enumerate() {
        let f = spec(s);
        c.run(s, |c| {
            let n = 50;
            let stream = rng.split(i as u64);
            let draws: Vec<i64> = (0..samples as u64)
                .into_par_iter()
                .map(|r| sample_k(&f, n, &mut stream.split(r)).map(|k| k as i64))
                .collect::<Result<_>>()?;
            let report = gof_chi_square(&pmf_k_exact(&f, n)?, &counts(draws), SIGNIFICANCE)?;
            c.check(
                report.passed,
                format!(
                    "{s}: K_{n} Monte Carlo ({samples} trees), chi2 = {:.3}, dof = {:?}, p = {:.4}",
                    report.statistic, report.dof, report.p_value
                ),
            );
            Ok(())
        });
    }
    for s in ["recursive:b=2", "recursive:b=4", "ary:b=3,d=2", "port:b=2,alpha=1", "port:b=4,alpha=1/2"] {
        let f = spec(s);
        c.run(s, |c| {
            let lim = limit_k(&f)?;
            let diff = pmf_k(&f, 10_000)?.max_abs_diff(&lim);
            c.check(diff <= 0.02, format!("{s}: K_10000 vs limit law, max atom difference {diff:.2e}"));
            Ok(())
        });
    }
    c.run("zipf", |c| {
        let lim = limit_k(&FamilySpec::recursive(2))?;
        c.check(lim.mass(1) == frac(2, 3) && lim.mass(2) == frac(1, 3), "recursive b=2 limit is (2/3, 1/3)");
        Ok(())
    });
}

fn kappa_grid() -> Vec<(String, Q)> {
    let mut out = vec![("recursive".to_string(), int(0))];
    for d in 2..=3 {
        out.push((format!("ary d={d}"), frac(1, d - 1)));
    }
    for a in 1..=2 {
        out.push((format!("port alpha={a}"), frac(-1, a + 1)));
    }
    out
}

fn criterion_4(_level: Level, c: &mut Checks) {
    for (name, kappa) in kappa_grid() {
        c.run(&name, |c| {
            let mut residual: f64 = 0.0;
            let mut dominant: f64 = 0.0;
            for b in 1..=30 {
                let roots = indicial_roots(b, &kappa)?;
                residual = residual.max(roots.max_residual());
                dominant = dominant.max((roots.dominant() - (1.0 + to_f64(&kappa))).norm());
            }
            c.check(residual <= RESIDUAL_TOLERANCE, format!("{name}: max residual {residual:.2e} for b <= 30"));
            c.check(dominant <= 1e-12, format!("{name}: |lambda_1 - (1+kappa)| <= {dominant:.2e}"));
            Ok(())
        });
    }
    c.run("phase change", |c| {
        let below = urn_spectrum(&build_urn(&FamilySpec::recursive(26))?)?.phase_indicator;
        let above = urn_spectrum(&build_urn(&FamilySpec::recursive(27))?)?.phase_indicator;
        c.check(
            below < 0.5 && above > 0.5,
            format!("recursive trees: Re(lambda_2)/lambda_1 = {below:.6} at b=26, {above:.6} at b=27"),
        );
        Ok(())
    });
}

fn three_bundled_family() -> FamilySpec {
    let phi: Vec<String> = (0..12).map(|k| binom_int(k + 2, 2).to_string()).collect();
    spec(&format!("custom:b=2,phi={},psi=1", phi.join(";")))
}

fn criterion_5(level: Level, c: &mut Checks) {
    let (n_diamond, n_bundle) = if level == Level::Full { (7, 6) } else { (6, 5) };
    c.run("diamonds", |c| {
        let f = three_bundled_family();
        let phi = |k: usize| binom_int(k as i64 + 2, 2);
        for n in 1..=n_diamond {
            let set = enumerate_trees(&f, n)?;
            let (mut round, mut inner, mut total) = (true, true, int(0));
            let mut seen = std::collections::HashSet::new();
            for (t, w) in &set.trees {
                let d = bucket_to_diamond(t)?;
                round &= &diamond_to_bucket(&d)? == t && d.weight(&phi) == *w;
                round &= seen.insert(d.clone());
                inner &= d.inner_count() == t.census()?.unsaturated.get(&1).copied().unwrap_or(0);
                total += d.weight(&phi);
            }
            let expect = double_factorial_odd(n);
            c.check(round, format!("n={n}: diamond/bucket round trips over {} trees", set.len()));
            c.check(inner, format!("n={n}: inner nodes = capacity-one buckets"));
            c.check(total == expect, format!("n={n}: weighted diamond count {total}, expected {expect}"));
        }
        Ok(())
    });
    for (s, variant) in
        [("port:b=1,alpha=1", BundleVariant::ThreeBundlePort), ("recursive:b=1", BundleVariant::TwoBundleRecursive)]
    {
        let f = spec(s);
        c.run(s, |c| {
            let mut count = 0;
            let mut ok = true;
            for n in 1..=n_bundle {
                let trees = match variant {
                    BundleVariant::ThreeBundlePort => enumerate_trees(&f, n)?.trees,
                    BundleVariant::TwoBundleRecursive => enumerate_canonical(&f, n)?.trees,
                };
                let mut images = std::collections::HashSet::new();
                for (t, _) in &trees {
                    let bundled = cluster_bundled(t, variant)?;
                    ok &= &uncluster_bundled(&bundled, variant)? == t;
                    images.insert(bundled);
                    count += 1;
                }
                ok &= images.len() == trees.len();
            }
            c.check(ok, format!("{variant:?}: {count} trees, injective with two-sided inverse"));
            Ok(())
        });
    }
    for s in ["recursive:b=1", "ary:b=1,d=2", "ary:b=1,d=3", "port:b=1,alpha=1", "port:b=1,alpha=2"] {
        let f = spec(s);
        c.run(s, |c| {
            let mut ok = true;
            for b in 2..=3 {
                let target = f.with_b(b).weights()?;
                for k in 0..=6 {
                    ok &= weight_preserving_phi(&f, b, k)? == target.phi(k);
                }
            }
            c.check(ok, format!("{s}: weight-preserving phi_k = closed form for k <= 6, b in {{2,3}}"));
            Ok(())
        });
    }
}

/// Node-count estimates are affine in the integer urn state.
struct AffineEstimate {
    base: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

impl AffineEstimate {
    fn new(urn: &UrnModel, scale: i64) -> Self {
        let b = urn.types();
        let zero = vec![Q::zero(); b];
        let base_q = urn.node_estimates(&zero);
        let coeffs = (0..b)
            .map(|i| {
                let mut e = zero.clone();
                e[i] = Q::new(1.into(), scale.into());
                urn.node_estimates(&e).iter().zip(&base_q).map(|(x, y)| to_f64(&(x - y))).collect()
            })
            .collect();
        Self { base: base_q.iter().map(to_f64).collect(), coeffs }
    }

    fn apply(&self, state: &[i64]) -> Vec<f64> {
        let mut out = self.base.clone();
        for (i, &s) in state.iter().enumerate() {
            for (o, c) in out.iter_mut().zip(&self.coeffs[i]) {
                *o += c * s as f64;
            }
        }
        out
    }
}

/// Node-count estimates at sizes `1..=n` for one urn run.
fn urn_run(urn: &UrnModel, est: &AffineEstimate, n: usize, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    let mut runner = UrnRunner::new(urn);
    let mut out = vec![est.apply(runner.state())];
    for _ in 1..n {
        runner.draw(rng)?;
        out.push(est.apply(runner.state()));
    }
    Ok(out)
}

fn growth_counts(f: &FamilySpec, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let mut engine = GrowthEngine::new(f, n)?;
    engine.grow_to(n, rng)?;
    let mut out = vec![0.0; f.b as usize];
    for v in 0..engine.node_count() {
        out[engine.load(v as u32) as usize - 1] += 1.0;
    }
    Ok(out)
}

fn criterion_6(level: Level, rng: &RngStream, c: &mut Checks) {
    let full = level == Level::Full;
    c.run("characteristic polynomials", |c| {
        let mut checked = 0;
        let mut ok = true;
        for b in 2..=10 {
            for f in [FamilySpec::recursive(b), FamilySpec::ary(b, 2), FamilySpec::ary(b, 3)]
                .into_iter()
                .chain([1, 2].map(|a| FamilySpec::port(b, int(a))))
            {
                let urn = build_urn(&f)?;
                ok &= characteristic_polynomial(&urn.replacement) == closed_form_characteristic(&f)?;
                checked += 1;
            }
        }
        c.check(ok, format!("symbolic characteristic polynomial = closed form ({checked} urns, b <= 10)"));
        Ok(())
    });
    c.run("eigenvalues", |c| {
        let mut worst: f64 = 0.0;
        for b in 2..=30 {
            for f in [FamilySpec::recursive(b), FamilySpec::ary(b, 2), FamilySpec::ary(b, 3)]
                .into_iter()
                .chain([1, 2].map(|a| FamilySpec::port(b, int(a))))
            {
                let urn = build_urn(&f)?;
                for &l in &indicial_roots(b, &f.kappa()?)?.roots {
                    worst = worst.max(eigen_backward_error(&urn.replacement, urn_eigen_from_indicial(&f, l)?));
                }
            }
        }
        c.check(worst <= 1e-9, format!("affine images of indicial roots are eigenvalues, backward error {worst:.2e}"));
        Ok(())
    });
    let (reps, n_max) = if full { (1_000_000u64, 7) } else { (10_000, 6) };
    for (i, s) in ["recursive:b=2", "recursive:b=3", "ary:b=2,d=3", "port:b=2,alpha=1", "port:b=3,alpha=1/2"]
        .into_iter()
        .enumerate()
    {
        let f = spec(s);
        c.run(s, |c| {
            let urn = build_urn(&f)?;
            let est = AffineEstimate::new(&urn, UrnRunner::new(&urn).scale());
            let stream = rng.split(100 + i as u64);
            let runs: Vec<Vec<Vec<f64>>> = (0..reps)
                .into_par_iter()
                .map(|r| urn_run(&urn, &est, n_max, &mut stream.split(r)))
                .collect::<Result<_>>()?;
            let mut worst: f64 = 0.0;
            for n in 1..=n_max {
                let exact = expected_node_counts(&f, n)?;
                for k in 1..=f.b as usize {
                    let vals: Vec<f64> = runs.iter().map(|run| run[n - 1][k - 1]).collect();
                    let (mean, se) = mean_and_se(&vals);
                    let dev = (mean - to_f64(&exact[&k])).abs();
                    // Deterministic counts differ only by rounding in the affine map.
                    let z = if dev <= 1e-9 { 0.0 } else if se > 0.0 { dev / se } else { f64::INFINITY };
                    worst = worst.max(z);
                }
            }
            c.check(worst <= 3.0, format!("{s}: urn node counts vs exact means, {reps} runs, n <= {n_max}, max |z| = {worst:.2}"));
            Ok(())
        });
    }
    let (reps, n) = if full { (100_000u64, 1000) } else { (1_000, 100) };
    for (i, s) in ["port:b=2,alpha=1", "recursive:b=3"].into_iter().enumerate() {
        let f = spec(s);
        c.run(s, |c| {
            let urn = build_urn(&f)?;
            let est = AffineEstimate::new(&urn, UrnRunner::new(&urn).scale());
            let stream = rng.split(200 + i as u64);
            let urn_vals: Vec<Vec<f64>> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream.split(2 * r);
                    let mut runner = UrnRunner::new(&urn);
                    for _ in 1..n {
                        runner.draw(&mut rng)?;
                    }
                    Ok(est.apply(runner.state()))
                })
                .collect::<Result<_>>()?;
            let grown: Vec<Vec<f64>> = (0..reps)
                .into_par_iter()
                .map(|r| growth_counts(&f, n, &mut stream.split(2 * r + 1)))
                .collect::<Result<_>>()?;
            let mut worst: f64 = 0.0;
            for k in 0..f.b as usize {
                let (m1, s1) = mean_and_se(&urn_vals.iter().map(|v| v[k]).collect::<Vec<_>>());
                let (m2, s2) = mean_and_se(&grown.iter().map(|v| v[k]).collect::<Vec<_>>());
                worst = worst.max((m1 - m2).abs() / (s1 * s1 + s2 * s2).sqrt());
            }
            c.check(worst <= 3.0, format!("{s}: urn vs growth node counts at n={n}, {reps} runs each, max |z| = {worst:.2}"));
            Ok(())
        });
    }
}

fn criterion_7(level: Level, rng: &RngStream, c: &mut Checks) {
    let full = level == Level::Full;
    let n_max = if full { 7 } else { 6 };
    for s in ["recursive:b=2", "port:b=2,alpha=1"] {
        let f = spec(s);
        c.run(s, |c| {
            let mut bad = Vec::new();
            for n in 1..=n_max {
                let set = enumerate_canonical(&f, n)?;
                for j in 1..=n {
                    let oracle = |st| statistic_pmf_from(&set, &f, st);
                    if pmf_y::<Q>(&f, n, j)? != oracle(Statistic::Y(j))? {
                        bad.push(format!("Y n={n} j={j}"));
                    }
                    if pmf_tau::<Q>(&f, n, j)? != oracle(Statistic::Tau(j))? {
                        bad.push(format!("tau n={n} j={j}"));
                    }
                    if pmf_x::<Q>(&f, n, j)? != oracle(Statistic::X(j))? {
                        bad.push(format!("X n={n} j={j}"));
                    }
                }
            }
            c.check(bad.is_empty(), format!("{s}: Y, tau, X laws = enumeration for n <= {n_max} {}", bad.join(", ")));
            Ok(())
        });
    }
    c.run("root degree mean", |c| {
        let f = FamilySpec::recursive(1);
        let mut worst: f64 = 0.0;
        let mut shifted = true;
        for n in 1..=20 {
            let mean = pmf_x::<Q>(&f, n, 1)?.mean();
            let h = |m: usize| (1..=m).map(|k| frac(1, k as i64)).fold(int(0), |a, x| a + x);
            worst = worst.max((to_f64(&mean) - to_f64(&(h(n) - int(1)))).abs());
            shifted &= mean == h(n - 1);
        }
        c.check(worst <= 1e-12, format!("recursive b=1: max |E X_{{n,1}} - (H_n - 1)| = {worst:.3e} for n <= 20"));
        c.details.push(format!("note: E X_{{n,1}} = H_{{n-1}} exactly for n <= 20: {shifted}"));
        Ok(())
    });
    let (samples, n_beta) = if full { (100_000u64, 10_000) } else { (2_000, 1_000) };
    for (i, (s, j)) in [("recursive:b=2", 4), ("recursive:b=2", 6)].into_iter().enumerate() {
        let f = spec(s);
        c.run(s, |c| {
            let stream = rng.split(300 + i as u64);
            let ys: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream.split(r);
                    let k = sample_k(&f, j, &mut rng)?;
                    Ok(sample_y_chain(&f, n_beta, k, j, &mut rng)? as f64 / n_beta as f64)
                })
                .collect::<Result<_>>()?;
            let mix = pmf_k_exact(&f, j)?.to_float();
            let lim = limit_reference(&f, Region::FixedJ(j), &mix)?;
            let r = gof_ks(&ys, |x| lim.cdf(x), SIGNIFICANCE)?;
            c.check(
                r.passed,
                format!("{s}: Y/n at n={n_beta}, j={j} vs beta mixture, {samples} samples, D = {:.5}, p = {:.4}", r.statistic, r.p_value),
            );
            Ok(())
        });
    }
    let (samples, n_gamma) = if full { (100_000u64, 100_000usize) } else { (2_000, 10_000) };
    let f = FamilySpec::recursive(2);
    c.run("gamma region", |c| {
        let j = (n_gamma as f64).sqrt().floor() as usize;
        let stream = rng.split(400);
        let ys: Vec<f64> = (0..samples)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream.split(r);
                let k = sample_k(&f, j, &mut rng)?;
                Ok(sample_y_beta_binomial(&f, n_gamma, k, j, &mut rng)? as f64 * j as f64 / n_gamma as f64)
            })
            .collect::<Result<_>>()?;
        let lim = limit_reference(&f, Region::SmallJ, &limit_k(&f)?.to_float())?;
        let r = gof_ks(&ys, |x| lim.cdf(x), SIGNIFICANCE)?;
        c.check(
            r.passed,
            format!("{f}: jY/n at n={n_gamma}, j={j} vs gamma mixture, {samples} samples, D = {:.5}, p = {:.4}", r.statistic, r.p_value),
        );
        Ok(())
    });
}

fn criterion_8(level: Level, rng: &RngStream, c: &mut Checks) {
    let (trees, n_max) = if level == Level::Full { (10_000u64, 1000u64) } else { (500, 200) };
    for (i, f) in family_grid().into_iter().enumerate() {
        c.run(&f.to_string(), |c| {
            let stream = rng.split(500 + i as u64);
            let ok: Vec<bool> = (0..trees)
                .into_par_iter()
                .map(|r| {
                    let mut rng = stream.split(r);
                    let n = rng.random_range(1..=n_max) as usize;
                    let mut engine = GrowthEngine::new(&f, n)?;
                    engine.grow_to(n, &mut rng)?;
                    let mut fine = engine.weights_sum_to_normaliser(&f)?;
                    if r < 100 {
                        let tree = engine.to_tree();
                        fine &= attraction_probs(&f, &tree)?.total() == int(1);
                    }
                    Ok(fine)
                })
                .collect::<Result<_>>()?;
            let bad = ok.iter().filter(|&&x| !x).count();
            c.check(bad == 0, format!("{f}: {trees} trees of size <= {n_max}, {bad} with total attraction != 1"));
            Ok(())
        });
    }
}

/// Runs one criterion with a seed derived from `seed` and the criterion id.
pub fn run_criterion(id: u8, level: Level, seed: u64) -> Result<CriterionReport> {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| n.to_string())
        .ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let rng = RngStream::new(seed).split(id as u64);
    let start = Instant::now();
    let mut c = Checks::default();
    match id {
        1 => criterion_1(level, &mut c),
        2 => criterion_2(level, &mut c),
        3 => criterion_3(level, &rng, &mut c),
        4 => criterion_4(level, &mut c),
        5 => criterion_5(level, &mut c),
        6 => criterion_6(level, &rng, &mut c),
        7 => criterion_7(level, &rng, &mut c),
        _ => criterion_8(level, &rng, &mut c),
    }
    Ok(CriterionReport {
        id,
        name,
        passed: c.failures == 0,
        details: c.details,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

/// Criteria 1-6 for `quick`, 1-8 for `full`.
pub fn verify_suite(level: Level, seed: u64) -> VerifyReport {
    let ids: Vec<u8> = match level {
        Level::Quick => (1..=6).collect(),
        Level::Full => (1..=8).collect(),
    };
    let criteria: Vec<CriterionReport> =
        ids.into_par_iter().map(|id| run_criterion(id, level, seed).expect("known criterion")).collect();
    VerifyReport { level, seed, passed: criteria.iter().all(|r| r.passed), criteria }
}

/// Per-criterion pass flags, keyed by id.
pub fn summary(report: &VerifyReport) -> BTreeMap<u8, bool> {
    report.criteria.iter().map(|r| (r.id, r.passed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert!("slow".parse::<Level>().is_err());
        assert!(run_criterion(9, Level::Quick, 1).is_err());
    }

    #[test]
    fn grid_is_valid() {
        let grid = family_grid();
        assert_eq!(grid.len(), 11);
        assert!(grid.iter().all(|f| f.validate().is_ok()));
    }

    #[test]
    fn exact_criteria_quick() {
        for id in [1, 2, 4, 5] {
            let r = run_criterion(id, Level::Quick, 0).unwrap();
            assert!(r.passed, "{r}: {:?}", r.details);
        }
    }
}
