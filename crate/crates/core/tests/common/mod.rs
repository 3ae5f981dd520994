//! Seed-driven invariant checks shared by the property tests and the
//! acceptance suite. Each returns `Err` with a description on violation.
#![allow(dead_code)]

use kacrice::crn::{conservation_basis, stoichiometric_matrix, Reaction, ReactionNetwork};
use kacrice::mc::Accumulator;
use kacrice::oracle::{direct_expectation, reduce_to_univariate, sturm_count_positive, DirectOptions};
use kacrice::polysys::{decompose_linear, Interval, LinearDecomposition, ParametrizedSystem, Polynomial, VarSpace};
use kacrice::sampling::{build_domain_plan, reflect, Distribution, RngStream};
use num_traits::Zero;

pub type Check = Result<(), String>;

fn uniform(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_open01()
}

fn below(rng: &mut RngStream, n: u64) -> u64 {
    rng.next_u64() % n
}

fn abs_eval(p: &Polynomial, x: &[f64]) -> f64 {
    p.terms().map(|(m, c)| c.abs() * m.evaluate(x)).sum()
}

/// Random polynomial with up to `terms` terms, exponents ≤ 2, in the given
/// slots only.
fn random_poly(rng: &mut RngStream, dim: usize, slots: &[usize], terms: u64) -> Polynomial {
    let count = 1 + below(rng, terms);
    Polynomial::from_terms(
        dim,
        (0..count).map(|_| {
            let mut e = vec![0u32; dim];
            for &s in slots {
                e[s] = below(rng, 3) as u32;
            }
            let c = uniform(rng, 0.5, 2.0) * if below(rng, 2) == 0 { 1.0 } else { -1.0 };
            (e, c)
        }),
    )
}

/// A random square system where equation `i` is `h_i·k_i + q_i` and the
/// remaining parameters appear anywhere.
pub fn random_system(seed: u64) -> (ParametrizedSystem, Vec<usize>) {
    let mut rng = RngStream::new(seed, 11);
    let n = 1 + below(&mut rng, 3) as usize;
    let extra = 1 + below(&mut rng, 2) as usize;
    let m = n + extra;
    let dim = n + m;
    let t: Vec<String> = (1..=n).map(|i| format!("t{i}")).collect();
    let k: Vec<String> = (1..=m).map(|j| format!("k{j}")).collect();
    let space = VarSpace::new(t, k).unwrap();
    let mut free: Vec<usize> = (0..n).collect();
    free.extend((n..m).map(|j| space.param_slot(j)));
    let eqs = (0..n)
        .map(|i| {
            let mut h = random_poly(&mut rng, dim, &free, 3);
            if h.is_zero() {
                h = Polynomial::constant(dim, 1.0);
            }
            let q = random_poly(&mut rng, dim, &free, 4);
            &(&h * &Polynomial::var(dim, space.param_slot(i))) + &q
        })
        .collect();
    (ParametrizedSystem::new(space, eqs).unwrap(), (0..n).collect())
}

fn random_point(rng: &mut RngStream, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| uniform(rng, 0.2, 2.0)).collect()
}

fn decomposed(seed: u64) -> Result<(ParametrizedSystem, LinearDecomposition), String> {
    let (sys, lin) = random_system(seed);
    let dec = decompose_linear(&sys, &lin).map_err(|e| e.to_string())?;
    Ok((sys, dec))
}

/// `f_i = h_i·k_i + q_i` at random points.
pub fn decomposition_round_trip(seed: u64) -> Check {
    let (sys, dec) = decomposed(seed)?;
    let mut rng = RngStream::new(seed, 12);
    let dim = sys.n() + sys.m();
    for _ in 0..20 {
        let x = random_point(&mut rng, dim);
        for (i, f) in sys.equations.iter().enumerate() {
            let k = x[sys.space.param_slot(dec.linear[i])];
            let lhs = f.evaluate(&x).unwrap();
            let rhs = dec.h[i].evaluate(&x).unwrap() * k + dec.q[i].evaluate(&x).unwrap();
            let scale = abs_eval(f, &x);
            if (lhs - rhs).abs() > 1e-12 * scale.max(1e-300) {
                return Err(format!("seed {seed}: eq {i}: {lhs} vs {rhs}"));
            }
        }
    }
    Ok(())
}

/// Substituting `k_i = g_i(t, k̄)` makes every equation vanish.
pub fn root_identity(seed: u64) -> Check {
    let (sys, dec) = decomposed(seed)?;
    let mut rng = RngStream::new(seed, 13);
    let dim = sys.n() + sys.m();
    let mut checked = 0;
    while checked < 20 {
        let mut x = random_point(&mut rng, dim);
        let h: Vec<f64> = dec.h.iter().map(|h| h.evaluate(&x).unwrap()).collect();
        if h.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        for (i, g) in dec.g.iter().enumerate() {
            x[sys.space.param_slot(dec.linear[i])] = g.evaluate(&x).unwrap();
        }
        for (i, f) in sys.equations.iter().enumerate() {
            let v = f.evaluate(&x).unwrap();
            let scale = abs_eval(&dec.q[i], &x) + (h[i] * x[sys.space.param_slot(dec.linear[i])]).abs();
            if v.abs() > 1e-9 * scale {
                return Err(format!("seed {seed}: f_{i} = {v} at a root (scale {scale})"));
            }
        }
        checked += 1;
    }
    Ok(())
}

fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

fn hadamard(a: &[Vec<f64>]) -> f64 {
    a.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).product()
}

/// Points where every `h_i` is safely away from zero.
fn jacobian_points(sys: &ParametrizedSystem, dec: &LinearDecomposition, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 14);
    let dim = sys.n() + sys.m();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_point(&mut rng, dim);
        if dec.h.iter().all(|h| h.evaluate(&x).unwrap().abs() >= 1e-2) {
            out.push(x);
        }
    }
    out
}

/// Forward error bound for evaluating an expanded rational function.
fn rounding(r: &kacrice::polysys::RationalFunction, x: &[f64]) -> f64 {
    let num = r.num.evaluate(x).unwrap();
    let den = r.den.evaluate(x).unwrap();
    let cond = abs_eval(&r.num, x) / num.abs() + abs_eval(&r.den, x) / den.abs();
    let terms = (r.num.num_terms() + r.den.num_terms()) as f64;
    4.0 * terms * f64::EPSILON * cond * (num / den).abs()
}

/// The symbolic determinant against the determinant of the symbolic
/// partial derivatives, at 100 points.
pub fn jacobian_identity(seed: u64) -> Check {
    let (sys, dec) = decomposed(seed)?;
    let n = sys.n();
    let partials: Vec<Vec<_>> = dec
        .g
        .iter()
        .map(|g| (0..n).map(|j| g.partial_derivative(j)).collect())
        .collect();
    for x in jacobian_points(&sys, &dec, seed, 100) {
        let a: Vec<Vec<f64>> = partials
            .iter()
            .map(|row| row.iter().map(|p| p.evaluate(&x).unwrap()).collect())
            .collect();
        let want = det(a.clone());
        let got = dec.jac_det.evaluate(&x).unwrap();
        let scale = hadamard(&a).max(want.abs());
        if (got - want).abs() > 1e-8 * scale.max(1e-300) + rounding(&dec.jac_det, &x) {
            return Err(format!("seed {seed}: det {got} vs {want} (scale {scale})"));
        }
    }
    Ok(())
}

/// The symbolic determinant against central differences of `g`.
pub fn jacobian_finite_differences(seed: u64) -> Check {
    let (sys, dec) = decomposed(seed)?;
    let n = sys.n();
    for x in jacobian_points(&sys, &dec, seed ^ 1, 20) {
        let a: Vec<Vec<f64>> = dec
            .g
            .iter()
            .map(|g| {
                (0..n)
                    .map(|j| {
                        let step = 1e-6 * x[j];
                        let mut up = x.clone();
                        let mut dn = x.clone();
                        up[j] += step;
                        dn[j] -= step;
                        (g.evaluate(&up).unwrap() - g.evaluate(&dn).unwrap()) / (2.0 * step)
                    })
                    .collect()
            })
            .collect();
        // Each difference carries rounding noise of order eps·|g|/step.
        let bound: Vec<Vec<f64>> = dec
            .g
            .iter()
            .zip(&a)
            .map(|(g, row)| {
                let noise = 1e-9 * (1.0 + g.evaluate(&x).unwrap().abs());
                row.iter().enumerate().map(|(j, v)| v.abs() + noise / x[j]).collect()
            })
            .collect();
        let want = det(a.clone());
        let got = dec.jac_det.evaluate(&x).unwrap();
        let scale = hadamard(&a).max(want.abs());
        let noise = hadamard(&bound) - hadamard(&a);
        if (got - want).abs() > 1e-5 * scale + 10.0 * noise {
            return Err(format!("seed {seed}: det {got} vs differences {want}"));
        }
    }
    Ok(())
}

/// Streaming statistics against two-pass values, and split-merge against
/// a single pass.
pub fn welford_merge(values: &[f64], split: usize) -> Check {
    let mut all = Accumulator::new();
    let mut a = Accumulator::new();
    let mut b = Accumulator::new();
    for (i, &v) in values.iter().enumerate() {
        all.push(v).unwrap();
        if i < split { a.push(v) } else { b.push(v) }.unwrap();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let s: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let mag = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let close = |x: f64, y: f64, scale: f64| (x - y).abs() <= 1e-10 * scale.max(1e-300);
    if !close(all.mean(), mean, mag) || !close(all.sum_sq(), s, n * mag * mag) {
        return Err(format!("streaming ({}, {}) vs two-pass ({mean}, {s})", all.mean(), all.sum_sq()));
    }
    let merged = a.merge(&b);
    if merged.count() != all.count()
        || !close(merged.mean(), all.mean(), mag)
        || !close(merged.sum_sq(), all.sum_sq(), n * mag * mag)
    {
        return Err(format!("merged {merged:?} vs single {all:?}"));
    }
    Ok(())
}

/// Reflecting twice returns the original point.
pub fn reflect_involution(sides: &[(f64, f64)], fractions: &[f64]) -> Check {
    let dists: Vec<Distribution> = sides.iter().map(|&(a, b)| Distribution::uniform(a, b).unwrap()).collect();
    let p: Vec<f64> = sides.iter().zip(fractions).map(|(&(a, b), f)| a + (b - a) * f).collect();
    let once = reflect(&p, &dists).map_err(|e| e.to_string())?;
    let twice = reflect(&once, &dists).map_err(|e| e.to_string())?;
    for ((x, y), &(a, b)) in p.iter().zip(&twice).zip(sides) {
        if (x - y).abs() > 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            return Err(format!("{p:?} -> {twice:?}"));
        }
    }
    Ok(())
}

/// Monte Carlo integral of `f` over a one-dimensional domain through the
/// branch-split unit map, returning `(Î, ê)`.
pub fn branch_integral(domain: Interval, f: impl Fn(f64) -> f64, samples: u64, seed: u64) -> (f64, f64) {
    let plan = build_domain_plan(&[domain], &[None]);
    let mut rng = RngStream::new(seed, 15);
    let mut acc = Accumulator::new();
    let mut t = [0.0];
    for _ in 0..samples {
        let u = [rng.next_open01()];
        let v: f64 = (0..plan.branch_count())
            .map(|b| {
                let w = plan.map(b, &u, &[], &mut t);
                w * f(t[0])
            })
            .sum();
        acc.push(v).unwrap();
    }
    acc.estimate().unwrap()
}

/// Known integrals over half-lines and the full line, each within 3ê.
pub fn branch_sums(seed: u64) -> Check {
    let cases: [(Interval, fn(f64) -> f64, f64, &str); 4] = [
        (Interval::new(0.0, f64::INFINITY), |x| (-x).exp(), 1.0, "exp(-x) on (0,inf)"),
        (Interval::new(0.0, f64::INFINITY), |x| 1.0 / (1.0 + x).powi(2), 1.0, "1/(1+x)^2 on (0,inf)"),
        (Interval::new(f64::NEG_INFINITY, 0.0), |x| 1.0 / (1.0 - x).powi(2), 1.0, "1/(1-x)^2 on (-inf,0)"),
        (Interval::new(f64::NEG_INFINITY, f64::INFINITY), |x| (-x.abs()).exp(), 2.0, "exp(-|x|) on R"),
    ];
    for (iv, f, want, name) in cases {
        let (v, e) = branch_integral(iv, f, 200_000, seed);
        if (v - want).abs() > 3.0 * e {
            return Err(format!("{name}: {v} ± {e}, want {want}"));
        }
    }
    Ok(())
}

/// A random polynomial from real linear factors, and optionally one
/// irreducible quadratic, with roots at least 1e-3 apart and from zero.
/// Coefficients are returned highest degree first.
pub fn random_factored(rng: &mut RngStream) -> (Vec<f64>, usize) {
    let degree = 1 + below(rng, 6) as usize;
    let quadratic = degree >= 2 && below(rng, 3) == 0;
    let real = degree - if quadratic { 2 } else { 0 };
    let mut roots: Vec<f64> = Vec::with_capacity(real);
    while roots.len() < real {
        let r = uniform(rng, -5.0, 5.0);
        if r.abs() >= 1e-3 && roots.iter().all(|s| (r - s).abs() >= 1e-3) {
            roots.push(r);
        }
    }
    if real >= 2 && below(rng, 4) == 0 {
        let base = roots[0];
        let r = base + if base > 0.0 { 1e-3 } else { -1e-3 } * uniform(rng, 1.0, 1.5);
        if roots[1..].iter().all(|s| (r - s).abs() >= 1e-3) {
            roots[1] = r;
        }
    }
    let lead = uniform(rng, 0.5, 2.0) * if below(rng, 2) == 0 { 1.0 } else { -1.0 };
    // Ascending while building, reversed at the end.
    let mut c = vec![lead];
    let mut times = |factor: &[f64]| {
        let mut out = vec![0.0; c.len() + factor.len() - 1];
        for (i, a) in c.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        c = out;
    };
    for &r in &roots {
        times(&[-r, 1.0]);
    }
    if quadratic {
        let p = uniform(rng, -3.0, 3.0);
        let q = p * p / 4.0 + uniform(rng, 0.1, 3.0);
        times(&[q, p, 1.0]);
    }
    c.reverse();
    (c, roots.iter().filter(|&&r| r > 0.0).count())
}

/// Sturm counts of positive roots on `count` factored polynomials.
pub fn sturm_counts(seed: u64, count: usize) -> Check {
    let mut rng = RngStream::new(seed, 16);
    for case in 0..count {
        let (coeffs, want) = random_factored(&mut rng);
        let got = sturm_count_positive(&coeffs).map_err(|e| format!("case {case}: {coeffs:?}: {e}"))?;
        if got != want {
            return Err(format!("case {case}: {coeffs:?}: counted {got}, want {want}"));
        }
    }
    Ok(())
}

/// Random networks: every conservation law annihilates the stoichiometric
/// matrix, and there are `species - rank(N)` independent laws.
pub fn conservation_annihilates(seed: u64) -> Check {
    let mut rng = RngStream::new(seed, 17);
    let s = 2 + below(&mut rng, 5) as usize;
    let r = 1 + below(&mut rng, 8) as usize;
    let mut reactions = Vec::with_capacity(r);
    while reactions.len() < r {
        let complex = |rng: &mut RngStream| -> Vec<u32> { (0..s).map(|_| below(rng, 4).saturating_sub(1) as u32).collect() };
        let reactant = complex(&mut rng);
        let product = complex(&mut rng);
        if reactant != product {
            let rate = format!("k{}", reactions.len() + 1);
            reactions.push(Reaction { reactant, product, rate });
        }
    }
    let net = ReactionNetwork {
        species: (1..=s).map(|i| format!("X{i}")).collect(),
        reactions,
    };
    let n = stoichiometric_matrix(&net);
    let w = conservation_basis(&n);
    for row in &w {
        for j in 0..r {
            let dot = row
                .iter()
                .zip(&n)
                .fold(num_rational::BigRational::zero(), |acc, (c, nr)| acc + c * num_rational::BigRational::from_integer(nr[j].into()));
            if !dot.is_zero() {
                return Err(format!("seed {seed}: W·N ≠ 0 in column {j}"));
            }
        }
    }
    let as_f64: Vec<Vec<f64>> = n.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect();
    let w_f64: Vec<Vec<f64>> = w
        .iter()
        .map(|row| row.iter().map(|v| num_traits::ToPrimitive::to_f64(v).unwrap()).collect())
        .collect();
    let rank_n = rank(as_f64);
    if w.len() != s - rank_n || rank(w_f64) != w.len() {
        return Err(format!("seed {seed}: {} laws for {s} species and rank {rank_n}", w.len()));
    }
    Ok(())
}

fn rank(mut a: Vec<Vec<f64>>) -> usize {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| a[i][c].abs() > 1e-9) else { continue };
        a.swap(p, r);
        for i in 0..rows {
            if i != r {
                let f = a[i][c] / a[r][c];
                for k in c..cols {
                    a[i][k] -= f * a[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// A random one-variable system never yields more positive roots per
/// sample than its degree.
pub fn counts_bounded_by_degree(seed: u64) -> Check {
    let mut rng = RngStream::new(seed, 18);
    let space = VarSpace::new(["x"], ["k1", "k2"]).unwrap();
    let dim = 3;
    let degree = 1 + below(&mut rng, 5) as u32;
    let mut terms = vec![(vec![0, 1, 0], 1.0), (vec![degree, 0, 0], uniform(&mut rng, 0.5, 2.0))];
    for e in 1..degree {
        let c = uniform(&mut rng, -3.0, 3.0);
        let with_k2 = below(&mut rng, 2) as u32;
        terms.push((vec![e, 0, with_k2], c));
    }
    terms.push((vec![0, 0, 0], -uniform(&mut rng, 0.0, 1.0)));
    let mut sys = ParametrizedSystem::new(space, vec![Polynomial::from_terms(dim, terms)]).unwrap();
    sys.param_box = vec![Interval::new(-1.0, 1.0), Interval::new(0.0, 2.0)];
    let red = reduce_to_univariate(&sys).map_err(|e| e.to_string())?;
    let est = direct_expectation(&sys, &red, &sys.param_box, 2_000, &DirectOptions { seed, ..Default::default() })
        .map_err(|e| format!("seed {seed}: {e}"))?;
    if est.max_count > degree as usize {
        return Err(format!("seed {seed}: {} roots from degree {degree}", est.max_count));
    }
    Ok(())
}
