//! Quadrature rules: Gauss–Legendre, Gauss–Jacobi (for endpoint-singular
//! weights), a collapsed tensor rule on the reference triangle, and an
//! adaptive Gauss–Kronrod integrator.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::gamma;

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Map a rule on [-1, 1] to [0, 1]. Weights are scaled by `scale`.
    fn to_unit_interval(&self, scale: f64) -> Rule1d {
        Rule1d {
            nodes: self.nodes.iter().map(|s| 0.5 * (1.0 + s)).collect(),
            weights: self.weights.iter().map(|w| w * scale).collect(),
        }
    }
}

/// Gauss–Jacobi rule on [-1, 1] for the weight (1 - s)^a (1 + s)^b, a, b > -1.
///
/// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix of the monic
/// recurrence, weights are mu0 times the squared first eigenvector components.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Rule1d {
    assert!(n >= 1, "rule needs at least one point");
    assert!(a > -1.0 && b > -1.0, "Jacobi exponents must exceed -1");
    let ab = a + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let diag = if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < n {
            let m = kf + 1.0;
            let two_m = 2.0 * m + ab;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + ab) / (two_m * two_m * (two_m + 1.0) * (two_m - 1.0));
            let off = beta.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    // eigenvector components carry O(n eps) error; restore the exact zeroth moment
    let wsum: f64 = pairs.iter().map(|p| p.1).sum();
    for p in &mut pairs {
        p.1 *= mu0 / wsum;
    }
    Rule1d {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

pub fn gauss_legendre(n: usize) -> Rule1d {
    gauss_jacobi(n, 0.0, 0.0)
}

/// Rule on [0, 1] for the weight t^left (1 - t)^right.
pub fn gauss_jacobi_unit(n: usize, left: f64, right: f64) -> Rule1d {
    gauss_jacobi(n, right, left).to_unit_interval(0.5f64.powf(left + right + 1.0))
}

/// Number of points used on boundary edges.
pub const EDGE_POINTS: usize = 8;

/// 8-point Gauss–Legendre rule on [0, 1].
pub fn edge_rule() -> &'static Rule1d {
    static RULE: OnceLock<Rule1d> = OnceLock::new();
    RULE.get_or_init(|| gauss_jacobi_unit(EDGE_POINTS, 0.0, 0.0))
}

/// Quadrature point on the reference triangle {ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}.
#[derive(Clone, Copy, Debug)]
pub struct TriPoint {
    pub xi: f64,
    pub eta: f64,
    pub weight: f64,
}

/// Collapsed (Duffy) tensor rule with `n` points per direction; exact for
/// polynomials of total degree 2n - 1. Weights sum to 1/2.
pub fn triangle_rule(n: usize) -> Vec<TriPoint> {
    // ξ = u, η = v (1 - u), Jacobian (1 - u) absorbed into the Jacobi weight.
    let gu = gauss_jacobi_unit(n, 0.0, 1.0);
    let gv = gauss_jacobi_unit(n, 0.0, 0.0);
    let mut pts = Vec::with_capacity(n * n);
    for (u, wu) in gu.nodes.iter().zip(&gu.weights) {
        for (v, wv) in gv.nodes.iter().zip(&gv.weights) {
            pts.push(TriPoint {
                xi: *u,
                eta: v * (1.0 - u),
                weight: wu * wv,
            });
        }
    }
    pts
}

/// Default triangle rule: 4×4 points, exact through degree 7.
pub fn default_triangle_rule() -> &'static [TriPoint] {
    static RULE: OnceLock<Vec<TriPoint>> = OnceLock::new();
    RULE.get_or_init(|| triangle_rule(4))
}

// 7-point Gauss / 15-point Kronrod pair (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Globally adaptive Gauss–Kronrod integration of `f` over [a, b].
///
/// Returns `None` if the tolerance is not met within `max_intervals` bisections.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, max_intervals: usize) -> Option<f64> {
    let (v, e) = kronrod15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < f64::MIN_POSITIVE {
            return Some(total);
        }
        if parts.len() >= max_intervals {
            return None;
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_unit(rule: &Rule1d, f: impl Fn(f64) -> f64) -> f64 {
        rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(*x)).sum()
    }

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let r = gauss_legendre(8);
        for k in 0..16 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = integrate_unit(&r, |x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn jacobi_unit_matches_monomial_moments() {
        // ∫_0^1 t^α t^k dt = 1 / (α + k + 1)
        for &alpha in &[0.0, 0.3, 0.5, 0.95, 1.0, 1.5] {
            let r = gauss_jacobi_unit(8, alpha, 0.0);
            for k in 0..16 {
                let exact = 1.0 / (alpha + k as f64 + 1.0);
                let got = integrate_unit(&r, |t| t.powi(k));
                assert!(((got - exact) / exact).abs() < 1e-13, "α={alpha} k={k}");
            }
        }
    }

    #[test]
    fn jacobi_right_weight_mirrors_left() {
        let l = gauss_jacobi_unit(8, 0.7, 0.0);
        let r = gauss_jacobi_unit(8, 0.0, 0.7);
        let f = |t: f64| t * t * (1.0 - t) + 0.25;
        let a = integrate_unit(&l, f);
        let b = integrate_unit(&r, |t| f(1.0 - t));
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn triangle_rule_exact_through_degree_seven() {
        // ∫_T ξ^p η^q = p! q! / (p + q + 2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        let rule = default_triangle_rule();
        let wsum: f64 = rule.iter().map(|p| p.weight).sum();
        assert!((wsum - 0.5).abs() < 1e-14);
        for p in 0..=7u32 {
            for q in 0..=(7 - p) {
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                let got: f64 = rule
                    .iter()
                    .map(|t| t.weight * t.xi.powi(p as i32) * t.eta.powi(q as i32))
                    .sum();
                assert!((got - exact).abs() < 1e-14 * exact, "p={p} q={q}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn kronrod_weights_sum_to_interval_length() {
        let (v, _) = kronrod15(&|_| 1.0, -1.0, 1.0);
        assert!((v - 2.0).abs() < 1e-15);
        let (v, e) = kronrod15(&|x: f64| x.powi(20), -1.0, 1.0);
        assert!((v - 2.0 / 21.0).abs() < 1e-14, "{v} {e}");
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let got = adaptive_integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 2000).unwrap();
        assert!((got - 2.0).abs() < 1e-8);
    }
}
