//! Quadrature rules and a few special functions.

use crate::linalg::Mat;

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Hermite rule for `E f(Z)`, `Z ~ N(0,1)` (weights sum to one).
///
/// Golub-Welsch on the probabilists' Hermite recurrence.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    let mut j = Mat::zeros(n);
    for i in 1..n {
        let b = (i as f64).sqrt();
        j.set(i, i - 1, b);
        j.set(i - 1, i, b);
    }
    let (vals, vecs) = j.sym_eigen();
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|k| (vals[k], vecs.get(0, k) * vecs.get(0, k))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for k in 0..n / 2 {
        let x = 0.5 * (pairs[n - 1 - k].0 - pairs[k].0);
        let w = 0.5 * (pairs[n - 1 - k].1 + pairs[k].1);
        pairs[k] = (-x, w);
        pairs[n - 1 - k] = (x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1 / total).collect(),
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

impl Rule {
    /// Legendre rule mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| (m + r * x, r * w)).collect()
    }
}

/// Adaptive Simpson quadrature on a finite interval.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Composite Gauss-Legendre on geometrically graded panels of `[0, inf)`.
///
/// Panels `[0, r0], [r0, 2 r0], [2 r0, 4 r0], ...`; integrands must decay.
pub fn integrate_half_line(f: &impl Fn(f64) -> f64, r0: f64, octaves: usize, rule: &Rule) -> f64 {
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = r0;
    for _ in 0..=octaves {
        total += rule.on_interval(lo, hi).iter().map(|&(x, w)| w * f(x)).sum::<f64>();
        lo = hi;
        hi *= 2.0;
    }
    total
}

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7).
pub fn gamma(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let t = x + 7.5;
        let mut a = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes `erfcc`, relative error < 1.2e-7).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 { r } else { 2.0 - r }
}
