//! Drift coefficients with certified Hölder (or Besov) norm bounds.

use crate::error::{config, Result};
use crate::heatkernel::{hermite_tensor, CovMatrix};
use crate::quadrature::{gamma, gauss_legendre};

/// One term `a cos(2^k <e, x> + theta)` of a lacunary sum.
#[derive(Clone, Debug, PartialEq)]
pub struct LacunaryTerm {
    pub k: u32,
    pub a: f64,
    pub e: Vec<f64>,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DriftFamily {
    Constant { value: Vec<f64> },
    /// `b_i(x) = A sin(w x_i + phi_i)`.
    Smooth { amplitude: f64, freq: f64, phases: Vec<f64> },
    /// `b(x) = A E[phi(<e, x - c> + s Z)] e` with `phi(u) = min(|u|, R)^alpha`, `s^2 = smoothing`.
    Power { center: Vec<f64>, direction: Vec<f64>, amplitude: f64, radius: f64, smoothing: f64 },
    /// `b(x) = v sum_k a_k cos(2^k <e_k, x> + theta_k)`, optionally truncated at level `n`.
    Lacunary { terms: Vec<LacunaryTerm>, direction: Vec<f64>, truncate: Option<u32> },
}

/// A drift `b: R^d -> R^d` with `||b||_{C^alpha} <= norm_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct HolderDrift {
    pub family: DriftFamily,
    pub alpha: f64,
    pub norm_bound: f64,
    pub dim: usize,
    /// Lipschitz bound when the representative is `C^1`.
    pub lipschitz: Option<f64>,
}

/// `E|Z|^p` for a standard normal `Z`.
fn abs_normal_moment(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

fn ridge_profile(u: f64, alpha: f64, radius: f64) -> f64 {
    u.abs().min(radius).powf(alpha)
}

/// `E[min(|u + s Z|, R)^alpha]`, split at the kinks with geometric panels at the cusp.
pub(crate) fn ridge_expectation(u: f64, s: f64, alpha: f64, radius: f64) -> f64 {
    if s == 0.0 {
        return ridge_profile(u, alpha, radius);
    }
    const ZMAX: f64 = 9.0;
    let rule = ridge_rule();
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |z: f64| ridge_profile(u + s * z, alpha, radius) * phi(z);
    let cusp = -u / s;
    let mut cuts = vec![-ZMAX, ZMAX, cusp, (radius - u) / s, (-radius - u) / s];
    cuts.retain(|z| *z >= -ZMAX && *z <= ZMAX);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (at_left, at_right) = (a == cusp, b == cusp);
        if at_left || at_right {
            // Geometric panels toward the cusp.
            let len = b - a;
            for k in 0..40 {
                let (lo, hi) = (len * 0.5f64.powi(k + 1), len * 0.5f64.powi(k));
                let lo = if k == 39 { 0.0 } else { lo };
                for (x, wt) in rule.on_interval(lo, hi) {
                    let z = if at_left { a + x } else { b - x };
                    total += wt * f(z);
                }
            }
        } else {
            let pieces = (b - a).ceil().max(1.0) as usize;
            let step = (b - a) / pieces as f64;
            for p in 0..pieces {
                for (z, wt) in rule.on_interval(a + p as f64 * step, a + (p + 1) as f64 * step) {
                    total += wt * f(z);
                }
            }
        }
    }
    total
}

fn ridge_rule() -> &'static crate::quadrature::Rule {
    static RULE: std::sync::OnceLock<crate::quadrature::Rule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(20))
}

impl HolderDrift {
    pub fn constant(value: Vec<f64>) -> Self {
        let norm = crate::scalar::norm(&value);
        Self { dim: value.len(), family: DriftFamily::Constant { value }, alpha: 1.0, norm_bound: norm, lipschitz: Some(0.0) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    /// Smooth sine drift, certified in `C^alpha` for the given `alpha in (0, 1]`.
    pub fn smooth(amplitude: f64, freq: f64, phases: Vec<f64>, alpha: f64) -> Self {
        let a = amplitude.abs();
        let d = phases.len();
        let lip = a * freq.abs();
        let sqd = (d as f64).sqrt();
        let norm = a * sqd + (2.0 * a * sqd).powf(1.0 - alpha) * (lip).powf(alpha);
        Self { dim: d, family: DriftFamily::Smooth { amplitude, freq, phases }, alpha, norm_bound: norm, lipschitz: Some(lip) }
    }

    /// Ridge `A min(|<e, x - c>|, R)^alpha e` with unit `e`; not Lipschitz on `<e, x - c> = 0` for `alpha < 1`.
    pub fn power(center: Vec<f64>, direction: Vec<f64>, amplitude: f64, radius: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return config(format!("power family needs alpha in (0, 1], got {alpha}"));
        }
        if center.len() != direction.len() || radius <= 0.0 {
            return config("power family: center/direction mismatch or nonpositive radius");
        }
        let nv = crate::scalar::norm(&direction);
        if nv == 0.0 {
            return config("power family needs a nonzero direction");
        }
        let direction: Vec<f64> = direction.iter().map(|v| v / nv).collect();
        let a = amplitude.abs();
        Ok(Self {
            dim: center.len(),
            family: DriftFamily::Power { center, direction, amplitude, radius, smoothing: 0.0 },
            alpha,
            // [min(|u|, R)^alpha]_alpha = 2^{1 - alpha}.
            norm_bound: a * (radius.powf(alpha) + 2f64.powf(1.0 - alpha)),
            lipschitz: if alpha == 1.0 { Some(a) } else { None },
        })
    }

    /// Lacunary sum with `a_k = m 2^{-k alpha}`, `k = 1..=levels`, in direction `v`.
    pub fn lacunary(m: f64, alpha: f64, levels: u32, e: Vec<f64>, direction: Vec<f64>) -> Result<Self> {
        if !(alpha > -1.0 && alpha < 1.0) {
            return config(format!("lacunary family needs alpha in (-1, 1), got {alpha}"));
        }
        let terms = (1..=levels)
            .map(|k| LacunaryTerm { k, a: m * 2f64.powf(-(k as f64) * alpha), e: e.clone(), theta: 0.37 * k as f64 })
            .collect();
        Self::lacunary_terms(terms, direction, alpha)
    }

    pub fn lacunary_terms(terms: Vec<LacunaryTerm>, direction: Vec<f64>, alpha: f64) -> Result<Self> {
        let dim = direction.len();
        if terms.iter().any(|t| t.e.len() != dim) {
            return config("lacunary directions must match the drift dimension");
        }
        let norm = terms.iter().map(|t| t.a.abs() * 2f64.powf(t.k as f64 * alpha)).fold(0.0, f64::max);
        let mut b = Self { dim, family: DriftFamily::Lacunary { terms, direction, truncate: None }, alpha, norm_bound: norm, lipschitz: None };
        b.lipschitz = b.lacunary_lipschitz(None);
        Ok(b)
    }

    fn lacunary_lipschitz(&self, level: Option<u32>) -> Option<f64> {
        if let DriftFamily::Lacunary { terms, direction, .. } = &self.family {
            let nv = crate::scalar::norm(direction);
            let s: f64 = terms
                .iter()
                .filter(|t| level.is_none_or(|n| t.k <= n))
                .map(|t| t.a.abs() * 2f64.powi(t.k as i32) * crate::scalar::norm(&t.e))
                .sum();
            Some(s * nv)
        } else {
            None
        }
    }

    /// `c b`, with norm and Lipschitz bounds scaled accordingly.
    pub fn scaled(&self, c: f64) -> HolderDrift {
        let mut b = self.clone();
        match &mut b.family {
            DriftFamily::Constant { value } => value.iter_mut().for_each(|v| *v *= c),
            DriftFamily::Smooth { amplitude, .. } | DriftFamily::Power { amplitude, .. } => *amplitude *= c,
            DriftFamily::Lacunary { terms, .. } => terms.iter_mut().for_each(|t| t.a *= c),
        }
        b.norm_bound *= c.abs();
        b.lipschitz = b.lipschitz.map(|l| l * c.abs());
        b
    }

    /// Whether pointwise evaluation is meaningful.
    pub fn evaluable(&self) -> bool {
        match &self.family {
            DriftFamily::Lacunary { truncate, .. } => self.alpha > 0.0 || truncate.is_some(),
            _ => self.alpha > 0.0,
        }
    }

    /// Sup norm bound of the representative.
    pub fn sup_bound(&self) -> f64 {
        match &self.family {
            DriftFamily::Constant { value } => crate::scalar::norm(value),
            DriftFamily::Smooth { amplitude, phases, .. } => amplitude.abs() * (phases.len() as f64).sqrt(),
            DriftFamily::Power { amplitude, radius, .. } => amplitude.abs() * radius.powf(self.alpha),
            DriftFamily::Lacunary { terms, direction, truncate } => {
                let nv = crate::scalar::norm(direction);
                nv * terms.iter().filter(|t| truncate.is_none_or(|n| t.k <= n)).map(|t| t.a.abs()).sum::<f64>()
            }
        }
    }

    fn power_eval(&self, x: &[f64], extra_var: f64, out: &mut [f64]) {
        if let DriftFamily::Power { center, direction, amplitude, radius, smoothing } = &self.family {
            let u: f64 = direction.iter().zip(x.iter().zip(center)).map(|(e, (a, c))| e * (a - c)).sum();
            let s = (smoothing + extra_var).max(0.0).sqrt();
            let v = amplitude * ridge_expectation(u, s, self.alpha, *radius);
            for i in 0..self.dim {
                out[i] = v * direction[i];
            }
        }
    }

    /// `b(x)` written into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            DriftFamily::Constant { value } => out[..self.dim].copy_from_slice(value),
            DriftFamily::Smooth { amplitude, freq, phases } => {
                for i in 0..self.dim {
                    out[i] = amplitude * (freq * x[i] + phases[i]).sin();
                }
            }
            DriftFamily::Power { .. } => self.power_eval(x, 0.0, out),
            DriftFamily::Lacunary { terms, direction, truncate } => {
                let mut s = 0.0;
                for t in terms.iter().filter(|t| truncate.is_none_or(|n| t.k <= n)) {
                    let dot: f64 = t.e.iter().zip(x).map(|(a, b)| a * b).sum();
                    s += t.a * (2f64.powi(t.k as i32) * dot + t.theta).cos();
                }
                for i in 0..self.dim {
                    out[i] = s * direction[i];
                }
            }
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval(x, &mut out);
        out
    }

    /// `P_Γ b (x)` in closed form (one-dimensional quadrature for the ridge).
    pub fn heat_eval(&self, gamma: &CovMatrix, x: &[f64], out: &mut [f64]) {
        match &self.family {
            DriftFamily::Constant { value } => out[..self.dim].copy_from_slice(value),
            DriftFamily::Smooth { amplitude, freq, phases } => {
                for i in 0..self.dim {
                    let damp = (-0.5 * freq * freq * gamma.m.get(i, i)).exp();
                    out[i] = amplitude * damp * (freq * x[i] + phases[i]).sin();
                }
            }
            DriftFamily::Lacunary { terms, direction, truncate } => {
                let mut s = 0.0;
                for t in terms.iter().filter(|t| truncate.is_none_or(|n| t.k <= n)) {
                    let w = 2f64.powi(t.k as i32);
                    let dot: f64 = t.e.iter().zip(x).map(|(a, b)| a * b).sum();
                    let var = gamma.m.bilinear(&t.e, &t.e);
                    s += t.a * (-0.5 * w * w * var).exp() * (w * dot + t.theta).cos();
                }
                for i in 0..self.dim {
                    out[i] = s * direction[i];
                }
            }
            DriftFamily::Power { direction, .. } => {
                let var = gamma.m.bilinear(direction, direction);
                self.power_eval(x, var, out);
            }
        }
    }

    /// `P_{vI} b (x)`: heat smoothing with isotropic variance `v`.
    pub fn heat_eval_isotropic(&self, v: f64, x: &[f64], out: &mut [f64]) {
        match &self.family {
            DriftFamily::Constant { value } => out[..self.dim].copy_from_slice(value),
            DriftFamily::Smooth { amplitude, freq, phases } => {
                let damp = (-0.5 * freq * freq * v).exp();
                for i in 0..self.dim {
                    out[i] = amplitude * damp * (freq * x[i] + phases[i]).sin();
                }
            }
            DriftFamily::Lacunary { terms, direction, truncate } => {
                let mut s = 0.0;
                for t in terms.iter().filter(|t| truncate.is_none_or(|n| t.k <= n)) {
                    let w = 2f64.powi(t.k as i32);
                    let mut dot = 0.0;
                    let mut ee = 0.0;
                    for (a, b) in t.e.iter().zip(x) {
                        dot += a * b;
                        ee += a * a;
                    }
                    let damp = 0.5 * w * w * v * ee;
                    if damp < 745.0 {
                        s += t.a * (-damp).exp() * (w * dot + t.theta).cos();
                    }
                }
                for i in 0..self.dim {
                    out[i] = s * direction[i];
                }
            }
            DriftFamily::Power { .. } => self.power_eval(x, v, out),
        }
    }

    /// Level-`n` representative: lacunary truncation, or `P_{2^{-2n}} b` otherwise.
    pub fn mollify(&self, n: u32) -> HolderDrift {
        let r = 4f64.powi(-(n as i32));
        match &self.family {
            DriftFamily::Constant { .. } => self.clone(),
            DriftFamily::Lacunary { terms, direction, .. } => {
                let mut b = self.clone();
                b.family = DriftFamily::Lacunary { terms: terms.clone(), direction: direction.clone(), truncate: Some(n) };
                b.lipschitz = b.lacunary_lipschitz(Some(n));
                b
            }
            DriftFamily::Smooth { amplitude, freq, phases } => {
                // Heat smoothing of a sine is a damping factor.
                let damp = (-0.5 * freq * freq * r).exp();
                let mut b = HolderDrift::smooth(amplitude * damp, *freq, phases.clone(), self.alpha);
                b.norm_bound = self.norm_bound;
                b
            }
            DriftFamily::Power { center, direction, amplitude, radius, smoothing } => {
                let total = smoothing + r;
                // |(P_s phi)'| <= [phi]_alpha s^{alpha - 1} E|Z|^{1 + alpha}.
                let lip = amplitude.abs() * 2f64.powf(1.0 - self.alpha) * total.sqrt().powf(self.alpha - 1.0) * abs_normal_moment(1.0 + self.alpha);
                HolderDrift {
                    family: DriftFamily::Power {
                        center: center.clone(),
                        direction: direction.clone(),
                        amplitude: *amplitude,
                        radius: *radius,
                        smoothing: total,
                    },
                    alpha: self.alpha,
                    norm_bound: self.norm_bound,
                    dim: self.dim,
                    lipschitz: Some(lip),
                }
            }
        }
    }

    /// `P_r b` evaluated by tensor Gauss-Hermite quadrature of the unsmoothed representative.
    pub fn heat_eval_hermite(&self, r: f64, x: &[f64], order: usize, out: &mut [f64]) {
        let rule = hermite_tensor(self.dim, order);
        let sr = r.sqrt();
        let mut y = vec![0.0; self.dim];
        let mut v = vec![0.0; self.dim];
        out[..self.dim].iter_mut().for_each(|o| *o = 0.0);
        for i in 0..rule.len() {
            let z = rule.node(i);
            for a in 0..self.dim {
                y[a] = x[a] - sr * z[a];
            }
            self.eval(&y, &mut v);
            for a in 0..self.dim {
                out[a] += rule.weights[i] * v[a];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_survive_mollification() {
        let b = HolderDrift::constant(vec![1.5, -2.0]);
        for n in 0..5 {
            assert_eq!(b.mollify(n).eval_vec(&[0.3, 9.0]), vec![1.5, -2.0]);
        }
        let p = HolderDrift::power(vec![0.0, 0.0], vec![1.0, 0.0], 1.0, 100.0, 0.5).unwrap();
        // Far from the kink and inside the radius P_r is close but not equal; mass is preserved.
        let c = HolderDrift::constant(vec![3.0, 3.0]).mollify(2);
        assert_eq!(c.eval_vec(&[0.1, 0.1]), vec![3.0, 3.0]);
        assert!(p.mollify(3).evaluable());
    }

    #[test]
    fn power_mollification_error_decreases() {
        let b = HolderDrift::power(vec![0.0, 0.0], vec![1.0, 1.0], 1.0, 2.0, 0.5).unwrap();
        let pts: Vec<[f64; 2]> = (0..41)
            .flat_map(|i| (0..41).map(move |j| [-1.0 + i as f64 * 0.05, -1.0 + j as f64 * 0.05]))
            .collect();
        let mut prev = f64::INFINITY;
        for n in 1..6 {
            let bn = b.mollify(n);
            let err = pts
                .iter()
                .map(|x| crate::scalar::dist(&b.eval_vec(x), &bn.eval_vec(x)))
                .fold(0.0, f64::max);
            let scale = 2f64.powf(-(n as f64) * 0.5);
            assert!(err <= b.norm_bound * scale * 2.0, "n={n}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn lacunary_truncation_gaps() {
        let b = HolderDrift::lacunary(1.0, -0.2, 12, vec![1.0], vec![1.0]).unwrap();
        assert!(!b.evaluable());
        let (n, m) = (3, 7);
        let (bn, bm) = (b.mollify(n), b.mollify(m));
        let gap = (0..4001)
            .map(|i| {
                let x = -3.0 + i as f64 * 1.5e-3;
                (bm.eval_vec(&[x])[0] - bn.eval_vec(&[x])[0]).abs()
            })
            .fold(0.0, f64::max);
        let terms: Vec<f64> = (n + 1..=m).map(|k| 2f64.powf(0.2 * k as f64)).collect();
        let sum: f64 = terms.iter().sum();
        let max = terms.iter().cloned().fold(0.0, f64::max);
        assert!(gap <= sum + 1e-12 && gap >= max, "gap {gap} sum {sum} max {max}");
        assert!((b.norm_bound - 1.0).abs() < 1e-12);
        let lip = bn.lipschitz.unwrap();
        assert!(lip <= 2f64.powf(n as f64 * 1.2) / (1.0 - 2f64.powf(-1.2)) + 1e-12);
    }

    #[test]
    fn ridge_smoothing_matches_hermite_and_is_lipschitz() {
        let b = HolderDrift::power(vec![0.0, 0.0], vec![1.0, 0.0], 1.0, 2.0, 0.5).unwrap();
        let bn = b.mollify(2);
        for x in [[0.7, -0.4], [0.01, 0.3], [1.99, 0.0], [-2.5, 1.0]] {
            let exact = bn.eval_vec(&x)[0];
            let mut lo = [0.0; 2];
            let mut hi = [0.0; 2];
            b.heat_eval_hermite(1.0 / 16.0, &x, 16, &mut lo);
            b.heat_eval_hermite(1.0 / 16.0, &x, 32, &mut hi);
            // Tensor Hermite converges slowly across the cusp.
            assert!((hi[0] - exact).abs() < 2e-2, "{x:?}: {} vs {exact}", hi[0]);
            assert!((lo[0] - exact).abs() < 3e-2, "{x:?}: {} vs {exact}", lo[0]);
        }
        // Adaptive quadrature reference for E min(|0.01 + Z/4|, 2)^{1/2}.
        assert!((bn.eval_vec(&[0.01, 0.3])[0] - 0.41125388224881).abs() < 1e-10);
        let lip = bn.lipschitz.unwrap();
        let h = 1e-4;
        let grad = (0..400)
            .map(|i| {
                let u = -2.5 + i as f64 * 0.0125;
                (bn.eval_vec(&[u + h, 0.0])[0] - bn.eval_vec(&[u - h, 0.0])[0]).abs() / (2.0 * h)
            })
            .fold(0.0, f64::max);
        assert!(grad <= lip && grad > 0.3 * lip, "{grad} vs {lip}");
    }

    #[test]
    fn ridge_expectation_closed_forms() {
        // E|sZ|^alpha without truncation.
        let (s, a) = (0.3f64, 0.5);
        let want = s.powf(a) * abs_normal_moment(a);
        assert!((ridge_expectation(0.0, s, a, 1e6) - want).abs() < 1e-12 * want.max(1.0));
        // Far inside the truncation plateau.
        assert!((ridge_expectation(50.0, 0.5, a, 2.0) - 2f64.powf(a)).abs() < 1e-12);
    }
}
