//! Diffusion coefficients `σ: R^d -> R^{d x d0}` with closed-form derivatives.

use std::f64::consts::FRAC_PI_2;

use crate::error::{config, Error, Result};
use crate::linalg::RectMat;

/// Entry `offset + amp sin(x[coord] + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SinEntry {
    pub offset: f64,
    pub amp: f64,
    pub coord: usize,
    pub phase: f64,
}

impl SinEntry {
    fn derivative(&self, x: &[f64], order: usize) -> f64 {
        let z = x[self.coord] + self.phase + order as f64 * FRAC_PI_2;
        if order == 0 {
            self.offset + self.amp * z.sin()
        } else {
            self.amp * z.sin()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiffusionKind {
    Constant(RectMat),
    /// Every entry depends on one coordinate through a sine.
    Sin { rows: usize, cols: usize, entries: Vec<SinEntry> },
    /// `σ(x) = c x`, `d = d0 = 1`.
    Linear1D { c: f64 },
}

/// `σ` together with its certified bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionField {
    pub kind: DiffusionKind,
    /// Bound on `|σ|` and its derivatives up to third order.
    pub norm_bound: f64,
    /// Certified lower bound for `σ σ^T`.
    pub lambda: f64,
}

impl DiffusionField {
    pub fn constant(m: RectMat) -> Self {
        let g = m.gram();
        let lambda = if m.rows <= m.cols { g.min_sym_eigenvalue().max(0.0) } else { 0.0 };
        let norm = crate::scalar::norm(&m.a);
        Self { kind: DiffusionKind::Constant(m), norm_bound: norm, lambda }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = RectMat::zeros(d, d);
        for i in 0..d {
            m.set(i, i, 1.0);
        }
        Self::constant(m)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = RectMat::zeros(d, d);
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        Self::constant(m)
    }

    pub fn zero(d: usize, d0: usize) -> Self {
        Self { kind: DiffusionKind::Constant(RectMat::zeros(d, d0)), norm_bound: 0.0, lambda: 0.0 }
    }

    pub fn linear_1d(c: f64) -> Self {
        Self { kind: DiffusionKind::Linear1D { c }, norm_bound: c.abs(), lambda: 0.0 }
    }

    /// `I + eps S` with `S_ii = sin(x_i + phi_i)` and antisymmetric off-diagonal
    /// entries `S_ij = -S_ji = sin(x_j + psi)` for `i < j`.
    pub fn sin_perturbed(d: usize, eps: f64, psi: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            return config(format!("sin perturbation needs 0 <= eps < 1/2, got {eps}"));
        }
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let e = if i == j {
                    SinEntry { offset: 1.0, amp: eps, coord: i, phase: 0.3 + 0.7 * i as f64 }
                } else {
                    let (lo, hi) = (i.min(j), i.max(j));
                    let sign = if i < j { 1.0 } else { -1.0 };
                    SinEntry { offset: 0.0, amp: sign * eps, coord: hi, phase: psi + 0.5 * lo as f64 }
                };
                entries.push(e);
            }
        }
        Ok(Self {
            kind: DiffusionKind::Sin { rows: d, cols: d, entries },
            norm_bound: (d as f64).sqrt() + eps * d as f64,
            // σσ^T = I + eps (S + S^T) + eps^2 S S^T and S + S^T is diagonal.
            lambda: 1.0 - 2.0 * eps,
        })
    }

    /// Default field of the test configurations.
    pub fn default_field(d: usize) -> Self {
        Self::sin_perturbed(d, 0.1, 0.9).expect("valid default")
    }

    /// Bounds on `sup |σ|` and on `|∇^k σ|` for `k = 1, 2, 3`, Frobenius on the
    /// values and operator norm in the spatial arguments.
    pub fn derivative_bounds(&self) -> [f64; 4] {
        match &self.kind {
            DiffusionKind::Constant(m) => [crate::scalar::norm(&m.a), 0.0, 0.0, 0.0],
            DiffusionKind::Sin { entries, .. } => {
                let sup = entries.iter().map(|e| (e.offset.abs() + e.amp.abs()).powi(2)).sum::<f64>().sqrt();
                let d = self.dim();
                // Entries depending on x_k contribute to the k-th partials only.
                let der = (0..d)
                    .map(|k| entries.iter().filter(|e| e.coord == k).map(|e| e.amp * e.amp).sum::<f64>())
                    .sum::<f64>()
                    .sqrt();
                [sup, der, der, der]
            }
            DiffusionKind::Linear1D { c } => [f64::INFINITY, c.abs(), 0.0, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DiffusionKind::Constant(m) => m.rows,
            DiffusionKind::Sin { rows, .. } => *rows,
            DiffusionKind::Linear1D { .. } => 1,
        }
    }

    pub fn noise_dim(&self) -> usize {
        match &self.kind {
            DiffusionKind::Constant(m) => m.cols,
            DiffusionKind::Sin { cols, .. } => *cols,
            DiffusionKind::Linear1D { .. } => 1,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, DiffusionKind::Constant(_))
    }

    pub fn eval_into(&self, x: &[f64], out: &mut RectMat) {
        match &self.kind {
            DiffusionKind::Constant(m) => out.a.copy_from_slice(&m.a),
            DiffusionKind::Sin { entries, .. } => {
                for (o, e) in out.a.iter_mut().zip(entries) {
                    *o = e.derivative(x, 0);
                }
            }
            DiffusionKind::Linear1D { c } => out.a[0] = c * x[0],
        }
    }

    pub fn eval(&self, x: &[f64]) -> RectMat {
        let mut out = RectMat::zeros(self.dim(), self.noise_dim());
        self.eval_into(x, &mut out);
        out
    }

    /// Mixed partial `∂_{ks[0]} ∂_{ks[1]} ... σ(x)`.
    pub fn partial(&self, x: &[f64], ks: &[usize]) -> RectMat {
        let mut out = RectMat::zeros(self.dim(), self.noise_dim());
        if ks.is_empty() {
            self.eval_into(x, &mut out);
            return out;
        }
        match &self.kind {
            DiffusionKind::Constant(_) => {}
            DiffusionKind::Sin { entries, .. } => {
                for (o, e) in out.a.iter_mut().zip(entries) {
                    if ks.iter().all(|k| *k == e.coord) {
                        *o = e.derivative(x, ks.len());
                    }
                }
            }
            DiffusionKind::Linear1D { c } => {
                if ks.len() == 1 {
                    out.a[0] = *c;
                }
            }
        }
        out
    }

    /// `∂_k σ` for `k = 0..d`.
    pub fn jacobian(&self, x: &[f64]) -> Vec<RectMat> {
        (0..self.dim()).map(|k| self.partial(x, &[k])).collect()
    }

    /// `∂_k ∂_l σ` at index `k d + l`.
    pub fn hessian(&self, x: &[f64]) -> Vec<RectMat> {
        let d = self.dim();
        (0..d * d).map(|i| self.partial(x, &[i / d, i % d])).collect()
    }

    /// `∂_k ∂_l ∂_m σ` at index `(k d + l) d + m`.
    pub fn third(&self, x: &[f64]) -> Vec<RectMat> {
        let d = self.dim();
        (0..d * d * d).map(|i| self.partial(x, &[i / (d * d), (i / d) % d, i % d])).collect()
    }

    /// `(∇σ σ)^{i}_{l j} = Σ_k ∂_k σ_{ij} σ_{kl}`, stored at `(i d0 + l) d0 + j`.
    pub fn sigma_grad_sigma(&self, x: &[f64], out: &mut [f64]) {
        let (d, d0) = (self.dim(), self.noise_dim());
        out[..d * d0 * d0].iter_mut().for_each(|v| *v = 0.0);
        if self.is_constant() {
            return;
        }
        let s = self.eval(x);
        for k in 0..d {
            let dk = self.partial(x, &[k]);
            for i in 0..d {
                for j in 0..d0 {
                    let a = dk.get(i, j);
                    if a == 0.0 {
                        continue;
                    }
                    for l in 0..d0 {
                        out[(i * d0 + l) * d0 + j] += a * s.get(k, l);
                    }
                }
            }
        }
    }
}

/// Smallest eigenvalue of `σσ^T` over `states`; errors if it drops below `sigma.lambda`.
pub fn ellipticity_margin(sigma: &DiffusionField, states: &[Vec<f64>]) -> Result<f64> {
    if states.is_empty() {
        return config("ellipticity margin needs a nonempty sample set");
    }
    let mut margin = f64::INFINITY;
    for x in states {
        let m = sigma.eval(x).gram().min_sym_eigenvalue();
        if m < sigma.lambda - 1e-12 {
            return Err(Error::Assumption(format!(
                "sigma sigma^T has eigenvalue {m:.6} < lambda = {:.6} at state {x:?}",
                sigma.lambda
            )));
        }
        margin = margin.min(m);
    }
    Ok(margin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn trivial_margins() {
        let id = DiffusionField::identity(2);
        let states = vec![vec![0.0, 0.0], vec![1.0, -3.0]];
        assert_eq!(ellipticity_margin(&id, &states).unwrap(), 1.0);
        let diag = DiffusionField::diagonal(&[2.0, 1.0]);
        assert_eq!(ellipticity_margin(&diag, &states).unwrap(), 1.0);
        assert!(ellipticity_margin(&id, &[]).is_err());
        let mut bad = DiffusionField::linear_1d(1.0);
        bad.lambda = 0.5;
        let err = ellipticity_margin(&bad, &[vec![0.0]]).unwrap_err().to_string();
        assert!(err.contains("[0.0]"), "{err}");
    }

    #[test]
    fn default_field_margin() {
        let s = DiffusionField::default_field(2);
        let states: Vec<Vec<f64>> = (0..64)
            .flat_map(|i| (0..64).map(move |j| vec![i as f64 * 0.1, j as f64 * 0.1]))
            .collect();
        let m = ellipticity_margin(&s, &states).unwrap();
        assert!(m >= 0.8 && m < 0.85, "{m}");
    }

    fn fd_matches(s: &DiffusionField, order: usize) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = s.dim();
        let h = 1e-5;
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            let idx: Vec<usize> = (0..order).map(|_| rng.random_range(0..d)).collect();
            let (last, rest) = idx.split_last().unwrap();
            let mut xp = x.clone();
            xp[*last] += h;
            let mut xm = x.clone();
            xm[*last] -= h;
            let (p, m) = (s.partial(&xp, rest), s.partial(&xm, rest));
            let exact = s.partial(&x, &idx);
            for k in 0..exact.a.len() {
                let fd = (p.a[k] - m.a[k]) / (2.0 * h);
                let tol = 1e-6 * exact.a[k].abs().max(1e-2 * s.norm_bound);
                assert!((fd - exact.a[k]).abs() <= tol, "order {order}: fd {fd} vs {}", exact.a[k]);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = DiffusionField::default_field(2);
        for order in 1..=3 {
            fd_matches(&s, order);
        }
        fd_matches(&DiffusionField::linear_1d(0.7), 1);
    }

    #[test]
    fn derivative_bounds_hold_on_samples() {
        let s = DiffusionField::default_field(2);
        let b = s.derivative_bounds();
        assert!(b.iter().all(|v| *v <= s.norm_bound));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert!(crate::scalar::norm(&s.eval(&x).a) <= b[0]);
            let j = s.jacobian(&x);
            let fro: f64 = j.iter().map(|m| m.a.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt();
            assert!(fro <= b[1] + 1e-15);
        }
    }

    #[test]
    fn sigma_grad_sigma_linear() {
        let s = DiffusionField::linear_1d(2.0);
        let mut out = [0.0];
        s.sigma_grad_sigma(&[1.5], &mut out);
        assert_eq!(out[0], 2.0 * 3.0);
    }
}
