//! The Gaussian semigroup `P_Γ f = p_Γ * f`, checks of the heat-kernel
//! bounds, and the conditional covariance `Γ[Y]` of the integrated tower.

mod bounds;
mod covariance;

pub use bounds::{
    box_grid, heat_diff_bound_check, heat_diff_sweep, heat_holder_bound_check, heat_holder_bound_check_fn, loglog_slope,
    stability_ratio, BoundReport, BoundRow, DiffBoundReport, STABILITY_THRESHOLD,
};
pub use covariance::{
    cov_gamma_monte_carlo,
    c_triple_prime, cov_gamma_bounds_check, cov_gamma_constant_y, cov_gamma_smooth, cov_gamma_smooth_order, sqrt_c_prime,
    CovBoundsReport, LEGENDRE_ORDER,
};

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};
use crate::fbm::MvnNormalization;
use crate::linalg::Mat;
use crate::quadrature::{gauss_hermite, Rule};

/// Default Gauss-Hermite order per axis.
pub const HERMITE_ORDER: usize = 16;

/// Symmetric positive definite covariance with its Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix {
    pub m: Mat,
    pub chol: Mat,
}

impl CovMatrix {
    pub fn new(mut m: Mat) -> Result<Self> {
        let asym = (0..m.n)
            .flat_map(|i| (0..m.n).map(move |j| (i, j)))
            .map(|(i, j)| (m.get(i, j) - m.get(j, i)).abs())
            .fold(0.0, f64::max);
        let scale = m.frobenius().max(f64::MIN_POSITIVE);
        if asym > 1e-12 * scale.max(1.0) {
            return Err(Error::Numerical(format!("covariance is not symmetric (defect {asym:.3e})")));
        }
        m.symmetrize();
        let chol = m.cholesky()?;
        Ok(Self { m, chol })
    }

    pub fn scaled_identity(d: usize, r: f64) -> Result<Self> {
        Self::new(Mat::scaled_identity(d, r))
    }

    pub fn dim(&self) -> usize {
        self.m.n
    }

    /// Gaussian density `p_Γ(x)`.
    pub fn density(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        // Solve L y = x.
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = x[i];
            for k in 0..i {
                s -= self.chol.get(i, k) * y[k];
            }
            y[i] = s / self.chol.get(i, i);
        }
        let q: f64 = y.iter().map(|v| v * v).sum();
        let det_sqrt: f64 = (0..d).map(|i| self.chol.get(i, i)).product();
        (-0.5 * q).exp() / ((2.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * det_sqrt)
    }
}

/// Tensor Gauss-Hermite nodes `z` and weights for `E g(Z)`, `Z ~ N(0, I_d)`.
#[derive(Clone, Debug)]
pub struct HermiteTensor {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl HermiteTensor {
    pub fn new(dim: usize, order: usize) -> Self {
        let r: Rule = gauss_hermite(order);
        let count = order.pow(dim as u32);
        let mut nodes = Vec::with_capacity(count * dim);
        let mut weights = Vec::with_capacity(count);
        for idx in 0..count {
            let mut rem = idx;
            let mut w = 1.0;
            for _ in 0..dim {
                let k = rem % order;
                rem /= order;
                nodes.push(r.nodes[k]);
                w *= r.weights[k];
            }
            weights.push(w);
        }
        Self { dim, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

fn cached_tensor(dim: usize, order: usize) -> std::sync::Arc<HermiteTensor> {
    static CACHE: OnceLock<RwLock<HashMap<(usize, usize), std::sync::Arc<HermiteTensor>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = cache.read().unwrap().get(&(dim, order)) {
        return t.clone();
    }
    let t = std::sync::Arc::new(HermiteTensor::new(dim, order));
    cache.write().unwrap().entry((dim, order)).or_insert(t).clone()
}

/// Shared tensor rule of the given order.
pub fn hermite_tensor(dim: usize, order: usize) -> std::sync::Arc<HermiteTensor> {
    cached_tensor(dim, order)
}

/// `P_Γ f(x)` for a vector-valued `f: R^d -> R^m` with Hermite `order` per axis.
pub fn heat_apply_vec(gamma: &CovMatrix, f: &dyn Fn(&[f64], &mut [f64]), m: usize, x: &[f64], order: usize, out: &mut [f64]) {
    let d = gamma.dim();
    let rule = cached_tensor(d, order);
    let mut y = vec![0.0; d];
    let mut val = vec![0.0; m];
    out[..m].iter_mut().for_each(|v| *v = 0.0);
    for i in 0..rule.len() {
        let z = rule.node(i);
        for a in 0..d {
            let mut s = 0.0;
            for b in 0..=a {
                s += gamma.chol.get(a, b) * z[b];
            }
            y[a] = x[a] - s;
        }
        f(&y, &mut val);
        for c in 0..m {
            out[c] += rule.weights[i] * val[c];
        }
    }
}

/// `P_Γ f(x)` for scalar `f` with the default order.
pub fn heat_apply(gamma: &CovMatrix, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
    heat_apply_order(gamma, f, x, HERMITE_ORDER)
}

pub fn heat_apply_order(gamma: &CovMatrix, f: &dyn Fn(&[f64]) -> f64, x: &[f64], order: usize) -> f64 {
    let mut out = [0.0];
    heat_apply_vec(gamma, &|y, o| o[0] = f(y), 1, x, order, &mut out);
    out[0]
}

/// Both normalising constants for `H in (0, 1)`, memoised.
pub fn c_of_h_normalizer(h: f64) -> Result<MvnNormalization> {
    static CACHE: OnceLock<RwLock<HashMap<u64, MvnNormalization>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(v) = cache.read().unwrap().get(&h.to_bits()) {
        return Ok(*v);
    }
    let v = MvnNormalization::new(h)?;
    cache.write().unwrap().insert(h.to_bits(), v);
    Ok(v)
}
