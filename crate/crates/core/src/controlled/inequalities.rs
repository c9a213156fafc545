//! Grid checks of the controlled-path inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{compose, controlled_seminorm_window, ControlledPath, SmoothMap};
use crate::error::{config, Result};
use crate::holder::{holder_seminorm_window, sup_over_pairs, PairPolicy};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl InequalityRow {
    fn leq(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) + 1e-300 }
    }

    /// `rhs / lhs`.
    pub fn slack(&self) -> f64 {
        if self.lhs > 0.0 { self.rhs / self.lhs } else { f64::INFINITY }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&InequalityRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

fn seminorm<T: Real>(cp: &ControlledPath<T>, gamma: f64, k0: usize, k1: usize, policy: PairPolicy) -> f64 {
    controlled_seminorm_window(cp, gamma, k0, k1, policy).total().to_f64_lossy()
}

fn derivative_holder<T: Real>(cp: &ControlledPath<T>, beta: f64, k0: usize, k1: usize, policy: PairPolicy) -> f64 {
    let h = cp.f.grid.step();
    sup_over_pairs(k0, k1, h, beta, policy, |u, v| crate::scalar::dist(cp.f_prime.at(u), cp.f_prime.at(v)))
        .value
        .to_f64_lossy()
}

fn derivative_sup_fro<T: Real>(cp: &ControlledPath<T>, k0: usize, k1: usize) -> f64 {
    (k0..=k1).map(|k| crate::scalar::norm(cp.f_prime.at(k)).to_f64_lossy()).fold(0.0, f64::max)
}

/// Embedding, monotonicity in `gamma` on `windows` random windows, and the
/// partition inequality for the node indices `partition` (increasing).
pub fn verify_controlled_inequalities<T: Real>(
    cp: &ControlledPath<T>,
    gamma_prime: f64,
    partition: &[usize],
    windows: usize,
    seed: u64,
    policy: PairPolicy,
) -> Result<InequalityReport> {
    let n = cp.f.grid.n_steps;
    let h = cp.f.grid.step();
    let (alpha, gamma) = (cp.alpha, cp.gamma);
    if !(gamma_prime > gamma && gamma_prime <= 2.0 * alpha + 1e-12) {
        return config(format!("gamma' = {gamma_prime} must lie in (gamma, 2 alpha]"));
    }
    if partition.len() < 2 || partition.windows(2).any(|w| w[0] >= w[1]) || *partition.last().unwrap() > n {
        return config("partition must be strictly increasing grid indices");
    }
    let mut rows = Vec::new();

    // [f]_α <= [(f, f')]_D |t-s|^{γ-α} + ‖f'‖ [g]_α.
    let len = n as f64 * h;
    let lhs = holder_seminorm_window(&cp.f, alpha, 0, n, policy).value.to_f64_lossy();
    let g_alpha = holder_seminorm_window(&cp.driver, alpha, 0, n, policy).value.to_f64_lossy();
    let rhs = seminorm(cp, gamma, 0, n, policy) * len.powf(gamma - alpha) + cp.derivative_sup(0, n).to_f64_lossy() * g_alpha;
    rows.push(InequalityRow::leq("embedding", lhs, rhs));

    // [(f,f')]_{D^γ} <= |t-s|^{γ'-γ} [(f,f')]_{D^{γ'}} on random windows; worst ratio kept.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = InequalityRow::leq("increasing", 0.0, 0.0);
    let mut worst_ratio = f64::NEG_INFINITY;
    for _ in 0..windows {
        let a = rng.random_range(0..n);
        let b = rng.random_range(a + 1..=n);
        let l = (b - a) as f64 * h;
        let row = InequalityRow::leq("increasing", seminorm(cp, gamma, a, b, policy), l.powf(gamma_prime - gamma) * seminorm(cp, gamma_prime, a, b, policy));
        let ratio = if row.rhs > 0.0 { row.lhs / row.rhs } else if row.lhs > 0.0 { f64::INFINITY } else { 0.0 };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst = row;
        }
    }
    rows.push(worst);

    // Partition inequality.
    let k = partition.len() - 1;
    let (u0, uk) = (partition[0], partition[k]);
    let lhs = seminorm(cp, gamma, u0, uk, policy);
    let mut rhs = 0.0;
    for i in 1..=k {
        rhs += seminorm(cp, gamma, partition[i - 1], partition[i], policy);
    }
    for i in 1..k {
        let fp = derivative_holder(cp, gamma - alpha, partition[i - 1], partition[i], policy);
        let g = holder_seminorm_window(&cp.driver, alpha, partition[i], uk, policy).value.to_f64_lossy();
        rhs += fp * g;
    }
    rows.push(InequalityRow::leq("sum_partition", lhs, rhs));
    Ok(InequalityReport { rows })
}

/// Composition growth bound with `beta = 1` on nodes `k0..=k1` (window length at most 1).
pub fn composition_bound_check(map: &dyn SmoothMap<f64>, cp: &ControlledPath<f64>, k0: usize, k1: usize, policy: PairPolicy) -> Result<InequalityRow> {
    let composed = compose(map, cp)?;
    let gamma = cp.gamma;
    let lhs = seminorm(&composed, gamma, k0, k1, policy);
    let b = map.bounds();
    let d = seminorm(cp, gamma, k0, k1, policy);
    let fp = derivative_sup_fro(cp, k0, k1);
    let g = holder_seminorm_window(&cp.driver, cp.alpha, k0, k1, policy).value;
    let rhs = b[1] * d + b[2] * fp * (1.0 + g) * (d + g * fp);
    Ok(InequalityRow::leq("composition", lhs, rhs))
}

/// `[(F(f) - F(f_ε), ∇F(f) f' - ∇F(f_ε) f'_ε)]_D` for `f_ε = f + ε Δ`; passes when it decreases with `ε`.
pub fn composition_stability_sweep(
    map: &dyn SmoothMap<f64>,
    cp: &ControlledPath<f64>,
    delta: &ControlledPath<f64>,
    eps: &[f64],
    policy: PairPolicy,
) -> Result<(Vec<(f64, f64)>, InequalityRow)> {
    if !cp.same_noise(delta) {
        return config("perturbation must share the driver");
    }
    let base = compose(map, cp)?;
    let n = cp.f.grid.n_steps;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        let mut p = cp.clone();
        p.f.values.iter_mut().zip(&delta.f.values).for_each(|(a, b)| *a += e * b);
        p.f_prime.values.iter_mut().zip(&delta.f_prime.values).for_each(|(a, b)| *a += e * b);
        let c = compose(map, &p)?;
        let mut diff = base.clone();
        diff.f.values.iter_mut().zip(&c.f.values).for_each(|(a, b)| *a -= b);
        diff.f_prime.values.iter_mut().zip(&c.f_prime.values).for_each(|(a, b)| *a -= b);
        out.push((e, seminorm(&diff, cp.gamma, 0, n, policy)));
    }
    let mut sorted = out.clone();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let monotone = sorted.windows(2).all(|w| w[1].1 <= w[0].1);
    let first = sorted.first().map(|r| r.1).unwrap_or(0.0);
    let last = sorted.last().map(|r| r.1).unwrap_or(0.0);
    let row = InequalityRow { name: "composition_stability".into(), lhs: last, rhs: first, pass: monotone };
    Ok((out, row))
}
