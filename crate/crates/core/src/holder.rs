//! Grid estimators of Hölder-type seminorms.
//!
//! Pairs are either all node pairs of the window or a dyadic family: lags
//! `2^j` steps whose left endpoint lies on a subgrid of spacing `2^(j-4)`.
//! Small windows are always treated exhaustively.

use crate::grid::GridPath;
use crate::scalar::Real;

/// Windows with at most this many nodes are scanned exhaustively.
pub const EXHAUSTIVE_NODES: usize = 1 << 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PairPolicy {
    /// Exhaustive for small windows, dyadic otherwise.
    #[default]
    Auto,
    Exhaustive,
    Dyadic,
}

impl PairPolicy {
    pub fn is_exhaustive(self, nodes: usize) -> bool {
        match self {
            PairPolicy::Auto => nodes <= EXHAUSTIVE_NODES,
            PairPolicy::Exhaustive => true,
            PairPolicy::Dyadic => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeminormEstimate<T> {
    pub value: T,
    /// Node pair attaining the maximum.
    pub argmax: (usize, usize),
    pub exhaustive: bool,
}

/// Subgrid spacing used for lag `2^j` in the dyadic family.
pub fn dyadic_spacing(j: u32) -> usize {
    1usize << j.saturating_sub(4)
}

/// Calls `f(u)` for every left endpoint `u >= k0` paired with right endpoint `v`.
pub fn for_each_left_endpoint(v: usize, k0: usize, exhaustive: bool, mut f: impl FnMut(usize)) {
    if v <= k0 {
        return;
    }
    if exhaustive {
        for u in k0..v {
            f(u);
        }
        return;
    }
    let mut j = 0u32;
    while (1usize << j) <= v - k0 {
        let u = v - (1usize << j);
        if u % dyadic_spacing(j) == 0 {
            f(u);
        }
        j += 1;
    }
}

/// Sup over pairs `k0 <= u < v <= k1` of `q(u, v) / (h (v - u))^beta`.
pub fn sup_over_pairs<T: Real>(
    k0: usize,
    k1: usize,
    h: f64,
    beta: f64,
    policy: PairPolicy,
    mut q: impl FnMut(usize, usize) -> T,
) -> SeminormEstimate<T> {
    let exhaustive = policy.is_exhaustive(k1 + 1 - k0);
    let mut best = SeminormEstimate { value: T::zero(), argmax: (k0, k0), exhaustive };
    let hb = h.powf(beta);
    let mut lag_pow = vec![T::zero(); k1 - k0 + 1];
    for (l, v) in lag_pow.iter_mut().enumerate().skip(1) {
        *v = T::lit(1.0 / (hb * (l as f64).powf(beta)));
    }
    for v in k0 + 1..=k1 {
        for_each_left_endpoint(v, k0, exhaustive, |u| {
            let val = q(u, v) * lag_pow[v - u];
            if val > best.value {
                best.value = val;
                best.argmax = (u, v);
            }
        });
    }
    best
}

/// `[x]_{C^beta}` on nodes `k0..=k1`.
pub fn holder_seminorm_window<T: Real>(
    p: &GridPath<T>,
    beta: f64,
    k0: usize,
    k1: usize,
    policy: PairPolicy,
) -> SeminormEstimate<T> {
    sup_over_pairs(k0, k1, p.grid.step(), beta, policy, |u, v| p.increment_norm(u, v))
}

/// `[x]_{C^beta}` over the whole grid.
pub fn holder_seminorm<T: Real>(p: &GridPath<T>, beta: f64, policy: PairPolicy) -> SeminormEstimate<T> {
    holder_seminorm_window(p, beta, 0, p.grid.n_steps, policy)
}

/// Running seminorm: `out[v] = [x]_{C^beta}` on nodes `0..=v`, same pair family as the full grid.
pub fn running_holder_seminorm<T: Real>(p: &GridPath<T>, beta: f64, policy: PairPolicy) -> Vec<T> {
    running_sup(p.grid.n_steps, p.grid.step(), beta, policy, |u, v| p.increment_norm(u, v))
}

/// Running version of [`sup_over_pairs`] on `0..=n`.
pub fn running_sup<T: Real>(
    n: usize,
    h: f64,
    beta: f64,
    policy: PairPolicy,
    mut q: impl FnMut(usize, usize) -> T,
) -> Vec<T> {
    let exhaustive = policy.is_exhaustive(n + 1);
    let hb = h.powf(beta);
    let mut out = vec![T::zero(); n + 1];
    let mut run = T::zero();
    for v in 1..=n {
        for_each_left_endpoint(v, 0, exhaustive, |u| {
            let val = q(u, v) / T::lit(hb * ((v - u) as f64).powf(beta));
            if val > run {
                run = val;
            }
        });
        out[v] = run;
    }
    out
}

/// Sup norm plus `[x]_{C^beta}`.
pub fn holder_norm<T: Real>(p: &GridPath<T>, beta: f64, policy: PairPolicy) -> T {
    p.sup_norm() + holder_seminorm(p, beta, policy).value
}

/// Grid estimate of `[x - y]_{C^beta}` for paths on the same grid.
pub fn holder_distance<T: Real>(a: &GridPath<T>, b: &GridPath<T>, beta: f64, policy: PairPolicy) -> T {
    let d = a.dim;
    sup_over_pairs(0, a.grid.n_steps, a.grid.step(), beta, policy, |u, v| {
        let mut s = T::zero();
        for i in 0..d {
            let x = (a.get(v, i) - a.get(u, i)) - (b.get(v, i) - b.get(u, i));
            s += x * x;
        }
        s.sqrt()
    })
    .value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    #[test]
    fn linear_path_has_unit_lipschitz_quotient() {
        let g = TimeGrid::unit(1000).unwrap();
        let p = GridPath::<f64>::from_fn(g, 1, |t, v| v[0] = 3.0 * t);
        for policy in [PairPolicy::Exhaustive, PairPolicy::Dyadic] {
            let s = holder_seminorm(&p, 1.0, policy);
            assert!((s.value - 3.0).abs() < 1e-10);
        }
        // Square root path: C^{1/2} quotient is maximal on pairs starting at 0.
        let q = GridPath::<f64>::from_fn(g, 1, |t, v| v[0] = t.sqrt());
        let s = holder_seminorm(&q, 0.5, PairPolicy::Dyadic);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn running_matches_windows() {
        let g = TimeGrid::unit(64).unwrap();
        let p = GridPath::<f64>::from_fn(g, 1, |t, v| v[0] = (17.0 * t).sin());
        let run = running_holder_seminorm(&p, 0.6, PairPolicy::Exhaustive);
        for k in [5usize, 20, 64] {
            let w = holder_seminorm_window(&p, 0.6, 0, k, PairPolicy::Exhaustive).value;
            assert!((run[k] - w).abs() < 1e-14);
        }
    }

    #[test]
    fn dyadic_left_endpoints() {
        let mut us = Vec::new();
        for_each_left_endpoint(64, 0, false, |u| us.push(u));
        assert_eq!(us, vec![63, 62, 60, 56, 48, 32, 0]);
        us.clear();
        // Lag 32 = 2^5 requires u on a spacing-2 subgrid.
        for_each_left_endpoint(33, 0, false, |u| us.push(u));
        assert_eq!(us, vec![32, 31, 29, 25, 17]);
    }
}
