//! Rough path lifts `(g, 𝐠)` stored on dyadic intervals, Chen defects,
//! rough seminorms, stopping times and the exponent policy.

mod exponents;
mod stopping;

pub use exponents::{exponents, Exponents, Regime};
pub use stopping::{
    first_crossing, stopping_time_rough, stopping_time_smooth, stopping_time_young, Monitored, StoppingTime,
};

use crate::error::{config, Result};
use crate::fbm::FbmPath;
use crate::grid::{GridPath, TimeGrid};
use crate::holder::{running_sup, sup_over_pairs, PairPolicy};
use crate::io::fmt_e12;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftKind {
    /// Piecewise-linear (Wong-Zakai) areas.
    Geometric,
    /// Left-point areas.
    Ito,
}

/// A path with second-level increments on the dyadic intervals of its grid.
///
/// Level `j` holds the areas of `[i 2^j, (i + 1) 2^j]` (grid steps), each
/// computed directly from the fine increments it was built from.
#[derive(Clone, Debug)]
pub struct RoughPathLift<T> {
    pub path: GridPath<T>,
    pub kind: LiftKind,
    pub alpha_nominal: f64,
    pub refinement: usize,
    levels: Vec<Vec<T>>,
}

fn outer_add<T: Real>(out: &mut [T], a: &[T], b: &[T], scale: T) {
    let d = a.len();
    for l in 0..d {
        for j in 0..d {
            out[l * d + j] += scale * a[l] * b[j];
        }
    }
}

/// Area of the fine steps `f0..f1` relative to `f0`.
fn fine_area<T: Real>(fine: &GridPath<T>, f0: usize, f1: usize, kind: LiftKind, out: &mut [T]) {
    let d = fine.dim;
    out.iter_mut().for_each(|v| *v = T::zero());
    let mut rel = vec![T::zero(); d];
    let mut inc = vec![T::zero(); d];
    let half = T::lit(0.5);
    for u in f0..f1 {
        for c in 0..d {
            rel[c] = fine.get(u, c) - fine.get(f0, c);
        }
        fine.increment(u, u + 1, &mut inc);
        outer_add(out, &rel, &inc, T::one());
        if kind == LiftKind::Geometric {
            outer_add(out, &inc, &inc, half);
        }
    }
}

impl<T: Real> RoughPathLift<T> {
    /// Lift of `fine` stored on `coarse`, which `fine` must refine by an integer factor.
    pub fn from_fine(fine: &GridPath<T>, coarse: TimeGrid, kind: LiftKind, alpha_nominal: f64) -> Result<Self> {
        let r = coarse.refinement_factor(&fine.grid)?;
        let d = fine.dim;
        let n = coarse.n_steps;
        let path = fine.subsample(r)?;
        let mut levels = Vec::new();
        let mut j = 0u32;
        while (1usize << j) <= n {
            let len = 1usize << j;
            let count = n / len;
            let mut lv = vec![T::zero(); count * d * d];
            for i in 0..count {
                fine_area(fine, i * len * r, (i + 1) * len * r, kind, &mut lv[i * d * d..(i + 1) * d * d]);
            }
            levels.push(lv);
            j += 1;
        }
        Ok(Self { path, kind, alpha_nominal, refinement: r, levels })
    }

    pub fn dim(&self) -> usize {
        self.path.dim
    }

    pub fn grid(&self) -> TimeGrid {
        self.path.grid
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Area of dyadic block `i` at level `j`.
    pub fn dyadic_area(&self, j: usize, i: usize) -> &[T] {
        let dd = self.dim() * self.dim();
        &self.levels[j][i * dd..(i + 1) * dd]
    }

    /// Mutable access to a stored block, for perturbation experiments.
    pub fn dyadic_area_mut(&mut self, j: usize, i: usize) -> &mut [T] {
        let dd = self.dim() * self.dim();
        &mut self.levels[j][i * dd..(i + 1) * dd]
    }

    /// Area over grid step `k`.
    pub fn step_area(&self, k: usize) -> &[T] {
        self.dyadic_area(0, k)
    }

    /// Maximal dyadic blocks covering `[s, t]` in node indices, left to right.
    pub fn decompose(&self, s: usize, t: usize) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut a = s;
        while a < t {
            let mut j = 0usize;
            while j + 1 < self.levels.len() && a % (1 << (j + 1)) == 0 && a + (1 << (j + 1)) <= t {
                j += 1;
            }
            blocks.push((j, a >> j));
            a += 1 << j;
        }
        blocks
    }

    /// `𝐠_{s,t}` for node indices `s <= t`, via Chen from dyadic blocks.
    pub fn area(&self, s: usize, t: usize) -> Vec<T> {
        let d = self.dim();
        let mut acc = vec![T::zero(); d * d];
        let mut left = vec![T::zero(); d];
        let mut inc = vec![T::zero(); d];
        for (j, i) in self.decompose(s, t) {
            let p = i << j;
            let q = p + (1 << j);
            let blk = self.dyadic_area(j, i);
            for (a, b) in acc.iter_mut().zip(blk) {
                *a += *b;
            }
            self.path.increment(s, p, &mut left);
            self.path.increment(p, q, &mut inc);
            outer_add(&mut acc, &left, &inc, T::one());
        }
        acc
    }

    /// `𝐠_{s,t} - 𝐠_{s,u} - 𝐠_{u,t} - (g_u - g_s) ⊗ (g_t - g_u)` on node indices.
    pub fn chen_defect_nodes(&self, s: usize, u: usize, t: usize) -> Result<Vec<T>> {
        if !(s <= u && u <= t && t <= self.grid().n_steps) {
            return config(format!("Chen triple ({s}, {u}, {t}) is not ordered on the grid"));
        }
        let mut out = self.area(s, t);
        for (o, (a, b)) in out.iter_mut().zip(self.area(s, u).iter().zip(self.area(u, t).iter())) {
            *o -= *a + *b;
        }
        let d = self.dim();
        let mut left = vec![T::zero(); d];
        let mut right = vec![T::zero(); d];
        self.path.increment(s, u, &mut left);
        self.path.increment(u, t, &mut right);
        outer_add(&mut out, &left, &right, -T::one());
        Ok(out)
    }

    /// [`Self::chen_defect_nodes`] at grid times.
    pub fn chen_defect(&self, s: f64, u: f64, t: f64) -> Result<Vec<T>> {
        let g = self.grid();
        let idx = |x: f64| g.index_of(x).ok_or_else(|| crate::Error::Config(format!("time {x} is not a grid node")));
        self.chen_defect_nodes(idx(s)?, idx(u)?, idx(t)?)
    }

    /// Max-norm Chen defect over all stored parent/child dyadic triples.
    pub fn max_dyadic_chen_defect(&self) -> T {
        let d = self.dim();
        let mut worst = T::zero();
        let mut left = vec![T::zero(); d];
        let mut right = vec![T::zero(); d];
        for j in 1..self.levels.len() {
            let count = self.levels[j].len() / (d * d);
            for i in 0..count {
                let s = i << j;
                let u = s + (1 << (j - 1));
                let t = s + (1 << j);
                let mut def: Vec<T> = self.dyadic_area(j, i).to_vec();
                for (o, (a, b)) in def
                    .iter_mut()
                    .zip(self.dyadic_area(j - 1, 2 * i).iter().zip(self.dyadic_area(j - 1, 2 * i + 1)))
                {
                    *o -= *a + *b;
                }
                self.path.increment(s, u, &mut left);
                self.path.increment(u, t, &mut right);
                outer_add(&mut def, &left, &right, -T::one());
                for v in def {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    fn area_norm(&self, s: usize, t: usize) -> T {
        crate::scalar::norm(&self.area(s, t))
    }

    /// `max([g]_{C^alpha}, [𝐠]_{C^{2 alpha}_2})` on nodes `k0..=k1`.
    pub fn rough_seminorm_window(&self, alpha: f64, k0: usize, k1: usize, policy: PairPolicy) -> T {
        let h = self.grid().step();
        let p = sup_over_pairs(k0, k1, h, alpha, policy, |u, v| self.path.increment_norm(u, v)).value;
        let a = sup_over_pairs(k0, k1, h, 2.0 * alpha, policy, |u, v| self.area_norm(u, v)).value;
        p.max(a)
    }

    pub fn rough_seminorm(&self, alpha: f64, policy: PairPolicy) -> T {
        self.rough_seminorm_window(alpha, 0, self.grid().n_steps, policy)
    }

    /// Running rough seminorm on `[0, t_v]` for every node `v`.
    pub fn running_rough_seminorm(&self, alpha: f64, policy: PairPolicy) -> Vec<T> {
        let n = self.grid().n_steps;
        let h = self.grid().step();
        let p = running_sup(n, h, alpha, policy, |u, v| self.path.increment_norm(u, v));
        let a = running_sup(n, h, 2.0 * alpha, policy, |u, v| self.area_norm(u, v));
        p.into_iter().zip(a).map(|(x, y)| x.max(y)).collect()
    }

    /// Rows `(s, t, entries)` for every stored dyadic interval.
    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let g = self.grid();
        let mut rows = Vec::new();
        for j in 0..self.levels.len() {
            let count = self.levels[j].len() / (self.dim() * self.dim());
            for i in 0..count {
                let mut r = vec![fmt_e12(g.time(i << j)), fmt_e12(g.time((i + 1) << j))];
                r.extend(self.dyadic_area(j, i).iter().map(|v| fmt_e12(v.to_f64_lossy())));
                rows.push(r);
            }
        }
        rows
    }

    pub fn csv_header(&self) -> Vec<String> {
        let d = self.dim();
        let mut h = vec!["s".to_string(), "t".to_string()];
        for l in 1..=d {
            for j in 1..=d {
                h.push(format!("a{l}{j}"));
            }
        }
        h
    }
}

/// Geometric lift of an fBm sampled on a fine grid, stored on `coarse`.
pub fn lift_geometric(fbm: &FbmPath, coarse: TimeGrid) -> Result<RoughPathLift<f64>> {
    if !(fbm.hurst > 1.0 / 3.0 && fbm.hurst <= 0.5) {
        return config(format!("geometric lift needs H in (1/3, 1/2], got {}", fbm.hurst));
    }
    check_factor(&fbm.path, coarse)?;
    RoughPathLift::from_fine(&fbm.path, coarse, LiftKind::Geometric, fbm.hurst)
}

/// Itô lift of a Brownian path (`H = 1/2`) sampled on a fine grid.
pub fn lift_ito(fbm: &FbmPath, coarse: TimeGrid) -> Result<RoughPathLift<f64>> {
    if fbm.hurst != 0.5 {
        return config(format!("the Itô lift is only defined for H = 1/2, got {}", fbm.hurst));
    }
    check_factor(&fbm.path, coarse)?;
    RoughPathLift::from_fine(&fbm.path, coarse, LiftKind::Ito, 0.5)
}

fn check_factor(fine: &GridPath<f64>, coarse: TimeGrid) -> Result<()> {
    let r = coarse.refinement_factor(&fine.grid)?;
    if r < 2 {
        return config("lifts need a refinement factor of at least 2");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::sample_mvn;

    fn fbm_lift(h: f64, seed: u64, n: usize, r: usize) -> RoughPathLift<f64> {
        let fine = sample_mvn(TimeGrid::unit(n * r).unwrap(), 2, h, seed, -8.0).unwrap();
        lift_geometric(&fine, TimeGrid::unit(n).unwrap()).unwrap()
    }

    #[test]
    fn chen_holds_on_dyadic_and_arbitrary_triples() {
        let l = fbm_lift(0.4, 1, 64, 8);
        assert!(l.max_dyadic_chen_defect() < 1e-12);
        for (s, u, t) in [(0, 13, 64), (5, 5, 9), (3, 40, 41), (7, 7, 7)] {
            let d = l.chen_defect_nodes(s, u, t).unwrap();
            assert!(d.iter().all(|v| v.abs() < 1e-12));
        }
        assert!(l.chen_defect_nodes(5, 3, 9).is_err());
        assert!(l.chen_defect(0.0, 0.3, 1.0).is_err());
        assert!(l.area(9, 9).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn line_area_is_half_square() {
        let fine = GridPath::<f64>::from_fn(TimeGrid::unit(256).unwrap(), 2, |t, v| {
            v[0] = 2.0 * t;
            v[1] = -t;
        });
        let l = RoughPathLift::from_fine(&fine, TimeGrid::unit(16).unwrap(), LiftKind::Geometric, 0.5).unwrap();
        let a = l.area(3, 11);
        let dt = 0.5;
        let want = [4.0, -2.0, -2.0, 1.0].map(|x: f64| x * dt * dt / 2.0);
        for (x, y) in a.iter().zip(want.iter()) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {want:?}");
        }
    }

    #[test]
    fn one_dimensional_geometric_area_is_exact() {
        let fine = sample_mvn(TimeGrid::unit(512).unwrap(), 1, 0.4, 3, -8.0).unwrap();
        let l = lift_geometric(&fine, TimeGrid::unit(32).unwrap()).unwrap();
        for (s, t) in [(0, 32), (3, 17)] {
            let inc = l.path.get(t, 0) - l.path.get(s, 0);
            assert!((l.area(s, t)[0] - inc * inc / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_block_shows_up_in_defect() {
        let mut l = fbm_lift(0.45, 2, 32, 4);
        l.dyadic_area_mut(3, 1)[1] += 0.25;
        // Block (3, 1) is [8, 16]; its children are untouched.
        let d = l.chen_defect_nodes(8, 12, 16).unwrap();
        assert!((d[1] - 0.25).abs() < 1e-12);
        let d = l.chen_defect_nodes(0, 8, 16).unwrap();
        assert!((d[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn refinement_errors_and_ito_context() {
        let fine = sample_mvn(TimeGrid::unit(100).unwrap(), 1, 0.4, 3, -8.0).unwrap();
        assert!(lift_geometric(&fine, TimeGrid::unit(30).unwrap()).is_err());
        assert!(lift_ito(&fine, TimeGrid::unit(50).unwrap()).is_err());
        let young = sample_mvn(TimeGrid::unit(100).unwrap(), 1, 0.7, 3, -8.0).unwrap();
        assert!(lift_geometric(&young, TimeGrid::unit(50).unwrap()).is_err());
    }

    #[test]
    fn rough_seminorm_of_a_line() {
        let fine = GridPath::<f64>::from_fn(TimeGrid::unit(1024).unwrap(), 1, |t, v| v[0] = 3.0 * t);
        let l = RoughPathLift::from_fine(&fine, TimeGrid::unit(64).unwrap(), LiftKind::Geometric, 0.4).unwrap();
        let alpha = 0.4;
        for k1 in [8usize, 64] {
            let len = k1 as f64 / 64.0;
            let want = (3.0 * len.powf(1.0 - alpha)).max(4.5 * len.powf(2.0 - 2.0 * alpha));
            let got = l.rough_seminorm_window(alpha, 0, k1, PairPolicy::Exhaustive);
            assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
        }
        let run = l.running_rough_seminorm(alpha, PairPolicy::Auto);
        assert!(run.windows(2).all(|w| w[0] <= w[1]));
    }
}
