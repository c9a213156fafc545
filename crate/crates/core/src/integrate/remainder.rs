//! Dyadic scale sweeps of the remainder and continuity estimates.

use rayon::prelude::*;

use super::{rough_integral, young_integral};
use crate::controlled::{controlled_seminorm_window, ControlledPath};
use crate::error::{config, Result};
use crate::grid::GridPath;
use crate::heatkernel::{BoundReport, BoundRow};
use crate::holder::{holder_seminorm_window, PairPolicy};
use crate::roughpath::RoughPathLift;
use crate::scalar::Real;

/// Worst window per scale `j`: windows of `n 2^{-j}` steps, rows indexed by window length.
fn sweep(name: &str, n: usize, h: f64, scales: &[u32], per_window: &(dyn Fn(usize, usize) -> (f64, f64) + Sync)) -> Result<BoundReport> {
    let mut rows = Vec::with_capacity(scales.len());
    for &j in scales {
        let count = 1usize << j;
        if n % count != 0 || n / count < 2 {
            return config(format!("scale 2^-{j} does not divide the grid of {n} steps"));
        }
        let w = n / count;
        let best = (0..count)
            .into_par_iter()
            .map(|i| {
                let (lhs, rhs) = per_window(i * w, (i + 1) * w);
                let row = BoundRow::new(w as f64 * h, lhs, rhs);
                if rhs == 0.0 && lhs == 0.0 { BoundRow { implied_constant: 0.0, ..row } } else { row }
            })
            .reduce(
                || BoundRow::new(w as f64 * h, 0.0, 0.0),
                |a, b| if b.implied_constant > a.implied_constant { b } else { a },
            );
        rows.push(best);
    }
    Ok(BoundReport::from_rows(name, rows))
}

fn increment_minus<T: Real>(h: &GridPath<T>, s: usize, t: usize, sub: &[T]) -> f64 {
    let mut acc = T::zero();
    for i in 0..h.dim {
        let x = h.get(t, i) - h.get(s, i) - sub[i];
        acc += x * x;
    }
    acc.sqrt().to_f64_lossy()
}

fn matvec_increment<T: Real>(f: &[T], g: &GridPath<T>, s: usize, t: usize, out: &mut [T]) {
    let n = g.dim;
    for (i, o) in out.iter_mut().enumerate() {
        *o = T::zero();
        for j in 0..n {
            *o += f[i * n + j] * (g.get(t, j) - g.get(s, j));
        }
    }
}

/// `|h_t - h_s - f_s g_{s,t}|` against `|t-s|^{α+β} [f]_β [g]_α` per dyadic window.
pub fn young_remainder_check<T: Real>(f: &GridPath<T>, g: &GridPath<T>, alpha: f64, beta: f64, scales: &[u32], policy: PairPolicy) -> Result<BoundReport> {
    let h = young_integral(f, g)?;
    let step = g.grid.step();
    sweep("young_remainder", g.grid.n_steps, step, scales, &|s, t| {
        let mut lin = vec![T::zero(); h.dim];
        matvec_increment(f.at(s), g, s, t, &mut lin);
        let lhs = increment_minus(&h, s, t, &lin);
        let fb = holder_seminorm_window(f, beta, s, t, policy).value.to_f64_lossy();
        let ga = holder_seminorm_window(g, alpha, s, t, policy).value.to_f64_lossy();
        (lhs, ((t - s) as f64 * step).powf(alpha + beta) * fb * ga)
    })
}

/// `[h]_α` against `‖f‖_β [g]_α` per dyadic window.
pub fn young_continuity_check<T: Real>(f: &GridPath<T>, g: &GridPath<T>, alpha: f64, beta: f64, scales: &[u32], policy: PairPolicy) -> Result<BoundReport> {
    let h = young_integral(f, g)?;
    sweep("young_continuity", g.grid.n_steps, g.grid.step(), scales, &|s, t| {
        let lhs = holder_seminorm_window(&h, alpha, s, t, policy).value.to_f64_lossy();
        let sup = (s..=t).map(|k| crate::scalar::norm(f.at(k)).to_f64_lossy()).fold(0.0, f64::max);
        let fb = sup + holder_seminorm_window(f, beta, s, t, policy).value.to_f64_lossy();
        let ga = holder_seminorm_window(g, alpha, s, t, policy).value.to_f64_lossy();
        (lhs, fb * ga)
    })
}

/// `|h_t - h_s - f_s g_{s,t} - f'_s 𝐠_{s,t}|` against `|t-s|^{α+γ} [(f,f')]_D [(g,𝐠)]_R`.
pub fn rough_remainder_check<T: Real>(cp: &ControlledPath<T>, lift: &RoughPathLift<T>, scales: &[u32], policy: PairPolicy) -> Result<BoundReport> {
    let out = rough_integral(cp, lift)?;
    let g = &lift.path;
    let (alpha, gamma) = (cp.alpha, cp.gamma);
    let d0 = g.dim;
    let step = g.grid.step();
    sweep("rough_remainder", g.grid.n_steps, step, scales, &|s, t| {
        let m = out.f.dim;
        let mut lin = vec![T::zero(); m];
        matvec_increment(cp.f.at(s), g, s, t, &mut lin);
        let area = lift.area(s, t);
        let fp = cp.f_prime.at(s);
        for (i, v) in lin.iter_mut().enumerate() {
            for j in 0..d0 {
                for l in 0..d0 {
                    *v += fp[(i * d0 + j) * d0 + l] * area[l * d0 + j];
                }
            }
        }
        let lhs = increment_minus(&out.f, s, t, &lin);
        let d = controlled_seminorm_window(cp, gamma, s, t, policy).total().to_f64_lossy();
        let r = lift.rough_seminorm_window(alpha, s, t, policy).to_f64_lossy();
        (lhs, ((t - s) as f64 * step).powf(alpha + gamma) * d * r)
    })
}

/// `[(h, f)]_{D^{2α}}` against `[(f,f')]_D [(g,𝐠)]_R` per dyadic window.
pub fn rough_continuity_check<T: Real>(cp: &ControlledPath<T>, lift: &RoughPathLift<T>, scales: &[u32], policy: PairPolicy) -> Result<BoundReport> {
    let out = rough_integral(cp, lift)?;
    let alpha = cp.alpha;
    sweep("rough_continuity", lift.grid().n_steps, lift.grid().step(), scales, &|s, t| {
        let lhs = controlled_seminorm_window(&out, 2.0 * alpha, s, t, policy).total().to_f64_lossy();
        let d = controlled_seminorm_window(cp, cp.gamma, s, t, policy).total().to_f64_lossy();
        let r = lift.rough_seminorm_window(alpha, s, t, policy).to_f64_lossy();
        (lhs, d * r)
    })
}
