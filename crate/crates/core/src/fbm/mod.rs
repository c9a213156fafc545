//! Fractional Brownian motion: samplers, the integrated tower for `H > 1`,
//! conditional means and seminorm estimators.

mod conditional;
mod constants;
mod exact;
mod wiener;

use std::sync::Arc;

pub use conditional::{conditional_field, conditional_seminorm, ConditionalField, CONDITIONAL_EXHAUSTIVE_STEPS};
pub use constants::{MvnNormalization, base_hurst, conditional_constant, floor_level, marginal_constant, marginal_constant_quadrature};
pub use exact::{fbm_exact, fgn_circulant_eigenvalues, ExactMethod};
pub use wiener::{WienerPath, FAR_CELLS_PER_OCTAVE, FAR_OCTAVES};

use crate::error::{config, Error, Result};
use crate::fft::convolve;
use crate::grid::{GridPath, TimeGrid};

/// Which sampler produced a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    MandelbrotVanNess,
    Exact(ExactMethod),
    Integrated,
}

/// A sampled fractional Brownian motion `B^H` on `[0, t_end]`.
#[derive(Clone, Debug)]
pub struct FbmPath {
    pub hurst: f64,
    /// Top level `B^H`.
    pub path: GridPath<f64>,
    /// `B^{H-1}, ..., B^{H-floor(H)}`; empty for `H < 1`.
    pub lower: Vec<GridPath<f64>>,
    /// Driving Wiener increments, present for the Mandelbrot-van Ness sampler.
    pub wiener: Option<Arc<WienerPath>>,
    /// Base-level lag weights `w_l`, `l = 0..=n_steps` (`w_0 = 0`).
    pub kernel: Option<Arc<Vec<f64>>>,
    pub sampler: Sampler,
}

/// Cell-RMS Mandelbrot-van Ness weights for lags `0..=n` (`w_0 = 0`).
///
/// `w_l^2 h` equals `int_{(l-1)h}^{lh} r^{2H-1} dr`, so grid conditional
/// variances are exact.
pub fn mvn_weights(h0: f64, step: f64, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    if (h0 - 0.5).abs() < 1e-15 {
        w[1..].iter_mut().for_each(|v| *v = 1.0);
        return w;
    }
    let two_h = 2.0 * h0;
    let scale = step.powf(h0 - 0.5) / two_h.sqrt();
    for (l, v) in w.iter_mut().enumerate().skip(1) {
        let lf = l as f64;
        let diff = -lf.powf(two_h) * (two_h * (-1.0 / lf).ln_1p()).exp_m1();
        *v = scale * diff.sqrt();
    }
    w
}

fn binomial(a: f64, m: usize) -> f64 {
    (0..m).fold(1.0, |acc, j| acc * (a - j as f64) / (j + 1) as f64)
}

const FAR_TERMS: usize = 24;

/// Contribution of the far tail to `B_t` at every node, for coordinate `c`.
fn far_tail_contribution(w: &WienerPath, h0: f64, c: usize) -> Vec<f64> {
    let grid = w.grid;
    let a = h0 - 0.5;
    let mut out = vec![0.0; grid.len()];
    if w.far_cells() == 0 || a == 0.0 {
        return out;
    }
    let mut coeff = vec![0.0; FAR_TERMS + 1];
    for i in 0..w.far_cells() {
        let (r0, r1) = (w.far_edges[i], w.far_edges[i + 1]);
        let xi = w.far[i * w.dim + c];
        for (m, cm) in coeff.iter_mut().enumerate().skip(1) {
            let e = a - m as f64 + 1.0;
            let mean = (r1.powf(e) - r0.powf(e)) / (e * (r1 - r0));
            *cm += mean * xi;
        }
    }
    for (m, cm) in coeff.iter_mut().enumerate().skip(1) {
        *cm *= binomial(a, m);
    }
    for (k, o) in out.iter_mut().enumerate() {
        let t = grid.time(k);
        let mut tp = 1.0;
        let mut s = 0.0;
        for cm in coeff.iter().skip(1) {
            tp *= t;
            s += cm * tp;
        }
        *o = s;
    }
    out
}

/// Base-level Mandelbrot-van Ness path for one coordinate.
fn mvn_coordinate(w: &WienerPath, weights: &[f64], c: usize, h0: f64) -> Vec<f64> {
    let n = w.grid.n_steps;
    let cells = w.tail_cells();
    let d = w.dim;
    if (h0 - 0.5).abs() < 1e-15 {
        let mut b = vec![0.0; n + 1];
        for k in 0..n {
            b[k + 1] = b[k] + w.increment(k, c);
        }
        return b;
    }
    // x[i] is the increment of cell j = i - cells.
    let mut x = vec![0.0; cells + n];
    for m in 1..=cells {
        x[cells - m] = w.tail[(m - 1) * d + c];
    }
    for k in 0..n {
        x[cells + k] = w.increment(k, c);
    }
    let full = mvn_weights(h0, w.grid.step(), cells + n);
    let y = convolve(&x, &full);
    debug_assert_eq!(weights.len(), n + 1);
    let base = y[cells];
    let far = far_tail_contribution(w, h0, c);
    (0..=n).map(|k| y[cells + k] - base + far[k]).collect()
}

/// Cumulative trapezoidal integral from 0.
pub fn integrate_trapezoid(p: &GridPath<f64>) -> GridPath<f64> {
    let h = p.grid.step();
    let mut out = GridPath::zeros(p.grid, p.dim);
    for k in 0..p.grid.n_steps {
        for i in 0..p.dim {
            let v = out.get(k, i) + 0.5 * h * (p.get(k, i) + p.get(k + 1, i));
            out.values[(k + 1) * p.dim + i] = v;
        }
    }
    out
}

fn assemble(hurst: f64, base: GridPath<f64>, wiener: Option<Arc<WienerPath>>, kernel: Option<Arc<Vec<f64>>>, sampler: Sampler) -> FbmPath {
    let m = floor_level(hurst);
    let mut levels = vec![base];
    for _ in 0..m {
        let next = integrate_trapezoid(levels.last().unwrap());
        levels.push(next);
    }
    let path = levels.pop().unwrap();
    levels.reverse();
    FbmPath { hurst, path, lower: levels, wiener, kernel, sampler }
}

fn check_hurst(hurst: f64) -> Result<f64> {
    let h0 = base_hurst(hurst);
    if !(hurst > 0.0) || h0 == 0.0 || !hurst.is_finite() {
        return config(format!("Hurst parameter {hurst} must be positive and non-integer"));
    }
    Ok(h0)
}

/// Mandelbrot-van Ness fBm driven by `wiener`; for `H > 1` the base level
/// `H - floor(H)` is sampled and integrated.
pub fn fbm_from_wiener(wiener: &Arc<WienerPath>, hurst: f64) -> Result<FbmPath> {
    let h0 = check_hurst(hurst)?;
    let n = wiener.grid.n_steps;
    let weights = mvn_weights(h0, wiener.grid.step(), n);
    let d = wiener.dim;
    let mut base = GridPath::zeros(wiener.grid, d);
    for c in 0..d {
        let b = mvn_coordinate(wiener, &weights, c, h0);
        for (k, v) in b.into_iter().enumerate() {
            base.values[k * d + c] = v;
        }
    }
    Ok(assemble(hurst, base, Some(wiener.clone()), Some(Arc::new(weights)), Sampler::MandelbrotVanNess))
}

/// Draws a Wiener path on `[tail_start, t_end]` including the far tail.
pub fn sample_wiener(grid: TimeGrid, dim: usize, seed: u64, tail_start: f64) -> Result<Arc<WienerPath>> {
    WienerPath::sample(grid, dim, tail_start, seed, true)
}

/// Samples the Wiener increments and the Mandelbrot-van Ness path in one call.
pub fn sample_mvn(grid: TimeGrid, dim: usize, hurst: f64, seed: u64, tail_start: f64) -> Result<FbmPath> {
    let w = WienerPath::sample(grid, dim, tail_start, seed, true)?;
    fbm_from_wiener(&w, hurst)
}

/// Integrates a base-level path `floor_h` times; `tower` for `H > 1`.
pub fn fbm_tower(base: &FbmPath, floor_h: usize) -> Result<FbmPath> {
    if !base.lower.is_empty() || base.hurst >= 1.0 {
        return config("tower construction expects a base-level path with H < 1");
    }
    if floor_h == 0 {
        return config("tower needs at least one integration");
    }
    let hurst = base.hurst + floor_h as f64;
    let mut out = assemble(hurst, base.path.clone(), base.wiener.clone(), base.kernel.clone(), base.sampler);
    if base.wiener.is_none() {
        out.sampler = Sampler::Integrated;
    }
    Ok(out)
}

impl FbmPath {
    pub fn grid(&self) -> TimeGrid {
        self.path.grid
    }

    pub fn dim(&self) -> usize {
        self.path.dim
    }

    /// Base level `B^{H - floor(H)}`.
    pub fn base(&self) -> &GridPath<f64> {
        self.lower.last().unwrap_or(&self.path)
    }

    /// Level `k` of the tower: `B^{H-k}`.
    pub fn level(&self, k: usize) -> &GridPath<f64> {
        if k == 0 { &self.path } else { &self.lower[k - 1] }
    }

    fn require_wiener(&self) -> Result<(&WienerPath, &[f64])> {
        match (&self.wiener, &self.kernel) {
            (Some(w), Some(k)) => Ok((w, k)),
            _ => Err(Error::Config(
                "conditional means need the Wiener reference of a Mandelbrot-van Ness path".into(),
            )),
        }
    }

    /// `E^s B^{H0}_r` for base nodes `r = s..=t`, flattened `(t - s + 1) x dim`.
    pub fn base_conditional_segment(&self, s: usize, t: usize) -> Result<Vec<f64>> {
        let (w, kernel) = self.require_wiener()?;
        let n = self.grid().n_steps;
        if s > t || t > n {
            return config(format!("invalid conditioning pair ({s}, {t})"));
        }
        let d = self.dim();
        let base = self.base();
        let len = t - s;
        let mut out = vec![0.0; (len + 1) * d];
        for c in 0..d {
            let x: Vec<f64> = (s..t).map(|j| w.increment(j, c)).collect();
            let conv = if len == 0 { Vec::new() } else { convolve(&x, &kernel[..=len]) };
            for r in 0..=len {
                // Sum over cells j in [s, s + r) of w_{s + r - j} dW_j.
                let corr = if r == 0 { 0.0 } else { conv[r] };
                out[r * d + c] = base.get(s + r, c) - corr;
            }
        }
        Ok(out)
    }

    /// `E^s B_r` at the top level for nodes `r = s..=t`, flattened `(t - s + 1) x dim`.
    pub fn conditional_segment(&self, s: usize, t: usize) -> Result<Vec<f64>> {
        let mut seg = self.base_conditional_segment(s, t)?;
        let d = self.dim();
        let h = self.grid().step();
        for level in (0..self.lower.len()).rev() {
            let target = self.level(level);
            let mut up = vec![0.0; seg.len()];
            up[..d].copy_from_slice(target.at(s));
            for r in 0..t - s {
                for c in 0..d {
                    up[(r + 1) * d + c] = up[r * d + c] + 0.5 * h * (seg[r * d + c] + seg[(r + 1) * d + c]);
                }
            }
            seg = up;
        }
        Ok(seg)
    }

    /// `E^s B_t` at the top level.
    pub fn conditional_mean(&self, s: usize, t: usize) -> Result<Vec<f64>> {
        if self.lower.is_empty() {
            let (w, kernel) = self.require_wiener()?;
            if s > t || t > self.grid().n_steps {
                return config(format!("invalid conditioning pair ({s}, {t})"));
            }
            let d = self.dim();
            let mut out = self.path.at(t).to_vec();
            for j in s..t {
                let wl = kernel[t - j];
                for c in 0..d {
                    out[c] -= wl * w.increment(j, c);
                }
            }
            return Ok(out);
        }
        let seg = self.conditional_segment(s, t)?;
        let d = self.dim();
        Ok(seg[(t - s) * d..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_give_exact_conditional_variance() {
        let h = 1.0 / 64.0;
        for h0 in [0.3, 0.45, 0.7] {
            let w = mvn_weights(h0, h, 64);
            let mut acc = 0.0;
            for l in 1..=64 {
                acc += w[l] * w[l] * h;
                let exact = (l as f64 * h).powf(2.0 * h0) / (2.0 * h0);
                assert!((acc - exact).abs() < 1e-13 * exact.max(1.0), "H={h0} l={l}");
            }
        }
        assert!(mvn_weights(0.5, h, 8)[1..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn half_is_the_wiener_path() {
        let g = TimeGrid::unit(256).unwrap();
        let w = WienerPath::sample(g, 2, -8.0, 11, true).unwrap();
        let b = fbm_from_wiener(&w, 0.5).unwrap();
        assert_eq!(b.path.values, w.path().values);
        let cm = b.conditional_mean(100, 200).unwrap();
        for c in 0..2 {
            assert!((cm[c] - b.path.get(100, c)).abs() < 1e-12);
        }
    }

    #[test]
    fn starts_at_zero_and_is_deterministic() {
        let g = TimeGrid::unit(128).unwrap();
        let a = sample_mvn(g, 1, 0.7, 3, -8.0).unwrap();
        let b = sample_mvn(g, 1, 0.7, 3, -8.0).unwrap();
        assert_eq!(a.path.values, b.path.values);
        assert_eq!(a.path.get(0, 0), 0.0);
        assert!(sample_mvn(g, 1, 1.0, 3, -8.0).is_err());
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let g = TimeGrid::unit(32).unwrap();
        let w = WienerPath::sample(g, 1, -1.0, 9, false).unwrap();
        let b = fbm_from_wiener(&w, 0.35).unwrap();
        let cells = w.tail_cells();
        let h = g.step();
        let full = mvn_weights(0.35, h, cells + 32);
        for k in [1usize, 7, 32] {
            let mut s = 0.0;
            for j in 0..k {
                s += full[k - j] * w.increment(j, 0);
            }
            for m in 1..=cells {
                s += (full[k + m] - full[m]) * w.tail[m - 1];
            }
            assert!((s - b.path.get(k, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_mean_paths_agree() {
        let g = TimeGrid::unit(200).unwrap();
        let b = sample_mvn(g, 2, 0.4, 21, -8.0).unwrap();
        let seg = b.conditional_segment(50, 180).unwrap();
        for t in [50usize, 51, 120, 180] {
            let cm = b.conditional_mean(50, t).unwrap();
            for c in 0..2 {
                assert!((cm[c] - seg[(t - 50) * 2 + c]).abs() < 1e-12);
            }
        }
        assert_eq!(b.conditional_mean(50, 50).unwrap(), b.path.at(50).to_vec());
    }

    #[test]
    fn tower_levels() {
        let g = TimeGrid::unit(100).unwrap();
        let b = sample_mvn(g, 1, 1.3, 4, -8.0).unwrap();
        assert_eq!(b.lower.len(), 1);
        assert!((b.base().get(0, 0)).abs() < 1e-15);
        let direct = integrate_trapezoid(b.base());
        assert_eq!(direct.values, b.path.values);
        // Conditional mean of the integral integrates the base conditional mean.
        let cm = b.conditional_mean(30, 90).unwrap()[0];
        let base_seg = b.base_conditional_segment(30, 90).unwrap();
        let mut acc = b.path.get(30, 0);
        for r in 0..60 {
            acc += 0.5 * g.step() * (base_seg[r] + base_seg[r + 1]);
        }
        assert!((acc - cm).abs() < 1e-13);
    }
}
