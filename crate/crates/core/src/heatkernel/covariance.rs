//! Conditional covariance `Γ[Y](s,t)` of `∫_s^t Y_r B^{H-1}_r dr` for `1 < H < 2`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fbm::{fbm_from_wiener, sample_wiener};
use crate::grid::TimeGrid;
use crate::linalg::{Mat, RectMat};
use crate::quadrature::{gauss_legendre, Rule};

/// Default Gauss-Legendre order per axis.
pub const LEGENDRE_ORDER: usize = 24;
const OUTER_PANELS: usize = 24;
const INNER_PANELS: usize = 12;

fn check_smooth(h: f64) -> Result<()> {
    if !(h > 1.0 && h < 2.0) {
        return Err(Error::Assumption(format!("conditional covariance is implemented for 1 < H < 2, got H={h}")));
    }
    Ok(())
}

/// `sqrt(c'(H))`: iterating the base kernel `|u - u0|^{H0 - 1/2}` up to level `H - 1`.
pub fn sqrt_c_prime(h: f64) -> Result<f64> {
    if !(h > 1.0) || h.fract() == 0.0 {
        return Err(Error::Assumption(format!("c'(H) needs non-integer H > 1, got H={h}")));
    }
    let m = h.floor() as i32;
    let a = h - m as f64 - 0.5;
    Ok(1.0 / (1..m).map(|j| a + j as f64).product::<f64>())
}

/// `c'''(H)` with `Γ[Ȳ](s,t) = c'''(H) Ȳ Ȳ^T |t-s|^{2H}` for constant `Ȳ`.
pub fn c_triple_prime(h: f64) -> Result<f64> {
    let c = sqrt_c_prime(h)?.powi(2);
    Ok(c / ((h - 0.5).powi(2) * 2.0 * h))
}

/// Panels `[a_k, b_k]` shrinking geometrically toward `end`.
fn geometric_panels(start: f64, end: f64, panels: usize) -> Vec<(f64, f64)> {
    let len = end - start;
    let mut out = Vec::with_capacity(panels);
    for k in 0..panels {
        let a = end - len * 0.5f64.powi(k as i32);
        let b = if k + 1 == panels { end } else { end - len * 0.5f64.powi(k as i32 + 1) };
        out.push((a, b));
    }
    out
}

/// `G(u) = ∫_u^t |v-u|^{H-3/2} Y_v dv` via `v = u + w^{1/(H-1/2)}`.
fn kernel_average(y: &dyn Fn(f64) -> RectMat, u: f64, t: f64, h: f64, rule: &Rule, rows: usize, cols: usize) -> RectMat {
    let p = 1.0 / (h - 0.5);
    let wmax = (t - u).max(0.0).powf(1.0 / p);
    let mut g = RectMat::zeros(rows, cols);
    if wmax == 0.0 {
        return g;
    }
    // Reflect so the geometric panels accumulate at w = 0.
    for (a, b) in geometric_panels(wmax, 0.0, INNER_PANELS) {
        for (w, wt) in rule.on_interval(b, a) {
            let v = (u + w.powf(p)).min(t);
            let yv = y(v);
            for k in 0..rows * cols {
                g.a[k] += p * wt * yv.a[k];
            }
        }
    }
    g
}

/// `Γ[Y](s,t)` by nested Gauss-Legendre quadrature. `Y ≡ 0` gives the zero matrix.
pub fn cov_gamma_smooth(y: &dyn Fn(f64) -> RectMat, s: f64, t: f64, h: f64) -> Result<Mat> {
    cov_gamma_smooth_order(y, s, t, h, LEGENDRE_ORDER)
}

pub fn cov_gamma_smooth_order(y: &dyn Fn(f64) -> RectMat, s: f64, t: f64, h: f64, order: usize) -> Result<Mat> {
    check_smooth(h)?;
    if t < s {
        return Err(Error::Config(format!("cov_gamma_smooth needs s <= t, got [{s}, {t}]")));
    }
    let probe = y(s);
    let (rows, cols) = (probe.rows, probe.cols);
    let mut out = Mat::zeros(rows);
    if t == s {
        return Ok(out);
    }
    let c = sqrt_c_prime(h)?.powi(2);
    let rule = gauss_legendre(order);
    for (a, b) in geometric_panels(s, t, OUTER_PANELS) {
        for (u, wt) in rule.on_interval(a, b) {
            let g = kernel_average(y, u, t, h, &rule, rows, cols);
            for i in 0..rows {
                for j in 0..rows {
                    let dot: f64 = (0..cols).map(|k| g.get(i, k) * g.get(j, k)).sum();
                    out.a[i * rows + j] += c * wt * dot;
                }
            }
        }
    }
    out.symmetrize();
    Ok(out)
}

/// Closed form for constant `Ȳ`.
pub fn cov_gamma_constant_y(ybar: &RectMat, s: f64, t: f64, h: f64) -> Result<Mat> {
    check_smooth(h)?;
    let mut m = ybar.gram();
    m.scale(c_triple_prime(h)? * (t - s).abs().powf(2.0 * h));
    Ok(m)
}

/// Stability and non-degeneracy of `Γ[Y]` relative to a reference `Ȳ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovBoundsReport {
    /// `|Γ[Y] - Γ[Ȳ]|` in operator norm.
    pub stability_lhs: f64,
    /// `|t-s|^{2H} (‖Y‖_{C^0} + ‖Ȳ‖_{C^0}) ‖Y - Ȳ‖_{C^0}`.
    pub stability_rhs: f64,
    pub implied_constant: f64,
    /// Explicit constant `c'''(H)` valid for the stability bound.
    pub constant_bound: f64,
    /// Ellipticity of `Ȳ Ȳ^T` over the sampled times.
    pub lambda: f64,
    pub sup_distance: f64,
    /// Closeness under which the lower bound is claimed.
    pub delta: f64,
    pub min_eigenvalue: f64,
    /// `c'''(H)/2 · λ |t-s|^{2H}`.
    pub lower_bound: f64,
    pub pass: bool,
}

fn op_norm_sym(m: &Mat) -> f64 {
    m.sym_eigenvalues().into_iter().map(f64::abs).fold(0.0, f64::max)
}

fn rect_op_norm(y: &RectMat) -> f64 {
    y.gram().sym_eigenvalues().into_iter().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Compares `Γ[Y]` with `Γ[Ȳ]` on `[s,t]`, sup norms taken on 257 uniform times.
pub fn cov_gamma_bounds_check(y: &dyn Fn(f64) -> RectMat, ybar: &dyn Fn(f64) -> RectMat, s: f64, t: f64, h: f64) -> Result<CovBoundsReport> {
    let g1 = cov_gamma_smooth(y, s, t, h)?;
    let g2 = cov_gamma_smooth(ybar, s, t, h)?;
    let (mut n1, mut n2, mut dist, mut lambda) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for k in 0..=256 {
        let r = s + (t - s) * k as f64 / 256.0;
        let (a, b) = (y(r), ybar(r));
        n1 = n1.max(rect_op_norm(&a));
        n2 = n2.max(rect_op_norm(&b));
        let mut diff = a.clone();
        diff.a.iter_mut().zip(&b.a).for_each(|(x, z)| *x -= z);
        dist = dist.max(rect_op_norm(&diff));
        lambda = lambda.min(b.gram().min_sym_eigenvalue());
    }
    let c3 = c_triple_prime(h)?;
    let len = (t - s).powf(2.0 * h);
    let stability_lhs = op_norm_sym(&g1.sub(&g2));
    let stability_rhs = len * (n1 + n2) * dist;
    let implied_constant = if stability_rhs > 0.0 { stability_lhs / stability_rhs } else { 0.0 };
    // δ (2K + δ) c''' = c''' λ / 2 with K = ‖Ȳ‖.
    let delta = -n2 + (n2 * n2 + 0.5 * lambda.max(0.0)).sqrt();
    let min_eigenvalue = g1.min_sym_eigenvalue();
    let lower_bound = 0.5 * c3 * lambda * len;
    let stable = stability_lhs <= c3 * stability_rhs * (1.0 + 1e-6) + 1e-300;
    let pass = stable && (dist > delta || min_eigenvalue >= lower_bound);
    Ok(CovBoundsReport {
        stability_lhs,
        stability_rhs,
        implied_constant,
        constant_bound: c3,
        lambda,
        sup_distance: dist,
        delta,
        min_eigenvalue,
        lower_bound,
        pass,
    })
}

/// Monte Carlo estimate of `Γ[Y](s,t)`: second moment of
/// `∫_s^t Y_r (B^{H-1}_r - E^s B^{H-1}_r) dr` over `samples` Mandelbrot-van Ness
/// paths on a uniform grid of `n_steps`, seeds `seed0, seed0 + 1, ..`.
pub fn cov_gamma_monte_carlo(y: &dyn Fn(f64) -> RectMat, s: f64, t: f64, h: f64, n_steps: usize, samples: usize, seed0: u64) -> Result<Mat> {
    check_smooth(h)?;
    let grid = TimeGrid::new(0.0, 1.0, n_steps)?;
    let (i0, i1) = (grid.nearest_index(s), grid.nearest_index(t));
    if i1 <= i0 || samples < 2 {
        return Err(Error::Config("Monte Carlo covariance needs s < t on the grid and at least two samples".into()));
    }
    let probe = y(s);
    let (rows, cols) = (probe.rows, probe.cols);
    let step = grid.step();
    let ys: Vec<RectMat> = (i0..=i1).map(|k| y(grid.time(k))).collect();
    let moments = (0..samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let w = sample_wiener(grid, cols, seed0 + i, -8.0)?;
            let fbm = fbm_from_wiener(&w, h - 1.0)?;
            let seg = fbm.base_conditional_segment(i0, i1)?;
            let mut z = vec![0.0; rows];
            let mut v = vec![0.0; rows];
            for (r, yr) in ys.iter().enumerate() {
                let fluct: Vec<f64> = (0..cols).map(|c| fbm.path.get(i0 + r, c) - seg[r * cols + c]).collect();
                yr.matvec(&fluct, &mut v);
                let wt = if r == 0 || r == i1 - i0 { 0.5 * step } else { step };
                z.iter_mut().zip(&v).for_each(|(a, b)| *a += wt * b);
            }
            Ok((0..rows * rows).map(|k| z[k / rows] * z[k % rows]).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Mat::zeros(rows);
    for m in &moments {
        out.a.iter_mut().zip(m).for_each(|(a, b)| *a += b);
    }
    out.scale(1.0 / samples as f64);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(rows: usize, cols: usize, v: &[f64]) -> RectMat {
        let mut m = RectMat::zeros(rows, cols);
        m.a.copy_from_slice(v);
        m
    }

    #[test]
    fn constant_y_matches_closed_form() {
        let ybar = rect(2, 2, &[1.0, 0.3, -0.2, 0.8]);
        for &h in &[1.05, 1.3, 1.7, 1.95] {
            let q = cov_gamma_smooth(&|_| ybar.clone(), 0.2, 0.9, h).unwrap();
            let c = cov_gamma_constant_y(&ybar, 0.2, 0.9, h).unwrap();
            let rel = q.sub(&c).frobenius() / c.frobenius();
            assert!(rel < 1e-8, "H={h}: {rel}");
        }
    }

    #[test]
    fn c_prime_matches_iterated_kernel() {
        // Level H-1 from base a = H0 - 1/2, two integrations: ∫_0^x (x-y)^0 y^a dy = x^{a+1}/(a+1).
        let h = 2.3;
        let a: f64 = h - 2.0 - 0.5;
        let x: f64 = 0.8;
        let integrated = crate::quadrature::adaptive_simpson(&|y: f64| y.powf(a), 1e-14, x, 1e-13) + (1e-14f64).powf(a + 1.0) / (a + 1.0);
        let want = x.powf(h - 1.5) * sqrt_c_prime(h).unwrap();
        assert!((integrated - want).abs() < 1e-6 * want, "{integrated} vs {want}");
        assert_eq!(sqrt_c_prime(1.3).unwrap(), 1.0);
        assert!(sqrt_c_prime(2.0).is_err());
    }

    #[test]
    fn zero_and_errors() {
        let z = cov_gamma_smooth(&|_| RectMat::zeros(2, 2), 0.0, 1.0, 1.3).unwrap();
        assert_eq!(z.frobenius(), 0.0);
        assert!(cov_gamma_smooth(&|_| RectMat::zeros(2, 2), 0.0, 1.0, 0.7).is_err());
        assert!(cov_gamma_smooth(&|_| RectMat::zeros(2, 2), 0.0, 1.0, 2.0).is_err());
    }

    fn ramp(r: f64) -> RectMat {
        rect(2, 2, &[1.0 + 0.01 * r, 0.01 * r, 0.0, 1.0 - 0.01 * r])
    }

    #[test]
    fn order_doubling_is_converged() {
        let y = |r: f64| rect(2, 2, &[1.0 + 0.3 * (3.0 * r).sin(), 0.2 * r, -0.1, 1.0 + 0.2 * r * r]);
        let a = cov_gamma_smooth_order(&y, 0.1, 0.8, 1.3, 24).unwrap();
        let b = cov_gamma_smooth_order(&y, 0.1, 0.8, 1.3, 48).unwrap();
        assert!(a.sub(&b).frobenius() < 1e-6 * b.frobenius());
        assert!(CovMatrix::new(a).is_ok());
    }

    #[test]
    fn bounds_and_scaling() {
        let id = |_: f64| rect(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let same = cov_gamma_bounds_check(&id, &id, 0.0, 0.5, 1.3).unwrap();
        assert_eq!(same.stability_lhs, 0.0);
        let rep = cov_gamma_bounds_check(&ramp, &id, 0.0, 0.5, 1.3).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.min_eigenvalue >= 0.5 * c_triple_prime(1.3).unwrap() * 0.5f64.powf(2.6));
        let lens: Vec<f64> = (1..7).map(|j| 2f64.powi(-j)).collect();
        let norms: Vec<f64> = lens.iter().map(|l| cov_gamma_smooth(&ramp, 0.1, 0.1 + l, 1.3).unwrap().frobenius()).collect();
        let slope = crate::heatkernel::bounds::loglog_slope(&lens, &norms);
        assert!((slope - 2.6).abs() < 0.05, "{slope}");
    }

    use super::super::CovMatrix;
}
