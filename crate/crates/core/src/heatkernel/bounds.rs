//! Scale-sweep checks of the heat-kernel bounds.

use crate::error::{config, Result};
use crate::function_spaces::HolderDrift;
use crate::linalg::Mat;

use super::CovMatrix;

/// One scale of a sweep: measured side, structural side and their ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub scale: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub implied_constant: f64,
}

impl BoundRow {
    pub fn new(scale: f64, lhs: f64, rhs: f64) -> Self {
        let implied_constant = if rhs > 0.0 { lhs / rhs } else if lhs == 0.0 { 0.0 } else { f64::INFINITY };
        Self { scale, lhs, rhs, implied_constant }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub rows: Vec<BoundRow>,
    /// Log-log slope of `lhs` against the sweep variable, if fitted.
    pub fitted_exponent: Option<f64>,
    pub expected_exponent: Option<f64>,
    /// `max / median` of the implied constants.
    pub stability_ratio: f64,
    pub pass: bool,
}

/// Stability threshold on `max / median` of implied constants.
pub const STABILITY_THRESHOLD: f64 = 10.0;

impl BoundReport {
    pub fn from_rows(name: impl Into<String>, rows: Vec<BoundRow>) -> Self {
        let ks: Vec<f64> = rows.iter().map(|r| r.implied_constant).collect();
        let stability_ratio = stability_ratio(&ks);
        let pass = ks.iter().all(|k| k.is_finite()) && stability_ratio <= STABILITY_THRESHOLD;
        Self { name: name.into(), rows, fitted_exponent: None, expected_exponent: None, stability_ratio, pass }
    }

    pub fn csv_header() -> [&'static str; 4] {
        ["scale", "lhs", "rhs", "implied_constant"]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        use crate::io::fmt_e12;
        self.rows
            .iter()
            .map(|r| vec![fmt_e12(r.scale), fmt_e12(r.lhs), fmt_e12(r.rhs), fmt_e12(r.implied_constant)])
            .collect()
    }

    pub fn max_implied(&self) -> f64 {
        self.rows.iter().map(|r| r.implied_constant).fold(0.0, f64::max)
    }
}

/// `max / median` of positive finite entries; `1` when all vanish.
pub fn stability_ratio(ks: &[f64]) -> f64 {
    let mut v: Vec<f64> = ks.iter().cloned().filter(|k| k.is_finite() && *k > 0.0).collect();
    if v.is_empty() {
        return if ks.iter().all(|k| *k == 0.0) { 1.0 } else { f64::INFINITY };
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    v[n - 1] / median
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Operator norm of an `m x d` matrix stored row-major.
fn op_norm(j: &[f64], m: usize, d: usize) -> f64 {
    let mut g = Mat::zeros(d);
    for a in 0..d {
        for b in 0..d {
            g.set(a, b, (0..m).map(|i| j[i * d + a] * j[i * d + b]).sum());
        }
    }
    g.sym_eigenvalues().into_iter().fold(0.0, f64::max).max(0.0).sqrt()
}

/// Grid estimate of `[u]_{C^beta}` on patches of side `6 ell` around the anchors.
fn local_seminorm(u: &dyn Fn(&[f64], &mut [f64]), m: usize, d: usize, beta: f64, anchors: &[Vec<f64>], ell: f64) -> f64 {
    let per_axis = 13usize;
    let offsets: Vec<Vec<f64>> = (0..per_axis.pow(d as u32))
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    ell * (-3.0 + 0.5 * k as f64)
                })
                .collect()
        })
        .collect();
    let eta = 1e-3 * ell;
    let mut best: f64 = 0.0;
    for a in anchors {
        let pts: Vec<Vec<f64>> = offsets.iter().map(|o| a.iter().zip(o).map(|(x, y)| x + y).collect()).collect();
        let eval = |x: &[f64]| {
            let mut v = vec![0.0; m];
            u(x, &mut v);
            v
        };
        let jac = |x: &[f64]| {
            let mut j = vec![0.0; m * d];
            let mut xp = x.to_vec();
            for c in 0..d {
                xp[c] = x[c] + eta;
                let up = eval(&xp);
                xp[c] = x[c] - eta;
                let um = eval(&xp);
                xp[c] = x[c];
                for i in 0..m {
                    j[i * d + c] = (up[i] - um[i]) / (2.0 * eta);
                }
            }
            j
        };
        let (vals, expo): (Vec<Vec<f64>>, f64) = if beta < 1.0 {
            (pts.iter().map(|x| eval(x)).collect(), beta)
        } else {
            let js: Vec<Vec<f64>> = pts.iter().map(|x| jac(x)).collect();
            if beta == 1.0 {
                for j in &js {
                    best = best.max(op_norm(j, m, d));
                }
                continue;
            }
            (js, beta - 1.0)
        };
        for i in 0..pts.len() {
            for k in i + 1..pts.len() {
                let dx = crate::scalar::dist(&pts[i], &pts[k]);
                let dv = crate::scalar::dist(&vals[i], &vals[k]);
                best = best.max(dv / dx.powf(expo));
            }
        }
    }
    best
}

/// Scale sweep of `[P_{r Γ0} f]_{C^beta}` against `|(r Γ0)^{-1}|^{(beta-alpha)/2} M`.
///
/// `smoothed(Γ, x, out)` evaluates `P_Γ f (x)`; `m` is its output dimension.
#[allow(clippy::too_many_arguments)]
pub fn heat_holder_bound_check_fn(
    name: &str,
    gamma0: &CovMatrix,
    smoothed: &(dyn Fn(&CovMatrix, &[f64], &mut [f64]) + Sync),
    m: usize,
    alpha: f64,
    norm: f64,
    beta: f64,
    scales: &[f64],
    anchors: &[Vec<f64>],
) -> Result<BoundReport> {
    if !(alpha > -1.0 && alpha <= beta && beta <= 2.0) {
        return config(format!("heat bound needs -1 < alpha <= beta <= 2, got alpha={alpha}, beta={beta}"));
    }
    let d = gamma0.dim();
    let eig = gamma0.m.sym_eigenvalues();
    let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().cloned().fold(0.0, f64::max);
    let expected = (beta - alpha) / 2.0;
    use rayon::prelude::*;
    let rows: Vec<Result<BoundRow>> = scales
        .par_iter()
        .map(|&r| {
            let mut g = gamma0.m.clone();
            g.scale(r);
            let gamma = CovMatrix::new(g)?;
            let inv_norm = 1.0 / (r * lmin);
            let ell = (r * lmax).sqrt();
            let lhs = local_seminorm(&|x, o| smoothed(&gamma, x, o), m, d, beta, anchors, ell);
            Ok(BoundRow::new(inv_norm, lhs, inv_norm.powf(expected) * norm))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.lhs).collect();
    let mut rep = BoundReport::from_rows(name, rows);
    if xs.len() >= 2 {
        rep.fitted_exponent = Some(loglog_slope(&xs, &ys));
    }
    rep.expected_exponent = Some(expected);
    Ok(rep)
}

/// Scale sweep of the Hölder smoothing bound for a drift (rows indexed by `|Γ^{-1}|`).
pub fn heat_holder_bound_check(gamma0: &CovMatrix, f: &HolderDrift, beta: f64, scales: &[f64], anchors: &[Vec<f64>]) -> Result<BoundReport> {
    if gamma0.dim() != f.dim {
        return config("covariance and drift dimensions differ");
    }
    heat_holder_bound_check_fn(
        "heat_holder",
        gamma0,
        &|g, x, o| f.heat_eval(g, x, o),
        f.dim,
        f.alpha,
        f.norm_bound,
        beta,
        scales,
        anchors,
    )
}

/// Pointwise comparison of `p_Γ` and `p_Γ̄`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffBoundReport {
    /// `|I - Γ Γ̄^{-1}|` (operator norm).
    pub gap: f64,
    /// One row per grid point; `scale` is `|x|`.
    pub rows: Vec<BoundRow>,
    pub max_lhs: f64,
    pub max_implied: f64,
    /// Same comparison with the wider kernels `p_{2Γ} + p_{2Γ̄}`.
    pub max_implied_wide: f64,
    pub pass: bool,
}

fn half_or_double(g: &CovMatrix, c: f64) -> Result<CovMatrix> {
    let mut m = g.m.clone();
    m.scale(c);
    CovMatrix::new(m)
}

/// `|p_Γ(x) - p_Γ̄(x)|` against `|I - Γ Γ̄^{-1}| (p_{Γ/2}(x) + p_{Γ̄/2}(x))` over `xs`.
pub fn heat_diff_bound_check(gamma: &CovMatrix, gamma_bar: &CovMatrix, xs: &[Vec<f64>]) -> Result<DiffBoundReport> {
    let d = gamma.dim();
    if gamma_bar.dim() != d {
        return config("covariance dimensions differ");
    }
    let prod = gamma.m.matmul(&gamma_bar.m.inverse()?);
    let e = Mat::identity(d).sub(&prod);
    let gap = op_norm(&e.a, d, d);
    let (gh, gbh) = (half_or_double(gamma, 0.5)?, half_or_double(gamma_bar, 0.5)?);
    let (gw, gbw) = (half_or_double(gamma, 2.0)?, half_or_double(gamma_bar, 2.0)?);
    let mut rows = Vec::with_capacity(xs.len());
    let (mut max_lhs, mut max_implied, mut max_wide) = (0.0f64, 0.0f64, 0.0f64);
    for x in xs {
        let lhs = (gamma.density(x) - gamma_bar.density(x)).abs();
        let rhs = gap * (gh.density(x) + gbh.density(x));
        let row = BoundRow::new(crate::scalar::norm(x), lhs, rhs);
        let wide = BoundRow::new(0.0, lhs, gap * (gw.density(x) + gbw.density(x)));
        max_lhs = max_lhs.max(lhs);
        max_implied = max_implied.max(row.implied_constant);
        max_wide = max_wide.max(wide.implied_constant);
        rows.push(row);
    }
    Ok(DiffBoundReport { gap, rows, max_lhs, max_implied, max_implied_wide: max_wide, pass: max_implied.is_finite() })
}

/// Square grid `[-r, r]^d` with `per_axis` points per axis.
pub fn box_grid(d: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let step = 2.0 * r / (per_axis - 1) as f64;
    (0..per_axis.pow(d as u32))
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    -r + step * k as f64
                })
                .collect()
        })
        .collect()
}

/// Sweep `Γ̄ = Γ + eps E` for `eps` in `eps_list`; rows hold the max implied constant per `eps`.
pub fn heat_diff_sweep(gamma: &CovMatrix, direction: &Mat, eps_list: &[f64], xs: &[Vec<f64>]) -> Result<BoundReport> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut e = direction.clone();
        e.scale(eps);
        let gb = CovMatrix::new(gamma.m.add(&e))?;
        let rep = heat_diff_bound_check(gamma, &gb, xs)?;
        rows.push(BoundRow { scale: eps, lhs: rep.max_lhs, rhs: rep.gap, implied_constant: rep.max_implied });
    }
    Ok(BoundReport::from_rows("heat_diff", rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_is_scale_free() {
        let g0 = CovMatrix::new(Mat::from_rows(&[&[1.0, 0.3], &[0.3, 0.5]])).unwrap();
        let lin = |_: &CovMatrix, x: &[f64], o: &mut [f64]| o[0] = 3.0 * x[0] - 4.0 * x[1];
        let scales: Vec<f64> = (2..8).map(|j| 2f64.powi(-j)).collect();
        let rep = heat_holder_bound_check_fn("lin", &g0, &lin, 1, 1.0, 5.0, 1.0, &scales, &[vec![0.0, 0.0]]).unwrap();
        for r in &rep.rows {
            assert!((r.implied_constant - 1.0).abs() < 1e-6, "{r:?}");
        }
        assert!(rep.pass);
        assert!(heat_holder_bound_check_fn("bad", &g0, &lin, 1, 1.5, 5.0, 1.0, &scales, &[]).is_err());
    }

    #[test]
    fn equal_covariances_have_no_gap() {
        let g = CovMatrix::new(Mat::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]])).unwrap();
        let rep = heat_diff_bound_check(&g, &g, &box_grid(2, 6.0, 25)).unwrap();
        assert_eq!(rep.gap, 0.0);
        assert_eq!(rep.max_lhs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn small_isotropic_perturbation() {
        let g = CovMatrix::new(Mat::from_rows(&[&[1.0, 0.2], &[0.2, 0.8]])).unwrap();
        let eps = 1e-3;
        let mut m = g.m.clone();
        m.scale(1.0 + eps);
        let gb = CovMatrix::new(m).unwrap();
        let xs = box_grid(2, 6.0, 61);
        let rep = heat_diff_bound_check(&g, &gb, &xs).unwrap();
        let pmax = g.density(&[0.0, 0.0]);
        assert!(rep.max_lhs / rep.gap <= 4.0 * pmax, "{} vs {}", rep.max_lhs / rep.gap, pmax);
        assert!(rep.max_implied_wide < 10.0);
    }

    #[test]
    fn stability_helpers() {
        assert_eq!(stability_ratio(&[1.0, 2.0, 3.0]), 1.5);
        assert_eq!(stability_ratio(&[0.0, 0.0]), 1.0);
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(0.7)).collect();
        assert!((loglog_slope(&xs, &ys) - 0.7).abs() < 1e-12);
    }
}
