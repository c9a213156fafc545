//! The drift functional `I^X(b^n) = ∫ b^n(X_s) ds` for distributional drifts,
//! by plain quadrature and by dyadic sewing of the heat-kernel germ.

use super::report::median;
use super::ExperimentReport;
use crate::error::{config, Result};
use crate::fbm::{conditional_constant, FbmPath};
use crate::function_spaces::HolderDrift;
use crate::grid::GridPath;
use crate::holder::{holder_seminorm, PairPolicy};
use crate::integrate::dyadic_sewing;
use crate::roughpath::exponents;

/// The path along which the drift is integrated.
#[derive(Clone, Debug, PartialEq)]
pub enum WeakPath {
    /// `X = B^H` (`D = 0`, `S = B^H`, `S' = I`).
    Fbm,
    /// `x_t = t v`, no noise.
    Deterministic { direction: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakDriftOptions {
    /// Mollification levels, increasing.
    pub levels: Vec<u32>,
    pub path: WeakPath,
    pub sewing: bool,
    /// Gap ratios `g_{n+1}/g_n` must have median at most this.
    pub max_ratio: f64,
    pub sewing_tolerance: f64,
}

impl Default for WeakDriftOptions {
    fn default() -> Self {
        Self { levels: (4..=9).collect(), path: WeakPath::Fbm, sewing: true, max_ratio: 0.8, sewing_tolerance: 1e-3 }
    }
}

fn cumulative_trapezoid(b: &HolderDrift, xs: &GridPath<f64>) -> GridPath<f64> {
    let d = b.dim;
    let h = xs.grid.step();
    let mut out = GridPath::zeros(xs.grid, d);
    let mut prev = vec![0.0; d];
    let mut cur = vec![0.0; d];
    b.eval(xs.at(0), &mut prev);
    for k in 0..xs.grid.n_steps {
        b.eval(xs.at(k + 1), &mut cur);
        for c in 0..d {
            out.values[(k + 1) * d + c] = out.values[k * d + c] + 0.5 * h * (prev[c] + cur[c]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    out
}

/// Conditional means `E^s B_r` on every dyadic interval, per level.
struct DyadicSegments {
    levels: u32,
    data: Vec<Vec<Vec<f64>>>,
}

impl DyadicSegments {
    fn build(fbm: &FbmPath, levels: u32) -> Result<Self> {
        let n = 1usize << levels;
        let mut data = Vec::with_capacity(levels as usize + 1);
        for l in 0..=levels {
            let w = n >> l;
            let segs = (0..1usize << l).map(|i| fbm.base_conditional_segment(i * w, (i + 1) * w)).collect::<Result<Vec<_>>>()?;
            data.push(segs);
        }
        Ok(Self { levels, data })
    }

    fn get(&self, s: usize, t: usize) -> &[f64] {
        let w = t - s;
        let l = self.levels - w.trailing_zeros();
        &self.data[l as usize][s / w]
    }
}

/// Level gaps of `I^X(b^n)`, their decay, and sewing-vs-quadrature agreement.
pub fn distributional_drift_integral(b: &HolderDrift, fbm: &FbmPath, seed: u64, opts: &WeakDriftOptions) -> Result<ExperimentReport> {
    let h_param = fbm.hurst;
    if !(h_param > 1.0 / 3.0 && h_param <= 0.5) {
        return config("the distributional drift functional is set up for H in (1/3, 1/2]");
    }
    if b.alpha >= 0.0 {
        return config("the distributional drift functional expects alpha < 0");
    }
    if opts.levels.len() < 3 {
        return config("need at least three mollification levels");
    }
    let grid = fbm.grid();
    let n = grid.n_steps;
    if !n.is_power_of_two() {
        return config("dyadic sewing needs 2^m grid steps");
    }
    let d = b.dim;
    let xs = match &opts.path {
        WeakPath::Fbm => {
            if fbm.dim() != d {
                return config("drift and path dimensions differ");
            }
            fbm.path.clone()
        }
        WeakPath::Deterministic { direction } => {
            if direction.len() != d {
                return config("direction has the wrong dimension");
            }
            GridPath::from_fn(grid, d, |t, v| v.iter_mut().zip(direction).for_each(|(o, e)| *o = t * e))
        }
    };
    let ex = exponents(h_param, b.alpha)?;
    let beta = 1.0 + ex.alpha_eff * ex.h_plus;
    let mut rep = ExperimentReport::new("weak-drift");
    let arm_tag = match opts.path {
        WeakPath::Fbm => "fbm",
        WeakPath::Deterministic { .. } => "deterministic",
    };
    let integrals: Vec<GridPath<f64>> = opts.levels.iter().map(|&lv| cumulative_trapezoid(&b.mollify(lv), &xs)).collect();
    let mut gaps = Vec::new();
    for (w, lv) in integrals.windows(2).zip(opts.levels.windows(2)) {
        let diff = GridPath::new(grid, d, w[1].values.iter().zip(&w[0].values).map(|(a, c)| a - c).collect())?;
        let g = diff.sup_norm();
        let q = holder_seminorm(&diff, beta, PairPolicy::Auto).value;
        rep.push(seed, format!("{arm_tag}-level{}", lv[0]), "gap_sup", g);
        rep.push(seed, format!("{arm_tag}-level{}", lv[0]), "gap_quotient", q);
        gaps.push(g);
    }
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[1] / w[0]).collect();
    let med = median(&ratios);
    rep.push(seed, arm_tag, "median_ratio", med);
    match opts.path {
        WeakPath::Fbm => rep.criterion("gap_ratio", med <= opts.max_ratio),
        WeakPath::Deterministic { .. } => rep.criterion("control_diverges", !(med <= opts.max_ratio)),
    }
    if opts.sewing && opts.path == WeakPath::Fbm {
        let levels = n.trailing_zeros();
        let segs = DyadicSegments::build(fbm, levels)?;
        let h = grid.step();
        let c = conditional_constant(h_param)?;
        let mut worst = 0.0f64;
        for (lv, integral) in opts.levels.iter().zip(&integrals) {
            let bn = b.mollify(*lv);
            let germ = |s: usize, t: usize, out: &mut [f64]| {
                let seg = segs.get(s, t);
                let mut v = vec![0.0; d];
                out.iter_mut().for_each(|o| *o = 0.0);
                for r in 0..=t - s {
                    let var = c * (r as f64 * h).powf(2.0 * h_param);
                    bn.heat_eval_isotropic(var, &seg[r * d..(r + 1) * d], &mut v);
                    let w = if r == 0 || r == t - s { 0.5 * h } else { h };
                    for k in 0..d {
                        out[k] += w * v[k];
                    }
                }
            };
            let sewn = dyadic_sewing(&germ, d, levels, 2);
            let quad = integral.at(n);
            let diff = crate::scalar::dist(&sewn.value, quad);
            rep.push(seed, format!("fbm-level{lv}"), "sewing_diff", diff);
            rep.push(seed, format!("fbm-level{lv}"), "sewing_aggregate_exponent", sewn.aggregate_exponent);
            worst = worst.max(diff);
        }
        rep.criterion("sewing_agreement", worst <= opts.sewing_tolerance);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::sample_mvn;
    use crate::grid::TimeGrid;

    fn lacunary(levels: u32) -> HolderDrift {
        HolderDrift::lacunary(1.0, -0.15, levels, vec![1.0, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn resolved_family_gives_a_constant_sequence() {
        let fbm = sample_mvn(TimeGrid::unit(1024).unwrap(), 2, 0.45, 1, -2.0).unwrap();
        let opts = WeakDriftOptions { levels: vec![4, 5, 6], ..Default::default() };
        let rep = distributional_drift_integral(&lacunary(3), &fbm, 1, &opts).unwrap();
        assert!(rep.rows.iter().filter(|r| r.metric == "gap_sup").all(|r| r.value == 0.0));
    }

    #[test]
    fn sewing_matches_quadrature_on_low_levels() {
        let fbm = sample_mvn(TimeGrid::unit(1 << 14).unwrap(), 2, 0.45, 2, -2.0).unwrap();
        let opts = WeakDriftOptions { levels: vec![1, 2, 3], sewing_tolerance: 2e-3, ..Default::default() };
        let rep = distributional_drift_integral(&lacunary(6), &fbm, 2, &opts).unwrap();
        assert_eq!(rep.criterion_pass("sewing_agreement"), Some(true), "{:?}", rep.rows);
    }

    #[test]
    fn rejects_out_of_range_inputs() {
        let fbm = sample_mvn(TimeGrid::unit(64).unwrap(), 2, 0.45, 1, -2.0).unwrap();
        let smooth = HolderDrift::smooth(1.0, 1.0, vec![0.0, 0.0], 0.5);
        assert!(distributional_drift_integral(&smooth, &fbm, 1, &WeakDriftOptions::default()).is_err());
        let young = sample_mvn(TimeGrid::unit(64).unwrap(), 2, 0.7, 1, -2.0).unwrap();
        assert!(distributional_drift_integral(&lacunary(6), &young, 1, &WeakDriftOptions::default()).is_err());
        let odd = sample_mvn(TimeGrid::unit(60).unwrap(), 2, 0.45, 1, -2.0).unwrap();
        assert!(distributional_drift_integral(&lacunary(6), &odd, 1, &WeakDriftOptions::default()).is_err());
    }
}
