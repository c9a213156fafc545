//! A priori bounds on stopped solutions, per regime.

use std::sync::Arc;

use super::{drive_along, solve, ExperimentReport, Noise, PartitionSpec, SolveConfig};
use crate::controlled::{controlled_seminorm_window, ControlledPath};
use crate::error::{config, Result};
use crate::heatkernel::loglog_slope;
use crate::roughpath::Regime;

/// Smooth-regime conditional increment fits.
#[derive(Clone, Debug, PartialEq)]
pub struct AprioriReport {
    /// `(lag, max |D_t - E^s D_t|, max |S_t - E^s S_t|)` per dyadic lag.
    pub lags: Vec<(f64, f64, f64)>,
    pub drift_exponent: f64,
    pub noise_exponent: f64,
    pub drift_quotient: f64,
    pub noise_quotient: f64,
}

/// Young: `[X_{.∧τ_K}]_{C^{H_-}} <= (2 ||b||_{C^0} + 1) K` for each `K`.
/// Rough: the `D^{2H_-}` seminorm of `(X, σ(X))` on `[s_0, τ_K]` is finite and nondecreasing in `K`.
/// Smooth: conditional increments of the drift and noise parts scale like
/// `|t-s|^{1+alpha H^-}` and `|t-s|^{H^-}`; conditional expectations use the
/// frozen-information flow driven by `E^s B^H`.
pub fn apriori_check(cfg: &SolveConfig, noise: &Arc<Noise>, ks: &[f64]) -> Result<ExperimentReport> {
    if !matches!(cfg.partition, PartitionSpec::Uniform { stride: 1 }) {
        return config("a priori checks run on the full solver grid");
    }
    let ex = cfg.exponents()?;
    let mut rep = ExperimentReport::new("apriori");
    match cfg.regime()? {
        Regime::Young => {
            let sup_b = cfg.effective_drift().sup_bound();
            for &k in ks {
                let sol = solve(&SolveConfig { k: Some(k), ..cfg.clone() }, noise)?;
                let lhs = sol.holder_seminorm(ex.h_low, 1, cfg.policy)?;
                let rhs = (2.0 * sup_b + 1.0) * k;
                let arm = format!("K={k}");
                rep.push(noise.seed, &arm, "lhs", lhs);
                rep.push(noise.seed, &arm, "rhs", rhs);
                rep.push(noise.seed, &arm, "tau", sol.stop.map_or(1.0, |t| noise.grid.time(t)));
                rep.criterion(format!("bound {arm}"), lhs <= rhs);
            }
        }
        Regime::Rough | Regime::WeakRough => {
            if cfg.s0 != 0 {
                return config("the rough a priori check starts at the grid origin");
            }
            let mut sorted = ks.to_vec();
            sorted.sort_by(|a, b| a.total_cmp(b));
            let mut prev = 0.0f64;
            let mut monotone = true;
            let mut finite = true;
            for &k in &sorted {
                let sol = solve(&SolveConfig { k: Some(k), ..cfg.clone() }, noise)?;
                let f = sol.to_grid_path(1)?;
                let fp = sol.gubinelli_path(1)?;
                let cp = ControlledPath::new(f, fp, noise.driver.clone(), ex.h_low, 2.0 * ex.h_low)?;
                let end = sol.stop.unwrap_or(noise.grid.n_steps);
                let sn = controlled_seminorm_window(&cp, 2.0 * ex.h_low, 0, end, cfg.policy);
                let total = sn.total();
                let arm = format!("K={k}");
                rep.push(noise.seed, &arm, "remainder", sn.remainder);
                rep.push(noise.seed, &arm, "derivative", sn.derivative);
                rep.push(noise.seed, &arm, "seminorm", total);
                rep.push(noise.seed, &arm, "tau", noise.grid.time(end));
                finite &= total.is_finite();
                monotone &= total >= prev * (1.0 - 1e-12);
                prev = total;
            }
            rep.criterion("finite", finite);
            rep.criterion("monotone_in_k", monotone);
        }
        Regime::Smooth => {
            let r = smooth_conditional_fit(cfg, noise)?;
            for (lag, dd, ss) in &r.lags {
                let arm = format!("lag={lag}");
                rep.push(noise.seed, &arm, "drift_conditional", *dd);
                rep.push(noise.seed, &arm, "noise_conditional", *ss);
            }
            rep.push(noise.seed, "fit", "drift_exponent", r.drift_exponent);
            rep.push(noise.seed, "fit", "noise_exponent", r.noise_exponent);
            rep.push(noise.seed, "fit", "drift_quotient", r.drift_quotient);
            rep.push(noise.seed, "fit", "noise_quotient", r.noise_quotient);
            let alpha = cfg.drift.alpha;
            rep.criterion("drift_exponent", r.drift_exponent >= 1.0 + alpha * ex.h_mid - 0.1);
            rep.criterion("noise_exponent", r.noise_exponent >= ex.h_mid - 0.05);
            rep.criterion("finite", r.drift_quotient.is_finite() && r.noise_quotient.is_finite());
        }
    }
    Ok(rep)
}

/// Dyadic-lag maxima of `|D_t - E^s D_t|` and `|S_t - E^s S_t|` for the smooth regime.
pub fn smooth_conditional_fit(cfg: &SolveConfig, noise: &Arc<Noise>) -> Result<AprioriReport> {
    if cfg.regime()? != Regime::Smooth {
        return config("conditional fits are for the smooth regime");
    }
    let ex = cfg.exponents()?;
    let sol = solve(cfg, noise)?;
    let b = cfg.effective_drift();
    let grid = noise.grid;
    let n = grid.n_steps;
    let h = grid.step();
    let end = sol.stop.unwrap_or(n);
    let d = sol.dim;
    let mut lags = Vec::new();
    let (mut dq, mut sq) = (0.0f64, 0.0f64);
    let mut j = 0u32;
    while (1usize << j) <= (end - cfg.s0) / 4 {
        let len = 1usize << j;
        let spacing = 1usize << j.saturating_sub(4);
        let (mut md, mut ms) = (0.0f64, 0.0f64);
        let mut s = cfg.s0;
        while s + len <= end {
            let seg = noise.fbm.conditional_segment(s, s + len)?;
            let i0 = s - cfg.s0;
            let i1 = i0 + len;
            let (fd, fs) = drive_along(cfg, &b, sol.at(i0), &seg, h);
            let mut ed = 0.0f64;
            let mut es = 0.0f64;
            for c in 0..d {
                let ddiff = sol.drift_part[i1 * d + c] - sol.drift_part[i0 * d + c] - fd[c];
                let sdiff = sol.noise_part[i1 * d + c] - sol.noise_part[i0 * d + c] - fs[c];
                ed += ddiff * ddiff;
                es += sdiff * sdiff;
            }
            md = md.max(ed.sqrt());
            ms = ms.max(es.sqrt());
            s += spacing;
        }
        let lag = len as f64 * h;
        dq = dq.max(md / lag.powf(1.0 + cfg.drift.alpha * ex.h_mid));
        sq = sq.max(ms / lag.powf(ex.h_mid));
        lags.push((lag, md, ms));
        j += 1;
    }
    if lags.len() < 3 {
        return config("too few lags before the stopping time for a conditional fit");
    }
    let x: Vec<f64> = lags.iter().map(|l| l.0).collect();
    let yd: Vec<f64> = lags.iter().map(|l| l.1).collect();
    let ys: Vec<f64> = lags.iter().map(|l| l.2).collect();
    Ok(AprioriReport {
        drift_exponent: loglog_slope(&x, &yd),
        noise_exponent: loglog_slope(&x, &ys),
        lags,
        drift_quotient: dq,
        noise_quotient: sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_spaces::{DiffusionField, HolderDrift};
    use crate::grid::TimeGrid;
    use crate::solver::{NoiseOptions, Scheme};

    #[test]
    fn zero_drift_has_no_drift_part() {
        let nz = Noise::sample(1.3, TimeGrid::unit(512).unwrap(), 2, 1, NoiseOptions::default()).unwrap();
        let cfg = SolveConfig::new(1.3, vec![0.0, 0.0], HolderDrift::zero(2), DiffusionField::default_field(2), Scheme::Rk4);
        let r = smooth_conditional_fit(&cfg, &nz).unwrap();
        assert!(r.lags.iter().all(|l| l.1 == 0.0));
        assert!(r.lags.iter().all(|l| l.2 > 0.0));
    }

    #[test]
    fn young_bound_and_rough_monotonicity() {
        let grid = TimeGrid::unit(1024).unwrap();
        let b = HolderDrift::power(vec![0.0; 2], vec![1.0, 1.0], 1.0, 2.0, 0.6).unwrap();
        let nz = Noise::sample(0.75, grid, 2, 2, NoiseOptions::default()).unwrap();
        let cfg = SolveConfig::new(0.75, vec![0.0, 0.0], b, DiffusionField::default_field(2), Scheme::Euler);
        assert!(apriori_check(&cfg, &nz, &[1.0, 2.0]).unwrap().pass());

        let b = HolderDrift::power(vec![0.0; 2], vec![1.0, 1.0], 1.0, 2.0, 0.25).unwrap();
        let nz = Noise::sample(0.45, grid, 2, 2, NoiseOptions { refinement: 4, ..Default::default() }).unwrap();
        let cfg = SolveConfig::new(0.45, vec![0.0, 0.0], b, DiffusionField::default_field(2), Scheme::Davie);
        let rep = apriori_check(&cfg, &nz, &[4.0, 1.0, 2.0]).unwrap();
        assert!(rep.pass(), "{:?}", rep.criteria);
        let s: Vec<f64> = ["K=1", "K=2", "K=4"].iter().map(|a| rep.value(2, a, "seminorm").unwrap()).collect();
        assert!(s[0] <= s[1] && s[1] <= s[2]);
    }

    #[test]
    fn needs_the_full_grid() {
        let nz = Noise::sample(0.75, TimeGrid::unit(64).unwrap(), 1, 1, NoiseOptions::default()).unwrap();
        let mut cfg = SolveConfig::new(0.75, vec![0.0], HolderDrift::zero(1), DiffusionField::identity(1), Scheme::Euler);
        cfg.partition = PartitionSpec::Uniform { stride: 2 };
        assert!(apriori_check(&cfg, &nz, &[1.0]).is_err());
    }
}
