//! Multi-seed experiment runs read from a [`Config`]. Per-seed reports run in
//! parallel, merge in seed order, and their criteria are aggregated over seeds.

use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{Config, DriftKind};
use crate::controlled::{compose, ControlledPath};
use crate::error::{config, Error, Result};
use crate::function_spaces::{DiffusionField, HolderDrift};
use crate::grid::GridPath;
use crate::heatkernel::{
    box_grid, cov_gamma_constant_y, cov_gamma_monte_carlo, cov_gamma_smooth, heat_diff_bound_check, heat_diff_sweep, heat_holder_bound_check,
    CovMatrix,
};
use crate::integrate::{rough_continuity_check, rough_remainder_check, young_continuity_check, young_remainder_check};
use crate::linalg::{Mat, RectMat};
use crate::roughpath::Regime;
use crate::solver::{
    apriori_check, distributional_drift_integral, median, pbp_uniqueness_experiment, semiflow_check, solve_mollified_sequence,
    stability_experiment, ExperimentReport, SolveConfig, UniquenessOptions, WeakDriftOptions, WeakPath,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Apriori,
    Stability,
    Semiflow,
    Uniqueness,
    Mollified,
    WeakDrift,
    Heatkernel,
    Remainders,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::Apriori,
        Self::Stability,
        Self::Semiflow,
        Self::Uniqueness,
        Self::Mollified,
        Self::WeakDrift,
        Self::Heatkernel,
        Self::Remainders,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Apriori => "apriori",
            Self::Stability => "stability",
            Self::Semiflow => "semiflow",
            Self::Uniqueness => "uniqueness",
            Self::Mollified => "mollified",
            Self::WeakDrift => "weak-drift",
            Self::Heatkernel => "heatkernel",
            Self::Remainders => "remainders",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

/// Thresholds of the aggregated criteria.
#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds {
    pub min_decay_factor: f64,
    pub min_slope: f64,
    pub max_weak_ratio: f64,
    pub sewing_tolerance: f64,
    pub control_ratio: f64,
    pub covariance_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { min_decay_factor: 1.5, min_slope: 0.8, max_weak_ratio: 0.8, sewing_tolerance: 1e-3, control_ratio: 10.0, covariance_tolerance: 0.05 }
    }
}

/// Runs `kind` over `seeds` with default thresholds.
pub fn run_experiment(kind: ExperimentKind, cfg: &Config, seeds: &[u64]) -> Result<ExperimentReport> {
    run_experiment_with(kind, cfg, seeds, &Thresholds::default())
}

pub fn run_experiment_with(kind: ExperimentKind, cfg: &Config, seeds: &[u64], th: &Thresholds) -> Result<ExperimentReport> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return config("no seeds given");
    }
    let mut rep = match kind {
        ExperimentKind::Apriori => apriori(cfg, &seeds)?,
        ExperimentKind::Stability => stability(cfg, &seeds, th)?,
        ExperimentKind::Semiflow => semiflow(cfg, &seeds)?,
        ExperimentKind::Uniqueness => uniqueness(cfg, &seeds, th)?,
        ExperimentKind::Mollified => mollified(cfg, &seeds, th)?,
        ExperimentKind::WeakDrift => weak_drift(cfg, &seeds, th)?,
        ExperimentKind::Heatkernel => heatkernel(cfg, seeds[0], th)?,
        ExperimentKind::Remainders => remainders(cfg, &seeds)?,
    };
    rep.name = kind.name().to_string();
    rep.sort_by_seed();
    Ok(rep)
}

fn per_seed(seeds: &[u64], f: impl Fn(u64) -> Result<ExperimentReport> + Sync) -> Result<Vec<ExperimentReport>> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

/// Concatenates per-seed rows; per-seed criteria become `criteria` rows valued `1`/`0`.
fn merge(name: &str, seeds: &[u64], parts: Vec<ExperimentReport>) -> ExperimentReport {
    let mut out = ExperimentReport::new(name);
    for (seed, p) in seeds.iter().zip(parts) {
        out.rows.extend(p.rows);
        for (c, pass) in p.criteria {
            out.push(*seed, "criteria", c, if pass { 1.0 } else { 0.0 });
        }
        for n in p.notes {
            if !out.notes.contains(&n) {
                out.notes.push(n);
            }
        }
    }
    out
}

/// Per-seed criteria that failed on at least one seed count as failed; reports the failure count.
fn require_all(out: &mut ExperimentReport, names: &[&str]) {
    for name in names {
        let flags: Vec<f64> = out.rows.iter().filter(|r| r.arm == "criteria" && r.metric == *name).map(|r| r.value).collect();
        let failures = flags.iter().filter(|v| **v == 0.0).count();
        out.aggregate(format!("{name}_failures"), failures as f64);
        out.criterion(*name, !flags.is_empty() && failures == 0);
    }
}

fn criterion_names(out: &ExperimentReport) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in out.rows.iter().filter(|r| r.arm == "criteria") {
        if !names.contains(&r.metric) {
            names.push(r.metric.clone());
        }
    }
    names
}

fn apriori(cfg: &Config, seeds: &[u64]) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let ks = cfg.experiments.k_values.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let parts = per_seed(seeds, |s| apriori_check(&sc, &cfg.sample_noise(s)?, &ks))?;
    let mut out = merge("apriori", seeds, parts);
    let names = criterion_names(&out);
    require_all(&mut out, &names.iter().map(String::as_str).collect::<Vec<_>>());
    Ok(out)
}

fn default_eps() -> Vec<f64> {
    (3..=7).map(|j| 2f64.powi(-j)).collect()
}

fn stability(cfg: &Config, seeds: &[u64], th: &Thresholds) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let eps = cfg.experiments.eps.clone().unwrap_or_else(default_eps);
    let parts = per_seed(seeds, |s| stability_experiment(&sc, &cfg.sample_noise(s)?, &eps, th.min_slope))?;
    let mut out = merge("stability", seeds, parts);
    require_all(&mut out, &["identical_zero", "monotone"]);
    for arm in ["initial", "drift"] {
        let m = median(&out.values(arm, "slope"));
        out.aggregate(format!("median_{arm}_slope"), m);
        out.criterion(format!("{arm}_slope"), m >= th.min_slope);
    }
    Ok(out)
}

fn semiflow(cfg: &Config, seeds: &[u64]) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let grid = cfg.grid()?;
    let u0 = grid.nearest_index(cfg.experiments.u0.unwrap_or(0.5));
    let parts = per_seed(seeds, |s| semiflow_check(&sc, &cfg.sample_noise(s)?, u0))?;
    let mut out = merge("semiflow", seeds, parts);
    require_all(&mut out, &["semiflow"]);
    let worst = out
        .rows
        .iter()
        .filter(|r| r.arm == "restart")
        .zip(out.rows.iter().filter(|r| r.arm == "halving"))
        .map(|(d, b)| if d.value == 0.0 { 0.0 } else { d.value / b.value })
        .fold(0.0, f64::max);
    out.aggregate("max_distance_over_budget", worst);
    Ok(out)
}

fn uniqueness_options(cfg: &Config) -> UniquenessOptions {
    let mut o = UniquenessOptions::default();
    if let Some(s) = &cfg.experiments.strides {
        o.strides = s.clone();
    }
    o
}

/// Noiseless start at the non-Lipschitz point of a power drift.
pub fn peano_control(cfg: &Config) -> Result<SolveConfig> {
    if cfg.drift.family != DriftKind::Power {
        return config("the noiseless control needs a power drift");
    }
    let mut sc = cfg.solve_config()?;
    let d = cfg.model.dim;
    sc.sigma = DiffusionField::zero(d, d);
    sc.x0 = cfg.drift.center.clone().unwrap_or_else(|| vec![0.0; d]);
    sc.k = None;
    Ok(sc)
}

fn uniqueness(cfg: &Config, seeds: &[u64], th: &Thresholds) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let opts = uniqueness_options(cfg);
    let parts = per_seed(seeds, |s| pbp_uniqueness_experiment(&sc, &cfg.sample_noise(s)?, &opts))?;
    let mut out = merge("uniqueness", seeds, parts);
    require_all(&mut out, &["limits_agree", "contracting"]);
    out.aggregate("max_disagreement_ratio", out.values("all", "disagreement_ratio").into_iter().fold(0.0, f64::max));
    if cfg.drift.family == DriftKind::Power {
        let control = peano_control(cfg)?;
        let noise = cfg.sample_noise(seeds[0])?;
        let c = pbp_uniqueness_experiment(&control, &noise, &opts)?;
        let ratio = c.value(seeds[0], "all", "disagreement_ratio").unwrap_or(0.0);
        for r in c.rows {
            out.push(r.seed, format!("control/{}", r.arm), r.metric, r.value);
        }
        out.aggregate("control_disagreement_ratio", ratio);
        out.criterion("control_disagrees", ratio >= th.control_ratio);
    }
    Ok(out)
}

fn mollified(cfg: &Config, seeds: &[u64], th: &Thresholds) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let levels = cfg.experiments.levels.clone().unwrap_or_else(|| (3..=8).collect());
    let parts = per_seed(seeds, |s| solve_mollified_sequence(&sc, &cfg.sample_noise(s)?, &levels, th.min_decay_factor))?;
    let mut out = merge("mollified", seeds, parts);
    let m = median(&out.values("sequence", "decay_factor"));
    out.aggregate("median_decay_factor", m);
    out.criterion("median_decay_factor", m >= th.min_decay_factor);
    Ok(out)
}

fn weak_drift(cfg: &Config, seeds: &[u64], th: &Thresholds) -> Result<ExperimentReport> {
    let b = cfg.drift()?;
    let levels = cfg.experiments.levels.clone().unwrap_or_else(|| (4..=9).collect());
    let n_sew = cfg.experiments.sewing_seeds.unwrap_or(5);
    let base = WeakDriftOptions { levels: levels.clone(), max_ratio: th.max_weak_ratio, sewing_tolerance: th.sewing_tolerance, ..Default::default() };
    let parts = seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let fbm = cfg.sample_fbm(s)?;
            distributional_drift_integral(&b, &fbm, s, &WeakDriftOptions { sewing: i < n_sew, ..base.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = merge("weak-drift", seeds, parts);
    let m = median(&out.values("fbm", "median_ratio"));
    out.aggregate("median_gap_ratio", m);
    out.criterion("gap_ratio", m <= th.max_weak_ratio);
    if n_sew > 0 {
        let mut worst_median = 0.0f64;
        let mut worst = 0.0f64;
        for lv in &levels {
            let v = out.values(&format!("fbm-level{lv}"), "sewing_diff");
            worst_median = worst_median.max(median(&v));
            worst = v.iter().cloned().fold(worst, f64::max);
        }
        out.aggregate("sewing_diff_worst_level_median", worst_median);
        out.aggregate("sewing_diff_max", worst);
        out.criterion("sewing_agreement", worst_median <= th.sewing_tolerance);
    }
    let d = cfg.model.dim;
    let direction = cfg.experiments.control_direction.clone().unwrap_or_else(|| {
        let mut v = vec![0.0; d];
        v[d - 1] = 1.0;
        v
    });
    let fbm = cfg.sample_fbm(seeds[0])?;
    let control = distributional_drift_integral(&b, &fbm, seeds[0], &WeakDriftOptions { path: WeakPath::Deterministic { direction }, sewing: false, ..base })?;
    let ratio = control.value(seeds[0], "deterministic", "median_ratio").unwrap_or(f64::NAN);
    out.rows.extend(control.rows);
    out.aggregate("control_median_ratio", ratio);
    out.criterion("control_diverges", !(ratio <= th.max_weak_ratio));
    Ok(out)
}

fn reference_gamma() -> Result<CovMatrix> {
    CovMatrix::new(Mat::from_rows(&[&[1.0, 0.2], &[0.2, 0.6]]))
}

/// Heat-kernel bound sweeps and the smooth-regime conditional covariance checks.
fn heatkernel(cfg: &Config, seed: u64, th: &Thresholds) -> Result<ExperimentReport> {
    let mut out = ExperimentReport::new("heatkernel");
    let b = planar_drift(cfg)?;
    let scales: Vec<f64> = (2..=8).map(|j| 4f64.powi(-j)).collect();
    let anchors = vec![vec![0.0, 0.0], vec![0.37, 0.0], vec![-1.3, 0.2]];
    let hb = heat_holder_bound_check(&reference_gamma()?, &b, 1.0, &scales, &anchors)?;
    for r in &hb.rows {
        out.push(seed, "holder", format!("implied@{}", crate::io::fmt_e12(r.scale)), r.implied_constant);
    }
    let fit = hb.fitted_exponent.unwrap_or(f64::NAN);
    let want = 0.5 * (1.0 - b.alpha);
    out.aggregate("holder_fitted_exponent", fit);
    out.aggregate("holder_expected_exponent", want);
    out.aggregate("holder_stability_ratio", hb.stability_ratio);
    out.criterion("holder_sweep", hb.pass);
    out.criterion("holder_exponent", (fit - want).abs() <= 0.15);

    let g = CovMatrix::new(Mat::from_rows(&[&[1.0, 0.0], &[0.0, 4.0]]))?;
    let gb = CovMatrix::new(Mat::from_rows(&[&[1.1, 0.0], &[0.0, 4.0]]))?;
    let diff = heat_diff_bound_check(&g, &gb, &box_grid(2, 6.0, 49))?;
    let near = heat_diff_bound_check(&g, &gb, &box_grid(2, 3.0, 25))?;
    out.aggregate("difference_max_implied", diff.max_implied);
    out.aggregate("difference_max_implied_box3", near.max_implied);
    out.aggregate("difference_max_implied_wide", diff.max_implied_wide);
    out.criterion("difference_wide_kernel", diff.max_implied_wide <= 10.0);
    let eps: Vec<f64> = (2..=8).map(|j| 2f64.powi(-j)).collect();
    let sweep = heat_diff_sweep(&g, &Mat::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]), &eps, &box_grid(2, 6.0, 49))?;
    out.aggregate("difference_stability_ratio", sweep.stability_ratio);
    out.criterion("difference_sweep", sweep.pass);

    let h = if cfg.model.hurst > 1.0 && cfg.model.hurst < 2.0 { cfg.model.hurst } else { 1.3 };
    let ybar = RectMat { rows: 2, cols: 2, a: vec![1.0, 0.3, -0.2, 0.8] };
    let quad = cov_gamma_smooth(&|_| ybar.clone(), 0.25, 0.75, h)?;
    let closed = cov_gamma_constant_y(&ybar, 0.25, 0.75, h)?;
    let rel = quad.sub(&closed).frobenius() / closed.frobenius();
    out.aggregate("constant_y_relative_error", rel);
    out.criterion("constant_y", rel <= 1e-8);
    let samples = cfg.experiments.mc_samples.unwrap_or(5000);
    if samples > 0 {
        let sigma = DiffusionField::default_field(2);
        let y = |r: f64| {
            let mut m = RectMat::zeros(2, 2);
            sigma.eval_into(&[r, -0.5 * r], &mut m);
            m
        };
        let q = cov_gamma_smooth(&y, 0.25, 0.75, h)?;
        let mc = cov_gamma_monte_carlo(&y, 0.25, 0.75, h, 256, samples, seed)?;
        let rel = mc.sub(&q).frobenius() / q.frobenius();
        out.aggregate("monte_carlo_relative_error", rel);
        out.criterion("monte_carlo", rel <= th.covariance_tolerance);
    }
    Ok(out)
}

/// The configured drift as a two-dimensional, evaluable representative.
fn planar_drift(cfg: &Config) -> Result<HolderDrift> {
    let b = if cfg.model.dim == 2 { cfg.drift()? } else { HolderDrift::power(vec![0.0; 2], vec![1.0, 0.0], 1.0, 2.0, 0.5)? };
    Ok(if b.alpha < 0.0 { b.mollify(18) } else { b })
}

/// `σ(g)` flattened row-major along a driver.
fn sigma_path(sigma: &DiffusionField, g: &GridPath<f64>) -> Result<GridPath<f64>> {
    let (d, d0) = (sigma.dim(), sigma.noise_dim());
    let mut m = RectMat::zeros(d, d0);
    let mut vals = Vec::with_capacity(g.len() * d * d0);
    for k in 0..g.len() {
        sigma.eval_into(g.at(k), &mut m);
        vals.extend_from_slice(&m.a);
    }
    GridPath::new(g.grid, d * d0, vals)
}

/// Remainder and continuity sweeps of the Young or rough integral of `σ(B)` against `B`.
fn remainders(cfg: &Config, seeds: &[u64]) -> Result<ExperimentReport> {
    let sc = cfg.solve_config()?;
    let ex = sc.exponents()?;
    let regime = sc.regime()?;
    if regime == Regime::Smooth {
        return config("integral remainder sweeps are defined for H < 1");
    }
    let scales: Vec<u32> = (2..=8).collect();
    let sigma = cfg.sigma()?;
    let parts = per_seed(seeds, |s| {
        let noise = cfg.sample_noise(s)?;
        let mut rep = ExperimentReport::new("remainders");
        let reports = match regime {
            Regime::Young => {
                let f = sigma_path(&sigma, &noise.driver)?;
                vec![
                    young_remainder_check(&f, &noise.driver, ex.h_low, ex.h_low, &scales, sc.policy)?,
                    young_continuity_check(&f, &noise.driver, ex.h_low, ex.h_low, &scales, sc.policy)?,
                ]
            }
            _ => {
                let lift = noise.lift.as_ref().ok_or_else(|| Error::Config("rough sweeps need a lift".into()))?;
                let base = ControlledPath::from_driver(Arc::new(lift.path.clone()), ex.h_low, 2.0 * ex.h_low)?;
                let cp = compose(&sigma, &base)?;
                vec![rough_remainder_check(&cp, lift, &scales, sc.policy)?, rough_continuity_check(&cp, lift, &scales, sc.policy)?]
            }
        };
        for r in reports {
            for row in &r.rows {
                rep.push(s, &r.name, format!("implied@{}", crate::io::fmt_e12(row.scale)), row.implied_constant);
            }
            rep.push(s, &r.name, "stability_ratio", r.stability_ratio);
            rep.criterion(r.name.clone(), r.pass);
        }
        Ok(rep)
    })?;
    let mut out = merge("remainders", seeds, parts);
    let names = criterion_names(&out);
    require_all(&mut out, &names.iter().map(String::as_str).collect::<Vec<_>>());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("weak_drift".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn seeds_are_sorted_and_deduplicated() {
        let mut cfg = Config::young_default();
        cfg.model.n_steps = 256;
        cfg.experiments.strides = Some(vec![4, 2, 1]);
        let a = run_experiment(ExperimentKind::Semiflow, &cfg, &[3, 1, 3]).unwrap();
        let b = run_experiment(ExperimentKind::Semiflow, &cfg, &[1, 3]).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.summary_rows(), b.summary_rows());
        assert!(a.rows.windows(2).all(|w| w[0].seed <= w[1].seed));
        assert_eq!(a.rows.iter().filter(|r| r.arm == "criteria").count(), 2);
        assert!(run_experiment(ExperimentKind::Semiflow, &cfg, &[]).is_err());
    }

    #[test]
    fn noiseless_control_needs_a_power_drift() {
        let cfg = Config::weak_default();
        assert!(peano_control(&cfg).is_err());
        let young = peano_control(&Config::young_default()).unwrap();
        assert_eq!(young.sigma.norm_bound, 0.0);
        assert!(young.k.is_none());
    }

    #[test]
    fn smooth_regime_has_no_integral_sweeps() {
        assert!(run_experiment(ExperimentKind::Remainders, &Config::smooth_default(), &[1]).is_err());
    }
}
