//! Comparative experiments on one noise realisation: mollified sequences,
//! stability, semiflow and path-by-path uniqueness.

use std::sync::Arc;

use super::report::median;
use super::{solve, ExperimentReport, Noise, PartitionSpec, Scheme, SolutionPath, SolveConfig};
use crate::error::{config, Result};
use crate::grid::GridPath;
use crate::heatkernel::loglog_slope;
use crate::holder::{holder_seminorm, PairPolicy};
use crate::roughpath::Regime;

/// Regime distance of two solutions on uniform nodes of spacing `stride`:
/// sup plus `C^beta` seminorm of the difference, plus the sup distance of the
/// Gubinelli derivatives in the rough regime.
pub fn regime_distance(a: &SolutionPath, b: &SolutionPath, beta: f64, stride: usize, policy: PairPolicy) -> Result<f64> {
    a.check_same_noise(b)?;
    let pa = a.to_grid_path(stride)?;
    let pb = b.to_grid_path(stride)?;
    let diff = GridPath::new(pa.grid, pa.dim, pa.values.iter().zip(&pb.values).map(|(x, y)| x - y).collect())?;
    let mut dist = diff.sup_norm() + holder_seminorm(&diff, beta, policy).value;
    if a.gubinelli.is_some() && b.gubinelli.is_some() {
        dist += a.gubinelli_path(stride)?.sup_distance(&b.gubinelli_path(stride)?);
    }
    Ok(dist)
}

/// Solves with `b^n` for each level on the same noise and reports consecutive gaps.
///
/// Criteria: the last three gaps decrease, and the geometric-mean decay
/// factor per level is at least `min_factor`.
pub fn solve_mollified_sequence(cfg: &SolveConfig, noise: &Arc<Noise>, levels: &[u32], min_factor: f64) -> Result<ExperimentReport> {
    if levels.len() < 2 {
        return config("a mollified sequence needs at least two levels");
    }
    if !matches!(cfg.partition, PartitionSpec::Uniform { .. }) {
        return config("mollified sequences use a uniform partition");
    }
    let stride = cfg.partition.stride();
    let beta = cfg.exponents()?.h_low.min(1.0);
    let mut rep = ExperimentReport::new("mollified");
    let sols: Vec<SolutionPath> = levels
        .iter()
        .map(|&n| solve(&SolveConfig { level: Some(n), ..cfg.clone() }, noise))
        .collect::<Result<_>>()?;
    let mut gaps = Vec::new();
    for (w, lv) in sols.windows(2).zip(levels.windows(2)) {
        let g = regime_distance(&w[0], &w[1], beta, stride, cfg.policy)?;
        rep.push(noise.seed, format!("level{}", lv[1]), "gap", g);
        gaps.push(g);
    }
    let first = gaps[0];
    let last = *gaps.last().expect("two levels");
    let factor = if last > 0.0 { (first / last).powf(1.0 / (gaps.len() - 1).max(1) as f64) } else { f64::INFINITY };
    rep.push(noise.seed, "sequence", "decay_factor", factor);
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    rep.criterion("tail_monotone", monotone);
    rep.criterion("decay_factor", factor >= min_factor || gaps.iter().all(|g| *g <= 1e-12));
    Ok(rep)
}

/// Stopped sup distance between two configurations on a shared noise.
pub fn paired_distance(a: &SolveConfig, b: &SolveConfig, noise: &Arc<Noise>) -> Result<f64> {
    let sa = solve(a, noise)?;
    let sb = solve(b, noise)?;
    let common: Vec<usize> = sa.nodes.iter().copied().filter(|k| sb.value_at(*k).is_some()).collect();
    sa.sup_distance_on(&sb, &common)
}

/// Initial-condition and drift perturbation sweeps of size `eps`.
///
/// Criteria: distances are monotone in `eps` and both log-log slopes reach `min_slope`.
pub fn stability_experiment(cfg: &SolveConfig, noise: &Arc<Noise>, eps: &[f64], min_slope: f64) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("stability");
    let d = cfg.x0.len();
    let dir: Vec<f64> = (0..d).map(|_| 1.0 / (d as f64).sqrt()).collect();
    let base_zero = paired_distance(cfg, cfg, noise)?;
    rep.push(noise.seed, "identical", "distance", base_zero);
    let sup_b = cfg.drift.sup_bound().max(1e-300);
    let mut xs = Vec::new();
    let mut ys_init = Vec::new();
    let mut ys_drift = Vec::new();
    for &e in eps {
        let mut y = cfg.clone();
        for (v, u) in y.x0.iter_mut().zip(&dir) {
            *v += e * u;
        }
        let di = paired_distance(cfg, &y, noise)?;
        let bt = SolveConfig { drift: cfg.drift.scaled(1.0 + e), ..cfg.clone() };
        let dd = paired_distance(cfg, &bt, noise)?;
        rep.push(noise.seed, "initial", format!("eps={e}"), di);
        rep.push(noise.seed, "drift", format!("eps={e}"), dd);
        xs.push(e);
        ys_init.push(di);
        ys_drift.push(dd);
    }
    let drift_sizes: Vec<f64> = xs.iter().map(|e| e * sup_b).collect();
    let si = loglog_slope(&xs, &ys_init);
    let sd = loglog_slope(&drift_sizes, &ys_drift);
    rep.push(noise.seed, "initial", "slope", si);
    rep.push(noise.seed, "drift", "slope", sd);
    let mono = |v: &[f64], x: &[f64]| {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
        idx.windows(2).all(|w| v[w[1]] >= v[w[0]])
    };
    rep.criterion("identical_zero", base_zero == 0.0);
    rep.criterion("monotone", mono(&ys_init, &xs) && mono(&ys_drift, &xs));
    rep.criterion("initial_slope", si >= min_slope);
    rep.criterion("drift_slope", sd >= min_slope || cfg.drift.sup_bound() == 0.0);
    Ok(rep)
}

/// Restart at grid node `u0` from the straight-through value versus the straight-through solve.
///
/// Budget: sup distance between strides `s` and `2 s` (step halving). PASS iff
/// the restart distance is at most three budgets.
pub fn semiflow_check(cfg: &SolveConfig, noise: &Arc<Noise>, u0: usize) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("semiflow");
    let straight = solve(cfg, noise)?;
    let x_u = straight
        .value_at(u0)
        .ok_or_else(|| crate::error::Error::Config(format!("restart node {u0} is not a partition node")))?
        .to_vec();
    let restart_cfg = SolveConfig { s0: u0, x0: x_u, ..cfg.clone() };
    let restart = solve(&restart_cfg, noise)?;
    let common: Vec<usize> = restart.nodes.iter().copied().filter(|k| straight.value_at(*k).is_some()).collect();
    let dist = straight.sup_distance_on(&restart, &common)?;
    let coarse_part = match cfg.partition {
        PartitionSpec::Uniform { stride } => PartitionSpec::Uniform { stride: 2 * stride },
        PartitionSpec::NonUniform { stride } => PartitionSpec::NonUniform { stride: 2 * stride },
    };
    let coarse = solve(&SolveConfig { partition: coarse_part, ..cfg.clone() }, noise)?;
    let shared: Vec<usize> = coarse.nodes.iter().copied().filter(|k| straight.value_at(*k).is_some()).collect();
    let budget = straight.sup_distance_on(&coarse, &shared)?;
    rep.push(noise.seed, "restart", "distance", dist);
    rep.push(noise.seed, "halving", "budget", budget);
    rep.criterion("semiflow", dist <= 3.0 * budget);
    Ok(rep)
}

/// Extrapolated limit of one arm.
#[derive(Clone, Debug)]
pub struct ArmLimit {
    pub name: String,
    /// Limit values at the comparison nodes, flattened.
    pub limit: Vec<f64>,
    /// Geometric-mean contraction of consecutive gaps (unclamped).
    pub rho_raw: f64,
    pub rho: f64,
    pub last_gap: f64,
    pub budget: f64,
}

/// Richardson-type limit from solutions ordered coarse to fine, compared on `nodes`.
///
/// `rho` is the observed contraction clamped to `[0.5, 0.9]`; the limit is
/// `X_f + (X_f - X_{f-1}) rho / (1 - rho)` and the budget `last gap / (1 - rho)`.
pub fn richardson_limit(name: &str, sols: &[SolutionPath], nodes: &[usize]) -> Result<ArmLimit> {
    if sols.len() < 3 {
        return config("extrapolation needs at least three refinements");
    }
    let gaps: Vec<f64> = sols.windows(2).map(|w| w[0].sup_distance_on(&w[1], nodes)).collect::<Result<_>>()?;
    let first = gaps[0];
    let last = *gaps.last().expect("non-empty");
    let rho_raw = if last == 0.0 {
        0.0
    } else if first == 0.0 {
        f64::INFINITY
    } else {
        (last / first).powf(1.0 / (gaps.len() - 1) as f64)
    };
    let rho = rho_raw.clamp(0.5, 0.9);
    let fine = &sols[sols.len() - 1];
    let prev = &sols[sols.len() - 2];
    let mut limit = Vec::with_capacity(nodes.len() * fine.dim);
    for &k in nodes {
        let a = fine.value_at(k).expect("checked by the gaps");
        let b = prev.value_at(k).expect("checked by the gaps");
        for c in 0..fine.dim {
            limit.push(a[c] + (a[c] - b[c]) * rho / (1.0 - rho));
        }
    }
    Ok(ArmLimit { name: name.to_string(), limit, rho_raw, rho, last_gap: last, budget: last / (1.0 - rho) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessOptions {
    /// Strides from coarse to fine; each family is extrapolated from these.
    pub strides: Vec<usize>,
    /// Size of the initial perturbation arm.
    pub perturbation: f64,
    /// Agreement tolerance as a multiple of the summed budgets.
    pub tolerance: f64,
    /// Arms must contract at least this fast.
    pub max_rho: f64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self { strides: vec![32, 16, 8, 4, 2], perturbation: 1e-12, tolerance: 1.0, max_rho: 0.95 }
    }
}

/// Two schemes x two partitions plus a perturbed start, each extrapolated;
/// all limits must agree within their summed budgets.
///
/// This is an empirical proxy on one realisation; it cannot certify uniqueness.
pub fn pbp_uniqueness_experiment(cfg: &SolveConfig, noise: &Arc<Noise>, opts: &UniquenessOptions) -> Result<ExperimentReport> {
    let regime = cfg.regime()?;
    let (sa, sb) = Scheme::pair_for(if regime == Regime::WeakRough { Regime::Rough } else { regime });
    let smax = *opts.strides.iter().max().ok_or_else(|| crate::error::Error::Config("no strides".into()))?;
    if opts.strides.iter().any(|s| s % 2 != 0 || smax % s != 0) {
        return config("uniqueness strides must be even divisors of the largest stride");
    }
    let n = noise.grid.n_steps;
    if (n - cfg.s0) % (2 * smax) != 0 {
        return config("the solve window must be a multiple of twice the largest stride");
    }
    let nodes: Vec<usize> = (0..=(n - cfg.s0) / (2 * smax)).map(|m| cfg.s0 + m * 2 * smax).collect();
    let mut pert = cfg.x0.clone();
    pert[0] += opts.perturbation;
    let arms: Vec<(String, Scheme, bool, Vec<f64>)> = vec![
        (format!("{}-uniform", sa.name()), sa, false, cfg.x0.clone()),
        (format!("{}-nonuniform", sa.name()), sa, true, cfg.x0.clone()),
        (format!("{}-uniform", sb.name()), sb, false, cfg.x0.clone()),
        (format!("{}-nonuniform", sb.name()), sb, true, cfg.x0.clone()),
        (format!("{}-perturbed", sa.name()), sa, false, pert),
    ];
    let mut limits = Vec::new();
    for (name, scheme, nonuni, x0) in &arms {
        let sols: Vec<SolutionPath> = opts
            .strides
            .iter()
            .map(|&s| {
                let partition = if *nonuni { PartitionSpec::NonUniform { stride: s } } else { PartitionSpec::Uniform { stride: s } };
                solve(&SolveConfig { scheme: *scheme, partition, x0: x0.clone(), ..cfg.clone() }, noise)
            })
            .collect::<Result<_>>()?;
        limits.push(richardson_limit(name, &sols, &nodes)?);
    }
    let mut rep = ExperimentReport::new("uniqueness");
    for l in &limits {
        rep.push(noise.seed, &l.name, "rho", l.rho_raw);
        rep.push(noise.seed, &l.name, "budget", l.budget);
    }
    let d = cfg.x0.len();
    let mut worst_ratio = 0.0f64;
    let mut max_dist = 0.0f64;
    let mut agree = true;
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let dist = limits[i]
                .limit
                .chunks(d)
                .zip(limits[j].limit.chunks(d))
                .map(|(a, b)| crate::scalar::dist(a, b))
                .fold(0.0, f64::max);
            let budget = limits[i].budget + limits[j].budget;
            let ratio = if dist == 0.0 { 0.0 } else if budget == 0.0 { f64::INFINITY } else { dist / budget };
            worst_ratio = worst_ratio.max(ratio);
            max_dist = max_dist.max(dist);
            agree &= dist <= opts.tolerance * budget;
        }
    }
    let max_budget = limits.iter().map(|l| l.budget).fold(0.0, f64::max);
    rep.push(noise.seed, "all", "max_distance", max_dist);
    rep.push(noise.seed, "all", "max_budget", max_budget);
    rep.push(noise.seed, "all", "disagreement_ratio", worst_ratio);
    let contracting = limits.iter().all(|l| l.rho_raw <= opts.max_rho);
    rep.criterion("limits_agree", agree);
    rep.criterion("contracting", contracting);
    rep.note("two-scheme/two-partition agreement on one realisation is an empirical proxy, not a certificate");
    Ok(rep)
}

/// Median of `metric` over the rows of `arm` in a merged report.
pub fn median_metric(rep: &ExperimentReport, arm: &str, metric: &str) -> f64 {
    median(&rep.values(arm, metric))
}
