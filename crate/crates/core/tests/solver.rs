use std::sync::Arc;

use roughreg::function_spaces::{DiffusionField, HolderDrift};
use roughreg::solver::{solve, Noise, NoiseOptions, PartitionSpec, Scheme, SolutionPath, SolveConfig};
use roughreg::TimeGrid;

fn exp_error(sol: &SolutionPath, nz: &Arc<Noise>) -> f64 {
    (0..sol.len())
        .map(|i| (sol.at(i)[0] - (nz.driver.get(sol.nodes[i], 0) - nz.driver.get(0, 0)).exp()).abs())
        .fold(0.0, f64::max)
}

fn with_stride(cfg: &SolveConfig, stride: usize) -> SolveConfig {
    SolveConfig { partition: PartitionSpec::Uniform { stride }, ..cfg.clone() }
}

#[test]
fn davie_converges_and_euler_without_area_does_not() {
    let grid = TimeGrid::unit(2048).unwrap();
    let nz = Noise::sample(0.4, grid, 1, 5, NoiseOptions::default()).unwrap();
    let davie = SolveConfig::new(0.4, vec![1.0], HolderDrift::zero(1), DiffusionField::linear_1d(1.0), Scheme::Davie);
    let euler = SolveConfig { scheme: Scheme::Euler, ..davie.clone() };
    let errs = |cfg: &SolveConfig| -> Vec<f64> { [4, 2, 1].iter().map(|&s| exp_error(&solve(&with_stride(cfg, s), &nz).unwrap(), &nz)).collect() };
    let d = errs(&davie);
    let e = errs(&euler);
    assert!(d[2] < d[0], "davie {d:?}");
    assert!(d[2] < 0.1, "davie {d:?}");
    assert!(e[2] > 5.0 * d[2], "euler {e:?} davie {d:?}");
    assert!(e[2] >= 0.5 * e[0], "euler error does not shrink: {e:?}");
}

#[test]
fn rk4_step_halving_is_tight_in_the_smooth_regime() {
    let grid = TimeGrid::unit(2048).unwrap();
    let nz = Noise::sample(1.3, grid, 2, 3, NoiseOptions::default()).unwrap();
    let b = HolderDrift::smooth(1.0, 1.0, vec![0.0, 0.5], 1.0);
    let cfg = SolveConfig::new(1.3, vec![0.2, -0.1], b, DiffusionField::default_field(2), Scheme::Rk4);
    let fine = solve(&cfg, &nz).unwrap();
    let coarse = solve(&with_stride(&cfg, 2), &nz).unwrap();
    let dist = fine.sup_distance_on(&coarse, &coarse.nodes).unwrap();
    assert!(dist < 1e-6, "{dist}");
}

#[test]
fn additive_noise_without_drift_is_the_driver() {
    let grid = TimeGrid::unit(512).unwrap();
    let x0 = [0.3, -1.2];
    for (h, scheme) in [(1.3, Scheme::Rk4), (0.7, Scheme::Heun), (0.45, Scheme::Davie)] {
        let nz = Noise::sample(h, grid, 2, 9, NoiseOptions { refinement: 4, ..Default::default() }).unwrap();
        let cfg = SolveConfig::new(h, x0.to_vec(), HolderDrift::zero(2), DiffusionField::identity(2), scheme);
        let sol = solve(&cfg, &nz).unwrap();
        for (i, &k) in sol.nodes.iter().enumerate() {
            for c in 0..2 {
                let want = x0[c] + nz.driver.get(k, c) - nz.driver.get(0, c);
                assert!((sol.at(i)[c] - want).abs() < 1e-8, "H={h} node {k}");
            }
        }
    }
}

#[test]
fn solves_are_reproducible_for_a_seed() {
    let grid = TimeGrid::unit(256).unwrap();
    let b = HolderDrift::power(vec![0.0; 2], vec![1.0, 1.0], 1.0, 2.0, 0.6).unwrap();
    let cfg = SolveConfig::new(0.75, vec![0.5, 0.0], b, DiffusionField::default_field(2), Scheme::Euler);
    let a = solve(&cfg, &Noise::sample(0.75, grid, 2, 11, NoiseOptions::default()).unwrap()).unwrap();
    let c = solve(&cfg, &Noise::sample(0.75, grid, 2, 11, NoiseOptions::default()).unwrap()).unwrap();
    assert_eq!(a.x, c.x);
    let other = solve(&cfg, &Noise::sample(0.75, grid, 2, 12, NoiseOptions::default()).unwrap()).unwrap();
    assert_ne!(a.x, other.x);
}

#[test]
fn regime_and_scheme_mismatches_are_rejected() {
    let grid = TimeGrid::unit(64).unwrap();
    let nz = Noise::sample(0.7, grid, 1, 1, NoiseOptions::default()).unwrap();
    let cfg = SolveConfig::new(0.45, vec![0.0], HolderDrift::zero(1), DiffusionField::identity(1), Scheme::Davie);
    assert!(solve(&cfg, &nz).is_err());
}
