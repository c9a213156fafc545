//! Exact fractional Gaussian noise by circulant embedding, with a Cholesky fallback.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;

use super::{assemble, base_hurst, check_hurst, marginal_constant, FbmPath, Sampler};
use crate::error::{config, Result};
use crate::fft::fft_forward;
use crate::grid::{GridPath, TimeGrid};
use crate::linalg::Mat;
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactMethod {
    Circulant,
    Cholesky,
}

fn fgn_autocov(h0: f64, c: f64, step: f64, k: usize) -> f64 {
    let two_h = 2.0 * h0;
    let k = k as f64;
    let f = |x: f64| x.abs().powf(two_h);
    0.5 * c * step.powf(two_h) * (f(k + 1.0) - 2.0 * f(k) + f(k - 1.0))
}

/// Eigenvalues of the circulant embedding of `n` fGn increments.
pub fn fgn_circulant_eigenvalues(h0: f64, step: f64, n: usize) -> Result<Vec<f64>> {
    let c = marginal_constant(h0)?;
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let k = if j <= n { j } else { m - j };
            Complex::new(fgn_autocov(h0, c, step, k), 0.0)
        })
        .collect();
    fft_forward(&mut row);
    Ok(row.iter().map(|z| z.re).collect())
}

fn circulant_increments(lambda: &[f64], n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let m = 2 * n;
    let mf = m as f64;
    let mut z = vec![Complex::new(0.0, 0.0); m];
    z[0] = Complex::new((lambda[0] / mf).sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    z[n] = Complex::new((lambda[n].max(0.0) / mf).sqrt() * rng.sample::<f64, _>(StandardNormal), 0.0);
    for j in 1..n {
        let s = (lambda[j].max(0.0) / (2.0 * mf)).sqrt();
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        z[j] = Complex::new(s * a, s * b);
        z[m - j] = z[j].conj();
    }
    fft_forward(&mut z);
    z[..n].iter().map(|v| v.re).collect()
}

fn cholesky_increments(h0: f64, step: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let c = marginal_constant(h0)?;
    let mut cov = Mat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            cov.set(i, j, fgn_autocov(h0, c, step, i.abs_diff(j)));
        }
    }
    let l = cov.cholesky()?;
    let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut out = vec![0.0; n];
    l.matvec(&z, &mut out);
    Ok(out)
}

/// Exact fBm with `Var(B_1)` equal to the Mandelbrot-van Ness marginal constant.
///
/// Uses circulant embedding and falls back to a Cholesky factorisation when
/// the embedding has a negative eigenvalue. `H > 1` integrates the base level.
pub fn fbm_exact(grid: TimeGrid, hurst: f64, dim: usize, seed: u64) -> Result<FbmPath> {
    fbm_exact_with(grid, hurst, dim, seed, false)
}

pub(crate) fn fbm_exact_with(grid: TimeGrid, hurst: f64, dim: usize, seed: u64, force_cholesky: bool) -> Result<FbmPath> {
    let h0 = check_hurst(hurst)?;
    debug_assert_eq!(h0, base_hurst(hurst));
    if grid.t_start != 0.0 {
        return config("noise grids must start at 0");
    }
    let n = grid.n_steps;
    let step = grid.step();
    let lambda = fgn_circulant_eigenvalues(h0, step, n)?;
    let scale = lambda.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let embeddable = lambda.iter().all(|&l| l >= -1e-10 * scale);
    let method = if embeddable && !force_cholesky { ExactMethod::Circulant } else { ExactMethod::Cholesky };
    let mut base = GridPath::zeros(grid, dim);
    for c in 0..dim {
        let mut rng = stream(seed, Purpose::Exact, c);
        let inc = match method {
            ExactMethod::Circulant => circulant_increments(&lambda, n, &mut rng),
            ExactMethod::Cholesky => cholesky_increments(h0, step, n, &mut rng)?,
        };
        let mut acc = 0.0;
        for (k, v) in inc.into_iter().enumerate() {
            acc += v;
            base.values[(k + 1) * dim + c] = acc;
        }
    }
    Ok(assemble(hurst, base, None, None, Sampler::Exact(method)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_is_nonnegative() {
        for h in [0.1, 0.4, 0.75, 0.95] {
            let l = fgn_circulant_eigenvalues(h, 1.0 / 256.0, 256).unwrap();
            assert!(l.iter().all(|&x| x > -1e-12), "H={h}");
        }
    }

    #[test]
    fn both_methods_have_the_right_variance() {
        let g = TimeGrid::unit(16).unwrap();
        for force in [false, true] {
            let mut acc = 0.0;
            let seeds = 4000;
            for s in 0..seeds {
                let b = fbm_exact_with(g, 0.7, 1, s, force).unwrap();
                acc += b.path.get(16, 0).powi(2);
            }
            let ratio = acc / seeds as f64 / marginal_constant(0.7).unwrap();
            assert!((ratio - 1.0).abs() < 0.08, "force={force}: {ratio}");
        }
        let b = fbm_exact_with(g, 0.7, 1, 0, true).unwrap();
        assert_eq!(b.sampler, Sampler::Exact(ExactMethod::Cholesky));
        assert!(b.conditional_mean(0, 4).is_err());
    }
}
