//! FFT helpers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Linear convolution `c[k] = sum_i a[i] b[k - i]`, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut c = vec![0.0; len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                c[i + j] += x * y;
            }
        }
        return c;
    }
    let m = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    // Pack both real inputs into one complex transform.
    let mut z: Vec<Complex<f64>> = (0..m)
        .map(|k| Complex::new(a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0)))
        .collect();
    fwd.process(&mut z);
    let mut prod = vec![Complex::new(0.0, 0.0); m];
    for k in 0..m {
        let zk = z[k];
        let zc = z[(m - k) % m].conj();
        let fa = (zk + zc) * 0.5;
        let fb = (zk - zc) * Complex::new(0.0, -0.5);
        prod[k] = fa * fb;
    }
    inv.process(&mut prod);
    let scale = 1.0 / m as f64;
    prod[..len].iter().map(|v| v.re * scale).collect()
}

/// Forward complex FFT in place.
pub fn fft_forward(z: &mut [Complex<f64>]) {
    FftPlanner::<f64>::new().plan_fft_forward(z.len()).process(z);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..100).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let b: Vec<f64> = (0..77).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let fast = convolve(&a, &b);
        let mut slow = vec![0.0; a.len() + b.len() - 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                slow[i + j] += a[i] * b[j];
            }
        }
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
