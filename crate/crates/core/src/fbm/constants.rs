//! Normalising constants of the Mandelbrot-van Ness representation.

use crate::error::{config, Result};
use crate::quadrature::{adaptive_simpson, gamma, gauss_legendre, integrate_half_line};

fn check_base(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return config(format!("Hurst parameter {h} outside (0, 1)"));
    }
    Ok(())
}

/// `Var(B_1)` for `H in (0,1)`: `1/(2H) + int_0^inf ((1+s)^{H-1/2} - s^{H-1/2})^2 ds`,
/// in closed form `Gamma(H+1/2)^2 / (Gamma(2H+1) sin(pi H))`.
pub fn marginal_constant(h: f64) -> Result<f64> {
    check_base(h)?;
    let g = gamma(h + 0.5);
    Ok(g * g / (gamma(2.0 * h + 1.0) * (std::f64::consts::PI * h).sin()))
}

/// [`marginal_constant`] by direct quadrature of the defining integral.
pub fn marginal_constant_quadrature(h: f64) -> Result<f64> {
    check_base(h)?;
    let a = h - 0.5;
    let rule = gauss_legendre(30);
    if a == 0.0 {
        return Ok(1.0);
    }
    // Smooth out the endpoint behaviour of s^a on [0, 1].
    let p = if a < 0.0 { 1.0 / (2.0 * a + 1.0) } else { 1.0 / a };
    let head = adaptive_simpson(
        &|u: f64| {
            if u == 0.0 {
                return if a < 0.0 { p } else { 0.0 };
            }
            let s = u.powf(p);
            let ds = p * u.powf(p - 1.0);
            let k = (1.0 + s).powf(a) - s.powf(a);
            k * k * ds
        },
        0.0,
        1.0,
        1e-14,
    );
    let tail = integrate_half_line(
        &|x: f64| {
            let s = 1.0 + x;
            let k = (1.0 + s).powf(a) - s.powf(a);
            k * k
        },
        1.0,
        80,
        &rule,
    );
    Ok(1.0 / (2.0 * h) + head + tail)
}

/// Number of integrations in the tower above the base level.
pub fn floor_level(h: f64) -> usize {
    h.floor() as usize
}

/// Base Hurst parameter `H - floor(H)`.
pub fn base_hurst(h: f64) -> f64 {
    h - h.floor()
}

/// `Var(B_t - E^s B_t) / |t-s|^{2H}` for any non-integer `H > 0`.
pub fn conditional_constant(h: f64) -> Result<f64> {
    let m = floor_level(h);
    let h0 = base_hurst(h);
    if h <= 0.0 || h0 == 0.0 {
        return config(format!("Hurst parameter {h} must be positive and non-integer"));
    }
    let a = h0 - 0.5;
    let prod: f64 = (1..=m).map(|j| a + j as f64).product();
    Ok(1.0 / (2.0 * h * prod * prod))
}

/// Both normalising constants for one base-level Hurst parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MvnNormalization {
    pub hurst: f64,
    /// `Var(B_t - E^s B_t) = c |t-s|^{2H}`.
    pub conditional: f64,
    /// `Var(B_1)`.
    pub marginal: f64,
}

impl MvnNormalization {
    pub fn new(h: f64) -> Result<Self> {
        Ok(Self { hurst: h, conditional: conditional_constant(h)?, marginal: marginal_constant(h)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent scipy quadrature of the defining integral.
    const MARGINAL: [(f64, f64); 7] = [
        (0.3, 1.875070911167873),
        (0.35, 1.5286751719049303),
        (0.4, 1.289195193028659),
        (0.45, 1.1199790078476932),
        (0.5, 1.0),
        (0.7, 0.8388929718721057),
        (0.75, 0.8740191847638361),
    ];

    #[test]
    fn marginal_constant_matches_reference() {
        for (h, c) in MARGINAL {
            let closed = marginal_constant(h).unwrap();
            let quad = marginal_constant_quadrature(h).unwrap();
            assert!((closed - c).abs() < 1e-12, "H={h}: {closed} vs {c}");
            assert!((quad - c).abs() < 1e-7, "H={h}: quadrature {quad} vs {c}");
        }
        assert!(marginal_constant(1.2).is_err());
    }

    #[test]
    fn conditional_constant_levels() {
        assert!((conditional_constant(0.7).unwrap() - 1.0 / 1.4).abs() < 1e-15);
        // H = 1.3: (t-s)^{2H} / ((H0 + 1/2)^2 2H).
        let c = conditional_constant(1.3).unwrap();
        assert!((c - 1.0 / (0.8f64 * 0.8 * 2.6)).abs() < 1e-15);
        assert!(conditional_constant(1.0).is_err());
    }
}
