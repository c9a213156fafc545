//! Auxiliary exponents `H_- < H^- < H (< H^+)` chosen by a fixed rule.

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `H > 1`, non-integer.
    Smooth,
    /// `1/2 < H < 1`.
    Young,
    /// `1/3 < H <= 1/2` with a function-valued drift.
    Rough,
    /// `1/3 < H <= 1/2` with a distributional drift (`alpha <= 0`).
    WeakRough,
}

impl Regime {
    pub fn of(hurst: f64, alpha: f64) -> Result<Self> {
        if hurst > 1.0 && hurst.fract() != 0.0 {
            Ok(Regime::Smooth)
        } else if hurst > 0.5 && hurst < 1.0 {
            Ok(Regime::Young)
        } else if hurst > 1.0 / 3.0 && hurst <= 0.5 {
            Ok(if alpha > 0.0 { Regime::Rough } else { Regime::WeakRough })
        } else {
            config(format!("no regime for H = {hurst}"))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Smooth => "smooth",
            Regime::Young => "young",
            Regime::Rough => "rough",
            Regime::WeakRough => "weak",
        }
    }

    /// The drift regularity condition for well-posedness.
    pub fn alpha_admissible(self, hurst: f64, alpha: f64) -> bool {
        match self {
            Regime::Smooth | Regime::Young | Regime::Rough => alpha > (1.0 - 1.0 / (2.0 * hurst)).max(0.0),
            Regime::WeakRough => alpha > 0.5 - 1.0 / (2.0 * hurst),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponents {
    pub regime: Regime,
    pub hurst: f64,
    /// Drift exponent as given.
    pub alpha: f64,
    /// Exponent used in the inequalities (lowered in the weak regime if needed).
    pub alpha_eff: f64,
    pub delta: f64,
    /// `H_-`.
    pub h_low: f64,
    /// `H^-`.
    pub h_mid: f64,
    /// `H^+` (weak regime; equals `H` elsewhere).
    pub h_plus: f64,
}

fn young_ok(h: f64, a: f64, lo: f64, mid: f64) -> bool {
    0.5 < lo && lo < mid && mid < h && lo + mid > 1.0 + a * h && 1.0 + a * lo + (a - 2.0) * h > 0.0 && lo - h + a * h > 0.0
}

fn rough_ok(h: f64, a: f64, lo: f64, mid: f64) -> bool {
    1.0 / 3.0 < lo
        && lo < mid
        && mid < h
        && 2.0 * lo + mid > 1.0
        && 2.0 * lo - 2.0 * h + a * h > 0.0
        && 3.0 * lo - h + a * h > 0.5
}

fn weak_ok(h: f64, a: f64, lo: f64, mid: f64, plus: f64) -> bool {
    1.0 / 3.0 < lo
        && lo < mid
        && mid < h
        && h < plus
        && 2.0 * lo > 1.0 + a * plus
        && a * plus + 2.0 * lo - mid > 0.0
        && 1.0 + a * h + a * plus - h > 0.0
}

fn smooth_ok(h: f64, a: f64, mid: f64) -> bool {
    mid > h.floor() && mid < h && 1.0 + a * mid + (a - 2.0) * h > 0.0 && 1.0 + a * mid > mid
}

/// Exponents for `(H, alpha)`: the largest `delta` in `{0.01 k}` meeting the regime's inequalities.
///
/// Young/rough: `H^- = H - delta`, `H_- = H - 2 delta`. Smooth:
/// `H^- = floor(H) + (H - floor(H))(1 - delta)`. Weak: additionally
/// `H^+ = H + delta`, with `alpha` lowered on a 0.05 grid until admissible.
pub fn exponents(hurst: f64, alpha: f64) -> Result<Exponents> {
    let regime = Regime::of(hurst, alpha)?;
    let h = hurst;
    let mk = |alpha_eff: f64, delta: f64, lo: f64, mid: f64, plus: f64| Exponents {
        regime,
        hurst,
        alpha,
        alpha_eff,
        delta,
        h_low: lo,
        h_mid: mid,
        h_plus: plus,
    };
    let deltas = || (1..100).rev().map(|k| k as f64 * 0.01);
    match regime {
        Regime::Young | Regime::Rough => {
            for d in deltas() {
                let (lo, mid) = (h - 2.0 * d, h - d);
                let ok = if regime == Regime::Young { young_ok(h, alpha, lo, mid) } else { rough_ok(h, alpha, lo, mid) };
                if ok {
                    return Ok(mk(alpha, d, lo, mid, h));
                }
            }
        }
        Regime::Smooth => {
            let (m, h0) = (h.floor(), h.fract());
            for d in deltas() {
                let mid = m + h0 * (1.0 - d);
                if smooth_ok(h, alpha, mid) {
                    return Ok(mk(alpha, d, mid, mid, h));
                }
            }
        }
        Regime::WeakRough => {
            let floor = 0.5 - 1.0 / (2.0 * h);
            let cap = alpha.min(2.0 - 1.0 / h - 1e-12);
            let mut a = (cap * 20.0).floor() / 20.0;
            while a > floor {
                for d in deltas() {
                    let (lo, mid, plus) = (h - 2.0 * d, h - d, h + d);
                    if weak_ok(h, a, lo, mid, plus) {
                        return Ok(mk(a, d, lo, mid, plus));
                    }
                }
                a -= 0.05;
            }
        }
    }
    config(format!("no admissible exponents for H = {hurst}, alpha = {alpha} in the {} regime", regime.name()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn default_configurations() {
        let y = exponents(0.75, 0.6).unwrap();
        assert_eq!(y.regime, Regime::Young);
        assert!(close(y.h_mid, 0.74) && close(y.h_low, 0.73));
        let r = exponents(0.45, 0.25).unwrap();
        assert!(close(r.h_mid, 0.43) && close(r.h_low, 0.41));
        let w = exponents(0.45, -0.15).unwrap();
        assert_eq!(w.regime, Regime::WeakRough);
        assert!(close(w.alpha_eff, -0.35) && close(w.h_low, 0.43) && close(w.h_plus, 0.46));
        let s = exponents(1.3, 0.7).unwrap();
        assert_eq!(s.regime, Regime::Smooth);
        assert!(s.h_mid > 1.0 && s.h_mid < 1.3);
    }

    #[test]
    fn smooth_default_alpha_has_no_exponents() {
        assert!(exponents(1.3, 0.6).is_err());
        assert!(!Regime::Smooth.alpha_admissible(1.3, 0.6));
        assert!(Regime::Smooth.alpha_admissible(1.3, 0.7));
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::of(0.5, 0.3).unwrap(), Regime::Rough);
        assert!(Regime::of(1.0, 0.3).is_err());
        assert!(Regime::of(0.3, 0.3).is_err());
    }
}
