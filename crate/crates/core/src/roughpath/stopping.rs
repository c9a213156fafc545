//! Stopping times `tau_K` on running noise seminorms.

use super::{Exponents, RoughPathLift};
use crate::error::{config, Result};
use crate::fbm::FbmPath;
use crate::grid::GridPath;
use crate::holder::{running_holder_seminorm, PairPolicy};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monitored {
    /// `[B]_{C^{H^-}}` against `K^{H^- - H_-}`.
    PathHolder,
    /// `[(B, 𝐁)]_{R^{H^-}}` against `K`.
    RoughPath,
    /// `[B]_{C^{H^-}}` for `H^- > 1`, i.e. the `C^{H^- - 1}` norm of `B^{H-1}`, against `K`.
    SmoothDerivative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StoppingTime {
    pub grid_index: usize,
    pub threshold_k: f64,
    /// The value the monitored seminorm is compared with.
    pub threshold: f64,
    pub monitored: Monitored,
}

/// First `v` with `running[v] >= threshold`, else the last index.
pub fn first_crossing<T: Real>(running: &[T], threshold: T) -> usize {
    running.iter().position(|&r| r >= threshold).unwrap_or(running.len() - 1)
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) {
        return config(format!("stopping threshold must be positive, got {k}"));
    }
    Ok(())
}

/// Young regime: first time `[B]_{C^{H^-}([0,t])} >= K^{H^- - H_-}`.
pub fn stopping_time_young<T: Real>(b: &GridPath<T>, k: f64, ex: &Exponents, policy: PairPolicy) -> Result<StoppingTime> {
    check_k(k)?;
    let threshold = k.powf(ex.h_mid - ex.h_low);
    let run = running_holder_seminorm(b, ex.h_mid, policy);
    Ok(StoppingTime {
        grid_index: first_crossing(&run, T::lit(threshold)),
        threshold_k: k,
        threshold,
        monitored: Monitored::PathHolder,
    })
}

/// Rough regime: first time `[(B, 𝐁)]_{R^{H^-}([0,t])} >= K`.
pub fn stopping_time_rough<T: Real>(lift: &RoughPathLift<T>, k: f64, ex: &Exponents, policy: PairPolicy) -> Result<StoppingTime> {
    check_k(k)?;
    let run = lift.running_rough_seminorm(ex.h_mid, policy);
    Ok(StoppingTime {
        grid_index: first_crossing(&run, T::lit(k)),
        threshold_k: k,
        threshold: k,
        monitored: Monitored::RoughPath,
    })
}

/// Smooth regime: first time `sup |B^{H-1}| + [B^{H-1}]_{C^{H^- - 1}}` on `[0,t]` reaches `K`.
pub fn stopping_time_smooth(fbm: &FbmPath, k: f64, ex: &Exponents, policy: PairPolicy) -> Result<StoppingTime> {
    check_k(k)?;
    if fbm.lower.is_empty() {
        return config("smooth stopping times need the integrated tower (H > 1)");
    }
    let deriv = fbm.level(1);
    let beta = ex.h_mid - ex.h_mid.floor();
    let mut run = running_holder_seminorm(deriv, beta, policy);
    let mut sup = 0.0f64;
    for (v, r) in run.iter_mut().enumerate() {
        sup = sup.max(crate::scalar::norm(deriv.at(v)));
        *r += sup;
    }
    Ok(StoppingTime {
        grid_index: first_crossing(&run, k),
        threshold_k: k,
        threshold: k,
        monitored: Monitored::SmoothDerivative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::roughpath::exponents;

    #[test]
    fn zero_path_never_stops() {
        let g = TimeGrid::unit(128).unwrap();
        let z = GridPath::<f64>::zeros(g, 2);
        let ex = exponents(0.75, 0.6).unwrap();
        for k in [1.0, 2.0, 10.0] {
            assert_eq!(stopping_time_young(&z, k, &ex, PairPolicy::Auto).unwrap().grid_index, 128);
        }
    }

    #[test]
    fn ramp_stops_within_one_step() {
        let g = TimeGrid::unit(256).unwrap();
        let ex = exponents(0.75, 0.6).unwrap();
        let k: f64 = 4.0;
        let thr = k.powf(ex.h_mid - ex.h_low);
        // Jump across step [128, 129] sized to exceed the threshold by 50%.
        let jump = 1.5 * thr * g.step().powf(ex.h_mid);
        let p = GridPath::<f64>::from_fn(g, 1, |t, v| v[0] = if t > 0.5 { jump } else { 0.0 });
        let tau = stopping_time_young(&p, k, &ex, PairPolicy::Auto).unwrap();
        assert!(tau.grid_index.abs_diff(128) <= 1, "{}", tau.grid_index);
    }
}
