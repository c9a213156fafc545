//! Young and rough integrals by (compensated) left-point Riemann sums,
//! remainder-estimate sweeps and a dyadic sewing driver.

mod remainder;
mod sewing;

pub use remainder::{rough_continuity_check, rough_remainder_check, young_continuity_check, young_remainder_check};
pub use sewing::{dyadic_sewing, SewingReport};

use crate::controlled::ControlledPath;
use crate::error::{config, Result};
use crate::grid::GridPath;
use crate::roughpath::RoughPathLift;
use crate::scalar::Real;

/// Output dimension when `f` is an `m x n` matrix integrand against an `n`-dimensional `g`.
fn integrand_rows<T: Real>(f: &GridPath<T>, g: &GridPath<T>) -> Result<usize> {
    if f.grid != g.grid {
        return config("integrand and integrator live on different grids");
    }
    if g.dim == 0 || f.dim % g.dim != 0 {
        return config(format!("integrand dimension {} is not a multiple of {}", f.dim, g.dim));
    }
    Ok(f.dim / g.dim)
}

/// `h_t = ∫_0^t f dg` by left-point sums; `f` is row-major `m x n` per node.
pub fn young_integral<T: Real>(f: &GridPath<T>, g: &GridPath<T>) -> Result<GridPath<T>> {
    let m = integrand_rows(f, g)?;
    let n = g.dim;
    let mut h = GridPath::zeros(g.grid, m);
    let mut acc = vec![T::zero(); m];
    for k in 0..g.grid.n_steps {
        let fk = f.at(k);
        for (i, a) in acc.iter_mut().enumerate() {
            for j in 0..n {
                *a += fk[i * n + j] * (g.get(k + 1, j) - g.get(k, j));
            }
        }
        h.at_mut(k + 1).copy_from_slice(&acc);
    }
    Ok(h)
}

/// `(h, f)` with `h_t = ∫_0^t (f, f') d(g, 𝐠)` by compensated left-point sums.
///
/// `cp.f` is row-major `m x d0`, `cp.f_prime` is `(m d0) x d0` with entry
/// `((i d0 + j) d0 + l)` multiplying `𝐠^{l j}`.
pub fn rough_integral<T: Real>(cp: &ControlledPath<T>, lift: &RoughPathLift<T>) -> Result<ControlledPath<T>> {
    if cp.driver.grid != lift.grid() || cp.driver.values != lift.path.values {
        return config("controlled path is not driven by the lift's path");
    }
    let g = &lift.path;
    let m = integrand_rows(&cp.f, g)?;
    let d0 = g.dim;
    let mut h = GridPath::zeros(g.grid, m);
    let mut acc = vec![T::zero(); m];
    for k in 0..g.grid.n_steps {
        let fk = cp.f.at(k);
        let fp = cp.f_prime.at(k);
        let area = lift.step_area(k);
        for (i, a) in acc.iter_mut().enumerate() {
            for j in 0..d0 {
                *a += fk[i * d0 + j] * (g.get(k + 1, j) - g.get(k, j));
            }
            for j in 0..d0 {
                for l in 0..d0 {
                    *a += fp[(i * d0 + j) * d0 + l] * area[l * d0 + j];
                }
            }
        }
        h.at_mut(k + 1).copy_from_slice(&acc);
    }
    let gamma = 2.0 * cp.alpha;
    ControlledPath::new(h, cp.f.clone(), cp.driver.clone(), cp.alpha, gamma)
}
