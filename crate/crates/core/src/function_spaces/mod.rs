//! Coefficient families: Hölder drifts (including distributional ones),
//! diffusion fields with derivatives, and two-parameter fields.

mod diffusion;
mod drift;
mod twoparam;

pub use diffusion::{ellipticity_margin, DiffusionField, DiffusionKind, SinEntry};
pub use drift::{DriftFamily, HolderDrift, LacunaryTerm};
pub use twoparam::TwoParamField;

use crate::error::{Error, Result};

/// Grid estimate of `‖b1 - b2‖_{C^alpha}`; both parts are lower bounds of the true values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CAlphaDistance {
    pub sup: f64,
    pub quotient: f64,
}

impl CAlphaDistance {
    pub fn total(&self) -> f64 {
        self.sup + self.quotient
    }
}

/// Cartesian grid on the box `[lo, hi]` with `per_axis` points per axis.
pub fn box_points(lo: &[f64], hi: &[f64], per_axis: usize) -> Vec<Vec<f64>> {
    let d = lo.len();
    (0..per_axis.pow(d as u32))
        .map(|mut idx| {
            (0..d)
                .map(|a| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    lo[a] + (hi[a] - lo[a]) * k as f64 / (per_axis - 1).max(1) as f64
                })
                .collect()
        })
        .collect()
}

/// Sup and Hölder quotient of `b1 - b2` over all pairs of a box grid.
pub fn c_alpha_distance(b1: &HolderDrift, b2: &HolderDrift, lo: &[f64], hi: &[f64], per_axis: usize) -> Result<CAlphaDistance> {
    if b1.alpha <= 0.0 || b2.alpha <= 0.0 || !b1.evaluable() || !b2.evaluable() {
        return Err(Error::Config("distributional drifts compare via mollified representatives".into()));
    }
    if b1.dim != b2.dim || lo.len() != b1.dim || hi.len() != b1.dim {
        return Err(Error::Config("dimension mismatch in c_alpha_distance".into()));
    }
    let alpha = b1.alpha.min(b2.alpha);
    let pts = box_points(lo, hi, per_axis);
    let diffs: Vec<Vec<f64>> = pts
        .iter()
        .map(|x| b1.eval_vec(x).iter().zip(b2.eval_vec(x)).map(|(a, b)| a - b).collect())
        .collect();
    let sup = diffs.iter().map(|v| crate::scalar::norm(v)).fold(0.0, f64::max);
    let mut quotient: f64 = 0.0;
    for i in 0..pts.len() {
        for k in i + 1..pts.len() {
            let dx = crate::scalar::dist(&pts[i], &pts[k]);
            quotient = quotient.max(crate::scalar::dist(&diffs[i], &diffs[k]) / dx.powf(alpha));
        }
    }
    Ok(CAlphaDistance { sup, quotient })
}
