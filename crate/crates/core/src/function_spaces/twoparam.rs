//! Two-parameter fields `F(s,t)` on grid pairs and their `C^beta_2` seminorm.

use crate::error::{config, Result};
use crate::grid::TimeGrid;
use crate::holder::{sup_over_pairs, PairPolicy};

#[derive(Clone, Debug, PartialEq)]
pub struct TwoParamField {
    pub grid: TimeGrid,
    pub dim: usize,
    /// `values[(s (n+1) + t) dim + i]` for `s <= t`; entries with `s > t` are zero.
    pub values: Vec<f64>,
}

impl TwoParamField {
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(usize, usize, &mut [f64])) -> Self {
        let n = grid.n_steps + 1;
        let mut values = vec![0.0; n * n * dim];
        for s in 0..n {
            for t in s..n {
                let o = (s * n + t) * dim;
                f(s, t, &mut values[o..o + dim]);
            }
        }
        Self { grid, dim, values }
    }

    pub fn at(&self, s: usize, t: usize) -> &[f64] {
        let n = self.grid.n_steps + 1;
        let o = (s * n + t) * self.dim;
        &self.values[o..o + self.dim]
    }

    /// `sup |F(s,t)| / |t-s|^beta` over grid pairs of the window `k0..=k1`.
    pub fn seminorm_window(&self, beta: f64, k0: usize, k1: usize, policy: PairPolicy) -> Result<f64> {
        if k0 > k1 || k1 > self.grid.n_steps {
            return config(format!("window {k0}..={k1} outside the grid"));
        }
        Ok(sup_over_pairs(k0, k1, self.grid.step(), beta, policy, |u, v| crate::scalar::norm(self.at(u, v))).value)
    }

    pub fn seminorm(&self, beta: f64, policy: PairPolicy) -> f64 {
        self.seminorm_window(beta, 0, self.grid.n_steps, policy).expect("full window")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_field_and_monotonicity() {
        let g = TimeGrid::unit(64).unwrap();
        let f = TwoParamField::from_fn(g, 1, |s, t, o| o[0] = 3.0 * ((t - s) as f64 / 64.0).powf(0.7));
        assert!((f.seminorm(0.7, PairPolicy::Exhaustive) - 3.0).abs() < 1e-12);
        let small = f.seminorm_window(0.5, 10, 20, PairPolicy::Exhaustive).unwrap();
        let big = f.seminorm_window(0.5, 5, 40, PairPolicy::Exhaustive).unwrap();
        assert!(big >= small);
        assert!(f.seminorm_window(0.5, 5, 70, PairPolicy::Auto).is_err());
    }
}
