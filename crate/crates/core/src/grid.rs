//! Uniform time grids and vector-valued paths sampled on them.

use crate::error::{config, Result};
use crate::scalar::Real;

/// Uniform grid `t_start = t_0 < ... < t_n = t_end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return config("n_steps must be positive");
        }
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return config(format!("invalid time interval [{t_start}, {t_end}]"));
        }
        Ok(Self { t_start, t_end, n_steps })
    }

    /// Grid on `[0, 1]`.
    pub fn unit(n_steps: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_steps)
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.n_steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Index of the node closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = ((t - self.t_start) / self.step()).round();
        k.clamp(0.0, self.n_steps as f64) as usize
    }

    /// Index of `t` if it is a node up to a relative tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = self.nearest_index(t);
        ((self.time(k) - t).abs() <= 1e-9 * self.step()).then_some(k)
    }

    /// Grid with `factor` times as many steps.
    pub fn refine(&self, factor: usize) -> Self {
        Self { n_steps: self.n_steps * factor, ..*self }
    }

    /// Ratio `fine.n_steps / self.n_steps` when `fine` refines this grid.
    pub fn refinement_factor(&self, fine: &TimeGrid) -> Result<usize> {
        let same_interval = (self.t_start - fine.t_start).abs() < 1e-12
            && (self.t_end - fine.t_end).abs() < 1e-12;
        if !same_interval || fine.n_steps % self.n_steps != 0 {
            return config(format!(
                "grid with {} steps on [{}, {}] is not refined by {} steps on [{}, {}]",
                self.n_steps, self.t_start, self.t_end, fine.n_steps, fine.t_start, fine.t_end
            ));
        }
        Ok(fine.n_steps / self.n_steps)
    }
}

/// Vector-valued path on a [`TimeGrid`], stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath<T> {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<T>,
}

impl<T: Real> GridPath<T> {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return config("path dimension must be positive");
        }
        if values.len() != dim * grid.len() {
            return config(format!(
                "path has {} values, expected {} x {}",
                values.len(),
                grid.len(),
                dim
            ));
        }
        Ok(Self { grid, dim, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self { grid, dim, values: vec![T::zero(); dim * grid.len()] }
    }

    /// Path from a closure `t -> value`.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64, &mut [T])) -> Self {
        let mut p = Self::zeros(grid, dim);
        for k in 0..grid.len() {
            let t = grid.time(k);
            f(t, p.at_mut(k));
        }
        p
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, k: usize) -> &[T] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [T] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Coordinate `i` of node `k`.
    pub fn get(&self, k: usize, i: usize) -> T {
        self.values[k * self.dim + i]
    }

    /// Writes `x_t - x_s` (node indices) into `out`.
    pub fn increment(&self, s: usize, t: usize, out: &mut [T]) {
        let (a, b) = (self.at(s), self.at(t));
        for i in 0..self.dim {
            out[i] = b[i] - a[i];
        }
    }

    pub fn increment_norm(&self, s: usize, t: usize) -> T {
        crate::scalar::dist(self.at(s), self.at(t))
    }

    pub fn component(&self, i: usize) -> Vec<T> {
        (0..self.len()).map(|k| self.get(k, i)).collect()
    }

    pub fn sup_norm(&self) -> T {
        (0..self.len())
            .map(|k| crate::scalar::norm(self.at(k)))
            .fold(T::zero(), T::max)
    }

    /// Sup of `|x_t - y_t|` over the common grid.
    pub fn sup_distance(&self, other: &Self) -> T {
        assert_eq!(self.values.len(), other.values.len());
        (0..self.len())
            .map(|k| crate::scalar::dist(self.at(k), other.at(k)))
            .fold(T::zero(), T::max)
    }

    /// Every `factor`-th node.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.grid.n_steps % factor != 0 {
            return config(format!("cannot subsample {} steps by {factor}", self.grid.n_steps));
        }
        let grid = TimeGrid { n_steps: self.grid.n_steps / factor, ..self.grid };
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        for k in 0..grid.len() {
            values.extend_from_slice(self.at(k * factor));
        }
        Ok(Self { grid, dim: self.dim, values })
    }

    /// Nodes `k0..=k1` as a path on the corresponding sub-grid.
    pub fn window(&self, k0: usize, k1: usize) -> Result<Self> {
        if k0 >= k1 || k1 > self.grid.n_steps {
            return config(format!("invalid window {k0}..{k1}"));
        }
        let grid = TimeGrid::new(self.grid.time(k0), self.grid.time(k1), k1 - k0)?;
        let values = self.values[k0 * self.dim..(k1 + 1) * self.dim].to_vec();
        Ok(Self { grid, dim: self.dim, values })
    }

    /// The path frozen after node `k`.
    pub fn stopped_at(&self, k: usize) -> Self {
        let mut p = self.clone();
        let k = k.min(self.grid.n_steps);
        let frozen = self.at(k).to_vec();
        for j in k + 1..self.len() {
            p.at_mut(j).copy_from_slice(&frozen);
        }
        p
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> GridPath<U> {
        GridPath { grid: self.grid, dim: self.dim, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Linear interpolation at time `t`.
    pub fn interpolate(&self, t: f64, out: &mut [T]) {
        let h = self.grid.step();
        let x = ((t - self.grid.t_start) / h).clamp(0.0, self.grid.n_steps as f64);
        let k = (x.floor() as usize).min(self.grid.n_steps.saturating_sub(1));
        let w = T::lit(x - k as f64);
        let (a, b) = (self.at(k), self.at(k + 1));
        for i in 0..self.dim {
            out[i] = a[i] + w * (b[i] - a[i]);
        }
    }
}
