//! Two-sided Wiener increments used by the Mandelbrot-van Ness sampler.

use std::sync::Arc;

use crate::error::{config, Result};
use crate::grid::{GridPath, TimeGrid};
use crate::rng::{normals, stream, Purpose};

/// Geometric cells per octave in the far tail.
pub const FAR_CELLS_PER_OCTAVE: usize = 16;
/// Octaves covered by the far tail beyond `|tail_start|`.
pub const FAR_OCTAVES: usize = 64;

/// Increments of a `dim`-dimensional Brownian motion on `[tail_start, t_end]`.
///
/// Window cell `k` is `[t_k, t_{k+1}]`; tail cell `m >= 1` is `[-m h, -(m-1) h]`.
/// Window and tail draws come from separate streams, so extending the tail
/// leaves the window untouched.
#[derive(Clone, Debug)]
pub struct WienerPath {
    pub grid: TimeGrid,
    pub dim: usize,
    pub tail_start: f64,
    pub seed: u64,
    /// `n_steps * dim`, node-major.
    pub increments: Vec<f64>,
    /// `tail_cells * dim`, ordered away from 0.
    pub tail: Vec<f64>,
    /// Far-tail draws `xi sqrt(width)`, `far_edges.len() - 1` cells per coordinate, node-major.
    pub far: Vec<f64>,
    /// Cell boundaries in `r = -u`, starting at `|tail_start|`.
    pub far_edges: Vec<f64>,
}

impl WienerPath {
    /// Draws the increments for `seed`.
    pub fn sample(grid: TimeGrid, dim: usize, tail_start: f64, seed: u64, far_tail: bool) -> Result<Arc<Self>> {
        if grid.t_start != 0.0 {
            return config("noise grids must start at 0");
        }
        if dim == 0 {
            return config("noise dimension must be positive");
        }
        if !(tail_start <= 0.0) || !tail_start.is_finite() {
            return config(format!("tail_start must be finite and nonpositive, got {tail_start}"));
        }
        let h = grid.step();
        let n = grid.n_steps;
        let cells = (-tail_start / h).round() as usize;
        let sq = h.sqrt();
        let far_edges: Vec<f64> = if far_tail && cells > 0 {
            let r0 = cells as f64 * h;
            if r0 < 2.0 * grid.t_end {
                return config(format!(
                    "far tail needs |tail_start| >= 2 t_end, got tail_start = {tail_start}"
                ));
            }
            (0..=FAR_OCTAVES * FAR_CELLS_PER_OCTAVE)
                .map(|i| r0 * 2f64.powf(i as f64 / FAR_CELLS_PER_OCTAVE as f64))
                .collect()
        } else {
            Vec::new()
        };
        let far_cells = far_edges.len().saturating_sub(1);
        let mut increments = vec![0.0; n * dim];
        let mut tail = vec![0.0; cells * dim];
        let mut far = vec![0.0; far_cells * dim];
        for c in 0..dim {
            let w = normals(&mut stream(seed, Purpose::Window, c), n);
            for (k, z) in w.into_iter().enumerate() {
                increments[k * dim + c] = z * sq;
            }
            let t = normals(&mut stream(seed, Purpose::NearTail, c), cells);
            for (m, z) in t.into_iter().enumerate() {
                tail[m * dim + c] = z * sq;
            }
            let f = normals(&mut stream(seed, Purpose::FarTail, c), far_cells);
            for (i, z) in f.into_iter().enumerate() {
                far[i * dim + c] = z * (far_edges[i + 1] - far_edges[i]).sqrt();
            }
        }
        Ok(Arc::new(Self { grid, dim, tail_start, seed, increments, tail, far, far_edges }))
    }

    pub fn tail_cells(&self) -> usize {
        self.tail.len() / self.dim
    }

    pub fn far_cells(&self) -> usize {
        self.far.len() / self.dim
    }

    pub fn increment(&self, k: usize, c: usize) -> f64 {
        self.increments[k * self.dim + c]
    }

    /// The Brownian path `W` on the window grid, `W_0 = 0`.
    pub fn path(&self) -> GridPath<f64> {
        let mut p = GridPath::zeros(self.grid, self.dim);
        for k in 0..self.grid.n_steps {
            for c in 0..self.dim {
                let v = p.get(k, c) + self.increment(k, c);
                p.values[(k + 1) * self.dim + c] = v;
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extending_the_tail_keeps_the_window() {
        let g = TimeGrid::unit(64).unwrap();
        let a = WienerPath::sample(g, 2, -8.0, 5, true).unwrap();
        let b = WienerPath::sample(g, 2, -16.0, 5, true).unwrap();
        assert_eq!(a.increments, b.increments);
        assert_eq!(a.tail[..], b.tail[..a.tail.len()]);
        assert_eq!(a.tail_cells(), 512);
        assert_eq!(a.far_cells(), FAR_OCTAVES * FAR_CELLS_PER_OCTAVE);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = TimeGrid::unit(8).unwrap();
        assert!(WienerPath::sample(g, 1, 0.5, 1, true).is_err());
        assert!(WienerPath::sample(TimeGrid::new(0.5, 1.0, 8).unwrap(), 1, -8.0, 1, true).is_err());
        assert!(WienerPath::sample(g, 1, -1.0, 1, true).is_err());
        assert!(WienerPath::sample(g, 1, -1.0, 1, false).is_ok());
    }
}
