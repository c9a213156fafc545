//! Dyadic sewing of a two-parameter germ.

use rayon::prelude::*;

use crate::heatkernel::loglog_slope;

/// Level sums of a germ and their dyadic defects.
#[derive(Clone, Debug, PartialEq)]
pub struct SewingReport {
    /// Sum over the finest partition.
    pub value: Vec<f64>,
    /// `S_l = Σ_i A(t^l_i, t^l_{i+1})` for `l = 0..=levels`.
    pub level_sums: Vec<Vec<f64>>,
    /// `|S_l - S_{l+1}|`.
    pub aggregate_defects: Vec<f64>,
    /// `max_i |δA_{t_i, m_i, t_{i+1}}|` at level `l`.
    pub local_defects: Vec<f64>,
    /// Slope of `log local_defects` against `log 2^{-l}`.
    pub local_exponent: f64,
    /// Slope of `log aggregate_defects` against `log 2^{-l}`.
    pub aggregate_exponent: f64,
}

/// Sews `germ(s, t, out)` on the dyadic partitions of `0..=2^levels` (index units).
/// `first_level` excludes coarse levels from the fitted exponents.
pub fn dyadic_sewing(germ: &(dyn Fn(usize, usize, &mut [f64]) + Sync), dim: usize, levels: u32, first_level: u32) -> SewingReport {
    let top = 1usize << levels;
    let mut level_sums = Vec::with_capacity(levels as usize + 1);
    let mut local_defects = Vec::with_capacity(levels as usize);
    let eval = |l: u32| -> Vec<f64> {
        let w = top >> l;
        let mut vals = vec![0.0; (1usize << l) * dim];
        vals.par_chunks_mut(dim).enumerate().for_each(|(i, a)| germ(i * w, (i + 1) * w, a));
        vals
    };
    let mut cur = eval(0);
    for l in 0..=levels {
        let mut sum = vec![0.0; dim];
        for a in cur.chunks(dim) {
            sum.iter_mut().zip(a).for_each(|(x, y)| *x += y);
        }
        level_sums.push(sum);
        if l < levels {
            let next = eval(l + 1);
            let local = cur
                .chunks(dim)
                .zip(next.chunks(2 * dim))
                .map(|(a, bc)| (0..dim).map(|k| (a[k] - bc[k] - bc[dim + k]).powi(2)).sum::<f64>().sqrt())
                .fold(0.0f64, f64::max);
            local_defects.push(local);
            cur = next;
        }
    }
    let aggregate_defects: Vec<f64> = level_sums
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let steps: Vec<f64> = (first_level..levels).map(|l| 0.5f64.powi(l as i32)).collect();
    let from = first_level as usize;
    let local_exponent = loglog_slope(&steps, &local_defects[from.min(local_defects.len())..]);
    let aggregate_exponent = loglog_slope(&steps, &aggregate_defects[from.min(aggregate_defects.len())..]);
    SewingReport { value: level_sums.last().cloned().unwrap_or_default(), level_sums, aggregate_defects, local_defects, local_exponent, aggregate_exponent }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridPath, TimeGrid};

    #[test]
    fn additive_germ_is_exact() {
        let rep = dyadic_sewing(&|s, t, o| o[0] = 0.75 * (t - s) as f64 / 1024.0, 1, 10, 0);
        for s in &rep.level_sums {
            assert_eq!(s[0], 0.75);
        }
    }

    #[test]
    fn young_germ_reproduces_riemann_sum() {
        let grid = TimeGrid::unit(1024).unwrap();
        let g = GridPath::from_fn(grid, 1, |t, v| v[0] = (11.0 * t).sin() * t.powf(0.7));
        let f = GridPath::from_fn(grid, 1, |t, v| v[0] = (3.0 * t).cos());
        let rep = dyadic_sewing(&|s, t, o| o[0] = f.get(s, 0) * (g.get(t, 0) - g.get(s, 0)), 1, 10, 0);
        let h = crate::integrate::young_integral(&f, &g).unwrap();
        assert!((rep.value[0] - h.get(1024, 0)).abs() < 1e-12);
    }
}
