//! The conditional-mean field `(s, t) -> E^s B_t` and its Hölder seminorm.

use super::FbmPath;
use crate::error::Result;
use crate::holder::{dyadic_spacing, PairPolicy};

/// Grids with at most this many steps are scanned exhaustively under `Auto`.
pub const CONDITIONAL_EXHAUSTIVE_STEPS: usize = 1 << 6;

/// `E^s B_t` for all node pairs, `t <= s` giving `B_t`.
#[derive(Clone, Debug)]
pub struct ConditionalField {
    pub n: usize,
    pub dim: usize,
    pub step: f64,
    /// `(n + 1)^2 * dim`, index `(s * (n + 1) + t) * dim + c`.
    pub values: Vec<f64>,
}

impl ConditionalField {
    pub fn at(&self, s: usize, t: usize) -> &[f64] {
        let i = (s * (self.n + 1) + t) * self.dim;
        &self.values[i..i + self.dim]
    }

    fn dist(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        crate::scalar::dist(self.at(a.0, a.1), self.at(b.0, b.1))
    }
}

/// Builds the field in `O(n^2)` per coordinate and level.
pub fn conditional_field(b: &FbmPath) -> Result<ConditionalField> {
    let (w, kernel) = b.require_wiener()?;
    let n = b.grid().n_steps;
    let d = b.dim();
    let h = b.grid().step();
    let np = n + 1;
    let base = b.base();
    let mut values = vec![0.0; np * np * d];
    let mut acc = vec![0.0; d];
    for t in 0..=n {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for s in (0..=n).rev() {
            if s < t {
                for c in 0..d {
                    acc[c] += kernel[t - s] * w.increment(s, c);
                }
            }
            for c in 0..d {
                values[(s * np + t) * d + c] = base.get(t, c) - if s < t { acc[c] } else { 0.0 };
            }
        }
    }
    for level in (0..b.lower.len()).rev() {
        let target = b.level(level);
        let mut up = vec![0.0; values.len()];
        for s in 0..=n {
            for t in 0..=n {
                for c in 0..d {
                    let i = (s * np + t) * d + c;
                    up[i] = if t <= s {
                        target.get(t, c)
                    } else {
                        up[i - d] + 0.5 * h * (values[i - d] + values[i])
                    };
                }
            }
        }
        values = up;
    }
    Ok(ConditionalField { n, dim: d, step: h, values })
}

/// Sup over distinct field points of `|F(p) - F(q)| / (h |p - q|_1)^beta`.
pub fn conditional_seminorm(b: &FbmPath, beta: f64, policy: PairPolicy) -> Result<f64> {
    let f = conditional_field(b)?;
    Ok(field_seminorm(&f, beta, policy))
}

pub(crate) fn field_seminorm(f: &ConditionalField, beta: f64, policy: PairPolicy) -> f64 {
    let n = f.n;
    let exhaustive = match policy {
        PairPolicy::Auto => n <= CONDITIONAL_EXHAUSTIVE_STEPS,
        PairPolicy::Exhaustive => true,
        PairPolicy::Dyadic => false,
    };
    let hb = f.step.powf(beta);
    let denom = |l1: usize| hb * (l1 as f64).powf(beta);
    let mut best = 0.0f64;
    if exhaustive {
        let pts: Vec<(usize, usize)> = (0..=n).flat_map(|s| (0..=n).map(move |t| (s, t))).collect();
        for (i, &p) in pts.iter().enumerate() {
            for &q in &pts[i + 1..] {
                let l1 = p.0.abs_diff(q.0) + p.1.abs_diff(q.1);
                best = best.max(f.dist(p, q) / denom(l1));
            }
        }
        return best;
    }
    let dirs: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (1, -1)];
    let mut j = 0u32;
    while (1usize << j) <= n {
        let lag = 1usize << j;
        let sp = dyadic_spacing(j);
        for (ds, dt) in dirs {
            let l1 = lag * (ds.unsigned_abs() + dt.unsigned_abs());
            let den = denom(l1);
            for s in (0..=n).step_by(sp) {
                let s2 = s as isize + ds * lag as isize;
                if s2 < 0 || s2 > n as isize {
                    continue;
                }
                for t in (0..=n).step_by(sp) {
                    let t2 = t as isize + dt * lag as isize;
                    if t2 < 0 || t2 > n as isize {
                        continue;
                    }
                    best = best.max(f.dist((s, t), (s2 as usize, t2 as usize)) / den);
                }
            }
        }
        j += 1;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::sample_mvn;
    use crate::grid::TimeGrid;

    #[test]
    fn field_matches_pointwise_conditional_means() {
        let g = TimeGrid::unit(40).unwrap();
        for h in [0.4, 1.3] {
            let b = sample_mvn(g, 2, h, 8, -8.0).unwrap();
            let f = conditional_field(&b).unwrap();
            for (s, t) in [(0usize, 40usize), (10, 25), (25, 10), (39, 40), (7, 7)] {
                let cm = b.conditional_mean(s.min(t), t).unwrap();
                let want = if t <= s { b.path.at(t).to_vec() } else { cm };
                for c in 0..2 {
                    assert!((f.at(s, t)[c] - want[c]).abs() < 1e-12, "H={h} ({s},{t})");
                }
            }
        }
    }

    #[test]
    fn dyadic_is_close_to_exhaustive() {
        let g = TimeGrid::unit(64).unwrap();
        for seed in 0..3 {
            let b = sample_mvn(g, 1, 0.45, seed, -8.0).unwrap();
            let f = conditional_field(&b).unwrap();
            let ex = field_seminorm(&f, 0.4, PairPolicy::Exhaustive);
            let dy = field_seminorm(&f, 0.4, PairPolicy::Dyadic);
            let r = dy / ex;
            assert!((0.5..=1.0 + 1e-12).contains(&r), "ratio {r}");
        }
    }
}
