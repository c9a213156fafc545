//! Controlled paths `(f, f')` against a driver `g`, composition with smooth
//! maps, and grid checks of the controlled-path inequalities.

mod inequalities;
mod maps;

pub use inequalities::{
    composition_bound_check, composition_stability_sweep, verify_controlled_inequalities, InequalityReport, InequalityRow,
};
pub use maps::{IdentityMap, LinearMap, SmoothMap};

use std::sync::Arc;

use crate::error::{config, Result};
use crate::grid::GridPath;
use crate::holder::{sup_over_pairs, PairPolicy};
use crate::scalar::Real;

/// `f` with Gubinelli derivative `f'` (row-major `n x d0` per node) against `driver`.
#[derive(Clone, Debug)]
pub struct ControlledPath<T> {
    pub f: GridPath<T>,
    pub f_prime: GridPath<T>,
    pub driver: Arc<GridPath<T>>,
    /// Nominal Hölder exponent of the driver.
    pub alpha: f64,
    pub gamma: f64,
}

/// The two parts of `[(f, f')]_{D^gamma_g}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlledSeminorm<T> {
    pub remainder: T,
    pub derivative: T,
}

impl<T: Real> ControlledSeminorm<T> {
    pub fn total(&self) -> T {
        self.remainder + self.derivative
    }
}

impl<T: Real> ControlledPath<T> {
    pub fn new(f: GridPath<T>, f_prime: GridPath<T>, driver: Arc<GridPath<T>>, alpha: f64, gamma: f64) -> Result<Self> {
        if f.grid != driver.grid || f_prime.grid != driver.grid {
            return config("controlled path and driver live on different grids");
        }
        if f_prime.dim != f.dim * driver.dim {
            return config(format!(
                "Gubinelli derivative has dimension {}, expected {} x {}",
                f_prime.dim, f.dim, driver.dim
            ));
        }
        if !(gamma > alpha && gamma <= 2.0 * alpha + 1e-12) {
            return config(format!("gamma = {gamma} must lie in (alpha, 2 alpha] with alpha = {alpha}"));
        }
        Ok(Self { f, f_prime, driver, alpha, gamma })
    }

    /// `(g, I)`.
    pub fn from_driver(driver: Arc<GridPath<T>>, alpha: f64, gamma: f64) -> Result<Self> {
        let d0 = driver.dim;
        let fp = GridPath::from_fn(driver.grid, d0 * d0, |_, v| {
            for i in 0..d0 {
                v[i * d0 + i] = T::one();
            }
        });
        Self::new((*driver).clone(), fp, driver, alpha, gamma)
    }

    /// `(f, 0)`.
    pub fn with_zero_derivative(f: GridPath<T>, driver: Arc<GridPath<T>>, alpha: f64, gamma: f64) -> Result<Self> {
        let fp = GridPath::zeros(f.grid, f.dim * driver.dim);
        Self::new(f, fp, driver, alpha, gamma)
    }

    pub fn dim(&self) -> usize {
        self.f.dim
    }

    pub fn noise_dim(&self) -> usize {
        self.driver.dim
    }

    /// `|f_v - f_u - f'_u (g_v - g_u)|`.
    pub fn remainder_norm(&self, u: usize, v: usize) -> T {
        let (n, d0) = (self.dim(), self.noise_dim());
        let fp = self.f_prime.at(u);
        let mut s = T::zero();
        for i in 0..n {
            let mut r = self.f.get(v, i) - self.f.get(u, i);
            for j in 0..d0 {
                r -= fp[i * d0 + j] * (self.driver.get(v, j) - self.driver.get(u, j));
            }
            s += r * r;
        }
        s.sqrt()
    }

    /// Sup of the Gubinelli derivative in operator norm.
    pub fn derivative_sup(&self, k0: usize, k1: usize) -> T {
        let (n, d0) = (self.dim(), self.noise_dim());
        (k0..=k1).map(|k| op_norm_rect(self.f_prime.at(k), n, d0)).fold(T::zero(), |a, b| a.max(b))
    }

    pub fn same_noise(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.driver, &other.driver)
    }
}

/// Operator norm of an `n x m` row-major matrix.
pub fn op_norm_rect<T: Real>(a: &[T], n: usize, m: usize) -> T {
    if n == 1 || m == 1 {
        return crate::scalar::norm(a);
    }
    let mut g = crate::linalg::Mat::zeros(m);
    for p in 0..m {
        for q in 0..m {
            g.set(p, q, (0..n).map(|i| a[i * m + p].to_f64_lossy() * a[i * m + q].to_f64_lossy()).sum());
        }
    }
    T::lit(g.sym_eigenvalues().into_iter().fold(0.0, f64::max).max(0.0).sqrt())
}

/// `[(f, f')]_{D^gamma_g}` on nodes `k0..=k1`, same pair family as the Hölder estimators.
pub fn controlled_seminorm_window<T: Real>(
    cp: &ControlledPath<T>,
    gamma: f64,
    k0: usize,
    k1: usize,
    policy: PairPolicy,
) -> ControlledSeminorm<T> {
    let h = cp.f.grid.step();
    let remainder = sup_over_pairs(k0, k1, h, gamma, policy, |u, v| cp.remainder_norm(u, v)).value;
    let derivative = sup_over_pairs(k0, k1, h, gamma - cp.alpha, policy, |u, v| {
        crate::scalar::dist(cp.f_prime.at(u), cp.f_prime.at(v))
    })
    .value;
    ControlledSeminorm { remainder, derivative }
}

pub fn controlled_seminorm<T: Real>(cp: &ControlledPath<T>, gamma: f64, policy: PairPolicy) -> ControlledSeminorm<T> {
    controlled_seminorm_window(cp, gamma, 0, cp.f.grid.n_steps, policy)
}

/// `(F(f), ∇F(f) f')` on the same grid and driver.
pub fn compose<T: Real>(map: &dyn SmoothMap<T>, cp: &ControlledPath<T>) -> Result<ControlledPath<T>> {
    let (n, d0) = (cp.dim(), cp.noise_dim());
    if map.in_dim() != n {
        return config(format!("map expects dimension {}, controlled path has {n}", map.in_dim()));
    }
    let m = map.out_dim();
    let grid = cp.f.grid;
    let mut f = GridPath::zeros(grid, m);
    let mut fp = GridPath::zeros(grid, m * d0);
    let mut jac = vec![T::zero(); m * n];
    for k in 0..grid.len() {
        let x = cp.f.at(k);
        map.eval(x, f.at_mut(k));
        map.jacobian(x, &mut jac);
        let src = cp.f_prime.at(k);
        let dst = fp.at_mut(k);
        for i in 0..m {
            for j in 0..d0 {
                let mut s = T::zero();
                for a in 0..n {
                    s += jac[i * n + a] * src[a * d0 + j];
                }
                dst[i * d0 + j] = s;
            }
        }
    }
    ControlledPath::new(f, fp, cp.driver.clone(), cp.alpha, cp.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;

    fn driver() -> Arc<GridPath<f64>> {
        let g = TimeGrid::unit(128).unwrap();
        Arc::new(GridPath::from_fn(g, 2, |t, v| {
            v[0] = (7.0 * t).sin() + t.sqrt();
            v[1] = (3.0 * t).cos() * t;
        }))
    }

    #[test]
    fn trivial_seminorms() {
        let g = driver();
        let cp = ControlledPath::from_driver(g.clone(), 0.4, 0.8).unwrap();
        assert_eq!(controlled_seminorm(&cp, 0.8, PairPolicy::Exhaustive).total(), 0.0);
        let c = GridPath::from_fn(g.grid, 3, |_, v| v.copy_from_slice(&[1.0, 2.0, 3.0]));
        let cp = ControlledPath::with_zero_derivative(c, g.clone(), 0.4, 0.8).unwrap();
        assert_eq!(controlled_seminorm(&cp, 0.8, PairPolicy::Auto).total(), 0.0);
    }

    #[test]
    fn zero_derivative_embedding_is_holder() {
        let g = driver();
        let f = GridPath::from_fn(g.grid, 1, |t, v| v[0] = t.powf(0.7) * (5.0 * t).cos());
        let hold = crate::holder::holder_seminorm(&f, 0.7, PairPolicy::Exhaustive).value;
        let cp = ControlledPath::with_zero_derivative(f, g, 0.4, 0.7).unwrap();
        let s = controlled_seminorm(&cp, 0.7, PairPolicy::Exhaustive);
        assert_eq!(s.remainder, hold);
        assert_eq!(s.derivative, 0.0);
    }

    #[test]
    fn compose_identity_and_linear() {
        let g = driver();
        let cp = ControlledPath::from_driver(g, 0.4, 0.8).unwrap();
        let same = compose(&IdentityMap { dim: 2 }, &cp).unwrap();
        assert_eq!(same.f.values, cp.f.values);
        assert_eq!(same.f_prime.values, cp.f_prime.values);
        let a = LinearMap::new(2, 2, vec![2.0, 1.0, 0.5, 3.0]);
        let ainv = a.inverse().unwrap();
        let back = compose(&ainv, &compose(&a, &cp).unwrap()).unwrap();
        assert!(back.f.sup_distance(&cp.f) < 1e-12);
        assert!(back.f_prime.sup_distance(&cp.f_prime) < 1e-12);
    }

    #[test]
    fn rejects_bad_gamma_and_grids() {
        let g = driver();
        assert!(ControlledPath::from_driver(g.clone(), 0.4, 0.9).is_err());
        assert!(ControlledPath::from_driver(g.clone(), 0.4, 0.4).is_err());
        let other = GridPath::zeros(TimeGrid::unit(64).unwrap(), 2);
        assert!(ControlledPath::with_zero_derivative(other, g, 0.4, 0.6).is_err());
    }
}
