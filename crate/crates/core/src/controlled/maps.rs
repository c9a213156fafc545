//! Smooth maps that can be composed with controlled paths.

use crate::error::{Error, Result};
use crate::function_spaces::DiffusionField;
use crate::linalg::Mat;
use crate::scalar::Real;

/// `F: R^n -> R^m` with Jacobian and norm bounds.
pub trait SmoothMap<T: Real>: Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval(&self, x: &[T], out: &mut [T]);
    /// Row-major `m x n`.
    fn jacobian(&self, x: &[T], out: &mut [T]);
    /// Bounds on `sup |F|`, `|∇F|`, `|∇^2 F|`.
    fn bounds(&self) -> [f64; 3];

    fn c1_norm(&self) -> f64 {
        let b = self.bounds();
        b[0] + b[1]
    }

    fn c2_norm(&self) -> f64 {
        let b = self.bounds();
        b[0] + b[1] + b[2]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityMap {
    pub dim: usize,
}

impl<T: Real> SmoothMap<T> for IdentityMap {
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        out[..self.dim].copy_from_slice(&x[..self.dim]);
    }
    fn jacobian(&self, _x: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.dim {
            out[i * self.dim + i] = T::one();
        }
    }
    fn bounds(&self) -> [f64; 3] {
        [f64::INFINITY, 1.0, 0.0]
    }
}

/// `x -> A x` for a row-major `m x n` matrix.
#[derive(Clone, Debug)]
pub struct LinearMap {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl LinearMap {
    pub fn new(rows: usize, cols: usize, a: Vec<f64>) -> Self {
        assert_eq!(a.len(), rows * cols);
        Self { rows, cols, a }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Config("only square linear maps are invertible".into()));
        }
        let m = Mat { n: self.rows, a: self.a.clone() };
        Ok(Self::new(self.rows, self.cols, m.inverse()?.a))
    }
}

impl<T: Real> SmoothMap<T> for LinearMap {
    fn in_dim(&self) -> usize {
        self.cols
    }
    fn out_dim(&self) -> usize {
        self.rows
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        for i in 0..self.rows {
            let mut s = T::zero();
            for j in 0..self.cols {
                s += T::lit(self.a[i * self.cols + j]) * x[j];
            }
            out[i] = s;
        }
    }
    fn jacobian(&self, _x: &[T], out: &mut [T]) {
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = T::lit(*a);
        }
    }
    fn bounds(&self) -> [f64; 3] {
        [f64::INFINITY, crate::controlled::op_norm_rect(&self.a, self.rows, self.cols), 0.0]
    }
}

/// `σ` flattened to `R^d -> R^{d d0}`.
impl SmoothMap<f64> for DiffusionField {
    fn in_dim(&self) -> usize {
        self.dim()
    }
    fn out_dim(&self) -> usize {
        self.dim() * self.noise_dim()
    }
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let s = DiffusionField::eval(self, x);
        out[..s.a.len()].copy_from_slice(&s.a);
    }
    fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (k, m) in DiffusionField::jacobian(self, x).iter().enumerate() {
            for (e, v) in m.a.iter().enumerate() {
                out[e * d + k] = *v;
            }
        }
    }
    fn bounds(&self) -> [f64; 3] {
        let b = self.derivative_bounds();
        [b[0], b[1], b[2]]
    }
}
