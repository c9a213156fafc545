//! Small dense linear algebra on row-major `f64` matrices.

use crate::error::{Error, Result};

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::identity(n);
        m.scale(c);
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "square matrix expected");
            a.extend_from_slice(r);
        }
        Self { n, a }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn scale(&mut self, c: f64) {
        self.a.iter_mut().for_each(|v| *v *= c);
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        Mat { n: self.n, a: self.a.iter().zip(&other.a).map(|(x, y)| x - y).collect() }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.a[j * self.n + i] = self.a[i * self.n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut c = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i * n + k];
                for j in 0..n {
                    c.a[i * n + j] += aik * other.a[k * n + j];
                }
            }
        }
        c
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            out[i] = (0..self.n).map(|j| self.a[i * self.n + j] * x[j]).sum();
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * (self.a[i * n + j] + self.a[j * n + i]);
                self.a[i * n + j] = m;
                self.a[j * n + i] = m;
            }
        }
    }

    /// `x^T M y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += x[i] * self.a[i * n + j] * y[j];
            }
        }
        s
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Mat> {
        let n = self.n;
        let mut l = Mat::zeros(n);
        for j in 0..n {
            let mut d = self.a[j * n + j];
            for k in 0..j {
                d -= l.a[j * n + k] * l.a[j * n + k];
            }
            if !(d > 0.0) {
                let eig = self.sym_eigenvalues();
                let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
                    (lo.min(e), hi.max(e.abs()))
                });
                return Err(Error::Numerical(format!(
                    "cholesky failed at pivot {j} (value {d:.3e}); eigenvalue range [{lo:.3e}, {hi:.3e}], condition {:.3e}",
                    hi / lo.abs().max(f64::MIN_POSITIVE)
                )));
            }
            let djj = d.sqrt();
            l.a[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.a[i * n + j];
                for k in 0..j {
                    s -= l.a[i * n + k] * l.a[j * n + k];
                }
                l.a[i * n + j] = s / djj;
            }
        }
        Ok(l)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues and the matrix whose columns are eigenvectors.
    pub fn sym_eigen(&self) -> (Vec<f64>, Mat) {
        let n = self.n;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = Mat::identity(n);
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.get(i, j).powi(2))
                .sum();
            let scale: f64 = a.a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);
            if off <= 1e-30 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        ((0..n).map(|i| a.get(i, i)).collect(), v)
    }

    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        self.sym_eigen().0
    }

    pub fn min_sym_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))
                .unwrap();
            let p = a.get(piv, col);
            if p.abs() < 1e-300 {
                return Err(Error::Numerical("singular matrix".into()));
            }
            for j in 0..n {
                a.a.swap(col * n + j, piv * n + j);
                inv.a.swap(col * n + j, piv * n + j);
            }
            for j in 0..n {
                a.a[col * n + j] /= p;
                inv.a[col * n + j] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = a.get(i, col);
                    if f != 0.0 {
                        for j in 0..n {
                            a.a[i * n + j] -= f * a.a[col * n + j];
                            inv.a[i * n + j] -= f * inv.a[col * n + j];
                        }
                    }
                }
            }
        }
        Ok(inv)
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a.get(i, col).abs().total_cmp(&a.get(j, col).abs()))
                .unwrap();
            let p = a.get(piv, col);
            if p == 0.0 {
                return 0.0;
            }
            if piv != col {
                det = -det;
                for j in 0..n {
                    a.a.swap(col * n + j, piv * n + j);
                }
            }
            det *= p;
            for i in col + 1..n {
                let f = a.get(i, col) / p;
                for j in col..n {
                    a.a[i * n + j] -= f * a.a[col * n + j];
                }
            }
        }
        det
    }
}

/// Rectangular row-major matrix `rows x cols`.
#[derive(Clone, Debug, PartialEq)]
pub struct RectMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl RectMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, a: vec![0.0; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] = v;
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.rows {
            out[i] = (0..self.cols).map(|j| self.a[i * self.cols + j] * x[j]).sum();
        }
    }

    /// `self * self^T`.
    pub fn gram(&self) -> Mat {
        let mut g = Mat::zeros(self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                g.a[i * self.rows + j] =
                    (0..self.cols).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = Mat::from_rows(&[&[4.0, 2.0, 0.4], &[2.0, 3.0, 0.5], &[0.4, 0.5, 2.0]]);
        let l = m.cholesky().unwrap();
        let r = l.matmul(&l.transpose());
        assert!(r.sub(&m).frobenius() < 1e-14);
    }

    #[test]
    fn cholesky_reports_indefinite() {
        let m = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let e = m.cholesky().unwrap_err().to_string();
        assert!(e.contains("condition"), "{e}");
    }

    #[test]
    fn jacobi_eigen() {
        let m = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let mut e = m.sym_eigenvalues();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
        let (vals, v) = m.sym_eigen();
        let mut d = Mat::zeros(2);
        d.set(0, 0, vals[0]);
        d.set(1, 1, vals[1]);
        let r = v.matmul(&d).matmul(&v.transpose());
        assert!(r.sub(&m).frobenius() < 1e-13);
    }

    #[test]
    fn inverse_and_determinant() {
        let m = Mat::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let inv = m.inverse().unwrap();
        assert!(m.matmul(&inv).sub(&Mat::identity(3)).frobenius() < 1e-14);
        assert!((m.determinant() - (-5.0)).abs() < 1e-13);
    }
}
