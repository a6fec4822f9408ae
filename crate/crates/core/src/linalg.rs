//! Small dense symmetric matrices: the `(d+1)×(d+1)` Gram matrices of local
//! linear fits.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Serialize, Serializer};

use crate::error::Error;

/// Row-major square matrix intended to hold symmetric values.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Builds from row-major entries. Panics if the length is not a square.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim, "expected {dim}x{dim} entries");
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    /// Adds `weight · r rᵀ`, touching the upper triangle only.
    /// Call [`SymMatrix::mirror_upper`] once accumulation is done.
    #[inline]
    pub fn add_outer_upper(&mut self, r: &[f64], weight: f64) {
        let p = self.dim;
        for i in 0..p {
            let wi = weight * r[i];
            for j in i..p {
                self.data[i * p + j] += wi * r[j];
            }
        }
    }

    pub fn mirror_upper(&mut self) {
        let p = self.dim;
        for i in 0..p {
            for j in 0..i {
                self.data[i * p + j] = self.data[j * p + i];
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn add_diagonal(&mut self, eps: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += eps;
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `(λ_min, λ_max)`.
    pub fn eig_range(&self) -> (f64, f64) {
        let ev = self.eigenvalues();
        (ev[0], ev[ev.len() - 1])
    }

    pub fn cholesky(&self) -> Result<Cholesky, Error> {
        Cholesky::factor(self)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..self.dim).map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec()).collect();
        rows.serialize(s)
    }
}

/// Lower-triangular factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self, Error> {
        let p = a.dim();
        let mut l = vec![0.0; p * p];
        for j in 0..p {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag -= l[j * p + k] * l[j * p + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = diag.sqrt();
            l[j * p + j] = ljj;
            for i in (j + 1)..p {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * p + k] * l[j * p + k];
                }
                l[i * p + j] = s / ljj;
            }
        }
        Ok(Self { dim: p, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let p = self.dim;
        let l = &self.lower;
        for i in 0..p {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * p + k] * b[k];
            }
            b[i] = s / l[i * p + i];
        }
        for i in (0..p).rev() {
            let mut s = b[i];
            for k in (i + 1)..p {
                s -= l[k * p + i] * b[k];
            }
            b[i] = s / l[i * p + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn inverse(&self) -> SymMatrix {
        let p = self.dim;
        let mut inv = SymMatrix::zeros(p);
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            self.solve_in_place(&mut e);
            for i in 0..p {
                inv.set(i, j, e[i]);
            }
        }
        inv
    }
}
