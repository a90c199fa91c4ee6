//! Maps between coordinate boxes given by value and derivative oracles.

use alloc::boxed::Box;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{err, Result};
use crate::poly::Poly;

/// A smooth map `R^m -> R^m` with its Jacobian.
pub trait Diffeo: Send + Sync {
    fn dim(&self) -> usize;
    fn map(&self, x: &[f64]) -> Vec<f64>;
    /// `Df(x)`, rows indexed by output components.
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// `x -> A x + b`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
}

impl AffineMap {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(err!(Dimension, "affine map needs a square matrix matching the shift"));
        }
        Ok(Self { a, b })
    }

    pub fn identity(dim: usize) -> Self {
        Self { a: DMatrix::identity(dim, dim), b: alloc::vec![0.0; dim] }
    }
}

impl Diffeo for AffineMap {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.a * DVector::from_column_slice(x);
        y.iter().zip(&self.b).map(|(u, v)| u + v).collect()
    }

    fn jacobian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.a.clone()
    }
}

/// Polynomial map with exact Jacobian.
#[derive(Debug, Clone)]
pub struct PolyMap {
    comps: Vec<Poly>,
    jac: Vec<Poly>,
}

impl PolyMap {
    pub fn new(comps: Vec<Poly>) -> Result<Self> {
        let m = comps.len();
        if m == 0 || comps.iter().any(|p| p.nvars() != m) {
            return Err(err!(Dimension, "a polynomial map needs m components in m variables"));
        }
        let jac = comps.iter().flat_map(|p| (0..m).map(move |c| p.deriv(c))).collect();
        Ok(Self { comps, jac })
    }

    pub fn components(&self) -> &[Poly] {
        &self.comps
    }
}

impl Diffeo for PolyMap {
    fn dim(&self) -> usize {
        self.comps.len()
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.comps.len();
        DMatrix::from_fn(m, m, |r, c| self.jac[r * m + c].eval(x))
    }
}

type MapFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type JacFn = Box<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Map given by closures.
pub struct FnMap {
    dim: usize,
    f: MapFn,
    df: JacFn,
}

impl FnMap {
    pub fn new(
        dim: usize,
        f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        df: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { dim, f: Box::new(f), df: Box::new(df) }
    }
}

impl Diffeo for FnMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn map(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.df)(x)
    }
}
