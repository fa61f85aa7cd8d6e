//! Dense real vectors and compensated accumulation.

use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Result};

/// A dense vector in `R^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Vector(vec![value; dim])
    }

    /// Unit vector `e_i` in `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖self − other‖²`.
    pub fn dist_sq(&self, other: &Vector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * factor).collect())
    }

    pub fn scale_mut(&mut self, factor: f64) {
        self.0.iter_mut().for_each(|x| *x *= factor);
    }

    /// `self += factor · other`.
    pub fn axpy(&mut self, factor: f64, other: &Vector) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &Vector) -> Result<()> {
        check_dim(self.dim(), other.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_dim(self.dim(), other.dim())?;
        Ok(Vector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Vector(self.0.iter().map(|&x| f(x)).collect())
    }

    /// Coordinatewise mean of a non-empty collection of equal-dimension vectors.
    pub fn mean_of<'a>(vectors: impl IntoIterator<Item = &'a Vector>) -> Result<Vector> {
        let mut iter = vectors.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| crate::Error::Input("mean of an empty set of vectors".into()))?;
        let mut acc = VectorAccumulator::new(first.dim());
        acc.add(first)?;
        let mut count = 1usize;
        for v in iter {
            acc.add(v)?;
            count += 1;
        }
        Ok(acc.total().scaled(1.0 / count as f64))
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Neumaier-compensated scalar sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

/// Coordinatewise compensated accumulation of vectors, in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAccumulator {
    coords: Vec<CompensatedSum>,
    count: usize,
}

impl VectorAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            coords: vec![CompensatedSum::new(); dim],
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, v: &Vector) -> Result<()> {
        check_dim(self.dim(), v.dim())?;
        for (c, &x) in self.coords.iter_mut().zip(v.iter()) {
            c.add(x);
        }
        self.count += 1;
        Ok(())
    }

    /// Adds `weight · v` as a single term.
    pub fn add_weighted(&mut self, weight: f64, v: &Vector) -> Result<()> {
        check_dim(self.dim(), v.dim())?;
        for (c, &x) in self.coords.iter_mut().zip(v.iter()) {
            c.add(weight * x);
        }
        self.count += 1;
        Ok(())
    }

    pub fn total(&self) -> Vector {
        self.coords.iter().map(CompensatedSum::total).collect()
    }

    pub fn reset(&mut self) {
        self.coords.iter_mut().for_each(|c| *c = CompensatedSum::new());
        self.count = 0;
    }
}
