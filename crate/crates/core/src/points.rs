//! Row-major point sets and center vectors in `R^d`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `n` points of dimension `d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    coords: Vec<f64>,
}

impl Dataset {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dataset", "dimension must be positive"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(
                "dataset",
                format!("{} coordinates do not form points of dimension {dim}", coords.len()),
            ));
        }
        Ok(Dataset { dim, coords })
    }

    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Returns a dataset with every coordinate multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Dataset {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * s).collect(),
        }
    }
}

/// `K'` centers of dimension `d`: a point of `R^{d K'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterVector {
    dim: usize,
    coords: Vec<f64>,
}

impl CenterVector {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(invalid(
                "center vector",
                format!("{} coordinates with dimension {dim}", coords.len()),
            ));
        }
        Ok(CenterVector { dim, coords })
    }

    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        Self::new(1, values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(dim, rows.concat())
    }

    /// Centers taken from the given rows of `data`.
    pub fn from_points(data: &Dataset, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * data.dim());
        for &i in indices {
            coords.extend_from_slice(data.point(i));
        }
        Self::new(data.dim(), coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of centers `K'`.
    pub fn k(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub(crate) fn center_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// Flat coordinates; in one dimension these are the centers themselves.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `(1 - alpha) self + alpha other`.
    pub fn lerp(&self, other: &CenterVector, alpha: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(CenterVector {
            dim: self.dim,
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| (1.0 - alpha) * a + alpha * b)
                .collect(),
        })
    }

    /// `max_i |self_i - other_i|` over all coordinates.
    pub fn max_abs_diff(&self, other: &CenterVector) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn scaled(&self, s: f64) -> Self {
        CenterVector {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * s).collect(),
        }
    }

    fn check_same_shape(&self, other: &CenterVector) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.coords.len() != other.coords.len() {
            return Err(Error::LengthMismatch(self.k(), other.k()));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center to `x`; ties go to the lowest index.
#[inline]
pub(crate) fn nearest(centers: &CenterVector, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let d = Dataset::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        assert_eq!((d.n(), d.dim()), (3, 2));
        assert_eq!(d.point(1), &[2.0, 3.0]);
        assert!(Dataset::from_rows(&[vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::new(1, vec![]).is_err());
        let c = CenterVector::from_points(&d, &[2, 0]).unwrap();
        assert_eq!(c.coords(), &[4.0, 5.0, 0.0, 1.0]);
        assert_eq!(c.k(), 2);
    }

    #[test]
    fn nearest_tie_goes_low() {
        let c = CenterVector::from_1d(vec![0.0, 1.0]).unwrap();
        assert_eq!(nearest(&c, &[0.5]).0, 0);
        assert_eq!(nearest(&c, &[0.6]).0, 1);
    }

    #[test]
    fn lerp_endpoints() {
        let a = CenterVector::from_1d(vec![0.0, 2.0]).unwrap();
        let b = CenterVector::from_1d(vec![1.0, 4.0]).unwrap();
        assert_eq!(a.lerp(&b, 0.0).unwrap(), a);
        assert_eq!(a.lerp(&b, 1.0).unwrap(), b);
        assert_eq!(a.max_abs_diff(&b).unwrap(), 2.0);
    }
}
