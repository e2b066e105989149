//! Lloyd's algorithm run on the density of a 1-D Gaussian mixture instead
//! of a sample: every center moves to the center of mass of its Voronoi cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm1d::{GaussianMixture1D, Interval};
use crate::points::CenterVector;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Voronoi cells of sorted 1-D centers, delimited by consecutive midpoints.
pub fn voronoi_cells(centers: &[f64]) -> Result<Vec<Interval>> {
    for (i, pair) in centers.windows(2).enumerate() {
        if pair[0] == pair[1] {
            return Err(Error::DuplicateCenters(i, i + 1));
        }
        if !(pair[0] < pair[1]) {
            return Err(Error::Invalid {
                what: "center vector",
                reason: format!("centers must be sorted ascending, got {pair:?}"),
            });
        }
    }
    let k = centers.len();
    Ok((0..k)
        .map(|i| Interval {
            lo: if i == 0 {
                f64::NEG_INFINITY
            } else {
                0.5 * (centers[i - 1] + centers[i])
            },
            hi: if i + 1 == k {
                f64::INFINITY
            } else {
                0.5 * (centers[i] + centers[i + 1])
            },
        })
        .collect())
}

/// One population k-means step. Centers must be one-dimensional and strictly
/// ascending; the output is again ascending.
pub fn population_update(m: &GaussianMixture1D, c: &CenterVector) -> Result<CenterVector> {
    if c.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: c.dim(),
        });
    }
    let next = update_slice(m, c.coords())?;
    CenterVector::from_1d(next)
}

pub(crate) fn update_slice(m: &GaussianMixture1D, centers: &[f64]) -> Result<Vec<f64>> {
    voronoi_cells(centers)?
        .iter()
        .map(|cell| m.truncated_mean(cell))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub centers: CenterVector,
    pub converged: bool,
    pub iterations: usize,
}

/// Iterates [`population_update`] until the next move would be below `tol`
/// in every coordinate, or `max_iter` updates have been applied.
///
/// `iterations` counts the updates that produced the returned centers, so a
/// fixed-point start reports 0 and a single center reports 1.
pub fn population_fixed_point(
    m: &GaussianMixture1D,
    c0: &CenterVector,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    let mut current = c0.clone();
    for applied in 0..max_iter {
        let next = population_update(m, &current)?;
        // Residual of `current` is known once its image is computed.
        if next.max_abs_diff(&current)? < tol {
            return Ok(FixedPoint {
                centers: current,
                converged: true,
                iterations: applied,
            });
        }
        current = next;
    }
    Ok(FixedPoint {
        centers: current,
        converged: false,
        iterations: max_iter,
    })
}
