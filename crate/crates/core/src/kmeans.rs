//! Lloyd's algorithm on a finite sample, with the objective
//! `W_n(c) = 1/2 sum_i min_k |c_k - X_i|^2` and its piecewise-quadratic
//! structure: gradient, diagonal Hessian, Newton step and the cost along a
//! Lloyd segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{nearest, sq_dist, CenterVector, Dataset};

/// Relative tolerance used by [`gradient`] and [`newton_step`] to detect
/// points tied between their two nearest centers.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
    pub counts: Vec<usize>,
}

fn check_dims(data: &Dataset, c: &CenterVector) -> Result<()> {
    if data.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: c.dim(),
        });
    }
    Ok(())
}

/// Nearest-center labels; ties go to the lowest center index.
pub fn assign(data: &Dataset, c: &CenterVector) -> Result<Assignment> {
    check_dims(data, c)?;
    let mut counts = vec![0; c.k()];
    let labels = data
        .iter()
        .map(|x| {
            let k = nearest(c, x).0;
            counts[k] += 1;
            k
        })
        .collect();
    Ok(Assignment { labels, counts })
}

/// Cluster means for a fixed assignment; empty clusters keep their center.
pub fn update_centers(data: &Dataset, c: &CenterVector, a: &Assignment) -> CenterVector {
    let dim = data.dim();
    let mut sums = vec![0.0; c.k() * dim];
    for (x, &k) in data.iter().zip(&a.labels) {
        for (s, v) in sums[k * dim..(k + 1) * dim].iter_mut().zip(x) {
            *s += v;
        }
    }
    let mut next = c.clone();
    for (k, &n) in a.counts.iter().enumerate() {
        if n > 0 {
            let inv = n as f64;
            for (dst, s) in next.center_mut(k).iter_mut().zip(&sums[k * dim..(k + 1) * dim]) {
                *dst = s / inv;
            }
        }
    }
    next
}

/// One assignment plus mean update. Returns the new centers and the
/// assignment they were computed from.
pub fn lloyd_step(data: &Dataset, c: &CenterVector) -> Result<(CenterVector, Assignment)> {
    let a = assign(data, c)?;
    Ok((update_centers(data, c, &a), a))
}

/// `W_n(c)`, including the factor 1/2.
pub fn cost(data: &Dataset, c: &CenterVector) -> Result<f64> {
    check_dims(data, c)?;
    Ok(0.5 * data.iter().map(|x| nearest(c, x).1).sum::<f64>())
}

/// Whether some point lies within `tol` of a bisector `H_{k,l,i}` of two
/// distinct centers (any pair, not only the nearest).
///
/// In one dimension the criterion is `|X_i - (c_k + c_l)/2| <= tol`, in
/// general `| |X_i - c_k| - |X_i - c_l| | <= tol`.
pub fn on_boundary(data: &Dataset, c: &CenterVector, tol: f64) -> Result<bool> {
    check_dims(data, c)?;
    let k = c.k();
    if data.dim() == 1 {
        let cs = c.coords();
        return Ok(data.coords().iter().any(|&x| {
            (0..k).any(|i| (i + 1..k).any(|j| (x - 0.5 * (cs[i] + cs[j])).abs() <= tol))
        }));
    }
    Ok(data.iter().any(|x| {
        let d: Vec<f64> = c.iter().map(|ck| sq_dist(ck, x).sqrt()).collect();
        (0..k).any(|i| (i + 1..k).any(|j| (d[i] - d[j]).abs() <= tol))
    }))
}

// Errors when a point's two smallest center distances tie.
fn check_differentiable(data: &Dataset, c: &CenterVector) -> Result<()> {
    for (i, x) in data.iter().enumerate() {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut second = (usize::MAX, f64::INFINITY);
        for (k, ck) in c.iter().enumerate() {
            let d = sq_dist(ck, x);
            if d < best.1 {
                second = best;
                best = (k, d);
            } else if d < second.1 {
                second = (k, d);
            }
        }
        if second.0 != usize::MAX && second.1 - best.1 <= TIE_TOL * (1.0 + second.1) {
            return Err(Error::NonDifferentiable {
                point: i,
                k: best.0.min(second.0),
                l: best.0.max(second.0),
            });
        }
    }
    Ok(())
}

/// First and second derivatives of `W_n` away from the bisectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    /// `dW_n/dc_k = sum_{X_i in C_k} (c_k - X_i)`, shaped like the centers.
    pub gradient: CenterVector,
    /// Diagonal of the Hessian: `N_k` for every coordinate of center `k`.
    /// Off-diagonal blocks are zero.
    pub hessian_diag: Vec<usize>,
}

pub fn gradient(data: &Dataset, c: &CenterVector) -> Result<Derivatives> {
    check_dims(data, c)?;
    check_differentiable(data, c)?;
    let a = assign(data, c)?;
    let dim = data.dim();
    let mut g = vec![0.0; c.k() * dim];
    for (x, &k) in data.iter().zip(&a.labels) {
        for ((gj, cj), xj) in g[k * dim..(k + 1) * dim].iter_mut().zip(c.center(k)).zip(x) {
            *gj += cj - xj;
        }
    }
    Ok(Derivatives {
        gradient: CenterVector::new(dim, g)?,
        hessian_diag: a.counts,
    })
}

/// `c_k - grad_k / N_k` for every center.
pub fn newton_step(data: &Dataset, c: &CenterVector) -> Result<CenterVector> {
    let der = gradient(data, c)?;
    if let Some(k) = der.hessian_diag.iter().position(|&n| n == 0) {
        return Err(Error::SingularHessian(k));
    }
    let dim = c.dim();
    let coords = c
        .coords()
        .iter()
        .zip(der.gradient.coords())
        .enumerate()
        .map(|(j, (cj, gj))| cj - gj / der.hessian_diag[j / dim] as f64)
        .collect();
    CenterVector::new(dim, coords)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_iter: usize,
    /// When off, `trajectory` and `costs` stay empty.
    pub record_trajectory: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iter: 1000,
            record_trajectory: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub centers: CenterVector,
    pub assignment: Assignment,
    pub cost: f64,
    /// `c^<0>, c^<1>, ...`: `iterations + 1` entries when recorded.
    pub trajectory: Vec<CenterVector>,
    /// `W_n` at each trajectory entry.
    pub costs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd's algorithm until the assignment stops changing.
pub fn run(data: &Dataset, c0: &CenterVector, max_iter: usize) -> Result<RunResult> {
    run_with(
        data,
        c0,
        &RunOptions {
            max_iter,
            ..RunOptions::default()
        },
    )
}

pub fn run_with(data: &Dataset, c0: &CenterVector, opts: &RunOptions) -> Result<RunResult> {
    if opts.max_iter == 0 {
        return Err(Error::Domain("max_iter must be at least 1".into()));
    }
    let mut centers = c0.clone();
    let mut a = assign(data, &centers)?;
    let mut trajectory = Vec::new();
    let mut costs = Vec::new();
    if opts.record_trajectory {
        trajectory.push(centers.clone());
        costs.push(cost(data, &centers)?);
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        centers = update_centers(data, &centers, &a);
        let next = assign(data, &centers)?;
        if opts.record_trajectory {
            trajectory.push(centers.clone());
            costs.push(cost(data, &centers)?);
        }
        if next == a {
            converged = true;
            break;
        }
        a = next;
    }
    let final_cost = cost(data, &centers)?;
    Ok(RunResult {
        centers,
        assignment: a,
        cost: final_cost,
        trajectory,
        costs,
        iterations,
        converged,
    })
}

/// `W_n` along `c^alpha = (1 - alpha) c_t + alpha c_next` at `n_alpha`
/// evenly spaced `alpha` in `[0, 1]`.
pub fn trajectory_cost_profile(
    data: &Dataset,
    c_t: &CenterVector,
    c_next: &CenterVector,
    n_alpha: usize,
) -> Result<Vec<(f64, f64)>> {
    if n_alpha < 2 {
        return Err(Error::Domain("n_alpha must be at least 2".into()));
    }
    (0..n_alpha)
        .map(|i| {
            let alpha = i as f64 / (n_alpha - 1) as f64;
            let c = c_t.lerp(c_next, alpha)?;
            Ok((alpha, cost(data, &c)?))
        })
        .collect()
}
