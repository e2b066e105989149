//! Initialization schemes for Lloyd's algorithm: uniform sampling of data
//! points, fixed points, farthest-first selection (MinDiam), and the pruned
//! MinDiam algorithm (sample `L` points, one Lloyd step, drop clusters of
//! mass at most `p0`, then farthest-first selection among the survivors).

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kmeans::{assign, update_centers};
use crate::points::{sq_dist, CenterVector, Dataset};
use crate::region::InitParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitScheme {
    Uniform,
    /// Fixed initial centers; must hold exactly `K'` points.
    Deterministic(CenterVector),
    MinDiam,
    Pruned(InitParams),
}

impl InitScheme {
    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::Uniform => "uniform",
            InitScheme::Deterministic(_) => "deterministic",
            InitScheme::MinDiam => "mindiam",
            InitScheme::Pruned(_) => "pruned",
        }
    }

    /// Whether the scheme consumes randomness.
    pub fn is_random(&self) -> bool {
        !matches!(self, InitScheme::Deterministic(_))
    }

    /// Initial centers for `k_prime` clusters. Pruned runs also return their
    /// diagnostics.
    pub fn initialize<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        k_prime: usize,
        rng: &mut R,
    ) -> Result<(CenterVector, Option<PrunedDiagnostics>)> {
        match self {
            InitScheme::Uniform => Ok((init_uniform(data, k_prime, rng)?, None)),
            InitScheme::Deterministic(c) => {
                if c.k() != k_prime {
                    return Err(invalid(
                        "deterministic init",
                        format!("holds {} points but K' = {k_prime}", c.k()),
                    ));
                }
                if c.dim() != data.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: data.dim(),
                        got: c.dim(),
                    });
                }
                Ok((c.clone(), None))
            }
            InitScheme::MinDiam => Ok((init_min_diam(data, k_prime, rng)?, None)),
            InitScheme::Pruned(p) => {
                let (c, d) = pruned_min_diam(data, k_prime, p, rng)?;
                Ok((c, Some(d)))
            }
        }
    }
}

/// `k_prime` distinct data points drawn without replacement, in sampled order.
pub fn init_uniform<R: Rng + ?Sized>(
    data: &Dataset,
    k_prime: usize,
    rng: &mut R,
) -> Result<CenterVector> {
    check_k(k_prime, data.n())?;
    let idx = index::sample(rng, data.n(), k_prime).into_vec();
    CenterVector::from_points(data, &idx)
}

/// Farthest-first selection over the whole data set.
pub fn init_min_diam<R: Rng + ?Sized>(
    data: &Dataset,
    k_prime: usize,
    rng: &mut R,
) -> Result<CenterVector> {
    let all = CenterVector::new(data.dim(), data.coords().to_vec())?;
    min_diam_select(&all, k_prime, rng)
}

fn check_k(k_prime: usize, available: usize) -> Result<()> {
    if k_prime == 0 {
        return Err(invalid("K'", "must be at least 1"));
    }
    if k_prime > available {
        return Err(Error::InsufficientCandidates {
            needed: k_prime,
            available,
        });
    }
    Ok(())
}

/// Greedy farthest-first subset: the first candidate is drawn uniformly,
/// each further pick maximizes the distance to the nearest selected one.
pub fn min_diam_select<R: Rng + ?Sized>(
    candidates: &CenterVector,
    k_prime: usize,
    rng: &mut R,
) -> Result<CenterVector> {
    check_k(k_prime, candidates.k())?;
    let first = rng.random_range(0..candidates.k());
    min_diam_select_from(candidates, k_prime, first)
}

/// [`min_diam_select`] with the first pick given. Ties go to the lowest
/// candidate index; the output lists centers in selection order.
pub fn min_diam_select_from(
    candidates: &CenterVector,
    k_prime: usize,
    first: usize,
) -> Result<CenterVector> {
    let m = candidates.k();
    check_k(k_prime, m)?;
    if first >= m {
        return Err(invalid("first pick", format!("index {first} out of {m} candidates")));
    }
    let mut chosen = Vec::with_capacity(k_prime);
    let mut taken = vec![false; m];
    let mut min_d = vec![f64::INFINITY; m];
    let mut pick = first;
    loop {
        chosen.push(pick);
        taken[pick] = true;
        if chosen.len() == k_prime {
            break;
        }
        let cp = candidates.center(pick);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..m {
            if taken[j] {
                continue;
            }
            min_d[j] = min_d[j].min(sq_dist(candidates.center(j), cp));
            if best.is_none_or(|(_, d)| min_d[j] > d) {
                best = Some((j, min_d[j]));
            }
        }
        pick = best.expect("k_prime <= m leaves an untaken candidate").0;
    }
    let mut coords = Vec::with_capacity(k_prime * candidates.dim());
    for &i in &chosen {
        coords.extend_from_slice(candidates.center(i));
    }
    CenterVector::new(candidates.dim(), coords)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedDiagnostics {
    /// Number of points actually sampled.
    pub l: usize,
    pub l_requested: usize,
    pub survivors: usize,
    /// Empirical masses `N_j / n` of the removed clusters.
    pub pruned_masses: Vec<f64>,
    pub survivor_masses: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Pruned MinDiam. Cluster masses are the empirical fractions `N_j / n` of
/// the cells induced by the `L` sampled points; clusters with mass `<= p0`
/// are removed, the rest move to their means and compete in
/// [`min_diam_select`].
pub fn pruned_min_diam<R: Rng + ?Sized>(
    data: &Dataset,
    k_prime: usize,
    params: &InitParams,
    rng: &mut R,
) -> Result<(CenterVector, PrunedDiagnostics)> {
    if k_prime < 2 {
        return Err(invalid("K'", format!("pruned init needs K' >= 2, got {k_prime}")));
    }
    let n = data.n();
    let mut warnings = Vec::new();
    if k_prime as f64 > 1.0 / params.w_min + 1e-9 {
        warnings.push(format!(
            "K' = {k_prime} exceeds 1/w_min = {:.3}",
            1.0 / params.w_min
        ));
    }
    let l = if params.l > n {
        warnings.push(format!("L = {} capped at n = {n}", params.l));
        n
    } else {
        params.l
    };
    let idx = index::sample(rng, n, l).into_vec();
    let c0 = CenterVector::from_points(data, &idx)?;
    let a = assign(data, &c0)?;
    let c1 = update_centers(data, &c0, &a);

    let mut survivors = Vec::new();
    let mut pruned_masses = Vec::new();
    let mut survivor_masses = Vec::new();
    for (j, &nj) in a.counts.iter().enumerate() {
        let mass = nj as f64 / n as f64;
        if mass <= params.p0 {
            pruned_masses.push(mass);
        } else {
            survivors.push(j);
            survivor_masses.push(mass);
        }
    }
    let mut coords = Vec::with_capacity(survivors.len() * data.dim());
    for &j in &survivors {
        coords.extend_from_slice(c1.center(j));
    }
    let diag = PrunedDiagnostics {
        l,
        l_requested: params.l,
        survivors: survivors.len(),
        pruned_masses,
        survivor_masses,
        warnings,
    };
    if survivors.len() < k_prime {
        return Err(Error::InsufficientCandidates {
            needed: k_prime,
            available: survivors.len(),
        });
    }
    let cand = CenterVector::new(data.dim(), coords)?;
    Ok((min_diam_select(&cand, k_prime, rng)?, diag))
}
