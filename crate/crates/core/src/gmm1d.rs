//! One-dimensional Gaussian and Gaussian-mixture numerics.
//!
//! Everything here is closed form: the standard normal pdf/cdf/quantile,
//! the `H` function used by the region certificates, the tail cutoff `d(t)`,
//! the inverse Mills ratio `r(x)`, and truncated masses and first moments of
//! a mixture with a shared scale `sigma`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Arguments at or beyond this value make the upper tail mass too small to
/// divide by reliably.
pub const MILLS_RATIO_LIMIT: f64 = 37.0;

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal cdf `Phi(x)`, accurate in relative terms in the lower tail.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)`, computed without cancellation.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// `Phi(b) - Phi(a)` for `a <= b`, either end possibly infinite.
pub fn standard_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    let m = if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_sf(b)
    };
    m.max(0.0)
}

/// Inverse of the standard normal cdf.
///
/// Safeguarded Newton iteration inside a shrinking bisection bracket,
/// stopped at a step below `1e-12`. The lower half of `(0, 1)` is solved
/// directly; the upper half through `Phi(-x) = 1 - p`, which is exact there.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile needs p in (0,1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

// Solves Phi(x) = p for p in (0, 0.5]; the root is <= 0.
fn lower_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-39.0_f64, 0.0_f64);
    // Tail-aware starting point: x ~ -sqrt(-2 ln p) refined by one term.
    let s = (-2.0 * p.ln()).sqrt();
    let mut x = (-(s - (s.ln() + (4.0 * std::f64::consts::PI).ln() * 0.5) / s)).clamp(lo, hi);
    for _ in 0..200 {
        let f = normal_cdf(x) - p;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = normal_pdf(x);
        let mut next = if dens > 0.0 { x - f / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step < 1e-12 * x.abs().max(1.0) || hi - lo < 1e-14 {
            break;
        }
    }
    x
}

/// `H(x, y) = x Phi(y - x) - phi(y - x)`.
///
/// For a Gaussian `N(mu, sigma^2)`:
/// `int_{-inf}^{h} (u - mu + alpha) phi_{mu,sigma}(u) du = sigma H(alpha/sigma, (h + alpha - mu)/sigma)`.
#[inline]
pub fn h_function(x: f64, y: f64) -> f64 {
    let z = y - x;
    x * normal_cdf(z) - normal_pdf(z)
}

/// Tail cutoff `d(t)`: the solution of `1 - Phi(d) = t`.
pub fn tail_cutoff_d(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("tail probability must be in (0,1), got {t}")));
    }
    Ok(-normal_quantile(t)?)
}

/// Center of mass `r(x)` of the standard normal truncated to `[x, inf)`
/// (the inverse Mills ratio).
pub fn tail_center_of_mass_r(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("r(x) needs finite x, got {x}")));
    }
    if x >= MILLS_RATIO_LIMIT {
        return Err(Error::Overflow(format!(
            "r({x}): tail mass below representable precision"
        )));
    }
    Ok(normal_pdf(x) / normal_sf(x))
}

/// A closed interval of the real line; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid("interval", format!("[{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub const fn real_line() -> Self {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn centered(center: f64, half_width: f64) -> Self {
        Interval {
            lo: center - half_width,
            hi: center + half_width,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// `f(x) = sum_k w_k phi_{mu_k, sigma}(x)` with sorted means and a shared scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture1D {
    weights: Vec<f64>,
    means: Vec<f64>,
    sigma: f64,
}

impl GaussianMixture1D {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, sigma: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("mixture", "needs at least one component"));
        }
        if weights.len() != means.len() {
            return Err(invalid(
                "mixture",
                format!("{} weights but {} means", weights.len(), means.len()),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("mixture", "weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("mixture", format!("weights sum to {total}, not 1")));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(invalid("mixture", "means must be finite"));
        }
        if means.windows(2).any(|p| p[0] > p[1]) {
            return Err(invalid("mixture", "means must be sorted nondecreasing"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("mixture", format!("sigma must be positive, got {sigma}")));
        }
        Ok(GaussianMixture1D {
            weights,
            means,
            sigma,
        })
    }

    /// Two components at `0` and `delta` with weights `(w1, 1 - w1)` and unit scale.
    pub fn two_component(w1: f64, delta: f64) -> Result<Self> {
        if !(w1 > 0.0 && w1 < 1.0) {
            return Err(Error::Domain(format!("w1 must be in (0,1), got {w1}")));
        }
        Self::new(vec![w1, 1.0 - w1], vec![0.0, delta], 1.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of components `K`.
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// Minimum gap between consecutive means (0 for a single component).
    pub fn delta(&self) -> f64 {
        self.gaps().reduce(f64::min).unwrap_or(0.0)
    }

    /// Maximum gap between consecutive means (0 for a single component).
    pub fn delta_max(&self) -> f64 {
        self.gaps().fold(0.0, f64::max)
    }

    fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.means.windows(2).map(|p| p[1] - p[0])
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * normal_pdf((x - m) / self.sigma))
            .sum::<f64>()
            / self.sigma
    }

    /// Mass of component `k` alone (unweighted) on `c`.
    pub fn component_mass(&self, k: usize, c: &Interval) -> f64 {
        let (mu, s) = (self.means[k], self.sigma);
        standard_mass((c.lo - mu) / s, (c.hi - mu) / s)
    }

    pub fn mass(&self, c: &Interval) -> f64 {
        (0..self.k())
            .map(|k| self.weights[k] * self.component_mass(k, c))
            .sum::<f64>()
            .min(1.0)
    }

    /// Returns `(mass, first moment)` of the mixture on `c`.
    fn moments(&self, c: &Interval) -> (f64, f64) {
        let s = self.sigma;
        let mut mass = 0.0;
        let mut first = 0.0;
        for (w, &mu) in self.weights.iter().zip(&self.means) {
            let (zl, zh) = ((c.lo - mu) / s, (c.hi - mu) / s);
            let m = standard_mass(zl, zh);
            mass += w * m;
            first += w * (mu * m + s * (normal_pdf(zl) - normal_pdf(zh)));
        }
        (mass, first)
    }

    /// `int_c x f / int_c f`, clamped into `c` against roundoff.
    pub fn truncated_mean(&self, c: &Interval) -> Result<f64> {
        let (mass, first) = self.moments(c);
        if !(mass > 0.0) {
            return Err(Error::DegenerateCell { lo: c.lo, hi: c.hi });
        }
        Ok((first / mass).clamp(c.lo, c.hi))
    }

    /// Mixture with components reflected about the midpoint of the outer
    /// means; weights reversed so that means stay sorted.
    pub fn mirrored(&self) -> Self {
        let pivot = self.means[0] + self.means[self.k() - 1];
        GaussianMixture1D {
            weights: self.weights.iter().rev().copied().collect(),
            means: self.means.iter().rev().map(|m| pivot - m).collect(),
            sigma: self.sigma,
        }
    }
}

/// The `gmm1d:w=..;mu=..;sigma=..` form accepted by the model parser.
impl std::fmt::Display for GaussianMixture1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        write!(
            f,
            "gmm1d:w={};mu={};sigma={}",
            join(self.weights()),
            join(self.means()),
            self.sigma()
        )
    }
}

/// `P[c]` under the mixture.
pub fn mixture_mass(m: &GaussianMixture1D, c: &Interval) -> f64 {
    m.mass(c)
}

/// Center of mass of the mixture restricted to `c`.
pub fn truncated_mixture_mean(m: &GaussianMixture1D, c: &Interval) -> Result<f64> {
    m.truncated_mean(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_symmetry() {
        assert_eq!(normal_cdf(0.0), 0.5);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.0, 8.0, 12.0] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cdf_tail_not_saturated() {
        assert!(normal_cdf(-36.9) > 0.0);
        assert!(normal_cdf(36.9) < 1.0 || normal_sf(36.9) > 0.0);
    }

    #[test]
    fn quantile_domain() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert!(normal_quantile(f64::NAN).is_err());
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-100, 1e-12, 1e-5, 0.01, 0.2, 0.49, 0.51, 0.9, 0.999, 1.0 - 1e-12] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-10, "p={p} x={x}");
            if p < 0.5 {
                assert_relative_eq!(normal_cdf(x), p, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn h_function_values() {
        assert_relative_eq!(h_function(0.0, 0.0), -FRAC_1_SQRT_2PI, epsilon = 1e-15);
        assert!((h_function(2.0, 10.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn d_and_r_basics() {
        assert_eq!(tail_cutoff_d(0.5).unwrap(), 0.0);
        assert!(tail_cutoff_d(0.0).is_err());
        assert!(tail_cutoff_d(1.0).is_err());
        assert_relative_eq!(tail_center_of_mass_r(0.0).unwrap(), 2.0 * FRAC_1_SQRT_2PI, epsilon = 1e-15);
        assert!(matches!(tail_center_of_mass_r(40.0), Err(Error::Overflow(_))));
        assert!(tail_center_of_mass_r(36.5).is_ok());
    }

    #[test]
    fn mixture_validation() {
        assert!(GaussianMixture1D::new(vec![0.5, 0.5], vec![1.0, 0.0], 1.0).is_err());
        assert!(GaussianMixture1D::new(vec![0.5, 0.4], vec![0.0, 1.0], 1.0).is_err());
        assert!(GaussianMixture1D::new(vec![1.0], vec![0.0], 0.0).is_err());
        assert!(GaussianMixture1D::new(vec![0.5], vec![0.0, 1.0], 1.0).is_err());
        assert!(GaussianMixture1D::new(vec![1.0, 0.0], vec![0.0, 1.0], 1.0).is_err());
        let m = GaussianMixture1D::new(vec![0.2, 0.3, 0.5], vec![0.0, 2.0, 7.0], 1.0).unwrap();
        assert_eq!(m.delta(), 2.0);
        assert_eq!(m.delta_max(), 5.0);
        let single = GaussianMixture1D::new(vec![1.0], vec![3.0], 1.0).unwrap();
        assert_eq!(single.delta(), 0.0);
    }

    #[test]
    fn mass_and_mean_trivial() {
        let m = GaussianMixture1D::new(vec![0.3, 0.7], vec![-1.0, 4.0], 1.5).unwrap();
        assert_relative_eq!(mixture_mass(&m, &Interval::real_line()), 1.0, epsilon = 1e-15);
        let g = GaussianMixture1D::new(vec![1.0], vec![0.0], 1.0).unwrap();
        let left = Interval::new(f64::NEG_INFINITY, 0.0).unwrap();
        assert_eq!(mixture_mass(&g, &left), 0.5);
        let g3 = GaussianMixture1D::new(vec![1.0], vec![3.0], 1.0).unwrap();
        assert_relative_eq!(truncated_mixture_mean(&g3, &Interval::real_line()).unwrap(), 3.0, epsilon = 1e-14);
        let right = Interval::new(0.0, f64::INFINITY).unwrap();
        assert_relative_eq!(
            truncated_mixture_mean(&g, &right).unwrap(),
            tail_center_of_mass_r(0.0).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_mass_cell_is_degenerate() {
        let g = GaussianMixture1D::new(vec![1.0], vec![0.0], 1.0).unwrap();
        let far = Interval::new(100.0, 101.0).unwrap();
        assert!(matches!(g.truncated_mean(&far), Err(Error::DegenerateCell { .. })));
        let point = Interval::new(0.5, 0.5).unwrap();
        assert!(g.truncated_mean(&point).is_err());
    }

    #[test]
    fn mirror_swaps_weights() {
        let m = GaussianMixture1D::two_component(0.2, 7.0).unwrap();
        let r = m.mirrored();
        assert_eq!(r.weights(), &[0.8, 0.2]);
        assert_eq!(r.means(), &[0.0, 7.0]);
    }
}
