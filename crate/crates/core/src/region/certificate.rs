//! Closed-form certificates that a box of center vectors is mapped into
//! itself by one population k-means step, and a brute-force oracle that
//! checks the same property by integrating the update on a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gmm1d::{h_function as h, GaussianMixture1D, Interval};
use crate::points::CenterVector;
use crate::population::update_slice;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// `S_a`: one center within `a` of each mean.
    SquareK2,
    /// `T_{a,b,eps}`: two ordered centers near `mu_1`, one near `mu_2`.
    PrismK3,
    /// `sym(T_{a,b,eps})`: one center near `mu_1`, two near `mu_2`.
    PrismK3Mirrored,
}

/// A region of the solution space, with lengths in units of `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
}

impl RegionSpec {
    pub fn square(a: f64) -> Result<Self> {
        let r = RegionSpec {
            kind: RegionKind::SquareK2,
            a,
            b: 0.0,
            epsilon: 0.0,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn prism(a: f64, b: f64, epsilon: f64) -> Result<Self> {
        let r = RegionSpec {
            kind: RegionKind::PrismK3,
            a,
            b,
            epsilon,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn prism_mirrored(a: f64, b: f64, epsilon: f64) -> Result<Self> {
        Ok(RegionSpec {
            kind: RegionKind::PrismK3Mirrored,
            ..Self::prism(a, b, epsilon)?
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("region", format!("a must be positive, got {}", self.a)));
        }
        if self.kind != RegionKind::SquareK2 {
            if !(self.b > 0.0 && self.b.is_finite()) {
                return Err(invalid("region", format!("b must be positive, got {}", self.b)));
            }
            if !(self.epsilon > 0.0 && self.epsilon < 2.0 * self.a) {
                return Err(invalid(
                    "region",
                    format!("need 0 < eps < 2a, got eps={} a={}", self.epsilon, self.a),
                ));
            }
        }
        Ok(())
    }

    pub fn num_centers(&self) -> usize {
        match self.kind {
            RegionKind::SquareK2 => 2,
            _ => 3,
        }
    }

    /// Per-center coordinate ranges for means `mu1 < mu2` and scale `sigma`.
    /// Points of the region are additionally strictly ordered.
    pub fn bounds(&self, mu1: f64, mu2: f64, sigma: f64) -> Vec<Interval> {
        let (a, b, e) = (self.a * sigma, self.b * sigma, self.epsilon * sigma);
        let iv = |lo, hi| Interval { lo, hi };
        match self.kind {
            RegionKind::SquareK2 => vec![iv(mu1 - a, mu1 + a), iv(mu2 - a, mu2 + a)],
            RegionKind::PrismK3 => vec![
                iv(mu1 - a, mu1 + a - e),
                iv(mu1 - a + e, mu1 + a),
                iv(mu2 - b, mu2 + b),
            ],
            RegionKind::PrismK3Mirrored => vec![
                iv(mu1 - b, mu1 + b),
                iv(mu2 - a, mu2 + a - e),
                iv(mu2 - a + e, mu2 + a),
            ],
        }
    }
}

/// Which form of the certificate inequalities to evaluate.
///
/// `AsPrinted` keeps the original forms of the `eq6`, `eq10` and `eq11`
/// inequalities. `Corrected` replaces them with the forms obtained by integrating the update directly;
/// these agree with [`containment_oracle`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    #[default]
    Corrected,
    AsPrinted,
}

/// Outcome of a certificate: one slack per inequality, `>= 0` when satisfied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub stable: bool,
    pub labels: Vec<String>,
    pub inequality_values: Vec<f64>,
    pub mode: CertificateMode,
}

impl Certificate {
    fn from_slacks(slacks: Vec<(&str, f64)>, mode: CertificateMode) -> Self {
        let stable = slacks.iter().all(|(_, s)| *s >= 0.0);
        let (labels, inequality_values) = slacks
            .into_iter()
            .map(|(l, s)| (l.to_string(), s))
            .unzip();
        Certificate {
            stable,
            labels,
            inequality_values,
            mode,
        }
    }

    pub fn min_slack(&self) -> f64 {
        self.inequality_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn slack(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.inequality_values[i])
    }
}

fn check_weight(w1: f64) -> Result<()> {
    if !(w1 > 0.0 && w1 < 1.0) {
        return Err(Error::Domain(format!("w1 must be in (0,1), got {w1}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Certificate for the square `S_a` with two centers and two components.
/// `delta` and `a` are in units of `sigma`.
pub fn certify_square_k2(w1: f64, delta: f64, a: f64) -> Result<Certificate> {
    certify_square_k2_with(w1, delta, a, CertificateMode::default())
}

pub fn certify_square_k2_with(
    w1: f64,
    delta: f64,
    a: f64,
    mode: CertificateMode,
) -> Result<Certificate> {
    check_weight(w1)?;
    check_positive("delta", delta)?;
    check_positive("a", a)?;
    let w2 = 1.0 - w1;
    let d = delta;
    let half = 0.5 * d;

    // c1' >= mu1 - a, worst case at the lowest midpoint.
    let eq8 = w1 * h(a, half) + w2 * h(a + d, half);
    // c1' <= mu1 + a, worst case at the highest midpoint.
    let eq9 = -(w1 * h(-a, half) + w2 * h(d - a, half));
    let (eq10, eq11) = match mode {
        CertificateMode::Corrected => (
            // c2' >= mu2 - a
            (a - w1 * d) - (w1 * h(a - d, -half) + w2 * h(a, -half)),
            // c2' <= mu2 + a
            (w1 * h(-a - d, -half) + w2 * h(-a, -half)) + a + w1 * d,
        ),
        CertificateMode::AsPrinted => (
            w1 * h(a - d, -half) + w2 * h(a, half),
            -(w1 * h(-a - d, -half) + w2 * h(-a, -half)),
        ),
    };
    Ok(Certificate::from_slacks(
        vec![("eq8", eq8), ("eq9", eq9), ("eq10", eq10), ("eq11", eq11)],
        mode,
    ))
}

/// Certificate for the prism `T_{a,b,eps}` with three centers and two
/// components. Lengths are in units of `sigma`.
pub fn certify_prism_k3(w1: f64, delta: f64, a: f64, b: f64, epsilon: f64) -> Result<Certificate> {
    certify_prism_k3_with(w1, delta, a, b, epsilon, CertificateMode::default())
}

pub fn certify_prism_k3_with(
    w1: f64,
    delta: f64,
    a: f64,
    b: f64,
    epsilon: f64,
    mode: CertificateMode,
) -> Result<Certificate> {
    check_weight(w1)?;
    check_positive("delta", delta)?;
    RegionSpec::prism(a, b, epsilon)?;
    let w2 = 1.0 - w1;
    let (d, e) = (delta, epsilon);
    let mix = |x1: f64, x2: f64, y: f64| w1 * h(x1, y) + w2 * h(x2, y);

    let eq2 = mix(a, a + d, 0.5 * e);
    let eq3 = -mix(e - a, d + e - a, 0.5 * e);
    let y4 = 0.5 * (a - b + d - e);
    let eq4 = mix(a - e, a - e + d, y4) - mix(a - e, a - e + d, -0.5 * e);
    let y5 = 0.5 * (b - a + d);
    let eq5 = mix(-a, d - a, -0.5 * e) - mix(-a, d - a, y5);
    let y6 = 0.5 * (b - a - d + e);
    let eq6 = match mode {
        CertificateMode::Corrected => (b - w1 * d) - mix(b - d, b, y6),
        CertificateMode::AsPrinted => (b - w1 * d) - mix(b - d, b - d, y6),
    };
    let y7 = 0.5 * (a - b - d);
    let eq7 = mix(-b - d, -b, y7) + b + w1 * d;

    Ok(Certificate::from_slacks(
        vec![
            ("eq2", eq2),
            ("eq3", eq3),
            ("eq4", eq4),
            ("eq5", eq5),
            ("eq6", eq6),
            ("eq7", eq7),
        ],
        mode,
    ))
}

/// Certificate for `sym(T_{a,b,eps})` under weights `(w1, 1 - w1)`: the
/// reflection of the real line maps it onto `T_{a,b,eps}` with the weights
/// swapped.
pub fn certify_prism_k3_mirrored(
    w1: f64,
    delta: f64,
    a: f64,
    b: f64,
    epsilon: f64,
    mode: CertificateMode,
) -> Result<Certificate> {
    check_weight(w1)?;
    certify_prism_k3_with(1.0 - w1, delta, a, b, epsilon, mode)
}

/// Dispatches on the region kind.
pub fn certify_region(
    w1: f64,
    delta: f64,
    region: &RegionSpec,
    mode: CertificateMode,
) -> Result<Certificate> {
    region.validate()?;
    match region.kind {
        RegionKind::SquareK2 => certify_square_k2_with(w1, delta, region.a, mode),
        RegionKind::PrismK3 => {
            certify_prism_k3_with(w1, delta, region.a, region.b, region.epsilon, mode)
        }
        RegionKind::PrismK3Mirrored => {
            certify_prism_k3_mirrored(w1, delta, region.a, region.b, region.epsilon, mode)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Containment {
    pub contained: bool,
    /// Lexicographically smallest grid start whose image leaves the region.
    pub witness: Option<CenterVector>,
    pub points_checked: usize,
}

fn grid(iv: &Interval, n: usize) -> Vec<f64> {
    let step = iv.width() / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { iv.hi } else { iv.lo + step * i as f64 })
        .collect()
}

/// Applies one population update to every strictly ordered point of a
/// uniform grid over `region` (endpoints included) and reports whether all
/// images stay inside.
pub fn containment_oracle(
    m: &GaussianMixture1D,
    region: &RegionSpec,
    grid_per_axis: usize,
) -> Result<Containment> {
    if m.k() != 2 {
        return Err(invalid("mixture", format!("oracle needs 2 components, got {}", m.k())));
    }
    if grid_per_axis < 2 {
        return Err(Error::Domain("grid_per_axis must be at least 2".into()));
    }
    region.validate()?;
    let bounds = region.bounds(m.means()[0], m.means()[1], m.sigma());
    let axes: Vec<Vec<f64>> = bounds.iter().map(|b| grid(b, grid_per_axis)).collect();
    let inside = |c: &[f64]| c.iter().zip(&bounds).all(|(x, b)| b.contains(*x));

    let dims = axes.len();
    let total = grid_per_axis.pow(dims as u32);
    // Each worker returns (points checked, first escaping start in index order).
    let results: Vec<Result<(usize, Option<Vec<f64>>)>> = (0..grid_per_axis)
        .into_par_iter()
        .map(|i0| {
            let mut checked = 0;
            let mut point = vec![0.0; dims];
            for rest in 0..total / grid_per_axis {
                let mut r = rest;
                point[0] = axes[0][i0];
                for d in (1..dims).rev() {
                    point[d] = axes[d][r % grid_per_axis];
                    r /= grid_per_axis;
                }
                if point.windows(2).any(|p| !(p[0] < p[1])) {
                    continue;
                }
                checked += 1;
                let image = update_slice(m, &point)?;
                if !inside(&image) {
                    return Ok((checked, Some(point)));
                }
            }
            Ok((checked, None))
        })
        .collect();

    let mut checked = 0;
    let mut witness: Option<Vec<f64>> = None;
    for r in results {
        let (n, w) = r?;
        checked += n;
        if witness.is_none() {
            witness = w;
        }
    }
    Ok(Containment {
        contained: witness.is_none(),
        witness: witness.map(CenterVector::from_1d).transpose()?,
        points_checked: checked,
    })
}
