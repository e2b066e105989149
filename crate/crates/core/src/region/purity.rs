//! Parameters of the pruned MinDiam seeding and the purity bounds that
//! justify it: sample size `L`, pruning threshold `p0`, the impure-cluster
//! probability, the radii `R(w)` and `R~(w1, w2)`, the intervals `A~_k`, and
//! the five seeding assumptions.
//!
//! All lengths are in units of the shared component scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gmm1d::{
    normal_cdf, normal_quantile, tail_center_of_mass_r, tail_cutoff_d, GaussianMixture1D, Interval,
};

/// Grid step of the worst-case weight search.
pub const WEIGHT_GRID_STEP: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitParams {
    pub w_min: f64,
    /// Lower bound on the separation of consecutive means.
    pub delta: f64,
    /// Upper bound on the separation of consecutive means.
    pub delta_max: f64,
    pub delta_miss: f64,
    pub tau: f64,
    /// Number of preliminary centers.
    pub l: usize,
    /// Pruning threshold `1 / (e L)`.
    pub p0: f64,
    /// Tail probability `2 Phi(-delta / 2)`.
    pub t: f64,
}

/// `t = 2 Phi(-delta/2)`, `L = ceil(ln(1/(delta_miss w_min)) / ((1 - t) w_min))`,
/// `p0 = 1/(e L)`.
///
/// `tau` defaults to `w_min / 10` and `delta_max` to `delta`; see
/// [`InitParams::with_tau`] and [`InitParams::with_delta_max`].
pub fn compute_init_params(w_min: f64, delta: f64, delta_miss: f64) -> Result<InitParams> {
    if !(w_min > 0.0 && w_min < 1.0) {
        return Err(Error::Domain(format!("w_min must be in (0,1), got {w_min}")));
    }
    if !(delta_miss > 0.0 && delta_miss < 1.0) {
        return Err(Error::Domain(format!(
            "delta_miss must be in (0,1), got {delta_miss}"
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let t = 2.0 * normal_cdf(-0.5 * delta);
    let bound = (1.0 / (delta_miss * w_min)).ln() / ((1.0 - t) * w_min);
    let l = (bound.ceil() as usize).max(1);
    Ok(InitParams {
        w_min,
        delta,
        delta_max: delta,
        delta_miss,
        tau: 0.1 * w_min,
        l,
        p0: 1.0 / (std::f64::consts::E * l as f64),
        t,
    })
}

impl InitParams {
    pub fn with_tau(mut self, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 0.5) {
            return Err(Error::Domain(format!("tau must be in (0, 0.5), got {tau}")));
        }
        if !(tau < 0.5 * self.w_min) {
            return Err(Error::Domain(format!(
                "tau must be below w_min/2 = {}, got {tau}",
                0.5 * self.w_min
            )));
        }
        self.tau = tau;
        Ok(self)
    }

    pub fn with_delta_max(mut self, delta_max: f64) -> Result<Self> {
        if !(delta_max >= self.delta && delta_max.is_finite()) {
            return Err(Error::Domain(format!(
                "delta_max must be finite and >= delta = {}, got {delta_max}",
                self.delta
            )));
        }
        self.delta_max = delta_max;
        Ok(self)
    }

    /// Overrides `L` (and with it `p0`), for example to cap it at the sample size.
    pub fn with_l(mut self, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("L must be at least 1".into()));
        }
        self.l = l;
        self.p0 = 1.0 / (std::f64::consts::E * l as f64);
        Ok(self)
    }

    /// The smallest integer satisfying the lower bound on `L`.
    pub fn l_bound(&self) -> f64 {
        (1.0 / (self.delta_miss * self.w_min)).ln() / ((1.0 - self.t) * self.w_min)
    }
}

/// Probability bound that some large cluster is impure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpurityBound {
    pub w1: f64,
    pub w2: f64,
    /// Minimum length of a cluster that is both impure and of mass `>= p0`.
    pub delta_z0: f64,
    /// The displayed two-term `Phi` expression: the mass a Gaussian pair
    /// leaves outside an interval of length `2 delta_z0`.
    pub p1_expression: f64,
    /// Lower bound on the mass of the interval spanned by the neighbours of an
    /// impure cluster, `1 - p1_expression`.
    pub p1: f64,
    /// `(1 - p1)^(L - 1)`.
    pub delta_impure: f64,
}

fn tail_arg(tau: f64, p0: f64, w: f64) -> Result<f64> {
    let x = tau * p0 / w;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("tau p0 / w = {x} outside (0,1)")));
    }
    Ok(x)
}

pub fn impurity_bound(
    w1: f64,
    w2: f64,
    delta: f64,
    tau: f64,
    p0: f64,
    l: usize,
) -> Result<ImpurityBound> {
    if !(w1 > 0.0 && w2 > 0.0 && w1 + w2 <= 1.0 + 1e-12) {
        return Err(Error::Domain(format!("weights ({w1}, {w2}) invalid")));
    }
    if l == 0 {
        return Err(Error::Domain("L must be at least 1".into()));
    }
    let delta_z0 =
        delta - tail_cutoff_d(tail_arg(tau, p0, w1)?)? - tail_cutoff_d(tail_arg(tau, p0, w2)?)?;
    if !(delta_z0 > 0.0) {
        return Err(Error::AssumptionViolated {
            id: 3,
            reason: format!("delta_z0 = {delta_z0} <= 0"),
        });
    }
    let gap = delta - 2.0 * delta_z0;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!(
            "delta - 2 delta_z0 = {gap} must be positive"
        )));
    }
    let log_ratio = (w1 / w2).ln();
    let p1_expression = w1 * normal_cdf(0.5 * gap - log_ratio / gap)
        + w2 * normal_cdf(0.5 * gap + log_ratio / gap);
    let p1 = (1.0 - p1_expression).clamp(0.0, 1.0);
    Ok(ImpurityBound {
        w1,
        w2,
        delta_z0,
        p1_expression,
        p1,
        delta_impure: (1.0 - p1).powi(l as i32 - 1),
    })
}

/// Minimizes `p1` over `w1, w2 >= w_min`, `w1 + w2 <= 1 - (k - 2) w_min` on a
/// grid of step [`WEIGHT_GRID_STEP`] (the boundary `w1 + w2 = cap` is always
/// included).
pub fn worst_case_impurity(
    w_min: f64,
    k: usize,
    delta: f64,
    tau: f64,
    p0: f64,
    l: usize,
) -> Result<ImpurityBound> {
    if k < 2 {
        return Err(Error::Domain("impurity needs at least two components".into()));
    }
    let cap = 1.0 - (k as f64 - 2.0) * w_min;
    if 2.0 * w_min > cap + 1e-12 {
        return Err(Error::Domain(format!(
            "no feasible weights: 2 w_min = {} exceeds {cap}",
            2.0 * w_min
        )));
    }
    let steps = ((cap - 2.0 * w_min) / WEIGHT_GRID_STEP + 1e-9).floor() as usize;
    let mut worst: Option<ImpurityBound> = None;
    for i in 0..=steps {
        let w1 = w_min + i as f64 * WEIGHT_GRID_STEP;
        let room = cap - w1;
        let jmax = ((room - w_min) / WEIGHT_GRID_STEP + 1e-9).floor() as usize;
        let candidates = (0..=jmax)
            .map(|j| w_min + j as f64 * WEIGHT_GRID_STEP)
            .chain(std::iter::once(room));
        for w2 in candidates {
            let b = impurity_bound(w1, w2.min(room), delta, tau, p0, l)?;
            if worst.as_ref().is_none_or(|cur| b.p1 < cur.p1) {
                worst = Some(b);
            }
        }
    }
    worst.ok_or_else(|| Error::Domain("empty weight grid".into()))
}

/// `R(w) = r(d((1 - tau) p0 / w))`.
pub fn radius_r(w: f64, tau: f64, p0: f64) -> Result<f64> {
    let x = (1.0 - tau) * p0 / w;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("(1-tau) p0 / w = {x} outside (0,1)")));
    }
    tail_center_of_mass_r(tail_cutoff_d(x)?)
}

/// `R~(w1, w2) = -Phi^{-1}[tau w1 / ((1-tau) w2) + Phi(d((1-tau) p0 / w1) - delta)]`.
pub fn radius_r_tilde(w1: f64, w2: f64, tau: f64, p0: f64, delta: f64) -> Result<f64> {
    let x = (1.0 - tau) * p0 / w1;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("(1-tau) p0 / w1 = {x} outside (0,1)")));
    }
    let arg = tau * w1 / ((1.0 - tau) * w2) + normal_cdf(tail_cutoff_d(x)? - delta);
    Ok(-normal_quantile(arg)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityBounds {
    /// Impurity bound at the mixture's own adjacent weights (the worst pair);
    /// `None` when some pair violates the bound's preconditions.
    pub at_mixture: Option<ImpurityBound>,
    /// Impurity bound minimized over all admissible weights.
    pub worst_case: Option<ImpurityBound>,
    pub delta_z0: Option<f64>,
    pub p1: Option<f64>,
    pub delta_impure: Option<f64>,
    pub w_max: f64,
    pub r_w_min: f64,
    pub r_w_max: f64,
    /// `R~(w_max, w_min)`; negative values void the `z_2` bound.
    pub r_tilde: f64,
    pub r_tilde_negative: bool,
    /// Half-width of every `A~_k`, in data units.
    pub half_width: f64,
    pub a_tilde: Vec<Interval>,
    pub a_tilde_disjoint: bool,
    /// Local purity ratios `gamma_{k,k'}` at the purity probe points, row `k`.
    pub gamma: Vec<Vec<f64>>,
}

/// Radii and the intervals `A~_k = [mu_k -/+ sigma((1-tau) R(w_max) + tau delta_max)]`.
pub fn purity_radii(m: &GaussianMixture1D, params: &InitParams) -> Result<PurityBounds> {
    let k = m.k();
    if k < 2 {
        return Err(Error::Domain("purity bounds need at least two components".into()));
    }
    let (tau, p0) = (params.tau, params.p0);
    let w_max = 1.0 - (k as f64 - 1.0) * params.w_min;
    let r_w_max = radius_r(w_max, tau, p0)?;
    let r_w_min = radius_r(params.w_min, tau, p0)?;
    let r_tilde = radius_r_tilde(w_max, params.w_min, tau, p0, params.delta)?;

    let mut at_mixture: Option<ImpurityBound> = None;
    let mut feasible = true;
    for pair in m.weights().windows(2) {
        match impurity_bound(pair[0], pair[1], params.delta, tau, p0, params.l) {
            Ok(b) => {
                if at_mixture.as_ref().is_none_or(|cur| b.p1 < cur.p1) {
                    at_mixture = Some(b);
                }
            }
            Err(Error::Domain(_) | Error::AssumptionViolated { .. }) => feasible = false,
            Err(e) => return Err(e),
        }
    }
    let at_mixture = at_mixture.filter(|_| feasible);
    let worst_case = match worst_case_impurity(params.w_min, k, params.delta, tau, p0, params.l) {
        Ok(b) => Some(b),
        Err(Error::Domain(_) | Error::AssumptionViolated { .. }) => None,
        Err(e) => return Err(e),
    };

    let half_width = m.sigma() * ((1.0 - tau) * r_w_max + tau * params.delta_max);
    let a_tilde: Vec<Interval> = m
        .means()
        .iter()
        .map(|&mu| Interval::centered(mu, half_width))
        .collect();
    let a_tilde_disjoint = a_tilde.windows(2).all(|p| p[0].hi < p[1].lo);

    Ok(PurityBounds {
        delta_z0: at_mixture.as_ref().map(|b| b.delta_z0),
        p1: at_mixture.as_ref().map(|b| b.p1),
        delta_impure: at_mixture.as_ref().map(|b| b.delta_impure),
        at_mixture,
        worst_case,
        w_max,
        r_w_min,
        r_w_max,
        r_tilde,
        r_tilde_negative: r_tilde < 0.0,
        half_width,
        a_tilde,
        a_tilde_disjoint,
        gamma: local_purity(m, params).unwrap_or_default(),
    })
}

/// Offset from `mu_k` at which local purity is probed:
/// `Phi^{-1}(1/2 + (1 - tau) p0 / (2 w_min))`.
fn purity_probe(params: &InitParams) -> Result<f64> {
    normal_quantile(0.5 + (1.0 - params.tau) * params.p0 / (2.0 * params.w_min))
}

// Row k: sum over k' != k of gamma_{k,k'} at mu_k +/- probe, worst side, per k'.
fn local_purity(m: &GaussianMixture1D, params: &InitParams) -> Result<Vec<Vec<f64>>> {
    let probe = purity_probe(params)?;
    let s = m.sigma();
    let (w, mu) = (m.weights(), m.means());
    let k = m.k();
    let gamma_at = |kk: usize, other: usize, x: f64| {
        let (zk, zo) = ((x - mu[kk]) / s, (x - mu[other]) / s);
        ((w[other] / w[kk]).ln() - 0.5 * (zo * zo - zk * zk)).exp()
    };
    Ok((0..k)
        .map(|kk| {
            let sides = [mu[kk] - probe * s, mu[kk] + probe * s];
            let worst_side = sides
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let sa: f64 = (0..k).filter(|&o| o != kk).map(|o| gamma_at(kk, o, a)).sum();
                    let sb: f64 = (0..k).filter(|&o| o != kk).map(|o| gamma_at(kk, o, b)).sum();
                    sa.total_cmp(&sb)
                })
                .unwrap();
            (0..k)
                .map(|o| if o == kk { 0.0 } else { gamma_at(kk, o, worst_side) })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub id: u8,
    pub holds: bool,
    pub slack: f64,
    pub description: String,
}

/// Evaluates the five seeding assumptions. Slack is `>= 0` (for 5: `> 0`)
/// when the assumption holds; an assumption whose terms are undefined is
/// reported with slack `-inf`.
pub fn check_assumptions(m: &GaussianMixture1D, params: &InitParams) -> Vec<AssumptionCheck> {
    let (tau, p0, w_min) = (params.tau, params.p0, params.w_min);
    let mut out = Vec::with_capacity(5);
    let mut push = |id: u8, slack: f64, strict: bool, description: &str| {
        let holds = if strict { slack > 0.0 } else { slack >= 0.0 };
        out.push(AssumptionCheck {
            id,
            holds,
            slack,
            description: description.to_string(),
        });
    };

    let min_w = m.weights().iter().copied().fold(f64::INFINITY, f64::min);
    push(1, min_w - w_min, false, "w_k >= w_min for all k");

    let a2 = local_purity(m, params).map(|g| {
        let worst = g
            .iter()
            .map(|row| row.iter().sum::<f64>())
            .fold(0.0, f64::max);
        tau / (1.0 - tau) - worst
    });
    push(
        2,
        a2.unwrap_or(f64::NEG_INFINITY),
        false,
        "sum_k' gamma_{k,k'}(probe) <= tau / (1 - tau)",
    );

    let a3 = tail_arg(tau, p0, w_min)
        .and_then(tail_cutoff_d)
        .map(|d| 0.5 * params.delta - d);
    push(3, a3.unwrap_or(f64::NEG_INFINITY), true, "d(tau p0 / w_min) < delta / 2");

    push(
        4,
        0.5 - normal_cdf(-0.5 * params.delta) - tau / w_min,
        false,
        "tau / w_min <= 1/2 - Phi(-delta/2)",
    );

    let k = m.k() as f64;
    let w_max = 1.0 - (k - 1.0) * w_min;
    let a5 = radius_r(w_max, tau, p0).and_then(|rmax| {
        radius_r(w_min, tau, p0).map(|rmin| {
            (1.0 - 3.0 * tau) * params.delta
                - tau * params.delta_max
                - (3.0 * rmax + rmin) * (1.0 - tau)
        })
    });
    push(
        5,
        a5.unwrap_or(f64::NEG_INFINITY),
        true,
        "(1 - 3 tau) delta - tau delta_max > (3 R(w_max) + R(w_min)) (1 - tau)",
    );
    out
}
