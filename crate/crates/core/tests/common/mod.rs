//! Independent oracles for integration tests: adaptive quadrature of the
//! mixture density, bisection on the cdf, brute-force label matching and
//! finite differences.

#![allow(dead_code, clippy::too_many_arguments)]

use kstab_core::gmm1d::{normal_cdf, GaussianMixture1D, Interval};

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a >= b {
        return 0.0;
    }
    // Split into panels so narrow peaks are not missed by the first estimate.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + h * i as f64, if i + 1 == panels { b } else { a + h * (i + 1) as f64 });
            let (f0, f1, fm) = (f(x0), f(x1), f(0.5 * (x0 + x1)));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            rec(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// [`simpson`] with tolerance relative to a coarse estimate of the integral,
/// for integrands whose total is far below any fixed absolute tolerance.
pub fn simpson_rel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel: f64) -> f64 {
    let coarse = simpson(f, a, b, f64::INFINITY);
    simpson(f, a, b, rel * coarse.abs().max(f64::MIN_POSITIVE))
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn density(m: &GaussianMixture1D, x: f64) -> f64 {
    let s = m.sigma();
    m.weights()
        .iter()
        .zip(m.means())
        .map(|(w, mu)| w * phi((x - mu) / s) / s)
        .sum()
}

/// Finite integration limits that carry all but ~1e-300 of the mass.
pub fn clip(m: &GaussianMixture1D, c: &Interval) -> (f64, f64) {
    let span = 38.0 * m.sigma();
    let lo = c.lo.max(m.means()[0] - span);
    let hi = c.hi.min(m.means()[m.k() - 1] + span);
    (lo, hi)
}

pub fn quad_mass(m: &GaussianMixture1D, c: &Interval) -> f64 {
    let (lo, hi) = clip(m, c);
    simpson(&|x| density(m, x), lo, hi, 1e-14)
}

pub fn quad_mean(m: &GaussianMixture1D, c: &Interval) -> f64 {
    let (lo, hi) = clip(m, c);
    let mass = simpson_rel(&|x| density(m, x), lo, hi, 1e-13);
    let scale = lo.abs().max(hi.abs()).max(1.0);
    simpson(&|x| x * density(m, x), lo, hi, 1e-13 * mass * scale) / mass
}

/// One population step computed by quadrature over the Voronoi cells.
pub fn quad_update(m: &GaussianMixture1D, c: &[f64]) -> Vec<f64> {
    let k = c.len();
    (0..k)
        .map(|i| {
            let lo = if i == 0 { f64::NEG_INFINITY } else { 0.5 * (c[i - 1] + c[i]) };
            let hi = if i + 1 == k { f64::INFINITY } else { 0.5 * (c[i] + c[i + 1]) };
            quad_mean(m, &Interval { lo, hi })
        })
        .collect()
}

/// `Phi^{-1}(p)` by bisection on the cdf.
pub fn bisect_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Minimal matching distance by enumerating every permutation of `k` labels.
pub fn brute_mmd(a: &[usize], b: &[usize], k: usize) -> f64 {
    let n = a.len() as f64;
    permutations(k)
        .iter()
        .map(|pi| a.iter().zip(b).filter(|(x, y)| pi[**x] != **y).count() as f64 / n)
        .fold(f64::INFINITY, f64::min)
}

/// Central difference of `f` in coordinate `j` of `x`.
pub fn central_diff<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], j: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut dn = x.to_vec();
    up[j] += h;
    dn[j] -= h;
    (f(&up) - f(&dn)) / (2.0 * h)
}
