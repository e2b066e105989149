//! Gaussian mixtures with diagonal covariances in `R^d`: named presets,
//! a compact text form, sampling, and CSV input/output of samples.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gmm1d::GaussianMixture1D;
use crate::points::{CenterVector, Dataset};
use crate::region::{compute_init_params, InitParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub weights: Vec<f64>,
    /// One row of `d` coordinates per component.
    pub means: Vec<Vec<f64>>,
    /// Diagonal covariance entries, one row per component.
    pub variances: Vec<Vec<f64>>,
}

pub const PRESETS: [&str; 3] = ["balanced2d", "imbalanced2d", "tendim"];

const CROSS_MEANS: [[f64; 2]; 4] = [[-3.0, 3.0], [0.0, 0.0], [3.0, 3.0], [3.0, -3.0]];

impl ModelSpec {
    pub fn new(
        name: impl Into<String>,
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(invalid("model", "at least one component required"));
        }
        if means.len() != k || variances.len() != k {
            return Err(invalid(
                "model",
                format!(
                    "{k} weights, {} means, {} variance rows",
                    means.len(),
                    variances.len()
                ),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid("model", format!("weights {weights:?} must be positive and sum to 1")));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(invalid("model", "means must have positive dimension"));
        }
        for row in means.iter().chain(&variances) {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        if means.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid("model", "means must be finite"));
        }
        if variances.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("model", "variances must be positive"));
        }
        Ok(ModelSpec {
            name: name.into(),
            weights,
            means,
            variances,
        })
    }

    /// Four clusters at `(-3,3), (0,0), (3,3), (3,-3)`, diagonal covariance
    /// `(0.2, 1)`, equal weights.
    pub fn balanced2d() -> Self {
        Self::cross("balanced2d", vec![0.25; 4])
    }

    /// As [`ModelSpec::balanced2d`] with weights `0.1, 0.5, 0.3, 0.1`.
    pub fn imbalanced2d() -> Self {
        Self::cross("imbalanced2d", vec![0.1, 0.5, 0.3, 0.1])
    }

    fn cross(name: &str, weights: Vec<f64>) -> Self {
        Self::new(
            name,
            weights,
            CROSS_MEANS.iter().map(|m| m.to_vec()).collect(),
            vec![vec![0.2, 1.0]; 4],
        )
        .expect("preset is valid")
    }

    /// Ten spherical clusters in `R^10` at `(i, 0, ..., 0)`, `i = 1..10`,
    /// variance 0.05, equal weights.
    pub fn tendim() -> Self {
        let means = (1..=10)
            .map(|i| {
                let mut m = vec![0.0; 10];
                m[0] = f64::from(i);
                m
            })
            .collect();
        Self::new("tendim", vec![0.1; 10], means, vec![vec![0.05; 10]; 10])
            .expect("preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "balanced2d" => Some(Self::balanced2d()),
            "imbalanced2d" => Some(Self::imbalanced2d()),
            "tendim" => Some(Self::tendim()),
            _ => None,
        }
    }

    pub fn from_mixture_1d(m: &GaussianMixture1D) -> Self {
        let var = m.sigma() * m.sigma();
        Self::new(
            m.to_string(),
            m.weights().to_vec(),
            m.means().iter().map(|&x| vec![x]).collect(),
            vec![vec![var]; m.k()],
        )
        .expect("a valid 1-D mixture is a valid model")
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn w_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance between two means over the largest per-coordinate
    /// standard deviation; infinite for a single component.
    pub fn separation(&self) -> f64 {
        let sd = self.variances.iter().flatten().copied().fold(0.0, f64::max).sqrt();
        let k = self.k();
        let mut min_d = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                let d2: f64 = self.means[i]
                    .iter()
                    .zip(&self.means[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                min_d = min_d.min(d2.sqrt());
            }
        }
        min_d / sd
    }

    /// Pruned-MinDiam parameters from [`ModelSpec::w_min`] and
    /// [`ModelSpec::separation`].
    pub fn pruned_params(&self, delta_miss: f64) -> Result<InitParams> {
        compute_init_params(self.w_min(), self.separation(), delta_miss)
    }

    pub fn true_means(&self) -> CenterVector {
        CenterVector::from_rows(&self.means).expect("validated on construction")
    }

    /// `n` i.i.d. points and the component each was drawn from.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(Dataset, Vec<usize>)> {
        if n == 0 {
            return Err(invalid("sample size", "n must be at least 1"));
        }
        let pick = WeightedIndex::new(&self.weights)
            .map_err(|e| invalid("model", e.to_string()))?;
        let sds: Vec<Vec<f64>> = self
            .variances
            .iter()
            .map(|row| row.iter().map(|v| v.sqrt()).collect())
            .collect();
        let d = self.dim();
        let mut coords = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let k = pick.sample(rng);
            labels.push(k);
            for (mu, sd) in self.means[k].iter().zip(&sds[k]) {
                let z: f64 = rng.sample(StandardNormal);
                coords.push(mu + sd * z);
            }
        }
        Ok((Dataset::new(d, coords)?, labels))
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// A preset name, or `gmm1d:w=0.5,0.5;mu=0,7;sigma=1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(m) = Self::preset(s) {
            return Ok(m);
        }
        let body = s.strip_prefix("gmm1d:").ok_or_else(|| {
            Error::Parse(format!(
                "unknown model '{s}': expected one of {PRESETS:?} or gmm1d:w=..;mu=..;sigma=.."
            ))
        })?;
        let (mut w, mut mu, mut sigma) = (None, None, None);
        for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            match key.trim() {
                "w" => w = Some(parse_list(val)?),
                "mu" => mu = Some(parse_list(val)?),
                "sigma" => sigma = Some(parse_f64(val)?),
                other => return Err(Error::Parse(format!("unknown mixture key '{other}'"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("mixture is missing '{k}'"));
        let m = GaussianMixture1D::new(
            w.ok_or_else(|| missing("w"))?,
            mu.ok_or_else(|| missing("mu"))?,
            sigma.ok_or_else(|| missing("sigma"))?,
        )?;
        Ok(Self::from_mixture_1d(&m))
    }
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: '{}'", s.trim())))
}

pub(crate) fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_f64).collect()
}

/// Writes `label,x0,x1,...` rows (or `x0,...` without labels). Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(mut out: W, data: &Dataset, labels: Option<&[usize]>) -> std::io::Result<()> {
    if let Some(l) = labels {
        if l.len() != data.n() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("{} labels for {} points", l.len(), data.n()),
            ));
        }
    }
    let mut line = String::new();
    if labels.is_some() {
        line.push_str("label,");
    }
    let header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    line.push_str(&header.join(","));
    writeln!(out, "{line}")?;
    for (i, p) in data.iter().enumerate() {
        line.clear();
        if let Some(l) = labels {
            write!(line, "{},", l[i]).expect("writing to a String");
        }
        for (j, v) in p.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v:?}").expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads the format of [`write_csv`]. A header row is required; a leading
/// `label` column is returned separately.
pub fn read_csv<R: BufRead>(input: R) -> Result<(Dataset, Option<Vec<usize>>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))?
        .map_err(|e| Error::Parse(e.to_string()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_labels = cols.first() == Some(&"label");
    let dim = cols.len() - usize::from(has_labels);
    let mut coords = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row {}: {} fields, header has {}",
                lineno + 2,
                fields.len(),
                cols.len()
            )));
        }
        let mut rest = &fields[..];
        if has_labels {
            labels.push(
                fields[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}: bad label '{}'", lineno + 2, fields[0])))?,
            );
            rest = &fields[1..];
        }
        for f in rest {
            coords.push(parse_f64(f)?);
        }
    }
    Ok((Dataset::new(dim, coords)?, has_labels.then_some(labels)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_shapes() {
        assert_eq!((ModelSpec::balanced2d().k(), ModelSpec::balanced2d().dim()), (4, 2));
        assert_eq!(ModelSpec::imbalanced2d().weights, vec![0.1, 0.5, 0.3, 0.1]);
        let t = ModelSpec::tendim();
        assert_eq!((t.k(), t.dim()), (10, 10));
        assert_eq!(t.means[9][0], 10.0);
    }

    #[test]
    fn separation_and_pruned_params() {
        let b = ModelSpec::balanced2d();
        assert!((b.separation() - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((ModelSpec::tendim().separation() - 1.0 / 0.05f64.sqrt()).abs() < 1e-12);
        assert_eq!(ModelSpec::imbalanced2d().w_min(), 0.1);
        let p = b.pruned_params(0.02).unwrap();
        assert_eq!(p.w_min, 0.25);
        assert!(p.l <= 100);
    }

    #[test]
    fn parse_mixture() {
        let m: ModelSpec = "gmm1d:w=0.5,0.5;mu=0,7;sigma=1".parse().unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.means, vec![vec![0.0], vec![7.0]]);
        let again: ModelSpec = m.name.parse().unwrap();
        assert_eq!(again, m);
        assert!("gmm1d:w=0.5,0.5;mu=0,7".parse::<ModelSpec>().is_err());
        assert!("nope".parse::<ModelSpec>().is_err());
    }

    #[test]
    fn validation() {
        assert!(ModelSpec::new("x", vec![0.5, 0.6], vec![vec![0.0]; 2], vec![vec![1.0]; 2]).is_err());
        assert!(ModelSpec::new("x", vec![1.0], vec![vec![0.0]], vec![vec![0.0]]).is_err());
        assert!(ModelSpec::new("x", vec![1.0], vec![vec![0.0]], vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (d, l) = ModelSpec::balanced2d().sample(50, &mut rng).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &d, Some(&l)).unwrap();
        let (d2, l2) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(d2, d);
        assert_eq!(l2.unwrap(), l);
        let mut plain = Vec::new();
        write_csv(&mut plain, &d, None).unwrap();
        let (d3, l3) = read_csv(plain.as_slice()).unwrap();
        assert_eq!(d3, d);
        assert!(l3.is_none());
    }
}
