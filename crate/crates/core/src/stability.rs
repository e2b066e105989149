//! Clustering stability: minimal matching distance between labelings,
//! configurations of centers over the true clusters, border crossings, and
//! the three repetition protocols (randomized initialization on one sample,
//! fixed initialization on resampled data, or both).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::init::InitScheme;
use crate::kmeans::{assign, run_with, RunOptions, RunResult};
use crate::model::ModelSpec;
use crate::points::{nearest, CenterVector, Dataset};

/// Minimum over label permutations of the fraction of points on which the
/// two labelings disagree, solved as an assignment problem on the `k x k`
/// confusion matrix.
pub fn minimal_matching_distance(a: &[usize], b: &[usize], k: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(invalid("labeling", "labelings must be nonempty"));
    }
    if let Some(&bad) = a.iter().chain(b).find(|&&l| l >= k) {
        return Err(invalid("labeling", format!("label {bad} outside [0, {k})")));
    }
    let mut confusion = vec![vec![0i64; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        confusion[x][y] += 1;
    }
    let cost: Vec<Vec<i64>> = confusion
        .iter()
        .map(|row| row.iter().map(|&c| -c).collect())
        .collect();
    let perm = hungarian(&cost);
    let agree: i64 = perm.iter().enumerate().map(|(i, &j)| confusion[i][j]).sum();
    Ok((a.len() as i64 - agree) as f64 / a.len() as f64)
}

/// Minimum-cost perfect matching on a square matrix; returns the column
/// assigned to each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Number of centers whose nearest true mean is each true cluster.
pub fn configuration(centers: &CenterVector, true_means: &CenterVector) -> Vec<usize> {
    let mut counts = vec![0; true_means.k()];
    for c in centers.iter() {
        counts[nearest(true_means, c).0] += 1;
    }
    counts
}

/// Events `(t, k)` where center `k` has a different nearest true mean at
/// step `t + 1` than at step `t`.
pub fn count_border_crossings(trajectory: &[CenterVector], true_means: &CenterVector) -> usize {
    let owners: Vec<Vec<usize>> = trajectory
        .iter()
        .map(|c| c.iter().map(|x| nearest(true_means, x).0).collect())
        .collect();
    owners
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).filter(|(a, b)| a != b).count())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// One sample, a fresh initialization per repetition.
    RandomizationOnly,
    /// Fixed initial centers, a fresh sample per repetition. Unless the
    /// scheme is deterministic, the centers are `K'` points drawn once from
    /// the model.
    ResamplingOnly,
    /// Fresh sample and fresh initialization per repetition.
    Both,
}

impl ProtocolMode {
    pub const ALL: [ProtocolMode; 3] = [
        ProtocolMode::RandomizationOnly,
        ProtocolMode::ResamplingOnly,
        ProtocolMode::Both,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolMode::RandomizationOnly => "randomization_only",
            ProtocolMode::ResamplingOnly => "resampling_only",
            ProtocolMode::Both => "both",
        }
    }
}

impl std::str::FromStr for ProtocolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "randomization_only" | "randomization" => Ok(ProtocolMode::RandomizationOnly),
            "resampling_only" | "resampling" => Ok(ProtocolMode::ResamplingOnly),
            "both" => Ok(ProtocolMode::Both),
            other => Err(Error::Parse(format!(
                "unknown protocol '{other}': expected randomization_only, resampling_only or both"
            ))),
        }
    }
}

pub const DEFAULT_EVAL_N: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub mode: ProtocolMode,
    pub repetitions: usize,
    pub n: usize,
    pub k_prime_range: Vec<usize>,
    pub scheme: InitScheme,
    /// Initializations per repetition; the lowest-cost run is kept.
    pub restarts: usize,
    pub seed: u64,
    /// Size of the common sample on which final clusterings are compared.
    pub eval_n: usize,
    /// Divide the instability by that of uniformly random labelings.
    pub normalize: bool,
    pub max_iter: usize,
}

impl ProtocolSpec {
    pub fn new(mode: ProtocolMode, scheme: InitScheme, k_prime_range: Vec<usize>, seed: u64) -> Self {
        ProtocolSpec {
            mode,
            repetitions: 100,
            n: 100,
            k_prime_range,
            scheme,
            restarts: 1,
            seed,
            eval_n: DEFAULT_EVAL_N,
            normalize: false,
            max_iter: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions < 2 {
            return Err(invalid("protocol", "repetitions must be at least 2"));
        }
        if self.restarts == 0 {
            return Err(invalid("protocol", "restarts must be at least 1"));
        }
        if self.k_prime_range.is_empty() || self.k_prime_range.contains(&0) {
            return Err(invalid("protocol", "K' range must be nonempty and positive"));
        }
        if let Some(&k) = self.k_prime_range.iter().find(|&&k| k > self.n) {
            return Err(invalid("protocol", format!("K' = {k} exceeds n = {}", self.n)));
        }
        if self.eval_n == 0 || self.max_iter == 0 {
            return Err(invalid("protocol", "eval_n and max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub data_seed: u64,
    pub init_seed: u64,
    pub initial_centers: Option<CenterVector>,
    pub final_centers: Option<CenterVector>,
    pub initial_configuration: Vec<usize>,
    pub final_configuration: Vec<usize>,
    pub good_init: bool,
    pub crossings: usize,
    pub iterations: usize,
    pub converged: bool,
    pub cost: f64,
    /// Set when initialization failed; the repetition is left out of all means.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KPrimeResult {
    pub k_prime: usize,
    /// Mean minimal matching distance over all pairs of completed repetitions.
    pub instability: Option<f64>,
    /// Mean distance between uniformly random labelings (set when normalizing).
    pub baseline: Option<f64>,
    pub normalized_instability: Option<f64>,
    pub good_init_fraction: Option<f64>,
    pub mean_crossings: Option<f64>,
    /// Fraction of good initializations whose centers never crossed a border.
    pub no_crossing_given_good: Option<f64>,
    pub completed: usize,
    pub failures: usize,
    pub records: Vec<RepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub model: String,
    pub mode: ProtocolMode,
    pub scheme: String,
    pub n: usize,
    pub eval_n: usize,
    pub repetitions: usize,
    pub restarts: usize,
    pub seed: u64,
    pub results: Vec<KPrimeResult>,
}

pub const CSV_HEADER: &str =
    "mode,k_prime,instability,normalized_instability,good_init_fraction,mean_crossings,failures";

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per `K'`, without the header.
    pub fn csv_rows(&self) -> Vec<String> {
        self.results
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{}",
                    self.mode.name(),
                    r.k_prime,
                    opt(r.instability),
                    opt(r.normalized_instability),
                    opt(r.good_init_fraction),
                    opt(r.mean_crossings),
                    r.failures
                )
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in self.csv_rows() {
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    pub fn result(&self, k_prime: usize) -> Option<&KPrimeResult> {
        self.results.iter().find(|r| r.k_prime == k_prime)
    }
}

const STREAM_DATA: u64 = 1;
const STREAM_INIT: u64 = 2;
const STREAM_EVAL: u64 = 3;
const STREAM_PILOT: u64 = 4;
const STREAM_BASELINE: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `master` for the given path.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |h, &p| splitmix64(h ^ splitmix64(p)))
}

fn rng_for(master: u64, path: &[u64]) -> (u64, ChaCha8Rng) {
    let s = derive_seed(master, path);
    (s, ChaCha8Rng::seed_from_u64(s))
}

struct Outcome {
    record: RepRecord,
    eval_labels: Option<Vec<usize>>,
}

/// Runs the protocol for every `K'` in the spec. Repetitions execute in
/// parallel; results do not depend on the thread count.
pub fn run_protocol(model: &ModelSpec, spec: &ProtocolSpec) -> Result<StabilityReport> {
    spec.validate()?;
    let (_, mut eval_rng) = rng_for(spec.seed, &[STREAM_EVAL]);
    let (eval, _) = model.sample(spec.eval_n, &mut eval_rng)?;
    let truth = model.true_means();
    let shared = match spec.mode {
        ProtocolMode::RandomizationOnly => {
            let (s, mut rng) = rng_for(spec.seed, &[STREAM_DATA, 0]);
            Some((s, model.sample(spec.n, &mut rng)?.0))
        }
        _ => None,
    };

    let mut results = Vec::with_capacity(spec.k_prime_range.len());
    for &kp in &spec.k_prime_range {
        let fixed = match spec.mode {
            ProtocolMode::ResamplingOnly => Some(fixed_init(model, spec, kp)?),
            _ => None,
        };
        let outcomes: Vec<Outcome> = (0..spec.repetitions)
            .into_par_iter()
            .map(|rep| {
                let (data_seed, data) = match &shared {
                    Some((s, d)) => (*s, std::borrow::Cow::Borrowed(d)),
                    None => {
                        let (s, mut rng) = rng_for(spec.seed, &[STREAM_DATA, rep as u64]);
                        (s, std::borrow::Cow::Owned(model.sample(spec.n, &mut rng)?.0))
                    }
                };
                let scheme = match &fixed {
                    Some(c) => InitScheme::Deterministic(c.clone()),
                    None => spec.scheme.clone(),
                };
                let restarts = if scheme.is_random() { spec.restarts } else { 1 };
                let (init_seed, mut rng) = rng_for(spec.seed, &[STREAM_INIT, kp as u64, rep as u64]);
                run_repetition(
                    &data, &eval, &truth, &scheme, kp, restarts, spec.max_iter, &mut rng, rep,
                    data_seed, init_seed,
                )
            })
            .collect::<Result<_>>()?;
        results.push(summarize(spec, kp, outcomes)?);
    }
    Ok(StabilityReport {
        model: model.name.clone(),
        mode: spec.mode,
        scheme: match spec.mode {
            ProtocolMode::ResamplingOnly => "deterministic".to_string(),
            _ => spec.scheme.name().to_string(),
        },
        n: spec.n,
        eval_n: spec.eval_n,
        repetitions: spec.repetitions,
        restarts: spec.restarts,
        seed: spec.seed,
        results,
    })
}

/// Initial centers held fixed across repetitions: the scheme's own points
/// when deterministic, otherwise `K'` points drawn once from the model.
fn fixed_init(model: &ModelSpec, spec: &ProtocolSpec, kp: usize) -> Result<CenterVector> {
    if let InitScheme::Deterministic(c) = &spec.scheme {
        return Ok(c.clone());
    }
    let (_, mut rng) = rng_for(spec.seed, &[STREAM_PILOT, kp as u64]);
    let (points, _) = model.sample(kp, &mut rng)?;
    CenterVector::new(points.dim(), points.coords().to_vec())
}

#[allow(clippy::too_many_arguments)]
fn run_repetition(
    data: &Dataset,
    eval: &Dataset,
    truth: &CenterVector,
    scheme: &InitScheme,
    kp: usize,
    restarts: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
    rep: usize,
    data_seed: u64,
    init_seed: u64,
) -> Result<Outcome> {
    let opts = RunOptions {
        max_iter,
        record_trajectory: true,
    };
    let mut best: Option<RunResult> = None;
    let mut init_error = None;
    for _ in 0..restarts {
        let c0 = match scheme.initialize(data, kp, rng) {
            Ok((c, _)) => c,
            Err(e @ (Error::InsufficientCandidates { .. } | Error::Invalid { .. })) => {
                init_error = Some(e.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = run_with(data, &c0, &opts)?;
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    let Some(run) = best else {
        return Ok(Outcome {
            record: RepRecord {
                rep,
                data_seed,
                init_seed,
                initial_centers: None,
                final_centers: None,
                initial_configuration: Vec::new(),
                final_configuration: Vec::new(),
                good_init: false,
                crossings: 0,
                iterations: 0,
                converged: false,
                cost: f64::NAN,
                error: init_error,
            },
            eval_labels: None,
        });
    };
    let c0 = run.trajectory[0].clone();
    let initial_configuration = configuration(&c0, truth);
    let record = RepRecord {
        rep,
        data_seed,
        init_seed,
        good_init: initial_configuration.iter().all(|&c| c > 0),
        initial_configuration,
        final_configuration: configuration(&run.centers, truth),
        crossings: count_border_crossings(&run.trajectory, truth),
        iterations: run.iterations,
        converged: run.converged,
        cost: run.cost,
        initial_centers: Some(c0),
        final_centers: Some(run.centers.clone()),
        error: None,
    };
    Ok(Outcome {
        record,
        eval_labels: Some(assign(eval, &run.centers)?.labels),
    })
}

fn mean_pairwise_mmd(labels: &[&Vec<usize>], k: usize) -> Result<Option<f64>> {
    let m = labels.len();
    if m < 2 {
        return Ok(None);
    }
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let total: f64 = pairs
        .par_iter()
        .map(|&(i, j)| minimal_matching_distance(labels[i], labels[j], k))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    Ok(Some(total / pairs.len() as f64))
}

const BASELINE_PAIRS: usize = 20;

/// Mean minimal matching distance between independent uniform labelings.
fn random_baseline(seed: u64, k: usize, n: usize) -> Result<f64> {
    let (_, mut rng) = rng_for(seed, &[STREAM_BASELINE, k as u64]);
    let mut total = 0.0;
    for _ in 0..BASELINE_PAIRS {
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        total += minimal_matching_distance(&a, &b, k)?;
    }
    Ok(total / BASELINE_PAIRS as f64)
}

fn summarize(spec: &ProtocolSpec, kp: usize, outcomes: Vec<Outcome>) -> Result<KPrimeResult> {
    let done: Vec<&Outcome> = outcomes.iter().filter(|o| o.eval_labels.is_some()).collect();
    let completed = done.len();
    let failures = outcomes.len() - completed;
    let labels: Vec<&Vec<usize>> = done.iter().filter_map(|o| o.eval_labels.as_ref()).collect();
    let instability = mean_pairwise_mmd(&labels, kp)?;
    let (baseline, normalized_instability) = if spec.normalize && kp > 1 {
        let b = random_baseline(spec.seed, kp, spec.eval_n)?;
        (Some(b), instability.map(|s| s / b))
    } else {
        (None, None)
    };
    let frac = |count: usize, of: usize| (of > 0).then(|| count as f64 / of as f64);
    let good = done.iter().filter(|o| o.record.good_init).count();
    let good_clean = done
        .iter()
        .filter(|o| o.record.good_init && o.record.crossings == 0)
        .count();
    let crossings: usize = done.iter().map(|o| o.record.crossings).sum();
    Ok(KPrimeResult {
        k_prime: kp,
        instability,
        baseline,
        normalized_instability,
        good_init_fraction: frac(good, completed),
        mean_crossings: frac(crossings, completed),
        no_crossing_given_good: frac(good_clean, good),
        completed,
        failures,
        records: outcomes.into_iter().map(|o| o.record).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mmd_examples() {
        assert_eq!(minimal_matching_distance(&[0, 0, 1, 1], &[0, 0, 1, 1], 2).unwrap(), 0.0);
        assert_eq!(minimal_matching_distance(&[0, 0, 1, 1], &[1, 1, 0, 0], 2).unwrap(), 0.0);
        assert_eq!(minimal_matching_distance(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap(), 0.25);
        assert_eq!(
            minimal_matching_distance(&[0, 1], &[0], 2),
            Err(Error::LengthMismatch(2, 1))
        );
        assert!(minimal_matching_distance(&[0, 2], &[0, 1], 2).is_err());
    }

    #[test]
    fn configuration_examples() {
        let truth = CenterVector::from_1d(vec![0.0, 10.0, 20.0]).unwrap();
        let c = CenterVector::from_1d(vec![-1.0, 1.0, 9.0, 21.0]).unwrap();
        assert_eq!(configuration(&c, &truth), vec![2, 1, 1]);
        let all0 = CenterVector::from_1d(vec![0.0, 1.0]).unwrap();
        assert_eq!(configuration(&all0, &truth), vec![2, 0, 0]);
    }

    #[test]
    fn crossing_examples() {
        let truth = CenterVector::from_1d(vec![0.0, 10.0]).unwrap();
        let a = CenterVector::from_1d(vec![1.0]).unwrap();
        let b = CenterVector::from_1d(vec![9.0]).unwrap();
        assert_eq!(count_border_crossings(&[a.clone(), a.clone()], &truth), 0);
        assert_eq!(count_border_crossings(&[a.clone(), b], &truth), 1);
        assert_eq!(count_border_crossings(&[a], &truth), 0);
    }

    #[test]
    fn seeds_differ_by_path() {
        assert_ne!(derive_seed(1, &[1, 0]), derive_seed(1, &[1, 1]));
        assert_ne!(derive_seed(1, &[1, 0]), derive_seed(2, &[1, 0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }

    #[test]
    fn spec_validation() {
        let mut s = ProtocolSpec::new(ProtocolMode::Both, InitScheme::Uniform, vec![2], 0);
        assert!(s.validate().is_ok());
        s.repetitions = 1;
        assert!(s.validate().is_err());
        s.repetitions = 2;
        s.restarts = 0;
        assert!(s.validate().is_err());
    }
}
