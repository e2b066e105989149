//! `kstab`: certificates, seeding parameters, synthetic data and stability
//! experiments from the command line.
//!
//! Exit status: 0 on success (or a stable certificate), 1 on usage or
//! runtime errors, 2 when a certificate is not satisfied, 3 when a seeding
//! assumption is violated.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kstab_core::gmm1d::GaussianMixture1D;
use kstab_core::model::write_csv;
use kstab_core::region::{
    certify_region, check_assumptions, compute_init_params, containment_oracle, purity_radii,
    InitParams,
};
use kstab_core::stability::{run_protocol, ProtocolSpec, CSV_HEADER, DEFAULT_EVAL_N};
use kstab_core::{CertificateMode, InitScheme, ModelSpec, ProtocolMode, RegionSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use config::Config;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "KSTAB_OUT_DIR";

const EXIT_ERROR: u8 = 1;
const EXIT_UNSTABLE: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "kstab", version, about = "k-means stability under initialization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the one-step certificate of a region on a two-component 1-D mixture.
    Certify(CertifyArgs),
    /// Pruned-MinDiam parameters, impurity bound, purity intervals and assumption checks.
    InitParams(InitParamsArgs),
    /// Sample a dataset from a mixture model and write it as CSV.
    Dataset(DatasetArgs),
    /// Run stability protocols over a range of K'.
    Experiment(ExperimentArgs),
    /// Grid sweep of the certificate over (w1, delta, a), written as CSV.
    RegionScan(RegionScanArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct SeedArg {
    /// Master seed; drawn from the OS and printed when absent.
    #[arg(long)]
    seed: Option<u64>,
}

/// Writes a line to standard output; a closed pipe is not an error.
fn say(line: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Corrected,
    AsPrinted,
}

impl From<ModeArg> for CertificateMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Corrected => CertificateMode::Corrected,
            ModeArg::AsPrinted => CertificateMode::AsPrinted,
        }
    }
}

#[derive(Args, Debug)]
struct RegionArgs {
    /// Square region: one center within `a` of each mean (default).
    #[arg(long, conflicts_with = "k3")]
    k2: bool,
    /// Prism region: two centers near the first mean, one near the second.
    #[arg(long)]
    k3: bool,
    /// With --k3: one center near the first mean, two near the second.
    #[arg(long, requires = "k3")]
    mirrored: bool,
    /// Prism half-length around the second mean.
    #[arg(long)]
    b: Option<f64>,
    /// Prism minimum gap between the two nearby centers.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value = "corrected")]
    mode: ModeArg,
}

impl RegionArgs {
    fn region(&self, a: f64) -> Result<RegionSpec> {
        if !self.k3 {
            return Ok(RegionSpec::square(a)?);
        }
        let b = self.b.ok_or_else(|| anyhow!("--k3 needs --b"))?;
        let eps = self.eps.ok_or_else(|| anyhow!("--k3 needs --eps"))?;
        Ok(if self.mirrored {
            RegionSpec::prism_mirrored(a, b, eps)?
        } else {
            RegionSpec::prism(a, b, eps)?
        })
    }
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    region: RegionArgs,
    /// Weight of the first component.
    #[arg(long)]
    w1: f64,
    /// Separation of the two means, in units of sigma.
    #[arg(long)]
    delta: f64,
    /// Half-length of the region around the first mean (square: around both).
    #[arg(long)]
    a: f64,
    /// Also run the grid containment check with this many points per axis.
    #[arg(long)]
    oracle: Option<usize>,
    #[command(flatten)]
    seed: SeedArg,
}

fn certify(args: &CertifyArgs) -> Result<u8> {
    let seed = resolve_seed(args.seed.seed);
    let region = args.region.region(args.a)?;
    let cert = certify_region(args.w1, args.delta, &region, args.region.mode.into())?;
    let oracle = match args.oracle {
        Some(grid) => {
            let m = GaussianMixture1D::two_component(args.w1, args.delta)?;
            Some(containment_oracle(&m, &region, grid)?)
        }
        None => None,
    };
    let out = json!({
        "w1": args.w1,
        "delta": args.delta,
        "region": region,
        "certificate": cert,
        "min_slack": cert.min_slack(),
        "oracle": oracle,
        "seed": seed,
    });
    say(&serde_json::to_string_pretty(&out)?)?;
    Ok(if cert.stable { 0 } else { EXIT_UNSTABLE })
}

#[derive(Args, Debug)]
struct InitParamsArgs {
    /// Smallest mixture weight.
    #[arg(long)]
    wmin: f64,
    /// Smallest separation of consecutive means, in units of sigma.
    #[arg(long)]
    delta: f64,
    /// Probability of missing a cluster.
    #[arg(long, default_value_t = 0.02)]
    dmiss: f64,
    /// Defaults to wmin / 10.
    #[arg(long)]
    tau: Option<f64>,
    /// Largest separation of consecutive means; defaults to --delta.
    #[arg(long)]
    delta_max: Option<f64>,
    /// Override the number of preliminary centers.
    #[arg(long)]
    l: Option<usize>,
    /// Mixture weights, comma separated; defaults to `wmin, 1 - wmin`.
    /// Means are placed at `0, delta, 2 delta, ...` with sigma 1.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[command(flatten)]
    seed: SeedArg,
}

fn init_params(args: &InitParamsArgs) -> Result<u8> {
    let seed = resolve_seed(args.seed.seed);
    let mut params = compute_init_params(args.wmin, args.delta, args.dmiss)?;
    if let Some(tau) = args.tau {
        params = params.with_tau(tau)?;
    }
    if let Some(dm) = args.delta_max {
        params = params.with_delta_max(dm)?;
    }
    if let Some(l) = args.l {
        params = params.with_l(l)?;
    }
    let weights = args
        .weights
        .clone()
        .unwrap_or_else(|| vec![args.wmin, 1.0 - args.wmin]);
    let means = (0..weights.len()).map(|i| i as f64 * args.delta).collect();
    let m = GaussianMixture1D::new(weights, means, 1.0)?;
    let assumptions = check_assumptions(&m, &params);
    let all_hold = assumptions.iter().all(|c| c.holds);
    let (purity, purity_error) = match purity_radii(&m, &params) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let out = json!({
        "params": params,
        "l_bound": params.l_bound(),
        "mixture": m,
        "purity": purity,
        "purity_error": purity_error,
        "assumptions": assumptions,
        "all_assumptions_hold": all_hold,
        "seed": seed,
    });
    say(&serde_json::to_string_pretty(&out)?)?;
    Ok(if all_hold && purity_error.is_none() { 0 } else { EXIT_ASSUMPTION })
}

#[derive(Args, Debug)]
struct DatasetArgs {
    /// Preset (balanced2d, imbalanced2d, tendim) or `gmm1d:w=..;mu=..;sigma=..`.
    #[arg(long, default_value = "balanced2d")]
    model: String,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the component label column.
    #[arg(long)]
    no_labels: bool,
    #[command(flatten)]
    seed: SeedArg,
}

fn dataset(args: &DatasetArgs) -> Result<u8> {
    let seed = resolve_seed(args.seed.seed);
    let model: ModelSpec = args.model.parse()?;
    let (data, labels) = model.sample(args.n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    let labels = (!args.no_labels).then_some(labels.as_slice());
    match &args.out {
        Some(path) => {
            let f = create(path)?;
            write_csv(BufWriter::new(f), &data, labels)?;
        }
        None => write_csv(io::stdout().lock(), &data, labels)?,
    }
    Ok(0)
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Flat `key = value` file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model preset or `gmm1d:...` (default balanced2d).
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated protocols, or `all` (default).
    #[arg(long)]
    modes: Option<String>,
    /// uniform, mindiam or pruned (default).
    #[arg(long)]
    scheme: Option<String>,
    /// `lo..hi` (inclusive) or a comma-separated list (default 2..7).
    #[arg(long)]
    k_range: Option<String>,
    /// Repetitions per K' (default 100).
    #[arg(long)]
    reps: Option<usize>,
    /// Sample size (default 100).
    #[arg(long)]
    n: Option<usize>,
    /// Initializations per repetition, lowest cost kept (default 1).
    #[arg(long)]
    restarts: Option<usize>,
    /// Master seed; drawn from the OS and printed when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the common evaluation sample (default 2000).
    #[arg(long)]
    eval_n: Option<usize>,
    /// Divide instabilities by those of random labelings.
    #[arg(long)]
    normalize: bool,
    /// Lloyd iteration cap per run (default 1000)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Pruned scheme: probability of missing a cluster (default 0.02).
    #[arg(long)]
    delta_miss: Option<f64>,
    /// Pruned scheme: smallest weight (default: the model's).
    #[arg(long)]
    wmin: Option<f64>,
    /// Output directory (default $KSTAB_OUT_DIR, else the current directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output file prefix (default "experiment").
    #[arg(long)]
    prefix: Option<String>,
}

fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let s = s.trim();
    let ks: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().with_context(|| format!("K' range {s:?}"))?;
        let hi: usize = hi.trim().parse().with_context(|| format!("K' range {s:?}"))?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<usize>().with_context(|| format!("K' list {s:?}")))
            .collect::<Result<_>>()?
    };
    if ks.is_empty() {
        bail!("empty K' range {s:?}");
    }
    Ok(ks)
}

fn parse_modes(s: &str) -> Result<Vec<ProtocolMode>> {
    if s.trim() == "all" {
        return Ok(ProtocolMode::ALL.to_vec());
    }
    s.split(',').map(|m| Ok(m.parse::<ProtocolMode>()?)).collect()
}

fn experiment(args: &ExperimentArgs) -> Result<u8> {
    let cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let model: ModelSpec = cfg
        .pick(args.model.clone(), "model")?
        .unwrap_or_else(|| "balanced2d".into())
        .parse()?;
    let modes = parse_modes(&cfg.pick(args.modes.clone(), "modes")?.unwrap_or("all".into()))?;
    let k_range = parse_k_range(&cfg.pick(args.k_range.clone(), "k_range")?.unwrap_or("2..7".into()))?;
    let scheme_name = cfg.pick(args.scheme.clone(), "scheme")?.unwrap_or("pruned".into());
    let delta_miss = cfg.pick(args.delta_miss, "delta_miss")?.unwrap_or(0.02);
    let scheme = match scheme_name.as_str() {
        "uniform" => InitScheme::Uniform,
        "mindiam" => InitScheme::MinDiam,
        "pruned" => {
            let params: InitParams = match cfg.pick(args.wmin, "wmin")? {
                Some(w) => compute_init_params(w, model.separation(), delta_miss)?,
                None => model.pruned_params(delta_miss)?,
            };
            InitScheme::Pruned(params)
        }
        other => bail!("unknown scheme {other:?}: expected uniform, mindiam or pruned"),
    };
    let seed = match cfg.pick(args.seed, "seed")? {
        Some(s) => s,
        None => resolve_seed(None),
    };
    let normalize = args.normalize || cfg.pick(None::<bool>, "normalize")?.unwrap_or(false);
    let out_dir = cfg.pick(args.out_dir.clone(), "out_dir")?.unwrap_or_else(default_out_dir);
    let prefix = cfg.pick(args.prefix.clone(), "prefix")?.unwrap_or("experiment".into());

    let mut template = ProtocolSpec::new(modes[0], scheme, k_range, seed);
    template.repetitions = cfg.pick(args.reps, "reps")?.unwrap_or(100);
    template.n = cfg.pick(args.n, "n")?.unwrap_or(100);
    template.restarts = cfg.pick(args.restarts, "restarts")?.unwrap_or(1);
    template.eval_n = cfg.pick(args.eval_n, "eval_n")?.unwrap_or(DEFAULT_EVAL_N);
    template.max_iter = cfg.pick(args.max_iter, "max_iter")?.unwrap_or(1000);
    template.normalize = normalize;
    template.validate()?;

    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{prefix}.csv"));
    let mut csv = BufWriter::new(create(&csv_path)?);
    writeln!(csv, "{CSV_HEADER}")?;
    say(&format!("model {} scheme {} seed {seed}", model.name, scheme_name))?;
    say(&format!(
        "{:<20} {:>3} {:>12} {:>10} {:>10} {:>8}",
        "mode", "K'", "instability", "good_init", "crossings", "failures"
    ))?;
    for mode in modes {
        let spec = ProtocolSpec {
            mode,
            ..template.clone()
        };
        let report = run_protocol(&model, &spec)?;
        let json_path = out_dir.join(format!("{prefix}_{}.json", mode.name()));
        fs::write(&json_path, report.to_json())
            .with_context(|| format!("writing {}", json_path.display()))?;
        for row in report.csv_rows() {
            writeln!(csv, "{row}")?;
        }
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        for r in &report.results {
            say(&format!(
                "{:<20} {:>3} {:>12} {:>10} {:>10} {:>8}",
                mode.name(),
                r.k_prime,
                fmt(r.normalized_instability.or(r.instability)),
                fmt(r.good_init_fraction),
                fmt(r.mean_crossings),
                r.failures
            ))?;
        }
    }
    csv.flush()?;
    say(&format!("wrote {}", csv_path.display()))?;
    Ok(0)
}

#[derive(Args, Debug)]
struct RegionScanArgs {
    #[command(flatten)]
    region: RegionArgs,
    /// Value or `lo:hi:step` for the first weight.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    w1: String,
    /// Value or `lo:hi:step` for the separation.
    #[arg(long, default_value = "1:20:0.5")]
    delta: String,
    /// Value or `lo:hi:step` for the region half-length.
    #[arg(long, default_value = "2.5")]
    a: String,
    /// Output file (default $KSTAB_OUT_DIR/region_scan.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Blank line after each w1 block, for gnuplot's grid plots.
    #[arg(long)]
    blocks: bool,
    #[command(flatten)]
    seed: SeedArg,
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |x: &str| x.trim().parse::<f64>().with_context(|| format!("grid {s:?}"));
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if ![lo, hi, step].iter().all(|x| x.is_finite()) || step <= 0.0 || hi < lo {
                bail!("grid {s:?}: need finite lo <= hi and step > 0");
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| lo + i as f64 * step).collect())
        }
        _ => bail!("grid {s:?}: expected a value or lo:hi:step"),
    }
}

fn region_scan(args: &RegionScanArgs) -> Result<u8> {
    resolve_seed(args.seed.seed);
    let (w1s, deltas, avals) = (parse_grid(&args.w1)?, parse_grid(&args.delta)?, parse_grid(&args.a)?);
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| default_out_dir().join("region_scan.csv"));
    let mut out = BufWriter::new(create(&path)?);
    let mode = args.region.mode.into();
    let mut header = false;
    let (mut total, mut stable) = (0, 0);
    for &w1 in &w1s {
        for &delta in &deltas {
            for &a in &avals {
                let region = args.region.region(a)?;
                let cert = certify_region(w1, delta, &region, mode)?;
                if !header {
                    writeln!(out, "w1,delta,a,b,eps,stable,min_slack,{}", cert.labels.join(","))?;
                    header = true;
                }
                let vals: Vec<String> = cert.inequality_values.iter().map(|v| format!("{v:?}")).collect();
                writeln!(
                    out,
                    "{w1:?},{delta:?},{a:?},{:?},{:?},{},{:?},{}",
                    region.b,
                    region.epsilon,
                    u8::from(cert.stable),
                    cert.min_slack(),
                    vals.join(",")
                )?;
                total += 1;
                stable += usize::from(cert.stable);
            }
        }
        if args.blocks {
            writeln!(out)?;
        }
    }
    out.flush()?;
    say(&format!("{total} points, {stable} stable; wrote {}", path.display()))?;
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Certify(a) => certify(a),
        Command::InitParams(a) => init_params(a),
        Command::Dataset(a) => dataset(a),
        Command::Experiment(a) => experiment(a),
        Command::RegionScan(a) => region_scan(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
