//! Batch command-line front end.
//!
//! Every command resolves flags (and an optional `--config` TOML file, whose
//! values take precedence over flags) into a [`RunConfig`] before any work
//! starts. Reports are JSON documents carrying the resolved configuration,
//! the library version, the results, named checks and a separate `timing`
//! field; everything except `timing` is a deterministic function of the
//! configuration. Exit status: 0 when all checks pass, 2 when a check fails,
//! 1 on usage or input errors.

mod output;

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use output::{record_csv, Artifact, Format};

use crate::cumulants::{
    cumcov_check, cumulant_batch, cumulant_summability, isserlis_check, minbound_check, sufcon_bound_check,
};
use crate::dfpca::{eigendecompose, eigenvalue_deviation, projector_error};
use crate::error::{Error, Result};
use crate::estimators::{
    check_weight_conditions, lag_window_sdo, smoothed_periodogram_sdo, BandwidthRule, Centering, EstimationConfig,
    Window,
};
use crate::hilbert::io::{series_record, ArrayRecord};
use crate::hilbert::GridFn;
use crate::inference::{
    all_pass, default_test_functions, dprocess_diagnostics, mc_clt, rate_regression, var_fdft_check, Check,
    CltConfig, RateConfig, Reference,
};
use crate::processes::{simulate, true_sdo, ModelSpec, ProcessModel, SamplePath};

pub const VERSION: &str = concat!("ftsa ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(name = "ftsa", version, about = "Frequency-domain analysis of functional time series")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Preset name (ar1, far1, far1-small, white, bilinear1) or model TOML file.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Sample length.
    #[arg(long = "T", global = true)]
    pub t_len: Option<usize>,
    /// Monte Carlo replicates.
    #[arg(long = "R", global = true)]
    pub replicates: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Lag window: bartlett, parzen, tukey-hanning, flat-top, truncated.
    #[arg(long, global = true)]
    pub window: Option<String>,
    /// Bandwidth rule such as `T^-1/3`, `0.5*T^-0.4`, `1/T` or a constant.
    #[arg(long = "bandwidth-rule", global = true)]
    pub bandwidth_rule: Option<String>,
    /// Comma-separated frequencies; `pi`, `pi/2`, `3pi/4` are accepted.
    #[arg(long, global = true)]
    pub freqs: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// TOML file with the flags above; its values override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<String>,
    #[serde(rename = "T")]
    t_len: Option<usize>,
    #[serde(rename = "R")]
    replicates: Option<usize>,
    seed: Option<u64>,
    window: Option<String>,
    bandwidth_rule: Option<String>,
    freqs: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Simulate a sample path and its innovations.
    Simulate,
    /// Lag-window spectral density operator estimates.
    Estimate(EstimateArgs),
    /// Monte Carlo studies of the limit laws.
    Mc(McArgs),
    /// Error ladder and slope regressions.
    Rates(RatesArgs),
    /// Cumulant tensors and dependence-coefficient bounds.
    Cumulants(CumulantArgs),
    /// Weight-condition ratios across a sample-size ladder.
    CheckWeights(WeightArgs),
    /// Dynamic principal components of estimated spectral densities.
    Eigen(EigenArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate(_) => "estimate",
            Command::Mc(_) => "mc",
            Command::Rates(_) => "rates",
            Command::Cumulants(_) => "cumulants",
            Command::CheckWeights(_) => "check-weights",
            Command::Eigen(_) => "eigen",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    /// Series in the binary array format (`[T, P]`); simulated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Centre with the sample mean.
    #[arg(long)]
    pub sample_mean: bool,
    /// Clip negative eigenvalues.
    #[arg(long)]
    pub clip: bool,
    /// Compare with the smoothed periodogram of the paired spectral kernel.
    #[arg(long)]
    pub cross_check: bool,
    #[arg(long, default_value_t = 4096)]
    pub n_quad: usize,
    /// Relative HS tolerance of the cross-check.
    #[arg(long, default_value_t = 1e-3)]
    pub cross_check_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    /// Projected estimates versus the limit covariance.
    Clt,
    /// The same at frequency zero for `2π F̂⁰`.
    LongRun,
    /// Monte Carlo variance of the fDFT against the true density.
    FdftVariance,
    /// Martingale approximation diagnostics.
    Dprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceArg {
    GrandMean,
    Truth,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McArgs {
    #[arg(long, value_enum, default_value_t = Study::Clt)]
    pub study: Study,
    #[arg(long, value_enum, default_value_t = ReferenceArg::GrandMean)]
    pub reference: ReferenceArg,
    #[arg(long)]
    pub sample_mean: bool,
    /// Sample sizes for the fDFT variance study.
    #[arg(long, default_value = "256,2048")]
    pub ladder: String,
    /// Required shrink factor from first to last sample size.
    #[arg(long, default_value_t = 0.5)]
    pub shrink: f64,
    /// Truncation levels for the martingale diagnostics.
    #[arg(long, default_value = "0,2,4,8,16")]
    pub m_ladder: String,
    #[arg(long, default_value_t = 3.0)]
    pub t_bound: f64,
    #[arg(long, default_value_t = 0.02)]
    pub trace_gap: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatesArgs {
    #[arg(long, default_value = "256,512,1024,2048,4096")]
    pub ladder: String,
    /// Eigen diagnostics for this many components (0 disables them).
    #[arg(long, default_value_t = 0)]
    pub eigen_count: usize,
    /// Track the sample-mean centring distance.
    #[arg(long)]
    pub centering: bool,
    /// Expected log-log slope of the RMSE in T.
    #[arg(long, allow_hyphen_values = true)]
    pub expect_slope: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub slope_tol: f64,
    /// Expected slope of the variance part in log(bT).
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub variance_slope: f64,
    #[arg(long, default_value_t = 0.1)]
    pub variance_tol: f64,
    /// Expected slope of the centring distance in log(bT).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub centering_slope: f64,
    #[arg(long, default_value_t = 0.2)]
    pub centering_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CumulantTask {
    /// Moment, cumulant and reconstruction at one lag tuple.
    Tensor,
    /// Fourth moment against pair products of the true covariance.
    Isserlis,
    /// Partial sums of cumulant norms over lag boxes.
    Summability,
    /// Weighted multi-lag dependence sums against their bound.
    Sufcon,
    /// Multi-lag coefficient against twice its smallest drop-one sub-tuple.
    Minbound,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CumulantArgs {
    #[arg(long, value_enum, default_value_t = CumulantTask::Tensor)]
    pub task: CumulantTask,
    /// Lags `t_1..t_{n−1}` (the last time is 0).
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub lags: String,
    /// Require the cumulant to vanish within three standard errors.
    #[arg(long)]
    pub expect_zero: bool,
    /// Order for the summability task.
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value = "0,1,2,3,4")]
    pub radii: String,
    #[arg(long, default_value_t = 3.0)]
    pub noise_k: f64,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 4)]
    pub j_max: usize,
    /// Moment order of the dependence coefficients (2 or 4).
    #[arg(long, default_value_t = 4)]
    pub p: u32,
    /// Lag tuple for the minbound task.
    #[arg(long, default_value = "0,1")]
    pub tuple: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WeightArgs {
    #[arg(long, default_value = "256,512,1024,2048,4096,8192")]
    pub ladder: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EigenArgs {
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Fully resolved configuration, serialised into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: String,
    pub model_spec: ModelSpec,
    #[serde(rename = "T")]
    pub t_len: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    pub window: Window,
    pub bandwidth_rule: BandwidthRule,
    pub frequencies: Vec<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    #[serde(skip)]
    model_base: PathBuf,
}

/// Parse `0`, `pi`, `-pi/2`, `3pi/4`, `2*pi/3` or a plain number.
pub fn parse_frequency(s: &str) -> Result<f64> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let bad = || Error::Config(format!("cannot parse frequency '{s}'"));
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let head = t[..pos].trim_end_matches('*');
    let tail = &t[pos + 2..];
    let coef = match head {
        "" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match tail {
        "" => 1.0,
        d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(coef * PI / den)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let v: std::result::Result<Vec<T>, _> = s.split(',').filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse()).collect();
    let v = v.map_err(|_| Error::Config(format!("cannot parse {what} '{s}'")))?;
    if v.is_empty() {
        return Err(Error::Config(format!("empty {what}")));
    }
    Ok(v)
}

/// Preset name or path to a model TOML file.
pub fn load_model_spec(name: &str) -> Result<(ModelSpec, PathBuf)> {
    if ModelSpec::preset_names().contains(&name) {
        return Ok((ModelSpec::preset(name)?, PathBuf::from(".")));
    }
    let p = Path::new(name);
    if p.exists() {
        return ModelSpec::load(p);
    }
    Err(Error::Config(format!(
        "unknown model '{name}': not a preset ({}) and no such file",
        ModelSpec::preset_names().join(", ")
    )))
}

impl RunConfig {
    pub fn resolve(common: &Common, command: &Command) -> Result<RunConfig> {
        let file = match &common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str::<ConfigFile>(&text).map_err(|e| Error::Config(e.to_string()))?
            }
            None => ConfigFile::default(),
        };
        // config file wins over flags
        let pick = |f: Option<String>, c: &Option<String>| f.or_else(|| c.clone());
        let model = pick(file.model, &common.model).unwrap_or_else(|| default_model(command).into());
        let (t_default, r_default) = default_sizes(command);
        let t_len = file.t_len.or(common.t_len).unwrap_or(t_default);
        let replicates = file.replicates.or(common.replicates).unwrap_or(r_default);
        let seed = file.seed.or(common.seed).unwrap_or(1);
        let window = Window::by_name(&pick(file.window, &common.window).unwrap_or_else(|| "bartlett".into()))?;
        let rule: BandwidthRule = pick(file.bandwidth_rule, &common.bandwidth_rule)
            .unwrap_or_else(|| "T^-1/3".into())
            .parse()?;
        let frequencies = parse_list::<String>(&pick(file.freqs, &common.freqs).unwrap_or_else(|| "0".into()), "frequencies")?
            .iter()
            .map(|s| parse_frequency(s))
            .collect::<Result<Vec<_>>>()?;
        let (model_spec, model_base) = load_model_spec(&model)?;
        if t_len == 0 {
            return Err(Error::Config("T must be positive".into()));
        }
        if let Some(0) = file.jobs.or(common.jobs) {
            return Err(Error::Config("--jobs must be positive".into()));
        }
        Ok(RunConfig {
            command: command.clone(),
            model,
            model_spec,
            t_len,
            replicates,
            seed,
            window,
            bandwidth_rule: rule,
            frequencies,
            out: file.out.or_else(|| common.out.clone()),
            format: file.format.or(common.format).unwrap_or_default(),
            jobs: file.jobs.or(common.jobs),
            model_base,
        })
    }

    pub fn build_model(&self) -> Result<ProcessModel> {
        self.model_spec.build(&self.model_base)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_rule.at(self.t_len)
    }
}

fn default_model(command: &Command) -> &'static str {
    match command {
        Command::Cumulants(_) => "far1-small",
        _ => "far1",
    }
}

fn default_sizes(command: &Command) -> (usize, usize) {
    match command {
        Command::Mc(a) if matches!(a.study, Study::Clt | Study::LongRun) => (2048, 500),
        Command::Mc(_) => (256, 400),
        Command::Rates(_) => (256, 50),
        Command::Cumulants(_) => (1, 20_000),
        Command::Simulate => (256, 1),
        _ => (1024, 1),
    }
}

/// Outcome of a command before serialisation.
struct Outcome {
    result: Value,
    checks: Vec<Check>,
    artifacts: Vec<Artifact>,
    tables: Vec<(String, String)>,
}

impl Outcome {
    fn new(result: Value) -> Self {
        Outcome { result, checks: vec![], artifacts: vec![], tables: vec![] }
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn load_series(path: &Path) -> Result<SamplePath> {
    let rec = ArrayRecord::load(path)?;
    let grid = rec.grid.clone();
    let fns = rec.into_functions()?;
    SamplePath::from_functions(&grid, &fns)
}

fn innovations_record(path: &SamplePath) -> Result<ArrayRecord> {
    let m = path.innovations();
    let data = (0..m.nrows()).flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)])).collect();
    ArrayRecord::new(vec![m.nrows(), m.ncols()], path.grid().clone(), data)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let path = simulate(&model, cfg.t_len, cfg.seed)?;
    let mut out = Outcome::new(json!({
        "T": path.len(),
        "grid_size": model.grid().len(),
        "burn_in": path.burn_in(),
        "first_innovation_time": path.first_innovation_time(),
    }));
    out.artifacts.push(Artifact::new("series", series_record(model.grid(), &path.functions())));
    out.artifacts.push(Artifact::new("innovations", innovations_record(&path)?));
    Ok(out)
}

fn relative_hs(a: &crate::hilbert::HSOp, b: &crate::hilbert::HSOp) -> Result<f64> {
    Ok(a.sub(b)?.hs_norm() / b.hs_norm().max(f64::MIN_POSITIVE))
}

fn cmd_estimate(cfg: &RunConfig, args: &EstimateArgs) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (path, simulated) = match &args.input {
        Some(p) => (load_series(p)?, false),
        None => (simulate(&model, cfg.t_len, cfg.seed)?, true),
    };
    let b = cfg.bandwidth_rule.at(path.len());
    let center = if args.sample_mean { Centering::SampleMean } else { Centering::KnownZeroMean };
    let ecfg = EstimationConfig::new(cfg.window.clone(), b, cfg.frequencies.clone())?
        .with_center(center)
        .with_clipping(args.clip);
    let est = lag_window_sdo(&path, &ecfg)?;
    let mut per_freq = Vec::new();
    let mut checks = Vec::new();
    for (k, (op, diag)) in est.operators.iter().zip(&est.diagnostics).enumerate() {
        let lambda = diag.lambda;
        let truth_error = if simulated { true_sdo(&model, lambda).ok().map(|f| op.sub(&f).map(|d| d.hs_norm())).transpose()? } else { None };
        let cross = if args.cross_check {
            let sp = smoothed_periodogram_sdo(&path, &cfg.window, b, lambda, args.n_quad)?;
            let d = relative_hs(&sp, op)?;
            checks.push(Check::upper(format!("smoothed periodogram vs lag window at λ={lambda:.6}"), d, args.cross_check_tol));
            Some(d)
        } else {
            None
        };
        per_freq.push(json!({
            "index": k,
            "lambda": lambda,
            "trace": op.trace().re,
            "hs_norm": op.hs_norm(),
            "hermitian_defect": diag.hermitian_defect,
            "min_eigenvalue": diag.min_eigenvalue,
            "truth_hs_error": truth_error,
            "cross_check_relative_distance": cross,
        }));
    }
    let mut out = Outcome::new(json!({
        "T": path.len(),
        "bandwidth": b,
        "kappa": cfg.window.kappa(),
        "max_lag": cfg.window.max_lag(b, path.len()),
        "warnings": est.warnings,
        "frequencies": per_freq,
    }));
    out.checks = checks;
    out.artifacts = est
        .operators
        .iter()
        .enumerate()
        .map(|(k, op)| Artifact::new(format!("sdo_{k}"), ArrayRecord::from(op)))
        .collect();
    Ok(out)
}

fn cmd_mc(cfg: &RunConfig, args: &McArgs) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let lambda = cfg.frequencies[0];
    match args.study {
        Study::Clt | Study::LongRun => {
            let long_run = args.study == Study::LongRun;
            let frequencies = if long_run { vec![0.0] } else { cfg.frequencies.clone() };
            let ccfg = CltConfig {
                t_len: cfg.t_len,
                window: cfg.window.clone(),
                bandwidth: cfg.bandwidth(),
                frequencies,
                replicates: cfg.replicates,
                seed: cfg.seed,
                reference: match args.reference {
                    ReferenceArg::GrandMean => Reference::GrandMean,
                    ReferenceArg::Truth => Reference::Truth,
                },
                center: if args.sample_mean { Centering::SampleMean } else { Centering::KnownZeroMean },
                long_run,
            };
            let (u, v) = default_test_functions(&model);
            let report = mc_clt(&model, &ccfg, &u, &v)?;
            let mut out = Outcome::new(to_value(&report)?);
            out.checks = report.checks();
            Ok(out)
        }
        Study::FdftVariance => {
            let ladder = parse_list::<usize>(&args.ladder, "ladder")?;
            let report = var_fdft_check(&model, lambda, &ladder, cfg.replicates, cfg.seed)?;
            let mut out = Outcome::new(to_value(&report)?);
            out.checks = vec![report.shrink_check(args.shrink)];
            Ok(out)
        }
        Study::Dprocess => {
            let m_ladder = parse_list::<usize>(&args.m_ladder, "m ladder")?;
            let report = dprocess_diagnostics(&model, &m_ladder, lambda, cfg.t_len, cfg.replicates, cfg.seed)?;
            let mut out = Outcome::new(to_value(&report)?);
            out.checks = report.checks(args.t_bound, args.trace_gap);
            Ok(out)
        }
    }
}

fn cmd_rates(cfg: &RunConfig, args: &RatesArgs) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let rcfg = RateConfig {
        window: cfg.window.clone(),
        rule: cfg.bandwidth_rule,
        ladder: parse_list(&args.ladder, "ladder")?,
        replicates: cfg.replicates,
        seed: cfg.seed,
        frequencies: cfg.frequencies.clone(),
        eigen_count: args.eigen_count,
        centering: args.centering,
    };
    let report = rate_regression(&model, &rcfg)?;
    let mut checks = vec![Check::within(
        "variance slope vs log(bT)",
        report.variance.slope,
        args.variance_slope,
        args.variance_tol,
    )];
    if let Some(s) = args.expect_slope {
        checks.insert(0, Check::within("overall slope", report.overall.slope, s, args.slope_tol));
    }
    if let Some(c) = &report.centering {
        checks.push(Check::within("centering slope vs log(bT)", c.slope, args.centering_slope, args.centering_tol));
    }
    if args.eigen_count > 0 {
        let violations: usize = report.rows.iter().map(|r| r.weyl_violations).sum();
        checks.push(Check::upper("eigenvalue deviation above HS error (count)", violations as f64, 0.0));
        let first = report.rows.first().and_then(|r| r.projector_median);
        let last = report.rows.last().and_then(|r| r.projector_median);
        if let (Some(f), Some(l)) = (first, last) {
            checks.push(Check::upper("median first projector error, last vs first", l, 0.5 * f));
        }
    }
    let mut out = Outcome::new(to_value(&report)?);
    out.checks = checks;
    Ok(out)
}

fn cmd_cumulants(cfg: &RunConfig, args: &CumulantArgs) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (r, seed) = (cfg.replicates, cfg.seed);
    match args.task {
        CumulantTask::Tensor => {
            let lags = parse_list::<i64>(&args.lags, "lags")?;
            let times: Vec<i64> = lags.iter().copied().chain(std::iter::once(0)).collect();
            let est = cumulant_batch(&model, std::slice::from_ref(&times), r, seed)?.remove(0);
            let cc = cumcov_check(&est)?;
            let mut checks = vec![Check::flag("moment = cumulant + reconstruction", cc.pass)];
            if args.expect_zero {
                checks.push(Check::upper("cumulant HS norm", est.cumulant.hs_norm(), 3.0 * est.cumulant.se_hs));
            }
            let mut out = Outcome::new(json!({
                "order": times.len(),
                "times": times,
                "replicates": est.cumulant.replicates,
                "batches": est.cumulant.batches,
                "cumulant_hs_norm": est.cumulant.hs_norm(),
                "cumulant_se_hs": est.cumulant.se_hs,
                "moment_hs_norm": est.moment.tensor.hs_norm(),
                "reconstruction": cc,
            }));
            out.checks = checks;
            out.artifacts = vec![
                Artifact::new("cumulant", ArrayRecord::from(&est.cumulant.tensor)),
                Artifact::new("cumulant_se", ArrayRecord::from(&est.cumulant.se)),
                Artifact::new("moment", ArrayRecord::from(&est.moment.tensor)),
            ];
            Ok(out)
        }
        CumulantTask::Isserlis => {
            let lags = parse_list::<i64>(&args.lags, "lags")?;
            let (rep, cum) = isserlis_check(&model, &lags, r, seed)?;
            let mut out = Outcome::new(json!({
                "isserlis": rep,
                "cumulant_hs_norm": cum.hs_norm(),
                "cumulant_se_hs": cum.se_hs,
            }));
            out.checks = vec![
                Check::upper("max |z| of moment vs pair products", rep.max_z, rep.z_bound),
                Check::upper("fourth cumulant HS norm", cum.hs_norm(), 3.0 * cum.se_hs),
            ];
            Ok(out)
        }
        CumulantTask::Summability => {
            let radii = parse_list::<usize>(&args.radii, "radii")?;
            let rep = cumulant_summability(&model, args.order, &radii, r, seed)?;
            let last = rep.rows.last().expect("non-empty radii");
            let mut out = Outcome::new(to_value(&rep)?);
            out.checks = vec![Check::upper("last increment", last.increment, args.noise_k * last.shell_noise)];
            let mut csv = String::from("radius,partial_sum,increment,shell_noise,exact\n");
            for row in &rep.rows {
                let exact = row.exact.map(|e| format!("{e:e}")).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{:e},{:e},{:e},{exact}\n",
                    row.radius, row.partial_sum, row.increment, row.shell_noise
                ));
            }
            out.tables.push(("summability".into(), csv));
            Ok(out)
        }
        CumulantTask::Sufcon => {
            let rep = sufcon_bound_check(&model, args.k, args.j_max, args.p, r, seed)?;
            let name = if args.k == 1 { "k=1 equality" } else { "lhs <= rhs + 3 se" };
            let mut out = Outcome::new(to_value(&rep)?);
            out.checks = vec![Check::flag(name, rep.pass)];
            Ok(out)
        }
        CumulantTask::Minbound => {
            let tuple = parse_list::<usize>(&args.tuple, "tuple")?;
            let rep = minbound_check(&model, &tuple, args.p, r, seed)?;
            let mut out = Outcome::new(to_value(&rep)?);
            out.checks = vec![Check::flag("nu <= 2 min over drop-one sub-tuples", rep.pass)];
            Ok(out)
        }
    }
}

fn cmd_check_weights(cfg: &RunConfig, args: &WeightArgs) -> Result<Outcome> {
    let ladder = parse_list::<usize>(&args.ladder, "ladder")?;
    let diag = check_weight_conditions(&cfg.window, cfg.bandwidth_rule, &ladder)?;
    let v = &diag.verdict;
    let mut out = Outcome::new(to_value(&diag)?);
    out.checks = vec![
        Check::flag("(i) bounded", v.i_bounded),
        Check::flag("(ii) decreasing", v.ii_decreasing),
        Check::flag("(iii) decreasing", v.iii_decreasing),
        Check::flag("(iv) decreasing", v.iv_decreasing),
    ];
    Ok(out)
}

fn cmd_eigen(cfg: &RunConfig, args: &EigenArgs) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (path, simulated) = match &args.input {
        Some(p) => (load_series(p)?, false),
        None => (simulate(&model, cfg.t_len, cfg.seed)?, true),
    };
    let b = cfg.bandwidth_rule.at(path.len());
    let est = lag_window_sdo(&path, &EstimationConfig::new(cfg.window.clone(), b, cfg.frequencies.clone())?)?;
    let mut per_freq = Vec::new();
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    for (k, op) in est.operators.iter().enumerate() {
        let lambda = cfg.frequencies[k];
        let sys = eigendecompose(op, args.count, lambda)?;
        let mut entry = to_value(&sys.summary())?;
        if simulated {
            if let Ok(f) = true_sdo(&model, lambda) {
                let truth = eigendecompose(&f, args.count, lambda)?;
                let hs = op.sub(&f)?.hs_norm();
                let dev = eigenvalue_deviation(&sys, &truth);
                let proj: Vec<f64> = (0..args.count).map(|j| projector_error(&sys, &truth, j)).collect::<Result<_>>()?;
                checks.push(Check::upper(format!("sup |β̂_j − β_j| at λ={lambda:.6}"), dev, hs * (1.0 + 1e-9) + 1e-14));
                entry["truth"] = json!({
                    "eigenvalues": truth.eigenvalues(),
                    "hs_error": hs,
                    "eigenvalue_deviation": dev,
                    "projector_errors": proj,
                });
            }
        }
        per_freq.push(entry);
        let fns: Vec<GridFn> = sys.eigenfunctions.clone();
        artifacts.push(Artifact::new(format!("eigenfunctions_{k}"), series_record(path.grid(), &fns)));
    }
    let mut out = Outcome::new(json!({ "T": path.len(), "bandwidth": b, "frequencies": per_freq }));
    out.checks = checks;
    out.artifacts = artifacts;
    Ok(out)
}

fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match &cfg.command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Estimate(a) => cmd_estimate(cfg, a),
        Command::Mc(a) => cmd_mc(cfg, a),
        Command::Rates(a) => cmd_rates(cfg, a),
        Command::Cumulants(a) => cmd_cumulants(cfg, a),
        Command::CheckWeights(a) => cmd_check_weights(cfg, a),
        Command::Eigen(a) => cmd_eigen(cfg, a),
    }
}

/// Run a resolved configuration, write outputs and return whether every
/// check passed.
pub fn run_config(cfg: &RunConfig) -> Result<bool> {
    let start = Instant::now();
    let outcome = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| execute(cfg))?,
        None => execute(cfg)?,
    };
    let pass = all_pass(&outcome.checks);
    let mut report = json!({
        "command": cfg.command.name(),
        "version": VERSION,
        "config": cfg,
        "result": outcome.result,
        "checks": outcome.checks,
        "pass": pass,
    });
    if cfg.format == Format::Csv {
        if let Some(dir) = &cfg.out {
            std::fs::create_dir_all(dir)?;
            for (name, text) in &outcome.tables {
                std::fs::write(dir.join(format!("{name}.csv")), text)?;
            }
        }
    }
    report["timing"] = json!({ "seconds": start.elapsed().as_secs_f64() });
    output::emit(&mut report, &outcome.artifacts, cfg.format, cfg.out.as_deref())?;
    for c in outcome.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {:.6e} (bound {})", c.name, c.value, c.bound);
    }
    Ok(pass)
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::resolve(&cli.common, &cli.command).and_then(|cfg| run_config(&cfg));
    match result {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
