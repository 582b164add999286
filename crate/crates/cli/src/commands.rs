//! One function per subcommand, each returning a serialisable outcome.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use spreadlab::certify::certify_well_spread;
use spreadlab::fano::{calibrate_sigma, lower_bound_pipeline};
use spreadlab::instances::{
    gen_counterexample, gen_gaussian_null, gen_hard_d_over_alpha, gen_hard_logd_over_alpha2, gen_planted, span_basis,
    Construction, CounterexampleKind,
};
use spreadlab::lowdeg::{degree4_distinguish_experiment, lowdeg_norm, LowDegMethod, LowDegParams};
use spreadlab::noise::{kl_shift, NbrParams, SymGeomParams};
use spreadlab::numerics::io::encode_dense;
use spreadlab::numerics::{read_matrix, DenseMatrix};
use spreadlab::regression::{gaussian_experiment, hardness_experiment, Estimator};
use spreadlab::spark::{compute_spark, reduction_consistency_check, reduction_delta};
use spreadlab::spreadness::{
    binomial, spread_witness_search, subspace_spread_exact, SpreadSpec, BASIS_TOL, DEFAULT_ENUMERATION_CAP,
};
use spreadlab::SeedStream;

use crate::error::CliError;
use crate::report::{format_float, write_atomic};

pub struct Outcome {
    pub method: String,
    pub summary: String,
    pub result: Value,
    pub table: Option<(Vec<String>, Vec<Vec<Value>>)>,
}

impl Outcome {
    fn new(method: &str, summary: String, result: Value) -> Self {
        Self { method: method.into(), summary, result, table: None }
    }
}

fn f(v: f64) -> String {
    format_float(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Gaussian,
    DOverAlpha,
    LogdOverAlpha2,
    Planted,
    RipNotSpread,
    SpreadNotRip,
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Inlier fraction for the hard constructions.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Noise amplitude; calibrated from --gamma when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Sparsity of the planted vector.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Gaussian part of the planted vector.
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    /// Apply a Haar rotation to the d-over-alpha design.
    #[arg(long)]
    pub rotate: bool,
    /// Where to write the generated matrix.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

fn required<T: Copy>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required for this kind")))
}

pub fn gen(a: &GenArgs, seed: u64) -> Result<Outcome, CliError> {
    let (design, meta): (DenseMatrix, Value) = match a.kind {
        GenKind::Gaussian => (gen_gaussian_null(a.n, a.d, seed)?, json!({})),
        GenKind::DOverAlpha | GenKind::LogdOverAlpha2 => {
            let alpha = required(a.alpha, "alpha")?;
            let c = if a.kind == GenKind::DOverAlpha { Construction::DOverAlpha } else { Construction::LogdOverAlpha2 };
            let sigma = match a.sigma {
                Some(s) => s,
                None => calibrate_sigma(c, a.gamma, a.n, a.d, alpha)?,
            };
            let b = match c {
                Construction::DOverAlpha => gen_hard_d_over_alpha(a.n, a.d, alpha, sigma, seed, a.rotate)?,
                Construction::LogdOverAlpha2 => gen_hard_logd_over_alpha2(a.n, a.d, alpha, sigma, seed)?,
            };
            let meta = json!({ "meta": b.meta, "noise": b.noise });
            (b.design, meta)
        }
        GenKind::Planted => {
            let p = NbrParams::new(required(a.rho, "rho")?, a.noise_sigma)?;
            let inst = gen_planted(a.n, a.d, p, seed)?;
            let spikes = inst.hidden.iter().filter(|x| x.abs() == p.spike()).count();
            (inst.observed, json!({ "params": p, "spike_count": spikes }))
        }
        GenKind::RipNotSpread | GenKind::SpreadNotRip => {
            let kind = if a.kind == GenKind::RipNotSpread { CounterexampleKind::RipNotSpread } else { CounterexampleKind::SpreadNotRip };
            (gen_counterexample(kind, a.n, a.d, seed)?, json!({ "counterexample": kind }))
        }
    };
    if let Some(path) = &a.matrix_out {
        write_atomic(path, &encode_dense(&design))?;
    }
    let result = json!({
        "kind": a.kind,
        "rows": design.rows(),
        "cols": design.cols(),
        "frobenius_norm": design.frobenius_norm(),
        "details": meta,
    });
    let summary = format!("{:?} {}x{} frobenius={}", a.kind, design.rows(), design.cols(), f(design.frobenius_norm()));
    Ok(Outcome::new("generator", summary, result))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadMode {
    /// Exact when the subset count is within the cap, heuristic otherwise.
    Auto,
    Exact,
    Heuristic,
}

#[derive(Debug, Args, Serialize)]
pub struct SpreadArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = SpreadMode::Auto)]
    pub method: SpreadMode,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u128,
}

pub fn spread_check(a: &SpreadArgs, seed: u64) -> Result<Outcome, CliError> {
    let x = read_matrix(&a.input)?.into_dense();
    let orthonormal = x.orthonormality_defect() <= BASIS_TOL;
    let basis = if orthonormal { x } else { span_basis(&x)? };
    let spec = SpreadSpec::l2(a.m, a.delta);
    spec.validate(basis.rows())?;
    let exact = match a.method {
        SpreadMode::Exact => true,
        SpreadMode::Heuristic => false,
        SpreadMode::Auto => binomial(basis.rows(), a.m) <= a.cap,
    };
    let verdict = if exact {
        subspace_spread_exact(&basis, spec, a.cap)?
    } else {
        spread_witness_search(&basis, spec, a.restarts, SeedStream::new(seed).child_seed("search", 0), &[])?
    };
    let summary = format!(
        "{:?} ({:?}) ratio={} m={} delta={}",
        verdict.status,
        verdict.method,
        f(verdict.achieved_ratio),
        a.m,
        f(a.delta)
    );
    let method = serde_json::to_value(verdict.method)?.as_str().unwrap_or_default().to_string();
    let result = json!({
        "n": basis.rows(),
        "dimension": basis.cols(),
        "basis_from_design": !orthonormal,
        "verdict": verdict,
    });
    Ok(Outcome::new(&method, summary, result))
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    pub delta: f64,
    #[arg(long, default_value_t = spreadlab::certify::DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

pub fn certify(a: &CertifyArgs) -> Result<Outcome, CliError> {
    let x = read_matrix(&a.input)?.into_dense();
    let c = certify_well_spread(&x, a.delta, a.threshold)?;
    let summary = format!(
        "{:?} distortion<={} guaranteed_m={} n={}",
        c.verdict,
        f(c.distortion.upper),
        c.guaranteed_m,
        x.rows()
    )
    .replace("Yes", "YES")
    .replace("No ", "NO ");
    Ok(Outcome::new("distortion-certificate", summary, serde_json::to_value(&c)?))
}

#[derive(Debug, Args, Serialize)]
pub struct KlArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    /// One or more integer shifts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub shift: Vec<u64>,
}

pub fn kl(a: &KlArgs) -> Result<Outcome, CliError> {
    let p = SymGeomParams::new(0, a.lambda, a.alpha, 1.0)?;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for &s in &a.shift {
        let k = kl_shift(&p, s)?;
        rows.push(vec![json!(s), json!(k.kl), json!(k.d), json!(k.d_prime), json!(k.series)]);
        entries.push(json!({ "shift": s, "kl": k.kl, "d": k.d, "d_prime": k.d_prime, "series": k.series }));
    }
    let summary = entries
        .iter()
        .map(|e| format!("shift={} kl={}", e["shift"], f(e["kl"].as_f64().unwrap_or(f64::NAN))))
        .collect::<Vec<_>>()
        .join(", ");
    let mut out = Outcome::new("closed-form", summary, json!({ "alpha": a.alpha, "lambda": a.lambda, "entries": entries }));
    out.table = Some((["shift", "kl", "d", "d_prime", "series"].map(String::from).to_vec(), rows));
    Ok(out)
}

#[derive(Debug, Args, Serialize)]
pub struct FanoArgs {
    /// d-over-alpha or logd-over-alpha2.
    #[arg(long)]
    pub construction: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
}

pub fn fano(a: &FanoArgs, seed: u64) -> Result<Outcome, CliError> {
    let c: Construction = a.construction.parse()?;
    let r = lower_bound_pipeline(c, a.n, a.d, a.alpha, a.gamma, a.pairs, seed)?;
    let summary = format!("{} bound={} gamma={} meets_target={}", c.tag(), f(r.bound), f(a.gamma), r.meets_target);
    Ok(Outcome::new("fano-exact-kl", summary, serde_json::to_value(&r)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowdegMode {
    ExactDp,
    PaperBound,
}

#[derive(Debug, Args, Serialize)]
pub struct LowdegArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t = LowdegMode::ExactDp)]
    pub mode: LowdegMode,
}

pub fn lowdeg(a: &LowdegArgs) -> Result<Outcome, CliError> {
    let params = LowDegParams { n: a.n, d: a.d, rho: a.rho, sigma: a.sigma, degree: a.degree };
    let method = match a.mode {
        LowdegMode::ExactDp => LowDegMethod::ExactDp,
        LowdegMode::PaperBound => LowDegMethod::PaperBound,
    };
    let r = lowdeg_norm(&params, method)?;
    let rows = r
        .per_degree
        .iter()
        .map(|t| vec![json!(t.k), json!(t.sphere_moment), json!(t.inner_sum), json!(t.contribution), json!(t.ln_contribution)])
        .collect();
    let summary = format!("total={} ln_total={} degree={}", f(r.total), f(r.ln_total), a.degree);
    let tag = serde_json::to_value(method)?.as_str().unwrap_or_default().to_string();
    let mut out = Outcome::new(&tag, summary, serde_json::to_value(&r)?);
    out.table =
        Some((["k", "sphere_moment", "inner_sum", "contribution", "ln_contribution"].map(String::from).to_vec(), rows));
    Ok(out)
}

#[derive(Debug, Args, Serialize)]
pub struct DistinguishArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

pub fn distinguish(a: &DistinguishArgs, seed: u64) -> Result<Outcome, CliError> {
    let r = degree4_distinguish_experiment(a.n, a.d, NbrParams::new(a.rho, a.sigma)?, a.trials, seed)?;
    let summary = format!(
        "separation={} mean_null={} mean_planted={}",
        f(r.separation),
        f(r.mean_null),
        f(r.mean_planted)
    );
    Ok(Outcome::new("monte-carlo", summary, serde_json::to_value(&r)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressDesign {
    Gaussian,
    DOverAlpha,
    LogdOverAlpha2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    HuberIrls,
    LeastSquares,
    OracleInlierLs,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::HuberIrls => Estimator::HuberIrls,
            EstimatorArg::LeastSquares => Estimator::LeastSquares,
            EstimatorArg::OracleInlierLs => Estimator::OracleInlierLs,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct RegressArgs {
    #[arg(long, value_enum)]
    pub design: RegressDesign,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub alpha: f64,
    /// Target error for the hard constructions.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Geometric parameter of the Gaussian-design noise; defaults to 2α.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Noise amplitude for the Gaussian design.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::HuberIrls)]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    /// Huber threshold; defaults to the noise amplitude.
    #[arg(long)]
    pub tuning: Option<f64>,
}

pub fn regress(a: &RegressArgs, seed: u64) -> Result<Outcome, CliError> {
    let estimator: Estimator = a.estimator.into();
    let (result, errors) = match a.design {
        RegressDesign::Gaussian => {
            let noise = SymGeomParams::new(0, a.lambda.unwrap_or(2.0 * a.alpha), a.alpha, a.amplitude)?;
            let r = gaussian_experiment(a.n, a.d, noise, estimator, a.tuning, a.seeds, seed)?;
            let e = r.errors.clone();
            (serde_json::to_value(&r)?, e)
        }
        RegressDesign::DOverAlpha | RegressDesign::LogdOverAlpha2 => {
            let c = if a.design == RegressDesign::DOverAlpha { Construction::DOverAlpha } else { Construction::LogdOverAlpha2 };
            let r = hardness_experiment(c, a.n, a.d, a.alpha, a.gamma, estimator, a.seeds, seed)?;
            let e = r.errors.clone();
            (serde_json::to_value(&r)?, e)
        }
    };
    let summary = format!(
        "{} mean={} median={} std_error={} seeds={}",
        estimator.tag(),
        f(errors.mean),
        f(errors.median),
        f(errors.std_error),
        a.seeds
    );
    let rows = errors.param_errors.iter().enumerate().map(|(i, e)| vec![json!(i), json!(e)]).collect();
    let mut out = Outcome::new(estimator.tag(), summary, result);
    out.table = Some((vec!["seed_index".into(), "param_error".into()], rows));
    Ok(out)
}

#[derive(Debug, Args, Serialize)]
pub struct SparkArgs {
    /// Rational matrix file.
    #[arg(long)]
    pub input: PathBuf,
    /// Also run the reduction consistency check at this m.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = spreadlab::spark::DEFAULT_SPARK_CAP)]
    pub cap: usize,
}

pub fn spark(a: &SparkArgs) -> Result<Outcome, CliError> {
    let mat = read_matrix(&a.input)?.into_rational()?;
    let s = compute_spark(&mat, a.cap)?;
    let delta = reduction_delta(&mat)?;
    let check = match a.m {
        Some(m) => Some(reduction_consistency_check(&mat, m)?),
        None => None,
    };
    let spark_text = s.spark.map_or("infinite".to_string(), |k| k.to_string());
    let mut summary = format!("spark={spark_text} delta={}", delta.exact);
    if let Some(c) = &check {
        summary.push_str(&format!(" consistent={}", c.passed));
    }
    let result = json!({
        "spark": s.spark,
        "witness": s.witness_strings(),
        "delta": delta,
        "consistency": check,
    });
    Ok(Outcome::new("exact-enumeration", summary, result))
}
