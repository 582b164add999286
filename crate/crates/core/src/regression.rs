//! Oblivious-regression simulation: y = Xβ* + η, estimators and error metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fano::calibrate_sigma;
use crate::instances::{gen_gaussian_null, gen_hard_d_over_alpha, gen_hard_logd_over_alpha2, Construction};
use crate::noise::{symgeom_sample, SymGeomParams};
use crate::numerics::{cholesky_solve, norm2, DenseMatrix};
use crate::rng::{rng_from_seed, SeedStream};

pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    HuberIrls,
    LeastSquares,
    OracleInlierLs,
}

impl Estimator {
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::HuberIrls => "huber-irls",
            Estimator::LeastSquares => "least-squares",
            Estimator::OracleInlierLs => "oracle-inlier-ls",
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "huber-irls" | "huber" => Ok(Estimator::HuberIrls),
            "least-squares" | "ls" => Ok(Estimator::LeastSquares),
            "oracle-inlier-ls" | "oracle" => Ok(Estimator::OracleInlierLs),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    /// Indices with |ηᵢ| strictly below the noise amplitude σ.
    pub inliers: Vec<usize>,
}

pub fn simulate_observation(x: &DenseMatrix, beta_star: &[f64], noise: &SymGeomParams, seed: u64) -> Result<Observation> {
    if beta_star.len() != x.cols() {
        return Err(Error::Dimension(format!("beta has length {}, design has {} columns", beta_star.len(), x.cols())));
    }
    noise.validate()?;
    let eta = symgeom_sample(noise, x.rows(), &mut rng_from_seed(seed));
    let y = x.matvec(beta_star).into_iter().zip(&eta).map(|(a, e)| a + e).collect();
    let inliers = eta.iter().enumerate().filter(|(_, e)| e.abs() < noise.sigma).map(|(i, _)| i).collect();
    Ok(Observation { y, eta, inliers })
}

/// Ordinary least squares via the normal equations.
pub fn least_squares(x: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("y has length {}, design has {} rows", y.len(), x.rows())));
    }
    cholesky_solve(&x.gram(), &x.tmatvec(y))
}

fn weighted_least_squares(x: &DenseMatrix, y: &[f64], w: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
    let d = x.cols();
    let mut g = DenseMatrix::zeros(d, d);
    let mut b = vec![0.0; d];
    for &i in rows {
        let r = x.row(i);
        let wi = w[i];
        for a in 0..d {
            let wa = wi * r[a];
            b[a] += wa * y[i];
            for c in a..d {
                g[(a, c)] += wa * r[c];
            }
        }
    }
    for a in 0..d {
        for c in 0..a {
            g[(a, c)] = g[(c, a)];
        }
    }
    cholesky_solve(&g, &b)
}

/// Least squares on the given rows only.
pub fn estimate_oracle_inlier_ls(x: &DenseMatrix, y: &[f64], inliers: &[usize]) -> Result<Vec<f64>> {
    if let Some(&bad) = inliers.iter().find(|&&i| i >= x.rows()) {
        return Err(Error::Dimension(format!("inlier index {bad} out of range")));
    }
    let ones = vec![1.0; x.rows()];
    weighted_least_squares(x, y, &ones, inliers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HuberFit {
    pub estimate: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Huber M-estimator by iteratively reweighted least squares, started from
/// least squares. Rows of X that are identically zero carry no information
/// and are skipped.
pub fn estimate_huber(x: &DenseMatrix, y: &[f64], tuning: f64, max_iters: usize, tol: f64) -> Result<HuberFit> {
    if !(tuning > 0.0 && tuning.is_finite()) {
        return Err(Error::InvalidInput(format!("tuning = {tuning} must be positive")));
    }
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("y has length {}, design has {} rows", y.len(), x.rows())));
    }
    let rows: Vec<usize> = (0..x.rows()).filter(|&i| !x.is_zero_row(i)).collect();
    let mut w = vec![1.0; x.rows()];
    let mut beta = weighted_least_squares(x, y, &w, &rows)?;
    for it in 1..=max_iters {
        for &i in &rows {
            let r = (y[i] - crate::numerics::dot(x.row(i), &beta)).abs();
            w[i] = if r <= tuning { 1.0 } else { tuning / r };
        }
        let next = weighted_least_squares(x, y, &w, &rows)?;
        let step = norm2(&next.iter().zip(&beta).map(|(a, b)| a - b).collect::<Vec<_>>());
        let scale = 1.0 + norm2(&next);
        beta = next;
        if step <= tol * scale {
            return Ok(HuberFit { estimate: beta, iterations: it, converged: true });
        }
    }
    Ok(HuberFit { estimate: beta, iterations: max_iters, converged: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRun {
    pub estimator: Estimator,
    pub beta_star: Vec<f64>,
    pub y: Vec<f64>,
    pub estimate: Vec<f64>,
    /// ‖β̂ − β*‖².
    pub param_error: f64,
    /// ‖X(β̂ − β*)‖²/n.
    pub prediction_error: f64,
    pub converged: bool,
    pub seed: u64,
}

/// Simulates one observation and fits the chosen estimator. `tuning` is the
/// Huber threshold and defaults to the noise amplitude.
pub fn run_regression(
    x: &DenseMatrix,
    beta_star: &[f64],
    noise: &SymGeomParams,
    estimator: Estimator,
    tuning: Option<f64>,
    seed: u64,
) -> Result<RegressionRun> {
    let obs = simulate_observation(x, beta_star, noise, seed)?;
    let (estimate, converged) = match estimator {
        Estimator::HuberIrls => {
            let fit = estimate_huber(x, &obs.y, tuning.unwrap_or(noise.sigma), DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
            (fit.estimate, fit.converged)
        }
        Estimator::LeastSquares => (least_squares(x, &obs.y)?, true),
        Estimator::OracleInlierLs => (estimate_oracle_inlier_ls(x, &obs.y, &obs.inliers)?, true),
    };
    let diff: Vec<f64> = estimate.iter().zip(beta_star).map(|(a, b)| a - b).collect();
    let param_error = norm2(&diff).powi(2);
    let prediction_error = norm2(&x.matvec(&diff)).powi(2) / x.rows() as f64;
    Ok(RegressionRun {
        estimator,
        beta_star: beta_star.to_vec(),
        y: obs.y,
        estimate,
        param_error,
        prediction_error,
        converged,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub mean: f64,
    pub median: f64,
    pub std_error: f64,
    pub mean_prediction_error: f64,
    pub converged: usize,
    pub param_errors: Vec<f64>,
}

impl ErrorSummary {
    fn from_runs(runs: &[RegressionRun]) -> Self {
        let errors: Vec<f64> = runs.iter().map(|r| r.param_error).collect();
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = if errors.len() > 1 { errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
        Self {
            mean,
            median,
            std_error: (var / n).sqrt(),
            mean_prediction_error: runs.iter().map(|r| r.prediction_error).sum::<f64>() / n,
            converged: runs.iter().filter(|r| r.converged).count(),
            param_errors: errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub construction: Construction,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub estimator: Estimator,
    pub seeds: usize,
    pub seed: u64,
    pub errors: ErrorSummary,
    /// mean / γ.
    pub ratio_to_gamma: f64,
}

/// Builds the construction at the σ calibrated for γ, then averages the
/// estimator's error over β* drawn from the packing.
#[allow(clippy::too_many_arguments)]
pub fn hardness_experiment(
    construction: Construction,
    n: usize,
    d: usize,
    alpha: f64,
    gamma: f64,
    estimator: Estimator,
    seeds: usize,
    seed: u64,
) -> Result<HardnessReport> {
    if seeds == 0 {
        return Err(Error::InvalidInput("seeds must be positive".into()));
    }
    let sigma = calibrate_sigma(construction, gamma, n, d, alpha)?;
    let streams = SeedStream::new(seed);
    let bundle = match construction {
        Construction::DOverAlpha => gen_hard_d_over_alpha(n, d, alpha, sigma, streams.child_seed("bundle", 0), false)?,
        Construction::LogdOverAlpha2 => gen_hard_logd_over_alpha2(n, d, alpha, sigma, streams.child_seed("bundle", 0))?,
    };
    let runs = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let beta = bundle.sample_beta(&mut streams.fork_indexed("beta", s));
            run_regression(&bundle.design, &beta, &bundle.noise, estimator, None, streams.child_seed("noise", s))
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = ErrorSummary::from_runs(&runs);
    Ok(HardnessReport {
        construction,
        n,
        d,
        alpha,
        gamma,
        sigma,
        estimator,
        seeds,
        seed,
        ratio_to_gamma: errors.mean / gamma,
        errors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianReport {
    pub n: usize,
    pub d: usize,
    pub noise: SymGeomParams,
    pub estimator: Estimator,
    pub tuning: f64,
    pub seeds: usize,
    pub seed: u64,
    pub errors: ErrorSummary,
}

/// Fresh Gaussian design and β* ∼ N(0, I) per seed.
pub fn gaussian_experiment(
    n: usize,
    d: usize,
    noise: SymGeomParams,
    estimator: Estimator,
    tuning: Option<f64>,
    seeds: usize,
    seed: u64,
) -> Result<GaussianReport> {
    if seeds == 0 {
        return Err(Error::InvalidInput("seeds must be positive".into()));
    }
    let streams = SeedStream::new(seed);
    let runs = (0..seeds as u64)
        .into_par_iter()
        .map(|s| {
            let x = gen_gaussian_null(n, d, streams.child_seed("design", s))?;
            let beta = DenseMatrix::gaussian(d, 1, &mut streams.fork_indexed("beta", s)).into_vec();
            run_regression(&x, &beta, &noise, estimator, tuning, streams.child_seed("noise", s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianReport {
        n,
        d,
        noise,
        estimator,
        tuning: tuning.unwrap_or(noise.sigma),
        seeds,
        seed,
        errors: ErrorSummary::from_runs(&runs),
    })
}
