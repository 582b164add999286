//! Low-degree likelihood-ratio norm for the planted sparse vector problem.
//!
//! E_ν[L^{≤D}(A)²] = Σ_{k ≤ D} E⟨u, u′⟩^k · Σ_{|α| = k} Πᵢ (E h_{αᵢ}(x))²
//! with h_j the normalised Hermite polynomials and x ∼ NBR(ρ, σ).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::gen_gaussian_null;
use crate::noise::{nbr_sample, NbrParams};
use crate::numerics::{leverage_scores, DenseMatrix};
use crate::rng::SeedStream;

pub const MAX_DEGREE: usize = 128;

/// ln|x| for a big integer, accurate to double precision.
fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.abs().to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
}

/// (sign, ln|x|) of a rational; sign 0 means x = 0.
fn ln_rational(x: &BigRational) -> (i8, f64) {
    if x.is_zero() {
        return (0, f64::NEG_INFINITY);
    }
    let sign = if x.is_negative() { -1 } else { 1 };
    (sign, ln_bigint(x.numer()) - ln_bigint(x.denom()))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Integer coefficients of the probabilists' Hermite polynomials He_0..He_kmax,
/// lowest power first.
pub fn hermite_coefficients(k_max: usize) -> Vec<Vec<BigInt>> {
    let mut out: Vec<Vec<BigInt>> = vec![vec![BigInt::one()]];
    if k_max >= 1 {
        out.push(vec![BigInt::zero(), BigInt::one()]);
    }
    for k in 1..k_max {
        let mut next = vec![BigInt::zero(); k + 2];
        for (r, c) in out[k].iter().enumerate() {
            next[r + 1] += c;
        }
        for (r, c) in out[k - 1].iter().enumerate() {
            next[r] -= c * BigInt::from(k);
        }
        out.push(next);
    }
    out
}

/// Exact E x^r for r = 0..=r_max, treating ρ and σ as the exact binary
/// fractions they are stored as.
fn exact_moments(params: &NbrParams, r_max: usize) -> Vec<BigRational> {
    let rho = exact(params.rho);
    let sigma2 = exact(params.sigma) * exact(params.sigma);
    let one = BigRational::one();
    let rho_prime = &rho / (&one - (&one - &rho) * &sigma2);
    let inv_rho_prime = rho_prime.recip();
    let mut out = Vec::with_capacity(r_max + 1);
    let mut s_pow = one.clone(); // σ^r
    let mut dfact = BigInt::one(); // (r − 1)!!
    let mut spike = one.clone(); // ρ′^{−r/2}
    for r in 0..=r_max {
        if r % 2 == 1 {
            out.push(BigRational::zero());
            continue;
        }
        if r >= 2 {
            s_pow = &s_pow * &sigma2;
            dfact *= BigInt::from(r - 1);
            spike = &spike * &inv_rho_prime;
        }
        let gauss = (&one - &rho) * &s_pow * BigRational::from_integer(dfact.clone());
        out.push(gauss + &rho * &spike);
    }
    out
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// (sign, ln|E h_k(x)|) for k = 0..=k_max, exact up to the final logarithm.
pub fn hermite_moments_log(params: &NbrParams, k_max: usize) -> Vec<(i8, f64)> {
    let coeffs = hermite_coefficients(k_max);
    let moments = exact_moments(params, k_max);
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if k % 2 == 1 {
                return (0, f64::NEG_INFINITY);
            }
            let sum = c
                .iter()
                .zip(&moments)
                .filter(|(ci, _)| !ci.is_zero())
                .fold(BigRational::zero(), |acc, (ci, m)| acc + BigRational::from_integer(ci.clone()) * m);
            let (s, l) = ln_rational(&sum);
            (s, l - 0.5 * ln_factorial(k))
        })
        .collect()
}

/// E h_k(x) for x ∼ NBR(ρ, σ) with h_k = He_k/√k!.
pub fn hermite_moment(params: &NbrParams, k: usize) -> f64 {
    let (s, l) = hermite_moments_log(params, k)[k];
    f64::from(s) * l.exp()
}

/// T(0..=k_max), T(n) = T(n−1) + (n−1)T(n−2).
pub fn telephone_numbers(k_max: usize) -> Vec<BigUint> {
    let mut t = vec![BigUint::one()];
    if k_max >= 1 {
        t.push(BigUint::one());
    }
    for n in 2..=k_max {
        let next = &t[n - 1] + &t[n - 2] * BigUint::from(n - 1);
        t.push(next);
    }
    t
}

/// ln E⟨u, u′⟩^k for independent uniform unit vectors in R^d; −∞ for odd k.
pub fn sphere_moment_log(d: usize, k: usize) -> f64 {
    if k % 2 == 1 {
        return f64::NEG_INFINITY;
    }
    let d = d as f64;
    (0..k / 2).map(|i| ((2 * i + 1) as f64).ln() - (d + 2.0 * i as f64).ln()).sum()
}

pub fn sphere_moment(d: usize, k: usize) -> f64 {
    sphere_moment_log(d, k).exp()
}

/// The comparison bound (k/d)^{k/2}.
pub fn sphere_moment_bound(d: usize, k: usize) -> f64 {
    (k as f64 / d as f64).powf(k as f64 / 2.0)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn ln_binomial(n: usize, m: usize) -> f64 {
    if m > n {
        return f64::NEG_INFINITY;
    }
    (0..m).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// ln of Σ_{|α| = k, α ∈ Nⁿ} Πᵢ (E h_{αᵢ})² for every k ≤ k_max.
///
/// Parts are 0 or even and ≥ 4 (odd moments vanish, E h₂ = 0), so the sum is
/// Σ_m C(n, m)·[z^k] Q(z)^m with Q(z) = Σ_{j ≥ 4 even} (E h_j)² z^j.
pub fn inner_sums_log(params: &NbrParams, n: usize, k_max: usize) -> Vec<f64> {
    let h = hermite_moments_log(params, k_max);
    let ln_c: Vec<f64> = (0..=k_max)
        .map(|j| if j >= 4 && j % 2 == 0 && h[j].0 != 0 { 2.0 * h[j].1 } else { f64::NEG_INFINITY })
        .collect();
    let mut out = vec![f64::NEG_INFINITY; k_max + 1];
    out[0] = 0.0;
    // power[t] = ln [z^t] Q^m
    let mut power = vec![f64::NEG_INFINITY; k_max + 1];
    power[0] = 0.0;
    for m in 1..=(k_max / 4).min(n) {
        let mut next = vec![f64::NEG_INFINITY; k_max + 1];
        for t in 0..=k_max {
            if power[t] == f64::NEG_INFINITY {
                continue;
            }
            for j in 4..=k_max - t {
                if ln_c[j] != f64::NEG_INFINITY {
                    next[t + j] = log_add(next[t + j], power[t] + ln_c[j]);
                }
            }
        }
        power = next;
        let lb = ln_binomial(n, m);
        for k in 0..=k_max {
            if power[k] != f64::NEG_INFINITY {
                out[k] = log_add(out[k], lb + power[k]);
            }
        }
    }
    out
}

pub fn inner_sum(params: &NbrParams, n: usize, k: usize) -> f64 {
    inner_sums_log(params, n, k)[k].exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowDegParams {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub sigma: f64,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LowDegMethod {
    /// Exact sphere moments times the composition DP.
    ExactDp,
    /// Closed-form upper bound 1 + Σ_{k=4}^{D} (512 k⁴ n / (d² ρ²))^{k/4}.
    PaperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeTerm {
    pub k: usize,
    pub sphere_moment: f64,
    pub inner_sum: f64,
    pub contribution: f64,
    pub ln_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowDegReport {
    pub params: LowDegParams,
    pub method: LowDegMethod,
    pub total: f64,
    pub ln_total: f64,
    pub per_degree: Vec<DegreeTerm>,
    /// Set when σ² > 1/(D − 1), outside the regime where the moment bounds apply.
    pub regime_warning: Option<String>,
}

pub fn lowdeg_norm(params: &LowDegParams, method: LowDegMethod) -> Result<LowDegReport> {
    let LowDegParams { n, d, rho, sigma, degree } = *params;
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("n and d must be positive".into()));
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidInput(format!("degree {degree} exceeds the cap {MAX_DEGREE}")));
    }
    let nbr = NbrParams::new(rho, sigma)?;
    let regime_warning = (degree >= 2 && sigma * sigma > 1.0 / (degree as f64 - 1.0))
        .then(|| format!("sigma^2 = {:e} exceeds 1/(D-1) = {:e}", sigma * sigma, 1.0 / (degree as f64 - 1.0)));
    let mut per_degree = Vec::new();
    let mut ln_total = 0.0;
    match method {
        LowDegMethod::ExactDp => {
            let inner = inner_sums_log(&nbr, n, degree);
            for k in (4..=degree).step_by(2) {
                let ls = sphere_moment_log(d, k);
                let lc = ls + inner[k];
                ln_total = log_add(ln_total, lc);
                per_degree.push(DegreeTerm {
                    k,
                    sphere_moment: ls.exp(),
                    inner_sum: inner[k].exp(),
                    contribution: lc.exp(),
                    ln_contribution: lc,
                });
            }
        }
        LowDegMethod::PaperBound => {
            let (nf, df) = (n as f64, d as f64);
            for k in 4..=degree {
                let kf = k as f64;
                let base = 512.0 * kf.powi(4) * nf / (df * df * rho * rho);
                let lc = 0.25 * kf * base.ln();
                let ls = 0.5 * kf * (kf / df).ln();
                ln_total = log_add(ln_total, lc);
                per_degree.push(DegreeTerm {
                    k,
                    sphere_moment: ls.exp(),
                    inner_sum: (lc - ls).exp(),
                    contribution: lc.exp(),
                    ln_contribution: lc,
                });
            }
        }
    }
    Ok(LowDegReport { params: *params, method, total: ln_total.exp(), ln_total, per_degree, regime_warning })
}

/// Σᵢ ‖row i of an orthonormal basis of col span A‖⁴ = Σᵢ hᵢ², the degree-4
/// leverage statistic.
pub fn degree4_statistic(a: &DenseMatrix) -> Result<f64> {
    Ok(leverage_scores(a)?.iter().map(|h| h * h).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistinguishReport {
    pub n: usize,
    pub d: usize,
    pub params: NbrParams,
    pub trials: usize,
    pub seed: u64,
    pub mean_null: f64,
    pub mean_planted: f64,
    pub std_null: f64,
    pub std_planted: f64,
    pub pooled_std: f64,
    /// |mean_planted − mean_null| / pooled_std.
    pub separation: f64,
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Monte-Carlo comparison of the degree-4 statistic under the Gaussian null
/// and the planted distribution. The statistic depends only on the column
/// span, so planted samples skip the final Haar rotation.
pub fn degree4_distinguish_experiment(
    n: usize,
    d: usize,
    params: NbrParams,
    trials: usize,
    seed: u64,
) -> Result<DistinguishReport> {
    if trials < 10 {
        return Err(Error::InvalidInput(format!("trials = {trials} < 10")));
    }
    if d == 0 || d > n {
        return Err(Error::Dimension(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    let streams = SeedStream::new(seed);
    let mut null = Vec::with_capacity(trials);
    let mut planted = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let a = gen_gaussian_null(n, d, streams.child_seed("null", t))?;
        null.push(degree4_statistic(&a)?);
        let ps = SeedStream::new(streams.child_seed("planted", t));
        let v = nbr_sample(&params, n, &mut ps.fork("hidden"));
        let mut y = DenseMatrix::gaussian(n, d, &mut ps.fork("design"));
        for (i, &vi) in v.iter().enumerate() {
            y[(i, 0)] = vi;
        }
        planted.push(degree4_statistic(&y)?);
    }
    let (mean_null, std_null) = mean_std(&null);
    let (mean_planted, std_planted) = mean_std(&planted);
    let pooled_std = (0.5 * (std_null * std_null + std_planted * std_planted)).sqrt();
    Ok(DistinguishReport {
        n,
        d,
        params,
        trials,
        seed,
        mean_null,
        mean_planted,
        std_null,
        std_planted,
        pooled_std,
        separation: (mean_planted - mean_null).abs() / pooled_std,
    })
}
