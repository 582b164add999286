//! Symmetric geometric noise and the noisy Bernoulli-Rademacher law.

use rand::Rng as _;
use rand_distr::{Distribution, Geometric, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Closed form and series must agree this closely.
pub const KL_CROSSCHECK_TOL: f64 = 1e-9;
const SERIES_MAX_TERMS: usize = 200_000;

/// σ·G(c, λ) with an atom of mass α at c:
/// p(k) = α at k = c, (1 − α)/2·λ(1 − λ)^{|k−c|−1} otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymGeomParams {
    pub c: i64,
    pub lambda: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl SymGeomParams {
    pub fn new(c: i64, lambda: f64, alpha: f64, sigma: f64) -> Result<Self> {
        let p = Self { c, lambda, alpha, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.lambda) {
            return Err(Error::InvalidInput(format!("lambda = {} outside (0, 1)", self.lambda)));
        }
        if !open_unit(self.alpha) {
            return Err(Error::InvalidInput(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma = {} must be positive", self.sigma)));
        }
        Ok(())
    }

    pub fn pmf(&self, k: i64) -> f64 {
        symgeom_pmf(self, k)
    }
}

pub fn symgeom_pmf(params: &SymGeomParams, k: i64) -> f64 {
    let j = (k - params.c).unsigned_abs();
    if j == 0 {
        params.alpha
    } else {
        0.5 * (1.0 - params.alpha) * params.lambda * geometric_tail(params.lambda, j - 1)
    }
}

/// (1 − λ)^j, accurate for tiny λ.
fn geometric_tail(lambda: f64, j: u64) -> f64 {
    (j as f64 * (-lambda).ln_1p()).exp()
}

/// Draws σ·(c + K) with K ∼ G(0, λ) carrying the atom α.
pub fn symgeom_sample(params: &SymGeomParams, count: usize, rng: &mut Rng) -> Vec<f64> {
    let geo = Geometric::new(params.lambda).expect("lambda validated");
    (0..count)
        .map(|_| {
            let k = if rng.random::<f64>() < params.alpha {
                0
            } else {
                let j = 1 + geo.sample(rng) as i64;
                if rng.random::<bool>() {
                    j
                } else {
                    -j
                }
            };
            params.sigma * (params.c + k) as f64
        })
        .collect()
}

/// KL(G(0, λ) ‖ G(Δ, λ)) split into the geometric-part term D and the
/// atom term D′, plus the series value used to cross-check them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlShift {
    pub kl: f64,
    pub d: f64,
    pub d_prime: f64,
    pub series: f64,
}

/// Closed-form D(λ, Δ).
pub fn kl_d_term(lambda: f64, alpha: f64, shift: u64) -> f64 {
    let dl = shift as f64;
    let log_q = (-lambda).ln_1p(); // log(1 − λ) < 0
    let big_l = -log_q;
    // 2λΔ + 2((1−λ)^Δ − 1) + λ²Δ(1−λ)^{Δ−1}
    let bracket = 2.0 * lambda * dl + 2.0 * (dl * log_q).exp_m1() + lambda * lambda * dl * ((dl - 1.0) * log_q).exp();
    0.5 * (1.0 - alpha) / lambda * big_l * bracket
}

/// Closed-form D′(λ, Δ) = (α − r)·log(α / r), r = (1 − α)λ(1 − λ)^{Δ−1}/2.
pub fn kl_d_prime_term(lambda: f64, alpha: f64, shift: u64) -> f64 {
    let r = 0.5 * (1.0 - alpha) * lambda * geometric_tail(lambda, shift - 1);
    (alpha - r) * (alpha / r).ln()
}

/// Independent series oracle: explicit summation over a window around
/// [0, Δ] plus the exact geometric tails, where log(p/q) is ±ΔL.
pub fn kl_series(lambda: f64, alpha: f64, shift: u64) -> f64 {
    let p = SymGeomParams { c: 0, lambda, alpha, sigma: 1.0 };
    let q = SymGeomParams { c: shift as i64, ..p };
    let big_l = -(-lambda).ln_1p();
    let needed = (40.0 / big_l).ceil();
    let window = if needed.is_finite() { (needed as usize).min(SERIES_MAX_TERMS) } else { SERIES_MAX_TERMS };
    let lo = -(window as i64);
    let hi = shift as i64 + window as i64;
    let log_q = (-lambda).ln_1p();
    let log_base = (0.5 * (1.0 - alpha) * lambda).ln();
    let log_pmf = |law: &SymGeomParams, k: i64| match (k - law.c).unsigned_abs() {
        0 => alpha.ln(),
        j => log_base + (j - 1) as f64 * log_q,
    };
    let mut sum = 0.0;
    // Left edge first so small terms accumulate before large ones.
    for k in lo..=hi {
        let lp = log_pmf(&p, k);
        sum += lp.exp() * (lp - log_pmf(&q, k));
    }
    // Σ_{k < lo} p(k) = (1−α)/2·(1−λ)^{window}; log ratio ΔL there.
    let tail_left = 0.5 * (1.0 - alpha) * geometric_tail(lambda, window as u64);
    // Σ_{k > hi} p(k) = (1−α)/2·(1−λ)^{hi}; log ratio −ΔL there.
    let tail_right = 0.5 * (1.0 - alpha) * geometric_tail(lambda, hi as u64);
    sum + (tail_left - tail_right) * shift as f64 * big_l
}

/// KL(G(0, λ) ‖ G(Δ, λ)) for an integer shift Δ ≥ 1. Independent of σ.
pub fn kl_shift(params: &SymGeomParams, shift: u64) -> Result<KlShift> {
    params.validate()?;
    if shift == 0 {
        return Err(Error::InvalidInput("shift must be >= 1".into()));
    }
    let d = kl_d_term(params.lambda, params.alpha, shift);
    let d_prime = kl_d_prime_term(params.lambda, params.alpha, shift);
    let series = kl_series(params.lambda, params.alpha, shift);
    let kl = d + d_prime;
    if (kl - series).abs() > KL_CROSSCHECK_TOL {
        return Err(Error::FormulaMismatch { closed: kl, series });
    }
    Ok(KlShift { kl, d, d_prime, series })
}

/// [`kl_shift`] for a real shift that must be an integer.
pub fn kl_shift_real(params: &SymGeomParams, shift: f64) -> Result<KlShift> {
    let r = shift.abs().round();
    if (shift.abs() - r).abs() > 1e-6 {
        return Err(Error::NotIntegerShift { value: shift });
    }
    kl_shift(params, r as u64)
}

/// x ∼ N(0, σ²) with probability 1 − ρ, ±ρ′^{−1/2} with probability ρ/2
/// each, where ρ′ = ρ / (1 − (1 − ρ)σ²) makes E x² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbrParams {
    pub rho: f64,
    pub sigma: f64,
    pub rho_prime: f64,
}

impl NbrParams {
    pub fn new(rho: f64, sigma: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidInput(format!("rho = {rho} outside (0, 1)")));
        }
        if !(sigma >= 0.0 && sigma * sigma * (1.0 - rho) < 1.0) {
            return Err(Error::InvalidInput(format!("sigma = {sigma} outside [0, 1/sqrt(1 - rho))")));
        }
        let rho_prime = rho / (1.0 - (1.0 - rho) * sigma * sigma);
        Ok(Self { rho, sigma, rho_prime })
    }

    /// Magnitude of the spike entries, ρ′^{−1/2}.
    pub fn spike(&self) -> f64 {
        self.rho_prime.sqrt().recip()
    }
}

pub fn nbr_sample(params: &NbrParams, count: usize, rng: &mut Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, params.sigma).expect("sigma validated");
    let spike = params.spike();
    (0..count)
        .map(|_| {
            if rng.random::<f64>() < params.rho {
                if rng.random::<bool>() {
                    spike
                } else {
                    -spike
                }
            } else {
                normal.sample(rng)
            }
        })
        .collect()
}

/// (r − 1)!! for even r, as a float.
pub fn double_factorial_odd(r: u32) -> f64 {
    (1..r).step_by(2).map(f64::from).product()
}

/// E x^r: 0 for odd r, (1 − ρ)σ^r(r − 1)!! + ρ·ρ′^{−r/2} for even r.
pub fn nbr_moment(params: &NbrParams, r: u32) -> f64 {
    if r % 2 == 1 {
        return 0.0;
    }
    let ri = r as i32;
    (1.0 - params.rho) * params.sigma.powi(ri) * double_factorial_odd(r) + params.rho * params.rho_prime.powi(-ri / 2)
}
