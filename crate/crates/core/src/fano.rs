//! Fano-type minimax lower bounds for the hard constructions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{gen_hard_d_over_alpha, gen_hard_logd_over_alpha2, Construction, InstanceBundle};
use crate::noise::kl_shift;
use crate::numerics::norm2;
use crate::rng::SeedStream;

/// Observations X(β − β′)/σ must be this close to integers.
pub const INTEGER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoInput {
    pub separation: f64,
    pub log_cardinality: f64,
    pub max_kl: f64,
}

/// separation²/4 · (1 − (max_kl + log 2)/log|B|), clamped at 0.
pub fn fano_bound(input: &FanoInput) -> Result<f64> {
    let FanoInput { separation, log_cardinality, max_kl } = *input;
    if !(log_cardinality > 0.0 && log_cardinality.is_finite()) {
        return Err(Error::InvalidInput(format!("log_cardinality = {log_cardinality} must be positive")));
    }
    if !(separation.is_finite() && max_kl.is_finite() && max_kl >= 0.0) {
        return Err(Error::InvalidInput("separation and max_kl must be finite, max_kl >= 0".into()));
    }
    let factor = 1.0 - (max_kl + std::f64::consts::LN_2) / log_cardinality;
    Ok((0.25 * separation * separation * factor).max(0.0))
}

/// Per-shift KL values for one bundle, computed once each.
#[derive(Debug, Default)]
pub struct KlCache {
    values: HashMap<u64, f64>,
}

impl KlCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&mut self, bundle: &InstanceBundle, shift: u64) -> Result<f64> {
        if shift == 0 {
            return Ok(0.0);
        }
        if let Some(&v) = self.values.get(&shift) {
            return Ok(v);
        }
        let v = kl_shift(&bundle.noise, shift)?.kl;
        self.values.insert(shift, v);
        Ok(v)
    }
}

/// Integer shifts round(|X(β − β′)|ᵢ/σ).
pub fn realized_shifts(bundle: &InstanceBundle, beta: &[f64], beta_prime: &[f64]) -> Result<Vec<u64>> {
    let diff: Vec<f64> = beta.iter().zip(beta_prime).map(|(a, b)| a - b).collect();
    bundle
        .design
        .matvec(&diff)
        .into_iter()
        .map(|x| {
            let z = x / bundle.meta.sigma;
            let r = z.round();
            if (z - r).abs() > INTEGER_TOL {
                Err(Error::NotIntegerShift { value: z })
            } else {
                Ok(r.abs() as u64)
            }
        })
        .collect()
}

/// Σᵢ KL(G(λ) ‖ G(Δᵢ, λ)) by the chain rule over independent coordinates.
pub fn construction_kl(bundle: &InstanceBundle, beta: &[f64], beta_prime: &[f64]) -> Result<f64> {
    construction_kl_cached(bundle, beta, beta_prime, &mut KlCache::new())
}

pub fn construction_kl_cached(
    bundle: &InstanceBundle,
    beta: &[f64],
    beta_prime: &[f64],
    cache: &mut KlCache,
) -> Result<f64> {
    let shifts = realized_shifts(bundle, beta, beta_prime)?;
    let mut total = 0.0;
    for s in shifts {
        total += cache.get(bundle, s)?;
    }
    Ok(total)
}

/// σ at which the construction's Fano bound is designed to reach γ.
pub fn calibrate_sigma(construction: Construction, gamma: f64, n: usize, d: usize, alpha: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} must be positive")));
    }
    let (n, d) = (n as f64, d as f64);
    let s2 = match construction {
        Construction::DOverAlpha => 400.0 * gamma * n * alpha / d,
        Construction::LogdOverAlpha2 => 800.0 * gamma * n * alpha * alpha / d.ln(),
    };
    Ok(s2.sqrt())
}

/// [`calibrate_sigma`] keyed by tag string.
pub fn calibrate_sigma_tag(tag: &str, gamma: f64, n: usize, d: usize, alpha: f64) -> Result<f64> {
    calibrate_sigma(tag.parse()?, gamma, n, d, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlSource {
    /// Every pair has the same KL, computed exactly.
    Exact,
    /// Maximum over sampled pairs.
    Sampled,
    /// The uniform analytic cap m·8α·log d.
    AnalyticCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub construction: Construction,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub m_or_k: usize,
    pub gamma_target: f64,
    pub sigma_used: f64,
    pub separation: f64,
    pub log_cardinality: f64,
    pub max_kl: f64,
    pub sampled_max_kl: f64,
    pub analytic_kl_cap: Option<f64>,
    pub kl_binding: KlSource,
    /// max_kl / log|B|.
    pub kl_budget_used: f64,
    pub pairs: usize,
    pub bound: f64,
    pub meets_target: bool,
}

/// Builds the construction at the calibrated σ and evaluates the Fano bound
/// from realised KL values.
pub fn lower_bound_pipeline(
    construction: Construction,
    n: usize,
    d: usize,
    alpha: f64,
    gamma: f64,
    pairs: usize,
    seed: u64,
) -> Result<LowerBoundReport> {
    let sigma = calibrate_sigma(construction, gamma, n, d, alpha)?;
    let streams = SeedStream::new(seed);
    let bundle = match construction {
        Construction::DOverAlpha => gen_hard_d_over_alpha(n, d, alpha, sigma, streams.child_seed("bundle", 0), false)?,
        Construction::LogdOverAlpha2 => gen_hard_logd_over_alpha2(n, d, alpha, sigma, streams.child_seed("bundle", 0))?,
    };
    let mut rng = streams.fork("pairs");
    let mut cache = KlCache::new();
    let mut sampled_max: f64 = 0.0;
    let mut min_sep = f64::INFINITY;
    let mut used = 0;
    if construction == Construction::LogdOverAlpha2 {
        let mut e0 = vec![0.0; d];
        let mut e1 = vec![0.0; d];
        e0[0] = 1.0;
        e1[1] = 1.0;
        let (b0, b1) = (bundle.beta_from_label(&e0), bundle.beta_from_label(&e1));
        sampled_max = construction_kl_cached(&bundle, &b0, &b1, &mut cache)?;
        used += 1;
    }
    for _ in 0..pairs {
        let b1 = bundle.sample_beta(&mut rng);
        let b2 = bundle.sample_beta(&mut rng);
        let sep = norm2(&b1.iter().zip(&b2).map(|(a, b)| a - b).collect::<Vec<_>>());
        if sep == 0.0 {
            continue;
        }
        min_sep = min_sep.min(sep);
        sampled_max = sampled_max.max(construction_kl_cached(&bundle, &b1, &b2, &mut cache)?);
        used += 1;
    }
    let (separation, log_cardinality, max_kl, cap, binding) = match construction {
        Construction::LogdOverAlpha2 => {
            (bundle.meta.separation, (d as f64).ln(), sampled_max, None, KlSource::Exact)
        }
        Construction::DOverAlpha => {
            let cap = bundle.meta.m_or_k as f64 * 8.0 * alpha * (d as f64).ln();
            let sep = min_sep.min(bundle.meta.separation);
            let (max_kl, binding) =
                if cap >= sampled_max { (cap, KlSource::AnalyticCap) } else { (sampled_max, KlSource::Sampled) };
            (sep, d as f64 * (d as f64).ln(), max_kl, Some(cap), binding)
        }
    };
    let bound = fano_bound(&FanoInput { separation, log_cardinality, max_kl })?;
    Ok(LowerBoundReport {
        construction,
        n,
        d,
        alpha,
        m_or_k: bundle.meta.m_or_k,
        gamma_target: gamma,
        sigma_used: sigma,
        separation,
        log_cardinality,
        max_kl,
        sampled_max_kl: sampled_max,
        analytic_kl_cap: cap,
        kl_binding: binding,
        kl_budget_used: max_kl / log_cardinality,
        pairs: used,
        bound,
        meets_target: bound >= gamma,
    })
}
