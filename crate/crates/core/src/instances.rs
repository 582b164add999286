//! Generators: Gaussian null, planted sparse vector, the two hard regression
//! constructions and the RIP/spreadness counterexamples.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{nbr_sample, NbrParams, SymGeomParams};
use crate::numerics::{
    column_space_basis, extreme_singular_values, haar_orthogonal, norm2, orthonormal_basis, DenseMatrix,
};
use crate::rng::{Rng, SeedStream};
use crate::spreadness::{spread_witness_search, SpreadSpec};

const SCREEN_ATTEMPTS: usize = 10;
const SCREEN_RESTARTS: usize = 5;
const SEPARATION_PAIRS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Construction {
    /// Rademacher-preimage packing with m = ⌈d/(50α)⌉ informative rows.
    #[serde(rename = "d-over-alpha")]
    DOverAlpha,
    /// Orthogonal-columns packing with k = ⌈log d/(200α²)⌉ copies.
    #[serde(rename = "logd-over-alpha2")]
    LogdOverAlpha2,
}

impl Construction {
    pub fn tag(self) -> &'static str {
        match self {
            Construction::DOverAlpha => "d-over-alpha",
            Construction::LogdOverAlpha2 => "logd-over-alpha2",
        }
    }
}

impl std::str::FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "d-over-alpha" => Ok(Construction::DOverAlpha),
            "logd-over-alpha2" => Ok(Construction::LogdOverAlpha2),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub tag: Construction,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// m for d-over-alpha, k for logd-over-alpha2.
    pub m_or_k: usize,
    pub seed: u64,
    /// Minimum pairwise ‖β − β′‖ (sampled pairs for d-over-alpha, exact otherwise).
    pub separation: f64,
    /// Provable lower bound on the separation of distinct packing points.
    pub separation_lower_bound: f64,
    pub claimed_spread: Option<SpreadSpec>,
    pub screen_attempts: usize,
    pub rotated: bool,
}

#[derive(Debug, Clone)]
enum Sampler {
    /// β = σ·Rᵀ·Bᵀ(Yv)/√n with v uniform in [d]^d.
    DOverAlpha { y: DenseMatrix, basis: DenseMatrix, rotation: Option<DenseMatrix> },
    /// β_j = σ·√(2k/n)·q_j with j uniform in [d].
    LogdOverAlpha2 { q: DenseMatrix },
}

/// A design, its packing sampler, its noise law and metadata.
#[derive(Debug, Clone)]
pub struct InstanceBundle {
    pub design: DenseMatrix,
    pub noise: SymGeomParams,
    pub meta: InstanceMeta,
    sampler: Sampler,
}

impl InstanceBundle {
    /// Draws a packing point.
    pub fn sample_beta(&self, rng: &mut Rng) -> Vec<f64> {
        let d = self.meta.d;
        match &self.sampler {
            Sampler::DOverAlpha { .. } => {
                let v: Vec<f64> = (0..d).map(|_| rng.random_range(1..=d) as f64).collect();
                self.beta_from_label(&v)
            }
            Sampler::LogdOverAlpha2 { .. } => {
                let j = rng.random_range(0..d);
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                self.beta_from_label(&e)
            }
        }
    }

    /// The packing point with label `v` (v ∈ [d]^d for d-over-alpha; a
    /// coordinate vector for logd-over-alpha2).
    pub fn beta_from_label(&self, v: &[f64]) -> Vec<f64> {
        let sigma = self.meta.sigma;
        let n = self.meta.n as f64;
        match &self.sampler {
            Sampler::DOverAlpha { y, basis, rotation } => {
                let u = y.matvec(v);
                let b: Vec<f64> = basis.tmatvec(&u).into_iter().map(|x| sigma * x / n.sqrt()).collect();
                match rotation {
                    Some(r) => r.tmatvec(&b),
                    None => b,
                }
            }
            Sampler::LogdOverAlpha2 { q } => {
                let scale = sigma * (2.0 * self.meta.m_or_k as f64 / n).sqrt();
                q.matvec(v).into_iter().map(|x| scale * x).collect()
            }
        }
    }

    /// The m × d Rademacher matrix of a d-over-alpha bundle.
    pub fn rademacher_factor(&self) -> Option<&DenseMatrix> {
        match &self.sampler {
            Sampler::DOverAlpha { y, .. } => Some(y),
            Sampler::LogdOverAlpha2 { .. } => None,
        }
    }

    /// Number of leading rows that can be nonzero.
    pub fn informative_rows(&self) -> usize {
        match self.meta.tag {
            Construction::DOverAlpha => self.meta.m_or_k,
            Construction::LogdOverAlpha2 => 2 * self.meta.m_or_k * self.meta.d,
        }
    }
}

pub fn gen_gaussian_null(n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::Dimension(format!("empty shape {n}x{d}")));
    }
    Ok(DenseMatrix::gaussian(n, d, &mut SeedStream::new(seed).fork("design")))
}

/// m = ⌈d/(50α)⌉.
pub fn rows_d_over_alpha(d: usize, alpha: f64) -> usize {
    (d as f64 / (50.0 * alpha)).ceil() as usize
}

/// k = ⌈ln d/(200α²)⌉.
pub fn copies_logd_over_alpha2(d: usize, alpha: f64) -> usize {
    ((d as f64).ln() / (200.0 * alpha * alpha)).ceil() as usize
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("alpha = {alpha} outside (0, 1)")))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("sigma = {sigma} must be positive")))
    }
}

fn min_sampled_separation(bundle: &InstanceBundle, rng: &mut Rng) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..SEPARATION_PAIRS {
        let b1 = bundle.sample_beta(rng);
        let b2 = bundle.sample_beta(rng);
        let dist = norm2(&b1.iter().zip(&b2).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist > 0.0 {
            best = best.min(dist);
        }
    }
    best
}

/// The d-over-alpha construction: X = [√n·B; 0]·R where B is an orthonormal
/// basis of a screened m × d Rademacher matrix Y.
pub fn gen_hard_d_over_alpha(
    n: usize,
    d: usize,
    alpha: f64,
    sigma: f64,
    seed: u64,
    dense_rotation: bool,
) -> Result<InstanceBundle> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    if d < 3 {
        return Err(Error::Dimension(format!("d = {d} < 3")));
    }
    let m = rows_d_over_alpha(d, alpha);
    if m > n {
        return Err(Error::Dimension(format!("m = {m} exceeds n = {n}")));
    }
    if m < d {
        return Err(Error::Dimension(format!(
            "m = {m} < d = {d}: the Rademacher factor cannot have full column rank"
        )));
    }
    let streams = SeedStream::new(seed);
    let mut design_rng = streams.fork("design");
    let screen = (m >= 4 * d).then(|| SpreadSpec::l2(m.div_ceil(20), 0.9));
    let mut attempts = 0;
    let (y, basis) = loop {
        if attempts == SCREEN_ATTEMPTS {
            return Err(Error::ScreenFailed { attempts });
        }
        attempts += 1;
        let y = DenseMatrix::rademacher(m, d, &mut design_rng);
        let Ok(basis) = orthonormal_basis(&y) else { continue };
        if let Some(spec) = screen {
            let v = spread_witness_search(&basis, spec, SCREEN_RESTARTS, streams.child_seed("screen", attempts as u64), &[])?;
            if v.is_refuted() {
                continue;
            }
        }
        break (y, basis);
    };
    let rotation = dense_rotation.then(|| haar_orthogonal(d, &mut streams.fork("rotation")));
    let scale = (n as f64).sqrt();
    let mut x = DenseMatrix::zeros(n, d);
    for i in 0..m {
        for j in 0..d {
            x[(i, j)] = scale * basis[(i, j)];
        }
    }
    if let Some(r) = &rotation {
        x = x.matmul(r)?;
    }
    let sigma_min_y = extreme_singular_values(&y)?.sigma_min;
    let lambda = 2.0 * alpha * (d as f64).powi(-5);
    let mut bundle = InstanceBundle {
        design: x,
        noise: SymGeomParams::new(0, lambda, alpha, sigma)?,
        meta: InstanceMeta {
            tag: Construction::DOverAlpha,
            n,
            d,
            alpha,
            sigma,
            lambda,
            m_or_k: m,
            seed,
            separation: 0.0,
            separation_lower_bound: sigma * sigma_min_y / scale,
            claimed_spread: screen,
            screen_attempts: attempts,
            rotated: dense_rotation,
        },
        sampler: Sampler::DOverAlpha { y, basis, rotation },
    };
    bundle.meta.separation = min_sampled_separation(&bundle, &mut streams.fork("separation"));
    Ok(bundle)
}

/// The logd-over-alpha2 construction: X = [√(n/(2k))·(k copies of [Qᵀ; Qᵀ]); 0]
/// with Q Haar-orthogonal.
pub fn gen_hard_logd_over_alpha2(n: usize, d: usize, alpha: f64, sigma: f64, seed: u64) -> Result<InstanceBundle> {
    check_alpha(alpha)?;
    check_sigma(sigma)?;
    if d < 5 {
        return Err(Error::Dimension(format!("d = {d} < 5")));
    }
    let k = copies_logd_over_alpha2(d, alpha);
    if n < 2 * k * d {
        return Err(Error::Dimension(format!("n = {n} < 2kd = {}", 2 * k * d)));
    }
    let streams = SeedStream::new(seed);
    let q = haar_orthogonal(d, &mut streams.fork("rotation"));
    let scale = (n as f64 / (2.0 * k as f64)).sqrt();
    let mut x = DenseMatrix::zeros(n, d);
    for block in 0..2 * k {
        for i in 0..d {
            for j in 0..d {
                x[(block * d + i, j)] = scale * q[(j, i)];
            }
        }
    }
    let separation = sigma * (4.0 * k as f64 / n as f64).sqrt();
    let lambda = 2.0 * alpha;
    Ok(InstanceBundle {
        design: x,
        noise: SymGeomParams::new(0, lambda, alpha, sigma)?,
        meta: InstanceMeta {
            tag: Construction::LogdOverAlpha2,
            n,
            d,
            alpha,
            sigma,
            lambda,
            m_or_k: k,
            seed,
            separation,
            separation_lower_bound: separation,
            claimed_spread: None,
            screen_attempts: 0,
            rotated: false,
        },
        sampler: Sampler::LogdOverAlpha2 { q },
    })
}

/// Smallest n at which the logd-over-alpha2 construction exists.
pub fn min_n_logd_over_alpha2(d: usize, alpha: f64) -> usize {
    2 * copies_logd_over_alpha2(d, alpha) * d
}

/// A = [v | G]·Q with v ∼ NBR(ρ, σ)ⁿ, G Gaussian and Q Haar.
#[derive(Debug, Clone)]
pub struct PlantedInstance {
    pub observed: DenseMatrix,
    pub hidden: Vec<f64>,
    pub params: NbrParams,
    pub rotation: DenseMatrix,
}

pub fn gen_planted(n: usize, d: usize, params: NbrParams, seed: u64) -> Result<PlantedInstance> {
    if d == 0 || d > n {
        return Err(Error::Dimension(format!("need 1 <= d <= n, got d = {d}, n = {n}")));
    }
    let streams = SeedStream::new(seed);
    let hidden = nbr_sample(&params, n, &mut streams.fork("hidden"));
    let mut y = DenseMatrix::gaussian(n, d, &mut streams.fork("design"));
    for (i, &vi) in hidden.iter().enumerate() {
        y[(i, 0)] = vi;
    }
    let rotation = haar_orthogonal(d, &mut streams.fork("rotation"));
    let observed = y.matmul(&rotation)?;
    Ok(PlantedInstance { observed, hidden, params, rotation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CounterexampleKind {
    /// [[1, 0], [0, W/√(n−1)]]: near-isometry whose span contains e₁.
    RipNotSpread,
    /// [v | W/√n] with v parallel to W's first column: well spread, singular.
    SpreadNotRip,
}

impl std::str::FromStr for CounterexampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rip-not-spread" => Ok(Self::RipNotSpread),
            "spread-not-rip" => Ok(Self::SpreadNotRip),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

pub fn gen_counterexample(kind: CounterexampleKind, n: usize, d: usize, seed: u64) -> Result<DenseMatrix> {
    if n < 2 || d < 2 {
        return Err(Error::Dimension(format!("need n, d >= 2, got {n}x{d}")));
    }
    let mut rng = SeedStream::new(seed).fork("design");
    match kind {
        CounterexampleKind::RipNotSpread => {
            let w = DenseMatrix::gaussian(n - 1, d - 1, &mut rng);
            let s = ((n - 1) as f64).sqrt().recip();
            Ok(DenseMatrix::from_fn(n, d, |i, j| match (i, j) {
                (0, 0) => 1.0,
                (0, _) | (_, 0) => 0.0,
                _ => s * w[(i - 1, j - 1)],
            }))
        }
        CounterexampleKind::SpreadNotRip => {
            let w = DenseMatrix::gaussian(n, d - 1, &mut rng);
            let s = (n as f64).sqrt().recip();
            Ok(DenseMatrix::from_fn(n, d, |i, j| if j == 0 { s * w[(i, 0)] } else { s * w[(i, j - 1)] }))
        }
    }
}

/// Orthonormal basis of a design's column span, tolerating dependent columns.
pub fn span_basis(x: &DenseMatrix) -> Result<DenseMatrix> {
    column_space_basis(x, 1e-10)
}
