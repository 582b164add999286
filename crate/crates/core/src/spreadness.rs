//! (m, δ)-spreadness of subspaces and ℓp-vs-ℓq distortion.
//!
//! A subspace V ⊆ Rⁿ is (m, δ)-ℓp-spread when ‖v_S‖_p ≤ δ‖v‖_p for every
//! v ∈ V and every |S| ≤ m. Index sets are 0-based throughout.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm2, norm_p, normalize, symmetric_eigen, DenseMatrix};
use crate::rng::rng_from_seed;

/// Orthonormality tolerance for basis inputs.
pub const BASIS_TOL: f64 = 1e-8;
/// Default cap on the number of subsets enumerated by [`subspace_spread_exact`].
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadSpec {
    pub m: usize,
    pub delta: f64,
    pub p: f64,
}

impl SpreadSpec {
    pub fn new(m: usize, delta: f64, p: f64) -> Self {
        Self { m, delta, p }
    }

    pub fn l2(m: usize, delta: f64) -> Self {
        Self { m, delta, p: 2.0 }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 || self.m > n {
            return Err(Error::InvalidInput(format!("m = {} outside [1, {n}]", self.m)));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidInput(format!("delta = {} outside [0, 1]", self.delta)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {} must be finite and >= 1", self.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpreadMethod {
    ExactEnumeration,
    Heuristic,
    DistortionCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    /// Proven spread (exact enumeration or a certificate).
    Certified,
    /// A concrete (v, S) violates the bound.
    Refuted,
    /// Heuristic search found no violation. Not a proof.
    NoViolationFound,
    /// A certificate was attempted and did not go through. Not a refutation.
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadVerdict {
    pub is_spread: bool,
    pub status: VerdictStatus,
    pub method: SpreadMethod,
    pub m: usize,
    pub delta: f64,
    pub p: f64,
    pub achieved_ratio: f64,
    pub witness_set: Option<Vec<usize>>,
    pub witness_vector: Option<Vec<f64>>,
}

impl SpreadVerdict {
    pub fn is_refuted(&self) -> bool {
        self.status == VerdictStatus::Refuted
    }
}

/// max over |S| ≤ m of ‖v_S‖_p / ‖v‖_p, attained on the m largest-magnitude
/// coordinates (ties to the lowest index). The returned set is sorted.
pub fn vector_spread_ratio(v: &[f64], m: usize, p: f64) -> Result<(f64, Vec<usize>)> {
    if m == 0 || m > v.len() {
        return Err(Error::InvalidInput(format!("m = {m} outside [1, {}]", v.len())));
    }
    let total = norm_p(v, p);
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    let set = top_m_indices(v, m);
    let part: Vec<f64> = set.iter().map(|&i| v[i]).collect();
    Ok(((norm_p(&part, p) / total).min(1.0), set))
}

/// Indices of the m largest |v_i|, lowest index first on ties, sorted ascending.
pub fn top_m_indices(v: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let cmp = |a: &usize, b: &usize| v[*b].abs().total_cmp(&v[*a].abs()).then(a.cmp(b));
    if m < idx.len() {
        idx.select_nth_unstable_by(m, cmp);
        idx.truncate(m);
    }
    idx.sort_unstable();
    idx
}

/// ℓp-vs-ℓq distortion n^{1/p−1/q}·‖v‖_q/‖v‖_p of a single vector.
pub fn vector_distortion(v: &[f64], p: f64, q: f64) -> Result<f64> {
    let np = norm_p(v, p);
    if np == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = v.len() as f64;
    Ok(n.powf(1.0 / p - 1.0 / q) * norm_p(v, q) / np)
}

fn check_orthonormal(b: &DenseMatrix) -> Result<()> {
    let deviation = b.orthonormality_defect();
    if deviation > BASIS_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// C(n, k) saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Advances a sorted k-subset of [0, n) to its lexicographic successor.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Top singular value of the rows `set` of `b`, with the right singular vector.
fn restricted_top(b: &DenseMatrix, set: &[usize]) -> Result<(f64, Vec<f64>)> {
    let d = b.cols();
    let k = set.len();
    if k < d {
        // Small side: (B_S B_Sᵀ) w = σ² w, then u = B_Sᵀ w / σ.
        let g = DenseMatrix::from_fn(k, k, |i, j| dot(b.row(set[i]), b.row(set[j])));
        let (vals, vecs) = symmetric_eigen(&g)?;
        let s2 = vals[k - 1].max(0.0);
        let w = vecs.column(k - 1);
        let mut u = vec![0.0; d];
        for (wi, &r) in w.iter().zip(set) {
            u.iter_mut().zip(b.row(r)).for_each(|(x, y)| *x += wi * y);
        }
        normalize(&mut u);
        Ok((s2.sqrt(), u))
    } else {
        let mut g = DenseMatrix::zeros(d, d);
        for &r in set {
            let row = b.row(r);
            for i in 0..d {
                for j in 0..d {
                    g[(i, j)] += row[i] * row[j];
                }
            }
        }
        let (vals, vecs) = symmetric_eigen(&g)?;
        Ok((vals[d - 1].max(0.0).sqrt(), vecs.column(d - 1)))
    }
}

/// Exact (m, δ)-ℓ₂ decision by enumerating every row subset of size m.
pub fn subspace_spread_exact(b: &DenseMatrix, spec: SpreadSpec, cap: u128) -> Result<SpreadVerdict> {
    let n = b.rows();
    spec.validate(n)?;
    if spec.p != 2.0 {
        return Err(Error::InvalidInput("exact subspace decision supports p = 2 only".into()));
    }
    check_orthonormal(b)?;
    let count = binomial(n, spec.m);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let mut comb: Vec<usize> = (0..spec.m).collect();
    let mut best = -1.0;
    let mut best_set = comb.clone();
    let mut best_u = vec![];
    loop {
        let (s, u) = restricted_top(b, &comb)?;
        if s > best {
            best = s;
            best_set.clone_from(&comb);
            best_u = u;
        }
        if !next_combination(&mut comb, n) {
            break;
        }
    }
    let ratio = best.min(1.0);
    let is_spread = ratio <= spec.delta;
    let (witness_set, witness_vector) = if is_spread {
        (None, None)
    } else {
        (Some(best_set), Some(b.matvec(&best_u)))
    };
    Ok(SpreadVerdict {
        is_spread,
        status: if is_spread { VerdictStatus::Certified } else { VerdictStatus::Refuted },
        method: SpreadMethod::ExactEnumeration,
        m: spec.m,
        delta: spec.delta,
        p: 2.0,
        achieved_ratio: ratio,
        witness_set,
        witness_vector,
    })
}

/// Alternating maximisation from one start. Returns (ratio, u, set).
fn alternate(b: &DenseMatrix, m: usize, mut u: Vec<f64>) -> Result<(f64, Vec<f64>, Vec<usize>)> {
    if normalize(&mut u) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut ratio = -1.0;
    let mut set = Vec::new();
    for _ in 0..200 {
        let w = b.matvec(&u);
        let s = top_m_indices(&w, m);
        let (r, u_new) = restricted_top(b, &s)?;
        let improved = r - ratio;
        if r >= ratio {
            ratio = r;
            u = u_new;
            set = s;
        }
        if improved < 1e-10 {
            break;
        }
    }
    Ok((ratio, u, set))
}

/// Heuristic refutation search. Random starts plus `hints` (vectors in Rⁿ,
/// projected onto the span). Refutations are re-verified from scratch; a
/// non-refutation only means no violation was found.
pub fn spread_witness_search(
    b: &DenseMatrix,
    spec: SpreadSpec,
    restarts: usize,
    seed: u64,
    hints: &[Vec<f64>],
) -> Result<SpreadVerdict> {
    let (n, d) = b.shape();
    spec.validate(n)?;
    if spec.p != 2.0 {
        return Err(Error::InvalidInput("witness search supports p = 2 only".into()));
    }
    check_orthonormal(b)?;
    let mut rng = rng_from_seed(seed);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(restarts + hints.len());
    for h in hints {
        if h.len() != n {
            return Err(Error::Dimension(format!("hint has length {}, expected {n}", h.len())));
        }
        let u = b.tmatvec(h);
        if norm2(&u) > 0.0 {
            starts.push(u);
        }
    }
    for _ in 0..restarts {
        starts.push((0..d).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    for u in starts {
        let cand = alternate(b, spec.m, u)?;
        if best.as_ref().is_none_or(|bst| cand.0 > bst.0) {
            best = Some(cand);
        }
    }
    let Some((_, u, _)) = best else {
        return Err(Error::InvalidInput("no starting vectors".into()));
    };
    let v = b.matvec(&u);
    let (ratio, set) = vector_spread_ratio(&v, spec.m, 2.0)?;
    let refuted = ratio > spec.delta;
    Ok(SpreadVerdict {
        is_spread: !refuted,
        status: if refuted { VerdictStatus::Refuted } else { VerdictStatus::NoViolationFound },
        method: SpreadMethod::Heuristic,
        m: spec.m,
        delta: spec.delta,
        p: 2.0,
        achieved_ratio: ratio,
        witness_set: refuted.then_some(set),
        witness_vector: refuted.then_some(v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionBound {
    pub p: f64,
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

impl DistortionBound {
    /// n^{1/p − 1/q}, the largest possible distortion.
    pub fn trivial_upper(n: usize, p: f64, q: f64) -> f64 {
        (n as f64).powf(1.0 / p - 1.0 / q)
    }
}

/// Spreadness guaranteed by a distortion upper bound. Never refutes.
///
/// With query.p = bound.p: spread when (m/n)^{1/p − 1/q}·upper ≤ δ.
/// With query.p = bound.q: spread when 1 − (upper^{−p} − (m/n)^{1 − p/q})^{q/p} ≤ δ^q.
pub fn spread_from_distortion(bound: &DistortionBound, n: usize, query: SpreadSpec) -> Result<SpreadVerdict> {
    query.validate(n)?;
    if !bound.upper.is_finite() {
        return Err(Error::InvalidInput("distortion upper bound is not finite".into()));
    }
    let (p, q) = (bound.p, bound.q);
    let frac = query.m as f64 / n as f64;
    let (holds, achieved) = if query.p == p {
        let value = frac.powf(1.0 / p - 1.0 / q) * bound.upper;
        (value <= query.delta, value.min(1.0))
    } else if query.p == q {
        let inner = bound.upper.powf(-p) - frac.powf(1.0 - p / q);
        if inner < 0.0 {
            return Err(Error::Inapplicable(format!(
                "upper^-p - (m/n)^(1-p/q) = {inner:e} is negative"
            )));
        }
        let dq = 1.0 - inner.powf(q / p);
        (dq <= query.delta.powf(q), dq.max(0.0).powf(1.0 / q))
    } else {
        return Err(Error::InvalidInput(format!(
            "query norm {} matches neither p = {p} nor q = {q}",
            query.p
        )));
    };
    Ok(SpreadVerdict {
        is_spread: holds,
        status: if holds { VerdictStatus::Certified } else { VerdictStatus::NotCertified },
        method: SpreadMethod::DistortionCertificate,
        m: query.m,
        delta: query.delta,
        p: query.p,
        achieved_ratio: achieved,
        witness_set: None,
        witness_vector: None,
    })
}

/// Largest m with (m/n)^{1/p−1/q}·upper ≤ δ, i.e. the spreadness budget a
/// distortion certificate buys at level δ for the base norm p.
pub fn guaranteed_m(upper: f64, n: usize, delta: f64, p: f64, q: f64) -> usize {
    let e = 1.0 / p - 1.0 / q;
    let mut m = ((delta / upper).powf(1.0 / e) * n as f64).floor() as usize;
    m = m.min(n);
    while m > 0 && (m as f64 / n as f64).powf(e) * upper > delta {
        m -= 1;
    }
    m
}

fn distortion_of(b: &DenseMatrix, u: &[f64], p: f64, q: f64) -> f64 {
    let w = b.matvec(u);
    let np = norm_p(&w, p);
    if np == 0.0 {
        0.0
    } else {
        norm_p(&w, q) / np
    }
}

/// Gradient of log‖w‖_r with respect to w.
fn log_norm_grad(w: &[f64], r: f64) -> Vec<f64> {
    let nr = norm_p(w, r);
    w.iter().map(|&x| x.signum() * (x.abs() / nr).powf(r - 1.0) / nr).collect()
}

fn ascend(b: &DenseMatrix, mut u: Vec<f64>, p: f64, q: f64) -> f64 {
    normalize(&mut u);
    let mut f = distortion_of(b, &u, p, q);
    let mut step = 1.0;
    for _ in 0..500 {
        let w = b.matvec(&u);
        let gq = log_norm_grad(&w, q);
        let mut cand = if p == 2.0 {
            // log‖Bu‖_q is maximised over the sphere by the convex fixed point.
            b.tmatvec(&gq)
        } else {
            let gp = log_norm_grad(&w, p);
            let g: Vec<f64> = gq.iter().zip(&gp).map(|(a, c)| a - c).collect();
            let mut gu = b.tmatvec(&g);
            let radial = dot(&gu, &u);
            gu.iter_mut().zip(&u).for_each(|(x, y)| *x -= radial * y);
            u.iter().zip(&gu).map(|(a, g)| a + step * g).collect()
        };
        if normalize(&mut cand) == 0.0 {
            break;
        }
        let fc = distortion_of(b, &cand, p, q);
        if fc > f {
            let gain = fc - f;
            u = cand;
            f = fc;
            step *= 1.5;
            if gain <= 1e-13 * f {
                break;
            }
        } else if p == 2.0 {
            break;
        } else {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    f
}

/// Lower bound on Δ_{p,q}(span B) by projected ascent from random starts and
/// from the highest-leverage rows.
pub fn distortion_lower_bound(b: &DenseMatrix, p: f64, q: f64, restarts: usize, seed: u64) -> Result<DistortionBound> {
    if !(q > p && p >= 1.0) {
        return Err(Error::InvalidInput(format!("need q > p >= 1, got p = {p}, q = {q}")));
    }
    check_orthonormal(b)?;
    let (n, d) = b.shape();
    let mut rng = rng_from_seed(seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let lev = b.row_norms_sq();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| lev[j].total_cmp(&lev[i]).then(i.cmp(&j)));
    for &i in order.iter().take(restarts.min(n)) {
        if lev[i] > 0.0 {
            starts.push(b.row(i).to_vec());
        }
    }
    for _ in 0..restarts {
        starts.push((0..d).map(|_| StandardNormal.sample(&mut rng)).collect());
    }
    let best = starts.into_iter().map(|u| ascend(b, u, p, q)).fold(0.0, f64::max);
    let upper = DistortionBound::trivial_upper(n, p, q);
    let lower = (best * upper).clamp(1.0, upper);
    Ok(DistortionBound { p, q, lower, upper, n })
}
