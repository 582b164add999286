//! Degree-4 spectral certificates for the 2→4 norm, ℓ₂-vs-ℓ₄ distortion and
//! well-spreadness.
//!
//! For unit u, Σᵢ⟨aᵢ, u⟩⁴ = xᵀMx with x = vec(uuᵀ) and M = Σᵢ vec(aᵢaᵢᵀ)vec(aᵢaᵢᵀ)ᵀ.
//! Since ⟨vec I, x⟩ = 1 for every such x, the bound
//! λ_max(M − c·vec(I)vec(I)ᵀ) + c holds for every c, and we minimise it over c.
//! All vectors live in the d(d+1)/2-dimensional space of symmetric matrices,
//! with off-diagonal coordinates scaled by √2 so the embedding is isometric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    dot, extreme_singular_values, normalize, symmetric_eigen, top_eigenvalue_from, top_eigenvalue_symmetric,
    DenseMatrix, LanczosOptions,
};
use crate::spreadness::{guaranteed_m, spread_from_distortion, DistortionBound, SpreadSpec, SpreadVerdict};

pub const EIGEN_TOL: f64 = 1e-8;
pub const DEFAULT_THRESHOLD: f64 = 2.0;
/// Operators up to this dimension are assembled explicitly.
const EXPLICIT_DIM: usize = 300;
const SHIFT_SEARCH_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoToFourCertificate {
    /// Certified upper bound on max_{‖u‖=1} ‖Au‖₄.
    pub upper_bound: f64,
    pub lambda_hat: f64,
    pub inflation: f64,
    /// Trace shift c at which the bound was evaluated.
    pub shift: f64,
    /// Unit vector u extracted from the top eigenvector, and Σᵢ⟨aᵢ, u⟩⁴ at it.
    pub test_vector: Vec<f64>,
    pub test_value: f64,
    pub residual: f64,
    pub matvecs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedDistortion {
    pub upper: f64,
    pub sigma_min: f64,
    pub two_to_four: TwoToFourCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellSpreadCertificate {
    pub verdict: Verdict,
    pub distortion: CertifiedDistortion,
    pub delta: f64,
    pub threshold: f64,
    /// Largest m with an (m, δ)-ℓ₂ guarantee; 0 when none.
    pub guaranteed_m: usize,
    pub guarantee: Option<SpreadVerdict>,
}

fn sym_dim(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Isometric coordinates of a symmetric matrix given as a closure.
fn sym_coords(d: usize, entry: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let s2 = std::f64::consts::SQRT_2;
    let mut x = Vec::with_capacity(sym_dim(d));
    for i in 0..d {
        x.push(entry(i, i));
        for j in i + 1..d {
            x.push(s2 * entry(i, j));
        }
    }
    x
}

fn sym_matrix(d: usize, x: &[f64]) -> DenseMatrix {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DenseMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        m[(i, i)] = x[k];
        k += 1;
        for j in i + 1..d {
            m[(i, j)] = inv * x[k];
            m[(j, i)] = inv * x[k];
            k += 1;
        }
    }
    m
}

fn trace_coords(d: usize, x: &[f64]) -> f64 {
    let mut k = 0;
    let mut t = 0.0;
    for i in 0..d {
        t += x[k];
        k += d - i;
    }
    t
}

enum Operator<'a> {
    Explicit(DenseMatrix),
    Implicit(&'a DenseMatrix),
}

impl Operator<'_> {
    fn build(a: &DenseMatrix) -> Operator<'_> {
        let d = a.cols();
        let dim = sym_dim(d);
        if dim > EXPLICIT_DIM {
            return Operator::Implicit(a);
        }
        let partial = |rows: std::ops::Range<usize>| {
            let mut m = vec![0.0; dim * dim];
            for r in rows {
                let row = a.row(r);
                let x = sym_coords(d, |i, j| row[i] * row[j]);
                for p in 0..dim {
                    let xp = x[p];
                    if xp == 0.0 {
                        continue;
                    }
                    let mrow = &mut m[p * dim..(p + 1) * dim];
                    for q in p..dim {
                        mrow[q] += xp * x[q];
                    }
                }
            }
            m
        };
        let n = a.rows();
        let chunk = 256;
        let mut m = (0..n.div_ceil(chunk))
            .into_par_iter()
            .map(|c| partial(c * chunk..((c + 1) * chunk).min(n)))
            .reduce(
                || vec![0.0; dim * dim],
                |mut x, y| {
                    x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                    x
                },
            );
        for p in 0..dim {
            for q in 0..p {
                m[p * dim + q] = m[q * dim + p];
            }
        }
        Operator::Explicit(DenseMatrix::new(dim, dim, m).expect("finite operator"))
    }

    /// (M − c·jjᵀ) x.
    fn apply(&self, d: usize, c: f64, x: &[f64]) -> Vec<f64> {
        let mut y = match self {
            Operator::Explicit(m) => m.matvec(x),
            Operator::Implicit(a) => {
                let xm = sym_matrix(d, x);
                let mut acc = DenseMatrix::zeros(d, d);
                for r in 0..a.rows() {
                    let row = a.row(r);
                    let xr = xm.matvec(row);
                    let s = dot(row, &xr);
                    if s == 0.0 {
                        continue;
                    }
                    for i in 0..d {
                        let si = s * row[i];
                        let arow = acc.row_mut(i);
                        for j in i..d {
                            arow[j] += si * row[j];
                        }
                    }
                }
                sym_coords(d, |i, j| if i <= j { acc[(i, j)] } else { acc[(j, i)] })
            }
        };
        if c != 0.0 {
            let t = c * trace_coords(d, x);
            let mut k = 0;
            for i in 0..d {
                y[k] -= t;
                k += d - i;
            }
        }
        y
    }
}

fn lanczos_opts(dim: usize, starts: usize) -> LanczosOptions {
    let krylov = if dim <= EXPLICIT_DIM { dim } else { 80 };
    LanczosOptions { tol: EIGEN_TOL, krylov_dim: krylov, starts, ..LanczosOptions::default() }
}

/// Σᵢ⟨aᵢ, u⟩⁴.
pub fn fourth_moment_sum(a: &DenseMatrix, u: &[f64]) -> f64 {
    a.matvec(u).iter().map(|x| x.powi(4)).sum()
}

fn test_vector_from(a: &DenseMatrix, d: usize, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (vals, vecs) = symmetric_eigen(&sym_matrix(d, x))?;
    // Dominant eigenvector by magnitude.
    let k = if vals[d - 1].abs() >= vals[0].abs() { d - 1 } else { 0 };
    let mut u = vecs.column(k);
    let mut f = fourth_moment_sum(a, &u);
    // Fixed-point ascent u ← Aᵀ(Au)³ / ‖·‖; monotone for this convex objective.
    for _ in 0..100 {
        let w: Vec<f64> = a.matvec(&u).iter().map(|x| x.powi(3)).collect();
        let mut cand = a.tmatvec(&w);
        if normalize(&mut cand) == 0.0 {
            break;
        }
        let fc = fourth_moment_sum(a, &cand);
        if fc <= f * (1.0 + 1e-14) {
            break;
        }
        u = cand;
        f = fc;
    }
    Ok((u, f))
}

/// Certified upper bound on the 2→4 norm of A.
pub fn certify_two_to_four(a: &DenseMatrix) -> Result<TwoToFourCertificate> {
    let d = a.cols();
    let dim = sym_dim(d);
    let op = Operator::build(a);
    let matvecs = std::cell::Cell::new(0usize);
    let apply_at = |c: f64| {
        let op = &op;
        let matvecs = &matvecs;
        move |x: &[f64]| {
            matvecs.set(matvecs.get() + 1);
            op.apply(d, c, x)
        }
    };

    let top0 = top_eigenvalue_symmetric(apply_at(0.0), dim, lanczos_opts(dim, 3))?;
    let lam0 = top0.lambda;
    let mut warm = top0.vector.clone();
    let eval = |c: f64, warm: &mut Vec<f64>| -> Result<f64> {
        let est = top_eigenvalue_from(apply_at(c), warm, lanczos_opts(dim, 1))?;
        *warm = est.vector;
        Ok(est.lambda + c)
    };

    // Golden-section search for the convex map c ↦ λ_max(M − c·jjᵀ) + c on [0, λ_max(M)].
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, lam0.max(0.0));
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eval(x1, &mut warm)?;
    let mut f2 = eval(x2, &mut warm)?;
    for _ in 0..SHIFT_SEARCH_STEPS {
        if hi - lo <= 1e-9 * lam0.abs().max(1e-300) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eval(x1, &mut warm)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eval(x2, &mut warm)?;
        }
    }
    let (mut c, best) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if lam0 <= best {
        c = 0.0;
    }
    // Final solve at the chosen shift from three independent starts.
    let fin = top_eigenvalue_symmetric(apply_at(c), dim, lanczos_opts(dim, 3))?;

    let lambda_hat = (fin.lambda + c).max(0.0);
    let inflation = 10.0 * EIGEN_TOL;
    let upper_bound = ((1.0 + inflation) * lambda_hat).powf(0.25);
    let (test_vector, test_value) = test_vector_from(a, d, &fin.vector)?;
    Ok(TwoToFourCertificate {
        upper_bound,
        lambda_hat,
        inflation,
        shift: c,
        test_vector,
        test_value,
        residual: fin.residual,
        matvecs: matvecs.get(),
    })
}

/// Certified upper bound n^{1/4}·‖A‖_{2→4}/σ_min(A) on Δ_{2,4}(col span A).
pub fn certify_distortion_24(a: &DenseMatrix) -> Result<CertifiedDistortion> {
    let spec = extreme_singular_values(a)?;
    if spec.sigma_min <= 1e-8 * spec.sigma_max {
        return Err(Error::Singular(format!(
            "sigma_min = {:e} vs sigma_max = {:e}",
            spec.sigma_min, spec.sigma_max
        )));
    }
    let two_to_four = certify_two_to_four(a)?;
    let n = a.rows() as f64;
    let upper = n.powf(0.25) * two_to_four.upper_bound / spec.sigma_min;
    Ok(CertifiedDistortion { upper, sigma_min: spec.sigma_min, two_to_four })
}

/// YES iff the certified distortion is at most `threshold`; a YES carries the
/// (⌊(δ/upper)⁴n⌋, δ)-ℓ₂ spreadness guarantee. NO only means the certificate
/// failed.
pub fn certify_well_spread(a: &DenseMatrix, delta: f64, threshold: f64) -> Result<WellSpreadCertificate> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta = {delta} outside (0, 1)")));
    }
    if threshold.is_nan() || threshold <= 1.0 {
        return Err(Error::InvalidInput(format!("threshold = {threshold} must exceed 1")));
    }
    let n = a.rows();
    let distortion = certify_distortion_24(a)?;
    let yes = distortion.upper <= threshold;
    let (m, guarantee) = if yes {
        let m = guaranteed_m(distortion.upper, n, delta, 2.0, 4.0);
        let bound = DistortionBound {
            p: 2.0,
            q: 4.0,
            lower: 1.0,
            upper: distortion.upper.min(DistortionBound::trivial_upper(n, 2.0, 4.0)),
            n,
        };
        let g = if m >= 1 { Some(spread_from_distortion(&bound, n, SpreadSpec::l2(m, delta))?) } else { None };
        (m, g)
    } else {
        (0, None)
    };
    Ok(WellSpreadCertificate {
        verdict: if yes { Verdict::Yes } else { Verdict::No },
        distortion,
        delta,
        threshold,
        guaranteed_m: m,
        guarantee,
    })
}
