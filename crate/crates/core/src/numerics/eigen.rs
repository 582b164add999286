use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

use super::matrix::{dot, norm2, normalize, DenseMatrix};
use super::qr::QrDecomposition;

/// Extreme singular values plus convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub iterations: usize,
    pub residual: f64,
}

pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;
const SVD_TOL: f64 = 1e-15;
const SVD_CONVERGED: f64 = 1e-13;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension("symmetric_eigen needs a square matrix".into()));
    }
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        if sweeps >= 100 {
            return Err(Error::NoConvergence { iterations: sweeps, residual: off / scale });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// One-sided Jacobi on the columns of `w`, in place. Returns (sweeps, residual).
fn hestenes(w: &mut [Vec<f64>], max_sweeps: usize) -> (usize, f64, bool) {
    let d = w.len();
    let mut residual = 0.0;
    for sweep in 1..=max_sweeps {
        residual = 0.0f64;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                residual = residual.max(rel);
                if rel <= SVD_TOL {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = w.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
            }
        }
        if residual <= SVD_CONVERGED {
            return (sweep, residual, true);
        }
    }
    (max_sweeps, residual, false)
}

/// All singular values in descending order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let (sv, _, _) = singular_values_inner(m, DEFAULT_MAX_ITERATIONS)?;
    Ok(sv)
}

fn singular_values_inner(m: &DenseMatrix, max_sweeps: usize) -> Result<(Vec<f64>, usize, f64)> {
    let tall = if m.rows() >= m.cols() { m.clone() } else { m.transpose() };
    // Reduce to the square triangular factor first; same singular values.
    let r = QrDecomposition::new(&tall, false).r;
    let mut cols = r.transpose().columns();
    // Columns of rᵀ are the rows of r; Jacobi on either gives the same values.
    let (sweeps, residual, ok) = hestenes(&mut cols, max_sweeps);
    if !ok {
        return Err(Error::NoConvergence { iterations: sweeps, residual });
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok((sv, sweeps, residual))
}

/// Smallest and largest singular values.
pub fn extreme_singular_values(m: &DenseMatrix) -> Result<SpectrumSummary> {
    extreme_singular_values_with(m, DEFAULT_MAX_ITERATIONS)
}

pub fn extreme_singular_values_with(m: &DenseMatrix, max_sweeps: usize) -> Result<SpectrumSummary> {
    let (sv, iterations, residual) = singular_values_inner(m, max_sweeps)?;
    Ok(SpectrumSummary {
        sigma_min: *sv.last().expect("non-empty"),
        sigma_max: sv[0],
        iterations,
        residual,
    })
}

/// Top right singular vector and value.
pub fn top_right_singular(m: &DenseMatrix) -> Result<(f64, Vec<f64>)> {
    let (vals, vecs) = symmetric_eigen(&m.gram())?;
    let d = vals.len();
    Ok((vals[d - 1].max(0.0).sqrt(), vecs.column(d - 1)))
}

/// Settings for [`top_eigenvalue_symmetric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    pub tol: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub starts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-8, krylov_dim: 60, max_restarts: DEFAULT_MAX_ITERATIONS, starts: 3, seed: 0x5eed }
    }
}

/// Result of a top-eigenvalue solve.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric operator given only as a matvec.
///
/// Restarted Lanczos with full reorthogonalisation, run from `starts`
/// independent random vectors; the largest Rayleigh quotient wins. Converged
/// when `‖Av − λv‖ ≤ tol·|λ|`.
pub fn top_eigenvalue_symmetric<F>(apply: F, dim: usize, opts: LanczosOptions) -> Result<EigenEstimate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return Err(Error::Dimension("operator dimension is zero".into()));
    }
    let mut rng = Rng::seed_from_u64(opts.seed);
    let mut best: Option<EigenEstimate> = None;
    for _ in 0..opts.starts.max(1) {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut v);
        let est = lanczos_from(&apply, v, dim, &opts)?;
        if best.as_ref().is_none_or(|b| est.lambda > b.lambda) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one start"))
}

/// One restarted-Lanczos run from a caller-supplied start vector.
pub fn top_eigenvalue_from<F>(apply: F, start: &[f64], opts: LanczosOptions) -> Result<EigenEstimate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut v = start.to_vec();
    if normalize(&mut v) == 0.0 {
        return Err(Error::ZeroVector);
    }
    lanczos_from(&apply, v, start.len(), &opts)
}

fn lanczos_from<F>(apply: &F, mut start: Vec<f64>, dim: usize, opts: &LanczosOptions) -> Result<EigenEstimate>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let k_max = opts.krylov_dim.max(2).min(dim);
    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;
    for _restart in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max);
        let mut alphas = Vec::with_capacity(k_max);
        let mut betas: Vec<f64> = Vec::with_capacity(k_max);
        let mut v = start.clone();
        for j in 0..k_max {
            basis.push(v.clone());
            let mut w = apply(&v);
            matvecs += 1;
            let a = dot(&w, &v);
            alphas.push(a);
            // Full reorthogonalisation, twice for stability.
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let beta = norm2(&w);
            if j + 1 == k_max || beta <= 1e-14 * a.abs().max(1e-300) {
                break;
            }
            betas.push(beta);
            v = w.into_iter().map(|x| x / beta).collect();
        }
        let k = alphas.len();
        let t = DenseMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let (vals, vecs) = symmetric_eigen(&t)?;
        let y = vecs.column(k - 1);
        let mut x = vec![0.0; dim];
        for (b, &yi) in basis.iter().zip(&y) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += yi * bi);
        }
        normalize(&mut x);
        let ax = apply(&x);
        matvecs += 1;
        let lambda = dot(&x, &ax);
        let residual = ax.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        let _ = vals;
        last_residual = residual;
        if residual <= opts.tol * lambda.abs() || residual == 0.0 || k == dim {
            return Ok(EigenEstimate { lambda, vector: x, residual, iterations: matvecs });
        }
        start = x;
    }
    Err(Error::NoConvergence { iterations: matvecs, residual: last_residual })
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Singular(format!("Cholesky pivot {j} is {s:e}")));
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` in place.
pub fn forward_substitute(l: &DenseMatrix, b: &mut [f64]) {
    for i in 0..b.len() {
        let row = l.row(i);
        let s = b[i] - dot(&row[..i], &b[..i]);
        b[i] = s / row[i];
    }
}

/// Solves `Lᵀ x = y` in place.
pub fn backward_substitute_transpose(l: &DenseMatrix, y: &mut [f64]) {
    let n = y.len();
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
}

/// Solves `G x = b` for symmetric positive-definite `G`.
pub fn cholesky_solve(g: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let l = cholesky(g)?;
    let mut x = b.to_vec();
    forward_substitute(&l, &mut x);
    backward_substitute_transpose(&l, &mut x);
    Ok(x)
}

/// Leverage scores `h_i = a_iᵀ (AᵀA)⁻¹ a_i`, i.e. squared row norms of any
/// orthonormal basis of the column span.
pub fn leverage_scores(a: &DenseMatrix) -> Result<Vec<f64>> {
    let l = cholesky(&a.gram())?;
    Ok((0..a.rows())
        .map(|i| {
            let mut z = a.row(i).to_vec();
            forward_substitute(&l, &mut z);
            dot(&z, &z)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn diagonal_singular_values() {
        let m = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = extreme_singular_values(&m).unwrap();
        assert!((s.sigma_min - 1.0).abs() < 1e-14);
        assert!((s.sigma_max - 3.0).abs() < 1e-14);
    }

    #[test]
    fn column_singular_value() {
        let m = DenseMatrix::from_rows(&[vec![3.0], vec![4.0]]).unwrap();
        let s = extreme_singular_values(&m).unwrap();
        assert!((s.sigma_min - 5.0).abs() < 1e-14 && (s.sigma_max - 5.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_diagonal_and_rank_one() {
        let diag = [5.0, 2.0, 1.0];
        let e = top_eigenvalue_symmetric(
            |x| x.iter().zip(&diag).map(|(a, b)| a * b).collect(),
            3,
            LanczosOptions::default(),
        )
        .unwrap();
        assert!((e.lambda - 5.0).abs() < 1e-10);
        assert!((e.vector[0].abs() - 1.0).abs() < 1e-8);

        let w = [1.0, 2.0, 1.0, 1.0];
        let e = top_eigenvalue_symmetric(
            |x| {
                let s = dot(&w, x);
                w.iter().map(|wi| wi * s).collect()
            },
            4,
            LanczosOptions::default(),
        )
        .unwrap();
        assert!((e.lambda - 7.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let mut rng = rng_from_seed(9);
        let g = DenseMatrix::gaussian(6, 6, &mut rng);
        let a = g.gram();
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        let lam = DenseMatrix::from_fn(6, 6, |i, j| if i == j { vals[i] } else { 0.0 });
        let recon = vecs.matmul(&lam).unwrap().matmul(&vecs.transpose()).unwrap();
        assert!(recon.max_abs_diff(&a) < 1e-10);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn leverage_matches_orthonormal_rows() {
        let mut rng = rng_from_seed(2);
        let a = DenseMatrix::gaussian(20, 3, &mut rng);
        let h = leverage_scores(&a).unwrap();
        let b = super::super::qr::orthonormal_basis(&a).unwrap();
        for (hi, bi) in h.iter().zip(b.row_norms_sq()) {
            assert!((hi - bi).abs() < 1e-12);
        }
        assert!((h.iter().sum::<f64>() - 3.0).abs() < 1e-10);
    }
}
