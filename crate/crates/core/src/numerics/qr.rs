use crate::error::{Error, Result};
use crate::rng::Rng;

use super::matrix::{dot, DenseMatrix};

/// Pivots below this fraction of the largest column norm count as rank loss.
pub const RANK_TOL: f64 = 1e-10;

/// Thin Householder QR, optionally with column pivoting.
#[derive(Debug, Clone)]
pub struct QrDecomposition {
    /// Orthonormal factor, rows × k.
    pub q: DenseMatrix,
    /// Upper-triangular factor, k × cols, in pivoted column order.
    pub r: DenseMatrix,
    /// `perm[j]` is the original index of the j-th pivoted column.
    pub perm: Vec<usize>,
}

struct Reflectors {
    vs: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    perm: Vec<usize>,
    pivots: Vec<f64>,
}

fn factor(m: &DenseMatrix, pivot: bool, steps: usize) -> Reflectors {
    let (n, d) = m.shape();
    let mut cols = m.columns();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut vs = Vec::with_capacity(steps);
    let mut pivots = Vec::with_capacity(steps);
    for j in 0..steps {
        if pivot {
            let mut best = j;
            let mut best_norm = -1.0;
            for (c, col) in cols.iter().enumerate().skip(j) {
                let s: f64 = col[j..].iter().map(|x| x * x).sum();
                if s > best_norm {
                    best_norm = s;
                    best = c;
                }
            }
            cols.swap(j, best);
            perm.swap(j, best);
        }
        let x = &cols[j][j..];
        let alpha = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        pivots.push(alpha);
        let mut v = x.to_vec();
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm_sq = dot(&v, &v);
        if vnorm_sq > 0.0 {
            for col in cols.iter_mut().skip(j) {
                let tail = &mut col[j..];
                let s = 2.0 * dot(&v, tail) / vnorm_sq;
                for (t, vi) in tail.iter_mut().zip(&v) {
                    *t -= s * vi;
                }
            }
        }
        vs.push(v);
        debug_assert!(n >= j);
    }
    let r = cols.into_iter().map(|c| c[..steps.min(n)].to_vec()).collect();
    Reflectors { vs, r, perm, pivots }
}

fn thin_q(vs: &[Vec<f64>], n: usize, k: usize) -> DenseMatrix {
    let mut q = DenseMatrix::zeros(n, k);
    for c in 0..k {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        for (j, v) in vs.iter().enumerate().rev() {
            let vnorm_sq = dot(v, v);
            if vnorm_sq == 0.0 {
                continue;
            }
            let tail = &mut e[j..];
            let s = 2.0 * dot(v, tail) / vnorm_sq;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
        for i in 0..n {
            q[(i, c)] = e[i];
        }
    }
    q
}

impl QrDecomposition {
    pub fn new(m: &DenseMatrix, pivot: bool) -> Self {
        let (n, d) = m.shape();
        let k = n.min(d);
        let f = factor(m, pivot, k);
        let q = thin_q(&f.vs, n, k);
        let r = DenseMatrix::from_fn(k, d, |i, j| if i <= j { f.r[j][i] } else { 0.0 });
        Self { q, r, perm: f.perm }
    }
}

/// Orthonormal basis of the column span of a full-column-rank matrix.
pub fn orthonormal_basis(m: &DenseMatrix) -> Result<DenseMatrix> {
    let (n, d) = m.shape();
    if n < d {
        return Err(Error::Dimension(format!("need rows >= cols, got {n}x{d}")));
    }
    let largest = m.columns().iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    let f = factor(m, true, d);
    let threshold = RANK_TOL * largest;
    if let Some(&pivot) = f.pivots.iter().find(|&&p| p <= threshold) {
        return Err(Error::RankDeficient { pivot, threshold });
    }
    Ok(thin_q(&f.vs, n, d))
}

/// Orthonormal basis of the column span, dropping columns whose pivot falls
/// below `rel_tol` times the largest column norm. Works for any shape.
pub fn column_space_basis(m: &DenseMatrix, rel_tol: f64) -> Result<DenseMatrix> {
    let (n, d) = m.shape();
    let largest = m.columns().iter().map(|c| dot(c, c).sqrt()).fold(0.0, f64::max);
    if largest == 0.0 {
        return Err(Error::RankDeficient { pivot: 0.0, threshold: 0.0 });
    }
    let f = factor(m, true, n.min(d));
    let rank = f.pivots.iter().take_while(|&&p| p > rel_tol * largest).count();
    Ok(thin_q(&f.vs[..rank], n, rank))
}

/// Haar-distributed orthogonal d × d matrix: QR of a Gaussian matrix with
/// the signs of R's diagonal normalised positive.
pub fn haar_orthogonal(d: usize, rng: &mut Rng) -> DenseMatrix {
    let g = DenseMatrix::gaussian(d, d, rng);
    let qr = QrDecomposition::new(&g, false);
    let mut q = qr.q;
    for j in 0..d {
        if qr.r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}
