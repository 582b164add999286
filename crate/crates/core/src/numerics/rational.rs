use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;

/// Exact rational matrix, row-major. Entries are kept in lowest terms.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for shape {rows}x{cols}", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let data = rows.iter().flatten().map(|&x| BigRational::from_integer(x.into())).collect();
        Self::new(rows.len(), c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0);
        Self { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j).clone());
            }
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }

    /// `A x` in exact arithmetic.
    pub fn mul_vec(&self, x: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(BigRational::zero(), |acc, j| acc + self.get(i, j) * &x[j])
            })
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> BigRational {
        self.data.iter().map(|x| x.abs()).max().unwrap_or_else(BigRational::zero)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| to_f64(self.get(i, j)))
    }

    /// Rank by fraction-free elimination.
    pub fn rank(&self) -> usize {
        bareiss_echelon(self).pivots.len()
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"num/den"` or an integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Format(format!("bad rational literal {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

/// Integer row-echelon form from Bareiss elimination.
#[derive(Debug, Clone)]
pub struct Echelon {
    pub rows: Vec<Vec<BigInt>>,
    /// Pivot column of each nonzero echelon row.
    pub pivots: Vec<usize>,
}

/// Scales each row to integers, then eliminates fraction-free.
pub fn bareiss_echelon(a: &RationalMatrix) -> Echelon {
    let (p, n) = (a.rows(), a.cols());
    let mut m: Vec<Vec<BigInt>> = (0..p)
        .map(|i| {
            let lcm = (0..n).fold(BigInt::one(), |l, j| l.lcm(a.get(i, j).denom()));
            (0..n).map(|j| (a.get(i, j) * BigRational::from_integer(lcm.clone())).to_integer()).collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..n {
        if r == p {
            break;
        }
        let Some(sel) = (r..p).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, sel);
        let (top, rest) = m.split_at_mut(r + 1);
        let pivot_row = &top[r];
        let pv = pivot_row[c].clone();
        for row in rest.iter_mut() {
            let f = row[c].clone();
            for j in c + 1..n {
                let num = &pv * &row[j] - &f * &pivot_row[j];
                debug_assert!((&num % &prev).is_zero());
                row[j] = num / &prev;
            }
            row[c] = BigInt::zero();
        }
        prev = pv;
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    Echelon { rows: m, pivots }
}

/// Exact kernel of a rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelBasis {
    pub ambient: usize,
    pub rank: usize,
    /// Independent primitive integer vectors spanning the kernel.
    pub vectors: Vec<Vec<BigRational>>,
}

impl KernelBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    /// The basis as an n × dim matrix, or `None` when the kernel is trivial.
    pub fn to_matrix(&self) -> Option<RationalMatrix> {
        let k = self.vectors.len();
        if k == 0 {
            return None;
        }
        let data = (0..self.ambient).flat_map(|i| self.vectors.iter().map(move |v| v[i].clone())).collect();
        Some(RationalMatrix { rows: self.ambient, cols: k, data })
    }
}

/// Kernel basis with `n − rank(A)` columns satisfying `A·Y = 0` exactly.
pub fn rational_kernel_basis(a: &RationalMatrix) -> KernelBasis {
    let n = a.cols();
    let ech = bareiss_echelon(a);
    let rank = ech.pivots.len();
    let free: Vec<usize> = (0..n).filter(|j| !ech.pivots.contains(j)).collect();
    let vectors = free
        .iter()
        .map(|&f| {
            let mut x = vec![BigRational::zero(); n];
            x[f] = BigRational::one();
            for (r, &pc) in ech.pivots.iter().enumerate().rev() {
                let row = &ech.rows[r];
                let s = (pc + 1..n).fold(BigRational::zero(), |acc, j| {
                    if row[j].is_zero() {
                        acc
                    } else {
                        acc + BigRational::from_integer(row[j].clone()) * &x[j]
                    }
                });
                x[pc] = -s / BigRational::from_integer(row[pc].clone());
            }
            primitive(x)
        })
        .collect();
    KernelBasis { ambient: n, rank, vectors }
}

/// Rescales to coprime integers with a positive leading nonzero entry.
pub fn primitive(x: Vec<BigRational>) -> Vec<BigRational> {
    let lcm = x.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let ints: Vec<BigInt> = x.iter().map(|v| (v * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = ints.iter().fold(BigInt::zero(), |g, v| g.gcd(v));
    if g.is_zero() {
        return x;
    }
    if ints.iter().find(|v| !v.is_zero()).is_some_and(|v| v.is_negative()) {
        g = -g;
    }
    ints.into_iter().map(|v| BigRational::from_integer(v / &g)).collect()
}
