//! Matrix spark and the spark-to-kernel-spreadness reduction on small
//! rational instances.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{orthonormal_basis, primitive, rational_kernel_basis, to_f64, RationalMatrix};
use crate::spreadness::{next_combination, subspace_spread_exact, vector_spread_ratio, SpreadSpec, SpreadVerdict, DEFAULT_ENUMERATION_CAP};

pub const DEFAULT_SPARK_CAP: usize = 22;
/// ‖A·Y‖ of the float kernel basis must stay below this.
pub const KERNEL_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SparkResult {
    /// None when every column subset is independent.
    pub spark: Option<usize>,
    /// Nonzero x with A·x = 0 and ‖x‖₀ = spark.
    pub witness: Option<Vec<BigRational>>,
}

impl SparkResult {
    pub fn witness_strings(&self) -> Option<Vec<String>> {
        self.witness.as_ref().map(|w| w.iter().map(ToString::to_string).collect())
    }
}

/// Smallest number of linearly dependent columns, by subset enumeration in
/// increasing size with exact rank tests.
pub fn compute_spark(a: &RationalMatrix, cap: usize) -> Result<SparkResult> {
    let n = a.cols();
    if n > cap {
        return Err(Error::TooLarge { count: n as u128, cap: cap as u128 });
    }
    let rank = a.rank();
    if rank == n {
        return Ok(SparkResult { spark: None, witness: None });
    }
    for k in 1..=rank + 1 {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let sub = a.select_columns(&comb);
            if sub.rank() < k {
                let kernel = rational_kernel_basis(&sub);
                let local = primitive(kernel.vectors[0].clone());
                let mut x = vec![BigRational::zero(); n];
                for (&j, v) in comb.iter().zip(local) {
                    x[j] = v;
                }
                if !a.mul_vec(&x).iter().all(Zero::is_zero) || x.iter().filter(|v| !v.is_zero()).count() != k {
                    return Err(Error::Singular("spark witness failed exact verification".into()));
                }
                return Ok(SparkResult { spark: Some(k), witness: Some(x) });
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
    }
    unreachable!("rank + 1 columns are always dependent")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionDelta {
    /// δ as a reduced fraction "num/den".
    pub exact: String,
    pub value: f64,
    pub p: usize,
    pub n: usize,
    pub max_abs: String,
}

/// δ = 1 − 1/(2((p·n·P²)^p + 1)) for A ∈ Q^{p×n}, P = max |A_ij|.
pub fn reduction_delta_exact(a: &RationalMatrix) -> Result<BigRational> {
    let big_p = a.max_abs();
    if big_p.is_zero() {
        return Err(Error::InvalidInput("matrix is zero".into()));
    }
    let (p, n) = (a.rows(), a.cols());
    let base = BigRational::from_integer(BigInt::from(p * n)) * &big_p * &big_p;
    let power: BigRational = Pow::pow(base, p as u32);
    let two = BigRational::from_integer(BigInt::from(2));
    Ok(BigRational::one() - (two * (power + BigRational::one())).recip())
}

pub fn reduction_delta(a: &RationalMatrix) -> Result<ReductionDelta> {
    let exact = reduction_delta_exact(a)?;
    Ok(ReductionDelta {
        value: to_f64(&exact),
        exact: exact.to_string(),
        p: a.rows(),
        n: a.cols(),
        max_abs: a.max_abs().abs().to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implication {
    /// spark ≤ m, so the kernel must not be (m, δ)-spread.
    SparkAtMostM,
    /// spark > m, so the kernel must be (m, δ)-spread.
    SparkAboveM,
    /// Trivial kernel; nothing to check.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRecord {
    pub m: usize,
    pub spark: Option<usize>,
    pub spark_witness: Option<Vec<String>>,
    pub delta: ReductionDelta,
    pub kernel_dimension: usize,
    pub kernel_residual: f64,
    pub verdict: Option<SpreadVerdict>,
    /// ‖x_S‖/‖x‖ of the spark witness on its own support.
    pub support_ratio: Option<f64>,
    pub implication: Implication,
    pub passed: bool,
}

/// Checks spark(A) > m ⇔ ker A is (m, δ)-spread with δ from [`reduction_delta`].
pub fn reduction_consistency_check(a: &RationalMatrix, m: usize) -> Result<ConsistencyRecord> {
    if m == 0 || m > a.cols() {
        return Err(Error::InvalidInput(format!("m = {m} outside [1, {}]", a.cols())));
    }
    let spark = compute_spark(a, DEFAULT_SPARK_CAP)?;
    let delta = reduction_delta(a)?;
    let delta_value = to_f64(&reduction_delta_exact(a)?);
    let kernel = rational_kernel_basis(a);
    let Some(exact_basis) = kernel.to_matrix() else {
        return Ok(ConsistencyRecord {
            m,
            spark: spark.spark,
            spark_witness: None,
            delta,
            kernel_dimension: 0,
            kernel_residual: 0.0,
            verdict: None,
            support_ratio: None,
            implication: Implication::Vacuous,
            passed: spark.spark.is_none(),
        });
    };
    let basis = orthonormal_basis(&exact_basis.to_dense())?;
    let kernel_residual = a.to_dense().matmul(&basis)?.max_abs();
    if kernel_residual > KERNEL_RESIDUAL_TOL {
        return Err(Error::Singular(format!("float kernel basis residual {kernel_residual:e}")));
    }
    let verdict = subspace_spread_exact(&basis, SpreadSpec::l2(m, delta_value), DEFAULT_ENUMERATION_CAP)?;
    let (implication, support_ratio, passed) = match spark.spark {
        Some(s) if s <= m => {
            let w: Vec<f64> = spark.witness.as_ref().expect("finite spark has a witness").iter().map(to_f64).collect();
            let (ratio, _) = vector_spread_ratio(&w, m, 2.0)?;
            (Implication::SparkAtMostM, Some(ratio), !verdict.is_spread && ratio > delta_value)
        }
        _ => (Implication::SparkAboveM, None, verdict.is_spread),
    };
    Ok(ConsistencyRecord {
        m,
        spark: spark.spark,
        spark_witness: spark.witness_strings(),
        delta,
        kernel_dimension: kernel.dimension(),
        kernel_residual,
        verdict: Some(verdict),
        support_ratio,
        implication,
        passed,
    })
}
