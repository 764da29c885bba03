//! Norms, inversion, condition numbers, direct sums, permutations and the
//! polar decomposition.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Dimensions above this use power iteration for the spectral norm.
pub const FULL_SVD_LIMIT: usize = 512;
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 10_000;
/// Relative singular-value threshold below which a matrix counts as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
/// Relative threshold below which the condition number is reported infinite.
pub const CONDITION_INFINITY_THRESHOLD: f64 = 1e-14;

/// All singular values, descending. Diagonal inputs are read off directly.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = if m.is_diagonal() {
        let mut d: Vec<f64> = m.diagonal().iter().map(|v| v.abs()).collect();
        d.resize(m.rows().min(m.cols()), 0.0);
        d
    } else {
        m.to_nalgebra().singular_values().iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    if m.is_diagonal() {
        return m
            .diagonal()
            .iter()
            .fold(0.0, |acc, v| f64::max(acc, v.abs()));
    }
    if m.rows().max(m.cols()) <= FULL_SVD_LIMIT {
        return m
            .to_nalgebra()
            .singular_values()
            .iter()
            .fold(0.0, |acc, &v| f64::max(acc, v));
    }
    power_iteration_norm(m)
}

/// Power iteration on `MᵀM` from the normalized all-ones vector.
pub fn power_iteration_norm(m: &DenseMatrix) -> f64 {
    let n = m.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0;
    let mut mv = vec![0.0; m.rows()];
    for _ in 0..POWER_MAX_ITERATIONS {
        for (i, out) in mv.iter_mut().enumerate() {
            *out = m.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let mut w = vec![0.0; n];
        for (i, &s) in mv.iter().enumerate() {
            for (wj, a) in w.iter_mut().zip(m.row(i)) {
                *wj += a * s;
            }
        }
        let norm_w = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm_w == 0.0 {
            return 0.0;
        }
        let next = norm_w.sqrt();
        for (vj, wj) in v.iter_mut().zip(&w) {
            *vj = wj / norm_w;
        }
        let converged = (next - estimate).abs() <= POWER_TOLERANCE * next;
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

fn require_square(m: &DenseMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )))
    }
}

fn check_nonsingular(sv: &[f64]) -> Result<()> {
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let sigma_min = sv.last().copied().unwrap_or(0.0);
    if sigma_max == 0.0 || sigma_min < SINGULAR_THRESHOLD * sigma_max {
        return Err(Error::Singular {
            sigma_min,
            sigma_max,
        });
    }
    Ok(())
}

/// Two-sided inverse via LU with one step of iterative refinement.
pub fn invert(m: &DenseMatrix) -> Result<DenseMatrix> {
    require_square(m, "invert")?;
    check_nonsingular(&singular_values(m))?;
    if m.is_diagonal() {
        let d: Vec<f64> = m.diagonal().iter().map(|v| 1.0 / v).collect();
        return Ok(DenseMatrix::from_diagonal(&d));
    }
    let a = m.to_nalgebra();
    let lu = a.clone().lu();
    let mut inv = lu.try_inverse().ok_or(Error::Singular {
        sigma_min: 0.0,
        sigma_max: spectral_norm(m),
    })?;
    // N <- N + N (I - A N)
    let n = m.rows();
    let residual = DMatrix::<f64>::identity(n, n) - &a * &inv;
    inv += &inv * residual;
    Ok(DenseMatrix::from_nalgebra(&inv))
}

/// Condition number `σ_max/σ_min`, or the infinity flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConditionNumber {
    Finite(f64),
    Infinite,
}

impl ConditionNumber {
    pub fn value(self) -> f64 {
        match self {
            ConditionNumber::Finite(v) => v,
            ConditionNumber::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ConditionNumber::Infinite)
    }
}

impl Serialize for ConditionNumber {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ConditionNumber::Finite(v) => s.serialize_f64(*v),
            ConditionNumber::Infinite => s.serialize_str("infinity"),
        }
    }
}

pub fn condition_number(m: &DenseMatrix) -> Result<ConditionNumber> {
    require_square(m, "condition_number")?;
    let sv = singular_values(m);
    let sigma_max = sv[0];
    let sigma_min = *sv.last().unwrap();
    if sigma_max == 0.0 || sigma_min < CONDITION_INFINITY_THRESHOLD * sigma_max {
        Ok(ConditionNumber::Infinite)
    } else {
        Ok(ConditionNumber::Finite(sigma_max / sigma_min))
    }
}

/// Block-diagonal assembly.
pub fn direct_sum(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput("direct sum of no blocks".into()));
    }
    let rows = blocks.iter().map(DenseMatrix::rows).sum();
    let cols = blocks.iter().map(DenseMatrix::cols).sum();
    let mut out = DenseMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out.set(r0 + i, c0 + j, b.get(i, j));
            }
        }
        r0 += b.rows();
        c0 += b.cols();
    }
    Ok(out)
}

/// A bijection on `{1..n}`, stored zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// `images[n-1] = π(n)`, 1-based.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty permutation".into()));
        }
        let mut seen = vec![false; n];
        for &p in images {
            if p == 0 || p > n {
                return Err(Error::InvalidPermutation(format!(
                    "image {p} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[p - 1], true) {
                return Err(Error::InvalidPermutation(format!("image {p} repeated")));
            }
        }
        Ok(Permutation(images.iter().map(|p| p - 1).collect()))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Zero-based image of zero-based `i`.
    pub fn image(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|p| p + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::from_one_based(&images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.to_one_based()
    }
}

/// `U_π` with `U_π e_{π(n)} = e_n`, i.e. a one at `(n, π(n))`.
pub fn permutation_matrix(perm: &Permutation) -> DenseMatrix {
    let n = perm.len();
    let mut u = DenseMatrix::zeros(n, n);
    for i in 0..n {
        u.set(i, perm.image(i), 1.0);
    }
    u
}

#[derive(Clone, Debug)]
pub struct PolarFactors {
    pub unitary: DenseMatrix,
    pub positive: DenseMatrix,
}

/// `M = U·A` with `A = (MᵀM)^{1/2}`, computed from the SVD `M = WΣVᵀ` as
/// `U = WVᵀ`, `A = VΣVᵀ`.
pub fn polar_decompose(m: &DenseMatrix) -> Result<PolarFactors> {
    require_square(m, "polar_decompose")?;
    let svd = m.to_nalgebra().svd(true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    check_nonsingular(&sv)?;
    let w = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let sigma = DMatrix::from_diagonal(&svd.singular_values);
    let u = w * vt;
    let a = vt.transpose() * sigma * vt;
    let a_sym = (&a + a.transpose()) * 0.5;
    Ok(PolarFactors {
        unitary: DenseMatrix::from_nalgebra(&u),
        positive: DenseMatrix::from_nalgebra(&a_sym),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn spectral_norm_examples() {
        assert_eq!(spectral_norm(&DenseMatrix::identity(3)), 1.0);
        assert_eq!(spectral_norm(&DenseMatrix::from_diagonal(&[3.0, 1.0])), 3.0);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let got = spectral_norm(&m(&[vec![1.0, 1.0], vec![0.0, -1.0]]));
        assert!((got - golden).abs() < 1e-12 * golden);
    }

    #[test]
    fn power_iteration_agrees_with_svd() {
        let a = m(&[
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.0],
            vec![0.2, 0.1, -0.7],
        ]);
        let svd = spectral_norm(&a);
        let pow = power_iteration_norm(&a);
        assert!((svd - pow).abs() < 1e-10 * svd, "{svd} vs {pow}");
    }

    #[test]
    fn invert_examples() {
        assert_eq!(
            invert(&DenseMatrix::identity(3)).unwrap(),
            DenseMatrix::identity(3)
        );
        let s = m(&[vec![1.0, 1.0], vec![0.0, -1.0]]);
        assert!(invert(&s).unwrap().max_abs_diff(&s) < 1e-15);
        let d = invert(&DenseMatrix::from_diagonal(&[2.0, 4.0])).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[0.5, 0.25]));
    }

    #[test]
    fn invert_rejects_singular_and_rectangular() {
        let s = m(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(invert(&s), Err(Error::Singular { .. })));
        assert!(matches!(
            invert(&DenseMatrix::from_diagonal(&[1.0, 1e-13])),
            Err(Error::Singular { .. })
        ));
        assert!(invert(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn condition_number_examples() {
        let c = 0.6f64;
        let s = 0.8f64;
        let rot = m(&[vec![c, -s], vec![s, c]]);
        assert!((condition_number(&rot).unwrap().value() - 1.0).abs() < 1e-12);
        assert_eq!(
            condition_number(&DenseMatrix::from_diagonal(&[1.0, 0.25])).unwrap(),
            ConditionNumber::Finite(4.0)
        );
        let n = 10;
        let h: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
        let k = condition_number(&DenseMatrix::from_diagonal(&h))
            .unwrap()
            .value();
        assert!((k - n as f64).abs() < 1e-12);
        assert!(condition_number(&DenseMatrix::from_diagonal(&[1.0, 0.0]))
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn direct_sum_examples() {
        let d = direct_sum(&[m(&[vec![2.0]]), m(&[vec![3.0]])]).unwrap();
        assert_eq!(d, DenseMatrix::from_diagonal(&[2.0, 3.0]));
        let i5 = direct_sum(&[DenseMatrix::identity(2), DenseMatrix::identity(3)]).unwrap();
        assert_eq!(i5, DenseMatrix::identity(5));
        assert!(direct_sum(&[]).is_err());
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(
            permutation_matrix(&Permutation::identity(3)),
            DenseMatrix::identity(3)
        );
        let swap = Permutation::from_one_based(&[2, 1]).unwrap();
        assert_eq!(
            permutation_matrix(&swap),
            m(&[vec![0.0, 1.0], vec![1.0, 0.0]])
        );
        let cycle = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        let u = permutation_matrix(&cycle);
        let sq = &u * &u;
        assert_eq!(sq, permutation_matrix(&cycle.inverse()));
        // U_π e_{π(n)} = e_n
        for n in 0..3 {
            let col = cycle.image(n);
            for r in 0..3 {
                assert_eq!(u.get(r, col), if r == n { 1.0 } else { 0.0 });
            }
        }
        assert!(Permutation::from_one_based(&[1, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        assert!(Permutation::from_one_based(&[1, 3]).is_err());
    }

    #[test]
    fn polar_examples() {
        let id = polar_decompose(&DenseMatrix::identity(3)).unwrap();
        assert!(id.unitary.identity_deviation() < 1e-14);
        assert!(id.positive.identity_deviation() < 1e-14);

        let p = polar_decompose(&DenseMatrix::from_diagonal(&[-2.0, 1.0])).unwrap();
        assert!(
            p.unitary
                .max_abs_diff(&DenseMatrix::from_diagonal(&[-1.0, 1.0]))
                < 1e-14
        );
        assert!(
            p.positive
                .max_abs_diff(&DenseMatrix::from_diagonal(&[2.0, 1.0]))
                < 1e-14
        );

        let p = polar_decompose(&m(&[vec![0.0, 3.0], vec![2.0, 0.0]])).unwrap();
        assert!(
            p.unitary
                .max_abs_diff(&m(&[vec![0.0, 1.0], vec![1.0, 0.0]]))
                < 1e-14
        );
        assert!(
            p.positive
                .max_abs_diff(&DenseMatrix::from_diagonal(&[2.0, 3.0]))
                < 1e-14
        );

        assert!(polar_decompose(&m(&[vec![1.0, 1.0], vec![1.0, 1.0]])).is_err());
    }
}
