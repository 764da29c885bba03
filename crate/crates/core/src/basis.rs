//! Finite sections of Schauder bases: biorthogonal pairs, natural
//! projections, and basis / unconditional-basis constants.
//!
//! Index sets in this module (projection sets, witnesses) are 1-based.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{invert, permutation_matrix, spectral_norm, Permutation};
use crate::matrix::DenseMatrix;

/// Max-entry tolerance for `F·G* = G*·F = I`.
pub const BIORTHOGONAL_TOLERANCE: f64 = 1e-9;

/// A square section `F` (columns `f_n`) with its inverse `G*` (rows `g*_k`).
#[derive(Clone, Debug)]
pub struct BasisPair {
    f: DenseMatrix,
    gstar: DenseMatrix,
}

impl BasisPair {
    /// Checks both product identities before accepting the pair.
    pub fn new(f: DenseMatrix, gstar: DenseMatrix) -> Result<Self> {
        if !f.is_square() || !gstar.is_square() || f.rows() != gstar.rows() {
            return Err(Error::DimensionMismatch(format!(
                "basis pair needs equal square sections, got {}x{} and {}x{}",
                f.rows(),
                f.cols(),
                gstar.rows(),
                gstar.cols()
            )));
        }
        let deviation = f
            .matmul(&gstar)?
            .identity_deviation()
            .max(gstar.matmul(&f)?.identity_deviation());
        if deviation >= BIORTHOGONAL_TOLERANCE {
            return Err(Error::NotBiorthogonal {
                deviation,
                tolerance: BIORTHOGONAL_TOLERANCE,
            });
        }
        Ok(BasisPair { f, gstar })
    }

    pub fn f(&self) -> &DenseMatrix {
        &self.f
    }

    pub fn gstar(&self) -> &DenseMatrix {
        &self.gstar
    }

    pub fn dim(&self) -> usize {
        self.f.rows()
    }

    pub fn into_parts(self) -> (DenseMatrix, DenseMatrix) {
        (self.f, self.gstar)
    }

    /// `(G*ᵀ, Fᵀ)`: the dual system viewed as a basis pair in its own right.
    pub fn transposed(&self) -> BasisPair {
        BasisPair {
            f: self.gstar.transpose(),
            gstar: self.f.transpose(),
        }
    }

    /// Block-diagonal pair `(⊕F_i, ⊕G*_i)`.
    pub fn direct_sum(blocks: &[BasisPair]) -> Result<BasisPair> {
        let fs: Vec<DenseMatrix> = blocks.iter().map(|b| b.f.clone()).collect();
        let gs: Vec<DenseMatrix> = blocks.iter().map(|b| b.gstar.clone()).collect();
        Ok(BasisPair {
            f: crate::kernel::direct_sum(&fs)?,
            gstar: crate::kernel::direct_sum(&gs)?,
        })
    }

    /// Spectral norm of `F·P_Δ·G*` for zero-based `subset`.
    fn subset_norm(&self, subset: &[usize]) -> f64 {
        match subset {
            [] => return 0.0,
            // Rank one: ‖f_i ⊗ g_i‖ = ‖f_i‖·‖g_i‖.
            &[i] => {
                let col: f64 = (0..self.dim()).map(|r| self.f.get(r, i).powi(2)).sum();
                let row: f64 = self.gstar.row(i).iter().map(|v| v * v).sum();
                return col.sqrt() * row.sqrt();
            }
            _ => {}
        }
        let q = self
            .f
            .select_columns(subset)
            .matmul(&self.gstar.select_rows(subset))
            .expect("conformable by construction");
        spectral_norm(&q)
    }

    fn mask_norm(&self, mask: u64) -> f64 {
        let subset: Vec<usize> = (0..self.dim()).filter(|i| mask >> i & 1 == 1).collect();
        self.subset_norm(&subset)
    }

    fn flags_norm(&self, flags: &[bool]) -> f64 {
        let subset: Vec<usize> = (0..flags.len()).filter(|&i| flags[i]).collect();
        self.subset_norm(&subset)
    }
}

/// The pair `(F, F⁻¹)`.
pub fn biorthogonal_inverse(f: &DenseMatrix) -> Result<BasisPair> {
    if !f.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "basis section must be square, got {}x{}",
            f.rows(),
            f.cols()
        )));
    }
    let gstar = invert(f)?;
    BasisPair::new(f.clone(), gstar)
}

fn to_zero_based(delta: &[usize], n: usize) -> Result<Vec<usize>> {
    delta
        .iter()
        .map(|&i| {
            if i == 0 || i > n {
                Err(Error::InvalidIndex { index: i, len: n })
            } else {
                Ok(i - 1)
            }
        })
        .collect()
}

/// `Q_Δ = F·P_Δ·G*` for a 1-based index set `Δ`.
pub fn natural_projection(pair: &BasisPair, delta: &[usize]) -> Result<DenseMatrix> {
    let n = pair.dim();
    let mut idx = to_zero_based(delta, n)?;
    idx.sort_unstable();
    idx.dedup();
    if idx.is_empty() {
        return Ok(DenseMatrix::zeros(n, n));
    }
    pair.f
        .select_columns(&idx)
        .matmul(&pair.gstar.select_rows(&idx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateMode {
    /// The whole claimed search space was enumerated.
    Exact,
    /// A lower bound certified by the witness set.
    LowerBoundWitness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub mode: EstimateMode,
    /// 1-based indices of the maximizing set.
    pub witness: Vec<usize>,
    pub evaluations: u64,
}

impl ConstantEstimate {
    /// `‖F·P_witness·G*‖`, recomputed from scratch.
    pub fn recompute(&self, pair: &BasisPair) -> Result<f64> {
        Ok(spectral_norm(&natural_projection(pair, &self.witness)?))
    }

    fn shifted(mut self, offset: usize) -> Self {
        for w in &mut self.witness {
            *w += offset;
        }
        self
    }
}

/// Maximum of `‖Q_n‖` over prefixes `{1..n}`.
pub fn basis_constant(pair: &BasisPair) -> ConstantEstimate {
    let n = pair.dim();
    let (value, best_len) = (1..=n)
        .into_par_iter()
        .map(|len| (pair.subset_norm(&(0..len).collect::<Vec<_>>()), len))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_max);
    ConstantEstimate {
        value,
        mode: EstimateMode::Exact,
        witness: (1..=best_len).collect(),
        evaluations: n as u64,
    }
}

/// Commutative, associative max with ties going to the lower key, so the
/// result does not depend on how work is split across threads.
fn pick_max<K: Ord>(a: (f64, K), b: (f64, K)) -> (f64, K) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Search configuration for the unconditional constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchBudget {
    /// Largest dimension enumerated exhaustively.
    pub exact_cutoff: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            exact_cutoff: 16,
            samples: 20_000,
            seed: 0,
        }
    }
}

/// Hard ceiling on exhaustive enumeration regardless of the budget.
pub const MAX_EXACT_DIM: usize = 30;

/// Supremum of `‖Q_Δ‖` over index sets `Δ`.
///
/// Exhaustive over all `2^N` sets (empty set included) when
/// `N <= budget.exact_cutoff`. Otherwise the maximum over all prefixes,
/// `budget.samples` seeded random sets, and a greedy single-flip ascent from
/// the best set found, reported as a lower bound.
pub fn unconditional_constant(pair: &BasisPair, budget: &SearchBudget) -> ConstantEstimate {
    let n = pair.dim();
    if n <= budget.exact_cutoff.min(MAX_EXACT_DIM) {
        exact_unconditional(pair)
    } else {
        searched_unconditional(pair, budget)
    }
}

/// Exhaustive enumeration of all `2^N` index sets.
pub fn exact_unconditional(pair: &BasisPair) -> ConstantEstimate {
    let n = pair.dim();
    assert!(
        n <= MAX_EXACT_DIM,
        "exhaustive enumeration limited to N <= {MAX_EXACT_DIM}"
    );
    let total = 1u64 << n;
    let (value, mask) = (0..total)
        .into_par_iter()
        .map(|mask| (pair.mask_norm(mask), mask))
        .reduce(|| (f64::NEG_INFINITY, u64::MAX), pick_max);
    ConstantEstimate {
        value,
        mode: EstimateMode::Exact,
        witness: (0..n)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| i + 1)
            .collect(),
        evaluations: total,
    }
}

fn searched_unconditional(pair: &BasisPair, budget: &SearchBudget) -> ConstantEstimate {
    let n = pair.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);

    let mut candidates: Vec<Vec<bool>> = (1..=n)
        .map(|len| (0..n).map(|i| i < len).collect())
        .collect();
    candidates.extend((0..budget.samples).map(|_| (0..n).map(|_| rng.random::<bool>()).collect()));

    let (mut value, best_idx) = candidates
        .par_iter()
        .enumerate()
        .map(|(i, flags)| (pair.flags_norm(flags), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_max);
    let mut evaluations = candidates.len() as u64;
    let mut best = candidates.swap_remove(best_idx);
    drop(candidates);

    for _ in 0..(10 * n) {
        let (flip_value, flip) = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut trial = best.clone();
                trial[i] = !trial[i];
                (pair.flags_norm(&trial), i)
            })
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_max);
        evaluations += n as u64;
        if flip_value > value + 1e-12 * value.max(1.0) {
            best[flip] = !best[flip];
            value = flip_value;
        } else {
            break;
        }
    }

    ConstantEstimate {
        value,
        mode: EstimateMode::LowerBoundWitness,
        witness: (0..n).filter(|&i| best[i]).map(|i| i + 1).collect(),
        evaluations,
    }
}

/// Maximum over prefixes of `‖G·P_n·F*‖` with `G = (G*)ᵀ`, `F* = Fᵀ`.
pub fn dual_basis_constant(pair: &BasisPair) -> f64 {
    let g = pair.gstar.transpose();
    let f_adj = pair.f.transpose();
    (1..=pair.dim())
        .into_par_iter()
        .map(|len| {
            let idx: Vec<usize> = (0..len).collect();
            let m = g
                .select_columns(&idx)
                .matmul(&f_adj.select_rows(&idx))
                .expect("conformable");
            spectral_norm(&m)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Minimum and maximum Euclidean column norm.
pub fn quasinormality_bounds(f: &DenseMatrix) -> (f64, f64) {
    f.column_norms()
        .into_iter()
        .fold((f64::INFINITY, 0.0), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Basis and unconditional constants of `⊕ blocks`, computed block by
/// block. Natural projections of a block-diagonal pair are block-diagonal,
/// so each supremum is the maximum of the per-block suprema.
pub fn direct_sum_constants(
    blocks: &[BasisPair],
    budget: &SearchBudget,
) -> (ConstantEstimate, ConstantEstimate) {
    let mut offset = 0;
    let mut basis: Option<ConstantEstimate> = None;
    let mut uncond: Option<ConstantEstimate> = None;
    let mut basis_evals = 0;
    let mut uncond_evals = 0;
    let mut all_exact = true;
    for block in blocks {
        let b = basis_constant(block).shifted(offset);
        let u = unconditional_constant(block, budget).shifted(offset);
        basis_evals += b.evaluations;
        uncond_evals += u.evaluations;
        all_exact &= u.mode == EstimateMode::Exact;
        // A full earlier block contributes the identity to every later prefix.
        let b = ConstantEstimate {
            witness: (1..=*b.witness.last().unwrap_or(&offset)).collect(),
            ..b
        };
        if basis.as_ref().is_none_or(|cur| b.value > cur.value) {
            basis = Some(b);
        }
        if uncond.as_ref().is_none_or(|cur| u.value > cur.value) {
            uncond = Some(u);
        }
        offset += block.dim();
    }
    let mut basis = basis.expect("at least one block");
    let mut uncond = uncond.expect("at least one block");
    basis.evaluations = basis_evals;
    uncond.evaluations = uncond_evals;
    if !all_exact {
        uncond.mode = EstimateMode::LowerBoundWitness;
    }
    (basis, uncond)
}

/// The summing-type pair: `F` has ones on the first row's leading two
/// entries and the superdiagonal, `-1` on the diagonal below the first row;
/// `G*` has a row of ones followed by `-1` upper triangles.
pub fn summing_counterexample(n: usize) -> Result<BasisPair> {
    if n == 0 {
        return Err(Error::param("N", 0.0, "must be at least 1"));
    }
    let mut f = DenseMatrix::zeros(n, n);
    let mut g = DenseMatrix::zeros(n, n);
    f.set(0, 0, 1.0);
    for i in 0..n {
        if i > 0 {
            f.set(i, i, -1.0);
        }
        if i + 1 < n {
            f.set(i, i + 1, 1.0);
        }
        for j in i..n {
            g.set(i, j, if i == 0 { 1.0 } else { -1.0 });
        }
    }
    BasisPair::new(f, g)
}

/// `(X·F, G*·X⁻¹)`.
pub fn transform_left(x: &DenseMatrix, pair: &BasisPair) -> Result<BasisPair> {
    let x_inv = invert(x)?;
    BasisPair::new(x.matmul(&pair.f)?, pair.gstar.matmul(&x_inv)?)
}

/// `(F·D, D⁻¹·G*)` for `D = diag(d)`.
pub fn transform_right_diagonal(pair: &BasisPair, d: &[f64]) -> Result<BasisPair> {
    if let Some(&bad) = d.iter().find(|v| **v == 0.0 || !v.is_finite()) {
        return Err(Error::param(
            "d",
            bad,
            "diagonal entries must be finite and nonzero",
        ));
    }
    let inv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
    BasisPair::new(pair.f.scale_columns(d)?, pair.gstar.scale_rows(&inv)?)
}

/// `(F·U_π, U_πᵀ·G*)`.
pub fn transform_right_permutation(pair: &BasisPair, perm: &Permutation) -> Result<BasisPair> {
    if perm.len() != pair.dim() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of {} elements for dimension {}",
            perm.len(),
            pair.dim()
        )));
    }
    let u = permutation_matrix(perm);
    BasisPair::new(pair.f.matmul(&u)?, u.transpose().matmul(&pair.gstar)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::olevskii::haar_matrix;

    fn rows(r: &[Vec<f64>]) -> DenseMatrix {
        DenseMatrix::from_rows(r).unwrap()
    }

    #[test]
    fn biorthogonal_inverse_examples() {
        let p = biorthogonal_inverse(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(p.gstar(), &DenseMatrix::identity(4));

        let s = summing_counterexample(2).unwrap();
        let p = biorthogonal_inverse(s.f()).unwrap();
        assert!(
            p.gstar()
                .max_abs_diff(&rows(&[vec![1.0, 1.0], vec![0.0, -1.0]]))
                < 1e-15
        );

        let a2 = haar_matrix(2).unwrap();
        let p = biorthogonal_inverse(&a2).unwrap();
        assert!(p.gstar().max_abs_diff(&a2.transpose()) < 1e-12);

        assert!(matches!(
            biorthogonal_inverse(&rows(&[vec![1.0, 2.0], vec![2.0, 4.0]])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn pair_construction_checks_products() {
        let bad = BasisPair::new(
            DenseMatrix::identity(2),
            DenseMatrix::from_diagonal(&[1.0, 2.0]),
        );
        assert!(matches!(bad, Err(Error::NotBiorthogonal { .. })));
        assert!(BasisPair::new(DenseMatrix::identity(2), DenseMatrix::identity(3)).is_err());
    }

    #[test]
    fn natural_projection_examples() {
        let s = summing_counterexample(3).unwrap();
        assert!(
            natural_projection(&s, &[1, 2, 3])
                .unwrap()
                .identity_deviation()
                < 1e-15
        );

        let id = biorthogonal_inverse(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(
            natural_projection(&id, &[2]).unwrap(),
            DenseMatrix::from_diagonal(&[0.0, 1.0, 0.0])
        );

        let s2 = summing_counterexample(2).unwrap();
        let q = natural_projection(&s2, &[1]).unwrap();
        assert_eq!(q, rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]));

        assert!(matches!(
            natural_projection(&s2, &[3]),
            Err(Error::InvalidIndex { index: 3, len: 2 })
        ));
        assert!(natural_projection(&s2, &[0]).is_err());
        assert_eq!(natural_projection(&s2, &[]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn summing_counterexample_matches_printed_corners() {
        let p = summing_counterexample(3).unwrap();
        assert_eq!(
            p.f(),
            &rows(&[
                vec![1.0, 1.0, 0.0],
                vec![0.0, -1.0, 1.0],
                vec![0.0, 0.0, -1.0]
            ])
        );
        assert_eq!(
            p.gstar(),
            &rows(&[
                vec![1.0, 1.0, 1.0],
                vec![0.0, -1.0, -1.0],
                vec![0.0, 0.0, -1.0]
            ])
        );
        assert!(summing_counterexample(0).is_err());
        for n in [1, 5, 9] {
            let p = summing_counterexample(n).unwrap();
            let q1 = spectral_norm(&natural_projection(&p, &[1]).unwrap());
            assert!((q1 - (n as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_basis_constant_witness_is_first_prefix() {
        let id = biorthogonal_inverse(&DenseMatrix::identity(5)).unwrap();
        let bc = basis_constant(&id);
        assert_eq!(bc.value, 1.0);
        assert_eq!(bc.witness, vec![1]);
        assert_eq!(bc.evaluations, 5);
    }

    #[test]
    fn summing_n4_basis_constant_by_enumeration() {
        let p = summing_counterexample(4).unwrap();
        let bc = basis_constant(&p);
        // independent enumeration of the four prefixes
        let brute = (1..=4)
            .map(|n| spectral_norm(&natural_projection(&p, &(1..=n).collect::<Vec<_>>()).unwrap()))
            .fold(0.0, f64::max);
        assert!(bc.value >= 2.0 - 1e-12);
        assert!((bc.value - brute).abs() < 1e-12);
        assert!((bc.recompute(&p).unwrap() - bc.value).abs() < 1e-12);
    }

    #[test]
    fn exact_enumeration_counts_all_subsets() {
        let p = summing_counterexample(4).unwrap();
        let u = unconditional_constant(&p, &SearchBudget::default());
        assert_eq!(u.mode, EstimateMode::Exact);
        assert_eq!(u.evaluations, 16);
        assert!(u.value >= basis_constant(&p).value - 1e-9);
        assert!((u.recompute(&p).unwrap() - u.value).abs() < 1e-9);
    }

    #[test]
    fn search_mode_is_lower_bound_and_deterministic() {
        let p = summing_counterexample(20).unwrap();
        let budget = SearchBudget {
            exact_cutoff: 16,
            samples: 300,
            seed: 7,
        };
        let a = unconditional_constant(&p, &budget);
        let b = unconditional_constant(&p, &budget);
        assert_eq!(a, b);
        assert_eq!(a.mode, EstimateMode::LowerBoundWitness);
        assert!(a.value >= basis_constant(&p).value - 1e-9);
        assert!((a.recompute(&p).unwrap() - a.value).abs() < 1e-9);
    }

    #[test]
    fn dual_constant_matches_transposed_pair() {
        let p = summing_counterexample(16).unwrap();
        let dual = dual_basis_constant(&p);
        let transposed = basis_constant(&p.transposed()).value;
        assert!((dual - transposed).abs() < 1e-9);
        assert!((dual - basis_constant(&p).value).abs() < 1e-9);
        let a = biorthogonal_inverse(&haar_matrix(2).unwrap()).unwrap();
        assert!((dual_basis_constant(&a) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quasinormality_examples() {
        assert_eq!(quasinormality_bounds(&DenseMatrix::identity(3)), (1.0, 1.0));
        let h: Vec<f64> = (1..=6).map(|i| 1.0 / i as f64).collect();
        assert_eq!(
            quasinormality_bounds(&DenseMatrix::from_diagonal(&h)),
            (1.0 / 6.0, 1.0)
        );
    }

    #[test]
    fn transforms_reject_bad_arguments() {
        let p = summing_counterexample(3).unwrap();
        assert!(transform_right_diagonal(&p, &[1.0, 0.0, 1.0]).is_err());
        assert!(transform_right_permutation(&p, &Permutation::identity(2)).is_err());
        assert!(matches!(
            transform_left(&DenseMatrix::zeros(3, 3), &p),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn scalar_left_transform_keeps_projections() {
        let p = summing_counterexample(5).unwrap();
        let t = transform_left(&DenseMatrix::identity(5).scale(2.0), &p).unwrap();
        for delta in [vec![1], vec![2, 4], vec![1, 3, 5]] {
            let a = natural_projection(&p, &delta).unwrap();
            let b = natural_projection(&t, &delta).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn direct_sum_constants_match_full_enumeration() {
        let blocks = vec![
            summing_counterexample(3).unwrap(),
            biorthogonal_inverse(&rows(&[vec![2.0, 1.0], vec![0.5, 1.0]])).unwrap(),
            summing_counterexample(4).unwrap(),
        ];
        let whole = BasisPair::direct_sum(&blocks).unwrap();
        let (b, u) = direct_sum_constants(&blocks, &SearchBudget::default());
        let bw = basis_constant(&whole);
        let uw = exact_unconditional(&whole);
        assert!((b.value - bw.value).abs() < 1e-9);
        assert!((u.value - uw.value).abs() < 1e-9);
        assert!((b.recompute(&whole).unwrap() - b.value).abs() < 1e-9);
        assert!((u.recompute(&whole).unwrap() - u.value).abs() < 1e-9);
        assert_eq!(u.mode, EstimateMode::Exact);
    }
}
