//! Haar-type orthogonal blocks, geometric weights, the key-lemma assembly
//! that turns a diagonal operator into a conditional-basis model, and the
//! rank-one projection witnesses.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::basis::{quasinormality_bounds, BasisPair};
use crate::error::{Error, Result};
use crate::kernel::{condition_number, direct_sum, permutation_matrix, spectral_norm, Permutation};
use crate::matrix::DenseMatrix;
use crate::spectrum::SpectrumSequence;

pub const MAX_HAAR_LEVEL: usize = 12;
pub const DEFAULT_ALPHA: f64 = 0.8;

/// The `2^k × 2^k` Haar-type orthogonal matrix `A_k`.
///
/// Column 1 is constant `2^{-k/2}`. Column `j = 2^s + v` (`1 ≤ v ≤ 2^s`)
/// carries `+2^{(s-k)/2}` on rows `(v-1)2^{k-s} < i ≤ (2v-1)2^{k-s-1}` and
/// `-2^{(s-k)/2}` on rows `(2v-1)2^{k-s-1} < i ≤ v·2^{k-s}`.
pub fn haar_matrix(k: usize) -> Result<DenseMatrix> {
    if k == 0 || k > MAX_HAAR_LEVEL {
        return Err(Error::param(
            "k",
            k as f64,
            format!("must lie in 1..={MAX_HAAR_LEVEL}"),
        ));
    }
    let n = 1usize << k;
    let mut a = DenseMatrix::zeros(n, n);
    let first = half_power(k);
    for i in 0..n {
        a.set(i, 0, first);
    }
    for s in 0..k {
        let height = 1usize << (k - s);
        let value = half_power(k - s);
        for v in 1..=(1usize << s) {
            let col = (1usize << s) + v - 1;
            let start = (v - 1) * height;
            for i in start..start + height / 2 {
                a.set(i, col, value);
            }
            for i in start + height / 2..start + height {
                a.set(i, col, -value);
            }
        }
    }
    Ok(a)
}

/// `2^{-m/2}`, correctly rounded.
fn half_power(m: usize) -> f64 {
    let whole = 0.5f64.powi((m / 2) as i32);
    if m % 2 == 1 {
        whole * FRAC_1_SQRT_2
    } else {
        whole
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 / SQRT_2 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "alpha",
            alpha,
            "must lie strictly between 1/sqrt(2) and 1",
        ))
    }
}

/// Exponents of the diagonal of `T_{(k,α)}` in display order:
/// `k, k, k-1, k-1, k-2 (×4), …, 1 (×2^{k-1})`.
pub fn weight_exponents(k: usize) -> Vec<usize> {
    let mut e = vec![k, k];
    for j in (1..k).rev() {
        e.extend(std::iter::repeat_n(j, 1 << (k - j)));
    }
    e
}

/// Exponent attached to each position `i = 1..2^k` of a level-`k` index
/// list `Δ_k = (n_1, …, n_{2^k})`, read from the pairing condition:
/// the last two positions get `k`, and for `1 ≤ j ≤ k-1` positions
/// `2^k(1 - 2^{1-j}) + 1 ..= 2^k(1 - 2^{-j})` get `j`.
///
/// The same exponents come out of reversing [`weight_exponents`], which is
/// the order the rearranged diagonal uses; the two readings coincide.
pub fn delta_exponents(k: usize) -> Vec<usize> {
    let n = 1usize << k;
    let mut e = vec![0; n];
    e[n - 2] = k;
    e[n - 1] = k;
    for j in 1..k {
        let lo = n - (n >> (j - 1)) + 1;
        let hi = n - (n >> j);
        for slot in &mut e[lo - 1..hi] {
            *slot = j;
        }
    }
    e
}

/// `T_{(k,α)}`: diagonal with `α^k` twice, then `α^j` repeated `2^{k-j}`
/// times for `j = k-1` down to `1`.
pub fn weight_matrix(k: usize, alpha: f64) -> Result<DenseMatrix> {
    if k == 0 {
        return Err(Error::param("k", 0.0, "must be at least 1"));
    }
    check_alpha(alpha)?;
    let d: Vec<f64> = weight_exponents(k)
        .iter()
        .map(|&e| alpha.powi(e as i32))
        .collect();
    Ok(DenseMatrix::from_diagonal(&d))
}

/// `(T_{(k,α)}·A_kᵀ, A_k·T_{(k,α)}⁻¹)`.
pub fn olevskii_block(k: usize, alpha: f64) -> Result<BasisPair> {
    let a = haar_matrix(k)?;
    let w = weight_matrix(k, alpha)?;
    let w_inv: Vec<f64> = w.diagonal().iter().map(|v| 1.0 / v).collect();
    let f = w.matmul(&a.transpose())?;
    let gstar = a.scale_columns(&w_inv)?;
    BasisPair::new(f, gstar)
}

/// Parameters of the key-lemma assembly. Index lists are 1-based into a
/// spectrum sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OlevskiiPlan {
    pub levels: usize,
    pub alpha: f64,
    /// `Δ_k` in position order `n_1, …, n_{2^k}`.
    pub subsets: Vec<Vec<usize>>,
    /// `(c_k, d_k)` per level.
    pub c_bounds: Vec<(f64, f64)>,
    /// Indices forming the inert diagonal `S_k` per level.
    pub leftovers: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlanLimits {
    /// Upper bound on `max_k d_k / c_k`.
    pub max_ratio: f64,
}

impl Default for PlanLimits {
    fn default() -> Self {
        PlanLimits { max_ratio: 1e3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Violation {
    /// Malformed plan data (sizes, ranges, duplicates, parameters).
    Structure { level: usize, message: String },
    /// `d_k / c_k` above the configured bound.
    RatioBound {
        level: usize,
        ratio: f64,
        bound: f64,
    },
    /// `c_k ≤ α^w/λ_n ≤ d_k` fails.
    #[serde(rename_all = "camelCase")]
    Pairing {
        level: usize,
        position: usize,
        index: usize,
        exponent: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    /// `max Δ_k < min Δ_{k'}` fails, or index lists overlap.
    #[serde(rename_all = "camelCase")]
    Ordering {
        level: usize,
        other_level: usize,
        message: String,
    },
    /// An index inside the assembled range belongs to no block.
    Coverage { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// Checks the ratio bound, the pairing inequalities and the level ordering.
/// Violations are collected, never raised.
pub fn validate_plan(
    spectrum: &SpectrumSequence,
    plan: &OlevskiiPlan,
    limits: &PlanLimits,
) -> ValidationReport {
    let mut v = Vec::new();
    let len = spectrum.len();
    let structure = |level: usize, message: String| Violation::Structure { level, message };

    if check_alpha(plan.alpha).is_err() {
        v.push(structure(
            0,
            format!("alpha {} outside (1/sqrt(2), 1)", plan.alpha),
        ));
    }
    if plan.levels == 0 || plan.levels > MAX_HAAR_LEVEL {
        v.push(structure(
            0,
            format!("levels {} outside 1..={MAX_HAAR_LEVEL}", plan.levels),
        ));
    }
    for (name, count) in [
        ("subsets", plan.subsets.len()),
        ("cBounds", plan.c_bounds.len()),
        ("leftovers", plan.leftovers.len()),
    ] {
        if count != plan.levels {
            v.push(structure(
                0,
                format!("{name} has {count} entries for {} levels", plan.levels),
            ));
        }
    }
    if !v.is_empty() {
        return ValidationReport {
            valid: false,
            violations: v,
        };
    }

    let mut all_used = vec![0usize; len + 1];
    for k in 1..=plan.levels {
        let delta = &plan.subsets[k - 1];
        let (c, d) = plan.c_bounds[k - 1];
        if delta.len() != 1 << k {
            v.push(structure(
                k,
                format!("|Δ_{k}| = {} but 2^{k} = {} required", delta.len(), 1 << k),
            ));
        }
        if !(c > 0.0 && c <= d && d.is_finite()) {
            v.push(structure(k, format!("need 0 < c_k <= d_k, got ({c}, {d})")));
        } else if d / c > limits.max_ratio {
            v.push(Violation::RatioBound {
                level: k,
                ratio: d / c,
                bound: limits.max_ratio,
            });
        }
        for &idx in delta.iter().chain(&plan.leftovers[k - 1]) {
            if idx == 0 || idx > len {
                v.push(structure(k, format!("index {idx} outside 1..={len}")));
            } else {
                all_used[idx] += 1;
            }
        }
        if delta.len() == 1 << k {
            for ((pos, &idx), &w) in delta.iter().enumerate().zip(&delta_exponents(k)) {
                if idx == 0 || idx > len {
                    continue;
                }
                let value = plan.alpha.powi(w as i32) / spectrum.at(idx);
                if !(c <= value && value <= d) {
                    v.push(Violation::Pairing {
                        level: k,
                        position: pos + 1,
                        index: idx,
                        exponent: w,
                        value,
                        lower: c,
                        upper: d,
                    });
                }
            }
        }
    }
    for (idx, &count) in all_used.iter().enumerate() {
        if count > 1 {
            v.push(Violation::Ordering {
                level: 0,
                other_level: 0,
                message: format!("index {idx} used {count} times across subsets and leftovers"),
            });
        }
    }
    for k in 1..plan.levels {
        let this = &plan.subsets[k - 1];
        let next = &plan.subsets[k];
        if let (Some(max), Some(min)) = (this.iter().max(), next.iter().min()) {
            if max >= min {
                v.push(Violation::Ordering {
                    level: k,
                    other_level: k + 1,
                    message: format!("max Δ_{k} = {max} is not below min Δ_{} = {min}", k + 1),
                });
            }
        }
    }
    // Uncovered indices are only allowed in the leading passthrough block.
    let first_min = plan.subsets[0].iter().copied().min().unwrap_or(1);
    let top = all_used.iter().rposition(|&c| c > 0).unwrap_or(0);
    for (index, _) in all_used
        .iter()
        .enumerate()
        .take(top + 1)
        .skip(first_min)
        .filter(|(_, &c)| c == 0)
    {
        v.push(Violation::Coverage { index });
    }

    ValidationReport {
        valid: v.is_empty(),
        violations: v,
    }
}

/// One diagonal block of the assembled model, in block order.
#[derive(Clone, Debug)]
pub struct ModelBlock {
    /// 0 for the leading passthrough block.
    pub level: usize,
    /// Original 1-based spectrum index at each block position.
    pub indices: Vec<usize>,
    pub pair: BasisPair,
}

/// Output of the key-lemma assembly.
#[derive(Clone, Debug)]
pub struct ConditionalModel {
    /// Values `λ_1..λ_N` of the diagonal operator section.
    pub diagonal: Vec<f64>,
    /// `⊕[T_{(k,α)}A_kᵀ; S_k]`, preceded by the passthrough diagonal.
    pub f: DenseMatrix,
    pub gstar: DenseMatrix,
    /// Invertible scaling `⊕X_k`.
    pub x: DenseMatrix,
    /// Block orthogonal `⊕[A_kᵀ; I]`.
    pub u: DenseMatrix,
    /// `Ũ = U_π` for this `π`; block position `q` holds index `π⁻¹(q)`.
    pub rearrangement: Permutation,
    /// Right scaling `⊕[c_k⁻¹I; I]` with `T̃U = X·F·D`.
    pub c_scaling: Vec<f64>,
    /// `T·Ũ·U`: images of the orthonormal basis.
    pub c: DenseMatrix,
    pub blocks: Vec<ModelBlock>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelCheck {
    pub unitary_deviation: f64,
    pub biorthogonal_deviation: f64,
    pub kappa_x: f64,
    pub kappa_bound: f64,
    /// `‖ŨᵀC − X·F·D‖_max`.
    pub factorization_deviation: f64,
    /// `‖X·⊕[T_{(k,α)}c_k⁻¹; S_k] − T̃‖_max`.
    pub scaling_deviation: f64,
}

impl ModelCheck {
    pub fn holds(&self) -> bool {
        self.unitary_deviation < 1e-9
            && self.biorthogonal_deviation < 1e-9
            && self.kappa_x <= self.kappa_bound + 1e-6
            && self.factorization_deviation < 1e-9
            && self.scaling_deviation < 1e-9
    }
}

impl ConditionalModel {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// The full pair `(F, G*)`.
    pub fn pair(&self) -> Result<BasisPair> {
        BasisPair::new(self.f.clone(), self.gstar.clone())
    }

    /// The pairs `T_{(k,α)}A_kᵀ` of the levels, without leftovers.
    pub fn level_pairs(&self) -> Vec<&BasisPair> {
        self.blocks
            .iter()
            .filter(|b| b.level > 0)
            .map(|b| &b.pair)
            .collect()
    }

    /// Recomputes every model identity.
    pub fn check(&self, plan: &OlevskiiPlan) -> Result<ModelCheck> {
        let n = self.dim();
        let unitary_deviation = self.u.transpose().matmul(&self.u)?.identity_deviation();
        let biorthogonal_deviation = self
            .f
            .matmul(&self.gstar)?
            .identity_deviation()
            .max(self.gstar.matmul(&self.f)?.identity_deviation());
        let kappa_x = condition_number(&self.x)?.value();
        let max_ratio = plan
            .c_bounds
            .iter()
            .map(|(c, d)| d / c)
            .fold(1.0f64, f64::max);
        let u_tilde = permutation_matrix(&self.rearrangement);
        let lhs = u_tilde.transpose().matmul(&self.c)?;
        let rhs = self.x.matmul(&self.f)?.scale_columns(&self.c_scaling)?;
        let factorization_deviation = lhs.max_abs_diff(&rhs);

        // T̃ = Ũᵀ T Ũ and X · ⊕[T c⁻¹; S]
        let t = DenseMatrix::from_diagonal(&self.diagonal);
        let t_tilde = u_tilde.transpose().matmul(&t)?.matmul(&u_tilde)?;
        let mut scaled = Vec::with_capacity(n);
        for b in &self.blocks {
            if b.level == 0 {
                scaled.extend(b.indices.iter().map(|&i| self.diagonal[i - 1]));
            } else {
                let c_k = plan.c_bounds[b.level - 1].0;
                let w = weight_exponents(b.level);
                scaled.extend(w.iter().map(|&e| plan.alpha.powi(e as i32) / c_k));
                scaled.extend(b.indices[w.len()..].iter().map(|&i| self.diagonal[i - 1]));
            }
        }
        let scaling_deviation = self
            .x
            .matmul(&DenseMatrix::from_diagonal(&scaled))?
            .max_abs_diff(&t_tilde);

        Ok(ModelCheck {
            unitary_deviation,
            biorthogonal_deviation,
            kappa_x,
            kappa_bound: max_ratio * max_ratio,
            factorization_deviation,
            scaling_deviation,
        })
    }
}

/// Assembles the conditional-basis model of a diagonal operator from a
/// validated plan.
///
/// Level `k` occupies the block positions of `Δ_k` in reversed order
/// (`n_{2^k}, …, n_1`) followed by its leftovers in increasing order. Indices
/// below `min Δ_1` not claimed by any level form a leading passthrough block
/// on which every factor is the identity (or the plain diagonal).
pub fn keylemma_assemble(
    spectrum: &SpectrumSequence,
    plan: &OlevskiiPlan,
    limits: &PlanLimits,
) -> Result<ConditionalModel> {
    let report = validate_plan(spectrum, plan, limits);
    if !report.valid {
        return Err(Error::PlanRejected(report));
    }
    let used: Vec<usize> = plan
        .subsets
        .iter()
        .chain(&plan.leftovers)
        .flatten()
        .copied()
        .collect();
    let n = *used.iter().max().expect("validated plan is nonempty");
    let mut claimed = vec![false; n + 1];
    for &i in &used {
        claimed[i] = true;
    }
    let passthrough: Vec<usize> = (1..=n).filter(|&i| !claimed[i]).collect();
    let lambda = |i: usize| spectrum.at(i);

    let mut blocks = Vec::new();
    let mut f_blocks = Vec::new();
    let mut g_blocks = Vec::new();
    let mut x_diag = Vec::with_capacity(n);
    let mut u_blocks = Vec::new();
    let mut c_scaling = Vec::with_capacity(n);
    let mut order: Vec<usize> = Vec::with_capacity(n);

    if !passthrough.is_empty() {
        let vals: Vec<f64> = passthrough.iter().map(|&i| lambda(i)).collect();
        let inv: Vec<f64> = vals.iter().map(|v| 1.0 / v).collect();
        let pair = BasisPair::new(
            DenseMatrix::from_diagonal(&vals),
            DenseMatrix::from_diagonal(&inv),
        )?;
        f_blocks.push(pair.f().clone());
        g_blocks.push(pair.gstar().clone());
        x_diag.extend(std::iter::repeat_n(1.0, vals.len()));
        u_blocks.push(DenseMatrix::identity(vals.len()));
        c_scaling.extend(std::iter::repeat_n(1.0, vals.len()));
        order.extend(&passthrough);
        blocks.push(ModelBlock {
            level: 0,
            indices: passthrough.clone(),
            pair,
        });
    }

    for k in 1..=plan.levels {
        let delta = &plan.subsets[k - 1];
        let mut leftovers = plan.leftovers[k - 1].clone();
        leftovers.sort_unstable();
        let (c_k, _) = plan.c_bounds[k - 1];
        let size = 1usize << k;

        let block = olevskii_block(k, plan.alpha)?;
        let s_vals: Vec<f64> = leftovers.iter().map(|&i| lambda(i)).collect();
        let s_inv: Vec<f64> = s_vals.iter().map(|v| 1.0 / v).collect();
        let mut f_parts = vec![block.f().clone()];
        let mut g_parts = vec![block.gstar().clone()];
        if !s_vals.is_empty() {
            f_parts.push(DenseMatrix::from_diagonal(&s_vals));
            g_parts.push(DenseMatrix::from_diagonal(&s_inv));
        }
        let pair = BasisPair::new(direct_sum(&f_parts)?, direct_sum(&g_parts)?)?;

        let reversed: Vec<usize> = delta.iter().rev().copied().collect();
        for (&idx, &w) in reversed.iter().zip(&weight_exponents(k)) {
            x_diag.push(c_k * lambda(idx) / plan.alpha.powi(w as i32));
        }
        x_diag.extend(std::iter::repeat_n(1.0, leftovers.len()));

        let mut u_parts = vec![haar_matrix(k)?.transpose()];
        if !leftovers.is_empty() {
            u_parts.push(DenseMatrix::identity(leftovers.len()));
        }
        u_blocks.push(direct_sum(&u_parts)?);

        c_scaling.extend(std::iter::repeat_n(1.0 / c_k, size));
        c_scaling.extend(std::iter::repeat_n(1.0, leftovers.len()));

        let indices: Vec<usize> = reversed.iter().chain(&leftovers).copied().collect();
        order.extend(&indices);
        f_blocks.push(pair.f().clone());
        g_blocks.push(pair.gstar().clone());
        blocks.push(ModelBlock {
            level: k,
            indices,
            pair,
        });
    }

    // Ũ e_q = e_{order[q]}, i.e. a one at (order[q], q): U_π with π(order[q]) = q.
    let mut images = vec![0usize; n];
    for (q, &orig) in order.iter().enumerate() {
        images[orig - 1] = q + 1;
    }
    let rearrangement = Permutation::from_one_based(&images)?;

    let diagonal: Vec<f64> = (1..=n).map(lambda).collect();
    let u = direct_sum(&u_blocks)?;
    let c = permutation_matrix(&rearrangement)
        .matmul(&u)?
        .scale_rows(&diagonal)?;

    Ok(ConditionalModel {
        diagonal,
        f: direct_sum(&f_blocks)?,
        gstar: direct_sum(&g_blocks)?,
        x: DenseMatrix::from_diagonal(&x_diag),
        u,
        rearrangement,
        c_scaling,
        c,
        blocks,
    })
}

/// Quasinormality bounds of `⊕ T_{(k,α)}A_kᵀ` over the model's levels.
pub fn level_quasinormality(model: &ConditionalModel) -> (f64, f64) {
    model
        .level_pairs()
        .iter()
        .map(|p| quasinormality_bounds(p.f()))
        .fold((f64::INFINITY, 0.0), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Rank1Witness {
    /// `diag(a₁, a₂)` with `a₁ = λ₁+δ`, `a₂ = λ₂−δ`.
    pub a: (f64, f64),
    #[serde(skip)]
    pub projection: DenseMatrix,
    /// `‖A·P·A⁻¹‖`.
    pub norm_value: f64,
    /// `λ₂ / (2√2·λ₁)`.
    pub bound: f64,
    pub holds: bool,
}

/// Rank-one orthogonal projection `P = e·eᵀ`, `e = (e₁+e₂)/√2`, conjugated by
/// `A = diag(λ₁+δ, λ₂−δ)`; compares `‖APA⁻¹‖` with `λ₂/(2√2λ₁) − ε`.
pub fn rank1_conjugation_witness(
    lambda1: f64,
    lambda2: f64,
    delta: f64,
    epsilon: f64,
) -> Result<Rank1Witness> {
    if !(lambda1 > 0.0 && lambda1.is_finite() && lambda2.is_finite()) {
        return Err(Error::param(
            "lambda1",
            lambda1,
            "must be positive and finite",
        ));
    }
    if lambda2 < lambda1 {
        return Err(Error::param("lambda2", lambda2, "must be at least lambda1"));
    }
    let window_ok = if lambda1 == lambda2 {
        delta == 0.0
    } else {
        delta >= 0.0 && delta < (lambda2 - lambda1) / 2.0
    };
    if !window_ok {
        return Err(Error::param(
            "delta",
            delta,
            "must satisfy 0 <= delta < (lambda2 - lambda1)/2, or be 0 when lambda1 = lambda2",
        ));
    }
    let (a1, a2) = (lambda1 + delta, lambda2 - delta);
    let h = 0.5;
    let projection = DenseMatrix::new(2, 2, vec![h, h, h, h])?;
    let conj = DenseMatrix::from_diagonal(&[a1, a2])
        .matmul(&projection)?
        .scale_columns(&[1.0 / a1, 1.0 / a2])?;
    let norm_value = spectral_norm(&conj);
    let bound = lambda2 / (2.0 * SQRT_2 * lambda1);
    Ok(Rank1Witness {
        a: (a1, a2),
        projection,
        norm_value,
        bound,
        holds: norm_value >= bound - epsilon,
    })
}

/// `‖A_n P A_n⁻¹‖` on each two-dimensional block `diag(λ_even, λ_odd)`.
pub fn projection_blowup_witness(pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    pairs
        .iter()
        .map(|&(odd, even)| {
            if !(even > 0.0 && even <= odd) {
                return Err(Error::InvalidInput(format!(
                    "pair ({odd}, {even}) needs 0 < λ_even <= λ_odd"
                )));
            }
            Ok(rank1_conjugation_witness(even, odd, 0.0, 0.0)?.norm_value)
        })
        .collect()
}
