//! Spectral selection: window cardinalities, the inductive choice of
//! `Δ_k`, segment refinement, the ratio-limit test and the harmonic demo.

use serde::Serialize;

use crate::basis::{direct_sum_constants, ConstantEstimate, SearchBudget};
use crate::error::{Error, Result};
use crate::olevskii::{
    keylemma_assemble, level_quasinormality, validate_plan, ModelCheck, OlevskiiPlan, PlanLimits,
};
use crate::riesz::{riesz_diagnostic_diagonal, RieszReport, RieszThresholds};
use crate::spectrum::SpectrumSequence;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 1.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "delta",
            delta,
            "must be a finite number greater than 1",
        ))
    }
}

/// Spectrum values inside the closed window `[t/δ, t]`, as a half-open
/// range of positions (values are decreasing).
fn window(values: &[f64], lo: f64, hi: f64) -> std::ops::Range<usize> {
    let start = values.partition_point(|&v| v > hi);
    let end = values.partition_point(|&v| v >= lo);
    start..end.max(start)
}

/// `Card([t/δ, t] ∩ spectrum)` for each `t`.
pub fn cardinality_profile(
    spectrum: &SpectrumSequence,
    delta: f64,
    ts: &[f64],
) -> Result<Vec<usize>> {
    check_delta(delta)?;
    ts.iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param("t", t, "must be positive"));
            }
            Ok(window(spectrum.values(), t / delta, t).len())
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelDiagnostics {
    pub level: usize,
    pub t0: f64,
    /// Window cardinality for exponents `j = 1..=k` at the chosen `t₀`.
    pub window_counts: Vec<usize>,
    /// Number of `t₀` candidates examined.
    pub candidates_tried: usize,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionResult {
    pub plan: OlevskiiPlan,
    pub t0_per_level: Vec<f64>,
    pub diagnostics: Vec<LevelDiagnostics>,
}

/// Builds `Δ_1, …, Δ_K` level by level.
///
/// For level `k`, candidate `t₀` runs down the spectrum starting below every
/// value already used. A candidate is accepted once each window
/// `[t₀α^j/δ, t₀α^j]`, `j = 1..k`, holds at least `2^k` values. Values are
/// then drawn largest-first: two for exponent `k`, then `2^{k-j}` for each
/// `j = k-1, …, 1`, excluding earlier draws. Finally `c_k = 1/t₀`,
/// `d_k = δ/t₀`.
pub fn select_subsets(
    spectrum: &SpectrumSequence,
    alpha: f64,
    delta: f64,
    levels: usize,
) -> Result<SelectionResult> {
    check_delta(delta)?;
    if !(alpha > std::f64::consts::FRAC_1_SQRT_2 && alpha < 1.0) {
        return Err(Error::param(
            "alpha",
            alpha,
            "must lie strictly between 1/sqrt(2) and 1",
        ));
    }
    if levels == 0 || levels > crate::olevskii::MAX_HAAR_LEVEL {
        return Err(Error::param("levels", levels as f64, "must lie in 1..=12"));
    }
    let values = spectrum.values();
    let mut subsets = Vec::with_capacity(levels);
    let mut c_bounds = Vec::with_capacity(levels);
    let mut t0s = Vec::with_capacity(levels);
    let mut diagnostics = Vec::with_capacity(levels);
    // zero-based position of the first value still available
    let mut next_free = 0usize;

    for k in 1..=levels {
        let need = 1usize << k;
        let mut first_failure: Option<(usize, usize)> = None;
        let mut accepted = None;
        for (tried, t_pos) in (next_free..values.len()).enumerate() {
            let t0 = values[t_pos];
            let ranges: Vec<_> = (1..=k)
                .map(|j| {
                    let hi = t0 * alpha.powi(j as i32);
                    window(values, hi / delta, hi)
                })
                .collect();
            match ranges.iter().position(|r| r.len() < need) {
                Some(j) => {
                    first_failure.get_or_insert((j + 1, ranges[j].len()));
                }
                None => {
                    accepted = Some((t0, ranges, tried + 1));
                    break;
                }
            }
        }
        let Some((t0, ranges, tried)) = accepted else {
            let (exponent, found) = first_failure.unwrap_or((1, 0));
            return Err(Error::InsufficientCardinality {
                level: k,
                exponent,
                found,
                required: need,
            });
        };

        // draws[j] holds the zero-based positions drawn for exponent j
        let mut taken: Vec<usize> = Vec::with_capacity(need);
        let mut draws: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
        for j in (1..=k).rev() {
            let count = if j == k { 2 } else { 1 << (k - j) };
            let picked: Vec<usize> = ranges[j - 1]
                .clone()
                .filter(|p| !taken.contains(p))
                .take(count)
                .collect();
            debug_assert_eq!(picked.len(), count);
            taken.extend(&picked);
            draws[j] = picked;
        }
        // position order n_1..n_{2^k}: exponent 1 first, exponent k last
        let delta_k: Vec<usize> = (1..=k)
            .flat_map(|j| draws[j].iter().map(|p| p + 1))
            .collect();
        next_free = taken.iter().max().copied().unwrap() + 1;

        diagnostics.push(LevelDiagnostics {
            level: k,
            t0,
            window_counts: ranges.iter().map(|r| r.len()).collect(),
            candidates_tried: tried,
        });
        subsets.push(delta_k);
        c_bounds.push((1.0 / t0, delta / t0));
        t0s.push(t0);
    }

    let leftovers = leftovers_for(&subsets);
    let plan = OlevskiiPlan {
        levels,
        alpha,
        subsets,
        c_bounds,
        leftovers,
    };
    Ok(SelectionResult {
        plan,
        t0_per_level: t0s,
        diagnostics,
    })
}

/// `S_k`: indices from `min Δ_k` up to just below `min Δ_{k+1}` (or up to
/// `max Δ_K` for the last level) that are not in `Δ_k`.
pub fn leftovers_for(subsets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    (0..subsets.len())
        .map(|i| {
            let lo = *subsets[i].iter().min().unwrap();
            let hi = match subsets.get(i + 1) {
                Some(next) => *next.iter().min().unwrap() - 1,
                None => *subsets[i].iter().max().unwrap(),
            };
            (lo..=hi).filter(|n| !subsets[i].contains(n)).collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RefinedGrid {
    pub points: Vec<f64>,
    /// Number of subsegments each input segment was cut into.
    pub segment_counts: Vec<usize>,
}

/// Inserts geometric points so that consecutive ratios are at most `m`,
/// using the fewest points per segment.
pub fn segment_cut(mu: &[f64], m: f64) -> Result<RefinedGrid> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::param(
            "M",
            m,
            "must be a finite number greater than 1",
        ));
    }
    SpectrumSequence::explicit(mu.to_vec())?;
    let mut points = vec![mu[0]];
    let mut counts = Vec::with_capacity(mu.len().saturating_sub(1));
    for w in mu.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        let exact = (hi / lo).ln() / m.ln();
        let pieces = ((exact - 1e-12).ceil() as usize).max(1);
        let step = (hi / lo).powf(1.0 / pieces as f64);
        for i in 1..pieces {
            points.push(hi / step.powi(i as i32));
        }
        points.push(lo);
        counts.push(pieces);
    }
    Ok(RefinedGrid {
        points,
        segment_counts: counts,
    })
}

/// `max(2, 1.1·‖T‖/μ₁)`.
pub fn default_cut_ratio(operator_norm: f64, mu1: f64) -> f64 {
    f64::max(2.0, 1.1 * operator_norm / mu1)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatioReport {
    pub passes: bool,
    pub max_ratio: f64,
    pub first_quarter_mean: f64,
    pub last_quarter_mean: f64,
    pub tail_ratios: Vec<f64>,
}

pub const DEFAULT_RATIO_TOLERANCE: f64 = 0.05;

/// Tail behaviour of `λ_n/λ_{n+1}` over the last `tail_length` ratios.
pub fn ratio_limit_check(
    spectrum: &SpectrumSequence,
    tail_length: usize,
    tolerance: f64,
) -> Result<RatioReport> {
    let v = spectrum.values();
    if tail_length == 0 || tail_length >= v.len() {
        return Err(Error::param(
            "tail",
            tail_length as f64,
            format!(
                "must lie in 1..{} for a spectrum of length {}",
                v.len(),
                v.len()
            ),
        ));
    }
    let ratios: Vec<f64> = v[v.len() - 1 - tail_length..]
        .windows(2)
        .map(|w| w[0] / w[1])
        .collect();
    let quarter = (ratios.len() / 4).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = mean(&ratios[..quarter]);
    let last = mean(&ratios[ratios.len() - quarter..]);
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(RatioReport {
        passes: max_ratio <= 1.0 + tolerance && last <= first,
        max_ratio,
        first_quarter_mean: first,
        last_quarter_mean: last,
        tail_ratios: ratios,
    })
}

#[derive(Clone, Debug)]
pub struct DemoConfig {
    pub levels: usize,
    pub alpha: f64,
    pub delta: f64,
    pub spectrum_len: usize,
    pub riesz_sections: Vec<usize>,
    pub budget: SearchBudget,
    pub limits: PlanLimits,
    pub thresholds: RieszThresholds,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            levels: 3,
            alpha: 0.8,
            delta: 2.0,
            spectrum_len: 10_000,
            riesz_sections: vec![64, 1024, 4096],
            budget: SearchBudget::default(),
            limits: PlanLimits::default(),
            thresholds: RieszThresholds::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuasinormalitySummary {
    pub min_norm: f64,
    pub max_norm: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DemoReport {
    pub levels: usize,
    pub alpha: f64,
    pub delta: f64,
    pub spectrum_len: usize,
    pub selection: SelectionResult,
    pub plan_valid: bool,
    pub dimension: usize,
    pub model_check: ModelCheck,
    /// Basis constant of the pair truncated after each level.
    pub basis_by_level: Vec<f64>,
    pub unconditional_by_level: Vec<f64>,
    pub basis_estimates: Vec<ConstantEstimate>,
    pub unconditional_estimates: Vec<ConstantEstimate>,
    pub strictly_increasing: bool,
    pub quasinormality: QuasinormalitySummary,
    pub riesz: RieszReport,
}

/// Margin required between consecutive per-level unconditional constants.
pub const STRICT_MARGIN: f64 = 1e-6;

/// Selection, assembly and per-level constants for `diag(1, 1/2, 1/3, …)`.
pub fn harmonic_demo(
    config: &DemoConfig,
) -> Result<(DemoReport, crate::olevskii::ConditionalModel)> {
    let spectrum = SpectrumSequence::harmonic(config.spectrum_len)?;
    let selection = select_subsets(&spectrum, config.alpha, config.delta, config.levels)?;
    let plan_valid = validate_plan(&spectrum, &selection.plan, &config.limits).valid;
    let model = keylemma_assemble(&spectrum, &selection.plan, &config.limits)?;
    let model_check = model.check(&selection.plan)?;

    let mut basis_estimates = Vec::with_capacity(config.levels);
    let mut unconditional_estimates = Vec::with_capacity(config.levels);
    for level in 1..=config.levels {
        let prefix: Vec<_> = model
            .blocks
            .iter()
            .filter(|b| b.level <= level)
            .map(|b| b.pair.clone())
            .collect();
        let (b, u) = direct_sum_constants(&prefix, &config.budget);
        basis_estimates.push(b);
        unconditional_estimates.push(u);
    }
    let basis_by_level: Vec<f64> = basis_estimates.iter().map(|e| e.value).collect();
    let unconditional_by_level: Vec<f64> =
        unconditional_estimates.iter().map(|e| e.value).collect();
    let strictly_increasing = unconditional_by_level
        .windows(2)
        .all(|w| w[1] > w[0] + STRICT_MARGIN);

    let (min_norm, max_norm) = level_quasinormality(&model);
    let harmonic_diag =
        SpectrumSequence::harmonic(config.riesz_sections.last().copied().unwrap_or(1).max(1))?;
    let riesz = riesz_diagnostic_diagonal(
        harmonic_diag.values(),
        &config.riesz_sections,
        &config.thresholds,
    )?;

    let report = DemoReport {
        levels: config.levels,
        alpha: config.alpha,
        delta: config.delta,
        spectrum_len: config.spectrum_len,
        selection,
        plan_valid,
        dimension: model.dim(),
        model_check,
        basis_by_level,
        unconditional_by_level,
        basis_estimates,
        unconditional_estimates,
        strictly_increasing,
        quasinormality: QuasinormalitySummary {
            min_norm,
            max_norm,
            ratio: max_norm / min_norm,
        },
        riesz,
    };
    Ok((report, model))
}
