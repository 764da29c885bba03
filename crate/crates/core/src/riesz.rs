//! Growth of leading-section condition numbers as a finite stand-in for
//! "represents an invertible operator".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{condition_number, ConditionNumber, CONDITION_INFINITY_THRESHOLD};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RieszVerdict {
    RieszConsistent,
    NotRiesz,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RieszThresholds {
    /// Every section at or below this (with no growth) reads as bounded.
    pub bound: f64,
    /// The largest section above this (with growth) reads as divergent.
    pub divergence: f64,
}

impl Default for RieszThresholds {
    fn default() -> Self {
        RieszThresholds {
            bound: 1e2,
            divergence: 1e3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RieszReport {
    pub section_sizes: Vec<usize>,
    pub condition_numbers: Vec<ConditionNumber>,
    pub verdict: RieszVerdict,
}

/// Condition numbers of the leading principal sections of `f`.
pub fn riesz_diagnostic(
    f: &DenseMatrix,
    section_sizes: &[usize],
    thresholds: &RieszThresholds,
) -> Result<RieszReport> {
    if !f.is_square() {
        return Err(Error::DimensionMismatch(
            "Riesz diagnostic needs a square matrix".into(),
        ));
    }
    check_sections(section_sizes, f.rows())?;
    let kappas = section_sizes
        .iter()
        .map(|&n| condition_number(&f.leading_section(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(report(section_sizes, kappas, thresholds))
}

/// Same diagnostic for `diag(values)` without materializing the matrix.
pub fn riesz_diagnostic_diagonal(
    values: &[f64],
    section_sizes: &[usize],
    thresholds: &RieszThresholds,
) -> Result<RieszReport> {
    check_sections(section_sizes, values.len())?;
    let kappas = section_sizes
        .iter()
        .map(|&n| {
            let (lo, hi) = values[..n]
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
                    (lo.min(v.abs()), hi.max(v.abs()))
                });
            if hi == 0.0 || lo < CONDITION_INFINITY_THRESHOLD * hi {
                ConditionNumber::Infinite
            } else {
                ConditionNumber::Finite(hi / lo)
            }
        })
        .collect();
    Ok(report(section_sizes, kappas, thresholds))
}

fn check_sections(sizes: &[usize], dim: usize) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("no section sizes given".into()));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "section sizes must be positive and strictly increasing".into(),
        ));
    }
    if *sizes.last().unwrap() > dim {
        return Err(Error::InvalidInput(format!(
            "largest section {} exceeds dimension {dim}",
            sizes.last().unwrap()
        )));
    }
    Ok(())
}

fn report(sizes: &[usize], kappas: Vec<ConditionNumber>, t: &RieszThresholds) -> RieszReport {
    let values: Vec<f64> = kappas.iter().map(|k| k.value()).collect();
    let tail = &values[values.len().saturating_sub(3)..];
    let growing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0] * (1.0 + 1e-9));
    let last = *values.last().unwrap();
    let verdict = if last > t.divergence && growing {
        RieszVerdict::NotRiesz
    } else if !growing && values.iter().all(|&v| v <= t.bound) {
        RieszVerdict::RieszConsistent
    } else {
        RieszVerdict::Inconclusive
    };
    RieszReport {
        section_sizes: sizes.to_vec(),
        condition_numbers: kappas,
        verdict,
    }
}
