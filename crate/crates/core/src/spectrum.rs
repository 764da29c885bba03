use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SpectrumTag {
    Harmonic,
    Geometric { ratio: f64 },
    Explicit,
}

/// A finite, strictly decreasing sample of positive spectral values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumSequence {
    values: Vec<f64>,
    tag: SpectrumTag,
}

impl SpectrumSequence {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::tagged(values, SpectrumTag::Explicit)
    }

    fn tagged(values: Vec<f64>, tag: SpectrumTag) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if let Some(pos) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "spectrum value {} at position {} is not a positive finite number",
                values[pos],
                pos + 1
            )));
        }
        if let Some(pos) = values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput(format!(
                "spectrum not strictly decreasing at positions {} and {}",
                pos + 1,
                pos + 2
            )));
        }
        Ok(SpectrumSequence { values, tag })
    }

    /// `1, 1/2, …, 1/n`.
    pub fn harmonic(n: usize) -> Result<Self> {
        Self::tagged(
            (1..=n).map(|i| 1.0 / i as f64).collect(),
            SpectrumTag::Harmonic,
        )
    }

    /// `r, r², …, rⁿ` for `0 < r < 1`.
    pub fn geometric(ratio: f64, n: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::param(
                "r",
                ratio,
                "geometric ratio must lie in (0, 1)",
            ));
        }
        let values = (1..=n).map(|i| ratio.powi(i as i32)).collect();
        Self::tagged(values, SpectrumTag::Geometric { ratio })
    }

    /// Parses a generator tag: `harmonic:N` or `geometric:r:N`.
    pub fn from_tag(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let bad = |what: &str| Error::InvalidInput(format!("bad spectrum tag `{spec}`: {what}"));
        let count = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad("N must be a positive integer"))
        };
        match parts.as_slice() {
            ["harmonic", n] => Self::harmonic(count(n)?),
            ["geometric", r, n] => {
                let r: f64 = r.parse().map_err(|_| bad("r must be a number"))?;
                Self::geometric(r, count(n)?)
            }
            _ => Err(bad("expected `harmonic:N` or `geometric:r:N`")),
        }
    }

    /// One decimal per line; `#` comments and blank lines ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|e| Error::Parse {
                line: i + 1,
                message: format!("bad number `{line}`: {e}"),
            })?;
            if let Some(&prev) = values.last() {
                if v >= prev {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("{v} does not decrease from {prev}"),
                    });
                }
            }
            values.push(v);
        }
        Self::explicit(values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&fs::read_to_string(path)?)
    }

    /// A generator tag if `source` parses as one, otherwise a file path.
    pub fn from_source(source: &str) -> Result<Self> {
        if source.starts_with("harmonic:") || source.starts_with("geometric:") {
            Self::from_tag(source)
        } else {
            Self::load(source)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> SpectrumTag {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at 1-based index `n`.
    pub fn at(&self, n: usize) -> f64 {
        self.values[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let h = SpectrumSequence::from_tag("harmonic:4").unwrap();
        assert_eq!(h.values(), &[1.0, 0.5, 1.0 / 3.0, 0.25]);
        let g = SpectrumSequence::from_tag("geometric:0.5:3").unwrap();
        assert_eq!(g.values(), &[0.5, 0.25, 0.125]);
        assert_eq!(g.tag(), SpectrumTag::Geometric { ratio: 0.5 });
        assert!(SpectrumSequence::from_tag("geometric:2:3").is_err());
        assert!(SpectrumSequence::from_tag("harmonic").is_err());
        assert!(SpectrumSequence::from_tag("harmonic:0").is_err());
    }

    #[test]
    fn enforces_strict_decrease() {
        assert!(SpectrumSequence::explicit(vec![1.0, 1.0]).is_err());
        assert!(SpectrumSequence::explicit(vec![1.0, -0.5]).is_err());
        assert!(SpectrumSequence::explicit(vec![0.5, 1.0]).is_err());
        let s = SpectrumSequence::parse_text("# header\n1\n0.5\n\n0.25\n").unwrap();
        assert_eq!(s.len(), 3);
        assert!(matches!(
            SpectrumSequence::parse_text("1\n0.5\n0.7\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
