//! Dense row-major real matrices and the plain-text matrix format.
//!
//! The text format: an optional run of `#` comment lines, a header line
//! `rows cols`, then `rows` lines of `cols` space-separated decimals.
//! Blank lines and further `#` lines are ignored anywhere.

use std::fmt::Write as _;
use std::fs;
use std::ops::Mul;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at ({}, {})",
                pos / cols + 1,
                pos % cols + 1
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Zero-based entry access.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        self.data
            .iter()
            .enumerate()
            .all(|(pos, &v)| v == 0.0 || pos / self.cols == pos % self.cols)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let other_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Multiplies column `j` by `d[j]` (right multiplication by a diagonal).
    pub fn scale_columns(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} column scales for {} columns",
                d.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            for (v, s) in row.iter_mut().zip(d) {
                *v *= s;
            }
        }
        Ok(out)
    }

    /// Multiplies row `i` by `d[i]` (left multiplication by a diagonal).
    pub fn scale_rows(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "{} row scales for {} rows",
                d.len(),
                self.rows
            )));
        }
        let mut out = self.clone();
        for (row, s) in out.data.chunks_mut(self.cols).zip(d) {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Ok(out)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "max_abs_diff on mismatched shapes"
        );
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    /// Deviation from the identity in max-entry norm.
    pub fn identity_deviation(&self) -> f64 {
        assert!(self.is_square());
        self.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks(self.cols) {
            for (s, v) in sq.iter_mut().zip(row) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Leading `n`×`n` principal section.
    pub fn leading_section(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.rows || n > self.cols {
            return Err(Error::InvalidInput(format!(
                "section size {n} outside 1..={}",
                self.rows.min(self.cols)
            )));
        }
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.data[i * n..(i + 1) * n]
                .copy_from_slice(&self.data[i * self.cols..i * self.cols + n]);
        }
        Ok(out)
    }

    /// Keeps columns whose index is in `keep` (zero-based, in order).
    pub fn select_columns(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * keep.len());
        for row in self.data.chunks(self.cols) {
            data.extend(keep.iter().map(|&j| row[j]));
        }
        DenseMatrix {
            rows: self.rows,
            cols: keep.len(),
            data,
        }
    }

    /// Keeps rows whose index is in `keep` (zero-based, in order).
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.cols * keep.len());
        for &i in keep {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: keep.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            data.extend(m.row(i).iter().copied());
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for row in self.data.chunks(self.cols) {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                // shortest representation that round-trips exactly
                write!(s, "{v:?}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "missing `rows cols` header".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        let parse_dim = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: header_line,
                message: format!("bad dimension `{s}`: {e}"),
            })
        };
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: header_line,
                message: format!("header must be `rows cols`, got `{header}`"),
            });
        }
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        if rows == 0 || cols == 0 {
            return Err(Error::Parse {
                line: header_line,
                message: "dimensions must be positive".into(),
            });
        }

        let mut data = Vec::with_capacity(rows * cols);
        let mut seen_rows = 0;
        for (line_no, line) in lines {
            if seen_rows == rows {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("more than the declared {rows} rows"),
                });
            }
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad number `{tok}`: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite entry `{tok}`"),
                    });
                }
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {cols} entries, found {}", data.len() - before),
                });
            }
            seen_rows += 1;
        }
        if seen_rows != rows {
            return Err(Error::Parse {
                line: text.lines().count() + 1,
                message: format!("expected {rows} rows, found {seen_rows}"),
            });
        }
        DenseMatrix::new(rows, cols, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

impl Mul for &DenseMatrix {
    type Output = DenseMatrix;

    /// Panics on non-conformable operands; use [`DenseMatrix::matmul`] for a
    /// checked product.
    fn mul(self, rhs: &DenseMatrix) -> DenseMatrix {
        self.matmul(rhs).expect("non-conformable matrix product")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn product_and_transpose() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let b = a.transpose();
        assert_eq!(b.rows(), 3);
        let p = &a * &b;
        assert_eq!(p.as_slice(), &[14.0, 32.0, 32.0, 77.0]);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn save_load_identity_is_bit_identical() {
        let id = DenseMatrix::identity(3);
        let back = DenseMatrix::parse_text(&id.to_text()).unwrap();
        assert_eq!(back, id);
    }

    #[test]
    fn comments_are_ignored() {
        let text = "# a comment\n# another\n2 2\n1 0\n# inline comment line\n0 1\n";
        assert_eq!(
            DenseMatrix::parse_text(text).unwrap(),
            DenseMatrix::identity(2)
        );
    }

    #[test]
    fn extra_row_reports_line_four() {
        let text = "2 2\n1 0\n0 1\n5 5\n";
        match DenseMatrix::parse_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn short_row_and_bad_token() {
        assert!(matches!(
            DenseMatrix::parse_text("2 2\n1 0\n0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            DenseMatrix::parse_text("1 2\n1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(DenseMatrix::parse_text("2 2\n1 0\n").is_err());
    }

    #[test]
    fn sections_and_selection() {
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        assert_eq!(
            m.leading_section(2).unwrap().as_slice(),
            &[1.0, 2.0, 4.0, 5.0]
        );
        assert_eq!(
            m.select_columns(&[2, 0]).as_slice(),
            &[3.0, 1.0, 6.0, 4.0, 9.0, 7.0]
        );
        assert_eq!(m.select_rows(&[1]).as_slice(), &[4.0, 5.0, 6.0]);
        assert!(m.leading_section(4).is_err());
        assert!(!m.is_diagonal());
        assert!(DenseMatrix::from_diagonal(&[1.0, 2.0]).is_diagonal());
    }
}
