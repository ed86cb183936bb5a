use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Handle to a scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarVar {
    pub(crate) index: usize,
}

/// Handle to a symmetric matrix variable. Its `dim*(dim+1)/2` free entries
/// occupy consecutive scalar slots, upper triangle in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymVar {
    pub(crate) offset: usize,
    pub(crate) dim: usize,
}

/// Handle to a general (unstructured) matrix variable stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatVar {
    pub(crate) offset: usize,
    pub(crate) rows: usize,
    pub(crate) cols: usize,
}

impl SymVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn free_entries(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Scalar slot holding entry `(i, j)` (equivalently `(j, i)`).
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // entries before row i: sum_{r<i} (dim - r)
        let row_start = i * self.dim - i * i.saturating_sub(1) / 2;
        self.offset + row_start + (j - i)
    }

    pub fn expr(&self) -> AffineMatrix {
        AffineMatrix::from(*self)
    }
}

impl MatVar {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn expr(&self) -> AffineMatrix {
        AffineMatrix::from(*self)
    }
}

impl ScalarVar {
    pub fn expr(&self) -> AffineScalar {
        AffineScalar::from(*self)
    }
}

/// Affine scalar expression `constant + Σ coeff·x_slot`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineScalar {
    pub(crate) terms: BTreeMap<usize, f64>,
    pub(crate) constant: f64,
}

impl AffineScalar {
    pub fn constant(value: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(&k, &c)| c * values[k]).sum::<f64>()
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for c in self.terms.values_mut() {
            *c *= factor;
        }
        self
    }

    pub(crate) fn max_slot(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    fn add_term(&mut self, slot: usize, coeff: f64) {
        *self.terms.entry(slot).or_insert(0.0) += coeff;
    }
}

impl From<ScalarVar> for AffineScalar {
    fn from(v: ScalarVar) -> Self {
        let mut s = AffineScalar::default();
        s.add_term(v.index, 1.0);
        s
    }
}

impl From<f64> for AffineScalar {
    fn from(v: f64) -> Self {
        AffineScalar::constant(v)
    }
}

impl Add for AffineScalar {
    type Output = AffineScalar;
    fn add(mut self, rhs: AffineScalar) -> AffineScalar {
        self.constant += rhs.constant;
        for (k, c) in rhs.terms {
            self.add_term(k, c);
        }
        self
    }
}

impl Sub for AffineScalar {
    type Output = AffineScalar;
    fn sub(self, rhs: AffineScalar) -> AffineScalar {
        self + rhs.scale(-1.0)
    }
}

impl Neg for AffineScalar {
    type Output = AffineScalar;
    fn neg(self) -> AffineScalar {
        self.scale(-1.0)
    }
}

impl Mul<f64> for AffineScalar {
    type Output = AffineScalar;
    fn mul(self, rhs: f64) -> AffineScalar {
        self.scale(rhs)
    }
}

/// Affine matrix expression `constant + Σ x_slot·coeff_slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMatrix {
    pub(crate) constant: DMatrix<f64>,
    pub(crate) terms: BTreeMap<usize, DMatrix<f64>>,
}

fn same_shape(what: &str, a: &AffineMatrix, b: &AffineMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            what,
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(())
}

impl AffineMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(DMatrix::identity(dim, dim))
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        Self {
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    /// `s · M` for an affine scalar `s` and a constant matrix `M`.
    pub fn scalar_times(s: &AffineScalar, m: &DMatrix<f64>) -> Self {
        let mut out = Self::constant(m * s.constant);
        for (&k, &c) in &s.terms {
            out.terms.insert(k, m * c);
        }
        out
    }

    /// 1×1 expression wrapping a scalar.
    pub fn from_scalar(s: &AffineScalar) -> Self {
        Self::scalar_times(s, &DMatrix::from_element(1, 1, 1.0))
    }

    pub fn nrows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.constant.shape()
    }

    pub fn constant_part(&self) -> &DMatrix<f64> {
        &self.constant
    }

    pub fn evaluate(&self, values: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (&k, c) in &self.terms {
            m += c * values[k];
        }
        m
    }

    pub fn transpose(&self) -> Self {
        Self {
            constant: self.constant.transpose(),
            terms: self.terms.iter().map(|(&k, c)| (k, c.transpose())).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            constant: &self.constant * factor,
            terms: self.terms.iter().map(|(&k, c)| (k, c * factor)).collect(),
        }
    }

    /// `self · M`.
    pub fn mul_right(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(self.ncols(), m.nrows(), "affine matrix product dimension");
        Self {
            constant: &self.constant * m,
            terms: self.terms.iter().map(|(&k, c)| (k, c * m)).collect(),
        }
    }

    /// `M · self`.
    pub fn mul_left(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.ncols(), self.nrows(), "affine matrix product dimension");
        Self {
            constant: m * &self.constant,
            terms: self.terms.iter().map(|(&k, c)| (k, m * c)).collect(),
        }
    }

    pub fn trace(&self) -> AffineScalar {
        let mut s = AffineScalar::constant(self.constant.trace());
        for (&k, c) in &self.terms {
            let t = c.trace();
            if t != 0.0 {
                s.add_term(k, t);
            }
        }
        s
    }

    /// Entry `(i, j)` as an affine scalar.
    pub fn entry(&self, i: usize, j: usize) -> AffineScalar {
        let mut s = AffineScalar::constant(self.constant[(i, j)]);
        for (&k, c) in &self.terms {
            if c[(i, j)] != 0.0 {
                s.add_term(k, c[(i, j)]);
            }
        }
        s
    }

    pub fn checked_add(&self, rhs: &AffineMatrix) -> Result<Self> {
        same_shape("affine matrix sum", self, rhs)?;
        let mut out = self.clone();
        out.constant += &rhs.constant;
        for (&k, c) in &rhs.terms {
            match out.terms.get_mut(&k) {
                Some(existing) => *existing += c,
                None => {
                    out.terms.insert(k, c.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn checked_sub(&self, rhs: &AffineMatrix) -> Result<Self> {
        self.checked_add(&rhs.scale(-1.0))
    }

    /// Assembles a block matrix; `None` entries are zero blocks whose size is
    /// inferred from the row and column they sit in.
    pub fn blocks(rows: &[Vec<Option<AffineMatrix>>]) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nr];
        let mut widths = vec![None; nc];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != nc {
                return Err(Error::dim("block row length", nc, row.len()));
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(b) = cell {
                    for (slot, val, what) in [
                        (&mut heights[i], b.nrows(), "block row height"),
                        (&mut widths[j], b.ncols(), "block column width"),
                    ] {
                        match *slot {
                            None => *slot = Some(val),
                            Some(prev) if prev != val => {
                                return Err(Error::dim(what, prev, val));
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights
            .into_iter()
            .enumerate()
            .map(|(i, h)| h.ok_or_else(|| Error::Argument(format!("block row {i} is entirely zero"))))
            .collect::<Result<_>>()?;
        let widths: Vec<usize> = widths
            .into_iter()
            .enumerate()
            .map(|(j, w)| w.ok_or_else(|| Error::Argument(format!("block column {j} is entirely zero"))))
            .collect::<Result<_>>()?;
        let total_r: usize = heights.iter().sum();
        let total_c: usize = widths.iter().sum();
        let mut out = AffineMatrix::zeros(total_r, total_c);
        let mut r0 = 0;
        for (i, row) in rows.iter().enumerate() {
            let mut c0 = 0;
            for (j, cell) in row.iter().enumerate() {
                if let Some(b) = cell {
                    out.constant
                        .view_mut((r0, c0), (heights[i], widths[j]))
                        .copy_from(&b.constant);
                    for (&k, c) in &b.terms {
                        let t = out
                            .terms
                            .entry(k)
                            .or_insert_with(|| DMatrix::zeros(total_r, total_c));
                        t.view_mut((r0, c0), (heights[i], widths[j])).copy_from(c);
                    }
                }
                c0 += widths[j];
            }
            r0 += heights[i];
        }
        Ok(out)
    }

    /// Symmetric block matrix from its lower triangle: `lower[i]` holds blocks
    /// `(i, 0..=i)`; the upper triangle is filled with transposes.
    pub fn symmetric_blocks(lower: &[Vec<Option<AffineMatrix>>]) -> Result<Self> {
        let n = lower.len();
        let mut full: Vec<Vec<Option<AffineMatrix>>> = vec![vec![None; n]; n];
        for (i, row) in lower.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(Error::dim(format!("lower block row {i}"), i + 1, row.len()));
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(b) = cell {
                    if j < i {
                        full[j][i] = Some(b.transpose());
                    }
                    full[i][j] = Some(b.clone());
                }
            }
        }
        Self::blocks(&full)
    }

    /// Largest deviation from symmetry over the constant and all coefficients.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows() != self.ncols() {
            return f64::INFINITY;
        }
        std::iter::once(&self.constant)
            .chain(self.terms.values())
            .map(|m| (m - m.transpose()).amax())
            .fold(0.0, f64::max)
    }

    pub(crate) fn max_slot(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
}

impl From<SymVar> for AffineMatrix {
    fn from(v: SymVar) -> Self {
        let d = v.dim;
        let mut out = AffineMatrix::zeros(d, d);
        let mut slot = v.offset;
        for i in 0..d {
            for j in i..d {
                let mut c = DMatrix::zeros(d, d);
                c[(i, j)] = 1.0;
                c[(j, i)] = 1.0;
                out.terms.insert(slot, c);
                slot += 1;
            }
        }
        out
    }
}

impl From<MatVar> for AffineMatrix {
    fn from(v: MatVar) -> Self {
        let mut out = AffineMatrix::zeros(v.rows, v.cols);
        for i in 0..v.rows {
            for j in 0..v.cols {
                let mut c = DMatrix::zeros(v.rows, v.cols);
                c[(i, j)] = 1.0;
                out.terms.insert(v.offset + i * v.cols + j, c);
            }
        }
        out
    }
}

impl From<DMatrix<f64>> for AffineMatrix {
    fn from(m: DMatrix<f64>) -> Self {
        AffineMatrix::constant(m)
    }
}

impl From<&DMatrix<f64>> for AffineMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        AffineMatrix::constant(m.clone())
    }
}

impl Add for &AffineMatrix {
    type Output = AffineMatrix;
    fn add(self, rhs: &AffineMatrix) -> AffineMatrix {
        self.checked_add(rhs).expect("affine matrix sum dimension")
    }
}

impl Add for AffineMatrix {
    type Output = AffineMatrix;
    fn add(self, rhs: AffineMatrix) -> AffineMatrix {
        &self + &rhs
    }
}

impl Sub for &AffineMatrix {
    type Output = AffineMatrix;
    fn sub(self, rhs: &AffineMatrix) -> AffineMatrix {
        self.checked_sub(rhs).expect("affine matrix difference dimension")
    }
}

impl Sub for AffineMatrix {
    type Output = AffineMatrix;
    fn sub(self, rhs: AffineMatrix) -> AffineMatrix {
        &self - &rhs
    }
}

impl Neg for AffineMatrix {
    type Output = AffineMatrix;
    fn neg(self) -> AffineMatrix {
        self.scale(-1.0)
    }
}

impl Mul<f64> for AffineMatrix {
    type Output = AffineMatrix;
    fn mul(self, rhs: f64) -> AffineMatrix {
        self.scale(rhs)
    }
}

impl Mul<&DMatrix<f64>> for &AffineMatrix {
    type Output = AffineMatrix;
    fn mul(self, rhs: &DMatrix<f64>) -> AffineMatrix {
        self.mul_right(rhs)
    }
}

impl Mul<&AffineMatrix> for &DMatrix<f64> {
    type Output = AffineMatrix;
    fn mul(self, rhs: &AffineMatrix) -> AffineMatrix {
        rhs.mul_left(self)
    }
}
