//! Dense matrices over `F_q`, column partitioning and the exact product
//! `C = Aᵀ B`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{FieldCtx, FieldElem};

/// Row-major dense matrix of canonical field elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl FMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FMatrix { rows, cols, data: vec![FieldElem::ZERO; rows * cols] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = FMatrix::zeros(size, size);
        for i in 0..size {
            m.data[i * size + i] = FieldElem::ONE;
        }
        m
    }

    pub fn from_elems(rows: usize, cols: usize, data: Vec<FieldElem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(FMatrix { rows, cols, data })
    }

    /// Builds a matrix from raw integers, rejecting non-canonical entries.
    pub fn from_values(ctx: &FieldCtx, rows: usize, cols: usize, values: &[u64]) -> Result<Self> {
        let data = values.iter().map(|&v| ctx.try_elem(v)).collect::<Result<Vec<_>>>()?;
        FMatrix::from_elems(rows, cols, data)
    }

    pub fn random<R: Rng + ?Sized>(ctx: &FieldCtx, rows: usize, cols: usize, rng: &mut R) -> Self {
        FMatrix { rows, cols, data: (0..rows * cols).map(|_| ctx.random(rng)).collect() }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> FieldElem {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: FieldElem) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[FieldElem] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[FieldElem] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [FieldElem] {
        &mut self.data
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.data.iter().map(|e| e.value())
    }

    pub fn transpose(&self) -> FMatrix {
        let mut out = FMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Splits into `parts` equal column blocks `[M_0 M_1 ...]`.
    pub fn split_cols(&self, parts: usize) -> Result<Vec<FMatrix>> {
        if parts == 0 || !self.cols.is_multiple_of(parts) {
            return Err(Error::NonDivisiblePartition { len: self.cols, parts });
        }
        let width = self.cols / parts;
        Ok((0..parts).map(|p| self.col_range(p * width, width)).collect())
    }

    fn col_range(&self, start: usize, width: usize) -> FMatrix {
        let mut data = Vec::with_capacity(self.rows * width);
        for i in 0..self.rows {
            data.extend_from_slice(&self.row(i)[start..start + width]);
        }
        FMatrix { rows: self.rows, cols: width, data }
    }

    /// Horizontal concatenation.
    pub fn hcat(blocks: &[FMatrix]) -> Result<FMatrix> {
        let first = blocks.first().ok_or(Error::EmptyInput("no blocks to concatenate"))?;
        if blocks.iter().any(|b| b.rows != first.rows) {
            return Err(Error::ShapeMismatch("blocks differ in row count".into()));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(first.rows * cols);
        for i in 0..first.rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(FMatrix { rows: first.rows, cols, data })
    }

    /// Assembles a block grid; `grid[i][j]` lands at block row `i`, column `j`.
    pub fn from_blocks(grid: &[Vec<FMatrix>]) -> Result<FMatrix> {
        let block_rows: Vec<FMatrix> = grid.iter().map(|row| FMatrix::hcat(row)).collect::<Result<_>>()?;
        let first = block_rows.first().ok_or(Error::EmptyInput("empty block grid"))?;
        if block_rows.iter().any(|b| b.cols != first.cols) {
            return Err(Error::ShapeMismatch("block rows differ in width".into()));
        }
        let rows = block_rows.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * first.cols);
        for b in &block_rows {
            data.extend_from_slice(&b.data);
        }
        Ok(FMatrix { rows, cols: first.cols, data })
    }

    /// Copy of the `rows x cols` block whose top-left corner is `(row, col)`.
    pub fn block(&self, row: usize, col: usize, rows: usize, cols: usize) -> FMatrix {
        let mut data = Vec::with_capacity(rows * cols);
        for i in row..row + rows {
            data.extend_from_slice(&self.row(i)[col..col + cols]);
        }
        FMatrix { rows, cols, data }
    }

    /// Appends zero columns until `cols` is a multiple of `multiple`.
    pub fn pad_cols(&self, multiple: usize) -> FMatrix {
        let target = self.cols.div_ceil(multiple.max(1)) * multiple.max(1);
        if target == self.cols {
            return self.clone();
        }
        let pad = FMatrix::zeros(self.rows, target - self.cols);
        FMatrix::hcat(&[self.clone(), pad]).expect("row counts agree")
    }

    pub fn same_shape(&self, other: &FMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }
}

/// Dimensions of one distributed product `Aᵀ B` with `A: s x r`, `B: s x t`,
/// `A` split into `m` and `B` into `n` column blocks, over `workers` workers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemShape {
    pub s: usize,
    pub r: usize,
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub workers: usize,
}

impl ProblemShape {
    /// Validated shape; rejects the degenerate case where both inputs are wide.
    pub fn new(s: usize, r: usize, t: usize, m: usize, n: usize, workers: usize) -> Result<Self> {
        let shape = ProblemShape::new_relaxed(s, r, t, m, n, workers)?;
        if s < r && s < t {
            return Err(Error::DegenerateShape { s, r, t });
        }
        Ok(shape)
    }

    /// Like [`ProblemShape::new`] but accepts wide-by-wide inputs.
    pub fn new_relaxed(s: usize, r: usize, t: usize, m: usize, n: usize, workers: usize) -> Result<Self> {
        if s == 0 || r == 0 || t == 0 {
            return Err(Error::EmptyInput("matrix dimensions must be positive"));
        }
        if workers == 0 {
            return Err(Error::InvalidParameters("need at least one worker".into()));
        }
        if m == 0 || !r.is_multiple_of(m) {
            return Err(Error::NonDivisiblePartition { len: r, parts: m });
        }
        if n == 0 || !t.is_multiple_of(n) {
            return Err(Error::NonDivisiblePartition { len: t, parts: n });
        }
        Ok(ProblemShape { s, r, t, m, n, workers })
    }

    pub fn block_rows(&self) -> usize {
        self.r / self.m
    }

    pub fn block_cols(&self) -> usize {
        self.t / self.n
    }

    /// Field elements in one worker result.
    pub fn block_len(&self) -> usize {
        self.block_rows() * self.block_cols()
    }

    /// Multiply-accumulates one worker spends on its product.
    pub fn worker_macs(&self) -> u64 {
        (self.s * self.block_len()) as u64
    }

    pub fn check_inputs(&self, a: &FMatrix, b: &FMatrix) -> Result<()> {
        if a.rows() != self.s || a.cols() != self.r || b.rows() != self.s || b.cols() != self.t {
            return Err(Error::ShapeMismatch(format!(
                "inputs are {}x{} and {}x{}, shape expects {}x{} and {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols(),
                self.s,
                self.r,
                self.s,
                self.t
            )));
        }
        Ok(())
    }
}

const TILE: usize = 32;

/// Exact `Aᵀ B` using the default execution policy.
pub fn transpose_mul(ctx: &FieldCtx, a: &FMatrix, b: &FMatrix) -> Result<FMatrix> {
    transpose_mul_with(ctx, a, b, Exec::default())
}

/// Exact `Aᵀ B`. Output tiles of rows are independent, so `exec` only changes
/// scheduling, never the result.
pub fn transpose_mul_with(ctx: &FieldCtx, a: &FMatrix, b: &FMatrix, exec: Exec) -> Result<FMatrix> {
    if a.rows != b.rows {
        return Err(Error::ShapeMismatch(format!(
            "Aᵀ B needs equal row counts, got {} and {}",
            a.rows, b.rows
        )));
    }
    let at = a.transpose();
    let bt = b.transpose();
    let (out_rows, out_cols) = (a.cols, b.cols);
    let tiles = exec.map_range(out_rows.div_ceil(TILE), |tile| {
        let rows = tile * TILE..((tile + 1) * TILE).min(out_rows);
        let mut out = vec![FieldElem::ZERO; rows.len() * out_cols];
        for jb in (0..out_cols).step_by(TILE) {
            for (li, i) in rows.clone().enumerate() {
                let lhs = at.row(i);
                for j in jb..(jb + TILE).min(out_cols) {
                    out[li * out_cols + j] = ctx.dot(lhs, bt.row(j));
                }
            }
        }
        out
    });
    FMatrix::from_elems(out_rows, out_cols, tiles.concat())
}

/// `sum_j coeffs[j] * blocks[j]`.
pub fn lincomb(ctx: &FieldCtx, blocks: &[&FMatrix], coeffs: &[FieldElem]) -> Result<FMatrix> {
    let first = blocks.first().ok_or(Error::EmptyInput("lincomb needs at least one block"))?;
    if blocks.len() != coeffs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} blocks but {} coefficients",
            blocks.len(),
            coeffs.len()
        )));
    }
    if blocks.iter().any(|b| !b.same_shape(first)) {
        return Err(Error::ShapeMismatch("lincomb blocks differ in shape".into()));
    }
    let mut out = FMatrix::zeros(first.rows, first.cols);
    for (block, &c) in blocks.iter().zip(coeffs) {
        ctx.axpy(&mut out.data, c, &block.data);
    }
    Ok(out)
}

pub fn add(ctx: &FieldCtx, a: &FMatrix, b: &FMatrix) -> Result<FMatrix> {
    lincomb(ctx, &[a, b], &[FieldElem::ONE, FieldElem::ONE])
}
