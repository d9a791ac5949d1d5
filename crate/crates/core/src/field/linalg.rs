use super::{FieldCtx, FieldElem};
use crate::error::{Error, Result};

/// Solves `rows * x = rhs` by Gauss-Jordan elimination.
///
/// Returns one solution (free variables set to zero), or `None` when the
/// system is inconsistent.
pub fn solve(ctx: &FieldCtx, rows: &[Vec<FieldElem>], rhs: &[FieldElem]) -> Option<Vec<FieldElem>> {
    let n_eq = rows.len();
    let n_var = rows.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<FieldElem>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut r = row.clone();
            r.push(b);
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..n_var {
        let Some(p) = (rank..n_eq).find(|&r| !aug[r][col].is_zero()) else {
            continue;
        };
        aug.swap(rank, p);
        let inv = ctx.inv(aug[rank][col]).expect("pivot is nonzero");
        for v in aug[rank].iter_mut() {
            *v = ctx.mul(*v, inv);
        }
        let pivot_row = aug[rank].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let factor = row[col];
            for (v, &pv) in row.iter_mut().zip(&pivot_row).skip(col) {
                *v = ctx.sub(*v, ctx.mul(factor, pv));
            }
        }
        pivots.push(col);
        rank += 1;
        if rank == n_eq {
            break;
        }
    }
    if aug[rank..].iter().any(|row| !row[n_var].is_zero()) {
        return None;
    }
    let mut x = vec![FieldElem::ZERO; n_var];
    for (r, &col) in pivots.iter().enumerate() {
        x[col] = aug[r][n_var];
    }
    Some(x)
}

/// Inverse of a square matrix.
pub fn invert(ctx: &FieldCtx, matrix: &[Vec<FieldElem>]) -> Result<Vec<Vec<FieldElem>>> {
    let k = matrix.len();
    if matrix.iter().any(|row| row.len() != k) {
        return Err(Error::ShapeMismatch("matrix to invert is not square".into()));
    }
    let mut aug: Vec<Vec<FieldElem>> = matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { FieldElem::ONE } else { FieldElem::ZERO }));
            r
        })
        .collect();
    for col in 0..k {
        let p = (col..k)
            .find(|&r| !aug[r][col].is_zero())
            .ok_or_else(|| Error::InvalidParameters("singular matrix".into()))?;
        aug.swap(col, p);
        let inv = ctx.inv(aug[col][col])?;
        for v in aug[col].iter_mut() {
            *v = ctx.mul(*v, inv);
        }
        let pivot_row = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v = ctx.sub(*v, ctx.mul(factor, pv));
            }
        }
    }
    Ok(aug.into_iter().map(|row| row[k..].to_vec()).collect())
}
