use crate::error::{Error, Result};
use crate::field::{invert, FieldCtx, FieldElem};

/// Systematic `(total, m)` MDS generator `[I; P]`.
///
/// `P` is a Cauchy matrix with rows and columns rescaled so that its first
/// row and first column are all ones. Every square submatrix of a Cauchy
/// matrix is nonsingular and rescaling keeps that property, so any `m` rows
/// of the generator are independent. The first parity row is `[1 1 ... 1]`,
/// giving the familiar `A_0 + A_1` parity for `m = 2`.
#[derive(Clone, Debug)]
pub struct SystematicMds {
    ctx: FieldCtx,
    m: usize,
    generator: Vec<Vec<FieldElem>>,
}

impl SystematicMds {
    pub fn new(ctx: FieldCtx, total: usize, m: usize) -> Result<Self> {
        if m == 0 || total < m {
            return Err(Error::InvalidParameters(format!("no ({total}, {m}) MDS code")));
        }
        if total as u64 > ctx.modulus() {
            return Err(Error::TooManyWorkersForField { workers: total, q: ctx.modulus() });
        }
        let mut generator: Vec<Vec<FieldElem>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { FieldElem::ONE } else { FieldElem::ZERO }).collect())
            .collect();
        let parity_rows = total - m;
        if parity_rows > 0 {
            let mut cauchy: Vec<Vec<FieldElem>> = (0..parity_rows)
                .map(|i| {
                    (0..m)
                        .map(|j| ctx.inv(ctx.elem((m + i - j) as u64)).expect("x_i != y_j"))
                        .collect()
                })
                .collect();
            for j in 0..m {
                let scale = ctx.inv(cauchy[0][j])?;
                for row in cauchy.iter_mut() {
                    row[j] = ctx.mul(row[j], scale);
                }
            }
            for row in cauchy.iter_mut().skip(1) {
                let scale = ctx.inv(row[0])?;
                for v in row.iter_mut() {
                    *v = ctx.mul(*v, scale);
                }
            }
            generator.extend(cauchy);
        }
        Ok(SystematicMds { ctx, m, generator })
    }

    pub fn total(&self) -> usize {
        self.generator.len()
    }

    pub fn message_len(&self) -> usize {
        self.m
    }

    /// Encoding coefficients of coded symbol `index`.
    pub fn row(&self, index: usize) -> &[FieldElem] {
        &self.generator[index]
    }

    /// Given exactly `m` distinct symbol indices, returns `W` with
    /// `message_j = sum_p W[j][p] * symbol[rows[p]]`.
    pub fn decode_weights(&self, rows: &[usize]) -> Result<Vec<Vec<FieldElem>>> {
        if rows.len() != self.m {
            return Err(Error::NotEnoughResults { have: rows.len(), need: self.m });
        }
        let sub: Vec<Vec<FieldElem>> = rows.iter().map(|&r| self.generator[r].clone()).collect();
        invert(&self.ctx, &sub)
    }
}
