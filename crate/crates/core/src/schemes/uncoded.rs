use super::{check_result_shape, normalize_results, Layout, Placement, Scheme, SchemeKind, WorkerResult, WorkerShare};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::matrix::{FMatrix, ProblemShape};

/// Uncoded baseline: worker `j * n + k` computes `A_jᵀ B_k`; workers past
/// `mn` stay idle.
#[derive(Clone, Debug)]
pub struct UncodedScheme {
    ctx: FieldCtx,
    shape: ProblemShape,
    layout: Layout,
}

impl UncodedScheme {
    pub fn new(ctx: FieldCtx, shape: ProblemShape) -> Result<Self> {
        let layout = SchemeKind::Uncoded.layout(&shape)?;
        Ok(UncodedScheme { ctx, shape, layout })
    }
}

impl Scheme for UncodedScheme {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Uncoded
    }

    fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    fn shape(&self) -> &ProblemShape {
        &self.shape
    }

    fn layout(&self) -> &Layout {
        &self.layout
    }

    fn encode(&self, a: &FMatrix, b: &FMatrix) -> Result<Vec<WorkerShare>> {
        self.shape.check_inputs(a, b)?;
        let a_blocks = a.split_cols(self.shape.m)?;
        let b_blocks = b.split_cols(self.shape.n)?;
        let mut shares = Vec::with_capacity(self.shape.m * self.shape.n);
        for (a_block, a) in a_blocks.iter().enumerate() {
            for (b_block, b) in b_blocks.iter().enumerate() {
                let worker_id = a_block * self.shape.n + b_block;
                shares.push(WorkerShare {
                    worker_id,
                    x: self.ctx.elem(worker_id as u64),
                    a: a.clone(),
                    b: b.clone(),
                    placement: Placement::Pair { a_block, b_block },
                });
            }
        }
        Ok(shares)
    }

    fn decode(&self, results: &[WorkerResult]) -> Result<FMatrix> {
        let (m, n) = (self.shape.m, self.shape.n);
        let sorted = normalize_results(results, m * n);
        if sorted.len() < m * n {
            return Err(Error::NotDecodable);
        }
        for r in &sorted {
            check_result_shape(&self.shape, r)?;
        }
        let grid: Vec<Vec<FMatrix>> = (0..m)
            .map(|j| (0..n).map(|k| sorted[j * n + k].product.clone()).collect())
            .collect();
        FMatrix::from_blocks(&grid)
    }

    fn decode_cost(&self, _responded: &[usize]) -> u64 {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::transpose_mul;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn needs_every_participant() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(6, 4, 6, 2, 3, 8).unwrap();
        let scheme = UncodedScheme::new(f, shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = FMatrix::random(&f, 6, 4, &mut rng);
        let b = FMatrix::random(&f, 6, 6, &mut rng);
        let shares = scheme.encode(&a, &b).unwrap();
        assert_eq!(shares.len(), 6);
        let mut results: Vec<_> = shares.iter().map(|s| s.compute(&f)).collect();
        results.reverse();
        assert_eq!(scheme.decode(&results).unwrap(), transpose_mul(&f, &a, &b).unwrap());
        assert_eq!(scheme.decode(&results[1..]), Err(Error::NotDecodable));
        assert!(!scheme.decodable(&[0, 1, 2, 3, 4, 6, 7]));
        assert_eq!(scheme.threshold(), 8);
    }
}
