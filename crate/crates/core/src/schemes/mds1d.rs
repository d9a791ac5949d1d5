use super::{check_result_shape, normalize_results, Layout, Placement, Scheme, SchemeKind, SystematicMds, WorkerResult, WorkerShare};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::matrix::{lincomb, FMatrix, ProblemShape};

/// 1D MDS baseline: `n` groups of `N/n` workers. Group `g` holds `B_g` and a
/// systematic `(N/n, m)` MDS encoding of the `A` blocks.
#[derive(Clone, Debug)]
pub struct Mds1dCode {
    ctx: FieldCtx,
    shape: ProblemShape,
    code: SystematicMds,
    layout: Layout,
}

impl Mds1dCode {
    pub fn new(ctx: FieldCtx, shape: ProblemShape) -> Result<Self> {
        let layout = SchemeKind::Mds1d.layout(&shape)?;
        let Layout::Mds1d { per_group, m, .. } = layout else { unreachable!() };
        let code = SystematicMds::new(ctx, per_group, m)?;
        Ok(Mds1dCode { ctx, shape, code, layout })
    }

    pub fn per_group(&self) -> usize {
        self.code.total()
    }

    pub fn code(&self) -> &SystematicMds {
        &self.code
    }
}

impl Scheme for Mds1dCode {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Mds1d
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
        let a_refs: Vec<&FMatrix> = a_blocks.iter().collect();
        let coded: Vec<FMatrix> = (0..self.per_group())
            .map(|i| lincomb(&self.ctx, &a_refs, self.code.row(i)))
            .collect::<Result<_>>()?;
        let mut shares = Vec::with_capacity(self.shape.workers);
        for (group, b_block) in b_blocks.iter().enumerate() {
            for (index, a_coded) in coded.iter().enumerate() {
                let worker_id = group * self.per_group() + index;
                shares.push(WorkerShare {
                    worker_id,
                    x: self.ctx.elem(worker_id as u64),
                    a: a_coded.clone(),
                    b: b_block.clone(),
                    placement: Placement::Group { group, index },
                });
            }
        }
        Ok(shares)
    }

    fn decode(&self, results: &[WorkerResult]) -> Result<FMatrix> {
        let (m, n, per_group) = (self.shape.m, self.shape.n, self.per_group());
        let sorted = normalize_results(results, self.shape.workers);
        let mut grid = vec![Vec::with_capacity(n); m];
        for group in 0..n {
            let members: Vec<&WorkerResult> = sorted
                .iter()
                .copied()
                .filter(|r| r.worker_id / per_group == group)
                .take(m)
                .collect();
            if members.len() < m {
                return Err(Error::NotDecodable);
            }
            for r in &members {
                check_result_shape(&self.shape, r)?;
            }
            let rows: Vec<usize> = members.iter().map(|r| r.worker_id % per_group).collect();
            let inverse = self.code.decode_weights(&rows)?;
            let blocks: Vec<&FMatrix> = members.iter().map(|r| &r.product).collect();
            for (j, weights) in inverse.iter().enumerate() {
                grid[j].push(lincomb(&self.ctx, &blocks, weights)?);
            }
        }
        FMatrix::from_blocks(&grid)
    }

    fn decode_cost(&self, _responded: &[usize]) -> u64 {
        let m = self.shape.m as u64;
        self.shape.n as u64 * (m * m * m + m * m * self.shape.block_len() as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::transpose_mul;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_workers_hold_a0_a1_and_their_sum() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(6, 4, 2, 2, 1, 3).unwrap();
        let code = Mds1dCode::new(f, shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = FMatrix::random(&f, 6, 4, &mut rng);
        let b = FMatrix::random(&f, 6, 2, &mut rng);
        let blocks = a.split_cols(2).unwrap();
        let shares = code.encode(&a, &b).unwrap();
        assert_eq!(shares[0].a, blocks[0]);
        assert_eq!(shares[1].a, blocks[1]);
        assert_eq!(shares[2].a, crate::matrix::add(&f, &blocks[0], &blocks[1]).unwrap());
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let results: Vec<_> = shares.iter().map(|s| s.compute(&f)).collect();
        for skip in 0..3 {
            let subset: Vec<_> = results.iter().filter(|r| r.worker_id != skip).cloned().collect();
            assert_eq!(code.decode(&subset).unwrap(), expected);
        }
        assert_eq!(code.decode(&results[..1]), Err(Error::NotDecodable));
    }

    #[test]
    fn decodes_exactly_when_every_group_has_m() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 6).unwrap();
        let code = Mds1dCode::new(f, shape).unwrap();
        assert_eq!(code.layout().brute_force_threshold(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = FMatrix::random(&f, 8, 4, &mut rng);
        let b = FMatrix::random(&f, 8, 4, &mut rng);
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let results: Vec<_> = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
        for bits in 0u32..64 {
            let subset: Vec<_> = results.iter().filter(|r| bits >> r.worker_id & 1 == 1).cloned().collect();
            let ids: Vec<_> = subset.iter().map(|r| r.worker_id).collect();
            match code.decode(&subset) {
                Ok(c) => {
                    assert!(code.decodable(&ids));
                    assert_eq!(c, expected);
                }
                Err(_) => assert!(!code.decodable(&ids)),
            }
        }
        // four responders packed into one group plus one more is not enough
        assert!(!code.decodable(&[0, 1, 2, 3]));
        assert!(code.decodable(&[0, 1, 3, 4]));
    }
}
