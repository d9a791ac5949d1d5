use super::{check_result_shape, normalize_results, Layout, Placement, Scheme, SchemeKind, SystematicMds, WorkerResult, WorkerShare};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::matrix::{lincomb, FMatrix, ProblemShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Line {
    Row(usize),
    Col(usize),
}

impl Line {
    fn cell(self, side: usize, pos: usize) -> usize {
        match self {
            Line::Row(r) => r * side + pos,
            Line::Col(c) => pos * side + c,
        }
    }
}

/// One peeling step: `sources` (cell ids) decode the line and fill `filled`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelStep {
    pub line: Line,
    pub sources: Vec<usize>,
    pub filled: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelTrace {
    pub steps: Vec<PeelStep>,
    /// Every systematic cell (row, col < m) is known.
    pub complete: bool,
}

fn systematic_known(side: usize, m: usize, known: &[bool]) -> bool {
    (0..m).all(|r| (0..m).all(|c| known[r * side + c]))
}

/// Iterative row/column decoding on a `side x side` grid where any `m`
/// known cells of a line recover the whole line. Sweeps rows, then columns,
/// until nothing changes or the systematic corner is known. `known` is
/// updated in place.
pub fn peel(side: usize, m: usize, known: &mut [bool]) -> PeelTrace {
    assert_eq!(known.len(), side * side);
    let mut steps = Vec::new();
    let mut complete = systematic_known(side, m, known);
    let mut progress = true;
    while progress && !complete {
        progress = false;
        'sweep: for line in (0..side).map(Line::Row).chain((0..side).map(Line::Col)) {
            let cells: Vec<usize> = (0..side).map(|p| line.cell(side, p)).collect();
            let have: Vec<usize> = cells.iter().copied().filter(|&c| known[c]).collect();
            if have.len() < m || have.len() == side {
                continue;
            }
            let filled: Vec<usize> = cells.iter().copied().filter(|&c| !known[c]).collect();
            for &c in &filled {
                known[c] = true;
            }
            steps.push(PeelStep { line, sources: have[..m].to_vec(), filled });
            progress = true;
            complete = systematic_known(side, m, known);
            if complete {
                break 'sweep;
            }
        }
    }
    PeelTrace { steps, complete }
}

/// Product-code baseline on a `√N x √N` grid. Worker `row * √N + col`
/// stores `Ã_col` and `B̃_row`, each a systematic `(√N, m)` MDS encoding.
#[derive(Clone, Debug)]
pub struct ProductCode {
    ctx: FieldCtx,
    shape: ProblemShape,
    code: SystematicMds,
    side: usize,
    layout: Layout,
}

impl ProductCode {
    pub fn new(ctx: FieldCtx, shape: ProblemShape) -> Result<Self> {
        let layout = SchemeKind::Product.layout(&shape)?;
        let Layout::Product { side, m } = layout else { unreachable!() };
        let code = SystematicMds::new(ctx, side, m)?;
        Ok(ProductCode { ctx, shape, code, side, layout })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Peeling trace for a response set.
    pub fn trace(&self, responded: &[usize]) -> PeelTrace {
        let mut known = vec![false; self.side * self.side];
        for &id in responded {
            if let Some(k) = known.get_mut(id) {
                *k = true;
            }
        }
        peel(self.side, self.shape.m, &mut known)
    }

    fn position(&self, line: Line, cell: usize) -> usize {
        match line {
            Line::Row(_) => cell % self.side,
            Line::Col(_) => cell / self.side,
        }
    }
}

impl Scheme for ProductCode {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Product
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
        let b_refs: Vec<&FMatrix> = b_blocks.iter().collect();
        let a_coded: Vec<FMatrix> = (0..self.side)
            .map(|i| lincomb(&self.ctx, &a_refs, self.code.row(i)))
            .collect::<Result<_>>()?;
        let b_coded: Vec<FMatrix> = (0..self.side)
            .map(|i| lincomb(&self.ctx, &b_refs, self.code.row(i)))
            .collect::<Result<_>>()?;
        let mut shares = Vec::with_capacity(self.shape.workers);
        for row in 0..self.side {
            for col in 0..self.side {
                let worker_id = row * self.side + col;
                shares.push(WorkerShare {
                    worker_id,
                    x: self.ctx.elem(worker_id as u64),
                    a: a_coded[col].clone(),
                    b: b_coded[row].clone(),
                    placement: Placement::Grid { row, col },
                });
            }
        }
        Ok(shares)
    }

    /// Replays the peeling schedule on the blocks. Cell `(k, j)` of the
    /// systematic corner is `A_jᵀ B_k`.
    fn decode(&self, results: &[WorkerResult]) -> Result<FMatrix> {
        let sorted = normalize_results(results, self.shape.workers);
        let mut cells: Vec<Option<FMatrix>> = vec![None; self.side * self.side];
        for r in sorted {
            check_result_shape(&self.shape, r)?;
            cells[r.worker_id] = Some(r.product.clone());
        }
        let ids: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].is_some()).collect();
        let trace = self.trace(&ids);
        if !trace.complete {
            return Err(Error::NotDecodable);
        }
        for step in &trace.steps {
            let rows: Vec<usize> = step.sources.iter().map(|&c| self.position(step.line, c)).collect();
            let inverse = self.code.decode_weights(&rows)?;
            let sources: Vec<&FMatrix> = step.sources.iter().map(|&c| cells[c].as_ref().expect("known cell")).collect();
            let mut fresh = Vec::with_capacity(step.filled.len());
            for &cell in &step.filled {
                let g = self.code.row(self.position(step.line, cell));
                let weights: Vec<FieldElem> = (0..rows.len())
                    .map(|i| self.ctx.dot(g, &inverse.iter().map(|w| w[i]).collect::<Vec<_>>()))
                    .collect();
                fresh.push((cell, lincomb(&self.ctx, &sources, &weights)?));
            }
            for (cell, block) in fresh {
                cells[cell] = Some(block);
            }
        }
        let m = self.shape.m;
        let grid: Vec<Vec<FMatrix>> = (0..m)
            .map(|j| (0..m).map(|k| cells[k * self.side + j].clone().expect("systematic cell")).collect())
            .collect();
        FMatrix::from_blocks(&grid)
    }

    fn decode_cost(&self, responded: &[usize]) -> u64 {
        let m = self.shape.m as u64;
        let block = self.shape.block_len() as u64;
        self.trace(responded)
            .steps
            .iter()
            .map(|s| m * m * m + s.filled.len() as u64 * m * (m + block))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::transpose_mul;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(m: usize, workers: usize, seed: u64) -> (FieldCtx, ProductCode, Vec<WorkerResult>, FMatrix) {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(2 * m, 2 * m, 2 * m, m, m, workers).unwrap();
        let code = ProductCode::new(f, shape).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = FMatrix::random(&f, 2 * m, 2 * m, &mut rng);
        let b = FMatrix::random(&f, 2 * m, 2 * m, &mut rng);
        let results = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
        (f, code, results, transpose_mul(&f, &a, &b).unwrap())
    }

    #[test]
    fn five_of_nine_recovers_through_peeling() {
        let (_, code, results, expected) = setup(2, 9, 5);
        let ids = [1, 4, 5, 6, 7];
        let trace = code.trace(&ids);
        assert!(trace.complete);
        let order: Vec<usize> = trace.steps.iter().flat_map(|s| s.filled.iter().copied()).collect();
        let pos = |c: usize| order.iter().position(|&x| x == c).unwrap();
        // cell (1, 0) holds A_0ᵀ B_1 and comes before A_0ᵀ B_0 at (0, 0)
        assert!(pos(3) < pos(0));
        let subset: Vec<_> = results.iter().filter(|r| ids.contains(&r.worker_id)).cloned().collect();
        assert_eq!(code.decode(&subset).unwrap(), expected);
    }

    #[test]
    fn decode_matches_predicate_on_every_pattern() {
        let (_, code, results, expected) = setup(2, 9, 6);
        for bits in 0u32..512 {
            let subset: Vec<_> = results.iter().filter(|r| bits >> r.worker_id & 1 == 1).cloned().collect();
            let ids: Vec<_> = subset.iter().map(|r| r.worker_id).collect();
            match code.decode(&subset) {
                Ok(c) => assert_eq!(c, expected, "{ids:?}"),
                Err(e) => {
                    assert_eq!(e, Error::NotDecodable);
                    assert!(!code.decodable(&ids), "{ids:?}");
                }
            }
            assert_eq!(code.decodable(&ids), code.decode(&subset).is_ok());
        }
    }

    #[test]
    fn larger_grid() {
        let (_, code, results, expected) = setup(3, 16, 7);
        let drop = [0, 5, 10, 15];
        let subset: Vec<_> = results.iter().filter(|r| !drop.contains(&r.worker_id)).cloned().collect();
        assert_eq!(code.decode(&subset).unwrap(), expected);
    }

    #[test]
    fn stuck_square_is_not_decodable() {
        let mut known = vec![true; 9];
        for c in [0, 1, 3, 4] {
            known[c] = false;
        }
        let trace = peel(3, 2, &mut known);
        assert!(!trace.complete);
        assert!(trace.steps.is_empty());
    }
}
