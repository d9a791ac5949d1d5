use std::collections::{BTreeSet, HashSet};

use super::{check_result_shape, normalize_results, Layout, Placement, Scheme, SchemeKind, WorkerResult, WorkerShare};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{bw_decode, FieldCtx, FieldElem, InterpolationBasis};
use crate::matrix::{lincomb, FMatrix, ProblemShape};

/// Exponent steps `(α, β)`: worker `i` stores `Σ_j A_j x_i^{jα}` and
/// `Σ_k B_k x_i^{kβ}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeParams {
    pub alpha: u64,
    pub beta: u64,
}

impl CodeParams {
    /// `(1, m)`, which makes `h(x)` dense of degree `mn - 1`.
    pub fn default_for(shape: &ProblemShape) -> Self {
        CodeParams { alpha: 1, beta: shape.m as u64 }
    }

    /// Exponent `jα + kβ` carrying block `A_jᵀ B_k`.
    pub fn exponent(&self, j: usize, k: usize) -> u64 {
        j as u64 * self.alpha + k as u64 * self.beta
    }

    /// Checks that the `mn` exponents are pairwise distinct.
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        let mut seen = HashSet::with_capacity(m * n);
        for j in 0..m {
            for k in 0..n {
                if !seen.insert(self.exponent(j, k)) {
                    return Err(Error::InvalidCodeParams(format!(
                        "(α, β) = ({}, {}) maps two blocks to exponent {}",
                        self.alpha,
                        self.beta,
                        self.exponent(j, k)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Degree of `h(x)`.
    pub fn degree(&self, m: usize, n: usize) -> u64 {
        self.exponent(m - 1, n - 1)
    }
}

/// Output of error-correcting decoding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectedDecode {
    pub output: FMatrix,
    /// Workers whose block disagreed with the decoded polynomial.
    pub faulty_workers: Vec<usize>,
}

/// The polynomial code.
#[derive(Clone, Debug)]
pub struct PolyCode {
    ctx: FieldCtx,
    shape: ProblemShape,
    params: CodeParams,
    points: Vec<FieldElem>,
    layout: Layout,
}

impl PolyCode {
    /// `points` defaults to `x_i = i`.
    pub fn new(ctx: FieldCtx, shape: ProblemShape, params: CodeParams, points: Option<Vec<FieldElem>>) -> Result<Self> {
        let workers = shape.workers;
        if workers as u64 > ctx.modulus() {
            return Err(Error::TooManyWorkersForField { workers, q: ctx.modulus() });
        }
        params.validate(shape.m, shape.n)?;
        let points = match points {
            Some(p) => {
                if p.len() != workers {
                    return Err(Error::InvalidParameters(format!("{} points for {workers} workers", p.len())));
                }
                let mut seen = HashSet::new();
                for x in &p {
                    if x.value() >= ctx.modulus() {
                        return Err(Error::NonCanonical { value: x.value(), q: ctx.modulus() });
                    }
                    if !seen.insert(*x) {
                        return Err(Error::DuplicateEvaluationPoint(x.value()));
                    }
                }
                p
            }
            None => (0..workers as u64).map(|i| ctx.elem(i)).collect(),
        };
        let needed = usize::try_from(params.degree(shape.m, shape.n) + 1)
            .map_err(|_| Error::InvalidCodeParams("degree too large".into()))?;
        if workers < needed {
            return Err(Error::InsufficientWorkers { have: workers, need: needed });
        }
        Ok(PolyCode { ctx, shape, params, points, layout: Layout::Poly { workers, needed } })
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn points(&self) -> &[FieldElem] {
        &self.points
    }

    /// Responses required to interpolate `h(x)`: `deg h + 1`.
    pub fn needed(&self) -> usize {
        match self.layout {
            Layout::Poly { needed, .. } => needed,
            _ => unreachable!(),
        }
    }

    fn assemble(&self, coefficient: impl Fn(u64) -> Result<FMatrix>) -> Result<FMatrix> {
        let grid = (0..self.shape.m)
            .map(|j| (0..self.shape.n).map(|k| coefficient(self.params.exponent(j, k))).collect())
            .collect::<Result<Vec<Vec<FMatrix>>>>()?;
        FMatrix::from_blocks(&grid)
    }

    /// Decodes from all `N` results, tolerating up to `⌊(N - deg h - 1) / 2⌋`
    /// arbitrarily wrong blocks.
    pub fn decode_with_errors(&self, results: &[WorkerResult]) -> Result<CorrectedDecode> {
        let radius = (self.shape.workers - self.needed()) / 2;
        self.decode_with_errors_radius(results, radius, Exec::default())
    }

    /// Detection-only decoding: any corruption of at most `N - deg h - 1`
    /// blocks yields [`Error::DecodingFailure`].
    pub fn decode_checked(&self, results: &[WorkerResult]) -> Result<FMatrix> {
        Ok(self.decode_with_errors_radius(results, 0, Exec::default())?.output)
    }

    /// Position-wise Berlekamp-Welch over all `N` results with correction
    /// radius `radius`. Corruption is per worker, so the union of workers
    /// flagged at any position must also fit inside the radius.
    pub fn decode_with_errors_radius(&self, results: &[WorkerResult], radius: usize, exec: Exec) -> Result<CorrectedDecode> {
        let workers = self.shape.workers;
        let sorted = normalize_results(results, workers);
        if sorted.len() < workers {
            return Err(Error::NotEnoughResults { have: sorted.len(), need: workers });
        }
        for r in &sorted {
            check_result_shape(&self.shape, r)?;
        }
        let needed = self.needed();
        if 2 * radius > workers - needed {
            return Err(Error::InvalidParameters(format!(
                "radius {radius} exceeds the correction capability of {workers} results"
            )));
        }
        let block_len = self.shape.block_len();
        let decoded = exec.map_range(block_len, |pos| {
            let word: Vec<(FieldElem, FieldElem)> = sorted
                .iter()
                .map(|r| (self.points[r.worker_id], r.product.as_slice()[pos]))
                .collect();
            let poly = bw_decode(&self.ctx, &word, needed, radius)?;
            let bad: Vec<usize> = word
                .iter()
                .zip(&sorted)
                .filter(|((x, y), _)| poly.eval(&self.ctx, *x) != *y)
                .map(|(_, r)| r.worker_id)
                .collect();
            Ok((poly, bad))
        });
        let decoded = decoded.into_iter().collect::<Result<Vec<_>>>()?;
        let faulty: BTreeSet<usize> = decoded.iter().flat_map(|(_, bad)| bad.iter().copied()).collect();
        if faulty.len() > radius {
            return Err(Error::DecodingFailure(format!(
                "{} workers disagree with the decoded blocks, more than the radius {radius}",
                faulty.len()
            )));
        }
        let (rows, cols) = (self.shape.block_rows(), self.shape.block_cols());
        let output = self.assemble(|e| {
            let data = decoded.iter().map(|(p, _)| p.coeff(e as usize)).collect();
            FMatrix::from_elems(rows, cols, data)
        })?;
        Ok(CorrectedDecode { output, faulty_workers: faulty.into_iter().collect() })
    }
}

impl Scheme for PolyCode {
    fn kind(&self) -> SchemeKind {
        SchemeKind::Poly
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
        self.points
            .iter()
            .enumerate()
            .map(|(worker_id, &x)| {
                let a_coeffs: Vec<_> = (0..self.shape.m)
                    .map(|j| self.ctx.pow(x, j as u64 * self.params.alpha))
                    .collect();
                let b_coeffs: Vec<_> = (0..self.shape.n)
                    .map(|k| self.ctx.pow(x, k as u64 * self.params.beta))
                    .collect();
                Ok(WorkerShare {
                    worker_id,
                    x,
                    a: lincomb(&self.ctx, &a_refs, &a_coeffs)?,
                    b: lincomb(&self.ctx, &b_refs, &b_coeffs)?,
                    placement: Placement::Poly,
                })
            })
            .collect()
    }

    /// Interpolates `h(x)` from the `deg h + 1` lowest-id results and reads
    /// block `(j, k)` off the coefficient of `x^{jα + kβ}`.
    fn decode(&self, results: &[WorkerResult]) -> Result<FMatrix> {
        let needed = self.needed();
        let sorted = normalize_results(results, self.shape.workers);
        if sorted.len() < needed {
            return Err(Error::NotEnoughResults { have: sorted.len(), need: needed });
        }
        let chosen = &sorted[..needed];
        for r in chosen {
            check_result_shape(&self.shape, r)?;
        }
        let xs: Vec<FieldElem> = chosen.iter().map(|r| self.points[r.worker_id]).collect();
        let basis = InterpolationBasis::new(&self.ctx, &xs)?;
        let blocks: Vec<&FMatrix> = chosen.iter().map(|r| &r.product).collect();
        self.assemble(|e| lincomb(&self.ctx, &blocks, basis.coefficient_weights(e as usize)))
    }

    /// `deg h + 1`, which is `mn` for the default exponents.
    fn threshold(&self) -> usize {
        self.needed()
    }

    fn decode_cost(&self, _responded: &[usize]) -> u64 {
        let k = self.needed() as u64;
        let blocks = (self.shape.m * self.shape.n) as u64;
        k * k + blocks * k * self.shape.block_len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::transpose_mul;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f7_example() -> (FieldCtx, PolyCode, FMatrix, FMatrix) {
        let f = FieldCtx::new(7).unwrap();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 5).unwrap();
        let code = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = FMatrix::random(&f, 8, 4, &mut rng);
        let b = FMatrix::random(&f, 8, 4, &mut rng);
        (f, code, a, b)
    }

    #[test]
    fn worker_i_stores_a0_plus_i_a1() {
        let (f, code, a, b) = f7_example();
        let a_blocks = a.split_cols(2).unwrap();
        let b_blocks = b.split_cols(2).unwrap();
        for share in code.encode(&a, &b).unwrap() {
            let i = f.elem(share.worker_id as u64);
            let i2 = f.mul(i, i);
            assert_eq!(share.a, lincomb(&f, &[&a_blocks[0], &a_blocks[1]], &[FieldElem::ONE, i]).unwrap());
            assert_eq!(share.b, lincomb(&f, &[&b_blocks[0], &b_blocks[1]], &[FieldElem::ONE, i2]).unwrap());
        }
        let shares = code.encode(&a, &b).unwrap();
        assert_eq!(shares[0].a, a_blocks[0]);
        assert_eq!(shares[0].b, b_blocks[0]);
    }

    #[test]
    fn single_block_is_uncoded() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(6, 3, 2, 1, 1, 4).unwrap();
        let code = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = FMatrix::random(&f, 6, 3, &mut rng);
        let b = FMatrix::random(&f, 6, 2, &mut rng);
        for share in code.encode(&a, &b).unwrap() {
            assert_eq!((share.a.clone(), share.b.clone()), (a.clone(), b.clone()));
        }
    }

    #[test]
    fn every_four_subset_decodes() {
        let (f, code, a, b) = f7_example();
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let results: Vec<_> = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
        for skip in 0..5 {
            let subset: Vec<_> = results.iter().filter(|r| r.worker_id != skip).cloned().collect();
            assert_eq!(code.decode(&subset).unwrap(), expected);
        }
        assert_eq!(code.decode(&results).unwrap(), expected);
        let mut reversed = results.clone();
        reversed.reverse();
        assert_eq!(code.decode(&reversed).unwrap(), expected);
        assert_eq!(code.decode(&results[..3]), Err(Error::NotEnoughResults { have: 3, need: 4 }));
    }

    #[test]
    fn general_params() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(12, 6, 4, 3, 2, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = FMatrix::random(&f, 12, 6, &mut rng);
        let b = FMatrix::random(&f, 12, 4, &mut rng);
        let expected = transpose_mul(&f, &a, &b).unwrap();
        for params in [CodeParams { alpha: 2, beta: 1 }, CodeParams { alpha: 1, beta: 3 }, CodeParams { alpha: 1, beta: 4 }] {
            let code = PolyCode::new(f, shape, params, None).unwrap();
            assert_eq!(code.needed() as u64, params.degree(3, 2) + 1);
            let results: Vec<_> = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
            assert_eq!(code.decode(&results[results.len() - code.needed()..]).unwrap(), expected);
        }
    }

    #[test]
    fn params_validation() {
        for m in 1..=32 {
            for n in 1..=32 {
                assert!(CodeParams { alpha: 1, beta: m as u64 }.validate(m, n).is_ok());
                assert!(CodeParams { alpha: n as u64, beta: 1 }.validate(m, n).is_ok());
                let diag = CodeParams { alpha: 1, beta: 1 }.validate(m, n);
                assert_eq!(diag.is_err(), m > 1 && n > 1, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn construction_errors() {
        let f = FieldCtx::new(7).unwrap();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 8).unwrap();
        let err = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap_err();
        assert_eq!(err, Error::TooManyWorkersForField { workers: 8, q: 7 });
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 5).unwrap();
        assert!(matches!(
            PolyCode::new(f, shape, CodeParams { alpha: 1, beta: 1 }, None),
            Err(Error::InvalidCodeParams(_))
        ));
        let dup = vec![f.elem(0), f.elem(1), f.elem(2), f.elem(3), f.elem(3)];
        assert_eq!(
            PolyCode::new(f, shape, CodeParams::default_for(&shape), Some(dup)).unwrap_err(),
            Error::DuplicateEvaluationPoint(3)
        );
    }

    #[test]
    fn corrects_up_to_radius() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 12).unwrap();
        let code = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = FMatrix::random(&f, 8, 4, &mut rng);
        let b = FMatrix::random(&f, 8, 4, &mut rng);
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let mut results: Vec<_> = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
        let clean = code.decode_with_errors(&results).unwrap();
        assert_eq!(clean.output, expected);
        assert!(clean.faulty_workers.is_empty());
        assert_eq!(code.decode_checked(&results).unwrap(), expected);
        for &w in &[1, 5, 7, 10] {
            results[w].product = FMatrix::random(&f, 2, 2, &mut rng);
        }
        let fixed = code.decode_with_errors(&results).unwrap();
        assert_eq!(fixed.output, expected);
        assert_eq!(fixed.faulty_workers, vec![1, 5, 7, 10]);
        assert!(matches!(code.decode_checked(&results), Err(Error::DecodingFailure(_))));
        results[0].product = FMatrix::random(&f, 2, 2, &mut rng);
        assert!(matches!(code.decode_with_errors(&results), Err(Error::DecodingFailure(_))));
    }

    #[test]
    fn five_faults_next_to_another_codeword_are_misread() {
        // Bounded-distance decoding: a word within the radius of a second
        // codeword decodes to it. Here 5 faults leave the word 4 away from
        // h + g, where g vanishes at x = 0, 1, 2.
        let f = FieldCtx::default();
        let shape = ProblemShape::new(2, 2, 2, 2, 2, 12).unwrap();
        let code = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = FMatrix::random(&f, 2, 2, &mut rng);
        let b = FMatrix::random(&f, 2, 2, &mut rng);
        let mut results: Vec<_> = code.encode(&a, &b).unwrap().iter().map(|s| s.compute(&f)).collect();
        let g = |x: u64| {
            let x = f.elem(x);
            [0, 1, 2].iter().fold(FieldElem::ONE, |acc, &r| f.mul(acc, f.sub(x, f.elem(r))))
        };
        for w in 3..8 {
            let v = results[w].product.get(0, 0);
            results[w].product.set(0, 0, f.add(v, g(w as u64)));
        }
        let out = code.decode_with_errors(&results).unwrap();
        assert_ne!(out.output, transpose_mul(&f, &a, &b).unwrap());
        assert_eq!(out.faulty_workers, vec![8, 9, 10, 11]);
    }
}
