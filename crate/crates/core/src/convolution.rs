//! Coded convolution `c = a * b` with the `(1, 1)` polynomial design.
//!
//! `a` is cut into `m` blocks and `b` into `n` blocks of a common length `s`.
//! Worker `i` convolves `ã_i = Σ a_j x_i^j` with `b̃_i = Σ b_k x_i^k`, which
//! evaluates a degree `m + n - 2` vector polynomial, so any `m + n - 1`
//! results decode.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{FieldCtx, FieldElem, InterpolationBasis};

/// Full linear convolution, length `|a| + |b| - 1`.
pub fn conv_direct(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> Result<Vec<FieldElem>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("convolution of an empty vector"));
    }
    let mut out = vec![FieldElem::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        ctx.axpy(&mut out[i..i + b.len()], x, b);
    }
    Ok(out)
}

/// Equal-length blocks of a vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VecBlocks {
    blocks: Vec<Vec<FieldElem>>,
}

impl VecBlocks {
    pub fn new(blocks: Vec<Vec<FieldElem>>) -> Result<Self> {
        let first = blocks.first().ok_or(Error::EmptyInput("no blocks"))?;
        if first.is_empty() {
            return Err(Error::EmptyInput("blocks must have length at least 1"));
        }
        if blocks.iter().any(|b| b.len() != first.len()) {
            return Err(Error::ShapeMismatch("blocks differ in length".into()));
        }
        Ok(VecBlocks { blocks })
    }

    /// Cuts `v` into `parts` blocks; the length must divide evenly.
    pub fn split(v: &[FieldElem], parts: usize) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::EmptyInput("cannot split an empty vector"));
        }
        if parts == 0 || !v.len().is_multiple_of(parts) {
            return Err(Error::NonDivisiblePartition { len: v.len(), parts });
        }
        VecBlocks::new(v.chunks(v.len() / parts).map(<[_]>::to_vec).collect())
    }

    /// Like [`split`](Self::split) after zero-padding `v` to a multiple of
    /// `parts`.
    pub fn split_padded(v: &[FieldElem], parts: usize) -> Result<Self> {
        if parts == 0 {
            return Err(Error::NonDivisiblePartition { len: v.len(), parts });
        }
        let mut padded = v.to_vec();
        padded.resize(v.len().next_multiple_of(parts), FieldElem::ZERO);
        VecBlocks::split(&padded, parts)
    }

    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn blocks(&self) -> &[Vec<FieldElem>] {
        &self.blocks
    }

    pub fn concat(&self) -> Vec<FieldElem> {
        self.blocks.concat()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvShare {
    pub worker_id: usize,
    pub x: FieldElem,
    pub a: Vec<FieldElem>,
    pub b: Vec<FieldElem>,
}

impl ConvShare {
    pub fn compute(&self, ctx: &FieldCtx) -> ConvResult {
        ConvResult {
            worker_id: self.worker_id,
            x: self.x,
            product: conv_direct(ctx, &self.a, &self.b).expect("shares are nonempty"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvResult {
    pub worker_id: usize,
    pub x: FieldElem,
    /// `ã_i * b̃_i`, length `2s - 1`.
    pub product: Vec<FieldElem>,
}

/// The `(1, 1)` coded convolution scheme.
#[derive(Clone, Debug)]
pub struct ConvCode {
    ctx: FieldCtx,
    m: usize,
    n: usize,
    points: Vec<FieldElem>,
}

impl ConvCode {
    /// `points` defaults to `0..workers`.
    pub fn new(ctx: FieldCtx, m: usize, n: usize, workers: usize, points: Option<Vec<FieldElem>>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameters("m and n must be positive".into()));
        }
        if workers as u64 > ctx.modulus() {
            return Err(Error::TooManyWorkersForField { workers, q: ctx.modulus() });
        }
        let points = match points {
            Some(p) => {
                if p.len() != workers {
                    return Err(Error::InvalidParameters(format!("{} points for {workers} workers", p.len())));
                }
                let mut seen = HashSet::new();
                if let Some(dup) = p.iter().find(|x| !seen.insert(**x)) {
                    return Err(Error::DuplicateEvaluationPoint(dup.value()));
                }
                p
            }
            None => (0..workers as u64).map(|i| ctx.elem(i)).collect(),
        };
        let need = m + n - 1;
        if workers < need {
            return Err(Error::InsufficientWorkers { have: workers, need });
        }
        Ok(ConvCode { ctx, m, n, points })
    }

    /// `m + n - 1`.
    pub fn threshold(&self) -> usize {
        self.m + self.n - 1
    }

    pub fn workers(&self) -> usize {
        self.points.len()
    }

    pub fn encode(&self, a: &VecBlocks, b: &VecBlocks) -> Result<Vec<ConvShare>> {
        if a.count() != self.m || b.count() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} and {} blocks, got {} and {}",
                self.m,
                self.n,
                a.count(),
                b.count()
            )));
        }
        if a.block_len() != b.block_len() {
            return Err(Error::ShapeMismatch("a and b blocks differ in length".into()));
        }
        Ok(self
            .points
            .iter()
            .enumerate()
            .map(|(worker_id, &x)| ConvShare {
                worker_id,
                x,
                a: self.combine(a, x),
                b: self.combine(b, x),
            })
            .collect())
    }

    fn combine(&self, blocks: &VecBlocks, x: FieldElem) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; blocks.block_len()];
        let mut power = FieldElem::ONE;
        for block in blocks.blocks() {
            self.ctx.axpy(&mut out, power, block);
            power = self.ctx.mul(power, x);
        }
        out
    }

    /// Interpolates position by position, then overlap-adds coefficient `j`
    /// at offset `j * s`. Uses the first `m + n - 1` results with distinct
    /// points, in the order given.
    pub fn decode(&self, results: &[ConvResult]) -> Result<Vec<FieldElem>> {
        self.decode_with(results, Exec::default())
    }

    pub fn decode_with(&self, results: &[ConvResult], exec: Exec) -> Result<Vec<FieldElem>> {
        let need = self.threshold();
        let mut seen = HashSet::new();
        let chosen: Vec<&ConvResult> = results.iter().filter(|r| seen.insert(r.x)).take(need).collect();
        if chosen.len() < need {
            return Err(Error::NotEnoughResults { have: chosen.len(), need });
        }
        let width = chosen[0].product.len();
        if width == 0 || width.is_multiple_of(2) || chosen.iter().any(|r| r.product.len() != width) {
            return Err(Error::ShapeMismatch("results must share an odd length 2s - 1".into()));
        }
        let s = width.div_ceil(2);
        let xs: Vec<FieldElem> = chosen.iter().map(|r| r.x).collect();
        let basis = InterpolationBasis::new(&self.ctx, &xs)?;
        let terms = exec.map_range(need, |j| {
            let weights = basis.coefficient_weights(j);
            let mut acc = vec![FieldElem::ZERO; width];
            for (r, &w) in chosen.iter().zip(weights) {
                self.ctx.axpy(&mut acc, w, &r.product);
            }
            acc
        });
        let mut out = vec![FieldElem::ZERO; s * (self.m + self.n) - 1];
        for (j, term) in terms.iter().enumerate() {
            let slot = &mut out[j * s..j * s + width];
            for (o, &t) in slot.iter_mut().zip(term) {
                *o = self.ctx.add(*o, t);
            }
        }
        Ok(out)
    }
}

/// Recovery thresholds for convolution on `(m, n, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConvThresholds {
    pub conv_poly: usize,
    pub via_matmul: usize,
    /// `N - N/n + m`, only when the 1D MDS layout exists.
    pub coded_conv_baseline: Option<usize>,
    pub lower_bound: usize,
}

impl ConvThresholds {
    /// The lower bound is more than half of `m + n - 1`.
    pub fn within_factor_two(&self) -> bool {
        2 * self.lower_bound > self.conv_poly
    }
}

pub fn conv_thresholds(m: usize, n: usize, workers: usize) -> ConvThresholds {
    let coded_conv_baseline =
        (n > 0 && workers.is_multiple_of(n) && workers / n >= m).then(|| workers - workers / n + m);
    let t = ConvThresholds {
        conv_poly: m + n - 1,
        via_matmul: m * n,
        coded_conv_baseline,
        lower_bound: m.max(n),
    };
    assert!(t.within_factor_two());
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn schoolbook(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; a.len() + b.len() - 1];
        for i in 0..a.len() {
            for j in 0..b.len() {
                out[i + j] = ctx.add(out[i + j], ctx.mul(a[i], b[j]));
            }
        }
        out
    }

    fn random_vec(ctx: &FieldCtx, rng: &mut ChaCha8Rng, len: usize) -> Vec<FieldElem> {
        (0..len).map(|_| ctx.random(rng)).collect()
    }

    #[test]
    fn direct_small_cases() {
        let f7 = FieldCtx::new(7).unwrap();
        let one = [FieldElem::ONE, FieldElem::ONE];
        let got: Vec<u64> = conv_direct(&f7, &one, &one).unwrap().iter().map(|x| x.value()).collect();
        assert_eq!(got, vec![1, 2, 1]);
        let f = FieldCtx::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_vec(&f, &mut rng, 9);
        assert_eq!(conv_direct(&f, &[FieldElem::ONE], &b).unwrap(), b);
        for (la, lb) in [(1, 1), (5, 3), (17, 40)] {
            let a = random_vec(&f, &mut rng, la);
            let b = random_vec(&f, &mut rng, lb);
            assert_eq!(conv_direct(&f, &a, &b).unwrap(), schoolbook(&f, &a, &b));
        }
        assert!(matches!(conv_direct(&f, &[], &b), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn worker_shares() {
        let f = FieldCtx::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = VecBlocks::split(&random_vec(&f, &mut rng, 8), 2).unwrap();
        let b = VecBlocks::split(&random_vec(&f, &mut rng, 8), 2).unwrap();
        let code = ConvCode::new(f, 2, 2, 4, None).unwrap();
        let shares = code.encode(&a, &b).unwrap();
        assert_eq!((shares[0].a.clone(), shares[0].b.clone()), (a.blocks()[0].clone(), b.blocks()[0].clone()));
        let sum = |v: &VecBlocks| -> Vec<FieldElem> {
            v.blocks()[0].iter().zip(&v.blocks()[1]).map(|(&x, &y)| f.add(x, y)).collect()
        };
        assert_eq!((shares[1].a.clone(), shares[1].b.clone()), (sum(&a), sum(&b)));
    }

    #[test]
    fn every_size_up_to_five_decodes() {
        let f = FieldCtx::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in 1..=5 {
            for n in 1..=5 {
                let s = 3;
                let a = random_vec(&f, &mut rng, m * s);
                let b = random_vec(&f, &mut rng, n * s);
                let code = ConvCode::new(f, m, n, m + n + 1, None).unwrap();
                let shares = code
                    .encode(&VecBlocks::split(&a, m).unwrap(), &VecBlocks::split(&b, n).unwrap())
                    .unwrap();
                let results: Vec<_> = shares.iter().rev().map(|s| s.compute(&f)).collect();
                assert_eq!(code.decode(&results).unwrap(), schoolbook(&f, &a, &b), "m={m} n={n}");
                let short = &results[..m + n - 2];
                assert_eq!(
                    code.decode(short),
                    Err(Error::NotEnoughResults { have: m + n - 2, need: m + n - 1 })
                );
            }
        }
    }

    #[test]
    fn thresholds() {
        let t = conv_thresholds(3, 2, 7);
        assert_eq!((t.conv_poly, t.via_matmul, t.lower_bound), (4, 6, 3));
        assert!(t.within_factor_two());
        assert_eq!(t.coded_conv_baseline, None);
        let one = conv_thresholds(1, 1, 1);
        assert_eq!((one.conv_poly, one.via_matmul, one.coded_conv_baseline, one.lower_bound), (1, 1, Some(1), 1));
        let big = conv_thresholds(10, 10, 100);
        assert_eq!((big.conv_poly, big.coded_conv_baseline), (19, Some(100)));
        for m in 2..=12 {
            for n in 2..=12 {
                assert!(conv_thresholds(m, n, m * n).conv_poly < m * n);
            }
        }
    }

    #[test]
    fn ragged_and_padding() {
        let f = FieldCtx::default();
        let v: Vec<_> = (1..=7).map(|x| f.elem(x)).collect();
        assert_eq!(VecBlocks::split(&v, 2), Err(Error::NonDivisiblePartition { len: 7, parts: 2 }));
        let padded = VecBlocks::split_padded(&v, 2).unwrap();
        assert_eq!(padded.block_len(), 4);
        assert_eq!(padded.concat()[7], FieldElem::ZERO);
    }
}
