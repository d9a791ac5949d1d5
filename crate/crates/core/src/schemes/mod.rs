//! Computation strategies for distributed `Aᵀ B`: the polynomial code and the
//! 1D MDS, product-code and uncoded baselines.
//!
//! Every strategy implements [`Scheme`]: encode the inputs into per-worker
//! shares, decide whether a set of responders suffices, and decode. The
//! decodability rules themselves live in [`Layout`], which needs no field
//! and is what the latency simulator consumes.

mod layout;
mod mds;
mod mds1d;
mod poly;
mod product;
mod uncoded;

pub use layout::Layout;
pub use mds::SystematicMds;
pub use mds1d::Mds1dCode;
pub use poly::{CodeParams, CorrectedDecode, PolyCode};
pub use product::{peel, Line, PeelStep, PeelTrace, ProductCode};
pub use uncoded::UncodedScheme;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{FieldCtx, FieldElem};
use crate::matrix::{transpose_mul_with, FMatrix, ProblemShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Poly,
    Mds1d,
    Product,
    Uncoded,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] =
        [SchemeKind::Poly, SchemeKind::Mds1d, SchemeKind::Product, SchemeKind::Uncoded];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Poly => "poly",
            SchemeKind::Mds1d => "mds1d",
            SchemeKind::Product => "product",
            SchemeKind::Uncoded => "uncoded",
        }
    }

    /// Structural layout of this scheme on `shape`, validating the scheme's
    /// preconditions.
    pub fn layout(self, shape: &ProblemShape) -> Result<Layout> {
        let ProblemShape { m, n, workers, .. } = *shape;
        match self {
            SchemeKind::Poly => {
                let needed = m * n;
                if workers < needed {
                    return Err(Error::InsufficientWorkers { have: workers, need: needed });
                }
                Ok(Layout::Poly { workers, needed })
            }
            SchemeKind::Mds1d => {
                if workers % n != 0 || workers / n < m {
                    return Err(Error::NonDivisibleGroups { workers, groups: n, m });
                }
                Ok(Layout::Mds1d { groups: n, per_group: workers / n, m })
            }
            SchemeKind::Product => {
                if m != n {
                    return Err(Error::InvalidGrid(format!("product code needs m = n, got {m} and {n}")));
                }
                let side = exact_sqrt(workers)
                    .ok_or_else(|| Error::InvalidGrid(format!("{workers} workers is not a perfect square")))?;
                if side < m {
                    return Err(Error::InvalidGrid(format!("grid side {side} is smaller than m = {m}")));
                }
                Ok(Layout::Product { side, m })
            }
            SchemeKind::Uncoded => {
                let participants = m * n;
                if workers < participants {
                    return Err(Error::InsufficientWorkers { have: workers, need: participants });
                }
                Ok(Layout::Uncoded { workers, participants })
            }
        }
    }

    /// Worst-case recovery threshold from the closed-form expressions.
    pub fn threshold(self, shape: &ProblemShape) -> Result<usize> {
        let layout = self.layout(shape)?;
        let ProblemShape { m, n, workers, .. } = *shape;
        Ok(match layout {
            Layout::Poly { .. } => m * n,
            // any missing participant blocks decoding
            Layout::Uncoded { .. } => workers,
            Layout::Mds1d { .. } => workers - workers / n + m,
            Layout::Product { side, .. } => 2 * (m - 1) * side + 1 - (m - 1) * (m - 1),
        })
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poly" => Ok(SchemeKind::Poly),
            "mds1d" => Ok(SchemeKind::Mds1d),
            "product" => Ok(SchemeKind::Product),
            "uncoded" => Ok(SchemeKind::Uncoded),
            other => Err(Error::Parse(format!(
                "unknown scheme '{other}', expected poly, mds1d, product or uncoded"
            ))),
        }
    }
}

pub(crate) fn exact_sqrt(v: usize) -> Option<usize> {
    let r = (v as f64).sqrt().round() as usize;
    (r * r == v).then_some(r)
}

/// Which part of the scheme a share belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Poly,
    Group { group: usize, index: usize },
    Grid { row: usize, col: usize },
    Pair { a_block: usize, b_block: usize },
}

/// What one worker stores: the coded blocks `Ã_i` (s x r/m) and `B̃_i` (s x t/n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerShare {
    pub worker_id: usize,
    pub x: FieldElem,
    pub a: FMatrix,
    pub b: FMatrix,
    pub placement: Placement,
}

impl WorkerShare {
    /// The worker's job: `C̃_i = Ã_iᵀ B̃_i`.
    pub fn compute(&self, ctx: &FieldCtx) -> WorkerResult {
        let product = transpose_mul_with(ctx, &self.a, &self.b, Exec::Sequential)
            .expect("share blocks have matching row counts");
        WorkerResult { worker_id: self.worker_id, product }
    }
}

/// One worker's returned block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkerResult {
    pub worker_id: usize,
    pub product: FMatrix,
}

/// Common contract of all computation strategies. Implementations are
/// immutable and shareable across threads.
pub trait Scheme: Send + Sync {
    fn kind(&self) -> SchemeKind;

    fn ctx(&self) -> &FieldCtx;

    fn shape(&self) -> &ProblemShape;

    fn layout(&self) -> &Layout;

    /// Shares for every participating worker, ordered by worker id.
    fn encode(&self, a: &FMatrix, b: &FMatrix) -> Result<Vec<WorkerShare>>;

    fn decodable(&self, responded: &[usize]) -> bool {
        self.layout().decodable_ids(responded)
    }

    /// Recovers `C = Aᵀ B`. The outcome does not depend on the order of
    /// `results`, and extra results beyond what is needed are dropped
    /// deterministically.
    fn decode(&self, results: &[WorkerResult]) -> Result<FMatrix>;

    /// Worst-case recovery threshold.
    fn threshold(&self) -> usize {
        self.kind().threshold(self.shape()).expect("validated at construction")
    }

    /// Multiply-accumulate count of decoding from `responded`, used for the
    /// deterministic virtual clock.
    fn decode_cost(&self, responded: &[usize]) -> u64;
}

/// Builds a scheme with its default parameters (evaluation points `0..N`,
/// `(α, β) = (1, m)` for the polynomial code).
pub fn build_scheme(kind: SchemeKind, ctx: FieldCtx, shape: ProblemShape) -> Result<Box<dyn Scheme>> {
    Ok(match kind {
        SchemeKind::Poly => Box::new(PolyCode::new(ctx, shape, CodeParams::default_for(&shape), None)?),
        SchemeKind::Mds1d => Box::new(Mds1dCode::new(ctx, shape)?),
        SchemeKind::Product => Box::new(ProductCode::new(ctx, shape)?),
        SchemeKind::Uncoded => Box::new(UncodedScheme::new(ctx, shape)?),
    })
}

/// Sorted, deduplicated results; `None` ids outside `0..workers`.
pub(crate) fn normalize_results(results: &[WorkerResult], workers: usize) -> Vec<&WorkerResult> {
    let mut sorted: Vec<&WorkerResult> = results.iter().filter(|r| r.worker_id < workers).collect();
    sorted.sort_by_key(|r| r.worker_id);
    sorted.dedup_by_key(|r| r.worker_id);
    sorted
}

pub(crate) fn check_result_shape(shape: &ProblemShape, result: &WorkerResult) -> Result<()> {
    let p = &result.product;
    if p.rows() != shape.block_rows() || p.cols() != shape.block_cols() {
        return Err(Error::ShapeMismatch(format!(
            "worker {} returned a {}x{} block, expected {}x{}",
            result.worker_id,
            p.rows(),
            p.cols(),
            shape.block_rows(),
            shape.block_cols()
        )));
    }
    Ok(())
}

/// One row of the recovery-threshold comparison table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdRow {
    pub workers: usize,
    pub scheme: String,
    pub threshold: usize,
}

/// Thresholds of every scheme defined on `(m, n, N)` for each `N` in the
/// range, plus the `mn` cut-set floor under the scheme name `lower_bound`.
pub fn threshold_table(m: usize, n: usize, workers: impl IntoIterator<Item = usize>) -> Vec<ThresholdRow> {
    let mut rows = Vec::new();
    for count in workers {
        // s, r, t do not affect thresholds.
        let Ok(shape) = ProblemShape::new(m * n, m, n, m, n, count) else {
            continue;
        };
        for kind in [SchemeKind::Poly, SchemeKind::Product, SchemeKind::Mds1d] {
            if let Ok(threshold) = kind.threshold(&shape) {
                rows.push(ThresholdRow { workers: count, scheme: kind.name().into(), threshold });
            }
        }
        rows.push(ThresholdRow { workers: count, scheme: "lower_bound".into(), threshold: m * n });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(m: usize, n: usize, workers: usize) -> ProblemShape {
        ProblemShape::new(m * n * 2, m, n, m, n, workers).unwrap()
    }

    #[test]
    fn closed_form_thresholds() {
        let s = shape(10, 10, 400);
        assert_eq!(SchemeKind::Poly.threshold(&s), Ok(100));
        assert_eq!(SchemeKind::Mds1d.threshold(&s), Ok(370));
        assert_eq!(SchemeKind::Product.threshold(&s), Ok(280));
        assert_eq!(SchemeKind::Poly.threshold(&shape(2, 2, 5)), Ok(4));
        let one = shape(1, 1, 1);
        for kind in SchemeKind::ALL {
            assert_eq!(kind.threshold(&one), Ok(1), "{kind}");
        }
    }

    #[test]
    fn poly_threshold_is_mn_everywhere() {
        for m in 1..=8 {
            for n in 1..=8 {
                assert_eq!(SchemeKind::Poly.threshold(&shape(m, n, m * n + 3)), Ok(m * n));
            }
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(SchemeKind::Product.layout(&shape(2, 2, 8)), Err(Error::InvalidGrid(_))));
        assert!(matches!(SchemeKind::Product.layout(&shape(2, 3, 9)), Err(Error::InvalidGrid(_))));
        assert!(matches!(SchemeKind::Mds1d.layout(&shape(2, 2, 7)), Err(Error::NonDivisibleGroups { .. })));
        assert!(matches!(SchemeKind::Mds1d.layout(&shape(3, 2, 4)), Err(Error::NonDivisibleGroups { .. })));
        assert!(matches!(SchemeKind::Poly.layout(&shape(2, 2, 3)), Err(Error::InsufficientWorkers { .. })));
    }

    #[test]
    fn formulas_agree_with_exhaustive_sweeps() {
        for (m, n, workers) in [(2, 2, 6), (2, 1, 3), (2, 2, 8), (3, 2, 6), (2, 2, 5), (3, 3, 10)] {
            let s = shape(m, n, workers);
            for kind in [SchemeKind::Poly, SchemeKind::Mds1d, SchemeKind::Uncoded] {
                if let Ok(layout) = kind.layout(&s) {
                    assert_eq!(layout.brute_force_threshold(), kind.threshold(&s).unwrap(), "{kind} {s:?}");
                }
            }
        }
        for (m, workers) in [(2, 9), (2, 16), (3, 9), (3, 16)] {
            let s = shape(m, m, workers);
            let layout = SchemeKind::Product.layout(&s).unwrap();
            assert_eq!(layout.brute_force_threshold(), SchemeKind::Product.threshold(&s).unwrap(), "{s:?}");
        }
    }

    #[test]
    fn cut_set_floor_holds_for_every_pattern() {
        for (m, n, workers) in [(2, 2, 6), (2, 2, 9), (2, 2, 8), (3, 3, 9), (2, 3, 12)] {
            let s = shape(m, n, workers);
            for kind in SchemeKind::ALL {
                if let Ok(layout) = kind.layout(&s) {
                    assert!(layout.min_decodable_size().unwrap() >= m * n, "{kind} {s:?}");
                }
            }
        }
    }

    #[test]
    fn threshold_ordering() {
        for m in 1..=4 {
            for side in m..=8 {
                let s = shape(m, m, side * side);
                let poly = SchemeKind::Poly.threshold(&s).unwrap();
                let product = SchemeKind::Product.threshold(&s).unwrap();
                assert!(poly <= product, "{s:?}");
                if let Ok(mds) = SchemeKind::Mds1d.threshold(&s) {
                    assert!(product <= mds, "{s:?}");
                }
            }
        }
    }

    #[test]
    fn table_rows() {
        let rows = threshold_table(10, 10, [400]);
        let get = |name: &str| rows.iter().find(|r| r.scheme == name).unwrap().threshold;
        assert_eq!((get("poly"), get("product"), get("mds1d"), get("lower_bound")), (100, 280, 370, 100));
        // 401 is neither square nor divisible by 10
        let rows = threshold_table(10, 10, [401]);
        assert_eq!(rows.iter().map(|r| r.scheme.as_str()).collect::<Vec<_>>(), vec!["poly", "lower_bound"]);
    }

    #[test]
    fn scheme_names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>(), Ok(kind));
        }
        assert!("lt".parse::<SchemeKind>().is_err());
    }
}
