//! Monte-Carlo latency and communication-load analysis.
//!
//! Worker times are iid draws from a [`LatencyModel`]. A scheme's latency on
//! one draw is the earliest time at which the set of finished workers is
//! decodable; decoding time itself is not counted here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::matrix::ProblemShape;
use crate::schemes::{Layout, SchemeKind};

/// Number of grid points in a CCDF table.
pub const CCDF_POINTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatencyModel {
    /// `shift + Exp(rate)`.
    ShiftedExponential { shift: f64, rate: f64 },
    Deterministic { value: f64 },
    /// Uniform resampling of observed times.
    Empirical { samples: Vec<f64> },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::ShiftedExponential { shift: 1.0, rate: 1.0 }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModelParams(msg));
        match self {
            LatencyModel::ShiftedExponential { shift, rate } => {
                if !(shift.is_finite() && *shift >= 0.0) {
                    return bad(format!("shift must be finite and non-negative, got {shift}"));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("rate must be finite and positive, got {rate}"));
                }
            }
            LatencyModel::Deterministic { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return bad(format!("time must be finite and non-negative, got {value}"));
                }
            }
            LatencyModel::Empirical { samples } => {
                if samples.is_empty() {
                    return bad("empirical model needs at least one sample".into());
                }
                if let Some(x) = samples.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                    return bad(format!("empirical sample {x} is not a finite non-negative time"));
                }
            }
        }
        Ok(())
    }

    /// One draw; the model must be valid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LatencyModel::ShiftedExponential { shift, rate } => {
                shift + Exp::new(*rate).expect("validated rate").sample(rng)
            }
            LatencyModel::Deterministic { value } => *value,
            LatencyModel::Empirical { samples } => samples[rng.random_range(0..samples.len())],
        }
    }

    /// `E[T]`.
    pub fn mean(&self) -> f64 {
        match self {
            LatencyModel::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
            LatencyModel::Deterministic { value } => *value,
            LatencyModel::Empirical { samples } => samples.iter().sum::<f64>() / samples.len() as f64,
        }
    }
}

/// Generator for trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `trials x workers` worker times. Row `i` depends only on `(seed, i)`.
pub fn sample_latency(model: &LatencyModel, workers: usize, seed: u64, trials: usize) -> Result<Vec<Vec<f64>>> {
    sample_latency_with(model, workers, seed, trials, Exec::default())
}

pub fn sample_latency_with(
    model: &LatencyModel,
    workers: usize,
    seed: u64,
    trials: usize,
    exec: Exec,
) -> Result<Vec<Vec<f64>>> {
    model.validate()?;
    if trials == 0 {
        return Err(Error::InvalidModelParams("at least one trial is required".into()));
    }
    Ok(exec.map_range(trials, |t| {
        let mut rng = trial_rng(seed, t as u64);
        (0..workers).map(|_| model.sample(&mut rng)).collect()
    }))
}

/// `k`-th smallest of `times`, 1-based.
pub fn order_statistic(times: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k <= times.len(), "order statistic {k} of {} values", times.len());
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[k - 1]
}

/// Earliest `t` with `{i : T_i <= t}` decodable. Decodability is monotone in
/// the response set for every layout, so the shortest decodable prefix of the
/// finishing order is found by bisection.
pub fn scheme_latency(layout: &Layout, times: &[f64]) -> Result<f64> {
    let workers = layout.workers();
    if times.len() != workers {
        return Err(Error::ShapeMismatch(format!("{} times for {workers} workers", times.len())));
    }
    let mut order: Vec<usize> = (0..workers).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    let prefix_ok = |len: usize| {
        let mut mask = vec![false; workers];
        for &i in &order[..len] {
            mask[i] = true;
        }
        layout.decodable_mask(&mask)
    };
    if !prefix_ok(workers) {
        return Err(Error::NeverDecodable);
    }
    let (mut lo, mut hi) = (0, workers);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if prefix_ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(if lo == 0 { 0.0 } else { times[order[lo - 1]] })
}

/// Nearest-rank percentile, `p` in `(0, 100]`.
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, p)
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Empirical `P(T > t)` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ccdf {
    pub points: Vec<(f64, f64)>,
}

impl Ccdf {
    pub fn new(samples: &[f64], grid: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let points = grid
            .iter()
            .map(|&t| {
                let at_most = sorted.partition_point(|&x| x <= t);
                (t, (sorted.len() - at_most) as f64 / n)
            })
            .collect();
        Ccdf { points }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 <= w[0].1)
    }

    /// `self(t) >= other(t)` at every grid point; grids must match.
    pub fn dominates(&self, other: &Ccdf) -> bool {
        self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| a.0 == b.0 && a.1 >= b.1)
    }
}

/// `CCDF_POINTS` evenly spaced points from the minimum to the 99.9th
/// percentile of `pooled`.
pub fn ccdf_grid(pooled: &[f64]) -> Vec<f64> {
    let mut sorted = pooled.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0];
    let hi = percentile_sorted(&sorted, 99.9);
    (0..CCDF_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (CCDF_POINTS - 1) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyStats {
    pub scheme: SchemeKind,
    pub threshold: usize,
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub mean: f64,
    pub p95: f64,
    pub p99: f64,
    /// Worst-case load, see [`worst_case_results`].
    pub comm_load_bits: f64,
    #[serde(skip)]
    pub ccdf: Ccdf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub trials: usize,
    pub seed: u64,
    pub model: LatencyModel,
    pub schemes: Vec<LatencyStats>,
    /// Largest `T_poly - T_scheme` over all trials and schemes; 0 when the
    /// polynomial code is never beaten.
    pub max_violation: f64,
    pub violations: usize,
    /// Every scheme's CCDF lies on or above the polynomial code's.
    pub ccdf_ordered: bool,
    pub lower_bound_bits: f64,
}

impl DominanceReport {
    pub fn stats(&self, kind: SchemeKind) -> Option<&LatencyStats> {
        self.schemes.iter().find(|s| s.scheme == kind)
    }

    /// Rows `trial,scheme,latency`.
    pub fn latency_rows(&self) -> Vec<LatencyRow> {
        let mut rows = Vec::new();
        for s in &self.schemes {
            for (trial, &latency) in s.samples.iter().enumerate() {
                rows.push(LatencyRow { trial, scheme: s.scheme.name(), latency });
            }
        }
        rows
    }

    /// Rows `t,scheme,ccdf`.
    pub fn ccdf_rows(&self) -> Vec<CcdfRow> {
        let mut rows = Vec::new();
        for s in &self.schemes {
            for &(t, ccdf) in &s.ccdf.points {
                rows.push(CcdfRow { t, scheme: s.scheme.name(), ccdf });
            }
        }
        rows
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyRow {
    pub trial: usize,
    pub scheme: &'static str,
    pub latency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CcdfRow {
    pub t: f64,
    pub scheme: &'static str,
    pub ccdf: f64,
}

/// Compares every scheme against the polynomial code on common samples.
/// The polynomial code's latency is the `mn`-th order statistic. Loads are
/// reported for the default modulus.
pub fn dominance_check(
    kinds: &[SchemeKind],
    model: &LatencyModel,
    shape: &ProblemShape,
    trials: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let log2q = crate::field::FieldCtx::default().log2_q();
    dominance_check_with(kinds, model, shape, trials, seed, log2q, Exec::default())
}

pub fn dominance_check_with(
    kinds: &[SchemeKind],
    model: &LatencyModel,
    shape: &ProblemShape,
    trials: usize,
    seed: u64,
    log2q: f64,
    exec: Exec,
) -> Result<DominanceReport> {
    if !kinds.contains(&SchemeKind::Poly) {
        return Err(Error::InvalidParameters("dominance check needs the polynomial code".into()));
    }
    let mut ordered = vec![SchemeKind::Poly];
    ordered.extend(kinds.iter().copied().filter(|&k| k != SchemeKind::Poly));
    ordered.dedup();
    let layouts = ordered.iter().map(|k| k.layout(shape)).collect::<Result<Vec<_>>>()?;
    let samples = sample_latency_with(model, shape.workers, seed, trials, exec)?;
    let mn = shape.m * shape.n;
    let per_trial = exec.map_slice(&samples, |times| {
        ordered
            .iter()
            .zip(&layouts)
            .map(|(kind, layout)| match kind {
                SchemeKind::Poly => Ok(order_statistic(times, mn)),
                _ => scheme_latency(layout, times),
            })
            .collect::<Result<Vec<f64>>>()
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let mut max_violation = 0.0f64;
    let mut violations = 0;
    for row in &per_trial {
        for &t in &row[1..] {
            if t < row[0] {
                violations += 1;
                max_violation = max_violation.max(row[0] - t);
            }
        }
    }
    let columns: Vec<Vec<f64>> = (0..ordered.len()).map(|c| per_trial.iter().map(|r| r[c]).collect()).collect();
    let pooled: Vec<f64> = columns.concat();
    let grid = ccdf_grid(&pooled);
    let schemes: Vec<LatencyStats> = ordered
        .iter()
        .zip(&columns)
        .map(|(&kind, col)| {
            let mut sorted = col.clone();
            sorted.sort_by(f64::total_cmp);
            let threshold = kind.threshold(shape).expect("layout validated");
            LatencyStats {
                scheme: kind,
                threshold,
                samples: col.clone(),
                mean: col.iter().sum::<f64>() / col.len() as f64,
                p95: percentile_sorted(&sorted, 95.0),
                p99: percentile_sorted(&sorted, 99.0),
                comm_load_bits: analytic_comm_load_bits(kind, shape, log2q).expect("layout validated"),
                ccdf: Ccdf::new(col, &grid),
            }
        })
        .collect();
    let ccdf_ordered = schemes[1..].iter().all(|s| s.ccdf.dominates(&schemes[0].ccdf));
    Ok(DominanceReport {
        trials,
        seed,
        model: model.clone(),
        schemes,
        max_violation,
        violations,
        ccdf_ordered,
        lower_bound_bits: comm_lower_bound_bits(shape, log2q),
    })
}

/// Field elements delivered when `results` blocks of size `(r/m)(t/n)`
/// reach the master.
pub fn comm_load_elements(shape: &ProblemShape, results: usize) -> u64 {
    results as u64 * shape.block_len() as u64
}

/// `results * (r/m)(t/n) * log2 q`.
pub fn comm_load_bits(shape: &ProblemShape, results: usize, log2q: f64) -> f64 {
    comm_load_elements(shape, results) as f64 * log2q
}

/// `rt * log2 q`, the least any scheme can deliver.
pub fn comm_lower_bound_bits(shape: &ProblemShape, log2q: f64) -> f64 {
    (shape.r * shape.t) as f64 * log2q
}

/// Results the master may have to collect in the worst case: the threshold,
/// capped by the number of workers that hold a share.
pub fn worst_case_results(kind: SchemeKind, shape: &ProblemShape) -> Result<usize> {
    let active = kind.layout(shape)?.active_workers();
    Ok(kind.threshold(shape)?.min(active))
}

/// Worst-case load of `kind`.
pub fn analytic_comm_load_bits(kind: SchemeKind, shape: &ProblemShape, log2q: f64) -> Result<f64> {
    Ok(comm_load_bits(shape, worst_case_results(kind, shape)?, log2q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use proptest::prelude::*;

    fn shape(m: usize, n: usize, workers: usize) -> ProblemShape {
        ProblemShape::new(m * n, m, n, m, n, workers).unwrap()
    }

    #[test]
    fn deterministic_model() {
        let t = sample_latency(&LatencyModel::Deterministic { value: 1.0 }, 4, 3, 5).unwrap();
        assert_eq!(t, vec![vec![1.0; 4]; 5]);
    }

    #[test]
    fn shifted_exponential_mean() {
        let model = LatencyModel::default();
        let t = sample_latency(&model, 10, 11, 10_000).unwrap();
        let flat: Vec<f64> = t.concat();
        let mean = flat.iter().sum::<f64>() / flat.len() as f64;
        assert!((mean - 2.0).abs() < 0.05, "{mean}");
        assert!(flat.iter().all(|&x| x >= 1.0));
        assert_eq!(model.mean(), 2.0);
    }

    #[test]
    fn seeded_and_policy_independent() {
        let model = LatencyModel::default();
        let a = sample_latency_with(&model, 7, 5, 50, Exec::Sequential).unwrap();
        let b = sample_latency_with(&model, 7, 5, 50, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_latency(&model, 7, 6, 50).unwrap());
    }

    #[test]
    fn invalid_models() {
        for model in [
            LatencyModel::ShiftedExponential { shift: -1.0, rate: 1.0 },
            LatencyModel::ShiftedExponential { shift: 1.0, rate: 0.0 },
            LatencyModel::Deterministic { value: f64::NAN },
            LatencyModel::Empirical { samples: vec![] },
        ] {
            assert!(matches!(sample_latency(&model, 3, 0, 1), Err(Error::InvalidModelParams(_))));
        }
        assert!(sample_latency(&LatencyModel::default(), 3, 0, 0).is_err());
    }

    #[test]
    fn latency_examples() {
        let poly = SchemeKind::Poly.layout(&shape(2, 2, 5)).unwrap();
        assert_eq!(scheme_latency(&poly, &[5.0, 1.0, 2.0, 3.0, 4.0]).unwrap(), 4.0);
        let uncoded = SchemeKind::Uncoded.layout(&shape(2, 2, 4)).unwrap();
        assert_eq!(scheme_latency(&uncoded, &[0.5, 7.0, 2.0, 3.0]).unwrap(), 7.0);
        // the five earliest workers are 1, 4, 5, 7, 6; no four of them decode
        let product = SchemeKind::Product.layout(&shape(2, 2, 9)).unwrap();
        let times = [8.0, 1.0, 9.0, 7.0, 2.0, 3.0, 5.0, 4.0, 6.0];
        assert_eq!(scheme_latency(&product, &times).unwrap(), 5.0);
    }

    #[test]
    fn never_decodable() {
        let layout = Layout::Poly { workers: 3, needed: 4 };
        assert_eq!(scheme_latency(&layout, &[1.0, 2.0, 3.0]), Err(Error::NeverDecodable));
    }

    #[test]
    fn percentiles_and_ccdf() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&v, 0.1), 1.0);
        let grid = ccdf_grid(&v);
        assert_eq!(grid.len(), CCDF_POINTS);
        let c = Ccdf::new(&v, &grid);
        assert!(c.is_nonincreasing());
        assert_eq!(c.points[0], (1.0, 0.99));
    }

    #[test]
    fn poly_against_itself() {
        let s = shape(2, 2, 6);
        let r = dominance_check(&[SchemeKind::Poly], &LatencyModel::default(), &s, 100, 1).unwrap();
        assert_eq!(r.schemes.len(), 1);
        assert_eq!(r.violations, 0);
        assert!(r.ccdf_ordered);
        assert!(dominance_check(&[SchemeKind::Uncoded], &LatencyModel::default(), &s, 10, 1).is_err());
    }

    #[test]
    fn comm_load_formulas() {
        let log2q = FieldCtx::default().log2_q();
        let big = ProblemShape::new(4000, 4000, 4000, 4, 4, 17).unwrap();
        assert_eq!(comm_load_elements(&big, 16), 16_000_000);
        assert_eq!(analytic_comm_load_bits(SchemeKind::Poly, &big, log2q).unwrap(), comm_lower_bound_bits(&big, log2q));
        let one = ProblemShape::new(3, 3, 2, 1, 1, 1).unwrap();
        assert_eq!(comm_load_bits(&one, 1, log2q), 6.0 * log2q);
        let s = ProblemShape::new(4, 4, 4, 2, 2, 6).unwrap();
        let mds = analytic_comm_load_bits(SchemeKind::Mds1d, &s, log2q).unwrap();
        assert!(mds > analytic_comm_load_bits(SchemeKind::Poly, &s, log2q).unwrap());
    }

    proptest! {
        #[test]
        fn poly_latency_is_order_statistic(times in prop::collection::vec(0.0f64..10.0, 9)) {
            let layout = SchemeKind::Poly.layout(&shape(2, 2, 9)).unwrap();
            prop_assert_eq!(scheme_latency(&layout, &times).unwrap(), order_statistic(&times, 4));
        }

        #[test]
        fn schemes_never_beat_poly(seed in any::<u64>()) {
            let s = shape(2, 2, 9);
            let kinds = [SchemeKind::Poly, SchemeKind::Product, SchemeKind::Uncoded];
            let r = dominance_check(&kinds, &LatencyModel::default(), &s, 50, seed).unwrap();
            prop_assert_eq!(r.violations, 0);
            prop_assert!(r.ccdf_ordered);
        }
    }
}
