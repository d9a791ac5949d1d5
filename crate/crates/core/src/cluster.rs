//! In-process master/worker harness.
//!
//! Every share is computed on its own thread and sent to the master over a
//! channel. The master takes results in completion order, checks the
//! scheme's predicate after each arrival and decodes at the first success.
//! Results still in flight are ignored and their threads are never joined.
//!
//! Under the default virtual clock a worker's completion time is computed
//! from its multiply-accumulate count and the straggler plan, which makes
//! reports reproducible. The wall clock mode sleeps for real instead.

use std::collections::{BTreeSet, HashMap};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::matrix::FMatrix;
use crate::schemes::{PolyCode, Scheme, WorkerResult, WorkerShare};
use crate::sim::{trial_rng, LatencyModel};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StragglerPlan {
    None,
    /// One uniformly chosen worker takes `factor` times longer.
    SlowdownRandomWorker { factor: f64 },
    /// Extra seconds per worker; `f64::INFINITY` never responds.
    PerWorkerDelays { delays: Vec<f64> },
    /// Each worker's time is scaled by an independent draw.
    ModelSampled { model: LatencyModel },
}

impl StragglerPlan {
    pub fn validate(&self, workers: usize) -> Result<()> {
        match self {
            StragglerPlan::None => Ok(()),
            StragglerPlan::SlowdownRandomWorker { factor } => {
                if factor.is_finite() && *factor >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameters(format!("slowdown factor must be at least 1, got {factor}")))
                }
            }
            StragglerPlan::PerWorkerDelays { delays } => {
                if delays.len() != workers {
                    return Err(Error::InvalidParameters(format!(
                        "{} delays for {workers} workers",
                        delays.len()
                    )));
                }
                match delays.iter().find(|d| d.is_nan() || **d < 0.0) {
                    Some(d) => Err(Error::InvalidParameters(format!("delay {d} is negative"))),
                    None => Ok(()),
                }
            }
            StragglerPlan::ModelSampled { model } => model.validate(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    #[default]
    Virtual,
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnessConfig {
    pub clock: Clock,
    /// Seconds per multiply-accumulate for worker and decode cost.
    pub seconds_per_mac: f64,
    /// Worker times are scaled by `1 + jitter * U`, `U` uniform in `[0, 1)`.
    pub jitter: f64,
    /// Wall clock mode gives up after this many seconds.
    pub timeout: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig { clock: Clock::Virtual, seconds_per_mac: 1e-9, jitter: 0.05, timeout: 60.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scheme: String,
    /// `collect_latency + decode_time`.
    pub wall_latency: f64,
    /// Arrival time of the last result used.
    pub collect_latency: f64,
    pub decode_time: f64,
    /// Worker ids in arrival order at the decode moment.
    pub responders: Vec<usize>,
    pub arrival_times: Vec<f64>,
    /// Every worker's scheduled completion time; idle workers have none.
    pub finish_times: Vec<Option<f64>>,
    pub slowed_worker: Option<usize>,
    pub elements_received: u64,
    pub bytes_received: u64,
    pub comm_load_bits: f64,
    pub output_digest: String,
    pub faulty_workers: Vec<usize>,
}

/// Hex SHA-256 of the dimensions and entries as little-endian `u64`s.
pub fn digest(c: &FMatrix) -> String {
    let mut h = Sha256::new();
    h.update((c.rows() as u64).to_le_bytes());
    h.update((c.cols() as u64).to_le_bytes());
    for v in c.values() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

struct Schedule {
    finish: Vec<Option<f64>>,
    slowed: Option<usize>,
}

fn schedule(scheme: &dyn Scheme, plan: &StragglerPlan, config: &HarnessConfig, seed: u64, shares: &[WorkerShare]) -> Schedule {
    let workers = scheme.shape().workers;
    let mut rng = trial_rng(seed, u64::MAX);
    let slowed = match plan {
        StragglerPlan::SlowdownRandomWorker { .. } => Some(rng.random_range(0..workers)),
        _ => None,
    };
    let base = scheme.shape().worker_macs() as f64 * config.seconds_per_mac;
    let mut finish = vec![None; workers];
    for share in shares {
        let id = share.worker_id;
        let mut t = base * (1.0 + config.jitter * rng.random::<f64>());
        match plan {
            StragglerPlan::None => {}
            StragglerPlan::SlowdownRandomWorker { factor } => {
                if slowed == Some(id) {
                    t *= factor;
                }
            }
            StragglerPlan::PerWorkerDelays { delays } => t += delays[id],
            StragglerPlan::ModelSampled { model } => t *= model.sample(&mut rng),
        }
        finish[id] = Some(t);
    }
    Schedule { finish, slowed }
}

fn spawn_workers(ctx: FieldCtx, shares: Vec<WorkerShare>, delays: Option<Vec<Option<f64>>>) -> mpsc::Receiver<WorkerResult> {
    let (tx, rx) = mpsc::channel();
    for share in shares {
        let tx = tx.clone();
        let sleep = delays.as_ref().map(|d| d[share.worker_id]);
        thread::spawn(move || {
            match sleep {
                Some(None) => return,
                Some(Some(secs)) if secs.is_finite() => thread::sleep(Duration::from_secs_f64(secs)),
                Some(Some(_)) => return,
                None => {}
            }
            let result = share.compute(&ctx);
            // The master may already have stopped listening.
            let _ = tx.send(result);
        });
    }
    rx
}

struct Collected {
    results: Vec<WorkerResult>,
    arrivals: Vec<f64>,
}

fn collect_virtual(
    scheme: &dyn Scheme,
    rx: &mpsc::Receiver<WorkerResult>,
    finish: &[Option<f64>],
    stop_early: bool,
) -> Result<Collected> {
    let mut order: Vec<usize> = (0..finish.len()).filter(|&i| finish[i].is_some_and(f64::is_finite)).collect();
    order.sort_by(|&a, &b| finish[a].unwrap().total_cmp(&finish[b].unwrap()).then(a.cmp(&b)));
    let mut buffered: HashMap<usize, WorkerResult> = HashMap::new();
    let mut collected = Collected { results: Vec::new(), arrivals: Vec::new() };
    let mut ids = Vec::new();
    for id in order {
        let result = loop {
            if let Some(r) = buffered.remove(&id) {
                break r;
            }
            let r = rx.recv().map_err(|_| Error::HarnessTimeout)?;
            buffered.insert(r.worker_id, r);
        };
        ids.push(id);
        collected.results.push(result);
        collected.arrivals.push(finish[id].unwrap());
        if stop_early && scheme.decodable(&ids) {
            return Ok(collected);
        }
    }
    if !stop_early && scheme.decodable(&ids) {
        return Ok(collected);
    }
    Err(Error::HarnessTimeout)
}

fn collect_wall(
    scheme: &dyn Scheme,
    rx: &mpsc::Receiver<WorkerResult>,
    expected: usize,
    timeout: f64,
    start: Instant,
    stop_early: bool,
) -> Result<Collected> {
    let deadline = start + Duration::from_secs_f64(timeout);
    let mut collected = Collected { results: Vec::new(), arrivals: Vec::new() };
    let mut ids = Vec::new();
    while collected.results.len() < expected {
        let left = deadline.saturating_duration_since(Instant::now());
        let r = rx.recv_timeout(left).map_err(|_| Error::HarnessTimeout)?;
        collected.arrivals.push(start.elapsed().as_secs_f64());
        ids.push(r.worker_id);
        collected.results.push(r);
        if stop_early && scheme.decodable(&ids) {
            return Ok(collected);
        }
    }
    if scheme.decodable(&ids) {
        Ok(collected)
    } else {
        Err(Error::HarnessTimeout)
    }
}

fn gather(
    scheme: &dyn Scheme,
    shares: Vec<WorkerShare>,
    plan: &StragglerPlan,
    config: &HarnessConfig,
    seed: u64,
    stop_early: bool,
    tamper: impl Fn(&mut WorkerResult),
) -> Result<(Schedule, Collected, Option<Instant>)> {
    plan.validate(scheme.shape().workers)?;
    let sched = schedule(scheme, plan, config, seed, &shares);
    let expected = sched.finish.iter().filter(|t| t.is_some_and(f64::is_finite)).count();
    let ctx = *scheme.ctx();
    let (mut collected, start) = match config.clock {
        Clock::Virtual => {
            let rx = spawn_workers(ctx, shares, None);
            (collect_virtual(scheme, &rx, &sched.finish, stop_early)?, None)
        }
        Clock::Wall => {
            let start = Instant::now();
            let rx = spawn_workers(ctx, shares, Some(sched.finish.clone()));
            (collect_wall(scheme, &rx, expected, config.timeout, start, stop_early)?, Some(start))
        }
    };
    for r in &mut collected.results {
        tamper(r);
    }
    Ok((sched, collected, start))
}

fn finish_report(
    scheme: &dyn Scheme,
    sched: Schedule,
    collected: Collected,
    output: &FMatrix,
    decode_time: f64,
    faulty_workers: Vec<usize>,
) -> RunReport {
    let ctx = scheme.ctx();
    let shape = scheme.shape();
    let responders: Vec<usize> = collected.results.iter().map(|r| r.worker_id).collect();
    let elements = responders.len() as u64 * shape.block_len() as u64;
    let collect_latency = collected.arrivals.last().copied().unwrap_or(0.0);
    RunReport {
        scheme: scheme.kind().name().into(),
        wall_latency: collect_latency + decode_time,
        collect_latency,
        decode_time,
        responders,
        arrival_times: collected.arrivals,
        finish_times: sched.finish,
        slowed_worker: sched.slowed,
        elements_received: elements,
        bytes_received: elements * ctx.element_bytes() as u64,
        comm_load_bits: elements as f64 * ctx.log2_q(),
        output_digest: digest(output),
        faulty_workers,
    }
}

/// Encodes, runs every worker and decodes as soon as the responders form a
/// decodable set.
pub fn run(
    scheme: &dyn Scheme,
    a: &FMatrix,
    b: &FMatrix,
    plan: &StragglerPlan,
    config: &HarnessConfig,
    seed: u64,
) -> Result<(RunReport, FMatrix)> {
    let shares = scheme.encode(a, b)?;
    let (sched, collected, start) = gather(scheme, shares, plan, config, seed, true, |_| {})?;
    let (output, decode_time) = match start {
        None => {
            let ids: Vec<usize> = collected.results.iter().map(|r| r.worker_id).collect();
            let out = scheme.decode(&collected.results)?;
            (out, scheme.decode_cost(&ids) as f64 * config.seconds_per_mac)
        }
        Some(_) => {
            let t = Instant::now();
            let out = scheme.decode(&collected.results)?;
            (out, t.elapsed().as_secs_f64())
        }
    };
    Ok((finish_report(scheme, sched, collected, &output, decode_time, Vec::new()), output))
}

/// Waits for all `N` workers, lets the workers in `corrupt` return random
/// blocks and decodes with error correction.
pub fn run_with_faults(
    code: &PolyCode,
    a: &FMatrix,
    b: &FMatrix,
    plan: &StragglerPlan,
    config: &HarnessConfig,
    seed: u64,
    corrupt: &BTreeSet<usize>,
) -> Result<(RunReport, FMatrix)> {
    let ctx = *code.ctx();
    let shares = code.encode(a, b)?;
    let tamper = |r: &mut WorkerResult| {
        if corrupt.contains(&r.worker_id) {
            let mut rng = trial_rng(seed, r.worker_id as u64);
            for v in r.product.as_mut_slice() {
                *v = ctx.add(*v, ctx.random_nonzero(&mut rng));
            }
        }
    };
    let (sched, collected, start) = gather(code, shares, plan, config, seed, false, tamper)?;
    let t = Instant::now();
    let corrected = code.decode_with_errors(&collected.results)?;
    let decode_time = match start {
        None => {
            let ids: Vec<usize> = collected.results.iter().map(|r| r.worker_id).collect();
            code.decode_cost(&ids) as f64 * config.seconds_per_mac
        }
        Some(_) => t.elapsed().as_secs_f64(),
    };
    let report = finish_report(code, sched, collected, &corrected.output, decode_time, corrected.faulty_workers);
    Ok((report, corrected.output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{transpose_mul, ProblemShape};
    use crate::schemes::{build_scheme, CodeParams, SchemeKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inputs(ctx: &FieldCtx, shape: &ProblemShape, seed: u64) -> (FMatrix, FMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (FMatrix::random(ctx, shape.s, shape.r, &mut rng), FMatrix::random(ctx, shape.s, shape.t, &mut rng))
    }

    #[test]
    fn straggler_is_skipped() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 5).unwrap();
        let scheme = build_scheme(SchemeKind::Poly, f, shape).unwrap();
        let (a, b) = inputs(&f, &shape, 1);
        let mut delays = vec![0.0; 5];
        delays[1] = 1.0;
        let plan = StragglerPlan::PerWorkerDelays { delays };
        let (report, c) = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), 3).unwrap();
        let mut responders = report.responders.clone();
        responders.sort();
        assert_eq!(responders, vec![0, 2, 3, 4]);
        assert_eq!(c, transpose_mul(&f, &a, &b).unwrap());
        assert_eq!(report.output_digest, digest(&c));
    }

    #[test]
    fn uncoded_waits_for_everyone() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 6).unwrap();
        let scheme = build_scheme(SchemeKind::Uncoded, f, shape).unwrap();
        let (a, b) = inputs(&f, &shape, 2);
        let (report, _) = run(scheme.as_ref(), &a, &b, &StragglerPlan::None, &HarnessConfig::default(), 0).unwrap();
        let mut responders = report.responders.clone();
        responders.sort();
        assert_eq!(responders, vec![0, 1, 2, 3]);
        assert_eq!(report.finish_times[4], None);
    }

    #[test]
    fn every_scheme_is_exact_and_deterministic() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(12, 4, 4, 2, 2, 9).unwrap();
        let (a, b) = inputs(&f, &shape, 3);
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let plan = StragglerPlan::SlowdownRandomWorker { factor: 2.0 };
        for kind in [SchemeKind::Poly, SchemeKind::Product, SchemeKind::Uncoded] {
            let scheme = build_scheme(kind, f, shape).unwrap();
            for seed in 0..5 {
                let (r1, c) = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), seed).unwrap();
                let (r2, _) = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), seed).unwrap();
                assert_eq!(c, expected, "{kind}");
                assert_eq!(r1, r2);
                assert!(scheme.decodable(&r1.responders));
                assert!(r1.responders.len() >= 4);
                // causality: nothing is used before it finishes
                for (&id, &t) in r1.responders.iter().zip(&r1.arrival_times) {
                    assert_eq!(r1.finish_times[id], Some(t));
                }
                assert!(r1.arrival_times.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        let shape = ProblemShape::new(12, 4, 4, 2, 2, 6).unwrap();
        let scheme = build_scheme(SchemeKind::Mds1d, f, shape).unwrap();
        let (r, c) = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), 9).unwrap();
        assert_eq!(c, expected);
        assert!(r.responders.len() >= 4);
    }

    #[test]
    fn slowed_worker_left_out_when_late() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(16, 4, 4, 2, 2, 7).unwrap();
        let scheme = build_scheme(SchemeKind::Poly, f, shape).unwrap();
        let (a, b) = inputs(&f, &shape, 4);
        let plan = StragglerPlan::SlowdownRandomWorker { factor: 3.0 };
        for seed in 0..20 {
            let (r, _) = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), seed).unwrap();
            let slowed = r.slowed_worker.unwrap();
            let slowed_time = r.finish_times[slowed].unwrap();
            let mut others: Vec<f64> =
                (0..7).filter(|&i| i != slowed).map(|i| r.finish_times[i].unwrap()).collect();
            others.sort_by(f64::total_cmp);
            if slowed_time > others[3] {
                assert!(!r.responders.contains(&slowed));
            }
        }
    }

    #[test]
    fn dead_workers_time_out() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 5).unwrap();
        let scheme = build_scheme(SchemeKind::Poly, f, shape).unwrap();
        let (a, b) = inputs(&f, &shape, 5);
        let mut delays = vec![0.0; 5];
        delays[0] = f64::INFINITY;
        delays[1] = f64::INFINITY;
        let plan = StragglerPlan::PerWorkerDelays { delays };
        let err = run(scheme.as_ref(), &a, &b, &plan, &HarnessConfig::default(), 0).unwrap_err();
        assert_eq!(err, Error::HarnessTimeout);
        let bad = StragglerPlan::SlowdownRandomWorker { factor: 0.5 };
        assert!(matches!(run(scheme.as_ref(), &a, &b, &bad, &HarnessConfig::default(), 0), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn wall_clock_mode() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 5).unwrap();
        let scheme = build_scheme(SchemeKind::Poly, f, shape).unwrap();
        let (a, b) = inputs(&f, &shape, 6);
        let mut delays = vec![0.0; 5];
        delays[2] = 5.0;
        let config = HarnessConfig { clock: Clock::Wall, ..HarnessConfig::default() };
        let plan = StragglerPlan::PerWorkerDelays { delays };
        let started = Instant::now();
        let (r, c) = run(scheme.as_ref(), &a, &b, &plan, &config, 0).unwrap();
        assert!(started.elapsed() < Duration::from_secs(4));
        assert!(!r.responders.contains(&2));
        assert_eq!(c, transpose_mul(&f, &a, &b).unwrap());
    }

    #[test]
    fn faults_are_corrected_or_reported() {
        let f = FieldCtx::default();
        let shape = ProblemShape::new(8, 4, 4, 2, 2, 12).unwrap();
        let code = PolyCode::new(f, shape, CodeParams::default_for(&shape), None).unwrap();
        let (a, b) = inputs(&f, &shape, 7);
        let expected = transpose_mul(&f, &a, &b).unwrap();
        let config = HarnessConfig::default();
        let plan = StragglerPlan::None;
        let (clean, c) = run_with_faults(&code, &a, &b, &plan, &config, 1, &BTreeSet::new()).unwrap();
        assert_eq!(c, expected);
        assert!(clean.faulty_workers.is_empty());
        assert_eq!(clean.responders.len(), 12);
        let (plain, _) = run(&code, &a, &b, &plan, &config, 1).unwrap();
        assert_eq!(plain.output_digest, clean.output_digest);
        let four: BTreeSet<usize> = [0, 3, 8, 11].into();
        let (r, c) = run_with_faults(&code, &a, &b, &plan, &config, 1, &four).unwrap();
        assert_eq!(c, expected);
        assert_eq!(r.faulty_workers, vec![0, 3, 8, 11]);
        let six: BTreeSet<usize> = (0..6).collect();
        assert!(matches!(run_with_faults(&code, &a, &b, &plan, &config, 1, &six), Err(Error::DecodingFailure(_))));
    }
}
