//! Exhaustive checks over every response pattern of small instances.

use std::time::Instant;

use polycode::convolution::{conv_direct, ConvCode, VecBlocks};
use polycode::matrix::{transpose_mul, FMatrix, ProblemShape};
use polycode::schemes::{build_scheme, SchemeKind};
use polycode::{FieldCtx, FieldElem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{CmdResult, Failure};

/// Subsets of `0..n` as sorted id lists.
fn patterns(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u64..1 << n).map(move |bits| (0..n).filter(|i| bits >> i & 1 == 1).collect())
}

#[derive(Default)]
struct Tally {
    instances: usize,
    patterns: usize,
    problems: Vec<String>,
}

/// For each scheme and shape with at most `max_workers` workers: every
/// pattern the predicate accepts decodes to the exact product, every other
/// pattern is refused, and the smallest size at which all patterns decode
/// equals the scheme's threshold.
fn scheme_sweeps(ctx: FieldCtx, max_workers: usize, rng: &mut ChaCha8Rng, tally: &mut Tally) {
    for kind in SchemeKind::ALL {
        for m in 1..=3 {
            for n in 1..=3 {
                for workers in m * n..=max_workers {
                    let Ok(shape) = ProblemShape::new_relaxed(2, 2 * m, 2 * n, m, n, workers) else { continue };
                    let Ok(scheme) = build_scheme(kind, ctx, shape) else { continue };
                    let a = FMatrix::random(&ctx, 2, 2 * m, rng);
                    let b = FMatrix::random(&ctx, 2, 2 * n, rng);
                    let expected = transpose_mul(&ctx, &a, &b).expect("shapes agree");
                    let shares = match scheme.encode(&a, &b) {
                        Ok(s) => s,
                        Err(e) => {
                            tally.problems.push(format!("{kind} {shape:?}: encode failed: {e}"));
                            continue;
                        }
                    };
                    let results: Vec<_> = shares.iter().map(|s| s.compute(&ctx)).collect();
                    let mut all_decode = vec![true; workers + 1];
                    for ids in patterns(workers) {
                        let subset: Vec<_> = results.iter().filter(|r| ids.contains(&r.worker_id)).cloned().collect();
                        let decoded = scheme.decode(&subset);
                        let predicate = scheme.decodable(&ids);
                        match &decoded {
                            Ok(c) if c != &expected => {
                                tally.problems.push(format!("{kind} {shape:?}: pattern {ids:?} decoded wrong"))
                            }
                            _ if decoded.is_ok() != predicate => tally
                                .problems
                                .push(format!("{kind} {shape:?}: pattern {ids:?} predicate disagrees with decoder")),
                            _ => {}
                        }
                        all_decode[ids.len()] &= decoded.is_ok();
                        tally.patterns += 1;
                    }
                    let observed = (0..=workers).find(|&k| all_decode[k..].iter().all(|&x| x)).unwrap_or(workers + 1);
                    if observed != scheme.threshold() {
                        tally.problems.push(format!(
                            "{kind} {shape:?}: exhaustive threshold {observed}, formula {}",
                            scheme.threshold()
                        ));
                    }
                    tally.instances += 1;
                }
            }
        }
    }
}

/// Every `m + n - 1` subset of the coded convolution decodes exactly and
/// every smaller one is refused.
fn conv_sweeps(ctx: FieldCtx, max_workers: usize, rng: &mut ChaCha8Rng, tally: &mut Tally) {
    for m in 1..=3 {
        for n in 1..=3 {
            for workers in m + n - 1..=max_workers {
                let s = 3;
                let a: Vec<FieldElem> = (0..m * s).map(|_| ctx.random(rng)).collect();
                let b: Vec<FieldElem> = (0..n * s).map(|_| ctx.random(rng)).collect();
                let Ok(code) = ConvCode::new(ctx, m, n, workers, None) else { continue };
                let expected = conv_direct(&ctx, &a, &b).expect("nonempty");
                let shares = code
                    .encode(&VecBlocks::split(&a, m).expect("divisible"), &VecBlocks::split(&b, n).expect("divisible"))
                    .expect("block counts match");
                let results: Vec<_> = shares.iter().map(|sh| sh.compute(&ctx)).collect();
                for ids in patterns(workers) {
                    let subset: Vec<_> = ids.iter().map(|&i| results[i].clone()).collect();
                    let decoded = code.decode(&subset);
                    let ok = if ids.len() >= m + n - 1 {
                        decoded.as_ref() == Ok(&expected)
                    } else {
                        decoded.is_err()
                    };
                    if !ok {
                        tally.problems.push(format!("conv m={m} n={n} N={workers}: pattern {ids:?} wrong"));
                    }
                    tally.patterns += 1;
                }
                tally.instances += 1;
            }
        }
    }
}

pub fn cmd_verify(ctx: FieldCtx, max_workers: usize, seed: u64) -> CmdResult {
    if !(1..=16).contains(&max_workers) {
        return Err(Failure::Validation("--max-workers must be between 1 and 16".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let suites: [(&str, fn(FieldCtx, usize, &mut ChaCha8Rng, &mut Tally)); 2] =
        [("schemes", scheme_sweeps), ("convolution", conv_sweeps)];
    for (name, suite) in suites {
        let mut tally = Tally::default();
        suite(ctx, max_workers, &mut rng, &mut tally);
        let status = if tally.problems.is_empty() { "ok" } else { "FAILED" };
        println!("{name:<12} {status:<6} {} instances, {} patterns", tally.instances, tally.patterns);
        for p in &tally.problems {
            println!("  {p}");
        }
        failures.extend(tally.problems);
    }
    println!("finished in {:.2}s", start.elapsed().as_secs_f64());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(format!("{} exhaustive checks failed", failures.len())))
    }
}
