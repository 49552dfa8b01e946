//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run alone with `cargo test -p pmm-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pmm_core::bounds::{
    laser_bound, omega_s_pattern_bound, sum_inequality_omega, sum_inequality_rate_bound, LaserInput, RateCertificate,
    TightWitness,
};
use pmm_core::capacity::{
    dual_certificate_check, feasibility_slack, marginal_entropies, membership, min_slack, prefix_weights,
    sum_rate_max, support_function, vertex_rates, KPattern, MembershipResult, RateVector, SolverConfig,
};
use pmm_core::fixtures;
use pmm_core::info::{binary_entropy, enumerate_types, Distribution, DEFAULT_TYPE_CAP};
use pmm_core::pattern::{MapTriple, Pattern};
use pmm_core::sim::{best_typed_failure_bound, simulate, SimConfig};
use pmm_core::tensor::{EpsPoly, SparseTensor, DEFAULT_RETRY_BUDGET, DEFAULT_SAMPLE_MAX};

/// Success-rate floor at n = 4; see docs/calibration.md.
const CALIBRATED_FLOOR: f64 = 0.95;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, format!("took {:.3}s, limit {limit}s", elapsed.as_secs_f64()))
}

fn ex() -> KPattern {
    KPattern::try_from(&fixtures::lambda_ex()).unwrap()
}

fn rate(r: &[f64]) -> RateVector {
    RateVector::new(r.to_vec()).unwrap()
}

fn example_bound() -> Outcome {
    let start = Instant::now();
    let r = omega_s_pattern_bound(&fixtures::lambda_ex(), 5).map_err(|e| e.to_string())?;
    within(start.elapsed(), 0.1)?;
    ensure((r.value - 2.694789).abs() <= 1e-4, format!("value {}", r.value))?;
    Ok(format!("value {:.6}", r.value))
}

fn strassen_bound() -> Outcome {
    let start = Instant::now();
    let r = sum_inequality_omega(&[8], 7.0).map_err(|e| e.to_string())?;
    within(start.elapsed(), 0.1)?;
    ensure((r.value - 7f64.log2()).abs() <= 1e-6, format!("value {}", r.value))?;
    Ok(format!("value {:.9}", r.value))
}

fn border_verification() -> Outcome {
    let start = Instant::now();
    let target = SparseTensor::from_pattern(&fixtures::lambda_ex());
    let decomp = fixtures::example_border();
    let ok = decomp.verify(&target, 3).map_err(|e| e.to_string())?;
    ensure(ok, "decomposition does not verify")?;
    let mut mutant = decomp.clone();
    let term = &mut mutant.terms_mut()[0];
    for coeff in term.a.iter_mut() {
        *coeff = EpsPoly::new(coeff.coeffs().iter().map(|c| -c).collect()).unwrap();
    }
    let mutant_ok = mutant.verify(&target, 3).map_err(|e| e.to_string())?;
    ensure(!mutant_ok, "sign-flipped mutant verifies")?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("{} terms, order 3; mutant rejected", decomp.len()))
}

fn capacity_accept_reject() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst = f64::INFINITY;
    for r in [[1.0, 1.0, 0.5], [1.0, 0.5, 1.0], [0.5, 1.0, 1.0]] {
        match membership(&ex(), &rate(&r), &cfg).map_err(|e| e.to_string())? {
            MembershipResult::Accept { witness, .. } => {
                let s = min_slack(&feasibility_slack(&ex(), &witness, &rate(&r)).unwrap());
                ensure(s >= -1e-4, format!("{r:?}: witness slack {s}"))?;
                worst = worst.min(s);
            }
            other => return Err(format!("{r:?}: {:?}", other.verdict())),
        }
    }
    let bcrl = KPattern::try_from(&fixtures::lambda_bcrl()).unwrap();
    let gap = match membership(&bcrl, &rate(&[1.0, 1.0, 0.5]), &cfg).map_err(|e| e.to_string())? {
        MembershipResult::Reject { gap, direction, .. } => {
            ensure(gap >= 2.0 - 3f64.log2() - 1e-4, format!("gap {gap} along {direction:?}"))?;
            gap
        }
        other => return Err(format!("BCRL: {:?}", other.verdict())),
    };
    within(start.elapsed(), 30.0)?;
    Ok(format!("min witness slack {worst:.2e}; BCRL gap {gap:.6}; {:.2}s", start.elapsed().as_secs_f64()))
}

fn vertex_consistency() -> Outcome {
    let vs = vertex_rates(&ex(), &ex().uniform()).map_err(|e| e.to_string())?;
    let ijk = vs.iter().find(|v| v.ordering == [0, 1, 2]).ok_or("missing ordering (I,J,K)")?;
    let want = [1.0, 0.918296, 0.666667];
    for (a, b) in ijk.rate.as_slice().iter().zip(want) {
        ensure((a - b).abs() <= 1e-6, format!("vertex {:?}", ijk.rate.as_slice()))?;
    }
    let cfg = SolverConfig::default();
    for v in &vs {
        ensure((v.rate.sum() - 6f64.log2()).abs() <= 1e-9, format!("sum {}", v.rate.sum()))?;
        let m = membership(&ex(), &v.rate, &cfg).map_err(|e| e.to_string())?;
        ensure(m.is_accept(), format!("vertex {:?}: {:?}", v.ordering, m.verdict()))?;
    }
    Ok(format!("{} vertices accepted", vs.len()))
}

fn remark_region() -> Outcome {
    let pat = fixtures::remark_binary();
    let (s, _) = sum_rate_max(&pat);
    ensure((s - 3f64.log2()).abs() <= 1e-6, format!("sum rate {s}"))?;
    let r = rate(&[2.0 / 3.0, binary_entropy(2.0 / 3.0)]);
    let m = membership(&pat, &r, &SolverConfig::default()).map_err(|e| e.to_string())?;
    ensure(m.is_accept(), format!("{:?}", m.verdict()))?;
    Ok(format!("sum rate {s:.9}; (2/3, h(2/3)) accepted"))
}

fn simulation_vs_bound() -> Outcome {
    let start = Instant::now();
    let r = rate(&[0.25; 3]);
    let mut notes = Vec::new();
    for n in [3, 4, 5] {
        let report = simulate(&fixtures::lambda_ex(), &SimConfig::new(n, r.clone(), 200)).map_err(|e| e.to_string())?;
        let (_, bound) = best_typed_failure_bound(&fixtures::lambda_ex(), n, &r).map_err(|e| e.to_string())?;
        let slack = 3.0 * report.std_error;
        ensure(
            report.failure_rate <= bound.union_exact + slack,
            format!("n={n}: failure {} > bound {} + {slack}", report.failure_rate, bound.union_exact),
        )?;
        if n == 4 {
            ensure(
                report.success_rate() >= CALIBRATED_FLOOR,
                format!("n=4 success {} below floor {CALIBRATED_FLOOR}", report.success_rate()),
            )?;
        }
        notes.push(format!("n={n} fail {:.3} bound {:.3}", report.failure_rate, bound.union_exact));
    }
    within(start.elapsed(), 60.0)?;
    Ok(notes.join("; "))
}

fn type_machinery() -> Outcome {
    let mut checked = 0usize;
    for m in 1..=4usize {
        for n in 1..=8u64 {
            let types = enumerate_types(m, n, DEFAULT_TYPE_CAP).map_err(|e| e.to_string())?;
            let mut total = BigUint::from(0u32);
            for t in &types {
                let size = t.type_class_size();
                let h = t.to_distribution().map_err(|e| e.to_string())?.entropy();
                let upper = (n as f64 * h).exp2();
                let lower = upper * (n as f64 + 1.0).powi(-(m as i32));
                let s = size.to_f64().unwrap();
                ensure(lower <= s * (1.0 + 1e-12) && s <= upper * (1.0 + 1e-12), format!("m={m} n={n} {:?}", t.counts()))?;
                total += size;
                checked += 1;
            }
            ensure(total == BigUint::from(m).pow(n as u32), format!("m={m} n={n}: sizes sum to {total}"))?;
        }
    }
    Ok(format!("{checked} types"))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (SparseTensor, MapTriple) {
    let dims = [rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3)];
    let mut entries = Vec::new();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                if rng.gen_bool(0.5) {
                    let mut c: i64 = rng.gen_range(-5..=4);
                    if c >= 0 {
                        c += 1;
                    }
                    entries.push(([i, j, k], BigRational::from_integer(c.into())));
                }
            }
        }
    }
    if entries.is_empty() {
        entries.push(([0, 0, 0], BigRational::from_integer(1.into())));
    }
    let tensor = SparseTensor::from_entries(dims, entries).unwrap();
    let targets = [rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3)];
    let maps: Vec<Vec<usize>> = (0..3).map(|a| (0..dims[a]).map(|_| rng.gen_range(0..targets[a])).collect()).collect();
    let [f, g, h]: [Vec<usize>; 3] = maps.try_into().unwrap();
    (tensor, MapTriple::new(f, g, h, targets).unwrap())
}

fn support_transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut attempts = 0usize;
    let instances = 100;
    for idx in 0..instances {
        let (tensor, map) = random_instance(&mut rng);
        let out = tensor
            .support_transfer(&map, DEFAULT_SAMPLE_MAX, DEFAULT_RETRY_BUDGET, idx)
            .map_err(|e| format!("instance {idx}: {e}"))?;
        let expected = tensor.support().direct_image(&map).unwrap();
        ensure(out.tensor.support() == expected, format!("instance {idx}: support differs"))?;
        attempts += out.attempts;
    }
    let mean = attempts as f64 / instances as f64;
    ensure(mean <= 1.1, format!("mean attempts {mean}"))?;
    Ok(format!("mean attempts {mean:.2}"))
}

fn random_direction(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.gen::<f64>()).collect()
}

fn random_distribution(rng: &mut ChaCha8Rng, pattern: &KPattern) -> Distribution {
    let w: Vec<f64> = (0..pattern.len()).map(|_| if rng.gen_bool(0.8) { rng.gen::<f64>() } else { 0.0 }).collect();
    let w = if w.iter().all(|&x| x == 0.0) { vec![1.0; pattern.len()] } else { w };
    Distribution::from_weights(pattern.tuples().to_vec(), &w).unwrap()
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let patterns = [ex(), KPattern::try_from(&fixtures::lambda_bcrl()).unwrap()];
    let cfg = SolverConfig { multistarts: 8, ..SolverConfig::default() };
    let mut worst_gap: f64 = 0.0;
    for i in 0..50 {
        let pattern = &patterns[i % 2];
        let t = random_direction(&mut rng, 3);
        let h = support_function(pattern, &t, &cfg).map_err(|e| e.to_string())?;
        let check = dual_certificate_check(pattern, &t, &h.witness, 1e-9).map_err(|e| e.to_string())?;
        ensure(check.passed, format!("direction {t:?}: {check:?}"))?;
        let gap = (h.upper_bound - check.dual_objective).max(check.dual_objective - h.value).abs();
        ensure(gap <= 1e-5, format!("direction {t:?}: gap {gap}"))?;
        worst_gap = worst_gap.max(gap);
    }
    for i in 0..1000 {
        let pattern = &patterns[i % 2];
        let p = random_distribution(&mut rng, pattern);
        let t = random_direction(&mut rng, 3);
        let dual: f64 = {
            let h = marginal_entropies(&p);
            prefix_weights(&t).iter().map(|&(mask, u)| u * h[mask as usize - 1]).sum()
        };
        // Any feasible rate at P: shrink a random convex combination of vertices.
        let vs = vertex_rates(pattern, &p).unwrap();
        let w: Vec<f64> = vs.iter().map(|_| rng.gen::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let shrink = rng.gen::<f64>();
        let mut r = vec![0.0; 3];
        for (v, wi) in vs.iter().zip(&w) {
            for (ra, va) in r.iter_mut().zip(v.rate.as_slice()) {
                *ra += shrink * wi / total * va;
            }
        }
        ensure(min_slack(&feasibility_slack(pattern, &p, &rate(&r)).unwrap()) >= -1e-9, "mixed vertex infeasible")?;
        let primal: f64 = t.iter().zip(&r).map(|(a, b)| a * b).sum();
        ensure(primal <= dual + 1e-9, format!("weak duality violated: {primal} > {dual}"))?;
    }
    Ok(format!("worst gap {worst_gap:.2e}; 1000 weak-duality pairs"))
}

fn laser_sum_coincidence() -> Outcome {
    let cfg = SolverConfig { multistarts: 8, ..SolverConfig::default() };
    let ex = fixtures::lambda_ex();
    let r1 = RateCertificate::certify(&ex, &rate(&[1.0, 1.0, 0.5]), &cfg).map_err(|e| e.to_string())?;
    let r2 = RateCertificate::certify(&ex, &rate(&[0.5, 1.0, 1.0]), &cfg).map_err(|e| e.to_string())?;
    let q = vec![0.5, 0.5];
    let rank = 12.0;
    let laser = laser_bound(
        &LaserInput {
            support: Pattern::new([2, 2, 2], [[0, 0, 0], [1, 1, 1]]).unwrap(),
            q: q.clone(),
            blocks: vec![r1.clone(), r2.clone()],
            rank,
            witness: TightWitness { u: vec![0, 1], v: vec![0, 1], w: vec![0, -2] },
        },
        1e-4,
    )
    .map_err(|e| e.to_string())?;
    let sum = sum_inequality_rate_bound(&q, rank, &[r1, r2], 1e-4).map_err(|e| e.to_string())?;
    ensure((laser.value - sum.value).abs() <= 1e-6, format!("laser {} vs sum {}", laser.value, sum.value))?;
    Ok(format!("both {:.9}", laser.value))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("example pattern bound", example_bound),
        ("Strassen sum-inequality bound", strassen_bound),
        ("border decomposition verification", border_verification),
        ("capacity accept/reject", capacity_accept_reject),
        ("vertex consistency", vertex_consistency),
        ("two-factor region", remark_region),
        ("simulation vs typed bound", simulation_vs_bound),
        ("type machinery", type_machinery),
        ("support transfer", support_transfer),
        ("LP duality", duality),
        ("laser/sum coincidence", laser_sum_coincidence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
