//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Runs without the libtest harness so criteria execute sequentially and the
//! wall-clock limits are measured on an otherwise idle process.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use otdepth::breakdown::{self, BreakdownEstimate, HarnessOptions};
use otdepth::depth::{cloud_depths, halfspace_count, lower_tukey_depth, max_depth, tukey_depth};
use otdepth::geometry::in_general_position;
use otdepth::reference::{generate, sweep_instance};
use otdepth::transport::{
    brute_force_assignment, check_cyclical_monotone, check_pairwise_monotone, solve_assignment, CostMatrix,
};
use otdepth::{rng, DepthMode, DepthValue, Point, PointCloud, RefKind, RefSpec};
use rand::Rng;

const COST_RTOL: f64 = 1e-9;
const GAP_RTOL: f64 = 1e-8;
const GRID_DIRECTIONS: usize = 100_000;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome { passed, detail: detail.into() }
    }
}

/// Solver-output audits accumulated over criteria 1 to 5.
#[derive(Default)]
struct Audit {
    solves: usize,
    monotone_violations: usize,
}

impl Audit {
    fn absorb(&mut self, est: &BreakdownEstimate) {
        self.solves += est.instances_solved;
        self.monotone_violations += est.monotone_violations;
    }
}

fn dv(k: usize, n: usize) -> DepthValue {
    DepthValue::new(k, n).unwrap()
}

fn line5() -> PointCloud {
    PointCloud::from_scalars(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap()
}

fn diamond() -> PointCloud {
    PointCloud::from_rows([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap()
}

fn exact(x: &Point, c: &PointCloud) -> DepthValue {
    tukey_depth(x, c, DepthMode::Exact).unwrap().depth
}

fn exact_lower(x: &Point, c: &PointCloud) -> DepthValue {
    lower_tukey_depth(x, c, DepthMode::Exact).unwrap().depth
}

fn random_instance(seed: u64, n: usize, dim: usize) -> (PointCloud, PointCloud) {
    sweep_instance(seed, n, dim).unwrap()
}

fn timed(limit: Duration, start: Instant) -> (bool, String) {
    let elapsed = start.elapsed();
    (elapsed < limit, format!("{:.2}s < {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn criterion_1(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let c = line5();
    let td = exact(&c[2], &c);
    let est = breakdown::estimate_bp_map(&c, &c, 2, HarnessOptions::default()).unwrap();
    audit.absorb(&est);
    let (fast, time) = timed(Duration::from_secs(1), start);
    let bp = est.bp_estimate;
    Outcome::new(td == dv(3, 5) && bp == Some(dv(3, 5)) && fast, format!("TD(3)={td} bp={} {time}", show(bp)))
}

fn criterion_2(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let c = diamond();
    let origin = &c[0];
    let td = exact(origin, &c);
    let lower = exact_lower(origin, &c);
    let est = breakdown::estimate_bp_map(&c, &c, 0, HarnessOptions::default()).unwrap();
    audit.absorb(&est);

    // The escape instance: (0,0) and (1,0) replaced by (k,0) and (k+1,0).
    let k = 1e4;
    let mut z = c.clone();
    z.replace(0, Point::new(vec![k, 0.0]).unwrap()).unwrap();
    z.replace(1, Point::new(vec![k + 1.0, 0.0]).unwrap()).unwrap();
    let solved = solve_assignment(&c, &z).unwrap();
    let oracle = brute_force_assignment(&c, &z).unwrap();
    let in_cluster = |j: usize| j == 0 || j == 1;
    let cluster_ok = in_cluster(solved.sigma[0]) && in_cluster(oracle.sigma[0]) && solved.sigma == oracle.sigma;
    audit.solves += 1;
    audit.monotone_violations += check_pairwise_monotone(&solved, &c, &z).len();

    let (fast, time) = timed(Duration::from_secs(1), start);
    let bp = est.bp_estimate;
    Outcome::new(
        td == dv(3, 5) && lower == dv(2, 5) && bp == Some(dv(2, 5)) && cluster_ok && fast,
        format!(
            "TD={td} TD-={lower} bp={} origin->{:?} (oracle {:?}) {time}",
            show(bp),
            z[solved.sigma[0]].coords(),
            z[oracle.sigma[0]].coords()
        ),
    )
}

fn criterion_3(audit: &mut Audit, cone_violations: &mut usize, contaminated: &mut usize) -> Outcome {
    let start = Instant::now();
    let (mut total, mut inside_lower, mut inside_gp, mut missing) = (0, 0, 0, 0);
    let mut first_failure = None;
    for seed in 0..50u64 {
        let n = if seed < 25 { 10 } else { 20 };
        let (reference, target) = random_instance(seed, n, 2);
        assert!(in_general_position(&reference));
        let options = HarnessOptions { seed, ..HarnessOptions::default() };
        let mut harness = breakdown::Harness::new(&reference, &target, options).unwrap();
        for i in 0..n {
            let est = harness.estimate_bp_map(i).unwrap();
            audit.absorb(&est);
            *cone_violations += est.cone_violations;
            *contaminated += est.instances_solved;
            total += 1;
            let td = exact(&reference[i], &reference);
            let lower = exact_lower(&reference[i], &reference);
            match est.bp_estimate {
                Some(bp) => {
                    let a = lower <= bp && bp <= td;
                    let b = td.minus_fraction(1) <= bp && bp <= td;
                    inside_lower += a as usize;
                    inside_gp += b as usize;
                    if !(a && b) && first_failure.is_none() {
                        first_failure = Some(format!("seed {seed} i {i}: bp={bp} TD-={lower} TD={td}"));
                    }
                }
                None => missing += 1,
            }
        }
    }
    let (fast, time) = timed(Duration::from_secs(300), start);
    let mut detail = format!(
        "{inside_lower}/{total} in [TD-, TD], {inside_gp}/{total} in [TD-1/n, TD], {missing} without divergence {time}"
    );
    if let Some(f) = first_failure {
        detail.push_str(&format!("; first miss {f}"));
    }
    Outcome::new(inside_lower == total && inside_gp == total && fast, detail)
}

fn criterion_4(audit: &mut Audit) -> Outcome {
    let start = Instant::now();
    let mut instances = vec![diamond()];
    instances.extend((0..10u64).map(|s| random_instance(1000 + s, 10, 2).0));
    let (mut checked, mut within) = (0, 0);
    let mut misses = Vec::new();
    for (idx, reference) in instances.iter().enumerate() {
        let target = if idx == 0 { reference.clone() } else { random_instance(1000 + idx as u64 - 1, 10, 2).1 };
        let options = HarnessOptions { seed: idx as u64, ..HarnessOptions::default() };
        let mut h = breakdown::Harness::new(reference, &target, options).unwrap();
        let contour = h.estimate_bp_contour(dv(1, 5)).unwrap();
        let median = h.estimate_bp_median().unwrap();
        for (what, est) in [("contour", &contour), ("median", &median)] {
            audit.absorb(est);
            checked += 1;
            if est.within_bracket {
                within += 1;
            } else {
                misses.push(format!("#{idx} {what}: {est}"));
            }
        }
    }
    let (fast, time) = timed(Duration::from_secs(120), start);
    let mut detail = format!("{within}/{checked} verdicts within bracket {time}");
    if !misses.is_empty() {
        detail.push_str(&format!("; {}", misses.join("; ")));
    }
    Outcome::new(within == checked && fast, detail)
}

fn criterion_5(audit: &mut Audit) -> Outcome {
    let mut gen = rng::stream(5, 0);
    let (mut cost_ok, mut gap_ok) = (0, 0);
    let mut worst_cost: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    for t in 0..200u64 {
        let n = gen.random_range(1..=8);
        let dim = gen.random_range(1..=3);
        let kind = if t % 2 == 0 { RefKind::SphericalUniform } else { RefKind::Gaussian };
        let reference = generate(&RefSpec::new(kind, n, dim, rng::split(t, 1))).unwrap();
        let target = generate(&RefSpec::new(RefKind::Gaussian, n, dim, rng::split(t, 2))).unwrap();
        let m = solve_assignment(&reference, &target).unwrap();
        let oracle = brute_force_assignment(&reference, &target).unwrap();
        let rel = (m.total_cost - oracle.total_cost).abs() / oracle.total_cost.abs().max(1.0);
        let gap = m.duality_gap().unwrap_or(f64::INFINITY);
        worst_cost = worst_cost.max(rel);
        worst_gap = worst_gap.max(gap);
        cost_ok += (rel <= COST_RTOL) as usize;
        gap_ok += (gap <= GAP_RTOL) as usize;
        let cm = CostMatrix::squared_euclidean(&reference, &target).unwrap();
        assert!(m.certificate_residuals(&cm).is_some());
        audit.solves += 1;
        audit.monotone_violations += check_pairwise_monotone(&m, &reference, &target).len();
    }
    Outcome::new(
        cost_ok == 200 && gap_ok == 200,
        format!("cost {cost_ok}/200 (worst rel {worst_cost:.1e}), gap {gap_ok}/200 (worst {worst_gap:.1e})"),
    )
}

fn criterion_6(audit: &Audit) -> Outcome {
    let mut cyclic_ok = 0;
    let mut cycles = 0;
    for seed in 0..50u64 {
        let (reference, target) = random_instance(6000 + seed, 20, 2);
        let m = solve_assignment(&reference, &target).unwrap();
        let report = check_cyclical_monotone(&m, &reference, &target, 3).unwrap();
        cycles += report.cycles_checked;
        cyclic_ok += report.is_monotone() as usize;
    }
    Outcome::new(
        audit.monotone_violations == 0 && cyclic_ok == 50,
        format!(
            "pairwise: {} violations over {} solves; cyclical L=3: {cyclic_ok}/50 ({cycles} cycles)",
            audit.monotone_violations, audit.solves
        ),
    )
}

fn criterion_7(cone_violations: usize, contaminated: usize) -> Outcome {
    Outcome::new(
        cone_violations == 0 && contaminated > 0,
        format!("{cone_violations} violations over {contaminated} contaminated instances, 3 angles x 16 axes"),
    )
}

/// Minimum closed-halfspace count over `m` equally spaced directions with a
/// seeded sub-grid phase, so no grid direction lands exactly on a boundary.
fn grid_depth_count(x: &Point, cloud: &PointCloud, m: usize, phase: f64) -> usize {
    (0..m)
        .map(|k| {
            let a = TAU * (k as f64 + phase) / m as f64;
            halfspace_count(&[a.cos(), a.sin()], x, cloud)
        })
        .min()
        .unwrap()
}

fn criterion_8() -> Outcome {
    let mut gen = rng::stream(8, 0);
    let mut equal = 0;
    let mut misses = Vec::new();
    for t in 0..100u64 {
        let n = gen.random_range(1..=30);
        let cloud = generate(&RefSpec::new(RefKind::Gaussian, n, 2, rng::split(t, 3))).unwrap();
        let x = if t % 4 == 0 {
            cloud[gen.random_range(0..n)].clone()
        } else {
            Point::new(vec![gen.random_range(-1.5..1.5), gen.random_range(-1.5..1.5)]).unwrap()
        };
        let exact_count = exact(&x, &cloud).count();
        let phase = gen.random_range(0.1..0.9);
        let grid = grid_depth_count(&x, &cloud, GRID_DIRECTIONS, phase);
        if grid == exact_count {
            equal += 1;
        } else {
            misses.push(format!("#{t}: exact {exact_count} grid {grid}"));
        }
    }
    let mut detail = format!("{equal}/100 exact counts equal the {GRID_DIRECTIONS}-direction grid");
    if !misses.is_empty() {
        detail.push_str(&format!("; {}", misses.join(", ")));
    }
    Outcome::new(equal == 100, detail)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let cloud = generate(&RefSpec::new(RefKind::SphericalUniform, 500, 2, 9)).unwrap();
    let (deepest, at) = max_depth(&cloud).unwrap();
    let (fast, time) = timed(Duration::from_secs(30), start);
    Outcome::new(
        deepest.value() >= 0.4 && fast,
        format!("max depth {deepest} = {:.3} at {} point(s) {time}", deepest.value(), at.len()),
    )
}

fn show(bp: Option<DepthValue>) -> String {
    bp.map_or_else(|| "none".into(), |b| b.to_string())
}

fn main() -> ExitCode {
    let mut audit = Audit::default();
    let (mut cone, mut contaminated) = (0, 0);
    let results = [
        ("quantile-1d sharpness", criterion_1(&mut audit)),
        ("escape example sharpness", criterion_2(&mut audit)),
        ("map bracket sweep", criterion_3(&mut audit, &mut cone, &mut contaminated)),
        ("contour and median brackets", criterion_4(&mut audit)),
        ("solver oracle equivalence", criterion_5(&mut audit)),
        ("monotonicity certificates", criterion_6(&audit)),
        ("cone property audit", criterion_7(cone, contaminated)),
        ("exact depth vs direction grid", criterion_8()),
        ("reference cloud depth", criterion_9()),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        failed += !outcome.passed as usize;
        println!("{status} [{}] {name}: {}", k + 1, outcome.detail);
    }
    // Sanity: depths used above agree with the cloud-wide routine.
    debug_assert_eq!(cloud_depths(&line5()).unwrap()[2], dv(3, 5));
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
