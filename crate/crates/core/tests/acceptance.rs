//! Acceptance suite. Runs every criterion in sequence, prints one PASS/FAIL
//! line each, and exits non-zero if any failed.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctv_core::denoise::project_dual;
use ctv_core::phantom::{phantom, shaded_phantom};
use ctv_core::prox::gradient_check;
use ctv_core::retrieval::{add_phase_noise, AmplitudeFidelity};
use ctv_core::*;

const WAVELENGTH: f64 = 500e-9;
const DISTANCE: f64 = 5e-3;
const PITCH: f64 = 5e-6;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn variants(alpha: f64) -> [TvVariant; 4] {
    [
        TvVariant::Type1Isotropic,
        TvVariant::Type1Anisotropic,
        TvVariant::Type2Isotropic { alpha },
        TvVariant::Type2Anisotropic { alpha },
    ]
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

fn adjointness() -> Outcome {
    let sizes = [(1, 1), (1, 7), (6, 1), (5, 4), (8, 8), (33, 17)];
    let mut rng = SeededRng::new(1);
    let (mut worst_l, mut worst_a, mut count) = (0.0_f64, 0.0_f64, 0);
    for &(m, n) in &sizes {
        // a fine pitch puts part of the spectrum beyond the evanescent cut
        let props = [
            Propagator::new(PropagatorConfig::new(WAVELENGTH, DISTANCE, PITCH, m, n)).unwrap(),
            Propagator::new(PropagatorConfig::new(WAVELENGTH, 2e-6, 0.3e-6, m, n)).unwrap(),
        ];
        for i in 0..20 {
            let x = rng.normal_field(m, n);
            let q = rng.normal_dual(m, n);
            let lx = forward_diff(&x);
            let ltq = adjoint_diff(&q);
            let scale = (lx.norm() * q.norm()).max(x.norm() * ltq.norm());
            worst_l = worst_l.max(rel(lx.dot(&q), x.dot(&ltq), scale));

            let w = rng.normal_field(m, n);
            let prop = &props[i % 2];
            let ax = prop.propagate(&x);
            let aw = prop.adjoint(&w);
            let scale = (ax.norm() * w.norm()).max(x.norm() * aw.norm());
            worst_a = worst_a.max(rel(ax.dot(&w), x.dot(&aw), scale));
            count += 1;
        }
    }
    Outcome::new(
        worst_l <= 1e-10 && worst_a <= 1e-10,
        format!("{count} instances, worst relative error L {worst_l:.2e}, A {worst_a:.2e}"),
    )
}

fn gradient_oracle() -> Outcome {
    let mut rng = SeededRng::new(2);
    let mut worst = 0.0_f64;
    for distance in [0.0, DISTANCE] {
        let prop = Propagator::new(PropagatorConfig::new(WAVELENGTH, distance, PITCH, 8, 8)).unwrap();
        for _ in 0..20 {
            let x = rng.normal_field(8, 8);
            let y = prop.forward_intensity(&rng.normal_field(8, 8));
            let f = AmplitudeFidelity {
                propagator: &prop,
                intensity: &y,
            };
            worst = worst.max(gradient_check(&f, &x, 10, 1e-6, &mut rng).unwrap());
        }
    }
    Outcome::new(worst <= 1e-5, format!("40 instances, worst relative error {worst:.2e}"))
}

/// Plain projected gradient on the dual, run until the step stalls.
fn gp_oracle(b: &ComplexField, lambda: f64, variant: TvVariant, set: ConstraintSet) -> (ComplexField, usize) {
    let (m, n) = b.dim();
    let step = 1.0 / (16.0 * lambda * lambda);
    let mut q = DualField::zeros(m, n);
    let mut iters = 0;
    while iters < 1_000_000 {
        let g = dual_gradient(&q, b, lambda, set);
        let next = project_dual(&q.add_scaled(-step, &g), variant);
        let moved = next.sub(&q).norm();
        q = next;
        iters += 1;
        if moved < 1e-12 {
            break;
        }
    }
    let w = b.sub(&adjoint_diff(&q).scale(lambda));
    (project_constraint(&w, set), iters)
}

fn prox_oracle() -> Outcome {
    let mut worst = 0.0_f64;
    let mut max_iters = 0;
    let mut cases = 0;
    for seed in 0..10u64 {
        let mut rng = SeededRng::new(100 + seed);
        let b = rng.normal_field(4, 4).scale(0.8);
        let lambda = rng.uniform_in(0.05, 0.3);
        let alpha = rng.uniform_in(0.2, 0.8);
        for variant in variants(alpha) {
            for set in [ConstraintSet::FullSpace, ConstraintSet::UnitDisk] {
                let fgp = denoise(&b, &DenoiseParams::new(lambda, variant, set, 2000)).unwrap();
                let (oracle, iters) = gp_oracle(&b, lambda, variant, set);
                worst = worst.max(fgp.x.distance(&oracle));
                max_iters = max_iters.max(iters);
                cases += 1;
            }
        }
    }
    Outcome::new(
        worst <= 1e-6,
        format!("{cases} cases, worst ‖Δx‖ {worst:.2e}, longest oracle run {max_iters} iterations"),
    )
}

fn projections() -> Outcome {
    let mut rng = SeededRng::new(4);
    let (mut idem, mut slack, mut opt_gap) = (0.0_f64, 0.0_f64, f64::NEG_INFINITY);
    for variant in variants(0.3) {
        for _ in 0..10 {
            let q = rng.normal_dual(2, 2).map(|v| 2.0 * v);
            let p = project_dual(&q, variant);
            idem = idem.max(project_dual(&p, variant).sub(&p).norm());
            slack = slack.max(dual_violation(&p, variant));
            let dist = q.sub(&p).norm();
            for i in 0..1000 {
                // alternate between projected Gaussians and box samples shrunk into S
                let raw = if i % 2 == 0 {
                    rng.normal_dual(2, 2).map(|v| 1.5 * v)
                } else {
                    rng.normal_dual(2, 2).map(f64::tanh)
                };
                let s = project_dual(&raw, variant);
                opt_gap = opt_gap.max(dist - q.sub(&s).norm());
            }
        }
    }
    Outcome::new(
        idem <= 1e-12 && slack <= 1e-12 && opt_gap <= 1e-12,
        format!("idempotence {idem:.1e}, feasibility slack {slack:.1e}, worst optimality gap {opt_gap:.1e}"),
    )
}

fn lipschitz() -> Outcome {
    let mut rng = SeededRng::new(5);
    let mut worst_ratio = 0.0_f64;
    for lambda in [0.05, 0.2, 1.0] {
        for i in 0..100 {
            let (m, n) = (2 + rng.index(8), 2 + rng.index(8));
            let b = rng.normal_field(m, n);
            let set = if i % 2 == 0 {
                ConstraintSet::UnitDisk
            } else {
                ConstraintSet::FullSpace
            };
            let q1 = rng.normal_dual(m, n);
            let q2 = rng.normal_dual(m, n).map(|v| 0.1 * v).add_scaled(1.0, &q1);
            let num = dual_gradient(&q1, &b, lambda, set)
                .sub(&dual_gradient(&q2, &b, lambda, set))
                .norm();
            let ratio = num / q1.sub(&q2).norm() / (16.0 * lambda * lambda);
            worst_ratio = worst_ratio.max(ratio);
        }
    }
    Outcome::new(
        worst_ratio <= 1.0 + 1e-12,
        format!("300 pairs, largest ratio / 16λ² = {worst_ratio:.4}"),
    )
}

fn denoising_demo() -> Outcome {
    let phase = phantom(256, 256).mapv(|p| PI * p);
    let clean = ComplexField::unit_phase(&phase).unwrap();
    let noisy = add_phase_noise(&clean, PI / 10.0, &mut SeededRng::new(6));
    let before = phase_rmse(&noisy, &clean).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for (variant, lambda) in [
        (TvVariant::Type1Isotropic, 0.2),
        (TvVariant::Type1Anisotropic, 0.2),
        (TvVariant::Type2Isotropic { alpha: 0.5 }, 0.3),
        (TvVariant::Type2Anisotropic { alpha: 0.5 }, 0.3),
    ] {
        let out = denoise(&noisy, &DenoiseParams::new(lambda, variant, ConstraintSet::UnitDisk, 50)).unwrap();
        let after = phase_rmse(&out.x, &clean).unwrap();
        let reduction = 1.0 - after / before;
        passed &= reduction >= 0.25;
        parts.push(format!("{variant} {after:.4} (-{:.1}%)", 100.0 * reduction));
    }
    Outcome::new(passed, format!("noisy RMSE {before:.4}; {}", parts.join(", ")))
}

const BENCH_SIZE: usize = 128;
const BENCH_SEEDS: u64 = 3;
const BENCH_TAU: f64 = 3e-3;
const SWEEP: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

/// Final phase RMSE and objective trace of one reconstruction.
struct Run {
    rmse: f64,
    objective: Vec<f64>,
}

/// Every reconstruction criteria 7-9 need, each computed once.
struct Benchmark {
    ctv: Vec<Run>,
    tv: Vec<Run>,
    ip: Vec<Run>,
    ctv_ista: Vec<Run>,
    tv_ista: Vec<Run>,
    /// Seed-0 CTV runs over [`SWEEP`].
    sweep: Vec<Run>,
}

fn benchmark() -> Benchmark {
    let truth = ComplexField::unit_phase(&shaded_phantom(BENCH_SIZE, BENCH_SIZE).mapv(|p| PI * p)).unwrap();
    let propagator =
        Propagator::new(PropagatorConfig::new(WAVELENGTH, DISTANCE, PITCH, BENCH_SIZE, BENCH_SIZE)).unwrap();
    let measurements: Vec<Intensity> = (0..BENCH_SEEDS)
        .map(|seed| {
            simulate_measurement(&truth, &propagator, NoiseModel::IntensityGaussian { level: 0.1 }, seed).unwrap()
        })
        .collect();
    let run = |seed: usize, tau: f64, constraint: ConstraintSet, algorithm: Algorithm| {
        let params = RetrievalParams {
            tau,
            constraint,
            algorithm,
            outer_iters: 150,
            seed: seed as u64,
            ..Default::default()
        };
        let report = retrieve(&measurements[seed], &propagator, &params, Some(&truth)).unwrap();
        Run {
            rmse: *report.rmse_trace.last().unwrap(),
            objective: report.objective_trace,
        }
    };
    let per_seed = |constraint, algorithm| -> Vec<Run> {
        (0..BENCH_SEEDS as usize)
            .map(|seed| run(seed, BENCH_TAU, constraint, algorithm))
            .collect()
    };
    let ctv = per_seed(ConstraintSet::UnitDisk, Algorithm::Fista);
    let sweep = SWEEP
        .iter()
        .map(|&tau| {
            if tau == BENCH_TAU {
                Run {
                    rmse: ctv[0].rmse,
                    objective: ctv[0].objective.clone(),
                }
            } else {
                run(0, tau, ConstraintSet::UnitDisk, Algorithm::Fista)
            }
        })
        .collect();
    Benchmark {
        tv: per_seed(ConstraintSet::FullSpace, Algorithm::Fista),
        ip: per_seed(ConstraintSet::UnitDisk, Algorithm::Ip),
        ctv_ista: per_seed(ConstraintSet::UnitDisk, Algorithm::Ista),
        tv_ista: per_seed(ConstraintSet::FullSpace, Algorithm::Ista),
        ctv,
        sweep,
    }
}

fn mean_rmse(runs: &[Run]) -> f64 {
    runs.iter().map(|r| r.rmse).sum::<f64>() / runs.len() as f64
}

fn retrieval_ordering(bench: &Benchmark) -> Outcome {
    let (c, t, i) = (mean_rmse(&bench.ctv), mean_rmse(&bench.tv), mean_rmse(&bench.ip));
    Outcome::new(
        c <= t && t <= i,
        format!("mean final phase RMSE over {BENCH_SEEDS} seeds: CTV {c:.4}, TV {t:.4}, IP {i:.4}"),
    )
}

/// First iteration `k ≥ 1` whose objective reaches `target`, or the trace
/// length when it never does.
fn first_hit(trace: &[f64], target: f64) -> usize {
    trace
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, &v)| v <= target)
        .map_or(trace.len(), |(k, _)| k)
}

fn fista_vs_ista(bench: &Benchmark) -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, fista, ista) in [("CTV", &bench.ctv, &bench.ctv_ista), ("TV", &bench.tv, &bench.tv_ista)] {
        let hits: Vec<f64> = fista
            .iter()
            .zip(ista)
            .map(|(f, i)| first_hit(&f.objective, *i.objective.last().unwrap()) as f64)
            .collect();
        let m = hits.iter().sum::<f64>() / hits.len() as f64;
        passed &= m < 150.0;
        parts.push(format!("{label} {m:.1}"));
    }
    Outcome::new(
        passed,
        format!("mean iteration where FISTA reaches ISTA's 150-iteration objective: {}", parts.join(", ")),
    )
}

fn tau_tradeoff(bench: &Benchmark) -> Outcome {
    let rmse: Vec<f64> = bench.sweep.iter().map(|r| r.rmse).collect();
    let interior = rmse[1..rmse.len() - 1].iter().cloned().fold(f64::INFINITY, f64::min);
    let passed = interior < rmse[0] && interior < rmse[rmse.len() - 1];
    let listing: Vec<String> = SWEEP.iter().zip(&rmse).map(|(t, r)| format!("τ={t:e}: {r:.4}")).collect();
    Outcome::new(passed, listing.join(", "))
}

fn propagation_round_trip() -> Outcome {
    let mut rng = SeededRng::new(10);
    let (mut round, mut identity, mut energy) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (wavelength, distance, pitch) in [(WAVELENGTH, DISTANCE, PITCH), (WAVELENGTH, 2e-6, 0.3e-6)] {
        for &(m, n) in &[(64, 48), (33, 17), (1, 9)] {
            let cfg = PropagatorConfig::new(wavelength, distance, pitch, m, n);
            let fwd = Propagator::new(cfg).unwrap();
            let back = Propagator::new(cfg.with_distance(-distance)).unwrap();
            let band = Propagator::new(cfg.with_distance(0.0)).unwrap();
            for _ in 0..5 {
                let raw = rng.normal_field(m, n);
                // zero-distance propagation keeps exactly the propagating band
                let x = band.propagate(&raw);
                let xn = x.norm();
                round = round.max(back.propagate(&fwd.propagate(&x)).distance(&x) / xn);
                energy = energy.max((fwd.propagate(&x).norm() - xn).abs() / xn);
                if pitch == PITCH {
                    identity = identity.max(band.propagate(&raw).distance(&raw) / raw.norm());
                }
            }
        }
    }
    Outcome::new(
        round <= 1e-10 && identity <= 1e-12 && energy <= 1e-10,
        format!("round trip {round:.1e}, d=0 identity {identity:.1e}, energy {energy:.1e}"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, bool)> = Vec::new();
    let mut run = |id: usize, name: &'static str, limit: Option<u64>, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let limit = limit.map(Duration::from_secs);
        let in_time = limit.is_none_or(|l| elapsed < l);
        let outcome = Outcome::new(outcome.passed && in_time, outcome.detail);
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s{}]",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs())),
        );
        results.push((id, outcome.passed));
    };

    run(1, "adjointness", Some(5), &adjointness);
    run(2, "gradient oracle", Some(10), &gradient_oracle);
    run(3, "prox oracle equivalence", Some(120), &prox_oracle);
    run(4, "dual-set projections", None, &projections);
    run(5, "Lipschitz bound", None, &lipschitz);
    run(6, "denoising demo", Some(30), &denoising_demo);
    let start = Instant::now();
    let bench = benchmark();
    println!("retrieval benchmark: 19 reconstructions at {BENCH_SIZE}×{BENCH_SIZE} in {:.1}s", start.elapsed().as_secs_f64());
    run(7, "retrieval ordering", None, &|| retrieval_ordering(&bench));
    run(8, "FISTA vs ISTA", None, &|| fista_vs_ista(&bench));
    run(9, "tau tradeoff", None, &|| tau_tradeoff(&bench));
    let benchmark_time = start.elapsed();
    run(10, "propagation round trip", None, &propagation_round_trip);

    let bench_ok = benchmark_time < Duration::from_secs(600);
    println!(
        "retrieval benchmark (criteria 7-9) total {:.1}s / limit 600s: {}",
        benchmark_time.as_secs_f64(),
        if bench_ok { "PASS" } else { "FAIL" }
    );
    let failed: Vec<usize> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    if failed.is_empty() && bench_ok {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
