//! Acceptance suite. Each criterion prints one PASS/FAIL line; run with
//! `cargo test --test acceptance -- --nocapture` to see them all.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use brdad::cli::{convergence_study, mix_seed, ConvergenceConfig};
use brdad::{
    auc, auto_bag_count, brute_force_knn, fit, fit_with_partition, gamma_table, load_csv,
    make_partition, sample_huber, sample_mixture, srm_core, BagCount, Dataset, FitOptions,
    HuberSpec, LoadedCsv, MixtureSpec, NeighborIndex,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use support::{
    brute_pipeline_scores, dense_weights, objective, oracle_minimize, random_simplex,
};

fn criterion_srm_solver() -> String {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut max_gap = 0.0f64;
    for instance in 0..200 {
        let s = rng.random_range(5..=200);
        let mut r = Vec::with_capacity(s);
        let mut acc = 0.0;
        for _ in 0..s {
            let z: f64 = rng.sample(StandardNormal);
            acc += z.abs();
            r.push(acc);
        }
        let solved = srm_core(&r).expect("solver");

        let kkt: f64 = r[..solved.cutoff()]
            .iter()
            .map(|ri| (solved.mu() - ri).powi(2))
            .sum();
        assert!(
            (kkt - 1.0).abs() <= 1e-8,
            "instance {instance}: KKT residual {}",
            (kkt - 1.0).abs()
        );

        let w = dense_weights(&solved, s);
        let obj_alg = objective(1.0, &r, &w);
        let (_, obj_oracle) = oracle_minimize(1.0, &r, 100_000);
        let gap = (obj_alg - obj_oracle).abs();
        assert!(
            gap <= 1e-6,
            "instance {instance}: objective gap {gap} (alg {obj_alg}, oracle {obj_oracle})"
        );
        max_gap = max_gap.max(gap);

        for _ in 0..50 {
            let sample = random_simplex(&mut rng, s);
            assert!(
                objective(1.0, &r, &sample) >= obj_alg - 1e-12,
                "instance {instance}: random simplex point beats the solver"
            );
        }
    }

    // Unscaled route: profile (1,2,3,4) with B = 1, regularizer sqrt(ln 5).
    let profile = brdad::AvgDistanceProfile::new(vec![1.0, 2.0, 3.0, 4.0]).expect("profile");
    let solved = brdad::solve_srm(&profile, 1).expect("solve");
    let reg = 5.0f64.ln().sqrt();
    let r = [1.0, 2.0, 3.0, 4.0];
    let obj_alg = objective(reg, &r, &dense_weights(&solved, 4));
    let (_, obj_oracle) = oracle_minimize(reg, &r, 100_000);
    assert!((obj_alg - obj_oracle).abs() <= 1e-6);
    for _ in 0..10_000 {
        let sample = random_simplex(&mut rng, 4);
        assert!(objective(reg, &r, &sample) >= obj_alg - 1e-12);
    }

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "suite took {elapsed:.1}s, budget 10s");
    format!(" (max objective gap {max_gap:.2e}, {elapsed:.1}s)")
}

fn gautschi_bounds(s: usize, d: usize, i: usize) -> (f64, f64) {
    let inv_d = 1.0 / d as f64;
    let lower = ((i as f64 + inv_d - 1.0) / (s as f64 + 1.0 + inv_d)).powf(inv_d);
    let upper = ((i as f64 + inv_d) / (s as f64 + inv_d)).powf(inv_d);
    (lower, upper)
}

fn criterion_gamma() -> String {
    let start = Instant::now();
    let mut worst_rel = 0.0f64;
    for s in [1usize, 2, 3, 5, 10, 37, 100, 1000, 10_000] {
        let table = gamma_table(s, 1);
        for i in 1..=s {
            let exact = i as f64 / (s + 1) as f64;
            let rel = (table.value(i) - exact).abs() / exact;
            assert!(rel <= 1e-12, "d=1 s={s} i={i}: relative error {rel:.2e}");
            worst_rel = worst_rel.max(rel);
        }
    }
    for d in [2usize, 3, 5, 10] {
        for s in [10usize, 1_000, 100_000] {
            let table = gamma_table(s, d);
            for i in 1..=s {
                let (lo, hi) = gautschi_bounds(s, d, i);
                let g = table.value(i);
                assert!(
                    lo < g && g < hi,
                    "d={d} s={s} i={i}: {g} outside ({lo}, {hi})"
                );
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "suite took {elapsed:.1}s, budget 5s");
    format!(" (worst d=1 relative error {worst_rel:.2e}, {elapsed:.1}s)")
}

fn criterion_neighbor_oracle() -> String {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for instance in 0..500 {
        let s = rng.random_range(2..=500);
        let d = rng.random_range(1..=10usize);
        let on_grid = instance % 3 == 0;
        let coord = |rng: &mut ChaCha8Rng| {
            if on_grid {
                rng.random_range(0..5) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        };
        let points: Vec<f64> = (0..s * d).map(|_| coord(&mut rng)).collect();
        let index = NeighborIndex::build(&points, d).expect("build");
        for _ in 0..3 {
            let query: Vec<f64> = (0..d).map(|_| coord(&mut rng)).collect();
            let exclude = rng.random_bool(0.5).then(|| rng.random_range(0..s));
            let effective = s - usize::from(exclude.is_some());
            if effective == 0 {
                continue;
            }
            let k = rng.random_range(1..=effective);
            let fast = index.knn(&query, k, exclude).expect("tree query");
            let slow = brute_force_knn(&points, d, &query, k, exclude).expect("scan");
            assert_eq!(fast, slow, "instance {instance} (k={k}, exclude={exclude:?})");
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "suite took {elapsed:.1}s, budget 30s");
    format!(" ({elapsed:.1}s)")
}

fn criterion_pipeline_oracle() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for instance in 0..20 {
        let n = rng.random_range(40..=400);
        let d = rng.random_range(1..=5usize);
        let bags = rng.random_range(1..=3usize);
        let scale = instance % 2 == 0;
        let spec = if instance % 2 == 0 {
            MixtureSpec::standard_normal(d)
        } else {
            MixtureSpec::two_blobs(d)
        };
        let data = sample_mixture(&spec, n, mix_seed(5, &[instance])).expect("sample");
        let partition = make_partition(n, bags, mix_seed(6, &[instance])).expect("partition");
        let model = fit_with_partition(&data, &partition, scale).expect("fit");
        let via_index = model.score(&data).expect("score");
        let via_scan = brute_pipeline_scores(&data, &partition, scale);
        for (i, (a, b)) in via_index.scores().iter().zip(&via_scan).enumerate() {
            let diff = (a - b).abs();
            assert!(
                diff <= 1e-10,
                "instance {instance} row {i}: index {a} vs scan {b}"
            );
            worst = worst.max(diff);
        }
    }
    format!(" (worst |index - scan| {worst:.2e})")
}

fn criterion_convergence_trends() -> String {
    let start = Instant::now();
    let cfg = ConvergenceConfig {
        sizes: vec![300, 1000, 3000, 5000, 10_000],
        reps: 20,
        eval_points: 10_000,
        seed: 2024,
        spec: MixtureSpec::standard_normal(1),
    };
    let summaries = convergence_study(&cfg).expect("study");
    for pair in summaries.windows(2) {
        assert!(
            pair[1].median_sr < pair[0].median_sr,
            "median SR not strictly decreasing: {} (n={}) -> {} (n={})",
            pair[0].median_sr,
            pair[0].n,
            pair[1].median_sr,
            pair[1].n
        );
        assert!(
            pair[1].median_mae < pair[0].median_mae,
            "median MAE not strictly decreasing: {} (n={}) -> {} (n={})",
            pair[0].median_mae,
            pair[0].n,
            pair[1].median_mae,
            pair[1].n
        );
    }
    let ratio_at = |n: usize| {
        summaries
            .iter()
            .find(|s| s.n == n)
            .map(|s| s.sr_mae_ratio)
            .expect("size present")
    };
    let base = ratio_at(3000);
    for n in [5000usize, 10_000] {
        let rel = (ratio_at(n) - base).abs() / base;
        assert!(
            rel <= 0.25,
            "SR/MAE ratio at n={n} is {:.3}, deviates {rel:.2} from {base:.3} at n=3000",
            ratio_at(n)
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    let detail: Vec<String> = summaries
        .iter()
        .map(|s| format!("n={}: SR {:.3} MAE {:.3}", s.n, s.median_sr, s.median_mae))
        .collect();
    format!(" ({}; {elapsed:.0}s)", detail.join(", "))
}

fn criterion_huber_detection() -> String {
    let spec = HuberSpec::new(0.05, MixtureSpec::two_blobs(2)).expect("spec");
    let n = 2000;
    let mut aucs = Vec::new();
    for seed in 0..10u64 {
        let ld = sample_huber(&spec, n, mix_seed(77, &[seed])).expect("sample");
        let fit_seed = mix_seed(78, &[seed]);
        let model = fit(
            &ld.data,
            &FitOptions {
                bags: BagCount::Fixed(1),
                seed: fit_seed,
                scale: true,
            },
        )
        .expect("fit");
        let scores = model.score(&ld.data).expect("score");

        let partition = make_partition(n, 1, fit_seed).expect("partition");
        let oracle = brute_pipeline_scores(&ld.data, &partition, true);
        for (i, (a, b)) in scores.scores().iter().zip(&oracle).enumerate() {
            assert!(
                (a - b).abs() <= 1e-10,
                "seed {seed} row {i}: index {a} vs scan {b}"
            );
        }
        aucs.push(auc(scores.scores(), &ld.labels).expect("auc"));
    }
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    assert!(mean >= 0.90, "mean AUC {mean:.4} below 0.90 ({aucs:?})");
    format!(" (mean AUC {mean:.4} over 10 seeds)")
}

fn breastw_path() -> Option<std::path::PathBuf> {
    if let Ok(p) = std::env::var("BRDAD_BREASTW") {
        let p = std::path::PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    let local = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/breastw.csv");
    local.exists().then_some(local)
}

fn criterion_breastw() -> String {
    let Some(path) = breastw_path() else {
        return " — SKIP (data/breastw.csv not present)".to_string();
    };
    let ld = match load_csv(&path, Some("y")).expect("load breastw") {
        LoadedCsv::Labeled(ld) => ld,
        LoadedCsv::Plain(_) => unreachable!(),
    };
    assert_eq!(ld.data.n(), 683, "breastw should have 683 rows");
    assert_eq!(ld.data.d(), 9, "breastw should have 9 features");
    let mut total = 0.0;
    for seed in 0..10u64 {
        let model = fit(
            &ld.data,
            &FitOptions {
                bags: BagCount::Auto,
                seed: mix_seed(31, &[seed]),
                scale: true,
            },
        )
        .expect("fit");
        let scores = model.score(&ld.data).expect("score");
        total += auc(scores.scores(), &ld.labels).expect("auc");
    }
    let mean = total / 10.0;
    assert!(
        (mean - 0.9883).abs() <= 0.02,
        "breastw mean AUC {mean:.4} outside 0.9883 ± 0.02"
    );
    format!(" (mean AUC {mean:.4})")
}

fn criterion_b_rule() -> String {
    assert_eq!(auto_bag_count(5000), 1);
    assert_eq!(auto_bag_count(20_000), 5);
    assert_eq!(auto_bag_count(60_000), 10);
    String::new()
}

fn speedup_run(data: &Dataset) -> f64 {
    let start = Instant::now();
    let model = fit(
        data,
        &FitOptions {
            bags: BagCount::Fixed(10),
            seed: 3,
            scale: true,
        },
    )
    .expect("fit");
    let scores = model.score(data).expect("score");
    assert!(scores.scores().iter().all(|s| s.is_finite()));
    start.elapsed().as_secs_f64()
}

fn criterion_parallel_speedup() -> String {
    let data = sample_mixture(&MixtureSpec::two_blobs(3), 100_000, 12).expect("sample");
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool");
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .expect("pool");
    let t1 = single.install(|| speedup_run(&data));
    let t8 = multi.install(|| speedup_run(&data));
    let ratio = t8 / t1;
    let cores = std::thread::available_parallelism()
        .map(|c| c.get())
        .unwrap_or(1);
    let verdict = if ratio <= 0.5 { "met" } else { "NOT met" };
    assert!(
        ratio <= 0.5,
        "8-thread/1-thread wall ratio {ratio:.2} ({t1:.1}s -> {t8:.1}s, {cores} cores): bound {verdict}"
    );
    format!(" (wall ratio {ratio:.2}, {t1:.1}s -> {t8:.1}s, {cores} cores)")
}

#[test]
fn acceptance() {
    let criteria: &[(&str, bool, fn() -> String)] = &[
        ("srm-solver-correctness", false, criterion_srm_solver),
        ("gamma-coefficients", false, criterion_gamma),
        ("neighbor-oracle", false, criterion_neighbor_oracle),
        ("pipeline-oracle", false, criterion_pipeline_oracle),
        ("sr-mae-trends", false, criterion_convergence_trends),
        ("huber-detection-quality", false, criterion_huber_detection),
        ("breastw-mean-auc", false, criterion_breastw),
        ("bag-count-rule", false, criterion_b_rule),
        ("parallel-speedup", true, criterion_parallel_speedup),
    ];
    let mut failures = Vec::new();
    println!();
    for (name, informational, run) in criteria {
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(detail) => println!("PASS  {name}{detail}"),
            Err(payload) => {
                let msg = payload
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".to_string());
                if *informational {
                    println!("INFO  {name} (logged, not fatal): {msg}");
                } else {
                    println!("FAIL  {name}: {msg}");
                    failures.push(*name);
                }
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
