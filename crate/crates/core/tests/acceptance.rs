//! Acceptance suite: one PASS/FAIL/SKIP/INFO line per criterion, non-zero
//! exit if any criterion fails.
//!
//! The optional DOCKSTRING check runs when `EXACTFP_DOCKSTRING` points at the
//! benchmark table (tab-separated, with a `smiles` column and target
//! columns; `EXACTFP_DOCKSTRING_TARGET` selects the column, default `ESR2`).

mod common;

use std::time::{Duration, Instant};

use common::{corpus, dense_mll, dense_posterior, to_dmatrix, Corpus};
use exactfp::analysis::{collision_study, regression_metrics, sample_pairs};
use exactfp::bo::{expected_improvement, run_bo, BoConfig, Direction};
use exactfp::data::{load_dataset, subsample, subsample_with};
use exactfp::gp::{default_hyperparams, log_marginal_likelihood, mll_gradient, GpModel};
use exactfp::kernel::{dense_parts, sparse_parts, tanimoto_gram, tanimoto_matrix};
use exactfp::linalg::SymmetricEigen;
use exactfp::rng::{trial_seed, ExperimentRng};
use exactfp::{fold, morgan_sparse, sortslice_encode, sortslice_fit, Fingerprint, GpHyperparams};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
    Info(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(elapsed: Duration, limit_s: u64) -> bool {
    elapsed <= Duration::from_secs(limit_s)
}

fn folding_never_lowers_similarity(c: &Corpus) -> Outcome {
    let start = Instant::now();
    let dims = [32usize, 512, 1024, 2048, 4096];
    let pairs = sample_pairs(c.fps.len(), 1000, &mut ExperimentRng::new(1)).unwrap();
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for &(i, j) in &pairs {
        let (a, b) = (&c.fps[i], &c.fps[j]);
        let exact = sparse_parts(a, b);
        for &d in &dims {
            let folded = dense_parts(&fold(a, d), &fold(b, d)).unwrap();
            // Exact rational comparison plus the floating-point form.
            let exact_ok = (folded.min_sum as u128) * (exact.max_sum as u128)
                >= (exact.min_sum as u128) * (folded.max_sum as u128);
            let gap = folded.value::<f64>() - exact.value::<f64>();
            worst = worst.min(gap);
            if !exact_ok || gap < -1e-12 {
                violations += 1;
            }
        }
    }
    let t = start.elapsed();
    check(
        violations == 0 && within(t, 30),
        format!("{} pairs x {} dims, violations {violations}, min gap {worst:.3e}, {t:.2?}", pairs.len(), dims.len()),
    )
}

fn dockstring_collision_trend() -> Outcome {
    let Ok(path) = std::env::var("EXACTFP_DOCKSTRING") else {
        return Outcome::Skip("set EXACTFP_DOCKSTRING to the benchmark table to run".into());
    };
    let target = std::env::var("EXACTFP_DOCKSTRING_TARGET").unwrap_or_else(|_| "ESR2".into());
    let start = Instant::now();
    let ds = match load_dataset(&path, &target) {
        Ok(ds) => ds,
        Err(e) => return Outcome::Fail(format!("cannot load {path}: {e}")),
    };
    let fps: Vec<_> = ds.records.iter().map(|r| morgan_sparse(&r.mol, 2).unwrap()).collect();
    let pairs = sample_pairs(fps.len(), 10_000, &mut ExperimentRng::new(0)).unwrap();
    let refs: Vec<_> = pairs.iter().map(|&(i, j)| (&fps[i], &fps[j])).collect();
    let dims = [512, 1024, 2048, 4096];
    let reports = collision_study(&refs, &dims).unwrap();
    let t = start.elapsed();
    let exact = reports[0].mean_exact_tanimoto;
    let over: Vec<f64> = reports.iter().map(|r| r.mean_overestimation).collect();
    let decreasing = over.windows(2).all(|w| w[1] < w[0]);
    check(
        (exact - 0.167).abs() <= 0.02 && decreasing && (0.015..=0.047).contains(&over[0]) && within(t, 300),
        format!("mean exact {exact:.4}, overestimation {over:.4?}, {t:.2?}"),
    )
}

fn gp_matches_dense_reference(c: &Corpus) -> Outcome {
    let start = Instant::now();
    let y_all = c.values();
    let mut rng = ExperimentRng::new(3);
    let (mut mll_err, mut post_err, mut grad_rel) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..25 {
        let n = 5 + rng.below(16) as usize;
        let all: Vec<usize> = (0..c.fps.len()).collect();
        let idx = subsample_with(&all, n + 5, &mut rng).unwrap();
        let (train, query) = idx.split_at(n);
        let xs = c.sparse(train);
        let qs = c.sparse(query);
        let y: Vec<f64> = train.iter().map(|&i| y_all[i]).collect();
        let h = GpHyperparams::new(0.2 + 2.8 * rng.unit_f64(), 0.01 + 0.5 * rng.unit_f64(), 2.0 * rng.unit_f64() - 1.0);

        let t = to_dmatrix(&tanimoto_gram::<f64>(&xs).unwrap());
        let ours = log_marginal_likelihood(&xs, &y, &h).unwrap();
        mll_err = mll_err.max((ours - dense_mll(&t, &y, &h)).abs());

        let model = GpModel::fit(xs.clone(), y.clone(), h).unwrap();
        let pred = model.predict(&qs, false).unwrap();
        let cross = to_dmatrix(&tanimoto_matrix::<f64>(&qs, &xs).unwrap());
        let selfsim = vec![1.0; qs.len()];
        let (means, vars) = dense_posterior(&t, &cross, &selfsim, &y, &h);
        for k in 0..qs.len() {
            post_err = post_err.max((pred.means[k] - means[k]).abs());
            post_err = post_err.max((pred.variances[k] - vars[k].max(0.0)).abs());
        }

        let g = mll_gradient(&xs, &y, &h).unwrap().as_array();
        let theta = [h.amplitude_sq.ln(), h.noise_sq.ln(), h.mean_const];
        let f = |th: [f64; 3]| {
            let hh = GpHyperparams::new(th[0].exp(), th[1].exp(), th[2]);
            log_marginal_likelihood(&xs, &y, &hh).unwrap()
        };
        for k in 0..3 {
            let step = 1e-5;
            let (mut up, mut down) = (theta, theta);
            up[k] += step;
            down[k] -= step;
            let fd = (f(up) - f(down)) / (2.0 * step);
            grad_rel = grad_rel.max((g[k] - fd).abs() / fd.abs().max(1e-12));
        }
    }
    let t = start.elapsed();
    check(
        mll_err <= 1e-8 && post_err <= 1e-8 && grad_rel <= 1e-4 && within(t, 10),
        format!("25 problems: max |dMLL| {mll_err:.2e}, max posterior diff {post_err:.2e}, max gradient rel err {grad_rel:.2e}, {t:.2?}"),
    )
}

fn interpolates_training_targets(c: &Corpus) -> Outcome {
    let idx: Vec<usize> = (0..100).collect();
    let xs = c.sparse(&idx);
    let y: Vec<f64> = idx.iter().map(|&i| c.values()[i]).collect();
    let mut h = default_hyperparams(&y).unwrap();
    h.noise_sq = 1e-4 * h.amplitude_sq;
    let model = GpModel::fit(xs.clone(), y.clone(), h).unwrap();
    let pred = model.predict(&xs, false).unwrap();
    let range = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - y.iter().cloned().fold(f64::INFINITY, f64::min);
    let worst = pred.means.iter().zip(&y).map(|(m, t)| (m - t).abs()).fold(0.0, f64::max);
    check(
        worst <= 1e-4 * range,
        format!("max |mean - y| {worst:.3e} vs tolerance {:.3e} (range {range:.3})", 1e-4 * range),
    )
}

fn gram_is_psd(c: &Corpus) -> Outcome {
    let idx: Vec<usize> = (0..300).collect();
    let gram = tanimoto_gram::<f64>(&c.sparse(&idx)).unwrap();
    let eig = SymmetricEigen::new(&gram.symmetrized()).unwrap();
    let (min, max) = (eig.values[0], *eig.values.last().unwrap());
    check(
        min >= -1e-8 * max,
        format!("eigenvalues in [{min:.3e}, {max:.3e}]"),
    )
}

fn ei_matches_monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut rng = ExperimentRng::new(6);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let direction = if k % 2 == 0 { Direction::Minimize } else { Direction::Maximize };
        let mean = 2.0 * rng.unit_f64() - 1.0;
        let sigma = 0.1 + 0.4 * rng.unit_f64();
        let best = mean + 1.2 * sigma * (2.0 * rng.unit_f64() - 1.0);
        let closed = expected_improvement(mean, sigma * sigma, best, direction).unwrap();
        let draws = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let v = mean + sigma * rng.standard_normal();
            sum += direction.improvement(v, best).max(0.0);
        }
        worst = worst.max((closed - sum / draws as f64).abs());
    }
    let degenerate = expected_improvement(2.0, 0.0, 1.0, Direction::Minimize).unwrap() == 0.0
        && expected_improvement(0.5, 0.0, 1.0, Direction::Minimize).unwrap() == 0.5
        && expected_improvement(1.5, 0.0, 1.0, Direction::Maximize).unwrap() == 0.5;
    let t = start.elapsed();
    check(
        worst <= 1e-3 && degenerate,
        format!("20 triples, max |closed - MC| {worst:.2e}; zero-variance cases exact: {degenerate}; {t:.2?}"),
    )
}

fn exact_beats_folded_regression(c: &Corpus) -> Outcome {
    let start = Instant::now();
    let y_all = c.values();
    let all: Vec<usize> = (0..c.fps.len()).collect();
    let mut wins = 0;
    let mut rows = Vec::new();
    for trial in 0..10 {
        let idx = subsample(&all, 3000, trial_seed(7, trial)).unwrap();
        let (train, test) = idx.split_at(1000);
        let y: Vec<f64> = train.iter().map(|&i| y_all[i]).collect();
        let y_test: Vec<f64> = test.iter().map(|&i| y_all[i]).collect();
        let h = default_hyperparams(&y).unwrap();
        let r2 = |encode: &dyn Fn(usize) -> Fingerprint| {
            let xs: Vec<_> = train.iter().map(|&i| encode(i)).collect();
            let qs: Vec<_> = test.iter().map(|&i| encode(i)).collect();
            let model = GpModel::fit(xs, y.clone(), h).unwrap();
            let pred = model.predict(&qs, false).unwrap();
            regression_metrics(&y_test, &pred.means).unwrap().r2
        };
        let exact = r2(&|i| Fingerprint::Sparse(c.fps[i].clone()));
        let folded = r2(&|i| Fingerprint::Dense(fold(&c.fps[i], 512)));
        if exact >= folded {
            wins += 1;
        }
        rows.push(format!("{exact:.3}/{folded:.3}"));
    }
    let t = start.elapsed();
    check(
        wins >= 8 && within(t, 300),
        format!("exact >= folded-512 in {wins}/10 trials (R2 exact/folded: {}), {t:.2?}", rows.join(" ")),
    )
}

fn bo_smoke(c: &Corpus) -> Outcome {
    let start = Instant::now();
    let all: Vec<usize> = (0..c.fps.len()).collect();
    let pool_idx = subsample(&all, 2000, 8).unwrap();
    let pool = c.sparse(&pool_idx);
    let values: Vec<f64> = pool_idx.iter().map(|&i| c.values()[i]).collect();
    let mut sorted = values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let top1 = sorted[19];
    let mut hits = 0;
    let mut problems = Vec::new();
    let mut aucs = Vec::new();
    for seed in 0..5 {
        let cfg = BoConfig {
            init_size: 100,
            budget: 200,
            init_percentile: 0.8,
            direction: Direction::Minimize,
            refit_hyperparams: false,
            seed,
        };
        let traj = run_bo(&pool, &values, &cfg, None).unwrap();
        if !traj.best_curve.windows(2).all(|w| w[1] <= w[0]) {
            problems.push(format!("seed {seed}: non-monotone"));
        }
        let mut seen: Vec<usize> = traj.initial.iter().copied().chain(traj.acquired.iter().map(|a| a.pool_index)).collect();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != 300 {
            problems.push(format!("seed {seed}: duplicate acquisition"));
        }
        if seed == 0 && run_bo(&pool, &values, &cfg, None).unwrap() != traj {
            problems.push("seed 0: not reproducible".into());
        }
        if *traj.best_curve.last().unwrap() <= top1 {
            hits += 1;
        }
        aucs.push(format!("{:.3}", traj.auc));
    }
    let t = start.elapsed();
    check(
        problems.is_empty() && hits >= 4 && within(t, 300),
        format!(
            "top-1% reached in {hits}/5 seeds, AUC {}, {}{t:.2?}",
            aucs.join(" "),
            if problems.is_empty() { String::new() } else { format!("{problems:?}, ") }
        ),
    )
}

fn sortslice_and_refold(c: &Corpus) -> Outcome {
    let start = Instant::now();
    let all: Vec<usize> = (0..c.fps.len()).collect();
    let idx = subsample(&all, 1000, 10).unwrap();
    let fps: Vec<_> = idx.iter().map(|&i| &c.fps[i]).collect();
    let mut failures = 0;
    for dim in [64, 512, 2048] {
        let vocab = sortslice_fit(fps.iter().copied(), dim, "acceptance sample").unwrap();
        let mut slots: Vec<usize> = vocab.ordered_ids().iter().map(|&id| vocab.slot(id).unwrap()).collect();
        slots.sort_unstable();
        slots.dedup();
        if slots.len() != vocab.dim() {
            failures += 1;
        }
        for fp in &fps {
            let enc = sortslice_encode(fp, &vocab);
            let kept: u64 = fp.entries().iter().filter(|(id, _)| vocab.slot(*id).is_some()).map(|&(_, n)| n as u64).sum();
            let slot_ok = vocab.ordered_ids().iter().enumerate().all(|(s, &id)| enc.counts()[s] == fp.get(id));
            if !slot_ok || enc.total() != kept {
                failures += 1;
            }
        }
    }
    for fp in &fps {
        for (d1, d2) in [(512, 1024), (512, 4096), (1024, 2048), (32, 4096)] {
            if fold(fp, d2).refold(d1) != fold(fp, d1) {
                failures += 1;
            }
        }
    }
    let t = start.elapsed();
    check(failures == 0 && within(t, 30), format!("1000 molecules, {failures} failures, {t:.2?}"))
}

fn main() {
    let start = Instant::now();
    let c = corpus();
    println!("loaded {} fixture molecules in {:.2?}", c.fps.len(), start.elapsed());
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("folding never lowers Tanimoto similarity", Box::new(|| folding_never_lowers_similarity(&c))),
        ("DOCKSTRING collision and overestimation trend", Box::new(dockstring_collision_trend)),
        ("GP matches dense reference and finite differences", Box::new(|| gp_matches_dense_reference(&c))),
        ("interpolation at the noise floor", Box::new(|| interpolates_training_targets(&c))),
        ("Tanimoto Gram is positive semidefinite", Box::new(|| gram_is_psd(&c))),
        ("expected improvement matches Monte Carlo", Box::new(ei_matches_monte_carlo)),
        ("exact fingerprints regress at least as well as folded-512", Box::new(|| exact_beats_folded_regression(&c))),
        ("BO smoke run", Box::new(|| bo_smoke(&c))),
        (
            "full-scale BO AUC values",
            Box::new(|| {
                Outcome::Info(
                    "absolute AUCs need the ~260k-molecule pool, 1000 iterations and 5 trials; \
                     run scripts/full_protocol.sh with the DOCKSTRING table. Not checked here."
                        .into(),
                )
            }),
        ),
        ("Sort&Slice injectivity and refold consistency", Box::new(|| sortslice_and_refold(&c))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
            Outcome::Info(d) => ("INFO", d),
        };
        println!("criterion {:>2} {tag} {name}: {detail}", k + 1);
    }
    println!("acceptance: {failed} failed, total {:.2?}", start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
