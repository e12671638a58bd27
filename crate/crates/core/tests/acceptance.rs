//! End-to-end acceptance checks. Runs as a plain binary (no libtest harness)
//! so each criterion prints exactly one PASS/FAIL line regardless of output
//! capture. Exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use fewshot_core::classifiers::{
    fit_episode, hinge_objective, hinge_subgradient, logistic_gradient, logistic_objective, predict_scores,
    ClassifierKind, ClassifierParams, ScoreMatrix,
};
use fewshot_core::metrics::macro_auroc;
use fewshot_core::runner::{run_experiment, DataSource, ExperimentConfig, ExperimentReport};
use fewshot_core::sampler::{sample_episode, sample_episodes, EpisodeConfig};
use fewshot_core::store::{generate_synthetic, SyntheticSpec};
use fewshot_core::EmbeddingDataset;

type Check = fn() -> Outcome;

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

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("prototype oracle equivalence", prototype_oracle),
        ("auroc pairwise oracle", auroc_oracle),
        ("gradient checks (logistic, svm)", gradient_checks),
        ("separable synthetic sanity", separable_sanity),
        ("k-shot trend", kshot_trend),
        ("augmentation ablation direction", augmentation_ablation),
        ("grid determinism", grid_determinism),
        ("group leakage guard", leakage_guard),
    ];

    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "{status} {name}: {} [{:.1}s]",
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn synthetic_config(spec: SyntheticSpec) -> ExperimentConfig {
    ExperimentConfig {
        data: Some(DataSource::Synthetic(spec)),
        ..Default::default()
    }
}

fn run(config: &ExperimentConfig) -> ExperimentReport {
    run_experiment(config).unwrap_or_else(|e| panic!("{}: {e}", config.name))
}

fn prototype_oracle() -> Outcome {
    let started = Instant::now();
    let mut mismatches = 0;
    let mut queries = 0;
    for trial in 0..100u64 {
        let k_shot = if trial % 2 == 0 { 1 } else { 5 };
        let spec = SyntheticSpec {
            n_classes: 4,
            dim: 16,
            groups_per_class: 30,
            class_center_norm: 3.0,
            noise_sigma: 1.0,
            seed: 1000 + trial,
            ..Default::default()
        };
        let data: EmbeddingDataset = generate_synthetic(&spec).unwrap();
        let config = EpisodeConfig {
            n_way: 2,
            k_shot,
            q_query: 15,
            aug_expand: false,
            seed: trial,
        };
        let episode = sample_episode(&data, &config, trial as usize).unwrap();
        let model = fit_episode(ClassifierKind::Prototype, &ClassifierParams::default(), &episode).unwrap();
        let predicted = predict_scores(&model, &episode.query_vectors())
            .unwrap()
            .predicted_labels();

        let labels = episode.support_labels();
        let expected: Vec<usize> = episode
            .query_vectors()
            .iter()
            .map(|q| {
                let mut best = (f64::INFINITY, 0);
                for class in 0..2 {
                    let members: Vec<&[f64]> = episode
                        .support_vectors()
                        .into_iter()
                        .zip(&labels)
                        .filter(|(_, &l)| l == class)
                        .map(|(v, _)| v)
                        .collect();
                    let mut d2 = 0.0;
                    for j in 0..16 {
                        let mean = members.iter().map(|v| v[j]).sum::<f64>() / members.len() as f64;
                        d2 += (q[j] - mean) * (q[j] - mean);
                    }
                    if d2 < best.0 {
                        best = (d2, class);
                    }
                }
                best.1
            })
            .collect();
        queries += expected.len();
        mismatches += predicted.iter().zip(&expected).filter(|(a, b)| a != b).count();
    }
    let elapsed = started.elapsed();
    Outcome::new(
        mismatches == 0 && elapsed < Duration::from_secs(5),
        format!(
            "{mismatches} mismatches over {queries} queries in 100 episodes, {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn pairwise_auroc(column: &[f64], truth: &[usize], class: usize) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in column.iter().enumerate() {
        if truth[i] != class {
            continue;
        }
        for (j, &sj) in column.iter().enumerate() {
            if truth[j] == class {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auroc_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut tied_sets = 0;
    for set in 0..200 {
        let n_way = rng.random_range(2..=4);
        let n = rng.random_range(2 * n_way..=200);
        let mut truth: Vec<usize> = (0..n)
            .map(|i| if i < n_way { i } else { rng.random_range(0..n_way) })
            .collect();
        for i in (1..n).rev() {
            truth.swap(i, rng.random_range(0..=i));
        }
        // Half the sets draw scores from a coarse grid, forcing many ties.
        let coarse = set % 2 == 0;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n_way)
                    .map(|_| {
                        if coarse {
                            rng.random_range(0..8) as f64 / 4.0
                        } else {
                            rng.sample(StandardNormal)
                        }
                    })
                    .collect()
            })
            .collect();
        let scores = ScoreMatrix::new(n_way, rows).unwrap();
        if coarse {
            tied_sets += 1;
        }
        let fast = macro_auroc(&scores, &truth, n_way).unwrap();
        let oracle = (0..n_way)
            .map(|c| pairwise_auroc(&scores.column(c), &truth, c))
            .sum::<f64>()
            / n_way as f64;
        worst = worst.max((fast - oracle).abs());
    }
    let elapsed = started.elapsed();
    Outcome::new(
        worst <= 1e-12 && elapsed < Duration::from_secs(10),
        format!(
            "max |rank - pairwise| = {worst:.2e} over 200 sets ({tied_sets} tie-heavy), {:.3}s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Largest component-wise relative error between two gradients.
fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

fn central_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            probe[i] = theta[i] + h;
            let up = f(&probe);
            probe[i] = theta[i] - h;
            let down = f(&probe);
            probe[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

struct Instance {
    theta: Vec<f64>,
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    n_way: usize,
    l2: f64,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let dim = rng.random_range(1..=32);
    let n_way = rng.random_range(2..=3);
    let n = rng.random_range(n_way..=12);
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let ys: Vec<usize> = (0..n)
        .map(|i| if i < n_way { i } else { rng.random_range(0..n_way) })
        .collect();
    let theta: Vec<f64> = (0..n_way * (dim + 1))
        .map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let l2 = rng.random_range(0.0..1.0);
    Instance {
        theta,
        xs,
        ys,
        n_way,
        l2,
    }
}

/// Distance of the closest hinge margin to its kink.
fn hinge_kink_distance(inst: &Instance) -> f64 {
    let dim = inst.xs[0].len();
    let mut closest = f64::INFINITY;
    for c in 0..inst.n_way {
        let w = &inst.theta[c * dim..(c + 1) * dim];
        let b = inst.theta[inst.n_way * dim + c];
        for (x, &y) in inst.xs.iter().zip(&inst.ys) {
            let sign = if y == c { 1.0 } else { -1.0 };
            let margin = sign * (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b);
            closest = closest.min((1.0 - margin).abs());
        }
    }
    closest
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    let mut worst_lr: f64 = 0.0;
    let mut worst_svm: f64 = 0.0;
    for _ in 0..50 {
        let inst = random_instance(&mut rng);
        let (_, analytic) = logistic_gradient(&inst.theta, &inst.xs, &inst.ys, inst.n_way, inst.l2);
        let numeric = central_difference(
            |t| logistic_objective(t, &inst.xs, &inst.ys, inst.n_way, inst.l2),
            &inst.theta,
            h,
        );
        worst_lr = worst_lr.max(relative_error(&analytic, &numeric));
    }
    let mut redrawn = 0;
    let mut checked = 0;
    while checked < 50 {
        let inst = random_instance(&mut rng);
        // The hinge is differentiable only away from margin == 1; a probe
        // step must not cross a kink.
        if hinge_kink_distance(&inst) < 1e-3 {
            redrawn += 1;
            continue;
        }
        checked += 1;
        let (_, analytic) = hinge_subgradient(&inst.theta, &inst.xs, &inst.ys, inst.n_way, inst.l2);
        let numeric = central_difference(
            |t| hinge_objective(t, &inst.xs, &inst.ys, inst.n_way, inst.l2),
            &inst.theta,
            h,
        );
        worst_svm = worst_svm.max(relative_error(&analytic, &numeric));
    }
    Outcome::new(
        worst_lr < 1e-4 && worst_svm < 1e-4,
        format!(
            "max relative error logistic {worst_lr:.2e}, svm {worst_svm:.2e} over 50 instances each ({redrawn} svm draws near a kink redrawn)"
        ),
    )
}

fn separable_sanity() -> Outcome {
    let mut base = synthetic_config(SyntheticSpec {
        n_classes: 5,
        dim: 16,
        groups_per_class: 40,
        class_center_norm: 10.0,
        noise_sigma: 0.1,
        seed: 21,
        ..Default::default()
    });
    base.episode.k_shot = 5;
    base.episodes = 500;
    base.episode.seed = 5;
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in ClassifierKind::ALL {
        let mut c = base.clone();
        c.classifier = kind;
        let r = run(&c);
        passed &= r.accuracy.mean >= 0.99 && r.auroc.mean >= 0.995;
        parts.push(format!(
            "{} acc {:.4} auroc {:.4}",
            kind.name(),
            r.accuracy.mean,
            r.auroc.mean
        ));
    }
    Outcome::new(passed, parts.join("; "))
}

fn kshot_trend() -> Outcome {
    let mut base = synthetic_config(SyntheticSpec {
        n_classes: 5,
        dim: 16,
        groups_per_class: 60,
        class_center_norm: 1.0,
        noise_sigma: 0.5,
        seed: 31,
        ..Default::default()
    });
    base.episodes = 1000;
    base.episode.seed = 8;
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [ClassifierKind::Prototype, ClassifierKind::Logistic] {
        let acc: Vec<f64> = [1, 3, 5]
            .iter()
            .map(|&k| {
                let mut c = base.clone();
                c.classifier = kind;
                c.episode.k_shot = k;
                run(&c).accuracy.mean
            })
            .collect();
        passed &= acc[1] - acc[0] > 0.01 && acc[2] - acc[1] > 0.01;
        if kind == ClassifierKind::Prototype {
            passed &= (0.60..=0.80).contains(&acc[0]);
        }
        parts.push(format!(
            "{} 1/3/5-shot {:.4} / {:.4} / {:.4}",
            kind.name(),
            acc[0],
            acc[1],
            acc[2]
        ));
    }
    Outcome::new(passed, parts.join("; "))
}

fn augmentation_ablation() -> Outcome {
    // Augmented copies jitter mostly along the high-variance nuisance
    // coordinates, like image augmentations that vary pose or color but not
    // class identity.
    let mut base = synthetic_config(SyntheticSpec {
        n_classes: 5,
        dim: 16,
        groups_per_class: 60,
        class_center_norm: 1.0,
        noise_sigma: 0.1,
        seed: 41,
        aug_copies: 5,
        aug_sigma: 0.2,
        nuisance_dims: 8,
        nuisance_scale: 8.0,
    });
    base.classifier = ClassifierKind::Logistic;
    base.episode.k_shot = 1;
    base.episodes = 1000;
    base.episode.seed = 9;
    let plain = run(&base).accuracy.mean;
    let mut aug = base.clone();
    aug.episode.aug_expand = true;
    let augmented = run(&aug).accuracy.mean;
    let mut full = aug.clone();
    full.preprocess.l2_normalize = true;
    let normalized = run(&full).accuracy.mean;
    let gain = (augmented - plain) * 100.0;
    Outcome::new(
        gain > 0.5,
        format!("LR {plain:.4}, LR + Aug {augmented:.4} (gain {gain:+.2} pp); LR + L2-Norm + Aug {normalized:.4}"),
    )
}

fn write_grid_file(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("grid.toml");
    std::fs::write(
        &path,
        "episodes = 200\nseed = 13\n\
         synthetic.n_classes = 5\nsynthetic.dim = 16\nsynthetic.groups_per_class = 30\n\
         synthetic.class_center_norm = 2.0\nsynthetic.noise_sigma = 1.0\nsynthetic.seed = 3\n\
         synthetic.aug_copies = 5\nsynthetic.aug_sigma = 0.3\n",
    )
    .unwrap();
    path
}

fn strip_clock(report: &str) -> String {
    report
        .lines()
        .filter(|line| !line.trim_start().starts_with("\"wall_clock_seconds\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn grid_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_grid_file(dir.path());
    let outputs: Vec<String> = (0..2)
        .map(|_| {
            let run = Command::new(env!("CARGO_BIN_EXE_fewshot"))
                .arg("grid")
                .arg("--config")
                .arg(&grid)
                .output()
                .expect("running fewshot grid");
            assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
            String::from_utf8(run.stdout).unwrap()
        })
        .collect();
    let clock_lines = outputs[0].lines().count() - strip_clock(&outputs[0]).lines().count();
    let identical = strip_clock(&outputs[0]) == strip_clock(&outputs[1]);
    Outcome::new(
        identical && clock_lines > 0,
        format!(
            "two CLI grid runs ({} bytes, {clock_lines} wall-clock lines masked) {}",
            outputs[0].len(),
            if identical { "byte-identical" } else { "differ" }
        ),
    )
}

fn leakage_guard() -> Outcome {
    let data: EmbeddingDataset = generate_synthetic(&SyntheticSpec {
        n_classes: 6,
        dim: 4,
        groups_per_class: 25,
        seed: 51,
        aug_copies: 5,
        aug_sigma: 0.1,
        ..Default::default()
    })
    .unwrap();
    let mut intersections = 0;
    let mut multi_record_support = 0;
    for (i, aug_expand) in [false, true].into_iter().enumerate() {
        let config = EpisodeConfig {
            n_way: 3,
            k_shot: 5,
            q_query: 15,
            aug_expand,
            seed: 60 + i as u64,
        };
        for episode in sample_episodes(&data, &config, 5000).unwrap() {
            let support: HashSet<u64> = episode.support.iter().map(|r| r.group_id).collect();
            if episode.support.len() > support.len() {
                multi_record_support += 1;
            }
            intersections += episode.query.iter().filter(|r| support.contains(&r.group_id)).count();
        }
    }
    Outcome::new(
        intersections == 0 && multi_record_support == 5000,
        format!(
            "{intersections} support/query group intersections over 10000 episodes ({multi_record_support} with expanded multi-record groups)"
        ),
    )
}
