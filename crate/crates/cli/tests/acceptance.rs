//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! Criteria 7 and 8 need the SNAP Bitcoin files `soc-sign-bitcoinalpha.csv`
//! and `soc-sign-bitcoinotc.csv` (gunzipped) in `$SDGCL_DATA_DIR` or in
//! `data/` at the workspace root.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdgcl_cli::commands::{seed_dir, train_one, DatasetSource, RunMetrics, Variant, METRICS, SUMMARY};
use sdgcl_cli::{cmd_train, RunConfig};
use sdgcl_core::augment::{make_views, PerturbationConfig};
use sdgcl_core::encoder::{init_params, ModelDims, TensorKind};
use sdgcl_core::eval::{auc, f1_suite};
use sdgcl_core::graph::{graph_from_edges, write_edge_records, EdgeRecord, Sign, SignedDiGraph};
use sdgcl_core::spectral::{
    chebyshev_apply, degree_matrix, dense_eigendecomposition, hermitian_adjacency, laplacian_normalized,
    laplacian_unnormalized, phase_entry, renormalized_propagation, symmetrize_adjacency, PhaseSpec,
};
use sdgcl_core::synthetic::{latent_trust_graph, random_signed_digraph};
use sdgcl_core::training::{finite_diff_check, inter_view_loss, intra_view_loss, LossSettings, StepInput};

type Check = Result<String, String>;

fn within(limit: Duration, started: Instant) -> Check {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {took:.1?}, budget {limit:?}"))
    } else {
        Ok(format!("{took:.2?}"))
    }
}

fn phase_grid() -> [f64; 5] {
    [0.0, 0.1 * PI, 0.2 * PI, 0.3 * PI, 0.4 * PI]
}

fn random_case(rng: &mut ChaCha8Rng) -> (SignedDiGraph, f64) {
    let n = rng.random_range(2..=50);
    let density = rng.random_range(0.05..=0.3);
    let ratio = rng.random_range(0.5..=0.95);
    let q = phase_grid()[rng.random_range(0..5)];
    (random_signed_digraph(n, density, ratio, rng), q)
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut min_u, mut min_n, mut max_n) = (f64::MAX, f64::MAX, f64::MIN);
    for case in 0..200 {
        let (g, q) = random_case(&mut rng);
        let spec = PhaseSpec::new(q);
        let h = hermitian_adjacency(&g, &spec).to_dense();
        if h != h.adjoint() {
            return Err(format!("case {case}: H is not conjugate-symmetric"));
        }
        for l in dense_eigendecomposition(&laplacian_unnormalized(&g, &spec)).map_err(|e| e.to_string())?.eigenvalues {
            min_u = min_u.min(l);
        }
        for l in dense_eigendecomposition(&laplacian_normalized(&g, &spec)).map_err(|e| e.to_string())?.eigenvalues {
            min_n = min_n.min(l);
            max_n = max_n.max(l);
        }
    }
    if min_u < -1e-8 {
        return Err(format!("L_U eigenvalue {min_u:e}"));
    }
    if min_n < -1e-8 || max_n > 2.0 + 1e-8 {
        return Err(format!("L_N eigenvalues in [{min_n:e}, {max_n}]"));
    }
    let time = within(Duration::from_secs(30), started)?;
    Ok(format!("200 graphs; min λ(L_U) {min_u:.2e}, λ(L_N) in [{min_n:.2e}, {max_n:.6}]; {time}"))
}

fn criterion_2() -> Check {
    use Sign::*;
    let started = Instant::now();
    let e = EdgeRecord::new;
    let configs = [
        vec![],
        vec![e(0, 1, Positive)],
        vec![e(0, 1, Negative)],
        vec![e(1, 0, Positive)],
        vec![e(1, 0, Negative)],
        vec![e(0, 1, Positive), e(1, 0, Positive)],
        vec![e(0, 1, Negative), e(1, 0, Negative)],
        vec![e(0, 1, Positive), e(1, 0, Negative)],
        vec![e(0, 1, Negative), e(1, 0, Positive)],
    ];
    let entry = |edges: &[EdgeRecord], q: f64| -> Result<Complex64, String> {
        let g = graph_from_edges(2, edges).map_err(|e| e.to_string())?;
        Ok(hermitian_adjacency(&g, &PhaseSpec::new(q)).entry(0, 1))
    };
    let values = configs.iter().map(|c| entry(c, 0.25 * PI)).collect::<Result<Vec<_>, _>>()?;
    for i in 0..9 {
        for j in i + 1..9 {
            if values[i] == values[j] {
                return Err(format!("configurations {i} and {j} share H = {}", values[i]));
            }
        }
    }
    for c in &configs {
        let v = entry(c, 0.0)?;
        if v.im != 0.0 {
            return Err(format!("q = 0 gives complex entry {v}"));
        }
    }
    let time = within(Duration::from_secs(1), started)?;
    Ok(format!("9 distinct values at q = π/4, all real at q = 0; {time}"))
}

fn criterion_3() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (g, q) = random_case(&mut rng);
        let spec = PhaseSpec::new(q);
        let n = g.num_nodes();
        let theta = rng.random_range(-2.0..2.0);
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let cheb = chebyshev_apply(&laplacian_normalized(&g, &spec), &x, &[theta, -theta]).map_err(|e| e.to_string())?;

        let a = symmetrize_adjacency(&g);
        let d = degree_matrix(&a);
        let inv = |v: f64| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 };
        let mut m = DMatrix::<Complex64>::identity(n, n);
        for u in 0..n {
            for v in 0..n {
                if u != v && a.get(u, v) > 0.0 {
                    m[(u, v)] += phase_entry(u, v, &g, &spec) * a.get(u, v) * inv(d[u]) * inv(d[v]);
                }
            }
        }
        let expected = (m * DVector::from_vec(x)).map(|v| v * theta);
        for (c, e) in cheb.iter().zip(expected.iter()) {
            worst = worst.max((c - e).norm());
        }
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:e}"));
    }
    let time = within(Duration::from_secs(10), started)?;
    Ok(format!("50 instances, max deviation {worst:.2e}; {time}"))
}

fn criterion_4() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_signed_digraph(12, 0.2, 0.7, &mut rng);
    // Views drawn once and then held fixed.
    let (v1, v2) = make_views(&g, &PerturbationConfig::default(), &mut rng);
    let ops = [
        renormalized_propagation(&v1.graph, &PhaseSpec::new(v1.q)),
        renormalized_propagation(&v2.graph, &PhaseSpec::new(v2.q)),
    ];
    let dims = ModelDims {
        input: 8,
        hidden: 6,
        embed: 5,
        layers: 2,
    };
    let mut params = init_params(12, &dims, &mut rng);
    for t in params.tensors_mut().into_iter().filter(|t| t.kind == TensorKind::Bias) {
        t.data.iter_mut().for_each(|v| *v = rng.random_range(0.05..0.2));
    }
    let edges = g.edge_records();
    let input = StepInput {
        operators: [&ops[0], &ops[1]],
        edges: &edges,
    };
    let report = finite_diff_check(&params, input, &LossSettings::default(), 300, 4).map_err(|e| e.to_string())?;
    if report.probes.len() < 200 {
        return Err(format!("only {} probes compared", report.probes.len()));
    }
    if report.max_relative_error > 1e-4 {
        return Err(format!("max relative error {:e} at {:?}", report.max_relative_error, report.worst()));
    }
    let time = within(Duration::from_secs(60), started)?;
    Ok(format!(
        "{} probes, max relative error {:.2e} ({} skipped across a ReLU jump); {time}",
        report.probes.len(),
        report.max_relative_error,
        report.straddled.len()
    ))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    dot / (na * nb)
}

/// `(inter, intra)` by direct double loops over node pairs.
fn loop_losses(m1: &Array2<f64>, m2: &Array2<f64>, tau: f64) -> (f64, f64) {
    let rows = |m: &Array2<f64>| -> Vec<Vec<f64>> { m.rows().into_iter().map(|r| r.to_vec()).collect() };
    let (a, b) = (rows(m1), rows(m2));
    let n = a.len();
    let (mut inter, mut intra) = (0.0, 0.0);
    for i in 0..n {
        let (mut den_inter, mut den_intra) = (0.0, 0.0);
        for j in 0..n {
            if j != i {
                den_inter += (cosine(&a[i], &b[j]) / tau).exp();
                den_intra += (cosine(&a[i], &a[j]) / tau).exp();
            }
        }
        inter -= ((cosine(&a[i], &b[i]) / tau).exp() / den_inter).ln();
        intra -= (1.0 / den_intra).ln();
    }
    (inter / n as f64, intra / n as f64)
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tau = 0.5;
    let mut worst = 0.0f64;
    for n in [3usize, 17, 200] {
        let m1 = Array2::from_shape_simple_fn((n, 16), || rng.random_range(-1.0..1.0));
        let m2 = Array2::from_shape_simple_fn((n, 16), || rng.random_range(-1.0..1.0));
        let (inter, intra) = loop_losses(&m1, &m2, tau);
        let got_inter = inter_view_loss(m1.view(), m2.view(), tau).map_err(|e| e.to_string())?;
        let got_intra = intra_view_loss(m1.view(), tau).map_err(|e| e.to_string())?;
        worst = worst.max((got_inter - inter).abs()).max((got_intra - intra).abs());

        let eye = Array2::<f64>::eye(n);
        let ln = ((n - 1) as f64).ln();
        let closed_inter = inter_view_loss(eye.view(), eye.view(), tau).map_err(|e| e.to_string())?;
        let closed_intra = intra_view_loss(eye.view(), tau).map_err(|e| e.to_string())?;
        worst = worst
            .max((closed_inter - (-1.0 / tau + ln)).abs())
            .max((closed_intra - ln).abs());
    }
    if worst > 1e-10 {
        return Err(format!("max deviation {worst:e}"));
    }
    Ok(format!("N ∈ {{3, 17, 200}} plus orthogonal closed forms, max deviation {worst:.2e}"))
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for set in 0..100 {
        let len = rng.random_range(2..150);
        let mut scores: Vec<(f64, f64)> = (0..len)
            .map(|_| (rng.random_range(0..25) as f64 / 24.0, if rng.random_bool(0.6) { 1.0 } else { 0.0 }))
            .collect();
        scores[0].1 = 1.0;
        scores[1].1 = 0.0;
        let (mut twice_wins, mut pairs) = (0u64, 0u64);
        for p in scores.iter().filter(|s| s.1 == 1.0) {
            for n in scores.iter().filter(|s| s.1 == 0.0) {
                pairs += 1;
                twice_wins += if p.0 > n.0 {
                    2
                } else if p.0 == n.0 {
                    1
                } else {
                    0
                };
            }
        }
        let expected = twice_wins as f64 / (2 * pairs) as f64;
        let got = auc(&scores).map_err(|e| e.to_string())?;
        if got != expected {
            return Err(format!("set {set}: AUC {got} vs pairwise {expected}"));
        }
    }

    // 90 positives, 10 negatives, everything predicted positive.
    let scores: Vec<(f64, f64)> = (0..100).map(|i| (0.9, if i < 90 { 1.0 } else { 0.0 })).collect();
    let f = f1_suite(&scores, 0.5).map_err(|e| e.to_string())?;
    let (tp, fp) = (90.0, 10.0);
    let binary = 2.0 * tp / (2.0 * tp + fp);
    let expected = [(f.binary_f1, binary, 0.9474), (f.micro_f1, 0.9, 0.9), (f.macro_f1, binary / 2.0, 0.4737)];
    for (got, exact, printed) in expected {
        if (got - exact).abs() > 1e-12 || (got - printed).abs() > 1e-4 {
            return Err(format!("F1 {got} vs {exact} ({printed})"));
        }
    }
    Ok(format!(
        "100 AUC sets exact; F1 binary {:.4} micro {:.4} macro {:.4}",
        f.binary_f1, f.micro_f1, f.macro_f1
    ))
}

fn data_dir() -> PathBuf {
    std::env::var_os("SDGCL_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn dataset(name: &str) -> Result<PathBuf, String> {
    let path = data_dir().join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(format!("dataset {} not found", path.display()))
    }
}

struct Runs {
    metrics: Vec<RunMetrics>,
    slowest: Duration,
}

impl Runs {
    fn mean_auc(&self) -> f64 {
        self.metrics.iter().map(|m| m.test.auc).sum::<f64>() / self.metrics.len() as f64
    }
}

/// Ten seeds of `config` on `path`, one `train_one` call per seed.
fn ten_seeds(config: &RunConfig, path: &Path, out: &Path) -> Result<Runs, String> {
    let config = RunConfig {
        dataset: Some(path.to_path_buf()),
        seed: 0,
        seeds: 10,
        ..config.clone()
    };
    let source = DatasetSource::from_config(&config).map_err(|e| e.to_string())?;
    let mut runs = Runs {
        metrics: Vec::new(),
        slowest: Duration::ZERO,
    };
    for seed in config.run_seeds() {
        let started = Instant::now();
        let m = train_one(&config, &source, seed, &seed_dir(out, seed)).map_err(|e| e.to_string())?;
        runs.slowest = runs.slowest.max(started.elapsed());
        runs.metrics.push(m);
    }
    Ok(runs)
}

struct Shared {
    out: tempfile::TempDir,
    alpha_full: RefCell<Option<Runs>>,
}

fn criterion_7(shared: &Shared) -> Check {
    let config = RunConfig::default();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (file, floor) in [("soc-sign-bitcoinalpha.csv", 0.85), ("soc-sign-bitcoinotc.csv", 0.87)] {
        let path = match dataset(file) {
            Ok(p) => p,
            Err(e) => {
                failures.push(e);
                continue;
            }
        };
        let runs = ten_seeds(&config, &path, &shared.out.path().join(file).join("full"))?;
        let mean = runs.mean_auc();
        lines.push(format!("{file}: mean test AUC {mean:.4} (floor {floor}), slowest run {:.0?}", runs.slowest));
        if mean < floor {
            failures.push(format!("{file}: mean AUC {mean:.4} < {floor}"));
        }
        if runs.slowest > Duration::from_secs(600) {
            failures.push(format!("{file}: a run took {:.0?}", runs.slowest));
        }
        if file.contains("alpha") {
            *shared.alpha_full.borrow_mut() = Some(runs);
        }
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(failures.into_iter().chain(lines).collect::<Vec<_>>().join("; "))
    }
}

fn criterion_8(shared: &Shared) -> Check {
    let path = dataset("soc-sign-bitcoinalpha.csv")?;
    let full = shared.alpha_full.borrow();
    let full = full.as_ref().ok_or("full-model runs from criterion 7 unavailable")?;
    let variant = Variant::NoAugmentation.configure(&RunConfig::default());
    let out = shared.out.path().join("alpha-ablation").join(Variant::NoAugmentation.name());
    let ablated = ten_seeds(&variant, &path, &out)?;
    let (a, b) = (ablated.mean_auc(), full.mean_auc());
    if a < b {
        Ok(format!("no-augmentation {a:.4} < full {b:.4}"))
    } else {
        Err(format!("no-augmentation {a:.4} is not below full {b:.4}"))
    }
}

fn criterion_9(shared: &Shared) -> Check {
    let root = shared.out.path().join("determinism");
    std::fs::create_dir_all(&root).map_err(|e| e.to_string())?;
    let g = latent_trust_graph(120, 6.0, 0.25, 0.05, &mut ChaCha8Rng::seed_from_u64(9));
    let data = root.join("edges.txt");
    write_edge_records(&data, &g.edge_records()).map_err(|e| e.to_string())?;
    let config = RunConfig {
        dataset: Some(data),
        seed: 9,
        epochs: 25,
        dim: 16,
        ..RunConfig::default()
    };
    let read = |p: PathBuf| std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = root.join(run);
        cmd_train(&config, &out).map_err(|e| e.to_string())?;
        outputs.push((read(seed_dir(&out, 9).join(METRICS))?, read(out.join(SUMMARY))?));
    }
    if outputs[0] != outputs[1] {
        return Err("metrics JSON differs between two identical runs".into());
    }
    Ok(format!("two runs, {} byte metrics.json identical", outputs[0].0.len()))
}

fn main() {
    let shared = Shared {
        out: tempfile::tempdir().expect("temp dir"),
        alpha_full: RefCell::new(None),
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("Hermitian + PSD suite", Box::new(criterion_1)),
        ("nine edge encodings", Box::new(criterion_2)),
        ("Chebyshev K=1 equivalence", Box::new(criterion_3)),
        ("gradient check", Box::new(criterion_4)),
        ("loss oracles", Box::new(criterion_5)),
        ("metric oracles", Box::new(criterion_6)),
        ("Bitcoin reproduction", Box::new(|| criterion_7(&shared))),
        ("ablation direction", Box::new(|| criterion_8(&shared))),
        ("determinism", Box::new(|| criterion_9(&shared))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", k + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {reason}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
