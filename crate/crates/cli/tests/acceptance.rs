//! Acceptance criteria 1-11. Each test prints one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) before asserting.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use agtv_core::image::Image;
use agtv_core::metrics::rel_l2_error;
use agtv_core::patch_graph::{
    extract_patches, grid_graph, knn_approx, knn_exact, laplacian, patch_graph_from_image, recall, ApproxParams,
    NeighborSearch, PatchGraph,
};
use agtv_core::phantom::shepp_logan;
use agtv_core::projector::{add_gaussian_noise, add_poisson_noise, equispaced_angles, project, ProjectionMatrix, Sinogram};
use agtv_core::solvers::{cstv_solve, gtv_solve, objective, prox_l1, reconstruct, Method, SolverConfig};
use agtv_core::wavelet::{default_levels, Dwt2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn report(id: &str, name: &str, ok: bool, detail: &str) -> bool {
    let line = format!("{} criterion {id}: {name} ({detail})\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Shepp-Logan truth, projector and a 10% Poisson sinogram.
struct Setting {
    a: ProjectionMatrix<f64>,
    b: Sinogram<f64>,
    truth: Image<f64>,
}

fn setting(n: usize, views: usize, seed: u64) -> Setting {
    let a = ProjectionMatrix::build(n, &equispaced_angles(views), n).unwrap();
    let truth = shepp_logan(n).unwrap();
    let b = add_poisson_noise(&project(&a, &truth).unwrap(), 0.1, seed).unwrap();
    Setting { a, b, truth }
}

fn error_of(method: Method, s: &Setting, cfg: &SolverConfig<f64>) -> f64 {
    let r = reconstruct(method, &s.a, &s.b, cfg, None).unwrap();
    rel_l2_error(&r.image, &s.truth).unwrap()
}

fn agtv_config(k: usize, lambda: f64, gamma: f64) -> SolverConfig<f64> {
    SolverConfig {
        lambda,
        gamma,
        k,
        log_objective: false,
        ..Method::Agtv.default_config()
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn criterion_01_operator_properties() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c01);
    let mut worst = BTreeMap::<&str, f64>::new();
    let mut note = |key: &'static str, v: f64| {
        let w = worst.entry(key).or_insert(0.0);
        *w = w.max(v);
    };
    for _ in 0..200 {
        // Projector adjoint.
        let n = rng.random_range(1..=20);
        let views = rng.random_range(1..=12);
        let p = rng.random_range(1..=2 * n + 2);
        let angles: Vec<f64> = (0..views).map(|_| rng.random_range(0.0..180.0)).collect();
        let a = ProjectionMatrix::<f64>::build(n, &angles, p).unwrap();
        let x = random_vec(&mut rng, n * n);
        let y = random_vec(&mut rng, a.rows());
        let lhs = dot(&a.mul_vec(&x).unwrap(), &y);
        let rhs = dot(&x, &a.mul_transpose_vec(&y).unwrap());
        note("projector adjoint", (lhs - rhs).abs() / (norm(&x) * norm(&y)));

        // Graph gradient/divergence adjoint and Laplacian identities.
        let side = rng.random_range(2..=12);
        let nodes = side * side;
        let edges: Vec<(usize, usize, f64)> = (0..rng.random_range(1..4 * nodes))
            .filter_map(|_| {
                let i = rng.random_range(0..nodes);
                let j = rng.random_range(0..nodes);
                (i != j).then(|| (i, j, rng.random_range(0.001..=1.0)))
            })
            .collect();
        let g = if edges.is_empty() {
            grid_graph(side)
        } else {
            PatchGraph::from_edges(side, 1, 1.0, &edges).unwrap()
        };
        let x = random_vec(&mut rng, nodes);
        let d = random_vec(&mut rng, g.edge_count());
        let mut gx = vec![0.0; g.edge_count()];
        g.gradient_into(&x, &mut gx);
        let mut div = vec![0.0; nodes];
        g.divergence_into(&d, &mut div);
        note("graph adjoint", (dot(&gx, &d) - dot(&x, &div)).abs() / (norm(&x) * norm(&d)));

        let l = laplacian(&g);
        let ones = vec![1.0; nodes];
        let max_w: f64 = g.weights().iter().cloned().fold(0.0, f64::max);
        note("laplacian null space", norm(&l.mul_vec(&ones).unwrap()) / (max_w * nodes as f64));
        let direct: f64 = g
            .edges()
            .iter()
            .zip(g.weights())
            .map(|(&(i, j), &w)| w * (x[i as usize] - x[j as usize]).powi(2))
            .sum();
        let quad = dot(&x, &l.mul_vec(&x).unwrap());
        note("laplacian quadratic form", rel_diff(quad, direct));
        note("gradient energy", rel_diff(dot(&gx, &gx), direct));

        // Wavelet round trip and Parseval.
        let wn = 1usize << rng.random_range(3..=6);
        let levels = rng.random_range(1..=default_levels(wn));
        let dwt = Dwt2::<f64>::new(wn, levels).unwrap();
        let img = Image::from_vec(wn, random_vec(&mut rng, wn * wn)).unwrap();
        let c = dwt.analyze(&img).unwrap();
        let back = dwt.synthesize(&c).unwrap();
        let diff: Vec<f64> = back.data().iter().zip(img.data()).map(|(a, b)| a - b).collect();
        note("wavelet round trip", norm(&diff) / norm(img.data()));
        note("wavelet parseval", rel_diff(norm(c.data()), norm(img.data())));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let within = worst.values().all(|&v| v <= 1e-10);
    let detail: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    let ok = report(
        "1",
        "operator property suite, 200 instances each",
        within && elapsed < 60.0,
        &format!("{}; {elapsed:.1} s", detail.join(", ")),
    );
    assert!(ok);
}

fn anisotropic_tv(x: &Image<f64>) -> f64 {
    let n = x.side();
    let mut tv = 0.0;
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                tv += (x.get(r, c + 1) - x.get(r, c)).abs();
            }
            if r + 1 < n {
                tv += (x.get(r + 1, c) - x.get(r, c)).abs();
            }
        }
    }
    tv
}

#[test]
fn criterion_02_tv_special_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c02);
    let grid = grid_graph::<f64>(16);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = Image::from_vec(16, random_vec(&mut rng, 256)).unwrap();
        let tv = grid.total_variation(x.data());
        worst = worst.max(rel_diff(tv, anisotropic_tv(&x)));
    }

    let a = ProjectionMatrix::build(16, &equispaced_angles(12), 16).unwrap();
    let mut identical = true;
    for seed in 0..5 {
        let mut img_rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Image::from_vec(16, (0..256).map(|_| img_rng.random_range(0.0..1.0)).collect()).unwrap();
        let b = add_poisson_noise(&project(&a, &x).unwrap(), 0.1, seed).unwrap();
        let cfg = SolverConfig {
            inner_iters: 50,
            ..Method::Cstv.default_config()
        };
        let x0 = Image::zeros(16);
        let c = cstv_solve(&a, &b, &cfg, Some(&x0)).unwrap();
        let g = gtv_solve(&a, &b, &grid, &cfg, &x0).unwrap();
        let bits = |img: &Image<f64>| img.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        identical &= bits(&c.image) == bits(&g.image) && c.inner_iterations_used == g.inner_iterations_used;
    }
    let ok = report(
        "2",
        "grid-graph TV equals anisotropic TV; CSTV bit-identical to GTV on grid",
        worst <= 1e-12 && identical,
        &format!("max rel diff {worst:.1e} over 50 images; bit-identical {identical}"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_prox_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c03);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(0.0..1.2);
        let z = prox_l1(&v, t).unwrap();
        // The minimizer lies between 0 and v in each coordinate.
        let axis = |vi: f64| {
            let (lo, hi) = (vi.min(0.0) - 2.0 * h, vi.max(0.0) + 2.0 * h);
            (0..=((hi - lo) / h).ceil() as usize)
                .map(|k| lo + k as f64 * h)
                .collect::<Vec<_>>()
        };
        let (g0, g1) = (axis(v[0]), axis(v[1]));
        let f = |a: f64, b: f64| 0.5 * ((a - v[0]).powi(2) + (b - v[1]).powi(2)) + t * (a.abs() + b.abs());
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for &a in &g0 {
            for &b in &g1 {
                let val = f(a, b);
                if val < best.0 {
                    best = (val, a, b);
                }
            }
        }
        worst = worst.max((z[0] - best.1).abs().max((z[1] - best.2).abs()));
    }
    let v = random_vec(&mut rng, 100);
    let identity = prox_l1(&v, 0.0).unwrap() == v;
    let ok = report(
        "3",
        "prox_l1 matches grid-search minimizer",
        worst <= h && identity,
        &format!("max deviation {worst:.1e} at grid step {h:.0e}; threshold-0 identity {identity}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_knn_quality_and_speed() {
    let fbp_image = |n: usize| {
        let s = setting(n, 36, 0);
        reconstruct(Method::Fbp, &s.a, &s.b, &Method::Fbp.default_config(), None)
            .unwrap()
            .image
    };
    let small = extract_patches(&fbp_image(32), 3).unwrap();
    let exact = knn_exact(&small, 10).unwrap();
    let approx = knn_approx(&small, 10, &ApproxParams::default()).unwrap();
    let r = recall(&approx, &exact);

    let large = extract_patches(&fbp_image(64), 3).unwrap();
    let best_of = |f: &dyn Fn()| {
        (0..3)
            .map(|_| {
                let t = Instant::now();
                f();
                t.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let t_approx = best_of(&|| {
        knn_approx(&large, 15, &ApproxParams::default()).unwrap();
    });
    let t_exact = best_of(&|| {
        knn_exact(&large, 15).unwrap();
    });
    let ok = report(
        "4",
        "approximate KNN recall and speed",
        r >= 0.9 && t_approx < t_exact,
        &format!(
            "recall {r:.3} at 32x32 K=10; 64x64 K=15 approximate {:.0} ms vs scan {:.0} ms",
            t_approx * 1e3,
            t_exact * 1e3
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_05_noise_calibration() {
    let a = ProjectionMatrix::build(64, &equispaced_angles(36), 64).unwrap();
    let clean = project(&a, &shepp_logan(64).unwrap()).unwrap();
    let realized = |noisy: &Sinogram<f64>| {
        let d: Vec<f64> = noisy.data().iter().zip(clean.data()).map(|(a, b)| a - b).collect();
        norm(&d) / norm(clean.data())
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, target) in [("poisson", 0.10), ("gaussian", 0.05)] {
        let levels: Vec<f64> = (0..100u64)
            .map(|seed| {
                let noisy = match name {
                    "poisson" => add_poisson_noise(&clean, target, seed),
                    _ => add_gaussian_noise(&clean, target, seed),
                };
                realized(&noisy.unwrap())
            })
            .collect();
        let lo = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = levels.iter().cloned().fold(0.0, f64::max);
        ok &= lo >= 0.9 * target && hi <= 1.1 * target;
        detail.push(format!("{name} {target}: realized {lo:.4}..{hi:.4}"));
    }
    let ok = report("5", "noise calibration over 100 seeds", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_06_method_ranking() {
    let methods = [Method::Agtv, Method::Gtv, Method::Cstv, Method::Fbp];
    let errors: Vec<Vec<f64>> = (0..5u64)
        .map(|seed| {
            let s = setting(64, 36, seed);
            methods
                .par_iter()
                .map(|&m| {
                    let cfg = SolverConfig {
                        seed,
                        log_objective: false,
                        ..m.default_config()
                    };
                    error_of(m, &s, &cfg)
                })
                .collect()
        })
        .collect();
    let mean: Vec<f64> = (0..methods.len())
        .map(|j| errors.iter().map(|e| e[j]).sum::<f64>() / errors.len() as f64)
        .collect();
    let mean_order = mean.windows(2).all(|w| w[0] < w[1]);
    let seeds_ordered = errors.iter().filter(|e| e[0] < e[1] && e[1] < e[2]).count();
    let detail: Vec<String> = methods.iter().zip(&mean).map(|(m, e)| format!("{m} {e:.4}")).collect();
    let ok = report(
        "6",
        "mean error AGTV < GTV < CSTV < FBP, per-seed order in >= 4 of 5",
        mean_order && seeds_ordered >= 4,
        &format!("means {}; per-seed order holds in {seeds_ordered}/5", detail.join(", ")),
    );
    assert!(ok);
}

#[test]
fn criterion_07_parameter_grid() {
    let s = setting(32, 36, 0);
    let lambdas: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let gammas: Vec<f64> = (0..10).map(|i| 0.1 * 100f64.powf(i as f64 / 9.0)).collect();
    let jobs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| gammas.iter().map(move |&g| (l, g)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(l, g)| error_of(Method::Agtv, &s, &agtv_config(10, l, g)))
        .collect();
    let (imin, &min) = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (lmin, gmin) = jobs[imin];
    let corner = *errors.last().unwrap();
    let a = gmin <= 1.0;
    let b = (0.05..=0.30).contains(&min);
    let c = corner > min;
    let ok = report(
        "7",
        "lambda/gamma grid: (a) minimum at gamma <= 1, (b) minimum in [0.05, 0.30], (c) corner above minimum",
        a && b && c,
        &format!(
            "minimum {min:.4} at lambda {lmin:.1}, gamma {gmin:.3}; corner {corner:.4}; (a) {a} (b) {b} (c) {c}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_k_robustness() {
    let s = setting(32, 36, 0);
    let ks = [5usize, 10, 15, 25, 50];
    let errors: Vec<f64> = ks
        .par_iter()
        .map(|&k| error_of(Method::Agtv, &s, &agtv_config(k, 0.1, 5.0)))
        .collect();
    let lo = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    let detail: Vec<String> = ks.iter().zip(&errors).map(|(k, e)| format!("K={k} {e:.4}")).collect();
    let ok = report(
        "8",
        "K robustness at lambda 0.1, gamma 5: (max - min) / min <= 0.25",
        spread <= 0.25,
        &format!("{}; spread {spread:.3}", detail.join(", ")),
    );
    assert!(ok);
}

#[test]
fn criterion_09_convergence_hygiene() {
    let mut detail = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let s = setting(32, 36, seed);
        let cfg = SolverConfig {
            k: 10,
            inner_iters: 1000,
            epsilon: 1e-4,
            seed,
            ..Method::Gtv.default_config()
        };
        let x0 = reconstruct(Method::Fbp, &s.a, &s.b, &cfg, None).unwrap().image;
        let graph = patch_graph_from_image(&x0, cfg.patch_side, cfg.k, NeighborSearch::default()).unwrap();
        let r = gtv_solve(&s.a, &s.b, &graph, &cfg, &x0).unwrap();
        let levels = cfg.wavelet_levels.unwrap_or(default_levels(32));
        let f = |x: &Image<f64>| objective(&s.a, s.b.data(), x, cfg.lambda, cfg.gamma, Some(&graph), levels).unwrap();
        let (entry, exit) = (f(&x0), f(&r.image));
        let finite = r.image.data().iter().all(|v| v.is_finite());
        let iters = r.inner_iterations_used[0];
        ok &= r.converged && iters <= 1000 && exit <= entry && finite;
        detail.push(format!("seed {seed}: {iters} iterations, objective {entry:.4e} -> {exit:.4e}"));
    }
    let ok = report(
        "9",
        "GTV converges to 1e-4 within 1000 iterations, objective not increased, finite",
        ok,
        &detail.join("; "),
    );
    assert!(ok);
}

#[test]
fn criterion_10_view_saturation() {
    let mean_error = |views: usize| {
        let errs: Vec<f64> = (0..5u64)
            .into_par_iter()
            .map(|seed| {
                let cfg = SolverConfig {
                    seed,
                    log_objective: false,
                    ..Method::Agtv.default_config()
                };
                error_of(Method::Agtv, &setting(64, views, seed), &cfg)
            })
            .collect();
        errs.iter().sum::<f64>() / errs.len() as f64
    };
    let e90 = mean_error(90);
    let e120 = mean_error(120);
    let rel = (e90 - e120).abs() / e120;
    let ok = report(
        "10",
        "AGTV error at 90 views within 10% of 120 views",
        rel <= 0.10,
        &format!("mean error 90 views {e90:.4}, 120 views {e120:.4}, relative gap {rel:.3}"),
    );
    assert!(ok);
}

fn agtv_bin(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_agtv"))
        .args(args)
        .arg("--quiet")
        .status()
        .expect("run agtv");
    assert!(status.success(), "agtv {args:?} exited with {status}");
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// File contents with timing fields blanked.
fn masked(path: &Path) -> Vec<u8> {
    let bytes = std::fs::read(path).unwrap();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "csv" => {
            let text = String::from_utf8(bytes).unwrap();
            let mut lines = text.lines();
            let header = lines.next().unwrap_or("");
            let timing: Vec<usize> = header
                .split(',')
                .enumerate()
                .filter(|(_, h)| h.contains("wall_time"))
                .map(|(i, _)| i)
                .collect();
            let mut out = format!("{header}\n");
            for line in lines {
                let fields: Vec<&str> = line
                    .split(',')
                    .enumerate()
                    .map(|(i, f)| if timing.contains(&i) { "" } else { f })
                    .collect();
                out.push_str(&fields.join(","));
                out.push('\n');
            }
            out.into_bytes()
        }
        "cfg" => String::from_utf8(bytes)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wall_time"))
            .collect::<Vec<_>>()
            .join("\n")
            .into_bytes(),
        _ => bytes,
    }
}

#[test]
fn criterion_11_cli_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let sub = |root: &Path, name: &str| root.join(name).display().to_string();

    agtv_bin(&["phantom", "--out", &sub(&first, "phantom"), "--n", "32"]);
    agtv_bin(&["project", "--out", &sub(&first, "project"), "--n", "32", "--seed", "1"]);
    let sinogram = format!("sinogram={}", sub(&first, "project/sinogram.sin"));
    let truth = format!("truth={}", sub(&first, "project/truth.img"));
    agtv_bin(&[
        "reconstruct", "--out", &sub(&first, "reconstruct"), "--n", "32", "--method", "agtv",
        "--set", &sinogram, "--set", &truth, "--set", "outer_iters=3", "--set", "inner_iters=20",
    ]);
    agtv_bin(&[
        "sweep", "--out", &sub(&first, "sweep"), "--n", "16", "--angles", "12", "--method", "gtv",
        "--set", "sweep.gamma=0.1,1", "--set", "sweep.seeds=0,1", "--set", "inner_iters=20",
    ]);
    agtv_bin(&[
        "compare", "--out", &sub(&first, "compare"), "--n", "16", "--angles", "12",
        "--set", "compare.seeds=0,1", "--set", "inner_iters=10", "--set", "outer_iters=2",
    ]);

    let commands = ["phantom", "project", "reconstruct", "sweep", "compare"];
    for c in commands {
        agtv_bin(&["replay", &sub(&first, &format!("{c}/manifest.cfg")), "--out", &sub(&second, c)]);
    }

    let mut mismatched = Vec::new();
    let mut compared = 0;
    for c in commands {
        let (a, b) = (first.join(c), second.join(c));
        let (fa, fb) = (files_under(&a), files_under(&b));
        if fa != fb {
            mismatched.push(format!("{c}: file lists differ"));
            continue;
        }
        for f in fa {
            compared += 1;
            if masked(&a.join(&f)) != masked(&b.join(&f)) {
                mismatched.push(format!("{c}/{}", f.display()));
            }
        }
    }
    let ok = report(
        "11",
        "every CLI command re-run from its manifest reproduces its outputs",
        mismatched.is_empty() && compared > 0,
        &format!("{compared} files compared, timing fields masked; mismatches: {mismatched:?}"),
    );
    assert!(ok);
}
