//! The five experiment commands. Each writes into its own output directory
//! and finishes by writing `manifest.cfg`, which reproduces the outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use agtv_core::image::Image;
use agtv_core::metrics::evaluate;
use agtv_core::phantom::{ellipse_phantom, format_phantom_spec, load_phantom_spec, shepp_logan_table};
use agtv_core::projector::{add_gaussian_noise, add_poisson_noise, project, ProjectionMatrix, Sinogram};
use agtv_core::solvers::{reconstruct, Method};
use agtv_core::{Image64, ProjectionMatrix64, Sinogram64};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{parse_list, KvConfig, NoiseModel, PhantomSource, RunConfig, RUN_KEYS};
use crate::error::{config_err, CliError, Result};
use crate::output::{open, write_atomic, write_text};

pub const MANIFEST: &str = "manifest.cfg";
const RESULT: &str = "result.cfg";

fn core_io<T>(path: &Path, r: agtv_core::Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        agtv_core::Error::Io(source) => CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        },
        other => other.into(),
    })
}

fn write_image(path: &Path, img: &Image64) -> Result<()> {
    write_atomic(path, |w| core_io(path, img.write_raw(w)))
}

fn write_pgm(path: &Path, img: &Image64) -> Result<()> {
    write_atomic(path, |w| core_io(path, img.write_pgm(w)))
}

fn read_image(path: &Path) -> Result<Image64> {
    core_io(path, Image::read_raw(open(path)?))
}

fn read_sinogram(path: &Path) -> Result<Sinogram64> {
    core_io(path, Sinogram::read_raw(open(path)?))
}

fn phantom_image(source: &PhantomSource, n: usize) -> Result<Image64> {
    let spec = match source {
        PhantomSource::SheppLogan(v) => shepp_logan_table(*v),
        PhantomSource::Spec(path) => load_phantom_spec(path).map_err(|e| match e {
            agtv_core::Error::Io(err) => CliError::Config(format!("phantom spec {}: {err}", path.display())),
            other => CliError::Config(other.to_string()),
        })?,
    };
    Ok(ellipse_phantom(&spec, n)?)
}

/// Ground truth from an image file or the configured phantom.
fn ground_truth(rc: &RunConfig) -> Result<Image64> {
    let img = match &rc.image {
        Some(path) => read_image(path)?,
        None => phantom_image(&rc.phantom, rc.n)?,
    };
    if img.side() != rc.n {
        return config_err(format!("image side {} does not match n = {}", img.side(), rc.n));
    }
    Ok(img)
}

fn noisy_sinogram(rc: &RunConfig, a: &ProjectionMatrix64, truth: &Image64) -> Result<Sinogram64> {
    let clean = project(a, truth)?;
    let noisy = match rc.noise {
        NoiseModel::None => clean,
        NoiseModel::Poisson => add_poisson_noise(&clean, rc.noise_level, rc.noise_seed)?,
        NoiseModel::Gaussian => add_gaussian_noise(&clean, rc.noise_level, rc.noise_seed)?,
    };
    Ok(noisy)
}

/// Inputs of one reconstruction: geometry, data and (optional) ground truth.
pub struct Problem {
    pub a: ProjectionMatrix64,
    pub b: Sinogram64,
    pub truth: Option<Image64>,
}

impl Problem {
    pub fn from_config(rc: &RunConfig) -> Result<Self> {
        let a = ProjectionMatrix::build(rc.n, &rc.angle_list(), rc.rays)?;
        let (b, truth) = match &rc.sinogram {
            Some(path) => {
                let b = read_sinogram(path)?;
                if b.rays() != rc.rays || b.views() != rc.angles {
                    return config_err(format!(
                        "sinogram {} is {}x{} (rays x views), config expects {}x{}",
                        path.display(),
                        b.rays(),
                        b.views(),
                        rc.rays,
                        rc.angles
                    ));
                }
                let truth = rc.truth.as_deref().map(read_image).transpose()?;
                (b, truth)
            }
            None => {
                let truth = ground_truth(rc)?;
                (noisy_sinogram(rc, &a, &truth)?, Some(truth))
            }
        };
        if let Some(t) = &truth {
            if t.side() != rc.n {
                return config_err(format!("ground truth side {} does not match n = {}", t.side(), rc.n));
            }
        }
        Ok(Problem { a, b, truth })
    }
}

/// Summary of a finished reconstruction, also stored as `result.cfg`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub rel_l2_error: Option<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

impl RunOutcome {
    fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        if let Some(e) = self.rel_l2_error {
            kv.set("rel_l2_error", e.to_string());
        }
        kv.set("outer_iterations", self.outer_iterations.to_string());
        kv.set("inner_iterations", self.inner_iterations.to_string());
        kv.set("converged", self.converged.to_string());
        kv.set("wall_time_ms", format!("{:.3}", self.wall_time_ms));
        kv
    }

    fn from_kv(kv: &KvConfig) -> Result<Self> {
        Ok(RunOutcome {
            rel_l2_error: kv.parse_opt("rel_l2_error")?,
            outer_iterations: kv.parse_or("outer_iterations", 0)?,
            inner_iterations: kv.parse_or("inner_iterations", 0)?,
            converged: kv.parse_or("converged", false)?,
            wall_time_ms: kv.parse_or("wall_time_ms", 0.0)?,
        })
    }
}

/// Reconstructs `problem` with `rc` and writes the standard run directory:
/// `recon.img`, `recon.pgm`, `metrics.csv`, `trace.csv`, `result.cfg`, then
/// `manifest.cfg`.
pub fn run_into(rc: &RunConfig, problem: &Problem, dir: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let result = reconstruct(rc.method, &problem.a, &problem.b, &rc.solver, None)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = evaluate(&result.image, problem.truth.as_ref(), rc.profile_row)?;

    let recon = dir.join("recon.img");
    write_image(&recon, &result.image)?;
    write_pgm(&dir.join("recon.pgm"), &result.image)?;
    let metrics = dir.join("metrics.csv");
    write_atomic(&metrics, |w| core_io(&metrics, report.write_csv(w, &rc.run_id, true)))?;
    let trace = dir.join("trace.csv");
    write_atomic(&trace, |w| core_io(&trace, result.write_trace_csv(w)))?;

    let outcome = RunOutcome {
        rel_l2_error: report.rel_l2_error,
        outer_iterations: result.outer_iterations_used,
        inner_iterations: result.inner_iterations_used.iter().sum(),
        converged: result.converged,
        wall_time_ms,
    };
    write_text(&dir.join(RESULT), &outcome.to_kv().to_text())?;
    write_text(&dir.join(MANIFEST), &rc.to_kv("reconstruct").to_text())?;
    match outcome.rel_l2_error {
        Some(e) => info!("{} {}: rel_l2_error {e:.4} in {wall_time_ms:.0} ms", rc.run_id, rc.method),
        None => info!("{} {}: done in {wall_time_ms:.0} ms", rc.run_id, rc.method),
    }
    Ok(outcome)
}

/// `phantom`: writes `phantom.img`, `phantom.pgm` and the ellipse table used.
pub fn cmd_phantom(kv: &KvConfig, out: &Path) -> Result<()> {
    kv.check_keys(&["command", "version", "run_id", "phantom", "n", "seed"], &[])?;
    let rc = RunConfig::from_kv(kv)?;
    let img = phantom_image(&rc.phantom, rc.n)?;
    write_image(&out.join("phantom.img"), &img)?;
    write_pgm(&out.join("phantom.pgm"), &img)?;
    if let PhantomSource::SheppLogan(v) = rc.phantom {
        write_text(&out.join("phantom.toml"), &format_phantom_spec(&shepp_logan_table(v)))?;
    }
    let full = rc.to_kv("phantom");
    let mut manifest = KvConfig::default();
    for key in ["command", "version", "phantom", "n"] {
        manifest.set(key, full.get(key).unwrap_or_default());
    }
    write_text(&out.join(MANIFEST), &manifest.to_text())
}

/// `project`: builds the projector, projects the ground truth and adds noise.
pub fn cmd_project(kv: &KvConfig, out: &Path) -> Result<()> {
    let rc = RunConfig::from_kv(kv)?;
    if rc.sinogram.is_some() {
        return config_err("project generates a sinogram; 'sinogram' must not be set");
    }
    let truth = ground_truth(&rc)?;
    let a = ProjectionMatrix::build(rc.n, &rc.angle_list(), rc.rays)?;
    let b = noisy_sinogram(&rc, &a, &truth)?;
    let sino = out.join("sinogram.sin");
    write_atomic(&sino, |w| core_io(&sino, b.write_raw(w)))?;
    let csv = out.join("sinogram.csv");
    write_atomic(&csv, |w| core_io(&csv, b.write_csv(w, a.angles())))?;
    write_image(&out.join("truth.img"), &truth)?;
    info!("projected {}x{} image to {} views x {} rays", rc.n, rc.n, rc.angles, rc.rays);
    write_text(&out.join(MANIFEST), &rc.to_kv("project").to_text())
}

/// `reconstruct`: one method on one data set.
pub fn cmd_reconstruct(kv: &KvConfig, out: &Path) -> Result<RunOutcome> {
    let rc = RunConfig::from_kv(kv)?;
    let problem = Problem::from_config(&rc)?;
    run_into(&rc, &problem, out)
}

fn read_outcome(dir: &Path) -> Option<RunOutcome> {
    let kv = KvConfig::load(&dir.join(RESULT)).ok()?;
    RunOutcome::from_kv(&kv).ok()
}

/// Planned run of a sweep: its id, axis values and resolved config.
struct PlannedRun {
    id: String,
    values: Vec<String>,
    seed: u64,
    config: RunConfig,
}

fn plan_sweep(kv: &KvConfig) -> Result<(Vec<String>, Vec<PlannedRun>)> {
    kv.check_keys(RUN_KEYS, &["sweep."])?;
    let mut base = KvConfig::default();
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    let mut seeds = vec![kv.parse_or::<u64>("seed", 0)?.to_string()];
    let mut cap = 10_000usize;
    for (key, value) in kv.iter() {
        match key.strip_prefix("sweep.") {
            Some("seeds") => seeds = parse_list(key, value)?,
            Some("cap") => {
                cap = value
                    .parse()
                    .map_err(|e| CliError::Config(format!("sweep.cap = '{value}': {e}")))?
            }
            Some(axis) => {
                if !RUN_KEYS.contains(&axis) || matches!(axis, "command" | "run_id" | "seed") {
                    return config_err(format!("'{key}' is not a sweepable parameter"));
                }
                axes.push((axis.to_string(), parse_list(key, value)?));
            }
            None => base.set(key, value),
        }
    }
    if axes.is_empty() && seeds.len() < 2 {
        return config_err("sweep needs at least one sweep.<key> axis or several sweep.seeds");
    }
    let total = axes.iter().fold(seeds.len(), |acc, (_, v)| acc.saturating_mul(v.len()));
    if total > cap {
        return config_err(format!("sweep has {total} runs, exceeding the cap of {cap} (sweep.cap)"));
    }
    let explicit_noise_seed = base.contains("noise_seed") || axes.iter().any(|(k, _)| k == "noise_seed");

    let mut plan = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total / seeds.len() {
        for seed_text in &seeds {
            let seed: u64 = seed_text
                .parse()
                .map_err(|e| CliError::Config(format!("sweep.seeds '{seed_text}': {e}")))?;
            let mut run = base.clone();
            let values: Vec<String> = axes.iter().zip(&idx).map(|((_, v), &i)| v[i].clone()).collect();
            for ((key, _), v) in axes.iter().zip(&values) {
                run.set(key.as_str(), v.as_str());
            }
            run.set("seed", seed_text.as_str());
            if !explicit_noise_seed {
                run.set("noise_seed", seed_text.as_str());
            }
            let id = format!("r{:05}", plan.len());
            run.set("run_id", id.as_str());
            run.remove("command");
            let config = RunConfig::from_kv(&run)?;
            plan.push(PlannedRun { id, values, seed, config });
        }
        // Odometer increment, last axis fastest.
        for d in (0..axes.len()).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].1.len() {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok((axes.into_iter().map(|(k, _)| k).collect(), plan))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|e| e.to_string()).unwrap_or_default()
}

/// Status of one row of a sweep or comparison.
fn status_fields(r: &Result<RunOutcome>) -> (String, String) {
    match r {
        Ok(_) => ("ok".into(), String::new()),
        Err(e) => ("failed".into(), csv_field(&e.to_string())),
    }
}

/// Summary of a batch command: rows written and how many failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchSummary {
    pub runs: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// `sweep`: the cartesian product of every `sweep.<key>` list, times
/// `sweep.seeds`. Completed runs (matching manifest present) are skipped.
pub fn cmd_sweep(kv: &KvConfig, out: &Path) -> Result<BatchSummary> {
    let (axes, plan) = plan_sweep(kv)?;
    let runs_dir = out.join("runs");
    let mut manifest = kv.clone();
    manifest.set("command", "sweep");

    let skipped = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<RunOutcome>> = plan
        .par_iter()
        .map(|run| {
            let dir = runs_dir.join(&run.id);
            let expected = run.config.to_kv("reconstruct").to_text();
            if std::fs::read_to_string(dir.join(MANIFEST)).is_ok_and(|m| m == expected) {
                if let Some(done) = read_outcome(&dir) {
                    skipped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    return Ok(done);
                }
            }
            let problem = Problem::from_config(&run.config)?;
            run_into(&run.config, &problem, &dir)
        })
        .collect();

    let failed = results.iter().filter(|r| r.is_err()).count();
    let mut table = String::from("run_id");
    for a in &axes {
        table.push(',');
        table.push_str(a);
    }
    table.push_str(",seed,rel_l2_error,outer_iterations,inner_iterations,wall_time_ms,status,message\n");
    for (run, r) in plan.iter().zip(&results) {
        table.push_str(&run.id);
        for v in &run.values {
            table.push(',');
            table.push_str(&csv_field(v));
        }
        let (status, message) = status_fields(r);
        let o = r.as_ref().ok();
        table.push_str(&format!(
            ",{},{},{},{},{},{status},{message}\n",
            run.seed,
            fmt_opt(o.and_then(|o| o.rel_l2_error)),
            o.map(|o| o.outer_iterations.to_string()).unwrap_or_default(),
            o.map(|o| o.inner_iterations.to_string()).unwrap_or_default(),
            o.map(|o| format!("{:.3}", o.wall_time_ms)).unwrap_or_default(),
        ));
    }
    write_text(&out.join("sweep.csv"), &table)?;
    for (run, r) in plan.iter().zip(&results) {
        if let Err(e) = r {
            warn!("{} failed: {e}", run.id);
        }
    }
    write_text(&out.join(MANIFEST), &manifest.to_text())?;
    Ok(BatchSummary {
        runs: plan.len(),
        skipped: skipped.into_inner(),
        failed,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct CompareRow {
    angles: u64,
    seed: u64,
    method: Method,
    dir: PathBuf,
    outcome: Result<RunOutcome>,
}

/// `compare`: every method of `compare.methods` on shared noisy sinograms,
/// one per entry of `compare.angles` x `compare.seeds`.
pub fn cmd_compare(kv: &KvConfig, out: &Path) -> Result<BatchSummary> {
    kv.check_keys(RUN_KEYS, &["compare."])?;
    for (key, _) in kv.iter() {
        if let Some(rest) = key.strip_prefix("compare.") {
            if !matches!(rest, "methods" | "seeds" | "angles") {
                return config_err(format!("unknown config key '{key}'"));
            }
        }
    }
    if kv.contains("method") || kv.contains("sinogram") {
        return config_err("compare sets 'method' and 'sinogram' itself; use compare.methods");
    }
    let methods: Vec<Method> = match kv.get("compare.methods") {
        Some(v) => parse_list("compare.methods", v)?
            .iter()
            .map(|m| m.parse().map_err(|e: agtv_core::Error| CliError::Config(e.to_string())))
            .collect::<Result<_>>()?,
        None => Method::ALL.to_vec(),
    };
    let parse_all = |key: &str, default: Vec<String>| -> Result<Vec<u64>> {
        let items = match kv.get(key) {
            Some(v) => parse_list(key, v)?,
            None => default,
        };
        items
            .iter()
            .map(|s| s.parse().map_err(|e| CliError::Config(format!("{key} '{s}': {e}"))))
            .collect()
    };
    let seeds = parse_all("compare.seeds", (0..5).map(|s: u64| s.to_string()).collect())?;
    let angle_counts = parse_all("compare.angles", vec![kv.get("angles").unwrap_or("36").to_string()])?;

    let mut base = kv.clone();
    for key in ["compare.methods", "compare.seeds", "compare.angles", "command"] {
        base.remove(key);
    }
    let explicit_noise_seed = base.contains("noise_seed");
    let mut manifest = kv.clone();
    manifest.set("command", "compare");

    let mut rows: Vec<CompareRow> = Vec::new();
    let mut profiles = String::from("angles,seed,method,row,index,value\n");
    let mut raps_rows = String::from("angles,seed,method,bin,power\n");
    for &angles in &angle_counts {
        for &seed in &seeds {
            let mut group = base.clone();
            group.set("angles", angles.to_string());
            group.set("seed", seed.to_string());
            if !explicit_noise_seed {
                group.set("noise_seed", seed.to_string());
            }
            let data_cfg = RunConfig::from_kv(&group)?;
            let gdir = out.join(format!("a{angles}_s{seed}"));
            let truth = ground_truth(&data_cfg)?;
            let a = ProjectionMatrix::build(data_cfg.n, &data_cfg.angle_list(), data_cfg.rays)?;
            let noisy = noisy_sinogram(&data_cfg, &a, &truth)?;
            let sino_path = gdir.join("sinogram.sin");
            write_atomic(&sino_path, |w| core_io(&sino_path, noisy.write_raw(w)))?;
            write_image(&gdir.join("truth.img"), &truth)?;
            // Every method reads the same file.
            let problem = Problem {
                a,
                b: read_sinogram(&sino_path)?,
                truth: Some(truth),
            };

            let configs: Vec<(Method, RunConfig, PathBuf)> = methods
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let mut run = group.clone();
                    run.set("method", m.name());
                    run.set("run_id", format!("a{angles}_s{seed}_{m}"));
                    Ok((m, RunConfig::from_kv(&run)?, gdir.join(format!("{i:02}_{m}"))))
                })
                .collect::<Result<_>>()?;
            let outcomes: Vec<Result<RunOutcome>> = configs
                .par_iter()
                .map(|(_, rc, dir)| run_into(rc, &problem, dir))
                .collect();

            let truth = problem.truth.as_ref().expect("compare always has ground truth");
            let truth_report = evaluate(truth, None, data_cfg.profile_row)?;
            for (i, v) in truth_report.profile.iter().enumerate() {
                profiles.push_str(&format!("{angles},{seed},truth,{},{i},{v}\n", data_cfg.profile_row));
            }
            for ((m, rc, dir), outcome) in configs.into_iter().zip(outcomes) {
                if outcome.is_ok() {
                    let img = read_image(&dir.join("recon.img"))?;
                    let report = evaluate(&img, None, rc.profile_row)?;
                    for (i, v) in report.profile.iter().enumerate() {
                        profiles.push_str(&format!("{angles},{seed},{m},{},{i},{v}\n", rc.profile_row));
                    }
                    for (i, v) in report.raps.iter().enumerate() {
                        raps_rows.push_str(&format!("{angles},{seed},{m},{i},{v}\n"));
                    }
                }
                rows.push(CompareRow {
                    angles,
                    seed,
                    method: m,
                    dir,
                    outcome,
                });
            }
        }
    }

    let mut table = String::from(
        "angles,seed,method,rel_l2_error,outer_iterations,inner_iterations,wall_time_ms,status,message,run_dir\n",
    );
    for r in &rows {
        let (status, message) = status_fields(&r.outcome);
        let o = r.outcome.as_ref().ok();
        let rel_dir = r.dir.strip_prefix(out).unwrap_or(&r.dir);
        table.push_str(&format!(
            "{},{},{},{},{},{},{},{status},{message},{}\n",
            r.angles,
            r.seed,
            r.method,
            fmt_opt(o.and_then(|o| o.rel_l2_error)),
            o.map(|o| o.outer_iterations.to_string()).unwrap_or_default(),
            o.map(|o| o.inner_iterations.to_string()).unwrap_or_default(),
            o.map(|o| format!("{:.3}", o.wall_time_ms)).unwrap_or_default(),
            csv_field(&rel_dir.display().to_string()),
        ));
        if let Err(e) = &r.outcome {
            warn!("{} on {} views, seed {}: {e}", r.method, r.angles, r.seed);
        }
    }
    let mut summary = String::from("angles,method,runs,mean_rel_l2_error,std_rel_l2_error\n");
    for &angles in &angle_counts {
        for m in &methods {
            // Duplicate method entries are summarized once.
            if summary.contains(&format!("\n{angles},{m},")) {
                continue;
            }
            let errs: Vec<f64> = rows
                .iter()
                .filter(|r| r.angles == angles && r.method == *m)
                .filter_map(|r| r.outcome.as_ref().ok().and_then(|o| o.rel_l2_error))
                .collect();
            if errs.is_empty() {
                summary.push_str(&format!("{angles},{m},0,,\n"));
            } else {
                let (mean, std) = mean_std(&errs);
                summary.push_str(&format!("{angles},{m},{},{mean},{std}\n", errs.len()));
            }
        }
    }
    write_text(&out.join("compare.csv"), &table)?;
    write_text(&out.join("summary.csv"), &summary)?;
    write_text(&out.join("profiles.csv"), &profiles)?;
    write_text(&out.join("raps.csv"), &raps_rows)?;
    write_text(&out.join(MANIFEST), &manifest.to_text())?;
    Ok(BatchSummary {
        runs: rows.len(),
        skipped: 0,
        failed: rows.iter().filter(|r| r.outcome.is_err()).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kv(text: &str) -> KvConfig {
        KvConfig::parse(text).unwrap()
    }

    #[test]
    fn sweep_plan_is_cartesian() {
        let (axes, plan) =
            plan_sweep(&kv("method = fbp\nsweep.lambda = 0.1,0.2\nsweep.gamma = 1,2,3\nsweep.seeds = 4,5\n")).unwrap();
        assert_eq!(axes, ["gamma", "lambda"]);
        assert_eq!(plan.len(), 12);
        assert_eq!(plan[0].values, ["1", "0.1"]);
        assert_eq!((plan[0].seed, plan[1].seed), (4, 5));
        assert_eq!(plan[2].values, ["1", "0.2"]);
        assert_eq!(plan[11].values, ["3", "0.2"]);
        assert_eq!(plan[3].config.noise_seed, 5);
        assert_eq!(plan[3].config.solver.lambda, 0.2);
        let ids: std::collections::BTreeSet<_> = plan.iter().map(|p| p.id.clone()).collect();
        assert_eq!(ids.len(), 12);
    }

    #[test]
    fn sweep_plan_errors() {
        assert!(matches!(plan_sweep(&kv("lambda = 0.1\n")), Err(CliError::Config(_))));
        assert!(matches!(
            plan_sweep(&kv("sweep.lambda = linspace(0.1, 1, 10)\nsweep.gamma = logspace(0.1, 10, 10)\nsweep.cap = 50\n")),
            Err(CliError::Config(m)) if m.contains("100 runs")
        ));
        assert!(plan_sweep(&kv("sweep.colour = 1,2\n")).is_err());
        assert!(plan_sweep(&kv("sweep.lambda = -1,2\n")).is_err());
    }

    #[test]
    fn std_is_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
