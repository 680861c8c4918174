//! Flat `key = value` configuration and its resolution into run settings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use agtv_core::fbp::FbpConfig;
use agtv_core::phantom::SheppLoganVariant;
use agtv_core::solvers::{ArtMode, BetaRule, Method, SirtMode, SolverConfig};

use crate::error::{config_err, CliError, Result};

/// Keys accepted by single-run commands. Sweep and compare add prefixed keys.
pub const RUN_KEYS: &[&str] = &[
    "command",
    "run_id",
    "phantom",
    "image",
    "sinogram",
    "truth",
    "n",
    "angles",
    "angle_range",
    "rays",
    "noise",
    "noise_level",
    "noise_seed",
    "method",
    "seed",
    "profile_row",
    "lambda",
    "gamma",
    "tau1",
    "tau2",
    "tau3",
    "epsilon",
    "delta",
    "inner_iters",
    "outer_iters",
    "k",
    "patch_side",
    "knn_probes",
    "knn_trees",
    "eta",
    "wavelet_levels",
    "log_objective",
    "beta_rule",
    "power_iters",
    "power_tol",
    "fbp_crop",
    "art_mode",
    "sirt_mode",
    "version",
];

/// Ordered `key = value` pairs. Lines starting with `#` are comments.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return config_err(format!("line {}: expected key = value, got '{line}'", lineno + 1));
            };
            let key = k.trim();
            if key.is_empty() {
                return config_err(format!("line {}: empty key", lineno + 1));
            }
            entries.insert(key.to_string(), v.trim().to_string());
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Parses `value` for `key`, or returns `None` when the key is absent.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("{key} = '{v}': {e}"))),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }

    /// Rejects keys outside `allowed` and outside the given prefixes.
    pub fn check_keys(&self, allowed: &[&str], prefixes: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            let known = allowed.contains(&key.as_str())
                || prefixes
                    .iter()
                    .any(|p| key.strip_prefix(p).is_some_and(|rest| !rest.is_empty()));
            if !known {
                return config_err(format!("unknown config key '{key}'"));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses a list value: comma-separated numbers, `linspace(a, b, n)` or
/// `logspace(a, b, n)` (endpoints given as values, not exponents).
pub fn parse_list(key: &str, value: &str) -> Result<Vec<String>> {
    let v = value.trim();
    for (name, log) in [("linspace", false), ("logspace", true)] {
        if let Some(args) = v.strip_prefix(name) {
            let inner = args
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| CliError::Config(format!("{key}: malformed {name}(a, b, n)")))?;
            let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return config_err(format!("{key}: {name} needs three arguments"));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| CliError::Config(format!("{key}: '{s}': {e}")))
            };
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let count: usize = parts[2]
                .parse()
                .map_err(|e| CliError::Config(format!("{key}: count '{}': {e}", parts[2])))?;
            if count == 0 || (log && (a <= 0.0 || b <= 0.0)) {
                return config_err(format!("{key}: invalid {name} arguments"));
            }
            return Ok((0..count)
                .map(|i| {
                    let t = if count == 1 { 0.0 } else { i as f64 / (count - 1) as f64 };
                    let x = if log {
                        (a.ln() + t * (b.ln() - a.ln())).exp()
                    } else {
                        a + t * (b - a)
                    };
                    // Hit the endpoints exactly.
                    if i == 0 {
                        a
                    } else if i + 1 == count {
                        b
                    } else {
                        x
                    }
                })
                .map(|x| x.to_string())
                .collect());
        }
    }
    let items: Vec<String> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if items.is_empty() {
        return config_err(format!("{key}: empty list"));
    }
    Ok(items)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhantomSource {
    SheppLogan(SheppLoganVariant),
    Spec(PathBuf),
}

impl PhantomSource {
    fn parse(v: &str) -> Self {
        match v {
            "shepp_logan" | "shepp_logan_modified" => PhantomSource::SheppLogan(SheppLoganVariant::Modified),
            "shepp_logan_original" => PhantomSource::SheppLogan(SheppLoganVariant::Original),
            path => PhantomSource::Spec(PathBuf::from(path)),
        }
    }

    fn name(&self) -> String {
        match self {
            PhantomSource::SheppLogan(SheppLoganVariant::Modified) => "shepp_logan".into(),
            PhantomSource::SheppLogan(SheppLoganVariant::Original) => "shepp_logan_original".into(),
            PhantomSource::Spec(p) => p.display().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    None,
    Poisson,
    Gaussian,
}

impl FromStr for NoiseModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(NoiseModel::None),
            "poisson" => Ok(NoiseModel::Poisson),
            "gaussian" => Ok(NoiseModel::Gaussian),
            _ => Err("expected none, poisson or gaussian".into()),
        }
    }
}

impl NoiseModel {
    fn name(self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::Poisson => "poisson",
            NoiseModel::Gaussian => "gaussian",
        }
    }
}

/// Fully resolved settings of one reconstruction run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub run_id: String,
    pub phantom: PhantomSource,
    /// Ground-truth image file used instead of a phantom.
    pub image: Option<PathBuf>,
    /// Measured sinogram file; skips projection and noise.
    pub sinogram: Option<PathBuf>,
    /// Ground truth for metrics when `sinogram` is given.
    pub truth: Option<PathBuf>,
    pub n: usize,
    pub angles: usize,
    pub angle_range: f64,
    pub rays: usize,
    pub noise: NoiseModel,
    pub noise_level: f64,
    pub noise_seed: u64,
    pub method: Method,
    pub profile_row: usize,
    pub solver: SolverConfig<f64>,
}

const BETA_RULES: [(&str, BetaRule); 2] = [
    ("spectral_norm_squared", BetaRule::SpectralNormSquared),
    ("spectral_norm", BetaRule::SpectralNorm),
];
const ART_MODES: [(&str, ArtMode); 2] = [("cyclic", ArtMode::Cyclic), ("randomized", ArtMode::Randomized)];
const SIRT_MODES: [(&str, SirtMode); 2] = [("cimmino", SirtMode::Cimmino), ("sart", SirtMode::Sart)];

fn parse_enum<T: Copy>(table: &[(&str, T)], key: &str, v: &str) -> Result<T> {
    table.iter().find(|(name, _)| *name == v).map(|&(_, t)| t).ok_or_else(|| {
        let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("{key} = '{v}': expected one of {}", names.join(", ")))
    })
}

fn enum_name<T: Copy + PartialEq>(table: &[(&'static str, T)], v: T) -> &'static str {
    table.iter().find(|(_, t)| *t == v).map(|(n, _)| *n).unwrap_or("")
}

fn auto_or<T: FromStr>(kv: &KvConfig, key: &str, auto: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match kv.get(key) {
        Some(v) if v == auto => Ok(None),
        _ => kv.parse_opt(key),
    }
}

fn opt_text<T: std::fmt::Display>(v: &Option<T>, auto: &str) -> String {
    v.as_ref().map_or_else(|| auto.to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Resolves `kv` on top of the method's published defaults.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        kv.check_keys(RUN_KEYS, &[])?;
        let method: Method = match kv.get("method") {
            Some(m) => m.parse().map_err(|e: agtv_core::Error| CliError::Config(e.to_string()))?,
            None => Method::Agtv,
        };
        let n: usize = kv.parse_or("n", 64)?;
        let angles: usize = kv.parse_or("angles", 36)?;
        let rays: usize = kv.parse_or("rays", n)?;
        let seed: u64 = kv.parse_or("seed", 0)?;
        if n == 0 || angles == 0 || rays == 0 {
            return config_err("n, angles and rays must be positive");
        }

        let mut s = method.default_config::<f64>();
        s.seed = seed;
        s.lambda = kv.parse_or("lambda", s.lambda)?;
        s.gamma = kv.parse_or("gamma", s.gamma)?;
        s.tau1 = auto_or(kv, "tau1", "auto")?.or(s.tau1);
        s.tau2 = auto_or(kv, "tau2", "auto")?.or(s.tau2);
        s.tau3 = auto_or(kv, "tau3", "auto")?.or(s.tau3);
        s.epsilon = kv.parse_or("epsilon", s.epsilon)?;
        s.delta = kv.parse_or("delta", s.delta)?;
        s.inner_iters = kv.parse_or("inner_iters", s.inner_iters)?;
        s.outer_iters = kv.parse_or("outer_iters", s.outer_iters)?;
        s.k = kv.parse_or("k", s.k)?;
        s.patch_side = kv.parse_or("patch_side", s.patch_side)?;
        if kv.contains("knn_probes") {
            s.knn_probes = auto_or(kv, "knn_probes", "exhaustive")?;
        }
        s.knn_trees = kv.parse_or("knn_trees", s.knn_trees)?;
        s.eta = kv.parse_or("eta", s.eta)?;
        if kv.contains("wavelet_levels") {
            s.wavelet_levels = auto_or(kv, "wavelet_levels", "auto")?;
        }
        s.log_objective = kv.parse_or("log_objective", s.log_objective)?;
        if let Some(v) = kv.get("beta_rule") {
            s.beta_rule = parse_enum(&BETA_RULES, "beta_rule", v)?;
        }
        s.power_iters = kv.parse_or("power_iters", s.power_iters)?;
        s.power_tol = kv.parse_or("power_tol", s.power_tol)?;
        s.fbp = FbpConfig {
            crop_fraction: kv.parse_or("fbp_crop", s.fbp.crop_fraction)?,
            ..s.fbp
        };
        if let Some(v) = kv.get("art_mode") {
            s.art_mode = parse_enum(&ART_MODES, "art_mode", v)?;
        }
        if let Some(v) = kv.get("sirt_mode") {
            s.sirt_mode = parse_enum(&SIRT_MODES, "sirt_mode", v)?;
        }
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if matches!(method, Method::Art | Method::Sirt) && !(s.eta > 0.0 && s.eta < 2.0) {
            return config_err(format!("eta must lie in (0, 2), got {}", s.eta));
        }

        let profile_row: usize = kv.parse_or("profile_row", n / 2)?;
        if profile_row >= n {
            return config_err(format!("profile_row {profile_row} outside image of side {n}"));
        }
        let noise_level: f64 = kv.parse_or("noise_level", 0.1)?;
        let noise: NoiseModel = kv.parse_or("noise", NoiseModel::Poisson)?;
        let angle_range: f64 = kv.parse_or("angle_range", 180.0)?;
        if !(angle_range > 0.0 && angle_range <= 180.0) {
            return config_err("angle_range must lie in (0, 180]");
        }
        Ok(RunConfig {
            run_id: kv.get("run_id").unwrap_or("run").to_string(),
            phantom: PhantomSource::parse(kv.get("phantom").unwrap_or("shepp_logan")),
            image: kv.get("image").map(PathBuf::from),
            sinogram: kv.get("sinogram").map(PathBuf::from),
            truth: kv.get("truth").map(PathBuf::from),
            n,
            angles,
            angle_range,
            rays,
            noise,
            noise_level,
            noise_seed: kv.parse_or("noise_seed", seed)?,
            method,
            profile_row,
            solver: s,
        })
    }

    pub fn angle_list(&self) -> Vec<f64> {
        (0..self.angles)
            .map(|k| k as f64 * self.angle_range / self.angles as f64)
            .collect()
    }

    /// Every setting, resolved, as a key/value set that reproduces the run.
    pub fn to_kv(&self, command: &str) -> KvConfig {
        let s = &self.solver;
        let mut kv = KvConfig::default();
        kv.set("command", command);
        kv.set("version", env!("CARGO_PKG_VERSION"));
        kv.set("run_id", &self.run_id);
        kv.set("phantom", self.phantom.name());
        for (key, path) in [("image", &self.image), ("sinogram", &self.sinogram), ("truth", &self.truth)] {
            if let Some(p) = path {
                kv.set(key, p.display().to_string());
            }
        }
        kv.set("n", self.n.to_string());
        kv.set("angles", self.angles.to_string());
        kv.set("angle_range", self.angle_range.to_string());
        kv.set("rays", self.rays.to_string());
        kv.set("noise", self.noise.name());
        kv.set("noise_level", self.noise_level.to_string());
        kv.set("noise_seed", self.noise_seed.to_string());
        kv.set("method", self.method.name());
        kv.set("seed", s.seed.to_string());
        kv.set("profile_row", self.profile_row.to_string());
        kv.set("lambda", s.lambda.to_string());
        kv.set("gamma", s.gamma.to_string());
        kv.set("tau1", opt_text(&s.tau1, "auto"));
        kv.set("tau2", opt_text(&s.tau2, "auto"));
        kv.set("tau3", opt_text(&s.tau3, "auto"));
        kv.set("epsilon", s.epsilon.to_string());
        kv.set("delta", s.delta.to_string());
        kv.set("inner_iters", s.inner_iters.to_string());
        kv.set("outer_iters", s.outer_iters.to_string());
        kv.set("k", s.k.to_string());
        kv.set("patch_side", s.patch_side.to_string());
        kv.set("knn_probes", opt_text(&s.knn_probes, "exhaustive"));
        kv.set("knn_trees", s.knn_trees.to_string());
        kv.set("eta", s.eta.to_string());
        kv.set("wavelet_levels", opt_text(&s.wavelet_levels, "auto"));
        kv.set("log_objective", s.log_objective.to_string());
        kv.set("beta_rule", enum_name(&BETA_RULES, s.beta_rule));
        kv.set("power_iters", s.power_iters.to_string());
        kv.set("power_tol", s.power_tol.to_string());
        kv.set("fbp_crop", s.fbp.crop_fraction.to_string());
        kv.set("art_mode", enum_name(&ART_MODES, s.art_mode));
        kv.set("sirt_mode", enum_name(&SIRT_MODES, s.sirt_mode));
        kv
    }
}
