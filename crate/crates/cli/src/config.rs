//! Experiment configuration: an INI file plus `--set section.key=value`
//! overrides.
//!
//! ```ini
//! [instance]
//! name = sin2d          ; const2d | const3d | sin2d | sin3d | sampled | observers
//! m = 101, 201, 401
//! s = 0.95, 0.7         ; optional, instance default otherwise
//! t = 0.5, 0.5
//! amplitude = 0.35      ; sin3d only
//! path = city.pgm       ; sampled only (CSV or PGM)
//! reference_m = 1601    ; fine grid for E_d when no closed form exists
//!
//! [methods]
//! list = fmm, fmm_stop, bidir, sa, aa, aa_bb
//!
//! [heuristic]
//! kind = oracle         ; zero | naive | oracle | coarse_grid | higher_speed
//! lambda = 0, 0.5, 1
//! ratio = 0.25          ; coarse grid spacing ratio
//! cache = true
//!
//! [psi]
//! kind = psi3           ; psi1 | psi2 | psi3 | path | refined | value | inf
//! value = 1.5           ; kind = value only
//! inflate = false       ; multiply by (1 + eps_tol h^mu) before use
//! eps_tol = 0.25        ; default 1/4 (2D), 1/3 (3D)
//! mu = 0.5
//!
//! [run]
//! repeat = 10
//! threads = 1
//! seed = 0
//! output = report.csv   ; stdout when absent
//! json = report.json
//! trajectories = traj/  ; one CSV polyline per restricted run
//! deterministic = false ; write wall_time = 0
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eikonal_astar::heuristics::HeuristicKind;
use ini::Ini;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum InstanceSpec {
    Const2d,
    Const3d,
    Sin2d,
    Sin3d { amplitude: f64 },
    Sampled { path: PathBuf },
    Observers,
}

impl InstanceSpec {
    pub fn dim(&self) -> usize {
        match self {
            InstanceSpec::Const3d | InstanceSpec::Sin3d { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Fmm,
    FmmStop,
    Bidir,
    Sa,
    Aa,
    AaBb,
}

impl MethodSpec {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodSpec::Fmm => "fmm",
            MethodSpec::FmmStop => "fmm_stop",
            MethodSpec::Bidir => "bidir",
            MethodSpec::Sa => "sa",
            MethodSpec::Aa => "aa",
            MethodSpec::AaBb => "aa_bb",
        }
    }

    /// Whether the method reads the heuristic (and so runs once per lambda).
    pub fn restricted(self) -> bool {
        matches!(self, MethodSpec::Sa | MethodSpec::Aa | MethodSpec::AaBb)
    }

    fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "fmm" => MethodSpec::Fmm,
            "fmm_stop" => MethodSpec::FmmStop,
            "bidir" => MethodSpec::Bidir,
            "sa" => MethodSpec::Sa,
            "aa" => MethodSpec::Aa,
            "aa_bb" => MethodSpec::AaBb,
            _ => return Err(CliError::config("methods.list", format!("unknown method {s:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    Psi1,
    Psi2,
    Psi3,
    /// Cost integrated along the time-optimal path of the base speed
    /// (observers only).
    Path,
    /// Same, along the path refined in a tube around it (observers only).
    Refined,
    Value(f64),
    Inf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub s: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub m: Vec<usize>,
    pub reference_m: Option<usize>,
    pub methods: Vec<MethodSpec>,
    pub heuristic: HeuristicKind,
    pub lambdas: Vec<f64>,
    pub ratio: f64,
    pub cache_phi: bool,
    pub psi: PsiSpec,
    pub inflate_psi: bool,
    pub eps_tol: Option<f64>,
    pub mu: f64,
    pub repeat: usize,
    pub threads: usize,
    pub seed: u64,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub json: Option<PathBuf>,
    #[serde(skip)]
    pub trajectories: Option<PathBuf>,
    pub deterministic: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instance: InstanceSpec::Const2d,
            s: None,
            t: None,
            m: vec![101],
            reference_m: None,
            methods: vec![MethodSpec::FmmStop, MethodSpec::Sa, MethodSpec::Aa],
            heuristic: HeuristicKind::Naive,
            lambdas: vec![1.0],
            ratio: 0.25,
            cache_phi: true,
            psi: PsiSpec::Psi1,
            inflate_psi: true,
            eps_tol: None,
            mu: 0.5,
            repeat: 10,
            threads: 1,
            seed: 0,
            output: None,
            json: None,
            trajectories: None,
            deterministic: false,
        }
    }
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("instance", &["name", "m", "s", "t", "amplitude", "path", "reference_m"]),
    ("methods", &["list"]),
    ("heuristic", &["kind", "lambda", "ratio", "cache"]),
    ("psi", &["kind", "value", "inflate", "eps_tol", "mu"]),
    ("run", &["repeat", "threads", "seed", "output", "json", "trajectories", "deterministic"]),
];

fn list<T, F: Fn(&str) -> CliResult<T>>(v: &str, each: F) -> CliResult<Vec<T>> {
    v.split(',').map(str::trim).filter(|x| !x.is_empty()).map(each).collect()
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::config(key, format!("cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::config(key, format!("expected a boolean, got {v:?}"))),
    }
}

/// Applies `section.key=value` overrides to a parsed INI document.
pub fn apply_overrides(doc: &mut Ini, overrides: &[String]) -> CliResult<()> {
    for o in overrides {
        let (path, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::config(o, "override must look like section.key=value".into()))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| CliError::config(path, "override key must be section.key".into()))?;
        doc.with_section(Some(section)).set(key, value.trim());
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config("--config", format!("{}: {e}", p.display())))?;
                Ini::load_from_str(&text).map_err(|e| CliError::config("--config", e.to_string()))?
            }
            None => Ini::new(),
        };
        apply_overrides(&mut doc, overrides)?;
        Self::from_ini(&doc)
    }

    pub fn from_ini(doc: &Ini) -> CliResult<Self> {
        for (section, props) in doc.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(CliError::config(k, "key outside of any section".into()));
                }
                continue;
            };
            let allowed = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .ok_or_else(|| CliError::config(section, "unknown section".into()))?
                .1;
            for (k, _) in props.iter() {
                if !allowed.contains(&k) {
                    return Err(CliError::config(&format!("{section}.{k}"), "unknown key".into()));
                }
            }
        }
        let get = |section: &str, key: &str| doc.section(Some(section)).and_then(|p| p.get(key));
        let mut cfg = ExperimentConfig::default();

        if let Some(name) = get("instance", "name") {
            cfg.instance = match name.trim() {
                "const2d" => InstanceSpec::Const2d,
                "const3d" => InstanceSpec::Const3d,
                "sin2d" => InstanceSpec::Sin2d,
                "sin3d" => InstanceSpec::Sin3d {
                    amplitude: get("instance", "amplitude")
                        .map(|v| number("instance.amplitude", v))
                        .transpose()?
                        .unwrap_or(0.35),
                },
                "sampled" => InstanceSpec::Sampled {
                    path: get("instance", "path")
                        .map(|p| PathBuf::from(p.trim()))
                        .ok_or_else(|| CliError::config("instance.path", "required for sampled".into()))?,
                },
                "observers" => InstanceSpec::Observers,
                other => return Err(CliError::config("instance.name", format!("unknown instance {other:?}"))),
            };
        }
        if let Some(v) = get("instance", "m") {
            cfg.m = list(v, |x| number("instance.m", x))?;
        }
        for (key, slot) in [("s", &mut cfg.s), ("t", &mut cfg.t)] {
            if let Some(v) = get("instance", key) {
                *slot = Some(list(v, |x| number(&format!("instance.{key}"), x))?);
            }
        }
        if let Some(v) = get("instance", "reference_m") {
            cfg.reference_m = Some(number("instance.reference_m", v)?);
        }
        if let Some(v) = get("methods", "list") {
            cfg.methods = list(v, MethodSpec::parse)?;
        }
        if let Some(v) = get("heuristic", "kind") {
            cfg.heuristic = v
                .trim()
                .parse()
                .map_err(|e: eikonal_astar::Error| CliError::config("heuristic.kind", e.to_string()))?;
        }
        if let Some(v) = get("heuristic", "lambda") {
            cfg.lambdas = list(v, |x| number("heuristic.lambda", x))?;
        }
        if let Some(v) = get("heuristic", "ratio") {
            cfg.ratio = number("heuristic.ratio", v)?;
        }
        if let Some(v) = get("heuristic", "cache") {
            cfg.cache_phi = flag("heuristic.cache", v)?;
        }
        if let Some(v) = get("psi", "kind") {
            cfg.psi = match v.trim() {
                "psi1" => PsiSpec::Psi1,
                "psi2" => PsiSpec::Psi2,
                "psi3" => PsiSpec::Psi3,
                "path" => PsiSpec::Path,
                "refined" => PsiSpec::Refined,
                "inf" => PsiSpec::Inf,
                "value" => PsiSpec::Value(number(
                    "psi.value",
                    get("psi", "value").ok_or_else(|| CliError::config("psi.value", "required for kind = value".into()))?,
                )?),
                other => return Err(CliError::config("psi.kind", format!("unknown overestimate {other:?}"))),
            };
        }
        if let Some(v) = get("psi", "inflate") {
            cfg.inflate_psi = flag("psi.inflate", v)?;
        }
        if let Some(v) = get("psi", "eps_tol") {
            cfg.eps_tol = Some(number("psi.eps_tol", v)?);
        }
        if let Some(v) = get("psi", "mu") {
            cfg.mu = number("psi.mu", v)?;
        }
        if let Some(v) = get("run", "repeat") {
            cfg.repeat = number("run.repeat", v)?;
        }
        if let Some(v) = get("run", "threads") {
            cfg.threads = number("run.threads", v)?;
        }
        if let Some(v) = get("run", "seed") {
            cfg.seed = number("run.seed", v)?;
        }
        cfg.output = get("run", "output").map(|p| PathBuf::from(p.trim()));
        cfg.json = get("run", "json").map(|p| PathBuf::from(p.trim()));
        cfg.trajectories = get("run", "trajectories").map(|p| PathBuf::from(p.trim()));
        if let Some(v) = get("run", "deterministic") {
            cfg.deterministic = flag("run.deterministic", v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let dim = self.instance.dim();
        if self.m.is_empty() || self.m.iter().any(|&m| m < 2) {
            return Err(CliError::config("instance.m", "need one or more sizes >= 2".into()));
        }
        for (key, p) in [("instance.s", &self.s), ("instance.t", &self.t)] {
            if let Some(p) = p {
                if p.len() != dim {
                    return Err(CliError::config(key, format!("expected {dim} coordinates, got {}", p.len())));
                }
            }
        }
        if matches!(self.instance, InstanceSpec::Sampled { .. }) && (self.s.is_none() || self.t.is_none()) {
            return Err(CliError::config("instance.s", "sampled instances need explicit s and t".into()));
        }
        if self.methods.is_empty() {
            return Err(CliError::config("methods.list", "empty".into()));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(CliError::config("heuristic.lambda", "values must lie in [0, 1]".into()));
        }
        if self.heuristic == HeuristicKind::HigherSpeed && self.instance != InstanceSpec::Observers {
            return Err(CliError::config(
                "heuristic.kind",
                "higher_speed is only defined for the observers instance".into(),
            ));
        }
        if matches!(self.psi, PsiSpec::Path | PsiSpec::Refined) && self.instance != InstanceSpec::Observers {
            return Err(CliError::config("psi.kind", "path/refined need the observers instance".into()));
        }
        if let PsiSpec::Value(v) = self.psi {
            if !(v >= 0.0) {
                return Err(CliError::config("psi.value", format!("{v} is not a valid overestimate")));
            }
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(CliError::config("heuristic.ratio", "must lie in (0, 1]".into()));
        }
        if let Some(e) = self.eps_tol {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(CliError::config("psi.eps_tol", "must be >= 0".into()));
            }
        }
        if !(0.0..=0.5).contains(&self.mu) {
            return Err(CliError::config("psi.mu", "must lie in [0, 1/2]".into()));
        }
        if self.repeat == 0 {
            return Err(CliError::config("run.repeat", "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn eps_tol_for(&self, dim: usize) -> f64 {
        self.eps_tol
            .unwrap_or_else(|| eikonal_astar::astar::default_eps_tol(dim))
    }

    /// Hex SHA-256 prefix of the canonical JSON form. Output paths are not
    /// part of it; everything that can change a number is.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Human-readable dump, used by `--print-config`.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", serde_json::to_string_pretty(self).expect("config serialises"));
        let _ = writeln!(s, "hash = {}", self.hash());
        s
    }
}
