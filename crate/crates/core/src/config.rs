//! Run configuration: a TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernel::{KernelSpec, RadialProfile};
use crate::solver::TimeScheme;

/// Right-hand side `f` on Ω̄.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rhs {
    Constant {
        value: f64,
    },
    /// Piecewise-linear interpolation of `[x, f(x)]` points, held constant past the ends.
    Table {
        points: Vec<[f64; 2]>,
    },
}

impl Default for Rhs {
    fn default() -> Self {
        Rhs::Constant { value: 1.0 }
    }
}

impl Rhs {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Rhs::Constant { value } => *value,
            Rhs::Table { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if x <= first[0] {
                    return first[1];
                }
                if x >= last[0] {
                    return last[1];
                }
                let k = points.partition_point(|p| p[0] <= x);
                let (a, b) = (points[k - 1], points[k]);
                a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Rhs::Constant { value } if value.is_finite() => Ok(()),
            Rhs::Table { points }
                if !points.is_empty() && points.windows(2).all(|w| w[1][0] > w[0][0]) =>
            {
                Ok(())
            }
            _ => Err(Error::Config(
                "rhs must be finite with strictly increasing table abscissae".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub h_target: f64,
    #[serde(default = "default_truncation")]
    pub truncation_radius: f64,
}

fn default_truncation() -> f64 {
    4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Picard for integrable kernels, direct otherwise.
    #[default]
    Auto,
    Picard,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub method: SolveMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let p = crate::solver::PicardConfig::default();
        Self {
            method: SolveMethod::Auto,
            step: None,
            tol: p.tol,
            max_iter: p.max_iter,
        }
    }
}

impl SolverBlock {
    pub fn picard(&self) -> crate::solver::PicardConfig {
        crate::solver::PicardConfig {
            step: self.step,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Contraction,
    Linfty,
    Boundary,
    Jump,
    Equicontinuity,
    Convergence,
    Counterexample,
    Comparison,
    Isaacs,
    Parabolic,
}

impl StudyKind {
    pub const ALL: [StudyKind; 10] = [
        StudyKind::Contraction,
        StudyKind::Linfty,
        StudyKind::Boundary,
        StudyKind::Jump,
        StudyKind::Equicontinuity,
        StudyKind::Convergence,
        StudyKind::Counterexample,
        StudyKind::Comparison,
        StudyKind::Isaacs,
        StudyKind::Parabolic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Contraction => "contraction",
            StudyKind::Linfty => "linfty",
            StudyKind::Boundary => "boundary",
            StudyKind::Jump => "jump",
            StudyKind::Equicontinuity => "equicontinuity",
            StudyKind::Convergence => "convergence",
            StudyKind::Counterexample => "counterexample",
            StudyKind::Comparison => "comparison",
            StudyKind::Isaacs => "isaacs",
            StudyKind::Parabolic => "parabolic",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown study `{name}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsaacsBlock {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `coefficients[α][β]` is a radial table `[[r, a(r)], …]`.
    pub coefficients: Vec<Vec<Vec<[f64; 2]>>>,
}

impl IsaacsBlock {
    pub fn profiles(&self) -> Result<Vec<Vec<RadialProfile>>> {
        self.coefficients
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| RadialProfile::new(t, crate::kernel::Beyond::Hold))
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicBlock {
    pub dt: f64,
    /// Defaults to `50 · max{1, 1/‖K‖₁}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub scheme: TimeScheme,
}

/// Pass/fail limits applied to study outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub contraction_slack: f64,
    pub max_wall_time: f64,
    pub boundary_change: f64,
    pub jump_residual: f64,
    pub min_beta0: f64,
    pub envelope_ratio: f64,
    pub interior_reduction: f64,
    pub global_fraction: f64,
    pub margin_degradation: f64,
    pub parabolic_gap: f64,
    pub modulus_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            contraction_slack: 1e-3,
            max_wall_time: 300.0,
            boundary_change: 0.25,
            jump_residual: 0.05,
            min_beta0: 0.05,
            envelope_ratio: 0.25,
            interior_reduction: 4.0,
            global_fraction: 0.5,
            margin_degradation: 0.2,
            parabolic_gap: 1e-4,
            modulus_factor: 1.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyBlock {
    pub kind: StudyKind,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Per-member spacing `h = h_ratio · ε`; the grid block's `h_target` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ratio: Option<f64>,
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default = "default_strip")]
    pub strip_width: f64,
    #[serde(default = "default_depth")]
    pub interior_depth: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_reference_h")]
    pub reference_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isaacs: Option<IsaacsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parabolic: Option<ParabolicBlock>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_strip() -> f64 {
    0.3
}
fn default_depth() -> f64 {
    0.25
}
fn default_alpha() -> f64 {
    1.5
}
fn default_samples() -> usize {
    50
}
fn default_seed() -> u64 {
    20_240_601
}
fn default_reference_h() -> f64 {
    1e-3
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierMode {
    /// Search `(β₀, δ̄)` over the study ε list and re-check at `h/2`.
    #[default]
    FitBeta0,
    /// Certify one barrier given in `spec`.
    Check,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierBlock {
    #[serde(default)]
    pub mode: BarrierMode,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<crate::barriers::BarrierSpec>,
    /// Right-hand side the barrier must dominate.
    #[serde(default)]
    pub target: f64,
    /// Strip `{d ≤ strip_width}` of Ω̄ to test; the whole of Ω̄ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_width: Option<f64>,
    #[serde(default = "default_degradation")]
    pub margin_degradation: f64,
}

fn default_degradation() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub domain: Domain,
    pub grid: GridBlock,
    #[serde(default)]
    pub rhs: Rhs,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<BarrierBlock>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A config error annotated with the source line of the offending key, if known.
fn at_key(source: &str, key: &str, msg: impl std::fmt::Display) -> Error {
    match find_key_line(source, key) {
        Some(line) => Error::Config(format!("line {line}: `{key}`: {msg}")),
        None => Error::Config(format!("`{key}`: {msg}")),
    }
}

/// Line (1-based) where a dotted key is assigned, following `[table]` headers.
pub fn find_key_line(source: &str, dotted: &str) -> Option<usize> {
    let (table, leaf) = match dotted.rsplit_once('.') {
        Some((t, l)) => (t, l),
        None => ("", dotted),
    };
    let mut current = String::new();
    for (n, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') && !line.starts_with("[[") {
            current = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            let k = k.trim();
            let full = if current.is_empty() {
                k.to_string()
            } else {
                format!("{current}.{k}")
            };
            if full == dotted || (current == table && k == leaf) {
                return Some(n + 1);
            }
        }
    }
    None
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{assignment}`")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("--set {key}: `{p}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses, applies overrides, and validates.
    pub fn parse(source: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(source).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = if overrides.is_empty() {
            toml::from_str(source).map_err(|e| Error::Config(e.to_string()))?
        } else {
            table
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(format!("after --set: {e}")))?
        };
        cfg.validate(source)?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::parse(&src, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs serialize")
    }

    /// Cross-field checks done before any computation.
    pub fn validate(&self, source: &str) -> Result<()> {
        self.rhs
            .validate()
            .map_err(|e| at_key(source, "rhs.kind", e))?;
        let g = &self.grid;
        if !(g.h_target > 0.0) {
            return Err(at_key(source, "grid.h_target", "must be positive"));
        }
        if !(g.truncation_radius > 0.0) {
            return Err(at_key(source, "grid.truncation_radius", "must be positive"));
        }
        if let Some(e) = self.kernel.epsilon() {
            if matches!(self.kernel, KernelSpec::ZeroOrder { .. })
                && g.h_target > e / 4.0 * (1.0 + 1e-12)
            {
                return Err(at_key(
                    source,
                    "grid.h_target",
                    format!("rule h ≤ epsilon/4 violated ({} > {e}/4)", g.h_target),
                ));
            }
        }
        if let Some(a) = self.solver.step {
            if !(a > 0.0) {
                return Err(at_key(source, "solver.step", "must be positive"));
            }
        }
        if !(self.solver.tol > 0.0) {
            return Err(at_key(source, "solver.tol", "must be positive"));
        }
        if let Some(s) = &self.study {
            for &e in &s.epsilons {
                if !(e > 0.0 && e < 1.0) {
                    return Err(at_key(
                        source,
                        "study.epsilons",
                        format!("epsilon {e} outside (0, 1)"),
                    ));
                }
                let h = s.h_ratio.map_or(g.h_target, |r| r * e);
                if h > e / 4.0 * (1.0 + 1e-12) {
                    return Err(at_key(
                        source,
                        "study.epsilons",
                        format!("rule h ≤ epsilon/4 violated for epsilon {e} (h = {h})"),
                    ));
                }
            }
            if let Some(p) = &s.parabolic {
                if !(p.dt > 0.0) {
                    return Err(at_key(source, "study.parabolic.dt", "must be positive"));
                }
            }
            let needs_eps = !matches!(
                s.kind,
                StudyKind::Contraction | StudyKind::Comparison | StudyKind::Isaacs
            );
            if needs_eps && s.epsilons.is_empty() {
                return Err(at_key(
                    source,
                    "study.kind",
                    format!("study {} needs a nonempty epsilons list", s.kind.name()),
                ));
            }
            if s.kind == StudyKind::Isaacs && s.isaacs.is_none() {
                return Err(at_key(
                    source,
                    "study.kind",
                    "isaacs study needs a [study.isaacs] block",
                ));
            }
        }
        if let Some(b) = &self.barrier {
            for &e in &b.epsilons {
                let h = b.h_ratio.map_or(g.h_target, |r| r * e);
                if h > e / 4.0 * (1.0 + 1e-12) {
                    return Err(at_key(
                        source,
                        "barrier.epsilons",
                        format!("rule h ≤ epsilon/4 violated for epsilon {e} (h = {h})"),
                    ));
                }
            }
            if b.mode == BarrierMode::Check {
                let spec = b.spec.as_ref().ok_or_else(|| {
                    at_key(source, "barrier.mode", "check mode needs barrier.spec")
                })?;
                spec.validate(self.kernel.sigma())
                    .map_err(|e| at_key(source, "barrier.spec", e))?;
            }
        }
        Ok(())
    }
}
