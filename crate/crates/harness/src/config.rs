//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use semigabor::presets::{self, GaussianEnvelope, Grids};
use semigabor::{
    group_by_name, EvalMode, Grid1D, GridKind, GroupDescriptor, ProductGrid, SliceField, TransformKind, Window,
    DEFAULT_FULL_CAP,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::signal;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub kind: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsSpec {
    pub h: Option<Vec<AxisSpec>>,
    pub k: Option<Vec<AxisSpec>>,
    pub freq: Option<Vec<AxisSpec>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
    /// σ of the log-Gaussian H-bump used to lift WAV audio.
    pub lift_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub group: String,
    #[serde(default)]
    pub grids: GridsSpec,
    #[serde(default)]
    pub window: WindowSpec,
    #[serde(default)]
    pub signal: SignalSpec,
    pub transform: String,
    pub mode: Option<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub full_cap: Option<usize>,
    pub seed: Option<u64>,
    /// Write per-h magnitude CSVs during `analyze`.
    pub slices: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub plancherel: f64,
    pub reconstruction: f64,
    pub oracle_equivalence: f64,
    pub group_axioms: f64,
    pub interp: f64,
    pub orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            plancherel: 1e-2,
            reconstruction: 2e-2,
            oracle_equivalence: 1e-8,
            group_axioms: 1e-12,
            interp: 1e-3,
            orthogonality: 1e-2,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 6] =
        ["plancherel", "reconstruction", "oracle_equivalence", "group_axioms", "interp", "orthogonality"];

    /// Accepts `-` or `_` as separator.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Config(format!("tolerance `{name}` must be a positive finite number, got {value}")));
        }
        let slot = match name.replace('-', "_").as_str() {
            "plancherel" => &mut self.plancherel,
            "reconstruction" => &mut self.reconstruction,
            "oracle_equivalence" => &mut self.oracle_equivalence,
            "group_axioms" => &mut self.group_axioms,
            "interp" => &mut self.interp,
            "orthogonality" => &mut self.orthogonality,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown tolerance `{name}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

/// Parses a `NAME=VALUE` command-line override.
pub fn parse_tol_override(s: &str) -> Result<(String, f64)> {
    let (name, value) =
        s.split_once('=').ok_or_else(|| CliError::Config(format!("--tol expects NAME=VALUE, got `{s}`")))?;
    let value = value
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("--tol {name}: `{value}` is not a number")))?;
    Ok((name.trim().to_string(), value))
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub mode: Option<String>,
    pub tolerances: Vec<(String, f64)>,
    pub seed: Option<u64>,
}

/// A validated configuration with all grids, paths and defaults resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub group: GroupDescriptor,
    pub grids: Grids,
    pub kind: TransformKind,
    pub mode: Option<EvalMode>,
    pub tolerances: Tolerances,
    pub output: PathBuf,
    pub full_cap: usize,
    pub seed: u64,
    pub slices: bool,
    pub window: WindowSpec,
    pub signal: SignalSpec,
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: Config =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    resolve(config, &base, overrides)
}

fn grid_axes(specs: &[AxisSpec], what: &str) -> Result<ProductGrid> {
    let axes = specs
        .iter()
        .map(|a| {
            if a.count < 2 {
                return Err(CliError::Config(format!("{what}-grid: count must be at least 2, got {}", a.count)));
            }
            let kind: GridKind = a.kind.parse()?;
            Ok(Grid1D::new(kind, a.start, a.stop, a.count)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductGrid::new(axes)?)
}

fn resolve_grids(group: &GroupDescriptor, spec: &GridsSpec) -> Result<Grids> {
    let defaults = Grids::default_for(group).ok();
    let pick = |s: &Option<Vec<AxisSpec>>, what: &str, default: Option<&ProductGrid>, dim: usize| -> Result<ProductGrid> {
        let grid = match (s, default) {
            (Some(s), _) => grid_axes(s, what)?,
            (None, Some(d)) => d.clone(),
            (None, None) => {
                return Err(CliError::Config(format!("group `{}` has no default {what}-grid", group.name())))
            }
        };
        if grid.ndim() != dim {
            return Err(CliError::Config(format!("{what}-grid needs {dim} axes, got {}", grid.ndim())));
        }
        Ok(grid)
    };
    Ok(Grids {
        h: pick(&spec.h, "h", defaults.as_ref().map(|d| &d.h), group.dim_h())?,
        k: pick(&spec.k, "k", defaults.as_ref().map(|d| &d.k), group.dim_k())?,
        freq: pick(&spec.freq, "freq", defaults.as_ref().map(|d| &d.freq), group.dim_k())?,
    })
}

fn check_choice(spec_preset: Option<&str>, file: Option<&Path>, what: &str) -> Result<()> {
    if spec_preset.is_some() && file.is_some() {
        return Err(CliError::Config(format!("{what}: give either `preset` or `file`, not both")));
    }
    Ok(())
}

pub fn resolve(config: Config, base: &Path, overrides: &Overrides) -> Result<Resolved> {
    let group = group_by_name(&config.group)?;
    let grids = resolve_grids(&group, &config.grids)?;
    let kind: TransformKind = config.transform.parse()?;
    let mode = overrides.mode.as_ref().or(config.mode.as_ref()).map(|m| m.parse::<EvalMode>()).transpose()?;

    let mut tolerances = Tolerances::default();
    for (name, value) in config.tolerances.iter().map(|(n, v)| (n.as_str(), *v)) {
        tolerances.set(name, value)?;
    }
    for (name, value) in &overrides.tolerances {
        tolerances.set(name, *value)?;
    }

    let mut window = config.window;
    check_choice(window.preset.as_deref(), window.file.as_deref(), "window")?;
    let mut signal = config.signal;
    check_choice(signal.preset.as_deref(), signal.file.as_deref(), "signal")?;
    for file in [&mut window.file, &mut signal.file].into_iter().flatten() {
        if file.is_relative() {
            *file = base.join(&*file);
        }
        if !file.is_file() {
            return Err(CliError::Config(format!("referenced file {} does not exist", file.display())));
        }
    }
    if let Some(w) = signal.lift_width {
        if !(w > 0.0 && w.is_finite()) {
            return Err(CliError::Config(format!("signal.lift_width must be positive, got {w}")));
        }
    }

    let output = match (&overrides.out, &config.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) if o.is_relative() => base.join(o),
        (None, Some(o)) => o.clone(),
        (None, None) => base.join("out"),
    };

    Ok(Resolved {
        group,
        grids,
        kind,
        mode,
        tolerances,
        output,
        full_cap: config.full_cap.unwrap_or(DEFAULT_FULL_CAP),
        seed: overrides.seed.or(config.seed).unwrap_or(0),
        slices: config.slices.unwrap_or(true),
        window,
        signal,
    })
}

impl Resolved {
    /// `gaussian`, `odd-hermite` and `box` (param `n`, default 1) give a K-window;
    /// `gaussian-type` and `envelope` give a window field. For G kinds a K-window
    /// is extended constantly over H.
    pub fn window(&self) -> Result<Window> {
        let (group, grids) = (&self.group, &self.grids);
        let window = if let Some(file) = &self.window.file {
            match signal::load_window_csv(file, group, grids)? {
                signal::WindowFile::Single(u) => Window::Single(u),
                signal::WindowFile::Field(g) => Window::Field(g),
            }
        } else {
            let preset = self.window.preset.as_deref().unwrap_or(if self.kind.is_otimes() { "envelope" } else { "gaussian" });
            let allowed: &[&str] = match preset {
                "box" => &["n"],
                _ => &[],
            };
            if let Some(p) = self.window.params.keys().find(|p| !allowed.contains(&p.as_str())) {
                return Err(CliError::Config(format!("window preset `{preset}` takes no parameter `{p}`")));
            }
            match preset {
                "gaussian" => Window::Single(presets::gaussian_window(&grids.k)?),
                "odd-hermite" => Window::Single(presets::odd_hermite_window(&grids.k)?),
                "box" => {
                    let n = self.window.params.get("n").copied().unwrap_or(1.0);
                    if !(n > 0.0) {
                        return Err(CliError::Config(format!("box window needs n > 0, got {n}")));
                    }
                    Window::Single(presets::box_window(&grids.k, n)?)
                }
                "gaussian-type" => {
                    if group.name() != "affine" {
                        return Err(CliError::Config("the gaussian-type window is defined on the affine group only".into()));
                    }
                    Window::Field(presets::gaussian_type_field(group, &grids.h, &grids.k)?)
                }
                "envelope" => Window::Field(presets::envelope_window_field(group, grids)?),
                other => return Err(CliError::Config(format!("unknown window preset `{other}`"))),
            }
        };
        match (window, self.kind.is_otimes()) {
            (Window::Single(u), true) => {
                let vals = u.values().to_vec();
                let nh = grids.h.len();
                let field = SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), vals.repeat(nh))?;
                Ok(Window::Field(field))
            }
            (Window::Field(_), false) => Err(CliError::Config(format!(
                "transform {} needs a window on K, but the window is a field on the group",
                self.kind
            ))),
            (w, _) => Ok(w),
        }
    }

    /// Signal presets: `gaussian-envelope` (default), `zero`, `random`
    /// (Gaussian envelope with seeded parameters), `gaussian-type`.
    pub fn signal(&self) -> Result<SliceField> {
        let (group, grids) = (&self.group, &self.grids);
        if let Some(file) = &self.signal.file {
            let ext = file.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            return match ext.as_deref() {
                Some("wav") => signal::load_wav(file, group, grids, self.signal.lift_width.unwrap_or(0.2)),
                _ => signal::load_csv(file, group, grids),
            };
        }
        if self.signal.lift_width.is_some() {
            return Err(CliError::Config("signal.lift_width applies to WAV files only".into()));
        }
        match self.signal.preset.as_deref().unwrap_or("gaussian-envelope") {
            "gaussian-envelope" => Ok(GaussianEnvelope::standard(group).to_field(group, grids)?),
            "zero" => Ok(SliceField::zeros(group.clone(), grids.h.clone(), grids.k.clone())?),
            "random" => {
                let mut rng = self.rng();
                let _: u64 = rng.gen();
                Ok(semigabor::checks::random_envelope(group, &mut rng).to_field(group, grids)?)
            }
            "gaussian-type" => {
                if group.name() != "affine" {
                    return Err(CliError::Config("the gaussian-type signal is defined on the affine group only".into()));
                }
                Ok(presets::gaussian_type_field(group, &grids.h, &grids.k)?)
            }
            other => Err(CliError::Config(format!("unknown signal preset `{other}`"))),
        }
    }

    pub fn rng(&self) -> rand_chacha::ChaCha8Rng {
        rand::SeedableRng::seed_from_u64(self.seed)
    }
}
