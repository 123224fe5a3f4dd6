//! The `verify`, `analyze`, `synthesize` and `oracle-compare` commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use semigabor::checks::{self, Check};
use semigabor::{
    gabor_oracle, inverse, otimes_oracle, plancherel_ratio, transform, Error, EvalMode, OtimesStorage, SliceField,
    TransformField, Window, DEGENERATE_SLICE_NORM,
};

use crate::config::Resolved;
use crate::error::{CliError, Result};
use crate::gtf;
use crate::report::{GridMetadata, Report};
use crate::signal;

const AXIOM_SAMPLES: usize = 1000;
const SPOT_SAMPLES: usize = 32;
const COMPARE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Verify,
    Analyze,
    Synthesize { field: PathBuf },
    OracleCompare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Analyze => "analyze",
            Command::Synthesize { .. } => "synthesize",
            Command::OracleCompare => "oracle-compare",
        }
    }

    /// The evaluation mode when neither the config nor the command line sets one.
    fn default_mode(&self) -> EvalMode {
        match self {
            Command::Verify => EvalMode::Oracle,
            _ => EvalMode::Interp,
        }
    }
}

/// Runs `command`, writing `<command>.json` and any other outputs into the
/// output directory.
pub fn run(command: &Command, cfg: &Resolved) -> Result<Report> {
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
    let mode = cfg.mode.unwrap_or_else(|| command.default_mode());
    let mut report = Report {
        command: command.name().to_string(),
        group: cfg.group.name(),
        transform: cfg.kind.to_string(),
        mode: mode.to_string(),
        seed: cfg.seed,
        grid_metadata: GridMetadata::new(&cfg.grids, cfg.full_cap),
        metadata: BTreeMap::new(),
        checks: Vec::new(),
        overall_pass: true,
    };
    match command {
        Command::Verify => verify(cfg, mode, &mut report)?,
        Command::Analyze => analyze(cfg, mode, &mut report)?,
        Command::Synthesize { field } => synthesize(cfg, field, &mut report)?,
        Command::OracleCompare => oracle_compare(cfg, mode, &mut report)?,
    }
    report.write(&cfg.output.join(format!("{}.json", command.name())))?;
    Ok(report)
}

/// Turns the numerical failures that a report can describe into a failing
/// check; everything else stays an error.
fn numeric_failure(err: CliError) -> Result<Check> {
    let fail = |name: &str, value: f64, tolerance: f64| Check {
        name: name.to_string(),
        value,
        expected: 0.0,
        tolerance,
        pass: false,
    };
    match err {
        CliError::Numeric(Error::DegenerateWindowSlice { norm_sq, .. }) => {
            Ok(fail("window_slice_degenerate", norm_sq, DEGENERATE_SLICE_NORM))
        }
        CliError::Numeric(Error::NearOrthogonalWindows { inner, bound }) => Ok(fail("windows_near_orthogonal", inner, bound)),
        CliError::Numeric(Error::ZeroWindow) => Ok(fail("window_norm_zero", 0.0, 0.0)),
        CliError::Numeric(Error::ZeroSignal) => Ok(fail("signal_norm_zero", 0.0, 0.0)),
        other => Err(other),
    }
}

/// Runs `f`, recording a numerical failure in `report` and returning `None`.
fn or_record<T>(report: &mut Report, f: impl FnOnce() -> Result<T>) -> Result<Option<T>> {
    match f() {
        Ok(v) => Ok(Some(v)),
        Err(e) => {
            report.push(numeric_failure(e)?);
            Ok(None)
        }
    }
}

fn window_norm_sq(w: &Window) -> f64 {
    match w {
        Window::Single(u) => u.norm_sq(),
        Window::Field(g) => g.norm_sq(),
    }
}

fn compute(cfg: &Resolved, f: &SliceField, window: &Window, mode: EvalMode) -> Result<TransformField> {
    Ok(transform(cfg.kind, f, window, &cfg.grids.freq, mode, cfg.full_cap)?)
}

/// Largest `|field − oracle|` over `samples` seeded random stored nodes, and
/// the largest `|oracle|` seen.
fn sampled_oracle_diff(
    field: &TransformField,
    f: &SliceField,
    window: &Window,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<(f64, f64)> {
    let (nh, nk, nw) = (f.h_grid().len(), f.k_grid().len(), field_freq_len(field));
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (h, k, w) = (rng.gen_range(0..nh), rng.gen_range(0..nk), rng.gen_range(0..nw));
        let (value, oracle) = match (field, window) {
            (TransformField::Gabor(fd), Window::Single(u)) => {
                let o = gabor_oracle(fd.kind, f, u, h, &fd.k_grid.point(k), &fd.freq_grid.point(w))?;
                (fd.get(h, k, w), o)
            }
            (TransformField::Otimes(fd), Window::Field(g)) => {
                let t = match fd.storage {
                    OtimesStorage::Full => rng.gen_range(0..nh),
                    OtimesStorage::Diagonal => h,
                };
                let o = otimes_oracle(fd.kind, f, g, h, t, &fd.k_grid.point(k), &fd.freq_grid.point(w))?;
                (fd.get(h, k, t, w).expect("sampled node is stored"), o)
            }
            _ => unreachable!("window type is checked by the transform"),
        };
        worst = worst.max((value - oracle).norm());
        scale = scale.max(oracle.norm());
    }
    Ok((worst, scale))
}

fn field_freq_len(field: &TransformField) -> usize {
    match field {
        TransformField::Gabor(f) => f.freq_grid.len(),
        TransformField::Otimes(f) => f.freq_grid.len(),
    }
}

fn oracle_tolerance(cfg: &Resolved, mode: EvalMode) -> f64 {
    match mode {
        EvalMode::Oracle => cfg.tolerances.oracle_equivalence,
        EvalMode::Interp => cfg.tolerances.interp,
    }
}

fn zero_signal_check(f: &SliceField) -> Option<Check> {
    let n = f.norm_sq();
    (n <= 0.0).then(|| Check { name: "signal_norm_zero".into(), value: n, expected: 0.0, tolerance: 0.0, pass: false })
}

fn verify(cfg: &Resolved, mode: EvalMode, report: &mut Report) -> Result<()> {
    let mut rng = cfg.rng();
    report.extend(checks::group_axioms(&cfg.group, AXIOM_SAMPLES, &mut rng, cfg.tolerances.group_axioms)?);

    let f = cfg.signal()?;
    if let Some(c) = zero_signal_check(&f) {
        report.push(c);
        return Ok(());
    }
    let window = cfg.window()?;
    let Some(field) = or_record(report, || compute(cfg, &f, &window, mode))? else { return Ok(()) };

    let ratio = plancherel_ratio(&field, &f, &window)?;
    report.push(Check::close("plancherel_ratio", ratio, 1.0, cfg.tolerances.plancherel));

    if let Some(back) = or_record(report, || Ok(inverse(&field, &window)?))? {
        let err = back.relative_error(&f)?;
        report.push(Check::bounded("reconstruction_rel_err", err, cfg.tolerances.reconstruction));
    }

    let (worst, _) = sampled_oracle_diff(&field, &f, &window, SPOT_SAMPLES, &mut rng)?;
    report.push(Check::bounded("oracle_spot_max_abs", worst, oracle_tolerance(cfg, mode)));
    Ok(())
}

fn analyze(cfg: &Resolved, mode: EvalMode, report: &mut Report) -> Result<()> {
    let f = cfg.signal()?;
    let window = cfg.window()?;
    let Some(field) = or_record(report, || compute(cfg, &f, &window, mode))? else { return Ok(()) };
    gtf::write(&cfg.output.join("field.gtf"), &gtf::from_transform(&field))?;
    if cfg.slices {
        write_slices(&cfg.output.join("slices"), &field)?;
    }

    let predicted = window_norm_sq(&window) * f.norm_sq();
    report.metadata.insert("predicted_norm_sq".into(), predicted);
    if let Some(c) = zero_signal_check(&f) {
        report.metadata.insert("field_norm_sq".into(), 0.0);
        report.push(c);
        return Ok(());
    }
    let ratio = plancherel_ratio(&field, &f, &window)?;
    report.metadata.insert("field_norm_sq".into(), ratio * predicted);
    report.push(Check::close("plancherel_ratio", ratio, 1.0, cfg.tolerances.plancherel));
    Ok(())
}

/// One CSV per H-node. With one-dimensional K the file is the `|F(h,·,·)|`
/// matrix (rows `k`, one column per `ω`); otherwise it lists
/// `k1,…,kd,rms` with the RMS magnitude over `ω`.
fn write_slices(dir: &Path, field: &TransformField) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let (h_grid, k_grid, freq_grid) = match field {
        TransformField::Gabor(f) => (&f.h_grid, &f.k_grid, &f.freq_grid),
        TransformField::Otimes(f) => (&f.h_grid, &f.k_grid, &f.freq_grid),
    };
    let nw = freq_grid.len();
    for h in 0..h_grid.len() {
        let block: Vec<semigabor::Complex64> = match field {
            TransformField::Gabor(f) => f.slice(h).to_vec(),
            TransformField::Otimes(f) => f.diagonal_block(h),
        };
        let mut s = String::new();
        if k_grid.ndim() == 1 {
            s.push('k');
            for w in freq_grid.axes()[0].points() {
                write!(s, ",{w}").unwrap();
            }
            s.push('\n');
            for (k, row) in block.chunks_exact(nw).enumerate() {
                write!(s, "{}", k_grid.axes()[0].points()[k]).unwrap();
                for v in row {
                    write!(s, ",{:.9e}", v.norm()).unwrap();
                }
                s.push('\n');
            }
        } else {
            let names: Vec<String> = (1..=k_grid.ndim()).map(|i| format!("k{i}")).collect();
            writeln!(s, "{},rms", names.join(",")).unwrap();
            for (k, row) in block.chunks_exact(nw).enumerate() {
                for x in k_grid.point(k) {
                    write!(s, "{x},").unwrap();
                }
                let rms = (row.iter().map(|v| v.norm_sqr()).sum::<f64>() / nw as f64).sqrt();
                writeln!(s, "{rms:.9e}").unwrap();
            }
        }
        let path = dir.join(format!("h{h:03}.csv"));
        std::fs::write(&path, s).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

fn synthesize(cfg: &Resolved, field_path: &Path, report: &mut Report) -> Result<()> {
    let raw = gtf::read(field_path)?;
    let field = gtf::to_transform(raw, &cfg.group, &cfg.grids, field_path)?;
    if field.kind() != cfg.kind {
        return Err(Error::KindMismatch { expected: cfg.kind.to_string(), found: field.kind().to_string() }.into());
    }
    let window = cfg.window()?;
    let back = inverse(&field, &window)?;
    signal::write_csv(&cfg.output.join("synthesized.csv"), &back)?;

    let f = cfg.signal()?;
    report.metadata.insert("synthesized_norm_sq".into(), back.norm_sq());
    if f.norm_sq() > 0.0 {
        let err = back.relative_error(&f)?;
        report.push(Check::bounded("reconstruction_rel_err", err, cfg.tolerances.reconstruction));
    }
    Ok(())
}

fn oracle_compare(cfg: &Resolved, mode: EvalMode, report: &mut Report) -> Result<()> {
    let mut rng = cfg.rng();
    let f = cfg.signal()?;
    let window = cfg.window()?;
    let Some(field) = or_record(report, || compute(cfg, &f, &window, mode))? else { return Ok(()) };
    let (worst, scale) = sampled_oracle_diff(&field, &f, &window, COMPARE_SAMPLES, &mut rng)?;
    report.metadata.insert("oracle_max_abs_value".into(), scale);
    report.push(Check::bounded("oracle_compare_max_abs", worst, oracle_tolerance(cfg, mode)));
    Ok(())
}
