//! Signal ingestion (CSV lattices, WAV audio) and CSV output.

use std::io::Write;
use std::path::Path;

use semigabor::presets::{Grids, HBump};
use semigabor::{Complex64, GroupDescriptor, ProductGrid, SampledWindow, SliceField};

use crate::error::{CliError, Result};

fn axis_names(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// `h,k,re,im` for one-dimensional `H` and `K`; `k1,k2` etc. otherwise.
pub fn field_header(group: &GroupDescriptor) -> Vec<String> {
    let mut cols = axis_names("h", group.dim_h());
    cols.extend(axis_names("k", group.dim_k()));
    cols.extend(["re".to_string(), "im".to_string()]);
    cols
}

fn window_header(group: &GroupDescriptor) -> Vec<String> {
    let mut cols = axis_names("k", group.dim_k());
    cols.extend(["re".to_string(), "im".to_string()]);
    cols
}

/// Index of `coords` in `grid`, accepting only values within a few ulps of a node.
fn node_index(grid: &ProductGrid, coords: &[f64]) -> Option<usize> {
    let mut flat = 0;
    for (axis, &x) in grid.axes().iter().zip(coords) {
        let pts = axis.points();
        let i = pts.partition_point(|p| *p < x);
        let tol = 1e-9 * x.abs().max(1.0);
        let hit = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < pts.len())
            .find(|&j| (pts[j] - x).abs() <= tol)?;
        flat = flat * pts.len() + hit;
    }
    Some(flat)
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse { path: path.to_path_buf(), line: 1, message: format!("{other:?}") },
    })
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

struct Rows {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn read_rows(path: &Path) -> Result<Rows> {
    let mut reader = open_csv(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", header.len(), record.len())));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("column `{}`: `{s}` is not a finite number", header[i])))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((line, values));
    }
    Ok(Rows { header, rows })
}

fn fill_lattice(path: &Path, rows: &Rows, grids: &[&ProductGrid], n_total: usize) -> Result<Vec<Complex64>> {
    let mut values = vec![Complex64::new(0.0, 0.0); n_total];
    let mut seen = vec![false; n_total];
    for (line, row) in &rows.rows {
        let mut flat = 0;
        let mut offset = 0;
        for g in grids {
            let d = g.ndim();
            let i = node_index(g, &row[offset..offset + d]).ok_or_else(|| {
                parse_err(path, *line, format!("coordinates {:?} are not grid nodes", &row[offset..offset + d]))
            })?;
            flat = flat * g.len() + i;
            offset += d;
        }
        if seen[flat] {
            return Err(parse_err(path, *line, "duplicate lattice point"));
        }
        seen[flat] = true;
        values[flat] = Complex64::new(row[offset], row[offset + 1]);
    }
    if let Some(first) = seen.iter().position(|s| !s) {
        let nk = grids.last().map_or(1, |g| g.len());
        return Err(CliError::LatticeIncomplete {
            path: path.to_path_buf(),
            missing: seen.iter().filter(|s| !**s).count(),
            expected: n_total,
            first_h: if grids.len() > 1 { first / nk } else { 0 },
            first_k: first % nk,
        });
    }
    Ok(values)
}

/// Reads a `h,k,re,im` CSV onto the configured H × K lattice. Every node
/// must appear exactly once.
pub fn load_csv(path: &Path, group: &GroupDescriptor, grids: &Grids) -> Result<SliceField> {
    let rows = read_rows(path)?;
    let expected = field_header(group);
    if rows.header != expected {
        return Err(parse_err(path, 1, format!("header must be `{}`", expected.join(","))));
    }
    let values = fill_lattice(path, &rows, &[&grids.h, &grids.k], grids.h.len() * grids.k.len())?;
    Ok(SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), values)?)
}

/// A window CSV is either a `k,re,im` K-window or a full `h,k,re,im` field.
pub enum WindowFile {
    Single(SampledWindow),
    Field(SliceField),
}

pub fn load_window_csv(path: &Path, group: &GroupDescriptor, grids: &Grids) -> Result<WindowFile> {
    let rows = read_rows(path)?;
    if rows.header == field_header(group) {
        let values = fill_lattice(path, &rows, &[&grids.h, &grids.k], grids.h.len() * grids.k.len())?;
        return Ok(WindowFile::Field(SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), values)?));
    }
    let expected = window_header(group);
    if rows.header != expected {
        return Err(parse_err(
            path,
            1,
            format!("header must be `{}` or `{}`", expected.join(","), field_header(group).join(",")),
        ));
    }
    let values = fill_lattice(path, &rows, &[&grids.k], grids.k.len())?;
    let slice = semigabor::SampledSlice::new(values, grids.k.clone())?;
    Ok(WindowFile::Single(SampledWindow::new(slice)?))
}

/// Lifts mono audio `s` to `f(a, x) = w(a) s(x)` with the log-Gaussian bump
/// `w(a) = exp(−(ln a)²/(2σ²))`. Samples land on the K-grid nodes in order,
/// so the sample count must equal the K-grid size. Channels are averaged;
/// integer samples are scaled to [−1, 1).
pub fn load_wav(path: &Path, group: &GroupDescriptor, grids: &Grids, width: f64) -> Result<SliceField> {
    if group.name() != "affine" {
        return Err(CliError::Config(format!("WAV input needs the affine group, not `{}`", group.name())));
    }
    let fmt_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => CliError::io(path, io),
        other => CliError::Format { path: path.to_path_buf(), message: other.to_string() },
    };
    let mut reader = hound::WavReader::open(path).map_err(fmt_err)?;
    let spec = reader.spec();
    let raw: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            reader.samples::<f32>().map(|s| s.map(f64::from)).collect::<std::result::Result<_, _>>().map_err(fmt_err)?
        }
        hound::SampleFormat::Int => {
            let scale = 2f64.powi(spec.bits_per_sample as i32 - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(fmt_err)?
        }
    };
    let channels = spec.channels.max(1) as usize;
    let mono: Vec<f64> = raw.chunks(channels).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    if mono.len() != grids.k.len() {
        return Err(CliError::Config(format!(
            "{}: {} samples but the K-grid has {} nodes",
            path.display(),
            mono.len(),
            grids.k.len()
        )));
    }
    let bump = HBump { center: 1.0, width };
    let nk = grids.k.len();
    let mut values = Vec::with_capacity(grids.h.len() * nk);
    for i in 0..grids.h.len() {
        let w = bump.eval("affine", &grids.h.point(i));
        values.extend(mono.iter().map(|s| Complex64::new(w * s, 0.0)));
    }
    Ok(SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), values)?)
}

/// Writes `f` as `h,k,re,im` rows with shortest round-trip float formatting.
pub fn write_csv(path: &Path, f: &SliceField) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| CliError::io(path, e);
    writeln!(out, "{}", field_header(f.group()).join(",")).map_err(io)?;
    let nk = f.k_grid().len();
    for (i, v) in f.values().iter().enumerate() {
        let mut cols: Vec<String> = f.h_grid().point(i / nk).iter().map(|x| x.to_string()).collect();
        cols.extend(f.k_grid().point(i % nk).iter().map(|x| x.to_string()));
        cols.push(v.re.to_string());
        cols.push(v.im.to_string());
        writeln!(out, "{}", cols.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}
