//! Gabor transforms on `G_τ = H ⋉_τ K`, their inversions and norm identities.
//!
//! Field layouts (row-major):
//! - [`GaborField`]: `(h, k, ω)`
//! - [`OtimesGaborField`]: `(h, k, t, ω)` when stored in full, `(h, k, ω)` on
//!   the diagonal `t = h` otherwise.
//!
//! Every transform value is a scaled STFT of one `K`-slice evaluated at
//! `(A·s, B·ω)`, with `A` an action matrix and `B` a dual-action matrix.
//! The fast path computes exactly the direct quadrature sum; `Interp` mode
//! computes exact rows at the mapped shifts and interpolates them in `ω`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{h_weights, interp_stencil, k_weights, Grid1D, GridKind, ProductGrid};
use crate::group::{GroupDescriptor, HPoint};
use crate::kernels::{mapped_nodes, CrossSpectrum, SpectrumScratch};
use crate::lca::{stft_at, stft_oracle, synthesize, SampledSlice, SampledWindow};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Above this many entries an [`OtimesGaborField`] keeps only its diagonal.
pub const DEFAULT_FULL_CAP: usize = 1 << 24;

/// Window slices with `‖g_h‖²` at or below this are rejected by inversion.
pub const DEGENERATE_SLICE_NORM: f64 = 1e-12;

/// Closed form of a field on `G_τ`, called as `f(h, k)`.
pub type FieldProfile = Arc<dyn Fn(&[f64], &[f64]) -> Complex64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransformKind {
    V,
    Vdag,
    A,
    B,
    G,
    Gdag,
}

impl TransformKind {
    pub const ALL: [TransformKind; 6] =
        [TransformKind::V, TransformKind::Vdag, TransformKind::A, TransformKind::B, TransformKind::G, TransformKind::Gdag];

    /// Kinds whose window is a field on `G_τ` rather than on `K`.
    pub fn is_otimes(self) -> bool {
        matches!(self, TransformKind::G | TransformKind::Gdag)
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::V => "V",
            TransformKind::Vdag => "Vdag",
            TransformKind::A => "A",
            TransformKind::B => "B",
            TransformKind::G => "G",
            TransformKind::Gdag => "Gdag",
        })
    }
}

impl FromStr for TransformKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "V" => TransformKind::V,
            "Vdag" => TransformKind::Vdag,
            "A" => TransformKind::A,
            "B" => TransformKind::B,
            "G" => TransformKind::G,
            "Gdag" => TransformKind::Gdag,
            other => return Err(Error::Unsupported(format!("unknown transform kind `{other}`"))),
        })
    }
}

/// How the † transforms evaluate at transformed points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Quadrature at the exact transformed points.
    #[default]
    Oracle,
    /// Multilinear interpolation in `ω` of exact STFT rows sampled on a
    /// refined frequency lattice.
    Interp,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Oracle => "oracle",
            EvalMode::Interp => "interp",
        })
    }
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(EvalMode::Oracle),
            "interp" => Ok(EvalMode::Interp),
            other => Err(Error::Unsupported(format!("unknown evaluation mode `{other}`"))),
        }
    }
}

/// A sampled element of `L²(G_τ)`: values over H-grid × K-grid.
#[derive(Clone)]
pub struct SliceField {
    group: GroupDescriptor,
    h_grid: ProductGrid,
    k_grid: ProductGrid,
    values: Vec<Complex64>,
    profile: Option<FieldProfile>,
}

impl fmt::Debug for SliceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SliceField")
            .field("group", &self.group.name())
            .field("h_shape", &self.h_grid.shape())
            .field("k_shape", &self.k_grid.shape())
            .finish()
    }
}

fn check_layout(group: &GroupDescriptor, h_grid: &ProductGrid, k_grid: &ProductGrid) -> Result<()> {
    if h_grid.ndim() != group.dim_h() || k_grid.ndim() != group.dim_k() {
        return Err(Error::ShapeMismatch(format!(
            "group {} needs {} H-axes and {} K-axes, got {} and {}",
            group.name(),
            group.dim_h(),
            group.dim_k(),
            h_grid.ndim(),
            k_grid.ndim()
        )));
    }
    Ok(())
}

impl SliceField {
    pub fn new(group: GroupDescriptor, h_grid: ProductGrid, k_grid: ProductGrid, values: Vec<Complex64>) -> Result<Self> {
        check_layout(&group, &h_grid, &k_grid)?;
        if values.len() != h_grid.len() * k_grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}×{} field",
                values.len(),
                h_grid.len(),
                k_grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite field value".into()));
        }
        Ok(Self { group, h_grid, k_grid, values, profile: None })
    }

    pub fn zeros(group: GroupDescriptor, h_grid: ProductGrid, k_grid: ProductGrid) -> Result<Self> {
        let n = h_grid.len() * k_grid.len();
        Self::new(group, h_grid, k_grid, vec![ZERO; n])
    }

    /// Sample `f(h, k)` and keep it for exact off-grid evaluation of slices.
    pub fn from_fn(
        group: GroupDescriptor,
        h_grid: ProductGrid,
        k_grid: ProductGrid,
        f: impl Fn(&[f64], &[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_layout(&group, &h_grid, &k_grid)?;
        let profile: FieldProfile = Arc::new(f);
        let mut values = Vec::with_capacity(h_grid.len() * k_grid.len());
        let mut k = vec![0.0; k_grid.ndim()];
        for i in 0..h_grid.len() {
            let h = h_grid.point(i);
            for j in 0..k_grid.len() {
                k_grid.point_into(j, &mut k);
                values.push(profile(&h, &k));
            }
        }
        let mut out = Self::new(group, h_grid, k_grid, values)?;
        out.profile = Some(profile);
        Ok(out)
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }
    pub fn h_grid(&self) -> &ProductGrid {
        &self.h_grid
    }
    pub fn k_grid(&self) -> &ProductGrid {
        &self.k_grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn profile(&self) -> Option<&FieldProfile> {
        self.profile.as_ref()
    }

    pub fn slice_values(&self, h: usize) -> &[Complex64] {
        let n = self.k_grid.len();
        &self.values[h * n..(h + 1) * n]
    }

    /// The slice `f_h = f(h, ·)`, carrying the field's closed form if any.
    pub fn slice(&self, h: usize) -> SampledSlice {
        let s = SampledSlice::new(self.slice_values(h).to_vec(), self.k_grid.clone())
            .expect("slice shape follows the field shape");
        match &self.profile {
            Some(p) => {
                let p = Arc::clone(p);
                let hp = self.h_grid.point(h);
                s.with_profile(Arc::new(move |k: &[f64]| p(&hp, k)))
            }
            None => s,
        }
    }

    /// `‖f_h‖²_{L²(K)}` for every H-node.
    pub fn slice_norms_sq(&self) -> Vec<f64> {
        let kw = k_weights(&self.group, &self.k_grid);
        self.values
            .chunks_exact(kw.len())
            .map(|row| row.iter().zip(&kw).map(|(v, w)| w * v.norm_sqr()).sum())
            .collect()
    }

    /// `‖f‖²` against `δ(h) dh dk`.
    pub fn norm_sq(&self) -> f64 {
        let hw = h_weights(&self.group, &self.h_grid, 1.0);
        self.slice_norms_sq().iter().zip(&hw).map(|(a, b)| a * b).sum()
    }

    /// `‖f − g‖²` against `δ(h) dh dk`.
    pub fn distance_sq(&self, other: &SliceField) -> Result<f64> {
        self.check_compatible(other)?;
        let hw = h_weights(&self.group, &self.h_grid, 1.0);
        let kw = k_weights(&self.group, &self.k_grid);
        let nk = kw.len();
        Ok(self
            .values
            .chunks_exact(nk)
            .zip(other.values.chunks_exact(nk))
            .zip(&hw)
            .map(|((a, b), w)| w * a.iter().zip(b).zip(&kw).map(|((x, y), v)| v * (x - y).norm_sqr()).sum::<f64>())
            .sum())
    }

    /// `‖f − reference‖ / ‖reference‖`.
    pub fn relative_error(&self, reference: &SliceField) -> Result<f64> {
        let norm = reference.norm_sq();
        if !(norm > 0.0) {
            return Err(Error::ZeroSignal);
        }
        Ok((self.distance_sq(reference)? / norm).sqrt())
    }

    /// `⟨f, g⟩` against `δ(h) dh dk`.
    pub fn inner(&self, other: &SliceField) -> Result<Complex64> {
        self.check_compatible(other)?;
        let hw = h_weights(&self.group, &self.h_grid, 1.0);
        let kw = k_weights(&self.group, &self.k_grid);
        let nk = kw.len();
        Ok(self
            .values
            .chunks_exact(nk)
            .zip(other.values.chunks_exact(nk))
            .zip(&hw)
            .map(|((a, b), w)| {
                *w * a.iter().zip(b).zip(&kw).map(|((x, y), v)| x * y.conj() * *v).sum::<Complex64>()
            })
            .sum())
    }

    fn check_compatible(&self, other: &SliceField) -> Result<()> {
        if self.group != other.group {
            return Err(Error::GridMismatch(format!("groups {} and {} differ", self.group.name(), other.group.name())));
        }
        if self.h_grid != other.h_grid || self.k_grid != other.k_grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }
}

/// `𝒱_u f`, `𝒱_u† f`, `A_u f` or `B_u f` over H × K × K̂.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborField {
    pub kind: TransformKind,
    pub group: GroupDescriptor,
    pub h_grid: ProductGrid,
    pub k_grid: ProductGrid,
    pub freq_grid: ProductGrid,
    pub values: Vec<Complex64>,
}

impl GaborField {
    pub fn block_len(&self) -> usize {
        self.k_grid.len() * self.freq_grid.len()
    }

    pub fn slice(&self, h: usize) -> &[Complex64] {
        let n = self.block_len();
        &self.values[h * n..(h + 1) * n]
    }

    pub fn get(&self, h: usize, k: usize, w: usize) -> Complex64 {
        self.values[(h * self.k_grid.len() + k) * self.freq_grid.len() + w]
    }

    /// `‖F‖²` against `dh dk dω`.
    pub fn norm_sq(&self) -> f64 {
        self.inner_raw(&self.values).re
    }

    fn inner_raw(&self, other: &[Complex64]) -> Complex64 {
        let hw = h_weights(&self.group, &self.h_grid, 0.0);
        let kf = block_weights(&self.group, &self.k_grid, &self.freq_grid);
        let n = kf.len();
        self.values
            .chunks_exact(n)
            .zip(other.chunks_exact(n))
            .zip(&hw)
            .map(|((a, b), w)| *w * weighted_inner(a, b, &kf))
            .sum()
    }
}

/// Whether a [`OtimesGaborField`] holds every `(h, t)` pair or only `t = h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtimesStorage {
    Full,
    Diagonal,
}

/// `𝒢_g f` or `𝒢_g† f` over H × K × H × K̂.
#[derive(Debug, Clone, PartialEq)]
pub struct OtimesGaborField {
    pub kind: TransformKind,
    pub group: GroupDescriptor,
    pub h_grid: ProductGrid,
    pub k_grid: ProductGrid,
    pub freq_grid: ProductGrid,
    pub storage: OtimesStorage,
    pub values: Vec<Complex64>,
}

impl OtimesGaborField {
    fn dims(&self) -> (usize, usize, usize) {
        (self.h_grid.len(), self.k_grid.len(), self.freq_grid.len())
    }

    /// Entry `(h, k, t, ω)`, or `None` if it is off the stored diagonal.
    pub fn get(&self, h: usize, k: usize, t: usize, w: usize) -> Option<Complex64> {
        let (nh, nk, nw) = self.dims();
        match self.storage {
            OtimesStorage::Full => Some(self.values[((h * nk + k) * nh + t) * nw + w]),
            OtimesStorage::Diagonal if h == t => Some(self.values[(h * nk + k) * nw + w]),
            OtimesStorage::Diagonal => None,
        }
    }

    /// The `(k, ω)` block at `(h, t)`, if stored.
    pub fn block(&self, h: usize, t: usize) -> Option<Vec<Complex64>> {
        let (nh, nk, nw) = self.dims();
        match self.storage {
            OtimesStorage::Full => Some(
                (0..nk)
                    .flat_map(|k| {
                        let start = ((h * nk + k) * nh + t) * nw;
                        self.values[start..start + nw].iter().copied()
                    })
                    .collect(),
            ),
            OtimesStorage::Diagonal if h == t => Some(self.values[h * nk * nw..(h + 1) * nk * nw].to_vec()),
            OtimesStorage::Diagonal => None,
        }
    }

    pub fn diagonal_block(&self, h: usize) -> Vec<Complex64> {
        self.block(h, h).expect("the diagonal is always stored")
    }
}

fn weighted_inner(a: &[Complex64], b: &[Complex64], w: &[f64]) -> Complex64 {
    a.iter().zip(b).zip(w).map(|((x, y), v)| x * y.conj() * *v).sum()
}

fn block_weights(group: &GroupDescriptor, k_grid: &ProductGrid, freq_grid: &ProductGrid) -> Vec<f64> {
    let kw = k_weights(group, k_grid);
    let fw = freq_grid.quadrature_weights();
    kw.iter().flat_map(|a| fw.iter().map(move |b| a * b)).collect()
}

fn linear_maps(group: &GroupDescriptor, h: &HPoint) -> Result<(Vec<f64>, Vec<f64>)> {
    match (group.action_matrix(h), group.dual_action_matrix(h)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Unsupported(format!(
            "group {} has no linear action on K = R^d; transforms are not available",
            group.name()
        ))),
    }
}

/// Prefactor, shift map and frequency map of one `(k, ω)` block.
struct BlockMaps {
    scale: f64,
    shift: Option<Vec<f64>>,
    freq: Option<Vec<f64>>,
}

/// Maps for the single-window kinds at H-node `h`, or for the G-kinds at window node
/// `h` and signal node `t`.
fn block_maps(group: &GroupDescriptor, kind: TransformKind, h: &HPoint, t: &HPoint) -> Result<BlockMaps> {
    let (a_h, b_h) = linear_maps(group, h)?;
    let dh = group.delta(h);
    Ok(match kind {
        TransformKind::V => BlockMaps { scale: dh.sqrt(), shift: None, freq: None },
        TransformKind::Vdag => BlockMaps { scale: dh.sqrt(), shift: Some(a_h), freq: Some(b_h) },
        TransformKind::A => BlockMaps { scale: 1.0, shift: Some(a_h), freq: None },
        TransformKind::B => BlockMaps { scale: dh, shift: None, freq: Some(b_h) },
        TransformKind::G => BlockMaps { scale: group.delta(t), shift: None, freq: None },
        TransformKind::Gdag => {
            let (_, b_t) = linear_maps(group, t)?;
            let dt = group.delta(t);
            BlockMaps { scale: dt.powf(1.5) / dh.sqrt(), shift: Some(a_h), freq: Some(b_t) }
        }
    })
}

/// Inverse prefactor (without the window norm) for the diagonal block at `h`.
fn inverse_scale(group: &GroupDescriptor, kind: TransformKind, h: &HPoint) -> f64 {
    let d = group.delta(h);
    match kind {
        TransformKind::V | TransformKind::Vdag => 1.0 / d.sqrt(),
        TransformKind::A | TransformKind::G | TransformKind::Gdag => 1.0 / d,
        TransformKind::B => 1.0,
    }
}

/// Subdivision factor of the frequency lattice that `Interp` mode
/// interpolates from.
pub const INTERP_REFINE: usize = 4;

/// The quadrature sum over K-nodes `y₀ + jΔ` satisfies
/// `V(s, ω + m/Δ) = e^{−2πi m y₀/Δ} V(s, ω)` along each axis.
#[derive(Clone, Copy)]
struct FreqWrap {
    lo: f64,
    hi: f64,
    period: f64,
    y0: f64,
}

/// Refined frequency lattice spanning at least one period per axis, with
/// the wrap data for each axis that has it.
fn interp_freq_lattice(k_grid: &ProductGrid, freq_grid: &ProductGrid) -> (ProductGrid, Vec<Option<FreqWrap>>) {
    let r = INTERP_REFINE;
    let (axes, wraps) = k_grid
        .axes()
        .iter()
        .zip(freq_grid.axes())
        .map(|(ka, wa)| {
            if wa.kind() != GridKind::Uniform {
                return (wa.clone(), None);
            }
            let step = wa.step() / r as f64;
            let period = match ka.kind() {
                GridKind::Uniform | GridKind::Periodic => Some(1.0 / ka.step()),
                GridKind::LogUniform => None,
            };
            let span = (wa.stop() - wa.start()).max(period.unwrap_or(0.0));
            let count = (span / step - 1e-9).ceil() as usize + 1;
            let hi = wa.start() + (count - 1) as f64 * step;
            let axis = Grid1D::uniform(wa.start(), hi, count).expect("refined axis of a valid axis");
            (axis, period.map(|period| FreqWrap { lo: wa.start(), hi, period, y0: ka.start() }))
        })
        .unzip();
    (ProductGrid::new(axes).expect("same rank as a valid grid"), wraps)
}

/// Moves `w` into `lattice` by whole periods and returns the phase factor,
/// or `None` if some coordinate cannot be brought inside.
fn wrap_freq(wraps: &[Option<FreqWrap>], lattice: &ProductGrid, w: &mut [f64]) -> Option<Complex64> {
    let mut cycles = 0.0;
    for ((x, wrap), axis) in w.iter_mut().zip(wraps).zip(lattice.axes()) {
        let p = axis.points();
        if *x >= p[0] && *x <= p[p.len() - 1] {
            continue;
        }
        let FreqWrap { lo, hi, period, y0 } = (*wrap)?;
        let m = ((*x - lo) / period).floor();
        *x = (*x - m * period).clamp(lo, hi);
        cycles -= m * period * y0;
    }
    Some(Complex64::from_polar(1.0, TAU * cycles))
}

/// Shifts per batch of exact rows in `Interp` mode.
const INTERP_ROW_CHUNK: usize = 64;

/// `Interp` mode block: exact STFT rows at the mapped shifts, sampled on a
/// refined frequency lattice and interpolated multilinearly in `ω`.
/// Frequencies outside the lattice are wrapped by the quasi-periodicity of
/// the quadrature sum; those that cannot be wrapped are evaluated directly.
fn interp_block(v: &SampledSlice, u: &SampledSlice, freq_grid: &ProductGrid, maps: &BlockMaps) -> Vec<Complex64> {
    let k_grid = v.grid();
    let (lattice, wraps) = interp_freq_lattice(k_grid, freq_grid);
    let (dk, dw) = (k_grid.ndim(), freq_grid.ndim());
    let ks = mapped_nodes(k_grid, maps.shift.as_deref());
    let ws = mapped_nodes(freq_grid, maps.freq.as_deref());
    let stencils: Vec<Option<(Complex64, Vec<(usize, f64)>)>> = ws
        .chunks_exact(dw)
        .map(|w| {
            let mut w = w.to_vec();
            let phase = wrap_freq(&wraps, &lattice, &mut w)?;
            Some((phase, interp_stencil(&lattice, &w)?))
        })
        .collect();

    let nl = lattice.len();
    let mut out = Vec::with_capacity(k_grid.len() * freq_grid.len());
    for shifts in ks.chunks(INTERP_ROW_CHUNK * dk) {
        let rows = stft_at(v, u, shifts, &lattice, None);
        for (row, shift) in rows.chunks_exact(nl).zip(shifts.chunks_exact(dk)) {
            for (l, stencil) in stencils.iter().enumerate() {
                out.push(match stencil {
                    Some((phase, st)) => phase * st.iter().map(|&(i, w)| row[i] * w).sum::<Complex64>(),
                    None => stft_oracle(v, u, shift, &ws[l * dw..(l + 1) * dw]),
                });
            }
        }
    }
    out
}

/// One `(k, ω)` block: `scale · V_u v(A s, B ω)` over K-grid × `freq_grid`.
fn compute_block(
    v: &SampledSlice,
    u: &SampledSlice,
    freq_grid: &ProductGrid,
    maps: &BlockMaps,
    mode: EvalMode,
) -> Vec<Complex64> {
    let k_grid = v.grid();
    let mut out = match (mode, maps.shift.is_some() || maps.freq.is_some()) {
        (EvalMode::Interp, true) => interp_block(v, u, freq_grid, maps),
        _ => stft_at(v, u, &mapped_nodes(k_grid, maps.shift.as_deref()), freq_grid, maps.freq.as_deref()),
    };
    if maps.scale != 1.0 {
        for x in out.iter_mut() {
            *x *= maps.scale;
        }
    }
    out
}

fn check_window(f: &SliceField, u: &SampledWindow) -> Result<()> {
    if u.grid() != f.k_grid() {
        return Err(Error::GridMismatch("window and signal K-grids differ".into()));
    }
    Ok(())
}

fn check_freq(group: &GroupDescriptor, freq_grid: &ProductGrid) -> Result<()> {
    if freq_grid.ndim() != group.dim_freq() {
        return Err(Error::GridMismatch(format!(
            "frequency grid has {} axes, group {} needs {}",
            freq_grid.ndim(),
            group.name(),
            group.dim_freq()
        )));
    }
    Ok(())
}

fn kind_error(expected: &str, found: TransformKind) -> Error {
    Error::KindMismatch { expected: expected.into(), found: found.to_string() }
}

/// Any of the single-window transforms `V`, `Vdag`, `A`, `B`.
pub fn gabor_transform(
    kind: TransformKind,
    f: &SliceField,
    u: &SampledWindow,
    freq_grid: &ProductGrid,
    mode: EvalMode,
) -> Result<GaborField> {
    if kind.is_otimes() {
        return Err(kind_error("V, Vdag, A or B", kind));
    }
    check_window(f, u)?;
    let group = f.group();
    check_freq(group, freq_grid)?;
    let hs = f.h_grid().nodes();
    let maps: Vec<BlockMaps> = hs
        .iter()
        .map(|h| {
            let h = HPoint(h.clone());
            block_maps(group, kind, &h, &h)
        })
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<Complex64>> = (0..hs.len())
        .into_par_iter()
        .map(|i| compute_block(&f.slice(i), u.as_slice(), freq_grid, &maps[i], mode))
        .collect();
    Ok(GaborField {
        kind,
        group: group.clone(),
        h_grid: f.h_grid().clone(),
        k_grid: f.k_grid().clone(),
        freq_grid: freq_grid.clone(),
        values: blocks.concat(),
    })
}

/// `𝒱_u f(h,k,ω) = δ(h)^{1/2} V_u f_h(k, ω)`.
pub fn v_transform(f: &SliceField, u: &SampledWindow, freq_grid: &ProductGrid) -> Result<GaborField> {
    gabor_transform(TransformKind::V, f, u, freq_grid, EvalMode::Oracle)
}

/// `𝒱_u† f(h,k,ω) = δ(h)^{1/2} V_u f_h(τ_h k, ω_h)`.
pub fn v_dagger_transform(f: &SliceField, u: &SampledWindow, freq_grid: &ProductGrid, mode: EvalMode) -> Result<GaborField> {
    gabor_transform(TransformKind::Vdag, f, u, freq_grid, mode)
}

/// `A_u f(h,k,ω) = V_u f_h(τ_h k, ω)` or `B_u f(h,k,ω) = δ(h) V_u f_h(k, ω_h)`.
pub fn variant_transform(
    f: &SliceField,
    u: &SampledWindow,
    freq_grid: &ProductGrid,
    kind: TransformKind,
) -> Result<GaborField> {
    if !matches!(kind, TransformKind::A | TransformKind::B) {
        return Err(kind_error("A or B", kind));
    }
    gabor_transform(kind, f, u, freq_grid, EvalMode::Oracle)
}

/// Direct quadrature of a single-window transform at H-node `h` and arbitrary `(k, ω)`.
pub fn gabor_oracle(
    kind: TransformKind,
    f: &SliceField,
    u: &SampledWindow,
    h: usize,
    k: &[f64],
    w: &[f64],
) -> Result<Complex64> {
    if kind.is_otimes() {
        return Err(kind_error("V, Vdag, A or B", kind));
    }
    check_window(f, u)?;
    let hp = HPoint(f.h_grid().point(h));
    let maps = block_maps(f.group(), kind, &hp, &hp)?;
    Ok(maps.scale * point_oracle(&f.slice(h), u.as_slice(), &maps, k, w))
}

fn point_oracle(v: &SampledSlice, u: &SampledSlice, maps: &BlockMaps, k: &[f64], w: &[f64]) -> Complex64 {
    let apply = |m: &Option<Vec<f64>>, x: &[f64]| -> Vec<f64> {
        match m {
            Some(m) => {
                let mut out = vec![0.0; x.len()];
                crate::kernels::mat_vec(m, x, &mut out);
                out
            }
            None => x.to_vec(),
        }
    };
    stft_oracle(v, u, &apply(&maps.shift, k), &apply(&maps.freq, w))
}

fn check_window_field(f: &SliceField, g: &SliceField) -> Result<()> {
    f.check_compatible(g)
}

/// Any of the G-kind transforms `G`, `Gdag`; full storage when the field has at
/// most `cap` entries, diagonal otherwise.
pub fn otimes_transform(
    kind: TransformKind,
    f: &SliceField,
    g: &SliceField,
    freq_grid: &ProductGrid,
    mode: EvalMode,
    cap: usize,
) -> Result<OtimesGaborField> {
    if !kind.is_otimes() {
        return Err(kind_error("G or Gdag", kind));
    }
    check_window_field(f, g)?;
    let group = f.group();
    check_freq(group, freq_grid)?;
    let nh = f.h_grid().len();
    let block = f.k_grid().len() * freq_grid.len();
    let full = nh.checked_mul(nh).and_then(|n| n.checked_mul(block)).is_some_and(|n| n <= cap);
    let hs: Vec<HPoint> = f.h_grid().nodes().into_iter().map(HPoint).collect();
    let pairs: Vec<(usize, usize)> =
        if full { (0..nh).flat_map(|h| (0..nh).map(move |t| (h, t))).collect() } else { (0..nh).map(|h| (h, h)).collect() };
    let maps: Vec<BlockMaps> = pairs.iter().map(|&(h, t)| block_maps(group, kind, &hs[h], &hs[t])).collect::<Result<_>>()?;
    let blocks: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .zip(maps.par_iter())
        .map(|(&(h, t), m)| compute_block(&f.slice(t), &g.slice(h), freq_grid, m, mode))
        .collect();
    let nk = f.k_grid().len();
    let nw = freq_grid.len();
    let values = if full {
        // Blocks arrive as (h, t) → (k, ω); reorder to (h, k, t, ω).
        let mut values = vec![ZERO; nh * nh * block];
        for (&(h, t), b) in pairs.iter().zip(&blocks) {
            for k in 0..nk {
                let dst = ((h * nk + k) * nh + t) * nw;
                values[dst..dst + nw].copy_from_slice(&b[k * nw..(k + 1) * nw]);
            }
        }
        values
    } else {
        blocks.concat()
    };
    Ok(OtimesGaborField {
        kind,
        group: group.clone(),
        h_grid: f.h_grid().clone(),
        k_grid: f.k_grid().clone(),
        freq_grid: freq_grid.clone(),
        storage: if full { OtimesStorage::Full } else { OtimesStorage::Diagonal },
        values,
    })
}

/// `𝒢_g f(h,k,t,ω) = δ(t) V_{g_h} f_t(k, ω)`.
pub fn g_transform(f: &SliceField, g: &SliceField, freq_grid: &ProductGrid) -> Result<OtimesGaborField> {
    otimes_transform(TransformKind::G, f, g, freq_grid, EvalMode::Oracle, DEFAULT_FULL_CAP)
}

/// `𝒢_g† f(h,k,t,ω) = δ(h)^{-1/2} δ(t)^{3/2} V_{g_h} f_t(τ_h k, ω_t)`.
pub fn g_dagger_transform(f: &SliceField, g: &SliceField, freq_grid: &ProductGrid, mode: EvalMode) -> Result<OtimesGaborField> {
    otimes_transform(TransformKind::Gdag, f, g, freq_grid, mode, DEFAULT_FULL_CAP)
}

/// Direct quadrature of a G-kind transform at window node `h`, signal node `t`.
#[allow(clippy::too_many_arguments)]
pub fn otimes_oracle(
    kind: TransformKind,
    f: &SliceField,
    g: &SliceField,
    h: usize,
    t: usize,
    k: &[f64],
    w: &[f64],
) -> Result<Complex64> {
    if !kind.is_otimes() {
        return Err(kind_error("G or Gdag", kind));
    }
    check_window_field(f, g)?;
    let hp = HPoint(f.h_grid().point(h));
    let tp = HPoint(f.h_grid().point(t));
    let maps = block_maps(f.group(), kind, &hp, &tp)?;
    Ok(maps.scale * point_oracle(&f.slice(t), &g.slice(h), &maps, k, w))
}

fn invert_block(
    block: &[Complex64],
    k_grid: &ProductGrid,
    freq_grid: &ProductGrid,
    maps: &BlockMaps,
    window: &SampledSlice,
    scale: f64,
) -> Vec<Complex64> {
    let shifts = mapped_nodes(k_grid, maps.shift.as_deref());
    let sw = k_grid.quadrature_weights();
    let mut out = synthesize(block, &sw, &shifts, freq_grid, maps.freq.as_deref(), window);
    for x in out.iter_mut() {
        *x *= scale;
    }
    out
}

/// Inversion of any single-window field with the window it was computed with.
pub fn gabor_inverse(field: &GaborField, u: &SampledWindow) -> Result<SliceField> {
    if u.grid() != &field.k_grid {
        return Err(Error::GridMismatch("window and field K-grids differ".into()));
    }
    let group = &field.group;
    let norm = u.norm_sq();
    let blocks: Vec<Vec<Complex64>> = (0..field.h_grid.len())
        .into_par_iter()
        .map(|i| {
            let h = HPoint(field.h_grid.point(i));
            let maps = block_maps(group, field.kind, &h, &h)?;
            let scale = inverse_scale(group, field.kind, &h) / norm;
            Ok(invert_block(field.slice(i), &field.k_grid, &field.freq_grid, &maps, u.as_slice(), scale))
        })
        .collect::<Result<_>>()?;
    SliceField::new(group.clone(), field.h_grid.clone(), field.k_grid.clone(), blocks.concat())
}

fn expect_kind(found: TransformKind, expected: TransformKind) -> Result<()> {
    if found != expected {
        return Err(kind_error(&expected.to_string(), found));
    }
    Ok(())
}

/// `f(h,k) = δ(h)^{-1/2} ‖u‖^{-2} ∬ 𝒱_u f(h,s,ω) [ρ(s,ω)u](k) ds dω`.
pub fn v_inverse(field: &GaborField, u: &SampledWindow) -> Result<SliceField> {
    expect_kind(field.kind, TransformKind::V)?;
    gabor_inverse(field, u)
}

/// `f(h,k) = δ(h)^{-1/2} ‖u‖^{-2} ∬ 𝒱_u† f(h,s,ω) [ρ(τ_h s, ω_h)u](k) ds dω`.
pub fn v_dagger_inverse(field: &GaborField, u: &SampledWindow) -> Result<SliceField> {
    expect_kind(field.kind, TransformKind::Vdag)?;
    gabor_inverse(field, u)
}

/// `A`: `δ(h)^{-1}‖u‖^{-2} ∬ A_u f [ρ(τ_h s, ω)u] ds dω`;
/// `B`: `‖u‖^{-2} ∬ B_u f [ρ(s, ω_h)u] ds dω`.
pub fn variant_inverse(field: &GaborField, u: &SampledWindow, kind: TransformKind) -> Result<SliceField> {
    if !matches!(kind, TransformKind::A | TransformKind::B) {
        return Err(kind_error("A or B", kind));
    }
    expect_kind(field.kind, kind)?;
    gabor_inverse(field, u)
}

/// Diagonal inversion of a G-kind field:
/// `f(h,·) = ‖g_h‖^{-2} δ(h)^{-1} ∬ F(h,s,h,ω) [ρ(A s, B ω) g_h] ds dω`.
pub fn otimes_inverse(field: &OtimesGaborField, g: &SliceField) -> Result<SliceField> {
    if !field.kind.is_otimes() {
        return Err(kind_error("G or Gdag", field.kind));
    }
    if g.k_grid() != &field.k_grid || g.h_grid() != &field.h_grid || g.group() != &field.group {
        return Err(Error::GridMismatch("window field and transform live on different grids".into()));
    }
    let norms = g.slice_norms_sq();
    if let Some((index, &norm_sq)) = norms.iter().enumerate().find(|(_, n)| **n <= DEGENERATE_SLICE_NORM) {
        return Err(Error::DegenerateWindowSlice { index, norm_sq });
    }
    let group = &field.group;
    let blocks: Vec<Vec<Complex64>> = (0..field.h_grid.len())
        .into_par_iter()
        .map(|i| {
            let h = HPoint(field.h_grid.point(i));
            let maps = block_maps(group, field.kind, &h, &h)?;
            let scale = inverse_scale(group, field.kind, &h) / norms[i];
            let block = field.diagonal_block(i);
            Ok(invert_block(&block, &field.k_grid, &field.freq_grid, &maps, &g.slice(i), scale))
        })
        .collect::<Result<_>>()?;
    SliceField::new(group.clone(), field.h_grid.clone(), field.k_grid.clone(), blocks.concat())
}

pub fn g_inverse(field: &OtimesGaborField, g: &SliceField) -> Result<SliceField> {
    expect_kind(field.kind, TransformKind::G)?;
    otimes_inverse(field, g)
}

pub fn g_dagger_inverse(field: &OtimesGaborField, g: &SliceField) -> Result<SliceField> {
    expect_kind(field.kind, TransformKind::Gdag)?;
    otimes_inverse(field, g)
}

/// Either kind of transform output.
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Gabor(&'a GaborField),
    Otimes(&'a OtimesGaborField),
}

impl<'a> From<&'a GaborField> for FieldRef<'a> {
    fn from(f: &'a GaborField) -> Self {
        FieldRef::Gabor(f)
    }
}

impl<'a> From<&'a OtimesGaborField> for FieldRef<'a> {
    fn from(f: &'a OtimesGaborField) -> Self {
        FieldRef::Otimes(f)
    }
}

impl FieldRef<'_> {
    pub fn kind(&self) -> TransformKind {
        match self {
            FieldRef::Gabor(f) => f.kind,
            FieldRef::Otimes(f) => f.kind,
        }
    }
}

/// A window on `K` (single-window kinds) or on `G_τ` (G-kinds).
#[derive(Debug, Clone, Copy)]
pub enum WindowRef<'a> {
    Single(&'a SampledWindow),
    Field(&'a SliceField),
}

impl<'a> From<&'a SampledWindow> for WindowRef<'a> {
    fn from(w: &'a SampledWindow) -> Self {
        WindowRef::Single(w)
    }
}

impl<'a> From<&'a SliceField> for WindowRef<'a> {
    fn from(w: &'a SliceField) -> Self {
        WindowRef::Field(w)
    }
}

/// `‖F‖² / (‖window‖² ‖f‖²)`, with `‖F‖` in `dh dk dω` (single-window kinds) or
/// `δ(h)dh dk · δ(t)^{-1}dt dω` (G-kinds). Off-diagonal blocks of a
/// diagonal-only G-kind field are recomputed on the fly from `f` and the window.
pub fn plancherel_ratio<'a>(
    field: impl Into<FieldRef<'a>>,
    f: &SliceField,
    window: impl Into<WindowRef<'a>>,
) -> Result<f64> {
    let field = field.into();
    let window = window.into();
    let f_norm = f.norm_sq();
    if !(f_norm > 0.0) {
        return Err(Error::ZeroSignal);
    }
    match (field, window) {
        (FieldRef::Gabor(field), WindowRef::Single(u)) => Ok(field.norm_sq() / (u.norm_sq() * f_norm)),
        (FieldRef::Otimes(field), WindowRef::Field(g)) => {
            let num = otimes_inner(field, field, (f, g), (f, g))?.re;
            Ok(num / (g.norm_sq() * f_norm))
        }
        (FieldRef::Gabor(field), WindowRef::Field(_)) => Err(kind_error("a single K-window", field.kind)),
        (FieldRef::Otimes(field), WindowRef::Single(_)) => Err(kind_error("a window field on G", field.kind)),
    }
}

/// `(⟨F₁, F₂⟩, ⟨w₂, w₁⟩⟨f₁, f₂⟩)` where `Fᵢ` is the transform of `fᵢ` with
/// window `wᵢ`.
pub fn orthogonality_inner<'a>(
    f1_field: impl Into<FieldRef<'a>>,
    f2_field: impl Into<FieldRef<'a>>,
    w1: impl Into<WindowRef<'a>>,
    w2: impl Into<WindowRef<'a>>,
    f1: &SliceField,
    f2: &SliceField,
) -> Result<(Complex64, Complex64)> {
    let (a, b) = (f1_field.into(), f2_field.into());
    if a.kind() != b.kind() {
        return Err(kind_error(&a.kind().to_string(), b.kind()));
    }
    let signals = f1.inner(f2)?;
    match (a, b, w1.into(), w2.into()) {
        (FieldRef::Gabor(a), FieldRef::Gabor(b), WindowRef::Single(u1), WindowRef::Single(u2)) => {
            if a.h_grid != b.h_grid || a.k_grid != b.k_grid || a.freq_grid != b.freq_grid {
                return Err(Error::GridMismatch("fields live on different grids".into()));
            }
            let windows = u2.as_slice().inner(u1.as_slice())?;
            Ok((a.inner_raw(&b.values), windows * signals))
        }
        (FieldRef::Otimes(a), FieldRef::Otimes(b), WindowRef::Field(g1), WindowRef::Field(g2)) => {
            let windows = g2.inner(g1)?;
            Ok((otimes_inner(a, b, (f1, g1), (f2, g2))?, windows * signals))
        }
        _ => Err(kind_error("matching field and window types", a.kind())),
    }
}

/// `⟨F₁, F₂⟩` against `δ(h)dh dk δ(t)^{-1}dt dω`, streaming any block that
/// is not stored in both fields.
fn otimes_inner(
    a: &OtimesGaborField,
    b: &OtimesGaborField,
    (f1, g1): (&SliceField, &SliceField),
    (f2, g2): (&SliceField, &SliceField),
) -> Result<Complex64> {
    for (field, f, g) in [(a, f1, g1), (b, f2, g2)] {
        check_window_field(f, g)?;
        if f.h_grid() != &field.h_grid || f.k_grid() != &field.k_grid || f.group() != &field.group {
            return Err(Error::GridMismatch("signal and transform live on different grids".into()));
        }
    }
    if a.h_grid != b.h_grid || a.k_grid != b.k_grid || a.freq_grid != b.freq_grid {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    let group = &a.group;
    let kind = a.kind;
    let nh = a.h_grid.len();
    let hw = h_weights(group, &a.h_grid, 1.0);
    let tw = h_weights(group, &a.h_grid, -1.0);
    let kf = block_weights(group, &a.k_grid, &a.freq_grid);
    let both_full = a.storage == OtimesStorage::Full && b.storage == OtimesStorage::Full;
    let hs: Vec<HPoint> = a.h_grid.nodes().into_iter().map(HPoint).collect();

    let streamed = !both_full && nh > 1;
    if streamed && !a.k_grid.is_uniform() {
        return Err(Error::UnsupportedGrid("streamed norms need a uniform K-grid".into()));
    }
    // One frequency kernel per distinct dual map: per t for Gdag, shared for G.
    let spectra: Vec<CrossSpectrum> = if !streamed {
        Vec::new()
    } else if kind == TransformKind::Gdag {
        hs.iter()
            .map(|t| Ok(CrossSpectrum::new(&a.k_grid, &a.freq_grid, Some(&linear_maps(group, t)?.1))))
            .collect::<Result<_>>()?
    } else {
        vec![CrossSpectrum::new(&a.k_grid, &a.freq_grid, None)]
    };
    let kw = k_weights(group, &a.k_grid);
    let weighted = |f: &SliceField, t: usize| -> Vec<Complex64> {
        f.slice_values(t).iter().zip(&kw).map(|(v, w)| v * *w).collect()
    };
    let same_inputs = std::ptr::eq(f1, f2) && std::ptr::eq(g1, g2);

    let per_h: Vec<Complex64> = (0..nh)
        .into_par_iter()
        .map(|h| -> Result<Complex64> {
            let mut acc = ZERO;
            let mut tables: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
            for t in 0..nh {
                let weight = hw[h] * tw[t];
                if weight == 0.0 {
                    continue;
                }
                if let (Some(x), Some(y)) = (a.block(h, t), b.block(h, t)) {
                    acc += weighted_inner(&x, &y, &kf) * weight;
                    continue;
                }
                let maps = block_maps(group, kind, &hs[h], &hs[t])?;
                let (ta, tb) = tables.get_or_insert_with(|| {
                    let shifts = mapped_nodes(&a.k_grid, maps.shift.as_deref());
                    let ta = window_table(&g1.slice(h), &shifts);
                    let tb = if same_inputs { Vec::new() } else { window_table(&g2.slice(h), &shifts) };
                    (ta, tb)
                });
                let spec = &spectra[if kind == TransformKind::Gdag { t } else { 0 }];
                let (wf1, wf2) = (weighted(f1, t), weighted(f2, t));
                acc += stream_block(spec, &wf1, ta, &wf2, if same_inputs { None } else { Some(tb) }, &kw)
                    * (weight * maps.scale * maps.scale);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(per_h.into_iter().sum())
}

/// `conj(u(y_j − s))` for every shift `s` (rows) and K-node `y_j`.
fn window_table(u: &SampledSlice, shifts: &[f64]) -> Vec<Complex64> {
    let grid = u.grid();
    let d = grid.ndim();
    let ys = mapped_nodes(grid, None);
    let ny = grid.len();
    let mut out = vec![ZERO; shifts.len() / d * ny];
    let mut x = vec![0.0; d];
    for (s, row) in out.chunks_exact_mut(ny).enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            for a in 0..d {
                x[a] = ys[j * d + a] - shifts[s * d + a];
            }
            *slot = u.eval(&x).conj();
        }
    }
    out
}

/// `Σ_s W_s Σ_ω W_ω X₁(s,ω) conj X₂(s,ω)` for one `(h, t)` block, where
/// `Xᵢ(s,·)` is the Fourier sum of `wfᵢ · tableᵢ[s]`.
fn stream_block(
    spec: &CrossSpectrum,
    wf1: &[Complex64],
    table1: &[Complex64],
    wf2: &[Complex64],
    table2: Option<&[Complex64]>,
    shift_weights: &[f64],
) -> Complex64 {
    let mut scratch = SpectrumScratch::default();
    let ny = wf1.len();
    let mut p = vec![ZERO; ny];
    let mut q = vec![ZERO; ny];
    let (mut ph, mut qh) = (Vec::new(), Vec::new());
    let mut acc = ZERO;
    for (s, &ws) in shift_weights.iter().enumerate() {
        if ws == 0.0 {
            continue;
        }
        let row1 = &table1[s * ny..(s + 1) * ny];
        for j in 0..ny {
            p[j] = wf1[j] * row1[j];
        }
        spec.spectrum(&p, &mut ph, &mut scratch);
        match table2 {
            None => acc += spec.norm_sq(&ph) * ws,
            Some(table2) => {
                let row2 = &table2[s * ny..(s + 1) * ny];
                for j in 0..ny {
                    q[j] = wf2[j] * row2[j];
                }
                spec.spectrum(&q, &mut qh, &mut scratch);
                acc += spec.pair(&ph, &qh) * ws;
            }
        }
    }
    acc
}

/// An owned transform output of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum TransformField {
    Gabor(GaborField),
    Otimes(OtimesGaborField),
}

impl TransformField {
    pub fn kind(&self) -> TransformKind {
        self.as_ref().kind()
    }

    pub fn as_ref(&self) -> FieldRef<'_> {
        match self {
            TransformField::Gabor(f) => FieldRef::Gabor(f),
            TransformField::Otimes(f) => FieldRef::Otimes(f),
        }
    }
}

/// An owned window: one `K`-window, or a window field on `G_τ`.
#[derive(Debug, Clone)]
pub enum Window {
    Single(SampledWindow),
    Field(SliceField),
}

impl Window {
    pub fn as_ref(&self) -> WindowRef<'_> {
        match self {
            Window::Single(u) => WindowRef::Single(u),
            Window::Field(g) => WindowRef::Field(g),
        }
    }
}

/// Forward transform of any kind; the window type must match the kind.
pub fn transform<'a>(
    kind: TransformKind,
    f: &SliceField,
    window: impl Into<WindowRef<'a>>,
    freq_grid: &ProductGrid,
    mode: EvalMode,
    cap: usize,
) -> Result<TransformField> {
    match (window.into(), kind.is_otimes()) {
        (WindowRef::Single(u), false) => gabor_transform(kind, f, u, freq_grid, mode).map(TransformField::Gabor),
        (WindowRef::Field(g), true) => otimes_transform(kind, f, g, freq_grid, mode, cap).map(TransformField::Otimes),
        (WindowRef::Single(_), true) => Err(kind_error("V, Vdag, A or B for a single window", kind)),
        (WindowRef::Field(_), false) => Err(kind_error("G or Gdag for a window field", kind)),
    }
}

/// The matching inversion formula for any field.
pub fn inverse<'a>(field: impl Into<FieldRef<'a>>, window: impl Into<WindowRef<'a>>) -> Result<SliceField> {
    match (field.into(), window.into()) {
        (FieldRef::Gabor(f), WindowRef::Single(u)) => gabor_inverse(f, u),
        (FieldRef::Otimes(f), WindowRef::Field(g)) => otimes_inverse(f, g),
        (FieldRef::Gabor(f), WindowRef::Field(_)) => Err(kind_error("a single K-window", f.kind)),
        (FieldRef::Otimes(f), WindowRef::Single(_)) => Err(kind_error("a window field on G", f.kind)),
    }
}

impl<'a> From<&'a TransformField> for FieldRef<'a> {
    fn from(f: &'a TransformField) -> Self {
        f.as_ref()
    }
}

impl<'a> From<&'a Window> for WindowRef<'a> {
    fn from(w: &'a Window) -> Self {
        w.as_ref()
    }
}
