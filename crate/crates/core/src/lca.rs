//! Classical time-frequency analysis on the abelian factor `K = ℝ^d`.
//!
//! Conventions: characters `ω(x) = e^{2πi ω·x}`, forward kernel
//! `e^{−2πi ω·x}`, no `1/√N` factors. Quadrature weights carry every measure
//! factor.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::czt::{cis_cycles, Direction, DftScratch};
use crate::error::{Error, Result};
use crate::grid::{interp_eval, ProductGrid};
use crate::kernels::{mapped_nodes, FourierMap};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Closed-form values of a sampled function, used for off-grid evaluation.
pub type Profile = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// A function on `K` (or `K̂`) sampled on a product grid.
#[derive(Clone)]
pub struct SampledSlice {
    values: Vec<Complex64>,
    grid: ProductGrid,
    profile: Option<Profile>,
}

impl fmt::Debug for SampledSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledSlice")
            .field("shape", &self.grid.shape())
            .field("profile", &self.profile.is_some())
            .finish()
    }
}

impl SampledSlice {
    pub fn new(values: Vec<Complex64>, grid: ProductGrid) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite sample".into()));
        }
        Ok(Self { values, grid, profile: None })
    }

    pub fn zeros(grid: ProductGrid) -> Self {
        Self { values: vec![ZERO; grid.len()], grid, profile: None }
    }

    /// Sample `f` on `grid` and keep it for exact off-grid evaluation.
    pub fn from_fn(grid: ProductGrid, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        let profile: Profile = Arc::new(f);
        let mut p = vec![0.0; grid.ndim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.point_into(i, &mut p);
                profile(&p)
            })
            .collect();
        Self { values, grid, profile: Some(profile) }
    }

    pub fn with_profile(mut self, profile: Profile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn profile(&self) -> Option<&Profile> {
        self.profile.as_ref()
    }

    /// Value at an arbitrary point: the profile if present, else multilinear
    /// interpolation (zero outside the grid hull).
    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match &self.profile {
            Some(p) => p(x),
            None => interp_eval(&self.values, &self.grid, x),
        }
    }

    /// `⟨self, other⟩ = Σ w v conj(o)`.
    pub fn inner(&self, other: &SampledSlice) -> Result<Complex64> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .grid
            .quadrature_weights()
            .iter()
            .zip(&self.values)
            .zip(&other.values)
            .map(|((w, a), b)| a * b.conj() * *w)
            .sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid
            .quadrature_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }
}

pub(crate) fn check_same_grid(a: &ProductGrid, b: &ProductGrid) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("grid shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    Ok(())
}

/// A nonzero window `u ∈ L²(K)`.
#[derive(Debug, Clone)]
pub struct SampledWindow {
    slice: SampledSlice,
    norm_sq: f64,
}

impl SampledWindow {
    pub fn new(slice: SampledSlice) -> Result<Self> {
        let norm_sq = slice.norm_sq();
        if !(norm_sq > 0.0) {
            return Err(Error::ZeroWindow);
        }
        Ok(Self { slice, norm_sq })
    }

    pub fn from_fn(grid: ProductGrid, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Result<Self> {
        Self::new(SampledSlice::from_fn(grid, f))
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn as_slice(&self) -> &SampledSlice {
        &self.slice
    }

    pub fn grid(&self) -> &ProductGrid {
        self.slice.grid()
    }

    pub fn values(&self) -> &[Complex64] {
        self.slice.values()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.slice.eval(x)
    }
}

/// `V_u v` over shift-grid × frequency-grid, row-major with shifts outer.
#[derive(Debug, Clone, PartialEq)]
pub struct STFTField {
    pub values: Vec<Complex64>,
    pub shift_grid: ProductGrid,
    pub freq_grid: ProductGrid,
}

impl STFTField {
    pub fn get(&self, shift: usize, freq: usize) -> Complex64 {
        self.values[shift * self.freq_grid.len() + freq]
    }

    /// `∬ |V|² ds dω` by quadrature.
    pub fn norm_sq(&self) -> f64 {
        let ws = self.shift_grid.quadrature_weights();
        let wf = self.freq_grid.quadrature_weights();
        self.values
            .chunks_exact(wf.len())
            .zip(&ws)
            .map(|(row, a)| a * row.iter().zip(&wf).map(|(v, b)| b * v.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// `v̂(ω) = Σ_j w_j v(k_j) e^{−2πi ω·k_j}` on `freq_grid`.
pub fn fourier(v: &SampledSlice, freq_grid: &ProductGrid) -> Result<SampledSlice> {
    if !v.grid().is_uniform() {
        return Err(Error::UnsupportedGrid("Fourier transform needs a uniform K-grid".into()));
    }
    if freq_grid.ndim() != v.grid().ndim() {
        return Err(Error::GridMismatch("frequency grid rank differs from K-grid rank".into()));
    }
    let weighted: Vec<Complex64> =
        v.values().iter().zip(v.grid().quadrature_weights()).map(|(x, w)| x * w).collect();
    let map = FourierMap::new(v.grid(), None, freq_grid, None, Direction::Forward);
    let mut out = vec![ZERO; freq_grid.len()];
    map.apply_rows(&weighted, &mut out, &mut DftScratch::default());
    SampledSlice::new(out, freq_grid.clone())
}

/// `φ̌(x) = Σ_l w_l φ(ω_l) e^{2πi ω_l·x}` on `k_grid`.
pub fn inverse_fourier(phi: &SampledSlice, k_grid: &ProductGrid) -> Result<SampledSlice> {
    if phi.grid().ndim() != k_grid.ndim() {
        return Err(Error::GridMismatch("K-grid rank differs from frequency grid rank".into()));
    }
    let weighted: Vec<Complex64> =
        phi.values().iter().zip(phi.grid().quadrature_weights()).map(|(x, w)| x * w).collect();
    let map = FourierMap::new(phi.grid(), None, k_grid, None, Direction::Inverse);
    let mut out = vec![ZERO; k_grid.len()];
    map.apply_rows(&weighted, &mut out, &mut DftScratch::default());
    SampledSlice::new(out, k_grid.clone())
}

/// `[ρ(k,ω)u](y) = e^{2πi ω·y} u(y − k)` on the window's grid.
pub fn rho_apply(k: &[f64], w: &[f64], u: &SampledWindow) -> SampledSlice {
    let grid = u.grid();
    let mut y = vec![0.0; grid.ndim()];
    let mut shifted = vec![0.0; grid.ndim()];
    let values = (0..grid.len())
        .map(|i| {
            grid.point_into(i, &mut y);
            for d in 0..y.len() {
                shifted[d] = y[d] - k[d];
            }
            let phase: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
            u.eval(&shifted) * cis_cycles(phase)
        })
        .collect();
    SampledSlice { values, grid: grid.clone(), profile: None }
}

/// Direct quadrature of `V_u v(s, ω) = ∫ v(y) conj(u(y − s)) e^{−2πi ω·y} dy`.
pub fn stft_oracle(v: &SampledSlice, u: &SampledSlice, s: &[f64], w: &[f64]) -> Complex64 {
    let grid = v.grid();
    let weights = grid.quadrature_weights();
    let mut y = vec![0.0; grid.ndim()];
    let mut shifted = vec![0.0; grid.ndim()];
    let mut acc = ZERO;
    for (j, (val, wt)) in v.values().iter().zip(&weights).enumerate() {
        grid.point_into(j, &mut y);
        for d in 0..y.len() {
            shifted[d] = y[d] - s[d];
        }
        let phase: f64 = w.iter().zip(&y).map(|(a, b)| a * b).sum();
        acc += val * u.eval(&shifted).conj() * cis_cycles(-phase) * *wt;
    }
    acc
}

/// Rows `p_s(y) = w(y) v(y) conj(u(y − s))`, one per shift (shifts flattened
/// `n × ndim`).
pub(crate) fn product_rows(v: &SampledSlice, u: &SampledSlice, shifts: &[f64]) -> Vec<Complex64> {
    let grid = v.grid();
    let d = grid.ndim();
    let ny = grid.len();
    let weighted: Vec<Complex64> = v.values().iter().zip(grid.quadrature_weights()).map(|(x, w)| x * w).collect();
    let ys = mapped_nodes(grid, None);
    let ns = shifts.len() / d;
    let mut rows = vec![ZERO; ns * ny];
    let mut shifted = vec![0.0; d];
    for (s, row) in rows.chunks_exact_mut(ny).enumerate() {
        let shift = &shifts[s * d..(s + 1) * d];
        for (j, slot) in row.iter_mut().enumerate() {
            if weighted[j] == ZERO {
                continue;
            }
            for a in 0..d {
                shifted[a] = ys[j * d + a] - shift[a];
            }
            *slot = weighted[j] * u.eval(&shifted).conj();
        }
    }
    rows
}

/// `V_u v` at the listed shifts and at `B·ω` for `ω` on `freq_grid`
/// (`freq_map = None` means `B = I`). Rows are shifts.
pub(crate) fn stft_at(
    v: &SampledSlice,
    u: &SampledSlice,
    shifts: &[f64],
    freq_grid: &ProductGrid,
    freq_map: Option<&[f64]>,
) -> Vec<Complex64> {
    let rows = product_rows(v, u, shifts);
    let map = FourierMap::new(v.grid(), None, freq_grid, freq_map, Direction::Forward);
    let mut out = vec![ZERO; rows.len() / v.grid().len() * freq_grid.len()];
    map.apply_rows(&rows, &mut out, &mut DftScratch::default());
    out
}

/// `V_u v` at every node of the K-grid (as shifts) and every node of
/// `freq_grid`.
pub fn stft(v: &SampledSlice, u: &SampledWindow, freq_grid: &ProductGrid) -> Result<STFTField> {
    check_same_grid(v.grid(), u.grid())?;
    if freq_grid.ndim() != v.grid().ndim() {
        return Err(Error::GridMismatch("frequency grid rank differs from K-grid rank".into()));
    }
    let shifts = mapped_nodes(v.grid(), None);
    let values = stft_at(v, u.as_slice(), &shifts, freq_grid, None);
    Ok(STFTField { values, shift_grid: v.grid().clone(), freq_grid: freq_grid.clone() })
}

/// `Σ_s W_s u(k − A s) Σ_ω W_ω F(s,ω) e^{2πi (Bω)·k}` on `u`'s grid.
///
/// `shifts` are the already-mapped shift points `A s`, one per field row.
pub(crate) fn synthesize(
    field: &[Complex64],
    shift_weights: &[f64],
    shifts: &[f64],
    freq_grid: &ProductGrid,
    freq_map: Option<&[f64]>,
    u: &SampledSlice,
) -> Vec<Complex64> {
    let k_grid = u.grid();
    let d = k_grid.ndim();
    let nf = freq_grid.len();
    let nk = k_grid.len();
    let fw = freq_grid.quadrature_weights();
    let weighted: Vec<Complex64> =
        field.chunks_exact(nf).flat_map(|row| row.iter().zip(&fw).map(|(x, w)| x * w)).collect();
    let map = FourierMap::new(freq_grid, freq_map, k_grid, None, Direction::Inverse);
    let mut modulated = vec![ZERO; shift_weights.len() * nk];
    map.apply_rows(&weighted, &mut modulated, &mut DftScratch::default());
    let ks = mapped_nodes(k_grid, None);
    let mut out = vec![ZERO; nk];
    let mut shifted = vec![0.0; d];
    for (s, row) in modulated.chunks_exact(nk).enumerate() {
        let ws = shift_weights[s];
        if ws == 0.0 {
            continue;
        }
        let shift = &shifts[s * d..(s + 1) * d];
        for (i, (o, m)) in out.iter_mut().zip(row).enumerate() {
            for a in 0..d {
                shifted[a] = ks[i * d + a] - shift[a];
            }
            *o += m * u.eval(&shifted) * ws;
        }
    }
    out
}

/// Two-window inversion `v ≈ ⟨u₂,u⟩⁻¹ ∬ V_u v(k,ω) ρ(k,ω)u₂ dk dω`.
pub fn istft(field: &STFTField, u: &SampledWindow, u2: &SampledWindow) -> Result<SampledSlice> {
    check_same_grid(u.grid(), u2.grid())?;
    let pairing = u2.as_slice().inner(u.as_slice())?;
    let bound = 1e-10 * (u.norm_sq() * u2.norm_sq()).sqrt();
    if pairing.norm() <= bound {
        return Err(Error::NearOrthogonalWindows { inner: pairing.norm(), bound });
    }
    let shifts = mapped_nodes(&field.shift_grid, None);
    let sw = field.shift_grid.quadrature_weights();
    let mut out = synthesize(&field.values, &sw, &shifts, &field.freq_grid, None, u2.as_slice());
    let scale = pairing.inv();
    for v in out.iter_mut() {
        *v *= scale;
    }
    SampledSlice::new(out, u.grid().clone())
}

/// Both sides of Parseval: `(∫ f conj(φ̌) dk, ∫ f̂ conj(φ) dω)`.
pub fn parseval_check(f: &SampledSlice, phi: &SampledSlice) -> Result<(Complex64, Complex64)> {
    let check = inverse_fourier(phi, f.grid())?;
    let lhs = f.inner(&check)?;
    let f_hat = fourier(f, phi.grid())?;
    let rhs = f_hat.inner(phi)?;
    Ok((lhs, rhs))
}
