//! Batched Fourier sums shared by the STFT and the group transforms.
//!
//! [`FourierMap`] evaluates `Σ_j x_j e^{±2πi ξ_l·y_j}` for every row of a
//! matrix, where both node sets are product grids optionally pushed through a
//! linear map. Separable cases go through chirp-z; the rest through a dense
//! complex GEMM. Both compute the same sum as the direct quadrature.
//!
//! [`CrossSpectrum`] evaluates `Σ_l W_l X_p(ξ_l) conj X_q(ξ_l)` without ever
//! forming `X_p`, by pairing the autocorrelation of `(p, q)` with a
//! precomputed frequency kernel.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::czt::{cis_cycles, Direction, DftScratch, Lattice, LatticeDft};
use crate::grid::ProductGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Diagonal of a row-major square matrix, or `None` if it has off-diagonal
/// entries.
pub(crate) fn diagonal_of(m: &[f64], dim: usize) -> Option<Vec<f64>> {
    for r in 0..dim {
        for c in 0..dim {
            if r != c && m[r * dim + c] != 0.0 {
                return None;
            }
        }
    }
    Some((0..dim).map(|d| m[d * dim + d]).collect())
}

/// `out = M·x` for a row-major square matrix.
#[inline]
pub(crate) fn mat_vec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for r in 0..d {
        out[r] = (0..d).map(|c| m[r * d + c] * x[c]).sum();
    }
}

/// Nodes of `grid` mapped by `map`, flattened row-major (`len × ndim`).
pub(crate) fn mapped_nodes(grid: &ProductGrid, map: Option<&[f64]>) -> Vec<f64> {
    let d = grid.ndim();
    let mut out = vec![0.0; grid.len() * d];
    let mut p = vec![0.0; d];
    for i in 0..grid.len() {
        grid.point_into(i, &mut p);
        match map {
            Some(m) => mat_vec(m, &p, &mut out[i * d..(i + 1) * d]),
            None => out[i * d..(i + 1) * d].copy_from_slice(&p),
        }
    }
    out
}

fn lattices(grid: &ProductGrid, map: Option<&[f64]>) -> Option<Vec<Lattice>> {
    if !grid.is_uniform() {
        return None;
    }
    let d = grid.ndim();
    let scale = match map {
        Some(m) => diagonal_of(m, d)?,
        None => vec![1.0; d],
    };
    Some(
        grid.axes()
            .iter()
            .zip(scale)
            .map(|(a, s)| Lattice::new(a.points()[0] * s, a.step() * s, a.count()))
            .collect(),
    )
}

enum Route {
    Lattice(LatticeDft),
    Dense(Vec<Complex64>),
}

/// Row-wise Fourier sum from one (mapped) node set to another.
pub(crate) struct FourierMap {
    n_in: usize,
    n_out: usize,
    route: Route,
}

impl FourierMap {
    pub(crate) fn new(
        from: &ProductGrid,
        from_map: Option<&[f64]>,
        to: &ProductGrid,
        to_map: Option<&[f64]>,
        dir: Direction,
    ) -> Self {
        assert_eq!(from.ndim(), to.ndim(), "Fourier map between grids of different rank");
        let (n_in, n_out) = (from.len(), to.len());
        let route = match (lattices(from, from_map), lattices(to, to_map)) {
            (Some(li), Some(lo)) => Route::Lattice(LatticeDft::new(&li, &lo, dir)),
            _ => {
                let d = from.ndim();
                let xi = mapped_nodes(from, from_map);
                let xo = mapped_nodes(to, to_map);
                let sign = if dir == Direction::Forward { -1.0 } else { 1.0 };
                let mut kernel = vec![ZERO; n_in * n_out];
                for i in 0..n_in {
                    let y = &xi[i * d..(i + 1) * d];
                    for (l, slot) in kernel[i * n_out..(i + 1) * n_out].iter_mut().enumerate() {
                        let w = &xo[l * d..(l + 1) * d];
                        let dot: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum();
                        *slot = cis_cycles(sign * dot);
                    }
                }
                Route::Dense(kernel)
            }
        };
        Self { n_in, n_out, route }
    }

    /// `input` is `rows × n_in`, `output` is `rows × n_out`, both row-major.
    pub(crate) fn apply_rows(&self, input: &[Complex64], output: &mut [Complex64], ws: &mut DftScratch) {
        let rows = input.len() / self.n_in;
        debug_assert_eq!(output.len(), rows * self.n_out);
        match &self.route {
            Route::Lattice(dft) => {
                for (x, y) in input.chunks_exact(self.n_in).zip(output.chunks_exact_mut(self.n_out)) {
                    dft.apply(x, y, ws);
                }
            }
            Route::Dense(kernel) => zgemm(input, kernel, output, rows, self.n_in, self.n_out),
        }
    }
}

/// `c = a·b` for row-major `a` (m×k) and `b` (k×n).
pub(crate) fn zgemm(a: &[Complex64], b: &[Complex64], c: &mut [Complex64], m: usize, k: usize, n: usize) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: Complex64 is repr(C) with layout [re, im]; the slices were
    // bounds-checked above and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Padded multi-dimensional FFT used by [`CrossSpectrum`].
struct PaddedFft {
    shape: Vec<usize>,
    padded: Vec<usize>,
    plans: Vec<Arc<dyn Fft<f64>>>,
}

impl PaddedFft {
    fn new(shape: Vec<usize>) -> Self {
        let padded: Vec<usize> = shape.iter().map(|&n| (2 * n).next_power_of_two()).collect();
        let mut planner = FftPlanner::new();
        let plans = padded.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        Self { shape, padded, plans }
    }

    fn len(&self) -> usize {
        self.padded.iter().product()
    }

    /// Zero-pad `x` (shape `self.shape`) and transform in place into `out`.
    fn forward(&self, x: &[Complex64], out: &mut Vec<Complex64>, line: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        out.clear();
        out.resize(self.len(), ZERO);
        scatter_padded(x, &self.shape, &self.padded, out);
        transform_axes(out, &self.padded, &self.plans, line, scratch);
    }
}

fn scatter_padded(x: &[Complex64], shape: &[usize], padded: &[usize], out: &mut [Complex64]) {
    let d = shape.len();
    let mut idx = vec![0usize; d];
    for &v in x {
        let mut flat = 0;
        for a in 0..d {
            flat = flat * padded[a] + idx[a];
        }
        out[flat] = v;
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < shape[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

fn transform_axes(
    buf: &mut [Complex64],
    shape: &[usize],
    plans: &[Arc<dyn Fft<f64>>],
    line: &mut Vec<Complex64>,
    scratch: &mut Vec<Complex64>,
) {
    for (a, plan) in plans.iter().enumerate() {
        let need = plan.get_inplace_scratch_len();
        if scratch.len() < need {
            scratch.resize(need, ZERO);
        }
        let n = shape[a];
        let inner: usize = shape[a + 1..].iter().product();
        if inner == 1 {
            plan.process_with_scratch(buf, &mut scratch[..need]);
            continue;
        }
        let outer: usize = shape[..a].iter().product();
        line.resize(n, ZERO);
        for o in 0..outer {
            for i in 0..inner {
                for j in 0..n {
                    line[j] = buf[(o * n + j) * inner + i];
                }
                plan.process_with_scratch(line, &mut scratch[..need]);
                for j in 0..n {
                    buf[(o * n + j) * inner + i] = line[j];
                }
            }
        }
    }
}

/// Quadrature of `X_p conj X_q` over a (mapped) frequency grid, where `X_p` is
/// the Fourier sum of `p` over a uniform grid.
pub(crate) struct CrossSpectrum {
    fft: PaddedFft,
    kernel_hat: Vec<Complex64>,
}

/// Work buffers for [`CrossSpectrum::spectrum`].
#[derive(Default)]
pub(crate) struct SpectrumScratch {
    line: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl CrossSpectrum {
    /// `y_grid` must be uniform.
    pub(crate) fn new(y_grid: &ProductGrid, freq_grid: &ProductGrid, freq_map: Option<&[f64]>) -> Self {
        let d = y_grid.ndim();
        let shape = y_grid.shape();
        let steps: Vec<f64> = y_grid.axes().iter().map(|a| a.step()).collect();
        let fft = PaddedFft::new(shape.clone());
        let xi = mapped_nodes(freq_grid, freq_map);
        let fw = freq_grid.quadrature_weights();
        // K(Δ) = Σ_l W_l e^{-2πi ξ_l·(Δ∘step)} at Δ mod padded.
        let mut kernel = vec![ZERO; fft.len()];
        let mut delta = vec![0i64; d];
        let mut lag = vec![0.0; d];
        let span: Vec<usize> = shape.iter().map(|&n| 2 * n - 1).collect();
        let total: usize = span.iter().product();
        for flat in 0..total {
            let mut r = flat;
            for a in (0..d).rev() {
                delta[a] = (r % span[a]) as i64 - (shape[a] as i64 - 1);
                r /= span[a];
            }
            for a in 0..d {
                lag[a] = delta[a] as f64 * steps[a];
            }
            let mut acc = ZERO;
            for (l, w) in fw.iter().enumerate() {
                let dot: f64 = xi[l * d..(l + 1) * d].iter().zip(&lag).map(|(x, y)| x * y).sum();
                acc += cis_cycles(-dot) * *w;
            }
            let mut idx = 0;
            for a in 0..d {
                idx = idx * fft.padded[a] + delta[a].rem_euclid(fft.padded[a] as i64) as usize;
            }
            kernel[idx] = acc;
        }
        // K̃_m = Σ_Δ K(Δ) e^{+2πi mΔ/M}; by conjugation symmetry of the forward FFT.
        for k in kernel.iter_mut() {
            *k = k.conj();
        }
        let mut line = Vec::new();
        let mut scratch = Vec::new();
        transform_axes(&mut kernel, &fft.padded, &fft.plans, &mut line, &mut scratch);
        let inv_m = 1.0 / fft.len() as f64;
        for k in kernel.iter_mut() {
            *k = k.conj() * inv_m;
        }
        Self { fft, kernel_hat: kernel }
    }

    pub(crate) fn spectrum(&self, p: &[Complex64], out: &mut Vec<Complex64>, ws: &mut SpectrumScratch) {
        self.fft.forward(p, out, &mut ws.line, &mut ws.fft);
    }

    /// `Σ_l W_l X_p(ξ_l) conj X_q(ξ_l)` from the spectra of `p` and `q`.
    pub(crate) fn pair(&self, p_hat: &[Complex64], q_hat: &[Complex64]) -> Complex64 {
        p_hat
            .iter()
            .zip(q_hat)
            .zip(&self.kernel_hat)
            .map(|((a, b), k)| a * b.conj() * k)
            .sum()
    }

    /// `Σ_l W_l |X_p(ξ_l)|²` from the spectrum of `p`.
    pub(crate) fn norm_sq(&self, p_hat: &[Complex64]) -> f64 {
        p_hat.iter().zip(&self.kernel_hat).map(|(a, k)| a.norm_sqr() * k.re).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn grid2(a: (f64, f64, usize), b: (f64, f64, usize)) -> ProductGrid {
        ProductGrid::new(vec![
            Grid1D::uniform(a.0, a.1, a.2).unwrap(),
            Grid1D::uniform(b.0, b.1, b.2).unwrap(),
        ])
        .unwrap()
    }

    fn sample(n: usize, seed: f64) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::new((i as f64 * 0.37 + seed).sin(), (i as f64 * 0.11 - seed).cos()))
            .collect()
    }

    fn direct(x: &[Complex64], from: &ProductGrid, fm: Option<&[f64]>, to: &ProductGrid, tm: Option<&[f64]>) -> Vec<Complex64> {
        let d = from.ndim();
        let xi = mapped_nodes(from, fm);
        let xo = mapped_nodes(to, tm);
        (0..to.len())
            .map(|l| {
                (0..from.len())
                    .map(|j| {
                        let dot: f64 = (0..d).map(|a| xi[j * d + a] * xo[l * d + a]).sum();
                        x[j] * cis_cycles(-dot)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn lattice_and_dense_routes_agree_with_direct_sum() {
        let y = grid2((-2.0, 2.0, 9), (-1.5, 1.5, 8));
        let w = grid2((-1.0, 1.0, 6), (-2.0, 2.0, 7));
        let x = sample(72, 0.3);
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let rot = [c, -s, s, c];
        let diag = [0.5, 2.0, 0.0, 0.0];
        let diag = [diag[0], 0.0, 0.0, diag[1]];
        for map in [None, Some(&rot[..]), Some(&diag[..])] {
            let fm = FourierMap::new(&y, None, &w, map, Direction::Forward);
            let mut out = vec![ZERO; w.len()];
            fm.apply_rows(&x, &mut out, &mut DftScratch::default());
            let expect = direct(&x, &y, None, &w, map);
            for (a, b) in out.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-11, "{a} {b}");
            }
        }
    }

    #[test]
    fn cross_spectrum_matches_explicit_quadrature() {
        let y = grid2((-2.0, 2.0, 9), (-1.5, 1.5, 8));
        let w = grid2((-1.0, 1.0, 6), (-2.0, 2.0, 7));
        let (c, s) = (1.1f64.cos(), 1.1f64.sin());
        let rot = [c, -s, s, c];
        let p = sample(72, 0.3);
        let q = sample(72, 1.7);
        let wts = w.quadrature_weights();
        for map in [None, Some(&rot[..])] {
            let xp = direct(&p, &y, None, &w, map);
            let xq = direct(&q, &y, None, &w, map);
            let expect: Complex64 = (0..w.len()).map(|l| xp[l] * xq[l].conj() * wts[l]).sum();
            let expect_norm: f64 = (0..w.len()).map(|l| xp[l].norm_sqr() * wts[l]).sum();
            let cs = CrossSpectrum::new(&y, &w, map);
            let (mut ph, mut qh) = (Vec::new(), Vec::new());
            let mut ws = SpectrumScratch::default();
            cs.spectrum(&p, &mut ph, &mut ws);
            cs.spectrum(&q, &mut qh, &mut ws);
            assert!((cs.pair(&ph, &qh) - expect).norm() < 1e-10 * expect.norm().max(1.0));
            assert!((cs.norm_sq(&ph) - expect_norm).abs() < 1e-10 * expect_norm);
        }
    }
}
