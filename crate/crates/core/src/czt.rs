//! Uniform-lattice to uniform-lattice Fourier sums via Bluestein's chirp-z
//! factorization.
//!
//! For samples `x_j` at `y₀ + j·dy` and output nodes `w₀ + l·dw` this
//! evaluates `X_l = Σ_j x_j e^{±2πi (w₀ + l dw)(y₀ + j dy)}` exactly (up to
//! rounding) with three FFTs, for any pair of spacings. Multi-dimensional
//! lattices are handled axis by axis.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// `e^{2πi c}` with the cycle count reduced first.
#[inline]
pub(crate) fn cis_cycles(c: f64) -> Complex64 {
    let r = c - c.round();
    let (s, co) = (TAU * r).sin_cos();
    Complex64::new(co, s)
}

/// Evenly spaced 1-D node set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl Lattice {
    pub fn new(start: f64, step: f64, count: usize) -> Self {
        Self { start, step, count }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    /// Image of the lattice under `x ↦ scale·x`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self { start: self.start * scale, step: self.step * scale, count: self.count }
    }
}

/// Kernel sign: `Forward` uses `e^{−2πiωy}`, `Inverse` uses `e^{+2πiωy}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => -1.0,
            Direction::Inverse => 1.0,
        }
    }
}

struct Czt1 {
    n: usize,
    m: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Czt1 {
    fn new(input: Lattice, output: Lattice, dir: Direction) -> Self {
        let s = dir.sign();
        let (n, m) = (input.count, output.count);
        let size = (n + m - 1).next_power_of_two();
        let alpha = input.step * output.step;
        let pre = (0..n)
            .map(|j| {
                let jf = j as f64;
                cis_cycles(s * (output.start * jf * input.step + 0.5 * alpha * jf * jf))
            })
            .collect();
        let post = (0..m)
            .map(|l| {
                let lf = l as f64;
                cis_cycles(s * (output.node(l) * input.start + 0.5 * alpha * lf * lf))
            })
            .collect();
        let chirp = |d: i64| cis_cycles(-s * 0.5 * alpha * (d * d) as f64);
        let mut kernel = vec![Complex64::new(0.0, 0.0); size];
        for (l, slot) in kernel.iter_mut().enumerate().take(m) {
            *slot = chirp(l as i64);
        }
        for j in 1..n {
            kernel[size - j] = chirp(-(j as i64));
        }
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(size), p.plan_fft_inverse(size))
        });
        fwd.process(&mut kernel);
        let scale = 1.0 / size as f64;
        for k in kernel.iter_mut() {
            *k *= scale;
        }
        Self { n, m, pre, post, kernel, fwd, inv }
    }

    fn apply(&self, input: &[Complex64], output: &mut [Complex64], buf: &mut Vec<Complex64>, scratch: &mut Vec<Complex64>) {
        let size = self.kernel.len();
        buf.clear();
        buf.extend(input.iter().zip(&self.pre).map(|(x, p)| x * p));
        buf.resize(size, Complex64::new(0.0, 0.0));
        let need = self.fwd.get_inplace_scratch_len().max(self.inv.get_inplace_scratch_len());
        if scratch.len() < need {
            scratch.resize(need, Complex64::new(0.0, 0.0));
        }
        self.fwd.process_with_scratch(buf, &mut scratch[..need]);
        for (b, k) in buf.iter_mut().zip(&self.kernel) {
            *b *= k;
        }
        self.inv.process_with_scratch(buf, &mut scratch[..need]);
        for ((o, b), p) in output.iter_mut().zip(buf.iter()).zip(&self.post) {
            *o = b * p;
        }
    }
}

/// Reusable buffers for [`LatticeDft::apply`].
#[derive(Default)]
pub struct DftScratch {
    stage: Vec<Complex64>,
    line_in: Vec<Complex64>,
    line_out: Vec<Complex64>,
    buf: Vec<Complex64>,
    fft: Vec<Complex64>,
}

/// Separable Fourier sum between two rectangular lattices of equal rank.
pub struct LatticeDft {
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    axes: Vec<Czt1>,
}

impl LatticeDft {
    pub fn new(input: &[Lattice], output: &[Lattice], dir: Direction) -> Self {
        assert_eq!(input.len(), output.len(), "lattice ranks differ");
        Self {
            in_shape: input.iter().map(|l| l.count).collect(),
            out_shape: output.iter().map(|l| l.count).collect(),
            axes: input.iter().zip(output).map(|(&i, &o)| Czt1::new(i, o, dir)).collect(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.in_shape.iter().product()
    }

    pub fn output_len(&self) -> usize {
        self.out_shape.iter().product()
    }

    /// `input` and `output` are row-major over the input and output lattices.
    pub fn apply(&self, input: &[Complex64], output: &mut [Complex64], ws: &mut DftScratch) {
        debug_assert_eq!(input.len(), self.input_len());
        debug_assert_eq!(output.len(), self.output_len());
        if self.axes.len() == 1 {
            self.axes[0].apply(input, output, &mut ws.buf, &mut ws.fft);
            return;
        }
        let mut shape = self.in_shape.clone();
        let mut current = std::mem::take(&mut ws.stage);
        current.clear();
        current.extend_from_slice(input);
        // Transform the last axis first, updating the shape as each axis is done.
        for d in (0..self.axes.len()).rev() {
            let czt = &self.axes[d];
            let inner: usize = shape[d + 1..].iter().product();
            let outer: usize = shape[..d].iter().product();
            let (n, m) = (czt.n, czt.m);
            let mut next = vec![Complex64::new(0.0, 0.0); outer * m * inner];
            ws.line_in.resize(n, Complex64::new(0.0, 0.0));
            ws.line_out.resize(m, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                for i in 0..inner {
                    for j in 0..n {
                        ws.line_in[j] = current[(o * n + j) * inner + i];
                    }
                    czt.apply(&ws.line_in, &mut ws.line_out, &mut ws.buf, &mut ws.fft);
                    for l in 0..m {
                        next[(o * m + l) * inner + i] = ws.line_out[l];
                    }
                }
            }
            shape[d] = m;
            current = next;
        }
        output.copy_from_slice(&current);
        ws.stage = current;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(input: &[Complex64], y: Lattice, w: Lattice, s: f64) -> Vec<Complex64> {
        (0..w.count)
            .map(|l| {
                (0..y.count)
                    .map(|j| input[j] * cis_cycles(s * w.node(l) * y.node(j)))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_1d() {
        let y = Lattice::new(-3.1, 0.173, 37);
        let w = Lattice::new(2.4, -0.091, 23);
        let input: Vec<Complex64> =
            (0..37).map(|j| Complex64::new((j as f64 * 0.7).sin(), (j as f64).cos() * 0.3)).collect();
        for dir in [Direction::Forward, Direction::Inverse] {
            let dft = LatticeDft::new(&[y], &[w], dir);
            let mut out = vec![Complex64::new(0.0, 0.0); 23];
            dft.apply(&input, &mut out, &mut DftScratch::default());
            let expect = direct(&input, y, w, dir.sign());
            for (a, b) in out.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn matches_direct_sum_2d() {
        let ys = [Lattice::new(-1.0, 0.25, 9), Lattice::new(0.5, 0.3, 6)];
        let ws = [Lattice::new(-2.0, 0.4, 5), Lattice::new(1.0, -0.2, 7)];
        let input: Vec<Complex64> =
            (0..54).map(|i| Complex64::new((i as f64 * 0.31).cos(), (i as f64 * 0.17).sin())).collect();
        let dft = LatticeDft::new(&ys, &ws, Direction::Forward);
        let mut out = vec![Complex64::new(0.0, 0.0); 35];
        dft.apply(&input, &mut out, &mut DftScratch::default());
        for l0 in 0..5 {
            for l1 in 0..7 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j0 in 0..9 {
                    for j1 in 0..6 {
                        let phase = ws[0].node(l0) * ys[0].node(j0) + ws[1].node(l1) * ys[1].node(j1);
                        acc += input[j0 * 6 + j1] * cis_cycles(-phase);
                    }
                }
                assert!((out[l0 * 7 + l1] - acc).norm() < 1e-12);
            }
        }
    }
}
