//! Discretization of `H`, `K` and `K̂`: one-dimensional grids, their
//! tensor products, trapezoidal Haar weights and multilinear interpolation.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, HPoint, KPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridKind {
    /// `start + iΔ`, both ends included.
    Uniform,
    /// `start·rⁱ`, uniform in the logarithm; both ends included.
    LogUniform,
    /// `start + iΔ` with `Δ = (stop − start)/count`; `stop` is identified
    /// with `start` and is not a node.
    Periodic,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridKind::Uniform => "uniform",
            GridKind::LogUniform => "log",
            GridKind::Periodic => "periodic",
        })
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GridKind::Uniform),
            "log" | "log-uniform" => Ok(GridKind::LogUniform),
            "periodic" => Ok(GridKind::Periodic),
            other => Err(Error::InvalidRange(format!("unknown grid kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    kind: GridKind,
    start: f64,
    stop: f64,
    count: usize,
    points: Vec<f64>,
    /// Spacing in the parameterizing coordinate (`log x` for log grids).
    step: f64,
}

pub fn make_grid(kind: GridKind, start: f64, stop: f64, count: usize) -> Result<Grid1D> {
    Grid1D::new(kind, start, stop, count)
}

impl Grid1D {
    pub fn new(kind: GridKind, start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() || start >= stop {
            return Err(Error::InvalidRange(format!("need start < stop, got [{start}, {stop}]")));
        }
        if count < 2 {
            return Err(Error::InvalidRange(format!("need at least 2 nodes, got {count}")));
        }
        let (points, step) = match kind {
            GridKind::Uniform => {
                let step = (stop - start) / (count - 1) as f64;
                let mut pts: Vec<f64> = (0..count).map(|i| start + i as f64 * step).collect();
                pts[count - 1] = stop;
                (pts, step)
            }
            GridKind::LogUniform => {
                if start <= 0.0 {
                    return Err(Error::InvalidRange(format!(
                        "log-uniform grid needs start > 0, got {start}"
                    )));
                }
                let step = (stop / start).ln() / (count - 1) as f64;
                let mut pts: Vec<f64> =
                    (0..count).map(|i| start * (i as f64 * step).exp()).collect();
                pts[count - 1] = stop;
                (pts, step)
            }
            GridKind::Periodic => {
                let step = (stop - start) / count as f64;
                ((0..count).map(|i| start + i as f64 * step).collect(), step)
            }
        };
        Ok(Self { kind, start, stop, count, points, step })
    }

    pub fn uniform(start: f64, stop: f64, count: usize) -> Result<Self> {
        Self::new(GridKind::Uniform, start, stop, count)
    }

    pub fn log_uniform(start: f64, stop: f64, count: usize) -> Result<Self> {
        Self::new(GridKind::LogUniform, start, stop, count)
    }

    pub fn periodic(start: f64, stop: f64, count: usize) -> Result<Self> {
        Self::new(GridKind::Periodic, start, stop, count)
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }
    pub fn start(&self) -> f64 {
        self.start
    }
    pub fn stop(&self) -> f64 {
        self.stop
    }
    pub fn count(&self) -> usize {
        self.count
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Evenly spaced in the raw coordinate.
    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, GridKind::Uniform | GridKind::Periodic)
    }

    /// Trapezoidal weights against Lebesgue measure in the raw coordinate.
    ///
    /// Log grids integrate in `s = log x` and carry the Jacobian `x`;
    /// periodic grids use the (spectrally accurate) equal-weight rule.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let n = self.count;
        match self.kind {
            GridKind::Periodic => vec![self.step; n],
            GridKind::Uniform => (0..n)
                .map(|i| if i == 0 || i == n - 1 { 0.5 * self.step } else { self.step })
                .collect(),
            GridKind::LogUniform => self
                .points
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    end * self.step * x
                })
                .collect(),
        }
    }

    /// Bracketing node and linear fraction for `x`, or `None` outside the hull.
    pub(crate) fn locate(&self, x: f64) -> Option<(usize, usize, f64)> {
        const EDGE: f64 = 1e-9;
        let n = self.count;
        match self.kind {
            GridKind::Uniform => {
                let t = (x - self.start) / self.step;
                if !(t >= -EDGE && t <= (n - 1) as f64 + EDGE) {
                    return None;
                }
                let t = t.clamp(0.0, (n - 1) as f64);
                let i = (t.floor() as usize).min(n - 2);
                Some((i, i + 1, t - i as f64))
            }
            GridKind::Periodic => {
                let t = ((x - self.start) / self.step).rem_euclid(n as f64);
                if !t.is_finite() {
                    return None;
                }
                let i = (t.floor() as usize).min(n - 1);
                Some((i, (i + 1) % n, t - i as f64))
            }
            GridKind::LogUniform => {
                if !(x >= self.points[0] * (1.0 - EDGE) && x <= self.points[n - 1] * (1.0 + EDGE)) {
                    return None;
                }
                let i = match self.points.binary_search_by(|p| p.total_cmp(&x)) {
                    Ok(i) => i.min(n - 2),
                    Err(i) => i.saturating_sub(1).min(n - 2),
                };
                let frac = ((x - self.points[i]) / (self.points[i + 1] - self.points[i])).clamp(0.0, 1.0);
                Some((i, i + 1, frac))
            }
        }
    }
}

/// Tensor product of one-dimensional grids, indexed row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    axes: Vec<Grid1D>,
}

impl ProductGrid {
    pub fn new(axes: Vec<Grid1D>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::ShapeMismatch("product grid needs at least one axis".into()));
        }
        Ok(Self { axes })
    }

    pub fn single(axis: Grid1D) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn axes(&self) -> &[Grid1D] {
        &self.axes
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Grid1D::count).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Grid1D::count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_uniform(&self) -> bool {
        self.axes.iter().all(Grid1D::is_uniform)
    }

    /// Coordinates of the node with row-major index `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        self.point_into(flat, &mut out);
        out
    }

    pub fn point_into(&self, mut flat: usize, out: &mut [f64]) {
        for (d, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.count();
            out[d] = axis.points()[flat % n];
            flat /= n;
        }
    }

    /// All nodes, row-major, each of length `ndim`.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Product of the per-axis trapezoidal weights.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        outer(self.axes.iter().map(Grid1D::quadrature_weights))
    }

    /// Concatenate axes of several grids into one product grid.
    pub fn concat(parts: &[&ProductGrid]) -> Result<Self> {
        Self::new(parts.iter().flat_map(|p| p.axes.iter().cloned()).collect())
    }

    /// Multilinear interpolation of row-major `values`; zero outside the hull.
    pub fn interp(&self, values: &[Complex64], point: &[f64]) -> Complex64 {
        interp_eval(values, self, point)
    }
}

fn outer(factors: impl Iterator<Item = Vec<f64>>) -> Vec<f64> {
    factors.fold(vec![1.0], |acc, f| {
        let mut out = Vec::with_capacity(acc.len() * f.len());
        for a in &acc {
            out.extend(f.iter().map(|b| a * b));
        }
        out
    })
}

/// The Haar measures that appear in the transform identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureName {
    /// `δ(h) dh dk`
    GTau,
    /// `δ(h)⁻¹ dh dω`
    GHatTau,
    /// `dh dk dω`
    GTxw,
    /// `δ(h) δ(t)⁻¹ dh dt dk dω`, axes ordered `(h, t, k, ω)`.
    GTotimes,
    K,
    H,
    KHat,
}

impl fmt::Display for MeasureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureName::GTau => "G_tau",
            MeasureName::GHatTau => "G_hat_tau",
            MeasureName::GTxw => "G_txw",
            MeasureName::GTotimes => "G_totimes",
            MeasureName::K => "K",
            MeasureName::H => "H",
            MeasureName::KHat => "K_hat",
        })
    }
}

impl FromStr for MeasureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "G_tau" => MeasureName::GTau,
            "G_hat_tau" => MeasureName::GHatTau,
            "G_txw" => MeasureName::GTxw,
            "G_totimes" => MeasureName::GTotimes,
            "K" => MeasureName::K,
            "H" => MeasureName::H,
            "K_hat" => MeasureName::KHat,
            other => return Err(Error::ShapeMismatch(format!("unknown measure `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureWeights {
    pub measure: MeasureName,
    pub shape: Vec<usize>,
    pub weights: Vec<f64>,
}

impl MeasureWeights {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weights of the `H`-axes against `dh`, multiplied by `δ(h)^power`.
pub fn h_weights(group: &GroupDescriptor, h_grid: &ProductGrid, delta_power: f64) -> Vec<f64> {
    let quad = h_grid.quadrature_weights();
    let mut coords = vec![0.0; h_grid.ndim()];
    quad.iter()
        .enumerate()
        .map(|(i, w)| {
            h_grid.point_into(i, &mut coords);
            let h = HPoint(coords.clone());
            let delta = if delta_power == 0.0 { 1.0 } else { group.delta(&h).powf(delta_power) };
            w * group.haar_h_density(&h) * delta
        })
        .collect()
}

/// Weights of the `K`-axes against `dk`.
pub fn k_weights(group: &GroupDescriptor, k_grid: &ProductGrid) -> Vec<f64> {
    let quad = k_grid.quadrature_weights();
    let mut coords = vec![0.0; k_grid.ndim()];
    quad.iter()
        .enumerate()
        .map(|(i, w)| {
            k_grid.point_into(i, &mut coords);
            w * group.haar_k_density(&KPoint(coords.clone()))
        })
        .collect()
}

/// Trapezoidal weights of the named Haar measure on `grids`.
///
/// `grids` lists the factor axes in the order `H, K` (`G_tau`), `H, K̂`
/// (`G_hat_tau`), `H, K, K̂` (`G_txw`) or `H, H, K, K̂` (`G_totimes`).
pub fn measure_weights(
    group: &GroupDescriptor,
    grids: &ProductGrid,
    measure: MeasureName,
) -> Result<MeasureWeights> {
    let (dh, dk, dw) = (group.dim_h(), group.dim_k(), group.dim_freq());
    let layout: Vec<(usize, Factor)> = match measure {
        MeasureName::H => vec![(dh, Factor::H(0.0))],
        MeasureName::K => vec![(dk, Factor::K)],
        MeasureName::KHat => vec![(dw, Factor::Freq)],
        MeasureName::GTau => vec![(dh, Factor::H(1.0)), (dk, Factor::K)],
        MeasureName::GHatTau => vec![(dh, Factor::H(-1.0)), (dw, Factor::Freq)],
        MeasureName::GTxw => vec![(dh, Factor::H(0.0)), (dk, Factor::K), (dw, Factor::Freq)],
        MeasureName::GTotimes => vec![
            (dh, Factor::H(1.0)),
            (dh, Factor::H(-1.0)),
            (dk, Factor::K),
            (dw, Factor::Freq),
        ],
    };
    let expected: usize = layout.iter().map(|(n, _)| n).sum();
    if grids.ndim() != expected {
        return Err(Error::ShapeMismatch(format!(
            "measure {measure} on group {} needs {expected} axes, got {}",
            group.name(),
            grids.ndim()
        )));
    }
    let mut offset = 0;
    let mut factors = Vec::with_capacity(layout.len());
    for (n, factor) in layout {
        let sub = ProductGrid::new(grids.axes()[offset..offset + n].to_vec())?;
        offset += n;
        factors.push(match factor {
            Factor::H(p) => h_weights(group, &sub, p),
            Factor::K => k_weights(group, &sub),
            Factor::Freq => sub.quadrature_weights(),
        });
    }
    Ok(MeasureWeights { measure, shape: grids.shape(), weights: outer(factors.into_iter()) })
}

#[derive(Clone, Copy)]
enum Factor {
    H(f64),
    K,
    Freq,
}

/// Flat indices and weights of the multilinear stencil at `point`, or `None`
/// outside the grid hull.
pub(crate) fn interp_stencil(grid: &ProductGrid, point: &[f64]) -> Option<Vec<(usize, f64)>> {
    let axes = grid.axes();
    let brackets = axes.iter().zip(point).map(|(a, &x)| a.locate(x)).collect::<Option<Vec<_>>>()?;
    let mut stencil = vec![(0usize, 1.0f64)];
    for (axis, (lo, hi, frac)) in axes.iter().zip(brackets) {
        let n = axis.count();
        stencil = stencil
            .into_iter()
            .flat_map(|(flat, w)| [(flat * n + lo, w * (1.0 - frac)), (flat * n + hi, w * frac)])
            .filter(|(_, w)| *w != 0.0)
            .collect();
    }
    Some(stencil)
}

/// Multilinear interpolation of row-major `values` on `grid` at `point`.
///
/// Points outside the grid hull evaluate to zero: sampled data is treated as
/// supported on the truncation box.
pub fn interp_eval(values: &[Complex64], grid: &ProductGrid, point: &[f64]) -> Complex64 {
    let axes = grid.axes();
    debug_assert_eq!(point.len(), axes.len());
    let mut brackets = [(0usize, 0usize, 0.0f64); 8];
    let mut owned;
    let brackets: &mut [(usize, usize, f64)] = if axes.len() <= 8 {
        &mut brackets[..axes.len()]
    } else {
        owned = vec![(0, 0, 0.0); axes.len()];
        &mut owned
    };
    for (d, (axis, &x)) in axes.iter().zip(point).enumerate() {
        match axis.locate(x) {
            Some(b) => brackets[d] = b,
            None => return Complex64::new(0.0, 0.0),
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for corner in 0..(1usize << axes.len()) {
        let mut weight = 1.0;
        let mut flat = 0usize;
        for (d, axis) in axes.iter().enumerate() {
            let (lo, hi, frac) = brackets[d];
            let upper = corner >> (axes.len() - 1 - d) & 1 == 1;
            weight *= if upper { frac } else { 1.0 - frac };
            flat = flat * axis.count() + if upper { hi } else { lo };
        }
        if weight != 0.0 {
            acc += values[flat] * weight;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_affine, make_e2};

    #[test]
    fn make_grid_examples() {
        let g = make_grid(GridKind::Uniform, -1.0, 1.0, 3).unwrap();
        assert_eq!(g.points(), &[-1.0, 0.0, 1.0]);
        let g = make_grid(GridKind::LogUniform, 1.0, 4.0, 3).unwrap();
        assert!((g.points()[1] - 2.0).abs() < 1e-15);
        assert_eq!(g.points()[2], 4.0);
        assert!(matches!(make_grid(GridKind::Uniform, 1.0, 0.0, 4), Err(Error::InvalidRange(_))));
        assert!(make_grid(GridKind::Uniform, 0.0, 1.0, 1).is_err());
        assert!(make_grid(GridKind::LogUniform, 0.0, 1.0, 4).is_err());
        let p = make_grid(GridKind::Periodic, 0.0, 4.0, 4).unwrap();
        assert_eq!(p.points(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn trapezoid_two_nodes() {
        let g = make_affine();
        let k = ProductGrid::single(Grid1D::uniform(0.0, 1.0, 2).unwrap());
        let w = measure_weights(&g, &k, MeasureName::K).unwrap();
        assert_eq!(w.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn affine_g_tau_box_measure() {
        // ∫₁² a⁻² da · ∫₀¹ dx = 1/2
        let g = make_affine();
        let grids = ProductGrid::new(vec![
            Grid1D::log_uniform(1.0, 2.0, 512).unwrap(),
            Grid1D::uniform(0.0, 1.0, 512).unwrap(),
        ])
        .unwrap();
        let w = measure_weights(&g, &grids, MeasureName::GTau).unwrap();
        assert!((w.total() - 0.5).abs() < 1e-6, "{}", w.total());
        assert!(w.weights.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn g_txw_ignores_delta() {
        let g = make_affine();
        let h = Grid1D::log_uniform(0.5, 2.0, 9).unwrap();
        let k = Grid1D::uniform(-1.0, 1.0, 5).unwrap();
        let grids = ProductGrid::new(vec![h.clone(), k.clone(), k.clone()]).unwrap();
        let w = measure_weights(&g, &grids, MeasureName::GTxw).unwrap();
        // dh = da/a is uniform in log a: every interior H node gets the same weight.
        let kk = ProductGrid::new(vec![k.clone(), k]).unwrap().quadrature_weights();
        for (i, hw) in [0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.5].iter().enumerate() {
            for (j, kw) in kk.iter().enumerate() {
                let expect = hw * h.step() * kw;
                assert!((w.weights[i * kk.len() + j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn measure_axis_count_checked() {
        let g = make_e2();
        let grids = ProductGrid::new(vec![Grid1D::uniform(0.0, 1.0, 3).unwrap()]).unwrap();
        assert!(matches!(
            measure_weights(&g, &grids, MeasureName::GTau),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gaussian_integral_on_k_grid() {
        let grid = ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 512).unwrap());
        let total: f64 = grid
            .quadrature_weights()
            .iter()
            .zip(grid.nodes())
            .map(|(w, x)| w * (-std::f64::consts::PI * x[0] * x[0]).exp())
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interpolation_examples() {
        let grid = ProductGrid::single(Grid1D::uniform(0.0, 1.0, 2).unwrap());
        let vals = [Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0)];
        assert_eq!(interp_eval(&vals, &grid, &[0.5]), Complex64::new(1.0, 0.0));
        assert_eq!(interp_eval(&vals, &grid, &[1.5]), Complex64::new(0.0, 0.0));
        assert_eq!(interp_eval(&vals, &grid, &[-0.1]), Complex64::new(0.0, 0.0));
        assert_eq!(interp_eval(&vals, &grid, &[1.0]), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn interpolation_error_is_second_order() {
        // q(x) = x², sampled on 1000 nodes of [0, 1]: linear interpolation
        // error is at most Δ²/4 · max|q''|/2 = Δ²/4.
        let grid = ProductGrid::single(Grid1D::uniform(0.0, 1.0, 1000).unwrap());
        let step = grid.axes()[0].step();
        let vals: Vec<Complex64> =
            grid.nodes().iter().map(|x| Complex64::new(x[0] * x[0], 0.0)).collect();
        let worst = (0..997)
            .map(|i| {
                let x = (i as f64 + 0.37) * 1.0e-3;
                (interp_eval(&vals, &grid, &[x]).re - x * x).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 0.25 * step * step * (1.0 + 1e-9), "{worst} vs {}", step * step);
        assert!(worst > 0.0);
    }

    #[test]
    fn bilinear_reproduces_bilinear_functions() {
        let grid = ProductGrid::new(vec![
            Grid1D::uniform(-1.0, 1.0, 5).unwrap(),
            Grid1D::log_uniform(0.5, 2.0, 4).unwrap(),
        ])
        .unwrap();
        let f = |x: f64, y: f64| Complex64::new(1.0 + 2.0 * x - y + 0.5 * x * y, x);
        let vals: Vec<Complex64> = grid.nodes().iter().map(|p| f(p[0], p[1])).collect();
        for &(x, y) in &[(0.1, 0.7), (-0.93, 1.9), (0.5, 0.5)] {
            assert!((interp_eval(&vals, &grid, &[x, y]) - f(x, y)).norm() < 1e-12);
        }
    }
}
