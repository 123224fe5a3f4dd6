//! Default grids, windows and test signals for the built-in groups.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ProductGrid};
use crate::group::GroupDescriptor;
use crate::lca::SampledWindow;
use crate::tau::SliceField;

/// H-, K- and K̂-grids for one transform setup.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub h: ProductGrid,
    pub k: ProductGrid,
    pub freq: ProductGrid,
}

impl Grids {
    /// Affine: `a ∈ [1/4, 4]` (64, log), `x, ω ∈ [−8, 8]` (256 each).
    /// E(2): `θ` full circle (16), `x ∈ [−4, 4]²` (32²), `ω ∈ [−1.75, 1.75]²` (32²).
    pub fn default_for(group: &GroupDescriptor) -> Result<Self> {
        match group.name().as_str() {
            "affine" => Self::affine(64, 256, 256),
            "e2" => Self::e2(16, 32, 32),
            other => Err(Error::Unsupported(format!("no transform grids for group `{other}`"))),
        }
    }

    pub fn affine(nh: usize, nk: usize, nw: usize) -> Result<Self> {
        Ok(Self {
            h: ProductGrid::single(Grid1D::log_uniform(0.25, 4.0, nh)?),
            k: ProductGrid::single(Grid1D::uniform(-8.0, 8.0, nk)?),
            freq: ProductGrid::single(Grid1D::uniform(-8.0, 8.0, nw)?),
        })
    }

    pub fn e2(nh: usize, nk: usize, nw: usize) -> Result<Self> {
        let k = Grid1D::uniform(-4.0, 4.0, nk)?;
        let w = Grid1D::uniform(-1.75, 1.75, nw)?;
        Ok(Self {
            h: ProductGrid::single(Grid1D::periodic(0.0, TAU, nh)?),
            k: ProductGrid::new(vec![k.clone(), k])?,
            freq: ProductGrid::new(vec![w.clone(), w])?,
        })
    }
}

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `u(x) = e^{−π|x|²}`.
pub fn gaussian_window(k_grid: &ProductGrid) -> Result<SampledWindow> {
    SampledWindow::from_fn(k_grid.clone(), |x| Complex64::new((-PI * sq(x)).exp(), 0.0))
}

/// `u(x) = x₁ e^{−π|x|²}`, orthogonal to every even window.
pub fn odd_hermite_window(k_grid: &ProductGrid) -> Result<SampledWindow> {
    SampledWindow::from_fn(k_grid.clone(), |x| Complex64::new(x[0] * (-PI * sq(x)).exp(), 0.0))
}

/// Indicator of `[−n, n]^d`, taking the value 1/2 on the boundary.
pub fn box_window(k_grid: &ProductGrid, n: f64) -> Result<SampledWindow> {
    SampledWindow::from_fn(k_grid.clone(), move |x| {
        let mut v = 1.0;
        for &c in x {
            let a = c.abs();
            v *= if a < n - 1e-9 {
                1.0
            } else if a <= n + 1e-9 {
                0.5
            } else {
                0.0
            };
        }
        Complex64::new(v, 0.0)
    })
}

/// Affine window field `g(a, x) = a e^{−π(a² + x²)}`.
pub fn gaussian_type_field(group: &GroupDescriptor, h: &ProductGrid, k: &ProductGrid) -> Result<SliceField> {
    SliceField::from_fn(group.clone(), h.clone(), k.clone(), |h, x| {
        Complex64::new(h[0] * (-PI * (h[0] * h[0] + sq(x))).exp(), 0.0)
    })
}

/// Bump on `H`: log-Gaussian `exp(−(ln a − ln c)²/(2σ²))` on the affine
/// group, `exp(σ⁻¹(cos(θ − c) − 1))` on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBump {
    pub center: f64,
    pub width: f64,
}

impl HBump {
    pub fn eval(&self, group_name: &str, h: &[f64]) -> f64 {
        match group_name {
            "e2" => (((h[0] - self.center).cos() - 1.0) / self.width).exp(),
            _ => {
                let d = h[0].ln() - self.center.ln();
                (-d * d / (2.0 * self.width * self.width)).exp()
            }
        }
    }
}

/// `f(h, x) = bump(h) · e^{−π|x − c|²/s²} · e^{2πi ξ·x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnvelope {
    pub bump: HBump,
    pub center: Vec<f64>,
    pub scale: f64,
    pub freq: Vec<f64>,
}

impl GaussianEnvelope {
    /// Test signal used by the defaults: centered on the identity, slightly
    /// off-center in `K`, and modulated.
    pub fn standard(group: &GroupDescriptor) -> Self {
        match group.dim_k() {
            2 => Self {
                bump: HBump { center: 0.0, width: 1.25 },
                center: vec![0.3, -0.2],
                scale: 1.0,
                freq: vec![0.4, -0.2],
            },
            _ => Self { bump: HBump { center: 1.0, width: 0.2 }, center: vec![0.5], scale: 1.0, freq: vec![0.7] },
        }
    }

    pub fn to_field(&self, group: &GroupDescriptor, grids: &Grids) -> Result<SliceField> {
        let name = group.name();
        let me = self.clone();
        SliceField::from_fn(group.clone(), grids.h.clone(), grids.k.clone(), move |h, x| {
            let r2: f64 = x.iter().zip(&me.center).map(|(a, c)| (a - c) * (a - c)).sum();
            let phase: f64 = x.iter().zip(&me.freq).map(|(a, b)| a * b).sum();
            Complex64::from_polar(me.bump.eval(&name, h) * (-PI * r2 / (me.scale * me.scale)).exp(), TAU * phase)
        })
    }
}

/// Window field `g(h, x) = bump(h) e^{−π|x|²}` for the G-kind transforms, with a
/// bump wide enough that no slice is degenerate on the default H-grid.
pub fn envelope_window_field(group: &GroupDescriptor, grids: &Grids) -> Result<SliceField> {
    let bump = match group.dim_k() {
        2 => HBump { center: 0.0, width: 2.0 },
        _ => HBump { center: 1.0, width: 0.4 },
    };
    let name = group.name();
    SliceField::from_fn(group.clone(), grids.h.clone(), grids.k.clone(), move |h, x| {
        Complex64::new(bump.eval(&name, h) * (-PI * sq(x)).exp(), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{make_affine, make_e2, make_weyl_heisenberg};

    #[test]
    fn defaults_exist_for_pipeline_groups_only() {
        let a = Grids::default_for(&make_affine()).unwrap();
        assert_eq!((a.h.len(), a.k.len(), a.freq.len()), (64, 256, 256));
        let e = Grids::default_for(&make_e2()).unwrap();
        assert_eq!((e.h.len(), e.k.len(), e.freq.len()), (16, 1024, 1024));
        assert!(Grids::default_for(&make_weyl_heisenberg(8).unwrap()).is_err());
    }

    #[test]
    fn window_slices_are_not_degenerate_on_default_grids() {
        for g in [make_affine(), make_e2()] {
            let grids = Grids::default_for(&g).unwrap();
            let w = envelope_window_field(&g, &grids).unwrap();
            assert!(w.slice_norms_sq().iter().all(|n| *n > 1e-6));
        }
    }
}
