//! Concrete groups: the affine group `ax + b`, the Euclidean motion group
//! `E(2)`, and a finite Weyl–Heisenberg model over `Z_N`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{FreqPoint, GroupDescriptor, HPoint, KPoint, SemiDirectProduct};

fn invalid(group: &str, reason: impl Into<String>) -> Error {
    Error::InvalidElement { group: group.to_string(), reason: reason.into() }
}

fn expect_dim(group: &str, what: &str, coords: &[f64], dim: usize) -> Result<()> {
    if coords.len() != dim {
        return Err(invalid(group, format!("{what} has {} coordinates, expected {dim}", coords.len())));
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(invalid(group, format!("{what} has non-finite coordinates")));
    }
    Ok(())
}

/// `H = (0, ∞)` acting on `K = ℝ` by dilation, `τ_a(x) = ax`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Affine;

impl SemiDirectProduct for Affine {
    fn name(&self) -> String {
        "affine".into()
    }
    fn dim_h(&self) -> usize {
        1
    }
    fn dim_k(&self) -> usize {
        1
    }
    fn dim_freq(&self) -> usize {
        1
    }

    fn check_h(&self, h: &HPoint) -> Result<()> {
        expect_dim("affine", "scale", &h.0, 1)?;
        if h.0[0] <= 0.0 {
            return Err(invalid("affine", format!("scale must be positive, got {}", h.0[0])));
        }
        Ok(())
    }
    fn check_k(&self, k: &KPoint) -> Result<()> {
        expect_dim("affine", "translation", &k.0, 1)
    }
    fn check_freq(&self, w: &FreqPoint) -> Result<()> {
        expect_dim("affine", "frequency", &w.0, 1)
    }

    fn h_identity(&self) -> HPoint {
        HPoint(vec![1.0])
    }
    fn h_compose(&self, a: &HPoint, b: &HPoint) -> HPoint {
        HPoint(vec![a.0[0] * b.0[0]])
    }
    fn h_inverse(&self, a: &HPoint) -> HPoint {
        HPoint(vec![1.0 / a.0[0]])
    }

    fn k_identity(&self) -> KPoint {
        KPoint(vec![0.0])
    }
    fn k_compose(&self, a: &KPoint, b: &KPoint) -> KPoint {
        KPoint(vec![a.0[0] + b.0[0]])
    }
    fn k_inverse(&self, a: &KPoint) -> KPoint {
        KPoint(vec![-a.0[0]])
    }

    fn freq_identity(&self) -> FreqPoint {
        FreqPoint(vec![0.0])
    }
    fn freq_compose(&self, a: &FreqPoint, b: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![a.0[0] + b.0[0]])
    }
    fn freq_inverse(&self, a: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![-a.0[0]])
    }

    fn act(&self, h: &HPoint, k: &KPoint) -> KPoint {
        KPoint(vec![h.0[0] * k.0[0]])
    }
    fn dual_act(&self, h: &HPoint, w: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![w.0[0] / h.0[0]])
    }
    fn delta(&self, h: &HPoint) -> f64 {
        1.0 / h.0[0]
    }
    fn haar_h_density(&self, h: &HPoint) -> f64 {
        1.0 / h.0[0]
    }
    fn pairing(&self, k: &KPoint, w: &FreqPoint) -> Complex64 {
        Complex64::from_polar(1.0, TAU * k.0[0] * w.0[0])
    }

    fn action_matrix(&self, h: &HPoint) -> Option<Vec<f64>> {
        Some(vec![h.0[0]])
    }
    fn dual_action_matrix(&self, h: &HPoint) -> Option<Vec<f64>> {
        Some(vec![1.0 / h.0[0]])
    }
}

/// Reduce an angle into `[0, 2π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn rotation(theta: f64) -> [f64; 4] {
    let (s, c) = theta.sin_cos();
    [c, -s, s, c]
}

fn rotate(theta: f64, v: &[f64]) -> Vec<f64> {
    let r = rotation(theta);
    vec![r[0] * v[0] + r[1] * v[1], r[2] * v[0] + r[3] * v[1]]
}

/// Rigid motions of the plane: `SO(2)` (as an angle) acting on `ℝ²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean2;

impl SemiDirectProduct for Euclidean2 {
    fn name(&self) -> String {
        "e2".into()
    }
    fn dim_h(&self) -> usize {
        1
    }
    fn dim_k(&self) -> usize {
        2
    }
    fn dim_freq(&self) -> usize {
        2
    }

    fn check_h(&self, h: &HPoint) -> Result<()> {
        expect_dim("e2", "angle", &h.0, 1)?;
        if !(0.0..TAU).contains(&h.0[0]) {
            return Err(invalid("e2", format!("angle {} outside [0, 2π)", h.0[0])));
        }
        Ok(())
    }
    fn check_k(&self, k: &KPoint) -> Result<()> {
        expect_dim("e2", "translation", &k.0, 2)
    }
    fn check_freq(&self, w: &FreqPoint) -> Result<()> {
        expect_dim("e2", "frequency", &w.0, 2)
    }

    fn h_identity(&self) -> HPoint {
        HPoint(vec![0.0])
    }
    fn h_compose(&self, a: &HPoint, b: &HPoint) -> HPoint {
        HPoint(vec![reduce_angle(a.0[0] + b.0[0])])
    }
    fn h_inverse(&self, a: &HPoint) -> HPoint {
        HPoint(vec![reduce_angle(-a.0[0])])
    }

    fn k_identity(&self) -> KPoint {
        KPoint(vec![0.0, 0.0])
    }
    fn k_compose(&self, a: &KPoint, b: &KPoint) -> KPoint {
        KPoint(vec![a.0[0] + b.0[0], a.0[1] + b.0[1]])
    }
    fn k_inverse(&self, a: &KPoint) -> KPoint {
        KPoint(vec![-a.0[0], -a.0[1]])
    }

    fn freq_identity(&self) -> FreqPoint {
        FreqPoint(vec![0.0, 0.0])
    }
    fn freq_compose(&self, a: &FreqPoint, b: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![a.0[0] + b.0[0], a.0[1] + b.0[1]])
    }
    fn freq_inverse(&self, a: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![-a.0[0], -a.0[1]])
    }

    fn act(&self, h: &HPoint, k: &KPoint) -> KPoint {
        KPoint(rotate(h.0[0], &k.0))
    }
    // Rotations are orthogonal, so ω ∘ R⁻¹ is again rotation by the same angle.
    fn dual_act(&self, h: &HPoint, w: &FreqPoint) -> FreqPoint {
        FreqPoint(rotate(h.0[0], &w.0))
    }
    fn delta(&self, _h: &HPoint) -> f64 {
        1.0
    }
    fn haar_h_density(&self, _h: &HPoint) -> f64 {
        1.0 / TAU
    }
    fn pairing(&self, k: &KPoint, w: &FreqPoint) -> Complex64 {
        Complex64::from_polar(1.0, TAU * (k.0[0] * w.0[0] + k.0[1] * w.0[1]))
    }

    fn action_matrix(&self, h: &HPoint) -> Option<Vec<f64>> {
        Some(rotation(h.0[0]).to_vec())
    }
    fn dual_action_matrix(&self, h: &HPoint) -> Option<Vec<f64>> {
        Some(rotation(h.0[0]).to_vec())
    }
}

/// Finite Weyl–Heisenberg model: `H = Z_N` acting on `K = Ẑ_N × 𝕋`.
///
/// Coordinates: `HPoint = [s]`, `KPoint = [m, Re z, Im z]`,
/// `FreqPoint = [k, n]` with `k ∈ Z_N`, `n ∈ ℤ`. Characters of `Z_N` are
/// `e^{2πi m s / N}`, so every phase is an exact root of unity.
#[derive(Debug, Clone, Copy)]
pub struct WeylHeisenberg {
    n: u32,
}

impl WeylHeisenberg {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidRange(format!("Weyl–Heisenberg order must be >= 2, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    fn modn(&self, v: f64) -> f64 {
        v.rem_euclid(self.n as f64)
    }

    fn check_residue(&self, what: &str, v: f64) -> Result<()> {
        if v.fract() != 0.0 || v < 0.0 || v >= self.n as f64 {
            return Err(invalid(&self.name(), format!("{what} {v} is not a residue mod {}", self.n)));
        }
        Ok(())
    }

    fn root(&self, m: f64, s: f64) -> Complex64 {
        // m·s is an exact integer; reduce before scaling to keep the phase exact.
        let e = (m * s).rem_euclid(self.n as f64);
        Complex64::from_polar(1.0, TAU * e / self.n as f64)
    }
}

fn renormalize(z: Complex64) -> Complex64 {
    z / z.norm()
}

impl SemiDirectProduct for WeylHeisenberg {
    fn name(&self) -> String {
        format!("weyl-heisenberg:{}", self.n)
    }
    fn dim_h(&self) -> usize {
        1
    }
    fn dim_k(&self) -> usize {
        3
    }
    fn dim_freq(&self) -> usize {
        2
    }

    fn check_h(&self, h: &HPoint) -> Result<()> {
        expect_dim(&self.name(), "shift", &h.0, 1)?;
        self.check_residue("shift", h.0[0])
    }
    fn check_k(&self, k: &KPoint) -> Result<()> {
        expect_dim(&self.name(), "element", &k.0, 3)?;
        self.check_residue("dual index", k.0[0])?;
        let modulus = k.0[1].hypot(k.0[2]);
        if (modulus - 1.0).abs() > 1e-9 {
            return Err(invalid(&self.name(), format!("circle component has modulus {modulus}")));
        }
        Ok(())
    }
    fn check_freq(&self, w: &FreqPoint) -> Result<()> {
        expect_dim(&self.name(), "character", &w.0, 2)?;
        self.check_residue("character index", w.0[0])?;
        if w.0[1].fract() != 0.0 {
            return Err(invalid(&self.name(), format!("winding number {} is not an integer", w.0[1])));
        }
        Ok(())
    }

    fn h_identity(&self) -> HPoint {
        HPoint(vec![0.0])
    }
    fn h_compose(&self, a: &HPoint, b: &HPoint) -> HPoint {
        HPoint(vec![self.modn(a.0[0] + b.0[0])])
    }
    fn h_inverse(&self, a: &HPoint) -> HPoint {
        HPoint(vec![self.modn(-a.0[0])])
    }

    fn k_identity(&self) -> KPoint {
        KPoint(vec![0.0, 1.0, 0.0])
    }
    fn k_compose(&self, a: &KPoint, b: &KPoint) -> KPoint {
        let z = renormalize(Complex64::new(a.0[1], a.0[2]) * Complex64::new(b.0[1], b.0[2]));
        KPoint(vec![self.modn(a.0[0] + b.0[0]), z.re, z.im])
    }
    fn k_inverse(&self, a: &KPoint) -> KPoint {
        KPoint(vec![self.modn(-a.0[0]), a.0[1], -a.0[2]])
    }

    fn freq_identity(&self) -> FreqPoint {
        FreqPoint(vec![0.0, 0.0])
    }
    fn freq_compose(&self, a: &FreqPoint, b: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![self.modn(a.0[0] + b.0[0]), a.0[1] + b.0[1]])
    }
    fn freq_inverse(&self, a: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![self.modn(-a.0[0]), -a.0[1]])
    }

    /// `τ_s(m, z) = (m, z·e^{2πi m s/N})`.
    fn act(&self, h: &HPoint, k: &KPoint) -> KPoint {
        let z = renormalize(Complex64::new(k.0[1], k.0[2]) * self.root(k.0[0], h.0[0]));
        KPoint(vec![k.0[0], z.re, z.im])
    }
    /// `(k, n)_s = (k − ns, n)`.
    fn dual_act(&self, h: &HPoint, w: &FreqPoint) -> FreqPoint {
        FreqPoint(vec![self.modn(w.0[0] - w.0[1] * h.0[0]), w.0[1]])
    }
    fn delta(&self, _h: &HPoint) -> f64 {
        1.0
    }
    fn haar_h_density(&self, _h: &HPoint) -> f64 {
        1.0
    }
    /// `⟨(m, z), (k, n)⟩ = e^{2πi mk/N} zⁿ`.
    fn pairing(&self, k: &KPoint, w: &FreqPoint) -> Complex64 {
        let z = Complex64::new(k.0[1], k.0[2]);
        self.root(k.0[0], w.0[0]) * z.powi(w.0[1] as i32)
    }
}

pub fn make_affine() -> GroupDescriptor {
    GroupDescriptor::new(Affine)
}

pub fn make_e2() -> GroupDescriptor {
    GroupDescriptor::new(Euclidean2)
}

pub fn make_weyl_heisenberg(n: u32) -> Result<GroupDescriptor> {
    Ok(GroupDescriptor::new(WeylHeisenberg::new(n)?))
}

/// Look up a group by its configuration name: `affine`, `e2` or
/// `weyl-heisenberg:N`.
pub fn group_by_name(name: &str) -> Result<GroupDescriptor> {
    match name.trim() {
        "affine" => Ok(make_affine()),
        "e2" => Ok(make_e2()),
        other => {
            let order = other
                .strip_prefix("weyl-heisenberg:")
                .and_then(|n| n.parse::<u32>().ok())
                .ok_or_else(|| Error::UnknownGroup(other.to_string()))?;
            make_weyl_heisenberg(order)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupPoint, TFOtimesPoint, TFPoint};
    use std::f64::consts::PI;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn affine_compose_inverse_examples() {
        let g = make_affine();
        let p = g.compose(&GroupPoint::new(2.0, 3.0), &GroupPoint::new(4.0, 5.0)).unwrap();
        assert_eq!(p, GroupPoint::new(8.0, 13.0));
        let id = g.compose(&GroupPoint::new(1.0, 0.0), &GroupPoint::new(2.5, -7.0)).unwrap();
        assert_eq!(id, GroupPoint::new(2.5, -7.0));
        assert_eq!(g.inverse(&GroupPoint::new(2.0, 3.0)).unwrap(), GroupPoint::new(0.5, -1.5));
        assert_eq!(g.inverse(&g.identity()).unwrap(), g.identity());
        assert!(matches!(
            g.compose(&GroupPoint::new(0.0, 1.0), &g.identity()),
            Err(Error::InvalidElement { .. })
        ));
        assert!(g.inverse(&GroupPoint::new(-1.0, 1.0)).is_err());
    }

    #[test]
    fn affine_action_delta_examples() {
        let g = make_affine();
        assert_eq!(g.act_checked(&2.0.into(), &3.0.into()).unwrap(), KPoint::from(6.0));
        assert_eq!(g.dual_act_checked(&2.0.into(), &4.0.into()).unwrap(), FreqPoint::from(2.0));
        assert_eq!(g.delta_checked(&2.0.into()).unwrap(), 0.5);
        assert_eq!(g.delta(&g.h_identity()), 1.0);
        let h = HPoint::from(3.7);
        // G_τ̂ density δ(a)⁻¹·(1/a) = 1: Haar measure da dω.
        assert!((g.haar_h_density(&h) / g.delta(&h) - 1.0).abs() < 1e-15);
        // G_τ density δ(a)·(1/a) = a⁻².
        assert!((g.haar_h_density(&h) * g.delta(&h) - 3.7f64.powi(-2)).abs() < 1e-15);
    }

    #[test]
    fn affine_tf_examples() {
        let g = make_affine();
        let p = g.tf_compose(&TFPoint::new(2.0, 1.0, 3.0), &TFPoint::new(4.0, 5.0, 7.0)).unwrap();
        assert_eq!(p, TFPoint::new(8.0, 11.0, 6.5));
        let q = TFOtimesPoint::new(2.0, 3.0, 1.0, 6.0);
        let r = TFOtimesPoint::new(4.0, 5.0, 7.0, 9.0);
        assert_eq!(g.tf_otimes_compose(&q, &r).unwrap(), TFOtimesPoint::new(8.0, 15.0, 15.0, 9.0));
        assert_eq!(g.tf_otimes_compose(&g.tf_otimes_identity(), &q).unwrap(), q);
        let x = TFPoint::new(2.0, 1.0, 3.0);
        let back = g.tf_compose(&x, &g.tf_inverse(&x).unwrap()).unwrap();
        assert!(close(&back.h.0, &[1.0], 1e-15));
        assert!(close(&back.k.0, &[0.0], 1e-15));
        assert!(close(&back.w.0, &[0.0], 1e-15));
    }

    #[test]
    fn e2_examples() {
        let g = make_e2();
        let q = GroupPoint::new(PI / 2.0, [1.0, 0.0]);
        let p = g.compose(&q, &q).unwrap();
        assert!(close(&p.h.0, &[PI], 1e-15));
        assert!(close(&p.k.0, &[1.0, 1.0], 1e-15));
        let inv = g.inverse(&q).unwrap();
        assert!(close(&inv.h.0, &[3.0 * PI / 2.0], 1e-15));
        assert!(close(&inv.k.0, &[0.0, 1.0], 1e-15));
        let id = g.compose(&q, &inv).unwrap();
        assert!(close(&id.h.0, &[0.0], 1e-15) && close(&id.k.0, &[0.0, 0.0], 1e-15));
        let k = g.act_checked(&(PI / 2.0).into(), &[1.0, 0.0].into()).unwrap();
        assert!(close(&k.0, &[0.0, 1.0], 1e-15));
        assert_eq!(g.delta(&HPoint::from(1.3)), 1.0);
        assert!(g.check_h(&HPoint::from(TAU)).is_err());
    }

    #[test]
    fn weyl_heisenberg_examples() {
        let wh = WeylHeisenberg::new(8).unwrap();
        let g = GroupDescriptor::new(wh);
        // (s, m, z)(s', m', z') = (s + s', m + m', z z' e^{2πi m' s/N})
        let z1 = Complex64::from_polar(1.0, 0.3);
        let z2 = Complex64::from_polar(1.0, -1.1);
        let a = GroupPoint::new(3.0, [5.0, z1.re, z1.im]);
        let b = GroupPoint::new(6.0, [7.0, z2.re, z2.im]);
        let p = g.compose(&a, &b).unwrap();
        let expect = z1 * z2 * Complex64::from_polar(1.0, TAU * 7.0 * 3.0 / 8.0);
        assert_eq!(p.h.0, vec![1.0]);
        assert!(close(&p.k.0, &[4.0, expect.re, expect.im], 1e-14));
        let w = g.dual_act_checked(&3.0.into(), &[1.0, 2.0].into()).unwrap();
        assert_eq!(w.0, vec![(1.0f64 - 6.0).rem_euclid(8.0), 2.0]);
        assert_eq!(g.delta(&HPoint::from(5.0)), 1.0);
        assert!(WeylHeisenberg::new(1).is_err());
        assert!(g.check_h(&HPoint::from(8.0)).is_err());
        assert!(g.check_h(&HPoint::from(1.5)).is_err());
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(group_by_name("affine").unwrap().name(), "affine");
        assert_eq!(group_by_name("e2").unwrap().name(), "e2");
        assert_eq!(group_by_name("weyl-heisenberg:8").unwrap().name(), "weyl-heisenberg:8");
        assert!(matches!(group_by_name("sl2"), Err(Error::UnknownGroup(_))));
        assert!(group_by_name("weyl-heisenberg:1").is_err());
    }
}
