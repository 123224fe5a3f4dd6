//! Semi-direct products `G = H ⋉_τ K` with abelian `K`, the dual companion
//! `H ⋉ K̂`, and the two derived time-frequency groups.
//!
//! `K` and `K̂` are written additively throughout. Concrete groups implement
//! [`SemiDirectProduct`]; everything else talks to them through the cheap,
//! cloneable [`GroupDescriptor`] handle.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;

macro_rules! coord_point {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn new(coords: impl Into<Vec<f64>>) -> Self {
                Self(coords.into())
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }
        }

        impl From<f64> for $name {
            fn from(v: f64) -> Self {
                Self(vec![v])
            }
        }

        impl<const N: usize> From<[f64; N]> for $name {
            fn from(v: [f64; N]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

coord_point!(
    /// Element of the acting group `H` in the instance's parameterization.
    HPoint
);
coord_point!(
    /// Element of the abelian normal factor `K`.
    KPoint
);
coord_point!(
    /// Character of `K`, identified with a frequency vector.
    FreqPoint
);

/// Element `(h, k)` of `G_τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub h: HPoint,
    pub k: KPoint,
}

impl GroupPoint {
    pub fn new(h: impl Into<HPoint>, k: impl Into<KPoint>) -> Self {
        Self { h: h.into(), k: k.into() }
    }
}

/// Element `(h, ω)` of the dual group `G_τ̂ = H ⋉_τ̂ K̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatPoint {
    pub h: HPoint,
    pub w: FreqPoint,
}

impl HatPoint {
    pub fn new(h: impl Into<HPoint>, w: impl Into<FreqPoint>) -> Self {
        Self { h: h.into(), w: w.into() }
    }
}

/// Element `(h, k, ω)` of `H ⋉_{τ×τ̂} (K × K̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TFPoint {
    pub h: HPoint,
    pub k: KPoint,
    pub w: FreqPoint,
}

impl TFPoint {
    pub fn new(h: impl Into<HPoint>, k: impl Into<KPoint>, w: impl Into<FreqPoint>) -> Self {
        Self { h: h.into(), k: k.into(), w: w.into() }
    }
}

/// Element `(h, t, k, ω)` of `(H × H) ⋉_{τ⊗τ̂} (K × K̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TFOtimesPoint {
    pub h: HPoint,
    pub t: HPoint,
    pub k: KPoint,
    pub w: FreqPoint,
}

impl TFOtimesPoint {
    pub fn new(
        h: impl Into<HPoint>,
        t: impl Into<HPoint>,
        k: impl Into<KPoint>,
        w: impl Into<FreqPoint>,
    ) -> Self {
        Self { h: h.into(), t: t.into(), k: k.into(), w: w.into() }
    }
}

/// The data that defines one semi-direct product instance.
///
/// Implementations may assume their inputs passed the matching `check_*`
/// method; [`GroupDescriptor`] performs that validation.
pub trait SemiDirectProduct: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn dim_h(&self) -> usize;
    fn dim_k(&self) -> usize;
    fn dim_freq(&self) -> usize;

    fn check_h(&self, h: &HPoint) -> Result<()>;
    fn check_k(&self, k: &KPoint) -> Result<()>;
    fn check_freq(&self, w: &FreqPoint) -> Result<()>;

    fn h_identity(&self) -> HPoint;
    fn h_compose(&self, a: &HPoint, b: &HPoint) -> HPoint;
    fn h_inverse(&self, a: &HPoint) -> HPoint;

    fn k_identity(&self) -> KPoint;
    fn k_compose(&self, a: &KPoint, b: &KPoint) -> KPoint;
    fn k_inverse(&self, a: &KPoint) -> KPoint;

    fn freq_identity(&self) -> FreqPoint;
    fn freq_compose(&self, a: &FreqPoint, b: &FreqPoint) -> FreqPoint;
    fn freq_inverse(&self, a: &FreqPoint) -> FreqPoint;

    /// `τ_h(k)`, written `k^h`.
    fn act(&self, h: &HPoint, k: &KPoint) -> KPoint;
    /// `τ̂_h(ω) = ω ∘ τ_{h⁻¹}`, written `ω_h`.
    fn dual_act(&self, h: &HPoint, w: &FreqPoint) -> FreqPoint;
    /// Modular homomorphism: `∫ v(τ_h k) dk = δ(h) ∫ v(k) dk`.
    fn delta(&self, h: &HPoint) -> f64;
    /// Density of the left Haar measure of `H` against the coordinates.
    fn haar_h_density(&self, h: &HPoint) -> f64;
    fn haar_k_density(&self, _k: &KPoint) -> f64 {
        1.0
    }
    /// Character value `ω(k)`.
    fn pairing(&self, k: &KPoint, w: &FreqPoint) -> Complex64;

    /// Row-major matrix of `τ_h` when `K = ℝⁿ` and the action is linear.
    fn action_matrix(&self, _h: &HPoint) -> Option<Vec<f64>> {
        None
    }
    /// Row-major matrix of `τ̂_h` under the frequency identification.
    fn dual_action_matrix(&self, _h: &HPoint) -> Option<Vec<f64>> {
        None
    }
}

/// Shared, immutable handle to a group instance.
#[derive(Clone)]
pub struct GroupDescriptor(Arc<dyn SemiDirectProduct>);

impl fmt::Debug for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupDescriptor({})", self.0.name())
    }
}

impl Deref for GroupDescriptor {
    type Target = dyn SemiDirectProduct;

    fn deref(&self) -> &Self::Target {
        &*self.0
    }
}

impl PartialEq for GroupDescriptor {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.name() == other.0.name()
    }
}

impl GroupDescriptor {
    pub fn new(group: impl SemiDirectProduct + 'static) -> Self {
        Self(Arc::new(group))
    }

    pub fn check_point(&self, g: &GroupPoint) -> Result<()> {
        self.check_h(&g.h)?;
        self.check_k(&g.k)
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint { h: self.h_identity(), k: self.k_identity() }
    }

    /// `(h, k)(h', k') = (hh', k + τ_h(k'))`.
    pub fn compose(&self, a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(a)?;
        self.check_point(b)?;
        Ok(GroupPoint {
            h: self.h_compose(&a.h, &b.h),
            k: self.k_compose(&a.k, &self.act(&a.h, &b.k)),
        })
    }

    /// `(h, k)⁻¹ = (h⁻¹, τ_{h⁻¹}(k⁻¹))`.
    pub fn inverse(&self, a: &GroupPoint) -> Result<GroupPoint> {
        self.check_point(a)?;
        let h_inv = self.h_inverse(&a.h);
        let k = self.act(&h_inv, &self.k_inverse(&a.k));
        Ok(GroupPoint { h: h_inv, k })
    }

    pub fn act_checked(&self, h: &HPoint, k: &KPoint) -> Result<KPoint> {
        self.check_h(h)?;
        self.check_k(k)?;
        Ok(self.act(h, k))
    }

    pub fn dual_act_checked(&self, h: &HPoint, w: &FreqPoint) -> Result<FreqPoint> {
        self.check_h(h)?;
        self.check_freq(w)?;
        Ok(self.dual_act(h, w))
    }

    pub fn delta_checked(&self, h: &HPoint) -> Result<f64> {
        self.check_h(h)?;
        Ok(self.delta(h))
    }

    fn check_hat(&self, p: &HatPoint) -> Result<()> {
        self.check_h(&p.h)?;
        self.check_freq(&p.w)
    }

    pub fn hat_identity(&self) -> HatPoint {
        HatPoint { h: self.h_identity(), w: self.freq_identity() }
    }

    /// Law of `G_τ̂`: `(h, ω)(h', ω') = (hh', ω + ω'_h)`.
    pub fn hat_compose(&self, a: &HatPoint, b: &HatPoint) -> Result<HatPoint> {
        self.check_hat(a)?;
        self.check_hat(b)?;
        Ok(HatPoint {
            h: self.h_compose(&a.h, &b.h),
            w: self.freq_compose(&a.w, &self.dual_act(&a.h, &b.w)),
        })
    }

    fn check_tf(&self, p: &TFPoint) -> Result<()> {
        self.check_h(&p.h)?;
        self.check_k(&p.k)?;
        self.check_freq(&p.w)
    }

    pub fn tf_identity(&self) -> TFPoint {
        TFPoint { h: self.h_identity(), k: self.k_identity(), w: self.freq_identity() }
    }

    /// Law of `G_{τ×τ̂}`: `(hh', k + k'^h, ω + ω'_h)`.
    pub fn tf_compose(&self, a: &TFPoint, b: &TFPoint) -> Result<TFPoint> {
        self.check_tf(a)?;
        self.check_tf(b)?;
        Ok(TFPoint {
            h: self.h_compose(&a.h, &b.h),
            k: self.k_compose(&a.k, &self.act(&a.h, &b.k)),
            w: self.freq_compose(&a.w, &self.dual_act(&a.h, &b.w)),
        })
    }

    pub fn tf_inverse(&self, a: &TFPoint) -> Result<TFPoint> {
        self.check_tf(a)?;
        let h_inv = self.h_inverse(&a.h);
        Ok(TFPoint {
            k: self.act(&h_inv, &self.k_inverse(&a.k)),
            w: self.dual_act(&h_inv, &self.freq_inverse(&a.w)),
            h: h_inv,
        })
    }

    fn check_otimes(&self, p: &TFOtimesPoint) -> Result<()> {
        self.check_h(&p.h)?;
        self.check_h(&p.t)?;
        self.check_k(&p.k)?;
        self.check_freq(&p.w)
    }

    pub fn tf_otimes_identity(&self) -> TFOtimesPoint {
        TFOtimesPoint {
            h: self.h_identity(),
            t: self.h_identity(),
            k: self.k_identity(),
            w: self.freq_identity(),
        }
    }

    /// Law of `G_{τ⊗τ̂}`: `(hh', tt', k + k'^h, ω + ω'_t)`.
    pub fn tf_otimes_compose(&self, a: &TFOtimesPoint, b: &TFOtimesPoint) -> Result<TFOtimesPoint> {
        self.check_otimes(a)?;
        self.check_otimes(b)?;
        Ok(TFOtimesPoint {
            h: self.h_compose(&a.h, &b.h),
            t: self.h_compose(&a.t, &b.t),
            k: self.k_compose(&a.k, &self.act(&a.h, &b.k)),
            w: self.freq_compose(&a.w, &self.dual_act(&a.t, &b.w)),
        })
    }

    pub fn tf_otimes_inverse(&self, a: &TFOtimesPoint) -> Result<TFOtimesPoint> {
        self.check_otimes(a)?;
        let h_inv = self.h_inverse(&a.h);
        let t_inv = self.h_inverse(&a.t);
        Ok(TFOtimesPoint {
            k: self.act(&h_inv, &self.k_inverse(&a.k)),
            w: self.dual_act(&t_inv, &self.freq_inverse(&a.w)),
            h: h_inv,
            t: t_inv,
        })
    }
}

/// The isomorphism `G_τ × G_τ̂ → G_{τ⊗τ̂}`, `(h, k, t, ω) ↦ (h, t, k, ω)`.
pub fn phi_iso(p_tau: &GroupPoint, p_hat: &HatPoint) -> TFOtimesPoint {
    TFOtimesPoint {
        h: p_tau.h.clone(),
        t: p_hat.h.clone(),
        k: p_tau.k.clone(),
        w: p_hat.w.clone(),
    }
}

/// Inverse of [`phi_iso`].
pub fn phi_iso_inverse(p: &TFOtimesPoint) -> (GroupPoint, HatPoint) {
    (
        GroupPoint { h: p.h.clone(), k: p.k.clone() },
        HatPoint { h: p.t.clone(), w: p.w.clone() },
    )
}

/// Largest componentwise difference, scaled by `max(1, |a_i|)`.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}
