//! Numerical checks of the group laws, measure identities and transform
//! identities, each reported as a named value against a tolerance.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{measure_weights, Grid1D, MeasureName, ProductGrid};
use crate::group::{max_rel_diff, phi_iso, FreqPoint, GroupDescriptor, GroupPoint, HPoint, HatPoint, KPoint};
use crate::instances::make_affine;
use crate::lca::{stft, stft_oracle, SampledSlice, SampledWindow};
use crate::presets::{box_window, gaussian_type_field, gaussian_window, GaussianEnvelope, Grids, HBump};
use crate::tau::{
    gabor_oracle, inverse, orthogonality_inner, otimes_oracle, plancherel_ratio, transform, EvalMode, SliceField,
    TransformField, TransformKind, Window, DEFAULT_FULL_CAP,
};
use crate::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `|value − expected| ≤ tolerance`.
    pub fn close(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        Self { name: name.into(), value, expected, tolerance, pass }
    }

    /// Passes when `value ≤ bound`.
    pub fn bounded(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, expected: 0.0, tolerance: bound, pass: value <= bound }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: ok as u8 as f64, expected: 1.0, tolerance: 0.0, pass: ok }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn wh_order(group: &GroupDescriptor) -> Option<u32> {
    group.name().strip_prefix("weyl-heisenberg:").and_then(|n| n.parse().ok())
}

pub fn random_h(group: &GroupDescriptor, rng: &mut impl Rng) -> HPoint {
    match group.name().as_str() {
        "affine" => HPoint(vec![rng.gen_range(-3.0f64..3.0).exp()]),
        "e2" => HPoint(vec![rng.gen_range(0.0..TAU)]),
        _ => HPoint(vec![rng.gen_range(0..wh_order(group).unwrap_or(2)) as f64]),
    }
}

pub fn random_k(group: &GroupDescriptor, rng: &mut impl Rng) -> KPoint {
    match wh_order(group) {
        Some(n) => {
            let z = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
            KPoint(vec![rng.gen_range(0..n) as f64, z.re, z.im])
        }
        None => KPoint((0..group.dim_k()).map(|_| rng.gen_range(-10.0..10.0)).collect()),
    }
}

pub fn random_freq(group: &GroupDescriptor, rng: &mut impl Rng) -> FreqPoint {
    match wh_order(group) {
        Some(n) => FreqPoint(vec![rng.gen_range(0..n) as f64, rng.gen_range(-5..=5) as f64]),
        None => FreqPoint((0..group.dim_freq()).map(|_| rng.gen_range(-10.0..10.0)).collect()),
    }
}

fn h_distance(group: &GroupDescriptor, a: &HPoint, b: &HPoint) -> f64 {
    if group.name() == "e2" {
        2.0 * ((a.0[0] - b.0[0]) / 2.0).sin().abs()
    } else {
        max_rel_diff(&a.0, &b.0)
    }
}

fn point_distance(group: &GroupDescriptor, a: &GroupPoint, b: &GroupPoint) -> f64 {
    h_distance(group, &a.h, &b.h).max(max_rel_diff(&a.k.0, &b.k.0))
}

/// Associativity, identity and inverse on random triples, multiplicativity
/// of `δ`, contravariance of the dual action and the action/dual pairing.
pub fn group_axioms(group: &GroupDescriptor, samples: usize, rng: &mut impl Rng, tol: f64) -> Result<Vec<Check>> {
    let mut worst = [0.0f64; 6];
    let e = group.identity();
    for _ in 0..samples {
        let p: Vec<GroupPoint> =
            (0..3).map(|_| GroupPoint { h: random_h(group, rng), k: random_k(group, rng) }).collect();
        let left = group.compose(&group.compose(&p[0], &p[1])?, &p[2])?;
        let right = group.compose(&p[0], &group.compose(&p[1], &p[2])?)?;
        worst[0] = worst[0].max(point_distance(group, &left, &right));
        worst[1] = worst[1]
            .max(point_distance(group, &group.compose(&e, &p[0])?, &p[0]))
            .max(point_distance(group, &group.compose(&p[0], &e)?, &p[0]));
        let inv = group.inverse(&p[1])?;
        worst[2] = worst[2]
            .max(point_distance(group, &group.compose(&p[1], &inv)?, &e))
            .max(point_distance(group, &group.compose(&inv, &p[1])?, &e));

        let (h, t) = (&p[0].h, &p[1].h);
        let ht = group.h_compose(h, t);
        let (dh, dt) = (group.delta_checked(h)?, group.delta_checked(t)?);
        worst[3] = worst[3].max((group.delta_checked(&ht)? - dh * dt).abs() / (dh * dt));
        let w = random_freq(group, rng);
        let lhs = group.dual_act_checked(&ht, &w)?;
        let rhs = group.dual_act_checked(h, &group.dual_act_checked(t, &w)?)?;
        worst[4] = worst[4].max(max_rel_diff(&lhs.0, &rhs.0));
        let x = &p[2].k;
        let a = group.pairing(&group.act_checked(&group.h_inverse(h), x)?, &w);
        let b = group.pairing(x, &group.dual_act_checked(h, &w)?);
        worst[5] = worst[5].max((a - b).norm());
    }
    let name = group.name();
    Ok(vec![
        Check::bounded(format!("{name}.associativity"), worst[0], tol),
        Check::bounded(format!("{name}.identity"), worst[1], tol),
        Check::bounded(format!("{name}.inverse"), worst[2], tol),
        Check::bounded(format!("{name}.delta_multiplicative"), worst[3], tol),
        Check::bounded(format!("{name}.dual_contravariance"), worst[4], tol),
        Check::bounded(format!("{name}.dual_pairing"), worst[5], 1e-10_f64.max(tol)),
    ])
}

/// `Φ(x·y) = Φ(x)·Φ(y)` and `Φ⁻¹Φ = id` on random affine pairs.
pub fn phi_homomorphism(samples: usize, rng: &mut impl Rng, tol: f64) -> Result<Check> {
    let g = make_affine();
    let mut worst = 0.0f64;
    let flat = |p: &crate::group::TFOtimesPoint| [p.h.0[0], p.t.0[0], p.k.0[0], p.w.0[0]];
    for _ in 0..samples {
        let mut draw = || {
            (
                GroupPoint { h: random_h(&g, rng), k: random_k(&g, rng) },
                HatPoint { h: random_h(&g, rng), w: random_freq(&g, rng) },
            )
        };
        let (x1, y1) = draw();
        let (x2, y2) = draw();
        let lhs = phi_iso(&g.compose(&x1, &x2)?, &g.hat_compose(&y1, &y2)?);
        let rhs = g.tf_otimes_compose(&phi_iso(&x1, &y1), &phi_iso(&x2, &y2))?;
        worst = worst.max(max_rel_diff(&flat(&lhs), &flat(&rhs)));
        let (bx, by) = crate::group::phi_iso_inverse(&lhs);
        worst = worst.max(max_rel_diff(&flat(&phi_iso(&bx, &by)), &flat(&lhs)));
    }
    Ok(Check::bounded("affine.phi_homomorphism", worst, tol))
}

/// Change of variables on `K` and the dual scaling on `K̂` for the affine
/// group at `a ∈ {1/2, 1, 2}`, plus the `G_τ` measure of `[1,2] × [0,1]`.
pub fn measure_identities(tol: f64) -> Result<Vec<Check>> {
    let g = make_affine();
    let grid = ProductGrid::single(Grid1D::uniform(-16.0, 16.0, 2049)?);
    let weights = grid.quadrature_weights();
    let nodes = grid.nodes();
    let v = |x: f64| (-PI * (x - 0.3) * (x - 0.3)).exp();
    let phi = |w: f64| (-PI * (w + 0.2) * (w + 0.2) / 2.0).exp();
    let quad = |f: &dyn Fn(f64) -> f64| -> f64 { nodes.iter().zip(&weights).map(|(x, w)| w * f(x[0])).sum() };
    let base_v = quad(&v);
    let base_phi = quad(&phi);
    let mut checks = Vec::new();
    for a in [0.5, 1.0, 2.0] {
        let h = HPoint(vec![a]);
        let delta = g.delta_checked(&h)?;
        let pushed = quad(&|x| v(g.act(&h, &KPoint(vec![x])).0[0]));
        checks.push(Check::bounded(format!("affine.change_of_variables[a={a}]"), (pushed - delta * base_v).abs(), tol));
        let hinv = g.h_inverse(&h);
        let scaled = quad(&|w| phi(g.dual_act(&hinv, &FreqPoint(vec![w])).0[0]));
        checks.push(Check::bounded(format!("affine.dual_scaling[a={a}]"), (scaled - delta * base_phi).abs(), tol));
    }
    let box_grid = ProductGrid::new(vec![Grid1D::log_uniform(1.0, 2.0, 512)?, Grid1D::uniform(0.0, 1.0, 512)?])?;
    let total = measure_weights(&g, &box_grid, MeasureName::GTau)?.total();
    checks.push(Check::close("affine.g_tau_box_measure", total, 0.5, 1e-6));
    Ok(checks)
}

/// Fast STFT against brute-force quadrature on a 64-node grid.
pub fn stft_oracle_equivalence(rng: &mut impl Rng, tol: f64) -> Result<Check> {
    let k = ProductGrid::single(Grid1D::uniform(-4.0, 4.0, 64)?);
    let freq = ProductGrid::single(Grid1D::uniform(-3.0, 3.0, 40)?);
    let values: Vec<Complex64> = k
        .nodes()
        .iter()
        .map(|x| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.5 * x[0] * x[0]).exp())
        .collect();
    let v = SampledSlice::new(values, k.clone())?;
    let u = gaussian_window(&k)?;
    let field = stft(&v, &u, &freq)?;
    let mut worst = 0.0f64;
    for s in 0..k.len() {
        for w in 0..freq.len() {
            let o = stft_oracle(&v, u.as_slice(), &k.point(s), &freq.point(w));
            worst = worst.max((field.get(s, w) - o).norm());
        }
    }
    Ok(Check::bounded("stft.oracle_max_abs", worst, tol))
}

/// Grids for the transform oracle comparison: 16 H-nodes, 64 K-nodes,
/// 32 K̂-nodes (8×8 and 4×8 on `ℝ²`).
pub fn oracle_grids(group: &GroupDescriptor) -> Result<Grids> {
    match group.dim_k() {
        2 => {
            let k = Grid1D::uniform(-3.0, 3.0, 8)?;
            Ok(Grids {
                h: ProductGrid::single(Grid1D::periodic(0.0, TAU, 16)?),
                k: ProductGrid::new(vec![k.clone(), k])?,
                freq: ProductGrid::new(vec![Grid1D::uniform(-1.0, 1.0, 4)?, Grid1D::uniform(-1.0, 1.0, 8)?])?,
            })
        }
        _ => Ok(Grids {
            h: ProductGrid::single(Grid1D::log_uniform(0.5, 2.0, 16)?),
            k: ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 64)?),
            freq: ProductGrid::single(Grid1D::uniform(-2.0, 2.0, 32)?),
        }),
    }
}

fn random_slice_field(group: &GroupDescriptor, grids: &Grids, rng: &mut impl Rng) -> Result<SliceField> {
    let mut values = Vec::with_capacity(grids.h.len() * grids.k.len());
    let nodes = grids.k.nodes();
    for _ in 0..grids.h.len() {
        for x in &nodes {
            let env = (-0.3 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            values.push(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * env);
        }
    }
    SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), values)
}

/// Largest deviation of the fast fields from direct quadrature at every
/// stored node, for each requested kind.
pub fn transform_oracle_equivalence(
    group: &GroupDescriptor,
    kinds: &[TransformKind],
    rng: &mut impl Rng,
    tol: f64,
) -> Result<Vec<Check>> {
    let grids = oracle_grids(group)?;
    let f = random_slice_field(group, &grids, rng)?;
    let u = gaussian_window(&grids.k)?;
    let g = SliceField::from_fn(group.clone(), grids.h.clone(), grids.k.clone(), |h, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((1.0 + 0.3 * h[0].sin()) * (-PI * r2).exp(), 0.2 * x[0] * (-PI * r2).exp())
    })?;
    let (nh, nk, nw) = (grids.h.len(), grids.k.len(), grids.freq.len());
    let ks = grids.k.nodes();
    let ws = grids.freq.nodes();
    let mut checks = Vec::new();
    for &kind in kinds {
        let mut worst = 0.0f64;
        if kind.is_otimes() {
            let TransformField::Otimes(field) = transform(kind, &f, &g, &grids.freq, EvalMode::Oracle, DEFAULT_FULL_CAP)?
            else {
                unreachable!()
            };
            for h in 0..nh {
                for t in 0..nh {
                    for k in 0..nk {
                        for w in 0..nw {
                            let o = otimes_oracle(kind, &f, &g, h, t, &ks[k], &ws[w])?;
                            let v = field.get(h, k, t, w).ok_or_else(|| Error::Unsupported("field not stored in full".into()))?;
                            worst = worst.max((v - o).norm());
                        }
                    }
                }
            }
        } else {
            let TransformField::Gabor(field) = transform(kind, &f, &u, &grids.freq, EvalMode::Oracle, 0)? else {
                unreachable!()
            };
            for h in 0..nh {
                for k in 0..nk {
                    for w in 0..nw {
                        worst = worst.max((field.get(h, k, w) - gabor_oracle(kind, &f, &u, h, &ks[k], &ws[w])?).norm());
                    }
                }
            }
        }
        checks.push(Check::bounded(format!("{}.{kind}.oracle_max_abs", group.name()), worst, tol));
    }
    Ok(checks)
}

/// Window used with `kind` in the standard runs: the Gaussian for
/// single-window kinds, the enveloped Gaussian field otherwise.
pub fn standard_window(group: &GroupDescriptor, grids: &Grids, kind: TransformKind) -> Result<Window> {
    Ok(if kind.is_otimes() {
        Window::Field(crate::presets::envelope_window_field(group, grids)?)
    } else {
        Window::Single(gaussian_window(&grids.k)?)
    })
}

/// Plancherel ratio and relative reconstruction error of one analysis and
/// synthesis pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip {
    pub ratio: f64,
    pub rel_err: f64,
}

pub fn round_trip(
    kind: TransformKind,
    f: &SliceField,
    window: &Window,
    freq: &ProductGrid,
    mode: EvalMode,
    cap: usize,
) -> Result<RoundTrip> {
    let field = transform(kind, f, window, freq, mode, cap)?;
    let ratio = plancherel_ratio(&field, f, window)?;
    let back = inverse(&field, window)?;
    Ok(RoundTrip { ratio, rel_err: back.relative_error(f)? })
}

/// Reconstruction errors of `kind` on the standard signal at each K/K̂
/// count (same boxes and H-grid as the defaults).
pub fn convergence_errors(group: &GroupDescriptor, kind: TransformKind, counts: &[usize]) -> Result<Vec<f64>> {
    let base = Grids::default_for(group)?;
    counts
        .iter()
        .map(|&n| {
            let grids = resized(&base, n)?;
            let f = GaussianEnvelope::standard(group).to_field(group, &grids)?;
            let window = standard_window(group, &grids, kind)?;
            Ok(round_trip(kind, &f, &window, &grids.freq, EvalMode::Oracle, 0)?.rel_err)
        })
        .collect()
}

fn resized(base: &Grids, n: usize) -> Result<Grids> {
    let axes = |g: &ProductGrid| -> Result<ProductGrid> {
        ProductGrid::new(g.axes().iter().map(|a| Grid1D::new(a.kind(), a.start(), a.stop(), n)).collect::<Result<_>>()?)
    };
    Ok(Grids { h: base.h.clone(), k: axes(&base.k)?, freq: axes(&base.freq)? })
}

pub fn random_envelope(group: &GroupDescriptor, rng: &mut impl Rng) -> GaussianEnvelope {
    let d = group.dim_k();
    let bump = match d {
        2 => HBump { center: rng.gen_range(0.0..TAU), width: rng.gen_range(1.0..1.5) },
        _ => HBump { center: rng.gen_range(-0.2f64..0.2).exp(), width: rng.gen_range(0.15..0.25) },
    };
    GaussianEnvelope {
        bump,
        center: (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        scale: rng.gen_range(0.8..1.2),
        freq: (0..d).map(|_| rng.gen_range(-0.4..0.4)).collect(),
    }
}

fn random_window(group: &GroupDescriptor, grids: &Grids, kind: TransformKind, rng: &mut impl Rng) -> Result<Window> {
    let d = group.dim_k();
    let center: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let freq: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let scale = rng.gen_range(0.8..1.2);
    let profile = move |x: &[f64]| {
        let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum();
        let phase: f64 = x.iter().zip(&freq).map(|(a, b)| a * b).sum();
        Complex64::from_polar((-PI * r2 / (scale * scale)).exp(), TAU * phase)
    };
    if kind.is_otimes() {
        let bump = match d {
            2 => HBump { center: rng.gen_range(0.0..TAU), width: 2.0 },
            _ => HBump { center: rng.gen_range(-0.2f64..0.2).exp(), width: 0.4 },
        };
        let name = group.name();
        Ok(Window::Field(SliceField::from_fn(group.clone(), grids.h.clone(), grids.k.clone(), move |h, x| {
            profile(x) * bump.eval(&name, h)
        })?))
    } else {
        Ok(Window::Single(SampledWindow::from_fn(grids.k.clone(), profile)?))
    }
}

/// `|⟨F₁,F₂⟩ − ⟨w₂,w₁⟩⟨f₁,f₂⟩| / (|⟨w₂,w₁⟩⟨f₁,f₂⟩| + 1)`, worst over
/// `quartets` random Gaussian-envelope signal/window quartets.
pub fn orthogonality_quartets(
    group: &GroupDescriptor,
    grids: &Grids,
    kind: TransformKind,
    quartets: usize,
    rng: &mut impl Rng,
    tol: f64,
) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..quartets {
        let f1 = random_envelope(group, rng).to_field(group, grids)?;
        let f2 = random_envelope(group, rng).to_field(group, grids)?;
        let w1 = random_window(group, grids, kind, rng)?;
        let w2 = random_window(group, grids, kind, rng)?;
        let a = transform(kind, &f1, &w1, &grids.freq, EvalMode::Oracle, 0)?;
        let b = transform(kind, &f2, &w2, &grids.freq, EvalMode::Oracle, 0)?;
        let (lhs, rhs) = orthogonality_inner(&a, &b, &w1, &w2, &f1, &f2)?;
        worst = worst.max((lhs - rhs).norm() / (rhs.norm() + 1.0));
    }
    Ok(Check::bounded(format!("{}.{kind}.orthogonality", group.name()), worst, tol))
}

/// Closed-form norms of the Gaussian, Gaussian-type and box windows on the
/// affine group, each compared in relative terms.
pub fn example_norms(rel_tol: f64) -> Result<Vec<Check>> {
    let g = make_affine();
    let k = ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 513)?);
    let rel = |name: &str, value: f64, expected: f64| Check::close(name, value, expected, rel_tol * expected);
    let mut checks = vec![rel("affine.gaussian_window_norm", gaussian_window(&k)?.norm_sq().sqrt(), 2f64.powf(-0.25))];

    // ‖g‖² = ∫ e^{-2πa²} da / √2 needs the H-grid to reach far toward a = 0.
    let h = ProductGrid::single(Grid1D::log_uniform(1e-7, 3.0, 2048)?);
    let gt = gaussian_type_field(&g, &h, &k)?;
    checks.push(rel("affine.gaussian_type_norm", gt.norm_sq().sqrt(), 0.5));

    let nodes = ProductGrid::single(Grid1D::log_uniform(0.5, 2.0, 3)?);
    let slices = gaussian_type_field(&g, &nodes, &k)?;
    for (i, n) in slices.slice_norms_sq().iter().enumerate() {
        let a = nodes.point(i)[0];
        let expected = 2f64.powf(-0.25) * a * (-PI * a * a).exp();
        checks.push(rel(&format!("affine.gaussian_type_slice_norm[a={a}]"), n.sqrt(), expected));
    }

    // Trapezoid error of a jump is Δ/2 in ‖u_N‖², so use a fine grid here.
    let fine = ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 16001)?);
    for n in [1.0, 2.0, 4.0] {
        let norm = box_window(&fine, n)?.norm_sq().sqrt();
        checks.push(rel(&format!("affine.box_window_norm[N={n}]"), norm, (2.0 * n).sqrt()));
        let literal = Check::close(format!("affine.box_window_norm_literal_2N[N={n}]"), norm, 2.0 * n, rel_tol * 2.0 * n);
        checks.push(Check::flag(format!("affine.box_window_norm_is_not_2N[N={n}]"), !literal.pass));
    }
    Ok(checks)
}
