use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semigabor::presets::{box_window, gaussian_type_field, gaussian_window, odd_hermite_window, Grids};
use semigabor::*;

const ALL_SINGLE: [TransformKind; 4] = [TransformKind::V, TransformKind::Vdag, TransformKind::A, TransformKind::B];

fn small_affine() -> Grids {
    // 17 log nodes on [1/2, 2] put a = 1 at index 8.
    Grids {
        h: ProductGrid::single(Grid1D::log_uniform(0.5, 2.0, 17).unwrap()),
        k: ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 65).unwrap()),
        freq: ProductGrid::single(Grid1D::uniform(-2.0, 2.0, 33).unwrap()),
    }
}

fn small_e2() -> Grids {
    let k = Grid1D::uniform(-3.0, 3.0, 8).unwrap();
    let w = Grid1D::uniform(-1.0, 1.0, 6).unwrap();
    Grids {
        h: ProductGrid::single(Grid1D::periodic(0.0, 2.0 * PI, 16).unwrap()),
        k: ProductGrid::new(vec![k.clone(), k]).unwrap(),
        freq: ProductGrid::new(vec![w.clone(), w]).unwrap(),
    }
}

fn random_field(group: &GroupDescriptor, grids: &Grids, seed: u64) -> SliceField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(grids.h.len() * grids.k.len());
    for _ in 0..grids.h.len() {
        for j in 0..grids.k.len() {
            let x = grids.k.point(j);
            let env = (-0.3 * x.iter().map(|v| v * v).sum::<f64>()).exp();
            values.push(Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * env);
        }
    }
    SliceField::new(group.clone(), grids.h.clone(), grids.k.clone(), values).unwrap()
}

fn smooth_window_field(group: &GroupDescriptor, grids: &Grids) -> SliceField {
    SliceField::from_fn(group.clone(), grids.h.clone(), grids.k.clone(), |h, x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Complex64::new((1.0 + 0.3 * h[0].sin()) * (-PI * r2).exp(), 0.2 * x[0] * (-PI * r2).exp())
    })
    .unwrap()
}

fn max_abs(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn rel_err(a: &SliceField, b: &SliceField) -> f64 {
    let diff: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    let d = SliceField::new(b.group().clone(), b.h_grid().clone(), b.k_grid().clone(), diff).unwrap();
    (d.norm_sq() / b.norm_sq()).sqrt()
}

fn check_single_oracles(group: &GroupDescriptor, grids: &Grids, tol: f64) {
    let f = random_field(group, grids, 11);
    let u = gaussian_window(&grids.k).unwrap();
    for kind in ALL_SINGLE {
        let field = gabor_transform(kind, &f, &u, &grids.freq, EvalMode::Oracle).unwrap();
        let mut worst = 0.0f64;
        for h in 0..grids.h.len() {
            for k in 0..grids.k.len() {
                for w in 0..grids.freq.len() {
                    let o = gabor_oracle(kind, &f, &u, h, &grids.k.point(k), &grids.freq.point(w)).unwrap();
                    worst = worst.max((field.get(h, k, w) - o).norm());
                }
            }
        }
        assert!(worst < tol, "{kind}: max abs diff {worst:e}");
    }
}

fn check_otimes_oracles(group: &GroupDescriptor, grids: &Grids, tol: f64) {
    let f = random_field(group, grids, 12);
    let g = smooth_window_field(group, grids);
    for kind in [TransformKind::G, TransformKind::Gdag] {
        let field = otimes_transform(kind, &f, &g, &grids.freq, EvalMode::Oracle, DEFAULT_FULL_CAP).unwrap();
        assert_eq!(field.storage, OtimesStorage::Full);
        let mut worst = 0.0f64;
        let nh = grids.h.len();
        for h in 0..nh {
            for t in (0..nh).step_by(3) {
                for k in 0..grids.k.len() {
                    for w in 0..grids.freq.len() {
                        let o = otimes_oracle(kind, &f, &g, h, t, &grids.k.point(k), &grids.freq.point(w)).unwrap();
                        worst = worst.max((field.get(h, k, t, w).unwrap() - o).norm());
                    }
                }
            }
        }
        assert!(worst < tol, "{kind}: max abs diff {worst:e}");
    }
}

#[test]
fn affine_fields_match_direct_quadrature() {
    let g = make_affine();
    let grids = small_affine();
    check_single_oracles(&g, &grids, 1e-8);
    check_otimes_oracles(&g, &grids, 1e-8);
}

#[test]
fn e2_fields_match_direct_quadrature() {
    let g = make_e2();
    let grids = small_e2();
    check_single_oracles(&g, &grids, 1e-8);
    check_otimes_oracles(&g, &grids, 1e-8);
}

/// Independent sums of the closed forms on the affine group.
#[test]
fn affine_closed_forms() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 5);
    let u = gaussian_window(&grids.k).unwrap();
    let gw = smooth_window_field(&g, &grids);
    let ys = grids.k.nodes();
    let dy = grids.k.quadrature_weights();
    let hs = grids.h.nodes();
    let ufn = |x: f64| (-PI * x * x).exp();
    let gfn = |a: f64, x: f64| Complex64::new((1.0 + 0.3 * a.sin()) * (-PI * x * x).exp(), 0.2 * x * (-PI * x * x).exp());
    let vd = v_dagger_transform(&f, &u, &grids.freq, EvalMode::Oracle).unwrap();
    let gf = g_transform(&f, &gw, &grids.freq).unwrap();
    let gd = g_dagger_transform(&f, &gw, &grids.freq, EvalMode::Oracle).unwrap();
    for (hi, ti, ki, wi) in [(0usize, 16usize, 20usize, 7usize), (8, 8, 31, 16), (13, 2, 40, 25)] {
        let (a, b) = (hs[hi][0], hs[ti][0]);
        let (x, w) = (grids.k.point(ki)[0], grids.freq.point(wi)[0]);
        let sum = |row: usize, weight: &dyn Fn(f64) -> Complex64| -> Complex64 {
            (0..ys.len())
                .map(|j| f.slice_values(row)[j] * weight(ys[j][0]) * dy[j])
                .sum::<Complex64>()
        };
        let expect_vd = a.powf(-0.5) * sum(hi, &|y| ufn(y - a * x) * Complex64::from_polar(1.0, -2.0 * PI * w * y / a));
        assert!((vd.get(hi, ki, wi) - expect_vd).norm() < 1e-10);
        let expect_g = sum(ti, &|y| gfn(a, y - x).conj() * Complex64::from_polar(1.0, -2.0 * PI * w * y)) / b;
        assert!((gf.get(hi, ki, ti, wi).unwrap() - expect_g).norm() < 1e-10);
        let expect_gd = a.sqrt()
            * b.powf(-1.5)
            * sum(ti, &|y| gfn(a, y - a * x).conj() * Complex64::from_polar(1.0, -2.0 * PI * w * y / b));
        assert!((gd.get(hi, ki, ti, wi).unwrap() - expect_gd).norm() < 1e-10);
    }
}

#[test]
fn zero_signal_gives_zero_fields_and_zero_inverses() {
    let g = make_affine();
    let grids = small_affine();
    let f = SliceField::zeros(g.clone(), grids.h.clone(), grids.k.clone()).unwrap();
    let u = gaussian_window(&grids.k).unwrap();
    let gw = smooth_window_field(&g, &grids);
    for kind in ALL_SINGLE {
        let field = gabor_transform(kind, &f, &u, &grids.freq, EvalMode::Interp).unwrap();
        assert_eq!(max_abs(&field.values), 0.0);
        assert_eq!(max_abs(gabor_inverse(&field, &u).unwrap().values()), 0.0);
    }
    for kind in [TransformKind::G, TransformKind::Gdag] {
        let field = otimes_transform(kind, &f, &gw, &grids.freq, EvalMode::Interp, 0).unwrap();
        assert_eq!(field.storage, OtimesStorage::Diagonal);
        assert_eq!(max_abs(&field.values), 0.0);
        assert_eq!(max_abs(otimes_inverse(&field, &gw).unwrap().values()), 0.0);
    }
    assert!(matches!(plancherel_ratio(&v_transform(&f, &u, &grids.freq).unwrap(), &f, &u), Err(Error::ZeroSignal)));
}

#[test]
fn identity_slice_reduces_to_plain_stft() {
    let g = make_affine();
    let grids = small_affine();
    let e = 8;
    assert!((grids.h.point(e)[0] - 1.0).abs() < 1e-14);
    let f = random_field(&g, &grids, 3);
    let u = gaussian_window(&grids.k).unwrap();
    let plain = stft(&f.slice(e), &u, &grids.freq).unwrap();
    for kind in ALL_SINGLE {
        for mode in [EvalMode::Oracle, EvalMode::Interp] {
            let field = gabor_transform(kind, &f, &u, &grids.freq, mode).unwrap();
            let d: Vec<Complex64> = field.slice(e).iter().zip(&plain.values).map(|(a, b)| a - b).collect();
            assert!(max_abs(&d) < 1e-12, "{kind} {mode}");
        }
    }
    let gw = smooth_window_field(&g, &grids);
    let ge = SampledWindow::new(gw.slice(e)).unwrap();
    let plain_g = stft(&f.slice(e), &ge, &grids.freq).unwrap();
    for kind in [TransformKind::G, TransformKind::Gdag] {
        let field = otimes_transform(kind, &f, &gw, &grids.freq, EvalMode::Oracle, 0).unwrap();
        let d: Vec<Complex64> = field.diagonal_block(e).iter().zip(&plain_g.values).map(|(a, b)| a - b).collect();
        assert!(max_abs(&d) < 1e-12, "{kind}");
    }
}

#[test]
fn g_diagonal_is_scaled_slice_stft() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 8);
    let gw = smooth_window_field(&g, &grids);
    let field = g_transform(&f, &gw, &grids.freq).unwrap();
    for h in [0usize, 5, 16] {
        let delta = g.delta(&HPoint::new(grids.h.point(h)));
        let plain = stft(&f.slice(h), &SampledWindow::new(gw.slice(h)).unwrap(), &grids.freq).unwrap();
        let block = field.block(h, h).unwrap();
        for (a, b) in block.iter().zip(&plain.values) {
            assert!((a - b * delta).norm() < 1e-12);
        }
        assert_eq!(block, field.diagonal_block(h));
    }
}

#[test]
fn v_of_window_at_origin() {
    // f_a = u for every a: 𝒱_u f(a,0,0) = a^{-1/2} ‖u‖² = a^{-1/2} 2^{-1/2}.
    let g = make_affine();
    let grids = Grids::affine(9, 257, 257).unwrap();
    let f = SliceField::from_fn(g.clone(), grids.h.clone(), grids.k.clone(), |_, x| {
        Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
    })
    .unwrap();
    let u = gaussian_window(&grids.k).unwrap();
    let field = v_transform(&f, &u, &grids.freq).unwrap();
    let (k0, w0) = (128, 128);
    assert_eq!(grids.k.point(k0)[0], 0.0);
    assert_eq!(grids.freq.point(w0)[0], 0.0);
    for (i, a) in grids.h.nodes().iter().enumerate() {
        let expect = a[0].powf(-0.5) * 2f64.powf(-0.5);
        assert!((field.get(i, k0, w0).re - expect).abs() < 1e-9 * expect);
    }
}

#[test]
fn box_window_at_zero_shift_is_truncated_fourier_transform() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 21);
    let n = 2.0;
    let u = box_window(&grids.k, n).unwrap();
    let field = v_transform(&f, &u, &grids.freq).unwrap();
    let k0 = 32;
    assert_eq!(grids.k.point(k0)[0], 0.0);
    let ys = grids.k.nodes();
    let dy = grids.k.quadrature_weights();
    for (i, a) in grids.h.nodes().iter().enumerate().step_by(4) {
        for wi in [0usize, 9, 20] {
            let w = grids.freq.point(wi)[0];
            let integral: Complex64 = (0..ys.len())
                .filter(|&j| ys[j][0].abs() <= n + 1e-9)
                .map(|j| {
                    let edge = if (ys[j][0].abs() - n).abs() < 1e-9 { 0.5 } else { 1.0 };
                    f.slice_values(i)[j] * Complex64::from_polar(edge * dy[j], -2.0 * PI * w * ys[j][0])
                })
                .sum();
            let expect = integral * a[0].powf(-0.5);
            assert!((field.get(i, k0, wi) - expect).norm() < 1e-10);
            let o = gabor_oracle(TransformKind::V, &f, &u, i, &[0.0], &[w]).unwrap();
            assert!((field.get(i, k0, wi) - o).norm() < 1e-10);
        }
    }
}

#[test]
fn gaussian_type_window_example_value() {
    let g = make_affine();
    let grids = small_affine();
    let gw = gaussian_type_field(&g, &grids.h, &grids.k).unwrap();
    let field = g_transform(&gw, &gw, &grids.freq).unwrap();
    let (e, k0, w0) = (8, 32, 16);
    assert_eq!((grids.h.point(e)[0], grids.k.point(k0)[0], grids.freq.point(w0)[0]), (1.0, 0.0, 0.0));
    let v = field.get(e, k0, e, w0).unwrap();
    let expect = 2f64.powf(-0.5) * (-2.0 * PI).exp();
    assert!((v.re - expect).abs() < 1e-6 * expect && v.im.abs() < 1e-12);
}

#[test]
fn kind_mismatches_are_rejected() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 1);
    let u = gaussian_window(&grids.k).unwrap();
    let gw = smooth_window_field(&g, &grids);
    assert!(matches!(
        gabor_transform(TransformKind::G, &f, &u, &grids.freq, EvalMode::Oracle),
        Err(Error::KindMismatch { .. })
    ));
    assert!(matches!(variant_transform(&f, &u, &grids.freq, TransformKind::V), Err(Error::KindMismatch { .. })));
    assert!(matches!(
        otimes_transform(TransformKind::B, &f, &gw, &grids.freq, EvalMode::Oracle, 0),
        Err(Error::KindMismatch { .. })
    ));
    let vd = v_dagger_transform(&f, &u, &grids.freq, EvalMode::Interp).unwrap();
    assert!(matches!(v_inverse(&vd, &u), Err(Error::KindMismatch { .. })));
    assert!(matches!(variant_inverse(&vd, &u, TransformKind::A), Err(Error::KindMismatch { .. })));
    assert!(v_dagger_inverse(&vd, &u).is_ok());
    assert!(matches!(plancherel_ratio(&vd, &f, &gw), Err(Error::KindMismatch { .. })));
    let gf = g_transform(&f, &gw, &grids.freq).unwrap();
    assert!(matches!(g_dagger_inverse(&gf, &gw), Err(Error::KindMismatch { .. })));
    assert!(matches!(plancherel_ratio(&gf, &f, &u), Err(Error::KindMismatch { .. })));
    assert!(matches!(orthogonality_inner(&vd, &gf, &u, &gw, &f, &f), Err(Error::KindMismatch { .. })));
}

#[test]
fn grid_mismatches_are_rejected() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 1);
    let other_k = ProductGrid::single(Grid1D::uniform(-8.0, 8.0, 66).unwrap());
    let u = gaussian_window(&other_k).unwrap();
    assert!(matches!(v_transform(&f, &u, &grids.freq), Err(Error::GridMismatch(_))));
}

#[test]
fn degenerate_window_slice_blocks_inversion() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 2);
    let gw = SliceField::from_fn(g.clone(), grids.h.clone(), grids.k.clone(), |h, x| {
        if h[0] > 1.9 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        }
    })
    .unwrap();
    let field = g_transform(&f, &gw, &grids.freq).unwrap();
    assert!(matches!(g_inverse(&field, &gw), Err(Error::DegenerateWindowSlice { index: 16, .. })));
}

#[test]
fn v_inverse_slice_is_scaled_istft() {
    let g = make_affine();
    let grids = Grids::affine(5, 128, 128).unwrap();
    let f = random_field(&g, &grids, 4);
    let u = gaussian_window(&grids.k).unwrap();
    let field = v_transform(&f, &u, &grids.freq).unwrap();
    let back = v_inverse(&field, &u).unwrap();
    for h in 0..grids.h.len() {
        let delta = g.delta(&HPoint::new(grids.h.point(h)));
        let block = STFTField {
            values: field.slice(h).iter().map(|v| v * delta.powf(-0.5)).collect(),
            shift_grid: grids.k.clone(),
            freq_grid: grids.freq.clone(),
        };
        let slice = istft(&block, &u, &u).unwrap();
        for (a, b) in back.slice_values(h).iter().zip(slice.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn identity_slice_inverses_agree_with_v_inverse() {
    let g = make_affine();
    let grids = small_affine();
    let f = random_field(&g, &grids, 6);
    let u = gaussian_window(&grids.k).unwrap();
    let base = v_inverse(&v_transform(&f, &u, &grids.freq).unwrap(), &u).unwrap();
    for kind in [TransformKind::Vdag, TransformKind::A, TransformKind::B] {
        let back = gabor_inverse(&gabor_transform(kind, &f, &u, &grids.freq, EvalMode::Oracle).unwrap(), &u).unwrap();
        for (a, b) in back.slice_values(8).iter().zip(base.slice_values(8)) {
            assert!((a - b).norm() < 1e-12, "{kind}");
        }
    }
    let gw = smooth_window_field(&g, &grids);
    let gi = g_inverse(&g_transform(&f, &gw, &grids.freq).unwrap(), &gw).unwrap();
    let gdi = g_dagger_inverse(&g_dagger_transform(&f, &gw, &grids.freq, EvalMode::Oracle).unwrap(), &gw).unwrap();
    for (a, b) in gi.slice_values(8).iter().zip(gdi.slice_values(8)) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn round_trips_on_reduced_affine_grids() {
    let g = make_affine();
    let grids = Grids::affine(16, 256, 256).unwrap();
    let f = semigabor::presets::GaussianEnvelope::standard(&g).to_field(&g, &grids).unwrap();
    let u = gaussian_window(&grids.k).unwrap();
    for kind in ALL_SINGLE {
        let back = gabor_inverse(&gabor_transform(kind, &f, &u, &grids.freq, EvalMode::Oracle).unwrap(), &u).unwrap();
        assert!(rel_err(&back, &f) < 1e-2, "{kind}");
    }
    let gw = semigabor::presets::envelope_window_field(&g, &grids).unwrap();
    for kind in [TransformKind::G, TransformKind::Gdag] {
        let field = otimes_transform(kind, &f, &gw, &grids.freq, EvalMode::Oracle, 0).unwrap();
        assert!(rel_err(&otimes_inverse(&field, &gw).unwrap(), &f) < 2e-2, "{kind}");
    }
}

#[test]
fn gaussian_type_round_trip() {
    // Slices beyond a ≈ 2.3 fall below the degeneracy threshold, so stay under it.
    let g = make_affine();
    let grids = Grids {
        h: ProductGrid::single(Grid1D::log_uniform(0.25, 2.0, 16).unwrap()),
        ..Grids::affine(2, 256, 256).unwrap()
    };
    let gw = gaussian_type_field(&g, &grids.h, &grids.k).unwrap();
    let field = g_transform(&gw, &gw, &grids.freq).unwrap();
    assert!(rel_err(&g_inverse(&field, &gw).unwrap(), &gw) < 2e-2);
    let far = Grids::affine(16, 64, 64).unwrap();
    let gw = gaussian_type_field(&g, &far.h, &far.k).unwrap();
    let field = otimes_transform(TransformKind::G, &gw, &gw, &far.freq, EvalMode::Oracle, 0).unwrap();
    assert!(matches!(g_inverse(&field, &gw), Err(Error::DegenerateWindowSlice { .. })));
}

#[test]
fn orthogonality_relations() {
    let g = make_affine();
    let grids = Grids::affine(8, 257, 129).unwrap();
    let f = semigabor::presets::GaussianEnvelope::standard(&g).to_field(&g, &grids).unwrap();
    let even = gaussian_window(&grids.k).unwrap();
    let odd = odd_hermite_window(&grids.k).unwrap();
    let fe = v_transform(&f, &even, &grids.freq).unwrap();
    let fo = v_transform(&f, &odd, &grids.freq).unwrap();
    let (lhs, rhs) = orthogonality_inner(&fe, &fo, &even, &odd, &f, &f).unwrap();
    let scale = (fe.norm_sq() * fo.norm_sq()).sqrt();
    assert!(lhs.norm() < 1e-4 * scale, "{lhs}");
    assert!(rhs.norm() < 1e-12);
    let (same, _) = orthogonality_inner(&fe, &fe, &even, &even, &f, &f).unwrap();
    assert!((same.re - fe.norm_sq()).abs() < 1e-12 * fe.norm_sq());
    let ratio = plancherel_ratio(&fe, &f, &even).unwrap();
    assert!((same.re / (even.norm_sq() * f.norm_sq()) - ratio).abs() < 1e-12);
}

#[test]
fn interp_mode_is_within_1e3_of_oracle_on_default_grids() {
    let g = make_affine();
    let grids = Grids::default_for(&g).unwrap();
    let f = semigabor::presets::GaussianEnvelope::standard(&g).to_field(&g, &grids).unwrap();
    let u = Window::Single(gaussian_window(&grids.k).unwrap());
    let w = Window::Field(semigabor::presets::envelope_window_field(&g, &grids).unwrap());
    for kind in [TransformKind::Vdag, TransformKind::A, TransformKind::B, TransformKind::Gdag] {
        let window = if kind.is_otimes() { &w } else { &u };
        let values = |mode| match transform(kind, &f, window, &grids.freq, mode, 0).unwrap() {
            TransformField::Gabor(x) => x.values,
            TransformField::Otimes(x) => x.values,
        };
        let (a, b) = (values(EvalMode::Oracle), values(EvalMode::Interp));
        let d: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(max_abs(&d) <= 1e-3, "{kind}: {:e}", max_abs(&d));
    }
}
