use std::f64::consts::PI;

use fidzero::fidelity::mode_fidelity;
use fidzero::linalg2::inner;
use fidzero::spectrum::GapSampler;
use fidzero::zeros::extract_zeros;
use fidzero::{
    analytic_zero_lines, e_min, eig2x2, momentum_grid, re_gap, run_plane_scan, zero_region_membership, DVector,
    Degeneracy, Execution, FidelityKernel, ModelKind, ModelSpec, Quantities, ScanConfig, Strictness, Window,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex(range: f64) -> impl Strategy<Value = Complex64> {
    (-range..range, -range..range).prop_map(|(a, b)| c(a, b))
}

fn model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (0.2f64..1.5).prop_map(ModelSpec::kitaev),
        (-1.5f64..-0.2).prop_map(ModelSpec::ssh),
        Just(ModelSpec::default_for(ModelKind::Haldane)),
        Just(ModelSpec::Qwz),
    ]
}

/// Closed-form continuum zero regions used as oracles.
fn closed_form_member(model: &ModelSpec, z: Complex64) -> Option<bool> {
    let (x, y) = (z.re, z.im);
    match *model {
        ModelSpec::Kitaev { delta, .. } => Some(x.abs() <= 1.0 && x * x + (y / delta).powi(2) >= 1.0),
        ModelSpec::Ssh { t2 } => Some(x.abs() <= t2.abs() && x * x + y * y >= t2 * t2),
        // two disks of radius 1 centred on ±1, tangent at the origin
        ModelSpec::Qwz => Some(x.abs() <= 2.0 && y * y >= 1.0 - (x.abs() - 1.0).powi(2)),
        ModelSpec::Haldane { .. } => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigensystem_identities(d0 in complex(3.0), d1 in complex(3.0), d2 in complex(3.0), d3 in complex(3.0)) {
        let d = DVector::new(d0, d1, d2, d3).unwrap();
        let sol = eig2x2(&d);
        prop_assume!(sol.degeneracy != Degeneracy::ExceptionalPoint);
        let scale = 1.0 + sol.e_plus().norm() + sol.e_minus().norm();
        prop_assert!((sol.e_plus() + sol.e_minus() - 2.0 * d0).norm() < 1e-12 * scale);
        for b in [&sol.plus, &sol.minus] {
            let hv = d.apply(b.right);
            prop_assert!((hv[0] - b.energy * b.right[0]).norm() < 1e-12 * scale);
            prop_assert!((hv[1] - b.energy * b.right[1]).norm() < 1e-12 * scale);
            prop_assert!((inner(&b.left, &b.right) - 1.0).norm() < 1e-12);
        }
        prop_assert!(sol.ground().energy.re <= sol.excited().energy.re + 1e-12 * scale);
    }

    #[test]
    fn mode_factor_is_symmetric(m in model(), a in complex(2.0), b in complex(2.0), k in 0.0..2.0 * PI, ky in 0.0..2.0 * PI) {
        let k = if m.kind().dimension() == 1 { fidzero::Momentum::d1(k) } else { fidzero::Momentum::d2(k, ky) };
        let ab = mode_fidelity(&m, k, a, b, Strictness::Lenient).unwrap();
        let ba = mode_fidelity(&m, k, b, a, Strictness::Lenient).unwrap();
        prop_assert_eq!(ab.value, ba.value);
        prop_assert!(ab.value >= 0.0);
    }

    #[test]
    fn hermitian_limit_is_bounded_by_one(m in model(), x in -2.5f64..2.5, dx in -0.05f64..0.05) {
        let kernel = FidelityKernel::new(m, 8, Strictness::Lenient).unwrap();
        let f = kernel.total(c(x, 0.0), c(x + dx, 0.0)).unwrap();
        prop_assert!(f.value <= 1.0 + 1e-9);
    }

    #[test]
    fn mirror_symmetry_for_real_and_imaginary_displacements(m in model(), z in complex(2.0), s in 0.001f64..0.02, imaginary in any::<bool>()) {
        let kernel = FidelityKernel::new(m, 8, Strictness::Lenient).unwrap();
        let delta = if imaginary { c(0.0, s) } else { c(s, 0.0) };
        let up = kernel.f_min(z, delta).unwrap().value;
        let down = kernel.f_min(z.conj(), delta).unwrap().value;
        prop_assert!((up - down).abs() < 1e-10, "{} vs {}", up, down);
    }

    #[test]
    fn e_min_is_nonnegative_and_resolution_monotone(m in model(), z in complex(2.0)) {
        let coarse = GapSampler::new(m, 64).unwrap().e_min(z, false).value;
        let fine = GapSampler::new(m, 128).unwrap().e_min(z, false).value;
        let refined = GapSampler::new(m, 64).unwrap().e_min(z, true).value;
        prop_assert!(fine >= 0.0 && refined >= 0.0);
        // the 128 grid contains the 64 grid
        prop_assert!(fine <= coarse);
        prop_assert!(refined <= coarse);
    }

    #[test]
    fn discrete_gap_bounds_the_continuum_gap(m in model(), z in complex(2.0)) {
        let grid = momentum_grid(&m, 16).unwrap();
        let discrete = grid.momenta.iter().map(|&k| re_gap(&m, k, z)).fold(f64::INFINITY, f64::min);
        let continuum = e_min(&m, z, if m.kind().dimension() == 1 { 1024 } else { 256 }, true).unwrap().value;
        prop_assert!(continuum <= discrete + 1e-9, "{} > {}", continuum, discrete);
    }

    #[test]
    fn points_on_zero_lines_close_the_gap(m in model(), pick in any::<prop::sample::Index>(), t in 0.0f64..1.0, up in any::<bool>()) {
        let lines = analytic_zero_lines(&m, 8).unwrap();
        let line = &lines[pick.index(lines.len())];
        let y = (line.im_range.floor + t) * if up { 1.0 } else { -1.0 };
        let z = c(line.real_part, y);
        // merged lines carry momenta with different floors; the lowest one closes the gap
        let closest = line.momenta.iter().map(|&k| re_gap(&m, k, z)).fold(f64::INFINITY, f64::min);
        prop_assert!(closest < 1e-6);
        let g = e_min(&m, z, if m.kind().dimension() == 1 { 1024 } else { 128 }, true).unwrap().value;
        prop_assert!(g < 1e-6, "e_min {} at {}", g, z);
    }
}

#[test]
fn e_min_agrees_with_region_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in [ModelSpec::kitaev(0.6), ModelSpec::ssh(-1.0), ModelSpec::Qwz, ModelSpec::default_for(ModelKind::Haldane)] {
        let (rx, ry) = if m.kind() == ModelKind::Qwz { (2.5, 2.0) } else { (1.5, 1.5) };
        let res = if m.kind().dimension() == 1 { 1024 } else { 256 };
        let mut mismatches = Vec::new();
        for _ in 0..200 {
            let z = c(rng.gen_range(-rx..rx), rng.gen_range(-ry..ry));
            let closed = e_min(&m, z, res, true).unwrap().value < 1e-8;
            let member = closed_form_member(&m, z).unwrap_or_else(|| zero_region_membership(&m, z).unwrap());
            if closed != member {
                mismatches.push(z);
            }
        }
        assert!(mismatches.is_empty(), "{}: {mismatches:?}", m.kind());
    }
}

#[test]
fn library_membership_matches_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for m in [ModelSpec::kitaev(0.6), ModelSpec::ssh(-1.0), ModelSpec::Qwz] {
        for _ in 0..500 {
            let z = c(rng.gen_range(-2.5..2.5), rng.gen_range(-2.0..2.0));
            assert_eq!(zero_region_membership(&m, z).unwrap(), closed_form_member(&m, z).unwrap(), "{} {z}", m.kind());
        }
    }
}

#[test]
fn scans_are_deterministic_and_subsume_serial_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for m in [ModelSpec::kitaev(0.6), ModelSpec::default_for(ModelKind::Haldane)] {
        let cfg = ScanConfig::new(m, 8, Window::square(1.5)).with_resolution(41, 37);
        let a = fidzero::scan::run_plane_scan_with(&cfg, Execution::Sequential).unwrap();
        let b = fidzero::scan::run_plane_scan_with(&cfg, Execution::Threads(3)).unwrap();
        let c2 = run_plane_scan(&cfg).unwrap();
        assert_eq!(a.f_min, b.f_min);
        assert_eq!(a.f_min, c2.f_min);
        assert_eq!(a.argmin, b.argmin);
        let grid = momentum_grid(&m, 8).unwrap();
        let f = a.f_min.as_ref().unwrap();
        for _ in 0..100 {
            let (i, j) = (rng.gen_range(0..cfg.n_im), rng.gen_range(0..cfg.n_re));
            let g = cfg.gamma(i, j);
            let half = cfg.delta_gamma / 2.0;
            let serial = grid
                .momenta
                .iter()
                .map(|&k| mode_fidelity(&m, k, g + half, g - half, Strictness::Lenient).unwrap().value)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(f[a.index(i, j)], serial);
        }
    }
}

#[test]
fn confirmed_zeros_sit_where_e_min_is_small() {
    for (m, window) in [
        (ModelSpec::kitaev(0.6), Window::square(1.5)),
        (ModelSpec::Qwz, Window::new(-2.5, 2.5, -2.0, 2.0)),
    ] {
        let cfg = ScanConfig::new(m, 8, window).with_resolution(51, 41).with_quantities(Quantities {
            f_min: true,
            e_min: true,
            total_fidelity: false,
        });
        let scan = run_plane_scan(&cfg).unwrap();
        let zeros = extract_zeros(&scan).unwrap();
        assert!(!zeros.points.is_empty());
        let e = scan.e_min.as_ref().unwrap();
        let (h, v) = (cfg.re_step(), cfg.im_step());
        for p in &zeros.points {
            let j = ((p.re - window.re_min) / h).round() as usize;
            let i = ((p.im - window.im_min) / v).round() as usize;
            assert!(e[scan.index(i, j)] <= 0.05, "zero at {} + {}i in a cell with E_min {}", p.re, p.im, e[scan.index(i, j)]);
            assert!(e_min(&m, c(p.re, p.im), 512, true).unwrap().value < 1e-6);
        }
    }
}

#[test]
fn detected_lines_stay_inside_the_critical_interval() {
    for m in [ModelSpec::kitaev(0.6), ModelSpec::default_for(ModelKind::Haldane), ModelSpec::Qwz] {
        let bound = m.outer_critical();
        for l in [4, 8, 16] {
            for line in analytic_zero_lines(&m, l).unwrap() {
                assert!(line.real_part.abs() <= bound + 1e-12);
            }
        }
        let half = bound + 0.5;
        let cfg = ScanConfig::new(m, 8, Window::new(-half, half, -2.0, 2.0)).with_resolution(61, 21);
        let zeros = extract_zeros(&run_plane_scan(&cfg).unwrap()).unwrap();
        for line in zeros.lines {
            assert!(line.real_part.abs() <= bound + 1e-9, "{} line at {}", m.kind(), line.real_part);
        }
    }
}

#[test]
fn off_line_points_with_high_fidelity_keep_an_open_discrete_gap() {
    let m = ModelSpec::kitaev(0.6);
    let cfg = ScanConfig::new(m, 16, Window::square(1.5)).with_resolution(61, 61);
    let scan = run_plane_scan(&cfg).unwrap();
    let grid = momentum_grid(&m, 16).unwrap();
    let f = scan.f_min.as_ref().unwrap();
    for i in 0..cfg.n_im {
        for j in 0..cfg.n_re {
            if f[scan.index(i, j)] > 0.9 {
                let g = cfg.gamma(i, j);
                let gap = grid.momenta.iter().map(|&k| re_gap(&m, k, g)).fold(f64::INFINITY, f64::min);
                assert!(gap > 0.0, "{g}");
            }
        }
    }
}
