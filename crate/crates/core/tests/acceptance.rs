//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its measured numbers (run with `-- --nocapture` to see them).
//!
//! Heavy criteria take a shared lock so their wall-clock budgets are not
//! distorted by running concurrently on small machines.

use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dsm_core::atlas::{
    classify_param, connectivity_check_on, cross_section, path_to_superattracting,
    superattracting_atlas, TongueOutcome,
};
use dsm_core::circle::{Angle, CircleParams, SolverConfig};
use dsm_core::complex::{
    classify_critical_orbit, critical_points, distinguished_point, g_derivative, g_eval,
    params_from_critical_data, ComplexParams, OrbitClass,
};
use dsm_core::cycle::find_attracting_cycle;
use dsm_core::koenigs::{
    alpha_for_multiplier, beltrami_of_stretch, composed_dilatation, koenigs_derivative,
    koenigs_eval, koenigs_residual, pullback_dilatation, reflect_coefficient, KoenigsChart,
};
use dsm_core::raster::{classify_raster, complex_raster, Cell, Window};
use dsm_core::render::{render_tongue_plane, RenderManifest, THREADS_ENV};
use dsm_core::semiconjugacy::{phi_eval, phi_lift, type_from_point, BinaryType};

static HEAVY: Mutex<()> = Mutex::new(());

const TAU: f64 = std::f64::consts::TAU;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

/// Raster profile: enough budget to resolve multipliers up to ~0.997 while
/// keeping half-million-cell scans affordable.
fn raster_cfg() -> SolverConfig {
    SolverConfig {
        max_transient: 6000,
        complex_budget: 20_000,
        ..SolverConfig::default()
    }
}

#[test]
fn criterion_01_atlas_counting() {
    let t0 = Instant::now();
    let c = cfg();
    for p in 1..=8usize {
        let entries = superattracting_atlas(p, &c).expect("atlas solves");
        assert_eq!(
            entries.len(),
            (1usize << p) - 1,
            "exactly 2^p - 1 entries at p = {p}"
        );
        let mut got: Vec<BinaryType> = entries.iter().map(|e| e.ty).collect();
        got.sort();
        got.dedup();
        let mut want = BinaryType::all_of_period_dividing(p as u32);
        want.sort();
        assert_eq!(got, want, "types are exactly the reduced k/(2^p - 1) at p = {p}");
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 60.0, "atlas p = 1..8 took {dt:.1} s, budget 60 s");
    println!("ACCEPTANCE 1 PASS: atlas counts 2^p - 1 with full type coverage for p = 1..8 ({dt:.2} s)");
}

#[test]
fn criterion_02_atlas_anchor() {
    let entries = superattracting_atlas(1, &cfg()).expect("atlas solves");
    let a = entries[0].a_super.value();
    assert!((a - 0.5).abs() <= 1e-12, "period-1 anchor at {a}");
    println!("ACCEPTANCE 2 PASS: period-1 superattracting parameter a = {a} (|a - 1/2| <= 1e-12)");
}

#[test]
fn criterion_03_monotonicity_and_shift() {
    // independent evaluator: unlike the library it takes the raw (unreduced)
    // value of a, which the shift identity needs
    fn iterate_raw(a: f64, b: f64, x: f64, p: usize) -> f64 {
        let mut v = x;
        for _ in 0..p {
            let k = v.floor();
            let f = v - k;
            v = 2.0 * k + 2.0 * f + a + b / std::f64::consts::PI * (TAU * f).sin();
        }
        v
    }
    // it agrees with the library lift on reduced parameters
    for &(a, b, x) in &[(0.3, 0.6, 0.2), (0.9, 1.0, 0.5), (0.12, 0.8, 0.77)] {
        let p = CircleParams::new(a, b).unwrap();
        assert!((p.iterate_lift(x, 5) - iterate_raw(a, b, x, 5)).abs() < 1e-12);
    }

    let n = 10_000;
    let mut worst: f64 = f64::INFINITY;
    for p in 1..=8usize {
        for i in 0..n {
            let a0 = i as f64 / n as f64;
            let a1 = (i + 1) as f64 / n as f64;
            let slope = (iterate_raw(a1, 1.0, 0.5, p) - iterate_raw(a0, 1.0, 0.5, p)) * n as f64;
            worst = worst.min(slope);
        }
        // F^p at a+1 exceeds F^p at a by exactly 2^p - 1
        for &x in &[0.5, 0.2, 0.77] {
            let base = iterate_raw(0.3, 0.6, x, p);
            let shifted = iterate_raw(1.3, 0.6, x, p);
            let want = (1u64 << p) as f64 - 1.0;
            assert!(
                (shifted - base - want).abs() <= 1e-9 * want.max(1.0),
                "shift identity at p = {p}"
            );
        }
    }
    assert!(worst >= 1.0 - 1e-6, "min slope {worst}");
    println!("ACCEPTANCE 3 PASS: min slope of a -> F^p(1/2) is {worst:.9} >= 1 - 1e-6; shift identity holds to 1e-9");
}

#[test]
fn criterion_04_derivative_bound_and_no_attractor_scan() {
    let c = cfg();
    // derivative bound with slack 1e-12
    for bi in 0..=32 {
        let b = bi as f64 / 32.0;
        let p = CircleParams::new(0.41, b).unwrap();
        for i in 0..10_000 {
            let x = Angle::new(i as f64 / 10_000.0);
            assert!(p.eval_derivative(x) >= 2.0 * (1.0 - b) - 1e-12);
        }
    }
    // 256 x 256 grid over b <= 1/2: zero attractors
    let found: usize = (0..256usize)
        .into_par_iter()
        .map(|j| {
            let b = (j as f64 + 0.5) / 256.0 * 0.5;
            (0..256)
                .filter(|i| {
                    let a = (*i as f64 + 0.5) / 256.0;
                    let p = CircleParams::new(a, b).unwrap();
                    find_attracting_cycle(p, &c).is_some()
                })
                .count()
        })
        .sum();
    assert_eq!(found, 0, "no attracting cycle anywhere in b <= 1/2");
    println!("ACCEPTANCE 4 PASS: f' >= 2(1-b) - 1e-12 on grids; 256x256 scan of b <= 1/2 found 0 attractors");
}

#[test]
fn criterion_05_semiconjugacy() {
    let c = cfg();
    assert_eq!(c.phi_depth, 60);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_fe: f64 = 0.0;
    for _ in 0..10_000 {
        let a: f64 = rng.random();
        let b: f64 = rng.random();
        let x: f64 = rng.random();
        let p = CircleParams::new(a, b).unwrap();
        let lhs = phi_eval(p, p.eval_circle(Angle::new(x)), &c);
        let rhs = Angle::new(2.0 * phi_eval(p, Angle::new(x), &c).value());
        worst_fe = worst_fe.max(lhs.dist(rhs));
    }
    assert!(worst_fe < 1e-8, "functional equation residual {worst_fe:e}");

    // b = 0 closed form: phi = x + a
    let p0 = CircleParams::new(0.3, 0.0).unwrap();
    let mut worst0: f64 = 0.0;
    for i in 0..1000 {
        let x = i as f64 / 1000.0;
        worst0 = worst0.max(phi_eval(p0, Angle::new(x), &c).dist(Angle::new(x + 0.3)));
    }
    assert!(worst0 < 1e-10, "b = 0 closed form residual {worst0:e}");

    // monotone degree 1 on a 10^4 grid for several parameters
    for &(a, b) in &[(0.23, 0.97), (0.5, 0.99), (0.81, 0.66), (0.11, 1.0)] {
        let p = CircleParams::new(a, b).unwrap();
        let n = 10_000;
        let mut prev = phi_lift(p, 0.0, &c);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            let v = phi_lift(p, x, &c);
            assert!(v >= prev - 1e-9, "monotone at ({a}, {b}), x = {x}");
            prev = v;
        }
        let d1 = phi_lift(p, 1.0, &c) - phi_lift(p, 0.0, &c);
        assert!((d1 - 1.0).abs() < 1e-9, "degree 1 at ({a}, {b}): {d1}");
    }
    println!("ACCEPTANCE 5 PASS: functional-equation residual {worst_fe:.2e} < 1e-8 on 10^4 samples; phi_a0 = x + a to 1e-10; monotone degree 1");
}

#[test]
fn criterion_06_connectedness() {
    let _guard = HEAVY.lock().unwrap();
    let t0 = Instant::now();
    let c = raster_cfg();
    let window = Window::new(0.0, 1.0, 0.5, 1.0).unwrap();
    let raster = classify_raster(window, 1024, 512, &c);
    let mut lines = Vec::new();
    for ty in BinaryType::all_of_period_dividing(3) {
        let report = connectivity_check_on(&raster, ty, &c).expect("report");
        assert!(
            report.pass,
            "connectivity of tongue {ty}: {report:?}"
        );
        lines.push(format!(
            "{ty}: 1 component, {} px, undecided fraction {:.4}",
            report.tongue_pixels, report.undecided_fraction
        ));
    }
    // cross-sections are single intervals for the three low types
    for ty in [
        BinaryType::new(0, 1).unwrap(),
        BinaryType::new(1, 2).unwrap(),
        BinaryType::new(2, 2).unwrap(),
    ] {
        for b in [0.8, 0.9, 0.95, 1.0] {
            let sec = cross_section(ty, b, &c);
            assert_eq!(
                sec.len(),
                1,
                "cross-section of {ty} at b = {b}: {sec:?}"
            );
        }
    }
    let dt = t0.elapsed().as_secs_f64();
    assert!(dt < 600.0, "connectedness took {dt:.0} s, budget 600 s");
    println!(
        "ACCEPTANCE 6 PASS ({dt:.0} s): all 9 tongues of period <= 3 connected at 1024x512 with anchor inside; sections single intervals\n  {}",
        lines.join("\n  ")
    );
}

#[test]
fn criterion_07_path_endpoints() {
    let _guard = HEAVY.lock().unwrap();
    let c = SolverConfig {
        max_transient: 6000,
        complex_budget: 20_000,
        section_grid: 1024,
        path_step: 1.0 / 128.0,
        ..SolverConfig::default()
    };
    // 20 random in-tongue starts of period <= 3
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut starts = Vec::new();
    while starts.len() < 20 {
        let a: f64 = rng.random();
        let b: f64 = 0.6 + 0.39 * rng.random::<f64>();
        let params = CircleParams::new(a, b).unwrap();
        if let TongueOutcome::InTongue { ty, cycle } = classify_param(params, &c).outcome {
            if cycle.period <= 3 {
                starts.push((params, ty));
            }
        }
    }
    let atlas = superattracting_atlas(3, &c).expect("atlas");
    let results: Vec<(f64, usize, usize)> = starts
        .par_iter()
        .map(|(params, ty)| {
            let path = path_to_superattracting(*ty, *params, &c).expect("path completes");
            let end = path.endpoint();
            let anchor = atlas.iter().find(|e| e.ty == *ty).expect("anchor").a_super;
            let err = Angle::new(end.a).dist(anchor).max((end.b - 1.0).abs());
            (err, path.decay_violations, path.vertices.len())
        })
        .collect();
    let mut total_steps = 0;
    let mut total_violations = 0;
    for (err, violations, len) in &results {
        assert!(*err <= c.root_tol, "endpoint error {err:e}");
        total_steps += len - 1;
        total_violations += violations;
    }
    let rate = total_violations as f64 / total_steps as f64;
    assert!(
        rate <= 0.05,
        "multiplier decay violations {total_violations}/{total_steps}"
    );
    println!(
        "ACCEPTANCE 7 PASS: 20 paths end within root_tol of their atlas anchors; decay violations {total_violations}/{total_steps} = {:.2}%",
        100.0 * rate
    );
}

#[test]
fn criterion_08_koenigs() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst_fe: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    let mut worst_dir: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    for k in 0..10 {
        let lambda = 0.05 + 0.75 * k as f64 / 9.0;
        let b = (2.0 - lambda) / 2.0;
        let params = CircleParams::new(0.5, b).unwrap();
        let mut cycle = find_attracting_cycle(params, &c).expect("spine cycle");
        let cp = ComplexParams::new(0.5, b).unwrap();
        distinguished_point(&cp, &mut cycle, &c).expect("distinguished");
        let chart = KoenigsChart::build(&cp, &cycle, &c).expect("chart");
        assert!((chart.lambda - lambda).abs() < 1e-9);

        let d = koenigs_derivative(&cp, &cycle, &chart, chart.base).unwrap();
        worst_norm = worst_norm.max((d.norm() - 1.0).abs());
        let want = Complex64::new(0.0, 1.0) * chart.base; // = i conj(x0) at x0 = -1
        worst_dir = worst_dir.max((d - want).norm());

        for _ in 0..100 {
            let r = 0.5 * chart.radius * rng.random::<f64>();
            let z = chart.base + Complex64::from_polar(r, TAU * rng.random::<f64>());
            worst_fe = worst_fe.max(koenigs_residual(&cp, &cycle, &chart, z).unwrap());
            let phi = koenigs_eval(&cp, &cycle, &chart, z).unwrap();
            let refl = koenigs_eval(&cp, &cycle, &chart, z.conj().inv()).unwrap();
            worst_sym = worst_sym.max((refl.conj() - phi).norm());
        }
    }
    assert!(worst_fe < 1e-6, "functional equation {worst_fe:e}");
    assert!(worst_norm < 1e-6, "normalization modulus {worst_norm:e}");
    assert!(worst_dir < 1e-6, "normalization direction {worst_dir:e}");
    assert!(worst_sym < 1e-6, "symmetry {worst_sym:e}");
    println!(
        "ACCEPTANCE 8 PASS: Koenigs over 10 tongue parameters, lambda in [0.05, 0.8]: functional eq {worst_fe:.2e}, |phi'| error {worst_norm:.2e}, direction {worst_dir:.2e}, symmetry {worst_sym:.2e}"
    );
}

#[test]
fn criterion_09_deformation_arithmetic() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let l = (rng.random::<f64>() * 0.998 + 1e-3).clamp(1e-3, 0.999);
        let r = (rng.random::<f64>() * 0.998 + 1e-3).clamp(1e-3, 0.999);
        let alpha = alpha_for_multiplier(l, r).unwrap();
        assert!(alpha > -1.0);
        assert!((l.powf(1.0 + alpha) - r).abs() <= 1e-12, "round trip at ({l}, {r})");
        let mu = beltrami_of_stretch(alpha, Complex64::new(0.4, -1.1));
        let want = (0.5 * alpha).abs() / (1.0 + 0.5 * alpha).abs();
        assert!((mu.norm() - want).abs() < 1e-12);
        assert!(want < 1.0);
    }

    // composed dilatation and pullback on a chart
    let params = CircleParams::new(0.5, 0.9).unwrap();
    let mut cycle = find_attracting_cycle(params, &c).unwrap();
    let cp = ComplexParams::new(0.5, 0.9).unwrap();
    distinguished_point(&cp, &mut cycle, &c).unwrap();
    let chart = KoenigsChart::build(&cp, &cycle, &c).unwrap();
    let alpha = alpha_for_multiplier(chart.lambda, 0.55).unwrap();
    let target = (0.5 * alpha).abs() / (1.0 + 0.5 * alpha).abs();
    let mut worst_mod: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut worst_pull: f64 = 0.0;
    for _ in 0..100 {
        let r = 0.5 * chart.radius * (0.2 + 0.8 * rng.random::<f64>());
        let z = chart.base + Complex64::from_polar(r, TAU * rng.random::<f64>());
        let mu = composed_dilatation(&cp, &cycle, &chart, alpha, z).unwrap();
        worst_mod = worst_mod.max((mu.norm() - target).abs());
        let zi = z.conj().inv();
        let mui = composed_dilatation(&cp, &cycle, &chart, alpha, zi).unwrap();
        worst_sym = worst_sym.max((mui - reflect_coefficient(mu, z)).norm());
        let pulled = pullback_dilatation(&cp, mu, z, 4).unwrap();
        worst_pull = worst_pull.max((pulled.norm() - mu.norm()).abs());
    }
    assert!(worst_mod < 1e-8, "constant modulus {worst_mod:e}");
    assert!(worst_sym < 1e-8, "symmetry {worst_sym:e}");
    assert!(worst_pull < 1e-12, "pullback modulus {worst_pull:e}");
    println!(
        "ACCEPTANCE 9 PASS: lambda^(1+alpha) = rho to 1e-12 on 10^3 pairs; |mu| constant to {worst_mod:.2e}; symmetry {worst_sym:.2e}; pullback modulus {worst_pull:.2e}"
    );
}

#[test]
fn criterion_10_complex_consistency() {
    let c = cfg();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);

    // symmetry identity on 10^4 samples
    let mut worst_sym: f64 = 0.0;
    let mut used = 0;
    while used < 10_000 {
        let p = ComplexParams::new(rng.random(), 2.0 * rng.random::<f64>()).unwrap();
        let z = Complex64::new(
            4.0 * rng.random::<f64>() - 2.0,
            4.0 * rng.random::<f64>() - 2.0,
        );
        if z.norm() < 0.2 {
            continue;
        }
        let (Ok(lhs), Ok(rhs)) = (g_eval(&p, z.conj().inv()), g_eval(&p, z)) else {
            continue;
        };
        let rhs = rhs.conj().inv();
        worst_sym = worst_sym.max((lhs - rhs).norm() / rhs.norm().max(1.0));
        used += 1;
    }
    assert!(worst_sym < 1e-12, "symmetry residual {worst_sym:e}");

    // critical points: derivative zero and Vieta product one
    for k in 1..=40 {
        let b = k as f64 / 20.0;
        let (zin, zout) = critical_points(b).unwrap();
        let p = ComplexParams::new(0.37, b).unwrap();
        for z in [zin, zout] {
            let d = g_derivative(&p, z).unwrap();
            let scale = g_eval(&p, z).unwrap().norm().max(1.0);
            assert!(d.norm() / scale < 1e-10, "g' at critical point, b = {b}");
        }
        assert!(((zin * zout).norm() - 1.0).abs() < 1e-12, "Vieta at b = {b}");
    }

    // recovery round trip
    for _ in 0..100 {
        let p = ComplexParams::new(rng.random(), 0.05 + 0.9 * rng.random::<f64>()).unwrap();
        let (omega, _) = critical_points(p.b).unwrap();
        let v = g_eval(&p, omega).unwrap();
        let q = params_from_critical_data(omega, v).unwrap();
        assert!((q.b - p.b).abs() < 1e-10);
        assert!(q.a.dist(p.a) < 1e-10);
    }

    // 100 tongue parameters: both critical orbits reach the same circle
    // cycle, and the distinguished type agrees with classify_param
    let mut samples = Vec::new();
    while samples.len() < 100 {
        let a: f64 = rng.random();
        let b: f64 = 0.6 + 0.4 * rng.random::<f64>();
        let params = CircleParams::new(a, b).unwrap();
        if let TongueOutcome::InTongue { ty, cycle } = classify_param(params, &c).outcome {
            samples.push((params, ty, cycle));
        }
    }
    let mut decided = 0;
    for (params, ty, _cycle) in &samples {
        let cp = ComplexParams::from_circle(*params);
        match classify_critical_orbit(&cp, &c).unwrap() {
            OrbitClass::CircleAttracting { cycle: ccycle, distinguished } => {
                decided += 1;
                // outer critical orbit lands on the same cycle
                let (_, outer) = critical_points(cp.b).unwrap();
                let mut z = outer;
                let mut ok = false;
                for _ in 0..c.complex_budget {
                    z = match g_eval(&cp, z) {
                        Ok(v) => v,
                        Err(_) => break,
                    };
                    if (z.norm() - 1.0).abs() < 1e-8 {
                        let angle = Angle::new(z.arg() / TAU);
                        if ccycle.angles().iter().any(|x| x.dist(angle) < 1e-6) {
                            ok = true;
                            break;
                        }
                    }
                }
                assert!(ok, "outer orbit missed the cycle at ({}, {})", params.a, params.b);
                // type of the distinguished point matches the real pipeline
                let t2 = type_from_point(*params, distinguished, ccycle.period, &c).unwrap();
                assert_eq!(t2, *ty, "type mismatch at ({}, {})", params.a, params.b);
            }
            OrbitClass::Undecided => {} // budget case: excluded from the match rate
            other => panic!("tongue parameter classified {other:?}"),
        }
    }
    assert!(decided >= 90, "only {decided}/100 decided");
    println!(
        "ACCEPTANCE 10 PASS: symmetry {worst_sym:.2e} on 10^4 samples; critical points to 1e-10/1e-12; recovery to 1e-10; {decided}/100 decided samples all consistent"
    );
}

#[test]
fn criterion_11_reproducibility() {
    let _guard = HEAVY.lock().unwrap();
    let mut m = RenderManifest::tongues_default(96, 48);
    m.window = Window::new(0.0, 1.0, 0.5, 1.0).unwrap();
    m.cfg = SolverConfig {
        max_transient: 1500,
        complex_budget: 8000,
        ..SolverConfig::default()
    };
    std::env::set_var(THREADS_ENV, "1");
    let (img1, legend1) = render_tongue_plane(&m).unwrap();
    std::env::set_var(THREADS_ENV, "2");
    let (img2, legend2) = render_tongue_plane(&m).unwrap();
    std::env::remove_var(THREADS_ENV);
    assert_eq!(img1, img2, "images differ across thread counts");
    assert_eq!(legend1, legend2, "legends differ across thread counts");
    println!(
        "ACCEPTANCE 11 PASS: byte-identical {} px render and legend with 1 and 2 threads",
        m.width * m.height
    );
}

#[test]
fn criterion_12_figure_reproduction() {
    let _guard = HEAVY.lock().unwrap();
    let c = SolverConfig {
        max_transient: 4000,
        complex_budget: 20_000,
        ..SolverConfig::default()
    };
    // shared window: tongue classes against complex classes
    let window = Window::new(0.0, 1.0, 0.5, 1.0).unwrap();
    let (w, h) = (192, 96);
    let tongues = classify_raster(window, w, h, &c);
    let classes = complex_raster(window, w, h, &c);
    let mut agree = 0usize;
    let mut counted = 0usize;
    for i in 0..w * h {
        let t = &tongues.cells[i];
        let k = &classes[i];
        if matches!(t, Cell::Undecided) || matches!(k, OrbitClass::Undecided) {
            continue;
        }
        counted += 1;
        let tongue_in = matches!(t, Cell::Tongue { .. });
        let circle_in = matches!(k, OrbitClass::CircleAttracting { .. });
        if tongue_in == circle_in {
            agree += 1;
        }
    }
    let rate = agree as f64 / counted as f64;
    assert!(
        rate >= 0.99,
        "tongue/complex agreement {agree}/{counted} = {rate:.4}"
    );

    // the complex plane over b in [0, 2] shows all three caption classes
    let wide = Window::new(0.0, 1.0, 0.0, 2.0).unwrap();
    let classes = complex_raster(wide, 96, 128, &c);
    let blue = classes
        .iter()
        .filter(|k| matches!(k, OrbitClass::CircleAttracting { .. }))
        .count();
    let red = classes.iter().filter(|k| matches!(k, OrbitClass::EscapeZero)).count();
    let green = classes
        .iter()
        .filter(|k| matches!(k, OrbitClass::EscapeInfinity))
        .count();
    assert!(blue > 0, "no circle-attracting cells");
    assert!(red > 0, "no escape-to-zero cells");
    assert!(green > 0, "no escape-to-infinity cells");
    println!(
        "ACCEPTANCE 12 PASS: renderer agreement {:.2}% (>= 99%) on the shared window; complex plane over b in [0,2] has {blue} blue, {red} red, {green} green cells",
        100.0 * rate
    );
}
