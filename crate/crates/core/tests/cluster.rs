use std::f64::consts::PI;

use cluster_scattering::cluster::*;
use cluster_scattering::crosssec::{scs, sum_patterns};
use cluster_scattering::fields::{PointScatterer, PointSource};
use cluster_scattering::host_sphere::{solve_host, HostSphere, Side, SourceKind, Truncation};
use cluster_scattering::media::Medium;
use cluster_scattering::quadrature::Vec3;
use cluster_scattering::Error;
use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn exterior() -> Medium {
    Medium::lossless(1.0, 1.0).unwrap()
}

fn model(host_medium: Medium, scatterers: Vec<PointScatterer>) -> ClusterModel {
    ClusterModel::new(
        HostSphere::new(Vec3::new(0.1, 0.0, -0.05), 1.0, host_medium).unwrap(),
        exterior(),
        PointSource::new(Vec3::new(0.2, -0.3, 0.25), c(1.0, 0.4)),
        scatterers,
        2.0,
    )
    .unwrap()
}

fn three_scatterers() -> Vec<PointScatterer> {
    vec![
        PointScatterer::new(Vec3::new(1.8, 0.2, 0.0), c(0.3, -0.2)),
        PointScatterer::new(Vec3::new(-0.5, 1.6, 0.7), c(-0.1, 0.45)),
        PointScatterer::new(Vec3::new(0.3, -0.9, -1.9), c(0.25, 0.05)),
    ]
}

fn lossy() -> Medium {
    Medium::new(1.5, 2.2, 0.04).unwrap()
}

fn green(k0: f64, a: &Vec3, b: &Vec3) -> Complex64 {
    let r = (a - b).norm();
    (I * k0 * r).exp() / r
}

#[test]
fn bare_source_cross_section() {
    let m = model(exterior(), vec![]);
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    assert_eq!(asm.n_members(), 1);
    let a2 = m.source.amplitude.norm_sqr();
    assert!((scs(asm.host_pattern()) - 4.0 * PI * a2).abs() < 1e-12 * 4.0 * PI * a2);
}

#[test]
fn point_scatterer_cross_sections_are_monopole() {
    let m = model(lossy(), three_scatterers());
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    assert_eq!(asm.n_members(), 4);
    for (s, p) in m.scatterers.iter().zip(&asm.patterns) {
        let expected = 4.0 * PI * s.strength.norm_sqr();
        assert!((scs(p) - expected).abs() < 1e-12 * expected);
    }
}

#[test]
fn attribution_is_complete_at_random_probes() {
    let m = model(lossy(), three_scatterers());
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    let hdm = m.host_medium().unwrap();
    let edm = m.exterior_medium().unwrap();
    // Independent superposition: every source solved afresh at its own amplitude.
    let mut solutions =
        vec![solve_host(&m.source, SourceKind::Interior, &m.host, &hdm, &edm, Truncation::Auto).unwrap()];
    for s in &m.scatterers {
        solutions.push(
            solve_host(
                &s.as_source(),
                SourceKind::Exterior,
                &m.host,
                &hdm,
                &edm,
                Truncation::Auto,
            )
            .unwrap(),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..32 {
        let dir = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let r = m.host.center() + dir.normalize() * rng.random_range(1.1..4.0);
        if m.scatterers.iter().any(|s| (s.position() - r).norm() < 0.05) {
            continue;
        }
        let direct: Complex64 = solutions
            .iter()
            .map(|s| s.eval_total(&r, Side::Outside).unwrap().value)
            .sum();
        let attributed: Complex64 = asm.exterior_fields(&r).unwrap().iter().map(|f| f.value).sum();
        assert!(rel(attributed, direct) < 1e-9);
        assert!(rel(asm.total_exterior(&r).unwrap().value, direct) < 1e-9);
    }
}

#[test]
fn host_fields_complete_inside() {
    let m = model(lossy(), three_scatterers());
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    // Total host field and total exterior field meet continuously on the surface.
    for n in [
        Vec3::new(0.0, 0.6, 0.8),
        Vec3::new(-1.0, 0.0, 0.0),
        Vec3::new(0.48, -0.6, -0.64),
    ] {
        let r = m.host.center() + n;
        let inside = asm.total_host(&r).unwrap().value;
        let outside = asm.total_exterior(&r).unwrap().value;
        assert!(rel(inside, outside) < 1e-9);
    }
}

#[test]
fn pattern_sum_matches_directly_summed_field() {
    let m = model(lossy(), three_scatterers());
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    let total = asm.total_pattern().unwrap();
    let hdm = m.host_medium().unwrap();
    let edm = m.exterior_medium().unwrap();
    let k0 = edm.k.re;
    let mut solutions =
        vec![solve_host(&m.source, SourceKind::Interior, &m.host, &hdm, &edm, Truncation::Auto).unwrap()];
    for s in &m.scatterers {
        solutions.push(
            solve_host(
                &s.as_source(),
                SourceKind::Exterior,
                &m.host,
                &hdm,
                &edm,
                Truncation::Auto,
            )
            .unwrap(),
        );
    }
    let scale = total.samples.iter().map(|g| g.norm()).fold(0.0, f64::max);
    for (n, g) in asm.grid.nodes.iter().zip(&total.samples) {
        let mut direct: Complex64 = solutions.iter().map(|s| s.pattern_at(n).unwrap()).sum();
        for s in &m.scatterers {
            direct += I * k0 * s.strength * (-I * k0 * n.dot(&s.position())).exp();
        }
        assert!((g - direct).norm() < 1e-10 * scale);
    }
}

#[test]
fn alternative_attribution_preserves_total() {
    let m = model(lossy(), three_scatterers());
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    let alt = asm.patterns_under(Attribution::ScattererOwnsRescattering).unwrap();
    let s_default = scs(&asm.total_pattern().unwrap());
    let s_alt = scs(&sum_patterns(&alt).unwrap());
    assert!((s_default - s_alt).abs() < 1e-12 * s_default);
    // Regrouping agrees with a fresh assembly under the alternative attribution.
    let opts = AssemblyOptions {
        attribution: Attribution::ScattererOwnsRescattering,
        ..AssemblyOptions::default()
    };
    let fresh = assemble(&m, &opts).unwrap();
    for (a, b) in alt.iter().zip(&fresh.patterns) {
        assert!((scs(a) - scs(b)).abs() < 1e-12 * scs(b).max(1e-30));
    }
    let r = Vec3::new(2.5, -1.0, 0.5);
    let sum: Complex64 = fresh.exterior_fields(&r).unwrap().iter().map(|f| f.value).sum();
    assert!(rel(sum, fresh.total_exterior(&r).unwrap().value) < 1e-12);
}

#[test]
fn fields_and_cross_sections_are_linear() {
    let base = model(lossy(), three_scatterers());
    let k = c(-0.7, 1.3);
    let mut scaled = base.clone();
    scaled.source.amplitude *= k;
    for s in &mut scaled.scatterers {
        s.strength *= k;
    }
    let a = assemble(&base, &AssemblyOptions::default()).unwrap();
    let b = assemble(&scaled, &AssemblyOptions::default()).unwrap();
    let r = Vec3::new(-2.0, 0.7, 1.4);
    for (fa, fb) in a
        .exterior_fields(&r)
        .unwrap()
        .iter()
        .zip(b.exterior_fields(&r).unwrap())
    {
        assert!(rel(fb.value, fa.value * k) < 1e-12);
    }
    let inside = Vec3::new(0.3, 0.2, -0.4);
    for (fa, fb) in a
        .host_fields(&inside)
        .unwrap()
        .iter()
        .zip(b.host_fields(&inside).unwrap())
    {
        assert!(rel(fb.value, fa.value * k) < 1e-12);
    }
    for (pa, pb) in a.patterns.iter().zip(&b.patterns) {
        assert!((scs(pb) - k.norm_sqr() * scs(pa)).abs() < 1e-12 * scs(pb));
    }
}

#[test]
fn fixed_mode_is_identity() {
    let m = model(lossy(), three_scatterers());
    let got = foldy_strengths(&m, StrengthMode::Fixed, Truncation::Auto).unwrap();
    let given: Vec<Complex64> = m.scatterers.iter().map(|s| s.strength).collect();
    assert_eq!(got, given);
}

fn self_consistent() -> StrengthMode {
    StrengthMode::SelfConsistent {
        tol: 1e-13,
        max_iter: 500,
    }
}

#[test]
fn self_consistent_requires_coefficients() {
    let m = model(lossy(), three_scatterers());
    assert!(foldy_strengths(&m, self_consistent(), Truncation::Auto).is_err());
}

#[test]
fn zero_coefficients_give_zero_strengths() {
    let scatterers = three_scatterers()
        .into_iter()
        .map(|s| s.with_monopole(c(0.0, 0.0)))
        .collect();
    let m = model(lossy(), scatterers);
    let a = foldy_strengths(&m, self_consistent(), Truncation::Auto).unwrap();
    assert!(a.iter().all(|x| x.norm() == 0.0));
    let mut fixed = m.clone();
    for s in &mut fixed.scatterers {
        s.strength = c(0.0, 0.0);
    }
    let opts = AssemblyOptions {
        strengths: self_consistent(),
        ..AssemblyOptions::default()
    };
    let sc = assemble(&m, &opts).unwrap();
    let fx = assemble(&fixed, &AssemblyOptions::default()).unwrap();
    assert!((scs(&sc.total_pattern().unwrap()) - scs(&fx.total_pattern().unwrap())).abs() < 1e-14);
}

#[test]
fn born_limit_is_linear_in_coefficient() {
    let b = Vec3::new(1.7, 0.4, -0.3);
    let strength = |f: Complex64| {
        let m = model(lossy(), vec![PointScatterer::new(b, c(0.0, 0.0)).with_monopole(f)]);
        foldy_strengths(&m, self_consistent(), Truncation::Auto).unwrap()[0]
    };
    let m = model(lossy(), vec![PointScatterer::new(b, c(0.0, 0.0))]);
    let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
    let u_host = asm.interior.eval_side(&b, Side::Outside).unwrap().value;
    let f = c(1e-6, 2e-7);
    let a1 = strength(f);
    let a2 = strength(f * 2.0);
    assert!(rel(a1 / f, u_host) < 1e-5);
    assert!((a2 - a1 * 2.0).norm() < 1e-5 * a1.norm());
}

#[test]
fn matched_host_pair_matches_dense_solve() {
    let b1 = Vec3::new(1.6, 0.0, 0.3);
    let b2 = Vec3::new(-0.4, 1.2, 1.0);
    let f1 = c(0.12, 0.08);
    let f2 = c(-0.05, 0.2);
    let m = model(
        exterior(),
        vec![
            PointScatterer::new(b1, c(0.0, 0.0)).with_monopole(f1),
            PointScatterer::new(b2, c(0.0, 0.0)).with_monopole(f2),
        ],
    );
    let a = foldy_strengths(&m, self_consistent(), Truncation::Auto).unwrap();
    let k0 = m.exterior_medium().unwrap().k.re;
    let src = m.source.position();
    let amp = m.source.amplitude;
    let u1 = amp * green(k0, &b1, &src);
    let u2 = amp * green(k0, &b2, &src);
    let g = green(k0, &b1, &b2);
    let mat = Matrix2::new(c(1.0, 0.0), -f1 * g, -f2 * g, c(1.0, 0.0));
    let rhs = Vector2::new(f1 * u1, f2 * u2);
    let oracle = mat.lu().solve(&rhs).unwrap();
    assert!(rel(a[0], oracle[0]) < 1e-10, "{} vs {}", a[0], oracle[0]);
    assert!(rel(a[1], oracle[1]) < 1e-10, "{} vs {}", a[1], oracle[1]);
}

#[test]
fn self_consistent_strengths_satisfy_their_equation() {
    let f = [c(0.2, 0.1), c(-0.1, 0.3), c(0.15, -0.05)];
    let scatterers = three_scatterers()
        .into_iter()
        .zip(f)
        .map(|(s, f)| s.with_monopole(f))
        .collect();
    let m = model(lossy(), scatterers);
    let opts = AssemblyOptions {
        strengths: self_consistent(),
        ..AssemblyOptions::default()
    };
    let asm = assemble(&m, &opts).unwrap();
    for (n, fnn) in f.iter().enumerate() {
        let exc = asm.exciting_field(n).unwrap();
        assert!(rel(asm.strengths[n], fnn * exc) < 1e-10);
    }
}

#[test]
fn invalid_models_are_rejected() {
    let host = HostSphere::new(Vec3::zeros(), 1.0, lossy()).unwrap();
    let src = PointSource::new(Vec3::new(0.1, 0.0, 0.0), c(1.0, 0.0));
    let bad_src = PointSource::new(Vec3::new(1.5, 0.0, 0.0), c(1.0, 0.0));
    let inside = PointScatterer::new(Vec3::new(0.5, 0.0, 0.0), c(1.0, 0.0));
    let out = PointScatterer::new(Vec3::new(2.0, 0.0, 0.0), c(1.0, 0.0));
    assert!(ClusterModel::new(host, exterior(), bad_src, vec![], 1.0).is_err());
    assert!(ClusterModel::new(host, exterior(), src, vec![inside], 1.0).is_err());
    assert!(ClusterModel::new(host, exterior(), src, vec![out, out], 1.0).is_err());
    assert!(ClusterModel::new(host, Medium::new(1.0, 1.0, 0.1).unwrap(), src, vec![], 1.0).is_err());
    assert!(ClusterModel::new(host, exterior(), src, vec![out], -1.0).is_err());
}

#[test]
fn strong_coupling_solves_or_reports_divergence() {
    // Strong coupling between two close scatterers with large coefficients.
    let m = model(
        exterior(),
        vec![
            PointScatterer::new(Vec3::new(1.5, 0.0, 0.0), c(0.0, 0.0)).with_monopole(c(5.0, 0.0)),
            PointScatterer::new(Vec3::new(1.6, 0.0, 0.0), c(0.0, 0.0)).with_monopole(c(5.0, 0.0)),
        ],
    );
    let mode = StrengthMode::SelfConsistent {
        tol: 1e-13,
        max_iter: 3,
    };
    match foldy_strengths(&m, mode, Truncation::Auto) {
        Err(Error::Divergence { residuals, .. }) => assert!(!residuals.is_empty()),
        Ok(a) => {
            // A direct solve may still succeed; then the equation must hold.
            let asm = assemble(
                &m,
                &AssemblyOptions {
                    strengths: mode,
                    ..AssemblyOptions::default()
                },
            )
            .unwrap();
            for (n, an) in a.iter().enumerate() {
                assert!(rel(*an, c(5.0, 0.0) * asm.exciting_field(n).unwrap()) < 1e-9);
            }
        }
        Err(e) => panic!("unexpected error {e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn completeness_for_random_clusters(
        seed in 0u64..1000,
        n in 1usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scatterers: Vec<PointScatterer> = (0..n)
            .map(|i| {
                let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.3 + i as f64);
                PointScatterer::new(dir.normalize() * rng.random_range(1.3..2.5), c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            })
            .collect();
        let m = ClusterModel::new(
            HostSphere::new(Vec3::zeros(), 1.0, lossy()).unwrap(),
            exterior(),
            PointSource::new(Vec3::new(0.1, 0.2, -0.3), c(1.0, 0.0)),
            scatterers,
            1.5,
        ).unwrap();
        let asm = assemble(&m, &AssemblyOptions::default()).unwrap();
        let r = Vec3::new(3.0, -2.5, 1.5);
        let sum: Complex64 = asm.exterior_fields(&r).unwrap().iter().map(|f| f.value).sum();
        prop_assert!(rel(sum, asm.total_exterior(&r).unwrap().value) < 1e-12);
    }
}
