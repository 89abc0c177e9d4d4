// Oracle values are frozen at full printed precision.
#![allow(clippy::excessive_precision)]

use cluster_scattering::specfun::*;
use cluster_scattering::Error;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use num_complex::Complex64;
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// (n, Re z, Im z, Re j_n, Im j_n, Re h_n, Im h_n), 40-digit reference values.
const TABLE: &[(usize, f64, f64, f64, f64, f64, f64)] = &[
    (
        0,
        1.5,
        0.0,
        0.66499665773603629,
        0.0,
        0.66499665773603629,
        -0.047158134445135273,
    ),
    (
        5,
        2.0,
        0.0,
        0.0026351697702441173,
        0.0,
        0.0026351697702441173,
        -18.591445311190986,
    ),
    (
        3,
        5.0,
        0.0,
        0.22982061816429601,
        0.0,
        0.22982061816429601,
        -0.015442909912994204,
    ),
    (
        10,
        3.0,
        0.5,
        -5.8775288966991417e-8,
        4.0663954774446643e-6,
        -3959.1799854421061,
        657.695211988103,
    ),
    (
        2,
        0.7,
        1.3,
        -0.069704062217632673,
        0.14234219175371252,
        -0.12161546264129064,
        0.75215549800678172,
    ),
    (
        25,
        8.0,
        0.2,
        5.7516692590254545e-12,
        3.884382671573001e-12,
        -214908091.57329567,
        -303431253.94491041,
    ),
    (
        40,
        12.5,
        0.0,
        4.4934882416164563e-18,
        0.0,
        4.4934882416164563e-18,
        -231087733272976.33,
    ),
    (
        1,
        30.0,
        2.0,
        -0.03117991118741714,
        -0.11647677883367888,
        -0.00054661742538492897,
        0.0044803942978412334,
    ),
    (
        60,
        20.0,
        1.0,
        -2.7101142479827366e-24,
        8.7153058894833903e-25,
        -4.0567898221710553e19,
        1.4812764328496193e20,
    ),
    (
        7,
        0.001,
        0.0,
        4.9333381215734183e-28,
        0.0,
        4.9333381215734183e-28,
        -1.351350051975001e29,
    ),
    (
        15,
        4.0,
        3.0,
        -1.421684530223211e-7,
        1.9748238053963886e-8,
        19952.517538940956,
        40889.045224967398,
    ),
];

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn reference_table() {
    for &(n, zr, zi, jr, ji, hr, hi) in TABLE {
        let z = Complex64::new(zr, zi);
        let j = sph_bessel_j(n, z).unwrap();
        let h = sph_hankel1(n, z).unwrap();
        assert!(rel(j, Complex64::new(jr, ji)) < 1e-12, "j_{n}({z}) = {j}");
        assert!(rel(h, Complex64::new(hr, hi)) < 1e-12, "h_{n}({z}) = {h}");
    }
}

// Exact power series in rational arithmetic: z is a binary float, hence rational.

#[derive(Clone)]
struct Cq {
    re: BigRational,
    im: BigRational,
}

impl Cq {
    fn from_c64(z: Complex64) -> Self {
        Cq {
            re: BigRational::from_float(z.re).unwrap(),
            im: BigRational::from_float(z.im).unwrap(),
        }
    }
    fn mul(&self, o: &Cq) -> Cq {
        Cq {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
    fn scale(&self, s: &BigRational) -> Cq {
        Cq {
            re: &self.re * s,
            im: &self.im * s,
        }
    }
    fn add(&self, o: &Cq) -> Cq {
        Cq {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }
}

/// `j_n(z) = z^n/(2n+1)!! Σ_k (−z²/2)^k / (k! (2n+3)(2n+5)…(2n+2k+1))`.
fn series_oracle(n: usize, z: Complex64, terms: usize) -> Complex64 {
    let zq = Cq::from_c64(z);
    let mut t = Cq {
        re: BigRational::one(),
        im: BigRational::zero(),
    };
    for k in 0..n {
        t = t
            .mul(&zq)
            .scale(&BigRational::new(BigInt::one(), BigInt::from(2 * k + 3)));
    }
    let minus_half_z2 = zq.mul(&zq).scale(&BigRational::new(BigInt::from(-1), BigInt::from(2)));
    let mut sum = t.clone();
    for k in 1..terms {
        let d = BigInt::from(k) * BigInt::from(2 * n + 2 * k + 1);
        t = t.mul(&minus_half_z2).scale(&BigRational::new(BigInt::one(), d));
        sum = sum.add(&t);
    }
    sum.to_c64()
}

#[test]
fn recurrence_matches_exact_series() {
    let zs = [
        Complex64::new(0.37, 0.0),
        Complex64::new(1.3, 0.0),
        Complex64::new(2.75, 0.4),
        Complex64::new(6.1, -0.3),
        Complex64::new(9.5, 1.25),
        Complex64::new(13.0, 0.0),
        Complex64::new(17.25, 2.0),
        Complex64::new(19.5, 0.5),
        Complex64::new(0.5, 3.5),
    ];
    for n in [0usize, 1, 2, 5, 9, 14, 20] {
        for z in zs {
            let exact = series_oracle(n, z, 160);
            let got = sph_bessel_j(n, z).unwrap();
            assert!(rel(got, exact) < 1e-9, "n={n} z={z}: {got} vs {exact}");
        }
    }
}

#[test]
fn wronskian_on_real_axis() {
    let xs: Vec<f64> = (0..40).map(|i| 0.1 * 1000f64.powf(i as f64 / 39.0)).collect();
    for &x in &xs {
        let z = Complex64::new(x, 0.0);
        let j = sph_bessel_j_seq(41, z).unwrap();
        let h = sph_hankel1_seq(41, z).unwrap();
        let jp = bessel_j_derivatives(&j);
        let hp = hankel_derivatives(&h, z);
        for n in 0..=40 {
            let w = j[n] * hp[n] - jp[n] * h[n];
            let expected = I / (x * x);
            assert!(rel(w, expected) < 1e-10, "n={n} x={x}: {w}");
        }
    }
}

#[test]
fn hankel_zero_is_singular_and_large_imaginary_overflows() {
    assert!(matches!(
        sph_hankel1(3, Complex64::new(0.0, 0.0)),
        Err(Error::Singularity(_))
    ));
    assert!(matches!(
        sph_bessel_j(1, Complex64::new(0.5, 2000.0)),
        Err(Error::Overflow(_))
    ));
    assert!(sph_bessel_j(MAX_ORDER + 1, Complex64::new(1.0, 0.0)).is_err());
}

#[test]
fn legendre_p10_exact_rational() {
    // Σ coefficients of P_10 at x = 1/2 evaluated in exact arithmetic: −49343/262144.
    assert_eq!(legendre_p(10, 0.5).unwrap(), -49343.0 / 262144.0);
}

proptest! {
    #[test]
    fn h0_identity(re in 0.01f64..50.0, im in 0.0f64..5.0) {
        let z = Complex64::new(re, im);
        let h = sph_hankel1(0, z).unwrap();
        prop_assert!((h * I * z - (I * z).exp()).norm() <= 1e-13 * (I * z).exp().norm());
    }

    #[test]
    fn j0_derivative_is_minus_j1(re in -30.0f64..30.0, im in -3.0f64..3.0) {
        let z = Complex64::new(re, im);
        let d = sph_bessel_j_prime(0, z).unwrap();
        let j1 = sph_bessel_j(1, z).unwrap();
        prop_assert!((d + j1).norm() <= 1e-12 * (1.0 + j1.norm()));
    }

    #[test]
    fn legendre_bounded_and_symmetric(n in 0usize..60, x in -1.0f64..1.0) {
        let p = legendre_p(n, x).unwrap();
        let q = legendre_p(n, -x).unwrap();
        prop_assert!(p.abs() <= 1.0 + 1e-12);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((p - sign * q).abs() < 1e-12);
    }

    #[test]
    fn hankel_real_part_is_bessel(n in 0usize..30, x in 0.05f64..80.0) {
        let z = Complex64::new(x, 0.0);
        let h = sph_hankel1(n, z).unwrap();
        let j = sph_bessel_j(n, z).unwrap();
        prop_assert!((h.re - j.re).abs() <= 1e-12 * h.norm().max(1e-300));
    }
}
