//! Spherical Bessel and Hankel functions of complex argument, and Legendre
//! polynomials.
//!
//! `j_n` is computed by Miller's backward recurrence normalized to `j_0` (or
//! `j_1` near a zero of `j_0`); orders `n ≤ |z|` are then recomputed by the
//! forward recurrence, which is stable there. `h_n^{(1)}` always uses the
//! forward recurrence. Arguments with `|z| < 1e-6` use a three-term Taylor
//! expansion of `j_n`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest order accepted by the sequence routines.
pub const MAX_ORDER: usize = 160;

const SMALL_ARGUMENT: f64 = 1e-6;
const RESCALE_THRESHOLD: f64 = 1e100;
const OVERFLOW_LIMIT: f64 = 1e300;
const MAX_IMAG: f64 = 700.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::domain(format!("order {n} exceeds maximum {MAX_ORDER}")));
    }
    Ok(())
}

fn check_argument(z: Complex64) -> Result<()> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("non-finite argument {z}")));
    }
    if z.im.abs() > MAX_IMAG {
        return Err(Error::Overflow(format!(
            "|Im z| = {} too large for spherical Bessel evaluation",
            z.im.abs()
        )));
    }
    Ok(())
}

/// `(2n+1)!!` as a float.
fn double_factorial_odd(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, m| acc * (2 * m + 1) as f64)
}

fn j_taylor(n: usize, z: Complex64) -> Complex64 {
    let z2 = z * z;
    let a = (2 * n + 3) as f64;
    let b = (2 * n + 5) as f64;
    let lead = z.powu(n as u32) / double_factorial_odd(n);
    lead * (1.0 - z2 / (2.0 * a) + z2 * z2 / (8.0 * a * b))
}

fn j0_closed(z: Complex64) -> Complex64 {
    z.sin() / z
}

fn j1_closed(z: Complex64) -> Complex64 {
    z.sin() / (z * z) - z.cos() / z
}

/// `j_n(z)` for `n = 0..=nmax`.
pub fn sph_bessel_j_seq(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_order(nmax)?;
    check_argument(z)?;
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    if z.norm() < SMALL_ARGUMENT {
        for (n, v) in out.iter_mut().enumerate() {
            *v = j_taylor(n, z);
        }
        return Ok(out);
    }

    let mut values = miller_backward(nmax, z);
    if nmax == 0 {
        values[0] = j0_closed(z);
    }
    // Forward recurrence in its stable region n ≤ |z|.
    let forward_top = (z.norm().floor() as usize).min(nmax);
    if forward_top >= 1 && nmax >= 1 {
        values[0] = j0_closed(z);
        values[1] = j1_closed(z);
        for n in 1..forward_top {
            values[n + 1] = values[n] * ((2 * n + 1) as f64) / z - values[n - 1];
        }
    }
    for (dst, src) in out.iter_mut().zip(values.iter()) {
        *dst = *src;
    }
    if out.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Overflow(format!("j_n({z}) overflowed")));
    }
    Ok(out)
}

/// Miller backward recurrence, normalized by the closed form of `j_0` or `j_1`.
fn miller_backward(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let az = z.norm();
    let top = nmax.max(az.ceil() as usize);
    let start = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
    let mut f = vec![Complex64::new(0.0, 0.0); start + 2];
    f[start + 1] = Complex64::new(0.0, 0.0);
    f[start] = Complex64::new(1.0, 0.0);
    for n in (1..=start).rev() {
        f[n - 1] = f[n] * ((2 * n + 1) as f64) / z - f[n + 1];
        if f[n - 1].norm() > RESCALE_THRESHOLD {
            for v in f[n - 1..].iter_mut() {
                *v /= RESCALE_THRESHOLD;
            }
        }
    }
    let j0 = j0_closed(z);
    let scale = if az > 0.5 {
        let j1 = j1_closed(z);
        if j1.norm() > j0.norm() {
            j1 / f[1]
        } else {
            j0 / f[0]
        }
    } else {
        j0 / f[0]
    };
    f.truncate(nmax + 1);
    for v in f.iter_mut() {
        *v *= scale;
    }
    f
}

/// Spherical Bessel function of the first kind, `j_n(z)`.
pub fn sph_bessel_j(n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_bessel_j_seq(n, z)?[n])
}

/// `h_n^{(1)}(z)` for `n = 0..=nmax` by forward recurrence.
pub fn sph_hankel1_seq(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_order(nmax)?;
    if z.norm() == 0.0 {
        return Err(Error::Singularity("spherical Hankel function at z = 0".into()));
    }
    check_argument(z)?;
    let e = (I * z).exp();
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(-I * e / z);
    if nmax >= 1 {
        h.push(-e * (z + I) / (z * z));
    }
    for n in 1..nmax {
        let next = h[n] * ((2 * n + 1) as f64) / z - h[n - 1];
        if !(next.norm() < OVERFLOW_LIMIT) {
            return Err(Error::Overflow(format!("h_{}({z}) exceeds {OVERFLOW_LIMIT:e}", n + 1)));
        }
        h.push(next);
    }
    Ok(h)
}

/// Spherical Hankel function of the first kind, `h_n^{(1)}(z)`.
pub fn sph_hankel1(n: usize, z: Complex64) -> Result<Complex64> {
    Ok(sph_hankel1_seq(n, z)?[n])
}

/// Derivatives of `j_n` from a sequence holding orders `0..=nmax+1`.
///
/// Uses `j'_n = (n j_{n-1} - (n+1) j_{n+1}) / (2n+1)`, which is regular at `z = 0`.
pub fn bessel_j_derivatives(seq: &[Complex64]) -> Vec<Complex64> {
    let nmax = seq.len().saturating_sub(2);
    (0..=nmax)
        .map(|n| {
            if n == 0 {
                -seq[1]
            } else {
                (seq[n - 1] * n as f64 - seq[n + 1] * (n + 1) as f64) / ((2 * n + 1) as f64)
            }
        })
        .collect()
}

/// Derivatives of `h_n^{(1)}` from a sequence holding orders `0..=nmax+1`.
pub fn hankel_derivatives(seq: &[Complex64], z: Complex64) -> Vec<Complex64> {
    let nmax = seq.len().saturating_sub(2);
    (0..=nmax)
        .map(|n| {
            if n == 0 {
                -seq[1]
            } else {
                seq[n - 1] - seq[n] * ((n + 1) as f64) / z
            }
        })
        .collect()
}

pub fn sph_bessel_j_prime(n: usize, z: Complex64) -> Result<Complex64> {
    let seq = sph_bessel_j_seq(n + 1, z)?;
    Ok(bessel_j_derivatives(&seq)[n])
}

pub fn sph_hankel1_prime(n: usize, z: Complex64) -> Result<Complex64> {
    let seq = sph_hankel1_seq(n + 1, z)?;
    Ok(hankel_derivatives(&seq, z)[n])
}

/// Legendre polynomial `P_n(x)` for `|x| ≤ 1`.
pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    Ok(legendre_seq(n, x)?.0[n])
}

/// `P_n(x)` and `P'_n(x)` for `n = 0..=nmax`.
///
/// Derivatives follow `P'_{n+1} = P'_{n-1} + (2n+1) P_n`, valid at `x = ±1`.
pub fn legendre_seq(nmax: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(x.abs() <= 1.0) {
        return Err(Error::domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    let mut p = Vec::with_capacity(nmax + 1);
    let mut dp = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    dp.push(0.0);
    if nmax >= 1 {
        p.push(x);
        dp.push(1.0);
    }
    for n in 1..nmax {
        let nf = n as f64;
        p.push(((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0));
        dp.push(dp[n - 1] + (2.0 * nf + 1.0) * p[n]);
    }
    Ok((p, dp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn j0_special_values() {
        assert_eq!(sph_bessel_j(0, c(0.0)).unwrap(), c(1.0));
        assert!(sph_bessel_j(0, c(PI)).unwrap().norm() < 1e-16);
    }

    #[test]
    fn j5_of_two() {
        // Extended-precision series value (mpmath, 30 digits).
        let v = sph_bessel_j(5, c(2.0)).unwrap();
        assert!((v.re - 0.002_635_169_770_244_118_6).abs() < 1e-17);
        assert!(v.im.abs() < 1e-18);
    }

    #[test]
    fn h0_closed_form() {
        let v = sph_hankel1(0, c(1.0)).unwrap();
        let expected = Complex64::new(1f64.sin(), -1f64.cos());
        assert!((v - expected).norm() < 1e-15);
        let z = Complex64::new(2.3, 0.4);
        let h = sph_hankel1(0, z).unwrap();
        assert!((h * I * z - (I * z).exp()).norm() < 1e-14);
    }

    #[test]
    fn h3_of_five() {
        // j_3(5) + i y_3(5); y_3 from the independent upward recurrence (mpmath check).
        let v = sph_hankel1(3, c(5.0)).unwrap();
        assert!((v.re - 0.229_820_618_164_296_03).abs() < 1e-14);
        assert!((v.im + 0.015_442_909_912_994_204).abs() < 1e-14);
    }

    #[test]
    fn hankel_at_zero_is_singular() {
        assert!(matches!(sph_hankel1(0, c(0.0)), Err(Error::Singularity(_))));
    }

    #[test]
    fn huge_imaginary_part_is_overflow() {
        assert!(matches!(
            sph_bessel_j(2, Complex64::new(1.0, 1000.0)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_p(0, 0.77).unwrap(), 1.0);
        assert_eq!(legendre_p(1, 0.3).unwrap(), 0.3);
        // Exact rational coefficients: P_10(1/2) = -0.18822860717773438 (= -49343/262144).
        assert!((legendre_p(10, 0.5).unwrap() + 49343.0 / 262144.0).abs() < 1e-15);
        assert!(legendre_p(2, 1.5).is_err());
    }

    #[test]
    fn legendre_derivative_at_poles() {
        let (_, dp) = legendre_seq(6, 1.0).unwrap();
        for (n, d) in dp.iter().enumerate() {
            assert!((d - (n * (n + 1)) as f64 / 2.0).abs() < 1e-12);
        }
        let (_, dm) = legendre_seq(6, -1.0).unwrap();
        for (n, d) in dm.iter().enumerate() {
            let sign = if (n + 1) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((d - sign * (n * (n + 1)) as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_identities() {
        let z = Complex64::new(1.7, 0.3);
        let d0 = sph_bessel_j_prime(0, z).unwrap();
        assert!((d0 + sph_bessel_j(1, z).unwrap()).norm() < 1e-15);
        assert!((sph_bessel_j_prime(1, c(0.0)).unwrap() - c(1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn small_argument_taylor_is_continuous() {
        let below = 0.99e-6;
        let above = 1.01e-6;
        for n in 0..6 {
            let a = sph_bessel_j(n, c(below)).unwrap();
            let b = sph_bessel_j(n, c(above)).unwrap();
            let scaled = b * (below / above).powi(n as i32);
            assert!((a - scaled).norm() / a.norm() < 1e-9, "n={n}");
        }
    }
}
