//! Spherical Bessel and Hankel functions of complex argument.
use cluster_scattering::specfun::{legendre_p, sph_bessel_j_seq, sph_hankel1_seq};
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let z = Complex64::new(5.0, 0.5);
    let j = sph_bessel_j_seq(6, z)?;
    let h = sph_hankel1_seq(6, z)?;
    for n in 0..=6 {
        println!("n={n}  j_n(z)={:.12}  h_n(z)={:.12}", j[n], h[n]);
    }
    println!("P_5(0.3) = {:.15}", legendre_p(5, 0.3)?);
    Ok(())
}
