//! Gauss–Legendre × trapezoid quadrature on the unit sphere.
use cluster_scattering::quadrature::{gauss_legendre, integrate_sphere, SphericalGrid};
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let (x, w) = gauss_legendre(5);
    let p8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
    println!("∫x⁸ on [-1,1]: {p8:.15} (exact {:.15})", 2.0 / 9.0);

    let grid = SphericalGrid::for_truncation(20)?;
    let area = integrate_sphere(|_| Complex64::new(1.0, 0.0), &grid)?;
    let z2 = integrate_sphere(|n| Complex64::new(n.z * n.z, 0.0), &grid)?;
    println!(
        "{} nodes: area {:.15}, ∫z² {:.15} (exact 4π/3 = {:.15})",
        grid.len(),
        area.re,
        z2.re,
        4.0 * std::f64::consts::PI / 3.0
    );
    Ok(())
}
