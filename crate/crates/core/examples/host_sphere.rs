//! Point source inside a penetrable sphere: series solution, boundary check
//! and scattering cross section.
use std::sync::Arc;

use cluster_scattering::crosssec::scs;
use cluster_scattering::fields::PointSource;
use cluster_scattering::host_sphere::{far_field, solve_host, HostSphere, Side, SourceKind, Truncation};
use cluster_scattering::media::Medium;
use cluster_scattering::quadrature::{SphericalGrid, Vec3};
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let omega = 3.0;
    let host_medium = Medium::new(1.6, 2.5, 0.05)?;
    let air = Medium::lossless(1.0, 1.0)?;
    let (hdm, edm) = (host_medium.derive(omega)?, air.derive(omega)?);
    let host = HostSphere::new(Vec3::zeros(), 1.0, host_medium)?;
    let src = PointSource::new(Vec3::new(0.2, -0.1, 0.3), Complex64::new(1.0, 0.0));
    let sol = solve_host(&src, SourceKind::Interior, &host, &hdm, &edm, Truncation::Auto)?;
    println!(
        "truncation L = {}, tail {:.2e}, condition {:.2e}",
        sol.l_trunc, sol.tail, sol.condition
    );

    let p = Vec3::new(0.6, 0.0, 0.8);
    let inside = sol.eval_total(&p, Side::Inside)?.value;
    let outside = sol.eval_total(&p, Side::Outside)?.value;
    println!("pressure at the surface: inside {inside:.12}, outside {outside:.12}");

    let grid = Arc::new(SphericalGrid::for_truncation(sol.l_trunc)?);
    let sigma = scs(&far_field(&sol, grid)?);
    println!(
        "σ = {sigma:.12} (primary 4π|A|²ζ₀/ζ_h = {:.12})",
        4.0 * std::f64::consts::PI * edm.zeta / hdm.zeta
    );
    Ok(())
}
