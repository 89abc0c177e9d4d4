//! Low-frequency sweep of the host-surface interaction flux for a lossy host.
use cluster_scattering::cluster::{AssemblyOptions, ClusterModel};
use cluster_scattering::fields::{PointScatterer, PointSource};
use cluster_scattering::host_sphere::HostSphere;
use cluster_scattering::media::Medium;
use cluster_scattering::quadrature::Vec3;
use cluster_scattering::theorems::*;
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let model = ClusterModel::new(
        HostSphere::new(Vec3::zeros(), 1.0, Medium::new(1.4, 0.7, 0.3 / 2.1)?)?,
        Medium::lossless(1.0, 1.0)?,
        PointSource::new(Vec3::new(0.2, 0.1, 0.3), Complex64::new(1.0, 0.0)),
        vec![
            PointScatterer::new(Vec3::new(2.5, 0.3, 0.0), Complex64::new(0.5, 0.2)),
            PointScatterer::new(Vec3::new(-0.4, 2.2, 0.5), Complex64::new(-0.3, 0.4)),
        ],
        3.0,
    )?;
    let omegas: Vec<f64> = (0..5).map(|i| 3.0 * 10f64.powf(-0.5 * i as f64)).collect();
    let t = low_frequency_sweep(
        &model,
        &omegas,
        AmplitudeScaling::ProportionalToOmega,
        &AssemblyOptions::default(),
        &HostQuadrature::default(),
    )?;
    println!("omega,sigma,sigma_c,reactive_flux");
    for r in &t.rows {
        println!("{},{:.12e},{:.12e},{:.12e}", r.omega, r.sigma, r.sigma_c, r.reactive_b);
    }
    println!(
        "monotone {}, low-end slope {:.3}, verdict {}",
        t.reactive_monotone, t.reactive_low_slope, t.verdict
    );
    Ok(())
}
