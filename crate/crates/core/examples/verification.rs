//! Energy-flux verifications for a lossless host with three scatterers.
use cluster_scattering::cluster::{assemble, AssemblyOptions, ClusterModel};
use cluster_scattering::fields::{PointScatterer, PointSource};
use cluster_scattering::host_sphere::HostSphere;
use cluster_scattering::media::Medium;
use cluster_scattering::quadrature::Vec3;
use cluster_scattering::theorems::*;
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let model = ClusterModel::new(
        HostSphere::new(Vec3::zeros(), 1.0, Medium::lossless(1.4, 0.7)?)?,
        Medium::lossless(1.0, 1.0)?,
        PointSource::new(Vec3::new(0.2, 0.1, 0.3), Complex64::new(1.0, 0.0)),
        vec![
            PointScatterer::new(Vec3::new(2.5, 0.3, 0.0), Complex64::new(0.5, 0.2)),
            PointScatterer::new(Vec3::new(-0.4, 2.2, 0.5), Complex64::new(-0.3, 0.4)),
            PointScatterer::new(Vec3::new(0.1, -0.5, -2.6), Complex64::new(0.2, -0.1)),
        ],
        3.0,
    )?;
    let asm = assemble(&model, &AssemblyOptions::default())?;
    let tol = Tolerances::default();
    let mut results = vec![
        verify_flux_limit(&asm, &[100.0, 200.0, 400.0], &tol)?,
        verify_pointlike_overall(&asm, &tol)?,
    ];
    results.extend(verify_host_surface(&asm, &HostQuadrature::default(), &tol)?);
    for r in &results {
        let status = if r.exploratory {
            "exploratory"
        } else if r.passed {
            "pass"
        } else {
            "FAIL"
        };
        println!("{:<32} {:<11} rel residual {:.3e}", r.name, status, r.rel_residual);
    }
    Ok(())
}
