//! Host sphere plus Foldy point scatterers: fixed and self-consistent strengths.
use cluster_scattering::cluster::{assemble, AssemblyOptions, ClusterModel, StrengthMode};
use cluster_scattering::crosssec::CrossSectionReport;
use cluster_scattering::fields::{PointScatterer, PointSource};
use cluster_scattering::host_sphere::HostSphere;
use cluster_scattering::media::Medium;
use cluster_scattering::quadrature::Vec3;
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let omega = 2.0;
    let f = Complex64::new(0.1, 0.05);
    let model = ClusterModel::new(
        HostSphere::new(Vec3::zeros(), 1.0, Medium::lossless(1.4, 0.7)?)?,
        Medium::lossless(1.0, 1.0)?,
        PointSource::new(Vec3::new(0.2, 0.1, 0.3), Complex64::new(1.0, 0.0)),
        vec![
            PointScatterer::new(Vec3::new(2.5, 0.3, 0.0), Complex64::new(0.5, 0.2)).with_monopole(f),
            PointScatterer::new(Vec3::new(-0.4, 2.2, 0.5), Complex64::new(-0.3, 0.4)).with_monopole(f),
        ],
        omega,
    )?;
    for (label, strengths) in [
        ("fixed", StrengthMode::Fixed),
        (
            "self-consistent",
            StrengthMode::SelfConsistent {
                tol: 1e-13,
                max_iter: 500,
            },
        ),
    ] {
        let opts = AssemblyOptions {
            strengths,
            ..AssemblyOptions::default()
        };
        let asm = assemble(&model, &opts)?;
        let report = CrossSectionReport::from_patterns(&asm.patterns)?;
        println!("{label}: strengths {:?}", asm.strengths);
        println!(
            "  σ = {:.12}, σ_j = {:?}, σ_c = {:.12}",
            report.sigma, report.sigma_j, report.sigma_c
        );
    }
    Ok(())
}
