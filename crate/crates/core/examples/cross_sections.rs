//! Cross-section decomposition and the inequality suite.
use std::sync::Arc;

use cluster_scattering::crosssec::*;
use cluster_scattering::quadrature::{SphericalGrid, Vec3};
use num_complex::Complex64;

fn main() -> cluster_scattering::Result<()> {
    let k0 = 1.0;
    let grid = Arc::new(SphericalGrid::for_truncation(24)?);
    let strengths = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.5, 0.5),
        Complex64::new(-0.3, 0.2),
    ];
    let positions = [Vec3::zeros(), Vec3::new(1.5, 0.0, 0.0), Vec3::new(0.0, 2.0, 1.0)];
    let patterns: Vec<FarFieldPattern> = strengths
        .iter()
        .zip(&positions)
        .map(|(a, b)| FarFieldPattern::point_source(grid.clone(), b, *a, k0))
        .collect::<Result<_, _>>()?;
    let report = CrossSectionReport::from_patterns(&patterns)?;
    println!(
        "σ = {:.12}, Σσ_j = {:.12}, σ_c = {:.12}",
        report.sigma, report.sigma_direct, report.sigma_c
    );
    println!(
        "closed-form σ_c = {:.12}",
        primary_interaction_cs_closed(&strengths, &positions, k0)?
    );
    println!(
        "bounds hold: {}",
        check_bounds(&report, &BoundOptions::default()).all_hold()
    );

    let suite = bound_suite(&SuiteOptions {
        trials: 200,
        ..SuiteOptions::default()
    })?;
    println!("suite of {} clusters: {:?}", suite.summary.trials, suite.summary);
    Ok(())
}
