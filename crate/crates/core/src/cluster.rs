//! A point source inside a penetrable host sphere, surrounded by point-like
//! scatterers, and the attribution of the resulting field to cluster members.
//!
//! Every source (the interior source and each scatterer's spherical wave) is
//! solved against the host separately and the results are superposed. By
//! default the host owns its whole exterior scattered field — the response to
//! the interior source and to every scatterer wave — while each point
//! scatterer owns only its own spherical wave.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crosssec::{sum_patterns, FarFieldPattern};
use crate::error::{Error, Result};
use crate::fields::{point_wave, sum_samples, FieldSample, PointScatterer, PointSource, Region};
use crate::host_sphere::{far_field, solve_host, HostSphere, SeriesSolution, Side, SourceKind, Truncation};
use crate::media::{DerivedMedium, Medium};
use crate::quadrature::{SphericalGrid, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub host: HostSphere,
    pub exterior: Medium,
    pub source: PointSource,
    pub scatterers: Vec<PointScatterer>,
    pub omega: f64,
}

impl ClusterModel {
    pub fn new(
        host: HostSphere,
        exterior: Medium,
        source: PointSource,
        scatterers: Vec<PointScatterer>,
        omega: f64,
    ) -> Result<Self> {
        let m = ClusterModel {
            host,
            exterior,
            source,
            scatterers,
            omega,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.host.medium.validate()?;
        self.exterior.validate()?;
        if !self.exterior.is_lossless() {
            return Err(Error::domain("exterior medium must be lossless"));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::domain(format!(
                "angular frequency must be positive, got {}",
                self.omega
            )));
        }
        if !(self.host.radius > 0.0) {
            return Err(Error::domain("host radius must be positive"));
        }
        if !self.source.amplitude.re.is_finite() || !self.source.amplitude.im.is_finite() {
            return Err(Error::domain("source amplitude must be finite"));
        }
        if !self.host.contains(&self.source.position()) {
            return Err(Error::domain("source must lie strictly inside the host"));
        }
        for (i, s) in self.scatterers.iter().enumerate() {
            let b = s.position();
            if (b - self.host.center()).norm() <= self.host.radius {
                return Err(Error::domain(format!("scatterer {i} is not strictly outside the host")));
            }
            if !s.strength.re.is_finite() || !s.strength.im.is_finite() {
                return Err(Error::domain(format!("scatterer {i} has a non-finite strength")));
            }
            for (j, t) in self.scatterers[..i].iter().enumerate() {
                if (t.position() - b).norm() == 0.0 {
                    return Err(Error::domain(format!("scatterers {j} and {i} coincide")));
                }
            }
        }
        Ok(())
    }

    pub fn host_medium(&self) -> Result<DerivedMedium> {
        self.host.medium.derive(self.omega)
    }

    pub fn exterior_medium(&self) -> Result<DerivedMedium> {
        self.exterior.derive(self.omega)
    }

    /// Number of cluster members, the host included.
    pub fn n_members(&self) -> usize {
        self.scatterers.len() + 1
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        ClusterModel { omega, ..self.clone() }
    }

    /// Smallest sphere about the host centre enclosing every scatterer and the host.
    pub fn enclosing_radius(&self) -> f64 {
        let c = self.host.center();
        self.scatterers
            .iter()
            .map(|s| (s.position() - c).norm())
            .fold(self.host.radius, f64::max)
    }
}

/// Who owns the host's re-scattering of a scatterer wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// The host owns its entire exterior scattered field.
    #[default]
    HostOwnsScattering,
    /// The host's response to wave `j` is credited to scatterer `j`.
    ScattererOwnsRescattering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StrengthMode {
    /// Use the strengths as given.
    Fixed,
    /// Solve `A_n = f_n u_exc(b_n)`.
    SelfConsistent { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    pub truncation: Truncation,
    /// Far-field grid; chosen from the truncation order when absent.
    pub grid: Option<Arc<SphericalGrid>>,
    pub strengths: StrengthMode,
    pub attribution: Attribution,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            truncation: Truncation::Auto,
            grid: None,
            strengths: StrengthMode::Fixed,
            attribution: Attribution::default(),
        }
    }
}

/// Host solutions for every source of the model, plus the attributed
/// far-field patterns (point scatterers first, host last).
#[derive(Debug, Clone)]
pub struct Assembly {
    pub model: ClusterModel,
    pub host_dm: DerivedMedium,
    pub exterior_dm: DerivedMedium,
    pub interior: SeriesSolution,
    /// Host response to each scatterer wave, at the strengths in use.
    pub exterior: Vec<SeriesSolution>,
    pub strengths: Vec<Complex64>,
    pub attribution: Attribution,
    pub grid: Arc<SphericalGrid>,
    pub patterns: Vec<FarFieldPattern>,
}

fn solve_unit_waves(
    model: &ClusterModel,
    host_dm: &DerivedMedium,
    exterior_dm: &DerivedMedium,
    truncation: Truncation,
) -> Result<Vec<SeriesSolution>> {
    model
        .scatterers
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let unit = PointSource::new(s.position(), Complex64::new(1.0, 0.0));
            solve_host(
                &unit,
                SourceKind::Exterior,
                &model.host,
                host_dm,
                exterior_dm,
                truncation,
            )
            .map_err(|e| e.for_scatterer(i))
        })
        .collect()
}

fn check_converged(sol: &SeriesSolution) -> Result<()> {
    if sol.converged {
        Ok(())
    } else {
        Err(Error::NotConverged {
            order: sol.l_trunc,
            tail: sol.tail,
        })
    }
}

pub fn assemble(model: &ClusterModel, opts: &AssemblyOptions) -> Result<Assembly> {
    model.validate()?;
    let host_dm = model.host_medium()?;
    let exterior_dm = model.exterior_medium()?;
    let interior = solve_host(
        &model.source,
        SourceKind::Interior,
        &model.host,
        &host_dm,
        &exterior_dm,
        opts.truncation,
    )?;
    check_converged(&interior)?;
    let units = solve_unit_waves(model, &host_dm, &exterior_dm, opts.truncation)?;
    for (i, u) in units.iter().enumerate() {
        check_converged(u).map_err(|e| e.for_scatterer(i))?;
    }
    let strengths = match opts.strengths {
        StrengthMode::Fixed => model.scatterers.iter().map(|s| s.strength).collect(),
        StrengthMode::SelfConsistent { tol, max_iter } => {
            self_consistent(model, &exterior_dm, &interior, &units, tol, max_iter)?
        }
    };
    let exterior: Vec<SeriesSolution> = units.iter().zip(&strengths).map(|(u, a)| u.scaled(*a)).collect();
    let l_max = exterior.iter().map(|s| s.l_trunc).fold(interior.l_trunc, usize::max);
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => Arc::new(SphericalGrid::for_truncation(l_max)?),
    };
    let k0 = exterior_dm.real_k()?;

    let mut host_pattern = far_field(&interior, grid.clone())?;
    let mut patterns = Vec::with_capacity(model.n_members());
    for (i, (s, sol)) in model.scatterers.iter().zip(&exterior).enumerate() {
        let mut wave = FarFieldPattern::point_source(grid.clone(), &s.position(), strengths[i], k0)?;
        let rescattered = far_field(sol, grid.clone()).map_err(|e| e.for_scatterer(i))?;
        match opts.attribution {
            Attribution::HostOwnsScattering => host_pattern.add_assign(&rescattered)?,
            Attribution::ScattererOwnsRescattering => wave.add_assign(&rescattered)?,
        }
        patterns.push(wave);
    }
    patterns.push(host_pattern);

    Ok(Assembly {
        model: model.clone(),
        host_dm,
        exterior_dm,
        interior,
        exterior,
        strengths,
        attribution: opts.attribution,
        grid,
        patterns,
    })
}

/// Self-consistent strengths `A = F(u_β(b) + K A)` with `F = diag(f_n)` and
/// `K_nm` the field at `b_n` of a unit wave from `b_m` (host re-scattering
/// included, direct self term excluded).
fn self_consistent(
    model: &ClusterModel,
    exterior_dm: &DerivedMedium,
    interior: &SeriesSolution,
    units: &[SeriesSolution],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<Complex64>> {
    let m = model.scatterers.len();
    let f: Vec<Complex64> = model
        .scatterers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.monopole_coefficient
                .ok_or_else(|| Error::domain(format!("scatterer {i} has no monopole coefficient")))
        })
        .collect::<Result<_>>()?;
    if m == 0 {
        return Ok(Vec::new());
    }
    let positions: Vec<Vec3> = model.scatterers.iter().map(|s| s.position()).collect();
    let mut drive = DVector::<Complex64>::zeros(m);
    let mut k = DMatrix::<Complex64>::zeros(m, m);
    for (n, b) in positions.iter().enumerate() {
        drive[n] = interior.eval_side(b, Side::Outside)?.value;
        for (j, unit) in units.iter().enumerate() {
            let mut v = unit.eval_side(b, Side::Outside)?.value;
            if j != n {
                v += point_wave(
                    &positions[j],
                    Complex64::new(1.0, 0.0),
                    exterior_dm.k,
                    b,
                    Region::Exterior,
                )?
                .value;
            }
            k[(n, j)] = v;
        }
    }
    let fmat = DMatrix::from_diagonal(&DVector::from_vec(f));
    let map = |a: &DVector<Complex64>| &fmat * (&drive + &k * a);

    let mut a = DVector::<Complex64>::zeros(m);
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let next = map(&a) * Complex64::new(0.5, 0.0) + &a * Complex64::new(0.5, 0.0);
        let scale = next.norm().max(f64::MIN_POSITIVE);
        let change = (&next - &a).norm() / scale;
        a = next;
        history.push(change);
        if change < tol || a.norm() == 0.0 {
            return Ok(a.iter().copied().collect());
        }
        if !change.is_finite() || change > 1e6 {
            break;
        }
    }
    // Escalate: direct solve of (I − F K) A = F u_β.
    let system = DMatrix::<Complex64>::identity(m, m) - &fmat * &k;
    let rhs = &fmat * &drive;
    let solved = system.lu().solve(&rhs);
    match solved {
        Some(a) => {
            let residual = (&a - map(&a)).norm() / a.norm().max(f64::MIN_POSITIVE);
            history.push(residual);
            if residual < tol.max(1e-12) {
                Ok(a.iter().copied().collect())
            } else {
                Err(Error::Divergence {
                    iterations: history.len(),
                    residuals: history,
                })
            }
        }
        None => Err(Error::Divergence {
            iterations: history.len(),
            residuals: history,
        }),
    }
}

/// Strengths for `model` under `mode`.
pub fn foldy_strengths(model: &ClusterModel, mode: StrengthMode, truncation: Truncation) -> Result<Vec<Complex64>> {
    match mode {
        StrengthMode::Fixed => Ok(model.scatterers.iter().map(|s| s.strength).collect()),
        StrengthMode::SelfConsistent { tol, max_iter } => {
            model.validate()?;
            let host_dm = model.host_medium()?;
            let exterior_dm = model.exterior_medium()?;
            let interior = solve_host(
                &model.source,
                SourceKind::Interior,
                &model.host,
                &host_dm,
                &exterior_dm,
                truncation,
            )?;
            check_converged(&interior)?;
            let units = solve_unit_waves(model, &host_dm, &exterior_dm, truncation)?;
            self_consistent(model, &exterior_dm, &interior, &units, tol, max_iter)
        }
    }
}

impl Assembly {
    /// Patterns regrouped under `attribution` without re-solving.
    pub fn patterns_under(&self, attribution: Attribution) -> Result<Vec<FarFieldPattern>> {
        if attribution == self.attribution {
            return Ok(self.patterns.clone());
        }
        let k0 = self.exterior_dm.real_k()?;
        let mut host_pattern = far_field(&self.interior, self.grid.clone())?;
        let mut patterns = Vec::with_capacity(self.n_members());
        for (i, (s, sol)) in self.model.scatterers.iter().zip(&self.exterior).enumerate() {
            let mut wave = FarFieldPattern::point_source(self.grid.clone(), &s.position(), self.strengths[i], k0)?;
            let rescattered = far_field(sol, self.grid.clone()).map_err(|e| e.for_scatterer(i))?;
            match attribution {
                Attribution::HostOwnsScattering => host_pattern.add_assign(&rescattered)?,
                Attribution::ScattererOwnsRescattering => wave.add_assign(&rescattered)?,
            }
            patterns.push(wave);
        }
        patterns.push(host_pattern);
        Ok(patterns)
    }

    pub fn n_members(&self) -> usize {
        self.patterns.len()
    }

    /// Largest truncation order among the host solutions.
    pub fn l_used(&self) -> usize {
        self.exterior
            .iter()
            .map(|s| s.l_trunc)
            .fold(self.interior.l_trunc, usize::max)
    }

    pub fn host_pattern(&self) -> &FarFieldPattern {
        self.patterns.last().expect("host pattern is always present")
    }

    pub fn total_pattern(&self) -> Result<FarFieldPattern> {
        sum_patterns(&self.patterns)
    }

    fn wave(&self, j: usize, r: &Vec3) -> Result<FieldSample> {
        point_wave(
            &self.model.scatterers[j].position(),
            self.strengths[j],
            self.exterior_dm.k,
            r,
            Region::Exterior,
        )
    }

    /// Attributed exterior fields at `r` (point scatterers first, host last).
    pub fn exterior_fields(&self, r: &Vec3) -> Result<Vec<FieldSample>> {
        let mut out = Vec::with_capacity(self.n_members());
        let mut host = self.interior.eval_side(r, Side::Outside)?;
        for (j, sol) in self.exterior.iter().enumerate() {
            let mut own = self.wave(j, r)?;
            let re = sol.eval_side(r, Side::Outside)?;
            match self.attribution {
                Attribution::HostOwnsScattering => host = host + re,
                Attribution::ScattererOwnsRescattering => own = own + re,
            }
            out.push(own);
        }
        out.push(host);
        Ok(out)
    }

    /// Total exterior field, superposed source by source.
    pub fn total_exterior(&self, r: &Vec3) -> Result<FieldSample> {
        let mut total = self.interior.eval_side(r, Side::Outside)?;
        for sol in &self.exterior {
            total = total + sol.eval_total(r, Side::Outside)?;
        }
        Ok(total)
    }

    /// Host-interior response to the interior source (the `α` series).
    pub fn interior_response(&self, r: &Vec3) -> Result<FieldSample> {
        self.interior.eval_side(r, Side::Inside)
    }

    /// Primary field of the interior source.
    pub fn primary(&self, r: &Vec3) -> Result<FieldSample> {
        self.interior.eval_incident(r)
    }

    /// Single-scatterer fields in the host: the transmitted wave of each
    /// point scatterer, then the host's own response `α` (without `u^pr`).
    pub fn host_fields(&self, r: &Vec3) -> Result<Vec<FieldSample>> {
        let mut out = Vec::with_capacity(self.n_members());
        for sol in &self.exterior {
            out.push(sol.eval_side(r, Side::Inside)?);
        }
        out.push(self.interior_response(r)?);
        Ok(out)
    }

    /// Total host field `u^pr + α + Σ t_j`.
    pub fn total_host(&self, r: &Vec3) -> Result<FieldSample> {
        let fields = self.host_fields(r)?;
        Ok(sum_samples(&fields) + self.primary(r)?)
    }

    /// Scattered host field at the source point, `u_h^sc(a) = α(a) + Σ t_j(a)`.
    pub fn host_scattered_at_source(&self) -> Result<Complex64> {
        let a = self.model.source.position();
        Ok(self.host_fields(&a)?.iter().map(|s| s.value).sum())
    }

    /// Field exciting scatterer `n`: the total exterior field at `b_n`
    /// minus scatterer `n`'s own wave.
    pub fn exciting_field(&self, n: usize) -> Result<Complex64> {
        let b = self.model.scatterers[n].position();
        let mut v = self.interior.eval_side(&b, Side::Outside)?.value;
        for (j, sol) in self.exterior.iter().enumerate() {
            v += sol.eval_side(&b, Side::Outside)?.value;
            if j != n {
                v += self.wave(j, &b)?.value;
            }
        }
        Ok(v)
    }

    /// Pattern of the interior-source solution alone (transmitted primary
    /// plus host response to it).
    pub fn interior_pattern(&self) -> Result<FarFieldPattern> {
        far_field(&self.interior, self.grid.clone())
    }
}
