//! Series solution of the penetrable-sphere transmission problem for a single
//! point source.
//!
//! Each source is treated in its own axisymmetric frame: the polar axis runs
//! from the sphere centre through the source, so only zonal (`m = 0`) terms
//! appear. With `ρ = |r − c|`, `μ = cos γ` and `ϱ = β_h/ρ₀`:
//!
//! * interior source — host field `u^pr + Σ α_n j_n(k_h ρ) P_n(μ)`, exterior
//!   field `Σ β_n h_n(k₀ ρ) P_n(μ)`;
//! * exterior source — exterior field `u^inc + Σ s_n h_n(k₀ ρ) P_n(μ)`, host
//!   field `Σ t_n j_n(k_h ρ) P_n(μ)`.
//!
//! Continuity of pressure and of `∂u/∂n` weighted by `ϱ` on `ρ = R` gives one
//! 2×2 system per degree.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crosssec::FarFieldPattern;
use crate::error::{Error, Result};
use crate::fields::{point_wave, real_to_complex, FieldSample, PointSource, Region};
use crate::media::{DerivedMedium, Medium};
use crate::quadrature::{SphericalGrid, Vec3};
use crate::specfun::{bessel_j_derivatives, hankel_derivatives, legendre_seq, sph_bessel_j_seq, sph_hankel1_seq};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Smallest truncation order chosen automatically.
pub const MIN_ORDER: usize = 16;
/// Largest truncation order chosen automatically.
pub const MAX_AUTO_ORDER: usize = 120;
/// Tail ratio below which a solution counts as converged.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e13;

/// Right-hand side of the per-degree 2×2 system.
type RhsFn = Box<dyn Fn(usize, Complex64) -> [Complex64; 2]>;

/// A penetrable sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HostSphere {
    pub center: [f64; 3],
    pub radius: f64,
    pub medium: Medium,
}

impl HostSphere {
    pub fn new(center: Vec3, radius: f64, medium: Medium) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::domain(format!("host radius must be positive, got {radius}")));
        }
        medium.validate()?;
        Ok(HostSphere {
            center: [center.x, center.y, center.z],
            radius,
            medium,
        })
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    pub fn contains(&self, r: &Vec3) -> bool {
        (r - self.center()).norm() < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceKind {
    Interior,
    Exterior,
}

/// Which of the probe radius and the source distance is the smaller one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusOrder {
    /// `r < d`: the probe is closer to the centre than the source.
    ProbeInside,
    /// `r > d`: the probe is farther from the centre than the source.
    ProbeOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    Auto,
    Fixed(usize),
}

/// Side of the sphere surface on which to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Inside,
    Outside,
}

/// Coefficients of `e^{ik|r−a|}/|r−a| = Σ c_n f_n(k r) P_n(cos γ)` for a
/// source at distance `d` from the expansion centre.
///
/// For [`RadiusOrder::ProbeOutside`] `c_n = ik(2n+1) j_n(kd)` multiplies
/// `h_n(kr)`; for [`RadiusOrder::ProbeInside`] `c_n = ik(2n+1) h_n(kd)`
/// multiplies `j_n(kr)`.
pub fn expand_source(d: f64, order: RadiusOrder, k: Complex64, l: usize) -> Result<Vec<Complex64>> {
    if l < 1 {
        return Err(Error::domain("truncation order must be at least 1"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("source distance must be non-negative, got {d}")));
    }
    let radial = match order {
        RadiusOrder::ProbeOutside => {
            if d == 0.0 {
                let mut v = vec![Complex64::new(0.0, 0.0); l + 1];
                v[0] = Complex64::new(1.0, 0.0);
                v
            } else {
                sph_bessel_j_seq(l, k * d)?
            }
        }
        RadiusOrder::ProbeInside => {
            if d == 0.0 {
                return Err(Error::Singularity(
                    "no interior expansion for a source at the centre".into(),
                ));
            }
            sph_hankel1_seq(l, k * d)?
        }
    };
    Ok(radial
        .iter()
        .enumerate()
        .map(|(n, f)| I * k * ((2 * n + 1) as f64) * f)
        .collect())
}

/// Truncation order suggested from the electrical size of the sphere.
pub fn default_truncation(k_host: Complex64, k_ext: Complex64, radius: f64) -> usize {
    let l = ((k_host.norm() + k_ext.norm()) * radius).ceil() as usize + 12;
    l.clamp(MIN_ORDER, MAX_AUTO_ORDER)
}

/// Truncated series solution for one source and one sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub source_kind: SourceKind,
    pub center: Vec3,
    pub radius: f64,
    /// Unit vector from the centre toward the source (`+z` for a centred source).
    pub axis: Vec3,
    pub source_distance: f64,
    pub source_position: Vec3,
    pub amplitude: Complex64,
    pub l_trunc: usize,
    /// `α_n` (interior source) or `t_n` (exterior source).
    pub interior_coeffs: Vec<Complex64>,
    /// `β_n` (interior source) or `s_n` (exterior source).
    pub exterior_coeffs: Vec<Complex64>,
    pub host: DerivedMedium,
    pub exterior: DerivedMedium,
    /// Largest relative size of the last two surface terms.
    pub tail: f64,
    pub converged: bool,
    /// Largest Frobenius condition estimate over all degrees.
    pub condition: f64,
}

/// Solves the transmission problem for `source` and the sphere `host`.
pub fn solve_host(
    source: &PointSource,
    kind: SourceKind,
    host: &HostSphere,
    host_dm: &DerivedMedium,
    exterior_dm: &DerivedMedium,
    truncation: Truncation,
) -> Result<SeriesSolution> {
    if host_dm.omega != exterior_dm.omega {
        return Err(Error::domain(
            "host and exterior media derived at different frequencies",
        ));
    }
    let center = host.center();
    let offset = source.position() - center;
    let d = offset.norm();
    match kind {
        SourceKind::Interior if d >= host.radius => {
            return Err(Error::domain("interior source must lie strictly inside the host"));
        }
        SourceKind::Exterior if d <= host.radius => {
            return Err(Error::domain("exterior source must lie strictly outside the host"));
        }
        _ => {}
    }
    let axis = if d > 0.0 { offset / d } else { Vec3::z() };
    let frame = Frame {
        kind,
        d,
        radius: host.radius,
        amplitude: source.amplitude,
        host: *host_dm,
        exterior: *exterior_dm,
    };
    let build = |l: usize| -> Result<SeriesSolution> {
        let (interior, exterior, condition) = frame.solve(l)?;
        let tail = frame.tail(&interior, &exterior)?;
        Ok(SeriesSolution {
            source_kind: kind,
            center,
            radius: host.radius,
            axis,
            source_distance: d,
            source_position: source.position(),
            amplitude: source.amplitude,
            l_trunc: l,
            interior_coeffs: interior,
            exterior_coeffs: exterior,
            host: *host_dm,
            exterior: *exterior_dm,
            tail,
            converged: tail < TAIL_TOLERANCE,
            condition,
        })
    };
    match truncation {
        Truncation::Fixed(l) => build(l),
        Truncation::Auto => {
            let mut l = default_truncation(host_dm.k, exterior_dm.k, host.radius);
            let mut last = build(l)?;
            while !last.converged && l + 10 <= MAX_AUTO_ORDER {
                l += 10;
                match build(l) {
                    Ok(s) => last = s,
                    // Radial functions leaving the representable range mean
                    // the previous order is as good as this frame allows.
                    Err(Error::Overflow(_)) => break,
                    Err(e) => return Err(e),
                }
            }
            Ok(last)
        }
    }
}

struct Frame {
    kind: SourceKind,
    d: f64,
    radius: f64,
    amplitude: Complex64,
    host: DerivedMedium,
    exterior: DerivedMedium,
}

impl Frame {
    fn rho_ratio(&self) -> Complex64 {
        self.host.beta / self.exterior.rho()
    }

    fn solve(&self, l: usize) -> Result<(Vec<Complex64>, Vec<Complex64>, f64)> {
        let kh = self.host.k;
        let k0 = self.exterior.k;
        let r = self.radius;
        let jh = sph_bessel_j_seq(l + 1, kh * r)?;
        let djh = bessel_j_derivatives(&jh);
        let h0 = sph_hankel1_seq(l + 1, k0 * r)?;
        let dh0 = hankel_derivatives(&h0, k0 * r);
        let varrho = self.rho_ratio();

        let (incident, rhs): (Vec<Complex64>, RhsFn) = match self.kind {
            SourceKind::Interior => {
                let hh = sph_hankel1_seq(l + 1, kh * r)?;
                let dhh = hankel_derivatives(&hh, kh * r);
                let c = expand_source(self.d, RadiusOrder::ProbeOutside, kh, l)?;
                (c, Box::new(move |n, c| [-c * hh[n], -c * kh * dhh[n]]))
            }
            SourceKind::Exterior => {
                let j0 = sph_bessel_j_seq(l + 1, k0 * r)?;
                let dj0 = bessel_j_derivatives(&j0);
                let e = expand_source(self.d, RadiusOrder::ProbeInside, k0, l)?;
                (e, Box::new(move |n, e| [e * j0[n], varrho * k0 * e * dj0[n]]))
            }
        };

        let mut interior = Vec::with_capacity(l + 1);
        let mut exterior = Vec::with_capacity(l + 1);
        let mut worst = 0.0_f64;
        for n in 0..=l {
            let m = [[jh[n], -h0[n]], [kh * djh[n], -varrho * k0 * dh0[n]]];
            let b = rhs(n, incident[n] * self.amplitude);
            let (x, cond) = solve_2x2(m, b).map_err(|cond| Error::Conditioning {
                degree: n,
                condition: cond,
            })?;
            worst = worst.max(cond);
            interior.push(x[0]);
            exterior.push(x[1]);
        }
        Ok((interior, exterior, worst))
    }

    /// Largest of the last two surface terms `|α_n j_n(k_h R)|`,
    /// `|β_n h_n(k₀ R)|` relative to the largest term of either series.
    fn tail(&self, interior: &[Complex64], exterior: &[Complex64]) -> Result<f64> {
        let l = interior.len() - 1;
        let jh = sph_bessel_j_seq(l, self.host.k * self.radius)?;
        let h0 = sph_hankel1_seq(l, self.exterior.k * self.radius)?;
        let surface_in: Vec<f64> = interior.iter().zip(&jh).map(|(a, f)| (a * f).norm()).collect();
        let surface_out: Vec<f64> = exterior.iter().zip(&h0).map(|(a, f)| (a * f).norm()).collect();
        let max = surface_in.iter().chain(&surface_out).cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return Ok(0.0);
        }
        let last = surface_in[l.saturating_sub(1)..]
            .iter()
            .chain(&surface_out[l.saturating_sub(1)..])
            .cloned()
            .fold(0.0, f64::max);
        Ok(last / max)
    }
}

/// Cramer's rule on the row- and column-equilibrated system. Returns the
/// solution and the Frobenius condition estimate, or the estimate on failure.
fn solve_2x2(m: [[Complex64; 2]; 2], b: [Complex64; 2]) -> std::result::Result<([Complex64; 2], f64), f64> {
    let mut a = m;
    let mut rhs = b;
    // Columns first: the two radial families can differ by hundreds of
    // orders of magnitude at high degree.
    let mut col = [1.0; 2];
    for j in 0..2 {
        let s = a[0][j].norm().max(a[1][j].norm());
        if s == 0.0 || !s.is_finite() {
            return Err(f64::INFINITY);
        }
        col[j] = s;
        a[0][j] /= s;
        a[1][j] /= s;
    }
    for i in 0..2 {
        let s = a[i][0].norm().max(a[i][1].norm());
        if s == 0.0 || !s.is_finite() {
            return Err(f64::INFINITY);
        }
        a[i][0] /= s;
        a[i][1] /= s;
        rhs[i] /= s;
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let frob2: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum();
    let cond = if det.norm() == 0.0 {
        f64::INFINITY
    } else {
        frob2 / det.norm()
    };
    if !(cond < MAX_CONDITION) {
        return Err(cond);
    }
    let x0 = (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det;
    let x1 = (a[0][0] * rhs[1] - rhs[0] * a[1][0]) / det;
    Ok(([x0 / col[0], x1 / col[1]], cond))
}

#[derive(Clone, Copy)]
enum Radial {
    Bessel,
    Hankel,
}

impl SeriesSolution {
    /// The same solution for the source amplitude multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> SeriesSolution {
        let mut out = self.clone();
        out.amplitude *= c;
        out.interior_coeffs.iter_mut().for_each(|a| *a *= c);
        out.exterior_coeffs.iter_mut().for_each(|a| *a *= c);
        out
    }

    fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                order: self.l_trunc,
                tail: self.tail,
            })
        }
    }

    /// Attributed response field at `r`: the `α`/`t` series inside the
    /// sphere, the `β`/`s` series outside.
    pub fn eval(&self, r: &Vec3) -> Result<FieldSample> {
        let side = if (r - self.center).norm() < self.radius {
            Side::Inside
        } else {
            Side::Outside
        };
        self.eval_side(r, side)
    }

    /// Like [`eval`](Self::eval) but with the side chosen explicitly, for
    /// points on the surface.
    pub fn eval_side(&self, r: &Vec3, side: Side) -> Result<FieldSample> {
        self.ensure_converged()?;
        match side {
            Side::Inside => self.sum_series(&self.interior_coeffs, self.host.k, Radial::Bessel, r, Region::Host),
            Side::Outside => self.sum_series(
                &self.exterior_coeffs,
                self.exterior.k,
                Radial::Hankel,
                r,
                Region::Exterior,
            ),
        }
    }

    /// Field radiated by the source itself in its own medium (`u^pr` or `u^inc`).
    pub fn eval_incident(&self, r: &Vec3) -> Result<FieldSample> {
        let (k, region) = match self.source_kind {
            SourceKind::Interior => (self.host.k, Region::SourceRegion),
            SourceKind::Exterior => (self.exterior.k, Region::Exterior),
        };
        point_wave(&self.source_position, self.amplitude, k, r, region)
    }

    /// Total field of this single-source problem on the given side.
    pub fn eval_total(&self, r: &Vec3, side: Side) -> Result<FieldSample> {
        let response = self.eval_side(r, side)?;
        match (self.source_kind, side) {
            (SourceKind::Interior, Side::Inside) | (SourceKind::Exterior, Side::Outside) => {
                Ok(response + self.eval_incident(r)?)
            }
            _ => Ok(response),
        }
    }

    fn sum_series(
        &self,
        coeffs: &[Complex64],
        k: Complex64,
        radial: Radial,
        r: &Vec3,
        region: Region,
    ) -> Result<FieldSample> {
        let l = coeffs.len() - 1;
        let rel = r - self.center;
        let rho = rel.norm();
        if rho <= 1e-12 * self.radius {
            return match radial {
                Radial::Bessel => {
                    let grad = if l >= 1 {
                        coeffs[1] * k / 3.0
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    Ok(FieldSample {
                        value: coeffs[0],
                        gradient: real_to_complex(&self.axis) * grad,
                        region,
                    })
                }
                Radial::Hankel => Err(Error::Singularity("outgoing series evaluated at the centre".into())),
            };
        }
        let rhat = rel / rho;
        let mu = rhat.dot(&self.axis).clamp(-1.0, 1.0);
        let z = k * rho;
        let (f, df) = match radial {
            Radial::Bessel => {
                let f = sph_bessel_j_seq(l + 1, z)?;
                let df = bessel_j_derivatives(&f);
                (f, df)
            }
            Radial::Hankel => {
                let f = sph_hankel1_seq(l + 1, z)?;
                let df = hankel_derivatives(&f, z);
                (f, df)
            }
        };
        let (p, dp) = legendre_seq(l, mu)?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut radial_part = Complex64::new(0.0, 0.0);
        let mut angular_part = Complex64::new(0.0, 0.0);
        for n in 0..=l {
            value += coeffs[n] * f[n] * p[n];
            radial_part += coeffs[n] * df[n] * p[n];
            angular_part += coeffs[n] * f[n] * dp[n];
        }
        let tangential = (self.axis - rhat * mu) / rho;
        let gradient = real_to_complex(&rhat) * (radial_part * k) + real_to_complex(&tangential) * angular_part;
        Ok(FieldSample {
            value,
            gradient,
            region,
        })
    }

    /// Far-field pattern of the outgoing series at direction `rhat`,
    /// phase-referenced to the global origin.
    pub fn pattern_at(&self, rhat: &Vec3) -> Result<Complex64> {
        self.ensure_converged()?;
        let mu = rhat.dot(&self.axis).clamp(-1.0, 1.0);
        let (p, _) = legendre_seq(self.l_trunc, mu)?;
        let mut phase = Complex64::new(1.0, 0.0);
        let mut g = Complex64::new(0.0, 0.0);
        for (c, pn) in self.exterior_coeffs.iter().zip(&p) {
            g += c * phase * pn;
            phase *= -I;
        }
        let shift = (-I * self.exterior.k * rhat.dot(&self.center)).exp();
        Ok(g * shift)
    }

    /// Exterior response field `u(a)` at the source point of the host
    /// interior response (`α` series at `a`), defined for interior sources.
    pub fn response_at_source(&self) -> Result<Complex64> {
        Ok(self.eval_side(&self.source_position, Side::Inside)?.value)
    }
}

/// Samples the far-field pattern of the outgoing series on `grid`.
pub fn far_field(solution: &SeriesSolution, grid: std::sync::Arc<SphericalGrid>) -> Result<FarFieldPattern> {
    if !solution.exterior.is_lossless() {
        return Err(Error::domain("far-field patterns require a lossless exterior medium"));
    }
    let k0 = solution.exterior.k.re;
    let samples: Result<Vec<Complex64>> = grid.nodes.iter().map(|n| solution.pattern_at(n)).collect();
    FarFieldPattern::new(grid, samples?, k0)
}
