//! Field samples, acoustic intensities and energy densities.
//!
//! The complex intensity of a pressure field `u` in a medium with effective
//! density `β` is `I = (i/(ωβ̄)) u ∇ū`; its real part is the active intensity,
//! its imaginary part the reactive one. For a family of fields `{u_j}` the
//! intensity of `Σ u_j` splits exactly into direct (self) terms and
//! interaction terms summed over unordered pairs `k < m`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::DerivedMedium;
use crate::quadrature::Vec3;

pub type CVec3 = Vector3<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub position: [f64; 3],
    pub amplitude: Complex64,
}

impl PointSource {
    pub fn new(position: Vec3, amplitude: Complex64) -> Self {
        PointSource {
            position: [position.x, position.y, position.z],
            amplitude,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }
}

/// A point-like cluster member radiating `A_n e^{ik₀|r−b_n|}/|r−b_n|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub position: [f64; 3],
    pub strength: Complex64,
    /// Monopole coefficient `f_n` (m) for self-consistent strengths.
    pub monopole_coefficient: Option<Complex64>,
}

impl PointScatterer {
    pub fn new(position: Vec3, strength: Complex64) -> Self {
        PointScatterer {
            position: [position.x, position.y, position.z],
            strength,
            monopole_coefficient: None,
        }
    }

    pub fn with_monopole(mut self, f: Complex64) -> Self {
        self.monopole_coefficient = Some(f);
        self
    }

    pub fn position(&self) -> Vec3 {
        Vec3::from(self.position)
    }

    pub fn as_source(&self) -> PointSource {
        PointSource {
            position: self.position,
            amplitude: self.strength,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Exterior,
    Host,
    SourceRegion,
}

/// Pressure value and gradient at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub value: Complex64,
    pub gradient: CVec3,
    pub region: Region,
}

impl FieldSample {
    pub fn zero(region: Region) -> Self {
        FieldSample {
            value: Complex64::new(0.0, 0.0),
            gradient: CVec3::zeros(),
            region,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FieldSample {
            value: self.value * c,
            gradient: self.gradient * c,
            region: self.region,
        }
    }
}

impl std::ops::Add for FieldSample {
    type Output = FieldSample;

    fn add(self, rhs: FieldSample) -> FieldSample {
        FieldSample {
            value: self.value + rhs.value,
            gradient: self.gradient + rhs.gradient,
            region: self.region,
        }
    }
}

/// Sums a family of samples; the region tag is taken from the first one.
pub fn sum_samples(samples: &[FieldSample]) -> FieldSample {
    let region = samples.first().map(|s| s.region).unwrap_or(Region::Exterior);
    samples.iter().fold(FieldSample::zero(region), |acc, s| acc + *s)
}

pub(crate) fn real_to_complex(v: &Vec3) -> CVec3 {
    v.map(|x| Complex64::new(x, 0.0))
}

/// `Σ_i a_i b̄_i`
pub(crate) fn hdot(a: &CVec3, b: &CVec3) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

/// `u(r) = A e^{ik|r−a|}/|r−a|` and its gradient.
pub fn primary_field(source: &PointSource, dm: &DerivedMedium, r: &Vec3) -> Result<FieldSample> {
    point_wave(&source.position(), source.amplitude, dm.k, r, Region::SourceRegion)
}

/// `A e^{ik|r−o|}/|r−o|` and its gradient.
pub fn point_wave(origin: &Vec3, amplitude: Complex64, k: Complex64, r: &Vec3, region: Region) -> Result<FieldSample> {
    let d = r - origin;
    let dist = d.norm();
    if dist == 0.0 {
        return Err(Error::Singularity("field evaluated at its source point".into()));
    }
    let value = amplitude * (I * k * dist).exp() / dist;
    let radial = value * (I * k - 1.0 / dist) / dist;
    Ok(FieldSample {
        value,
        gradient: real_to_complex(&d) * radial,
        region,
    })
}

fn prefactor(dm: &DerivedMedium) -> Complex64 {
    I / (dm.beta.conj() * dm.omega)
}

/// Complex intensity `(i/(ωβ̄)) u ∇ū`.
pub fn intensity(u: &FieldSample, dm: &DerivedMedium) -> CVec3 {
    u.gradient.map(|g| g.conj()) * (u.value * prefactor(dm))
}

/// Intensity of the cross term between two fields, `(i/(ωβ̄))(u∇v̄ + v∇ū)`.
pub fn cross_intensity(u: &FieldSample, v: &FieldSample, dm: &DerivedMedium) -> CVec3 {
    let p = prefactor(dm);
    (v.gradient.map(|g| g.conj()) * u.value + u.gradient.map(|g| g.conj()) * v.value) * p
}

/// Direct and interaction intensities of a field family.
pub fn split_intensity(samples: &[FieldSample], dm: &DerivedMedium) -> (CVec3, CVec3) {
    let mut direct = CVec3::zeros();
    let mut interaction = CVec3::zeros();
    for (k, uk) in samples.iter().enumerate() {
        direct += intensity(uk, dm);
        for um in &samples[k + 1..] {
            interaction += cross_intensity(uk, um, dm);
        }
    }
    (direct, interaction)
}

/// Potential, kinetic and Lagrangian energy densities (J/m³).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DensitySet {
    pub potential: f64,
    pub kinetic: f64,
    pub lagrangian: f64,
}

impl DensitySet {
    pub fn new(potential: f64, kinetic: f64) -> Self {
        DensitySet {
            potential,
            kinetic,
            lagrangian: kinetic - potential,
        }
    }
}

impl std::ops::Add for DensitySet {
    type Output = DensitySet;

    fn add(self, rhs: DensitySet) -> DensitySet {
        DensitySet::new(self.potential + rhs.potential, self.kinetic + rhs.kinetic)
    }
}

fn kinetic_weight(dm: &DerivedMedium) -> f64 {
    dm.rho() / (2.0 * dm.omega * dm.omega * dm.beta.norm_sqr())
}

pub fn densities(u: &FieldSample, dm: &DerivedMedium) -> DensitySet {
    let potential = 0.5 * dm.gamma() * u.value.norm_sqr();
    let kinetic = kinetic_weight(dm) * hdot(&u.gradient, &u.gradient).re;
    DensitySet::new(potential, kinetic)
}

/// Energy densities of the cross term between two fields.
pub fn cross_densities(u: &FieldSample, v: &FieldSample, dm: &DerivedMedium) -> DensitySet {
    let potential = dm.gamma() * (u.value * v.value.conj()).re;
    let kinetic = 2.0 * kinetic_weight(dm) * hdot(&u.gradient, &v.gradient).re;
    DensitySet::new(potential, kinetic)
}

/// Direct and interaction energy densities of a field family.
pub fn split_densities(samples: &[FieldSample], dm: &DerivedMedium) -> (DensitySet, DensitySet) {
    let mut direct = DensitySet::default();
    let mut interaction = DensitySet::default();
    for (k, uk) in samples.iter().enumerate() {
        direct = direct + densities(uk, dm);
        for um in &samples[k + 1..] {
            interaction = interaction + cross_densities(uk, um, dm);
        }
    }
    (direct, interaction)
}
