//! Product quadrature on the unit sphere and tensor-product rules for
//! spherical shells and source-centred regions.
//!
//! The sphere rule is Gauss–Legendre in `cos θ` times the uniform trapezoid
//! in `φ`; it integrates every spherical polynomial of degree
//! `≤ 2 n_theta − 1` in `cos θ` (and `< n_phi` in `φ`) exactly.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product grid on the unit sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalGrid {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphericalGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 4 {
            return Err(Error::domain(format!(
                "sphere grid needs n_theta >= 2 and n_phi >= 4, got {n_theta} x {n_phi}"
            )));
        }
        let (mu, w_mu) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&ct, &wt) in mu.iter().zip(&w_mu) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = dphi * j as f64;
                nodes.push(Vec3::new(st * phi.cos(), st * phi.sin(), ct));
                weights.push(wt * dphi);
            }
        }
        Ok(SphericalGrid {
            nodes,
            weights,
            n_theta,
            n_phi,
        })
    }

    /// Default resolution for a series truncated at order `l_trunc`.
    pub fn for_truncation(l_trunc: usize) -> Result<Self> {
        let n_theta = (2 * l_trunc + 8).max(32);
        Self::new(n_theta, 2 * n_theta)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when both grids share the same node layout.
    pub fn same_layout(&self, other: &SphericalGrid) -> bool {
        self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }

    /// Integrates pre-computed samples, one per node.
    pub fn integrate_samples(&self, samples: &[Complex64]) -> Result<Complex64> {
        if samples.len() != self.len() {
            return Err(Error::domain(format!(
                "expected {} samples, got {}",
                self.len(),
                samples.len()
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (q, (s, w)) in samples.iter().zip(&self.weights).enumerate() {
            check_finite(q, *s)?;
            acc += s * w;
        }
        Ok(acc)
    }
}

pub fn sphere_grid(n_theta: usize, n_phi: usize) -> Result<SphericalGrid> {
    SphericalGrid::new(n_theta, n_phi)
}

fn check_finite(node: usize, v: Complex64) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            node,
            value: v.to_string(),
        })
    }
}

/// Evaluates `f` at every item in parallel and returns the values in order.
pub(crate) fn par_eval<T, F>(items: &[T], f: F) -> Vec<Complex64>
where
    T: Sync,
    F: Fn(&T) -> Complex64 + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// `Σ_q w_q f(r̂_q)`. Node evaluations run in parallel; the sum is sequential.
pub fn integrate_sphere<F>(f: F, grid: &SphericalGrid) -> Result<Complex64>
where
    F: Fn(&Vec3) -> Complex64 + Sync + Send,
{
    let samples = par_eval(&grid.nodes, f);
    grid.integrate_samples(&samples)
}

/// Fallible variant of [`integrate_sphere`]; the first error aborts the sum.
pub fn try_integrate_sphere<F>(f: F, grid: &SphericalGrid) -> Result<Complex64>
where
    F: Fn(&Vec3) -> Result<Complex64> + Sync + Send,
{
    let samples: Result<Vec<Complex64>> = grid.nodes.par_iter().map(f).collect();
    grid.integrate_samples(&samples?)
}

/// Surface integral over the sphere `|r − center| = radius`.
pub fn integrate_sphere_surface<F>(f: F, center: &Vec3, radius: f64, grid: &SphericalGrid) -> Result<Complex64>
where
    F: Fn(&Vec3, &Vec3) -> Result<Complex64> + Sync + Send,
{
    let v = try_integrate_sphere(|n| f(&(center + n * radius), n), grid)?;
    Ok(v * radius * radius)
}

/// Gauss–Legendre nodes and weights on `[r0, r1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n: usize, r0: f64, r1: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("radial grid needs at least one node"));
        }
        if !(r0 >= 0.0 && r1 > r0) {
            return Err(Error::domain(format!("radial interval [{r0}, {r1}] is invalid")));
        }
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (r1 - r0);
        let mid = 0.5 * (r1 + r0);
        Ok(RadialGrid {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|wi| wi * half).collect(),
        })
    }

    pub fn start(&self) -> f64 {
        self.nodes.first().copied().unwrap_or(0.0)
    }
}

/// `∫ f dv` over the shell `r0 ≤ |r − center| ≤ r1` spanned by `radial`.
pub fn integrate_ball_shell<F>(f: F, center: &Vec3, radial: &RadialGrid, angular: &SphericalGrid) -> Result<Complex64>
where
    F: Fn(&Vec3) -> Complex64 + Sync + Send,
{
    let points: Vec<(usize, usize)> = (0..angular.len())
        .flat_map(|q| (0..radial.nodes.len()).map(move |i| (q, i)))
        .collect();
    let values = par_eval(&points, |&(q, i)| {
        let r = radial.nodes[i];
        f(&(center + angular.nodes[q] * r))
    });
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, (&(q, i), v)) in points.iter().zip(&values).enumerate() {
        check_finite(idx, *v)?;
        let r = radial.nodes[i];
        acc += v * (angular.weights[q] * radial.weights[i] * r * r);
    }
    Ok(acc)
}

/// Distance from an interior point `p` to the sphere `(center, radius)` along unit direction `d`.
pub fn exit_distance(p: &Vec3, d: &Vec3, center: &Vec3, radius: f64) -> f64 {
    let q = p - center;
    let b = q.dot(d);
    let c = q.norm_squared() - radius * radius;
    -b + (b * b - c).max(0.0).sqrt()
}

/// `∫ f dv` over the ball `|r − center| < radius` with the small ball
/// `|r − hole| < epsilon` removed.
///
/// Uses spherical coordinates about `hole` and a logarithmic radial map
/// `t = ε e^s`, so integrands behaving like `|r − hole|^{-p}` with `p ≤ 4`
/// stay smooth in `s`.
pub fn integrate_ball_excluding<F>(
    f: F,
    center: &Vec3,
    radius: f64,
    hole: &Vec3,
    epsilon: f64,
    n_radial: usize,
    angular: &SphericalGrid,
) -> Result<Complex64>
where
    F: Fn(&Vec3) -> Result<Complex64> + Sync + Send,
{
    if (hole - center).norm() + epsilon >= radius {
        return Err(Error::domain("excluded ball must lie inside the integration ball"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain("excluded radius must be positive"));
    }
    let (x, w) = gauss_legendre(n_radial);
    let points: Vec<(usize, usize)> = (0..angular.len())
        .flat_map(|q| (0..n_radial).map(move |i| (q, i)))
        .collect();
    let values: Result<Vec<Complex64>> = points
        .par_iter()
        .map(|&(q, i)| {
            let d = angular.nodes[q];
            let t_max = exit_distance(hole, &d, center, radius);
            let s_max = (t_max / epsilon).ln();
            let s = 0.5 * s_max * (x[i] + 1.0);
            let t = epsilon * s.exp();
            let jac = 0.5 * s_max * w[i] * t * t * t;
            Ok(f(&(hole + d * t))? * (jac * angular.weights[q]))
        })
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (idx, v) in values?.into_iter().enumerate() {
        check_finite(idx, v)?;
        acc += v;
    }
    Ok(acc)
}
