//! Scattering cross sections, their ratios and the inequalities relating them.
//!
//! `σ = (1/k₀²)∫|Σ g_j|²` splits exactly into the single-scatterer sections
//! `σ_j = (1/k₀²)∫|g_j|²` and the cluster-interaction section `σ_c`, which
//! collects the cross terms and may be negative.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{SphericalGrid, Vec3};
use crate::specfun::sph_bessel_j;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Far-field pattern samples `g(r̂_q)` on a spherical grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub grid: Arc<SphericalGrid>,
    pub samples: Vec<Complex64>,
    pub k0: f64,
}

impl FarFieldPattern {
    pub fn new(grid: Arc<SphericalGrid>, samples: Vec<Complex64>, k0: f64) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::domain(format!(
                "{} pattern samples for a grid of {} nodes",
                samples.len(),
                grid.len()
            )));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::domain(format!("exterior wavenumber must be positive, got {k0}")));
        }
        Ok(FarFieldPattern { grid, samples, k0 })
    }

    /// Pattern of `A e^{ik₀|r−b|}/|r−b|`, i.e. `ik₀A e^{−ik₀ r̂·b}`.
    pub fn point_source(grid: Arc<SphericalGrid>, position: &Vec3, amplitude: Complex64, k0: f64) -> Result<Self> {
        let samples = grid
            .nodes
            .iter()
            .map(|n| I * k0 * amplitude * (-I * k0 * n.dot(position)).exp())
            .collect();
        Self::new(grid, samples, k0)
    }

    pub fn zeros_like(other: &FarFieldPattern) -> Self {
        FarFieldPattern {
            grid: other.grid.clone(),
            samples: vec![Complex64::new(0.0, 0.0); other.samples.len()],
            k0: other.k0,
        }
    }

    fn compatible(&self, other: &FarFieldPattern) -> Result<()> {
        if self.k0 != other.k0 || !self.grid.same_layout(&other.grid) {
            return Err(Error::domain("patterns live on different grids or wavenumbers"));
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &FarFieldPattern) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        FarFieldPattern {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|g| g * c).collect(),
            k0: self.k0,
        }
    }

    /// `(1/k₀²)∫ g ḡ_other`.
    pub fn inner(&self, other: &FarFieldPattern) -> Result<Complex64> {
        self.compatible(other)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for ((a, b), w) in self.samples.iter().zip(&other.samples).zip(&self.grid.weights) {
            acc += a * b.conj() * w;
        }
        Ok(acc / (self.k0 * self.k0))
    }
}

/// Sum of a non-empty pattern family.
pub fn sum_patterns(patterns: &[FarFieldPattern]) -> Result<FarFieldPattern> {
    let first = patterns.first().ok_or_else(|| Error::domain("empty pattern family"))?;
    let mut acc = FarFieldPattern::zeros_like(first);
    for p in patterns {
        acc.add_assign(p)?;
    }
    Ok(acc)
}

/// `σ = (1/k₀²)∫|g|²`.
pub fn scs(pattern: &FarFieldPattern) -> f64 {
    let s: f64 = pattern
        .samples
        .iter()
        .zip(&pattern.grid.weights)
        .map(|(g, w)| g.norm_sqr() * w)
        .sum();
    s / (pattern.k0 * pattern.k0)
}

/// `σ_c = scs(Σg) − Σ scs(g_j)`.
pub fn interaction_cs(patterns: &[FarFieldPattern]) -> Result<f64> {
    if patterns.len() < 2 {
        return Err(Error::domain("interaction cross section needs at least two patterns"));
    }
    let total = sum_patterns(patterns)?;
    let direct: f64 = patterns.iter().map(scs).sum();
    Ok(scs(&total) - direct)
}

/// `σ_c` from the explicit double sum `(1/k₀²)Σ_{k≠m}∫g_k ḡ_m`; the
/// imaginary part cancels pairwise, so only `2 Σ_{k<m} Re` is accumulated.
pub fn interaction_cs_double_sum(patterns: &[FarFieldPattern]) -> Result<f64> {
    if patterns.len() < 2 {
        return Err(Error::domain("interaction cross section needs at least two patterns"));
    }
    let mut acc = 0.0;
    for (k, gk) in patterns.iter().enumerate() {
        for gm in &patterns[k + 1..] {
            acc += 2.0 * gk.inner(gm)?.re;
        }
    }
    Ok(acc)
}

fn j0(x: f64) -> f64 {
    sph_bessel_j(0, Complex64::new(x, 0.0)).map(|v| v.re).unwrap_or(1.0)
}

fn check_cloud(strengths: &[Complex64], positions: &[Vec3]) -> Result<()> {
    if strengths.len() != positions.len() {
        return Err(Error::domain("strengths and positions differ in length"));
    }
    for (k, bk) in positions.iter().enumerate() {
        for bm in &positions[k + 1..] {
            if (bk - bm).norm() == 0.0 {
                return Err(Error::domain("coincident scatterer positions"));
            }
        }
    }
    Ok(())
}

/// `4π Σ_{k≠m} A_k Ā_m j₀(k₀|b_k − b_m|)`.
pub fn primary_interaction_cs_closed(strengths: &[Complex64], positions: &[Vec3], k0: f64) -> Result<f64> {
    if strengths.len() < 2 {
        return Err(Error::domain("primary interaction needs at least two scatterers"));
    }
    check_cloud(strengths, positions)?;
    let mut acc = 0.0;
    for k in 0..strengths.len() {
        for m in k + 1..strengths.len() {
            let d = (positions[k] - positions[m]).norm();
            acc += 2.0 * (strengths[k] * strengths[m].conj()).re * j0(k0 * d);
        }
    }
    Ok(FOUR_PI * acc)
}

/// `4π Σ_k Σ_m A_k Ā_m j₀(k₀|b_k − b_m|)`.
pub fn overall_primary_cs_closed(strengths: &[Complex64], positions: &[Vec3], k0: f64) -> Result<f64> {
    check_cloud(strengths, positions)?;
    let direct: f64 = strengths.iter().map(|a| FOUR_PI * a.norm_sqr()).sum();
    if strengths.len() < 2 {
        return Ok(direct);
    }
    Ok(direct + primary_interaction_cs_closed(strengths, positions, k0)?)
}

/// σ, its single-scatterer parts and the interaction part, with ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionReport {
    pub sigma: f64,
    pub sigma_j: Vec<f64>,
    pub sigma_c: f64,
    pub sigma_direct: f64,
    pub ratios: Vec<f64>,
    pub ratio_c: f64,
}

impl CrossSectionReport {
    pub fn from_patterns(patterns: &[FarFieldPattern]) -> Result<Self> {
        let total = sum_patterns(patterns)?;
        let sigma = scs(&total);
        let sigma_j: Vec<f64> = patterns.iter().map(scs).collect();
        Ok(Self::from_parts(sigma, sigma_j))
    }

    /// Builds the report with `σ_c = σ − Σσ_j`.
    pub fn from_parts(sigma: f64, sigma_j: Vec<f64>) -> Self {
        let sigma_direct: f64 = sigma_j.iter().sum();
        let sigma_c = sigma - sigma_direct;
        let ratio = |s: f64| if sigma > 0.0 { s / sigma } else { f64::NAN };
        CrossSectionReport {
            sigma,
            ratios: sigma_j.iter().map(|s| ratio(*s)).collect(),
            ratio_c: ratio(sigma_c),
            sigma_j,
            sigma_c,
            sigma_direct,
        }
    }

    pub fn n(&self) -> usize {
        self.sigma_j.len()
    }

    pub fn ratio_direct(&self) -> f64 {
        self.ratios.iter().sum()
    }
}

/// One inequality `lhs ≤ rhs`; `margin = rhs − lhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl Check {
    /// `lhs ≤ rhs` up to `tol·scale` of rounding slack.
    pub fn le(lhs: f64, rhs: f64, tol: f64, scale: f64) -> Self {
        Check {
            lhs,
            rhs,
            margin: rhs - lhs,
            holds: lhs <= rhs + tol * scale.abs().max(f64::MIN_POSITIVE),
        }
    }
}

/// The two-sided count bound `1/√R_max ≤ N ≤ 1/√R_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CountBound {
    NotApplicable,
    Applicable { lower: Check, upper: Check },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// Relative slack for rounding in the comparisons.
    pub tolerance: f64,
    /// Leave the last member (the host) out of `R_min`/`R_max`.
    pub exclude_last: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        BoundOptions {
            tolerance: 1e-10,
            exclude_last: false,
        }
    }
}

/// Verdicts of the ratio inequalities for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundVerdicts {
    pub n: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// `R_c ≤ (N−1)/N`
    pub rc_mean: Check,
    /// `R_c ≤ 1 − N R_min`
    pub rc_min: Check,
    /// `1 − N R_max ≤ R_c`
    pub rc_max: Check,
    /// `(N−1)/N ≤ 1 − N R_min`
    pub count_condition: bool,
    pub count: CountBound,
    /// `R_max = 1/N²`
    pub max_equals_inverse_square: bool,
    /// `R_n = 1/N²` for every `n`
    pub all_equal_inverse_square: bool,
    /// `R_c = (N−1)/N`
    pub rc_at_maximum: bool,
}

impl BoundVerdicts {
    pub fn all_hold(&self) -> bool {
        let count = match self.count {
            CountBound::NotApplicable => true,
            CountBound::Applicable { lower, upper } => lower.holds && upper.holds,
        };
        self.rc_mean.holds && self.rc_min.holds && self.rc_max.holds && count
    }
}

pub fn check_bounds(report: &CrossSectionReport, opts: &BoundOptions) -> BoundVerdicts {
    let n = report.n();
    let nf = n as f64;
    let tol = opts.tolerance;
    let pool = if opts.exclude_last && n > 1 {
        &report.ratios[..n - 1]
    } else {
        &report.ratios[..]
    };
    let r_min = pool.iter().cloned().fold(f64::INFINITY, f64::min);
    let r_max = pool.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rc = report.ratio_c;
    let scale = 1.0 + rc.abs() + nf * r_max.abs();
    let count_condition = (nf - 1.0) / nf <= 1.0 - nf * r_min + tol * scale;
    let count = if count_condition {
        CountBound::Applicable {
            lower: Check::le(1.0 / r_max.sqrt(), nf, tol, nf),
            upper: Check::le(nf, 1.0 / r_min.sqrt(), tol, nf),
        }
    } else {
        CountBound::NotApplicable
    };
    let inv_sq = 1.0 / (nf * nf);
    let eq = |r: f64| (r - inv_sq).abs() <= tol * scale;
    BoundVerdicts {
        n,
        r_min,
        r_max,
        rc_mean: Check::le(rc, (nf - 1.0) / nf, tol, scale),
        rc_min: Check::le(rc, 1.0 - nf * r_min, tol, scale),
        rc_max: Check::le(1.0 - nf * r_max, rc, tol, scale),
        count_condition,
        count,
        max_equals_inverse_square: eq(r_max),
        all_equal_inverse_square: pool.iter().all(|r| eq(*r)),
        rc_at_maximum: (rc - (nf - 1.0) / nf).abs() <= tol * scale,
    }
}

/// Effect of removing the member with the `rank`-th smallest single SCS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovalCheck {
    /// 1-based position in ascending order of `σ_j`.
    pub rank: usize,
    /// Index of the removed member in the original sequence.
    pub index: usize,
    /// `σ^N − σ_n^{N−1}`
    pub delta: f64,
    /// `σ_n^{N−1}`
    pub sigma_removed: f64,
    /// `delta ≤ (2n−1)σ_n + 2(N−n)σ_N`, the bound the Hölder step yields.
    pub bound: Check,
    /// `delta ≤ (2n−1)σ_n + 2(N−n−1)σ_N` as printed; not a valid bound in general.
    pub bound_printed: Check,
    /// Whether `Nσ_n ≤ σ_D`, under which the ratio bound below applies.
    pub ratio_applicable: bool,
    /// `R_c − R_D ≤ σ_n^{N−1}/σ^N`
    pub ratio_bound: Check,
}

/// Removal checks for every rank `n = 1..=N`.
pub fn removal_checks(patterns: &[FarFieldPattern], tol: f64) -> Result<Vec<RemovalCheck>> {
    let n_total = patterns.len();
    if n_total < 2 {
        return Err(Error::domain("removal checks need at least two patterns"));
    }
    let report = CrossSectionReport::from_patterns(patterns)?;
    let mut order: Vec<usize> = (0..n_total).collect();
    order.sort_by(|a, b| report.sigma_j[*a].total_cmp(&report.sigma_j[*b]));
    let sigma_largest = report.sigma_j[order[n_total - 1]];
    let nf = n_total as f64;
    let mut out = Vec::with_capacity(n_total);
    for (pos, &index) in order.iter().enumerate() {
        let rank = pos + 1;
        let rest: Vec<FarFieldPattern> = patterns
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != index)
            .map(|(_, p)| p.clone())
            .collect();
        let sigma_removed = scs(&sum_patterns(&rest)?);
        let delta = report.sigma - sigma_removed;
        let sn = report.sigma_j[index];
        let rf = rank as f64;
        let scale = report.sigma.abs() + report.sigma_direct.abs();
        let bound = (2.0 * rf - 1.0) * sn + 2.0 * (nf - rf) * sigma_largest;
        let printed = (2.0 * rf - 1.0) * sn + 2.0 * (nf - rf - 1.0) * sigma_largest;
        let rd = report.sigma_direct / report.sigma;
        out.push(RemovalCheck {
            rank,
            index,
            delta,
            sigma_removed,
            bound: Check::le(delta, bound, tol, scale),
            bound_printed: Check::le(delta, printed, tol, scale),
            ratio_applicable: nf * sn <= report.sigma_direct * (1.0 + tol),
            ratio_bound: Check::le(report.ratio_c - rd, sigma_removed / report.sigma, tol, 1.0 + rd),
        });
    }
    Ok(out)
}

/// Settings of the seeded randomized inequality suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
    /// Scatterers are drawn in a ball of radius `k₀·extent ≤ max_extent`.
    pub max_extent: f64,
    pub bounds: BoundOptions,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            trials: 1000,
            seed: 42,
            n_min: 2,
            n_max: 8,
            max_extent: 5.0,
            bounds: BoundOptions::default(),
        }
    }
}

/// Per-trial outcome of the randomized suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub trial: usize,
    pub n: usize,
    pub constructed: bool,
    pub sigma: f64,
    pub sigma_c: f64,
    pub ratio_c: f64,
    pub verdicts: BoundVerdicts,
    pub removal: Vec<RemovalCheck>,
}

impl SuiteRow {
    pub fn removal_holds(&self) -> bool {
        self.removal.iter().all(|r| r.bound.holds)
    }

    pub fn ratio_bound_holds(&self) -> bool {
        self.removal.iter().all(|r| !r.ratio_applicable || r.ratio_bound.holds)
    }

    pub fn equality_fires(&self) -> bool {
        self.verdicts.rc_at_maximum && self.verdicts.max_equals_inverse_square && self.verdicts.all_equal_inverse_square
    }
}

/// Violation counts of the randomized suite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub trials: usize,
    pub rc_mean: usize,
    pub rc_min: usize,
    pub rc_max: usize,
    pub count_applicable: usize,
    pub count: usize,
    pub removal: usize,
    pub removal_first: usize,
    pub removal_last: usize,
    pub ratio_applicable: usize,
    pub ratio_bound: usize,
    /// Violations of the removal bound in its printed form (not a theorem).
    pub removal_printed: usize,
    pub removal_printed_first: usize,
    pub removal_printed_last: usize,
    pub constructed_cases: usize,
    pub constructed_equality_hits: usize,
    pub random_equality_hits: usize,
}

impl SuiteSummary {
    /// No violation of a valid bound and equality diagnostics firing exactly
    /// on the constructed cases.
    pub fn passed(&self) -> bool {
        self.rc_mean + self.rc_min + self.rc_max + self.count + self.removal + self.ratio_bound == 0
            && self.constructed_equality_hits == self.constructed_cases
            && self.random_equality_hits == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub options: SuiteOptions,
    pub summary: SuiteSummary,
    pub rows: Vec<SuiteRow>,
}

/// Runs the inequality checks on seeded random point-scatterer clusters plus
/// identical-pattern families for `N = 2..=n_max`. Each trial owns its RNG,
/// seeded from `(seed, trial)`, so results do not depend on scheduling.
pub fn bound_suite(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;

    if opts.n_min < 2 || opts.n_max < opts.n_min {
        return Err(Error::domain("suite cluster sizes must satisfy 2 ≤ n_min ≤ n_max"));
    }
    if !(opts.max_extent > 0.0 && opts.max_extent.is_finite()) {
        return Err(Error::domain("suite extent must be positive"));
    }
    let k0 = 1.0;
    let l = (2.0 * opts.max_extent).ceil() as usize + 16;
    let grid = Arc::new(SphericalGrid::for_truncation(l)?);

    let random = (0..opts.trials).into_par_iter().map(|trial| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(trial as u64);
        let n = rng.random_range(opts.n_min..=opts.n_max);
        let extent = opts.max_extent * rng.random_range(0.01..1.0f64);
        let patterns = (0..n)
            .map(|_| {
                let b = loop {
                    let v = Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if v.norm() <= 1.0 {
                        break v * extent;
                    }
                };
                let mag = 10f64.powf(rng.random_range(-1.0..1.0));
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                FarFieldPattern::point_source(grid.clone(), &b, Complex64::from_polar(mag, phase), k0)
            })
            .collect::<Result<Vec<_>>>()?;
        suite_row(trial, false, &patterns, &opts.bounds)
    });
    let mut rows: Vec<SuiteRow> = random.collect::<Result<Vec<_>>>()?;

    let base = FarFieldPattern::point_source(grid.clone(), &Vec3::new(0.3, -0.2, 0.5), Complex64::new(0.8, -0.6), k0)?;
    for n in 2..=opts.n_max {
        rows.push(suite_row(
            opts.trials + n - 2,
            true,
            &vec![base.clone(); n],
            &opts.bounds,
        )?);
    }

    let mut s = SuiteSummary::default();
    for row in &rows {
        let v = &row.verdicts;
        if row.constructed {
            s.constructed_cases += 1;
            s.constructed_equality_hits += row.equality_fires() as usize;
        } else {
            s.trials += 1;
            s.random_equality_hits += row.equality_fires() as usize;
        }
        s.rc_mean += !v.rc_mean.holds as usize;
        s.rc_min += !v.rc_min.holds as usize;
        s.rc_max += !v.rc_max.holds as usize;
        if let CountBound::Applicable { lower, upper } = v.count {
            s.count_applicable += 1;
            s.count += !(lower.holds && upper.holds) as usize;
        }
        s.removal += !row.removal_holds() as usize;
        let first = &row.removal[0];
        let last = &row.removal[row.removal.len() - 1];
        s.removal_first += !first.bound.holds as usize;
        s.removal_last += !last.bound.holds as usize;
        s.removal_printed += row.removal.iter().any(|r| !r.bound_printed.holds) as usize;
        s.removal_printed_first += !first.bound_printed.holds as usize;
        s.removal_printed_last += !last.bound_printed.holds as usize;
        s.ratio_applicable += row.removal.iter().any(|r| r.ratio_applicable) as usize;
        s.ratio_bound += !row.ratio_bound_holds() as usize;
    }
    Ok(SuiteOutcome {
        options: *opts,
        summary: s,
        rows,
    })
}

fn suite_row(trial: usize, constructed: bool, patterns: &[FarFieldPattern], opts: &BoundOptions) -> Result<SuiteRow> {
    let report = CrossSectionReport::from_patterns(patterns)?;
    Ok(SuiteRow {
        trial,
        n: patterns.len(),
        constructed,
        sigma: report.sigma,
        sigma_c: report.sigma_c,
        ratio_c: report.ratio_c,
        verdicts: check_bounds(&report, opts),
        removal: removal_checks(patterns, opts.tolerance)?,
    })
}
