//! Closed-form singularity lattices in complex time: the classical one from
//! the Jacobi parametrization of `x(t)` and the one from the spectral curve,
//! plus the matcher that compares them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{abel_point, jacobi, AbelValue, Modulus};
use crate::error::{Error, Result};
use crate::laxcore::LaxConfig;
use crate::numeric::{Lattice, Window, I};
use crate::surfaces::{branch_points, BranchData};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Classical,
    Rh,
    Toeplitz,
    Ode,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Classical => "classical",
            Source::Rh => "rh",
            Source::Toeplitz => "toeplitz",
            Source::Ode => "ode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub t: Complex64,
    pub m: i64,
    pub n: i64,
    pub source: Source,
}

/// Quarter periods of both curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Periods {
    #[serde(rename = "K")]
    pub k: Complex64,
    #[serde(rename = "Kprime")]
    pub kprime: Complex64,
    #[serde(rename = "K1")]
    pub k1: Complex64,
    #[serde(rename = "K1prime")]
    pub k1prime: Complex64,
}

impl Periods {
    pub fn from_branch(branch: &BranchData) -> Result<Self> {
        let sigma = Modulus::from_k(branch.k)?;
        let sigma1 = Modulus::from_k(branch.k1)?;
        Ok(Self {
            k: sigma.big_k,
            kprime: sigma.big_kprime,
            k1: sigma1.big_k,
            k1prime: sigma1.big_kprime,
        })
    }
}

/// Points of one lattice inside a window, with the affine data that
/// generated them: `t(m, n) = origin + m·step_m + n·step_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeReport {
    pub source: Source,
    pub points: Vec<LatticePoint>,
    /// Abel offset: `u₀` (classical) or `u(ξ₀)` (spectral side).
    pub offset: Complex64,
    pub origin: Complex64,
    pub step_m: Complex64,
    pub step_n: Complex64,
    pub periods: Periods,
}

impl LatticeReport {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lattice(&self) -> Lattice {
        Lattice::new(self.step_m, self.step_n)
    }

    pub fn nearest_to(&self, t: Complex64) -> Option<&LatticePoint> {
        self.points
            .iter()
            .min_by(|a, b| (a.t - t).norm().total_cmp(&(b.t - t).norm()))
    }
}

/// Initial point on `Σ`: `x̃₀ = x₀/x₁` with `w₀ = 2iaz₀/(x₁x₂)`, the sheet
/// for which `x(t) = x₁ sn(u₀ + ix₂t)` has `x'(0) = -2az₀`.
pub fn initial_point(config: &LaxConfig, branch: &BranchData) -> (Complex64, Complex64) {
    let xt = config.x0 / branch.x1;
    let w0 = I * config.a * config.z0 * 2.0 / (branch.x1 * branch.x2);
    (xt, w0)
}

/// `u₀ = ∫₀^{x̃₀} dx/w` on `Σ`, ending on the sheet of the initial velocity.
pub fn u0_classical(config: &LaxConfig, branch: &BranchData) -> Result<AbelValue> {
    let (xt, w0) = initial_point(config, branch);
    abel_point(xt, w0, branch.ksq())
}

fn enumerate(
    source: Source,
    origin: Complex64,
    step_m: Complex64,
    step_n: Complex64,
    window: &Window,
    mn_bound: i64,
    tol: f64,
) -> Vec<LatticePoint> {
    let rows: Vec<Vec<LatticePoint>> = (-mn_bound..=mn_bound)
        .into_par_iter()
        .map(|m| {
            (-mn_bound..=mn_bound)
                .map(|n| LatticePoint {
                    t: origin + step_m * m as f64 + step_n * n as f64,
                    m,
                    n,
                    source,
                })
                .filter(|p| window.contains(p.t, tol))
                .collect()
        })
        .collect();
    dedupe(rows.into_iter().flatten().collect(), 10.0 * tol)
}

/// Drops points within `radius` of an earlier one.
pub fn dedupe(points: Vec<LatticePoint>, radius: f64) -> Vec<LatticePoint> {
    let mut kept: Vec<LatticePoint> = Vec::with_capacity(points.len());
    for p in points {
        if kept.iter().all(|q| (q.t - p.t).norm() > radius) {
            kept.push(p);
        }
    }
    kept
}

fn check_bounds(window: &Window, mn_bound: i64) -> Result<()> {
    if !window.is_valid() {
        return Err(Error::InvalidConfig("empty window".into()));
    }
    if mn_bound < 1 {
        return Err(Error::InvalidConfig(format!("mn_bound must be at least 1, got {mn_bound}")));
    }
    Ok(())
}

/// `t(m, n) = (-u₀ + iK' + 2mK + 2inK')/(ix₂)` for `|m|, |n| ≤ mn_bound`,
/// restricted to `window`.
pub fn classical_lattice(config: &LaxConfig, window: &Window, mn_bound: i64) -> Result<LatticeReport> {
    check_bounds(window, mn_bound)?;
    let branch = branch_points(config)?;
    let periods = Periods::from_branch(&branch)?;
    let u0 = u0_classical(config, &branch)?.u;
    let den = I * branch.x2;
    let origin = (-u0 + I * periods.kprime) / den;
    let step_m = periods.k * 2.0 / den;
    let step_n = I * periods.kprime * 2.0 / den;
    Ok(LatticeReport {
        source: Source::Classical,
        points: enumerate(Source::Classical, origin, step_m, step_n, window, mn_bound, config.tol),
        offset: u0,
        origin,
        step_m,
        step_n,
        periods,
    })
}

/// `ξ₀ = (x₀/z₀)λ₂` against `λ₀ = i(1 + k)x̃₀/w(x̃₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xi0 {
    pub xi0: Complex64,
    pub lambda0: Complex64,
    pub collapse_residual: f64,
    /// `w(x̃₀)` from the initial velocity, `2iaz₀/(x₁x₂)`.
    pub w_velocity: Complex64,
    /// `w(x̃₀)` continued from `w(0) = +1` along the integration path.
    pub w_path: Complex64,
    /// `μ` at `ξ₀` on the sheet of `u₁ + u₂`: `(x₀⁴ - A² + 4a²B)/(4a²z₀²)`.
    pub mu_xi0: Complex64,
}

pub fn xi0(config: &LaxConfig, branch: &BranchData) -> Result<Xi0> {
    if config.z0 == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroZ0);
    }
    let (xt, w_velocity) = initial_point(config, branch);
    let w_path = u0_classical(config, branch)
        .map(|v| v.w_end)
        .unwrap_or(w_velocity);
    let xi0 = config.x0 / config.z0 * branch.lambda2;
    let lambda0 = I * (ONE + branch.k) * xt / w_velocity;
    let a2 = config.a * config.a;
    let mu_xi0 = (config.x0.powi(4) - config.invariant_a * config.invariant_a
        + a2 * config.invariant_b * 4.0)
        / (a2 * config.z0 * config.z0 * 4.0);
    Ok(Xi0 {
        xi0,
        lambda0,
        collapse_residual: (xi0 - lambda0).norm(),
        w_velocity,
        w_path,
        mu_xi0,
    })
}

/// Abel data on `Σ₁` for the spectral-side lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralOffset {
    /// Single integral to `(ξ₀, μ(ξ₀))`.
    pub u_xi0: Complex64,
    /// Integrals to the two normalized zeros of `q₁`.
    pub u1: Complex64,
    pub u2: Complex64,
    /// `|u_xi0 - (u1 + u2)|` modulo the periods of `Σ₁`.
    pub two_way_residual: f64,
    /// `|sn(u1 + u2) - ξ₀|` on `Σ₁`.
    pub addition_residual: f64,
}

pub fn spectral_offset(config: &LaxConfig, branch: &BranchData) -> Result<SpectralOffset> {
    let x = xi0(config, branch)?;
    let k1sq = branch.k1sq();
    let single = abel_point(x.xi0, x.mu_xi0, k1sq)?;
    let mu_q = branch.q1_zero_mu(config);
    let v1 = abel_point(branch.lhat1 / branch.lambda1, mu_q, k1sq)?;
    let v2 = abel_point(branch.lhat2 / branch.lambda1, mu_q, k1sq)?;
    let sum = v1.u + v2.u;
    let sn_sum = jacobi(sum, k1sq)?.sn;
    Ok(SpectralOffset {
        u_xi0: single.u,
        u1: v1.u,
        u2: v2.u,
        two_way_residual: single.distance_mod(sum),
        addition_residual: (sn_sum - x.xi0).norm(),
    })
}

/// `t(m, n) = (u(ξ₀) + 2K₁ + 4mK₁ + 2inK₁')/(2aλ₂)` restricted to `window`.
pub fn rh_lattice(config: &LaxConfig, window: &Window, mn_bound: i64) -> Result<LatticeReport> {
    check_bounds(window, mn_bound)?;
    let branch = branch_points(config)?;
    let periods = Periods::from_branch(&branch)?;
    let offset = spectral_offset(config, &branch)?.u_xi0;
    let den = config.a * branch.lambda2 * 2.0;
    let origin = (offset + periods.k1 * 2.0) / den;
    let step_m = periods.k1 * 4.0 / den;
    let step_n = I * periods.k1prime * 2.0 / den;
    Ok(LatticeReport {
        source: Source::Rh,
        points: enumerate(Source::Rh, origin, step_m, step_n, window, mn_bound, config.tol),
        offset,
        origin,
        step_m,
        step_n,
        periods,
    })
}

/// One calibrated relation `lhs = ε·rhs + j·shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub epsilon: Complex64,
    pub shift: i64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRelations {
    /// `K = ε K₁'/(i(1 + k)) + j·iK'`
    pub quarter: Orientation,
    /// `K' = ε 2K₁/(i(1 + k)) + j·2iK`
    pub complementary: Orientation,
}

const ORIENTATIONS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

fn calibrate(lhs: Complex64, rhs: Complex64, shift: Complex64) -> Orientation {
    let mut best = Orientation {
        epsilon: ONE,
        shift: 0,
        residual: f64::INFINITY,
    };
    for eps in ORIENTATIONS {
        for j in -3..=3i64 {
            let r = (lhs - eps * rhs - shift * j as f64).norm() / lhs.norm();
            if r < best.residual - 1e-13 {
                best = Orientation {
                    epsilon: eps,
                    shift: j,
                    residual: r,
                };
            }
        }
    }
    best
}

/// Relations between the quarter periods of `Σ` and `Σ₁`, each calibrated
/// by a unimodular constant and an integer period shift.
pub fn period_relations(branch: &BranchData) -> Result<PeriodRelations> {
    let p = Periods::from_branch(branch)?;
    let den = I * (ONE + branch.k);
    Ok(PeriodRelations {
        quarter: calibrate(p.k, p.k1prime / den, I * p.kprime),
        complementary: calibrate(p.kprime, p.k1 * 2.0 / den, I * p.k * 2.0),
    })
}

/// Outcome of matching two point sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    /// `(index in first, index in second, distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_distance: f64,
    pub unmatched_first: Vec<usize>,
    pub unmatched_second: Vec<usize>,
    pub bijection: bool,
    pub coincident: bool,
}

/// Greedy nearest-neighbour matching: pairs are taken in order of
/// increasing distance while both ends are free.
pub fn compare_lattices(l1: &LatticeReport, l2: &LatticeReport, tol: f64) -> MatchReport {
    compare_points(&l1.points, &l2.points, tol)
}

pub fn compare_points(p1: &[LatticePoint], p2: &[LatticePoint], tol: f64) -> MatchReport {
    let mut candidates: Vec<(usize, usize, f64)> = p1
        .iter()
        .enumerate()
        .flat_map(|(i, a)| p2.iter().enumerate().map(move |(j, b)| (i, j, (a.t - b.t).norm())))
        .collect();
    candidates.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used1 = vec![false; p1.len()];
    let mut used2 = vec![false; p2.len()];
    let mut pairs = Vec::new();
    for (i, j, d) in candidates {
        if !used1[i] && !used2[j] {
            used1[i] = true;
            used2[j] = true;
            pairs.push((i, j, d));
        }
    }
    pairs.sort_by_key(|p| p.0);
    let max_distance = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    let unmatched_first: Vec<usize> = (0..p1.len()).filter(|&i| !used1[i]).collect();
    let unmatched_second: Vec<usize> = (0..p2.len()).filter(|&j| !used2[j]).collect();
    let bijection = unmatched_first.is_empty() && unmatched_second.is_empty();
    MatchReport {
        coincident: bijection && max_distance < tol,
        pairs,
        max_distance,
        unmatched_first,
        unmatched_second,
        bijection,
    }
}
