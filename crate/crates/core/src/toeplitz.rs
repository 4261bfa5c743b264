//! Finite sections of the block Toeplitz operator with symbol
//! `G(λ) = exp(tL₀(λ))` on the unit circle, and the singularity detector
//! built on their smallest singular value.

use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laxcore::{build_l0, LaxConfig};
use crate::linalg::{expm, singular_values, smallest_singular_pair, to_matrix2, CMatrix};
use crate::numeric::Window;
use crate::singlattice::{LatticePoint, Source};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const ALIAS_LIMIT: f64 = 1e-10;
/// Kernel vectors with a larger RH residual are mirror dips of the
/// finite section, not singularities of the flow.
pub const CERTIFY_LIMIT: f64 = 1e-2;
pub const DEFAULT_SCHEDULE: [usize; 3] = [16, 32, 64];
const SVD_LIMIT: usize = 64;

/// `G(λ_j)` at `λ_j = exp(2πij/grid_size)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSamples {
    pub t: Complex64,
    pub grid_size: usize,
    pub values: Vec<Matrix2<Complex64>>,
}

impl SymbolSamples {
    pub fn lambda(&self, j: usize) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * j as f64 / self.grid_size as f64)
    }

    pub fn max_det_deviation(&self) -> f64 {
        self.values
            .iter()
            .map(|g| (g.determinant() - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Smallest admissible sampling grid for truncation order `n`.
pub fn grid_for(n: usize) -> usize {
    (8 * n).next_power_of_two().max(256)
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 64 || !grid_size.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "grid_size must be a power of two >= 64, got {grid_size}"
        )));
    }
    Ok(())
}

/// Samples `G = exp(tL₀)` on the circle.
pub fn symbol_exp_tl0(config: &LaxConfig, t: Complex64, grid_size: usize) -> Result<SymbolSamples> {
    check_grid(grid_size)?;
    let l0 = build_l0(config);
    let values = (0..grid_size)
        .map(|j| {
            let lam = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / grid_size as f64);
            expm(&(to_matrix2(&l0.eval(lam)) * t))
        })
        .collect();
    Ok(SymbolSamples {
        t,
        grid_size,
        values,
    })
}

/// Samples of an arbitrary symbol (used for controls).
pub fn symbol_from_fn<F>(grid_size: usize, f: F) -> Result<SymbolSamples>
where
    F: Fn(Complex64) -> Matrix2<Complex64>,
{
    check_grid(grid_size)?;
    let values = (0..grid_size)
        .map(|j| f(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / grid_size as f64)))
        .collect();
    Ok(SymbolSamples {
        t: Complex64::new(0.0, 0.0),
        grid_size,
        values,
    })
}

/// Winding number of `det G` around the origin along the sample loop.
pub fn det_winding(samples: &SymbolSamples) -> i64 {
    let dets: Vec<Complex64> = samples.values.iter().map(|g| g.determinant()).collect();
    let total: f64 = (0..dets.len())
        .map(|j| (dets[(j + 1) % dets.len()] / dets[j]).arg())
        .sum();
    (total / (2.0 * PI)).round() as i64
}

/// Fourier coefficients `Ĝ_k`, `k = 0..M-1` (negative `k` at `M + k`).
fn fourier(samples: &SymbolSamples) -> Vec<Matrix2<Complex64>> {
    let m = samples.grid_size;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let mut out = vec![Matrix2::zeros(); m];
    for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let mut buf: Vec<Complex64> = samples.values.iter().map(|g| g[(r, c)]).collect();
        fft.process(&mut buf);
        for (k, v) in buf.into_iter().enumerate() {
            out[k][(r, c)] = v / m as f64;
        }
    }
    out
}

fn block_norm(b: &Matrix2<Complex64>) -> f64 {
    b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `2(N+1) x 2(N+1)` block Toeplitz array `[Ĝ_{i-j}]`, `i, j ∈ [0, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzTruncation {
    pub n: usize,
    /// `Ĝ_k` for `k = -2N..=2N`, stored at index `k + 2N`.
    pub blocks: Vec<Matrix2<Complex64>>,
    pub matrix: CMatrix,
    /// Coefficient mass beyond `|k| = 2N`, relative to the total.
    pub tail: f64,
}

impl ToeplitzTruncation {
    pub fn block(&self, k: i64) -> &Matrix2<Complex64> {
        &self.blocks[(k + 2 * self.n as i64) as usize]
    }

    pub fn dim(&self) -> usize {
        2 * (self.n + 1)
    }
}

pub fn assemble_truncation(samples: &SymbolSamples, n: usize) -> Result<ToeplitzTruncation> {
    let m = samples.grid_size;
    if 4 * n >= m {
        return Err(Error::InvalidConfig(format!(
            "truncation order {n} needs grid_size > {}, got {m}",
            4 * n
        )));
    }
    let coeffs = fourier(samples);
    let at = |k: i64| coeffs[k.rem_euclid(m as i64) as usize];
    let band = 2 * n as i64;
    let blocks: Vec<Matrix2<Complex64>> = (-band..=band).map(at).collect();
    let total: f64 = coeffs.iter().map(block_norm).sum();
    let tail_abs: f64 = (band + 1..=(m as i64) / 2)
        .map(|k| block_norm(&at(k)) + if k < m as i64 / 2 { block_norm(&at(-k)) } else { 0.0 })
        .sum();
    let tail = if total > 0.0 { tail_abs / total } else { 0.0 };
    if tail > ALIAS_LIMIT {
        return Err(Error::AliasRisk {
            cutoff: band as usize,
            tail,
        });
    }
    let dim = 2 * (n + 1);
    let mut matrix = CMatrix::zeros(dim, dim);
    for i in 0..=n {
        for j in 0..=n {
            let b = &blocks[(i as i64 - j as i64 + band) as usize];
            matrix.fixed_view_mut::<2, 2>(2 * i, 2 * j).copy_from(b);
        }
    }
    Ok(ToeplitzTruncation {
        n,
        blocks,
        matrix,
        tail,
    })
}

fn nalgebra_pair(t: &CMatrix) -> (f64, DVector<Complex64>) {
    let svd = t.clone().svd(false, true);
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    (sigma, svd.v_t.expect("requested").row(idx).adjoint())
}

fn full_svd_pair(t: &CMatrix) -> (f64, DVector<Complex64>) {
    smallest_singular_pair(t).unwrap_or_else(|| nalgebra_pair(t))
}

/// Smallest singular value and its right singular vector.
fn smallest_pair(t: &CMatrix) -> (f64, DVector<Complex64>) {
    if t.nrows() <= 2 * (SVD_LIMIT + 1) {
        full_svd_pair(t)
    } else {
        inverse_iteration(t).unwrap_or_else(|| full_svd_pair(t))
    }
}

/// Block inverse iteration on `TᴴT` with a Rayleigh-Ritz step, so that
/// clustered small singular values do not stall convergence. `None` when the
/// relative residual of the singular pair stays above `1e-12`.
fn inverse_iteration(t: &CMatrix) -> Option<(f64, DVector<Complex64>)> {
    const BLOCK: usize = 8;
    let n = t.nrows();
    let k = BLOCK.min(n);
    let lu = t.clone().lu();
    let lu_h = t.adjoint().lu();
    let scale = t.norm().powi(2).max(f64::MIN_POSITIVE);
    let mut q = CMatrix::from_fn(n, k, |i, j| {
        Complex64::new((0.37 * i as f64 + 1.3 * j as f64).sin(), (0.11 * i as f64 * (j + 1) as f64).cos())
    })
    .qr()
    .q();
    for _ in 0..100 {
        let y = match lu_h.solve(&q).and_then(|y| lu.solve(&y)) {
            Some(z) if z.iter().all(|v| v.is_finite()) => z,
            // Numerically singular: the kernel is found by the full SVD.
            _ => return None,
        };
        q = y.qr().q();
        let (s, v) = full_svd_pair(&(t * &q));
        let x = &q * v;
        let tx = t * &x;
        let residual = (t.adjoint() * &tx - &x * Complex64::new(s * s, 0.0)).norm() / scale;
        if residual < 1e-12 {
            return Some((tx.norm(), x));
        }
    }
    None
}

pub fn sigma_min(t: &ToeplitzTruncation) -> f64 {
    if t.matrix.nrows() <= 2 * (SVD_LIMIT + 1) {
        singular_values(&t.matrix)
            .and_then(|v| v.last().copied())
            .unwrap_or_else(|| nalgebra_pair(&t.matrix).0)
    } else {
        smallest_pair(&t.matrix).0
    }
}

/// `σ_min` of the order-`n` section at time `t`.
pub fn sigma_min_at(config: &LaxConfig, t: Complex64, n: usize) -> Result<f64> {
    let samples = symbol_exp_tl0(config, t, grid_for(n))?;
    Ok(sigma_min(&assemble_truncation(&samples, n)?))
}

/// Approximate kernel element of `T_G`: the coefficients of `Φ⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    pub phi_plus: Vec<[Complex64; 2]>,
    pub sigma_min: f64,
    /// `max_j |P⁺(GΦ⁺)(λ_j)| / max_j |Φ⁺(λ_j)|`.
    pub rh_residual: f64,
}

pub fn kernel_vector(
    t: &ToeplitzTruncation,
    samples: &SymbolSamples,
    threshold: f64,
) -> Result<KernelVector> {
    let (sigma, v) = smallest_pair(&t.matrix);
    if sigma > threshold {
        return Err(Error::NotSingular { sigma, threshold });
    }
    let phi: Vec<[Complex64; 2]> = (0..=t.n).map(|i| [v[2 * i], v[2 * i + 1]]).collect();
    let rh_residual = rh_residual(&phi, samples);
    Ok(KernelVector {
        phi_plus: phi,
        sigma_min: sigma,
        rh_residual,
    })
}

fn rh_residual(phi: &[[Complex64; 2]], samples: &SymbolSamples) -> f64 {
    let m = samples.grid_size;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    // Φ⁺(λ_j) = Σ_i φ_i λ_j^i via an inverse DFT of the zero-padded coefficients.
    let mut comp = [vec![Complex64::new(0.0, 0.0); m], vec![Complex64::new(0.0, 0.0); m]];
    for (i, p) in phi.iter().enumerate() {
        comp[0][i] = p[0];
        comp[1][i] = p[1];
    }
    inv.process(&mut comp[0]);
    inv.process(&mut comp[1]);
    let phi_max = (0..m)
        .map(|j| (comp[0][j].norm_sqr() + comp[1][j].norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    let mut prod = [vec![Complex64::new(0.0, 0.0); m], vec![Complex64::new(0.0, 0.0); m]];
    for j in 0..m {
        let g = &samples.values[j];
        prod[0][j] = g[(0, 0)] * comp[0][j] + g[(0, 1)] * comp[1][j];
        prod[1][j] = g[(1, 0)] * comp[0][j] + g[(1, 1)] * comp[1][j];
    }
    for p in prod.iter_mut() {
        fwd.process(p);
        for (k, c) in p.iter_mut().enumerate() {
            if k >= m / 2 {
                *c = Complex64::new(0.0, 0.0);
            } else {
                *c /= m as f64;
            }
        }
        inv.process(p);
    }
    let proj_max = (0..m)
        .map(|j| (prod[0][j].norm_sqr() + prod[1][j].norm_sqr()).sqrt())
        .fold(0.0, f64::max);
    if phi_max > 0.0 {
        proj_max / phi_max
    } else {
        f64::INFINITY
    }
}

/// Derivative-free minimization in the plane.
fn nelder_mead<F>(f: F, start: Complex64, size: f64, xtol: f64, max_evals: usize) -> (Complex64, f64, usize)
where
    F: Fn(Complex64) -> f64,
{
    let mut simplex: Vec<(Complex64, f64)> = [
        start,
        start + Complex64::new(size, 0.0),
        start + Complex64::new(0.0, size),
    ]
    .into_iter()
    .map(|p| (p, f(p)))
    .collect();
    let mut evals = 3;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let spread = simplex[1..].iter().map(|p| (p.0 - best).norm()).fold(0.0, f64::max);
        if spread < xtol {
            break;
        }
        let centroid = (simplex[0].0 + simplex[1].0) * 0.5;
        let worst = simplex[2];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(reflect);
        evals += 1;
        if fr < simplex[0].1 {
            let expand = centroid + (centroid - worst.0) * 2.0;
            let fe = f(expand);
            evals += 1;
            simplex[2] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflect, fr);
        } else {
            let (contract, fc) = if fr < worst.1 {
                let p = centroid + (reflect - centroid) * 0.5;
                (p, f(p))
            } else {
                let p = centroid + (worst.0 - centroid) * 0.5;
                (p, f(p))
            };
            evals += 1;
            if fc < worst.1.min(fr) {
                simplex[2] = (contract, fc);
            } else {
                for i in 1..3 {
                    let p = best + (simplex[i].0 - best) * 0.5;
                    simplex[i] = (p, f(p));
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, evals)
}

const NM_XTOL: f64 = 5e-9;
const SCAN_XTOL: f64 = 1e-7;
const NM_MAX_EVALS: usize = 400;
const CONVERGED: f64 = 1e-6;
/// Initial simplex sizes: from the guess, between orders, and on restart.
const FIRST_SIZE: f64 = 0.02;
const LEVEL_SIZE: f64 = 2e-6;
const RESTART_SIZE: f64 = 1e-7;

/// Local minimizer of `σ_min(t)` at fixed `n`.
fn minimize_at(config: &LaxConfig, start: Complex64, n: usize, size: f64, xtol: f64) -> (Complex64, f64) {
    let grid = grid_for(n);
    let f = |t: Complex64| {
        symbol_exp_tl0(config, t, grid)
            .and_then(|s| assemble_truncation(&s, n))
            .map(|tr| sigma_min(&tr))
            .unwrap_or(f64::INFINITY)
    };
    let (t, s, _) = nelder_mead(f, start, size, xtol, NM_MAX_EVALS);
    (t, s)
}

/// Refined singularity with the data of the last refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub point: LatticePoint,
    pub sigma_min: f64,
    /// Movement of the minimizer on the final restart.
    pub displacement: f64,
    pub n: usize,
}

/// Minimizes `σ_min` from `t_guess` through each order in `n_schedule`,
/// restarting once at the last order; converged when the restart moves the
/// minimizer by less than `1e-6`.
pub fn refine_singularity(config: &LaxConfig, t_guess: Complex64, n_schedule: &[usize]) -> Result<Refined> {
    if n_schedule.is_empty() || n_schedule.contains(&0) {
        return Err(Error::InvalidConfig("refinement schedule needs positive orders".into()));
    }
    let mut t = t_guess;
    let mut size = FIRST_SIZE;
    let mut sigma = f64::INFINITY;
    for &n in n_schedule {
        (t, sigma) = minimize_at(config, t, n, size, NM_XTOL);
        size = LEVEL_SIZE;
    }
    let last = *n_schedule.last().expect("non-empty");
    let (t_restart, s_restart) = minimize_at(config, t, last, RESTART_SIZE, NM_XTOL);
    let displacement = (t_restart - t).norm();
    if displacement >= CONVERGED {
        return Err(Error::NoConvergence { displacement });
    }
    if s_restart < sigma {
        t = t_restart;
        sigma = s_restart;
    }
    Ok(Refined {
        point: LatticePoint {
            t,
            m: 0,
            n: 0,
            source: Source::Toeplitz,
        },
        sigma_min: sigma,
        displacement,
        n: last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub t: Complex64,
    pub sigma_min: f64,
    pub rh_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub t: Complex64,
    pub sigma_min: f64,
    /// Norm of the leading 2x2 block of the inverse section; it has a pole
    /// at each singularity, with a basin much wider than the σ_min dip.
    pub corner_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub window: Window,
    pub resolution: usize,
    pub n: usize,
    pub threshold: f64,
    /// Row-major, imaginary part outer.
    pub samples: Vec<ScanSample>,
    /// Certified singularities inside the window.
    pub candidates: Vec<Candidate>,
    /// Dips of the finite section whose kernel vector fails the RH check.
    pub mirrors: Vec<Candidate>,
    /// Largest `|Δσ_min| / Δt` between grid neighbours.
    pub slope_bound: f64,
}

fn grid_point(window: &Window, resolution: usize, i: usize, j: usize) -> Complex64 {
    let d = (resolution - 1) as f64;
    Complex64::new(
        window.re_min + (window.re_max - window.re_min) * j as f64 / d,
        window.im_min + (window.im_max - window.im_min) * i as f64 / d,
    )
}

fn corner_norm(t: &ToeplitzTruncation) -> f64 {
    let d = t.dim();
    let mut e = CMatrix::zeros(d, 2);
    e[(0, 0)] = Complex64::new(1.0, 0.0);
    e[(1, 1)] = Complex64::new(1.0, 0.0);
    match t.matrix.clone().lu().solve(&e) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x.rows(0, 2).norm(),
        _ => f64::INFINITY,
    }
}

fn scan_sample(config: &LaxConfig, t: Complex64, n: usize) -> Result<ScanSample> {
    let samples = symbol_exp_tl0(config, t, grid_for(n))?;
    let tr = assemble_truncation(&samples, n)?;
    Ok(ScanSample {
        t,
        sigma_min: sigma_min(&tr),
        corner_norm: corner_norm(&tr),
    })
}

/// Grid points that are strict local extrema of `key` over their 8 neighbours
/// (ties broken by index).
fn local_minima<F: Fn(usize) -> f64>(resolution: usize, key: F) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..resolution {
        for j in 0..resolution {
            let idx = i * resolution + j;
            let v = key(idx);
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di == 0 && dj == 0) || ii < 0 || jj < 0 || ii >= resolution as i64 || jj >= resolution as i64 {
                        continue;
                    }
                    let other = ii as usize * resolution + jj as usize;
                    let w = key(other);
                    if w < v || (w == v && other < idx) {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push(idx);
            }
        }
    }
    out
}

/// Grid scan of `σ_min`, followed by refinement of each local minimum and
/// kernel-vector certification. Local maxima of the corner norm seed the
/// refinement as well, since near-vertical growth of `G` makes the `σ_min`
/// dips narrower than any practical grid spacing.
pub fn scan(config: &LaxConfig, window: &Window, resolution: usize, n: usize, threshold: f64) -> Result<ScanResult> {
    if resolution < 16 {
        return Err(Error::InvalidConfig(format!("resolution must be at least 16, got {resolution}")));
    }
    if !window.is_valid() {
        return Err(Error::InvalidConfig("empty window".into()));
    }
    let samples: Vec<ScanSample> = (0..resolution * resolution)
        .into_par_iter()
        .map(|idx| scan_sample(config, grid_point(window, resolution, idx / resolution, idx % resolution), n))
        .collect::<Result<_>>()?;

    let mut slope_bound = 0.0f64;
    for i in 0..resolution {
        for j in 0..resolution {
            let here = &samples[i * resolution + j];
            for (ii, jj) in [(i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                if ii < resolution && jj < resolution {
                    let there = &samples[ii * resolution + jj];
                    slope_bound = slope_bound.max((there.sigma_min - here.sigma_min).abs() / (there.t - here.t).norm());
                }
            }
        }
    }

    let mut seeds = local_minima(resolution, |k| samples[k].sigma_min);
    seeds.extend(local_minima(resolution, |k| -samples[k].corner_norm));
    seeds.sort_unstable();
    seeds.dedup();

    let spacing = (window.re_max - window.re_min).max(window.im_max - window.im_min) / (resolution - 1) as f64;
    let grid = grid_for(n);
    let refined: Vec<Option<Candidate>> = seeds
        .par_iter()
        .map(|&k| -> Result<Option<Candidate>> {
            let (t, s) = minimize_at(config, samples[k].t, n, 0.5 * spacing, SCAN_XTOL);
            if s >= threshold {
                return Ok(None);
            }
            let symbol = symbol_exp_tl0(config, t, grid)?;
            let tr = assemble_truncation(&symbol, n)?;
            let kv = kernel_vector(&tr, &symbol, threshold)?;
            Ok(Some(Candidate {
                t,
                sigma_min: kv.sigma_min,
                rh_residual: kv.rh_residual,
            }))
        })
        .collect::<Result<_>>()?;

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut mirrors: Vec<Candidate> = Vec::new();
    let merge = 1e-4;
    for c in refined.into_iter().flatten() {
        if !window.contains(c.t, 1e-9) {
            continue;
        }
        let bucket = if c.rh_residual < CERTIFY_LIMIT {
            &mut candidates
        } else {
            &mut mirrors
        };
        if bucket.iter().all(|d| (d.t - c.t).norm() > merge) {
            bucket.push(c);
        }
    }
    Ok(ScanResult {
        window: *window,
        resolution,
        n,
        threshold,
        samples,
        candidates,
        mirrors,
        slope_bound,
    })
}
