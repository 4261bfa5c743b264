//! Integration of the example system and of the coupled Lax / factor flows
//! along polylines in the complex time plane.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laxcore::{apply_p0, build_l0, invariants, rhs_ode, LaurentMatrixPoly, LaxConfig};
use crate::linalg::{eigenvalues2, expm, max_abs, pair_distance, to_matrix2, CMatrix};
use crate::ode::{self, Outcome, Settings};

/// Number of trailing samples used for the pole fit.
pub const POLE_FIT_WINDOW: usize = 20;
pub const DEFAULT_LAMBDA_COUNT: usize = 16;

/// A polyline in the complex t-plane. Initial data is attached to the first
/// vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub vertices: Vec<Complex64>,
    pub max_step: f64,
    pub tol: f64,
}

impl PathSpec {
    pub fn new(vertices: Vec<Complex64>, max_step: f64, tol: f64) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidConfig("path needs at least one vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("consecutive path vertices coincide".into()));
        }
        if vertices.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidConfig("path vertex is not finite".into()));
        }
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(Error::InvalidConfig(format!("max_step must be positive, got {max_step}")));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
        }
        Ok(Self {
            vertices,
            max_step,
            tol,
        })
    }

    /// Straight segment from 0 to `end` (a single vertex when `end` is 0).
    pub fn segment(end: Complex64, max_step: f64, tol: f64) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let vertices = if end == zero { vec![zero] } else { vec![zero, end] };
        Self::new(vertices, max_step, tol)
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().expect("non-empty")
    }
}

/// Fitted local behaviour `x(t) ≈ c (t - t*)^(-p)` near a singularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleEstimate {
    pub t_star: Complex64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample<S> {
    pub t: Complex64,
    pub state: S,
}

/// `(x, y, z)` along a trajectory.
pub type SystemSample = FlowSample<[Complex64; 3]>;

/// `L_t` coefficients with `G̃₊(λ_j)`, `G̃₋(λ_j)` at a fixed λ sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBundle {
    pub l: LaurentMatrixPoly,
    pub g_plus: Vec<CMatrix>,
    pub g_minus: Vec<CMatrix>,
}

pub type BundleSample = FlowSample<MatrixBundle>;

fn settings(path: &PathSpec) -> Settings {
    Settings {
        tol: path.tol,
        max_step: path.max_step,
        blowup_norm: ode::BLOWUP_NORM,
    }
}

/// Pole location from the last accepted point (one Newton step on `1/x`)
/// and exponent from a log-log least-squares fit over the trailing window.
fn fit_pole(history: &[(Complex64, Complex64, Complex64)]) -> PoleEstimate {
    let &(t, x, dx) = history.last().expect("at least one sample");
    let t_star = t + x / dx;
    let window = &history[history.len().saturating_sub(POLE_FIT_WINDOW)..];
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|(ti, xi, _)| (*ti - t_star).norm() > 0.0 && xi.norm() > 0.0)
        .map(|(ti, xi, _)| ((*ti - t_star).norm().ln(), xi.norm().ln()))
        .collect();
    let exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    } else {
        f64::NAN
    };
    PoleEstimate { t_star, exponent }
}

struct PoleTracker {
    index: usize,
    history: Vec<(Complex64, Complex64, Complex64)>,
}

impl PoleTracker {
    fn new(index: usize) -> Self {
        Self {
            index,
            history: Vec::new(),
        }
    }

    fn push(&mut self, a: &ode::Accepted) {
        if self.history.len() == 4 * POLE_FIT_WINDOW {
            self.history.drain(..2 * POLE_FIT_WINDOW);
        }
        self.history.push((a.t, a.y[self.index], a.dydt[self.index]));
    }

    fn finish(&self, outcome: Outcome) -> Result<()> {
        match outcome {
            Outcome::Completed => Ok(()),
            Outcome::Escaped => Err(Error::BlowUp(fit_pole(&self.history))),
            Outcome::Collapsed { t } => Err(Error::StepCollapse { t }),
        }
    }
}

/// Integrates `x' = -2az, y' = -2xz, z' = 2xy` along `path`.
pub fn integrate_system(config: &LaxConfig, path: &PathSpec) -> Result<Vec<SystemSample>> {
    let a = config.a;
    let mut samples = Vec::new();
    let mut tracker = PoleTracker::new(0);
    let outcome = ode::integrate(
        &path.vertices,
        config.initial_state().to_vec(),
        &settings(path),
        |_, s, ds| {
            let (dx, dy, dz) = rhs_ode(s[0], s[1], s[2], a);
            ds[0] = dx;
            ds[1] = dy;
            ds[2] = dz;
        },
        |acc| {
            tracker.push(acc);
            samples.push(FlowSample {
                t: acc.t,
                state: [acc.y[0], acc.y[1], acc.y[2]],
            });
        },
    );
    tracker.finish(outcome)?;
    Ok(samples)
}

/// Largest deviation of `(A, B)` from their initial values along `samples`.
pub fn invariant_drift(config: &LaxConfig, samples: &[SystemSample]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(da, db), s| {
        let [x, y, z] = s.state;
        let (ia, ib) = invariants(x, y, z, config.a);
        (
            da.max((ia - config.invariant_a).norm()),
            db.max((ib - config.invariant_b).norm()),
        )
    })
}

/// Integrates along the ray `t = r·direction`, `0 ≤ r ≤ max_radius`, and
/// reports the first singularity met.
pub fn detect_blowup(
    config: &LaxConfig,
    ray_direction: Complex64,
    max_radius: f64,
) -> Result<PoleEstimate> {
    if (ray_direction.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "ray direction must have unit modulus, got |d| = {}",
            ray_direction.norm()
        )));
    }
    let path = PathSpec::segment(ray_direction * max_radius, 0.05, config.tol)?;
    match integrate_system(config, &path) {
        Ok(_) => Err(Error::NoBlowUp { radius: max_radius }),
        Err(Error::BlowUp(est)) => Ok(est),
        Err(e) => Err(e),
    }
}

/// Equispaced points `exp(2πij/count)` on the unit circle.
pub fn default_lambda_samples(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / count as f64))
        .collect()
}

fn check_lambdas(lambdas: &[Complex64]) -> Result<()> {
    if lambdas.len() < 8 {
        return Err(Error::InvalidConfig(format!(
            "need at least 8 lambda samples, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|l| (l.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::InvalidConfig("lambda samples must lie on the unit circle".into()));
    }
    for (i, a) in lambdas.iter().enumerate() {
        if lambdas[..i].iter().any(|b| (a - b).norm() < 1e-12) {
            return Err(Error::InvalidConfig("lambda samples must be distinct".into()));
        }
    }
    Ok(())
}

fn plus_at(l: &LaurentMatrixPoly, lambda: Complex64) -> CMatrix {
    l.coeff(0) + l.coeff(1) * lambda
}

fn minus_at(l: &LaurentMatrixPoly, lambda: Complex64) -> CMatrix {
    let mut out = CMatrix::zeros(l.dim(), l.dim());
    for k in -(l.neg_degree() as i32)..0 {
        out += l.coeff(k) * lambda.powi(k);
    }
    out
}

/// Flat layout of one triple: L coefficients, then (G₊, G₋) per λ.
struct TripleLayout {
    n: usize,
    m: usize,
    count: usize,
}

impl TripleLayout {
    fn l_len(&self) -> usize {
        self.n * self.n * (self.m + 2)
    }

    fn block(&self) -> usize {
        self.n * self.n
    }

    fn len(&self) -> usize {
        self.l_len() + 2 * self.count * self.block()
    }

    fn g_plus_at(&self, j: usize) -> usize {
        self.l_len() + 2 * j * self.block()
    }

    fn g_minus_at(&self, j: usize) -> usize {
        self.g_plus_at(j) + self.block()
    }

    fn initial(&self, l0: &LaurentMatrixPoly) -> Vec<Complex64> {
        let mut y = l0.to_flat();
        let ident = CMatrix::identity(self.n, self.n);
        for _ in 0..2 * self.count {
            y.extend(ident.iter().copied());
        }
        y
    }

    fn matrix(&self, y: &[Complex64], at: usize) -> CMatrix {
        CMatrix::from_column_slice(self.n, self.n, &y[at..at + self.block()])
    }

    fn unpack(&self, y: &[Complex64]) -> MatrixBundle {
        MatrixBundle {
            l: LaurentMatrixPoly::from_flat(self.n, self.m, &y[..self.l_len()]),
            g_plus: (0..self.count).map(|j| self.matrix(y, self.g_plus_at(j))).collect(),
            g_minus: (0..self.count).map(|j| self.matrix(y, self.g_minus_at(j))).collect(),
        }
    }

    /// Right-hand side of the triple; `weighted` switches A₀ on.
    fn rhs(
        &self,
        config: &LaxConfig,
        lambdas: &[Complex64],
        y: &[Complex64],
        dy: &mut [Complex64],
        weighted: bool,
    ) {
        let l = LaurentMatrixPoly::from_flat(self.n, self.m, &y[..self.l_len()]);
        let a0 = if weighted {
            apply_p0(&l, &config.p0_weights).expect("weights validated at entry")
        } else {
            CMatrix::zeros(self.n, self.n)
        };
        dy[..self.l_len()].copy_from_slice(&l.lax_velocity(&a0).to_flat());
        for (j, &lambda) in lambdas.iter().enumerate() {
            let gp = self.matrix(y, self.g_plus_at(j));
            let gm = self.matrix(y, self.g_minus_at(j));
            let dgp = (plus_at(&l, lambda) + &a0) * gp;
            let dgm = gm * (minus_at(&l, lambda) - &a0);
            let (p, q) = (self.g_plus_at(j), self.g_minus_at(j));
            dy[p..p + self.block()].copy_from_slice(dgp.as_slice());
            dy[q..q + self.block()].copy_from_slice(dgm.as_slice());
        }
    }
}

fn x_index(layout: &TripleLayout) -> usize {
    // L^{(0)}[(0, 1)], column-major inside the k = 0 block.
    layout.m * layout.block() + layout.n
}

/// Co-integrates `dL/dt = [L⁺ + A₀, L]`, `dG̃₊/dt = (L⁺ + A₀)G̃₊` and
/// `dG̃₋/dt = G̃₋(L⁻ - A₀)` from `(L₀, I, I)`.
pub fn integrate_lax_triple(
    config: &LaxConfig,
    path: &PathSpec,
    lambda_samples: &[Complex64],
) -> Result<Vec<BundleSample>> {
    check_lambdas(lambda_samples)?;
    let l0 = build_l0(config);
    apply_p0(&l0, &config.p0_weights)?;
    let layout = TripleLayout {
        n: l0.dim(),
        m: l0.neg_degree(),
        count: lambda_samples.len(),
    };
    let mut samples = Vec::new();
    let mut tracker = PoleTracker::new(x_index(&layout));
    let outcome = ode::integrate(
        &path.vertices,
        layout.initial(&l0),
        &settings(path),
        |_, y, dy| layout.rhs(config, lambda_samples, y, dy, true),
        |acc| {
            tracker.push(acc);
            samples.push(FlowSample {
                t: acc.t,
                state: layout.unpack(&acc.y),
            });
        },
    );
    tracker.finish(outcome)?;
    Ok(samples)
}

/// Residuals of the triple against the closed-form statements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleResiduals {
    /// max ‖G̃₋G̃₊ − exp(tL₀)‖ (largest entry modulus).
    pub product: f64,
    /// max distance between eigenvalue pairs of `L_t(λ)` and `L₀(λ)`.
    pub isospectral: f64,
    /// max |det G̃₊ det G̃₋ − 1|.
    pub determinant: f64,
}

pub fn triple_residuals(
    config: &LaxConfig,
    samples: &[BundleSample],
    lambda_samples: &[Complex64],
) -> TripleResiduals {
    let l0 = build_l0(config);
    let base: Vec<(CMatrix, [Complex64; 2])> = lambda_samples
        .iter()
        .map(|&lam| {
            let e = l0.eval(lam);
            let ev = eigenvalues2(&to_matrix2(&e));
            (e, ev)
        })
        .collect();
    let mut out = TripleResiduals {
        product: 0.0,
        isospectral: 0.0,
        determinant: 0.0,
    };
    for s in samples {
        for (j, &lam) in lambda_samples.iter().enumerate() {
            let (l0_lam, ev0) = &base[j];
            let gp = &s.state.g_plus[j];
            let gm = &s.state.g_minus[j];
            let exact = expm(&(l0_lam * s.t));
            out.product = out.product.max(max_abs(&(gm * gp - exact)));
            let ev = eigenvalues2(&to_matrix2(&s.state.l.eval(lam)));
            out.isospectral = out.isospectral.max(pair_distance(ev, *ev0));
            let det = gp.determinant() * gm.determinant();
            out.determinant = out.determinant.max((det - 1.0).norm());
        }
    }
    out
}

/// Which product defines the normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerOrder {
    /// `F = G̃₊ Ĝ₊⁻¹`
    TildeTimesHatInverse,
    /// `F = Ĝ₊⁻¹ G̃₊`
    HatInverseTimesTilde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerReport {
    pub order: NormalizerOrder,
    /// `F_t` at each sample time, taken at the first λ sample.
    pub f_samples: Vec<FlowSample<CMatrix>>,
    pub lambda_independence_residual: f64,
    /// Same residual for the other order, for comparison.
    pub other_order_residual: f64,
    /// max ‖dF/dt − A₀F‖ over interior samples (finite differences).
    pub ode_residual: f64,
}

/// Derivative weights at `x0` for interpolation through `nodes`
/// (Fornberg's recursion, first derivative only).
fn fd_weights(x0: Complex64, nodes: &[Complex64]) -> Vec<Complex64> {
    let n = nodes.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut c = vec![[zero; 2]; n];
    c[0][0] = Complex64::new(1.0, 0.0);
    let mut c1 = Complex64::new(1.0, 0.0);
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = Complex64::new(1.0, 0.0);
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (c[i - 1][k - 1] * k as f64 - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - c[j][k - 1] * k as f64) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// Integrates the tilde flow (configured A₀) and the hat flow (A₀ = 0)
/// jointly and extracts the normalizer `F_t`.
pub fn check_normalizer(
    config: &LaxConfig,
    path: &PathSpec,
    lambda_samples: &[Complex64],
) -> Result<NormalizerReport> {
    check_lambdas(lambda_samples)?;
    let l0 = build_l0(config);
    apply_p0(&l0, &config.p0_weights)?;
    let layout = TripleLayout {
        n: l0.dim(),
        m: l0.neg_degree(),
        count: lambda_samples.len(),
    };
    let half = layout.len();
    let mut y0 = layout.initial(&l0);
    y0.extend(layout.initial(&l0));

    let mut bundles: Vec<(Complex64, MatrixBundle, MatrixBundle)> = Vec::new();
    let mut tracker = PoleTracker::new(x_index(&layout));
    let outcome = ode::integrate(
        &path.vertices,
        y0,
        &settings(path),
        |_, y, dy| {
            let (dt, dh) = dy.split_at_mut(half);
            layout.rhs(config, lambda_samples, &y[..half], dt, true);
            layout.rhs(config, lambda_samples, &y[half..], dh, false);
        },
        |acc| {
            tracker.push(acc);
            bundles.push((acc.t, layout.unpack(&acc.y[..half]), layout.unpack(&acc.y[half..])));
        },
    );
    tracker.finish(outcome)?;

    let mut per_order = Vec::new();
    for order in [
        NormalizerOrder::TildeTimesHatInverse,
        NormalizerOrder::HatInverseTimesTilde,
    ] {
        let mut f_all: Vec<Vec<CMatrix>> = Vec::with_capacity(bundles.len());
        let mut residual = 0.0f64;
        for (_, tilde, hat) in &bundles {
            let mut fs = Vec::with_capacity(lambda_samples.len());
            for (j, &lambda) in lambda_samples.iter().enumerate() {
                let h = &hat.g_plus[j];
                let scale = max_abs(h).powi(h.nrows() as i32);
                let inv = match h.clone().try_inverse() {
                    Some(inv) if h.determinant().norm() > 1e-12 * scale.max(1e-300) => inv,
                    _ => return Err(Error::SingularFactor { lambda }),
                };
                fs.push(match order {
                    NormalizerOrder::TildeTimesHatInverse => &tilde.g_plus[j] * inv,
                    NormalizerOrder::HatInverseTimesTilde => inv * &tilde.g_plus[j],
                });
            }
            for i in 0..fs.len() {
                for j in i + 1..fs.len() {
                    residual = residual.max(max_abs(&(&fs[i] - &fs[j])));
                }
            }
            f_all.push(fs);
        }
        per_order.push((order, residual, f_all));
    }
    let best = if per_order[0].1 <= per_order[1].1 { 0 } else { 1 };
    let other_order_residual = per_order[1 - best].1;
    let (order, lambda_independence_residual, f_all) = per_order.swap_remove(best);

    let f_first: Vec<CMatrix> = f_all.iter().map(|fs| fs[0].clone()).collect();
    let mut ode_residual = 0.0f64;
    let stencil = 5usize;
    if f_first.len() >= stencil {
        for i in 0..f_first.len() {
            let lo = i.saturating_sub(stencil / 2).min(f_first.len() - stencil);
            let nodes: Vec<Complex64> = bundles[lo..lo + stencil].iter().map(|b| b.0).collect();
            if i < 2 || i + 2 >= f_first.len() {
                continue;
            }
            let w = fd_weights(bundles[i].0, &nodes);
            let mut deriv = CMatrix::zeros(layout.n, layout.n);
            for (k, wk) in w.iter().enumerate() {
                deriv += &f_first[lo + k] * *wk;
            }
            let a0 = apply_p0(&bundles[i].1.l, &config.p0_weights)?;
            ode_residual = ode_residual.max(max_abs(&(deriv - a0 * &f_first[i])));
        }
    }

    let f_samples = bundles
        .iter()
        .zip(f_first)
        .map(|(b, f)| FlowSample { t: b.0, state: f })
        .collect();
    Ok(NormalizerReport {
        order,
        f_samples,
        lambda_independence_residual,
        other_order_residual,
        ode_residual,
    })
}
