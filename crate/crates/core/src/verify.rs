//! Self-check suites run by `laxlab verify`: each check reports a residual
//! against a tolerance.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::elliptic::{abel_u, complete_k, jacobi, jacobi_sn, theta1, Modulus, Nome};
use crate::error::{Error, Result};
use crate::flowint::{
    check_normalizer, default_lambda_samples, detect_blowup, integrate_lax_triple, integrate_system,
    invariant_drift, triple_residuals, PathSpec, DEFAULT_LAMBDA_COUNT,
};
use crate::laxcore::{LaxConfig, P0Weights};
use crate::numeric::{gauss_legendre, Window, I};
use crate::singlattice::{classical_lattice, compare_lattices, period_relations, rh_lattice};
use crate::surfaces::{branch_points, moduli_relation, phi_finite, pullback_residual, Curve, CurvePoint};
use crate::toeplitz::{
    assemble_truncation, det_winding, refine_singularity, scan, sigma_min, symbol_exp_tl0, symbol_from_fn,
    DEFAULT_SCHEDULE,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub window: Window,
    pub mn_bound: i64,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            window: Window::centered(4.0, 4.0),
            mn_bound: 12,
            seed: 7,
        }
    }
}

struct Suite<'a> {
    name: &'a str,
    out: &'a mut Vec<Check>,
}

impl Suite<'_> {
    /// `value < tolerance` passes.
    fn below<E: ToString>(&mut self, name: &str, value: std::result::Result<f64, E>, tolerance: f64) {
        let (value, note) = match value {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.out.push(Check {
            suite: self.name.into(),
            name: name.into(),
            value,
            tolerance,
            pass: value < tolerance,
            note,
        });
    }

    fn holds(&mut self, name: &str, ok: Result<(bool, String)>) {
        let (pass, note) = match ok {
            Ok((p, n)) => (p, n),
            Err(e) => (false, e.to_string()),
        };
        self.out.push(Check {
            suite: self.name.into(),
            name: name.into(),
            value: if pass { 0.0 } else { 1.0 },
            tolerance: 0.5,
            pass,
            note: Some(note),
        });
    }
}

fn cplx(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

/// Composite Gauss-Legendre value of `∫₀^{π/2} dθ / √(1 - m sin²θ)`.
fn k_by_quadrature(m: Complex64) -> Complex64 {
    let (x, w) = gauss_legendre(20);
    let panels = 16;
    let h = 0.5 * PI / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            let s = (mid + 0.5 * h * xi).sin();
            sum += 0.5 * h * wi / (1.0 - m * s * s).sqrt();
        }
    }
    sum
}

fn elliptic_suite(config: &LaxConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let mut s = Suite { name: "elliptic", out };
    let addition = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let m = cplx(rng, 0.9);
            let (u, v) = (cplx(rng, 0.8), cplx(rng, 0.8));
            let (a, b, sum) = (jacobi(u, m)?, jacobi(v, m)?, jacobi(u + v, m)?);
            let num = a.sn * b.cn * b.dn + b.sn * a.cn * a.dn;
            let den = 1.0 - m * a.sn * a.sn * b.sn * b.sn;
            worst = worst.max((sum.sn * den - num).norm() / (1.0 + num.norm()));
        }
        Ok(worst)
    })();
    s.below("sn addition formula (100 pairs)", addition, 1e-12);

    let complete = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let m = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..2.0 * PI));
            worst = worst.max((complete_k(m)? - k_by_quadrature(m)).norm());
        }
        Ok(worst)
    })();
    s.below("complete K vs quadrature (20 moduli)", complete, 1e-10);

    let round_trip = (|| -> Result<f64> {
        let branch = branch_points(config)?;
        let ksq = branch.ksq();
        let bps = crate::elliptic::branch_points(ksq);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 50 {
            let x = cplx(rng, 1.2);
            if bps.iter().any(|b| (x - b).norm() < 0.05) {
                continue;
            }
            let u = abel_u(x, ksq, None)?.u;
            worst = worst.max((jacobi_sn(u, ksq)? - x).norm());
            done += 1;
        }
        Ok(worst)
    })();
    s.below("Abel round trip sn(u(x)) = x (50 points)", round_trip, 1e-10);

    let theta = (|| -> Result<f64> {
        let nome = Nome::from_tau(Complex64::new(0.1, 0.8))?;
        let q = nome.q();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let u = cplx(rng, 1.0);
            let t = theta1(u, &nome);
            worst = worst.max((theta1(-u, &nome) + t).norm());
            let shifted = theta1(u + PI * nome.tau(), &nome);
            let expected = -t * (-2.0 * I * u).exp() / q;
            worst = worst.max((shifted - expected).norm() / (1.0 + expected.norm()));
        }
        Ok(worst)
    })();
    s.below("theta1 oddness and quasi-periodicity", theta, 1e-12);

    let periods = (|| -> Result<f64> {
        let m = Modulus::new(branch_points(config)?.ksq())?;
        let p = m.periods();
        let u = Complex64::new(0.3, 0.2);
        let base = jacobi_sn(u, m.ksq)?;
        Ok((jacobi_sn(u + p.w1, m.ksq)? - base)
            .norm()
            .max((jacobi_sn(u + p.w2, m.ksq)? - base).norm()))
    })();
    s.below("sn periods 4K, 2iK'", periods, 1e-10);
}

fn surfaces_suite(config: &LaxConfig, rng: &mut ChaCha8Rng, out: &mut Vec<Check>) {
    let mut s = Suite { name: "surfaces", out };
    let branch = match branch_points(config) {
        Ok(b) => b,
        Err(e) => {
            s.below("branch points", Err::<f64, _>(e), 0.0);
            return;
        }
    };
    let (k, ksq, k1sq) = (branch.k, branch.ksq(), branch.k1sq());
    let mut points = Vec::new();
    while points.len() < 50 {
        let x = cplx(rng, 1.5);
        let p = CurvePoint::above(Curve::Sigma, x, ksq, Complex64::new(1.0, 0.0));
        let one = Complex64::new(1.0, 0.0);
        let d = [one, -one, one / k, -one / k].iter().map(|b| (x - b).norm()).fold(f64::INFINITY, f64::min);
        if d > 0.05 {
            points.push(p);
        }
    }
    let image = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        for p in &points {
            let q = phi_finite(*p, k)?;
            worst = worst.max(q.residual(k1sq) / (1.0 + q.x.norm_sqr() * q.x.norm_sqr()));
        }
        Ok(worst)
    })();
    s.below("phi image lies on the spectral curve (50 points)", image, 1e-10);

    let pullback = (|| -> Result<f64> {
        let mut worst = 0.0f64;
        let mut worst_ratio = 0.0f64;
        for p in points.iter().take(10) {
            let (r1, r2, r3) = (
                pullback_residual(*p, k, 1e-2),
                pullback_residual(*p, k, 5e-3),
                pullback_residual(*p, k, 1e-5),
            );
            let (r1, r2, r3) = match (r1, r2, r3) {
                (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                (Err(Error::NearBranchPoint { .. }), _, _) => continue,
                (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return Err(e),
            };
            worst = worst.max(r3);
            // Second-order decay: halving h divides the residual by ~4.
            if r1 > 1e-9 {
                worst_ratio = worst_ratio.max(((r1 / r2) - 4.0).abs());
            }
        }
        Ok(if worst_ratio < 1.0 { worst } else { f64::INFINITY })
    })();
    s.below("pullback of dlambda/mu (second-order decay)", pullback, 1e-7);

    s.below(
        "k1 from branch points vs moduli relation",
        Ok::<_, Error>((branch.lambda1 / branch.lambda2 - moduli_relation(k)).norm()),
        1e-12,
    );
    let relations = period_relations(&branch).map(|r| r.quarter.residual.max(r.complementary.residual));
    s.below("period relations after calibration", relations, 1e-9);
}

fn flow_suite(config: &LaxConfig, out: &mut Vec<Check>) {
    let mut s = Suite { name: "flow", out };
    let lambdas = default_lambda_samples(DEFAULT_LAMBDA_COUNT);
    for (label, cfg) in [
        ("A0 = 0", Ok(config.without_p0())),
        ("P0 = all-ones at k=0", config.without_p0().with_p0_weights(P0Weights::select(0, 2))),
    ] {
        let res = cfg.and_then(|cfg| {
            let path = PathSpec::segment(Complex64::new(0.5, 0.0), 0.05, 1e-11)?;
            let samples = integrate_lax_triple(&cfg, &path, &lambdas)?;
            Ok(triple_residuals(&cfg, &samples, &lambdas))
        });
        let (p, i) = match res {
            Ok(r) => (Ok(r.product), Ok(r.isospectral)),
            Err(e) => (Err(e.to_string()), Err(e.to_string())),
        };
        s.below(&format!("product identity to t=0.5 ({label})"), p, 1e-8);
        s.below(&format!("isospectrality to t=0.5 ({label})"), i, 1e-8);
    }

    let normalizer = config
        .without_p0()
        .with_p0_weights(P0Weights::select(0, 2))
        .and_then(|cfg| {
            let coarse = check_normalizer(&cfg, &PathSpec::segment(Complex64::new(0.3, 0.0), 0.02, 1e-11)?, &lambdas)?;
            let fine = check_normalizer(&cfg, &PathSpec::segment(Complex64::new(0.3, 0.0), 0.01, 1e-11)?, &lambdas)?;
            Ok((coarse, fine))
        });
    match normalizer {
        Ok((coarse, fine)) => {
            s.below("normalizer lambda-independence", Ok::<_, Error>(fine.lambda_independence_residual), 1e-7);
            s.below("normalizer dF/dt = A0 F", Ok::<_, Error>(coarse.ode_residual.max(fine.ode_residual)), 1e-6);
        }
        Err(e) => {
            s.below("normalizer lambda-independence", Err::<f64, _>(e.to_string()), 1e-7);
            s.below("normalizer dF/dt = A0 F", Err::<f64, _>(e), 1e-6);
        }
    }

    let drift = PathSpec::segment(Complex64::new(1.0, 0.0), 0.05, config.tol)
        .and_then(|p| integrate_system(config, &p))
        .map(|samples| {
            let (da, db) = invariant_drift(config, &samples);
            da.max(db)
        });
    s.below("(A, B) drift to t=1", drift, 1e-8);
}

fn lattice_suite(config: &LaxConfig, opts: &VerifyOptions, out: &mut Vec<Check>) {
    let mut s = Suite { name: "lattice", out };
    let lattices = classical_lattice(config, &opts.window, opts.mn_bound)
        .and_then(|a| Ok((a, rh_lattice(config, &opts.window, opts.mn_bound)?)));
    let (classical, _) = match lattices {
        Ok((a, b)) => {
            let m = compare_lattices(&a, &b, 1e-6);
            s.holds(
                "classical and RH lattices coincide",
                Ok((m.coincident, format!("{} points, max distance {:.3e}", a.len(), m.max_distance))),
            );
            (a, b)
        }
        Err(e) => {
            s.holds("classical and RH lattices coincide", Err(e));
            return;
        }
    };

    let on_real_axis = classical.points.iter().any(|p| p.t.im.abs() < 1e-3 && p.t.re.abs() <= 4.0);
    if config.is_real() && !on_real_axis {
        let clean = [1.0, -1.0].iter().try_for_each(|&d| {
            PathSpec::segment(Complex64::new(4.0 * d, 0.0), 0.05, config.tol)
                .and_then(|p| integrate_system(config, &p))
                .map(|_| ())
        });
        s.holds("no blow-up on the real axis to |t| = 4", clean.map(|_| (true, "integrated to +-4".into())));
    }

    let Some(nearest) = classical.nearest_to(Complex64::new(0.0, 0.0)).map(|p| p.t) else {
        return;
    };
    let refined = refine_singularity(config, nearest + Complex64::new(0.01, -0.01), &DEFAULT_SCHEDULE)
        .map(|r| (r.point.t - nearest).norm());
    s.below("Toeplitz refine confirms nearest lattice point", refined, 1e-5);
    let blowup = detect_blowup(config, nearest / nearest.norm(), 1.5 * nearest.norm())
        .map(|p| (p.t_star - nearest).norm());
    s.below("ODE blow-up confirms nearest lattice point", blowup, 1e-4);

    let mut t = Suite { name: "toeplitz", out: s.out };
    let identity = symbol_from_fn(64, |_| nalgebra::Matrix2::identity())
        .and_then(|sym| assemble_truncation(&sym, 8))
        .map(|tr| (sigma_min(&tr) - 1.0).abs());
    t.below("identity symbol gives sigma_min = 1", identity, 1e-12);
    let winding = symbol_exp_tl0(config, nearest + 0.3, 256).map(|sym| det_winding(&sym));
    t.holds("det G does not wind", winding.map(|w| (w == 0, format!("winding {w}"))));
    if config.is_real() {
        let sym = (|| -> Result<f64> {
            let probe = Complex64::new(0.4, 0.9);
            let a = sigma_min(&assemble_truncation(&symbol_exp_tl0(config, probe, 256)?, 24)?);
            let b = sigma_min(&assemble_truncation(&symbol_exp_tl0(config, probe.conj(), 256)?, 24)?);
            Ok((a - b).abs())
        })();
        t.below("conjugation symmetry of sigma_min", sym, 1e-10);
    }
    let control = Window::new(opts.window.re_min, opts.window.re_max, -0.3, 0.3);
    if classical.points.iter().all(|p| !control.contains(p.t, 0.2)) {
        let empty = scan(config, &control, 32, 24, crate::toeplitz::DEFAULT_THRESHOLD)
            .map(|r| (r.candidates.is_empty(), format!("{} candidates", r.candidates.len())));
        t.holds("no candidates in a window off the lattice", empty);
    }
}

/// Runs every suite for `config`.
pub fn run_all(config: &LaxConfig, opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();
    elliptic_suite(config, &mut rng, &mut checks);
    surfaces_suite(config, &mut rng, &mut checks);
    flow_suite(config, &mut checks);
    lattice_suite(config, opts, &mut checks);
    VerifyReport { checks }
}
