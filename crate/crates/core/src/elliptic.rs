//! Complete elliptic integrals, the theta function ϑ₁, Jacobi sn/cn/dn and
//! Abel integrals on normalized quartics `w² = (1 - x²)(1 - k²x²)`.
//!
//! Every curve uses the sheet `w(0) = +1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, sqrt_near, Lattice, I};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Carlson's symmetric integral `R_F(x, y, z)` by the duplication
/// algorithm, principal branch.
pub fn carlson_rf(x0: Complex64, y0: Complex64, z0: Complex64) -> Complex64 {
    let (mut x, mut y, mut z) = (x0, y0, z0);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * f64::EPSILON).powf(-1.0 / 6.0)
        * [(a0 - x).norm(), (a0 - y).norm(), (a0 - z).norm()]
            .into_iter()
            .fold(0.0, f64::max);
    let mut a = a0;
    let mut pow4 = 1.0;
    for _ in 0..100 {
        if q * pow4 < a.norm() {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sx * sz + sy * sz;
        x = (x + lam) * 0.25;
        y = (y + lam) * 0.25;
        z = (z + lam) * 0.25;
        a = (a + lam) * 0.25;
        pow4 *= 0.25;
    }
    let xx = (a0 - x0) * pow4 / a;
    let yy = (a0 - y0) * pow4 / a;
    let zz = -xx - yy;
    let e2 = xx * yy - zz * zz;
    let e3 = xx * yy * zz;
    (ONE - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - e2 * e3 * (3.0 / 44.0)) / a.sqrt()
}

fn is_one(z: Complex64) -> bool {
    (z - ONE).norm() <= 4.0 * f64::EPSILON
}

/// `K(k²) = ∫₀¹ dx / √((1 - x²)(1 - k²x²))`.
pub fn complete_k(ksq: Complex64) -> Result<Complex64> {
    if is_one(ksq) {
        return Err(Error::DegenerateModulus { ksq, what: "K" });
    }
    Ok(carlson_rf(ZERO, ONE - ksq, ONE))
}

/// `K'(k²) = K(1 - k²)`.
pub fn complete_kprime(ksq: Complex64) -> Result<Complex64> {
    if ksq.norm() <= 4.0 * f64::EPSILON {
        return Err(Error::DegenerateModulus { ksq, what: "K'" });
    }
    Ok(carlson_rf(ZERO, ksq, ONE))
}

/// Nome `q = exp(iπτ)`, stored through `τ` so that fractional powers of `q`
/// are unambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nome {
    tau: Complex64,
}

impl Nome {
    pub fn from_tau(tau: Complex64) -> Result<Self> {
        let q_abs = (-PI * tau.im).exp();
        if !(tau.im > 0.0) || !q_abs.is_finite() {
            return Err(Error::NomeOutOfRange(q_abs));
        }
        Ok(Self { tau })
    }

    /// Nome from `q` itself (principal logarithm).
    pub fn from_q(q: Complex64) -> Result<Self> {
        if !(q.norm() < 1.0) || q.norm() == 0.0 {
            return Err(Error::NomeOutOfRange(q.norm()));
        }
        Self::from_tau(q.ln() / (I * PI))
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn q(&self) -> Complex64 {
        (I * PI * self.tau).exp()
    }

    /// `q^e = exp(iπτe)`.
    pub fn q_pow(&self, e: f64) -> Complex64 {
        (I * PI * self.tau * e).exp()
    }
}

const THETA_CUTOFF: f64 = 1e-18;
const THETA_MAX_TERMS: usize = 10_000;

/// `ϑ₁(u, q) = 2 Σ_{n≥0} (-1)ⁿ q^{(n+½)²} sin((2n+1)u)`.
///
/// Summation stops once the bound `|q^{(n+½)²}| e^{(2n+1)|Im u|}` on the next
/// term falls below `1e-18` of the largest bound seen.
pub fn theta1(u: Complex64, nome: &Nome) -> Complex64 {
    theta1_counted(u, nome).0
}

/// `ϑ₁` together with the number of series terms used.
pub fn theta1_counted(u: Complex64, nome: &Nome) -> (Complex64, usize) {
    let mut sum = ZERO;
    let mut largest = 0.0f64;
    let log_q = -PI * nome.tau.im;
    for n in 0..THETA_MAX_TERMS {
        let e = (n as f64 + 0.5).powi(2);
        let odd = (2 * n + 1) as f64;
        let log_bound = log_q * e + odd * u.im.abs();
        let bound = log_bound.exp();
        if n > 0 && (bound < THETA_CUTOFF * largest || log_bound < -745.0) {
            return (sum * 2.0, n);
        }
        largest = largest.max(bound);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += nome.q_pow(e) * (u * odd).sin() * sign;
    }
    (sum * 2.0, THETA_MAX_TERMS)
}

/// Fixed-length truncation of the ϑ₁ series.
pub fn theta1_terms(u: Complex64, nome: &Nome, terms: usize) -> Complex64 {
    let mut sum = ZERO;
    for n in 0..terms {
        let e = (n as f64 + 0.5).powi(2);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += nome.q_pow(e) * (u * (2 * n + 1) as f64).sin() * sign;
    }
    sum * 2.0
}

/// Elliptic modulus with its quarter periods and nome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub k: Complex64,
    pub ksq: Complex64,
    pub big_k: Complex64,
    pub big_kprime: Complex64,
    pub nome: Nome,
}

impl Modulus {
    /// Modulus from `k²`; `k` is its principal square root.
    pub fn new(ksq: Complex64) -> Result<Self> {
        Self::with_k(ksq.sqrt(), ksq)
    }

    pub fn from_k(k: Complex64) -> Result<Self> {
        Self::with_k(k, k * k)
    }

    fn with_k(k: Complex64, ksq: Complex64) -> Result<Self> {
        let big_k = complete_k(ksq)?;
        let big_kprime = complete_kprime(ksq)?;
        let nome = Nome::from_tau(I * big_kprime / big_k)?;
        Ok(Self {
            k,
            ksq,
            big_k,
            big_kprime,
            nome,
        })
    }

    /// Period lattice `(4K, 2iK')` of `dx/w` (and of sn).
    pub fn periods(&self) -> Lattice {
        Lattice::new(self.big_k * 4.0, I * self.big_kprime * 2.0)
    }
}

/// `(sn, cn, dn)` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: Complex64,
    pub cn: Complex64,
    pub dn: Complex64,
}

const LANDEN_LEVELS: usize = 12;

/// Small-modulus closure, first order in `m`.
fn jacobi_small(u: Complex64, m: Complex64) -> Jacobi {
    let (s, c) = (u.sin(), u.cos());
    let corr = (u - s * c) * m * 0.25;
    Jacobi {
        sn: s - corr * c,
        cn: c + corr * s,
        dn: ONE - m * s * s * 0.5,
    }
}

/// Descending Landen transformation for `|m| ≤ 1`.
fn jacobi_landen(u: Complex64, m: Complex64) -> Jacobi {
    let mut moduli = Vec::with_capacity(LANDEN_LEVELS);
    let mut mm = m;
    let mut w = u;
    for _ in 0..LANDEN_LEVELS {
        if mm.norm() < 1e-17 {
            break;
        }
        let kp = (ONE - mm).sqrt();
        let k1 = (ONE - kp) / (ONE + kp);
        moduli.push(k1);
        w /= ONE + k1;
        mm = k1 * k1;
    }
    let mut j = jacobi_small(w, mm);
    for &k1 in moduli.iter().rev() {
        let s2 = j.sn * j.sn;
        let den = ONE + k1 * s2;
        j = Jacobi {
            sn: (ONE + k1) * j.sn / den,
            cn: j.cn * j.dn / den,
            dn: (ONE - k1 * s2) / den,
        };
    }
    j
}

/// Jacobi elliptic functions `sn, cn, dn` of `u` with parameter `k²`.
///
/// For `|k²| > 1` the reciprocal-modulus relations
/// `sn(u|m) = sn(ku|1/m)/k`, `cn(u|m) = dn(ku|1/m)`, `dn(u|m) = cn(ku|1/m)`
/// bring the parameter into the unit disc first.
pub fn jacobi(u: Complex64, ksq: Complex64) -> Result<Jacobi> {
    if is_one(ksq) {
        return Err(Error::DegenerateModulus { ksq, what: "sn" });
    }
    if ksq.norm() <= 1.0 {
        return Ok(jacobi_landen(u, ksq));
    }
    let k = ksq.sqrt();
    let j = jacobi_landen(k * u, ONE / ksq);
    Ok(Jacobi {
        sn: j.sn / k,
        cn: j.dn,
        dn: j.cn,
    })
}

pub fn jacobi_sn(u: Complex64, ksq: Complex64) -> Result<Complex64> {
    jacobi(u, ksq).map(|j| j.sn)
}

/// Branch points `±1, ±1/k` of `w² = (1 - x²)(1 - k²x²)` (finite ones only).
pub fn branch_points(ksq: Complex64) -> Vec<Complex64> {
    let mut out = vec![ONE, -ONE];
    if ksq.norm() > 0.0 {
        let inv_k = ONE / ksq.sqrt();
        out.push(inv_k);
        out.push(-inv_k);
    }
    out
}

pub fn curve_w2(x: Complex64, ksq: Complex64) -> Complex64 {
    (ONE - x * x) * (ONE - ksq * x * x)
}

/// Value of `∫ dx/w` from `(0, +1)` with the sheet reached at the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbelValue {
    pub u: Complex64,
    /// `w` at the endpoint after continuation along the path.
    pub w_end: Complex64,
    /// Period lattice `(4K, 2iK')`.
    pub periods: Lattice,
}

impl AbelValue {
    /// Distance to another value modulo the period lattice.
    pub fn distance_mod(&self, other: Complex64) -> f64 {
        self.periods.distance_mod(self.u, other)
    }
}

/// Closest approach of the segment `[a, b]` to `p`.
fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * s - p).norm()
}

pub const BRANCH_CLEARANCE: f64 = 1e-9;
const GL_NODES: usize = 20;
const PANEL_RATIO: f64 = 0.25;
const MAX_PANEL: f64 = 0.25;

struct Integrator {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ksq: Complex64,
    branch: Vec<Complex64>,
}

impl Integrator {
    fn new(ksq: Complex64) -> Self {
        let (nodes, weights) = gauss_legendre(GL_NODES);
        Self {
            nodes,
            weights,
            ksq,
            branch: branch_points(ksq),
        }
    }

    fn nearest_branch(&self, x: Complex64) -> (Complex64, f64) {
        self.branch
            .iter()
            .map(|&b| (b, (x - b).norm()))
            .fold((ONE, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
    }

    /// Integrates `∫ f(x) dx/w` on one straight segment, continuing `w`
    /// from its value at `a`. Returns `(integral, w(b))`.
    fn segment<F>(&self, a: Complex64, b: Complex64, w_a: Complex64, f: &F) -> Result<(Complex64, Complex64)>
    where
        F: Fn(Complex64) -> Complex64,
    {
        for &bp in &self.branch {
            let d = segment_distance(a, b, bp);
            if d < BRANCH_CLEARANCE && (b - bp).norm() >= BRANCH_CLEARANCE {
                return Err(Error::PathThroughBranchPoint {
                    branch_point: bp,
                    distance: d,
                });
            }
        }
        if self.nearest_branch(b).1 < BRANCH_CLEARANCE {
            let (bp, d) = self.nearest_branch(b);
            return Err(Error::PathThroughBranchPoint {
                branch_point: bp,
                distance: d,
            });
        }
        let mut total = ZERO;
        let mut w = w_a;
        let mut start = a;
        while start != b {
            let remaining = b - start;
            // Panel length limited by the distance to the nearest branch point
            // from either end.
            let d_start = self.nearest_branch(start).1;
            let mut len = remaining.norm().min(MAX_PANEL).min(PANEL_RATIO * d_start);
            let dir = remaining / remaining.norm();
            loop {
                let end = start + dir * len;
                let d_end = self.branch.iter().map(|&bp| segment_distance(start, end, bp)).fold(f64::INFINITY, f64::min);
                if len <= PANEL_RATIO * d_end * 2.0 || len < 1e-15 {
                    break;
                }
                len *= 0.5;
            }
            let end = if len >= remaining.norm() { b } else { start + dir * len };
            let mid = (start + end) * 0.5;
            let half = (end - start) * 0.5;
            let mut acc = ZERO;
            let mut w_prev = w;
            for (xi, wi) in self.nodes.iter().zip(&self.weights) {
                let x = mid + half * *xi;
                let wx = sqrt_near(curve_w2(x, self.ksq), w_prev);
                acc += f(x) / wx * *wi;
                w_prev = wx;
            }
            w = sqrt_near(curve_w2(end, self.ksq), w_prev);
            total += acc * half;
            start = end;
        }
        Ok((total, w))
    }

    fn polyline<F>(&self, vertices: &[Complex64], f: &F) -> Result<(Complex64, Complex64)>
    where
        F: Fn(Complex64) -> Complex64,
    {
        let mut w = sqrt_near(curve_w2(vertices[0], self.ksq), ONE);
        let mut total = ZERO;
        for seg in vertices.windows(2) {
            if seg[0] == seg[1] {
                continue;
            }
            let (v, w_end) = self.segment(seg[0], seg[1], w, f)?;
            total += v;
            w = w_end;
        }
        Ok((total, w))
    }
}

/// `∫₀^{x̃} dx/w` along `path_hint` (a polyline from 0 to x̃; the default is
/// the straight segment), with `w(0) = +1` continued along the path.
pub fn abel_u(xtilde: Complex64, ksq: Complex64, path_hint: Option<&[Complex64]>) -> Result<AbelValue> {
    let modulus = Modulus::new(ksq)?;
    let straight = [ZERO, xtilde];
    let vertices = path_hint.unwrap_or(&straight);
    if vertices.first() != Some(&ZERO) || vertices.last() != Some(&xtilde) {
        return Err(Error::InvalidConfig("Abel path must run from 0 to the target".into()));
    }
    let integ = Integrator::new(ksq);
    let (u, w_end) = integ.polyline(vertices, &|_| ONE)?;
    Ok(AbelValue {
        u,
        w_end,
        periods: modulus.periods(),
    })
}

/// Candidate polylines from 0 to `x`: straight first, then detours.
pub fn detour_paths(x: Complex64) -> Vec<Vec<Complex64>> {
    let mut out = vec![vec![ZERO, x]];
    let scale = x.norm().max(0.5);
    let normal = if x.norm() > 0.0 { x / x.norm() * I } else { I };
    for frac in [0.3, 0.6, 1.0] {
        for sign in [1.0, -1.0] {
            out.push(vec![ZERO, x * 0.5 + normal * (sign * frac * scale), x]);
        }
    }
    out
}

/// Abel value of the curve point `(x, w)`: integrates along the first
/// admissible path and, when the continuation lands on `-w`, reflects
/// `u → 2K - u` (the sheet swap `(x, w) → (x, -w)`).
pub fn abel_point(x: Complex64, w: Complex64, ksq: Complex64) -> Result<AbelValue> {
    if w.norm() == 0.0 {
        return Err(Error::BranchPointInput);
    }
    let modulus = Modulus::new(ksq)?;
    let mut last_err = None;
    for path in detour_paths(x) {
        if x == ZERO && path.len() == 2 {
            let base = AbelValue {
                u: ZERO,
                w_end: ONE,
                periods: modulus.periods(),
            };
            return Ok(reflect_if_needed(base, w, &modulus));
        }
        match abel_u(x, ksq, Some(&path)) {
            Ok(v) => return Ok(reflect_if_needed(v, w, &modulus)),
            Err(e @ Error::PathThroughBranchPoint { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one path tried"))
}

fn reflect_if_needed(v: AbelValue, w: Complex64, modulus: &Modulus) -> AbelValue {
    if (v.w_end - w).norm() <= (v.w_end + w).norm() {
        v
    } else {
        AbelValue {
            u: modulus.big_k * 2.0 - v.u,
            w_end: -v.w_end,
            periods: v.periods,
        }
    }
}
