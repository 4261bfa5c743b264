//! The two elliptic curves of the example: `Σ: w² = (1 - x²)(1 - k²x²)`
//! (trajectory side) and `Σ₁: μ² = (1 - λ²)(1 - k₁²λ²)` (spectral side,
//! with `λ` normalized by `λ₁`), and the two-to-one map between them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laxcore::{build_l0, LaxConfig};
use crate::numeric::{sqrt_near, I};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative size below which a quantity counts as degenerate.
const DEGENERATE: f64 = 1e-12;

/// Sheet on which the zeros of `q₁` are placed on `Σ₁`:
/// `μ = Q1_SHEET · z₀/(aλ₁λ₂)`.
pub const Q1_SHEET: f64 = -1.0;

/// Branch points and moduli of `Σ` and `Σ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchData {
    /// Principal `√B`.
    pub sqrt_b: Complex64,
    pub x1: Complex64,
    pub x2: Complex64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
    pub k: Complex64,
    pub k1: Complex64,
    /// Zeros of `q₁(λ) = aλ² + x₀λ + y₀`.
    pub lhat1: Complex64,
    pub lhat2: Complex64,
    /// Sign of `μ/(z₀/(aλ₁λ₂))` at the normalized zeros of `q₁`.
    pub q1_sheet: f64,
}

impl BranchData {
    pub fn ksq(&self) -> Complex64 {
        self.k * self.k
    }

    pub fn k1sq(&self) -> Complex64 {
        self.k1 * self.k1
    }

    /// `μ` on `Σ₁` at `λ̂ᵢ/λ₁` on the chosen sheet.
    pub fn q1_zero_mu(&self, config: &LaxConfig) -> Complex64 {
        config.z0 / (config.a * self.lambda1 * self.lambda2) * self.q1_sheet
    }
}

fn small(v: Complex64, scale: f64) -> bool {
    v.norm() <= DEGENERATE * scale.max(f64::MIN_POSITIVE)
}

/// Branch points from the invariants: `x₁² = A + 2a√B`, `x₂² = A - 2a√B`,
/// `λ₁ = (x₂ - x₁)/2a`, `λ₂ = (x₁ + x₂)/2a`.
pub fn branch_points(config: &LaxConfig) -> Result<BranchData> {
    let (a, ia, ib) = (config.a, config.invariant_a, config.invariant_b);
    let scale_b = config.y0.norm_sqr() + config.z0.norm_sqr();
    if small(ib, scale_b) {
        return Err(Error::DegenerateCurve("B = 0: x1 = x2".into()));
    }
    let disc = ia * ia - a * a * ib * 4.0;
    if small(disc, ia.norm_sqr() + (a * a * ib).norm() * 4.0) {
        return Err(Error::DegenerateCurve("A^2 = 4a^2 B: k1 = 0".into()));
    }
    let sqrt_b = ib.sqrt();
    let x1 = (ia + a * sqrt_b * 2.0).sqrt();
    let x2 = (ia - a * sqrt_b * 2.0).sqrt();
    let k = x1 / x2;
    if small(ONE + k, 1.0) {
        return Err(Error::DegenerateCurve("k = -1".into()));
    }
    let lambda1 = (x2 - x1) / (a * 2.0);
    let lambda2 = (x1 + x2) / (a * 2.0);
    let k1 = lambda1 / lambda2;
    let s = (config.x0 * config.x0 - a * config.y0 * 4.0).sqrt();
    let lhat1 = (-config.x0 - s) / (a * 2.0);
    let lhat2 = (-config.x0 + s) / (a * 2.0);
    Ok(BranchData {
        sqrt_b,
        x1,
        x2,
        lambda1,
        lambda2,
        k,
        k1,
        lhat1,
        lhat2,
        q1_sheet: Q1_SHEET,
    })
}

/// `k₁ = (1 - k)/(1 + k)`.
pub fn moduli_relation(k: Complex64) -> Complex64 {
    (ONE - k) / (ONE + k)
}

/// Nonzero coefficients of `p₁(λ) = a²λ⁴ - Aλ² + B`, with the two
/// quadratics `q₁ = aλ² + x₀λ + y₀`, `q₂ = aλ² - x₀λ + y₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub quartic: Complex64,
    pub quadratic: Complex64,
    pub constant: Complex64,
    a: Complex64,
    x0: Complex64,
    y0: Complex64,
    z0: Complex64,
}

impl SpectralCurve {
    pub fn coefficients(&self) -> (Complex64, Complex64, Complex64) {
        (self.quartic, self.quadratic, self.constant)
    }

    pub fn p1(&self, lambda: Complex64) -> Complex64 {
        let l2 = lambda * lambda;
        self.quartic * l2 * l2 + self.quadratic * l2 + self.constant
    }

    pub fn q1(&self, lambda: Complex64) -> Complex64 {
        self.a * lambda * lambda + self.x0 * lambda + self.y0
    }

    pub fn q2(&self, lambda: Complex64) -> Complex64 {
        self.a * lambda * lambda - self.x0 * lambda + self.y0
    }

    pub fn z0(&self) -> Complex64 {
        self.z0
    }
}

pub fn spectral_curve(config: &LaxConfig) -> SpectralCurve {
    SpectralCurve {
        quartic: config.a * config.a,
        quadratic: -config.invariant_a,
        constant: config.invariant_b,
        a: config.a,
        x0: config.x0,
        y0: config.y0,
        z0: config.z0,
    }
}

/// `μ² = λ² det(-L₀(λ))` read from the characteristic polynomial
/// `ν² - (v² + uw)` of the traceless `L₀(λ)`, `μ = λν`.
pub fn mu_squared_from_l0(config: &LaxConfig, lambda: Complex64) -> Complex64 {
    let l = build_l0(config).eval(lambda);
    -lambda * lambda * l.determinant()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Sigma,
    Sigma1,
}

/// A point `(x, w)` on `Σ` or `(λ, μ)` on `Σ₁` (normalized coordinates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub curve: Curve,
    pub x: Complex64,
    pub w: Complex64,
}

impl CurvePoint {
    pub fn sigma(x: Complex64, w: Complex64) -> Self {
        Self {
            curve: Curve::Sigma,
            x,
            w,
        }
    }

    pub fn sigma1(lambda: Complex64, mu: Complex64) -> Self {
        Self {
            curve: Curve::Sigma1,
            x: lambda,
            w: mu,
        }
    }

    /// `|w² - (1 - x²)(1 - m x²)|` for the curve's own parameter `m`.
    pub fn residual(&self, m: Complex64) -> f64 {
        (self.w * self.w - (ONE - self.x * self.x) * (ONE - m * self.x * self.x)).norm()
    }

    /// Point on the curve with parameter `m` above `x`, on the sheet
    /// nearest `w_hint`.
    pub fn above(curve: Curve, x: Complex64, m: Complex64, w_hint: Complex64) -> Self {
        let w2 = (ONE - x * x) * (ONE - m * x * x);
        Self {
            curve,
            x,
            w: sqrt_near(w2, w_hint),
        }
    }
}

/// Image of a point of `Σ` under φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiImage {
    Finite(CurvePoint),
    /// One of the two points at infinity of `Σ₁`, where `μ ≈ sign·k₁λ²`.
    Infinity { sign: i8 },
}

/// Distance from `x` to the nearest branch point of `Σ` (`±1`, `±1/k`).
fn nearest_sigma_branch(x: Complex64, k: Complex64) -> (Complex64, f64) {
    [ONE, -ONE, ONE / k, -ONE / k]
        .into_iter()
        .map(|b| (b, (x - b).norm()))
        .fold((ONE, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
}

/// `φ(x, w) = (i(1 + k)x/w, (k²x⁴ - 1)/w²)`.
///
/// Branch points (`w = 0`) are only accepted with `allow_limit`, in which
/// case the image is the limiting point at infinity.
pub fn phi_map(p: CurvePoint, k: Complex64, allow_limit: bool) -> Result<PhiImage> {
    if p.curve != Curve::Sigma {
        return Err(Error::InvalidConfig("phi_map expects a point of Sigma".into()));
    }
    let (x, w) = (p.x, p.w);
    if w.norm() <= DEGENERATE * (1.0 + x.norm_sqr()) {
        if !allow_limit {
            return Err(Error::BranchPointInput);
        }
        // μ/λ² → (k²x⁴ - 1)/(-(1+k)²x²): +k₁ at x = ±1, -k₁ at x = ±1/k.
        let (b, _) = nearest_sigma_branch(x, k);
        let sign = if (b * b - ONE).norm() < 1e-9 { 1 } else { -1 };
        return Ok(PhiImage::Infinity { sign });
    }
    let lambda = I * (ONE + k) * x / w;
    let x2 = x * x;
    let mu = (k * k * x2 * x2 - ONE) / (w * w);
    Ok(PhiImage::Finite(CurvePoint::sigma1(lambda, mu)))
}

/// Finite image or an error for the points at infinity.
pub fn phi_finite(p: CurvePoint, k: Complex64) -> Result<CurvePoint> {
    match phi_map(p, k, false)? {
        PhiImage::Finite(q) => Ok(q),
        PhiImage::Infinity { .. } => Err(Error::BranchPointInput),
    }
}

/// Distance within which `pullback_residual` refuses to evaluate.
pub const NEAR_BRANCH: f64 = 1e-3;

/// Compares `φ*(dλ/μ)` with `-i(1 + k) dx/w` at `p`, differentiating φ by
/// central differences of step `h` in the local parameter `x`. Returns the
/// relative residual.
pub fn pullback_residual(p: CurvePoint, k: Complex64, h: f64) -> Result<f64> {
    let (b, d) = nearest_sigma_branch(p.x, k);
    if d < NEAR_BRANCH {
        return Err(Error::NearBranchPoint {
            x: p.x,
            branch_point: b,
            distance: d,
        });
    }
    let ksq = k * k;
    let image = phi_finite(p, k)?;
    let k1 = moduli_relation(k);
    for lb in [ONE, -ONE, ONE / k1, -ONE / k1] {
        let dl = (image.x - lb).norm();
        if dl < NEAR_BRANCH {
            return Err(Error::NearBranchPoint {
                x: p.x,
                branch_point: lb,
                distance: dl,
            });
        }
    }
    let at = |dx: f64| -> Result<Complex64> {
        let q = CurvePoint::above(Curve::Sigma, p.x + dx, ksq, p.w);
        Ok(phi_finite(q, k)?.x)
    };
    let dlambda_dx = (at(h)? - at(-h)?) / (2.0 * h);
    let lhs = dlambda_dx / image.w;
    let rhs = -I * (ONE + k) / p.w;
    Ok((lhs - rhs).norm() / rhs.norm())
}
