//! Matrix-valued Laurent polynomials, the example Lax system and its
//! configuration.
//!
//! A Lax matrix in this class has the form `L(λ) = Σ_{k=-m}^{1} L^{(k)} λ^k`.
//! Its polynomial part `L⁺` keeps the exponents `0, 1`; the remainder `L⁻`
//! keeps `-m ..= -1`. The example system is the 2x2 matrix
//!
//! ```text
//!     L(λ) = [ v   u ]      v = z/λ
//!            [ w  -v ]      u = aλ + y/λ + x,   w = aλ + y/λ - x
//! ```
//!
//! whose Lax equation `dL/dt = [L⁺, L]` is the system
//! `x' = -2az, y' = -2xz, z' = 2xy` with invariants `A = x² - 2ay`,
//! `B = y² + z²`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// `Σ_{k=-m}^{1} L^{(k)} λ^k` with `n x n` complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrixPoly {
    n: usize,
    m: usize,
    /// `coeffs[k + m]` holds `L^{(k)}`.
    coeffs: Vec<CMatrix>,
}

impl LaurentMatrixPoly {
    /// Builds a polynomial from coefficients ordered `L^{(-m)}, ..., L^{(1)}`.
    pub fn new(n: usize, m: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("matrix dimension must be positive".into()));
        }
        if coeffs.len() != m + 2 {
            return Err(Error::InvalidConfig(format!(
                "expected {} coefficients for exponents -{m}..=1, got {}",
                m + 2,
                coeffs.len()
            )));
        }
        if let Some(bad) = coeffs.iter().find(|c| c.shape() != (n, n)) {
            return Err(Error::InvalidConfig(format!(
                "coefficient of shape {:?} in a {n}x{n} polynomial",
                bad.shape()
            )));
        }
        Ok(Self { n, m, coeffs })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            coeffs: vec![CMatrix::zeros(n, n); m + 2],
        }
    }

    /// Builds from a sparse exponent map; missing exponents are zero.
    pub fn from_terms(n: usize, m: usize, terms: &[(i32, CMatrix)]) -> Result<Self> {
        let mut p = Self::zeros(n, m);
        for (k, c) in terms {
            if !p.has_exponent(*k) {
                return Err(Error::InvalidConfig(format!(
                    "exponent {k} outside -{m}..=1"
                )));
            }
            if c.shape() != (n, n) {
                return Err(Error::InvalidConfig(format!(
                    "coefficient of shape {:?} in a {n}x{n} polynomial",
                    c.shape()
                )));
            }
            *p.coeff_mut(*k) = c.clone();
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn neg_degree(&self) -> usize {
        self.m
    }

    pub fn exponents(&self) -> impl Iterator<Item = i32> {
        -(self.m as i32)..=1
    }

    pub fn has_exponent(&self, k: i32) -> bool {
        k >= -(self.m as i32) && k <= 1
    }

    pub fn coeff(&self, k: i32) -> &CMatrix {
        &self.coeffs[(k + self.m as i32) as usize]
    }

    pub fn coeff_mut(&mut self, k: i32) -> &mut CMatrix {
        &mut self.coeffs[(k + self.m as i32) as usize]
    }

    pub fn coeffs(&self) -> &[CMatrix] {
        &self.coeffs
    }

    pub fn eval(&self, lambda: Complex64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        for k in self.exponents() {
            out += self.coeff(k) * lambda.powi(k);
        }
        out
    }

    fn keep(&self, pred: impl Fn(i32) -> bool) -> Self {
        let mut out = Self::zeros(self.n, self.m);
        for k in self.exponents().filter(|&k| pred(k)) {
            *out.coeff_mut(k) = self.coeff(k).clone();
        }
        out
    }

    /// `L⁺`: exponents 0 and 1.
    pub fn split_plus(&self) -> Self {
        self.keep(|k| k >= 0)
    }

    /// `L⁻`: exponents -m ..= -1.
    pub fn split_minus(&self) -> Self {
        self.keep(|k| k < 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Self { coeffs, ..*self }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|a| a * s).collect();
        Self { coeffs, ..*self }
    }

    /// Right-hand side of the Lax equation, `[L⁺ + A₀, L]`, as a Laurent
    /// polynomial in the same class.
    ///
    /// The `λ²` coefficient of the commutator is `[L^{(1)}, L^{(1)}] = 0`, so
    /// the result stays within exponents `-m ..= 1`.
    pub fn lax_velocity(&self, a0: &CMatrix) -> Self {
        let mut out = Self::zeros(self.n, self.m);
        let m_plus = [self.coeff(0) + a0, self.coeff(1).clone()];
        for (i, mi) in m_plus.iter().enumerate() {
            for j in self.exponents() {
                let k = i as i32 + j;
                if out.has_exponent(k) {
                    let lj = self.coeff(j);
                    *out.coeff_mut(k) += mi * lj - lj * mi;
                }
            }
        }
        out
    }

    /// Flattened coefficients (exponent-major, column-major inside each block).
    pub fn to_flat(&self) -> Vec<Complex64> {
        self.coeffs.iter().flat_map(|c| c.iter().copied()).collect()
    }

    pub fn from_flat(n: usize, m: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), n * n * (m + 2));
        let coeffs = data
            .chunks(n * n)
            .map(|chunk| CMatrix::from_column_slice(n, n, chunk))
            .collect();
        Self { n, m, coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// The projection `P₀` realized as `A₀ = Σ_k C_k ∘ L^{(k)}` with entrywise
/// weights `C_k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct P0Weights {
    weights: BTreeMap<i32, CMatrix>,
}

impl P0Weights {
    pub fn new(weights: BTreeMap<i32, CMatrix>) -> Self {
        Self { weights }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i32, &CMatrix)> {
        self.weights.iter()
    }

    /// All-ones weight on a single exponent: picks out `L^{(k)}` itself.
    pub fn select(k: i32, n: usize) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(k, CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)));
        Self { weights }
    }
}

/// `A₀ = P₀ L`. Constant in `λ` and linear in `L`.
pub fn apply_p0(l: &LaurentMatrixPoly, weights: &P0Weights) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(l.dim(), l.dim());
    for (&k, c) in weights.iter() {
        if !l.has_exponent(k) {
            return Err(Error::InvalidConfig(format!(
                "P0 weight exponent {k} outside -{}..=1",
                l.neg_degree()
            )));
        }
        if c.shape() != (l.dim(), l.dim()) {
            return Err(Error::InvalidConfig(format!(
                "P0 weight for exponent {k} has shape {:?}",
                c.shape()
            )));
        }
        out += c.component_mul(l.coeff(k));
    }
    Ok(out)
}

/// Problem instance: coupling `a`, initial data, derived invariants and
/// an optional `P₀` functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaxConfigJson", into = "LaxConfigJson")]
pub struct LaxConfig {
    pub a: Complex64,
    pub x0: Complex64,
    pub y0: Complex64,
    pub z0: Complex64,
    pub invariant_a: Complex64,
    pub invariant_b: Complex64,
    pub p0_weights: P0Weights,
    pub tol: f64,
}

pub const DEFAULT_TOL: f64 = 1e-9;

impl LaxConfig {
    pub fn new(a: Complex64, x0: Complex64, y0: Complex64, z0: Complex64) -> Result<Self> {
        if a == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidConfig(
                "a = 0 collapses the spectral curve".into(),
            ));
        }
        let (invariant_a, invariant_b) = invariants(x0, y0, z0, a);
        Ok(Self {
            a,
            x0,
            y0,
            z0,
            invariant_a,
            invariant_b,
            p0_weights: P0Weights::default(),
            tol: DEFAULT_TOL,
        })
    }

    /// Real-valued convenience constructor.
    pub fn real(a: f64, x0: f64, y0: f64, z0: f64) -> Result<Self> {
        let r = |v| Complex64::new(v, 0.0);
        Self::new(r(a), r(x0), r(y0), r(z0))
    }

    /// The reference instance `a = 1, x0 = 3, y0 = 1, z0 = 1` (A = 7, B = 2).
    pub fn reference() -> Self {
        Self::real(1.0, 3.0, 1.0, 1.0).expect("a != 0")
    }

    pub fn with_p0_weights(mut self, weights: P0Weights) -> Result<Self> {
        for (&k, c) in weights.iter() {
            if !(-1..=1).contains(&k) {
                return Err(Error::InvalidConfig(format!(
                    "p0_weights exponent {k} outside -1..=1"
                )));
            }
            if c.shape() != (2, 2) {
                return Err(Error::InvalidConfig(format!(
                    "p0_weights[{k}] must be 2x2, got {:?}",
                    c.shape()
                )));
            }
        }
        self.p0_weights = weights;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {tol}")));
        }
        self.tol = tol;
        Ok(self)
    }

    /// Same data with `A₀ = 0`.
    pub fn without_p0(&self) -> Self {
        Self {
            p0_weights: P0Weights::default(),
            ..self.clone()
        }
    }

    pub fn initial_state(&self) -> [Complex64; 3] {
        [self.x0, self.y0, self.z0]
    }

    /// Complex conjugate of every datum (used for conjugation symmetry).
    pub fn is_real(&self) -> bool {
        [self.a, self.x0, self.y0, self.z0]
            .iter()
            .all(|v| v.im == 0.0)
            && self
                .p0_weights
                .iter()
                .all(|(_, c)| c.iter().all(|z| z.im == 0.0))
    }
}

/// Wire format: complex numbers as `[re, im]`, weights keyed by exponent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaxConfigJson {
    a: Complex64,
    x0: Complex64,
    y0: Complex64,
    z0: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p0_weights: Option<BTreeMap<i32, Vec<Vec<Complex64>>>>,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl TryFrom<LaxConfigJson> for LaxConfig {
    type Error = Error;

    fn try_from(raw: LaxConfigJson) -> Result<Self> {
        let mut cfg = LaxConfig::new(raw.a, raw.x0, raw.y0, raw.z0)?.with_tol(raw.tol)?;
        if let Some(w) = raw.p0_weights {
            let mut weights = BTreeMap::new();
            for (k, rows) in w {
                let nrows = rows.len();
                let ncols = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::InvalidConfig(format!(
                        "p0_weights[{k}] has ragged rows"
                    )));
                }
                let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
                weights.insert(k, CMatrix::from_row_slice(nrows, ncols, &flat));
            }
            cfg = cfg.with_p0_weights(P0Weights::new(weights))?;
        }
        Ok(cfg)
    }
}

impl From<LaxConfig> for LaxConfigJson {
    fn from(cfg: LaxConfig) -> Self {
        let p0_weights = (!cfg.p0_weights.is_empty()).then(|| {
            cfg.p0_weights
                .iter()
                .map(|(&k, c)| {
                    let rows = c.row_iter().map(|r| r.iter().copied().collect()).collect();
                    (k, rows)
                })
                .collect()
        });
        Self {
            a: cfg.a,
            x0: cfg.x0,
            y0: cfg.y0,
            z0: cfg.z0,
            p0_weights,
            tol: cfg.tol,
        }
    }
}

/// `L₀(λ)` of the example system at the configured initial data.
pub fn build_l0(config: &LaxConfig) -> LaurentMatrixPoly {
    let zero = Complex64::new(0.0, 0.0);
    let (a, x, y, z) = (config.a, config.x0, config.y0, config.z0);
    let l1 = CMatrix::from_row_slice(2, 2, &[zero, a, a, zero]);
    let l0 = CMatrix::from_row_slice(2, 2, &[zero, x, -x, zero]);
    let lm1 = CMatrix::from_row_slice(2, 2, &[z, y, y, -z]);
    LaurentMatrixPoly::new(2, 1, vec![lm1, l0, l1]).expect("shapes are fixed")
}

/// Right-hand side `(x', y', z') = (-2az, -2xz, 2xy)`.
pub fn rhs_ode(
    x: Complex64,
    y: Complex64,
    z: Complex64,
    a: Complex64,
) -> (Complex64, Complex64, Complex64) {
    (-2.0 * a * z, -2.0 * x * z, 2.0 * x * y)
}

/// `(A, B) = (x² - 2ay, y² + z²)`.
pub fn invariants(x: Complex64, y: Complex64, z: Complex64, a: Complex64) -> (Complex64, Complex64) {
    (x * x - 2.0 * a * y, y * y + z * z)
}

/// Recovers `(x, y, z)` from the coefficients of an example-class `L`.
pub fn state_from_l(l: &LaurentMatrixPoly) -> [Complex64; 3] {
    [l.coeff(0)[(0, 1)], l.coeff(-1)[(0, 1)], l.coeff(-1)[(0, 0)]]
}
