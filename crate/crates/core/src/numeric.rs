//! Small numerical helpers shared across modules.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square root of `z` on the branch closest to `reference`.
pub fn sqrt_near(z: Complex64, reference: Complex64) -> Complex64 {
    let r = z.sqrt();
    if (r - reference).norm() <= (r + reference).norm() {
        r
    } else {
        -r
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// A rank-two lattice `Z w1 + Z w2` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub w1: Complex64,
    pub w2: Complex64,
}

impl Lattice {
    pub fn new(w1: Complex64, w2: Complex64) -> Self {
        Self { w1, w2 }
    }

    /// Real coordinates (a, b) with z = a w1 + b w2.
    pub fn coordinates(&self, z: Complex64) -> (f64, f64) {
        let det = self.w1.re * self.w2.im - self.w2.re * self.w1.im;
        let a = (z.re * self.w2.im - self.w2.re * z.im) / det;
        let b = (self.w1.re * z.im - z.re * self.w1.im) / det;
        (a, b)
    }

    /// Nearest lattice vector to `z`, returned as (residual, m, n) with
    /// z = residual + m w1 + n w2.
    pub fn reduce(&self, z: Complex64) -> (Complex64, i64, i64) {
        let (a, b) = self.coordinates(z);
        let (a0, b0) = (a.round() as i64, b.round() as i64);
        let mut best = (z, 0, 0);
        let mut best_norm = f64::INFINITY;
        for da in -1..=1 {
            for db in -1..=1 {
                let (m, n) = (a0 + da, b0 + db);
                let r = z - self.w1 * m as f64 - self.w2 * n as f64;
                if r.norm() < best_norm {
                    best_norm = r.norm();
                    best = (r, m, n);
                }
            }
        }
        best
    }

    /// Distance between `z1` and `z2` modulo the lattice.
    pub fn distance_mod(&self, z1: Complex64, z2: Complex64) -> f64 {
        self.reduce(z1 - z2).0.norm()
    }
}

/// Axis-aligned rectangle in the complex t-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    /// Symmetric box |Re t| <= half_re, |Im t| <= half_im.
    pub fn centered(half_re: f64, half_im: f64) -> Self {
        Self::new(-half_re, half_re, -half_im, half_im)
    }

    pub fn is_valid(&self) -> bool {
        self.re_min < self.re_max && self.im_min < self.im_max
    }

    /// Closed containment with `pad` added on every side.
    pub fn contains(&self, t: Complex64, pad: f64) -> bool {
        t.re >= self.re_min - pad
            && t.re <= self.re_max + pad
            && t.im >= self.im_min - pad
            && t.im <= self.im_max + pad
    }
}

/// 17 significant digits, the format used for every float written to CSV.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
