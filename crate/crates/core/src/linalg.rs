//! Dense complex linear algebra used by the flows and the Toeplitz detector.

use nalgebra::allocator::Allocator;
use nalgebra::{DMatrix, DVector, DefaultAllocator, Dim, DimMin, Matrix2, OMatrix};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn norm1<D: DimMin<D, Output = D>>(a: &OMatrix<Complex64, D, D>) -> f64
where
    DefaultAllocator: Allocator<D, D>,
{
    a.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé core
/// (degrees 3, 5, 7, 9, 13 selected by the 1-norm).
pub fn expm<D: DimMin<D, Output = D>>(a: &OMatrix<Complex64, D, D>) -> OMatrix<Complex64, D, D>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    let nrm = norm1(a);
    for (degree, theta) in THETA {
        if nrm <= theta {
            let b: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(a, b);
        }
    }
    let s = if nrm > THETA_13 {
        (nrm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = a.scale(0.5f64.powi(s));
    let mut r = pade_13(&scaled);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

fn identity_like<D: DimMin<D, Output = D>>(a: &OMatrix<Complex64, D, D>) -> OMatrix<Complex64, D, D>
where
    DefaultAllocator: Allocator<D, D>,
{
    let (r, c) = a.shape_generic();
    OMatrix::identity_generic(r, c)
}

fn solve_pade<D: DimMin<D, Output = D>>(
    u: OMatrix<Complex64, D, D>,
    v: OMatrix<Complex64, D, D>,
) -> OMatrix<Complex64, D, D>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    let p = &v + &u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular inside the scaling bound")
}

fn pade_low<D: DimMin<D, Output = D>>(a: &OMatrix<Complex64, D, D>, b: &[f64]) -> OMatrix<Complex64, D, D>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    let ident = identity_like(a);
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u_inner = ident.scale(b[1]);
    let mut v = ident.scale(b[0]);
    for j in 1..b.len() / 2 {
        power = &power * &a2;
        v += power.scale(b[2 * j]);
        u_inner += power.scale(b[2 * j + 1]);
    }
    let u = a * u_inner;
    solve_pade(u, v)
}

fn pade_13<D: DimMin<D, Output = D>>(a: &OMatrix<Complex64, D, D>) -> OMatrix<Complex64, D, D>
where
    DefaultAllocator: Allocator<D, D> + Allocator<D>,
{
    let b = &PADE_13;
    let ident = identity_like(a);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]);
    let u_inner = &a6 * u_hi + a6.scale(b[7]) + a4.scale(b[5]) + a2.scale(b[3]) + ident.scale(b[1]);
    let u = a * u_inner;
    let v_hi = a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]);
    let v = &a6 * v_hi + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + ident.scale(b[0]);
    solve_pade(u, v)
}

/// Eigenvalues of a 2x2 matrix from its trace and determinant.
fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values in nonincreasing order; `None` if the SVD fails to converge.
pub fn singular_values(m: &CMatrix) -> Option<Vec<f64>> {
    to_faer(m).singular_values().ok()
}

/// Smallest singular value and a unit right singular vector.
pub fn smallest_singular_pair(m: &CMatrix) -> Option<(f64, DVector<Complex64>)> {
    let svd = to_faer(m).svd().ok()?;
    let k = m.nrows().min(m.ncols()).checked_sub(1)?;
    let sigma = svd.S().column_vector()[k].re;
    let v = svd.V();
    Some((sigma, DVector::from_fn(v.nrows(), |i, _| v[(i, k)])))
}

pub fn eigenvalues2(m: &Matrix2<Complex64>) -> [Complex64; 2] {
    let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_tr * half_tr - det).sqrt();
    [half_tr + disc, half_tr - disc]
}

/// Distance between two eigenvalue pairs, minimized over the pairing.
pub fn pair_distance(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    let straight = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    straight.min(crossed)
}

pub fn to_matrix2(m: &CMatrix) -> Matrix2<Complex64> {
    assert_eq!(m.shape(), (2, 2));
    Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Largest entry modulus.
pub fn max_abs<D: Dim, E: Dim>(m: &OMatrix<Complex64, D, E>) -> f64
where
    DefaultAllocator: Allocator<D, E>,
{
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    // Traceless 2x2: exp(M) = cosh(nu) I + sinh(nu)/nu M with nu^2 = -det M.
    fn closed_form_traceless(m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let nu = (-m.determinant()).sqrt();
        let (ch, sh_over) = if nu.norm() < 1e-8 {
            (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
        } else {
            (nu.cosh(), nu.sinh() / nu)
        };
        Matrix2::identity() * ch + m * sh_over
    }

    #[test]
    fn expm_matches_closed_form_across_padé_degrees() {
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 40.0] {
            let m = Matrix2::new(c(0.3, 0.1), c(1.0, -0.4), c(-0.7, 0.2), c(-0.3, -0.1)).scale(scale);
            let e = expm(&m);
            let reference = closed_form_traceless(&m);
            let rel = max_abs(&(e - reference)) / max_abs(&reference);
            assert!(rel < 1e-13, "scale {scale}: rel {rel}");
        }
    }

    #[test]
    fn expm_dynamic_matches_fixed() {
        let m = Matrix2::new(c(0.3, 0.1), c(1.0, -0.4), c(-0.7, 0.2), c(-0.3, -0.1)).scale(3.0);
        let d = CMatrix::from_row_slice(2, 2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
        let ed = expm(&d);
        let ef = expm(&m);
        assert!(max_abs(&(to_matrix2(&ed) - ef)) < 1e-13);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::zeros(3, 3);
        let e = expm(&z);
        assert!(max_abs(&(e - CMatrix::identity(3, 3))) == 0.0);
    }

    #[test]
    fn eigenvalue_pairing() {
        let m = Matrix2::new(c(2.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0));
        let ev = eigenvalues2(&m);
        assert!(pair_distance(ev, [c(-3.0, 0.0), c(2.0, 0.0)]) < 1e-15);
    }
}
