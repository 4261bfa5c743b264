//! Dormand-Prince 5(4) with complex state, stepping along straight segments
//! of a polyline in the complex time plane.

use num_complex::Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

pub(crate) const BLOWUP_NORM: f64 = 1e8;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 2_000_000;

/// One accepted point: time, state and the vector field `dy/dt` there.
#[derive(Debug, Clone)]
pub(crate) struct Accepted {
    pub t: Complex64,
    pub y: Vec<Complex64>,
    pub dydt: Vec<Complex64>,
}

pub(crate) enum Outcome {
    Completed,
    /// State norm crossed the blow-up threshold; the last accepted point is
    /// the first one beyond it.
    Escaped,
    Collapsed { t: Complex64 },
}

pub(crate) struct Settings {
    pub tol: f64,
    pub max_step: f64,
    pub blowup_norm: f64,
}

fn max_norm(y: &[Complex64]) -> f64 {
    y.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn axpy(out: &mut [Complex64], y: &[Complex64], h: Complex64, terms: &[(f64, &[Complex64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (coef, k) in terms {
            if *coef != 0.0 {
                acc += k[i] * *coef;
            }
        }
        *o = y[i] + h * acc;
    }
}

/// Integrates `dy/dt = f(t, y)` along the polyline through `vertices`,
/// calling `on_accept` at the start and after every accepted step.
/// Every vertex is hit exactly.
pub(crate) fn integrate<F, O>(
    vertices: &[Complex64],
    y0: Vec<Complex64>,
    settings: &Settings,
    f: F,
    mut on_accept: O,
) -> Outcome
where
    F: Fn(Complex64, &[Complex64], &mut [Complex64]),
    O: FnMut(&Accepted),
{
    let dim = y0.len();
    let mut t = vertices[0];
    let mut y = y0;
    let mut k1 = vec![Complex64::new(0.0, 0.0); dim];
    f(t, &y, &mut k1);
    on_accept(&Accepted {
        t,
        y: y.clone(),
        dydt: k1.clone(),
    });

    let mut k2 = vec![Complex64::new(0.0, 0.0); dim];
    let mut k3 = k2.clone();
    let mut k4 = k2.clone();
    let mut k5 = k2.clone();
    let mut k6 = k2.clone();
    let mut k7 = k2.clone();
    let mut tmp = k2.clone();
    let mut y_new = k2.clone();

    let mut h = settings.max_step.min(1e-2);
    let mut steps = 0usize;

    for seg in vertices.windows(2) {
        let (start, end) = (seg[0], seg[1]);
        let len = (end - start).norm();
        let dir = (end - start) / len;
        let mut s = 0.0;
        while s < len {
            steps += 1;
            if steps > MAX_STEPS {
                return Outcome::Collapsed { t };
            }
            let remaining = len - s;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let dt = dir * hs;

            axpy(&mut tmp, &y, dt, &[(A21, &k1)]);
            f(t + dt * C2, &tmp, &mut k2);
            axpy(&mut tmp, &y, dt, &[(A31, &k1), (A32, &k2)]);
            f(t + dt * C3, &tmp, &mut k3);
            axpy(&mut tmp, &y, dt, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + dt * C4, &tmp, &mut k4);
            axpy(&mut tmp, &y, dt, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + dt * C5, &tmp, &mut k5);
            axpy(
                &mut tmp,
                &y,
                dt,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            f(t + dt, &tmp, &mut k6);
            axpy(
                &mut y_new,
                &y,
                dt,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let t_new = if last { end } else { t + dt };
            f(t_new, &y_new, &mut k7);

            let mut err = 0.0f64;
            let mut finite = true;
            for i in 0..dim {
                let e = dt
                    * (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7);
                let scale = settings.tol * (1.0 + y[i].norm().max(y_new[i].norm()));
                let r = e.norm() / scale;
                finite &= r.is_finite() && y_new[i].re.is_finite() && y_new[i].im.is_finite();
                err = err.max(r);
            }
            if !finite {
                err = f64::INFINITY;
            }

            if err <= 1.0 {
                s = if last { len } else { s + hs };
                t = t_new;
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                on_accept(&Accepted {
                    t,
                    y: y.clone(),
                    dydt: k1.clone(),
                });
                if max_norm(&y) > settings.blowup_norm {
                    return Outcome::Escaped;
                }
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if !last || factor < 1.0 {
                    h = (hs * factor).min(settings.max_step);
                }
            } else {
                let factor = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                h = hs * factor;
                if h < 1e-14 * (1.0 + t.norm()) {
                    return if max_norm(&y) > 1e3 {
                        Outcome::Escaped
                    } else {
                        Outcome::Collapsed { t }
                    };
                }
            }
        }
    }
    Outcome::Completed
}
