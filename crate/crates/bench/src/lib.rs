//! Shared inputs for the benchmarks.

use laxlab_core::{LaxConfig, Window};
use num_complex::Complex64;

pub fn reference() -> LaxConfig {
    LaxConfig::reference()
}

pub fn window() -> Window {
    Window::centered(4.0, 4.0)
}

/// A point near the singularity closest to the origin.
pub fn near_pole() -> Complex64 {
    Complex64::new(-0.127, 0.5725)
}

/// A regular point away from every singularity.
pub fn regular() -> Complex64 {
    Complex64::new(0.3, 0.1)
}
