//! Log-gamma helpers.
//!
//! `ln_gamma_ratio` computes `ln(Γ(x+a)/Γ(x))` directly instead of
//! subtracting two `ln_gamma` values; for large `x` the subtraction loses
//! ~`|ln Γ(x)|·ε` of absolute precision, which is what limits the accuracy
//! of the neighbor calibration coefficients.

use std::f64::consts::PI;

const STIRLING_MIN: f64 = 10.0;

// B_{2n} / (2n (2n-1)) for the asymptotic (Binet) correction term.
const BINET_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Binet correction `J(x)` with `ln Γ(x) = (x-1/2) ln x - x + ln(2π)/2 + J(x)`.
/// Accurate to ~1e-17 for `x >= 10`.
fn binet(x: f64) -> f64 {
    let z = 1.0 / (x * x);
    let mut acc = 0.0;
    for &c in BINET_COEFFS.iter().rev() {
        acc = acc * z + c;
    }
    acc / x
}

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "ln_gamma needs x > 0, got {x}");
    let mut shift = 0.0;
    let mut y = x;
    while y < STIRLING_MIN {
        shift += y.ln();
        y += 1.0;
    }
    (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + binet(y) - shift
}

/// `ln(Γ(x+a)/Γ(x))` for `x > 0` and `0 <= a <= 1`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    assert!(x > 0.0 && x.is_finite(), "ln_gamma_ratio needs x > 0");
    assert!((0.0..=1.0).contains(&a), "ln_gamma_ratio needs 0 <= a <= 1");
    let mut shift = 0.0;
    let mut y = x;
    while y < STIRLING_MIN {
        // Γ(x+a)/Γ(x) = [Γ(y+1+a)/Γ(y+1)] · y/(y+a)
        shift += y.ln() - (y + a).ln();
        y += 1.0;
    }
    // (y+a-1/2) ln(y+a) - (y-1/2) ln y - a + J(y+a) - J(y), expanded through
    // ln1p to keep every term O(ln y) instead of O(y ln y).
    a * y.ln() + (y + a - 0.5) * (a / y).ln_1p() - a + binet(y + a) - binet(y) + shift
}
