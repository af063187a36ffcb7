//! Standard normal functions with stable log-scale tails.

use std::f64::consts::FRAC_1_SQRT_2;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Below this point the lower tail is evaluated through its continued
/// fraction instead of `erfc`.
const TAIL: f64 = -30.0;

pub const Z_90: f64 = 1.644_853_626_951_472_2;
pub const Z_95: f64 = 1.959_963_984_540_054;
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[inline]
pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

#[inline]
pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Upper-tail Mills ratio `(1 - Phi(x)) / phi(x)` for large `x`, by
/// continued fraction.
fn mills_upper(x: f64) -> f64 {
    let mut acc = x;
    for k in (1..=60).rev() {
        acc = x + k as f64 / acc;
    }
    1.0 / acc
}

#[inline]
pub fn ln_cdf(z: f64) -> f64 {
    if z < TAIL {
        ln_pdf(z) + mills_upper(-z).ln()
    } else if z > 0.0 {
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else {
        cdf(z).ln()
    }
}

/// Inverse Mills ratio `phi(z) / Phi(z)`.
#[inline]
pub fn inverse_mills(z: f64) -> f64 {
    if z < TAIL {
        1.0 / mills_upper(-z)
    } else {
        pdf(z) / cdf(z)
    }
}

/// `ln Phi(z)` and `phi(z) / Phi(z)` in one pass.
#[inline]
pub fn ln_cdf_and_mills(z: f64) -> (f64, f64) {
    if z < TAIL {
        let r = mills_upper(-z);
        (ln_pdf(z) + r.ln(), 1.0 / r)
    } else {
        let c = cdf(z);
        let lc = if z > 0.0 {
            (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
        } else {
            c.ln()
        };
        (lc, pdf(z) / c)
    }
}

/// Two-sided p-value of a standard normal test statistic.
pub fn two_sided_p(t: f64) -> f64 {
    libm::erfc(t.abs() * FRAC_1_SQRT_2)
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}
