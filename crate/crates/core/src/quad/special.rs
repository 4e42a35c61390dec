//! Beta functions for the product-integration weights.

const MAX_ITER: usize = 300;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

pub(crate) fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// Continued fraction for `I_x(a, b)` (modified Lentz), valid and fast for
/// `x < (a + 1) / (a + b + 2)`.
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lower incomplete beta integral `B(x; a, b) = int_0^x w^{a-1} (1-w)^{b-1} dw`
/// (not regularized), for `a, b > 0` and `0 <= x <= 1`.
pub(crate) fn inc_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return beta(a, b);
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        // x^a (1-x)^b / a * cf
        (a * x.ln() + b * libm::log1p(-x)).exp() * betacf(a, b, x) / a
    } else {
        beta(a, b) - (b * libm::log1p(-x) + a * x.ln()).exp() * betacf(b, a, 1.0 - x) / b
    }
}

/// `int_lo^hi w^{a-1} (1-w)^{-1/2} dw` for `0 <= lo <= hi <= 1`.
///
/// Near `w = 1` the difference is taken in the reflected variable `1 - w`,
/// so panels close to the singularity keep full relative accuracy. The
/// complements are passed in explicitly because `1 - w` loses digits when
/// formed from `w`.
pub(crate) fn half_beta_segment(lo: f64, hi: f64, one_minus_lo: f64, one_minus_hi: f64, a: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if lo >= 0.5 {
        inc_beta(one_minus_lo, 0.5, a) - inc_beta(one_minus_hi, 0.5, a)
    } else if hi <= 0.5 {
        inc_beta(hi, a, 0.5) - inc_beta(lo, a, 0.5)
    } else {
        (inc_beta(0.5, a, 0.5) - inc_beta(lo, a, 0.5)) + (inc_beta(0.5, 0.5, a) - inc_beta(one_minus_hi, 0.5, a))
    }
}
