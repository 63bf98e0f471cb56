//! Spherical Bessel functions of the first and second kind.
//!
//! `j_l` is evaluated by upward recurrence while `x > l` and by Miller's
//! downward recurrence otherwise, normalized against whichever of `j_0`, `j_1`
//! is larger in magnitude. `n_l` (also written `y_l`) always uses upward
//! recurrence, which is stable for the second kind.
//!
//! Derivatives follow from `f_l' = f_{l-1} - (l+1) f_l / x` with
//! `j_{-1}(x) = cos x / x` and `n_{-1}(x) = sin x / x`.

use crate::error::{Error, Result};

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// Values and first derivatives of `j_l` and `n_l` at one argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub j: f64,
    pub dj: f64,
    pub y: f64,
    pub dy: f64,
}

fn check_x(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Argument(format!("non-finite argument x = {x}")));
    }
    if x < 0.0 {
        return Err(Error::Argument(format!("negative argument x = {x}")));
    }
    Ok(())
}

/// `j_l(x)` for `x >= 0`.
pub fn sph_bessel_j(l: u32, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(if l == 0 { 1.0 } else { 0.0 });
    }
    Ok(j_with_lower(l, x).1)
}

/// `n_l(x)` for `x > 0`.
pub fn sph_bessel_y(l: u32, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Err(Error::Domain("n_l has a pole at x = 0".into()));
    }
    Ok(y_with_lower(l, x).1)
}

/// `j_l'(x)` for `x >= 0`.
pub fn sph_bessel_j_prime(l: u32, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(if l == 1 { 1.0 / 3.0 } else { 0.0 });
    }
    let (lower, value) = j_with_lower(l, x);
    Ok(lower - (l as f64 + 1.0) * value / x)
}

/// `n_l'(x)` for `x > 0`.
pub fn sph_bessel_y_prime(l: u32, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 {
        return Err(Error::Domain("n_l' has a pole at x = 0".into()));
    }
    let (lower, value) = y_with_lower(l, x);
    Ok(lower - (l as f64 + 1.0) * value / x)
}

/// Both kinds and their derivatives at `x > 0`, without argument checks.
///
/// This is the hot path used by the spectral solver and quadratures.
pub fn bessel_pair(l: u32, x: f64) -> BesselPair {
    let (jl1, j) = j_with_lower(l, x);
    let (yl1, y) = y_with_lower(l, x);
    let lp1 = l as f64 + 1.0;
    BesselPair {
        j,
        dj: jl1 - lp1 * j / x,
        y,
        dy: yl1 - lp1 * y / x,
    }
}

/// `D_l(a, b) = j_l(b) n_l(a) - j_l(a) n_l(b)` for `0 < a < b`.
///
/// Its zeros in `omega` (with `a = omega r_i / c`, `b = omega r_o / c`) are the
/// cavity eigenfrequencies.
pub fn cross_product(l: u32, x_inner: f64, x_outer: f64) -> Result<f64> {
    check_x(x_inner)?;
    check_x(x_outer)?;
    if x_inner <= 0.0 {
        return Err(Error::Domain("inner argument must be positive".into()));
    }
    if x_inner >= x_outer {
        return Err(Error::Argument(format!(
            "cross product needs x_inner < x_outer, got {x_inner} >= {x_outer}"
        )));
    }
    Ok(cross_product_relaxed(l, x_inner, x_outer))
}

/// [`cross_product`] without the ordering precondition. Both arguments must be positive.
pub fn cross_product_relaxed(l: u32, a: f64, b: f64) -> f64 {
    let (_, ja) = j_with_lower(l, a);
    let (_, jb) = j_with_lower(l, b);
    let (_, ya) = y_with_lower(l, a);
    let (_, yb) = y_with_lower(l, b);
    jb * ya - ja * yb
}

fn j0(x: f64) -> f64 {
    x.sin() / x
}

fn j1(x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    s / (x * x) - c / x
}

/// Returns `(j_{l-1}(x), j_l(x))` for `x > 0`.
fn j_with_lower(l: u32, x: f64) -> (f64, f64) {
    if l == 0 {
        return (x.cos() / x, j0(x));
    }
    if x > l as f64 {
        let mut prev = j0(x);
        let mut cur = j1(x);
        for k in 1..l {
            let next = (2 * k + 1) as f64 / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return (prev, cur);
    }
    miller(l, x)
}

/// Downward recurrence from well above `l`, normalized against `j_0` or `j_1`.
fn miller(l: u32, x: f64) -> (f64, f64) {
    let start = l + 20 + (40.0 * l as f64).sqrt().ceil() as u32;
    let mut upper = 0.0_f64; // f_{k+1}
    let mut cur = 1.0_f64; // f_k
    let mut at_l = 0.0;
    let mut at_lm1 = 0.0;
    let mut f1 = 0.0;
    for k in (1..=start).rev() {
        // f_{k-1} = (2k+1)/x f_k - f_{k+1}
        let lower = (2 * k + 1) as f64 / x * cur - upper;
        upper = cur;
        cur = lower;
        let idx = k - 1;
        if idx == l {
            at_l = cur;
        } else if idx + 1 == l {
            at_lm1 = cur;
        }
        if idx == 1 {
            f1 = cur;
        }
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            upper *= RESCALE_BY;
            at_l *= RESCALE_BY;
            at_lm1 *= RESCALE_BY;
            f1 *= RESCALE_BY;
        }
    }
    // Loop exits with cur = f_0, upper = f_1 (f1 holds the same value).
    let f0 = cur;
    let true0 = j0(x);
    let true1 = j1(x);
    let scale = if true0.abs() >= true1.abs() {
        true0 / f0
    } else {
        true1 / f1
    };
    (at_lm1 * scale, at_l * scale)
}

/// Returns `(n_{l-1}(x), n_l(x))` for `x > 0`.
fn y_with_lower(l: u32, x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    if l == 0 {
        return (s / x, y0);
    }
    let mut prev = y0;
    let mut cur = -c / (x * x) - s / x;
    for k in 1..l {
        let next = (2 * k + 1) as f64 / x * cur - prev;
        prev = cur;
        cur = next;
        if !cur.is_finite() {
            break;
        }
    }
    (prev, cur)
}
