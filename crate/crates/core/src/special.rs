//! Special functions.
//!
//! The Gaussian CDF runs through an in-house `erfc` (positive-term Maclaurin
//! series below z = 2, Lentz continued fraction above) because the `statrs`
//! rational approximation carries ~1e−11 error, an order of magnitude too
//! coarse for the expansion diagnostics. Log-gamma delegates to `statrs`;
//! the sine integral is implemented here (series for small argument,
//! continued fraction of the exponential integral otherwise) because no
//! common crate provides it at full double precision.

use num_complex::Complex64;
use statrs::function::erf;
use statrs::function::gamma;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

const SQRT_PI: f64 = 1.7724538509055160273;

/// Complementary error function, relative error ≤ 2e−13 (absolute ≤ 1e−15).
pub fn erfc_hp(z: f64) -> f64 {
    if z < 0.0 {
        return 2.0 - erfc_hp(-z);
    }
    if z <= 2.0 {
        // 1 − erf: cancellation amplification is at most erf(2)/erfc(2) ≈ 214.
        1.0 - erf_series(z)
    } else {
        erfc_cf(z)
    }
}

/// erf by the positive-term series erf(z) = 2z e^{−z²}/√π · Σ (2z²)^k/(2k+1)!!.
fn erf_series(z: f64) -> f64 {
    let t = 2.0 * z * z;
    let mut term = 1.0;
    let mut s = 1.0;
    let mut k = 0u32;
    while term > 1e-18 * s && k < 200 {
        k += 1;
        term *= t / (2 * k + 1) as f64;
        s += term;
    }
    2.0 * z / SQRT_PI * (-z * z).exp() * s
}

/// √π e^{z²} erfc(z) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ···)))), z > 2.
fn erfc_cf(z: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = z;
    let mut c = f;
    let mut d = 0.0;
    for j in 1..300u32 {
        let a = j as f64 / 2.0;
        d = z + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = z + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    (-z * z).exp() / (SQRT_PI * f)
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc_hp(-x / SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile, `p` in (0, 1): a `statrs` starting point
/// polished by two Newton steps against the high-precision CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    let mut x = -SQRT_2 * erf::erfc_inv(2.0 * p);
    for _ in 0..2 {
        let f = std_normal_cdf(x) - p;
        let d = std_normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        x -= f / d;
    }
    x
}

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// log C(n, k) via log-gamma.
#[inline]
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Sine integral Si(z) = ∫₀ᶻ sin t / t dt, odd in z.
///
/// Relative error is at machine level over the whole real line: a Maclaurin
/// series below z = 5 and Si(z) = π/2 + Im E₁(iz) above, with E₁ evaluated
/// by the modified Lentz continued fraction.
pub fn sin_integral(z: f64) -> f64 {
    let az = z.abs();
    if az == 0.0 {
        return 0.0;
    }
    let s = if az <= 5.0 {
        si_series(az)
    } else {
        FRAC_PI_2 + e1_imag_axis(az).im
    };
    if z < 0.0 {
        -s
    } else {
        s
    }
}

fn si_series(z: f64) -> f64 {
    // t_k = (-1)^k z^(2k+1) / (2k+1)!,  Si = Σ t_k / (2k+1)
    let zz = z * z;
    let mut t = z;
    let mut s = z;
    for k in 1..120u32 {
        t *= -zz / ((2 * k) as f64 * (2 * k + 1) as f64);
        s += t / (2 * k + 1) as f64;
        if t.abs() < 1e-18 {
            break;
        }
    }
    s
}

/// E₁(iz) for z > 0:
/// E₁(w) = e^{-w} / (w + 1 - 1²/(w + 3 - 2²/(w + 5 - …))).
fn e1_imag_axis(z: f64) -> Complex64 {
    let w = Complex64::new(0.0, z);
    let tiny = 1e-300;
    let mut f = w + 1.0;
    if f.norm_sqr() < tiny {
        f = Complex64::new(tiny, 0.0);
    }
    let mut cc = f;
    let mut dd = Complex64::new(0.0, 0.0);
    for k in 1..400u32 {
        let ak = -((k as f64) * (k as f64));
        let bk = w + (2 * k + 1) as f64;
        dd = bk + dd * ak;
        if dd.norm_sqr() < tiny {
            dd = Complex64::new(tiny, 0.0);
        }
        cc = bk + ak / cc;
        if cc.norm_sqr() < tiny {
            cc = Complex64::new(tiny, 0.0);
        }
        dd = dd.inv();
        let delta = cc * dd;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(z.cos(), -z.sin()) / f
}
