//! Gauss-Legendre quadrature: fixed panels, composite rules, and a simple
//! adaptive bisection driver.
//!
//! Nodes are generated once by Newton iteration on the Legendre recurrence
//! rather than transcribed from tables.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul};
use std::sync::OnceLock;

/// Values a quadrature rule can accumulate: reals and complex numbers.
pub trait IntegrandValue:
    Copy + Add<Output = Self> + Mul<f64, Output = Self> + num_traits::Zero
{
    fn magnitude(self) -> f64;
}

impl IntegrandValue for f64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl IntegrandValue for Complex64 {
    #[inline]
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn compute_gl(order: usize) -> Vec<(f64, f64)> {
    let n = order;
    let mut out = vec![(0.0, 0.0); n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * pp * pp);
        out[i] = (-z, w);
        out[n - 1 - i] = (z, w);
    }
    out
}

pub fn gl16() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| compute_gl(16))
}

pub fn gl32() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| compute_gl(32))
}

/// Single-panel Gauss-Legendre integral of `f` over [a, b].
pub fn integrate_panel<V: IntegrandValue, F: FnMut(f64) -> V + ?Sized>(
    f: &mut F,
    a: f64,
    b: f64,
    nodes: &[(f64, f64)],
) -> V {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = V::zero();
    for &(x, w) in nodes {
        acc = acc + f(mid + half * x) * (w * half);
    }
    acc
}

/// Composite GL-16 with panels no wider than `max_width`.
pub fn integrate_composite<V: IntegrandValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    max_width: f64,
) -> V {
    if b <= a {
        return V::zero();
    }
    let panels = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut acc = V::zero();
    for i in 0..panels {
        let lo = a + i as f64 * h;
        acc = acc + integrate_panel(&mut f, lo, lo + h, gl16());
    }
    acc
}

/// Adaptive bisection with a GL16-vs-GL32 error estimate per interval.
///
/// Returns the integral and an accumulated error estimate; errors out if
/// the tolerance cannot be met within the evaluation budget.
///
/// The error estimate trusts the initial panel to resolve the integrand's
/// structure. For oscillatory integrands use [`integrate_adaptive_presplit`]
/// with panels no wider than a wavelength, or GL16 and GL32 can alias in
/// unison and agree on a wrong answer.
pub fn integrate_adaptive<V: IntegrandValue>(
    f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<(V, f64)> {
    integrate_adaptive_presplit(f, a, b, abs_tol, max_intervals, 1)
}

/// [`integrate_adaptive`] starting from `presplit` equal panels.
pub fn integrate_adaptive_presplit<V: IntegrandValue>(
    mut f: impl FnMut(f64) -> V,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_intervals: usize,
    presplit: usize,
) -> Result<(V, f64)> {
    if b <= a {
        return Ok((V::zero(), 0.0));
    }
    struct Seg<V> {
        lo: f64,
        hi: f64,
        value: V,
        err: f64,
    }
    let estimate = |f: &mut dyn FnMut(f64) -> V, lo: f64, hi: f64| -> Seg<V> {
        let coarse = integrate_panel(f, lo, hi, gl16());
        let fine = integrate_panel(f, lo, hi, gl32());
        let err = (fine + coarse * (-1.0f64)).magnitude();
        Seg {
            lo,
            hi,
            value: fine,
            err,
        }
    };
    let parts = presplit.clamp(1, max_intervals);
    let h = (b - a) / parts as f64;
    let mut segs: Vec<Seg<V>> = (0..parts)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == parts { b } else { lo + h };
            estimate(&mut f, lo, hi)
        })
        .collect();
    let mut used = parts;
    loop {
        let total_err: f64 = segs.iter().map(|s| s.err).sum();
        if total_err <= abs_tol {
            let mut acc = V::zero();
            for s in &segs {
                acc = acc + s.value;
            }
            return Ok((acc, total_err));
        }
        if used >= max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:.3e} > tol {abs_tol:.3e} after {used} intervals \
                 on [{a:.6}, {b:.6}]"
            )));
        }
        // Split the worst interval.
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let Seg { lo, hi, .. } = segs[idx];
        let mid = 0.5 * (lo + hi);
        segs[idx] = estimate(&mut f, lo, mid);
        segs.push(estimate(&mut f, mid, hi));
        used += 1;
    }
}
