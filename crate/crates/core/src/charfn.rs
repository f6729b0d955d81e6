//! Berry–Esseen tail integrals 𝔗ₐᵇ(x) and the characteristics 𝔠ₐ and 𝔦ₐ.
//!
//! 𝔗ₐᵇ(x) = ∫_{a≤|ξ|≤b} e^{−iξx} φ(ξ) (1 − |ξ|/b) dξ/ξ. Conjugate symmetry
//! folds this onto the positive half-line,
//!
//!   𝔗ₐᵇ(x) = 2i ∫_a^b Im(e^{−iξx} φ(ξ)) (1/ξ − 1/b) dξ,
//!
//! so every value produced here is purely imaginary by construction.
//!
//! Three evaluation paths cover the source catalog:
//!
//! * atomic measures (the Rademacher lattice, empirical samples): the
//!   integral against a point mass at v has the closed form 2i·K(v − x)
//!   with K(y) = Si(by) − Si(ay) − (cos ay − cos by)/(by), so 𝔗 is an
//!   exact kernel sum with no quadrature error;
//! * smooth analytic CFs: adaptive quadrature restricted to the "live"
//!   segments where |φ| clears 1e−18, with panels no wider than the
//!   oscillation wavelength 2π/|x|;
//! * sources whose CF vanishes identically on [a, b] (Example 2.4 with
//!   the spectrum edge below the cutoff) short-circuit to exact zeros.
//!
//! The sup over x needed by 𝔠ₐ is taken on a grid with spacing ≤ π/(2b)
//! (four samples per period of the fastest component). Two devices keep
//! the scan affordable without giving up the reported value: if the L¹
//! bound 2∫|φ|w ≤ 0.05/b the sup term cannot matter against the 1/b
//! floor and the bound itself is reported, and otherwise the scan window
//! grows only until the integration-by-parts envelope
//! |𝔗(x)| ≤ 2(|h(a)| + ∫|h′|)/|x|, h = φ·w, falls below the running max,
//! which certifies the remaining grid points cannot raise it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{InnovationLaw, SmoothingLaw};
use crate::processes::SampleSet;
use crate::quad;
use crate::special;

/// Ratified default for the cutoff constant in Tₙ = c_T √n.
pub const DEFAULT_C_T: f64 = 0.25;
/// Ratified default for the window constant in τₙ = c_τ √(log n).
pub const DEFAULT_C_TAU: f64 = 4.0;
/// Default top of the geometric b-grid.
pub fn default_b_max(n: u64) -> f64 {
    16.0 * (n as f64).sqrt()
}
/// Cutoff Tₙ = c_T √n.
pub fn cutoff_t(c_t: f64, n: u64) -> f64 {
    c_t * (n as f64).sqrt()
}
/// Integration window τₙ = c_τ √(log n).
pub fn tau_n(c_tau: f64, n: u64) -> f64 {
    c_tau * (n as f64).ln().sqrt()
}

/// |φ| below exp(−LN_FLOOR) = 1e−18 is treated as dead.
const LN_FLOOR: f64 = 41.446531673892825;

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

/// Closed-form characteristic functions of Sₙ/√n.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticCf {
    /// i.i.d. innovations: φ_ε(ξ/√n)ⁿ.
    IidGeneral { law: InnovationLaw, n: u64 },
    /// i.i.d. Rademacher: cosⁿ(ξ/√n); evaluated through its binomial atoms.
    Lattice { n: u64 },
    /// Exactly N(0, s²): e^{−s²ξ²/2}.
    GaussianSum { s: f64 },
    /// Rademacher sum plus the telescoping ⋄-smoothing of Example 2.4:
    /// cosⁿ(u)·ĝ(u)², u = ξ/√n, identically zero once |u| passes the
    /// spectrum edge of G_{a,b}.
    Example1 { n: u64, law: SmoothingLaw },
    /// Moving average over i.i.d. innovations: Π_t φ_ε(w_t ξ/√n) with the
    /// window weights w_t = Σ{ aᵢ : 1 ≤ t+i ≤ n }.
    MaQ {
        coeffs: Vec<f64>,
        law: InnovationLaw,
        n: u64,
    },
}

/// Replicate-average CF of a stored sample.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalCf {
    values: Vec<f64>,
}

impl EmpiricalCf {
    pub fn from_sample(sample: &SampleSet<f64>) -> Result<Self> {
        Self::from_values(sample.sums.clone())
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 1000 {
            return Err(Error::Precondition(format!(
                "empirical CF needs M >= 1000 replicates, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("values", "non-finite sample value"));
        }
        Ok(EmpiricalCf { values })
    }

    pub fn m(&self) -> u64 {
        self.values.len() as u64
    }

    /// One-sigma CF noise floor M^{−1/2}.
    pub fn noise_floor(&self) -> f64 {
        1.0 / (self.values.len() as f64).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum CharFnSource {
    Analytic(AnalyticCf),
    Empirical(EmpiricalCf),
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 || n > i32::MAX as u64 {
        return Err(Error::invalid("n", format!("must be in [1, 2^31), got {n}")));
    }
    Ok(())
}

impl AnalyticCf {
    pub fn validate(&self) -> Result<()> {
        match self {
            AnalyticCf::IidGeneral { law, n } => {
                law.validate()?;
                check_n(*n)
            }
            AnalyticCf::Lattice { n } | AnalyticCf::Example1 { n, .. } => check_n(*n),
            AnalyticCf::GaussianSum { s } => {
                if !(s.is_finite() && *s > 0.0) {
                    return Err(Error::invalid("s", format!("must be > 0, got {s}")));
                }
                Ok(())
            }
            AnalyticCf::MaQ { coeffs, law, n } => {
                law.validate()?;
                check_n(*n)?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("coeffs", "must be non-empty and finite"));
                }
                Ok(())
            }
        }
    }

    fn cf(&self, xi: f64) -> Complex64 {
        match self {
            AnalyticCf::IidGeneral { law, n } => {
                law.cf(xi / (*n as f64).sqrt()).powu(*n as u32)
            }
            AnalyticCf::Lattice { n } => {
                let u = xi / (*n as f64).sqrt();
                Complex64::new(u.cos().powi(*n as i32), 0.0)
            }
            AnalyticCf::GaussianSum { s } => Complex64::new((-0.5 * s * s * xi * xi).exp(), 0.0),
            AnalyticCf::Example1 { n, law } => {
                let u = xi / (*n as f64).sqrt();
                let g = law.cf(u);
                Complex64::new(u.cos().powi(*n as i32) * g * g, 0.0)
            }
            AnalyticCf::MaQ { coeffs, law, n } => {
                let u = xi / (*n as f64).sqrt();
                let (boundary, interior, count) = ma_weights(coeffs, *n);
                let mut phi = law.cf(interior * u).powu(count as u32);
                for w in boundary {
                    phi *= law.cf(w * u);
                }
                phi
            }
        }
    }

    /// Standard deviation of Sₙ/√n, exact where trivial and by CF
    /// curvature 2(1 − Re φ(h))/h² otherwise. Sets the x-scan window.
    fn scale(&self) -> f64 {
        match self {
            AnalyticCf::GaussianSum { s } => *s,
            // Unit innovations; Example 2.4's smoothing only adds O(1/n).
            AnalyticCf::Lattice { n } | AnalyticCf::Example1 { n, .. } if *n >= 4 => 1.0,
            _ => {
                let h = 1e-3;
                let s_sq = 2.0 * (1.0 - self.cf(h).re) / (h * h);
                s_sq.max(1e-12).sqrt()
            }
        }
    }

    /// ξ-intervals of [lo, hi] on which |φ| can exceed 1e−18.
    fn live_segments(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        match self {
            AnalyticCf::GaussianSum { s } => {
                let top = hi.min((2.0 * LN_FLOOR).sqrt() / s);
                if top > lo {
                    vec![(lo, top)]
                } else {
                    Vec::new()
                }
            }
            AnalyticCf::Lattice { n } => lattice_windows(*n, lo, hi, f64::INFINITY),
            AnalyticCf::Example1 { n, law } => {
                lattice_windows(*n, lo, hi, law.spectrum_edge() * (*n as f64).sqrt())
            }
            _ => numeric_segments(|xi| self.cf(xi).norm(), lo, hi),
        }
    }

    /// Max quadrature panel width that resolves |φ|'s own structure.
    fn structure_panel(&self) -> f64 {
        0.25 / self.scale().max(1.0)
    }
}

impl CharFnSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            CharFnSource::Analytic(a) => a.validate(),
            CharFnSource::Empirical(_) => Ok(()),
        }
    }

    fn scale(&self) -> f64 {
        match self {
            CharFnSource::Analytic(a) => a.scale(),
            CharFnSource::Empirical(e) => {
                let m2 = e.values.iter().map(|v| v * v).sum::<f64>() / e.values.len() as f64;
                m2.sqrt().max(1e-6)
            }
        }
    }
}

impl From<AnalyticCf> for CharFnSource {
    fn from(a: AnalyticCf) -> Self {
        CharFnSource::Analytic(a)
    }
}

impl From<EmpiricalCf> for CharFnSource {
    fn from(e: EmpiricalCf) -> Self {
        CharFnSource::Empirical(e)
    }
}

/// E e^{iξ Sₙ/√n}: exact for analytic entries, replicate average otherwise.
pub fn cf_eval(source: &CharFnSource, xi: f64) -> Complex64 {
    match source {
        CharFnSource::Analytic(a) => a.cf(xi),
        CharFnSource::Empirical(e) => {
            let (mut re, mut im) = (0.0, 0.0);
            for &w in &e.values {
                let (s, c) = (xi * w).sin_cos();
                re += c;
                im += s;
            }
            let m = e.values.len() as f64;
            Complex64::new(re / m, im / m)
        }
    }
}

/// Window weights of an MA(q) sum: boundary values, the interior value Σa,
/// and the interior multiplicity (n − q)₊.
fn ma_weights(coeffs: &[f64], n: u64) -> (Vec<f64>, f64, u64) {
    let q = coeffs.len() as i64 - 1;
    let n_i = n as i64;
    let weight = |t: i64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let k = t + *i as i64;
                k >= 1 && k <= n_i
            })
            .map(|(_, &c)| c)
            .sum()
    };
    if n_i > q {
        let mut boundary: Vec<f64> = ((1 - q)..=0).map(weight).collect();
        boundary.extend(((n_i - q + 1)..=n_i).map(weight));
        (boundary, coeffs.iter().sum(), (n_i - q) as u64)
    } else {
        (((1 - q)..=n_i).map(weight).collect(), 0.0, 0)
    }
}

/// Revival windows of cosⁿ(ξ/√n) above the 1e−18 floor, clipped to
/// [lo, min(hi, cap)]. Each revival at ξ = kπ√n has half-width
/// √n·acos(exp(−LN_FLOOR/n)), an O(1) constant in ξ.
fn lattice_windows(n: u64, lo: f64, hi: f64, cap: f64) -> Vec<(f64, f64)> {
    let rn = (n as f64).sqrt();
    let top = hi.min(cap);
    if top <= lo {
        return Vec::new();
    }
    let t_max = (-LN_FLOOR / n as f64).exp().acos();
    if t_max >= FRAC_PI_2 - 1e-9 {
        return vec![(lo, top)];
    }
    let mut segs = Vec::new();
    let k_max = (top / rn + t_max) / PI;
    for k in 0..=(k_max.floor() as i64) {
        let center = k as f64 * PI * rn;
        let (s_lo, s_hi) = ((center - t_max * rn).max(lo), (center + t_max * rn).min(top));
        if s_hi > s_lo {
            segs.push((s_lo, s_hi));
        }
    }
    segs
}

/// Fallback live-segment detection: 4097 samples of |φ|, runs above the
/// floor padded by two samples.
fn numeric_segments(abs_cf: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    const NPTS: usize = 4096;
    if hi <= lo {
        return Vec::new();
    }
    let h = (hi - lo) / NPTS as f64;
    let floor = (-LN_FLOOR).exp();
    let alive: Vec<bool> = (0..=NPTS)
        .map(|i| abs_cf(lo + i as f64 * h) >= floor)
        .collect();
    let mut segs: Vec<(f64, f64)> = Vec::new();
    let mut run: Option<usize> = None;
    for i in 0..=NPTS + 1 {
        match (i <= NPTS && alive[i], run) {
            (true, None) => run = Some(i),
            (false, Some(start)) => {
                let s_lo = lo + (start.saturating_sub(2)) as f64 * h;
                let s_hi = lo + ((i + 1).min(NPTS) as f64) * h;
                match segs.last_mut() {
                    Some(last) if last.1 >= s_lo => last.1 = s_hi,
                    _ => segs.push((s_lo, s_hi)),
                }
                run = None;
            }
            _ => {}
        }
    }
    segs
}

// ---------------------------------------------------------------------------
// Kernel and atomic measures
// ---------------------------------------------------------------------------

/// Tail integral of a unit point mass at offset y:
/// K(y) = Si(by) − Si(ay) − (cos ay − cos by)/(by), odd in y.
pub(crate) fn band_kernel(a: f64, b: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    let z = y.abs();
    let k = special::sin_integral(b * z) - special::sin_integral(a * z)
        - ((a * z).cos() - (b * z).cos()) / (b * z);
    if y < 0.0 {
        -k
    } else {
        k
    }
}

/// Binomial atoms of the Rademacher lattice with |v| ≤ 13 (mass outside
/// is below 4e−37). Atoms are stored as the integer 2j − n so grid
/// alignment in the convolution scan stays exact.
struct LatticeAtoms {
    rn: f64,
    atoms: Vec<(i64, f64)>,
}

fn lattice_atoms(n: u64) -> LatticeAtoms {
    let rn = (n as f64).sqrt();
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let span = (6.5 * rn).ceil() as i64;
    let mid = (n / 2) as i64;
    let mut atoms = Vec::new();
    for j in (mid - span).max(0)..=(mid + span).min(n as i64) {
        let p = (special::ln_binomial(n, j as u64) - ln2n).exp();
        if p > 0.0 {
            atoms.push((2 * j - n as i64, p));
        }
    }
    LatticeAtoms { rn, atoms }
}

impl LatticeAtoms {
    fn tail_at(&self, a: f64, b: f64, x: f64) -> f64 {
        self.atoms
            .iter()
            .map(|&(d, p)| p * band_kernel(a, b, d as f64 / self.rn - x))
            .sum::<f64>()
            * 2.0
    }

    /// |𝔗| on a uniform grid of spacing ≤ max_dx covering [−x_max, x_max],
    /// with atoms landing exactly on grid points so the kernel can be
    /// tabulated once.
    fn scan(&self, a: f64, b: f64, x_max: f64, max_dx: f64) -> (Vec<f64>, f64) {
        let dv = 2.0 / self.rn;
        let mut l = (dv / max_dx).ceil().max(1.0) as i64;
        if l % 2 == 1 && self.atoms.first().is_some_and(|(d, _)| d.abs() % 2 == 1) {
            l += 1;
        }
        let delta = dv / l as f64;
        let mx = (x_max / delta).ceil() as i64;
        let idx: Vec<(i64, f64)> = self.atoms.iter().map(|&(d, p)| (d * l / 2, p)).collect();
        let d_max = idx.iter().map(|(m, _)| m.abs()).max().unwrap_or(0) + mx;
        let table: Vec<f64> = (0..=d_max)
            .into_par_iter()
            .map(|d| band_kernel(a, b, d as f64 * delta))
            .collect();
        let vals: Vec<f64> = (-mx..=mx)
            .into_par_iter()
            .map(|m| {
                let mut s = 0.0;
                for &(mj, p) in &idx {
                    let d = mj - m;
                    s += p * if d >= 0 {
                        table[d as usize]
                    } else {
                        -table[(-d) as usize]
                    };
                }
                2.0 * s.abs()
            })
            .collect();
        (vals, delta)
    }
}

fn empirical_tail_at(values: &[f64], a: f64, b: f64, x: f64) -> f64 {
    let s: f64 = values.iter().map(|&w| band_kernel(a, b, w - x)).sum();
    2.0 * s / values.len() as f64
}

fn empirical_scan(values: &[f64], a: f64, b: f64, x_max: f64, max_dx: f64) -> (Vec<f64>, f64) {
    let steps = (x_max / max_dx).ceil().max(1.0) as i64;
    let delta = x_max / steps as f64;
    let vals: Vec<f64> = (-steps..=steps)
        .into_par_iter()
        .map(|m| empirical_tail_at(values, a, b, m as f64 * delta).abs())
        .collect();
    (vals, delta)
}

// ---------------------------------------------------------------------------
// Tail integral
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TailIntegralResult {
    pub a: f64,
    pub b: f64,
    pub xs: Vec<f64>,
    /// 𝔗ₐᵇ at each grid x; purely imaginary by the symmetry reduction.
    pub values: Vec<Complex64>,
    pub quad_error: f64,
}

impl TailIntegralResult {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One signed quadrature J(x) = ∫ Im(e^{−iξx}φ(ξ)) (1/ξ − 1/b) dξ over the
/// live segments; 𝔗 = 2i·J.
fn smooth_tail_at(
    cf: &AnalyticCf,
    segs: &[(f64, f64)],
    b: f64,
    x: f64,
    panel: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let mut total = 0.0;
    let mut err = 0.0;
    for &(lo, hi) in segs {
        let osc = ((hi - lo) * x.abs() / PI).ceil();
        let structural = ((hi - lo) / panel).ceil();
        let presplit = osc.max(structural).max(4.0).min(4096.0) as usize;
        let (v, e) = quad::integrate_adaptive_presplit(
            |xi: f64| {
                let phi = cf.cf(xi);
                let (s, c) = (xi * x).sin_cos();
                (phi.im * c - phi.re * s) * (1.0 / xi - 1.0 / b)
            },
            lo,
            hi,
            tol,
            1 << 14,
            presplit,
        )?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

/// 𝔗ₐᵇ on a caller-supplied x-grid.
pub fn tail_integral(source: &CharFnSource, a: f64, b: f64, xs: &[f64]) -> Result<TailIntegralResult> {
    source.validate()?;
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", format!("must be > 0, got {a}")));
    }
    if !(b.is_finite() && b >= a) {
        return Err(Error::invalid("b", format!("must satisfy b >= a, got {b}")));
    }
    let pure = |j: f64| Complex64::new(0.0, 2.0 * j);
    if b == a || xs.is_empty() {
        return Ok(TailIntegralResult {
            a,
            b,
            xs: xs.to_vec(),
            values: vec![Complex64::new(0.0, 0.0); xs.len()],
            quad_error: 0.0,
        });
    }
    let (values, quad_error) = match source {
        CharFnSource::Analytic(AnalyticCf::Lattice { n }) => {
            let atoms = lattice_atoms(*n);
            let values: Vec<Complex64> = xs
                .par_iter()
                .map(|&x| pure(atoms.tail_at(a, b, x) / 2.0))
                .collect();
            (values, 1e-12)
        }
        CharFnSource::Empirical(e) => {
            let values: Vec<Complex64> = xs
                .par_iter()
                .map(|&x| pure(empirical_tail_at(&e.values, a, b, x) / 2.0))
                .collect();
            (values, 1e-12)
        }
        CharFnSource::Analytic(cf) => {
            let segs = cf.live_segments(a, b);
            let panel = cf.structure_panel();
            let dead = (-LN_FLOOR).exp() * (b - a) / a;
            let out: Result<Vec<(f64, f64)>> = xs
                .par_iter()
                .map(|&x| smooth_tail_at(cf, &segs, b, x, panel, 1e-11))
                .collect();
            let out = out?;
            let err = out.iter().map(|(_, e)| *e).fold(0.0, f64::max) + dead;
            (out.into_iter().map(|(j, _)| pure(j)).collect(), err)
        }
    };
    Ok(TailIntegralResult {
        a,
        b,
        xs: xs.to_vec(),
        values,
        quad_error,
    })
}

/// CSV rows `a,b,x,re,im`.
pub fn write_tail_csv(result: &TailIntegralResult, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "a,b,x,re,im").expect("vec write");
    for (x, v) in result.xs.iter().zip(&result.values) {
        writeln!(out, "{},{},{x},{},{}", result.a, result.b, v.re, v.im).expect("vec write");
    }
    std::fs::write(path, out).map_err(Error::from)
}

// ---------------------------------------------------------------------------
// Characteristics
// ---------------------------------------------------------------------------

/// Geometric cutoff grid for the minimization over b.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BGrid {
    pub a: f64,
    pub b_max: f64,
    pub points: usize,
}

impl BGrid {
    pub fn new(a: f64, b_max: f64, points: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid("a", format!("must be > 0, got {a}")));
        }
        if !(b_max.is_finite() && b_max >= a) {
            return Err(Error::invalid("b_max", format!("must be >= a, got {b_max}")));
        }
        if points == 0 || (b_max > a && points < 2) {
            return Err(Error::invalid("points", "need >= 2 points when b_max > a"));
        }
        Ok(BGrid { a, b_max, points })
    }

    /// Default grid for the Berry–Esseen characteristic at cutoff a.
    pub fn standard(a: f64, b_max: f64) -> Result<Self> {
        Self::new(a, b_max, 24)
    }

    pub fn geometric(&self) -> Vec<f64> {
        if self.points == 1 || self.b_max == self.a {
            return vec![self.a];
        }
        let ratio = (self.b_max / self.a).powf(1.0 / (self.points - 1) as f64);
        let mut bs: Vec<f64> = (0..self.points)
            .map(|i| self.a * ratio.powi(i as i32))
            .collect();
        bs[0] = self.a;
        let last = self.points - 1;
        bs[last] = self.b_max;
        bs
    }
}

/// Knobs for the sup-scan; the defaults implement the module contract.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScanPolicy {
    /// Initial window is max(core_mult·s, core_min).
    pub core_mult: f64,
    pub core_min: f64,
    /// Grid spacing = spacing_mult · π/(2b); must be ≤ 1.
    pub spacing_mult: f64,
    /// Skip the scan when 2∫|φ|w ≤ prune_rel / b.
    pub prune_rel: f64,
    /// Per-x quadrature tolerance on smooth sources.
    pub quad_tol: f64,
}

impl Default for ScanPolicy {
    fn default() -> Self {
        ScanPolicy {
            core_mult: 8.0,
            core_min: 13.0,
            spacing_mult: 1.0,
            prune_rel: 0.05,
            quad_tol: 1e-11,
        }
    }
}

impl ScanPolicy {
    fn validate(&self) -> Result<()> {
        if !(self.spacing_mult > 0.0 && self.spacing_mult <= 1.0) {
            return Err(Error::invalid("spacing_mult", "must be in (0, 1]"));
        }
        if !(self.core_mult > 0.0 && self.core_min > 0.0 && self.prune_rel > 0.0) {
            return Err(Error::invalid("scan policy", "constants must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicResult {
    pub a: f64,
    /// min over b of (sup_x |𝔗ₐᵇ| + 1/b), or the integrated analogue.
    pub value: f64,
    pub argmin_b: f64,
    /// The |𝔗| part of the objective at argmin_b.
    pub sup_term: f64,
    /// Scan window half-width at argmin_b; 0 when the L¹ bound made a
    /// scan unnecessary.
    pub x_window: f64,
    pub x_spacing: f64,
    pub b_points: usize,
    /// Empirical sources only: one-sigma 𝔗-level noise (b−a)·w(a)·M^{−1/2}.
    pub floor: Option<f64>,
    /// True when sup_term is at or below the noise floor, i.e. the value
    /// should be read as "≤ floor + 1/b", never as an exact zero.
    pub below_floor: bool,
    /// Integrated variant: effective half-window τ actually used.
    pub tau: Option<f64>,
}

impl CharacteristicResult {
    /// The stable external schema.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "a": self.a,
            "value": self.value,
            "argmin_b": self.argmin_b,
            "floor": self.floor,
        })
    }
}

struct BOutcome {
    sup: f64,
    x_window: f64,
    spacing: f64,
    tau_eff: f64,
}

/// ∫|φ|·w over the live segments plus the dead-zone slack.
fn l1_bound(cf: &AnalyticCf, segs: &[(f64, f64)], a: f64, b: f64, panel: f64) -> f64 {
    let mut total = (-LN_FLOOR).exp() * (b - a) / a;
    for &(lo, hi) in segs {
        total += quad::integrate_composite(
            |xi: f64| cf.cf(xi).norm() * (1.0 / xi - 1.0 / b),
            lo,
            hi,
            panel,
        );
    }
    total
}

/// Integration-by-parts envelope constant: |𝔗(x)| ≤ env/|x| with
/// env = 2(|h(a)| + ∫|h′|), h = φ·(1/ξ − 1/b). The derivative is taken by
/// central differences; a 1.25 safety factor absorbs that and the
/// composite-rule roughness. Only used to certify that grid points beyond
/// the scanned window cannot raise the sup.
fn envelope_constant(cf: &AnalyticCf, segs: &[(f64, f64)], a: f64, b: f64, panel: f64) -> f64 {
    let fd = (panel / 8.0).min(0.01);
    let mut total = cf.cf(a).norm() * (1.0 / a - 1.0 / b);
    for &(lo, hi) in segs {
        total += quad::integrate_composite(
            |xi: f64| {
                let dphi = (cf.cf(xi + fd) - cf.cf(xi - fd)).norm() / (2.0 * fd);
                let w = (1.0 / xi - 1.0 / b).max(0.0);
                dphi * w + cf.cf(xi).norm() / (xi * xi)
            },
            lo,
            hi,
            panel,
        );
    }
    total += (-LN_FLOOR).exp() * (b - a) / (a * a);
    2.0 * 1.25 * total
}

enum ScanTarget {
    /// sup over the grid.
    Sup,
    /// Trapezoid of |𝔗| over [−τ, τ].
    Integral(f64),
}

fn reduce(vals: &[f64], spacing: f64, target: &ScanTarget) -> f64 {
    match target {
        ScanTarget::Sup => vals.iter().copied().fold(0.0, f64::max),
        ScanTarget::Integral(_) => {
            let sum: f64 = vals.iter().sum();
            spacing * (sum - 0.5 * (vals.first().unwrap_or(&0.0) + vals.last().unwrap_or(&0.0)))
        }
    }
}

/// The |𝔗|-dependent part of the objective for one cutoff b.
fn scan_b(
    source: &CharFnSource,
    a: f64,
    b: f64,
    s: f64,
    policy: &ScanPolicy,
    target: &ScanTarget,
) -> Result<BOutcome> {
    let none = |sup: f64, tau_eff: f64| BOutcome {
        sup,
        x_window: 0.0,
        spacing: 0.0,
        tau_eff,
    };
    if b <= a {
        return Ok(match target {
            ScanTarget::Sup => none(0.0, 0.0),
            ScanTarget::Integral(tau) => none(0.0, *tau),
        });
    }
    let max_dx = policy.spacing_mult * FRAC_PI_2 / b;

    // Analytic sources first try the L¹ prune.
    let analytic = match source {
        CharFnSource::Analytic(cf) => {
            let segs = cf.live_segments(a, b);
            let panel = cf.structure_panel();
            let l1 = l1_bound(cf, &segs, a, b, panel);
            if 2.0 * l1 <= policy.prune_rel / b {
                return Ok(match target {
                    ScanTarget::Sup => none(2.0 * l1, 0.0),
                    // |𝔗| ≤ 2L¹ pointwise, so the trapezoid is bounded too.
                    ScanTarget::Integral(tau) => none(2.0 * tau * l1, *tau),
                });
            }
            Some((cf, segs, panel))
        }
        CharFnSource::Empirical(_) => None,
    };

    let run_scan = |x_max: f64| -> Result<(Vec<f64>, f64)> {
        match source {
            CharFnSource::Analytic(AnalyticCf::Lattice { n }) => {
                Ok(lattice_atoms(*n).scan(a, b, x_max, max_dx))
            }
            CharFnSource::Empirical(e) => Ok(empirical_scan(&e.values, a, b, x_max, max_dx)),
            CharFnSource::Analytic(_) => {
                let (cf, segs, panel) = analytic.as_ref().expect("analytic path");
                let steps = (x_max / max_dx).ceil().max(1.0) as i64;
                let delta = x_max / steps as f64;
                let vals: Result<Vec<f64>> = (-steps..=steps)
                    .into_par_iter()
                    .map(|m| {
                        smooth_tail_at(cf, segs, b, m as f64 * delta, *panel, policy.quad_tol)
                            .map(|(j, _)| 2.0 * j.abs())
                    })
                    .collect();
                Ok((vals?, delta))
            }
        }
    };

    if let ScanTarget::Integral(tau) = target {
        let (vals, spacing) = run_scan(*tau)?;
        let tau_eff = spacing * ((vals.len() - 1) / 2) as f64;
        return Ok(BOutcome {
            sup: reduce(&vals, spacing, target),
            x_window: tau_eff,
            spacing,
            tau_eff,
        });
    }

    // Sup target: widen the window until the far-field envelope certifies
    // the unscanned grid points cannot beat the running max.
    let x_spec = (policy.core_mult * s).max(4.0 * PI * b / a);
    let mut x_max = (policy.core_mult * s).max(policy.core_min).min(x_spec);
    let far_bound: Box<dyn Fn(f64) -> f64> = match source {
        CharFnSource::Analytic(_) => {
            let (cf, segs, panel) = analytic.as_ref().expect("analytic path");
            let env = envelope_constant(cf, segs, a, b, *panel);
            Box::new(move |x: f64| env / x)
        }
        CharFnSource::Empirical(e) => {
            let w_max = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let env = 2.0 * (2.0 / a + 4.0 / b);
            Box::new(move |x: f64| {
                if x > w_max + 0.5 {
                    env / (x - w_max)
                } else {
                    f64::INFINITY
                }
            })
        }
    };
    loop {
        let (vals, spacing) = run_scan(x_max)?;
        let sup = reduce(&vals, spacing, target);
        if far_bound(x_max) <= sup || x_max >= x_spec {
            return Ok(BOutcome {
                sup,
                x_window: x_max,
                spacing,
                tau_eff: 0.0,
            });
        }
        x_max = (2.0 * x_max).min(x_spec);
    }
}

fn minimize_over_b(
    source: &CharFnSource,
    grid: &BGrid,
    policy: &ScanPolicy,
    target: ScanTarget,
) -> Result<CharacteristicResult> {
    source.validate()?;
    policy.validate()?;
    let s = source.scale();
    let is_integral = matches!(target, ScanTarget::Integral(_));
    let mut best: Option<(f64, f64, BOutcome)> = None;
    for b in grid.geometric() {
        let out = scan_b(source, grid.a, b, s, policy, &target)?;
        let floor_term = match target {
            ScanTarget::Sup => 1.0 / b,
            ScanTarget::Integral(_) => 2.0 * out.tau_eff / b,
        };
        let objective = out.sup + floor_term;
        if best.as_ref().map_or(true, |(o, _, _)| objective < *o) {
            best = Some((objective, b, out));
        }
    }
    let (value, argmin_b, out) = best.expect("non-empty b grid");
    let floor = match source {
        CharFnSource::Empirical(e) => {
            let per_x = (argmin_b - grid.a) * (1.0 / grid.a - 1.0 / argmin_b) * e.noise_floor();
            Some(if is_integral { 2.0 * out.tau_eff * per_x } else { per_x })
        }
        CharFnSource::Analytic(_) => None,
    };
    Ok(CharacteristicResult {
        a: grid.a,
        value,
        argmin_b,
        sup_term: out.sup,
        x_window: out.x_window,
        x_spacing: out.spacing,
        b_points: grid.points,
        below_floor: floor.is_some_and(|f| out.sup <= f),
        floor,
        tau: if is_integral { Some(out.tau_eff) } else { None },
    })
}

/// Berry–Esseen characteristic 𝔠ₐ = min_b (sup_x |𝔗ₐᵇ(x)| + 1/b).
pub fn characteristic(
    source: &CharFnSource,
    grid: &BGrid,
    policy: &ScanPolicy,
) -> Result<CharacteristicResult> {
    minimize_over_b(source, grid, policy, ScanTarget::Sup)
}

/// Integrated characteristic 𝔦ₐ = min_b ∫_{−τ}^{τ} (|𝔗ₐᵇ(x)| + 1/b) dx.
pub fn integrated_characteristic(
    source: &CharFnSource,
    grid: &BGrid,
    tau: f64,
    policy: &ScanPolicy,
) -> Result<CharacteristicResult> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", format!("must be > 0, got {tau}")));
    }
    minimize_over_b(source, grid, policy, ScanTarget::Integral(tau))
}
