//! Probability laws: innovation distributions, the Gaussian+Gamma comparison
//! law, and the compact-spectrum smoothing law G_{a,b}.

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::{self, Substream};
use crate::special;
use num_complex::Complex64;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Innovation laws
// ---------------------------------------------------------------------------

/// Centered innovation distribution driving a Bernoulli shift.
///
/// Every draw consumes exactly one uniform (inverse-CDF sampling), so the
/// i-th innovation of a replicate is a pure function of the counter index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InnovationLaw {
    /// ±1 with equal probability.
    Rademacher,
    StandardNormal,
    /// Exp(rate) − 1/rate.
    CenteredExponential { rate: f64 },
    /// Uniform on (−1/2, 1/2).
    Uniform,
    /// Finite table of values with probabilities; must be centered.
    Table { values: Vec<f64>, probs: Vec<f64> },
}

impl InnovationLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            InnovationLaw::CenteredExponential { rate } => {
                if !(*rate > 0.0) {
                    return Err(Error::invalid("rate", format!("must be > 0, got {rate}")));
                }
            }
            InnovationLaw::Table { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::invalid(
                        "table",
                        "values and probs must be nonempty and of equal length",
                    ));
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::invalid("table", "probabilities must be >= 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(
                        "table",
                        format!("probabilities sum to {total}, not 1"),
                    ));
                }
                let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
                if mean.abs() > 1e-9 {
                    return Err(Error::invalid(
                        "table",
                        format!("law must be centered, mean = {mean}"),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Inverse-CDF draw from one uniform in (0, 1).
    #[inline]
    pub fn draw(&self, u: f64) -> f64 {
        match self {
            InnovationLaw::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            InnovationLaw::StandardNormal => special::std_normal_quantile(u),
            InnovationLaw::CenteredExponential { rate } => -(1.0 - u).ln() / rate - 1.0 / rate,
            InnovationLaw::Uniform => u - 0.5,
            InnovationLaw::Table { values, probs } => {
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u <= acc {
                        return *v;
                    }
                }
                *values.last().expect("nonempty table")
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            InnovationLaw::Rademacher => 1.0,
            InnovationLaw::StandardNormal => 1.0,
            InnovationLaw::CenteredExponential { rate } => 1.0 / (rate * rate),
            InnovationLaw::Uniform => 1.0 / 12.0,
            InnovationLaw::Table { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v * v * p).sum()
            }
        }
    }

    pub fn third_moment(&self) -> f64 {
        match self {
            InnovationLaw::Rademacher | InnovationLaw::StandardNormal | InnovationLaw::Uniform => {
                0.0
            }
            InnovationLaw::CenteredExponential { rate } => 2.0 / rate.powi(3),
            InnovationLaw::Table { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v.powi(3) * p).sum()
            }
        }
    }

    pub fn fourth_moment(&self) -> f64 {
        match self {
            InnovationLaw::Rademacher => 1.0,
            InnovationLaw::StandardNormal => 3.0,
            InnovationLaw::CenteredExponential { rate } => 9.0 / rate.powi(4),
            InnovationLaw::Uniform => 1.0 / 80.0,
            InnovationLaw::Table { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| v.powi(4) * p).sum()
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            InnovationLaw::Rademacher | InnovationLaw::StandardNormal | InnovationLaw::Uniform => {
                true
            }
            InnovationLaw::CenteredExponential { .. } => false,
            InnovationLaw::Table { .. } => self.third_moment().abs() < 1e-12,
        }
    }

    /// Characteristic function E e^{itε}.
    pub fn cf(&self, t: f64) -> Complex64 {
        match self {
            InnovationLaw::Rademacher => Complex64::new(t.cos(), 0.0),
            InnovationLaw::StandardNormal => Complex64::new((-0.5 * t * t).exp(), 0.0),
            InnovationLaw::CenteredExponential { rate } => {
                // e^{-it/rate} / (1 - it/rate)
                let shift = Complex64::new(0.0, -t / rate).exp();
                shift / Complex64::new(1.0, -t / rate)
            }
            InnovationLaw::Uniform => {
                let h = 0.5 * t;
                let v = if h.abs() < 1e-8 {
                    1.0 - h * h / 6.0
                } else {
                    h.sin() / h
                };
                Complex64::new(v, 0.0)
            }
            InnovationLaw::Table { values, probs } => values
                .iter()
                .zip(probs)
                .map(|(v, p)| Complex64::from_polar(*p, t * v))
                .sum(),
        }
    }
}

// ---------------------------------------------------------------------------
// Gaussian + Gamma comparison law
// ---------------------------------------------------------------------------

/// Law of L = Z + sign·(G − E G) with Z ~ N(0, σ²) and G ~ Γ(shape, rate)
/// independent, solved so that E L² = s_sq and E L³ = kappa_cu hold exactly.
///
/// Keeps the structural convention shape = s_sq · rate. With κ = 0 the law
/// degenerates to N(0, s_sq) (sign = 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussGammaLaw {
    pub s_sq: f64,
    pub kappa_cu: f64,
    pub n: u64,
    pub gauss_var: f64,
    pub gamma_shape: f64,
    pub gamma_rate: f64,
    pub sign: i8,
}

/// Solve the two-moment system for [`GaussGammaLaw`].
///
/// Gamma moment algebra: Var G = shape/rate², central third moment
/// 2·shape/rate³. With shape = s_sq·rate this forces
/// rate = √(2 s_sq / |κ|), gamma variance v = √(s_sq |κ| / 2), and the
/// Gaussian picks up σ² = s_sq − v, which is feasible iff |κ| ≤ 2 s_sq.
pub fn fit_gauss_gamma(s_sq: f64, kappa_cu: f64, n: u64) -> Result<GaussGammaLaw> {
    if !(s_sq > 0.0) {
        return Err(Error::invalid("s_sq", format!("must be > 0, got {s_sq}")));
    }
    if kappa_cu == 0.0 {
        return Ok(GaussGammaLaw {
            s_sq,
            kappa_cu,
            n,
            gauss_var: s_sq,
            gamma_shape: 0.0,
            gamma_rate: 0.0,
            sign: 0,
        });
    }
    let max_kappa = 2.0 * s_sq;
    if kappa_cu.abs() > max_kappa {
        return Err(Error::GaussGammaInfeasible {
            kappa: kappa_cu,
            max_kappa,
            s_sq,
        });
    }
    let rate = (2.0 * s_sq / kappa_cu.abs()).sqrt();
    let shape = s_sq * rate;
    let gamma_var = shape / (rate * rate);
    Ok(GaussGammaLaw {
        s_sq,
        kappa_cu,
        n,
        gauss_var: s_sq - gamma_var,
        gamma_shape: shape,
        gamma_rate: rate,
        sign: if kappa_cu > 0.0 { 1 } else { -1 },
    })
}

/// M i.i.d. draws of L, replicate j a pure function of (stream, j).
///
/// One Gaussian and one Gamma variate per draw; no n-fold summation.
pub fn sample_ln(law: &GaussGammaLaw, seed: u64, stream_id: u64, m: u64) -> Vec<f64> {
    let sk = rng::stream_key(seed, stream_id);
    let sigma = law.gauss_var.max(0.0).sqrt();
    (0..m)
        .map(|j| {
            let rk = rng::replicate_key(sk, j);
            let z = sigma * special::std_normal_quantile(rng::uniform(rk, 0));
            if law.sign == 0 {
                return z;
            }
            let mut sub = Substream::new(rk, 0);
            let gamma = rand_distr::Gamma::new(law.gamma_shape, 1.0 / law.gamma_rate)
                .expect("resolved law has valid gamma parameters");
            let g = gamma.sample(&mut sub);
            let centered = g - law.gamma_shape / law.gamma_rate;
            z + law.sign as f64 * centered
        })
        .collect()
}

/// CDF of L by integrating the gamma CDF against the Gaussian component.
///
/// Absolute error ≤ 1e−7 (adaptive quadrature over ±12σ of the Gaussian;
/// the statrs regularized incomplete gamma carries machine precision).
pub fn ln_cdf(law: &GaussGammaLaw, x: f64) -> Result<f64> {
    let s = law.s_sq.sqrt();
    if law.sign == 0 {
        return Ok(special::std_normal_cdf(x / s));
    }
    let sigma = law.gauss_var.max(0.0).sqrt();
    let mu_g = law.gamma_shape / law.gamma_rate;
    let gamma = statrs::distribution::Gamma::new(law.gamma_shape, law.gamma_rate)
        .map_err(|e| Error::invalid("gamma", e.to_string()))?;
    let sign = law.sign as f64;
    if sigma < 1e-10 {
        // Pure (reflected) centered gamma.
        let t = sign * x + mu_g;
        let p = if t <= 0.0 { 0.0 } else { gamma.cdf(t) };
        return Ok(if law.sign > 0 { p } else { 1.0 - p });
    }
    // sign=+1: F(x) = E_Z F_Γ(x − Z + μ); sign=−1: F(x) = E_Z [1 − F_Γ(Z − x + μ)].
    let f = |z: f64| {
        let w = special::std_normal_pdf(z / sigma) / sigma;
        let t = sign * (x - z) + mu_g;
        let p = if t <= 0.0 { 0.0 } else { gamma.cdf(t) };
        let val = if law.sign > 0 { p } else { 1.0 - p };
        w * val
    };
    let (v, _) = quad::integrate_adaptive(f, -12.0 * sigma, 12.0 * sigma, 1e-9, 1 << 14)?;
    Ok(v.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Smoothing law G_{a,b}
// ---------------------------------------------------------------------------

/// Law with density c_b · a · (sin(ax)/(ax))^b and compactly supported
/// Fourier transform (support [−ab, ab]).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SmoothingLaw {
    a: f64,
    b: u32,
    c_b: f64,
}

/// ∫ (sin u / u)^b du over the line, closed form for even b:
/// π / (2^{b−1} (b−1)!) · Σ_k (−1)^k C(b,k) (b−2k)^{b−1}, k < b/2.
fn sinc_power_integral(b: u32) -> f64 {
    let bf = b as f64;
    let mut sum = 0.0;
    let mut k = 0u32;
    while 2 * k < b {
        let term = (special::ln_binomial(b as u64, k as u64)
            + (bf - 1.0) * ((bf - 2.0 * k as f64).ln()))
        .exp();
        sum += if k % 2 == 0 { term } else { -term };
        k += 1;
    }
    PI / (2f64.powi(b as i32 - 1) * special::ln_gamma(bf).exp()) * sum
}

/// Irwin-Hall density of the sum of `b` standard uniforms at `t` ∈ [0, b].
///
/// Folded onto [0, b/2] by symmetry: fewer alternating terms, so the
/// cancellation error stays ≤ ~b/2 digits, and evenness is exact.
fn irwin_hall_pdf(b: u32, t: f64) -> f64 {
    if t <= 0.0 || t >= b as f64 {
        return 0.0;
    }
    let bf = b as f64;
    let t = t.min(bf - t);
    let mut sum = 0.0;
    for k in 0..=(t.floor() as u32) {
        let term = (special::ln_binomial(b as u64, k as u64)
            + (bf - 1.0) * (t - k as f64).max(0.0).ln())
        .exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    sum / special::ln_gamma(bf).exp()
}

impl SmoothingLaw {
    /// `b` must be even and in [6, 20]; `a > 0`.
    pub fn new(a: f64, b: u32) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::invalid("a", format!("must be > 0, got {a}")));
        }
        if b % 2 != 0 || !(6..=20).contains(&b) {
            return Err(Error::invalid(
                "b",
                format!("must be even and in [6, 20], got {b}"),
            ));
        }
        Ok(SmoothingLaw {
            a,
            b,
            c_b: 1.0 / sinc_power_integral(b),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    /// Normalization constant c_b = 1 / ∫ (sin u/u)^b du.
    pub fn c_b(&self) -> f64 {
        self.c_b
    }

    /// End of the Fourier support: ĝ(t) = 0 for |t| > ab.
    pub fn spectrum_edge(&self) -> f64 {
        self.a * self.b as f64
    }

    /// Density g_{a,b}(x), removable singularity at 0.
    pub fn density(&self, x: f64) -> f64 {
        let u = self.a * x;
        let s = if u.abs() < 1e-8 {
            1.0 - u * u / 6.0
        } else {
            u.sin() / u
        };
        self.c_b * self.a * s.powi(self.b as i32)
    }

    /// Fourier transform ĝ(t) = 2π c_b a · u^{*b}(t): the b-fold self
    /// convolution of the uniform density on [−a, a], rescaled. Evaluates
    /// through the Irwin-Hall piecewise polynomial; exactly 0 beyond ±ab
    /// and exactly 1 at 0 by the normalization identity.
    pub fn cf(&self, t: f64) -> f64 {
        let edge = self.spectrum_edge();
        if t.abs() >= edge {
            return 0.0;
        }
        if t == 0.0 {
            return 1.0;
        }
        let ih = irwin_hall_pdf(self.b, (t + edge) / (2.0 * self.a));
        PI * self.c_b * ih
    }

    /// Variance by quadrature plus the period-averaged power-law tail.
    pub fn variance(&self) -> f64 {
        let cut = 40.0 / self.a;
        // Pre-split below the sin(ax) wavelength to rule out node aliasing.
        let (core, _) = quad::integrate_adaptive_presplit(
            |x: f64| x * x * self.density(x),
            0.0,
            cut,
            1e-11,
            1 << 14,
            32,
        )
        .expect("smooth integrand");
        // ∫_cut^∞ x² c_b a sin^b(ax) (ax)^{-b} dx with sin^b replaced by its
        // period mean C(b, b/2) 2^{-b}; the oscillating remainder integrates
        // by parts to O(cut^{2-b}).
        let bf = self.b as f64;
        let mean_sin = special::ln_binomial(u64::from(self.b), u64::from(self.b / 2)).exp()
            * 0.5f64.powi(self.b as i32);
        let tail =
            mean_sin * self.c_b * self.a.powf(1.0 - bf) * cut.powf(3.0 - bf) / (bf - 3.0);
        2.0 * (core + tail)
    }

    /// Spline knots of the Fourier transform (for audits): the Irwin-Hall
    /// breakpoints mapped to the spectrum axis.
    pub fn spectrum_knots(&self) -> Vec<f64> {
        (0..=self.b)
            .map(|k| 2.0 * self.a * k as f64 - self.spectrum_edge())
            .collect()
    }

    /// One draw by rejection from the envelope min(1, (a|x|)^{−b})
    /// (uniform core, Pareto tail). Consumes a variable number of uniforms
    /// from `sub`; acceptance rate is I_b(b−1)/(2b) ≈ 0.72 at b = 6.
    pub fn sample_one(&self, sub: &mut Substream) -> f64 {
        let bf = self.b as f64;
        let core_prob = (bf - 1.0) / bf;
        loop {
            let u_region = sub.next_uniform();
            let (sign, v) = if u_region < 0.5 {
                (-1.0, 2.0 * u_region)
            } else {
                (1.0, 2.0 * u_region - 1.0)
            };
            let u_mag = sub.next_uniform();
            let u_acc = sub.next_uniform();
            if v < core_prob {
                // |x| <= 1/a, envelope = 1
                let x = sign * u_mag / self.a;
                let u_ax = self.a * x;
                let s = if u_ax.abs() < 1e-8 {
                    1.0 - u_ax * u_ax / 6.0
                } else {
                    u_ax.sin() / u_ax
                };
                if u_acc <= s.powi(self.b as i32) {
                    return x;
                }
            } else {
                // |x| > 1/a, envelope = (a|x|)^{-b}; accept w.p. sin(ax)^b
                let x = sign * u_mag.powf(-1.0 / (bf - 1.0)) / self.a;
                if u_acc <= (self.a * x).sin().powi(self.b as i32) {
                    return x;
                }
            }
        }
    }

    /// M deterministic draws; replicate j uses its own substream.
    pub fn sample(&self, seed: u64, stream_id: u64, m: u64) -> Vec<f64> {
        let sk = rng::stream_key(seed, stream_id);
        (0..m)
            .map(|j| {
                let rk = rng::replicate_key(sk, j);
                self.sample_one(&mut Substream::new(rk, 0))
            })
            .collect()
    }
}

/// Tabulated CDF of a smoothing law for distance computations.
///
/// Cumulative Simpson on a fine symmetric grid plus the exact Pareto-tail
/// envelope bound beyond it; absolute error ≤ 1e−8 for the default grid.
pub struct SmoothingCdf {
    law: SmoothingLaw,
    xs: Vec<f64>,
    cum: Vec<f64>,
    tail: f64,
}

impl SmoothingCdf {
    pub fn new(law: &SmoothingLaw, points: usize) -> Self {
        let cut = 60.0 / law.a();
        let n = points.max(4096) | 1; // odd count for Simpson pairs
        let h = 2.0 * cut / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -cut + i as f64 * h).collect();
        let dens: Vec<f64> = xs.iter().map(|&x| law.density(x)).collect();
        let bf = law.b() as f64;
        let tail = law.c_b() * law.a().powf(1.0 - bf) * cut.powf(1.0 - bf) / (bf - 1.0);
        let mut cum = vec![0.0; n];
        cum[0] = tail;
        // Simpson over consecutive pairs keeps the cumulative error O(h^4).
        for i in (2..n).step_by(2) {
            let inc = h / 3.0 * (dens[i - 2] + 4.0 * dens[i - 1] + dens[i]);
            cum[i] = cum[i - 2] + inc;
            cum[i - 1] = cum[i - 2] + 0.5 * inc; // midpoint fill, locally O(h^3)
        }
        SmoothingCdf {
            law: law.clone(),
            xs,
            cum,
            tail,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let lo = self.xs[0];
        let hi = *self.xs.last().expect("nonempty grid");
        let bf = self.law.b() as f64;
        if x <= lo {
            // Pareto envelope tail: ∫_{-∞}^x c_b a (a|t|)^{-b} dt
            let t = self.law.c_b() * self.law.a().powf(1.0 - bf) * (-x).powf(1.0 - bf)
                / (bf - 1.0);
            return t.min(self.tail);
        }
        if x >= hi {
            let t = self.law.c_b() * self.law.a().powf(1.0 - bf) * x.powf(1.0 - bf) / (bf - 1.0);
            return 1.0 - t.min(self.tail);
        }
        let h = self.xs[1] - self.xs[0];
        let idx = ((x - lo) / h).floor() as usize;
        let idx = idx.min(self.xs.len() - 2);
        let frac = x - self.xs[idx];
        // Linear-in-density local correction (trapezoid within the cell).
        let d0 = self.law.density(self.xs[idx]);
        let d1 = self.law.density(x);
        self.cum[idx] + 0.5 * (d0 + d1) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn innovation_moments_match_closed_forms() {
        let laws = [
            (InnovationLaw::Rademacher, 1.0, 0.0, 1.0),
            (InnovationLaw::StandardNormal, 1.0, 0.0, 3.0),
            (
                InnovationLaw::CenteredExponential { rate: 1.0 },
                1.0,
                2.0,
                9.0,
            ),
            (InnovationLaw::Uniform, 1.0 / 12.0, 0.0, 1.0 / 80.0),
        ];
        for (law, v, t, f) in laws {
            assert_abs_diff_eq!(law.variance(), v, epsilon = 1e-15);
            assert_abs_diff_eq!(law.third_moment(), t, epsilon = 1e-15);
            assert_abs_diff_eq!(law.fourth_moment(), f, epsilon = 1e-15);
        }
    }

    #[test]
    fn inverse_cdf_draws_match_moments() {
        // One uniform per draw; sample moments at 3 SE.
        let law = InnovationLaw::CenteredExponential { rate: 1.0 };
        let k = rng::replicate_key(rng::stream_key(11, 0), 0);
        let m = 1_000_000u64;
        let (mut s1, mut s3) = (0.0, 0.0);
        for i in 0..m {
            let x = law.draw(rng::uniform(k, i));
            s1 += x;
            s3 += x * x * x;
        }
        let mean = s1 / m as f64;
        let third = s3 / m as f64;
        assert!(mean.abs() < 3e-3, "mean = {mean}");
        // Var(ε³) = Eε⁶ − (Eε³)² = 265 − 4 = 261 for Exp(1)−1, SE ≈ 0.0162
        assert!((third - 2.0).abs() < 3.0 * 0.0162, "third = {third}");
    }

    #[test]
    fn table_law_validation() {
        let bad = InnovationLaw::Table {
            values: vec![1.0, 2.0],
            probs: vec![0.5, 0.5],
        };
        assert!(bad.validate().is_err()); // not centered
        let good = InnovationLaw::Table {
            values: vec![-1.0, 3.0],
            probs: vec![0.75, 0.25],
        };
        good.validate().unwrap();
        assert_abs_diff_eq!(good.variance(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn innovation_cf_at_zero_is_one() {
        for law in [
            InnovationLaw::Rademacher,
            InnovationLaw::StandardNormal,
            InnovationLaw::CenteredExponential { rate: 2.0 },
            InnovationLaw::Uniform,
        ] {
            let v = law.cf(0.0);
            assert_abs_diff_eq!(v.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn centered_exponential_cf_derivatives() {
        // φ'(0) = iE ε = 0, −φ''(0) = E ε² = 1 for rate 1 (finite differences).
        let law = InnovationLaw::CenteredExponential { rate: 1.0 };
        let h = 1e-5;
        let d1 = (law.cf(h) - law.cf(-h)) / (2.0 * h);
        let d2 = (law.cf(h) + law.cf(-h) - law.cf(0.0) * 2.0) / (h * h);
        assert!(d1.norm() < 1e-9);
        assert_abs_diff_eq!(-d2.re, 1.0, epsilon = 1e-5);
    }

    #[test]
    fn gauss_gamma_solves_moment_system() {
        let law = fit_gauss_gamma(1.0, 0.2, 100).unwrap();
        let v = law.gamma_shape / (law.gamma_rate * law.gamma_rate);
        assert_abs_diff_eq!(law.gauss_var + v, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            2.0 * law.gamma_shape / law.gamma_rate.powi(3),
            0.2,
            epsilon = 1e-12
        );
        assert_eq!(law.sign, 1);
        // shape = s_sq · rate convention
        assert_abs_diff_eq!(law.gamma_shape, law.s_sq * law.gamma_rate, epsilon = 1e-12);
    }

    #[test]
    fn gauss_gamma_degenerate_and_infeasible() {
        let degenerate = fit_gauss_gamma(2.0, 0.0, 10).unwrap();
        assert_eq!(degenerate.sign, 0);
        assert_abs_diff_eq!(degenerate.gauss_var, 2.0, epsilon = 1e-15);
        match fit_gauss_gamma(1.0, 2.5, 10) {
            Err(Error::GaussGammaInfeasible { max_kappa, .. }) => {
                assert_abs_diff_eq!(max_kappa, 2.0, epsilon = 1e-15)
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn gauss_gamma_reflection_symmetry() {
        let plus = fit_gauss_gamma(1.0, 0.3, 50).unwrap();
        let minus = fit_gauss_gamma(1.0, -0.3, 50).unwrap();
        assert_eq!(minus.sign, -1);
        for &x in &[-1.5, -0.2, 0.0, 0.7, 2.0] {
            let f_minus = ln_cdf(&minus, x).unwrap();
            let f_plus = ln_cdf(&plus, -x).unwrap();
            assert_abs_diff_eq!(f_minus, 1.0 - f_plus, epsilon = 1e-7);
        }
    }

    #[test]
    fn ln_cdf_degenerate_matches_gaussian() {
        let law = fit_gauss_gamma(4.0, 0.0, 10).unwrap();
        for &x in &[-3.0, 0.0, 1.0] {
            assert_abs_diff_eq!(
                ln_cdf(&law, x).unwrap(),
                special::std_normal_cdf(x / 2.0),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn ln_cdf_monotone_with_limits() {
        let law = fit_gauss_gamma(1.0, 0.4, 100).unwrap();
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let mut prev = -1.0;
        for &x in &xs {
            let f = ln_cdf(&law, x).unwrap();
            assert!(f >= prev - 1e-9, "non-monotone at {x}");
            prev = f;
        }
        assert!(ln_cdf(&law, -10.0).unwrap() < 1e-6);
        assert!(ln_cdf(&law, 10.0).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn ln_sample_moments_hit_targets() {
        // Variance within 3 SE of s_sq and third moment within 3 SE of κ.
        let law = fit_gauss_gamma(1.0, 0.2, 100).unwrap();
        let draws = sample_ln(&law, 2024, 0, 1_000_000);
        let m = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / m;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
        let third = draws.iter().map(|x| x.powi(3)).sum::<f64>() / m;
        let se_var = (2.0f64 / m).sqrt(); // ~N: Var(x²)≈2 for unit variance
        assert!((var - 1.0).abs() < 3.0 * se_var * 2.0, "var = {var}");
        // Var(L³) ≈ E L⁶ ≈ 15 for the near-Gaussian law; SE ≈ 3.9e-3
        assert!((third - 0.2).abs() < 3.0 * 4.5e-3, "third = {third}");
    }

    #[test]
    fn smoothing_constant_c6() {
        let law = SmoothingLaw::new(1.0, 6).unwrap();
        assert_abs_diff_eq!(law.c_b(), 20.0 / (11.0 * PI), epsilon = 1e-14);
        // and by quadrature, independently of the closed form
        let (i6, _) = quad::integrate_adaptive_presplit(
            |u: f64| {
                let s = if u.abs() < 1e-8 { 1.0 } else { u.sin() / u };
                s.powi(6)
            },
            -200.0,
            200.0,
            1e-10,
            1 << 15,
            256,
        )
        .unwrap();
        // tail beyond ±200: ≤ 2·∫ u^{-6} = 2/(5·200⁵) ≈ 1.25e-12
        assert_abs_diff_eq!(1.0 / i6, 20.0 / (11.0 * PI), epsilon = 1e-9);
    }

    #[test]
    fn smoothing_density_normalizes() {
        let law = SmoothingLaw::new(0.5, 8).unwrap();
        let cut = 80.0;
        let (v, _) = quad::integrate_adaptive_presplit(
            |x: f64| law.density(x),
            -cut,
            cut,
            1e-10,
            1 << 15,
            64,
        )
        .unwrap();
        let bf = 8.0f64;
        let tail = 2.0 * law.c_b() * law.a().powf(1.0 - bf) * cut.powf(1.0 - bf) / (bf - 1.0);
        assert!((v + tail - 1.0).abs() < 1e-6, "mass = {}", v + tail);
    }

    #[test]
    fn spectrum_identity_and_support() {
        for (a, b) in [(1.0, 6u32), (0.25, 6), (2.0, 8), (0.125 / 6.0, 6)] {
            let law = SmoothingLaw::new(a, b).unwrap();
            assert_abs_diff_eq!(law.cf(0.0), 1.0, epsilon = 1e-12);
            let edge = law.spectrum_edge();
            assert_eq!(law.cf(edge + 1e-12), 0.0);
            assert_eq!(law.cf(-edge - 0.5), 0.0);
            assert_abs_diff_eq!(law.cf(0.3 * edge), law.cf(-0.3 * edge), epsilon = 1e-13);
        }
    }

    #[test]
    fn spectrum_matches_direct_fourier_integral() {
        // ĝ(t) = ∫ e^{itx} g(x) dx, cross-checked by quadrature at a few t.
        // Pre-split below the cos wavelength so the panels cannot alias.
        let law = SmoothingLaw::new(1.0, 6).unwrap();
        for &t in &[0.0f64, 1.0, 3.0, 5.5] {
            let (re, _) = quad::integrate_adaptive_presplit(
                |x: f64| (t * x).cos() * law.density(x),
                -400.0,
                400.0,
                1e-9,
                1 << 16,
                800 * (1 + t.ceil() as usize),
            )
            .unwrap();
            assert_abs_diff_eq!(law.cf(t), re, epsilon = 5e-7);
        }
    }

    #[test]
    fn sampler_moments_and_symmetry() {
        let law = SmoothingLaw::new(1.0, 6).unwrap();
        let xs = law.sample(7, 0, 200_000);
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / m;
        let target = law.variance();
        // Var of x² draws ≈ E x⁴ − (E x²)²; x⁴ has heavy-ish tails for b=6
        assert!(mean.abs() < 0.01, "mean = {mean}");
        assert!((var - target).abs() < 0.05 * target.max(0.1), "var = {var}");
    }

    #[test]
    fn smoothing_cdf_is_calibrated() {
        let law = SmoothingLaw::new(1.0, 6).unwrap();
        let cdf = SmoothingCdf::new(&law, 1 << 15);
        assert_abs_diff_eq!(cdf.cdf(0.0), 0.5, epsilon = 1e-8);
        assert!(cdf.cdf(-1e9) >= 0.0 && cdf.cdf(-60.0) < 1e-6);
        assert!(cdf.cdf(60.0) > 1.0 - 1e-6);
        // numeric derivative reproduces the density
        let h = 1e-4;
        for &x in &[-2.0, -0.5, 0.3, 1.7] {
            let d = (cdf.cdf(x + h) - cdf.cdf(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(d, law.density(x), epsilon = 1e-5);
        }
    }
}
