//! Finite-n and long-run cumulants of the normalized sum Sₙ/√n.
//!
//! Three routes to the same quantities, cross-validated in tests:
//!
//! * Monte Carlo over replicate sums ([`estimate_finite_n`]),
//! * closed-form weight enumeration for iid / finite linear filters
//!   ([`closed_form_finite_n`], [`longrun_linear`]),
//! * truncated lag sums, either exactly enumerated or by Monte Carlo
//!   ([`longrun_bruteforce_exact`], [`longrun_bruteforce`]).
//!
//! Conventions: sₙ² = E(Sₙ/√n)² and κₙ³ = E(Sₙ/√n)³ (raw moments; the
//! process is centered). The long-run versions are 𝔰² = Σ_k E X₀X_k and
//! κ³ = Σ_{i,j} E X₀XᵢX_j, where the κ³ double sum runs over all ordered
//! pairs (i, j).

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::processes::{simulate_path, simulate_sample_set, Family, InnovationStream, ProcessSpec};

/// Default truncation lag for brute-force series. Every built-in family
/// has memory ≤ 32 or geometric coefficient decay, so the neglected tail
/// is below 1e-12 at this depth.
pub const DEFAULT_TRUNCATION: u64 = 32;

/// Batch count for batch-means standard errors.
const BATCHES: usize = 32;

/// How a cumulant estimate was produced.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    MonteCarlo,
    ClosedForm,
    BruteForce,
}

/// Second and third moments of Sₙ/√n at a fixed n.
#[derive(Clone, Debug, Serialize)]
pub struct CumulantSet {
    pub n: u64,
    pub s_n_sq: f64,
    pub kappa_n_cu: f64,
    /// Batch-means standard errors; zero for closed forms.
    pub se_s_n_sq: f64,
    pub se_kappa_n_cu: f64,
    pub method: MethodTag,
}

/// Long-run variance 𝔰² and third cumulant κ³.
#[derive(Clone, Debug, Serialize)]
pub struct LongRunSet {
    pub sigma_sq: f64,
    pub kappa_cu: f64,
    pub se_sigma_sq: f64,
    pub se_kappa_cu: f64,
    /// Truncation lag K of the lag sums (for closed forms, the filter
    /// memory: sums are complete beyond it).
    pub truncation: u64,
    pub method: MethodTag,
}

/// Fourth-moment growth diagnostic r(n) = |E Sₙ⁴ − 3n²sₙ⁴| / n.
#[derive(Clone, Debug, Serialize)]
pub struct FourthMomentCheck {
    pub n: u64,
    pub r: f64,
    pub se: f64,
    /// Replicates used; zero for the exact path.
    pub m: u64,
    pub method: MethodTag,
}

impl CumulantSet {
    /// Flat JSON records, one per quantity.
    pub fn records(&self) -> Vec<serde_json::Value> {
        let method = serde_json::to_value(self.method).expect("tag serializes");
        vec![
            serde_json::json!({
                "method": method, "quantity": "s_n_sq", "n": self.n,
                "value": self.s_n_sq, "se": self.se_s_n_sq,
            }),
            serde_json::json!({
                "method": method, "quantity": "kappa_n_cu", "n": self.n,
                "value": self.kappa_n_cu, "se": self.se_kappa_n_cu,
            }),
        ]
    }
}

impl LongRunSet {
    /// Flat JSON records, one per quantity.
    pub fn records(&self) -> Vec<serde_json::Value> {
        let method = serde_json::to_value(self.method).expect("tag serializes");
        vec![
            serde_json::json!({
                "method": method, "quantity": "sigma_sq", "K": self.truncation,
                "value": self.sigma_sq, "se": self.se_sigma_sq,
            }),
            serde_json::json!({
                "method": method, "quantity": "kappa_cu", "K": self.truncation,
                "value": self.kappa_cu, "se": self.se_kappa_cu,
            }),
        ]
    }

    /// Non-degeneracy gate: 𝔰² must clear zero by three standard errors
    /// (or outright, for closed forms).
    pub fn require_a3(&self) -> Result<()> {
        let floor = (3.0 * self.se_sigma_sq).max(1e-12);
        if self.sigma_sq <= floor {
            return Err(Error::DegenerateVariance {
                sigma_sq: self.sigma_sq,
            });
        }
        Ok(())
    }
}

impl FourthMomentCheck {
    pub fn record(&self) -> serde_json::Value {
        serde_json::json!({
            "method": serde_json::to_value(self.method).expect("tag serializes"),
            "quantity": "r", "n": self.n, "value": self.r, "se": self.se,
        })
    }
}

/// Standard error of a mean-like statistic from 32 near-equal contiguous
/// batches: sd of the batch statistics divided by √32. Robust to mild
/// heavy tails, and independent replicates make it an honest SE.
pub(crate) fn batch_se(values: &[f64], stat: impl Fn(&[f64]) -> f64) -> f64 {
    let b = BATCHES.min(values.len());
    let mut stats = Vec::with_capacity(b);
    for i in 0..b {
        let lo = i * values.len() / b;
        let hi = (i + 1) * values.len() / b;
        stats.push(stat(&values[lo..hi]));
    }
    let mean = stats.iter().sum::<f64>() / b as f64;
    let var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

fn require_replicates(m: u64) -> Result<()> {
    if m < 1_000 {
        return Err(Error::invalid(
            "m",
            "need at least 1000 replicates for stable batch standard errors",
        ));
    }
    Ok(())
}

fn mean_pow2(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

fn mean_pow3(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x * x).sum::<f64>() / xs.len() as f64
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Monte Carlo sₙ² and κₙ³ from M replicate sums.
pub fn estimate_finite_n(
    spec: &ProcessSpec,
    n: u64,
    m: u64,
    stream: &InnovationStream,
) -> Result<CumulantSet> {
    require_replicates(m)?;
    let set = simulate_sample_set::<f64>(spec, stream, n, m)?;
    let w = set.sums.as_slice();
    Ok(CumulantSet {
        n,
        s_n_sq: mean_pow2(w),
        kappa_n_cu: mean_pow3(w),
        se_s_n_sq: batch_se(w, mean_pow2),
        se_kappa_n_cu: batch_se(w, mean_pow3),
        method: MethodTag::MonteCarlo,
    })
}

/// The filter coefficients of a spec whose sum is a finite linear
/// combination of innovations, or None for recursive families.
fn linear_coefficients(spec: &ProcessSpec) -> Option<Vec<f64>> {
    match &spec.family {
        Family::Iid { .. } => Some(vec![1.0]),
        Family::Linear { coeffs, .. } => Some(coeffs.clone()),
        Family::Doubling { digits } => {
            Some((0..*digits).map(|i| 2f64.powi(-(i as i32) - 1)).collect())
        }
        _ => None,
    }
}

/// Σ w_t², Σ w_t³, Σ w_t⁴ for the innovation weights w_t of
/// Sₙ = Σ_{k=1..n} X_k under the filter X_k = Σ_i a_i ε_{k−i}:
/// w_t = Σ {a_i : 1 ≤ t+i ≤ n}, nonzero for t ∈ [1−q, n].
/// Interior weights (t ∈ [1, n−q]) all equal Σ a_i, so only 2q boundary
/// terms need enumeration.
fn weight_power_sums(coeffs: &[f64], n: u64) -> (f64, f64, f64) {
    let q = coeffs.len() as i64 - 1;
    let n = n as i64;
    let weight = |t: i64| -> f64 {
        let lo = 0.max(1 - t) as usize;
        let hi = q.min(n - t) as usize;
        coeffs[lo..=hi].iter().sum::<f64>()
    };
    let mut p2 = 0.0;
    let mut p3 = 0.0;
    let mut p4 = 0.0;
    if n > q {
        let a: f64 = coeffs.iter().sum();
        let interior = (n - q) as f64;
        p2 = interior * a * a;
        p3 = interior * a * a * a;
        p4 = interior * a * a * a * a;
    }
    let boundary: Box<dyn Iterator<Item = i64>> = if n > q {
        Box::new(((1 - q)..=0).chain((n - q + 1)..=n))
    } else {
        Box::new((1 - q)..=n)
    };
    for t in boundary {
        let w = weight(t);
        let w2 = w * w;
        p2 += w2;
        p3 += w2 * w;
        p4 += w2 * w2;
    }
    (p2, p3, p4)
}

fn require_linear(spec: &ProcessSpec, what: &str) -> Result<Vec<f64>> {
    linear_coefficients(spec).ok_or_else(|| {
        Error::Precondition(format!(
            "{what} needs an iid or finite linear-filter spec, got a recursive family"
        ))
    })
}

/// Exact sₙ² and κₙ³ for iid / linear / doubling specs by enumerating
/// the innovation weights of Sₙ.
pub fn closed_form_finite_n(spec: &ProcessSpec, n: u64) -> Result<CumulantSet> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let coeffs = require_linear(spec, "closed-form finite-n cumulants")?;
    let law = spec.innovation_law();
    let (p2, p3, _) = weight_power_sums(&coeffs, n);
    let nf = n as f64;
    Ok(CumulantSet {
        n,
        s_n_sq: law.variance() * p2 / nf,
        kappa_n_cu: law.third_moment() * p3 / (nf * nf.sqrt()),
        se_s_n_sq: 0.0,
        se_kappa_n_cu: 0.0,
        method: MethodTag::ClosedForm,
    })
}

/// Long-run cumulants of a finite linear filter, exactly:
/// 𝔰² = (Σ aᵢ)² σ_ε² and κ³ = (Σ aᵢ)³ E ε³.
pub fn longrun_linear(coeffs: &[f64], sigma_eps_sq: f64, eps_third: f64) -> Result<LongRunSet> {
    if coeffs.is_empty() {
        return Err(Error::invalid("coeffs", "must be non-empty"));
    }
    if !(sigma_eps_sq > 0.0) || !sigma_eps_sq.is_finite() {
        return Err(Error::invalid("sigma_eps_sq", "must be positive and finite"));
    }
    let a: f64 = coeffs.iter().sum();
    Ok(LongRunSet {
        sigma_sq: a * a * sigma_eps_sq,
        kappa_cu: a * a * a * eps_third,
        se_sigma_sq: 0.0,
        se_kappa_cu: 0.0,
        truncation: coeffs.len() as u64 - 1,
        method: MethodTag::ClosedForm,
    })
}

/// Truncated lag sums by exact enumeration of innovation-moment
/// contributions. Only iid / linear / doubling specs qualify, and the
/// truncation must cover the filter memory, so the sums are complete:
/// E X₀X_k = σ_ε² Σ_i aᵢ a_{i+k} and
/// E X₀XᵢX_j = Eε³ Σ_t a_t a_{t+i} a_{t+j}.
pub fn longrun_bruteforce_exact(spec: &ProcessSpec, k_lag: u64) -> Result<LongRunSet> {
    let coeffs = require_linear(spec, "exact brute-force enumeration")?;
    let q = coeffs.len() - 1;
    if (k_lag as usize) < q {
        return Err(Error::Precondition(format!(
            "truncation lag K={k_lag} is below the filter memory {q}; exact lag sums would be incomplete"
        )));
    }
    let law = spec.innovation_law();
    let lag_cov =
        |k: usize| -> f64 { (0..coeffs.len() - k).map(|i| coeffs[i] * coeffs[i + k]).sum() };
    let mut sigma_sq = lag_cov(0);
    for k in 1..=q {
        sigma_sq += 2.0 * lag_cov(k);
    }
    sigma_sq *= law.variance();
    // Σ_{i,j∈[−K,K]} Σ_t a_t a_{t+i} a_{t+j} = Σ_t a_t g_t² factorizes with
    // g_t = Σ {a_u : |u − t| ≤ K}; K ≥ q makes every g_t the full sum.
    let g = |t: usize| -> f64 {
        let lo = t.saturating_sub(k_lag as usize);
        let hi = (t + k_lag as usize).min(q);
        coeffs[lo..=hi].iter().sum::<f64>()
    };
    let kappa_cu: f64 =
        law.third_moment() * (0..=q).map(|t| coeffs[t] * g(t) * g(t)).sum::<f64>();
    Ok(LongRunSet {
        sigma_sq,
        kappa_cu,
        se_sigma_sq: 0.0,
        se_kappa_cu: 0.0,
        truncation: k_lag,
        method: MethodTag::BruteForce,
    })
}

/// Truncated lag sums by Monte Carlo over stationary windows. Each
/// replicate simulates X over a window of 2K+1 consecutive points; with
/// X₀ the center value and T the window sum, the estimators factorize as
/// Σ_{|k|≤K} Ê X₀X_k = Ê[X₀T] and Σ_{|i|,|j|≤K} Ê X₀XᵢX_j = Ê[X₀T²].
pub fn longrun_bruteforce(
    spec: &ProcessSpec,
    k_lag: u64,
    m: u64,
    stream: &InnovationStream,
) -> Result<LongRunSet> {
    require_replicates(m)?;
    let window = 2 * k_lag + 1;
    let pairs: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|rep| {
            let path = simulate_path::<f64>(spec, stream, window, rep)?;
            let x0 = path.values[k_lag as usize];
            let t: f64 = path.values.iter().sum();
            Ok((x0 * t, x0 * t * t))
        })
        .collect::<Result<_>>()?;
    let y2: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y3: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(LongRunSet {
        sigma_sq: mean(&y2),
        kappa_cu: mean(&y3),
        se_sigma_sq: batch_se(&y2, mean),
        se_kappa_cu: batch_se(&y3, mean),
        truncation: k_lag,
        method: MethodTag::BruteForce,
    })
}

/// Monte Carlo r(n) = |Ê Sₙ⁴ − 3n² ŝₙ⁴| / n. The attached SE is the
/// batch-means SE of the signed statistic n(Ê W⁴ − 3(Ê W²)²), W = Sₙ/√n,
/// so "within 3 SE of zero" keeps its usual meaning despite the fold.
pub fn check_fourth_moment(
    spec: &ProcessSpec,
    n: u64,
    m: u64,
    stream: &InnovationStream,
) -> Result<FourthMomentCheck> {
    require_replicates(m)?;
    let set = simulate_sample_set::<f64>(spec, stream, n, m)?;
    let stat = |xs: &[f64]| {
        let m2 = mean_pow2(xs);
        let m4 = xs.iter().map(|x| (x * x) * (x * x)).sum::<f64>() / xs.len() as f64;
        n as f64 * (m4 - 3.0 * m2 * m2)
    };
    Ok(FourthMomentCheck {
        n,
        r: stat(&set.sums).abs(),
        se: batch_se(&set.sums, stat),
        m,
        method: MethodTag::MonteCarlo,
    })
}

/// Exact r(n) for iid / linear / doubling specs. With innovation weights
/// w_t, E Sₙ⁴ − 3n²sₙ⁴ = Σ w_t⁴ (Eε⁴ − 3σ_ε⁴) exactly.
pub fn check_fourth_moment_exact(spec: &ProcessSpec, n: u64) -> Result<FourthMomentCheck> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let coeffs = require_linear(spec, "the exact fourth-moment identity")?;
    let law = spec.innovation_law();
    let (_, _, p4) = weight_power_sums(&coeffs, n);
    let excess = law.fourth_moment() - 3.0 * law.variance() * law.variance();
    Ok(FourthMomentCheck {
        n,
        r: (p4 * excess).abs() / n as f64,
        se: 0.0,
        m: 0,
        method: MethodTag::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::InnovationLaw;

    fn ma1_exp() -> ProcessSpec {
        ProcessSpec::new(Family::Linear {
            coeffs: vec![1.0, 0.5],
            law: InnovationLaw::CenteredExponential { rate: 1.0 },
        })
    }

    fn stream_for(spec: &ProcessSpec, seed: u64) -> InnovationStream {
        InnovationStream::for_spec(spec, seed, 7)
    }

    /// MA(1) with centered Exp(1) innovations: interior weight 1.5, left
    /// boundary 0.5, right boundary 1, so Σw² = 2.25n − 1 and
    /// Σw³ = 3.375n − 2.25 exactly.
    #[test]
    fn closed_form_finite_n_ma1_is_exact() {
        let spec = ma1_exp();
        let c256 = closed_form_finite_n(&spec, 256).unwrap();
        assert_eq!(c256.s_n_sq, 2.24609375);
        assert_eq!(c256.kappa_n_cu, 0.4207763671875);
        let c64 = closed_form_finite_n(&spec, 64).unwrap();
        assert_eq!(c64.s_n_sq, 2.234375);
        assert_eq!(c64.kappa_n_cu, 0.8349609375);
        assert_eq!(c256.method, MethodTag::ClosedForm);
        assert_eq!(c256.se_s_n_sq, 0.0);
    }

    /// κₙ³ − n^{−1/2}κ³ = −4.5 n^{−3/2} exactly for the MA(1) filter.
    #[test]
    fn closed_form_tracks_longrun_at_rate_n() {
        let spec = ma1_exp();
        let lr = longrun_linear(&[1.0, 0.5], 1.0, 2.0).unwrap();
        assert!((lr.sigma_sq - 2.25).abs() < 1e-15);
        assert!((lr.kappa_cu - 6.75).abs() < 1e-15);
        for n in [64u64, 256, 1024] {
            let c = closed_form_finite_n(&spec, n).unwrap();
            let nf = n as f64;
            let drift = (c.kappa_n_cu - lr.kappa_cu / nf.sqrt()) * nf * nf.sqrt();
            assert!(
                (drift + 4.5).abs() < 1e-9,
                "n={n}: scaled drift {drift} != -4.5"
            );
            let sdrift = (c.s_n_sq - lr.sigma_sq) * nf;
            assert!((sdrift + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn longrun_linear_edge_cases() {
        let iid = longrun_linear(&[1.0], 1.7, -0.3).unwrap();
        assert_eq!(iid.sigma_sq, 1.7);
        assert_eq!(iid.kappa_cu, -0.3);
        iid.require_a3().unwrap();

        let telescoping = longrun_linear(&[1.0, -1.0], 1.0, 2.0).unwrap();
        assert_eq!(telescoping.sigma_sq, 0.0);
        assert!(matches!(
            telescoping.require_a3(),
            Err(Error::DegenerateVariance { .. })
        ));

        assert!(longrun_linear(&[], 1.0, 0.0).is_err());
        assert!(longrun_linear(&[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn bruteforce_exact_matches_longrun_linear() {
        let spec = ma1_exp();
        let bf = longrun_bruteforce_exact(&spec, 3).unwrap();
        let cf = longrun_linear(&[1.0, 0.5], 1.0, 2.0).unwrap();
        assert!((bf.sigma_sq - cf.sigma_sq).abs() <= 1e-10);
        assert!((bf.kappa_cu - cf.kappa_cu).abs() <= 1e-10);

        let doubling = ProcessSpec::new(Family::Doubling { digits: 16 });
        let coeffs: Vec<f64> = (0..16).map(|i| 2f64.powi(-i - 1)).collect();
        let bf = longrun_bruteforce_exact(&doubling, 16).unwrap();
        let cf = longrun_linear(&coeffs, 1.0, 0.0).unwrap();
        assert!((bf.sigma_sq - cf.sigma_sq).abs() <= 1e-10);
        assert!((bf.kappa_cu - cf.kappa_cu).abs() <= 1e-10);

        // Exact mode refuses truncation below the filter memory.
        assert!(matches!(
            longrun_bruteforce_exact(&doubling, 8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn finite_n_mc_iid_normal() {
        let spec = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::StandardNormal,
        });
        let c = estimate_finite_n(&spec, 50, 400_000, &stream_for(&spec, 11)).unwrap();
        assert!((c.s_n_sq - 1.0).abs() <= 3.0 * c.se_s_n_sq, "{c:?}");
        assert!(c.kappa_n_cu.abs() <= 3.0 * c.se_kappa_n_cu, "{c:?}");
        assert!(c.se_s_n_sq > 0.0 && c.se_s_n_sq < 0.01);
    }

    #[test]
    fn finite_n_mc_iid_exponential_skew() {
        let spec = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::CenteredExponential { rate: 1.0 },
        });
        // E Sₙ³ = n Eε³ = 2n, so κₙ³ = 2/√n = 0.2 at n = 100.
        let c = estimate_finite_n(&spec, 100, 400_000, &stream_for(&spec, 12)).unwrap();
        assert!((c.kappa_n_cu - 0.2).abs() <= 3.0 * c.se_kappa_n_cu, "{c:?}");
        assert!(c.kappa_n_cu > 0.1, "skew should be clearly positive: {c:?}");
    }

    #[test]
    fn finite_n_mc_matches_scaled_bruteforce() {
        let spec = ma1_exp();
        let n = 256u64;
        let c = estimate_finite_n(&spec, n, 200_000, &stream_for(&spec, 13)).unwrap();
        let bf = longrun_bruteforce_exact(&spec, 8).unwrap();
        let target = bf.kappa_cu / (n as f64).sqrt();
        // Allow the deterministic O(n^{-3/2}) drift on top of MC noise.
        let slack = 3.0 * c.se_kappa_n_cu + 4.5 / ((n as f64) * (n as f64).sqrt());
        assert!((c.kappa_n_cu - target).abs() <= slack, "{c:?} vs {target}");
    }

    #[test]
    fn bruteforce_mc_iid_recovers_marginal_moments() {
        let spec = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::CenteredExponential { rate: 1.0 },
        });
        let lr = longrun_bruteforce(&spec, 3, 64_000, &stream_for(&spec, 14)).unwrap();
        // Nonzero lags contribute only mean-zero noise for iid specs.
        assert!((lr.sigma_sq - 1.0).abs() <= 3.0 * lr.se_sigma_sq, "{lr:?}");
        assert!((lr.kappa_cu - 2.0).abs() <= 3.0 * lr.se_kappa_cu, "{lr:?}");
        lr.require_a3().unwrap();
    }

    #[test]
    fn bruteforce_mc_garch_long_run() {
        // ARCH-in-mean-free GARCH(1,1): X_k = σ_k ε_k is a martingale
        // difference, so 𝔰² = E X₀² = μ/(1 − α m₂ − β) = 1/7, and the
        // symmetric innovation kills every third-order term.
        let spec = ProcessSpec::new(Family::Garch {
            mu: 0.1,
            alpha: vec![0.1],
            beta: vec![0.2],
            law: InnovationLaw::Rademacher,
        });
        let lr = longrun_bruteforce(&spec, 4, 20_000, &stream_for(&spec, 15)).unwrap();
        assert!(
            (lr.sigma_sq - 1.0 / 7.0).abs() <= 3.0 * lr.se_sigma_sq + 1e-4,
            "{lr:?}"
        );
        assert!(lr.kappa_cu.abs() <= 3.0 * lr.se_kappa_cu + 1e-4, "{lr:?}");
    }

    #[test]
    fn bruteforce_mc_doubling_truncated_window() {
        let spec = ProcessSpec::new(Family::Doubling { digits: 16 });
        let coeffs: Vec<f64> = (0..16).map(|i| 2f64.powi(-i - 1)).collect();
        let a: f64 = coeffs.iter().sum();
        let k = 8usize;
        let lr = longrun_bruteforce(&spec, k as u64, 20_000, &stream_for(&spec, 16)).unwrap();
        // Truncation at K = 8 < memory discards a ~2.6e-3 covariance tail;
        // compare against both the truncated lag sum and the full value.
        let lag_cov =
            |j: usize| -> f64 { (0..coeffs.len() - j).map(|i| coeffs[i] * coeffs[i + j]).sum() };
        let truncated: f64 = lag_cov(0) + 2.0 * (1..=k).map(lag_cov).sum::<f64>();
        assert!((lr.sigma_sq - truncated).abs() <= 3.0 * lr.se_sigma_sq, "{lr:?}");
        assert!((lr.sigma_sq - a * a).abs() <= 3.0 * lr.se_sigma_sq + 0.003);
        assert!(lr.kappa_cu.abs() <= 3.0 * lr.se_kappa_cu + 1e-4);
    }

    #[test]
    fn fourth_moment_exact_identities() {
        let rademacher = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::Rademacher,
        });
        // E Sₙ⁴ = n Eε⁴ + 3n(n−1), so r(n) = |Eε⁴ − 3| = 2 for signs.
        assert_eq!(check_fourth_moment_exact(&rademacher, 64).unwrap().r, 2.0);

        let normal = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::StandardNormal,
        });
        assert_eq!(check_fourth_moment_exact(&normal, 64).unwrap().r, 0.0);

        // MA(1)-exp: Σw⁴ = 5.0625n − 4 and Eε⁴ − 3σ⁴ = 6.
        let c = check_fourth_moment_exact(&ma1_exp(), 256).unwrap();
        assert!((c.r - 30.28125).abs() < 1e-12);
    }

    #[test]
    fn fourth_moment_mc_matches_exact() {
        let rademacher = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::Rademacher,
        });
        let c = check_fourth_moment(&rademacher, 64, 200_000, &stream_for(&rademacher, 17)).unwrap();
        assert!((c.r - 2.0).abs() <= 3.0 * c.se, "{c:?}");

        let normal = ProcessSpec::new(Family::Iid {
            law: InnovationLaw::StandardNormal,
        });
        let c = check_fourth_moment(&normal, 64, 200_000, &stream_for(&normal, 18)).unwrap();
        assert!(c.r <= 3.0 * c.se + 1e-6, "{c:?}");
    }

    #[test]
    fn fourth_moment_stays_bounded_for_ma1() {
        let spec = ma1_exp();
        let r64 = check_fourth_moment(&spec, 64, 100_000, &stream_for(&spec, 19)).unwrap();
        let r256 = check_fourth_moment(&spec, 256, 100_000, &stream_for(&spec, 19)).unwrap();
        assert!(
            r256.r <= 2.0 * r64.r.max(3.0 * r256.se),
            "r(64)={:?} r(256)={:?}",
            r64,
            r256
        );
    }

    #[test]
    fn closed_forms_scale_equivariantly() {
        let law = InnovationLaw::CenteredExponential { rate: 1.0 };
        let base = ProcessSpec::new(Family::Linear {
            coeffs: vec![1.0, 0.5],
            law: law.clone(),
        });
        let scaled = ProcessSpec::new(Family::Linear {
            coeffs: vec![2.0, 1.0],
            law,
        });
        let cb = closed_form_finite_n(&base, 200).unwrap();
        let cs = closed_form_finite_n(&scaled, 200).unwrap();
        assert_eq!(cs.s_n_sq, 4.0 * cb.s_n_sq);
        assert_eq!(cs.kappa_n_cu, 8.0 * cb.kappa_n_cu);
    }

    #[test]
    fn records_have_flat_schema() {
        let c = closed_form_finite_n(&ma1_exp(), 64).unwrap();
        let recs = c.records();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0]["method"], "closed_form");
        assert_eq!(recs[0]["quantity"], "s_n_sq");
        assert_eq!(recs[0]["n"], 64);
        assert!(recs[0]["value"].is_f64() && recs[0]["se"].is_f64());

        let lr = longrun_bruteforce_exact(&ma1_exp(), 5).unwrap();
        let recs = lr.records();
        assert_eq!(recs[1]["method"], "brute_force");
        assert_eq!(recs[1]["quantity"], "kappa_cu");
        assert_eq!(recs[1]["K"], 5);

        let f = check_fourth_moment_exact(&ma1_exp(), 64).unwrap();
        assert_eq!(f.record()["quantity"], "r");
    }

    #[test]
    fn guards_reject_bad_inputs() {
        let spec = ma1_exp();
        let stream = stream_for(&spec, 1);
        assert!(estimate_finite_n(&spec, 8, 999, &stream).is_err());
        assert!(longrun_bruteforce(&spec, 2, 999, &stream).is_err());
        assert!(check_fourth_moment(&spec, 8, 999, &stream).is_err());

        let garch = ProcessSpec::new(Family::Garch {
            mu: 0.1,
            alpha: vec![0.1],
            beta: vec![0.2],
            law: InnovationLaw::Rademacher,
        });
        assert!(matches!(
            closed_form_finite_n(&garch, 16),
            Err(Error::Precondition(_))
        ));
        assert!(check_fourth_moment_exact(&garch, 16).is_err());
    }
}
