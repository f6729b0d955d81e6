//! High-dimensional linear statistics: coordinate processes with an
//! independent martingale-difference tail block, θ-projections ⟨θ, Sₙ⟩/√n,
//! and the tail assumptions (T1)–(T3) behind the projection theorem.
//!
//! Coordinates draw from streams keyed by their index, so distinct
//! coordinates are independent by construction and (T1) holds for any valid
//! spec: the tail block is independent of its complement, and independent
//! centered coordinates trivially form a martingale difference sequence in
//! the coordinate index. (T3) is an explicit band on Σ_{i∈I} θᵢ² checked at
//! construction for the intended n-range; (T2) has no numeric constants in
//! the underlying theory, so the audit records the empirical uniform bounds
//! rather than asserting thresholds.

use serde::{Deserialize, Serialize};

use crate::cumulants::batch_se;
use crate::dependence::{assumption_report, AssumptionAudit};
use crate::error::{Error, Result};
use crate::processes::{
    simulate_path, simulate_sample_set, InnovationStream, ProcessSpec, SampleSet, SimMethod,
};
use crate::real::Real;
use crate::rng;

// ---------------------------------------------------------------------------
// Spec and construction
// ---------------------------------------------------------------------------

/// Coordinate layout for a projection experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HighDimSpec {
    pub d: usize,
    /// Tail index set I (0-based coordinate indices).
    #[serde(rename = "I")]
    pub tail: Vec<usize>,
    pub theta: Vec<f64>,
    pub coords: Vec<ProcessSpec>,
    pub alpha: f64,
    pub beta: f64,
    /// T3 band constants: c·n⁻¹(log n)^β ≤ Σ_{i∈I}θᵢ² ≤ C·n^{−α}.
    #[serde(rename = "c")]
    pub c_lo: f64,
    #[serde(rename = "C")]
    pub c_hi: f64,
}

fn check_exponents(alpha: f64, beta: f64, c_lo: f64, c_hi: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", format!("need alpha > 0, got {alpha}")));
    }
    if !(beta > 1.0) {
        return Err(Error::invalid("beta", format!("need beta > 1, got {beta}")));
    }
    if !(c_lo > 0.0 && c_hi > 0.0) {
        return Err(Error::invalid("c", "T3 band constants must be positive"));
    }
    Ok(())
}

fn check_n_range(n_range: &[u64]) -> Result<()> {
    if n_range.is_empty() {
        return Err(Error::invalid("n_range", "empty n-range"));
    }
    if n_range.iter().any(|&n| n < 2) {
        return Err(Error::invalid("n_range", "need n >= 2 for the log factor"));
    }
    if n_range.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_range", "n-range must be strictly increasing"));
    }
    Ok(())
}

/// T3 band at one n: c·n⁻¹(log n)^β ≤ mass ≤ C·n^{−α}.
pub fn check_t3(mass: f64, alpha: f64, beta: f64, c_lo: f64, c_hi: f64, n: u64) -> Result<()> {
    let nf = n as f64;
    let lo = c_lo * nf.ln().powf(beta) / nf;
    let hi = c_hi * nf.powf(-alpha);
    if mass < lo || mass > hi {
        return Err(Error::T3Violated {
            n,
            lo,
            hi,
            got: mass,
        });
    }
    Ok(())
}

impl HighDimSpec {
    /// Validates the layout and the T3 band at every n in `n_range`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta: Vec<f64>,
        tail: Vec<usize>,
        coords: Vec<ProcessSpec>,
        alpha: f64,
        beta: f64,
        c_lo: f64,
        c_hi: f64,
        n_range: &[u64],
    ) -> Result<HighDimSpec> {
        check_exponents(alpha, beta, c_lo, c_hi)?;
        check_n_range(n_range)?;
        let d = theta.len();
        if d == 0 {
            return Err(Error::invalid("theta", "empty projection vector"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta", "non-finite weight"));
        }
        if coords.len() != d {
            return Err(Error::invalid(
                "coords",
                format!("{} coordinate specs for dimension {d}", coords.len()),
            ));
        }
        if tail.is_empty() {
            return Err(Error::invalid("tail", "empty tail index set"));
        }
        let mut seen = vec![false; d];
        for &i in &tail {
            if i >= d {
                return Err(Error::invalid("tail", format!("index {i} out of 0..{d}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("tail", format!("duplicate index {i}")));
            }
        }
        for coord in &coords {
            coord.validate()?;
        }
        let spec = HighDimSpec {
            d,
            tail,
            theta,
            coords,
            alpha,
            beta,
            c_lo,
            c_hi,
        };
        let mass = spec.tail_mass();
        for &n in n_range {
            check_t3(mass, alpha, beta, c_lo, c_hi, n)?;
        }
        Ok(spec)
    }

    /// Σ_{i∈I} θᵢ².
    pub fn tail_mass(&self) -> f64 {
        self.tail.iter().map(|&i| self.theta[i] * self.theta[i]).sum()
    }

    /// ‖θ‖².
    pub fn total_mass(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }

    /// Stable fingerprint over weights, layout, and coordinate specs.
    pub fn fingerprint(&self) -> u64 {
        let mut h = rng::mix(self.d as u64 ^ 0x9e3779b97f4a7c15);
        for &i in &self.tail {
            h = rng::mix(h ^ i as u64);
        }
        for &t in &self.theta {
            h = rng::mix(h ^ t.to_bits());
        }
        for coord in &self.coords {
            h = rng::mix(h ^ coord.fingerprint());
        }
        h
    }
}

/// θ-vector fragment produced by [`build_theta`].
#[derive(Clone, Debug, Serialize)]
pub struct ThetaDesign {
    pub theta: Vec<f64>,
    pub tail: Vec<usize>,
    /// Σ_{i∈I} θᵢ²: the geometric mean of the T3 band evaluated at the
    /// geometric midpoint of the n-range.
    pub tail_mass: f64,
}

/// Equal-magnitude tail weights pinned to the middle of the T3 band, with
/// the head block (if any) filled so that ‖θ‖² = 1. The tail occupies the
/// last `tail_size` coordinates.
pub fn build_theta(
    n_range: &[u64],
    alpha: f64,
    beta: f64,
    c_lo: f64,
    c_hi: f64,
    d: usize,
    tail_size: usize,
) -> Result<ThetaDesign> {
    check_exponents(alpha, beta, c_lo, c_hi)?;
    check_n_range(n_range)?;
    if tail_size == 0 || tail_size > d {
        return Err(Error::invalid(
            "tail_size",
            format!("need 1..={d} tail coordinates, got {tail_size}"),
        ));
    }
    // Feasibility across the whole range, then pin at the midpoint.
    let band = |n: u64| {
        let nf = n as f64;
        (c_lo * nf.ln().powf(beta) / nf, c_hi * nf.powf(-alpha))
    };
    for &n in n_range {
        let (lo, hi) = band(n);
        if lo > hi {
            return Err(Error::invalid(
                "alpha",
                format!("T3 band empty at n = {n}: [{lo:.3e}, {hi:.3e}]"),
            ));
        }
    }
    let mid = ((n_range[0] as f64) * (*n_range.last().expect("nonempty") as f64)).sqrt();
    let lo = c_lo * mid.ln().powf(beta) / mid;
    let hi = c_hi * mid.powf(-alpha);
    let tail_mass = (lo * hi).sqrt();
    // The pinned mass must itself stay inside the band at every n.
    for &n in n_range {
        check_t3(tail_mass, alpha, beta, c_lo, c_hi, n)?;
    }
    let head_size = d - tail_size;
    let head_mass = 1.0 - tail_mass;
    if head_size > 0 && head_mass < 0.0 {
        return Err(Error::invalid(
            "c_hi",
            format!("tail mass {tail_mass} exceeds 1; cannot normalize theta"),
        ));
    }
    let head_w = if head_size > 0 {
        (head_mass / head_size as f64).sqrt()
    } else {
        0.0
    };
    let tail_w = (tail_mass / tail_size as f64).sqrt();
    let mut theta = vec![head_w; head_size];
    theta.extend(std::iter::repeat(tail_w).take(tail_size));
    Ok(ThetaDesign {
        theta,
        tail: (head_size..d).collect(),
        tail_mass,
    })
}

// ---------------------------------------------------------------------------
// Projection simulation
// ---------------------------------------------------------------------------

/// M replicates of ⟨θ, Sₙ⟩/√n. Coordinate i draws from stream_id = i of
/// `seed`, so coordinates are mutually independent and coordinate 0 of a
/// one-dimensional spec reproduces the scalar sample bit for bit.
pub fn simulate_projection<T: Real>(
    spec: &HighDimSpec,
    seed: u64,
    n: u64,
    m: u64,
) -> Result<SampleSet<T>> {
    let mut acc = vec![T::zero(); m as usize];
    let mut stream_fp = 0u64;
    for (i, coord) in spec.coords.iter().enumerate() {
        let w = T::of(spec.theta[i]);
        let stream = InnovationStream::for_spec(coord, seed, i as u64);
        stream_fp = rng::mix(stream_fp ^ stream.fingerprint());
        if spec.theta[i] == 0.0 {
            continue;
        }
        let sample = simulate_sample_set::<T>(coord, &stream, n, m)?;
        for (a, &s) in acc.iter_mut().zip(&sample.sums) {
            *a += w * s;
        }
    }
    Ok(SampleSet {
        sums: acc,
        n,
        seed,
        spec_fingerprint: spec.fingerprint(),
        stream_fingerprint: stream_fp,
        method: SimMethod::Projection,
    })
}

// ---------------------------------------------------------------------------
// Tail-assumption audit
// ---------------------------------------------------------------------------

/// Regression coefficient of a tail coordinate on its predecessors.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MdsCoefficient {
    pub coord: usize,
    pub value: f64,
    pub se: f64,
}

/// Cross-covariance between the θ-weighted I and Iᶜ block series.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrossCov {
    pub lag: u64,
    pub value: f64,
    pub se: f64,
}

/// Empirical (T1) checks plus the recorded (T2) uniform bounds.
#[derive(Clone, Debug, Serialize)]
pub struct TailAudit {
    /// Ê[X_{ki} | X_{k,1..i−1}] probes: regression of each tail coordinate
    /// on the sum of its predecessors, passing at 3 SE.
    pub mds: Vec<MdsCoefficient>,
    pub mds_pass: bool,
    /// Block cross-covariances at lags 0..L, passing at 3 SE.
    pub cross: Vec<CrossCov>,
    pub independence_pass: bool,
    /// One A1–A3 audit per distinct tail coordinate spec; the sup/inf
    /// summaries below record the uniform (T2) bounds achieved.
    pub t2: Vec<AssumptionAudit>,
    pub t2_sup_moment: f64,
    pub t2_sup_lambda: f64,
    pub t2_inf_sigma_sq: f64,
    pub pass: bool,
}

/// Stationary draws of the coordinate vector: one row per replicate.
fn vector_draws(spec: &HighDimSpec, seed: u64, m: u64, len: u64) -> Result<Vec<Vec<f64>>> {
    let mut cols = Vec::with_capacity(spec.d);
    for (i, coord) in spec.coords.iter().enumerate() {
        let stream = InnovationStream::for_spec(coord, seed, i as u64);
        let col: Vec<f64> = (0..m)
            .map(|rep| Ok(simulate_path::<f64>(coord, &stream, len, rep)?.values))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        cols.push(col);
    }
    // Transpose to replicate-major rows of length d·len.
    let width = (spec.d as u64 * len) as usize;
    let mut rows = vec![Vec::with_capacity(width); m as usize];
    for col in &cols {
        for (rep, chunk) in col.chunks(len as usize).enumerate() {
            rows[rep].extend_from_slice(chunk);
        }
    }
    Ok(rows)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// (T1)/(T2) audit: martingale-difference regressions for the tail block,
/// block cross-covariances at lags 0..=`lags`, and a dependence audit per
/// distinct tail spec. `m` replicates throughout.
pub fn tail_audit(spec: &HighDimSpec, seed: u64, m: u64, lags: u64) -> Result<TailAudit> {
    if m < 1_000 {
        return Err(Error::invalid("m", "need at least 1000 replicates"));
    }
    let len = lags + 1;
    let rows = vector_draws(spec, seed, m, len)?;
    let at = |row: &Vec<f64>, coord: usize, t: u64| row[coord * len as usize + t as usize];

    // MDS probe: coefficient of tail coordinate i on the sum of coordinates
    // 0..i at the same time point (time 0 of each replicate row).
    let mut mds = Vec::with_capacity(spec.tail.len());
    for &i in &spec.tail {
        if i == 0 {
            continue; // no predecessors to regress on
        }
        let xi: Vec<f64> = rows.iter().map(|r| at(r, i, 0)).collect();
        let pred: Vec<f64> = rows
            .iter()
            .map(|r| (0..i).map(|j| at(r, j, 0)).sum::<f64>())
            .collect();
        let (mx, mp) = (mean(&xi), mean(&pred));
        let var_p = pred.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>() / m as f64;
        let prods: Vec<f64> = xi
            .iter()
            .zip(&pred)
            .map(|(x, p)| (x - mx) * (p - mp))
            .collect();
        mds.push(MdsCoefficient {
            coord: i,
            value: mean(&prods) / var_p,
            se: batch_se(&prods, mean) / var_p,
        });
    }
    let mds_pass = mds.iter().all(|c| c.value.abs() <= 3.0 * c.se);

    // Independence probe: θ-weighted block series, lagged cross products.
    let head: Vec<usize> = (0..spec.d).filter(|i| !spec.tail.contains(i)).collect();
    let mut cross = Vec::with_capacity(len as usize);
    if !head.is_empty() {
        let block = |row: &Vec<f64>, idx: &[usize], t: u64| {
            idx.iter().map(|&i| spec.theta[i] * at(row, i, t)).sum::<f64>()
        };
        for lag in 0..=lags {
            let prods: Vec<f64> = rows
                .iter()
                .map(|r| block(r, &spec.tail, 0) * block(r, &head, lag))
                .collect();
            cross.push(CrossCov {
                lag,
                value: mean(&prods),
                se: batch_se(&prods, mean),
            });
        }
    }
    let independence_pass = cross.iter().all(|c| c.value.abs() <= 3.0 * c.se);

    // T2: audit each distinct tail spec once.
    let mut seen = Vec::new();
    let mut t2 = Vec::new();
    for &i in &spec.tail {
        let fp = spec.coords[i].fingerprint();
        if seen.contains(&fp) {
            continue;
        }
        seen.push(fp);
        let stream = InnovationStream::for_spec(&spec.coords[i], seed, i as u64);
        t2.push(assumption_report(&spec.coords[i], 3.0, 6, 4, m, &stream)?);
    }
    let t2_sup_moment = t2
        .iter()
        .flat_map(|a| a.probes.iter().map(|p| p.value))
        .fold(0.0, f64::max);
    let t2_sup_lambda = t2
        .iter()
        .map(|a| a.profile.partial_sums.last().expect("nonempty")[2])
        .fold(0.0, f64::max);
    let t2_inf_sigma_sq = t2
        .iter()
        .map(|a| a.sigma_sq)
        .fold(f64::INFINITY, f64::min);
    let pass = mds_pass && independence_pass && t2.iter().all(|a| a.pass);
    Ok(TailAudit {
        mds,
        mds_pass,
        cross,
        independence_pass,
        t2,
        t2_sup_moment,
        t2_sup_lambda,
        t2_inf_sigma_sq,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::InnovationLaw;
    use crate::processes::Family;

    const N_RANGE: [u64; 5] = [256, 512, 1024, 2048, 4096];

    fn rademacher() -> ProcessSpec {
        ProcessSpec::new(Family::Iid {
            law: InnovationLaw::Rademacher,
        })
    }

    fn ma1_exp() -> ProcessSpec {
        ProcessSpec::new(Family::Linear {
            coeffs: vec![1.0, 0.5],
            law: InnovationLaw::CenteredExponential { rate: 1.0 },
        })
    }

    fn reference_spec(d: usize, tail_size: usize) -> HighDimSpec {
        let design = build_theta(&N_RANGE, 0.5, 2.0, 0.05, 1.0, d, tail_size).unwrap();
        HighDimSpec::new(
            design.theta,
            design.tail,
            vec![rademacher(); d],
            0.5,
            2.0,
            0.05,
            1.0,
            &N_RANGE,
        )
        .unwrap()
    }

    #[test]
    fn build_theta_reference_design() {
        let design = build_theta(&N_RANGE, 0.5, 2.0, 0.05, 1.0, 64, 32).unwrap();
        // Geometric mean of the T3 band at the midpoint n = 1024.
        assert!((design.tail_mass - 0.008562202516771145).abs() < 1e-12);
        assert_eq!(design.tail, (32..64).collect::<Vec<_>>());
        for &i in &design.tail {
            assert!((design.theta[i] - 0.016357531251661978).abs() < 1e-12);
        }
        for i in 0..32 {
            assert!((design.theta[i] - 0.1760182694249404).abs() < 1e-12);
        }
        let total: f64 = design.theta.iter().map(|t| t * t).sum();
        assert!((total - 1.0).abs() < 1e-12, "unit norm, got {total}");
        // The pinned mass sits inside the band at every n in the range.
        for &n in &N_RANGE {
            check_t3(design.tail_mass, 0.5, 2.0, 0.05, 1.0, n).unwrap();
        }
    }

    #[test]
    fn build_theta_rejects_empty_band() {
        // alpha = 3 squeezes the upper bound below the lower one.
        let err = build_theta(&[256, 512, 1024], 3.0, 2.0, 1.0, 1.0, 8, 4);
        assert!(err.is_err());
        assert!(build_theta(&N_RANGE, 0.5, 2.0, 0.05, 1.0, 8, 0).is_err());
        assert!(build_theta(&N_RANGE, 0.5, 2.0, 0.05, 1.0, 8, 9).is_err());
        assert!(build_theta(&[], 0.5, 2.0, 0.05, 1.0, 8, 4).is_err());
    }

    #[test]
    fn spec_validation_guards() {
        let ok = reference_spec(8, 4);
        assert_eq!(ok.d, 8);
        assert!(ok.tail_mass() < ok.total_mass());

        let coords = vec![rademacher(); 4];
        let make = |theta: Vec<f64>, tail: Vec<usize>| {
            HighDimSpec::new(theta, tail, coords.clone(), 0.5, 2.0, 0.05, 1.0, &N_RANGE)
        };
        // Tail mass 1.0 blows through the T3 upper bound.
        let err = make(vec![0.5; 4], vec![0, 1, 2, 3]);
        assert!(matches!(err, Err(Error::T3Violated { n: 256, .. })));
        assert!(make(vec![0.1; 3], vec![0]).is_err(), "length mismatch");
        assert!(make(vec![0.1; 4], vec![7]).is_err(), "index out of range");
        assert!(make(vec![0.1; 4], vec![1, 1]).is_err(), "duplicate index");
        assert!(make(vec![0.1; 4], vec![]).is_err(), "empty tail");
        assert!(
            HighDimSpec::new(
                vec![0.1; 4],
                vec![3],
                coords.clone(),
                -0.5,
                2.0,
                0.05,
                1.0,
                &N_RANGE
            )
            .is_err(),
            "alpha must be positive"
        );
    }

    #[test]
    fn one_dimensional_projection_is_the_scalar_process() {
        // Loose T3 constants admit theta = e1; stream_id 0 then matches a
        // scalar run exactly.
        let coord = ma1_exp();
        let spec = HighDimSpec::new(
            vec![1.0],
            vec![0],
            vec![coord.clone()],
            1e-3,
            2.0,
            1e-4,
            2.0,
            &[64],
        )
        .unwrap();
        let proj = simulate_projection::<f64>(&spec, 7, 64, 500).unwrap();
        let stream = InnovationStream::for_spec(&coord, 7, 0);
        let scalar = simulate_sample_set::<f64>(&coord, &stream, 64, 500).unwrap();
        assert_eq!(proj.sums, scalar.sums);
        assert_eq!(proj.method, SimMethod::Projection);
    }

    #[test]
    fn projection_of_normal_coordinates_has_theta_norm_variance() {
        let d = 8;
        let design = build_theta(&N_RANGE, 0.5, 2.0, 0.05, 1.0, d, 4).unwrap();
        let spec = HighDimSpec::new(
            design.theta,
            design.tail,
            vec![
                ProcessSpec::new(Family::Iid {
                    law: InnovationLaw::StandardNormal,
                });
                d
            ],
            0.5,
            2.0,
            0.05,
            1.0,
            &N_RANGE,
        )
        .unwrap();
        let m = 20_000;
        let sample = simulate_projection::<f64>(&spec, 11, 256, m).unwrap();
        let (mean, var, _) = sample.moments();
        // Exact N(0, ‖θ‖²) coordinates: SEs are √(‖θ‖²/M) and √(2/M)‖θ‖².
        let total = spec.total_mass();
        assert!(mean.abs() <= 3.0 * (total / m as f64).sqrt(), "mean {mean}");
        let se_var = total * (2.0 / m as f64).sqrt();
        assert!((var - total).abs() <= 3.0 * se_var, "var {var} vs {total}");
    }

    #[test]
    fn projection_cumulants_add_across_independent_blocks() {
        // Head block: two MA(1)-exponential coordinates; tail block: two
        // Rademacher coordinates. Independence makes the projection's
        // cumulants θ-weighted sums of the coordinate cumulants.
        let coords = vec![ma1_exp(), ma1_exp(), rademacher(), rademacher()];
        let theta = [0.5, 0.4, 0.3, 0.2];
        let spec = HighDimSpec::new(
            theta.to_vec(),
            vec![2, 3],
            coords.clone(),
            1e-3,
            2.0,
            1e-4,
            2.0,
            &[64],
        )
        .unwrap();
        let n = 64;
        let (mut s_sq, mut kappa) = (0.0, 0.0);
        for (i, coord) in coords.iter().enumerate() {
            let c = crate::cumulants::closed_form_finite_n(coord, n).unwrap();
            s_sq += theta[i] * theta[i] * c.s_n_sq;
            kappa += theta[i] * theta[i] * theta[i] * c.kappa_n_cu;
        }
        let m = 40_000;
        let sample = simulate_projection::<f64>(&spec, 13, n, m).unwrap();
        let (_, var, third) = sample.moments();
        let wides: Vec<f64> = sample.sums.clone();
        let se_var = batch_se(&wides, |xs| {
            let mu = mean(xs);
            xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
        });
        let se_third = batch_se(&wides, |xs| {
            let mu = mean(xs);
            xs.iter().map(|x| (x - mu).powi(3)).sum::<f64>() / xs.len() as f64
        });
        assert!((var - s_sq).abs() <= 3.0 * se_var, "{var} vs {s_sq}");
        assert!((third - kappa).abs() <= 3.0 * se_third, "{third} vs {kappa}");
    }

    #[test]
    fn tail_audit_passes_reference_design() {
        let spec = reference_spec(16, 8);
        let audit = tail_audit(&spec, 17, 3_000, 4).unwrap();
        assert!(audit.mds_pass, "mds coefficients: {:?}", audit.mds);
        assert!(audit.independence_pass, "cross: {:?}", audit.cross);
        assert_eq!(audit.cross.len(), 5, "lags 0..=4");
        assert_eq!(audit.t2.len(), 1, "one distinct tail spec");
        assert!(audit.pass);
        assert!(audit.t2_sup_moment > 0.0);
        assert!(audit.t2_inf_sigma_sq > 0.0);
        // Rademacher tail: lambda partial sums reduce to ‖X₀‖_p = 1.
        assert!((audit.t2_sup_lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_f32_tracks_f64() {
        let spec = reference_spec(8, 4);
        let a = simulate_projection::<f32>(&spec, 19, 128, 2_000).unwrap();
        let b = simulate_projection::<f64>(&spec, 19, 128, 2_000).unwrap();
        for (x, y) in a.sums.iter().zip(&b.sums) {
            assert!((*x as f64 - y).abs() < 1e-4, "{x} vs {y}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let spec = reference_spec(4, 2);
        let text = toml::to_string(&spec).unwrap();
        assert!(text.contains("I = ["), "tail set serializes as I");
        let back: HighDimSpec = toml::from_str(&text).unwrap();
        assert_eq!(back.d, spec.d);
        assert_eq!(back.tail, spec.tail);
        assert_eq!(back.theta, spec.theta);
        assert_eq!(back.coords.len(), spec.coords.len());
    }
}
