//! Bernoulli-shift process generation: innovation streams, stationary paths,
//! normalized-sum sample sets, coupled pairs, m-truncation, and ⋄-smoothing.
//!
//! Determinism contract: every output value is a pure function of
//! (spec, seed, stream_id, replicate index, counter index), so reruns are
//! bit-exact regardless of thread count or call order.

use crate::error::{Error, Result};
use crate::laws::{InnovationLaw, SmoothingLaw};
use crate::real::Real;
use crate::rng::{self, Substream};
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path as FsPath;

/// Counter offset for the independent-copy draws of coupled pairs. Keeps the
/// primed innovations disjoint from every ordinary index (paths stay far
/// below 2^40 values per replicate).
const PRIME_OFFSET: u64 = 1 << 40;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Spec types
// ---------------------------------------------------------------------------

/// Process family. `Doubling` is sugar for the dyadic linear process with
/// Rademacher innovations; `Example1` fixes Rademacher U's plus telescoping
/// smoothing increments.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Iid {
        law: InnovationLaw,
    },
    /// X_k = Σ_i coeffs[i] ε_{k−i}.
    Linear {
        coeffs: Vec<f64>,
        law: InnovationLaw,
    },
    /// X_k = σ_k ε_k with σ_k² = μ + Σ αᵢ X²_{k−i} + Σ βⱼ σ²_{k−j}.
    Garch {
        mu: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        law: InnovationLaw,
    },
    /// X_k = rho · tanh(scale · X_{k−1}) + ε_k, contraction |rho·scale| < 1.
    IteratedMap {
        rho: f64,
        scale: f64,
        law: InnovationLaw,
    },
    /// Linear with a_i = 2^{−i−1} for i < digits, Rademacher innovations.
    Doubling {
        digits: u32,
    },
    /// X_k = U_{k−1} + H_k − H_{k−1}, U Rademacher, H ~ G_{a,b}.
    Example1 {
        a: f64,
        b: u32,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub family: Family,
    /// Path-prefix length discarded before time 1; `None` picks the family
    /// default (0 iid, 4× coefficient length linear, 512 recursive).
    pub burn_in: Option<u64>,
    /// Set by [`truncate_mdep`] when the conditional truncation is only a
    /// depth-limited approximation (Garch, IteratedMap).
    pub approx_truncation: bool,
}

impl ProcessSpec {
    pub fn new(family: Family) -> Self {
        ProcessSpec {
            family,
            burn_in: None,
            approx_truncation: false,
        }
    }

    /// The innovation law driving the shift (fixed for Doubling/Example1).
    pub fn innovation_law(&self) -> InnovationLaw {
        match &self.family {
            Family::Iid { law }
            | Family::Linear { law, .. }
            | Family::Garch { law, .. }
            | Family::IteratedMap { law, .. } => law.clone(),
            Family::Doubling { .. } | Family::Example1 { .. } => InnovationLaw::Rademacher,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.innovation_law().validate()?;
        match &self.family {
            Family::Iid { .. } => {}
            Family::Linear { coeffs, .. } => {
                if coeffs.is_empty() {
                    return Err(Error::invalid("coeffs", "must be nonempty"));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("coeffs", "must be finite"));
                }
            }
            Family::Garch {
                mu,
                alpha,
                beta,
                law,
            } => {
                if !(*mu > 0.0) {
                    return Err(Error::invalid("mu", format!("must be > 0, got {mu}")));
                }
                if alpha.iter().chain(beta).any(|v| !(*v >= 0.0)) {
                    return Err(Error::invalid("alpha/beta", "must be >= 0"));
                }
                let gamma = garch_contraction(alpha, beta, law);
                if !(gamma < 1.0) {
                    return Err(Error::NonStationary { gamma });
                }
            }
            Family::IteratedMap { rho, scale, law } => {
                if !(rho * scale).abs().is_finite() || (rho * scale).abs() >= 1.0 {
                    return Err(Error::NonStationary {
                        gamma: (rho * scale).abs(),
                    });
                }
                if !law.is_symmetric() {
                    return Err(Error::invalid(
                        "law",
                        "IteratedMap requires a symmetric innovation law so the \
                         stationary mean is exactly 0 (A1)",
                    ));
                }
            }
            Family::Doubling { digits } => {
                if *digits == 0 {
                    return Err(Error::invalid("digits", "must be >= 1"));
                }
            }
            Family::Example1 { a, b } => {
                SmoothingLaw::new(*a, *b)?;
            }
        }
        Ok(())
    }

    /// Exact memory lag where finite; `None` means geometric (infinite).
    pub fn memory(&self) -> Option<u64> {
        match &self.family {
            Family::Iid { .. } => Some(0),
            Family::Linear { coeffs, .. } => Some(coeffs.len() as u64 - 1),
            Family::Doubling { digits } => Some(*digits as u64 - 1),
            Family::Example1 { .. } => Some(1),
            Family::Garch { .. } | Family::IteratedMap { .. } => None,
        }
    }

    pub fn effective_burn_in(&self) -> u64 {
        let floor = self.memory().unwrap_or(1);
        let default = match &self.family {
            Family::Iid { .. } => 0,
            Family::Linear { coeffs, .. } => 4 * coeffs.len() as u64,
            Family::Doubling { digits } => 4 * *digits as u64,
            Family::Example1 { .. } => 1,
            Family::Garch { .. } | Family::IteratedMap { .. } => 512,
        };
        self.burn_in.unwrap_or(default).max(floor)
    }

    /// Stable fingerprint of the resolved spec (flat form + burn-in).
    pub fn fingerprint(&self) -> u64 {
        let flat = FlatSpec::from(self);
        let json = serde_json::to_string(&flat).expect("flat spec serializes");
        fnv1a64(json.as_bytes()) ^ rng::mix(self.effective_burn_in())
    }
}

/// Σᵢ ‖αᵢ ε² + βᵢ‖_{L²} with α/β zero-padded to a common length: the
/// construction-time stationarity functional (q = 4 moment regime).
fn garch_contraction(alpha: &[f64], beta: &[f64], law: &InnovationLaw) -> f64 {
    let m2 = law.variance();
    let m4 = law.fourth_moment();
    let len = alpha.len().max(beta.len());
    (0..len)
        .map(|i| {
            let a = alpha.get(i).copied().unwrap_or(0.0);
            let b = beta.get(i).copied().unwrap_or(0.0);
            (a * a * m4 + 2.0 * a * b * m2 + b * b).sqrt()
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Flat (de)serialization: one TOML/JSON table, family string + scalars/arrays
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct FlatSpec {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    law: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table_probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    burn_in: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    approx_truncation: bool,
}

fn law_to_flat(law: &InnovationLaw, flat: &mut FlatSpec) {
    match law {
        InnovationLaw::Rademacher => flat.law = Some("rademacher".into()),
        InnovationLaw::StandardNormal => flat.law = Some("standard_normal".into()),
        InnovationLaw::CenteredExponential { rate } => {
            flat.law = Some("centered_exponential".into());
            flat.rate = Some(*rate);
        }
        InnovationLaw::Uniform => flat.law = Some("uniform".into()),
        InnovationLaw::Table { values, probs } => {
            flat.law = Some("table".into());
            flat.table_values = Some(values.clone());
            flat.table_probs = Some(probs.clone());
        }
    }
}

fn law_from_flat(flat: &FlatSpec) -> Result<InnovationLaw> {
    let tag = flat
        .law
        .as_deref()
        .ok_or_else(|| Error::Format("missing `law` for this family".into()))?;
    Ok(match tag {
        "rademacher" => InnovationLaw::Rademacher,
        "standard_normal" => InnovationLaw::StandardNormal,
        "centered_exponential" => InnovationLaw::CenteredExponential {
            rate: flat
                .rate
                .ok_or_else(|| Error::Format("centered_exponential needs `rate`".into()))?,
        },
        "uniform" => InnovationLaw::Uniform,
        "table" => InnovationLaw::Table {
            values: flat
                .table_values
                .clone()
                .ok_or_else(|| Error::Format("table law needs `table_values`".into()))?,
            probs: flat
                .table_probs
                .clone()
                .ok_or_else(|| Error::Format("table law needs `table_probs`".into()))?,
        },
        other => return Err(Error::Format(format!("unknown law `{other}`"))),
    })
}

impl From<&ProcessSpec> for FlatSpec {
    fn from(spec: &ProcessSpec) -> Self {
        let mut flat = FlatSpec {
            family: String::new(),
            coeffs: None,
            mu: None,
            alpha: None,
            beta: None,
            rho: None,
            scale: None,
            digits: None,
            a: None,
            b: None,
            law: None,
            rate: None,
            table_values: None,
            table_probs: None,
            burn_in: spec.burn_in,
            approx_truncation: spec.approx_truncation,
        };
        match &spec.family {
            Family::Iid { law } => {
                flat.family = "iid".into();
                law_to_flat(law, &mut flat);
            }
            Family::Linear { coeffs, law } => {
                flat.family = "linear".into();
                flat.coeffs = Some(coeffs.clone());
                law_to_flat(law, &mut flat);
            }
            Family::Garch {
                mu,
                alpha,
                beta,
                law,
            } => {
                flat.family = "garch".into();
                flat.mu = Some(*mu);
                flat.alpha = Some(alpha.clone());
                flat.beta = Some(beta.clone());
                law_to_flat(law, &mut flat);
            }
            Family::IteratedMap { rho, scale, law } => {
                flat.family = "iterated_map".into();
                flat.rho = Some(*rho);
                flat.scale = Some(*scale);
                law_to_flat(law, &mut flat);
            }
            Family::Doubling { digits } => {
                flat.family = "doubling".into();
                flat.digits = Some(*digits);
            }
            Family::Example1 { a, b } => {
                flat.family = "example1".into();
                flat.a = Some(*a);
                flat.b = Some(*b);
            }
        }
        flat
    }
}

impl TryFrom<FlatSpec> for ProcessSpec {
    type Error = Error;

    fn try_from(flat: FlatSpec) -> Result<Self> {
        let family = match flat.family.as_str() {
            "iid" => Family::Iid {
                law: law_from_flat(&flat)?,
            },
            "linear" => Family::Linear {
                coeffs: flat
                    .coeffs
                    .clone()
                    .ok_or_else(|| Error::Format("linear needs `coeffs`".into()))?,
                law: law_from_flat(&flat)?,
            },
            "garch" => Family::Garch {
                mu: flat
                    .mu
                    .ok_or_else(|| Error::Format("garch needs `mu`".into()))?,
                alpha: flat.alpha.clone().unwrap_or_default(),
                beta: flat.beta.clone().unwrap_or_default(),
                law: law_from_flat(&flat)?,
            },
            "iterated_map" => Family::IteratedMap {
                rho: flat
                    .rho
                    .ok_or_else(|| Error::Format("iterated_map needs `rho`".into()))?,
                scale: flat.scale.unwrap_or(1.0),
                law: law_from_flat(&flat)?,
            },
            "doubling" => Family::Doubling {
                digits: flat
                    .digits
                    .ok_or_else(|| Error::Format("doubling needs `digits`".into()))?,
            },
            "example1" => Family::Example1 {
                a: flat
                    .a
                    .ok_or_else(|| Error::Format("example1 needs `a`".into()))?,
                b: flat
                    .b
                    .ok_or_else(|| Error::Format("example1 needs `b`".into()))?,
            },
            other => return Err(Error::Format(format!("unknown family `{other}`"))),
        };
        let spec = ProcessSpec {
            family,
            burn_in: flat.burn_in,
            approx_truncation: flat.approx_truncation,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for ProcessSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FlatSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let flat = FlatSpec::deserialize(d)?;
        ProcessSpec::try_from(flat).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Innovation streams
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnovationStream {
    pub seed: u64,
    pub stream_id: u64,
    pub law: InnovationLaw,
}

impl InnovationStream {
    pub fn new(seed: u64, stream_id: u64, law: InnovationLaw) -> Self {
        InnovationStream {
            seed,
            stream_id,
            law,
        }
    }

    /// Stream whose law matches the spec's innovation law.
    pub fn for_spec(spec: &ProcessSpec, seed: u64, stream_id: u64) -> Self {
        InnovationStream::new(seed, stream_id, spec.innovation_law())
    }

    pub fn fingerprint(&self) -> u64 {
        let law_json = serde_json::to_string(&self.law).expect("law serializes");
        rng::mix(self.seed ^ rng::mix(self.stream_id)) ^ fnv1a64(law_json.as_bytes())
    }

    fn check_matches(&self, spec: &ProcessSpec) -> Result<()> {
        if self.law != spec.innovation_law() {
            return Err(Error::Precondition(format!(
                "innovation stream law {:?} does not match the spec's law {:?}",
                self.law,
                spec.innovation_law()
            )));
        }
        Ok(())
    }
}

/// Deterministic innovation prefix of replicate 0 of this stream.
pub fn gen_innovations(stream: &InnovationStream, count: u64) -> Vec<f64> {
    let rk = rng::replicate_key(rng::stream_key(stream.seed, stream.stream_id), 0);
    (0..count)
        .map(|i| stream.law.draw(rng::uniform(rk, i)))
        .collect()
}

// ---------------------------------------------------------------------------
// Resolved simulation engine
// ---------------------------------------------------------------------------

enum Engine {
    Iid {
        law: InnovationLaw,
    },
    Linear {
        coeffs: Vec<f64>,
        law: InnovationLaw,
    },
    Garch {
        mu: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        law: InnovationLaw,
        /// Unconditional σ² = μ / (1 − Σ(αᵢ Eε² + βᵢ)); recursion warm start.
        sigma0_sq: f64,
    },
    Map {
        rho: f64,
        scale: f64,
        law: InnovationLaw,
    },
    Example1 {
        smoothing: SmoothingLaw,
    },
}

impl Engine {
    fn build(spec: &ProcessSpec) -> Result<Engine> {
        spec.validate()?;
        Ok(match &spec.family {
            Family::Iid { law } => Engine::Iid { law: law.clone() },
            Family::Linear { coeffs, law } => Engine::Linear {
                coeffs: coeffs.clone(),
                law: law.clone(),
            },
            Family::Doubling { digits } => Engine::Linear {
                coeffs: (0..*digits).map(|i| 0.5f64.powi(i as i32 + 1)).collect(),
                law: InnovationLaw::Rademacher,
            },
            Family::Garch {
                mu,
                alpha,
                beta,
                law,
            } => {
                let m2 = law.variance();
                let drift: f64 = {
                    let len = alpha.len().max(beta.len());
                    (0..len)
                        .map(|i| {
                            alpha.get(i).copied().unwrap_or(0.0) * m2
                                + beta.get(i).copied().unwrap_or(0.0)
                        })
                        .sum()
                };
                Engine::Garch {
                    mu: *mu,
                    alpha: alpha.clone(),
                    beta: beta.clone(),
                    law: law.clone(),
                    sigma0_sq: mu / (1.0 - drift),
                }
            }
            Family::IteratedMap { rho, scale, law } => Engine::Map {
                rho: *rho,
                scale: *scale,
                law: law.clone(),
            },
            Family::Example1 { a, b } => Engine::Example1 {
                smoothing: SmoothingLaw::new(*a, *b)?,
            },
        })
    }
}

/// Innovation ε_t of a replicate; time t ∈ [−burn, n] maps to counter
/// index t + burn (coupled pairs reach one step below the path range).
/// `prime` switches to the independent coupled copy.
#[inline]
fn eps(law: &InnovationLaw, rk: u64, burn: u64, t: i64, prime: bool) -> f64 {
    debug_assert!(t + burn as i64 >= 0, "time {t} below truncation −{burn}");
    let idx = (t + burn as i64) as u64;
    let idx = if prime { PRIME_OFFSET + idx } else { idx };
    law.draw(rng::uniform(rk, idx))
}

/// Example1 components: U_t (t ≥ −1) and H_t (t ≥ −1) per replicate.
#[inline]
fn ex1_u(rk: u64, t: i64, prime: bool) -> f64 {
    let idx = (t + 1) as u64;
    let idx = if prime { PRIME_OFFSET + idx } else { idx };
    if rng::uniform(rk, idx) < 0.5 {
        -1.0
    } else {
        1.0
    }
}

#[inline]
fn ex1_h(smoothing: &SmoothingLaw, rk: u64, t: i64, prime: bool) -> f64 {
    let slot = (t + 1) as u64;
    let slot = if prime { PRIME_OFFSET + slot } else { slot };
    smoothing.sample_one(&mut Substream::new(rk, slot))
}

/// X_1..X_n of one replicate, written into `out`.
fn path_values(engine: &Engine, rk: u64, burn: u64, n: u64, out: &mut Vec<f64>) {
    out.clear();
    match engine {
        Engine::Iid { law } => {
            for k in 1..=n as i64 {
                out.push(eps(law, rk, burn, k, false));
            }
        }
        Engine::Linear { coeffs, law } => {
            let lag = coeffs.len() as i64 - 1;
            let lo = 1 - lag;
            let eps_buf: Vec<f64> = (lo..=n as i64)
                .map(|t| eps(law, rk, burn, t, false))
                .collect();
            for k in 1..=n as i64 {
                let mut x = 0.0;
                for (i, &a) in coeffs.iter().enumerate() {
                    x += a * eps_buf[(k - lo - i as i64) as usize];
                }
                out.push(x);
            }
        }
        Engine::Garch {
            mu,
            alpha,
            beta,
            law,
            sigma0_sq,
        } => {
            let m2 = law.variance();
            let mut x2_hist = vec![sigma0_sq * m2; alpha.len()];
            let mut s2_hist = vec![*sigma0_sq; beta.len()];
            for t in (1 - burn as i64)..=(n as i64) {
                let mut s2 = *mu;
                for (i, &a) in alpha.iter().enumerate() {
                    s2 += a * x2_hist[i];
                }
                for (j, &b) in beta.iter().enumerate() {
                    s2 += b * s2_hist[j];
                }
                let x = s2.sqrt() * eps(law, rk, burn, t, false);
                if !x2_hist.is_empty() {
                    x2_hist.rotate_right(1);
                    x2_hist[0] = x * x;
                }
                if !s2_hist.is_empty() {
                    s2_hist.rotate_right(1);
                    s2_hist[0] = s2;
                }
                if t >= 1 {
                    out.push(x);
                }
            }
        }
        Engine::Map { rho, scale, law } => {
            let mut y = 0.0;
            for t in (1 - burn as i64)..=(n as i64) {
                y = rho * (scale * y).tanh() + eps(law, rk, burn, t, false);
                if t >= 1 {
                    out.push(y);
                }
            }
        }
        Engine::Example1 { smoothing } => {
            let mut h_prev = ex1_h(smoothing, rk, 0, false);
            for k in 1..=n as i64 {
                let h_k = ex1_h(smoothing, rk, k, false);
                out.push(ex1_u(rk, k - 1, false) + h_k - h_prev);
                h_prev = h_k;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct Path<T: Real = f64> {
    pub values: Vec<T>,
    pub n: u64,
    pub replicate: u64,
    pub spec_fingerprint: u64,
    pub stream_fingerprint: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    /// Distribution-exact closed form (binomial / gamma reduction).
    ClosedForm,
    /// Coefficient-convolution or recursion over the literal path.
    PathFold,
    /// Example1 telescoped identity ΣU + Hₙ − H₀.
    Telescoped,
    /// ⋄-smoothing applied to an existing sample set.
    Diamond,
    /// θ-weighted sum of independently simulated coordinate sample sets.
    Projection,
}

#[derive(Clone, Debug)]
pub struct SampleSet<T: Real = f64> {
    /// Realizations of Sₙ/√n, replicate j a pure function of (seed, j).
    pub sums: Vec<T>,
    pub n: u64,
    pub seed: u64,
    pub spec_fingerprint: u64,
    pub stream_fingerprint: u64,
    pub method: SimMethod,
}

#[derive(Serialize, Deserialize)]
struct SampleSetMeta {
    n: u64,
    m: u64,
    seed: u64,
    spec_fingerprint: u64,
    stream_fingerprint: u64,
    method: SimMethod,
    mean: f64,
    variance: f64,
    third_central: f64,
}

impl<T: Real> SampleSet<T> {
    pub fn m(&self) -> u64 {
        self.sums.len() as u64
    }

    /// (mean, population variance, third central moment), accumulated in f64.
    pub fn moments(&self) -> (f64, f64, f64) {
        let m = self.sums.len() as f64;
        let mean = self.sums.iter().map(|x| x.wide()).sum::<f64>() / m;
        let mut v = 0.0;
        let mut t = 0.0;
        for x in &self.sums {
            let d = x.wide() - mean;
            v += d * d;
            t += d * d * d;
        }
        (mean, v / m, t / m)
    }

    /// Write `replicate,sum` CSV plus a JSON sidecar (same stem, `.json`).
    pub fn save_csv(&self, path: &FsPath) -> Result<()> {
        let mut body = String::with_capacity(self.sums.len() * 24 + 16);
        body.push_str("replicate,sum\n");
        for (j, v) in self.sums.iter().enumerate() {
            // `{}` on f64 is the shortest round-trip form, so reload is exact.
            writeln!(body, "{j},{v}").expect("string write");
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(body.as_bytes())?;
        let (mean, variance, third_central) = self.moments();
        let meta = SampleSetMeta {
            n: self.n,
            m: self.m(),
            seed: self.seed,
            spec_fingerprint: self.spec_fingerprint,
            stream_fingerprint: self.stream_fingerprint,
            method: self.method,
            mean,
            variance,
            third_central,
        };
        let sidecar = path.with_extension("json");
        std::fs::write(sidecar, serde_json::to_string_pretty(&meta)?.as_bytes())?;
        Ok(())
    }

    pub fn load_csv(path: &FsPath) -> Result<SampleSet<T>> {
        let body = std::fs::read_to_string(path)?;
        let mut lines = body.lines();
        match lines.next() {
            Some("replicate,sum") => {}
            other => {
                return Err(Error::Format(format!(
                    "expected header `replicate,sum`, got {other:?}"
                )))
            }
        }
        let mut sums = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: missing comma", i + 2)))?;
            let idx: u64 = idx
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad replicate: {e}", i + 2)))?;
            if idx != i as u64 {
                return Err(Error::Format(format!(
                    "line {}: replicate index {idx} out of order",
                    i + 2
                )));
            }
            let val: f64 = val
                .parse()
                .map_err(|e| Error::Format(format!("line {}: bad sum: {e}", i + 2)))?;
            sums.push(T::of(val));
        }
        let sidecar = path.with_extension("json");
        let meta: SampleSetMeta = serde_json::from_str(&std::fs::read_to_string(sidecar)?)
            .map_err(|e| Error::Format(format!("bad sidecar: {e}")))?;
        if meta.m != sums.len() as u64 {
            return Err(Error::Format(format!(
                "sidecar M = {} does not match {} rows",
                meta.m,
                sums.len()
            )));
        }
        Ok(SampleSet {
            sums,
            n: meta.n,
            seed: meta.seed,
            spec_fingerprint: meta.spec_fingerprint,
            stream_fingerprint: meta.stream_fingerprint,
            method: meta.method,
        })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Simulation operations
// ---------------------------------------------------------------------------

#[derive(Copy, Clone, Debug, Default)]
pub struct SimOptions {
    /// Disable distribution-exact reductions and fold the literal path.
    pub force_path: bool,
}

pub fn simulate_path<T: Real>(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    n: u64,
    replicate: u64,
) -> Result<Path<T>> {
    stream.check_matches(spec)?;
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    let engine = Engine::build(spec)?;
    let burn = spec.effective_burn_in();
    let rk = rng::replicate_key(rng::stream_key(stream.seed, stream.stream_id), replicate);
    let mut buf = Vec::with_capacity(n as usize);
    path_values(&engine, rk, burn, n, &mut buf);
    Ok(Path {
        values: buf.into_iter().map(T::of).collect(),
        n,
        replicate,
        spec_fingerprint: spec.fingerprint(),
        stream_fingerprint: stream.fingerprint(),
    })
}

pub fn simulate_sample_set<T: Real>(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    n: u64,
    m: u64,
) -> Result<SampleSet<T>> {
    simulate_sample_set_with(spec, stream, n, m, SimOptions::default())
}

pub fn simulate_sample_set_with<T: Real>(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    n: u64,
    m: u64,
    opts: SimOptions,
) -> Result<SampleSet<T>> {
    stream.check_matches(spec)?;
    if n == 0 || m == 0 {
        return Err(Error::invalid("n/M", "must be >= 1"));
    }
    let engine = Engine::build(spec)?;
    let burn = spec.effective_burn_in();
    let sk = rng::stream_key(stream.seed, stream.stream_id);
    let sqrt_n = (n as f64).sqrt();
    let method = choose_method(&engine, n, opts);

    let sums: Vec<T> = (0..m)
        .into_par_iter()
        .map(|j| {
            let rk = rng::replicate_key(sk, j);
            T::of(replicate_sum(&engine, rk, burn, n, method) / sqrt_n)
        })
        .collect();

    Ok(SampleSet {
        sums,
        n,
        seed: stream.seed,
        spec_fingerprint: spec.fingerprint(),
        stream_fingerprint: stream.fingerprint(),
        method,
    })
}

fn choose_method(engine: &Engine, n: u64, opts: SimOptions) -> SimMethod {
    if let Engine::Example1 { .. } = engine {
        // The telescoped identity IS the process; nothing to force.
        return SimMethod::Telescoped;
    }
    if opts.force_path {
        return SimMethod::PathFold;
    }
    match engine {
        Engine::Iid { law } => match law {
            InnovationLaw::Rademacher
            | InnovationLaw::StandardNormal
            | InnovationLaw::CenteredExponential { .. } => SimMethod::ClosedForm,
            _ => SimMethod::PathFold,
        },
        Engine::Linear { coeffs, law } => {
            let q = coeffs.len() as u64 - 1;
            if matches!(law, InnovationLaw::CenteredExponential { .. }) && n > q {
                SimMethod::ClosedForm
            } else {
                SimMethod::PathFold
            }
        }
        _ => SimMethod::PathFold,
    }
}

/// Un-normalized Sₙ of one replicate.
fn replicate_sum(engine: &Engine, rk: u64, burn: u64, n: u64, method: SimMethod) -> f64 {
    match (engine, method) {
        (Engine::Iid { law }, SimMethod::ClosedForm) => iid_closed_sum(law, rk, n),
        (Engine::Linear { coeffs, law }, SimMethod::ClosedForm) => {
            let rate = match law {
                InnovationLaw::CenteredExponential { rate } => *rate,
                _ => unreachable!("closed form gated on exponential law"),
            };
            linear_exp_sum(coeffs, rate, rk, n)
        }
        (Engine::Example1 { smoothing }, _) => {
            // Literal telescoping: Σ U exact in f64 (integer-valued), H twice.
            let mut sum_u = 0.0;
            for t in 0..n as i64 {
                sum_u += ex1_u(rk, t, false);
            }
            let h0 = ex1_h(smoothing, rk, 0, false);
            let hn = ex1_h(smoothing, rk, n as i64, false);
            sum_u + hn - h0
        }
        (Engine::Linear { coeffs, law }, _) => {
            // One draw per innovation: Sₙ = Σ_t c_t ε_t with boundary weights.
            let q = coeffs.len() as i64 - 1;
            let a_total: f64 = coeffs.iter().sum();
            let mut s = 0.0;
            for t in (1 - q)..=(n as i64) {
                let c = if t >= 1 && t <= n as i64 - q {
                    a_total
                } else {
                    let mut c = 0.0;
                    for (i, &a) in coeffs.iter().enumerate() {
                        let k = t + i as i64;
                        if k >= 1 && k <= n as i64 {
                            c += a;
                        }
                    }
                    c
                };
                s += c * eps(law, rk, burn, t, false);
            }
            s
        }
        (engine, _) => {
            let mut buf = Vec::with_capacity(n as usize);
            path_values(engine, rk, burn, n, &mut buf);
            buf.iter().sum()
        }
    }
}

fn iid_closed_sum(law: &InnovationLaw, rk: u64, n: u64) -> f64 {
    match law {
        InnovationLaw::Rademacher => {
            let bin = rand_distr::Binomial::new(n, 0.5).expect("valid binomial");
            let k = bin.sample(&mut Substream::new(rk, 0)) as f64;
            2.0 * k - n as f64
        }
        InnovationLaw::StandardNormal => {
            // Sₙ ~ N(0, n) exactly.
            (n as f64).sqrt() * crate::special::std_normal_quantile(rng::uniform(rk, 0))
        }
        InnovationLaw::CenteredExponential { rate } => {
            let gamma = rand_distr::Gamma::new(n as f64, 1.0 / rate).expect("valid gamma");
            gamma.sample(&mut Substream::new(rk, 0)) - n as f64 / rate
        }
        _ => unreachable!("closed form gated on law"),
    }
}

/// Sₙ for a finite-order linear filter of centered exponentials: boundary
/// innovations drawn individually, the interior collapsed to one Gamma.
fn linear_exp_sum(coeffs: &[f64], rate: f64, rk: u64, n: u64) -> f64 {
    let q = coeffs.len() as i64 - 1;
    let a_total: f64 = coeffs.iter().sum();
    let mut s = 0.0;
    let mut draw = 0u64;
    // Left boundary t ∈ [1−q, 0] and right boundary t ∈ [n−q+1, n].
    let boundary = |t: i64, s: &mut f64, draw: &mut u64| {
        let mut c = 0.0;
        for (i, &a) in coeffs.iter().enumerate() {
            let k = t + i as i64;
            if k >= 1 && k <= n as i64 {
                c += a;
            }
        }
        let e = -(1.0 - rng::uniform(rk, *draw)).ln() / rate;
        *draw += 1;
        *s += c * (e - 1.0 / rate);
    };
    for t in (1 - q)..=0 {
        boundary(t, &mut s, &mut draw);
    }
    for t in (n as i64 - q + 1)..=(n as i64) {
        boundary(t, &mut s, &mut draw);
    }
    let interior = n - q as u64;
    if interior > 0 {
        let gamma = rand_distr::Gamma::new(interior as f64, 1.0 / rate).expect("valid gamma");
        let g = gamma.sample(&mut Substream::new(rk, 0));
        s += a_total * (g - interior as f64 / rate);
    }
    s
}

/// Which innovations the coupled copy replaces with independent draws.
#[derive(Clone, Copy)]
enum Swap {
    /// Every ε_t with t ≤ 0: the star coupling behind λ_{k,p}.
    Past,
    /// Only ε₀: the prime coupling behind θ_{k,p}.
    Zero,
}

impl Swap {
    #[inline]
    fn hits(self, t: i64) -> bool {
        match self {
            Swap::Past => t <= 0,
            Swap::Zero => t == 0,
        }
    }
}

/// M coupled pairs (X_k, X_k*): the starred copy replays the same ε_t for
/// t ≥ 1 but swaps in independent ε′_t for t ≤ 0.
pub fn simulate_coupled_pairs(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    k: u64,
    m: u64,
) -> Result<Vec<(f64, f64)>> {
    coupled_batch(spec, stream, k, m, Swap::Past)
}

/// M prime-coupled pairs (X_k, X_k′): the primed copy swaps only ε₀ and
/// keeps every other innovation, giving the single-swap coefficient θ_{k,p}.
pub fn simulate_prime_pairs(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    k: u64,
    m: u64,
) -> Result<Vec<(f64, f64)>> {
    coupled_batch(spec, stream, k, m, Swap::Zero)
}

/// Single coupled pair, replicate 0 (spec-signature convenience).
pub fn simulate_coupled_pair(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    k: u64,
) -> Result<(f64, f64)> {
    Ok(simulate_coupled_pairs(spec, stream, k, 1)?[0])
}

fn coupled_batch(
    spec: &ProcessSpec,
    stream: &InnovationStream,
    k: u64,
    m: u64,
    swap: Swap,
) -> Result<Vec<(f64, f64)>> {
    stream.check_matches(spec)?;
    let engine = Engine::build(spec)?;
    let burn = spec.effective_burn_in();
    let sk = rng::stream_key(stream.seed, stream.stream_id);
    let pairs: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let rk = rng::replicate_key(sk, j);
            coupled_pair(&engine, rk, burn, k as i64, swap)
        })
        .collect();
    Ok(pairs)
}

fn coupled_pair(engine: &Engine, rk: u64, burn: u64, k: i64, swap: Swap) -> (f64, f64) {
    // Innovation at time t; the coupled path redraws exactly where `swap`
    // hits. Untouched times reuse the identical draw, so couplings that
    // miss the filter window yield exact zeros downstream.
    match engine {
        Engine::Iid { law } => {
            let x = eps(law, rk, burn, k, false);
            if swap.hits(k) {
                (x, eps(law, rk, burn, k, true))
            } else {
                (x, x)
            }
        }
        Engine::Linear { coeffs, law } => {
            let mut x = 0.0;
            let mut x_cpl = 0.0;
            for (i, &a) in coeffs.iter().enumerate() {
                let t = k - i as i64;
                let e = eps(law, rk, burn, t, false);
                x += a * e;
                x_cpl += a * if swap.hits(t) {
                    eps(law, rk, burn, t, true)
                } else {
                    e
                };
            }
            (x, x_cpl)
        }
        Engine::Garch {
            mu,
            alpha,
            beta,
            law,
            sigma0_sq,
        } => {
            let m2 = law.variance();
            let run = |coupled: bool| -> f64 {
                let mut x2_hist = vec![sigma0_sq * m2; alpha.len()];
                let mut s2_hist = vec![*sigma0_sq; beta.len()];
                let mut x = 0.0;
                for t in (1 - burn as i64)..=k {
                    let mut s2 = *mu;
                    for (i, &a) in alpha.iter().enumerate() {
                        s2 += a * x2_hist[i];
                    }
                    for (j, &b) in beta.iter().enumerate() {
                        s2 += b * s2_hist[j];
                    }
                    let e = eps(law, rk, burn, t, coupled && swap.hits(t));
                    x = s2.sqrt() * e;
                    if !x2_hist.is_empty() {
                        x2_hist.rotate_right(1);
                        x2_hist[0] = x * x;
                    }
                    if !s2_hist.is_empty() {
                        s2_hist.rotate_right(1);
                        s2_hist[0] = s2;
                    }
                }
                x
            };
            (run(false), run(true))
        }
        Engine::Map { rho, scale, law } => {
            let run = |coupled: bool| -> f64 {
                let mut y = 0.0;
                for t in (1 - burn as i64)..=k {
                    y = rho * (scale * y).tanh()
                        + eps(law, rk, burn, t, coupled && swap.hits(t));
                }
                y
            };
            (run(false), run(true))
        }
        Engine::Example1 { smoothing } => {
            let u = |t: i64, c: bool| ex1_u(rk, t, c && swap.hits(t));
            let h = |t: i64, c: bool| ex1_h(smoothing, rk, t, c && swap.hits(t));
            let x = u(k - 1, false) + h(k, false) - h(k - 1, false);
            let x_cpl = u(k - 1, true) + h(k, true) - h(k - 1, true);
            (x, x_cpl)
        }
    }
}

/// Conditional m-truncation X_{k,m} = E[X_k | ε_k..ε_{k−m}].
///
/// Exact for Iid / Linear / Doubling / Example1 (centered innovations kill
/// the dropped terms). For Garch and IteratedMap the recursion is cut at
/// depth m and the returned spec is flagged `approx_truncation`.
pub fn truncate_mdep(spec: &ProcessSpec, m: u64) -> Result<ProcessSpec> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    let mut out = spec.clone();
    match &mut out.family {
        Family::Iid { .. } | Family::Example1 { .. } => {}
        Family::Linear { coeffs, .. } => {
            if coeffs.len() as u64 > m + 1 {
                coeffs.truncate(m as usize + 1);
                // Preserve the original innovation-index alignment so the
                // truncated process stays coupled to its parent.
                out.burn_in = Some(spec.effective_burn_in());
            }
        }
        Family::Doubling { digits } => {
            *digits = (*digits).min(m as u32 + 1);
            out.burn_in = Some(spec.effective_burn_in());
        }
        Family::Garch { .. } | Family::IteratedMap { .. } => {
            out.burn_in = Some(m);
            out.approx_truncation = true;
        }
    }
    Ok(out)
}

/// Replace each sum s_j by s_j + (Hₙ − H₀)/√n with fresh H ~ `law` draws.
pub fn smooth_diamond<T: Real>(
    sample: &SampleSet<T>,
    law: &SmoothingLaw,
    stream: &InnovationStream,
) -> SampleSet<T> {
    let sk = rng::stream_key(stream.seed, stream.stream_id);
    let sqrt_n = (sample.n as f64).sqrt();
    let sums: Vec<T> = sample
        .sums
        .par_iter()
        .enumerate()
        .map(|(j, &s)| {
            let rk = rng::replicate_key(sk, j as u64);
            let h0 = law.sample_one(&mut Substream::new(rk, 0));
            let hn = law.sample_one(&mut Substream::new(rk, 1));
            T::of(s.wide() + (hn - h0) / sqrt_n)
        })
        .collect();
    SampleSet {
        sums,
        n: sample.n,
        seed: sample.seed,
        spec_fingerprint: sample.spec_fingerprint,
        stream_fingerprint: stream.fingerprint(),
        method: SimMethod::Diamond,
    }
}
