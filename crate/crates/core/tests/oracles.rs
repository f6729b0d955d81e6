//! Frozen-constant and cross-implementation oracles.
//!
//! Every assertion here is checked against a source that does not share
//! code with the implementation under test: hand-rolled Simpson panels,
//! printed closed forms, an external library, or a second derivation of
//! the same quantity along a different route.

use edgelab_core::charfn::{tail_integral, AnalyticCf, CharFnSource};
use edgelab_core::cumulants::{check_fourth_moment, check_fourth_moment_exact};
use edgelab_core::laws::{InnovationLaw, SmoothingLaw};
use edgelab_core::metrics::{kolmogorov, CdfEval};
use edgelab_core::processes::{
    simulate_sample_set, simulate_sample_set_with, Family, InnovationStream, ProcessSpec,
    SimMethod, SimOptions,
};
use edgelab_core::{quad, special};

use statrs::distribution::{ContinuousCDF, Normal};

fn iid(law: InnovationLaw) -> ProcessSpec {
    ProcessSpec::new(Family::Iid { law })
}

/// ∫ (sin u / u)^b du over ℝ by composite panels plus a |u|^{−b} tail bound.
fn sinc_power_integral(b: i32, cut: f64) -> f64 {
    let body = 2.0 * quad::integrate_composite(
        |u: f64| {
            if u == 0.0 {
                1.0
            } else {
                (u.sin() / u).powi(b)
            }
        },
        0.0,
        cut,
        0.5,
    );
    let tail = 2.0 * cut.powi(1 - b) / (b as f64 - 1.0);
    assert!(tail < 1e-11, "tail bound too loose: {tail}");
    body
}

#[test]
fn sinc_power_integrals_pin_smoothing_normalizer() {
    let i6 = sinc_power_integral(6, 400.0);
    let i8 = sinc_power_integral(8, 100.0);
    // Closed forms: ∫ sinc⁶ = 11π/20, ∫ sinc⁸ = 151π/315.
    assert!((i6 - 11.0 * std::f64::consts::PI / 20.0).abs() < 1e-9);
    assert!((i8 - 151.0 * std::f64::consts::PI / 315.0).abs() < 1e-9);
    assert!((i6 - 1.727_875_959_474_386_2).abs() < 1e-9);
    assert!((i8 - 1.505_969_811_720_821_3).abs() < 1e-9);

    // c_b = 1/∫sinc^b is a pure function of b, independent of a.
    let narrow = SmoothingLaw::new(0.7, 6).unwrap();
    let wide = SmoothingLaw::new(1.3, 6).unwrap();
    assert_eq!(narrow.c_b(), wide.c_b());
    assert!((narrow.c_b() - 20.0 / (11.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert!((narrow.c_b() - 1.0 / i6).abs() < 1e-9);
    let b8 = SmoothingLaw::new(1.0, 8).unwrap();
    assert!((b8.c_b() - 315.0 / (151.0 * std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn smoothing_density_and_transform_agree_with_quadrature() {
    let law = SmoothingLaw::new(1.0, 6).unwrap();
    // Mass: density decays like x⁻⁶, so [−400, 400] leaves < 1e-9.
    let mass = 2.0 * quad::integrate_composite(|x: f64| law.density(x), 0.0, 400.0, 0.5);
    assert!((mass - 1.0).abs() < 1e-8, "∫g = {mass}");

    // ĝ(t) = ∫ g(x) cos(tx) dx for the symmetric density.
    for t in [0.3, 1.0, 4.8] {
        let transform =
            2.0 * quad::integrate_composite(|x: f64| law.density(x) * (t * x).cos(), 0.0, 400.0, 0.4);
        assert!(
            (law.cf(t) - transform).abs() < 1e-6,
            "t = {t}: cf {} vs quadrature {}",
            law.cf(t),
            transform
        );
    }
    assert_eq!(law.cf(0.0), 1.0);
    assert_eq!(law.cf(law.spectrum_edge() + 1e-9), 0.0);
    assert_eq!(law.cf(-law.spectrum_edge()), 0.0);

    // Second moment against direct quadrature (x²g decays like x⁻⁴).
    let m2 = 2.0 * quad::integrate_composite(|x: f64| x * x * law.density(x), 0.0, 2000.0, 0.5);
    assert!(
        (law.variance() - m2).abs() < 1e-6,
        "variance {} vs quadrature {}",
        law.variance(),
        m2
    );
}

struct UnitUniform;

impl CdfEval for UnitUniform {
    fn cdf(&self, x: f64) -> f64 {
        (0.5 * (x + 1.0)).clamp(0.0, 1.0)
    }
}

#[test]
fn doubling_stationary_law_is_dyadic_uniform() {
    // X₀ = Σ_{i<d} 2^{−i−1} ε_{−i} with Rademacher digits is uniform on the
    // odd multiples of 2^{−d} in (−1, 1).
    let digits = 12u32;
    let spec = ProcessSpec::new(Family::Doubling { digits });
    let stream = InnovationStream::for_spec(&spec, 77, 0);
    let set = simulate_sample_set::<f64>(&spec, &stream, 1, 20_000).unwrap();

    let scale = f64::from(1u32 << digits);
    for &x in &set.sums {
        let v = (x + 1.0) * scale;
        let k = v.round();
        assert!((v - k).abs() < 1e-9, "draw {x} off the dyadic grid");
        assert_eq!(k.rem_euclid(2.0), 1.0, "draw {x} on an even node");
    }

    // The exact law sits within 2^{−d−1} of Uniform(−1,1) in Kolmogorov
    // distance; 0.0138 is the 99.9% DKW band at M = 20 000.
    let rep = kolmogorov(&set, &UnitUniform);
    assert!(
        rep.value < 0.0138 + 0.5 / scale,
        "KS to uniform: {}",
        rep.value
    );
}

#[test]
fn standard_normal_functionals_match_closed_forms() {
    let spec = iid(InnovationLaw::StandardNormal);
    let stream = InnovationStream::for_spec(&spec, 404, 0);
    let set = simulate_sample_set::<f64>(&spec, &stream, 1, 200_000).unwrap();
    let m = set.sums.len() as f64;

    let check = |name: &str, f: &dyn Fn(f64) -> f64, target: f64| {
        let mean = set.sums.iter().map(|&z| f(z)).sum::<f64>() / m;
        let var = set.sums.iter().map(|&z| (f(z) - mean).powi(2)).sum::<f64>() / m;
        let se = (var / m).sqrt();
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "{name}: {mean} vs {target} (se {se})"
        );
    };
    // E cos Z = e^{−1/2}, E Z⁴ = 3, E |Z| = √(2/π).
    check("E cos Z", &|z| z.cos(), (-0.5f64).exp());
    check("E cos Z pinned", &|z| z.cos(), 0.606_530_659_712_633_4);
    check("E Z^4", &|z| z.powi(4), 3.0);
    check("E |Z|", &|z| z.abs(), (2.0 / std::f64::consts::PI).sqrt());
}

/// Two-sample Kolmogorov statistic, sorted-merge sweep.
fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut sup) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

#[test]
fn path_fold_matches_closed_form_distribution() {
    // The gamma reduction for exponential linear sums must agree in law
    // with folding the literal path.
    let spec = ProcessSpec::new(Family::Linear {
        coeffs: vec![1.0, 0.5],
        law: InnovationLaw::CenteredExponential { rate: 1.0 },
    });
    let m = 30_000u64;
    let fast = simulate_sample_set::<f64>(&spec, &InnovationStream::for_spec(&spec, 5, 0), 64, m)
        .unwrap();
    let slow = simulate_sample_set_with::<f64>(
        &spec,
        &InnovationStream::for_spec(&spec, 5, 1),
        64,
        m,
        SimOptions { force_path: true },
    )
    .unwrap();
    assert_eq!(fast.method, SimMethod::ClosedForm);
    assert_eq!(slow.method, SimMethod::PathFold);

    let (mf, vf, _) = fast.moments();
    let (ms, vs, _) = slow.moments();
    let se_mean = (vf / m as f64).sqrt() + (vs / m as f64).sqrt();
    assert!((mf - ms).abs() <= 3.0 * se_mean, "means {mf} vs {ms}");

    // 99.9% two-sample band: 1.9495 √(2/M).
    let mut a = fast.sums.clone();
    let mut b = slow.sums.clone();
    let ks = two_sample_ks(&mut a, &mut b);
    assert!(ks <= 1.9495 * (2.0 / m as f64).sqrt(), "two-sample KS {ks}");
}

/// Composite Simpson rule with `panels` even subdivisions.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * k as f64);
    }
    acc * h / 3.0
}

#[test]
fn simpson_oracle_for_gaussian_tail_integral() {
    let src: CharFnSource = AnalyticCf::GaussianSum { s: 1.0 }.into();
    let (a, b) = (2.0, 9.0);
    let xs = [0.7, 1.3, 2.6];
    let res = tail_integral(&src, a, b, &xs).unwrap();
    for (&x, val) in xs.iter().zip(&res.values) {
        // Real symmetric CF: 𝔗 is purely imaginary,
        // Im 𝔗(x) = −2 ∫_a^b sin(xξ) e^{−ξ²/2} (1/ξ − 1/b) dξ.
        let oracle = -2.0
            * simpson(
                |xi| (x * xi).sin() * (-0.5 * xi * xi).exp() * (1.0 / xi - 1.0 / b),
                a,
                b,
                20_000,
            );
        assert!(res.values[0].re.abs() < 1e-14);
        assert!(
            (val.im - oracle).abs() < 1e-10,
            "x = {x}: {} vs Simpson {oracle}",
            val.im
        );
    }
}

#[test]
fn fourth_moment_ratio_closed_forms() {
    // r(n) = |E Sₙ⁴ − 3n²sₙ⁴| / n = |Σ w_t⁴| · |Eε⁴ − 3σ⁴| / n.
    let rad = check_fourth_moment_exact(&iid(InnovationLaw::Rademacher), 64).unwrap();
    assert_eq!(rad.r, 2.0);
    assert_eq!(rad.se, 0.0);

    // Centered Exp(1): Eε⁴ = 9, σ² = 1, so the innovation factor is 6.
    let exp = check_fourth_moment_exact(
        &iid(InnovationLaw::CenteredExponential { rate: 1.0 }),
        17,
    )
    .unwrap();
    assert!((exp.r - 6.0).abs() < 1e-12);

    // MA(1) weights: one 1, one 0.5, and n−1 interior 1.5 values.
    let ma = ProcessSpec::new(Family::Linear {
        coeffs: vec![1.0, 0.5],
        law: InnovationLaw::Rademacher,
    });
    let n = 8u64;
    let got = check_fourth_moment_exact(&ma, n).unwrap();
    let w4 = 1.0 + (n as f64 - 1.0) * 1.5f64.powi(4) + 0.5f64.powi(4);
    assert!((got.r - 2.0 * w4 / n as f64).abs() < 1e-12);

    // Monte Carlo estimator agrees with the exact value within 3 SE.
    let spec = iid(InnovationLaw::Rademacher);
    let stream = InnovationStream::for_spec(&spec, 11, 0);
    let mc = check_fourth_moment(&spec, 4, 20_000, &stream).unwrap();
    assert!((mc.r - 2.0).abs() <= 3.0 * mc.se + 1e-12, "{} ± {}", mc.r, mc.se);
}

#[test]
fn normal_cdf_quantile_cross_checks() {
    // 2Φ(0.1) − 1 and Φ⁻¹(0.975), printed to full precision.
    assert!((2.0 * special::std_normal_cdf(0.1) - 1.0 - 0.079_655_674_554_057_98).abs() < 1e-15);
    assert!((special::std_normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);

    // Round trip and agreement with an external implementation.
    let ext = Normal::new(0.0, 1.0).unwrap();
    let mut x = -5.0;
    while x <= 5.0 {
        let p = special::std_normal_cdf(x);
        assert!((special::std_normal_quantile(p) - x).abs() < 1e-9, "x = {x}");
        // statrs ships Cody's rational erf, good to ~1e-11 absolute.
        assert!((p - ext.cdf(x)).abs() < 5e-11, "x = {x}");
        x += 0.5;
    }

    // Si(5) against direct quadrature and Si(π) against the printed
    // Wilbraham-Gibbs constant.
    let direct = quad::integrate_composite(
        |u: f64| if u == 0.0 { 1.0 } else { u.sin() / u },
        0.0,
        5.0,
        0.25,
    );
    assert!((special::sin_integral(5.0) - direct).abs() < 1e-12);
    assert!((special::sin_integral(std::f64::consts::PI) - 1.851_937_051_982_466_2).abs() < 1e-12);
}
