//! Scratch calibration runs for the acceptance fixtures. Not shipped.

use edgelab_core::cumulants::closed_form_finite_n;
use edgelab_core::edgeworth::{EdgeworthExpansion, Variant};
use edgelab_core::highdim::{simulate_projection, HighDimSpec};
use edgelab_core::laws::InnovationLaw;
use edgelab_core::metrics::{fit_rate, kolmogorov};
use edgelab_core::processes::{simulate_sample_set, Family, InnovationStream, ProcessSpec};
use std::time::Instant;

fn ma1_exp() -> ProcessSpec {
    ProcessSpec::new(Family::Linear {
        coeffs: vec![1.0, 0.5],
        law: InnovationLaw::CenteredExponential { rate: 1.0 },
    })
}

fn main() {
    // --- truth probe: KS(Psi) for MA(1)-exp at high M ---
    println!("== KS(Psi) truth probe, M=2e7 ==");
    let spec = ma1_exp();
    for &n in &[64u64, 256, 2048] {
        let t = Instant::now();
        let m = 20_000_000u64;
        let stream = InnovationStream::for_spec(&spec, 4242, n);
        let set = simulate_sample_set::<f64>(&spec, &stream, n, m).unwrap();
        let cs = closed_form_finite_n(&spec, n).unwrap();
        let psi = EdgeworthExpansion::<f64>::from_cumulants(&cs, Variant::Standardized).unwrap();
        let k = kolmogorov(&set, &psi).value;
        println!(
            "n={n}: KS(Psi) {k:.6} (floor {:.6}) [{:?}]",
            0.8687 / (m as f64).sqrt(),
            t.elapsed()
        );
    }

    // --- #9 single-head design scan over tail mass ---
    let n_range: Vec<u64> = (8..=12).map(|k| 1u64 << k).collect();
    let rad = ProcessSpec::new(Family::Iid {
        law: InnovationLaw::Rademacher,
    });
    let m9 = 400_000u64;
    for mass in [1e-4f64, 2e-4, 4e-4] {
        println!("== #9 single-head, tail mass {mass} ==");
        let d = 33usize;
        let tail: Vec<usize> = (1..d).collect();
        let mut theta = vec![(1.0 - mass).sqrt()];
        theta.extend(std::iter::repeat((mass / 32.0).sqrt()).take(32));
        let hd = HighDimSpec::new(
            theta,
            tail,
            vec![rad.clone(); d],
            0.5,
            2.0,
            1e-5,
            1.0,
            &n_range,
        )
        .unwrap();
        let mut proj_pts = Vec::new();
        let mut twin_pts = Vec::new();
        let t = Instant::now();
        for &n in &n_range {
            let set = simulate_projection::<f64>(&hd, 31, n, m9).unwrap();
            let phi = EdgeworthExpansion::<f64>::new(1.0, 0.0, n, Variant::Standardized).unwrap();
            let kp = kolmogorov(&set, &phi).value;
            let stream = InnovationStream::for_spec(&rad, 31, 999);
            let tw = simulate_sample_set::<f64>(&rad, &stream, n, m9).unwrap();
            let kt = kolmogorov(&tw, &phi).value;
            println!("n={n}: proj KS {kp:.6} twin KS {kt:.6}");
            proj_pts.push((n as f64, kp));
            twin_pts.push((n as f64, kt));
        }
        let fp = fit_rate(&proj_pts).unwrap();
        let ft = fit_rate(&twin_pts).unwrap();
        println!(
            "mass {mass}: proj slope {:.3}, twin slope {:.3} [{:?}]",
            fp.slope,
            ft.slope,
            t.elapsed()
        );
    }
}
