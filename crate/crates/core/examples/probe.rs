// Temporary calibration probe; not part of the deliverable.
use lab_core::ensembles::{EnsembleSpec, HeckeMode};
use lab_core::rhs;
use lab_core::transforms::{self, RadialProfile, TestFunction};
use std::time::Instant;

fn gauss(t: f64) -> RadialProfile {
    RadialProfile::Gaussian { t }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "a6" => a6(),
        "a7" => a7(),
        "a8" => a8(),
        "a12" => a12(),
        _ => println!("usage: probe a6|a7|a8|a12"),
    }
}

fn a6() {
    // Rogers k=2, n=4: statistic Θ², RHS from rogers_rhs
    let rhs = rhs::rogers_rhs(&[gauss(1.0), gauss(1.0)], 4, 40).unwrap();
    println!("rhs = {} ± {}", rhs.value, rhs.tail_bound);
    let tf = TestFunction {
        primal: vec![gauss(1.0), gauss(1.0)],
        dual: vec![],
    };
    for (p, mode) in [
        (101u64, HeckeMode::Full),
        (211, HeckeMode::Full),
        (401, HeckeMode::Sampled { count: 6_000_000, seed: 64 }),
        (401, HeckeMode::Sampled { count: 20_000_000, seed: 65 }),
    ] {
        let t0 = Instant::now();
        let spec = EnsembleSpec::Hecke { n: 4, p, mode };
        let est = transforms::ensemble_estimate(&spec, |l| transforms::product_multisum(l, &tf))
            .unwrap();
        let rel = (est.mean - rhs.value) / rhs.value;
        println!(
            "p={p}: mean={:.6} stderr={:.2e} rel_err={:+.5} ({:.1}s, count={})",
            est.mean,
            est.stderr,
            rel,
            t0.elapsed().as_secs_f64(),
            est.count
        );
    }
}

fn a7() {
    let tf = TestFunction {
        primal: vec![gauss(1.0)],
        dual: vec![gauss(1.0)],
    };
    let breakdown = rhs::dual_rhs(
        &tf,
        3,
        rhs::Truncation { h: 4, dmax: 4000, beta_bound: 8 },
    )
    .unwrap();
    println!("rhs = {} ± {}", breakdown.total, breakdown.tail);
    for p in [101u64, 401, 1009] {
        let t0 = Instant::now();
        let spec = EnsembleSpec::Hecke { n: 3, p, mode: HeckeMode::Full };
        let est = transforms::ensemble_estimate(&spec, |l| transforms::product_multisum(l, &tf))
            .unwrap();
        let rel = (est.mean - breakdown.total) / breakdown.total;
        println!(
            "p={p}: mean={:.6} stderr={:.2e} rel_err={:+.5} ({:.1}s)",
            est.mean,
            est.stderr,
            rel,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn a8() {
    use lab_core::mat::Mat;
    use num_bigint::BigInt;
    let zeta4 = lab_core::weights::zeta(4);
    for bval in [0i64, 1] {
        let tf = TestFunction {
            primal: vec![gauss(1.0)],
            dual: vec![gauss(1.0)],
        };
        let beta = Mat::from_rows(&[vec![BigInt::from(bval)]]);
        let eta = rhs::eta_integral(
            &beta,
            &Mat::identity(1),
            &Mat::identity(1),
            &tf,
            4,
            rhs::EtaMethod::Auto,
        )
        .unwrap();
        let t0 = Instant::now();
        let spec = EnsembleSpec::Hecke {
            n: 4,
            p: 1009,
            mode: HeckeMode::Sampled { count: 60_000, seed: 11 },
        };
        let b2 = beta.clone();
        let tf2 = tf.clone();
        let est = transforms::ensemble_estimate(&spec, move |l| {
            transforms::f_beta_sum(l, &b2, &tf2)
        })
        .unwrap();
        let ratio = est.mean / eta.value;
        println!(
            "beta={bval}: eta={:.6} F={:.6}±{:.1e} ratio={:.6} 1/z4={:.6} reldev={:+.4} ({:.1}s)",
            eta.value,
            est.mean,
            est.stderr,
            ratio,
            1.0 / zeta4,
            (ratio - 1.0 / zeta4) * zeta4,
            t0.elapsed().as_secs_f64()
        );
    }
}

fn a12() {
    // moments at n ∈ {8,10,12}: E[N1], E[N1*Ñ1], E[N1²]
    for (n, p, count) in [
        (8usize, 393_941u64, 30_000u64),
        (10, 10_904_999, 30_000),
        (12, 327_082_993, 30_000),
    ] {
        let t0 = Instant::now();
        let spec = EnsembleSpec::Hecke {
            n,
            p,
            mode: HeckeMode::Sampled { count, seed: 7 },
        };
        let ests = transforms::ensemble_estimate_vec(&spec, 3, |l| {
            let (nv, nw) = transforms::count_statistic(l, &[1.0], &[1.0])?;
            let n1 = nv[0] as f64;
            let w1 = nw[0] as f64;
            Ok(vec![n1, n1 * w1, n1 * n1])
        })
        .unwrap();
        println!(
            "n={n} p={p}: E[N1]={:.4}±{:.3} E[N1W1]={:.4}±{:.3} E[N1²]={:.4}±{:.3} ({:.1}s)",
            ests[0].mean,
            ests[0].stderr,
            ests[1].mean,
            ests[1].stderr,
            ests[2].mean,
            ests[2].stderr,
            t0.elapsed().as_secs_f64()
        );
    }
}
