// Temporary microbenchmark; not part of the deliverable.
use lab_core::ensembles::{EnsembleSpec, HeckeMode};
use lab_core::transforms::{self, RadialProfile, TestFunction};
use std::time::Instant;

fn main() {
    let spec = EnsembleSpec::Hecke {
        n: 4,
        p: 101,
        mode: HeckeMode::Full,
    };
    let tf = TestFunction {
        primal: vec![
            RadialProfile::Gaussian { t: 1.0 },
            RadialProfile::Gaussian { t: 1.0 },
        ],
        dual: vec![],
    };
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..20000 {
        let l = spec.member(i).unwrap();
        acc += l.covolume();
    }
    println!(
        "member-only: {:.1} us each ({acc:.1})",
        t0.elapsed().as_secs_f64() * 1e6 / 20000.0
    );
    let l = spec.member(7).unwrap();
    let t0 = Instant::now();
    let mut acc = 0.0;
    for _ in 0..20000 {
        acc += lab_core::geom::theta_sum(&l, 1.0);
    }
    println!(
        "theta-only: {:.1} us each ({acc:.1})",
        t0.elapsed().as_secs_f64() * 1e6 / 20000.0
    );
    let t0 = Instant::now();
    let mut acc = 0.0;
    for i in 0..20000 {
        let l = spec.member(i).unwrap();
        acc += transforms::product_multisum(&l, &tf).unwrap();
    }
    println!(
        "member+stat: {:.1} us each ({acc:.1})",
        t0.elapsed().as_secs_f64() * 1e6 / 20000.0
    );
}
