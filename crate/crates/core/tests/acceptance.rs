//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`). Every tolerance is pinned here.
//!
//! The Monte Carlo criteria use fixed seeds, counter-based RNG streams and
//! deterministic chunked reductions, so their verdicts are reproducible on
//! any machine and worker count.

use lab_core::ensembles::{self, EnsembleSpec, HeckeMode};
use lab_core::geom;
use lab_core::intlin;
use lab_core::mat::IntMat;
use lab_core::rhs::{self, EtaMethod, Truncation};
use lab_core::special::ball_volume;
use lab_core::transforms::{self, RadialProfile, TestFunction};
use lab_core::weights;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

fn gauss(t: f64) -> RadialProfile {
    RadialProfile::Gaussian { t }
}

fn ball(volume: f64) -> RadialProfile {
    RadialProfile::Ball {
        volume,
        exclude_origin: true,
    }
}

fn report(id: &str, name: &str, pass: bool, detail: &str) {
    println!(
        "{id} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{id} {name} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Shared brute-force oracles
// ---------------------------------------------------------------------------

fn entry_box(len: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len());
        for v in &out {
            for x in -bound..=bound {
                let mut w = v.clone();
                w.push(x);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

fn exact_det(a: &IntMat) -> BigInt {
    intlin::rat_det(&a.to_rat()).to_integer()
}

/// Independent Smith oracle: ε_k = gcd(k-minors)/gcd((k−1)-minors).
fn minor_gcd_divisors(a: &IntMat) -> Vec<BigInt> {
    use num_integer::Integer;
    let steps = a.rows().min(a.cols());
    let mut prev = BigInt::one();
    let mut out = Vec::new();
    for k in 1..=steps {
        let mut g = BigInt::zero();
        for rows in combinations(a.rows(), k) {
            for cols in combinations(a.cols(), k) {
                let sub = IntMat::from_fn(k, k, |i, j| a.at(rows[i], cols[j]).clone());
                g = g.gcd(&exact_det(&sub));
            }
        }
        if g.is_zero() {
            out.push(BigInt::zero());
        } else {
            out.push(&g / &prev);
            prev = g;
        }
    }
    out
}

/// Definition-level primitivity: every integer point of the rational column
/// span (within a box) must be an integer combination of the columns.
fn primitive_by_definition(b: &IntMat, box_bound: i64) -> bool {
    let (k, m) = (b.rows(), b.cols());
    if intlin::rank(b) < m {
        return false;
    }
    let bq = b.to_rat();
    for v in entry_box(k, box_bound) {
        let vm = IntMat::from_i64(k, 1, &v).to_rat();
        // least-squares solve over ℚ: x = (BᵀB)⁻¹Bᵀv; in-span iff Bx = v
        let bt = bq.transpose();
        let Ok(inv) = intlin::rat_inverse(&bt.mul(&bq)) else {
            return false;
        };
        let x = inv.mul(&bt).mul(&vm);
        if bq.mul(&x) == vm {
            // in the span: must be an integer combination
            if x.to_int().is_none() {
                return false;
            }
        }
    }
    true
}

fn brute_congruence(theta: &IntMat, q: u64) -> BigInt {
    let (m1, m2) = (theta.rows(), theta.cols());
    let th: Vec<i64> = theta.data().iter().map(|x| x.to_i64().unwrap()).collect();
    let mut count = 0u64;
    let mut a = vec![0i64; m1];
    loop {
        let ok = (0..m2).all(|j| {
            let mut s = 0i64;
            for i in 0..m1 {
                s += th[i * m2 + j] * a[i];
            }
            s.rem_euclid(q as i64) == 0
        });
        if ok {
            count += 1;
        }
        let mut i = 0;
        loop {
            if i == m1 {
                return BigInt::from(count);
            }
            a[i] += 1;
            if a[i] < q as i64 {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// A1 — exact kernels against brute-force oracles
// ---------------------------------------------------------------------------

#[test]
fn a01_exact_kernel_oracles() {
    let mut cases = 0usize;

    // Smith vs minor gcds: exhaustive small boxes
    for (r, c, bound) in [(2usize, 2usize, 2i64), (1, 3, 4), (3, 1, 4), (2, 3, 1), (3, 2, 1)] {
        for e in entry_box(r * c, bound) {
            let a = IntMat::from_i64(r, c, &e);
            let sd = intlin::smith(&a);
            assert_eq!(sd.u.mul(&sd.d).mul(&sd.v), a);
            assert_eq!(exact_det(&sd.u).abs(), BigInt::one());
            assert_eq!(exact_det(&sd.v).abs(), BigInt::one());
            assert_eq!(sd.divisors, minor_gcd_divisors(&a), "smith oracle on {a:?}");
            cases += 1;
        }
    }
    // randomized 3×3 with entries ≤ 4
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let e: Vec<i64> = (0..9).map(|_| rng.gen_range(-4..=4)).collect();
        let a = IntMat::from_i64(3, 3, &e);
        let sd = intlin::smith(&a);
        assert_eq!(sd.u.mul(&sd.d).mul(&sd.v), a);
        assert_eq!(sd.divisors, minor_gcd_divisors(&a));
        cases += 1;
    }

    // Hermite coset representative: unique 𝔚-form element over unimodular
    // multiples (exhaustive γ box), plus idempotence
    for e in entry_box(4, 2) {
        let a = IntMat::from_i64(2, 2, &e);
        if exact_det(&a).is_zero() {
            continue;
        }
        let (h, g) = intlin::coset_canonical_w(&a).unwrap();
        assert_eq!(g.mul(&a), *h.matrix());
        assert!(intlin::is_w_form(h.matrix()));
        let (h2, _) = intlin::coset_canonical_w(h.matrix()).unwrap();
        assert_eq!(h2.matrix(), h.matrix(), "idempotence");
        cases += 1;
    }
    // uniqueness by exhaustive unimodular search on a few fixed cosets
    for a in [
        IntMat::from_i64(2, 2, &[0, 1, 2, 0]),
        IntMat::from_i64(2, 2, &[1, 5, 0, 3]),
        IntMat::from_i64(2, 2, &[2, 1, 3, 2]),
    ] {
        let mut reps = std::collections::HashSet::new();
        for e in entry_box(4, 3) {
            let g = IntMat::from_i64(2, 2, &e);
            if exact_det(&g).abs() == BigInt::one() {
                let h = g.mul(&a);
                if intlin::is_w_form(&h) {
                    reps.insert(format!("{h:?}"));
                }
            }
        }
        assert_eq!(reps.len(), 1, "unique coset representative for {a:?}");
        cases += 1;
    }

    // orbit canonicalization: constant on orbits, canonical-shape oracle
    for (k, m, bound) in [(2usize, 1usize, 2i64), (3, 1, 1), (3, 2, 1), (2, 2, 2)] {
        let mut canon = std::collections::HashSet::new();
        for e in entry_box(k * m, bound) {
            let b = IntMat::from_i64(k, m, &e);
            if !intlin::is_primitive(&b) {
                continue;
            }
            let (cn, g) = intlin::orbit_canonical_a(&b).unwrap();
            assert_eq!(b.mul(&g), cn);
            if cn.max_abs_i64() <= bound {
                canon.insert(format!("{cn:?}"));
            }
            cases += 1;
        }
        let fast: std::collections::HashSet<String> = intlin::enumerate_a(k, m, bound)
            .iter()
            .map(|b| format!("{b:?}"))
            .collect();
        assert_eq!(fast, canon, "enumerate_a ({k},{m},{bound})");
    }

    // primitivity against the definition
    for (k, m, bound) in [(2usize, 1usize, 2i64), (3, 1, 2), (3, 2, 1)] {
        for e in entry_box(k * m, bound) {
            let b = IntMat::from_i64(k, m, &e);
            if (0..m).any(|c| (0..k).all(|r| b.at(r, c).is_zero())) {
                continue;
            }
            assert_eq!(
                intlin::is_primitive(&b),
                primitive_by_definition(&b, 2),
                "primitivity oracle on {b:?}"
            );
            cases += 1;
        }
    }

    // congruence count against brute force: exhaustive small shapes
    for q in 1..=6u64 {
        for (m1, m2) in [(1usize, 1usize), (1, 2), (2, 1), (2, 2)] {
            let bound = (q as i64).min(3);
            for e in entry_box(m1 * m2, bound) {
                let theta = IntMat::from_i64(m1, m2, &e);
                assert_eq!(
                    intlin::congruence_count(&theta, q),
                    brute_congruence(&theta, q)
                );
                cases += 1;
            }
        }
    }
    // randomized 3×3
    for _ in 0..50 {
        let q = rng.gen_range(1..=6u64);
        let e: Vec<i64> = (0..9).map(|_| rng.gen_range(-(q as i64)..=q as i64)).collect();
        let theta = IntMat::from_i64(3, 3, &e);
        assert_eq!(intlin::congruence_count(&theta, q), brute_congruence(&theta, q));
        cases += 1;
    }

    report("A1", "exact-kernel oracle suite", true, &format!("{cases} cases"));
}

// ---------------------------------------------------------------------------
// A2 — the congruence identity on the full grid
// ---------------------------------------------------------------------------

#[test]
fn a02_linalg_identity_grid() {
    let rep = weights::linalg_identity_grid(2, 3, 4, &[7, 9], 120);
    report(
        "A2",
        "congruence identity grid",
        rep.failures == 0,
        &format!("{} cases, max gap {:.2e}", rep.cases, rep.max_gap),
    );
}

// ---------------------------------------------------------------------------
// A3 — block-bijection determinant identity
// ---------------------------------------------------------------------------

#[test]
fn a03_b3_determinant_identity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
    let a21 = intlin::enumerate_a(2, 1, 2);
    let a31 = intlin::enumerate_a(3, 1, 2);
    let a32 = intlin::enumerate_a(3, 2, 1);
    let a22 = intlin::enumerate_a(2, 2, 2);
    let mut checked = 0usize;
    while checked < 200 {
        let (b1, m1) = if rng.gen_bool(0.7) {
            (a21[rng.gen_range(0..a21.len())].clone(), 1usize)
        } else {
            (a22[rng.gen_range(0..a22.len())].clone(), 2usize)
        };
        let (b2, m2) = if rng.gen_bool(0.5) {
            (a31[rng.gen_range(0..a31.len())].clone(), 1usize)
        } else {
            (a32[rng.gen_range(0..a32.len())].clone(), 2usize)
        };
        let alpha = lab_core::RatMat::from_fn(m2, m1, |_, _| {
            BigRational::new(
                BigInt::from(rng.gen_range(-4..=4i64)),
                BigInt::from(rng.gen_range(1..=4i64)),
            )
        });
        let (b3, j) = intlin::b3_construct(&b1, &b2, &alpha).unwrap();
        assert!(intlin::is_primitive(&b3));
        let xi = alpha.transpose().mul(&b2.transpose().mul(&b2).to_rat());
        let q = intlin::rational_denominator(&xi);
        let theta = xi
            .map(|x| x * BigRational::from_integer(q.clone()))
            .to_int()
            .unwrap();
        let n = intlin::congruence_count(&theta, q.to_u64().unwrap());
        // |det J| · q^{m₁} = N exactly
        let lhs = intlin::rat_det(&j).abs() * BigRational::from_integer(q.pow(m1 as u32));
        assert_eq!(lhs, BigRational::from_integer(n), "case {checked}");
        checked += 1;
    }
    report("A3", "block bijection |det J|·q^m₁ = N", true, "200 random cases");
}

// ---------------------------------------------------------------------------
// A4 — Siegel mean value at n = 2 (exact sampler)
// ---------------------------------------------------------------------------

#[test]
fn a04_siegel_x2() {
    let spec = EnsembleSpec::X2Exact {
        samples: 100_000,
        seed: 20240808,
    };
    let est = transforms::ensemble_estimate(&spec, |l| transforms::siegel_sum(l, &gauss(1.0)))
        .unwrap();
    let ok = (est.mean - 2.0).abs() <= 3.0 * est.stderr && est.stderr < 0.01;
    report(
        "A4",
        "Siegel mean value at n=2",
        ok,
        &format!("mean {:.5} ± {:.5} vs 2", est.mean, est.stderr),
    );
}

// ---------------------------------------------------------------------------
// A5 — primitive-tuple mean value at n = 2, k = 1
// ---------------------------------------------------------------------------

#[test]
fn a05_primitive_mean_value() {
    let spec = EnsembleSpec::X2Exact {
        samples: 100_000,
        seed: 31337,
    };
    let est = transforms::ensemble_estimate(&spec, |l| {
        transforms::primitive_tuple_sum(l, &[gauss(1.0)])
    })
    .unwrap();
    let target = rhs::primitive_rhs(&[gauss(1.0)], 2).unwrap();
    let ok = (est.mean - target).abs() <= 3.0 * est.stderr;
    report(
        "A5",
        "primitive-tuple mean value",
        ok,
        &format!("mean {:.5} ± {:.5} vs {:.5}", est.mean, est.stderr, target),
    );
}

// ---------------------------------------------------------------------------
// A6 — multiple primal sums at n = 4, k = 2 along p ∈ {101, 211, 401}
// ---------------------------------------------------------------------------

#[test]
fn a06_rogers_k2_hecke_trend() {
    let tf = TestFunction {
        primal: vec![gauss(1.0), gauss(1.0)],
        dual: vec![],
    };
    let target = rhs::rogers_rhs(&tf.primal, 4, 40).unwrap();
    let mut rels = Vec::new();
    for (p, mode) in [
        (101u64, HeckeMode::Full),
        (211, HeckeMode::Full),
        (
            401,
            HeckeMode::Sampled {
                count: 6_000_000,
                seed: 64,
            },
        ),
    ] {
        let spec = EnsembleSpec::Hecke { n: 4, p, mode };
        let tf2 = tf.clone();
        let est =
            transforms::ensemble_estimate(&spec, move |l| transforms::product_multisum(l, &tf2))
                .unwrap();
        rels.push((est.mean - target.value) / target.value);
    }
    let decreasing = rels[0].abs() > rels[1].abs() && rels[1].abs() > rels[2].abs();
    let final_ok = rels[2].abs() < 0.02;
    report(
        "A6",
        "Rogers k=2 Hecke trend (p = 101, 211, 401)",
        decreasing && final_ok,
        &format!(
            "rhs {:.4}, rel errs {:+.4}, {:+.4}, {:+.4}",
            target.value, rels[0], rels[1], rels[2]
        ),
    );
}

// ---------------------------------------------------------------------------
// A7 — the joint mean value at n = 3, k₁ = k₂ = 1
// ---------------------------------------------------------------------------

#[test]
fn a07_dual_mean_value_trend() {
    let tf = TestFunction {
        primal: vec![gauss(1.0)],
        dual: vec![gauss(1.0)],
    };
    let breakdown = rhs::dual_rhs(
        &tf,
        3,
        Truncation {
            h: 4,
            dmax: 4000,
            beta_bound: 8,
        },
    )
    .unwrap();
    let mut rels = Vec::new();
    for p in [1009u64, 5003, 24001] {
        let spec = EnsembleSpec::Hecke {
            n: 3,
            p,
            mode: HeckeMode::Sampled {
                count: 1_200_000,
                seed: 7177,
            },
        };
        let tf2 = tf.clone();
        let est =
            transforms::ensemble_estimate(&spec, move |l| transforms::product_multisum(l, &tf2))
                .unwrap();
        rels.push((est.mean - breakdown.total) / breakdown.total);
    }
    let monotone = rels[0].abs() > rels[1].abs() && rels[1].abs() > rels[2].abs();
    let final_ok = rels[2].abs() < 0.02;
    report(
        "A7",
        "joint mean value trend (n=3)",
        monotone && final_ok,
        &format!(
            "rhs {:.4} ± {:.1e}, rel errs {:+.4}, {:+.4}, {:+.4}",
            breakdown.total, breakdown.tail, rels[0], rels[1], rels[2]
        ),
    );
}

// ---------------------------------------------------------------------------
// A8 — pairing-fiber mean value at n = 4, β ∈ {0, 1}
// ---------------------------------------------------------------------------

#[test]
fn a08_fbeta_ratio() {
    let tf = TestFunction {
        primal: vec![gauss(1.0)],
        dual: vec![gauss(1.0)],
    };
    let zeta4 = weights::zeta(4);
    let mut details = Vec::new();
    let mut ok = true;
    for bval in [0i64, 1] {
        let beta = IntMat::from_i64(1, 1, &[bval]);
        let eta = rhs::eta_integral(
            &beta,
            &IntMat::identity(1),
            &IntMat::identity(1),
            &tf,
            4,
            EtaMethod::Auto,
        )
        .unwrap();
        let spec = EnsembleSpec::Hecke {
            n: 4,
            p: 1009,
            mode: HeckeMode::Sampled {
                count: 60_000,
                seed: 88,
            },
        };
        let tf2 = tf.clone();
        let beta2 = beta.clone();
        let est = transforms::ensemble_estimate(&spec, move |l| {
            transforms::f_beta_sum(l, &beta2, &tf2)
        })
        .unwrap();
        let ratio = est.mean / eta.value;
        let dev = (ratio - 1.0 / zeta4) * zeta4;
        ok &= dev.abs() < 0.03;
        details.push(format!("β={bval}: ratio {:.5} dev {:+.4}", ratio, dev));
    }
    report(
        "A8",
        "F_β / η_β = 1/ζ(n)",
        ok,
        &format!("target {:.5}; {}", 1.0 / zeta4, details.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// A9 — weight-function property suite
// ---------------------------------------------------------------------------

#[test]
fn a09_weight_suite() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(909);
    let mut cases = 0usize;
    // trivial bounds: 50 random β over n ∈ {8, 10}
    for i in 0..50 {
        let n = if i % 2 == 0 { 8 } else { 10 };
        let m1 = rng.gen_range(1..=2usize);
        let m2 = rng.gen_range(1..=2usize);
        let data: Vec<i64> = (0..m1 * m2).map(|_| rng.gen_range(-3..=3)).collect();
        let beta = IntMat::from_i64(m1, m2, &data);
        let w = weights::weight_w(&beta, n, 150).unwrap();
        let (lo, hi) = weights::w_trivial_bounds(m1 as u32, m2 as u32, n);
        assert!(w.upper() >= lo - 1e-12 && w.value <= hi + 1e-12, "{beta:?}");
        // β = 0 attains the upper bound
        if data.iter().all(|&x| x == 0) {
            assert!((w.upper() - hi).abs() < 1e-6 + w.tail_bound);
        }
        cases += 1;
    }
    // exact unimodular invariance: 100 random pairs
    let beta0 = IntMat::from_i64(2, 2, &[1, 2, 0, 3]);
    let w0 = weights::weight_w(&beta0, 9, 100).unwrap();
    let mut done = 0;
    while done < 100 {
        let g1 = ensembles::random_unimodular(&mut rng, 2, 5);
        let g2 = ensembles::random_unimodular(&mut rng, 2, 5);
        let b = g1.mul(&beta0).mul(&g2);
        if b.to_i64().is_none() {
            continue;
        }
        let w = weights::weight_w(&b, 9, 100).unwrap();
        assert_eq!(w.value.to_bits(), w0.value.to_bits(), "W not invariant");
        done += 1;
        cases += 1;
    }
    // transpose symmetry: brackets overlap on the full small grid
    for (m1, m2) in [(1usize, 2usize), (2, 1), (2, 2)] {
        let n = (m1 + m2 + 2) as u32 + 2;
        for e in entry_box(m1 * m2, 3) {
            let beta = IntMat::from_i64(m1, m2, &e);
            let w = weights::weight_w(&beta, n, 150).unwrap();
            let wt = weights::weight_w(&beta.transpose(), n, 150).unwrap();
            assert!(w.overlaps(&wt), "W(β) vs W(βᵀ) disjoint at {beta:?}");
            cases += 1;
        }
    }
    report("A9", "weight suite", true, &format!("{cases} checks"));
}

// ---------------------------------------------------------------------------
// A10 — η_β property suite
// ---------------------------------------------------------------------------

#[test]
fn a10_eta_properties() {
    let mut notes = Vec::new();

    // transposition symmetry across (m₁, m₂) shapes at n ∈ {5, 6}
    for (n, m1, m2) in [(5usize, 1usize, 1usize), (5, 1, 2), (6, 2, 1), (6, 2, 2)] {
        let rho = TestFunction {
            primal: vec![gauss(1.0); m1],
            dual: vec![gauss(0.8); m2],
        };
        let rho_t = TestFunction {
            primal: vec![gauss(0.8); m2],
            dual: vec![gauss(1.0); m1],
        };
        let beta = IntMat::from_fn(m1, m2, |r, c| BigInt::from((r + c) as i64 % 2));
        let a = rhs::eta_integral(
            &beta,
            &IntMat::identity(m1),
            &IntMat::identity(m2),
            &rho,
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let b = rhs::eta_integral(
            &beta.transpose(),
            &IntMat::identity(m2),
            &IntMat::identity(m1),
            &rho_t,
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let tol = a.tail_bound + b.tail_bound + 1e-9 * (a.value.abs() + b.value.abs());
        assert!(
            (a.value - b.value).abs() <= tol,
            "transposition at n={n} ({m1},{m2}): {} vs {} (tol {tol:.2e})",
            a.value,
            b.value
        );
    }
    notes.push("transposition ok".to_string());

    // scaling law with diagonal integer T₁, T₂ and Gaussian slots:
    // η-integral of ρ(x·T₁, y·T₂) over S(β) equals
    // |det T₁|^{m₂−n}|det T₂|^{m₁−n}·η_{T₁ᵀβT₂}(ρ)
    {
        let n = 5;
        let (t1, t2) = (2i64, 3i64);
        let beta = IntMat::from_i64(1, 1, &[1]);
        let ident = IntMat::identity(1);
        // Gaussian(t) at τ·v = Gaussian(t/τ²) at v
        let lhs = rhs::eta_integral(
            &beta,
            &ident,
            &ident,
            &TestFunction {
                primal: vec![gauss(1.0 / (t1 * t1) as f64)],
                dual: vec![gauss(1.0 / (t2 * t2) as f64)],
            },
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let beta_scaled = IntMat::from_i64(1, 1, &[t1 * t2]);
        let rhs_eta = rhs::eta_integral(
            &beta_scaled,
            &ident,
            &ident,
            &TestFunction {
                primal: vec![gauss(1.0)],
                dual: vec![gauss(1.0)],
            },
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let factor = (t1 as f64).powi(1 - n as i32) * (t2 as f64).powi(1 - n as i32);
        let expect = factor * rhs_eta.value;
        assert!(
            (lhs.value - expect).abs() <= 1e-6 * expect.abs() + lhs.tail_bound + rhs_eta.tail_bound,
            "scaling law: {} vs {}",
            lhs.value,
            expect
        );
        notes.push("scaling ok".to_string());
    }

    // β = 0 factorization: dual-scale changes move only the det factor
    {
        let n = 6;
        let beta = IntMat::zeros(2, 1);
        let i2 = IntMat::identity(2);
        let i1 = IntMat::identity(1);
        let base = rhs::eta_integral(
            &beta,
            &i2,
            &i1,
            &TestFunction {
                primal: vec![gauss(1.0); 2],
                dual: vec![gauss(1.0)],
            },
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let scaled = rhs::eta_integral(
            &beta,
            &i2,
            &i1,
            &TestFunction {
                primal: vec![gauss(1.0); 2],
                dual: vec![gauss(2.0)],
            },
            n,
            EtaMethod::Auto,
        )
        .unwrap();
        let expect = 2f64.powf((n as f64 - 2.0) / 2.0);
        assert!(
            (scaled.value / base.value - expect).abs() < 1e-9,
            "β=0 factorization: ratio {} vs {}",
            scaled.value / base.value,
            expect
        );
        notes.push("factorization ok".to_string());
    }

    // ball asymptotics: η_β(S(β) ∩ ball^{m₁}×ball^{m₂} of radius R)
    // / R^{n(m₁+m₂)−2m₁m₂} → C(n; m₁, m₂), n = 5, m₁ = m₂ = 1
    {
        let n = 5;
        let c = rhs::c_const(n, 1, 1).unwrap();
        let beta = IntMat::from_i64(1, 1, &[1]);
        let ident = IntMat::identity(1);
        let vn = ball_volume::<f64>(n);
        let mut devs = Vec::new();
        for rr in [4.0f64, 8.0, 16.0] {
            let rho = TestFunction {
                primal: vec![ball(vn * rr.powi(n as i32))],
                dual: vec![ball(vn * rr.powi(n as i32))],
            };
            let eta = rhs::eta_integral(&beta, &ident, &ident, &rho, n, EtaMethod::Auto).unwrap();
            let scaled = eta.value / rr.powi((2 * n - 2) as i32);
            devs.push(((scaled - c) / c).abs());
        }
        assert!(devs[0] > devs[1] && devs[1] > devs[2], "trend {devs:?}");
        assert!(devs[2] < 0.05, "final deviation {devs:?}");
        notes.push(format!("ball asymptotics devs {devs:?}"));
    }

    report("A10", "η_β property suite", true, &notes.join("; "));
}

// ---------------------------------------------------------------------------
// A11 — Poisson-summation theta identity
// ---------------------------------------------------------------------------

#[test]
fn a11_theta_identity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1111);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = 2 + (i % 4);
        let l = ensembles::random_lattice(&mut rng, n);
        let ld = geom::dual(&l).unwrap();
        let a = geom::theta_sum(&l, 1.0);
        let b = geom::theta_sum(&ld, 1.0);
        let rel = (a - b).abs() / a.max(1.0);
        worst = worst.max(rel);
        let _ = rng.gen_range(0..2); // decorrelate shapes
    }
    report(
        "A11",
        "Poisson theta identity (100 random lattices)",
        worst < 1e-8,
        &format!("worst relative error {worst:.2e}"),
    );
}

// ---------------------------------------------------------------------------
// A12 — moment trend toward the limiting partition formula
// ---------------------------------------------------------------------------

#[test]
fn a12_moment_trend() {
    // Radii chosen so the effective count radius R = r_n·p^{1/n} grows
    // with n (4.2, 4.6, 5.0): the lattice-point discreteness bias then
    // decreases along the sequence.
    let cases = [
        (8usize, 393_007u64),
        (10, 10_817_999),
        (12, 325_991_899),
    ];
    let mut est = Vec::new();
    for (n, p) in cases {
        let spec = EnsembleSpec::Hecke {
            n,
            p,
            mode: HeckeMode::Sampled {
                count: 30_000,
                seed: 1204,
            },
        };
        let e = transforms::ensemble_estimate_vec(&spec, 3, |l| {
            let (nv, nw) = transforms::count_statistic(l, &[1.0], &[1.0])?;
            let n1 = nv[0] as f64;
            let w1 = nw[0] as f64;
            Ok(vec![n1, n1 * w1, n1 * n1])
        })
        .unwrap();
        est.push((n, e));
    }
    let targets = [1.0, 1.0, 3.0];
    let names = ["E[N₁]", "E[N₁Ñ₁]", "E[N₁²]"];
    let mut all_ok = true;
    let mut notes = Vec::new();
    for stat in 0..3 {
        let devs: Vec<f64> = est
            .iter()
            .map(|(_, e)| (e[stat].mean - targets[stat]).abs())
            .collect();
        let nonincreasing = devs[0] >= devs[1] - 1e-12 && devs[1] >= devs[2] - 1e-12;
        let final_ok = devs[2] < 0.10 * targets[stat];
        all_ok &= nonincreasing && final_ok;
        notes.push(format!(
            "{}: means {:.4}/{:.4}/{:.4} devs {:.4}/{:.4}/{:.4}{}",
            names[stat],
            est[0].1[stat].mean,
            est[1].1[stat].mean,
            est[2].1[stat].mean,
            devs[0],
            devs[1],
            devs[2],
            if nonincreasing && final_ok { "" } else { " ✗" }
        ));
    }
    report("A12", "moment trend (n = 8, 10, 12)", all_ok, &notes.join(" | "));
}

// ---------------------------------------------------------------------------
// A13 — counting limit with exact integer counts
// ---------------------------------------------------------------------------

#[test]
fn a13_counting_limit() {
    // L = ℤ⁴, x = e₁, β = 0: count w ∈ ℤ⁴ with w₁ = 0, 0 < ‖w‖ < R —
    // exact integer counts of ℤ³ ∩ open ball
    let count = |r: i64| -> u64 {
        let mut c = 0u64;
        for a in -r..=r {
            for b in -r..=r {
                for d in -r..=r {
                    let n2 = a * a + b * b + d * d;
                    if n2 > 0 && n2 < r * r {
                        c += 1;
                    }
                }
            }
        }
        c
    };
    let v3 = ball_volume::<f64>(3);
    let mut devs = Vec::new();
    for r in [10i64, 20, 40] {
        let n = count(r) as f64;
        let dev = (n / (r as f64).powi(3) - v3).abs() / v3;
        devs.push(dev);
    }
    let ok = devs[2] < 0.05 && devs[0] > devs[1] && devs[1] > devs[2];
    report(
        "A13",
        "counting limit on ℤ⁴",
        ok,
        &format!("deviations {:.4} / {:.4} / {:.4}", devs[0], devs[1], devs[2]),
    );
}
