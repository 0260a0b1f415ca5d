//! Right-hand-side evaluators: the explicit integrals and series the mean
//! values equal.
//!
//! The quantitative workhorse is the Gaussian slot family, for which every
//! integral reduces to determinants, one-dimensional radial integrals, or a
//! positive-definite matrix integral evaluated by importance-sampled
//! quasi-Monte Carlo. Ball slots are supported through the slice formula in
//! the `m₁ = 1` fiber (enough for the counting statistics) and by plain
//! Monte Carlo elsewhere.

use crate::error::Error;
use crate::intlin;
use crate::mat::{IntMat, Mat};
use crate::quad::{integrate_with_breaks};
use crate::special::{ball_volume, ln_gamma_multi};
use crate::transforms::{RadialProfile, TestFunction};
use crate::weights::{self, TruncatedValue};
use serde::{Deserialize, Serialize};

type Result<T> = std::result::Result<T, Error>;

const PI: f64 = std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Simple right-hand sides
// ---------------------------------------------------------------------------

/// Siegel's right-hand side: `∫ρ + ρ(0)`.
pub fn siegel_rhs(f: &RadialProfile, n: usize) -> f64 {
    f.integral(n) + f.at_origin()
}

/// `∫ρ / ∏_{j=n−k+1}^{n} ζ(j)` — the primitive-tuple right-hand side.
pub fn primitive_rhs(profiles: &[RadialProfile], n: usize) -> Result<f64> {
    let k = profiles.len();
    if k >= n {
        return Err(Error::domain("primitive_rhs needs k < n"));
    }
    let integral: f64 = profiles.iter().map(|p| p.integral(n)).product();
    Ok(integral / weights::zeta_product(n as u32, k as u32))
}

// ---------------------------------------------------------------------------
// ∫ ρ(x·Bᵀ) dx
// ---------------------------------------------------------------------------

/// `∫_{M_{n,m}} ∏_j ρ_j((xBᵀ)_j) dx` for a full-column-rank integer `B`
/// (k×m) and product radial profiles.
pub fn transform_integral(
    b: &IntMat,
    profiles: &[RadialProfile],
    n: usize,
) -> Result<TruncatedValue> {
    let (k, m) = (b.rows(), b.cols());
    if profiles.len() != k {
        return Err(Error::domain("profile count must equal the row count of B"));
    }
    if m == 0 {
        // empty matrix: the integral over a zero-dimensional space is the
        // value at the empty tuple, i.e. ∏ ρ_j(0)
        let v: f64 = profiles.iter().map(|p| p.at_origin()).product();
        return Ok(TruncatedValue::exact(v));
    }
    let bf = b.to_real::<f64>();
    // slots hit by a zero row of B see the origin
    let mut origin_factor = 1.0f64;
    for (j, p) in profiles.iter().enumerate() {
        if (0..m).all(|c| *bf.at(j, c) == 0.0) {
            origin_factor *= p.at_origin();
        }
    }
    if origin_factor == 0.0 {
        return Ok(TruncatedValue::exact(0.0));
    }
    let all_gauss = profiles
        .iter()
        .all(|p| matches!(p, RadialProfile::Gaussian { .. }));
    if all_gauss {
        // ∫ e^{−π Tr(x Q xᵀ)} dx = det(Q)^{−n/2}, Q = Bᵀ diag(1/t) B
        let q = weighted_gram(&bf, profiles);
        let det = q.det();
        if det <= 0.0 {
            return Err(Error::RankDeficient);
        }
        return Ok(TruncatedValue::exact(det.powf(-(n as f64) / 2.0)));
    }
    if m == 1 {
        // radial reduction: ∫ = n𝔙_n ∫₀^∞ ∏_j ρ_j(|b_j| r) r^{n−1} dr
        let coefs: Vec<f64> = (0..k).map(|j| bf.at(j, 0).abs()).collect();
        let (value, err) = radial_product_integral(&coefs, profiles, n, 0, 0.0);
        return Ok(TruncatedValue {
            value: value * origin_factor,
            tail_bound: err * origin_factor,
            cutoff: 0,
            heuristic: false,
        });
    }
    // Monte Carlo fallback for m ≥ 2 with ball slots: Gaussian importance
    // proposal matched to the slot scales.
    mc_transform_integral(&bf, profiles, n)
}

/// `Bᵀ diag(1/scale_j) B` where the Gaussian scale is `t_j` and a ball of
/// radius `r` gets the matching second-moment scale `r²·π/(n+2)`-free choice
/// (only used to shape Monte Carlo proposals).
fn weighted_gram(bf: &Mat<f64>, profiles: &[RadialProfile]) -> Mat<f64> {
    let (k, m) = (bf.rows(), bf.cols());
    Mat::from_fn(m, m, |i, j| {
        let mut acc = 0.0;
        for r in 0..k {
            let scale = match &profiles[r] {
                RadialProfile::Gaussian { t } => *t,
                RadialProfile::Ball { .. } => {
                    let rad2 = profiles[r].decay_radius(2).powi(2);
                    rad2.max(1e-12)
                }
            };
            acc += bf.at(r, i) * bf.at(r, j) / scale;
        }
        acc
    })
}

/// `n𝔙_n ∫ ∏_j ρ_j(c_j r) · r^{n−1−drop} · e^{−π couple/r²} dr`.
/// Shared radial kernel for transform and η integrals.
fn radial_product_integral(
    coefs: &[f64],
    profiles: &[RadialProfile],
    n: usize,
    drop: usize,
    couple: f64,
) -> (f64, f64) {
    let nv = n as f64 * ball_volume::<f64>(n);
    // upper limit: min over ball slots of r_j/|c_j|; Gaussian decay beyond
    let mut r_hi = f64::INFINITY;
    let mut gauss_rate = 0.0f64; // Σ c_j²/t_j
    let mut breaks = vec![];
    for (j, p) in profiles.iter().enumerate() {
        if coefs[j] == 0.0 {
            continue;
        }
        match p {
            RadialProfile::Ball { .. } => {
                let r = p.decay_radius(n) / coefs[j];
                r_hi = r_hi.min(r);
            }
            RadialProfile::Gaussian { t } => {
                gauss_rate += coefs[j] * coefs[j] / t;
            }
        }
    }
    if r_hi.is_infinite() {
        if gauss_rate <= 0.0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let mut r = (45.0 / (PI * gauss_rate)).sqrt();
        for _ in 0..4 {
            let ln_r = r.max(1.0).ln();
            r = ((45.0 + (n as f64) * ln_r) / (PI * gauss_rate)).sqrt();
        }
        r_hi = r;
    }
    let mut r_lo = 0.0f64;
    if couple > 0.0 {
        r_lo = (PI * couple / 45.0).sqrt().min(r_hi * 0.5);
        breaks.push(r_lo);
    }
    if r_lo >= r_hi {
        return (0.0, 1e-300);
    }
    breaks.push(r_lo);
    breaks.push(r_hi);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let nu = (n - 1 - drop) as i32;
    let mut f = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let mut acc = r.powi(nu);
        for (j, p) in profiles.iter().enumerate() {
            if coefs[j] == 0.0 {
                continue;
            }
            let z = coefs[j] * r;
            acc *= match p {
                RadialProfile::Gaussian { t } => (-PI * z * z / t).exp(),
                RadialProfile::Ball { .. } => {
                    let rb = p.decay_radius(n);
                    if z < rb {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if acc == 0.0 {
                return 0.0;
            }
        }
        if couple > 0.0 {
            acc *= (-PI * couple / (r * r)).exp();
        }
        acc
    };
    let (v, e) = integrate_with_breaks(&mut f, &breaks, 1e-12);
    (nv * v, nv * (e * 10.0 + 1e-15 * v.abs()))
}

/// Plain Monte Carlo for `∫ ρ(xBᵀ) dx`, `m ≥ 2` with ball slots: Gaussian
/// proposal with covariance shaped by the slot scales.
fn mc_transform_integral(
    bf: &Mat<f64>,
    profiles: &[RadialProfile],
    n: usize,
) -> Result<TruncatedValue> {
    let m = bf.cols();
    let q = weighted_gram(bf, profiles);
    let det = q.det();
    if det <= 0.0 {
        return Err(Error::RankDeficient);
    }
    // proposal density q(x) = det(Q)^{n/2} e^{−π Tr(xQxᵀ)}; rows of x are
    // i.i.d. N(0, (2π Q)⁻¹)
    let cov = q.scale(&(2.0 * PI)).inverse()?;
    let chol = cov.cholesky()?;
    let mut rng = crate::ensembles::stream_rng(0x7a_55_11, 7);
    use rand::Rng;
    let samples = 1 << 17;
    let mut sum = 0.0f64;
    let mut sumsq = 0.0f64;
    let norm = det.powf(n as f64 / 2.0);
    for _ in 0..samples {
        // x: n×m with rows z·chol
        let mut x = Mat::<f64>::zeros(n, m);
        for r in 0..n {
            let z: Vec<f64> = (0..m)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    (-2.0 * u1.ln()).sqrt() * u2.cos()
                })
                .collect();
            for c in 0..m {
                let mut acc = 0.0;
                for i in 0..=c {
                    acc += z[i] * chol.at(i, c);
                }
                *x.at_mut(r, c) = acc;
            }
        }
        // ρ(xBᵀ) / q(x)
        let mut rho_val = 1.0f64;
        for (j, p) in profiles.iter().enumerate() {
            let mut norm2 = 0.0;
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..m {
                    acc += bf.at(j, c) * x.at(r, c);
                }
                norm2 += acc * acc;
            }
            rho_val *= p.eval(norm2, n);
            if rho_val == 0.0 {
                break;
            }
        }
        let w = if rho_val == 0.0 {
            0.0
        } else {
            let mut tr = 0.0;
            for r in 0..n {
                for i in 0..m {
                    for j in 0..m {
                        tr += x.at(r, i) * q.at(i, j) * x.at(r, j);
                    }
                }
            }
            rho_val * (PI * tr).exp() / norm
        };
        sum += w;
        sumsq += w * w;
    }
    let mean = sum / samples as f64;
    let var = ((sumsq - sum * sum / samples as f64) / (samples as f64 - 1.0)).max(0.0);
    let stderr = (var / samples as f64).sqrt();
    Ok(TruncatedValue {
        value: mean,
        tail_bound: 3.0 * stderr,
        cutoff: samples as i64,
        heuristic: true,
    })
}

// ---------------------------------------------------------------------------
// The primal-only (Rogers) right-hand side
// ---------------------------------------------------------------------------

/// `Σ_{m=1}^{k} Σ_{B ∈ A_{k,m}, |entries| ≤ h} ∫ρ(xBᵀ)dx + ρ(0)`, with the
/// height-truncation tail estimated by an `h → 2h` doubling.
pub fn rogers_rhs(
    profiles: &[RadialProfile],
    n: usize,
    h: i64,
) -> Result<TruncatedValue> {
    let k = profiles.len();
    if k >= n {
        return Err(Error::domain("rogers_rhs needs k < n"));
    }
    let sum_at = |height: i64| -> Result<(f64, f64)> {
        let mut acc = 0.0f64;
        let mut quad_tails = 0.0f64;
        for m in 1..=k {
            for b in intlin::enumerate_a(k, m, height) {
                let tv = transform_integral(&b, profiles, n)?;
                acc += tv.value;
                quad_tails += tv.tail_bound;
            }
        }
        Ok((acc, quad_tails))
    };
    let (s1, t1) = sum_at(h)?;
    let (s2, _) = sum_at(2 * h)?;
    let rho0: f64 = profiles.iter().map(|p| p.at_origin()).product();
    Ok(TruncatedValue {
        value: s2 + rho0,
        tail_bound: (s2 - s1).max(0.0) + t1,
        cutoff: h,
        heuristic: true,
    })
}

// ---------------------------------------------------------------------------
// η_β integrals
// ---------------------------------------------------------------------------

/// Evaluation strategy for [`eta_integral`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMethod {
    /// Closed form / quadrature / QMC as the shape dictates.
    Auto,
    /// Force the Wishart QMC path (m₁ ≥ 1, Gaussian slots).
    Qmc,
}

/// `∫_{S(β)} ρ(x·B₁ᵀ, y·B₂ᵀ) dη_β(x, y)`.
///
/// Gaussian slots reduce to `det(Q₂)^{−(n−m₁)/2}` times an integral over
/// positive-definite `m₁×m₁` matrices `S`:
/// `(π^{nm₁/2}/Γ_{m₁}(n/2)) ∫ e^{−πTr(Q₁S)} e^{−πTr(βQ₂βᵀS⁻¹)}
///  det(S)^{(n−m₂−m₁−1)/2} dS`,
/// evaluated in closed form (β = 0), by radial quadrature (m₁ = 1), or by
/// Wishart-importance QMC (m₁ ≥ 2). Ball slots are supported at m₁ = 1 for
/// matrices `B₂` with one nonzero entry per row via the slice formula.
pub fn eta_integral(
    beta: &IntMat,
    b1: &IntMat,
    b2: &IntMat,
    rho: &TestFunction,
    n: usize,
    method: EtaMethod,
) -> Result<TruncatedValue> {
    let (k1, m1) = (b1.rows(), b1.cols());
    let (k2, m2) = (b2.rows(), b2.cols());
    if rho.k1() != k1 || rho.k2() != k2 {
        return Err(Error::domain("slot counts must match B₁, B₂"));
    }
    if beta.rows() != m1 || beta.cols() != m2 {
        return Err(Error::domain("β must be m₁×m₂"));
    }
    if m1 == 0 || m2 == 0 || m1 + m2 >= n {
        return Err(Error::domain("eta_integral needs 1 ≤ m₁, m₂, m₁+m₂ < n"));
    }
    let b1f = b1.to_real::<f64>();
    let b2f = b2.to_real::<f64>();
    // zero rows hitting origin-excluded slots kill the term
    for (j, p) in rho.primal.iter().enumerate() {
        if (0..m1).all(|c| *b1f.at(j, c) == 0.0) && p.at_origin() == 0.0 {
            return Ok(TruncatedValue::exact(0.0));
        }
    }
    for (j, p) in rho.dual.iter().enumerate() {
        if (0..m2).all(|c| *b2f.at(j, c) == 0.0) && p.at_origin() == 0.0 {
            return Ok(TruncatedValue::exact(0.0));
        }
    }
    let all_gauss = rho
        .primal
        .iter()
        .chain(rho.dual.iter())
        .all(|p| matches!(p, RadialProfile::Gaussian { .. }));
    if all_gauss {
        let q1 = weighted_gram(&b1f, &rho.primal);
        let q2 = weighted_gram(&b2f, &rho.dual);
        let detq2 = q2.det();
        if detq2 <= 0.0 || q1.det() <= 0.0 {
            return Err(Error::RankDeficient);
        }
        let front = detq2.powf(-((n - m1) as f64) / 2.0);
        // coupling matrix M = β Q₂ βᵀ
        let betaf = beta.to_real::<f64>();
        let m = betaf.mul(&q2).mul(&betaf.transpose());
        let coupling = (0..m1).map(|i| *m.at(i, i)).sum::<f64>();
        if method == EtaMethod::Qmc {
            let (v, e) = wishart_qmc(&q1, &m, n, m1, m2)?;
            return Ok(TruncatedValue {
                value: front * v,
                tail_bound: front * e,
                cutoff: 0,
                heuristic: true,
            });
        }
        if coupling == 0.0 {
            // β = 0 factorization: matrix-gamma closed form
            let a = (n - m2) as f64 / 2.0;
            let log_i = ln_gamma_multi::<f64>(m1, a)
                - a * (PI.ln() * m1 as f64 + q1.det().ln())
                + (n as f64 * m1 as f64 / 2.0) * PI.ln()
                - ln_gamma_multi::<f64>(m1, n as f64 / 2.0);
            return Ok(TruncatedValue::exact(front * log_i.exp()));
        }
        if m1 == 1 {
            // radial path
            let q1s = *q1.at(0, 0);
            let nv = 2.0 * PI.powf(n as f64 / 2.0) / libm::tgamma(n as f64 / 2.0);
            let nu = (n - 1 - m2) as i32;
            let c = coupling;
            let mut r_hi = (45.0 / (PI * q1s)).sqrt();
            for _ in 0..4 {
                r_hi = ((45.0 + nu as f64 * r_hi.max(1.0).ln()) / (PI * q1s)).sqrt();
            }
            let r_lo = (PI * c / 45.0).sqrt().min(r_hi * 0.5);
            let mut f = |r: f64| -> f64 {
                if r <= 0.0 {
                    return 0.0;
                }
                r.powi(nu) * (-PI * (q1s * r * r + c / (r * r))).exp()
            };
            let (v, e) = integrate_with_breaks(&mut f, &[r_lo, r_hi], 1e-13);
            return Ok(TruncatedValue {
                value: front * nv * v,
                tail_bound: front * nv * (10.0 * e + 1e-14 * v.abs()),
                cutoff: 0,
                heuristic: false,
            });
        }
        // m₁ ≥ 2, β ≠ 0: Wishart-importance QMC
        let (v, e) = wishart_qmc(&q1, &m, n, m1, m2)?;
        return Ok(TruncatedValue {
            value: front * v,
            tail_bound: front * e,
            cutoff: 0,
            heuristic: true,
        });
    }
    // Ball path: m₁ = 1 and B₂ with at most one nonzero per row.
    eta_ball_slice(beta, &b1f, &b2f, rho, n)
}

/// Slice-formula path: all slots balls, m₁ = 1, each row of B₂ has at most
/// one nonzero entry (so the inner integral factorizes per y-column).
fn eta_ball_slice(
    beta: &IntMat,
    b1f: &Mat<f64>,
    b2f: &Mat<f64>,
    rho: &TestFunction,
    n: usize,
) -> Result<TruncatedValue> {
    let m1 = b1f.cols();
    let m2 = b2f.cols();
    if m1 != 1 {
        return Err(Error::domain(
            "ball-slot eta integrals are implemented for m₁ = 1 only",
        ));
    }
    let all_ball = rho
        .primal
        .iter()
        .chain(rho.dual.iter())
        .all(|p| matches!(p, RadialProfile::Ball { .. }));
    if !all_ball {
        return Err(Error::domain(
            "mixed ball/Gaussian eta integrals are not supported",
        ));
    }
    // effective primal radius: min over slots of r_j/|b_j|
    let mut r_x = f64::INFINITY;
    for (j, p) in rho.primal.iter().enumerate() {
        let c = b1f.at(j, 0).abs();
        if c > 0.0 {
            r_x = r_x.min(p.decay_radius(n) / c);
        }
    }
    if !r_x.is_finite() {
        return Err(Error::domain("primal ball radius unbounded (B₁ = 0)"));
    }
    // effective dual radius per y-column: min over rows J that hit it
    let mut r_y = vec![f64::INFINITY; m2];
    for (j, p) in rho.dual.iter().enumerate() {
        let mut nonzero = 0;
        for c in 0..m2 {
            if b2f.at(j, c).abs() > 0.0 {
                nonzero += 1;
                r_y[c] = r_y[c].min(p.decay_radius(n) / b2f.at(j, c).abs());
            }
        }
        if nonzero > 1 {
            return Err(Error::domain(
                "ball-slot eta integrals need one nonzero per row of B₂",
            ));
        }
    }
    if r_y.iter().any(|r| !r.is_finite()) {
        return Err(Error::domain("a dual column is unconstrained"));
    }
    let betas: Vec<f64> = (0..m2)
        .map(|c| {
            use num_traits::ToPrimitive;
            beta.at(0, c).to_f64().unwrap()
        })
        .collect();
    // lower integration limit: f_c vanishes for r < |β_c|/R_c
    let mut r_lo = 0.0f64;
    let mut breaks = vec![];
    for c in 0..m2 {
        if betas[c].abs() > 0.0 {
            let rc = betas[c].abs() / r_y[c];
            breaks.push(rc);
            r_lo = r_lo.max(rc);
        }
    }
    if r_lo >= r_x {
        return Ok(TruncatedValue::exact(0.0));
    }
    breaks.push(r_lo);
    breaks.push(r_x);
    breaks.retain(|&r| r >= r_lo && r <= r_x);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let nv = n as f64 * ball_volume::<f64>(n);
    let vol_inner = ball_volume::<f64>(n - 1);
    let nu = (n - 1 - m2) as i32;
    let mut f = |r: f64| -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let mut acc = r.powi(nu);
        for c in 0..m2 {
            let rho_c = betas[c].abs() / r;
            let s = r_y[c] * r_y[c] - rho_c * rho_c;
            if s <= 0.0 {
                return 0.0;
            }
            acc *= vol_inner * s.powf((n - 1) as f64 / 2.0);
        }
        acc
    };
    let (v, e) = integrate_with_breaks(&mut f, &breaks, 1e-12);
    Ok(TruncatedValue {
        value: nv * v,
        tail_bound: nv * (10.0 * e + 1e-14 * v.abs()),
        cutoff: 0,
        heuristic: false,
    })
}

/// Halton radical inverse with a Cranley–Patterson shift.
fn halton(index: u64, base: u64, shift: f64) -> f64 {
    let mut f = 1.0f64;
    let mut r = 0.0f64;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    (r + shift).fract()
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// `∫_{S>0} e^{−πTr(Q₁S)} e^{−πTr(M S⁻¹)} det(S)^{(df−m−1)/2} dS` scaled by
/// `π^{nm/2}/Γ_m(n/2)`, via Wishart importance sampling: `S = Σ z_i z_iᵀ`
/// with `df = n−m₂` Gaussian columns, QMC points with Cranley–Patterson
/// shifts; returns (value, 3σ error across shifts).
fn wishart_qmc(q1: &Mat<f64>, m: &Mat<f64>, n: usize, m1: usize, m2: usize) -> Result<(f64, f64)> {
    let df = n - m2;
    if df < m1 + 1 {
        return Err(Error::domain("Wishart path needs n − m₂ ≥ m₁ + 1"));
    }
    let dims = df * m1;
    if dims + 1 > PRIMES.len() {
        return Err(Error::domain("QMC dimension too large"));
    }
    // Σ = (2π Q₁)⁻¹, S = C · W · Cᵀ with W standard Wishart, C = chol(Σ)ᵀ
    let sigma = q1.scale(&(2.0 * PI)).inverse()?;
    let chol_u = sigma.cholesky()?; // Σ = Uᵀ·U
    let a = df as f64 / 2.0;
    let log_z = ln_gamma_multi::<f64>(m1, a) - a * (PI.ln() * m1 as f64 + q1.det().ln());
    let log_front = (n as f64 * m1 as f64 / 2.0) * PI.ln() - ln_gamma_multi::<f64>(m1, n as f64 / 2.0);
    let scale = (log_z + log_front).exp();

    let shifts = 8usize;
    let points_per_shift = 1u64 << 17;
    let mut shift_means = Vec::with_capacity(shifts);
    use rand::Rng;
    for shift_id in 0..shifts {
        let mut rng = crate::ensembles::stream_rng(0xe7a_517, shift_id as u64);
        let shift_vals: Vec<f64> = (0..dims + 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut acc = 0.0f64;
        for idx in 0..points_per_shift {
            // dims uniforms → standard normals via Box–Muller on pairs
            let mut normals = Vec::with_capacity(dims + 1);
            let mut d = 0;
            while normals.len() < dims {
                let u1 = halton(idx + 64, PRIMES[d], shift_vals[d]).max(1e-17);
                let u2 = halton(idx + 64, PRIMES[d + 1], shift_vals[d + 1]);
                let r = (-2.0 * u1.ln()).sqrt();
                normals.push(r * (std::f64::consts::TAU * u2).cos());
                normals.push(r * (std::f64::consts::TAU * u2).sin());
                d += 2;
            }
            normals.truncate(dims);
            // S = Σ_i (Uᵀ z_i)(Uᵀ z_i)ᵀ
            let mut s = Mat::<f64>::zeros(m1, m1);
            for i in 0..df {
                let z = &normals[i * m1..(i + 1) * m1];
                // v = Uᵀ z
                let mut v = vec![0.0f64; m1];
                for (r, vr) in v.iter_mut().enumerate() {
                    for c in 0..=r.min(m1 - 1) {
                        // chol_u is upper: (Uᵀ)[r][c] = U[c][r], c ≤ r
                        *vr += chol_u.at(c, r) * z[c];
                    }
                }
                for r in 0..m1 {
                    for c in 0..m1 {
                        *s.at_mut(r, c) += v[r] * v[c];
                    }
                }
            }
            let sinv = match s.inverse() {
                Ok(i) => i,
                Err(_) => continue, // measure-zero degenerate draw
            };
            let mut tr = 0.0;
            for r in 0..m1 {
                for c in 0..m1 {
                    tr += m.at(r, c) * sinv.at(c, r);
                }
            }
            acc += (-PI * tr).exp();
        }
        shift_means.push(acc / points_per_shift as f64);
    }
    let mean: f64 = shift_means.iter().sum::<f64>() / shifts as f64;
    let var = shift_means
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (shifts as f64 - 1.0)
        / shifts as f64;
    Ok((scale * mean, scale * 3.0 * var.sqrt()))
}

// ---------------------------------------------------------------------------
// The assembled dual right-hand side
// ---------------------------------------------------------------------------

/// Truncation controls for [`dual_rhs`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Truncation {
    /// Height bound for the subspace-representative enumerations.
    pub h: i64,
    /// Determinant cutoff inside `W(β)`.
    pub dmax: i64,
    /// Hard cap on the sup-norm of β (the shell scan stops earlier when
    /// shells stop contributing).
    pub beta_bound: i64,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation {
            h: 4,
            dmax: 600,
            beta_bound: 16,
        }
    }
}

/// One fully-resolved term of the double sum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub m1: usize,
    pub b1: Vec<Vec<i64>>,
    pub m2: usize,
    pub b2: Vec<Vec<i64>>,
    pub beta: Vec<Vec<i64>>,
    pub weight: f64,
    pub integral: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryRecord {
    /// `primal` = the `ρ(x·B₁ᵀ, 0)` family, `dual` = `ρ(0, y·B₂ᵀ)`.
    pub side: String,
    pub m: usize,
    pub b: Vec<Vec<i64>>,
    pub integral: f64,
}

/// Full breakdown of the assembled right-hand side.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhsBreakdown {
    pub total: f64,
    pub tail: f64,
    pub terms: Vec<TermRecord>,
    pub boundary_terms: Vec<BoundaryRecord>,
    pub constant_term: f64,
}

fn mat_rows(m: &IntMat) -> Vec<Vec<i64>> {
    use num_traits::ToPrimitive;
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.at(r, c).to_i64().unwrap()).collect())
        .collect()
}

/// Assembles
/// `Σ_{m₁,B₁,m₂,B₂,β} W(β)·η_β(ρ∘(B₁,B₂)) + boundary terms + ρ(0,0)`.
///
/// The β-sum is scanned over sup-norm shells and stops when a whole shell
/// contributes less than `1e−14` of the running total; the B-sums are
/// truncated at height `h` with an empirical `h → 2h` doubling tail; `W` is
/// truncated at `dmax` with its rigorous tail.
pub fn dual_rhs(rho: &TestFunction, n: usize, trunc: Truncation) -> Result<RhsBreakdown> {
    let (k1, k2) = (rho.k1(), rho.k2());
    if n <= k1 + k2 {
        return Err(Error::domain("dual_rhs needs n > k₁ + k₂"));
    }
    if k1 == 0 || k2 == 0 {
        return Err(Error::domain(
            "dual_rhs needs k₁, k₂ ≥ 1 (use rogers_rhs for one-sided sums)",
        ));
    }
    rho.validate()?;

    let mut terms = Vec::new();
    let mut boundary = Vec::new();
    let mut tail = 0.0f64;

    let double_sum_at = |height: i64, record: bool| -> Result<(f64, Vec<(TermRecord, f64)>)> {
        let mut acc = 0.0f64;
        let mut recs = Vec::new();
        for m1 in 1..=k1 {
            let b1s = intlin::enumerate_a(k1, m1, height);
            for m2 in 1..=k2 {
                let b2s = intlin::enumerate_a(k2, m2, height);
                for b1 in &b1s {
                    for b2 in &b2s {
                        let (s, terms_here) = beta_sum(b1, b2, rho, n, trunc, record)?;
                        acc += s;
                        recs.extend(terms_here);
                    }
                }
            }
        }
        Ok((acc, recs))
    };

    let (s_h, recs) = double_sum_at(trunc.h, true)?;
    for (rec, t) in recs {
        terms.push(rec);
        tail += t;
    }
    // doubling tail for the B-enumeration (only when the height matters)
    let needs_doubling = (1..=k1).any(|m| {
        intlin::enumerate_a(k1, m, trunc.h).len() != intlin::enumerate_a(k1, m, 2 * trunc.h).len()
    }) || (1..=k2).any(|m| {
        intlin::enumerate_a(k2, m, trunc.h).len() != intlin::enumerate_a(k2, m, 2 * trunc.h).len()
    });
    if needs_doubling {
        let (s_2h, _) = double_sum_at(2 * trunc.h, false)?;
        tail += (s_2h - s_h).abs();
    }

    // boundary terms: Σ ∫ρ(xB₁ᵀ, 0) dx and Σ ∫ρ(0, yB₂ᵀ) dy
    let rho_dual_origin: f64 = rho.dual.iter().map(|p| p.at_origin()).product();
    let rho_primal_origin: f64 = rho.primal.iter().map(|p| p.at_origin()).product();
    let mut boundary_total = 0.0f64;
    if rho_dual_origin != 0.0 {
        for m1 in 1..=k1 {
            for b1 in intlin::enumerate_a(k1, m1, trunc.h) {
                let tv = transform_integral(&b1, &rho.primal, n)?;
                let v = tv.value * rho_dual_origin;
                boundary_total += v;
                tail += tv.tail_bound * rho_dual_origin;
                boundary.push(BoundaryRecord {
                    side: "primal".into(),
                    m: m1,
                    b: mat_rows(&b1),
                    integral: v,
                });
            }
        }
    }
    if rho_primal_origin != 0.0 {
        for m2 in 1..=k2 {
            for b2 in intlin::enumerate_a(k2, m2, trunc.h) {
                let tv = transform_integral(&b2, &rho.dual, n)?;
                let v = tv.value * rho_primal_origin;
                boundary_total += v;
                tail += tv.tail_bound * rho_primal_origin;
                boundary.push(BoundaryRecord {
                    side: "dual".into(),
                    m: m2,
                    b: mat_rows(&b2),
                    integral: v,
                });
            }
        }
    }
    let constant_term = rho.at_origin();
    Ok(RhsBreakdown {
        total: s_h + boundary_total + constant_term,
        tail,
        terms,
        boundary_terms: boundary,
        constant_term,
    })
}

/// The β-shell scan for one `(B₁, B₂)` pair: returns the summed value and,
/// when recording, per-term records with their tail contributions.
fn beta_sum(
    b1: &IntMat,
    b2: &IntMat,
    rho: &TestFunction,
    n: usize,
    trunc: Truncation,
    record: bool,
) -> Result<(f64, Vec<(TermRecord, f64)>)> {
    let (m1, m2) = (b1.cols(), b2.cols());
    let mut total = 0.0f64;
    let mut recs = Vec::new();
    let mut shell = 0i64;
    loop {
        let mut shell_sum = 0.0f64;
        for beta in beta_shell(m1, m2, shell) {
            let w = weights::weight_w(&beta, n as u32, trunc.dmax)?;
            let eta = eta_integral(&beta, b1, b2, rho, n, EtaMethod::Auto)?;
            let term = w.value * eta.value;
            let term_tail = w.value * eta.tail_bound
                + w.tail_bound * (eta.value.abs() + eta.tail_bound);
            shell_sum += term;
            total += term;
            if record {
                recs.push((
                    TermRecord {
                        m1,
                        b1: mat_rows(b1),
                        m2,
                        b2: mat_rows(b2),
                        beta: mat_rows(&beta),
                        weight: w.value,
                        integral: eta.value,
                    },
                    term_tail,
                ));
            }
        }
        if shell >= 1 && shell_sum.abs() < 1e-14 * total.abs().max(1e-300) {
            break;
        }
        if shell >= trunc.beta_bound {
            break;
        }
        shell += 1;
    }
    Ok((total, recs))
}

/// All integer m₁×m₂ matrices with sup-norm exactly `shell`.
fn beta_shell(m1: usize, m2: usize, shell: i64) -> Vec<IntMat> {
    let len = m1 * m2;
    let mut out = Vec::new();
    let mut entries = vec![-shell; len];
    loop {
        if entries.iter().any(|e| e.abs() == shell) {
            out.push(IntMat::from_i64(m1, m2, &entries));
        }
        let mut i = 0;
        loop {
            if i == len {
                return out;
            }
            entries[i] += 1;
            if entries[i] <= shell {
                break;
            }
            entries[i] = -shell;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

/// All partitions of `{0, …, k−1}`; `𝒫(0) = {∅}`.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    if k == 0 {
        return vec![vec![]];
    }
    // restricted growth strings
    let mut out = Vec::new();
    let mut rgs = vec![0usize; k];
    loop {
        let nblocks = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nblocks];
        for (i, &b) in rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        out.push(blocks);
        // next RGS
        let mut i = k - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for r in rgs.iter_mut().skip(i + 1) {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// The limiting joint moment
/// `(Σ_{P∈𝒫(k₁)} 2^{k₁−#P} ∏_{B∈P} V_{min B}) · (same in W)`.
pub fn moment_rhs(v: &[f64], w: &[f64]) -> Result<f64> {
    for sorted in [v, w] {
        for pair in sorted.windows(2) {
            if pair[0] > pair[1] {
                return Err(Error::domain("moment thresholds must be nondecreasing"));
            }
        }
    }
    let side = |vals: &[f64]| -> f64 {
        let k = vals.len();
        set_partitions(k)
            .iter()
            .map(|p| {
                let mut prod = 2f64.powi((k - p.len()) as i32);
                for block in p {
                    prod *= vals[*block.iter().min().unwrap()];
                }
                prod
            })
            .sum()
    };
    Ok(side(v) * side(w))
}

/// The asymptotic constant
/// `C(n; m₁, m₂) = [∏_{j=n−m₁+1}^{n}(j𝔙_j)/∏_{j=n−m₁−m₂+1}^{n−m₂}(j𝔙_j)]
///  ·𝔙_{n−m₁}^{m₂}·𝔙_{n−m₂}^{m₁}`.
pub fn c_const(n: usize, m1: usize, m2: usize) -> Result<f64> {
    if m1 + m2 >= n || m1 == 0 || m2 == 0 {
        return Err(Error::domain("c_const needs m₁, m₂ ≥ 1, m₁+m₂ < n"));
    }
    let jv = |j: usize| j as f64 * ball_volume::<f64>(j);
    let mut num = 1.0;
    for j in n - m1 + 1..=n {
        num *= jv(j);
    }
    let mut den = 1.0;
    for j in n - m1 - m2 + 1..=n - m2 {
        den *= jv(j);
    }
    Ok(num / den
        * ball_volume::<f64>(n - m1).powi(m2 as i32)
        * ball_volume::<f64>(n - m2).powi(m1 as i32))
}
