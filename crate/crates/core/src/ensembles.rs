//! Generators of (approximately) Haar-distributed covolume-one lattices.
//!
//! Three ensembles are supported:
//!
//! * `X2Exact` — i.i.d. exact samples at `n = 2` via the classical
//!   fundamental domain, no Markov chain;
//! * `Hecke` — the rescaled index-`p` sublattices of `ℤⁿ`, either the full
//!   set (one per point of `P^{n−1}(F_p)`) or uniform draws from it; these
//!   equidistribute toward Haar measure as `p → ∞`, which is monitored
//!   empirically across increasing `p`, never assumed at fixed `p`;
//! * `Fixed` — an explicit list of bases.
//!
//! All members are generated from counter-based RNG streams keyed by
//! `(seed, index)`, so parallel materialization is order-independent and
//! reproducible.

use crate::error::Error;
use crate::geom::{lll_int, Lattice};
use crate::mat::{IntMat, Mat};
use num_bigint::BigInt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

type Result<T> = std::result::Result<T, Error>;

// ---------------------------------------------------------------------------
// Specification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeckeMode {
    Full,
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleSpec {
    X2Exact {
        samples: u64,
        seed: u64,
    },
    Hecke {
        n: usize,
        p: u64,
        mode: HeckeMode,
    },
    /// Bases given row by row (each inner vec is one basis matrix in
    /// row-major order).
    Fixed {
        n: usize,
        bases: Vec<Vec<f64>>,
    },
}

impl EnsembleSpec {
    pub fn dim(&self) -> usize {
        match self {
            EnsembleSpec::X2Exact { .. } => 2,
            EnsembleSpec::Hecke { n, .. } => *n,
            EnsembleSpec::Fixed { n, .. } => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnsembleSpec::X2Exact { samples, .. } => {
                if *samples == 0 {
                    return Err(Error::config("X2Exact needs samples ≥ 1"));
                }
            }
            EnsembleSpec::Hecke { n, p, mode } => {
                if *n < 2 {
                    return Err(Error::config("Hecke ensemble needs n ≥ 2"));
                }
                if !is_prime(*p) {
                    return Err(Error::domain(format!("p = {p} is not prime")));
                }
                if let HeckeMode::Sampled { count, .. } = mode {
                    if *count == 0 {
                        return Err(Error::config("sampled mode needs count ≥ 1"));
                    }
                }
                if matches!(mode, HeckeMode::Full) {
                    let _ = hecke_full_count(*n, *p)?;
                }
            }
            EnsembleSpec::Fixed { n, bases } => {
                if bases.is_empty() {
                    return Err(Error::config("Fixed ensemble needs at least one basis"));
                }
                for b in bases {
                    if b.len() != n * n {
                        return Err(Error::config("Fixed basis has wrong entry count"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn member_count(&self) -> Result<u64> {
        match self {
            EnsembleSpec::X2Exact { samples, .. } => Ok(*samples),
            EnsembleSpec::Hecke { n, p, mode } => match mode {
                HeckeMode::Full => hecke_full_count(*n, *p),
                HeckeMode::Sampled { count, .. } => Ok(*count),
            },
            EnsembleSpec::Fixed { bases, .. } => Ok(bases.len() as u64),
        }
    }

    /// Materializes member `index`; stateless, any order, any worker.
    pub fn member(&self, index: u64) -> Result<Lattice<f64>> {
        match self {
            EnsembleSpec::X2Exact { seed, .. } => {
                let mut rng = stream_rng(*seed, index);
                Ok(sample_x2(&mut rng))
            }
            EnsembleSpec::Hecke { n, p, mode } => {
                let point = match mode {
                    HeckeMode::Full => hecke_point_by_index(*n, *p, index),
                    HeckeMode::Sampled { seed, .. } => {
                        let mut rng = stream_rng(*seed, index);
                        hecke_random_point(*n, *p, &mut rng)
                    }
                };
                hecke_lattice(*n, *p, &point)
            }
            EnsembleSpec::Fixed { n, bases } => {
                let b = &bases[index as usize];
                Lattice::new(Mat::from_f64(*n, *n, b))
            }
        }
    }
}

/// `(pⁿ − 1)/(p − 1)` guarded against overflow.
fn hecke_full_count(n: usize, p: u64) -> Result<u64> {
    let mut acc: u128 = 0;
    let mut pw: u128 = 1;
    for _ in 0..n {
        acc += pw;
        pw = pw
            .checked_mul(p as u128)
            .ok_or_else(|| Error::config("full Hecke ensemble too large to index"))?;
    }
    u64::try_from(acc).map_err(|_| Error::config("full Hecke ensemble too large to index"))
}

/// Counter-based stream: one independent ChaCha stream per (seed, index).
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng
}

// ---------------------------------------------------------------------------
// Exact sampler on X₂
// ---------------------------------------------------------------------------

/// One exact Haar sample at `n = 2`.
///
/// Coordinates `(x, y)` are drawn from the density `(3/π)·dx dy/y²` on the
/// fundamental domain `{|x| ≤ 1/2, x² + y² ≥ 1}`: `x` by rejection against
/// the marginal `∝ (1−x²)^{−1/2}` (envelope constant `2/√3`), then
/// `y = √(1−x²)/u` with `u` uniform in `(0, 1]` (exact inverse CDF).
/// Basis columns: `(y^{−1/2}, 0)ᵀ` and `(x·y^{−1/2}, y^{1/2})ᵀ`.
pub fn sample_x2(rng: &mut impl Rng) -> Lattice<f64> {
    let x = loop {
        let cand: f64 = rng.gen_range(-0.5..=0.5);
        let density = (1.0 - cand * cand).powf(-0.5);
        let envelope = 2.0 / 3.0f64.sqrt();
        if rng.gen_range(0.0..envelope) < density {
            break cand;
        }
    };
    let u: f64 = loop {
        let cand: f64 = rng.gen_range(0.0..1.0);
        if cand > 0.0 {
            break cand;
        }
    };
    let y = (1.0 - x * x).sqrt() / u;
    let sy = y.sqrt();
    let basis = Mat::from_f64(2, 2, &[1.0 / sy, x / sy, 0.0, sy]);
    Lattice::new(basis).expect("X₂ basis is never singular")
}

/// Iwasawa coordinates of an X₂ sample (used by distribution tests).
pub fn x2_coordinates(l: &Lattice<f64>) -> (f64, f64) {
    let b = l.basis();
    let y = b.at(1, 1) * b.at(1, 1);
    let x = b.at(0, 1) * b.at(1, 1);
    (x, y)
}

// ---------------------------------------------------------------------------
// Hecke points
// ---------------------------------------------------------------------------

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p % 2 == 0 {
        return p == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Canonical representative of the `index`-th point of `P^{n−1}(F_p)`:
/// leading coordinate 1 at position `j`, preceded by zeros; points are
/// ordered by `j` and then lexicographically in the trailing digits.
fn hecke_point_by_index(n: usize, p: u64, index: u64) -> Vec<u64> {
    let mut idx = index as u128;
    let pu = p as u128;
    for j in 0..n {
        let block: u128 = pu.pow((n - 1 - j) as u32);
        if idx < block {
            let mut point = vec![0u64; n];
            point[j] = 1;
            let mut rem = idx;
            for c in (j + 1..n).rev() {
                point[c] = (rem % pu) as u64;
                rem /= pu;
            }
            return point;
        }
        idx -= block;
    }
    panic!("hecke point index out of range");
}

/// Uniform random point of `P^{n−1}(F_p)`: draw a nonzero vector and
/// normalize the first nonzero coordinate to 1.
fn hecke_random_point(n: usize, p: u64, rng: &mut impl Rng) -> Vec<u64> {
    loop {
        let v: Vec<u64> = (0..n).map(|_| rng.gen_range(0..p)).collect();
        if let Some(lead) = v.iter().position(|&c| c != 0) {
            let inv = mod_inverse(v[lead], p);
            return v.iter().map(|&c| mulmod(c, inv, p)).collect();
        }
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    // p prime: a^{p−2} mod p
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = mulmod(result, base, p);
        }
        base = mulmod(base, base, p);
        e >>= 1;
    }
    result
}

/// The rescaled kernel lattice `p^{−1/n}·{v ∈ ℤⁿ : a·v ≡ 0 mod p}`,
/// LLL-reduced exactly before scaling so the floating basis is benign.
pub fn hecke_lattice(n: usize, p: u64, point: &[u64]) -> Result<Lattice<f64>> {
    let pivot = point
        .iter()
        .position(|&c| c % p != 0)
        .ok_or_else(|| Error::domain("projective point is zero"))?;
    let inv = mod_inverse(point[pivot] % p, p);
    let mut cols: Vec<Vec<i64>> = Vec::with_capacity(n);
    let mut c0 = vec![0i64; n];
    c0[pivot] = p as i64;
    cols.push(c0);
    for j in 0..n {
        if j == pivot {
            continue;
        }
        let cj = mulmod(point[j] % p, inv, p);
        let mut col = vec![0i64; n];
        col[j] = 1;
        col[pivot] = -(cj as i64);
        cols.push(col);
    }
    let red = lll_int(&cols, 0.99);
    let scale = (p as f64).powf(-1.0 / n as f64);
    let basis = Mat::from_fn(n, n, |r, c| red[c][r] as f64 * scale);
    Lattice::new(basis)
}

// ---------------------------------------------------------------------------
// Random unimodular matrices and generic random lattices (test plumbing)
// ---------------------------------------------------------------------------

/// Product of `steps` random elementary shears and signed permutations;
/// determinant ±1 exactly.
pub fn random_unimodular(rng: &mut impl Rng, n: usize, steps: usize) -> IntMat {
    assert!(steps >= 1);
    let mut g = IntMat::identity(n);
    for _ in 0..steps {
        if n >= 2 && rng.gen_bool(0.7) {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            if i == j {
                j = (j + 1) % n;
            }
            let k = BigInt::from(rng.gen_range(-3..=3i64));
            // row_i += k · row_j
            for c in 0..n {
                let t = g.at(j, c).clone() * &k;
                *g.at_mut(i, c) += t;
            }
        } else {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            g.swap_rows(i, j);
            if rng.gen_bool(0.5) {
                for c in 0..n {
                    let t = -g.at(i, c).clone();
                    *g.at_mut(i, c) = t;
                }
            }
        }
    }
    g
}

/// Random covolume-one lattice: Gaussian basis entries normalized to
/// determinant one. Test plumbing, not a Haar sampler.
pub fn random_lattice(rng: &mut impl Rng, n: usize) -> Lattice<f64> {
    loop {
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..(n * n).div_ceil(2) {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            data.push(r * u2.cos());
            data.push(r * u2.sin());
        }
        data.truncate(n * n);
        let b: Mat<f64> = Mat::from_f64(n, n, &data);
        let det = b.det();
        if det.abs() < 1e-3 {
            continue;
        }
        let s = det.abs().powf(1.0 / n as f64) * det.signum();
        let b = b.map(|x| x / s);
        if let Ok(l) = Lattice::new(b) {
            return l;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dual, theta_sum};
    use crate::intlin;

    #[test]
    fn x2_domain_and_determinism() {
        for i in 0..200 {
            let mut rng = stream_rng(42, i);
            let l = sample_x2(&mut rng);
            let (x, y) = x2_coordinates(&l);
            assert!(x.abs() <= 0.5 + 1e-12);
            assert!(x * x + y * y >= 1.0 - 1e-12);
            assert!((l.covolume() - 1.0).abs() < 1e-12);
        }
        let mut r1 = stream_rng(42, 7);
        let mut r2 = stream_rng(42, 7);
        let a = sample_x2(&mut r1);
        let b = sample_x2(&mut r2);
        assert_eq!(a.basis().at(0, 0).to_bits(), b.basis().at(0, 0).to_bits());
        // different indices give different lattices
        let mut r3 = stream_rng(42, 8);
        let c = sample_x2(&mut r3);
        assert_ne!(a.basis().at(0, 0).to_bits(), c.basis().at(0, 0).to_bits());
    }

    #[test]
    fn x2_ks_test_against_marginal() {
        // KS test of the x marginal against CDF (3/π)(arcsin x + π/6),
        // significance 0.001 (critical 1.949/√N).
        let n = 40_000u64;
        let mut xs: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = stream_rng(1234, i);
                x2_coordinates(&sample_x2(&mut rng)).0
            })
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let cdf = |x: f64| (3.0 / std::f64::consts::PI) * (x.asin() + std::f64::consts::PI / 6.0);
        let mut d = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n as f64).abs());
            d = d.max(((i + 1) as f64 / n as f64 - f).abs());
        }
        let critical = 1.949 / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} ≥ {critical}");
    }

    #[test]
    fn hecke_counts_and_covolume() {
        let spec = EnsembleSpec::Hecke {
            n: 2,
            p: 3,
            mode: HeckeMode::Full,
        };
        assert_eq!(spec.member_count().unwrap(), 4);
        let spec = EnsembleSpec::Hecke {
            n: 3,
            p: 2,
            mode: HeckeMode::Full,
        };
        assert_eq!(spec.member_count().unwrap(), 7);
        for i in 0..7 {
            let l = spec.member(i).unwrap();
            assert!((l.covolume() - 1.0).abs() < 1e-12);
            let d = dual(&l).unwrap();
            assert!((d.covolume() - 1.0).abs() < 1e-9);
        }
        // all projective points distinct; theta collapses onto isometry
        // classes (c ~ −c and c ~ c⁻¹), which gives 3 classes at p = 7
        let mut points = std::collections::HashSet::new();
        for i in 0..8 {
            points.insert(hecke_point_by_index(2, 7, i));
        }
        assert_eq!(points.len(), 8);
        let spec = EnsembleSpec::Hecke {
            n: 2,
            p: 7,
            mode: HeckeMode::Full,
        };
        let mut thetas: Vec<f64> = (0..spec.member_count().unwrap())
            .map(|i| theta_sum(&spec.member(i).unwrap(), 0.37))
            .collect();
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        assert_eq!(thetas.len(), 3);
    }

    #[test]
    fn hecke_rejects_composite_p() {
        let spec = EnsembleSpec::Hecke {
            n: 3,
            p: 15,
            mode: HeckeMode::Full,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn random_unimodular_det_and_lattice_equality() {
        use num_traits::{One, Signed};
        let mut rng = stream_rng(5, 0);
        for _ in 0..50 {
            let g = random_unimodular(&mut rng, 3, 12);
            let det = crate::intlin::rat_det(&g.to_rat()).to_integer();
            assert!(det.abs().is_one());
            // B and B·γ generate the same lattice: equal Hermite forms
            let b = IntMat::from_i64(3, 3, &[2, 1, 0, 0, 3, 1, 0, 0, 5]);
            let bg = b.mul(&g);
            let (h1, _) = intlin::coset_canonical_w(&b.transpose()).unwrap();
            let (h2, _) = intlin::coset_canonical_w(&bg.transpose()).unwrap();
            // the HNF of the ROW lattice of Bᵀ (= column lattice of B)
            // must agree
            assert_eq!(h1.matrix(), h2.matrix());
        }
    }

    #[test]
    fn siegel_sum_invariant_under_basis_change() {
        let mut rng = stream_rng(6, 0);
        let l = random_lattice(&mut rng, 3);
        let g = random_unimodular(&mut rng, 3, 10);
        let gf = g.to_real::<f64>();
        let basis2 = l.basis().mul(&gf);
        let l2 = Lattice::new(basis2).unwrap();
        let t1 = theta_sum(&l, 1.0);
        let t2 = theta_sum(&l2, 1.0);
        assert!((t1 - t2).abs() <= 1e-12 * t1, "{t1} vs {t2}");
    }

    #[test]
    fn x2_siegel_formula_monte_carlo() {
        // E[#{v ∈ L : 0 < ‖v‖ < r}] = πr² by the mean value formula at
        // n = 2 (ball indicator); 10⁵ samples, 3σ.
        let n = 100_000u64;
        let r = 0.8f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let mut rng = stream_rng(777, i);
            let l = sample_x2(&mut rng);
            let count = crate::geom::short_vectors(&l, r)
                .unwrap()
                .iter()
                .filter(|sv| sv.norm2 < r * r)
                .count() as f64;
            sum += count;
            sumsq += count * count;
        }
        let mean = sum / n as f64;
        let var = (sumsq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        let expect = std::f64::consts::PI * r * r;
        assert!(
            (mean - expect).abs() < 3.0 * se,
            "mean {mean} vs {expect} (se {se})"
        );
    }
}
