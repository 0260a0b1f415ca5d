//! Left-hand-side evaluators: Siegel transforms, multiple sums over a
//! lattice and its dual, primitive-tuple sums, pairing-constrained sums,
//! counting statistics, and deterministic ensemble averaging.
//!
//! Pairing and primitivity constraints are always decided on exact integer
//! coordinates: enumeration returns coordinates alongside vectors, and for
//! `x ∈ L`, `y ∈ L*` the pairing `xᵀy` equals the integer matrix `UᵀW` of
//! the coordinate tuples. Floating point never touches a constraint.

use crate::ensembles::EnsembleSpec;
use crate::error::Error;
use crate::geom::{dual, gaussian_radius, short_vectors, Lattice, ShortVector};
use crate::intlin;
use crate::mat::{IntMat, Mat};
use crate::special::ball_volume;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

type Result<T> = std::result::Result<T, Error>;

/// Points this close (relatively) to a ball boundary trigger a recorded
/// warning; the open-ball rule still decides the count.
const BOUNDARY_EPS: f64 = 1e-12;

static BOUNDARY_WARNINGS: AtomicU64 = AtomicU64::new(0);

/// Number of ball-boundary near-misses recorded since process start.
pub fn boundary_warning_count() -> u64 {
    BOUNDARY_WARNINGS.load(Ordering::Relaxed)
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// Radial profile of one slot: a centered Gaussian `v ↦ exp(−π‖v‖²/t)` or
/// the indicator of the open ball of a given volume (optionally vanishing
/// at the origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialProfile {
    Gaussian { t: f64 },
    Ball { volume: f64, exclude_origin: bool },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Gaussian { t } if *t > 0.0 => Ok(()),
            RadialProfile::Ball { volume, .. } if *volume > 0.0 => Ok(()),
            _ => Err(Error::config("radial profile needs a positive scale")),
        }
    }

    /// Value at a vector of squared norm `norm2` (dimension `n`).
    pub fn eval(&self, norm2: f64, n: usize) -> f64 {
        match self {
            RadialProfile::Gaussian { t } => (-std::f64::consts::PI * norm2 / t).exp(),
            RadialProfile::Ball { .. } => {
                let r2 = self.ball_radius2(n);
                if (norm2 - r2).abs() <= BOUNDARY_EPS * r2.max(1.0) {
                    BOUNDARY_WARNINGS.fetch_add(1, Ordering::Relaxed);
                }
                if norm2 > 0.0 && norm2 < r2 {
                    1.0
                } else if norm2 == 0.0 {
                    self.at_origin()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn at_origin(&self) -> f64 {
        match self {
            RadialProfile::Gaussian { .. } => 1.0,
            RadialProfile::Ball { exclude_origin, .. } => {
                if *exclude_origin {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// `∫_{ℝⁿ} ρ` — `t^{n/2}` for the Gaussian, the volume for the ball.
    pub fn integral(&self, n: usize) -> f64 {
        match self {
            RadialProfile::Gaussian { t } => t.powf(n as f64 / 2.0),
            RadialProfile::Ball { volume, .. } => *volume,
        }
    }

    fn ball_radius2(&self, n: usize) -> f64 {
        match self {
            RadialProfile::Ball { volume, .. } => {
                (volume / ball_volume::<f64>(n)).powf(2.0 / n as f64)
            }
            _ => unreachable!(),
        }
    }

    /// Enumeration radius for sums of this profile over `l`, with absolute
    /// truncation error below ~1e−13.
    pub fn trunc_radius(&self, l: &Lattice<f64>) -> f64 {
        match self {
            RadialProfile::Gaussian { t } => gaussian_radius(l, *t, 1e-14),
            RadialProfile::Ball { .. } => self.ball_radius2(l.dim()).sqrt(),
        }
    }

    /// Support/decay radius independent of any lattice: `‖v‖ > r` implies
    /// `ρ(v) ≤ 1e−18` (balls: `ρ = 0`).
    pub fn decay_radius(&self, n: usize) -> f64 {
        match self {
            RadialProfile::Gaussian { t } => (t * 18.0 * std::f64::consts::LN_10
                / std::f64::consts::PI)
                .sqrt(),
            RadialProfile::Ball { .. } => self.ball_radius2(n).sqrt(),
        }
    }
}

/// Product-form test function with `k₁` primal and `k₂` dual slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub primal: Vec<RadialProfile>,
    pub dual: Vec<RadialProfile>,
}

impl TestFunction {
    pub fn validate(&self) -> Result<()> {
        for p in self.primal.iter().chain(self.dual.iter()) {
            p.validate()?;
        }
        Ok(())
    }

    pub fn k1(&self) -> usize {
        self.primal.len()
    }

    pub fn k2(&self) -> usize {
        self.dual.len()
    }

    /// `ρ(0, 0)` — the product of all slot values at the origin.
    pub fn at_origin(&self) -> f64 {
        self.primal
            .iter()
            .chain(self.dual.iter())
            .map(|p| p.at_origin())
            .product()
    }
}

// ---------------------------------------------------------------------------
// Siegel transforms and product sums
// ---------------------------------------------------------------------------

/// `Σ_{v∈L} f(v)` including `v = 0`. Gaussian tails are truncated with a
/// certified remainder; ball indicators are exact counts.
pub fn siegel_sum(l: &Lattice<f64>, f: &RadialProfile) -> Result<f64> {
    match f {
        RadialProfile::Gaussian { t } => Ok(crate::geom::theta_sum(l, *t)),
        RadialProfile::Ball { .. } => {
            let n = l.dim();
            let radius = f.trunc_radius(l);
            let mut acc = 0.0f64;
            crate::geom::for_each_norm2(l, radius * (1.0 + 1e-9), &mut |n2| {
                acc += f.eval(n2, n);
            })?;
            Ok(acc + f.at_origin())
        }
    }
}

/// `Σ_{x ∈ L^{k₁}} Σ_{y ∈ (L*)^{k₂}} ρ(x, y)`; factorizes exactly for
/// product-form `ρ`.
pub fn product_multisum(l: &Lattice<f64>, rho: &TestFunction) -> Result<f64> {
    // repeated slots reuse one enumeration per distinct profile
    let side = |lat: &Lattice<f64>, profiles: &[RadialProfile]| -> Result<f64> {
        let mut acc = 1.0f64;
        let mut done: Vec<(&RadialProfile, f64)> = Vec::new();
        for p in profiles {
            let v = match done.iter().find(|(q, _)| q == &p) {
                Some((_, v)) => *v,
                None => {
                    let v = siegel_sum(lat, p)?;
                    done.push((p, v));
                    v
                }
            };
            acc *= v;
        }
        Ok(acc)
    };
    let mut acc = side(l, &rho.primal)?;
    if !rho.dual.is_empty() {
        let ld = dual(l)?;
        acc *= side(&ld, &rho.dual)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Tuple machinery
// ---------------------------------------------------------------------------

/// Candidate vectors for one slot.
fn slot_candidates(
    l: &Lattice<f64>,
    f: &RadialProfile,
) -> Result<Vec<ShortVector<f64>>> {
    short_vectors(l, f.trunc_radius(l))
}

fn coords_to_intmat(cols: &[&[i64]]) -> IntMat {
    let n = cols[0].len();
    IntMat::from_fn(n, cols.len(), |r, c| num_bigint::BigInt::from(cols[c][r]))
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn coords_primitive(cols: &[&[i64]]) -> bool {
    if cols.len() == 1 {
        let g = cols[0].iter().fold(0i64, |acc, &x| gcd_i64(acc, x));
        return g == 1;
    }
    intlin::is_primitive(&coords_to_intmat(cols))
}

fn coords_full_rank(cols: &[&[i64]]) -> bool {
    if cols.len() == 1 {
        return cols[0].iter().any(|&x| x != 0);
    }
    let m = coords_to_intmat(cols);
    intlin::rank(&m) == cols.len()
}

/// `Σ` over primitive `k`-tuples of `∏_j ρ_j(v_j)`; primitivity is decided
/// by the elementary divisors of the integer coordinate matrix.
pub fn primitive_tuple_sum(l: &Lattice<f64>, rho: &[RadialProfile]) -> Result<f64> {
    let k = rho.len();
    if k == 0 {
        return Ok(1.0);
    }
    if k >= l.dim() {
        return Err(Error::domain("primitive_tuple_sum needs k < n"));
    }
    let n = l.dim();
    let cands: Vec<Vec<ShortVector<f64>>> = rho
        .iter()
        .map(|f| slot_candidates(l, f))
        .collect::<Result<_>>()?;
    let values: Vec<Vec<f64>> = cands
        .iter()
        .zip(rho.iter())
        .map(|(cs, f)| cs.iter().map(|sv| f.eval(sv.norm2, n)).collect())
        .collect();
    let mut total = 0.0f64;
    let mut pick = vec![0usize; k];
    tuple_rec(&cands, &values, 0, 1.0, &mut pick, &mut |cols, weight| {
        if coords_primitive(cols) {
            total += weight;
        }
    });
    Ok(total)
}

fn tuple_rec<'a>(
    cands: &'a [Vec<ShortVector<f64>>],
    values: &[Vec<f64>],
    slot: usize,
    weight: f64,
    pick: &mut Vec<usize>,
    emit: &mut impl FnMut(&[&'a [i64]], f64),
) {
    if slot == cands.len() {
        let cols: Vec<&[i64]> = pick
            .iter()
            .enumerate()
            .map(|(s, &i)| cands[s][i].coords.as_slice())
            .collect();
        emit(&cols, weight);
        return;
    }
    for (i, sv) in cands[slot].iter().enumerate() {
        let w = weight * values[slot][i];
        if w == 0.0 {
            continue;
        }
        pick[slot] = i;
        let _ = sv;
        tuple_rec(cands, values, slot + 1, w, pick, emit);
    }
}

// ---------------------------------------------------------------------------
// F_β sums
// ---------------------------------------------------------------------------

/// `Σ` over primitive `x ∈ P_{L,m₁}` and full-rank `y ∈ (L*)^{m₂}` with
/// `xᵀy = β` (an exact integer equality on coordinates) of `ρ(x, y)`.
pub fn f_beta_sum(l: &Lattice<f64>, beta: &IntMat, rho: &TestFunction) -> Result<f64> {
    Ok(f_beta_sum_multi(l, std::slice::from_ref(beta), rho)?[0])
}

/// Same as [`f_beta_sum`] for several `β` in one enumeration pass.
pub fn f_beta_sum_multi(
    l: &Lattice<f64>,
    betas: &[IntMat],
    rho: &TestFunction,
) -> Result<Vec<f64>> {
    let m1 = rho.k1();
    let m2 = rho.k2();
    for b in betas {
        if b.rows() != m1 || b.cols() != m2 {
            return Err(Error::domain("β shape must match the slot counts"));
        }
    }
    if m1 + m2 >= l.dim() {
        return Err(Error::domain("f_beta_sum needs m₁ + m₂ < n"));
    }
    let n = l.dim();
    let ld = dual(l)?;
    let xc: Vec<Vec<ShortVector<f64>>> = rho
        .primal
        .iter()
        .map(|f| slot_candidates(l, f))
        .collect::<Result<_>>()?;
    let yc: Vec<Vec<ShortVector<f64>>> = rho
        .dual
        .iter()
        .map(|f| slot_candidates(&ld, f))
        .collect::<Result<_>>()?;
    let xval: Vec<Vec<f64>> = xc
        .iter()
        .zip(rho.primal.iter())
        .map(|(cs, f)| cs.iter().map(|sv| f.eval(sv.norm2, n)).collect())
        .collect();
    let yval: Vec<Vec<f64>> = yc
        .iter()
        .zip(rho.dual.iter())
        .map(|(cs, f)| cs.iter().map(|sv| f.eval(sv.norm2, n)).collect())
        .collect();

    let betas_i: Vec<Mat<i64>> = betas
        .iter()
        .map(|b| b.to_i64().ok_or_else(|| Error::domain("β too large")))
        .collect::<Result<_>>()?;
    let mut totals = vec![0.0f64; betas.len()];

    if m1 == 1 && m2 == 1 {
        // fast path: single vectors
        for (i, sx) in xc[0].iter().enumerate() {
            if xval[0][i] == 0.0 || !coords_primitive(&[&sx.coords]) {
                continue;
            }
            for (j, sy) in yc[0].iter().enumerate() {
                let w = xval[0][i] * yval[0][j];
                if w == 0.0 {
                    continue;
                }
                let dot: i64 = sx
                    .coords
                    .iter()
                    .zip(sy.coords.iter())
                    .map(|(&a, &b)| a * b)
                    .sum();
                for (bi, b) in betas_i.iter().enumerate() {
                    if dot == *b.at(0, 0) {
                        totals[bi] += w;
                    }
                }
            }
        }
        return Ok(totals);
    }

    // general path: enumerate x-tuples and y-tuples
    let mut xpick = vec![0usize; m1];
    tuple_rec(&xc, &xval, 0, 1.0, &mut xpick, &mut |xcols, wx| {
        if !coords_primitive(xcols) {
            return;
        }
        let xcols_owned: Vec<&[i64]> = xcols.to_vec();
        let mut ypick = vec![0usize; m2];
        tuple_rec(&yc, &yval, 0, 1.0, &mut ypick, &mut |ycols, wy| {
            if !coords_full_rank(ycols) {
                return;
            }
            // xᵀy on integer coordinates
            for (bi, b) in betas_i.iter().enumerate() {
                let mut ok = true;
                'check: for (r, xcol) in xcols_owned.iter().enumerate() {
                    for (c, ycol) in ycols.iter().enumerate() {
                        let dot: i64 = xcol.iter().zip(ycol.iter()).map(|(&a, &bb)| a * bb).sum();
                        if dot != *b.at(r, c) {
                            ok = false;
                            break 'check;
                        }
                    }
                }
                if ok {
                    totals[bi] += wx * wy;
                }
            }
        });
    });
    Ok(totals)
}

// ---------------------------------------------------------------------------
// Rank-restricted sums
// ---------------------------------------------------------------------------

/// `Σ` over linearly independent `x ∈ L^{m₁}`, `y ∈ (L*)^{m₂}` of
/// `ρ(x·B₁ᵀ, y·B₂ᵀ)`; linear independence is decided on integer ranks.
pub fn rank_restricted_sum(
    l: &Lattice<f64>,
    b1: &IntMat,
    b2: &IntMat,
    rho: &TestFunction,
) -> Result<f64> {
    let (k1, m1) = (b1.rows(), b1.cols());
    let (k2, m2) = (b2.rows(), b2.cols());
    if rho.k1() != k1 || rho.k2() != k2 {
        return Err(Error::domain("slot counts must match B₁, B₂ row counts"));
    }
    if m1 + m2 >= l.dim() {
        return Err(Error::domain("rank_restricted_sum needs m₁ + m₂ < n"));
    }
    let ld = dual(l)?;
    let b1f = b1.to_real::<f64>();
    let b2f = b2.to_real::<f64>();

    let xc = transformed_candidates(l, &b1f, &rho.primal)?;
    let yc = transformed_candidates(&ld, &b2f, &rho.dual)?;

    let eval_side = |cands: &[ShortVector<f64>],
                     m: usize,
                     bf: &Mat<f64>,
                     profiles: &[RadialProfile],
                     n: usize|
     -> Vec<(Vec<i64>, f64)> {
        // all ordered m-tuples of candidates with their ρ(z·Bᵀ) weight,
        // full-rank only; coordinates flattened column-major
        let mut out = Vec::new();
        let mut idx = vec![0usize; m];
        loop {
            let cols: Vec<&[i64]> = idx.iter().map(|&i| cands[i].coords.as_slice()).collect();
            if coords_full_rank(&cols) {
                // z = selected columns (n×m) → slots z·Bᵀ
                let mut w = 1.0f64;
                for (j, prof) in profiles.iter().enumerate() {
                    // column j of z·Bᵀ = Σ_i B[j][i]·z_i
                    let mut norm2 = 0.0f64;
                    for r in 0..n {
                        let mut acc = 0.0f64;
                        for (i, &ci) in idx.iter().enumerate() {
                            acc += bf.at(j, i) * cands[ci].v[r];
                        }
                        norm2 += acc * acc;
                    }
                    w *= prof.eval(norm2, n);
                    if w == 0.0 {
                        break;
                    }
                }
                if w != 0.0 {
                    let mut flat = Vec::with_capacity(n * m);
                    for col in &cols {
                        flat.extend_from_slice(col);
                    }
                    out.push((flat, w));
                }
            }
            // advance odometer
            let mut lvl = 0;
            loop {
                if lvl == m {
                    return out;
                }
                idx[lvl] += 1;
                if idx[lvl] < cands.len() {
                    break;
                }
                idx[lvl] = 0;
                lvl += 1;
            }
        }
    };

    let n = l.dim();
    let xside = eval_side(&xc, m1, &b1f, &rho.primal, n);
    let yside = eval_side(&yc, m2, &b2f, &rho.dual, n);
    let mut total = 0.0;
    for (_, wx) in &xside {
        for (_, wy) in &yside {
            total += wx * wy;
        }
    }
    Ok(total)
}

/// Candidate vectors for tuples entering through `z ↦ z·Bᵀ`: each tuple
/// member is bounded via the pseudo-inverse of `B` and the slot radii.
fn transformed_candidates(
    l: &Lattice<f64>,
    bf: &Mat<f64>,
    profiles: &[RadialProfile],
) -> Result<Vec<ShortVector<f64>>> {
    if profiles.is_empty() {
        return Ok(Vec::new());
    }
    let n = l.dim();
    let radii: Vec<f64> = profiles.iter().map(|p| p.decay_radius(n).max(p.trunc_radius(l))).collect();
    // pseudo-inverse B⁺ = (BᵀB)⁻¹Bᵀ (m×k)
    let bt = bf.transpose();
    let pinv = bt
        .mul(bf)
        .inverse()
        .map_err(|_| Error::RankDeficient)?
        .mul(&bt);
    let m = bf.cols();
    let mut radius = 0.0f64;
    for i in 0..m {
        let mut acc = 0.0;
        for (j, r) in radii.iter().enumerate() {
            acc += pinv.at(i, j).abs() * r;
        }
        radius = radius.max(acc);
    }
    short_vectors(l, radius * (1.0 + 1e-9))
}

// ---------------------------------------------------------------------------
// Counting statistics
// ---------------------------------------------------------------------------

/// `N_j = #{v ∈ L \ 0 : 𝔙_n‖v‖ⁿ < V_j}` (both signs counted) and the dual
/// counterpart on `L*`. Inputs must be sorted nondecreasing.
pub fn count_statistic(
    l: &Lattice<f64>,
    volumes: &[f64],
    dual_volumes: &[f64],
) -> Result<(Vec<u64>, Vec<u64>)> {
    for w in volumes.windows(2).chain(dual_volumes.windows(2)) {
        if w[0] > w[1] {
            return Err(Error::domain("volume thresholds must be nondecreasing"));
        }
    }
    let count_side = |lat: &Lattice<f64>, vols: &[f64]| -> Result<Vec<u64>> {
        if vols.is_empty() {
            return Ok(Vec::new());
        }
        let n = lat.dim();
        let vn = ball_volume::<f64>(n);
        let rmax = (vols[vols.len() - 1] / vn).powf(1.0 / n as f64);
        let mut out = vec![0u64; vols.len()];
        crate::geom::for_each_norm2(lat, rmax * (1.0 + 1e-9), &mut |n2: f64| {
            let nv = vn * n2.sqrt().powi(n as i32);
            for (j, &v) in vols.iter().enumerate() {
                if (nv - v).abs() <= BOUNDARY_EPS * v.max(1.0) {
                    BOUNDARY_WARNINGS.fetch_add(1, Ordering::Relaxed);
                }
                if nv < v {
                    out[j] += 1;
                }
            }
        })?;
        Ok(out)
    };
    Ok((
        count_side(l, volumes)?,
        if dual_volumes.is_empty() {
            Vec::new()
        } else {
            count_side(&dual(l)?, dual_volumes)?
        },
    ))
}

// ---------------------------------------------------------------------------
// Ensemble averaging
// ---------------------------------------------------------------------------

/// Monte Carlo estimate with provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    pub seed: u64,
    pub ensemble: EnsembleSpec,
}

const CHUNK: u64 = 1024;

fn spec_seed(spec: &EnsembleSpec) -> u64 {
    match spec {
        EnsembleSpec::X2Exact { seed, .. } => *seed,
        EnsembleSpec::Hecke {
            mode: crate::ensembles::HeckeMode::Sampled { seed, .. },
            ..
        } => *seed,
        _ => 0,
    }
}

/// Mean and standard error of a statistic over the ensemble. Members are
/// processed in fixed chunks and the reduction runs in chunk order, so the
/// result is independent of the worker count.
pub fn ensemble_estimate(
    spec: &EnsembleSpec,
    statistic: impl Fn(&Lattice<f64>) -> Result<f64> + Sync,
) -> Result<Estimate> {
    let r = ensemble_estimate_vec(spec, 1, |l| statistic(l).map(|v| vec![v]))?;
    Ok(r.into_iter().next().unwrap())
}

/// Vector-statistic version of [`ensemble_estimate`]: one pass over the
/// members, one estimate per component.
pub fn ensemble_estimate_vec(
    spec: &EnsembleSpec,
    dim: usize,
    statistic: impl Fn(&Lattice<f64>) -> Result<Vec<f64>> + Sync,
) -> Result<Vec<Estimate>> {
    spec.validate()?;
    let count = spec.member_count()?;
    if count == 0 {
        return Err(Error::config("empty ensemble"));
    }
    let nchunks = count.div_ceil(CHUNK);
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..nchunks)
        .into_par_iter()
        .map(|chunk| -> Result<(Vec<f64>, Vec<f64>)> {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(count);
            let mut sum = vec![0.0f64; dim];
            let mut sumsq = vec![0.0f64; dim];
            for idx in lo..hi {
                let lat = spec.member(idx).map_err(|e| Error::Member {
                    index: idx,
                    source: Box::new(e),
                })?;
                let vals = statistic(&lat).map_err(|e| Error::Member {
                    index: idx,
                    source: Box::new(e),
                })?;
                if vals.len() != dim {
                    return Err(Error::domain("statistic dimension mismatch"));
                }
                for (d, v) in vals.iter().enumerate() {
                    sum[d] += v;
                    sumsq[d] += v * v;
                }
            }
            Ok((sum, sumsq))
        })
        .collect::<Result<_>>()?;
    // deterministic reduction in chunk order
    let mut sum = vec![0.0f64; dim];
    let mut sumsq = vec![0.0f64; dim];
    for (s, s2) in &partials {
        for d in 0..dim {
            sum[d] += s[d];
            sumsq[d] += s2[d];
        }
    }
    let nf = count as f64;
    Ok((0..dim)
        .map(|d| {
            let mean = sum[d] / nf;
            let stderr = if count >= 2 {
                let var = ((sumsq[d] - sum[d] * sum[d] / nf) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            } else {
                0.0
            };
            Estimate {
                mean,
                stderr,
                count,
                seed: spec_seed(spec),
                ensemble: spec.clone(),
            }
        })
        .collect())
}

/// Per-member values (used for CSV dumps); chunked like the estimator.
pub fn ensemble_members_values(
    spec: &EnsembleSpec,
    statistic: impl Fn(&Lattice<f64>) -> Result<f64> + Sync,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let count = spec.member_count()?;
    let nchunks = count.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<f64>> {
            let lo = chunk * CHUNK;
            let hi = ((chunk + 1) * CHUNK).min(count);
            (lo..hi)
                .map(|idx| {
                    let lat = spec.member(idx).map_err(|e| Error::Member {
                        index: idx,
                        source: Box::new(e),
                    })?;
                    statistic(&lat)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}
