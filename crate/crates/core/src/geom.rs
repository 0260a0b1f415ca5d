//! Real lattice geometry: bases, duals, parallelotope volumes, reduction,
//! short-vector enumeration, the `SL_n` action on pairs and constructive
//! transporters on the pairing manifolds.
//!
//! Everything is generic over the scalar; the crate root pins `f64`.
//! Integer coordinates travel alongside the floating vectors so that the
//! statistical layer can evaluate pairing and primitivity constraints
//! exactly.

use crate::error::Error;
use crate::mat::Mat;
use crate::scalar::{r64, Real};
use crate::special::ball_volume;

type Result<T> = std::result::Result<T, Error>;

// ---------------------------------------------------------------------------
// Lattices
// ---------------------------------------------------------------------------

/// Full-rank lattice given by a basis matrix whose columns are the basis
/// vectors.
#[derive(Clone, Debug)]
pub struct Lattice<R: Real> {
    basis: Mat<R>,
    covolume: R,
}

impl<R: Real> Lattice<R> {
    pub fn new(basis: Mat<R>) -> Result<Self> {
        if basis.rows() != basis.cols() {
            return Err(Error::domain("lattice basis must be square"));
        }
        let det = basis.det().abs();
        if !(det > R::zero()) || !det.is_finite() {
            return Err(Error::SingularMatrix);
        }
        Ok(Lattice {
            basis,
            covolume: det,
        })
    }

    /// The integer lattice `ℤⁿ`.
    pub fn standard(n: usize) -> Self {
        Lattice {
            basis: Mat::identity(n),
            covolume: R::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Mat<R> {
        &self.basis
    }

    pub fn covolume(&self) -> R {
        self.covolume
    }

    /// The lattice vector with the given integer coordinates.
    pub fn vector(&self, coords: &[i64]) -> Vec<R> {
        let n = self.dim();
        let mut v = vec![R::zero(); n];
        for (c, &u) in coords.iter().enumerate() {
            if u == 0 {
                continue;
            }
            let uf = r64::<R>(u as f64);
            for (r, entry) in v.iter_mut().enumerate() {
                *entry += *self.basis.at(r, c) * uf;
            }
        }
        v
    }
}

/// Dual lattice: basis is the inverse transpose, covolume the reciprocal.
pub fn dual<R: Real>(l: &Lattice<R>) -> Result<Lattice<R>> {
    let inv = l.basis().inverse()?;
    Lattice::new(inv.transpose())
}

/// `d(x) = √det(xᵀx)`, the m-volume of the parallelotope spanned by the
/// columns of `x`; zero iff rank deficient.
pub fn dvol<R: Real>(x: &Mat<R>) -> R {
    if x.cols() == 0 {
        return R::one();
    }
    let g = x.gram().det();
    if g <= R::zero() {
        R::zero()
    } else {
        g.sqrt()
    }
}

// ---------------------------------------------------------------------------
// LLL reduction
// ---------------------------------------------------------------------------

/// Gram–Schmidt data: `mu[i][j]` for j < i, and squared norms of the
/// orthogonalized vectors.
fn gso<R: Real>(b: &Mat<R>) -> (Vec<Vec<R>>, Vec<R>) {
    let n = b.cols();
    let g = b.gram();
    let mut mu = vec![vec![R::zero(); n]; n];
    let mut bstar = vec![R::zero(); n];
    for i in 0..n {
        let mut norm = *g.at(i, i);
        for j in 0..i {
            let mut dot = *g.at(i, j);
            for k in 0..j {
                dot -= mu[i][k] * mu[j][k] * bstar[k];
            }
            mu[i][j] = if bstar[j] > R::zero() { dot / bstar[j] } else { R::zero() };
            norm -= mu[i][j] * mu[i][j] * bstar[j];
        }
        bstar[i] = norm.max(R::zero());
    }
    (mu, bstar)
}

/// Floating LLL with Lovász parameter `delta` on the columns of `basis`.
/// Returns the reduced basis and the unimodular coordinate transform `u`
/// (exact integers) with `reduced = basis · u`.
pub fn lll<R: Real>(basis: &Mat<R>, delta: f64) -> (Mat<R>, Mat<i64>) {
    let n = basis.cols();
    let mut b = basis.clone();
    let mut u = Mat::<i64>::identity(n);
    if n <= 1 {
        return (b, u);
    }
    let delta = r64::<R>(delta);
    let half = r64::<R>(0.5 + 1e-9);
    let mut k = 1usize;
    let mut guard = 0usize;
    let max_steps = 10_000 + 200 * n * n;
    while k < n && guard < max_steps {
        guard += 1;
        let (mu, bstar) = gso(&b);
        // size-reduce column k
        let mut changed = false;
        for j in (0..k).rev() {
            if mu[k][j].abs() > half {
                let q = mu[k][j].round();
                let qi = q.to_i64().unwrap_or(0);
                if qi != 0 {
                    for r in 0..b.rows() {
                        let t = *b.at(r, j) * q;
                        *b.at_mut(r, k) -= t;
                    }
                    for r in 0..n {
                        let t = *u.at(r, j) * qi;
                        *u.at_mut(r, k) -= t;
                    }
                    changed = true;
                }
            }
        }
        let (mu, bstar) = if changed { gso(&b) } else { (mu, bstar) };
        // Lovász condition
        let lhs = bstar[k];
        let rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap_cols(k, k - 1);
            u.swap_cols(k, k - 1);
            k = k.max(2) - 1;
        }
    }
    (b, u)
}

/// Exact-integer LLL for integer bases with large entries (i128 Gram
/// accumulation, floating Gram–Schmidt decisions). Returns the reduced
/// basis columns.
pub fn lll_int(columns: &[Vec<i64>], delta: f64) -> Vec<Vec<i64>> {
    let n = columns.len();
    let mut b: Vec<Vec<i64>> = columns.to_vec();
    if n <= 1 {
        return b;
    }
    let dot = |x: &[i64], y: &[i64]| -> f64 {
        let mut acc: i128 = 0;
        for (a, c) in x.iter().zip(y.iter()) {
            acc += (*a as i128) * (*c as i128);
        }
        acc as f64
    };
    let gso_f = |b: &Vec<Vec<i64>>| -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut mu = vec![vec![0.0f64; n]; n];
        let mut bstar = vec![0.0f64; n];
        for i in 0..n {
            let mut norm = dot(&b[i], &b[i]);
            for j in 0..i {
                let mut d = dot(&b[i], &b[j]);
                for k in 0..j {
                    d -= mu[i][k] * mu[j][k] * bstar[k];
                }
                mu[i][j] = if bstar[j] > 0.0 { d / bstar[j] } else { 0.0 };
                norm -= mu[i][j] * mu[i][j] * bstar[j];
            }
            bstar[i] = norm.max(0.0);
        }
        (mu, bstar)
    };
    let mut k = 1usize;
    let mut guard = 0usize;
    let max_steps = 20_000 + 400 * n * n;
    while k < n && guard < max_steps {
        guard += 1;
        let (mu, bstar) = gso_f(&b);
        let mut changed = false;
        for j in (0..k).rev() {
            if mu[k][j].abs() > 0.5 + 1e-9 {
                let q = mu[k][j].round() as i64;
                if q != 0 {
                    let (head, tail) = b.split_at_mut(k);
                    let bj = &head[j];
                    for (t, s) in tail[0].iter_mut().zip(bj.iter()) {
                        *t -= q * *s;
                    }
                    changed = true;
                }
            }
        }
        let (mu, bstar) = if changed { gso_f(&b) } else { (mu, bstar) };
        if bstar[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * bstar[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = k.max(2) - 1;
        }
    }
    b
}

// ---------------------------------------------------------------------------
// Short-vector enumeration
// ---------------------------------------------------------------------------

/// A lattice vector found by enumeration, with its exact integer
/// coordinates in the lattice's original basis.
#[derive(Clone, Debug)]
pub struct ShortVector<R: Real> {
    pub v: Vec<R>,
    pub coords: Vec<i64>,
    pub norm2: R,
}

/// All nonzero `v ∈ L` with `‖v‖ ≤ radius`; each ± pair appears as two
/// entries. LLL-preprocessed Fincke–Pohst.
pub fn short_vectors<R: Real>(l: &Lattice<R>, radius: R) -> Result<Vec<ShortVector<R>>> {
    if !(radius > R::zero()) {
        return Err(Error::domain("short_vectors needs radius > 0"));
    }
    let (bred, u) = lll(l.basis(), 0.99);
    let chol = bred.gram().cholesky().map_err(|_| {
        Error::NumericalFailure("Cholesky failed on reduced Gram matrix".into())
    })?;
    let n = l.dim();
    let r2 = radius * radius * (R::one() + r64::<R>(1e-12)) + r64::<R>(1e-12);
    let mut out = Vec::new();
    // y_i = Σ_{j≥i} chol[i][j]·x_j ; require Σ y_i² ≤ r².
    let mut x = vec![0i64; n];
    enum_level(&chol, n, r2, &mut x, &mut |coords_red: &[i64]| {
        if coords_red.iter().all(|&c| c == 0) {
            return;
        }
        // back to original-basis coordinates
        let mut coords = vec![0i64; n];
        for (r, entry) in coords.iter_mut().enumerate() {
            let mut acc = 0i64;
            for c in 0..n {
                acc += u.at(r, c) * coords_red[c];
            }
            *entry = acc;
        }
        let v = l.vector(&coords);
        let norm2 = v.iter().map(|&t| t * t).sum::<R>();
        out.push(ShortVector { v, coords, norm2 });
    });
    // drop the slack overshoot: keep ‖v‖ ≤ radius with a hair of tolerance
    let keep2 = radius * radius * (R::one() + r64::<R>(1e-12));
    out.retain(|sv| sv.norm2 <= keep2);
    out.sort_by(|a, b| a.norm2.partial_cmp(&b.norm2).unwrap());
    Ok(out)
}

fn enum_level<R: Real>(
    chol: &Mat<R>,
    level: usize,
    rem: R,
    x: &mut Vec<i64>,
    emit: &mut impl FnMut(&[i64]),
) {
    if level == 0 {
        emit(x);
        return;
    }
    let i = level - 1;
    let rii = *chol.at(i, i);
    let mut s = R::zero();
    for j in level..x.len() {
        s += *chol.at(i, j) * r64::<R>(x[j] as f64);
    }
    if rem < R::zero() {
        return;
    }
    let half_width = rem.max(R::zero()).sqrt();
    let lo = ((-half_width - s) / rii).ceil();
    let hi = ((half_width - s) / rii).floor();
    let (lo, hi) = (lo.to_i64().unwrap_or(0), hi.to_i64().unwrap_or(-1));
    for xi in lo..=hi {
        x[i] = xi;
        let yi = rii * r64::<R>(xi as f64) + s;
        enum_level(chol, i, rem - yi * yi, x, emit);
    }
    x[i] = 0;
}

/// Enumerates the squared norms of all nonzero `v ∈ L` with `‖v‖ ≤ radius`
/// without materializing vectors or coordinates (hot path for theta sums
/// and ball counts).
pub fn for_each_norm2<R: Real>(
    l: &Lattice<R>,
    radius: R,
    emit: &mut impl FnMut(R),
) -> Result<()> {
    let (bred, _) = lll(l.basis(), 0.99);
    let chol = bred.gram().cholesky().map_err(|_| {
        Error::NumericalFailure("Cholesky failed on reduced Gram matrix".into())
    })?;
    let n = l.dim();
    let r2 = radius * radius * (R::one() + r64::<R>(1e-12)) + r64::<R>(1e-12);
    let mut x = vec![0i64; n];
    enum_norms(&chol, n, R::zero(), r2, &mut x, emit);
    Ok(())
}

fn enum_norms<R: Real>(
    chol: &Mat<R>,
    level: usize,
    partial: R,
    rem: R,
    x: &mut Vec<i64>,
    emit: &mut impl FnMut(R),
) {
    if level == 0 {
        if partial > R::zero() {
            emit(partial);
        }
        return;
    }
    let i = level - 1;
    let rii = *chol.at(i, i);
    let mut s = R::zero();
    for j in level..x.len() {
        s += *chol.at(i, j) * r64::<R>(x[j] as f64);
    }
    if rem < R::zero() {
        return;
    }
    let half_width = rem.max(R::zero()).sqrt();
    let lo = ((-half_width - s) / rii).ceil().to_i64().unwrap_or(0);
    let hi = ((half_width - s) / rii).floor().to_i64().unwrap_or(-1);
    for xi in lo..=hi {
        x[i] = xi;
        let yi = rii * r64::<R>(xi as f64) + s;
        let y2 = yi * yi;
        enum_norms(chol, i, partial + y2, rem - y2, x, emit);
    }
    x[i] = 0;
}

/// First `J` normalized volumes `𝔙_n‖v_j‖ⁿ`, one per ± pair, nondecreasing.
pub fn normalized_volumes<R: Real>(l: &Lattice<R>, j_count: usize) -> Vec<R> {
    if j_count == 0 {
        return Vec::new();
    }
    let n = l.dim();
    let vn = ball_volume::<R>(n);
    // initial radius guess from the expected count, then grow until enough
    let target = r64::<R>((2 * j_count + 8) as f64) * l.covolume();
    let mut radius = (target / vn).powf(R::one() / r64::<R>(n as f64));
    for _ in 0..64 {
        let svs = short_vectors(l, radius).expect("enumeration");
        let mut pairs: Vec<R> = svs
            .iter()
            .filter(|sv| sv.coords.iter().find(|&&c| c != 0).map(|&c| c > 0).unwrap_or(false))
            .map(|sv| sv.norm2)
            .collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if pairs.len() >= j_count {
            return pairs
                .iter()
                .take(j_count)
                .map(|&n2| vn * n2.sqrt().powi(n as i32))
                .collect();
        }
        radius = radius * r64::<R>(1.4);
    }
    panic!("normalized_volumes failed to find {} pairs", j_count);
}

// ---------------------------------------------------------------------------
// Certified Gaussian sums
// ---------------------------------------------------------------------------

/// One-dimensional periodized Gaussian `Σ_{k∈ℤ} e^{−πk²c}` with a bounded
/// remainder folded in (upper bound).
fn theta_line_upper(c: f64) -> f64 {
    let kmax = (45.0 / (std::f64::consts::PI * c)).sqrt().ceil() as i64 + 1;
    let mut s = 1.0;
    for k in 1..=kmax {
        s += 2.0 * (-std::f64::consts::PI * (k * k) as f64 * c).exp();
    }
    // geometric tail: ratio ≤ e^{−π(2K+1)c}
    let ratio = (-std::f64::consts::PI * (2 * kmax + 1) as f64 * c).exp();
    let tail = 2.0 * (-std::f64::consts::PI * ((kmax + 1) * (kmax + 1)) as f64 * c).exp()
        / (1.0 - ratio).max(1e-300);
    s + tail
}

/// Enumeration radius such that `Σ_{‖v‖>R} e^{−π‖v‖²/t} ≤ abs_tail`.
///
/// Certificate: splitting off an ε-fraction of the exponent,
/// `tail(R) ≤ e^{−π(1−ε)R²/t}·Σ_v e^{−πε‖v‖²/t}
///          ≤ e^{−π(1−ε)R²/t}·∏_i θ(ε‖b*_i‖²/t)`
/// with the Gram–Schmidt norms of an LLL-reduced basis; ε = 1/8.
pub fn gaussian_radius<R: Real>(l: &Lattice<R>, t: R, abs_tail: f64) -> R {
    let (bred, _) = lll(l.basis(), 0.99);
    let (_, bstar) = gso(&bred);
    let bs: Vec<f64> = bstar.iter().map(|b| b.to_f64().unwrap()).collect();
    r64::<R>(certified_radius2(&bs, t.to_f64().unwrap(), abs_tail).sqrt())
}

const THETA_EPS: f64 = 0.125;

/// Squared radius from the split-exponent majorant.
fn certified_radius2(bstar: &[f64], t: f64, abs_tail: f64) -> f64 {
    let mut logp = 0.0f64;
    for bs in bstar {
        let c = (bs * THETA_EPS / t).max(1e-300);
        logp += theta_line_upper(c).ln();
    }
    let r2 = t / (std::f64::consts::PI * (1.0 - THETA_EPS)) * (logp - abs_tail.ln());
    r2.max(t * 0.25)
}

/// `Σ_{v∈L} e^{−π‖v‖²/t}` including `v = 0`; the certified truncation
/// remainder is below `1e−12` absolute (and the retained sum is ≥ 1).
/// One reduction serves both the radius certificate and the enumeration:
/// the Gram–Schmidt norms are the squared Cholesky diagonal.
pub fn theta_sum<R: Real>(l: &Lattice<R>, t: R) -> R {
    let (bred, _) = lll(l.basis(), 0.99);
    let chol = bred
        .gram()
        .cholesky()
        .expect("reduced Gram must be positive definite");
    let n = l.dim();
    let bs: Vec<f64> = (0..n)
        .map(|i| (*chol.at(i, i) * *chol.at(i, i)).to_f64().unwrap())
        .collect();
    let r2f = certified_radius2(&bs, t.to_f64().unwrap(), 1e-12);
    let r2 = r64::<R>(r2f) * (R::one() + r64::<R>(1e-12));
    let mut acc = R::zero();
    let mut x = vec![0i64; n];
    enum_norms(&chol, n, R::zero(), r2, &mut x, &mut |n2| {
        acc += (-(R::pi()) * n2 / t).exp();
    });
    acc + R::one()
}

// ---------------------------------------------------------------------------
// The group action on pairs
// ---------------------------------------------------------------------------

/// A point `⟨x, y⟩` with `x` an n×m₁ tuple and `y` an n×m₂ tuple.
#[derive(Clone, Debug)]
pub struct TuplePoint<R: Real> {
    pub x: Mat<R>,
    pub y: Mat<R>,
}

impl<R: Real> TuplePoint<R> {
    pub fn new(x: Mat<R>, y: Mat<R>) -> Self {
        assert_eq!(x.rows(), y.rows());
        TuplePoint { x, y }
    }

    /// Greatest entrywise deviation of `xᵀy` from `beta`.
    pub fn pairing_residual(&self, beta: &Mat<R>) -> R {
        self.x.transpose().mul(&self.y).sub(beta).max_abs()
    }
}

/// The action `g·⟨x, y⟩ = ⟨gx, g^{-T}y⟩`; requires `det g = 1` within 1e−9.
pub fn apply_g<R: Real>(g: &Mat<R>, p: &TuplePoint<R>) -> Result<TuplePoint<R>> {
    let det = g.det();
    if (det - R::one()).abs() > r64::<R>(1e-9) {
        return Err(Error::domain("apply_g needs det g = 1"));
    }
    let ginv_t = g.inverse()?.transpose();
    Ok(TuplePoint {
        x: g.mul(&p.x),
        y: ginv_t.mul(&p.y),
    })
}

/// Volume scaling factor `δ(g, V) = d(gV)/d(V)` of `g` restricted to the
/// column span of `v`.
pub fn scaling_delta<R: Real>(g: &Mat<R>, v: &Mat<R>) -> Result<R> {
    let dv = dvol(v);
    if !(dv > R::zero()) {
        return Err(Error::RankDeficient);
    }
    Ok(dvol(&g.mul(v)) / dv)
}

/// Orthonormal completion: columns spanning the orthogonal complement of
/// the column span of `x` (n×m, full column rank), n−m columns.
fn orthonormal_complement<R: Real>(x: &Mat<R>) -> Mat<R> {
    let n = x.rows();
    let m = x.cols();
    let mut basis: Vec<Vec<R>> = Vec::new(); // orthonormalized spanning set of x
    for c in 0..m {
        let mut v = x.col(c);
        for b in &basis {
            let dot = v.iter().zip(b.iter()).map(|(&a, &bb)| a * bb).sum::<R>();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= dot * *bi;
            }
        }
        let norm = v.iter().map(|&t| t * t).sum::<R>().sqrt();
        assert!(norm > R::zero(), "orthonormal_complement: rank deficient");
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        basis.push(v);
    }
    let mut comp: Vec<Vec<R>> = Vec::new();
    for e in 0..n {
        if comp.len() == n - m {
            break;
        }
        let mut v = vec![R::zero(); n];
        v[e] = R::one();
        for b in basis.iter().chain(comp.iter()) {
            let dot = v.iter().zip(b.iter()).map(|(&a, &bb)| a * bb).sum::<R>();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= dot * *bi;
            }
        }
        let norm = v.iter().map(|&t| t * t).sum::<R>().sqrt();
        if norm > r64::<R>(1e-8) {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            comp.push(v);
        }
    }
    assert_eq!(comp.len(), n - m, "complement dimension");
    Mat::from_fn(n, n - m, |r, c| comp[c][r])
}

/// Moves `p ∈ S(β)` to the canonical point `⟨(I;0), (β; w₁)⟩` with
/// `w₁ = (I; 0)`; returns the `det = 1` matrix realizing the move.
fn canonical_move<R: Real>(beta: &Mat<R>, p: &TuplePoint<R>, tol: R) -> Result<Mat<R>> {
    let n = p.x.rows();
    let m1 = p.x.cols();
    let m2 = p.y.cols();
    if m1 + m2 >= n {
        return Err(Error::domain("canonical_move needs m₁ + m₂ < n"));
    }
    if p.pairing_residual(beta) > tol || dvol(&p.x) <= R::zero() || dvol(&p.y) <= R::zero() {
        return Err(Error::NotOnManifold(format!(
            "pairing residual {} exceeds tolerance",
            p.pairing_residual(beta)
        )));
    }
    // g1 = M⁻¹ with M = (x | completion), det M rescaled to 1
    let comp = orthonormal_complement(&p.x);
    let mut mfull = p.x.hcat(&comp);
    let d = mfull.det();
    for r in 0..n {
        let t = *mfull.at(r, m1) / d;
        *mfull.at_mut(r, m1) = t;
    }
    let g1 = mfull.inverse()?;
    let y1 = g1.inverse()?.transpose().mul(&p.y); // g1^{-T}·y
    let y2 = y1.submatrix(m1, 0, n - m1, m2);
    // find a with y2 + a·β of full column rank
    let mut a = Mat::<R>::zeros(n - m1, m1);
    let mut y2a = y2.clone();
    let scale = (y2.max_abs() + beta.max_abs() + R::one()) * r64::<R>(1e-7);
    let mut tries = 0;
    while dvol(&y2a) <= scale && tries < 40 {
        tries += 1;
        // deterministic perturbation pattern
        for r in 0..n - m1 {
            for c in 0..m1 {
                *a.at_mut(r, c) =
                    r64::<R>(((r * 31 + c * 17 + tries * 7) % 11) as f64 / 7.0 - 0.5);
            }
        }
        y2a = y2.add(&a.mul(beta));
    }
    if dvol(&y2a) <= R::zero() {
        return Err(Error::NumericalFailure(
            "could not regularize the y block".into(),
        ));
    }
    // b ∈ SL_{n−m1} with b·w1 = y2 + a·β, w1 = (I; 0)
    let nm = n - m1;
    let ccomp = orthonormal_complement(&y2a);
    let mut ymat = y2a.hcat(&ccomp);
    let w1 = Mat::<R>::identity(nm).submatrix(0, 0, nm, m2);
    let wcomp = orthonormal_complement(&w1);
    let wmat = w1.hcat(&wcomp);
    let det_fix = ymat.det() / wmat.det();
    for r in 0..nm {
        let t = *ymat.at(r, m2) / det_fix;
        *ymat.at_mut(r, m2) = t;
    }
    let b = ymat.mul(&wmat.inverse()?);
    // g2 = [[I, −aᵀ], [0, bᵀ]]
    let g2 = Mat::from_fn(n, n, |r, c| {
        if r < m1 && c < m1 {
            if r == c {
                R::one()
            } else {
                R::zero()
            }
        } else if r < m1 {
            -*a.at(c - m1, r)
        } else if c < m1 {
            R::zero()
        } else {
            *b.at(c - m1, r - m1)
        }
    });
    Ok(g2.mul(&g1))
}

/// A `det = 1` matrix `g` with `apply_g(g, p) = p2`, both points on the
/// same pairing manifold `S(β)`. Any valid transporter is returned.
pub fn transporter<R: Real>(
    beta: &Mat<R>,
    p: &TuplePoint<R>,
    p2: &TuplePoint<R>,
) -> Result<Mat<R>> {
    let tol = r64::<R>(1e-8)
        * (R::one() + p.x.max_abs().max(p.y.max_abs()).max(p2.x.max_abs()).max(p2.y.max_abs()));
    let ga = canonical_move(beta, p, tol)?;
    let gb = canonical_move(beta, p2, tol)?;
    Ok(gb.inverse()?.mul(&ga))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    type M = Mat<f64>;

    fn zn(n: usize) -> Lattice<f64> {
        Lattice::standard(n)
    }

    #[test]
    fn dvol_examples() {
        let e1 = M::from_f64(3, 1, &[1.0, 0.0, 0.0]);
        assert!((dvol(&e1) - 1.0).abs() < 1e-14);
        let x2 = M::from_f64(3, 1, &[2.0, 0.0, 0.0]);
        assert!((dvol(&x2) - 2.0).abs() < 1e-14);
        let x = M::from_f64(3, 2, &[1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((dvol(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_examples() {
        let id = dual(&zn(2)).unwrap();
        assert!(id.basis().sub(&M::identity(2)).max_abs() < 1e-14);

        let l = Lattice::new(M::from_f64(2, 2, &[2.0, 0.0, 0.0, 0.5])).unwrap();
        let d = dual(&l).unwrap();
        assert!((d.basis().at(0, 0) - 0.5).abs() < 1e-14);
        assert!((d.basis().at(1, 1) - 2.0).abs() < 1e-14);
        assert!((l.covolume() * d.covolume() - 1.0).abs() < 1e-12);

        let shear = Lattice::new(M::from_f64(2, 2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        let d = dual(&shear).unwrap();
        let expect = M::from_f64(2, 2, &[1.0, 0.0, -1.0, 1.0]);
        assert!(d.basis().sub(&expect).max_abs() < 1e-14);

        // dual(dual(L)) = L
        let dd = dual(&d).unwrap();
        assert!(dd.basis().sub(shear.basis()).max_abs() < 1e-10);
    }

    #[test]
    fn short_vector_counts() {
        assert_eq!(short_vectors(&zn(2), 1.0).unwrap().len(), 4);
        assert_eq!(short_vectors(&zn(2), 1.5).unwrap().len(), 8);
        assert_eq!(short_vectors(&zn(3), 1.0).unwrap().len(), 6);
    }

    #[test]
    fn short_vectors_match_bruteforce_boxes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.gen_range(2..=4);
            let mut basis = M::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            // keep conditioning sane
            for i in 0..n {
                *basis.at_mut(i, i) += 2.0;
            }
            let l = match Lattice::new(basis.clone()) {
                Ok(l) => l,
                Err(_) => continue,
            };
            let radius = 2.0;
            let fast = short_vectors(&l, radius).unwrap();
            // brute force: coefficient box from dual norms
            let binv = basis.inverse().unwrap();
            let mut ranges = Vec::new();
            for i in 0..n {
                let row_norm: f64 = (0..n).map(|c| binv.at(i, c).powi(2)).sum::<f64>().sqrt();
                ranges.push((radius * row_norm).ceil() as i64 + 1);
            }
            let mut slow = 0usize;
            let mut idx = vec![0i64; n];
            fn rec(
                l: &Lattice<f64>,
                ranges: &[i64],
                idx: &mut Vec<i64>,
                i: usize,
                radius: f64,
                count: &mut usize,
            ) {
                if i == ranges.len() {
                    if idx.iter().any(|&c| c != 0) {
                        let v = l.vector(idx);
                        let norm2: f64 = v.iter().map(|t| t * t).sum();
                        if norm2 <= radius * radius * (1.0 + 1e-12) {
                            *count += 1;
                        }
                    }
                    return;
                }
                for x in -ranges[i]..=ranges[i] {
                    idx[i] = x;
                    rec(l, ranges, idx, i + 1, radius, count);
                }
                idx[i] = 0;
            }
            rec(&l, &ranges, &mut idx, 0, radius, &mut slow);
            assert_eq!(fast.len(), slow, "basis {:?}", basis);
        }
    }

    #[test]
    fn normalized_volume_examples() {
        let v = normalized_volumes(&zn(2), 1);
        assert!((v[0] - std::f64::consts::PI).abs() < 1e-12);
        let v = normalized_volumes(&zn(2), 3);
        assert!((v[0] - std::f64::consts::PI).abs() < 1e-12);
        assert!((v[1] - std::f64::consts::PI).abs() < 1e-12);
        assert!((v[2] - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(normalized_volumes(&zn(2), 0).is_empty());
    }

    #[test]
    fn apply_g_examples() {
        let p = TuplePoint::new(
            M::from_f64(2, 1, &[1.0, 0.0]),
            M::from_f64(2, 1, &[0.0, 1.0]),
        );
        let id = M::identity(2);
        let q = apply_g(&id, &p).unwrap();
        assert!(q.x.sub(&p.x).max_abs() < 1e-15);

        let g = M::from_f64(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let q = apply_g(&g, &p).unwrap();
        assert!((q.x.at(0, 0) - 2.0).abs() < 1e-14);
        assert!((q.y.at(1, 0) - 2.0).abs() < 1e-14);

        // pairing preserved
        let beta = p.x.transpose().mul(&p.y);
        assert!(q.pairing_residual(&beta) < 1e-12);
    }

    #[test]
    fn scaling_delta_and_jacobian_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        let g0 = M::from_f64(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let e1 = M::from_f64(2, 1, &[1.0, 0.0]);
        assert!((scaling_delta(&g0, &e1).unwrap() - 2.0).abs() < 1e-13);

        // δ(gᵀ, (gV)^⊥) · δ(g, V) = 1 for det-1 g
        for _ in 0..50 {
            let n = 4;
            let mut g = M::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            for i in 0..n {
                *g.at_mut(i, i) += 1.5;
            }
            let det = g.det();
            let s = det.abs().powf(1.0 / n as f64) * det.signum();
            let g = g.map(|x| x / s); // det 1
            let v = M::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0f64));
            if dvol(&v) < 0.1 {
                continue;
            }
            let gv = g.mul(&v);
            let perp = orthonormal_complement(&gv);
            let lhs = scaling_delta(&g.transpose(), &perp).unwrap();
            let rhs = scaling_delta(&g, &v).unwrap();
            assert!((lhs * rhs - 1.0).abs() < 1e-8, "lhs*rhs = {}", lhs * rhs);
        }
    }

    #[test]
    fn theta_agrees_with_direct_sum_on_z2() {
        // Σ_{k∈ℤ} e^{−πk²} squared
        let mut one_dim = 1.0f64;
        for k in 1..=8 {
            one_dim += 2.0 * (-std::f64::consts::PI * (k * k) as f64).exp();
        }
        let expect = one_dim * one_dim;
        let got = theta_sum(&zn(2), 1.0);
        assert!((got - expect).abs() < 1e-12, "got {got} expect {expect}");
    }

    #[test]
    fn poisson_theta_identity_random_lattices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let mut basis = M::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0f64));
            for i in 0..n {
                *basis.at_mut(i, i) += 2.0;
            }
            let det = basis.det();
            let s = det.abs().powf(1.0 / n as f64) * det.signum();
            let basis = basis.map(|x| x / s);
            let l = Lattice::new(basis).unwrap();
            let ld = dual(&l).unwrap();
            let a = theta_sum(&l, 1.0);
            let b = theta_sum(&ld, 1.0);
            assert!(
                (a - b).abs() < 1e-8 * a.max(1.0),
                "theta identity violated: {a} vs {b}"
            );
        }
    }

    #[test]
    fn transporter_moves_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(53);
        // identity case first: p2 = p
        let beta = M::zeros(1, 1);
        let p = TuplePoint::new(
            M::from_f64(3, 1, &[1.0, 0.0, 0.0]),
            M::from_f64(3, 1, &[0.0, 1.0, 0.0]),
        );
        let g = transporter(&beta, &p, &p).unwrap();
        let q = apply_g(&g, &p).unwrap();
        assert!(q.x.sub(&p.x).max_abs() < 1e-8);
        assert!(q.y.sub(&p.y).max_abs() < 1e-8);

        // randomized: build points on S(β) for n = 4, m₁ = m₂ = 1
        for trial in 0..100 {
            let n = 4;
            let bval = (trial % 3) as f64 - 1.0;
            let beta = M::from_f64(1, 1, &[bval]);
            let make = |rng: &mut rand_chacha::ChaCha8Rng| loop {
                let x = M::from_fn(n, 1, |_, _| rng.gen_range(-2.0..2.0f64));
                let nx: f64 = dvol(&x);
                if nx < 0.3 {
                    continue;
                }
                // y = β·x/‖x‖² + (random ⊥ x)
                let mut y = vec![0.0; n];
                let x2: f64 = (0..n).map(|r| x.at(r, 0).powi(2)).sum();
                for (r, yr) in y.iter_mut().enumerate() {
                    *yr = bval * x.at(r, 0) / x2;
                }
                let w = M::from_fn(n, 1, |_, _| rng.gen_range(-2.0..2.0f64));
                let dot: f64 = (0..n).map(|r| w.at(r, 0) * x.at(r, 0)).sum();
                let mut perp_norm2 = 0.0;
                for (r, yr) in y.iter_mut().enumerate() {
                    let p = w.at(r, 0) - dot * x.at(r, 0) / x2;
                    *yr += p;
                    perp_norm2 += p * p;
                }
                if perp_norm2 < 0.05 {
                    continue;
                }
                let ym = M::from_fn(n, 1, |r, _| y[r]);
                return TuplePoint::new(x, ym);
            };
            let p = make(&mut rng);
            let p2 = make(&mut rng);
            let g = transporter(&beta, &p, &p2).unwrap();
            assert!((g.det() - 1.0).abs() < 1e-7);
            let moved = apply_g(&g, &p).unwrap();
            let scale = 1.0 + p2.x.max_abs().max(p2.y.max_abs());
            assert!(
                moved.x.sub(&p2.x).max_abs() < 1e-6 * scale,
                "x mismatch at trial {trial}"
            );
            assert!(
                moved.y.sub(&p2.y).max_abs() < 1e-6 * scale,
                "y mismatch at trial {trial}"
            );
        }
    }

    #[test]
    fn transporter_rejects_off_manifold() {
        let beta = M::from_f64(1, 1, &[5.0]);
        let p = TuplePoint::new(
            M::from_f64(3, 1, &[1.0, 0.0, 0.0]),
            M::from_f64(3, 1, &[0.0, 1.0, 0.0]),
        );
        assert!(matches!(
            transporter(&beta, &p, &p),
            Err(Error::NotOnManifold(_))
        ));
    }

    #[test]
    fn lll_int_reduces_hecke_style_kernel() {
        // kernel of a·v ≡ 0 mod p for a big prime
        let p: i64 = 1_000_003;
        let n = 6;
        let a = [1i64, 77, 1234, 99991, 500000, 999999];
        let mut cols: Vec<Vec<i64>> = Vec::new();
        let mut col0 = vec![0i64; n];
        col0[0] = p;
        cols.push(col0);
        for j in 1..n {
            // e_j − c_j e_0 with c_j = a_j · a_0^{-1} mod p (a_0 = 1)
            let mut c = vec![0i64; n];
            c[j] = 1;
            c[0] = -(a[j] % p);
            cols.push(c);
        }
        let red = lll_int(&cols, 0.99);
        let maxabs = red
            .iter()
            .flat_map(|c| c.iter().map(|x| x.abs()))
            .max()
            .unwrap();
        // reduced vectors should be around p^{1/n} ≈ 10, far below p
        assert!(maxabs < 2000, "maxabs = {maxabs}");
        // determinant preserved up to sign: compute via f64
        let bm = M::from_fn(n, n, |r, c| red[c][r] as f64);
        assert!((bm.det().abs() - p as f64).abs() / (p as f64) < 1e-9);
    }
}
