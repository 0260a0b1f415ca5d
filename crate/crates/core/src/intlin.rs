//! Exact integer and rational linear algebra.
//!
//! Normal forms (Smith, Hermite), primitivity tests, canonical orbit
//! representatives, congruence counting and the discrete bijections used by
//! the mean-value identities. Everything here is exact: integers are
//! arbitrary precision, rationals are kept in lowest terms, and there is no
//! tolerance budget anywhere.
//!
//! Conventions:
//!
//! * `𝔚_m` ("W-form") is the set of upper-triangular integer m×m matrices
//!   with positive diagonal and `0 ≤ a_ij < a_jj` for `i < j`; it contains
//!   exactly one representative of each coset `GL_m(ℤ)·A`.
//! * The canonical representative of a right-`GL_m(ℤ)` orbit of primitive
//!   `k×m` matrices is the one whose transpose is in reduced row-Hermite
//!   form (pivots positive, entries above a pivot reduced into `[0, pivot)`).
//!   With this choice every sign-normalized one-nonzero-per-row matrix is a
//!   fixed point, which the moment computations rely on.

use crate::error::Error;
use crate::mat::{IntMat, RatMat};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

type Result<T> = std::result::Result<T, Error>;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Smith normal form data: `u · d · v = input`, `u, v` unimodular,
/// `divisors[i] | divisors[i+1]`, `divisors` = diagonal of `d`.
#[derive(Clone, Debug)]
pub struct SmithData {
    pub u: IntMat,
    pub d: IntMat,
    pub v: IntMat,
    pub divisors: Vec<BigInt>,
}

/// Upper-triangular coset representative in `𝔚_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WForm(IntMat);

impl WForm {
    /// Wraps a matrix, checking the `𝔚`-form invariants.
    pub fn new(m: IntMat) -> Result<Self> {
        if !is_w_form(&m) {
            return Err(Error::NotCanonical);
        }
        Ok(WForm(m))
    }

    pub fn matrix(&self) -> &IntMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn det(&self) -> BigInt {
        let mut d = BigInt::one();
        for i in 0..self.0.rows() {
            d *= self.0.at(i, i).clone();
        }
        d
    }
}

/// True iff `m` is square, upper triangular, has positive diagonal and
/// `0 ≤ m_ij < m_jj` above the diagonal.
pub fn is_w_form(m: &IntMat) -> bool {
    if m.rows() != m.cols() {
        return false;
    }
    let n = m.rows();
    for i in 0..n {
        if !m.at(i, i).is_positive() {
            return false;
        }
        for j in 0..i {
            if !m.at(i, j).is_zero() {
                return false;
            }
        }
        for j in i + 1..n {
            if m.at(i, j).is_negative() || m.at(i, j) >= m.at(j, j) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Smith normal form
// ---------------------------------------------------------------------------

/// Worker holding the matrix being reduced together with the accumulated
/// unimodular factors. Invariant: `u · w · v = original`, `vinv = v⁻¹`.
struct SmithWork {
    w: IntMat,
    u: IntMat,
    v: IntMat,
    vinv: IntMat,
}

impl SmithWork {
    fn new(a: &IntMat) -> Self {
        SmithWork {
            w: a.clone(),
            u: IntMat::identity(a.rows()),
            v: IntMat::identity(a.cols()),
            vinv: IntMat::identity(a.cols()),
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        self.w.swap_rows(i, j);
        self.u.swap_cols(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        self.w.swap_cols(i, j);
        self.v.swap_rows(i, j);
        self.vinv.swap_cols(i, j);
    }

    /// row_i += k · row_j on `w`.
    fn add_row(&mut self, i: usize, j: usize, k: &BigInt) {
        for c in 0..self.w.cols() {
            let t = self.w.at(j, c).clone() * k;
            *self.w.at_mut(i, c) += t;
        }
        // u ← u · E⁻¹: col_j(u) -= k · col_i(u)
        for r in 0..self.u.rows() {
            let t = self.u.at(r, i).clone() * k;
            *self.u.at_mut(r, j) -= t;
        }
    }

    /// col_i += k · col_j on `w`.
    fn add_col(&mut self, i: usize, j: usize, k: &BigInt) {
        for r in 0..self.w.rows() {
            let t = self.w.at(r, j).clone() * k;
            *self.w.at_mut(r, i) += t;
        }
        // v ← F⁻¹ · v: row_j(v) -= k · row_i(v)
        for c in 0..self.v.cols() {
            let t = self.v.at(i, c).clone() * k;
            *self.v.at_mut(j, c) -= t;
        }
        // vinv ← vinv · F: col_i(vinv) += k · col_j(vinv)
        for r in 0..self.vinv.rows() {
            let t = self.vinv.at(r, j).clone() * k;
            *self.vinv.at_mut(r, i) += t;
        }
    }

    fn neg_row(&mut self, i: usize) {
        for c in 0..self.w.cols() {
            let t = -self.w.at(i, c).clone();
            *self.w.at_mut(i, c) = t;
        }
        for r in 0..self.u.rows() {
            let t = -self.u.at(r, i).clone();
            *self.u.at_mut(r, i) = t;
        }
    }
}

fn smith_work(a: &IntMat) -> SmithWork {
    let mut s = SmithWork::new(a);
    let (rows, cols) = (a.rows(), a.cols());
    let steps = rows.min(cols);
    for t in 0..steps {
        'outer: loop {
            // Pick the nonzero entry of least magnitude in the trailing block.
            let mut best: Option<(usize, usize)> = None;
            for r in t..rows {
                for c in t..cols {
                    if !s.w.at(r, c).is_zero()
                        && best
                            .map(|(br, bc)| s.w.at(r, c).abs() < s.w.at(br, bc).abs())
                            .unwrap_or(true)
                    {
                        best = Some((r, c));
                    }
                }
            }
            let Some((r, c)) = best else {
                break; // trailing block is zero
            };
            s.swap_rows(t, r);
            s.swap_cols(t, c);
            if s.w.at(t, t).is_negative() {
                s.neg_row(t);
            }
            // Clear column t below and row t to the right.
            let mut progressed = false;
            for r in t + 1..rows {
                if !s.w.at(r, t).is_zero() {
                    let q = s.w.at(r, t).div_floor(s.w.at(t, t));
                    s.add_row(r, t, &(-q));
                    progressed = true;
                }
            }
            for c in t + 1..cols {
                if !s.w.at(t, c).is_zero() {
                    let q = s.w.at(t, c).div_floor(s.w.at(t, t));
                    s.add_col(c, t, &(-q));
                    progressed = true;
                }
            }
            let col_clean = (t + 1..rows).all(|r| s.w.at(r, t).is_zero());
            let row_clean = (t + 1..cols).all(|c| s.w.at(t, c).is_zero());
            if !(col_clean && row_clean) {
                continue; // remainders became the new smaller pivots
            }
            // Divisibility: the pivot must divide the whole trailing block.
            for r in t + 1..rows {
                for c in t + 1..cols {
                    if !s.w.at(r, c).mod_floor(s.w.at(t, t)).is_zero() {
                        s.add_row(t, r, &BigInt::one());
                        continue 'outer;
                    }
                }
            }
            let _ = progressed;
            break;
        }
    }
    s
}

/// Smith normal form. Zero rows/columns produce trailing zero divisors.
pub fn smith(a: &IntMat) -> SmithData {
    let s = smith_work(a);
    let steps = a.rows().min(a.cols());
    let divisors: Vec<BigInt> = (0..steps).map(|i| s.w.at(i, i).clone()).collect();
    SmithData {
        u: s.u,
        d: s.w,
        v: s.v,
        divisors,
    }
}

/// Rank = number of nonzero elementary divisors.
pub fn rank(a: &IntMat) -> usize {
    smith(a).divisors.iter().filter(|d| !d.is_zero()).count()
}

// ---------------------------------------------------------------------------
// Hermite forms and canonical representatives
// ---------------------------------------------------------------------------

/// Reduced row-Hermite form: `h = t · m` with `t` unimodular; pivots
/// positive, zero below, entries above a pivot in `[0, pivot)`. Returns the
/// pivot columns.
fn row_hnf(m: &IntMat) -> (IntMat, IntMat, Vec<usize>) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut h = m.clone();
    let mut t = IntMat::identity(rows);
    let mut pivots = Vec::new();
    let mut r = 0;

    let add_row = |h: &mut IntMat, t: &mut IntMat, i: usize, j: usize, k: &BigInt| {
        for c in 0..h.cols() {
            let s = h.at(j, c).clone() * k;
            *h.at_mut(i, c) += s;
        }
        for c in 0..t.cols() {
            let s = t.at(j, c).clone() * k;
            *t.at_mut(i, c) += s;
        }
    };

    for c in 0..cols {
        if r == rows {
            break;
        }
        // Euclidean reduction of column c among rows r.. until one survivor.
        loop {
            let mut min_row: Option<usize> = None;
            for s in r..rows {
                if !h.at(s, c).is_zero()
                    && min_row
                        .map(|mr| h.at(s, c).abs() < h.at(mr, c).abs())
                        .unwrap_or(true)
                {
                    min_row = Some(s);
                }
            }
            let Some(p) = min_row else {
                break;
            };
            let mut others = false;
            for s in r..rows {
                if s != p && !h.at(s, c).is_zero() {
                    let q = h.at(s, c).div_floor(h.at(p, c));
                    add_row(&mut h, &mut t, s, p, &(-q));
                    others = true;
                }
            }
            if !others {
                // single survivor: move it into position
                h.swap_rows(r, p);
                t.swap_rows(r, p);
                if h.at(r, c).is_negative() {
                    for cc in 0..cols {
                        let v = -h.at(r, cc).clone();
                        *h.at_mut(r, cc) = v;
                    }
                    for cc in 0..rows {
                        let v = -t.at(r, cc).clone();
                        *t.at_mut(r, cc) = v;
                    }
                }
                // reduce entries above the pivot into [0, pivot)
                for i in 0..r {
                    if !h.at(i, c).is_zero() {
                        let q = h.at(i, c).div_floor(h.at(r, c));
                        if !q.is_zero() {
                            add_row(&mut h, &mut t, i, r, &(-q));
                        }
                    }
                }
                pivots.push(c);
                r += 1;
                break;
            }
        }
    }
    (h, t, pivots)
}

/// Unique `𝔚`-form representative of the left coset `GL_m(ℤ)·a`:
/// returns `(h, γ)` with `h = γ·a`.
pub fn coset_canonical_w(a: &IntMat) -> Result<(WForm, IntMat)> {
    if a.rows() != a.cols() {
        return Err(Error::Domain("coset_canonical_w needs a square matrix".into()));
    }
    let (h, t, pivots) = row_hnf(a);
    if pivots.len() < a.rows() {
        return Err(Error::SingularMatrix);
    }
    Ok((WForm::new(h)?, t))
}

/// Canonical representative of the right-`GL_m(ℤ)` orbit of a full-column-
/// rank `k×m` matrix: returns `(c, γ)` with `c = b·γ`.
pub fn orbit_canonical_a(b: &IntMat) -> Result<(IntMat, IntMat)> {
    if b.cols() == 0 {
        return Ok((b.clone(), IntMat::identity(0)));
    }
    let (h, t, pivots) = row_hnf(&b.transpose());
    if pivots.len() < b.cols() {
        return Err(Error::RankDeficient);
    }
    Ok((h.transpose(), t.transpose()))
}

/// True iff `b` equals its canonical orbit representative.
pub fn is_orbit_canonical(b: &IntMat) -> bool {
    match orbit_canonical_a(b) {
        Ok((c, _)) => c == *b,
        Err(_) => false,
    }
}

/// Columns span a primitive sublattice: full column rank and all elementary
/// divisors equal to one.
pub fn is_primitive(b: &IntMat) -> bool {
    if b.cols() == 0 {
        return true;
    }
    if b.cols() > b.rows() {
        return false;
    }
    let sd = smith(b);
    sd.divisors.len() == b.cols() && sd.divisors.iter().all(|d| d.is_one())
}

// ---------------------------------------------------------------------------
// Exact rational helpers
// ---------------------------------------------------------------------------

/// Exact inverse over ℚ (Gauss-Jordan, any nonzero pivot).
pub fn rat_inverse(a: &RatMat) -> Result<RatMat> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut w = a.clone();
    let mut inv = RatMat::identity(n);
    for k in 0..n {
        let piv = (k..n)
            .find(|&r| !w.at(r, k).is_zero())
            .ok_or(Error::SingularMatrix)?;
        w.swap_rows(piv, k);
        inv.swap_rows(piv, k);
        let d = w.at(k, k).clone();
        for c in 0..n {
            let t = w.at(k, c).clone() / d.clone();
            *w.at_mut(k, c) = t;
            let t = inv.at(k, c).clone() / d.clone();
            *inv.at_mut(k, c) = t;
        }
        for r in 0..n {
            if r == k || w.at(r, k).is_zero() {
                continue;
            }
            let f = w.at(r, k).clone();
            for c in 0..n {
                let t = w.at(r, c).clone() - f.clone() * w.at(k, c).clone();
                *w.at_mut(r, c) = t;
                let t = inv.at(r, c).clone() - f.clone() * inv.at(k, c).clone();
                *inv.at_mut(r, c) = t;
            }
        }
    }
    Ok(inv)
}

/// Exact determinant over ℚ.
pub fn rat_det(a: &RatMat) -> BigRational {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut w = a.clone();
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| !w.at(r, k).is_zero()) else {
            return BigRational::zero();
        };
        if piv != k {
            w.swap_rows(piv, k);
            det = -det;
        }
        det *= w.at(k, k).clone();
        for r in k + 1..n {
            let f = w.at(r, k).clone() / w.at(k, k).clone();
            for c in k..n {
                let t = w.at(r, c).clone() - f.clone() * w.at(k, c).clone();
                *w.at_mut(r, c) = t;
            }
        }
    }
    det
}

/// Exact integer inverse of a unimodular matrix.
pub fn unimodular_inverse(a: &IntMat) -> Result<IntMat> {
    let inv = rat_inverse(&a.to_rat())?;
    inv.to_int().ok_or(Error::Domain(
        "matrix is not unimodular: inverse is not integral".into(),
    ))
}

/// Least-squares-free exact solve `a·x = b` for full-column-rank `a` (k×m):
/// `x = (aᵀa)⁻¹aᵀb`, valid when `b` lies in the column space.
fn rat_solve_full_rank(a: &RatMat, b: &RatMat) -> Result<RatMat> {
    let at = a.transpose();
    let ata = at.mul(a);
    let inv = rat_inverse(&ata)?;
    Ok(inv.mul(&at).mul(b))
}

// ---------------------------------------------------------------------------
// Decompositions
// ---------------------------------------------------------------------------

/// Basis of the saturation of the row lattice of `m` (the intersection of
/// the rational row space with ℤ^cols), as the first `rank` rows of the `v`
/// factor of the Smith form.
fn saturated_row_basis(m: &IntMat) -> IntMat {
    let sd = smith(m);
    let r = sd.divisors.iter().filter(|d| !d.is_zero()).count();
    sd.v.submatrix(0, 0, r, m.cols())
}

/// Factor an integer matrix of rank `m` as `c = γ·bᵀ` with `b` the canonical
/// primitive representative of the row-space saturation and `γ` integral of
/// full rank.
pub fn rank_decompose(c: &IntMat) -> Result<(IntMat, IntMat)> {
    if c.is_zero() {
        return Err(Error::ZeroRank);
    }
    let sat = saturated_row_basis(c); // m × k
    let (b, _) = orbit_canonical_a(&sat.transpose())?; // k × m canonical
    // Solve c = γ·bᵀ row by row; exact because rows of c lie in the
    // saturated lattice spanned by the rows of bᵀ.
    let bt = b.transpose().to_rat(); // m × k
    let gamma_t = rat_solve_full_rank(&bt.transpose(), &c.transpose().to_rat())?; // m × n
    let gamma = gamma_t
        .transpose()
        .to_int()
        .ok_or_else(|| Error::Domain("rank_decompose produced non-integral factor".into()))?;
    debug_assert_eq!(gamma.mul(&b.transpose()), *c);
    Ok((gamma, b))
}

/// Factor a full-column-rank `n×m` matrix (`m < n`) as `c = p·a` with `p`
/// primitive and `a ∈ 𝔚_m`; the pair is unique.
pub fn primitive_factor(c: &IntMat) -> Result<(IntMat, WForm)> {
    let (n, m) = (c.rows(), c.cols());
    if m >= n {
        return Err(Error::Domain("primitive_factor needs m < n".into()));
    }
    let sat = saturated_row_basis(&c.transpose()); // m × n
    if sat.rows() < m {
        return Err(Error::RankDeficient);
    }
    let p0 = sat.transpose(); // n × m primitive
    let mm = rat_solve_full_rank(&p0.to_rat(), &c.to_rat())?
        .to_int()
        .ok_or_else(|| Error::Domain("primitive_factor produced non-integral factor".into()))?;
    let (a, gamma) = coset_canonical_w(&mm)?;
    let p = p0.mul(&unimodular_inverse(&gamma)?);
    debug_assert_eq!(p.mul(a.matrix()), *c);
    Ok((p, a))
}

/// The unique canonical primitive `k×(k−m)` matrix whose column space is the
/// orthogonal complement of the column space of `b`.
pub fn perp_rep(b: &IntMat) -> Result<IntMat> {
    let (k, m) = (b.rows(), b.cols());
    if m >= k {
        return Err(Error::NoComplement);
    }
    if !is_primitive(b) {
        return Err(Error::NotCanonical);
    }
    // Kernel of bᵀ: with bᵀ = u·d·v, the kernel is spanned by the last k−m
    // columns of v⁻¹.
    let s = smith_work(&b.transpose());
    let kernel = s.vinv.submatrix(0, m, k, k - m);
    let (c, _) = orbit_canonical_a(&kernel)?;
    debug_assert!(b.transpose().mul(&c).is_zero());
    Ok(c)
}

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

/// All canonical primitive `k×m` representatives with `max |entry| ≤ h`.
///
/// Matrices are generated directly in canonical shape (transpose in reduced
/// row-Hermite form) and filtered by primitivity, so no orbit deduplication
/// is needed.
pub fn enumerate_a(k: usize, m: usize, h: i64) -> Vec<IntMat> {
    assert!(m >= 1 && m <= k && h >= 1);
    let mut out = Vec::new();
    let mut pivots = Vec::with_capacity(m);
    let mut rows: Vec<Vec<i64>> = vec![vec![0; k]; m];
    gen_pivots(k, m, 0, &mut pivots, &mut rows, h, &mut out);
    out
}

fn gen_pivots(
    k: usize,
    m: usize,
    next: usize,
    pivots: &mut Vec<usize>,
    rows: &mut Vec<Vec<i64>>,
    h: i64,
    out: &mut Vec<IntMat>,
) {
    if pivots.len() == m {
        fill_entries(k, m, 0, pivots, rows, h, out);
        return;
    }
    let need = m - pivots.len();
    for c in next..=(k - need) {
        pivots.push(c);
        gen_pivots(k, m, c + 1, pivots, rows, h, out);
        pivots.pop();
    }
}

/// Recursively assign the free entries in row-major order over the m×k
/// Hermite-shaped matrix.
fn fill_entries(
    k: usize,
    m: usize,
    pos: usize,
    pivots: &[usize],
    rows: &mut Vec<Vec<i64>>,
    h: i64,
    out: &mut Vec<IntMat>,
) {
    if pos == m * k {
        // Entries above a pivot must already be reduced into [0, pivot);
        // the pivot in question is filled after them, so check here.
        for (j, &pj) in pivots.iter().enumerate() {
            let piv = rows[j][pj];
            for row in rows.iter().take(j) {
                if row[pj] < 0 || row[pj] >= piv {
                    return;
                }
            }
        }
        let flat: Vec<i64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let cand = IntMat::from_i64(m, k, &flat).transpose();
        if is_primitive(&cand) {
            out.push(cand);
        }
        return;
    }
    let (i, c) = (pos / k, pos % k);
    let p = pivots[i];
    if c < p {
        rows[i][c] = 0;
        fill_entries(k, m, pos + 1, pivots, rows, h, out);
    } else if c == p {
        for a in 1..=h {
            rows[i][c] = a;
            fill_entries(k, m, pos + 1, pivots, rows, h, out);
        }
        rows[i][c] = 0;
    } else if pivots[i + 1..].contains(&c) {
        // above a later pivot: nonnegative, finally reduced mod that pivot
        for a in 0..h {
            rows[i][c] = a;
            fill_entries(k, m, pos + 1, pivots, rows, h, out);
        }
        rows[i][c] = 0;
    } else {
        for a in -h..=h {
            rows[i][c] = a;
            fill_entries(k, m, pos + 1, pivots, rows, h, out);
        }
        rows[i][c] = 0;
    }
}

/// All `a ∈ 𝔚_m` with `det a ≤ dmax`, in lexicographic diagonal order.
pub fn enumerate_w(m: usize, dmax: i64) -> Vec<WForm> {
    assert!(dmax >= 1);
    let mut out = Vec::new();
    let mut diag = vec![1i64; m];
    gen_w_diag(m, 0, 1, dmax, &mut diag, &mut out);
    out
}

fn gen_w_diag(m: usize, i: usize, prod: i64, dmax: i64, diag: &mut Vec<i64>, out: &mut Vec<WForm>) {
    if i == m {
        let mut entries = vec![vec![0i64; m]; m];
        for (j, &d) in diag.iter().enumerate() {
            entries[j][j] = d;
        }
        gen_w_upper(m, 0, 1, diag, &mut entries, out);
        return;
    }
    let mut d = 1i64;
    while prod * d <= dmax {
        diag[i] = d;
        gen_w_diag(m, i + 1, prod * d, dmax, diag, out);
        d += 1;
    }
}

fn gen_w_upper(
    m: usize,
    col: usize,
    row: usize,
    diag: &[i64],
    entries: &mut Vec<Vec<i64>>,
    out: &mut Vec<WForm>,
) {
    if col == m {
        let flat: Vec<i64> = entries.iter().flat_map(|r| r.iter().copied()).collect();
        out.push(WForm(IntMat::from_i64(m, m, &flat)));
        return;
    }
    if row >= col + 1 {
        // column done (entries above diagonal are rows 0..col)
        gen_w_upper(m, col + 1, 1, diag, entries, out);
        return;
    }
    let i = row - 1;
    for a in 0..diag[col] {
        entries[i][col] = a;
        gen_w_upper(m, col, row + 1, diag, entries, out);
    }
    entries[i][col] = 0;
}

// ---------------------------------------------------------------------------
// Congruence counting and rational denominators
// ---------------------------------------------------------------------------

/// `#{a ∈ (ℤ/q)^{m₁} : θᵀ a ≡ 0 mod q}` via the elementary divisors of θ:
/// `q^{m₁−r} · ∏ gcd(s_i, q)`.
pub fn congruence_count(theta: &IntMat, q: u64) -> BigInt {
    assert!(q >= 1);
    let m1 = theta.rows();
    let bq = BigInt::from(q);
    let sd = smith(theta);
    let mut n = BigInt::one();
    let mut r = 0usize;
    for s in &sd.divisors {
        if s.is_zero() {
            continue;
        }
        n *= s.gcd(&bq);
        r += 1;
    }
    n * bq.pow((m1 - r) as u32)
}

/// Smallest positive `q` with `q·ξ` integral.
pub fn rational_denominator(xi: &RatMat) -> BigInt {
    let mut q = BigInt::one();
    for x in xi.data() {
        q = q.lcm(x.denom());
    }
    q.abs()
}

// ---------------------------------------------------------------------------
// The §4 block bijection
// ---------------------------------------------------------------------------

/// Builds the canonical `B₃` and the change-of-basis `J` with `B₃·J = D`,
/// where `D` is the block matrix `[[B₁, 0], [B₂α, B̃₂]]`.
///
/// Returns `(b3, j)`; the determinant identity `|det J| = N_ξ/q_ξ^{m₁}` with
/// `ξ = αᵀB₂ᵀB₂` is exercised by the callers/tests.
pub fn b3_construct(b1: &IntMat, b2: &IntMat, alpha: &RatMat) -> Result<(IntMat, RatMat)> {
    let (k1, m1) = (b1.rows(), b1.cols());
    let (k2, m2) = (b2.rows(), b2.cols());
    assert_eq!(alpha.rows(), m2);
    assert_eq!(alpha.cols(), m1);
    if !is_primitive(b1) || !is_primitive(b2) || !is_orbit_canonical(b1) || !is_orbit_canonical(b2)
    {
        return Err(Error::NotCanonical);
    }
    let m2p = k2 - m2;
    let b2tilde = if m2p > 0 {
        perp_rep(b2)?
    } else {
        IntMat::zeros(k2, 0)
    };
    // D over ℚ.
    let top = b1.to_rat().hcat(&RatMat::zeros(k1, m2p));
    let bottom = b2.to_rat().mul(alpha).hcat(&b2tilde.to_rat());
    let d = top.vcat(&bottom); // (k1+k2) × (m1+m2p)
    // Clear denominators and saturate the column space.
    let q = rational_denominator(&d);
    let d_int = d
        .map(|x| x * BigRational::from_integer(q.clone()))
        .to_int()
        .expect("denominators cleared");
    let sat = saturated_row_basis(&d_int.transpose());
    if sat.rows() < m1 + m2p {
        return Err(Error::RankDeficient);
    }
    let (b3, _) = orbit_canonical_a(&sat.transpose())?;
    let j = rat_solve_full_rank(&b3.to_rat(), &d)?;
    debug_assert_eq!(b3.to_rat().mul(&j), d);
    Ok((b3, j))
}

// ---------------------------------------------------------------------------
// Rogers admissibility and the D ↦ B translation
// ---------------------------------------------------------------------------

/// Scans divisions `(ν;μ)` in lexicographic order and returns the first one
/// satisfying the Rogers conditions, together with its `q`.
fn find_division(d: &IntMat) -> Option<(Vec<usize>, u64)> {
    let (m, k) = (d.rows(), d.cols());
    let mut nu = Vec::with_capacity(m);
    fn rec(d: &IntMat, m: usize, k: usize, start: usize, nu: &mut Vec<usize>) -> Option<(Vec<usize>, u64)> {
        if nu.len() == m {
            // columns ν_j must equal q·e_j for a common q ≥ 1
            let mut q: Option<BigInt> = None;
            for (j, &c) in nu.iter().enumerate() {
                for i in 0..m {
                    let e = d.at(i, c);
                    if i == j {
                        if !e.is_positive() {
                            return None;
                        }
                        match &q {
                            None => q = Some(e.clone()),
                            Some(qq) => {
                                if qq != e {
                                    return None;
                                }
                            }
                        }
                    } else if !e.is_zero() {
                        return None;
                    }
                }
            }
            let q = q.unwrap();
            // zero pattern: d_{i μ_j} = 0 whenever μ_j < ν_i
            for c in 0..k {
                if nu.contains(&c) {
                    continue;
                }
                for i in 0..m {
                    if c < nu[i] && !d.at(i, c).is_zero() {
                        return None;
                    }
                }
            }
            use num_traits::ToPrimitive;
            return Some((nu.clone(), q.to_u64()?));
        }
        let need = m - nu.len();
        for c in start..=(k - need) {
            nu.push(c);
            if let Some(res) = rec(d, m, k, c + 1, nu) {
                return Some(res);
            }
            nu.pop();
        }
        None
    }
    rec(d, m, k, 0, &mut nu)
}

/// Translates a matrix from the classical mean-value formula into the
/// subspace-representative form: returns `(B, q, elementary divisors)`.
/// The divisors all divide `q`.
pub fn translate_d_to_b(d: &IntMat) -> Result<(IntMat, u64, Vec<BigInt>)> {
    let (m, k) = (d.rows(), d.cols());
    assert!(m >= 1 && k >= m);
    // Membership: gcd of all entries 1, and a division (ν;μ) exists whose
    // ν-columns form q·I with zeros left of the pivots. Zero columns at μ
    // positions are allowed; they realize tuples with vanishing slots.
    // gcd of all entries must be 1.
    let mut g = BigInt::zero();
    for x in d.data() {
        g = g.gcd(x);
    }
    if !g.is_one() {
        return Err(Error::NotRogersAdmissible);
    }
    let Some((_nu, q)) = find_division(d) else {
        return Err(Error::NotRogersAdmissible);
    };
    let sd = smith(d);
    if sd.divisors.iter().filter(|x| !x.is_zero()).count() < m {
        return Err(Error::NotRogersAdmissible);
    }
    // γ₂' = (first m rows of v)ᵀ, then canonicalize the orbit.
    let gamma2p = sd.v.submatrix(0, 0, m, k).transpose();
    let (b, _) = orbit_canonical_a(&gamma2p)?;
    Ok((b, q, sd.divisors))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
