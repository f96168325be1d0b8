//! The Bruhat–Tits building of PGL_d(F_q((1/t))): vertices are homothety classes of
//! O-lattices in F^d, O = F_q[[1/t]].
//!
//! A lattice is given by a basis matrix whose columns span it. Its class is put into a
//! canonical column Hermite form over O, which turns equality of vertices into structural
//! equality of matrices. All arithmetic is exact: if M' is an O-integral basis with
//! v(det M') = K, then π^K O^d ⊆ M'O^d (π = 1/t), so the lattice is determined by its image
//! in (O/π^K)^d and Hermite reduction can be carried out on truncated polynomials.

use std::collections::{HashMap, HashSet, VecDeque};

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, BtqError, Result};
use crate::gf::{self, inv_mod, mul_mod, sub_mod};
use crate::laurent::{LaurentMatrix, LaurentPoly, MatrixLiteral};

/// Default cap on q^d for neighbor enumeration.
pub const DEFAULT_NEIGHBOR_BOUND: u64 = 1 << 20;

// ---------------------------------------------------------------------------
// Truncated power series in π = 1/t: index k holds the coefficient of π^k.

type OVec = Vec<u32>;

fn o_val(a: &[u32]) -> Option<usize> {
    a.iter().position(|&c| c != 0)
}

/// a · b mod π^n.
fn o_mul(a: &[u32], b: &[u32], n: usize, q: u32) -> OVec {
    let mut out = vec![0u64; n];
    for (i, &x) in a.iter().enumerate().take(n) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % q as u64;
        }
    }
    out.into_iter().map(|x| x as u32).collect()
}

/// Inverse of a unit (nonzero constant term) mod π^n.
fn o_inv(u: &[u32], n: usize, q: u32) -> OVec {
    let mut inv = vec![0u32; n];
    if n == 0 {
        return inv;
    }
    let c0 = inv_mod(u[0], q);
    inv[0] = c0;
    for k in 1..n {
        let mut s = 0u32;
        for j in 1..=k.min(u.len().saturating_sub(1)) {
            s = gf::add_mod(s, mul_mod(u[j], inv[k - j], q), q);
        }
        inv[k] = mul_mod(sub_mod(0, s, q), c0, q);
    }
    inv
}

/// a / π^b, keeping length n (a is known mod π^n, so the result mod π^{n-b}).
fn o_shift_down(a: &[u32], b: usize, n: usize) -> OVec {
    let mut out = vec![0u32; n];
    let end = a.len().min(n);
    if b < end {
        out[..end - b].copy_from_slice(&a[b..end]);
    }
    out
}

/// a · π^b, keeping length n.
fn o_shift_up(a: &[u32], b: usize, n: usize) -> OVec {
    let mut out = vec![0u32; n];
    let len = n.saturating_sub(b).min(a.len());
    out[b..b + len].copy_from_slice(&a[..len]);
    out
}

/// h -= c · g componentwise, mod π^n.
fn o_axpy(h: &mut [OVec], c: &[u32], g: &[OVec], n: usize, q: u32) {
    for (hr, gr) in h.iter_mut().zip(g.iter()) {
        if o_val(gr).is_none() {
            continue;
        }
        let prod = o_mul(c, gr, n, q);
        for k in 0..n {
            hr[k] = sub_mod(hr[k], prod[k], q);
        }
    }
}

/// Converts an O-integral Laurent polynomial (all exponents ≤ 0) into its π-expansion mod π^n.
fn to_ovec(f: &LaurentPoly, n: usize) -> OVec {
    let mut v = vec![0u32; n];
    for (e, c) in f.terms() {
        debug_assert!(e <= 0);
        let k = (-e) as usize;
        if k < n {
            v[k] = c;
        }
    }
    v
}

/// Rescales M by a power of t so that all entries lie in O with at least one unit-free
/// column structure; returns the rescaled matrix and K = v(det).
fn o_integral(m: &LaurentMatrix) -> Result<(LaurentMatrix, usize)> {
    let det = m.det();
    if det.is_zero() {
        return invalid("singular matrix does not span a lattice");
    }
    let s = m.max_degree().expect("nonsingular matrix has a nonzero entry");
    let d = m.dim() as i64;
    let scaled = m.shift(-s);
    let k = -(det.degree().unwrap() - s * d);
    debug_assert!(k >= 0);
    Ok((scaled, k as usize))
}

// ---------------------------------------------------------------------------

/// A vertex of the building in canonical form.
///
/// The basis is upper triangular with diagonal t^{a_1}, …, t^{a_d}, min a_i = 0, and each
/// off-diagonal entry (i, j), i < j, is a finite sum of terms with exponents strictly greater
/// than a_i (the canonical residues modulo the row pivot).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BuildingVertex {
    basis: LaurentMatrix,
    profile: Vec<i64>,
}

impl BuildingVertex {
    pub fn basis(&self) -> &LaurentMatrix {
        &self.basis
    }

    /// Diagonal exponents (a_1, …, a_d) in row order.
    pub fn profile(&self) -> &[i64] {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn modulus(&self) -> u32 {
        self.basis.modulus()
    }

    /// The class of the diagonal lattice diag(t^{e_1}, …, t^{e_d}) O^d.
    pub fn diagonal(exps: &[i64], q: u32) -> Result<Self> {
        if exps.len() < 2 {
            return invalid("the building needs d >= 2");
        }
        vertex_normal_form(&LaurentMatrix::diag_t(exps, q))
    }

    /// The standard vertex [L_0] = [O^d].
    pub fn origin(d: usize, q: u32) -> Result<Self> {
        Self::diagonal(&vec![0; d], q)
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        let mut lit = self.basis.to_literal();
        lit.profile = Some(self.profile.clone());
        lit
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_literal()).expect("literal serializes")
    }

    /// Key used for memo tables: the serialized canonical basis.
    pub fn key(&self) -> String {
        self.basis.to_json()
    }
}

/// Canonical representative of the homothety class of the lattice spanned by M's columns.
pub fn vertex_normal_form(m: &LaurentMatrix) -> Result<BuildingVertex> {
    let d = m.dim();
    if d < 2 {
        return invalid("the building needs d >= 2");
    }
    let q = m.modulus();
    let (scaled, k) = o_integral(m)?;

    // Generators: the columns of the rescaled matrix, as π-expansions mod π^K.
    let mut pool: Vec<Vec<OVec>> =
        (0..d).map(|j| (0..d).map(|i| to_ovec(scaled.get(i, j), k)).collect()).collect();
    let mut cols: Vec<Vec<OVec>> = vec![Vec::new(); d];
    let mut b = vec![0usize; d];

    for i in (0..d).rev() {
        let best = pool
            .iter()
            .enumerate()
            .filter_map(|(idx, g)| o_val(&g[i]).map(|v| (v, idx)))
            .min();
        match best {
            None => {
                // Row i is zero in every generator: the pivot is π^K e_i, which is 0 mod π^K.
                b[i] = k;
                cols[i] = vec![vec![0u32; k]; d];
            }
            Some((v, idx)) => {
                let mut g = pool.remove(idx);
                let unit = o_shift_down(&g[i], v, k);
                let uinv = o_inv(&unit, k, q);
                for gr in g.iter_mut() {
                    *gr = o_mul(gr, &uinv, k, q);
                }
                g[i] = vec![0u32; k];
                g[i][v] = 1;
                for h in pool.iter_mut() {
                    if o_val(&h[i]).is_some() {
                        let c = o_shift_down(&h[i], v, k);
                        o_axpy(h, &c, &g, k, q);
                    }
                }
                // Over O/π^K the pivot's annihilator multiple π^{K−v}·g vanishes in row i but
                // not necessarily above it; it must stay in the pool for the rows still to come.
                if v > 0 {
                    let extra: Vec<OVec> = g.iter().map(|e| o_shift_up(e, k - v, k)).collect();
                    if extra.iter().any(|e| o_val(e).is_some()) {
                        pool.push(extra);
                    }
                }
                b[i] = v;
                cols[i] = g;
            }
        }
    }
    if pool.iter().any(|g| g.iter().any(|e| o_val(e).is_some())) {
        return Err(BtqError::Internal("Hermite reduction left a nonzero generator".into()));
    }
    if b.iter().sum::<usize>() != k {
        return Err(BtqError::Internal("Hermite pivots do not account for the determinant".into()));
    }

    // Reduce off-diagonal entries modulo the row pivots, bottom row first.
    for j in 0..d {
        for i in (0..j).rev() {
            let bi = b[i];
            if bi >= k {
                continue;
            }
            let s = o_shift_down(&cols[j][i], bi, k);
            if o_val(&s).is_none() {
                continue;
            }
            let ci = cols[i].clone();
            o_axpy(&mut cols[j][..=i], &s, &ci[..=i], k, q);
        }
    }

    let bmax = *b.iter().max().unwrap() as i64;
    let basis = LaurentMatrix::from_fn(q, d, |i, j| {
        if i == j {
            LaurentPoly::monomial(1, bmax - b[i] as i64, q)
        } else if i > j {
            LaurentPoly::zero(q)
        } else {
            let entry = &cols[j][i];
            LaurentPoly::from_terms(
                q,
                entry.iter().enumerate().take(b[i]).filter(|(_, &c)| c != 0).map(|(kk, &c)| (bmax - kk as i64, c as i64)),
            )
        }
    });
    let profile = b.iter().map(|&bi| bmax - bi as i64).collect();
    Ok(BuildingVertex { basis, profile })
}

/// CL_V(v) = (Σ a_i) mod d, the t-degree of the determinant of the normal form.
pub fn vertex_color(v: &BuildingVertex) -> u32 {
    let d = v.dim() as i64;
    v.profile.iter().sum::<i64>().rem_euclid(d) as u32
}

/// Reduced row-echelon bases of all r-dimensional subspaces of F_q^d, in lexicographic
/// order of (pivot set, free entries).
pub fn rref_subspaces(d: usize, r: usize, q: u32) -> Vec<Vec<Vec<u32>>> {
    let mut out = Vec::new();
    for pivots in combinations(d, r) {
        // Free slots: (row, col) with col > pivot[row] and col not a pivot.
        let free: Vec<(usize, usize)> = (0..r)
            .flat_map(|row| {
                let p = pivots[row];
                let pivots = &pivots;
                (p + 1..d).filter(move |c| !pivots.contains(c)).map(move |c| (row, c))
            })
            .collect();
        for assignment in gf::all_vectors(free.len(), q) {
            let mut rows = vec![vec![0u32; d]; r];
            for (row, &p) in pivots.iter().enumerate() {
                rows[row][p] = 1;
            }
            for (&(row, c), &val) in free.iter().zip(assignment.iter()) {
                rows[row][c] = val;
            }
            out.push(rows);
        }
    }
    out
}

pub(crate) fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// The sublattice π L + (lift of W) of L = v.basis·O^d, where W ⊆ F_q^d is spanned by
/// `rows` (coordinates relative to the basis of v).
pub fn sublattice_from_subspace(v: &BuildingVertex, rows: &[Vec<u32>]) -> Result<BuildingVertex> {
    let d = v.dim();
    let q = v.modulus();
    let r = gf::rank_mod(rows, q);
    if r != rows.len() {
        return invalid("subspace rows must be linearly independent");
    }
    // Columns: the rows of W, then π e_j for non-pivot coordinates j (a complement).
    let mut columns: Vec<Vec<LaurentPoly>> = rows
        .iter()
        .map(|w| w.iter().map(|&c| LaurentPoly::constant(c, q)).collect())
        .collect();
    let mut chosen: Vec<Vec<u32>> = rows.to_vec();
    for j in 0..d {
        if columns.len() == d {
            break;
        }
        let mut e = vec![0u32; d];
        e[j] = 1;
        chosen.push(e);
        if gf::rank_mod(&chosen, q) == chosen.len() {
            columns.push((0..d).map(|i| LaurentPoly::monomial(u32::from(i == j), -1, q)).collect());
        } else {
            chosen.pop();
        }
    }
    let n = LaurentMatrix::from_fn(q, d, |i, j| columns[j][i].clone());
    vertex_normal_form(&(v.basis() * &n))
}

fn check_neighbor_degree(v: &BuildingVertex, k: usize) -> Result<()> {
    if k == 0 || k >= v.dim() {
        return invalid(format!("neighbor degree must lie in 1..={}", v.dim() - 1));
    }
    Ok(())
}

/// All vertices [L] with πL' ⊂ L ⊂ L' and [L' : L] = q^k, for L' the lattice of `v`.
pub fn neighbors(v: &BuildingVertex, k: usize) -> Result<Vec<BuildingVertex>> {
    neighbors_bounded(v, k, DEFAULT_NEIGHBOR_BOUND)
}

/// As [`neighbors`], refusing when q^d exceeds `bound`.
pub fn neighbors_bounded(v: &BuildingVertex, k: usize, bound: u64) -> Result<Vec<BuildingVertex>> {
    check_neighbor_degree(v, k)?;
    let d = v.dim();
    let q = v.modulus();
    let size = (q as u64).checked_pow(d as u32);
    if size.is_none_or(|s| s > bound) {
        return Err(BtqError::ResourceBound(format!("q^d = {q}^{d} exceeds the neighbor bound {bound}")));
    }
    rref_subspaces(d, d - k, q).iter().map(|w| sublattice_from_subspace(v, w)).collect()
}

/// All vertices adjacent to `v` (every degree 1..d−1).
pub fn all_neighbors(v: &BuildingVertex) -> Result<Vec<BuildingVertex>> {
    let mut out = Vec::new();
    for k in 1..v.dim() {
        out.extend(neighbors(v, k)?);
    }
    Ok(out)
}

/// Valuations of the elementary divisors of an O-integral matrix, ascending. `n` must exceed
/// the largest divisor valuation (v(det) + 1 always suffices).
fn smith_valuations(m: &LaurentMatrix, n: usize) -> Vec<usize> {
    let d = m.dim();
    let q = m.modulus();
    let mut a: Vec<Vec<OVec>> = (0..d).map(|i| (0..d).map(|j| to_ovec(m.get(i, j), n)).collect()).collect();
    let mut vals = Vec::with_capacity(d);
    for t in 0..d {
        let best = (t..d)
            .flat_map(|i| (t..d).map(move |j| (i, j)))
            .filter_map(|(i, j)| o_val(&a[i][j]).map(|v| (v, i, j)))
            .min();
        let Some((v, pi, pj)) = best else {
            vals.extend(std::iter::repeat_n(n, d - t));
            break;
        };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let uinv = o_inv(&o_shift_down(&a[t][t], v, n), n, q);
        for i in t + 1..d {
            if o_val(&a[i][t]).is_some() {
                let c = o_mul(&o_shift_down(&a[i][t], v, n), &uinv, n, q);
                let pivot_row = a[t].clone();
                o_axpy(&mut a[i][t..], &c, &pivot_row[t..], n, q);
            }
        }
        for j in t + 1..d {
            if o_val(&a[t][j]).is_some() {
                let c = o_mul(&o_shift_down(&a[t][j], v, n), &uinv, n, q);
                let pivot_col: Vec<OVec> = (t..d).map(|i| a[i][t].clone()).collect();
                let mut col: Vec<OVec> = (t..d).map(|i| a[i][j].clone()).collect();
                o_axpy(&mut col, &c, &pivot_col, n, q);
                for (off, e) in col.into_iter().enumerate() {
                    a[t + off][j] = e;
                }
            }
        }
        vals.push(v);
    }
    vals.sort_unstable();
    vals
}

/// Elementary-divisor valuations of L_x relative to L_y, up to a common shift.
fn relative_divisors(x: &BuildingVertex, y: &BuildingVertex) -> Result<Vec<usize>> {
    if x.dim() != y.dim() || x.modulus() != y.modulus() {
        return invalid("vertices live in different buildings");
    }
    let a = &y.basis.adjugate() * &x.basis;
    let (scaled, k) = o_integral(&a)?;
    Ok(smith_valuations(&scaled, k + 1))
}

/// CL_E(x, y) = i iff representatives satisfy (1/t)L_y ⊂ L_x ⊂ L_y with [L_y : L_x] = q^i;
/// `None` when x = y or the vertices are not adjacent.
pub fn edge_color(x: &BuildingVertex, y: &BuildingVertex) -> Option<u32> {
    let e = relative_divisors(x, y).ok()?;
    let (lo, hi) = (*e.first()?, *e.last()?);
    if hi - lo != 1 {
        return None;
    }
    Some(e.iter().filter(|&&v| v == hi).count() as u32)
}

/// Outcome of a radius-bounded search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reach {
    Distance(usize),
    BeyondRadius,
}

fn bfs(
    x: &BuildingVertex,
    y: &BuildingVertex,
    radius: usize,
    step: impl Fn(&BuildingVertex) -> Result<Vec<BuildingVertex>>,
) -> Result<Reach> {
    if x.dim() != y.dim() || x.modulus() != y.modulus() {
        return invalid("vertices live in different buildings");
    }
    if x == y {
        return Ok(Reach::Distance(0));
    }
    let mut seen: HashSet<String> = HashSet::new();
    seen.insert(x.key());
    let mut frontier = VecDeque::from([(x.clone(), 0usize)]);
    while let Some((v, dist)) = frontier.pop_front() {
        if dist == radius {
            continue;
        }
        for w in step(&v)? {
            if &w == y {
                return Ok(Reach::Distance(dist + 1));
            }
            if seen.insert(w.key()) {
                frontier.push_back((w, dist + 1));
            }
        }
    }
    Ok(Reach::BeyondRadius)
}

/// Shortest edge-path length in the 1-skeleton, searched up to `radius` steps.
pub fn bfs_distance(x: &BuildingVertex, y: &BuildingVertex, radius: usize) -> Result<Reach> {
    bfs(x, y, radius, all_neighbors)
}

/// Shortest directed path from x to y along edges of color 1 (u → w with L_u ⊂ L_w of index q).
pub fn bfs_color1_distance(x: &BuildingVertex, y: &BuildingVertex, radius: usize) -> Result<Reach> {
    let d = x.dim();
    bfs(x, y, radius, |v| neighbors(v, d - 1))
}

/// The two closed-form distance expressions on diagonal labels, evaluated verbatim:
/// (min_j max_i |n_i − m_i − j|, min_j Σ_i |n_i − m_i − j|).
pub fn label_distance_formulas(n: &[i64], m: &[i64]) -> Result<(i64, i64)> {
    if n.len() != m.len() || n.is_empty() {
        return invalid("labels must have the same positive length");
    }
    let diffs: Vec<i64> = n.iter().zip(m).map(|(a, b)| a - b).collect();
    let lo = *diffs.iter().min().unwrap();
    let hi = *diffs.iter().max().unwrap();
    let mut best_max = i64::MAX;
    let mut best_sum = i64::MAX;
    for j in lo..=hi {
        let mx = diffs.iter().map(|x| (x - j).abs()).max().unwrap();
        let sm = diffs.iter().map(|x| (x - j).abs()).sum::<i64>();
        best_max = best_max.min(mx);
        best_sum = best_sum.min(sm);
    }
    Ok((best_max, best_sum))
}

/// Memoizing wrapper around [`neighbors`], keyed by the serialized canonical basis.
#[derive(Default)]
pub struct NeighborCache {
    table: HashMap<(String, usize), Vec<BuildingVertex>>,
}

impl NeighborCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn neighbors(&mut self, v: &BuildingVertex, k: usize) -> Result<&[BuildingVertex]> {
        let key = (v.key(), k);
        if !self.table.contains_key(&key) {
            let ns = neighbors(v, k)?;
            self.table.insert(key.clone(), ns);
        }
        Ok(&self.table[&key])
    }
}

/// Number of degree-k neighbors predicted by the Gaussian binomial, as a machine integer.
pub fn expected_neighbor_count(d: usize, k: usize, q: u32) -> Result<usize> {
    let c = gf::gaussian_binomial(d, k as i64, q)?;
    c.to_usize().ok_or_else(|| BtqError::ResourceBound("neighbor count overflows".into()))
}
