//! The fundamental domain T: diagonal lattice classes diag(t^{n_1}, …, t^{n_d}) with
//! n_1 ≥ … ≥ n_d = 0. Label combinatorics, in-T neighbors and friends, stabilizers of the
//! action of Γ = PGL_d(F_q[t]), orbit decompositions, and reduction of arbitrary vertices
//! into T.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::building::{self, vertex_normal_form, BuildingVertex};
use crate::error::{invalid, BtqError, Result};
use crate::gf::{self, check_prime, gl_order};
use crate::laurent::{LaurentMatrix, LaurentPoly};

/// Default cap on the size of an enumerated stabilizer.
pub const DEFAULT_STABILIZER_BOUND: u64 = 1_000_000;

/// A vertex of T: n_1 ≥ n_2 ≥ … ≥ n_d = 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct VertexLabel(Vec<i64>);

impl TryFrom<Vec<i64>> for VertexLabel {
    type Error = BtqError;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        VertexLabel::new(v)
    }
}

impl From<VertexLabel> for Vec<i64> {
    fn from(l: VertexLabel) -> Vec<i64> {
        l.0
    }
}

/// Consecutive differences m_i = n_i − n_{i+1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffSeq {
    pub m: Vec<i64>,
}

impl DiffSeq {
    /// |m̄| = #{i : m_i ≠ 0}.
    pub fn support_size(&self) -> usize {
        self.m.iter().filter(|&&x| x != 0).count()
    }
}

/// Run-length decomposition of a label: block sizes d_1, …, d_r and block values
/// g_1 > … > g_r = 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSeq {
    pub sizes: Vec<usize>,
    pub values: Vec<i64>,
}

impl BlockSeq {
    /// Half-open index ranges of the blocks.
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.sizes
            .iter()
            .map(|&s| {
                let r = start..start + s;
                start += s;
                r
            })
            .collect()
    }
}

impl VertexLabel {
    pub fn new(n: Vec<i64>) -> Result<Self> {
        if n.len() < 2 {
            return invalid("labels need d >= 2 entries");
        }
        if *n.last().unwrap() != 0 {
            return invalid(format!("label {n:?} must end in 0"));
        }
        if n.windows(2).any(|w| w[0] < w[1]) {
            return invalid(format!("label {n:?} must be weakly decreasing"));
        }
        Ok(VertexLabel(n))
    }

    /// Normalizes a weakly decreasing tuple by subtracting its last entry.
    pub fn normalized(n: Vec<i64>) -> Result<Self> {
        let last = *n.last().ok_or_else(|| BtqError::InvalidInput("empty label".into()))?;
        Self::new(n.into_iter().map(|x| x - last).collect())
    }

    pub fn origin(d: usize) -> Self {
        VertexLabel(vec![0; d])
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn n1(&self) -> i64 {
        self.0[0]
    }

    pub fn diff_seq(&self) -> DiffSeq {
        DiffSeq { m: self.0.windows(2).map(|w| w[0] - w[1]).collect() }
    }

    pub fn block_seq(&self) -> BlockSeq {
        let mut sizes = Vec::new();
        let mut values = Vec::new();
        for &x in &self.0 {
            if values.last() == Some(&x) {
                *sizes.last_mut().unwrap() += 1;
            } else {
                values.push(x);
                sizes.push(1);
            }
        }
        BlockSeq { sizes, values }
    }

    /// diag(t^{n_1}, …, t^{n_d}).
    pub fn lattice_basis(&self, q: u32) -> LaurentMatrix {
        LaurentMatrix::diag_t(&self.0, q)
    }

    pub fn vertex(&self, q: u32) -> Result<BuildingVertex> {
        check_prime(q)?;
        BuildingVertex::diagonal(&self.0, q)
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for VertexLabel {
    type Err = BtqError;
    /// Parses the comma-separated form `2,1,0`.
    fn from_str(s: &str) -> Result<Self> {
        let n = s
            .split(',')
            .map(|p| p.trim().parse::<i64>().map_err(|_| BtqError::Parse(format!("bad label \"{s}\""))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n)
    }
}

/// Convenience constructor for literal labels in code and tests; panics on invalid input.
pub fn label(n: &[i64]) -> VertexLabel {
    VertexLabel::new(n.to_vec()).expect("valid label")
}

fn check_degree(d: usize, k: usize) -> Result<()> {
    if k == 0 || k >= d {
        return invalid(format!("degree must lie in 1..={}", d - 1));
    }
    Ok(())
}

/// In-T neighbors via shift vectors: n̄ + v̄ with v̄ ∈ {0, −1}^d having k entries −1, placed at
/// the end of blocks so that the result stays weakly decreasing, renormalized to end in 0.
pub fn neighbors_in_t_by_shifts(n: &VertexLabel, k: usize) -> Result<Vec<VertexLabel>> {
    let d = n.dim();
    check_degree(d, k)?;
    let blocks = n.block_seq();
    let ranges = blocks.ranges();
    // Distribute k "−1" slots over blocks: c_b ≤ size_b, placed at the block's tail.
    let mut out = Vec::new();
    let mut counts = vec![0usize; ranges.len()];
    fn rec(
        b: usize,
        left: usize,
        ranges: &[std::ops::Range<usize>],
        counts: &mut Vec<usize>,
        n: &[i64],
        out: &mut Vec<VertexLabel>,
    ) -> Result<()> {
        if b == ranges.len() {
            if left == 0 {
                let mut v = n.to_vec();
                for (r, &c) in ranges.iter().zip(counts.iter()) {
                    for x in &mut v[r.end - c..r.end] {
                        *x -= 1;
                    }
                }
                out.push(VertexLabel::normalized(v)?);
            }
            return Ok(());
        }
        for c in 0..=left.min(ranges[b].len()) {
            counts[b] = c;
            rec(b + 1, left - c, ranges, counts, n, out)?;
        }
        counts[b] = 0;
        Ok(())
    }
    rec(0, k, &ranges, &mut counts, n.as_slice(), &mut out)?;
    out.sort();
    Ok(out)
}

/// In-T neighbors via alternating chains: changes c̄ = m̄² − m̄¹ ∈ {−1, 0, 1}^{d−1}, c̄ ≠ 0,
/// m̄¹ + c̄ ≥ 0, whose suffix sums s_i = Σ_{j ≥ i} c_j (s_d = 0) take exactly two adjacent
/// values; the color is the number of indices where s attains its minimum.
pub fn neighbors_in_t_by_chains(n: &VertexLabel, k: usize) -> Result<Vec<VertexLabel>> {
    let d = n.dim();
    check_degree(d, k)?;
    let m = n.diff_seq().m;
    let mut out = Vec::new();
    for code in 0..3usize.pow((d - 1) as u32) {
        let mut c = vec![0i64; d - 1];
        let mut x = code;
        for ci in c.iter_mut() {
            *ci = (x % 3) as i64 - 1;
            x /= 3;
        }
        if c.iter().all(|&v| v == 0) || m.iter().zip(&c).any(|(a, b)| a + b < 0) {
            continue;
        }
        let mut s = vec![0i64; d];
        for i in (0..d - 1).rev() {
            s[i] = s[i + 1] + c[i];
        }
        let lo = *s.iter().min().unwrap();
        let hi = *s.iter().max().unwrap();
        if hi - lo != 1 || s.iter().filter(|&&v| v == lo).count() != k {
            continue;
        }
        let m2: Vec<i64> = m.iter().zip(&c).map(|(a, b)| a + b).collect();
        let mut n2 = vec![0i64; d];
        for i in (0..d - 1).rev() {
            n2[i] = n2[i + 1] + m2[i];
        }
        out.push(VertexLabel::new(n2)?);
    }
    out.sort();
    Ok(out)
}

/// Labels in T adjacent to n̄ whose lattice is a sublattice of index q^k of L_n̄ (up to
/// homothety), computed two independent ways that must agree.
pub fn neighbors_in_t(n: &VertexLabel, k: usize) -> Result<Vec<VertexLabel>> {
    let a = neighbors_in_t_by_shifts(n, k)?;
    let b = neighbors_in_t_by_chains(n, k)?;
    if a != b {
        return Err(BtqError::Internal(format!(
            "in-T neighbor enumerations disagree at {n}, degree {k}: {a:?} vs {b:?}"
        )));
    }
    Ok(a)
}

/// Friends of n̄: for each degree k with m_{d−k} ≠ 0, the in-T neighbor
/// (n_1+1, …, n_{d−k}+1, n_{d−k+1}, …, n_d), fixed by the whole stabilizer of n̄.
pub fn friends(n: &VertexLabel) -> BTreeMap<usize, VertexLabel> {
    let d = n.dim();
    let m = n.diff_seq().m;
    let mut out = BTreeMap::new();
    for k in 1..d {
        if m[d - k - 1] != 0 {
            let f: Vec<i64> = n.as_slice().iter().enumerate().map(|(i, &x)| if i < d - k { x + 1 } else { x }).collect();
            out.insert(k, VertexLabel(f));
        }
    }
    out
}

/// |Γ_n̄| = (1/(q−1)) ∏_i |GL_{d_i}(F_q)| · q^{Σ_{i<j} d_i d_j (g_i − g_j + 1)}.
pub fn stabilizer_order(n: &VertexLabel, q: u32) -> Result<BigUint> {
    check_prime(q)?;
    let b = n.block_seq();
    let mut acc = BigUint::one();
    for &s in &b.sizes {
        acc *= gl_order(s, q)?;
    }
    let mut exp: u64 = 0;
    for i in 0..b.sizes.len() {
        for j in i + 1..b.sizes.len() {
            exp += (b.sizes[i] * b.sizes[j]) as u64 * (b.values[i] - b.values[j] + 1) as u64;
        }
    }
    acc *= BigUint::from(q).pow(exp as u32);
    Ok(acc / BigUint::from(q - 1))
}

/// Γ_{n̄¹} ⊆ Γ_{n̄²} iff the labels have the same block partition and m¹_i ≤ m²_i for all i.
pub fn stabilizer_contains(n1: &VertexLabel, n2: &VertexLabel) -> Result<bool> {
    if n1.dim() != n2.dim() {
        return invalid("labels have different dimensions");
    }
    let same_partition = n1.block_seq().sizes == n2.block_seq().sizes;
    let m1 = n1.diff_seq().m;
    let m2 = n2.diff_seq().m;
    Ok(same_partition && m1.iter().zip(&m2).all(|(a, b)| a <= b))
}

/// Exact membership test: γ ∈ GL_d(F_q[t]) stabilizes [L_n̄] iff deg γ_ij ≤ n_i − n_j
/// (γ_ij = 0 when the bound is negative).
pub fn stabilizes(n: &VertexLabel, gamma: &LaurentMatrix) -> bool {
    let d = n.dim();
    if gamma.dim() != d || !gamma.is_in_gl_fq_t() {
        return false;
    }
    let nn = n.as_slice();
    (0..d).all(|i| {
        (0..d).all(|j| {
            let bound = nn[i] - nn[j];
            match gamma.get(i, j).degree() {
                None => true,
                Some(g) => g <= bound,
            }
        })
    })
}

/// Enumerates Γ_n̄ ⊂ PGL_d(F_q[t]): block upper-triangular polynomial matrices with
/// deg γ_ij ≤ n_i − n_j and invertible constant diagonal blocks, one representative per
/// scalar class (the first nonzero entry of the first row equals 1).
pub fn stabilizer_enumerate(n: &VertexLabel, q: u32, bound: u64) -> Result<Vec<LaurentMatrix>> {
    let predicted = stabilizer_order(n, q)?;
    if predicted > BigUint::from(bound) {
        return Err(BtqError::ResourceBound(format!(
            "stabilizer of {n} over F_{q} has {predicted} elements, above the bound {bound}"
        )));
    }
    let d = n.dim();
    let nn = n.as_slice();
    let blocks = n.block_seq();
    let ranges = blocks.ranges();

    // Choices for each diagonal block: invertible constant matrices.
    let mut block_choices: Vec<Vec<Vec<Vec<u32>>>> = Vec::new();
    for (bi, r) in ranges.iter().enumerate() {
        let s = r.len();
        let mut mats = Vec::new();
        for flat in gf::all_vectors(s * s, q) {
            let rows: Vec<Vec<u32>> = flat.chunks(s).map(|c| c.to_vec()).collect();
            if bi == 0 {
                let first = rows[0].iter().find(|&&x| x != 0);
                if first != Some(&1) {
                    continue;
                }
            }
            if gf::rank_mod(&rows, q) == s {
                mats.push(rows);
            }
        }
        block_choices.push(mats);
    }
    // Off-block positions above the diagonal blocks carry polynomials of degree ≤ n_i − n_j.
    let block_of: Vec<usize> =
        (0..d).map(|i| ranges.iter().position(|r| r.contains(&i)).unwrap()).collect();
    let free: Vec<(usize, usize, usize)> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| block_of[i] < block_of[j])
        .map(|(i, j)| (i, j, (nn[i] - nn[j] + 1) as usize))
        .collect();
    let poly_choices: Vec<Vec<LaurentPoly>> = free
        .iter()
        .map(|&(_, _, len)| {
            gf::all_vectors(len, q).into_iter().map(|c| LaurentPoly::from_dense(q, 0, c)).collect()
        })
        .collect();

    let mut radices: Vec<usize> = block_choices.iter().map(|c| c.len()).collect();
    radices.extend(poly_choices.iter().map(|c| c.len()));
    let total: usize = radices.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; radices.len()];
    for _ in 0..total {
        let mut m = LaurentMatrix::zero(d, q);
        for (bi, r) in ranges.iter().enumerate() {
            let blk = &block_choices[bi][idx[bi]];
            for (a, i) in r.clone().enumerate() {
                for (b, j) in r.clone().enumerate() {
                    m.set(i, j, LaurentPoly::constant(blk[a][b], q));
                }
            }
        }
        for (fi, &(i, j, _)) in free.iter().enumerate() {
            m.set(i, j, poly_choices[fi][idx[ranges.len() + fi]].clone());
        }
        out.push(m);
        for (digit, &radix) in idx.iter_mut().zip(&radices).rev() {
            *digit += 1;
            if *digit < radix {
                break;
            }
            *digit = 0;
        }
    }
    if BigUint::from(out.len()) != predicted {
        return Err(BtqError::Internal(format!(
            "enumerated {} stabilizer elements of {n}, formula predicts {predicted}",
            out.len()
        )));
    }
    Ok(out)
}

/// One orbit of the stabilizer Γ_n̄ acting on the degree-k neighbors of [L_n̄].
#[derive(Clone, Debug)]
pub struct Orbit {
    pub members: Vec<BuildingVertex>,
    /// T-label of the orbit (every member reduces to it).
    pub label: VertexLabel,
}

impl Orbit {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_fixed_point(&self) -> bool {
        self.members.len() == 1
    }
}

/// Partitions neighbors([L_n̄], k) into Γ_n̄-orbits by brute force, in order of first
/// appearance in the neighbor enumeration.
pub fn orbit_decomposition(n: &VertexLabel, q: u32, k: usize) -> Result<Vec<Orbit>> {
    orbit_decomposition_bounded(n, q, k, DEFAULT_STABILIZER_BOUND)
}

pub fn orbit_decomposition_bounded(n: &VertexLabel, q: u32, k: usize, bound: u64) -> Result<Vec<Orbit>> {
    let stab = stabilizer_enumerate(n, q, bound)?;
    let base = n.vertex(q)?;
    let nbrs = building::neighbors(&base, k)?;
    let index: HashMap<&BuildingVertex, usize> = nbrs.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut orbit_of = vec![usize::MAX; nbrs.len()];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for start in 0..nbrs.len() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members = vec![start];
        orbit_of[start] = id;
        for g in &stab {
            let image = vertex_normal_form(&(g * nbrs[start].basis()))?;
            let &j = index.get(&image).ok_or_else(|| {
                BtqError::Internal(format!("stabilizer of {n} moved a neighbor outside the neighbor set"))
            })?;
            if orbit_of[j] == usize::MAX {
                orbit_of[j] = id;
                members.push(j);
            } else if orbit_of[j] != id {
                return Err(BtqError::Internal("orbits overlap".into()));
            }
        }
        members.sort_unstable();
        orbits.push(members);
    }
    orbits
        .into_iter()
        .map(|members| {
            let label = reduce_to_t(&nbrs[members[0]])?.label;
            Ok(Orbit { members: members.into_iter().map(|i| nbrs[i].clone()).collect(), label })
        })
        .collect()
}

/// Result of reducing a building vertex into T.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub label: VertexLabel,
    /// γ ∈ GL_d(F_q[t]) with [γ · L] = [L_label].
    pub witness: LaurentMatrix,
}

/// Reduces a vertex into T: finds the unique label n̄ and a witness γ ∈ GL_d(F_q[t]) with
/// vertex_normal_form(γ · v.basis) = vertex_normal_form(L_n̄).
pub fn reduce_to_t(v: &BuildingVertex) -> Result<Reduction> {
    reduce_matrix_to_t(v.basis())
}

/// As [`reduce_to_t`] for the lattice spanned by the columns of an arbitrary invertible matrix.
///
/// Works with a basis B of F_q[t]^d (initially the identity) and the matrix Y = adj(M)·B.
/// Column i has degree D_i and leading coefficient vector LC_i. While the LC_i are linearly
/// dependent, the column of largest degree in a relation is combined with the others to
/// cancel its top coefficient, strictly decreasing Σ D_i. Once independent, L = ⊕ t^{e_i} O b_i
/// with e_i = deg det M − D_i, and γ = B^{-1} carries L to a diagonal lattice.
pub fn reduce_matrix_to_t(m: &LaurentMatrix) -> Result<Reduction> {
    let d = m.dim();
    let q = m.modulus();
    if d < 2 {
        return invalid("the building needs d >= 2");
    }
    let det = m.det();
    if det.is_zero() {
        return invalid("singular matrix does not span a lattice");
    }
    let deg_det = det.degree().unwrap();
    let mut y: Vec<Vec<LaurentPoly>> = {
        let adj = m.adjugate();
        (0..d).map(|j| (0..d).map(|i| adj.get(i, j).clone()).collect()).collect()
    };
    let mut gamma: Vec<Vec<LaurentPoly>> = LaurentMatrix::identity(d, q).rows();
    let col_degree = |col: &[LaurentPoly]| col.iter().filter_map(|e| e.degree()).max().unwrap();

    // Σ D_i is bounded below by deg det Y = (d−1)·deg det M.
    let floor = (d as i64 - 1) * deg_det;
    let mut degs: Vec<i64> = y.iter().map(|c| col_degree(c)).collect();
    let start: i64 = degs.iter().sum();
    let max_iter = (start - floor).max(0) as usize + 1;
    let mut iter = 0;
    loop {
        let lcs: Vec<Vec<u32>> = (0..d).map(|i| y[i].iter().map(|e| e.coeff(degs[i])).collect()).collect();
        let Some(alpha) = gf::left_kernel_vector(&lcs, q) else { break };
        iter += 1;
        if iter > max_iter {
            return Err(BtqError::Internal("lattice reduction failed to terminate".into()));
        }
        let i0 = (0..d).filter(|&i| alpha[i] != 0).max_by_key(|&i| (degs[i], std::cmp::Reverse(i))).unwrap();
        let inv = gf::inv_mod(alpha[i0], q);
        for j in 0..d {
            if j == i0 || alpha[j] == 0 {
                continue;
            }
            let c = LaurentPoly::monomial(gf::mul_mod(alpha[j], inv, q), degs[i0] - degs[j], q);
            let yj = y[j].clone();
            for r in 0..d {
                y[i0][r] = &y[i0][r] + &(&c * &yj[r]);
            }
            let gi0 = gamma[i0].clone();
            for r in 0..d {
                gamma[j][r] = &gamma[j][r] - &(&c * &gi0[r]);
            }
        }
        let new_deg = col_degree(&y[i0]);
        if new_deg >= degs[i0] {
            return Err(BtqError::Internal("lattice reduction potential did not decrease".into()));
        }
        degs[i0] = new_deg;
    }

    let e: Vec<i64> = degs.iter().map(|&di| deg_det - di).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(e[i]), i));
    let emin = *e.iter().min().unwrap();
    let label = VertexLabel::new(order.iter().map(|&i| e[i] - emin).collect())?;
    let witness = LaurentMatrix::new(q, order.iter().map(|&i| gamma[i].clone()).collect())?;

    let lhs = vertex_normal_form(&(&witness * m))?;
    let rhs = label.vertex(q)?;
    if lhs != rhs || !witness.is_in_gl_fq_t() {
        return Err(BtqError::Internal(format!("reduction witness does not carry the lattice to {label}")));
    }
    Ok(Reduction { label, witness })
}

/// All labels with n_1 ≤ max_n1, in lexicographic order.
pub fn enumerate_t(d: usize, max_n1: i64) -> Result<Vec<VertexLabel>> {
    if d < 2 {
        return invalid("the building needs d >= 2");
    }
    if max_n1 < 0 {
        return invalid("max_n1 must be nonnegative");
    }
    fn rec(pos: usize, d: usize, upper: i64, cur: &mut Vec<i64>, out: &mut Vec<VertexLabel>) {
        if pos == d - 1 {
            cur.push(0);
            out.push(VertexLabel(cur.clone()));
            cur.pop();
            return;
        }
        for v in 0..=upper {
            cur.push(v);
            rec(pos + 1, d, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, max_n1, &mut Vec::new(), &mut out);
    out.sort();
    Ok(out)
}

/// Number of stabilizer elements as a machine integer (for reporting).
pub fn stabilizer_order_u64(n: &VertexLabel, q: u32) -> Result<Option<u64>> {
    Ok(stabilizer_order(n, q)?.to_u64())
}
