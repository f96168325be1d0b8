//! The weighted quotient graph Γ\B restricted to a truncation of T.
//!
//! Only color-1 edges are stored: u → v when L_u ⊂ L_v with index q (up to homothety). In
//! labels this is v = u + e_j for j the first index of one of u's blocks, renormalized to end
//! in 0. Color-(d−1) edges are their reverses.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::domain::{
    enumerate_t, neighbors_in_t, stabilizer_enumerate, stabilizer_order, VertexLabel, DEFAULT_STABILIZER_BOUND,
};
use crate::error::{invalid, BtqError, Result};
use crate::gf::{check_prime, gl_order};

/// Edge type: one of the twelve d = 3 shapes, or untyped for other dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeType {
    D3(u8),
    Generic,
}

impl Serialize for EdgeType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EdgeType::D3(t) => s.serialize_u8(*t),
            EdgeType::Generic => s.serialize_str("generic"),
        }
    }
}

impl<'de> Deserialize<'de> for EdgeType {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match serde_json::Value::deserialize(de)? {
            serde_json::Value::Number(n) => n
                .as_u64()
                .filter(|t| (1..=12).contains(t))
                .map(|t| EdgeType::D3(t as u8))
                .ok_or_else(|| serde::de::Error::custom("edge type must be 1..12")),
            serde_json::Value::String(s) if s == "generic" => Ok(EdgeType::Generic),
            other => Err(serde::de::Error::custom(format!("bad edge type {other}"))),
        }
    }
}

impl std::fmt::Display for EdgeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EdgeType::D3(t) => write!(f, "{t}"),
            EdgeType::Generic => write!(f, "generic"),
        }
    }
}

/// A color-1 edge of the quotient with its stabilizer data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientEdge {
    pub from: VertexLabel,
    pub to: VertexLabel,
    pub color: u32,
    pub edge_type: EdgeType,
    pub edge_stab_order: BigUint,
    /// |Γ_from| / |Γ_from ∩ Γ_to| = w(u,v)/w(u).
    pub ratio_from: BigRational,
    /// |Γ_to| / |Γ_from ∩ Γ_to| = w(u,v)/w(v).
    pub ratio_to: BigRational,
}

/// How to obtain the order of an edge stabilizer Γ_u ∩ Γ_v.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeStabMethod {
    /// Block formula valid for every d (the default).
    BlockFormula,
    /// The twelve closed forms for d = 3.
    Table,
    /// Intersection of the two enumerated stabilizers, refusing beyond the bound.
    BruteForce { bound: u64 },
}

fn big(x: &BigUint) -> BigInt {
    BigInt::from(x.clone())
}

fn ratio(a: &BigUint, b: &BigUint) -> BigRational {
    BigRational::new(big(a), big(b))
}

/// Color-1 out-neighbors of u inside T (the in-T neighbors of degree d−1).
pub fn color1_out(u: &VertexLabel) -> Result<Vec<VertexLabel>> {
    neighbors_in_t(u, u.dim() - 1)
}

/// Color-1 in-neighbors of u inside T (the in-T neighbors of degree 1).
pub fn color1_in(u: &VertexLabel) -> Result<Vec<VertexLabel>> {
    neighbors_in_t(u, 1)
}

fn check_edge(u: &VertexLabel, v: &VertexLabel) -> Result<()> {
    if u.dim() != v.dim() {
        return invalid("labels have different dimensions");
    }
    if !color1_out(u)?.contains(v) {
        return invalid(format!("({u}) -> ({v}) is not a color-1 edge of T"));
    }
    Ok(())
}

/// Which of the twelve d = 3 edge shapes a color-1 edge u → v has.
pub fn classify_edge_d3(u: &VertexLabel, v: &VertexLabel) -> Result<u8> {
    if u.dim() != 3 {
        return invalid("edge types are defined for d = 3 only");
    }
    check_edge(u, v)?;
    let (a, b) = (u.as_slice()[0], u.as_slice()[1]);
    let (c, e) = (v.as_slice()[0], v.as_slice()[1]);
    let t = match ((a, b), (c, e)) {
        ((0, 0), _) => 1,
        ((1, 0), (1, 1)) => 2,
        ((1, 1), (0, 0)) => 3,
        ((a, 0), (c, 0)) if c == a + 1 => 4,
        ((a, 0), (c, 1)) if c == a => 5,
        ((a, b), (c, e)) if a == b && c == a + 1 && e == b => 6,
        ((a, b), (c, e)) if a == b + 1 && c == a && e == a => 7,
        ((a, b), (c, e)) if a == b && c == a - 1 && e == b - 1 => 12,
        ((a, 1), (c, 0)) if c == a - 1 => 9,
        ((a, b), (c, e)) if c == a + 1 && e == b => 8,
        ((a, b), (c, e)) if c == a - 1 && e == b - 1 => 10,
        ((a, b), (c, e)) if c == a && e == b + 1 => 11,
        _ => return Err(BtqError::Internal(format!("unclassified edge ({u}) -> ({v})"))),
    };
    Ok(t)
}

/// Closed forms (w(u,v) as an edge-stabilizer order, w(u,v)/w(u), w(u,v)/w(v)) for the d = 3
/// edge types, with n1 the first entry of the source label.
pub fn d3_table_entry(edge_type: u8, n1: i64, q: u32) -> Result<(BigUint, BigUint, BigUint)> {
    let qq = BigUint::from(q);
    let p = |e: i64| qq.pow(e as u32);
    let qm1sq = BigUint::from(q - 1).pow(2);
    let r = BigUint::from(q + 1);
    let t3 = BigUint::from(q * q + q + 1);
    let one = BigUint::one();
    let row = match edge_type {
        1 => (&r * &qm1sq * p(3), t3, p(2)),
        2 => (&qm1sq * p(4), &r * p(1), &r * p(1)),
        3 => (&r * &qm1sq * p(3), p(2), t3),
        4 => (&r * &qm1sq * p(2 * n1 + 3), one, p(2)),
        5 => (&qm1sq * p(2 * n1 + 2), &r * p(1), p(1)),
        6 => (&qm1sq * p(2 * n1 + 3), r, p(2)),
        7 => (&qm1sq * p(2 * n1 + 2), p(1), &r * p(1)),
        8 => (&qm1sq * p(2 * n1 + 3), one, p(2)),
        9 => (&qm1sq * p(2 * n1 + 1), p(2), r),
        10 => (&qm1sq * p(2 * n1 + 1), p(2), one),
        11 => (&qm1sq * p(2 * n1 + 2), p(1), p(1)),
        12 => (&r * &qm1sq * p(2 * n1 + 1), p(2), one),
        _ => return invalid(format!("edge type {edge_type} is not in 1..=12")),
    };
    Ok(row)
}

/// |Γ_u ∩ Γ_v| from the block structure of the intersection. With b_ij the smaller of the
/// two bounds n_i − n_j, the intersection is block upper triangular with diagonal blocks
/// {i ~ j : b_ij = b_ji = 0} (invertible constant matrices) and polynomial entries of degree
/// ≤ b_ij elsewhere above them; divide by the scalars F_q^×.
pub fn edge_stab_order_block_formula(u: &VertexLabel, v: &VertexLabel, q: u32) -> Result<BigUint> {
    check_prime(q)?;
    let d = u.dim();
    let (a, c) = (u.as_slice(), v.as_slice());
    let bnd = |i: usize, j: usize| (a[i] - a[j]).min(c[i] - c[j]);
    // Blocks are maximal runs where both labels are constant.
    let mut sizes = vec![1usize];
    for i in 1..d {
        if bnd(i, i - 1) == 0 && bnd(i - 1, i) == 0 {
            *sizes.last_mut().unwrap() += 1;
        } else {
            sizes.push(1);
        }
    }
    let mut block_of = Vec::with_capacity(d);
    for (bi, &s) in sizes.iter().enumerate() {
        block_of.extend(std::iter::repeat_n(bi, s));
    }
    let mut acc = BigUint::one();
    for &s in &sizes {
        acc *= gl_order(s, q)?;
    }
    let mut exp = 0u64;
    for i in 0..d {
        for j in 0..d {
            if block_of[i] != block_of[j] && bnd(i, j) >= 0 {
                exp += (bnd(i, j) + 1) as u64;
            }
        }
    }
    acc *= BigUint::from(q).pow(exp as u32);
    Ok(acc / BigUint::from(q - 1))
}

/// |Γ_u ∩ Γ_v| by intersecting the enumerated groups (both use the same scalar normalization).
pub fn edge_stab_order_brute_force(u: &VertexLabel, v: &VertexLabel, q: u32, bound: u64) -> Result<BigUint> {
    let gu = stabilizer_enumerate(u, q, bound)?;
    let gv: HashSet<_> = stabilizer_enumerate(v, q, bound)?.into_iter().collect();
    Ok(BigUint::from(gu.iter().filter(|g| gv.contains(*g)).count()))
}

/// Order of the stabilizer of the color-1 edge u → v.
pub fn edge_stabilizer_order(u: &VertexLabel, v: &VertexLabel, q: u32, method: EdgeStabMethod) -> Result<BigUint> {
    check_edge(u, v)?;
    match method {
        EdgeStabMethod::BlockFormula => edge_stab_order_block_formula(u, v, q),
        EdgeStabMethod::Table => {
            check_prime(q)?;
            let t = classify_edge_d3(u, v)?;
            Ok(d3_table_entry(t, u.n1(), q)?.0)
        }
        EdgeStabMethod::BruteForce { bound } => edge_stab_order_brute_force(u, v, q, bound),
    }
}

/// Builds a fully populated edge record.
pub fn make_edge(u: &VertexLabel, v: &VertexLabel, q: u32, method: EdgeStabMethod) -> Result<QuotientEdge> {
    let w = edge_stabilizer_order(u, v, q, method)?;
    let su = stabilizer_order(u, q)?;
    let sv = stabilizer_order(v, q)?;
    let edge_type = if u.dim() == 3 { EdgeType::D3(classify_edge_d3(u, v)?) } else { EdgeType::Generic };
    let e = QuotientEdge {
        from: u.clone(),
        to: v.clone(),
        color: 1,
        edge_type,
        ratio_from: ratio(&su, &w),
        ratio_to: ratio(&sv, &w),
        edge_stab_order: w,
    };
    if !e.ratio_from.is_integer() || !e.ratio_to.is_integer() {
        return Err(BtqError::Internal(format!("edge stabilizer of ({u}) -> ({v}) is not a subgroup index")));
    }
    Ok(e)
}

/// The quotient graph on enumerate_T(d, max_n1).
#[derive(Clone, Debug)]
pub struct QuotientGraph {
    pub d: usize,
    pub q: u32,
    pub max_n1: i64,
    /// Labels with their stabilizer orders (weight denominators), in lexicographic order.
    pub vertices: Vec<(VertexLabel, BigUint)>,
    /// Color-1 edges with both endpoints in the truncation, sorted by (from, to).
    pub edges: Vec<QuotientEdge>,
    index: BTreeMap<VertexLabel, usize>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    out_complete: Vec<bool>,
    in_complete: Vec<bool>,
}

impl QuotientGraph {
    fn assemble(d: usize, q: u32, max_n1: i64, vertices: Vec<(VertexLabel, BigUint)>, edges: Vec<QuotientEdge>) -> Result<Self> {
        let index: BTreeMap<VertexLabel, usize> =
            vertices.iter().enumerate().map(|(i, (l, _))| (l.clone(), i)).collect();
        let mut out_edges = vec![Vec::new(); vertices.len()];
        let mut in_edges = vec![Vec::new(); vertices.len()];
        for (ei, e) in edges.iter().enumerate() {
            let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) else {
                return invalid("edge endpoint outside the vertex set");
            };
            out_edges[a].push(ei);
            in_edges[b].push(ei);
        }
        let inside = |l: &VertexLabel| l.n1() <= max_n1;
        let mut out_complete = Vec::with_capacity(vertices.len());
        let mut in_complete = Vec::with_capacity(vertices.len());
        for (l, _) in &vertices {
            out_complete.push(color1_out(l)?.iter().all(inside));
            in_complete.push(color1_in(l)?.iter().all(inside));
        }
        Ok(QuotientGraph { d, q, max_n1, vertices, edges, index, out_edges, in_edges, out_complete, in_complete })
    }

    pub fn vertex_index(&self, l: &VertexLabel) -> Option<usize> {
        self.index.get(l).copied()
    }

    pub fn stab_order(&self, l: &VertexLabel) -> Option<&BigUint> {
        self.vertex_index(l).map(|i| &self.vertices[i].1)
    }

    pub fn out_edges(&self, l: &VertexLabel) -> Vec<&QuotientEdge> {
        self.vertex_index(l).map_or_else(Vec::new, |i| self.out_edges[i].iter().map(|&e| &self.edges[e]).collect())
    }

    pub fn in_edges(&self, l: &VertexLabel) -> Vec<&QuotientEdge> {
        self.vertex_index(l).map_or_else(Vec::new, |i| self.in_edges[i].iter().map(|&e| &self.edges[e]).collect())
    }

    /// True if every color-1 out-neighbor of l lies in the truncation.
    pub fn out_complete(&self, l: &VertexLabel) -> bool {
        self.vertex_index(l).is_some_and(|i| self.out_complete[i])
    }

    /// True if every color-1 in-neighbor of l lies in the truncation.
    pub fn in_complete(&self, l: &VertexLabel) -> bool {
        self.vertex_index(l).is_some_and(|i| self.in_complete[i])
    }

    pub fn labels(&self) -> impl Iterator<Item = &VertexLabel> {
        self.vertices.iter().map(|(l, _)| l)
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            d: self.d,
            q: self.q,
            max_n1: self.max_n1,
            nodes: self
                .vertices
                .iter()
                .map(|(l, s)| NodeDoc { label: l.as_slice().to_vec(), stab_order: s.to_string() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    from: e.from.as_slice().to_vec(),
                    to: e.to.as_slice().to_vec(),
                    color: e.color,
                    edge_type: e.edge_type,
                    edge_stab_order: e.edge_stab_order.to_string(),
                    ratio_from: e.ratio_from.to_string(),
                    ratio_to: e.ratio_to.to_string(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_str(s).map_err(|e| BtqError::Parse(format!("graph JSON: {e}")))?;
        let num = |x: &str| x.parse::<BigUint>().map_err(|_| BtqError::Parse(format!("bad integer \"{x}\"")));
        let rat = |x: &str| x.parse::<BigRational>().map_err(|_| BtqError::Parse(format!("bad rational \"{x}\"")));
        let vertices = doc
            .nodes
            .iter()
            .map(|n| Ok((VertexLabel::new(n.label.clone())?, num(&n.stab_order)?)))
            .collect::<Result<Vec<_>>>()?;
        let edges = doc
            .edges
            .iter()
            .map(|e| {
                Ok(QuotientEdge {
                    from: VertexLabel::new(e.from.clone())?,
                    to: VertexLabel::new(e.to.clone())?,
                    color: e.color,
                    edge_type: e.edge_type,
                    edge_stab_order: num(&e.edge_stab_order)?,
                    ratio_from: rat(&e.ratio_from)?,
                    ratio_to: rat(&e.ratio_to)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(doc.d, doc.q, doc.max_n1, vertices, edges)
    }

    /// Graphviz rendering: one arrow per color-1 edge, labeled `type/ratio_from`.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let name = |l: &VertexLabel| l.as_slice().iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        writeln!(s, "digraph T {{").unwrap();
        writeln!(s, "  // d={} q={} max_n1={}", self.d, self.q, self.max_n1).unwrap();
        for (l, st) in &self.vertices {
            writeln!(s, "  \"{}\" [stab_order=\"{}\"];", name(l), st).unwrap();
        }
        for e in &self.edges {
            writeln!(s, "  \"{}\" -> \"{}\" [label=\"{}/{}\"];", name(&e.from), name(&e.to), e.edge_type, e.ratio_from)
                .unwrap();
        }
        writeln!(s, "}}").unwrap();
        s
    }
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    label: Vec<i64>,
    stab_order: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    from: Vec<i64>,
    to: Vec<i64>,
    color: u32,
    #[serde(rename = "type")]
    edge_type: EdgeType,
    edge_stab_order: String,
    ratio_from: String,
    ratio_to: String,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    d: usize,
    q: u32,
    max_n1: i64,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

/// Builds the truncated quotient graph with block-formula edge stabilizers.
pub fn build_graph(d: usize, q: u32, max_n1: i64) -> Result<QuotientGraph> {
    build_graph_with(d, q, max_n1, EdgeStabMethod::BlockFormula)
}

pub fn build_graph_with(d: usize, q: u32, max_n1: i64, method: EdgeStabMethod) -> Result<QuotientGraph> {
    check_prime(q)?;
    let labels = enumerate_t(d, max_n1)?;
    let vertices = labels
        .iter()
        .map(|l| Ok((l.clone(), stabilizer_order(l, q)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut edges = Vec::new();
    for u in &labels {
        for v in color1_out(u)? {
            if v.n1() <= max_n1 {
                edges.push(make_edge(u, &v, q, method)?);
            }
        }
    }
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    QuotientGraph::assemble(d, q, max_n1, vertices, edges)
}

/// Default bound used by callers that brute-force edge stabilizers.
pub const DEFAULT_EDGE_BRUTE_FORCE_BOUND: u64 = DEFAULT_STABILIZER_BOUND;
