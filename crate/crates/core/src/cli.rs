//! The `btq` command line. Every run is determined by its flags; output is deterministic and
//! every number is exact unless a complex eigenvalue selects floating point.
//!
//! Exit codes: 0 success, 2 invalid input, 3 resource bound exceeded, 4 internal error.

use std::io::{Read, Write};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Value};

use crate::building::{
    bfs_color1_distance, bfs_distance, label_distance_formulas, neighbors_bounded, BuildingVertex, Reach,
    DEFAULT_NEIGHBOR_BOUND,
};
use crate::domain::{
    neighbors_in_t, reduce_matrix_to_t, stabilizer_enumerate, stabilizer_order, VertexLabel,
    DEFAULT_STABILIZER_BOUND,
};
use crate::error::{BtqError, Result};
use crate::gf::check_prime;
use crate::hecke::{
    adjointness_check, closed_form_regression, commutator_check, covolume_partial_series, covolume_tail_bound,
    covolume_with, eigen_identity_residuals, eigenvector_d2, eigenvector_d3, l2_partial_norm, parse_complex,
    parse_rational, row_sum_check, DomainFunction, HeckeParams, Normalization, QuadExt, Scalar,
};
use crate::laurent::LaurentMatrix;
use crate::quotient::build_graph;

#[derive(Parser, Debug)]
#[command(name = "btq", version, about = "Exact computations on the quotient of the Bruhat-Tits building of PGL_d(F_q((1/t))) by PGL_d(F_q[t])")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Pgl,
    Gl,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Pgl => Normalization::Pgl,
            NormArg::Gl => Normalization::Gl,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the truncated fundamental domain and export the weighted quotient graph.
    /// Cost: O(max_n^(d-1)) vertices.
    Domain {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: u32,
        #[arg(long = "max-n", default_value_t = 12)]
        max_n: i64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Neighbors of degree k: in the building (of a label or a matrix) or, with --in-t, in T.
    /// Cost: [d choose k]_q normal forms.
    Neighbors {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: usize,
        /// Label such as 2,1,0 (a diagonal lattice; need not lie in T for building neighbors).
        #[arg(long, conflicts_with = "matrix")]
        n: Option<String>,
        /// Matrix literal file (JSON), or - for stdin.
        #[arg(long)]
        matrix: Option<String>,
        #[arg(long = "in-t")]
        in_t: bool,
        #[arg(long, default_value_t = DEFAULT_NEIGHBOR_BOUND)]
        bound: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Order of the stabilizer of a vertex of T, optionally enumerating its elements.
    Stabilizer {
        #[arg(long)]
        n: String,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        enumerate: bool,
        #[arg(long, default_value_t = DEFAULT_STABILIZER_BOUND)]
        bound: u64,
    },
    /// Reduce the lattice spanned by a matrix's columns into T; prints the label and a witness.
    Reduce {
        /// Matrix literal file (JSON), or - for stdin.
        #[arg(long)]
        matrix: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Closed-form covolume, the partial sum over the truncation, the gap and its tail bound.
    /// Cost: O(max_n^(d-1)) stabilizer orders.
    Covolume {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: u32,
        #[arg(long = "max-n", default_value_t = 40)]
        max_n: i64,
        #[arg(long, value_enum, default_value_t = NormArg::Pgl)]
        normalization: NormArg,
    },
    /// Commutator, row-sum and adjointness checks with exact rational functions.
    HeckeCheck {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: u32,
        #[arg(long = "max-n", default_value_t = 12)]
        max_n: i64,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simultaneous eigenfunction by recursion (d = 2 or 3). Eigenvalues are exact rationals
    /// (p, p/q, decimals) or complex literals a+bi (floating point).
    Eigenvector {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        q: u32,
        #[arg(long, allow_hyphen_values = true)]
        lambda1: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: Option<String>,
        #[arg(long = "max-n", default_value_t = 12)]
        max_n: i64,
        /// Also report weighted L² mass per shell n1.
        #[arg(long)]
        l2: bool,
        /// Also compare against the bundled closed forms (d = 3).
        #[arg(long)]
        regression: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Breadth-first distance between two diagonal lattices versus the label formulas.
    /// Cost: grows like (number of neighbors)^radius.
    Distance {
        #[arg(long)]
        n: String,
        #[arg(long)]
        m: String,
        #[arg(long)]
        q: u32,
        #[arg(long, default_value_t = 6)]
        radius: usize,
    },
}

/// Runs the CLI on `args` (including the program name), reading `--matrix -` from `input`.
pub fn run<I, T>(args: I, input: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, input, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "btq: {e}");
            e.exit_code()
        }
    }
}

fn io_err(e: std::io::Error) -> BtqError {
    BtqError::InvalidInput(format!("i/o: {e}"))
}

/// Writes output; a closed downstream pipe (e.g. `| head`) is not an error.
fn emit(out: &mut dyn Write, s: &str) -> Result<()> {
    match out.write_all(s.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(e)),
        _ => Ok(()),
    }
}

fn read_matrix(path: &str, input: &mut dyn Read) -> Result<LaurentMatrix> {
    let text = if path == "-" {
        let mut s = String::new();
        input.read_to_string(&mut s).map_err(io_err)?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| BtqError::InvalidInput(format!("cannot read {path}: {e}")))?
    };
    LaurentMatrix::from_json(&text)
}

fn parse_ints(s: &str) -> Result<Vec<i64>> {
    s.split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|_| BtqError::Parse(format!("bad integer list \"{s}\""))))
        .collect()
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn dispatch(cmd: Command, input: &mut dyn Read, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Domain { d, q, max_n, format } => cmd_domain(out, d, q, max_n, format),
        Command::Neighbors { q, k, n, matrix, in_t, bound, format } => {
            cmd_neighbors(input, out, q, k, n, matrix, in_t, bound, format)
        }
        Command::Stabilizer { n, q, d, enumerate, bound } => cmd_stabilizer(out, &n, q, d, enumerate, bound),
        Command::Reduce { matrix, format } => cmd_reduce(input, out, &matrix, format),
        Command::Covolume { d, q, max_n, normalization } => cmd_covolume(out, d, q, max_n, normalization.into()),
        Command::HeckeCheck { d, q, max_n, trials, seed } => cmd_hecke_check(out, d, q, max_n, trials, seed),
        Command::Eigenvector { d, q, lambda1, lambda2, max_n, l2, regression, tol, format } => {
            let opts = EigenOpts { d, q, max_n, l2, regression, tol, format };
            cmd_eigenvector(out, &opts, &lambda1, lambda2.as_deref())
        }
        Command::Distance { n, m, q, radius } => cmd_distance(out, &n, &m, q, radius),
    }
}

fn cmd_domain(out: &mut dyn Write, d: usize, q: u32, max_n: i64, format: Format) -> Result<()> {
    let g = build_graph(d, q, max_n)?;
    match format {
        Format::Json => {
            emit(out, &g.to_json())?;
            emit(out, "\n")
        }
        Format::Dot => emit(out, &g.to_dot()),
        Format::Text => {
            let mut s = format!("# d={d} q={q} max_n1={max_n}: {} vertices, {} edges\n", g.vertices.len(), g.edges.len());
            for (l, st) in &g.vertices {
                s += &format!("vertex {l} stab_order {st}\n");
            }
            for e in &g.edges {
                s += &format!(
                    "edge {} -> {} type {} edge_stab_order {} ratio_from {} ratio_to {}\n",
                    e.from, e.to, e.edge_type, e.edge_stab_order, e.ratio_from, e.ratio_to
                );
            }
            emit(out, &s)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_neighbors(
    input: &mut dyn Read,
    out: &mut dyn Write,
    q: u32,
    k: usize,
    n: Option<String>,
    matrix: Option<String>,
    in_t: bool,
    bound: u64,
    format: Format,
) -> Result<()> {
    check_prime(q)?;
    if in_t {
        let n = n.ok_or_else(|| BtqError::InvalidInput("--in-t needs --n".into()))?;
        let l: VertexLabel = n.parse()?;
        let nb = neighbors_in_t(&l, k)?;
        return match format {
            Format::Json => emit(out, &pretty(&json!(nb.iter().map(|x| x.as_slice()).collect::<Vec<_>>()))),
            _ => emit(out, &nb.iter().map(|x| format!("{x}\n")).collect::<String>()),
        };
    }
    let v = match (n, matrix) {
        (Some(n), None) => BuildingVertex::diagonal(&parse_ints(&n)?, q)?,
        (None, Some(path)) => {
            let m = read_matrix(&path, input)?;
            if m.modulus() != q {
                return Err(BtqError::InvalidInput(format!("matrix has q = {}, flag says {q}", m.modulus())));
            }
            crate::building::vertex_normal_form(&m)?
        }
        _ => return Err(BtqError::InvalidInput("give exactly one of --n or --matrix".into())),
    };
    let nbrs = neighbors_bounded(&v, k, bound)?;
    let mut rows = Vec::with_capacity(nbrs.len());
    for w in &nbrs {
        let red = reduce_matrix_to_t(w.basis())?;
        rows.push((w, red.label));
    }
    match format {
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|(w, l)| json!({"basis": w.to_literal(), "profile": w.profile(), "label_in_t": l.as_slice()}))
                .collect();
            emit(out, &pretty(&Value::Array(arr)))
        }
        _ => {
            let mut s = format!("# {} neighbors of degree {k}\n", rows.len());
            for (w, l) in &rows {
                s += &format!("{} profile {:?} in_t {l}\n", w.basis().to_json(), w.profile());
            }
            emit(out, &s)
        }
    }
}

fn cmd_stabilizer(out: &mut dyn Write, n: &str, q: u32, d: Option<usize>, enumerate: bool, bound: u64) -> Result<()> {
    let l: VertexLabel = n.parse()?;
    if let Some(d) = d {
        if d != l.dim() {
            return Err(BtqError::InvalidInput(format!("label has {} entries but --d is {d}", l.dim())));
        }
    }
    let order = stabilizer_order(&l, q)?;
    let mut s = format!("{order}\n");
    if enumerate {
        let elems = stabilizer_enumerate(&l, q, bound)?;
        for g in &elems {
            s += &g.to_json();
            s.push('\n');
        }
    }
    emit(out, &s)
}

fn cmd_reduce(input: &mut dyn Read, out: &mut dyn Write, path: &str, format: Format) -> Result<()> {
    let m = read_matrix(path, input)?;
    let red = reduce_matrix_to_t(&m)?;
    match format {
        Format::Json => emit(out, &pretty(&json!({"label": red.label.as_slice(), "witness": red.witness.to_literal()}))),
        _ => emit(out, &format!("label {}\nwitness {}\n", red.label, red.witness.to_json())),
    }
}

fn cmd_covolume(out: &mut dyn Write, d: usize, q: u32, max_n: i64, norm: Normalization) -> Result<()> {
    let closed = covolume_with(d, q, norm)?;
    let partial = covolume_partial_series(d, q, max_n, norm)?.pop().expect("non-empty");
    let gap = &closed - &partial;
    let bound = covolume_tail_bound(d, q, max_n, norm)?;
    let f = crate::hecke::scalar::rat_to_f64;
    emit(
        out,
        &format!(
            "closed_form {closed}\npartial {partial}\ngap {gap}\ngap_approx {:.6e}\ntail_bound_approx {:.6e}\n",
            f(&gap),
            f(&bound)
        ),
    )
}

fn cmd_hecke_check(out: &mut dyn Write, d: usize, q: u32, max_n: i64, trials: u64, seed: u64) -> Result<()> {
    let g = build_graph(d, q, max_n)?;
    let mut s = format!("# d={d} q={q} max_n1={max_n} vertices={}\n", g.vertices.len());
    let mut worst = 0usize;
    let mut checked = 0;
    for k in 0..trials {
        let f = DomainFunction::random_rational(&g, max_n, seed.wrapping_add(k));
        let rep = commutator_check(&g, &f)?;
        checked = rep.checked();
        worst += rep.residuals.values().filter(|r| **r != BigRational::from_integer(BigInt::from(0))).count();
    }
    s += &format!("commutator trials {trials} vertices {checked} nonzero_residuals {worst}\n");
    let mut ok = worst == 0;
    for i in [1, d - 1] {
        let (n, bad) = row_sum_check(&g, i)?;
        ok &= bad.is_empty();
        s += &format!("row_sum A_{i} vertices {n} failures {}\n", bad.len());
        if d == 2 {
            break;
        }
    }
    let support = max_n - 2;
    let mut adj_fail = 0;
    if support >= 0 {
        for k in 0..trials {
            let f = DomainFunction::random_rational(&g, support, seed.wrapping_add(1000 + 2 * k));
            let h = DomainFunction::random_rational(&g, support, seed.wrapping_add(1001 + 2 * k));
            let (lhs, rhs) = adjointness_check(&g, &f, &h)?;
            adj_fail += usize::from(lhs != rhs);
        }
    }
    ok &= adj_fail == 0;
    s += &format!("adjointness trials {trials} failures {adj_fail}\n");
    s += &format!("status {}\n", if ok { "ok" } else { "FAILED" });
    emit(out, &s)?;
    if ok {
        Ok(())
    } else {
        Err(BtqError::Internal("Hecke identities failed".into()))
    }
}

struct EigenOpts {
    d: usize,
    q: u32,
    max_n: i64,
    l2: bool,
    regression: bool,
    tol: f64,
    format: Format,
}

fn cmd_eigenvector(out: &mut dyn Write, o: &EigenOpts, l1: &str, l2: Option<&str>) -> Result<()> {
    check_prime(o.q)?;
    let exact = parse_rational(l1).ok().zip(l2.map(parse_rational).transpose().ok());
    match (o.d, exact) {
        (2, Some((a, _))) => eigen_d2_out(out, o, QuadExt::rational(a)),
        (2, None) => eigen_d2_out(out, o, complex_arg(l1)?),
        (3, Some((a, Some(b)))) => eigen_d3_out(out, o, a, b),
        (3, _) => {
            let b = l2.ok_or_else(|| BtqError::InvalidInput("d = 3 needs --lambda2".into()))?;
            eigen_d3_out(out, o, complex_arg(l1)?, complex_arg(b)?)
        }
        _ => Err(BtqError::InvalidInput("eigenvector supports d = 2 and d = 3".into())),
    }
}

/// A complex eigenvalue argument: a complex literal, or an exact rational taken as real.
fn complex_arg(s: &str) -> Result<Complex64> {
    match parse_rational(s) {
        Ok(r) => Ok(Complex64::new(crate::hecke::scalar::rat_to_f64(&r), 0.0)),
        Err(_) => parse_complex(s),
    }
}

fn l2_lines<S: Scalar>(o: &EigenOpts, f: &DomainFunction<S>) -> Result<Vec<(i64, String, String)>> {
    let g = build_graph(o.d, o.q, o.max_n)?;
    let rep = l2_partial_norm(&g, f, o.max_n)?;
    Ok(rep
        .shells
        .iter()
        .zip(&rep.cumulative)
        .enumerate()
        .map(|(i, (a, b))| (i as i64, a.to_text(), b.to_text()))
        .collect())
}

fn eigen_d3_out<S: Scalar>(out: &mut dyn Write, o: &EigenOpts, l1: S, l2: S) -> Result<()> {
    let params = HeckeParams::new(l1, l2, S::from_int(o.q as i64));
    let eig = eigenvector_d3(&params, o.max_n)?;
    let f = eig.to_domain_function();
    // Eigen-identity on the truncation, using the weighted graph.
    let g = build_graph(3, o.q, o.max_n)?;
    let mut identity_max = 0.0f64;
    for (i, lam) in [(1, &params.lambda1), (2, &params.lambda2)] {
        for r in eigen_identity_residuals(&g, i, &f, lam)?.values() {
            identity_max = identity_max.max(r.magnitude());
        }
    }
    let l2 = if o.l2 { Some(l2_lines(o, &f)?) } else { None };
    let reg = if o.regression { Some(closed_form_regression(&params, o.tol)?) } else { None };
    match o.format {
        Format::Json => {
            let mut v = json!({
                "d": 3,
                "q": o.q,
                "lambda1": params.lambda1.to_text(),
                "lambda2": params.lambda2.to_text(),
                "values": eig.values.iter().map(|(&(a, b), x)| json!({"label": [a, b, 0], "value": x.to_text()})).collect::<Vec<_>>(),
                "residuals": eig.residuals.iter().map(|((a, b), x)| json!({"label": [a, b, 0], "residual": x.to_text()})).collect::<Vec<_>>(),
                "eigen_identity_max_residual": identity_max,
            });
            if let Some(l2) = &l2 {
                v["l2"] = json!(l2.iter().map(|(n, s, c)| json!({"n1": n, "shell": s, "cumulative": c})).collect::<Vec<_>>());
            }
            if let Some(reg) = &reg {
                v["regression"] = json!(reg
                    .iter()
                    .map(|e| json!({"label": [e.n1, e.n2, 0], "agrees": e.agrees, "suspect": e.suspect, "expected": e.expected.to_text(), "computed": e.computed.to_text()}))
                    .collect::<Vec<_>>());
            }
            emit(out, &pretty(&v))
        }
        _ => {
            let mut s = format!("# d=3 q={} lambda1={} lambda2={}\n", o.q, params.lambda1.to_text(), params.lambda2.to_text());
            let width = eig.values.keys().map(|(a, b)| format!("{a}{b}0").len()).max().unwrap_or(3);
            for (&(a, b), x) in &eig.values {
                s += &format!("f({:<width$}) = {}\n", format!("{a}{b}0"), x.to_text());
            }
            for ((a, b), r) in &eig.residuals {
                s += &format!("residual({a}{b}0) = {}\n", r.to_text());
            }
            s += &format!("max_residual {:.3e}\neigen_identity_max_residual {identity_max:.3e}\n", eig.max_residual());
            if let Some(l2) = &l2 {
                for (n, sh, c) in l2 {
                    s += &format!("l2 shell {n} mass {sh} cumulative {c}\n");
                }
            }
            if let Some(reg) = &reg {
                for e in reg {
                    let tag = if e.agrees { "agree" } else { "DIFFER" };
                    let note = e.suspect.as_deref().map(|n| format!(" (suspect: {n})")).unwrap_or_default();
                    s += &format!("closed_form f({}{}0) {tag}{note}\n", e.n1, e.n2);
                }
            }
            emit(out, &s)
        }
    }
}

fn eigen_d2_out<S: Scalar>(out: &mut dyn Write, o: &EigenOpts, lambda: S) -> Result<()> {
    if o.max_n < 0 {
        return Err(BtqError::InvalidInput("max-n must be non-negative".into()));
    }
    let e = eigenvector_d2(&lambda, &S::from_int(o.q as i64), o.max_n as usize)?;
    let agrees = e.closed.as_ref().map(|_| e.agrees(o.tol));
    let l2 = if o.l2 {
        let g = build_graph(2, o.q, o.max_n)?;
        let f = DomainFunction::from_fn(&g, |l| e.recursion[l.n1() as usize].clone());
        Some(l2_lines(o, &f)?)
    } else {
        None
    };
    match o.format {
        Format::Json => {
            let mut v = json!({
                "d": 2,
                "q": o.q,
                "lambda": lambda.to_text(),
                "recursion": e.recursion.iter().map(Scalar::to_text).collect::<Vec<_>>(),
                "closed_form": e.closed.as_ref().map(|c| c.iter().map(Scalar::to_text).collect::<Vec<_>>()),
                "closed_form_agrees": agrees,
            });
            if let Some(l2) = &l2 {
                v["l2"] = json!(l2.iter().map(|(n, s, c)| json!({"n": n, "shell": s, "cumulative": c})).collect::<Vec<_>>());
            }
            emit(out, &pretty(&v))
        }
        _ => {
            let mut s = format!("# d=2 q={} lambda={}\n", o.q, lambda.to_text());
            for (n, x) in e.recursion.iter().enumerate() {
                s += &format!("f_{n} = {}\n", x.to_text());
            }
            s += &match agrees {
                Some(true) => "closed_form agrees\n".to_string(),
                Some(false) => "closed_form DIFFERS\n".to_string(),
                None => "closed_form unavailable (degenerate or irrational discriminant); recursion only\n".to_string(),
            };
            if let Some(l2) = &l2 {
                for (n, sh, c) in l2 {
                    s += &format!("l2 shell {n} mass {sh} cumulative {c}\n");
                }
            }
            emit(out, &s)
        }
    }
}

fn cmd_distance(out: &mut dyn Write, n: &str, m: &str, q: u32, radius: usize) -> Result<()> {
    let (a, b) = (parse_ints(n)?, parse_ints(m)?);
    let x = BuildingVertex::diagonal(&a, q)?;
    let y = BuildingVertex::diagonal(&b, q)?;
    let show = |r: Reach| match r {
        Reach::Distance(k) => k.to_string(),
        Reach::BeyondRadius => format!("beyond radius {radius}"),
    };
    let bfs = bfs_distance(&x, &y, radius)?;
    let bfs1 = bfs_color1_distance(&x, &y, radius)?;
    let (f_all, f_one) = label_distance_formulas(&a, &b)?;
    let mut s = format!(
        "bfs_distance {}\nbfs_color1_distance {}\nformula_distance {f_all}\nformula_color1_distance {f_one}\n",
        show(bfs),
        show(bfs1)
    );
    let disagree = |r: Reach, f: i64| matches!(r, Reach::Distance(k) if k as i64 != f);
    if disagree(bfs, f_all) || disagree(bfs1, f_one) {
        s += "note: the label formulas disagree with breadth-first search; the search counts edges and is authoritative\n";
    }
    emit(out, &s)
}
