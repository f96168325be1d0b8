//! Simultaneous eigenfunctions on T: the d = 3 recursion with its double-definition residuals
//! and closed-form regression, and the d = 2 recursion against its root-sum closed form.

use std::collections::BTreeMap;

use super::expr::{Bindings, Expr};
use super::scalar::Scalar;
use super::DomainFunction;
use crate::domain::VertexLabel;
use crate::error::{invalid, BtqError, Result};

/// Eigenvalues and the (possibly non-integral, for symbolic checks) parameter q, with the
/// abbreviations T3 = q²+q+1 and R = q+1.
#[derive(Clone, Debug)]
pub struct HeckeParams<S> {
    pub lambda1: S,
    pub lambda2: S,
    pub q: S,
}

impl<S: Scalar> HeckeParams<S> {
    pub fn new(lambda1: S, lambda2: S, q: S) -> Self {
        HeckeParams { lambda1, lambda2, q }
    }

    pub fn t3(&self) -> S {
        self.q.clone() * self.q.clone() + self.q.clone() + S::one()
    }

    pub fn r(&self) -> S {
        self.q.clone() + S::one()
    }

    fn bindings(&self) -> Bindings<S> {
        Bindings { l1: self.lambda1.clone(), l2: self.lambda2.clone(), q: self.q.clone(), t: self.t3(), r: self.r() }
    }
}

/// Output of the d = 3 recursion: f on {n1 ≥ n2 ≥ 0, n1 ≤ max_n1} keyed by (n1, n2), and for
/// every vertex with a second defining relation, that relation's value minus f there.
#[derive(Clone, Debug)]
pub struct EigenvectorD3<S> {
    pub max_n1: i64,
    pub values: BTreeMap<(i64, i64), S>,
    pub residuals: Vec<((i64, i64), S)>,
}

impl<S: Scalar> EigenvectorD3<S> {
    pub fn get(&self, n1: i64, n2: i64) -> Option<&S> {
        self.values.get(&(n1, n2))
    }

    pub fn to_domain_function(&self) -> DomainFunction<S> {
        let values = self
            .values
            .iter()
            .map(|(&(a, b), v)| (VertexLabel::new(vec![a, b, 0]).expect("label"), Some(v.clone())))
            .collect();
        DomainFunction { d: 3, max_n1: self.max_n1, values }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| r.magnitude()).fold(0.0, f64::max)
    }
}

/// Evaluation order: diagonals n1 + n2 ascending, descending n2 within a diagonal. Every
/// defining relation only reads lower diagonals.
fn order(max_n1: i64) -> Vec<(i64, i64)> {
    let mut v: Vec<(i64, i64)> = (0..=max_n1).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
    v.sort_by_key(|&(a, b)| (a + b, -b));
    v
}

/// Computes the simultaneous eigenfunction of A_1, A_2 with f(000) = 1. Each vertex is
/// defined by its first relation below; where a second relation also determines it, the
/// difference is recorded as a residual (identically zero in exact arithmetic).
///
/// * f(100) = λ1/T3, f(110) = λ2/T3
/// * f(n00) = λ1 f((n−1)00) − Rq f((n−1)10)
/// * f(nn0) = λ2 f((n−1)(n−1)0) − qR f((n−1)(n−2)0)
/// * f(n10) = (λ2 f((n−1)00) − q² f((n−2)00))/R
/// * f(n(n−1)0) = (λ1 f((n−1)(n−1)0) − q² f((n−2)(n−2)0))/R
/// * otherwise f(n1n20) = λ2 f((n1−1)(n2−1)0) − q f((n1−1)(n2−2)0) − q² f((n1−2)(n2−1)0)
pub fn eigenvector_d3<S: Scalar>(params: &HeckeParams<S>, max_n1: i64) -> Result<EigenvectorD3<S>> {
    if max_n1 < 2 {
        return invalid("eigenvector_d3 needs max_n1 ≥ 2");
    }
    let (l1, l2, q) = (params.lambda1.clone(), params.lambda2.clone(), params.q.clone());
    let (t3, r) = (params.t3(), params.r());
    if t3 == S::zero() || r == S::zero() {
        return invalid("q²+q+1 and q+1 must be non-zero");
    }
    let q2 = q.clone() * q.clone();
    let mut f: BTreeMap<(i64, i64), S> = BTreeMap::new();
    let get = |f: &BTreeMap<(i64, i64), S>, a: i64, b: i64| -> S {
        f.get(&(a, b)).cloned().unwrap_or_else(|| panic!("f({a}{b}0) used before it is defined"))
    };
    for (a, b) in order(max_n1) {
        let v = match (a, b) {
            (0, 0) => S::one(),
            (1, 0) => l1.clone() / t3.clone(),
            (1, 1) => l2.clone() / t3.clone(),
            (_, 0) => l1.clone() * get(&f, a - 1, 0) - r.clone() * q.clone() * get(&f, a - 1, 1),
            _ if a == b => l2.clone() * get(&f, a - 1, a - 1) - q.clone() * r.clone() * get(&f, a - 1, a - 2),
            (_, 1) => (l2.clone() * get(&f, a - 1, 0) - q2.clone() * get(&f, a - 2, 0)) / r.clone(),
            _ if b == a - 1 => (l1.clone() * get(&f, a - 1, a - 1) - q2.clone() * get(&f, a - 2, a - 2)) / r.clone(),
            _ => l2.clone() * get(&f, a - 1, b - 1) - q.clone() * get(&f, a - 1, b - 2) - q2.clone() * get(&f, a - 2, b - 1),
        };
        f.insert((a, b), v);
    }
    let mut residuals = Vec::new();
    for (a, b) in order(max_n1) {
        let second = if b == 1 && a >= 3 {
            l1.clone() * get(&f, a - 1, 1) - q.clone() * get(&f, a - 1, 2) - q2.clone() * get(&f, a - 2, 0)
        } else if b == a - 1 && a >= 3 {
            l2.clone() * get(&f, a - 1, a - 2) - q.clone() * get(&f, a - 1, a - 3) - q2.clone() * get(&f, a - 2, a - 2)
        } else if a - b >= 2 && b >= 2 {
            l1.clone() * get(&f, a - 1, b) - q.clone() * get(&f, a - 1, b + 1) - q2.clone() * get(&f, a - 2, b - 1)
        } else {
            continue;
        };
        residuals.push(((a, b), second - get(&f, a, b)));
    }
    Ok(EigenvectorD3 { max_n1, values: f, residuals })
}

/// A transcribed closed form for one vertex.
#[derive(Clone, Debug)]
pub struct ClosedForm {
    pub n1: i64,
    pub n2: i64,
    pub source: String,
    pub expr: Expr,
    /// `None` for trusted entries; the note for entries whose transcription is doubtful.
    pub suspect: Option<String>,
}

const CLOSED_FORMS: &str = include_str!("../../data/eigen_d3_closed_forms.txt");

/// Parses a closed-form table in the `label | expression | flag` format.
pub fn parse_closed_forms(text: &str) -> Result<Vec<ClosedForm>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| BtqError::Parse(format!("closed forms line {}: {m}", no + 1));
        let parts: Vec<&str> = line.split('|').map(str::trim).collect();
        let [lab, src, flag] = parts[..] else {
            return Err(bad("expected three '|'-separated fields"));
        };
        let digits: Vec<i64> = lab.chars().map(|c| c.to_digit(10).map(i64::from)).collect::<Option<_>>().ok_or_else(|| bad("label"))?;
        let [n1, n2] = digits[..] else {
            return Err(bad("label must be two digits"));
        };
        let suspect = match flag {
            "ok" => None,
            s if s.starts_with("suspect:") => Some(s["suspect:".len()..].trim().to_string()),
            _ => return Err(bad("flag must be \"ok\" or \"suspect: ...\"")),
        };
        out.push(ClosedForm { n1, n2, source: src.to_string(), expr: Expr::parse(src)?, suspect });
    }
    Ok(out)
}

/// The bundled d = 3 closed forms f(000) … f(550).
pub fn closed_forms_d3() -> Vec<ClosedForm> {
    parse_closed_forms(CLOSED_FORMS).expect("bundled closed-form table parses")
}

#[derive(Clone, Debug)]
pub struct RegressionEntry<S> {
    pub n1: i64,
    pub n2: i64,
    pub suspect: Option<String>,
    pub expected: S,
    pub computed: S,
    pub agrees: bool,
}

/// Compares the recursion against every bundled closed form at the given parameters.
pub fn closed_form_regression<S: Scalar>(params: &HeckeParams<S>, tol: f64) -> Result<Vec<RegressionEntry<S>>> {
    let forms = closed_forms_d3();
    let max = forms.iter().map(|c| c.n1).max().unwrap_or(2).max(2);
    let eig = eigenvector_d3(params, max)?;
    let b = params.bindings();
    Ok(forms
        .into_iter()
        .map(|c| {
            let expected = c.expr.eval(&b);
            let computed = eig.get(c.n1, c.n2).cloned().expect("closed forms lie inside the recursion range");
            let agrees = computed.agrees(&expected, tol);
            RegressionEntry { n1: c.n1, n2: c.n2, suspect: c.suspect, expected, computed, agrees }
        })
        .collect())
}

/// d = 2: f_0 = 1, f_1 = λ/(q+1), f_{n+1} = λ f_n − q f_{n−1}, and when λ² ≠ 4q and √(λ²−4q)
/// exists in the backend also the closed form f_n = C r_1^n + D r_2^n with r_{1,2} the roots
/// of r² − λr + q, C = (λ − (q+1) r_2)/((q+1)√(λ²−4q)) and D = 1 − C.
#[derive(Clone, Debug)]
pub struct EigenvectorD2<S> {
    pub recursion: Vec<S>,
    pub closed: Option<Vec<S>>,
}

impl<S: Scalar> EigenvectorD2<S> {
    /// True if the closed form exists and agrees with the recursion termwise.
    pub fn agrees(&self, tol: f64) -> bool {
        self.closed
            .as_ref()
            .is_some_and(|c| c.iter().zip(&self.recursion).all(|(x, y)| y.agrees(x, tol)))
    }

    /// max_n |closed_n − recursion_n| / max(1, |recursion_n|).
    pub fn max_relative_discrepancy(&self) -> Option<f64> {
        self.closed.as_ref().map(|c| {
            c.iter()
                .zip(&self.recursion)
                .map(|(x, y)| (x.clone() - y.clone()).magnitude() / y.magnitude().max(1.0))
                .fold(0.0, f64::max)
        })
    }
}

pub fn eigenvector_d2<S: Scalar>(lambda: &S, q: &S, max_n: usize) -> Result<EigenvectorD2<S>> {
    let r = q.clone() + S::one();
    if r == S::zero() {
        return invalid("q + 1 must be non-zero");
    }
    let mut rec = vec![S::one()];
    if max_n >= 1 {
        rec.push(lambda.clone() / r.clone());
    }
    for n in 1..max_n {
        let next = lambda.clone() * rec[n].clone() - q.clone() * rec[n - 1].clone();
        rec.push(next);
    }
    let disc = lambda.clone() * lambda.clone() - S::from_int(4) * q.clone();
    let closed = if disc == S::zero() {
        None
    } else {
        disc.sqrt().map(|s| {
            let half = S::one() / S::from_int(2);
            let r1 = (lambda.clone() + s.clone()) * half.clone();
            let r2 = (lambda.clone() - s.clone()) * half;
            let c = (lambda.clone() - r.clone() * r2.clone()) / (r.clone() * s);
            let d = S::one() - c.clone();
            let (mut p1, mut p2) = (S::one(), S::one());
            let mut out = Vec::with_capacity(max_n + 1);
            for _ in 0..=max_n {
                out.push(c.clone() * p1.clone() + d.clone() * p2.clone());
                p1 = p1 * r1.clone();
                p2 = p2 * r2.clone();
            }
            out
        })
    };
    Ok(EigenvectorD2 { recursion: rec, closed })
}

#[cfg(test)]
mod tests {
    use super::super::scalar::QuadExt;
    use super::*;
    use num_complex::Complex64;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn low_values() {
        let p = HeckeParams::new(rat(3, 1), rat(5, 1), rat(2, 1));
        let e = eigenvector_d3(&p, 3).unwrap();
        assert_eq!(e.get(0, 0), Some(&rat(1, 1)));
        assert_eq!(e.get(1, 0), Some(&rat(3, 7)));
        // f(210) = (λ1λ2 − q²T3)/(T3·R)
        assert_eq!(e.get(2, 1), Some(&rat(15 - 28, 21)));
        assert!(e.residuals.iter().all(|(_, r)| *r == rat(0, 1)));
    }

    #[test]
    fn constant_eigenvalues_give_one() {
        let p = HeckeParams::new(rat(13, 1), rat(13, 1), rat(3, 1));
        let e = eigenvector_d3(&p, 8).unwrap();
        assert!(e.values.values().all(|v| *v == rat(1, 1)));
    }

    #[test]
    fn table_parses_and_matches() {
        let forms = closed_forms_d3();
        assert_eq!(forms.len(), 21);
        assert_eq!(forms.iter().filter(|c| c.suspect.is_some()).count(), 2);
        let p = HeckeParams::new(rat(2, 3), rat(-7, 5), rat(11, 4));
        assert!(closed_form_regression(&p, 0.0).unwrap().iter().all(|e| e.agrees));
        assert!(parse_closed_forms("1 | 1 | ok").is_err());
        assert!(parse_closed_forms("10 | l1 | maybe").is_err());
    }

    #[test]
    fn d2_backends() {
        let e = eigenvector_d2(&QuadExt::from_int(5), &QuadExt::from_int(3), 20).unwrap();
        assert!(e.agrees(0.0));
        let c = eigenvector_d2(&Complex64::new(1.0, 0.5), &Complex64::new(2.0, 0.0), 20).unwrap();
        assert!(c.agrees(1e-9));
        let deg = eigenvector_d2(&rat(4, 1), &rat(4, 1), 5).unwrap();
        assert!(deg.closed.is_none());
        assert_eq!(deg.recursion[1], rat(4, 5));
    }
}
