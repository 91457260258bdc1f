//! Exact admissibility checks for Sobolev exponent pairs.
//!
//! Every checker evaluates the hypothesis lists of a fixed sequence of
//! candidate theorems in exact rational arithmetic and returns a [`Verdict`]
//! carrying the evaluated conditions. `NotGuaranteed` only means that no
//! candidate theorem applies; the conditions are sufficient, not necessary.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExponentError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("integrability exponent p = {0} must satisfy p > 1")]
    IntegrabilityOutOfRange(String),
    #[error("p = infinity is representable but not accepted by the theorem checkers")]
    InfiniteIntegrability,
    #[error("domain classes differ: {0} vs {1}")]
    DomainMismatch(DomainClass, DomainClass),
    #[error("operation requires domain class {expected}, got {got}")]
    WrongDomainClass {
        expected: DomainClass,
        got: DomainClass,
    },
    #[error("derivative order must be at least 1")]
    InvalidOrder,
    #[error("cannot parse '{0}' as an exact rational")]
    Parse(String),
}

/// Parses `"a/b"`, an integer, or a finite decimal such as `"-0.125"` or
/// `"2.5e-1"` into an exact rational. No floating point is involved.
pub fn parse_rational(text: &str) -> Result<Rational, ExponentError> {
    let err = || ExponentError::Parse(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(err)?;
        let den = parse_decimal(den.trim()).ok_or_else(err)?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(num / den);
    }
    parse_decimal(t).ok_or_else(err)
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(numer);
    if scale >= 0 {
        r *= Rational::from_integer(num::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num::pow(ten, (-scale) as usize));
    }
    Some(if negative { -r } else { r })
}

fn q(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Integrability exponent. Infinity is kept for classification only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Integrability {
    Finite(Rational),
    Infinite,
}

impl fmt::Display for Integrability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Integrability::Finite(p) => write!(f, "{}", fmt_rational(p)),
            Integrability::Infinite => write!(f, "inf"),
        }
    }
}

/// Smoothness `s` (any rational) and integrability `p` in `(1, inf]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exponent {
    s: Rational,
    p: Integrability,
}

impl Exponent {
    pub fn new(s: Rational, p: Rational) -> Result<Self, ExponentError> {
        if p <= Rational::one() {
            return Err(ExponentError::IntegrabilityOutOfRange(fmt_rational(&p)));
        }
        Ok(Exponent {
            s,
            p: Integrability::Finite(p),
        })
    }

    pub fn with_infinite_p(s: Rational) -> Self {
        Exponent {
            s,
            p: Integrability::Infinite,
        }
    }

    /// Parses `s` and `p` from text; `p` may be `inf`.
    pub fn parse(s: &str, p: &str) -> Result<Self, ExponentError> {
        let s = parse_rational(s)?;
        match p.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::with_infinite_p(s)),
            other => Exponent::new(s, parse_rational(other)?),
        }
    }

    /// Convenience constructor from small integers: `s = sn/sd`, `p = pn/pd`.
    pub fn from_ratios(sn: i64, sd: i64, pn: i64, pd: i64) -> Result<Self, ExponentError> {
        Exponent::new(q(sn) / q(sd), q(pn) / q(pd))
    }

    pub fn s(&self) -> &Rational {
        &self.s
    }

    pub fn p(&self) -> &Integrability {
        &self.p
    }

    pub fn finite_p(&self) -> Result<&Rational, ExponentError> {
        match &self.p {
            Integrability::Finite(p) => Ok(p),
            Integrability::Infinite => Err(ExponentError::InfiniteIntegrability),
        }
    }

    /// `floor(s)`.
    pub fn floor(&self) -> BigInt {
        self.s.floor().to_integer()
    }

    /// `s - floor(s)`, in `[0, 1)`.
    pub fn fractional_part(&self) -> Rational {
        &self.s - self.s.floor()
    }

    /// True when `s - 1/p` is an integer (fractional part of `s` equals `1/p`).
    pub fn is_exceptional(&self) -> bool {
        match &self.p {
            Integrability::Finite(p) => (&self.s - p.recip()).is_integer(),
            Integrability::Infinite => self.s.is_integer(),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_rational(&self.s), self.p)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            s: String,
            p: String,
        }
        Repr {
            s: fmt_rational(&self.s),
            p: self.p.to_string(),
        }
        .serialize(ser)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainClass {
    FullSpace,
    BoundedLipschitz,
    GeneralOpen,
    CompactSupportInOpen,
    CompactManifold,
}

impl DomainClass {
    fn is_open_subset(self) -> bool {
        !matches!(self, DomainClass::CompactManifold)
    }
}

impl fmt::Display for DomainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainClass::FullSpace => "full-space",
            DomainClass::BoundedLipschitz => "bounded-lipschitz",
            DomainClass::GeneralOpen => "general-open",
            DomainClass::CompactSupportInOpen => "compact-support-in-open",
            DomainClass::CompactManifold => "compact-manifold",
        };
        f.write_str(s)
    }
}

impl FromStr for DomainClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "full-space" | "full" | "rn" => DomainClass::FullSpace,
            "bounded-lipschitz" | "lipschitz" => DomainClass::BoundedLipschitz,
            "general-open" | "open" => DomainClass::GeneralOpen,
            "compact-support-in-open" | "compact-support" => DomainClass::CompactSupportInOpen,
            "compact-manifold" | "manifold" => DomainClass::CompactManifold,
            other => return Err(format!("unknown domain class '{other}'")),
        })
    }
}

/// `W^{s,p}` on a domain of the given class in dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpaceSpec {
    pub exponent: Exponent,
    pub n: u32,
    pub domain: DomainClass,
}

impl SpaceSpec {
    pub fn new(exponent: Exponent, n: u32, domain: DomainClass) -> Result<Self, ExponentError> {
        if n == 0 {
            return Err(ExponentError::ZeroDimension);
        }
        Ok(SpaceSpec {
            exponent,
            n,
            domain,
        })
    }

    fn s(&self) -> &Rational {
        &self.exponent.s
    }

    fn p(&self) -> Result<&Rational, ExponentError> {
        self.exponent.finite_p()
    }

    fn n(&self) -> Rational {
        q(self.n as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    /// lhs is an integer (rhs unused)
    #[serde(rename = "in Z")]
    Integer,
    /// lhs is not an integer (rhs unused)
    #[serde(rename = "not in Z")]
    NotInteger,
    /// lhs is a nonnegative integer (rhs unused)
    #[serde(rename = "in N0")]
    Natural,
    /// lhs is not one of -1, -2, -3, ... (rhs unused)
    #[serde(rename = "not in Z<0")]
    NotNegativeInteger,
}

impl Relation {
    pub fn evaluate(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
            Relation::Le => lhs <= rhs,
            Relation::Lt => lhs < rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ne => lhs != rhs,
            Relation::Integer => lhs.is_integer(),
            Relation::NotInteger => !lhs.is_integer(),
            Relation::Natural => lhs.is_integer() && !lhs.is_negative(),
            Relation::NotNegativeInteger => !(lhs.is_integer() && lhs.is_negative()),
        }
    }
}

fn ser_rational<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

/// One evaluated hypothesis: `lhs relation rhs`, with exact operands.
/// Boolean side conditions (domain class requirements) are encoded as
/// `indicator = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub theorem: String,
    pub label: String,
    pub text: String,
    #[serde(serialize_with = "ser_rational")]
    pub lhs: Rational,
    pub relation: Relation,
    #[serde(serialize_with = "ser_rational")]
    pub rhs: Rational,
    pub satisfied: bool,
}

impl Condition {
    /// Re-evaluates the relation from the stored operands.
    pub fn recheck(&self) -> bool {
        self.relation.evaluate(&self.lhs, &self.rhs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictResult {
    Admissible,
    NotGuaranteed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub result: VerdictResult,
    /// Theorem that certified admissibility; `None` when nothing applies.
    pub theorem_tag: Option<String>,
    /// Admissible: every condition of the certifying theorem.
    /// NotGuaranteed: the first failing condition of each candidate.
    pub conditions: Vec<Condition>,
    /// Candidates in the order they were tried.
    pub tried: Vec<String>,
    /// Later candidates whose hypotheses also hold.
    pub also_admissible: Vec<String>,
    /// Resulting space, for checks that produce one (differentiation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Exponent>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn is_admissible(&self) -> bool {
        self.result == VerdictResult::Admissible
    }
}

struct Candidate {
    tag: String,
    conditions: Vec<Condition>,
    note: Option<String>,
}

impl Candidate {
    fn new(tag: &str) -> Self {
        Candidate {
            tag: tag.to_string(),
            conditions: Vec::new(),
            note: None,
        }
    }

    fn cond(mut self, label: &str, text: &str, lhs: Rational, rel: Relation, rhs: Rational) -> Self {
        let satisfied = rel.evaluate(&lhs, &rhs);
        self.conditions.push(Condition {
            theorem: self.tag.clone(),
            label: label.to_string(),
            text: text.to_string(),
            lhs,
            relation: rel,
            rhs,
            satisfied,
        });
        self
    }

    fn flag(self, label: &str, text: &str, holds: bool) -> Self {
        let indicator = if holds { q(1) } else { q(0) };
        self.cond(label, text, indicator, Relation::Eq, q(1))
    }

    fn with(mut self, extra: Vec<Condition>) -> Self {
        for mut c in extra {
            c.theorem = self.tag.clone();
            self.conditions.push(c);
        }
        self
    }

    fn note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }

    fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }
}

fn decide(candidates: Vec<Candidate>, target: Option<Exponent>) -> Verdict {
    let tried: Vec<String> = candidates.iter().map(|c| c.tag.clone()).collect();
    let winner = candidates.iter().position(Candidate::holds);
    match winner {
        Some(i) => {
            let also = candidates[i + 1..]
                .iter()
                .filter(|c| c.holds())
                .map(|c| c.tag.clone())
                .collect();
            Verdict {
                result: VerdictResult::Admissible,
                theorem_tag: Some(candidates[i].tag.clone()),
                conditions: candidates[i].conditions.clone(),
                tried,
                also_admissible: also,
                target,
                notes: candidates[i].note.iter().cloned().collect(),
            }
        }
        None => Verdict {
            result: VerdictResult::NotGuaranteed,
            theorem_tag: None,
            conditions: candidates
                .iter()
                .filter_map(|c| c.conditions.iter().find(|k| !k.satisfied).cloned())
                .collect(),
            tried,
            also_admissible: Vec::new(),
            target,
            notes: Vec::new(),
        },
    }
}

fn finite_ps<'a>(specs: &[&'a SpaceSpec]) -> Result<Vec<&'a Rational>, ExponentError> {
    specs.iter().map(|s| s.p()).collect()
}

fn same_dimension(specs: &[&SpaceSpec]) -> Result<(), ExponentError> {
    for w in specs.windows(2) {
        if w[0].n != w[1].n {
            return Err(ExponentError::DimensionMismatch(w[0].n, w[1].n));
        }
    }
    Ok(())
}

fn same_domain(specs: &[&SpaceSpec]) -> Result<(), ExponentError> {
    for w in specs.windows(2) {
        if w[0].domain != w[1].domain {
            return Err(ExponentError::DomainMismatch(w[0].domain, w[1].domain));
        }
    }
    Ok(())
}

/// Decides `W^{s,p} -> W^{t,q}` for the domain class shared by both specs.
///
/// * full space: `p <= q`, `t <= s`, `s - n/p >= t - n/q`;
/// * bounded Lipschitz: `0 <= t <= s`, `s - n/p >= t - n/q` (no `p <= q`);
/// * general open: the same-`p` items (integer orders, `s < 1`, equal
///   floors, integer `t`);
/// * compact support in an open set: the `p <= q` rule with `0 <= t`;
/// * compact manifold: the full-space or ball rule, provided neither order is
///   a noninteger below `-1`.
pub fn check_embedding(from: &SpaceSpec, to: &SpaceSpec) -> Result<Verdict, ExponentError> {
    same_dimension(&[from, to])?;
    same_domain(&[from, to])?;
    let ps = finite_ps(&[from, to])?;
    let (p, qq) = (ps[0].clone(), ps[1].clone());
    let (s, t) = (from.s().clone(), to.s().clone());
    let n = from.n();
    let lhs = &s - &n / &p;
    let rhs = &t - &n / &qq;
    let sobolev_gap = "s - n/p >= t - n/q";

    let full_space = |tag: &str| {
        Candidate::new(tag)
            .cond("p<=q", "p <= q", p.clone(), Relation::Le, qq.clone())
            .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
            .cond("gap", sobolev_gap, lhs.clone(), Relation::Ge, rhs.clone())
    };
    let lipschitz = |tag: &str| {
        Candidate::new(tag)
            .cond("0<=t", "0 <= t", t.clone(), Relation::Ge, q(0))
            .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
            .cond("gap", sobolev_gap, lhs.clone(), Relation::Ge, rhs.clone())
    };
    let same_p = |tag: &str| Candidate::new(tag).cond("p=q", "p = q", p.clone(), Relation::Eq, qq.clone());

    let candidates = match from.domain {
        DomainClass::FullSpace => vec![full_space("Embedding Thm I")],
        DomainClass::BoundedLipschitz => vec![lipschitz("Embedding Thm III")],
        DomainClass::GeneralOpen => vec![
            same_p("Embedding Thm IV.3")
                .cond("s in N0", "s is a nonnegative integer", s.clone(), Relation::Natural, q(0))
                .cond("t in N0", "t is a nonnegative integer", t.clone(), Relation::Natural, q(0))
                .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone()),
            same_p("Embedding Thm IV.4")
                .cond("0<=t", "0 <= t", t.clone(), Relation::Ge, q(0))
                .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
                .cond("s<1", "s < 1", s.clone(), Relation::Lt, q(1)),
            same_p("Embedding Thm IV.5")
                .cond("0<=t", "0 <= t", t.clone(), Relation::Ge, q(0))
                .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
                .cond(
                    "floor",
                    "floor(s) = floor(t)",
                    s.floor(),
                    Relation::Eq,
                    t.floor(),
                ),
            same_p("Embedding Thm IV.6")
                .cond("0<=t", "0 <= t", t.clone(), Relation::Ge, q(0))
                .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
                .cond("t in N0", "t is a nonnegative integer", t.clone(), Relation::Natural, q(0)),
        ],
        DomainClass::CompactSupportInOpen => vec![Candidate::new("Embedding Thm IV.2")
            .cond("p<=q", "p <= q", p.clone(), Relation::Le, qq.clone())
            .cond("0<=t", "0 <= t", t.clone(), Relation::Ge, q(0))
            .cond("t<=s", "t <= s", t.clone(), Relation::Le, s.clone())
            .cond("gap", sobolev_gap, lhs.clone(), Relation::Ge, rhs.clone())],
        DomainClass::CompactManifold => {
            let regular = |x: &Rational| !(x < &q(-1) && !x.is_integer());
            let guard = |c: Candidate| {
                c.flag("s regular", "s is not a noninteger less than -1", regular(&s))
                    .flag("t regular", "t is not a noninteger less than -1", regular(&t))
            };
            vec![
                guard(Candidate::new("Manifold embedding via Embedding Thm I")).with(
                    full_space("").conditions,
                ),
                guard(Candidate::new("Manifold embedding via Embedding Thm III on balls"))
                    .with(lipschitz("").conditions),
            ]
        }
    };
    Ok(decide(candidates, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointwiseMode {
    Algebra,
    Linfty,
    Composition,
}

impl FromStr for PointwiseMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "algebra" => PointwiseMode::Algebra,
            "linfty" | "l-infinity" => PointwiseMode::Linfty,
            "composition" => PointwiseMode::Composition,
            other => return Err(format!("unknown pointwise mode '{other}'")),
        })
    }
}

fn rn_or_lipschitz(d: DomainClass) -> bool {
    matches!(d, DomainClass::FullSpace | DomainClass::BoundedLipschitz)
}

/// Banach algebra / `L^inf` embedding (`sp > n` on the full space or a
/// bounded Lipschitz domain, plus `sp > n` on a compact manifold for the
/// `L^inf` mode) and composition with smooth `F`, `F(0) = 0`
/// (`s >= 1`, `sp > n`, full space).
pub fn check_pointwise(spec: &SpaceSpec, mode: PointwiseMode) -> Result<Verdict, ExponentError> {
    let p = spec.p()?.clone();
    let s = spec.s().clone();
    let sp = &s * &p;
    let n = spec.n();
    let domain_text = "domain is the full space or bounded Lipschitz";
    let candidates = match mode {
        PointwiseMode::Algebra => vec![Candidate::new("Thm 3.3 (Banach algebra)")
            .flag("domain", domain_text, rn_or_lipschitz(spec.domain))
            .cond("sp>n", "s*p > n", sp, Relation::Gt, n)],
        PointwiseMode::Linfty => vec![
            Candidate::new("Thm 3.3 (L-infinity embedding)")
                .flag("domain", domain_text, rn_or_lipschitz(spec.domain))
                .cond("sp>n", "s*p > n", sp.clone(), Relation::Gt, n.clone()),
            Candidate::new("Manifold L-infinity embedding")
                .flag(
                    "domain",
                    "domain is a compact manifold",
                    spec.domain == DomainClass::CompactManifold,
                )
                .cond("sp>n", "s*p > n", sp, Relation::Gt, n),
        ],
        PointwiseMode::Composition => vec![Candidate::new("Composition corollary (sp > n)")
            .flag("domain", "domain is the full space", spec.domain == DomainClass::FullSpace)
            .cond("s>=1", "s >= 1", s, Relation::Ge, q(1))
            .cond("sp>n", "s*p > n", sp, Relation::Gt, n)],
    };
    Ok(decide(candidates, None))
}

/// Pointwise multiplication `W^{s1,p1} x W^{s2,p2} -> W^{s,p}`.
///
/// Candidates, in order: the Banach algebra shortcut (all three spaces equal,
/// `sp > n`), Thm 4.6 (both strictness variants), Thm 4.1, Thm 4.3 and
/// Thm 4.5. Each theorem's hypothesis list is encoded as stated, without
/// harmonizing their side conditions. On a bounded Lipschitz domain the
/// whole-space theorems are transferred when every space satisfies
/// `s - 1/p` not in `{-1, -2, ...}`.
pub fn check_multiplication(
    a: &SpaceSpec,
    b: &SpaceSpec,
    target: &SpaceSpec,
) -> Result<Verdict, ExponentError> {
    same_dimension(&[a, b, target])?;
    same_domain(&[a, b, target])?;
    let ps = finite_ps(&[a, b, target])?;
    let (p1, p2, p) = (ps[0].clone(), ps[1].clone(), ps[2].clone());
    let (s1, s2, s) = (a.s().clone(), b.s().clone(), target.s().clone());
    let n = target.n();
    let domain = target.domain;

    let domain_flag = |c: Candidate| {
        c.flag(
            "domain",
            "domain is the full space or bounded Lipschitz",
            rn_or_lipschitz(domain),
        )
    };
    let transfer = |c: Candidate| {
        if domain != DomainClass::BoundedLipschitz {
            return c;
        }
        let mut c = c;
        for (name, spec) in [("a", a), ("b", b), ("target", target)] {
            let pr = spec.p().expect("checked finite").clone();
            c = c.cond(
                &format!("transfer {name}"),
                &format!("Lipschitz transfer: s - 1/p of {name} not in {{-1, -2, ...}}"),
                spec.s() - pr.recip(),
                Relation::NotNegativeInteger,
                q(0),
            );
        }
        c
    };

    let gap1 = &s1 - &s;
    let gap2 = &s2 - &s;
    let rhs1 = &n * (p1.recip() - p.recip());
    let rhs2 = &n * (p2.recip() - p.recip());
    let total = &s1 + &s2 - &s;
    let total_rhs = &n * (p1.recip() + p2.recip() - p.recip());
    let dual_lhs = &s1 + &s2;
    let dual_rhs = &n * (p1.recip() + p2.recip() - q(1));
    let min_s = if s1 < s2 { s1.clone() } else { s2.clone() };

    let item_i = |c: Candidate| {
        c.cond("(i) s1>=s", "s1 >= s", s1.clone(), Relation::Ge, s.clone())
            .cond("(i) s2>=s", "s2 >= s", s2.clone(), Relation::Ge, s.clone())
    };
    let item_iii = |c: Candidate, rel: Relation| {
        let sym = if rel == Relation::Gt { ">" } else { ">=" };
        c.cond(
            "(iii) i=1",
            &format!("s1 - s {sym} n(1/p1 - 1/p)"),
            gap1.clone(),
            rel,
            rhs1.clone(),
        )
        .cond(
            "(iii) i=2",
            &format!("s2 - s {sym} n(1/p2 - 1/p)"),
            gap2.clone(),
            rel,
            rhs2.clone(),
        )
    };
    let item_iv = |c: Candidate, rel: Relation| {
        let sym = if rel == Relation::Gt { ">" } else { ">=" };
        c.cond(
            "(iv)",
            &format!("s1 + s2 - s {sym} n(1/p1 + 1/p2 - 1/p)"),
            total.clone(),
            rel,
            total_rhs.clone(),
        )
    };
    let iv_nonneg = |c: Candidate| {
        c.cond(
            "(iv) rhs>=0",
            "n(1/p1 + 1/p2 - 1/p) >= 0",
            total_rhs.clone(),
            Relation::Ge,
            q(0),
        )
    };
    let p_order = |c: Candidate| {
        c.cond("p1<=p", "p1 <= p", p1.clone(), Relation::Le, p.clone())
            .cond("p2<=p", "p2 <= p", p2.clone(), Relation::Le, p.clone())
    };

    let algebra = domain_flag(Candidate::new("Thm 3.3 (Banach algebra)"))
        .cond("s1=s", "s1 = s", s1.clone(), Relation::Eq, s.clone())
        .cond("s2=s", "s2 = s", s2.clone(), Relation::Eq, s.clone())
        .cond("p1=p", "p1 = p", p1.clone(), Relation::Eq, p.clone())
        .cond("p2=p", "p2 = p", p2.clone(), Relation::Eq, p.clone())
        .cond("sp>n", "s*p > n", &s * &p, Relation::Gt, n.clone());

    let thm46 = |tag: &str, iii: Relation, iv: Relation| {
        let c = transfer(domain_flag(Candidate::new(tag)));
        let c = item_i(c).cond("(i) s>=0", "s >= 0", s.clone(), Relation::Ge, q(0));
        let c = c.cond("(ii)", "s is a nonnegative integer", s.clone(), Relation::Natural, q(0));
        iv_nonneg(item_iv(item_iii(c, iii), iv))
    };
    let thm46_strict_iv = thm46("Thm 4.6 (strict iv)", Relation::Ge, Relation::Gt);
    let thm46_strict_iii = thm46("Thm 4.6 (strict iii)", Relation::Gt, Relation::Ge);

    let thm41 = {
        let c = p_order(transfer(domain_flag(Candidate::new("Thm 4.1"))));
        let c = item_i(c).cond("(ii)", "s >= 0", s.clone(), Relation::Ge, q(0));
        item_iv(item_iii(c, Relation::Ge), Relation::Gt)
    };

    let thm43 = {
        let c = p_order(transfer(domain_flag(Candidate::new("Thm 4.3"))));
        let c = item_i(c).cond("(ii)", "min(s1, s2) < 0", min_s.clone(), Relation::Lt, q(0));
        item_iv(item_iii(c, Relation::Ge), Relation::Gt)
            .cond(
                "(v)",
                "s1 + s2 >= n(1/p1 + 1/p2 - 1)",
                dual_lhs.clone(),
                Relation::Ge,
                dual_rhs.clone(),
            )
            .cond(
                "(v) rhs>=0",
                "n(1/p1 + 1/p2 - 1) >= 0",
                dual_rhs.clone(),
                Relation::Ge,
                q(0),
            )
    };

    let thm45 = {
        let c = transfer(domain_flag(Candidate::new("Thm 4.5")));
        let c = item_i(c)
            .cond("(ii) min>=0", "min(s1, s2) >= 0", min_s, Relation::Ge, q(0))
            .cond("(ii) s<0", "s < 0", s.clone(), Relation::Lt, q(0));
        iv_nonneg(item_iv(item_iii(c, Relation::Ge), Relation::Gt)).cond(
            "(v)",
            "s1 + s2 > n(1/p1 + 1/p2 - 1)",
            dual_lhs,
            Relation::Gt,
            dual_rhs,
        )
    };

    Ok(decide(
        vec![algebra, thm46_strict_iv, thm46_strict_iii, thm41, thm43, thm45],
        None,
    ))
}

/// `d^alpha : W^{s,p} -> W^{s-|alpha|,p}` for `|alpha| = order`.
pub fn check_derivative(spec: &SpaceSpec, order: u32) -> Result<Verdict, ExponentError> {
    if order == 0 {
        return Err(ExponentError::InvalidOrder);
    }
    let p = spec.p()?.clone();
    let s = spec.s().clone();
    let m = q(order as i64);
    let open = spec.domain.is_open_subset();
    let target = Exponent::new(&s - &m, p.clone())?;
    let open_text = "domain is an open subset of R^n";
    let candidates = vec![
        Candidate::new("Differentiation item 1").flag(
            "domain",
            "domain is the full space",
            spec.domain == DomainClass::FullSpace,
        ),
        Candidate::new("Differentiation item 2")
            .flag("domain", open_text, open)
            .cond("s<0", "s < 0", s.clone(), Relation::Lt, q(0)),
        Candidate::new("Differentiation item 3")
            .flag("domain", open_text, open)
            .cond("s>=0", "s >= 0", s.clone(), Relation::Ge, q(0))
            .cond("|a|<=s", "|alpha| <= s", m.clone(), Relation::Le, s.clone()),
        Candidate::new("Differentiation item 4")
            .flag(
                "domain",
                "domain is bounded Lipschitz",
                spec.domain == DomainClass::BoundedLipschitz,
            )
            .cond("s>=0", "s >= 0", s.clone(), Relation::Ge, q(0))
            .cond("|a|>s", "|alpha| > s", m, Relation::Gt, s.clone())
            .cond(
                "s-1/p",
                "s - 1/p is not an integer",
                &s - p.recip(),
                Relation::NotInteger,
                q(0),
            ),
    ];
    Ok(decide(candidates, Some(target)))
}

/// Shape of the open set `Omega` enclosing the one that carries the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnclosingDomain {
    General,
    Lipschitz,
    FullSpace,
}

impl FromStr for EnclosingDomain {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "general" | "general-open" => EnclosingDomain::General,
            "lipschitz" | "bounded-lipschitz" => EnclosingDomain::Lipschitz,
            "full-space" | "full" | "rn" => EnclosingDomain::FullSpace,
            other => return Err(format!("unknown enclosing domain '{other}'")),
        })
    }
}

/// Extension by zero of `u in W^{s,p}_K(Omega')` into a larger open set.
pub fn check_extension(
    spec: &SpaceSpec,
    enclosing: EnclosingDomain,
) -> Result<Verdict, ExponentError> {
    if spec.domain != DomainClass::CompactSupportInOpen {
        return Err(ExponentError::WrongDomainClass {
            expected: DomainClass::CompactSupportInOpen,
            got: spec.domain,
        });
    }
    spec.p()?;
    let s = spec.s().clone();
    let candidates = vec![
        Candidate::new("Extension by zero (s >= 0)")
            .cond("s>=0", "s >= 0", s.clone(), Relation::Ge, q(0))
            .note("two-sided comparability: |ext u| >= |u| and |ext u| <= C |u|"),
        Candidate::new("Extension by zero, negative integer order")
            .cond("s in Z", "s is an integer", s.clone(), Relation::Integer, q(0))
            .cond("s<=-1", "s <= -1", s.clone(), Relation::Le, q(-1))
            .note("two-sided comparability"),
        Candidate::new("Extension by zero, order in (-1, 0)")
            .cond("s>-1", "s > -1", s.clone(), Relation::Gt, q(-1))
            .cond("s<0", "s < 0", s.clone(), Relation::Lt, q(0))
            .note("two-sided comparability"),
        Candidate::new("Extension by zero, negative order into Lipschitz or R^n")
            .cond("s<0", "s < 0", s, Relation::Lt, q(0))
            .flag(
                "enclosing",
                "enclosing domain is bounded Lipschitz or the full space",
                enclosing != EnclosingDomain::General,
            )
            .note("two-sided comparability"),
    ];
    Ok(decide(candidates, None))
}
