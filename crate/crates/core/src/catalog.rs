//! Catalog algebras, their normal forms, and a rewrite engine evaluating W(A,B) and
//! WW(A,B) to named semigroups with a trace of the isomorphisms used.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::monoid_kernel::ExtNat;
use crate::multiplicity::{discrete_fragment, mf_add, mf_leq, mf_recover_space, MultiplicityFunction, SpaceModel};
use crate::supernaturals::{sn_eq, sn_first_difference, sn_is_infinite_type, sn_mul, Supernatural};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("rank functions take finite values; got ∞ at {0}")]
    NotFinite(String),
    #[error("not decidable: {0}")]
    NotDecidable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kirchberg {
    O2,
    Oinf,
    /// The Cuntz algebra O_n, n ≥ 3.
    On(u32),
}

impl fmt::Display for Kirchberg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kirchberg::O2 => f.write_str("O2"),
            Kirchberg::Oinf => f.write_str("Oinf"),
            Kirchberg::On(n) => write!(f, "O({n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Amp {
    Finite(u64),
    Infinite,
}

/// A parsed algebra descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AlgebraExpr {
    Complex,
    Mat(u64),
    FinDim(Vec<u64>),
    CX(Vec<String>),
    Uhf(Supernatural),
    Car,
    JiangSu,
    UnivUhf,
    Kirchberg(Kirchberg),
    Compacts,
    Tensor(Box<AlgebraExpr>, Box<AlgebraExpr>),
    DirectSum(Box<AlgebraExpr>, Box<AlgebraExpr>),
    Stabilize(Box<AlgebraExpr>),
    MatAmp(Amp, Box<AlgebraExpr>),
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, pos: usize, msg: impl Into<String>) -> Result<T, CatalogError> {
        Err(CatalogError::Syntax { pos, msg: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), CatalogError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.err(self.pos, format!("expected {tok:?}"))
        }
    }

    fn ident(&mut self) -> (usize, &'a str) {
        self.skip_ws();
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        self.pos += len;
        (start, &self.src[start..self.pos])
    }

    fn number(&mut self) -> Result<u64, CatalogError> {
        let (start, tok) = self.ident();
        match tok.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => self.err(start, format!("expected a positive integer, found {tok:?}")),
        }
    }

    fn number_list(&mut self) -> Result<Vec<u64>, CatalogError> {
        let mut v = vec![self.number()?];
        while self.eat(",") {
            v.push(self.number()?);
        }
        Ok(v)
    }

    fn expr(&mut self) -> Result<AlgebraExpr, CatalogError> {
        let mut lhs = self.term()?;
        while self.eat("(+)") {
            let rhs = self.term()?;
            lhs = AlgebraExpr::DirectSum(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<AlgebraExpr, CatalogError> {
        let mut lhs = self.atom()?;
        while self.eat("(x)") {
            let rhs = self.atom()?;
            lhs = AlgebraExpr::Tensor(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<AlgebraExpr, CatalogError> {
        self.skip_ws();
        if self.rest().starts_with("(+)") || self.rest().starts_with("(x)") {
            return self.err(self.pos, "operator without left operand");
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        let (start, name) = self.ident();
        let e = match name {
            "C" => AlgebraExpr::Complex,
            "CAR" => AlgebraExpr::Car,
            "Z" => AlgebraExpr::JiangSu,
            "Q" => AlgebraExpr::UnivUhf,
            "O2" => AlgebraExpr::Kirchberg(Kirchberg::O2),
            "Oinf" => AlgebraExpr::Kirchberg(Kirchberg::Oinf),
            "K" => AlgebraExpr::Compacts,
            "M" | "F" | "CX" | "UHF" | "O" | "stab" | "Minf" => {
                self.expect("(")?;
                let inner = match name {
                    "M" => AlgebraExpr::Mat(self.number()?),
                    "F" => AlgebraExpr::FinDim(self.number_list()?),
                    "O" => {
                        let at = self.pos;
                        match self.number()? {
                            1 => return self.err(at, "O(n) needs n ≥ 2"),
                            2 => AlgebraExpr::Kirchberg(Kirchberg::O2),
                            n => AlgebraExpr::Kirchberg(Kirchberg::On(
                                u32::try_from(n).or_else(|_| self.err(at, "O(n) index too large"))?,
                            )),
                        }
                    }
                    "CX" => {
                        let mut labels = Vec::new();
                        loop {
                            let (at, l) = self.ident();
                            if l.is_empty() {
                                return self.err(at, "expected a point label");
                            }
                            if labels.iter().any(|x| x == l) {
                                return self.err(at, format!("duplicate point label {l:?}"));
                            }
                            labels.push(l.to_string());
                            if !self.eat(",") {
                                break;
                            }
                        }
                        AlgebraExpr::CX(labels)
                    }
                    "UHF" => {
                        self.skip_ws();
                        let at = self.pos;
                        let len = self.rest().find(')').unwrap_or(self.rest().len());
                        let text = &self.rest()[..len];
                        let sn: Supernatural = text
                            .parse()
                            .or_else(|e| self.err(at, format!("bad supernatural number: {e}")))?;
                        if sn.is_one() {
                            return self.err(at, "UHF needs a supernatural number other than 1");
                        }
                        self.pos += len;
                        AlgebraExpr::Uhf(sn)
                    }
                    "stab" => AlgebraExpr::Stabilize(Box::new(self.expr()?)),
                    _ => AlgebraExpr::MatAmp(Amp::Infinite, Box::new(self.expr()?)),
                };
                self.expect(")")?;
                inner
            }
            "" => return self.err(start, "expected an algebra"),
            other => return self.err(start, format!("unknown algebra {other:?}")),
        };
        Ok(e)
    }
}

/// Parses the algebra grammar `C | M(n) | F(n,…) | CX(p,…) | UHF(p:k,…) | CAR | Z | Q
/// | O2 | Oinf | O(n) | K | A (+) B | A (x) B | stab(A) | Minf(A)`; `(x)` binds
/// tighter than `(+)`.
pub fn parse_algebra(text: &str) -> Result<AlgebraExpr, CatalogError> {
    let mut p = Parser { src: text, pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.err(p.pos, "unexpected trailing input");
    }
    Ok(e)
}

/// A tensor factor of a normal-form product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// M_n or UHF, by its supernatural number (never 1).
    Scalar(Supernatural),
    JiangSu,
    Kirch(Kirchberg),
    Cx(Vec<String>),
}

/// A tensor product of factors, optionally stabilized and/or M_∞-amplified.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prod {
    pub factors: Vec<Factor>,
    pub stab: bool,
    pub minf: bool,
}

/// A normal form: a sorted direct sum of products.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alg {
    pub summands: Vec<Prod>,
}

fn strip_finite(s: &Supernatural) -> Supernatural {
    if s.is_universal() {
        return s.clone();
    }
    let pairs: Vec<(u64, ExtNat)> = s
        .exponents()
        .iter()
        .filter(|(_, k)| **k == ExtNat::Inf)
        .map(|(&p, &k)| (p, k))
        .collect();
    crate::supernaturals::sn_make(&pairs).expect("subset of a valid presentation")
}

impl Prod {
    fn complex() -> Prod {
        Prod {
            factors: Vec::new(),
            stab: false,
            minf: false,
        }
    }

    fn leaf(f: Factor) -> Prod {
        Prod {
            factors: vec![f],
            ..Prod::complex()
        }
        .normalized()
    }

    fn scalar(&self) -> Option<&Supernatural> {
        self.factors.iter().find_map(|f| match f {
            Factor::Scalar(s) => Some(s),
            _ => None,
        })
    }

    fn has_infinite_scalar(&self) -> bool {
        self.scalar().is_some_and(|s| s.as_natural().is_none())
    }

    fn normalized(mut self) -> Prod {
        let mut scalar = Supernatural::one();
        let mut z = false;
        let mut kirch: Vec<Kirchberg> = Vec::new();
        let mut cx = Vec::new();
        for f in self.factors.drain(..) {
            match f {
                Factor::Scalar(s) => scalar = sn_mul(&scalar, &s),
                Factor::JiangSu => z = true,
                Factor::Kirch(k) => kirch.push(k),
                Factor::Cx(x) => cx.push(x),
            }
        }
        if kirch.contains(&Kirchberg::O2) {
            // O2 ⊗ D ≅ O2 for unital simple separable nuclear D
            kirch = vec![Kirchberg::O2];
            scalar = Supernatural::one();
            z = false;
        } else if !kirch.is_empty() {
            let has_oinf = kirch.contains(&Kirchberg::Oinf);
            kirch.retain(|k| *k != Kirchberg::Oinf);
            if kirch.is_empty() && has_oinf {
                kirch.push(Kirchberg::Oinf);
            }
            z = false;
        }
        if scalar.as_natural().is_none() {
            z = false;
        }
        if self.stab || self.minf {
            scalar = strip_finite(&scalar);
        }
        let mut factors = Vec::new();
        if !scalar.is_one() {
            factors.push(Factor::Scalar(scalar));
        }
        if z {
            factors.push(Factor::JiangSu);
        }
        factors.extend(kirch.into_iter().map(Factor::Kirch));
        factors.extend(cx.into_iter().map(Factor::Cx));
        factors.sort();
        self.factors = factors;
        self
    }

    fn tensor(&self, other: &Prod) -> Prod {
        Prod {
            factors: [self.factors.clone(), other.factors.clone()].concat(),
            stab: self.stab || other.stab,
            minf: self.minf || other.minf,
        }
        .normalized()
    }

    pub fn is_complex(&self) -> bool {
        self.factors.is_empty() && !self.stab && !self.minf
    }

    pub fn is_compacts(&self) -> bool {
        self.factors.is_empty() && self.stab && !self.minf
    }

    pub fn is_unital(&self) -> bool {
        !self.stab && !self.minf
    }

    /// M_n with n ≥ 2.
    pub fn matrix_size(&self) -> Option<u64> {
        match self.factors.as_slice() {
            [Factor::Scalar(s)] if self.is_unital() => s.as_natural(),
            _ => None,
        }
    }

    /// ℂ, M_n or K.
    pub fn is_elementary(&self) -> bool {
        self.is_complex() || self.is_compacts() || self.matrix_size().is_some()
    }

    /// Unital, simple and infinite-dimensional.
    pub fn is_unital_simple_infinite(&self) -> bool {
        self.is_unital()
            && !self.factors.iter().any(|f| matches!(f, Factor::Cx(_)))
            && (self.has_infinite_scalar()
                || self.factors.iter().any(|f| matches!(f, Factor::JiangSu | Factor::Kirch(_))))
    }

    /// Number of simple summands (every catalog factor except C(X) is simple).
    pub fn simple_summands(&self) -> usize {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Cx(x) => x.len(),
                _ => 1,
            })
            .product()
    }

    /// A Kirchberg algebra, possibly stabilized.
    pub fn is_kirchberg(&self) -> bool {
        !self.minf
            && match self.factors.as_slice() {
                [Factor::Kirch(_)] => true,
                [Factor::Scalar(s), Factor::Kirch(_)] => s.as_natural().is_some(),
                _ => false,
            }
    }

    fn cx_only(&self) -> Option<&Vec<String>> {
        match self.factors.as_slice() {
            [Factor::Cx(x)] if !self.minf => Some(x),
            _ => None,
        }
    }
}

impl fmt::Display for Prod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| match x {
                Factor::Scalar(s) => match s.as_natural() {
                    Some(n) => format!("M({n})"),
                    None => format!("UHF({s})"),
                },
                Factor::JiangSu => "Z".to_string(),
                Factor::Kirch(k) => k.to_string(),
                Factor::Cx(l) => format!("CX({})", l.join(",")),
            })
            .collect();
        if parts.is_empty() && self.stab {
            parts.push("K".to_string());
        }
        let mut s = if parts.is_empty() { "C".to_string() } else { parts.join(" (x) ") };
        if self.stab && !self.factors.is_empty() {
            s = format!("stab({s})");
        }
        if self.minf {
            s = format!("Minf({s})");
        }
        f.write_str(&s)
    }
}

impl Alg {
    pub fn complex() -> Alg {
        Alg {
            summands: vec![Prod::complex()],
        }
    }

    fn from_prods(mut summands: Vec<Prod>) -> Alg {
        summands.sort();
        Alg { summands }
    }

    fn single(&self) -> Option<&Prod> {
        match self.summands.as_slice() {
            [p] => Some(p),
            _ => None,
        }
    }

    pub fn tensor(&self, other: &Alg) -> Alg {
        Alg::from_prods(
            self.summands
                .iter()
                .flat_map(|p| other.summands.iter().map(move |q| p.tensor(q)))
                .collect(),
        )
    }

    pub fn direct_sum(&self, other: &Alg) -> Alg {
        Alg::from_prods([self.summands.clone(), other.summands.clone()].concat())
    }

    fn map_prods<F: Fn(&Prod) -> Prod>(&self, f: F) -> Alg {
        Alg::from_prods(self.summands.iter().map(|p| f(p).normalized()).collect())
    }

    pub fn stabilize(&self) -> Alg {
        self.map_prods(|p| Prod { stab: true, ..p.clone() })
    }

    pub fn minf(&self) -> Alg {
        self.map_prods(|p| Prod { minf: true, ..p.clone() })
    }

    pub fn is_stable(&self) -> bool {
        self.summands.iter().all(|p| p.stab)
    }

    pub fn all_unital(&self) -> bool {
        self.summands.iter().all(Prod::is_unital)
    }

    pub fn simple_summands(&self) -> usize {
        self.summands.iter().map(Prod::simple_summands).sum()
    }

    /// B ⊗ D ≅ B in normal form.
    pub fn absorbs(&self, d: &Alg) -> bool {
        self.tensor(d) == *self
    }
}

impl fmt::Display for Alg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes: Option<Vec<u64>> = self.summands.iter().map(|p| p.matrix_size().or(p.is_complex().then_some(1))).collect();
        match sizes {
            Some(mut s) if s.len() > 1 => {
                s.sort();
                let s: Vec<String> = s.iter().map(u64::to_string).collect();
                write!(f, "F({})", s.join(","))
            }
            _ => {
                let parts: Vec<String> = self
                    .summands
                    .iter()
                    .map(|p| {
                        let t = p.to_string();
                        if self.summands.len() > 1 && t.contains("(x)") {
                            format!("({t})")
                        } else {
                            t
                        }
                    })
                    .collect();
                f.write_str(&parts.join(" (+) "))
            }
        }
    }
}

fn scalar_alg(s: Supernatural) -> Alg {
    Alg {
        summands: vec![Prod::leaf(Factor::Scalar(s))],
    }
}

/// The normal form of an expression: sugar expanded, sums distributed, and the
/// standard absorption identities applied.
pub fn normalize(e: &AlgebraExpr) -> Alg {
    match e {
        AlgebraExpr::Complex => Alg::complex(),
        AlgebraExpr::Mat(n) => scalar_alg(Supernatural::from_natural(*n)),
        AlgebraExpr::FinDim(v) => Alg::from_prods(
            v.iter()
                .map(|&n| Prod::leaf(Factor::Scalar(Supernatural::from_natural(n))))
                .collect(),
        ),
        AlgebraExpr::CX(l) => Alg {
            summands: vec![Prod::leaf(Factor::Cx(l.clone()))],
        },
        AlgebraExpr::Uhf(s) => scalar_alg(s.clone()),
        AlgebraExpr::Car => scalar_alg("2:inf".parse().expect("valid")),
        AlgebraExpr::UnivUhf => scalar_alg(Supernatural::universal()),
        AlgebraExpr::JiangSu => Alg {
            summands: vec![Prod::leaf(Factor::JiangSu)],
        },
        AlgebraExpr::Kirchberg(k) => Alg {
            summands: vec![Prod::leaf(Factor::Kirch(k.clone()))],
        },
        AlgebraExpr::Compacts => Alg::complex().stabilize(),
        AlgebraExpr::Tensor(a, b) => normalize(a).tensor(&normalize(b)),
        AlgebraExpr::DirectSum(a, b) => normalize(a).direct_sum(&normalize(b)),
        AlgebraExpr::Stabilize(a) => normalize(a).stabilize(),
        AlgebraExpr::MatAmp(Amp::Infinite, a) => normalize(a).minf(),
        AlgebraExpr::MatAmp(Amp::Finite(n), a) => {
            normalize(a).tensor(&scalar_alg(Supernatural::from_natural(*n)))
        }
    }
}

/// Canonical values of W and WW.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SemigroupValue {
    Zero,
    Nat,
    ExtNat,
    TwoPoint,
    Car,
    IdealLattice(usize),
    Mf(SpaceModel),
    Mfi(SpaceModel),
    DirectSum(Vec<SemigroupValue>),
    /// The stabilized Cuntz semigroup Cu(B).
    CuOf(Alg),
    /// The Cuntz semigroup W(B).
    WOf(Alg),
    Unknown(String),
}

impl SemigroupValue {
    /// Flattens, drops {0}, merges two-point and ideal-lattice summands into one
    /// lattice, and sorts.
    pub fn direct_sum(parts: Vec<SemigroupValue>) -> SemigroupValue {
        let mut flat = Vec::new();
        let mut lattice = 0usize;
        let mut stack = parts;
        stack.reverse();
        while let Some(v) = stack.pop() {
            match v {
                SemigroupValue::DirectSum(inner) => stack.extend(inner.into_iter().rev()),
                SemigroupValue::Zero => {}
                SemigroupValue::TwoPoint => lattice += 1,
                SemigroupValue::IdealLattice(k) => lattice += k,
                other => flat.push(other),
            }
        }
        match lattice {
            0 => {}
            1 => flat.push(SemigroupValue::TwoPoint),
            k => flat.push(SemigroupValue::IdealLattice(k)),
        }
        flat.sort();
        match flat.len() {
            0 => SemigroupValue::Zero,
            1 => flat.pop().expect("one element"),
            _ => SemigroupValue::DirectSum(flat),
        }
    }

    fn lattice(k: usize) -> SemigroupValue {
        SemigroupValue::direct_sum(vec![SemigroupValue::IdealLattice(k)])
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, SemigroupValue::Unknown(_))
    }

    pub fn to_json(&self) -> Value {
        let mut v = match self {
            SemigroupValue::Zero => json!({"kind": "zero"}),
            SemigroupValue::Nat => json!({"kind": "nat"}),
            SemigroupValue::ExtNat => json!({"kind": "extnat"}),
            SemigroupValue::TwoPoint => json!({"kind": "two_point"}),
            SemigroupValue::Car => json!({"kind": "car"}),
            SemigroupValue::IdealLattice(k) => json!({"kind": "ideal_lattice", "summands": k}),
            SemigroupValue::Mf(s) => json!({"kind": "mf", "space": s.to_json()}),
            SemigroupValue::Mfi(s) => json!({"kind": "mf_i", "space": s.to_json()}),
            SemigroupValue::DirectSum(v) => {
                json!({"kind": "direct_sum", "summands": v.iter().map(|x| x.to_json()).collect::<Vec<_>>()})
            }
            SemigroupValue::CuOf(a) => json!({"kind": "cu_of", "algebra": a.to_string()}),
            SemigroupValue::WOf(a) => json!({"kind": "w_of", "algebra": a.to_string()}),
            SemigroupValue::Unknown(r) => json!({"kind": "unknown", "residual": r}),
        };
        v["text"] = json!(self.to_string());
        v
    }
}

impl fmt::Display for SemigroupValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemigroupValue::Zero => f.write_str("{0}"),
            SemigroupValue::Nat => f.write_str("ℕ₀"),
            SemigroupValue::ExtNat => f.write_str("ℕ₀∪{∞}"),
            SemigroupValue::TwoPoint => f.write_str("{0,∞}"),
            SemigroupValue::Car => f.write_str("ℕ₀[1/2]⊔(0,∞)"),
            SemigroupValue::IdealLattice(k) => write!(f, "Lat({k})"),
            SemigroupValue::Mf(s) => write!(f, "Mf({s})"),
            SemigroupValue::Mfi(s) => write!(f, "Mf_i({s})"),
            SemigroupValue::DirectSum(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&parts.join(" ⊕ "))
            }
            SemigroupValue::CuOf(a) => write!(f, "Cu({a})"),
            SemigroupValue::WOf(a) => write!(f, "W({a})"),
            SemigroupValue::Unknown(r) => write!(f, "Unknown[{r}]"),
        }
    }
}

/// The elements of the ideal lattice of a direct sum of k simple algebras, as
/// bitmasks of the summands an ideal contains. The sum of two classes is the
/// intersection of the ideals and the neutral element is the whole algebra.
pub fn ideal_lattice_elements(k: usize) -> Vec<u64> {
    (0..1u64 << k).collect()
}

pub fn ideal_lattice_add(x: u64, y: u64) -> u64 {
    x & y
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Term {
    W(Alg, Alg),
    WW(Alg, Alg),
    Wc(Alg),
    Val(SemigroupValue),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::W(a, b) => write!(f, "W({a}, {b})"),
            Term::WW(a, b) => write!(f, "WW({a}, {b})"),
            Term::Wc(b) => write!(f, "W({b})"),
            Term::Val(v) => write!(f, "{v}"),
        }
    }
}

fn show(terms: &[Term]) -> String {
    let parts: Vec<String> = terms.iter().map(Term::to_string).collect();
    parts.join(" ⊕ ")
}

/// One rewrite step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: &'static str,
    pub anchor: &'static str,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: SemigroupValue,
    pub trace: Vec<TraceStep>,
}

impl Evaluation {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": crate::SCHEMA,
            "value": self.value.to_json(),
            "trace": self.trace.iter().map(|s| json!({
                "rule": s.rule,
                "anchor": s.anchor,
                "before": s.before,
                "after": s.after,
            })).collect::<Vec<_>>(),
        })
    }
}

struct Candidate {
    prio: u8,
    rule: &'static str,
    anchor: &'static str,
    out: Vec<Term>,
}

const A_WW: &str = "WW(A,B) := W(A⊗K, B⊗K)";
const A_R1: &str = "W(ℂ,B) ≅ W(B)";
const A_R2N: &str = "W(A,Mₙ(B)) ≅ W(A,B)";
const A_R2I: &str = "W(A,M_∞(B)) ≅ W(A,B)";
const A_R3I: &str = "W(M_∞(A),B) ≅ W(A,B)";
const A_R3N: &str = "W(Mₙ(A),B) ≅ W(M_∞(A),B) ≅ W(A,B)";
const A_R3K: &str = "W(A⊗K,B⊗K) ≅ W(A,B⊗K)";
const A_R4L: &str = "W(A₁⊕A₂,B) ≅ W(A₁,B)⊕W(A₂,B)";
const A_R4R: &str = "W(A,B₁⊕B₂) ≅ W(A,B₁)⊕W(A,B₂)";
const A_R5: &str = "W(A⊗D,B⊗D) ≅ W(A,B⊗D) for strongly self-absorbing D";
const A_NAT: &str = "W(ℂ,ℂ) = W(ℂ) = ℕ₀";
const A_K: &str = "W(K) ≅ ℕ₀∪{∞}";
const A_CAR: &str = "W(CAR) ≅ ℕ₀[1/2]⊔(0,∞)";
const A_PI: &str = "W(B) ≅ {0,∞} for B purely infinite simple";
const A_ZERO: &str = "W(A,Mₙ) = {0} for A unital simple infinite-dimensional";
const A_WCX: &str = "W(C(X)) ≅ Mf_i(X)";
const A_CUCX: &str = "Cu(C(X)) ≅ Mf(X)";
const A_R7: &str = "W(𝒵,B) ≅ W(B) for 𝒵-stable B";
const A_R8: &str = "WW(A,B) ≅ ideal lattice of A for B Kirchberg, A unital exact; + is ∩";
const A_R9W: &str = "WW(C(X),ℂ) ≅ Mf(X)";
const A_R9I: &str = "W(C(X),ℂ) ≅ Mf_i(X)";

fn w(a: Alg, b: Alg) -> Vec<Term> {
    vec![Term::W(a, b)]
}

fn val(v: SemigroupValue) -> Vec<Term> {
    vec![Term::Val(v)]
}

/// Strongly self-absorbing factors D with A ≅ A' ⊗ D, as pairs (D, A').
fn ssa_splits(p: &Prod) -> Vec<(Alg, Alg)> {
    let mut ds: Vec<Prod> = Vec::new();
    for f in &p.factors {
        match f {
            Factor::JiangSu | Factor::Kirch(Kirchberg::O2 | Kirchberg::Oinf) => ds.push(Prod::leaf(f.clone())),
            Factor::Scalar(s) if s.is_universal() => ds.push(Prod::leaf(f.clone())),
            Factor::Scalar(s) => {
                let inf = strip_finite(s);
                if !inf.is_one() {
                    ds.push(Prod::leaf(Factor::Scalar(inf.clone())));
                }
                if inf.exponents().len() > 1 {
                    for &q in inf.exponents().keys() {
                        let single = crate::supernaturals::sn_make(&[(q, ExtNat::Inf)]).expect("prime");
                        ds.push(Prod::leaf(Factor::Scalar(single)));
                    }
                }
            }
            _ => {}
        }
    }
    let whole = Alg {
        summands: vec![p.clone()],
    };
    let mut out = Vec::new();
    for d in ds {
        let rest: Vec<Factor> = p
            .factors
            .iter()
            .filter_map(|f| match (f, &d.factors[0]) {
                (Factor::Scalar(s), Factor::Scalar(t)) => {
                    let kept: Vec<(u64, ExtNat)> = if t.is_universal() {
                        Vec::new()
                    } else {
                        s.exponents()
                            .iter()
                            .filter(|(q, _)| t.exponent(**q) != ExtNat::Inf)
                            .map(|(&q, &k)| (q, k))
                            .collect()
                    };
                    let r = crate::supernaturals::sn_make(&kept).expect("subset");
                    (!r.is_one()).then_some(Factor::Scalar(r))
                }
                (x, y) if x == y => None,
                (x, _) => Some(x.clone()),
            })
            .collect();
        let a1 = Alg {
            summands: vec![Prod {
                factors: rest,
                stab: p.stab,
                minf: p.minf,
            }
            .normalized()],
        };
        let d = Alg { summands: vec![d] };
        if a1 != whole && a1.tensor(&d) == whole {
            out.push((d, a1));
        }
    }
    out
}

fn candidates(t: &Term) -> Vec<Candidate> {
    let mut c = Vec::new();
    let mut push = |prio: u8, rule: &'static str, anchor: &'static str, out: Vec<Term>| {
        c.push(Candidate { prio, rule, anchor, out })
    };
    match t {
        Term::Val(_) => {}
        Term::Wc(b) => {
            if let Some(p) = b.single() {
                let base = if p.is_complex() {
                    Some((A_NAT, SemigroupValue::Nat))
                } else if p.is_compacts() {
                    Some((A_K, SemigroupValue::ExtNat))
                } else if p.is_unital() && p.factors == [Factor::Scalar("2:inf".parse().expect("valid"))] {
                    Some((A_CAR, SemigroupValue::Car))
                } else if !p.minf && matches!(p.factors.as_slice(), [Factor::Kirch(_)]) {
                    Some((A_PI, SemigroupValue::TwoPoint))
                } else if let (Some(x), true) = (p.cx_only(), p.is_unital()) {
                    Some((A_WCX, SemigroupValue::Mfi(SpaceModel::Discrete(x.clone()))))
                } else if let (Some(x), true) = (p.cx_only(), p.stab) {
                    Some((A_CUCX, SemigroupValue::Mf(SpaceModel::Discrete(x.clone()))))
                } else {
                    None
                };
                if let Some((anchor, v)) = base {
                    push(0, "R6", anchor, val(v));
                }
                if p.minf {
                    let q = Prod { minf: false, ..p.clone() }.normalized();
                    push(5, "R2", A_R2I, vec![Term::Wc(Alg { summands: vec![q] })]);
                }
                if let Some(s) = p.scalar() {
                    if !p.stab && !p.minf && strip_finite(s) != *s {
                        push(5, "R2", A_R2N, vec![Term::Wc(strip_scalar(p))]);
                    }
                }
            } else {
                push(
                    7,
                    "R4",
                    A_R4R,
                    b.summands.iter().map(|p| Term::Wc(Alg { summands: vec![p.clone()] })).collect(),
                );
            }
        }
        Term::WW(a, b) => {
            if let (Some(pa), Some(pb)) = (a.single(), b.single()) {
                if pa.is_unital_simple_infinite() && pb.is_elementary() {
                    push(0, "R6", A_ZERO, val(SemigroupValue::Zero));
                }
            }
            if let Some(pb) = b.single() {
                if pb.is_kirchberg() && a.all_unital() {
                    push(1, "R8", A_R8, val(SemigroupValue::lattice(a.simple_summands())));
                }
                if let (Some(pa), true) = (a.single(), pb.is_complex()) {
                    if let (Some(x), true) = (pa.cx_only(), pa.is_unital()) {
                        push(2, "R9", A_R9W, val(SemigroupValue::Mf(SpaceModel::Discrete(x.clone()))));
                    }
                }
            }
            push(3, "WW-def", A_WW, w(a.stabilize(), b.stabilize()));
            if a.summands.len() > 1 {
                push(
                    7,
                    "R4",
                    A_R4L,
                    a.summands
                        .iter()
                        .map(|p| Term::WW(Alg { summands: vec![p.clone()] }, b.clone()))
                        .collect(),
                );
            }
            if b.summands.len() > 1 {
                push(
                    7,
                    "R4",
                    A_R4R,
                    b.summands
                        .iter()
                        .map(|p| Term::WW(a.clone(), Alg { summands: vec![p.clone()] }))
                        .collect(),
                );
            }
        }
        Term::W(a, b) => {
            let (pa, pb) = (a.single(), b.single());
            if let (Some(pa), Some(pb)) = (pa, pb) {
                if pa.is_unital_simple_infinite() && pb.is_elementary() {
                    push(0, "R6", A_ZERO, val(SemigroupValue::Zero));
                }
            }
            if let Some(pb) = pb {
                if pb.is_kirchberg() && pb.stab {
                    // A unital, or A = A' ⊗ K with A' unital
                    if a.all_unital() || a.summands.iter().all(|p| p.stab && !p.minf) {
                        push(1, "R8", A_R8, val(SemigroupValue::lattice(a.simple_summands())));
                    }
                }
                if let Some(pa) = pa {
                    if let Some(x) = pa.cx_only() {
                        if pa.is_unital() && pb.is_complex() {
                            push(2, "R9", A_R9I, val(SemigroupValue::Mfi(SpaceModel::Discrete(x.clone()))));
                        }
                        if pb.is_compacts() {
                            push(2, "R9", A_R9W, val(SemigroupValue::Mf(SpaceModel::Discrete(x.clone()))));
                        }
                    }
                }
            }
            if let Some(pa) = pa {
                if pa.is_complex() {
                    push(4, "R1", A_R1, vec![Term::Wc(b.clone())]);
                }
            }
            if let Some(pb) = pb {
                if pb.minf {
                    let q = Prod { minf: false, ..pb.clone() }.normalized();
                    push(5, "R2", A_R2I, w(a.clone(), Alg { summands: vec![q] }));
                }
                if let Some(s) = pb.scalar() {
                    if !pb.stab && !pb.minf && strip_finite(s) != *s {
                        push(5, "R2", A_R2N, w(a.clone(), strip_scalar(pb)));
                    }
                }
            }
            if let Some(pa) = pa {
                if pa.minf {
                    let q = Prod { minf: false, ..pa.clone() }.normalized();
                    push(6, "R3", A_R3I, w(Alg { summands: vec![q] }, b.clone()));
                }
                if let Some(s) = pa.scalar() {
                    if !pa.stab && !pa.minf && strip_finite(s) != *s {
                        push(6, "R3", A_R3N, w(strip_scalar(pa), b.clone()));
                    }
                }
                if pa.stab && b.is_stable() {
                    let q = Prod { stab: false, ..pa.clone() }.normalized();
                    push(6, "R3", A_R3K, w(Alg { summands: vec![q] }, b.clone()));
                }
                for (d, a1) in ssa_splits(pa) {
                    if b.absorbs(&d) {
                        push(8, "R5", A_R5, w(a1, b.clone()));
                    }
                }
                let z = normalize(&AlgebraExpr::JiangSu);
                if *a == z && b.absorbs(&z) {
                    push(9, "R7", A_R7, vec![Term::Wc(b.clone())]);
                }
            }
            if a.summands.len() > 1 {
                push(
                    7,
                    "R4",
                    A_R4L,
                    a.summands
                        .iter()
                        .map(|p| Term::W(Alg { summands: vec![p.clone()] }, b.clone()))
                        .collect(),
                );
            }
            if b.summands.len() > 1 {
                push(
                    7,
                    "R4",
                    A_R4R,
                    b.summands
                        .iter()
                        .map(|p| Term::W(a.clone(), Alg { summands: vec![p.clone()] }))
                        .collect(),
                );
            }
        }
    }
    c
}

/// Removes the finite part of the scalar factor of a unital product.
fn strip_scalar(p: &Prod) -> Alg {
    let factors = p
        .factors
        .iter()
        .filter_map(|f| match f {
            Factor::Scalar(s) => {
                let r = strip_finite(s);
                (!r.is_one()).then_some(Factor::Scalar(r))
            }
            other => Some(other.clone()),
        })
        .collect();
    Alg {
        summands: vec![Prod { factors, ..p.clone() }.normalized()],
    }
}

fn replace(terms: &[Term], pos: usize, out: Vec<Term>) -> Vec<Term> {
    let mut next = terms[..pos].to_vec();
    next.extend(out);
    next.extend_from_slice(&terms[pos + 1..]);
    next
}

fn final_value(terms: &[Term]) -> SemigroupValue {
    let mut parts = Vec::new();
    let mut residual: Vec<String> = Vec::new();
    for t in terms {
        match t {
            Term::Val(v) => parts.push(v.clone()),
            Term::Wc(b) => match b.single() {
                Some(p) if p.stab => {
                    let q = Prod { stab: false, ..p.clone() }.normalized();
                    parts.push(SemigroupValue::CuOf(Alg { summands: vec![q] }));
                }
                _ => parts.push(SemigroupValue::WOf(b.clone())),
            },
            Term::W(..) | Term::WW(..) => residual.push(t.to_string()),
        }
    }
    let known = SemigroupValue::direct_sum(parts);
    if residual.is_empty() {
        return known;
    }
    residual.sort();
    if known != SemigroupValue::Zero {
        residual.insert(0, known.to_string());
    }
    SemigroupValue::Unknown(residual.join(" ⊕ "))
}

/// Rewrites with the fixed rule priority until no rule applies.
fn run(start: Vec<Term>) -> Evaluation {
    let mut terms = start;
    let mut trace = Vec::new();
    loop {
        let best = terms
            .iter()
            .enumerate()
            .flat_map(|(i, t)| candidates(t).into_iter().map(move |c| (i, c)))
            .min_by_key(|(i, c)| (c.prio, *i));
        let Some((pos, c)) = best else { break };
        let next = replace(&terms, pos, c.out);
        trace.push(TraceStep {
            rule: c.rule,
            anchor: c.anchor,
            before: show(&terms),
            after: show(&next),
        });
        terms = next;
    }
    Evaluation {
        value: final_value(&terms),
        trace,
    }
}

pub fn eval_w(a: &AlgebraExpr, b: &AlgebraExpr) -> Evaluation {
    run(vec![Term::W(normalize(a), normalize(b))])
}

pub fn eval_ww(a: &AlgebraExpr, b: &AlgebraExpr) -> Evaluation {
    run(vec![Term::WW(normalize(a), normalize(b))])
}

/// Every value reachable by applying the rules in any order for up to `depth`
/// steps, each branch then finished with the fixed priority.
pub fn explore(a: &AlgebraExpr, b: &AlgebraExpr, ww: bool, depth: usize) -> BTreeSet<SemigroupValue> {
    let (na, nb) = (normalize(a), normalize(b));
    let start = vec![if ww { Term::WW(na, nb) } else { Term::W(na, nb) }];
    let mut seen: HashSet<Vec<Term>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    let mut values = BTreeSet::new();
    while let Some((terms, d)) = queue.pop_front() {
        let moves: Vec<(usize, Candidate)> = terms
            .iter()
            .enumerate()
            .flat_map(|(i, t)| candidates(t).into_iter().map(move |c| (i, c)))
            .collect();
        if moves.is_empty() {
            values.insert(final_value(&terms));
            continue;
        }
        if d == depth {
            values.insert(run(terms).value);
            continue;
        }
        for (pos, c) in moves {
            let next = replace(&terms, pos, c.out);
            if seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    values
}

/// Which of W and WW is meant for a space's Cuntz homology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    W,
    WW,
}

/// WW(C(X),ℂ) ≅ Mf(X) and W(C(X),ℂ) ≅ Mf_i(X).
pub fn eval_cuntz_homology(x: &SpaceModel, variant: Variant) -> SemigroupValue {
    match (variant, x) {
        (Variant::WW, _) => SemigroupValue::Mf(x.clone()),
        (Variant::W, SpaceModel::Discrete(_)) => SemigroupValue::Mfi(x.clone()),
        (Variant::W, SpaceModel::Interval) => SemigroupValue::Unknown("W(C([0,1]), C)".into()),
    }
}

/// The composition product of a rank function r (an element of W(ℂ,C(X))) with
/// ν ∈ WW(C(X),ℂ): Σ r(x)·ν(x).
pub fn compose_product(r: &MultiplicityFunction, nu: &MultiplicityFunction) -> Result<ExtNat, CatalogError> {
    if r.space() != nu.space() {
        return Err(CatalogError::SpaceMismatch);
    }
    let (rv, nv) = match (r.values(), nu.values()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CatalogError::SpaceMismatch),
    };
    if let Some(i) = rv.iter().position(|k| !k.is_finite()) {
        return Err(CatalogError::NotFinite(r.space().point_name(&crate::multiplicity::Point::Index(i))));
    }
    Ok(rv.iter().zip(&nv).map(|(&a, &b)| a * b).sum())
}

pub fn is_strongly_self_absorbing(a: &AlgebraExpr) -> bool {
    let n = normalize(a);
    let Some(p) = n.single() else { return false };
    if !p.is_unital() {
        return false;
    }
    match p.factors.as_slice() {
        [Factor::JiangSu] | [Factor::Kirch(Kirchberg::O2 | Kirchberg::Oinf)] => true,
        [Factor::Scalar(s)] => sn_is_infinite_type(s),
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Isomorphic,
    NotIsomorphic,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Isomorphic => "Isomorphic",
            Verdict::NotIsomorphic => "NotIsomorphic",
            Verdict::Undecided => "Undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub certificate: String,
    pub data: Value,
}

fn single_scalar(a: &Alg) -> Option<Supernatural> {
    match a.single()?.factors.as_slice() {
        [Factor::Scalar(s)] if a.single()?.is_unital() => Some(s.clone()),
        _ => None,
    }
}

fn single_cx(a: &Alg) -> Option<Vec<String>> {
    let p = a.single()?;
    p.is_unital().then(|| p.cx_only().cloned()).flatten()
}

fn recovered_points(labels: &[String]) -> Option<usize> {
    let space = SpaceModel::discrete(labels).ok()?;
    let frag = discrete_fragment(&space).ok()?;
    let r = mf_recover_space(
        &frag,
        |a, b| mf_add(a, b).expect("same space"),
        |a, b| mf_leq(a, b).expect("same space"),
    )
    .ok()?;
    r.is_power_set().then_some(r.point_count)
}

/// Decides isomorphism for pairs of matrix algebras, UHF algebras, or C(X) with X
/// finite discrete; anything else is undecided.
pub fn classify(a: &AlgebraExpr, b: &AlgebraExpr) -> Classification {
    let (na, nb) = (normalize(a), normalize(b));
    let undecided = || Classification {
        verdict: Verdict::Undecided,
        certificate: format!("{na} vs {nb} lies outside the decidable catalog pairs"),
        data: json!({"kind": "undecided"}),
    };
    let mat = |x: &Alg| x.single().and_then(|p| p.matrix_size().or(p.is_complex().then_some(1)));
    if let (Some(n), Some(m)) = (mat(&na), mat(&nb)) {
        let note = scale_note(n, m);
        let verdict = if n == m { Verdict::Isomorphic } else { Verdict::NotIsomorphic };
        return Classification {
            verdict,
            certificate: note.text(),
            data: json!({"kind": "matrix", "n": n, "m": m, "scale": note.to_json()}),
        };
    }
    if let (Some(p), Some(q)) = (single_scalar(&na), single_scalar(&nb)) {
        if p.as_natural().is_none() && q.as_natural().is_none() {
            return match sn_first_difference(&p, &q) {
                None => Classification {
                    verdict: Verdict::Isomorphic,
                    certificate: format!("equal supernatural numbers {p}"),
                    data: json!({"kind": "uhf", "a": p.to_string(), "b": q.to_string()}),
                },
                Some((prime, x, y)) => {
                    debug_assert!(!sn_eq(&p, &q));
                    Classification {
                        verdict: Verdict::NotIsomorphic,
                        certificate: format!("exponent of prime {prime} differs: {x} vs {y}"),
                        data: json!({"kind": "uhf", "a": p.to_string(), "b": q.to_string(),
                            "prime": prime, "exponent_a": x.to_string(), "exponent_b": y.to_string()}),
                    }
                }
            };
        }
    }
    if let (Some(x), Some(y)) = (single_cx(&na), single_cx(&nb)) {
        let (Some(px), Some(py)) = (recovered_points(&x), recovered_points(&y)) else {
            return undecided();
        };
        let verdict = if px == py { Verdict::Isomorphic } else { Verdict::NotIsomorphic };
        let rel = if px == py { "=" } else { "≠" };
        return Classification {
            verdict,
            certificate: format!("minimal-element counts {px} {rel} {py} in the reconstructed Mf"),
            data: json!({"kind": "cx", "points_a": px, "points_b": py}),
        };
    }
    undecided()
}

/// Scale data for WW(Mₙ, Mₘ) ≅ ℕ₀∪{∞}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleNote {
    pub n: u64,
    pub m: u64,
    /// Σ(WW(Mₙ,Mₘ)) = {0,…,⌊m/n⌋}.
    pub forward_max: u64,
    /// Σ(WW(Mₘ,Mₙ)) = {0,…,⌊n/m⌋}.
    pub backward_max: u64,
    /// 1 is invertible in WW for the composition product.
    pub invertible: bool,
    /// 1 lies in both scales, which forces n = m.
    pub strictly_invertible: bool,
}

fn scale_note(n: u64, m: u64) -> ScaleNote {
    let (f, b) = (m / n, n / m);
    ScaleNote {
        n,
        m,
        forward_max: f,
        backward_max: b,
        invertible: true,
        strictly_invertible: f >= 1 && b >= 1,
    }
}

impl ScaleNote {
    pub fn text(&self) -> String {
        let strict = if self.strictly_invertible {
            "1 is strictly invertible"
        } else {
            "no strictly invertible element"
        };
        format!(
            "scale of WW(M{n},M{m}) = {{0,…,{f}}}, scale of WW(M{m},M{n}) = {{0,…,{b}}}; 1 is invertible in WW; {strict}",
            n = self.n,
            m = self.m,
            f = self.forward_max,
            b = self.backward_max,
        )
    }

    pub fn to_json(&self) -> Value {
        json!({
            "forward_max": self.forward_max,
            "backward_max": self.backward_max,
            "invertible": self.invertible,
            "strictly_invertible": self.strictly_invertible,
        })
    }
}

pub fn scale_membership_note(a: &AlgebraExpr, b: &AlgebraExpr) -> Result<ScaleNote, CatalogError> {
    let mat = |x: &AlgebraExpr| {
        let n = normalize(x);
        n.single().and_then(|p| p.matrix_size().or(p.is_complex().then_some(1)))
    };
    match (mat(a), mat(b)) {
        (Some(n), Some(m)) => Ok(scale_note(n, m)),
        _ => Err(CatalogError::NotDecidable("scale is only computed for pairs of matrix algebras".into())),
    }
}
