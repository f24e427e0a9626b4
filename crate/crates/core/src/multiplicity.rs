//! Multiplicity functions: the monoid Mf(X) over a finite discrete space or over [0,1].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::monoid_kernel::{ExtNat, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiplicityError {
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("point {0} does not belong to the space")]
    UnknownPoint(String),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(Q, Q),
    #[error("inconsistent fragment: {0}")]
    FragmentInconsistent(String),
    #[error("fragment too large: at most {max} points supported, got {got}")]
    FragmentTooLarge { max: usize, got: usize },
    #[error("invalid document: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpaceModel {
    /// A finite discrete space with distinct point labels.
    Discrete(Vec<String>),
    /// The unit interval with rational coordinates.
    Interval,
}

impl SpaceModel {
    pub fn discrete<S: AsRef<str>>(labels: &[S]) -> Result<SpaceModel, MultiplicityError> {
        let mut seen = BTreeSet::new();
        for l in labels {
            if !seen.insert(l.as_ref()) {
                return Err(MultiplicityError::DuplicateLabel(l.as_ref().to_string()));
            }
        }
        Ok(SpaceModel::Discrete(labels.iter().map(|l| l.as_ref().to_string()).collect()))
    }

    /// Points labelled x1, …, xk.
    pub fn numbered(k: usize) -> SpaceModel {
        SpaceModel::Discrete((1..=k).map(|i| format!("x{i}")).collect())
    }

    pub fn point_count(&self) -> Option<usize> {
        match self {
            SpaceModel::Discrete(l) => Some(l.len()),
            SpaceModel::Interval => None,
        }
    }

    pub fn label(&self, name: &str) -> Result<Point, MultiplicityError> {
        match self {
            SpaceModel::Discrete(l) => l
                .iter()
                .position(|x| x == name)
                .map(Point::Index)
                .ok_or_else(|| MultiplicityError::UnknownPoint(name.to_string())),
            SpaceModel::Interval => {
                let q: Q = name
                    .trim()
                    .parse()
                    .map_err(|_| MultiplicityError::UnknownPoint(name.to_string()))?;
                self.check(&Point::At(q))?;
                Ok(Point::At(q))
            }
        }
    }

    fn check(&self, p: &Point) -> Result<(), MultiplicityError> {
        let ok = match (self, p) {
            (SpaceModel::Discrete(l), Point::Index(i)) => *i < l.len(),
            (SpaceModel::Interval, Point::At(q)) => *q >= Q::zero() && *q <= Q::one(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(MultiplicityError::UnknownPoint(format!("{p:?}")))
        }
    }

    pub fn point_name(&self, p: &Point) -> String {
        match (self, p) {
            (SpaceModel::Discrete(l), Point::Index(i)) => l[*i].clone(),
            (_, Point::At(q)) => q.to_string(),
            (_, Point::Index(i)) => format!("#{i}"),
        }
    }
}

impl fmt::Display for SpaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceModel::Discrete(l) => write!(f, "{{{}}}", l.join(",")),
            SpaceModel::Interval => f.write_str("[0,1]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Index(usize),
    At(Q),
}

/// A closed interval [lo, hi] ⊆ [0,1]; lo = hi is a single point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Result<Interval, MultiplicityError> {
        if lo > hi || lo < Q::zero() || hi > Q::one() {
            return Err(MultiplicityError::InvalidInterval(lo, hi));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, q: Q) -> bool {
        self.lo <= q && q <= self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }
}

/// Sorts and merges overlapping or touching intervals.
fn merge_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort();
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ClosedSet {
    Points(BTreeSet<usize>),
    Intervals(Vec<Interval>),
}

impl ClosedSet {
    pub fn points<I: IntoIterator<Item = usize>>(it: I) -> ClosedSet {
        ClosedSet::Points(it.into_iter().collect())
    }

    /// A normalized finite union of closed intervals.
    pub fn intervals(v: Vec<Interval>) -> ClosedSet {
        ClosedSet::Intervals(merge_intervals(v))
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ClosedSet::Points(p) => p.is_empty(),
            ClosedSet::Intervals(v) => v.is_empty(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (self, p) {
            (ClosedSet::Points(s), Point::Index(i)) => s.contains(i),
            (ClosedSet::Intervals(v), Point::At(q)) => v.iter().any(|iv| iv.contains(*q)),
            _ => false,
        }
    }
}

impl fmt::Display for ClosedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedSet::Points(s) => {
                let v: Vec<String> = s.iter().map(|i| format!("#{i}")).collect();
                write!(f, "{{{}}}", v.join(","))
            }
            ClosedSet::Intervals(v) if v.is_empty() => f.write_str("∅"),
            ClosedSet::Intervals(v) => {
                let parts: Vec<String> = v
                    .iter()
                    .map(|iv| {
                        if iv.is_degenerate() {
                            format!("{{{}}}", iv.lo)
                        } else {
                            format!("[{},{}]", iv.lo, iv.hi)
                        }
                    })
                    .collect();
                f.write_str(&parts.join(" ∪ "))
            }
        }
    }
}

/// An element of Mf(X): finitely many isolated atoms with multiplicity in ℕ∪{∞}
/// plus an essential part (non-degenerate intervals) carrying the value ∞.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiplicityFunction {
    space: SpaceModel,
    atoms: BTreeMap<Point, ExtNat>,
    essential: Vec<Interval>,
}

impl MultiplicityFunction {
    /// Builds and normalizes: zero atoms are dropped, degenerate essential
    /// components become ∞-atoms and atoms inside the essential set are absorbed.
    pub fn new(
        space: SpaceModel,
        atoms: Vec<(Point, ExtNat)>,
        essential: Vec<Interval>,
    ) -> Result<MultiplicityFunction, MultiplicityError> {
        if !essential.is_empty() && space != SpaceModel::Interval {
            return Err(MultiplicityError::SpaceMismatch);
        }
        let mut map = BTreeMap::new();
        for (p, k) in atoms {
            space.check(&p)?;
            let e = map.entry(p).or_insert(ExtNat::ZERO);
            *e = *e + k;
        }
        Ok(Self::normalized(space, map, essential))
    }

    fn normalized(
        space: SpaceModel,
        mut atoms: BTreeMap<Point, ExtNat>,
        essential: Vec<Interval>,
    ) -> MultiplicityFunction {
        let merged = merge_intervals(essential);
        let mut ess = Vec::with_capacity(merged.len());
        for iv in merged {
            if iv.is_degenerate() {
                atoms.insert(Point::At(iv.lo), ExtNat::Inf);
            } else {
                ess.push(iv);
            }
        }
        atoms.retain(|p, k| {
            !k.is_zero()
                && match p {
                    Point::At(q) => !ess.iter().any(|iv| iv.contains(*q)),
                    Point::Index(_) => true,
                }
        });
        MultiplicityFunction {
            space,
            atoms,
            essential: ess,
        }
    }

    pub fn zero(space: SpaceModel) -> MultiplicityFunction {
        MultiplicityFunction {
            space,
            atoms: BTreeMap::new(),
            essential: Vec::new(),
        }
    }

    /// On a discrete space, the function with the given value at each point.
    pub fn from_values(space: SpaceModel, values: &[ExtNat]) -> Result<Self, MultiplicityError> {
        if space.point_count() != Some(values.len()) {
            return Err(MultiplicityError::SpaceMismatch);
        }
        let atoms = values.iter().enumerate().map(|(i, &k)| (Point::Index(i), k)).collect();
        Self::new(space, atoms, Vec::new())
    }

    pub fn delta(space: SpaceModel, p: Point, k: ExtNat) -> Result<Self, MultiplicityError> {
        Self::new(space, vec![(p, k)], Vec::new())
    }

    pub fn space(&self) -> &SpaceModel {
        &self.space
    }

    pub fn atoms(&self) -> &BTreeMap<Point, ExtNat> {
        &self.atoms
    }

    pub fn essential(&self) -> &[Interval] {
        &self.essential
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.essential.is_empty()
    }

    pub fn value_at(&self, p: &Point) -> ExtNat {
        if let Point::At(q) = p {
            if self.essential.iter().any(|iv| iv.contains(*q)) {
                return ExtNat::Inf;
            }
        }
        self.atoms.get(p).copied().unwrap_or(ExtNat::ZERO)
    }

    /// Values at every point of a discrete space.
    pub fn values(&self) -> Option<Vec<ExtNat>> {
        let k = self.space.point_count()?;
        Some((0..k).map(|i| self.value_at(&Point::Index(i))).collect())
    }

    /// Finitely supported with finite values, i.e. an element of Mf_i(X).
    pub fn is_finitely_supported(&self) -> bool {
        self.essential.is_empty() && self.atoms.values().all(|k| k.is_finite())
    }
}

impl fmt::Display for MultiplicityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(p, k)| format!("{}:{}", self.space.point_name(p), k))
            .collect();
        for iv in &self.essential {
            parts.push(format!("[{},{}]:inf", iv.lo, iv.hi));
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}

pub fn mf_add(
    nu: &MultiplicityFunction,
    mu: &MultiplicityFunction,
) -> Result<MultiplicityFunction, MultiplicityError> {
    if nu.space != mu.space {
        return Err(MultiplicityError::SpaceMismatch);
    }
    let mut atoms = nu.atoms.clone();
    for (p, &k) in &mu.atoms {
        let e = atoms.entry(*p).or_insert(ExtNat::ZERO);
        *e = *e + k;
    }
    let mut ess = nu.essential.clone();
    ess.extend_from_slice(&mu.essential);
    Ok(MultiplicityFunction::normalized(nu.space.clone(), atoms, ess))
}

/// Pointwise order on multiplicity functions.
pub fn mf_leq(nu: &MultiplicityFunction, mu: &MultiplicityFunction) -> Result<bool, MultiplicityError> {
    if nu.space != mu.space {
        return Err(MultiplicityError::SpaceMismatch);
    }
    let atoms_ok = nu.atoms.iter().all(|(p, &k)| k <= mu.value_at(p));
    let ess_ok = nu
        .essential
        .iter()
        .all(|iv| mu.essential.iter().any(|jv| jv.lo <= iv.lo && iv.hi <= jv.hi));
    Ok(atoms_ok && ess_ok)
}

/// ω_C: the value ∞ on C and 0 elsewhere.
pub fn mf_omega(space: &SpaceModel, c: &ClosedSet) -> Result<MultiplicityFunction, MultiplicityError> {
    match (space, c) {
        (SpaceModel::Discrete(_), ClosedSet::Points(s)) => MultiplicityFunction::new(
            space.clone(),
            s.iter().map(|&i| (Point::Index(i), ExtNat::Inf)).collect(),
            Vec::new(),
        ),
        (SpaceModel::Interval, ClosedSet::Intervals(v)) => {
            MultiplicityFunction::new(space.clone(), Vec::new(), v.clone())
        }
        _ => Err(MultiplicityError::SpaceMismatch),
    }
}

pub fn mf_is_idempotent(nu: &MultiplicityFunction) -> bool {
    nu.atoms.values().all(|&k| k == ExtNat::Inf)
}

/// The class of ν in T(X), i.e. its support.
pub fn mf_tau_quotient(nu: &MultiplicityFunction) -> ClosedSet {
    match nu.space {
        SpaceModel::Discrete(_) => ClosedSet::points(nu.atoms.keys().filter_map(|p| match p {
            Point::Index(i) => Some(*i),
            Point::At(_) => None,
        })),
        SpaceModel::Interval => {
            let mut v = nu.essential.clone();
            for p in nu.atoms.keys() {
                if let Point::At(q) = p {
                    v.push(Interval { lo: *q, hi: *q });
                }
            }
            ClosedSet::intervals(v)
        }
    }
}

/// The dyadic enumeration 0, 1, 1/2, 1/4, 3/4, 1/8, 3/8, … of [0,1].
pub fn dyadic_enumeration() -> impl Iterator<Item = Q> {
    let ends = [Q::zero(), Q::one()].into_iter();
    let inner = (1u32..62).flat_map(|e| {
        let d = 1i64 << e;
        (1..d).step_by(2).map(move |n| Q::new(n, d))
    });
    ends.chain(inner)
}

/// The n-th term of the increasing sequence in Mf_i(X) with supremum ν.
pub fn mf_sup_sequence(nu: &MultiplicityFunction, n: u64) -> MultiplicityFunction {
    let cap = ExtNat::Fin(n);
    let mut atoms: BTreeMap<Point, ExtNat> =
        nu.atoms.iter().map(|(p, &k)| (*p, if k.is_finite() { k } else { cap })).collect();
    if !nu.essential.is_empty() {
        for q in dyadic_enumeration()
            .filter(|q| nu.essential.iter().any(|iv| iv.contains(*q)))
            .take(n as usize)
        {
            atoms.insert(Point::At(q), cap);
        }
    }
    atoms.retain(|_, k| !k.is_zero());
    MultiplicityFunction {
        space: nu.space.clone(),
        atoms,
        essential: Vec::new(),
    }
}

/// The {0,1,∞}-valued fragment of Mf(X) for a discrete X, in a fixed order.
pub fn discrete_fragment(space: &SpaceModel) -> Result<Vec<MultiplicityFunction>, MultiplicityError> {
    let k = space.point_count().ok_or(MultiplicityError::SpaceMismatch)?;
    if k > MAX_RECOVERY_POINTS {
        return Err(MultiplicityError::FragmentTooLarge {
            max: MAX_RECOVERY_POINTS,
            got: k,
        });
    }
    let levels = [ExtNat::ZERO, ExtNat::ONE, ExtNat::Inf];
    let total = 3usize.pow(k as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut vals = Vec::with_capacity(k);
        for _ in 0..k {
            vals.push(levels[code % 3]);
            code /= 3;
        }
        out.push(MultiplicityFunction::from_values(space.clone(), &vals)?);
    }
    Ok(out)
}

pub const MAX_RECOVERY_POINTS: usize = 8;

/// The space reconstructed from an abstract monoid fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredSpace {
    pub point_count: usize,
    /// Closed sets as bitmasks over the recovered points, sorted.
    pub closed_sets: Vec<u64>,
}

impl RecoveredSpace {
    pub fn is_power_set(&self) -> bool {
        self.closed_sets.len() == 1usize << self.point_count
    }
}

/// Recovers the points and closed sets of X from the {0,1,∞}-valued fragment of
/// Mf(X), using only addition and order: points are the minimal nonzero elements,
/// closed sets are the idempotents, and x ∈ C iff ω_C + δ_x = ω_C.
pub fn mf_recover_space<E, A, L>(elems: &[E], add: A, leq: L) -> Result<RecoveredSpace, MultiplicityError>
where
    E: PartialEq,
    A: Fn(&E, &E) -> E,
    L: Fn(&E, &E) -> bool,
{
    let inconsistent = |s: &str| MultiplicityError::FragmentInconsistent(s.to_string());
    let idem: Vec<usize> = (0..elems.len())
        .filter(|&i| add(&elems[i], &elems[i]) == elems[i])
        .collect();
    let zero = idem
        .iter()
        .copied()
        .find(|&z| idem.iter().all(|&j| leq(&elems[z], &elems[j])))
        .ok_or_else(|| inconsistent("no least idempotent"))?;
    if !elems.iter().all(|x| add(&elems[zero], x) == *x) {
        return Err(inconsistent("least idempotent is not neutral"));
    }

    let mut mins: Vec<usize> = Vec::new();
    for i in (0..elems.len()).filter(|&i| elems[i] != elems[zero]) {
        if mins.iter().any(|&m| leq(&elems[m], &elems[i])) {
            continue;
        }
        mins.retain(|&m| !leq(&elems[i], &elems[m]));
        mins.push(i);
    }
    if mins.len() > 64 {
        return Err(inconsistent("more than 64 minimal elements"));
    }
    if mins.iter().any(|&m| idem.contains(&m)) {
        return Err(inconsistent("a minimal nonzero element is idempotent"));
    }

    let mut closed = BTreeSet::new();
    for &w in &idem {
        let mut mask = 0u64;
        for (bit, &m) in mins.iter().enumerate() {
            if add(&elems[w], &elems[m]) == elems[w] {
                mask |= 1 << bit;
            }
        }
        if w == zero && mask != 0 {
            return Err(inconsistent("zero absorbs a point"));
        }
        if !closed.insert(mask) {
            return Err(inconsistent("two idempotents absorb the same points"));
        }
    }
    Ok(RecoveredSpace {
        point_count: mins.len(),
        closed_sets: closed.into_iter().collect(),
    })
}

fn ext_json(k: ExtNat) -> Value {
    match k {
        ExtNat::Fin(n) => json!(n),
        ExtNat::Inf => json!("inf"),
    }
}

fn ext_from_json(v: &Value) -> Result<ExtNat, MultiplicityError> {
    match v {
        Value::Number(n) => n
            .as_u64()
            .map(ExtNat::Fin)
            .ok_or_else(|| MultiplicityError::Schema(format!("bad multiplicity {n}"))),
        Value::String(s) if s == "inf" => Ok(ExtNat::Inf),
        other => Err(MultiplicityError::Schema(format!("bad multiplicity {other}"))),
    }
}

fn q_from_json(v: &Value) -> Result<Q, MultiplicityError> {
    match v {
        Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| MultiplicityError::Schema(format!("bad rational {s:?}"))),
        Value::Number(n) => n
            .as_i64()
            .map(Q::from_integer)
            .ok_or_else(|| MultiplicityError::Schema(format!("bad rational {n}"))),
        other => Err(MultiplicityError::Schema(format!("bad rational {other}"))),
    }
}

impl SpaceModel {
    pub fn to_json(&self) -> Value {
        match self {
            SpaceModel::Discrete(l) => json!({"kind": "discrete", "points": l}),
            SpaceModel::Interval => json!({"kind": "interval"}),
        }
    }

    pub fn from_json(v: &Value) -> Result<SpaceModel, MultiplicityError> {
        match v.get("kind").and_then(Value::as_str) {
            Some("interval") => Ok(SpaceModel::Interval),
            Some("discrete") => {
                let pts = v
                    .get("points")
                    .and_then(Value::as_array)
                    .ok_or_else(|| MultiplicityError::Schema("discrete space needs points".into()))?;
                let labels = pts
                    .iter()
                    .map(|p| {
                        p.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| MultiplicityError::Schema("point labels are strings".into()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SpaceModel::discrete(&labels)
            }
            _ => Err(MultiplicityError::Schema("space.kind must be discrete or interval".into())),
        }
    }
}

impl MultiplicityFunction {
    /// Canonical JSON document.
    pub fn to_json(&self) -> Value {
        let atoms: Vec<Value> = self
            .atoms
            .iter()
            .map(|(p, &k)| json!({"at": self.space.point_name(p), "mult": ext_json(k)}))
            .collect();
        let ess: Vec<Value> = self
            .essential
            .iter()
            .map(|iv| json!([iv.lo.to_string(), iv.hi.to_string()]))
            .collect();
        json!({
            "schema": crate::SCHEMA,
            "space": self.space.to_json(),
            "atoms": atoms,
            "essential": ess,
        })
    }

    /// Parses a document; `space` overrides the embedded space when given.
    pub fn from_json(v: &Value, space: Option<&SpaceModel>) -> Result<Self, MultiplicityError> {
        if let Some(s) = v.get("schema") {
            if s != crate::SCHEMA {
                return Err(MultiplicityError::Schema(format!("unsupported schema {s}")));
            }
        }
        let space = match (space, v.get("space")) {
            (Some(s), Some(embedded)) => {
                if SpaceModel::from_json(embedded)? != *s {
                    return Err(MultiplicityError::SpaceMismatch);
                }
                s.clone()
            }
            (Some(s), None) => s.clone(),
            (None, Some(embedded)) => SpaceModel::from_json(embedded)?,
            (None, None) => return Err(MultiplicityError::Schema("missing space".into())),
        };
        let mut atoms = Vec::new();
        for a in v.get("atoms").and_then(Value::as_array).into_iter().flatten() {
            let at = a
                .get("at")
                .ok_or_else(|| MultiplicityError::Schema("atom without \"at\"".into()))?;
            let name = match at {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(MultiplicityError::Schema("bad atom point".into())),
            };
            let mult = a
                .get("mult")
                .ok_or_else(|| MultiplicityError::Schema("atom without \"mult\"".into()))?;
            atoms.push((space.label(&name)?, ext_from_json(mult)?));
        }
        let mut ess = Vec::new();
        for e in v.get("essential").and_then(Value::as_array).into_iter().flatten() {
            let pair = e
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| MultiplicityError::Schema("essential entries are [lo, hi]".into()))?;
            ess.push(Interval::new(q_from_json(&pair[0])?, q_from_json(&pair[1])?)?);
        }
        MultiplicityFunction::new(space, atoms, ess)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtNat::{Fin, Inf};

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    fn iv(a: Q, b: Q) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn pqr() -> SpaceModel {
        SpaceModel::discrete(&["p", "q", "r"]).unwrap()
    }

    fn disc(space: &SpaceModel, pairs: &[(&str, ExtNat)]) -> MultiplicityFunction {
        let atoms = pairs.iter().map(|(l, k)| (space.label(l).unwrap(), *k)).collect();
        MultiplicityFunction::new(space.clone(), atoms, vec![]).unwrap()
    }

    fn unit(atoms: &[(Q, ExtNat)], ess: &[(Q, Q)]) -> MultiplicityFunction {
        MultiplicityFunction::new(
            SpaceModel::Interval,
            atoms.iter().map(|&(p, k)| (Point::At(p), k)).collect(),
            ess.iter().map(|&(a, b)| iv(a, b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn add_examples() {
        let s = pqr();
        let sum = mf_add(&disc(&s, &[("p", Fin(2))]), &disc(&s, &[("p", Fin(3)), ("q", Inf)])).unwrap();
        assert_eq!(sum, disc(&s, &[("p", Fin(5)), ("q", Inf)]));

        let half = unit(&[], &[(q(0, 1), q(1, 2))]);
        let absorbed = mf_add(&half, &unit(&[(q(1, 4), Fin(7))], &[])).unwrap();
        assert_eq!(absorbed, half);

        let merged = mf_add(&half, &unit(&[], &[(q(1, 2), q(1, 1))])).unwrap();
        assert_eq!(merged, unit(&[], &[(q(0, 1), q(1, 1))]));
        assert!(mf_add(&half, &disc(&s, &[])).is_err());
    }

    #[test]
    fn leq_examples() {
        let s = SpaceModel::discrete(&["p", "q"]).unwrap();
        assert!(mf_leq(&disc(&s, &[("p", Fin(2))]), &disc(&s, &[("p", Fin(3)), ("q", Inf)])).unwrap());
        let a = unit(&[(q(3, 4), Fin(2))], &[(q(0, 1), q(1, 2))]);
        assert!(mf_leq(&a, &unit(&[], &[(q(0, 1), q(1, 1))])).unwrap());
        let half = unit(&[], &[(q(0, 1), q(1, 2))]);
        assert!(!mf_leq(&half, &unit(&[(q(1, 4), Inf)], &[])).unwrap());
    }

    #[test]
    fn omega_examples() {
        let s = pqr();
        let c = ClosedSet::points([0]);
        assert_eq!(mf_omega(&s, &c).unwrap(), disc(&s, &[("p", Inf)]));
        let c = ClosedSet::intervals(vec![iv(q(0, 1), q(1, 3)), iv(q(1, 2), q(1, 2))]);
        let w = mf_omega(&SpaceModel::Interval, &c).unwrap();
        assert_eq!(w.essential(), &[iv(q(0, 1), q(1, 3))]);
        assert_eq!(w.atoms().get(&Point::At(q(1, 2))), Some(&Inf));
        assert!(mf_omega(&s, &ClosedSet::points([])).unwrap().is_zero());
    }

    #[test]
    fn idempotent_and_tau() {
        let s = pqr();
        assert!(mf_is_idempotent(&unit(&[], &[(q(0, 1), q(1, 2))])));
        assert!(!mf_is_idempotent(&disc(&s, &[("p", Fin(2))])));
        assert!(mf_is_idempotent(&MultiplicityFunction::zero(s.clone())));

        assert_eq!(
            mf_tau_quotient(&disc(&s, &[("p", Fin(2)), ("q", Inf)])),
            ClosedSet::points([0, 1])
        );
        let t = mf_tau_quotient(&unit(&[(q(3, 4), Fin(1))], &[(q(0, 1), q(1, 2))]));
        assert_eq!(
            t,
            ClosedSet::Intervals(vec![iv(q(0, 1), q(1, 2)), iv(q(3, 4), q(3, 4))])
        );
        assert!(mf_tau_quotient(&MultiplicityFunction::zero(s)).is_empty());
    }

    #[test]
    fn dyadic_order() {
        let first: Vec<Q> = dyadic_enumeration().take(7).collect();
        assert_eq!(
            first,
            vec![q(0, 1), q(1, 1), q(1, 2), q(1, 4), q(3, 4), q(1, 8), q(3, 8)]
        );
    }

    #[test]
    fn sup_sequence_examples() {
        let s = SpaceModel::discrete(&["p"]).unwrap();
        assert_eq!(mf_sup_sequence(&disc(&s, &[("p", Inf)]), 3), disc(&s, &[("p", Fin(3))]));
        for n in 1..5 {
            assert_eq!(mf_sup_sequence(&disc(&s, &[("p", Fin(2))]), n), disc(&s, &[("p", Fin(2))]));
        }
        let full = unit(&[], &[(q(0, 1), q(1, 1))]);
        let t = mf_sup_sequence(&full, 2);
        assert_eq!(t, unit(&[(q(0, 1), Fin(2)), (q(1, 1), Fin(2))], &[]));
        assert!(mf_leq(&t, &full).unwrap());
        assert!(t.is_finitely_supported());
    }

    #[test]
    fn recover_small_spaces() {
        let two = SpaceModel::discrete(&["p", "q"]).unwrap();
        let frag = discrete_fragment(&two).unwrap();
        assert_eq!(frag.len(), 9);
        let add = |a: &MultiplicityFunction, b: &MultiplicityFunction| mf_add(a, b).unwrap();
        let leq = |a: &MultiplicityFunction, b: &MultiplicityFunction| mf_leq(a, b).unwrap();
        let r = mf_recover_space(&frag, add, leq).unwrap();
        assert_eq!(r.point_count, 2);
        assert_eq!(r.closed_sets.len(), 4);

        let one = SpaceModel::discrete(&["p"]).unwrap();
        let r = mf_recover_space(&discrete_fragment(&one).unwrap(), add, leq).unwrap();
        assert_eq!((r.point_count, r.closed_sets.len()), (1, 2));

        let r3 = mf_recover_space(&discrete_fragment(&SpaceModel::numbered(3)).unwrap(), add, leq).unwrap();
        let r4 = mf_recover_space(&discrete_fragment(&SpaceModel::numbered(4)).unwrap(), add, leq).unwrap();
        assert_ne!(r3.point_count, r4.point_count);
        assert!(discrete_fragment(&SpaceModel::numbered(9)).is_err());
    }

    #[test]
    fn recover_rejects_non_monoid() {
        // (max, ≤) on {0,1,2}: both 1 and 2 absorb the only minimal element
        let elems: Vec<u8> = vec![0, 1, 2];
        let r = mf_recover_space(&elems, |a, b| *a.max(b), |a, b| a <= b);
        assert!(matches!(r, Err(MultiplicityError::FragmentInconsistent(_))));
    }

    #[test]
    fn json_round_trip() {
        let a = unit(&[(q(3, 4), Inf), (q(7, 8), Fin(2))], &[(q(0, 1), q(1, 2))]);
        let doc = a.to_json();
        assert_eq!(doc["atoms"][0]["at"], "3/4");
        assert_eq!(doc["atoms"][0]["mult"], "inf");
        assert_eq!(doc["essential"][0][1], "1/2");
        assert_eq!(MultiplicityFunction::from_json(&doc, None).unwrap(), a);

        let s = pqr();
        let b = disc(&s, &[("p", Fin(2)), ("r", Inf)]);
        assert_eq!(MultiplicityFunction::from_json(&b.to_json(), None).unwrap(), b);
        let bad = json!({"space": {"kind": "discrete", "points": ["p"]}, "atoms": [{"at": "z", "mult": 1}]});
        assert!(MultiplicityFunction::from_json(&bad, None).is_err());
        let bad = json!({"space": {"kind": "interval"}, "atoms": [{"at": "3/2", "mult": 1}]});
        assert!(MultiplicityFunction::from_json(&bad, None).is_err());
    }
}
