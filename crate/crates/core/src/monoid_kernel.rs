//! Concrete ordered monoids and finite-fragment checkers for the W-category axioms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Exact rationals used across the crate.
pub type Q = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("addition escapes the fragment: {0}")]
    FragmentNotClosed(String),
    #[error("{0} is not a nonnegative dyadic rational")]
    NotDyadic(Q),
    #[error("soft part must be strictly positive, got {0}")]
    NotPositive(Q),
    #[error("cannot parse extended natural from {0:?}")]
    Parse(String),
}

/// An element of ℕ₀ ∪ {∞}.
///
/// Finite sums that overflow `u64` saturate to `Inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub const ZERO: ExtNat = ExtNat::Fin(0);
    pub const ONE: ExtNat = ExtNat::Fin(1);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtNat::Fin(_))
    }

    pub fn is_zero(self) -> bool {
        self == ExtNat::ZERO
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Fin(n) => Some(n),
            ExtNat::Inf => None,
        }
    }
}

impl Default for ExtNat {
    fn default() -> Self {
        ExtNat::ZERO
    }
}

impl From<u64> for ExtNat {
    fn from(n: u64) -> Self {
        ExtNat::Fin(n)
    }
}

impl Add for ExtNat {
    type Output = ExtNat;
    fn add(self, rhs: ExtNat) -> ExtNat {
        extnat_add(self, rhs)
    }
}

impl Mul for ExtNat {
    type Output = ExtNat;
    /// 0·∞ = 0, as for ranks of tensor products.
    fn mul(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Fin(0), _) | (_, ExtNat::Fin(0)) => ExtNat::ZERO,
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a.checked_mul(b).map_or(ExtNat::Inf, ExtNat::Fin),
            _ => ExtNat::Inf,
        }
    }
}

impl std::iter::Sum for ExtNat {
    fn sum<I: Iterator<Item = ExtNat>>(iter: I) -> ExtNat {
        iter.fold(ExtNat::ZERO, extnat_add)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtNat {
    type Err = KernelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "inf" || t == "∞" {
            return Ok(ExtNat::Inf);
        }
        t.parse::<u64>()
            .map(ExtNat::Fin)
            .map_err(|_| KernelError::Parse(s.to_string()))
    }
}

pub fn extnat_add(x: ExtNat, y: ExtNat) -> ExtNat {
    match (x, y) {
        (ExtNat::Fin(a), ExtNat::Fin(b)) => a.checked_add(b).map_or(ExtNat::Inf, ExtNat::Fin),
        _ => ExtNat::Inf,
    }
}

/// x ≪ y in ℕ₀ ∪ {∞}: finite elements are compact, ∞ is not.
pub fn extnat_way_below(x: ExtNat, y: ExtNat) -> bool {
    match y {
        ExtNat::Fin(_) => x <= y,
        ExtNat::Inf => x.is_finite(),
    }
}

/// A nonnegative dyadic rational `num / 2^exp` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: u64, exp: u32) -> Dyadic {
        let mut d = Dyadic { num, exp };
        if d.num == 0 {
            d.exp = 0;
        }
        while d.exp > 0 && d.num % 2 == 0 {
            d.num /= 2;
            d.exp -= 1;
        }
        d
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn exp(self) -> u32 {
        self.exp
    }

    pub fn to_ratio(self) -> Q {
        Q::new(self.num as i64, 1i64 << self.exp)
    }

    pub fn from_ratio(q: Q) -> Result<Dyadic, KernelError> {
        let d = *q.denom();
        if q.is_negative() || d & (d - 1) != 0 {
            return Err(KernelError::NotDyadic(q));
        }
        Ok(Dyadic::new(*q.numer() as u64, d.trailing_zeros()))
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        Dyadic::new((self.num << (e - self.exp)) + (rhs.num << (e - rhs.exp)), e)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_ratio().cmp(&other.to_ratio())
    }
}

/// An element of ℕ₀[1/2] ⊔ (0,∞): a compact dyadic part and a soft positive part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CarValue {
    Compact(Dyadic),
    Soft(Q),
}

impl CarValue {
    pub fn compact(q: Q) -> Result<CarValue, KernelError> {
        Dyadic::from_ratio(q).map(CarValue::Compact)
    }

    pub fn soft(q: Q) -> Result<CarValue, KernelError> {
        if q <= Q::zero() {
            return Err(KernelError::NotPositive(q));
        }
        Ok(CarValue::Soft(q))
    }

    pub fn value(self) -> Q {
        match self {
            CarValue::Compact(d) => d.to_ratio(),
            CarValue::Soft(t) => t,
        }
    }
}

pub fn car_add(x: CarValue, y: CarValue) -> CarValue {
    match (x, y) {
        (CarValue::Compact(a), CarValue::Compact(b)) => CarValue::Compact(a + b),
        _ => CarValue::Soft(x.value() + y.value()),
    }
}

/// Compact d ≤ Soft t iff d < t; Soft t ≤ Compact d iff t ≤ d.
pub fn car_leq(x: CarValue, y: CarValue) -> bool {
    match (x, y) {
        (CarValue::Compact(d), CarValue::Soft(t)) => d.to_ratio() < t,
        _ => x.value() <= y.value(),
    }
}

impl fmt::Display for CarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CarValue::Compact(d) => write!(f, "{}", d.to_ratio()),
            CarValue::Soft(t) => write!(f, "{t}'"),
        }
    }
}

/// A positively ordered monoid with an auxiliary relation, given by oracles.
pub trait AuxMonoid {
    type Elem: Clone + PartialEq + fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn leq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
    fn aux(&self, a: &Self::Elem, b: &Self::Elem) -> bool;
}

/// ℕ₀ ∪ {∞} with ≪ as auxiliary relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtNatWayBelow;

/// ℕ₀ ∪ {∞} with ≤ itself used as auxiliary relation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtNatFullOrder;

impl AuxMonoid for ExtNatWayBelow {
    type Elem = ExtNat;
    fn zero(&self) -> ExtNat {
        ExtNat::ZERO
    }
    fn add(&self, a: &ExtNat, b: &ExtNat) -> ExtNat {
        *a + *b
    }
    fn leq(&self, a: &ExtNat, b: &ExtNat) -> bool {
        a <= b
    }
    fn aux(&self, a: &ExtNat, b: &ExtNat) -> bool {
        extnat_way_below(*a, *b)
    }
}

impl AuxMonoid for ExtNatFullOrder {
    type Elem = ExtNat;
    fn zero(&self) -> ExtNat {
        ExtNat::ZERO
    }
    fn add(&self, a: &ExtNat, b: &ExtNat) -> ExtNat {
        *a + *b
    }
    fn leq(&self, a: &ExtNat, b: &ExtNat) -> bool {
        a <= b
    }
    fn aux(&self, a: &ExtNat, b: &ExtNat) -> bool {
        a <= b
    }
}

/// The fragment {0, 1, …, bound, ∞}, or {0} for bound 0: ∞ has no chain of at
/// least two terms below it there, so its supremum could not be extrapolated.
pub fn extnat_fragment(bound: u64) -> Vec<ExtNat> {
    if bound == 0 {
        return vec![ExtNat::ZERO];
    }
    (0..=bound).map(ExtNat::Fin).chain([ExtNat::Inf]).collect()
}

/// A finite ≺-increasing chain drawn from a fragment.
///
/// `stationary` means the chain has reached its target and would repeat its last
/// term forever; otherwise it is a truncation of a longer sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain<E> {
    pub terms: Vec<E>,
    pub stationary: bool,
}

impl<E: Clone> Chain<E> {
    pub fn map<F: Fn(&E) -> E>(&self, f: F) -> Chain<E> {
        Chain {
            terms: self.terms.iter().map(f).collect(),
            stationary: self.stationary,
        }
    }
}

/// Supremum oracle on ℕ₀ ∪ {∞}.
///
/// A stationary chain has its last term as supremum. A truncated chain whose tail
/// still increases is extrapolated to ∞; a truncated chain with a constant tail
/// stays at that value.
pub fn extnat_sup(chain: &Chain<ExtNat>) -> Option<ExtNat> {
    let last = *chain.terms.last()?;
    if chain.stationary {
        return Some(last);
    }
    match chain.terms.len() {
        1 => Some(last),
        n if chain.terms[n - 2] < last => Some(ExtNat::Inf),
        _ => Some(last),
    }
}

/// A defective oracle that only understands chains of finite values.
pub fn extnat_sup_finite_only(chain: &Chain<ExtNat>) -> Option<ExtNat> {
    if chain.terms.iter().any(|t| !t.is_finite()) {
        return None;
    }
    extnat_sup(chain)
}

/// How to treat pairs whose sum leaves the fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClosurePolicy {
    /// Any escaping sum is an error.
    Strict,
    /// Pairs whose sum escapes are skipped and counted.
    #[default]
    InScope,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomResult<E> {
    pub axiom: &'static str,
    pub pass: bool,
    pub checked: usize,
    pub skipped: usize,
    pub witness: Option<Vec<E>>,
    pub note: String,
}

impl<E> AxiomResult<E> {
    fn new(axiom: &'static str) -> Self {
        AxiomResult {
            axiom,
            pass: true,
            checked: 0,
            skipped: 0,
            witness: None,
            note: String::new(),
        }
    }

    fn fail(&mut self, witness: Vec<E>, note: impl Into<String>) {
        if self.pass {
            self.pass = false;
            self.witness = Some(witness);
            self.note = note.into();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport<E> {
    pub results: Vec<AxiomResult<E>>,
}

impl<E> AxiomReport<E> {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn get(&self, axiom: &str) -> Option<&AxiomResult<E>> {
        self.results.iter().find(|r| r.axiom == axiom)
    }
}

impl<E: fmt::Display> fmt::Display for AxiomReport<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            write!(f, "{:<6} {}", r.axiom, if r.pass { "pass" } else { "FAIL" })?;
            write!(f, " (checked {}", r.checked)?;
            if r.skipped > 0 {
                write!(f, ", skipped {}", r.skipped)?;
            }
            f.write_str(")")?;
            if let Some(w) = &r.witness {
                let w: Vec<String> = w.iter().map(|e| e.to_string()).collect();
                write!(f, " witness [{}]: {}", w.join(", "), r.note)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn position<E: PartialEq>(frag: &[E], e: &E) -> Option<usize> {
    frag.iter().position(|x| x == e)
}

/// Auxiliary relation axioms (i)–(iii) over all tuples of the fragment.
fn check_aux_axioms<M: AuxMonoid>(m: &M, frag: &[M::Elem]) -> Vec<AxiomResult<M::Elem>> {
    let mut i = AxiomResult::new("AUX.i");
    let mut ii = AxiomResult::new("AUX.ii");
    let mut iii = AxiomResult::new("AUX.iii");
    let z = m.zero();
    for a in frag {
        iii.checked += 1;
        if !m.aux(&z, a) {
            iii.fail(vec![a.clone()], "0 ≺ a fails");
        }
        for b in frag {
            i.checked += 1;
            if m.aux(a, b) && !m.leq(a, b) {
                i.fail(vec![a.clone(), b.clone()], "a ≺ b but not a ≤ b");
            }
        }
    }
    for b in frag {
        for c in frag {
            if !m.aux(b, c) {
                continue;
            }
            for a in frag.iter().filter(|a| m.leq(a, b)) {
                for d in frag.iter().filter(|d| m.leq(c, d)) {
                    ii.checked += 1;
                    if !m.aux(a, d) {
                        ii.fail(
                            vec![a.clone(), b.clone(), c.clone(), d.clone()],
                            "a ≤ b ≺ c ≤ d but not a ≺ d",
                        );
                    }
                }
            }
        }
    }
    vec![i, ii, iii]
}

/// Builds the cofinal ≺-chain of `a^≺ ∩ F`, or explains why none exists.
fn cofinal_chain<M: AuxMonoid>(
    m: &M,
    frag: &[M::Elem],
    a: &M::Elem,
) -> Result<Chain<M::Elem>, String> {
    let below: Vec<usize> = (0..frag.len()).filter(|&i| m.aux(&frag[i], a)).collect();
    if below.is_empty() {
        return Err("a^≺ is empty".into());
    }
    let top = below
        .iter()
        .copied()
        .find(|&t| below.iter().all(|&x| m.leq(&frag[x], &frag[t])))
        .ok_or_else(|| "a^≺ ∩ F has no largest element".to_string())?;
    let start = below
        .iter()
        .copied()
        .find(|&s| frag[s] == m.zero())
        .unwrap_or(below[0]);
    // shortest ≺-path inside a^≺ from 0 to its maximum
    let mut prev = vec![usize::MAX; frag.len()];
    let mut seen = vec![false; frag.len()];
    let mut queue = std::collections::VecDeque::from([start]);
    seen[start] = true;
    while let Some(x) = queue.pop_front() {
        if x == top {
            break;
        }
        for &y in &below {
            if !seen[y] && m.aux(&frag[x], &frag[y]) {
                seen[y] = true;
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    if !seen[top] {
        return Err("no ≺-increasing path reaches the top of a^≺".into());
    }
    let mut path = vec![top];
    while *path.last().unwrap() != start {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    Ok(Chain {
        terms: path.into_iter().map(|i| frag[i].clone()).collect(),
        stationary: frag[top] == *a,
    })
}

/// Checks WO.1–WO.4 (and the auxiliary-relation axioms) on a finite fragment.
pub fn check_wo_axioms<M, S>(
    m: &M,
    frag: &[M::Elem],
    sup: S,
    policy: ClosurePolicy,
) -> Result<AxiomReport<M::Elem>, KernelError>
where
    M: AuxMonoid,
    S: Fn(&Chain<M::Elem>) -> Option<M::Elem>,
{
    let mut results = check_aux_axioms(m, frag);
    let mut wo1 = AxiomResult::new("WO.1");
    let mut wo2 = AxiomResult::new("WO.2");
    for a in frag {
        wo1.checked += 1;
        match cofinal_chain(m, frag, a) {
            Err(why) => wo1.fail(vec![a.clone()], why),
            Ok(chain) => {
                wo2.checked += 1;
                match sup(&chain) {
                    Some(s) if s == *a => {}
                    Some(s) => {
                        let mut w = vec![a.clone(), s];
                        w.extend(chain.terms);
                        wo2.fail(w, "supremum of the cofinal chain differs from a");
                    }
                    None => {
                        let mut w = vec![a.clone()];
                        w.extend(chain.terms);
                        wo2.fail(w, "no supremum available for the cofinal chain of a");
                    }
                }
            }
        }
    }

    let mut wo3 = AxiomResult::new("WO.3");
    let mut wo4 = AxiomResult::new("WO.4");
    for a in frag {
        for b in frag {
            let s = m.add(a, b);
            if position(frag, &s).is_none() {
                match policy {
                    ClosurePolicy::Strict => {
                        return Err(KernelError::FragmentNotClosed(format!("{a:?} + {b:?}")))
                    }
                    ClosurePolicy::InScope => {
                        wo3.skipped += 1;
                        wo4.skipped += 1;
                        continue;
                    }
                }
            }
            let ab: Vec<&M::Elem> = frag.iter().filter(|x| m.aux(x, a)).collect();
            let bb: Vec<&M::Elem> = frag.iter().filter(|x| m.aux(x, b)).collect();
            let sums: Vec<M::Elem> = ab
                .iter()
                .flat_map(|x| bb.iter().map(|y| m.add(x, y)))
                .collect();
            for (k, t) in sums.iter().enumerate() {
                wo3.checked += 1;
                if !m.aux(t, &s) {
                    let (x, y) = (ab[k / bb.len()], bb[k % bb.len()]);
                    wo3.fail(
                        vec![x.clone(), a.clone(), y.clone(), b.clone()],
                        "a' ≺ a, b' ≺ b but a'+b' ⊀ a+b",
                    );
                }
            }
            for c in frag.iter().filter(|c| m.aux(c, &s)) {
                wo4.checked += 1;
                if !sums.iter().any(|t| m.leq(c, t)) {
                    wo4.fail(
                        vec![c.clone(), a.clone(), b.clone()],
                        "c ≺ a+b is not dominated by any a'+b' with a' ≺ a, b' ≺ b",
                    );
                }
            }
        }
    }
    results.extend([wo1, wo2, wo3, wo4]);
    Ok(AxiomReport { results })
}

/// Checks that `map` is a morphism satisfying WM.1 and WM.2 between two fragments.
pub fn check_wm_axioms<M, F, S>(
    m: &M,
    map: F,
    source: &[M::Elem],
    target: &[M::Elem],
    sup: S,
) -> Result<AxiomReport<M::Elem>, KernelError>
where
    M: AuxMonoid,
    F: Fn(&M::Elem) -> M::Elem,
    S: Fn(&Chain<M::Elem>) -> Option<M::Elem>,
{
    for a in source {
        let fa = map(a);
        if position(target, &fa).is_none() {
            return Err(KernelError::FragmentNotClosed(format!(
                "image {fa:?} of {a:?} lies outside the target fragment"
            )));
        }
    }
    let mut hom = AxiomResult::new("MORPH");
    let z = m.zero();
    hom.checked += 1;
    if map(&z) != z {
        hom.fail(vec![z.clone(), map(&z)], "f(0) ≠ 0");
    }
    for a in source {
        for b in source {
            let s = m.add(a, b);
            if position(source, &s).is_none() {
                hom.skipped += 1;
                continue;
            }
            hom.checked += 1;
            if map(&s) != m.add(&map(a), &map(b)) {
                hom.fail(vec![a.clone(), b.clone()], "f(a+b) ≠ f(a)+f(b)");
            }
            if m.leq(a, b) && !m.leq(&map(a), &map(b)) {
                hom.fail(vec![a.clone(), b.clone()], "a ≤ b but f(a) ≰ f(b)");
            }
        }
    }

    let mut wm1 = AxiomResult::new("WM.1");
    for a in source {
        let Ok(chain) = cofinal_chain(m, source, a) else {
            wm1.skipped += 1;
            continue;
        };
        wm1.checked += 1;
        let image = chain.map(&map);
        if sup(&image) != Some(map(a)) {
            let mut w = vec![a.clone(), map(a)];
            w.extend(image.terms);
            wm1.fail(w, "f(sup) differs from sup of the image chain");
        }
    }

    let mut wm2 = AxiomResult::new("WM.2");
    for a in source {
        for b in source {
            if m.aux(a, b) {
                wm2.checked += 1;
                if !m.aux(&map(a), &map(b)) {
                    wm2.fail(
                        vec![a.clone(), b.clone(), map(a), map(b)],
                        "a ≺ b but f(a) ⊀ f(b)",
                    );
                }
            }
        }
    }
    Ok(AxiomReport {
        results: vec![hom, wm1, wm2],
    })
}

/// The order extends the algebraic order: x + z = y in the fragment forces x ≤ y.
pub fn check_positive_order<M: AuxMonoid>(m: &M, frag: &[M::Elem]) -> Option<(M::Elem, M::Elem)> {
    for x in frag {
        for z in frag {
            let y = m.add(x, z);
            if position(frag, &y).is_some() && !m.leq(x, &y) {
                return Some((x.clone(), y));
            }
        }
    }
    None
}
