//! Supernatural numbers with finite support, plus the universal pattern 𝒬.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::monoid_kernel::ExtNat;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupernaturalError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} appears twice")]
    DuplicateBase(u64),
    #[error("exponent of {0} must be at least 1")]
    ZeroExponent(u64),
    #[error("malformed supernatural number {0:?}")]
    Syntax(String),
}

/// ∏ p^{k_p} with finitely many nonzero exponents, or 𝒬 (every exponent ∞).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Supernatural {
    exponents: BTreeMap<u64, ExtNat>,
    universal: bool,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Builds a supernatural number from (prime, exponent) pairs.
pub fn sn_make(pairs: &[(u64, ExtNat)]) -> Result<Supernatural, SupernaturalError> {
    let mut exponents = BTreeMap::new();
    for &(p, k) in pairs {
        if !is_prime(p) {
            return Err(SupernaturalError::NotPrime(p));
        }
        if k.is_zero() {
            return Err(SupernaturalError::ZeroExponent(p));
        }
        if exponents.insert(p, k).is_some() {
            return Err(SupernaturalError::DuplicateBase(p));
        }
    }
    Ok(Supernatural {
        exponents,
        universal: false,
    })
}

impl Supernatural {
    pub fn one() -> Supernatural {
        Supernatural::default()
    }

    /// The pattern of the universal UHF algebra.
    pub fn universal() -> Supernatural {
        Supernatural {
            exponents: BTreeMap::new(),
            universal: true,
        }
    }

    /// A natural number n ≥ 1 by its factorization.
    pub fn from_natural(mut n: u64) -> Supernatural {
        let mut exponents = BTreeMap::new();
        let mut p = 2;
        while n > 1 {
            while n % p == 0 {
                let e = exponents.entry(p).or_insert(ExtNat::ZERO);
                *e = *e + ExtNat::ONE;
                n /= p;
            }
            p += 1;
        }
        Supernatural {
            exponents,
            universal: false,
        }
    }

    pub fn is_universal(&self) -> bool {
        self.universal
    }

    pub fn is_one(&self) -> bool {
        !self.universal && self.exponents.is_empty()
    }

    /// Exponent of a prime, with the universal flag expanded.
    pub fn exponent(&self, p: u64) -> ExtNat {
        if self.universal {
            return ExtNat::Inf;
        }
        self.exponents.get(&p).copied().unwrap_or(ExtNat::ZERO)
    }

    pub fn exponents(&self) -> &BTreeMap<u64, ExtNat> {
        &self.exponents
    }

    /// The value as a natural number if every exponent is finite.
    pub fn as_natural(&self) -> Option<u64> {
        if self.universal {
            return None;
        }
        let mut n: u64 = 1;
        for (&p, &k) in &self.exponents {
            n = n.checked_mul(p.checked_pow(k.finite()?.try_into().ok()?)?)?;
        }
        Some(n)
    }
}

pub fn sn_mul(a: &Supernatural, b: &Supernatural) -> Supernatural {
    if a.universal || b.universal {
        return Supernatural::universal();
    }
    let mut exponents = a.exponents.clone();
    for (&p, &k) in &b.exponents {
        let e = exponents.entry(p).or_insert(ExtNat::ZERO);
        *e = *e + k;
    }
    Supernatural {
        exponents,
        universal: false,
    }
}

pub fn sn_eq(a: &Supernatural, b: &Supernatural) -> bool {
    a == b
}

/// Exponent-wise ≤.
pub fn sn_divides(a: &Supernatural, b: &Supernatural) -> bool {
    if b.universal {
        return true;
    }
    if a.universal {
        return false;
    }
    a.exponents.iter().all(|(&p, &k)| k <= b.exponent(p))
}

pub fn sn_is_infinite_type(a: &Supernatural) -> bool {
    a.universal || a.exponents.values().all(|&k| k == ExtNat::Inf)
}

/// The least prime at which two supernatural numbers differ, with both exponents.
///
/// For a universal number against a finitely supported one, the witness is the
/// smallest prime whose exponent in the latter is not ∞.
pub fn sn_first_difference(a: &Supernatural, b: &Supernatural) -> Option<(u64, ExtNat, ExtNat)> {
    if a == b {
        return None;
    }
    if a.universal || b.universal {
        let finite = if a.universal { b } else { a };
        let p = (2..).find(|&p| is_prime(p) && finite.exponent(p) != ExtNat::Inf)?;
        return Some((p, a.exponent(p), b.exponent(p)));
    }
    a.exponents
        .keys()
        .chain(b.exponents.keys())
        .copied()
        .filter(|&p| a.exponent(p) != b.exponent(p))
        .min()
        .map(|p| (p, a.exponent(p), b.exponent(p)))
}

impl fmt::Display for Supernatural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.universal {
            return f.write_str("Q");
        }
        if self.exponents.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.exponents.iter().map(|(p, k)| format!("{p}:{k}")).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Supernatural {
    type Err = SupernaturalError;

    /// Accepts `Q`, `1`, or a comma list `p:k` with `k` a positive integer or `inf`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "Q" => return Ok(Supernatural::universal()),
            "1" => return Ok(Supernatural::one()),
            _ => {}
        }
        let mut pairs = Vec::new();
        for item in t.split(',') {
            let (p, k) = item
                .split_once(':')
                .ok_or_else(|| SupernaturalError::Syntax(s.to_string()))?;
            let p: u64 = p
                .trim()
                .parse()
                .map_err(|_| SupernaturalError::Syntax(s.to_string()))?;
            let k: ExtNat = k
                .parse()
                .map_err(|_| SupernaturalError::Syntax(s.to_string()))?;
            pairs.push((p, k));
        }
        sn_make(&pairs)
    }
}
