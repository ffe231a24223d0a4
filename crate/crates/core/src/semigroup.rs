//! Exact arithmetic in `Q_P^+ = { m / (p_1⋯p_n) }` for a prime sequence
//! `P`, and finite windows of `l²(Q_P^+)` on a single denominator level.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{CheckedAdd, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toeplitz::{Complex, TruncatedOperator};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrimeRule {
    /// `2, 3, 5, 7, 11, ...`
    Increasing,
    /// `2, 2, 3, 2, 3, 5, 2, 3, 5, 7, ...`: block `k` lists the first `k`
    /// primes, so every prime recurs infinitely often.
    EveryPrimeInfinitelyOften,
}

/// Config form of a prime sequence: an explicit list or `{"rule": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimeSpec {
    List(Vec<u64>),
    Rule { rule: PrimeRule },
}

/// A prime sequence `p_1, p_2, ...`. Explicit lists are finite prefixes;
/// asking for a term past the end is an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSequence {
    spec: PrimeSpec,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// The `k`-th prime, 1-based.
fn nth_prime(k: usize) -> u64 {
    (2u64..)
        .filter(|&n| is_prime(n))
        .nth(k - 1)
        .expect("infinitely many primes")
}

impl PrimeSequence {
    pub fn from_spec(spec: PrimeSpec) -> Result<Self> {
        if let PrimeSpec::List(list) = &spec {
            if let Some(&bad) = list.iter().find(|&&p| !is_prime(p)) {
                return Err(Error::NotPrime(bad));
            }
        }
        Ok(PrimeSequence { spec })
    }

    pub fn explicit(primes: &[u64]) -> Result<Self> {
        Self::from_spec(PrimeSpec::List(primes.to_vec()))
    }

    pub fn rule(rule: PrimeRule) -> Self {
        PrimeSequence {
            spec: PrimeSpec::Rule { rule },
        }
    }

    pub fn spec(&self) -> &PrimeSpec {
        &self.spec
    }

    /// Number of available terms, `None` for infinite rules.
    pub fn len(&self) -> Option<usize> {
        match &self.spec {
            PrimeSpec::List(l) => Some(l.len()),
            PrimeSpec::Rule { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// `p_n`, 1-based.
    pub fn p(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::PrimeIndexOutOfRange(0));
        }
        match &self.spec {
            PrimeSpec::List(l) => l.get(n - 1).copied().ok_or(Error::PrimeIndexOutOfRange(n)),
            PrimeSpec::Rule {
                rule: PrimeRule::Increasing,
            } => Ok(nth_prime(n)),
            PrimeSpec::Rule {
                rule: PrimeRule::EveryPrimeInfinitelyOften,
            } => {
                let mut rest = n;
                let mut block = 1;
                while rest > block {
                    rest -= block;
                    block += 1;
                }
                Ok(nth_prime(rest))
            }
        }
    }

    pub fn terms(&self, count: usize) -> Result<Vec<u64>> {
        (1..=count).map(|n| self.p(n)).collect()
    }

    /// `p_from ⋯ p_to` (empty product is 1).
    pub fn product(&self, from: usize, to: usize) -> Result<u64> {
        (from..=to).try_fold(1u64, |acc, n| {
            acc.checked_mul(self.p(n)?)
                .ok_or_else(|| Error::OverflowGuard(format!("p_{from}..p_{to}")))
        })
    }

    /// `p_1 ⋯ p_n`.
    pub fn prefix_product(&self, n: usize) -> Result<u64> {
        self.product(1, n)
    }
}

impl FromStr for PrimeSequence {
    type Err = Error;

    /// `increasing`, `every-prime-infinitely-often`, or a comma list.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "increasing" => Ok(Self::rule(PrimeRule::Increasing)),
            "every-prime-infinitely-often" => Ok(Self::rule(PrimeRule::EveryPrimeInfinitelyOften)),
            list => {
                let primes = list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parse(format!("bad prime `{t}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::explicit(&primes)
            }
        }
    }
}

impl fmt::Display for PrimeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            PrimeSpec::List(l) => {
                let parts: Vec<String> = l.iter().map(|p| p.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            PrimeSpec::Rule {
                rule: PrimeRule::Increasing,
            } => write!(f, "increasing"),
            PrimeSpec::Rule {
                rule: PrimeRule::EveryPrimeInfinitelyOften,
            } => {
                write!(f, "every-prime-infinitely-often")
            }
        }
    }
}

impl Serialize for PrimeSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PrimeSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = PrimeSpec::deserialize(d)?;
        PrimeSequence::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

/// Outcome of a membership search in `Q_P^+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Minimal `n` with `value · p_1⋯p_n` integral, when found.
    pub level: Option<usize>,
    /// Largest level examined.
    pub bound: usize,
}

/// Decides whether `value` lies in `Q_P^+`, searching levels up to
/// `max_level` (or the end of a finite list).
pub fn qp_contains(primes: &PrimeSequence, value: Rational, max_level: usize) -> Result<Membership> {
    if value.is_negative() {
        return Err(Error::NegativeInput(value.to_string()));
    }
    let mut rest = *value.denom();
    let mut level = 0usize;
    loop {
        if rest == 1 {
            return Ok(Membership {
                member: true,
                level: Some(level),
                bound: level,
            });
        }
        if level == max_level {
            break;
        }
        let p = match primes.p(level + 1) {
            Ok(p) => p as i128,
            Err(Error::PrimeIndexOutOfRange(_)) => break,
            Err(e) => return Err(e),
        };
        level += 1;
        if rest % p == 0 {
            rest /= p;
        }
    }
    Ok(Membership {
        member: false,
        level: None,
        bound: level,
    })
}

/// An element of `Q_P^+` with its minimal denominator level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QpElement {
    value: Rational,
    level: usize,
}

impl QpElement {
    pub fn new(primes: &PrimeSequence, value: Rational, max_level: usize) -> Result<Self> {
        let m = qp_contains(primes, value, max_level)?;
        match m.level {
            Some(level) => Ok(QpElement { value, level }),
            None => Err(Error::NotInSemigroup(value.to_string(), m.bound)),
        }
    }

    pub fn zero() -> Self {
        QpElement {
            value: Rational::zero(),
            level: 0,
        }
    }

    pub fn value(&self) -> Rational {
        self.value
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Smallest chain stage `n` at which this element is a power of the
    /// generator: `n = level + 1`.
    pub fn stage(&self) -> usize {
        self.level + 1
    }

    /// `g + h`, whose level never exceeds the larger of the two.
    pub fn add(&self, other: &Self, primes: &PrimeSequence) -> Result<Self> {
        let value = self
            .value
            .checked_add(&other.value)
            .ok_or_else(|| Error::OverflowGuard("semigroup sum".into()))?;
        QpElement::new(primes, value, self.level.max(other.level))
    }
}

impl fmt::Display for QpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Serialize for QpElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.value.to_string())
    }
}

/// `m / (p_1 ⋯ p_{n-1})`: the image of `T^m` at chain stage `n`.
pub fn level_embed(primes: &PrimeSequence, stage: usize, m: u64) -> Result<QpElement> {
    if stage == 0 {
        return Err(Error::PrimeIndexOutOfRange(0));
    }
    let denom = primes.prefix_product(stage - 1)? as i128;
    QpElement::new(primes, Rational::new(m as i128, denom), stage - 1)
}

/// Config form of a truncation: `{"n": ..., "M": ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub n: usize,
    #[serde(rename = "M")]
    pub m: u64,
}

/// The window `{ m / (p_1⋯p_n) : 0 <= m <= M }` of basis vectors `e_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    level: usize,
    bound: u64,
    denominator: u64,
    basis: Vec<QpElement>,
}

pub fn enumerate_truncation(primes: &PrimeSequence, level: usize, bound: u64) -> Result<Truncation> {
    let denominator = primes.prefix_product(level)?;
    let basis = (0..=bound)
        .map(|m| QpElement::new(primes, Rational::new(m as i128, denominator as i128), level))
        .collect::<Result<Vec<_>>>()?;
    Ok(Truncation {
        level,
        bound,
        denominator,
        basis,
    })
}

impl Truncation {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn basis(&self) -> &[QpElement] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Position of `g` in the basis when `g` sits on this lattice.
    pub fn steps(&self, g: &QpElement) -> Result<u64> {
        let scaled = g.value * Rational::from_integer(self.denominator as i128);
        if !scaled.is_integer() {
            return Err(Error::LevelMismatch {
                value: g.to_string(),
                level: self.level,
            });
        }
        Ok(scaled.to_integer() as u64)
    }

    /// Basis positions `h` with `g + h` still inside the window.
    pub fn interior_for(&self, g: &QpElement) -> Result<usize> {
        let s = self.steps(g)? as usize;
        Ok(self.dim().saturating_sub(s))
    }
}

/// `V_g e_h = e_{g+h}` on the window; vectors pushed past `M` go to 0.
pub fn v_matrix(g: &QpElement, window: &Truncation) -> Result<TruncatedOperator> {
    let s = window.steps(g)? as usize;
    let dim = window.dim();
    let one = Complex::new(1.0, 0.0);
    Ok(TruncatedOperator::from_entries(
        dim,
        (0..dim.saturating_sub(s)).map(|h| (h + s, h, one)),
        dim.saturating_sub(s),
    ))
}
