//! Finite inductive systems over posets, their colimits as canonical forms
//! at a terminal stage, universal maps out of them, and the Toeplitz chain
//! `T_1 -> T_2 -> ...` with bonding `T ↦ T^{p_n}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::check::CheckResult;
use crate::error::{Error, Result};
use crate::poset::Poset;
use crate::semigroup::{level_embed, PrimeSequence, QpElement};
use crate::toeplitz::{Complex, OperatorPoly};
use crate::topology::IndexSet;

/// The bonding maps that occur: identities, Coburn maps `T ↦ T^n`, and
/// restriction of operator fields to a smaller domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Morphism {
    Identity,
    Coburn(u64),
    Restriction(IndexSet),
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Morphism::Identity => write!(f, "id"),
            Morphism::Coburn(n) => write!(f, "T->T^{n}"),
            Morphism::Restriction(d) => write!(f, "restrict to {} indices", d.len()),
        }
    }
}

impl Serialize for Morphism {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Objects a bonding map can act on.
pub trait Payload: Clone + PartialEq + fmt::Debug {
    fn push(&self, morphism: &Morphism) -> Result<Self>;
}

impl Payload for OperatorPoly {
    fn push(&self, morphism: &Morphism) -> Result<Self> {
        match morphism {
            Morphism::Identity => Ok(self.clone()),
            Morphism::Coburn(n) => self.coburn(*n),
            Morphism::Restriction(_) => Err(Error::UnsupportedMorphism(morphism.to_string())),
        }
    }
}

/// A diagram indexed by a finite poset. Stages are numbered from
/// `first_stage` (1 for chains, 0 otherwise) in the poset's element order.
#[derive(Debug, Clone)]
pub struct InductiveSystem {
    poset: Poset,
    first_stage: usize,
    labels: Vec<String>,
    bonding: BTreeMap<(usize, usize), Morphism>,
}

impl InductiveSystem {
    /// `bonding` is keyed by stage pairs `(a, b)` with `a <= b` and must
    /// cover every comparable pair, the diagonal included.
    pub fn new(
        poset: Poset,
        first_stage: usize,
        labels: Vec<String>,
        bonding: BTreeMap<(usize, usize), Morphism>,
    ) -> Result<Self> {
        if labels.len() != poset.len() {
            return Err(Error::DimensionMismatch(labels.len(), poset.len()));
        }
        let system = InductiveSystem {
            poset,
            first_stage,
            labels,
            bonding,
        };
        for (a, b) in system.comparable_pairs() {
            if !system.bonding.contains_key(&(a, b)) {
                return Err(Error::MissingBonding { lower: a, upper: b });
            }
        }
        Ok(system)
    }

    /// Every bonding map is the identity, as for the systems `𝒯_a = 𝒯`.
    pub fn identity_system(poset: Poset, label: &str) -> Self {
        let labels = (0..poset.len()).map(|i| format!("{label}_{}", poset.name(i))).collect();
        let bonding = poset
            .leq_pairs()
            .into_iter()
            .map(|(a, b)| ((a, b), Morphism::Identity))
            .collect();
        InductiveSystem {
            poset,
            first_stage: 0,
            labels,
            bonding,
        }
    }

    pub fn poset(&self) -> &Poset {
        &self.poset
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.poset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poset.is_empty()
    }

    pub fn stages(&self) -> std::ops::Range<usize> {
        self.first_stage..self.first_stage + self.len()
    }

    fn position(&self, stage: usize) -> Result<usize> {
        stage
            .checked_sub(self.first_stage)
            .filter(|&p| p < self.len())
            .ok_or(Error::IndexOutOfRange(stage))
    }

    pub fn leq(&self, a: usize, b: usize) -> Result<bool> {
        Ok(self.poset.leq(self.position(a)?, self.position(b)?))
    }

    pub fn comparable_pairs(&self) -> Vec<(usize, usize)> {
        self.poset
            .leq_pairs()
            .into_iter()
            .map(|(a, b)| (a + self.first_stage, b + self.first_stage))
            .collect()
    }

    /// `σ_ba` for `a <= b`.
    pub fn bonding(&self, a: usize, b: usize) -> Result<&Morphism> {
        if !self.leq(a, b)? {
            return Err(Error::StageOrder { from: a, to: b });
        }
        self.bonding
            .get(&(a, b))
            .ok_or(Error::MissingBonding { lower: a, upper: b })
    }

    /// Replaces one bonding map; used to inject faults.
    pub fn with_bonding(mut self, a: usize, b: usize, morphism: Morphism) -> Result<Self> {
        self.bonding(a, b)?;
        self.bonding.insert((a, b), morphism);
        Ok(self)
    }

    pub fn push<P: Payload>(&self, a: usize, b: usize, x: &P) -> Result<P> {
        x.push(self.bonding(a, b)?)
    }

    /// The greatest stage, when there is one.
    pub fn terminal(&self) -> Option<usize> {
        let n = self.len();
        (0..n)
            .find(|&t| (0..n).all(|a| self.poset.leq(a, t)))
            .map(|t| t + self.first_stage)
    }

    /// First stage (in element order) above both `a` and `b`.
    pub fn common_upper_bound(&self, a: usize, b: usize) -> Result<Option<usize>> {
        let (pa, pb) = (self.position(a)?, self.position(b)?);
        Ok((0..self.len())
            .find(|&c| self.poset.leq(pa, c) && self.poset.leq(pb, c))
            .map(|c| c + self.first_stage))
    }
}

/// Stages `(a, b, c)` at which a functoriality law failed. `a = b = c` for
/// the identity law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

/// Checks `σ_aa = id` and `σ_ca = σ_cb ∘ σ_ba` for all `a <= b <= c` on the
/// given generator payloads.
pub fn check_functoriality<P: Payload>(system: &InductiveSystem, generators: &[P]) -> Result<CheckResult<Triple>> {
    let mut checked = 0;
    for a in system.stages() {
        for x in generators {
            checked += 1;
            if system.push(a, a, x)? != *x {
                return Ok(CheckResult::fail(checked, Triple { a, b: a, c: a }));
            }
        }
    }
    let pairs = system.comparable_pairs();
    for &(a, b) in &pairs {
        for &(b2, c) in &pairs {
            if b2 != b {
                continue;
            }
            for x in generators {
                checked += 1;
                let direct = system.push(a, c, x)?;
                let stepwise = system.push(b, c, &system.push(a, b, x)?)?;
                if direct != stepwise {
                    return Ok(CheckResult::fail(checked, Triple { a, b, c }));
                }
            }
        }
    }
    Ok(CheckResult::pass(checked))
}

/// `(stage, payload)`, a representative of an element of the colimit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColimitElement<P> {
    pub stage: usize,
    pub payload: P,
}

impl<P> ColimitElement<P> {
    pub fn new(stage: usize, payload: P) -> Self {
        ColimitElement { stage, payload }
    }
}

/// Pushes `x` forward to `terminal`.
pub fn canonical_form<P: Payload>(
    system: &InductiveSystem,
    x: &ColimitElement<P>,
    terminal: usize,
) -> Result<ColimitElement<P>> {
    if !system.leq(x.stage, terminal)? {
        return Err(Error::StageOrder {
            from: x.stage,
            to: terminal,
        });
    }
    Ok(ColimitElement::new(
        terminal,
        system.push(x.stage, terminal, &x.payload)?,
    ))
}

/// Whether two representatives agree once pushed to a common upper stage.
/// Representatives with no common upper stage are never identified.
pub fn equivalent<P: Payload>(system: &InductiveSystem, x: &ColimitElement<P>, y: &ColimitElement<P>) -> Result<bool> {
    match system.common_upper_bound(x.stage, y.stage)? {
        None => Ok(false),
        Some(c) => Ok(canonical_form(system, x, c)?.payload == canonical_form(system, y, c)?.payload),
    }
}

/// The chain `T_1 -> ... -> T_N` with `σ_ba = (T ↦ T^{p_a ⋯ p_{b-1}})`.
pub fn toeplitz_chain(primes: &PrimeSequence, len: usize) -> Result<InductiveSystem> {
    let poset = Poset::chain(len)?;
    let labels = (1..=len).map(|n| format!("T_{n}")).collect();
    let mut bonding = BTreeMap::new();
    for a in 1..=len {
        bonding.insert((a, a), Morphism::Identity);
        for b in a + 1..=len {
            bonding.insert((a, b), Morphism::Coburn(primes.product(a, b - 1)?));
        }
    }
    InductiveSystem::new(poset, 1, labels, bonding)
}

/// A finitely supported coefficient map `g ↦ c_g` on `Q_P^+`, read as
/// `Σ c_g V_g`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormalSum {
    terms: BTreeMap<QpElement, Complex>,
}

impl FormalSum {
    pub fn from_terms<I: IntoIterator<Item = (QpElement, Complex)>>(terms: I) -> Self {
        let mut map: BTreeMap<QpElement, Complex> = BTreeMap::new();
        for (g, c) in terms {
            *map.entry(g).or_default() += c;
        }
        map.retain(|_, c| *c != Complex::new(0.0, 0.0));
        FormalSum { terms: map }
    }

    pub fn generator(g: QpElement) -> Self {
        Self::from_terms([(g, Complex::new(1.0, 0.0))])
    }

    pub fn terms(&self) -> &BTreeMap<QpElement, Complex> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest chain stage holding every term: `max(level) + 1`.
    pub fn stage(&self) -> usize {
        self.terms.keys().map(|g| g.stage()).max().unwrap_or(1)
    }
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(g, c)| {
                if *c == Complex::new(1.0, 0.0) {
                    format!("V[{g}]")
                } else if c.im == 0.0 {
                    format!("{}*V[{g}]", c.re)
                } else {
                    format!("({}{:+}i)*V[{g}]", c.re, c.im)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for FormalSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `Σ c_m T^m` at stage `n` ↦ `Σ c_m V_{m / (p_1 ⋯ p_{n-1})}`.
pub fn gumerov_witness(primes: &PrimeSequence, stage: usize, p: &OperatorPoly) -> Result<FormalSum> {
    let terms = p
        .terms()
        .iter()
        .map(|(&m, &c)| Ok((level_embed(primes, stage, m)?, c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FormalSum::from_terms(terms))
}

pub type CoconeMap<'a, P, Q> = Box<dyn Fn(&P) -> Result<Q> + Send + Sync + 'a>;

/// The witness maps of every stage of `toeplitz_chain(primes, len)`.
pub fn gumerov_cocone<'a>(primes: &'a PrimeSequence, len: usize) -> Vec<CoconeMap<'a, OperatorPoly, FormalSum>> {
    (1..=len)
        .map(|n| Box::new(move |p: &OperatorPoly| gumerov_witness(primes, n, p)) as CoconeMap<'a, _, _>)
        .collect()
}

/// `θ` on representatives: `θ(a, x) = ψ_a(x)`.
pub struct UniversalMap<'a, P, Q> {
    system: &'a InductiveSystem,
    cocone: Vec<CoconeMap<'a, P, Q>>,
}

/// Builds `θ` after checking `ψ_a = ψ_b ∘ σ_ba` on the generators for every
/// comparable pair. `cocone[k]` is the map out of the `k`-th stage.
pub fn universal_map<'a, P: Payload, Q: PartialEq>(
    system: &'a InductiveSystem,
    cocone: Vec<CoconeMap<'a, P, Q>>,
    generators: &[P],
) -> Result<UniversalMap<'a, P, Q>> {
    if cocone.len() != system.len() {
        return Err(Error::DimensionMismatch(cocone.len(), system.len()));
    }
    let map = UniversalMap { system, cocone };
    for (a, b) in system.comparable_pairs() {
        for x in generators {
            let direct = map.cocone_at(a)?(x)?;
            let via = map.cocone_at(b)?(&system.push(a, b, x)?)?;
            if direct != via {
                return Err(Error::IncompatibleCocone { lower: a, upper: b });
            }
        }
    }
    Ok(map)
}

impl<'a, P: Payload, Q: PartialEq> UniversalMap<'a, P, Q> {
    fn cocone_at(&self, stage: usize) -> Result<&CoconeMap<'a, P, Q>> {
        Ok(&self.cocone[self.system.position(stage)?])
    }

    pub fn apply(&self, x: &ColimitElement<P>) -> Result<Q> {
        self.cocone_at(x.stage)?(&x.payload)
    }

    /// `θ(a, x) = θ(t, σ_ta(x))` for each sample; the witness is the index
    /// of the first sample where the two presentations disagree.
    pub fn check_well_defined(&self, samples: &[ColimitElement<P>], terminal: usize) -> Result<CheckResult<usize>> {
        for (i, x) in samples.iter().enumerate() {
            let pushed = canonical_form(self.system, x, terminal)?;
            if self.apply(x)? != self.apply(&pushed)? {
                return Ok(CheckResult::fail(i + 1, i));
            }
        }
        Ok(CheckResult::pass(samples.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectivityReport {
    pub pass: bool,
    pub samples: usize,
    pub equivalent_pairs: usize,
    pub distinct_pairs: usize,
    /// Sample pairs whose images are equal iff their canonical forms are
    /// not.
    pub violations: Vec<(usize, usize)>,
}

/// Compares `θ` images of every pair of samples with their canonical forms
/// at `terminal`: equivalent pairs must share an image, distinct pairs must
/// not.
pub fn injectivity_probe<P: Payload, Q: PartialEq>(
    map: &UniversalMap<'_, P, Q>,
    samples: &[ColimitElement<P>],
    terminal: usize,
) -> Result<InjectivityReport> {
    let forms = samples
        .iter()
        .map(|x| canonical_form(map.system, x, terminal))
        .collect::<Result<Vec<_>>>()?;
    let images = samples.iter().map(|x| map.apply(x)).collect::<Result<Vec<_>>>()?;
    let mut report = InjectivityReport {
        pass: true,
        samples: samples.len(),
        equivalent_pairs: 0,
        distinct_pairs: 0,
        violations: Vec::new(),
    };
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let same_form = forms[i].payload == forms[j].payload;
            if same_form {
                report.equivalent_pairs += 1;
            } else {
                report.distinct_pairs += 1;
            }
            if same_form != (images[i] == images[j]) {
                report.violations.push((i, j));
            }
        }
    }
    report.pass = report.violations.is_empty();
    Ok(report)
}
