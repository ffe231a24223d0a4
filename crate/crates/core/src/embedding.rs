//! Operator fields over base sets, the isometry fields `L_n` built from a
//! nested neighbourhood chain `U_{a_1} ⊇ ... ⊇ U_{a_N}`, the maps `ψ_n` and
//! `θ`, and exact finite checks of the identities relating them.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::check::CheckResult;
use crate::error::{Error, Result};
use crate::inductive::{
    canonical_form, ColimitElement, FormalSum, InductiveSystem, InjectivityReport, Morphism, Payload,
};
use crate::poset::Poset;
use crate::semigroup::{level_embed, PrimeSequence, Rational};
use crate::toeplitz::{evaluate, operator_norm, symbol_sup_norm, Complex, OperatorPoly};
use crate::topology::circle::CircleExample;
use crate::topology::{IndexSet, NeighborhoodChain};

/// An element of `∏_{j ∈ U} 𝒯`: one polynomial in `T` per index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct OperatorField {
    components: BTreeMap<usize, OperatorPoly>,
}

impl OperatorField {
    pub fn new(components: BTreeMap<usize, OperatorPoly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(OperatorField { components })
    }

    pub fn constant(domain: &IndexSet, p: &OperatorPoly) -> Result<Self> {
        Self::new(domain.iter().map(|&j| (j, p.clone())).collect())
    }

    pub fn identity(domain: &IndexSet) -> Result<Self> {
        Self::constant(domain, &OperatorPoly::identity())
    }

    /// `j ↦ T^{e_j}`.
    pub fn monomials(exponents: &BTreeMap<usize, u64>) -> Result<Self> {
        Self::new(
            exponents
                .iter()
                .map(|(&j, &e)| (j, OperatorPoly::monomial(e)))
                .collect(),
        )
    }

    pub fn domain(&self) -> IndexSet {
        self.components.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, j: usize) -> Option<&OperatorPoly> {
        self.components.get(&j)
    }

    pub fn components(&self) -> &BTreeMap<usize, OperatorPoly> {
        &self.components
    }

    fn map(&self, f: impl Fn(&OperatorPoly) -> Result<OperatorPoly>) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|(&j, p)| Ok((j, f(p)?)))
            .collect::<Result<_>>()?;
        Ok(OperatorField { components })
    }

    fn zip(&self, other: &Self, f: impl Fn(&OperatorPoly, &OperatorPoly) -> Result<OperatorPoly>) -> Result<Self> {
        if !self.components.keys().eq(other.components.keys()) {
            return Err(Error::DomainMismatch);
        }
        let components = self
            .components
            .iter()
            .zip(other.components.values())
            .map(|((&j, a), b)| Ok((j, f(a, b)?)))
            .collect::<Result<_>>()?;
        Ok(OperatorField { components })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| Ok(a.add(b)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.mul(b))
    }

    pub fn scale(&self, c: Complex) -> Self {
        self.map(|p| Ok(p.scale(c))).expect("scaling cannot fail")
    }

    pub fn pow(&self, k: u64) -> Result<Self> {
        self.map(|p| p.pow(k))
    }

    /// Componentwise `T ↦ T^n`.
    pub fn coburn(&self, n: u64) -> Result<Self> {
        self.map(|p| p.coburn(n))
    }

    /// `τ(f)(j) = f(j)` for `j` in the smaller domain.
    pub fn restrict(&self, domain: &IndexSet) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let components = domain
            .iter()
            .map(|j| self.components.get(j).map(|p| (*j, p.clone())).ok_or(Error::NotSubset))
            .collect::<Result<_>>()?;
        Ok(OperatorField { components })
    }

    /// The exponent `e_j` of each component `T^{e_j}`.
    pub fn exponents(&self) -> Result<BTreeMap<usize, u64>> {
        self.components
            .iter()
            .map(|(&j, p)| p.as_monomial().map(|e| (j, e)).ok_or(Error::NotMonomial(j)))
            .collect()
    }

    /// `max_j ‖f(j)‖`, each component norm taken as the symbol sup norm.
    pub fn sup_norm(&self, grid: usize) -> Result<f64> {
        self.components
            .values()
            .try_fold(0.0f64, |acc, p| Ok(acc.max(symbol_sup_norm(p, grid)?)))
    }
}

impl Payload for OperatorField {
    fn push(&self, morphism: &Morphism) -> Result<Self> {
        match morphism {
            Morphism::Identity => Ok(self.clone()),
            Morphism::Coburn(n) => self.coburn(*n),
            Morphism::Restriction(domain) => self.restrict(domain),
        }
    }
}

/// The direct product over a fixed finite domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldAlgebra {
    domain: IndexSet,
}

pub fn build_field_algebra(domain: &IndexSet) -> Result<FieldAlgebra> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(FieldAlgebra { domain: domain.clone() })
}

impl FieldAlgebra {
    pub fn domain(&self) -> &IndexSet {
        &self.domain
    }

    pub fn identity(&self) -> OperatorField {
        OperatorField::identity(&self.domain).expect("domain is non-empty")
    }

    pub fn constant(&self, p: &OperatorPoly) -> OperatorField {
        OperatorField::constant(&self.domain, p).expect("domain is non-empty")
    }

    pub fn field(&self, f: impl Fn(usize) -> OperatorPoly) -> OperatorField {
        OperatorField {
            components: self.domain.iter().map(|&j| (j, f(j))).collect(),
        }
    }

    pub fn contains(&self, f: &OperatorField) -> bool {
        f.components.keys().eq(self.domain.iter())
    }
}

/// Where an index sits relative to a chain: in the cell
/// `W_k = U_{a_k} ∖ U_{a_{k+1}}` or in the residual `U_{a_N}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cell {
    Step(usize),
    Residual,
}

/// The cells and residual of a nested chain of domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainPartition {
    point: usize,
    domains: Vec<IndexSet>,
    cells: Vec<IndexSet>,
    residual: IndexSet,
}

impl ChainPartition {
    /// `domains[n-1] = U_{a_n}`; they must be nested and all contain `point`.
    pub fn new(point: usize, domains: Vec<IndexSet>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::BadPartition("chain has no domains".into()));
        }
        for (n, d) in domains.iter().enumerate() {
            if !d.contains(&point) {
                return Err(Error::BadPartition(format!("U_{} misses the point {point}", n + 1)));
            }
        }
        for n in 1..domains.len() {
            if !domains[n].is_subset(&domains[n - 1]) {
                return Err(Error::BadPartition(format!("U_{} is not inside U_{}", n + 1, n)));
            }
        }
        let cells = domains.windows(2).map(|w| &w[0] - &w[1]).collect();
        let residual = domains.last().cloned().expect("non-empty");
        Ok(ChainPartition {
            point,
            domains,
            cells,
            residual,
        })
    }

    pub fn from_chain<A>(chain: &NeighborhoodChain<A>) -> Result<Self> {
        Self::new(chain.point, chain.domains.clone())
    }

    /// The chain `U_n = {0, ..., depth - n}` at the point 0: every cell is
    /// one index and the residual is `{0}`.
    pub fn ladder(depth: usize) -> Self {
        let domains = (1..=depth).map(|n| (0..=depth - n).collect()).collect();
        Self::new(0, domains).expect("ladder domains are nested")
    }

    /// The first `depth` domains of this chain.
    pub fn truncated(&self, depth: usize) -> Result<Self> {
        if depth == 0 || depth > self.depth() {
            return Err(Error::ChainTooShort {
                stage: depth,
                depth: self.depth(),
            });
        }
        Self::new(self.point, self.domains[..depth].to_vec())
    }

    pub fn point(&self) -> usize {
        self.point
    }

    pub fn depth(&self) -> usize {
        self.domains.len()
    }

    fn check_stage(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.depth() {
            return Err(Error::ChainTooShort {
                stage: n,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// `U_{a_n}`, 1-based.
    pub fn domain(&self, n: usize) -> Result<&IndexSet> {
        self.check_stage(n)?;
        Ok(&self.domains[n - 1])
    }

    pub fn domains(&self) -> &[IndexSet] {
        &self.domains
    }

    /// `W_k` for `1 <= k < N`.
    pub fn cell(&self, k: usize) -> Result<&IndexSet> {
        if k == 0 || k >= self.depth() {
            return Err(Error::ChainTooShort {
                stage: k,
                depth: self.depth(),
            });
        }
        Ok(&self.cells[k - 1])
    }

    pub fn cells(&self) -> &[IndexSet] {
        &self.cells
    }

    pub fn residual(&self) -> &IndexSet {
        &self.residual
    }

    pub fn cell_of(&self, j: usize) -> Option<Cell> {
        if self.residual.contains(&j) {
            return Some(Cell::Residual);
        }
        self.cells
            .iter()
            .position(|w| w.contains(&j))
            .map(|k| Cell::Step(k + 1))
    }

    /// The chain of restriction maps `B_{a_1} -> ... -> B_{a_N}`, stages
    /// numbered from 1.
    pub fn field_chain(&self) -> Result<InductiveSystem> {
        let n = self.depth();
        let mut bonding = BTreeMap::new();
        for a in 1..=n {
            for b in a..=n {
                let m = if a == b {
                    Morphism::Identity
                } else {
                    Morphism::Restriction(self.domains[b - 1].clone())
                };
                bonding.insert((a, b), m);
            }
        }
        let labels = (1..=n).map(|k| format!("B_{k}")).collect();
        InductiveSystem::new(Poset::chain(n)?, 1, labels, bonding)
    }
}

/// Exponents of `L_n`: `p_n ⋯ p_k` on `W_k`, 0 (the identity) on the
/// residual.
pub fn l_exponents(primes: &PrimeSequence, partition: &ChainPartition, n: usize) -> Result<BTreeMap<usize, u64>> {
    let domain = partition.domain(n)?;
    domain
        .iter()
        .map(|&j| {
            let e = match partition.cell_of(j) {
                Some(Cell::Step(k)) => primes.product(n, k)?,
                _ => 0,
            };
            Ok((j, e))
        })
        .collect()
}

/// The isometry field `L_n` on `U_{a_n}`, `1 <= n <= N`. At `n = N` only the
/// residual is left and `L_N` is the identity field.
pub fn l_field(primes: &PrimeSequence, partition: &ChainPartition, n: usize) -> Result<OperatorField> {
    OperatorField::monomials(&l_exponents(primes, partition, n)?)
}

/// `L_{n+1}^{p_n} = τ(L_n)` indexwise on `U_{a_{n+1}}`.
pub fn check_tau_l(primes: &PrimeSequence, partition: &ChainPartition, n: usize) -> Result<CheckResult<usize>> {
    partition.domain(n + 1)?;
    let lower = l_field(primes, partition, n)?;
    let upper = l_field(primes, partition, n + 1)?;
    check_tau_l_fields(primes.p(n)?, &lower, &upper)
}

/// [`check_tau_l`] on given fields; the witness is the first failing index.
pub fn check_tau_l_fields(p_n: u64, lower: &OperatorField, upper: &OperatorField) -> Result<CheckResult<usize>> {
    let restricted = lower.restrict(&upper.domain())?;
    let mut checked = 0;
    for (&j, u) in upper.components() {
        checked += 1;
        if u.pow(p_n)? != restricted.components[&j] {
            return Ok(CheckResult::fail(checked, j));
        }
    }
    Ok(CheckResult::pass(checked))
}

/// `ψ_n(Σ c_m T^m) = Σ c_m L_n^m`, as a colimit element at stage `n`.
pub fn psi(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    n: usize,
    p: &OperatorPoly,
) -> Result<ColimitElement<OperatorField>> {
    let l = l_field(primes, partition, n)?;
    let mut total: Option<OperatorField> = None;
    for (&m, &c) in p.terms() {
        let term = l.pow(m)?.scale(c);
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    let payload = match total {
        Some(t) => t,
        None => OperatorField::constant(partition.domain(n)?, &OperatorPoly::zero())?,
    };
    Ok(ColimitElement::new(n, payload))
}

/// `ψ_{n+1}(T ↦ T^{p_n})(p) = τ(ψ_n(p))` for each sample; the witness is
/// the first failing sample.
pub fn check_psi_compat(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    n: usize,
    samples: &[OperatorPoly],
) -> Result<CheckResult<OperatorPoly>> {
    partition.domain(n + 1)?;
    let system = partition.field_chain()?;
    let p_n = primes.p(n)?;
    for (i, p) in samples.iter().enumerate() {
        let upper = psi(primes, partition, n + 1, &p.coburn(p_n)?)?;
        let lower = canonical_form(&system, &psi(primes, partition, n, p)?, n + 1)?;
        if upper.payload != lower.payload {
            return Ok(CheckResult::fail(i + 1, p.clone()));
        }
    }
    Ok(CheckResult::pass(samples.len()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsometryComponent {
    pub index: usize,
    pub exponent: u64,
    /// Leading coordinates on which `MᵀM` is the identity.
    pub width: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IsometryReport {
    pub pass: bool,
    pub dim: usize,
    pub components: Vec<IsometryComponent>,
}

/// For each component `T^e`, checks that `MᵀM` for `M = S_N^e` is exactly
/// the identity on the leading `N - e` coordinates.
pub fn isometry_check(field: &OperatorField, dim: usize) -> Result<IsometryReport> {
    let exponents = field.exponents()?;
    let distinct: BTreeSet<u64> = exponents.values().copied().collect();
    let verdicts: BTreeMap<u64, bool> = distinct
        .into_par_iter()
        .map(|e| {
            let m = evaluate(&OperatorPoly::monomial(e), dim)?;
            let gram = m.adjoint().mul(&m)?;
            let width = dim - e as usize;
            let one = Complex::new(1.0, 0.0);
            let ok = (0..width).all(|c| gram.column(c) == [(c, one)]);
            Ok((e, ok))
        })
        .collect::<Result<_>>()?;
    let components: Vec<IsometryComponent> = exponents
        .iter()
        .map(|(&index, &exponent)| IsometryComponent {
            index,
            exponent,
            width: dim - exponent as usize,
            pass: verdicts[&exponent],
        })
        .collect();
    Ok(IsometryReport {
        pass: components.iter().all(|c| c.pass),
        dim,
        components,
    })
}

/// `Σ c_g T^{g · p_1⋯p_{n-1}}`, the stage-`n` polynomial of a formal sum.
pub fn stage_polynomial(primes: &PrimeSequence, x: &FormalSum, n: usize) -> Result<OperatorPoly> {
    if n < x.stage() {
        return Err(Error::StageOrder { from: x.stage(), to: n });
    }
    let scale = Rational::from_integer(primes.prefix_product(n - 1)? as i128);
    Ok(OperatorPoly::from_terms(
        x.terms()
            .iter()
            .map(|(g, &c)| ((g.value() * scale).to_integer() as u64, c)),
    ))
}

/// `θ(x)` presented at stage `n`: `ψ_n` of the stage-`n` polynomial.
pub fn theta_at_stage(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    x: &FormalSum,
    n: usize,
) -> Result<ColimitElement<OperatorField>> {
    partition.domain(n)?;
    psi(primes, partition, n, &stage_polynomial(primes, x, n)?)
}

/// `θ(x)` at the smallest stage holding every term. That stage must leave
/// at least one cell below it, i.e. be below the chain depth.
pub fn theta(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    x: &FormalSum,
) -> Result<ColimitElement<OperatorField>> {
    let needed = x.stage();
    if needed >= partition.depth() {
        return Err(Error::DepthExceeded {
            needed,
            depth: partition.depth(),
        });
    }
    theta_at_stage(primes, partition, x, needed)
}

/// For each sum and each admissible `n`, the presentations at `n` and `n+1`
/// agree after restriction. The witness names the sum and stage.
pub fn check_theta_welldef(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    sums: &[FormalSum],
) -> Result<CheckResult<String>> {
    let mut checked = 0;
    for x in sums {
        for n in x.stage()..partition.depth() {
            checked += 1;
            let lower = theta_at_stage(primes, partition, x, n)?
                .payload
                .restrict(partition.domain(n + 1)?)?;
            let upper = theta_at_stage(primes, partition, x, n + 1)?.payload;
            if lower != upper {
                return Ok(CheckResult::fail(checked, format!("{x} at stages {n}, {}", n + 1)));
            }
        }
    }
    Ok(CheckResult::pass(checked))
}

/// Every `V_g` with `g = m / (p_1 ⋯ p_{n-1})`, `m <= max_m`, `n < depth`.
pub fn lattice_generators(primes: &PrimeSequence, depth: usize, max_m: u64) -> Result<Vec<FormalSum>> {
    let mut seen = BTreeSet::new();
    for n in 1..depth {
        for m in 0..=max_m {
            seen.insert(level_embed(primes, n, m)?);
        }
    }
    Ok(seen.into_iter().map(FormalSum::generator).collect())
}

/// Distinct sums must have distinct `θ` images at a common stage, equal
/// sums equal images.
pub fn theta_injectivity(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    sums: &[FormalSum],
) -> Result<InjectivityReport> {
    let mut report = InjectivityReport {
        pass: true,
        samples: sums.len(),
        equivalent_pairs: 0,
        distinct_pairs: 0,
        violations: Vec::new(),
    };
    for x in sums {
        theta(primes, partition, x)?;
    }
    for i in 0..sums.len() {
        for j in i + 1..sums.len() {
            let stage = sums[i].stage().max(sums[j].stage());
            let a = theta_at_stage(primes, partition, &sums[i], stage)?.payload;
            let b = theta_at_stage(primes, partition, &sums[j], stage)?.payload;
            let same = sums[i] == sums[j];
            if same {
                report.equivalent_pairs += 1;
            } else {
                report.distinct_pairs += 1;
            }
            if same != (a == b) {
                report.violations.push((i, j));
            }
        }
    }
    report.pass = report.violations.is_empty();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormProbeEntry {
    pub sum: FormalSum,
    pub stage: usize,
    /// Symbol norm of the stage polynomial.
    pub lhs: f64,
    /// Largest symbol norm over the cell components of `θ(x)`.
    pub rhs: f64,
    pub diff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix_diff: Option<f64>,
}

/// Compares `‖x‖` with `max_k ‖θ(x)|_{W_k}‖` on the symbol grid and, when
/// `dim` is given, with the norm of the `dim × dim` section of the stage
/// polynomial (Lanczos at tolerance `1e-9`).
pub fn norm_preservation_probe(
    primes: &PrimeSequence,
    partition: &ChainPartition,
    sums: &[FormalSum],
    grid: usize,
    dim: Option<usize>,
) -> Result<Vec<NormProbeEntry>> {
    sums.par_iter()
        .map(|x| {
            let image = theta(primes, partition, x)?;
            let stage = image.stage;
            let poly = stage_polynomial(primes, x, stage)?;
            let lhs = symbol_sup_norm(&poly, grid)?;
            let mut rhs = 0.0f64;
            let mut seen = BTreeSet::new();
            for (&j, component) in image.payload.components() {
                if matches!(partition.cell_of(j), Some(Cell::Step(_)))
                    && seen.insert(component.terms().keys().copied().collect::<Vec<_>>())
                {
                    rhs = rhs.max(symbol_sup_norm(component, grid)?);
                }
            }
            let matrix_norm = match dim {
                Some(d) => Some(operator_norm(&evaluate(&poly, d)?, 1e-9)?),
                None => None,
            };
            Ok(NormProbeEntry {
                sum: x.clone(),
                stage,
                lhs,
                rhs,
                diff: (lhs - rhs).abs(),
                matrix_norm,
                matrix_diff: matrix_norm.map(|m| (m - lhs).abs()),
            })
        })
        .collect()
}

/// `Σ_{m <= degree} c_m V_{m / (p_1 ⋯ p_{s-1})}` for a random stage
/// `1 <= s <= max_stage` and real coefficients in `[-1, 1]`.
pub fn random_formal_sum<R: Rng + ?Sized>(
    rng: &mut R,
    primes: &PrimeSequence,
    max_stage: usize,
    degree: u64,
) -> Result<FormalSum> {
    let stage = rng.gen_range(1..=max_stage.max(1));
    let terms = (0..=degree)
        .map(|m| {
            Ok((
                level_embed(primes, stage, m)?,
                Complex::new(rng.gen_range(-1.0..=1.0), 0.0),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FormalSum::from_terms(terms))
}

/// `j ↦ T^{e_j}` with `e_j` uniform in `0..=max_exponent`.
pub fn random_monomial_field<R: Rng + ?Sized>(
    rng: &mut R,
    domain: &IndexSet,
    max_exponent: u64,
) -> Result<OperatorField> {
    OperatorField::monomials(&domain.iter().map(|&j| (j, rng.gen_range(0..=max_exponent))).collect())
}

/// A labelled anchor `a` with its base set `U_a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestedAnchor {
    pub label: String,
    pub domain: IndexSet,
}

/// First chain stage whose domain lies inside `domain`.
fn cofinal_stage(partition: &ChainPartition, domain: &IndexSet) -> Option<usize> {
    partition
        .domains()
        .iter()
        .position(|d| d.is_subset(domain))
        .map(|n| n + 1)
}

/// Compares, for every sample field on `U_{a_1}`, the sequence presentation
/// (restriction along `U_{a_1} ⊇ ... ⊇ U_{a_N}`) with every directed
/// presentation `U_{a_1} ⊇ U_a ⊇ U_b ⊇ U_{a_n} ⊇ U_{a_N}` through tested
/// anchors. Fails with [`Error::CofinalityFailure`] when some tested pair
/// `U_b ⊆ U_a` has no chain domain below `U_b`.
pub fn lemma_lim_check(
    partition: &ChainPartition,
    tested: &[TestedAnchor],
    samples: &[OperatorField],
) -> Result<CheckResult<String>> {
    let mut landing = Vec::with_capacity(tested.len());
    for b in tested {
        landing.push(cofinal_stage(partition, &b.domain));
    }
    for a in tested {
        for (b, stage) in tested.iter().zip(&landing) {
            if b.domain.is_subset(&a.domain) && stage.is_none() {
                return Err(Error::CofinalityFailure(a.label.clone(), b.label.clone()));
            }
        }
    }
    let top = partition.domain(1)?;
    let terminal = partition.domain(partition.depth())?;
    let inside: Vec<usize> = (0..tested.len()).filter(|&k| tested[k].domain.is_subset(top)).collect();
    let mut checked = 0;
    for (s, f) in samples.iter().enumerate() {
        let f = f.restrict(top)?;
        let mut sequence = f.clone();
        for d in &partition.domains()[1..] {
            sequence = sequence.restrict(d)?;
        }
        for &ai in &inside {
            let at_a = f.restrict(&tested[ai].domain)?;
            for &bi in &inside {
                if !tested[bi].domain.is_subset(&tested[ai].domain) {
                    continue;
                }
                checked += 1;
                let stage = landing[bi].expect("checked above");
                let directed = at_a
                    .restrict(&tested[bi].domain)?
                    .restrict(partition.domain(stage)?)?
                    .restrict(terminal)?;
                if directed != sequence {
                    return Ok(CheckResult::fail(
                        checked,
                        format!("sample {s} via {} -> {}", tested[ai].label, tested[bi].label),
                    ));
                }
            }
        }
    }
    Ok(CheckResult::pass(checked))
}

/// Tested anchors for the circle example at grid point `point`: the chain's
/// own anchors plus `extra` arcs of the family whose base set contains the
/// point, drawn with `rng`.
pub fn circle_tested_anchors<R: Rng + ?Sized>(
    example: &CircleExample,
    chain: &NeighborhoodChain<crate::topology::circle::RationalArc>,
    extra: usize,
    rng: &mut R,
) -> Vec<TestedAnchor> {
    let mut anchors: Vec<TestedAnchor> = chain
        .anchors
        .iter()
        .zip(&chain.domains)
        .map(|(a, d)| TestedAnchor {
            label: a.to_string(),
            domain: d.clone(),
        })
        .collect();
    let around: Vec<_> = example
        .arcs()
        .iter()
        .filter(|a| example.base_set(a).contains(&chain.point))
        .collect();
    for arc in around.choose_multiple(rng, extra) {
        let label = arc.to_string();
        if anchors.iter().all(|t| t.label != label) {
            anchors.push(TestedAnchor {
                label,
                domain: example.base_set(arc),
            });
        }
    }
    anchors
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inductive::check_functoriality;
    use crate::semigroup::{PrimeRule, QpElement};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(xs: &[usize]) -> IndexSet {
        xs.iter().copied().collect()
    }

    fn p235() -> PrimeSequence {
        PrimeSequence::explicit(&[2, 3, 5]).unwrap()
    }

    fn tm(m: u64) -> OperatorPoly {
        OperatorPoly::monomial(m)
    }

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn g(primes: &PrimeSequence, n: i128, d: i128) -> QpElement {
        QpElement::new(primes, Rational::new(n, d), 16).unwrap()
    }

    #[test]
    fn field_algebra_examples() {
        let single = build_field_algebra(&set(&[4])).unwrap();
        assert_eq!(single.identity().len(), 1);
        let alg = build_field_algebra(&set(&[1, 2, 3])).unwrap();
        assert_eq!(alg.identity().sup_norm(64).unwrap(), 1.0);
        let f = OperatorField::new([(1, tm(1)), (2, OperatorPoly::term(1, c(2.0)))].into()).unwrap();
        assert_eq!(f.sup_norm(64).unwrap(), 2.0);
        assert_eq!(build_field_algebra(&IndexSet::new()).unwrap_err(), Error::EmptyDomain);
        let sq = alg.constant(&tm(2)).mul(&alg.constant(&tm(3))).unwrap();
        assert_eq!(sq, alg.constant(&tm(5)));
        assert!(alg.contains(&sq));
        assert_eq!(alg.identity().add(&f).unwrap_err(), Error::DomainMismatch);
    }

    #[test]
    fn restriction_examples() {
        let f = OperatorField::monomials(&[(0, 1), (1, 2), (2, 3), (3, 4)].into()).unwrap();
        assert_eq!(f.restrict(&f.domain()).unwrap(), f);
        let two_step = f.restrict(&set(&[0, 1, 2])).unwrap().restrict(&set(&[1])).unwrap();
        assert_eq!(two_step, f.restrict(&set(&[1])).unwrap());
        assert_eq!(f.restrict(&IndexSet::new()).unwrap_err(), Error::EmptyDomain);
        assert_eq!(f.restrict(&set(&[7])).unwrap_err(), Error::NotSubset);
    }

    #[test]
    fn partition_invariants() {
        let part = ChainPartition::ladder(4);
        assert_eq!(part.cells(), &[set(&[3]), set(&[2]), set(&[1])]);
        assert_eq!(part.residual(), &set(&[0]));
        for n in 1..=4 {
            let mut union = part.residual().clone();
            for k in n..4 {
                union.extend(part.cell(k).unwrap());
            }
            assert_eq!(&union, part.domain(n).unwrap());
        }
        assert!(ChainPartition::new(0, vec![set(&[0, 1]), set(&[0, 2])]).is_err());
        assert!(ChainPartition::new(5, vec![set(&[0, 1])]).is_err());
    }

    #[test]
    fn l_field_examples() {
        let part = ChainPartition::ladder(4);
        let p = p235();
        let l1 = l_exponents(&p, &part, 1).unwrap();
        assert_eq!(l1, [(3, 2), (2, 6), (1, 30), (0, 0)].into());
        let l2 = l_exponents(&p, &part, 2).unwrap();
        assert_eq!(l2, [(2, 3), (1, 15), (0, 0)].into());
        assert_eq!(l_exponents(&p, &part, 4).unwrap(), [(0, 0)].into());
        assert_eq!(
            l_field(&p, &part, 5).unwrap_err(),
            Error::ChainTooShort { stage: 5, depth: 4 }
        );
        assert_eq!(
            l_field(&p, &part, 0).unwrap_err(),
            Error::ChainTooShort { stage: 0, depth: 4 }
        );
    }

    #[test]
    fn tau_l_examples() {
        let part = ChainPartition::ladder(4);
        for n in 1..4 {
            assert!(check_tau_l(&p235(), &part, n).unwrap().pass);
        }
        let six = PrimeSequence::explicit(&[2, 3, 5, 7, 11, 13]).unwrap();
        let deep = ChainPartition::ladder(7);
        for n in 1..7 {
            assert!(check_tau_l(&six, &deep, n).unwrap().pass);
        }
        let lower = l_field(&p235(), &part, 1).unwrap();
        let mut upper = l_field(&p235(), &part, 2).unwrap();
        upper.components.insert(1, tm(7 * 5));
        let check = check_tau_l_fields(2, &lower, &upper).unwrap();
        assert_eq!(check.witness, Some(1));
    }

    #[test]
    fn psi_examples() {
        let part = ChainPartition::ladder(4);
        let p = p235();
        let id = psi(&p, &part, 2, &OperatorPoly::identity()).unwrap();
        assert_eq!(id.payload, OperatorField::identity(part.domain(2).unwrap()).unwrap());
        assert_eq!(
            psi(&p, &part, 1, &tm(1)).unwrap().payload,
            l_field(&p, &part, 1).unwrap()
        );
        let sq = psi(&p, &part, 2, &tm(2)).unwrap().payload;
        assert_eq!(sq.get(2), Some(&tm(6)));
        assert_eq!(sq.get(1), Some(&tm(30)));
        assert_eq!(sq.get(0), Some(&tm(0)));
        let poly = OperatorPoly::from_real(&[0.5, -1.0, 2.0]);
        let psi_poly = psi(&p, &part, 1, &poly).unwrap().payload;
        for (&j, &e) in &l_exponents(&p, &part, 1).unwrap() {
            assert_eq!(psi_poly.get(j), Some(&poly.coburn(e).unwrap()));
        }
    }

    #[test]
    fn psi_compat_examples() {
        let part = ChainPartition::ladder(7);
        let primes = PrimeSequence::explicit(&[2, 3, 5, 7, 11, 13]).unwrap();
        let monomials: Vec<_> = (0..=20).map(tm).collect();
        for n in 1..7 {
            assert!(check_psi_compat(&primes, &part, n, &monomials).unwrap().pass);
        }
        let poly = [OperatorPoly::from_real(&[1.0, 2.0, -3.0])];
        assert!(check_psi_compat(&primes, &part, 3, &poly).unwrap().pass);
    }

    #[test]
    fn field_chain_is_functorial() {
        let part = ChainPartition::ladder(4);
        let system = part.field_chain().unwrap();
        let f = l_field(&p235(), &part, 1).unwrap();
        let gens: Vec<OperatorField> = vec![f];
        assert!(check_functoriality(&system, &gens).unwrap().pass);
    }

    #[test]
    fn isometry_examples() {
        let part = ChainPartition::ladder(4);
        let l1 = l_field(&p235(), &part, 1).unwrap();
        let report = isometry_check(&l1, 64).unwrap();
        assert!(report.pass);
        let widths: Vec<(usize, usize)> = report.components.iter().map(|c| (c.index, c.width)).collect();
        assert_eq!(widths, vec![(0, 64), (1, 34), (2, 58), (3, 62)]);
        assert!(
            isometry_check(&OperatorField::identity(&set(&[0, 1])).unwrap(), 8)
                .unwrap()
                .pass
        );
        assert_eq!(
            isometry_check(&l1, 30).unwrap_err(),
            Error::DegreeOverflow { degree: 30, dim: 30 }
        );
        let poly = OperatorField::constant(&set(&[2]), &OperatorPoly::from_real(&[1.0, 1.0])).unwrap();
        assert_eq!(isometry_check(&poly, 8).unwrap_err(), Error::NotMonomial(2));
    }

    #[test]
    fn theta_examples() {
        let part = ChainPartition::ladder(4);
        let p = p235();
        let zero = theta(&p, &part, &FormalSum::generator(QpElement::zero())).unwrap();
        assert_eq!(zero.payload, OperatorField::identity(part.domain(1).unwrap()).unwrap());
        let one = theta(&p, &part, &FormalSum::generator(g(&p, 1, 1))).unwrap();
        assert_eq!(one.payload, l_field(&p, &part, 1).unwrap());
        let half = theta(&p, &part, &FormalSum::generator(g(&p, 1, 2))).unwrap();
        assert_eq!((half.stage, &half.payload), (2, &l_field(&p, &part, 2).unwrap()));
        let squared = half.payload.pow(2).unwrap();
        assert_eq!(squared, one.payload.restrict(&half.payload.domain()).unwrap());
        let deep = FormalSum::generator(g(&p, 1, 30));
        assert_eq!(
            theta(&p, &part, &deep).unwrap_err(),
            Error::DepthExceeded { needed: 4, depth: 4 }
        );
    }

    #[test]
    fn theta_is_well_defined_and_injective() {
        let part = ChainPartition::ladder(6);
        let p = PrimeSequence::explicit(&[2, 3, 5, 7, 11]).unwrap();
        let gens = lattice_generators(&p, 6, 20).unwrap();
        assert!(check_theta_welldef(&p, &part, &gens).unwrap().pass);
        let report = theta_injectivity(&p, &part, &gens).unwrap();
        assert!(report.pass);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sums: Vec<_> = (0..30)
            .map(|_| random_formal_sum(&mut rng, &p, 5, 8).unwrap())
            .collect();
        assert!(check_theta_welldef(&p, &part, &sums).unwrap().pass);
        assert!(theta_injectivity(&p, &part, &sums).unwrap().pass);
    }

    #[test]
    fn norm_probe_examples() {
        let part = ChainPartition::ladder(4);
        let p = p235();
        let sums = vec![
            FormalSum::generator(QpElement::zero()),
            FormalSum::from_terms([(QpElement::zero(), c(1.0)), (g(&p, 1, 1), c(1.0))]),
        ];
        let report = norm_preservation_probe(&p, &part, &sums, 1024, Some(64)).unwrap();
        assert_eq!((report[0].lhs, report[0].rhs), (1.0, 1.0));
        assert_eq!((report[1].lhs, report[1].rhs), (2.0, 2.0));
        assert!(report[1].matrix_diff.unwrap() < 1e-2);
    }

    #[test]
    fn sequence_and_directed_presentations_agree_on_circle() {
        let example = CircleExample::new(16).unwrap();
        let chain = example.neighborhood_chain(0, 4).unwrap();
        let part = ChainPartition::from_chain(&chain).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tested = circle_tested_anchors(&example, &chain, 16, &mut rng);
        let samples: Vec<_> = (0..20)
            .map(|_| random_monomial_field(&mut rng, part.domain(1).unwrap(), 64).unwrap())
            .collect();
        let mut with_identity = samples.clone();
        with_identity.push(OperatorField::identity(part.domain(1).unwrap()).unwrap());
        let check = lemma_lim_check(&part, &tested, &with_identity).unwrap();
        assert!(check.pass);
        assert!(check.checked > 20);
        let truncated = part.truncated(2).unwrap();
        let err = lemma_lim_check(&truncated, &tested, &samples).unwrap_err();
        assert!(matches!(err, Error::CofinalityFailure(_, _)));
    }

    proptest! {
        #[test]
        fn tau_l_holds_for_random_sequences(
            primes in prop::collection::vec(prop::sample::select(vec![2u64, 3, 5, 7, 11, 13, 17, 19, 23]), 1..=8),
        ) {
            let p = PrimeSequence::explicit(&primes).unwrap();
            let part = ChainPartition::ladder(primes.len() + 1);
            for n in 1..=primes.len() {
                prop_assert!(check_tau_l(&p, &part, n).unwrap().pass);
            }
        }

        #[test]
        fn restriction_is_transitive(seed in 0u64..500, cut1 in 0usize..6, cut2 in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let part = ChainPartition::ladder(8);
            let f = random_monomial_field(&mut rng, part.domain(1).unwrap(), 40).unwrap();
            let (b, c) = (1 + cut1.min(cut2), 1 + cut1.max(cut2) + 1);
            let direct = f.restrict(part.domain(c).unwrap()).unwrap();
            let stepwise = f.restrict(part.domain(b).unwrap()).unwrap().restrict(part.domain(c).unwrap()).unwrap();
            prop_assert_eq!(direct, stepwise);
        }

        #[test]
        fn every_theta_component_is_a_monomial(m in 0u64..64, n in 1usize..5) {
            let p = PrimeSequence::rule(PrimeRule::Increasing);
            let part = ChainPartition::ladder(5);
            let x = FormalSum::generator(level_embed(&p, n, m).unwrap());
            let image = theta(&p, &part, &x).unwrap();
            let max_e = image.payload.exponents().unwrap().values().copied().max().unwrap();
            let report = isometry_check(&image.payload, (2 * max_e as usize).max(2)).unwrap();
            prop_assert!(report.pass);
        }
    }
}
