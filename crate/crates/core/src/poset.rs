//! Finite partially ordered sets and their decomposition into maximal
//! upward directed subsets.

use std::collections::{HashMap, HashSet};
use std::env;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable overriding [`SearchLimits::exhaustive_bound`].
pub const MAX_EXHAUSTIVE_ENV: &str = "POSET_CSTAR_MAX_EXHAUSTIVE";

/// Bounds on searches that enumerate all subsets of a ground set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub exhaustive_bound: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { exhaustive_bound: 20 }
    }
}

impl SearchLimits {
    /// Default limits, with `POSET_CSTAR_MAX_EXHAUSTIVE` applied when it
    /// parses as an integer.
    pub fn from_env() -> Self {
        let mut limits = SearchLimits::default();
        if let Some(bound) = env::var(MAX_EXHAUSTIVE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            limits.exhaustive_bound = bound;
        }
        limits
    }
}

/// On-disk form of a poset: `{ "elements": [...], "leq": [[a, b], ...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosetFile {
    pub elements: Vec<String>,
    pub leq: Vec<(String, String)>,
}

/// A finite poset. The order is stored as a reflexive, transitive,
/// antisymmetric boolean matrix indexed by element position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poset {
    elements: Vec<String>,
    index: HashMap<String, usize>,
    leq: Vec<Vec<bool>>,
}

impl Poset {
    /// Builds a poset from element ids and generating pairs `(a, b)` meaning
    /// `a <= b`. The reflexive-transitive closure of the pairs is taken; a
    /// closure that identifies two distinct elements is rejected.
    pub fn new<S: AsRef<str>>(elements: &[S], pairs: &[(S, S)]) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyPoset);
        }
        let mut index = HashMap::with_capacity(elements.len());
        let mut ids = Vec::with_capacity(elements.len());
        for (i, e) in elements.iter().enumerate() {
            let e = e.as_ref().to_string();
            if index.insert(e.clone(), i).is_some() {
                return Err(Error::DuplicateElement(e));
            }
            ids.push(e);
        }
        let lookup = |s: &str| {
            index
                .get(s)
                .copied()
                .ok_or_else(|| Error::UnknownElement(s.to_string()))
        };
        let mut index_pairs = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            index_pairs.push((lookup(a.as_ref())?, lookup(b.as_ref())?));
        }
        let mut poset = Self::from_index_pairs_unnamed(elements.len(), &index_pairs).map_err(|e| match e {
            Error::Cycle(a, b) => {
                let name = |s: &str| ids[s.parse::<usize>().unwrap_or(0)].clone();
                Error::Cycle(name(&a), name(&b))
            }
            other => other,
        })?;
        poset.elements = ids;
        poset.index = index;
        Ok(poset)
    }

    /// Poset on `0..n` (ids are the decimal positions) generated by index pairs.
    pub fn from_index_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(Error::UnknownElement(a.max(b).to_string()));
        }
        Self::from_index_pairs_unnamed(n, pairs)
    }

    fn from_index_pairs_unnamed(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPoset);
        }
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in pairs {
            leq[a][b] = true;
        }
        // Warshall closure.
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    let row = leq[k].clone();
                    for (x, &y) in leq[i].iter_mut().zip(&row) {
                        *x |= y;
                    }
                }
            }
        }
        let elements: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        for a in 0..n {
            for b in (a + 1)..n {
                if leq[a][b] && leq[b][a] {
                    return Err(Error::Cycle(elements[a].clone(), elements[b].clone()));
                }
            }
        }
        let index = elements.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        Ok(Poset { elements, index, leq })
    }

    pub fn from_file(file: &PosetFile) -> Result<Self> {
        Self::new(&file.elements, &file.leq)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PosetFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_file(&file)
    }

    /// The chain `0 <= 1 <= ... <= n-1`.
    pub fn chain(n: usize) -> Result<Self> {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_index_pairs(n, &pairs)
    }

    pub fn antichain(n: usize) -> Result<Self> {
        Self::from_index_pairs(n, &[])
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elements[i]
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownElement(id.to_string()))
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.leq[a][b]
    }

    /// All pairs `(a, b)` with `a <= b`, reflexive pairs included.
    pub fn leq_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.leq[a][b])
            .collect()
    }

    pub fn to_file(&self) -> PosetFile {
        PosetFile {
            elements: self.elements.clone(),
            leq: self
                .leq_pairs()
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (self.elements[a].clone(), self.elements[b].clone()))
                .collect(),
        }
    }

    pub fn maximal_elements(&self) -> Vec<usize> {
        let n = self.len();
        (0..n).filter(|&m| (0..n).all(|x| x == m || !self.leq[m][x])).collect()
    }

    /// `{ x : x <= top }`, ascending.
    pub fn down_set(&self, top: usize) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.leq[x][top]).collect()
    }

    fn check_indices(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&x| x >= self.len()) {
            Some(&x) => Err(Error::UnknownElement(x.to_string())),
            None => Ok(()),
        }
    }

    /// True iff every pair of `subset` has an upper bound inside `subset`.
    pub fn is_upward_directed(&self, subset: &[usize]) -> Result<bool> {
        self.check_indices(subset)?;
        Ok(self.directed_unchecked(subset))
    }

    /// [`Poset::is_upward_directed`] addressed by element ids.
    pub fn is_upward_directed_ids<S: AsRef<str>>(&self, subset: &[S]) -> Result<bool> {
        let idx = subset
            .iter()
            .map(|s| self.index_of(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.directed_unchecked(&idx))
    }

    fn directed_unchecked(&self, subset: &[usize]) -> bool {
        subset.iter().enumerate().all(|(k, &a)| {
            subset[k..]
                .iter()
                .all(|&b| subset.iter().any(|&c| self.leq[a][c] && self.leq[b][c]))
        })
    }
}

/// The maximal upward directed subsets `K_i` of a poset, indexed by position.
/// Members are ascending index lists; the family is ordered
/// lexicographically by those lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectedFamily {
    members: Vec<Vec<usize>>,
}

impl DirectedFamily {
    /// Wraps members without checking directedness or maximality. Sorts
    /// each member and the family. Used for fault injection.
    pub fn from_members_unchecked(mut members: Vec<Vec<usize>>) -> Self {
        for m in members.iter_mut() {
            m.sort_unstable();
            m.dedup();
        }
        members.sort();
        members.dedup();
        DirectedFamily { members }
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    /// Size of the index set `I`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize, a: usize) -> bool {
        self.members[i].binary_search(&a).is_ok()
    }

    pub fn member_names(&self, poset: &Poset) -> Vec<Vec<String>> {
        self.members
            .iter()
            .map(|m| m.iter().map(|&x| poset.name(x).to_string()).collect())
            .collect()
    }

    /// Checks the four family invariants against `poset`: every member is
    /// directed and maximal, the members cover the poset, and no member
    /// repeats. Returns a description of the first violation.
    pub fn validate(&self, poset: &Poset) -> std::result::Result<(), String> {
        let n = poset.len();
        for (i, m) in self.members.iter().enumerate() {
            if !poset.directed_unchecked(m) {
                return Err(format!("member {i} is not upward directed"));
            }
            let mut grown = m.clone();
            for x in (0..n).filter(|x| m.binary_search(x).is_err()) {
                grown.clear();
                grown.extend(m.iter().copied());
                grown.push(x);
                if poset.directed_unchecked(&grown) {
                    return Err(format!("member {i} extends by {}", poset.name(x)));
                }
            }
        }
        let mut covered = vec![false; n];
        for m in &self.members {
            for &x in m {
                covered[x] = true;
            }
        }
        if let Some(x) = covered.iter().position(|c| !c) {
            return Err(format!("element {} is not covered", poset.name(x)));
        }
        for w in self.members.windows(2) {
            if w[0] == w[1] {
                return Err("duplicate member".to_string());
            }
        }
        Ok(())
    }
}

/// Maximal upward directed subsets, grown from the down-sets of maximal
/// elements by backtracking over single-element extensions.
pub fn maximal_directed_subsets(poset: &Poset) -> Result<DirectedFamily> {
    let n = poset.len();
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut seen = HashSet::new();
    for top in poset.maximal_elements() {
        let mut in_set = vec![false; n];
        for x in poset.down_set(top) {
            in_set[x] = true;
        }
        grow(poset, &mut in_set, &mut seen, &mut found);
    }
    found.sort_by_key(|m| std::cmp::Reverse(m.len()));
    let mut maximal: Vec<Vec<usize>> = Vec::new();
    for cand in found {
        if !maximal.iter().any(|m| is_subset(&cand, m)) {
            maximal.push(cand);
        }
    }
    Ok(DirectedFamily::from_members_unchecked(maximal))
}

fn grow(poset: &Poset, in_set: &mut [bool], seen: &mut HashSet<Vec<bool>>, out: &mut Vec<Vec<usize>>) {
    if !seen.insert(in_set.to_vec()) {
        return;
    }
    let mut extended = false;
    for x in 0..in_set.len() {
        if in_set[x] {
            continue;
        }
        in_set[x] = true;
        let members: Vec<usize> = (0..in_set.len()).filter(|&y| in_set[y]).collect();
        if poset.directed_unchecked(&members) {
            extended = true;
            grow(poset, in_set, seen, out);
        }
        in_set[x] = false;
    }
    if !extended {
        out.push((0..in_set.len()).filter(|&y| in_set[y]).collect());
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Exhaustive oracle: scans all `2^n` subsets, keeps the directed ones and
/// then the inclusion-maximal ones among those.
pub fn brute_force_directed_family(poset: &Poset, limits: SearchLimits) -> Result<DirectedFamily> {
    let n = poset.len();
    let bound = limits.exhaustive_bound.min(30);
    if n > bound {
        return Err(Error::SizeLimit { size: n, bound });
    }
    let mut directed: Vec<u32> = (0u32..(1u32 << n))
        .filter(|&mask| {
            let subset: Vec<usize> = (0..n).filter(|&x| mask >> x & 1 == 1).collect();
            poset.directed_unchecked(&subset)
        })
        .collect();
    directed.sort_by_key(|m| std::cmp::Reverse(m.count_ones()));
    let mut maximal: Vec<u32> = Vec::new();
    for mask in directed {
        if !maximal.iter().any(|&m| mask & m == mask) {
            maximal.push(mask);
        }
    }
    Ok(DirectedFamily::from_members_unchecked(
        maximal
            .into_iter()
            .map(|mask| (0..n).filter(|&x| mask >> x & 1 == 1).collect())
            .collect(),
    ))
}

/// Random poset on `0..n`: each pair `i < j` is related with probability
/// `density` before closure. Every order type has positive probability.
pub fn random_poset<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Poset {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(density) {
                pairs.push((i, j));
            }
        }
    }
    Poset::from_index_pairs(n, &pairs).expect("pairs respect the natural order")
}

/// Every transitively closed relation on `0..n` contained in the natural
/// order. Each poset on `n` points is isomorphic to at least one of these.
pub fn natural_posets(n: usize) -> Vec<Poset> {
    let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << slots.len()) {
        let pairs: Vec<_> = slots
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let closed = pairs.iter().all(|&(a, b)| {
            pairs
                .iter()
                .filter(|&&(c, _)| c == b)
                .all(|&(_, d)| pairs.contains(&(a, d)))
        });
        if closed {
            out.push(Poset::from_index_pairs(n, &pairs).expect("natural order is acyclic"));
        }
    }
    out
}
