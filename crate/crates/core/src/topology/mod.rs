//! The topology on the index set `I` of a directed family, generated by the
//! base sets `U_a = { i : a ∈ K_i }`.

pub mod circle;

use std::collections::BTreeSet;

use serde::Serialize;

use crate::check::CheckResult;
use crate::error::{Error, Result};
use crate::poset::{DirectedFamily, Poset, SearchLimits};

pub type IndexSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BaseSet {
    pub anchor: usize,
    pub indices: IndexSet,
}

/// `U_a`: the indices whose member contains `a`.
pub fn base_set(poset: &Poset, family: &DirectedFamily, a: usize) -> Result<BaseSet> {
    if a >= poset.len() {
        return Err(Error::UnknownElement(a.to_string()));
    }
    let indices = (0..family.len()).filter(|&i| family.contains(i, a)).collect();
    Ok(BaseSet { anchor: a, indices })
}

pub fn base_sets(poset: &Poset, family: &DirectedFamily) -> Vec<BaseSet> {
    (0..poset.len())
        .map(|a| base_set(poset, family, a).expect("anchor in range"))
        .collect()
}

/// Checks `U_b ⊆ U_a` for every `a <= b`; the witness is the first
/// offending pair `(a, b)`.
pub fn check_base_monotone(poset: &Poset, family: &DirectedFamily) -> CheckResult<(usize, usize)> {
    let bases = base_sets(poset, family);
    CheckResult::over(poset.leq_pairs(), |&(a, b)| {
        (!bases[b].indices.is_subset(&bases[a].indices)).then_some((a, b))
    })
}

/// A topology on `0..ground`, stored as its full list of open sets in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteTopology {
    ground: usize,
    opens: Vec<IndexSet>,
}

impl FiniteTopology {
    /// Closes `base` under finite intersections and unions, adding `∅` and
    /// the ground set.
    pub fn generate(ground: usize, base: &[IndexSet], limits: SearchLimits) -> Result<Self> {
        let bound = limits.exhaustive_bound.min(63);
        if ground > bound {
            return Err(Error::SizeLimit { size: ground, bound });
        }
        if let Some(&bad) = base.iter().flat_map(|b| b.iter()).find(|&&i| i >= ground) {
            return Err(Error::IndexOutOfRange(bad));
        }
        let full: u64 = if ground == 0 { 0 } else { u64::MAX >> (64 - ground) };
        let to_mask = |s: &IndexSet| s.iter().fold(0u64, |m, &i| m | 1 << i);

        // Intersection closure of the base, then all unions of that.
        let mut meets: BTreeSet<u64> = base.iter().map(to_mask).collect();
        meets.insert(full);
        loop {
            let current: Vec<u64> = meets.iter().copied().collect();
            let before = meets.len();
            for (k, &a) in current.iter().enumerate() {
                for &b in &current[k + 1..] {
                    meets.insert(a & b);
                }
            }
            if meets.len() == before {
                break;
            }
        }
        let mut opens: BTreeSet<u64> = BTreeSet::from([0u64]);
        for &m in &meets {
            let unions: Vec<u64> = opens.iter().map(|&o| o | m).collect();
            opens.extend(unions);
        }
        let mut opens: Vec<IndexSet> = opens
            .into_iter()
            .map(|m| (0..ground).filter(|&i| m >> i & 1 == 1).collect())
            .collect();
        opens.sort();
        Ok(FiniteTopology { ground, opens })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn opens(&self) -> &[IndexSet] {
        &self.opens
    }

    pub fn is_open(&self, set: &IndexSet) -> bool {
        self.opens.binary_search(set).is_ok()
    }

    /// Smallest open set containing `i`.
    pub fn minimal_neighbourhood(&self, i: usize) -> IndexSet {
        let mut nbhd: IndexSet = (0..self.ground).collect();
        for o in self.opens.iter().filter(|o| o.contains(&i)) {
            nbhd = nbhd.intersection(o).copied().collect();
        }
        nbhd
    }

    /// Every pair of distinct points is separated by an open set containing
    /// the first and missing the second.
    pub fn is_t1(&self) -> bool {
        (0..self.ground).all(|i| {
            (0..self.ground)
                .filter(|&j| j != i)
                .all(|j| self.opens.iter().any(|o| o.contains(&i) && !o.contains(&j)))
        })
    }

    /// Points `i` with `{i}` open.
    pub fn isolated_points(&self) -> IndexSet {
        (0..self.ground)
            .filter(|&i| self.is_open(&IndexSet::from([i])))
            .collect()
    }
}

/// The topology generated by the base `{U_a}` of `family`.
pub fn generate_topology(poset: &Poset, family: &DirectedFamily, limits: SearchLimits) -> Result<FiniteTopology> {
    let base: Vec<IndexSet> = base_sets(poset, family).into_iter().map(|b| b.indices).collect();
    FiniteTopology::generate(family.len(), &base, limits)
}

/// Anchors `a_1 <= ... <= a_N` at a point together with their evaluated
/// base sets `U_{a_1} ⊇ ... ⊇ U_{a_N}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeighborhoodChain<A> {
    pub point: usize,
    pub anchors: Vec<A>,
    pub domains: Vec<IndexSet>,
}

impl<A> NeighborhoodChain<A> {
    pub fn depth(&self) -> usize {
        self.anchors.len()
    }

    /// Checks the chain invariants: the point lies in every domain, domains
    /// are nested, anchors ascend under `leq`.
    pub fn validate(&self, leq: impl Fn(&A, &A) -> bool) -> std::result::Result<(), String> {
        if self.anchors.len() != self.domains.len() || self.anchors.is_empty() {
            return Err("anchor and domain counts differ or are zero".into());
        }
        if let Some(n) = self.domains.iter().position(|d| !d.contains(&self.point)) {
            return Err(format!("point missing from domain {}", n + 1));
        }
        for n in 1..self.depth() {
            if !self.domains[n].is_subset(&self.domains[n - 1]) {
                return Err(format!("domain {} is not inside domain {}", n + 1, n));
            }
            if !leq(&self.anchors[n - 1], &self.anchors[n]) {
                return Err(format!("anchor {} is not below anchor {}", n, n + 1));
            }
        }
        Ok(())
    }

    /// True when each domain is a proper subset of the previous one.
    pub fn strictly_shrinking(&self) -> bool {
        self.domains.windows(2).all(|w| w[1].len() < w[0].len())
    }
}

/// Searches for anchors `a_1 <= ... <= a_depth` whose base sets contain
/// `point` and shrink strictly. Isolated points have no such chain.
pub fn neighborhood_chain(
    poset: &Poset,
    family: &DirectedFamily,
    topology: &FiniteTopology,
    point: usize,
    depth: usize,
) -> Result<NeighborhoodChain<usize>> {
    if point >= family.len() {
        return Err(Error::IndexOutOfRange(point));
    }
    let unavailable = Error::ChainUnavailable { point, depth };
    if depth == 0 || topology.isolated_points().contains(&point) {
        return Err(unavailable);
    }
    let bases: Vec<IndexSet> = base_sets(poset, family).into_iter().map(|b| b.indices).collect();
    let candidates: Vec<usize> = (0..poset.len()).filter(|&a| bases[a].contains(&point)).collect();
    let mut anchors = Vec::with_capacity(depth);
    if extend_chain(poset, &bases, &candidates, depth, &mut anchors) {
        let domains = anchors.iter().map(|&a| bases[a].clone()).collect();
        Ok(NeighborhoodChain {
            point,
            anchors,
            domains,
        })
    } else {
        Err(unavailable)
    }
}

fn extend_chain(
    poset: &Poset,
    bases: &[IndexSet],
    candidates: &[usize],
    depth: usize,
    anchors: &mut Vec<usize>,
) -> bool {
    if anchors.len() == depth {
        return true;
    }
    for &a in candidates {
        let fits = match anchors.last() {
            None => true,
            Some(&prev) => poset.leq(prev, a) && bases[a].len() < bases[prev].len() && bases[a].is_subset(&bases[prev]),
        };
        if fits {
            anchors.push(a);
            if extend_chain(poset, bases, candidates, depth, anchors) {
                return true;
            }
            anchors.pop();
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{maximal_directed_subsets, random_poset};
    use proptest::prelude::*;

    fn lambda() -> (Poset, DirectedFamily) {
        let p = Poset::new(&["a", "c", "d"], &[("a", "c"), ("a", "d")]).unwrap();
        let f = maximal_directed_subsets(&p).unwrap();
        (p, f)
    }

    fn set(xs: &[usize]) -> IndexSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn base_set_examples() {
        let (p, f) = lambda();
        assert_eq!(base_set(&p, &f, 0).unwrap().indices, set(&[0, 1]));
        assert_eq!(base_set(&p, &f, 1).unwrap().indices, set(&[0]));
        assert!(base_set(&p, &f, 9).is_err());
        let chain = Poset::chain(4).unwrap();
        let cf = maximal_directed_subsets(&chain).unwrap();
        for a in 0..4 {
            assert_eq!(base_set(&chain, &cf, a).unwrap().indices, set(&[0]));
        }
    }

    #[test]
    fn base_monotone_and_fault() {
        let (p, f) = lambda();
        assert!(check_base_monotone(&p, &f).pass);
        // Second member drops `a`, so U_d = {1} is not inside U_a = {0}.
        let bad = DirectedFamily::from_members_unchecked(vec![vec![0, 1], vec![2]]);
        let r = check_base_monotone(&p, &bad);
        assert!(!r.pass);
        assert_eq!(r.witness, Some((0, 2)));
    }

    #[test]
    fn generated_topologies() {
        let limits = SearchLimits::default();
        let chain = Poset::chain(3).unwrap();
        let cf = maximal_directed_subsets(&chain).unwrap();
        let t = generate_topology(&chain, &cf, limits).unwrap();
        assert_eq!(t.opens(), &[set(&[]), set(&[0])]);

        let (p, f) = lambda();
        let t = generate_topology(&p, &f, limits).unwrap();
        assert_eq!(t.opens(), &[set(&[]), set(&[0]), set(&[0, 1]), set(&[1])]);
        assert!(t.is_t1());
        assert_eq!(t.isolated_points(), set(&[0, 1]));

        let anti = Poset::antichain(3).unwrap();
        let af = maximal_directed_subsets(&anti).unwrap();
        let t = generate_topology(&anti, &af, limits).unwrap();
        assert_eq!(t.opens().len(), 8);
        assert_eq!(t.isolated_points(), set(&[0, 1, 2]));
    }

    #[test]
    fn indiscrete_is_not_t1() {
        let t = FiniteTopology::generate(2, &[set(&[0, 1])], SearchLimits::default()).unwrap();
        assert!(!t.is_t1());
        assert!(t.isolated_points().is_empty());
        assert_eq!(t.minimal_neighbourhood(0), set(&[0, 1]));
    }

    #[test]
    fn size_limit() {
        let err = FiniteTopology::generate(5, &[], SearchLimits { exhaustive_bound: 4 }).unwrap_err();
        assert_eq!(err, Error::SizeLimit { size: 5, bound: 4 });
    }

    #[test]
    fn finite_chains_are_unavailable() {
        let (p, f) = lambda();
        let t = generate_topology(&p, &f, SearchLimits::default()).unwrap();
        for i in 0..2 {
            assert_eq!(
                neighborhood_chain(&p, &f, &t, i, 2).unwrap_err(),
                Error::ChainUnavailable { point: i, depth: 2 }
            );
        }
    }

    #[test]
    fn chain_search_on_non_isolated_point() {
        // Hand-built family in which index 0 is not isolated: U_a = {0,1},
        // U_c = {0}, but the topology is supplied as indiscrete-on-{0,1} plus
        // the chain search still needs strictly shrinking base sets.
        let p = Poset::new(&["a", "c", "d"], &[("a", "c"), ("a", "d")]).unwrap();
        let f = maximal_directed_subsets(&p).unwrap();
        let coarse = FiniteTopology::generate(2, &[set(&[0, 1])], SearchLimits::default()).unwrap();
        let chain = neighborhood_chain(&p, &f, &coarse, 0, 2).unwrap();
        assert_eq!(chain.anchors, vec![0, 1]);
        assert!(chain.validate(|&a, &b| p.leq(a, b)).is_ok());
        assert!(chain.strictly_shrinking());
        assert!(neighborhood_chain(&p, &f, &coarse, 0, 3).is_err());
    }

    proptest! {
        #[test]
        fn base_properties_on_random_posets(n in 1usize..=10, d in 0.0f64..=1.0, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = random_poset(&mut rng, n, d);
            let f = maximal_directed_subsets(&p).unwrap();
            prop_assert!(check_base_monotone(&p, &f).pass);
            let t = generate_topology(&p, &f, SearchLimits::default()).unwrap();
            prop_assert!(t.is_t1());
            prop_assert!(t.opens().contains(&IndexSet::new()));
            prop_assert!(t.opens().contains(&(0..f.len()).collect()));
            for b in base_sets(&p, &f) {
                prop_assert!(t.is_open(&b.indices));
            }
        }
    }
}
