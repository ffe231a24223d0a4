//! The circle-arc example: `K` is the set of closed arcs of `S¹` ordered by
//! inclusion, the maximal directed subsets are `K_z = { A : z ∉ A }`, and
//! `U_A = S¹ ∖ A`. Points of `S¹` are written as rationals in `[0, 1)`.
//!
//! At resolution `q` the index set is the grid `{ k/q }` and the finite arc
//! family consists of the arcs whose endpoints sit on the offset grid
//! `{ (2j+1)/(2q) }`. With that choice the `K_z` are exactly the maximal
//! directed subsets of the finite family.

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{FiniteTopology, IndexSet, NeighborhoodChain};
use crate::error::{Error, Result};
use crate::poset::{Poset, SearchLimits};

pub type Rational = Ratio<i64>;

fn frac(p: Rational) -> Rational {
    p - p.floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArcKind {
    /// `[x, y]`
    Closed,
    /// `S¹ ∖ (x, y)`
    ComplementOfOpen,
}

/// A closed arc with exact rational endpoints `0 <= x < y < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RationalArc {
    kind: ArcKind,
    x: Rational,
    y: Rational,
}

impl Serialize for RationalArc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::fmt::Display for RationalArc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ArcKind::Closed => write!(f, "[{}, {}]", self.x, self.y),
            ArcKind::ComplementOfOpen => write!(f, "S1\\({}, {})", self.x, self.y),
        }
    }
}

/// Half-open pieces `[lo, hi]` or `[lo, hi)` of an arc inside `[0, 1)`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: Rational,
    hi: Rational,
    hi_closed: bool,
}

impl Piece {
    fn inside(&self, other: &Piece) -> bool {
        other.lo <= self.lo && (self.hi < other.hi || (self.hi == other.hi && (other.hi_closed || !self.hi_closed)))
    }
}

impl RationalArc {
    pub fn new(kind: ArcKind, x: Rational, y: Rational) -> Result<Self> {
        if !(Rational::zero() <= x && x < y && y < Rational::one()) {
            return Err(Error::InvalidArc(format!("need 0 <= x < y < 1, got x={x}, y={y}")));
        }
        Ok(RationalArc { kind, x, y })
    }

    pub fn closed(x: Rational, y: Rational) -> Result<Self> {
        Self::new(ArcKind::Closed, x, y)
    }

    pub fn complement_of_open(x: Rational, y: Rational) -> Result<Self> {
        Self::new(ArcKind::ComplementOfOpen, x, y)
    }

    pub fn kind(&self) -> ArcKind {
        self.kind
    }

    pub fn endpoints(&self) -> (Rational, Rational) {
        (self.x, self.y)
    }

    /// The arc `S¹ ∖ (lo, hi)` read on the circle, where `lo`, `hi` may
    /// wrap past 0. Requires the open gap to be a proper arc.
    pub fn avoiding_gap(lo: Rational, hi: Rational) -> Result<Self> {
        let (lo, hi) = (frac(lo), frac(hi));
        if lo < hi {
            Self::complement_of_open(lo, hi)
        } else {
            Self::closed(hi, lo)
        }
    }

    pub fn contains(&self, p: Rational) -> bool {
        let p = frac(p);
        match self.kind {
            ArcKind::Closed => self.x <= p && p <= self.y,
            ArcKind::ComplementOfOpen => p <= self.x || self.y <= p,
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match self.kind {
            ArcKind::Closed => vec![Piece {
                lo: self.x,
                hi: self.y,
                hi_closed: true,
            }],
            ArcKind::ComplementOfOpen => vec![
                Piece {
                    lo: Rational::zero(),
                    hi: self.x,
                    hi_closed: true,
                },
                Piece {
                    lo: self.y,
                    hi: Rational::one(),
                    hi_closed: false,
                },
            ],
        }
    }

    /// `self ⊆ other` as subsets of the circle.
    pub fn subset_of(&self, other: &RationalArc) -> bool {
        let theirs = other.pieces();
        self.pieces().iter().all(|p| theirs.iter().any(|q| p.inside(q)))
    }

    /// `S¹ ∖ self` as an open arc.
    pub fn complement(&self) -> OpenArc {
        match self.kind {
            ArcKind::Closed => OpenArc {
                start: self.y,
                length: Rational::one() - (self.y - self.x),
            },
            ArcKind::ComplementOfOpen => OpenArc {
                start: self.x,
                length: self.y - self.x,
            },
        }
    }
}

/// Open arc `{ start + t : 0 < t < length }` read modulo 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpenArc {
    pub start: Rational,
    pub length: Rational,
}

impl OpenArc {
    pub fn contains(&self, p: Rational) -> bool {
        let t = frac(frac(p) - self.start);
        Rational::zero() < t && t < self.length
    }

    /// Counter-clockwise distance from `start` to `p`.
    fn offset(&self, p: Rational) -> Rational {
        frac(frac(p) - self.start)
    }
}

/// The example at resolution `q`.
#[derive(Debug, Clone)]
pub struct CircleExample {
    resolution: u64,
    arcs: Vec<RationalArc>,
}

impl CircleExample {
    pub fn new(resolution: u64) -> Result<Self> {
        if resolution < 4 {
            return Err(Error::ResolutionTooSmall(resolution));
        }
        let q = resolution as i64;
        let ends: Vec<Rational> = (0..q).map(|j| Rational::new(2 * j + 1, 2 * q)).collect();
        let mut arcs = Vec::with_capacity((q * (q - 1)) as usize);
        for (k, &x) in ends.iter().enumerate() {
            for &y in &ends[k + 1..] {
                arcs.push(RationalArc::closed(x, y)?);
                arcs.push(RationalArc::complement_of_open(x, y)?);
            }
        }
        arcs.sort();
        Ok(CircleExample { resolution, arcs })
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    /// Number of grid points, i.e. `|I|` at this resolution.
    pub fn index_count(&self) -> usize {
        self.resolution as usize
    }

    pub fn grid_point(&self, k: usize) -> Rational {
        Rational::new(k as i64, self.resolution as i64)
    }

    /// Grid index of an exact circle point, if it lies on the grid.
    pub fn grid_index(&self, p: Rational) -> Option<usize> {
        let scaled = frac(p) * Rational::from_integer(self.resolution as i64);
        scaled.is_integer().then(|| scaled.to_integer() as usize)
    }

    /// The finite arc family, sorted.
    pub fn arcs(&self) -> &[RationalArc] {
        &self.arcs
    }

    /// `U_A` as the grid points of the open complement `S¹ ∖ A`.
    pub fn base_set(&self, arc: &RationalArc) -> IndexSet {
        let gap = arc.complement();
        (0..self.index_count())
            .filter(|&k| gap.contains(self.grid_point(k)))
            .collect()
    }

    /// `U_A` from the definition `{ z : A ∈ K_z }`, with `A ∈ K_z` iff `z ∉ A`.
    pub fn base_set_by_membership(&self, arc: &RationalArc) -> IndexSet {
        (0..self.index_count()).filter(|&k| self.in_k_z(arc, k)).collect()
    }

    fn in_k_z(&self, arc: &RationalArc, k: usize) -> bool {
        !arc.contains(self.grid_point(k))
    }

    /// `K_z` for each grid point, as ascending positions in [`Self::arcs`].
    pub fn directed_family_view(&self) -> Vec<Vec<usize>> {
        (0..self.index_count())
            .map(|k| {
                (0..self.arcs.len())
                    .filter(|&a| self.in_k_z(&self.arcs[a], k))
                    .collect()
            })
            .collect()
    }

    /// The finite arc family ordered by inclusion. Quadratic in the family
    /// size, so only sensible for small resolutions.
    pub fn arc_poset(&self) -> Poset {
        let n = self.arcs.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && self.arcs[a].subset_of(&self.arcs[b]) {
                    pairs.push((a, b));
                }
            }
        }
        let names: Vec<String> = self.arcs.iter().map(|a| a.to_string()).collect();
        let named: Vec<(String, String)> = pairs
            .iter()
            .map(|&(a, b)| (names[a].clone(), names[b].clone()))
            .collect();
        Poset::new(&names, &named).expect("inclusion is a partial order")
    }

    /// Topology on the grid generated by the traces of the base arcs.
    pub fn topology_view(&self, limits: SearchLimits) -> Result<FiniteTopology> {
        let base: Vec<IndexSet> = self.arcs.iter().map(|a| self.base_set(a)).collect();
        FiniteTopology::generate(self.index_count(), &base, limits)
    }

    /// The intersection of all family base arcs containing grid point `k`,
    /// as an open arc around the point.
    pub fn minimal_neighbourhood(&self, k: usize) -> OpenArc {
        let z = self.grid_point(k);
        let mut left = Rational::one();
        let mut right = Rational::one();
        for gap in self.arcs.iter().map(|a| a.complement()).filter(|g| g.contains(z)) {
            let before = gap.offset(z);
            left = left.min(before);
            right = right.min(gap.length - before);
        }
        OpenArc {
            start: frac(z - left),
            length: left + right,
        }
    }

    /// Grid points that are isolated in the arc topology of the circle,
    /// decided exactly: `z` is isolated iff its minimal neighbourhood holds
    /// no other rational point. A non-degenerate open arc always does, and
    /// the witness `z + right/2` is tested explicitly.
    pub fn isolated_points(&self) -> IndexSet {
        (0..self.index_count())
            .filter(|&k| {
                let z = self.grid_point(k);
                let nbhd = self.minimal_neighbourhood(k);
                let right = nbhd.length - nbhd.offset(z);
                let witness = z + right / Rational::from_integer(2);
                !(witness != z && nbhd.contains(witness) && self.every_base_arc_holds(k, witness))
            })
            .collect()
    }

    fn every_base_arc_holds(&self, k: usize, w: Rational) -> bool {
        let z = self.grid_point(k);
        self.arcs
            .iter()
            .map(|a| a.complement())
            .filter(|g| g.contains(z))
            .all(|g| g.contains(w))
    }

    /// T1 separation of grid points by base arcs of the family.
    pub fn is_t1(&self) -> bool {
        let gaps: Vec<OpenArc> = self.arcs.iter().map(|a| a.complement()).collect();
        (0..self.index_count()).all(|i| {
            let zi = self.grid_point(i);
            (0..self.index_count()).filter(|&j| j != i).all(|j| {
                let zj = self.grid_point(j);
                gaps.iter().any(|g| g.contains(zi) && !g.contains(zj))
            })
        })
    }

    /// Nested chain at grid point `k`: `A_n = S¹ ∖ (z - r_n, z + r_n)` with
    /// `r_n = (depth - n + 1/2) / q`, so the grid trace of `U_{A_n}` has
    /// `2(depth - n) + 1` points and the last one is `{z}`.
    pub fn neighborhood_chain(&self, k: usize, depth: usize) -> Result<NeighborhoodChain<RationalArc>> {
        if k >= self.index_count() {
            return Err(Error::IndexOutOfRange(k));
        }
        if depth == 0 || 2 * depth as u64 > self.resolution {
            return Err(Error::ChainUnavailable { point: k, depth });
        }
        let z = self.grid_point(k);
        let q = self.resolution as i64;
        let mut anchors = Vec::with_capacity(depth);
        for n in 1..=depth {
            let r = Rational::new(2 * (depth - n) as i64 + 1, 2 * q);
            anchors.push(RationalArc::avoiding_gap(z - r, z + r)?);
        }
        let domains = anchors.iter().map(|a| self.base_set(a)).collect();
        Ok(NeighborhoodChain {
            point: k,
            anchors,
            domains,
        })
    }
}

/// Smallest common upper bound of two arcs inside `family`, if any.
pub fn common_upper_bound<'a>(family: &'a [RationalArc], a: &RationalArc, b: &RationalArc) -> Option<&'a RationalArc> {
    family.iter().find(|c| a.subset_of(c) && b.subset_of(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::maximal_directed_subsets;
    use proptest::prelude::*;

    fn r(m: i64, d: i64) -> Rational {
        Rational::new(m, d)
    }

    fn set(xs: &[usize]) -> IndexSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn base_set_examples() {
        let c = CircleExample::new(8).unwrap();
        let a = RationalArc::closed(r(1, 4), r(1, 2)).unwrap();
        // 5/8, 3/4, 7/8, 0, 1/8
        assert_eq!(c.base_set(&a), set(&[0, 1, 5, 6, 7]));
        assert_eq!(c.base_set_by_membership(&a), c.base_set(&a));
        let b = RationalArc::complement_of_open(r(1, 4), r(1, 2)).unwrap();
        assert_eq!(c.base_set(&b), set(&[3]));
        assert_eq!(c.base_set_by_membership(&b), set(&[3]));
    }

    #[test]
    fn arc_validation() {
        assert!(RationalArc::closed(r(1, 2), r(1, 4)).is_err());
        assert!(RationalArc::closed(r(0, 1), r(1, 1)).is_err());
        assert!(RationalArc::closed(r(-1, 4), r(1, 4)).is_err());
        assert!(CircleExample::new(3).is_err());
    }

    #[test]
    fn inclusion_order() {
        let small = RationalArc::closed(r(1, 4), r(1, 2)).unwrap();
        let big = RationalArc::complement_of_open(r(1, 8), r(1, 5)).unwrap();
        assert!(small.subset_of(&big));
        assert!(!big.subset_of(&small));
        let wrap = RationalArc::complement_of_open(r(1, 3), r(2, 3)).unwrap();
        let inner = RationalArc::closed(r(0, 1), r(1, 4)).unwrap();
        assert!(inner.subset_of(&wrap));
        let edge = RationalArc::closed(r(3, 4), r(7, 8)).unwrap();
        assert!(edge.subset_of(&wrap));
        assert!(!RationalArc::closed(r(1, 4), r(1, 2)).unwrap().subset_of(&wrap));
    }

    #[test]
    fn example_poset_is_not_directed() {
        // x1 < x2 < x3 < x4 on the family's endpoint grid.
        let c = CircleExample::new(8).unwrap();
        let a = RationalArc::closed(r(1, 16), r(13, 16)).unwrap();
        let b = RationalArc::complement_of_open(r(5, 16), r(9, 16)).unwrap();
        assert!(c.arcs().contains(&a) && c.arcs().contains(&b));
        assert!(common_upper_bound(c.arcs(), &a, &b).is_none());
    }

    #[test]
    fn view_matches_maximal_directed_subsets() {
        for q in [4u64, 5] {
            let c = CircleExample::new(q).unwrap();
            let p = c.arc_poset();
            let fam = maximal_directed_subsets(&p).unwrap();
            let mut view = c.directed_family_view();
            view.sort();
            assert_eq!(fam.members(), view.as_slice(), "q = {q}");
        }
    }

    #[test]
    fn no_isolated_points_and_t1() {
        for q in [4u64, 8, 64] {
            let c = CircleExample::new(q).unwrap();
            assert!(c.isolated_points().is_empty());
            assert!(c.is_t1());
        }
        let c = CircleExample::new(8).unwrap();
        let nb = c.minimal_neighbourhood(0);
        assert_eq!(nb.length, r(1, 8));
        assert!(nb.contains(r(1, 32)) && nb.contains(r(31, 32)));
    }

    #[test]
    fn grid_topology_view_is_discrete() {
        let c = CircleExample::new(6).unwrap();
        let t = c.topology_view(SearchLimits::default()).unwrap();
        assert!(t.is_t1());
        assert_eq!(t.isolated_points().len(), 6);
        assert!(CircleExample::new(64)
            .unwrap()
            .topology_view(SearchLimits::default())
            .is_err());
    }

    #[test]
    fn chain_at_zero() {
        let c = CircleExample::new(64).unwrap();
        let chain = c.neighborhood_chain(0, 3).unwrap();
        assert_eq!(chain.anchors[0], RationalArc::closed(r(5, 128), r(123, 128)).unwrap());
        let sizes: Vec<usize> = chain.domains.iter().map(|d| d.len()).collect();
        assert_eq!(sizes, vec![5, 3, 1]);
        assert_eq!(chain.domains[2], set(&[0]));
        assert!(chain.validate(|a, b| a.subset_of(b)).is_ok());
        assert!(chain.strictly_shrinking());
        for a in &chain.anchors {
            assert!(c.arcs().contains(a));
        }
    }

    #[test]
    fn chain_at_one_third() {
        let c = CircleExample::new(6).unwrap();
        let k = c.grid_index(r(1, 3)).unwrap();
        let chain = c.neighborhood_chain(k, 1).unwrap();
        assert!(!chain.anchors[0].contains(r(1, 3)));
        assert!(chain.domains[0].contains(&k));
        assert!(c.neighborhood_chain(k, 4).is_err());
    }

    fn arb_arc() -> impl Strategy<Value = RationalArc> {
        (1i64..400, any::<bool>(), 0i64..10_000, 0i64..10_000).prop_filter_map(
            "distinct endpoints",
            |(d, closed, u, v)| {
                let (a, b) = (r(u % d, d), r(v % d, d));
                let (x, y) = if a < b { (a, b) } else { (b, a) };
                let kind = if closed {
                    ArcKind::Closed
                } else {
                    ArcKind::ComplementOfOpen
                };
                RationalArc::new(kind, x, y).ok()
            },
        )
    }

    proptest! {
        #[test]
        fn two_routes_to_base_sets_agree(a in arb_arc(), q in 4u64..80) {
            let c = CircleExample::new(q).unwrap();
            prop_assert_eq!(c.base_set(&a), c.base_set_by_membership(&a));
        }

        #[test]
        fn chains_are_sound(q in 4u64..70, k in 0usize..70, depth in 1usize..8) {
            let c = CircleExample::new(q).unwrap();
            prop_assume!(k < q as usize && 2 * depth as u64 <= q);
            let chain = c.neighborhood_chain(k, depth).unwrap();
            prop_assert!(chain.validate(|a, b| a.subset_of(b)).is_ok());
            prop_assert!(chain.strictly_shrinking());
            let mut running: IndexSet = chain.domains[0].clone();
            for d in &chain.domains {
                running = running.intersection(d).copied().collect();
                prop_assert!(running.contains(&k));
            }
        }
    }
}
