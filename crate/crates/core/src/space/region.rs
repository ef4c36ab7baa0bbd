//! Atom subsets stored either as a contiguous span or as a bitset.

use fixedbitset::FixedBitSet;

/// A general subset of atoms.
pub type AtomSet = FixedBitSet;

/// Member set of a ball or a star. Dyadic and interval bases only ever
/// produce spans, which keeps large bases cheap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// Atoms `lo..=hi`.
    Span { lo: usize, hi: usize },
    Bits(FixedBitSet),
}

pub enum RegionIter<'a> {
    Span(std::ops::RangeInclusive<usize>),
    Bits(fixedbitset::Ones<'a>),
}

impl Iterator for RegionIter<'_> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        match self {
            RegionIter::Span(r) => r.next(),
            RegionIter::Bits(o) => o.next(),
        }
    }
}

impl Region {
    pub fn span(lo: usize, hi: usize) -> Region {
        debug_assert!(lo <= hi);
        Region::Span { lo, hi }
    }

    /// Builds a region from a bitset, compressing contiguous sets to spans.
    /// Returns `None` for the empty set.
    pub fn from_bits(bits: FixedBitSet) -> Option<Region> {
        let mut ones = bits.ones();
        let lo = ones.next()?;
        let mut hi = lo;
        let mut contiguous = true;
        for x in ones {
            if x != hi + 1 {
                contiguous = false;
                break;
            }
            hi = x;
        }
        if contiguous {
            Some(Region::Span { lo, hi })
        } else {
            Some(Region::Bits(bits))
        }
    }

    pub fn from_atoms(n: usize, atoms: &[usize]) -> Option<Region> {
        let mut bits = FixedBitSet::with_capacity(n);
        for &a in atoms {
            bits.insert(a);
        }
        Region::from_bits(bits)
    }

    pub fn contains(&self, x: usize) -> bool {
        match self {
            Region::Span { lo, hi } => *lo <= x && x <= *hi,
            Region::Bits(b) => b.contains(x),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Region::Span { lo, hi } => hi - lo + 1,
            Region::Bits(b) => b.count_ones(..),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn first(&self) -> usize {
        match self {
            Region::Span { lo, .. } => *lo,
            Region::Bits(b) => b.ones().next().expect("regions are non-empty"),
        }
    }

    pub fn as_span(&self) -> Option<(usize, usize)> {
        match self {
            Region::Span { lo, hi } => Some((*lo, *hi)),
            Region::Bits(_) => None,
        }
    }

    pub fn iter(&self) -> RegionIter<'_> {
        match self {
            Region::Span { lo, hi } => RegionIter::Span(*lo..=*hi),
            Region::Bits(b) => RegionIter::Bits(b.ones()),
        }
    }

    pub fn to_bits(&self, n: usize) -> FixedBitSet {
        match self {
            Region::Span { lo, hi } => {
                let mut b = FixedBitSet::with_capacity(n);
                b.insert_range(*lo..*hi + 1);
                b
            }
            Region::Bits(b) => {
                let mut c = b.clone();
                c.grow(n);
                c
            }
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Span { lo, hi }, Region::Span { lo: l2, hi: h2 }) => l2 <= lo && hi <= h2,
            (Region::Span { lo, hi }, Region::Bits(b)) => (*lo..=*hi).all(|x| b.contains(x)),
            (Region::Bits(a), Region::Span { lo, hi }) => a.ones().all(|x| *lo <= x && x <= *hi),
            (Region::Bits(a), Region::Bits(b)) => a.is_subset(b),
        }
    }

    pub fn intersects(&self, other: &Region) -> bool {
        match (self, other) {
            (Region::Span { lo, hi }, Region::Span { lo: l2, hi: h2 }) => lo <= h2 && l2 <= hi,
            (Region::Span { lo, hi }, Region::Bits(b)) | (Region::Bits(b), Region::Span { lo, hi }) => {
                span_meets_bits(*lo, *hi, b)
            }
            (Region::Bits(a), Region::Bits(b)) => !a.is_disjoint(b),
        }
    }

    pub fn is_subset_of_bits(&self, b: &FixedBitSet) -> bool {
        match self {
            Region::Span { lo, hi } => (*lo..=*hi).all(|x| b.contains(x)),
            Region::Bits(a) => a.is_subset(b),
        }
    }

    pub fn intersects_bits(&self, b: &FixedBitSet) -> bool {
        match self {
            Region::Span { lo, hi } => span_meets_bits(*lo, *hi, b),
            Region::Bits(a) => !a.is_disjoint(b),
        }
    }

    /// True when the region contains every atom of `b`.
    pub fn contains_bits(&self, b: &FixedBitSet) -> bool {
        match self {
            Region::Span { lo, hi } => b.ones().all(|x| *lo <= x && x <= *hi),
            Region::Bits(a) => b.is_subset(a),
        }
    }

    pub fn union_into(&self, target: &mut FixedBitSet) {
        match self {
            Region::Span { lo, hi } => target.insert_range(*lo..*hi + 1),
            Region::Bits(b) => target.union_with(b),
        }
    }
}

fn span_meets_bits(lo: usize, hi: usize, b: &FixedBitSet) -> bool {
    if lo >= b.len() {
        return false;
    }
    let hi = hi.min(b.len() - 1);
    b.count_ones(lo..hi + 1) > 0
}

/// Collects the atoms of a set into a sorted vector.
pub fn atoms_of(set: &AtomSet) -> Vec<usize> {
    set.ones().collect()
}

/// Builds an atom set of capacity `n` from a list of atoms.
pub fn set_of(n: usize, atoms: impl IntoIterator<Item = usize>) -> AtomSet {
    let mut b = FixedBitSet::with_capacity(n);
    for a in atoms {
        b.insert(a);
    }
    b
}
