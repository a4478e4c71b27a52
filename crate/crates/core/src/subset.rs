//! Bitmask subsets of `[n] = {1..n}` with `n <= 64`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_N: u32 = 64;

/// A subset of `[n]`; element `i` occupies bit `i - 1`.
///
/// Ordering is lexicographic on the ascending element sequence, so
/// `{1,2,3} < {1,2,4} < {1,3} < {2}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u64);

macro_rules! lex_cmp {
    ($name:ident, $t:ty) => {
        /// Lexicographic comparison of the ascending bit-index sequences.
        pub fn $name(a: $t, b: $t) -> Ordering {
            let d = a ^ b;
            if d == 0 {
                return Ordering::Equal;
            }
            let x = d.trailing_zeros();
            let above = |s: $t| x + 1 < <$t>::BITS && (s >> (x + 1)) != 0;
            if a >> x & 1 == 1 {
                if above(b) {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            } else if above(a) {
                Ordering::Greater
            } else {
                Ordering::Less
            }
        }
    };
}

lex_cmp!(lex_cmp_u64, u64);
lex_cmp!(lex_cmp_u128, u128);

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        lex_cmp_u64(self.0, other.0)
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub const fn from_bits(bits: u64) -> Self {
        Subset(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// `[n]` itself.
    pub fn full(n: u32) -> Self {
        assert!(n <= MAX_N);
        if n == 64 {
            Subset(u64::MAX)
        } else {
            Subset((1u64 << n) - 1)
        }
    }

    pub fn singleton(x: u32) -> Self {
        assert!((1..=MAX_N).contains(&x), "element {x} out of range");
        Subset(1u64 << (x - 1))
    }

    /// Builds a set from elements; panics on elements outside `1..=64`.
    pub fn of(elems: &[u32]) -> Self {
        elems.iter().fold(Subset::EMPTY, |s, &x| s.with(x))
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, x: u32) -> bool {
        (1..=MAX_N).contains(&x) && self.0 >> (x - 1) & 1 == 1
    }

    pub fn with(self, x: u32) -> Self {
        self | Subset::singleton(x)
    }

    pub fn without(self, x: u32) -> Self {
        Subset(self.0 & !Subset::singleton(x).0)
    }

    pub fn union(self, o: Self) -> Self {
        Subset(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        Subset(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        Subset(self.0 & !o.0)
    }

    pub fn is_subset_of(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: Self) -> bool {
        self.0 & o.0 == 0
    }

    /// Largest element, or 0 for the empty set.
    pub fn max_elem(self) -> u32 {
        64 - self.0.leading_zeros()
    }

    pub fn iter(self) -> Elems {
        Elems(self.0)
    }

    pub fn to_vec(self) -> Vec<u32> {
        self.iter().collect()
    }

    /// Renumbers the elements of `self ∩ keep` by their rank inside `keep`.
    pub fn compress(self, keep: Subset) -> Subset {
        let mut out = 0u64;
        for (rank, x) in keep.iter().enumerate() {
            if self.contains(x) {
                out |= 1 << rank;
            }
        }
        Subset(out)
    }

    /// Inverse of [`Subset::compress`]: rank `i + 1` maps to the `i`-th element of `keep`.
    pub fn expand(self, keep: Subset) -> Subset {
        let mut out = Subset::EMPTY;
        for (rank, x) in keep.iter().enumerate() {
            if self.0 >> rank & 1 == 1 {
                out = out.with(x);
            }
        }
        out
    }
}

impl std::ops::BitOr for Subset {
    type Output = Subset;
    fn bitor(self, o: Subset) -> Subset {
        self.union(o)
    }
}

impl std::ops::BitAnd for Subset {
    type Output = Subset;
    fn bitand(self, o: Subset) -> Subset {
        self.intersection(o)
    }
}

impl std::ops::Sub for Subset {
    type Output = Subset;
    fn sub(self, o: Subset) -> Subset {
        self.difference(o)
    }
}

/// Ascending iterator over the elements of a [`Subset`].
pub struct Elems(u64);

impl Iterator for Elems {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let x = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(x + 1)
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_vec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let elems = Vec::<u32>::deserialize(d)?;
        let mut s = Subset::EMPTY;
        for x in elems {
            if !(1..=MAX_N).contains(&x) {
                return Err(serde::de::Error::custom(format!("element {x} out of range")));
            }
            if s.contains(x) {
                return Err(serde::de::Error::custom(format!("repeated element {x}")));
            }
            s = s.with(x);
        }
        Ok(s)
    }
}

/// All `k`-subsets of `universe`, in lexicographic order.
pub struct Combinations {
    elems: Vec<u32>,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(universe: Subset, k: u32) -> Self {
        let elems = universe.to_vec();
        let k = k as usize;
        Combinations {
            done: k > elems.len(),
            idx: (0..k).collect(),
            elems,
        }
    }
}

impl Iterator for Combinations {
    type Item = Subset;
    fn next(&mut self) -> Option<Subset> {
        if self.done {
            return None;
        }
        let out = self
            .idx
            .iter()
            .fold(Subset::EMPTY, |s, &i| s.with(self.elems[i]));
        let k = self.idx.len();
        let n = self.elems.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Shorthand for `Combinations::new(universe, k)`.
pub fn k_subsets(universe: Subset, k: u32) -> Combinations {
    Combinations::new(universe, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lex_order_matches_vec_order() {
        let sets = [
            Subset::of(&[1, 2, 3]),
            Subset::of(&[1, 2]),
            Subset::of(&[2]),
            Subset::of(&[1, 3]),
            Subset::EMPTY,
            Subset::of(&[1, 2, 4]),
            Subset::of(&[64]),
            Subset::of(&[1, 64]),
        ];
        for a in sets {
            for b in sets {
                assert_eq!(a.cmp(&b), a.to_vec().cmp(&b.to_vec()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = k_subsets(Subset::full(5), 3).collect();
        assert_eq!(all.len(), 10);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(k_subsets(Subset::full(3), 0).count(), 1);
        assert_eq!(k_subsets(Subset::full(3), 4).count(), 0);
    }

    #[test]
    fn compress_round_trips() {
        let keep = Subset::of(&[2, 4, 5, 7]);
        let s = Subset::of(&[4, 7]);
        assert_eq!(s.compress(keep), Subset::of(&[2, 4]));
        assert_eq!(s.compress(keep).expand(keep), s);
    }
}
