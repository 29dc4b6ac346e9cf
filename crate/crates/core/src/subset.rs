//! Covariate subsets `S ⊆ {1, …, d}`.
//!
//! Internally a bitmask over zero-based axis indices. The textual and serialized
//! forms use one-based indices so that `{1}` lines up with the variable `x1`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_DIMS: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn from_axes(axes: &[usize]) -> Result<Subset> {
        let mut bits = 0u32;
        for &a in axes {
            if a >= MAX_DIMS {
                return Err(Error::InvalidArgument(format!("axis {a} exceeds {MAX_DIMS}")));
            }
            if bits & (1 << a) != 0 {
                return Err(Error::InvalidArgument(format!("axis {} repeated in subset", a + 1)));
            }
            bits |= 1 << a;
        }
        Ok(Subset(bits))
    }

    /// Builds a subset from one-based indices, as written in configs.
    pub fn from_one_based(indices: &[usize]) -> Result<Subset> {
        if indices.contains(&0) {
            return Err(Error::InvalidArgument("subset indices are one-based".into()));
        }
        let axes: Vec<usize> = indices.iter().map(|i| i - 1).collect();
        Subset::from_axes(&axes)
    }

    pub fn single(axis: usize) -> Subset {
        Subset(1 << axis)
    }

    pub fn full(dims: usize) -> Subset {
        if dims >= 32 {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << dims) - 1)
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, axis: usize) -> bool {
        axis < MAX_DIMS && self.0 & (1 << axis) != 0
    }

    pub fn without(self, axis: usize) -> Subset {
        Subset(self.0 & !(1 << axis))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset_of(self, other: Subset) -> bool {
        self.is_subset_of(other) && self != other
    }

    /// Zero-based axes in ascending order.
    pub fn axes(self) -> Vec<usize> {
        (0..MAX_DIMS).filter(|&a| self.contains(a)).collect()
    }

    pub fn max_axis(self) -> Option<usize> {
        self.axes().last().copied()
    }

    /// Every subset of `{0..dims}` with at most `max_order` elements, ordered by
    /// cardinality then lexicographically.
    pub fn all_up_to(dims: usize, max_order: usize) -> Vec<Subset> {
        let mut out: Vec<Subset> = (0..(1u64 << dims))
            .map(|b| Subset(b as u32))
            .filter(|s| s.len() <= max_order)
            .collect();
        out.sort();
        out
    }

    /// Proper subsets of `self`, in the default order.
    pub fn proper_subsets(self) -> Vec<Subset> {
        let mut out = Vec::new();
        let mut sub = self.0;
        loop {
            sub = sub.wrapping_sub(1) & self.0;
            out.push(Subset(sub));
            if sub == 0 {
                break;
            }
        }
        out.retain(|s| *s != self);
        out.sort();
        out
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.axes().cmp(&other.axes()))
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, a) in self.axes().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", a + 1)?;
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
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let one_based: Vec<usize> = self.axes().iter().map(|a| a + 1).collect();
        one_based.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let one_based = Vec::<usize>::deserialize(deserializer)?;
        Subset::from_one_based(&one_based).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_order_is_cardinality_then_lexicographic() {
        let all = Subset::all_up_to(3, 3);
        let shown: Vec<String> = all.iter().map(|s| s.to_string()).collect();
        assert_eq!(
            shown,
            ["{}", "{1}", "{2}", "{3}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"]
        );
    }

    #[test]
    fn proper_subsets_exclude_self() {
        let s = Subset::from_axes(&[0, 2]).unwrap();
        let subs: Vec<String> = s.proper_subsets().iter().map(|s| s.to_string()).collect();
        assert_eq!(subs, ["{}", "{1}", "{3}"]);
        assert!(Subset::EMPTY.proper_subsets().is_empty());
    }

    #[test]
    fn one_based_parsing_rejects_zero_and_repeats() {
        assert!(Subset::from_one_based(&[0]).is_err());
        assert!(Subset::from_one_based(&[1, 1]).is_err());
        assert_eq!(Subset::from_one_based(&[2]).unwrap(), Subset::single(1));
    }
}
