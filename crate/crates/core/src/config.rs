//! Lists of nonzero DP configurations.
//!
//! A [`ConfigList`] holds, for one decomposition node, every partial mapping
//! (a tuple of target vertices in bag order) that has at least one color set,
//! together with those color sets. Entries are sorted by mapping and color
//! sets within an entry are strictly ascending. Storage is flat: one array of
//! mapping tuples, one of color sets, and entry boundaries into the latter.

use std::cmp::Ordering;
use std::convert::Infallible;

use crate::coloring::ColorSet;
use crate::graph::Vertex;

/// Owned form of one entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfigEntry {
    pub mapping: Vec<Vertex>,
    pub colorsets: Vec<ColorSet>,
}

impl ConfigEntry {
    pub fn new(mapping: Vec<Vertex>, colorsets: Vec<ColorSet>) -> Self {
        ConfigEntry { mapping, colorsets }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryRef<'a> {
    pub mapping: &'a [Vertex],
    pub colorsets: &'a [ColorSet],
}

impl EntryRef<'_> {
    pub fn contains(&self, set: ColorSet) -> bool {
        self.colorsets.binary_search(&set).is_ok()
    }

    pub fn to_owned(&self) -> ConfigEntry {
        ConfigEntry::new(self.mapping.to_vec(), self.colorsets.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigList {
    bag_size: usize,
    mappings: Vec<Vertex>,
    bounds: Vec<u32>,
    colorsets: Vec<ColorSet>,
}

impl ConfigList {
    pub fn new(bag_size: usize) -> Self {
        ConfigList {
            bag_size,
            mappings: Vec::new(),
            bounds: vec![0],
            colorsets: Vec::new(),
        }
    }

    /// Builds a list from owned entries, sorting and merging as needed.
    pub fn from_entries(bag_size: usize, entries: impl IntoIterator<Item = ConfigEntry>) -> Self {
        let mut list = ConfigList::new(bag_size);
        for e in entries {
            assert_eq!(e.mapping.len(), bag_size, "mapping length must equal bag size");
            list.push_unchecked(&e.mapping, e.colorsets.iter().copied());
        }
        list.normalize()
    }

    pub fn bag_size(&self) -> usize {
        self.bag_size
    }

    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Total number of (mapping, color set) pairs.
    pub fn pair_count(&self) -> usize {
        self.colorsets.len()
    }

    /// Heap footprint in bytes (allocated capacity).
    pub fn heap_bytes(&self) -> usize {
        4 * (self.mappings.capacity() + self.bounds.capacity() + self.colorsets.capacity())
    }

    /// Releases spare capacity.
    pub fn shrink_to_fit(&mut self) {
        self.mappings.shrink_to_fit();
        self.bounds.shrink_to_fit();
        self.colorsets.shrink_to_fit();
    }

    #[inline]
    pub fn mapping(&self, i: usize) -> &[Vertex] {
        &self.mappings[i * self.bag_size..(i + 1) * self.bag_size]
    }

    #[inline]
    pub fn colorsets(&self, i: usize) -> &[ColorSet] {
        &self.colorsets[self.bounds[i] as usize..self.bounds[i + 1] as usize]
    }

    #[inline]
    pub fn entry(&self, i: usize) -> EntryRef<'_> {
        EntryRef {
            mapping: self.mapping(i),
            colorsets: self.colorsets(i),
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = EntryRef<'_>> + '_ {
        (0..self.len()).map(move |i| self.entry(i))
    }

    pub fn to_entries(&self) -> Vec<ConfigEntry> {
        self.iter().map(|e| e.to_owned()).collect()
    }

    /// Appends an entry. The caller keeps the list sorted and the color sets
    /// strictly ascending, or calls [`ConfigList::normalize`] afterwards.
    pub fn push_unchecked(&mut self, mapping: &[Vertex], colorsets: impl IntoIterator<Item = ColorSet>) {
        debug_assert_eq!(mapping.len(), self.bag_size);
        self.mappings.extend_from_slice(mapping);
        self.colorsets.extend(colorsets);
        self.bounds.push(self.colorsets.len() as u32);
    }

    /// Position of the entry for `mapping`, if any.
    pub fn find(&self, mapping: &[Vertex]) -> Option<usize> {
        let (mut lo, mut hi) = (0, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.mapping(mid).cmp(mapping) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn contains(&self, mapping: &[Vertex], set: ColorSet) -> bool {
        self.find(mapping).is_some_and(|i| self.entry(i).contains(set))
    }

    fn is_normalized(&self) -> bool {
        (1..self.len()).all(|i| self.mapping(i - 1) < self.mapping(i))
            && (0..self.len()).all(|i| self.colorsets(i).windows(2).all(|w| w[0] < w[1]))
    }

    /// Sorts entries by mapping, merges entries with equal mappings and
    /// sorts and de-duplicates every color set list. Entries left without
    /// color sets are dropped.
    pub fn normalize(self) -> Self {
        match self.normalize_checked(|| Ok::<(), Infallible>(())) {
            Ok(list) => list,
            Err(never) => match never {},
        }
    }

    /// [`ConfigList::normalize`] that calls `check` before and after sorting
    /// and every few thousand merged entries, giving up on its first error.
    pub fn normalize_checked<E>(self, mut check: impl FnMut() -> Result<(), E>) -> Result<Self, E> {
        if self.is_normalized() && (0..self.len()).all(|i| !self.colorsets(i).is_empty()) {
            return Ok(self);
        }
        check()?;
        let mut order: Vec<u32> = (0..self.len() as u32).collect();
        order.sort_by(|&a, &b| self.mapping(a as usize).cmp(self.mapping(b as usize)));
        check()?;
        let mut out = ConfigList::new(self.bag_size);
        let mut scratch = Vec::new();
        let mut i = 0;
        let mut next_check = 4096;
        while i < order.len() {
            if i >= next_check {
                check()?;
                next_check = i + 4096;
            }
            let head = order[i] as usize;
            scratch.clear();
            let mut j = i;
            while j < order.len() && self.mapping(order[j] as usize) == self.mapping(head) {
                scratch.extend_from_slice(self.colorsets(order[j] as usize));
                j += 1;
            }
            scratch.sort_unstable();
            scratch.dedup();
            if !scratch.is_empty() {
                out.push_unchecked(self.mapping(head), scratch.iter().copied());
            }
            i = j;
        }
        out.shrink_to_fit();
        Ok(out)
    }

    /// Checks sortedness and strict color set order.
    pub fn check_sorted(&self) -> bool {
        self.is_normalized() && (0..self.len()).all(|i| !self.colorsets(i).is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(v: &[u32]) -> Vec<ColorSet> {
        v.iter().map(|&x| ColorSet(x)).collect()
    }

    #[test]
    fn normalize_sorts_and_merges() {
        let list = ConfigList::from_entries(
            1,
            [
                ConfigEntry::new(vec![7], cs(&[0b011, 0b101])),
                ConfigEntry::new(vec![2], cs(&[0b1])),
                ConfigEntry::new(vec![7], cs(&[0b101, 0b110])),
            ],
        );
        assert!(list.check_sorted());
        assert_eq!(
            list.to_entries(),
            vec![
                ConfigEntry::new(vec![2], cs(&[0b1])),
                ConfigEntry::new(vec![7], cs(&[0b011, 0b101, 0b110])),
            ]
        );
        assert_eq!(list.find(&[7]), Some(1));
        assert_eq!(list.find(&[3]), None);
        assert!(list.contains(&[7], ColorSet(0b110)));
        assert!(!list.contains(&[7], ColorSet(0b111)));
        assert_eq!(list.pair_count(), 4);
    }

    #[test]
    fn empty_bag_lists_hold_one_entry() {
        let list = ConfigList::from_entries(
            0,
            [
                ConfigEntry::new(vec![], cs(&[3])),
                ConfigEntry::new(vec![], cs(&[1, 3])),
            ],
        );
        assert_eq!(list.len(), 1);
        assert_eq!(list.colorsets(0), &cs(&[1, 3])[..]);
    }
}
