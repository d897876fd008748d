//! Deduplicated pattern occurrences.

use indexmap::IndexMap;

use crate::graph::Vertex;

/// How two occurrences are told apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Every injective edge-preserving map counts, automorphic images included.
    #[default]
    AllMappings,
    /// Occurrences with the same image vertex set count once.
    DistinctVertexSets,
}

/// Occurrences in first-found order, keyed according to a [`Mode`].
///
/// Each occurrence is a tuple of target vertices indexed by pattern vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OccurrenceSet {
    mode: Mode,
    found: IndexMap<Box<[Vertex]>, Box<[Vertex]>>,
}

impl OccurrenceSet {
    pub fn new(mode: Mode) -> Self {
        OccurrenceSet {
            mode,
            found: IndexMap::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn key(&self, mapping: &[Vertex]) -> Box<[Vertex]> {
        match self.mode {
            Mode::AllMappings => mapping.into(),
            Mode::DistinctVertexSets => {
                let mut k = mapping.to_vec();
                k.sort_unstable();
                k.into()
            }
        }
    }

    /// Inserts an occurrence; false if an equivalent one is already present.
    pub fn insert(&mut self, mapping: &[Vertex]) -> bool {
        let key = self.key(mapping);
        if self.found.contains_key(&key) {
            return false;
        }
        self.found.insert(key, mapping.into());
        true
    }

    pub fn contains(&self, mapping: &[Vertex]) -> bool {
        self.found.contains_key(&self.key(mapping))
    }

    pub fn len(&self) -> usize {
        self.found.len()
    }

    pub fn is_empty(&self) -> bool {
        self.found.is_empty()
    }

    /// Occurrences in the order they were first found.
    pub fn iter(&self) -> impl Iterator<Item = &[Vertex]> + '_ {
        self.found.values().map(|m| &m[..])
    }

    /// Keys sorted, for order-insensitive comparison.
    pub fn sorted_keys(&self) -> Vec<Vec<Vertex>> {
        let mut keys: Vec<Vec<Vertex>> = self.found.keys().map(|k| k.to_vec()).collect();
        keys.sort_unstable();
        keys
    }

    /// Re-keys the occurrences under another mode.
    pub fn with_mode(&self, mode: Mode) -> OccurrenceSet {
        let mut out = OccurrenceSet::new(mode);
        for m in self.iter() {
            out.insert(m);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_key_differently() {
        let mut all = OccurrenceSet::new(Mode::AllMappings);
        let mut sets = OccurrenceSet::new(Mode::DistinctVertexSets);
        for m in [[0, 1, 2], [2, 1, 0], [0, 1, 2], [1, 2, 3]] {
            all.insert(&m);
            sets.insert(&m);
        }
        assert_eq!(all.len(), 3);
        assert_eq!(sets.len(), 2);
        assert_eq!(sets.iter().next(), Some(&[0, 1, 2][..]));
        assert!(sets.contains(&[2, 0, 1]));
        assert!(!all.contains(&[2, 0, 1]));
        assert_eq!(all.with_mode(Mode::DistinctVertexSets), sets);
    }
}
