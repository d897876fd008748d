//! The color coding dynamic program over a nice tree decomposition.
//!
//! Only nonzero configurations are ever materialized: each node turns the
//! list(s) of its child(ren) into its own [`ConfigList`]. A configuration
//! `(x, φ, C)` is present exactly when some injective, edge-preserving map of
//! the pattern vertices below `x` agrees with `φ` on the bag of `x` and uses
//! every color of `C` exactly once.
//!
//! Every list is archived in compressed form so that occurrences can be
//! reconstructed afterwards.

use std::sync::atomic::{AtomicU32, Ordering};
use std::time::Instant;

use thiserror::Error;

use crate::coloring::{ColorSet, Coloring};
use crate::compress::{compress, decompress, CompressedList, DecodeError};
use crate::config::ConfigList;
use crate::graph::{BallSearch, DistanceMatrix, Graph, MappingMask, Vertex};
use crate::treedecomp::{NiceNode, NiceTreeDecomposition, NodeKind};

/// Default cap on live and archived list bytes (24 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 24 << 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpError {
    #[error("memory budget of {budget} bytes exceeded at node {node} ({entries} entries, {bytes} bytes in use)")]
    MemoryBudget {
        node: usize,
        entries: usize,
        bytes: u64,
        budget: u64,
    },
    #[error("deadline reached at node {node}")]
    Timeout { node: usize },
}

/// Resource limits for one iteration.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub memory_budget: u64,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            deadline: None,
        }
    }
}

/// Tracks memory use and the deadline while an iteration runs.
#[derive(Debug)]
pub struct Guard {
    limits: Limits,
    node: usize,
    archived: u64,
    live: u64,
    peak: u64,
    ticks: u32,
}

impl Guard {
    pub fn new(limits: Limits) -> Self {
        Guard {
            limits,
            node: 0,
            archived: 0,
            live: 0,
            peak: 0,
            ticks: 0,
        }
    }

    pub fn unlimited() -> Self {
        Guard::new(Limits::default())
    }

    pub fn peak_bytes(&self) -> u64 {
        self.peak
    }

    /// Cheap periodic check, called once per produced entry.
    #[inline]
    fn tick(&mut self, building: &ConfigList) -> Result<(), DpError> {
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks & 0x3ff == 0 {
            self.check(building)?;
        }
        Ok(())
    }

    /// A list under construction is charged twice: once for itself and once
    /// for its next reallocation or the sorted copy made by `normalize`.
    fn check(&mut self, building: &ConfigList) -> Result<(), DpError> {
        self.check_bytes(2 * building.heap_bytes() as u64, building.len())
    }

    fn check_bytes(&mut self, building: u64, entries: usize) -> Result<(), DpError> {
        let bytes = self.archived + self.live + building;
        self.peak = self.peak.max(bytes);
        if bytes > self.limits.memory_budget {
            return Err(DpError::MemoryBudget {
                node: self.node,
                entries,
                bytes,
                budget: self.limits.memory_budget,
            });
        }
        if self.limits.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(DpError::Timeout { node: self.node });
        }
        Ok(())
    }

    fn normalize(&mut self, list: ConfigList) -> Result<ConfigList, DpError> {
        let (bytes, entries) = (2 * list.heap_bytes() as u64, list.len());
        list.normalize_checked(|| self.check_bytes(bytes, entries))
    }
}

/// Inputs shared by every node of one iteration.
#[derive(Debug, Clone, Copy)]
pub struct DpContext<'a> {
    pub target: &'a Graph,
    pub pattern: &'a Graph,
    pub mask: &'a MappingMask,
    pub distances: &'a DistanceMatrix,
    pub coloring: &'a Coloring,
}

/// One entry per target vertex `x` allowed to host the bag vertex, with the
/// single color set `{ζ(x)}`.
pub fn process_leaf(node: &NiceNode, target: &Graph, mask: &MappingMask, coloring: &Coloring) -> ConfigList {
    debug_assert_eq!(node.kind, NodeKind::Leaf);
    let u = node.bag[0];
    let mut out = ConfigList::new(1);
    for x in 0..target.vertex_count() {
        if mask.allows(x, u) {
            let x = x as Vertex;
            out.push_unchecked(&[x], [ColorSet::singleton(coloring.color(x))]);
        }
    }
    out
}

/// Where candidates for the introduced vertex come from.
enum CandidateSource {
    /// Common neighbors of the images of these child-bag positions.
    Adjacent(Vec<usize>),
    /// Vertices within `radius` of the image of this child-bag position.
    Ball { position: usize, radius: usize },
    All,
}

fn candidate_source(child_bag: &[usize], u: usize, ctx: &DpContext<'_>) -> CandidateSource {
    let adjacent: Vec<usize> = child_bag
        .iter()
        .enumerate()
        .filter(|&(_, &w)| ctx.pattern.has_edge(u, w))
        .map(|(i, _)| i)
        .collect();
    if !adjacent.is_empty() {
        return CandidateSource::Adjacent(adjacent);
    }
    child_bag
        .iter()
        .enumerate()
        .filter_map(|(i, &w)| ctx.distances.get(w, u).map(|d| (d, i)))
        .min()
        .map_or(CandidateSource::All, |(radius, position)| CandidateSource::Ball { position, radius })
}

/// Sorted intersection of the neighbor lists of `centers`.
fn common_neighbors(target: &Graph, centers: impl Iterator<Item = Vertex>, out: &mut Vec<Vertex>, tmp: &mut Vec<Vertex>) {
    let mut centers = centers.peekable();
    out.clear();
    let Some(first) = centers.next() else { return };
    out.extend_from_slice(target.neighbors(first as usize));
    for c in centers {
        let other = target.neighbors(c as usize);
        tmp.clear();
        let (mut i, mut j) = (0, 0);
        while i < out.len() && j < other.len() {
            match out[i].cmp(&other[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    tmp.push(out[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        std::mem::swap(out, tmp);
        if out.is_empty() {
            return;
        }
    }
}

/// Extends every child mapping by each admissible image `x` of the
/// introduced vertex `u`, keeping the color sets that do not already contain
/// `ζ(x)`. Candidates are the common neighbors of the images of `u`'s bag
/// neighbors, or else the ball around the image of the closest bag vertex in
/// the same pattern component, or else every target vertex.
pub fn process_introduce(
    node: &NiceNode,
    child_node: &NiceNode,
    child: &ConfigList,
    ctx: &DpContext<'_>,
    guard: &mut Guard,
) -> Result<ConfigList, DpError> {
    let NodeKind::Introduce(u) = node.kind else {
        panic!("process_introduce on {:?}", node.kind)
    };
    let pos = node.introduced_position().expect("introduced vertex in bag");
    let source = candidate_source(&child_node.bag, u, ctx);
    let n = ctx.target.vertex_count();
    let all: Vec<Vertex> = match source {
        CandidateSource::All => (0..n as Vertex).collect(),
        _ => Vec::new(),
    };

    let mut out = ConfigList::new(node.bag.len());
    let mut ball = BallSearch::new(if matches!(source, CandidateSource::Ball { .. }) { n } else { 0 });
    let mut candidates = Vec::new();
    let mut tmp = Vec::new();
    let mut mapping = vec![0 as Vertex; node.bag.len()];
    let mut sets = Vec::new();

    for entry in child.iter() {
        let every = entry.colorsets.iter().fold(u32::MAX, |m, s| m & s.0);
        let cands: &[Vertex] = match &source {
            CandidateSource::Adjacent(positions) => {
                common_neighbors(ctx.target, positions.iter().map(|&p| entry.mapping[p]), &mut candidates, &mut tmp);
                &candidates
            }
            CandidateSource::Ball { position, radius } => {
                ball.within(ctx.target, entry.mapping[*position], *radius, &mut candidates);
                &candidates
            }
            CandidateSource::All => &all,
        };
        mapping[..pos].copy_from_slice(&entry.mapping[..pos]);
        mapping[pos + 1..].copy_from_slice(&entry.mapping[pos..]);
        for &x in cands {
            let c = ctx.coloring.color(x);
            if every >> c & 1 == 1 || !ctx.mask.allows(x as usize, u) {
                continue;
            }
            sets.clear();
            sets.extend(entry.colorsets.iter().filter(|s| !s.contains(c)).map(|s| s.with(c)));
            if sets.is_empty() {
                continue;
            }
            mapping[pos] = x;
            out.push_unchecked(&mapping, sets.iter().copied());
            guard.tick(&out)?;
        }
    }
    guard.normalize(out)
}

/// Drops the forgotten vertex from every mapping and merges the color set
/// lists of mappings that become equal.
pub fn process_forget(
    node: &NiceNode,
    child_node: &NiceNode,
    child: &ConfigList,
    guard: &mut Guard,
) -> Result<ConfigList, DpError> {
    let NodeKind::Forget(u) = node.kind else {
        panic!("process_forget on {:?}", node.kind)
    };
    let pos = child_node.bag.binary_search(&u).expect("forgotten vertex in child bag");
    let mut out = ConfigList::new(node.bag.len());
    let mut mapping = vec![0 as Vertex; node.bag.len()];
    for entry in child.iter() {
        mapping[..pos].copy_from_slice(&entry.mapping[..pos]);
        mapping[pos..].copy_from_slice(&entry.mapping[pos + 1..]);
        out.push_unchecked(&mapping, entry.colorsets.iter().copied());
        guard.tick(&out)?;
    }
    guard.normalize(out)
}

/// Pairs up equal mappings of both children and keeps `C' ∪ C''` whenever
/// `C' ∩ C''` is exactly the set of colors of the bag images.
pub fn process_join(
    node: &NiceNode,
    left: &ConfigList,
    right: &ConfigList,
    coloring: &Coloring,
    guard: &mut Guard,
) -> Result<ConfigList, DpError> {
    debug_assert_eq!(node.kind, NodeKind::Join);
    let mut out = ConfigList::new(node.bag.len());
    let mut sets = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        let (a, b) = (left.mapping(i), right.mapping(j));
        match a.cmp(b) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let bag_colors = a.iter().fold(0u32, |m, &v| m | 1 << coloring.color(v));
                sets.clear();
                for &l in left.colorsets(i) {
                    for &r in right.colorsets(j) {
                        if l.0 & r.0 == bag_colors {
                            sets.push(l.union(r));
                        }
                    }
                }
                if !sets.is_empty() {
                    sets.sort_unstable();
                    sets.dedup();
                    out.push_unchecked(a, sets.iter().copied());
                    guard.tick(&out)?;
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.shrink_to_fit();
    Ok(out)
}

/// Compressed lists of every node of one iteration.
#[derive(Debug, Default)]
pub struct Archive {
    lists: Vec<CompressedList>,
    bag_sizes: Vec<usize>,
    reads: Vec<AtomicU32>,
}

impl Archive {
    pub fn new(ntd: &NiceTreeDecomposition) -> Self {
        Archive {
            lists: vec![CompressedList::default(); ntd.len()],
            bag_sizes: ntd.nodes.iter().map(|n| n.bag.len()).collect(),
            reads: (0..ntd.len()).map(|_| AtomicU32::new(0)).collect(),
        }
    }

    pub fn store(&mut self, node: usize, list: &ConfigList) {
        self.lists[node] = compress(list);
    }

    /// Decompresses the list of `node` and counts the access.
    pub fn load(&self, node: usize) -> Result<ConfigList, DecodeError> {
        self.reads[node].fetch_add(1, Ordering::Relaxed);
        decompress(&self.lists[node], self.bag_sizes[node])
    }

    pub fn reads(&self, node: usize) -> u32 {
        self.reads[node].load(Ordering::Relaxed)
    }

    pub fn reset_reads(&self) {
        self.reads.iter().for_each(|r| r.store(0, Ordering::Relaxed));
    }

    pub fn compressed(&self, node: usize) -> &CompressedList {
        &self.lists[node]
    }

    pub fn total_bytes(&self) -> u64 {
        self.lists.iter().map(|l| l.len() as u64).sum()
    }
}

#[derive(Debug)]
pub struct Iteration {
    pub root: ConfigList,
    pub archive: Archive,
    pub peak_bytes: u64,
}

impl Iteration {
    /// Whether the root holds the empty mapping with the full color set.
    pub fn found(&self) -> bool {
        !self.root.is_empty()
    }
}

/// Runs the DP bottom-up over `ntd` for one coloring.
///
/// The root list is either empty or the single empty mapping with the full
/// color set.
pub fn run_iteration(
    ntd: &NiceTreeDecomposition,
    ctx: &DpContext<'_>,
    limits: Limits,
) -> Result<Iteration, DpError> {
    let mut guard = Guard::new(limits);
    let mut archive = Archive::new(ntd);
    let mut slots: Vec<Option<ConfigList>> = vec![None; ntd.len()];

    for x in ntd.post_order() {
        guard.node = x;
        let node = ntd.node(x);
        let mut take = |c: usize, guard: &mut Guard| {
            let list = slots[c].take().expect("child processed before parent");
            guard.live -= list.heap_bytes() as u64;
            list
        };
        let list = match node.kind {
            NodeKind::Leaf => process_leaf(node, ctx.target, ctx.mask, ctx.coloring),
            NodeKind::Introduce(_) => {
                let c = node.children[0];
                let child = take(c, &mut guard);
                process_introduce(node, ntd.node(c), &child, ctx, &mut guard)?
            }
            NodeKind::Forget(_) => {
                let c = node.children[0];
                let child = take(c, &mut guard);
                process_forget(node, ntd.node(c), &child, &mut guard)?
            }
            NodeKind::Join => {
                let left = take(node.children[0], &mut guard);
                let right = take(node.children[1], &mut guard);
                process_join(node, &left, &right, ctx.coloring, &mut guard)?
            }
        };
        archive.store(x, &list);
        guard.archived += archive.compressed(x).len() as u64;
        guard.live += list.heap_bytes() as u64;
        guard.check(&ConfigList::new(0))?;
        slots[x] = Some(list);
    }

    let root = slots[ntd.root].take().expect("root processed");
    debug_assert!(root.len() <= 1);
    Ok(Iteration {
        root,
        archive,
        peak_bytes: guard.peak,
    })
}
