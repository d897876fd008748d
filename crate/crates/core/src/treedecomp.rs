//! Exact treewidth of the pattern and the nice tree decomposition the color
//! coding DP runs on.
//!
//! Treewidth is computed exactly: a subset DP over elimination orderings for
//! patterns of up to [`SUBSET_DP_LIMIT`] vertices, branch and bound above
//! that. The resulting elimination ordering is turned into a tree
//! decomposition whose nodes are the elimination cliques, and that tree is
//! then rewritten into nice form with singleton leaf bags.
//!
//! All bags are kept sorted by pattern vertex id. That fixed global order is
//! what lets a partial mapping be stored as a plain tuple.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{Graph, MAX_PATTERN_VERTICES};

/// Largest pattern handled by the `O(n² 2ⁿ)` subset DP.
pub const SUBSET_DP_LIMIT: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeDecompError {
    #[error("pattern graph has no vertices")]
    EmptyGraph,
    #[error("pattern has {0} vertices, at most 32 are supported")]
    PatternTooLarge(usize),
}

/// An elimination ordering of minimum width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Treewidth {
    pub width: usize,
    pub ordering: Vec<usize>,
}

fn check_pattern(f: &Graph) -> Result<Vec<u32>, TreeDecompError> {
    let n = f.vertex_count();
    if n == 0 {
        return Err(TreeDecompError::EmptyGraph);
    }
    if n > MAX_PATTERN_VERTICES {
        return Err(TreeDecompError::PatternTooLarge(n));
    }
    Ok(f.adjacency_masks().expect("size checked"))
}

#[inline]
fn bits(mask: u32) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

/// Vertices outside `eliminated ∪ {v}` reachable from `v` by a path whose
/// interior lies in `eliminated`. These are the neighbors `v` has at the
/// moment it is eliminated after `eliminated`.
fn reach_set(adj: &[u32], eliminated: u32, v: usize) -> u32 {
    let mut comp = 1u32 << v;
    let mut frontier = comp;
    let mut boundary = 0u32;
    while frontier != 0 {
        let mut next = 0u32;
        for w in bits(frontier) {
            next |= adj[w];
        }
        boundary |= next;
        let grow = next & eliminated & !comp;
        comp |= grow;
        frontier = grow;
    }
    boundary & !comp & !eliminated
}

/// Exact treewidth and an elimination ordering achieving it.
pub fn exact_treewidth(f: &Graph) -> Result<Treewidth, TreeDecompError> {
    let adj = check_pattern(f)?;
    if f.vertex_count() <= SUBSET_DP_LIMIT {
        Ok(subset_dp(&adj))
    } else {
        Ok(branch_and_bound(&adj))
    }
}

/// `tw(S) = min over v in S of max(tw(S - v), |Q(S - v, v)|)`, where `v` is
/// the last vertex of `S` to be eliminated. `tw(V)` is the treewidth.
fn subset_dp(adj: &[u32]) -> Treewidth {
    let n = adj.len();
    let states = 1usize << n;
    let mut tw = vec![0u8; states];
    let mut last = vec![0u8; states];
    for s in 1..states {
        let set = s as u32;
        let mut best = u8::MAX;
        let mut best_v = 0u8;
        for v in bits(set) {
            let rest = set & !(1 << v);
            let prev = tw[rest as usize];
            if prev >= best {
                continue;
            }
            let cost = (reach_set(adj, rest, v).count_ones() as u8).max(prev);
            if cost < best {
                best = cost;
                best_v = v as u8;
            }
        }
        tw[s] = best;
        last[s] = best_v;
    }

    let mut ordering = Vec::with_capacity(n);
    let mut set = (states - 1) as u32;
    while set != 0 {
        let v = last[set as usize];
        ordering.push(v as usize);
        set &= !(1 << v);
    }
    ordering.reverse();
    Treewidth {
        width: tw[states - 1] as usize,
        ordering,
    }
}

/// Eliminates the vertices of `order` in turn on the bitmask graph `adj`,
/// returning the width of the ordering.
fn ordering_width(adj: &[u32], order: &[usize]) -> usize {
    let mut g = adj.to_vec();
    let mut remaining = low_mask(adj.len());
    let mut width = 0;
    for &v in order {
        width = width.max(eliminate(&mut g, &mut remaining, v));
    }
    width
}

fn low_mask(n: usize) -> u32 {
    crate::graph::low_bits(n)
}

/// Removes `v`, turning its remaining neighborhood into a clique. Returns the
/// neighborhood size.
fn eliminate(g: &mut [u32], remaining: &mut u32, v: usize) -> usize {
    let nb = g[v] & *remaining & !(1 << v);
    for w in bits(nb) {
        g[w] |= nb & !(1 << w);
    }
    *remaining &= !(1 << v);
    nb.count_ones() as usize
}

fn min_fill_ordering(adj: &[u32]) -> Vec<usize> {
    let mut g = adj.to_vec();
    let mut remaining = low_mask(adj.len());
    let mut order = Vec::with_capacity(adj.len());
    while remaining != 0 {
        let v = bits(remaining)
            .min_by_key(|&v| {
                let nb = g[v] & remaining;
                let fill: u32 = bits(nb).map(|w| (nb & !g[w] & !(1 << w)).count_ones()).sum();
                (fill, nb.count_ones(), v)
            })
            .unwrap();
        eliminate(&mut g, &mut remaining, v);
        order.push(v);
    }
    order
}

/// Minimum-degree degeneracy of the subgraph on `remaining`; a treewidth
/// lower bound.
fn degeneracy(g: &[u32], remaining: u32) -> usize {
    let mut left = remaining;
    let mut lb = 0;
    while left != 0 {
        let (v, d) = bits(left)
            .map(|v| (v, (g[v] & left).count_ones() as usize))
            .min_by_key(|&(v, d)| (d, v))
            .unwrap();
        lb = lb.max(d);
        left &= !(1 << v);
    }
    lb
}

/// Minor-min-width: repeatedly contract a minimum-degree vertex into its
/// minimum-degree neighbor. A treewidth lower bound at least as strong as
/// [`degeneracy`].
fn minor_min_width(g: &[u32], remaining: u32) -> usize {
    let mut h: Vec<u32> = g.iter().map(|&m| m & remaining).collect();
    let mut left = remaining;
    let mut lb = 0;
    while left.count_ones() as usize > lb + 1 {
        let (v, d) = bits(left)
            .map(|v| (v, (h[v] & !(1 << v)).count_ones() as usize))
            .min_by_key(|&(v, d)| (d, v))
            .unwrap();
        lb = lb.max(d);
        let nb = h[v] & !(1 << v);
        left &= !(1 << v);
        if nb == 0 {
            continue;
        }
        let u = bits(nb).min_by_key(|&u| (h[u].count_ones(), u)).unwrap();
        for w in bits(nb & !(1 << u)) {
            h[w] |= 1 << u;
        }
        h[u] |= nb & !(1 << u);
        for w in bits(left) {
            h[w] &= !(1 << v);
        }
        h[v] = 0;
    }
    lb
}

fn lower_bound(g: &[u32], remaining: u32) -> usize {
    degeneracy(g, remaining).max(minor_min_width(g, remaining))
}

struct Search {
    best_width: usize,
    best_order: Vec<usize>,
    // smallest running width with which each eliminated set has been reached
    seen: HashMap<u32, usize>,
    full: u32,
}

impl Search {
    fn dfs(&mut self, g: &[u32], eliminated: u32, width: usize, order: &mut Vec<usize>) {
        let remaining = self.full & !eliminated;
        let left = remaining.count_ones() as usize;
        if left == 0 || left <= width + 1 {
            let total = width.max(left.saturating_sub(1));
            if total < self.best_width {
                self.best_width = total;
                self.best_order = order.clone();
                self.best_order.extend(bits(remaining));
            }
            return;
        }
        match self.seen.get(&eliminated) {
            Some(&w) if w <= width => return,
            _ => {
                self.seen.insert(eliminated, width);
            }
        }
        let low = width.max(lower_bound(g, remaining));
        if low >= self.best_width {
            return;
        }

        // A simplicial vertex can always be eliminated next, and so can an
        // almost simplicial one whose degree is at most the lower bound.
        let is_clique = |nb: u32| bits(nb).all(|w| nb & !(1 << w) & !g[w] == 0);
        let simplicial = bits(remaining).find(|&v| {
            let nb = g[v] & remaining & !(1 << v);
            is_clique(nb) || (nb.count_ones() as usize <= low && bits(nb).any(|u| is_clique(nb & !(1 << u))))
        });
        let candidates: Vec<usize> = match simplicial {
            Some(v) => vec![v],
            None => {
                let mut c: Vec<usize> = bits(remaining).collect();
                c.sort_by_key(|&v| ((g[v] & remaining).count_ones(), v));
                c
            }
        };
        for v in candidates {
            let d = (g[v] & remaining & !(1 << v)).count_ones() as usize;
            let w = width.max(d);
            if w >= self.best_width || self.seen.get(&(eliminated | 1 << v)).is_some_and(|&s| s <= w) {
                continue;
            }
            let mut next = g.to_vec();
            let mut rem = remaining;
            eliminate(&mut next, &mut rem, v);
            order.push(v);
            self.dfs(&next, eliminated | (1 << v), w, order);
            order.pop();
        }
    }
}

/// Exact treewidth by depth-first search over elimination orderings, seeded
/// with a min-fill upper bound and pruned by degeneracy and minor-min-width lower bounds and a
/// memo over eliminated sets.
fn branch_and_bound(adj: &[u32]) -> Treewidth {
    let n = adj.len();
    let heuristic = min_fill_ordering(adj);
    let ub = ordering_width(adj, &heuristic);
    if lower_bound(adj, low_mask(n)) == ub {
        return Treewidth {
            width: ub,
            ordering: heuristic,
        };
    }
    let mut search = Search {
        best_width: ub,
        best_order: heuristic,
        seen: HashMap::new(),
        full: low_mask(n),
    };
    search.dfs(adj, 0, 0, &mut Vec::with_capacity(n));
    Treewidth {
        width: search.best_width,
        ordering: search.best_order,
    }
}

/// Exact treewidth through branch and bound regardless of pattern size.
pub fn treewidth_branch_and_bound(f: &Graph) -> Result<Treewidth, TreeDecompError> {
    Ok(branch_and_bound(&check_pattern(f)?))
}

/// Width of the elimination ordering `ordering` on `f`.
pub fn elimination_width(f: &Graph, ordering: &[usize]) -> Result<usize, TreeDecompError> {
    Ok(ordering_width(&check_pattern(f)?, ordering))
}

/// A (rooted) tree decomposition. Bags are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
    pub root: usize,
}

/// A broken decomposition property.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("node {node} holds vertex {vertex} which is not in the graph")]
    UnknownVertex { node: usize, vertex: usize },
    #[error("vertex {0} is in no bag")]
    VertexUncovered(usize),
    #[error("edge {{{0},{1}}} uncovered")]
    EdgeUncovered(usize, usize),
    #[error("bags containing vertex {0} are not connected")]
    Disconnected(usize),
    #[error("decomposition is not a tree")]
    NotATree,
    #[error("root {0} is not a node")]
    BadRoot(usize),
    #[error("root bag is not empty")]
    RootBagNotEmpty,
    #[error("root must have exactly one child")]
    RootDegree,
    #[error("bag of node {0} is not strictly ascending")]
    BagOrder(usize),
    #[error("node {node}: {reason}")]
    BadNode { node: usize, reason: String },
}

impl TreeDecomposition {
    pub fn width(&self) -> usize {
        self.bags.iter().map(Vec::len).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Checks the three tree decomposition axioms and that the node graph is
    /// a tree. An empty result means the decomposition is valid for `f`.
    pub fn validate(&self, f: &Graph) -> Vec<Violation> {
        check_decomposition(f, &self.bags, &self.edges, self.root)
    }
}

fn check_decomposition(
    f: &Graph,
    bags: &[Vec<usize>],
    edges: &[(usize, usize)],
    root: usize,
) -> Vec<Violation> {
    let n = f.vertex_count();
    let nodes = bags.len();
    let mut out = Vec::new();
    if root >= nodes {
        out.push(Violation::BadRoot(root));
    }

    // tree: |E| = |N| - 1 and connected
    let mut tree_adj = vec![Vec::new(); nodes];
    let mut tree_ok = edges.len() + 1 == nodes;
    for &(a, b) in edges {
        if a >= nodes || b >= nodes || a == b {
            tree_ok = false;
            continue;
        }
        tree_adj[a].push(b);
        tree_adj[b].push(a);
    }
    if tree_ok && nodes > 0 {
        let mut seen = vec![false; nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &tree_adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        tree_ok = seen.iter().all(|&s| s);
    }
    if !tree_ok {
        out.push(Violation::NotATree);
    }

    let mut holders = vec![Vec::new(); n];
    for (x, bag) in bags.iter().enumerate() {
        for &v in bag {
            if v >= n {
                out.push(Violation::UnknownVertex { node: x, vertex: v });
            } else {
                holders[v].push(x);
            }
        }
    }
    for (v, h) in holders.iter().enumerate() {
        if h.is_empty() {
            out.push(Violation::VertexUncovered(v));
        }
    }
    for (u, v) in f.edges() {
        if !bags.iter().any(|b| b.contains(&u) && b.contains(&v)) {
            out.push(Violation::EdgeUncovered(u, v));
        }
    }
    if tree_ok {
        // the holders of v induce a forest; it is connected iff it has |h| - 1 edges
        let mut member = vec![false; nodes];
        for (v, h) in holders.iter().enumerate() {
            if h.is_empty() {
                continue;
            }
            h.iter().for_each(|&x| member[x] = true);
            let inner = edges.iter().filter(|&&(a, b)| member[a] && member[b]).count();
            if inner + 1 != h.len() {
                out.push(Violation::Disconnected(v));
            }
            h.iter().for_each(|&x| member[x] = false);
        }
    }
    out
}

/// One node per vertex: the bag of `v` is `v` together with its neighbors at
/// the moment it is eliminated. The parent of `v` is the earliest eliminated
/// vertex in that neighborhood. Vertices with an empty neighborhood (one per
/// connected component) are chained together; the last one is the root.
pub fn decomposition_from_ordering(f: &Graph, ordering: &[usize]) -> TreeDecomposition {
    let n = f.vertex_count();
    assert_eq!(ordering.len(), n, "ordering must be a permutation");
    let mut g = f.adjacency_masks().expect("pattern of at most 32 vertices");
    let mut remaining = low_mask(n);
    let mut position = vec![usize::MAX; n];
    for (i, &v) in ordering.iter().enumerate() {
        assert_eq!(position[v], usize::MAX, "ordering must be a permutation");
        position[v] = i;
    }

    let mut bags = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut roots = Vec::new();
    for (i, &v) in ordering.iter().enumerate() {
        let nb = g[v] & remaining & !(1 << v);
        eliminate(&mut g, &mut remaining, v);
        let mut bag: Vec<usize> = bits(nb | (1 << v)).collect();
        bag.sort_unstable();
        bags.push(bag);
        match bits(nb).min_by_key(|&w| position[w]) {
            Some(parent) => edges.push((i, position[parent])),
            None => roots.push(i),
        }
    }
    for pair in roots.windows(2) {
        edges.push((pair[0], pair[1]));
    }
    TreeDecomposition {
        bags,
        edges,
        root: *roots.last().unwrap_or(&0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Leaf,
    Introduce(usize),
    Forget(usize),
    Join,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Leaf => f.write_str("leaf"),
            NodeKind::Introduce(_) => f.write_str("introduce"),
            NodeKind::Forget(_) => f.write_str("forget"),
            NodeKind::Join => f.write_str("join"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNode {
    pub kind: NodeKind,
    /// Sorted ascending.
    pub bag: Vec<usize>,
    pub children: Vec<usize>,
}

impl NiceNode {
    /// Index in `bag` of the introduced vertex (introduce nodes only).
    pub fn introduced_position(&self) -> Option<usize> {
        match self.kind {
            NodeKind::Introduce(u) => self.bag.binary_search(&u).ok(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceTreeDecomposition {
    pub nodes: Vec<NiceNode>,
    pub root: usize,
}

impl NiceTreeDecomposition {
    /// Exact treewidth, elimination decomposition, then nice form.
    pub fn for_pattern(f: &Graph) -> Result<(Self, usize), TreeDecompError> {
        let tw = exact_treewidth(f)?;
        let td = decomposition_from_ordering(f, &tw.ordering);
        debug_assert_eq!(td.width(), tw.width);
        Ok((make_nice(&td), tw.width))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn width(&self) -> usize {
        self.nodes.iter().map(|n| n.bag.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn node(&self, id: usize) -> &NiceNode {
        &self.nodes[id]
    }

    /// Node ids, children before parents.
    pub fn post_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((x, expanded)) = stack.pop() {
            if expanded {
                out.push(x);
            } else {
                stack.push((x, true));
                for &c in self.nodes[x].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// `V*_x` for every node as a bitmask over pattern vertices.
    pub fn subtree_vertices(&self) -> Vec<u32> {
        let mut below = vec![0u32; self.nodes.len()];
        for x in self.post_order() {
            let own = self.nodes[x].bag.iter().fold(0u32, |m, &v| m | 1 << v);
            below[x] = self.nodes[x].children.iter().fold(own, |m, &c| m | below[c]);
        }
        below
    }

    /// The underlying tree decomposition, ignoring node kinds.
    pub fn as_tree_decomposition(&self) -> TreeDecomposition {
        let edges = self
            .nodes
            .iter()
            .enumerate()
            .flat_map(|(x, n)| n.children.iter().map(move |&c| (x, c)))
            .collect();
        TreeDecomposition {
            bags: self.nodes.iter().map(|n| n.bag.clone()).collect(),
            edges,
            root: self.root,
        }
    }

    /// Checks the tree decomposition axioms plus the nice node rules.
    pub fn validate(&self, f: &Graph) -> Vec<Violation> {
        let mut out = Vec::new();
        let count = self.nodes.len();
        if self.root >= count {
            out.push(Violation::BadRoot(self.root));
            return out;
        }
        let mut parents = vec![0usize; count];
        for (x, node) in self.nodes.iter().enumerate() {
            for &c in &node.children {
                if c >= count {
                    out.push(Violation::BadNode {
                        node: x,
                        reason: format!("child {c} does not exist"),
                    });
                    return out;
                }
                parents[c] += 1;
            }
        }
        if parents[self.root] != 0 || (0..count).any(|x| x != self.root && parents[x] != 1) {
            out.push(Violation::NotATree);
        }
        let root = &self.nodes[self.root];
        if !root.bag.is_empty() {
            out.push(Violation::RootBagNotEmpty);
        }
        if root.children.len() != 1 {
            out.push(Violation::RootDegree);
        }

        for (x, node) in self.nodes.iter().enumerate() {
            if node.bag.windows(2).any(|w| w[0] >= w[1]) {
                out.push(Violation::BagOrder(x));
            }
            let bad = |reason: &str| Violation::BadNode {
                node: x,
                reason: reason.to_string(),
            };
            let child_bag = |i: usize| &self.nodes[node.children[i]].bag;
            match node.kind {
                NodeKind::Leaf => {
                    if !node.children.is_empty() {
                        out.push(bad("leaf has children"));
                    }
                    if node.bag.len() != 1 {
                        out.push(bad("leaf bag must hold exactly one vertex"));
                    }
                }
                NodeKind::Introduce(u) => {
                    if node.children.len() != 1 {
                        out.push(bad("introduce needs exactly one child"));
                        continue;
                    }
                    let child = child_bag(0);
                    let mut expected = child.clone();
                    expected.push(u);
                    expected.sort_unstable();
                    if child.contains(&u) || expected != node.bag {
                        out.push(bad(&format!("bag is not child bag plus {u}")));
                    }
                }
                NodeKind::Forget(u) => {
                    if node.children.len() != 1 {
                        out.push(bad("forget needs exactly one child"));
                        continue;
                    }
                    let child = child_bag(0);
                    let expected: Vec<usize> = child.iter().copied().filter(|&v| v != u).collect();
                    if !child.contains(&u) || expected != node.bag {
                        out.push(bad(&format!("bag is not child bag minus {u}")));
                    }
                }
                NodeKind::Join => {
                    if node.children.len() != 2 {
                        out.push(bad("join needs exactly two children"));
                        continue;
                    }
                    if *child_bag(0) != node.bag || *child_bag(1) != node.bag {
                        out.push(bad("join bags differ"));
                    }
                }
            }
        }
        if out.iter().any(|v| matches!(v, Violation::NotATree)) {
            return out;
        }
        let td = self.as_tree_decomposition();
        out.extend(
            td.validate(f)
                .into_iter()
                .filter(|v| !matches!(v, Violation::BadRoot(_))),
        );
        out
    }
}

struct NiceBuilder<'a> {
    td: &'a TreeDecomposition,
    adjacency: Vec<Vec<usize>>,
    nodes: Vec<NiceNode>,
}

impl NiceBuilder<'_> {
    fn push(&mut self, kind: NodeKind, bag: Vec<usize>, children: Vec<usize>) -> usize {
        self.nodes.push(NiceNode { kind, bag, children });
        self.nodes.len() - 1
    }

    fn introduce(&mut self, top: usize, u: usize) -> usize {
        let mut bag = self.nodes[top].bag.clone();
        let pos = bag.binary_search(&u).unwrap_err();
        bag.insert(pos, u);
        self.push(NodeKind::Introduce(u), bag, vec![top])
    }

    fn forget(&mut self, top: usize, u: usize) -> usize {
        let bag = self.nodes[top].bag.iter().copied().filter(|&v| v != u).collect();
        self.push(NodeKind::Forget(u), bag, vec![top])
    }

    /// Builds the subtree for `x` and returns a nice node whose bag equals
    /// the bag of `x`.
    fn build(&mut self, x: usize, parent: Option<usize>) -> usize {
        let bag = self.td.bags[x].clone();
        let children: Vec<usize> = self.adjacency[x]
            .iter()
            .copied()
            .filter(|&c| Some(c) != parent)
            .collect();
        if children.is_empty() {
            let mut top = self.push(NodeKind::Leaf, vec![bag[0]], Vec::new());
            for &u in &bag[1..] {
                top = self.introduce(top, u);
            }
            return top;
        }
        let mut tops = Vec::with_capacity(children.len());
        for c in children {
            let mut top = self.build(c, Some(x));
            let child_bag = self.td.bags[c].clone();
            for &u in child_bag.iter().filter(|u| !bag.contains(u)) {
                top = self.forget(top, u);
            }
            for &u in bag.iter().filter(|u| !child_bag.contains(u)) {
                top = self.introduce(top, u);
            }
            tops.push(top);
        }
        let mut acc = tops[0];
        for &t in &tops[1..] {
            acc = self.push(NodeKind::Join, bag.clone(), vec![acc, t]);
        }
        acc
    }
}

/// Rewrites a tree decomposition into nice form.
///
/// Leaves hold one vertex and grow their bag through introduce nodes, every
/// tree edge becomes a forget chain followed by an introduce chain, and nodes
/// with several children become a left-deep chain of binary joins. The root
/// is the final forget node, whose bag is empty. Width is preserved.
///
/// Every bag of `td` must be non-empty.
pub fn make_nice(td: &TreeDecomposition) -> NiceTreeDecomposition {
    assert!(td.bags.iter().all(|b| !b.is_empty()), "empty bag in tree decomposition");
    let mut adjacency = vec![Vec::new(); td.bags.len()];
    for &(a, b) in &td.edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for a in &mut adjacency {
        a.sort_unstable();
    }
    let mut sorted = td.clone();
    for b in &mut sorted.bags {
        b.sort_unstable();
    }
    let mut builder = NiceBuilder {
        td: &sorted,
        adjacency,
        nodes: Vec::with_capacity(4 * td.bags.len()),
    };
    let mut top = builder.build(td.root, None);
    for u in sorted.bags[td.root].clone() {
        top = builder.forget(top, u);
    }
    NiceTreeDecomposition {
        nodes: builder.nodes,
        root: top,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families::*;
    use crate::graph::erdos_renyi;
    use proptest::prelude::*;

    fn brute_force_treewidth(f: &Graph) -> usize {
        fn permute(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, adj: &[u32], best: &mut usize) {
            if rest.is_empty() {
                *best = (*best).min(ordering_width(adj, prefix));
                return;
            }
            for i in 0..rest.len() {
                let v = rest.remove(i);
                prefix.push(v);
                permute(rest, prefix, adj, best);
                prefix.pop();
                rest.insert(i, v);
            }
        }
        let adj = f.adjacency_masks().unwrap();
        let mut best = usize::MAX;
        permute(&mut (0..f.vertex_count()).collect(), &mut Vec::new(), &adj, &mut best);
        best
    }

    #[test]
    fn treewidth_of_named_families() {
        assert_eq!(exact_treewidth(&Graph::new(1)).unwrap().width, 0);
        assert_eq!(exact_treewidth(&cycle(10)).unwrap().width, 2);
        assert_eq!(exact_treewidth(&complete(4)).unwrap().width, 3);
        assert_eq!(exact_treewidth(&grid(3, 3)).unwrap().width, 3);
        assert_eq!(exact_treewidth(&star(5)).unwrap().width, 1);
        assert_eq!(exact_treewidth(&path(10)).unwrap().width, 1);
        assert_eq!(exact_treewidth(&complete(10)).unwrap().width, 9);
    }

    #[test]
    fn treewidth_rejects_bad_sizes() {
        assert_eq!(exact_treewidth(&Graph::new(0)), Err(TreeDecompError::EmptyGraph));
        assert_eq!(exact_treewidth(&path(33)), Err(TreeDecompError::PatternTooLarge(33)));
    }

    #[test]
    fn large_patterns_use_branch_and_bound() {
        assert_eq!(exact_treewidth(&cycle(30)).unwrap().width, 2);
        assert_eq!(exact_treewidth(&path(32)).unwrap().width, 1);
        assert_eq!(exact_treewidth(&grid(3, 9)).unwrap().width, 3);
        assert_eq!(exact_treewidth(&grid(5, 5)).unwrap().width, 5);
        let tw = exact_treewidth(&grid(5, 6)).unwrap();
        assert_eq!(tw.width, 5);
        assert_eq!(ordering_width(&grid(5, 6).adjacency_masks().unwrap(), &tw.ordering), 5);
    }

    #[test]
    fn ordering_attains_width() {
        for seed in 0..20 {
            let f = erdos_renyi(9, 0.4, seed);
            let tw = exact_treewidth(&f).unwrap();
            let mut sorted = tw.ordering.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..9).collect::<Vec<_>>());
            assert_eq!(elimination_width(&f, &tw.ordering).unwrap(), tw.width);
            assert_eq!(decomposition_from_ordering(&f, &tw.ordering).width(), tw.width);
        }
    }

    #[test]
    fn subset_dp_matches_permutation_brute_force() {
        for n in 1..=7 {
            for seed in 0..12 {
                let f = erdos_renyi(n, 0.45, seed * 31 + n as u64);
                let expected = brute_force_treewidth(&f);
                assert_eq!(exact_treewidth(&f).unwrap().width, expected, "n={n} seed={seed}");
                assert_eq!(treewidth_branch_and_bound(&f).unwrap().width, expected);
            }
        }
    }

    #[test]
    fn branch_and_bound_agrees_with_subset_dp() {
        for n in [12, 14] {
            for p in [0.2, 0.35, 0.5, 0.7] {
                for seed in 0..15 {
                    let f = erdos_renyi(n, p, seed);
                    let bb = treewidth_branch_and_bound(&f).unwrap();
                    assert_eq!(bb.width, exact_treewidth(&f).unwrap().width, "n={n} p={p} seed={seed}");
                    assert_eq!(elimination_width(&f, &bb.ordering).unwrap(), bb.width);
                }
            }
        }
    }

    #[test]
    fn decomposition_examples() {
        let td = decomposition_from_ordering(&path(3), &[0, 2, 1]);
        assert_eq!(td.width(), 1);
        assert!(td.validate(&path(3)).is_empty());

        let k3 = complete(3);
        for ord in [[0, 1, 2], [2, 0, 1], [1, 2, 0]] {
            let td = decomposition_from_ordering(&k3, &ord);
            assert_eq!(td.width(), 2);
            assert!(td.validate(&k3).is_empty());
        }

        let empty = Graph::new(4);
        let td = decomposition_from_ordering(&empty, &[3, 1, 0, 2]);
        assert_eq!(td.width(), 0);
        assert!(td.validate(&empty).is_empty());
    }

    #[test]
    fn validator_reports_violations() {
        let k3 = complete(3);
        let good = TreeDecomposition {
            bags: vec![vec![0, 1, 2]],
            edges: vec![],
            root: 0,
        };
        assert!(good.validate(&k3).is_empty());

        let p3 = path(3);
        let missing = TreeDecomposition {
            bags: vec![vec![0], vec![1, 2]],
            edges: vec![(0, 1)],
            root: 0,
        };
        let msgs: Vec<String> = missing.validate(&p3).iter().map(|v| v.to_string()).collect();
        assert_eq!(msgs, vec!["edge {0,1} uncovered"]);

        let split = TreeDecomposition {
            bags: vec![vec![0, 1], vec![1, 2], vec![0]],
            edges: vec![(0, 1), (1, 2)],
            root: 0,
        };
        assert_eq!(split.validate(&p3), vec![Violation::Disconnected(0)]);

        let cyclic = TreeDecomposition {
            bags: vec![vec![0, 1], vec![1, 2], vec![1]],
            edges: vec![(0, 1), (1, 2), (2, 0)],
            root: 0,
        };
        assert!(cyclic.validate(&p3).contains(&Violation::NotATree));
    }

    #[test]
    fn nice_single_vertex() {
        let td = TreeDecomposition {
            bags: vec![vec![0]],
            edges: vec![],
            root: 0,
        };
        let ntd = make_nice(&td);
        assert_eq!(ntd.len(), 2);
        let root = ntd.node(ntd.root);
        assert_eq!(root.kind, NodeKind::Forget(0));
        assert!(root.bag.is_empty());
        let leaf = ntd.node(root.children[0]);
        assert_eq!((leaf.kind, leaf.bag.clone()), (NodeKind::Leaf, vec![0]));
        assert!(ntd.validate(&Graph::new(1)).is_empty());
    }

    #[test]
    fn nice_triangle_has_introduce_chain() {
        let k3 = complete(3);
        let (ntd, width) = NiceTreeDecomposition::for_pattern(&k3).unwrap();
        assert_eq!(width, 2);
        assert!(ntd.validate(&k3).is_empty());
        assert!(ntd
            .nodes
            .iter()
            .any(|n| matches!(n.kind, NodeKind::Introduce(_)) && n.bag == vec![0, 1, 2]));
        assert_eq!(ntd.width(), 2);
    }

    #[test]
    fn nice_validator_catches_bad_kinds() {
        let k3 = complete(3);
        let (mut ntd, _) = NiceTreeDecomposition::for_pattern(&k3).unwrap();
        let leaf = ntd.nodes.iter().position(|n| n.kind == NodeKind::Leaf).unwrap();
        ntd.nodes[leaf].bag.push(9);
        assert!(!ntd.validate(&k3).is_empty());

        let (mut ntd, _) = NiceTreeDecomposition::for_pattern(&k3).unwrap();
        let root = ntd.root;
        ntd.nodes[root].bag = vec![0];
        let v = ntd.validate(&k3);
        assert!(v.contains(&Violation::RootBagNotEmpty));
    }

    #[test]
    fn disconnected_pattern_chains_components() {
        // triangle, a path on three vertices and an isolated vertex
        let f = Graph::from_edges(7, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]).unwrap();
        let (ntd, width) = NiceTreeDecomposition::for_pattern(&f).unwrap();
        assert_eq!(width, 2);
        assert!(ntd.validate(&f).is_empty(), "{:?}", ntd.validate(&f));
        let comp = f.components();
        for node in &ntd.nodes {
            assert!(node.bag.windows(2).all(|w| comp[w[0]] == comp[w[1]]));
        }
        assert_eq!(ntd.subtree_vertices()[ntd.root], 0b111_1111);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nice_decompositions_are_valid(n in 1usize..=10, p in 0.0f64..=1.0, seed in any::<u64>()) {
            let f = erdos_renyi(n, p, seed);
            let tw = exact_treewidth(&f).unwrap();
            let (ntd, width) = NiceTreeDecomposition::for_pattern(&f).unwrap();
            prop_assert_eq!(width, tw.width);
            prop_assert_eq!(ntd.width(), tw.width);
            prop_assert!(ntd.validate(&f).is_empty());
            prop_assert!(ntd.len() <= 6 * (width + 1) * n);
            prop_assert_eq!(ntd.subtree_vertices()[ntd.root], low_mask(n));
        }

        #[test]
        fn treewidth_lower_bounds_every_ordering(
            n in 1usize..=8, p in 0.0f64..=1.0, seed in any::<u64>(),
            keys in proptest::collection::vec(any::<u32>(), 8),
        ) {
            let f = erdos_renyi(n, p, seed);
            let mut ordering: Vec<usize> = (0..n).collect();
            ordering.sort_by_key(|&v| keys[v]);
            let td = decomposition_from_ordering(&f, &ordering);
            prop_assert!(td.validate(&f).is_empty());
            prop_assert!(exact_treewidth(&f).unwrap().width <= td.width());
            prop_assert_eq!(td.width(), elimination_width(&f, &ordering).unwrap());
        }
    }
}
