//! Undirected simple graphs, the flat-file formats, BFS helpers and the
//! Erdős–Rényi generator.
//!
//! The same [`Graph`] type is used for the target and for the pattern. Vertex
//! ids are dense and 0-based; adjacency lists are kept sorted so that neighbor
//! intersections run in linear time.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Target vertex id.
pub type Vertex = u32;

/// Largest supported pattern graph (one bit per pattern vertex in a `u32`).
pub const MAX_PATTERN_VERTICES: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("malformed header at line {line}")]
    MalformedHeader { line: usize },
    #[error("missing header")]
    MissingHeader,
    #[error("malformed edge at line {line}")]
    MalformedEdge { line: usize },
    #[error("vertex id out of range at line {line}")]
    VertexOutOfRange { line: usize },
    #[error("self-loop at line {line}")]
    SelfLoop { line: usize },
    #[error("duplicate edge at line {line}")]
    DuplicateEdge { line: usize },
    #[error("expected {expected} edges, found {found}")]
    EdgeCountMismatch { expected: usize, found: usize },
    #[error("malformed mapping line at line {line}")]
    MalformedMask { line: usize },
    #[error("pattern vertex id out of range at line {line}")]
    PatternVertexOutOfRange { line: usize },
    #[error("unexpected content at line {line}")]
    UnexpectedLine { line: usize },
    #[error("pattern has {0} vertices, at most 32 are supported")]
    PatternTooLarge(usize),
    #[error("invalid edge {{{0},{1}}}")]
    InvalidEdge(usize, usize),
}

/// Which flavor of the text format to accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Plain,
    /// Plain edges followed by `a v k p1 .. pk` allowed-mapping lines.
    Extended,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    edge_count: usize,
}

impl Graph {
    pub fn new(vertex_count: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); vertex_count],
            edge_count: 0,
        }
    }

    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(vertex_count);
        for (u, v) in edges {
            if !g.add_edge(u, v) {
                return Err(GraphError::InvalidEdge(u, v));
            }
        }
        Ok(g)
    }

    /// Inserts `{u, v}`. Returns false (and leaves the graph untouched) for
    /// self-loops, duplicates and out-of-range endpoints.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        let n = self.adjacency.len();
        if u == v || u >= n || v >= n {
            return false;
        }
        let (uu, vv) = (u as Vertex, v as Vertex);
        match self.adjacency[u].binary_search(&vv) {
            Ok(_) => return false,
            Err(pos) => self.adjacency[u].insert(pos, vv),
        }
        let pos = self.adjacency[v].binary_search(&uu).unwrap_err();
        self.adjacency[v].insert(pos, uu);
        self.edge_count += 1;
        true
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[Vertex] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.adjacency[a].binary_search(&(b as Vertex)).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            nbrs.iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Adjacency as bitmasks; only valid for graphs of at most 32 vertices.
    pub fn adjacency_masks(&self) -> Result<Vec<u32>, GraphError> {
        if self.vertex_count() > MAX_PATTERN_VERTICES {
            return Err(GraphError::PatternTooLarge(self.vertex_count()));
        }
        Ok(self
            .adjacency
            .iter()
            .map(|nbrs| nbrs.iter().fold(0u32, |m, &v| m | (1 << v)))
            .collect())
    }

    /// Connected component index per vertex, numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    let w = w as usize;
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Serializes to the plain text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.vertex_count(), self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

/// Per-target-vertex set of allowed pattern vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingMask {
    bits: Vec<u32>,
}

impl MappingMask {
    /// Every target vertex may host every one of the `pattern_size` pattern vertices.
    pub fn all(target_size: usize, pattern_size: usize) -> Self {
        MappingMask {
            bits: vec![low_bits(pattern_size); target_size],
        }
    }

    pub fn from_bits(bits: Vec<u32>) -> Self {
        MappingMask { bits }
    }

    #[inline]
    pub fn get(&self, target: usize) -> u32 {
        self.bits[target]
    }

    #[inline]
    pub fn allows(&self, target: usize, pattern_vertex: usize) -> bool {
        self.bits[target] >> pattern_vertex & 1 == 1
    }

    pub fn set(&mut self, target: usize, bits: u32) {
        self.bits[target] = bits;
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u32] {
        &self.bits
    }

    /// Clears every bit at or above `pattern_size`.
    pub fn restrict(&self, pattern_size: usize) -> Self {
        let keep = low_bits(pattern_size);
        MappingMask {
            bits: self.bits.iter().map(|b| b & keep).collect(),
        }
    }
}

#[inline]
pub(crate) fn low_bits(k: usize) -> u32 {
    if k >= 32 {
        u32::MAX
    } else {
        (1u32 << k) - 1
    }
}

/// Parses the plain or extended text format.
///
/// For the extended format, target vertices without an `a` line get an
/// all-ones mask; callers narrow it to the pattern size with
/// [`MappingMask::restrict`].
pub fn parse_graph(
    text: &str,
    kind: GraphFormat,
) -> Result<(Graph, Option<MappingMask>), GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or(GraphError::MissingHeader)?;
    let nums = parse_numbers(header).ok_or(GraphError::MalformedHeader { line: header_line })?;
    let [n, m] = nums[..] else {
        return Err(GraphError::MalformedHeader { line: header_line });
    };
    if n > u32::MAX as usize {
        return Err(GraphError::MalformedHeader { line: header_line });
    }

    let mut g = Graph::new(n);
    let mut found = 0;
    while found < m {
        let Some((line, content)) = lines.next() else {
            return Err(GraphError::EdgeCountMismatch { expected: m, found });
        };
        let nums = parse_numbers(content).ok_or(GraphError::MalformedEdge { line })?;
        let [u, v] = nums[..] else {
            return Err(GraphError::MalformedEdge { line });
        };
        if u >= n || v >= n {
            return Err(GraphError::VertexOutOfRange { line });
        }
        if u == v {
            return Err(GraphError::SelfLoop { line });
        }
        if !g.add_edge(u, v) {
            return Err(GraphError::DuplicateEdge { line });
        }
        found += 1;
    }

    match kind {
        GraphFormat::Plain => {
            if let Some((line, _)) = lines.next() {
                return Err(GraphError::UnexpectedLine { line });
            }
            Ok((g, None))
        }
        GraphFormat::Extended => {
            let mut mask = MappingMask::from_bits(vec![u32::MAX; n]);
            for (line, content) in lines {
                let mut tokens = content.split_whitespace();
                if tokens.next() != Some("a") {
                    return Err(GraphError::MalformedMask { line });
                }
                let rest: Vec<&str> = tokens.collect();
                let nums = parse_numbers(&rest.join(" ")).ok_or(GraphError::MalformedMask { line })?;
                if nums.len() < 2 || nums.len() != nums[1] + 2 {
                    return Err(GraphError::MalformedMask { line });
                }
                let v = nums[0];
                if v >= n {
                    return Err(GraphError::VertexOutOfRange { line });
                }
                let mut bits = 0u32;
                for &p in &nums[2..] {
                    if p >= MAX_PATTERN_VERTICES {
                        return Err(GraphError::PatternVertexOutOfRange { line });
                    }
                    bits |= 1 << p;
                }
                mask.set(v, bits);
            }
            Ok((g, Some(mask)))
        }
    }
}

fn parse_numbers(s: &str) -> Option<Vec<usize>> {
    s.split_whitespace().map(|t| t.parse().ok()).collect()
}

/// Hop distances from `source`; unreachable vertices hold `n`.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<usize> {
    let n = g.vertex_count();
    let mut dist = vec![n; n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            let w = w as usize;
            if dist[w] == n {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Reusable bounded BFS over a target graph.
///
/// Uses an epoch-stamped visited array so repeated calls cost only the size
/// of the explored ball.
#[derive(Debug)]
pub struct BallSearch {
    seen: Vec<u32>,
    epoch: u32,
    frontier: Vec<Vertex>,
    next: Vec<Vertex>,
}

impl BallSearch {
    pub fn new(vertex_count: usize) -> Self {
        BallSearch {
            seen: vec![0; vertex_count],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    /// Collects every vertex within `radius` hops of `center` into `out`
    /// (cleared first), sorted ascending.
    pub fn within(&mut self, g: &Graph, center: Vertex, radius: usize, out: &mut Vec<Vertex>) {
        out.clear();
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.seen[center as usize] = epoch;
        out.push(center);
        self.frontier.clear();
        self.frontier.push(center);
        for _ in 0..radius {
            self.next.clear();
            for &v in &self.frontier {
                for &w in g.neighbors(v as usize) {
                    if self.seen[w as usize] != epoch {
                        self.seen[w as usize] = epoch;
                        self.next.push(w);
                    }
                }
            }
            if self.next.is_empty() {
                break;
            }
            out.extend_from_slice(&self.next);
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
        out.sort_unstable();
    }
}

/// All-pairs hop distances in a pattern graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    /// The stored distance; unreachable pairs hold [`DistanceMatrix::infinity`].
    #[inline]
    pub fn raw(&self, u: usize, v: usize) -> u32 {
        self.dist[u * self.n + v]
    }

    #[inline]
    pub fn infinity(&self) -> u32 {
        self.n as u32
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Option<usize> {
        let d = self.raw(u, v);
        (d != self.infinity()).then_some(d as usize)
    }
}

pub fn all_pairs_distances(f: &Graph) -> Result<DistanceMatrix, GraphError> {
    let n = f.vertex_count();
    if n > MAX_PATTERN_VERTICES {
        return Err(GraphError::PatternTooLarge(n));
    }
    let mut dist = Vec::with_capacity(n * n);
    for v in 0..n {
        dist.extend(bfs_distances(f, v).into_iter().map(|d| d as u32));
    }
    Ok(DistanceMatrix { n, dist })
}

/// Clears bit `(x, y)` whenever `deg_G(x) < deg_F(y)`.
pub fn degree_filter(g: &Graph, f: &Graph, mask: &MappingMask) -> MappingMask {
    // by_degree[d] = pattern vertices of degree <= d
    let max_f = (0..f.vertex_count()).map(|y| f.degree(y)).max().unwrap_or(0);
    let mut by_degree = vec![0u32; max_f + 1];
    for y in 0..f.vertex_count() {
        by_degree[f.degree(y)] |= 1 << y;
    }
    for d in 1..by_degree.len() {
        by_degree[d] |= by_degree[d - 1];
    }
    let bits = (0..g.vertex_count())
        .map(|x| mask.get(x) & by_degree[g.degree(x).min(max_f)])
        .collect();
    MappingMask::from_bits(bits)
}

/// G(n, p): every unordered pair is an edge independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&p), "edge probability {p} outside [0, 1]");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Small named graphs used by tests, fixtures and the CLI.
pub mod families {
    use super::Graph;

    pub fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3);
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    /// Star with center 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (0, i))).unwrap()
    }

    pub fn complete(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)))).unwrap()
    }

    /// `rows × cols` grid, vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Graph {
        let mut g = Graph::new(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    g.add_edge(v, v + 1);
                }
                if r + 1 < rows {
                    g.add_edge(v, v + cols);
                }
            }
        }
        g
    }
}
