//! Recovery of full occurrences from the archived DP lists.
//!
//! `R(x, M)` answers, for each queried pair `(φ, C)` of node `x`, every map of
//! the pattern vertices below `x` that produced the pair. Queries are batched
//! so each node's archive is decompressed once per top-level call: a parent
//! loads its child's list, derives the child queries from it and hands the
//! list down together with the queries.
//!
//! The answer is kept factorized as a DAG of steps (assign a vertex, union,
//! product) with one step per answered query. Full mappings are streamed out
//! of it on demand, so asking for the first `k` occurrences costs `O(k)`
//! walks instead of materializing every intermediate list.
//!
//! Each query carries a demand `d`. Every archived pair has at least one
//! mapping, so a forget query keeps at most `d` alternatives and a join query
//! at most `d` splits, and the demand is split evenly among them. An
//! alternative holding fewer mappings than its share makes the answer come
//! up short; [`Reconstruction::is_truncated`] then tells the caller that
//! asking again with a larger demand can find more.
//!
//! A full mapping is a tuple indexed by pattern vertex id; vertices outside
//! `V*_x` hold [`UNMAPPED`].

use std::collections::HashMap;
use std::mem::size_of;
use std::ops::ControlFlow;
use std::time::Instant;

use thiserror::Error;

use crate::coloring::{ColorSet, Coloring};
use crate::compress::DecodeError;
use crate::config::ConfigList;
use crate::dp::{Archive, DpError, Iteration, Limits};
use crate::graph::Vertex;
use crate::occurrence::{Mode, OccurrenceSet};
use crate::treedecomp::{NiceTreeDecomposition, NodeKind};

pub const UNMAPPED: Vertex = Vertex::MAX;

pub type FullMapping = Box<[Vertex]>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub mapping: Vec<Vertex>,
    pub colors: ColorSet,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReconstructError {
    #[error("pair ({mapping:?}, {colors}) is not in the archive of node {node}")]
    MissingPair {
        node: usize,
        mapping: Vec<Vertex>,
        colors: ColorSet,
    },
    #[error("corrupt archive at node {node}: {source}")]
    Decode {
        node: usize,
        #[source]
        source: DecodeError,
    },
    #[error(transparent)]
    Limit(DpError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Step {
    /// Map pattern vertex `u` to `x`, then continue with `next` if any.
    Assign { u: usize, x: Vertex, next: Option<usize> },
    /// Disjoint alternatives (a forget node).
    Union(Vec<usize>),
    /// Disjoint alternatives, each the combination of two independent halves
    /// (a join node).
    Product(Vec<(usize, usize)>),
}

/// Factorized answer to a batch of queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    steps: Vec<Step>,
    answers: Vec<usize>,
    pattern_size: usize,
    truncated: bool,
}

impl Reconstruction {
    /// Whether some mappings were left out because of the demand.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn query_count(&self) -> usize {
        self.answers.len()
    }

    /// Size of the factorized representation.
    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Calls `f` on every mapping answering `query` until it breaks.
    pub fn for_each<F>(&self, query: usize, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(&[Vertex]) -> ControlFlow<()>,
    {
        let mut phi = vec![UNMAPPED; self.pattern_size];
        let mut stack = vec![self.answers[query]];
        self.walk(&mut stack, &mut phi, &mut f)
    }

    fn walk<F>(&self, stack: &mut Vec<usize>, phi: &mut [Vertex], f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[Vertex]) -> ControlFlow<()>,
    {
        let Some(id) = stack.pop() else {
            return f(phi);
        };
        let flow = match &self.steps[id] {
            Step::Assign { u, x, next } => {
                let old = std::mem::replace(&mut phi[*u], *x);
                stack.extend(*next);
                let flow = self.walk(stack, phi, f);
                if next.is_some() {
                    stack.pop();
                }
                phi[*u] = old;
                flow
            }
            Step::Union(children) => children.iter().try_for_each(|&c| {
                stack.push(c);
                let flow = self.walk(stack, phi, f);
                stack.pop();
                flow
            }),
            Step::Product(pairs) => pairs.iter().try_for_each(|&(a, b)| {
                stack.push(b);
                stack.push(a);
                let flow = self.walk(stack, phi, f);
                stack.truncate(stack.len() - 2);
                flow
            }),
        };
        stack.push(id);
        flow
    }

    /// Up to `limit` mappings answering `query`.
    pub fn mappings(&self, query: usize, limit: Option<usize>) -> Vec<FullMapping> {
        let limit = limit.unwrap_or(usize::MAX);
        let mut out = Vec::new();
        if limit > 0 {
            let _ = self.for_each(query, |phi| {
                out.push(phi.into());
                if out.len() >= limit {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
        }
        out
    }

    /// Number of mappings answering `query`, saturating at `u128::MAX`.
    pub fn count(&self, query: usize) -> u128 {
        let mut memo = vec![None; self.steps.len()];
        self.count_step(self.answers[query], &mut memo)
    }

    fn count_step(&self, id: usize, memo: &mut Vec<Option<u128>>) -> u128 {
        if let Some(c) = memo[id] {
            return c;
        }
        let c = match &self.steps[id] {
            Step::Assign { next: None, .. } => 1,
            Step::Assign { next: Some(n), .. } => self.count_step(*n, memo),
            Step::Union(children) => children
                .iter()
                .fold(0u128, |acc, &c| acc.saturating_add(self.count_step(c, memo))),
            Step::Product(pairs) => pairs.iter().fold(0u128, |acc, &(a, b)| {
                let (a, b) = (self.count_step(a, memo), self.count_step(b, memo));
                acc.saturating_add(a.saturating_mul(b))
            }),
        };
        memo[id] = Some(c);
        c
    }
}

struct Reconstructor<'a> {
    ntd: &'a NiceTreeDecomposition,
    archive: &'a Archive,
    coloring: &'a Coloring,
    limits: Limits,
    steps: Vec<Step>,
    truncated: bool,
    /// Bytes held by the step arena and by pending query batches.
    bytes: u64,
    ticks: u32,
}

fn query_bytes(queries: &[Query]) -> u64 {
    queries
        .iter()
        .map(|q| (size_of::<Query>() + 4 * q.mapping.capacity()) as u64)
        .sum()
}

impl Reconstructor<'_> {
    fn load(&self, x: usize) -> Result<ConfigList, ReconstructError> {
        self.archive
            .load(x)
            .map_err(|source| ReconstructError::Decode { node: x, source })
    }

    fn check(&self, node: usize, extra: u64) -> Result<(), ReconstructError> {
        let bytes = self.archive.total_bytes() + self.bytes + extra;
        if bytes > self.limits.memory_budget {
            return Err(ReconstructError::Limit(DpError::MemoryBudget {
                node,
                entries: self.steps.len(),
                bytes,
                budget: self.limits.memory_budget,
            }));
        }
        if self.limits.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(ReconstructError::Limit(DpError::Timeout { node }));
        }
        Ok(())
    }

    fn push(&mut self, node: usize, step: Step) -> Result<usize, ReconstructError> {
        self.bytes += size_of::<Step>() as u64
            + match &step {
                Step::Assign { .. } => 0,
                Step::Union(c) => 8 * c.len() as u64,
                Step::Product(p) => 16 * p.len() as u64,
            };
        self.steps.push(step);
        self.ticks = self.ticks.wrapping_add(1);
        if self.ticks & 0x3ff == 0 {
            self.check(node, 0)?;
        }
        Ok(self.steps.len() - 1)
    }

    fn validate(&self, x: usize, list: &ConfigList, queries: &[Query]) -> Result<(), ReconstructError> {
        match queries.iter().find(|q| !list.contains(&q.mapping, q.colors)) {
            Some(q) => Err(ReconstructError::MissingPair {
                node: x,
                mapping: q.mapping.clone(),
                colors: q.colors,
            }),
            None => Ok(()),
        }
    }

    /// Answers each query with the id of its step. `list` is the archive of
    /// `x` when the caller has not checked the queries against it yet. Lists
    /// and query batches are dropped before descending, so only a constant
    /// number of decoded lists is alive at any time.
    fn run(
        &mut self,
        x: usize,
        list: Option<ConfigList>,
        queries: Vec<Query>,
        demand: Vec<usize>,
    ) -> Result<Vec<usize>, ReconstructError> {
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(list) = list {
            self.validate(x, &list, &queries)?;
        }
        let node = self.ntd.node(x);
        match node.kind {
            NodeKind::Leaf => {
                let u = node.bag[0];
                queries
                    .iter()
                    .map(|q| {
                        self.push(
                            x,
                            Step::Assign {
                                u,
                                x: q.mapping[0],
                                next: None,
                            },
                        )
                    })
                    .collect()
            }
            NodeKind::Introduce(u) => {
                let pos = node.introduced_position().expect("introduced vertex in bag");
                let mut seen = HashMap::new();
                let mut child = Batch::default();
                let mut assigned = Vec::with_capacity(queries.len());
                for (q, &d) in queries.iter().zip(&demand) {
                    let x_u = q.mapping[pos];
                    let mut mapping = q.mapping.clone();
                    mapping.remove(pos);
                    let colors = q.colors.without(self.coloring.color(x_u));
                    assigned.push((x_u, intern(&mut seen, &mut child, &mapping, colors, d)));
                }
                drop(seen);
                drop(queries);
                let c = node.children[0];
                let below = self.descend(x, c, true, child)?;
                assigned
                    .into_iter()
                    .map(|(x_u, i)| {
                        self.push(
                            x,
                            Step::Assign {
                                u,
                                x: x_u,
                                next: Some(below[i]),
                            },
                        )
                    })
                    .collect()
            }
            NodeKind::Forget(u) => {
                let c = node.children[0];
                let child_list = self.load(c)?;
                let pos = self.ntd.node(c).bag.binary_search(&u).expect("forgotten vertex in child bag");
                let mut by_mapping: HashMap<&[Vertex], Vec<usize>> = HashMap::new();
                for (i, q) in queries.iter().enumerate() {
                    by_mapping.entry(&q.mapping[..]).or_default().push(i);
                }
                let mut child = Batch::default();
                let mut owner = Vec::new();
                let mut taken = vec![0usize; queries.len()];
                let mut restricted = Vec::with_capacity(node.bag.len());
                for entry in child_list.iter() {
                    restricted.clear();
                    restricted.extend_from_slice(&entry.mapping[..pos]);
                    restricted.extend_from_slice(&entry.mapping[pos + 1..]);
                    let Some(qs) = by_mapping.get(&restricted[..]) else { continue };
                    for &qi in qs {
                        if !entry.contains(queries[qi].colors) {
                            continue;
                        }
                        if taken[qi] >= demand[qi] {
                            self.truncated = true;
                            continue;
                        }
                        taken[qi] += 1;
                        child.queries.push(Query {
                            mapping: entry.mapping.to_vec(),
                            colors: queries[qi].colors,
                        });
                        owner.push(qi);
                    }
                }
                child.demand = owner.iter().map(|&qi| share(demand[qi], taken[qi])).collect();
                let n = queries.len();
                drop(by_mapping);
                drop(queries);
                drop(child_list);
                let below = self.descend(x, c, false, child)?;
                let mut alternatives = vec![Vec::new(); n];
                for (step, qi) in below.into_iter().zip(owner) {
                    alternatives[qi].push(step);
                }
                alternatives.into_iter().map(|a| self.push(x, Step::Union(a))).collect()
            }
            NodeKind::Join => {
                let (y, z) = (node.children[0], node.children[1]);
                let left = self.load(y)?;
                let right = self.load(z)?;
                let mut left_batch = Batch::default();
                let mut right_batch = Batch::default();
                let mut left_seen = HashMap::new();
                let mut right_seen = HashMap::new();
                // per query: (left query, right query) index pairs
                let mut pairs: Vec<Vec<(usize, usize)>> = Vec::with_capacity(queries.len());
                for (q, &d) in queries.iter().zip(&demand) {
                    let bag_colors = q
                        .mapping
                        .iter()
                        .fold(ColorSet::EMPTY, |s, &v| s.with(self.coloring.color(v)));
                    let (li, ri) = (
                        left.find(&q.mapping).expect("join query mapping in left child"),
                        right.find(&q.mapping).expect("join query mapping in right child"),
                    );
                    let right_entry = right.entry(ri);
                    let mut splits = Vec::new();
                    for &c1 in left.colorsets(li) {
                        if !c1.is_subset(q.colors) {
                            continue;
                        }
                        let c2 = q.colors.difference(c1).union(bag_colors);
                        if c1.intersection(c2) != bag_colors || !right_entry.contains(c2) {
                            continue;
                        }
                        if splits.len() >= d {
                            self.truncated = true;
                            break;
                        }
                        splits.push((c1, c2));
                    }
                    let e = share(d, splits.len());
                    let mine = splits
                        .into_iter()
                        .map(|(c1, c2)| {
                            let a = intern(&mut left_seen, &mut left_batch, &q.mapping, c1, e);
                            let b = intern(&mut right_seen, &mut right_batch, &q.mapping, c2, e);
                            (a, b)
                        })
                        .collect();
                    pairs.push(mine);
                }
                drop((left, right, left_seen, right_seen, queries, demand));
                let pending = right_batch.bytes();
                self.bytes += pending;
                let lres = self.descend(x, y, false, left_batch);
                self.bytes -= pending;
                let lres = lres?;
                let rres = self.descend(x, z, false, right_batch)?;
                pairs
                    .into_iter()
                    .map(|mine| {
                        let glued = mine.into_iter().map(|(a, b)| (lres[a], rres[b])).collect();
                        self.push(x, Step::Product(glued))
                    })
                    .collect()
            }
        }
    }

    /// Hands `queries` to child `c`, loading its list first if `validate`.
    fn descend(&mut self, x: usize, c: usize, validate: bool, batch: Batch) -> Result<Vec<usize>, ReconstructError> {
        self.check(x, batch.bytes())?;
        let list = if validate { Some(self.load(c)?) } else { None };
        self.run(c, list, batch.queries, batch.demand)
    }
}

/// Child queries with their demands.
#[derive(Default)]
struct Batch {
    queries: Vec<Query>,
    demand: Vec<usize>,
}

impl Batch {
    fn bytes(&self) -> u64 {
        query_bytes(&self.queries) + 8 * self.demand.len() as u64
    }
}

/// Demand for each of `k` alternatives sharing demand `d`.
fn share(d: usize, k: usize) -> usize {
    if d == usize::MAX {
        d
    } else {
        d.div_ceil(k.max(1))
    }
}

fn intern(seen: &mut HashMap<Query, usize>, batch: &mut Batch, mapping: &[Vertex], colors: ColorSet, d: usize) -> usize {
    let q = Query {
        mapping: mapping.to_vec(),
        colors,
    };
    let i = *seen.entry(q.clone()).or_insert_with(|| {
        batch.queries.push(q);
        batch.demand.push(0);
        batch.queries.len() - 1
    });
    batch.demand[i] = batch.demand[i].max(d);
    i
}

/// Runs `R(x, queries)` against the archive with the given demand per query
/// (`usize::MAX` keeps everything).
/// The step arena, pending query batches and the archive itself count
/// against `limits.memory_budget`.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    ntd: &NiceTreeDecomposition,
    archive: &Archive,
    coloring: &Coloring,
    pattern_size: usize,
    x: usize,
    queries: &[Query],
    demand: usize,
    limits: Limits,
) -> Result<Reconstruction, ReconstructError> {
    let mut r = Reconstructor {
        ntd,
        archive,
        coloring,
        limits,
        steps: Vec::new(),
        truncated: false,
        bytes: 0,
        ticks: 0,
    };
    let list = r.load(x)?;
    let answers = r.run(x, Some(list), queries.to_vec(), vec![demand.max(1); queries.len()])?;
    Ok(Reconstruction {
        steps: r.steps,
        answers,
        pattern_size,
        truncated: r.truncated,
    })
}

/// Mappings behind the root's full color set, as query 0 (no mappings if
/// the root is empty).
pub fn reconstruct_root(
    ntd: &NiceTreeDecomposition,
    iteration: &Iteration,
    coloring: &Coloring,
    pattern_size: usize,
    demand: usize,
    limits: Limits,
) -> Result<Reconstruction, ReconstructError> {
    if !iteration.found() {
        return Ok(Reconstruction {
            steps: vec![Step::Union(Vec::new())],
            answers: vec![0],
            pattern_size,
            truncated: false,
        });
    }
    let query = Query {
        mapping: Vec::new(),
        colors: ColorSet::full(pattern_size),
    };
    reconstruct(ntd, &iteration.archive, coloring, pattern_size, ntd.root, &[query], demand, limits)
}

/// Adds the mappings of every query to `set` until it holds `cap`
/// occurrences. Returns how many were new.
pub fn collect_occurrences(root: &Reconstruction, set: &mut OccurrenceSet, cap: usize) -> usize {
    let before = set.len();
    for q in 0..root.query_count() {
        let flow = root.for_each(q, |phi| {
            if set.len() >= cap {
                return ControlFlow::Break(());
            }
            set.insert(phi);
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            break;
        }
    }
    set.len() - before
}

/// The mappings of every query, deduplicated under `mode`, stopping at `cap`.
pub fn enumerate_occurrences(root: &Reconstruction, mode: Mode, cap: usize) -> OccurrenceSet {
    let mut set = OccurrenceSet::new(mode);
    collect_occurrences(root, &mut set, cap);
    set
}
