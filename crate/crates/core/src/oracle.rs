//! Exhaustive backtracking enumerators used as test oracles.

use crate::coloring::Coloring;
use crate::graph::{Graph, Vertex};
use crate::occurrence::{Mode, OccurrenceSet};

fn search(
    g: &Graph,
    f: &Graph,
    coloring: Option<&Coloring>,
    phi: &mut Vec<Vertex>,
    used: &mut [bool],
    colors: u32,
    out: &mut OccurrenceSet,
) {
    let i = phi.len();
    if i == f.vertex_count() {
        out.insert(phi);
        return;
    }
    let earlier: Vec<usize> = f.neighbors(i).iter().map(|&w| w as usize).filter(|&w| w < i).collect();
    let candidates: Vec<Vertex> = match earlier.first() {
        Some(&w) => g.neighbors(phi[w] as usize).to_vec(),
        None => (0..g.vertex_count() as Vertex).collect(),
    };
    for x in candidates {
        if used[x as usize] || !earlier.iter().all(|&w| g.has_edge(phi[w] as usize, x as usize)) {
            continue;
        }
        let mut next_colors = colors;
        if let Some(c) = coloring {
            let bit = 1u32 << c.color(x);
            if colors & bit != 0 {
                continue;
            }
            next_colors |= bit;
        }
        used[x as usize] = true;
        phi.push(x);
        search(g, f, coloring, phi, used, next_colors, out);
        phi.pop();
        used[x as usize] = false;
    }
}

/// Every injective map `V(F) -> V(G)` sending edges to edges.
pub fn brute_force_all(g: &Graph, f: &Graph) -> OccurrenceSet {
    let mut out = OccurrenceSet::new(Mode::AllMappings);
    if f.vertex_count() <= g.vertex_count() {
        let mut used = vec![false; g.vertex_count()];
        search(g, f, None, &mut Vec::new(), &mut used, 0, &mut out);
    }
    out
}

/// The maps of [`brute_force_all`] whose image is rainbow under `coloring`.
pub fn brute_force_colorful(g: &Graph, f: &Graph, coloring: &Coloring) -> OccurrenceSet {
    let mut out = OccurrenceSet::new(Mode::AllMappings);
    if f.vertex_count() <= g.vertex_count() {
        let mut used = vec![false; g.vertex_count()];
        search(g, f, Some(coloring), &mut Vec::new(), &mut used, 0, &mut out);
    }
    out
}
