//! Graphs, random bipartite instance families and self-avoiding-walk trees.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{budget, param};
use crate::rng::{self, Purpose};
use crate::Result;

/// Default cap on the number of SAW-tree (or truncated-tree) nodes.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Side of a vertex in a bipartite graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

/// Undirected graph on `0..n`, optionally bipartite, optionally with parallel edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    multigraph: bool,
    bipartition: Option<Vec<Side>>,
    // distinct neighbours with edge multiplicity, sorted by neighbour id
    adj: Vec<Vec<(usize, u32)>>,
    degree: Vec<usize>,
    max_degree: usize,
}

impl Graph {
    /// Validates and builds a graph. Edges are stored as `(min, max)` pairs in input order.
    pub fn new(
        n: usize,
        edges: &[(usize, usize)],
        multigraph: bool,
        bipartition: Option<Vec<Side>>,
    ) -> Result<Graph> {
        if let Some(b) = &bipartition {
            if b.len() != n {
                return param(format!("bipartition has {} labels for {} vertices", b.len(), n));
            }
        }
        let mut seen = HashSet::new();
        let mut stored = Vec::with_capacity(edges.len());
        let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return param(format!("edge ({u},{v}) has an endpoint outside 0..{n}"));
            }
            if u == v {
                return param(format!("self-loop at vertex {u}"));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) && !multigraph {
                return param(format!("duplicate edge ({},{}) in a simple graph", e.0, e.1));
            }
            if let Some(b) = &bipartition {
                if b[u] == b[v] {
                    return param(format!("edge ({u},{v}) does not cross the bipartition"));
                }
            }
            stored.push(e);
            degree[u] += 1;
            degree[v] += 1;
            for (a, b) in [(u, v), (v, u)] {
                match adj[a].iter_mut().find(|(w, _)| *w == b) {
                    Some(entry) => entry.1 += 1,
                    None => adj[a].push((b, 1)),
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        Ok(Graph { n, edges: stored, multigraph, bipartition, adj, degree, max_degree })
    }

    /// Simple graph without bipartition.
    pub fn simple(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        Graph::new(n, edges, false, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of edges, counting multiplicity.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn is_multigraph(&self) -> bool {
        self.multigraph
    }

    /// True when some pair of vertices carries more than one edge.
    pub fn has_parallel_edges(&self) -> bool {
        self.adj.iter().any(|l| l.iter().any(|&(_, m)| m > 1))
    }

    pub fn bipartition(&self) -> Option<&[Side]> {
        self.bipartition.as_deref()
    }

    /// Distinct neighbours of `v` with edge multiplicities.
    pub fn neighbors(&self, v: usize) -> &[(usize, u32)] {
        &self.adj[v]
    }

    /// Degree counting multiplicity.
    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u32 {
        self.adj[u].iter().find(|(w, _)| *w == v).map_or(0, |&(_, m)| m)
    }

    /// Bit mask of distinct neighbours; requires `n <= 64`.
    pub fn neighbor_mask(&self, v: usize) -> u64 {
        assert!(self.n <= 64, "neighbor_mask needs n <= 64");
        self.adj[v].iter().fold(0u64, |m, &(w, _)| m | (1u64 << w))
    }

    /// Adjacency matrix with multiplicities.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] += 1.0;
            a[(v, u)] += 1.0;
        }
        a
    }

    /// Size of L when the bipartition puts all of L before all of R.
    pub fn left_prefix(&self) -> Option<usize> {
        let b = self.bipartition.as_ref()?;
        let l = b.iter().take_while(|s| **s == Side::L).count();
        b[l..].iter().all(|s| *s == Side::R).then_some(l)
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(w, _) in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Text format: `n m [bipartite l] [multigraph]`, then one `u v` line per edge.
    pub fn to_text(&self) -> Result<String> {
        let mut s = format!("{} {}", self.n, self.edges.len());
        if self.bipartition.is_some() {
            match self.left_prefix() {
                Some(l) => write!(s, " bipartite {l}").unwrap(),
                None => return param("bipartition must list L before R to be written"),
            }
        }
        if self.multigraph {
            s.push_str(" multigraph");
        }
        s.push('\n');
        for &(u, v) in &self.edges {
            writeln!(s, "{u} {v}").unwrap();
        }
        Ok(s)
    }

    pub fn from_text(text: &str) -> Result<Graph> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = match lines.next() {
            Some(h) => h,
            None => return param("empty graph file"),
        };
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() < 2 {
            return param("graph header needs `n m`");
        }
        let n: usize = parse_tok(tok[0])?;
        let m: usize = parse_tok(tok[1])?;
        let mut bipartition = None;
        let mut multigraph = false;
        let mut i = 2;
        while i < tok.len() {
            match tok[i] {
                "bipartite" => {
                    let l: usize = parse_tok(tok.get(i + 1).copied().unwrap_or(""))?;
                    if l > n {
                        return param("bipartite left count exceeds n");
                    }
                    bipartition =
                        Some((0..n).map(|v| if v < l { Side::L } else { Side::R }).collect());
                    i += 2;
                }
                "multigraph" => {
                    multigraph = true;
                    i += 1;
                }
                other => return param(format!("unknown header token `{other}`")),
            }
        }
        let mut edges = Vec::with_capacity(m);
        for line in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 2 {
                return param(format!("bad edge line `{line}`"));
            }
            edges.push((parse_tok(t[0])?, parse_tok(t[1])?));
        }
        if edges.len() != m {
            return param(format!("header says {m} edges, found {}", edges.len()));
        }
        Graph::new(n, &edges, multigraph, bipartition)
    }
}

fn parse_tok(s: &str) -> Result<usize> {
    s.parse().map_err(|_| crate::Error::Param(format!("expected an integer, got `{s}`")))
}

/// The symmetric bipartite family: `L = 0..2n` holds `ℓ_i = i`, `R = 2n..4n` holds `r_i = 2n + i`.
/// Each of `delta` uniform perfect matchings on `[2n]` contributes `(ℓ_u, r_v)` and `(ℓ_v, r_u)`
/// per matched pair; coincident edges are merged.
pub fn gen_symmetric_bipartite(n: usize, delta: usize, seed: u64) -> Result<Graph> {
    if n == 0 || delta == 0 {
        return param("gen_symmetric_bipartite needs n >= 1 and delta >= 1");
    }
    let mut rng = rng::stream(seed, 0, Purpose::Graph);
    let side = 2 * n;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut perm: Vec<usize> = (0..side).collect();
    for _ in 0..delta {
        perm.sort_unstable();
        perm.shuffle(&mut rng);
        for pair in perm.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            for e in [(u, side + v), (v, side + u)] {
                if seen.insert(e) {
                    edges.push(e);
                }
            }
        }
    }
    let labels = (0..2 * side).map(|v| if v < side { Side::L } else { Side::R }).collect();
    Graph::new(2 * side, &edges, false, Some(labels))
}

/// Union of `delta` uniform perfect matchings between `L = 0..n` and `R = n..2n`.
/// With `multigraph` the union keeps multiplicities, otherwise coincident edges merge.
pub fn gen_regular_bipartite(n: usize, delta: usize, seed: u64, multigraph: bool) -> Result<Graph> {
    if n == 0 || delta == 0 {
        return param("gen_regular_bipartite needs n >= 1 and delta >= 1");
    }
    let mut rng = rng::stream(seed, 0, Purpose::Graph);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..delta {
        perm.sort_unstable();
        perm.shuffle(&mut rng);
        for (i, &j) in perm.iter().enumerate() {
            let e = (i, n + j);
            if multigraph || seen.insert(e) {
                edges.push(e);
            }
        }
    }
    let labels = (0..2 * n).map(|v| if v < n { Side::L } else { Side::R }).collect();
    Graph::new(2 * n, &edges, multigraph, Some(labels))
}

/// Uniform random simple `d`-regular graph by the pairing model with restarts.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n * d % 2 != 0 || d >= n {
        return param(format!("no simple {d}-regular graph on {n} vertices"));
    }
    let mut rng = rng::stream(seed, 1, Purpose::Graph);
    for _ in 0..100_000 {
        let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
        points.shuffle(&mut rng);
        let mut seen = HashSet::new();
        let ok = points.chunks(2).all(|p| p[0] != p[1] && seen.insert((p[0].min(p[1]), p[0].max(p[1]))));
        if ok {
            let edges: Vec<_> = points.chunks(2).map(|p| (p[0], p[1])).collect();
            return Graph::simple(n, &edges);
        }
    }
    budget("pairing model did not produce a simple graph")
}

/// Random simple graph with maximum degree at most `delta`: edges of `G(n, p)` are offered in
/// random order and kept while both endpoints have spare degree.
pub fn gen_bounded_degree(n: usize, delta: usize, p: f64, seed: u64) -> Result<Graph> {
    let mut rng = rng::stream(seed, 2, Purpose::Graph);
    let mut pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    pairs.shuffle(&mut rng);
    let mut deg = vec![0; n];
    let mut edges = Vec::new();
    for (u, v) in pairs {
        if rng.random::<f64>() < p && deg[u] < delta && deg[v] < delta {
            deg[u] += 1;
            deg[v] += 1;
            edges.push((u, v));
        }
    }
    Graph::simple(n, &edges)
}

/// Finite truncations of the infinite trees used by the percolation analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    /// Root has `Δ` children, every other vertex `Δ − 1`.
    Regular(usize),
    /// Every vertex has `d` children.
    Ary(usize),
}

/// Tree truncated at `depth` (root = 0, breadth-first numbering).
pub fn tree_graph(kind: TreeKind, depth: usize, node_budget: usize) -> Result<Graph> {
    let (root_children, children) = match kind {
        TreeKind::Regular(delta) => (delta, delta.saturating_sub(1)),
        TreeKind::Ary(d) => (d, d),
    };
    let mut total: usize = 1;
    let mut level: usize = 1;
    for k in 0..depth {
        level = level.saturating_mul(if k == 0 { root_children } else { children });
        total = total.saturating_add(level);
        if total > node_budget {
            return budget(format!("tree with depth {depth} exceeds {node_budget} nodes"));
        }
    }
    let mut edges = Vec::with_capacity(total.saturating_sub(1));
    let mut frontier = vec![0usize];
    let mut next_id = 1;
    for k in 0..depth {
        let c = if k == 0 { root_children } else { children };
        let mut next = Vec::with_capacity(frontier.len() * c);
        for &u in &frontier {
            for _ in 0..c {
                edges.push((u, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        frontier = next;
    }
    Graph::simple(next_id, &edges)
}

/// One node of a self-avoiding-walk tree.
#[derive(Clone, Debug, PartialEq)]
pub struct SawNode {
    /// Vertex of the source graph this node copies.
    pub origin: usize,
    pub parent: Option<usize>,
    /// `Some(±1)` on closure leaves only.
    pub pinning: Option<i8>,
    pub depth: usize,
    /// Multiplicity of the source edge joining this node to its parent.
    pub multiplicity: u32,
    pub children: Vec<usize>,
}

/// Self-avoiding-walk tree rooted at node 0.
#[derive(Clone, Debug, PartialEq)]
pub struct SawTree {
    pub nodes: Vec<SawNode>,
    /// `rank[v]` is the position of `v` in the order ≺.
    pub rank: Vec<usize>,
}

impl SawTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Source-graph walk from the root to `node`.
    pub fn walk(&self, node: usize) -> Vec<usize> {
        let mut w = Vec::new();
        let mut cur = Some(node);
        while let Some(c) = cur {
            w.push(self.nodes[c].origin);
            cur = self.nodes[c].parent;
        }
        w.reverse();
        w
    }

    pub fn pinned_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].pinning.is_some())
    }
}

/// Rank vector from an order listing vertices from smallest to largest (`None` = numeric order).
pub fn order_ranks(n: usize, order: Option<&[usize]>) -> Result<Vec<usize>> {
    match order {
        None => Ok((0..n).collect()),
        Some(o) => {
            if o.len() != n {
                return param("vertex order must list every vertex once");
            }
            let mut rank = vec![usize::MAX; n];
            for (r, &v) in o.iter().enumerate() {
                if v >= n || rank[v] != usize::MAX {
                    return param("vertex order must list every vertex once");
                }
                rank[v] = r;
            }
            Ok(rank)
        }
    }
}

/// Pinning of a closure leaf whose walk `path ++ [path[i]]` returns to `path[i]`:
/// `+1` iff `path[i+1] ≺ path.last()`.
#[inline]
pub fn closure_pinning(rank: &[usize], next_after_first_visit: usize, last: usize) -> i8 {
    if rank[next_after_first_visit] < rank[last] {
        1
    } else {
        -1
    }
}

/// Builds the SAW tree of `g` from `root`. Walks never step straight back along the edge
/// they arrived by; a walk that reaches an earlier vertex stops in a pinned leaf.
pub fn build_saw_tree(
    g: &Graph,
    root: usize,
    order: Option<&[usize]>,
    depth_limit: Option<usize>,
    node_budget: usize,
) -> Result<SawTree> {
    if root >= g.n() {
        return param(format!("root {root} out of range"));
    }
    let rank = order_ranks(g.n(), order)?;
    let limit = depth_limit.unwrap_or(usize::MAX);
    let mut nodes = vec![SawNode {
        origin: root,
        parent: None,
        pinning: None,
        depth: 0,
        multiplicity: 0,
        children: Vec::new(),
    }];
    let mut pos = vec![usize::MAX; g.n()];
    let mut path = vec![root];
    pos[root] = 0;
    // explicit DFS: (node id, next neighbour index)
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some(&(node, next)) = stack.last() {
        let u = nodes[node].origin;
        let depth = nodes[node].depth;
        let nbrs = g.neighbors(u);
        if depth >= limit || next >= nbrs.len() {
            stack.pop();
            pos[u] = usize::MAX;
            path.pop();
            continue;
        }
        let (w, mult) = nbrs[next];
        stack.last_mut().expect("non-empty").1 += 1;
        let prev = if path.len() >= 2 { Some(path[path.len() - 2]) } else { None };
        if Some(w) == prev {
            continue;
        }
        if nodes.len() >= node_budget {
            return budget(format!("SAW tree exceeds {node_budget} nodes"));
        }
        let id = nodes.len();
        if pos[w] != usize::MAX {
            let pin = closure_pinning(&rank, path[pos[w] + 1], u);
            nodes.push(SawNode {
                origin: w,
                parent: Some(node),
                pinning: Some(pin),
                depth: depth + 1,
                multiplicity: mult,
                children: Vec::new(),
            });
            nodes[node].children.push(id);
        } else {
            nodes.push(SawNode {
                origin: w,
                parent: Some(node),
                pinning: None,
                depth: depth + 1,
                multiplicity: mult,
                children: Vec::new(),
            });
            nodes[node].children.push(id);
            pos[w] = path.len();
            path.push(w);
            stack.push((id, 0));
        }
    }
    Ok(SawTree { nodes, rank })
}

/// Canonical code of a simple graph on at most 8 vertices: the minimum adjacency bit string over
/// all relabellings compatible with the colour-refinement partition.
pub fn canonical_code(n: usize, adj: &[u8]) -> u32 {
    assert!(n <= 8);
    let cells = refine(n, adj);
    let mut best = u32::MAX;
    let mut label = [0usize; 8];
    permute_cells(&cells, 0, 0, &mut label, &mut |label| {
        let mut code = 0u32;
        for u in 0..n {
            for v in (u + 1)..n {
                if adj[u] >> v & 1 == 1 {
                    let (a, b) = (label[u].min(label[v]), label[u].max(label[v]));
                    code |= 1 << pair_index(a, b);
                }
            }
        }
        best = best.min(code);
    });
    best
}

fn pair_index(a: usize, b: usize) -> usize {
    b * (b - 1) / 2 + a
}

fn refine(n: usize, adj: &[u8]) -> Vec<Vec<usize>> {
    let mut colour: Vec<usize> = (0..n).map(|v| adj[v].count_ones() as usize).collect();
    loop {
        let mut sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> =
                    (0..n).filter(|&w| adj[v] >> w & 1 == 1).map(|w| colour[w]).collect();
                nb.sort_unstable();
                (colour[v], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        let new: Vec<usize> =
            sigs.iter_mut().map(|s| distinct.binary_search(s).unwrap()).collect();
        let before = colour.iter().collect::<HashSet<_>>().len();
        let after = distinct.len();
        colour = new;
        if after == before {
            break;
        }
    }
    let k = colour.iter().max().map_or(0, |m| m + 1);
    let mut cells = vec![Vec::new(); k];
    for v in 0..n {
        cells[colour[v]].push(v);
    }
    cells
}

fn permute_cells(
    cells: &[Vec<usize>],
    ci: usize,
    offset: usize,
    label: &mut [usize; 8],
    visit: &mut impl FnMut(&[usize; 8]),
) {
    if ci == cells.len() {
        visit(label);
        return;
    }
    let mut cell = cells[ci].clone();
    let len = cell.len();
    heap_permutations(&mut cell, len, &mut |perm| {
        for (j, &v) in perm.iter().enumerate() {
            label[v] = offset + j;
        }
        permute_cells(cells, ci + 1, offset + len, label, visit);
    });
}

fn heap_permutations(a: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        f(a);
        return;
    }
    for i in 0..k - 1 {
        heap_permutations(a, k - 1, f);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
    heap_permutations(a, k - 1, f);
}

/// All connected simple graphs on exactly `n <= 8` vertices with maximum degree at most
/// `max_degree`, one per isomorphism class.
pub fn connected_graphs(n: usize, max_degree: usize) -> Vec<Graph> {
    assert!((1..=8).contains(&n), "connected_graphs supports 1..=8 vertices");
    let mut out = Vec::new();
    let mut level: Vec<Vec<u8>> = vec![vec![0u8; n]];
    let mut seen_all: HashSet<u32> = HashSet::new();
    seen_all.insert(canonical_code(n, &level[0]));
    loop {
        for adj in &level {
            if is_connected_mask(n, adj) {
                let edges: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                    .filter(|&(u, v)| adj[u] >> v & 1 == 1)
                    .collect();
                out.push(Graph::simple(n, &edges).expect("valid by construction"));
            }
        }
        let mut next = Vec::new();
        for adj in &level {
            for u in 0..n {
                for v in (u + 1)..n {
                    if adj[u] >> v & 1 == 1
                        || adj[u].count_ones() as usize >= max_degree
                        || adj[v].count_ones() as usize >= max_degree
                    {
                        continue;
                    }
                    let mut a = adj.clone();
                    a[u] |= 1 << v;
                    a[v] |= 1 << u;
                    if seen_all.insert(canonical_code(n, &a)) {
                        next.push(a);
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    out
}

fn is_connected_mask(n: usize, adj: &[u8]) -> bool {
    let mut seen: u8 = 1;
    let mut frontier: u8 = 1;
    while frontier != 0 {
        let mut next = 0u8;
        for v in 0..n {
            if frontier >> v & 1 == 1 {
                next |= adj[v];
            }
        }
        frontier = next & !seen;
        seen |= next;
    }
    seen.count_ones() as usize == n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_graph_examples() {
        let g = Graph::simple(2, &[(0, 1)]).unwrap();
        assert_eq!(g.max_degree(), 1);
        let g = Graph::new(3, &[(0, 1), (0, 1)], true, None).unwrap();
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.multiplicity(0, 1), 2);
        assert!(Graph::simple(2, &[(0, 0)]).is_err());
        assert!(Graph::simple(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::simple(2, &[(0, 2)]).is_err());
        let labels = vec![Side::L, Side::L];
        assert!(Graph::new(2, &[(0, 1)], false, Some(labels)).is_err());
    }

    #[test]
    fn symmetric_family_single_matching() {
        let g = gen_symmetric_bipartite(1, 1, 99).unwrap();
        let mut e = g.edges().to_vec();
        e.sort_unstable();
        // ℓ1 = 0, ℓ2 = 1, r1 = 2, r2 = 3
        assert_eq!(e, vec![(0, 3), (1, 2)]);
    }

    #[test]
    fn symmetric_family_is_side_symmetric() {
        let g = gen_symmetric_bipartite(4, 3, 5).unwrap();
        assert_eq!(g, gen_symmetric_bipartite(4, 3, 5).unwrap());
        assert!(g.max_degree() <= 3);
        for i in 0..8 {
            assert_eq!(g.degree(i), g.degree(8 + i));
            for &(w, _) in g.neighbors(i) {
                // (ℓ_i, r_j) present iff (ℓ_j, r_i) present
                let j = w - 8;
                assert_eq!(g.multiplicity(j, 8 + i), 1);
            }
        }
    }

    #[test]
    fn regular_family_examples() {
        let g = gen_regular_bipartite(1, 3, 0, true).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.max_degree(), 3);
        let g = gen_regular_bipartite(1, 3, 0, false).unwrap();
        assert_eq!(g.m(), 1);
        assert_eq!(g.max_degree(), 1);
        let g = gen_regular_bipartite(100, 3, 11, true).unwrap();
        assert!((0..200).all(|v| g.degree(v) == 3));
        assert_eq!(g.m(), 300);
    }

    #[test]
    fn truncated_trees() {
        let t = tree_graph(TreeKind::Ary(2), 1, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!((t.n(), t.m()), (3, 2));
        let t = tree_graph(TreeKind::Regular(3), 2, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(t.n(), 10);
        let t = tree_graph(TreeKind::Ary(2), 0, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(t.n(), 1);
        assert!(tree_graph(TreeKind::Ary(3), 30, 1000).is_err());
    }

    #[test]
    fn saw_tree_examples() {
        let edge = Graph::simple(2, &[(0, 1)]).unwrap();
        let t = build_saw_tree(&edge, 0, None, None, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.pinned_leaves().count(), 0);

        let tri = Graph::simple(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let t = build_saw_tree(&tri, 0, None, None, DEFAULT_NODE_BUDGET).unwrap();
        let pins: Vec<(Vec<usize>, i8)> =
            t.pinned_leaves().map(|i| (t.walk(i), t.nodes[i].pinning.unwrap())).collect();
        assert_eq!(pins.len(), 2);
        for (walk, pin) in pins {
            match walk.as_slice() {
                [0, 1, 2, 0] => assert_eq!(pin, 1),
                [0, 2, 1, 0] => assert_eq!(pin, -1),
                other => panic!("unexpected closure walk {other:?}"),
            }
        }

        let t = build_saw_tree(&tri, 0, None, Some(0), DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn text_round_trip() {
        let g = gen_regular_bipartite(5, 3, 1, true).unwrap();
        let s = g.to_text().unwrap();
        assert!(s.starts_with("10 15 bipartite 5 multigraph\n"));
        let h = Graph::from_text(&s).unwrap();
        assert_eq!(g, h);
        assert_eq!(h.to_text().unwrap(), s);
    }

    #[test]
    fn graph_census_counts() {
        // connected graphs with max degree ≤ 3: 1, 1, 2, 6 on 1..4 vertices (K4 included)
        let counts: Vec<usize> = (1..=4).map(|n| connected_graphs(n, 3).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 6]);
        // connected cubic graphs on 6 and 8 vertices: 2 and 5
        let cubic6 = connected_graphs(6, 3).iter().filter(|g| (0..6).all(|v| g.degree(v) == 3)).count();
        assert_eq!(cubic6, 2);
        let cubic8 = connected_graphs(8, 3).iter().filter(|g| (0..8).all(|v| g.degree(v) == 3)).count();
        assert_eq!(cubic8, 5);
    }
}
