//! Simple undirected graphs, distance layers, and line-graph powers.
//!
//! Vertices are `u32` ids in `[0, n)`. Edge ids are canonical: the edge list
//! is kept sorted lexicographically by `(min, max)` endpoint pair, and an
//! edge's id is its position in that list. Every derived structure (conflict
//! graphs, colorings, traces) refers to edges by these ids.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Vertex = u32;
pub type EdgeId = u32;
pub type Color = u32;

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    edges: Vec<(Vertex, Vertex)>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n())
            .field("m", &self.m())
            .finish()
    }
}

impl Graph {
    /// Builds a graph on `n` vertices. Duplicate pairs (in either
    /// orientation) are merged; self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        let mut edges = Vec::new();
        for (u, v) in pairs {
            if u == v {
                return Err(Error::SelfLoop { line: None, vertex: u });
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::VertexOutOfRange {
                    vertex: u.max(v),
                    n,
                });
            }
            edges.push((u.min(v), u.max(v)));
        }
        edges.sort_unstable();
        edges.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { adjacency, edges })
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Returns `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.adjacency.first().map(Vec::len)?;
        self.adjacency.iter().all(|a| a.len() == d).then_some(d)
    }

    /// Canonical edge table; the index of a pair is its edge id.
    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn endpoints(&self, e: EdgeId) -> (Vertex, Vertex) {
        self.edges[e as usize]
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        let key = (u.min(v), u.max(v));
        self.edges.binary_search(&key).ok().map(|i| i as EdgeId)
    }

    /// Edge ids incident to `v`, in neighbor order.
    pub fn incident_edges(&self, v: Vertex) -> impl Iterator<Item = EdgeId> + '_ {
        self.adjacency[v as usize]
            .iter()
            .map(move |&w| self.edge_id(v, w).expect("adjacency and edge table agree"))
    }

    /// Breadth-first distances from `sources`, truncated at `max_depth`.
    /// Unreached vertices get `None`.
    pub fn bfs_distances(&self, sources: &[Vertex], max_depth: Option<usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize].is_none() {
                dist[s as usize] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize].unwrap();
            if max_depth.is_some_and(|cap| du >= cap) {
                continue;
            }
            for &w in self.neighbors(u) {
                if dist[w as usize].is_none() {
                    dist[w as usize] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// `N_i(v)`: the vertices at distance exactly `i` from `v`, sorted.
    pub fn vertex_ring(&self, v: Vertex, i: usize) -> Vec<Vertex> {
        let dist = self.bfs_distances(&[v], Some(i));
        (0..self.n() as Vertex)
            .filter(|&u| dist[u as usize] == Some(i))
            .collect()
    }

    /// `E_i(v)` for `i >= 1`: `E_1(v)` is the set of edges at `v`, and
    /// `E_i(v)` holds the edges not in an earlier ring that touch an edge of
    /// `E_{i-1}(v)`. An edge lands in ring `i` exactly when its nearer
    /// endpoint is at distance `i - 1` from `v`.
    pub fn edge_ring(&self, v: Vertex, i: usize) -> Vec<EdgeId> {
        assert!(i >= 1, "edge rings are indexed from 1");
        let dist = self.bfs_distances(&[v], Some(i - 1));
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| {
                let near = match (dist[a as usize], dist[b as usize]) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                };
                near == Some(i - 1)
            })
            .map(|(id, _)| id as EdgeId)
            .collect()
    }

    /// Number of common neighbors of two distinct vertices.
    pub fn codegree(&self, u: Vertex, v: Vertex) -> Result<usize> {
        if u == v {
            return Err(Error::InvalidParameter(format!(
                "codegree needs two distinct vertices, got {u} twice"
            )));
        }
        Ok(sorted_intersection_len(self.neighbors(u), self.neighbors(v)))
    }

    /// Length of a shortest cycle, or `None` for forests.
    pub fn girth(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for s in 0..self.n() as Vertex {
            let mut dist = vec![usize::MAX; self.n()];
            let mut parent = vec![u32::MAX; self.n()];
            let mut queue = VecDeque::new();
            dist[s as usize] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = dist[u as usize];
                if best.is_some_and(|b| 2 * du + 1 >= b) {
                    break;
                }
                for &w in self.neighbors(u) {
                    if dist[w as usize] == usize::MAX {
                        dist[w as usize] = du + 1;
                        parent[w as usize] = u;
                        queue.push_back(w);
                    } else if parent[u as usize] != w {
                        let len = du + dist[w as usize] + 1;
                        best = Some(best.map_or(len, |b| b.min(len)));
                    }
                }
            }
        }
        best
    }

    /// Writes the canonical edge list, one `u v` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# n={} m={}", self.n(), self.m())?;
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// Writes the `edge_id u v` table that edge colorings refer to.
    pub fn write_edge_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (id, &(u, v)) in self.edges.iter().enumerate() {
            writeln!(out, "{id} {u} {v}")?;
        }
        Ok(())
    }
}

pub(crate) fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Dimacs,
}

/// Reads a graph from disk.
///
/// Edge lists hold one whitespace-separated `u v` pair per line with `#`
/// comments; the distinct ids are compacted to `[0, n)` in increasing order.
/// DIMACS files need a `p edge n m` header and 1-based `e u v` lines.
pub fn load_graph(path: &Path, format: GraphFormat) -> Result<Graph> {
    let text = fs::read_to_string(path)?;
    parse_graph(&text, format)
}

pub fn parse_graph(text: &str, format: GraphFormat) -> Result<Graph> {
    match format {
        GraphFormat::EdgeList => parse_edge_list(text),
        GraphFormat::Dimacs => parse_dimacs(text),
    }
}

fn parse_id(tok: &str, line: usize) -> Result<u64> {
    tok.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected a nonnegative integer, found {tok:?}"),
    })
}

fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut raw = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected two vertex ids, found {} tokens", toks.len()),
            });
        }
        let u = parse_id(toks[0], lineno)?;
        let v = parse_id(toks[1], lineno)?;
        if u == v {
            return Err(Error::SelfLoop {
                line: Some(lineno),
                vertex: u as u32,
            });
        }
        raw.push((u, v));
    }
    let mut ids: BTreeMap<u64, u32> = BTreeMap::new();
    for &(u, v) in &raw {
        ids.insert(u, 0);
        ids.insert(v, 0);
    }
    for (next, slot) in ids.values_mut().enumerate() {
        *slot = next as u32;
    }
    let n = ids.len();
    Graph::from_edges(n, raw.into_iter().map(|(u, v)| (ids[&u], ids[&v])))
}

fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            None | Some("c") => {}
            Some("p") => {
                if toks.len() != 4 || (toks[1] != "edge" && toks[1] != "col") {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "expected `p edge <n> <m>`".into(),
                    });
                }
                n = Some(parse_id(toks[2], lineno)? as usize);
            }
            Some("e") => {
                let Some(n) = n else {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "edge line before the `p` header".into(),
                    });
                };
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "expected `e <u> <v>`".into(),
                    });
                }
                let u = parse_id(toks[1], lineno)?;
                let v = parse_id(toks[2], lineno)?;
                if u == 0 || v == 0 || u as usize > n || v as usize > n {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("vertex id outside 1..={n}"),
                    });
                }
                if u == v {
                    return Err(Error::SelfLoop {
                        line: Some(lineno),
                        vertex: (u - 1) as u32,
                    });
                }
                pairs.push(((u - 1) as u32, (v - 1) as u32));
            }
            Some(other) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unknown DIMACS line type {other:?}"),
                });
            }
        }
    }
    let n = n.ok_or(Error::Parse {
        line: 0,
        message: "missing `p edge` header".into(),
    })?;
    Graph::from_edges(n, pairs)
}

/// The distance-`t` conflict graph `L(G)^t`: one vertex per base edge, two
/// base edges adjacent when some endpoint of one lies within distance
/// `t - 1` of some endpoint of the other. For `t = 2` this is the square of
/// the line graph, whose proper colorings are strong edge colorings.
#[derive(Debug, Clone)]
pub struct ConflictGraph {
    base: Graph,
    t: usize,
    graph: Graph,
}

impl ConflictGraph {
    /// Builds `L(G)^t` by a depth-`(t-1)` BFS from both endpoints of every
    /// base edge. Memory is `O(sum of conflict degrees)`.
    pub fn build(base: &Graph, t: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::InvalidParameter(format!(
                "distance parameter t must be at least 2, got {t}"
            )));
        }
        let m = base.m();
        // Per-vertex incident edge ids, aligned with adjacency.
        let incident: Vec<Vec<EdgeId>> = (0..base.n() as Vertex)
            .map(|v| base.incident_edges(v).collect())
            .collect();
        let adjacency: Vec<Vec<EdgeId>> = (0..m as EdgeId)
            .into_par_iter()
            .map(|e| {
                let (a, b) = base.endpoints(e);
                let reach = reach_within(base, &[a, b], t - 1);
                let mut out: Vec<EdgeId> = reach
                    .iter()
                    .flat_map(|&x| incident[x as usize].iter().copied())
                    .filter(|&f| f != e)
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
        let mut pairs = Vec::new();
        for (e, list) in adjacency.iter().enumerate() {
            for &f in list {
                if (e as EdgeId) < f {
                    pairs.push((e as EdgeId, f));
                }
            }
        }
        let graph = Graph::from_edges(m, pairs)?;
        Ok(ConflictGraph {
            base: base.clone(),
            t,
            graph,
        })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// The conflict graph itself; its vertex ids are base edge ids.
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn neighbors(&self, e: EdgeId) -> &[EdgeId] {
        self.graph.neighbors(e)
    }

    pub fn max_degree(&self) -> usize {
        self.graph.max_degree()
    }

    /// `2 * sum_{j=1..t} (d-1)^j`, the worst-case conflict degree for base
    /// maximum degree `d`. Equals `2 d (d-1)` when `t = 2`.
    pub fn degree_bound(&self) -> u64 {
        let b = self.base.max_degree().saturating_sub(1) as u64;
        2 * (1..=self.t as u32).map(|j| b.pow(j)).sum::<u64>()
    }
}

/// Vertices within distance `depth` of the source set, unsorted.
fn reach_within(g: &Graph, sources: &[Vertex], depth: usize) -> Vec<Vertex> {
    let mut visited: HashSet<Vertex> = sources.iter().copied().collect();
    let mut seen: Vec<Vertex> = visited.iter().copied().collect();
    let mut frontier = seen.clone();
    for _ in 0..depth {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in g.neighbors(u) {
                if visited.insert(w) {
                    next.push(w);
                }
            }
        }
        seen.extend_from_slice(&next);
        frontier = next;
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub a: u32,
    pub b: u32,
    pub color: Color,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColoringReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub colors_used: usize,
    pub class_sizes: BTreeMap<Color, usize>,
    /// Elements whose color lies outside the declared palette.
    pub out_of_palette: Vec<(u32, Color)>,
}

/// Checks that no two adjacent vertices of `h` share a color. Uncolored
/// vertices (`None`) impose nothing.
pub fn verify_coloring(h: &Graph, coloring: &[Option<Color>], palette: Option<u32>) -> ColoringReport {
    assert_eq!(coloring.len(), h.n(), "coloring must cover every vertex slot");
    let mut violations = Vec::new();
    for &(u, v) in h.edges() {
        if let (Some(a), Some(b)) = (coloring[u as usize], coloring[v as usize]) {
            if a == b {
                violations.push(Violation { a: u, b: v, color: a });
            }
        }
    }
    report_from(coloring, violations, palette)
}

fn report_from(coloring: &[Option<Color>], violations: Vec<Violation>, palette: Option<u32>) -> ColoringReport {
    let mut class_sizes = BTreeMap::new();
    let mut out_of_palette = Vec::new();
    for (x, c) in coloring.iter().enumerate() {
        if let Some(c) = *c {
            *class_sizes.entry(c).or_insert(0) += 1;
            if palette.is_some_and(|p| c >= p) {
                out_of_palette.push((x as u32, c));
            }
        }
    }
    ColoringReport {
        valid: violations.is_empty(),
        violations,
        colors_used: class_sizes.len(),
        class_sizes,
        out_of_palette,
    }
}

/// Checks a distance-`t` edge coloring of `base` directly: within each
/// color class, no endpoint of one edge may lie within distance `t - 1` of
/// an endpoint of another. For `t = 2` this says each class is an induced
/// matching. Independent of the conflict graph construction.
pub fn verify_edge_coloring_by_classes(base: &Graph, t: usize, coloring: &[Option<Color>]) -> ColoringReport {
    assert_eq!(coloring.len(), base.m());
    let mut classes: BTreeMap<Color, Vec<EdgeId>> = BTreeMap::new();
    for (e, c) in coloring.iter().enumerate() {
        if let Some(c) = *c {
            classes.entry(c).or_default().push(e as EdgeId);
        }
    }
    let mut owner = vec![u32::MAX; base.n()];
    let mut violations = Vec::new();
    for (&color, members) in &classes {
        for &e in members {
            let (a, b) = base.endpoints(e);
            for x in [a, b] {
                if owner[x as usize] != u32::MAX && owner[x as usize] != e {
                    let f = owner[x as usize];
                    violations.push(Violation { a: f.min(e), b: f.max(e), color });
                }
                owner[x as usize] = e;
            }
        }
        for &e in members {
            let (a, b) = base.endpoints(e);
            let dist = base.bfs_distances(&[a, b], Some(t - 1));
            for &f in members {
                if f <= e {
                    continue;
                }
                let (x, y) = base.endpoints(f);
                if dist[x as usize].is_some() || dist[y as usize].is_some() {
                    violations.push(Violation { a: e, b: f, color });
                }
            }
        }
        for &e in members {
            let (a, b) = base.endpoints(e);
            owner[a as usize] = u32::MAX;
            owner[b as usize] = u32::MAX;
        }
    }
    violations.sort_by_key(|v| (v.a, v.b));
    violations.dedup();
    report_from(coloring, violations, None)
}

/// Runs both the conflict-graph check and the per-class check; the two must
/// agree on validity.
pub fn verify_edge_coloring(cg: &ConflictGraph, coloring: &[Option<Color>], palette: Option<u32>) -> ColoringReport {
    let report = verify_coloring(cg.graph(), coloring, palette);
    let direct = verify_edge_coloring_by_classes(cg.base(), cg.t(), coloring);
    assert_eq!(
        report.valid, direct.valid,
        "conflict-graph and per-class verification disagree"
    );
    report
}

/// Writes `edge_id color` lines for every colored element.
pub fn write_coloring<W: Write>(coloring: &[Option<Color>], mut out: W) -> std::io::Result<()> {
    for (id, c) in coloring.iter().enumerate() {
        if let Some(c) = c {
            writeln!(out, "{id} {c}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: u32) -> Graph {
        Graph::from_edges(n as usize, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn path4() -> Graph {
        parse_graph("p edge 4 3\ne 1 2\ne 2 3\ne 3 4\n", GraphFormat::Dimacs).unwrap()
    }

    fn ids(g: &Graph, pairs: &[(u32, u32)]) -> Vec<EdgeId> {
        let mut v: Vec<_> = pairs.iter().map(|&(a, b)| g.edge_id(a, b).unwrap()).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn edge_list_triangle() {
        let g = parse_graph("0 1\n1 2\n2 0\n", GraphFormat::EdgeList).unwrap();
        assert_eq!((g.n(), g.m()), (3, 3));
    }

    #[test]
    fn edge_list_self_loop_has_line_number() {
        let err = parse_graph("0 0\n", GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { line: Some(1), .. }), "{err:?}");
    }

    #[test]
    fn edge_list_compacts_and_dedups() {
        let g = parse_graph("# comment\n10 30\n30 10\n30 20 # trailing\n", GraphFormat::EdgeList).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
    }

    #[test]
    fn edge_list_parse_error_reports_line() {
        let err = parse_graph("0 1\n1 x\n", GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn dimacs_path() {
        let g = path4();
        let degs: Vec<_> = (0..4).map(|v| g.degree(v)).collect();
        assert_eq!(degs, vec![1, 2, 2, 1]);
    }

    #[test]
    fn vertex_rings() {
        assert_eq!(path4().vertex_ring(0, 2), vec![2]);
        assert_eq!(cycle(6).vertex_ring(0, 3), vec![3]);
        assert_eq!(cycle(6).vertex_ring(4, 0), vec![4]);
    }

    #[test]
    fn edge_rings_on_c6() {
        let g = cycle(6);
        assert_eq!(g.edge_ring(0, 1), ids(&g, &[(0, 1), (5, 0)]));
        assert_eq!(g.edge_ring(0, 2), ids(&g, &[(1, 2), (4, 5)]));
        assert_eq!(g.edge_ring(0, 3), ids(&g, &[(2, 3), (3, 4)]));
    }

    #[test]
    fn edge_rings_exhaust() {
        let k3 = cycle(3);
        assert_eq!(k3.edge_ring(0, 2), ids(&k3, &[(1, 2)]));
        assert!(k3.edge_ring(0, 3).is_empty());
        let star = Graph::from_edges(5, (1..5).map(|l| (0, l))).unwrap();
        assert_eq!(star.edge_ring(1, 2), ids(&star, &[(0, 2), (0, 3), (0, 4)]));
        assert!(star.edge_ring(1, 3).is_empty());
    }

    #[test]
    fn conflict_graph_examples() {
        let c5 = ConflictGraph::build(&cycle(5), 2).unwrap();
        assert_eq!(c5.graph().m(), 10);
        let c6 = ConflictGraph::build(&cycle(6), 2).unwrap();
        assert!((0..6).all(|e| c6.neighbors(e).len() == 4));
        let p4 = ConflictGraph::build(&path4(), 2).unwrap();
        assert_eq!(p4.graph().m(), 3);
        assert!(ConflictGraph::build(&path4(), 1).is_err());
    }

    #[test]
    fn codegrees() {
        let k23 = Graph::from_edges(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)]).unwrap();
        assert_eq!(k23.codegree(0, 1).unwrap(), 3);
        assert_eq!(cycle(6).codegree(0, 2).unwrap(), 1);
        assert_eq!(Graph::empty(2).codegree(0, 1).unwrap(), 0);
        assert!(k23.codegree(1, 1).is_err());
    }

    #[test]
    fn verify_c6_strong_coloring() {
        let g = cycle(6);
        let cg = ConflictGraph::build(&g, 2).unwrap();
        // Around the cycle: edges (0,1),(1,2),...,(5,0).
        let mut coloring = vec![None; 6];
        for i in 0..6u32 {
            let e = g.edge_id(i, (i + 1) % 6).unwrap();
            coloring[e as usize] = Some(i % 3 + 1);
        }
        let r = verify_edge_coloring(&cg, &coloring, None);
        assert!(r.valid);
        assert_eq!(r.colors_used, 3);
    }

    #[test]
    fn verify_c5_four_colors_invalid() {
        let g = cycle(5);
        let cg = ConflictGraph::build(&g, 2).unwrap();
        let coloring = vec![Some(0), Some(1), Some(2), Some(3), Some(0)];
        assert!(!verify_edge_coloring(&cg, &coloring, None).valid);
    }

    #[test]
    fn verify_empty_and_palette() {
        let g = cycle(5);
        let r = verify_coloring(&g, &[None; 5], Some(3));
        assert!(r.valid && r.colors_used == 0);
        let r = verify_coloring(&g, &[Some(7), None, None, None, None], Some(3));
        assert!(r.valid);
        assert_eq!(r.out_of_palette, vec![(0, 7)]);
    }

    #[test]
    fn girth_values() {
        assert_eq!(cycle(7).girth(), Some(7));
        assert_eq!(path4().girth(), None);
    }
}
