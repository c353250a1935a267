//! Exact ground truth for small instances.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{Color, ConflictGraph, Graph, Vertex};

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// Exact optimum when the search finished.
    pub value: Option<usize>,
    pub lower: usize,
    pub upper: usize,
    /// A coloring with `upper` colors.
    pub certificate: Vec<Color>,
    pub nodes: u64,
    pub millis: u128,
}

/// Chromatic number by DSATUR branch and bound: a greedy clique gives the
/// lower bound, greedy DSATUR the first upper bound, and the search assigns
/// colors to the most saturated vertex, introducing new colors in order.
pub fn exact_chromatic_number(h: &Graph, budget: u64) -> OracleResult {
    let started = Instant::now();
    let n = h.n();
    if n == 0 {
        return OracleResult {
            value: Some(0),
            lower: 0,
            upper: 0,
            certificate: Vec::new(),
            nodes: 0,
            millis: 0,
        };
    }
    let lower = greedy_clique(h).len();
    let mut search = Dsatur::new(h);
    let greedy = search.greedy();
    let upper = greedy.iter().max().map_or(0, |&c| c as usize + 1);
    search.best = greedy;
    search.upper = upper;
    search.lower = lower;
    search.budget = budget;
    let finished = lower == upper || search.run();
    OracleResult {
        value: finished.then_some(search.upper),
        lower: if finished { search.upper } else { lower },
        upper: search.upper,
        certificate: search.best,
        nodes: search.nodes,
        millis: started.elapsed().as_millis(),
    }
}

/// `chi(L(G)^t)`.
pub fn exact_strong_chromatic_index(g: &Graph, t: usize, budget: u64) -> Result<OracleResult> {
    let cg = ConflictGraph::build(g, t)?;
    Ok(exact_chromatic_number(cg.graph(), budget))
}

fn greedy_clique(h: &Graph) -> Vec<Vertex> {
    let mut best = Vec::new();
    for seed in 0..h.n() as Vertex {
        let mut clique = vec![seed];
        let mut cands: Vec<Vertex> = h.neighbors(seed).to_vec();
        while !cands.is_empty() {
            let &next = cands
                .iter()
                .max_by_key(|&&c| (cands.iter().filter(|&&d| h.has_edge(c, d)).count(), std::cmp::Reverse(c)))
                .unwrap();
            clique.push(next);
            cands.retain(|&c| c != next && h.has_edge(c, next));
        }
        if clique.len() > best.len() {
            best = clique;
        }
    }
    best
}

struct Dsatur<'a> {
    h: &'a Graph,
    color: Vec<Option<Color>>,
    /// `adj_count[v][c]`: colored neighbors of `v` with color `c`.
    adj_count: Vec<Vec<u32>>,
    saturation: Vec<usize>,
    best: Vec<Color>,
    upper: usize,
    lower: usize,
    nodes: u64,
    budget: u64,
}

impl<'a> Dsatur<'a> {
    fn new(h: &'a Graph) -> Self {
        let n = h.n();
        Dsatur {
            h,
            color: vec![None; n],
            adj_count: vec![vec![0; n + 1]; n],
            saturation: vec![0; n],
            best: Vec::new(),
            upper: n,
            lower: 1,
            nodes: 0,
            budget: 0,
        }
    }

    fn pick(&self) -> Option<Vertex> {
        (0..self.h.n() as Vertex)
            .filter(|&v| self.color[v as usize].is_none())
            .max_by_key(|&v| (self.saturation[v as usize], self.h.degree(v), std::cmp::Reverse(v)))
    }

    fn assign(&mut self, v: Vertex, c: Color) {
        self.color[v as usize] = Some(c);
        for &u in self.h.neighbors(v) {
            let slot = &mut self.adj_count[u as usize][c as usize];
            if *slot == 0 {
                self.saturation[u as usize] += 1;
            }
            *slot += 1;
        }
    }

    fn unassign(&mut self, v: Vertex, c: Color) {
        self.color[v as usize] = None;
        for &u in self.h.neighbors(v) {
            let slot = &mut self.adj_count[u as usize][c as usize];
            *slot -= 1;
            if *slot == 0 {
                self.saturation[u as usize] -= 1;
            }
        }
    }

    fn greedy(&mut self) -> Vec<Color> {
        while let Some(v) = self.pick() {
            let c = (0..).find(|&c| self.adj_count[v as usize][c as usize] == 0).unwrap();
            self.assign(v, c);
        }
        let out: Vec<Color> = self.color.iter().map(|c| c.unwrap()).collect();
        for v in 0..self.h.n() as Vertex {
            let c = self.color[v as usize].unwrap();
            self.unassign(v, c);
        }
        out
    }

    /// True when the search space was exhausted within budget.
    fn run(&mut self) -> bool {
        self.branch(0) && self.nodes <= self.budget
    }

    /// Returns false when the budget ran out.
    fn branch(&mut self, used: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let Some(v) = self.pick() else {
            if used < self.upper {
                self.upper = used;
                self.best = self.color.iter().map(|c| c.unwrap()).collect();
            }
            return true;
        };
        let limit = (used + 1).min(self.upper - 1);
        for c in 0..limit as Color {
            if self.upper <= self.lower {
                break;
            }
            if self.adj_count[v as usize][c as usize] > 0 || (c as usize) >= self.upper - 1 {
                continue;
            }
            self.assign(v, c);
            let ok = self.branch(used.max(c as usize + 1));
            self.unassign(v, c);
            if !ok {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ListColoringResult {
    Sat(Vec<Color>),
    Unsat,
    Unknown,
}

/// Backtracking list coloring with minimum-remaining-values ordering,
/// forward checking, and propagation of singleton domains.
pub fn exact_list_coloring(h: &Graph, lists: &[Vec<Color>], budget: u64) -> (ListColoringResult, u64) {
    assert_eq!(lists.len(), h.n());
    let mut domains: Vec<Vec<Color>> = lists
        .iter()
        .map(|l| {
            let mut d = l.clone();
            d.sort_unstable();
            d.dedup();
            d
        })
        .collect();
    let mut assigned = vec![None; h.n()];
    let mut nodes = 0;
    let result = match propagate(h, &mut domains, &mut assigned) {
        false => Some(false),
        true => list_search(h, domains, assigned.clone(), &mut nodes, budget, &mut assigned),
    };
    let out = match result {
        Some(true) => ListColoringResult::Sat(assigned.into_iter().map(Option::unwrap).collect()),
        Some(false) => ListColoringResult::Unsat,
        None => ListColoringResult::Unknown,
    };
    (out, nodes)
}

/// Fixes singleton domains and removes their colors from neighbors until
/// nothing changes. False on a wipe-out.
fn propagate(h: &Graph, domains: &mut [Vec<Color>], assigned: &mut [Option<Color>]) -> bool {
    loop {
        let Some(v) = (0..h.n()).find(|&v| assigned[v].is_none() && domains[v].len() == 1) else {
            return domains.iter().zip(assigned.iter()).all(|(d, a)| a.is_some() || !d.is_empty());
        };
        let c = domains[v][0];
        assigned[v] = Some(c);
        for &u in h.neighbors(v as Vertex) {
            let u = u as usize;
            if assigned[u] == Some(c) {
                return false;
            }
            if assigned[u].is_none() {
                domains[u].retain(|&x| x != c);
                if domains[u].is_empty() {
                    return false;
                }
            }
        }
    }
}

fn list_search(
    h: &Graph,
    domains: Vec<Vec<Color>>,
    assigned: Vec<Option<Color>>,
    nodes: &mut u64,
    budget: u64,
    out: &mut Vec<Option<Color>>,
) -> Option<bool> {
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    let Some(v) = (0..h.n()).filter(|&v| assigned[v].is_none()).min_by_key(|&v| (domains[v].len(), v)) else {
        out.clone_from(&assigned);
        return Some(true);
    };
    for &c in &domains[v] {
        let mut d = domains.clone();
        let mut a = assigned.clone();
        d[v] = vec![c];
        if !propagate(h, &mut d, &mut a) {
            continue;
        }
        match list_search(h, d, a, nodes, budget, out) {
            Some(false) => continue,
            other => return other,
        }
    }
    Some(false)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum BicliqueResult {
    Found { left: Vec<Vertex>, right: Vec<Vertex> },
    Absent,
    Unknown,
}

/// Searches for `s` vertices with at least `t` common neighbors, i.e. a
/// `K_{s,t}` subgraph with the `s` side on the left.
pub fn contains_biclique(g: &Graph, s: usize, t: usize, budget: u64) -> BicliqueResult {
    if s == 0 || t == 0 {
        return BicliqueResult::Found { left: Vec::new(), right: Vec::new() };
    }
    let mut nodes = 0;
    let mut chosen = Vec::with_capacity(s);
    let all: Vec<Vertex> = (0..g.n() as Vertex).collect();
    match biclique_search(g, s, t, 0, &all, &mut chosen, &mut nodes, budget) {
        Some(Some(right)) => BicliqueResult::Found { left: chosen, right },
        Some(None) => BicliqueResult::Absent,
        None => BicliqueResult::Unknown,
    }
}

#[allow(clippy::too_many_arguments)]
fn biclique_search(
    g: &Graph,
    s: usize,
    t: usize,
    from: Vertex,
    common: &[Vertex],
    chosen: &mut Vec<Vertex>,
    nodes: &mut u64,
    budget: u64,
) -> Option<Option<Vec<Vertex>>> {
    *nodes += 1;
    if *nodes > budget {
        return None;
    }
    if chosen.len() == s {
        return Some((common.len() >= t).then(|| common[..t].to_vec()));
    }
    for v in from..g.n() as Vertex {
        let next: Vec<Vertex> = common.iter().copied().filter(|&u| g.has_edge(u, v)).collect();
        if next.len() < t {
            continue;
        }
        chosen.push(v);
        match biclique_search(g, s, t, v + 1, &next, chosen, nodes, budget)? {
            Some(w) => return Some(Some(w)),
            None => {
                chosen.pop();
            }
        }
    }
    Some(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_c5_blowup, gen_complete_bipartite, gen_cycle, gen_petersen, gen_projective_incidence};
    use crate::graph::verify_coloring;

    fn complete(n: u32) -> Graph {
        Graph::from_edges(n as usize, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)))).unwrap()
    }

    fn chi(h: &Graph) -> usize {
        let r = exact_chromatic_number(h, DEFAULT_NODE_BUDGET);
        let cert: Vec<Option<Color>> = r.certificate.iter().map(|&c| Some(c)).collect();
        let rep = verify_coloring(h, &cert, None);
        assert!(rep.valid);
        assert_eq!(rep.colors_used, r.upper);
        r.value.unwrap()
    }

    #[test]
    fn chromatic_numbers() {
        assert_eq!(chi(&complete(5)), 5);
        assert_eq!(chi(&gen_cycle(5).unwrap()), 3);
        assert_eq!(chi(&gen_petersen()), 3);
        assert_eq!(chi(&Graph::empty(4)), 1);
        assert_eq!(chi(&Graph::empty(0)), 0);
    }

    #[test]
    fn strong_chromatic_indices() {
        let sci = |g: &Graph| exact_strong_chromatic_index(g, 2, DEFAULT_NODE_BUDGET).unwrap().value.unwrap();
        assert_eq!(sci(&gen_cycle(5).unwrap()), 5);
        assert_eq!(sci(&gen_cycle(6).unwrap()), 3);
        assert_eq!(sci(&gen_cycle(7).unwrap()), 4);
        assert_eq!(sci(&gen_complete_bipartite(3, 3).unwrap()), 9);
    }

    #[test]
    fn cycle_closed_form() {
        for n in 3..=12 {
            let expect = if n % 3 == 0 {
                3
            } else if n == 5 {
                5
            } else {
                4
            };
            let r = exact_strong_chromatic_index(&gen_cycle(n).unwrap(), 2, DEFAULT_NODE_BUDGET).unwrap();
            assert_eq!(r.value, Some(expect), "C_{n}");
        }
    }

    #[test]
    fn budget_gives_interval() {
        let r = exact_chromatic_number(&gen_cycle(7).unwrap(), 1);
        assert_eq!(r.value, None);
        assert!(r.lower <= 3 && r.upper >= 3);
    }

    #[test]
    fn list_coloring_examples() {
        let k3 = complete(3);
        assert_eq!(exact_list_coloring(&k3, &vec![vec![1, 2]; 3], 1000).0, ListColoringResult::Unsat);
        assert_eq!(
            exact_list_coloring(&k3, &[vec![1], vec![2], vec![3]], 1000).0,
            ListColoringResult::Sat(vec![1, 2, 3])
        );
        let c4 = gen_cycle(4).unwrap();
        match exact_list_coloring(&c4, &vec![vec![1, 2]; 4], 1000).0 {
            ListColoringResult::Sat(c) => {
                assert!(verify_coloring(&c4, &c.iter().map(|&x| Some(x)).collect::<Vec<_>>(), None).valid)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn biclique_examples() {
        match contains_biclique(&gen_cycle(4).unwrap(), 2, 2, 10_000) {
            BicliqueResult::Found { left, right } => {
                let mut all = [left, right].concat();
                all.sort_unstable();
                assert_eq!(all, vec![0, 1, 2, 3]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(contains_biclique(&gen_projective_incidence(2).unwrap(), 2, 2, 1_000_000), BicliqueResult::Absent);
        let b = gen_c5_blowup(2).unwrap();
        assert_eq!(contains_biclique(&b, 3, 3, 1_000_000), BicliqueResult::Absent);
        assert!(matches!(contains_biclique(&b, 2, 2, 1_000_000), BicliqueResult::Found { .. }));
        assert_eq!(contains_biclique(&complete(6), 3, 3, 1), BicliqueResult::Unknown);
    }
}
