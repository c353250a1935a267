//! Independent brute-force recomputations shared by the integration tests.
//! Nothing here calls the library's own distance, codegree or conflict code.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use nibble_core::generators::{gen_c5_blowup, gen_complete_bipartite, gen_cycle, gen_petersen, gen_projective_incidence, gen_random_regular};
use nibble_core::graph::{ConflictGraph, EdgeId, Graph, Vertex};
use nibble_core::nibble::ListState;
use nibble_core::structure::FamilyX;

/// All-pairs shortest path lengths by BFS from each vertex.
pub fn all_pairs_distances(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.n();
    let adj: Vec<HashSet<u32>> = (0..n as u32).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    (0..n)
        .map(|s| {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in &adj[u] {
                    if dist[w as usize] == usize::MAX {
                        dist[w as usize] = dist[u] + 1;
                        q.push_back(w as usize);
                    }
                }
            }
            dist
        })
        .collect()
}

/// Conflict adjacency straight from the definition: distinct edges whose
/// nearest endpoints are within distance `t - 1`.
pub fn brute_conflict(g: &Graph, t: usize) -> Vec<Vec<bool>> {
    let dist = all_pairs_distances(g);
    let edges = g.edges();
    let m = edges.len();
    let mut adj = vec![vec![false; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (a, b) = edges[i];
            let (c, d) = edges[j];
            let near = [dist[a as usize][c as usize], dist[a as usize][d as usize], dist[b as usize][c as usize], dist[b as usize][d as usize]]
                .into_iter()
                .min()
                .unwrap();
            adj[i][j] = near < t;
        }
    }
    adj
}

pub fn brute_codegree(g: &Graph, u: Vertex, v: Vertex) -> usize {
    let a: HashSet<u32> = g.neighbors(u).iter().copied().collect();
    g.neighbors(v).iter().filter(|w| a.contains(w)).count()
}

pub fn brute_vertex_friends(g: &Graph, theta: f64, u: Vertex, v: Vertex) -> bool {
    u == v || brute_codegree(g, u, v) as f64 >= theta
}

pub fn brute_edge_friends(g: &Graph, theta: f64, e: EdgeId, f: EdgeId) -> bool {
    let (a, b) = g.edges()[e as usize];
    let (c, d) = g.edges()[f as usize];
    [a, b].iter().any(|&p| [c, d].iter().any(|&q| brute_vertex_friends(g, theta, p, q)))
}

/// Maximum conflict-codegree over stranger pairs; `None` when no stranger
/// pair exists.
pub fn brute_stranger_audit(g: &Graph, t: usize, theta: f64) -> Option<usize> {
    let adj = brute_conflict(g, t);
    let m = adj.len();
    let mut best = None;
    for e in 0..m {
        for f in e + 1..m {
            if brute_edge_friends(g, theta, e as u32, f as u32) {
                continue;
            }
            let common = (0..m).filter(|&w| adj[e][w] && adj[f][w]).count();
            best = Some(best.map_or(common, |b: usize| b.max(common)));
        }
    }
    best
}

/// Some `s` vertices with `t` common neighbors, by plain subset enumeration.
pub fn brute_biclique(g: &Graph, s: usize, t: usize) -> bool {
    let n = g.n();
    let adj: Vec<HashSet<u32>> = (0..n as u32).map(|v| g.neighbors(v).iter().copied().collect()).collect();
    let mut found = false;
    subsets(n, s, &mut |left| {
        let common = (0..n as u32).filter(|w| left.iter().all(|&l| adj[l].contains(w))).count();
        if common >= t {
            found = true;
        }
    });
    found
}

pub fn subsets(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            go(n, k, i + 1, cur, f);
            cur.pop();
        }
    }
    go(n, k, 0, &mut Vec::new(), f);
}

/// Uncolored conflict neighbors of `v`, from the full conflict graph.
fn uncolored_neighbors(cg: &ConflictGraph, state: &ListState, v: Vertex) -> HashSet<u32> {
    cg.neighbors(v).iter().copied().filter(|&u| state.is_uncolored(u)).collect()
}

/// Largest `q(u, v, c)` over uncolored stranger pairs and shared colors.
pub fn brute_p3(cg: &ConflictGraph, state: &ListState, fx: &FamilyX) -> Option<usize> {
    let n = state.n() as u32;
    let mut best = None;
    for u in 0..n {
        for v in u + 1..n {
            if !state.is_uncolored(u) || !state.is_uncolored(v) || fx.edges_are_friends(u, v) {
                continue;
            }
            let nu = uncolored_neighbors(cg, state, u);
            let common: Vec<u32> = uncolored_neighbors(cg, state, v).into_iter().filter(|w| nu.contains(w)).collect();
            if common.is_empty() {
                continue;
            }
            for c in 0..state.k() as u32 {
                if state.contains(u, c) && state.contains(v, c) {
                    let q = common.iter().filter(|&&w| state.contains(w, c)).count();
                    if q > 0 {
                        best = Some(best.map_or(q, |b: usize| b.max(q)));
                    }
                }
            }
        }
    }
    best
}

/// Largest `q^X(u, v, c)` over sets with `B^X`, distinct friend pairs and
/// shared colors.
pub fn brute_p4(cg: &ConflictGraph, state: &ListState, fx: &FamilyX) -> Option<usize> {
    let mut best = None;
    for (id, set) in fx.sets().iter().enumerate() {
        let Some(bx) = fx.b_of(id) else { continue };
        let bx: HashSet<u32> = bx.iter().copied().collect();
        for &u in &set.members {
            for &v in &set.members {
                if u >= v || !state.is_uncolored(u) || !state.is_uncolored(v) || !fx.edges_are_friends(u, v) {
                    continue;
                }
                let nu = uncolored_neighbors(cg, state, u);
                let nv = uncolored_neighbors(cg, state, v);
                for c in 0..state.k() as u32 {
                    if !(state.contains(u, c) && state.contains(v, c)) {
                        continue;
                    }
                    let q = nv.iter().filter(|w| nu.contains(w) && bx.contains(w) && state.contains(**w, c)).count();
                    best = Some(best.map_or(q, |b: usize| b.max(q)));
                }
            }
        }
    }
    best
}

/// Named graphs with at most 200 edges.
pub fn small_graphs() -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = (4..=12).map(|n| (format!("C{n}"), gen_cycle(n).unwrap())).collect();
    out.push(("K23".into(), gen_complete_bipartite(2, 3).unwrap()));
    out.push(("K33".into(), gen_complete_bipartite(3, 3).unwrap()));
    out.push(("K44".into(), gen_complete_bipartite(4, 4).unwrap()));
    out.push(("Petersen".into(), gen_petersen()));
    out.push(("Heawood".into(), gen_projective_incidence(2).unwrap()));
    out.push(("PG(2,3)".into(), gen_projective_incidence(3).unwrap()));
    out.push(("PG(2,4)".into(), gen_projective_incidence(4).unwrap()));
    for t in 1..=3 {
        out.push((format!("C5[{t}]"), gen_c5_blowup(t).unwrap()));
    }
    out.push(("RR(20,3)".into(), gen_random_regular(20, 3, 1).unwrap()));
    out.push(("RR(30,4)".into(), gen_random_regular(30, 4, 2).unwrap()));
    out.push(("RR(40,5)".into(), gen_random_regular(40, 5, 3).unwrap()));
    out.retain(|(_, g)| g.m() <= 200);
    out
}
