//! Deterministic and seeded constructions of the graph families used in
//! experiments: cycles, bicliques, C5 blow-ups, random regular graphs,
//! projective-plane incidence graphs and high-girth residues.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

pub const DEFAULT_RESTART_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GenSpec {
    Cycle { n: usize },
    CompleteBipartite { a: usize, b: usize },
    C5Blowup { t: usize },
    RandomRegular { n: usize, d: usize, seed: u64 },
    ProjectiveIncidence { q: usize },
    HighGirthRegular { n: usize, d: usize, g: usize, seed: u64 },
}

impl GenSpec {
    pub fn generate(&self) -> Result<Graph> {
        match *self {
            GenSpec::Cycle { n } => gen_cycle(n),
            GenSpec::CompleteBipartite { a, b } => gen_complete_bipartite(a, b),
            GenSpec::C5Blowup { t } => gen_c5_blowup(t),
            GenSpec::RandomRegular { n, d, seed } => gen_random_regular(n, d, seed),
            GenSpec::ProjectiveIncidence { q } => gen_projective_incidence(q),
            GenSpec::HighGirthRegular { n, d, g, seed } => {
                gen_high_girth_regular(n, d, g, seed).map(|r| r.graph)
            }
        }
    }
}

pub fn gen_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {n}")));
    }
    let n32 = n as Vertex;
    Graph::from_edges(n, (0..n32).map(|i| (i, (i + 1) % n32)))
}

/// `K_{a,b}` with parts `0..a` and `a..a+b`.
pub fn gen_complete_bipartite(a: usize, b: usize) -> Result<Graph> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter("complete bipartite parts must be nonempty".into()));
    }
    let pairs = (0..a as Vertex).flat_map(|u| (a as Vertex..(a + b) as Vertex).map(move |v| (u, v)));
    Graph::from_edges(a + b, pairs)
}

/// C5 with every vertex replaced by an independent set of size `t` and every
/// edge by a complete bipartite graph `K_{t,t}`.
pub fn gen_c5_blowup(t: usize) -> Result<Graph> {
    if t == 0 {
        return Err(Error::InvalidParameter("c5 blow-up needs t >= 1".into()));
    }
    let t32 = t as Vertex;
    let pairs = (0..5u32).flat_map(|i| {
        let j = (i + 1) % 5;
        (0..t32).flat_map(move |a| (0..t32).map(move |b| (i * t32 + a, j * t32 + b)))
    });
    Graph::from_edges(5 * t, pairs)
}

pub fn gen_petersen() -> Graph {
    let mut pairs = Vec::new();
    for i in 0..5u32 {
        pairs.push((i, (i + 1) % 5));
        pairs.push((5 + i, 5 + (i + 2) % 5));
        pairs.push((i, 5 + i));
    }
    Graph::from_edges(10, pairs).expect("static construction")
}

/// Uniform-ish random `d`-regular graph by the pairing model.
///
/// Points are shuffled and paired; pairs that would form a loop or a repeated
/// edge are returned to the pool and re-paired. A pool that can no longer be
/// completed triggers a full restart.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    gen_random_regular_with_budget(n, d, seed, DEFAULT_RESTART_BUDGET)
}

pub fn gen_random_regular_with_budget(n: usize, d: usize, seed: u64, budget: usize) -> Result<Graph> {
    if (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "n*d must be even for a {d}-regular graph on {n} vertices"
        )));
    }
    if d >= n {
        return Err(Error::InvalidParameter(format!("degree {d} must be below n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget.max(1) {
        if let Some(edges) = try_pairing(n, d, &mut rng) {
            return Graph::from_edges(n, edges);
        }
    }
    Err(Error::RestartBudgetExhausted { attempts: budget })
}

fn try_pairing(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Option<BTreeSet<(Vertex, Vertex)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<Vertex> = (0..n as Vertex).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut leftover: BTreeMap<Vertex, usize> = BTreeMap::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && !edges.contains(&(a, b)) {
                edges.insert((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if leftover.is_empty() {
            break;
        }
        let open: Vec<Vertex> = leftover.keys().copied().collect();
        let completable = open.iter().enumerate().any(|(i, &a)| {
            open[i + 1..].iter().any(|&b| !edges.contains(&(a.min(b), a.max(b))))
        });
        if !completable {
            return None;
        }
        stubs = leftover
            .into_iter()
            .flat_map(|(v, k)| std::iter::repeat_n(v, k))
            .collect();
    }
    Some(edges)
}

/// Small finite field GF(q) given by addition and multiplication tables.
struct FiniteField {
    q: usize,
    add: Vec<u8>,
    mul: Vec<u8>,
}

impl FiniteField {
    /// Tabulated prime powers up to 16. Extension fields use a fixed monic
    /// irreducible modulus, listed by its low-order coefficients.
    fn new(q: usize) -> Option<Self> {
        let (p, modulus): (usize, &[usize]) = match q {
            2 | 3 | 5 | 7 | 11 | 13 => (q, &[]),
            4 => (2, &[1, 1]),       // x^2 + x + 1
            8 => (2, &[1, 1, 0]),    // x^3 + x + 1
            9 => (3, &[1, 0]),       // x^2 + 1
            16 => (2, &[1, 1, 0, 0]), // x^4 + x + 1
            _ => return None,
        };
        let k = modulus.len().max(1);
        let digits = |x: usize| -> Vec<usize> { (0..k).map(|i| (x / p.pow(i as u32)) % p).collect() };
        let pack = |ds: &[usize]| -> usize { ds.iter().rev().fold(0, |acc, &dg| acc * p + dg) };
        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                let (da, db) = (digits(a), digits(b));
                let sum: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = pack(&sum) as u8;
                let prod = if modulus.is_empty() {
                    (a * b) % p
                } else {
                    let mut acc = vec![0usize; 2 * k - 1];
                    for (i, x) in da.iter().enumerate() {
                        for (j, y) in db.iter().enumerate() {
                            acc[i + j] = (acc[i + j] + x * y) % p;
                        }
                    }
                    // Reduce with x^k = -(modulus low coefficients).
                    for deg in (k..acc.len()).rev() {
                        let top = acc[deg];
                        if top == 0 {
                            continue;
                        }
                        acc[deg] = 0;
                        for (i, &c) in modulus.iter().enumerate() {
                            let idx = deg - k + i;
                            acc[idx] = (acc[idx] + (p - (top * c) % p)) % p;
                        }
                    }
                    pack(&acc[..k])
                };
                mul[a * q + b] = prod as u8;
            }
        }
        Some(FiniteField { q, add, mul })
    }

    fn add(&self, a: usize, b: usize) -> usize {
        self.add[a * self.q + b] as usize
    }

    fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.q + b] as usize
    }
}

/// Point-line incidence graph of the projective plane PG(2, q). Points are
/// vertices `0..N` and lines `N..2N` with `N = q^2 + q + 1`.
pub fn gen_projective_incidence(q: usize) -> Result<Graph> {
    let field = FiniteField::new(q).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "q = {q} is not a supported prime power (2,3,4,5,7,8,9,11,13,16)"
        ))
    })?;
    let mut reps: Vec<[usize; 3]> = Vec::with_capacity(q * q + q + 1);
    for a in 0..q {
        for b in 0..q {
            reps.push([1, a, b]);
        }
    }
    for b in 0..q {
        reps.push([0, 1, b]);
    }
    reps.push([0, 0, 1]);
    let n = reps.len();
    let mut pairs = Vec::new();
    for (pi, p) in reps.iter().enumerate() {
        for (li, l) in reps.iter().enumerate() {
            let dot = (0..3).fold(0, |acc, i| field.add(acc, field.mul(p[i], l[i])));
            if dot == 0 {
                pairs.push((pi as Vertex, (n + li) as Vertex));
            }
        }
    }
    Graph::from_edges(2 * n, pairs)
}

#[derive(Debug, Clone)]
pub struct HighGirthResult {
    pub graph: Graph,
    pub deleted_edges: usize,
    pub warning: Option<String>,
}

/// Random `d`-regular graph with short cycles destroyed: while some cycle is
/// shorter than `g`, delete one edge of a shortest cycle, choosing the
/// smallest edge (lexicographic endpoint pair) among all edges that lie on
/// a shortest cycle.
pub fn gen_high_girth_regular(n: usize, d: usize, g: usize, seed: u64) -> Result<HighGirthResult> {
    if g < 4 {
        return Err(Error::InvalidParameter(format!("girth target must be at least 4, got {g}")));
    }
    let base = gen_random_regular(n, d, seed)?;
    let warning = ((d as f64).powi(g as i32) > n as f64).then(|| {
        format!("n = {n} is not much larger than d^g = {d}^{g}; expect many deletions")
    });
    let mut edges: BTreeSet<(Vertex, Vertex)> = base.edges().iter().copied().collect();
    let mut adjacency: Vec<BTreeSet<Vertex>> = (0..n as Vertex)
        .map(|v| base.neighbors(v).iter().copied().collect())
        .collect();
    let mut deleted = 0;
    loop {
        let mut best: Option<(usize, (Vertex, Vertex))> = None;
        for &(u, v) in &edges {
            if let Some(len) = shortest_cycle_through(&adjacency, u, v, g - 1) {
                if best.is_none_or(|(b, _)| len < b) {
                    best = Some((len, (u, v)));
                }
            }
        }
        let Some((_, (u, v))) = best else { break };
        edges.remove(&(u, v));
        adjacency[u as usize].remove(&v);
        adjacency[v as usize].remove(&u);
        deleted += 1;
    }
    Ok(HighGirthResult {
        graph: Graph::from_edges(n, edges)?,
        deleted_edges: deleted,
        warning,
    })
}

/// Length of the shortest cycle through edge `uv` if it is at most `limit`.
fn shortest_cycle_through(adj: &[BTreeSet<Vertex>], u: Vertex, v: Vertex, limit: usize) -> Option<usize> {
    let mut dist: BTreeMap<Vertex, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert(u, 0);
    queue.push_back(u);
    while let Some(x) = queue.pop_front() {
        let dx = dist[&x];
        if dx + 1 >= limit {
            continue;
        }
        for &y in &adj[x as usize] {
            if x == u && y == v {
                continue;
            }
            if dist.contains_key(&y) {
                continue;
            }
            if y == v {
                return Some(dx + 2);
            }
            dist.insert(y, dx + 1);
            queue.push_back(y);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canonical_bytes(g: &Graph) -> Vec<u8> {
        let mut out = Vec::new();
        g.write_edge_list(&mut out).unwrap();
        out
    }

    #[test]
    fn cycles() {
        let c5 = gen_cycle(5).unwrap();
        assert_eq!((c5.n(), c5.m(), c5.girth()), (5, 5, Some(5)));
        assert_eq!(gen_cycle(3).unwrap().m(), 3);
        assert!(gen_cycle(2).is_err());
    }

    #[test]
    fn c5_blowups() {
        assert_eq!(gen_c5_blowup(1).unwrap(), gen_cycle(5).unwrap());
        let b2 = gen_c5_blowup(2).unwrap();
        assert_eq!((b2.n(), b2.m(), b2.regular_degree()), (10, 20, Some(4)));
        let b3 = gen_c5_blowup(3).unwrap();
        assert_eq!((b3.m(), b3.regular_degree()), (45, Some(6)));
        assert!(gen_c5_blowup(0).is_err());
    }

    #[test]
    fn bicliques() {
        assert_eq!(gen_complete_bipartite(3, 3).unwrap().m(), 9);
        assert_eq!(gen_complete_bipartite(1, 1).unwrap().m(), 1);
        let mut degs: Vec<_> = {
            let g = gen_complete_bipartite(2, 3).unwrap();
            (0..5).map(|v| g.degree(v)).collect()
        };
        degs.sort_unstable();
        assert_eq!(degs, vec![2, 2, 2, 3, 3]);
    }

    #[test]
    fn random_regular_contract() {
        let g = gen_random_regular(10, 3, 7).unwrap();
        assert_eq!(g.regular_degree(), Some(3));
        assert!(gen_random_regular(5, 3, 7).is_err());
        assert!(gen_random_regular(4, 4, 7).is_err());
        let big = gen_random_regular(400, 20, 3).unwrap();
        assert_eq!(big.regular_degree(), Some(20));
    }

    #[test]
    fn random_regular_is_deterministic() {
        let a = gen_random_regular(200, 6, 42).unwrap();
        let b = gen_random_regular(200, 6, 42).unwrap();
        let c = gen_random_regular(200, 6, 43).unwrap();
        assert_eq!(canonical_bytes(&a), canonical_bytes(&b));
        assert_ne!(canonical_bytes(&a), canonical_bytes(&c));
    }

    #[test]
    fn field_tables_are_fields() {
        for q in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            let f = FiniteField::new(q).unwrap();
            for a in 1..q {
                assert_eq!((1..q).filter(|&b| f.mul(a, b) == 1).count(), 1, "q={q} a={a}");
                assert_eq!(f.mul(a, 1), a);
            }
        }
    }

    #[test]
    fn heawood() {
        let g = gen_projective_incidence(2).unwrap();
        assert_eq!((g.n(), g.m(), g.regular_degree(), g.girth()), (14, 21, Some(3), Some(6)));
    }

    #[test]
    fn projective_planes_have_girth_six() {
        for q in [3, 4, 5, 7, 8, 9] {
            let g = gen_projective_incidence(q).unwrap();
            let pts = q * q + q + 1;
            assert_eq!(g.n(), 2 * pts);
            assert_eq!(g.m(), pts * (q + 1));
            assert_eq!(g.regular_degree(), Some(q + 1));
            assert_eq!(g.girth(), Some(6), "q = {q}");
        }
        assert!(gen_projective_incidence(6).is_err());
    }

    #[test]
    fn high_girth_targets() {
        let r = gen_high_girth_regular(500, 3, 6, 1).unwrap();
        assert!(r.graph.girth().is_none_or(|g| g >= 6));
        assert!(r.graph.max_degree() <= 3);

        let r = gen_high_girth_regular(100, 2, 4, 1).unwrap();
        assert!(r.graph.girth().is_none_or(|g| g >= 4));
        assert!(r.graph.max_degree() <= 2);

        let r = gen_high_girth_regular(50, 10, 8, 1).unwrap();
        assert!(r.warning.is_some());
        assert!(r.deleted_edges > 100);
        assert!(r.graph.girth().is_none_or(|g| g >= 8));
    }

    #[test]
    fn petersen_shape() {
        let p = gen_petersen();
        assert_eq!((p.m(), p.regular_degree(), p.girth()), (15, Some(3), Some(5)));
    }
}
