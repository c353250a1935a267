//! Structural analysis of conflict graphs.
//!
//! Vertex friendships come from codegrees in the base graph: `u` and `v`
//! are friends when `|N(u) ∩ N(v)| >= theta`, and every vertex is its own
//! friend. Two base edges are friends when some endpoint of one is a friend
//! of some endpoint of the other, so incident edges are always friends.
//! Pairs that are not friends are strangers.
//!
//! The covering family `X` is built per owner vertex `v`: one singleton
//! `{vw}` for each friend neighbor `w`, plus the edges to the remaining
//! (stranger) neighbors split into blocks of mutual strangers by an
//! equitable coloring of their friendship graph. Blocks of size two or more
//! carry the edge ring `B^X = E_{t+1}(v)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{sorted_intersection_len, ConflictGraph, EdgeId, Graph, Vertex};

/// Default vertex threshold `d / ln^40 d`; infinite once `ln d <= 1`, so
/// small graphs have no nontrivial friendships.
pub fn default_threshold(d: usize) -> f64 {
    let ln = (d as f64).ln();
    if ln <= 1.0 {
        f64::INFINITY
    } else {
        d as f64 / ln.powi(40)
    }
}

#[derive(Debug, Clone)]
pub struct FriendModel {
    threshold: f64,
    /// Sorted, reflexive.
    friends: Vec<Vec<Vertex>>,
}

impl FriendModel {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn friends(&self, v: Vertex) -> &[Vertex] {
        &self.friends[v as usize]
    }

    pub fn n(&self) -> usize {
        self.friends.len()
    }

    pub fn are_friends(&self, u: Vertex, v: Vertex) -> bool {
        self.friends[u as usize].binary_search(&v).is_ok()
    }

    /// Edge-level rule: some endpoint of `e` befriends some endpoint of `f`.
    pub fn edges_are_friends(&self, base: &Graph, e: EdgeId, f: EdgeId) -> bool {
        let (a, b) = base.endpoints(e);
        let (x, y) = base.endpoints(f);
        [a, b].iter().any(|&p| [x, y].iter().any(|&q| self.are_friends(p, q)))
    }

    /// `F(e)`: vertices that are friends of an endpoint of `e`, sorted.
    pub fn edge_friend_vertices(&self, base: &Graph, e: EdgeId) -> Vec<Vertex> {
        let (a, b) = base.endpoints(e);
        let mut out: Vec<Vertex> = self.friends(a).iter().chain(self.friends(b)).copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Friendship among base vertices at codegree threshold `theta`. Only pairs
/// within distance two can have positive codegree, so candidates are
/// `N(v) ∪ N_2(v)`.
pub fn vertex_friends(g: &Graph, theta: f64) -> FriendModel {
    let n = g.n();
    let mut count = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<Vertex> = Vec::new();
    let mut friends = Vec::with_capacity(n);
    for v in 0..n as Vertex {
        for &w in g.neighbors(v) {
            // Adjacent vertices are candidates even with codegree zero.
            for u in std::iter::once(w).chain(g.neighbors(w).iter().copied()) {
                if u != v && !seen[u as usize] {
                    seen[u as usize] = true;
                    touched.push(u);
                }
            }
            for &u in g.neighbors(w) {
                if u != v {
                    count[u as usize] += 1;
                }
            }
        }
        let mut list: Vec<Vertex> = touched
            .iter()
            .copied()
            .filter(|&u| count[u as usize] as f64 >= theta)
            .collect();
        list.push(v);
        list.sort_unstable();
        for &u in &touched {
            count[u as usize] = 0;
            seen[u as usize] = false;
        }
        touched.clear();
        friends.push(list);
    }
    FriendModel {
        threshold: theta,
        friends,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrangerAudit {
    pub max_codegree: usize,
    pub argmax: Option<(EdgeId, EdgeId)>,
    pub pairs_examined: usize,
    /// No stranger pair exists at all.
    pub vacuous: bool,
}

/// Largest conflict-codegree over stranger pairs of base edges. Pairs at
/// conflict distance above two have codegree zero and are skipped; ties go
/// to the lexicographically smallest pair.
pub fn edge_strangers_codegree_audit(cg: &ConflictGraph, fm: &FriendModel) -> StrangerAudit {
    let h = cg.graph();
    let base = cg.base();
    let m = h.n();
    let mut count = vec![0usize; m];
    let mut touched = Vec::new();
    let mut best: Option<(usize, (EdgeId, EdgeId))> = None;
    let mut examined = 0;
    for e in 0..m as EdgeId {
        for &w in h.neighbors(e) {
            for &f in h.neighbors(w) {
                if f > e {
                    if count[f as usize] == 0 {
                        touched.push(f);
                    }
                    count[f as usize] += 1;
                }
            }
        }
        touched.sort_unstable();
        for &f in &touched {
            if !fm.edges_are_friends(base, e, f) {
                examined += 1;
                let c = count[f as usize];
                if best.is_none_or(|(b, _)| c > b) {
                    best = Some((c, (e, f)));
                }
            }
            count[f as usize] = 0;
        }
        touched.clear();
    }
    let vacuous = best.is_none() && !stranger_pair_exists(cg, fm);
    StrangerAudit {
        max_codegree: best.map_or(0, |b| b.0),
        argmax: best.map(|b| b.1),
        pairs_examined: examined,
        vacuous,
    }
}

fn stranger_pair_exists(cg: &ConflictGraph, fm: &FriendModel) -> bool {
    let base = cg.base();
    let m = base.m();
    let mut mark = vec![u32::MAX; m];
    for e in 0..m as EdgeId {
        let mut friends = 0usize;
        for w in fm.edge_friend_vertices(base, e) {
            for f in base.incident_edges(w) {
                if mark[f as usize] != e {
                    mark[f as usize] = e;
                    friends += 1;
                }
            }
        }
        if friends < m {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XKind {
    /// `X_{vw}` for a friend neighbor `w`.
    Singleton { neighbor: Vertex },
    /// `X_{v,i}`: edges to the `i`-th block of mutual-stranger neighbors.
    StrangerBlock { index: usize },
    /// Supplied directly rather than built from a friend model.
    Given,
}

#[derive(Debug, Clone, Serialize)]
pub struct XSet {
    pub owner: Vertex,
    pub kind: XKind,
    /// Sorted conflict-vertex (base edge) ids.
    pub members: Vec<EdgeId>,
}

/// The covering family, kept as a multiset: identical member sets from
/// different owners stay separate entries.
#[derive(Debug, Clone)]
pub struct FamilyX {
    t: usize,
    base: Graph,
    friends: FriendModel,
    sets: Vec<XSet>,
    /// `B^X` for sets with at least two members, sorted.
    bx: Vec<Option<Vec<EdgeId>>>,
    membership: Vec<Vec<u32>>,
    by_owner: Vec<Vec<u32>>,
}

impl FamilyX {
    /// Assembles a family from explicit sets; `B^X = E_{t+1}(owner)` is
    /// attached to every set with two or more members.
    pub fn from_sets(base: &Graph, friends: FriendModel, t: usize, sets: Vec<XSet>) -> Self {
        let mut membership = vec![Vec::new(); base.m()];
        let mut by_owner = vec![Vec::new(); base.n()];
        let mut bx = Vec::with_capacity(sets.len());
        for (id, set) in sets.iter().enumerate() {
            for &e in &set.members {
                membership[e as usize].push(id as u32);
            }
            by_owner[set.owner as usize].push(id as u32);
            bx.push((set.members.len() >= 2).then(|| base.edge_ring(set.owner, t + 1)));
        }
        FamilyX {
            t,
            base: base.clone(),
            friends,
            sets,
            bx,
            membership,
            by_owner,
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn friend_model(&self) -> &FriendModel {
        &self.friends
    }

    pub fn sets(&self) -> &[XSet] {
        &self.sets
    }

    pub fn b_of(&self, id: usize) -> Option<&[EdgeId]> {
        self.bx[id].as_deref()
    }

    /// Ids of sets containing conflict vertex `e`.
    pub fn containing(&self, e: EdgeId) -> &[u32] {
        &self.membership[e as usize]
    }

    /// `Y_v`: ids of the sets owned by `v`.
    pub fn owned_by(&self, v: Vertex) -> &[u32] {
        &self.by_owner[v as usize]
    }

    pub fn edges_are_friends(&self, e: EdgeId, f: EdgeId) -> bool {
        self.friends.edges_are_friends(&self.base, e, f)
    }

    /// `X_e = ∪_{w ∈ F(e)} Y_w`, as set ids.
    pub fn cover_family(&self, e: EdgeId) -> Vec<u32> {
        self.friends
            .edge_friend_vertices(&self.base, e)
            .into_iter()
            .flat_map(|w| self.by_owner[w as usize].iter().copied())
            .collect()
    }

    /// First edge whose friends are not all covered by its cover family.
    pub fn uncovered_friend(&self) -> Option<(EdgeId, EdgeId)> {
        let m = self.base.m();
        let mut covered = vec![u32::MAX; m];
        for e in 0..m as EdgeId {
            for id in self.cover_family(e) {
                for &f in &self.sets[id as usize].members {
                    covered[f as usize] = e;
                }
            }
            for w in self.friends.edge_friend_vertices(&self.base, e) {
                for f in self.base.incident_edges(w) {
                    if covered[f as usize] != e {
                        return Some((e, f));
                    }
                }
            }
        }
        None
    }
}

/// Builds the covering family for distance parameter `t`.
pub fn build_family_x(g: &Graph, fm: &FriendModel, t: usize) -> FamilyX {
    let mut sets = Vec::new();
    for v in 0..g.n() as Vertex {
        let mut strangers = Vec::new();
        for &w in g.neighbors(v) {
            if fm.are_friends(v, w) {
                sets.push(XSet {
                    owner: v,
                    kind: XKind::Singleton { neighbor: w },
                    members: vec![g.edge_id(v, w).unwrap()],
                });
            } else {
                strangers.push(w);
            }
        }
        if strangers.is_empty() {
            continue;
        }
        let local: Vec<(Vertex, Vertex)> = strangers
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| {
                strangers[i + 1..]
                    .iter()
                    .enumerate()
                    .filter(move |(_, &b)| fm.are_friends(a, b))
                    .map(move |(j, _)| (i as Vertex, (i + 1 + j) as Vertex))
            })
            .collect();
        let friendship = Graph::from_edges(strangers.len(), local).expect("local indices are in range");
        for (index, part) in equitable_partition(&friendship).into_iter().enumerate() {
            let mut members: Vec<EdgeId> = part
                .iter()
                .map(|&i| g.edge_id(v, strangers[i as usize]).unwrap())
                .collect();
            members.sort_unstable();
            sets.push(XSet {
                owner: v,
                kind: XKind::StrangerBlock { index },
                members,
            });
        }
    }
    FamilyX::from_sets(g, fm.clone(), t, sets)
}

/// Independent sets of `h`, at most `Δ(h) + 1` of them, with sizes differing
/// by at most one whenever the balancing search succeeds.
///
/// Greedy coloring gives at most `Δ + 1` classes; sizes are then evened out
/// by shifting vertices along chains of classes `X_0 -> ... -> X_k` where
/// each step moves a vertex with no neighbor in the next class. If no chain
/// exists a bounded exhaustive search takes over.
pub fn equitable_partition(h: &Graph) -> Vec<Vec<Vertex>> {
    let n = h.n();
    if n == 0 {
        return Vec::new();
    }
    let r = h.max_degree() + 1;
    let mut color = vec![usize::MAX; n];
    for v in 0..n {
        let used: Vec<usize> = h.neighbors(v as Vertex).iter().map(|&u| color[u as usize]).collect();
        color[v] = (0..r).find(|c| !used.contains(c)).expect("greedy uses at most Δ+1 colors");
    }
    let mut classes: Vec<Vec<Vertex>> = vec![Vec::new(); r];
    for v in 0..n {
        classes[color[v]].push(v as Vertex);
    }

    while !is_balanced(&classes) {
        if !shift_along_chain(h, &mut classes) {
            if let Some(exact) = exact_equitable(h, r, 1_000_000) {
                classes = exact;
            }
            break;
        }
    }
    let mut parts: Vec<Vec<Vertex>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
    for p in &mut parts {
        p.sort_unstable();
    }
    parts.sort();
    parts
}

fn is_balanced(classes: &[Vec<Vertex>]) -> bool {
    let max = classes.iter().map(Vec::len).max().unwrap_or(0);
    let min = classes.iter().map(Vec::len).min().unwrap_or(0);
    max - min <= 1
}

fn movable(h: &Graph, v: Vertex, target: &[Vertex]) -> bool {
    !target.iter().any(|&u| h.has_edge(u, v))
}

/// Moves one vertex out of some largest class into some smallest class
/// along a chain of accessible classes. Returns false if none exists.
fn shift_along_chain(h: &Graph, classes: &mut [Vec<Vertex>]) -> bool {
    let r = classes.len();
    let max = classes.iter().map(Vec::len).max().unwrap();
    let min = classes.iter().map(Vec::len).min().unwrap();
    // BFS over classes backwards from the small classes: pred[x] = (next
    // class, vertex of x that may move into it).
    let mut via: Vec<Option<(usize, Vertex)>> = vec![None; r];
    let mut reached = vec![false; r];
    let mut queue = std::collections::VecDeque::new();
    for (i, c) in classes.iter().enumerate() {
        if c.len() == min {
            reached[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(y) = queue.pop_front() {
        for x in 0..r {
            if reached[x] {
                continue;
            }
            if let Some(&v) = classes[x].iter().find(|&&v| movable(h, v, &classes[y])) {
                reached[x] = true;
                via[x] = Some((y, v));
                if classes[x].len() == max {
                    let mut cur = x;
                    let mut moves = Vec::new();
                    while let Some((next, v)) = via[cur] {
                        moves.push((cur, next, v));
                        cur = next;
                    }
                    // Apply from the far end so each target only shrinks
                    // before it receives.
                    for &(from, to, v) in moves.iter().rev() {
                        classes[from].retain(|&u| u != v);
                        classes[to].push(v);
                    }
                    return true;
                }
                queue.push_back(x);
            }
        }
    }
    false
}

fn exact_equitable(h: &Graph, r: usize, budget: usize) -> Option<Vec<Vec<Vertex>>> {
    let n = h.n();
    let floor = n / r;
    let big = n % r;
    let mut order: Vec<Vertex> = (0..n as Vertex).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(h.degree(v)));
    let mut classes: Vec<Vec<Vertex>> = vec![Vec::new(); r];
    let mut nodes = 0;

    #[allow(clippy::too_many_arguments)]
    fn go(
        h: &Graph,
        order: &[Vertex],
        pos: usize,
        classes: &mut Vec<Vec<Vertex>>,
        floor: usize,
        big: usize,
        nodes: &mut usize,
        budget: usize,
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        *nodes += 1;
        if *nodes > budget {
            return false;
        }
        let v = order[pos];
        let at_big = classes.iter().filter(|c| c.len() > floor).count();
        let mut tried_empty = false;
        for i in 0..classes.len() {
            let len = classes[i].len();
            if len == 0 {
                if tried_empty {
                    continue;
                }
                tried_empty = true;
            }
            let cap_ok = len < floor || (len == floor && at_big < big);
            if !cap_ok || !movable(h, v, &classes[i]) {
                continue;
            }
            classes[i].push(v);
            if go(h, order, pos + 1, classes, floor, big, nodes, budget) {
                return true;
            }
            classes[i].pop();
        }
        false
    }

    go(h, &order, 0, &mut classes, floor, big, &mut nodes, budget).then_some(classes)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub condition: String,
    pub measured: f64,
    pub threshold: f64,
    /// Positive on the conforming side.
    pub margin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub delta: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub n_exponent: u32,
    pub entries: Vec<ConditionEntry>,
    pub overall: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale_note: Option<String>,
}

impl ConditionReport {
    pub fn entry(&self, id: &str) -> Option<&ConditionEntry> {
        self.entries.iter().find(|e| e.condition == id)
    }
}

fn at_most(id: &str, measured: f64, threshold: f64, note: Option<String>) -> ConditionEntry {
    let margin = threshold - measured;
    ConditionEntry {
        condition: id.to_string(),
        measured,
        threshold,
        margin,
        pass: measured <= threshold,
        note,
    }
}

/// Measures every hypothesis of the general list-coloring theorem on the
/// conflict graph with the given friend relation (carried by `fx`) and
/// covering family. `Delta` is the conflict graph's maximum degree.
pub fn verify_general_conditions(cg: &ConflictGraph, fx: &FamilyX, gamma: f64, epsilon: f64, n_exp: u32) -> Result<ConditionReport> {
    if !(gamma > 0.0 && gamma < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter("gamma and epsilon must lie in (0,1)".into()));
    }
    let h = cg.graph();
    let delta_int = cg.max_degree();
    let delta = delta_int as f64;
    let ln = delta.ln();
    let scale_note = (delta_int < 3 || ln <= 1.0).then(|| "thresholds undefined at this scale".to_string());
    let codegree_cap = delta / ln.powi(20);

    let mut entries = Vec::new();

    let audit = edge_strangers_codegree_audit(cg, fx.friend_model());
    entries.push(at_most(
        "1",
        audit.max_codegree as f64,
        codegree_cap,
        audit.vacuous.then(|| "no stranger pairs".to_string()),
    ));

    let max_x = fx.sets().iter().map(|s| s.members.len()).max().unwrap_or(0);
    entries.push(at_most("2a", max_x as f64, delta.powf(gamma), None));

    let max_cover = (0..h.n() as EdgeId).map(|e| fx.cover_family(e).len()).max().unwrap_or(0);
    let mut e2b = at_most("2b", max_cover as f64, delta.powf((1.0 - gamma) * epsilon / 12.0), None);
    if let Some((e, f)) = fx.uncovered_friend() {
        e2b.pass = false;
        e2b.note = Some(format!("friend {f} of {e} is not covered"));
    }
    entries.push(e2b);

    let max_membership = (0..h.n() as EdgeId).map(|e| fx.containing(e).len()).max().unwrap_or(0);
    entries.push(at_most("2c", max_membership as f64, delta.powi(n_exp as i32), None));

    // 3a as a deficit: d(v) - |N(v) ∩ B^X| <= Delta (1 - gamma + ln^-10 Delta).
    let mut worst_deficit: Option<f64> = None;
    let mut worst_pair_codegree: Option<usize> = None;
    for (id, set) in fx.sets().iter().enumerate() {
        let Some(bx) = fx.b_of(id) else { continue };
        for &v in &set.members {
            let inside = sorted_intersection_len(h.neighbors(v), bx);
            let deficit = h.degree(v) as f64 - inside as f64;
            worst_deficit = Some(worst_deficit.map_or(deficit, |w| w.max(deficit)));
        }
        for (i, &u) in set.members.iter().enumerate() {
            for &v in &set.members[i + 1..] {
                if !fx.edges_are_friends(u, v) {
                    continue;
                }
                let common = common_within(h.neighbors(u), h.neighbors(v), bx);
                worst_pair_codegree = Some(worst_pair_codegree.map_or(common, |w| w.max(common)));
            }
        }
    }
    let vacuous = || Some("no set with two or more members".to_string());
    let threshold_3a = delta * (1.0 - gamma + ln.powi(-10));
    entries.push(match worst_deficit {
        Some(w) => at_most("3a", w, threshold_3a, None),
        None => ConditionEntry {
            pass: true,
            ..at_most("3a", 0.0, threshold_3a, vacuous())
        },
    });
    entries.push(match worst_pair_codegree {
        Some(w) => at_most("3b", w as f64, codegree_cap, None),
        None => ConditionEntry {
            pass: true,
            ..at_most("3b", 0.0, codegree_cap, vacuous())
        },
    });

    let overall = entries.iter().all(|e| e.pass);
    Ok(ConditionReport {
        delta: delta_int,
        gamma,
        epsilon,
        n_exponent: n_exp,
        entries,
        overall,
        scale_note,
    })
}

/// `|a ∩ b ∩ c|` for sorted slices.
fn common_within(a: &[u32], b: &[u32], c: &[u32]) -> usize {
    a.iter()
        .filter(|x| b.binary_search(x).is_ok() && c.binary_search(x).is_ok())
        .count()
}

/// Kővári–Sós–Turán: a bipartite graph with sides of sizes `m` and `n` and
/// no `t` vertices of the first side completely joined to `s` of the second
/// has fewer than `(t-1)^{1/s} n m^{1-1/s} + (s-1) m` edges.
pub fn kst_bound(m: usize, n: usize, s: usize, t: usize) -> f64 {
    let (m, n, s, t) = (m as f64, n as f64, s as f64, t as f64);
    (t - 1.0).powf(1.0 / s) * n * m.powf(1.0 - 1.0 / s) + (s - 1.0) * m
}

/// Companion check: the edge count stays strictly under [`kst_bound`].
pub fn kst_holds(edges: usize, m: usize, n: usize, s: usize, t: usize) -> bool {
    (edges as f64) < kst_bound(m, n, s, t)
}

/// Bondy–Simonovits: an `n`-vertex `C_{2k}`-free graph has fewer than
/// `100 k n^{1+1/k}` edges.
pub fn bondy_simonovits_bound(n: usize, k: usize) -> f64 {
    100.0 * k as f64 * (n as f64).powf(1.0 + 1.0 / k as f64)
}

pub fn bondy_simonovits_holds(g: &Graph, k: usize) -> bool {
    (g.m() as f64) < bondy_simonovits_bound(g.n(), k)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEstimate {
    /// Second largest signed adjacency eigenvalue.
    pub lambda2: f64,
    /// Largest magnitude among eigenvalues orthogonal to the all-ones vector.
    pub max_abs_nontrivial: f64,
    pub converged: bool,
    pub iterations: usize,
}

pub const SPECTRAL_ITERATION_CAP: usize = 100_000;

pub fn second_eigenvalue(g: &Graph, tol: f64) -> Result<SpectralEstimate> {
    second_eigenvalue_with(g, tol, SPECTRAL_ITERATION_CAP)
}

/// Power iteration on `A + dI` restricted to the complement of the all-ones
/// vector. The shift makes the operator positive semidefinite, so the
/// dominant remaining eigenvalue is `lambda_2 + d`. Convergence is declared
/// when the residual `||Bx - rho x||` drops below `tol`, which places an
/// eigenvalue within `tol` of the Rayleigh quotient.
pub fn second_eigenvalue_with(g: &Graph, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    let d = g.regular_degree().ok_or(Error::NotRegular)? as f64;
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = g.n();
    if n < 2 {
        return Ok(SpectralEstimate {
            lambda2: 0.0,
            max_abs_nontrivial: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    let start = start_vector(n);
    let apply = |x: &[f64], shift: f64| -> Vec<f64> {
        let mut y: Vec<f64> = (0..n)
            .map(|v| shift * x[v] + g.neighbors(v as Vertex).iter().map(|&u| x[u as usize]).sum::<f64>())
            .collect();
        deflate(&mut y);
        y
    };

    let (rho, converged, iterations) = power_iterate(&start, |x| apply(x, d), tol, max_iter);
    // Magnitude diagnostic from A^2 on the same subspace.
    let (rho_sq, _, _) = power_iterate(&start, |x| apply(&apply(x, 0.0), 0.0), tol, max_iter.min(20_000));
    Ok(SpectralEstimate {
        lambda2: rho - d,
        max_abs_nontrivial: rho_sq.max(0.0).sqrt(),
        converged,
        iterations,
    })
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2b);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    deflate(&mut x);
    normalize(&mut x);
    x
}

fn deflate(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

fn power_iterate<F: Fn(&[f64]) -> Vec<f64>>(start: &[f64], op: F, tol: f64, max_iter: usize) -> (f64, bool, usize) {
    let mut x = start.to_vec();
    let mut rho = 0.0;
    for it in 1..=max_iter {
        let mut y = op(&x);
        rho = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - rho * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol {
            return (rho, true, it);
        }
        if normalize(&mut y) == 0.0 {
            return (0.0, true, it);
        }
        x = y;
    }
    (rho, false, max_iter)
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingReport {
    pub samples: usize,
    pub max_deviation: f64,
    /// `|e(S,T) - d|S||T|/n| > lambda sqrt(|S||T|)`.
    pub standard_violations: usize,
    /// `|e(S,T) - d|S||T|/n| > sqrt(lambda |S||T|)`.
    pub printed_form_violations: usize,
    pub max_standard_excess: f64,
    pub max_printed_excess: f64,
}

struct MixingTally {
    n: f64,
    d: f64,
    lambda: f64,
    report: MixingReport,
}

impl MixingTally {
    fn new(g: &Graph, lambda: f64) -> Self {
        MixingTally {
            n: g.n() as f64,
            d: g.regular_degree().unwrap_or(0) as f64,
            lambda,
            report: MixingReport {
                samples: 0,
                max_deviation: 0.0,
                standard_violations: 0,
                printed_form_violations: 0,
                max_standard_excess: f64::NEG_INFINITY,
                max_printed_excess: f64::NEG_INFINITY,
            },
        }
    }

    fn record(&mut self, e_st: usize, s: usize, t: usize) {
        const SLACK: f64 = 1e-9;
        let st = (s * t) as f64;
        let deviation = (e_st as f64 - self.d * st / self.n).abs();
        let standard = deviation - self.lambda * st.sqrt();
        let printed = deviation - (self.lambda * st).sqrt();
        let r = &mut self.report;
        r.samples += 1;
        r.max_deviation = r.max_deviation.max(deviation);
        r.max_standard_excess = r.max_standard_excess.max(standard);
        r.max_printed_excess = r.max_printed_excess.max(printed);
        r.standard_violations += (standard > SLACK) as usize;
        r.printed_form_violations += (printed > SLACK) as usize;
    }
}

/// Samples `trials` random pairs `(S, T)` and compares the edge count
/// deviation to both forms of the mixing bound. `e(S,T)` counts ordered
/// pairs `(u, v)` with `u ∈ S`, `v ∈ T`, `uv ∈ E`.
pub fn expander_mixing_check(g: &Graph, lambda: f64, trials: usize, seed: u64) -> Result<MixingReport> {
    g.regular_degree().ok_or(Error::NotRegular)?;
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = MixingTally::new(g, lambda);
    let mut in_t = vec![false; n];
    for _ in 0..trials {
        let ps: f64 = rng.gen();
        let pt: f64 = rng.gen();
        let s: Vec<Vertex> = (0..n as Vertex).filter(|_| rng.gen::<f64>() < ps).collect();
        in_t.iter_mut().for_each(|b| *b = rng.gen::<f64>() < pt);
        let t_size = in_t.iter().filter(|&&b| b).count();
        let e_st: usize = s
            .iter()
            .map(|&u| g.neighbors(u).iter().filter(|&&v| in_t[v as usize]).count())
            .sum();
        tally.record(e_st, s.len(), t_size);
    }
    Ok(tally.report)
}

/// Every pair of subsets, for graphs with at most 16 vertices.
pub fn expander_mixing_exhaustive(g: &Graph, lambda: f64) -> Result<MixingReport> {
    g.regular_degree().ok_or(Error::NotRegular)?;
    let n = g.n();
    if n > 16 {
        return Err(Error::InvalidParameter("exhaustive mixing check needs n <= 16".into()));
    }
    let masks: Vec<u32> = (0..n as Vertex)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | (1 << u)))
        .collect();
    let mut tally = MixingTally::new(g, lambda);
    for s in 0u32..(1 << n) {
        for t in 0u32..(1 << n) {
            let e_st: u32 = (0..n).filter(|&u| s >> u & 1 == 1).map(|u| (masks[u] & t).count_ones()).sum();
            tally.record(e_st as usize, s.count_ones() as usize, t.count_ones() as usize);
        }
    }
    Ok(tally.report)
}

/// Degree histogram helper used in reports.
pub fn degree_histogram(g: &Graph) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in 0..g.n() as Vertex {
        *h.entry(g.degree(v)).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_complete_bipartite, gen_cycle, gen_petersen, gen_projective_incidence};

    fn matching(pairs: usize) -> Graph {
        Graph::from_edges(2 * pairs, (0..pairs as u32).map(|i| (2 * i, 2 * i + 1))).unwrap()
    }

    fn assert_equitable(h: &Graph, parts: &[Vec<Vertex>]) {
        let mut all: Vec<Vertex> = parts.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..h.n() as Vertex).collect::<Vec<_>>());
        assert!(parts.len() <= h.max_degree() + 1);
        let max = parts.iter().map(Vec::len).max().unwrap();
        let min = parts.iter().map(Vec::len).min().unwrap();
        assert!(max - min <= 1, "{parts:?}");
        for p in parts {
            for (i, &a) in p.iter().enumerate() {
                for &b in &p[i + 1..] {
                    assert!(!h.has_edge(a, b));
                }
            }
        }
    }

    #[test]
    fn k23_friends() {
        let g = gen_complete_bipartite(2, 3).unwrap();
        let fm = vertex_friends(&g, 2.0);
        assert!(fm.are_friends(0, 1));
        assert!(fm.are_friends(2, 3) && fm.are_friends(3, 4) && fm.are_friends(2, 4));
        assert!(!fm.are_friends(0, 2));
    }

    #[test]
    fn c6_friends() {
        let g = gen_cycle(6).unwrap();
        let fm = vertex_friends(&g, 2.0);
        for v in 0..6 {
            assert_eq!(fm.friends(v), &[v]);
        }
        let fm0 = vertex_friends(&g, 0.0);
        // Distance <= 2 plus self: five of the six vertices.
        assert_eq!(fm0.friends(0), &[0, 1, 2, 4, 5]);
    }

    #[test]
    fn friend_relation_symmetric_reflexive() {
        let g = gen_projective_incidence(3).unwrap();
        for theta in [0.0, 1.0, 2.0] {
            let fm = vertex_friends(&g, theta);
            for v in 0..g.n() as Vertex {
                assert!(fm.are_friends(v, v));
                for &u in fm.friends(v) {
                    assert!(fm.are_friends(u, v));
                    if u != v {
                        assert!(g.codegree(u, v).unwrap() as f64 >= theta);
                    }
                }
            }
        }
    }

    #[test]
    fn c6_audit() {
        let g = gen_cycle(6).unwrap();
        let cg = ConflictGraph::build(&g, 2).unwrap();
        let audit = edge_strangers_codegree_audit(&cg, &vertex_friends(&g, 2.0));
        assert_eq!(audit.max_codegree, 4);
        let (e, f) = audit.argmax.unwrap();
        // Antipodal edges.
        let (a, b) = g.endpoints(e);
        let (x, y) = g.endpoints(f);
        assert!([a, b, x, y].iter().all(|&p| [a, b, x, y].iter().filter(|&&q| q == p).count() == 1));
    }

    #[test]
    fn audit_vacuous_when_all_friends() {
        let g = gen_cycle(6).unwrap();
        let cg = ConflictGraph::build(&g, 2).unwrap();
        let audit = edge_strangers_codegree_audit(&cg, &vertex_friends(&g, 0.0));
        assert!(audit.vacuous);
        assert_eq!(audit.max_codegree, 0);
    }

    #[test]
    fn family_on_c6() {
        let g = gen_cycle(6).unwrap();
        let fx = build_family_x(&g, &vertex_friends(&g, 2.0), 2);
        assert_eq!(fx.sets().len(), 6);
        for (id, s) in fx.sets().iter().enumerate() {
            assert_eq!(s.members.len(), 2);
            assert_eq!(fx.b_of(id).unwrap(), g.edge_ring(s.owner, 3).as_slice());
            assert_eq!(fx.b_of(id).unwrap().len(), 2);
        }
        assert!(fx.uncovered_friend().is_none());
    }

    #[test]
    fn family_on_star() {
        let g = Graph::from_edges(6, (1..6).map(|l| (0, l))).unwrap();
        let fx = build_family_x(&g, &vertex_friends(&g, 1.0), 2);
        let center: Vec<_> = fx.owned_by(0).iter().map(|&i| &fx.sets()[i as usize]).collect();
        assert_eq!(center.len(), 5);
        assert!(center.iter().all(|s| s.members.len() == 1 && matches!(s.kind, XKind::StrangerBlock { .. })));
        for leaf in 1..6 {
            assert_eq!(fx.owned_by(leaf).len(), 1);
        }
    }

    #[test]
    fn degree_one_friend_neighbor_gives_singleton() {
        // Path 0-1-2 with theta 0: 0's only neighbor is a friend.
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let fx = build_family_x(&g, &vertex_friends(&g, 0.0), 2);
        let owned = fx.owned_by(0);
        assert_eq!(owned.len(), 1);
        assert!(matches!(fx.sets()[owned[0] as usize].kind, XKind::Singleton { neighbor: 1 }));
    }

    #[test]
    fn equitable_examples() {
        let k3 = gen_cycle(3).unwrap();
        let p = equitable_partition(&k3);
        assert_eq!(p.len(), 3);
        assert_equitable(&k3, &p);

        let m = matching(3);
        let p = equitable_partition(&m);
        assert_eq!(p.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3]);
        assert_equitable(&m, &p);

        let e = Graph::empty(7);
        assert_eq!(equitable_partition(&e), vec![(0..7).collect::<Vec<_>>()]);
    }

    #[test]
    fn equitable_on_star_needs_balancing() {
        // Star K_{1,6}: Δ+1 = 7 parts of size 1.
        let g = Graph::from_edges(7, (1..7).map(|l| (0, l))).unwrap();
        let p = equitable_partition(&g);
        assert_equitable(&g, &p);
    }

    #[test]
    fn general_conditions_examples() {
        // K_5 base graph: one set holding every edge.
        let g = Graph::from_edges(5, (0..5u32).flat_map(|a| (a + 1..5).map(move |b| (a, b)))).unwrap();
        let cg = ConflictGraph::build(&g, 2).unwrap();
        let fm = vertex_friends(&g, 2.0);
        let all: Vec<EdgeId> = (0..g.m() as EdgeId).collect();
        let fx = FamilyX::from_sets(&g, fm, 2, vec![XSet { owner: 0, kind: XKind::Given, members: all }]);
        let rep = verify_general_conditions(&cg, &fx, 0.5, 0.5, 1).unwrap();
        let c2a = rep.entry("2a").unwrap();
        assert_eq!(c2a.measured, 10.0);
        assert!(!c2a.pass);

        let c6 = gen_cycle(6).unwrap();
        let cg = ConflictGraph::build(&c6, 2).unwrap();
        let fx = build_family_x(&c6, &vertex_friends(&c6, 2.0), 2);
        let rep = verify_general_conditions(&cg, &fx, 0.5, 0.5, 1).unwrap();
        assert_eq!(rep.entry("1").unwrap().measured, 4.0);

        // theta = 0 on C_6 makes every owner's neighbors friends: singletons only.
        let fx = build_family_x(&c6, &vertex_friends(&c6, 0.0), 2);
        assert!(fx.sets().iter().all(|s| s.members.len() == 1));
        let rep = verify_general_conditions(&cg, &fx, 0.5, 0.5, 1).unwrap();
        assert!(rep.entry("3a").unwrap().pass && rep.entry("3b").unwrap().pass);
        assert!(rep.entry("3a").unwrap().note.is_some());
    }

    #[test]
    fn kst_values() {
        assert_eq!(kst_bound(4, 4, 2, 2), 12.0);
        assert_eq!(kst_bound(9, 9, 2, 2), 36.0);
        let b = kst_bound(7, 7, 2, 2);
        assert!((b - (7.0 * 7f64.sqrt() + 7.0)).abs() < 1e-12);
        assert!(kst_holds(21, 7, 7, 2, 2));
    }

    #[test]
    fn bondy_simonovits_values() {
        assert!((bondy_simonovits_bound(100, 2) - 200_000.0).abs() < 1e-6);
        assert!((bondy_simonovits_bound(1, 3) - 300.0).abs() < 1e-12);
        assert!(bondy_simonovits_holds(&gen_cycle(5).unwrap(), 2));
    }

    #[test]
    fn spectral_small() {
        let c5 = second_eigenvalue(&gen_cycle(5).unwrap(), 1e-9).unwrap();
        assert!((c5.lambda2 - 2.0 * (2.0 * std::f64::consts::PI / 5.0).cos()).abs() < 1e-7);
        let k33 = second_eigenvalue(&gen_complete_bipartite(3, 3).unwrap(), 1e-9).unwrap();
        assert!(k33.lambda2.abs() < 1e-7);
        assert!((k33.max_abs_nontrivial - 3.0).abs() < 1e-6);
        let p = second_eigenvalue(&gen_petersen(), 1e-9).unwrap();
        assert!((p.lambda2 - 1.0).abs() < 1e-7 && p.converged);
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert!(matches!(second_eigenvalue(&path, 1e-6), Err(Error::NotRegular)));
    }

    #[test]
    fn mixing_trivial_sets() {
        let p = gen_petersen();
        let mut tally = MixingTally::new(&p, 2.0);
        tally.record(30, 10, 10);
        tally.record(0, 0, 7);
        assert_eq!(tally.report.max_deviation, 0.0);
    }

    #[test]
    fn mixing_petersen_exhaustive_standard_form() {
        let rep = expander_mixing_exhaustive(&gen_petersen(), 2.0).unwrap();
        assert_eq!(rep.samples, 1 << 20);
        assert_eq!(rep.standard_violations, 0);
        let sampled = expander_mixing_check(&gen_petersen(), 2.0, 1000, 9).unwrap();
        assert_eq!(sampled.standard_violations, 0);
    }
}
