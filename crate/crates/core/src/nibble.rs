//! The wasteful coloring procedure.
//!
//! One iteration (the nibble) activates each uncolored vertex with
//! probability `eta`, assigns it a uniform color from its list, deletes that
//! color from the next list of every neighbor that could conflict (whether
//! or not the assigner keeps it), colors the vertices whose assigned color
//! survived, and finally flips an equalizing coin for every remaining
//! `(v, c)` so that each color survives with the same probability `keep_i`.
//! Trim then cuts lists back to the scheduled size and drops conflict edges
//! whose endpoint lists became disjoint.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Color, ConflictGraph, Vertex};
use crate::rng::{at_block, derive_seed, stream, DOMAIN_ACTIVATION, DOMAIN_COIN};
use crate::schedule::{integer_target, IterationParams, Schedule};
use crate::structure::FamilyX;

/// Per-vertex color lists over the live (uncolored, unpruned) conflict graph.
#[derive(Debug, Clone)]
pub struct ListState {
    iteration: usize,
    k: usize,
    words: usize,
    bits: Vec<u64>,
    sizes: Vec<u32>,
    uncolored: Vec<bool>,
    live: Vec<Vec<Vertex>>,
    /// `t(v, c)` at `v * k + c`.
    tvc: Vec<u32>,
    dirty: Vec<bool>,
}

/// Every vertex uncolored with list `{0, ..., k-1}`.
pub fn init_lists(cg: &ConflictGraph, k: usize) -> Result<ListState> {
    if k == 0 {
        return Err(Error::InvalidParameter("list size k must be at least 1".into()));
    }
    let lists = vec![(0..k as Color).collect::<Vec<_>>(); cg.n()];
    ListState::from_lists(cg, k, &lists)
}

impl ListState {
    /// Arbitrary initial lists drawn from the palette `[0, k)`.
    pub fn from_lists(cg: &ConflictGraph, k: usize, lists: &[Vec<Color>]) -> Result<Self> {
        let n = cg.n();
        if lists.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} lists, got {}", lists.len())));
        }
        let words = k.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        let mut sizes = vec![0u32; n];
        for (v, list) in lists.iter().enumerate() {
            for &c in list {
                if c as usize >= k {
                    return Err(Error::InvalidParameter(format!("color {c} outside palette of size {k}")));
                }
                let w = &mut bits[v * words + c as usize / 64];
                if *w & (1 << (c % 64)) == 0 {
                    *w |= 1 << (c % 64);
                    sizes[v] += 1;
                }
            }
        }
        let live: Vec<Vec<Vertex>> = (0..n as Vertex).map(|v| cg.neighbors(v).to_vec()).collect();
        let mut s = ListState {
            iteration: 1,
            k,
            words,
            bits,
            sizes,
            uncolored: vec![true; n],
            live,
            tvc: vec![0; n * k],
            dirty: vec![true; n],
        };
        let tvc: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|v| {
                let mut row = vec![0u32; k];
                for &u in &s.live[v] {
                    for c in s.colors(u) {
                        row[c as usize] += 1;
                    }
                }
                row
            })
            .collect();
        for (v, row) in tvc.into_iter().enumerate() {
            s.tvc[v * k..(v + 1) * k].copy_from_slice(&row);
        }
        s.prune_disjoint();
        Ok(s)
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn n(&self) -> usize {
        self.sizes.len()
    }

    /// Palette width.
    pub fn k(&self) -> usize {
        self.k
    }

    fn row(&self, v: Vertex) -> &[u64] {
        &self.bits[v as usize * self.words..(v as usize + 1) * self.words]
    }

    pub fn contains(&self, v: Vertex, c: Color) -> bool {
        (c as usize) < self.k && self.row(v)[c as usize / 64] >> (c % 64) & 1 == 1
    }

    /// Colors of `L(v)` in increasing order.
    pub fn colors(&self, v: Vertex) -> impl Iterator<Item = Color> + '_ {
        self.row(v).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    wi as Color * 64 + b
                })
            })
        })
    }

    pub fn list(&self, v: Vertex) -> Vec<Color> {
        self.colors(v).collect()
    }

    pub fn list_len(&self, v: Vertex) -> usize {
        self.sizes[v as usize] as usize
    }

    pub fn is_uncolored(&self, v: Vertex) -> bool {
        self.uncolored[v as usize]
    }

    pub fn uncolored(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.n() as Vertex).filter(|&v| self.uncolored[v as usize])
    }

    pub fn uncolored_count(&self) -> usize {
        self.uncolored.iter().filter(|&&b| b).count()
    }

    pub fn live_neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.live[v as usize]
    }

    pub fn live_edge_count(&self) -> usize {
        self.live.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// `t(v, c)`: uncolored live neighbors of `v` whose list contains `c`.
    pub fn color_degree(&self, v: Vertex, c: Color) -> usize {
        self.tvc[v as usize * self.k + c as usize] as usize
    }

    /// `T(v, c)` as a sorted vertex list.
    pub fn color_neighbors(&self, v: Vertex, c: Color) -> Vec<Vertex> {
        self.live[v as usize].iter().copied().filter(|&u| self.contains(u, c)).collect()
    }

    /// Largest `t(v, c)` over uncolored `v` and `c ∈ L(v)`.
    pub fn max_color_degree(&self) -> usize {
        self.uncolored()
            .flat_map(|v| self.colors(v).map(move |c| self.color_degree(v, c)))
            .max()
            .unwrap_or(0)
    }

    fn lists_intersect(&self, u: Vertex, v: Vertex) -> bool {
        self.row(u).iter().zip(self.row(v)).any(|(a, b)| a & b != 0)
    }

    /// Removes `c` from `L(v)`, keeping neighbor color degrees current.
    pub fn remove_color(&mut self, v: Vertex, c: Color) -> bool {
        if !self.contains(v, c) {
            return false;
        }
        self.bits[v as usize * self.words + c as usize / 64] &= !(1 << (c % 64));
        self.sizes[v as usize] -= 1;
        self.dirty[v as usize] = true;
        if self.uncolored[v as usize] {
            for &u in &self.live[v as usize] {
                self.tvc[u as usize * self.k + c as usize] -= 1;
            }
        }
        true
    }

    fn remove_live_edge(&mut self, u: Vertex, v: Vertex) {
        let k = self.k;
        for (a, b) in [(u, v), (v, u)] {
            let pos = self.live[a as usize].binary_search(&b).expect("edge is live");
            self.live[a as usize].remove(pos);
            for c in self.colors(b).collect::<Vec<_>>() {
                self.tvc[a as usize * k + c as usize] -= 1;
            }
        }
    }

    /// Takes `v` out of the live graph; its list is kept for inspection.
    fn mark_colored(&mut self, v: Vertex) {
        for u in std::mem::take(&mut self.live[v as usize]) {
            let pos = self.live[u as usize].binary_search(&v).expect("adjacency is symmetric");
            self.live[u as usize].remove(pos);
            for c in self.colors(v).collect::<Vec<_>>() {
                self.tvc[u as usize * self.k + c as usize] -= 1;
            }
        }
        self.uncolored[v as usize] = false;
        let k = self.k;
        self.tvc[v as usize * k..(v as usize + 1) * k].fill(0);
    }

    /// Drops live edges whose endpoint lists are disjoint. Only edges at a
    /// vertex whose list changed since the last pass can newly qualify.
    fn prune_disjoint(&mut self) -> usize {
        let mut doomed = Vec::new();
        for v in 0..self.n() as Vertex {
            if !self.dirty[v as usize] {
                continue;
            }
            for &u in &self.live[v as usize] {
                if (u > v || !self.dirty[u as usize]) && !self.lists_intersect(u, v) {
                    doomed.push((v.min(u), v.max(u)));
                }
            }
        }
        doomed.sort_unstable();
        doomed.dedup();
        for &(u, v) in &doomed {
            self.remove_live_edge(u, v);
        }
        self.dirty.fill(false);
        doomed.len()
    }
}

/// Vertex colorings built up across iterations.
#[derive(Debug, Clone, Serialize)]
pub struct PartialColoring {
    pub color: Vec<Option<Color>>,
    /// Iteration in which each vertex was colored.
    pub round: Vec<Option<usize>>,
}

impl PartialColoring {
    pub fn new(n: usize) -> Self {
        PartialColoring {
            color: vec![None; n],
            round: vec![None; n],
        }
    }

    pub fn colored_count(&self) -> usize {
        self.color.iter().filter(|c| c.is_some()).count()
    }
}

/// `min{1, (1 - eta/L)^{T - t}}`.
pub fn equalizing_probability(eta: f64, l: f64, t_big: f64, t: usize) -> f64 {
    let exponent = t_big - t as f64;
    if exponent <= 0.0 {
        return 1.0;
    }
    (exponent * (-eta / l).ln_1p()).exp().min(1.0)
}

/// What happened during one nibble, for replay and diagnostics.
#[derive(Debug, Clone, Default)]
pub struct IterationTranscript {
    pub iteration: usize,
    /// Activated vertices with their assigned colors, by vertex id.
    pub assignments: Vec<(Vertex, Color)>,
    pub newly_colored: Vec<(Vertex, Color)>,
    /// `(vertex, color)` deletions caused by assignments.
    pub wasteful_deletions: usize,
    /// Deletions caused by equalizing coins.
    pub coin_deletions: usize,
    /// Mean of `|L_{i+1}(v)| / |L_i(v)|` over vertices still uncolored.
    pub survival: f64,
}

/// One nibble on `state` with the iteration's parameters. Randomness for
/// vertex `v` comes from the activation stream at block `v`, and the coin
/// for `(v, c)` from the coin stream at block `(v << 32) | c`.
pub fn nibble_iteration(state: &ListState, params: IterationParams, seed: u64) -> (ListState, IterationTranscript) {
    let n = state.n();
    let i = params.i as u64;
    let activation = stream(seed, DOMAIN_ACTIVATION, i);
    let coins = stream(seed, DOMAIN_COIN, i);

    // N1 + N3 proposals.
    let assigned: Vec<Option<Color>> = (0..n as Vertex)
        .into_par_iter()
        .map(|v| {
            if !state.is_uncolored(v) {
                return None;
            }
            let mut rng = activation.clone();
            at_block(&mut rng, v as u64);
            let active = rng.gen::<f64>() < params.eta;
            let len = state.list_len(v);
            if !active || len == 0 {
                return None;
            }
            state.colors(v).nth(rng.gen_range(0..len))
        })
        .collect();

    // N3 deletions merged in vertex order.
    let mut deleted: Vec<Vec<Color>> = vec![Vec::new(); n];
    let mut assignments = Vec::new();
    for (v, c) in assigned.iter().enumerate() {
        let Some(c) = *c else { continue };
        assignments.push((v as Vertex, c));
        for &u in state.live_neighbors(v as Vertex) {
            if state.contains(u, c) {
                deleted[u as usize].push(c);
            }
        }
    }
    for d in &mut deleted {
        d.sort_unstable();
        d.dedup();
    }

    // N4.
    let newly_colored: Vec<(Vertex, Color)> = assignments
        .iter()
        .copied()
        .filter(|&(v, c)| deleted[v as usize].binary_search(&c).is_err())
        .collect();
    let mut colored_now = vec![false; n];
    for &(v, _) in &newly_colored {
        colored_now[v as usize] = true;
    }

    // N5 coins for vertices that stay uncolored.
    let coin_losses: Vec<Vec<Color>> = (0..n as Vertex)
        .into_par_iter()
        .map(|v| {
            if !state.is_uncolored(v) || colored_now[v as usize] {
                return Vec::new();
            }
            let mut rng = coins.clone();
            state
                .colors(v)
                .filter(|&c| {
                    at_block(&mut rng, ((v as u64) << 32) | c as u64);
                    let keep = equalizing_probability(params.eta, params.l, params.t, state.color_degree(v, c));
                    rng.gen::<f64>() >= keep
                })
                .collect()
        })
        .collect();

    let mut next = state.clone();
    let mut wasteful = 0;
    let mut coin = 0;
    for v in 0..n as Vertex {
        for &c in &deleted[v as usize] {
            wasteful += next.remove_color(v, c) as usize;
        }
        for &c in &coin_losses[v as usize] {
            coin += next.remove_color(v, c) as usize;
        }
    }
    for &(v, _) in &newly_colored {
        next.mark_colored(v);
    }
    next.iteration = state.iteration + 1;

    let survivors: Vec<Vertex> = next.uncolored().collect();
    let survival = if survivors.is_empty() {
        1.0
    } else {
        survivors
            .iter()
            .map(|&v| {
                let before = state.list_len(v);
                if before == 0 {
                    1.0
                } else {
                    next.list_len(v) as f64 / before as f64
                }
            })
            .sum::<f64>()
            / survivors.len() as f64
    };

    let transcript = IterationTranscript {
        iteration: params.i,
        assignments,
        newly_colored,
        wasteful_deletions: wasteful,
        coin_deletions: coin,
        survival,
    };
    (next, transcript)
}

/// Cuts every uncolored list to at most `target` colors, deleting colors
/// with the largest `t(v, c)` first (larger color id on ties), then prunes
/// live edges whose endpoint lists are disjoint.
pub fn trim(state: &ListState, target: usize) -> ListState {
    let drops: Vec<Vec<Color>> = (0..state.n() as Vertex)
        .into_par_iter()
        .map(|v| {
            let len = state.list_len(v);
            if !state.is_uncolored(v) || len <= target {
                return Vec::new();
            }
            let mut cs = state.list(v);
            cs.sort_by_key(|&c| std::cmp::Reverse((state.color_degree(v, c), c)));
            cs.truncate(len - target);
            cs
        })
        .collect();
    let mut next = state.clone();
    for (v, cs) in drops.iter().enumerate() {
        for &c in cs {
            next.remove_color(v as Vertex, c);
        }
    }
    next.prune_disjoint();
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Theory,
    Empirical,
}

/// Which properties to evaluate. `Cheap` covers P1, P2 and P5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyScope {
    All,
    Cheap,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyEntry {
    pub property: &'static str,
    pub checked: bool,
    pub pass: bool,
    /// Worst value seen (minimum list size for P1, maxima otherwise).
    pub measured: f64,
    pub bound: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub iteration: usize,
    pub scope: PropertyScope,
    pub entries: Vec<PropertyEntry>,
    /// Violation counts keyed by bad-event family.
    pub bad_events: BTreeMap<&'static str, usize>,
    pub all_pass: bool,
}

impl PropertyReport {
    pub fn entry(&self, property: &str) -> &PropertyEntry {
        self.entries.iter().find(|e| e.property == property).expect("known property")
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.entries.iter().filter(|e| e.checked && !e.pass).map(|e| e.property).collect()
    }
}

struct Tracker {
    property: &'static str,
    event: &'static str,
    bound: f64,
    worst: Option<f64>,
    minimize: bool,
    violations: usize,
    witness: Option<String>,
}

impl Tracker {
    fn new(property: &'static str, event: &'static str, bound: f64, minimize: bool) -> Self {
        Tracker {
            property,
            event,
            bound,
            worst: None,
            minimize,
            violations: 0,
            witness: None,
        }
    }

    fn observe(&mut self, value: f64, violated: bool, witness: impl FnOnce() -> String) {
        let better = match self.worst {
            None => true,
            Some(w) if self.minimize => value < w,
            Some(w) => value > w,
        };
        if better {
            self.worst = Some(value);
        }
        if violated {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn finish(self, checked: bool, events: &mut BTreeMap<&'static str, usize>) -> PropertyEntry {
        if checked {
            events.insert(self.event, self.violations);
        }
        PropertyEntry {
            property: self.property,
            checked,
            pass: !checked || self.violations == 0,
            measured: self.worst.unwrap_or(0.0),
            bound: self.bound,
            witness: self.witness,
        }
    }
}

/// Evaluates Property P(i) on `state` against the schedule's `i`-th values.
/// Stranger pairs are enumerated only within live distance two, since all
/// others have no common neighbors.
pub fn check_properties(state: &ListState, fx: &FamilyX, s: &Schedule, i: usize, scope: PropertyScope) -> PropertyReport {
    assert!(i >= 1 && i <= s.len(), "iteration {i} outside schedule of length {}", s.len());
    let (l_int, _) = integer_target(s.l[i - 1]);
    let (t_i, q_i, x_i, b_i) = (s.t[i - 1], s.q[i - 1], s.x[i - 1], s.b[i - 1]);
    let all = scope == PropertyScope::All;
    let k = state.k();

    let mut p1 = Tracker::new("P1", "L", l_int as f64, true);
    let mut p2 = Tracker::new("P2", "T", t_i, false);
    for v in state.uncolored() {
        let len = state.list_len(v);
        p1.observe(len as f64, len != l_int, || format!("vertex {v} has {len} colors"));
        for c in state.colors(v) {
            let t = state.color_degree(v, c);
            p2.observe(t as f64, t as f64 > t_i, || format!("t({v},{c}) = {t}"));
        }
    }

    let mut p3 = Tracker::new("P3", "Q", q_i, false);
    if all {
        let mut counts = vec![0usize; k];
        let mut seen = vec![false; state.n()];
        for u in state.uncolored() {
            let mut partners: Vec<Vertex> = Vec::new();
            for &w in state.live_neighbors(u) {
                for &v in state.live_neighbors(w) {
                    if v > u && !seen[v as usize] {
                        seen[v as usize] = true;
                        partners.push(v);
                    }
                }
            }
            partners.sort_unstable();
            for &v in &partners {
                seen[v as usize] = false;
                if fx.edges_are_friends(u, v) {
                    continue;
                }
                for w in common_sorted(state.live_neighbors(u), state.live_neighbors(v)) {
                    for c in state.colors(w) {
                        counts[c as usize] += 1;
                    }
                }
                for c in 0..k as Color {
                    let q = std::mem::take(&mut counts[c as usize]);
                    if q > 0 && state.contains(u, c) && state.contains(v, c) {
                        p3.observe(q as f64, q as f64 > q_i, || format!("q({u},{v},{c}) = {q}"));
                    }
                }
            }
        }
    }

    let mut p4 = Tracker::new("P4", "QX", q_i, false);
    let mut p5 = Tracker::new("P5", "EX", x_i, false);
    let mut p6 = Tracker::new("P6", "BX", t_i - b_i, false);
    for (id, set) in fx.sets().iter().enumerate() {
        let members: Vec<Vertex> = set.members.iter().copied().filter(|&v| state.is_uncolored(v)).collect();
        let mut per_color = vec![0usize; k];
        for &v in &members {
            for c in state.colors(v) {
                per_color[c as usize] += 1;
            }
        }
        for (c, &x) in per_color.iter().enumerate() {
            if x > 0 {
                p5.observe(x as f64, x as f64 > x_i, || format!("|X_{id}({c})| = {x}"));
            }
        }
        let Some(bx) = fx.b_of(id) else { continue };
        if !all {
            continue;
        }
        for &v in &members {
            for c in state.colors(v) {
                let b = state.live_neighbors(v).iter().filter(|&&w| state.contains(w, c) && bx.binary_search(&w).is_ok()).count();
                let diff = state.color_degree(v, c) as f64 - b as f64;
                p6.observe(diff, diff > t_i - b_i, || format!("t - b^X at ({v},{c}) in set {id} = {diff}"));
            }
        }
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[a + 1..] {
                if !fx.edges_are_friends(u, v) {
                    continue;
                }
                let common: Vec<Vertex> = common_sorted(state.live_neighbors(u), state.live_neighbors(v))
                    .filter(|w| bx.binary_search(w).is_ok())
                    .collect();
                for c in state.colors(u).filter(|&c| state.contains(v, c)) {
                    let q = common.iter().filter(|&&w| state.contains(w, c)).count();
                    p4.observe(q as f64, q as f64 > q_i, || format!("q^X({u},{v},{c}) = {q} in set {id}"));
                }
            }
        }
    }

    let mut bad_events = BTreeMap::new();
    let entries = vec![
        p1.finish(true, &mut bad_events),
        p2.finish(true, &mut bad_events),
        p3.finish(all, &mut bad_events),
        p4.finish(all, &mut bad_events),
        p5.finish(true, &mut bad_events),
        p6.finish(all, &mut bad_events),
    ];
    let all_pass = entries.iter().all(|e| e.pass);
    PropertyReport {
        iteration: i,
        scope,
        entries,
        bad_events,
        all_pass,
    }
}

fn common_sorted<'a>(a: &'a [Vertex], b: &'a [Vertex]) -> impl Iterator<Item = Vertex> + 'a {
    let mut j = 0;
    a.iter().copied().filter(move |&x| {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        j < b.len() && b[j] == x
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub i: usize,
    pub n_uncolored: usize,
    pub min_list: usize,
    pub mean_list: f64,
    pub max_list: usize,
    pub max_tvc: usize,
    pub keep_pred: f64,
    pub keep_emp: f64,
    pub colored_round: usize,
    pub cumulative_colored: usize,
    pub retries: usize,
    #[serde(skip)]
    pub wall_ms: f64,
}

pub const TRACE_HEADER: &str = "i,n_uncolored,min_list,mean_list,max_list,max_tvc,keep_pred,keep_emp,colored_round,retries";

/// Writes the trace as CSV. Wall time is left out so reruns compare equal.
pub fn write_trace<W: Write>(trace: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{},{:.6},{},{},{:.9},{:.9},{},{}",
            r.i, r.n_uncolored, r.min_list, r.mean_list, r.max_list, r.max_tvc, r.keep_pred, r.keep_emp, r.colored_round, r.retries
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NibbleConfig {
    pub mode: Mode,
    pub retry_budget: usize,
    pub seed: u64,
    /// Palette width; defaults to `floor(L_1)`.
    pub k: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct NibbleRun {
    pub coloring: PartialColoring,
    pub state: ListState,
    pub trace: Vec<TraceRecord>,
    /// Property reports with at least one failure (empirical mode logs and
    /// continues).
    pub failed_reports: Vec<PropertyReport>,
    /// Set when the run stopped before the schedule's last iteration.
    pub halted: Option<String>,
    pub iterations: usize,
}

/// Runs nibble + trim for `i = 1, ..., i_end - 1`, where `i_end` is `i*`
/// when the schedule closes and its last index otherwise.
pub fn run_nibble(cg: &ConflictGraph, fx: &FamilyX, s: &Schedule, cfg: &NibbleConfig) -> Result<NibbleRun> {
    let k = match cfg.k {
        Some(k) => k,
        None => integer_target(s.l[0]).0,
    };
    let mut state = init_lists(cg, k)?;
    let mut coloring = PartialColoring::new(cg.n());
    let scope = match cfg.mode {
        Mode::Theory => PropertyScope::All,
        Mode::Empirical => PropertyScope::Cheap,
    };
    let mut failed_reports = Vec::new();
    let mut trace = Vec::new();
    let mut halted = None;

    let initial = check_properties(&state, fx, s, 1, scope);
    if !initial.all_pass {
        if cfg.mode == Mode::Theory {
            return Err(retry_error(1, 0, initial));
        }
        failed_reports.push(initial);
    }

    let i_end = s.i_star.unwrap_or(s.len());
    let mut iterations = 0;
    for i in 1..i_end {
        if state.uncolored_count() == 0 {
            halted = Some(format!("all vertices colored before iteration {i}"));
            break;
        }
        let (target, warn) = integer_target(s.l[i]);
        if let Some(w) = warn {
            halted = Some(format!("{w} at iteration {i}: L = {:.4}", s.l[i]));
            break;
        }
        let params = s.params(i);
        let started = Instant::now();
        let mut attempt = 0;
        let (next, transcript) = loop {
            let seed = if attempt == 0 { cfg.seed } else { derive_seed(cfg.seed, &[i as u64, attempt as u64]) };
            let (raw, transcript) = nibble_iteration(&state, params, seed);
            let trimmed = trim(&raw, target);
            let report = check_properties(&trimmed, fx, s, i + 1, scope);
            if report.all_pass {
                break (trimmed, transcript);
            }
            match cfg.mode {
                Mode::Empirical => {
                    failed_reports.push(report);
                    break (trimmed, transcript);
                }
                Mode::Theory if attempt >= cfg.retry_budget => {
                    return Err(retry_error(i + 1, attempt, report));
                }
                Mode::Theory => attempt += 1,
            }
        };
        for &(v, c) in &transcript.newly_colored {
            coloring.color[v as usize] = Some(c);
            coloring.round[v as usize] = Some(i);
        }
        state = next;
        iterations = i;
        trace.push(trace_record(&state, s, i, &transcript, coloring.colored_count(), attempt, started));
    }
    if halted.is_none() && s.i_star.is_none() {
        halted = Some(format!("schedule did not close; stopped at its last iteration {i_end}"));
    }
    Ok(NibbleRun {
        coloring,
        state,
        trace,
        failed_reports,
        halted,
        iterations,
    })
}

fn retry_error(iteration: usize, retries: usize, report: PropertyReport) -> Error {
    Error::RetryBudgetExhausted {
        iteration,
        retries,
        summary: format!("failing {:?}", report.failures()),
        report: Box::new(report),
    }
}

fn trace_record(state: &ListState, s: &Schedule, i: usize, tr: &IterationTranscript, cumulative: usize, retries: usize, started: Instant) -> TraceRecord {
    let sizes: Vec<usize> = state.uncolored().map(|v| state.list_len(v)).collect();
    let n_uncolored = sizes.len();
    TraceRecord {
        i,
        n_uncolored,
        min_list: sizes.iter().copied().min().unwrap_or(0),
        mean_list: if n_uncolored == 0 { 0.0 } else { sizes.iter().sum::<usize>() as f64 / n_uncolored as f64 },
        max_list: sizes.iter().copied().max().unwrap_or(0),
        max_tvc: state.max_color_degree(),
        keep_pred: s.keep[i - 1],
        keep_emp: tr.survival,
        colored_round: tr.newly_colored.len(),
        cumulative_colored: cumulative,
        retries,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::gen_cycle;
    use crate::graph::Graph;
    use crate::structure::{build_family_x, vertex_friends};

    fn complete(n: u32) -> Graph {
        Graph::from_edges(n as usize, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)))).unwrap()
    }

    fn conflict_of(base: &Graph) -> ConflictGraph {
        ConflictGraph::build(base, 2).unwrap()
    }

    fn params(eta: f64, l: f64, t: f64) -> IterationParams {
        IterationParams { i: 1, eta, l, t }
    }

    #[test]
    fn init_on_k5_conflict() {
        // Star with five leaves: its distance-2 conflict graph is K_5.
        let star = Graph::from_edges(6, (1..6).map(|l| (0, l))).unwrap();
        let cg = conflict_of(&star);
        assert_eq!(cg.graph(), &complete(5));
        let s = init_lists(&cg, 5).unwrap();
        for v in 0..5 {
            assert_eq!(s.list(v), vec![0, 1, 2, 3, 4]);
            for c in 0..5 {
                assert_eq!(s.color_degree(v, c), 4);
            }
        }
    }

    #[test]
    fn init_single_vertex() {
        let cg = conflict_of(&Graph::from_edges(2, [(0, 1)]).unwrap());
        let s = init_lists(&cg, 1).unwrap();
        assert_eq!(s.list(0), vec![0]);
        assert_eq!(s.color_degree(0, 0), 0);
    }

    #[test]
    fn init_c6() {
        let cg = conflict_of(&gen_cycle(6).unwrap());
        let s = init_lists(&cg, 3).unwrap();
        for v in 0..6 {
            for c in 0..3 {
                assert_eq!(s.color_degree(v, c), 4);
            }
        }
        assert!(init_lists(&cg, 0).is_err());
    }

    #[test]
    fn equalizing_examples() {
        assert_eq!(equalizing_probability(0.1, 100.0, 50.0, 50), 1.0);
        assert_eq!(equalizing_probability(0.1, 100.0, 50.0, 60), 1.0);
        let p = equalizing_probability(0.1, 100.0, 50.0, 40);
        assert!((p - 0.999f64.powi(10)).abs() < 1e-12);
        assert!((p - 0.990045).abs() < 1e-6);
    }

    #[test]
    fn zero_eta_changes_nothing_when_t_is_full() {
        let cg = conflict_of(&gen_cycle(6).unwrap());
        let s = init_lists(&cg, 3).unwrap();
        let (next, tr) = nibble_iteration(&s, params(0.0, 3.0, 4.0), 1);
        assert!(tr.assignments.is_empty() && tr.newly_colored.is_empty());
        for v in 0..6 {
            assert_eq!(next.list(v), s.list(v));
        }
    }

    #[test]
    fn single_vertex_forced() {
        let cg = conflict_of(&Graph::from_edges(2, [(0, 1)]).unwrap());
        let s = init_lists(&cg, 1).unwrap();
        let (next, tr) = nibble_iteration(&s, params(1.0, 1.0, 0.0), 3);
        assert_eq!(tr.newly_colored, vec![(0, 0)]);
        assert!(!next.is_uncolored(0));
    }

    #[test]
    fn adjacent_clash_colors_neither() {
        // Two adjacent conflict vertices with single-color lists, both active.
        let cg = conflict_of(&Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap());
        let s = init_lists(&cg, 1).unwrap();
        let (next, tr) = nibble_iteration(&s, params(1.0, 1.0, 1.0), 11);
        assert_eq!(tr.assignments, vec![(0, 0), (1, 0)]);
        assert!(tr.newly_colored.is_empty());
        assert!(next.list(0).is_empty() && next.list(1).is_empty());
    }

    #[test]
    fn trim_examples() {
        let cg = conflict_of(&Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap());
        let s = ListState::from_lists(&cg, 5, &[vec![1, 2, 3, 4], vec![3, 4]]).unwrap();
        // t(0, c) = 1 for c in {3, 4} and 0 for {1, 2}: highest t goes first.
        assert_eq!(trim(&s, 2).list(0), vec![1, 2]);

        let s = ListState::from_lists(&cg, 5, &[vec![1, 2, 3, 4], vec![0]]).unwrap();
        // Lists already disjoint: edge pruned at construction, all t equal.
        assert_eq!(s.live_edge_count(), 0);
        let trimmed = trim(&s, 2);
        assert_eq!(trimmed.list(0), vec![1, 2]);
        assert_eq!(trim(&s, 10).list(0), vec![1, 2, 3, 4]);

        let s = ListState::from_lists(&cg, 5, &[vec![1, 2], vec![1, 4]]).unwrap();
        assert_eq!(s.live_edge_count(), 1);
        let mut s2 = s.clone();
        s2.remove_color(0, 1);
        let pruned = trim(&s2, 5);
        assert_eq!(pruned.live_edge_count(), 0);
        assert_eq!(pruned.color_degree(0, 2), 0);
        assert_eq!(pruned.color_degree(1, 4), 0);
    }

    #[test]
    fn color_degrees_track_recomputation() {
        let base = crate::generators::gen_petersen();
        let cg = conflict_of(&base);
        let mut s = init_lists(&cg, 12).unwrap();
        for i in 1..6 {
            let (next, _) = nibble_iteration(&s, IterationParams { i, eta: 0.3, l: 12.0, t: 40.0 }, 99);
            s = trim(&next, 12 - i);
            for v in s.uncolored() {
                for c in 0..12 {
                    let direct = s.live_neighbors(v).iter().filter(|&&u| s.is_uncolored(u) && s.contains(u, c)).count();
                    assert_eq!(s.color_degree(v, c), direct);
                }
                for &u in s.live_neighbors(v) {
                    assert!(s.lists_intersect(u, v));
                }
            }
        }
    }

    #[test]
    fn p1_forced_failure() {
        let base = gen_cycle(6).unwrap();
        let cg = conflict_of(&base);
        let fx = build_family_x(&base, &vertex_friends(&base, 2.0), 2);
        let s = Schedule::trajectory(4.0, 10.0, 0.5).unwrap();
        let k = integer_target(s.l[0]).0;
        let mut state = init_lists(&cg, k).unwrap();
        let fresh = check_properties(&state, &fx, &s, 1, PropertyScope::All);
        assert!(fresh.entry("P1").pass && fresh.entry("P2").pass);
        state.remove_color(2, 0);
        let rep = check_properties(&state, &fx, &s, 1, PropertyScope::All);
        let p1 = rep.entry("P1");
        assert!(!p1.pass);
        assert!(p1.witness.as_deref().unwrap().starts_with("vertex 2 "));
        assert_eq!(rep.bad_events["L"], 1);
    }

    #[test]
    fn p3_at_start_matches_audit() {
        let base = gen_cycle(6).unwrap();
        let cg = conflict_of(&base);
        let fm = vertex_friends(&base, 2.0);
        let fx = build_family_x(&base, &fm, 2);
        let s = Schedule::trajectory(4.0, 10.0, 0.5).unwrap();
        let state = init_lists(&cg, integer_target(s.l[0]).0).unwrap();
        let rep = check_properties(&state, &fx, &s, 1, PropertyScope::All);
        let audit = crate::structure::edge_strangers_codegree_audit(&cg, &fm);
        assert_eq!(rep.entry("P3").measured, audit.max_codegree as f64);
    }

    #[test]
    fn i_star_one_runs_no_iterations() {
        let base = gen_cycle(6).unwrap();
        let cg = conflict_of(&base);
        let fx = build_family_x(&base, &vertex_friends(&base, 2.0), 2);
        let s = Schedule::trajectory(4.0, 100.0, 0.5).unwrap();
        assert_eq!(s.i_star, Some(1));
        let run = run_nibble(&cg, &fx, &s, &NibbleConfig { mode: Mode::Empirical, retry_budget: 0, seed: 1, k: None }).unwrap();
        assert!(run.trace.is_empty());
        assert_eq!(run.coloring.colored_count(), 0);
    }

    #[test]
    fn run_is_deterministic() {
        let base = crate::generators::gen_random_regular(40, 4, 5).unwrap();
        let cg = conflict_of(&base);
        let fx = build_family_x(&base, &vertex_friends(&base, f64::INFINITY), 2);
        let s = Schedule::trajectory(32.0, 0.5, 0.5).unwrap();
        let cfg = NibbleConfig { mode: Mode::Empirical, retry_budget: 0, seed: 17, k: None };
        let a = run_nibble(&cg, &fx, &s, &cfg).unwrap();
        let b = run_nibble(&cg, &fx, &s, &cfg).unwrap();
        let (mut ta, mut tb) = (Vec::new(), Vec::new());
        write_trace(&a.trace, &mut ta).unwrap();
        write_trace(&b.trace, &mut tb).unwrap();
        assert_eq!(ta, tb);
        assert_eq!(a.coloring.color, b.coloring.color);
        assert!(a.halted.is_some());
    }
}
