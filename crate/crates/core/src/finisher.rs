//! Completing the residual coloring.
//!
//! When every list is at least `ratio` times the largest color degree,
//! symmetric Moser–Tardos resampling finds a proper list coloring of the
//! residual. Otherwise a greedy list coloring is tried, and as a last resort
//! the palette is extended: each remaining vertex takes the smallest color
//! unused by its neighbors in the full conflict graph.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Color, ConflictGraph, Vertex};
use crate::nibble::{ListState, PartialColoring};
use crate::rng::{stream, DOMAIN_FINISH};

#[derive(Debug, Clone, Serialize)]
pub struct FinishConfig {
    pub ratio_required: f64,
    /// Resampling cap; `None` means `1000 |V|`.
    pub resample_cap: Option<usize>,
    pub seed: u64,
}

impl Default for FinishConfig {
    fn default() -> Self {
        FinishConfig {
            ratio_required: 8.0,
            resample_cap: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LllOutcome {
    /// `(vertex, color)` for every uncolored vertex of the residual.
    pub assignment: Vec<(Vertex, Color)>,
    /// Constraint resampling events; each redraws two vertices.
    pub resamplings: usize,
}

impl LllOutcome {
    pub fn vertex_resamples(&self) -> usize {
        2 * self.resamplings
    }
}

/// Checks `|L(v)| >= max(1, ratio * D)` where `D` is the largest current
/// color degree, recomputed from the live lists.
pub fn check_lll_precondition(state: &ListState, ratio: f64) -> Result<()> {
    let max_t = state
        .uncolored()
        .flat_map(|v| {
            state
                .colors(v)
                .map(move |c| state.live_neighbors(v).iter().filter(|&&u| state.contains(u, c)).count())
        })
        .max()
        .unwrap_or(0);
    let need = (ratio * max_t as f64).max(1.0);
    match state.uncolored().find(|&v| (state.list_len(v) as f64) < need) {
        Some(v) => Err(Error::FinisherPrecondition {
            vertex: v,
            list_size: state.list_len(v),
            max_color_degree: max_t,
            ratio,
        }),
        None => Ok(()),
    }
}

/// Moser–Tardos on the residual: draw every vertex uniformly from its list,
/// then while some live edge is monochromatic, redraw both endpoints of the
/// lexicographically smallest such edge.
pub fn finish_lll(state: &ListState, cfg: &FinishConfig) -> Result<LllOutcome> {
    if cfg.ratio_required < 2.0 {
        return Err(Error::InvalidParameter("finisher ratio must be at least 2".into()));
    }
    check_lll_precondition(state, cfg.ratio_required)?;
    let residual: Vec<Vertex> = state.uncolored().collect();
    let lists: Vec<Vec<Color>> = (0..state.n() as Vertex).map(|v| state.list(v)).collect();
    let mut rng = stream(cfg.seed, DOMAIN_FINISH, 0);
    let draw = |rng: &mut ChaCha8Rng, v: Vertex| {
        let l = &lists[v as usize];
        l[rng.gen_range(0..l.len())]
    };

    let mut color: Vec<Option<Color>> = vec![None; state.n()];
    for &v in &residual {
        color[v as usize] = Some(draw(&mut rng, v));
    }
    let mut violated = BTreeSet::new();
    for &v in &residual {
        for &u in state.live_neighbors(v) {
            if u > v && color[u as usize] == color[v as usize] {
                violated.insert((v, u));
            }
        }
    }

    let cap = cfg.resample_cap.unwrap_or(1000 * state.n().max(1));
    let mut resamplings = 0;
    while let Some(&(a, b)) = violated.iter().next() {
        if resamplings == cap {
            return Err(Error::ResampleCapExhausted {
                cap,
                violated: violated.len(),
            });
        }
        resamplings += 1;
        for v in [a, b] {
            for &u in state.live_neighbors(v) {
                violated.remove(&(u.min(v), u.max(v)));
            }
            color[v as usize] = Some(draw(&mut rng, v));
        }
        for v in [a, b] {
            for &u in state.live_neighbors(v) {
                if color[u as usize] == color[v as usize] {
                    violated.insert((u.min(v), u.max(v)));
                }
            }
        }
    }
    Ok(LllOutcome {
        assignment: residual.iter().map(|&v| (v, color[v as usize].unwrap())).collect(),
        resamplings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GreedyOutcome {
    Colored(Vec<(Vertex, Color)>),
    Stuck { vertex: Vertex, list_size: usize, live_degree: usize },
}

/// Vertices in decreasing live degree (then id); each takes the smallest
/// list color not used by an already colored live neighbor.
pub fn finish_greedy(state: &ListState) -> GreedyOutcome {
    let mut order: Vec<Vertex> = state.uncolored().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(state.live_neighbors(v).len()), v));
    let mut color: Vec<Option<Color>> = vec![None; state.n()];
    let mut out = Vec::with_capacity(order.len());
    for v in order {
        let taken: Vec<Color> = state.live_neighbors(v).iter().filter_map(|&u| color[u as usize]).collect();
        match state.colors(v).find(|c| !taken.contains(c)) {
            Some(c) => {
                color[v as usize] = Some(c);
                out.push((v, c));
            }
            None => {
                return GreedyOutcome::Stuck {
                    vertex: v,
                    list_size: state.list_len(v),
                    live_degree: state.live_neighbors(v).len(),
                }
            }
        }
    }
    out.sort_unstable();
    GreedyOutcome::Colored(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FinisherKind {
    None,
    Lll,
    Greedy,
    Extension,
}

#[derive(Debug, Clone, Serialize)]
pub struct Completion {
    pub colors: Vec<Color>,
    pub finisher: FinisherKind,
    pub resamplings: usize,
    /// Vertices that received a color outside their list.
    pub extended: usize,
    /// Why earlier finishers were skipped.
    pub notes: Vec<String>,
}

/// Completes `partial` on `cg` from the residual lists in `state`.
pub fn complete_coloring(cg: &ConflictGraph, partial: &PartialColoring, state: &ListState, cfg: &FinishConfig) -> Result<Completion> {
    let mut notes = Vec::new();
    let merge = |assignment: &[(Vertex, Color)]| {
        let mut colors: Vec<Option<Color>> = partial.color.clone();
        for &(v, c) in assignment {
            colors[v as usize] = Some(c);
        }
        colors
    };
    if state.uncolored_count() == 0 {
        return Ok(Completion {
            colors: partial.color.iter().map(|c| c.expect("no residual")).collect(),
            finisher: FinisherKind::None,
            resamplings: 0,
            extended: 0,
            notes,
        });
    }
    match finish_lll(state, cfg) {
        Ok(out) => {
            let colors = merge(&out.assignment);
            return Ok(Completion {
                colors: colors.into_iter().map(Option::unwrap).collect(),
                finisher: FinisherKind::Lll,
                resamplings: out.resamplings,
                extended: 0,
                notes,
            });
        }
        Err(e @ Error::FinisherPrecondition { .. }) => notes.push(e.to_string()),
        Err(e) => return Err(e),
    }
    match finish_greedy(state) {
        GreedyOutcome::Colored(assignment) => {
            let colors = merge(&assignment);
            return Ok(Completion {
                colors: colors.into_iter().map(Option::unwrap).collect(),
                finisher: FinisherKind::Greedy,
                resamplings: 0,
                extended: 0,
                notes,
            });
        }
        GreedyOutcome::Stuck { vertex, list_size, live_degree } => notes.push(format!(
            "greedy stuck at vertex {vertex} (list size {list_size}, live degree {live_degree})"
        )),
    }
    let (colors, extended) = finish_extend(cg, partial, state);
    Ok(Completion {
        colors,
        finisher: FinisherKind::Extension,
        resamplings: 0,
        extended,
        notes,
    })
}

/// Greedy over the residual in decreasing live degree, preferring list
/// colors and otherwise taking the smallest color absent from every colored
/// neighbor in the full conflict graph. Uses at most `Δ(cg) + 1` colors
/// beyond those already in `partial`.
pub fn finish_extend(cg: &ConflictGraph, partial: &PartialColoring, state: &ListState) -> (Vec<Color>, usize) {
    let mut color = partial.color.clone();
    let mut order: Vec<Vertex> = state.uncolored().collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(state.live_neighbors(v).len()), v));
    let mut extended = 0;
    for v in order {
        let mut taken: Vec<Color> = cg.neighbors(v).iter().filter_map(|&u| color[u as usize]).collect();
        taken.sort_unstable();
        let c = match state.colors(v).find(|c| taken.binary_search(c).is_err()) {
            Some(c) => c,
            None => {
                extended += 1;
                (0..).find(|c| taken.binary_search(c).is_err()).unwrap()
            }
        };
        color[v as usize] = Some(c);
    }
    (color.into_iter().map(|c| c.expect("every vertex colored")).collect(), extended)
}
