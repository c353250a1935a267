//! Parameter schedule of the nibble.
//!
//! All quantities are real-valued. With `K = eps/1000`, `eta = K/ln Delta`:
//!
//! ```text
//! L_1 = (1+eps) Delta / ln Delta        T_1 = Delta
//! keep_i  = (1 - eta/L_i)^T_i
//! L_{i+1} = L_i keep_i (1 - ln^-2 Delta)
//! T_{i+1} = T_i keep_i (1 - eta keep_i)(1 + ln^-2 Delta)
//! Q_1 = gamma Delta / (10 ln^18 Delta)  B_1 = Delta (gamma - ln^-2 Delta)
//! Q, B follow the T multiplier;  X_i = T_i^gamma;  r_i = T_i / L_i
//! ```
//!
//! `i*` is the first index with `L_i >= 8 T_i`. Natural logarithms
//! throughout.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// `K = eps / 1000`.
    pub k_const: f64,
    pub eta: f64,
    pub l: Vec<f64>,
    pub t: Vec<f64>,
    pub keep: Vec<f64>,
    pub q: Vec<f64>,
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub r: Vec<f64>,
    /// 1-based; `None` when the recurrence did not reach `L_i >= 8 T_i`.
    pub i_star: Option<usize>,
    pub warnings: Vec<String>,
}

/// Per-iteration values handed to the nibble.
#[derive(Debug, Clone, Copy)]
pub struct IterationParams {
    pub i: usize,
    pub eta: f64,
    pub l: f64,
    pub t: f64,
}

impl Schedule {
    /// Hard iteration cap `10 ln^{3/2} Delta`.
    pub fn iteration_cap(delta: f64) -> usize {
        (10.0 * delta.ln().powf(1.5)).floor() as usize
    }

    /// Runs the recurrence until it closes, hits the iteration cap, or the
    /// list size falls to `eta` (beyond which `keep` is undefined). Never
    /// fails on non-closure; see [`build_schedule`] for the strict form.
    pub fn trajectory(delta: f64, epsilon: f64, gamma: f64) -> Result<Schedule> {
        let log_delta = delta.ln();
        if !(delta.is_finite() && log_delta > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Delta must satisfy ln Delta > 1 (Delta >= 3), got {delta}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {gamma}")));
        }
        let mut warnings = Vec::new();
        if epsilon >= 1.0 {
            warnings.push(format!("epsilon = {epsilon} lies outside (0,1)"));
        }
        let inv_log2 = log_delta.powi(-2);
        let k_const = epsilon / 1000.0;
        let eta = k_const / log_delta;
        let cap = Self::iteration_cap(delta);

        let mut s = Schedule {
            delta,
            epsilon,
            gamma,
            k_const,
            eta,
            l: vec![(1.0 + epsilon) * delta / log_delta],
            t: vec![delta],
            keep: Vec::new(),
            q: vec![gamma * delta / (10.0 * log_delta.powi(18))],
            x: Vec::new(),
            b: vec![delta * (gamma - inv_log2)],
            r: Vec::new(),
            i_star: None,
            warnings,
        };
        loop {
            let i = s.l.len() - 1;
            let (l, t) = (s.l[i], s.t[i]);
            s.x.push(t.powf(gamma));
            s.r.push(t / l);
            if l >= 8.0 * t {
                s.i_star = Some(i + 1);
                s.keep.push(keep_value(eta, l, t));
                break;
            }
            if i + 1 >= cap || l <= eta {
                s.keep.push(keep_value(eta, l, t));
                break;
            }
            let keep = keep_value(eta, l, t);
            s.keep.push(keep);
            let t_mult = keep * (1.0 - eta * keep) * (1.0 + inv_log2);
            s.l.push(l * keep * (1.0 - inv_log2));
            s.t.push(t * t_mult);
            s.q.push(s.q[i] * t_mult);
            s.b.push(s.b[i] * t_mult);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }

    pub fn log_delta(&self) -> f64 {
        self.delta.ln()
    }

    /// Values for 1-based iteration `i`.
    pub fn params(&self, i: usize) -> IterationParams {
        IterationParams {
            i,
            eta: self.eta,
            l: self.l[i - 1],
            t: self.t[i - 1],
        }
    }

    /// Writes the trajectory as CSV: `i,L,T,keep,Q,X,B,r`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "i,L,T,keep,Q,X,B,r")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                i + 1,
                self.l[i],
                self.t[i],
                self.keep[i],
                self.q[i],
                self.x[i],
                self.b[i],
                self.r[i]
            )?;
        }
        Ok(())
    }
}

/// `(1 - eta/L)^T` evaluated as `exp(T log1p(-eta/L))`.
pub fn keep_value(eta: f64, l: f64, t: f64) -> f64 {
    (t * (-eta / l).ln_1p()).exp()
}

/// Builds the schedule and requires it to close within the iteration cap.
pub fn build_schedule(delta: f64, epsilon: f64, gamma: f64) -> Result<Schedule> {
    let s = Schedule::trajectory(delta, epsilon, gamma)?;
    if s.i_star.is_some() {
        return Ok(s);
    }
    Err(Error::ScheduleDidNotClose {
        cap: Schedule::iteration_cap(delta),
        last_ratio: *s.r.last().expect("trajectory is nonempty"),
        trajectory: Box::new(s),
    })
}

/// `floor(L_i)`, with a warning once the schedule has run below one color.
pub fn integer_view(s: &Schedule, i: usize) -> (usize, Option<String>) {
    integer_target(s.l[i - 1])
}

pub fn integer_target(l: f64) -> (usize, Option<String>) {
    if l < 1.0 {
        (0, Some("schedule exhausted".to_string()))
    } else {
        (l.floor() as usize, None)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ItemCheck {
    pub item: String,
    pub holds: bool,
    /// First 1-based index at which the inequality fails.
    pub first_failure: Option<usize>,
    /// Worst value of `lhs / rhs` (or relative error for identities).
    pub worst: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheckReport {
    /// Items were evaluated for `1 <= i <= checked_through`.
    pub checked_through: usize,
    pub i_star: Option<usize>,
    pub i_star_bound: f64,
    pub items: Vec<ItemCheck>,
    pub all_hold: bool,
}

const IDENTITY_TOL: f64 = 1e-10;

/// Evaluates the parameter inequalities at every index up to
/// `min(i*, ln^{3/2} Delta)` (the whole computed trajectory, capped at
/// `ln^{3/2} Delta`, when the schedule did not close):
///
/// * (i) `keep_i >= keep_1 > e^-K`
/// * (ii) `r_i <= r_1 (1 - eta keep_1)^{i-1} exp(4(i-1)/ln^2 Delta) <= r_1 < ln Delta`
/// * (iii) `L_i > 10 Delta^{eps/2}`, (iv) `T_i > Delta^{eps/2}`
/// * (v) `B_i/T_i = gamma - ln^-2 Delta`, (vi) `T_i/Q_i = (10/gamma) ln^18 Delta`
/// * (vii) `B_i/Q_i > 5 ln^18 Delta`, (viii) `Q_i/X_i > Delta^{(1-gamma) eps/3}`
/// * rough: `A_{i+1} <= A_i <= 2 A_{i+1}` for `A` in `B, L, Q, T, X`, `i < i*`
/// * r-rate: `i* <= ln^{3/2} Delta`
pub fn verify_schedule_properties(s: &Schedule) -> PropertyCheckReport {
    let log_delta = s.log_delta();
    let bound = log_delta.powf(1.5);
    let limit = s.i_star.unwrap_or(s.len()).min(bound.floor() as usize).min(s.len()).max(1);
    let idx = 0..limit;
    let inv_log2 = log_delta.powi(-2);
    let log18 = log_delta.powi(18);

    let mut items = Vec::new();
    let mut check = |name: &str, ratios: Vec<(usize, f64, bool)>| {
        let first_failure = ratios.iter().find(|r| !r.2).map(|r| r.0 + 1);
        let worst = ratios.iter().map(|r| r.1).fold(f64::NAN, f64::max);
        items.push(ItemCheck {
            item: name.to_string(),
            holds: first_failure.is_none(),
            first_failure,
            worst,
        });
    };

    let keep1 = s.keep[0];
    check(
        "i",
        idx.clone()
            .map(|i| {
                let ok = s.keep[i] >= keep1 && keep1 > (-s.k_const).exp();
                (i, keep1 / s.keep[i], ok)
            })
            .collect(),
    );
    check(
        "ii",
        idx.clone()
            .map(|i| {
                let j = i as f64;
                let envelope = s.r[0] * (1.0 - s.eta * keep1).powf(j) * (4.0 * j * inv_log2).exp();
                // Rounding slack on the envelope only; the outer chain is exact.
                let ok = s.r[i] <= envelope * (1.0 + 1e-12) && envelope <= s.r[0] * (1.0 + 1e-12) && s.r[0] < log_delta;
                (i, s.r[i] / s.r[0], ok)
            })
            .collect(),
    );
    let l_floor = 10.0 * s.delta.powf(s.epsilon / 2.0);
    check("iii", idx.clone().map(|i| (i, l_floor / s.l[i], s.l[i] > l_floor)).collect());
    let t_floor = s.delta.powf(s.epsilon / 2.0);
    check("iv", idx.clone().map(|i| (i, t_floor / s.t[i], s.t[i] > t_floor)).collect());
    let bt = s.gamma - inv_log2;
    check(
        "v",
        idx.clone()
            .map(|i| {
                let rel = (s.b[i] / s.t[i] - bt).abs() / bt.abs();
                (i, rel, rel <= IDENTITY_TOL)
            })
            .collect(),
    );
    let tq = 10.0 / s.gamma * log18;
    check(
        "vi",
        idx.clone()
            .map(|i| {
                let rel = (s.t[i] / s.q[i] - tq).abs() / tq;
                (i, rel, rel <= IDENTITY_TOL)
            })
            .collect(),
    );
    check(
        "vii",
        idx.clone()
            .map(|i| {
                let ratio = s.b[i] / s.q[i];
                (i, 5.0 * log18 / ratio, ratio > 5.0 * log18)
            })
            .collect(),
    );
    let qx_floor = s.delta.powf((1.0 - s.gamma) * s.epsilon / 3.0);
    check(
        "viii",
        idx.clone()
            .map(|i| {
                let ratio = s.q[i] / s.x[i];
                (i, qx_floor / ratio, ratio > qx_floor)
            })
            .collect(),
    );
    let rough_end = match s.i_star {
        Some(star) => star.saturating_sub(1).min(limit),
        None => limit.min(s.len().saturating_sub(1)),
    };
    check(
        "rough",
        (0..rough_end)
            .map(|i| {
                let ok = [&s.b, &s.l, &s.q, &s.t, &s.x]
                    .iter()
                    .all(|a| a[i + 1] <= a[i] && a[i] <= 2.0 * a[i + 1]);
                (i, 0.0, ok)
            })
            .collect(),
    );
    let rate_ok = s.i_star.is_some_and(|star| star as f64 <= bound);
    check("r-rate", vec![(s.i_star.unwrap_or(s.len()) - 1, s.i_star.map_or(f64::INFINITY, |v| v as f64 / bound), rate_ok)]);

    let all_hold = items.iter().all(|c| c.holds);
    PropertyCheckReport {
        checked_through: limit,
        i_star: s.i_star,
        i_star_bound: bound,
        items,
        all_hold,
    }
}
