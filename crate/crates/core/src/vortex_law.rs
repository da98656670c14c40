//! Center-line phase profile of `u1` and the kinematic-vortex motion law.
//!
//! With `u1(0, y) = g(y) exp(i beta(y))` normalized so that `u1(0, 0) = 1`,
//! the leading-order order parameter on `x = 0` is proportional to
//! `g(y) cos(beta(y) - chi t)`, so vortices sit where
//! `chi t = beta(y) + pi/2 + n pi`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid};

/// Samples below this fraction of `max g` have no reliable phase.
const AMPLITUDE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct BetaProfile {
    /// Ascending sample positions on `[-K, K]`; one of them is `y = 0`.
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    pub beta: Vec<f64>,
    pub unreliable: Vec<bool>,
    /// Index of `y = 0`.
    pub origin: usize,
    /// `u1(0, 0)` before rescaling.
    pub scale: Complex64,
}

impl BetaProfile {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Piecewise-linear `beta(y)`.
    pub fn eval(&self, y: f64) -> f64 {
        let k = match self.y.partition_point(|&v| v <= y) {
            0 => 0,
            p if p >= self.len() => self.len() - 2,
            p => p - 1,
        };
        let s = (y - self.y[k]) / (self.y[k + 1] - self.y[k]);
        self.beta[k] + s * (self.beta[k + 1] - self.beta[k])
    }

    pub fn min(&self) -> f64 {
        self.beta.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.beta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Second-order one-sided `beta'` at `y = -K` and `y = K`.
    pub fn boundary_slopes(&self) -> (f64, f64) {
        let (b, y, m) = (&self.beta, &self.y, self.len() - 1);
        let lo = (-3.0 * b[0] + 4.0 * b[1] - b[2]) / (y[2] - y[0]);
        let hi = (3.0 * b[m] - 4.0 * b[m - 1] + b[m - 2]) / (y[m] - y[m - 2]);
        (lo, hi)
    }
}

/// Phase and modulus of `u1 / u1(0, 0)` along `x = 0`.
pub fn extract_beta(grid: &Grid, u1: &ComplexField) -> Result<BetaProfile> {
    u1.check_grid(grid)?;
    let scale = u1.center_value(grid);
    if !(scale.norm() > 1e-8) {
        return Err(Error::Unnormalizable(scale.norm()));
    }
    let mut y: Vec<f64> = (0..grid.ny()).map(|j| grid.y(j)).collect();
    let mut vals: Vec<Complex64> = u1.center_line(grid).into_iter().map(|v| v / scale).collect();
    let origin = if grid.ny() % 2 == 1 {
        grid.ny() / 2
    } else {
        let o = grid.ny() / 2;
        y.insert(o, 0.0);
        vals.insert(o, Complex64::new(1.0, 0.0));
        o
    };
    let g: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
    let gmax = g.iter().copied().fold(0.0, f64::max);
    let unreliable: Vec<bool> = g.iter().map(|&v| v < AMPLITUDE_FLOOR * gmax).collect();
    let mut beta = vec![f64::NAN; y.len()];
    beta[origin] = 0.0;
    for dir in [1isize, -1] {
        let mut last = origin;
        let mut j = origin as isize + dir;
        while j >= 0 && (j as usize) < y.len() {
            let k = j as usize;
            if !unreliable[k] {
                beta[k] = beta[last] + (vals[k] / vals[last]).arg();
                last = k;
            }
            j += dir;
        }
    }
    fill_unreliable(&y, &mut beta);
    Ok(BetaProfile { y, g, beta, unreliable, origin, scale })
}

/// Linear interpolation through NaN gaps; constant extension at the ends.
fn fill_unreliable(y: &[f64], beta: &mut [f64]) {
    let known: Vec<usize> = (0..beta.len()).filter(|&k| beta[k].is_finite()).collect();
    for k in 0..beta.len() {
        if beta[k].is_finite() {
            continue;
        }
        let p = known.partition_point(|&m| m < k);
        beta[k] = match (p.checked_sub(1).map(|q| known[q]), known.get(p)) {
            (Some(a), Some(&b)) => {
                let s = (y[k] - y[a]) / (y[b] - y[a]);
                beta[a] + s * (beta[b] - beta[a])
            }
            (Some(a), None) => beta[a],
            (None, Some(&b)) => beta[b],
            (None, None) => 0.0,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    /// One interior maximum.
    DownwardHump,
    /// One interior minimum.
    UpwardHump,
    Monotone,
    MinAndMax,
    Other,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scenario::DownwardHump => "DOWNWARD_HUMP",
            Scenario::UpwardHump => "UPWARD_HUMP",
            Scenario::Monotone => "MONOTONE",
            Scenario::MinAndMax => "MIN_AND_MAX",
            Scenario::Other => "OTHER",
        };
        f.write_str(s)
    }
}

/// Interior extremum of the smoothed profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub y: f64,
    pub beta: f64,
    pub is_max: bool,
}

/// Interior extrema of `beta` whose prominence exceeds `prominence`.
///
/// Slopes come from a 5-point local linear fit; extrema with smaller
/// height difference to a neighboring extremum are removed in pairs.
pub fn critical_points(beta: &BetaProfile, prominence: f64) -> Vec<CriticalPoint> {
    let n = beta.len();
    let slope = |k: usize| -> f64 {
        let lo = k.saturating_sub(2);
        let hi = (k + 2).min(n - 1);
        let m = (hi - lo + 1) as f64;
        let ym = beta.y[lo..=hi].iter().sum::<f64>() / m;
        let bm = beta.beta[lo..=hi].iter().sum::<f64>() / m;
        let (mut num, mut den) = (0.0, 0.0);
        for q in lo..=hi {
            num += (beta.y[q] - ym) * (beta.beta[q] - bm);
            den += (beta.y[q] - ym).powi(2);
        }
        num / den
    };
    // (index, value, interior)
    let mut pts: Vec<(usize, f64, bool)> = vec![(0, beta.beta[0], false)];
    let mut prev = 0.0f64;
    for k in 0..n {
        let s = slope(k);
        if s == 0.0 {
            continue;
        }
        if prev != 0.0 && s.signum() != prev.signum() && k > 0 {
            // extremum between k-1 and k: take the extreme sample nearby
            let lo = k.saturating_sub(2);
            let hi = (k + 1).min(n - 1);
            let pick = (lo..=hi)
                .max_by(|&a, &b| {
                    let (va, vb) = (beta.beta[a] * prev.signum(), beta.beta[b] * prev.signum());
                    va.total_cmp(&vb)
                })
                .unwrap();
            if pick > 0 && pick < n - 1 {
                pts.push((pick, beta.beta[pick], true));
            }
        }
        prev = s;
    }
    pts.push((n - 1, beta.beta[n - 1], false));
    loop {
        let mut worst: Option<(usize, f64)> = None;
        for w in 0..pts.len() - 1 {
            if !(pts[w].2 || pts[w + 1].2) {
                continue;
            }
            let d = (pts[w + 1].1 - pts[w].1).abs();
            if d < prominence && worst.is_none_or(|(_, v)| d < v) {
                worst = Some((w, d));
            }
        }
        let Some((w, _)) = worst else { break };
        match (pts[w].2, pts[w + 1].2) {
            (true, true) => {
                pts.drain(w..=w + 1);
            }
            (true, false) => {
                pts.remove(w);
            }
            _ => {
                pts.remove(w + 1);
            }
        }
        // endpoints may now be flanked by a same-type extremum; drop those
        // interior points that no longer alternate
        let mut k = 1;
        while k + 1 < pts.len() {
            let (a, b, c) = (pts[k - 1].1, pts[k].1, pts[k + 1].1);
            if pts[k].2 && (b - a) * (c - b) > 0.0 {
                pts.remove(k);
            } else {
                k += 1;
            }
        }
    }
    let interior: Vec<(usize, f64)> = pts.iter().filter(|p| p.2).map(|p| (p.0, p.1)).collect();
    interior
        .iter()
        .enumerate()
        .map(|(q, &(k, v))| {
            let left = if q == 0 { beta.beta[0] } else { interior[q - 1].1 };
            CriticalPoint {
                y: beta.y[k],
                beta: v,
                is_max: v > left,
            }
        })
        .collect()
}

/// Scenario tag with the default prominence of 0.05 rad.
pub fn classify_scenario(beta: &BetaProfile) -> Scenario {
    classify_scenario_with(beta, 0.05)
}

pub fn classify_scenario_with(beta: &BetaProfile, prominence: f64) -> Scenario {
    let cps = critical_points(beta, prominence);
    let maxima = cps.iter().filter(|c| c.is_max).count();
    let minima = cps.len() - maxima;
    match (minima, maxima) {
        (0, 0) => Scenario::Monotone,
        (0, 1) => Scenario::DownwardHump,
        (1, 0) => Scenario::UpwardHump,
        (1, 1) => Scenario::MinAndMax,
        _ => Scenario::Other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VortexEventKind {
    BoundaryEntry,
    BoundaryExit,
    PairCreation,
    PairAnnihilation,
    /// Two same-degree zeros meet.
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VortexEvent {
    pub t: f64,
    pub y: f64,
    pub kind: VortexEventKind,
    pub n: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VortexTrack {
    pub n: i64,
    /// Index of the monotone piece of `beta` the zero lives on.
    pub segment: usize,
    /// Winding number, counterclockwise positive; 0 until assigned.
    pub degree: i32,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prediction {
    pub chi: f64,
    pub tracks: Vec<VortexTrack>,
    pub events: Vec<VortexEvent>,
}

/// Monotone pieces of the piecewise-linear profile, as sample index ranges.
fn monotone_segments(beta: &BetaProfile) -> Vec<(usize, usize)> {
    let b = &beta.beta;
    let mut cuts = vec![0];
    let mut dir = 0.0f64;
    for k in 1..b.len() {
        let d = (b[k] - b[k - 1]).signum();
        if b[k] == b[k - 1] {
            continue;
        }
        if dir != 0.0 && d != dir {
            cuts.push(k - 1);
        }
        dir = d;
    }
    cuts.push(b.len() - 1);
    cuts.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| a < b).collect()
}

/// Root of `beta(y) = c` on a monotone piece containing `c` in its range.
fn segment_root(beta: &BetaProfile, seg: (usize, usize), c: f64) -> f64 {
    let (b, y) = (&beta.beta, &beta.y);
    let up = b[seg.1] > b[seg.0];
    for k in seg.0..seg.1 {
        let (lo, hi) = if up { (b[k], b[k + 1]) } else { (b[k + 1], b[k]) };
        if c >= lo && c <= hi {
            if hi == lo {
                return y[k];
            }
            let s = (c - b[k]) / (b[k + 1] - b[k]);
            return y[k] + s * (y[k + 1] - y[k]);
        }
    }
    if (c - b[seg.0]).abs() < (c - b[seg.1]).abs() {
        y[seg.0]
    } else {
        y[seg.1]
    }
}

fn level(chi: f64, t: f64, n: i64) -> f64 {
    chi * t - FRAC_PI_2 - n as f64 * PI
}

fn branch_range(beta: &BetaProfile, chi: f64, window: (f64, f64)) -> std::ops::RangeInclusive<i64> {
    let lo = ((chi * window.0 - FRAC_PI_2 - beta.max()) / PI).ceil() as i64;
    let hi = ((chi * window.1 - FRAC_PI_2 - beta.min()) / PI).floor() as i64;
    lo..=hi
}

/// All center-line zeros at time `t` as `(n, y)`, ascending in `y`.
pub fn roots_at(beta: &BetaProfile, chi: f64, t: f64) -> Vec<(i64, f64)> {
    let mut out = Vec::new();
    for n in branch_range(beta, chi, (t, t)) {
        let c = level(chi, t, n);
        for seg in monotone_segments(beta) {
            let (a, b) = (beta.beta[seg.0], beta.beta[seg.1]);
            if c >= a.min(b) && c < a.max(b) {
                out.push((n, segment_root(beta, seg, c)));
            }
        }
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    out
}

/// Zeros of the motion law over `window`, one track per (monotone piece,
/// branch), with boundary and interior events.
///
/// Interior extrema give `PairCreation` (minima) and `PairAnnihilation`
/// (maxima); `assign_degrees` relabels same-degree mergers as `Collision`.
pub fn predict_vortices(beta: &BetaProfile, chi: f64, window: (f64, f64)) -> Result<Prediction> {
    const SAMPLES: usize = 65;
    if !(chi > 0.0 && chi.is_finite()) {
        return Err(Error::param("chi", "must be > 0"));
    }
    if !(window.1 > window.0) {
        return Err(Error::param("t_window", "empty window"));
    }
    if beta.len() < 3 {
        return Err(Error::Invalid("beta profile needs at least 3 samples".into()));
    }
    let segs = monotone_segments(beta);
    let last = beta.len() - 1;
    let mut tracks = Vec::new();
    let mut events: Vec<VortexEvent> = Vec::new();
    for n in branch_range(beta, chi, window) {
        for (s, &seg) in segs.iter().enumerate() {
            let (a, b) = (beta.beta[seg.0], beta.beta[seg.1]);
            let (lo_k, hi_k) = if a < b { (seg.0, seg.1) } else { (seg.1, seg.0) };
            let t_lo = (beta.beta[lo_k] + FRAC_PI_2 + n as f64 * PI) / chi;
            let t_hi = (beta.beta[hi_k] + FRAC_PI_2 + n as f64 * PI) / chi;
            let t0 = t_lo.max(window.0);
            let t1 = t_hi.min(window.1);
            if t0 > t1 {
                continue;
            }
            let points = (0..SAMPLES)
                .map(|q| {
                    let t = t0 + (t1 - t0) * q as f64 / (SAMPLES - 1) as f64;
                    let y = segment_root(beta, seg, level(chi, t, n).clamp(a.min(b), a.max(b)));
                    (t, y)
                })
                .collect();
            tracks.push(VortexTrack { n, segment: s, degree: 0, points });
            for (k, t, start) in [(lo_k, t_lo, true), (hi_k, t_hi, false)] {
                if t < window.0 || t > window.1 {
                    continue;
                }
                let kind = match (k == 0 || k == last, start) {
                    (true, true) => VortexEventKind::BoundaryEntry,
                    (true, false) => VortexEventKind::BoundaryExit,
                    (false, true) => VortexEventKind::PairCreation,
                    (false, false) => VortexEventKind::PairAnnihilation,
                };
                let y = beta.y[k];
                if !events.iter().any(|e| e.n == n && e.kind == kind && e.y == y) {
                    events.push(VortexEvent { t, y, kind, n });
                }
            }
        }
    }
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.y.total_cmp(&b.y)));
    Ok(Prediction { chi, tracks, events })
}

/// Winding number of `psi` around a square loop of half-side `r`.
pub fn winding(grid: &Grid, psi: &ComplexField, x: f64, y: f64, r: f64) -> i32 {
    const PER_SIDE: usize = 8;
    let corners = [(r, -r), (r, r), (-r, r), (-r, -r), (r, -r)];
    let mut pts = Vec::with_capacity(4 * PER_SIDE);
    for w in corners.windows(2) {
        for q in 0..PER_SIDE {
            let s = q as f64 / PER_SIDE as f64;
            let px = w[0].0 + s * (w[1].0 - w[0].0);
            let py = w[0].1 + s * (w[1].1 - w[0].1);
            pts.push(psi.interpolate(grid, x + px, y + py));
        }
    }
    let mut total = 0.0;
    for q in 0..pts.len() {
        total += (pts[(q + 1) % pts.len()] / pts[q]).arg();
    }
    (total / (2.0 * PI)).round() as i32
}

/// Fills track degrees from the winding of `e^{-i chi t} u + c.c.^dagger`
/// (with `u` normalized to `u(0,0) = 1`) and relabels interior mergers of
/// same-degree zeros as collisions.
pub fn assign_degrees(pred: &mut Prediction, grid: &Grid, u1_normalized: &ComplexField) {
    let dagger = u1_normalized.pt_conjugate(grid);
    let r = 2.0 * grid.dx().max(grid.dy());
    let k = grid.half_height();
    for track in &mut pred.tracks {
        // the point farthest from the boundary gives the cleanest loop
        let &(t, y) = track
            .points
            .iter()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("tracks are non-empty");
        if k - y.abs() < r {
            continue;
        }
        let a = Complex64::from_polar(1.0, -pred.chi * t);
        let psi = &u1_normalized.scaled(a) + &dagger.scaled(a.conj());
        track.degree = winding(grid, &psi, 0.0, y, r);
    }
    let tol = 1e-9 * (1.0 + pred.events.iter().map(|e| e.t.abs()).fold(0.0, f64::max));
    for ev in &mut pred.events {
        if ev.kind != VortexEventKind::PairAnnihilation {
            continue;
        }
        let meeting: Vec<i32> = pred
            .tracks
            .iter()
            .filter(|tr| tr.n == ev.n)
            .filter(|tr| {
                let &(te, ye) = tr.points.last().unwrap();
                (te - ev.t).abs() < tol && (ye - ev.y).abs() < 1e-9
            })
            .map(|tr| tr.degree)
            .collect();
        if meeting.len() == 2 && meeting[0] != 0 && meeting[0] == meeting[1] {
            ev.kind = VortexEventKind::Collision;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(f: impl Fn(f64) -> f64, m: usize) -> BetaProfile {
        let k = 2.0 / 3.0;
        let y: Vec<f64> = (0..m).map(|j| -k + 2.0 * k * j as f64 / (m - 1) as f64).collect();
        let beta: Vec<f64> = y.iter().map(|&v| f(v) - f(0.0)).collect();
        BetaProfile {
            origin: m / 2,
            g: vec![1.0; m],
            unreliable: vec![false; m],
            scale: Complex64::new(1.0, 0.0),
            y,
            beta,
        }
    }

    #[test]
    fn classifies_synthetic_shapes() {
        let k = 2.0 / 3.0;
        let hump = profile(|y| -(y - 0.1).powi(2), 41);
        assert_eq!(classify_scenario(&hump), Scenario::DownwardHump);
        let cup = profile(|y| 2.0 * (y + 0.1).powi(2), 41);
        assert_eq!(classify_scenario(&cup), Scenario::UpwardHump);
        let mono = profile(|y| (PI * y / (2.0 * k)).sin(), 41);
        assert_eq!(classify_scenario(&mono), Scenario::Monotone);
        let both = profile(|y| (1.5 * PI * y / k).sin(), 41);
        assert_eq!(classify_scenario(&both), Scenario::MinAndMax);
        // wiggles below the prominence threshold are ignored
        let noisy = profile(|y| (PI * y / (2.0 * k)).sin() + 0.01 * (40.0 * y).sin(), 81);
        assert_eq!(classify_scenario(&noisy), Scenario::Monotone);
    }

    #[test]
    fn downward_hump_event_sequence() {
        // maximum at y = -0.1, lower end value at +K
        let beta = profile(|y| 1.0 - (y + 0.1).powi(2), 61);
        let chi = 2.5;
        let pred = predict_vortices(&beta, chi, (0.0, 4.0 * PI / chi)).unwrap();
        let kinds: Vec<_> = pred.events.iter().map(|e| (e.kind, e.y.signum())).collect();
        use VortexEventKind::*;
        let cycle = [(BoundaryEntry, 1.0f64), (BoundaryEntry, -1.0), (PairAnnihilation, -1.0)];
        let start = kinds.iter().position(|k| *k == cycle[0]).unwrap();
        for (q, k) in kinds[start..].iter().enumerate() {
            assert_eq!(*k, cycle[q % 3]);
        }
        let entries: Vec<f64> = pred
            .events
            .iter()
            .filter(|e| e.kind == BoundaryEntry && e.y > 0.0)
            .map(|e| e.t)
            .collect();
        for w in entries.windows(2) {
            assert!((w[1] - w[0] - PI / chi).abs() < 1e-12);
        }
    }

    #[test]
    fn winding_of_canonical_zeros() {
        let g = Grid::new(&crate::grid::Params::canonical(), 21, 15).unwrap();
        let v = ComplexField::from_fn(&g, Complex64::new);
        assert_eq!(winding(&g, &v, 0.0, 0.0, 0.2), 1);
        assert_eq!(winding(&g, &v.conj(), 0.0, 0.0, 0.2), -1);
        assert_eq!(winding(&g, &v, 0.5, 0.3, 0.1), 0);
    }
}
