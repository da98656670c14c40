//! Time integration of the full TDGL system
//! `psi_t + i phi psi = (grad - i h A0)^2 psi + (Gamma - |psi|^2) psi`,
//! `Laplace phi = div j_s`, with `phi = I phi0 + phi_tilde[psi]`.
//!
//! The linear part (covariant Laplacian, `-i I phi0`, `Gamma`) is treated by
//! Crank-Nicolson with one cached sparse LU; the cubic term and
//! `-i phi_tilde psi` are extrapolated with second-order Adams-Bashforth.
//! `phi_tilde` is re-solved from the current `psi` every step.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, Params, RealField};
use crate::poisson::{solve_divform, supercurrent, PoissonSolver};
use crate::sparse::{CsrMatrix, SparseLu};
use crate::spectral::Operator;

/// Default step: half the explicit diffusive limit.
pub fn default_dt(grid: &Grid) -> f64 {
    0.5 * grid.dx().min(grid.dy()).powi(2)
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub psi: ComplexField,
    /// Total potential `I phi0 + phi_tilde`, mean zero.
    pub phi: RealField,
    pub step: usize,
    prev_nonlinear: Option<Vec<Complex64>>,
}

impl SimState {
    pub fn max_abs(&self) -> f64 {
        self.psi.max_abs()
    }
}

/// Stepper for one parameter point and time step.
pub struct Simulator {
    op: Operator,
    solver: PoissonSolver,
    dt: f64,
    lu: SparseLu,
    /// `M - dt/2 (B - Gamma M)` applied to the unknowns.
    explicit: CsrMatrix,
    blowup: f64,
    nonlinear: bool,
}

impl Simulator {
    pub fn new(params: &Params, nx: usize, ny: usize, dt: f64) -> Result<Simulator> {
        Self::from_operator(Operator::new(params, nx, ny)?, dt)
    }

    pub fn from_operator(op: Operator, dt: f64) -> Result<Simulator> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", "must be > 0"));
        }
        let gamma = op.params().gamma;
        let half = Complex64::new(0.5 * dt, 0.0);
        let one = Complex64::new(1.0, 0.0);
        // (M + dt/2 (B - Gamma M)) and (M - dt/2 (B - Gamma M))
        let implicit = op.pencil().add_diagonal(half, one - half * gamma, op.mass());
        let explicit = op.pencil().add_diagonal(-half, one + half * gamma, op.mass());
        let lu = SparseLu::new(&implicit)?;
        let solver = PoissonSolver::new(op.grid());
        Ok(Simulator {
            blowup: 10.0 * gamma.max(0.0).sqrt(),
            op,
            solver,
            dt,
            lu,
            explicit,
            nonlinear: true,
        })
    }

    /// Drops the cubic and `phi_tilde` terms (linear dynamics only).
    pub fn linearized(mut self) -> Simulator {
        self.nonlinear = false;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &Params {
        self.op.params()
    }

    /// Initial state with lead values zeroed.
    pub fn init(&self, psi0: &ComplexField) -> Result<SimState> {
        psi0.check_grid(self.grid())?;
        if !psi0.is_finite() {
            return Err(Error::NonFinite("psi0"));
        }
        let psi = self.op.extend(&self.op.restrict(psi0));
        let phi = self.potential(&psi)?;
        Ok(SimState { t: 0.0, psi, phi, step: 0, prev_nonlinear: None })
    }

    /// `phi_tilde[psi]`.
    pub fn induced_potential(&self, psi: &ComplexField) -> Result<RealField> {
        solve_divform(&self.solver, &supercurrent(self.grid(), self.op.links(), psi))
    }

    fn potential(&self, psi: &ComplexField) -> Result<RealField> {
        let current = self.params().current;
        let tilde = self.induced_potential(psi)?;
        let phi0 = self.op.phi0();
        RealField::from_vec(
            self.grid(),
            tilde.values().iter().zip(phi0.values()).map(|(a, b)| a + current * b).collect(),
        )
    }

    /// `M (-|psi|^2 psi - i phi_tilde psi)` on the unknowns.
    fn nonlinear(&self, psi: &ComplexField, tilde: &RealField) -> Vec<Complex64> {
        let mass = self.op.mass();
        self.op
            .restrict(psi)
            .iter()
            .zip(self.op.restrict(&tilde.to_complex()))
            .zip(mass)
            .map(|((p, f), m)| m * (-p.norm_sqr() * p - Complex64::i() * f.re * p))
            .collect()
    }

    pub fn step(&self, state: &SimState) -> Result<SimState> {
        let nl = if self.nonlinear {
            // state.phi already holds I phi0 + phi_tilde[psi]
            let current = self.params().current;
            let tilde = RealField::from_vec(
                self.grid(),
                state.phi.values().iter().zip(self.op.phi0().values()).map(|(a, b)| a - current * b).collect(),
            )?;
            self.nonlinear(&state.psi, &tilde)
        } else {
            vec![Complex64::new(0.0, 0.0); self.op.dofs()]
        };
        let x = self.op.restrict(&state.psi);
        let mut rhs = self.explicit.mul_vec(&x);
        match &state.prev_nonlinear {
            Some(prev) => {
                for ((r, a), b) in rhs.iter_mut().zip(&nl).zip(prev) {
                    *r += self.dt * (1.5 * a - 0.5 * b);
                }
            }
            None => {
                for (r, a) in rhs.iter_mut().zip(&nl) {
                    *r += self.dt * a;
                }
            }
        }
        let next = self.lu.solve_vec(&rhs);
        let psi = self.op.extend(&next);
        let t = state.t + self.dt;
        let max_abs = psi.max_abs();
        if !max_abs.is_finite() || max_abs > self.blowup.max(10.0 * state.psi.max_abs()) {
            return Err(Error::BlowUp { t, max_abs });
        }
        let phi = self.potential(&psi)?;
        Ok(SimState { t, psi, phi, step: state.step + 1, prev_nonlinear: Some(nl) })
    }
}

/// Time series recorded by `run`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunRecord {
    pub t: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub total_degree: Vec<i32>,
    /// `psi(0, y)` at each probe position, one inner vector per sample time.
    pub probes: Vec<Vec<Complex64>>,
    pub probe_y: Vec<f64>,
}

impl RunRecord {
    fn push(&mut self, grid: &Grid, state: &SimState) {
        self.t.push(state.t);
        self.max_abs.push(state.max_abs());
        self.total_degree.push(detect_vortices(grid, &state.psi, 0.5).total_degree());
        self.probes.push(
            self.probe_y
                .iter()
                .map(|&y| state.psi.interpolate(grid, 0.0, y))
                .collect(),
        );
    }

    /// Series of probe `k`.
    pub fn probe(&self, k: usize) -> Vec<Complex64> {
        self.probes.iter().map(|p| p[k]).collect()
    }
}

/// Integrates to `t_end`, calling `observer` and recording every `stride`
/// steps (and at the start).
pub fn run(
    sim: &Simulator,
    psi0: &ComplexField,
    t_end: f64,
    stride: usize,
    probe_y: &[f64],
    mut observer: impl FnMut(&SimState),
) -> Result<(SimState, RunRecord)> {
    let stride = stride.max(1);
    let mut state = sim.init(psi0)?;
    let mut rec = RunRecord { probe_y: probe_y.to_vec(), ..Default::default() };
    rec.push(sim.grid(), &state);
    observer(&state);
    let steps = (t_end / sim.dt()).round().max(0.0) as usize;
    for k in 1..=steps {
        state = sim.step(&state)?;
        if k % stride == 0 {
            rec.push(sim.grid(), &state);
            observer(&state);
        }
    }
    Ok((state, rec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vortex {
    pub x: f64,
    pub y: f64,
    /// Counterclockwise winding is `+1`.
    pub degree: i32,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct VortexSnapshot {
    pub t: f64,
    pub vortices: Vec<Vortex>,
}

impl VortexSnapshot {
    pub fn total_degree(&self) -> i32 {
        self.vortices.iter().map(|v| v.degree).sum()
    }
}

/// Zero of the bilinear interpolant on the unit cell, if any.
fn bilinear_zero(c: [Complex64; 4]) -> (f64, f64) {
    // c = [f(0,0), f(1,0), f(1,1), f(0,1)]
    let f = |s: f64, t: f64| {
        (1.0 - s) * (1.0 - t) * c[0] + s * (1.0 - t) * c[1] + s * t * c[2] + (1.0 - s) * t * c[3]
    };
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..30 {
        let v = f(s, t);
        let ds = (1.0 - t) * (c[1] - c[0]) + t * (c[2] - c[3]);
        let dt = (1.0 - s) * (c[3] - c[0]) + s * (c[2] - c[1]);
        // real 2x2 Jacobian
        let (a, b, cc, d) = (ds.re, dt.re, ds.im, dt.im);
        let det = a * d - b * cc;
        if det.abs() < 1e-300 {
            break;
        }
        let us = (d * v.re - b * v.im) / det;
        let ut = (-cc * v.re + a * v.im) / det;
        s = (s - us).clamp(0.0, 1.0);
        t = (t - ut).clamp(0.0, 1.0);
        if us.abs() + ut.abs() < 1e-12 {
            break;
        }
    }
    (s, t)
}

/// Phase singularities of `psi`: plaquettes with nonzero winding whose four
/// corners all have `|psi| < threshold max|psi|`; edge-adjacent plaquettes of
/// equal degree are merged into one vortex at their centroid.
pub fn detect_vortices(grid: &Grid, psi: &ComplexField, threshold: f64) -> VortexSnapshot {
    let (nx, ny) = grid.shape();
    let cut = threshold * psi.max_abs();
    let mut hits: Vec<(usize, usize, i32, f64, f64)> = Vec::new();
    if cut == 0.0 {
        return VortexSnapshot::default();
    }
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c = [
                *psi.at(i, j),
                *psi.at(i + 1, j),
                *psi.at(i + 1, j + 1),
                *psi.at(i, j + 1),
            ];
            if c.iter().any(|v| v.norm() >= cut || *v == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let w: f64 = (0..4).map(|k| (c[(k + 1) % 4] / c[k]).arg()).sum();
            let deg = (w / (2.0 * std::f64::consts::PI)).round() as i32;
            if deg == 0 {
                continue;
            }
            let (s, t) = bilinear_zero(c);
            let x = grid.x(i) + s * (grid.x(i + 1) - grid.x(i));
            let y = grid.y(j) + t * (grid.y(j + 1) - grid.y(j));
            hits.push((i, j, deg, x, y));
        }
    }
    // union of edge-adjacent same-degree plaquettes
    let mut label: Vec<usize> = (0..hits.len()).collect();
    fn find(l: &mut [usize], a: usize) -> usize {
        let mut r = a;
        while l[r] != r {
            r = l[r];
        }
        l[a] = r;
        r
    }
    for a in 0..hits.len() {
        for b in a + 1..hits.len() {
            let (ia, ja, da, ..) = hits[a];
            let (ib, jb, db, ..) = hits[b];
            if da == db && ia.abs_diff(ib) + ja.abs_diff(jb) == 1 {
                let (ra, rb) = (find(&mut label, a), find(&mut label, b));
                label[ra] = rb;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for a in 0..hits.len() {
        let r = find(&mut label, a);
        groups.entry(r).or_default().push(a);
    }
    let vortices = groups
        .values()
        .map(|g| {
            let m = g.len() as f64;
            Vortex {
                x: g.iter().map(|&a| hits[a].3).sum::<f64>() / m,
                y: g.iter().map(|&a| hits[a].4).sum::<f64>() / m,
                degree: hits[g[0]].2.signum(),
            }
        })
        .collect();
    VortexSnapshot { t: 0.0, vortices }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TrackEventKind {
    BoundaryEntry,
    BoundaryExit,
    PairCreation,
    PairAnnihilation,
    /// Closest approach of two same-degree vortices.
    Collision,
    /// Appearance or disappearance not explained by the above.
    Unexplained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackEvent {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub kind: TrackEventKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct Track {
    pub degree: i32,
    /// `(t, x, y)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl Track {
    /// Largest distance from the first position.
    pub fn excursion(&self) -> f64 {
        let (_, x0, y0) = self.points[0];
        self.points
            .iter()
            .map(|&(_, x, y)| ((x - x0).powi(2) + (y - y0).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn duration(&self) -> f64 {
        self.points.last().unwrap().0 - self.points[0].0
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FullTrack {
    pub tracks: Vec<Track>,
    pub events: Vec<TrackEvent>,
}

/// Links vortex snapshots into tracks by greedy nearest-neighbor matching of
/// equal degrees, and classifies births and deaths.
///
/// Matches farther than 3 cells are refused; a refused match that could
/// only be explained by a long jump is reported as `StrideTooCoarse`.
pub fn track_vortices(grid: &Grid, snapshots: &[VortexSnapshot]) -> Result<FullTrack> {
    let cell = grid.dx().max(grid.dy());
    let reach = 3.0 * cell;
    let near_boundary = |x: f64, y: f64| {
        grid.half_width() - x.abs() < reach || grid.half_height() - y.abs() < reach
    };
    let mut out = FullTrack::default();
    // index of the live track for each vortex of the previous frame
    let mut live: Vec<usize> = Vec::new();
    let mut close: std::collections::HashMap<(usize, usize), (f64, usize)> = Default::default();
    for (f, snap) in snapshots.iter().enumerate() {
        let t = snap.t;
        let cur = &snap.vortices;
        if f == 0 {
            for v in cur {
                live.push(out.tracks.len());
                out.tracks.push(Track { degree: v.degree, points: vec![(t, v.x, v.y)] });
            }
            continue;
        }
        let prev: Vec<(f64, f64, i32)> = live
            .iter()
            .map(|&k| {
                let tr = &out.tracks[k];
                let &(_, x, y) = tr.points.last().unwrap();
                (x, y, tr.degree)
            })
            .collect();
        let mut cand: Vec<(f64, usize, usize)> = Vec::new();
        for (a, p) in prev.iter().enumerate() {
            for (b, v) in cur.iter().enumerate() {
                if p.2 == v.degree {
                    let d = ((p.0 - v.x).powi(2) + (p.1 - v.y).powi(2)).sqrt();
                    cand.push((d, a, b));
                }
            }
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut used_a = vec![false; prev.len()];
        let mut used_b = vec![None; cur.len()];
        for &(d, a, b) in &cand {
            if d <= reach && !used_a[a] && used_b[b].is_none() {
                used_a[a] = true;
                used_b[b] = Some(live[a]);
            }
        }
        // deaths
        let dead: Vec<usize> = (0..prev.len()).filter(|&a| !used_a[a]).collect();
        let born: Vec<usize> = (0..cur.len()).filter(|&b| used_b[b].is_none()).collect();
        for &a in &dead {
            let (x, y, deg) = prev[a];
            if let Some(&b) = born.iter().find(|&&b| cur[b].degree == deg) {
                let d = ((x - cur[b].x).powi(2) + (y - cur[b].y).powi(2)).sqrt();
                if d <= 2.0 * reach {
                    return Err(Error::StrideTooCoarse { t, cells: d / cell });
                }
            }
        }
        let mut paired = vec![false; prev.len()];
        for &a in &dead {
            let (x, y, deg) = prev[a];
            if paired[a] {
                continue;
            }
            let partner = dead.iter().copied().find(|&o| {
                o != a && !paired[o] && prev[o].2 == -deg && {
                    let d = ((x - prev[o].0).powi(2) + (y - prev[o].1).powi(2)).sqrt();
                    d <= reach
                }
            });
            let kind = if let Some(o) = partner {
                paired[o] = true;
                TrackEventKind::PairAnnihilation
            } else if near_boundary(x, y) {
                TrackEventKind::BoundaryExit
            } else {
                TrackEventKind::Unexplained
            };
            paired[a] = true;
            out.events.push(TrackEvent { t, x, y, kind });
        }
        let mut new_live = Vec::with_capacity(cur.len());
        let mut paired_b = vec![false; cur.len()];
        for (b, v) in cur.iter().enumerate() {
            match used_b[b] {
                Some(k) => {
                    out.tracks[k].points.push((t, v.x, v.y));
                    new_live.push(k);
                }
                None => {
                    if !paired_b[b] {
                        let partner = born.iter().copied().find(|&o| {
                            o != b && !paired_b[o] && cur[o].degree == -v.degree && {
                                let d = ((v.x - cur[o].x).powi(2) + (v.y - cur[o].y).powi(2)).sqrt();
                                d <= reach
                            }
                        });
                        let kind = if let Some(o) = partner {
                            paired_b[o] = true;
                            TrackEventKind::PairCreation
                        } else if near_boundary(v.x, v.y) {
                            TrackEventKind::BoundaryEntry
                        } else {
                            TrackEventKind::Unexplained
                        };
                        paired_b[b] = true;
                        out.events.push(TrackEvent { t, x: v.x, y: v.y, kind });
                    }
                    new_live.push(out.tracks.len());
                    out.tracks.push(Track { degree: v.degree, points: vec![(t, v.x, v.y)] });
                }
            }
        }
        live = new_live;
        // same-degree approaches: record a collision at each local minimum
        // of the pair distance that falls within the reach
        for p in 0..live.len() {
            for q in p + 1..live.len() {
                let (ta, tb) = (&out.tracks[live[p]], &out.tracks[live[q]]);
                if ta.degree != tb.degree {
                    continue;
                }
                let &(_, xa, ya) = ta.points.last().unwrap();
                let &(_, xb, yb) = tb.points.last().unwrap();
                let d = ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt();
                let key = (live[p].min(live[q]), live[p].max(live[q]));
                if d > reach {
                    continue;
                }
                let ev = TrackEvent {
                    t,
                    x: 0.5 * (xa + xb),
                    y: 0.5 * (ya + yb),
                    kind: TrackEventKind::Collision,
                };
                match close.get_mut(&key) {
                    Some((best, idx)) => {
                        if d < *best {
                            *best = d;
                            out.events[*idx] = ev;
                        }
                    }
                    None => {
                        close.insert(key, (d, out.events.len()));
                        out.events.push(ev);
                    }
                }
            }
        }
    }
    out.events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(out)
}

/// Dominant period of a sampled series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Autocorrelation at the detected lag.
    pub confidence: f64,
}

/// Autocorrelation period detector: the first autocorrelation maximum
/// above 0.9 after the first minimum, refined by a parabola.
pub fn detect_period(series: &[f64], dt: f64) -> Result<PeriodEstimate> {
    let n = series.len();
    if n < 8 || !(dt > 0.0) {
        return Err(Error::NotPeriodic(0.0));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let var: f64 = x.iter().map(|v| v * v).sum();
    if var <= 1e-24 * (1.0 + mean * mean) * n as f64 {
        return Err(Error::NotPeriodic(0.0));
    }
    let max_lag = 3 * n / 4;
    let corr: Vec<f64> = (0..=max_lag)
        .map(|k| {
            let (mut s, mut a, mut b) = (0.0, 0.0, 0.0);
            for i in 0..n - k {
                s += x[i] * x[i + k];
                a += x[i] * x[i];
                b += x[i + k] * x[i + k];
            }
            if a > 0.0 && b > 0.0 {
                s / (a * b).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut k = 1;
    while k < max_lag && corr[k] <= corr[k - 1] {
        k += 1;
    }
    let mut best = f64::NEG_INFINITY;
    while k < max_lag {
        if corr[k] >= corr[k - 1] && corr[k] >= corr[k + 1] {
            best = best.max(corr[k]);
            if corr[k] > 0.9 {
                let (a, b, c) = (corr[k - 1], corr[k], corr[k + 1]);
                let den = a - 2.0 * b + c;
                let shift = if den.abs() > 1e-300 { 0.5 * (a - c) / den } else { 0.0 };
                return Ok(PeriodEstimate { period: (k as f64 + shift) * dt, confidence: b });
            }
        }
        k += 1;
    }
    Err(Error::NotPeriodic(best.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn canonical_windings() {
        let g = Grid::new(&Params::canonical(), 20, 15).unwrap();
        let v = ComplexField::from_fn(&g, Complex64::new);
        let s = detect_vortices(&g, &v, 0.5);
        assert_eq!(s.vortices.len(), 1);
        assert_eq!(s.vortices[0].degree, 1);
        assert!(s.vortices[0].x.abs() < 1e-12 && s.vortices[0].y.abs() < 1e-12);
        let s = detect_vortices(&g, &v.conj(), 0.5);
        assert_eq!(s.vortices[0].degree, -1);
        let one = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0, 0.0));
        assert!(detect_vortices(&g, &one, 0.5).vortices.is_empty());
    }

    #[test]
    fn period_of_sinusoid() {
        let dt = 0.01;
        let s: Vec<f64> = (0..4000).map(|k| (2.0 * std::f64::consts::PI * k as f64 * dt / 7.3).sin()).collect();
        let p = detect_period(&s, dt).unwrap();
        assert_relative_eq!(p.period, 7.3, max_relative = 5e-3);
        assert!(matches!(detect_period(&vec![2.0; 500], dt), Err(Error::NotPeriodic(_))));
    }

    #[test]
    fn zero_steps_returns_initial_state() {
        let p = Params::canonical().with_current(10.0).with_gamma(1.0);
        let sim = Simulator::new(&p, 12, 9, 1e-3).unwrap();
        let psi0 = ComplexField::from_fn(sim.grid(), |x, y| Complex64::new(0.1 + x, y));
        let (state, rec) = run(&sim, &psi0, 0.0, 1, &[0.0], |_| {}).unwrap();
        assert_eq!(state.step, 0);
        assert_eq!(rec.t, vec![0.0]);
    }

    #[test]
    fn uniform_state_relaxes_to_sqrt_gamma() {
        let p = Params::canonical().with_lead(0.0).with_gamma(2.0);
        let sim = Simulator::new(&p, 12, 9, 0.01).unwrap();
        let psi0 = ComplexField::from_fn(sim.grid(), |_, _| Complex64::new(0.1, 0.0));
        let (state, _) = run(&sim, &psi0, 20.0, 100, &[], |s| {
            assert!(s.phi.max_abs() < 1e-12);
        })
        .unwrap();
        for v in state.psi.values() {
            assert!((v - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn potential_has_zero_mean_and_pt_symmetry_persists() {
        let p = Params::canonical().with_field(3.0).with_current(20.0).with_gamma(8.0);
        let sim = Simulator::new(&p, 16, 11, 2e-3).unwrap();
        let g = sim.grid().clone();
        let base = ComplexField::from_fn(&g, |x, y| Complex64::new((1.0 - x * x) * (1.0 + y), 0.7 * x * y));
        let psi0 = &base + &base.pt_conjugate(&g);
        let (_, _) = run(&sim, &psi0, 0.5, 1, &[], |s| {
            let mean = g.integrate(s.phi.values());
            assert!(mean.abs() <= 1e-12 * (1.0 + s.phi.max_abs()));
            let d = (&s.psi - &s.psi.pt_conjugate(&g)).max_abs();
            assert!(d <= 1e-8 * (1 + s.step) as f64 * s.psi.max_abs(), "step {} {d}", s.step);
        })
        .unwrap();
    }
}
