//! Continuation of eigenvalue branches along a parameter axis.
//!
//! Consecutive parameter points are linked by eigenfunction overlap. A pair
//! of branches that cannot be told apart individually (a real pair merging
//! into a conjugate pair, or the reverse) is matched jointly through the
//! overlap of the two-dimensional subspaces they span.

use num_complex::Complex64;
use serde::Serialize;

use super::{leading_eigenpairs_with, EigenOptions, EigenPair, Operator};
use crate::error::{Error, Result};
use crate::grid::{inner, ComplexField, Grid, Params};

/// Which parameter the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Current,
    Field,
}

impl SweepParam {
    pub fn apply(self, p: &Params, v: f64) -> Params {
        match self {
            SweepParam::Current => p.with_current(v),
            SweepParam::Field => p.with_field(v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackOptions {
    /// Branches reported per point.
    pub k: usize,
    /// Additional eigenpairs computed so branches can enter from above.
    pub extra: usize,
    pub min_overlap: f64,
    /// Maximum number of interval bisections per original step.
    pub max_refine: usize,
    pub eig: EigenOptions,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            k: 4,
            extra: 2,
            min_overlap: 0.8,
            max_refine: 6,
            eig: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BranchPoint {
    pub branch: usize,
    pub lambda: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BranchEventKind {
    /// Two real branches exchange order and stay simple.
    Passing,
    /// A real pair merges and leaves as a conjugate pair.
    Collision,
    /// A conjugate pair returns to the real axis.
    Split,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchEvent {
    pub kind: BranchEventKind,
    /// Estimated parameter value of the event.
    pub param: f64,
    pub branches: (usize, usize),
}

/// Tracked spectrum over a parameter axis (refinement points included).
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Per value, the tracked eigenvalues in spectral order.
    pub points: Vec<Vec<BranchPoint>>,
    pub events: Vec<BranchEvent>,
}

struct Step {
    value: f64,
    pairs: Vec<EigenPair>,
    labels: Vec<usize>,
    real: Vec<bool>,
}

fn overlap(g: &Grid, a: &ComplexField, b: &ComplexField) -> f64 {
    inner(g, a.values(), b.values()).norm() / (a.l2_norm(g) * b.l2_norm(g))
}

/// Smallest cosine of the principal angles between two 2D subspaces.
fn subspace_overlap(g: &Grid, a: [&ComplexField; 2], b: [&ComplexField; 2]) -> f64 {
    let ortho = |v: [&ComplexField; 2]| -> [ComplexField; 2] {
        let e0 = v[0].scaled(Complex64::new(1.0 / v[0].l2_norm(g), 0.0));
        let c = inner(g, e0.values(), v[1].values());
        let r = v[1] - &e0.scaled(c);
        let e1 = r.scaled(Complex64::new(1.0 / r.l2_norm(g), 0.0));
        [e0, e1]
    };
    let (qa, qb) = (ortho(a), ortho(b));
    let m = [
        [inner(g, qa[0].values(), qb[0].values()), inner(g, qa[0].values(), qb[1].values())],
        [inner(g, qa[1].values(), qb[0].values()), inner(g, qa[1].values(), qb[1].values())],
    ];
    // singular values of a 2x2 complex matrix from the Gram matrix M^H M
    let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
    let q = m[0][1].norm_sqr() + m[1][1].norm_sqr();
    let r = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
    let tr = p + q;
    let det = p * q - r.norm_sqr();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc).max(0.0).sqrt()
}

fn is_real(op: &Operator, lam: Complex64) -> bool {
    lam.im.abs() <= op.tol_im() + 1e-9 * lam.norm()
}

/// Labels for `next` given `prev`, plus events; `None` if the step is too
/// coarse to match the leading `k` eigenpairs.
fn link(g: &Grid, prev: &Step, next: &mut Step, k: usize, min_overlap: f64, fresh: &mut usize) -> Option<Vec<BranchEvent>> {
    let (np, nn) = (prev.pairs.len(), next.pairs.len());
    let mut ov = vec![vec![0.0; nn]; np];
    let mut cand = Vec::new();
    for a in 0..np {
        for b in 0..nn {
            ov[a][b] = overlap(g, &prev.pairs[a].u, &next.pairs[b].u);
            cand.push((ov[a][b], a, b));
        }
    }
    cand.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut of_prev: Vec<Option<usize>> = vec![None; np];
    let mut of_next: Vec<Option<usize>> = vec![None; nn];
    for &(o, a, b) in &cand {
        if o < min_overlap {
            break;
        }
        if of_prev[a].is_none() && of_next[b].is_none() {
            of_prev[a] = Some(b);
            of_next[b] = Some(a);
        }
    }
    let mid = 0.5 * (prev.value + next.value);
    let mut events = Vec::new();

    // a real pair turning complex (or back) is ambiguous one by one
    let joint = |of_prev: &mut Vec<Option<usize>>, of_next: &mut Vec<Option<usize>>, events: &mut Vec<BranchEvent>| {
        let free_p: Vec<usize> = (0..np).filter(|&a| of_prev[a].is_none()).collect();
        let free_n: Vec<usize> = (0..nn).filter(|&b| of_next[b].is_none()).collect();
        for (ia, &a1) in free_p.iter().enumerate() {
            for &a2 in &free_p[ia + 1..] {
                for (ib, &b1) in free_n.iter().enumerate() {
                    for &b2 in &free_n[ib + 1..] {
                        if of_prev[a1].is_some() || of_prev[a2].is_some() || of_next[b1].is_some() || of_next[b2].is_some() {
                            continue;
                        }
                        let s = subspace_overlap(
                            g,
                            [&prev.pairs[a1].u, &prev.pairs[a2].u],
                            [&next.pairs[b1].u, &next.pairs[b2].u],
                        );
                        if s < min_overlap {
                            continue;
                        }
                        let straight = ov[a1][b1] + ov[a2][b2];
                        let crossed = ov[a1][b2] + ov[a2][b1];
                        let (m1, m2) = if straight >= crossed { (b1, b2) } else { (b2, b1) };
                        of_prev[a1] = Some(m1);
                        of_prev[a2] = Some(m2);
                        of_next[m1] = Some(a1);
                        of_next[m2] = Some(a2);
                        let was_real = prev.real[a1] && prev.real[a2];
                        let now_real = next.real[b1] && next.real[b2];
                        let kind = match (was_real, now_real) {
                            (true, false) => Some(BranchEventKind::Collision),
                            (false, true) => Some(BranchEventKind::Split),
                            _ => None,
                        };
                        if let Some(kind) = kind {
                            events.push(BranchEvent {
                                kind,
                                param: mid,
                                branches: (prev.labels[a1].min(prev.labels[a2]), prev.labels[a1].max(prev.labels[a2])),
                            });
                        }
                    }
                }
            }
        }
    };
    joint(&mut of_prev, &mut of_next, &mut events);

    // a pair that merges within one step shows up as two strong individual
    // matches onto one vector; recheck every real->complex transition jointly
    for a1 in 0..np {
        for a2 in a1 + 1..np {
            let (Some(b1), Some(b2)) = (of_prev[a1], of_prev[a2]) else { continue };
            if prev.real[a1] && prev.real[a2] && !next.real[b1] && !next.real[b2]
                && (next.pairs[b1].lambda - next.pairs[b2].lambda.conj()).norm() <= 1e-6 * next.pairs[b1].lambda.norm()
                && !events.iter().any(|e| e.branches == (prev.labels[a1].min(prev.labels[a2]), prev.labels[a1].max(prev.labels[a2])))
            {
                events.push(BranchEvent {
                    kind: BranchEventKind::Collision,
                    param: mid,
                    branches: (prev.labels[a1].min(prev.labels[a2]), prev.labels[a1].max(prev.labels[a2])),
                });
            }
        }
    }

    for a in 0..np.min(k) {
        of_prev[a]?;
    }
    for b in 0..nn.min(k) {
        of_next[b]?;
    }
    next.labels = (0..nn)
        .map(|b| match of_next[b] {
            Some(a) => prev.labels[a],
            None => {
                *fresh += 1;
                *fresh - 1
            }
        })
        .collect();

    // order swaps among real branches that stay real
    for a1 in 0..np {
        for a2 in a1 + 1..np {
            let (Some(b1), Some(b2)) = (of_prev[a1], of_prev[a2]) else { continue };
            if !(prev.real[a1] && prev.real[a2] && next.real[b1] && next.real[b2]) {
                continue;
            }
            let d0 = prev.pairs[a1].lambda.re - prev.pairs[a2].lambda.re;
            let d1 = next.pairs[b1].lambda.re - next.pairs[b2].lambda.re;
            if d0.signum() != d1.signum() && d0 != 0.0 {
                let t = d0 / (d0 - d1);
                events.push(BranchEvent {
                    kind: BranchEventKind::Passing,
                    param: prev.value + t * (next.value - prev.value),
                    branches: (prev.labels[a1].min(prev.labels[a2]), prev.labels[a1].max(prev.labels[a2])),
                });
            }
        }
    }
    Some(events)
}

/// Tracks the leading branches across `values` (strictly monotone).
pub fn track_branches(
    param: SweepParam,
    values: &[f64],
    template: &Params,
    nx: usize,
    ny: usize,
    opts: &TrackOptions,
) -> Result<SpectrumSweep> {
    if values.len() < 2 {
        return Err(Error::param("sweep", "need at least two values"));
    }
    let increasing = values[1] > values[0];
    if values.windows(2).any(|w| (w[1] > w[0]) != increasing || w[1] == w[0]) {
        return Err(Error::param("sweep", "axis must be strictly monotone"));
    }
    let base = Operator::new(&param.apply(template, values[0]), nx, ny)?;
    let ktrack = opts.k + opts.extra;
    let solve = |v: f64, warm: &[ComplexField]| -> Result<Step> {
        let op = base.with_params(&param.apply(template, v))?;
        let pairs = leading_eigenpairs_with(&op, ktrack, &opts.eig, warm)?;
        let real = pairs.iter().map(|p| is_real(&op, p.lambda)).collect();
        Ok(Step { value: v, pairs, labels: Vec::new(), real })
    };
    let g = base.grid().clone();
    let mut first = solve(values[0], &[])?;
    first.labels = (0..ktrack).collect();
    let mut fresh = ktrack;
    let mut steps = vec![first];
    let mut events = Vec::new();
    for &target in &values[1..] {
        let mut pending = vec![(target, 0usize)];
        while let Some(&(v, depth)) = pending.last() {
            let prev = steps.last().unwrap();
            let warm: Vec<ComplexField> = prev.pairs.iter().map(|p| p.u.clone()).collect();
            let mut next = solve(v, &warm)?;
            match link(&g, prev, &mut next, opts.k, opts.min_overlap, &mut fresh) {
                Some(ev) => {
                    events.extend(ev);
                    steps.push(next);
                    pending.pop();
                }
                None if depth < opts.max_refine => {
                    let mid = 0.5 * (prev.value + v);
                    log::debug!("refining branch step at {mid}");
                    pending.push((mid, depth + 1));
                }
                None => {
                    let best = prev
                        .pairs
                        .iter()
                        .map(|p| next.pairs.iter().map(|q| overlap(&g, &p.u, &q.u)).fold(0.0, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    return Err(Error::StepTooCoarse { param: v, overlap: best });
                }
            }
        }
    }
    events.sort_by(|a, b| a.param.total_cmp(&b.param));
    Ok(SpectrumSweep {
        param,
        values: steps.iter().map(|s| s.value).collect(),
        points: steps
            .iter()
            .map(|s| {
                s.pairs
                    .iter()
                    .zip(&s.labels)
                    .map(|(p, &branch)| BranchPoint { branch, lambda: p.lambda })
                    .collect()
            })
            .collect(),
        events,
    })
}
