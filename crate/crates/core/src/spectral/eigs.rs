//! Shift-invert block subspace iteration for the pencil `B x = lambda M x`.
//!
//! Each shift `sigma` yields the eigenvalues nearest to it. Because the wanted
//! eigenvalues are the ones of smallest real part and the spectrum lives in
//! the strip `Re > 0, |Im| <= I max|phi0|`, shifts are added until the
//! converged discs cover the rectangle `[0, Re lambda_k] x [-b, b]`; only
//! then are the `k` leftmost eigenvalues certain.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EigenPair, Operator};
use crate::error::{Error, Result};
use crate::grid::bilinear;
use crate::sparse::SparseLu;

/// Knobs for [`leading_eigenpairs_with`].
#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Residual target after refinement.
    pub tol: f64,
    /// Relative Ritz residual at which a pair counts as located.
    pub locate_tol: f64,
    pub max_iter: usize,
    /// Block size; `0` picks `max(16, 2k + 8)`.
    pub block: usize,
    /// Upper limit on the number of shifts.
    pub max_shifts: usize,
    pub seed: u64,
    /// Unknown count below which the dense solver is used instead.
    pub dense_below: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            locate_tol: 1e-7,
            max_iter: 400,
            block: 0,
            max_shifts: 24,
            seed: 0x5eed,
            dense_below: 0,
        }
    }
}

struct Ritz {
    theta: Complex64,
    x: Vec<Complex64>,
    rel: f64,
}

struct Disc {
    center: Complex64,
    radius: f64,
}

fn m_norm(mass: &[f64], x: &[Complex64]) -> f64 {
    x.iter().zip(mass).map(|(v, m)| v.norm_sqr() * m).sum::<f64>().sqrt()
}

/// `||B x - theta M x||_{M^-1} / ||x||_M`.
fn pencil_residual(op: &Operator, theta: Complex64, x: &[Complex64]) -> f64 {
    let mass = op.mass();
    let bx = op.pencil().mul_vec(x);
    let num: f64 = bx
        .iter()
        .zip(x)
        .zip(mass)
        .map(|((b, v), m)| (b - theta * m * v).norm_sqr() / m)
        .sum();
    num.sqrt() / m_norm(mass, x)
}

fn rayleigh(op: &Operator, x: &[Complex64]) -> Complex64 {
    let bx = op.pencil().mul_vec(x);
    let num: Complex64 = x.iter().zip(&bx).map(|(a, b)| a.conj() * b).sum();
    num / m_norm(op.mass(), x).powi(2)
}

/// Subspace iteration around one shift; returns the Ritz pairs sorted by
/// distance to `sigma` and the radius of the disc in which every eigenvalue
/// has been located.
fn iterate_shift(
    op: &Operator,
    sigma: Complex64,
    start: &[Vec<Complex64>],
    block: usize,
    need: usize,
    opts: &EigenOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Ritz>, Disc)> {
    let n = op.dofs();
    let mass = op.mass();
    let shifted = op.pencil().add_diagonal(Complex64::new(1.0, 0.0), -sigma, mass);
    let lu = SparseLu::new(&shifted)?;
    let mut w = Mat::<Complex64>::from_fn(n, block, |i, j| {
        if j < start.len() {
            start[j][i]
        } else {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        }
    });
    let sqrt_m: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let mut best = f64::INFINITY;
    for iter in 0..opts.max_iter {
        for j in 0..block {
            for i in 0..n {
                w[(i, j)] *= mass[i];
            }
        }
        lu.solve_in_place(&mut w);
        // M-orthonormalize through a QR of M^{1/2} W
        let scaled = Mat::<Complex64>::from_fn(n, block, |i, j| w[(i, j)] * sqrt_m[i]);
        let qhat = scaled.qr().compute_thin_Q();
        let q = Mat::<Complex64>::from_fn(n, block, |i, j| qhat[(i, j)] / sqrt_m[i]);
        let bq = op.pencil().mul_mat(&q);
        let h = q.adjoint() * &bq;
        let evd = h
            .eigen()
            .map_err(|e| Error::LinearSolve(format!("projected eigenproblem: {e:?}")))?;
        let s = evd.S().column_vector();
        let y = evd.U();
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| (s[a] - sigma).norm().total_cmp(&(s[b] - sigma).norm()));
        let x = &q * y;
        let ritz: Vec<Ritz> = order
            .iter()
            .map(|&c| {
                let v: Vec<Complex64> = (0..n).map(|i| x[(i, c)]).collect();
                let theta = s[c];
                let rel = pencil_residual(op, theta, &v) / theta.norm().max(1.0);
                Ritz { theta, x: v, rel }
            })
            .collect();
        let located = ritz.iter().take_while(|r| r.rel < opts.locate_tol).count();
        best = best.min(ritz[0].rel);
        if located >= need || iter + 1 == opts.max_iter {
            if located == 0 {
                return Err(Error::NoConvergence {
                    iterations: iter + 1,
                    residual: best,
                });
            }
            let radius = (ritz[located - 1].theta - sigma).norm();
            log::debug!(
                "shift {sigma:.4}: {located} located in {} iterations, radius {radius:.3}",
                iter + 1
            );
            let mut ritz = ritz;
            ritz.truncate(located);
            return Ok((ritz, Disc { center: sigma, radius }));
        }
        for j in 0..block {
            for i in 0..n {
                w[(i, j)] = x[(i, order[j])];
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// First sampled point of `[0, re_max] x [-b, b]` not inside any disc,
/// preferring points near the real axis and the left edge.
fn uncovered(discs: &[Disc], re_max: f64, b: f64) -> Option<Complex64> {
    let smallest = discs.iter().map(|d| d.radius).fold(f64::INFINITY, f64::min);
    let step = (0.25 * smallest).max(1e-9 * (1.0 + re_max + b));
    let nre = ((re_max / step).ceil() as usize).clamp(1, 64) + 1;
    let nim = ((2.0 * b / step).ceil() as usize).clamp(0, 256) + 1;
    let mut pts = Vec::with_capacity(nre * nim);
    for a in 0..nre {
        let re = re_max * a as f64 / (nre - 1) as f64;
        for c in 0..nim {
            let im = if nim == 1 {
                0.0
            } else {
                -b + 2.0 * b * c as f64 / (nim - 1) as f64
            };
            pts.push(Complex64::new(re, im));
        }
    }
    pts.sort_by(|p, q| {
        p.im.abs()
            .total_cmp(&q.im.abs())
            .then(p.re.total_cmp(&q.re))
            .then(p.im.total_cmp(&q.im))
    });
    pts.into_iter()
        .find(|p| discs.iter().all(|d| (p - d.center).norm() > d.radius))
}

/// Sort by real part; members of a conjugate pair come with `Im > 0` first,
/// other ties by ascending imaginary part.
pub(crate) fn order_spectrum(lams: &mut [(Complex64, usize)]) {
    lams.sort_by(|a, b| {
        let (x, y) = (a.0, b.0);
        let tie = 1e-8 * x.norm().max(y.norm()).max(1.0);
        if (x.re - y.re).abs() <= tie {
            if (x.im + y.im).abs() <= tie && x.im.abs() > tie {
                y.im.total_cmp(&x.im)
            } else {
                x.im.total_cmp(&y.im)
            }
        } else {
            x.re.total_cmp(&y.re)
        }
    });
}

fn normalize(op: &Operator, x: &[Complex64]) -> Result<crate::grid::ComplexField> {
    let g = op.grid();
    let mut u = op.extend(x);
    let q = bilinear(g, u.values(), u.values());
    let scale = if q.norm() > 1e-12 * m_norm(op.mass(), x).powi(2) {
        1.0 / q.sqrt()
    } else {
        log::warn!("int u^2 ~ 0; falling back to unit L2 norm");
        Complex64::new(1.0 / u.l2_norm(g), 0.0)
    };
    u.scale(scale);
    let c = u.center_value(g);
    let sign_ref = if c.re.abs() > 1e-14 {
        c.re
    } else {
        // fall back to the first node with a usable real part
        u.values()
            .iter()
            .map(|v| v.re)
            .find(|r| r.abs() > 1e-10)
            .unwrap_or(1.0)
    };
    if sign_ref < 0.0 {
        u.scale(Complex64::new(-1.0, 0.0));
    }
    if !u.is_finite() {
        return Err(Error::NonFinite("eigenfunction"));
    }
    Ok(u)
}

/// One inverse-iteration step at `theta` (repeated while it helps).
fn refine(op: &Operator, theta: Complex64, x: &[Complex64], tol: f64) -> Result<(Complex64, Vec<Complex64>, f64)> {
    let mut lam = rayleigh(op, x);
    let mut v = x.to_vec();
    let mut res = pencil_residual(op, lam, &v);
    let mut shift = theta;
    for step in 0..3 {
        if step > 0 && res <= tol {
            break;
        }
        let shifted = op
            .pencil()
            .add_diagonal(Complex64::new(1.0, 0.0), -shift, op.mass());
        let lu = SparseLu::new(&shifted)?;
        let rhs: Vec<Complex64> = v.iter().zip(op.mass()).map(|(a, m)| a * m).collect();
        let mut y = lu.solve_vec(&rhs);
        let nrm = m_norm(op.mass(), &y);
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        y.iter_mut().for_each(|a| *a /= nrm);
        let l2 = rayleigh(op, &y);
        let r2 = pencil_residual(op, l2, &y);
        if r2 < res {
            lam = l2;
            v = y;
            res = r2;
            shift = l2;
        } else {
            break;
        }
    }
    Ok((lam, v, res))
}

/// The `k` eigenpairs of smallest real part, default options.
pub fn leading_eigenpairs(op: &Operator, k: usize) -> Result<Vec<EigenPair>> {
    leading_eigenpairs_with(op, k, &EigenOptions::default(), &[])
}

/// Like [`leading_eigenpairs`], optionally warm-started from eigenfunctions
/// of a nearby parameter point.
pub fn leading_eigenpairs_with(
    op: &Operator,
    k: usize,
    opts: &EigenOptions,
    warm: &[crate::grid::ComplexField],
) -> Result<Vec<EigenPair>> {
    let n = op.dofs();
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("cannot compute {k} eigenpairs of {n} unknowns")));
    }
    if n < opts.dense_below {
        return dense_eigenpairs(op, k);
    }
    let block = if opts.block == 0 { (2 * k + 8).max(16) } else { opts.block }.min(n);
    let need = (k + 2).min(block.saturating_sub(2)).max(k.min(block));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<Vec<Complex64>> = warm.iter().take(block).map(|u| op.restrict(u)).collect();

    let b = op.imag_bound() * (1.0 + 1e-9) + 1e-9;
    let mut discs: Vec<Disc> = Vec::new();
    let mut found: Vec<Ritz> = Vec::new();
    let mut sigma = Complex64::new(0.0, 0.0);
    for _ in 0..opts.max_shifts {
        let (ritz, disc) = iterate_shift(op, sigma, &start, block, need, opts, &mut rng)?;
        discs.push(disc);
        for r in ritz {
            let dup = found.iter_mut().find(|f| {
                (f.theta - r.theta).norm() <= 1e-7 * (1.0 + r.theta.norm()) && overlap(op, &f.x, &r.x) > 0.99
            });
            match dup {
                Some(f) if f.rel <= r.rel => {}
                Some(f) => *f = r,
                None => found.push(r),
            }
        }
        let mut lams: Vec<(Complex64, usize)> = found.iter().enumerate().map(|(i, r)| (r.theta, i)).collect();
        order_spectrum(&mut lams);
        let re_max = if lams.len() >= k {
            lams[k - 1].0.re
        } else {
            // not enough located yet: demand coverage a bit past the farthest disc
            discs.iter().map(|d| d.center.re + d.radius).fold(0.0, f64::max) * 1.5 + 1.0
        };
        match uncovered(&discs, re_max, b) {
            None if lams.len() >= k => {
                let mut out = Vec::with_capacity(k);
                for &(_, idx) in lams.iter().take(k) {
                    let r = &found[idx];
                    let (lambda, x, _) = refine(op, r.theta, &r.x, opts.tol)?;
                    let u = normalize(op, &x)?;
                    let residual_norm = op.residual(lambda, &u);
                    out.push(EigenPair { lambda, u, residual_norm });
                }
                let mut keyed: Vec<(Complex64, usize)> = out.iter().enumerate().map(|(i, p)| (p.lambda, i)).collect();
                order_spectrum(&mut keyed);
                let mut sorted: Vec<Option<EigenPair>> = out.into_iter().map(Some).collect();
                return Ok(keyed.iter().map(|&(_, i)| sorted[i].take().unwrap()).collect());
            }
            None => sigma = Complex64::new(re_max, 0.0),
            Some(p) => sigma = p,
        }
        start = found.iter().map(|r| r.x.clone()).take(block).collect();
    }
    Err(Error::NoConvergence {
        iterations: opts.max_shifts,
        residual: found.iter().map(|r| r.rel).fold(f64::INFINITY, f64::min),
    })
}

fn overlap(op: &Operator, a: &[Complex64], b: &[Complex64]) -> f64 {
    let ip: Complex64 = a
        .iter()
        .zip(b)
        .zip(op.mass())
        .map(|((x, y), m)| x.conj() * y * m)
        .sum();
    ip.norm() / (m_norm(op.mass(), a) * m_norm(op.mass(), b))
}

/// Dense route: all eigenvalues of `M^-1 B`, then the `k` leftmost.
pub fn dense_eigenpairs(op: &Operator, k: usize) -> Result<Vec<EigenPair>> {
    let n = op.dofs();
    if n > 4000 {
        return Err(Error::Unsupported(format!("dense eigensolve on {n} unknowns")));
    }
    let mut a = op.pencil().to_dense();
    for i in 0..n {
        let m = op.mass()[i];
        for j in 0..n {
            a[(i, j)] /= m;
        }
    }
    let evd = a
        .eigen()
        .map_err(|e| Error::LinearSolve(format!("dense eigensolve: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut lams: Vec<(Complex64, usize)> = (0..n).map(|i| (s[i], i)).collect();
    order_spectrum(&mut lams);
    lams.truncate(k);
    let mut out = Vec::with_capacity(k);
    for (lambda, c) in lams {
        let x: Vec<Complex64> = (0..n).map(|i| evd.U()[(i, c)]).collect();
        let u = normalize(op, &x)?;
        let residual_norm = op.residual(lambda, &u);
        out.push(EigenPair { lambda, u, residual_norm });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Params;

    #[test]
    fn ordering_puts_positive_imaginary_first() {
        let mut v = vec![
            (Complex64::new(3.0, 0.0), 0),
            (Complex64::new(2.0, -1.0), 1),
            (Complex64::new(2.0, 1.0), 2),
            (Complex64::new(5.0, 0.5), 3),
        ];
        order_spectrum(&mut v);
        let idx: Vec<usize> = v.iter().map(|p| p.1).collect();
        assert_eq!(idx, vec![2, 1, 0, 3]);
    }

    #[test]
    fn sparse_matches_dense() {
        let p = Params::canonical().with_field(4.0).with_current(30.0);
        let op = super::super::Operator::new(&p, 25, 17).unwrap();
        let sparse = leading_eigenpairs(&op, 4).unwrap();
        let dense = dense_eigenpairs(&op, 4).unwrap();
        for (a, b) in sparse.iter().zip(&dense) {
            assert!((a.lambda - b.lambda).norm() < 1e-8 * a.lambda.norm(), "{} {}", a.lambda, b.lambda);
            assert!(a.residual_norm < 1e-8, "{}", a.residual_norm);
        }
    }
}
