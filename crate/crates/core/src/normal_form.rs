//! Hopf normal form on the PT-symmetric centre subspace spanned by `u1` and
//! `u2 = u1^dagger`.
//!
//! Writing `psi = alpha u1 + conj(alpha) u2`, the nonlocal potential is
//! `|alpha|^2 (phi11 + phi22) + alpha^2 phi12 + conj(alpha)^2 phi21`, where
//! `phi_ij` solves the Neumann problem with the sesquilinear current of
//! `(u_i, u_j)`. `phi11`, `phi22` are real; `phi12 = conj(phi21)` is complex
//! in general.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{bilinear, ComplexField, Grid, LinkField, RealField};
use crate::poisson::{bilinear_current, solve_divform, PoissonSolver};
use crate::spectral::{leading_eigenpairs_with, EigenOptions, Operator};

/// Below this `|int u1 u1(x,-y)|` the pair is treated as defective.
pub const DEFECT_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Serialize)]
pub struct NormalFormData {
    pub n4: Complex64,
    /// `Im n4 / Re n4`.
    pub gamma_ratio: f64,
    pub lambda1: Complex64,
    /// `int u1 u1(x,-y)`, the projection denominator.
    pub pairing: Complex64,
    /// `Re n4 < 0`; otherwise the point is unsupported.
    pub supercritical: bool,
    pub u1: ComplexField,
    pub phi11: RealField,
    pub phi22: RealField,
    pub phi12: ComplexField,
    pub phi21: ComplexField,
}

/// Periodic orbit `a(t) = r exp(-i chi t)` of the amplitude equation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HopfOrbit {
    pub eps: f64,
    /// `sqrt(eps / |Re n4|)`, the fixed point of the radial equation.
    pub amplitude: f64,
    /// `sqrt(eps) / |Re n4|`, reported for comparison only.
    pub printed_amplitude: f64,
    pub chi: f64,
    pub period: f64,
}

/// `phi_ij` for the current `(i/2)[u_i grad conj(u_j) - conj(u_j) grad u_i]
/// - h A0 u_i conj(u_j)`, solved for real and imaginary parts.
pub fn solve_phi_ij(
    solver: &PoissonSolver,
    links: &LinkField,
    ui: &ComplexField,
    uj: &ComplexField,
) -> Result<ComplexField> {
    let grid = solver.grid();
    ui.check_grid(grid)?;
    uj.check_grid(grid)?;
    let (re, im) = bilinear_current(grid, links, ui, uj);
    let pr = solve_divform(solver, &re)?;
    let pi = solve_divform(solver, &im)?;
    let data = pr
        .values()
        .iter()
        .zip(pi.values())
        .map(|(a, b)| Complex64::new(*a, *b))
        .collect();
    ComplexField::from_vec(grid, data)
}

/// Cubic coefficient of the reduced equation for the given `u1`, `u2` and
/// auxiliary potentials.
pub fn compute_n4(
    grid: &Grid,
    u1: &ComplexField,
    u2: &ComplexField,
    phi11: &RealField,
    phi22: &RealField,
    phi12: &ComplexField,
) -> Result<Complex64> {
    let star = u1.y_reflect(grid);
    let den = bilinear(grid, u1.values(), star.values());
    if den.norm() <= DEFECT_GUARD {
        return Err(Error::NearDefective(den.norm()));
    }
    let mut cubic = Vec::with_capacity(grid.len());
    let mut nonlocal = Vec::with_capacity(grid.len());
    for n in 0..grid.len() {
        let (a, b, s) = (u1[n], u2[n], star[n]);
        cubic.push((a.norm_sqr() + 2.0 * b.norm_sqr()) * a * s);
        nonlocal.push((phi11[n] + phi22[n]) * a * s + phi12[n] * s * b);
    }
    let num = -grid.integrate(&cubic) - Complex64::i() * grid.integrate(&nonlocal);
    Ok(num / den)
}

impl NormalFormData {
    /// Normal-form data at the operator's parameter point.
    pub fn compute(op: &Operator, opts: &EigenOptions) -> Result<NormalFormData> {
        let pairs = leading_eigenpairs_with(op, 2, opts, &[])?;
        let lambda1 = pairs[0].lambda;
        if lambda1.im <= op.tol_im() {
            return Err(Error::RealLeadingEigenvalue(lambda1.im));
        }
        Self::from_u1(op, lambda1, pairs[0].u.clone())
    }

    /// Same, for a given leading eigenpair (any scaling of `u1`).
    pub fn from_u1(op: &Operator, lambda1: Complex64, u1: ComplexField) -> Result<NormalFormData> {
        let grid = op.grid();
        let solver = PoissonSolver::new(grid);
        let u2 = u1.pt_conjugate(grid);
        let pairing = bilinear(grid, u1.values(), u1.y_reflect(grid).values());
        if pairing.norm() <= DEFECT_GUARD {
            return Err(Error::NearDefective(pairing.norm()));
        }
        let links = op.links();
        let phi11 = solve_phi_ij(&solver, links, &u1, &u1)?.re();
        let phi22 = solve_phi_ij(&solver, links, &u2, &u2)?.re();
        let phi12 = solve_phi_ij(&solver, links, &u1, &u2)?;
        let phi21 = phi12.conj();
        let n4 = compute_n4(grid, &u1, &u2, &phi11, &phi22, &phi12)?;
        if n4.re >= 0.0 {
            log::warn!("Re n4 = {} >= 0: parameter point unsupported", n4.re);
        }
        Ok(NormalFormData {
            n4,
            gamma_ratio: n4.im / n4.re,
            lambda1,
            pairing,
            supercritical: n4.re < 0.0,
            u1,
            phi11,
            phi22,
            phi12,
            phi21,
        })
    }

    pub fn u2(&self, grid: &Grid) -> ComplexField {
        self.u1.pt_conjugate(grid)
    }

    /// Rescales `u1` by `c`; `n4` picks up `|c|^2`.
    pub fn rescaled(&self, c: Complex64) -> NormalFormData {
        let c2 = c.norm_sqr();
        let u1 = self.u1.scaled(c);
        NormalFormData {
            n4: self.n4 * c2,
            gamma_ratio: self.gamma_ratio,
            lambda1: self.lambda1,
            pairing: self.pairing * c * c,
            supercritical: self.supercritical,
            u1,
            phi11: self.phi11.map(|v| v * c2),
            phi22: self.phi22.map(|v| v * c2),
            phi12: self.phi12.scaled(c * c),
            phi21: self.phi21.scaled(c.conj() * c.conj()),
        }
    }
}

/// Amplitude, frequency and period of the bifurcated orbit.
pub fn hopf_orbit(nf: &NormalFormData, eps: f64) -> Result<HopfOrbit> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", "must be > 0"));
    }
    if !nf.supercritical {
        return Err(Error::Unsupported(format!("Re n4 = {} is not negative", nf.n4.re)));
    }
    let re = nf.n4.re.abs();
    let chi = nf.lambda1.im + nf.gamma_ratio * eps;
    if chi <= 0.0 {
        return Err(Error::Unsupported(format!("orbit frequency {chi} is not positive")));
    }
    Ok(HopfOrbit {
        eps,
        amplitude: (eps / re).sqrt(),
        printed_amplitude: eps.sqrt() / re,
        chi,
        period: 2.0 * std::f64::consts::PI / chi,
    })
}

/// `a(t) u1 + conj(a(t)) u1^dagger` with `a(t) = r exp(-i chi t)`.
pub fn leading_psi(grid: &Grid, nf: &NormalFormData, orbit: &HopfOrbit, t: f64) -> ComplexField {
    let a = Complex64::from_polar(orbit.amplitude, -orbit.chi * t);
    let u2 = nf.u2(grid);
    &nf.u1.scaled(a) + &u2.scaled(a.conj())
}

/// Center-subspace coordinate `int u1(x,-y) psi / int u1(x,-y) u1`.
pub fn project_alpha(grid: &Grid, u1: &ComplexField, psi: &ComplexField) -> Complex64 {
    let star = u1.y_reflect(grid);
    bilinear(grid, star.values(), psi.values()) / bilinear(grid, star.values(), u1.values())
}

/// The full projected nonlinearity `int u1* N(psi) / int u1* u1` for
/// `psi = alpha u1 + conj(alpha) u2`, with the nonlocal potential solved
/// directly from the supercurrent of `psi`.
pub fn projected_nonlinearity(
    op: &Operator,
    solver: &PoissonSolver,
    u1: &ComplexField,
    alpha: Complex64,
) -> Result<Complex64> {
    use crate::poisson::supercurrent;
    let grid = op.grid();
    let u2 = u1.pt_conjugate(grid);
    let psi = &u1.scaled(alpha) + &u2.scaled(alpha.conj());
    let phit = solve_divform(solver, &supercurrent(grid, op.links(), &psi))?;
    let star = u1.y_reflect(grid);
    let nl: Vec<Complex64> = (0..grid.len())
        .map(|n| {
            let p = psi[n];
            (-p.norm_sqr() * p - Complex64::i() * phit[n] * p) * star[n]
        })
        .collect();
    Ok(grid.integrate(&nl) / bilinear(grid, u1.values(), star.values()))
}
