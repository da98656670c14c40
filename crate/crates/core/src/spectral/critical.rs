use serde::Serialize;

use super::{leading_eigenpairs_with, EigenOptions, Operator};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Params};

/// Critical current and the final bracket around it.
#[derive(Debug, Clone, Serialize)]
pub struct IcResult {
    pub ic: f64,
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

/// Bisection for the current at which `lambda_1` leaves the real axis.
///
/// The indicator at current `I` is `|Im lambda_1| > 1e-6 I max|phi0|`. The
/// bracket is narrowed to `1e-3` of its initial width.
pub fn find_ic(
    template: &Params,
    nx: usize,
    ny: usize,
    bracket: (f64, f64),
    opts: &EigenOptions,
) -> Result<IcResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
        return Err(Error::param("bracket", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let base = Operator::new(&template.with_current(lo), nx, ny)?;
    let mut evaluations = 0;
    let mut indicator = |current: f64, warm: &mut Vec<ComplexField>| -> Result<bool> {
        evaluations += 1;
        let op = base.with_params(&template.with_current(current))?;
        let pairs = leading_eigenpairs_with(&op, 2, opts, warm)?;
        let im = pairs[0].lambda.im.abs();
        log::debug!("I = {current:.6}: lambda1 = {:.8}", pairs[0].lambda);
        *warm = pairs.into_iter().map(|p| p.u).collect();
        Ok(current > 0.0 && im > op.tol_im())
    };
    let mut warm_lo = Vec::new();
    let at_lo = indicator(lo, &mut warm_lo)?;
    let at_hi = indicator(hi, &mut Vec::new())?;
    if at_lo == at_hi {
        return Err(Error::InvalidBracket { lo, hi, indicator: at_lo });
    }
    let width = 1e-3 * (hi - lo);
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let mut warm = warm_lo.clone();
        if indicator(mid, &mut warm)? == at_lo {
            lo = mid;
            warm_lo = warm;
        } else {
            hi = mid;
        }
    }
    Ok(IcResult {
        ic: 0.5 * (lo + hi),
        lo,
        hi,
        evaluations,
    })
}
