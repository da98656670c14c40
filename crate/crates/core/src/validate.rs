//! Reduced-versus-full cross-check: a TDGL run just above threshold compared
//! with the Hopf orbit and the vortex motion law built from the same
//! eigenpair.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal_form::{hopf_orbit, project_alpha, HopfOrbit, NormalFormData};
use crate::spectral::Operator;
use crate::tdgl::{default_dt, detect_period, Simulator};
use crate::vortex_law::{extract_beta, BetaProfile};

#[derive(Debug, Clone)]
pub struct CrosscheckOptions {
    /// `epsilon` as a fraction of `Re lambda_1`.
    pub eps_frac: f64,
    /// Time step; `None` uses `default_dt` capped at `T / 200`.
    pub dt: Option<f64>,
    /// Periods discarded before measuring.
    pub settle_periods: f64,
    /// Periods over which frequency and amplitude are measured. Crossings are
    /// taken from the last one.
    pub measure_periods: f64,
    /// Initial `|alpha|` as a fraction of the predicted amplitude.
    pub start_fraction: f64,
}

impl Default for CrosscheckOptions {
    fn default() -> Self {
        CrosscheckOptions {
            eps_frac: 0.01,
            dt: None,
            settle_periods: 60.0,
            measure_periods: 4.0,
            start_fraction: 1.0,
        }
    }
}

/// Zero of `Re psi(0, y_j, t)` on one grid row, interpolated in time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub t: f64,
    pub y: f64,
    /// Phase of `beta` implied by the crossing, reduced to `(-pi/2, pi/2]`.
    pub beta_measured: f64,
    /// Distance from `y` to the nearest predicted vortex position with the
    /// same phase.
    pub y_error: f64,
    /// Same, after removing the mean phase offset.
    pub y_error_fitted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Crosscheck {
    pub eps: f64,
    pub dt: f64,
    pub orbit: HopfOrbit,
    /// Mean `|alpha|` over the measurement window.
    pub amplitude: f64,
    /// Largest `max|psi|` over the measurement window.
    pub peak_abs: f64,
    /// Frequency from the unwrapped phase of `alpha`.
    pub chi: f64,
    /// Period of `Re psi(0, 0)` from its autocorrelation, if detected.
    pub probe_period: Option<f64>,
    /// Mean of `beta_measured - beta(y)` over all crossings.
    pub phase_offset: f64,
    pub crossings: Vec<Crossing>,
    /// RMS of `y_error` in units of `dy`.
    pub rms_cells: f64,
    /// RMS of `y_error_fitted` in units of `dy`.
    pub rms_cells_fitted: f64,
}

fn wrap_half(v: f64) -> f64 {
    let r = v.rem_euclid(PI);
    if r > FRAC_PI_2 {
        r - PI
    } else {
        r
    }
}

/// Distance from `y` to the nearest point where `beta` equals `b` modulo pi.
/// Values outside the range of `beta` are first moved to the closest end of
/// the range, so a crossing slightly past an extremum is charged the distance
/// to that extremum.
fn nearest(beta: &BetaProfile, b: f64, y: f64) -> f64 {
    let (lo, hi) = (beta.min(), beta.max());
    let mid = 0.5 * (lo + hi);
    let b = (b + PI * ((mid - b) / PI).round()).clamp(lo, hi);
    let mut best = f64::INFINITY;
    for w in 0..beta.len() - 1 {
        let (b0, b1) = (beta.beta[w], beta.beta[w + 1]);
        if (b0 - b) * (b1 - b) <= 0.0 {
            let s = if b1 == b0 { 0.5 } else { (b - b0) / (b1 - b0) };
            let yy = beta.y[w] + s * (beta.y[w + 1] - beta.y[w]);
            best = best.min((yy - y).abs());
        }
    }
    best
}

/// Runs TDGL at `Gamma = Re lambda_1 + eps` from the predicted orbit and
/// measures amplitude, frequency and center-line vortex positions.
pub fn crosscheck(op: &Operator, nf: &NormalFormData, opts: &CrosscheckOptions) -> Result<Crosscheck> {
    let eps = opts.eps_frac * nf.lambda1.re;
    let orbit = hopf_orbit(nf, eps)?;
    let grid = op.grid().clone();
    let beta = extract_beta(&grid, &nf.u1)?;
    let dt = opts.dt.unwrap_or_else(|| default_dt(&grid).min(orbit.period / 200.0));
    if !(opts.settle_periods >= 0.0 && opts.measure_periods >= 1.0) {
        return Err(Error::param("periods", "need settle >= 0 and measure >= 1"));
    }
    let params = op.params().with_gamma(nf.lambda1.re + eps);
    let sim = Simulator::from_operator(op.with_params(&params)?, dt)?;

    let a0 = Complex64::new(opts.start_fraction * orbit.amplitude, 0.0);
    let psi0 = &nf.u1.scaled(a0) + &nf.u2(&grid).scaled(a0.conj());
    let t_measure = opts.settle_periods * orbit.period;
    let t_end = t_measure + opts.measure_periods * orbit.period;
    let t_cross = t_end - orbit.period - 2.0 * dt;
    let steps = (t_end / dt).round() as usize;

    let mut state = sim.init(&psi0)?;
    let mut times = Vec::new();
    let mut phases = Vec::new();
    let mut moduli = Vec::new();
    let mut center = Vec::new();
    let mut lines: Vec<Vec<f64>> = Vec::new();
    let mut peak_abs: f64 = 0.0;
    for k in 0..=steps {
        if k > 0 {
            state = sim.step(&state)?;
        }
        if state.t < t_measure {
            continue;
        }
        let a = project_alpha(&grid, &nf.u1, &state.psi);
        times.push(state.t);
        phases.push(-(a * beta.scale).arg());
        moduli.push(a.norm());
        center.push(state.psi.center_value(&grid).re);
        peak_abs = peak_abs.max(state.max_abs());
        if state.t >= t_cross {
            lines.push(state.psi.center_line(&grid).iter().map(|v| v.re).collect());
        }
    }
    for k in 1..phases.len() {
        let d = phases[k] - phases[k - 1];
        phases[k] -= 2.0 * PI * (d / (2.0 * PI)).round();
    }
    let n = times.len();
    let chi = (phases[n - 1] - phases[0]) / (times[n - 1] - times[0]);
    let amplitude = moduli.iter().sum::<f64>() / n as f64;
    let probe_period = detect_period(&center, dt).ok().map(|p| p.period);

    let first = n - lines.len();
    let mut raw = Vec::new();
    for j in 0..grid.ny() {
        let y = grid.y(j);
        for k in 1..lines.len() {
            let (a, b) = (lines[k - 1][j], lines[k][j]);
            if a == 0.0 || a * b < 0.0 {
                let s = a / (a - b);
                let (p0, p1) = (phases[first + k - 1], phases[first + k]);
                let phase = p0 + s * (p1 - p0);
                let t = times[first + k - 1] + s * dt;
                raw.push((t, y, phase));
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::Invalid("no center-line crossings in the last period".into()));
    }
    let phase_offset = raw
        .iter()
        .map(|&(_, y, phase)| wrap_half(phase - FRAC_PI_2 - beta.eval(y)))
        .sum::<f64>()
        / raw.len() as f64;
    let crossings: Vec<Crossing> = raw
        .iter()
        .map(|&(t, y, phase)| Crossing {
            t,
            y,
            beta_measured: wrap_half(phase - FRAC_PI_2),
            y_error: nearest(&beta, phase - FRAC_PI_2, y),
            y_error_fitted: nearest(&beta, phase - FRAC_PI_2 - phase_offset, y),
        })
        .collect();
    let rms = |f: &dyn Fn(&Crossing) -> f64| {
        (crossings.iter().map(|c| f(c).powi(2)).sum::<f64>() / crossings.len() as f64).sqrt() / grid.dy()
    };
    Ok(Crosscheck {
        eps,
        dt,
        orbit,
        amplitude,
        peak_abs,
        chi,
        probe_period,
        phase_offset,
        rms_cells: rms(&|c| c.y_error),
        rms_cells_fitted: rms(&|c| c.y_error_fitted),
        crossings,
    })
}
