use num_complex::Complex64;
use vortexlab::grid::{ComplexField, Params};
use vortexlab::normal_form::{hopf_orbit, NormalFormData};
use vortexlab::spectral::{leading_eigenpairs, EigenOptions, Operator};
use vortexlab::tdgl::*;

fn log_norm(g: &vortexlab::grid::Grid, psi: &ComplexField) -> f64 {
    psi.l2_norm(g).ln()
}

#[test]
fn subcritical_decay_matches_spectral_gap() {
    let p = Params::canonical().with_field(0.5).with_current(10.0);
    let op = Operator::new(&p, 24, 17).unwrap();
    let pairs = leading_eigenpairs(&op, 2).unwrap();
    let lam = pairs[0].lambda;
    let gamma = lam.re - 0.8;
    let sim = Simulator::from_operator(op.with_params(&p.with_gamma(gamma)).unwrap(), 2e-3).unwrap();
    let g = sim.grid().clone();
    let psi0 = pairs[0].u.scaled(Complex64::new(1e-3, 0.0));
    let mut samples = Vec::new();
    run(&sim, &psi0, 3.0, 50, &[], |s| samples.push((s.t, log_norm(&g, &s.psi)))).unwrap();
    let (t0, a) = samples[samples.len() / 3];
    let (t1, b) = *samples.last().unwrap();
    let rate = -(b - a) / (t1 - t0);
    assert!((rate - 0.8).abs() < 0.05 * 0.8, "rate {rate}");
}

#[test]
fn linear_stepper_reproduces_eigenvalue() {
    let p = Params::canonical().with_field(1.0).with_current(30.0);
    let op = Operator::new(&p, 24, 17).unwrap();
    let pairs = leading_eigenpairs(&op, 2).unwrap();
    let lam = pairs[0].lambda;
    let gamma = lam.re + 0.3;
    let sim = Simulator::from_operator(op.with_params(&p.with_gamma(gamma)).unwrap(), 1e-3)
        .unwrap()
        .linearized();
    let g = sim.grid().clone();
    let u = &pairs[0].u;
    let star = u.y_reflect(&g);
    let proj = |psi: &ComplexField| {
        vortexlab::grid::bilinear(&g, star.values(), psi.values())
            / vortexlab::grid::bilinear(&g, star.values(), u.values())
    };
    let (end, _) = run(&sim, u, 0.5, 500, &[], |_| {}).unwrap();
    let c = proj(&end.psi);
    // c = exp(-(lambda - gamma) t), t short enough that the phase does not wrap
    let mu = -c.ln() / 0.5;
    let want = lam - gamma;
    assert!((mu.re - want.re).abs() < 0.01 * want.re.abs().max(0.1), "{mu} vs {want}");
    assert!((mu.im - want.im).abs() < 0.01 * want.im.abs(), "{mu} vs {want}");
}

#[test]
fn blow_up_is_detected() {
    let p = Params::canonical().with_lead(0.0).with_gamma(1.0);
    let sim = Simulator::new(&p, 10, 8, 0.5).unwrap();
    let psi0 = ComplexField::from_fn(sim.grid(), |_, _| Complex64::new(1e3, 0.0));
    assert!(matches!(run(&sim, &psi0, 5.0, 1, &[], |_| {}), Err(vortexlab::Error::BlowUp { .. })));
}

#[test]
fn weakly_supercritical_orbit_matches_normal_form() {
    let p = Params::canonical().with_field(0.05).with_current(25.0);
    let op = Operator::new(&p, 24, 17).unwrap();
    let nf = NormalFormData::compute(&op, &EigenOptions::default()).unwrap();
    let eps = 0.02 * nf.lambda1.re;
    let orbit = hopf_orbit(&nf, eps).unwrap();
    let sim = Simulator::from_operator(op.with_params(&p.with_gamma(nf.lambda1.re + eps)).unwrap(), 5e-3).unwrap();
    let g = sim.grid().clone();
    let a0 = Complex64::new(0.7 * orbit.amplitude, 0.0);
    let psi0 = &nf.u1.scaled(a0) + &nf.u2(&g).scaled(a0.conj());
    let mut alpha = Vec::new();
    run(&sim, &psi0, 60.0, 10, &[], |s| {
        alpha.push(vortexlab::normal_form::project_alpha(&g, &nf.u1, &s.psi))
    })
    .unwrap();
    let r = alpha.last().unwrap().norm();
    assert!((r - orbit.amplitude).abs() < 0.1 * orbit.amplitude, "{r} vs {}", orbit.amplitude);
}

#[test]
fn tracker_classifies_synthetic_events() {
    let g = vortexlab::grid::Grid::new(&Params::canonical(), 40, 27).unwrap();
    let v = |x: f64, y: f64, degree: i32| Vortex { x, y, degree };
    let frames = vec![
        VortexSnapshot { t: 0.0, vortices: vec![v(0.0, 0.64, 1)] },
        VortexSnapshot { t: 1.0, vortices: vec![v(0.0, 0.6, 1)] },
        VortexSnapshot { t: 2.0, vortices: vec![v(0.0, 0.55, 1), v(0.3, 0.0, 1), v(0.36, 0.0, -1)] },
        VortexSnapshot { t: 3.0, vortices: vec![v(0.0, 0.5, 1), v(0.25, 0.0, 1), v(0.42, 0.0, -1)] },
        VortexSnapshot { t: 4.0, vortices: vec![v(0.0, 0.45, 1)] },
    ];
    let track = track_vortices(&g, &frames).unwrap();
    let kinds: Vec<_> = track.events.iter().map(|e| e.kind).collect();
    assert!(kinds.contains(&TrackEventKind::PairCreation));
    assert!(kinds.contains(&TrackEventKind::Unexplained) || kinds.contains(&TrackEventKind::PairAnnihilation));
    assert_eq!(track.tracks[0].points.len(), 5);

    let jump = vec![
        VortexSnapshot { t: 0.0, vortices: vec![v(0.0, 0.0, 1)] },
        VortexSnapshot { t: 1.0, vortices: vec![v(0.25, 0.0, 1)] },
    ];
    assert!(matches!(track_vortices(&g, &jump), Err(vortexlab::Error::StrideTooCoarse { .. })));
}

#[test]
fn same_degree_approach_is_a_collision() {
    let g = vortexlab::grid::Grid::new(&Params::canonical(), 40, 27).unwrap();
    let frames: Vec<VortexSnapshot> = (0..9)
        .map(|k| {
            let d = 0.05 + 0.02 * (k as f64 - 4.0).abs();
            VortexSnapshot {
                t: k as f64,
                vortices: vec![
                    Vortex { x: 0.0, y: d, degree: 1 },
                    Vortex { x: 0.0, y: -d, degree: 1 },
                ],
            }
        })
        .collect();
    let track = track_vortices(&g, &frames).unwrap();
    let c: Vec<_> = track.events.iter().filter(|e| e.kind == TrackEventKind::Collision).collect();
    assert_eq!(c.len(), 1);
    assert_eq!(c[0].t, 4.0);
}
