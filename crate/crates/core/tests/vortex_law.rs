use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use vortexlab::grid::Params;
use vortexlab::spectral::{leading_eigenpairs, Operator};
use vortexlab::vortex_law::*;

/// Synthetic profile on [-K, K] built from a few Fourier modes.
fn synthetic(coef: &[f64], m: usize) -> BetaProfile {
    let k = 2.0 / 3.0;
    let f = |y: f64| {
        coef.iter()
            .enumerate()
            .map(|(q, c)| c * ((q + 1) as f64 * PI * (y + k) / (2.0 * k)).cos())
            .sum::<f64>()
    };
    let y: Vec<f64> = (0..m).map(|j| -k + 2.0 * k * j as f64 / (m - 1) as f64).collect();
    let beta = y.iter().map(|&v| f(v) - f(0.0)).collect();
    BetaProfile {
        origin: m / 2,
        g: vec![1.0; m],
        unreliable: vec![false; m],
        scale: Complex64::new(1.0, 0.0),
        y,
        beta,
    }
}

fn brute_count(beta: &BetaProfile, chi: f64, t: f64) -> usize {
    let n = 10 * beta.len();
    let k = beta.y[beta.len() - 1];
    let mut count = 0;
    let lo = ((chi * t - FRAC_PI_2 - beta.max()) / PI).ceil() as i64;
    let hi = ((chi * t - FRAC_PI_2 - beta.min()) / PI).floor() as i64;
    for b in lo..=hi {
        let c = chi * t - FRAC_PI_2 - b as f64 * PI;
        let mut prev = beta.eval(-k) - c;
        for q in 1..=n {
            let y = -k + 2.0 * k * q as f64 / n as f64;
            let v = beta.eval(y) - c;
            if (prev < 0.0) != (v < 0.0) {
                count += 1;
            }
            prev = v;
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn track_points_satisfy_the_law(
        coef in prop::collection::vec(-1.5f64..1.5, 1..4),
        chi in 0.5f64..30.0,
    ) {
        let beta = synthetic(&coef, 57);
        let window = (0.0, 2.0 * PI / chi);
        let pred = predict_vortices(&beta, chi, window).unwrap();
        for tr in &pred.tracks {
            for &(t, y) in &tr.points {
                let r = chi * t - beta.eval(y) - FRAC_PI_2 - tr.n as f64 * PI;
                prop_assert!(r.abs() <= 1e-8, "residual {r}");
            }
        }
    }

    #[test]
    fn root_count_matches_dense_scan(
        coef in prop::collection::vec(-1.5f64..1.5, 1..4),
        chi in 0.5f64..30.0,
        frac in 0.0f64..1.0,
    ) {
        let beta = synthetic(&coef, 57);
        let t = frac * 2.0 * PI / chi;
        let roots = roots_at(&beta, chi, t);
        prop_assert_eq!(roots.len(), brute_count(&beta, chi, t));
    }

    #[test]
    fn events_scale_with_frequency(coef in prop::collection::vec(-1.5f64..1.5, 1..4), chi in 0.5f64..10.0) {
        let beta = synthetic(&coef, 41);
        let a = predict_vortices(&beta, chi, (0.0, 3.0 * PI / chi)).unwrap();
        let b = predict_vortices(&beta, 2.0 * chi, (0.0, 1.5 * PI / chi)).unwrap();
        prop_assert_eq!(a.events.len(), b.events.len());
        for (x, y) in a.events.iter().zip(&b.events) {
            prop_assert_eq!(x.kind, y.kind);
            prop_assert!((x.t - 2.0 * y.t).abs() <= 1e-12 * (1.0 + x.t));
        }
    }

    #[test]
    fn events_repeat_every_half_period(coef in prop::collection::vec(-1.5f64..1.5, 1..4), chi in 0.5f64..10.0) {
        let beta = synthetic(&coef, 41);
        let half = PI / chi;
        let pred = predict_vortices(&beta, chi, (0.0, 4.0 * half)).unwrap();
        for e in pred.events.iter().filter(|e| e.t + half <= 4.0 * half) {
            let twin = pred.events.iter().any(|f| {
                f.kind == e.kind && f.y == e.y && (f.t - e.t - half).abs() < 1e-9
            });
            prop_assert!(twin, "{:?}", e);
        }
    }
}

#[test]
fn interior_events_sit_at_extrema() {
    let beta = synthetic(&[0.3, -0.8, 0.4], 81);
    let chi = 3.0;
    let pred = predict_vortices(&beta, chi, (0.0, 2.0 * PI / chi)).unwrap();
    for e in &pred.events {
        let j = beta.y.iter().position(|&y| y == e.y).unwrap();
        match e.kind {
            VortexEventKind::PairCreation => {
                assert!(beta.beta[j] < beta.beta[j - 1] && beta.beta[j] < beta.beta[j + 1]);
            }
            VortexEventKind::PairAnnihilation | VortexEventKind::Collision => {
                assert!(beta.beta[j] > beta.beta[j - 1] && beta.beta[j] > beta.beta[j + 1]);
            }
            _ => assert!(j == 0 || j == beta.len() - 1),
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let beta = synthetic(&[0.5], 21);
    assert!(predict_vortices(&beta, 0.0, (0.0, 1.0)).is_err());
    assert!(predict_vortices(&beta, 1.0, (1.0, 1.0)).is_err());
}

#[test]
fn profile_from_eigenfunction() {
    for (h, current) in [(0.0, 25.0), (0.05, 25.0), (20.0, 25.0)] {
        let p = Params::canonical().with_field(h).with_current(current);
        let op = Operator::new(&p, 41, 28).unwrap();
        let u = &leading_eigenpairs(&op, 2).unwrap()[0].u;
        let b = extract_beta(op.grid(), u).unwrap();
        assert_eq!(b.beta[b.origin], 0.0);
        assert_eq!(b.y[b.origin], 0.0);
        for w in b.beta.windows(2) {
            assert!((w[1] - w[0]).abs() < PI);
        }
        let dy = op.grid().dy();
        let (lo, hi) = b.boundary_slopes();
        assert!(lo.abs() <= 5.0 * dy && hi.abs() <= 5.0 * dy, "{lo} {hi}");
        if h == 0.0 {
            // even in y
            for j in 0..b.len() {
                let m = b.len() - 1 - j;
                assert!((b.beta[j] - b.beta[m]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn unnormalizable_profile_is_reported() {
    let p = Params::canonical().with_current(30.0);
    let op = Operator::new(&p, 21, 15).unwrap();
    let g = op.grid();
    let odd = vortexlab::grid::ComplexField::from_fn(g, |x, y| Complex64::new(y * (1.0 + x), 0.0));
    assert!(matches!(extract_beta(g, &odd), Err(vortexlab::Error::Unnormalizable(_))));
}
