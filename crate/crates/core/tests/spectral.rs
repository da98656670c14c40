use num_complex::Complex64;
use proptest::prelude::*;
use vortexlab::grid::Params;
use vortexlab::spectral::*;
use vortexlab::Error;

fn canonical(h: f64, current: f64) -> Params {
    Params::canonical().with_field(h).with_current(current)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn eigenvalues_respect_energy_bounds(current in 0.0f64..120.0, h in 0.0f64..20.0) {
        let op = Operator::new(&canonical(h, current), 29, 21).unwrap();
        let pairs = leading_eigenpairs(&op, 4).unwrap();
        for p in &pairs {
            prop_assert!(p.lambda.re > 0.0);
            prop_assert!(p.lambda.im.abs() <= op.imag_bound() + 1e-6);
            let rq = op.rayleigh_identity(&p.u);
            prop_assert!((rq - p.lambda).norm() <= 1e-6 * p.lambda.norm(), "{} vs {}", rq, p.lambda);
        }
    }

    #[test]
    fn spectrum_is_conjugation_closed(current in 10.0f64..80.0, h in 0.0f64..10.0) {
        let op = Operator::new(&canonical(h, current), 29, 21).unwrap();
        let pairs = leading_eigenpairs(&op, 6).unwrap();
        // drop the last pair if the cut splits a conjugate pair
        let closed: Vec<EigenPair> = if pairs[5].lambda.im.abs() > op.tol_im()
            && (pairs[5].lambda.conj() - pairs[4].lambda).norm() > 1e-6
        {
            pairs[..5].to_vec()
        } else {
            pairs.clone()
        };
        prop_assert!(conjugation_defect(&closed) <= 1e-6);
        prop_assert!(biorthogonality_defect(op.grid(), &pairs) <= 1e-6);
    }
}

#[test]
fn conjugate_partner_is_pt_image() {
    let op = Operator::new(&canonical(2.0, 40.0), 33, 23).unwrap();
    let pairs = leading_eigenpairs(&op, 2).unwrap();
    assert!(pairs[0].lambda.im > 0.0);
    assert!((pairs[0].lambda.conj() - pairs[1].lambda).norm() < 1e-8);
    assert!(pt_partner_defect(op.grid(), &pairs[0].u, &pairs[1].u) < 1e-6);
}

#[test]
fn real_eigenfunctions_are_pt_invariant() {
    let op = Operator::new(&canonical(0.0, 5.0), 33, 23).unwrap();
    let pairs = leading_eigenpairs(&op, 2).unwrap();
    for p in &pairs {
        assert!(p.lambda.im.abs() < op.tol_im());
        assert!(pt_partner_defect(op.grid(), &p.u, &p.u) < 1e-6);
    }
}

#[test]
fn zero_field_modes_have_y_parity() {
    let op = Operator::new(&canonical(0.0, 30.0), 33, 23).unwrap();
    let g = op.grid();
    for p in leading_eigenpairs(&op, 4).unwrap() {
        let refl = p.u.y_reflect(g);
        let even = (&p.u - &refl).max_abs();
        let odd = (&p.u + &refl).max_abs();
        assert!(even.min(odd) < 1e-6 * p.u.max_abs(), "{even} {odd}");
    }
}

#[test]
fn bilinear_normalization_and_sign() {
    let op = Operator::new(&canonical(0.5, 25.0), 33, 23).unwrap();
    let g = op.grid();
    for p in leading_eigenpairs(&op, 2).unwrap() {
        let s = vortexlab::grid::bilinear(g, p.u.values(), p.u.values());
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }
}

#[test]
fn sparse_and_dense_agree() {
    let op = Operator::new(&canonical(4.0, 35.0), 21, 15).unwrap();
    let sparse = leading_eigenpairs(&op, 4).unwrap();
    let dense = dense_eigenpairs(&op, 4).unwrap();
    for (a, b) in sparse.iter().zip(&dense) {
        assert!((a.lambda - b.lambda).norm() < 1e-8 * b.lambda.norm());
    }
}

#[test]
fn ic_bracket_must_straddle() {
    let opts = EigenOptions::default();
    let r = find_ic(&Params::canonical(), 29, 21, (0.0, 5.0), &opts);
    assert!(matches!(r, Err(Error::InvalidBracket { .. })));
    let r = find_ic(&Params::canonical(), 29, 21, (5.0, 1.0), &opts);
    assert!(matches!(r, Err(Error::InvalidParams { .. })));
}

#[test]
fn ic_at_zero_field() {
    let opts = EigenOptions::default();
    let r = find_ic(&Params::canonical(), 33, 23, (0.0, 40.0), &opts).unwrap();
    assert!(r.hi - r.lo <= 40.0e-3 + 1e-12);
    // the leading pair is real just below and complex just above
    let below = Operator::new(&canonical(0.0, r.lo), 33, 23).unwrap();
    let above = Operator::new(&canonical(0.0, r.hi), 33, 23).unwrap();
    let lb = leading_eigenpairs(&below, 2).unwrap();
    let la = leading_eigenpairs(&above, 2).unwrap();
    assert!(lb[0].lambda.im.abs() <= below.tol_im());
    assert!(la[0].lambda.im.abs() > above.tol_im());
}

#[test]
fn zero_field_current_sweep_shows_collision() {
    let values: Vec<f64> = (0..=12).map(|k| 2.0 * k as f64).collect();
    let sweep = track_branches(
        SweepParam::Current,
        &values,
        &Params::canonical(),
        29,
        21,
        &TrackOptions::default(),
    )
    .unwrap();
    let first = sweep
        .events
        .iter()
        .find(|e| e.kind == BranchEventKind::Collision && (e.branches.0 == 0 || e.branches.1 == 0))
        .expect("lambda1 collides");
    assert!(first.param > 10.0 && first.param < 24.0, "{}", first.param);
}

#[test]
fn field_sweep_without_current_stays_real() {
    let values: Vec<f64> = (0..=8).map(|k| k as f64).collect();
    let sweep = track_branches(
        SweepParam::Field,
        &values,
        &Params::canonical(),
        25,
        17,
        &TrackOptions::default(),
    )
    .unwrap();
    assert!(sweep.events.iter().all(|e| e.kind != BranchEventKind::Collision));
    for pt in &sweep.points {
        for b in pt {
            assert!(b.lambda.im.abs() < 1e-8);
        }
    }
}
