use vortexlab::grid::Params;
use vortexlab::normal_form::NormalFormData;
use vortexlab::spectral::{EigenOptions, Operator};
use vortexlab::validate::{crosscheck, CrosscheckOptions};

#[test]
fn weak_orbit_follows_the_reduced_model() {
    let p = Params::canonical().with_field(0.05).with_current(25.0);
    let op = Operator::new(&p, 40, 27).unwrap();
    let nf = NormalFormData::compute(&op, &EigenOptions::default()).unwrap();
    let opts = CrosscheckOptions { settle_periods: 40.0, measure_periods: 2.0, ..Default::default() };
    let c = crosscheck(&op, &nf, &opts).unwrap();
    assert!((c.amplitude - c.orbit.amplitude).abs() < 0.02 * c.orbit.amplitude);
    assert!((c.chi - c.orbit.chi).abs() < 0.01 * c.orbit.chi);
    assert!(c.rms_cells_fitted <= 2.0);
    assert!(c.crossings.len() >= 27);
    // the residual phase offset is an O(eps) correction
    assert!(c.phase_offset.abs() < 0.01);
}
