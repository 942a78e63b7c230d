use dimerlab::estimator::{density_to_k, Estimator, DEFAULT_RESIDUAL_GROWTH};
use dimerlab::matchgen::Guards;
use dimerlab::Error;

#[test]
fn residual_guard_when_top_size_grows() {
    let est = Estimator::new(Guards::default());
    for p in [0.25, 0.5, 1.0] {
        let before = est.extrapolate(2, p, &[6, 8, 10, 12]).unwrap();
        let after = est.extrapolate(2, p, &[6, 8, 10, 14]).unwrap();
        assert!(
            after.residual_growth_within(&before, DEFAULT_RESIDUAL_GROWTH),
            "p = {p}: {} -> {}",
            before.fit_residual,
            after.fit_residual
        );
    }
    for p in [0.25, 0.5, 1.0] {
        let before = est.extrapolate(1, p, &[64, 128, 256]).unwrap();
        let after = est.extrapolate(1, p, &[64, 128, 512]).unwrap();
        assert!(
            after.residual_growth_within(&before, DEFAULT_RESIDUAL_GROWTH),
            "d = 1, p = {p}"
        );
    }
}

#[test]
fn even_paths_have_zero_free_energy_at_full_cover() {
    let series = Estimator::default()
        .extrapolate(1, 1.0, &[4, 6, 8])
        .unwrap();
    assert!(series.points.iter().all(|pt| pt.raw == 0.0));
    assert_eq!(series.extrapolated, 0.0);
    assert!(!series.surface_term);
}

#[test]
fn empty_density_is_trivial() {
    let c = Estimator::default().compare(2, 0.0, &[2, 3, 4]).unwrap();
    assert_eq!(c.estimate.extrapolated.abs(), 0.0);
    assert!(c.within_fklm);
    assert_eq!(c.pseries, 0.0);
    assert_eq!(c.square_series, Some(0.0));
}

#[test]
fn half_integral_density_rounds_down() {
    // p V / 2 = 1.5 and 2.5
    assert_eq!(density_to_k(6, 0.5).unwrap(), 1);
    assert_eq!(density_to_k(10, 0.5).unwrap(), 2);
    assert_eq!(density_to_k(10, 0.7).unwrap(), 3);
    assert!(matches!(density_to_k(10, 1.5), Err(Error::Domain(_))));
}

#[test]
fn extrapolation_rejects_bad_sizes() {
    let est = Estimator::default();
    assert!(matches!(
        est.extrapolate(2, 1.0, &[4, 6]),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        est.extrapolate(2, 1.0, &[4, 4, 6]),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        est.extrapolate(2, 1.0, &[4, 6, 40]),
        Err(Error::Capacity { .. })
    ));
}
