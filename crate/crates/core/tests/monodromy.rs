use semiwave::metric::Metric;
use semiwave::monodromy::*;
use semiwave::wavegrid::Layout;
use semiwave::Error;

fn radial(h: f64, probes: usize) -> ProbeConfig {
    ProbeConfig::new(Layout::Radial { n: 3 }, h, probes, 1)
}

#[test]
fn zero_periods_is_the_cutoff_product() {
    let m = Metric::unit();
    let c = CutoffPair::standard(&m, 0.5).unwrap();
    // Probes supported where both cutoffs equal 1.
    let cfg = ProbeConfig { probe_radius: Some(c.psi2.inner - 0.8), ..radial(0.01, 4) };
    let e = cutoff_norm_estimate(&m, &c, 0, &cfg).unwrap();
    assert!((e.estimate - 1.0).abs() <= 0.01, "{e:?}");
}

#[test]
fn free_wave_vanishes_past_the_huygens_horizon() {
    let m = Metric::unit();
    let c = CutoffPair::standard(&m, 0.5).unwrap();
    let n = c.huygens_n();
    assert!(n as f64 * c.period > 2.0 * c.support_radius());
    let e = cutoff_norm_estimate(&m, &c, n, &radial(0.01, 4)).unwrap();
    assert!(e.estimate <= 1e-3, "{e:?}");
    // Before the horizon the cutoff propagator is far from zero.
    let early = cutoff_norm_estimate(&m, &c, 4, &radial(0.01, 4)).unwrap();
    assert!(early.estimate > 0.5);
}

#[test]
fn more_probes_never_lower_the_estimate() {
    let m = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
    let c = CutoffPair::standard(&m, 1.0).unwrap();
    let few = cutoff_norm_estimate(&m, &c, 2, &radial(0.04, 2)).unwrap();
    let many = cutoff_norm_estimate(&m, &c, 2, &radial(0.04, 5)).unwrap();
    assert_eq!(few.per_probe[..], many.per_probe[..2]);
    assert!(many.estimate >= few.estimate);
    assert!(cutoff_norm_estimate(&m, &c, 2, &radial(0.04, 0)).is_err());
    let wrong = CutoffPair::standard(&m, 2.0).unwrap();
    assert!(cutoff_norm_estimate(&m, &wrong, 2, &radial(0.04, 2)).is_err());
}

#[test]
fn synthetic_exponential_series_is_recovered() {
    let n: Vec<usize> = (0..12).collect();
    let s = DecaySeries::from_model(DecayModel::Exponential, &[2.0, 0.3], n, 1.5).unwrap();
    let r = decay_fit(&s).unwrap();
    assert_eq!(r.best, Some(DecayModel::Exponential));
    let fit = r.exponential.as_ref().unwrap();
    assert!(fit.residual < 1e-10);
    assert!((fit.params[0] - 2.0).abs() < 1e-10 && (fit.params[1] - 0.3).abs() < 1e-10);
    // Geometric series in closed form.
    let q = (-0.3f64 * 1.5).exp();
    assert!((r.summability_proxy - 2.0 / (1.0 - q)).abs() < 1e-9);
}

#[test]
fn synthetic_log_squared_series_is_recovered() {
    let n: Vec<usize> = (0..20).collect();
    let mut s = DecaySeries::from_model(DecayModel::LogSquared, &[0.7], n, 1.0).unwrap();
    let r = decay_fit(&s).unwrap();
    assert_eq!(r.best, Some(DecayModel::LogSquared));
    let fit = r.log_squared.as_ref().unwrap();
    assert!(fit.residual < 1e-10);
    assert!((fit.params[0] - 0.7).abs() < 1e-12);
    assert!(r.exponential.as_ref().unwrap().residual > 1e-3);
    assert!(r.summability_proxy.is_finite());
    s.apply_fit(&r);
    assert_eq!(s.fit_model, Some(DecayModel::LogSquared));
}

#[test]
fn period_shift_leaves_the_propagator_unchanged() {
    let m = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
    let report = periodicity_check(&m, 1.0, 10, &radial(0.02, 1)).unwrap();
    assert_eq!(report.samples.len(), 10);
    assert!(report.max_relative_difference <= 1e-10, "{report:?}");
}

#[test]
fn composed_period_maps_match_one_propagation() {
    let m = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
    let report = group_check(&m, 1.0, 3, 3, &radial(0.02, 1)).unwrap();
    assert!(report.max_relative_difference <= 1e-10, "{report:?}");
}

#[test]
fn oversized_horizons_are_skipped() {
    let m = Metric::unit();
    let c = CutoffPair::standard(&m, 0.5).unwrap();
    let cfg = ProbeConfig { max_nodes: 200, ..radial(0.05, 1) };
    assert!(matches!(cutoff_norm_estimate(&m, &c, 40, &cfg), Err(Error::Resource(_))));
    let (series, _) = decay_series(&m, &c, &[0, 1, 2, 40], &cfg).unwrap();
    assert_eq!(series.n_values, vec![0, 1, 2]);
    assert_eq!(series.skipped, vec![40]);
}

#[test]
fn free_series_sum_is_carried_by_the_early_terms() {
    let m = Metric::unit();
    let c = CutoffPair::standard(&m, 0.5).unwrap();
    let hz = c.huygens_n();
    let n_values = vec![0, 4, 8, 12, hz, hz + 3, hz + 6];
    let (series, _) = decay_series(&m, &c, &n_values, &radial(0.01, 2)).unwrap();
    let report = decay_fit(&series).unwrap();
    assert!(report.summability_proxy.is_finite());
    let late: f64 = series.n_values.iter().zip(&series.norm_estimates).filter(|(n, _)| **n >= hz).map(|(_, d)| d).sum();
    assert!(late < 1e-2 * report.partial_sum, "{series:?}");
}
