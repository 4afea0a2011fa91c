use semiwave::geometry::*;
use semiwave::metric::Metric;
use semiwave::Error;

fn scan(n_rays: usize, sigma_max: f64) -> ScanConfig {
    ScanConfig { n_rays, dim: 3, sigma_max, step: 0.002, seed: 17 }
}

#[test]
fn free_ray_from_origin() {
    let m = Metric::unit();
    let ray = RayState { t: 0.0, x: vec![0.0, 0.0, 0.0], tau: 1.0, xi: vec![1.0, 0.0, 0.0], sigma: 0.0 };
    let rs = [1.5, 2.0, 3.7];
    let tr = trace_ray(&m, &ray, 10.0, 0.05, &rs).unwrap();
    for (r, s) in rs.iter().zip(&tr.escapes) {
        assert!((s.unwrap() - r / 2.0).abs() < 1e-10, "{r}: {s:?}");
    }
    for st in &tr.states {
        assert!((st.radius() - 2.0 * st.sigma).abs() < 1e-12);
    }
}

#[test]
fn free_ray_moves_at_unit_speed_in_t() {
    let m = Metric::unit();
    let ray = RayState::null(&m, 0.0, vec![0.3, -0.2, 0.1], &[0.2, 0.7, -0.4]);
    let tr = trace_ray(&m, &ray, 3.0, 0.1, &[2.0]).unwrap();
    let (a, b) = (&tr.states[0], tr.states.last().unwrap());
    let dx: f64 = a.x.iter().zip(&b.x).map(|(p, q)| (q - p).powi(2)).sum::<f64>().sqrt();
    assert!((dx / (b.t - a.t) - 1.0).abs() < 1e-12);
}

#[test]
fn outgoing_rays_never_reenter() {
    let m = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
    for ray in launch_set(&m, &scan(40, 10.0)) {
        let tr = trace_ray(&m, &ray, 10.0, 0.002, &[1.5, 3.0]).unwrap();
        let mut outside = false;
        let mut prev_r = 0.0;
        let mut prev_t = f64::NEG_INFINITY;
        for st in &tr.states {
            assert!(st.t > prev_t, "t(σ) must increase");
            prev_t = st.t;
            let r = st.radius();
            if outside {
                assert!(r > prev_r, "ray re-entered at σ = {}", st.sigma);
            } else if r > m.rho && st.radial_velocity(&m) > 0.0 {
                outside = true;
            }
            prev_r = r;
        }
    }
}

#[test]
fn null_constraint_is_fourth_order() {
    let m = Metric::static_bump(-0.5, 1.0).unwrap();
    let ray = RayState::null(&m, 0.0, vec![0.6, 0.1, 0.0], &[-1.0, 0.2, 0.1]);
    let coarse = trace_ray(&m, &ray, 2.0, 0.0025, &[2.0]).unwrap();
    let fine = trace_ray(&m, &ray, 2.0, 0.00125, &[2.0]).unwrap();
    assert!(coarse.max_drift <= NULL_TOL);
    let ratio = coarse.max_drift / fine.max_drift;
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio} ({} / {})", coarse.max_drift, fine.max_drift);
}

#[test]
fn large_steps_trip_the_drift_check() {
    let m = Metric::static_bump(-0.5, 1.0).unwrap();
    let ray = RayState::null(&m, 0.0, vec![0.6, 0.1, 0.0], &[-1.0, 0.2, 0.1]);
    assert!(matches!(trace_ray(&m, &ray, 2.0, 0.3, &[2.0]), Err(Error::ConstraintDrift { .. })));
}

#[test]
fn static_bump_fan_escapes() {
    let m = Metric::static_bump(-0.4, 1.0).unwrap();
    let table = nontrapping_scan(&m, &[1.5, 2.0, 4.0], &scan(100, 20.0)).unwrap();
    assert_eq!(table.verdict, Verdict::NonTrapping);
    let s: Vec<f64> = table.s_r.iter().map(|s| s.unwrap()).collect();
    assert!(s.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn unit_scan_worst_ray() {
    let m = Metric::unit();
    let table = nontrapping_scan(&m, &[2.0], &scan(64, 10.0)).unwrap();
    assert_eq!(table.verdict, Verdict::NonTrapping);
    assert!((table.s_r[0].unwrap() - 1.5).abs() < 1e-10, "{:?}", table.s_r);
}

#[test]
fn periodic_bump_fan_is_nontrapping() {
    let m = Metric::periodic_bump(0.3, 1.0, 1.0, 0.5).unwrap();
    let table = nontrapping_scan(&m, &[1.5, 3.0], &scan(200, 20.0)).unwrap();
    assert_eq!(table.verdict, Verdict::NonTrapping, "{table:?}");
    assert!(table.max_drift <= NULL_TOL);
}

#[test]
fn short_budget_is_inconclusive() {
    let m = Metric::static_bump(-0.4, 1.0).unwrap();
    let table = nontrapping_scan(&m, &[3.0], &scan(50, 0.5)).unwrap();
    assert_eq!(table.verdict, Verdict::Inconclusive);
    assert!(table.s_r[0].is_none());
    assert!(nontrapping_scan(&m, &[0.5], &scan(50, 0.5)).is_err());
}
