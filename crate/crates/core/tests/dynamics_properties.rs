use lcf_core::analysis::{
    certify, count_cycles, detect_cycle, equilibrium_scan, flux_check, hausdorff, seed_settings, Annulus,
    CertifyParams, CountOptions, SystemKind, Verdict, DEFAULT_CLUSTER_TOL,
};
use lcf_core::constructions::{factored_system, planar_field, thm3_system, CenterSet};
use lcf_core::dynamics::PlanarField;
use lcf_core::figures::{self, FigureId};
use lcf_core::{default_centers, integrate, Execution, IntegratorSettings, Method};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn halving_tolerances_moves_final_state_little(r in 0.2f64..1.8, th in 0.0f64..6.28) {
        let field = PlanarField::new(default_centers(1));
        let seed = [8.0 + r * th.cos(), 8.0 + r * th.sin()];
        let coarse = IntegratorSettings::default().with_t_end(10.0).with_tol(1e-6, 1e-8);
        let fine = coarse.with_tol(5e-7, 5e-9);
        let a = integrate(&field, &seed, &coarse).unwrap();
        let b = integrate(&field, &seed, &fine).unwrap();
        for (p, q) in a.last_state().iter().zip(b.last_state()) {
            prop_assert!((p - q).abs() < 10.0 * (1e-6 * p.abs().max(q.abs()) + 1e-8), "{p} vs {q}");
        }
    }

    #[test]
    fn factored_trajectories_stay_positive(x in 0.1f64..8.0, y in 0.1f64..8.0, scale in 0.1f64..2.0) {
        let c = figures::fig1a_centers();
        let sys = factored_system(&c, 1.0).unwrap();
        let mut s0 = vec![x, y];
        s0.extend(lcf_core::constructions::slow_manifold(&c, x, y).iter().map(|q| scale * q));
        let settings = IntegratorSettings::default().with_method(Method::Rosenbrock).with_tol(1e-7, 1e-9).with_t_end(20.0);
        let tr = integrate(&sys, &s0, &settings).unwrap();
        for s in &tr.states {
            prop_assert!(s.iter().all(|&v| v > 0.0), "{s:?}");
        }
    }

    #[test]
    fn count_is_independent_of_seed_order(seeds in Just(figures::config(FigureId::F1a).seed_points()).prop_shuffle()) {
        let field = PlanarField::new(figures::fig1a_centers());
        let states: Vec<Vec<f64>> = seeds.iter().map(|p| p.to_vec()).collect();
        let opts = CountOptions { execution: Execution::Sequential, ..Default::default() };
        let n = count_cycles(&field, &states, &IntegratorSettings::default(), &opts).count;
        prop_assert_eq!(n, 4);
    }
}

#[test]
fn figure_3_runs_keep_v_positive_and_below_one() {
    for id in [FigureId::F3a, FigureId::F3b] {
        let cfg = figures::config(id);
        let run = figures::run(&cfg, Execution::default()).unwrap();
        for tr in run.trajectories.iter() {
            let tr = tr.as_ref().expect("figure 3 seeds integrate");
            for (t, s) in tr.times.iter().zip(&tr.states) {
                assert!(s.iter().all(|&v| v > 0.0), "{id}: t={t} {s:?}");
                if *t >= 20.0 {
                    assert!(s[2..].iter().all(|&v| v <= 1.0 + 1e-6), "{id}: t={t} {s:?}");
                }
            }
        }
    }
}

#[test]
fn x_axis_is_invariant_for_xfactored_systems() {
    let c = figures::fig1a_centers();
    let settings = IntegratorSettings::default().with_t_end(20.0);
    let tr = integrate(&PlanarField::xfactored(c.clone()), &[0.0, 3.0], &settings).unwrap();
    assert!(tr.states.iter().all(|s| s[0].abs() <= settings.abs_tol));
    let sys = factored_system(&c, 1.0).unwrap();
    let mut s0 = vec![0.0, 3.0];
    s0.extend(lcf_core::constructions::slow_manifold(&c, 0.0, 3.0));
    let stiff = settings.with_method(Method::Rosenbrock).with_tol(1e-7, 1e-9);
    let tr = integrate(&sys, &s0, &stiff).unwrap();
    assert!(tr.states.iter().all(|s| s[0].abs() <= stiff.abs_tol));
}

#[test]
fn planar_annuli_are_trapping_for_k_up_to_5() {
    let flux_bound = 2.0 / 9.0 * 0.9;
    let scan_bound = 0.9 * 2f64.sqrt() / 9.0;
    for k in 1..=5 {
        let c = default_centers(k);
        let f = |x, y| planar_field(&c, x, y);
        for an in Annulus::for_centers(&c) {
            let (outer, inner) = flux_check(f, &an, 720);
            assert!(outer.pass && inner.pass);
            assert!(outer.margin() >= flux_bound && inner.margin() >= flux_bound, "K={k}");
            assert!(equilibrium_scan(f, &an, 120) >= scan_bound, "K={k}");
        }
    }
}

#[test]
fn period_does_not_depend_on_seed() {
    let field = PlanarField::new(default_centers(1));
    let periods: Vec<f64> = (0..8)
        .map(|j| {
            let th = j as f64 * std::f64::consts::FRAC_PI_4;
            let r = if j % 2 == 0 { 0.8 } else { 1.3 };
            let tr = integrate(&field, &[8.0 + r * th.cos(), 8.0 + r * th.sin()], &IntegratorSettings::default()).unwrap();
            detect_cycle(&tr, 0.5).unwrap().unwrap().period
        })
        .collect();
    let (lo, hi) = periods.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &p| (l.min(p), h.max(p)));
    assert!(hi - lo < 2e-3, "{periods:?}");
}

#[test]
fn thm3_loops_match_planar_loops() {
    let c = default_centers(1);
    let base = IntegratorSettings::default();
    let planar = integrate(&PlanarField::new(c.clone()), &[9.0, 8.0], &base).unwrap();
    let s = seed_settings(SystemKind::Thm3, &base, &c, 9.0, 8.0);
    let rescaled = integrate(&thm3_system(&c), &[9.0, 8.0], &s).unwrap();
    let a = detect_cycle(&planar, 0.5).unwrap().unwrap();
    let b = detect_cycle(&rescaled, 0.5).unwrap().unwrap();
    assert!(hausdorff(&a, &b) < DEFAULT_CLUSTER_TOL, "{}", hausdorff(&a, &b));
}

#[test]
fn fixed_point_seed_of_figure_1b_has_no_cycle() {
    let field = PlanarField::new(figures::fig1b_centers());
    let tr = integrate(&field, &[3.05, 3.05], &IntegratorSettings::default()).unwrap();
    assert!(detect_cycle(&tr, 0.5).unwrap().is_none());
}

#[test]
fn certify_examples() {
    let r = certify(SystemKind::Planar, 1, &CertifyParams::default());
    assert_eq!(r.verdict, Verdict::Pass);
    assert_eq!(r.cycles.len(), 1);
    assert!((r.cycles[0].period - 13.0 * std::f64::consts::PI / 4.0).abs() < 1e-3);

    for (kind, k) in [(SystemKind::XfactoredPlanar, 3), (SystemKind::Tikhonov, 2), (SystemKind::Thm3, 2)] {
        let r = certify(kind, k, &CertifyParams::default());
        assert_eq!(r.verdict, Verdict::Pass, "{kind:?}: {r:?}");
        assert_eq!(r.cycles.len(), k);
    }

    let close = CenterSet::from_flat(&[2.0, 2.0, 2.0, 4.0, 4.0, 2.0, 4.0, 4.0]).unwrap();
    let r = certify(SystemKind::Factored, 4, &CertifyParams { centers: Some(close), ..Default::default() });
    assert_eq!(r.verdict, Verdict::Fail);
    assert!(!r.separation_holds);
}

#[test]
fn certify_factored_with_four_default_centers() {
    let r = certify(SystemKind::Factored, 4, &CertifyParams::default());
    assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.errors);
    assert_eq!(r.cycles.len(), 4);
}
