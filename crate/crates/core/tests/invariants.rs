use nhkrein::dynamics::{evolve, survival_probability, Propagator, SurvivalOptions};
use nhkrein::linalg::{self, c, real, CMat, CVec, I};
use nhkrein::metric::AlphaPolicy;
use nhkrein::observables::{squeezing_from_moments, variance_along, SpinMoments};
use nhkrein::pipeline::{prepare, EpMode, MetricMode};
use nhkrein::spectral::{eigensystem, Tolerances};
use nhkrein::spin::{coherent_spin_state, oat_family, SpinSystem, REFERENCE_OMEGA};
use proptest::prelude::*;

fn matrix(n: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| CMat::from_iterator(n, n, v.into_iter().map(|(a, b)| c(a, b))))
}

fn vector(n: usize) -> impl Strategy<Value = CVec> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| CVec::from_iterator(n, v.into_iter().map(|(a, b)| c(a, b))))
}

fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spin_algebra(two_s in 1u32..24) {
        let sys = SpinSystem::from_two_s(two_s);
        let (sx, sy, sz) = (sys.sx(), sys.sy(), sys.sz());
        let scale = 1.0 + two_s as f64;
        prop_assert!(linalg::fro_norm(&(commutator(sx, sy) - sz * I)) < 1e-12 * scale);
        prop_assert!(linalg::fro_norm(&(commutator(sy, sz) - sx * I)) < 1e-12 * scale);
        prop_assert!(linalg::fro_norm(&(commutator(sz, sx) - sy * I)) < 1e-12 * scale);
        let s = sys.spin();
        let casimir = sx * sx + sy * sy + sz * sz - sys.identity() * real(s * (s + 1.0));
        prop_assert!(linalg::fro_norm(&casimir) < 1e-10 * scale * scale);
    }

    #[test]
    fn random_matrices_are_biorthonormal(h in (1usize..=8).prop_flat_map(matrix)) {
        let sd = eigensystem(&h, &Tolerances::default()).unwrap();
        prop_assert!(sd.biorthonormality_residual() < 1e-8);
        let rebuilt = sd.reconstruct().unwrap();
        prop_assert!(linalg::fro_norm(&(rebuilt - &h)) < 1e-8 * linalg::fro_norm(&h).max(1.0));
    }

    #[test]
    fn propagator_is_a_group((h, t, s) in (1usize..=6).prop_flat_map(matrix).prop_flat_map(|h| (Just(h), -2.0f64..2.0, -2.0f64..2.0))) {
        let sd = eigensystem(&h, &Tolerances::default()).unwrap();
        let p = Propagator::diagonal(&h, &sd).unwrap();
        let lhs = p.u(t + s);
        let rhs = p.u(t) * p.u(s);
        prop_assert!(linalg::fro_norm(&(&lhs - rhs)) < 1e-8 * linalg::fro_norm(&lhs).max(1.0));
        let n = h.nrows();
        prop_assert!(linalg::fro_norm(&(p.u(0.0) - CMat::identity(n, n))) < 1e-10);
    }

    #[test]
    fn inner_products_do_not_depend_on_basis_scaling(
        ratio in 0.0f64..1.2,
        scales in prop::collection::vec(0.1f64..10.0, 5),
        f in vector(5),
        g in vector(5),
        a in matrix(5),
    ) {
        let h = oat_family(4, REFERENCE_OMEGA, 1.0)(ratio);
        let p = prepare(&h, &Tolerances::default(), EpMode::Auto, MetricMode::Auto, &AlphaPolicy::default()).unwrap();
        let other = p.metric.rescale_basis(&scales).unwrap();
        let o = &a + a.adjoint();
        let form = |ctx: &nhkrein::metric::MetricContext| {
            let oo = ctx.transform_observable(&o).unwrap();
            ctx.weighted_form(&ctx.coordinates(&f).unwrap(), &oo, &ctx.coordinates(&g).unwrap())
        };
        let scale = f.norm() * g.norm() * linalg::fro_norm(&o);
        prop_assert!((form(&p.metric) - form(&other)).norm() < 1e-10 * scale);
        prop_assert!(p.metric.min_metric_eigenvalue() > 0.0);
    }

    #[test]
    fn coherent_state_points_along_its_axis(theta in 0.0f64..=std::f64::consts::PI, phi in -3.2f64..3.2, two_s in 1u32..16) {
        let sys = SpinSystem::from_two_s(two_s);
        let css = coherent_spin_state(&sys, theta, phi).unwrap();
        let n0 = css.direction();
        let residual = sys.along(n0) * &css.amplitudes + &css.amplitudes * real(sys.spin());
        prop_assert!(residual.norm() < 1e-10 * (1.0 + sys.spin()));
        prop_assert!((css.amplitudes.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezing_frame_minimizes_transverse_variance(ratio in 0.0f64..2.0, t in 0.0f64..6.0, angle in 0.0f64..std::f64::consts::TAU) {
        let sys = SpinSystem::from_particles(6);
        let h = oat_family(6, REFERENCE_OMEGA, 1.0)(ratio);
        let p = prepare(&h, &Tolerances::default(), EpMode::Auto, MetricMode::Auto, &AlphaPolicy::default()).unwrap();
        let css = coherent_spin_state(&sys, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let res = evolve(&css.amplitudes, &p.propagator, &p.metric, &[t]).unwrap();
        let moments = SpinMoments::new(&sys, &p.metric).unwrap();
        let state = &res.states[0];
        let (mean, second) = (moments.mean_spin(state).unwrap(), moments.second_moments(state).unwrap());
        let r = squeezing_from_moments(mean, second).unwrap();
        let [nx, ny, _] = r.frame;
        let u = [0, 1, 2].map(|k| angle.cos() * nx[k] + angle.sin() * ny[k]);
        let v = variance_along(mean, &second, u);
        prop_assert!(r.var_x <= v + 1e-10);
        prop_assert!(r.var_y >= v - 1e-10);
        prop_assert!(r.uncertainty_product >= 1.0 - 1e-9);
    }

    #[test]
    fn survival_is_a_probability(ratio in 0.0f64..2.0, t in 0.0f64..50.0) {
        let sys = SpinSystem::from_particles(4);
        let h = oat_family(4, REFERENCE_OMEGA, 1.0)(ratio);
        let p = prepare(&h, &Tolerances::default(), EpMode::Auto, MetricMode::Auto, &AlphaPolicy::default()).unwrap();
        let css = coherent_spin_state(&sys, std::f64::consts::FRAC_PI_4, 0.0).unwrap();
        let res = evolve(&css.amplitudes, &p.propagator, &p.metric, &[0.0, t.max(1e-3)]).unwrap();
        let s = survival_probability(&res, &p.metric, SurvivalOptions::default());
        prop_assert_eq!(s[0], 1.0);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&s[1]));
    }
}
