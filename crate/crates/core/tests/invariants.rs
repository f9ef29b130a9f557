use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use qbattery::kernels::{build_bath, spectral_density};
use qbattery::response::chi_laplace;
use qbattery::special::digamma;
use qbattery::{ledger, solve_characteristic, trace, Error, QuadratureSpec, RegimeKind, ResponseFunction, SystemParams};

/// Parameters spread over both regimes; near-critical draws are skipped by the caller.
fn any_params() -> impl Strategy<Value = SystemParams> {
    (-1.0f64..0.5, -0.5f64..0.7, -1.3f64..2.7, -1.3f64..2.0, prop_oneof![Just(0.0), 0.01f64..10.0]).prop_map(
        |(lw0, lm, lg, lwd, temp)| {
            SystemParams::new(10f64.powf(lw0), 10f64.powf(lm), 10f64.powf(lg), 10f64.powf(lwd), temp).unwrap()
        },
    )
}

fn solve(p: &SystemParams) -> Option<ResponseFunction> {
    match solve_characteristic(p) {
        Ok(r) => Some(r),
        Err(Error::DegenerateRoots { .. }) => None,
        Err(e) => panic!("unexpected error {e}"),
    }
}

/// Times covering the first oscillations and the approach to the steady state.
fn time_grid(r: &ResponseFunction) -> Vec<f64> {
    let fast = r.roots.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let slow = r.slowest_rate();
    let (t0, t1) = (0.05 / fast, (20.0 / slow).min(2e3 / fast));
    (0..12).map(|i| t0 * (t1 / t0).powf(i as f64 / 11.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn roots_and_initial_values(p in any_params()) {
        let Some(r) = solve(&p) else { return Ok(()) };
        for res in r.vieta_residuals() {
            prop_assert!(res < 1e-10, "{:?}", r.vieta_residuals());
        }
        let c = r.chi_all(0.0).unwrap();
        prop_assert!(c[0].abs() < 1e-10 && (c[1] - 1.0).abs() < 1e-10 && c[2].abs() < 1e-10, "{c:?}");
        for l in r.roots {
            prop_assert!(l.re > 0.0);
        }
        // roots are the poles of the closed-form Laplace transform
        for s in [Complex64::new(0.3, 0.0), Complex64::new(0.1, 2.0), Complex64::new(4.0, -1.0)] {
            let a = chi_laplace(&p, s);
            let b = r.laplace_from_roots(s);
            prop_assert!((a - b).norm() < 1e-9 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn energy_bookkeeping_along_a_trace(p in any_params()) {
        let Some(r) = solve(&p) else { return Ok(()) };
        let q = QuadratureSpec::default();
        let start = ledger(&r, 0.0, &q).unwrap();
        prop_assert!(start.w_total.abs() < 1e-9 * start.w_on);
        prop_assert!((start.h_coupling - start.w_on).abs() < 1e-9 * start.w_on);
        for l in trace(&r, &time_grid(&r), &q).unwrap() {
            prop_assert!(l.det_sigma >= 0.25 - 1e-9, "{l:?}");
            prop_assert!((0.0..=1.0).contains(&l.eta_b), "{l:?}");
            if let Some(eta) = l.eta_w {
                prop_assert!((0.0..=1.0).contains(&eta), "{l:?}");
            }
            prop_assert!(l.ergotropy <= l.de_battery + 1e-9 * l.e_stored, "{l:?}");
        }
    }

    #[test]
    fn energies_scale_with_the_frequency_unit(p in any_params(), s in 0.2f64..5.0) {
        let Some(r) = solve(&p) else { return Ok(()) };
        let scaled = SystemParams::new(p.omega0 * s, p.mass, p.gamma0 * s, p.omega_d * s, p.temperature * s).unwrap();
        let rs = solve_characteristic(&scaled).unwrap();
        let q = QuadratureSpec::default();
        for t in time_grid(&r).into_iter().step_by(3) {
            let a = ledger(&r, t, &q).unwrap();
            let b = ledger(&rs, t / s, &q).unwrap();
            let tol = 1e-7 * a.w_on.max(a.e_stored);
            prop_assert!((b.de_battery - s * a.de_battery).abs() < s * tol, "{a:?} {b:?}");
            prop_assert!((b.w_total - s * a.w_total).abs() < s * tol, "{a:?} {b:?}");
            prop_assert!((b.ergotropy - s * a.ergotropy).abs() < s * tol, "{a:?} {b:?}");
        }
    }

    #[test]
    fn energies_do_not_depend_on_the_mass(p in any_params(), m in 0.1f64..10.0) {
        let Some(r) = solve(&p) else { return Ok(()) };
        let heavy = solve_characteristic(&SystemParams { mass: m, ..p }).unwrap();
        let q = QuadratureSpec::default();
        for t in time_grid(&r).into_iter().step_by(4) {
            let a = ledger(&r, t, &q).unwrap();
            let b = ledger(&heavy, t, &q).unwrap();
            let tol = 1e-7 * a.w_on.max(a.e_stored);
            prop_assert!((a.de_battery - b.de_battery).abs() < tol && (a.w_total - b.w_total).abs() < tol);
        }
    }

    #[test]
    fn digamma_recurrence_and_reflection(re in -20.0f64..30.0, im in -30.0f64..30.0) {
        let z = Complex64::new(re, im);
        prop_assume!((z - z.re.round()).norm() > 1e-3 || z.re > 0.5);
        let a = digamma(z + 1.0).unwrap();
        let b = digamma(z).unwrap() + 1.0 / z;
        prop_assert!((a - b).norm() < 1e-12 * a.norm().max(1.0), "{a} vs {b}");
        // psi(1 - z) - psi(z) = pi cot(pi z)
        let pz = std::f64::consts::PI * z;
        let cot = pz.cos() / pz.sin();
        prop_assume!(cot.norm() < 1e6);
        let lhs = digamma(1.0 - z).unwrap() - digamma(z).unwrap();
        prop_assert!((lhs - std::f64::consts::PI * cot).norm() < 1e-10 * lhs.norm().max(1.0));
    }

    #[test]
    fn bath_reconstructs_the_spectral_density(p in any_params(), delta in 0.01f64..0.5) {
        // pi c_k^2 / (2 m_k w_k Delta) = J(w_k)
        let bath = build_bath(&p, delta, 50).unwrap();
        for k in 0..50 {
            let (c, w, mk) = (bath.couplings[k], bath.mode_freqs[k], bath.mode_masses[k]);
            let j = std::f64::consts::PI * c * c / (2.0 * mk * w * delta);
            prop_assert!((j - spectral_density(w, &p)).abs() < 1e-12 * j.max(1e-300));
        }
    }
}

#[test]
fn regimes_on_both_sides_are_sampled() {
    // corners of the sampled box lie in both regimes
    let ud = solve_characteristic(&SystemParams::new(0.1, 1.0, 500.0, 0.05, 0.0).unwrap()).unwrap();
    let od = solve_characteristic(&SystemParams::new(1.0, 1.0, 10.0, 60.0, 0.0).unwrap()).unwrap();
    assert_eq!(ud.regime.kind, RegimeKind::Underdamped);
    assert_eq!(od.regime.kind, RegimeKind::Overdamped);
}

#[test]
fn ergotropy_never_exceeds_the_stored_energy_for_the_charging_example() {
    let r = solve_characteristic(&SystemParams::natural(300.0, 2.0, 0.1).unwrap()).unwrap();
    let q = QuadratureSpec::default();
    let l = ledger(&r, std::f64::consts::FRAC_PI_2 / r.params.big_omega(), &q).unwrap();
    assert!(l.ergotropy <= l.de_battery);
    assert_relative_eq!(l.e_stored, l.de_battery + 0.5, max_relative = 1e-14);
}
