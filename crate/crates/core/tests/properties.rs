use num_complex::Complex64;
use proptest::prelude::*;

use pt_coupler::eigen::{eigen_real, multiset_distance};
use pt_coupler::exact::{circular_mode, elliptic_mode_alpha1, ExactModeSpec};
use pt_coupler::io::{read_branch_csv_from, BranchRow};
use pt_coupler::model::{
    pt_apply, power, power_imbalance, residual_jacobian, rhs_dynamic, stationary_residual,
    stationary_residual_complex, CouplerParams, FieldState, Sign,
};
use pt_coupler::spectrum::btilde;
use pt_coupler::stability::{linearization_matrix, linearization_matrix_at, GAUGE_TOL};

fn params() -> impl Strategy<Value = CouplerParams> {
    (0.3..2.5f64, 0.0..3.0f64, 0..2u8).prop_map(|(k, g, a)| CouplerParams::new(k, g, a).unwrap())
}

fn state() -> impl Strategy<Value = FieldState> {
    prop::array::uniform8(-2.0..2.0f64).prop_map(|x| FieldState::from_real(&x))
}

fn sign() -> impl Strategy<Value = Sign> {
    prop_oneof![Just(Sign::Plus), Just(Sign::Minus)]
}

/// Exact circular (and for `alpha = 1` possibly elliptic) mode in the
/// unbroken phase.
fn exact_mode() -> impl Strategy<Value = pt_coupler::model::StationaryMode> {
    (0.5..2.0f64, 0.0..0.97f64, 0..2u8, sign(), 0.05..3.0f64, any::<bool>()).prop_map(|(k, gf, a, s, db, ell)| {
        let p = CouplerParams::new(k, gf * std::f64::consts::SQRT_2 * k, a).unwrap();
        let spec = ExactModeSpec::new(p, s, btilde(&p, s).unwrap() + db);
        if a == 1 && ell {
            if let Ok(m) = elliptic_mode_alpha1(&spec) {
                return m;
            }
        }
        circular_mode(&spec).unwrap()
    })
}

fn scale_tol(u: &FieldState) -> f64 {
    1e-12 * (1.0 + power(u)).powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn power_balance_law(p in params(), u in state()) {
        let f = rhs_dynamic(&p, 0.0, &u).unwrap();
        let du = 2.0 * f.dot(&u).re;
        prop_assert!((du - power_imbalance(&p, &u)).abs() <= scale_tol(&u));
    }

    #[test]
    fn dynamics_are_u1_equivariant(p in params(), u in state(), th in 0.0..std::f64::consts::TAU) {
        let ph = Complex64::from_polar(1.0, th);
        let lhs = rhs_dynamic(&p, 0.0, &u.scale(ph)).unwrap();
        let rhs = rhs_dynamic(&p, 0.0, &u).unwrap().scale(ph);
        prop_assert!((lhs - rhs).norm_inf() <= scale_tol(&u));
    }

    #[test]
    fn stationary_residual_is_u1_equivariant(p in params(), u in state(), b in -4.0..4.0f64, th in 0.0..6.3f64) {
        let ph = Complex64::from_polar(1.0, th);
        let lhs = stationary_residual(&p, b, &u.scale(ph));
        let rhs = stationary_residual(&p, b, &u).scale(ph);
        prop_assert!((lhs - rhs).norm_inf() <= scale_tol(&u));
    }

    #[test]
    fn dynamics_are_pt_covariant(p in params(), u in state()) {
        // u(z) solves => P conj(u(-z)) solves
        let f = rhs_dynamic(&p, 0.0, &u).unwrap();
        let g = rhs_dynamic(&p, 0.0, &pt_apply(&u)).unwrap();
        prop_assert!((g + pt_apply(&f)).norm_inf() <= scale_tol(&u));
    }

    #[test]
    fn stationary_set_is_pt_invariant(m in exact_mode()) {
        let r = stationary_residual(&m.params, m.b, &pt_apply(&m.w)).norm_inf();
        prop_assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn gauge_rotated_modes_stay_stationary(m in exact_mode(), th in 0.0..6.3f64) {
        let w = m.w.scale(Complex64::from_polar(1.0, th));
        prop_assert!(stationary_residual(&m.params, m.b, &w).norm_inf() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences(
        p in params(),
        u in state(),
        br in -4.0..4.0f64,
        bi in -1.0..1.0f64,
    ) {
        let b = Complex64::new(br, bi);
        let j = residual_jacobian(&p, b, &u);
        let x = u.to_real();
        let h = 1e-6;
        for c in 0..8 {
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let rp = stationary_residual_complex(&p, b, &FieldState::from_real(&xp)).to_real();
            let rm = stationary_residual_complex(&p, b, &FieldState::from_real(&xm)).to_real();
            for r in 0..8 {
                let fd = (rp[r] - rm[r]) / (2.0 * h);
                prop_assert!((fd - j[r][c]).abs() < 1e-6, "entry ({r},{c}): {fd} vs {}", j[r][c]);
            }
        }
    }

    #[test]
    fn real_linearization_has_conjugate_spectrum(m in exact_mode()) {
        let ev = eigen_real(&linearization_matrix(&m).unwrap()).unwrap();
        let conj: Vec<Complex64> = ev.iter().map(|l| l.conj()).collect();
        prop_assert!(multiset_distance(&ev, &conj).unwrap() < 1e-9);
    }

    #[test]
    fn arbitrary_real_state_has_conjugate_spectrum(p in params(), u in state(), b in -4.0..4.0f64) {
        let ev = eigen_real(&linearization_matrix_at(&p, Complex64::new(b, 0.0), &u)).unwrap();
        let conj: Vec<Complex64> = ev.iter().map(|l| l.conj()).collect();
        let scale = 1.0 + ev.iter().map(|l| l.norm()).fold(0.0, f64::max);
        prop_assert!(multiset_distance(&ev, &conj).unwrap() < 1e-9 * scale);
    }

    #[test]
    fn exact_modes_have_gauge_zero_mode(m in exact_mode()) {
        let ev = eigen_real(&linearization_matrix(&m).unwrap()).unwrap();
        prop_assert!(ev.iter().any(|l| l.norm() < GAUGE_TOL));
    }

    #[test]
    fn branch_rows_round_trip_through_csv(rows in prop::collection::vec(branch_row(), 0..20)) {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(pt_coupler::io::BRANCH_COLUMNS).unwrap();
            for r in &rows {
                w.write_record(r.record()).unwrap();
            }
            w.flush().unwrap();
        }
        let back = read_branch_csv_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for ((label, a), b) in back.iter().zip(&rows) {
            prop_assert!(label.is_empty());
            prop_assert!(same_bits(a, b), "{a:?} != {b:?}");
        }
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

fn branch_row() -> impl Strategy<Value = BranchRow> {
    (
        prop::array::uniform3(finite()),
        prop::array::uniform4(finite()),
        prop::array::uniform3(finite()),
        prop::option::of(finite()),
        prop::option::of(0..9usize),
        prop::option::of(any::<bool>()),
    )
        .prop_map(|(pbu, amplitudes, phase_diffs, max_re_lambda, n_unstable, stable)| BranchRow {
            param: pbu[0],
            b: pbu[1],
            u: pbu[2],
            amplitudes,
            phase_diffs,
            max_re_lambda,
            n_unstable,
            stable,
        })
}

fn same_bits(a: &BranchRow, b: &BranchRow) -> bool {
    let bits = |r: &BranchRow| {
        let mut v = vec![r.param, r.b, r.u];
        v.extend(r.amplitudes);
        v.extend(r.phase_diffs);
        v.extend(r.max_re_lambda);
        v.into_iter().map(f64::to_bits).collect::<Vec<_>>()
    };
    bits(a) == bits(b) && a.n_unstable == b.n_unstable && a.stable == b.stable
}
