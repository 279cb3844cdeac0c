//! Property tests for the structural facts the model guarantees.

use proptest::prelude::*;
use twin_isle::basins::{autarky_oracle, classify_point};
use twin_isle::equilibria::{eigen_2x2, jacobian_closed_form, jacobian_fd, Matrix2, SmoothPiece};
use twin_isle::integrator::{integrate, Direction, IntegratorConfig, StopCondition};
use twin_isle::linear_approx::{
    case_condition, case_condition_q_form, p_minus, ratio_tilde, ratio_tilde_derivatives,
    LinearSeparatrix, RegionCase,
};
use twin_isle::model::{export_fractions, field, single_location_rhs, VectorField};
use twin_isle::shocks::ShockClassifier;
use twin_isle::{EpidemicParams, PhasePoint, PriceCostSpec, Regime};

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn open_unit() -> impl Strategy<Value = f64> {
    0.02..0.98f64
}

fn sym(nu: f64, q: f64) -> EpidemicParams {
    EpidemicParams::symmetric_pair(nu, q).unwrap()
}

fn v(p: PhasePoint, params: &EpidemicParams, regime: &Regime) -> (f64, f64) {
    field(p, params, regime).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn globalized_field_is_mirror_symmetric(nu in open_unit(), q in open_unit(), a in unit(), b in unit()) {
        let params = sym(nu, q);
        let (va, vb) = v(PhasePoint::new(a, b), &params, &Regime::LinearGlobalized);
        let (wa, wb) = v(PhasePoint::new(b, a), &params, &Regime::LinearGlobalized);
        prop_assert!((wa - vb).abs() <= 1e-15 && (wb - va).abs() <= 1e-15);
    }

    #[test]
    fn pieces_meet_on_the_diagonal(nu in open_unit(), q in open_unit(), x in unit()) {
        let params = sym(nu, q);
        let p = PhasePoint::new(x, x);
        let d = v(p, &params, &Regime::PieceDiagonal);
        for piece in [Regime::PieceSub, Regime::PieceSuper] {
            let s = v(p, &params, &piece);
            prop_assert!((s.0 - d.0).abs() <= 1e-15 && (s.1 - d.1).abs() <= 1e-15);
        }
    }

    #[test]
    fn cubic_sign_pattern(nu in open_unit(), q in open_unit(), x in unit()) {
        let f = single_location_rhs(x, nu, q);
        if x == 0.0 || x == 1.0 || x == q {
            prop_assert_eq!(f, 0.0);
        } else if x < q {
            prop_assert!(f < 0.0);
        } else {
            prop_assert!(f > 0.0);
        }
    }

    #[test]
    fn exports_flow_one_way(a in unit(), b in unit()) {
        let (fa, fb) = export_fractions(PhasePoint::new(a, b), &PriceCostSpec::linear_uniform());
        prop_assert!(fa == 0.0 || fb == 0.0);
    }

    #[test]
    fn field_points_inward_on_the_boundary(nu in open_unit(), q in open_unit(), s in unit()) {
        let params = sym(nu, q);
        for regime in [Regime::LinearGlobalized, Regime::Autarky] {
            prop_assert!(v(PhasePoint::new(0.0, s), &params, &regime).0 >= 0.0);
            prop_assert!(v(PhasePoint::new(1.0, s), &params, &regime).0 <= 0.0);
            prop_assert!(v(PhasePoint::new(s, 0.0), &params, &regime).1 >= 0.0);
            prop_assert!(v(PhasePoint::new(s, 1.0), &params, &regime).1 <= 0.0);
        }
    }

    #[test]
    fn closed_form_jacobian_matches_finite_differences(
        nu in open_unit(), q in open_unit(), a in 0.05..0.95f64, b in 0.05..0.95f64
    ) {
        let params = sym(nu, q);
        for (piece, regime) in [
            (SmoothPiece::Sub, Regime::PieceSub),
            (SmoothPiece::Super, Regime::PieceSuper),
            (SmoothPiece::Autarky, Regime::Autarky),
        ] {
            let field = VectorField::new(params, regime).unwrap();
            let exact = jacobian_closed_form(PhasePoint::new(a, b), &params, piece);
            let fd = jacobian_fd(&field, PhasePoint::new(a, b), 1e-6);
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((exact[i][j] - fd[i][j]).abs() <= 1e-6, "{piece:?} {exact:?} {fd:?}");
                }
            }
        }
    }

    #[test]
    fn eigenpairs_have_small_residuals(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64) {
        let m: Matrix2 = [[a, b], [c, d]];
        if let Ok(e) = eigen_2x2(&m) {
            for (lambda, vec) in e.values.iter().zip(&e.vectors) {
                let r0 = m[0][0] * vec[0] + m[0][1] * vec[1] - lambda * vec[0];
                let r1 = m[1][0] * vec[0] + m[1][1] * vec[1] - lambda * vec[1];
                prop_assert!(r0.hypot(r1) <= 1e-10, "{m:?} {lambda} {vec:?}");
            }
        }
    }

    #[test]
    fn p_minus_sits_on_the_linearized_separatrix(nu in open_unit(), q in open_unit()) {
        let params = sym(nu, q);
        let p = p_minus(&params).unwrap();
        let line = LinearSeparatrix::new(&params).unwrap();
        prop_assert!((p.x_b - line.sub_at(p.x_a)).abs() <= 1e-14);
        let r = ratio_tilde(&params).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn ratio_derivatives_match_finite_differences(nu in 0.05..0.95f64, q in 0.05..0.95f64) {
        let params = sym(nu, q);
        let h = 1e-6;
        let near_boundary = |n: f64, x: f64| (n - x / (2.0 * (1.0 - x).powi(2))).abs() < 1e-3;
        prop_assume!(!near_boundary(nu, q) && !near_boundary(nu, q + h) && !near_boundary(nu, q - h));
        let (dq, dnu) = ratio_tilde_derivatives(&params).unwrap();
        let r = |n: f64, x: f64| ratio_tilde(&sym(n, x)).unwrap();
        let fd_q = (r(nu, q + h) - r(nu, q - h)) / (2.0 * h);
        let fd_nu = (r(nu + h, q) - r(nu - h, q)) / (2.0 * h);
        prop_assert!((dq - fd_q).abs() <= 1e-5, "{dq} vs {fd_q}");
        prop_assert!((dnu - fd_nu).abs() <= 1e-5, "{dnu} vs {fd_nu}");
    }

    #[test]
    fn oracle_agrees_with_integrated_autarky(nu in 0.1..0.9f64, q in 0.1..0.9f64, a in unit(), b in unit()) {
        prop_assume!((a - q).abs() > 1e-3 && (b - q).abs() > 1e-3);
        let params = sym(nu, q);
        let x0 = PhasePoint::new(a, b);
        let cfg = IntegratorConfig::default();
        prop_assert_eq!(
            classify_point(x0, &params, &Regime::Autarky, &cfg).unwrap(),
            autarky_oracle(x0, q, 1e-3).unwrap()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forward_trajectories_stay_in_the_square(nu in open_unit(), q in open_unit(), a in unit(), b in unit()) {
        let params = sym(nu, q);
        let cfg = IntegratorConfig { t_max: 200.0, ..IntegratorConfig::default() };
        for regime in [Regime::LinearGlobalized, Regime::Autarky] {
            let traj = integrate(PhasePoint::new(a, b), &params, &regime, &cfg, Direction::Forward, &StopCondition::time_budget()).unwrap();
            for (_, p) in &traj.samples {
                prop_assert!(p.x_a >= -1e-6 && p.x_a <= 1.0 + 1e-6 && p.x_b >= -1e-6 && p.x_b <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn half_planes_are_invariant(nu in open_unit(), q in open_unit(), a in unit(), b in unit()) {
        prop_assume!(a != b);
        let params = sym(nu, q);
        let cfg = IntegratorConfig { t_max: 200.0, ..IntegratorConfig::default() };
        let traj = integrate(PhasePoint::new(a, b), &params, &Regime::LinearGlobalized, &cfg, Direction::Forward, &StopCondition::time_budget()).unwrap();
        let sign = (a - b).signum();
        for (_, p) in &traj.samples {
            prop_assert!(sign * (p.x_a - p.x_b) >= -1e-9);
        }
    }

    #[test]
    fn diagonal_is_invariant(nu in open_unit(), q in open_unit(), x in unit()) {
        let params = sym(nu, q);
        let cfg = IntegratorConfig { t_max: 200.0, ..IntegratorConfig::default() };
        let traj = integrate(PhasePoint::new(x, x), &params, &Regime::LinearGlobalized, &cfg, Direction::Forward, &StopCondition::time_budget()).unwrap();
        for (_, p) in &traj.samples {
            prop_assert!((p.x_a - p.x_b).abs() <= 1e-9);
        }
    }

    #[test]
    fn tighter_tolerances_barely_move_endpoints(nu in open_unit(), q in open_unit(), a in unit(), b in unit()) {
        let params = sym(nu, q);
        let cfg = IntegratorConfig { t_max: 20.0, ..IntegratorConfig::default() };
        let run = |c: &IntegratorConfig| {
            integrate(PhasePoint::new(a, b), &params, &Regime::LinearGlobalized, c, Direction::Forward, &StopCondition::time_budget())
                .unwrap()
                .last()
                .1
        };
        let coarse = run(&cfg);
        let fine = run(&cfg.with_tolerances_scaled(0.5));
        prop_assert!(coarse.distance(fine) <= 1e-6, "{coarse:?} vs {fine:?}");
    }

    #[test]
    fn shock_categories_are_mirror_symmetric(a in unit(), b in unit()) {
        let classifier = ShockClassifier::new(&sym(0.7, 0.4), &IntegratorConfig::default()).unwrap();
        prop_assert_eq!(
            classifier.classify(PhasePoint::new(a, b)).category,
            classifier.classify(PhasePoint::new(b, a)).category
        );
    }
}

#[test]
fn case_forms_agree_on_a_fine_grid() {
    for i in 1..100 {
        for j in 1..100 {
            let (nu, q) = (i as f64 / 100.0, j as f64 / 100.0);
            let params = sym(nu, q);
            let threshold = q / (2.0 * (1.0 - q).powi(2));
            if (nu - threshold).abs() <= 1e-12 {
                continue;
            }
            let a = case_condition(&params).unwrap();
            let b = case_condition_q_form(&params).unwrap();
            assert_ne!(a, RegionCase::Boundary);
            assert_eq!(a, b, "nu={nu} q={q}");
        }
    }
}
