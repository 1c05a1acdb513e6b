use dpcd_core::data::SparseRegression;
use dpcd_core::privacy::PrivacyBudget;
use dpcd_core::rng::seeded;
use dpcd_core::solvers::{
    coordinate_thresholds, dp_cd, dp_cd_observed, dp_sgd, reference_solve, Calibration, DpCdPlan,
    DpSgdPlan,
};
use dpcd_core::{Dataset, Loss, Problem, Problem32, Regularizer, Schedule, SolverConfig};
use rand::Rng;
use rand_distr::StandardNormal;

fn regression(n: usize, p: usize, seed: u64) -> Dataset {
    let g = SparseRegression {
        label_noise_std: 0.5,
        seed,
        ..SparseRegression::new(n, p, p / 2)
    };
    g.generate().unwrap().0
}

fn rel(f: f64, f_star: f64) -> f64 {
    (f - f_star) / f_star.abs()
}

/// Passes needed by noiseless DP-CD to reach `tol` relative error.
fn passes_to_tolerance(pb: &Problem, tol: f64, max_passes: usize) -> Option<usize> {
    let f_star = reference_solve(pb, 1e-15).unwrap().objective;
    let cfg = SolverConfig::dp_cd(
        1.0,
        f64::INFINITY,
        max_passes,
        pb.p(),
        Schedule::StronglyConvex,
    );
    let plan = DpCdPlan::noiseless(pb, &cfg, &pb.smoothness_constants()).unwrap();
    let sol = dp_cd(pb, &cfg, &plan, &mut seeded(5)).unwrap();
    assert_eq!(sol.trace.len(), max_passes + 1);
    sol.trace.iter().position(|&f| rel(f, f_star) <= tol)
}

#[test]
fn noiseless_dp_cd_solves_a_quadratic() {
    let pb = Problem::new(
        regression(50, 20, 1),
        Loss::SquaredError,
        Regularizer::L2Squared,
        0.1,
    )
    .unwrap();
    let k = passes_to_tolerance(&pb, 1e-8, 10_000).expect("1e-8 within 1e4 p iterations");
    assert!(k <= 10_000);
}

#[test]
fn noiseless_dp_cd_solves_a_lasso() {
    let pb = Problem::new(
        regression(50, 20, 2),
        Loss::SquaredError,
        Regularizer::L1,
        0.2,
    )
    .unwrap();
    let k = passes_to_tolerance(&pb, 1e-8, 10_000).expect("1e-8 within 1e4 p iterations");
    assert!(k <= 10_000);
}

#[test]
fn noiseless_inner_iterates_never_increase_the_objective() {
    for (loss, reg) in [
        (Loss::SquaredError, Regularizer::L1),
        (Loss::SquaredError, Regularizer::L2Squared),
        (Loss::Logistic, Regularizer::L1),
    ] {
        let mut d = regression(40, 8, 3);
        if loss == Loss::Logistic {
            let y: Vec<f64> = d
                .labels()
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            d = Dataset::from_columns(
                d.n(),
                d.p(),
                (0..d.p()).flat_map(|j| d.column(j).to_vec()).collect(),
                y,
            )
            .unwrap();
        }
        let pb = Problem::new(d, loss, reg, 0.05).unwrap();
        let cfg = SolverConfig::dp_cd(1.0, f64::INFINITY, 20, pb.p(), Schedule::Convex);
        let plan = DpCdPlan::noiseless(&pb, &cfg, &pb.smoothness_constants()).unwrap();
        let mut prev = pb.evaluate_state(&pb.zero_state());
        let mut steps = 0;
        dp_cd_observed(&pb, &cfg, &plan, &mut seeded(9), |_, st| {
            let f = pb.evaluate_state(st);
            assert!(f <= prev + 1e-12 * prev.abs(), "{loss:?}: {prev} -> {f}");
            prev = f;
            steps += 1;
        })
        .unwrap();
        assert_eq!(steps, 20 * pb.p());
    }
}

#[test]
fn clipped_gradients_have_bounded_sensitivity() {
    let mut rng = seeded(17);
    let (n, p) = (30, 5);
    for pair in 0..100 {
        let d = regression(n, p, 100 + pair);
        let pb = Problem::new(d.clone(), Loss::SquaredError, Regularizer::L1, 0.1).unwrap();
        let i = rng.random_range(0..n);
        let row: Vec<f64> = (0..p)
            .map(|_| 5.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let label = 10.0 * rng.sample::<f64, _>(StandardNormal);
        let neighbor = Problem::new(
            d.replace_row(i, &row, label).unwrap(),
            Loss::SquaredError,
            Regularizer::L1,
            0.1,
        )
        .unwrap();
        let m = pb.smoothness_constants();
        let c = rng.random_range(0.1..20.0);
        let thresholds = coordinate_thresholds(&m, c);
        let w: Vec<f64> = (0..p)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let (a, b) = (pb.state(w.clone()).unwrap(), neighbor.state(w).unwrap());
        for (j, &cj) in thresholds.iter().enumerate() {
            let diff =
                (pb.clipped_grad_coord(&a, j, cj) - neighbor.clipped_grad_coord(&b, j, cj)).abs();
            assert!(
                diff <= 2.0 * cj / n as f64 + 1e-12,
                "pair {pair}, coordinate {j}"
            );
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let pb = Problem::new(
        regression(60, 10, 4),
        Loss::SquaredError,
        Regularizer::L1,
        0.1,
    )
    .unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-4).unwrap();
    let cfg = SolverConfig::dp_cd(0.5, 3.0, 3, pb.p(), Schedule::Convex);
    let plan = DpCdPlan::private(
        &pb,
        &cfg,
        &pb.smoothness_constants(),
        budget,
        Calibration::Numeric,
    )
    .unwrap();
    let a = dp_cd(&pb, &cfg, &plan, &mut seeded(8)).unwrap();
    let b = dp_cd(&pb, &cfg, &plan, &mut seeded(8)).unwrap();
    let c = dp_cd(&pb, &cfg, &plan, &mut seeded(9)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.weights, c.weights);

    let cfg = SolverConfig::dp_sgd(0.1, 3.0, 2, 1);
    let plan = DpSgdPlan::private(&pb, &cfg, budget, None).unwrap();
    let a = dp_sgd(&pb, &cfg, &plan, &mut seeded(8)).unwrap();
    let b = dp_sgd(&pb, &cfg, &plan, &mut seeded(8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn private_runs_carry_their_audit() {
    let pb = Problem::new(
        regression(60, 10, 5),
        Loss::SquaredError,
        Regularizer::L1,
        0.1,
    )
    .unwrap();
    let budget = PrivacyBudget::new(0.5, 1e-5).unwrap();
    let cfg = SolverConfig::dp_cd(0.5, 3.0, 2, pb.p(), Schedule::Convex);
    let m = pb.smoothness_constants();
    for cal in [Calibration::Numeric, Calibration::ClosedForm] {
        let plan = DpCdPlan::private(&pb, &cfg, &m, budget, cal).unwrap();
        let sol = dp_cd(&pb, &cfg, &plan, &mut seeded(1)).unwrap();
        assert!(sol.audit.is_private());
        assert!(sol.audit.within_budget());
        assert!(sol.audit.achieved_epsilon <= 0.5 * (1.0 + 1e-12));
        assert_eq!(sol.audit.releases, 2 * pb.p() as u64);
        assert_eq!(sol.trace.len(), 3);
    }
}

#[test]
fn noiseless_dp_sgd_approaches_the_optimum() {
    let pb = Problem::new(
        regression(80, 6, 6),
        Loss::SquaredError,
        Regularizer::L1,
        0.1,
    )
    .unwrap();
    let f_star = reference_solve(&pb, 1e-14).unwrap().objective;
    let cfg = SolverConfig::dp_sgd(0.5, f64::INFINITY, 200, 80);
    let plan = DpSgdPlan::noiseless(&pb, &cfg, None).unwrap();
    let sol = dp_sgd(&pb, &cfg, &plan, &mut seeded(2)).unwrap();
    assert!(
        rel(sol.objective, f_star) < 1e-2,
        "{}",
        rel(sol.objective, f_star)
    );
}

#[test]
fn single_precision_runs() {
    let d = regression(50, 8, 7);
    let x: Vec<f32> = (0..d.p())
        .flat_map(|j| d.column(j).iter().map(|&v| v as f32).collect::<Vec<_>>())
        .collect();
    let y: Vec<f32> = d.labels().iter().map(|&v| v as f32).collect();
    let d32 = dpcd_core::Dataset32::from_columns(d.n(), d.p(), x, y).unwrap();
    let pb = Problem32::new(d32, Loss::SquaredError, Regularizer::L1, 0.1).unwrap();
    let cfg = SolverConfig::dp_cd(1.0, f64::INFINITY, 50, pb.p(), Schedule::StronglyConvex);
    let m = pb.smoothness_constants();
    let plan = DpCdPlan::noiseless(&pb, &cfg, &m).unwrap();
    let sol = dp_cd(&pb, &cfg, &plan, &mut seeded(3)).unwrap();
    let f_star = reference_solve(&pb, 1e-7).unwrap().objective;
    assert!(sol.weights.iter().all(|w| w.is_finite()));
    assert!(rel(sol.objective, f_star) < 1e-4);
}
