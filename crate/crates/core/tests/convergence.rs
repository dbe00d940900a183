use std::sync::Arc;

use sorption_core::diagnostics::{extract_support, l2_qt_error};
use sorption_core::isotherm::{Freundlich, PorousMedium};
use sorption_core::mesh::{Grid1D, TimePartition};
use sorption_core::minimizer::SolverConfig;
use sorption_core::par::Execution;
use sorption_core::stepper::{run, ProblemSpec, Trajectory};
use sorption_core::study::ZkbStudy;

#[test]
fn zkb_errors_decrease_at_a_common_rate() {
    let result = ZkbStudy::default()
        .run(&SolverConfig::default(), Execution::Parallel)
        .unwrap();
    for fit in &result.rates {
        let e = result.errors_for(fit.m);
        assert!(e.windows(2).all(|w| w[1].1 < w[0].1), "m = {}: {e:?}", fit.m);
        assert!(fit.rate >= 0.5, "m = {}: rate {}", fit.m, fit.rate);
    }
    assert!((result.rates[0].rate - result.rates[1].rate).abs() <= 0.3);
    assert!(result.points.iter().all(|p| p.energy.holds() && p.positivity.holds()));
}

#[test]
fn numerical_support_tracks_the_exact_front() {
    let study = ZkbStudy::default();
    let z = study.profile(2.0).unwrap();
    let grid = Grid1D::with_spacing(-2.0, 2.0, 0.01).unwrap();
    let time = study.time_partition(0.01).unwrap();
    let spec = ProblemSpec::from_fn(
        Arc::new(PorousMedium::from_pme_exponent(2.0).unwrap()),
        grid,
        time,
        |x, u| u[0] = z.u(0.0, x).unwrap(),
    )
    .unwrap();
    let traj = run(&spec, &SolverConfig::default()).unwrap();
    let fin = traj.query(0.5).unwrap();
    let s = extract_support(fin, 0, 1e-10).unwrap();
    let r = z.support_radius(0.5).unwrap();
    assert!((s.right - r).abs() < 0.1 && (s.left + r).abs() < 0.1, "{s:?} vs {r}");
    let err = l2_qt_error(&traj, |t, x, o| {
        o[0] = z.u(t, x)?;
        Ok(())
    })
    .unwrap();
    assert!(err > 0.0);
}

fn final_l2(a: &Trajectory, b: &Trajectory) -> f64 {
    let (fa, fb) = (a.query(a.time().final_time()).unwrap(), b.query(b.time().final_time()).unwrap());
    let sq: Vec<f64> = fa.values().iter().zip(fb.values()).map(|(x, y)| (x - y).powi(2)).collect();
    let m = fa.components();
    let per_node: Vec<f64> = sq.chunks(m).map(|c| c.iter().sum()).collect();
    a.grid().trapezoid(&per_node).unwrap().sqrt()
}

#[test]
fn time_refinement_is_first_order() {
    let iso = Arc::new(Freundlich::new(0.5, 2).unwrap());
    let grid = Grid1D::new(-1.0, 1.0, 79).unwrap();
    let solve = |steps: usize| {
        let spec = ProblemSpec::from_fn(iso.clone(), grid, TimePartition::new(0.1, steps).unwrap(), |x, u| {
            let s = 1.0 - x * x;
            u[0] = s * s;
            u[1] = 0.5 * s * s * (1.0 + 0.5 * x);
        })
        .unwrap();
        run(&spec, &SolverConfig::default()).unwrap()
    };
    let runs: Vec<Trajectory> = [5, 10, 20, 40].iter().map(|&n| solve(n)).collect();
    let diffs: Vec<f64> = runs.windows(2).map(|w| final_l2(&w[0], &w[1])).collect();
    for w in diffs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.8, "orders from {diffs:?}");
    }
}
