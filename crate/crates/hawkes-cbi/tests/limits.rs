//! Cross-module properties: schedules, simulators and the limit oracles
//! agree with one another and with closed forms.

use hawkes_cbi::cbi::{moment_odes, simulate_cbi, CBIParams};
use hawkes_cbi::cmj::{
    excess_life_distribution, size_biased_distribution, AgeProfile, CmjSchedule, LifeLaw,
};
use hawkes_cbi::harness::{monte_carlo, path_rng, ConvergenceReport, ScalingSchedule, Stat};
use hawkes_cbi::hawkes::{compensator_residual, simulate_log, SimOptions};
use hawkes_cbi::kernels::{
    classify_criticality, mean_children_matrix, AncestorSpec, Criticality, HawkesModel, KernelSpec,
    MarkDistribution, Shape,
};
use hawkes_cbi::volterra::{rescaled_resolvent_error, resolvent_solve};
use hawkes_cbi::{ResolventGrid, ResolventGridF32};

fn subcritical(mass: f64) -> HawkesModel {
    HawkesModel {
        d: 1,
        kernels: vec![vec![
            KernelSpec::new(Shape::Exponential { rate: 1.0 }, mass),
            KernelSpec::new(Shape::Exponential { rate: 2.0 }, 1.0),
        ]],
        mark_dists: vec![MarkDistribution::unit(1), MarkDistribution::unit(1)],
        immigration_rate: 1.0,
        ancestors: AncestorSpec::None,
    }
}

#[test]
fn stationary_event_rate_matches_the_branching_mean() {
    // each immigrant has one direct child in mean, then a cluster of 1/(1 − m)
    let model = subcritical(0.5);
    let horizon = 400.0;
    let rates = monte_carlo(300, 17, |_, rng| {
        let log = simulate_log(&model, horizon, rng, &SimOptions::default())?;
        Ok(log.count(0, horizon) as f64 / horizon)
    })
    .unwrap();
    let st = Stat::from_samples("rate", rates);
    // transient deficit is O(1/horizon)
    assert!((st.mean - 2.0).abs() < 4.0 * st.std_error + 0.02, "{st:?}");
}

#[test]
fn compensator_residual_is_centred() {
    let model = subcritical(0.7);
    let grid = [10.0, 50.0];
    let res = monte_carlo(400, 3, |_, rng| {
        let log = simulate_log(&model, 50.0, rng, &SimOptions::default())?;
        compensator_residual(&log, &model, 0, &grid)
    })
    .unwrap();
    for k in 0..grid.len() {
        let st = Stat::from_samples("res", res.iter().map(|r| r[k]));
        assert!(st.mean.abs() < 4.0 * st.std_error, "t={}: {st:?}", grid[k]);
    }
}

#[test]
fn schedule_models_approach_criticality() {
    let s = ScalingSchedule::single_type(0.5, 1.0, 1.0);
    for n in [10.0, 100.0, 1000.0] {
        let m = mean_children_matrix(&s.build(n).unwrap());
        let r = classify_criticality(&m, 1e-9).unwrap();
        assert_eq!(r.class, Criticality::Subcritical);
        assert!((r.spectral_radius - (1.0 - 1.0 / n)).abs() < 1e-12);
    }
    let rep = ConvergenceReport::new(
        vec![10.0, 40.0, 160.0],
        [10.0, 40.0, 160.0]
            .iter()
            .map(|&n| rescaled_resolvent_error(&s, n, 0.0, 0).unwrap().l2_error)
            .collect(),
        0.05,
        1.0,
    )
    .unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn cbi_mean_path_follows_the_moment_equations() {
    let p = CBIParams::one_type(1.0, 2.0, 1.0, 0.5, 2.0);
    let m = moment_odes(&p, 1.0, 1e-3).unwrap();
    // E Z_t = z0 e^{−bt} + (a/b)(1 − e^{−bt}) for σ = 1
    let exact = 2.0 * (-2.0f64).exp() + 0.5 * (1.0 - (-2.0f64).exp());
    assert!((m.mean_at(0, 1.0).unwrap() - exact).abs() < 1e-4);

    let finals: Vec<f64> = (0..2000)
        .map(|k| {
            let path = simulate_cbi(&p, 1.0, 1e-3, &mut path_rng(8, k)).unwrap();
            path.values.last().unwrap()[0]
        })
        .collect();
    let st = Stat::from_samples("Z1", finals);
    assert!(
        (st.mean - exact).abs() < 4.0 * st.std_error,
        "{st:?} vs {exact}"
    );
}

#[test]
fn cmj_limit_of_a_critical_exponential_population() {
    let life = LifeLaw::Exponential { rate: 1.0 };
    let s = CmjSchedule::single_type(life.clone(), AgeProfile::Constant, 1.0, 1.0);
    let p = s.limit_params().unwrap();
    assert_eq!(p.d, 1);
    assert!(p.sigma[0] > 0.0 && p.c[0] > 0.0);
    assert!((p.b[0][0] - 1.0).abs() < 1e-9, "{p:?}");
    // exponential life: the residual law equals the life law
    assert_eq!(excess_life_distribution(&life), life.law());
    let sb = size_biased_distribution(&life);
    assert!((sb.mean() - life.second_moment() / life.mean()).abs() < 1e-12);
}

#[test]
fn single_precision_alias_agrees_with_double() {
    let dt = 1e-2;
    let phi: Vec<f64> = (0..=2000).map(|k| 0.5 * (-(k as f64) * dt).exp()).collect();
    let phi32: Vec<f32> = phi.iter().map(|x| *x as f32).collect();
    let r: ResolventGrid = resolvent_solve(&phi, dt, 20.0).unwrap();
    let r32: ResolventGridF32 = resolvent_solve(&phi32, dt as f32, 20.0).unwrap();
    let gap = r
        .values
        .iter()
        .zip(&r32.values)
        .map(|(a, b)| (a - f64::from(*b)).abs())
        .fold(0.0, f64::max);
    assert!(gap < 1e-4, "{gap}");
}
