//! Simulates the n-th model of a CMJ schedule and tests that the
//! reproduction-date counts minus the integrated birth rate have mean zero.

use hawkes_cbi::cmj::{birth_compensator_residual, simulate_cmj_with, CmjOptions};
use hawkes_cbi::harness::{monte_carlo, path_rng};

use super::hawkes::residual_check;
use super::num;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::Table;
use crate::report::Report;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let sched = cfg.cmj_schedule.as_ref().expect("validated section");
    let nm = &cfg.numerics;
    let n = nm.n();
    let (model, x0) = sched.build(n)?;
    let opts = CmjOptions {
        ancestors: sched.ancestors,
        ..CmjOptions::default()
    };
    // times and horizon are rescaled; the population runs on (0, nT]
    let horizon = n * nm.horizon();
    let grid: Vec<f64> = nm.times().iter().map(|t| n * t).collect();
    let samples = monte_carlo(nm.paths(), nm.seed(), |_, rng| {
        let log = simulate_cmj_with(&model, &x0, horizon, rng, &opts)?;
        birth_compensator_residual(&log, &grid)
    })?;
    let sources: Vec<String> = (0..model.d).map(|i| format!("type_{i}")).collect();
    let mut rep = Report::default();
    rep.note(format!(
        "n = {n}, ancestors {x0:?}, population simulated on [0, {horizon}]"
    ));
    let t = residual_check(
        &mut rep,
        "birth compensator residual",
        nm.times(),
        &sources,
        &samples,
    );
    rep.table("residuals.csv", t);

    let mut rng = path_rng(nm.seed(), 0);
    let log = simulate_cmj_with(&model, &x0, horizon, &mut rng, &opts)?;
    let mut counts = Table::new(["t", "alive", "individuals_so_far"]);
    let steps = 200;
    for k in 0..=steps {
        let t = horizon * k as f64 / steps as f64;
        let alive = log.individuals.iter().filter(|x| x.is_alive(t)).count();
        let born = log.individuals.iter().filter(|x| x.birth <= t).count();
        counts.push(vec![
            num(t / n),
            num(alive as f64 / n),
            num(born as f64 / n),
        ]);
    }
    rep.note(format!("path 0 has {} individuals", log.individuals.len()));
    rep.files.push(("population.csv".into(), log.to_csv()));
    rep.table("population_path.csv", counts);
    rep.plot_all(
        "alive and cumulative individuals / n, path 0",
        "population_path.csv",
        false,
    );
    Ok(rep)
}
