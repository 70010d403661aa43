//! Simulates a marked Hawkes model and tests that the compensator
//! residuals `N_j(t) − ∫_0^t Λ_j` have mean zero at every grid time.

use hawkes_cbi::harness::{monte_carlo, path_rng, Stat};
use hawkes_cbi::hawkes::{
    simulate_observed, CompensatorObserver, EventCollector, EventLog, SimOptions,
};

use super::{bonferroni_critical, num};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

/// Family level of the simultaneous zero-mean test.
pub(crate) const RESIDUAL_ALPHA: f64 = 0.01;

/// Appends one row per `(t, source)` cell and the simultaneous test;
/// `samples[path][g][j]`.
pub(crate) fn residual_check(
    rep: &mut Report,
    what: &str,
    times: &[f64],
    sources: &[String],
    samples: &[Vec<Vec<f64>>],
) -> Table {
    let cells = times.len() * sources.len();
    let crit = bonferroni_critical(RESIDUAL_ALPHA, cells);
    let mut t = Table::new(["t", "source", "mean_residual", "std_error", "z_score"]);
    let mut worst: f64 = 0.0;
    for (g, &time) in times.iter().enumerate() {
        for (j, name) in sources.iter().enumerate() {
            let st = Stat::from_samples("", samples.iter().map(|p| p[g][j]));
            let z = if st.std_error > 0.0 {
                st.mean / st.std_error
            } else if st.mean.abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z.abs());
            t.push(vec![
                num(time),
                Cell::from(name.as_str()),
                num(st.mean),
                num(st.std_error),
                num(z),
            ]);
        }
    }
    rep.check(
        format!(
            "{what}: zero mean at {}% confidence",
            100.0 * (1.0 - RESIDUAL_ALPHA)
        ),
        worst <= crit,
        format!("max |z| = {worst:.2} over {cells} cells, Bonferroni critical value {crit:.3}"),
    );
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let model = cfg.hawkes.as_ref().expect("validated section");
    let nm = &cfg.numerics;
    let (horizon, times, seed) = (nm.horizon(), nm.times(), nm.seed());
    let opts = SimOptions::default();
    let samples = monte_carlo(nm.paths(), seed, |_, rng| {
        let mut obs = CompensatorObserver::new(model)?;
        simulate_observed(model, horizon, times, rng, &opts, &mut obs)?;
        Ok(obs.residual)
    })?;
    let mut sources: Vec<String> = (0..model.d).map(|i| format!("type_{i}")).collect();
    sources.push("immigrant".into());
    let mut rep = Report::default();
    let t = residual_check(&mut rep, "compensator residual", times, &sources, &samples);
    rep.table("residuals.csv", t);

    // Path 0 again, keeping its events.
    let mut rng = path_rng(seed, 0);
    let mut obs = EventCollector::default();
    simulate_observed(model, horizon, times, &mut rng, &opts, &mut obs)?;
    let log = EventLog {
        horizon,
        events: obs.events,
        model: model.clone(),
        seed: None,
    };
    rep.note(format!(
        "path 0 has {} events on (0, {horizon}]",
        log.events.len()
    ));
    let mut counts = Table::new(["t", "cumulative_events"]);
    for (m, e) in log.events.iter().enumerate() {
        counts.push(vec![num(e.time), Cell::from(m + 1)]);
    }
    rep.files.push(("events.csv".into(), log.to_csv()));
    rep.table("event_counts.csv", counts);
    rep.plot_all("cumulative event count, path 0", "event_counts.csv", false);
    Ok(rep)
}
