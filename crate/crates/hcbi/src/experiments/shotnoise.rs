//! Rescaled shot noise of the n-th model of a Hawkes schedule against the
//! limit: `S_I(nt)/n → b_I·Z(t)` once the pre-time-0 impact `ψ̂` is added
//! back, and `S_C(nt)/n² → b_C·∫_0^t Z`.

use hawkes_cbi::cbi::moment_odes;
use hawkes_cbi::harness::{monte_carlo, Stat, Z_LIMIT};
use hawkes_cbi::hawkes::{simulate_observed, SimOptions};
use hawkes_cbi::shotnoise::{ancestor_impact_path, ShotNoiseObserver};

use super::num;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::Table;
use crate::report::Report;

const CUMULATIVE_REL_TOL: f64 = 0.05;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let sched = cfg.schedule.as_ref().expect("validated section");
    let sn = cfg.shot_noise.as_ref().expect("validated section");
    let nm = &cfg.numerics;
    let n = nm.n();
    let model = sched.build(n)?;
    let limit = sched.limit_params();
    let ti = nm.times().to_vec();
    let tc = sn.cumulative_times.clone();
    // one observation grid for both responses
    let mut grid: Vec<f64> = ti.iter().chain(&tc).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let idx = |t: f64| grid.iter().position(|g| *g == t).expect("on grid");
    let horizon = grid.last().copied().expect("nonempty") * n;
    let obs: Vec<f64> = grid.iter().map(|t| n * t).collect();
    let opts = SimOptions::default();
    let samples = monte_carlo(nm.paths(), nm.seed(), |_, rng| {
        let mut o = (
            ShotNoiseObserver::new(vec![sn.instantaneous.clone()])?,
            ShotNoiseObserver::new(vec![sn.cumulative.clone()])?,
        );
        simulate_observed(&model, horizon, &obs, rng, &opts, &mut o)?;
        let inst: Vec<f64> = o.0.values.iter().map(|r| r[0] / n).collect();
        let cum: Vec<f64> = o.1.values.iter().map(|r| r[0] / (n * n)).collect();
        Ok((inst, cum))
    })?;

    let moments = moment_odes(&limit, grid.last().copied().unwrap(), nm.dt())?;
    let mark_mean = sched.mark_dists[0].mean_amplitude(0);
    let b_i = sn.instantaneous.limit_coefficient(&sched.mark_dists[0], 0);
    let b_c = sn.cumulative.limit_coefficient(&sched.mark_dists[0], 0);
    let psi = ancestor_impact_path(sched.z0[0], &sn.instantaneous, mark_mean, n, &ti)?;
    let mut rep = Report::default();
    rep.note(format!(
        "n = {n}, b_I = {b_i}, b_C = {b_c}, Z(0) = {}",
        sched.z0[0]
    ));

    let mut t_inst = Table::new([
        "t",
        "mean_uncorrected",
        "ancestor_impact",
        "mean_corrected",
        "std_error",
        "limit",
        "z_corrected",
        "z_uncorrected",
    ]);
    let mut worst: f64 = 0.0;
    let mut z_first = f64::NAN;
    for (k, &t) in ti.iter().enumerate() {
        let g = idx(t);
        let st = Stat::from_samples("", samples.iter().map(|s| s.0[g]));
        let target = b_i * moments.mean_at(0, t)?;
        let zc = (st.mean + psi[k] - target) / st.std_error;
        let zu = (st.mean - target) / st.std_error;
        if k == 0 {
            z_first = zu;
        }
        worst = worst.max(zc.abs());
        t_inst.push(vec![
            num(t),
            num(st.mean),
            num(psi[k]),
            num(st.mean + psi[k]),
            num(st.std_error),
            num(target),
            num(zc),
            num(zu),
        ]);
    }
    rep.check(
        "instantaneous, with ancestor correction",
        worst <= Z_LIMIT,
        format!(
            "max |z| = {worst:.2} over {} times (limit {Z_LIMIT})",
            ti.len()
        ),
    );
    if sched.z0[0] > 0.0 {
        rep.check(
            "instantaneous, without correction, fails at the first time",
            z_first.abs() > Z_LIMIT,
            format!(
                "z = {z_first:.2} at t = {} (must exceed {Z_LIMIT} in size since Z(0) > 0)",
                ti[0]
            ),
        );
    }

    let mut t_cum = Table::new(["t", "mean", "std_error", "limit", "rel_gap"]);
    let mut worst_rel: f64 = 0.0;
    for &t in &tc {
        let st = Stat::from_samples("", samples.iter().map(|s| s.1[idx(t)]));
        let target = b_c * moments.mean_integral_at(0, t)?;
        let rel = (st.mean - target).abs() / target.abs();
        worst_rel = worst_rel.max(rel);
        t_cum.push(vec![
            num(t),
            num(st.mean),
            num(st.std_error),
            num(target),
            num(rel),
        ]);
    }
    rep.check(
        "cumulative, relative gap",
        worst_rel < CUMULATIVE_REL_TOL,
        format!("max relative gap {worst_rel:.4} (tolerance {CUMULATIVE_REL_TOL})"),
    );
    rep.table("instantaneous.csv", t_inst);
    rep.table("cumulative.csv", t_cum);
    rep.plot_all(
        "rescaled instantaneous shot noise",
        "instantaneous.csv",
        false,
    );
    rep.plot_all("rescaled cumulative shot noise", "cumulative.csv", false);
    Ok(rep)
}
