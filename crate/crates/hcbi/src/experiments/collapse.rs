//! Age and residual-life structure of a CMJ population at rescaled time
//! `t`: the two normalized distributions, pooled over paths, should merge
//! as n grows, and both should approach the excess life-length law.

use hawkes_cbi::cmj::{
    excess_life_distribution, population_structure, simulate_cmj_with, CmjOptions,
};
use hawkes_cbi::harness::{
    distribution_distance, ks_one_sample, monte_carlo, ConvergenceReport, Metric, DEFAULT_SLACK,
};

use super::{num, sub_seed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

const COLLAPSE_TOL: f64 = 0.05;
const EXCESS_TOL: f64 = 0.07;
const CDF_POINTS: usize = 200;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let sched = cfg.cmj_schedule.as_ref().expect("validated section");
    let nm = &cfg.numerics;
    let (ns, t) = (nm.ns(), nm.horizon());
    let opts = CmjOptions {
        ancestors: sched.ancestors,
        ..CmjOptions::default()
    };
    let mut rep = Report::default();
    let mut table = Table::new([
        "n",
        "type",
        "atoms",
        "ks_age_residual",
        "ks_age_excess",
        "ks_residual_excess",
    ]);
    let mut cdf_table = Table::new(["y", "age_cdf", "residual_cdf", "excess_cdf"]);
    for i in 0..sched.d {
        let excess = excess_life_distribution(&sched.life[i]);
        let mut metric = Vec::new();
        let mut finals = (f64::NAN, f64::NAN);
        for (k, &n) in ns.iter().enumerate() {
            let (model, x0) = sched.build(n)?;
            let per_path = monte_carlo(nm.paths(), sub_seed(nm.seed(), k), |_, rng| {
                let log = simulate_cmj_with(&model, &x0, n * t, rng, &opts)?;
                let m = population_structure(&log, i, n * t)?;
                Ok(m.atoms
                    .into_iter()
                    .map(|(x, _)| (x[0], x[1]))
                    .collect::<Vec<_>>())
            })?;
            let (age, resid): (Vec<f64>, Vec<f64>) = per_path.into_iter().flatten().unzip();
            if age.is_empty() {
                rep.check(
                    format!("type {i}, n = {n}: population alive at t"),
                    false,
                    "no individual alive at t",
                );
                return Ok(rep);
            }
            let wa: Vec<(f64, f64)> = age.iter().map(|x| (*x, 1.0)).collect();
            let wr: Vec<(f64, f64)> = resid.iter().map(|x| (*x, 1.0)).collect();
            let d = distribution_distance(&wa, &wr, Metric::Ks)?;
            let ka = ks_one_sample(&age, |y| excess.cdf(y));
            let kr = ks_one_sample(&resid, |y| excess.cdf(y));
            table.push(vec![
                num(n),
                Cell::from(i),
                Cell::from(age.len()),
                num(d),
                num(ka),
                num(kr),
            ]);
            metric.push(d);
            finals = (ka, kr);
            if k + 1 == ns.len() && i == 0 {
                let mut a = age.clone();
                let mut r = resid.clone();
                a.sort_by(f64::total_cmp);
                r.sort_by(f64::total_cmp);
                let ymax = a[a.len() - 1].max(r[r.len() - 1]);
                let ecdf =
                    |v: &[f64], y: f64| v.partition_point(|x| *x <= y) as f64 / v.len() as f64;
                for j in 0..=CDF_POINTS {
                    let y = ymax * j as f64 / CDF_POINTS as f64;
                    cdf_table.push(vec![
                        num(y),
                        num(ecdf(&a, y)),
                        num(ecdf(&r, y)),
                        num(excess.cdf(y)),
                    ]);
                }
            }
        }
        let conv =
            ConvergenceReport::new(ns.to_vec(), metric.clone(), COLLAPSE_TOL, DEFAULT_SLACK)?;
        let listed: Vec<String> = ns
            .iter()
            .zip(&metric)
            .map(|(n, m)| format!("n={n}: {m:.4}"))
            .collect();
        rep.check(
            format!("type {i}: age vs residual-life KS decays"),
            conv.pass,
            format!(
                "{}; monotone within slack {DEFAULT_SLACK}: {}, final below {COLLAPSE_TOL}: {}",
                listed.join(", "),
                conv.monotone,
                conv.final_below
            ),
        );
        let n_last = ns[ns.len() - 1];
        rep.check(
            format!("type {i}: age law near the excess life law at n = {n_last}"),
            finals.0 < EXCESS_TOL,
            format!("KS {:.4} (tolerance {EXCESS_TOL})", finals.0),
        );
        rep.check(
            format!("type {i}: residual-life law near the excess life law at n = {n_last}"),
            finals.1 < EXCESS_TOL,
            format!("KS {:.4} (tolerance {EXCESS_TOL})", finals.1),
        );
    }
    rep.note(format!(
        "observation time t = {t} (rescaled); distributions pooled over {} paths",
        nm.paths()
    ));
    rep.table("collapse.csv", table);
    rep.table("cdfs.csv", cdf_table);
    rep.plot_all(
        "normalized age and residual-life CDFs at the final n",
        "cdfs.csv",
        false,
    );
    Ok(rep)
}
