//! Rescaled Hawkes intensities or CMJ total birth rates along an n ladder,
//! against the limit diffusion: first and second moments by z-score at the
//! final n, and the empirical Laplace transform by its worst gap at every n.

use hawkes_cbi::cbi::{laplace_transform, moment_odes, CBIParams};
use hawkes_cbi::cmj::{simulate_cmj_with, total_birth_rate_path, CmjOptions};
use hawkes_cbi::harness::{
    compare_moments, monte_carlo, ConvergenceReport, EnsembleSummary, DEFAULT_SLACK, PASS_RATE,
    Z_LIMIT,
};
use hawkes_cbi::hawkes::{rescaled_density_path, SimOptions};

use super::{num, sub_seed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

const LAPLACE_GAP_TOL: f64 = 0.02;

/// All points of `{zs}^d`.
fn z_grid(zs: &[f64], d: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                zs.iter().map(move |z| {
                    let mut q = p.clone();
                    q.push(*z);
                    q
                })
            })
            .collect();
    }
    out
}

fn fmt_z(z: &[f64]) -> String {
    z.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

struct Cells {
    labels: Vec<String>,
    /// (label, oracle) for the moment cells
    moments: Vec<(String, f64)>,
    /// (label, oracle) for the Laplace cells
    laplace: Vec<(String, f64)>,
}

fn cells(limit: &CBIParams, times: &[f64], zs: &[Vec<f64>], dt: f64) -> Result<Cells> {
    let m = moment_odes(limit, *times.last().expect("validated"), dt)?;
    let mut labels = Vec::new();
    let mut moments = Vec::new();
    let mut laplace = Vec::new();
    for &t in times {
        for i in 0..limit.d {
            let l = format!("mean t={t} i={i}");
            moments.push((l.clone(), m.mean_at(i, t)?));
            labels.push(l);
            let l = format!("second t={t} i={i}");
            moments.push((l.clone(), m.second_at(i, t)?));
            labels.push(l);
        }
        for z in zs {
            let l = format!("laplace t={t} z={}", fmt_z(z));
            laplace.push((l.clone(), laplace_transform(limit, &limit.z0, z, t, dt)?));
            labels.push(l);
        }
    }
    Ok(Cells {
        labels,
        moments,
        laplace,
    })
}

/// Sample vector of one path whose rescaled state is `z[g][i]`, in the
/// order of [`cells`].
fn features(path: &[Vec<f64>], zs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for row in path {
        for x in row {
            out.push(*x);
            out.push(x * x);
        }
        for z in zs {
            let dot: f64 = z.iter().zip(row).map(|(a, b)| a * b).sum();
            out.push((-dot).exp());
        }
    }
    out
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let nm = &cfg.numerics;
    let (ns, times, dt, paths) = (nm.ns(), nm.times(), nm.dt(), nm.paths());
    let (limit, what) = match (&cfg.schedule, &cfg.cmj_schedule) {
        (Some(s), _) => (s.limit_params(), "Hawkes intensity"),
        (_, Some(s)) => (s.limit_params()?, "CMJ birth rate"),
        _ => unreachable!("validated"),
    };
    let zs = z_grid(nm.laplace_z(), limit.d);
    let c = cells(&limit, times, &zs, dt)?;
    let mut rep = Report::default();
    rep.note(format!(
        "limit: a={:?} b={:?} sigma={:?} c={:?} z0={:?}",
        limit.a, limit.b, limit.sigma, limit.c, limit.z0
    ));
    let mut gaps = Vec::new();
    let mut moment_table = Table::new(["n", "cell", "empirical", "std_error", "oracle", "z_score"]);
    let mut laplace_table = Table::new(["n", "cell", "empirical", "std_error", "oracle", "gap"]);
    let mut last = None;
    for (k, &n) in ns.iter().enumerate() {
        let seed = sub_seed(nm.seed(), k);
        let samples = if let Some(s) = &cfg.schedule {
            let model = s.build(n)?;
            let opts = SimOptions::default();
            monte_carlo(paths, seed, |_, rng| {
                Ok(features(
                    &rescaled_density_path(&model, n, times, rng, &opts)?,
                    &zs,
                ))
            })?
        } else {
            let s = cfg.cmj_schedule.as_ref().expect("validated");
            let (model, x0) = s.build(n)?;
            let opts = CmjOptions {
                ancestors: s.ancestors,
                ..CmjOptions::default()
            };
            let grid: Vec<f64> = times.iter().map(|t| n * t).collect();
            let horizon = n * times.last().expect("validated");
            monte_carlo(paths, seed, |_, rng| {
                let log = simulate_cmj_with(&model, &x0, horizon, rng, &opts)?;
                let b = total_birth_rate_path(&log, &grid)?;
                let scaled: Vec<Vec<f64>> = b
                    .iter()
                    .map(|r| r.iter().map(|x| x / n).collect())
                    .collect();
                Ok(features(&scaled, &zs))
            })?
        };
        let summary = EnsembleSummary::from_samples(n, &c.labels, &samples)?;
        let cmp = compare_moments(&summary, &c.moments)?;
        for cell in &cmp.cells {
            moment_table.push(vec![
                num(n),
                Cell::from(cell.label.as_str()),
                num(cell.empirical),
                num(cell.std_error),
                num(cell.oracle),
                num(cell.z),
            ]);
        }
        let mut gap: f64 = 0.0;
        for (label, oracle) in &c.laplace {
            let st = summary.get(label).expect("labelled");
            let g = (st.mean - oracle).abs();
            gap = gap.max(g);
            laplace_table.push(vec![
                num(n),
                Cell::from(label.as_str()),
                num(st.mean),
                num(st.std_error),
                num(*oracle),
                num(g),
            ]);
        }
        rep.note(format!(
            "n = {n}: moment pass rate {:.3}, Laplace gap {gap:.4}",
            cmp.pass_rate
        ));
        gaps.push(gap);
        last = Some(cmp);
    }
    let cmp = last.expect("at least three n");
    let worst = cmp.cells.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    rep.check(
        format!("{what} moments at n = {}", ns[ns.len() - 1]),
        cmp.pass,
        format!(
            "{:.1}% of {} cells within |z| <= {Z_LIMIT} (required {:.0}%), max |z| = {worst:.2}",
            100.0 * cmp.pass_rate,
            cmp.cells.len(),
            100.0 * PASS_RATE
        ),
    );
    let conv = ConvergenceReport::new(ns.to_vec(), gaps.clone(), LAPLACE_GAP_TOL, DEFAULT_SLACK)?;
    let listed: Vec<String> = ns
        .iter()
        .zip(&gaps)
        .map(|(n, g)| format!("n={n}: {g:.4}"))
        .collect();
    rep.check(
        format!("{what} Laplace gap decays"),
        conv.pass,
        format!(
            "{}; monotone within slack {DEFAULT_SLACK}: {}, final below {LAPLACE_GAP_TOL}: {}",
            listed.join(", "),
            conv.monotone,
            conv.final_below
        ),
    );
    let mut conv_table = Table::new(["n", "laplace_gap"]);
    for (n, g) in ns.iter().zip(&gaps) {
        conv_table.push(vec![num(*n), num(*g)]);
    }
    rep.table("moments.csv", moment_table);
    rep.table("laplace.csv", laplace_table);
    rep.table("convergence.csv", conv_table);
    rep.plot_all(
        "worst Laplace-transform gap against n",
        "convergence.csv",
        true,
    );
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_all_combinations() {
        let g = z_grid(&[0.25, 0.5, 1.0], 2);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.25, 0.5]);
        assert_eq!(z_grid(&[1.0], 1), vec![vec![1.0]]);
    }
}
