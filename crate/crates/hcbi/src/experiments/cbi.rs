//! Monte Carlo Laplace transforms of CBI diffusions against the Riccati
//! formula, on the grid `(s·1, t)` for `s` in `laplace_z` and `t` in `times`.

use hawkes_cbi::cbi::{laplace_transform, simulate_cbi_at};
use hawkes_cbi::harness::{monte_carlo, Stat, Z_LIMIT};

use super::{num, sub_seed};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let nm = &cfg.numerics;
    let (dt, paths, times, zs) = (nm.dt(), nm.paths(), nm.times(), nm.laplace_z());
    let mut rep = Report::default();
    let mut table = Table::new(["case", "t", "z", "mc", "std_error", "riccati", "z_score"]);
    for (k, p) in cfg
        .cbi
        .as_ref()
        .expect("validated section")
        .iter()
        .enumerate()
    {
        let samples = monte_carlo(paths, sub_seed(nm.seed(), k), |_, rng| {
            let z = simulate_cbi_at(p, times, dt, rng)?;
            let mut out = Vec::with_capacity(times.len() * zs.len());
            for row in &z {
                let total: f64 = row.iter().sum();
                out.extend(zs.iter().map(|s| (-s * total).exp()));
            }
            Ok(out)
        })?;
        let mut worst: f64 = 0.0;
        let mut col = 0;
        for &t in times {
            for &s in zs {
                let st = Stat::from_samples("", samples.iter().map(|v| v[col]));
                col += 1;
                let oracle = laplace_transform(p, &p.z0, &vec![s; p.d], t, dt)?;
                let z = if st.std_error > 0.0 {
                    (st.mean - oracle) / st.std_error
                } else if (st.mean - oracle).abs() < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(z.abs());
                table.push(vec![
                    Cell::from(k),
                    num(t),
                    num(s),
                    num(st.mean),
                    num(st.std_error),
                    num(oracle),
                    num(z),
                ]);
            }
        }
        rep.check(
            format!(
                "case {k} (d={}): Laplace transform within {Z_LIMIT} std errors",
                p.d
            ),
            worst <= Z_LIMIT,
            format!(
                "max |z| = {worst:.2} over {} (z, t) cells",
                times.len() * zs.len()
            ),
        );
    }
    rep.table("laplace.csv", table);
    rep.note(format!("Euler step {dt}, Riccati step {dt}"));
    Ok(rep)
}
