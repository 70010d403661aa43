//! Resolvent equations: mass identity, exponential closed form, step
//! halving, Neumann series, and the rescaled resolvent along an n ladder.

use hawkes_cbi::kernels::Shape;
use hawkes_cbi::volterra::{
    neumann_oracle, rescaled_resolvent_error_with, resolvent_solve, RescaledOptions,
};

use super::num;
use crate::config::{ExperimentConfig, ResolventCase};
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

const MASS_TOL: f64 = 0.01;
const CLOSED_FORM_TOL: f64 = 1e-3;
/// The scheme is first order, so halving the step should halve the error;
/// the ratio is allowed 1% below two.
const HALVING_RATIO: f64 = 1.98;
const NEUMANN_TERMS: usize = 30;
const NEUMANN_HORIZON: f64 = 10.0;
const NEUMANN_TOL: f64 = 1e-4;
const SUPPORT_EPS: f64 = 1e-13;
const MAX_ROWS: usize = 2000;

fn kernel_grid(c: &ResolventCase, dt: f64, horizon: f64) -> Vec<f64> {
    let support = c.shape.support_horizon(SUPPORT_EPS).min(horizon);
    let len = (support / dt).ceil() as usize + 1;
    (0..len)
        .map(|k| c.mass * c.shape.value(k as f64 * dt))
        .collect()
}

fn describe(s: &Shape) -> String {
    match s {
        Shape::Exponential { rate } => format!("exponential(rate {rate})"),
        Shape::Erlang { k, rate } => format!("erlang(k {k}, rate {rate})"),
        Shape::Table { dt, values } => format!("table({} cells of {dt})", values.len()),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let sec = cfg.resolvent.as_ref().expect("validated section");
    let dt = cfg.numerics.dt();
    let mut rep = Report::default();
    let mut summary = Table::new([
        "case",
        "kernel_mass",
        "dt",
        "horizon",
        "discrete_mass",
        "exact_mass",
        "mass_rel_error",
        "sup_error",
        "sup_error_half_dt",
        "halving_ratio",
        "neumann_gap",
    ]);
    for (k, c) in sec.cases.iter().enumerate() {
        let phi = kernel_grid(c, dt, c.horizon);
        let r = resolvent_solve(&phi, dt, c.horizon)?;
        let m = c.mass * c.shape.mass();
        let label = format!("case {k}: {} x {}", c.mass, describe(&c.shape));
        let (exact_mass, rel) = if m < 1.0 {
            let e = m / (1.0 - m);
            let rel = if e > 0.0 {
                (r.discrete_mass() - e).abs() / e
            } else {
                r.discrete_mass().abs()
            };
            rep.check(
                format!("{label}: mass identity"),
                rel < MASS_TOL,
                format!("discrete mass {:.6}, exact {e:.6}, relative error {rel:.2e} (tolerance {MASS_TOL})", r.discrete_mass()),
            );
            (e, rel)
        } else {
            rep.note(format!(
                "{label}: kernel mass {m} >= 1, mass identity not applicable"
            ));
            (f64::NAN, f64::NAN)
        };

        let mut curve = Table::new(["t", "R"]);
        let (mut sup, mut sup_half, mut ratio, mut gap) = (f64::NAN, f64::NAN, f64::NAN, f64::NAN);
        if c.closed_form {
            let Shape::Exponential { rate } = c.shape else {
                unreachable!("validated")
            };
            let (alpha, beta) = (c.mass, rate);
            let exact = |t: f64| alpha * beta * (-beta * (1.0 - alpha) * t).exp();
            curve = Table::new(["t", "R", "exact"]);
            sup = r.sup_norm_against(exact);
            let half = resolvent_solve(&kernel_grid(c, 0.5 * dt, c.horizon), 0.5 * dt, c.horizon)?;
            sup_half = half.sup_norm_against(exact);
            ratio = sup / sup_half;
            rep.check(
                format!("{label}: closed form"),
                sup < CLOSED_FORM_TOL,
                format!("sup error {sup:.3e} at dt={dt} (tolerance {CLOSED_FORM_TOL:e})"),
            );
            rep.check(
                format!("{label}: step halving"),
                ratio >= HALVING_RATIO,
                format!("sup error {sup_half:.3e} at dt={}, ratio {ratio:.4} (required >= {HALVING_RATIO})", 0.5 * dt),
            );
            let hn = NEUMANN_HORIZON.min(c.horizon);
            let phi_n: Vec<f64> = phi
                .iter()
                .take((hn / dt).round() as usize + 1)
                .copied()
                .collect();
            let direct = resolvent_solve(&phi_n, dt, hn)?;
            let series = neumann_oracle(&phi_n, NEUMANN_TERMS, dt, hn)?;
            gap = direct
                .values
                .iter()
                .zip(&series)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            rep.check(
                format!("{label}: Neumann series"),
                gap < NEUMANN_TOL,
                format!("{NEUMANN_TERMS}-term series on [0, {hn}] differs by {gap:.3e} (tolerance {NEUMANN_TOL:e})"),
            );
        }
        let stride = (r.values.len() / MAX_ROWS).max(1);
        for (j, (t, v)) in r.times().zip(&r.values).enumerate() {
            if j % stride != 0 && j + 1 != r.values.len() {
                continue;
            }
            let mut row = vec![num(t), num(*v)];
            if let Shape::Exponential { rate } = c.shape {
                if c.closed_form {
                    row.push(num(c.mass * rate * (-rate * (1.0 - c.mass) * t).exp()));
                }
            }
            curve.push(row);
        }
        let file = format!("resolvent_{k}.csv");
        rep.table(&file, curve);
        rep.plot_all(&label, &file, false);
        summary.push(vec![
            Cell::from(k),
            num(c.mass),
            num(dt),
            num(c.horizon),
            num(r.discrete_mass()),
            num(exact_mass),
            num(rel),
            num(sup),
            num(sup_half),
            num(ratio),
            num(gap),
        ]);
    }
    rep.table("resolvent_summary.csv", summary);

    if let Some(rs) = &sec.rescaled {
        let beta = rs.beta.unwrap_or_else(|| rs.schedule.beta());
        let opts = RescaledOptions {
            dt: rs.dt.unwrap_or(RescaledOptions::default().dt),
            ..RescaledOptions::default()
        };
        let mut t = Table::new(["n", "type", "l2_error", "sup_norm", "t_err"]);
        for i in 0..rs.schedule.d {
            let mut errs = Vec::new();
            for &n in &rs.ns {
                let e = rescaled_resolvent_error_with(&rs.schedule, n, beta, i, opts)?;
                t.push(vec![
                    num(n),
                    Cell::from(i),
                    num(e.l2_error),
                    num(e.sup_norm),
                    num(e.t_err),
                ]);
                errs.push(e.l2_error);
            }
            let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
            let listed: Vec<String> = rs
                .ns
                .iter()
                .zip(&errs)
                .map(|(n, e)| format!("n={n}: {e:.3e}"))
                .collect();
            rep.check(
                format!("rescaled resolvent, type {i}: strictly decreasing L2 error"),
                decreasing,
                format!("beta={beta}; {}", listed.join(", ")),
            );
        }
        rep.table("rescaled_resolvent.csv", t);
    }
    Ok(rep)
}
