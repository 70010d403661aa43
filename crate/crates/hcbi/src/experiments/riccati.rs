//! Deterministic checks of the Riccati transform: the one-type closed
//! form, first moments recovered by differentiating at `z = 0`, and
//! stability under step halving.

use hawkes_cbi::cbi::{laplace_transform, moment_odes, CBIParams};

use super::num;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Cell, Table};
use crate::report::Report;

const CLOSED_FORM_TOL: f64 = 1e-8;
const MOMENT_TOL: f64 = 1e-5;
const HALVING_TOL: f64 = 1e-9;
/// Difference step for `−∂_z log L` at 0; Richardson removes the O(ε) term.
const EPS: f64 = 1e-3;

/// `E e^{−z Z_t}` for one type, with `β = b/σ`, `γ = c/σ²`.
pub fn one_type_laplace(p: &CBIParams, z: f64, t: f64) -> f64 {
    let (a, b, s, c, x) = (p.a[0], p.b[0][0], p.sigma[0], p.c[0], p.z0[0]);
    let beta = b / s;
    let gamma = c / (s * s);
    let (v, iv) = if z == 0.0 {
        (0.0, 0.0)
    } else if beta.abs() < 1e-12 {
        (z / (1.0 + gamma * z * t), (gamma * z * t).ln_1p() / gamma)
    } else {
        let decay = -(-beta * t).exp_m1();
        (
            beta * z * (-beta * t).exp() / (beta + gamma * z * decay),
            (gamma * z * decay / beta).ln_1p() / gamma,
        )
    };
    (-x * v - (a / s) * iv).exp()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let nm = &cfg.numerics;
    let (dt, times, zs) = (nm.dt(), nm.times(), nm.laplace_z());
    let horizon = *times.last().expect("validated");
    let mut rep = Report::default();
    let mut lap = Table::new([
        "case",
        "t",
        "z",
        "riccati",
        "riccati_half_dt",
        "closed_form",
    ]);
    let mut mom = Table::new([
        "case",
        "t",
        "type",
        "moment_ode",
        "riccati_derivative",
        "rel_error",
    ]);
    for (k, p) in cfg
        .cbi
        .as_ref()
        .expect("validated section")
        .iter()
        .enumerate()
    {
        let (mut cf_err, mut half_err): (f64, f64) = (0.0, 0.0);
        for &t in times {
            for &s in zs {
                let z = vec![s; p.d];
                let l = laplace_transform(p, &p.z0, &z, t, dt)?;
                let l2 = laplace_transform(p, &p.z0, &z, t, 0.5 * dt)?;
                half_err = half_err.max((l - l2).abs());
                let cf = if p.d == 1 {
                    one_type_laplace(p, s, t)
                } else {
                    f64::NAN
                };
                if p.d == 1 {
                    cf_err = cf_err.max((l - cf).abs());
                }
                lap.push(vec![
                    Cell::from(k),
                    num(t),
                    num(s),
                    num(l),
                    num(l2),
                    num(cf),
                ]);
            }
        }
        if p.d == 1 {
            rep.check(
                format!("case {k}: closed form"),
                cf_err < CLOSED_FORM_TOL,
                format!(
                    "max |Riccati − closed form| = {cf_err:.2e} (tolerance {CLOSED_FORM_TOL:e})"
                ),
            );
        }
        rep.check(
            format!("case {k}: step halving"),
            half_err < HALVING_TOL,
            format!("max change {half_err:.2e} when dt is halved (tolerance {HALVING_TOL:e})"),
        );

        let m = moment_odes(p, horizon, dt)?;
        let mut worst: f64 = 0.0;
        for &t in times {
            for i in 0..p.d {
                let g = |e: f64| -> Result<f64> {
                    let mut z = vec![0.0; p.d];
                    z[i] = e;
                    Ok(-laplace_transform(p, &p.z0, &z, t, dt)?.ln() / e)
                };
                let d = 2.0 * g(0.5 * EPS)? - g(EPS)?;
                let exact = m.mean_at(i, t)?;
                let rel = (d - exact).abs() / exact.abs().max(1e-300);
                worst = worst.max(rel);
                mom.push(vec![
                    Cell::from(k),
                    num(t),
                    Cell::from(i),
                    num(exact),
                    num(d),
                    num(rel),
                ]);
            }
        }
        rep.check(
            format!("case {k}: first moments from the transform"),
            worst < MOMENT_TOL,
            format!(
                "max relative gap to the moment equations {worst:.2e} (tolerance {MOMENT_TOL:e})"
            ),
        );
    }
    rep.table("riccati.csv", lap);
    rep.table("moments.csv", mom);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_limits() {
        let p = CBIParams::one_type(0.0, 0.0, 1.0, 1.0, 1.0);
        // Feller diffusion without drift: v = z/(1 + z t)
        assert!((one_type_laplace(&p, 1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(one_type_laplace(&p, 0.0, 1.0), 1.0);
        let q = CBIParams::one_type(0.0, 1e-13, 1.0, 1.0, 1.0);
        assert!((one_type_laplace(&q, 1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-10);
    }
}
