//! Running sums `Σ_k w_k f(t - τ_k)` over past events.
//!
//! Exponential-polynomial lag functions `Σ_m c_m s^m e^{-rs}` are tracked
//! through the moments `S_l = Σ_k w_k (t-τ_k)^l e^{-r(t-τ_k)}`, which advance
//! in closed form; grid-defined functions keep the events still inside the
//! support.

use std::collections::VecDeque;
use std::sync::Arc;

pub const MAX_ORDER: usize = 3;

#[derive(Clone, Debug)]
pub(crate) enum LagFn {
    ExpPoly {
        rate: f64,
        coef: [f64; MAX_ORDER],
        order: usize,
    },
    Grid {
        dt: f64,
        values: Arc<[f64]>,
        /// linear interpolation between nodes instead of left-closed steps
        linear: bool,
    },
}

impl LagFn {
    pub fn exp_poly(rate: f64, coef: &[f64]) -> Self {
        assert!(coef.len() <= MAX_ORDER && !coef.is_empty());
        let mut c = [0.0; MAX_ORDER];
        c[..coef.len()].copy_from_slice(coef);
        LagFn::ExpPoly {
            rate,
            coef: c,
            order: coef.len(),
        }
    }

    pub fn step(dt: f64, values: Vec<f64>) -> Self {
        LagFn::Grid {
            dt,
            values: values.into(),
            linear: false,
        }
    }

    pub fn linear(dt: f64, nodes: Vec<f64>) -> Self {
        LagFn::Grid {
            dt,
            values: nodes.into(),
            linear: true,
        }
    }

    #[cfg(test)]
    pub fn eval(&self, s: f64) -> f64 {
        if s < 0.0 {
            return 0.0;
        }
        match self {
            LagFn::ExpPoly { rate, coef, order } => {
                let mut p = 0.0;
                for m in (0..*order).rev() {
                    p = p * s + coef[m];
                }
                p * (-rate * s).exp()
            }
            LagFn::Grid { dt, values, linear } => grid_eval(*dt, values, *linear, s),
        }
    }

    /// Lag beyond which the function vanishes (infinite for exponentials).
    pub fn support(&self) -> f64 {
        match self {
            LagFn::ExpPoly { .. } => f64::INFINITY,
            LagFn::Grid { dt, values, linear } => {
                if *linear {
                    dt * (values.len().saturating_sub(1)) as f64
                } else {
                    dt * values.len() as f64
                }
            }
        }
    }

    /// True when `f(s + h) ≤ f(s)` for all `h ≥ 0`, so the current value bounds the future.
    pub fn is_nonincreasing(&self) -> bool {
        match self {
            LagFn::ExpPoly { order, .. } => *order == 1,
            LagFn::Grid { values, .. } => values.windows(2).all(|w| w[1] <= w[0]),
        }
    }
}

fn grid_eval(dt: f64, values: &[f64], linear: bool, s: f64) -> f64 {
    let x = s / dt;
    let idx = x.floor();
    if !(idx < values.len() as f64) {
        return 0.0;
    }
    let i = idx as usize;
    if linear {
        let next = values.get(i + 1).copied().unwrap_or(0.0);
        let frac = x - idx;
        values[i] * (1.0 - frac) + next * frac
    } else {
        values[i]
    }
}

const BINOM: [[f64; MAX_ORDER]; MAX_ORDER] = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 2.0, 1.0]];

#[derive(Clone, Debug)]
pub(crate) struct Accumulator {
    f: LagFn,
    t: f64,
    state: [f64; MAX_ORDER],
    hist: VecDeque<(f64, f64)>,
}

impl Accumulator {
    pub fn new(f: LagFn, t0: f64) -> Self {
        Accumulator {
            f,
            t: t0,
            state: [0.0; MAX_ORDER],
            hist: VecDeque::new(),
        }
    }

    /// Moves the clock forward; earlier times are ignored.
    pub fn advance_to(&mut self, t: f64) {
        let h = t - self.t;
        if h <= 0.0 {
            return;
        }
        self.t = t;
        match &self.f {
            LagFn::ExpPoly { rate, order, .. } => {
                let decay = (-rate * h).exp();
                let old = self.state;
                for l in 0..*order {
                    let mut acc = 0.0;
                    let mut hp = 1.0;
                    // (s+h)^l = Σ_j C(l,j) s^j h^{l-j}
                    for j in (0..=l).rev() {
                        acc += BINOM[l][j] * old[j] * hp;
                        hp *= h;
                    }
                    self.state[l] = acc * decay;
                }
            }
            LagFn::Grid { .. } => {
                let support = self.f.support();
                while let Some(&(tau, _)) = self.hist.front() {
                    if t - tau >= support {
                        self.hist.pop_front();
                    } else {
                        break;
                    }
                }
            }
        }
    }

    /// Registers an event of weight `w` at the current time.
    pub fn add(&mut self, w: f64) {
        if w == 0.0 {
            return;
        }
        match self.f {
            LagFn::ExpPoly { .. } => self.state[0] += w,
            LagFn::Grid { .. } => self.hist.push_back((self.t, w)),
        }
    }

    pub fn value(&self) -> f64 {
        match &self.f {
            LagFn::ExpPoly { coef, order, .. } => {
                (0..*order).map(|m| coef[m] * self.state[m]).sum()
            }
            LagFn::Grid { dt, values, linear } => self
                .hist
                .iter()
                .map(|&(tau, w)| w * grid_eval(*dt, values, *linear, self.t - tau))
                .sum(),
        }
    }

    /// Upper bound of the running sum on `[t, t + delta]` (no new events).
    pub fn bound(&self, delta: f64) -> f64 {
        match &self.f {
            LagFn::ExpPoly { coef, order, .. } => {
                if *order == 1 {
                    return coef[0] * self.state[0];
                }
                let mut b = 0.0;
                for m in 0..*order {
                    let mut acc = 0.0;
                    let mut hp = 1.0;
                    for j in (0..=m).rev() {
                        acc += BINOM[m][j] * self.state[j] * hp;
                        hp *= delta;
                    }
                    b += coef[m] * acc;
                }
                b
            }
            LagFn::Grid { dt, values, linear } => {
                let extra = usize::from(*linear);
                self.hist
                    .iter()
                    .map(|&(tau, w)| {
                        let lo = ((self.t - tau) / dt).floor() as usize;
                        let hi =
                            (((self.t - tau + delta) / dt).floor() as usize).saturating_add(extra);
                        let m = values
                            .iter()
                            .skip(lo)
                            .take(hi.saturating_sub(lo).saturating_add(1))
                            .copied()
                            .fold(0.0, f64::max);
                        w * m
                    })
                    .sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(f: &LagFn, events: &[(f64, f64)], t: f64) -> f64 {
        events
            .iter()
            .filter(|(tau, _)| *tau <= t)
            .map(|(tau, w)| w * f.eval(t - tau))
            .sum()
    }

    #[test]
    fn recursive_sum_matches_direct_sum() {
        let fs = [
            LagFn::exp_poly(1.3, &[0.7]),
            LagFn::exp_poly(2.0, &[0.0, 4.0]),
            LagFn::exp_poly(0.5, &[0.1, 0.2, 0.3]),
            LagFn::step(0.25, vec![1.0, 3.0, 0.5]),
            LagFn::linear(0.25, vec![2.0, 1.0, 0.5, 0.0]),
        ];
        let events = [(0.1, 1.0), (0.15, 0.5), (0.9, 2.0), (1.7, 1.0), (1.71, 0.3)];
        for f in &fs {
            let mut acc = Accumulator::new(f.clone(), 0.0);
            let mut ev = events.iter().peekable();
            for k in 0..=300 {
                let t = k as f64 * 0.01;
                while let Some(&&(tau, w)) = ev.peek() {
                    if tau <= t {
                        acc.advance_to(tau);
                        acc.add(w);
                        ev.next();
                    } else {
                        break;
                    }
                }
                acc.advance_to(t);
                let direct = brute(f, &events, t);
                assert!((acc.value() - direct).abs() < 1e-12, "{f:?} t={t}");
                // the window bound dominates the sum over [t, t + 0.2]
                let b = acc.bound(0.2);
                for s in 0..=20 {
                    let u = t + s as f64 * 0.01;
                    let future: f64 = events
                        .iter()
                        .filter(|(tau, _)| *tau <= t)
                        .map(|(tau, w)| w * f.eval(u - tau))
                        .sum();
                    assert!(future <= b + 1e-12, "{f:?} t={t} u={u}");
                }
            }
        }
    }
}
