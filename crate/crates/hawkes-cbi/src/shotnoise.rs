//! Shot-noise functionals `S_i(t) = Σ_{τ_{i,k} ≤ t} ζ_i(t − τ_{i,k}, ξ_{i,k})`.
//!
//! An instantaneous response is an integrable impact rate; a cumulative one
//! is the running integral of such a rate and increases to a finite total.
//! Rescaled by `n` (instantaneous) or `n²` (cumulative), both converge to
//! functionals of the limit diffusion.

use serde::{Deserialize, Serialize};

use crate::accum::{Accumulator, LagFn};
use crate::error::{invalid, Error, Result};
use crate::hawkes::{EventLog, MarkedEvent, Observer};
use crate::kernels::{Mark, MarkDistribution, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Instantaneous,
    Cumulative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseFamily {
    Exponential {
        rate: f64,
    },
    Erlang {
        k: u32,
        rate: f64,
    },
    Table {
        dt: f64,
        values: Vec<f64>,
    },
    /// `1_{t ≥ 0}`: a unit jump, cumulative only.
    Indicator,
}

impl ResponseFamily {
    fn shape(&self) -> Option<Shape> {
        match self {
            ResponseFamily::Exponential { rate } => Some(Shape::Exponential { rate: *rate }),
            ResponseFamily::Erlang { k, rate } => Some(Shape::Erlang { k: *k, rate: *rate }),
            ResponseFamily::Table { dt, values } => Some(Shape::Table {
                dt: *dt,
                values: values.clone(),
            }),
            ResponseFamily::Indicator => None,
        }
    }
}

fn one() -> f64 {
    1.0
}

/// `ζ(t, u) = scale · amplitude_c(u) · profile(t)`, where `profile` is the
/// family's shape (instantaneous) or its running integral (cumulative) and
/// `c` is `mark_component`, defaulting to the event's own type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseFunction {
    pub kind: ResponseKind,
    pub family: ResponseFamily,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mark_component: Option<usize>,
}

impl ResponseFunction {
    pub fn new(kind: ResponseKind, family: ResponseFamily) -> Self {
        ResponseFunction {
            kind,
            family,
            scale: 1.0,
            mark_component: None,
        }
    }

    pub fn indicator() -> Self {
        Self::new(ResponseKind::Cumulative, ResponseFamily::Indicator)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return invalid("response scale must be finite and nonnegative");
        }
        match self.family.shape() {
            Some(s) => s.validate(),
            None if self.kind == ResponseKind::Cumulative => Ok(()),
            None => {
                invalid("the indicator response is not integrable; use it as a cumulative response")
            }
        }
    }

    fn component(&self, source: usize) -> usize {
        self.mark_component.unwrap_or(source)
    }

    /// Mass of the profile: `∫ shape` (instantaneous) or `profile(∞)` (cumulative).
    pub fn profile_mass(&self) -> f64 {
        self.family.shape().map_or(1.0, |s| s.mass())
    }

    /// `profile(t)` for a unit amplitude and unit scale.
    pub fn profile(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match (self.kind, self.family.shape()) {
            (ResponseKind::Instantaneous, Some(s)) => s.value(t),
            (ResponseKind::Cumulative, Some(s)) => s.cumulative(t),
            (_, None) => 1.0,
        }
    }

    /// `ζ(t, u)` for an event of type `source`.
    pub fn eval(&self, t: f64, u: &Mark, source: usize) -> f64 {
        self.scale * u.amp(self.component(source)) * self.profile(t)
    }

    /// `b = scale · E[amplitude] · mass`, the limit coefficient
    /// (`b_I` for instantaneous, `b_C` for cumulative responses).
    pub fn limit_coefficient(&self, marks: &MarkDistribution, source: usize) -> f64 {
        self.scale * marks.mean_amplitude(self.component(source)) * self.profile_mass()
    }
}

/// `S_i(t)` by direct summation over type-`i` events for each grid time.
pub fn shot_noise_path(
    log: &EventLog,
    responses: &[ResponseFunction],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let d = log.model.d;
    if responses.len() != d {
        return invalid(format!(
            "need {d} response functions, got {}",
            responses.len()
        ));
    }
    for r in responses {
        r.validate()?;
    }
    Ok(grid
        .iter()
        .map(|&t| {
            let mut s = vec![0.0; d];
            for e in log.events.iter().take_while(|e| e.time <= t) {
                if e.source < d {
                    s[e.source] += responses[e.source].eval(t - e.time, &e.mark, e.source);
                }
            }
            s
        })
        .collect())
}

/// Streaming evaluation of `S_H` at grid times during a simulation.
pub struct ShotNoiseObserver {
    responses: Vec<ResponseFunction>,
    /// running sums of the instantaneous shape or of the shape tail
    accs: Vec<Option<Accumulator>>,
    weights: Vec<f64>,
    /// `values[g][i] = S_i(t_g)`
    pub values: Vec<Vec<f64>>,
}

impl ShotNoiseObserver {
    pub fn new(responses: Vec<ResponseFunction>) -> Result<Self> {
        for r in &responses {
            r.validate()?;
        }
        let accs = responses
            .iter()
            .map(|r| {
                let f: Option<LagFn> = match (r.kind, r.family.shape()) {
                    (ResponseKind::Instantaneous, Some(s)) => Some(s.density_fn(1.0)),
                    (ResponseKind::Cumulative, Some(s)) => Some(s.tail_fn(1.0)),
                    (_, None) => None,
                };
                f.map(|f| Accumulator::new(f, 0.0))
            })
            .collect();
        let d = responses.len();
        Ok(ShotNoiseObserver {
            responses,
            accs,
            weights: vec![0.0; d],
            values: Vec::new(),
        })
    }
}

impl Observer for ShotNoiseObserver {
    fn on_event(&mut self, e: &MarkedEvent) {
        let i = e.source;
        if i >= self.responses.len() {
            return;
        }
        let w = e.mark.amp(self.responses[i].component(i));
        self.weights[i] += w;
        if let Some(acc) = &mut self.accs[i] {
            acc.advance_to(e.time);
            acc.add(w);
        }
    }

    fn on_grid(&mut self, _g: usize, t: f64, _intensity: &[f64]) {
        let row = self
            .responses
            .iter()
            .zip(self.accs.iter_mut())
            .zip(&self.weights)
            .map(|((r, acc), &w)| {
                let core = match (r.kind, acc) {
                    (ResponseKind::Instantaneous, Some(acc)) => {
                        acc.advance_to(t);
                        acc.value()
                    }
                    (ResponseKind::Cumulative, Some(acc)) => {
                        acc.advance_to(t);
                        (r.profile_mass() * w - acc.value()).max(0.0)
                    }
                    (_, None) => w,
                };
                r.scale * core
            })
            .collect();
        self.values.push(row);
    }
}

/// `ψ̂(t) = Z0 · ∫_{nt}^∞ ζ̄(s) ds` on the rescaled `grid`, where
/// `ζ̄ = scale · mark_mean · shape` is the mean instantaneous response.
pub fn ancestor_impact_path(
    z0: f64,
    zeta: &ResponseFunction,
    mark_mean: f64,
    n: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    zeta.validate()?;
    if zeta.kind != ResponseKind::Instantaneous {
        return invalid("the ancestor correction applies to instantaneous responses only");
    }
    if !(z0 >= 0.0) || !(n >= 1.0) {
        return invalid("ancestor impact needs z0 >= 0 and n >= 1");
    }
    let shape = zeta
        .family
        .shape()
        .expect("validated instantaneous response has a shape");
    Ok(grid
        .iter()
        .map(|&t| z0 * zeta.scale * mark_mean * shape.tail(n * t))
        .collect())
}

fn check_path(path: &[Vec<f64>]) -> Result<()> {
    if let Some(first) = path.first() {
        if path.iter().any(|r| r.len() != first.len()) {
            return Err(Error::GridMismatch("ragged shot-noise path".into()));
        }
    }
    Ok(())
}

/// `S(nt)/n` for a path already sampled at original times `n·t_g`.
pub fn rescale_instantaneous(path: &[Vec<f64>], n: f64) -> Result<Vec<Vec<f64>>> {
    check_path(path)?;
    Ok(path
        .iter()
        .map(|r| r.iter().map(|x| x / n).collect())
        .collect())
}

/// `S(nt)/n²` for a path already sampled at original times `n·t_g`.
pub fn rescale_cumulative(path: &[Vec<f64>], n: f64) -> Result<Vec<Vec<f64>>> {
    check_path(path)?;
    let n2 = n * n;
    Ok(path
        .iter()
        .map(|r| r.iter().map(|x| x / n2).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes::{simulate_hawkes, simulate_observed, EventCollector, SimOptions};
    use crate::kernels::{AncestorSpec, HawkesModel, KernelSpec};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> HawkesModel {
        HawkesModel {
            d: 1,
            kernels: vec![vec![
                KernelSpec::new(Shape::Exponential { rate: 1.0 }, 0.5),
                KernelSpec::new(Shape::Exponential { rate: 2.0 }, 0.5),
            ]],
            mark_dists: vec![
                MarkDistribution::Exponential { mean: vec![1.0] },
                MarkDistribution::unit(1),
            ],
            immigration_rate: 1.0,
            ancestors: AncestorSpec::None,
        }
    }

    fn log_with(times: &[f64]) -> EventLog {
        EventLog {
            horizon: 10.0,
            events: times
                .iter()
                .map(|&t| MarkedEvent {
                    source: 0,
                    time: t,
                    mark: Mark::unit(1),
                })
                .collect(),
            model: model(),
            seed: None,
        }
    }

    #[test]
    fn indicator_counts_events() {
        let mut m = model();
        m.mark_dists[0] = MarkDistribution::unit(1);
        let log = simulate_hawkes(&m, 20.0, 5).unwrap();
        let grid: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let s = shot_noise_path(&log, &[ResponseFunction::indicator()], &grid).unwrap();
        for (g, t) in grid.iter().enumerate() {
            assert_eq!(s[g][0], log.count(0, *t) as f64);
        }
    }

    #[test]
    fn empty_log_and_single_event() {
        let empty = log_with(&[]);
        let cum = ResponseFunction::new(
            ResponseKind::Cumulative,
            ResponseFamily::Exponential { rate: 1.0 },
        );
        assert_eq!(
            shot_noise_path(&empty, &[cum.clone()], &[0.0, 1.0]).unwrap(),
            vec![vec![0.0]; 2]
        );
        let one = log_with(&[1.0]);
        let s = shot_noise_path(&one, &[cum], &[2.0]).unwrap();
        assert!((s[0][0] - 0.63212).abs() < 1e-5);
    }

    #[test]
    fn ancestor_tail_values() {
        let z = ResponseFunction {
            kind: ResponseKind::Instantaneous,
            family: ResponseFamily::Exponential { rate: 1.0 },
            scale: 0.8,
            mark_component: None,
        };
        assert_eq!(
            ancestor_impact_path(0.0, &z, 1.0, 1.0, &[0.0, 1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let p = ancestor_impact_path(1.0, &z, 1.0, 1.0, &[0.0, 1.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        assert!((p[1] - 0.29430).abs() < 1e-5);
        assert!(
            ancestor_impact_path(1.0, &ResponseFunction::indicator(), 1.0, 1.0, &[0.0]).is_err()
        );
    }

    #[test]
    fn rescalings() {
        let p = vec![vec![4.0, 2.0], vec![8.0, 0.0]];
        assert_eq!(rescale_instantaneous(&p, 1.0).unwrap(), p);
        assert_eq!(rescale_cumulative(&p, 1.0).unwrap(), p);
        assert_eq!(rescale_instantaneous(&p, 2.0).unwrap()[0], vec![2.0, 1.0]);
        assert_eq!(rescale_cumulative(&p, 2.0).unwrap()[1], vec![2.0, 0.0]);
        let zero = vec![vec![0.0]; 3];
        assert_eq!(rescale_instantaneous(&zero, 7.0).unwrap(), zero);
        // unit-rate counting: S(nt) = nt, so S(nt)/n² = t/n
        let n = 50.0;
        let counting: Vec<Vec<f64>> = [0.5, 1.0, 2.0].iter().map(|t| vec![n * t]).collect();
        let r = rescale_cumulative(&counting, n).unwrap();
        assert!((r[2][0] - 2.0 / n).abs() < 1e-15);
    }

    #[test]
    fn streaming_matches_direct_and_is_linear() {
        let m = model();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let responses = [
            ResponseFunction::new(
                ResponseKind::Instantaneous,
                ResponseFamily::Erlang { k: 2, rate: 1.5 },
            ),
            ResponseFunction::new(
                ResponseKind::Cumulative,
                ResponseFamily::Exponential { rate: 0.7 },
            ),
            ResponseFunction::new(
                ResponseKind::Cumulative,
                ResponseFamily::Table {
                    dt: 0.3,
                    values: vec![1.0, 0.2, 0.5],
                },
            ),
            ResponseFunction::indicator(),
        ];
        let mut log = EventLog {
            horizon: 20.0,
            events: Vec::new(),
            model: m.clone(),
            seed: None,
        };
        for r in &responses {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut obs = (
                EventCollector::default(),
                ShotNoiseObserver::new(vec![r.clone()]).unwrap(),
            );
            simulate_observed(&m, 20.0, &grid, &mut rng, &SimOptions::default(), &mut obs).unwrap();
            log.events = obs.0.events;
            let obs = obs.1;
            let direct = shot_noise_path(&log, std::slice::from_ref(r), &grid).unwrap();
            for (a, b) in direct.iter().zip(&obs.values) {
                assert!((a[0] - b[0]).abs() < 1e-9 * (1.0 + a[0].abs()), "{r:?}");
            }
            if r.kind == ResponseKind::Cumulative {
                assert!(direct.windows(2).all(|w| w[1][0] >= w[0][0]));
            }
        }
        // additivity in ζ: doubling the scale doubles the path
        let mut twice = responses[0].clone();
        twice.scale = 2.0;
        let a = shot_noise_path(&log, &responses[..1], &grid).unwrap();
        let b = shot_noise_path(&log, &[twice], &grid).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x[0] - y[0]).abs() < 1e-12 * (1.0 + y[0]));
        }
    }
}
