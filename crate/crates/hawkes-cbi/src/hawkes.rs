//! Simulation and evaluation of multivariate marked Hawkes processes.
//!
//! Type-`i` events arrive with intensity
//!
//! ```text
//! Λ_i(t) = μ_i(t) + Σ_{j ∈ H ∪ {I}} Σ_{τ_{j,k} ≤ t} φ_ij(t − τ_{j,k}, ξ_{j,k})
//! ```
//!
//! where the immigrant source `I` (index `d`) is an independent Poisson
//! stream. The simulator thins a dominating rate built from running
//! per-kernel sums: when every kernel and ancestor term is nonincreasing the
//! current intensity dominates the future (this covers the exponential,
//! Markovian case); otherwise a bound over a short window is used and
//! refreshed when the window expires.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::accum::{Accumulator, LagFn};
use crate::error::{invalid, Error, Result};
use crate::kernels::{AncestorFunction, HawkesModel, Mark, Shape};

pub const DEFAULT_EVENT_CAP: usize = 100_000_000;

/// One event: type (or `d` for immigrants), time and mark.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkedEvent {
    pub source: usize,
    pub time: f64,
    pub mark: Mark,
}

/// All events of one simulated path on `(0, T]`, in time order.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    pub horizon: f64,
    pub events: Vec<MarkedEvent>,
    pub model: HawkesModel,
    /// Seed the path was generated from, when it came from [`simulate_hawkes`].
    pub seed: Option<u64>,
}

impl EventLog {
    /// `N_i(t)`, the number of source-`i` events in `(0, t]`.
    pub fn count(&self, i: usize, t: f64) -> usize {
        self.events
            .iter()
            .take_while(|e| e.time <= t)
            .filter(|e| e.source == i)
            .count()
    }

    /// CSV rows `source,time,amplitude_0,...`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("source,time");
        for i in 0..self.model.d {
            s.push_str(&format!(",amplitude_{i}"));
        }
        s.push('\n');
        for e in &self.events {
            s.push_str(&format!("{},{:.16e}", e.source, e.time));
            for i in 0..self.model.d {
                s.push_str(&format!(",{:.16e}", e.mark.amp(i)));
            }
            s.push('\n');
        }
        s
    }
}

/// Simulation controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub event_cap: usize,
    /// Refresh window for the dominating rate when kernels are not monotone;
    /// `None` picks half the shortest kernel time scale.
    pub dom_window: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            event_cap: DEFAULT_EVENT_CAP,
            dom_window: None,
        }
    }
}

/// Receives events and grid observations from the simulator.
///
/// For each observation time `t_g`, every event with `τ ≤ t_g` has been
/// delivered before `on_grid(g, ..)` is called.
pub trait Observer {
    fn on_event(&mut self, _event: &MarkedEvent) {}
    fn on_grid(&mut self, _g: usize, _t: f64, _intensity: &[f64]) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_event(&mut self, event: &MarkedEvent) {
        self.0.on_event(event);
        self.1.on_event(event);
    }
    fn on_grid(&mut self, g: usize, t: f64, intensity: &[f64]) {
        self.0.on_grid(g, t, intensity);
        self.1.on_grid(g, t, intensity);
    }
}

/// Collects events into a vector.
#[derive(Default, Debug)]
pub struct EventCollector {
    pub events: Vec<MarkedEvent>,
}

impl Observer for EventCollector {
    fn on_event(&mut self, event: &MarkedEvent) {
        self.events.push(event.clone());
    }
}

/// Records the intensity vector and the per-source counts at grid times.
#[derive(Clone, Debug, Default)]
pub struct GridRecorder {
    pub times: Vec<f64>,
    pub intensity: Vec<Vec<f64>>,
    /// counts[g][j], `j` ranging over sources including immigrants.
    pub counts: Vec<Vec<usize>>,
    running: Vec<usize>,
}

impl GridRecorder {
    pub fn new(sources: usize) -> Self {
        GridRecorder {
            running: vec![0; sources],
            ..Default::default()
        }
    }
}

impl Observer for GridRecorder {
    fn on_event(&mut self, event: &MarkedEvent) {
        self.running[event.source] += 1;
    }
    fn on_grid(&mut self, _g: usize, t: f64, intensity: &[f64]) {
        self.times.push(t);
        self.intensity.push(intensity.to_vec());
        self.counts.push(self.running.clone());
    }
}

/// A running sum shared by all kernels into one target with equal shape.
struct Group {
    target: usize,
    acc: Accumulator,
}

struct Engine {
    groups: Vec<Group>,
    /// adds[j] = (group, target, base amplitude) fed by source-j events
    adds: Vec<Vec<(usize, usize, f64)>>,
    ancestors: Vec<AncestorFunction>,
    monotone: bool,
    window: f64,
}

fn time_scale(shape: &Shape) -> f64 {
    match *shape {
        Shape::Exponential { rate } => 1.0 / rate,
        Shape::Erlang { k, rate } => 1.0 / (f64::from(k) * rate),
        Shape::Table { dt, .. } => dt,
    }
}

impl Engine {
    fn new(model: &HawkesModel, opts: &SimOptions) -> Result<Self> {
        model.validate()?;
        let d = model.d;
        let mut shapes: Vec<(usize, Shape)> = Vec::new();
        let mut groups: Vec<Group> = Vec::new();
        let mut adds = vec![Vec::new(); d + 1];
        let mut monotone = true;
        let mut scale = f64::INFINITY;
        for i in 0..d {
            for j in 0..=d {
                let k = &model.kernels[i][j];
                if k.is_zero() {
                    continue;
                }
                let g = match shapes.iter().position(|(t, s)| *t == i && *s == k.shape) {
                    Some(g) => g,
                    None => {
                        let f: LagFn = k.shape.density_fn(1.0);
                        monotone &= f.is_nonincreasing();
                        scale = scale.min(time_scale(&k.shape));
                        shapes.push((i, k.shape.clone()));
                        groups.push(Group {
                            target: i,
                            acc: Accumulator::new(f, 0.0),
                        });
                        groups.len() - 1
                    }
                };
                adds[j].push((g, i, k.base_amplitude));
            }
        }
        let ancestors = model.ancestor_functions()?;
        for a in &ancestors {
            monotone &= a.is_nonincreasing();
            if let AncestorFunction::Grid { dt, .. } = a {
                scale = scale.min(*dt);
            }
        }
        let window = opts.dom_window.unwrap_or(0.5 * scale);
        if !monotone && !(window > 0.0 && window.is_finite()) {
            return invalid("dominating-rate window must be positive and finite");
        }
        Ok(Engine {
            groups,
            adds,
            ancestors,
            monotone,
            window,
        })
    }

    fn advance(&mut self, t: f64) {
        for g in &mut self.groups {
            g.acc.advance_to(t);
        }
    }

    fn intensities(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.ancestors[i].value(t);
        }
        for g in &self.groups {
            out[g.target] += g.acc.value();
        }
    }

    fn bound(&self, t: f64, delta: f64) -> f64 {
        let mut b: f64 = self.ancestors.iter().map(|a| a.bound(t, delta)).sum();
        for g in &self.groups {
            b += g.acc.bound(delta);
        }
        b
    }

    fn register(&mut self, source: usize, mark: &Mark) {
        for &(g, target, base) in &self.adds[source] {
            self.groups[g].acc.add(mark.amp(target) * base);
        }
    }
}

/// Simulates one path on `(0, T]`, streaming events and grid observations
/// (`obs_times` sorted, each in `[0, T]`) into `observer`. Returns the number
/// of events generated.
pub fn simulate_observed<R: Rng + ?Sized, O: Observer>(
    model: &HawkesModel,
    horizon: f64,
    obs_times: &[f64],
    rng: &mut R,
    opts: &SimOptions,
    observer: &mut O,
) -> Result<usize> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    if obs_times.windows(2).any(|w| w[1] < w[0]) {
        return invalid("observation times must be sorted");
    }
    if obs_times.iter().any(|t| *t < 0.0 || *t > horizon) {
        return invalid("observation times must lie in [0, T]");
    }
    let mut eng = Engine::new(model, opts)?;
    let d = model.d;
    let lam_i = model.immigration_rate;
    let mut lam = vec![0.0; d];
    let mut next_imm = if lam_i > 0.0 {
        rng.sample::<f64, _>(Exp1) / lam_i
    } else {
        f64::INFINITY
    };
    let mut obs = obs_times.iter().copied().enumerate().peekable();
    let mut t = 0.0;
    let mut count = 0usize;
    loop {
        // stop points that interrupt the thinning clock
        let next_obs = obs.peek().map_or(f64::INFINITY, |&(_, s)| s);
        let (b, limit) = if eng.monotone {
            (eng.bound(t, 0.0), f64::INFINITY)
        } else {
            (eng.bound(t, eng.window), t + eng.window)
        };
        let cand = if b > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / b
        } else {
            f64::INFINITY
        };
        let stop = next_obs.min(next_imm).min(limit).min(horizon);
        if cand > stop {
            // no candidate before the next interruption
            if next_obs <= stop && next_obs < next_imm {
                let (g, s) = obs.next().unwrap();
                eng.advance(s);
                eng.intensities(s, &mut lam);
                observer.on_grid(g, s, &lam);
                t = s;
                continue;
            }
            if next_imm <= stop {
                t = next_imm;
                eng.advance(t);
                let mark = model.mark_dists[d].sample(rng);
                eng.register(d, &mark);
                observer.on_event(&MarkedEvent {
                    source: d,
                    time: t,
                    mark,
                });
                count += 1;
                if count > opts.event_cap {
                    return Err(Error::EventCap {
                        cap: opts.event_cap,
                        t,
                    });
                }
                next_imm = t + rng.sample::<f64, _>(Exp1) / lam_i;
                continue;
            }
            if stop >= horizon {
                break;
            }
            t = stop;
            eng.advance(t);
            continue;
        }
        t = cand;
        eng.advance(t);
        eng.intensities(t, &mut lam);
        let total: f64 = lam.iter().sum();
        let u: f64 = rng.random::<f64>() * b;
        if u >= total {
            continue;
        }
        let mut i = 0;
        let mut acc = lam[0];
        while u >= acc && i + 1 < d {
            i += 1;
            acc += lam[i];
        }
        let mark = model.mark_dists[i].sample(rng);
        eng.register(i, &mark);
        observer.on_event(&MarkedEvent {
            source: i,
            time: t,
            mark,
        });
        count += 1;
        if count > opts.event_cap {
            return Err(Error::EventCap {
                cap: opts.event_cap,
                t,
            });
        }
    }
    // remaining observations at or before the horizon
    for (g, s) in obs {
        eng.advance(s);
        eng.intensities(s, &mut lam);
        observer.on_grid(g, s, &lam);
    }
    Ok(count)
}

/// Simulates a path and keeps the full event log.
pub fn simulate_hawkes(model: &HawkesModel, horizon: f64, seed: u64) -> Result<EventLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = simulate_log(model, horizon, &mut rng, &SimOptions::default())?;
    log.seed = Some(seed);
    Ok(log)
}

pub fn simulate_log<R: Rng + ?Sized>(
    model: &HawkesModel,
    horizon: f64,
    rng: &mut R,
    opts: &SimOptions,
) -> Result<EventLog> {
    let mut c = EventCollector::default();
    simulate_observed(model, horizon, &[], rng, opts, &mut c)?;
    Ok(EventLog {
        horizon,
        events: c.events,
        model: model.clone(),
        seed: None,
    })
}

/// `Λ_i(t)` by direct summation over the log.
pub fn intensity_at(log: &EventLog, model: &HawkesModel, i: usize, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t > log.horizon {
        return Err(Error::OutOfRange {
            t,
            horizon: log.horizon,
        });
    }
    if i >= model.d {
        return invalid(format!("type {i} out of range"));
    }
    let anc = model.ancestor_functions()?;
    let mut s = anc[i].value(t);
    for e in log.events.iter().take_while(|e| e.time <= t) {
        let k = &model.kernels[i][e.source];
        s += e.mark.amp(i) * k.base_amplitude * k.shape.value(t - e.time);
    }
    Ok(s)
}

/// `N_i(t) − ∫_0^t Λ_i(s) ds` on `grid`, by direct summation; `i = d` gives
/// the immigrant stream against `λ_I t`.
pub fn compensator_residual(
    log: &EventLog,
    model: &HawkesModel,
    i: usize,
    grid: &[f64],
) -> Result<Vec<f64>> {
    if i > model.d {
        return invalid(format!("source {i} out of range"));
    }
    let anc = model.ancestor_functions()?;
    grid.iter()
        .map(|&t| {
            if !(t >= 0.0) || t > log.horizon {
                return Err(Error::OutOfRange {
                    t,
                    horizon: log.horizon,
                });
            }
            let past = log.events.iter().take_while(|e| e.time <= t);
            if i == model.d {
                let n = past.filter(|e| e.source == i).count() as f64;
                return Ok(n - model.immigration_rate * t);
            }
            let mut n = 0.0;
            let mut comp = anc[i].integral(t);
            for e in past {
                if e.source == i {
                    n += 1.0;
                }
                let k = &model.kernels[i][e.source];
                comp += e.mark.amp(i) * k.base_amplitude * k.shape.cumulative(t - e.time);
            }
            Ok(n - comp)
        })
        .collect()
}

struct KernelCompensator {
    base: f64,
    mass: f64,
    weight: f64,
    tail: Accumulator,
}

/// Streams `N_i(t) − ∫_0^t Λ_i` at grid times in O(1) per event, using
/// `∫_0^t Σ_k w_k φ(s − τ_k) ds = Σ_k w_k (‖φ‖ − ∫_{t−τ_k}^∞ φ)`.
pub struct CompensatorObserver {
    d: usize,
    kernels: Vec<Vec<KernelCompensator>>,
    ancestors: Vec<AncestorFunction>,
    counts: Vec<f64>,
    immigration_rate: f64,
    /// residual[g][j] for sources `j = 0..=d`
    pub residual: Vec<Vec<f64>>,
}

impl CompensatorObserver {
    pub fn new(model: &HawkesModel) -> Result<Self> {
        let d = model.d;
        let kernels = (0..d)
            .map(|i| {
                (0..=d)
                    .map(|j| {
                        let k = &model.kernels[i][j];
                        KernelCompensator {
                            base: k.base_amplitude,
                            mass: k.shape.mass(),
                            weight: 0.0,
                            tail: Accumulator::new(k.shape.tail_fn(1.0), 0.0),
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(CompensatorObserver {
            d,
            kernels,
            ancestors: model.ancestor_functions()?,
            counts: vec![0.0; d + 1],
            immigration_rate: model.immigration_rate,
            residual: Vec::new(),
        })
    }
}

impl Observer for CompensatorObserver {
    fn on_event(&mut self, e: &MarkedEvent) {
        self.counts[e.source] += 1.0;
        for i in 0..self.d {
            let k = &mut self.kernels[i][e.source];
            if k.base == 0.0 {
                continue;
            }
            let w = e.mark.amp(i);
            k.weight += w;
            k.tail.advance_to(e.time);
            k.tail.add(w);
        }
    }

    fn on_grid(&mut self, _g: usize, t: f64, _intensity: &[f64]) {
        let d = self.d;
        let mut row = Vec::with_capacity(d + 1);
        for i in 0..d {
            let mut comp = self.ancestors[i].integral(t);
            for k in self.kernels[i].iter_mut() {
                if k.base == 0.0 {
                    continue;
                }
                k.tail.advance_to(t);
                comp += k.base * (k.mass * k.weight - k.tail.value());
            }
            row.push(self.counts[i] - comp);
        }
        row.push(self.counts[d] - self.immigration_rate * t);
        self.residual.push(row);
    }
}

/// `Z^{(n)}_i(t) = Λ_i(nt)/n` on the rescaled `grid`, simulating on `(0, nT]`.
pub fn rescaled_density_path<R: Rng + ?Sized>(
    model: &HawkesModel,
    n: f64,
    grid: &[f64],
    rng: &mut R,
    opts: &SimOptions,
) -> Result<Vec<Vec<f64>>> {
    if !(n >= 1.0) {
        return invalid(format!("n must be at least 1, got {n}"));
    }
    let horizon = grid.last().copied().unwrap_or(0.0) * n;
    let obs: Vec<f64> = grid.iter().map(|t| t * n).collect();
    let mut rec = GridRecorder::new(model.d + 1);
    simulate_observed(
        model,
        horizon.max(f64::MIN_POSITIVE),
        &obs,
        rng,
        opts,
        &mut rec,
    )?;
    Ok(rec
        .intensity
        .into_iter()
        .map(|row| row.into_iter().map(|x| x / n).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{AncestorSpec, KernelSpec, MarkDistribution};

    fn one_type(
        self_kernel: KernelSpec,
        imm_kernel: KernelSpec,
        marks: MarkDistribution,
    ) -> HawkesModel {
        HawkesModel {
            d: 1,
            kernels: vec![vec![self_kernel, imm_kernel]],
            mark_dists: vec![marks, MarkDistribution::unit(1)],
            immigration_rate: 1.0,
            ancestors: AncestorSpec::None,
        }
    }

    fn exp_kernel(rate: f64, mass: f64) -> KernelSpec {
        KernelSpec::new(Shape::Exponential { rate }, mass)
    }

    #[test]
    fn immigrants_form_a_poisson_stream() {
        let m = one_type(
            KernelSpec::zero(),
            KernelSpec::zero(),
            MarkDistribution::unit(1),
        );
        let (t, paths) = (50.0, 400);
        let mut sum = 0.0;
        let mut sq = 0.0;
        for s in 0..paths {
            let log = simulate_hawkes(&m, t, s).unwrap();
            assert_eq!(log.count(0, t), 0);
            let n = log.count(1, t) as f64;
            sum += n;
            sq += n * n;
        }
        let mean = sum / paths as f64;
        let var = sq / paths as f64 - mean * mean;
        // mean = variance = 50; the sample mean has sd ≈ 0.35
        assert!((mean - t).abs() < 1.5, "mean {mean}");
        assert!((var / t - 1.0).abs() < 0.25, "var {var}");
    }

    #[test]
    fn long_run_rate_matches_the_branching_mean() {
        // m_I λ_I / (1 − m) = 0.5 / 0.5 = 1 for a monotone and a humped kernel
        let kernels = [
            exp_kernel(1.0, 0.5),
            KernelSpec::new(Shape::Erlang { k: 2, rate: 2.0 }, 0.5),
            KernelSpec::new(
                Shape::Table {
                    dt: 0.5,
                    values: vec![0.2, 0.6, 0.2],
                },
                1.0,
            ),
        ];
        for (s, k) in kernels.into_iter().enumerate() {
            let m = one_type(
                k,
                exp_kernel(3.0, 0.5),
                MarkDistribution::Exponential { mean: vec![1.0] },
            );
            let t = 20_000.0;
            let log = simulate_hawkes(&m, t, 11 + s as u64).unwrap();
            let rate = log.count(0, t) as f64 / t;
            // count sd ≈ 2/√T ≈ 0.014
            assert!((rate - 1.0).abs() < 0.06, "kernel {s}: rate {rate}");
        }
    }

    #[test]
    fn two_types_follow_the_mean_equations() {
        // λ = (I − M)⁻¹ m_I with M = [[0.3, 0.2], [0.1, 0.4]], m_I = (1, 0)
        let model = HawkesModel {
            d: 2,
            kernels: vec![
                vec![
                    exp_kernel(1.0, 0.3),
                    exp_kernel(2.0, 0.2),
                    exp_kernel(1.0, 1.0),
                ],
                vec![
                    exp_kernel(1.5, 0.1),
                    exp_kernel(1.0, 0.4),
                    KernelSpec::zero(),
                ],
            ],
            mark_dists: vec![
                MarkDistribution::unit(2),
                MarkDistribution::unit(2),
                MarkDistribution::unit(2),
            ],
            immigration_rate: 1.0,
            ancestors: AncestorSpec::None,
        };
        let det = 0.7 * 0.6 - 0.2 * 0.1;
        let expect = [0.6 / det, 0.1 / det];
        let t = 20_000.0;
        let log = simulate_hawkes(&model, t, 3).unwrap();
        for (i, e) in expect.iter().enumerate() {
            let rate = log.count(i, t) as f64 / t;
            assert!((rate / e - 1.0).abs() < 0.06, "type {i}: {rate} vs {e}");
        }
    }

    #[test]
    fn same_seed_same_path() {
        let m = one_type(
            KernelSpec::new(Shape::Erlang { k: 2, rate: 1.0 }, 0.6),
            exp_kernel(1.0, 1.0),
            MarkDistribution::LogNormal {
                mean: vec![1.0],
                sigma: 0.5,
            },
        );
        let a = simulate_hawkes(&m, 100.0, 42).unwrap();
        let b = simulate_hawkes(&m, 100.0, 42).unwrap();
        let c = simulate_hawkes(&m, 100.0, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, c.events);
        assert!(a.events.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn intensity_and_compensator_by_hand() {
        let m = one_type(
            exp_kernel(1.0, 1.0),
            KernelSpec::zero(),
            MarkDistribution::unit(1),
        );
        let log = EventLog {
            horizon: 3.0,
            events: vec![MarkedEvent {
                source: 0,
                time: 1.0,
                mark: Mark::unit(1),
            }],
            model: m.clone(),
            seed: None,
        };
        assert_eq!(intensity_at(&log, &m, 0, 0.5).unwrap(), 0.0);
        assert!((intensity_at(&log, &m, 0, 2.0).unwrap() - 0.367879).abs() < 1e-6);
        let r = compensator_residual(&log, &m, 0, &[0.5, 2.0]).unwrap();
        assert_eq!(r[0], 0.0);
        assert!((r[1] - (1.0 - (1.0 - (-1.0f64).exp()))).abs() < 1e-12);
        assert!(matches!(
            intensity_at(&log, &m, 0, 4.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn excess_ancestors_decay_like_the_kernel_tail() {
        let mut m = one_type(
            exp_kernel(1.0, 0.5),
            KernelSpec::zero(),
            MarkDistribution::unit(1),
        );
        m.immigration_rate = 0.0;
        m.ancestors = AncestorSpec::ExcessImpact { lambda0: vec![2.0] };
        let empty = EventLog {
            horizon: 5.0,
            events: vec![],
            model: m.clone(),
            seed: None,
        };
        for t in [0.0, 0.5, 2.0] {
            let l = intensity_at(&empty, &m, 0, t).unwrap();
            assert!((l - 2.0 * (-t as f64).exp()).abs() < 1e-12);
        }
        // E N(∞) = 2 / (1 − 0.5) = 4
        let paths = 4000;
        let total: usize = (0..paths)
            .map(|s| simulate_hawkes(&m, 60.0, s).unwrap().count(0, 60.0))
            .sum();
        let mean = total as f64 / paths as f64;
        assert!((mean - 4.0).abs() < 0.25, "mean {mean}");
    }

    #[test]
    fn streaming_compensator_matches_direct_sum() {
        let model = HawkesModel {
            d: 2,
            kernels: vec![
                vec![
                    KernelSpec::new(Shape::Erlang { k: 3, rate: 2.0 }, 0.4),
                    exp_kernel(2.0, 0.2),
                    exp_kernel(1.0, 1.0),
                ],
                vec![
                    KernelSpec::new(
                        Shape::Table {
                            dt: 0.25,
                            values: vec![1.0, 2.0, 1.0],
                        },
                        0.3,
                    ),
                    exp_kernel(1.0, 0.4),
                    exp_kernel(1.0, 0.5),
                ],
            ],
            mark_dists: vec![
                MarkDistribution::Exponential {
                    mean: vec![1.0, 0.5],
                },
                MarkDistribution::unit(2),
                MarkDistribution::unit(2),
            ],
            immigration_rate: 2.0,
            ancestors: AncestorSpec::ExcessImpact {
                lambda0: vec![1.0, 0.5],
            },
        };
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 1.25).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut obs = (
            EventCollector::default(),
            CompensatorObserver::new(&model).unwrap(),
        );
        simulate_observed(
            &model,
            50.0,
            &grid,
            &mut rng,
            &SimOptions::default(),
            &mut obs,
        )
        .unwrap();
        let log = EventLog {
            horizon: 50.0,
            events: obs.0.events,
            model: model.clone(),
            seed: None,
        };
        assert!(log.events.len() > 100);
        for j in 0..=2 {
            let direct = compensator_residual(&log, &model, j, &grid).unwrap();
            for (g, r) in direct.iter().enumerate() {
                assert!((obs.1.residual[g][j] - r).abs() < 1e-8, "source {j} g {g}");
            }
        }
    }

    #[test]
    fn grid_intensities_match_direct_evaluation() {
        let m = one_type(
            KernelSpec::new(Shape::Erlang { k: 2, rate: 1.0 }, 0.7),
            exp_kernel(1.0, 1.0),
            MarkDistribution::unit(1),
        );
        let grid: Vec<f64> = (0..=30).map(|k| k as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut obs = (EventCollector::default(), GridRecorder::new(2));
        simulate_observed(&m, 30.0, &grid, &mut rng, &SimOptions::default(), &mut obs).unwrap();
        let log = EventLog {
            horizon: 30.0,
            events: obs.0.events,
            model: m.clone(),
            seed: None,
        };
        for (g, t) in grid.iter().enumerate() {
            let direct = intensity_at(&log, &m, 0, *t).unwrap();
            assert!((obs.1.intensity[g][0] - direct).abs() < 1e-9);
            assert_eq!(obs.1.counts[g][0], log.count(0, *t));
        }
    }

    #[test]
    fn event_cap_is_reported() {
        let m = one_type(
            exp_kernel(1.0, 0.5),
            exp_kernel(1.0, 1.0),
            MarkDistribution::unit(1),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let opts = SimOptions {
            event_cap: 10,
            dom_window: None,
        };
        assert!(matches!(
            simulate_log(&m, 1000.0, &mut rng, &opts),
            Err(Error::EventCap { cap: 10, .. })
        ));
    }
}
