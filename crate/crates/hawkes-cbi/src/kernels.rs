//! Mark spaces, impact kernels and their deterministic summaries.
//!
//! Every kernel is separable: the impact of an event with mark `u` on the
//! intensity of type `i` at lag `t` is
//!
//! ```text
//! φ_i(t, u) = amplitude_i(u) · base_amplitude · shape(t)
//! ```
//!
//! where `shape` has unit mass for the parametric families, so
//! `base_amplitude` times the mean mark amplitude is the L¹ mass of the
//! mean kernel.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::accum::LagFn;
use crate::error::{invalid, Error, Result};

/// Per-target amplitude vector; inline for up to four types.
pub type Amplitudes = SmallVec<[f64; 4]>;

/// One sampled mark.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mark {
    /// Impact scale per target type, all entries nonnegative.
    pub amplitude: Amplitudes,
    /// Family-specific shape parameters. The built-in kernel families do
    /// not read them (kernels are separable), but they travel with the mark.
    pub shape_params: [f64; 2],
    /// Opaque extension; the cmj module stores life lengths here.
    pub payload: Option<SmallVec<[f64; 4]>>,
}

impl Mark {
    pub fn unit(d: usize) -> Self {
        Self::constant(&vec![1.0; d])
    }

    pub fn constant(amplitude: &[f64]) -> Self {
        Mark {
            amplitude: amplitude.iter().copied().collect(),
            ..Default::default()
        }
    }

    pub fn amp(&self, i: usize) -> f64 {
        self.amplitude.get(i).copied().unwrap_or(0.0)
    }
}

/// One atom of a discrete mark law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub prob: f64,
    pub amplitude: Vec<f64>,
}

/// Law of the marks attached to events of one source type.
///
/// Non-constant families share one random scalar across components, so the
/// sampled vector is `mean ⊙ W` with `E[W] = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkDistribution {
    Constant { amplitude: Vec<f64> },
    Exponential { mean: Vec<f64> },
    LogNormal { mean: Vec<f64>, sigma: f64 },
    DiscreteAtoms { atoms: Vec<Atom> },
}

const PROBE_SAMPLES: usize = 10_000;
const PROBE_SEED: u64 = 0x6d61_726b;

impl MarkDistribution {
    pub fn unit(d: usize) -> Self {
        MarkDistribution::Constant {
            amplitude: vec![1.0; d],
        }
    }

    /// Number of amplitude components.
    pub fn dim(&self) -> usize {
        match self {
            MarkDistribution::Constant { amplitude } => amplitude.len(),
            MarkDistribution::Exponential { mean } => mean.len(),
            MarkDistribution::LogNormal { mean, .. } => mean.len(),
            MarkDistribution::DiscreteAtoms { atoms } => {
                atoms.first().map_or(0, |a| a.amplitude.len())
            }
        }
    }

    /// Checks parameters and runs a moment probe for random families.
    pub fn validate(&self, d: usize) -> Result<()> {
        let check_vec = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != d {
                return invalid(format!("{what} has length {}, expected {d}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return invalid(format!("{what} must be finite and nonnegative"));
            }
            Ok(())
        };
        match self {
            MarkDistribution::Constant { amplitude } => return check_vec(amplitude, "amplitude"),
            MarkDistribution::Exponential { mean } => check_vec(mean, "mean")?,
            MarkDistribution::LogNormal { mean, sigma } => {
                check_vec(mean, "mean")?;
                if !sigma.is_finite() || *sigma < 0.0 {
                    return invalid("log-normal sigma must be finite and nonnegative");
                }
            }
            MarkDistribution::DiscreteAtoms { atoms } => {
                if atoms.is_empty() {
                    return invalid("discrete mark law needs at least one atom");
                }
                let mut total = 0.0;
                for a in atoms {
                    check_vec(&a.amplitude, "atom amplitude")?;
                    if !(a.prob >= 0.0) {
                        return invalid("atom probabilities must be nonnegative");
                    }
                    total += a.prob;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return invalid(format!("atom probabilities sum to {total}, not 1"));
                }
            }
        }
        // Empirical probe of the first four moments.
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let mut m4 = vec![0.0; d];
        for _ in 0..PROBE_SAMPLES {
            let u = self.sample(&mut rng);
            for (acc, x) in m4.iter_mut().zip(u.amplitude.iter()) {
                if !x.is_finite() || *x < 0.0 {
                    return invalid("mark sampler produced a negative or non-finite amplitude");
                }
                *acc += x.powi(4);
            }
        }
        if m4.iter().any(|m| !m.is_finite()) {
            return invalid("mark law fails the fourth-moment probe");
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Mark {
        let amplitude: Amplitudes = match self {
            MarkDistribution::Constant { amplitude } => amplitude.iter().copied().collect(),
            MarkDistribution::Exponential { mean } => {
                let w: f64 = Exp1.sample(rng);
                mean.iter().map(|m| m * w).collect()
            }
            MarkDistribution::LogNormal { mean, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                let w = (sigma * z - 0.5 * sigma * sigma).exp();
                mean.iter().map(|m| m * w).collect()
            }
            MarkDistribution::DiscreteAtoms { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = &atoms[atoms.len() - 1];
                for a in atoms {
                    acc += a.prob;
                    if u < acc {
                        pick = a;
                        break;
                    }
                }
                pick.amplitude.iter().copied().collect()
            }
        };
        Mark {
            amplitude,
            ..Default::default()
        }
    }

    /// `E[amplitude_i]`.
    pub fn mean_amplitude(&self, i: usize) -> f64 {
        match self {
            MarkDistribution::Constant { amplitude } => amplitude.get(i).copied().unwrap_or(0.0),
            MarkDistribution::Exponential { mean } | MarkDistribution::LogNormal { mean, .. } => {
                mean.get(i).copied().unwrap_or(0.0)
            }
            MarkDistribution::DiscreteAtoms { atoms } => atoms
                .iter()
                .map(|a| a.prob * a.amplitude.get(i).copied().unwrap_or(0.0))
                .sum(),
        }
    }

    /// `E[amplitude_i²]`.
    pub fn second_moment(&self, i: usize) -> f64 {
        match self {
            MarkDistribution::Constant { amplitude } => {
                amplitude.get(i).copied().unwrap_or(0.0).powi(2)
            }
            MarkDistribution::Exponential { mean } => {
                2.0 * mean.get(i).copied().unwrap_or(0.0).powi(2)
            }
            MarkDistribution::LogNormal { mean, sigma } => {
                mean.get(i).copied().unwrap_or(0.0).powi(2) * (sigma * sigma).exp()
            }
            MarkDistribution::DiscreteAtoms { atoms } => atoms
                .iter()
                .map(|a| a.prob * a.amplitude.get(i).copied().unwrap_or(0.0).powi(2))
                .sum(),
        }
    }

    /// Returns the same law with component means multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let sc = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        match self {
            MarkDistribution::Constant { amplitude } => MarkDistribution::Constant {
                amplitude: sc(amplitude),
            },
            MarkDistribution::Exponential { mean } => {
                MarkDistribution::Exponential { mean: sc(mean) }
            }
            MarkDistribution::LogNormal { mean, sigma } => MarkDistribution::LogNormal {
                mean: sc(mean),
                sigma: *sigma,
            },
            MarkDistribution::DiscreteAtoms { atoms } => MarkDistribution::DiscreteAtoms {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        prob: a.prob,
                        amplitude: sc(&a.amplitude),
                    })
                    .collect(),
            },
        }
    }
}

/// Deterministic lag profile of a kernel or response function.
///
/// Exponential and Erlang shapes have unit mass. Table shapes are step
/// functions, left-closed and right-open on cells of width `dt`, used as
/// given (their mass is `dt · Σ values`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Exponential { rate: f64 },
    Erlang { k: u32, rate: f64 },
    Table { dt: f64, values: Vec<f64> },
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `e^{-x} Σ_{m<k} x^m/m!`, the Poisson(x) probability of fewer than `k` points.
fn poisson_below(k: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for m in 0..k {
        if m > 0 {
            term *= x / f64::from(m);
        }
        sum += term;
    }
    sum * (-x).exp()
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return invalid(format!("exponential rate must be positive, got {rate}"));
                }
            }
            Shape::Erlang { k, rate } => {
                if !(1..=3).contains(k) {
                    return invalid(format!("erlang shape k must be 1, 2 or 3, got {k}"));
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    return invalid(format!("erlang rate must be positive, got {rate}"));
                }
            }
            Shape::Table { dt, values } => {
                if !(dt.is_finite() && *dt > 0.0) {
                    return invalid(format!("table dt must be positive, got {dt}"));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return invalid("table values must be finite and nonnegative");
                }
            }
        }
        Ok(())
    }

    /// Shape value at lag `t`; zero for `t < 0`.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Shape::Exponential { rate } => rate * (-rate * t).exp(),
            Shape::Erlang { k, rate } => {
                rate.powi(k as i32) * t.powi(k as i32 - 1) * (-rate * t).exp() / factorial(k - 1)
            }
            Shape::Table { dt, ref values } => {
                let idx = (t / dt).floor();
                if idx < values.len() as f64 {
                    values[idx as usize]
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫₀^∞ shape`.
    pub fn mass(&self) -> f64 {
        match self {
            Shape::Exponential { .. } | Shape::Erlang { .. } => 1.0,
            Shape::Table { dt, values } => dt * values.iter().sum::<f64>(),
        }
    }

    /// `∫₀^∞ t·shape(t) dt`.
    pub fn first_moment(&self) -> f64 {
        match *self {
            Shape::Exponential { rate } => 1.0 / rate,
            Shape::Erlang { k, rate } => f64::from(k) / rate,
            Shape::Table { dt, ref values } => values
                .iter()
                .enumerate()
                .map(|(m, v)| v * dt * dt * (m as f64 + 0.5))
                .sum(),
        }
    }

    /// `∫_t^∞ shape`.
    pub fn tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.mass();
        }
        match *self {
            Shape::Exponential { rate } => (-rate * t).exp(),
            Shape::Erlang { k, rate } => poisson_below(k, rate * t),
            Shape::Table { dt, ref values } => {
                let idx = (t / dt).floor() as usize;
                if idx >= values.len() {
                    return 0.0;
                }
                let partial = values[idx] * ((idx + 1) as f64 * dt - t);
                partial + dt * values[idx + 1..].iter().sum::<f64>()
            }
        }
    }

    /// `∫₀^t shape`.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            // Computed directly to avoid cancellation for small t.
            Shape::Exponential { rate } => -(-rate * t).exp_m1(),
            _ => self.mass() - self.tail(t),
        }
    }

    /// `∫₀^t tail(s) ds`.
    pub fn integrated_tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Shape::Exponential { rate } => -(-rate * t).exp_m1() / rate,
            Shape::Erlang { k, rate } => {
                (0..k)
                    .map(|m| 1.0 - poisson_below(m + 1, rate * t))
                    .sum::<f64>()
                    / rate
            }
            Shape::Table { dt, ref values } => {
                // tail is piecewise linear between grid nodes
                let n = values.len();
                let mut node = vec![0.0; n + 1];
                for m in (0..n).rev() {
                    node[m] = node[m + 1] + dt * values[m];
                }
                let full = (t / dt).floor() as usize;
                let mut acc = 0.0;
                for m in 0..full.min(n) {
                    acc += 0.5 * dt * (node[m] + node[m + 1]);
                }
                if full < n {
                    let s = t - full as f64 * dt;
                    let end = node[full] - values[full] * s;
                    acc += 0.5 * s * (node[full] + end);
                }
                acc
            }
        }
    }

    /// `∫₀^∞ e^{-st} shape(t) dt` for `s ≥ 0`.
    pub fn laplace(&self, s: f64) -> f64 {
        match *self {
            Shape::Exponential { rate } => rate / (rate + s),
            Shape::Erlang { k, rate } => (rate / (rate + s)).powi(k as i32),
            Shape::Table { dt, ref values } => {
                if s == 0.0 {
                    return self.mass();
                }
                values
                    .iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let a = m as f64 * dt;
                        v * ((-s * a).exp() - (-s * (a + dt)).exp()) / s
                    })
                    .sum()
            }
        }
    }

    /// Total variation on `[0, ∞)`, counting the final drop to zero but not
    /// the initial value.
    pub fn total_variation(&self) -> f64 {
        match self {
            Shape::Exponential { rate } => *rate,
            Shape::Erlang { k: 1, rate } => *rate,
            Shape::Erlang { .. } => 2.0 * self.sup(),
            Shape::Table { values, .. } => {
                let last = values.last().copied().unwrap_or(0.0);
                last + values.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>()
            }
        }
    }

    /// `sup_t shape(t)`.
    pub fn sup(&self) -> f64 {
        match *self {
            Shape::Exponential { rate } => rate,
            Shape::Erlang { k, rate } => self.value(f64::from(k - 1) / rate),
            Shape::Table { ref values, .. } => values.iter().copied().fold(0.0, f64::max),
        }
    }

    /// A lag beyond which the remaining mass is at most `eps · mass`.
    pub fn support_horizon(&self, eps: f64) -> f64 {
        match *self {
            Shape::Exponential { rate } => (1.0 / eps).ln() / rate,
            Shape::Erlang { .. } => {
                let mut hi = self.first_moment().max(1e-12);
                while self.tail(hi) > eps {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail(mid) > eps {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
            Shape::Table { dt, ref values } => dt * values.len() as f64,
        }
    }

    /// Whether `shape` is nonincreasing in the lag.
    pub fn is_nonincreasing(&self) -> bool {
        match self {
            Shape::Exponential { .. } | Shape::Erlang { k: 1, .. } => true,
            Shape::Erlang { .. } => false,
            Shape::Table { values, .. } => values.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    pub(crate) fn density_fn(&self, scale: f64) -> LagFn {
        match *self {
            Shape::Exponential { rate } => LagFn::exp_poly(rate, &[scale * rate]),
            Shape::Erlang { k, rate } => {
                let mut coef = [0.0; 3];
                coef[k as usize - 1] = scale * rate.powi(k as i32) / factorial(k - 1);
                LagFn::exp_poly(rate, &coef[..k as usize])
            }
            Shape::Table { dt, ref values } => {
                LagFn::step(dt, values.iter().map(|v| v * scale).collect())
            }
        }
    }

    pub(crate) fn tail_fn(&self, scale: f64) -> LagFn {
        match *self {
            Shape::Exponential { rate } => LagFn::exp_poly(rate, &[scale]),
            Shape::Erlang { k, rate } => {
                let mut coef = [0.0; 3];
                for (m, c) in coef.iter_mut().enumerate().take(k as usize) {
                    *c = scale * rate.powi(m as i32) / factorial(m as u32);
                }
                LagFn::exp_poly(rate, &coef[..k as usize])
            }
            Shape::Table { dt, ref values } => {
                let n = values.len();
                let mut node = vec![0.0; n + 1];
                for m in (0..n).rev() {
                    node[m] = node[m + 1] + dt * values[m] * scale;
                }
                LagFn::linear(dt, node)
            }
        }
    }
}

/// Kernel from one source type to one target type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub shape: Shape,
    pub base_amplitude: f64,
}

impl KernelSpec {
    pub fn new(shape: Shape, base_amplitude: f64) -> Self {
        KernelSpec {
            shape,
            base_amplitude,
        }
    }

    pub fn zero() -> Self {
        KernelSpec::new(Shape::Exponential { rate: 1.0 }, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.base_amplitude == 0.0 || self.shape.mass() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if !(self.base_amplitude.is_finite() && self.base_amplitude >= 0.0) {
            return invalid(format!(
                "kernel base amplitude must be finite and nonnegative, got {}",
                self.base_amplitude
            ));
        }
        Ok(())
    }

    /// `base_amplitude · shape(t)`.
    pub fn profile(&self, t: f64) -> f64 {
        self.base_amplitude * self.shape.value(t)
    }

    /// `base_amplitude · ‖shape‖_{L¹}`.
    pub fn mass(&self) -> f64 {
        self.base_amplitude * self.shape.mass()
    }
}

/// `φ_target(t, u) = amplitude_target(u) · base_amplitude · shape(t)`.
pub fn eval_kernel(k: &KernelSpec, t: f64, u: &Mark, target: usize) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(u.amp(target) * k.profile(t))
}

/// Ancestor (pre-time-0) contribution to the intensities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AncestorSpec {
    /// No ancestor term.
    None,
    /// Constant baseline `μ_i(t) = rates[i]`.
    Constant { rates: Vec<f64> },
    /// Step functions on a grid (left-closed cells), zero after the last cell.
    Grid { dt: f64, values: Vec<Vec<f64>> },
    /// `μ̂_i(t) = Λ_i(0) · ∫_t^∞ φ_ii / ‖φ_ii‖`, the excess-impact ancestors.
    ExcessImpact { lambda0: Vec<f64> },
}

impl Default for AncestorSpec {
    fn default() -> Self {
        AncestorSpec::ExcessImpact {
            lambda0: Vec::new(),
        }
    }
}

/// Multivariate marked Hawkes model with immigration and ancestors.
///
/// `kernels[i][j]` maps events of source `j` to the intensity of target `i`;
/// column `d` is the immigrant source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HawkesModel {
    pub d: usize,
    pub kernels: Vec<Vec<KernelSpec>>,
    pub mark_dists: Vec<MarkDistribution>,
    pub immigration_rate: f64,
    #[serde(default)]
    pub ancestors: AncestorSpec,
}

impl HawkesModel {
    /// Index of the immigrant source.
    pub fn immigrant(&self) -> usize {
        self.d
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return invalid("a Hawkes model needs at least one type");
        }
        if self.kernels.len() != d || self.kernels.iter().any(|row| row.len() != d + 1) {
            return invalid(format!("kernel table must be {d}x{}", d + 1));
        }
        for row in &self.kernels {
            for k in row {
                k.validate()?;
            }
        }
        if self.mark_dists.len() != d + 1 {
            return invalid(format!("need {} mark laws (one per source)", d + 1));
        }
        for m in &self.mark_dists {
            m.validate(d)?;
        }
        if !(self.immigration_rate.is_finite() && self.immigration_rate >= 0.0) {
            return invalid("immigration rate must be finite and nonnegative");
        }
        let nonneg = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != d {
                return invalid(format!("{what} needs {d} entries"));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return invalid(format!("{what} must be finite and nonnegative"));
            }
            Ok(())
        };
        match &self.ancestors {
            AncestorSpec::None => {}
            AncestorSpec::Constant { rates } => nonneg(rates, "ancestor rates")?,
            AncestorSpec::Grid { dt, values } => {
                if !(*dt > 0.0) {
                    return invalid("ancestor grid dt must be positive");
                }
                if values.len() != d {
                    return invalid(format!("ancestor grid needs {d} rows"));
                }
                for v in values {
                    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                        return invalid("ancestor grid values must be finite and nonnegative");
                    }
                }
            }
            AncestorSpec::ExcessImpact { lambda0 } => {
                if !lambda0.is_empty() {
                    nonneg(lambda0, "ancestor lambda0")?;
                }
                for (i, l) in lambda0.iter().enumerate() {
                    if *l > 0.0 && self.kernels[i][i].mass() == 0.0 {
                        return invalid(format!(
                            "excess-impact ancestors for type {i} need a kernel with positive mass"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Resolved ancestor functions, one per type.
    pub fn ancestor_functions(&self) -> Result<Vec<AncestorFunction>> {
        let d = self.d;
        Ok(match &self.ancestors {
            AncestorSpec::None => vec![AncestorFunction::Zero; d],
            AncestorSpec::Constant { rates } => rates
                .iter()
                .map(|r| AncestorFunction::Constant(*r))
                .collect(),
            AncestorSpec::Grid { dt, values } => values
                .iter()
                .map(|v| AncestorFunction::Grid {
                    dt: *dt,
                    values: v.clone(),
                })
                .collect(),
            AncestorSpec::ExcessImpact { lambda0 } => {
                if lambda0.is_empty() {
                    vec![AncestorFunction::Zero; d]
                } else {
                    excess_impact_ancestors(lambda0, self)?
                }
            }
        })
    }
}

/// A deterministic ancestor intensity `μ_i(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum AncestorFunction {
    Zero,
    Constant(f64),
    Grid {
        dt: f64,
        values: Vec<f64>,
    },
    /// `lambda0 · shape.tail(t) / shape.mass()`.
    Excess {
        lambda0: f64,
        shape: Shape,
    },
}

impl AncestorFunction {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            AncestorFunction::Zero => 0.0,
            AncestorFunction::Constant(c) => *c,
            AncestorFunction::Grid { dt, values } => {
                if t < 0.0 {
                    return 0.0;
                }
                let idx = (t / dt).floor();
                if idx < values.len() as f64 {
                    values[idx as usize]
                } else {
                    0.0
                }
            }
            AncestorFunction::Excess { lambda0, shape } => lambda0 * shape.tail(t) / shape.mass(),
        }
    }

    /// `∫₀^t μ`.
    pub fn integral(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            AncestorFunction::Zero => 0.0,
            AncestorFunction::Constant(c) => c * t,
            AncestorFunction::Grid { dt, values } => {
                let full = (t / dt).floor() as usize;
                let mut acc: f64 = values.iter().take(full).sum::<f64>() * dt;
                if full < values.len() {
                    acc += values[full] * (t - full as f64 * dt);
                }
                acc
            }
            AncestorFunction::Excess { lambda0, shape } => {
                lambda0 * shape.integrated_tail(t) / shape.mass()
            }
        }
    }

    /// Upper bound of `μ` on `[t, t + delta]`.
    pub fn bound(&self, t: f64, delta: f64) -> f64 {
        match self {
            AncestorFunction::Zero => 0.0,
            AncestorFunction::Constant(c) => *c,
            AncestorFunction::Grid { dt, values } => {
                let lo = (t.max(0.0) / dt).floor() as usize;
                let hi = ((t + delta) / dt).floor() as usize;
                values
                    .iter()
                    .skip(lo)
                    .take(hi.saturating_sub(lo).saturating_add(1))
                    .copied()
                    .fold(0.0, f64::max)
            }
            // tails are nonincreasing
            AncestorFunction::Excess { .. } => self.value(t),
        }
    }

    /// Whether the function never increases, so `value(t)` bounds the future.
    pub fn is_nonincreasing(&self) -> bool {
        match self {
            AncestorFunction::Grid { values, .. } => values.windows(2).all(|w| w[1] <= w[0]),
            _ => true,
        }
    }

    pub fn on_grid(&self, dt: f64, horizon: f64) -> Vec<f64> {
        let n = (horizon / dt).round() as usize;
        (0..=n).map(|k| self.value(k as f64 * dt)).collect()
    }
}

/// The excess-impact ancestors `μ̂_i(t) = Λ_i(0)‖φ_ii‖⁻¹∫_t^∞ φ_ii(s)ds`.
pub fn excess_impact_ancestors(
    lambda0: &[f64],
    model: &HawkesModel,
) -> Result<Vec<AncestorFunction>> {
    if lambda0.len() != model.d {
        return invalid(format!("lambda0 needs {} entries", model.d));
    }
    lambda0
        .iter()
        .enumerate()
        .map(|(i, &l0)| {
            if !(l0 >= 0.0) {
                return invalid("lambda0 must be nonnegative");
            }
            if l0 == 0.0 {
                return Ok(AncestorFunction::Zero);
            }
            let k = &model.kernels[i][i];
            let mean_mass = model.mark_dists[i].mean_amplitude(i) * k.mass();
            if mean_mass <= 0.0 {
                return invalid(format!(
                    "type {i} has Λ(0)={l0} but its self-kernel has zero mass"
                ));
            }
            // Marks and base amplitude cancel in tail/mass.
            Ok(AncestorFunction::Excess {
                lambda0: l0,
                shape: k.shape.clone(),
            })
        })
        .collect()
}

/// Mean kernel `φ_ij(t) = E_{ν_j}[amplitude_i] · base · shape(t)` on `t_k = k·dt`.
pub fn mean_kernel(
    model: &HawkesModel,
    i: usize,
    j: usize,
    dt: f64,
    horizon: f64,
) -> Result<Vec<f64>> {
    if i >= model.d || j > model.d {
        return invalid(format!("kernel index ({i},{j}) out of range"));
    }
    if !(dt > 0.0) || horizon < 0.0 {
        return invalid("mean_kernel needs dt > 0 and a nonnegative horizon");
    }
    let k = &model.kernels[i][j];
    let scale = model.mark_dists[j].mean_amplitude(i) * k.base_amplitude;
    let n = (horizon / dt).round() as usize;
    Ok((0..=n)
        .map(|m| scale * k.shape.value(m as f64 * dt))
        .collect())
}

/// `‖φ_ij‖_{L¹}` for `i, j ∈ H`.
pub fn mean_children_matrix(model: &HawkesModel) -> Vec<Vec<f64>> {
    let d = model.d;
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| model.mark_dists[j].mean_amplitude(i) * model.kernels[i][j].mass())
                .collect()
        })
        .collect()
}

/// `‖φ_iI‖_{L¹}` for each target `i`.
pub fn immigrant_kernel_masses(model: &HawkesModel) -> Vec<f64> {
    let d = model.d;
    (0..d)
        .map(|i| model.mark_dists[d].mean_amplitude(i) * model.kernels[i][d].mass())
        .collect()
}

/// `∫₀^∞ t φ_ii(t) dt`.
pub fn kernel_first_moment(model: &HawkesModel, i: usize) -> f64 {
    let k = &model.kernels[i][i];
    model.mark_dists[i].mean_amplitude(i) * k.base_amplitude * k.shape.first_moment()
}

/// Regime of a mean children matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub mean_children_matrix: Vec<Vec<f64>>,
    pub spectral_radius: f64,
    pub class: Criticality,
    pub tolerance: f64,
}

pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-9;
const POWER_MAX_ITER: usize = 100_000;

/// Spectral radius of a nonnegative matrix.
///
/// The matrix is split into strongly connected blocks; each block is
/// primitive after adding the identity, so power iteration from the
/// all-ones vector converges and the Collatz–Wielandt bounds certify it.
pub fn spectral_radius(m: &[Vec<f64>]) -> Result<f64> {
    let d = m.len();
    if m.iter().any(|row| row.len() != d) {
        return invalid("matrix must be square");
    }
    if m.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
        return invalid("matrix entries must be finite and nonnegative");
    }
    // transitive closure
    let mut reach = vec![vec![false; d]; d];
    for i in 0..d {
        reach[i][i] = true;
        for j in 0..d {
            if m[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..d {
        for i in 0..d {
            if reach[i][k] {
                for j in 0..d {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; d];
    let mut rho: f64 = 0.0;
    for i in 0..d {
        if seen[i] {
            continue;
        }
        let block: Vec<usize> = (0..d).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &block {
            seen[j] = true;
        }
        let sub: Vec<Vec<f64>> = block
            .iter()
            .map(|&r| block.iter().map(|&c| m[r][c]).collect())
            .collect();
        rho = rho.max(block_radius(&sub, m)?);
    }
    Ok(rho)
}

fn block_radius(b: &[Vec<f64>], whole: &[Vec<f64>]) -> Result<f64> {
    let d = b.len();
    if d == 1 {
        return Ok(b[0][0]);
    }
    let mut x = vec![1.0; d];
    let mut y = vec![0.0; d];
    for _ in 0..POWER_MAX_ITER {
        for i in 0..d {
            y[i] = x[i] + (0..d).map(|j| b[i][j] * x[j]).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..d {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        if hi - lo <= 1e-13 * hi {
            return Ok(0.5 * (lo + hi) - 1.0);
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        for i in 0..d {
            x[i] = y[i] / norm;
        }
    }
    match d {
        2 => {
            let tr = b[0][0] + b[1][1];
            let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
            Ok(0.5 * tr + (0.25 * tr * tr - det).max(0.0).sqrt())
        }
        3 => Ok(cubic_perron_root(b)),
        _ => Err(Error::NoConvergence {
            iterations: POWER_MAX_ITER,
            matrix: whole.to_vec(),
        }),
    }
}

/// Largest real root of the characteristic polynomial of an irreducible 3×3
/// nonnegative matrix (a simple root by Perron–Frobenius).
fn cubic_perron_root(b: &[Vec<f64>]) -> f64 {
    let tr = b[0][0] + b[1][1] + b[2][2];
    let c2 = b[0][0] * b[1][1] - b[0][1] * b[1][0] + b[0][0] * b[2][2] - b[0][2] * b[2][0]
        + b[1][1] * b[2][2]
        - b[1][2] * b[2][1];
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let p = |l: f64| ((l - tr) * l + c2) * l - det;
    let hi0 = b.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    let steps = 4096;
    let mut hi = hi0;
    let mut lo = hi0;
    for s in 1..=steps {
        lo = hi0 * (1.0 - s as f64 / steps as f64);
        if p(lo) <= 0.0 {
            break;
        }
        hi = lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn classify_criticality(m: &[Vec<f64>], tol: f64) -> Result<CriticalityReport> {
    if !(tol > 0.0) {
        return invalid("criticality tolerance must be positive");
    }
    let rho = spectral_radius(m)?;
    let class = if rho < 1.0 - tol {
        Criticality::Subcritical
    } else if rho > 1.0 + tol {
        Criticality::Supercritical
    } else {
        Criticality::Critical
    };
    Ok(CriticalityReport {
        mean_children_matrix: m.to_vec(),
        spectral_radius: rho,
        class,
        tolerance: tol,
    })
}
