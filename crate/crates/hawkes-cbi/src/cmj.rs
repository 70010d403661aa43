//! Multi-type Crump–Mode–Jagers populations with immigration.
//!
//! A type-`i` individual lives for a random time drawn from its life law and
//! reproduces at the dates of an inhomogeneous Poisson process with rate
//! `B(t, ℓ) = β·g(t)·1_{t<ℓ}` in its age `t`; at each date it produces a
//! random vector of offspring. Immigrant batches arrive as a Poisson stream.
//!
//! Reproduction dates form a multivariate Hawkes process whose intensity is
//! the total birth rate `B_i(t) = Σ_x B_x(t − τ_x, ℓ_x)`, which is how the
//! Hawkes scaling limits transfer to these populations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::cbi::CBIParams;
use crate::error::{invalid, Error, Result};
use crate::shotnoise::{ResponseFunction, ResponseKind};

pub const DEFAULT_POPULATION_CAP: usize = 10_000_000;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

fn exp_sample<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    rng.sample::<f64, _>(Exp1) / rate
}

/// A one-dimensional law on `[0, ∞)` with density, CDF and sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Law {
    Exponential {
        rate: f64,
    },
    /// Integer shape.
    Gamma {
        shape: u32,
        rate: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Density `2y/c²` on `[0, c]`.
    RisingTriangle {
        c: f64,
    },
    /// Density `2(c − y)/c²` on `[0, c]`.
    FallingTriangle {
        c: f64,
    },
    PointMass {
        at: f64,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<Law>,
    },
}

fn gamma_cdf(shape: u32, x: f64) -> f64 {
    // 1 − e^{−x} Σ_{m<k} x^m/m!
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..shape {
        term *= x / f64::from(m);
        sum += term;
    }
    1.0 - (-x).exp() * sum
}

impl Law {
    /// Density; `+∞` at the atom of a point mass.
    pub fn pdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self {
            Law::Exponential { rate } => rate * (-rate * y).exp(),
            Law::Gamma { shape, rate } => {
                let k = *shape as i32;
                let fact: f64 = (1..*shape).map(f64::from).product();
                rate.powi(k) * y.powi(k - 1) * (-rate * y).exp() / fact
            }
            Law::Uniform { lo, hi } => {
                if y >= *lo && y <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Law::RisingTriangle { c } => {
                if y <= *c {
                    2.0 * y / (c * c)
                } else {
                    0.0
                }
            }
            Law::FallingTriangle { c } => {
                if y <= *c {
                    2.0 * (c - y) / (c * c)
                } else {
                    0.0
                }
            }
            Law::PointMass { at } => {
                if y == *at {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Law::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, l)| w * l.pdf(y))
                .sum(),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self {
            Law::Exponential { rate } => 1.0 - (-rate * y).exp(),
            Law::Gamma { shape, rate } => gamma_cdf(*shape, rate * y),
            Law::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law::RisingTriangle { c } => (y / c).min(1.0).powi(2),
            Law::FallingTriangle { c } => 1.0 - (1.0 - (y / c).min(1.0)).powi(2),
            Law::PointMass { at } => {
                if y >= *at {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, l)| w * l.cdf(y))
                .sum(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Law::Exponential { rate } => 1.0 / rate,
            Law::Gamma { shape, rate } => f64::from(*shape) / rate,
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
            Law::RisingTriangle { c } => 2.0 * c / 3.0,
            Law::FallingTriangle { c } => c / 3.0,
            Law::PointMass { at } => *at,
            Law::Mixture {
                weights,
                components,
            } => weights
                .iter()
                .zip(components)
                .map(|(w, l)| w * l.mean())
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Law::Exponential { rate } => exp_sample(rng, *rate),
            Law::Gamma { shape, rate } => (0..*shape).map(|_| exp_sample(rng, *rate)).sum(),
            Law::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Law::RisingTriangle { c } => c * rng.random::<f64>().sqrt(),
            Law::FallingTriangle { c } => c * (1.0 - rng.random::<f64>().sqrt()),
            Law::PointMass { at } => *at,
            Law::Mixture {
                weights,
                components,
            } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, l) in weights.iter().zip(components) {
                    acc += w;
                    if u < acc {
                        return l.sample(rng);
                    }
                }
                components.last().expect("nonempty mixture").sample(rng)
            }
        }
    }
}

/// Life-length law of one type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LifeLaw {
    Exponential {
        rate: f64,
    },
    /// Uniform on `(0, c)`.
    Uniform {
        c: f64,
    },
    Deterministic {
        c: f64,
    },
    /// Gamma with shape 2.
    GammaShape2 {
        rate: f64,
    },
}

impl LifeLaw {
    pub fn validate(&self) -> Result<()> {
        let p = match self {
            LifeLaw::Exponential { rate } | LifeLaw::GammaShape2 { rate } => *rate,
            LifeLaw::Uniform { c } | LifeLaw::Deterministic { c } => *c,
        };
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            invalid(format!(
                "life-length parameter must be positive and finite, got {p}"
            ))
        }
    }

    pub fn law(&self) -> Law {
        match *self {
            LifeLaw::Exponential { rate } => Law::Exponential { rate },
            LifeLaw::Uniform { c } => Law::Uniform { lo: 0.0, hi: c },
            LifeLaw::Deterministic { c } => Law::PointMass { at: c },
            LifeLaw::GammaShape2 { rate } => Law::Gamma { shape: 2, rate },
        }
    }

    pub fn mean(&self) -> f64 {
        self.law().mean()
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            LifeLaw::Exponential { rate } => 2.0 / (rate * rate),
            LifeLaw::Uniform { c } => c * c / 3.0,
            LifeLaw::Deterministic { c } => c * c,
            LifeLaw::GammaShape2 { rate } => 6.0 / (rate * rate),
        }
    }

    /// `P[y, ∞)`.
    pub fn survival(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        match *self {
            LifeLaw::Exponential { rate } => (-rate * y).exp(),
            LifeLaw::Uniform { c } => (1.0 - y / c).max(0.0),
            LifeLaw::Deterministic { c } => {
                if y <= c {
                    1.0
                } else {
                    0.0
                }
            }
            LifeLaw::GammaShape2 { rate } => (1.0 + rate * y) * (-rate * y).exp(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.law().sample(rng)
    }

    /// Point beyond which the law has negligible mass (or the end of its support).
    fn upper(&self) -> f64 {
        match *self {
            LifeLaw::Exponential { rate } => 45.0 / rate,
            LifeLaw::GammaShape2 { rate } => 50.0 / rate,
            LifeLaw::Uniform { c } | LifeLaw::Deterministic { c } => c,
        }
    }

    /// `E h(L)` by Simpson quadrature against the density.
    pub fn expect(&self, h: impl Fn(f64) -> f64) -> f64 {
        match *self {
            LifeLaw::Deterministic { c } => h(c),
            _ => {
                let law = self.law();
                simpson(|y| law.pdf(y) * h(y), 0.0, self.upper(), 20_000)
            }
        }
    }

    /// `∫₀^∞ f(t) P[t, ∞) dt` by Simpson quadrature.
    pub fn integrate_survival(&self, f: impl Fn(f64) -> f64) -> f64 {
        simpson(|t| f(t) * self.survival(t), 0.0, self.upper(), 20_000)
    }
}

/// The forward-recurrence law `P̆_L(dy) = P_L[y,∞) dy / m_L`.
pub fn excess_life_distribution(life: &LifeLaw) -> Law {
    match *life {
        LifeLaw::Exponential { rate } => Law::Exponential { rate },
        LifeLaw::Uniform { c } => Law::FallingTriangle { c },
        LifeLaw::Deterministic { c } => Law::Uniform { lo: 0.0, hi: c },
        // (1 + λy)e^{−λy}·λ/2 = ½ Exp(λ) + ½ Gamma(2, λ)
        LifeLaw::GammaShape2 { rate } => Law::Mixture {
            weights: vec![0.5, 0.5],
            components: vec![Law::Exponential { rate }, Law::Gamma { shape: 2, rate }],
        },
    }
}

/// The size-biased law `P̊_L(dy) = y P_L(dy) / m_L`.
pub fn size_biased_distribution(life: &LifeLaw) -> Law {
    match *life {
        LifeLaw::Exponential { rate } => Law::Gamma { shape: 2, rate },
        LifeLaw::Uniform { c } => Law::RisingTriangle { c },
        LifeLaw::Deterministic { c } => Law::PointMass { at: c },
        LifeLaw::GammaShape2 { rate } => Law::Gamma { shape: 3, rate },
    }
}

/// Law of the birth-rate level `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateLaw {
    Fixed { value: f64 },
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl RateLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RateLaw::Fixed { value } => value >= 0.0 && value.is_finite(),
            RateLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            RateLaw::Uniform { lo, hi } => lo >= 0.0 && hi >= lo && hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("invalid birth-rate level law {self:?}"))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            RateLaw::Fixed { value } => value,
            RateLaw::Exponential { mean } => mean,
            RateLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            RateLaw::Fixed { value } => value * value,
            RateLaw::Exponential { mean } => 2.0 * mean * mean,
            RateLaw::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RateLaw::Fixed { value } => value,
            RateLaw::Exponential { mean } => mean * rng.sample::<f64, _>(Exp1),
            RateLaw::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// The law of `f·β`.
    pub fn scaled(&self, f: f64) -> RateLaw {
        match *self {
            RateLaw::Fixed { value } => RateLaw::Fixed { value: f * value },
            RateLaw::Exponential { mean } => RateLaw::Exponential { mean: f * mean },
            RateLaw::Uniform { lo, hi } => RateLaw::Uniform {
                lo: f * lo,
                hi: f * hi,
            },
        }
    }
}

/// Age profile `g` of the birth rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgeProfile {
    Constant,
    /// `e^{−κt}`.
    ExpDecay {
        kappa: f64,
    },
    /// `κ² t e^{−κt}`, normalized to unit integral over `[0, ∞)`.
    Hump {
        kappa: f64,
    },
}

impl AgeProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AgeProfile::Constant => Ok(()),
            AgeProfile::ExpDecay { kappa } | AgeProfile::Hump { kappa } => {
                if kappa > 0.0 && kappa.is_finite() {
                    Ok(())
                } else {
                    invalid(format!("age-profile rate must be positive, got {kappa}"))
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            AgeProfile::Constant => 1.0,
            AgeProfile::ExpDecay { kappa } => (-kappa * t).exp(),
            AgeProfile::Hump { kappa } => kappa * kappa * t * (-kappa * t).exp(),
        }
    }

    /// `G(y) = ∫₀^y g`.
    pub fn integral(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match *self {
            AgeProfile::Constant => y,
            AgeProfile::ExpDecay { kappa } => -(-kappa * y).exp_m1() / kappa,
            AgeProfile::Hump { kappa } => {
                let x = kappa * y;
                -(-x).exp_m1() - x * (-x).exp()
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            AgeProfile::Constant | AgeProfile::ExpDecay { .. } => 1.0,
            AgeProfile::Hump { kappa } => kappa / std::f64::consts::E,
        }
    }
}

/// `B(t, y) = β·g(t)·1_{t<y}` with random level `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BirthRateLaw {
    pub beta: RateLaw,
    pub profile: AgeProfile,
}

impl BirthRateLaw {
    pub fn constant(beta: f64) -> Self {
        BirthRateLaw {
            beta: RateLaw::Fixed { value: beta },
            profile: AgeProfile::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.beta.validate()?;
        self.profile.validate()
    }

    pub fn rate(&self, beta: f64, t: f64, life: f64) -> f64 {
        if t < life {
            beta * self.profile.value(t)
        } else {
            0.0
        }
    }

    /// `∫ B(s, y) ds` over ages `s ∈ [lo, hi] ∩ [0, y)`.
    pub fn integral(&self, beta: f64, lo: f64, hi: f64, life: f64) -> f64 {
        let hi = hi.min(life);
        if hi <= lo {
            return 0.0;
        }
        beta * (self.profile.integral(hi) - self.profile.integral(lo))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringAtom {
    pub prob: f64,
    pub counts: Vec<u32>,
}

/// A probability mass function on `N^d` with finite support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringPmf {
    pub atoms: Vec<OffspringAtom>,
}

impl OffspringPmf {
    /// `δ_k` for a single type.
    pub fn point(counts: &[u32]) -> Self {
        OffspringPmf {
            atoms: vec![OffspringAtom {
                prob: 1.0,
                counts: counts.to_vec(),
            }],
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.atoms.is_empty() {
            return invalid("an offspring pmf needs at least one atom");
        }
        let mut total = 0.0;
        for a in &self.atoms {
            if a.counts.len() != d {
                return invalid(format!(
                    "offspring atoms need {d} counts, got {}",
                    a.counts.len()
                ));
            }
            if !(a.prob >= 0.0) {
                return invalid("offspring probabilities must be nonnegative");
            }
            total += a.prob;
        }
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("offspring probabilities sum to {total}, not 1"));
        }
        Ok(())
    }

    /// `Σ_k k_i p(k)`.
    pub fn mean(&self, i: usize) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.prob * f64::from(a.counts[i]))
            .sum()
    }

    /// `Σ_k k_i² p(k)`.
    pub fn second_moment(&self, i: usize) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.prob * f64::from(a.counts[i]).powi(2))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[u32] {
        &self.atoms[self.sample_index(rng)].counts
    }

    fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.atoms.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, a) in self.atoms.iter().enumerate() {
            acc += a.prob;
            if u < acc {
                return k;
            }
        }
        self.atoms.len() - 1
    }
}

/// Characteristic `T(t, y)` of an individual at age `t` with life `y`;
/// zero at negative ages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Characteristic {
    /// `1_{y > t}`.
    Alive,
    /// `1_{t ∈ [0, η∧y)}`.
    Young { eta: f64 },
    /// `1_{η ≤ t < y}`.
    Old { eta: f64 },
    /// `1_{0 < y − t ≤ η}`.
    ShortResidual { eta: f64 },
    /// `1_{t ≥ 0}`.
    TotalProgeny,
    /// `t ∧ y`.
    IntegratedPopulation,
    /// An instantaneous response `scale·shape(t)·1_{t<y}`, or a cumulative
    /// one `scale·∫₀^{t∧y} shape`.
    Response { response: ResponseFunction },
}

impl Characteristic {
    pub fn eval(&self, t: f64, y: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Characteristic::Alive => ind(y > t),
            Characteristic::Young { eta } => ind(t < eta.min(y)),
            Characteristic::Old { eta } => ind(*eta <= t && t < y),
            Characteristic::ShortResidual { eta } => ind(y - t > 0.0 && y - t <= *eta),
            Characteristic::TotalProgeny => 1.0,
            Characteristic::IntegratedPopulation => t.min(y),
            Characteristic::Response { response } => match response.kind {
                ResponseKind::Instantaneous => {
                    if t < y {
                        response.scale * response.profile(t)
                    } else {
                        0.0
                    }
                }
                ResponseKind::Cumulative => response.scale * response.profile(t.min(y)),
            },
        }
    }
}

fn alive() -> Vec<Characteristic> {
    Vec::new()
}

/// A multi-type CMJ model with immigration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CMJModel {
    pub d: usize,
    pub life: Vec<LifeLaw>,
    pub birth: Vec<BirthRateLaw>,
    /// `offspring[j]` is the pmf of the offspring vector of a type-`j` mother.
    pub offspring: Vec<OffspringPmf>,
    pub immigration: OffspringPmf,
    pub immigration_rate: f64,
    /// Per-type characteristic; empty means the alive count for every type.
    #[serde(default = "alive", skip_serializing_if = "Vec::is_empty")]
    pub characteristics: Vec<Characteristic>,
}

impl CMJModel {
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return invalid("a CMJ model needs at least one type");
        }
        if self.life.len() != d || self.birth.len() != d || self.offspring.len() != d {
            return invalid(format!(
                "life, birth and offspring laws need {d} entries each"
            ));
        }
        if !self.characteristics.is_empty() && self.characteristics.len() != d {
            return invalid(format!("characteristics need {d} entries (or none)"));
        }
        for l in &self.life {
            l.validate()?;
        }
        for b in &self.birth {
            b.validate()?;
        }
        for p in &self.offspring {
            p.validate(d)?;
        }
        self.immigration.validate(d)?;
        if !(self.immigration_rate >= 0.0 && self.immigration_rate.is_finite()) {
            return invalid("immigration rate must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn characteristic(&self, i: usize) -> Characteristic {
        self.characteristics
            .get(i)
            .cloned()
            .unwrap_or(Characteristic::Alive)
    }

    /// `m_{L,i}`.
    pub fn mean_life(&self, i: usize) -> f64 {
        self.life[i].mean()
    }

    /// `m_ij = Σ_k k_i p_j(k)`, the mean number of type-`i` offspring per
    /// reproduction date of a type-`j` mother.
    pub fn mean_offspring(&self, i: usize, j: usize) -> f64 {
        self.offspring[j].mean(i)
    }

    /// `‖B_i‖_{L¹} = E[β] E[G(L)]`, the mean number of reproduction dates.
    pub fn birth_mass(&self, i: usize) -> f64 {
        let b = &self.birth[i];
        b.beta.mean() * self.life[i].expect(|y| b.profile.integral(y))
    }

    /// `v_{B,i} = E[β²] E[G(L)²]`.
    pub fn birth_second_moment(&self, i: usize) -> f64 {
        let b = &self.birth[i];
        b.beta.second_moment() * self.life[i].expect(|y| b.profile.integral(y).powi(2))
    }

    /// `d_{B,i} = ∫ t B_i(t) dt` with mean birth rate `B_i(t) = E[β] g(t) P[t,∞)`.
    pub fn birth_first_moment(&self, i: usize) -> f64 {
        let b = &self.birth[i];
        b.beta.mean() * self.life[i].integrate_survival(|t| t * b.profile.value(t))
    }

    /// `‖B_i‖ · m_ij`, the mean children matrix of the reproduction-date process.
    pub fn mean_children_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.d)
            .map(|i| {
                (0..self.d)
                    .map(|j| self.birth_mass(i) * self.mean_offspring(i, j))
                    .collect()
            })
            .collect()
    }
}

/// Where an individual came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Ancestor,
    Immigrant,
    Offspring { parent: usize },
}

/// One individual; ancestors carry a negative birth time `−A` with `A` their
/// age at time 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Individual {
    pub kind: usize,
    pub birth: f64,
    pub life: f64,
    pub beta: f64,
    pub origin: Origin,
}

impl Individual {
    pub fn age(&self, t: f64) -> f64 {
        t - self.birth
    }

    pub fn is_alive(&self, t: f64) -> bool {
        let a = self.age(t);
        a >= 0.0 && a < self.life
    }
}

/// A reproduction date of individual `parent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reproduction {
    pub time: f64,
    pub parent: usize,
}

/// Everything that happened on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationLog {
    pub horizon: f64,
    pub model: CMJModel,
    pub individuals: Vec<Individual>,
    /// In time order.
    pub reproductions: Vec<Reproduction>,
    pub immigrations: Vec<f64>,
}

impl PopulationLog {
    pub fn reproduction_type(&self, r: &Reproduction) -> usize {
        self.individuals[r.parent].kind
    }

    /// CSV rows `id,type,birth,life,origin,parent`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,type,birth,life,origin,parent\n");
        for (k, x) in self.individuals.iter().enumerate() {
            let (origin, parent) = match x.origin {
                Origin::Ancestor => ("ancestor", String::new()),
                Origin::Immigrant => ("immigrant", String::new()),
                Origin::Offspring { parent } => ("offspring", parent.to_string()),
            };
            s.push_str(&format!(
                "{k},{},{:.16e},{:.16e},{origin},{parent}\n",
                x.kind, x.birth, x.life
            ));
        }
        s
    }
}

/// How ancestors are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncestorInit {
    /// Age and residual life drawn jointly from `m_L⁻¹ dt P_L(t + dy)`.
    #[default]
    Excess,
    /// Newborn ancestors (age 0, fresh life).
    Fresh,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmjOptions {
    pub population_cap: usize,
    pub ancestors: AncestorInit,
}

impl Default for CmjOptions {
    fn default() -> Self {
        CmjOptions {
            population_cap: DEFAULT_POPULATION_CAP,
            ancestors: AncestorInit::Excess,
        }
    }
}

/// Ancestors with `(age, residual life)` drawn by taking a size-biased life
/// `L` and splitting it at a uniform point.
pub fn init_ancestors_excess<R: Rng + ?Sized>(
    model: &CMJModel,
    x0: &[usize],
    rng: &mut R,
) -> Result<Vec<Individual>> {
    init_ancestors(model, x0, AncestorInit::Excess, rng)
}

fn init_ancestors<R: Rng + ?Sized>(
    model: &CMJModel,
    x0: &[usize],
    how: AncestorInit,
    rng: &mut R,
) -> Result<Vec<Individual>> {
    if x0.len() != model.d {
        return invalid(format!(
            "need {} ancestor counts, got {}",
            model.d,
            x0.len()
        ));
    }
    let mut out = Vec::with_capacity(x0.iter().sum());
    for (i, &k) in x0.iter().enumerate() {
        let biased = size_biased_distribution(&model.life[i]);
        for _ in 0..k {
            let (age, life) = match how {
                AncestorInit::Excess => {
                    let l = biased.sample(rng);
                    (rng.random::<f64>() * l, l)
                }
                AncestorInit::Fresh => (0.0, model.life[i].sample(rng)),
            };
            out.push(Individual {
                kind: i,
                birth: -age,
                life,
                beta: model.birth[i].beta.sample(rng),
                origin: Origin::Ancestor,
            });
        }
    }
    Ok(out)
}

#[derive(PartialEq)]
struct Pending {
    time: f64,
    seq: u64,
    parent: usize,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, seq)
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Sim<'a, R: Rng + ?Sized> {
    model: &'a CMJModel,
    horizon: f64,
    rng: &'a mut R,
    heap: BinaryHeap<Pending>,
    seq: u64,
    individuals: Vec<Individual>,
    cap: usize,
}

impl<R: Rng + ?Sized> Sim<'_, R> {
    /// Adds `x` and schedules its reproduction dates in `[0, T]` by thinning
    /// against `β·sup g`.
    fn admit(&mut self, x: Individual) -> Result<()> {
        let id = self.individuals.len();
        if id >= self.cap {
            return Err(Error::PopulationCap {
                cap: self.cap,
                t: x.birth.max(0.0),
            });
        }
        self.individuals.push(x);
        let law = &self.model.birth[x.kind];
        let bound = x.beta * law.profile.sup();
        if bound <= 0.0 {
            return Ok(());
        }
        let end = x.life.min(self.horizon - x.birth);
        let mut age = (-x.birth).max(0.0);
        let constant = matches!(law.profile, AgeProfile::Constant);
        loop {
            age += exp_sample(self.rng, bound);
            if age >= end {
                break;
            }
            if constant || self.rng.random::<f64>() * bound < law.rate(x.beta, age, x.life) {
                self.seq += 1;
                self.heap.push(Pending {
                    time: x.birth + age,
                    seq: self.seq,
                    parent: id,
                });
            }
        }
        Ok(())
    }

    fn spawn(&mut self, t: f64, pmf: &OffspringPmf, origin: Origin) -> Result<()> {
        let atom = pmf.sample_index(self.rng);
        for (i, &k) in pmf.atoms[atom].counts.iter().enumerate() {
            for _ in 0..k {
                let x = Individual {
                    kind: i,
                    birth: t,
                    life: self.model.life[i].sample(self.rng),
                    beta: self.model.birth[i].beta.sample(self.rng),
                    origin,
                };
                self.admit(x)?;
            }
        }
        Ok(())
    }
}

/// Simulates the population on `[0, T]` from `x0` ancestors.
pub fn simulate_cmj_with<R: Rng + ?Sized>(
    model: &CMJModel,
    x0: &[usize],
    horizon: f64,
    rng: &mut R,
    opts: &CmjOptions,
) -> Result<PopulationLog> {
    model.validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return invalid(format!("horizon must be positive, got {horizon}"));
    }
    let ancestors = init_ancestors(model, x0, opts.ancestors, rng)?;
    let mut sim = Sim {
        model,
        horizon,
        rng,
        heap: BinaryHeap::new(),
        seq: 0,
        individuals: Vec::with_capacity(ancestors.len()),
        cap: opts.population_cap,
    };
    for a in ancestors {
        sim.admit(a)?;
    }
    let lam = model.immigration_rate;
    let mut next_imm = if lam > 0.0 {
        exp_sample(sim.rng, lam)
    } else {
        f64::INFINITY
    };
    let mut reproductions = Vec::new();
    let mut immigrations = Vec::new();
    loop {
        let next_rep = sim.heap.peek().map_or(f64::INFINITY, |p| p.time);
        if next_rep.min(next_imm) > horizon {
            break;
        }
        if next_imm < next_rep {
            let t = next_imm;
            immigrations.push(t);
            sim.spawn(t, &model.immigration, Origin::Immigrant)?;
            next_imm = t + exp_sample(sim.rng, lam);
        } else {
            let p = sim.heap.pop().expect("peeked");
            reproductions.push(Reproduction {
                time: p.time,
                parent: p.parent,
            });
            let mother = sim.individuals[p.parent].kind;
            sim.spawn(
                p.time,
                &model.offspring[mother],
                Origin::Offspring { parent: p.parent },
            )?;
        }
    }
    Ok(PopulationLog {
        horizon,
        model: model.clone(),
        individuals: sim.individuals,
        reproductions,
        immigrations,
    })
}

/// Simulates with excess-initialized ancestors and a seeded stream.
pub fn simulate_cmj(
    model: &CMJModel,
    x0: &[usize],
    horizon: f64,
    seed: u64,
) -> Result<PopulationLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_cmj_with(model, x0, horizon, &mut rng, &CmjOptions::default())
}

fn check_grid(log: &PopulationLog, grid: &[f64]) -> Result<()> {
    match grid.iter().find(|t| !(**t >= 0.0) || **t > log.horizon) {
        Some(&t) => Err(Error::OutOfRange {
            t,
            horizon: log.horizon,
        }),
        None => Ok(()),
    }
}

/// `T_i(t) = Σ_{x ∈ I_i} T(t − τ_x, ℓ_x)` for `ch` on `grid`. Ancestors
/// enter with their age at time 0 included, so cumulative characteristics
/// count what they accrued before 0.
pub fn characteristic_path(
    log: &PopulationLog,
    i: usize,
    ch: &Characteristic,
    grid: &[f64],
) -> Result<Vec<f64>> {
    check_grid(log, grid)?;
    if i >= log.model.d {
        return invalid(format!("type {i} out of range"));
    }
    Ok(grid
        .iter()
        .map(|&t| {
            log.individuals
                .iter()
                .filter(|x| x.kind == i && x.birth <= t)
                .map(|x| ch.eval(x.age(t), x.life))
                .sum()
        })
        .collect())
}

/// `B_i(t) = Σ_x B_x(t − τ_x, ℓ_x)`; `out[g][i]`.
pub fn total_birth_rate_path(log: &PopulationLog, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_grid(log, grid)?;
    let d = log.model.d;
    Ok(grid
        .iter()
        .map(|&t| {
            let mut b = vec![0.0; d];
            for x in log.individuals.iter().filter(|x| x.is_alive(t)) {
                b[x.kind] += log.model.birth[x.kind].rate(x.beta, x.age(t), x.life);
            }
            b
        })
        .collect())
}

/// `N_i(t) − ∫₀^t B_i(s) ds`, with `N_i` counting reproduction dates of
/// type-`i` mothers; `out[g][i]`.
pub fn birth_compensator_residual(log: &PopulationLog, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    check_grid(log, grid)?;
    let d = log.model.d;
    Ok(grid
        .iter()
        .map(|&t| {
            let mut r = vec![0.0; d];
            for rep in log.reproductions.iter().take_while(|r| r.time <= t) {
                r[log.reproduction_type(rep)] += 1.0;
            }
            for x in log.individuals.iter().filter(|x| x.birth <= t) {
                let lo = (-x.birth).max(0.0);
                r[x.kind] -= log.model.birth[x.kind].integral(x.beta, lo, x.age(t), x.life);
            }
            r
        })
        .collect())
}

/// Weighted atoms on `R_+` or `R_+²`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EmpiricalMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl EmpiricalMeasure {
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Projection onto coordinate `k`, as `(location, weight)` pairs.
    pub fn marginal(&self, k: usize) -> Vec<(f64, f64)> {
        self.atoms.iter().map(|(x, w)| (x[k], *w)).collect()
    }

    pub fn to_csv(&self) -> String {
        let dim = self.atoms.first().map_or(0, |(x, _)| x.len());
        let mut s = String::new();
        for k in 0..dim {
            s.push_str(&format!("loc_{k},"));
        }
        s.push_str("weight\n");
        for (x, w) in &self.atoms {
            for v in x {
                s.push_str(&format!("{v:.16e},"));
            }
            s.push_str(&format!("{w:.16e}\n"));
        }
        s
    }
}

/// Unit atoms at `(age, residual life)` of every type-`i` individual alive at `t`.
pub fn population_structure(log: &PopulationLog, i: usize, t: f64) -> Result<EmpiricalMeasure> {
    check_grid(log, &[t])?;
    Ok(EmpiricalMeasure {
        atoms: log
            .individuals
            .iter()
            .filter(|x| x.kind == i && x.is_alive(t))
            .map(|x| (vec![x.age(t), x.life - x.age(t)], 1.0))
            .collect(),
    })
}

/// Unit atoms at the life length of every type-`i` individual alive at `t`.
pub fn life_structure(log: &PopulationLog, i: usize, t: f64) -> Result<EmpiricalMeasure> {
    check_grid(log, &[t])?;
    Ok(EmpiricalMeasure {
        atoms: log
            .individuals
            .iter()
            .filter(|x| x.kind == i && x.is_alive(t))
            .map(|x| (vec![x.life], 1.0))
            .collect(),
    })
}

/// Limits of the model-sequence quantities entering the CBI parameter map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmjLimitInputs {
    pub d: usize,
    /// `X*_i(0) = lim X^{(n)}_i(0)/n`.
    pub x0: Vec<f64>,
    /// `m*_{L,i}`.
    pub mean_life: Vec<f64>,
    /// `m*_{ii}`.
    pub m_diag: Vec<f64>,
    /// `m*_{iI}`, mean immigrants per batch.
    pub m_imm: Vec<f64>,
    pub immigration_rate: f64,
    /// `b*_{ii} = lim n(‖B_i‖m_ii − 1)` on the diagonal and
    /// `b*_{ij} = lim n·m_ij ≥ 0` off it.
    pub b_star: Vec<Vec<f64>>,
    /// `v*_{ii}`.
    pub v_diag: Vec<f64>,
    /// `v*_{B,i}`.
    pub v_birth: Vec<f64>,
    /// `d*_{B,i}`.
    pub d_birth: Vec<f64>,
}

/// The limit diffusion of `B^{(n)}(nt)/n`:
///
/// ```text
/// Z_i(0) = X*_i/(m*_L m*_ii),  a_i = λ_I m*_iI/m*_ii,  σ_i = d*_B m*_ii,
/// b_ii = −b*_ii,  b_ij = −b*_ij/m*_ii (i ≠ j),
/// c_i = ½ (v*_B m*_ii + (v*_ii − m*_ii)/m*_ii²),
/// ```
///
/// where `b` and `c` follow the same conventions as the Hawkes schedule:
/// `n(1 − ‖φ_ii‖) → b_ii` and `∫‖φ_i(u)‖² ν_i(du) → 2c_i`.
pub fn cmj_limit_params(x: &CmjLimitInputs) -> Result<CBIParams> {
    let d = x.d;
    for (name, v) in [
        ("x0", &x.x0),
        ("mean_life", &x.mean_life),
        ("m_diag", &x.m_diag),
        ("m_imm", &x.m_imm),
        ("v_diag", &x.v_diag),
        ("v_birth", &x.v_birth),
        ("d_birth", &x.d_birth),
    ] {
        if v.len() != d {
            return invalid(format!("{name}: expected {d} entries, got {}", v.len()));
        }
    }
    if x.b_star.len() != d || x.b_star.iter().any(|r| r.len() != d) {
        return invalid(format!("b_star: must be a {d}x{d} matrix"));
    }
    for i in 0..d {
        if !(x.m_diag[i] > 0.0) {
            return invalid(format!("m_diag[{i}]: must be > 0, got {}", x.m_diag[i]));
        }
        if !(x.mean_life[i] > 0.0) {
            return invalid(format!(
                "mean_life[{i}]: must be > 0, got {}",
                x.mean_life[i]
            ));
        }
    }
    let m = &x.m_diag;
    let p = CBIParams {
        d,
        a: (0..d)
            .map(|i| x.immigration_rate * x.m_imm[i] / m[i])
            .collect(),
        b: (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        if i == j {
                            -x.b_star[i][i]
                        } else {
                            -x.b_star[i][j] / m[i]
                        }
                    })
                    .collect()
            })
            .collect(),
        sigma: (0..d).map(|i| x.d_birth[i] * m[i]).collect(),
        c: (0..d)
            .map(|i| 0.5 * (x.v_birth[i] * m[i] + (x.v_diag[i] - m[i]) / (m[i] * m[i])))
            .collect(),
        z0: (0..d).map(|i| x.x0[i] / (x.mean_life[i] * m[i])).collect(),
    };
    p.validate()?;
    Ok(p)
}

/// A near-critical CMJ sequence: life laws, age profiles and offspring laws
/// are fixed, and the birth-rate level is scaled so that
/// `‖B^{(n)}_i‖ m_ii = 1 − b_ii/n`. Offspring of other types are not produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmjSchedule {
    pub d: usize,
    pub life: Vec<LifeLaw>,
    pub profile: Vec<AgeProfile>,
    /// Shape of the level law; only its relative spread matters.
    pub beta: Vec<RateLaw>,
    /// Per-type offspring count law, own type only: `(k, prob)` pairs.
    pub offspring: Vec<Vec<(u32, f64)>>,
    pub immigration: OffspringPmf,
    #[serde(default = "unit_rate")]
    pub immigration_rate: f64,
    /// Target drift diagonal `b_ii`.
    pub b: Vec<f64>,
    /// Target initial state `Z(0)`.
    pub z0: Vec<f64>,
    #[serde(default)]
    pub ancestors: AncestorInit,
}

fn unit_rate() -> f64 {
    1.0
}

impl CmjSchedule {
    /// Single type, one child per reproduction date, one immigrant per batch.
    pub fn single_type(life: LifeLaw, profile: AgeProfile, b: f64, z0: f64) -> Self {
        CmjSchedule {
            d: 1,
            life: vec![life],
            profile: vec![profile],
            beta: vec![RateLaw::Fixed { value: 1.0 }],
            offspring: vec![vec![(1, 1.0)]],
            immigration: OffspringPmf::point(&[1]),
            immigration_rate: 1.0,
            b: vec![b],
            z0: vec![z0],
            ancestors: AncestorInit::Excess,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let d = self.d;
        let mut errs = Vec::new();
        if d == 0 {
            return vec!["d: must be at least 1".into()];
        }
        for (name, len) in [
            ("life", self.life.len()),
            ("profile", self.profile.len()),
            ("beta", self.beta.len()),
            ("offspring", self.offspring.len()),
            ("b", self.b.len()),
            ("z0", self.z0.len()),
        ] {
            if len != d {
                errs.push(format!("{name}: expected {d} entries, got {len}"));
            }
        }
        if !errs.is_empty() {
            return errs;
        }
        for i in 0..d {
            if let Err(e) = self.life[i].validate() {
                errs.push(format!("life[{i}]: {e}"));
            }
            if let Err(e) = self.profile[i].validate() {
                errs.push(format!("profile[{i}]: {e}"));
            }
            if let Err(e) = self.beta[i].validate() {
                errs.push(format!("beta[{i}]: {e}"));
            }
            if self.beta[i].mean() <= 0.0 {
                errs.push(format!(
                    "beta[{i}]: the level law must have a positive mean"
                ));
            }
            let total: f64 = self.offspring[i].iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 || self.offspring[i].iter().any(|(_, p)| !(*p >= 0.0)) {
                errs.push(format!(
                    "offspring[{i}]: probabilities must be nonnegative and sum to 1"
                ));
            }
            if self.offspring[i]
                .iter()
                .map(|(k, p)| f64::from(*k) * p)
                .sum::<f64>()
                <= 0.0
            {
                errs.push(format!("offspring[{i}]: mean offspring must be positive"));
            }
            if !(self.z0[i] >= 0.0 && self.z0[i].is_finite()) {
                errs.push(format!("z0[{i}]: must be finite and >= 0"));
            }
            if !self.b[i].is_finite() {
                errs.push(format!("b[{i}]: must be finite"));
            }
        }
        if let Err(e) = self.immigration.validate(d) {
            errs.push(format!("immigration: {e}"));
        }
        if !(self.immigration_rate >= 0.0 && self.immigration_rate.is_finite()) {
            errs.push("immigration_rate: must be finite and >= 0".into());
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            invalid(v.join("; "))
        }
    }

    fn offspring_pmf(&self, i: usize) -> OffspringPmf {
        OffspringPmf {
            atoms: self.offspring[i]
                .iter()
                .map(|&(k, prob)| {
                    let mut counts = vec![0; self.d];
                    counts[i] = k;
                    OffspringAtom { prob, counts }
                })
                .collect(),
        }
    }

    /// The model with levels scaled so that `‖B_i‖ m_ii = target_i`.
    fn model_with(&self, target: impl Fn(usize) -> f64) -> Result<CMJModel> {
        self.validate()?;
        let d = self.d;
        let mut m = CMJModel {
            d,
            life: self.life.clone(),
            birth: (0..d)
                .map(|i| BirthRateLaw {
                    beta: self.beta[i].clone(),
                    profile: self.profile[i].clone(),
                })
                .collect(),
            offspring: (0..d).map(|i| self.offspring_pmf(i)).collect(),
            immigration: self.immigration.clone(),
            immigration_rate: self.immigration_rate,
            characteristics: Vec::new(),
        };
        for i in 0..d {
            let t = target(i);
            if t < 0.0 {
                return invalid(format!(
                    "type {i}: the requested b makes the birth-rate level negative"
                ));
            }
            let now = m.birth_mass(i) * m.mean_offspring(i, i);
            m.birth[i].beta = m.birth[i].beta.scaled(t / now);
        }
        Ok(m)
    }

    /// Limit model at `n = ∞` (exactly critical).
    pub fn critical_model(&self) -> Result<CMJModel> {
        self.model_with(|_| 1.0)
    }

    /// `X^{(n)}(0) = round(n · Z(0) · m_L · m_ii)`.
    pub fn ancestors(&self, n: f64) -> Result<Vec<usize>> {
        let m = self.critical_model()?;
        Ok((0..self.d)
            .map(|i| (n * self.z0[i] * m.mean_life(i) * m.mean_offspring(i, i)).round() as usize)
            .collect())
    }

    /// The `n`-th model and its ancestor counts.
    pub fn build(&self, n: f64) -> Result<(CMJModel, Vec<usize>)> {
        if !(n >= 1.0) {
            return invalid(format!("n must be at least 1, got {n}"));
        }
        let model = self.model_with(|i| 1.0 - self.b[i] / n)?;
        Ok((model, self.ancestors(n)?))
    }

    /// Limit inputs evaluated on the critical model.
    pub fn limit_inputs(&self) -> Result<CmjLimitInputs> {
        let m = self.critical_model()?;
        let d = self.d;
        let m_diag: Vec<f64> = (0..d).map(|i| m.mean_offspring(i, i)).collect();
        let x0: Vec<f64> = (0..d)
            .map(|i| self.z0[i] * m.mean_life(i) * m_diag[i])
            .collect();
        Ok(CmjLimitInputs {
            d,
            x0,
            mean_life: (0..d).map(|i| m.mean_life(i)).collect(),
            m_imm: (0..d).map(|i| self.immigration.mean(i)).collect(),
            immigration_rate: self.immigration_rate,
            b_star: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| if i == j { -self.b[i] } else { 0.0 })
                        .collect()
                })
                .collect(),
            v_diag: (0..d)
                .map(|i| self.offspring_pmf(i).second_moment(i))
                .collect(),
            v_birth: (0..d).map(|i| m.birth_second_moment(i)).collect(),
            d_birth: (0..d).map(|i| m.birth_first_moment(i)).collect(),
            m_diag,
        })
    }

    pub fn limit_params(&self) -> Result<CBIParams> {
        cmj_limit_params(&self.limit_inputs()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ks_one_sample;

    fn simple(beta: f64, life: LifeLaw) -> CMJModel {
        CMJModel {
            d: 1,
            life: vec![life],
            birth: vec![BirthRateLaw::constant(beta)],
            offspring: vec![OffspringPmf::point(&[1])],
            immigration: OffspringPmf::point(&[1]),
            immigration_rate: 0.0,
            characteristics: Vec::new(),
        }
    }

    #[test]
    fn childless_ancestors_stay_put() {
        let mut m = simple(2.0, LifeLaw::Exponential { rate: 1.0 });
        m.offspring = vec![OffspringPmf::point(&[0])];
        let log = simulate_cmj(&m, &[7], 50.0, 1).unwrap();
        assert_eq!(log.individuals.len(), 7);
        assert!(log.individuals.iter().all(|x| x.origin == Origin::Ancestor));
    }

    #[test]
    fn mean_offspring_per_individual_is_beta_times_mean_life() {
        // Exponential(1) life, constant rate 1, one child per date: mean 1.
        let m = simple(1.0, LifeLaw::Exponential { rate: 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = CmjOptions {
            ancestors: AncestorInit::Fresh,
            ..Default::default()
        };
        let mut counts = Vec::new();
        while counts.len() < 100_000 {
            let log = simulate_cmj_with(&m, &[100], 1e6, &mut rng, &opts).unwrap();
            let mut kids = vec![0usize; log.individuals.len()];
            for r in &log.reproductions {
                kids[r.parent] += 1;
            }
            counts.extend(kids.into_iter().map(|k| k as f64));
        }
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 3.0 * (var / n).sqrt(), "mean {mean}");
    }

    #[test]
    fn same_seed_same_population() {
        let mut m = simple(0.9, LifeLaw::GammaShape2 { rate: 2.0 });
        m.immigration_rate = 1.0;
        m.birth[0].profile = AgeProfile::Hump { kappa: 3.0 };
        m.birth[0].beta = RateLaw::Exponential { mean: 1.2 };
        let a = simulate_cmj(&m, &[20], 30.0, 5).unwrap();
        let b = simulate_cmj(&m, &[20], 30.0, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.reproductions.windows(2).all(|w| w[0].time <= w[1].time));
        // every date falls strictly inside the mother's life
        for r in &a.reproductions {
            let x = a.individuals[r.parent];
            assert!(r.time > x.birth && r.time < x.birth + x.life && r.time >= 0.0);
        }
    }

    #[test]
    fn birth_moments_match_closed_forms() {
        // constant profile: ‖B‖ = β m_L, v_B = β² E L², d_B = β E L²/2
        for life in [
            LifeLaw::Exponential { rate: 1.5 },
            LifeLaw::Uniform { c: 2.0 },
            LifeLaw::Deterministic { c: 0.7 },
            LifeLaw::GammaShape2 { rate: 2.0 },
        ] {
            let m = simple(1.3, life.clone());
            let l2 = life.second_moment();
            assert!(
                (m.birth_mass(0) - 1.3 * life.mean()).abs() < 1e-9,
                "{life:?}"
            );
            assert!(
                (m.birth_second_moment(0) - 1.69 * l2).abs() < 1e-9,
                "{life:?}"
            );
            assert!(
                (m.birth_first_moment(0) - 1.3 * l2 / 2.0).abs() < 1e-7,
                "{life:?}"
            );
        }
        // exponential decay against exponential life: E G(L) = 1/(κ + λ)
        let mut m = simple(1.0, LifeLaw::Exponential { rate: 1.0 });
        m.birth[0].profile = AgeProfile::ExpDecay { kappa: 2.0 };
        assert!((m.birth_mass(0) - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn profile_integrals_are_exact() {
        for p in [
            AgeProfile::Constant,
            AgeProfile::ExpDecay { kappa: 0.7 },
            AgeProfile::Hump { kappa: 2.5 },
        ] {
            let q = simpson(|t| p.value(t), 0.0, 3.0, 2000);
            assert!((q - p.integral(3.0)).abs() < 1e-10, "{p:?}");
            let peak = (0..3000)
                .map(|k| p.value(k as f64 * 1e-3))
                .fold(0.0, f64::max);
            assert!(peak <= p.sup() + 1e-12);
        }
        assert!((AgeProfile::Hump { kappa: 1.0 }.integral(200.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derived_laws() {
        let e = excess_life_distribution(&LifeLaw::Exponential { rate: 2.0 });
        assert_eq!(e, Law::Exponential { rate: 2.0 });
        assert_eq!(
            excess_life_distribution(&LifeLaw::Deterministic { c: 3.0 }),
            Law::Uniform { lo: 0.0, hi: 3.0 }
        );
        assert_eq!(
            size_biased_distribution(&LifeLaw::Deterministic { c: 3.0 }),
            Law::PointMass { at: 3.0 }
        );
        let s = size_biased_distribution(&LifeLaw::Exponential { rate: 2.0 });
        assert!((s.mean() - 1.0).abs() < 1e-15);
        let u = LifeLaw::Uniform { c: 1.0 };
        assert!((excess_life_distribution(&u).mean() - 1.0 / 3.0).abs() < 1e-15);
        assert!((size_biased_distribution(&u).mean() - 2.0 / 3.0).abs() < 1e-15);
        assert!((excess_life_distribution(&u).pdf(0.25) - 1.5).abs() < 1e-15);
        assert!((size_biased_distribution(&u).pdf(0.25) - 0.5).abs() < 1e-15);
        // excess density is P[y,∞)/m_L for every family
        for life in [
            LifeLaw::Exponential { rate: 1.5 },
            LifeLaw::Uniform { c: 2.0 },
            LifeLaw::GammaShape2 { rate: 2.0 },
        ] {
            let e = excess_life_distribution(&life);
            for y in [0.1, 0.5, 1.3] {
                assert!(
                    (e.pdf(y) - life.survival(y) / life.mean()).abs() < 1e-12,
                    "{life:?}"
                );
            }
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let xs: Vec<f64> = (0..20_000).map(|_| e.sample(&mut rng)).collect();
            assert!(ks_one_sample(&xs, |y| e.cdf(y)) < 0.015, "{life:?}");
        }
    }

    #[test]
    fn excess_ancestors_have_excess_marginals() {
        let life = LifeLaw::Uniform { c: 1.0 };
        let m = simple(1.0, life.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let anc = init_ancestors_excess(&m, &[100_000], &mut rng).unwrap();
        let ages: Vec<f64> = anc.iter().map(|x| -x.birth).collect();
        let res: Vec<f64> = anc.iter().map(|x| x.life + x.birth).collect();
        let target = excess_life_distribution(&life);
        assert!(ks_one_sample(&ages, |y| target.cdf(y)) < 0.006);
        assert!(ks_one_sample(&res, |y| target.cdf(y)) < 0.006);
        // residual mean is 1/3 within 3 standard errors (sd √(1/18))
        let mean = res.iter().sum::<f64>() / res.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 3.0 * (1.0f64 / 18.0 / 1e5).sqrt());
        // deterministic life: A uniform, R = c − A
        let m = simple(1.0, LifeLaw::Deterministic { c: 2.0 });
        for x in init_ancestors_excess(&m, &[100], &mut rng).unwrap() {
            assert_eq!(x.life, 2.0);
            assert!(x.birth <= 0.0 && x.birth >= -2.0);
        }
    }

    #[test]
    fn presets_on_a_hand_made_log() {
        let m = simple(1.0, LifeLaw::Deterministic { c: 2.0 });
        let log = PopulationLog {
            horizon: 10.0,
            model: m.clone(),
            individuals: vec![Individual {
                kind: 0,
                birth: 0.0,
                life: 2.0,
                beta: 1.0,
                origin: Origin::Ancestor,
            }],
            reproductions: vec![],
            immigrations: vec![],
        };
        let grid = [0.0, 1.0, 1.99, 2.0, 5.0];
        let alive = characteristic_path(&log, 0, &Characteristic::Alive, &grid).unwrap();
        assert_eq!(alive, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        let b = total_birth_rate_path(&log, &grid).unwrap();
        assert_eq!(
            b.iter().map(|r| r[0]).collect::<Vec<_>>(),
            vec![1.0, 1.0, 1.0, 0.0, 0.0]
        );
        let integ =
            characteristic_path(&log, 0, &Characteristic::IntegratedPopulation, &grid).unwrap();
        assert_eq!(integ, vec![0.0, 1.0, 1.99, 2.0, 2.0]);
        let empty = PopulationLog {
            individuals: vec![],
            ..log.clone()
        };
        assert_eq!(
            total_birth_rate_path(&empty, &[1.0]).unwrap(),
            vec![vec![0.0]]
        );
        assert!(matches!(
            characteristic_path(&log, 0, &Characteristic::Alive, &[11.0]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn preset_identities_on_random_logs() {
        let mut m = simple(1.05, LifeLaw::Uniform { c: 2.0 });
        m.immigration_rate = 2.0;
        let eta = 0.6;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = CmjOptions {
                ancestors: AncestorInit::Fresh,
                ..Default::default()
            };
            let log = simulate_cmj_with(&m, &[5], 8.0, &mut rng, &opts).unwrap();
            let grid = [0.0, 1.0, 2.5, 4.0, 8.0];
            let path = |c: Characteristic| characteristic_path(&log, 0, &c, &grid).unwrap();
            let alive = path(Characteristic::Alive);
            let young = path(Characteristic::Young { eta });
            let old = path(Characteristic::Old { eta });
            for g in 0..grid.len() {
                assert_eq!(young[g] + old[g], alive[g]);
                let s = population_structure(&log, 0, grid[g]).unwrap();
                assert_eq!(s.total_mass(), alive[g]);
            }
            let born = path(Characteristic::TotalProgeny);
            assert_eq!(born[4], log.individuals.len() as f64);
            // ∫₀^t X(s) ds by sweeping birth and death times
            let integ = path(Characteristic::IntegratedPopulation);
            for (g, &t) in grid.iter().enumerate() {
                let mut marks: Vec<(f64, f64)> = Vec::new();
                for x in &log.individuals {
                    marks.push((x.birth, 1.0));
                    marks.push((x.birth + x.life, -1.0));
                }
                marks.sort_by(|a, b| a.0.total_cmp(&b.0));
                let (mut level, mut last, mut area) = (0.0, 0.0, 0.0);
                for (s, dx) in marks {
                    if s > t {
                        break;
                    }
                    area += level * (s - last);
                    level += dx;
                    last = s;
                }
                area += level * (t - last);
                assert!(
                    (integ[g] - area).abs() < 1e-9 * (1.0 + area),
                    "seed {seed} t {t}"
                );
            }
        }
    }

    #[test]
    fn limit_map_examples() {
        let base = CmjLimitInputs {
            d: 1,
            x0: vec![2.0],
            mean_life: vec![1.0],
            m_diag: vec![1.0],
            m_imm: vec![0.0],
            immigration_rate: 1.0,
            b_star: vec![vec![-1.0]],
            v_diag: vec![1.0],
            v_birth: vec![1.0],
            d_birth: vec![1.0],
        };
        let p = cmj_limit_params(&base).unwrap();
        assert_eq!(p.z0, vec![2.0]);
        assert_eq!(p.a, vec![0.0]);
        assert_eq!(p.b, vec![vec![1.0]]);
        assert_eq!(p.c, vec![0.5]);
        let bad = CmjLimitInputs {
            m_diag: vec![0.0],
            ..base
        };
        assert!(cmj_limit_params(&bad).is_err());
    }

    #[test]
    fn schedule_is_near_critical() {
        let s = CmjSchedule::single_type(
            LifeLaw::GammaShape2 { rate: 2.0 },
            AgeProfile::Constant,
            1.0,
            1.0,
        );
        let (m, x0) = s.build(10.0).unwrap();
        assert!((m.mean_children_matrix()[0][0] - 0.9).abs() < 1e-12);
        assert_eq!(x0, vec![10]);
        let p = s.limit_params().unwrap();
        assert!((p.sigma[0] - 0.75).abs() < 1e-9);
        assert!((p.c[0] - 0.75).abs() < 1e-9);
        assert!((p.a[0] - 1.0).abs() < 1e-12 && (p.b[0][0] - 1.0).abs() < 1e-12);
        assert!((p.z0[0] - 1.0).abs() < 1e-12);
        let supercritical = CmjSchedule {
            b: vec![-1.0],
            ..s.clone()
        };
        assert!(
            (supercritical.build(10.0).unwrap().0.mean_children_matrix()[0][0] - 1.1).abs() < 1e-12
        );
        assert!(CmjSchedule { b: vec![20.0], ..s }.build(10.0).is_err());
    }

    #[test]
    fn population_cap_is_reported() {
        let m = simple(3.0, LifeLaw::Exponential { rate: 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let opts = CmjOptions {
            population_cap: 1000,
            ancestors: AncestorInit::Fresh,
        };
        assert!(matches!(
            simulate_cmj_with(&m, &[10], 100.0, &mut rng, &opts),
            Err(Error::PopulationCap { cap: 1000, .. })
        ));
    }
}
