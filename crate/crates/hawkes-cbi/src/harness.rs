//! Near-critical model sequences, Monte Carlo ensembles and the statistics
//! used to compare them with their diffusion limits.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cbi::CBIParams;
use crate::error::{invalid, Error, Result};
use crate::kernels::{AncestorSpec, HawkesModel, KernelSpec, MarkDistribution, Shape};

/// Environment variable overriding the worker-thread count.
pub const THREADS_ENV: &str = "HCBI_THREADS";

/// Replaces the limit parameters derived from the schedule, to build
/// deliberately mis-specified oracles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

/// A sequence of Hawkes models approaching criticality.
///
/// The n-th model keeps every kernel shape and mark law fixed and tunes the
/// base amplitudes so that
///
/// ```text
/// ‖φ_ii‖ = 1 − b_ii/n,   ‖φ_ij‖ = −b_ij/n (i ≠ j),   λ_I ‖φ_iI‖ = a_i,
/// ```
///
/// with ancestors given by the excess-impact rule with `Λ(0) = n·z0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSchedule {
    pub d: usize,
    /// `shapes[i][j]`, column `d` for immigrants.
    pub shapes: Vec<Vec<Shape>>,
    /// One mark law per source, immigrants last.
    pub mark_dists: Vec<MarkDistribution>,
    pub b: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    #[serde(default = "one")]
    pub immigration_rate: f64,
    pub z0: Vec<f64>,
    /// Exponential adjustment rate for resolvent diagnostics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_override: Option<LimitOverride>,
}

impl ScalingSchedule {
    /// One type, exponential kernels with unit rate, constant unit marks.
    pub fn single_type(a: f64, b: f64, z0: f64) -> Self {
        ScalingSchedule {
            d: 1,
            shapes: vec![vec![
                Shape::Exponential { rate: 1.0 },
                Shape::Exponential { rate: 1.0 },
            ]],
            mark_dists: vec![MarkDistribution::unit(1), MarkDistribution::unit(1)],
            b: vec![vec![b]],
            a: vec![a],
            immigration_rate: 1.0,
            z0: vec![z0],
            beta: None,
            limit_override: None,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let d = self.d;
        let mut errs = Vec::new();
        if d == 0 {
            return vec!["d: must be at least 1".into()];
        }
        if self.shapes.len() != d || self.shapes.iter().any(|r| r.len() != d + 1) {
            errs.push(format!("shapes: must be {d}x{}", d + 1));
        } else {
            for (i, row) in self.shapes.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    if let Err(e) = s.validate() {
                        errs.push(format!("shapes[{i}][{j}]: {e}"));
                    }
                }
                if row[i].validate().is_ok() && !(row[i].mass() > 0.0) {
                    errs.push(format!(
                        "shapes[{i}][{i}]: self-kernel shape needs positive mass"
                    ));
                }
            }
        }
        if self.mark_dists.len() != d + 1 {
            errs.push(format!("mark_dists: need {} laws", d + 1));
        } else {
            for (j, m) in self.mark_dists.iter().enumerate() {
                if let Err(e) = m.validate(d) {
                    errs.push(format!("mark_dists[{j}]: {e}"));
                }
            }
            for i in 0..d {
                if !(self.mark_dists[i].mean_amplitude(i) > 0.0) {
                    errs.push(format!(
                        "mark_dists[{i}]: mean amplitude of component {i} must be positive"
                    ));
                }
            }
        }
        if self.b.len() != d || self.b.iter().any(|r| r.len() != d) {
            errs.push(format!("b: must be {d}x{d}"));
        } else {
            for i in 0..d {
                for j in 0..d {
                    if i != j && self.b[i][j] > 0.0 {
                        errs.push(format!(
                            "b[{i}][{j}]: off-diagonal entries must be <= 0, got {}",
                            self.b[i][j]
                        ));
                    }
                    if !self.b[i][j].is_finite() {
                        errs.push(format!("b[{i}][{j}]: must be finite"));
                    }
                }
            }
        }
        if self.a.len() != d || self.a.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            errs.push(format!("a: need {d} finite nonnegative entries"));
        }
        if self.z0.len() != d || self.z0.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            errs.push(format!("z0: need {d} finite nonnegative entries"));
        }
        if !(self.immigration_rate > 0.0) || !self.immigration_rate.is_finite() {
            errs.push("immigration_rate: must be positive".into());
        }
        if errs.is_empty() {
            if let Some(beta) = self.beta {
                let lb = self.lambda_b();
                if !(beta > lb) || beta < 0.0 {
                    errs.push(format!(
                        "beta: must be >= 0 and exceed lambda_b = {lb}, got {beta}"
                    ));
                }
            }
            if let Some(o) = &self.limit_override {
                for (name, v) in [("sigma", &o.sigma), ("c", &o.c)] {
                    if let Some(v) = v {
                        if v.len() != d || v.iter().any(|x| !(*x > 0.0)) {
                            errs.push(format!("limit_override.{name}: need {d} positive entries"));
                        }
                    }
                }
            }
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

    /// `σ_i = ∫ t φ_ii / ‖φ_ii‖`, the mean lag of the self-kernel.
    pub fn sigma(&self) -> Vec<f64> {
        (0..self.d)
            .map(|i| self.shapes[i][i].first_moment() / self.shapes[i][i].mass())
            .collect()
    }

    /// `c_i = E[amp_i²] / (2 E[amp_i]²)` for the type-i mark law.
    pub fn c(&self) -> Vec<f64> {
        (0..self.d)
            .map(|i| {
                let m = &self.mark_dists[i];
                0.5 * m.second_moment(i) / m.mean_amplitude(i).powi(2)
            })
            .collect()
    }

    /// `λ_b = −min_j b_jj/σ_j`.
    pub fn lambda_b(&self) -> f64 {
        let s = self.sigma();
        -(0..self.d)
            .map(|j| self.b[j][j] / s[j])
            .fold(f64::INFINITY, f64::min)
    }

    /// Configured β, or `max(0, λ_b) + 1`.
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| self.lambda_b().max(0.0) + 1.0)
    }

    /// Target kernel masses of the n-th model, immigrant column last.
    pub fn masses(&self, n: f64) -> Result<Vec<Vec<f64>>> {
        let d = self.d;
        let mut m = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in 0..d {
                m[i][j] = if i == j {
                    1.0 - self.b[i][i] / n
                } else {
                    -self.b[i][j] / n
                };
            }
            m[i][d] = self.a[i] / self.immigration_rate;
            if m[i][i] < 0.0 {
                return invalid(format!(
                    "n={n} is too small for b[{i}][{i}]={}: kernel mass would be negative",
                    self.b[i][i]
                ));
            }
        }
        Ok(m)
    }

    /// The n-th Hawkes model.
    pub fn build(&self, n: f64) -> Result<HawkesModel> {
        self.validate()?;
        if !(n >= 1.0) {
            return invalid(format!("n must be at least 1, got {n}"));
        }
        let d = self.d;
        let masses = self.masses(n)?;
        let mut kernels = Vec::with_capacity(d);
        for i in 0..d {
            let mut row = Vec::with_capacity(d + 1);
            for j in 0..=d {
                let shape = self.shapes[i][j].clone();
                let target = masses[i][j];
                let unit = self.mark_dists[j].mean_amplitude(i) * shape.mass();
                let base = if target == 0.0 {
                    0.0
                } else if unit > 0.0 {
                    target / unit
                } else {
                    return invalid(format!(
                        "kernel ({i},{j}) needs mass {target} but its marks or shape have zero mass"
                    ));
                };
                row.push(KernelSpec::new(shape, base));
            }
            kernels.push(row);
        }
        let model = HawkesModel {
            d,
            kernels,
            mark_dists: self.mark_dists.clone(),
            immigration_rate: self.immigration_rate,
            ancestors: AncestorSpec::ExcessImpact {
                lambda0: self.z0.iter().map(|z| z * n).collect(),
            },
        };
        model.validate()?;
        Ok(model)
    }

    /// Parameters of the diffusion limit, after any override.
    pub fn limit_params(&self) -> CBIParams {
        let mut sigma = self.sigma();
        let mut c = self.c();
        if let Some(o) = &self.limit_override {
            if let Some(s) = &o.sigma {
                sigma = s.clone();
            }
            if let Some(v) = &o.c {
                c = v.clone();
            }
        }
        CBIParams {
            d: self.d,
            a: self.a.clone(),
            b: self.b.clone(),
            sigma,
            c,
            z0: self.z0.clone(),
        }
    }
}

/// Counter-based RNG for one path: the master seed picks the key, the path
/// index picks the stream, so paths are independent of scheduling.
pub fn path_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

/// Runs `runner(index, rng)` for every path in parallel and returns the
/// results in path order; the first failing path (lowest index) is reported.
pub fn monte_carlo<T, F>(n_paths: usize, master_seed: u64, runner: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    if n_paths < 2 {
        return invalid(format!("need at least 2 paths, got {n_paths}"));
    }
    let work = || {
        (0..n_paths)
            .into_par_iter()
            .map(|k| {
                let mut rng = path_rng(master_seed, k);
                runner(k, &mut rng).map_err(|e| Error::Path {
                    index: k,
                    source: Box::new(e),
                })
            })
            .collect::<Vec<Result<T>>>()
    };
    let results = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    results.into_iter().collect()
}

/// Mean, variance and standard error of one scalar across paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub label: String,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl Stat {
    /// Sample mean, unbiased variance and `√(var/N)`.
    pub fn from_samples(label: impl Into<String>, xs: impl IntoIterator<Item = f64>) -> Stat {
        let mut n = 0usize;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for x in xs {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let variance = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
        Stat {
            label: label.into(),
            mean,
            variance,
            std_error: if n > 0 {
                (variance / n as f64).sqrt()
            } else {
                f64::NAN
            },
        }
    }
}

/// Summary statistics of an ensemble of fixed-length sample vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n: f64,
    pub paths: usize,
    pub stats: Vec<Stat>,
}

impl EnsembleSummary {
    pub fn from_samples(n: f64, labels: &[String], samples: &[Vec<f64>]) -> Result<Self> {
        if samples.iter().any(|s| s.len() != labels.len()) {
            return Err(Error::GridMismatch(
                "sample vector length differs from label count".into(),
            ));
        }
        let stats = labels
            .iter()
            .enumerate()
            .map(|(k, l)| Stat::from_samples(l.clone(), samples.iter().map(|s| s[k])))
            .collect();
        Ok(EnsembleSummary {
            n,
            paths: samples.len(),
            stats,
        })
    }

    pub fn get(&self, label: &str) -> Option<&Stat> {
        self.stats.iter().find(|s| s.label == label)
    }
}

/// One empirical-vs-oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCell {
    pub label: String,
    pub empirical: f64,
    pub std_error: f64,
    pub oracle: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub cells: Vec<MomentCell>,
    pub pass_rate: f64,
    pub pass: bool,
}

pub const Z_LIMIT: f64 = 3.0;
pub const PASS_RATE: f64 = 0.95;

/// z-scores of `(label, oracle)` pairs against the summary; passes when
/// `|z| ≤ 3` in at least 95% of the cells.
pub fn compare_moments(
    summary: &EnsembleSummary,
    oracle: &[(String, f64)],
) -> Result<MomentComparison> {
    let mut cells = Vec::with_capacity(oracle.len());
    for (label, o) in oracle {
        let s = summary
            .get(label)
            .ok_or_else(|| Error::GridMismatch(format!("summary has no cell {label}")))?;
        let diff = s.mean - o;
        let z = if s.std_error > 0.0 {
            diff / s.std_error
        } else if diff.abs() <= 1e-12 * (1.0 + o.abs()) {
            0.0
        } else {
            f64::INFINITY * diff.signum()
        };
        cells.push(MomentCell {
            label: label.clone(),
            empirical: s.mean,
            std_error: s.std_error,
            oracle: *o,
            z,
        });
    }
    let ok = cells.iter().filter(|c| c.z.abs() <= Z_LIMIT).count();
    let pass_rate = if cells.is_empty() {
        1.0
    } else {
        ok as f64 / cells.len() as f64
    };
    Ok(MomentComparison {
        cells,
        pass_rate,
        pass: pass_rate >= PASS_RATE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ks,
    W1,
}

/// Weighted atoms `(location, weight)`.
pub type Atoms = [(f64, f64)];

fn sorted_cdf(a: &Atoms) -> Result<(Vec<(f64, f64)>, f64)> {
    let total: f64 = a.iter().map(|x| x.1).sum();
    if !(total > 0.0) {
        return invalid("distribution_distance needs measures with positive mass");
    }
    if a.iter().any(|x| !x.0.is_finite() || !(x.1 >= 0.0)) {
        return invalid("atoms need finite locations and nonnegative weights");
    }
    let mut v = a.to_vec();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok((v, total))
}

/// KS (sup distance of normalized CDFs) or W1 (`∫|F_A − F_B|`) between
/// two weighted empirical measures.
pub fn distribution_distance(a: &Atoms, b: &Atoms, metric: Metric) -> Result<f64> {
    let (a, ta) = sorted_cdf(a)?;
    let (b, tb) = sorted_cdf(b)?;
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut ks: f64 = 0.0;
    let mut w1 = 0.0;
    let mut last = f64::NAN;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if last.is_finite() {
            w1 += (fa - fb).abs() * (x - last);
        }
        while i < a.len() && a[i].0 == x {
            fa += a[i].1 / ta;
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fb += b[j].1 / tb;
            j += 1;
        }
        ks = ks.max((fa - fb).abs());
        last = x;
    }
    Ok(match metric {
        Metric::Ks => ks,
        Metric::W1 => w1,
    })
}

/// Unit-weight atoms from samples.
pub fn atoms(xs: &[f64]) -> Vec<(f64, f64)> {
    xs.iter().map(|x| (*x, 1.0)).collect()
}

/// KS distance between the empirical CDF of `xs` and a continuous CDF.
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov tail `P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// p-value of a two-sample KS statistic `D` for sample sizes `n1`, `n2`.
pub fn ks_two_sample_pvalue(d: f64, n1: usize, n2: usize) -> f64 {
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    let s = ne.sqrt();
    kolmogorov_tail((s + 0.12 + 0.11 / s) * d)
}

/// Monotone decay with slack: `metric[k+1] ≤ slack · metric[k]` and a final
/// value below a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ns: Vec<f64>,
    pub metric: Vec<f64>,
    pub slack: f64,
    pub threshold: f64,
    pub monotone: bool,
    pub final_below: bool,
    pub pass: bool,
}

pub const DEFAULT_SLACK: f64 = 1.5;

impl ConvergenceReport {
    pub fn new(ns: Vec<f64>, metric: Vec<f64>, threshold: f64, slack: f64) -> Result<Self> {
        if ns.len() < 3 || ns.len() != metric.len() {
            return invalid("a convergence report needs at least three (n, metric) pairs");
        }
        let monotone = metric.windows(2).all(|w| w[1] <= slack * w[0]);
        let final_below = metric.last().is_some_and(|m| *m < threshold);
        Ok(ConvergenceReport {
            ns,
            metric,
            slack,
            threshold,
            monotone,
            final_below,
            pass: monotone && final_below,
        })
    }
}

/// Evaluates `experiment(n)` along the ladder and applies the decay rule.
pub fn convergence_report(
    ns: &[f64],
    threshold: f64,
    slack: f64,
    mut experiment: impl FnMut(f64) -> Result<f64>,
) -> Result<ConvergenceReport> {
    let metric = ns
        .iter()
        .map(|&n| experiment(n))
        .collect::<Result<Vec<_>>>()?;
    ConvergenceReport::new(ns.to_vec(), metric, threshold, slack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn schedule_masses() {
        let s = ScalingSchedule::single_type(0.5, 1.0, 1.0);
        let m = s.build(10.0).unwrap();
        assert!((m.kernels[0][0].mass() - 0.9).abs() < 1e-15);
        assert!((10.0 * (1.0 - m.kernels[0][0].mass()) - 1.0).abs() < 1e-12);
        let s = ScalingSchedule::single_type(0.5, -1.0, 1.0);
        assert!((s.build(10.0).unwrap().kernels[0][0].mass() - 1.1).abs() < 1e-15);
        let big = s.build(1e12).unwrap();
        assert!((big.kernels[0][0].mass() - 1.0).abs() < 1e-11);
        let s = ScalingSchedule::single_type(0.5, 20.0, 1.0);
        assert!(s.build(10.0).is_err());
    }

    #[test]
    fn limit_parameters_from_marks_and_shapes() {
        let mut s = ScalingSchedule::single_type(0.5, 1.0, 1.0);
        assert_eq!(s.c(), vec![0.5]);
        s.mark_dists[0] = MarkDistribution::Exponential { mean: vec![2.0] };
        assert!((s.c()[0] - 1.0).abs() < 1e-15);
        s.shapes[0][0] = Shape::Erlang { k: 2, rate: 4.0 };
        assert!((s.sigma()[0] - 0.5).abs() < 1e-15);
        assert!((s.lambda_b() + 2.0).abs() < 1e-15);
        assert_eq!(s.beta(), 1.0);
    }

    #[test]
    fn monte_carlo_poisson_counts() {
        let run = |paths: usize| {
            let xs = monte_carlo(paths, 7, |_, rng| {
                let mut t: f64 = 0.0;
                let mut k = 0.0;
                loop {
                    t += -(1.0 - rng.random::<f64>()).ln();
                    if t > 1.0 {
                        break;
                    }
                    k += 1.0;
                }
                Ok(k)
            })
            .unwrap();
            Stat::from_samples("N(1)", xs)
        };
        let a = run(20_000);
        assert!((a.mean - 1.0).abs() < 3.0 / (20_000f64).sqrt());
        let b = run(40_000);
        let ratio = a.std_error / b.std_error;
        assert!((ratio - 2f64.sqrt()).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn deterministic_runner_has_zero_variance() {
        let xs = monte_carlo(100, 1, |_, _| Ok(3.0)).unwrap();
        let s = Stat::from_samples("x", xs);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.mean, 3.0);
    }

    #[test]
    fn path_errors_carry_the_index() {
        let r = monte_carlo(10, 1, |k, _| if k == 6 { invalid("boom") } else { Ok(k) });
        match r {
            Err(Error::Path { index, .. }) => assert_eq!(index, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn paths_are_reproducible() {
        let a: Vec<f64> = monte_carlo(50, 42, |_, rng| Ok(rng.random::<f64>())).unwrap();
        let b: Vec<f64> = monte_carlo(50, 42, |_, rng| Ok(rng.random::<f64>())).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn oracle_against_itself() {
        let summary = EnsembleSummary::from_samples(
            1.0,
            &["m".to_string()],
            &[vec![1.0], vec![1.0], vec![1.0]],
        )
        .unwrap();
        let c = compare_moments(&summary, &[("m".into(), 1.0)]).unwrap();
        assert!(c.pass);
        assert_eq!(c.cells[0].z, 0.0);
    }

    #[test]
    fn distances() {
        let a = [(0.0, 1.0)];
        let b = [(1.0, 1.0)];
        assert_eq!(distribution_distance(&a, &b, Metric::W1).unwrap(), 1.0);
        assert_eq!(distribution_distance(&a, &b, Metric::Ks).unwrap(), 1.0);
        let c = [(0.3, 2.0), (0.7, 1.0)];
        assert_eq!(distribution_distance(&c, &c, Metric::Ks).unwrap(), 0.0);
        assert_eq!(distribution_distance(&c, &c, Metric::W1).unwrap(), 0.0);
        assert_eq!(
            distribution_distance(&c, &a, Metric::W1).unwrap(),
            distribution_distance(&a, &c, Metric::W1).unwrap()
        );
        assert!(distribution_distance(&[], &a, Metric::Ks).is_err());
        assert!(distribution_distance(&[(1.0, 0.0)], &a, Metric::Ks).is_err());
    }

    #[test]
    fn uniform_resample_ks_is_below_the_critical_value() {
        let mut rng = path_rng(3, 0);
        let n = 100_000;
        let x: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let d = distribution_distance(&atoms(&x), &atoms(&y), Metric::Ks).unwrap();
        let crit = 1.63 * ((2 * n) as f64 / (n as f64 * n as f64)).sqrt();
        assert!(d < crit, "{d} vs {crit}");
        assert!(ks_two_sample_pvalue(d, n, n) > 0.01);
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn convergence_rule() {
        let r =
            ConvergenceReport::new(vec![1.0, 2.0, 3.0], vec![0.1, 0.14, 0.01], 0.02, 1.5).unwrap();
        assert!(r.pass);
        let r =
            ConvergenceReport::new(vec![1.0, 2.0, 3.0], vec![0.1, 0.16, 0.01], 0.02, 1.5).unwrap();
        assert!(!r.monotone);
        assert!(ConvergenceReport::new(vec![1.0, 2.0], vec![0.1, 0.1], 1.0, 1.5).is_err());
    }
}
