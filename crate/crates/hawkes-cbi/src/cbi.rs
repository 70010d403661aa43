//! Multi-type continuous-state branching diffusions with immigration.
//!
//! Type `i` follows
//!
//! ```text
//! dZ_i = (a_i − Σ_j b_ij Z_j)/σ_i dt + √(2 c_i Z_i)/σ_i dW_i
//! ```
//!
//! with independent Brownian drivers. Besides an Euler simulator this module
//! holds the two deterministic oracles used to check simulations: the
//! Riccati system behind the affine Laplace transform and the closed linear
//! ODEs for the first two moments.
//!
//! Applying the generator to `e^{−⟨v,x⟩}` gives
//!
//! ```text
//! ∂_t v_j = −Σ_i (b_ij/σ_i) v_i − (c_j/σ_j²) v_j²,
//! log E e^{−⟨z,Z_t⟩} = −⟨Z_0, v(t)⟩ − ∫_0^t Σ_i (a_i/σ_i) v_i(s) ds,
//! ```
//!
//! so the drift matrix enters transposed and immigration is weighted by
//! `1/σ`. For one type, or when `σ ≡ 1` and `b` is symmetric, this is the
//! familiar `φ_i(v) = Σ_j b_ij v_j + c_i v_i²`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Parameters of the limit diffusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CBIParams {
    pub d: usize,
    /// Immigration, nonnegative.
    pub a: Vec<f64>,
    /// Drift matrix; off-diagonal entries must be ≤ 0.
    pub b: Vec<Vec<f64>>,
    /// Time-scale per type, strictly positive.
    pub sigma: Vec<f64>,
    /// Diffusion strength per type, strictly positive.
    pub c: Vec<f64>,
    /// Initial state, nonnegative.
    pub z0: Vec<f64>,
}

impl CBIParams {
    pub fn one_type(a: f64, b: f64, sigma: f64, c: f64, z0: f64) -> Self {
        CBIParams {
            d: 1,
            a: vec![a],
            b: vec![vec![b]],
            sigma: vec![sigma],
            c: vec![c],
            z0: vec![z0],
        }
    }

    /// Collects every violated invariant, each prefixed by its field name.
    pub fn violations(&self) -> Vec<String> {
        let d = self.d;
        let mut errs = Vec::new();
        if d == 0 {
            errs.push("d: must be at least 1".into());
            return errs;
        }
        let mut vec_check = |name: &str, v: &[f64], strict: bool| {
            if v.len() != d {
                errs.push(format!("{name}: expected {d} entries, got {}", v.len()));
                return;
            }
            for (i, x) in v.iter().enumerate() {
                let ok = x.is_finite() && if strict { *x > 0.0 } else { *x >= 0.0 };
                if !ok {
                    let rel = if strict { "> 0" } else { ">= 0" };
                    errs.push(format!("{name}[{i}]: must be finite and {rel}, got {x}"));
                }
            }
        };
        vec_check("a", &self.a, false);
        vec_check("sigma", &self.sigma, true);
        vec_check("c", &self.c, true);
        vec_check("z0", &self.z0, false);
        if self.b.len() != d || self.b.iter().any(|r| r.len() != d) {
            errs.push(format!("b: must be a {d}x{d} matrix"));
        } else {
            for i in 0..d {
                for j in 0..d {
                    let x = self.b[i][j];
                    if !x.is_finite() {
                        errs.push(format!("b[{i}][{j}]: must be finite"));
                    } else if i != j && x > 0.0 {
                        errs.push(format!(
                            "b[{i}][{j}]: off-diagonal entries must be <= 0 (cross-excitation is nonnegative), got {x}"
                        ));
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

    /// `φ_j(v) = Σ_i (b_ij/σ_i) v_i + (c_j/σ_j²) v_j²`.
    pub fn branching_mechanism(&self, v: &[f64], out: &mut [f64]) {
        let d = self.d;
        for j in 0..d {
            let mut s = 0.0;
            for i in 0..d {
                s += self.b[i][j] / self.sigma[i] * v[i];
            }
            out[j] = s + self.c[j] / (self.sigma[j] * self.sigma[j]) * v[j] * v[j];
        }
    }

    /// `Σ_i (a_i/σ_i) v_i`.
    pub fn immigration_mechanism(&self, v: &[f64]) -> f64 {
        (0..self.d).map(|i| self.a[i] / self.sigma[i] * v[i]).sum()
    }
}

/// A simulated path recorded every `record_dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct CbiPath {
    pub record_dt: f64,
    /// `values[k][i] = Z_i(k·record_dt)`.
    pub values: Vec<Vec<f64>>,
}

/// Full-truncation Euler–Maruyama step count for `[0, T]`.
fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    if !(horizon >= 0.0) {
        return invalid(format!("horizon must be nonnegative, got {horizon}"));
    }
    Ok((horizon / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Simulates `Z` on `[0, T]` and records it at `times` (sorted, within `[0,T]`),
/// each rounded to the nearest Euler step.
///
/// The scheme carries the unclipped Euler state `x` and feeds `x⁺` to the
/// drift and the diffusion; `x⁺` is what gets recorded. Clipping the state
/// itself at every step would bias the mean upward whenever `a_i σ_i < c_i`,
/// which is when zero is attainable.
pub fn simulate_cbi_at<R: Rng + ?Sized>(
    p: &CBIParams,
    times: &[f64],
    dt: f64,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let horizon = times.last().copied().unwrap_or(0.0);
    let n = step_count(horizon, dt)?;
    let marks: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
    let d = p.d;
    let drift_a: Vec<f64> = (0..d).map(|i| p.a[i] / p.sigma[i]).collect();
    let drift_b: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| p.b[i][j] / p.sigma[i]).collect())
        .collect();
    let diff: Vec<f64> = (0..d)
        .map(|i| (2.0 * p.c[i]).sqrt() / p.sigma[i] * dt.sqrt())
        .collect();
    // x is the unclipped Euler state; drift and diffusion see x⁺ and x⁺ is reported
    let mut x = p.z0.clone();
    let mut pos = p.z0.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut mi = 0;
    while mi < marks.len() && marks[mi] == 0 {
        out.push(pos.clone());
        mi += 1;
    }
    for k in 1..=n.max(marks.last().copied().unwrap_or(0)) {
        for i in 0..d {
            let mut drift = drift_a[i];
            for j in 0..d {
                drift -= drift_b[i][j] * pos[j];
            }
            let g: f64 = StandardNormal.sample(rng);
            x[i] += drift * dt + diff[i] * pos[i].sqrt() * g;
        }
        for i in 0..d {
            pos[i] = x[i].max(0.0);
        }
        while mi < marks.len() && marks[mi] == k {
            out.push(pos.clone());
            mi += 1;
        }
    }
    Ok(out)
}

/// Simulates `Z` on `[0, T]` with Euler step `dt`, recording every step.
pub fn simulate_cbi<R: Rng + ?Sized>(
    p: &CBIParams,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<CbiPath> {
    p.validate()?;
    let n = step_count(horizon, dt)?;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    Ok(CbiPath {
        record_dt: dt,
        values: simulate_cbi_at(p, &times, dt, rng)?,
    })
}

/// Riccati solution `v(t, z)` on `t_k = k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct RiccatiSolution {
    pub dt: f64,
    pub z: Vec<f64>,
    /// `v[k]` is `v(t_k, z)`.
    pub v: Vec<Vec<f64>>,
    /// `immigration[k] = ∫_0^{t_k} Σ_i (a_i/σ_i) v_i(s) ds`.
    pub immigration: Vec<f64>,
}

impl RiccatiSolution {
    pub fn horizon(&self) -> f64 {
        (self.v.len() - 1) as f64 * self.dt
    }

    fn interp(&self, t: f64) -> Result<(Vec<f64>, f64)> {
        let h = self.horizon();
        if !(t >= 0.0) || t > h * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { t, horizon: h });
        }
        let x = (t / self.dt).min((self.v.len() - 1) as f64);
        let k = x.floor() as usize;
        let w = x - k as f64;
        if k + 1 >= self.v.len() || w < 1e-12 {
            return Ok((self.v[k].clone(), self.immigration[k]));
        }
        let v = self.v[k]
            .iter()
            .zip(&self.v[k + 1])
            .map(|(a, b)| a * (1.0 - w) + b * w)
            .collect();
        let i = self.immigration[k] * (1.0 - w) + self.immigration[k + 1] * w;
        Ok((v, i))
    }

    /// `exp{−⟨x, v(t)⟩ − ∫_0^t Σ_i (a_i/σ_i) v_i}`.
    pub fn laplace(&self, x: &[f64], t: f64) -> Result<f64> {
        let (v, imm) = self.interp(t)?;
        let inner: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok((-inner - imm).exp())
    }
}

const MAX_HALVINGS: u32 = 12;

fn rk4_step(p: &CBIParams, y: &[f64], h: f64) -> Vec<f64> {
    // state layout: [v_0..v_{d-1}, immigration integral]
    let d = p.d;
    let f = |s: &[f64]| -> Vec<f64> {
        let mut phi = vec![0.0; d];
        p.branching_mechanism(&s[..d], &mut phi);
        let mut out: Vec<f64> = phi.iter().map(|x| -x).collect();
        out.push(p.immigration_mechanism(&s[..d]));
        out
    };
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, y)| x + c * y).collect()
    };
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, 0.5 * h));
    let k3 = f(&axpy(y, &k2, 0.5 * h));
    let k4 = f(&axpy(y, &k3, h));
    (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `∂_t v = −φ(v)`, `v(0) = z`, with classical RK4.
///
/// A step that drives a component below `−10⁻¹²` is redone as two half
/// steps, recursively up to a fixed depth; tiny negative round-off is set to 0.
pub fn riccati_solve(p: &CBIParams, z: &[f64], horizon: f64, dt: f64) -> Result<RiccatiSolution> {
    p.validate()?;
    if z.len() != p.d || z.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return invalid("riccati z must be a finite nonnegative vector of length d");
    }
    let n = step_count(horizon, dt)?;
    let d = p.d;
    let mut y: Vec<f64> = z.to_vec();
    y.push(0.0);
    let mut v = Vec::with_capacity(n + 1);
    let mut imm = Vec::with_capacity(n + 1);
    v.push(z.to_vec());
    imm.push(0.0);
    for k in 1..=n {
        y = advance(p, &y, dt, MAX_HALVINGS, k as f64 * dt)?;
        v.push(y[..d].to_vec());
        imm.push(y[d]);
    }
    Ok(RiccatiSolution {
        dt,
        z: z.to_vec(),
        v,
        immigration: imm,
    })
}

fn advance(p: &CBIParams, y: &[f64], h: f64, depth: u32, t: f64) -> Result<Vec<f64>> {
    let d = p.d;
    let mut next = rk4_step(p, y, h);
    let worst = next[..d].iter().copied().fold(f64::INFINITY, f64::min);
    if worst < -1e-12 {
        if depth == 0 {
            return Err(Error::Negativity { value: worst, t });
        }
        let mid = advance(p, y, 0.5 * h, depth - 1, t - 0.5 * h)?;
        return advance(p, &mid, 0.5 * h, depth - 1, t);
    }
    for x in next[..d].iter_mut() {
        *x = x.max(0.0);
    }
    Ok(next)
}

/// `E e^{−⟨z, Z_t⟩}` started from `x`, via the Riccati system at step `dt`.
pub fn laplace_transform(p: &CBIParams, x: &[f64], z: &[f64], t: f64, dt: f64) -> Result<f64> {
    if x.len() != p.d || x.iter().any(|v| !(*v >= 0.0)) {
        return invalid("laplace_transform needs a nonnegative state of length d");
    }
    let horizon = if t > 0.0 { t } else { dt };
    riccati_solve(p, z, horizon, dt)?.laplace(x, t)
}

/// First and second moments of `Z` and the running integral of the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentPaths {
    pub dt: f64,
    /// `mean[k][i] = E Z_i(t_k)`.
    pub mean: Vec<Vec<f64>>,
    /// `second[k][i][j] = E Z_i(t_k) Z_j(t_k)`.
    pub second: Vec<Vec<Vec<f64>>>,
    /// `mean_integral[k][i] = ∫_0^{t_k} E Z_i(s) ds`.
    pub mean_integral: Vec<Vec<f64>>,
}

impl MomentPaths {
    pub fn index(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        let h = (self.mean.len() - 1) as f64 * self.dt;
        if !(k >= 0.0)
            || k as usize >= self.mean.len()
            || (k * self.dt - t).abs() > 1e-9 * (1.0 + t)
        {
            return Err(Error::OutOfRange { t, horizon: h });
        }
        Ok(k as usize)
    }

    pub fn mean_at(&self, i: usize, t: f64) -> Result<f64> {
        Ok(self.mean[self.index(t)?][i])
    }

    pub fn second_at(&self, i: usize, t: f64) -> Result<f64> {
        Ok(self.second[self.index(t)?][i][i])
    }

    pub fn variance_at(&self, i: usize, t: f64) -> Result<f64> {
        let k = self.index(t)?;
        Ok(self.second[k][i][i] - self.mean[k][i] * self.mean[k][i])
    }

    pub fn mean_integral_at(&self, i: usize, t: f64) -> Result<f64> {
        Ok(self.mean_integral[self.index(t)?][i])
    }
}

/// RK4 for the closed moment system
///
/// ```text
/// m_i'  = (a_i − Σ_k b_ik m_k)/σ_i
/// M_ij' = (a_i m_j − Σ_k b_ik M_kj)/σ_i + (a_j m_i − Σ_k b_jk M_ik)/σ_j + δ_ij 2c_i m_i/σ_i²
/// ```
pub fn moment_odes(p: &CBIParams, horizon: f64, dt: f64) -> Result<MomentPaths> {
    p.validate()?;
    let n = step_count(horizon, dt)?;
    let d = p.d;
    let dim = d + d * d + d;
    let f = |y: &[f64]| -> Vec<f64> {
        let m = &y[..d];
        let mm = |i: usize, j: usize| y[d + i * d + j];
        let mut out = vec![0.0; dim];
        for i in 0..d {
            let s: f64 = (0..d).map(|k| p.b[i][k] * m[k]).sum();
            out[i] = (p.a[i] - s) / p.sigma[i];
        }
        for i in 0..d {
            for j in 0..d {
                let si: f64 = (0..d).map(|k| p.b[i][k] * mm(k, j)).sum();
                let sj: f64 = (0..d).map(|k| p.b[j][k] * mm(i, k)).sum();
                let mut v = (p.a[i] * m[j] - si) / p.sigma[i] + (p.a[j] * m[i] - sj) / p.sigma[j];
                if i == j {
                    v += 2.0 * p.c[i] * m[i] / (p.sigma[i] * p.sigma[i]);
                }
                out[d + i * d + j] = v;
            }
        }
        for i in 0..d {
            out[d + d * d + i] = m[i];
        }
        out
    };
    let mut y = vec![0.0; dim];
    for i in 0..d {
        y[i] = p.z0[i];
        for j in 0..d {
            y[d + i * d + j] = p.z0[i] * p.z0[j];
        }
    }
    let unpack = |y: &[f64]| -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        (
            y[..d].to_vec(),
            (0..d)
                .map(|i| y[d + i * d..d + (i + 1) * d].to_vec())
                .collect(),
            y[d + d * d..].to_vec(),
        )
    };
    let mut out = MomentPaths {
        dt,
        mean: Vec::with_capacity(n + 1),
        second: Vec::with_capacity(n + 1),
        mean_integral: Vec::with_capacity(n + 1),
    };
    let push = |out: &mut MomentPaths, y: &[f64]| {
        let (m, mm, i) = unpack(y);
        out.mean.push(m);
        out.second.push(mm);
        out.mean_integral.push(i);
    };
    push(&mut out, &y);
    let axpy = |a: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(x, y)| x + c * y).collect()
    };
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &k1, 0.5 * dt));
        let k3 = f(&axpy(&y, &k2, 0.5 * dt));
        let k4 = f(&axpy(&y, &k3, dt));
        for i in 0..dim {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        push(&mut out, &y);
    }
    Ok(out)
}
