//! Seeded simulation of the noisy recursions.
//!
//! All runs start at the minimizer (`x⁰ = x¹ = 0`), so the observed error
//! is pure noise accumulation. Quadratics are simulated in the Hessian
//! eigenbasis, where the gradient is `λᵢxᵢ` coordinate-wise.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate_covariance, Algo, AlgoConfig, OutputKind};
use crate::error::{Error, Result};
use crate::rng::{split, NormalStream};
use crate::spectrum::Spectrum;

/// Iterates with norm above this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    Quadratic {
        spectrum: Spectrum,
    },
    /// `(m/2)‖x‖² + (L−m) Σⱼ δ²(√(1 + (xⱼ/δ)²) − 1)`, with curvature in
    /// `[m, L]` everywhere and minimizer at the origin.
    PseudoHuber {
        m: f64,
        #[serde(rename = "L")]
        l: f64,
        n: usize,
        delta: f64,
    },
}

impl Objective {
    pub fn quadratic(spectrum: Spectrum) -> Self {
        Objective::Quadratic { spectrum }
    }

    pub fn pseudo_huber(m: f64, l: f64, n: usize, delta: f64) -> Result<Self> {
        if !(m > 0.0 && l >= m && l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < m <= L, got m = {m}, L = {l}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        if n == 0 {
            return Err(Error::DimensionTooSmall { n, min: 1 });
        }
        Ok(Objective::PseudoHuber { m, l, n, delta })
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Quadratic { spectrum } => spectrum.n(),
            Objective::PseudoHuber { n, .. } => *n,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Quadratic { spectrum } => {
                0.5 * spectrum
                    .eigenvalues()
                    .iter()
                    .zip(x)
                    .map(|(l, v)| l * v * v)
                    .sum::<f64>()
            }
            Objective::PseudoHuber { m, l, delta, .. } => x
                .iter()
                .map(|&v| {
                    let r = v / delta;
                    0.5 * m * v * v + (l - m) * delta * delta * ((1.0 + r * r).sqrt() - 1.0)
                })
                .sum(),
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Objective::Quadratic { spectrum } => {
                for ((g, l), v) in out.iter_mut().zip(spectrum.eigenvalues()).zip(x) {
                    *g = l * v;
                }
            }
            Objective::PseudoHuber { m, l, delta, .. } => {
                for (g, &v) in out.iter_mut().zip(x) {
                    let r = v / delta;
                    *g = m * v + (l - m) * v / (1.0 + r * r).sqrt();
                }
            }
        }
    }

    /// Diagonal of the Hessian; the Hessian is diagonal for both kinds.
    pub fn hessian_diag(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Objective::Quadratic { spectrum } => out.copy_from_slice(spectrum.eigenvalues()),
            Objective::PseudoHuber { m, l, delta, .. } => {
                for (h, &v) in out.iter_mut().zip(x) {
                    let r = v / delta;
                    *h = m + (l - m) / (1.0 + r * r).powf(1.5);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    #[serde(rename = "J_hat")]
    pub j_hat: f64,
    /// Standard error of `J_hat` (batch means for a single run, spread
    /// across replicates for an ensemble).
    pub std_error: f64,
    /// Ensemble mean of the running time average at `t = 1, …, T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_step_variance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_step_std_error: Option<Vec<f64>>,
    #[serde(rename = "T")]
    pub steps: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
}

/// Runs one trajectory, reporting `‖xᵏ‖²` for `k = 1, …, T`.
fn run_trajectory<F: FnMut(usize, f64)>(
    cfg: &AlgoConfig,
    obj: &Objective,
    steps: usize,
    seed: u64,
    mut record: F,
) -> Result<()> {
    let n = obj.dim();
    let sigma = cfg.effective_sigma();
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let mut noise = NormalStream::new(seed);
    let mut prev = vec![0.0; n];
    let mut cur = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut w = vec![0.0; n];
    let limit_sq = DIVERGENCE_NORM * DIVERGENCE_NORM;

    let mut k = 1;
    if cfg.algo != Algo::Gd && steps >= 1 {
        // x¹ = 0 is given for the two-step methods
        record(1, 0.0);
        k = 2;
    }
    while k <= steps {
        noise.fill(&mut w);
        match cfg.algo {
            Algo::Gd => {
                obj.gradient(&cur, &mut grad);
                for i in 0..n {
                    cur[i] += -alpha * grad[i] + sigma * w[i];
                }
            }
            Algo::Hb => {
                obj.gradient(&cur, &mut grad);
                for i in 0..n {
                    let next = cur[i] + beta * (cur[i] - prev[i]) - alpha * grad[i] + sigma * w[i];
                    prev[i] = cur[i];
                    cur[i] = next;
                }
            }
            Algo::Na => {
                for i in 0..n {
                    y[i] = cur[i] + beta * (cur[i] - prev[i]);
                }
                obj.gradient(&y, &mut grad);
                for i in 0..n {
                    prev[i] = cur[i];
                    cur[i] = y[i] - alpha * grad[i] + sigma * w[i];
                }
            }
        }
        let sq: f64 = cur.iter().map(|v| v * v).sum();
        if !(sq <= limit_sq) {
            return Err(Error::NonFinite { step: k });
        }
        record(k, sq);
        k += 1;
    }
    Ok(())
}

/// Batches used for the single-run standard error.
const BATCHES: usize = 50;

/// Time-averaged squared error of one seeded run.
pub fn simulate(cfg: &AlgoConfig, obj: &Objective, steps: usize, seed: u64) -> Result<SimResult> {
    if steps == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    let batches = BATCHES.min(steps);
    let batch_len = steps / batches;
    let mut batch_sums = vec![0.0; batches];
    let mut total = 0.0;
    run_trajectory(cfg, obj, steps, seed, |k, sq| {
        total += sq;
        let b = ((k - 1) / batch_len).min(batches - 1);
        batch_sums[b] += sq;
    })?;
    let j_hat = total / steps as f64;
    let means: Vec<f64> = batch_sums
        .iter()
        .enumerate()
        .map(|(b, s)| {
            let len = if b == batches - 1 {
                steps - batch_len * (batches - 1)
            } else {
                batch_len
            };
            s / len as f64
        })
        .collect();
    Ok(SimResult {
        j_hat,
        std_error: std_error_of_mean(&means),
        per_step_variance: None,
        per_step_std_error: None,
        steps,
        replicates: 1,
        seed,
    })
}

fn std_error_of_mean(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// `R` independent runs; replicate `r` is seeded with `split(seed, r)`.
/// Reports, per step, the replicate mean of `(1/t) Σ_{k≤t} ‖xᵏ‖²`.
pub fn ensemble_variance(
    cfg: &AlgoConfig,
    obj: &Objective,
    steps: usize,
    replicates: usize,
    seed: u64,
) -> Result<SimResult> {
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    let runs: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut series = Vec::with_capacity(steps);
            let mut acc = 0.0;
            run_trajectory(cfg, obj, steps, split(seed, r as u64), |k, sq| {
                acc += sq;
                series.push(acc / k as f64);
            })?;
            Ok(series)
        })
        .collect();
    // surface the earliest divergence in replicate order
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let rf = replicates as f64;
    let mut mean = vec![0.0; steps];
    for run in &runs {
        for (m, v) in mean.iter_mut().zip(run) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= rf;
    }
    let mut se = vec![0.0; steps];
    for run in &runs {
        for ((s, v), m) in se.iter_mut().zip(run).zip(&mean) {
            *s += (v - m).powi(2);
        }
    }
    for s in se.iter_mut() {
        *s = (*s / (rf - 1.0) / rf).sqrt();
    }
    Ok(SimResult {
        j_hat: mean[steps - 1],
        std_error: se[steps - 1],
        per_step_variance: Some(mean),
        per_step_std_error: Some(se),
        steps,
        replicates,
        seed,
    })
}

/// Expected value of the running average at `t = 1, …, T` from the
/// covariance recursion: `(1/t) Σ_{k=1..t} E‖xᵏ‖²`.
pub fn theory_running_average(cfg: &AlgoConfig, s: &Spectrum, steps: usize) -> Vec<f64> {
    let p = propagate_covariance(cfg, s, steps + 1, OutputKind::Iterate);
    let mut acc = 0.0;
    (1..=steps)
        .map(|t| {
            acc += p[t];
            acc / t as f64
        })
        .collect()
}
