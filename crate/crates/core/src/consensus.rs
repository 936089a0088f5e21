//! Noisy averaging over `d`-dimensional torus networks.
//!
//! The Laplacian of the torus with `n0` nodes per side has eigenvalues
//! `Σₗ 2(1 − cos(2π iₗ/n0))` over the index lattice `Z_{n0}^d`. The zero
//! eigenvalue carries the network average, which the noise does not
//! contract, so the deviation-from-average variance sums `Ĵ` over the
//! remaining `n − 1` modes.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{convergence_rate_extremes, Algo, AlgoConfig, INSTABILITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, COMPENSATED_THRESHOLD};
use crate::tuning::optimal_quadratic_params;
use crate::variance::modal_variance_unchecked;

/// Largest node count accepted by the streaming routines.
pub const MAX_NODES: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusSpec {
    pub d: u32,
    pub n0: u64,
    pub n: u64,
}

impl TorusSpec {
    pub fn new(d: u32, n0: u64) -> Result<Self> {
        if !(1..=5).contains(&d) {
            return Err(Error::InvalidTorus(format!("dimension must be in 1..=5, got {d}")));
        }
        if n0 < 3 {
            return Err(Error::InvalidTorus(format!("need at least 3 nodes per side, got {n0}")));
        }
        let n = n0.checked_pow(d).ok_or(Error::SizeOverflow {
            n: u64::MAX,
            limit: MAX_NODES,
        })?;
        Ok(Self { d, n0, n })
    }

    /// Parses `"d,n0"`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 2 {
            return Err(Error::InvalidTorus(format!("expected \"d,n0\", got {text:?}")));
        }
        let d = parts[0]
            .parse()
            .map_err(|e| Error::InvalidTorus(format!("dimension {:?}: {e}", parts[0])))?;
        let n0 = parts[1]
            .parse()
            .map_err(|e| Error::InvalidTorus(format!("side length {:?}: {e}", parts[1])))?;
        Self::new(d, n0)
    }

    fn check_size(&self) -> Result<()> {
        if self.n > MAX_NODES {
            return Err(Error::SizeOverflow {
                n: self.n,
                limit: MAX_NODES,
            });
        }
        Ok(())
    }

    /// Per-coordinate contributions `2(1 − cos(2πi/n0))`, exact where the
    /// cosine is rational and mirror-symmetric in `i ↦ n0 − i`.
    pub fn axis_values(&self) -> Vec<f64> {
        let n0 = self.n0;
        (0..n0)
            .map(|i| {
                let j = i.min(n0 - i);
                if j == 0 {
                    0.0
                } else if 2 * j == n0 {
                    4.0
                } else if 4 * j == n0 {
                    2.0
                } else if 3 * j == n0 {
                    3.0
                } else if 6 * j == n0 {
                    1.0
                } else {
                    let s = (PI * j as f64 / n0 as f64).sin();
                    4.0 * s * s
                }
            })
            .collect()
    }

    /// Smallest nonzero eigenvalue.
    pub fn lambda_min(&self) -> f64 {
        self.axis_values()[1]
    }

    /// Largest eigenvalue; `4d` for even `n0`.
    pub fn lambda_max(&self) -> f64 {
        self.d as f64 * self.axis_values()[(self.n0 / 2) as usize]
    }

    /// Condition number of the Laplacian restricted to the nonzero modes.
    pub fn kappa(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }
}

/// All `n0^d` eigenvalues in lattice order (leading index slowest), with
/// the zero eigenvalue first.
pub fn torus_eigenvalues(t: &TorusSpec) -> Result<Vec<f64>> {
    t.check_size()?;
    let axis = t.axis_values();
    let mut out = Vec::with_capacity(t.n as usize);
    for_each_eigenvalue(&axis, t.d, |v| out.push(v));
    Ok(out)
}

/// Calls `f` for every lattice point's eigenvalue, odometer order.
fn for_each_eigenvalue<F: FnMut(f64)>(axis: &[f64], d: u32, mut f: F) {
    let n0 = axis.len();
    let d = d as usize;
    let mut idx = vec![0usize; d];
    loop {
        f(idx.iter().map(|&i| axis[i]).sum());
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n0 {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Sums `g(λ)` over all nonzero eigenvalues. The lattice is split on the
/// leading index; partial sums are combined in index order so the result
/// does not depend on the thread count.
fn sum_over_nonzero<G: Fn(f64) -> f64 + Sync>(t: &TorusSpec, g: G) -> Result<f64> {
    t.check_size()?;
    let axis = t.axis_values();
    let compensated = t.n > COMPENSATED_THRESHOLD as u64;
    let partials: Vec<f64> = (0..axis.len())
        .into_par_iter()
        .map(|lead| {
            let mut acc = CompensatedSum::new();
            let mut plain = 0.0;
            let mut add = |lambda: f64| {
                if compensated {
                    acc.add(g(lambda));
                } else {
                    plain += g(lambda);
                }
            };
            let base = axis[lead];
            if t.d == 1 {
                if lead != 0 {
                    add(base);
                }
            } else {
                let mut first = true;
                for_each_eigenvalue(&axis, t.d - 1, |rest| {
                    // the all-zero index is the first point of partition 0
                    if !(lead == 0 && first) {
                        add(base + rest);
                    }
                    first = false;
                });
            }
            if compensated {
                acc.value()
            } else {
                plain
            }
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in partials {
        total.add(p);
    }
    Ok(total.value())
}

/// Where the algorithm parameters come from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamsSource {
    /// Rate-optimal choice for the torus's nonzero extremes.
    RateOptimal,
    Explicit(AlgoConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub algo: Algo,
    pub d: u32,
    pub n0: u64,
    pub n: u64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub kappa: f64,
    pub rho: f64,
    pub jbar: f64,
    pub jbar_over_n: f64,
}

pub fn resolve_params(algo: Algo, t: &TorusSpec, source: ParamsSource) -> Result<AlgoConfig> {
    match source {
        ParamsSource::RateOptimal => Ok(optimal_quadratic_params(algo, t.lambda_min(), t.lambda_max())?.config),
        ParamsSource::Explicit(cfg) => {
            if cfg.algo != algo {
                return Err(Error::InvalidParameter(format!(
                    "explicit configuration is for {}, requested {algo}",
                    cfg.algo
                )));
            }
            Ok(cfg)
        }
    }
}

/// Deviation-from-average variance `J̄ = Σ_{λ≠0} Ĵ(λ)`.
pub fn consensus_variance(algo: Algo, t: &TorusSpec, source: ParamsSource) -> Result<ConsensusReport> {
    t.check_size()?;
    let cfg = resolve_params(algo, t, source)?;
    let (m, l) = (t.lambda_min(), t.lambda_max());
    // the rate is quasi-convex in λ, so the extremes decide stability
    let rho = convergence_rate_extremes(&cfg, m, l);
    if !(rho < INSTABILITY_THRESHOLD) {
        let lambda = if crate::dynamics::modal_spectral_radius(&cfg, m) >= rho {
            m
        } else {
            l
        };
        return Err(Error::Unstable { lambda, rho });
    }
    let jbar = sum_over_nonzero(t, |lambda| modal_variance_unchecked(&cfg, lambda))?;
    Ok(ConsensusReport {
        algo,
        d: t.d,
        n0: t.n0,
        n: t.n,
        alpha: cfg.alpha,
        beta: cfg.beta,
        sigma: cfg.effective_sigma(),
        m,
        l,
        kappa: l / m,
        rho,
        jbar,
        jbar_over_n: jbar / t.n as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalSum {
    pub sum: f64,
    #[serde(rename = "B_n0")]
    pub b_n0: f64,
    pub ratio: f64,
}

/// `Σ_{λ≠0} 1/λ` against its order of growth `B(n0)`:
/// `(n0^d − n0²)/(d − 2)` for `d ≠ 2` and `n0² ln n0` for `d = 2`.
pub fn reciprocal_sum(t: &TorusSpec) -> Result<ReciprocalSum> {
    let sum = sum_over_nonzero(t, |lambda| 1.0 / lambda)?;
    let n0 = t.n0 as f64;
    let b = if t.d == 2 {
        n0 * n0 * n0.ln()
    } else {
        (n0.powi(t.d as i32) - n0 * n0) / (t.d as f64 - 2.0)
    };
    Ok(ReciprocalSum {
        sum,
        b_n0: b,
        ratio: sum / b,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub algo: Algo,
    pub d: u32,
    pub n0: u64,
    pub n: u64,
    pub kappa: f64,
    pub jbar: f64,
    pub jbar_over_n: f64,
}

/// Growth of `J̄/n` with `κ` over a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    PowerLaw { slope: f64 },
    Logarithmic,
    Constant,
}

/// Least-squares fits over the upper half of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepFit {
    /// Slope of `ln(J̄/n)` against `ln κ`.
    pub slope: f64,
    pub intercept: f64,
    /// Coefficients of `J̄/n ≈ a + b·ln κ`.
    pub log_intercept: f64,
    pub log_slope: f64,
    /// Relative RMS residuals of the two fits.
    pub power_residual: f64,
    pub log_residual: f64,
    pub regime: Regime,
    /// Number of rows used.
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub algo: Algo,
    pub d: u32,
    pub rows: Vec<ScalingRow>,
    pub fit: SweepFit,
}

/// Slopes with absolute value at most this are reported as constant.
pub const CONSTANT_SLOPE_TOL: f64 = 0.05;

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn rel_rms(pred: impl Iterator<Item = f64>, y: &[f64]) -> f64 {
    let sq: f64 = pred.zip(y).map(|(p, v)| (p / v - 1.0).powi(2)).sum();
    (sq / y.len() as f64).sqrt()
}

/// Fits the rows with index `≥ len/2` and classifies the regime.
pub fn fit_sweep(rows: &[ScalingRow]) -> Result<SweepFit> {
    if rows.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 sweep rows, got {}",
            rows.len()
        )));
    }
    let top = &rows[rows.len() / 2..];
    let x: Vec<f64> = top.iter().map(|r| r.kappa.ln()).collect();
    let y: Vec<f64> = top.iter().map(|r| r.jbar_over_n).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_fit(&x, &ly);
    let (log_slope, log_intercept) = linear_fit(&x, &y);
    let power_residual = rel_rms(x.iter().map(|&u| (intercept + slope * u).exp()), &y);
    let log_residual = rel_rms(x.iter().map(|&u| log_intercept + log_slope * u), &y);
    // two points fit both models exactly, so residuals cannot choose
    let regime = if slope.abs() <= CONSTANT_SLOPE_TOL {
        Regime::Constant
    } else if top.len() >= 3 && log_residual < power_residual {
        Regime::Logarithmic
    } else {
        Regime::PowerLaw { slope }
    };
    Ok(SweepFit {
        slope,
        intercept,
        log_intercept,
        log_slope,
        power_residual,
        log_residual,
        regime,
        rows: top.len(),
    })
}

/// Runs the sweep, handing each row to `on_row` as soon as it is computed.
pub fn scaling_sweep_with<F: FnMut(&ScalingRow)>(
    algo: Algo,
    d: u32,
    n0_list: &[u64],
    mut on_row: F,
) -> Result<ScalingSweep> {
    if n0_list.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 side lengths, got {}",
            n0_list.len()
        )));
    }
    if n0_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "side lengths must be strictly ascending".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n0_list.len());
    for &n0 in n0_list {
        let t = TorusSpec::new(d, n0)?;
        let rep = consensus_variance(algo, &t, ParamsSource::RateOptimal)?;
        let row = ScalingRow {
            algo,
            d,
            n0,
            n: t.n,
            kappa: rep.kappa,
            jbar: rep.jbar,
            jbar_over_n: rep.jbar_over_n,
        };
        on_row(&row);
        rows.push(row);
    }
    let fit = fit_sweep(&rows)?;
    Ok(ScalingSweep { algo, d, rows, fit })
}

pub fn scaling_sweep(algo: Algo, d: u32, n0_list: &[u64]) -> Result<ScalingSweep> {
    scaling_sweep_with(algo, d, n0_list, |_| {})
}
