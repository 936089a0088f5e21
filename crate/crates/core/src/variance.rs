//! Steady-state variance amplification on quadratic problems.
//!
//! `J = Σᵢ Ĵ(λᵢ)` where each modal term has a closed form in `(α, β, λ)`.
//! Also here: the heavy-ball/GD ratio, the extreme modal values, and the
//! condition-number bounds that hold for any spectrum with given `κ, n`
//! under the optimal quadratic parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    modal_spectral_radius, modal_system, Algo, AlgoConfig, ModalBlock, SigmaMode, INSTABILITY_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::linalg::sum_in_order;
use crate::spectrum::Spectrum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeContribution {
    pub lambda: f64,
    pub j_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub algo: Algo,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub sigma_mode: SigmaMode,
    pub rho: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_prime")]
    pub j_prime: f64,
    pub per_mode: Vec<ModeContribution>,
    /// Eigenvalues of the steady-state output covariance, descending.
    pub z_eigs: Vec<f64>,
}

fn check_stable(cfg: &AlgoConfig, lambda: f64) -> Result<()> {
    let rho = modal_spectral_radius(cfg, lambda);
    if rho >= INSTABILITY_THRESHOLD || rho.is_nan() {
        return Err(Error::UnstableMode { lambda, rho });
    }
    Ok(())
}

/// Closed-form modal contribution `Ĵ(λ)`.
pub fn modal_variance(cfg: &AlgoConfig, lambda: f64) -> Result<f64> {
    check_stable(cfg, lambda)?;
    Ok(modal_variance_unchecked(cfg, lambda))
}

/// [`modal_variance`] without the stability check, for callers that have
/// already bounded the rate over the whole spectrum.
pub(crate) fn modal_variance_unchecked(cfg: &AlgoConfig, lambda: f64) -> f64 {
    let s2 = cfg.effective_sigma().powi(2);
    let al = cfg.alpha * lambda;
    let beta = cfg.beta;
    match cfg.algo {
        Algo::Gd => s2 / (al * (2.0 - al)),
        Algo::Hb => s2 * (1.0 + beta) / (al * (1.0 - beta) * (2.0 * (1.0 + beta) - al)),
        Algo::Na => {
            let by = beta * (1.0 - al);
            s2 * (1.0 + by) / (al * (1.0 - by) * (2.0 * (1.0 + beta) - (2.0 * beta + 1.0) * al))
        }
    }
}

/// Full report: `J`, `J′ = Σ λᵢĴ(λᵢ)`, rate and per-mode breakdown.
pub fn variance_amplification(cfg: &AlgoConfig, s: &Spectrum) -> Result<VarianceReport> {
    let mut per_mode = Vec::with_capacity(s.n());
    let mut rho: f64 = 0.0;
    for &lambda in s.eigenvalues() {
        let r = modal_spectral_radius(cfg, lambda);
        rho = rho.max(r);
        let j_hat = modal_variance(cfg, lambda).map_err(|e| match e {
            Error::UnstableMode { lambda, rho } => Error::Unstable { lambda, rho },
            other => other,
        })?;
        per_mode.push(ModeContribution { lambda, j_hat });
    }
    let n = per_mode.len();
    let j = sum_in_order(per_mode.iter().map(|c| c.j_hat), n);
    let j_prime = sum_in_order(per_mode.iter().map(|c| c.lambda * c.j_hat), n);
    // The modal transform is orthogonal, so Z is similar to diag(Ĵ(λᵢ)).
    let mut z_eigs: Vec<f64> = per_mode.iter().map(|c| c.j_hat).collect();
    z_eigs.sort_by(|a, b| b.total_cmp(a));
    Ok(VarianceReport {
        algo: cfg.algo,
        alpha: cfg.alpha,
        beta: cfg.beta,
        sigma: cfg.effective_sigma(),
        sigma_mode: cfg.sigma_mode,
        rho,
        j,
        j_prime,
        per_mode,
        z_eigs,
    })
}

/// `J` only, without building a report.
pub fn total_variance(cfg: &AlgoConfig, s: &Spectrum) -> Result<f64> {
    let terms = s
        .eigenvalues()
        .iter()
        .map(|&l| modal_variance(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_in_order(terms, s.n()))
}

/// Modal contribution written in terms of the eigenvalues of `Â`.
pub fn modal_variance_via_eigenvalues(cfg: &AlgoConfig, lambda: f64) -> Result<f64> {
    check_stable(cfg, lambda)?;
    let s2 = cfg.effective_sigma().powi(2);
    let ms = modal_system(cfg, lambda);
    // w = 1 − λ̂, so 1 − λ̂ = w and 1 + λ̂ = 2 − w.
    let w = ms.shifted_eigenvalues();
    let two = Complex64::new(2.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    Ok(match ms.block {
        ModalBlock::Scalar(_) => s2 / (w[0].re * (2.0 - w[0].re)),
        ModalBlock::Companion { .. } => {
            let (w1, w2) = (w[0], w[1]);
            let prod = (one - w1) * (one - w2);
            let one_minus_prod = w1 + w2 - w1 * w2;
            let val = (one + prod) / (one_minus_prod * w1 * w2 * (two - w1) * (two - w2));
            s2 * val.re
        }
    })
}

/// `J` as a sum of the eigenvalue-form modal terms.
pub fn variance_via_eigenvalues(cfg: &AlgoConfig, s: &Spectrum) -> Result<f64> {
    let terms = s
        .eigenvalues()
        .iter()
        .map(|&l| modal_variance_via_eigenvalues(cfg, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(sum_in_order(terms, s.n()))
}

/// Heavy-ball over gradient descent variance ratio under optimal quadratic
/// parameters; independent of the spectrum beyond `κ`.
pub fn hb_gd_ratio(kappa: f64) -> f64 {
    let sk = kappa.sqrt();
    (sk + 1.0).powi(4) / (8.0 * sk * (kappa + 1.0))
}

/// `Ĵ` at `λ = m`, `λ = L` and `λ = 1/α`, for `σ = 1` and optimal
/// quadratic parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeModalValues {
    pub j_at_m: f64,
    #[serde(rename = "j_at_L")]
    pub j_at_l: f64,
    pub j_at_inv_alpha: f64,
}

pub fn extreme_modal_values(algo: Algo, kappa: f64) -> Result<ExtremeModalValues> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be >= 1, got {kappa}"
        )));
    }
    match algo {
        Algo::Gd => {
            let v = (kappa + 1.0).powi(2) / (4.0 * kappa);
            Ok(ExtremeModalValues {
                j_at_m: v,
                j_at_l: v,
                j_at_inv_alpha: 1.0,
            })
        }
        Algo::Na => {
            let kb = 3.0 * kappa + 1.0;
            let r = kb.sqrt();
            let kb2 = kb * kb;
            Ok(ExtremeModalValues {
                j_at_m: kb2 * (kb - 2.0 * r + 2.0) / (32.0 * (r - 1.0).powi(3)),
                j_at_l: 9.0 * kb2 * (kb + 2.0 * r - 2.0) / (32.0 * (kb - 1.0) * (kb - r + 1.0) * (2.0 * r - 1.0)),
                j_at_inv_alpha: 1.0,
            })
        }
        Algo::Hb => Err(Error::UnsupportedAlgorithm(Algo::Hb)),
    }
}

/// Bracket on `J_na / J_gd` over all spectra of dimension `n` and
/// condition number `κ`.
pub fn na_gd_ratio_bounds(kappa: f64, n: usize) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::DimensionTooSmall { n, min: 1 });
    }
    let gd = extreme_modal_values(Algo::Gd, kappa)?;
    let na = extreme_modal_values(Algo::Na, kappa)?;
    let k = (n - 1) as f64;
    let low = (na.j_at_m + k * na.j_at_l) / (gd.j_at_m + k * gd.j_at_l);
    let high = (k * na.j_at_m + na.j_at_l) / (k * gd.j_at_m + gd.j_at_l);
    if n == 1 {
        // one mode sits at both extremes, so κ = 1 is the only consistent case
        let v = na.j_at_m / gd.j_at_m;
        return Ok((v, v));
    }
    Ok((low, high))
}

/// Lower and upper bounds on `J` (σ = 1, optimal quadratic parameters) in
/// terms of `κ` and `n` only.
pub fn variance_bounds(algo: Algo, kappa: f64, n: usize) -> Result<(f64, f64)> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be >= 1, got {kappa}"
        )));
    }
    if n == 0 {
        return Err(Error::DimensionTooSmall { n, min: 1 });
    }
    let nf = n as f64;
    let gd_low = (kappa - 1.0).powi(2) / (2.0 * kappa) + nf;
    let gd_high = nf * (kappa + 1.0).powi(2) / (4.0 * kappa);
    match algo {
        Algo::Gd => Ok((gd_low, gd_high)),
        Algo::Hb => {
            let sk = kappa.sqrt();
            let ratio = hb_gd_ratio(kappa);
            let high = nf * (kappa + 1.0) * (sk + 1.0).powi(4) / (32.0 * kappa * sk);
            Ok((ratio * gd_low, high))
        }
        Algo::Na => {
            if n < 2 {
                return Err(Error::DimensionTooSmall { n, min: 2 });
            }
            let kb = 3.0 * kappa + 1.0;
            let r = kb.sqrt();
            let low = kb * r / 32.0 + 9.0 * r / 64.0 + nf - 2.0;
            let high = (nf - 1.0) * kb * r / 8.0 + 9.0 * r / 8.0;
            Ok((low, high))
        }
    }
}

/// [`variance_bounds`] with `κ` and `n` read off a spectrum.
pub fn variance_bounds_for(algo: Algo, s: &Spectrum) -> Result<(f64, f64)> {
    variance_bounds(algo, s.kappa(), s.n())
}
