//! State-space and modal realizations of the noisy recursions.
//!
//! In the Hessian eigenbasis every algorithm decouples into independent
//! modes: a scalar recursion for gradient descent and a 2x2 companion
//! system for the two-step methods,
//!
//! ```text
//! GD:  â = 1 − αλ
//! HB:  Â = [[0, 1], [−β,          1 + β − αλ       ]]
//! NA:  Â = [[0, 1], [−β(1 − αλ),  (1 + β)(1 − αλ)  ]]
//! ```
//!
//! with B̂ = [0; 1] and Ĉ = [1, 0]. All quadratic analysis is done per mode.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::spectrum::Spectrum;

/// Modes with spectral radius at or above this are treated as unstable.
pub const INSTABILITY_THRESHOLD: f64 = 1.0 - 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// Gradient descent.
    Gd,
    /// Polyak's heavy-ball method.
    Hb,
    /// Nesterov's accelerated method.
    Na,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::Gd, Algo::Hb, Algo::Na];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Gd => "gd",
            Algo::Hb => "hb",
            Algo::Na => "na",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" | "gradient" => Ok(Algo::Gd),
            "hb" | "heavy-ball" | "polyak" => Ok(Algo::Hb),
            "na" | "nesterov" => Ok(Algo::Na),
            other => Err(Error::InvalidParameter(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// Noise magnitude is an independent constant.
    #[default]
    Fixed,
    /// Noise enters through the gradient only, so σ = α.
    EqualsAlpha,
}

impl FromStr for SigmaMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "fixed" => Ok(SigmaMode::Fixed),
            "equals_alpha" | "alpha" => Ok(SigmaMode::EqualsAlpha),
            other => Err(Error::InvalidParameter(format!("unknown sigma mode {other:?}"))),
        }
    }
}

/// Algorithm choice plus constant parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algo: Algo,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub sigma_mode: SigmaMode,
}

impl AlgoConfig {
    /// Validating constructor; `beta` is forced to zero for gradient descent.
    pub fn new(algo: Algo, alpha: f64, beta: f64, sigma: f64, sigma_mode: SigmaMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "stepsize must be positive, got {alpha}"
            )));
        }
        let beta = if algo == Algo::Gd { 0.0 } else { beta };
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "momentum must lie in [0, 1), got {beta}"
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise magnitude must be >= 0, got {sigma}"
            )));
        }
        let sigma = match sigma_mode {
            SigmaMode::Fixed => sigma,
            SigmaMode::EqualsAlpha => alpha,
        };
        Ok(Self {
            algo,
            alpha,
            beta,
            sigma,
            sigma_mode,
        })
    }

    pub fn gd(alpha: f64) -> Result<Self> {
        Self::new(Algo::Gd, alpha, 0.0, 1.0, SigmaMode::Fixed)
    }

    pub fn hb(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Algo::Hb, alpha, beta, 1.0, SigmaMode::Fixed)
    }

    pub fn na(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Algo::Na, alpha, beta, 1.0, SigmaMode::Fixed)
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        Self::new(self.algo, self.alpha, self.beta, sigma, SigmaMode::Fixed)
    }

    pub fn with_sigma_mode(self, mode: SigmaMode) -> Result<Self> {
        Self::new(self.algo, self.alpha, self.beta, self.sigma, mode)
    }

    /// The noise magnitude actually applied.
    pub fn effective_sigma(&self) -> f64 {
        match self.sigma_mode {
            SigmaMode::Fixed => self.sigma,
            SigmaMode::EqualsAlpha => self.alpha,
        }
    }
}

/// Dynamics matrix of one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModalBlock {
    /// `â`, for gradient descent.
    Scalar(f64),
    /// `[[0, 1], [a, b]]`, for the two-step methods.
    Companion { a: f64, b: f64 },
}

/// Per-eigenvalue realization `(Â, B̂, Ĉ)`.
///
/// `det(I − Â)`, `det(I + Â)` and `tr(I − Â)` are kept alongside the block,
/// evaluated from `(α, β, λ)` directly. Recovering them from the rounded
/// entries of `Â` loses about `ε/(αλ)` relative accuracy, which matters for
/// ill-conditioned spectra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalSystem {
    pub lambda: f64,
    pub block: ModalBlock,
    pub det_i_minus: f64,
    pub det_i_plus: f64,
    pub trace_i_minus: f64,
}

impl ModalSystem {
    pub fn order(&self) -> usize {
        match self.block {
            ModalBlock::Scalar(_) => 1,
            ModalBlock::Companion { .. } => 2,
        }
    }

    pub fn a_hat(&self) -> DenseMatrix {
        match self.block {
            ModalBlock::Scalar(a) => DenseMatrix::scalar(a),
            ModalBlock::Companion { a, b } => DenseMatrix::from_rows(&[&[0.0, 1.0], &[a, b]]),
        }
    }

    pub fn b_hat(&self) -> DenseMatrix {
        match self.block {
            ModalBlock::Scalar(_) => DenseMatrix::scalar(1.0),
            ModalBlock::Companion { .. } => DenseMatrix::from_rows(&[&[0.0], &[1.0]]),
        }
    }

    pub fn c_hat(&self) -> DenseMatrix {
        match self.block {
            ModalBlock::Scalar(_) => DenseMatrix::scalar(1.0),
            ModalBlock::Companion { .. } => DenseMatrix::from_rows(&[&[1.0, 0.0]]),
        }
    }

    /// Eigenvalues of `Â`. Real roots are computed without cancellation.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self.block {
            ModalBlock::Scalar(a) => vec![Complex64::new(a, 0.0)],
            ModalBlock::Companion { a, b } => {
                // z² − b z − a = 0: sum of roots b, product −a.
                let disc = b * b + 4.0 * a;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    let big = 0.5 * (b + b.signum() * sq);
                    if big == 0.0 {
                        // b = 0 and a = 0
                        return vec![Complex64::new(0.0, 0.0); 2];
                    }
                    vec![Complex64::new(big, 0.0), Complex64::new(-a / big, 0.0)]
                } else {
                    let im = 0.5 * (-disc).sqrt();
                    vec![Complex64::new(0.5 * b, im), Complex64::new(0.5 * b, -im)]
                }
            }
        }
    }

    /// Spectral radius from the numerically computed eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues `w` of `I − Â`, so that `1 − w` are the eigenvalues of `Â`.
    /// Accurate even when `Â` has eigenvalues close to 1.
    pub fn shifted_eigenvalues(&self) -> Vec<Complex64> {
        match self.block {
            ModalBlock::Scalar(_) => vec![Complex64::new(self.det_i_minus, 0.0)],
            ModalBlock::Companion { .. } => {
                let (s, p) = (self.trace_i_minus, self.det_i_minus);
                let disc = s * s - 4.0 * p;
                if disc >= 0.0 {
                    let big = 0.5 * (s + s.signum() * disc.sqrt());
                    if big == 0.0 {
                        return vec![Complex64::new(0.0, 0.0); 2];
                    }
                    vec![Complex64::new(big, 0.0), Complex64::new(p / big, 0.0)]
                } else {
                    let im = 0.5 * (-disc).sqrt();
                    vec![Complex64::new(0.5 * s, im), Complex64::new(0.5 * s, -im)]
                }
            }
        }
    }
}

/// Block-diagonal realization for one eigenvalue.
pub fn modal_system(cfg: &AlgoConfig, lambda: f64) -> ModalSystem {
    let al = cfg.alpha * lambda;
    let beta = cfg.beta;
    let (block, det_i_plus, trace_i_minus) = match cfg.algo {
        Algo::Gd => (ModalBlock::Scalar(1.0 - al), 2.0 - al, al),
        Algo::Hb => (
            ModalBlock::Companion {
                a: -beta,
                b: 1.0 + beta - al,
            },
            2.0 * (1.0 + beta) - al,
            (1.0 - beta) + al,
        ),
        Algo::Na => (
            ModalBlock::Companion {
                a: -beta * (1.0 - al),
                b: (1.0 + beta) * (1.0 - al),
            },
            2.0 * (1.0 + beta) - (2.0 * beta + 1.0) * al,
            (1.0 - beta) + (1.0 + beta) * al,
        ),
    };
    ModalSystem {
        lambda,
        block,
        // 1 − a − b reduces to αλ for all three methods
        det_i_minus: al,
        det_i_plus,
        trace_i_minus,
    }
}

/// Relative slack on the complex-root band of the closed-form radius. At
/// the band edges the roots coincide and the real-root formula picks up
/// `√ε`-sized error from a rounding-level discriminant.
const BAND_SLACK: f64 = 4.0 * f64::EPSILON;

/// `√(c² − 4p)` with discriminants at rounding level of `c² + 4p`
/// treated as a double root.
fn real_root_gap(c: f64, p: f64) -> f64 {
    let disc = c * c - 4.0 * p;
    if disc <= 16.0 * f64::EPSILON * (c * c + 4.0 * p.abs()) {
        0.0
    } else {
        disc.sqrt()
    }
}

/// Closed-form spectral radius `ρ̂(λ)` of the mode at `lambda`.
pub fn modal_spectral_radius(cfg: &AlgoConfig, lambda: f64) -> f64 {
    let al = cfg.alpha * lambda;
    let beta = cfg.beta;
    match cfg.algo {
        Algo::Gd => (1.0 - al).abs(),
        Algo::Hb => {
            let sb = beta.sqrt();
            if (1.0 - sb).powi(2) * (1.0 - BAND_SLACK) <= al && al <= (1.0 + sb).powi(2) * (1.0 + BAND_SLACK) {
                sb
            } else {
                let c = 1.0 + beta - al;
                0.5 * c.abs() + 0.5 * real_root_gap(c, beta)
            }
        }
        Algo::Na => {
            let y = 1.0 - al;
            let lo = ((1.0 - beta) / (1.0 + beta)).powi(2);
            if al >= lo * (1.0 - BAND_SLACK) && al < 1.0 {
                (beta * y).sqrt()
            } else {
                let c = (1.0 + beta) * y;
                0.5 * c.abs() + 0.5 * real_root_gap(c, beta * y)
            }
        }
    }
}

/// Linear convergence rate `ρ = maxᵢ ρ̂(λᵢ)` over the whole spectrum.
pub fn convergence_rate(cfg: &AlgoConfig, s: &Spectrum) -> f64 {
    s.eigenvalues()
        .iter()
        .map(|&l| modal_spectral_radius(cfg, l))
        .fold(0.0, f64::max)
}

/// Rate from the extreme eigenvalues only; equals [`convergence_rate`] by
/// quasi-convexity of `ρ̂` in `λ`.
pub fn convergence_rate_extremes(cfg: &AlgoConfig, m: f64, l: f64) -> f64 {
    modal_spectral_radius(cfg, m).max(modal_spectral_radius(cfg, l))
}

/// Exact stability test for Nesterov's method on a spectrum with extremes
/// `m ≤ L`: stable iff `m < (2β + 2) / (ακ(2β + 1))`.
pub fn nesterov_stable(alpha: f64, beta: f64, m: f64, l: f64) -> bool {
    let kappa = l / m;
    m < (2.0 * beta + 2.0) / (alpha * kappa * (2.0 * beta + 1.0))
}

/// Unique solution of `P̂ = ÂP̂Âᵀ + σ²B̂B̂ᵀ` for one mode.
pub fn solve_modal_lyapunov(ms: &ModalSystem, sigma: f64) -> Result<DenseMatrix> {
    let rho = ms.spectral_radius();
    if !(rho < INSTABILITY_THRESHOLD) {
        return Err(Error::UnstableMode { lambda: ms.lambda, rho });
    }
    let s2 = sigma * sigma;
    let chi = ms.det_i_minus * ms.det_i_plus;
    Ok(match ms.block {
        ModalBlock::Scalar(_) => DenseMatrix::scalar(s2 / chi),
        ModalBlock::Companion { a, b } => {
            // (a−1)/((a+1)(b+a−1)(b−a+1)) with the last two factors taken
            // from the characteristic polynomial at ±1.
            let p = (1.0 - a) / ((1.0 + a) * chi);
            let diag = s2 * p;
            let off = s2 * b * p / (1.0 - a);
            DenseMatrix::from_rows(&[&[diag, off], &[off, diag]])
        }
    })
}

/// Which output the covariance recursion reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    /// `E‖x − x*‖²`
    Iterate,
    /// `E (x − x*)ᵀQ(x − x*)`
    ObjectiveWeighted,
}

/// Runs `P̂ᵗ⁺¹ = ÂP̂ᵗÂᵀ + σ²B̂B̂ᵀ` from `P̂⁰ = 0` for every mode and returns
/// the output variance at `t = 0, …, T−1`. Divergent configurations are
/// propagated as-is.
pub fn propagate_covariance(cfg: &AlgoConfig, s: &Spectrum, steps: usize, kind: OutputKind) -> Vec<f64> {
    let s2 = cfg.effective_sigma().powi(2);
    let mut out = vec![0.0; steps];
    for &lambda in s.eigenvalues() {
        let weight = match kind {
            OutputKind::Iterate => 1.0,
            OutputKind::ObjectiveWeighted => lambda,
        };
        let ms = modal_system(cfg, lambda);
        match ms.block {
            ModalBlock::Scalar(a) => {
                let mut p = 0.0;
                for slot in out.iter_mut() {
                    *slot += weight * p;
                    p = a * a * p + s2;
                }
            }
            ModalBlock::Companion { a, b } => {
                // Â P Âᵀ with Â = [[0,1],[a,b]] and P = [[p11,p12],[p12,p22]].
                let (mut p11, mut p12, mut p22) = (0.0, 0.0, 0.0);
                for slot in out.iter_mut() {
                    *slot += weight * p11;
                    let n11 = p22;
                    let n12 = a * p12 + b * p22;
                    let n22 = a * a * p11 + 2.0 * a * b * p12 + b * b * p22 + s2;
                    p11 = n11;
                    p12 = n12;
                    p22 = n22;
                }
            }
        }
    }
    out
}

/// Full-size realization (A, B, C) in the Hessian eigenbasis.
#[derive(Clone, Debug)]
pub struct StateSpace {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: DenseMatrix,
}

impl StateSpace {
    /// Builds the block matrices with `Q = diag(λ)`. Dense, so only meant
    /// for small `n`.
    pub fn new(cfg: &AlgoConfig, s: &Spectrum) -> Self {
        let n = s.n();
        let eye = DenseMatrix::identity(n);
        let zero = DenseMatrix::zeros(n, n);
        let q = DenseMatrix::diag(s.eigenvalues());
        let i_minus_aq = &eye - &q.scale(cfg.alpha);
        match cfg.algo {
            Algo::Gd => Self {
                a: i_minus_aq,
                b: eye.clone(),
                c: eye,
            },
            Algo::Hb | Algo::Na => {
                let beta = cfg.beta;
                let (lower_left, lower_right) = if cfg.algo == Algo::Hb {
                    (eye.scale(-beta), &eye.scale(1.0 + beta) - &q.scale(cfg.alpha))
                } else {
                    (i_minus_aq.scale(-beta), i_minus_aq.scale(1.0 + beta))
                };
                let a = DenseMatrix::block(&[&[&zero, &eye], &[&lower_left, &lower_right]]);
                let b = DenseMatrix::block(&[&[&zero], &[&eye]]);
                let c = DenseMatrix::block(&[&[&eye, &zero]]);
                Self { a, b, c }
            }
        }
    }

    /// Fixed-point iteration of the full Lyapunov recursion; returns the
    /// final state covariance. Intended as a slow reference.
    pub fn lyapunov_fixed_point(&self, sigma: f64, max_iter: usize, tol: f64) -> DenseMatrix {
        let bbt = (&self.b * &self.b.transpose()).scale(sigma * sigma);
        let at = self.a.transpose();
        let mut p = DenseMatrix::zeros(self.a.rows(), self.a.cols());
        for _ in 0..max_iter {
            let next = &(&(&self.a * &p) * &at) + &bbt;
            let delta = (&next - &p).max_abs();
            p = next;
            if delta <= tol * p.max_abs().max(1.0) {
                break;
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn modal_matrices() {
        let gd = modal_system(&AlgoConfig::gd(0.5).unwrap(), 2.0);
        assert_eq!(gd.block, ModalBlock::Scalar(0.0));

        let hb = modal_system(&AlgoConfig::hb(0.25, 0.25).unwrap(), 1.0);
        assert_eq!(hb.block, ModalBlock::Companion { a: -0.25, b: 1.0 });

        let na = modal_system(&AlgoConfig::na(1.0 / 7.0, 0.0).unwrap(), 7.0);
        match na.block {
            ModalBlock::Companion { a, b } => {
                assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
            }
            _ => panic!("expected companion block"),
        }
        assert_eq!(na.b_hat().as_slice(), &[0.0, 1.0]);
        assert_eq!(na.c_hat().as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn gd_rate_at_rate_optimal_step() {
        // κ = 9, α = 2/(L+m), ρ̂(m) = (κ−1)/(κ+1)
        let cfg = AlgoConfig::gd(0.2).unwrap();
        assert!(close(modal_spectral_radius(&cfg, 1.0), 0.8, 1e-15));
    }

    #[test]
    fn hb_rate_optimal_radius_at_extremes() {
        let cfg = AlgoConfig::hb(0.25, 0.25).unwrap();
        assert!(close(modal_spectral_radius(&cfg, 1.0), 0.5, 1e-15));
        assert!(close(modal_spectral_radius(&cfg, 9.0), 0.5, 1e-15));
        let s = Spectrum::new(&[1.0, 9.0]).unwrap();
        assert!(close(convergence_rate(&cfg, &s), 0.5, 1e-15));
    }

    #[test]
    fn na_rate_optimal_radius_at_m() {
        let r = 28f64.sqrt();
        let cfg = AlgoConfig::na(4.0 / 28.0, (r - 2.0) / (r + 2.0)).unwrap();
        let want = (r - 2.0) / r;
        assert!(close(modal_spectral_radius(&cfg, 1.0), want, 1e-14));
        assert!((want - 0.62204).abs() < 1e-5);
    }

    #[test]
    fn gd_unit_condition_number_converges_in_one_step() {
        let cfg = AlgoConfig::gd(1.0 / 3.0).unwrap();
        let s = Spectrum::constant(3.0, 4).unwrap();
        assert_eq!(convergence_rate(&cfg, &s), 0.0);
    }

    #[test]
    fn nesterov_instability_example() {
        let cfg = AlgoConfig::na(0.2, 0.5).unwrap();
        let s = Spectrum::new(&[1.0, 10.0]).unwrap();
        assert!(convergence_rate(&cfg, &s) >= 1.0);
        assert!(!nesterov_stable(0.2, 0.5, 1.0, 10.0));
        // threshold is 0.75
        assert!(close((2.0 * 0.5 + 2.0) / (0.2 * 10.0 * (2.0 * 0.5 + 1.0)), 0.75, 1e-15));
    }

    #[test]
    fn nesterov_stable_small_step() {
        assert!(nesterov_stable(1e-9, 0.5, 1.0, 1.0));
        for &kappa in &[1.0f64, 2.0, 10.0, 1e3, 1e6] {
            let sk: f64 = kappa.sqrt();
            let beta = (sk - 1.0) / (sk + 1.0);
            if beta == 0.0 {
                continue;
            }
            assert!(nesterov_stable(1.0 / kappa, beta, 1.0, kappa));
            let cfg = AlgoConfig::na(1.0 / kappa, beta).unwrap();
            assert!(convergence_rate_extremes(&cfg, 1.0, kappa) < 1.0);
        }
    }

    #[test]
    fn lyapunov_gd_unit_mode() {
        let ms = modal_system(&AlgoConfig::gd(1.0).unwrap(), 1.0);
        let p = solve_modal_lyapunov(&ms, 1.0).unwrap();
        assert_eq!(p[(0, 0)], 1.0);
    }

    #[test]
    fn lyapunov_hb_without_momentum_matches_gd() {
        let alpha = 0.3;
        for &lambda in &[0.5, 1.0, 3.0, 6.0] {
            let gd = solve_modal_lyapunov(&modal_system(&AlgoConfig::gd(alpha).unwrap(), lambda), 1.3).unwrap();
            let hb = solve_modal_lyapunov(&modal_system(&AlgoConfig::hb(alpha, 0.0).unwrap(), lambda), 1.3).unwrap();
            let na = solve_modal_lyapunov(&modal_system(&AlgoConfig::na(alpha, 0.0).unwrap(), lambda), 1.3).unwrap();
            assert!(close(gd[(0, 0)], hb[(0, 0)], 1e-14));
            assert!(close(gd[(0, 0)], na[(0, 0)], 1e-14));
        }
    }

    /// Fixed-point iteration of the modal recursion, used as an oracle.
    fn lyapunov_by_iteration(ms: &ModalSystem, sigma: f64) -> DenseMatrix {
        let a = ms.a_hat();
        let at = a.transpose();
        let bbt = (&ms.b_hat() * &ms.b_hat().transpose()).scale(sigma * sigma);
        let mut p = DenseMatrix::zeros(ms.order(), ms.order());
        for _ in 0..200_000 {
            let next = &(&(&a * &p) * &at) + &bbt;
            let done = (&next - &p).max_abs() <= 1e-15 * next.max_abs();
            p = next;
            if done {
                break;
            }
        }
        p
    }

    #[test]
    fn lyapunov_na_rate_optimal_kappa9_at_m() {
        let r = 28f64.sqrt();
        let cfg = AlgoConfig::na(4.0 / 28.0, (r - 2.0) / (r + 2.0)).unwrap();
        let ms = modal_system(&cfg, 1.0);
        let p = solve_modal_lyapunov(&ms, 1.0).unwrap();
        let oracle = lyapunov_by_iteration(&ms, 1.0);
        assert!(close(p[(0, 0)], oracle[(0, 0)], 1e-12));
        assert!(close(p[(0, 1)], oracle[(0, 1)], 1e-12));
        assert!((p[(0, 0)] - 6.018939126354993).abs() < 1e-10, "{}", p[(0, 0)]);
    }

    #[test]
    fn lyapunov_rejects_unstable_modes() {
        let ms = modal_system(&AlgoConfig::gd(2.0).unwrap(), 1.0);
        assert!(matches!(
            solve_modal_lyapunov(&ms, 1.0),
            Err(Error::UnstableMode { .. })
        ));
        let ms = modal_system(&AlgoConfig::na(0.2, 0.5).unwrap(), 10.0);
        assert!(matches!(
            solve_modal_lyapunov(&ms, 1.0),
            Err(Error::UnstableMode { .. })
        ));
    }

    #[test]
    fn jordan_cases_are_regular() {
        // rate-optimal HB at both extremes and rate-optimal NA at m have repeated
        // eigenvalues; the closed form must still satisfy the equation.
        let kappa = 100.0f64;
        let sk = kappa.sqrt();
        let hb = AlgoConfig::hb(4.0 / (sk + 1.0).powi(2), ((sk - 1.0) / (sk + 1.0)).powi(2)).unwrap();
        let r = (3.0 * kappa + 1.0).sqrt();
        let na = AlgoConfig::na(4.0 / (3.0 * kappa + 1.0), (r - 2.0) / (r + 2.0)).unwrap();
        for ms in [modal_system(&hb, 1.0), modal_system(&hb, kappa), modal_system(&na, 1.0)] {
            let p = solve_modal_lyapunov(&ms, 1.0).unwrap();
            let a = ms.a_hat();
            let rhs = &(&(&a * &p) * &a.transpose()) + &(&ms.b_hat() * &ms.b_hat().transpose());
            assert!((&p - &rhs).max_abs() <= 1e-12 * p.max_abs());
        }
    }

    #[test]
    fn propagation_gd_unit_condition() {
        let cfg = AlgoConfig::gd(1.0).unwrap();
        let s = Spectrum::new(&[1.0]).unwrap();
        assert_eq!(
            propagate_covariance(&cfg, &s, 5, OutputKind::Iterate),
            vec![0.0, 1.0, 1.0, 1.0, 1.0]
        );
    }

    #[test]
    fn propagation_diverges_when_unstable() {
        let cfg = AlgoConfig::na(0.2, 0.5).unwrap();
        let s = Spectrum::new(&[1.0, 10.0]).unwrap();
        let v = propagate_covariance(&cfg, &s, 200, OutputKind::Iterate);
        // first nonzero output appears at t = 2
        assert!(v[199] >= 10.0 * v[2]);
    }

    #[test]
    fn propagation_reaches_lyapunov_solution() {
        let cfg = AlgoConfig::hb(0.25, 0.25).unwrap();
        let s = Spectrum::new(&[1.0, 9.0]).unwrap();
        let v = propagate_covariance(&cfg, &s, 400, OutputKind::Iterate);
        let steady: f64 = s
            .eigenvalues()
            .iter()
            .map(|&l| solve_modal_lyapunov(&modal_system(&cfg, l), 1.0).unwrap()[(0, 0)])
            .sum();
        assert!(close(v[399], steady, 1e-9));
    }

    #[test]
    fn full_state_space_matches_modal_sum() {
        let s = Spectrum::new(&[1.0, 2.5, 4.0]).unwrap();
        for cfg in [
            AlgoConfig::gd(0.4).unwrap(),
            AlgoConfig::hb(0.3, 0.2).unwrap(),
            AlgoConfig::na(0.2, 0.5).unwrap(),
        ] {
            let ss = StateSpace::new(&cfg, &s);
            let p = ss.lyapunov_fixed_point(1.0, 100_000, 1e-15);
            let z = &(&ss.c * &p) * &ss.c.transpose();
            let modal: f64 = s
                .eigenvalues()
                .iter()
                .map(|&l| solve_modal_lyapunov(&modal_system(&cfg, l), 1.0).unwrap()[(0, 0)])
                .sum();
            assert!(
                close(z.trace(), modal, 1e-11),
                "{:?}: {} vs {}",
                cfg.algo,
                z.trace(),
                modal
            );
        }
    }

    #[test]
    fn config_validation() {
        assert!(AlgoConfig::gd(0.0).is_err());
        assert!(AlgoConfig::hb(0.1, 1.0).is_err());
        assert!(AlgoConfig::hb(0.1, -0.1).is_err());
        assert_eq!(
            AlgoConfig::new(Algo::Gd, 0.1, 0.7, 1.0, SigmaMode::Fixed).unwrap().beta,
            0.0
        );
        let c = AlgoConfig::na(0.1, 0.3)
            .unwrap()
            .with_sigma_mode(SigmaMode::EqualsAlpha)
            .unwrap();
        assert_eq!(c.effective_sigma(), 0.1);
        assert_eq!(c.sigma, 0.1);
    }

    fn arb_config() -> impl Strategy<Value = (AlgoConfig, f64)> {
        (0usize..3, 1e-3f64..3.0, 0.0f64..0.999, 1e-2f64..10.0).prop_map(|(k, alpha, beta, lambda)| {
            let algo = Algo::ALL[k];
            (
                AlgoConfig::new(algo, alpha, beta, 1.0, SigmaMode::Fixed).unwrap(),
                lambda,
            )
        })
    }

    proptest! {
        #[test]
        fn closed_form_radius_matches_eigenvalues((cfg, lambda) in arb_config()) {
            let closed = modal_spectral_radius(&cfg, lambda);
            let numeric = modal_system(&cfg, lambda).spectral_radius();
            // Near a repeated root the eigenvalues themselves are only
            // sqrt(eps)-accurate; the closed form is the reference there.
            let ms = modal_system(&cfg, lambda);
            let tol = match ms.block {
                ModalBlock::Companion { a, b } if (b * b + 4.0 * a).abs() < 1e-8 => 1e-7,
                _ => 1e-12,
            };
            prop_assert!((closed - numeric).abs() <= tol, "{closed} vs {numeric}");
        }

        #[test]
        fn lyapunov_residual_small((cfg, lambda) in arb_config()) {
            let ms = modal_system(&cfg, lambda);
            prop_assume!(ms.spectral_radius() < 0.999);
            let p = solve_modal_lyapunov(&ms, 1.0).unwrap();
            let a = ms.a_hat();
            let rhs = &(&(&a * &p) * &a.transpose()) + &(&ms.b_hat() * &ms.b_hat().transpose());
            prop_assert!((&p - &rhs).max_abs() <= 1e-12 * p.max_abs());
        }

        #[test]
        fn zero_momentum_reduces_to_gd(alpha in 1e-3f64..2.0, lambda in 1e-2f64..10.0) {
            let gd = AlgoConfig::gd(alpha).unwrap();
            for algo in [Algo::Hb, Algo::Na] {
                let cfg = AlgoConfig::new(algo, alpha, 0.0, 1.0, SigmaMode::Fixed).unwrap();
                prop_assert_eq!(modal_spectral_radius(&cfg, lambda), modal_spectral_radius(&gd, lambda));
                let ms = modal_system(&cfg, lambda);
                if let ModalBlock::Companion { a, b } = ms.block {
                    prop_assert_eq!(a, 0.0);
                    prop_assert_eq!(b, 1.0 - alpha * lambda);
                }
            }
        }
    }
}
