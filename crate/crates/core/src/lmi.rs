//! Matrix-inequality upper bounds on `J` for general `m`-strongly convex
//! objectives with `L`-Lipschitz gradients.
//!
//! The gradient is split as `∇f(y) = m·y + Δ(y)`, and `Δ` satisfies the
//! sector constraint `[y; Δ]ᵀ Π [y; Δ] ≥ 0` with
//! `Π = [[0, (L−m)I], [(L−m)I, −2I]]`. A feasible `(X, λ₁, λ₂)` for the
//! resulting LMI bounds the steady-state variance by
//! `σ²(n·L·λ₂ + tr(B_wᵀ X B_w))`.
//!
//! Only the structured `X = [[x₁I, x₀I], [x₀I, x₂I]]` is used, which
//! collapses the `3n × 3n` condition into one `3 × 3` block (GD: `2 × 2`).

use serde::{Deserialize, Serialize};

use crate::dynamics::Algo;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Relative slack absorbed by validity checks.
pub const PSD_REL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmiProblem {
    pub algo: Algo,
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub sigma: f64,
    /// Assemble the per-block reduction instead of the full matrix.
    pub reduced: bool,
}

impl LmiProblem {
    pub fn new(algo: Algo, m: f64, l: f64, alpha: f64, beta: f64, n: usize) -> Result<Self> {
        if algo == Algo::Hb {
            return Err(Error::UnsupportedAlgorithm(algo));
        }
        if !(m > 0.0 && l >= m && l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < m <= L, got m = {m}, L = {l}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "stepsize must be positive, got {alpha}"
            )));
        }
        if n == 0 {
            return Err(Error::DimensionTooSmall { n, min: 1 });
        }
        let beta = if algo == Algo::Gd { 0.0 } else { beta };
        Ok(Self {
            algo,
            m,
            l,
            alpha,
            beta,
            n,
            sigma: 1.0,
            reduced: true,
        })
    }

    /// Gradient descent with `α = 1/L`.
    pub fn gd(m: f64, l: f64, n: usize) -> Result<Self> {
        Self::new(Algo::Gd, m, l, 1.0 / l, 0.0, n)
    }

    /// Nesterov with `α = 1/L`, `β = (√κ−1)/(√κ+1)`.
    pub fn na(kappa: f64, l: f64, n: usize) -> Result<Self> {
        if !(kappa >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "condition number must be >= 1, got {kappa}"
            )));
        }
        let sk = kappa.sqrt();
        Self::new(Algo::Na, l / kappa, l, 1.0 / l, (sk - 1.0) / (sk + 1.0), n)
    }

    pub fn full(mut self) -> Self {
        self.reduced = false;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn kappa(&self) -> f64 {
        self.l / self.m
    }

    fn block_size(&self) -> usize {
        if self.reduced {
            1
        } else {
            self.n
        }
    }

    /// The sector-constraint matrix `Π` at the problem's size.
    pub fn pi_matrix(&self) -> DenseMatrix {
        let pi = DenseMatrix::from_rows(&[&[0.0, self.l - self.m], &[self.l - self.m, -2.0]]);
        pi.kron(&DenseMatrix::identity(self.block_size()))
    }

    /// Per-block realization `(A, B_u, C_z, C_y)` of the dynamics in the
    /// shifted gradient coordinates.
    fn per_block_system(&self) -> (DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix) {
        let am = self.alpha * self.m;
        match self.algo {
            Algo::Na => {
                let b = self.beta;
                (
                    DenseMatrix::from_rows(&[&[0.0, 1.0], &[-b * (1.0 - am), (1.0 + b) * (1.0 - am)]]),
                    DenseMatrix::from_rows(&[&[0.0], &[-self.alpha]]),
                    DenseMatrix::from_rows(&[&[1.0, 0.0]]),
                    DenseMatrix::from_rows(&[&[-b, 1.0 + b]]),
                )
            }
            _ => (
                DenseMatrix::scalar(1.0 - am),
                DenseMatrix::scalar(-self.alpha),
                DenseMatrix::scalar(1.0),
                DenseMatrix::scalar(1.0),
            ),
        }
    }

    /// Factors of the augmenting matrix `M = Σ Nᵢᵀ Wᵢ Nᵢ` built from
    /// consecutive-iterate sector constraints (Nesterov only).
    fn per_block_m_factors(&self) -> Vec<(DenseMatrix, DenseMatrix)> {
        if self.algo != Algo::Na {
            return Vec::new();
        }
        let (a, b, m, l) = (self.alpha, self.beta, self.m, self.l);
        let n1 = DenseMatrix::from_rows(&[&[a * m * b, -a * m * (1.0 + b), -a], &[-m * b, m * (1.0 + b), 1.0]]);
        let n2 = DenseMatrix::from_rows(&[&[-b, b, 0.0], &[-m * b, m * (1.0 + b), 1.0]]);
        let upper = DenseMatrix::from_rows(&[&[l, 1.0], &[1.0, 0.0]]);
        let lower = DenseMatrix::from_rows(&[&[-m, 1.0], &[1.0, 0.0]]);
        vec![(n1, upper), (n2, lower)]
    }
}

/// Decision variables of the structured LMI. GD uses `x1` and `lambda1`.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CertificateVars {
    pub x1: f64,
    pub x0: f64,
    pub x2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl CertificateVars {
    fn x_matrix(&self, algo: Algo) -> DenseMatrix {
        match algo {
            Algo::Na => DenseMatrix::from_rows(&[&[self.x1, self.x0], &[self.x0, self.x2]]),
            _ => DenseMatrix::scalar(self.x1),
        }
    }

    fn as_array(&self) -> [f64; 5] {
        [self.x1, self.x0, self.x2, self.lambda1, self.lambda2]
    }

    fn from_array(v: [f64; 5]) -> Self {
        Self {
            x1: v[0],
            x0: v[1],
            x2: v[2],
            lambda1: v[3],
            lambda2: v[4],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LmiCertificate {
    pub algo: Algo,
    pub kappa: f64,
    pub m: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: usize,
    pub sigma: f64,
    pub x1: f64,
    pub x0: f64,
    pub x2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Implied upper bound on `J`.
    pub bound: f64,
    /// Largest eigenvalue of the assembled LMI left-hand side.
    pub residual_max_eig: f64,
    /// Smallest eigenvalue of `X`.
    pub x_min_eig: f64,
    /// Tolerance used for the semidefiniteness checks.
    pub psd_tol: f64,
    pub valid: bool,
}

impl LmiCertificate {
    pub fn vars(&self) -> CertificateVars {
        CertificateVars {
            x1: self.x1,
            x0: self.x0,
            x2: self.x2,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }

    /// `det(X)` of the per-block matrix.
    pub fn x_det(&self) -> f64 {
        match self.algo {
            Algo::Na => self.x1 * self.x2 - self.x0 * self.x0,
            _ => self.x1,
        }
    }
}

/// Left-hand side of the LMI; feasibility means negative semidefinite.
pub fn assemble_lmi(p: &LmiProblem, vars: &CertificateVars) -> Result<DenseMatrix> {
    assemble(p, vars, false)
}

fn abs(m: &DenseMatrix) -> DenseMatrix {
    let mut out = m.clone();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[(i, j)] = m[(i, j)].abs();
        }
    }
    out
}

/// With `magnitude` set, every input is replaced by its absolute value and
/// every subtraction by an addition, giving the entrywise size of the terms
/// that cancel in the actual assembly.
fn assemble(p: &LmiProblem, vars: &CertificateVars, magnitude: bool) -> Result<DenseMatrix> {
    let k = p.block_size();
    let eye = DenseMatrix::identity(k);
    let prep = |mat: &DenseMatrix| {
        let lifted = mat.kron(&eye);
        if magnitude {
            abs(&lifted)
        } else {
            lifted
        }
    };
    let (a, bu, cz, cy) = p.per_block_system();
    let (a, bu, cz, cy) = (prep(&a), prep(&bu), prep(&cz), prep(&cy));
    let x = prep(&vars.x_matrix(p.algo));
    if x.rows() != a.rows() {
        return Err(Error::ShapeMismatch(format!(
            "X is {}x{}, state has {}",
            x.rows(),
            x.cols(),
            a.rows()
        )));
    }
    let (l1, l2) = if magnitude {
        (vars.lambda1.abs(), vars.lambda2.abs())
    } else {
        (vars.lambda1, vars.lambda2)
    };

    let at = a.transpose();
    let ax = &at * &x;
    let axa = &ax * &a;
    let top_left = if magnitude { &axa + &x } else { &axa - &x };
    let top_left = &top_left + &(&cz.transpose() * &cz);
    let top_right = &ax * &bu;
    let bottom_right = &(&bu.transpose() * &x) * &bu;
    let base = DenseMatrix::block(&[&[&top_left, &top_right], &[&top_right.transpose(), &bottom_right]]);

    let ps = bu.cols();
    let e = DenseMatrix::block(&[
        &[&cy, &DenseMatrix::zeros(ps, ps)],
        &[&DenseMatrix::zeros(ps, a.rows()), &DenseMatrix::identity(ps)],
    ]);
    let pi = if magnitude { abs(&p.pi_matrix()) } else { p.pi_matrix() };
    let sector = &(&e.transpose() * &pi) * &e;
    let mut lmi = &base + &sector.scale(l1);
    for (n_factor, weight) in p.per_block_m_factors() {
        let (n_factor, weight) = (prep(&n_factor), prep(&weight));
        let term = &(&n_factor.transpose() * &weight) * &n_factor;
        lmi = &lmi + &term.scale(l2);
    }
    Ok(lmi.symmetrized())
}

/// Size of the terms summed into the LMI, `‖Σ|termᵢ|‖_∞`. Roundoff in the
/// assembled matrix is relative to this, not to the (possibly much smaller)
/// norm of the sum.
pub fn lmi_scale(p: &LmiProblem, vars: &CertificateVars) -> Result<f64> {
    Ok(assemble(p, vars, true)?.norm_inf())
}

fn implied_bound(p: &LmiProblem, vars: &CertificateVars) -> f64 {
    let n = p.n as f64;
    let s2 = p.sigma * p.sigma;
    match p.algo {
        // B_w = [0; I], so tr(B_wᵀ X B_w) = n·x₂
        Algo::Na => s2 * n * (p.l * vars.lambda2 + vars.x2),
        _ => s2 * n * vars.x1,
    }
}

fn x_min_eig(algo: Algo, vars: &CertificateVars) -> f64 {
    match algo {
        Algo::Na => {
            let mean = 0.5 * (vars.x1 + vars.x2);
            let half = 0.5 * (vars.x1 - vars.x2);
            mean - half.hypot(vars.x0)
        }
        _ => vars.x1,
    }
}

/// Assembles the LMI for `vars` and records residuals, bound and validity.
pub fn verify_certificate(p: &LmiProblem, vars: &CertificateVars) -> Result<LmiCertificate> {
    let lmi = assemble_lmi(p, vars)?;
    let eigs = lmi.symmetric_eigenvalues();
    let residual_max_eig = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = PSD_REL_TOL * lmi_scale(p, vars)?.max(1.0);
    let x_min = x_min_eig(p.algo, vars);
    let valid = residual_max_eig <= tol && x_min >= -tol && vars.lambda1 >= 0.0 && vars.lambda2 >= 0.0;
    Ok(LmiCertificate {
        algo: p.algo,
        kappa: p.kappa(),
        m: p.m,
        l: p.l,
        alpha: p.alpha,
        beta: p.beta,
        n: p.n,
        sigma: p.sigma,
        x1: vars.x1,
        x0: vars.x0,
        x2: vars.x2,
        lambda1: vars.lambda1,
        lambda2: vars.lambda2,
        bound: implied_bound(p, vars),
        residual_max_eig,
        x_min_eig: x_min,
        psd_tol: tol,
        valid,
    })
}

/// Contraction-mapping bound `nσ²/(1 − η²)` with
/// `η = max(|1 − αm|, |1 − αL|)`.
pub fn contraction_bound_gd(m: f64, l: f64, alpha: f64, sigma: f64, n: usize) -> Result<f64> {
    let eta = (1.0 - alpha * m).abs().max((1.0 - alpha * l).abs());
    if !(eta < 1.0) {
        return Err(Error::NotContractive { eta });
    }
    Ok(n as f64 * sigma * sigma / (1.0 - eta * eta))
}

/// Closed-form feasible point for gradient descent with `α = 1/L`.
pub fn gd_certificate(m: f64, l: f64, n: usize) -> Result<LmiCertificate> {
    let p = LmiProblem::gd(m, l, n)?;
    let kappa = p.kappa();
    // Equals (1−αm)/(m(2−αm)(L−m)) for κ > 1 and stays feasible at κ = 1.
    let vars = CertificateVars {
        x1: kappa * kappa / (2.0 * kappa - 1.0),
        lambda1: 1.0 / (m * l * (2.0 - 1.0 / kappa)),
        ..Default::default()
    };
    verify_certificate(&p, &vars)
}

/// Closed-form feasible point for Nesterov with `α = 1/L` and
/// `β = (√κ−1)/(√κ+1)`.
pub fn na_certificate(kappa: f64, l: f64, n: usize) -> Result<LmiCertificate> {
    let p = LmiProblem::na(kappa, l, n)?;
    verify_certificate(&p, &na_certificate_vars(kappa, l))
}

/// `8κ² − 6κ^{3/2} − 2κ + 3√κ − 1`, the common denominator of the
/// Nesterov certificate.
pub fn na_certificate_denominator(kappa: f64) -> f64 {
    let r = kappa.sqrt();
    8.0 * kappa * kappa - 6.0 * kappa * r - 2.0 * kappa + 3.0 * r - 1.0
}

pub fn na_certificate_vars(kappa: f64, l: f64) -> CertificateVars {
    let r = kappa.sqrt();
    let k15 = kappa * r;
    let s = na_certificate_denominator(kappa);
    let x1 = (2.0 * kappa.powi(3) * r - 8.0 * kappa.powi(3) + 11.0 * kappa * kappa * r + 5.0 * kappa * kappa
        - 14.0 * k15
        + 8.0 * kappa
        - 2.0 * r)
        / s;
    let x0 = -2.0 * k15 * (r - 1.0).powi(3) * (r + 1.0) / s;
    let x2 = k15 * (2.0 * kappa * kappa - 3.0 * kappa + 5.0 * r - 2.0) / s;
    CertificateVars {
        x1,
        x0,
        x2,
        lambda1: (kappa / l).powi(2) / (2.0 * kappa - 1.0),
        lambda2: -x0 / l,
    }
}

/// Closed form of the Nesterov certificate's bound (σ = 1).
pub fn na_certificate_bound(kappa: f64, n: usize) -> f64 {
    let r = kappa.sqrt();
    let num =
        4.0 * kappa.powi(3) * r - 4.0 * kappa.powi(3) - 3.0 * kappa * kappa * r + 9.0 * kappa * kappa - 4.0 * kappa * r;
    n as f64 * num / na_certificate_denominator(kappa)
}

/// Variance of the worst quadratic in the class under the standard
/// parameters: `nκ²/(2κ−1)` for GD and `nκ²(2κ−2√κ+1)/(2√κ−1)³` for NA.
pub fn q_bounds(algo: Algo, kappa: f64, n: usize) -> Result<f64> {
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be >= 1, got {kappa}"
        )));
    }
    let nf = n as f64;
    match algo {
        Algo::Gd => Ok(nf * kappa * kappa / (2.0 * kappa - 1.0)),
        Algo::Na => {
            let r = kappa.sqrt();
            Ok(nf * kappa * kappa * (2.0 * kappa - 2.0 * r + 1.0) / (2.0 * r - 1.0).powi(3))
        }
        Algo::Hb => Err(Error::UnsupportedAlgorithm(algo)),
    }
}

/// Value of the sector constraint for a pair of points,
/// `2(L−m)⟨Δy, ΔΔ⟩ − 2‖ΔΔ‖²`; nonnegative for every `f` in the class.
pub fn sector_constraint_value(m: f64, l: f64, dy: &[f64], d_delta: &[f64]) -> f64 {
    let inner: f64 = dy.iter().zip(d_delta).map(|(a, b)| a * b).sum();
    let sq: f64 = d_delta.iter().map(|v| v * v).sum();
    2.0 * (l - m) * inner - 2.0 * sq
}

/// Derivative-free coordinate descent on the bound, starting from a valid
/// certificate. Each of the `budget` evaluations assembles one LMI; a move
/// is kept only if it stays valid, does not raise the largest residual
/// eigenvalue above `max(0, initial)`, and strictly lowers the bound.
pub fn refine_bound(p: &LmiProblem, init: &LmiCertificate, budget: usize) -> Result<LmiCertificate> {
    if budget == 0 || !init.valid {
        return Ok(*init);
    }
    let residual_cap = init.residual_max_eig.max(0.0);
    let coords: &[usize] = match p.algo {
        Algo::Na => &[0, 1, 2, 3, 4],
        _ => &[0, 3],
    };
    let mut best = *init;
    let mut current = init.vars().as_array();
    let mut steps: Vec<f64> = current.iter().map(|v| 0.1 * v.abs().max(1e-3)).collect();
    let mut used = 0;
    'outer: while used < budget {
        let mut improved = false;
        for &c in coords {
            for dir in [-1.0, 1.0] {
                if used >= budget {
                    break 'outer;
                }
                used += 1;
                let mut cand = current;
                cand[c] += dir * steps[c];
                let cert = verify_certificate(p, &CertificateVars::from_array(cand))?;
                if cert.valid && cert.residual_max_eig <= residual_cap && cert.bound < best.bound {
                    best = cert;
                    current = cand;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for (c, s) in steps.iter_mut().enumerate() {
                *s *= 0.5;
                if *s <= 1e-15 * current[c].abs().max(1e-300) {
                    *s = 0.0;
                }
            }
            if coords.iter().all(|&c| steps[c] == 0.0) {
                break;
            }
        }
    }
    Ok(best)
}
