//! Parameter selection: textbook and quadratic-optimal rules, rate-capped
//! search for GD and heavy-ball, and the rate/variance trade-off checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{convergence_rate_extremes, Algo, AlgoConfig, SigmaMode, INSTABILITY_THRESHOLD};
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;
use crate::variance::{modal_variance, total_variance};

/// A configuration together with the rate it is known to achieve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub config: AlgoConfig,
    pub rho: f64,
}

fn check_extremes(m: f64, l: f64) -> Result<()> {
    if !(m > 0.0 && l >= m && l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < m <= L, got m = {m}, L = {l}"
        )));
    }
    Ok(())
}

/// Standard rules for the whole function class. Heavy-ball has none.
pub fn conventional_params(algo: Algo, m: f64, l: f64) -> Result<TunedParams> {
    check_extremes(m, l)?;
    let kappa = l / m;
    let sk = kappa.sqrt();
    match algo {
        Algo::Gd => Ok(TunedParams {
            config: AlgoConfig::gd(1.0 / l)?,
            rho: (1.0 - 2.0 / (kappa + 1.0)).sqrt(),
        }),
        Algo::Na => Ok(TunedParams {
            config: AlgoConfig::na(1.0 / l, (sk - 1.0) / (sk + 1.0))?,
            rho: (1.0 - 1.0 / sk).sqrt(),
        }),
        Algo::Hb => Err(Error::NoGuarantee(Algo::Hb)),
    }
}

/// Rate-optimal parameters for quadratics with curvature in `[m, L]`.
pub fn optimal_quadratic_params(algo: Algo, m: f64, l: f64) -> Result<TunedParams> {
    check_extremes(m, l)?;
    let kappa = l / m;
    let sk = kappa.sqrt();
    match algo {
        Algo::Gd => Ok(TunedParams {
            config: AlgoConfig::gd(2.0 / (l + m))?,
            rho: (kappa - 1.0) / (kappa + 1.0),
        }),
        Algo::Hb => Ok(TunedParams {
            config: AlgoConfig::hb(4.0 / (l.sqrt() + m.sqrt()).powi(2), ((sk - 1.0) / (sk + 1.0)).powi(2))?,
            rho: (sk - 1.0) / (sk + 1.0),
        }),
        Algo::Na => {
            let r = (3.0 * kappa + 1.0).sqrt();
            Ok(TunedParams {
                config: AlgoConfig::na(4.0 / (3.0 * l + m), (r - 2.0) / (r + 2.0))?,
                rho: (r - 2.0) / r,
            })
        }
    }
}

/// Stepsize minimizing the heavy-ball rate at fixed momentum.
pub fn rate_optimal_stepsize_hb(beta: f64, m: f64, l: f64) -> f64 {
    2.0 * (1.0 + beta) / (l + m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapKind {
    /// `ρ ≤ 1 − c/κ`
    RateCapKappa,
    /// `ρ ≤ 1 − c/√κ`
    RateCapSqrtKappa,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCap {
    pub kind: CapKind,
    pub c: f64,
}

impl RateCap {
    pub fn for_algo(algo: Algo, c: f64) -> Result<Self> {
        let kind = match algo {
            Algo::Gd => CapKind::RateCapKappa,
            Algo::Hb => CapKind::RateCapSqrtKappa,
            Algo::Na => return Err(Error::UnsupportedAlgorithm(Algo::Na)),
        };
        Ok(Self { kind, c })
    }

    pub fn max_rate(&self, kappa: f64) -> f64 {
        match self.kind {
            CapKind::RateCapKappa => 1.0 - self.c / kappa,
            CapKind::RateCapSqrtKappa => 1.0 - self.c / kappa.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    GoldenSection,
    GridSearch,
}

/// Resolution of the constrained search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    /// Number of momentum values, with `1 − β` log-spaced on `[1e-4, 1]`.
    pub beta_points: usize,
    /// Final bracket width in `α`, relative to the feasible interval.
    pub alpha_tol: f64,
}

impl Default for TuningGrid {
    fn default() -> Self {
        Self {
            beta_points: 400,
            alpha_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub algo: Algo,
    pub c: f64,
    pub constraint: RateCap,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub rho_star: f64,
    #[serde(rename = "J_star")]
    pub j_star: f64,
    pub method: SearchMethod,
    pub grid: TuningGrid,
}

/// Minimizer of `f` on `[lo, hi]` for unimodal `f`, stopping once the
/// bracket is narrower than `tol`. Endpoints are included as candidates.
fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Boundary of `{α : pred(α)}` between `inside` (true) and `outside`
/// (false), returned on the feasible side.
fn bisect_boundary<P: Fn(f64) -> bool>(pred: P, mut inside: f64, mut outside: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn j_or_inf(cfg: &AlgoConfig, s: &Spectrum) -> f64 {
    total_variance(cfg, s).unwrap_or(f64::INFINITY)
}

/// Momentum grid used by the constrained search: `1 − β` log-spaced from
/// `1` down to `1e-4`, so `β` ascends from 0.
pub fn momentum_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| 1.0 - 10f64.powf(-4.0 * i as f64 / (points - 1) as f64))
            .collect(),
    }
}

/// Minimizes `J` subject to a rate cap: `ρ ≤ 1 − c/κ` for GD and
/// `ρ ≤ 1 − c/√κ` for heavy-ball.
pub fn tune_constrained(algo: Algo, s: &Spectrum, c: f64, grid: TuningGrid) -> Result<TuningResult> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "cap constant must be positive, got {c}"
        )));
    }
    let cap = RateCap::for_algo(algo, c)?;
    let (m, l, kappa) = (s.m(), s.l(), s.kappa());
    let max_rate = cap.max_rate(kappa);
    if max_rate <= 0.0 && kappa > 1.0 {
        return Err(Error::InfeasibleCap { c });
    }
    match algo {
        Algo::Gd => {
            // |1 − αm| ≤ 1 − c/κ and |1 − αL| ≤ 1 − c/κ
            let lo = c / l;
            let hi = (2.0 - c / kappa) / l;
            if !(lo <= hi) {
                return Err(Error::InfeasibleCap { c });
            }
            let f = |a: f64| j_or_inf(&AlgoConfig::gd(a).unwrap(), s);
            let (alpha, j) = golden_section(f, lo, hi, grid.alpha_tol * hi);
            if !j.is_finite() {
                return Err(Error::InfeasibleCap { c });
            }
            let cfg = AlgoConfig::gd(alpha)?;
            Ok(TuningResult {
                algo,
                c,
                constraint: cap,
                alpha_star: alpha,
                beta_star: 0.0,
                rho_star: convergence_rate_extremes(&cfg, m, l),
                j_star: j,
                method: SearchMethod::GoldenSection,
                grid,
            })
        }
        Algo::Hb => {
            let betas = momentum_grid(grid.beta_points);
            let candidates: Vec<Option<(f64, f64, f64)>> = betas
                .par_iter()
                .map(|&beta| hb_best_alpha(s, beta, max_rate, grid.alpha_tol))
                .collect();
            // in β order; strict improvement keeps the smaller β on ties
            let mut best: Option<(f64, f64, f64)> = None;
            for cand in candidates.into_iter().flatten() {
                let better = match best {
                    None => true,
                    Some(b) => cand.2 < b.2,
                };
                if better {
                    best = Some(cand);
                }
            }
            let (beta, alpha, j) = best.ok_or(Error::InfeasibleCap { c })?;
            let cfg = AlgoConfig::hb(alpha, beta)?;
            Ok(TuningResult {
                algo,
                c,
                constraint: cap,
                alpha_star: alpha,
                beta_star: beta,
                rho_star: convergence_rate_extremes(&cfg, m, l),
                j_star: j,
                method: SearchMethod::GridSearch,
                grid,
            })
        }
        Algo::Na => Err(Error::UnsupportedAlgorithm(Algo::Na)),
    }
}

/// Best `(β, α, J)` for heavy-ball at fixed `β` under the rate cap.
fn hb_best_alpha(s: &Spectrum, beta: f64, max_rate: f64, tol: f64) -> Option<(f64, f64, f64)> {
    let (m, l) = (s.m(), s.l());
    let rate = |a: f64| convergence_rate_extremes(&AlgoConfig::hb(a, beta).unwrap(), m, l);
    let center = rate_optimal_stepsize_hb(beta, m, l);
    let feasible = |a: f64| a > 0.0 && rate(a) <= max_rate && rate(a) < INSTABILITY_THRESHOLD;
    if !feasible(center) {
        return None;
    }
    let lo = bisect_boundary(feasible, center, 0.0);
    let hi = bisect_boundary(feasible, center, 2.0 * (1.0 + beta) / l);
    let f = |a: f64| {
        if a <= 0.0 {
            return f64::INFINITY;
        }
        j_or_inf(&AlgoConfig::hb(a, beta).unwrap(), s)
    };
    let (alpha, j) = golden_section(f, lo, hi, tol * hi);
    j.is_finite().then_some((beta, alpha, j))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffMargin {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `J/(1 − ρ)` for heavy-ball against its `κ`-dependent floor:
/// `σ²((κ+1)/8)²` for fixed noise, `(κ/(8L))²` when `σ = α`.
pub fn hb_tradeoff_margin(cfg: &AlgoConfig, s: &Spectrum) -> Result<TradeoffMargin> {
    if cfg.algo != Algo::Hb {
        return Err(Error::UnsupportedAlgorithm(cfg.algo));
    }
    let report = crate::variance::variance_amplification(cfg, s)?;
    let kappa = s.kappa();
    let lhs = report.j / (1.0 - report.rho);
    let rhs = match cfg.sigma_mode {
        SigmaMode::Fixed => cfg.effective_sigma().powi(2) * ((kappa + 1.0) / 8.0).powi(2),
        SigmaMode::EqualsAlpha => (kappa / (8.0 * s.l())).powi(2),
    };
    Ok(TradeoffMargin {
        lhs,
        rhs,
        holds: lhs >= rhs,
    })
}

/// Lower bound on Nesterov's modal variance at `λ = m` for any stabilizing
/// parameters, `κ²/(24(1−β)κ + 32β)`.
pub fn na_jhat_m_lower_bound(kappa: f64, beta: f64) -> Result<f64> {
    if !(kappa > 2.0) {
        return Err(Error::KappaTooSmall { kappa });
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "momentum must lie in (0, 1), got {beta}"
        )));
    }
    Ok(kappa * kappa / (24.0 * (1.0 - beta) * kappa + 32.0 * beta))
}

/// Smallest normalized variance over sampled rate-capped configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelerationFloor {
    pub algo: Algo,
    pub kappa: f64,
    pub c: f64,
    pub sigma_mode: SigmaMode,
    /// Number of sampled configurations meeting the cap.
    pub samples: usize,
    /// `min J/(σ²κ^{3/2})`, or `min J·L²/κ^{3/2}` when `σ = α`; `None` when
    /// no sample meets the cap.
    pub min_ratio: Option<f64>,
    pub alpha_at_min: Option<f64>,
    pub beta_at_min: Option<f64>,
}

/// Sampling density for [`acceleration_floor`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorGrid {
    pub beta_points: usize,
    pub alpha_points: usize,
}

impl Default for FloorGrid {
    fn default() -> Self {
        Self {
            beta_points: 200,
            alpha_points: 200,
        }
    }
}

/// `(ratio, α, β)` of a sampled configuration.
type Candidate = (f64, f64, f64);

/// Scans `(α, β)` on the spectrum `{1, κ}` and records the smallest
/// normalized `J` among stable samples with `ρ ≤ 1 − c/√κ`.
pub fn acceleration_floor(
    algo: Algo,
    kappa: f64,
    c: f64,
    sigma_mode: SigmaMode,
    grid: FloorGrid,
) -> Result<AccelerationFloor> {
    if algo == Algo::Gd {
        return Err(Error::UnsupportedAlgorithm(algo));
    }
    if !(kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "condition number must be >= 1, got {kappa}"
        )));
    }
    let (m, l) = (1.0, kappa);
    let cap = 1.0 - c / kappa.sqrt();
    let scale = kappa.powf(1.5);
    let betas = momentum_grid(grid.beta_points);
    let per_beta: Vec<(usize, Option<Candidate>)> = betas
        .par_iter()
        .map(|&beta| {
            let limit = match algo {
                Algo::Hb => 2.0 * (1.0 + beta) / l,
                _ => (2.0 * beta + 2.0) / (l * (2.0 * beta + 1.0)),
            };
            let mut count = 0;
            let mut best: Option<Candidate> = None;
            for i in 0..grid.alpha_points {
                // fractions of the stability limit, log-spaced in [1e-4, 1)
                let frac = 10f64.powf(-4.0 * (1.0 - i as f64 / grid.alpha_points as f64));
                let alpha = frac * limit;
                let Ok(cfg) = AlgoConfig::new(algo, alpha, beta, 1.0, sigma_mode) else {
                    continue;
                };
                let rho = convergence_rate_extremes(&cfg, m, l);
                if !(rho <= cap && rho < INSTABILITY_THRESHOLD) {
                    continue;
                }
                let (Ok(jm), Ok(jl)) = (modal_variance(&cfg, m), modal_variance(&cfg, l)) else {
                    continue;
                };
                let j = jm + jl;
                let ratio = match sigma_mode {
                    SigmaMode::Fixed => j / (cfg.effective_sigma().powi(2) * scale),
                    SigmaMode::EqualsAlpha => j * l * l / scale,
                };
                count += 1;
                if best.is_none_or(|b| ratio < b.0) {
                    best = Some((ratio, alpha, beta));
                }
            }
            (count, best)
        })
        .collect();
    let mut samples = 0;
    let mut best: Option<Candidate> = None;
    for (count, cand) in per_beta {
        samples += count;
        if let Some(c) = cand {
            if best.is_none_or(|b| c.0 < b.0) {
                best = Some(c);
            }
        }
    }
    Ok(AccelerationFloor {
        algo,
        kappa,
        c,
        sigma_mode,
        samples,
        min_ratio: best.map(|b| b.0),
        alpha_at_min: best.map(|b| b.1),
        beta_at_min: best.map(|b| b.2),
    })
}

/// Floors across several condition numbers and whether successive minima
/// stay within a factor of 10 of each other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloorScan {
    pub floors: Vec<AccelerationFloor>,
    pub max_successive_ratio: Option<f64>,
    pub bounded: bool,
}

pub fn acceleration_floor_scan(
    algo: Algo,
    kappas: &[f64],
    c: f64,
    sigma_mode: SigmaMode,
    grid: FloorGrid,
) -> Result<FloorScan> {
    let floors = kappas
        .iter()
        .map(|&k| acceleration_floor(algo, k, c, sigma_mode, grid))
        .collect::<Result<Vec<_>>>()?;
    let mins: Option<Vec<f64>> = floors.iter().map(|f| f.min_ratio).collect();
    let max_successive_ratio = mins
        .as_ref()
        .map(|v| v.windows(2).map(|w| (w[1] / w[0]).max(w[0] / w[1])).fold(1.0, f64::max));
    let bounded =
        mins.as_ref().is_some_and(|v| v.iter().all(|&x| x > 0.0)) && max_successive_ratio.is_some_and(|r| r <= 10.0);
    Ok(FloorScan {
        floors,
        max_successive_ratio,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{convergence_rate, modal_spectral_radius};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn conventional_examples() {
        let gd = conventional_params(Algo::Gd, 2.0, 2.0).unwrap();
        assert_eq!(gd.config.alpha, 0.5);
        assert_eq!(gd.rho, 0.0);
        let na = conventional_params(Algo::Na, 1.0, 9.0).unwrap();
        assert_eq!(na.config.beta, 0.5);
        assert!(rel(na.rho, (2.0f64 / 3.0).sqrt()) < 1e-15);
        assert_eq!(
            conventional_params(Algo::Hb, 1.0, 9.0),
            Err(Error::NoGuarantee(Algo::Hb))
        );
    }

    #[test]
    fn optimal_examples() {
        let hb = optimal_quadratic_params(Algo::Hb, 1.0, 9.0).unwrap();
        assert_eq!((hb.config.alpha, hb.config.beta, hb.rho), (0.25, 0.25, 0.5));
        assert_eq!(optimal_quadratic_params(Algo::Gd, 3.0, 3.0).unwrap().rho, 0.0);
        let na = optimal_quadratic_params(Algo::Na, 1.0, 9.0).unwrap();
        let r = 28f64.sqrt();
        assert!(rel(na.rho, (r - 2.0) / r) < 1e-15);
        for lambda in [1.0, 9.0] {
            assert!(modal_spectral_radius(&na.config, lambda) <= na.rho * (1.0 + 1e-12));
        }
    }

    #[test]
    fn optimal_rates_match_spectrum_scan() {
        for &kappa in &[1.0, 2.0, 9.0, 100.0, 1e4, 1e6] {
            let s = Spectrum::new(&[1.0, 0.5 + 0.5 * kappa, kappa]).unwrap();
            for algo in Algo::ALL {
                let t = optimal_quadratic_params(algo, 1.0, kappa).unwrap();
                let rho = convergence_rate(&t.config, &s);
                assert!((rho - t.rho).abs() <= 1e-12, "{algo} kappa={kappa}: {rho} vs {}", t.rho);
            }
        }
    }

    #[test]
    fn hb_equioscillation() {
        for &kappa in &[2.0, 9.0, 1e3, 1e5] {
            let cfg = optimal_quadratic_params(Algo::Hb, 1.0, kappa).unwrap().config;
            let a = modal_spectral_radius(&cfg, 1.0);
            let b = modal_spectral_radius(&cfg, kappa);
            assert!((a - b).abs() <= 1e-12, "kappa={kappa}: {a} vs {b}");
        }
    }

    #[test]
    fn hb_rate_optimal_stepsize() {
        assert_eq!(rate_optimal_stepsize_hb(0.0, 1.0, 3.0), 0.5);
        assert_eq!(rate_optimal_stepsize_hb(0.25, 1.0, 9.0), 0.25);
        let best = rate_optimal_stepsize_hb(0.9, 1.0, 100.0);
        assert!(rel(best, 3.8 / 101.0) < 1e-15);
        let at_best = convergence_rate_extremes(&AlgoConfig::hb(best, 0.9).unwrap(), 1.0, 100.0);
        let limit = 2.0 * 1.9 / 100.0;
        for i in 1..1000 {
            let a = limit * i as f64 / 1000.0;
            let r = convergence_rate_extremes(&AlgoConfig::hb(a, 0.9).unwrap(), 1.0, 100.0);
            assert!(r >= at_best - 1e-15, "alpha {a}");
        }
    }

    #[test]
    fn gd_constrained_symmetric_half_factor() {
        let s = Spectrum::new(&[1.0, 3.0]).unwrap();
        let res = tune_constrained(Algo::Gd, &s, 1.0, TuningGrid::default()).unwrap();
        let j2 = total_variance(&optimal_quadratic_params(Algo::Gd, 1.0, 3.0).unwrap().config, &s).unwrap();
        // brute-force scan of the feasible stepsizes [1/L, (2 - 1/κ)/L]
        let (lo, hi) = (1.0 / 3.0, (2.0 - 1.0 / 3.0) / 3.0);
        let best = (0..=10_000)
            .map(|i| lo + (hi - lo) * i as f64 / 10_000.0)
            .map(|a| total_variance(&AlgoConfig::gd(a).unwrap(), &s).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(res.j_star <= best * (1.0 + 1e-9), "{} vs {best}", res.j_star);
        assert!((lo..=hi).contains(&res.alpha_star));
        assert!(res.j_star >= 0.5 * j2);
        assert!(res.rho_star <= 1.0 - 1.0 / 3.0 + 1e-12);
    }

    #[test]
    fn hb_constrained_reports_ratio() {
        let s = Spectrum::new(&[1.0, 2.0, 3.0]).unwrap();
        let res = tune_constrained(Algo::Hb, &s, 1.0, TuningGrid::default()).unwrap();
        let j2 = total_variance(&optimal_quadratic_params(Algo::Hb, 1.0, 3.0).unwrap().config, &s).unwrap();
        let ratio = res.j_star / j2;
        assert!(ratio > 0.0 && ratio <= 1.0 + 1e-9, "{ratio}");
        assert!(res.rho_star <= 1.0 - 1.0 / 3f64.sqrt() + 1e-12);
        let again = uninterpreted(&tune_constrained(Algo::Hb, &s, 1.0, TuningGrid::default()).unwrap());
        assert_eq!(uninterpreted(&res), again);
    }

    fn uninterpreted(r: &TuningResult) -> (u64, u64) {
        (r.alpha_star.to_bits(), r.beta_star.to_bits())
    }

    #[test]
    fn infeasible_caps() {
        let s = Spectrum::new(&[1.0, 9.0]).unwrap();
        assert!(matches!(
            tune_constrained(Algo::Gd, &s, 5.0, TuningGrid::default()),
            Err(Error::InfeasibleCap { .. })
        ));
        assert!(matches!(
            tune_constrained(Algo::Hb, &s, 2.5, TuningGrid::default()),
            Err(Error::InfeasibleCap { .. })
        ));
        assert!(tune_constrained(Algo::Na, &s, 1.0, TuningGrid::default()).is_err());
    }

    #[test]
    fn tradeoff_examples() {
        let s = Spectrum::new(&[1.0, 9.0]).unwrap();
        let cfg = optimal_quadratic_params(Algo::Hb, 1.0, 9.0).unwrap().config;
        assert!(hb_tradeoff_margin(&cfg, &s).unwrap().holds);

        let s = Spectrum::new(&[1.0, 100.0]).unwrap();
        let cfg = AlgoConfig::hb(0.01, 1e-9).unwrap();
        assert!(hb_tradeoff_margin(&cfg, &s).unwrap().holds);
        let cfg = cfg.with_sigma_mode(SigmaMode::EqualsAlpha).unwrap();
        assert!(hb_tradeoff_margin(&cfg, &s).unwrap().holds);
    }

    #[test]
    fn na_lower_bound_examples() {
        assert_eq!(na_jhat_m_lower_bound(4.0, 0.5).unwrap(), 0.25);
        assert_eq!(
            na_jhat_m_lower_bound(2.0, 0.5),
            Err(Error::KappaTooSmall { kappa: 2.0 })
        );
    }

    #[test]
    fn na_lower_bound_grid() {
        let kappa = 100.0;
        for bi in 1..100 {
            let beta = bi as f64 / 100.0;
            let limit = (2.0 * beta + 2.0) / (kappa * (2.0 * beta + 1.0));
            for ai in 1..100 {
                let alpha = limit * ai as f64 / 100.0;
                let cfg = AlgoConfig::na(alpha, beta).unwrap();
                if convergence_rate_extremes(&cfg, 1.0, kappa) >= 1.0 {
                    continue;
                }
                let j = modal_variance(&cfg, 1.0).unwrap();
                assert!(j >= na_jhat_m_lower_bound(kappa, beta).unwrap());
            }
        }
    }

    #[test]
    fn floor_examples() {
        let f = acceleration_floor(Algo::Hb, 100.0, 1.0, SigmaMode::Fixed, FloorGrid::default()).unwrap();
        assert!(f.samples > 0 && f.min_ratio.unwrap() > 0.0);
        let none = acceleration_floor(Algo::Hb, 100.0, 50.0, SigmaMode::Fixed, FloorGrid::default()).unwrap();
        assert_eq!(none.samples, 0);
        assert_eq!(none.min_ratio, None);

        let r: Vec<f64> = [1e2, 1e4]
            .iter()
            .map(|&k| {
                let cfg = optimal_quadratic_params(Algo::Na, 1.0, k).unwrap().config;
                total_variance(&cfg, &Spectrum::new(&[1.0, k]).unwrap()).unwrap() / k.powf(1.5)
            })
            .collect();
        assert!((r[0] / r[1]).max(r[1] / r[0]) <= 10.0);
    }

    #[test]
    fn momentum_grid_shape() {
        let g = momentum_grid(400);
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 0.0);
        assert!((1.0 - g[399] - 1e-4).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn tradeoff_holds_for_random_hb(beta in 0.0f64..0.999, frac in 1e-3f64..0.999, log_kappa in 0.5f64..3.0, equals_alpha in any::<bool>()) {
            let kappa = 10f64.powf(log_kappa);
            let alpha = frac * 2.0 * (1.0 + beta) / kappa;
            let mode = if equals_alpha { SigmaMode::EqualsAlpha } else { SigmaMode::Fixed };
            let cfg = AlgoConfig::new(Algo::Hb, alpha, beta, 1.0, mode).unwrap();
            let s = Spectrum::new(&[1.0, kappa]).unwrap();
            prop_assume!(convergence_rate(&cfg, &s) < 1.0 - 1e-9);
            prop_assert!(hb_tradeoff_margin(&cfg, &s).unwrap().holds);
        }
    }
}
