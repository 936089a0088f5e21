//! Shared fixtures for the benchmarks in `benches/`.

use noiseamp::{optimal_quadratic_params, Algo, AlgoConfig, Spectrum};

/// `n` eigenvalues evenly spaced on `[1, κ]`.
pub fn spread_spectrum(kappa: f64, n: usize) -> Spectrum {
    Spectrum::linspace(1.0, kappa, n).expect("valid spectrum")
}

/// Rate-optimal parameters for `s`.
pub fn rate_optimal(algo: Algo, s: &Spectrum) -> AlgoConfig {
    optimal_quadratic_params(algo, s.m(), s.l())
        .expect("valid extremes")
        .config
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let s = spread_spectrum(100.0, 10);
        assert_eq!(s.n(), 10);
        assert_eq!(s.kappa(), 100.0);
        assert_eq!(rate_optimal(Algo::Gd, &s).alpha, 2.0 / 101.0);
    }
}
