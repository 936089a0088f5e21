//! Hessian spectra of strongly convex quadratics.
//!
//! The quadratic analysis never materializes the Hessian: everything is a
//! function of its eigenvalues, stored here sorted descending so that
//! `eigenvalues[0] = L` and `eigenvalues[n-1] = m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    m: f64,
    #[serde(rename = "L")]
    l: f64,
    kappa: f64,
}

impl Spectrum {
    /// Validates and sorts (descending) a list of eigenvalues.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if let Some(&bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositiveEigenvalue { value: bad });
        }
        let mut eigenvalues = values.to_vec();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let l = eigenvalues[0];
        let m = eigenvalues[eigenvalues.len() - 1];
        Ok(Self {
            eigenvalues,
            m,
            l,
            kappa: l / m,
        })
    }

    /// `n` copies of one eigenvalue.
    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(&vec![value; n])
    }

    /// `n >= 2` eigenvalues evenly spaced on `[m, L]`; `n = 1` gives `{m}`.
    pub fn linspace(m: f64, l: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpectrum);
        }
        if n == 1 {
            return Self::new(&[m]);
        }
        let step = (l - m) / (n - 1) as f64;
        let mut v: Vec<f64> = (0..n).map(|i| m + step * i as f64).collect();
        v[n - 1] = l;
        Self::new(&v)
    }

    /// Parses `"1,2.5,9"` or a JSON array `"[1, 2.5, 9]"`.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let values: Vec<f64> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed).map_err(|e| Error::InvalidParameter(format!("spectrum JSON: {e}")))?
        } else {
            trimmed
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("spectrum entry {t:?}: {e}")))
                })
                .collect::<Result<_>>()?
        };
        Self::new(&values)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Whether the multiset is closed under `λ ↦ L + m − λ` (multiplicities
    /// included), comparing with absolute tolerance `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let center = self.l + self.m;
        // Mirrors of a descending sequence come out ascending; walk the
        // original from the back so both sides are ascending.
        let n = self.eigenvalues.len();
        (0..n).all(|i| {
            let value = self.eigenvalues[n - 1 - i];
            let mirror = center - self.eigenvalues[i];
            (value - mirror).abs() <= tol
        })
    }

    /// Default symmetry tolerance, `1e-12 · L`.
    pub fn default_symmetry_tol(&self) -> f64 {
        1e-12 * self.l
    }
}

impl<'de> Deserialize<'de> for Spectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Bare(Vec<f64>),
            Object { eigenvalues: Vec<f64> },
        }
        let values = match Repr::deserialize(d)? {
            Repr::Bare(v) => v,
            Repr::Object { eigenvalues } => eigenvalues,
        };
        Spectrum::new(&values).map_err(serde::de::Error::custom)
    }
}
