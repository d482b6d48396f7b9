//! Monte Carlo estimates with delta-method error propagation.

use serde::{Deserialize, Serialize};

use crate::exec::{Accumulated, McConfig};

/// Excess kurtosis above which a run is flagged as unstable.
pub const KURTOSIS_ALERT: f64 = 100.0;

/// Relative error floor used when a statistic has zero sample variance.
pub const NUMERIC_FLOOR_REL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Raw sample mean.
    #[default]
    None,
    /// Mean raised to `power` after averaging.
    Power { power: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub transform: Transform,
    pub rejected: usize,
    pub excess_kurtosis: f64,
    pub unstable: bool,
}

impl Estimate {
    /// Deterministic value carrying no sampling error.
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            samples: 0,
            seed: 0,
            transform: Transform::None,
            rejected: 0,
            excess_kurtosis: 0.0,
            unstable: false,
        }
    }

    /// Estimate of component `c` of an accumulated vector statistic.
    pub fn from_accumulated(acc: &Accumulated, c: usize, cfg: &McConfig) -> Self {
        let m = &acc.moments;
        let kurt = m.excess_kurtosis(c);
        let unstable = kurt > KURTOSIS_ALERT;
        if unstable {
            log::warn!("heavy-tailed integrand: excess kurtosis {kurt:.1}");
        }
        Estimate {
            mean: m.mean[c],
            std_error: m.std_error(c),
            samples: cfg.samples,
            seed: cfg.seed,
            transform: Transform::None,
            rejected: acc.rejected,
            excess_kurtosis: kurt,
            unstable,
        }
    }

    /// `mean^power` with `SE(m^p) = |p|·m^{p-1}·SE(m)`.
    pub fn power(&self, power: f64) -> Self {
        let m = self.mean;
        let value = m.powf(power);
        let se = (power * m.powf(power - 1.0)).abs() * self.std_error;
        Estimate {
            mean: value,
            std_error: se,
            transform: Transform::Power { power },
            ..self.clone()
        }
    }

    /// Multiply by a deterministic constant.
    pub fn scale(&self, c: f64) -> Self {
        Estimate {
            mean: self.mean * c,
            std_error: self.std_error * c.abs(),
            ..self.clone()
        }
    }

    /// Standard error floored at a tiny multiple of the mean, so that
    /// zero-variance statistics can still be compared in SE units.
    pub fn effective_se(&self) -> f64 {
        self.std_error.max(NUMERIC_FLOOR_REL * self.mean.abs())
    }

    /// Product of two independent estimates, relative errors added in quadrature.
    pub fn product(&self, other: &Estimate) -> Self {
        let mean = self.mean * other.mean;
        Estimate {
            mean,
            std_error: mean.abs() * self.relative_se().hypot(other.relative_se()),
            samples: self.samples + other.samples,
            ..self.clone()
        }
    }

    /// Quotient of two independent estimates.
    pub fn ratio(&self, other: &Estimate) -> Self {
        let mean = self.mean / other.mean;
        Estimate {
            mean,
            std_error: mean.abs() * self.relative_se().hypot(other.relative_se()),
            samples: self.samples + other.samples,
            ..self.clone()
        }
    }

    /// `√(SE₁² + SE₂²)` of two independent-or-not estimates.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        self.effective_se().hypot(other.effective_se())
    }

    pub fn relative_se(&self) -> f64 {
        if self.mean == 0.0 {
            0.0
        } else {
            self.std_error / self.mean.abs()
        }
    }
}
