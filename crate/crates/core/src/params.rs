use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slopes of the birth law at the two equilibria together with the
/// positive equilibrium itself and the junction point of the unimodal law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// `g'(0)`, must exceed 1.
    pub slope_zero: f64,
    /// `g'(kappa)`, must be negative.
    pub slope_kappa: f64,
    /// Positive equilibrium.
    pub kappa: f64,
    /// Point where the birth law switches from increasing to decreasing.
    pub theta_junction: f64,
}

/// Positive equilibrium of the piecewise-linear model.
pub const TOY_KAPPA: f64 = 2.0;
/// Slope of the piecewise-linear law at its positive equilibrium.
pub const TOY_SLOPE_KAPPA: f64 = -1.0;
/// Junction point of the piecewise-linear law.
pub const TOY_JUNCTION: f64 = 1.0;
/// `sup g(x)/x` for the piecewise-linear law, attained at the junction.
pub const TOY_SUP_SLOPE: f64 = 3.0;

impl ModelParams {
    pub fn new(slope_zero: f64, slope_kappa: f64, kappa: f64, theta_junction: f64) -> Result<Self> {
        let p = ModelParams {
            slope_zero,
            slope_kappa,
            kappa,
            theta_junction,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters of the piecewise-linear law `g(u) = k u` on `[0,1)`,
    /// `g(u) = 4 - u` on `[1, inf)`.
    pub fn toy(k: f64) -> Result<Self> {
        check_toy_slope(k)?;
        Self::new(k, TOY_SLOPE_KAPPA, TOY_KAPPA, TOY_JUNCTION)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.slope_zero, self.slope_kappa, self.kappa, self.theta_junction]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("model parameters must be finite"));
        }
        if self.slope_zero <= 1.0 {
            return Err(Error::domain(format!(
                "slope at zero must exceed 1, got {}",
                self.slope_zero
            )));
        }
        if self.slope_kappa >= 0.0 {
            return Err(Error::domain(format!(
                "slope at the positive equilibrium must be negative, got {}",
                self.slope_kappa
            )));
        }
        if self.kappa <= 0.0 || self.theta_junction <= 0.0 || self.theta_junction >= self.kappa {
            return Err(Error::domain(format!(
                "need 0 < theta < kappa, got theta = {}, kappa = {}",
                self.theta_junction, self.kappa
            )));
        }
        Ok(())
    }

    /// True when these parameters are an instance of the piecewise-linear model.
    pub fn is_toy(&self) -> bool {
        self.kappa == TOY_KAPPA
            && self.slope_kappa == TOY_SLOPE_KAPPA
            && self.theta_junction == TOY_JUNCTION
            && self.slope_zero > 1.0
            && self.slope_zero < 3.0
    }
}

pub(crate) fn check_toy_slope(k: f64) -> Result<()> {
    if !(k > 1.0 && k < 3.0) {
        return Err(Error::domain(format!("toy slope k must lie in (1, 3), got {k}")));
    }
    Ok(())
}

/// Birth law of the piecewise-linear model.
pub fn toy_birth(u: f64, k: f64) -> f64 {
    if u < TOY_JUNCTION {
        k * u
    } else {
        4.0 - u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_instance_is_recognized() {
        let p = ModelParams::toy(1.2).unwrap();
        assert!(p.is_toy());
        assert_eq!(p.kappa, 2.0);
        assert!(ModelParams::toy(3.0).is_err());
        assert!(ModelParams::toy(1.0).is_err());
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(ModelParams::new(0.9, -1.0, 2.0, 1.0).is_err());
        assert!(ModelParams::new(1.5, 0.5, 2.0, 1.0).is_err());
        assert!(ModelParams::new(1.5, -1.0, 2.0, 2.5).is_err());
        assert!(ModelParams::new(1.5, -1.0, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn toy_birth_law_fixes_equilibria() {
        assert_eq!(toy_birth(0.0, 1.2), 0.0);
        assert_eq!(toy_birth(2.0, 1.2), 2.0);
        assert_eq!(toy_birth(1.0, 1.2), 3.0);
        assert!((toy_birth(0.999, 1.2) - 1.1988).abs() < 1e-12);
    }
}
