use crate::error::{Result, SelError};
use serde::{Deserialize, Serialize};

/// Density floor used whenever a quantity divides by rho (velocity, entropy
/// kernels). States themselves are stored exactly; the floor never feeds back
/// into the dynamics of rho.
pub const DEFAULT_RHO_FLOOR: f64 = 1e-10;

/// Physical and scheme constants of the damped isentropic system.
///
/// `theta` and `kappa` are derived from `gamma` and can never be set
/// independently: theta = (gamma - 1)/2 and kappa = theta^2 / gamma, so the
/// pressure law is p(rho) = kappa * rho^gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub theta: f64,
    pub kappa: f64,
    /// Linear damping rate in the momentum equation.
    pub alpha: f64,
    /// Artificial viscosity of the regularized system.
    pub epsilon: f64,
    /// Squared Lipschitz bound of the noise coefficient.
    pub a0: f64,
    /// Density bound of admissible initial data.
    pub m1: f64,
    /// Velocity bound of admissible initial data (|m0| <= m2 * rho0).
    pub m2: f64,
}

/// Builds `ModelParams`, deriving `theta` and `kappa`.
pub fn make_params(
    gamma: f64,
    alpha: f64,
    epsilon: f64,
    a0: f64,
    m1: f64,
    m2: f64,
) -> Result<ModelParams> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(SelError::ParamDomain(format!("gamma must be > 1, got {gamma}")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(SelError::ParamDomain(format!("alpha must be > 0, got {alpha}")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(SelError::ParamDomain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(a0 >= 0.0) || !a0.is_finite() {
        return Err(SelError::ParamDomain(format!("a0 must be >= 0, got {a0}")));
    }
    if !(m1 > 0.0) || !m1.is_finite() {
        return Err(SelError::ParamDomain(format!("m1 must be > 0, got {m1}")));
    }
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(SelError::ParamDomain(format!("m2 must be > 0, got {m2}")));
    }
    let theta = (gamma - 1.0) / 2.0;
    let kappa = theta * theta / gamma;
    Ok(ModelParams { gamma, theta, kappa, alpha, epsilon, a0, m1, m2 })
}

impl ModelParams {
    /// Pressure p(rho) = kappa * rho^gamma. Rejects negative densities.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 {
            return Err(SelError::ParamDomain(format!("pressure: rho must be >= 0, got {rho}")));
        }
        Ok(self.p(rho))
    }

    /// Unchecked pressure kernel; callers guarantee rho >= 0.
    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        self.kappa * rho.powf(self.gamma)
    }

    /// p'(rho) = kappa * gamma * rho^(gamma-1).
    #[inline]
    pub(crate) fn dp(&self, rho: f64) -> f64 {
        self.kappa * self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Sound speed c(rho) = sqrt(p'(rho)) = sqrt(kappa*gamma) * rho^theta.
    #[inline]
    pub(crate) fn sound_speed(&self, rho: f64) -> f64 {
        (self.kappa * self.gamma).sqrt() * rho.powf(self.theta)
    }

    /// Kinetic exponent lambda = (3 - gamma) / (2 (gamma - 1)).
    #[inline]
    pub fn lambda(&self) -> f64 {
        (3.0 - self.gamma) / (2.0 * (self.gamma - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_gamma_2() {
        let p = make_params(2.0, 1.0, 1e-3, 0.01, 1.0, 1.0).unwrap();
        assert_eq!(p.theta, 0.5);
        assert_eq!(p.kappa, 0.125);
    }

    #[test]
    fn derived_constants_gamma_3() {
        let p = make_params(3.0, 1.0, 0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.theta, 1.0);
        assert!((p.kappa - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.lambda(), 0.0);
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(make_params(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(make_params(0.5, 1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(make_params(2.0, 0.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(make_params(2.0, -1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(make_params(2.0, 1.0, -1e-9, 0.0, 1.0, 1.0).is_err());
        assert!(make_params(2.0, 1.0, 0.0, -0.1, 1.0, 1.0).is_err());
        assert!(make_params(2.0, 1.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn pressure_values() {
        let p = make_params(2.0, 1.0, 0.0, 0.0, 2.0, 1.0).unwrap();
        assert_eq!(p.pressure(0.0).unwrap(), 0.0);
        assert!((p.pressure(1.0).unwrap() - 0.125).abs() < 1e-16);
        assert!((p.pressure(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(p.pressure(-0.1).is_err());
    }

    #[test]
    fn pressure_monotone_and_convex() {
        let p = make_params(1.6, 1.0, 0.0, 0.0, 2.0, 1.0).unwrap();
        let mut prev = 0.0;
        for k in 1..200 {
            let rho = k as f64 * 0.01;
            let v = p.pressure(rho).unwrap();
            assert!(v > prev);
            prev = v;
        }
        // second difference >= 0 on positive triples
        for k in 1..100 {
            let r = k as f64 * 0.02;
            let h = 0.01;
            let d2 = p.p(r + h) - 2.0 * p.p(r) + p.p(r - h).max(0.0);
            assert!(d2 >= -1e-15, "second difference at {r}: {d2}");
        }
    }
}
