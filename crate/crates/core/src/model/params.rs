use crate::error::{Error, Result};
use crate::scalar::Real;

/// Physical constants of the barotropic system with pressure `P = rho^gamma`.
///
/// The pressure constant is fixed to one. Fields are private so that the
/// relation `nu = 2 mu + lambda` can never be broken after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams<T> {
    mu: T,
    lambda: T,
    nu: T,
    gamma: T,
    cap_a: T,
    rho_far: T,
}

/// Validates and builds [`FluidParams`].
///
/// Rejects `mu <= 0`, `mu + lambda < 0`, `gamma <= 1`, negative slip
/// coefficient or far-field density, and a vacuum far field (`rho_far == 0`)
/// combined with a nonzero slip coefficient.
pub fn make_params<T: Real>(mu: T, lambda: T, gamma: T, cap_a: T, rho_far: T) -> Result<FluidParams<T>> {
    for (name, v) in [("mu", mu), ("lambda", lambda), ("gamma", gamma), ("A", cap_a), ("rho_far", rho_far)] {
        if !v.is_finite() {
            return Err(Error::Params(format!("{name} must be finite")));
        }
    }
    if mu <= T::zero() {
        return Err(Error::Params(format!("mu > 0 violated (mu = {mu})")));
    }
    if mu + lambda < T::zero() {
        return Err(Error::Params(format!(
            "μ+λ ≥ 0 violated (mu + lambda = {}); physical restriction mu > 0, mu + lambda >= 0",
            mu + lambda
        )));
    }
    if gamma <= T::one() {
        return Err(Error::Params(format!("gamma > 1 violated (gamma = {gamma})")));
    }
    if cap_a < T::zero() {
        return Err(Error::Params(format!("slip coefficient A must be >= 0 (A = {cap_a})")));
    }
    if rho_far < T::zero() {
        return Err(Error::Params(format!("far-field density must be >= 0 (rho_far = {rho_far})")));
    }
    if rho_far == T::zero() && cap_a != T::zero() {
        return Err(Error::Params("vacuum far field (rho_far = 0) requires A = 0".into()));
    }
    Ok(FluidParams { mu, lambda, nu: T::two() * mu + lambda, gamma, cap_a, rho_far })
}

impl<T: Real> FluidParams<T> {
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn lambda(&self) -> T {
        self.lambda
    }
    /// Bulk combination `2 mu + lambda`.
    pub fn nu(&self) -> T {
        self.nu
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }
    pub fn cap_a(&self) -> T {
        self.cap_a
    }
    pub fn rho_far(&self) -> T {
        self.rho_far
    }
    pub fn is_vacuum(&self) -> bool {
        self.rho_far == T::zero()
    }
    /// Background pressure `P(rho_far)`.
    pub fn p_far(&self) -> T {
        self.rho_far.powf(self.gamma)
    }
    pub fn pressure_of(&self, rho: T) -> T {
        rho.powf(self.gamma)
    }
    /// Copy of these parameters with a different `lambda`, keeping `mu`.
    pub fn with_nu(&self, nu: T) -> Result<Self> {
        make_params(self.mu, nu - T::two() * self.mu, self.gamma, self.cap_a, self.rho_far)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nu_is_bulk_combination() {
        let p = make_params(1.0, 0.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(p.nu(), 2.0);
        let p = make_params(1.0, 98.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(p.nu(), 100.0);
        assert!(p.nu() >= p.mu());
    }

    #[test]
    fn rejects_physical_violations() {
        let e = make_params(1.0, -2.0, 2.0, 0.0, 1.0).unwrap_err();
        assert!(e.to_string().contains("μ+λ ≥ 0 violated"));
        assert!(make_params(0.0, 0.0, 2.0, 0.0, 1.0).is_err());
        assert!(make_params(1.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(make_params(1.0, 0.0, 2.0, -1.0, 1.0).is_err());
        assert!(make_params(1.0, 0.0, 2.0, 0.0, -1.0).is_err());
        assert!(make_params(1.0, 0.0, 2.0, 0.5, 0.0).is_err());
        assert!(make_params(1.0, 0.0, 2.0, 0.5, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn constructed_params_satisfy_relations(mu in 1e-3f64..1e3, extra in 0.0f64..1e3, gamma in 1.01f64..5.0) {
            let lambda = extra - mu;
            let p = make_params(mu, lambda, gamma, 0.0, 1.0).unwrap();
            // one rounding of the sum, nothing more
            prop_assert!((p.nu() - 2.0 * p.mu() - p.lambda()).abs() <= f64::EPSILON * p.nu());
            prop_assert!(p.nu() >= p.mu());
        }
    }
}
