use std::f64::consts::PI;

/// Multiplicative noise coefficient family.
///
/// sigma(x, rho, m) = sqrt(A0) * m * envelope(x) * cutoff(rho, m), where
/// the envelope is sin(pi x) (zero at both endpoints) and the cutoff is a C^2
/// polynomial bump supported on the box [0, M1] x [-M1*M2, M1*M2]:
///
///   cutoff(rho, m) = (4 r (1-r))^3 * (1 - s^2)^3 / L,   r = rho/M1, s = m/(M1*M2),
///
/// with L >= 1 a normalization chosen so that |grad_{rho,m} sigma| <= sqrt(A0)
/// everywhere. In this parametrization m * (1-s^2)^3 = B * psi(s) with
/// psi(s) = s (1-s^2)^3, which has |psi'| <= 1 and |psi(s)| <= |s|, so the
/// analytic bounds below are exact sups of the two partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub a0: f64,
    pub m1: f64,
    pub m2: f64,
    lips_norm: f64,
}

/// sup |psi(s)| for psi(s) = s(1-s^2)^3, attained at s = 1/sqrt(7).
fn psi_max() -> f64 {
    216.0 / (343.0 * 7f64.sqrt())
}

/// sup |Phi'(r)| for Phi(r) = (4r(1-r))^3, attained at r = (5 - sqrt5)/10.
fn phi_deriv_max() -> f64 {
    192.0 / (25.0 * 5f64.sqrt())
}

impl NoiseSpec {
    pub fn new(a0: f64, m1: f64, m2: f64) -> Self {
        // sup |d/dm (B psi(m/B) Phi)| = sup|psi'| * sup Phi = 1
        let l_m = 1.0;
        // sup |d/drho (B psi Phi(rho/M1))| = (B/M1) sup|psi| sup|Phi'| = M2 * Pq
        let l_rho = m2 * psi_max() * phi_deriv_max();
        let lips_norm = (l_m * l_m + l_rho * l_rho).sqrt().max(1.0);
        NoiseSpec { a0, m1, m2, lips_norm }
    }

    /// Silent noise (sigma identically zero).
    pub fn silent(m1: f64, m2: f64) -> Self {
        Self::new(0.0, m1, m2)
    }

    /// Momentum half-width of the support box.
    #[inline]
    pub fn m_bound(&self) -> f64 {
        self.m1 * self.m2
    }

    /// The support box [0, M1] x [-M1 M2, M1 M2] as ((rho_lo, rho_hi), (m_lo, m_hi)).
    pub fn support_box(&self) -> ((f64, f64), (f64, f64)) {
        let b = self.m_bound();
        ((0.0, self.m1), (-b, b))
    }

    #[inline]
    pub fn in_support_box(&self, rho: f64, m: f64) -> bool {
        let b = self.m_bound();
        (0.0..=self.m1).contains(&rho) && (-b..=b).contains(&m)
    }

    /// Spatial envelope, exactly zero at and beyond both endpoints.
    #[inline]
    pub fn envelope(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            (PI * x).sin()
        }
    }

    /// State cutoff in [0, 1], zero outside the support box.
    #[inline]
    pub fn cutoff(&self, rho: f64, m: f64) -> f64 {
        let r = rho / self.m1;
        if r <= 0.0 || r >= 1.0 {
            return 0.0;
        }
        let s = m / self.m_bound();
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = 4.0 * r * (1.0 - r);
        let c = 1.0 - s * s;
        q * q * q * c * c * c / self.lips_norm
    }

    /// The noise coefficient itself.
    #[inline]
    pub fn sigma(&self, x: f64, rho: f64, m: f64) -> f64 {
        if self.a0 == 0.0 {
            return 0.0;
        }
        self.a0.sqrt() * m * self.envelope(x) * self.cutoff(rho, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::mix64;

    fn unit(u: u64) -> f64 {
        ((u >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    #[test]
    fn vanishes_at_zero_momentum_and_vacuum() {
        let ns = NoiseSpec::new(0.04, 1.0, 1.0);
        for k in 0..100 {
            let rho = k as f64 / 99.0;
            assert_eq!(ns.sigma(0.37, rho, 0.0), 0.0);
            let m = -1.0 + 2.0 * k as f64 / 99.0;
            assert_eq!(ns.sigma(0.37, 0.0, m), 0.0);
        }
    }

    #[test]
    fn vanishes_at_boundary() {
        let ns = NoiseSpec::new(0.04, 1.0, 1.0);
        assert_eq!(ns.sigma(0.0, 0.5, 0.3), 0.0);
        assert_eq!(ns.sigma(1.0, 0.5, 0.3), 0.0);
    }

    #[test]
    fn vanishes_outside_support_box() {
        let ns = NoiseSpec::new(0.04, 1.0, 0.5);
        assert_eq!(ns.sigma(0.5, 1.5, 0.1), 0.0);
        assert_eq!(ns.sigma(0.5, 0.5, 0.7), 0.0);
        assert_eq!(ns.sigma(0.5, 2.0, 3.0), 0.0);
    }

    #[test]
    fn bounded_by_sqrt_a0_times_momentum() {
        let ns = NoiseSpec::new(0.09, 1.2, 0.8);
        let b = ns.m_bound();
        for k in 0..2000u64 {
            let rho = 1.4 * unit(mix64(k.wrapping_mul(3) + 1));
            let m = 1.4 * b * (2.0 * unit(mix64(k.wrapping_mul(7) + 2)) - 1.0);
            let x = unit(mix64(k.wrapping_mul(11) + 3));
            let s = ns.sigma(x, rho, m);
            assert!(s.abs() <= ns.a0.sqrt() * m.abs() + 1e-15, "sigma {s} vs bound at ({rho},{m})");
        }
    }

    #[test]
    fn sampled_lipschitz_in_state() {
        let ns = NoiseSpec::new(0.25, 1.0, 1.0);
        let sqrt_a0 = ns.a0.sqrt();
        for k in 0..5000u64 {
            let r1 = 1.4 * unit(mix64(5 * k + 1));
            let m1 = 1.6 * (2.0 * unit(mix64(5 * k + 2)) - 1.0);
            let r2 = 1.4 * unit(mix64(5 * k + 3));
            let m2 = 1.6 * (2.0 * unit(mix64(5 * k + 4)) - 1.0);
            let x = unit(mix64(5 * k + 5));
            let d_sigma = (ns.sigma(x, r1, m1) - ns.sigma(x, r2, m2)).abs();
            let d_state = ((r1 - r2).powi(2) + (m1 - m2).powi(2)).sqrt();
            assert!(
                d_sigma <= sqrt_a0 * d_state + 1e-14,
                "Lipschitz violated: {d_sigma} > {} * {d_state}",
                sqrt_a0
            );
        }
    }

    #[test]
    fn cutoff_bounded_by_one() {
        let ns = NoiseSpec::new(1.0, 1.0, 2.0);
        for k in 0..3000u64 {
            let rho = unit(mix64(2 * k + 1));
            let m = ns.m_bound() * (2.0 * unit(mix64(2 * k + 2)) - 1.0);
            let c = ns.cutoff(rho, m);
            assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn silent_noise_is_zero() {
        let ns = NoiseSpec::silent(1.0, 1.0);
        assert_eq!(ns.sigma(0.5, 0.5, 0.5), 0.0);
    }
}
