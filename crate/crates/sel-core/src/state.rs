use crate::error::{Result, SelError};
use crate::grid::Grid;
use crate::params::DEFAULT_RHO_FLOOR;

/// Cell-sampled density/momentum pair on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub rho: Vec<f64>,
    pub m: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    pub fn new(rho: Vec<f64>, m: Vec<f64>, t: f64) -> Result<Self> {
        if rho.len() != m.len() {
            return Err(SelError::Precondition(format!(
                "state arrays disagree: {} density cells vs {} momentum cells",
                rho.len(),
                m.len()
            )));
        }
        let s = FieldState { rho, m, t };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(n: usize, rho: f64, m: f64) -> Self {
        FieldState { rho: vec![rho; n], m: vec![m; n], t: 0.0 }
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// Discrete total mass sum(rho) * dx.
    pub fn mass(&self, grid: &Grid) -> f64 {
        self.rho.iter().sum::<f64>() * grid.dx
    }

    /// Velocity of cell `i` with the vacuum guard.
    #[inline]
    pub fn velocity(&self, i: usize, rho_floor: f64) -> f64 {
        self.m[i] / self.rho[i].max(rho_floor)
    }

    pub fn velocities(&self, rho_floor: f64) -> Vec<f64> {
        (0..self.n()).map(|i| self.velocity(i, rho_floor)).collect()
    }

    /// Checks finiteness and nonnegative density; reports the offending cell.
    pub fn validate(&self) -> Result<()> {
        for (i, (&r, &m)) in self.rho.iter().zip(&self.m).enumerate() {
            if !r.is_finite() || !m.is_finite() {
                return Err(SelError::Blowup {
                    cell: i,
                    t: self.t,
                    what: format!("non-finite state (rho={r}, m={m})"),
                });
            }
            if r < 0.0 {
                return Err(SelError::Precondition(format!("rho[{i}] = {r} is negative")));
            }
        }
        Ok(())
    }

    /// Max |u| over cells, with the default floor.
    pub fn max_abs_velocity(&self) -> f64 {
        (0..self.n())
            .map(|i| self.velocity(i, DEFAULT_RHO_FLOOR).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_of_constant_state() {
        let g = Grid::new(100).unwrap();
        let s = FieldState::constant(100, 0.5, 0.0);
        assert!((s.mass(&g) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_negative_density_and_nan() {
        assert!(FieldState::new(vec![1.0, -0.1, 1.0], vec![0.0; 3], 0.0).is_err());
        assert!(FieldState::new(vec![1.0, f64::NAN, 1.0], vec![0.0; 3], 0.0).is_err());
        assert!(FieldState::new(vec![1.0; 3], vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn velocity_uses_floor_at_vacuum() {
        let s = FieldState::new(vec![0.0, 1.0], vec![0.0, 2.0], 0.0).unwrap();
        assert_eq!(s.velocity(0, 1e-10), 0.0);
        assert_eq!(s.velocity(1, 1e-10), 2.0);
    }
}
