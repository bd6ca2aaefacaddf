use crate::error::{Result, SelError};

/// Uniform cell-centered grid on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub n: usize,
    pub dx: f64,
    pub x_centers: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(SelError::ParamDomain(format!("grid needs at least 3 cells, got {n}")));
        }
        let dx = 1.0 / n as f64;
        let x_centers = (0..n).map(|i| (i as f64 + 0.5) * dx).collect();
        Ok(Grid { n, dx, x_centers })
    }
}
