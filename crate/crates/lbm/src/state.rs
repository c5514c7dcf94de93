use crate::error::{LbmError, Result};
use crate::lattice::{equilibrium, Q};

/// Magnitude above which any population is treated as a blown-up simulation.
pub const INSTABILITY_LIMIT: f64 = 10.0;

/// Distribution functions over an `nx` by `ny` grid, stored as `(x, y, i)`
/// row-major with the direction index innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub nx: usize,
    pub ny: usize,
    pub f: Vec<f64>,
}

impl LatticeState {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        LatticeState {
            nx,
            ny,
            f: vec![0.0; nx * ny * Q],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, f: Vec<f64>) -> Result<Self> {
        if f.len() != nx * ny * Q {
            return Err(LbmError::Shape(format!(
                "expected {} values for a {nx}x{ny} lattice, got {}",
                nx * ny * Q,
                f.len()
            )));
        }
        if let Some(pos) = f.iter().position(|v| !v.is_finite()) {
            return Err(LbmError::InvalidInput(format!(
                "non-finite population at flat index {pos}"
            )));
        }
        Ok(LatticeState { nx, ny, f })
    }

    /// Every cell set to `equilibrium(rho, u)`.
    pub fn uniform(nx: usize, ny: usize, rho: f64, u: [f64; 2]) -> Result<Self> {
        let feq = equilibrium(rho, u)?;
        let mut f = Vec::with_capacity(nx * ny * Q);
        for _ in 0..nx * ny {
            f.extend_from_slice(&feq);
        }
        Ok(LatticeState { nx, ny, f })
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, i: usize) -> usize {
        (x * self.ny + y) * Q + i
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, i: usize) -> f64 {
        self.f[self.idx(x, y, i)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, i: usize, v: f64) {
        let k = self.idx(x, y, i);
        self.f[k] = v;
    }

    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let k = self.idx(x, y, 0);
        &self.f[k..k + Q]
    }

    pub fn cell_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let k = self.idx(x, y, 0);
        &mut self.f[k..k + Q]
    }

    pub fn total_mass(&self) -> f64 {
        self.f.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|v| v.is_finite())
    }

    /// Zeroes the populations of every solid cell.
    pub fn clear_solids(&mut self, mask: &BoundaryMask) {
        for x in 0..self.nx {
            for y in 0..self.ny {
                if mask.is_solid(x, y) {
                    self.cell_mut(x, y).fill(0.0);
                }
            }
        }
    }

    pub(crate) fn check_shape(&self, mask: &BoundaryMask) -> Result<()> {
        if self.nx != mask.nx || self.ny != mask.ny {
            return Err(LbmError::Shape(format!(
                "lattice is {}x{} but mask is {}x{}",
                self.nx, self.ny, mask.nx, mask.ny
            )));
        }
        Ok(())
    }
}

/// Per-cell solid flags, `true` for solid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMask {
    pub nx: usize,
    pub ny: usize,
    solid: Vec<bool>,
}

impl BoundaryMask {
    pub fn fluid(nx: usize, ny: usize) -> Self {
        BoundaryMask {
            nx,
            ny,
            solid: vec![false; nx * ny],
        }
    }

    /// Builds a mask from 0/1 values in `(x, y)` row-major order. Any other
    /// value is rejected.
    pub fn from_values(nx: usize, ny: usize, values: &[f64]) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(LbmError::Shape(format!(
                "expected {} mask values, got {}",
                nx * ny,
                values.len()
            )));
        }
        let mut solid = Vec::with_capacity(values.len());
        for (k, &v) in values.iter().enumerate() {
            match v {
                v if v == 0.0 => solid.push(false),
                v if v == 1.0 => solid.push(true),
                other => {
                    return Err(LbmError::InvalidInput(format!(
                        "mask value {other} at index {k} is not 0 or 1"
                    )))
                }
            }
        }
        Ok(BoundaryMask { nx, ny, solid })
    }

    #[inline]
    pub fn is_solid(&self, x: usize, y: usize) -> bool {
        self.solid[x * self.ny + y]
    }

    pub fn set_solid(&mut self, x: usize, y: usize, solid: bool) {
        self.solid[x * self.ny + y] = solid;
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|&&s| s).count()
    }

    pub fn fluid_count(&self) -> usize {
        self.solid.len() - self.solid_count()
    }

    /// 0.0/1.0 values in `(x, y)` row-major order.
    pub fn values(&self) -> Vec<f64> {
        self.solid.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect()
    }

    /// Rejects masks with solid cells on the inlet or outlet column.
    pub fn check_open_ends(&self) -> Result<()> {
        for y in 0..self.ny {
            for x in [0, self.nx - 1] {
                if self.is_solid(x, y) {
                    return Err(LbmError::InvalidInput(format!(
                        "solid cell ({x}, {y}) on an inlet/outlet column"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reflection `y -> ny - 1 - y`.
    pub fn mirrored_y(&self) -> Self {
        let mut out = BoundaryMask::fluid(self.nx, self.ny);
        for x in 0..self.nx {
            for y in 0..self.ny {
                out.set_solid(x, self.ny - 1 - y, self.is_solid(x, y));
            }
        }
        out
    }
}

/// Density and velocity per cell. `u` is `(x, y, component)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub nx: usize,
    pub ny: usize,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl MacroFields {
    #[inline]
    pub fn velocity(&self, x: usize, y: usize) -> [f64; 2] {
        let k = (x * self.ny + y) * 2;
        [self.u[k], self.u[k + 1]]
    }

    #[inline]
    pub fn density(&self, x: usize, y: usize) -> f64 {
        self.rho[x * self.ny + y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Periodic in y, equilibrium inlet at x = 0 and outlet at x = nx - 1.
    #[default]
    PeriodicYInletOutletX,
    FullyPeriodic,
}

impl BoundaryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryMode::PeriodicYInletOutletX => "periodic_y_inlet_outlet_x",
            BoundaryMode::FullyPeriodic => "fully_periodic",
        }
    }
}

impl std::str::FromStr for BoundaryMode {
    type Err = LbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic_y_inlet_outlet_x" | "channel" => Ok(BoundaryMode::PeriodicYInletOutletX),
            "fully_periodic" | "periodic" => Ok(BoundaryMode::FullyPeriodic),
            other => Err(LbmError::InvalidInput(format!("unknown boundary mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// BGK relaxation time; viscosity is `cs2 * (tau - 0.5)`.
    pub tau: f64,
    pub inlet_velocity: f64,
    pub boundary_mode: BoundaryMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 0.7,
            inlet_velocity: 0.04,
            boundary_mode: BoundaryMode::PeriodicYInletOutletX,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.5) || !self.tau.is_finite() {
            return Err(LbmError::InvalidInput(format!(
                "tau must exceed 0.5 for positive viscosity, got {}",
                self.tau
            )));
        }
        if !self.inlet_velocity.is_finite() {
            return Err(LbmError::InvalidInput("inlet velocity is not finite".into()));
        }
        Ok(())
    }

    pub fn viscosity(&self) -> f64 {
        crate::lattice::D2Q9.cs2 * (self.tau - 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_rejects_non_binary_values() {
        assert!(BoundaryMask::from_values(2, 1, &[0.0, 0.5]).is_err());
        assert!(BoundaryMask::from_values(2, 1, &[0.0]).is_err());
        let m = BoundaryMask::from_values(2, 1, &[0.0, 1.0]).unwrap();
        assert!(m.is_solid(1, 0));
        assert_eq!(m.values(), vec![0.0, 1.0]);
    }

    #[test]
    fn open_ends() {
        let mut m = BoundaryMask::fluid(5, 3);
        m.set_solid(2, 1, true);
        m.check_open_ends().unwrap();
        m.set_solid(4, 0, true);
        assert!(m.check_open_ends().is_err());
    }

    #[test]
    fn tau_must_exceed_half() {
        let cfg = SolverConfig {
            tau: 0.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!((SolverConfig::default().viscosity() - 0.2 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn from_vec_checks() {
        assert!(LatticeState::from_vec(2, 2, vec![0.0; 35]).is_err());
        let mut v = vec![0.0; 36];
        v[3] = f64::NAN;
        assert!(LatticeState::from_vec(2, 2, v).is_err());
    }
}
