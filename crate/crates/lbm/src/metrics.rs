//! Quantities used to compare generated and solver flows.
//!
//! All reductions run sequentially in cell order so that results are
//! bit-reproducible.

use crate::error::{LbmError, Result};
use crate::lattice::{D2Q9, Q};
use crate::state::{BoundaryMask, BoundaryMode, LatticeState, MacroFields};

/// Force on the solid cells by momentum exchange.
///
/// Sums `c_i (f_i + f_reflected)` over every fluid-to-solid link. Under
/// half-way bounce-back the reflected population equals the incident one,
/// so each link contributes `2 c_i f_i`. `state` should be the post-collision
/// (pre-stream) lattice. Links leaving the grid in channel mode are ignored.
pub fn drag(state: &LatticeState, mask: &BoundaryMask, mode: BoundaryMode) -> Result<[f64; 2]> {
    state.check_shape(mask)?;
    if mask.solid_count() == 0 {
        return Err(LbmError::EmptyBoundary);
    }
    let (nx, ny) = (state.nx as i64, state.ny as i64);
    let mut force = [0.0, 0.0];
    for x in 0..state.nx {
        for y in 0..state.ny {
            if mask.is_solid(x, y) {
                continue;
            }
            for i in 1..Q {
                let [cx, cy] = D2Q9.directions[i];
                let tx = x as i64 + cx as i64;
                let tx = match mode {
                    BoundaryMode::FullyPeriodic => tx.rem_euclid(nx),
                    BoundaryMode::PeriodicYInletOutletX if tx < 0 || tx >= nx => continue,
                    BoundaryMode::PeriodicYInletOutletX => tx,
                };
                let ty = (y as i64 + cy as i64).rem_euclid(ny);
                if mask.is_solid(tx as usize, ty as usize) {
                    let f = state.get(x, y, i);
                    let reflected = f;
                    force[0] += cx as f64 * (f + reflected);
                    force[1] += cy as f64 * (f + reflected);
                }
            }
        }
    }
    Ok(force)
}

/// Mean momentum density `rho u` over the fluid cells.
pub fn flux_average(state: &LatticeState, mask: &BoundaryMask) -> Result<[f64; 2]> {
    state.check_shape(mask)?;
    let fluid = mask.fluid_count();
    if fluid == 0 {
        return Err(LbmError::EmptyDomain);
    }
    let mut sum = [0.0, 0.0];
    for x in 0..state.nx {
        for y in 0..state.ny {
            if mask.is_solid(x, y) {
                continue;
            }
            for (i, f) in state.cell(x, y).iter().enumerate() {
                let (cx, cy) = D2Q9.c(i);
                sum[0] += cx * f;
                sum[1] += cy * f;
            }
        }
    }
    Ok([sum[0] / fluid as f64, sum[1] / fluid as f64])
}

/// Central-difference divergence of the velocity field, stored `(x, y)`
/// row-major.
///
/// Only fluid cells whose four axis neighbours are inside the grid and fluid
/// get a value; every other cell is 0. The second element is the number of
/// cells that were evaluated.
pub fn divergence_field(fields: &MacroFields, mask: &BoundaryMask) -> Result<(Vec<f64>, usize)> {
    let (nx, ny) = (fields.nx, fields.ny);
    if mask.nx != nx || mask.ny != ny {
        return Err(LbmError::Shape(format!(
            "velocity field is {nx}x{ny} but mask is {}x{}",
            mask.nx, mask.ny
        )));
    }
    let mut div = vec![0.0; nx * ny];
    let mut evaluated = 0;
    for x in 1..nx.saturating_sub(1) {
        for y in 1..ny.saturating_sub(1) {
            if mask.is_solid(x, y)
                || mask.is_solid(x - 1, y)
                || mask.is_solid(x + 1, y)
                || mask.is_solid(x, y - 1)
                || mask.is_solid(x, y + 1)
            {
                continue;
            }
            let dux = fields.velocity(x + 1, y)[0] - fields.velocity(x - 1, y)[0];
            let duy = fields.velocity(x, y + 1)[1] - fields.velocity(x, y - 1)[1];
            div[x * ny + y] = 0.5 * (dux + duy);
            evaluated += 1;
        }
    }
    Ok((div, evaluated))
}

/// Mean of `|div u|` over the cells `divergence_field` evaluates; 0 when
/// there are none.
pub fn mean_abs_divergence(fields: &MacroFields, mask: &BoundaryMask) -> Result<f64> {
    let (div, evaluated) = divergence_field(fields, mask)?;
    if evaluated == 0 {
        return Ok(0.0);
    }
    Ok(div.iter().map(|d| d.abs()).sum::<f64>() / evaluated as f64)
}

/// Million lattice updates per second.
pub fn mlups(cells: u64, lbm_steps_equivalent: u64, wall_seconds: f64) -> Result<f64> {
    if !(wall_seconds > 0.0) || !wall_seconds.is_finite() {
        return Err(LbmError::InvalidInput(format!(
            "wall time must be positive, got {wall_seconds}"
        )));
    }
    Ok(cells as f64 * lbm_steps_equivalent as f64 * 1e-6 / wall_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::macroscopics;

    fn fields_from(nx: usize, ny: usize, u: impl Fn(f64, f64) -> [f64; 2]) -> MacroFields {
        let mut vel = Vec::with_capacity(nx * ny * 2);
        for x in 0..nx {
            for y in 0..ny {
                vel.extend_from_slice(&u(x as f64, y as f64));
            }
        }
        MacroFields {
            nx,
            ny,
            rho: vec![1.0; nx * ny],
            u: vel,
        }
    }

    #[test]
    fn rest_state_has_no_drag() {
        let s = LatticeState::uniform(8, 8, 1.0, [0.0, 0.0]).unwrap();
        let mut mask = BoundaryMask::fluid(8, 8);
        mask.set_solid(3, 3, true);
        mask.set_solid(4, 3, true);
        mask.set_solid(3, 5, true);
        let mut s = s;
        s.clear_solids(&mask);
        let f = drag(&s, &mask, BoundaryMode::PeriodicYInletOutletX).unwrap();
        assert!(f[0].abs() < 1e-15 && f[1].abs() < 1e-15);
    }

    #[test]
    fn single_link_drag() {
        let mut mask = BoundaryMask::fluid(5, 5);
        mask.set_solid(2, 2, true);
        let mut s = LatticeState::zeros(5, 5);
        s.set(1, 2, 1, 1.0);
        assert_eq!(drag(&s, &mask, BoundaryMode::FullyPeriodic).unwrap(), [2.0, 0.0]);
    }

    #[test]
    fn drag_needs_solids() {
        let s = LatticeState::zeros(4, 4);
        assert!(matches!(
            drag(&s, &BoundaryMask::fluid(4, 4), BoundaryMode::FullyPeriodic),
            Err(LbmError::EmptyBoundary)
        ));
    }

    #[test]
    fn flux_cases() {
        let mask = BoundaryMask::fluid(4, 4);
        let s = LatticeState::uniform(4, 4, 1.0, [0.04, 0.0]).unwrap();
        let j = flux_average(&s, &mask).unwrap();
        assert!((j[0] - 0.04).abs() < 1e-15 && j[1].abs() < 1e-15);

        assert_eq!(flux_average(&LatticeState::zeros(4, 4), &mask).unwrap(), [0.0, 0.0]);

        let mut s = LatticeState::uniform(4, 4, 1.0, [0.0, 0.0]).unwrap();
        let moving = crate::lattice::equilibrium(1.0, [0.04, 0.0]).unwrap();
        for x in 0..2 {
            for y in 0..4 {
                s.cell_mut(x, y).copy_from_slice(&moving);
            }
        }
        let j = flux_average(&s, &mask).unwrap();
        assert!((j[0] - 0.02).abs() < 1e-15 && j[1].abs() < 1e-15);

        let mut solid = BoundaryMask::fluid(1, 1);
        solid.set_solid(0, 0, true);
        assert!(matches!(
            flux_average(&LatticeState::zeros(1, 1), &solid),
            Err(LbmError::EmptyDomain)
        ));
    }

    #[test]
    fn divergence_of_linear_fields() {
        let mask = BoundaryMask::fluid(6, 5);
        let (d, n) = divergence_field(&fields_from(6, 5, |_, _| [0.3, -0.1]), &mask).unwrap();
        assert_eq!(n, 4 * 3);
        assert!(d.iter().all(|&v| v == 0.0));

        let (d, _) = divergence_field(&fields_from(6, 5, |x, y| [x, -y]), &mask).unwrap();
        assert!(d.iter().all(|&v| v.abs() < 1e-15));

        let f = fields_from(6, 5, |x, y| [x, y]);
        let (d, _) = divergence_field(&f, &mask).unwrap();
        for x in 1..5 {
            for y in 1..4 {
                assert!((d[x * 5 + y] - 2.0).abs() < 1e-15);
            }
        }
        assert_eq!(d[0], 0.0);
        assert!((mean_abs_divergence(&f, &mask).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn divergence_skips_cells_next_to_solids() {
        let mut mask = BoundaryMask::fluid(5, 5);
        mask.set_solid(2, 2, true);
        let f = fields_from(5, 5, |x, y| [x, y]);
        let (d, n) = divergence_field(&f, &mask).unwrap();
        // Interior is 3x3; the solid and its 4 neighbours drop out.
        assert_eq!(n, 4);
        assert_eq!(d[2 * 5 + 1], 0.0);
        assert_eq!(d[5 + 1], 2.0);
    }

    #[test]
    fn divergence_of_solver_rest_state() {
        let s = LatticeState::uniform(6, 6, 1.0, [0.0, 0.0]).unwrap();
        let mask = BoundaryMask::fluid(6, 6);
        assert_eq!(mean_abs_divergence(&macroscopics(&s), &mask).unwrap(), 0.0);
    }

    #[test]
    fn mlups_arithmetic() {
        assert_eq!(mlups(1_000_000, 1, 1.0).unwrap(), 1.0);
        let v = mlups(160 * 160 * 160, 60, 0.0231).unwrap();
        assert!((v - 10_638.96).abs() < 0.01, "{v}");
        assert!(mlups(10, 1, 0.0).is_err());
        assert!(mlups(10, 1, -1.0).is_err());
    }
}
