//! LBGK collision, streaming with half-way bounce-back, and the equilibrium
//! inlet/outlet boundary.
//!
//! Every operation reads one buffer and writes a fresh one. Work is split
//! across rayon workers by x-column; each column is written by exactly one
//! worker, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{LbmError, Result};
use crate::lattice::{equilibrium, equilibrium_into, D2Q9, Q};
use crate::state::{
    BoundaryMask, BoundaryMode, LatticeState, MacroFields, SolverConfig, INSTABILITY_LIMIT,
};

#[inline]
fn moments(cell: &[f64]) -> (f64, [f64; 2]) {
    let mut rho = 0.0;
    let mut jx = 0.0;
    let mut jy = 0.0;
    for i in 0..Q {
        let (cx, cy) = D2Q9.c(i);
        rho += cell[i];
        jx += cx * cell[i];
        jy += cy * cell[i];
    }
    if rho == 0.0 {
        (0.0, [0.0, 0.0])
    } else {
        (rho, [jx / rho, jy / rho])
    }
}

/// Density and velocity of every cell. Cells with zero density get zero
/// velocity.
pub fn macroscopics(state: &LatticeState) -> MacroFields {
    let n = state.nx * state.ny;
    let mut rho = vec![0.0; n];
    let mut u = vec![0.0; 2 * n];
    rho.par_iter_mut()
        .zip(u.par_chunks_mut(2))
        .zip(state.f.par_chunks(Q))
        .for_each(|((r, uc), cell)| {
            let (d, v) = moments(cell);
            *r = d;
            uc.copy_from_slice(&v);
        });
    MacroFields {
        nx: state.nx,
        ny: state.ny,
        rho,
        u,
    }
}

fn check_stability(state: &LatticeState) -> Result<()> {
    if let Some(k) = state
        .f
        .iter()
        .position(|v| !v.is_finite() || v.abs() > INSTABILITY_LIMIT)
    {
        let cell = k / Q;
        return Err(LbmError::Instability {
            x: cell / state.ny,
            y: cell % state.ny,
            dir: k % Q,
            value: state.f[k],
        });
    }
    Ok(())
}

/// BGK relaxation of every cell toward its local equilibrium.
pub fn collide(state: &LatticeState, tau: f64) -> Result<LatticeState> {
    if !(tau > 0.5) {
        return Err(LbmError::InvalidInput(format!("tau must exceed 0.5, got {tau}")));
    }
    let omega = 1.0 / tau;
    let mut out = LatticeState::zeros(state.nx, state.ny);
    out.f
        .par_chunks_mut(Q)
        .zip(state.f.par_chunks(Q))
        .for_each(|(dst, src)| {
            let (rho, u) = moments(src);
            let mut feq = [0.0; Q];
            if rho != 0.0 {
                equilibrium_into(rho, u, &mut feq);
            }
            for i in 0..Q {
                dst[i] = src[i] + omega * (feq[i] - src[i]);
            }
        });
    check_stability(&out)?;
    Ok(out)
}

/// Moves every fluid population one link along its direction. A population
/// whose destination is solid is reflected back into the opposite direction
/// of its own cell. Solid cells end up empty.
///
/// The grid wraps in y in both modes and in x only when fully periodic. In
/// channel mode, populations that would enter from outside the grid keep
/// their previous value; the inlet/outlet step overwrites those columns.
pub fn stream(state: &LatticeState, mask: &BoundaryMask, mode: BoundaryMode) -> Result<LatticeState> {
    state.check_shape(mask)?;
    let (nx, ny) = (state.nx, state.ny);
    let periodic_x = mode == BoundaryMode::FullyPeriodic;
    let mut out = LatticeState::zeros(nx, ny);
    out.f
        .par_chunks_mut(ny * Q)
        .enumerate()
        .for_each(|(x, column)| {
            for y in 0..ny {
                if mask.is_solid(x, y) {
                    continue;
                }
                for i in 0..Q {
                    let [cx, cy] = D2Q9.directions[i];
                    let sy = (y as i64 - cy as i64).rem_euclid(ny as i64) as usize;
                    let sx = x as i64 - cx as i64;
                    let sx = if periodic_x {
                        sx.rem_euclid(nx as i64) as usize
                    } else if sx < 0 || sx >= nx as i64 {
                        column[y * Q + i] = state.get(x, y, i);
                        continue;
                    } else {
                        sx as usize
                    };
                    column[y * Q + i] = if mask.is_solid(sx, sy) {
                        state.get(x, y, D2Q9.opposite[i])
                    } else {
                        state.get(sx, sy, i)
                    };
                }
            }
        });
    Ok(out)
}

/// Overwrites the inlet column with `equilibrium(1, (u_in, 0))` and each
/// outlet cell with `equilibrium(rho_local, (u_in, 0))`. No-op when fully
/// periodic.
pub fn apply_inlet_outlet(state: &LatticeState, cfg: &SolverConfig) -> Result<LatticeState> {
    let mut out = state.clone();
    if cfg.boundary_mode == BoundaryMode::FullyPeriodic {
        return Ok(out);
    }
    let u = [cfg.inlet_velocity, 0.0];
    let inlet = equilibrium(1.0, u)?;
    let outlet_x = state.nx - 1;
    for y in 0..state.ny {
        out.cell_mut(0, y).copy_from_slice(&inlet);
        let rho: f64 = state.cell(outlet_x, y).iter().sum();
        if rho <= 0.0 || !rho.is_finite() {
            return Err(LbmError::Instability {
                x: outlet_x,
                y,
                dir: 0,
                value: rho,
            });
        }
        equilibrium_into(rho, u, out.cell_mut(outlet_x, y));
    }
    Ok(out)
}

/// One full solver update: collide, stream, then the inlet/outlet boundary.
pub fn step(state: &LatticeState, mask: &BoundaryMask, cfg: &SolverConfig) -> Result<LatticeState> {
    let post_collision = collide(state, cfg.tau)?;
    let streamed = stream(&post_collision, mask, cfg.boundary_mode)?;
    apply_inlet_outlet(&streamed, cfg)
}

/// Owns the double buffer for repeated stepping.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub state: LatticeState,
    pub mask: BoundaryMask,
    pub config: SolverConfig,
    pub steps_taken: u64,
}

impl Simulation {
    /// Starts from `equilibrium(1, (u_in, 0))` on every fluid cell.
    pub fn new(mask: BoundaryMask, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if config.boundary_mode == BoundaryMode::PeriodicYInletOutletX {
            mask.check_open_ends()?;
        }
        let mut state =
            LatticeState::uniform(mask.nx, mask.ny, 1.0, [config.inlet_velocity, 0.0])?;
        state.clear_solids(&mask);
        Ok(Simulation {
            state,
            mask,
            config,
            steps_taken: 0,
        })
    }

    pub fn with_state(state: LatticeState, mask: BoundaryMask, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        state.check_shape(&mask)?;
        Ok(Simulation {
            state,
            mask,
            config,
            steps_taken: 0,
        })
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.state = step(&self.state, &self.mask, &self.config)?;
            self.steps_taken += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(nx: usize, ny: usize, x: usize, y: usize, i: usize) -> LatticeState {
        let mut s = LatticeState::zeros(nx, ny);
        s.set(x, y, i, 1.0);
        s
    }

    fn nonzero(s: &LatticeState) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for x in 0..s.nx {
            for y in 0..s.ny {
                for i in 0..Q {
                    if s.get(x, y, i) != 0.0 {
                        out.push((x, y, i, s.get(x, y, i)));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn macroscopics_of_rest_state() {
        let s = LatticeState::uniform(4, 3, 1.0, [0.0, 0.0]).unwrap();
        let m = macroscopics(&s);
        for x in 0..4 {
            for y in 0..3 {
                assert!((m.density(x, y) - 1.0).abs() < 1e-15);
                assert!(m.velocity(x, y)[0].abs() < 1e-15);
                assert!(m.velocity(x, y)[1].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn macroscopics_inverts_equilibrium() {
        let s = LatticeState::uniform(3, 3, 1.0, [0.04, 0.0]).unwrap();
        let m = macroscopics(&s);
        let u = m.velocity(1, 2);
        assert!((u[0] - 0.04).abs() < 1e-12 && u[1].abs() < 1e-12);
    }

    #[test]
    fn macroscopics_single_east_particle() {
        let m = macroscopics(&single(1, 1, 0, 0, 1));
        assert_eq!(m.density(0, 0), 1.0);
        assert_eq!(m.velocity(0, 0), [1.0, 0.0]);
    }

    #[test]
    fn macroscopics_empty_cell_has_zero_velocity() {
        let m = macroscopics(&LatticeState::zeros(2, 2));
        assert!(m.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn collide_fixed_point_and_full_relaxation() {
        let s = LatticeState::uniform(2, 2, 1.0, [0.03, -0.01]).unwrap();
        let c = collide(&s, 0.8).unwrap();
        for (a, b) in c.f.iter().zip(&s.f) {
            assert!((a - b).abs() < 1e-16);
        }

        let mut s = LatticeState::uniform(1, 1, 1.0, [0.0, 0.0]).unwrap();
        s.set(0, 0, 5, 0.05);
        let (rho, u) = moments(s.cell(0, 0));
        let c = collide(&s, 1.0).unwrap();
        let feq = equilibrium(rho, u).unwrap();
        assert_eq!(c.cell(0, 0), &feq[..]);
    }

    #[test]
    fn collide_rejects_small_tau() {
        let s = LatticeState::uniform(1, 1, 1.0, [0.0, 0.0]).unwrap();
        assert!(collide(&s, 0.5).is_err());
    }

    #[test]
    fn collide_flags_instability() {
        let mut s = LatticeState::zeros(2, 1);
        s.set(1, 0, 3, 50.0);
        match collide(&s, 0.6) {
            Err(LbmError::Instability { x, y, .. }) => assert_eq!((x, y), (1, 0)),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn stream_single_particle_periodic() {
        let mask = BoundaryMask::fluid(3, 3);
        let out = stream(&single(3, 3, 1, 1, 1), &mask, BoundaryMode::FullyPeriodic).unwrap();
        assert_eq!(nonzero(&out), vec![(2, 1, 1, 1.0)]);
        // Wrap-around.
        let out = stream(&single(3, 3, 2, 2, 5), &mask, BoundaryMode::FullyPeriodic).unwrap();
        assert_eq!(nonzero(&out), vec![(0, 0, 5, 1.0)]);
    }

    #[test]
    fn stream_single_particle_bounce_back() {
        let mut mask = BoundaryMask::fluid(3, 3);
        mask.set_solid(2, 1, true);
        let out = stream(&single(3, 3, 1, 1, 1), &mask, BoundaryMode::FullyPeriodic).unwrap();
        assert_eq!(nonzero(&out), vec![(1, 1, 3, 1.0)]);
    }

    #[test]
    fn stream_shape_mismatch() {
        let mask = BoundaryMask::fluid(3, 4);
        assert!(stream(&LatticeState::zeros(3, 3), &mask, BoundaryMode::FullyPeriodic).is_err());
    }

    #[test]
    fn stream_returns_after_one_period() {
        let mut s = LatticeState::zeros(5, 7);
        for (k, v) in s.f.iter_mut().enumerate() {
            *v = (k % 13) as f64 * 0.01;
        }
        let mask = BoundaryMask::fluid(5, 7);
        let mut cur = s.clone();
        // lcm(5, 7) steps brings every direction home.
        for _ in 0..35 {
            cur = stream(&cur, &mask, BoundaryMode::FullyPeriodic).unwrap();
        }
        assert_eq!(cur, s);
    }

    #[test]
    fn inlet_outlet_boundary() {
        let cfg = SolverConfig::default();
        let s = LatticeState::uniform(5, 4, 1.0, [0.04, 0.0]).unwrap();
        let out = apply_inlet_outlet(&s, &cfg).unwrap();
        for (a, b) in out.f.iter().zip(&s.f) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut s = LatticeState::uniform(5, 4, 1.0, [0.0, 0.0]).unwrap();
        for y in 0..4 {
            s.cell_mut(0, y).fill(0.0);
            let feq = equilibrium(1.01, [0.0, 0.0]).unwrap();
            s.cell_mut(4, y).copy_from_slice(&feq);
        }
        let out = apply_inlet_outlet(&s, &cfg).unwrap();
        let inlet = equilibrium(1.0, [0.04, 0.0]).unwrap();
        let outlet = equilibrium(1.01, [0.04, 0.0]).unwrap();
        for y in 0..4 {
            assert_eq!(out.cell(0, y), &inlet[..]);
            for i in 0..Q {
                assert!((out.get(4, y, i) - outlet[i]).abs() < 1e-15);
            }
            // Interior untouched.
            assert_eq!(out.cell(2, y), s.cell(2, y));
        }
    }

    #[test]
    fn periodic_mode_skips_inlet_outlet() {
        let cfg = SolverConfig {
            boundary_mode: BoundaryMode::FullyPeriodic,
            ..Default::default()
        };
        let s = LatticeState::zeros(3, 3);
        assert_eq!(apply_inlet_outlet(&s, &cfg).unwrap(), s);
    }

    #[test]
    fn simulation_rejects_blocked_inlet() {
        let mut mask = BoundaryMask::fluid(6, 6);
        mask.set_solid(0, 3, true);
        assert!(Simulation::new(mask, SolverConfig::default()).is_err());
    }
}
