//! The D2Q9 velocity set and the second-order LBGK equilibrium.
//!
//! Direction order is fixed throughout the crate:
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```

use crate::error::{LbmError, Result};

/// Number of discrete velocities.
pub const Q: usize = 9;

/// A discrete velocity set with its quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySet {
    pub directions: [[i32; 2]; Q],
    pub weights: [f64; Q],
    pub opposite: [usize; Q],
    /// Lattice sound speed squared.
    pub cs2: f64,
}

pub const D2Q9: VelocitySet = VelocitySet {
    directions: [
        [0, 0],
        [1, 0],
        [0, 1],
        [-1, 0],
        [0, -1],
        [1, 1],
        [-1, 1],
        [-1, -1],
        [1, -1],
    ],
    weights: [
        4.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 36.0,
        1.0 / 36.0,
        1.0 / 36.0,
        1.0 / 36.0,
    ],
    opposite: [0, 3, 4, 1, 2, 7, 8, 5, 6],
    cs2: 1.0 / 3.0,
};

impl VelocitySet {
    /// Checks the moment conditions the weights must satisfy up to second
    /// order, returning a description of the first one violated.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-15;
        let fail = |msg: String| Err(LbmError::InvalidInput(msg));

        if self.directions[0] != [0, 0] {
            return fail("direction 0 must be the rest velocity".into());
        }
        let w_sum: f64 = self.weights.iter().sum();
        if (w_sum - 1.0).abs() > tol {
            return fail(format!("weights sum to {w_sum}"));
        }
        for a in 0..2 {
            let first: f64 = (0..Q)
                .map(|i| self.weights[i] * self.directions[i][a] as f64)
                .sum();
            if first.abs() > tol {
                return fail(format!("first moment along axis {a} is {first}"));
            }
            for b in 0..2 {
                let second: f64 = (0..Q)
                    .map(|i| {
                        self.weights[i]
                            * (self.directions[i][a] * self.directions[i][b]) as f64
                    })
                    .sum();
                let expected = if a == b { self.cs2 } else { 0.0 };
                if (second - expected).abs() > tol {
                    return fail(format!("second moment ({a},{b}) is {second}"));
                }
            }
        }
        for i in 0..Q {
            let o = self.opposite[i];
            if self.opposite[o] != i
                || self.directions[o] != [-self.directions[i][0], -self.directions[i][1]]
            {
                return fail(format!("opposite[{i}] = {o} is not the reversed direction"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn c(&self, i: usize) -> (f64, f64) {
        (self.directions[i][0] as f64, self.directions[i][1] as f64)
    }
}

/// Second-order equilibrium without the input checks, for the solver's
/// inner loops.
#[inline]
pub(crate) fn equilibrium_into(rho: f64, u: [f64; 2], out: &mut [f64]) {
    let set = &D2Q9;
    let inv_cs2 = 1.0 / set.cs2;
    let uu = u[0] * u[0] + u[1] * u[1];
    for i in 0..Q {
        let (cx, cy) = set.c(i);
        let cu = cx * u[0] + cy * u[1];
        out[i] = set.weights[i]
            * rho
            * (1.0 + cu * inv_cs2 + 0.5 * cu * cu * inv_cs2 * inv_cs2 - 0.5 * uu * inv_cs2);
    }
}

/// Equilibrium populations for density `rho` and velocity `u`.
pub fn equilibrium(rho: f64, u: [f64; 2]) -> Result<[f64; Q]> {
    if !rho.is_finite() || !u[0].is_finite() || !u[1].is_finite() {
        return Err(LbmError::InvalidInput(format!(
            "non-finite equilibrium arguments rho={rho}, u={u:?}"
        )));
    }
    if rho <= 0.0 {
        return Err(LbmError::InvalidInput(format!("density must be positive, got {rho}")));
    }
    let mut out = [0.0; Q];
    equilibrium_into(rho, u, &mut out);
    Ok(out)
}
