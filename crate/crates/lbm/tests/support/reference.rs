//! Deliberately naive D2Q9 stepper: nested vectors, push-style streaming,
//! literal equilibrium coefficients. Shares no code with the solver.

#![allow(dead_code)]

pub type Grid = Vec<Vec<[f64; 9]>>;

const E: [(i64, i64); 9] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

fn weight(i: usize) -> f64 {
    match i {
        0 => 4.0 / 9.0,
        1..=4 => 1.0 / 9.0,
        _ => 1.0 / 36.0,
    }
}

fn reverse(i: usize) -> usize {
    let (cx, cy) = E[i];
    (0..9).find(|&j| E[j] == (-cx, -cy)).unwrap()
}

pub fn feq(rho: f64, ux: f64, uy: f64) -> [f64; 9] {
    let mut out = [0.0; 9];
    for i in 0..9 {
        let cu = E[i].0 as f64 * ux + E[i].1 as f64 * uy;
        out[i] = weight(i) * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * (ux * ux + uy * uy));
    }
    out
}

/// One collide + stream (+ equilibrium inlet/outlet when `channel`).
pub fn step(f: &Grid, solid: &[Vec<bool>], tau: f64, channel: bool, u_in: f64) -> Grid {
    let nx = f.len();
    let ny = f[0].len();

    let mut post = f.clone();
    for x in 0..nx {
        for y in 0..ny {
            let mut rho = 0.0;
            let mut mx = 0.0;
            let mut my = 0.0;
            for i in 0..9 {
                rho += f[x][y][i];
                mx += E[i].0 as f64 * f[x][y][i];
                my += E[i].1 as f64 * f[x][y][i];
            }
            let eq = if rho == 0.0 { [0.0; 9] } else { feq(rho, mx / rho, my / rho) };
            for i in 0..9 {
                post[x][y][i] = f[x][y][i] - (f[x][y][i] - eq[i]) / tau;
            }
        }
    }

    let mut next: Grid = vec![vec![[0.0; 9]; ny]; nx];
    if channel {
        // Populations that would arrive from outside keep their old value.
        for x in 0..nx {
            for y in 0..ny {
                for i in 0..9 {
                    let from = x as i64 - E[i].0;
                    if from < 0 || from >= nx as i64 {
                        next[x][y][i] = post[x][y][i];
                    }
                }
            }
        }
    }
    for x in 0..nx {
        for y in 0..ny {
            if solid[x][y] {
                continue;
            }
            for i in 0..9 {
                let mut tx = x as i64 + E[i].0;
                let ty = (y as i64 + E[i].1).rem_euclid(ny as i64) as usize;
                if channel {
                    if tx < 0 || tx >= nx as i64 {
                        continue;
                    }
                } else {
                    tx = tx.rem_euclid(nx as i64);
                }
                let tx = tx as usize;
                if solid[tx][ty] {
                    next[x][y][reverse(i)] = post[x][y][i];
                } else {
                    next[tx][ty][i] = post[x][y][i];
                }
            }
        }
    }
    for x in 0..nx {
        for y in 0..ny {
            if solid[x][y] {
                next[x][y] = [0.0; 9];
            }
        }
    }

    if channel {
        for y in 0..ny {
            next[0][y] = feq(1.0, u_in, 0.0);
            let rho: f64 = next[nx - 1][y].iter().sum();
            next[nx - 1][y] = feq(rho, u_in, 0.0);
        }
    }
    next
}
