#[path = "support/reference.rs"]
mod reference;

use latnet_lbm::{
    collide, drag, macroscopics, step, stream, BoundaryMask, BoundaryMode, LatticeState,
    SolverConfig, D2Q9, Q,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn periodic(tau: f64) -> SolverConfig {
    SolverConfig {
        tau,
        inlet_velocity: 0.0,
        boundary_mode: BoundaryMode::FullyPeriodic,
    }
}

fn random_state(nx: usize, ny: usize, rng: &mut ChaCha8Rng, hi: f64) -> LatticeState {
    let f = (0..nx * ny * Q).map(|_| rng.gen_range(0.0..hi)).collect();
    LatticeState::from_vec(nx, ny, f).unwrap()
}

fn to_grid(s: &LatticeState) -> reference::Grid {
    (0..s.nx)
        .map(|x| (0..s.ny).map(|y| s.cell(x, y).try_into().unwrap()).collect())
        .collect()
}

fn solid_grid(m: &BoundaryMask) -> Vec<Vec<bool>> {
    (0..m.nx).map(|x| (0..m.ny).map(|y| m.is_solid(x, y)).collect()).collect()
}

#[test]
fn collide_matches_scalar_oracle_and_keeps_moments() {
    let mut s = LatticeState::uniform(1, 1, 1.0, [0.02, 0.01]).unwrap();
    s.set(0, 0, 1, 0.2);
    s.set(0, 0, 7, 0.01);
    let out = collide(&s, 0.6).unwrap();

    let cell: [f64; 9] = s.cell(0, 0).try_into().unwrap();
    let expected = reference::step(&vec![vec![cell]], &[vec![false]], 0.6, false, 0.0);
    // A 1x1 periodic lattice streams every population onto itself.
    for i in 0..Q {
        assert!((out.get(0, 0, i) - expected[0][0][i]).abs() < 1e-14);
    }
    let before = macroscopics(&s);
    let after = macroscopics(&out);
    assert!((before.rho[0] - after.rho[0]).abs() < 1e-14);
    for a in 0..2 {
        let jb = before.rho[0] * before.u[a];
        let ja = after.rho[0] * after.u[a];
        assert!((jb - ja).abs() < 1e-14);
    }
}

#[test]
fn matches_naive_reference_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..20 {
        let (nx, ny) = (rng.gen_range(3..=8), rng.gen_range(3..=8));
        let channel = case % 2 == 0;
        let mut mask = BoundaryMask::fluid(nx, ny);
        for x in 1..nx - 1 {
            for y in 0..ny {
                mask.set_solid(x, y, rng.gen_bool(0.2));
            }
        }
        let cfg = SolverConfig {
            tau: rng.gen_range(0.55..1.5),
            inlet_velocity: 0.04,
            boundary_mode: if channel {
                BoundaryMode::PeriodicYInletOutletX
            } else {
                BoundaryMode::FullyPeriodic
            },
        };
        let mut s = random_state(nx, ny, &mut rng, 0.2);
        s.clear_solids(&mask);
        let mut g = to_grid(&s);
        let solid = solid_grid(&mask);
        for _ in 0..5 {
            s = step(&s, &mask, &cfg).unwrap();
            g = reference::step(&g, &solid, cfg.tau, channel, 0.04);
        }
        for x in 0..nx {
            for y in 0..ny {
                for i in 0..Q {
                    let d = (s.get(x, y, i) - g[x][y][i]).abs();
                    assert!(d < 1e-13, "case {case}: ({x},{y},{i}) differs by {d}");
                }
            }
        }
    }
}

#[test]
fn mass_conserved_with_and_without_solids() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut s = random_state(32, 32, &mut rng, 0.2);
    let m0 = s.total_mass();
    let empty = BoundaryMask::fluid(32, 32);
    for _ in 0..1000 {
        s = step(&s, &empty, &periodic(0.8)).unwrap();
    }
    assert!(((s.total_mass() - m0) / m0).abs() < 1e-10);

    let mut mask = BoundaryMask::fluid(32, 32);
    for x in 10..14 {
        for y in 10..14 {
            mask.set_solid(x, y, true);
        }
    }
    let mut s = random_state(32, 32, &mut rng, 0.2);
    s.clear_solids(&mask);
    let m0 = s.total_mass();
    for _ in 0..1000 {
        s = step(&s, &mask, &periodic(0.8)).unwrap();
    }
    assert!(((s.total_mass() - m0) / m0).abs() < 1e-10);
}

#[test]
fn rest_state_is_a_fixed_point() {
    let s0 = LatticeState::uniform(16, 12, 1.0, [0.0, 0.0]).unwrap();
    let mask = BoundaryMask::fluid(16, 12);
    let mut s = s0.clone();
    for _ in 0..100 {
        s = step(&s, &mask, &periodic(0.7)).unwrap();
    }
    for (a, b) in s.f.iter().zip(&s0.f) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn drag_mirror_symmetry() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (nx, ny) = (12, 10);
    let mut mask = BoundaryMask::fluid(nx, ny);
    for (x, y) in [(4, 3), (5, 3), (5, 4), (7, 7), (8, 2)] {
        mask.set_solid(x, y, true);
    }
    let mut s = random_state(nx, ny, &mut rng, 0.2);
    s.clear_solids(&mask);

    // Reflect y and swap the directions with opposite y components.
    let flip = [0, 1, 4, 3, 2, 8, 7, 6, 5];
    let mut m = LatticeState::zeros(nx, ny);
    for x in 0..nx {
        for y in 0..ny {
            for i in 0..Q {
                m.set(x, ny - 1 - y, flip[i], s.get(x, y, i));
            }
        }
    }
    for mode in [BoundaryMode::FullyPeriodic, BoundaryMode::PeriodicYInletOutletX] {
        let a = drag(&s, &mask, mode).unwrap();
        let b = drag(&m, &mask.mirrored_y(), mode).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a[1] + b[1]).abs() < 1e-12);
    }
}

/// x-momentum carried across the plane between columns `x` and `x + 1`
/// during one streaming step of the post-collision state `post`.
fn plane_momentum_flux(post: &LatticeState, mask: &BoundaryMask, x: usize) -> f64 {
    let mut j = 0.0;
    for y in 0..post.ny {
        for i in 0..Q {
            let cx = D2Q9.directions[i][0];
            if cx > 0 && !mask.is_solid(x, y) {
                j += post.get(x, y, i);
            } else if cx < 0 && !mask.is_solid(x + 1, y) {
                j += post.get(x + 1, y, i);
            }
        }
    }
    j
}

#[test]
fn drag_matches_control_volume_balance() {
    let (nx, ny) = (80, 40);
    let mut mask = BoundaryMask::fluid(nx, ny);
    for x in 30..36 {
        for y in 17..23 {
            mask.set_solid(x, y, true);
        }
    }
    let cfg = SolverConfig {
        tau: 0.8,
        inlet_velocity: 0.04,
        boundary_mode: BoundaryMode::PeriodicYInletOutletX,
    };
    let mut sim = latnet_lbm::Simulation::new(mask.clone(), cfg).unwrap();
    sim.advance(20_000).unwrap();

    let post = collide(&sim.state, cfg.tau).unwrap();
    let fx = drag(&post, &mask, cfg.boundary_mode).unwrap()[0];
    // Steady state: momentum entering the box minus momentum leaving it is
    // exactly what the obstacle absorbs.
    let cv = plane_momentum_flux(&post, &mask, 20) - plane_momentum_flux(&post, &mask, 50);
    assert!(fx > 0.0, "obstacle should be pushed downstream, got {fx}");
    assert!(((fx - cv) / cv).abs() < 0.05, "drag {fx} vs control volume {cv}");
}

/// Planar channel between bounce-back walls, measured in the developed
/// section: the centreline speed must match the analytic Poiseuille value
/// for the measured pressure gradient and nu = (tau - 1/2) / 3.
#[test]
fn poiseuille_profile() {
    let report = poiseuille_check(0.8);
    eprintln!("poiseuille rel err {:.5} sim {:.6} analytic {:.6}", report.0, report.1, report.2);
    assert!(report.0 < 0.03, "centreline error {} (sim {}, analytic {})", report.0, report.1, report.2);
}

fn poiseuille_check(tau: f64) -> (f64, f64, f64) {
    let (nx, width) = (128, 32);
    let ny = width + 2;
    let mut mask = BoundaryMask::fluid(nx, ny);
    for x in 1..nx - 1 {
        mask.set_solid(x, 0, true);
        mask.set_solid(x, ny - 1, true);
    }
    let cfg = SolverConfig {
        tau,
        inlet_velocity: 0.04,
        boundary_mode: BoundaryMode::PeriodicYInletOutletX,
    };
    let mut sim = latnet_lbm::Simulation::new(mask, cfg).unwrap();
    sim.advance(30_000).unwrap();
    let m = macroscopics(&sim.state);

    let mean_rho = |x: usize| (1..ny - 1).map(|y| m.density(x, y)).sum::<f64>() / width as f64;
    let (xa, xb, xc) = (48, 80, 64);
    let grad_p = -D2Q9.cs2 * (mean_rho(xb) - mean_rho(xa)) / (xb - xa) as f64;
    let nu = cfg.viscosity();
    let rho = mean_rho(xc);
    // Walls sit half-way between the solid rows and the first fluid rows.
    let analytic = grad_p * (width as f64).powi(2) / (8.0 * rho * nu);
    let yc = (ny - 1) as f64 / 2.0;
    let sim_center = 0.5 * (m.velocity(xc, yc.floor() as usize)[0] + m.velocity(xc, yc.ceil() as usize)[0]);
    // Half a cell off the centre line: correct the sampled value back to it.
    let sim_center = sim_center / (1.0 - (0.5f64 / (width as f64 / 2.0)).powi(2));
    (((sim_center - analytic) / analytic).abs(), sim_center, analytic)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn streaming_permutes_values(nx in 2usize..7, ny in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(nx, ny, &mut rng, 1.0);
        let out = stream(&s, &BoundaryMask::fluid(nx, ny), BoundaryMode::FullyPeriodic).unwrap();
        let mut a = s.f.clone();
        let mut b = out.f.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn collision_preserves_cell_moments(seed in any::<u64>(), tau in 0.51f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_state(3, 3, &mut rng, 0.3);
        let out = collide(&s, tau).unwrap();
        let (a, b) = (macroscopics(&s), macroscopics(&out));
        for k in 0..9 {
            prop_assert!((a.rho[k] - b.rho[k]).abs() < 1e-12);
            for c in 0..2 {
                prop_assert!((a.rho[k] * a.u[2 * k + c] - b.rho[k] * b.u[2 * k + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounce_back_conserves_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = BoundaryMask::fluid(10, 10);
        for x in 0..10 {
            for y in 0..10 {
                mask.set_solid(x, y, rng.gen_bool(0.25));
            }
        }
        let mut s = random_state(10, 10, &mut rng, 0.2);
        s.clear_solids(&mask);
        let m0 = s.total_mass();
        for _ in 0..50 {
            s = step(&s, &mask, &periodic(0.9)).unwrap();
        }
        prop_assert!(((s.total_mass() - m0) / m0).abs() < 1e-10);
    }
}
