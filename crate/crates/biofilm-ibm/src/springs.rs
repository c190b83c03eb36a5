//! Hookean spring forces, breakage, and node advection.

use crate::error::{Result, SimError};
use crate::geometry::{dist, Biofilm};

/// Total elastic force on every node from the alive springs. Forces come in
/// equal and opposite pairs, so the sum over nodes vanishes identically.
pub fn compute_forces(biofilm: &Biofilm, x: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let dim = biofilm.dim;
    let mut f = vec![[0.0f64; 3]; x.len()];
    for sp in biofilm.springs.iter().filter(|s| s.alive) {
        let d = dist(&x[sp.s], &x[sp.k], dim);
        if d == 0.0 {
            return Err(SimError::DegenerateSpring(sp.s, sp.k));
        }
        let tension = sp.stiffness * (d - sp.rest);
        for a in 0..dim {
            let dir = (x[sp.k][a] - x[sp.s][a]) / d;
            f[sp.s][a] += dir * tension;
            f[sp.k][a] -= dir * tension;
        }
    }
    Ok(f)
}

/// Marks every alive spring stretched strictly beyond
/// `break_factor * rest` as dead. Returns how many broke in this call.
pub fn apply_breaking(biofilm: &mut Biofilm, x: &[[f64; 3]], break_factor: f64) -> usize {
    let dim = biofilm.dim;
    let mut broken = 0;
    for sp in biofilm.springs.iter_mut().filter(|s| s.alive) {
        let d = dist(&x[sp.s], &x[sp.k], dim);
        if d > break_factor * sp.rest {
            sp.alive = false;
            broken += 1;
        }
    }
    broken
}

/// Explicit Euler node update: X += (dt / sigma) * U.
pub fn advect_nodes(x: &mut [[f64; 3]], u: &[[f64; 3]], dt: f64, sigma: f64, dim: usize) {
    assert!(dt > 0.0 && sigma > 0.0);
    let c = dt / sigma;
    for (p, v) in x.iter_mut().zip(u) {
        for a in 0..dim {
            p[a] += c * v[a];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_connectivity, CellCloud};
    use proptest::prelude::*;

    fn pair(d: f64) -> (Biofilm, Vec<[f64; 3]>) {
        let cloud = CellCloud {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            dim: 2,
            source: "test".into(),
        };
        let b = build_connectivity(&cloud, 2.0, 2.0, 1.0);
        let x = vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]];
        (b, x)
    }

    #[test]
    fn rest_length_gives_zero_force() {
        let (b, x) = pair(1.0);
        let f = compute_forces(&b, &x).unwrap();
        for fi in f {
            assert!(fi[0].abs() < 1e-15 && fi[1].abs() < 1e-15);
        }
    }

    #[test]
    fn stretched_pair_forces() {
        // r = 1, d = 1.5, K = 2: tension 1.0 pulling the nodes together.
        let (b, x) = pair(1.5);
        let f = compute_forces(&b, &x).unwrap();
        assert!((f[0][0] - 1.0).abs() < 1e-14);
        assert!((f[1][0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_middle_node_is_balanced() {
        let cloud = CellCloud {
            positions: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            dim: 2,
            source: "test".into(),
        };
        let b = build_connectivity(&cloud, 1.5, 2.0, 1.0);
        assert_eq!(b.springs.len(), 2);
        let x = vec![[-0.25, 0.0, 0.0], [1.0, 0.0, 0.0], [2.25, 0.0, 0.0]];
        let f = compute_forces(&b, &x).unwrap();
        assert!(f[1][0].abs() < 1e-14);
    }

    #[test]
    fn degenerate_spring_is_an_error() {
        let (b, mut x) = pair(1.0);
        x[1] = x[0];
        assert!(compute_forces(&b, &x).is_err());
    }

    #[test]
    fn breaking_boundary_is_strict() {
        let (mut b, x) = pair(2.0);
        assert_eq!(apply_breaking(&mut b, &x, 2.0), 0);
        let x = vec![[0.0, 0.0, 0.0], [2.01, 0.0, 0.0]];
        assert_eq!(apply_breaking(&mut b, &x, 2.0), 1);
        // Dead springs stay dead and exert nothing.
        let f = compute_forces(&b, &x).unwrap();
        assert_eq!(f[0][0], 0.0);
        assert_eq!(apply_breaking(&mut b, &x, 2.0), 0);
    }

    #[test]
    fn all_at_rest_breaks_nothing() {
        let (mut b, x) = pair(1.0);
        assert_eq!(apply_breaking(&mut b, &x, 2.0), 0);
        assert_eq!(b.alive_springs(), 1);
    }

    #[test]
    fn tension_at_break_threshold_equals_f_max() {
        // K * (2r - r) = F_max for every spring by construction.
        let cloud = CellCloud {
            positions: vec![
                [0.0, 0.0, 0.0],
                [0.013, 0.004, 0.0],
                [0.02, 0.021, 0.0],
                [0.005, 0.03, 0.0],
            ],
            dim: 2,
            source: "test".into(),
        };
        let f_max = 0.37;
        let b = build_connectivity(&cloud, 0.05, f_max, 0.01);
        assert!(!b.springs.is_empty());
        for sp in &b.springs {
            assert!((sp.stiffness * (2.0 * sp.rest - sp.rest) - f_max).abs() < 1e-12);
        }
    }

    #[test]
    fn advection_examples() {
        let mut x = vec![[0.5, 0.5, 0.0]];
        let u = vec![[0.0, 0.0, 0.0]];
        advect_nodes(&mut x, &u, 0.1, 1.0, 2);
        assert_eq!(x[0], [0.5, 0.5, 0.0]);

        let u = vec![[1.0, 0.0, 0.0]];
        advect_nodes(&mut x, &u, 0.1, 1.0, 2);
        assert!((x[0][0] - 0.6).abs() < 1e-15);

        // Two half steps equal one full step for constant velocity.
        let mut a = vec![[0.2, 0.3, 0.0]];
        let mut b = a.clone();
        advect_nodes(&mut a, &u, 0.1, 0.05, 2);
        advect_nodes(&mut b, &u, 0.05, 0.05, 2);
        advect_nodes(&mut b, &u, 0.05, 0.05, 2);
        assert!((a[0][0] - b[0][0]).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn momentum_neutrality(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 12;
            let positions: Vec<[f64;3]> = (0..n)
                .map(|_| [rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1), 0.0])
                .collect();
            let cloud = CellCloud { positions: positions.clone(), dim: 2, source: "p".into() };
            let b = build_connectivity(&cloud, 0.04, 1.0, 0.01);
            // Perturb and measure the total force.
            let x: Vec<[f64;3]> = positions
                .iter()
                .map(|p| [p[0] + rng.gen_range(-0.005..0.005), p[1] + rng.gen_range(-0.005..0.005), 0.0])
                .collect();
            if let Ok(f) = compute_forces(&b, &x) {
                let sum: [f64; 2] = f.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
                prop_assert!(sum[0].abs() < 1e-12 && sum[1].abs() < 1e-12);
            }
        }

        #[test]
        fn breaking_is_monotone(stretch in 1.0f64..3.0) {
            let (mut b, _) = pair(1.0);
            let before = b.alive_springs();
            let x = vec![[0.0,0.0,0.0],[stretch,0.0,0.0]];
            apply_breaking(&mut b, &x, 2.0);
            prop_assert!(b.alive_springs() <= before);
        }
    }
}
