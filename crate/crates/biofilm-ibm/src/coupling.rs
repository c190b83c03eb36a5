//! Lagrangian-Eulerian transfer: force, density, and viscosity spreading
//! with the cell-radius-scaled delta, and velocity interpolation with the
//! mesh-width-scaled delta.

use crate::fields::{Grid, ScalarField, VectorField};
use crate::kernels::{DeltaKernel, Phi};

/// Transfer parameters shared by the spreading and interpolation passes.
#[derive(Debug, Clone)]
pub struct CouplingConfig {
    /// Spreading support scale (nondimensional cell radius).
    pub omega: f64,
    pub kernel: Phi,
    /// Average volume-element edge of the Lagrangian nodes.
    pub d0: f64,
    /// Additional nondimensional biofilm density (rho_b / rho_0).
    pub rho_b: f64,
    /// Nondimensional viscosity at a node and far from all nodes.
    pub mu_max: f64,
    pub mu_out: f64,
}

/// Visits lattice points inside the support cube of a kernel centered at
/// `center`, clipped to the grid.
fn for_support(
    grid: &Grid,
    center: &[f64; 3],
    radius: f64,
    mut f: impl FnMut(usize, usize, usize, usize, f64, f64, f64),
) {
    let h = grid.h;
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        if a < grid.dim {
            let l = ((center[a] - radius) / h).ceil().max(0.0) as usize;
            let u = (((center[a] + radius) / h).floor() as isize)
                .min(grid.n[a] as isize - 1)
                .max(-1);
            lo[a] = l;
            hi[a] = if u < 0 { 0 } else { u as usize + 1 };
            if l >= grid.n[a] {
                return;
            }
        } else {
            lo[a] = 0;
            hi[a] = 1;
        }
    }
    for i in lo[0]..hi[0] {
        let dx = i as f64 * h - center[0];
        for j in lo[1]..hi[1] {
            let dy = j as f64 * h - center[1];
            for k in lo[2]..hi[2] {
                let dz = k as f64 * h - center[2];
                f(i, j, k, grid.idx(i, j, k), dx, dy, dz);
            }
        }
    }
}

/// Spreads per-node forces onto the grid: f(x) = sum_s F(s) delta(x - X_s).
/// Contributions falling outside the grid are dropped.
pub fn spread_force(
    x: &[[f64; 3]],
    forces: &[[f64; 3]],
    grid: &Grid,
    cfg: &CouplingConfig,
) -> VectorField {
    let kernel = DeltaKernel::new(cfg.kernel, cfg.omega, grid.dim);
    let mut out = VectorField::zeros(grid);
    for (p, fv) in x.iter().zip(forces) {
        for_support(grid, p, 2.0 * cfg.omega, |_, _, _, idx, dx, dy, dz| {
            let w = kernel.eval(&[dx, dy, dz]);
            if w != 0.0 {
                for a in 0..grid.dim {
                    out.comps[a][idx] += fv[a] * w;
                }
            }
        });
    }
    out
}

/// Density field: rho(x) = 1 + sum_s rho_b delta(x - X_s) d0^D.
pub fn spread_density(x: &[[f64; 3]], grid: &Grid, cfg: &CouplingConfig) -> ScalarField {
    let kernel = DeltaKernel::new(cfg.kernel, cfg.omega, grid.dim);
    let weight = cfg.rho_b * cfg.d0.powi(grid.dim as i32);
    let mut out = ScalarField::constant(grid, 1.0);
    if cfg.rho_b == 0.0 {
        return out;
    }
    for p in x {
        for_support(grid, p, 2.0 * cfg.omega, |_, _, _, idx, dx, dy, dz| {
            out.data[idx] += weight * kernel.eval(&[dx, dy, dz]);
        });
    }
    out
}

/// Viscosity field: pointwise maximum over nodes of the calibrated bump
/// (2 omega)^D (mu_max - mu_out) delta + mu_out. The prefactor makes the
/// field reach exactly mu_max when a node sits on a lattice point.
pub fn viscosity_field(x: &[[f64; 3]], grid: &Grid, cfg: &CouplingConfig) -> ScalarField {
    let mut out = ScalarField::constant(grid, cfg.mu_out);
    if cfg.mu_max == cfg.mu_out {
        return out;
    }
    let kernel = DeltaKernel::new(cfg.kernel, cfg.omega, grid.dim);
    let amp = (2.0 * cfg.omega).powi(grid.dim as i32) * (cfg.mu_max - cfg.mu_out);
    for p in x {
        for_support(grid, p, 2.0 * cfg.omega, |_, _, _, idx, dx, dy, dz| {
            let v = amp * kernel.eval(&[dx, dy, dz]) + cfg.mu_out;
            if v > out.data[idx] {
                out.data[idx] = v;
            }
        });
    }
    out
}

/// Interpolates the grid velocity to the nodes with the mesh-width-scaled
/// delta. Near boundaries the truncated weights are renormalized by their
/// partial sum so constants are reproduced.
pub fn interpolate_velocity(
    u: &VectorField,
    x: &[[f64; 3]],
    grid: &Grid,
    kernel_choice: Phi,
) -> Vec<[f64; 3]> {
    let h = grid.h;
    let kernel = DeltaKernel::new(kernel_choice, h, grid.dim);
    let hd = h.powi(grid.dim as i32);
    let mut out = vec![[0.0f64; 3]; x.len()];
    for (s, p) in x.iter().enumerate() {
        let mut acc = [0.0f64; 3];
        let mut wsum = 0.0;
        for_support(grid, p, 2.0 * h, |_, _, _, idx, dx, dy, dz| {
            let w = kernel.eval(&[dx, dy, dz]) * hd;
            if w != 0.0 {
                wsum += w;
                for a in 0..grid.dim {
                    acc[a] += u.comps[a][idx] * w;
                }
            }
        });
        if wsum > 1e-12 {
            for a in 0..grid.dim {
                out[s][a] = acc[a] / wsum;
            }
        }
    }
    out
}

/// Coarse-grid viscosity: restrict, then scale by gamma. The restrictor is
/// whatever intergrid transfer the solver uses.
pub fn coarse_viscosity(
    mu_fine: &ScalarField,
    gamma: f64,
    restrictor: impl Fn(&ScalarField) -> ScalarField,
) -> ScalarField {
    assert!(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
    let mut coarse = restrictor(mu_fine);
    for v in coarse.data.iter_mut() {
        *v *= gamma;
    }
    coarse
}
