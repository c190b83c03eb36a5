//! Implicit momentum systems for the intermediate velocity: assembly of the
//! shifted viscous operators on full-grid lattices and a coupled operator
//! for spatially varying viscosity whose mixed-derivative terms tie the
//! velocity components together.

use crate::coupling;
use crate::fields::{BoundaryKind, Grid, ScalarField};
use crate::multigrid::{
    restrict_full_weighting, Hierarchy, Lattice, MgOperator, PointKind, ScalarStencil,
};
use crate::scenario::Scenario;

/// Marks boundary points of a full-grid lattice: velocity-Dirichlet faces
/// pin, the outflow face copies its inward neighbor.
pub fn classify_velocity_points(grid: &Grid, st: &mut ScalarStencil) {
    let n = grid.n;
    let strides = grid.strides();
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let idx = grid.idx(i, j, k);
                let mut kind = PointKind::Active;
                let mut src = usize::MAX;
                let pos = [i, j, k];
                for a in 0..grid.dim {
                    for (end, face) in [(0usize, grid.boundary[2 * a]), (1, grid.boundary[2 * a + 1])]
                    {
                        let on_face = if end == 0 {
                            pos[a] == 0
                        } else {
                            pos[a] == n[a] - 1
                        };
                        if !on_face {
                            continue;
                        }
                        match face {
                            BoundaryKind::Outflow => {
                                if kind == PointKind::Active {
                                    kind = PointKind::Copied;
                                    src = idx - strides[a];
                                }
                            }
                            _ => {
                                // Any velocity-Dirichlet face wins over a copy.
                                kind = PointKind::Pinned;
                            }
                        }
                    }
                }
                st.kind[idx] = kind;
                if kind == PointKind::Copied {
                    st.copy_src[idx] = src as u32;
                } else if kind != PointKind::Active {
                    st.copy_src[idx] = u32::MAX;
                }
            }
        }
    }
}

/// Scalar momentum stencil for one velocity component with constant or
/// variable face viscosity: shift u - (1/Re) div(mu grad u), with the
/// mixed-term diagonal doubling along `double_axis` when requested.
pub fn momentum_stencil(
    grid: &Grid,
    rho: &ScalarField,
    mu: &ScalarField,
    sigma_over_dt: f64,
    inv_re: f64,
    double_axis: Option<usize>,
) -> ScalarStencil {
    let lat = Lattice::new(grid.dim, grid.n, grid.h);
    let mut st = ScalarStencil::empty(lat);
    for idx in 0..grid.len() {
        st.shift[idx] = sigma_over_dt * rho.data[idx];
    }
    let n = grid.n;
    for a in 0..grid.dim {
        let factor = if double_axis == Some(a) { 2.0 } else { 1.0 };
        let mut m = n;
        m[a] += 1;
        for fi in 0..m[0] {
            for fj in 0..m[1] {
                for fk in 0..m[2] {
                    let f = [fi, fj, fk];
                    if f[a] == 0 || f[a] == n[a] {
                        continue; // end faces unused: boundary points exist
                    }
                    let mut lo = f;
                    lo[a] -= 1;
                    let hi = f;
                    let c = 0.5 * (mu.at(lo[0], lo[1], lo[2]) + mu.at(hi[0], hi[1], hi[2]));
                    let fidx = (fi * m[1] + fj) * m[2] + fk;
                    st.face[a][fidx] = inv_re * factor * c;
                }
            }
        }
    }
    classify_velocity_points(grid, &mut st);
    st.finalize();
    st
}

/// Builds the ladder of grids for a hierarchy: halve while the cell counts
/// divide and the coarsest stays usefully sized.
pub fn grid_ladder(grid: &Grid, max_levels: usize) -> Vec<Grid> {
    let mut grids = vec![grid.clone()];
    while grids.len() < max_levels {
        let g = grids.last().unwrap();
        let divisible = (0..g.dim).all(|a| (g.n[a] - 1) % 2 == 0 && (g.n[a] - 1) / 2 >= 4);
        if !divisible {
            break;
        }
        let mut n = [1usize; 3];
        for a in 0..g.dim {
            n[a] = (g.n[a] - 1) / 2 + 1;
        }
        grids.push(Grid {
            dim: g.dim,
            n,
            h: g.h * 2.0,
            extent: g.extent,
            boundary: g.boundary,
        });
    }
    grids
}

/// Restricted coefficient ladders: plain full weighting for density,
/// gamma-scaled full weighting for viscosity.
pub fn coefficient_ladders(
    grids: &[Grid],
    rho: &ScalarField,
    mu: &ScalarField,
    scenario: &Scenario,
) -> (Vec<ScalarField>, Vec<ScalarField>) {
    let mut rhos = vec![rho.clone()];
    let mut mus = vec![mu.clone()];
    for level in 1..grids.len() {
        let r = restrict_full_weighting(rhos.last().unwrap()).expect("ladder divisibility");
        let m = coupling::coarse_viscosity(mus.last().unwrap(), scenario.gamma_at(level), |f| {
            restrict_full_weighting(f).expect("ladder divisibility")
        });
        rhos.push(r);
        mus.push(m);
    }
    (rhos, mus)
}

/// Scalar Helmholtz hierarchy for one velocity component.
pub fn scalar_momentum_hierarchy(
    grids: &[Grid],
    rhos: &[ScalarField],
    mus: &[ScalarField],
    scenario: &Scenario,
) -> Hierarchy<ScalarStencil> {
    let shift = scenario.sigma / scenario.dt;
    let inv_re = 1.0 / scenario.reynolds;
    let ops: Vec<ScalarStencil> = grids
        .iter()
        .zip(rhos.iter().zip(mus))
        .map(|(g, (r, m))| momentum_stencil(g, r, m, shift, inv_re, None))
        .collect();
    Hierarchy::new(ops, scenario.nu1, scenario.nu2)
}

/// Fully coupled momentum operator: per-component compact stencils plus the
/// explicit wide cross terms of the transposed-gradient viscous part.
pub struct CoupledMomentumOp {
    pub grid: Grid,
    pub comps: Vec<ScalarStencil>,
    pub mu: ScalarField,
    pub inv_re: f64,
    lat: Lattice,
}

impl CoupledMomentumOp {
    pub fn new(grid: &Grid, rho: &ScalarField, mu: &ScalarField, shift: f64, inv_re: f64) -> Self {
        let comps: Vec<ScalarStencil> = (0..grid.dim)
            .map(|k| momentum_stencil(grid, rho, mu, shift, inv_re, Some(k)))
            .collect();
        CoupledMomentumOp {
            grid: grid.clone(),
            comps,
            mu: mu.clone(),
            inv_re,
            lat: Lattice::new(grid.dim, grid.n, grid.h),
        }
    }

    /// Plane sweep with inlined stencils; velocity points on the hull are
    /// pinned or copied, so interior stencils stay in range.
    fn smooth_fast2d(&self, u: &mut [Vec<f64>], b: &[Vec<f64>], sweeps: usize) {
        let [nx, ny, _] = self.grid.n;
        let sx = ny;
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let cross_scale = self.inv_re / (4.0 * self.grid.h * self.grid.h);
        let mu = &self.mu.data;
        for _ in 0..sweeps {
            for color in 0..2 {
                for i in 1..nx - 1 {
                    let j0 = 1 + (i + 1 + color) % 2;
                    let mut idx = i * ny + j0;
                    let mut j = j0;
                    while j < ny - 1 {
                        // Component 0 couples to component 1 through the
                        // y-derivative of its x-derivative and vice versa.
                        for c in 0..2 {
                            let sc = &self.comps[c];
                            if sc.kind[idx] == PointKind::Active {
                                let other = &u[1 - c];
                                let (sa, sk) = if c == 0 { (1, sx) } else { (sx, 1) };
                                let cross = cross_scale
                                    * (mu[idx + sa] * (other[idx + sa + sk] - other[idx + sa - sk])
                                        - mu[idx - sa]
                                            * (other[idx - sa + sk] - other[idx - sa - sk]));
                                let fx = &sc.face[0];
                                let fy = &sc.face[1];
                                let fy_row = i * (ny + 1) + j;
                                let flux = fx[idx] * u[c][idx - sx]
                                    + fx[idx + sx] * u[c][idx + sx]
                                    + fy[fy_row] * u[c][idx - 1]
                                    + fy[fy_row + 1] * u[c][idx + 1];
                                u[c][idx] =
                                    (b[c][idx] + cross + flux * inv_h2) / sc.diag_at(idx);
                            }
                        }
                        idx += 2;
                        j += 2;
                    }
                }
            }
            for (c, sc) in self.comps.iter().enumerate() {
                sc.refresh_copies(&mut u[c]);
            }
        }
    }

    /// Mixed viscous term for component k at an interior point: the wide
    /// centered cross derivatives with nodal viscosity. Contributes
    /// negatively to the operator (it is part of the diffusion).
    #[inline]
    fn cross_term(&self, u: &[Vec<f64>], k: usize, idx: usize, st: &[usize; 3]) -> f64 {
        let four_h2 = 4.0 * self.grid.h * self.grid.h;
        let sk = st[k];
        let mut acc = 0.0;
        for a in 0..self.grid.dim {
            if a == k {
                continue;
            }
            let sa = st[a];
            let ua = &u[a];
            acc += self.mu.data[idx + sa] * (ua[idx + sa + sk] - ua[idx + sa - sk])
                - self.mu.data[idx - sa] * (ua[idx - sa + sk] - ua[idx - sa - sk]);
        }
        self.inv_re * acc / four_h2
    }
}

impl MgOperator for CoupledMomentumOp {
    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn ncomp(&self) -> usize {
        self.grid.dim
    }

    fn smooth(&self, u: &mut [Vec<f64>], b: &[Vec<f64>], sweeps: usize) {
        if self.grid.dim == 2 {
            return self.smooth_fast2d(u, b, sweeps);
        }
        let st = self.grid.strides();
        let n = self.grid.n;
        for _ in 0..sweeps {
            for color in 0..2 {
                for i in 0..n[0] {
                    for j in 0..n[1] {
                        for k in 0..n[2] {
                            if (i + j + k) % 2 != color {
                                continue;
                            }
                            let idx = self.grid.idx(i, j, k);
                            for c in 0..self.comps.len() {
                                let sc = &self.comps[c];
                                if sc.kind[idx] != PointKind::Active {
                                    continue;
                                }
                                let cross = self.cross_term(u, c, idx, &st);
                                let rhs =
                                    b[c][idx] + cross + sc.neighbor_flux_at(&u[c], i, j, k, idx);
                                u[c][idx] = rhs / sc.diag_at(idx);
                            }
                        }
                    }
                }
            }
            for (c, sc) in self.comps.iter().enumerate() {
                sc.refresh_copies(&mut u[c]);
            }
        }
    }

    fn residual(&self, u: &[Vec<f64>], b: &[Vec<f64>], r: &mut [Vec<f64>]) {
        let st = self.grid.strides();
        let n = self.grid.n;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = self.grid.idx(i, j, k);
                    for c in 0..self.comps.len() {
                        let sc = &self.comps[c];
                        r[c][idx] = if sc.kind[idx] == PointKind::Active {
                            b[c][idx] + self.cross_term(u, c, idx, &st)
                                + sc.neighbor_flux_at(&u[c], i, j, k, idx)
                                - sc.diag_at(idx) * u[c][idx]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
    }

    fn refresh_ghosts(&self, u: &mut [Vec<f64>]) {
        for (c, sc) in self.comps.iter().enumerate() {
            sc.refresh_copies(&mut u[c]);
        }
    }

    fn active_points(&self) -> usize {
        self.comps[0].active_points() * self.comps.len()
    }

    fn is_active(&self, idx: usize) -> bool {
        self.comps[0].kind[idx] == PointKind::Active
    }

    fn op_scale(&self) -> f64 {
        self.comps.iter().map(|c| c.op_scale()).fold(0.0, f64::max)
    }
}

/// Coupled hierarchy for the variable-viscosity momentum system.
pub fn coupled_momentum_hierarchy(
    grids: &[Grid],
    rhos: &[ScalarField],
    mus: &[ScalarField],
    scenario: &Scenario,
) -> Hierarchy<CoupledMomentumOp> {
    let shift = scenario.sigma / scenario.dt;
    let inv_re = 1.0 / scenario.reynolds;
    let ops: Vec<CoupledMomentumOp> = grids
        .iter()
        .zip(rhos.iter().zip(mus))
        .map(|(g, (r, m))| CoupledMomentumOp::new(g, r, m, shift, inv_re))
        .collect();
    Hierarchy::new(ops, scenario.nu1, scenario.nu2)
}
